//! INI-style experiment configuration.
//!
//! ```text
//! experiment = nash
//! seed = 0
//!
//! [grid]
//! nodes = 129
//! ```
//!
//! Top-level keys come before the first section header. `#` and `;` start
//! comments. Keys are checked against [`SCHEMA`] while parsing.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Allowed keys per section; the empty name is the top level.
pub const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["experiment", "seed"]),
    ("grid", &["dim", "nodes", "lower", "upper"]),
    ("problem", &["K", "K0", "mu", "alpha"]),
    ("constraints", &["kappa", "v0", "mode"]),
    (
        "solver",
        &["tol", "max_iter", "steady_tol", "steady_max_iter", "parallel"],
    ),
    (
        "game",
        &[
            "players",
            "start",
            "tol",
            "max_rounds",
            "relaxation",
            "multistart_responses",
            "price_of_anarchy",
        ],
    ),
    ("sweep", &["kind", "v0_list", "players_list"]),
    ("asymptotic", &["samples"]),
    (
        "mfhg",
        &[
            "horizon",
            "steps",
            "nu",
            "mu",
            "reaction",
            "u0",
            "m0",
            "drift_sign",
            "hjb_sign",
            "require_invasion",
            "damping",
            "tol",
            "max_sweeps",
            "stride",
        ],
    ),
    ("wave", &["threshold", "window", "stride", "agents"]),
];

pub const EXPERIMENTS: &[&str] = &[
    "steady",
    "optimize",
    "nash",
    "sweep",
    "asymptotic",
    "mfhg",
    "wave",
    "potential-check",
];

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Clone, Debug)]
pub struct Config {
    entries: BTreeMap<(String, String), Entry>,
    dir: PathBuf,
}

fn err(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Config {
        line,
        msg: msg.into(),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &dir)
    }

    /// `dir` resolves relative file paths.
    pub fn parse(text: &str, dir: &Path) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split(['#', ';']).next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) || name.is_empty() {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let allowed = SCHEMA
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| *keys)
                .unwrap_or(&[]);
            if !allowed.contains(&key) {
                let place = if section.is_empty() {
                    "at the top level".to_string()
                } else {
                    format!("in [{section}]")
                };
                return Err(err(line, format!("unknown key `{key}` {place}")));
            }
            let previous = entries.insert(
                (section.clone(), key.to_string()),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
            if let Some(p) = previous {
                return Err(err(line, format!("key `{key}` repeats line {}", p.line)));
            }
        }
        let cfg = Config {
            entries,
            dir: dir.to_path_buf(),
        };
        let exp = cfg.required_str("", "experiment")?;
        if !EXPERIMENTS.contains(&exp.as_str()) {
            return Err(err(
                cfg.line("", "experiment"),
                format!("unknown experiment `{exp}`; expected one of {}", EXPERIMENTS.join(", ")),
            ));
        }
        Ok(cfg)
    }

    /// Directory relative paths are resolved against.
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn experiment(&self) -> String {
        self.entries[&(String::new(), "experiment".to_string())]
            .value
            .clone()
    }

    /// Sectioned echo of every entry, for the manifest.
    pub fn echo(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for ((s, k), e) in &self.entries {
            let name = if s.is_empty() { "top" } else { s.as_str() };
            out.entry(name.to_string())
                .or_default()
                .insert(k.clone(), e.value.clone());
        }
        out
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    /// Line of an entry, 0 when absent.
    pub fn line(&self, section: &str, key: &str) -> usize {
        self.entry(section, key).map_or(0, |e| e.line)
    }

    pub fn has(&self, section: &str, key: &str) -> bool {
        self.entry(section, key).is_some()
    }

    pub fn key_error(&self, section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
        let name = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        err(self.line(section, key), format!("`{name}`: {msg}"))
    }

    pub fn str_opt(&self, section: &str, key: &str) -> Option<String> {
        self.entry(section, key).map(|e| e.value.clone())
    }

    pub fn required_str(&self, section: &str, key: &str) -> Result<String, CliError> {
        self.str_opt(section, key)
            .ok_or_else(|| err(0, format!("missing required key `{key}`")))
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> String {
        self.str_opt(section, key)
            .unwrap_or_else(|| default.to_string())
    }

    pub fn parse_opt<V: FromStr>(&self, section: &str, key: &str) -> Result<Option<V>, CliError>
    where
        V::Err: std::fmt::Display,
    {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|x| self.key_error(section, key, format!("cannot parse `{}`: {x}", e.value))),
        }
    }

    pub fn get<V: FromStr>(&self, section: &str, key: &str, default: V) -> Result<V, CliError>
    where
        V::Err: std::fmt::Display,
    {
        Ok(self.parse_opt(section, key)?.unwrap_or(default))
    }

    /// Like [`Config::get`] with a range check.
    pub fn checked<V: FromStr + Copy + std::fmt::Display>(
        &self,
        section: &str,
        key: &str,
        default: V,
        ok: impl Fn(V) -> bool,
        range: &str,
    ) -> Result<V, CliError>
    where
        V::Err: std::fmt::Display,
    {
        let v = self.get(section, key, default)?;
        if !ok(v) {
            return Err(self.key_error(section, key, format!("{v} is out of range, expected {range}")));
        }
        Ok(v)
    }

    /// Comma-separated numbers, or `start:stop:step` with an inclusive end.
    pub fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        let bad = |what: &str| self.key_error(section, key, format!("cannot parse `{what}`"));
        let parts: Vec<&str> = e.value.split(':').collect();
        if parts.len() == 3 {
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| p.trim().parse::<f64>().map_err(|_| bad(p)))
                .collect::<Result<_, _>>()?;
            let (start, stop, step) = (nums[0], nums[1], nums[2]);
            if !(step > 0.0) || stop < start {
                return Err(self.key_error(section, key, "range needs start <= stop and step > 0"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            return Ok(Some((0..count).map(|i| start + i as f64 * step).collect()));
        }
        e.value
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(p)))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// A path relative to the config file; it must exist.
    pub fn existing_path(&self, section: &str, key: &str, raw: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(raw);
        if !path.is_file() {
            return Err(self.key_error(section, key, format!("file {} does not exist", path.display())));
        }
        Ok(path)
    }
}
