//! Named field presets: `name` or `name:p1,p2,...`.
//!
//! | preset | parameters | field |
//! |---|---|---|
//! | `constant` | `c` | `c` |
//! | `cosine` | `[mean,] amplitude` | `mean + a cos(πx̂)` (times `cos(πŷ)` in 2D) |
//! | `decreasing-linear` | `[mean]` | `2 mean (1 - x̂)` |
//! | `random-fourier` | `[seed, modes, amplitude]` | random cosine series, clipped to `[0, 1]` with the requested mean |
//! | `indicator` | `a, b, value` | `value` on `a <= x <= b` |
//! | `gaussian` | `center, width` (2D: `cx, cy, width`) | normalised bump |
//! | `csv` | path | last column of a CSV, one row per node |
//!
//! `x̂` is the coordinate rescaled to `[0, 1]`. A missing mean falls back to
//! the configured `K0`, a missing seed to the run seed.

use std::fs;
use std::path::Path;

use fishgame::{Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldPreset {
    Constant(f64),
    Cosine { mean: Option<f64>, amplitude: f64 },
    DecreasingLinear { mean: Option<f64> },
    RandomFourier {
        seed: Option<u64>,
        modes: usize,
        amplitude: f64,
    },
    Indicator { a: f64, b: f64, value: f64 },
    Gaussian { center: Vec<f64>, width: f64 },
    Csv(String),
}

/// Fallbacks for parameters a preset leaves out.
#[derive(Clone, Debug)]
pub struct PresetContext<'a> {
    pub mean: f64,
    pub seed: u64,
    pub base_dir: &'a Path,
}

fn numbers(params: &str) -> Result<Vec<f64>, String> {
    if params.trim().is_empty() {
        return Ok(Vec::new());
    }
    params
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse preset parameter `{}`", p.trim()))
        })
        .collect()
}

impl FieldPreset {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (name, params) = text.split_once(':').unwrap_or((text, ""));
        let name = name.trim();
        if name == "csv" {
            if params.trim().is_empty() {
                return Err("csv preset needs a path".into());
            }
            return Ok(FieldPreset::Csv(params.trim().to_string()));
        }
        let p = numbers(params)?;
        let arity = |lo: usize, hi: usize| {
            if p.len() < lo || p.len() > hi {
                Err(format!(
                    "preset `{name}` takes {lo}..={hi} parameters, got {}",
                    p.len()
                ))
            } else {
                Ok(())
            }
        };
        let preset = match name {
            "constant" => {
                arity(1, 1)?;
                FieldPreset::Constant(p[0])
            }
            "cosine" => {
                arity(1, 2)?;
                match p[..] {
                    [a] => FieldPreset::Cosine {
                        mean: None,
                        amplitude: a,
                    },
                    _ => FieldPreset::Cosine {
                        mean: Some(p[0]),
                        amplitude: p[1],
                    },
                }
            }
            "decreasing-linear" => {
                arity(0, 1)?;
                FieldPreset::DecreasingLinear {
                    mean: p.first().copied(),
                }
            }
            "random-fourier" => {
                arity(0, 3)?;
                let seed = match p.first() {
                    Some(s) if *s < 0.0 || s.fract() != 0.0 => {
                        return Err(format!("seed must be a nonnegative integer, got {s}"))
                    }
                    s => s.map(|s| *s as u64),
                };
                let modes = p.get(1).copied().unwrap_or(5.0);
                if modes < 1.0 || modes.fract() != 0.0 {
                    return Err(format!("mode count must be a positive integer, got {modes}"));
                }
                FieldPreset::RandomFourier {
                    seed,
                    modes: modes as usize,
                    amplitude: p.get(2).copied().unwrap_or(0.3),
                }
            }
            "indicator" => {
                arity(3, 3)?;
                FieldPreset::Indicator {
                    a: p[0],
                    b: p[1],
                    value: p[2],
                }
            }
            "gaussian" => {
                arity(2, 3)?;
                let (center, width) = p.split_at(p.len() - 1);
                if !(width[0] > 0.0) {
                    return Err("gaussian width must be positive".into());
                }
                FieldPreset::Gaussian {
                    center: center.to_vec(),
                    width: width[0],
                }
            }
            other => return Err(format!("unknown preset `{other}`")),
        };
        Ok(preset)
    }

    pub fn build(&self, grid: &Grid, ctx: &PresetContext) -> Result<Field, String> {
        let unit = |p: &[f64], k: usize| {
            let ax = grid.axis(k);
            (p[k] - ax.lower) / ax.length()
        };
        let field = match self {
            FieldPreset::Constant(c) => Field::constant(grid, *c),
            FieldPreset::Cosine { mean, amplitude } => {
                let mean = mean.unwrap_or(ctx.mean);
                Field::from_fn(grid, |p| {
                    let shape: f64 = (0..grid.dim())
                        .map(|k| (std::f64::consts::PI * unit(p, k)).cos())
                        .product();
                    mean + amplitude * shape
                })
            }
            FieldPreset::DecreasingLinear { mean } => {
                let mean = mean.unwrap_or(ctx.mean);
                Field::from_fn(grid, |p| 2.0 * mean * (1.0 - unit(p, 0)))
            }
            FieldPreset::RandomFourier {
                seed,
                modes,
                amplitude,
            } => random_fourier(grid, seed.unwrap_or(ctx.seed), *modes, *amplitude, ctx.mean)?,
            FieldPreset::Indicator { a, b, value } => Field::indicator_interval(grid, *a, *b, *value),
            FieldPreset::Gaussian { center, width } => {
                let dim = grid.dim();
                let center: Vec<f64> = match center.len() {
                    1 => vec![center[0]; dim],
                    n if n == dim => center.clone(),
                    _ => return Err(format!("gaussian needs 1 or {dim} centre coordinates")),
                };
                let raw = Field::from_fn(grid, |p| {
                    let r2: f64 = (0..dim).map(|k| (p[k] - center[k]).powi(2)).sum();
                    (-r2 / (width * width)).exp()
                });
                let mass = raw.integral();
                raw.map(|v| v / mass)
            }
            FieldPreset::Csv(rel) => read_csv_field(grid, &ctx.base_dir.join(rel))?,
        };
        if field.values().iter().any(|v| !v.is_finite()) {
            return Err("preset produced non-finite values".into());
        }
        Ok(field)
    }
}

/// `mean + a S(x)/max|S|` with `S` a cosine series whose coefficients are
/// uniform on `[-1, 1]`, then clipped to `[0, 1]` with a constant shift
/// chosen so the mean stays at `mean`.
pub fn random_fourier(
    grid: &Grid,
    seed: u64,
    modes: usize,
    amplitude: f64,
    mean: f64,
) -> Result<Field, String> {
    if !(0.0..=1.0).contains(&mean) {
        return Err(format!("requested mean {mean} is outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let mut terms: Vec<(usize, usize, f64)> = Vec::new();
    let ky_max = if grid.dim() == 2 { modes } else { 0 };
    for kx in 0..=modes {
        for ky in 0..=ky_max {
            if kx + ky == 0 {
                continue;
            }
            terms.push((kx, ky, rng.gen_range(-1.0..=1.0)));
        }
    }
    let unit = |p: &[f64], k: usize| {
        let ax = grid.axis(k);
        (p[k] - ax.lower) / ax.length()
    };
    let series = Field::from_fn(grid, |p| {
        let y = if grid.dim() == 2 { unit(p, 1) } else { 0.0 };
        terms
            .iter()
            .map(|(kx, ky, c)| c * (pi * *kx as f64 * unit(p, 0)).cos() * (pi * *ky as f64 * y).cos())
            .sum()
    });
    let scale = series.sup_norm();
    let raw = if scale > 0.0 {
        series.map(|s| mean + amplitude * s / scale)
    } else {
        Field::constant(grid, mean)
    };
    // mean of clamp(raw + τ) is continuous and nondecreasing in τ
    let clipped_mean = |tau: f64| raw.map(|v| (v + tau).clamp(0.0, 1.0)).mean();
    let (mut lo, mut hi) = (-1.0 - raw.max(), 1.0 - raw.min());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clipped_mean(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(raw.map(|v| (v + 0.5 * (lo + hi)).clamp(0.0, 1.0)))
}

/// Last column of each data row; a non-numeric first row is a header.
pub fn read_csv_field(grid: &Grid, path: &Path) -> Result<Field, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or("").trim();
        match last.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(format!("{} line {}: cannot parse `{last}`", path.display(), i + 1)),
        }
    }
    Field::new(grid, values).map_err(|e| format!("{}: {e}", path.display()))
}
