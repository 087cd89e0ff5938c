//! One function per experiment. Each reads its keys from the config,
//! runs the library, and writes CSVs through [`Run`].

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fishgame::grid::fmt_sci;
use fishgame::{
    j0_argmax, j0_eval, j1_eval, j1_gradient, mfhg_solve, nash_fixed_point, optimize_single,
    potential_game_counterexample, price_of_anarchy, project, solve_steady, write_csv_columns,
    Agents, ConstraintMode, Field, FrontOptions, GameOptions, GameSpec, Grid, LogisticProblem,
    MfhgSpec, OptimizeOptions, Reaction, StartKind, SteadyOptions, StrategyConstraints,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, StageExt};
use crate::presets::{FieldPreset, PresetContext};

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub converged: bool,
}

/// Output directory plus what has been produced so far.
pub struct Run<'a> {
    pub cfg: &'a Config,
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
}

fn io_err(path: &Path, source: io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `rel` under `dir` and returns the relative name.
fn write_in(
    dir: &Path,
    rel: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<String, CliError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&path, e))?;
    Ok(rel.to_string())
}

impl Run<'_> {
    fn write(
        &mut self,
        rel: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let name = write_in(&self.out, rel, body)?;
        self.outputs.push(name);
        Ok(())
    }

    fn stage(&mut self, name: &str, converged: bool) {
        if !converged {
            log::warn!("stage `{name}` did not converge");
        }
        self.stages.push(StageRecord {
            name: name.to_string(),
            converged,
        });
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

/// Writes `key,value` rows.
fn summary(w: &mut impl Write, rows: &[(&str, String)]) -> io::Result<()> {
    writeln!(w, "key,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

fn sci(x: f64) -> String {
    fmt_sci(x)
}

// ---------------------------------------------------------------- setup --

fn grid(cfg: &Config) -> Result<Grid, CliError> {
    let dim = cfg.checked("grid", "dim", 1usize, |d| d == 1 || d == 2, "1 or 2")?;
    let nodes = cfg.checked("grid", "nodes", 129usize, |n| n >= 3, ">= 3")?;
    let lower = cfg.get("grid", "lower", 0.0)?;
    let upper = cfg.get("grid", "upper", 1.0)?;
    if !(upper > lower) {
        return Err(cfg.key_error("grid", "upper", "must exceed grid.lower"));
    }
    let g = if dim == 1 {
        Grid::line(lower, upper, nodes)
    } else {
        Grid::rect([lower; 2], [upper; 2], [nodes; 2])
    };
    g.stage("grid")
}

fn field(
    run: &Run,
    grid: &Grid,
    section: &str,
    key: &str,
    default: &str,
    mean: f64,
) -> Result<Field, CliError> {
    let cfg = run.cfg;
    let text = cfg.str_or(section, key, default);
    let preset = FieldPreset::parse(&text).map_err(|e| cfg.key_error(section, key, e))?;
    if let FieldPreset::Csv(rel) = &preset {
        cfg.existing_path(section, key, rel)?;
    }
    let ctx = PresetContext {
        mean,
        seed: run.seed,
        base_dir: cfg.dir(),
    };
    preset.build(grid, &ctx).map_err(|e| cfg.key_error(section, key, e))
}

fn problem(run: &Run, grid: &Grid) -> Result<LogisticProblem, CliError> {
    let cfg = run.cfg;
    let k0 = cfg.checked("problem", "K0", 0.5, |k| k > 0.0 && k <= 1.0, "(0, 1]")?;
    let mu = cfg.checked("problem", "mu", 1.0, |m| m > 0.0, "> 0")?;
    let k = field(run, grid, "problem", "K", "constant:1", k0)?;
    LogisticProblem::new(k, mu).map_err(|e| cfg.key_error("problem", "K", e))
}

fn steady_options(cfg: &Config) -> Result<SteadyOptions<f64>, CliError> {
    let mut s = SteadyOptions::default();
    s.tol = cfg.checked("solver", "steady_tol", s.tol, |t| t > 0.0, "> 0")?;
    s.max_iter = cfg.checked("solver", "steady_max_iter", s.max_iter, |n| n > 0, "> 0")?;
    Ok(s)
}

fn optimize_options(cfg: &Config) -> Result<OptimizeOptions, CliError> {
    let mut o = OptimizeOptions::default();
    o.tol = cfg.checked("solver", "tol", o.tol, |t| t > 0.0, "> 0")?;
    o.max_iter = cfg.checked("solver", "max_iter", o.max_iter, |n| n > 0, "> 0")?;
    o.parallel = cfg.get("solver", "parallel", o.parallel)?;
    o.steady = steady_options(cfg)?;
    Ok(o)
}

fn game_options(cfg: &Config) -> Result<GameOptions, CliError> {
    let mut g = GameOptions::default();
    g.tol = cfg.checked("game", "tol", g.tol, |t| t > 0.0, "> 0")?;
    g.max_rounds = cfg.checked("game", "max_rounds", g.max_rounds, |n| n > 0, "> 0")?;
    g.relaxation = cfg.checked("game", "relaxation", g.relaxation, |w| w > 0.0 && w <= 1.0, "(0, 1]")?;
    g.multistart_responses = cfg.get("game", "multistart_responses", false)?;
    g.optimize = optimize_options(cfg)?;
    Ok(g)
}

fn mode(cfg: &Config) -> Result<ConstraintMode, CliError> {
    match cfg.str_or("constraints", "mode", "inequality").as_str() {
        "inequality" => Ok(ConstraintMode::Inequality),
        "equality" => Ok(ConstraintMode::Equality),
        other => Err(cfg.key_error(
            "constraints",
            "mode",
            format!("`{other}` is neither `equality` nor `inequality`"),
        )),
    }
}

fn kappa(cfg: &Config) -> Result<f64, CliError> {
    cfg.checked("constraints", "kappa", 1.0, |k| k > 0.0, "> 0")
}

/// Per-player budget when none is configured: halfway between `K0/(n+1)`
/// and `K0/n`, so that for constant resources the symmetric equilibrium
/// `K/(n+1)` is interior to the budget.
fn default_budget(k0: f64, n: usize) -> f64 {
    let n = n as f64;
    0.5 * k0 * (1.0 / (n + 1.0) + 1.0 / n)
}

fn constraints(cfg: &Config, v0: f64) -> Result<StrategyConstraints, CliError> {
    StrategyConstraints::new(kappa(cfg)?, v0, mode(cfg)?)
        .map_err(|e| cfg.key_error("constraints", "v0", e))
}

fn single_v0(cfg: &Config, default: f64) -> Result<f64, CliError> {
    match cfg.list("constraints", "v0")? {
        None => Ok(default),
        Some(v) if v.len() == 1 => Ok(v[0]),
        Some(_) => Err(cfg.key_error("constraints", "v0", "expected a single budget")),
    }
}

// ---------------------------------------------------------- experiments --

pub fn dispatch(run: &mut Run) -> Result<(), CliError> {
    match run.cfg.experiment().as_str() {
        "steady" => steady(run),
        "optimize" => optimize(run),
        "nash" => nash(run),
        "sweep" => sweep(run),
        "asymptotic" => asymptotic(run),
        "mfhg" => mfhg(run),
        "wave" => wave(run),
        "potential-check" => potential_check(run),
        other => unreachable!("experiment `{other}` passed validation"),
    }
}

fn steady(run: &mut Run) -> Result<(), CliError> {
    let g = grid(run.cfg)?;
    let p = problem(run, &g)?;
    let alpha = field(run, &g, "problem", "alpha", "constant:0", 0.0)?;
    let report = solve_steady(&p, &alpha, &steady_options(run.cfg)?).stage("steady state")?;
    let theta = &report.solution;
    run.write("theta.csv", |w| {
        write_csv_columns(w, &g, &["K", "alpha", "theta"], &[p.resources(), &alpha, theta])
    })?;
    let harvest = alpha.inner(theta);
    let rows = [
        ("iterations", report.iterations.to_string()),
        ("final_residual", sci(report.final_residual)),
        ("converged", report.converged.to_string()),
        ("positive", report.positive.to_string()),
        ("mean_theta", sci(theta.mean())),
        ("harvest", sci(harvest)),
    ];
    run.write("summary.csv", |w| summary(w, &rows))?;
    run.stage("steady state", report.converged);
    run.say(format!("mean_theta = {}", sci(theta.mean())));
    Ok(())
}

fn optimize(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let p = problem(run, &g)?;
    let c = constraints(cfg, single_v0(cfg, 0.1)?)?;
    let report = optimize_single(&p, &c, &optimize_options(cfg)?).stage("optimisation")?;
    run.write("optimal.csv", |w| report.write_csv(w))?;
    run.write("summary.csv", |w| report.write_summary(w))?;
    run.write("local_optima.csv", |w| {
        writeln!(w, "start,J,converged")?;
        for alt in &report.alternatives {
            writeln!(w, "{},{},{}", alt.start, sci(alt.j_value), alt.converged)?;
        }
        Ok(())
    })?;
    run.stage("optimisation", report.converged);
    run.say(format!("J = {}", sci(report.j_value)));
    Ok(())
}

/// Budgets from `constraints.v0`: one per player, or one shared value.
fn game_spec(run: &Run, g: &Grid, n_default: Option<usize>) -> Result<GameSpec, CliError> {
    let cfg = run.cfg;
    let p = problem(run, g)?;
    let listed = cfg.list("constraints", "v0")?;
    let n = match (&listed, n_default) {
        (_, Some(n)) => n,
        (Some(v), None) if v.len() > 1 => {
            if cfg.has("game", "players") && cfg.get("game", "players", 0usize)? != v.len() {
                return Err(cfg.key_error("game", "players", "disagrees with the number of budgets"));
            }
            v.len()
        }
        _ => cfg.checked("game", "players", 2usize, |n| n >= 1, ">= 1")?,
    };
    let budgets = match listed {
        Some(v) if v.len() == n => v,
        Some(v) if v.len() == 1 => vec![v[0]; n],
        Some(_) => return Err(cfg.key_error("constraints", "v0", "needs one budget or one per player")),
        None => vec![default_budget(p.k0(), n); n],
    };
    let players = budgets
        .into_iter()
        .map(|v0| constraints(cfg, v0))
        .collect::<Result<Vec<_>, _>>()?;
    GameSpec::new(p, players, game_options(cfg)?).map_err(|e| cfg.key_error("constraints", "v0", e))
}

fn initial_strategies(run: &Run, spec: &GameSpec, seed: u64) -> Result<Vec<Field>, CliError> {
    let cfg = run.cfg;
    let g = spec.problem.grid();
    match cfg.str_or("game", "start", "constant").as_str() {
        "constant" => Ok(spec.constant_starts()),
        "bang-bang" => spec
            .players
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let kind: StartKind = if i % 2 == 0 {
                    StartKind::BangBangLeft
                } else {
                    StartKind::BangBangRight
                };
                kind.build(g, c).stage("initial strategies")
            })
            .collect(),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            spec.players
                .iter()
                .map(|c| {
                    let raw = Field::new(g, (0..g.len()).map(|_| rng.gen_range(0.0..c.kappa)).collect())
                        .expect("length matches");
                    project(&raw, c).stage("initial strategies")
                })
                .collect()
        }
        other => Err(cfg.key_error(
            "game",
            "start",
            format!("`{other}` is not one of constant, bang-bang, random"),
        )),
    }
}

fn nash(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let spec = game_spec(run, &g, None)?;
    let init = initial_strategies(run, &spec, run.seed)?;
    let report = nash_fixed_point(&spec, &init).stage("best-response iteration")?;
    run.write("equilibrium.csv", |w| report.write_csv(w))?;
    let mut extra = Vec::new();
    if cfg.get("game", "price_of_anarchy", false)? {
        let (nash_total, coop) = price_of_anarchy(&spec, &report).stage("cooperative optimum")?;
        extra.push(("cooperative_harvest", sci(coop)));
        extra.push(("price_of_anarchy", sci(coop / nash_total)));
    }
    run.write("summary.csv", |w| {
        report.write_summary(&mut *w)?;
        for (k, v) in &extra {
            writeln!(w, "{k},{v}")?;
        }
        Ok(())
    })?;
    run.stage("best-response iteration", report.converged);
    run.say(format!(
        "total_harvest = {} after {} rounds",
        sci(report.total_harvest),
        report.rounds
    ));
    Ok(())
}

#[derive(Clone, Debug)]
struct SweepPoint {
    players: usize,
    v0: f64,
    total: f64,
    rounds: usize,
    converged: bool,
    eps: f64,
}

fn sweep(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let kind = cfg.str_or("sweep", "kind", "regulation");
    let base = problem(run, &g)?;
    let points: Vec<(usize, f64)> = match kind.as_str() {
        "regulation" => {
            let n = cfg.checked("game", "players", 2usize, |n| n >= 1, ">= 1")?;
            let list = cfg
                .list("sweep", "v0_list")?
                .unwrap_or_else(|| (1..=9).map(|i| 0.05 * i as f64).collect());
            list.into_iter().map(|v| (n, v)).collect()
        }
        "players" => {
            let list = cfg
                .list("sweep", "players_list")?
                .unwrap_or_else(|| (1..=8).map(f64::from).collect());
            let fixed = cfg.list("constraints", "v0")?;
            list.into_iter()
                .map(|n| {
                    if n < 1.0 || n.fract() != 0.0 {
                        return Err(cfg.key_error("sweep", "players_list", format!("{n} is not a player count")));
                    }
                    let n = n as usize;
                    let v0 = match &fixed {
                        Some(v) if v.len() == 1 => v[0],
                        Some(_) => return Err(cfg.key_error("constraints", "v0", "expected a single budget")),
                        None => default_budget(base.k0(), n),
                    };
                    Ok((n, v0))
                })
                .collect::<Result<_, _>>()?
        }
        other => {
            return Err(cfg.key_error(
                "sweep",
                "kind",
                format!("`{other}` is neither `regulation` nor `players`"),
            ))
        }
    };
    let options = game_options(cfg)?;
    let kap = kappa(cfg)?;
    let md = mode(cfg)?;
    let out = run.out.clone();
    let results: Vec<(SweepPoint, Vec<String>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(n, v0))| {
            let mut point = SweepPoint {
                players: n,
                v0,
                total: f64::NAN,
                rounds: 0,
                converged: false,
                eps: f64::NAN,
            };
            let attempt = || -> fishgame::Result<_> {
                let c = StrategyConstraints::new(kap, v0, md)?;
                let spec = GameSpec::symmetric(base.clone(), n, c, options.clone())?;
                nash_fixed_point(&spec, &spec.constant_starts())
            };
            let dir = format!("run_{i:03}");
            let mut files = Vec::new();
            match attempt() {
                Ok(r) => {
                    point.total = r.total_harvest;
                    point.rounds = r.rounds;
                    point.converged = r.converged;
                    point.eps = r.eps_nash_certificate;
                    let written = write_in(&out, &format!("{dir}/equilibrium.csv"), |w| r.write_csv(w))
                        .and_then(|a| {
                            write_in(&out, &format!("{dir}/summary.csv"), |w| r.write_summary(w)).map(|b| (a, b))
                        });
                    match written {
                        Ok((a, b)) => files.extend([a, b]),
                        Err(e) => log::error!("{e}"),
                    }
                }
                Err(e) => log::warn!("sweep point players = {n}, V0 = {v0}: {e}"),
            }
            (point, files)
        })
        .collect();
    for (_, files) in &results {
        run.outputs.extend(files.iter().cloned());
    }
    let rows: Vec<SweepPoint> = results.into_iter().map(|(p, _)| p).collect();
    run.write("sweep.csv", |w| {
        writeln!(w, "players,V0,total_harvest,rounds,converged,eps_certificate")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.players,
                sci(r.v0),
                sci(r.total),
                r.rounds,
                r.converged,
                sci(r.eps)
            )?;
        }
        Ok(())
    })?;
    for r in &rows {
        run.stage(&format!("players = {}, V0 = {}", r.players, r.v0), r.converged);
    }
    if let Some(best) = rows
        .iter()
        .filter(|r| r.total.is_finite())
        .max_by(|a, b| a.total.total_cmp(&b.total))
    {
        run.say(format!(
            "largest total harvest {} at players = {}, V0 = {}",
            sci(best.total),
            best.players,
            best.v0
        ));
    }
    Ok(())
}

fn asymptotic(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let p = problem(run, &g)?;
    let k0 = p.k0();
    let c = constraints(cfg, single_v0(cfg, 0.1)?)?;
    let samples = cfg.checked("asymptotic", "samples", 100usize, |s| s >= 2, ">= 2")?;
    let v_star = j0_argmax(k0, &c);
    let mut rows = vec![
        ("K0", sci(k0)),
        ("j0_argmax", sci(v_star)),
        ("j0_max", sci(j0_eval(v_star, k0))),
    ];
    let constant = Field::constant(&g, c.v0);
    let j1 = j1_eval(&g, p.resources(), &constant, c.v0, k0).stage("J1")?;
    let d = j1_gradient(&g, p.resources(), &constant, c.v0, k0).stage("J1 gradient")?;
    let dm = d.mean();
    let projected = d.map(|x| x - dm).l2_norm();
    rows.push(("j1_constant", sci(j1)));
    rows.push(("j1_constant_projected_gradient_norm", sci(projected)));
    if g.dim() == 1 {
        let ax = *g.axis(0);
        let width = ax.length() * c.v0 / c.kappa;
        if width > ax.length() {
            return Err(cfg.key_error("constraints", "v0", "interval indicator does not fit (V0 > kappa)"));
        }
        let span = ax.length() - width;
        let table: Vec<(f64, f64)> = (0..samples)
            .map(|i| {
                let a = ax.lower + span * i as f64 / (samples - 1) as f64;
                let alpha = Field::indicator_interval(&g, a, a + width, c.kappa);
                j1_eval(&g, p.resources(), &alpha, c.v0, k0).map(|j| (a, j))
            })
            .collect::<fishgame::Result<_>>()
            .stage("J1 interval sweep")?;
        run.write("interval_sweep.csv", |w| {
            writeln!(w, "interval_start,J1")?;
            for (a, j) in &table {
                writeln!(w, "{},{}", sci(*a), sci(*j))?;
            }
            Ok(())
        })?;
        let (best, _) = table
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, (_, j))| if *j > acc.1 { (i, *j) } else { acc });
        rows.push(("best_interval_start", sci(table[best].0)));
        rows.push(("right_end_is_best", (best == samples - 1).to_string()));
    }
    run.write("summary.csv", |w| summary(w, &rows))?;
    run.stage("asymptotic functionals", true);
    run.say(format!("J0 argmax = {}", sci(v_star)));
    Ok(())
}

fn reaction(cfg: &Config) -> Result<Reaction, CliError> {
    let text = cfg.str_or("mfhg", "reaction", "monostable:1");
    let (name, param) = text.split_once(':').unwrap_or((&text, ""));
    let bad = |m: String| cfg.key_error("mfhg", "reaction", m);
    let value = |default: f64| -> Result<f64, CliError> {
        if param.trim().is_empty() {
            Ok(default)
        } else {
            param.trim().parse().map_err(|_| bad(format!("cannot parse `{param}`")))
        }
    };
    match name.trim() {
        "monostable" => Ok(Reaction::Monostable { r: value(1.0)? }),
        "bistable" => Ok(Reaction::Bistable { a: value(0.25)? }),
        other => Err(bad(format!("`{other}` is neither `monostable` nor `bistable`"))),
    }
}

fn sign(cfg: &Config, key: &str) -> Result<f64, CliError> {
    cfg.checked("mfhg", key, 1.0, |s| s == 1.0 || s == -1.0, "1 or -1")
}

fn mfhg_spec(run: &Run, g: &Grid, u0_default: &str, m0_default: &str) -> Result<MfhgSpec, CliError> {
    let cfg = run.cfg;
    let u0 = field(run, g, "mfhg", "u0", u0_default, 0.5)?;
    let m_raw = field(run, g, "mfhg", "m0", m0_default, 1.0)?;
    let mass = m_raw.integral();
    if !(mass > 0.0) {
        return Err(cfg.key_error("mfhg", "m0", "agent density has no mass"));
    }
    let m0 = m_raw.map(|v| v / mass);
    let horizon = cfg.checked("mfhg", "horizon", 1.0, |t| t > 0.0, "> 0")?;
    let steps = cfg.checked("mfhg", "steps", 100usize, |s| s > 0, "> 0")?;
    let mut spec = MfhgSpec::new(g, horizon, steps, u0, m0).map_err(|e| cfg.key_error("mfhg", "u0", e))?;
    spec.nu = cfg.checked("mfhg", "nu", 1.0, |v| v > 0.0, "> 0")?;
    spec.mu = cfg.checked("mfhg", "mu", 1.0, |v| v > 0.0, "> 0")?;
    spec.reaction = reaction(cfg)?;
    spec.drift_sign = sign(cfg, "drift_sign")?;
    spec.hjb_sign = sign(cfg, "hjb_sign")?;
    spec.require_invasion = cfg.get("mfhg", "require_invasion", false)?;
    spec.sweep_damping = cfg.checked("mfhg", "damping", 0.5, |w| w > 0.0 && w <= 1.0, "(0, 1]")?;
    spec.sweep_tol = cfg.checked("mfhg", "tol", 1e-6, |t| t > 0.0, "> 0")?;
    spec.max_sweeps = cfg.checked("mfhg", "max_sweeps", 200usize, |s| s > 0, "> 0")?;
    spec.validate().map_err(|e| cfg.key_error("mfhg", "reaction", e))?;
    Ok(spec)
}

fn mfhg(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let spec = mfhg_spec(run, &g, "constant:1", "constant:1")?;
    let stride = cfg.checked("mfhg", "stride", 10usize, |s| s > 0, "> 0")?;
    let state = mfhg_solve(&spec).stage("picard iteration")?;
    run.write("slices.csv", |w| state.write_slices(w, stride))?;
    let drift = state
        .m
        .fields()
        .iter()
        .map(|m| (m.integral() - 1.0).abs())
        .fold(0.0, f64::max);
    let rows = [
        ("sweeps_used", state.sweeps_used.to_string()),
        ("sweep_residual", sci(state.sweep_residual)),
        ("converged", state.converged.to_string()),
        ("max_mass_drift", sci(drift)),
        ("final_fish_mean", sci(state.u.last().mean())),
    ];
    run.write("summary.csv", |w| summary(w, &rows))?;
    run.stage("picard iteration", state.converged);
    run.say(format!(
        "{} sweeps, residual {}",
        state.sweeps_used,
        sci(state.sweep_residual)
    ));
    Ok(())
}

fn wave(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    if g.dim() != 1 {
        return Err(cfg.key_error("grid", "dim", "wave experiments are one-dimensional"));
    }
    let ax = *g.axis(0);
    let u0_default = format!("indicator:{},{},1", ax.lower, ax.lower + 0.1 * ax.length());
    let spec = mfhg_spec(run, &g, &u0_default, "constant:1")?;
    let agents = match cfg.str_or("wave", "agents", "none").as_str() {
        "none" => Agents::None,
        "mfhg" => {
            let state = mfhg_solve(&spec).stage("picard iteration")?;
            run.stage("picard iteration", state.converged);
            Agents::Given(state.m)
        }
        other => {
            return Err(cfg.key_error("wave", "agents", format!("`{other}` is neither `none` nor `mfhg`")))
        }
    };
    let opts = FrontOptions {
        threshold: cfg.checked("wave", "threshold", 0.5, |t| t > 0.0 && t < 1.0, "(0, 1)")?,
        window: cfg.checked("wave", "window", 0.25 * spec.horizon, |w| w > 0.0, "> 0")?,
        stride: cfg.checked("wave", "stride", 1usize, |s| s > 0, "> 0")?,
    };
    let series = fishgame::front_speed(&spec, &agents, &opts).stage("front tracking")?;
    run.write("front.csv", |w| series.write_csv(w))?;
    let speed = series.final_speed();
    let rows = [
        ("final_speed", sci(speed.unwrap_or(f64::NAN))),
        ("samples", series.samples.len().to_string()),
        ("truncated", series.truncated.to_string()),
    ];
    run.write("summary.csv", |w| summary(w, &rows))?;
    run.stage("front tracking", speed.is_some());
    run.say(format!("front speed = {}", sci(speed.unwrap_or(f64::NAN))));
    Ok(())
}

fn potential_check(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = grid(cfg)?;
    let p = problem(run, &g)?;
    let v0 = single_v0(cfg, 1.0 / 3.0)?;
    let (first, second) =
        potential_game_counterexample(&p, v0, &steady_options(cfg)?).stage("potential condition")?;
    let rows = [
        ("symmetric_value", sci(first)),
        ("asymmetric_value", sci(second)),
        ("gap", sci(first - second)),
    ];
    run.write("summary.csv", |w| summary(w, &rows))?;
    run.stage("potential condition", true);
    run.say(format!("symmetric {} vs asymmetric {}", sci(first), sci(second)));
    Ok(())
}
