//! Fishing games between several players sharing one population. Each
//! player's payoff is `⨍ α_i θ` with `θ` the steady state for `Σ α_j`.
//! Equilibria are sought by sequential best responses.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::elliptic::{solve_steady, LogisticProblem, SteadyOptions};
use crate::error::{Error, Result};
use crate::grid::{fmt_sci, sum_fields, write_csv_columns, Field};
use crate::harvest::{
    optimize_single, ConstraintMode, OptimizeOptions, OptimizeReport, StartKind,
    StrategyConstraints,
};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct GameOptions<T: Real = f64> {
    /// Stop once every player's update moves less than this in `L²`.
    pub tol: T,
    pub max_rounds: usize,
    /// Relaxation `ω ∈ (0, 1]`: `α_i ← ω·BR + (1 - ω)·α_i`.
    pub relaxation: T,
    /// Best responses during the sweep also try the constant and bang-bang
    /// starts, not only the current strategy.
    pub multistart_responses: bool,
    /// Inner optimiser settings. Its `starts` are replaced as described
    /// above.
    pub optimize: OptimizeOptions<T>,
}

impl<T: Real> Default for GameOptions<T> {
    fn default() -> Self {
        GameOptions {
            tol: T::floor_tol(1e-6),
            max_rounds: 200,
            relaxation: T::one(),
            multistart_responses: false,
            optimize: OptimizeOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GameSpec<T: Real = f64> {
    pub problem: LogisticProblem<T>,
    pub players: Vec<StrategyConstraints<T>>,
    pub options: GameOptions<T>,
}

impl<T: Real> GameSpec<T> {
    /// Requires at least one player and `Σ V0_i < K0`.
    pub fn new(
        problem: LogisticProblem<T>,
        players: Vec<StrategyConstraints<T>>,
        options: GameOptions<T>,
    ) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::InvalidParameter("a game needs at least one player".into()));
        }
        for c in &players {
            c.validate()?;
        }
        let budget: T = players.iter().map(|c| c.v0).sum();
        if !(budget < problem.k0()) {
            return Err(Error::Inadmissible {
                mean_alpha: budget.as_f64(),
                mean_k: problem.k0().as_f64(),
            });
        }
        if !(options.relaxation > T::zero() && options.relaxation <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "relaxation must lie in (0, 1], got {}",
                options.relaxation
            )));
        }
        Ok(GameSpec {
            problem,
            players,
            options,
        })
    }

    /// `n` identical players.
    pub fn symmetric(
        problem: LogisticProblem<T>,
        n: usize,
        constraints: StrategyConstraints<T>,
        options: GameOptions<T>,
    ) -> Result<Self> {
        Self::new(problem, vec![constraints; n], options)
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// `α_i ≡ V0_i` for every player.
    pub fn constant_starts(&self) -> Vec<Field<T>> {
        self.players
            .iter()
            .map(|c| Field::constant(self.problem.grid(), c.v0))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NashReport<T: Real = f64> {
    pub strategies: Vec<Field<T>>,
    /// `⨍ α_i θ` against the joint state.
    pub payoffs: Vec<T>,
    pub total_harvest: T,
    pub theta: Field<T>,
    pub rounds: usize,
    pub converged: bool,
    /// Largest `L²` move of any player in the last round.
    pub last_step: T,
    /// Largest payoff gain any player finds by deviating alone.
    pub eps_nash_certificate: T,
}

impl<T: Real> NashReport<T> {
    /// Columns `x[,y],alpha_1,…,alpha_n,theta`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let names: Vec<String> = (1..=self.strategies.len())
            .map(|i| format!("alpha_{i}"))
            .chain(std::iter::once("theta".to_string()))
            .collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut cols: Vec<&Field<T>> = self.strategies.iter().collect();
        cols.push(&self.theta);
        write_csv_columns(out, self.theta.grid(), &names, &cols)
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "key,value")?;
        writeln!(out, "total_harvest,{}", fmt_sci(self.total_harvest.as_f64()))?;
        for (i, p) in self.payoffs.iter().enumerate() {
            writeln!(out, "payoff_{},{}", i + 1, fmt_sci(p.as_f64()))?;
        }
        writeln!(out, "rounds,{}", self.rounds)?;
        writeln!(out, "converged,{}", self.converged)?;
        writeln!(out, "last_step,{}", fmt_sci(self.last_step.as_f64()))?;
        writeln!(
            out,
            "eps_certificate,{}",
            fmt_sci(self.eps_nash_certificate.as_f64())
        )
    }
}

/// Steady state for the summed strategy `Σ α_i`.
pub fn joint_state<T: Real>(
    problem: &LogisticProblem<T>,
    strategies: &[Field<T>],
    opts: &SteadyOptions<T>,
) -> Result<Field<T>> {
    let total = sum_fields(strategies).unwrap_or_else(|| Field::zeros(problem.grid()));
    if total.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(solve_steady(problem, &total, opts)?.solution)
}

/// Optimal reply to fixed opponents: the single-player problem with
/// resources `K - Σ others`.
pub fn best_response<T: Real>(
    problem: &LogisticProblem<T>,
    others: &[Field<T>],
    c: &StrategyConstraints<T>,
    opts: &OptimizeOptions<T>,
) -> Result<OptimizeReport<T>> {
    let reduced = match sum_fields(others) {
        Some(s) => {
            if s.grid() != problem.grid() {
                return Err(Error::GridMismatch);
            }
            problem.with_resources(problem.resources() - &s)?
        }
        None => problem.clone(),
    };
    optimize_single(&reduced, c, opts)
}

fn others_of<T: Real>(strategies: &[Field<T>], i: usize) -> Vec<Field<T>> {
    strategies
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, f)| f.clone())
        .collect()
}

fn response_options<T: Real>(
    base: &OptimizeOptions<T>,
    current: &Field<T>,
    multistart: bool,
) -> OptimizeOptions<T> {
    let mut starts = vec![StartKind::Given(current.clone())];
    if multistart {
        starts.extend(StartKind::default_starts());
    }
    OptimizeOptions {
        starts,
        ..base.clone()
    }
}

/// Gauss-Seidel best-response iteration: players respond one after the
/// other within a round, each seeing the latest strategies of the rest.
pub fn nash_fixed_point<T: Real>(spec: &GameSpec<T>, initial: &[Field<T>]) -> Result<NashReport<T>> {
    let n = spec.n_players();
    if initial.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} initial strategies for {n} players",
            initial.len()
        )));
    }
    let opts = &spec.options;
    let mut strategies = initial
        .iter()
        .zip(&spec.players)
        .map(|(a, c)| crate::harvest::project(a, c))
        .collect::<Result<Vec<_>>>()?;
    let mut rounds = 0;
    let mut converged = false;
    let mut last_step = T::infinity();
    while rounds < opts.max_rounds {
        rounds += 1;
        let mut max_step = T::zero();
        for i in 0..n {
            let others = others_of(&strategies, i);
            let ropts = response_options(&opts.optimize, &strategies[i], opts.multistart_responses);
            let br = best_response(&spec.problem, &others, &spec.players[i], &ropts)
                .map_err(|e| e.in_stage(format!("round {rounds}, player {}", i + 1)))?;
            let w = opts.relaxation;
            let next = br
                .alpha_star
                .zip_map(&strategies[i], |b, a| w * b + (T::one() - w) * a);
            max_step = max_step.max((&next - &strategies[i]).l2_norm());
            strategies[i] = next;
        }
        last_step = max_step;
        log::debug!("round {rounds}: largest move {max_step:e}");
        if max_step <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("best-response iteration not converged after {rounds} rounds (last move {last_step:e})");
    }
    let theta = joint_state(&spec.problem, &strategies, &opts.optimize.steady)?;
    let payoffs: Vec<T> = strategies.iter().map(|a| a.inner(&theta)).collect();
    let total_harvest = payoffs.iter().copied().sum();
    let eps_nash_certificate = eps_nash_check(spec, &strategies)?;
    Ok(NashReport {
        strategies,
        payoffs,
        total_harvest,
        theta,
        rounds,
        converged,
        last_step,
        eps_nash_certificate,
    })
}

/// Largest gain any single player obtains by deviating to a best response
/// (searched from its current strategy and the standard starts).
pub fn eps_nash_check<T: Real>(spec: &GameSpec<T>, strategies: &[Field<T>]) -> Result<T> {
    let opts = &spec.options.optimize;
    let theta = joint_state(&spec.problem, strategies, &opts.steady)?;
    let mut eps = T::zero();
    for (i, c) in spec.players.iter().enumerate() {
        let current = strategies[i].inner(&theta);
        let others = others_of(strategies, i);
        let ropts = response_options(opts, &strategies[i], true);
        let br = best_response(&spec.problem, &others, c, &ropts)
            .map_err(|e| e.in_stage(format!("certificate, player {}", i + 1)))?;
        eps = eps.max(br.j_value - current);
    }
    Ok(eps)
}

/// `(equilibrium total harvest, cooperative optimum)`; the cooperative
/// planner controls `Σ α_i` with cap `Σ κ_i` and budget `Σ V0_i`
/// (inequality).
pub fn price_of_anarchy<T: Real>(spec: &GameSpec<T>, nash: &NashReport<T>) -> Result<(T, T)> {
    let kappa: T = spec.players.iter().map(|c| c.kappa).sum();
    let v0: T = spec.players.iter().map(|c| c.v0).sum();
    let c = StrategyConstraints::inequality(kappa, v0)?;
    let coop = optimize_single(&spec.problem, &c, &spec.options.optimize)?;
    Ok((nash.total_harvest, coop.j_value))
}

/// `⨍(β - α)θ_{α,β} - ⨍(γ - η)θ_{γ,η}`; a potential function would force
/// this to vanish for every quadruple.
pub fn potential_condition_gap<T: Real>(
    problem: &LogisticProblem<T>,
    [alpha, beta, gamma, eta]: [&Field<T>; 4],
    opts: &SteadyOptions<T>,
) -> Result<T> {
    let left = pair_value(problem, alpha, beta, opts)?;
    let right = pair_value(problem, eta, gamma, opts)?;
    Ok(left - right)
}

/// `⨍(β - α)θ_{α,β}`.
fn pair_value<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    beta: &Field<T>,
    opts: &SteadyOptions<T>,
) -> Result<T> {
    let theta = joint_state(problem, &[alpha.clone(), beta.clone()], opts)?;
    Ok((beta - alpha).inner(&theta))
}

/// The two sides of the potential condition on `(0, 1)`:
/// `⨍(β - α)θ_{α,β}` for `α = β ≡ V0`, and `⨍(γ - η)θ_{γ,η}` for
/// `γ = 𝟙(0, V0)`, `η = 𝟙(1 - V0, 1)`.
pub fn potential_game_counterexample<T: Real>(
    problem: &LogisticProblem<T>,
    v0: T,
    opts: &SteadyOptions<T>,
) -> Result<(T, T)> {
    let g = problem.grid();
    if g.dim() != 1 {
        return Err(Error::InvalidParameter(
            "the counterexample is posed on an interval".into(),
        ));
    }
    let ax = g.axis(0);
    let width = ax.length() * v0;
    let constant = Field::constant(g, v0);
    let gamma = Field::indicator_interval(g, ax.lower, ax.lower + width, T::one());
    let eta = Field::indicator_interval(g, ax.upper - width, ax.upper, T::one());
    let first = pair_value(problem, &constant, &constant, opts)?;
    let second = pair_value(problem, &eta, &gamma, opts)?;
    Ok((first, second))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T: Real = f64> {
    pub v0: T,
    pub total_harvest: T,
    pub rounds: usize,
    pub converged: bool,
    pub eps_certificate: T,
}

/// Symmetric `n`-player games over a list of budgets, each from constant
/// starts. Budgets with `n·V0 >= K0` or failed runs are reported as
/// non-converged rows with NaN harvest. Runs execute on the rayon pool.
pub fn regulation_sweep<T: Real>(
    problem: &LogisticProblem<T>,
    n_players: usize,
    v0_list: &[T],
    kappa: T,
    mode: ConstraintMode,
    options: &GameOptions<T>,
) -> Vec<SweepRow<T>> {
    v0_list
        .par_iter()
        .map(|&v0| {
            let failed = SweepRow {
                v0,
                total_harvest: T::nan(),
                rounds: 0,
                converged: false,
                eps_certificate: T::nan(),
            };
            let run = || -> Result<NashReport<T>> {
                let c = StrategyConstraints::new(kappa, v0, mode)?;
                let spec = GameSpec::symmetric(problem.clone(), n_players, c, options.clone())?;
                nash_fixed_point(&spec, &spec.constant_starts())
            };
            match run() {
                Ok(r) => SweepRow {
                    v0,
                    total_harvest: r.total_harvest,
                    rounds: r.rounds,
                    converged: r.converged,
                    eps_certificate: r.eps_nash_certificate,
                },
                Err(e) => {
                    log::warn!("sweep entry V0 = {v0}: {e}");
                    failed
                }
            }
        })
        .collect()
}

/// Sweep table as CSV: `V0,total_harvest,rounds,converged,eps_certificate`.
pub fn write_sweep_csv<T: Real, W: Write>(mut out: W, rows: &[SweepRow<T>]) -> io::Result<()> {
    writeln!(out, "V0,total_harvest,rounds,converged,eps_certificate")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sci(r.v0.as_f64()),
            fmt_sci(r.total_harvest.as_f64()),
            r.rounds,
            r.converged,
            fmt_sci(r.eps_certificate.as_f64())
        )?;
    }
    Ok(())
}
