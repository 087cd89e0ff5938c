//! Single-player fishing: the output `J(α) = ⨍ αθ_α`, its adjoint-based
//! first and second derivatives, projection onto the admissible strategies
//! and projected gradient ascent. Also the large-diffusivity functionals
//! `J⁰` and `J¹`.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::elliptic::{
    solve_linear_reaction, solve_steady, solve_zero_mean_poisson, LogisticProblem, SteadyOptions,
};
use crate::error::{Error, Result};
use crate::grid::{write_csv_columns, Field, Grid};
use crate::linalg::LinearOptions;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintMode {
    /// `⨍α = V0`.
    Equality,
    /// `⨍α <= V0`.
    Inequality,
}

/// `0 <= α <= κ` pointwise together with a volume budget on `⨍α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyConstraints<T: Real = f64> {
    pub kappa: T,
    pub v0: T,
    pub mode: ConstraintMode,
}

impl<T: Real> StrategyConstraints<T> {
    pub fn new(kappa: T, v0: T, mode: ConstraintMode) -> Result<Self> {
        let c = StrategyConstraints { kappa, v0, mode };
        c.validate()?;
        Ok(c)
    }

    pub fn equality(kappa: T, v0: T) -> Result<Self> {
        Self::new(kappa, v0, ConstraintMode::Equality)
    }

    pub fn inequality(kappa: T, v0: T) -> Result<Self> {
        Self::new(kappa, v0, ConstraintMode::Inequality)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > T::zero()) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.v0 > T::zero() && self.v0 <= self.kappa) {
            return Err(Error::Infeasible {
                v0: self.v0.as_f64(),
                kappa: self.kappa.as_f64(),
            });
        }
        Ok(())
    }

    /// The budget must stay below the mean resources.
    pub fn check_against(&self, problem: &LogisticProblem<T>) -> Result<()> {
        self.validate()?;
        if !(self.v0 < problem.k0()) {
            return Err(Error::Inadmissible {
                mean_alpha: self.v0.as_f64(),
                mean_k: problem.k0().as_f64(),
            });
        }
        Ok(())
    }

    /// Checks `0 <= α <= κ` and the volume constraint up to `tol`.
    pub fn is_feasible(&self, alpha: &Field<T>, tol: T) -> bool {
        let m = alpha.mean();
        let volume_ok = match self.mode {
            ConstraintMode::Equality => (m - self.v0).abs() <= tol,
            ConstraintMode::Inequality => m <= self.v0 + tol,
        };
        volume_ok && alpha.min() >= -tol && alpha.max() <= self.kappa + tol
    }
}

/// Solves for `θ_α` and returns it with `J(α) = ⨍ αθ_α`.
pub fn evaluate<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    opts: &SteadyOptions<T>,
) -> Result<(Field<T>, T)> {
    let theta = solve_steady(problem, alpha, opts)?.solution;
    let j = alpha.inner(&theta);
    Ok((theta, j))
}

/// Total fishing output `⨍ αθ_α`.
pub fn fishing_output<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    opts: &SteadyOptions<T>,
) -> Result<T> {
    evaluate(problem, alpha, opts).map(|(_, j)| j)
}

/// Adjoint state: `-μΔp - p(K - α - 2θ) = α`, Neumann.
pub fn adjoint_state<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    theta: &Field<T>,
) -> Result<Field<T>> {
    let potential = linearised_potential(problem, alpha, theta);
    solve_linear_reaction(
        problem.grid(),
        problem.mu(),
        &potential,
        alpha,
        &LinearOptions::default(),
    )
}

fn linearised_potential<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    theta: &Field<T>,
) -> Field<T> {
    let two = T::lit(2.0);
    let k = problem.resources().values();
    let values = k
        .iter()
        .zip(alpha.values())
        .zip(theta.values())
        .map(|((k, a), t)| *k - *a - two * *t)
        .collect();
    Field::from_vec(problem.grid(), values)
}

fn switch_density<T: Real>(p: &Field<T>, theta: &Field<T>) -> Field<T> {
    p.zip_map(theta, |p, t| (T::one() - p) * t)
}

/// Gradient density `(1 - p)θ`: `J'(α)[h] = ⨍ (1 - p)θ h`.
pub fn gateaux_gradient<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    opts: &SteadyOptions<T>,
) -> Result<Field<T>> {
    let (theta, _) = evaluate(problem, alpha, opts)?;
    let p = adjoint_state(problem, alpha, &theta)?;
    Ok(switch_density(&p, &theta))
}

/// `J''(α)[h, h] = 2 ⨍ (1 - p)hθ' - 2 ⨍ pθ'^2`, where
/// `-μΔθ' - θ'(K - α - 2θ) = -hθ`.
pub fn gateaux_second<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    h: &Field<T>,
    opts: &SteadyOptions<T>,
) -> Result<T> {
    if h.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    let (theta, _) = evaluate(problem, alpha, opts)?;
    let p = adjoint_state(problem, alpha, &theta)?;
    let potential = linearised_potential(problem, alpha, &theta);
    let rhs = -&h.hadamard(&theta);
    let theta_dot = solve_linear_reaction(
        problem.grid(),
        problem.mu(),
        &potential,
        &rhs,
        &LinearOptions::default(),
    )?;
    let first = p.zip_map(h, |p, h| (T::one() - p) * h).inner(&theta_dot);
    let second = p.hadamard(&theta_dot).inner(&theta_dot);
    Ok(T::lit(2.0) * (first - second))
}

/// L² projection onto the admissible strategies.
pub fn project<T: Real>(g: &Field<T>, c: &StrategyConstraints<T>) -> Result<Field<T>> {
    project_with_shift(g, c).map(|(alpha, _)| alpha)
}

/// Projection together with the shift `τ` in `α = clamp(g + τ, 0, κ)`
/// (zero when the inequality constraint is inactive).
pub fn project_with_shift<T: Real>(
    g: &Field<T>,
    c: &StrategyConstraints<T>,
) -> Result<(Field<T>, T)> {
    c.validate()?;
    if g.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("projection input"));
    }
    let clamped = g.clamp(T::zero(), c.kappa);
    if c.mode == ConstraintMode::Inequality && clamped.mean() <= c.v0 {
        return Ok((clamped, T::zero()));
    }
    let volume = |tau: T| g.map(|v| (v + tau).max(T::zero()).min(c.kappa)).mean();
    let mut lo = -g.max();
    let mut hi = c.kappa - g.min();
    let tol = T::floor_tol(1e-12);
    while hi - lo > tol * (T::one() + lo.abs().max(hi.abs())) {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if volume(mid) < c.v0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the volume is affine in τ between breakpoints; one secant step on the
    // final bracket removes the bisection error from the mean
    let mut tau = (lo + hi) * T::lit(0.5);
    let free = g.map(|v| {
        let x = v + tau;
        if x > T::zero() && x < c.kappa {
            T::one()
        } else {
            T::zero()
        }
    });
    let slope = free.mean();
    if slope > T::zero() {
        let corrected = tau + (c.v0 - volume(tau)) / slope;
        if corrected >= lo && corrected <= hi {
            tau = corrected;
        }
    }
    Ok((g.map(|v| (v + tau).max(T::zero()).min(c.kappa)), tau))
}

/// Initial strategy of one ascent run.
#[derive(Clone, Debug, PartialEq)]
pub enum StartKind<T: Real = f64> {
    /// `α ≡ V0`.
    Constant,
    /// `κ` times the indicator of a slab at the low end of the first axis.
    BangBangLeft,
    /// Same slab at the high end.
    BangBangRight,
    Given(Field<T>),
}

impl<T: Real> StartKind<T> {
    pub fn default_starts() -> Vec<Self> {
        vec![StartKind::Constant, StartKind::BangBangLeft, StartKind::BangBangRight]
    }

    pub fn build(&self, grid: &Grid<T>, c: &StrategyConstraints<T>) -> Result<Field<T>> {
        let ax = grid.axis(0);
        let width = ax.length() * c.v0 / c.kappa;
        let field = match self {
            StartKind::Constant => Field::constant(grid, c.v0),
            StartKind::BangBangLeft => {
                Field::indicator_interval(grid, ax.lower, ax.lower + width, c.kappa)
            }
            StartKind::BangBangRight => {
                Field::indicator_interval(grid, ax.upper - width, ax.upper, c.kappa)
            }
            StartKind::Given(f) => {
                if f.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                f.clone()
            }
        };
        Ok(field)
    }
}

impl<T: Real> fmt::Display for StartKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StartKind::Constant => f.write_str("constant"),
            StartKind::BangBangLeft => f.write_str("bang-bang-left"),
            StartKind::BangBangRight => f.write_str("bang-bang-right"),
            StartKind::Given(_) => f.write_str("given"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizeOptions<T: Real = f64> {
    /// Stop when `‖α - P(α + g)‖_{L²} <= tol`.
    pub tol: T,
    pub max_iter: usize,
    /// Trial step of the first iteration; later iterations start from the
    /// Barzilai-Borwein step.
    pub initial_step: T,
    pub shrink: T,
    /// Armijo sufficient-increase constant.
    pub armijo: T,
    pub max_backtracks: usize,
    pub starts: Vec<StartKind<T>>,
    /// Run the starts on the rayon pool.
    pub parallel: bool,
    pub steady: SteadyOptions<T>,
}

impl<T: Real> Default for OptimizeOptions<T> {
    fn default() -> Self {
        OptimizeOptions {
            tol: T::floor_tol(1e-7),
            max_iter: 2000,
            initial_step: T::one(),
            shrink: T::lit(0.5),
            armijo: T::lit(1e-4),
            max_backtracks: 50,
            starts: StartKind::default_starts(),
            parallel: true,
            steady: SteadyOptions::default(),
        }
    }
}

/// A local optimum reached from one start.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOptimum<T: Real = f64> {
    pub start: String,
    pub alpha: Field<T>,
    pub j_value: T,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeReport<T: Real = f64> {
    pub alpha_star: Field<T>,
    pub j_value: T,
    pub theta: Field<T>,
    /// `(1 - p)θ` at `α*`.
    pub switch_function: Field<T>,
    pub iterations: usize,
    pub projected_gradient_norm: T,
    /// `⨍α* = V0` within 1e-8.
    pub saturated_volume: bool,
    pub converged: bool,
    /// Distinct optima from the other starts, best first.
    pub alternatives: Vec<LocalOptimum<T>>,
}

impl<T: Real> OptimizeReport<T> {
    /// Columns `x[,y],alpha,theta,switch`.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_csv_columns(
            out,
            self.alpha_star.grid(),
            &["alpha", "theta", "switch"],
            &[
                &self.alpha_star,
                &self.theta,
                &self.switch_function,
            ],
        )
    }

    /// `key,value` summary.
    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "key,value")?;
        writeln!(out, "J,{:.16e}", self.j_value.as_f64())?;
        writeln!(out, "iterations,{}", self.iterations)?;
        writeln!(
            out,
            "projected_gradient_norm,{:.16e}",
            self.projected_gradient_norm.as_f64()
        )?;
        writeln!(out, "saturated_volume,{}", self.saturated_volume)?;
        writeln!(out, "converged,{}", self.converged)?;
        writeln!(out, "local_optima,{}", self.alternatives.len() + 1)
    }
}

/// Multi-start projected gradient ascent of `J` over the admissible set.
pub fn optimize_single<T: Real>(
    problem: &LogisticProblem<T>,
    c: &StrategyConstraints<T>,
    opts: &OptimizeOptions<T>,
) -> Result<OptimizeReport<T>> {
    c.check_against(problem)?;
    if opts.starts.is_empty() {
        return Err(Error::InvalidParameter("no starting strategies".into()));
    }
    let run = |start: &StartKind<T>| -> Result<OptimizeReport<T>> {
        let alpha0 = start.build(problem.grid(), c)?;
        ascend(problem, c, &alpha0, opts)
            .map_err(|e| e.in_stage(format!("ascent from {start} start")))
    };
    let runs: Vec<Result<OptimizeReport<T>>> = if opts.parallel && opts.starts.len() > 1 {
        opts.starts.par_iter().map(run).collect()
    } else {
        opts.starts.iter().map(run).collect()
    };
    let mut done: Vec<(String, OptimizeReport<T>)> = Vec::new();
    let mut first_err = None;
    for (start, r) in opts.starts.iter().zip(runs) {
        match r {
            Ok(rep) => done.push((start.to_string(), rep)),
            Err(e) => {
                log::warn!("{e}");
                first_err.get_or_insert(e);
            }
        }
    }
    if done.is_empty() {
        return Err(first_err.expect("at least one start"));
    }
    // strict improvement needed to displace an earlier start, so ties
    // resolve to the first start in the list
    let mut best = 0;
    for (i, (_, rep)) in done.iter().enumerate().skip(1) {
        let scale = T::one().max(done[best].1.j_value.abs());
        if rep.j_value > done[best].1.j_value + T::lit(1e-12) * scale {
            best = i;
        }
    }
    let (_, mut report) = done.swap_remove(best);
    let mut alternatives: Vec<LocalOptimum<T>> = Vec::new();
    done.sort_by(|a, b| b.1.j_value.partial_cmp(&a.1.j_value).expect("finite J"));
    for (start, rep) in done {
        let distinct = (&rep.alpha_star - &report.alpha_star).l2_norm() > T::lit(1e-4)
            && alternatives
                .iter()
                .all(|o| (&rep.alpha_star - &o.alpha).l2_norm() > T::lit(1e-4));
        if distinct {
            alternatives.push(LocalOptimum {
                start,
                alpha: rep.alpha_star,
                j_value: rep.j_value,
                converged: rep.converged,
            });
        }
    }
    report.alternatives = alternatives;
    Ok(report)
}

/// Single-start ascent from `alpha0` (projected first).
pub fn optimize_from<T: Real>(
    problem: &LogisticProblem<T>,
    c: &StrategyConstraints<T>,
    alpha0: &Field<T>,
    opts: &OptimizeOptions<T>,
) -> Result<OptimizeReport<T>> {
    c.check_against(problem)?;
    ascend(problem, c, alpha0, opts)
}

fn ascend<T: Real>(
    problem: &LogisticProblem<T>,
    c: &StrategyConstraints<T>,
    alpha0: &Field<T>,
    opts: &OptimizeOptions<T>,
) -> Result<OptimizeReport<T>> {
    if alpha0.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    let mut alpha = project(alpha0, c)?;
    let (mut theta, mut j) = evaluate(problem, &alpha, &opts.steady)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut previous: Option<(Field<T>, Field<T>, T)> = None;
    let (switch, pg_norm) = loop {
        let p = adjoint_state(problem, &alpha, &theta)?;
        let g = switch_density(&p, &theta);
        let stationary = project(&(&alpha + &g), c)?;
        let pg_norm = (&alpha - &stationary).l2_norm();
        if pg_norm <= opts.tol {
            converged = true;
            break (g, pg_norm);
        }
        if iterations == opts.max_iter {
            break (g, pg_norm);
        }
        iterations += 1;

        // J is only known to a few ulps; without the slack the search
        // rejects every step once the increase drops below round-off
        let slack = T::epsilon() * T::lit(10.0) * T::one().max(j.abs());
        let mut s = match &previous {
            None => opts.initial_step,
            Some((a_prev, g_prev, s_prev)) => bb_step(&alpha, &g, a_prev, g_prev, *s_prev),
        };
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = project(&(&alpha + &(&g * s)), c)?;
            let increase = g.inner(&(&trial - &alpha));
            match evaluate(problem, &trial, &opts.steady) {
                Ok((th, jt)) if jt >= j + opts.armijo * increase - slack => {
                    accepted = Some((trial, th, jt));
                    break;
                }
                Ok(_) => {}
                Err(e) => log::debug!("line search trial rejected: {e}"),
            }
            s *= opts.shrink;
        }
        match accepted {
            Some((a, th, jt)) => {
                previous = Some((alpha, g.clone(), s));
                alpha = a;
                theta = th;
                j = jt;
            }
            None => {
                log::debug!("line search stalled at J = {j}, pg = {pg_norm}");
                break (g, pg_norm);
            }
        }
    };
    let saturated_volume = (alpha.mean() - c.v0).abs() <= T::floor_tol(1e-8);
    Ok(OptimizeReport {
        alpha_star: alpha,
        j_value: j,
        theta,
        switch_function: switch,
        iterations,
        projected_gradient_norm: pg_norm,
        saturated_volume,
        converged,
        alternatives: Vec::new(),
    })
}

/// Barzilai-Borwein trial step `|Δα|² / -<Δα, Δg>` for an ascent; in
/// directions of positive curvature the previous step is enlarged instead.
fn bb_step<T: Real>(alpha: &Field<T>, g: &Field<T>, a_prev: &Field<T>, g_prev: &Field<T>, s_prev: T) -> T {
    let da = alpha - a_prev;
    let dg = g - g_prev;
    let curvature = da.inner(&dg);
    let (lo, hi) = (T::lit(1e-4), T::lit(1e6));
    if curvature < T::zero() {
        (da.inner(&da) / -curvature).max(lo).min(hi)
    } else {
        (s_prev * T::lit(4.0)).max(lo).min(hi)
    }
}

/// `J⁰(V) = V(K0 - V)`.
pub fn j0_eval<T: Real>(v: T, k0: T) -> T {
    v * (k0 - v)
}

/// Maximiser of `J⁰` over the admissible volumes.
pub fn j0_argmax<T: Real>(k0: T, c: &StrategyConstraints<T>) -> T {
    match c.mode {
        ConstraintMode::Inequality => c.v0.min(k0 * T::lit(0.5)),
        ConstraintMode::Equality => c.v0,
    }
}

fn j1_potential<T: Real>(k: &Field<T>, alpha: &Field<T>, v0: T, k0: T) -> Result<(T, Field<T>)> {
    if k.grid() != alpha.grid() {
        return Err(Error::GridMismatch);
    }
    let m0 = k0 - v0;
    if !(m0 > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "V0 = {v0} must be below K0 = {k0}"
        )));
    }
    let rhs = k.zip_map(alpha, |k, a| m0 * (k - a - m0));
    let v_hat = solve_zero_mean_poisson(k.grid(), &rhs, &LinearOptions::default())?;
    Ok((m0, v_hat))
}

/// `J¹(α) = (2V0 - K0)/M0² ⨍|∇v̂|² + ⨍ K v̂`, where `M0 = K0 - V0` and
/// `-Δv̂ = M0(K - α - M0)`, `⨍v̂ = 0`. Requires `⨍α = V0` and `⨍K = K0`.
pub fn j1_eval<T: Real>(grid: &Grid<T>, k: &Field<T>, alpha: &Field<T>, v0: T, k0: T) -> Result<T> {
    if k.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let (m0, v_hat) = j1_potential(k, alpha, v0, k0)?;
    let a = (T::lit(2.0) * v0 - k0) / (m0 * m0);
    Ok(a * v_hat.dirichlet_energy() + k.inner(&v_hat))
}

/// Gradient density of `J¹` on zero-mean directions:
/// `-M0 (C1 v̂ + q)`, `C1 = 2(2V0 - K0)/M0²`, `-Δq = K - K0`, `⨍q = 0`.
pub fn j1_gradient<T: Real>(
    grid: &Grid<T>,
    k: &Field<T>,
    alpha: &Field<T>,
    v0: T,
    k0: T,
) -> Result<Field<T>> {
    if k.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let (m0, v_hat) = j1_potential(k, alpha, v0, k0)?;
    let c1 = T::lit(2.0) * (T::lit(2.0) * v0 - k0) / (m0 * m0);
    let q = solve_zero_mean_poisson(grid, &k.map(|x| x - k0), &LinearOptions::default())?;
    Ok(v_hat.zip_map(&q, |v, q| -m0 * (c1 * v + q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn line(n: usize) -> Grid {
        Grid::unit_interval(n).unwrap()
    }

    fn cosine_problem(g: &Grid, mu: f64) -> LogisticProblem {
        LogisticProblem::new(Field::from_fn(g, |p| 0.5 + 0.4 * (PI * p[0]).cos()), mu).unwrap()
    }

    fn random_field(g: &Grid, rng: &mut ChaCha8Rng, modes: usize) -> Field {
        let c: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_fn(g, |p| {
            c.iter()
                .enumerate()
                .map(|(j, a)| a * (PI * j as f64 * p[0]).cos())
                .sum()
        })
    }

    /// Strictly positive strategy with values in `[0.1, 0.3]`.
    fn random_interior(g: &Grid, rng: &mut ChaCha8Rng) -> Field {
        random_field(g, rng, 5).map(|v| 0.2 + 0.1 * v.tanh())
    }

    fn random_admissible(g: &Grid, rng: &mut ChaCha8Rng, c: &StrategyConstraints) -> Field {
        let raw = &random_field(g, rng, 5) * 0.3;
        project(&raw.map(|v| v + c.v0), c).unwrap()
    }

    #[test]
    fn output_closed_forms() {
        let g = line(33);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 1.0).unwrap();
        let o = SteadyOptions::default();
        let j = fishing_output(&p, &Field::constant(&g, 0.5), &o).unwrap();
        assert!((j - 0.25).abs() < 1e-12);
        assert_eq!(fishing_output(&p, &Field::zeros(&g), &o).unwrap(), 0.0);
        let j = fishing_output(&p, &Field::constant(&g, 0.3), &o).unwrap();
        assert!((j - 0.21).abs() < 1e-12);
    }

    #[test]
    fn adjoint_closed_forms() {
        let g = line(33);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 2.0).unwrap();
        let half = Field::constant(&g, 0.5);
        let adj = adjoint_state(&p, &half, &half).unwrap();
        assert!((&adj - &Field::constant(&g, 1.0)).sup_norm() < 1e-12);

        // constant K0 and α = a: p (K0 - a) = a
        let (k0, a) = (0.8, 0.3);
        let p = LogisticProblem::new(Field::constant(&g, k0), 1.0).unwrap();
        let alpha = Field::constant(&g, a);
        let theta = Field::constant(&g, k0 - a);
        let adj = adjoint_state(&p, &alpha, &theta).unwrap();
        assert!((&adj - &Field::constant(&g, a / (k0 - a))).sup_norm() < 1e-12);
    }

    #[test]
    fn adjoint_below_one_for_small_budget() {
        let g = line(129);
        let p = cosine_problem(&g, 0.5);
        let alpha = Field::from_fn(&g, |x| 0.007 * (1.0 + 0.5 * (3.0 * x[0]).sin()));
        assert!(alpha.mean() <= 0.01);
        let (theta, _) = evaluate(&p, &alpha, &SteadyOptions::default()).unwrap();
        let adj = adjoint_state(&p, &alpha, &theta).unwrap();
        assert!(adj.min() > 0.0 && adj.max() < 1.0);
    }

    #[test]
    fn gradient_closed_form_and_positivity() {
        let g = line(33);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 1.0).unwrap();
        let grad = gateaux_gradient(&p, &Field::constant(&g, 0.5), &SteadyOptions::default())
            .unwrap();
        assert!(grad.sup_norm() < 1e-12);

        let g = line(65);
        let p = cosine_problem(&g, 0.3);
        let alpha = Field::from_fn(&g, |x| 0.015 * x[0]);
        let grad = gateaux_gradient(&p, &alpha, &SteadyOptions::default()).unwrap();
        assert!(grad.min() > 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let g = line(65);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opts = SteadyOptions::default();
        for _ in 0..10 {
            let mu = rng.gen_range(0.05..2.0);
            let p = cosine_problem(&g, mu);
            let alpha = random_interior(&g, &mut rng);
            let h = random_field(&g, &mut rng, 4);
            let grad = gateaux_gradient(&p, &alpha, &opts).unwrap();
            let eps = 1e-5;
            let jp = fishing_output(&p, &(&alpha + &(&h * eps)), &opts).unwrap();
            let jm = fishing_output(&p, &(&alpha - &(&h * eps)), &opts).unwrap();
            let fd = (jp - jm) / (2.0 * eps);
            let adj = grad.inner(&h);
            assert!((adj - fd).abs() <= 1e-4 * fd.abs().max(1e-3), "{adj} vs {fd}");
            assert!((adj - fd).abs() <= 1e-5);
        }
    }

    #[test]
    fn second_derivative_matches_second_differences() {
        let g = line(65);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let opts = SteadyOptions::default();
        let p = cosine_problem(&g, 0.4);
        for _ in 0..5 {
            let alpha = random_interior(&g, &mut rng);
            let h = random_field(&g, &mut rng, 4);
            let eps = 1e-3;
            let j0 = fishing_output(&p, &alpha, &opts).unwrap();
            let jp = fishing_output(&p, &(&alpha + &(&h * eps)), &opts).unwrap();
            let jm = fishing_output(&p, &(&alpha - &(&h * eps)), &opts).unwrap();
            let fd = (jp - 2.0 * j0 + jm) / (eps * eps);
            let exact = gateaux_second(&p, &alpha, &h, &opts).unwrap();
            assert!((exact - fd).abs() <= 1e-4, "{exact} vs {fd}");
        }
        assert_eq!(
            gateaux_second(&p, &Field::constant(&g, 0.2), &Field::zeros(&g), &opts).unwrap(),
            0.0
        );
    }

    #[test]
    fn concave_for_small_budget() {
        let g = line(65);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let alpha = Field::constant(&g, 0.05);
        for _ in 0..10 {
            let raw = random_field(&g, &mut rng, 6);
            let h = raw.map(|v| v - raw.mean());
            let d2 = gateaux_second(&p, &alpha, &h, &SteadyOptions::default()).unwrap();
            assert!(d2 < 0.0, "{d2}");
        }
    }

    #[test]
    fn monotone_for_tiny_budget() {
        let g = line(65);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let opts = SteadyOptions::default();
        for _ in 0..5 {
            let a1 = random_field(&g, &mut rng, 4).map(|v| 0.005 * (1.0 + v.tanh()));
            let bump = random_field(&g, &mut rng, 4).map(|v| 0.004 * (1.0 + v.tanh()));
            let a2 = &a1 + &bump;
            assert!(a2.mean() <= 0.02);
            let j1 = fishing_output(&p, &a1, &opts).unwrap();
            let j2 = fishing_output(&p, &a2, &opts).unwrap();
            assert!(j1 <= j2 + 1e-10);
        }
    }

    #[test]
    fn projection_examples() {
        let g = line(1025);
        let c = StrategyConstraints::equality(1.0, 0.3).unwrap();
        let (a, tau) = project_with_shift(&Field::constant(&g, 0.8), &c).unwrap();
        assert!((&a - &Field::constant(&g, 0.3)).sup_norm() < 1e-11);
        assert!((tau + 0.5).abs() < 1e-11);

        let c = StrategyConstraints::equality(1.0, 0.25).unwrap();
        let (a, tau) = project_with_shift(&Field::from_fn(&g, |p| p[0]), &c).unwrap();
        // trapezoid quadrature of the kink costs O(h^2)
        assert!((tau - (0.5f64.sqrt() - 1.0)).abs() < 1e-6, "{tau}");
        assert!((a.mean() - 0.25).abs() < 1e-11);

        let c = StrategyConstraints::inequality(1.0, 0.3).unwrap();
        let a = project(&Field::constant(&g, 0.2), &c).unwrap();
        assert_eq!(a, Field::constant(&g, 0.2));

        assert!(StrategyConstraints::equality(0.2, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(
            vals in proptest::collection::vec(-2.0f64..3.0, 17),
            kappa in 0.2f64..2.0,
            frac in 0.05f64..0.95,
            eq in any::<bool>(),
        ) {
            let g = line(17);
            let mode = if eq { ConstraintMode::Equality } else { ConstraintMode::Inequality };
            let c = StrategyConstraints::new(kappa, frac * kappa, mode).unwrap();
            let f = Field::new(&g, vals).unwrap();
            let a = project(&f, &c).unwrap();
            prop_assert!(c.is_feasible(&a, 1e-10));
            let b = project(&a, &c).unwrap();
            prop_assert!((&a - &b).sup_norm() < 1e-9);
            // variational inequality of the projection against the clamp of
            // any feasible point
            let other = project(&Field::constant(&g, c.v0), &c).unwrap();
            prop_assert!((&f - &a).inner(&(&other - &a)) <= 1e-9);
        }
    }

    #[test]
    fn constant_resources_unsaturated_optimum() {
        let g = line(257);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 1.0).unwrap();
        let c = StrategyConstraints::inequality(2.0, 0.6).unwrap();
        let r = optimize_single(&p, &c, &OptimizeOptions::default()).unwrap();
        assert!((&r.alpha_star - &Field::constant(&g, 0.5)).sup_norm() < 1e-4);
        assert!((r.j_value - 0.25).abs() < 1e-5);
        assert!(!r.saturated_volume);
    }

    #[test]
    fn small_budget_constant_optimum() {
        let g = line(129);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 1.0).unwrap();
        let c = StrategyConstraints::equality(1.0, 0.1).unwrap();
        let r = optimize_single(&p, &c, &OptimizeOptions::default()).unwrap();
        assert!((&r.alpha_star - &Field::constant(&g, 0.1)).sup_norm() < 1e-4);
        assert!(r.saturated_volume);
    }

    fn kkt_slack(r: &OptimizeReport, kappa: f64) -> f64 {
        let a = r.alpha_star.values();
        let s = r.switch_function.values();
        let interior: Vec<f64> = a
            .iter()
            .zip(s)
            .filter(|(a, _)| **a > 1e-6 && **a < kappa - 1e-6)
            .map(|(_, s)| *s)
            .collect();
        let level = if interior.is_empty() {
            // bang-bang: any level between the two sets
            let lo = a.iter().zip(s).filter(|(a, _)| **a <= 1e-6).map(|(_, s)| *s).fold(f64::MIN, f64::max);
            let hi = a.iter().zip(s).filter(|(a, _)| **a >= kappa - 1e-6).map(|(_, s)| *s).fold(f64::MAX, f64::min);
            return (lo - hi).max(0.0);
        } else {
            interior.iter().sum::<f64>() / interior.len() as f64
        };
        let mut slack = interior.iter().map(|s| (s - level).abs()).fold(0.0, f64::max);
        for (a, s) in a.iter().zip(s) {
            if *a >= kappa - 1e-6 {
                slack = slack.max(level - s);
            } else if *a <= 1e-6 {
                slack = slack.max(s - level);
            }
        }
        slack
    }

    #[test]
    fn optimum_has_bathtub_structure() {
        let g = line(129);
        for (mu, v0) in [(0.1, 0.2), (1.0, 0.3), (0.05, 0.1)] {
            let p = cosine_problem(&g, mu);
            let c = StrategyConstraints::equality(1.0, v0).unwrap();
            let r = optimize_single(&p, &c, &OptimizeOptions::default()).unwrap();
            assert!(c.is_feasible(&r.alpha_star, 1e-8));
            let slack = kkt_slack(&r, 1.0);
            assert!(slack <= 1e-4, "mu {mu} v0 {v0}: slack {slack}");
        }
    }

    #[test]
    fn optimizer_beats_brute_force_family() {
        let g = line(33);
        let p = cosine_problem(&g, 0.2);
        let c = StrategyConstraints::equality(1.0, 0.2).unwrap();
        let opts = SteadyOptions::default();
        let r = optimize_single(&p, &c, &OptimizeOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut best = f64::MIN;
        for _ in 0..200 {
            let raw = &random_field(&g, &mut rng, 8) * rng.gen_range(0.1..3.0);
            let cand = project(&raw, &c).unwrap();
            best = best.max(fishing_output(&p, &cand, &opts).unwrap());
        }
        let width = c.v0 / c.kappa;
        for i in 0..=100 {
            let a = (1.0 - width) * i as f64 / 100.0;
            let cand = Field::indicator_interval(&g, a, a + width, c.kappa);
            best = best.max(fishing_output(&p, &cand, &opts).unwrap());
        }
        assert!(r.j_value >= best - 1e-6, "{} < {best}", r.j_value);
    }

    #[test]
    fn l1_stability_ratio_bounded() {
        let g = line(65);
        let p = cosine_problem(&g, 0.3);
        let c = StrategyConstraints::equality(1.0, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let opts = SteadyOptions::default();
        let mut ratios = Vec::new();
        for _ in 0..20 {
            let a = random_admissible(&g, &mut rng, &c);
            let b = random_admissible(&g, &mut rng, &c);
            let (ta, _) = evaluate(&p, &a, &opts).unwrap();
            let (tb, _) = evaluate(&p, &b, &opts).unwrap();
            let ratio = (&ta - &tb).l1_norm() / (&a - &b).l1_norm().cbrt();
            ratios.push(ratio);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max.is_finite() && max < 10.0 * ratios[0]);
    }

    #[test]
    fn j0_closed_forms() {
        assert_eq!(j0_eval(0.5, 1.0), 0.25);
        assert_eq!(j0_eval(0.0, 1.0), 0.0);
        let ineq = StrategyConstraints::inequality(1.0, 0.6).unwrap();
        assert_eq!(j0_argmax(0.8, &ineq), 0.4);
        let ineq = StrategyConstraints::inequality(1.0, 0.3).unwrap();
        assert_eq!(j0_argmax(0.8, &ineq), 0.3);
        let eq = StrategyConstraints::equality(1.0, 0.6).unwrap();
        assert_eq!(j0_argmax(0.8, &eq), 0.6);
    }

    #[test]
    fn j1_constant_data() {
        let g = line(65);
        let k = Field::constant(&g, 0.7);
        let a = Field::constant(&g, 0.2);
        assert!(j1_eval(&g, &k, &a, 0.2, 0.7).unwrap().abs() < 1e-14);
        let d = j1_gradient(&g, &k, &a, 0.2, 0.7).unwrap();
        assert!(d.sup_norm() < 1e-14);
        assert!(matches!(
            j1_eval(&g, &k, &Field::constant(&g, 0.25), 0.2, 0.7),
            Err(Error::Incompatible { .. })
        ));
    }

    #[test]
    fn j1_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for g in [line(129), Grid::unit_square(17).unwrap()] {
            let k = Field::from_fn(&g, |p| 0.5 + 0.3 * (PI * p[0]).cos() - 0.1 * p[p.len() - 1]);
            let k0 = k.mean();
            let k = k.map(|v| v - k0 + 0.5);
            for v0 in [0.1, 0.3] {
                let c = StrategyConstraints::equality(1.0, v0).unwrap();
                let raw = random_field(&g, &mut rng, 5);
                let alpha = project(&(&raw * 0.2).map(|v| v + v0), &c).unwrap();
                let alpha = alpha.map(|v| v - alpha.mean() + v0);
                let raw = random_field(&g, &mut rng, 5);
                let h = raw.map(|v| v - raw.mean());
                let d = j1_gradient(&g, &k, &alpha, v0, 0.5).unwrap();
                let eps = 1e-4;
                let jp = j1_eval(&g, &k, &(&alpha + &(&h * eps)), v0, 0.5).unwrap();
                let jm = j1_eval(&g, &k, &(&alpha - &(&h * eps)), v0, 0.5).unwrap();
                let fd = (jp - jm) / (2.0 * eps);
                assert!((d.inner(&h) - fd).abs() <= 1e-6, "{} vs {fd}", d.inner(&h));
            }
        }
    }

    #[test]
    fn j1_gradient_constant_at_third() {
        let g = line(129);
        let k = Field::from_fn(&g, |p| 0.5 + 0.4 * (PI * p[0]).cos());
        let k0 = k.mean();
        let v0 = k0 / 3.0;
        let d = j1_gradient(&g, &k, &Field::constant(&g, v0), v0, k0).unwrap();
        assert!(d.map(|x| x - d.mean()).sup_norm() < 1e-8);
        let d = j1_gradient(&g, &k, &Field::constant(&g, v0 + 0.1), v0 + 0.1, k0).unwrap();
        assert!(d.map(|x| x - d.mean()).sup_norm() > 1e-3);
    }

    #[test]
    fn j1_convex_above_half() {
        // J¹ is quadratic in α, so the second difference is the exact
        // quadratic form; it must be positive for V0 > K0/2
        let g = line(129);
        let k = Field::from_fn(&g, |p| 1.0 - p[0]);
        let (k0, v0) = (0.5, 0.35);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let alpha = Field::constant(&g, v0);
        let base = j1_eval(&g, &k, &alpha, v0, k0).unwrap();
        for _ in 0..10 {
            let raw = random_field(&g, &mut rng, 6);
            let h = raw.map(|v| v - raw.mean());
            let jp = j1_eval(&g, &k, &(&alpha + &h), v0, k0).unwrap();
            let jm = j1_eval(&g, &k, &(&alpha - &h), v0, k0).unwrap();
            assert!(jp - 2.0 * base + jm > 0.0);
        }
    }

    #[test]
    fn report_csv_columns() {
        let g = line(5);
        let p = LogisticProblem::new(Field::constant(&g, 1.0), 1.0).unwrap();
        let c = StrategyConstraints::inequality(2.0, 0.6).unwrap();
        let r = optimize_single(&p, &c, &OptimizeOptions::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x,alpha,theta,switch"));
        assert_eq!(text.lines().count(), 6);
        let mut buf = Vec::new();
        r.write_summary(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("saturated_volume,false"));
    }
}
