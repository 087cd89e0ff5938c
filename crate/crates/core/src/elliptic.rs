//! Elliptic solves: the logistic-diffusive steady state
//! `-μΔθ = θ(K - α - θ)`, linear reaction-diffusion problems, the zero-mean
//! Neumann Poisson problem, and the principal Neumann eigenvalue of
//! `-μΔ - potential`.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::{LinearOptions, ShiftedLaplacian};
use crate::scalar::Real;

/// Resources `K` and diffusivity `μ` of the logistic-diffusive equation.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticProblem<T: Real = f64> {
    k: Field<T>,
    mu: T,
    k0: T,
}

impl<T: Real> LogisticProblem<T> {
    /// Admissible resources: `0 <= K <= 1` and `⨍K ∈ (0, 1]`. The closed end
    /// admits the constant case `K ≡ 1`.
    pub fn new(k: Field<T>, mu: T) -> Result<Self> {
        if k.min() < T::zero() || k.max() > T::one() {
            return Err(Error::InvalidParameter(format!(
                "resources must lie in [0, 1], got range [{}, {}]",
                k.min(),
                k.max()
            )));
        }
        let k0 = k.mean();
        if !(k0 > T::zero() && k0 <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "mean resources must lie in (0, 1], got {k0}"
            )));
        }
        Self::unchecked(k, mu)
    }

    /// Skips the bounds on `K`; used for reduced resources
    /// `K - Σ_{j≠i} α_j` in games and for time-dependent reuse.
    pub fn unchecked(k: Field<T>, mu: T) -> Result<Self> {
        if !(mu > T::zero()) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diffusivity must be positive, got {mu}"
            )));
        }
        let k0 = k.mean();
        Ok(LogisticProblem { k, mu, k0 })
    }

    /// Same diffusivity, different resources.
    pub fn with_resources(&self, k: Field<T>) -> Result<Self> {
        Self::unchecked(k, self.mu)
    }

    pub fn grid(&self) -> &Grid<T> {
        self.k.grid()
    }

    pub fn resources(&self) -> &Field<T> {
        &self.k
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    /// `⨍ K`.
    pub fn k0(&self) -> T {
        self.k0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions<T> {
    /// Sup-norm of the discrete residual. Round-off puts a floor of roughly
    /// `1e-15 μ / h^2` on what is reachable.
    pub tol: T,
    pub max_iter: usize,
    /// Step halvings per Newton iteration before giving up.
    pub max_halvings: usize,
    /// Extra full Newton steps after the tolerance is met, each kept only
    /// if it halves the residual.
    pub polish_steps: usize,
    pub linear: LinearOptions<T>,
}

impl<T: Real> Default for SteadyOptions<T> {
    fn default() -> Self {
        SteadyOptions {
            tol: T::floor_tol(1e-10),
            max_iter: 200,
            max_halvings: 40,
            polish_steps: 2,
            linear: LinearOptions::default(),
        }
    }
}

impl<T: Real> SteadyOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        SteadyOptions {
            tol,
            ..Self::default()
        }
    }
}

/// Result of a nonlinear elliptic solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<T: Real = f64> {
    pub solution: Field<T>,
    pub iterations: usize,
    /// Sup-norm of the discrete residual.
    pub final_residual: T,
    pub converged: bool,
    /// `false` when only the trivial state `θ ≡ 0` exists.
    pub positive: bool,
}

fn steady_residual<T: Real>(problem: &LogisticProblem<T>, growth: &[T], theta: &[T]) -> Vec<T> {
    let g = problem.grid();
    let mut lap = vec![T::zero(); theta.len()];
    g.laplacian_into(theta, &mut lap);
    lap.iter()
        .zip(theta)
        .zip(growth)
        .map(|((l, t), r)| -problem.mu * *l - *t * (*r - *t))
        .collect()
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Positive steady state of `-μΔθ = θ(K - α - θ)` with Neumann boundaries,
/// by damped Newton iteration.
pub fn solve_steady<T: Real>(
    problem: &LogisticProblem<T>,
    alpha: &Field<T>,
    opts: &SteadyOptions<T>,
) -> Result<SolveReport<T>> {
    if alpha.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    if alpha.min() < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "fishing strategy must be nonnegative, min = {}",
            alpha.min()
        )));
    }
    let mean_alpha = alpha.mean();
    if !(mean_alpha < problem.k0) {
        return Err(Error::Inadmissible {
            mean_alpha: mean_alpha.as_f64(),
            mean_k: problem.k0.as_f64(),
        });
    }
    let growth: Vec<T> = problem
        .k
        .values()
        .iter()
        .zip(alpha.values())
        .map(|(k, a)| *k - *a)
        .collect();
    let floor = T::lit(0.01) * problem.k0;
    let initial: Vec<T> = growth.iter().map(|r| r.max(floor)).collect();

    let mut report = newton(problem, &growth, initial, opts)?;
    let tiny = T::lit(1e-8);
    let mut restarts = 0;
    while sup(report.solution.values()) < tiny {
        let growth_field = Field::from_vec(problem.grid(), growth.clone());
        let (lambda, _) = principal_eigenvalue(
            problem.grid(),
            problem.mu,
            &growth_field,
            &EigenOptions::default(),
        )?;
        if lambda >= T::zero() {
            report.positive = false;
            return Ok(report);
        }
        if restarts == 2 {
            return Err(Error::LostPositiveBranch);
        }
        restarts += 1;
        log::debug!("steady solve collapsed to zero, restarting ({restarts})");
        let start = growth_field.mean();
        report = newton(problem, &growth, vec![start; growth.len()], opts)?;
    }
    Ok(report)
}

fn newton<T: Real>(
    problem: &LogisticProblem<T>,
    growth: &[T],
    mut theta: Vec<T>,
    opts: &SteadyOptions<T>,
) -> Result<SolveReport<T>> {
    let g = problem.grid();
    let mut res = steady_residual(problem, growth, &theta);
    let mut fnorm = sup(&res);
    let mut iterations = 0;
    while fnorm > opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: fnorm.as_f64(),
            });
        }
        iterations += 1;
        let step = newton_direction(problem, growth, &theta, &res, opts)?;

        let mut s = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<T> = theta.iter().zip(&step).map(|(t, d)| *t + s * *d).collect();
            let trial_res = steady_residual(problem, growth, &trial);
            let trial_norm = sup(&trial_res);
            if trial_norm.is_finite() && trial_norm < (T::one() - T::lit(1e-4) * s) * fnorm {
                theta = trial;
                res = trial_res;
                fnorm = trial_norm;
                accepted = true;
                break;
            }
            s *= T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: fnorm.as_f64(),
            });
        }
    }
    // undamped steps past the tolerance, kept only while they still halve
    // the residual, take the state down to round-off
    for _ in 0..opts.polish_steps {
        let step = newton_direction(problem, growth, &theta, &res, opts)?;
        let trial: Vec<T> = theta.iter().zip(&step).map(|(t, d)| *t + *d).collect();
        let trial_res = steady_residual(problem, growth, &trial);
        let trial_norm = sup(&trial_res);
        if !(trial_norm < T::lit(0.5) * fnorm) {
            break;
        }
        theta = trial;
        res = trial_res;
        fnorm = trial_norm;
    }
    // the equation is solved; clip round-off negatives of the trivial branch
    let theta: Vec<T> = theta.into_iter().map(|t| t.max(T::zero())).collect();
    Ok(SolveReport {
        solution: Field::checked(g, theta, "steady state")?,
        iterations,
        final_residual: fnorm,
        converged: true,
        positive: true,
    })
}

fn newton_direction<T: Real>(
    problem: &LogisticProblem<T>,
    growth: &[T],
    theta: &[T],
    res: &[T],
    opts: &SteadyOptions<T>,
) -> Result<Vec<T>> {
    let potential: Vec<T> = growth
        .iter()
        .zip(theta)
        .map(|(r, t)| *r - T::lit(2.0) * *t)
        .collect();
    let jac = ShiftedLaplacian::reaction(problem.grid(), problem.mu, &potential);
    let neg_res: Vec<T> = res.iter().map(|v| -*v).collect();
    jac.solve(&neg_res, false, &opts.linear)
}

/// Solves `-μΔw - potential·w = rhs` with Neumann boundaries. The operator
/// must be positive definite; otherwise [`Error::Indefinite`] is returned.
pub fn solve_linear_reaction<T: Real>(
    grid: &Grid<T>,
    mu: T,
    potential: &Field<T>,
    rhs: &Field<T>,
    opts: &LinearOptions<T>,
) -> Result<Field<T>> {
    if potential.grid() != grid || rhs.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let op = ShiftedLaplacian::reaction(grid, mu, potential.values());
    let w = op.solve(rhs.values(), true, opts)?;
    Field::checked(grid, w, "linear reaction solve")
}

/// Solves `-Δv = rhs`, Neumann, `⨍v = 0`. Requires `|⨍ rhs| <= 1e-10`.
pub fn solve_zero_mean_poisson<T: Real>(
    grid: &Grid<T>,
    rhs: &Field<T>,
    opts: &LinearOptions<T>,
) -> Result<Field<T>> {
    if rhs.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let m = rhs.mean();
    if m.abs() > T::floor_tol(1e-10) {
        return Err(Error::Incompatible { mean: m.as_f64() });
    }
    let op = ShiftedLaplacian::new(grid, T::one(), vec![T::zero(); grid.len()]);
    let v = op.solve_zero_mean(rhs.values(), opts)?;
    Field::checked(grid, v, "poisson solve")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions<T> {
    /// Residual `‖Aφ - λφ‖` tolerance relative to `1 + |λ|`, on top of a
    /// round-off allowance proportional to the operator norm.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for EigenOptions<T> {
    fn default() -> Self {
        EigenOptions {
            tol: T::floor_tol(1e-10),
            max_iter: 20_000,
        }
    }
}

/// Smallest eigenvalue of `-μΔ - potential` (Neumann) and its positive
/// eigenfunction normalised by `⨍φ² = 1`. Shifted inverse power iteration;
/// the returned value is the Rayleigh quotient of the returned vector.
pub fn principal_eigenvalue<T: Real>(
    grid: &Grid<T>,
    mu: T,
    potential: &Field<T>,
    opts: &EigenOptions<T>,
) -> Result<(T, Field<T>)> {
    if potential.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let c = potential.values();
    let lower = -potential.max();
    let range = potential.max() - potential.min();
    let shift = lower - T::lit(0.1) * (T::one() + range);
    let op = ShiftedLaplacian::reaction(grid, mu, c);
    let shifted = ShiftedLaplacian::new(grid, mu, c.iter().map(|v| -*v - shift).collect());
    let op_norm: T = grid
        .axes()
        .iter()
        .map(|a| T::lit(4.0) * mu / (a.spacing() * a.spacing()))
        .sum::<T>()
        + potential.sup_norm();
    let slack = T::epsilon() * T::lit(100.0) * op_norm;
    let linear = LinearOptions::default();

    let normalize = |v: &mut Vec<T>| {
        let norm = grid.inner(v, v).sqrt();
        let sign = if grid.mean_of(v) < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        v.iter_mut().for_each(|x| *x = *x * sign / norm);
    };
    let mut phi = vec![T::one(); grid.len()];
    let mut lambda = T::infinity();
    for _ in 0..opts.max_iter {
        let mut next = shifted.solve(&phi, true, &linear)?;
        normalize(&mut next);
        let a_phi = op.apply(&next);
        lambda = grid.inner(&next, &a_phi);
        let r: Vec<T> = a_phi
            .iter()
            .zip(&next)
            .map(|(a, p)| *a - lambda * *p)
            .collect();
        let res = grid.inner(&r, &r).sqrt();
        phi = next;
        if res <= opts.tol * (T::one() + lambda.abs()) + slack {
            return Ok((lambda, Field::checked(grid, phi, "eigenvector")?));
        }
    }
    log::warn!("eigen iteration stalled at λ ≈ {lambda}");
    Err(Error::EigenNotConverged {
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cosine_k(g: &Grid) -> Field {
        Field::from_fn(g, |p| 0.5 + 0.4 * (PI * p[0]).cos())
    }

    /// Smooth random field with values in `[lo, hi]`.
    fn random_smooth(g: &Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let raw = Field::from_fn(g, |p| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * (PI * j as f64 * p[0]).cos())
                .sum()
        });
        let (mn, mx) = (raw.min(), raw.max());
        raw.map(|v| lo + (hi - lo) * (v - mn) / (mx - mn + 1e-300))
    }

    #[test]
    fn constant_resources_constant_state() {
        let g: Grid = Grid::unit_interval(33).unwrap();
        for mu in [0.05, 1.0, 10.0] {
            let p = LogisticProblem::new(Field::constant(&g, 1.0), mu).unwrap();
            let r = solve_steady(&p, &Field::constant(&g, 0.5), &SteadyOptions::default()).unwrap();
            assert!(r.converged && r.positive);
            assert!((&r.solution - &Field::constant(&g, 0.5)).sup_norm() < 1e-10);
        }
        let p = LogisticProblem::new(Field::constant(&g, 0.7), 1.0).unwrap();
        let r = solve_steady(&p, &Field::zeros(&g), &SteadyOptions::default()).unwrap();
        assert!((&r.solution - &Field::constant(&g, 0.7)).sup_norm() < 1e-10);
    }

    #[test]
    fn two_dimensional_steady_state() {
        let g: Grid = Grid::unit_square(17).unwrap();
        let k = Field::from_fn(&g, |p| 0.5 + 0.3 * (PI * p[0]).cos() * (PI * p[1]).cos());
        let p = LogisticProblem::new(k, 0.5).unwrap();
        let alpha = Field::constant(&g, 0.1);
        let r = solve_steady(&p, &alpha, &SteadyOptions::default()).unwrap();
        assert!(r.final_residual <= 1e-10);
        assert!(r.solution.min() > 0.0);
    }

    #[test]
    fn rejects_inadmissible_strategy() {
        let g: Grid = Grid::unit_interval(17).unwrap();
        let p = LogisticProblem::new(Field::constant(&g, 0.5), 1.0).unwrap();
        let err = solve_steady(&p, &Field::constant(&g, 0.5), &SteadyOptions::default());
        assert!(matches!(err, Err(Error::Inadmissible { .. })));
        let neg = Field::from_fn(&g, |p| p[0] - 0.5);
        assert!(solve_steady(&p, &neg, &SteadyOptions::default()).is_err());
    }

    #[test]
    fn rejects_bad_resources() {
        let g: Grid = Grid::unit_interval(9).unwrap();
        assert!(LogisticProblem::new(Field::constant(&g, 1.2), 1.0).is_err());
        assert!(LogisticProblem::new(Field::constant(&g, 0.0), 1.0).is_err());
        assert!(LogisticProblem::new(Field::constant(&g, 0.5), 0.0).is_err());
        assert!(LogisticProblem::unchecked(Field::constant(&g, 1.2), 1.0).is_ok());
    }

    fn reference_solution() -> Field {
        let g: Grid = Grid::unit_interval(4097).unwrap();
        let p = LogisticProblem::new(cosine_k(&g), 1.0).unwrap();
        solve_steady(&p, &Field::zeros(&g), &SteadyOptions::with_tol(1e-7))
            .unwrap()
            .solution
    }

    fn coarse_error(reference: &Field, nodes: usize) -> (f64, f64) {
        let g: Grid = Grid::unit_interval(nodes).unwrap();
        let p = LogisticProblem::new(cosine_k(&g), 1.0).unwrap();
        let theta = solve_steady(&p, &Field::zeros(&g), &SteadyOptions::default())
            .unwrap()
            .solution;
        let stride = 4096 / (nodes - 1);
        let sup = (0..nodes)
            .map(|i| (theta.values()[i] - reference.values()[i * stride]).abs())
            .fold(0.0, f64::max);
        ((theta.mean() - reference.mean()).abs(), sup)
    }

    #[test]
    fn mesh_convergence_against_fine_reference() {
        let reference = reference_solution();
        let (mean_err, _) = coarse_error(&reference, 257);
        assert!(mean_err < 1e-4, "mean error {mean_err}");
        let (_, e65) = coarse_error(&reference, 65);
        let (_, e129) = coarse_error(&reference, 129);
        assert!(e129 * 3.0 <= e65, "{e65} vs {e129}");
    }

    #[test]
    fn maximum_principle_bounds() {
        let g: Grid = Grid::unit_interval(65).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..8 {
            let k = random_smooth(&g, &mut rng, 0.05, 1.0);
            let mu = rng.gen_range(0.05..3.0);
            let p = LogisticProblem::new(k.clone(), mu).unwrap();
            let alpha = random_smooth(&g, &mut rng, 0.0, 0.8 * k.mean());
            let theta = solve_steady(&p, &alpha, &SteadyOptions::default())
                .unwrap()
                .solution;
            assert!(theta.min() >= 0.0);
            assert!(theta.max() <= k.sup_norm() + alpha.sup_norm());
        }
    }

    #[test]
    fn linear_reaction_examples() {
        let g: Grid = Grid::unit_interval(33).unwrap();
        let opts = LinearOptions::default();
        let w = solve_linear_reaction(
            &g,
            0.7,
            &Field::constant(&g, -2.0),
            &Field::constant(&g, 3.0),
            &opts,
        )
        .unwrap();
        assert!((&w - &Field::constant(&g, 1.5)).sup_norm() < 1e-12);

        let p = solve_linear_reaction(
            &g,
            1.0,
            &Field::constant(&g, -0.5),
            &Field::constant(&g, 0.5),
            &opts,
        )
        .unwrap();
        assert!((&p - &Field::constant(&g, 1.0)).sup_norm() < 1e-12);

        let pot = Field::from_fn(&g, |p| -1.0 + 0.8 * (3.0 * p[0]).sin());
        let rhs = Field::from_fn(&g, |p| p[0] * p[0]);
        let w = solve_linear_reaction(&g, 0.3, &pot, &rhs, &opts).unwrap();
        let back = &(&w.laplacian() * -0.3) - &pot.hadamard(&w);
        assert!((&back - &rhs).sup_norm() < 1e-10);

        let g2: Grid = Grid::unit_square(13).unwrap();
        let pot2 = Field::from_fn(&g2, |p| -1.0 - p[0] * p[1]);
        let rhs2 = Field::from_fn(&g2, |p| p[0] - p[1]);
        let w2 = solve_linear_reaction(&g2, 0.3, &pot2, &rhs2, &opts).unwrap();
        let back2 = &(&w2.laplacian() * -0.3) - &pot2.hadamard(&w2);
        assert!((&back2 - &rhs2).sup_norm() < 1e-9);
    }

    #[test]
    fn linear_reaction_rejects_indefinite() {
        let g: Grid = Grid::unit_interval(33).unwrap();
        let r = solve_linear_reaction(
            &g,
            1.0,
            &Field::constant(&g, 0.5),
            &Field::constant(&g, 1.0),
            &LinearOptions::default(),
        );
        assert_eq!(r, Err(Error::Indefinite));
    }

    #[test]
    fn poisson_examples() {
        let opts = LinearOptions::default();
        let g: Grid = Grid::unit_interval(65).unwrap();
        let zero = solve_zero_mean_poisson(&g, &Field::zeros(&g), &opts).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);

        let err = |nodes: usize, k: f64| {
            let g: Grid = Grid::unit_interval(nodes).unwrap();
            let rhs = Field::from_fn(&g, |p| (k * PI * p[0]).cos());
            let v = solve_zero_mean_poisson(&g, &rhs, &opts).unwrap();
            assert!(v.mean().abs() < 1e-12);
            let exact = Field::from_fn(&g, |p| (k * PI * p[0]).cos() / (k * k * PI * PI));
            (&v - &exact).sup_norm()
        };
        for k in [1.0, 2.0] {
            let (e1, e2) = (err(33, k), err(65, k));
            assert!(e1 < 1e-3);
            assert!(e1 / e2 > 3.5, "order check {e1} {e2}");
        }

        let bad = Field::constant(&g, 0.1);
        assert!(matches!(
            solve_zero_mean_poisson(&g, &bad, &opts),
            Err(Error::Incompatible { .. })
        ));
    }

    #[test]
    fn eigenvalue_of_constant_potential() {
        let g: Grid = Grid::unit_interval(33).unwrap();
        let (lambda, phi) =
            principal_eigenvalue(&g, 0.5, &Field::constant(&g, 0.3), &EigenOptions::default())
                .unwrap();
        assert!((lambda + 0.3).abs() < 1e-10);
        assert!((&phi - &Field::constant(&g, 1.0)).sup_norm() < 1e-8);
    }

    #[test]
    fn eigen_structure_at_steady_state() {
        let g: Grid = Grid::unit_interval(129).unwrap();
        let k = cosine_k(&g);
        let p = LogisticProblem::new(k.clone(), 0.3).unwrap();
        let alpha = Field::from_fn(&g, |x| 0.2 * x[0]);
        let theta = solve_steady(&p, &alpha, &SteadyOptions::default())
            .unwrap()
            .solution;
        let base = &k - &alpha;
        let (l0, phi) =
            principal_eigenvalue(&g, 0.3, &(&base - &theta), &EigenOptions::default()).unwrap();
        assert!(l0.abs() < 1e-6, "{l0}");
        assert!(phi.min() > 0.0);
        let (l1, _) = principal_eigenvalue(
            &g,
            0.3,
            &(&base - &(&theta * 2.0)),
            &EigenOptions::default(),
        )
        .unwrap();
        assert!(l1 > 0.0);
    }

    #[test]
    fn eigenvalue_rayleigh_consistency_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for g in [Grid::<f64>::unit_interval(65).unwrap(), Grid::unit_square(13).unwrap()] {
            for _ in 0..5 {
                let c1 = Field::from_fn(&g, |p| {
                    0.5 * (PI * p[0]).cos() - 0.2 * p.iter().sum::<f64>()
                });
                let bump = rng.gen_range(0.05..0.5);
                let c2 = Field::from_fn(&g, |p| {
                    0.5 * (PI * p[0]).cos() - 0.2 * p.iter().sum::<f64>()
                        + bump * (-(10.0 * (p[0] - 0.3)).powi(2)).exp()
                });
                let mu = rng.gen_range(0.1..2.0);
                let (l1, phi) = principal_eigenvalue(&g, mu, &c1, &EigenOptions::default()).unwrap();
                let (l2, _) = principal_eigenvalue(&g, mu, &c2, &EigenOptions::default()).unwrap();
                assert!(l1 > l2, "monotonicity {l1} {l2}");
                let rq = (mu * phi.dirichlet_energy() - phi.hadamard(&c1).inner(&phi))
                    / phi.inner(&phi);
                assert!((rq - l1).abs() < 1e-8);
                assert!((phi.inner(&phi) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_precision_steady_state() {
        let g = Grid::<f32>::unit_interval(17).unwrap();
        let p = LogisticProblem::new(Field::constant(&g, 1.0f32), 1.0).unwrap();
        let r = solve_steady(&p, &Field::constant(&g, 0.25f32), &SteadyOptions::default()).unwrap();
        assert!((r.solution.mean() - 0.75).abs() < 1e-4);
    }
}
