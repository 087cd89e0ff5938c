//! Time-dependent mean field harvesting game on a bounded domain:
//!
//! ```text
//! -∂t V - νΔV + s (u² + |∇V|²) = 0,    V(T) = 0
//!  ∂t m - νΔm + d div(m ∇V)      = 0,    m(0) = m0
//!  ∂t u - μΔu = f(u, x) - m u²,          u(0) = u0
//! ```
//!
//! with no-flux boundaries. `s = hjb_sign` and `d = drift_sign` default to
//! `+1`. Each equation is stepped by an IMEX scheme: implicit diffusion,
//! explicit everything else. The Fokker-Planck drift uses conservative
//! upwind fluxes on grid edges, so the total mass is conserved to rounding.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{fmt_sci, Field, Grid, VectorField};
use crate::linalg::{LinearOptions, ShiftedLaplacian};
use crate::scalar::Real;

/// One field per time level `t_n = n Δt`, `n = 0..=steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T: Real = f64> {
    dt: T,
    fields: Vec<Field<T>>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(dt: T, fields: Vec<Field<T>>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::InvalidParameter("empty time series".into()));
        }
        let grid = fields[0].grid();
        if fields.iter().any(|f| f.grid() != grid) {
            return Err(Error::GridMismatch);
        }
        Ok(TimeSeries { dt, fields })
    }

    /// The same field at every level.
    pub fn constant(dt: T, levels: usize, field: &Field<T>) -> Self {
        TimeSeries {
            dt,
            fields: vec![field.clone(); levels],
        }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn time(&self, n: usize) -> T {
        T::count(n) * self.dt
    }

    pub fn at(&self, n: usize) -> &Field<T> {
        &self.fields[n]
    }

    pub fn first(&self) -> &Field<T> {
        &self.fields[0]
    }

    pub fn last(&self) -> &Field<T> {
        self.fields.last().expect("non-empty")
    }

    pub fn fields(&self) -> &[Field<T>] {
        &self.fields
    }

    pub fn grid(&self) -> &Grid<T> {
        self.fields[0].grid()
    }

    /// `max_n ‖a_n - b_n‖_{L²}`.
    pub fn max_l2_distance(&self, other: &Self) -> T {
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| (a - b).l2_norm())
            .fold(T::zero(), T::max)
    }
}

pub type ReactionFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;

/// Reaction term `f(u, x)` of the fish equation.
#[derive(Clone)]
pub enum Reaction<T: Real = f64> {
    /// `r u (1 - u)`.
    Monostable { r: T },
    /// `u (u - a)(1 - u)`.
    Bistable { a: T },
    Custom(ReactionFn<T>),
}

impl<T: Real> Reaction<T> {
    pub fn eval(&self, u: T, x: &[T]) -> T {
        match self {
            Reaction::Monostable { r } => *r * u * (T::one() - u),
            Reaction::Bistable { a } => u * (u - *a) * (T::one() - u),
            Reaction::Custom(f) => f(u, x),
        }
    }

    pub fn custom(f: impl Fn(T, &[T]) -> T + Send + Sync + 'static) -> Self {
        Reaction::Custom(Arc::new(f))
    }
}

impl<T: Real> fmt::Debug for Reaction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Monostable { r } => write!(f, "Monostable {{ r: {r} }}"),
            Reaction::Bistable { a } => write!(f, "Bistable {{ a: {a} }}"),
            Reaction::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MfhgSpec<T: Real = f64> {
    pub grid: Grid<T>,
    pub horizon: T,
    pub steps: usize,
    /// Agent diffusivity `ν`.
    pub nu: T,
    /// Fish diffusivity `μ`.
    pub mu: T,
    pub reaction: Reaction<T>,
    pub u0: Field<T>,
    /// Agent density, `∫ m0 = 1`.
    pub m0: Field<T>,
    /// `d` in `+ d div(m∇V)`.
    pub drift_sign: T,
    /// `s` in `+ s (u² + |∇V|²)`.
    pub hjb_sign: T,
    /// Rejects bistable reactions with `a ∉ (0, 1/2)`.
    pub require_invasion: bool,
    /// Picard damping `ω ∈ (0, 1]`.
    pub sweep_damping: T,
    pub sweep_tol: T,
    pub max_sweeps: usize,
    pub linear: LinearOptions<T>,
}

impl<T: Real> MfhgSpec<T> {
    /// Unit diffusivities, monostable `u(1 - u)`, and the default sweep
    /// settings (`ω = 0.5`, tolerance 1e-6, 200 sweeps).
    pub fn new(grid: &Grid<T>, horizon: T, steps: usize, u0: Field<T>, m0: Field<T>) -> Result<Self> {
        let spec = MfhgSpec {
            grid: *grid,
            horizon,
            steps,
            nu: T::one(),
            mu: T::one(),
            reaction: Reaction::Monostable { r: T::one() },
            u0,
            m0,
            drift_sign: T::one(),
            hjb_sign: T::one(),
            require_invasion: false,
            sweep_damping: T::lit(0.5),
            sweep_tol: T::floor_tol(1e-6),
            max_sweeps: 200,
            linear: LinearOptions::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dt(&self) -> T {
        self.horizon / T::count(self.steps)
    }

    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.steps == 0 || !(self.horizon > T::zero()) {
            return bad(format!(
                "need a positive horizon and steps, got T = {} with {} steps",
                self.horizon, self.steps
            ));
        }
        if !(self.nu > T::zero()) || !(self.mu > T::zero()) {
            return bad(format!("diffusivities must be positive (ν = {}, μ = {})", self.nu, self.mu));
        }
        if self.u0.grid() != &self.grid || self.m0.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if self.u0.min() < T::zero() || self.m0.min() < T::zero() {
            return bad("initial densities must be nonnegative".into());
        }
        let mass = self.m0.integral();
        if (mass - T::one()).abs() > T::floor_tol(1e-10) {
            return bad(format!("agent density must integrate to 1, got {mass}"));
        }
        if !(self.sweep_damping > T::zero() && self.sweep_damping <= T::one()) {
            return bad(format!("sweep damping must lie in (0, 1], got {}", self.sweep_damping));
        }
        if self.require_invasion {
            if let Reaction::Bistable { a } = self.reaction {
                if !(a > T::zero() && a < T::lit(0.5)) {
                    return bad(format!("bistable threshold {a} does not give invasion"));
                }
            }
        }
        Ok(())
    }
}

/// Converged (or last) Picard iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct MfhgState<T: Real = f64> {
    pub v: TimeSeries<T>,
    pub m: TimeSeries<T>,
    pub u: TimeSeries<T>,
    pub sweeps_used: usize,
    /// `max_t ‖m^{k+1} - m^k‖_{L²}` of the last sweep.
    pub sweep_residual: T,
    pub converged: bool,
}

impl<T: Real> MfhgState<T> {
    /// Rows `t,x[,y],V,m,u` for every `stride`-th level and the last one.
    pub fn write_slices<W: Write>(&self, mut out: W, stride: usize) -> io::Result<()> {
        let grid = self.v.grid();
        let coords = if grid.dim() == 1 { "x" } else { "x,y" };
        writeln!(out, "t,{coords},V,m,u")?;
        let last = self.v.len() - 1;
        let stride = stride.max(1);
        let levels = (0..=last).filter(|n| n % stride == 0 || *n == last);
        for n in levels {
            let t = fmt_sci(self.v.time(n).as_f64());
            for idx in 0..grid.len() {
                let p = grid.coords(idx);
                let mut line = t.clone();
                for c in &p[..grid.dim()] {
                    line.push(',');
                    line.push_str(&fmt_sci(c.as_f64()));
                }
                for series in [&self.v, &self.m, &self.u] {
                    line.push(',');
                    line.push_str(&fmt_sci(series.at(n).values()[idx].as_f64()));
                }
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    }
}

const BLOWUP: f64 = 1e6;

fn squared_gradient<T: Real>(grad: &VectorField<T>) -> Vec<T> {
    let n = grad[0].len();
    (0..n)
        .map(|i| grad.iter().map(|g| g.values()[i] * g.values()[i]).sum())
        .collect()
}

fn check_levels<T: Real>(spec: &MfhgSpec<T>, series: &TimeSeries<T>, what: &str) -> Result<()> {
    if series.len() != spec.levels() {
        return Err(Error::InvalidParameter(format!(
            "{what} has {} levels, expected {}",
            series.len(),
            spec.levels()
        )));
    }
    if series.grid() != &spec.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Backward sweep from `V(T) = 0`:
/// `(I - νΔtΔ) V^n = V^{n+1} - s Δt (u_{n+1}² + |∇V^{n+1}|²)`.
pub fn hjb_backward<T: Real>(spec: &MfhgSpec<T>, u: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    spec.validate()?;
    check_levels(spec, u, "fish density")?;
    let dt = spec.dt();
    let op = ShiftedLaplacian::implicit_step(&spec.grid, spec.nu * dt);
    let mut levels = vec![Field::zeros(&spec.grid); spec.levels()];
    for n in (0..spec.steps).rev() {
        let next = &levels[n + 1];
        let grad2 = squared_gradient(&next.gradient());
        let rhs: Vec<T> = next
            .values()
            .iter()
            .zip(u.at(n + 1).values())
            .zip(&grad2)
            .map(|((v, u), g2)| *v - spec.hjb_sign * dt * (*u * *u + *g2))
            .collect();
        let v = op.solve(&rhs, false, &spec.linear)?;
        let field = Field::checked(&spec.grid, v, "value function")?;
        if field.sup_norm() > T::lit(BLOWUP) {
            return Err(Error::BlowUp {
                stage: "hjb",
                time: u.time(n).as_f64(),
            });
        }
        levels[n] = field;
    }
    TimeSeries::new(dt, levels)
}

/// Upwind drift divergence `div(m w)` with edge velocities
/// `w = d (V_{j} - V_{i}) / h`, divided by the dual-cell widths. Returns the
/// divergence and the largest edge speed.
fn drift_divergence<T: Real>(grid: &Grid<T>, m: &[T], v: &[T], sign: T) -> (Vec<T>, T) {
    let mut div = vec![T::zero(); grid.len()];
    let mut max_speed = T::zero();
    for k in 0..grid.dim() {
        let ax = grid.axis(k);
        let h = ax.spacing();
        let stride = grid.stride(k);
        for idx in 0..grid.len() {
            let i = grid.axis_index(idx, k);
            if i + 1 == ax.nodes {
                continue;
            }
            let j = idx + stride;
            let w = sign * (v[j] - v[idx]) / h;
            max_speed = max_speed.max(w.abs());
            let flux = if w > T::zero() { w * m[idx] } else { w * m[j] };
            div[idx] += flux / ax.weight(i);
            div[j] -= flux / ax.weight(i + 1);
        }
    }
    (div, max_speed)
}

/// Forward Fokker-Planck sweep from `m0`: explicit upwind drift, then
/// `(I - νΔtΔ) m^{n+1} = m^*`.
pub fn fp_forward<T: Real>(spec: &MfhgSpec<T>, v: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    spec.validate()?;
    check_levels(spec, v, "value function")?;
    let grid = &spec.grid;
    let dt = spec.dt();
    let op = ShiftedLaplacian::implicit_step(grid, spec.nu * dt);
    let min_h = grid
        .axes()
        .iter()
        .map(|a| a.spacing())
        .fold(T::infinity(), T::min);
    let mut warned = false;
    let mut levels = Vec::with_capacity(spec.levels());
    levels.push(spec.m0.clone());
    for n in 0..spec.steps {
        let m = levels[n].values();
        let (div, speed) = drift_divergence(grid, m, v.at(n).values(), spec.drift_sign);
        if !warned && speed * dt > min_h {
            log::warn!(
                "fokker-planck step Δt = {dt} exceeds h / max|∇V| = {}; positivity not guaranteed",
                min_h / speed
            );
            warned = true;
        }
        let star: Vec<T> = m.iter().zip(&div).map(|(m, d)| *m - dt * *d).collect();
        let mass = grid.mean_of(&star);
        let mut next = op.solve(&star, false, &spec.linear)?;
        // the implicit step conserves mass exactly in exact arithmetic;
        // remove what the iterative solver leaves behind
        let drift = mass - grid.mean_of(&next);
        let tol = T::lit(1e-12) * T::one().max(mass.abs());
        for x in next.iter_mut() {
            *x += drift;
            if *x < T::zero() {
                if *x < -tol {
                    return Err(Error::NegativeMass {
                        value: x.as_f64(),
                        time: v.time(n + 1).as_f64(),
                    });
                }
                *x = T::zero();
            }
        }
        levels.push(Field::checked(grid, next, "agent density")?);
    }
    TimeSeries::new(dt, levels)
}

fn fish_step<T: Real>(
    spec: &MfhgSpec<T>,
    op: &ShiftedLaplacian<T>,
    u: &Field<T>,
    m: Option<&Field<T>>,
    time: T,
) -> Result<Field<T>> {
    let dt = spec.dt();
    let grid = &spec.grid;
    let rhs: Vec<T> = (0..grid.len())
        .map(|i| {
            let p = grid.coords(i);
            let ui = u.values()[i];
            let harvest = m.map_or(T::zero(), |m| m.values()[i] * ui * ui);
            ui + dt * (spec.reaction.eval(ui, &p[..grid.dim()]) - harvest)
        })
        .collect();
    let next: Vec<T> = op
        .solve(&rhs, false, &spec.linear)?
        .into_iter()
        .map(|x| x.max(T::zero()))
        .collect();
    let field = Field::checked(grid, next, "fish density")?;
    if field.sup_norm() > T::lit(BLOWUP) {
        return Err(Error::BlowUp {
            stage: "fish",
            time: time.as_f64(),
        });
    }
    Ok(field)
}

/// Forward fish sweep from `u0`:
/// `(I - μΔtΔ) u^{n+1} = u^n + Δt (f(u^n) - m^n (u^n)²)`, clipped at zero.
pub fn fish_forward<T: Real>(spec: &MfhgSpec<T>, m: &TimeSeries<T>) -> Result<TimeSeries<T>> {
    spec.validate()?;
    check_levels(spec, m, "agent density")?;
    let mut levels = Vec::with_capacity(spec.levels());
    fish_observe(spec, Some(m), |_, u| levels.push(u.clone()))?;
    TimeSeries::new(spec.dt(), levels)
}

/// Runs the fish sweep and hands each level to `observe` instead of
/// storing it.
fn fish_observe<T: Real>(
    spec: &MfhgSpec<T>,
    m: Option<&TimeSeries<T>>,
    mut observe: impl FnMut(usize, &Field<T>),
) -> Result<()> {
    let op = ShiftedLaplacian::implicit_step(&spec.grid, spec.mu * spec.dt());
    let mut u = spec.u0.clone();
    observe(0, &u);
    for n in 0..spec.steps {
        let t = T::count(n + 1) * spec.dt();
        u = fish_step(spec, &op, &u, m.map(|m| m.at(n)), t)?;
        observe(n + 1, &u);
    }
    Ok(())
}

/// Damped Picard iteration on the circular coupling
/// `m → u = fish(m) → V = hjb(u) → m' = ω fp(V) + (1 - ω) m`, started from
/// the pure diffusion of `m0`. The returned `u` and `V` are recomputed from
/// the final `m`.
pub fn mfhg_solve<T: Real>(spec: &MfhgSpec<T>) -> Result<MfhgState<T>> {
    spec.validate()?;
    let dt = spec.dt();
    let zero = TimeSeries::constant(dt, spec.levels(), &Field::zeros(&spec.grid));
    let mut m = fp_forward(spec, &zero).map_err(|e| e.in_stage("initial diffusion"))?;
    let w = spec.sweep_damping;
    let mut residual = T::infinity();
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < spec.max_sweeps {
        sweeps += 1;
        let stage = |name: &str| format!("sweep {sweeps}, {name}");
        let u = fish_forward(spec, &m).map_err(|e| e.in_stage(stage("fish")))?;
        let v = hjb_backward(spec, &u).map_err(|e| e.in_stage(stage("hjb")))?;
        let fresh = fp_forward(spec, &v).map_err(|e| e.in_stage(stage("fokker-planck")))?;
        let next: Vec<Field<T>> = fresh
            .fields()
            .iter()
            .zip(m.fields())
            .map(|(f, old)| f.zip_map(old, |a, b| w * a + (T::one() - w) * b))
            .collect();
        let next = TimeSeries::new(dt, next)?;
        residual = next.max_l2_distance(&m);
        m = next;
        log::debug!("picard sweep {sweeps}: residual {residual:e}");
        if residual <= spec.sweep_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("picard iteration stopped after {sweeps} sweeps, residual {residual:e}");
    }
    let u = fish_forward(spec, &m)?;
    let v = hjb_backward(spec, &u)?;
    Ok(MfhgState {
        v,
        m,
        u,
        sweeps_used: sweeps,
        sweep_residual: residual,
        converged,
    })
}

/// Maximisers of the Hamiltonian: `b = ∇V/2, α = u/2`, or with `rescaled`
/// the convention of the displayed system, `b = ∇V, α = u`.
pub fn optimal_feedback<T: Real>(
    v: &Field<T>,
    u: &Field<T>,
    rescaled: bool,
) -> Result<(VectorField<T>, Field<T>)> {
    if v.grid() != u.grid() {
        return Err(Error::GridMismatch);
    }
    let scale = if rescaled { T::one() } else { T::lit(0.5) };
    let b = v.gradient().iter().map(|g| g * scale).collect();
    Ok((b, u * scale))
}

/// Mirror `x` into `[lo, hi]`.
fn reflect<T: Real>(x: T, lo: T, hi: T) -> T {
    let len = hi - lo;
    let period = len + len;
    let mut y = (x - lo) % period;
    if y < T::zero() {
        y += period;
    }
    if y > len {
        y = period - y;
    }
    lo + y
}

/// Riemann sum `Σ_n [u(x_n, t_n) α_n - α_n² - |b_n|²] Δt` over the first
/// `steps` samples of a path. Positions outside the domain are reflected.
pub fn agent_payoff<T: Real>(
    spec: &MfhgSpec<T>,
    state: &MfhgState<T>,
    path: &[Vec<T>],
    b_path: &[Vec<T>],
    alpha_path: &[T],
) -> Result<T> {
    let n = spec.steps;
    if path.len() < n || b_path.len() < n || alpha_path.len() < n {
        return Err(Error::InvalidParameter(format!(
            "paths need at least {n} samples"
        )));
    }
    let dim = spec.grid.dim();
    let dt = spec.dt();
    let mut total = T::zero();
    for k in 0..n {
        if path[k].len() != dim || b_path[k].len() != dim {
            return Err(Error::InvalidParameter(format!(
                "path sample {k} has the wrong dimension"
            )));
        }
        let x: Vec<T> = path[k]
            .iter()
            .zip(spec.grid.axes())
            .map(|(x, ax)| reflect(*x, ax.lower, ax.upper))
            .collect();
        let u = state.u.at(k).sample(&x);
        let a = alpha_path[k];
        let b2: T = b_path[k].iter().map(|b| *b * *b).sum();
        total += (u * a - a * a - b2) * dt;
    }
    Ok(total)
}

/// Agent density used by [`front_speed`].
#[derive(Clone, Debug)]
pub enum Agents<T: Real = f64> {
    None,
    Given(TimeSeries<T>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontOptions<T> {
    pub threshold: T,
    /// Length in time of the trailing least-squares window.
    pub window: T,
    /// Record every `stride`-th level.
    pub stride: usize,
}

impl<T: Real> FrontOptions<T> {
    pub fn new(threshold: T, window: T) -> Self {
        FrontOptions {
            threshold,
            window,
            stride: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontSample<T> {
    pub t: T,
    pub position: T,
    /// Positive when the front advances into the empty region; NaN until
    /// two samples are available.
    pub speed: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontSeries<T: Real = f64> {
    pub samples: Vec<FrontSample<T>>,
    /// The front left the domain and the series was cut short.
    pub truncated: bool,
}

impl<T: Real> FrontSeries<T> {
    /// Speed estimate at the last recorded time.
    pub fn final_speed(&self) -> Option<T> {
        self.samples.last().map(|s| s.speed).filter(|s| s.is_finite())
    }

    /// `t,front_position,speed_estimate`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,front_position,speed_estimate")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{}",
                fmt_sci(s.t.as_f64()),
                fmt_sci(s.position.as_f64()),
                fmt_sci(s.speed.as_f64())
            )?;
        }
        Ok(())
    }
}

/// Threshold crossing nearest to the empty side, by linear interpolation.
/// `invades_right` says the populated region is on the left.
fn crossing<T: Real>(grid: &Grid<T>, u: &[T], level: T, invades_right: bool) -> Option<T> {
    let ax = grid.axis(0);
    let n = u.len();
    let at = |i: usize, j: usize| {
        let (a, b) = (u[i], u[j]);
        let s = (a - level) / (a - b);
        ax.coord(i) + s * (ax.coord(j) - ax.coord(i))
    };
    if invades_right {
        (0..n - 1).rev().find(|&i| u[i] >= level && u[i + 1] < level).map(|i| at(i, i + 1))
    } else {
        (1..n).find(|&i| u[i] >= level && u[i - 1] < level).map(|i| at(i, i - 1))
    }
}

fn ls_slope<T: Real>(pts: &[(T, T)]) -> T {
    let n = T::count(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<T>() / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (t, x) in pts {
        sxy += (*t - mt) * (*x - mx);
        sxx += (*t - mt) * (*t - mt);
    }
    sxy / sxx
}

/// Tracks the `threshold` level set of `u` on a 1D run (agents from
/// `agents`, or none) and estimates its speed by a least-squares slope over
/// a trailing window. The populated side is read from `u0`.
pub fn front_speed<T: Real>(
    spec: &MfhgSpec<T>,
    agents: &Agents<T>,
    opts: &FrontOptions<T>,
) -> Result<FrontSeries<T>> {
    spec.validate()?;
    if spec.grid.dim() != 1 {
        return Err(Error::InvalidParameter("front tracking needs a 1D grid".into()));
    }
    let m = match agents {
        Agents::None => None,
        Agents::Given(m) => {
            check_levels(spec, m, "agent density")?;
            Some(m)
        }
    };
    let u0 = spec.u0.values();
    let invades_right = u0[0] >= u0[u0.len() - 1];
    let orientation = if invades_right { T::one() } else { -T::one() };
    let ax = *spec.grid.axis(0);
    let edge = ax.spacing() * T::lit(2.0);
    let stride = opts.stride.max(1);

    let mut samples: Vec<FrontSample<T>> = Vec::new();
    let mut track: Vec<(T, T)> = Vec::new();
    let mut truncated = false;
    let mut observe = |n: usize, u: &Field<T>| {
        if truncated || !n.is_multiple_of(stride) {
            return;
        }
        let t = T::count(n) * spec.dt();
        let pos = crossing(&spec.grid, u.values(), opts.threshold, invades_right);
        let pos = match pos {
            Some(p) if p > ax.lower + edge && p < ax.upper - edge => p,
            _ => {
                if !samples.is_empty() {
                    log::warn!("front left the domain at t = {t}; series truncated");
                }
                truncated = !samples.is_empty();
                return;
            }
        };
        track.push((t, pos));
        let start = track.partition_point(|p| p.0 < t - opts.window);
        let window = &track[start..];
        let speed = if window.len() >= 2 {
            orientation * ls_slope(window)
        } else {
            T::nan()
        };
        samples.push(FrontSample {
            t,
            position: pos,
            speed,
        });
    };
    fish_observe(spec, m, &mut observe)?;
    Ok(FrontSeries { samples, truncated })
}
