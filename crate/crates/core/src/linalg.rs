//! Linear solves for `A w = s·(-Δ_h w) + d∘w` with Neumann boundaries.
//!
//! `A` is self-adjoint in the trapezoid inner product `<f, g>_W`. In 1D the
//! system is tridiagonal and solved directly; the pivots of the elimination
//! are all positive exactly when `A` is positive definite, which gives a free
//! definiteness check. In 2D a Jacobi-preconditioned conjugate gradient in
//! the `W` inner product is used.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

/// Stopping rule for iterative solves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearOptions<T> {
    /// Relative residual `‖b - Ax‖_W / ‖b‖_W`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for LinearOptions<T> {
    fn default() -> Self {
        LinearOptions {
            tol: T::floor_tol(1e-12),
            max_iter: 20_000,
        }
    }
}

/// `w ↦ diffusion·(-Δ_h w) + diag∘w`.
#[derive(Clone, Debug)]
pub struct ShiftedLaplacian<T: Real> {
    grid: Grid<T>,
    diffusion: T,
    diag: Vec<T>,
}

impl<T: Real> ShiftedLaplacian<T> {
    pub fn new(grid: &Grid<T>, diffusion: T, diag: Vec<T>) -> Self {
        assert_eq!(diag.len(), grid.len());
        ShiftedLaplacian {
            grid: *grid,
            diffusion,
            diag,
        }
    }

    /// `-μΔ - potential`.
    pub fn reaction(grid: &Grid<T>, mu: T, potential: &[T]) -> Self {
        Self::new(grid, mu, potential.iter().map(|c| -*c).collect())
    }

    /// `I - τΔ`, the implicit diffusion step.
    pub fn implicit_step(grid: &Grid<T>, tau: T) -> Self {
        Self::new(grid, tau, vec![T::one(); grid.len()])
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.apply_into(x, &mut out);
        out
    }

    fn apply_into(&self, x: &[T], out: &mut [T]) {
        self.grid.laplacian_into(x, out);
        for ((o, xi), d) in out.iter_mut().zip(x).zip(&self.diag) {
            *o = -self.diffusion * *o + *d * *xi;
        }
    }

    fn diagonal(&self) -> Vec<T> {
        let lap_diag: T = self
            .grid
            .axes()
            .iter()
            .map(|a| T::lit(2.0) / (a.spacing() * a.spacing()))
            .sum();
        self.diag
            .iter()
            .map(|d| self.diffusion * lap_diag + *d)
            .collect()
    }

    /// Solves `A x = rhs`. With `require_spd` the solve fails with
    /// [`Error::Indefinite`] when `A` is not positive definite.
    pub fn solve(&self, rhs: &[T], require_spd: bool, opts: &LinearOptions<T>) -> Result<Vec<T>> {
        if self.grid.dim() == 1 {
            self.solve_tridiagonal(rhs, require_spd)
        } else {
            self.solve_pcg(rhs, false, opts)
        }
    }

    /// Pure Neumann problem with `diag ≡ 0`: solves on the zero-mean
    /// subspace. `rhs` must already have zero mean.
    pub fn solve_zero_mean(&self, rhs: &[T], opts: &LinearOptions<T>) -> Result<Vec<T>> {
        self.solve_pcg(rhs, true, opts)
    }

    fn solve_tridiagonal(&self, rhs: &[T], require_spd: bool) -> Result<Vec<T>> {
        let n = self.grid.len();
        let h = self.grid.spacing(0);
        let k = self.diffusion / (h * h);
        let two = T::lit(2.0);
        let sub = |i: usize| if i + 1 == n { -two * k } else { -k };
        let sup = |i: usize| if i == 0 { -two * k } else { -k };
        let main = |i: usize| two * k + self.diag[i];

        let mut cp = vec![T::zero(); n];
        let mut dp = vec![T::zero(); n];
        let mut pivot = main(0);
        for i in 0..n {
            if i > 0 {
                pivot = main(i) - sub(i) * cp[i - 1];
            }
            if !pivot.is_finite() || pivot == T::zero() {
                return Err(Error::LinearSolve {
                    iterations: i,
                    residual: f64::INFINITY,
                });
            }
            if require_spd && pivot <= T::zero() {
                return Err(Error::Indefinite);
            }
            cp[i] = if i + 1 < n { sup(i) / pivot } else { T::zero() };
            dp[i] = if i == 0 {
                rhs[0] / pivot
            } else {
                (rhs[i] - sub(i) * dp[i - 1]) / pivot
            };
        }
        let mut x = dp;
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= cp[i] * next;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal solve"));
        }
        Ok(x)
    }

    fn solve_pcg(&self, rhs: &[T], zero_mean: bool, opts: &LinearOptions<T>) -> Result<Vec<T>> {
        let g = &self.grid;
        let n = g.len();
        let dot = |a: &[T], b: &[T]| g.inner(a, b);
        let project = |v: &mut [T]| {
            if zero_mean {
                let m = g.mean_of(v);
                v.iter_mut().for_each(|x| *x -= m);
            }
        };
        let inv_diag: Vec<T> = self.diagonal().iter().map(|d| T::one() / *d).collect();
        if inv_diag.iter().any(|d| !d.is_finite() || *d <= T::zero()) {
            return Err(Error::Indefinite);
        }

        let mut b = rhs.to_vec();
        let raw_norm = dot(&b, &b).sqrt();
        project(&mut b);
        let b_norm = dot(&b, &b).sqrt();
        let mut x = vec![T::zero(); n];
        // a right-hand side that projects to round-off is zero
        if b_norm <= T::lit(64.0) * T::epsilon() * raw_norm {
            return Ok(x);
        }
        let mut r = b;
        let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(a, d)| *a * *d).collect();
        project(&mut z);
        let mut p = z.clone();
        let mut rho = dot(&r, &z);
        let mut q = vec![T::zero(); n];
        let mut res = T::one();
        for it in 0..opts.max_iter {
            self.apply_into(&p, &mut q);
            project(&mut q);
            let pq = dot(&p, &q);
            if !(pq > T::zero()) {
                return Err(Error::Indefinite);
            }
            let alpha = rho / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            res = dot(&r, &r).sqrt() / b_norm;
            if res <= opts.tol {
                project(&mut x);
                log::trace!("pcg converged in {} iterations", it + 1);
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            project(&mut z);
            let rho_new = dot(&r, &z);
            let beta = rho_new / rho;
            rho = rho_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::LinearSolve {
            iterations: opts.max_iter,
            residual: res.as_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(op: &ShiftedLaplacian<f64>, x: &[f64], b: &[f64]) -> f64 {
        op.apply(x)
            .iter()
            .zip(b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn tridiagonal_and_pcg_agree() {
        let g1: Grid = Grid::unit_interval(41).unwrap();
        let diag: Vec<f64> = (0..41).map(|i| 0.5 + 0.01 * i as f64).collect();
        let op = ShiftedLaplacian::new(&g1, 0.3, diag);
        let b: Vec<f64> = (0..41).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let direct = op.solve(&b, true, &LinearOptions::default()).unwrap();
        let cg = op.solve_pcg(&b, false, &LinearOptions::default()).unwrap();
        assert!(residual(&op, &direct, &b) < 1e-9);
        for (a, c) in direct.iter().zip(&cg) {
            assert!((a - c).abs() < 1e-9);
        }
    }

    #[test]
    fn pcg_2d_residual() {
        let g: Grid = Grid::rect([0.0, 0.0], [1.0, 2.0], [17, 21]).unwrap();
        let n = g.len();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let op = ShiftedLaplacian::new(&g, 0.7, diag);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = op.solve(&b, true, &LinearOptions::default()).unwrap();
        assert!(residual(&op, &x, &b) < 1e-8);
    }

    #[test]
    fn detects_indefinite_operator() {
        let g: Grid = Grid::unit_interval(21).unwrap();
        // -Δ - 20 has a negative eigenvalue on (0,1) with Neumann ends
        let op = ShiftedLaplacian::new(&g, 1.0, vec![-20.0; 21]);
        let b = vec![1.0; 21];
        assert_eq!(
            op.solve(&b, true, &LinearOptions::default()),
            Err(Error::Indefinite)
        );
        let g2: Grid = Grid::unit_square(9).unwrap();
        let op2 = ShiftedLaplacian::new(&g2, 1.0, vec![-30.0; 81]);
        assert!(op2.solve(&vec![1.0; 81], true, &LinearOptions::default()).is_err());
    }

    #[test]
    fn zero_mean_poisson() {
        let g: Grid = Grid::unit_interval(33).unwrap();
        let op = ShiftedLaplacian::new(&g, 1.0, vec![0.0; 33]);
        let b: Vec<f64> = (0..33)
            .map(|i| (std::f64::consts::PI * i as f64 / 32.0).cos())
            .collect();
        let x = op.solve_zero_mean(&b, &LinearOptions::default()).unwrap();
        assert!(g.mean_of(&x).abs() < 1e-13);
        assert!(residual(&op, &x, &b) < 1e-9);
        let flat = op.solve_zero_mean(&[5.5e-17; 33], &LinearOptions::default()).unwrap();
        assert!(flat.iter().all(|v| *v == 0.0));
    }
}
