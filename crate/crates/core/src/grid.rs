//! Uniform node-centred grids on intervals and rectangles, nodal fields, and
//! the discrete operators used by every solver.
//!
//! Nodes include the boundary. Homogeneous Neumann conditions are imposed by
//! mirrored ghost nodes, so the boundary row of the Laplacian reads
//! `2 (f[1] - f[0]) / h^2`. Quadrature is the (tensorised) trapezoid rule; the
//! Laplacian is self-adjoint with respect to the trapezoid inner product,
//! which is what makes adjoint gradients and Rayleigh quotients exact at the
//! discrete level.
//!
//! In 2D nodes are stored row-major with `x` as the slow index:
//! `index = ix * ny + iy`.

use std::io::{self, Write};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One axis of a [`Grid`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis<T> {
    pub lower: T,
    pub upper: T,
    pub nodes: usize,
}

impl<T: Real> Axis<T> {
    #[inline]
    pub fn spacing(&self) -> T {
        (self.upper - self.lower) / T::count(self.nodes - 1)
    }

    #[inline]
    pub fn length(&self) -> T {
        self.upper - self.lower
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        self.lower + T::count(i) * self.spacing()
    }

    /// Trapezoid weight of node `i` (half a cell at the ends).
    #[inline]
    pub fn weight(&self, i: usize) -> T {
        let h = self.spacing();
        if i == 0 || i + 1 == self.nodes {
            h * T::lit(0.5)
        } else {
            h
        }
    }

    fn dummy() -> Self {
        Axis {
            lower: T::zero(),
            upper: T::one(),
            nodes: 1,
        }
    }
}

/// Uniform structured grid in one or two dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T: Real = f64> {
    dim: usize,
    axes: [Axis<T>; 2],
}

impl<T: Real> Grid<T> {
    /// Interval `[lower, upper]` with `nodes` nodes (boundary included).
    pub fn line(lower: T, upper: T, nodes: usize) -> Result<Self> {
        let axis = Self::checked_axis(lower, upper, nodes)?;
        Ok(Grid {
            dim: 1,
            axes: [axis, Axis::dummy()],
        })
    }

    /// Rectangle `[lower[0], upper[0]] x [lower[1], upper[1]]`.
    pub fn rect(lower: [T; 2], upper: [T; 2], nodes: [usize; 2]) -> Result<Self> {
        let ax = Self::checked_axis(lower[0], upper[0], nodes[0])?;
        let ay = Self::checked_axis(lower[1], upper[1], nodes[1])?;
        Ok(Grid {
            dim: 2,
            axes: [ax, ay],
        })
    }

    pub fn unit_interval(nodes: usize) -> Result<Self> {
        Self::line(T::zero(), T::one(), nodes)
    }

    pub fn unit_square(nodes: usize) -> Result<Self> {
        Self::rect([T::zero(); 2], [T::one(); 2], [nodes; 2])
    }

    fn checked_axis(lower: T, upper: T, nodes: usize) -> Result<Axis<T>> {
        if nodes < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nodes}"
            )));
        }
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::InvalidGrid(format!(
                "extent [{lower}, {upper}] must be finite with upper > lower"
            )));
        }
        Ok(Axis {
            lower,
            upper,
            nodes,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn axis(&self, k: usize) -> &Axis<T> {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes[..self.dim]
    }

    /// Total number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.axes[0].nodes * self.axes[1].nodes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self, k: usize) -> T {
        self.axes[k].spacing()
    }

    /// Measure of the domain.
    pub fn volume(&self) -> T {
        self.axes().iter().map(|a| a.length()).fold(T::one(), |p, l| p * l)
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.axes[1].nodes + iy
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> (usize, usize) {
        let ny = self.axes[1].nodes;
        (idx / ny, idx % ny)
    }

    /// Coordinates of node `idx`; the second entry is zero in 1D.
    pub fn coords(&self, idx: usize) -> [T; 2] {
        let (ix, iy) = self.multi_index(idx);
        if self.dim == 1 {
            [self.axes[0].coord(ix), T::zero()]
        } else {
            [self.axes[0].coord(ix), self.axes[1].coord(iy)]
        }
    }

    /// Trapezoid weight of node `idx`; the weights sum to [`Grid::volume`].
    #[inline]
    pub fn weight(&self, idx: usize) -> T {
        let (ix, iy) = self.multi_index(idx);
        let wx = self.axes[0].weight(ix);
        if self.dim == 1 {
            wx
        } else {
            wx * self.axes[1].weight(iy)
        }
    }

    pub fn weights(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Stride between neighbours along axis `k` in the flat layout.
    #[inline]
    pub(crate) fn stride(&self, k: usize) -> usize {
        if k == 0 {
            self.axes[1].nodes
        } else {
            1
        }
    }

    /// Index along axis `k` of node `idx`.
    #[inline]
    pub(crate) fn axis_index(&self, idx: usize, k: usize) -> usize {
        let (ix, iy) = self.multi_index(idx);
        if k == 0 {
            ix
        } else {
            iy
        }
    }

    /// `dst = Δ_h src` with mirrored-ghost Neumann boundaries.
    pub(crate) fn laplacian_into(&self, src: &[T], dst: &mut [T]) {
        debug_assert_eq!(src.len(), self.len());
        debug_assert_eq!(dst.len(), self.len());
        dst.iter_mut().for_each(|d| *d = T::zero());
        let two = T::lit(2.0);
        for k in 0..self.dim {
            let n = self.axes[k].nodes;
            let s = self.stride(k);
            let inv_h2 = T::one() / (self.spacing(k) * self.spacing(k));
            for (idx, d) in dst.iter_mut().enumerate() {
                let i = self.axis_index(idx, k);
                let c = src[idx];
                let term = if i == 0 {
                    two * (src[idx + s] - c)
                } else if i + 1 == n {
                    two * (src[idx - s] - c)
                } else {
                    src[idx - s] - two * c + src[idx + s]
                };
                *d += term * inv_h2;
            }
        }
    }

    /// `⨍ f g` for raw node vectors.
    pub(crate) fn inner(&self, f: &[T], g: &[T]) -> T {
        let s: T = f
            .iter()
            .zip(g)
            .enumerate()
            .map(|(i, (a, b))| self.weight(i) * *a * *b)
            .sum();
        s / self.volume()
    }

    pub(crate) fn mean_of(&self, f: &[T]) -> T {
        let s: T = f.iter().enumerate().map(|(i, v)| self.weight(i) * *v).sum();
        s / self.volume()
    }

    /// `⨍ |∇_h f|^2` summed edge by edge; equals `⨍ f (-Δ_h f)` exactly.
    pub(crate) fn dirichlet_energy_of(&self, f: &[T]) -> T {
        let mut total = T::zero();
        for k in 0..self.dim {
            let s = self.stride(k);
            let h = self.spacing(k);
            let other = 1 - k;
            for idx in 0..self.len() {
                if self.axis_index(idx, k) + 1 == self.axes[k].nodes {
                    continue;
                }
                let d = (f[idx + s] - f[idx]) / h;
                let transverse = if self.dim == 1 {
                    T::one()
                } else {
                    self.axes[other].weight(self.axis_index(idx, other))
                };
                total += d * d * h * transverse;
            }
        }
        total / self.volume()
    }
}

/// Scalar function sampled at the nodes of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T: Real = f64> {
    grid: Grid<T>,
    values: Vec<T>,
}

/// One component per axis.
pub type VectorField<T = f64> = Vec<Field<T>>;

impl<T: Real> Field<T> {
    pub fn new(grid: &Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field {
            grid: *grid,
            values,
        })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_vec(grid: &Grid<T>, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field {
            grid: *grid,
            values,
        }
    }

    pub(crate) fn checked(grid: &Grid<T>, values: Vec<T>, what: &'static str) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        Ok(Self::from_vec(grid, values))
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Samples `f` at every node; `f` receives the node coordinates
    /// (`dim` entries).
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(&[T]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.coords(i);
                f(&p[..grid.dim()])
            })
            .collect();
        Self::from_vec(grid, values)
    }

    /// `value` times the indicator of `{a <= x <= b}` (x = first axis),
    /// averaged over each node's dual cell so that the trapezoid integral is
    /// exactly `value * |[a, b] ∩ domain| * (transverse extent)`.
    pub fn indicator_interval(grid: &Grid<T>, a: T, b: T, value: T) -> Self {
        let ax = grid.axis(0);
        let h = ax.spacing();
        let half = h * T::lit(0.5);
        let fractions: Vec<T> = (0..ax.nodes)
            .map(|i| {
                let x = ax.coord(i);
                let lo = if i == 0 { x } else { x - half };
                let hi = if i + 1 == ax.nodes { x } else { x + half };
                let overlap = (hi.min(b) - lo.max(a)).max(T::zero());
                overlap / (hi - lo)
            })
            .collect();
        let values = (0..grid.len())
            .map(|idx| value * fractions[grid.axis_index(idx, 0)])
            .collect();
        Self::from_vec(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_vec(&self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Self::from_vec(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        )
    }

    pub fn hadamard(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn clamp(&self, lo: T, hi: T) -> Self {
        self.map(|v| v.max(lo).min(hi))
    }

    /// Average `⨍ f` (trapezoid rule).
    pub fn mean(&self) -> T {
        self.grid.mean_of(&self.values)
    }

    /// `∫ f`.
    pub fn integral(&self) -> T {
        self.mean() * self.grid.volume()
    }

    /// `⨍ f g`.
    pub fn inner(&self, other: &Self) -> T {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        self.grid.inner(&self.values, &other.values)
    }

    /// `(∫ f^2)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        (self.inner(self) * self.grid.volume()).sqrt()
    }

    /// `∫ |f|`.
    pub fn l1_norm(&self) -> T {
        self.map(|v| v.abs()).integral()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Discrete Laplacian with homogeneous Neumann boundaries.
    pub fn laplacian(&self) -> Self {
        let mut out = vec![T::zero(); self.len()];
        self.grid.laplacian_into(&self.values, &mut out);
        Self::from_vec(&self.grid, out)
    }

    /// Central differences inside, second-order one-sided differences on
    /// the boundary; one component per axis.
    pub fn gradient(&self) -> VectorField<T> {
        let g = &self.grid;
        let f = &self.values;
        (0..g.dim())
            .map(|k| {
                let n = g.axis(k).nodes;
                let s = g.stride(k);
                let h2 = g.spacing(k) * T::lit(2.0);
                let (three, four) = (T::lit(3.0), T::lit(4.0));
                let values = (0..g.len())
                    .map(|idx| {
                        let i = g.axis_index(idx, k);
                        if i == 0 {
                            (-three * f[idx] + four * f[idx + s] - f[idx + 2 * s]) / h2
                        } else if i + 1 == n {
                            (three * f[idx] - four * f[idx - s] + f[idx - 2 * s]) / h2
                        } else {
                            (f[idx + s] - f[idx - s]) / h2
                        }
                    })
                    .collect();
                Self::from_vec(g, values)
            })
            .collect()
    }

    /// `⨍ |∇_h f|^2` in the edge form consistent with [`Field::laplacian`].
    pub fn dirichlet_energy(&self) -> T {
        self.grid.dirichlet_energy_of(&self.values)
    }

    /// Multilinear interpolation at `point`; points outside the domain are
    /// clamped onto it.
    pub fn sample(&self, point: &[T]) -> T {
        let g = &self.grid;
        let locate = |k: usize| -> (usize, T) {
            let ax = g.axis(k);
            let x = point[k].max(ax.lower).min(ax.upper);
            let s = (x - ax.lower) / ax.spacing();
            let i = s.floor().to_usize().unwrap_or(0).min(ax.nodes - 2);
            (i, s - T::count(i))
        };
        let (ix, tx) = locate(0);
        if g.dim() == 1 {
            let v = &self.values;
            return v[ix] * (T::one() - tx) + v[ix + 1] * tx;
        }
        let (iy, ty) = locate(1);
        let v = |i: usize, j: usize| self.values[g.index(i, j)];
        let one = T::one();
        v(ix, iy) * (one - tx) * (one - ty)
            + v(ix + 1, iy) * tx * (one - ty)
            + v(ix, iy + 1) * (one - tx) * ty
            + v(ix + 1, iy + 1) * tx * ty
    }

    /// CSV dump: `x[,y],value`, one node per line in storage order.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_csv_columns(out, &self.grid, &["value"], &[self])
    }
}

/// Writes coordinates followed by one column per field, 17 significant
/// digits, storage (row-major) order.
pub fn write_csv_columns<T: Real, W: Write>(
    mut out: W,
    grid: &Grid<T>,
    names: &[&str],
    columns: &[&Field<T>],
) -> io::Result<()> {
    assert_eq!(names.len(), columns.len());
    let mut header = if grid.dim() == 1 { "x" } else { "x,y" }.to_string();
    for n in names {
        header.push(',');
        header.push_str(n);
    }
    writeln!(out, "{header}")?;
    for idx in 0..grid.len() {
        let p = grid.coords(idx);
        let mut line = String::new();
        for c in &p[..grid.dim()] {
            line.push_str(&fmt_sci(c.as_f64()));
            line.push(',');
        }
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&fmt_sci(col.values[idx].as_f64()));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// 17 significant digits, round-trippable.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.16e}")
}

impl<T: Real> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<T> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: T) -> Field<T> {
        self.map(|a| a * rhs)
    }
}

impl<T: Real> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.map(|a| -a)
    }
}

/// Sum of fields; `None` for an empty slice.
pub fn sum_fields<T: Real>(fields: &[Field<T>]) -> Option<Field<T>> {
    let (first, rest) = fields.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, f| &acc + f))
}
