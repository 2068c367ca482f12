//! Half-strip geometry, nodal field storage and the shared finite-difference
//! and quadrature kernels.
//!
//! The half-strip `[0, lx] x [0, ly)` carries `nx + 1` x-nodes (both ends
//! included) and `ny` periodic y-nodes. A fully periodic torus layout is
//! available for oracle tests; it drops the duplicate node at `x = lx`.
//!
//! Field storage is row-major with x fastest: `values[j * nxp + i]`.

use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// x in `[0, lx]` with boundary nodes at both ends, y periodic.
    HalfStrip,
    /// Periodic in both directions.
    Torus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    pub topology: Topology,
}

pub const MIN_NX: usize = 8;
pub const MIN_NY: usize = 4;

/// Builds a half-strip grid. See [`Grid::new`].
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
    Grid::new(nx, ny, lx, ly)
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        Self::build(nx, ny, lx, ly, Topology::HalfStrip)
    }

    pub fn torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid> {
        Self::build(nx, ny, lx, ly, Topology::Torus)
    }

    fn build(nx: usize, ny: usize, lx: f64, ly: f64, topology: Topology) -> Result<Grid> {
        if nx < MIN_NX {
            return Err(Error::InvalidGrid(format!("nx = {nx} < {MIN_NX}")));
        }
        if ny < MIN_NY {
            return Err(Error::InvalidGrid(format!("ny = {ny} < {MIN_NY}")));
        }
        if !(lx > 0.0 && lx.is_finite()) {
            return Err(Error::InvalidGrid(format!("lx = {lx} must be positive")));
        }
        if !(ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidGrid(format!("ly = {ly} must be positive")));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            topology,
        })
    }

    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }

    /// Number of stored x-nodes per row.
    pub fn nxp(&self) -> usize {
        match self.topology {
            Topology::HalfStrip => self.nx + 1,
            Topology::Torus => self.nx,
        }
    }

    pub fn len(&self) -> usize {
        self.nxp() * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nxp() + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.nxp()).map(|i| self.x(i)).collect()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.topology == other.topology
            && self.dx == other.dx
            && self.dy == other.dy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let nxp = grid.nxp();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            values.extend((0..nxp).map(|i| f(grid.x(i), y)));
        }
        ScalarField { grid, values }
    }

    /// A y-independent field built from one value per x-node.
    pub fn from_profile(grid: Grid, profile: &[f64]) -> Result<Self> {
        if profile.len() != grid.nxp() {
            return Err(Error::GridMismatch(format!(
                "profile has {} nodes, grid has {}",
                profile.len(),
                grid.nxp()
            )));
        }
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.ny {
            values.extend_from_slice(profile);
        }
        Ok(ScalarField { grid, values })
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.nxp();
        &self.values[j * n..(j + 1) * n]
    }

    /// Values along the column `x = x_i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.grid.ny).map(|j| self.get(i, j)).collect()
    }

    pub fn trace_at_wall(&self) -> BoundaryTrace {
        BoundaryTrace::new(self.column(0))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(
            self.grid.same_shape(&other.grid),
            "zip_map on fields of different grids"
        );
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// Largest deviation from the row average, over all x-nodes.
    pub fn max_y_variation(&self) -> f64 {
        let g = self.grid;
        (0..g.nxp())
            .map(|i| {
                let col = self.column(i);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.grid.nx, self.grid.ny, other.grid.nx, other.grid.ny
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub comp1: ScalarField,
    pub comp2: ScalarField,
}

impl VectorField {
    pub fn new(comp1: ScalarField, comp2: ScalarField) -> Result<Self> {
        comp1.check_same_grid(&comp2)?;
        Ok(VectorField { comp1, comp2 })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            comp1: ScalarField::zeros(grid),
            comp2: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.comp1.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.comp1.is_finite() && self.comp2.is_finite()
    }
}

/// Samples of a quantity along the wall `x = 0`, one per y-node.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub values: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(values: Vec<f64>) -> Self {
        BoundaryTrace { values }
    }

    pub fn constant(ny: usize, c: f64) -> Self {
        BoundaryTrace {
            values: vec![c; ny],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Second-order first derivative of uniformly spaced samples with one-sided
/// closures at both ends.
pub fn diff_1d(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 3 && out.len() == n);
    let inv2h = 0.5 / h;
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * inv2h;
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
}

/// Second-order second derivative with one-sided four-point closures.
pub fn diff2_1d(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 4 && out.len() == n);
    let inv = 1.0 / (h * h);
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * inv;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
    }
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv;
}

fn periodic_diff(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let inv2h = 0.5 / h;
    for i in 0..n {
        out[i] = (f[(i + 1) % n] - f[(i + n - 1) % n]) * inv2h;
    }
}

fn periodic_diff2(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let inv = 1.0 / (h * h);
    for i in 0..n {
        out[i] = (f[(i + 1) % n] - 2.0 * f[i] + f[(i + n - 1) % n]) * inv;
    }
}

/// Row-wise x-derivative.
pub fn ddx(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let mut out = ScalarField::zeros(g);
    let src = f.values();
    par::for_each_chunk(out.values_mut(), g.nxp(), |j, row| {
        let s = &src[j * g.nxp()..(j + 1) * g.nxp()];
        match g.topology {
            Topology::HalfStrip => diff_1d(s, g.dx, row),
            Topology::Torus => periodic_diff(s, g.dx, row),
        }
    });
    out
}

/// Periodic central y-derivative.
pub fn ddy(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let n = g.nxp();
    let mut out = ScalarField::zeros(g);
    let src = f.values();
    let inv2h = 0.5 / g.dy;
    par::for_each_chunk(out.values_mut(), n, |j, row| {
        let up = &src[((j + 1) % g.ny) * n..][..n];
        let dn = &src[((j + g.ny - 1) % g.ny) * n..][..n];
        for i in 0..n {
            row[i] = (up[i] - dn[i]) * inv2h;
        }
    });
    out
}

/// Second x-derivative with one-sided closures at the x-extremes.
pub fn ddxx(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let mut out = ScalarField::zeros(g);
    let src = f.values();
    par::for_each_chunk(out.values_mut(), g.nxp(), |j, row| {
        let s = &src[j * g.nxp()..(j + 1) * g.nxp()];
        match g.topology {
            Topology::HalfStrip => diff2_1d(s, g.dx, row),
            Topology::Torus => periodic_diff2(s, g.dx, row),
        }
    });
    out
}

/// Periodic three-point second y-derivative.
pub fn ddyy(f: &ScalarField) -> ScalarField {
    let g = *f.grid();
    let n = g.nxp();
    let mut out = ScalarField::zeros(g);
    let src = f.values();
    let inv = 1.0 / (g.dy * g.dy);
    par::for_each_chunk(out.values_mut(), n, |j, row| {
        let up = &src[((j + 1) % g.ny) * n..][..n];
        let mid = &src[j * n..][..n];
        let dn = &src[((j + g.ny - 1) % g.ny) * n..][..n];
        for i in 0..n {
            row[i] = (up[i] - 2.0 * mid[i] + dn[i]) * inv;
        }
    });
    out
}

/// Five-point Laplacian.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    ddxx(f).add(&ddyy(f))
}

/// Quadrature weight of x-node `i` (trapezoid on the half-strip).
#[inline]
pub fn x_weight(g: &Grid, i: usize) -> f64 {
    match g.topology {
        Topology::HalfStrip if i == 0 || i == g.nx => 0.5 * g.dx,
        _ => g.dx,
    }
}

/// Integral of `(1 + x)^alpha * f` over the domain: trapezoid in x,
/// rectangle rule in the periodic y-direction.
pub fn integrate2d(f: &ScalarField, weight_alpha: f64) -> f64 {
    let g = *f.grid();
    let weights: Vec<f64> = (0..g.nxp())
        .map(|i| x_weight(&g, i) * (1.0 + g.x(i)).powf(weight_alpha))
        .collect();
    let rows = par::map_range(g.ny, |j| {
        f.row(j)
            .iter()
            .zip(&weights)
            .map(|(v, w)| v * w)
            .sum::<f64>()
    });
    rows.into_iter().sum::<f64>() * g.dy
}

/// Weighted squared L2 norm `∬ (1+x)^alpha f^2`.
pub fn weighted_l2_sq(f: &ScalarField, alpha: f64) -> f64 {
    integrate2d(&f.map(|v| v * v), alpha)
}
