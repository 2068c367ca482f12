//! Elliptic part: given `u`, recover `r = div q` from
//!
//! ```text
//! (I - Δ) r = -Δ u
//! ```
//!
//! (the divergence of `-grad div q + q + grad u = 0`), then `q = grad r - grad u`.
//!
//! The half-strip solver transforms in the periodic y-direction and solves one
//! real symmetric positive definite tridiagonal system in x per Fourier mode.
//! The discrete operator is exactly the five-point stencil of
//! [`crate::grid::laplacian`], so the fast path and the dense assembly in
//! [`dense_direct_oracle`] agree to round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ddx, ddy, laplacian, BoundaryTrace, Grid, ScalarField, VectorField};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    /// `r(0, y) = -f'(u_minus) u_x(0, y)`, the trace implied by the evolution
    /// equation at a Dirichlet wall.
    Compatibility,
    /// `r(0, y) = 0`.
    Homogeneous,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticBC {
    pub kind: BcKind,
    /// `f'(u_minus)`; only read by the compatibility closure.
    pub wall_speed: f64,
}

impl EllipticBC {
    pub fn compatibility(wall_speed: f64) -> Self {
        EllipticBC {
            kind: BcKind::Compatibility,
            wall_speed,
        }
    }

    pub fn homogeneous() -> Self {
        EllipticBC {
            kind: BcKind::Homogeneous,
            wall_speed: 0.0,
        }
    }

    /// Wall trace of `r` for the given `u`.
    pub fn wall_trace(&self, u: &ScalarField) -> BoundaryTrace {
        let g = u.grid();
        match self.kind {
            BcKind::Homogeneous => BoundaryTrace::constant(g.ny, 0.0),
            BcKind::Compatibility => BoundaryTrace::new(
                (0..g.ny)
                    .map(|j| {
                        let ux = (-3.0 * u.get(0, j) + 4.0 * u.get(1, j) - u.get(2, j)) / (2.0 * g.dx);
                        -self.wall_speed * ux
                    })
                    .collect(),
            ),
        }
    }
}

/// Discrete y-wavenumber squared of the three-point stencil.
fn discrete_k2(m: usize, n: usize, h: f64) -> f64 {
    let s = (PI * m as f64 / n as f64).sin();
    4.0 * s * s / (h * h)
}

/// Solves `a x_{i-1} + d x_i + a x_{i+1} = rhs_i` in place (constant
/// coefficients, Dirichlet values already folded into `rhs`). Returns the
/// smallest pivot.
fn thomas_constant(d: f64, a: f64, rhs: &mut [Complex64], work: &mut Vec<f64>) -> f64 {
    let n = rhs.len();
    work.clear();
    work.resize(n, 0.0);
    let mut min_pivot = f64::INFINITY;
    let mut pivot = d;
    min_pivot = min_pivot.min(pivot);
    work[0] = a / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = d - a * work[i - 1];
        min_pivot = min_pivot.min(pivot);
        work[i] = a / pivot;
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - prev * a) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * work[i];
    }
    min_pivot
}

/// Fast half-strip solver with cached FFT plans for one grid.
pub struct HalfStripSolver {
    grid: Grid,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
}

impl std::fmt::Debug for HalfStripSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HalfStripSolver").field("grid", &self.grid).finish()
    }
}

impl HalfStripSolver {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.is_torus() {
            return Err(Error::GridMismatch("half-strip solver needs a half-strip grid".into()));
        }
        if !grid.ny.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("ny = {} is not a power of two", grid.ny)));
        }
        let mut planner = FftPlanner::new();
        Ok(HalfStripSolver {
            grid,
            fft: planner.plan_fft_forward(grid.ny),
            ifft: planner.plan_fft_inverse(grid.ny),
            k2: (0..grid.ny).map(|m| discrete_k2(m, grid.ny, grid.dy)).collect(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Solves `(I - Δ) r = rhs` at interior nodes with Dirichlet traces
    /// `left` at `x = 0` and `right` at `x = lx`. `rhs` is read at interior
    /// nodes only.
    pub fn solve_dirichlet(&self, rhs: &ScalarField, left: &BoundaryTrace, right: &BoundaryTrace) -> Result<ScalarField> {
        let g = self.grid;
        if !rhs.grid().same_shape(&g) {
            return Err(Error::GridMismatch("rhs grid differs from solver grid".into()));
        }
        if left.values.len() != g.ny || right.values.len() != g.ny {
            return Err(Error::GridMismatch("boundary trace length differs from ny".into()));
        }
        let nxp = g.nxp();
        let ny = g.ny;

        // column transforms: one y-FFT per x-node, boundary columns carry the traces
        let cols = par::map_range(nxp, |i| {
            let mut buf: Vec<Complex64> = (0..ny)
                .map(|j| {
                    let v = if i == 0 {
                        left.values[j]
                    } else if i == g.nx {
                        right.values[j]
                    } else {
                        rhs.get(i, j)
                    };
                    Complex64::new(v, 0.0)
                })
                .collect();
            self.fft.process(&mut buf);
            buf
        });
        let mut spec = vec![Complex64::new(0.0, 0.0); nxp * ny];
        for (i, col) in cols.iter().enumerate() {
            for (m, c) in col.iter().enumerate() {
                spec[m * nxp + i] = *c;
            }
        }

        let inv_dx2 = 1.0 / (g.dx * g.dx);
        let k2 = &self.k2;
        par::for_each_chunk(&mut spec, nxp, |m, line| {
            let diag = 2.0 * inv_dx2 + 1.0 + k2[m];
            let off = -inv_dx2;
            let (l, r) = (line[0], line[g.nx]);
            let inner = &mut line[1..g.nx];
            inner[0] += l * inv_dx2;
            let last = inner.len() - 1;
            inner[last] += r * inv_dx2;
            let mut work = Vec::new();
            let pivot = thomas_constant(diag, off, inner, &mut work);
            debug_assert!(pivot > 0.0);
        });

        let scale = 1.0 / ny as f64;
        let rows = par::map_range(nxp, |i| {
            let mut buf: Vec<Complex64> = (0..ny).map(|m| spec[m * nxp + i]).collect();
            self.ifft.process(&mut buf);
            buf
        });
        let mut out = ScalarField::zeros(g);
        for (i, col) in rows.iter().enumerate() {
            for (j, c) in col.iter().enumerate() {
                out.set(i, j, c.re * scale);
            }
        }
        // Dirichlet nodes exactly
        for j in 0..ny {
            out.set(0, j, left.values[j]);
            out.set(g.nx, j, right.values[j]);
        }
        Ok(out)
    }

    /// `r = div q` for the given `u`; far trace `far_value` on every y-node.
    pub fn solve_divq(&self, u: &ScalarField, bc: &EllipticBC, far_value: f64) -> Result<ScalarField> {
        if !u.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch("u grid differs from solver grid".into()));
        }
        let rhs = laplacian(u).scale(-1.0);
        let left = bc.wall_trace(u);
        let right = BoundaryTrace::constant(self.grid.ny, far_value);
        self.solve_dirichlet(&rhs, &left, &right)
    }
}

/// One-shot convenience wrapper around [`HalfStripSolver::solve_divq`].
pub fn solve_divq_halfstrip(u: &ScalarField, bc: &EllipticBC, far_value: f64) -> Result<ScalarField> {
    HalfStripSolver::new(*u.grid())?.solve_divq(u, bc, far_value)
}

/// `q = grad r - grad u`.
pub fn reconstruct_q(u: &ScalarField, r: &ScalarField) -> Result<VectorField> {
    u.check_same_grid(r)?;
    let diff = r.sub(u);
    VectorField::new(ddx(&diff), ddy(&diff))
}

/// Residual of the discrete equation `(I - Δ) r + Δ u` at interior nodes,
/// relative to the largest term.
pub fn discrete_residual(u: &ScalarField, r: &ScalarField) -> f64 {
    let g = *u.grid();
    let lr = laplacian(r);
    let lu = laplacian(u);
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for j in 0..g.ny {
        for i in 1..g.nx {
            let terms = [r.get(i, j), lr.get(i, j), lu.get(i, j)];
            res = res.max((terms[0] - terms[1] + terms[2]).abs());
            scale = scale.max(terms.iter().fold(0.0, |m, t| m.max(t.abs())));
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        res / scale
    }
}

pub const DENSE_LIMIT: usize = 4096;

/// Assembles the discrete `(I - Δ)` operator over the interior unknowns with
/// the same stencils and boundary rows as the fast path and solves it by LU
/// factorization. Intended for small verification grids.
pub fn dense_direct_oracle(u: &ScalarField, bc: &EllipticBC, far_value: f64) -> Result<ScalarField> {
    let g = *u.grid();
    if g.is_torus() {
        return Err(Error::GridMismatch("dense oracle needs a half-strip grid".into()));
    }
    let size = g.nx * g.ny;
    if size > DENSE_LIMIT {
        return Err(Error::GridTooLarge {
            size,
            limit: DENSE_LIMIT,
        });
    }
    let ni = g.nx - 1;
    let n = ni * g.ny;
    let unk = |i: usize, j: usize| j * ni + (i - 1);
    let left = bc.wall_trace(u);
    let lu = laplacian(u);
    let (ix2, iy2) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for j in 0..g.ny {
        let jp = (j + 1) % g.ny;
        let jm = (j + g.ny - 1) % g.ny;
        for i in 1..g.nx {
            let row = unk(i, j);
            a[(row, row)] += 1.0 + 2.0 * ix2 + 2.0 * iy2;
            a[(row, unk(i, jp))] -= iy2;
            a[(row, unk(i, jm))] -= iy2;
            b[row] = -lu.get(i, j);
            if i > 1 {
                a[(row, unk(i - 1, j))] -= ix2;
            } else {
                b[row] += ix2 * left.values[j];
            }
            if i + 1 < g.nx {
                a[(row, unk(i + 1, j))] -= ix2;
            } else {
                b[row] += ix2 * far_value;
            }
        }
    }
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::GridMismatch("dense operator is singular".into()))?;
    let mut r = ScalarField::zeros(g);
    for j in 0..g.ny {
        r.set(0, j, left.values[j]);
        r.set(g.nx, j, far_value);
        for i in 1..g.nx {
            r.set(i, j, sol[unk(i, j)]);
        }
    }
    Ok(r)
}

/// Two-dimensional FFT of a torus field; output layout `[m_y * nx + m_x]`.
struct Torus2d {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Torus2d {
    fn new(g: &Grid) -> Self {
        let mut p = FftPlanner::new();
        Torus2d {
            nx: g.nx,
            ny: g.ny,
            fx: p.plan_fft_forward(g.nx),
            fy: p.plan_fft_forward(g.ny),
            ix: p.plan_fft_inverse(g.nx),
            iy: p.plan_fft_inverse(g.ny),
        }
    }

    fn forward(&self, f: &ScalarField) -> Vec<Complex64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        par::for_each_chunk(&mut data, nx, |_, row| self.fx.process(row));
        self.columns(&mut data, &self.fy);
        debug_assert_eq!(data.len(), nx * ny);
        data
    }

    fn inverse(&self, mut data: Vec<Complex64>, grid: Grid) -> ScalarField {
        let (nx, ny) = (self.nx, self.ny);
        par::for_each_chunk(&mut data, nx, |_, row| self.ix.process(row));
        self.columns(&mut data, &self.iy);
        let s = 1.0 / (nx * ny) as f64;
        ScalarField::from_values(grid, data.iter().map(|c| c.re * s).collect()).expect("torus shape")
    }

    fn columns(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        let cols = par::map_range(nx, |i| {
            let mut buf: Vec<Complex64> = (0..ny).map(|j| data[j * nx + i]).collect();
            plan.process(&mut buf);
            buf
        });
        for (i, col) in cols.into_iter().enumerate() {
            for (j, c) in col.into_iter().enumerate() {
                data[j * nx + i] = c;
            }
        }
    }
}

/// Signed integer wavenumber of FFT bin `m` out of `n`; the Nyquist bin maps
/// to zero so that spectral derivatives of real data stay real.
fn signed_mode(m: usize, n: usize) -> f64 {
    if 2 * m == n {
        0.0
    } else if 2 * m < n {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// Fully periodic solver for `r = div q` with the same discrete symbol as the
/// finite-difference Laplacian. Used by the torus configuration of the
/// time stepper.
pub struct TorusSolver {
    grid: Grid,
    plans: Torus2d,
    symbol: Vec<f64>,
}

impl TorusSolver {
    pub fn new(grid: Grid) -> Result<Self> {
        if !grid.is_torus() {
            return Err(Error::NonPeriodicGrid);
        }
        let mut symbol = vec![0.0; grid.len()];
        for my in 0..grid.ny {
            let ky2 = discrete_k2(my, grid.ny, grid.dy);
            for mx in 0..grid.nx {
                let k2 = discrete_k2(mx, grid.nx, grid.dx) + ky2;
                symbol[my * grid.nx + mx] = k2 / (1.0 + k2);
            }
        }
        Ok(TorusSolver {
            grid,
            plans: Torus2d::new(&grid),
            symbol,
        })
    }

    pub fn solve_divq(&self, u: &ScalarField) -> Result<ScalarField> {
        if !u.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch("u grid differs from solver grid".into()));
        }
        let mut spec = self.plans.forward(u);
        for (c, s) in spec.iter_mut().zip(&self.symbol) {
            *c *= *s;
        }
        Ok(self.plans.inverse(spec, self.grid))
    }
}

/// Exact spectral inversion `q = -(1 - Δ)^{-1} grad u` on a torus.
pub fn solve_q_periodic_oracle(u: &ScalarField) -> Result<VectorField> {
    let g = *u.grid();
    if !g.is_torus() {
        return Err(Error::NonPeriodicGrid);
    }
    let plans = Torus2d::new(&g);
    let uh = plans.forward(u);
    let (mut q1, mut q2) = (uh.clone(), uh);
    for my in 0..g.ny {
        let ky = 2.0 * PI * signed_mode(my, g.ny) / g.ly;
        let kyf = 2.0 * PI * signed_mode_full(my, g.ny) / g.ly;
        for mx in 0..g.nx {
            let kx = 2.0 * PI * signed_mode(mx, g.nx) / g.lx;
            let kxf = 2.0 * PI * signed_mode_full(mx, g.nx) / g.lx;
            let denom = 1.0 + kxf * kxf + kyf * kyf;
            let k = my * g.nx + mx;
            q1[k] *= Complex64::new(0.0, -kx / denom);
            q2[k] *= Complex64::new(0.0, -ky / denom);
        }
    }
    VectorField::new(plans.inverse(q1, g), plans.inverse(q2, g))
}

/// Signed wavenumber including the Nyquist bin (used in even symbols).
fn signed_mode_full(m: usize, n: usize) -> f64 {
    if 2 * m <= n {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// Max-norm of `-grad div q + q + grad u`, evaluated spectrally on a torus.
pub fn periodic_vector_residual(u: &ScalarField, q: &VectorField) -> Result<f64> {
    let g = *u.grid();
    if !g.is_torus() {
        return Err(Error::NonPeriodicGrid);
    }
    let plans = Torus2d::new(&g);
    let uh = plans.forward(u);
    let q1h = plans.forward(&q.comp1);
    let q2h = plans.forward(&q.comp2);
    let mut r1 = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut r2 = r1.clone();
    for my in 0..g.ny {
        let ky = 2.0 * PI * signed_mode(my, g.ny) / g.ly;
        for mx in 0..g.nx {
            let kx = 2.0 * PI * signed_mode(mx, g.nx) / g.lx;
            let k = my * g.nx + mx;
            let i = Complex64::new(0.0, 1.0);
            let div = i * kx * q1h[k] + i * ky * q2h[k];
            r1[k] = -i * kx * div + q1h[k] + i * kx * uh[k];
            r2[k] = -i * ky * div + q2h[k] + i * ky * uh[k];
        }
    }
    let a = plans.inverse(r1, g).max_abs();
    let b = plans.inverse(r2, g).max_abs();
    Ok(a.max(b))
}

/// One row of the manufactured-solution refinement table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsRow {
    pub h: f64,
    pub max_error: f64,
    /// Error of the previous (coarser) level over this one; NaN on the first row.
    pub ratio: f64,
}

/// Refinement study on `u = exp(-x) cos(2 pi y / ly)` over `[0, 8] x [0, 4)`.
/// With `k = 2 pi / ly` the exact solution is `r = (k^2 - 1) / k^2 * u`, and
/// its traces are imposed on both x-boundaries. Each level halves `dx` and `dy`.
pub fn mms_study(levels: usize) -> Result<Vec<MmsRow>> {
    let (lx, ly) = (8.0, 4.0);
    let k = 2.0 * PI / ly;
    let amp = (k * k - 1.0) / (k * k);
    let mut rows: Vec<MmsRow> = Vec::with_capacity(levels);
    for level in 0..levels {
        let g = Grid::new(32 << level, 16 << level, lx, ly)?;
        let u = ScalarField::from_fn(g, |x, y| (-x).exp() * (k * y).cos());
        let exact = u.scale(amp);
        let left = BoundaryTrace::new((0..g.ny).map(|j| exact.get(0, j)).collect());
        let right = BoundaryTrace::new((0..g.ny).map(|j| exact.get(g.nx, j)).collect());
        let r = HalfStripSolver::new(g)?.solve_dirichlet(&laplacian(&u).scale(-1.0), &left, &right)?;
        let err = r.sub(&exact).max_abs();
        let ratio = rows.last().map_or(f64::NAN, |p| p.max_error / err);
        rows.push(MmsRow {
            h: g.dx,
            max_error: err,
            ratio,
        });
    }
    Ok(rows)
}
