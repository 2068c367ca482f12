//! Discrete Sobolev and weighted norms, the time-weighted energy pair
//! `E(t)`, `D(t)`, trace identities, interpolation-inequality checks and
//! decay-exponent fitting.
//!
//! `∇^k f` is the tuple `(∂x^k f, ∂x^(k-1) ∂y f, ..., ∂y^k f)`; each mixed
//! derivative appears once.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::grid::{ddx, ddy, integrate2d, x_weight, Grid, ScalarField, VectorField};

/// `ddx^a ddy^b f` for all `a + b <= order`.
pub struct Derivatives {
    order: usize,
    fields: Vec<ScalarField>,
}

impl Derivatives {
    pub fn new(f: &ScalarField, order: usize) -> Self {
        let mut fields = Vec::with_capacity((order + 1) * (order + 2) / 2);
        let mut ycur = f.clone();
        for b in 0..=order {
            let mut cur = ycur.clone();
            for a in 0..=(order - b) {
                fields.push(cur.clone());
                if a < order - b {
                    cur = ddx(&cur);
                }
            }
            if b < order {
                ycur = ddy(&ycur);
            }
        }
        Derivatives { order, fields }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        // rows of decreasing length: b = 0 has order + 1 entries
        let mut k = 0;
        for bb in 0..b {
            k += self.order - bb + 1;
        }
        k + a
    }

    pub fn get(&self, a: usize, b: usize) -> &ScalarField {
        assert!(a + b <= self.order, "derivative ({a}, {b}) beyond order {}", self.order);
        &self.fields[self.index(a, b)]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `∬ (1+x)^alpha |∂x^a ∂y^b f|^2` for every stored derivative.
    fn squares(&self, alpha: f64) -> SquareTable {
        let mut sq = vec![vec![0.0; self.order + 1]; self.order + 1];
        for b in 0..=self.order {
            for a in 0..=(self.order - b) {
                sq[a][b] = sq_norm(self.get(a, b), alpha);
            }
        }
        SquareTable { sq }
    }
}

struct SquareTable {
    sq: Vec<Vec<f64>>,
}

impl SquareTable {
    fn at(&self, a: usize, b: usize) -> f64 {
        self.sq[a][b]
    }

    /// `Σ_{j<=k} ‖∇^j ∂y^shift f‖^2`.
    fn sobolev(&self, k: usize, shift: usize) -> f64 {
        let mut s = 0.0;
        for j in 0..=k {
            for b in 0..=j {
                s += self.at(j - b, b + shift);
            }
        }
        s
    }

    /// `Σ_{j<=k} ‖∇^j ∂y^shift ∇f‖^2`, both gradient components.
    fn sobolev_of_gradient(&self, k: usize, shift: usize) -> f64 {
        let mut s = 0.0;
        for j in 0..=k {
            for b in 0..=j {
                s += self.at(j - b + 1, b + shift) + self.at(j - b, b + shift + 1);
            }
        }
        s
    }
}

fn sq_norm(f: &ScalarField, alpha: f64) -> f64 {
    integrate2d(&f.map(|v| v * v), alpha)
}

/// Discrete `‖f‖_{H^k}`, `k <= 3`.
pub fn norm_hk(f: &ScalarField, k: usize) -> f64 {
    assert!(k <= 3, "norm_hk supports k <= 3");
    Derivatives::new(f, k).squares(0.0).sobolev(k, 0).sqrt()
}

/// `|f|_{alpha,k} = (Σ_{j<=k} ∬ (1+x)^alpha |∇^j f|^2)^(1/2)`, `k <= 2`.
pub fn weighted_norm(f: &ScalarField, alpha: f64, k: usize) -> f64 {
    assert!(k <= 2, "weighted_norm supports k <= 2");
    Derivatives::new(f, k).squares(alpha).sobolev(k, 0).sqrt()
}

fn energy_from(sq: &SquareTable, t: f64) -> (f64, f64) {
    let (mut e2, mut d2) = (0.0, 0.0);
    for k in 0..=2 {
        let w = (1.0 + t).powi(k as i32);
        e2 += w * sq.sobolev(3 - k, k);
        d2 += w * sq.sobolev_of_gradient(2 - k, k);
    }
    (e2.sqrt(), d2.sqrt())
}

/// `E(t)^2 = Σ_{k<=2} (1+t)^k ‖∂y^k v‖^2_{H^{3-k}}` and
/// `D(t)^2 = Σ_{k<=2} (1+t)^k ‖∂y^k ∇v‖^2_{H^{2-k}}`.
#[allow(non_snake_case)]
pub fn energy_ED(v: &ScalarField, t: f64) -> (f64, f64) {
    energy_from(&Derivatives::new(v, 3).squares(0.0), t)
}

/// `max_y |divp(0,y) + u_minus v_x(0,y)|` with a one-sided `v_x`.
pub fn boundary_identity_residual(v: &ScalarField, divp: &ScalarField, u_minus: f64) -> Result<f64> {
    v.check_same_grid(divp)?;
    let g = v.grid();
    Ok((0..g.ny)
        .map(|j| {
            let vx = (-3.0 * v.get(0, j) + 4.0 * v.get(1, j) - v.get(2, j)) / (2.0 * g.dx);
            (divp.get(0, j) + u_minus * vx).abs()
        })
        .fold(0.0, f64::max))
}

/// `max |∂y p1 - ∂x p2|`.
pub fn curl_residual(p: &VectorField) -> f64 {
    ddy(&p.comp1).sub(&ddx(&p.comp2)).max_abs()
}

/// `(‖∇²v‖² / (‖Δv‖² + ‖∇v_y‖²), ‖∇³v‖² / (‖∇Δv‖² + ‖∇v_yy‖²))`.
/// Both ratios are 1 for a vanishing field.
pub fn norm_equivalence_check(v: &ScalarField) -> (f64, f64) {
    let d = Derivatives::new(v, 3);
    let sq = d.squares(0.0);
    let lap = d.get(2, 0).add(d.get(0, 2));
    let lap_x = d.get(3, 0).add(d.get(1, 2));
    let lap_y = d.get(2, 1).add(d.get(0, 3));

    let n2 = sq.at(2, 0) + sq.at(1, 1) + sq.at(0, 2);
    let d2 = sq_norm(&lap, 0.0) + sq.at(1, 1) + sq.at(0, 2);
    let n3 = sq.at(3, 0) + sq.at(2, 1) + sq.at(1, 2) + sq.at(0, 3);
    let d3 = sq_norm(&lap_x, 0.0) + sq_norm(&lap_y, 0.0) + sq.at(1, 2) + sq.at(0, 3);
    let ratio = |n: f64, d: f64| if d < 1e-14 { 1.0 } else { n / d };
    (ratio(n2, d2), ratio(n3, d3))
}

/// `M0^2` and `M_alpha^2` of the initial perturbation: `‖v0‖²_{H³} + |v0|²_{a,2}`
/// with `a = 0` and `a = alpha`.
pub fn initial_norms(v0: &ScalarField, alpha: f64) -> (f64, f64) {
    let d = Derivatives::new(v0, 3);
    let h3 = d.squares(0.0).sobolev(3, 0);
    let h2 = d.squares(0.0).sobolev(2, 0);
    let w2 = d.squares(alpha).sobolev(2, 0);
    (h3 + h2, h3 + w2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub exponent: f64,
    pub r2: f64,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares slope of `ln value` against `ln(1+t)` over the trailing
/// `window_fraction` of the samples.
pub fn fit_decay_exponent(t: &[f64], values: &[f64], window_fraction: f64) -> Result<DecayFit> {
    assert_eq!(t.len(), values.len());
    assert!(window_fraction > 0.0 && window_fraction <= 1.0, "window_fraction must lie in (0, 1]");
    let n = t.len();
    let w = ((n as f64) * window_fraction).round() as usize;
    if w < MIN_FIT_SAMPLES {
        return Err(Error::WindowEmpty);
    }
    let start = n - w;
    if let Some(k) = values[start..].iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveValue {
            index: start + k,
            value: values[start + k],
        });
    }
    let xs: Vec<f64> = t[start..].iter().map(|t| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = values[start..].iter().map(|v| v.ln()).collect();
    let fit = least_squares(&xs, &ys).ok_or(Error::WindowEmpty)?;
    Ok(DecayFit {
        exponent: fit.slope,
        r2: fit.r2,
    })
}

/// One row of the monitored time series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub sup_v: f64,
    pub sup_vx: f64,
    pub sup_vy: f64,
    pub h_norms: [f64; 4],
    pub weighted: [f64; 3],
    pub e_norm: f64,
    pub d_norm: f64,
    pub dissip: [f64; 2],
    /// `sup|p1|, sup|p2|, sup|∂x divp|, sup|∂y divp|`
    pub q_norms: [f64; 4],
    pub boundary_residual: f64,
    pub curl_residual: f64,
    pub m0_sq: f64,
    pub malpha_sq: f64,
    /// `‖p‖²` and `‖divp‖²`; kept in memory only.
    pub p_sq: f64,
    pub divp_sq: f64,
}

pub const COLUMNS: [&str; 23] = [
    "t", "sup_v", "sup_vx", "sup_vy", "h0", "h1", "h2", "h3", "w_a0", "w_a1", "w_a2", "E", "D", "dissip_v",
    "dissip_gv", "sup_p1", "sup_p2", "sup_divp_x", "sup_divp_y", "bres", "cres", "m0sq", "malphasq",
];

impl DiagnosticsRecord {
    pub fn to_row(&self) -> [f64; 23] {
        let h = &self.h_norms;
        let w = &self.weighted;
        let q = &self.q_norms;
        [
            self.t,
            self.sup_v,
            self.sup_vx,
            self.sup_vy,
            h[0],
            h[1],
            h[2],
            h[3],
            w[0],
            w[1],
            w[2],
            self.e_norm,
            self.d_norm,
            self.dissip[0],
            self.dissip[1],
            q[0],
            q[1],
            q[2],
            q[3],
            self.boundary_residual,
            self.curl_residual,
            self.m0_sq,
            self.malpha_sq,
        ]
    }

    /// Inverse of [`DiagnosticsRecord::to_row`]; the in-memory-only fields are zero.
    pub fn from_row(r: &[f64; 23]) -> Self {
        DiagnosticsRecord {
            t: r[0],
            sup_v: r[1],
            sup_vx: r[2],
            sup_vy: r[3],
            h_norms: [r[4], r[5], r[6], r[7]],
            weighted: [r[8], r[9], r[10]],
            e_norm: r[11],
            d_norm: r[12],
            dissip: [r[13], r[14]],
            q_norms: [r[15], r[16], r[17], r[18]],
            boundary_residual: r[19],
            curl_residual: r[20],
            m0_sq: r[21],
            malpha_sq: r[22],
            p_sq: 0.0,
            divp_sq: 0.0,
        }
    }

    /// Column value by CSV header name.
    pub fn column(&self, name: &str) -> Option<f64> {
        COLUMNS.iter().position(|c| *c == name).map(|k| self.to_row()[k])
    }
}

pub struct SnapshotInput<'a> {
    pub t: f64,
    pub v: &'a ScalarField,
    pub p: &'a VectorField,
    pub divp: &'a ScalarField,
    /// `d/dx ubar` on the x-nodes.
    pub ubar_x: &'a [f64],
    pub u_minus: f64,
    pub alpha: f64,
    pub m0_sq: f64,
    pub malpha_sq: f64,
}

pub fn snapshot(s: &SnapshotInput<'_>) -> DiagnosticsRecord {
    let v = s.v;
    let g = *v.grid();
    let d = Derivatives::new(v, 3);
    let sq = d.squares(0.0);
    let sqw = if s.alpha == 0.0 {
        None
    } else {
        Some(Derivatives::new(v, 2).squares(s.alpha))
    };
    let wsq = sqw.as_ref().unwrap_or(&sq);
    let (e_norm, d_norm) = energy_from(&sq, s.t);
    let ux = ScalarField::from_profile(g, s.ubar_x).expect("profile length matches grid");
    let (vx, vy) = (d.get(1, 0), d.get(0, 1));
    let dissip_v = integrate2d(&ux.zip_map(v, |a, b| a * b * b), 0.0);
    let grad_sq = vx.zip_map(vy, |a, b| a * a + b * b);
    let dissip_gv = integrate2d(&ux.zip_map(&grad_sq, |a, b| a * b), 0.0);
    DiagnosticsRecord {
        t: s.t,
        sup_v: v.max_abs(),
        sup_vx: vx.max_abs(),
        sup_vy: vy.max_abs(),
        h_norms: [0, 1, 2, 3].map(|k| sq.sobolev(k, 0).sqrt()),
        weighted: [0, 1, 2].map(|k| wsq.sobolev(k, 0).sqrt()),
        e_norm,
        d_norm,
        dissip: [dissip_v, dissip_gv],
        q_norms: [
            s.p.comp1.max_abs(),
            s.p.comp2.max_abs(),
            ddx(s.divp).max_abs(),
            ddy(s.divp).max_abs(),
        ],
        boundary_residual: boundary_identity_residual(v, s.divp, s.u_minus).expect("same grid"),
        curl_residual: curl_residual(s.p),
        m0_sq: s.m0_sq,
        malpha_sq: s.malpha_sq,
        p_sq: sq_norm(&s.p.comp1, 0.0) + sq_norm(&s.p.comp2, 0.0),
        divp_sq: sq_norm(s.divp, 0.0),
    }
}

// ---------------------------------------------------------------------------
// interpolation inequalities

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inequality {
    /// `‖h‖_∞ ≤ √2 ‖h‖^(1/2) ‖h_x‖^(1/2)` along each x-line.
    LInf1d,
    /// `‖f‖_{L²_x L^∞_y} ≤ C ‖f‖^(1/2) ‖f_y‖^(1/2)`
    Lx2LyInf,
    /// `‖f‖_{L^∞_x L²_y} ≤ C ‖f‖^(1/2) ‖f_x‖^(1/2)`
    LxInfLy2,
    /// `‖f‖_∞ ≤ C (‖f‖ ‖f_x‖ ‖f_y‖ ‖f_xy‖)^(1/4)`
    VLinfty,
    /// `‖f‖_∞ ≤ C ‖f‖^(1/2) ‖∇²f‖^(1/2)` in two dimensions.
    GN,
}

impl Inequality {
    pub const ALL: [Inequality; 5] = [
        Inequality::LInf1d,
        Inequality::Lx2LyInf,
        Inequality::LxInfLy2,
        Inequality::VLinfty,
        Inequality::GN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::LInf1d => "L_inf_1d",
            Inequality::Lx2LyInf => "Lx2Lyinf",
            Inequality::LxInfLy2 => "LxinfLy2",
            Inequality::VLinfty => "v_Linfty",
            Inequality::GN => "GN",
        }
    }

    fn calibrated(self) -> bool {
        matches!(self, Inequality::VLinfty | Inequality::GN)
    }
}

pub const SLACK: f64 = 0.05;
/// Largest admissible `|f|` on the far edge `x = lx`.
pub const FAR_EDGE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + SLACK),
        }
    }
}

/// One-dimensional `‖h‖_∞ ≤ √2 ‖h‖^(1/2) ‖h'‖^(1/2)` for samples with spacing `dx`.
pub fn check_linf_1d(samples: &[f64], dx: f64) -> Result<InequalityCheck> {
    let n = samples.len();
    let edge = samples[0].abs().max(samples[n - 1].abs());
    if edge > FAR_EDGE_TOL {
        return Err(Error::FarFieldNotDecayed { value: edge });
    }
    let (lhs, base) = line_terms(samples, dx);
    Ok(InequalityCheck::new(lhs, std::f64::consts::SQRT_2 * base))
}

/// `(max |h|, (‖h‖ ‖h'‖)^(1/2))` with trapezoid quadrature.
fn line_terms(h: &[f64], dx: f64) -> (f64, f64) {
    let n = h.len();
    let mut d = vec![0.0; n];
    crate::grid::diff_1d(h, dx, &mut d);
    let trap = |f: &[f64]| {
        let s: f64 = f.iter().map(|v| v * v).sum();
        (s - 0.5 * (f[0] * f[0] + f[n - 1] * f[n - 1])) * dx
    };
    let lhs = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (lhs, (trap(h).sqrt() * trap(&d).sqrt()).sqrt())
}

/// Holds the inequality constants. The constants of [`Inequality::VLinfty`]
/// and [`Inequality::GN`] are calibrated on a reference family; the others are
/// the sharp values of the one-dimensional Agmon-type bound.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityHarness {
    pub v_linfty: f64,
    pub gn: f64,
}

impl Default for InequalityHarness {
    fn default() -> Self {
        InequalityHarness { v_linfty: 0.0, gn: 0.0 }
    }
}

impl InequalityHarness {
    pub fn constant(&self, which: Inequality) -> f64 {
        match which {
            Inequality::LInf1d | Inequality::LxInfLy2 => std::f64::consts::SQRT_2,
            Inequality::Lx2LyInf => 1.0,
            Inequality::VLinfty => self.v_linfty,
            Inequality::GN => self.gn,
        }
    }

    /// Calibrates on `n` reference fields drawn from a stream disjoint from
    /// the sweep stream of the same seed.
    pub fn calibrate(grid: &Grid, seed: u64, n: usize) -> Result<Self> {
        let mut h = InequalityHarness::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(CALIBRATION_STREAM);
        for _ in 0..n {
            let f = random_admissible_field(grid, &mut rng);
            for w in [Inequality::VLinfty, Inequality::GN] {
                h.check(w, &f, true)?;
            }
        }
        Ok(h)
    }

    /// Evaluates both sides. With `record`, a calibrated constant is first
    /// raised to cover this field.
    pub fn check(&mut self, which: Inequality, f: &ScalarField, record: bool) -> Result<InequalityCheck> {
        let g = *f.grid();
        let edge = (0..g.ny).map(|j| f.get(g.nx, j).abs()).fold(0.0, f64::max);
        if edge > FAR_EDGE_TOL {
            return Err(Error::FarFieldNotDecayed { value: edge });
        }
        let (lhs, base) = match which {
            Inequality::LInf1d => {
                // worst x-line
                let mut best = (0.0, 0.0);
                let mut worst_ratio = -1.0;
                for j in 0..g.ny {
                    let (l, b) = line_terms(f.row(j), g.dx);
                    let ratio = if b > 0.0 { l / b } else { 0.0 };
                    if ratio > worst_ratio {
                        worst_ratio = ratio;
                        best = (l, b);
                    }
                }
                best
            }
            Inequality::Lx2LyInf => {
                let s: f64 = (0..g.nxp())
                    .map(|i| {
                        let m = f.column(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        x_weight(&g, i) * m * m
                    })
                    .sum();
                let fy = ddy(f);
                (s.sqrt(), (sq_norm(f, 0.0).sqrt() * sq_norm(&fy, 0.0).sqrt()).sqrt())
            }
            Inequality::LxInfLy2 => {
                let m = (0..g.nxp())
                    .map(|i| f.column(i).iter().map(|v| v * v).sum::<f64>() * g.dy)
                    .fold(0.0, f64::max);
                let fx = ddx(f);
                (m.sqrt(), (sq_norm(f, 0.0).sqrt() * sq_norm(&fx, 0.0).sqrt()).sqrt())
            }
            Inequality::VLinfty => {
                let d = Derivatives::new(f, 2);
                let sq = d.squares(0.0);
                let prod = sq.at(0, 0) * sq.at(1, 0) * sq.at(0, 1) * sq.at(1, 1);
                (f.max_abs(), prod.powf(0.125))
            }
            Inequality::GN => {
                let d = Derivatives::new(f, 2);
                let sq = d.squares(0.0);
                let hess = sq.at(2, 0) + sq.at(1, 1) + sq.at(0, 2);
                (f.max_abs(), (sq.at(0, 0) * hess).powf(0.25))
            }
        };
        if record && which.calibrated() && base > 0.0 {
            let c = lhs / base;
            match which {
                Inequality::VLinfty => self.v_linfty = self.v_linfty.max(c),
                Inequality::GN => self.gn = self.gn.max(c),
                _ => unreachable!(),
            }
        }
        Ok(InequalityCheck::new(lhs, self.constant(which) * base))
    }
}

const CALIBRATION_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 0;

/// Grid used by [`inequality_sweep`].
pub fn sweep_grid() -> Grid {
    Grid::new(160, 160, 20.0, 20.0).expect("static grid")
}

/// Sum of one to three modulated Gaussian bumps centred in the middle tenth
/// of the domain. Widths are at most 6% of the shorter side, so the field is
/// below `1e-12` on both x-edges.
pub fn random_admissible_field(g: &Grid, rng: &mut impl Rng) -> ScalarField {
    let scale = g.lx.min(g.ly) / 20.0;
    let k = rng.random_range(1..=3);
    let bumps: Vec<[f64; 8]> = (0..k)
        .map(|_| {
            let mut amp: f64 = rng.random_range(-1.0..1.0);
            if amp.abs() < 0.1 {
                amp = 0.1f64.copysign(amp);
            }
            [
                amp,
                rng.random_range(0.45..0.55) * g.lx,
                rng.random_range(0.45..0.55) * g.ly,
                rng.random_range(0.6..1.2) * scale,
                rng.random_range(0.6..1.2) * scale,
                rng.random_range(0.0..1.0) / scale,
                rng.random_range(0.0..1.0) / scale,
                rng.random_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    ScalarField::from_fn(*g, |x, y| {
        bumps
            .iter()
            .map(|&[a, cx, cy, sx, sy, kx, ky, ph]| {
                let (dx, dy) = (x - cx, y - cy);
                a * (-(dx * dx) / (2.0 * sx * sx) - dy * dy / (2.0 * sy * sy)).exp() * (kx * dx + ky * dy + ph).cos()
            })
            .sum()
    })
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub trials: usize,
    pub harness: InequalityHarness,
    /// Per inequality: largest `lhs / rhs` seen and the number of failures.
    pub worst: Vec<(Inequality, f64, usize)>,
    pub ratio2_range: (f64, f64),
    pub ratio3_range: (f64, f64),
}

impl SweepReport {
    pub fn all_hold(&self) -> bool {
        self.worst.iter().all(|w| w.2 == 0)
    }

    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = (self.ratio2_range, self.ratio3_range);
        a.0 >= lo && a.1 <= hi && b.0 >= lo && b.1 <= hi
    }
}

pub const CALIBRATION_FIELDS: usize = 200;

/// Calibrates, then checks every inequality and the norm equivalence on
/// `trials` seeded fields.
pub fn inequality_sweep(seed: u64, trials: usize) -> Result<SweepReport> {
    let g = sweep_grid();
    let mut harness = InequalityHarness::calibrate(&g, seed, CALIBRATION_FIELDS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SWEEP_STREAM);
    let mut worst: Vec<(Inequality, f64, usize)> = Inequality::ALL.iter().map(|&w| (w, 0.0, 0)).collect();
    let (mut r2, mut r3) = ((f64::INFINITY, 0.0f64), (f64::INFINITY, 0.0f64));
    for _ in 0..trials {
        let f = random_admissible_field(&g, &mut rng);
        for entry in worst.iter_mut() {
            let c = harness.check(entry.0, &f, false)?;
            if c.rhs > 0.0 {
                entry.1 = entry.1.max(c.lhs / c.rhs);
            }
            if !c.holds {
                entry.2 += 1;
            }
        }
        let (a, b) = norm_equivalence_check(&f);
        r2 = (r2.0.min(a), r2.1.max(a));
        r3 = (r3.0.min(b), r3.1.max(b));
    }
    Ok(SweepReport {
        trials,
        harness,
        worst,
        ratio2_range: r2,
        ratio3_range: r3,
    })
}
