//! Explicit finite-volume evolution of the coupled system.
//!
//! Nodes double as cell centres. Interface values come from an unlimited
//! MUSCL reconstruction with central slopes and are combined by the Rusanov
//! flux. Time integration is the two-stage SSP Runge-Kutta method with a
//! fresh elliptic solve per stage.
//!
//! On the half-strip the spatial operator is balanced against the stationary
//! profile: `L(u) = A(u) - A(ubar)`, which makes the sampled profile an exact
//! fixed point of the discrete scheme. The perturbation dynamics are
//! unaffected to the order of the scheme. Perturbations are measured against
//! that fixed point and its discrete elliptic image (see [`Reference`]).

use std::sync::Arc;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::elliptic::{reconstruct_q, BcKind, EllipticBC, HalfStripSolver, TorusSolver};
use crate::error::{Error, Result};
use crate::flux::{rusanov_local, FluxConfig, FluxKind};
use crate::grid::{Grid, ScalarField, Topology, VectorField};
use crate::par;
use crate::stationary::{classify_case, shoot_profile, CaseTag, EndpointStates, StationaryProfile};

/// Relative tolerance of the profile integrator used by [`initialize`].
pub const PROFILE_TOL: f64 = 1e-11;

const MIN_RATE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    None,
    Gaussian {
        amp: f64,
        x0: f64,
        y0: f64,
        sx: f64,
        sy: f64,
    },
    WeightedTail {
        amp: f64,
        beta: f64,
    },
}

impl Perturbation {
    pub fn amplitude(&self) -> f64 {
        match *self {
            Perturbation::None => 0.0,
            Perturbation::Gaussian { amp, .. } | Perturbation::WeightedTail { amp, .. } => amp,
        }
    }

    /// Samples `v0` on the grid. The result vanishes exactly on both
    /// x-boundaries.
    pub fn sample(&self, g: &Grid) -> ScalarField {
        let mut v = match *self {
            Perturbation::None => ScalarField::zeros(*g),
            Perturbation::Gaussian { amp, x0, y0, sx, sy } => {
                let ly = g.ly;
                ScalarField::from_fn(*g, |x, y| {
                    let mut dy = (y - y0).rem_euclid(ly);
                    if dy > 0.5 * ly {
                        dy -= ly;
                    }
                    let bump = (-(x - x0).powi(2) / (2.0 * sx * sx) - dy * dy / (2.0 * sy * sy)).exp();
                    let cutoff = 1.0 - (-(x / sx).powi(4)).exp();
                    amp * bump * cutoff
                })
            }
            Perturbation::WeightedTail { amp, beta } => {
                let k = 2.0 * std::f64::consts::PI / g.ly;
                ScalarField::from_fn(*g, |x, y| amp * (1.0 + x).powf(-beta) * x / (1.0 + x) * (k * y).cos())
            }
        };
        if g.topology == Topology::HalfStrip {
            for j in 0..g.ny {
                v.set(0, j, 0.0);
                v.set(g.nx, j, 0.0);
            }
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub endpoints: EndpointStates,
    pub flux: FluxConfig,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub bc: BcKind,
    pub alpha: f64,
    pub perturbation: Perturbation,
    pub record_every: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            endpoints: EndpointStates {
                u_minus: -1.0,
                u_plus: -0.2,
            },
            flux: FluxConfig::default(),
            nx: 256,
            ny: 32,
            lx: 128.0,
            ly: 32.0,
            cfl: 0.4,
            t_end: 50.0,
            bc: BcKind::Compatibility,
            alpha: 0.0,
            perturbation: Perturbation::Gaussian {
                amp: 0.005,
                x0: 8.0,
                y0: 16.0,
                sx: 2.0,
                sy: 2.0,
            },
            record_every: 10,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }

    pub fn validate(&self) -> Result<()> {
        self.endpoints.validate().map_err(|e| Error::Validation(e.to_string()))?;
        self.flux.validate()?;
        self.grid().map_err(|e| Error::Validation(e.to_string()))?;
        if !self.ny.is_power_of_two() {
            return Err(Error::Validation(format!("grid.ny = {} must be a power of two", self.ny)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Validation(format!("cfl = {} must lie in (0, 1]", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Validation(format!("t_end = {} must be finite and >= 0", self.t_end)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha = {} must be >= 0", self.alpha)));
        }
        if self.record_every == 0 {
            return Err(Error::Validation("record_every must be >= 1".into()));
        }
        match self.perturbation {
            Perturbation::None => {}
            Perturbation::Gaussian { amp, x0, y0, sx, sy } => {
                if !(amp.is_finite() && x0.is_finite() && y0.is_finite()) {
                    return Err(Error::Validation("gaussian parameters must be finite".into()));
                }
                if !(sx > 0.0 && sy > 0.0) {
                    return Err(Error::Validation("gaussian widths must be positive".into()));
                }
            }
            Perturbation::WeightedTail { amp, beta } => {
                if !amp.is_finite() || !(beta > 0.0) {
                    return Err(Error::Validation("weighted_tail needs finite amp and beta > 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn elliptic_bc(&self) -> EllipticBC {
        match self.bc {
            BcKind::Compatibility => EllipticBC::compatibility(self.flux.f.deriv(self.endpoints.u_minus)),
            BcKind::Homogeneous => EllipticBC::homogeneous(),
        }
    }
}

/// Fields at one time level. `profile` is absent for torus runs.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub u: ScalarField,
    pub q: VectorField,
    pub r: ScalarField,
    pub profile: Option<Arc<StationaryProfile>>,
}

impl SimState {
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.r.is_finite() && self.q.is_finite()
    }
}

#[derive(Clone)]
enum Elliptic {
    Strip {
        solver: Arc<HalfStripSolver>,
        bc: EllipticBC,
        far_value: f64,
    },
    Torus(Arc<TorusSolver>),
}

/// Precomputed operators for one grid and flux pair.
#[derive(Clone)]
pub struct Stepper {
    grid: Grid,
    flux: FluxConfig,
    cfl: f64,
    /// Pinned values at `x = 0` and `x = lx` (half-strip only).
    walls: Option<(f64, f64)>,
    elliptic: Elliptic,
    balance: Option<ScalarField>,
}

impl Stepper {
    /// Half-strip stepper with Dirichlet values `left`/`right`. When
    /// `base` is given, the operator is balanced so that `base` is steady.
    pub fn half_strip(
        grid: Grid,
        flux: FluxConfig,
        cfl: f64,
        walls: (f64, f64),
        bc: EllipticBC,
        far_value: f64,
        base: Option<&ScalarField>,
    ) -> Result<Self> {
        let mut s = Stepper {
            grid,
            flux,
            cfl,
            walls: Some(walls),
            elliptic: Elliptic::Strip {
                solver: Arc::new(HalfStripSolver::new(grid)?),
                bc,
                far_value,
            },
            balance: None,
        };
        if let Some(b) = base {
            let r = s.solve_r(b)?;
            s.balance = Some(s.spatial_operator(b, &r));
        }
        Ok(s)
    }

    pub fn torus(grid: Grid, flux: FluxConfig, cfl: f64) -> Result<Self> {
        Ok(Stepper {
            grid,
            flux,
            cfl,
            walls: None,
            elliptic: Elliptic::Torus(Arc::new(TorusSolver::new(grid)?)),
            balance: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `r = div q` for the given `u`.
    pub fn solve_r(&self, u: &ScalarField) -> Result<ScalarField> {
        match &self.elliptic {
            Elliptic::Strip { solver, bc, far_value } => solver.solve_divq(u, bc, *far_value),
            Elliptic::Torus(s) => s.solve_divq(u),
        }
    }

    /// Builds a state at time `t` from `u` alone.
    pub fn state_from_u(&self, t: f64, u: ScalarField, profile: Option<Arc<StationaryProfile>>) -> Result<SimState> {
        let r = self.solve_r(&u)?;
        let q = reconstruct_q(&u, &r)?;
        Ok(SimState { t, u, q, r, profile })
    }

    /// `dt = cfl / (a_x/dx + a_y/dy)` with the maximal characteristic speeds
    /// of the current field.
    pub fn cfl_dt(&self, u: &ScalarField) -> f64 {
        let (f, g) = (self.flux.f, self.flux.g);
        let vals = u.values();
        let ax = par::max_over(vals.len(), |k| f.deriv(vals[k]).abs());
        let ay = par::max_over(vals.len(), |k| g.deriv(vals[k]).abs());
        self.cfl / (ax / self.grid.dx + ay / self.grid.dy).max(MIN_RATE)
    }

    /// Unbalanced operator `-(f_x + g_y) - r` on the evolved nodes; zero on
    /// the pinned boundary nodes.
    pub fn spatial_operator(&self, u: &ScalarField, r: &ScalarField) -> ScalarField {
        let g = self.grid;
        let n = g.nxp();
        let ny = g.ny;
        let (fk, gk) = (self.flux.f, self.flux.g);
        let src = u.values();
        let rv = r.values();
        let walls = self.walls;
        let row = |j: usize| &src[j * n..(j + 1) * n];
        let mut out = ScalarField::zeros(g);
        par::for_each_chunk(out.values_mut(), n, |j, dst| {
            let cur = row(j);
            let (lo, hi) = match walls {
                Some(_) => (1, g.nx),
                None => (0, n),
            };
            // x-direction: interface fluxes between i and i+1 for i in lo-1..hi
            let ext = |i: isize| -> f64 {
                match walls {
                    Some((l, rgt)) => {
                        if i < 0 {
                            l
                        } else if i as usize > g.nx {
                            rgt
                        } else {
                            cur[i as usize]
                        }
                    }
                    None => cur[i.rem_euclid(n as isize) as usize],
                }
            };
            let iface = |i: isize| -> f64 {
                let ul = ext(i) + 0.25 * (ext(i + 1) - ext(i - 1));
                let ur = ext(i + 1) - 0.25 * (ext(i + 2) - ext(i));
                rusanov_local(fk, ul, ur)
            };
            let inv_dx = 1.0 / g.dx;
            let mut left = iface(lo as isize - 1);
            for i in lo..hi {
                let right = iface(i as isize);
                dst[i] = -(right - left) * inv_dx - rv[j * n + i];
                left = right;
            }
            if gk != FluxKind::Zero {
                let m2 = row((j + ny - 2) % ny);
                let m1 = row((j + ny - 1) % ny);
                let p1 = row((j + 1) % ny);
                let p2 = row((j + 2) % ny);
                let inv_dy = 1.0 / g.dy;
                for i in lo..hi {
                    let down = rusanov_local(
                        gk,
                        m1[i] + 0.25 * (cur[i] - m2[i]),
                        cur[i] - 0.25 * (p1[i] - m1[i]),
                    );
                    let up = rusanov_local(
                        gk,
                        cur[i] + 0.25 * (p1[i] - m1[i]),
                        p1[i] - 0.25 * (p2[i] - cur[i]),
                    );
                    dst[i] -= (up - down) * inv_dy;
                }
            }
        });
        out
    }

    /// Balanced right-hand side used by [`Stepper::step`].
    pub fn rhs(&self, u: &ScalarField, r: &ScalarField) -> ScalarField {
        let a = self.spatial_operator(u, r);
        match &self.balance {
            Some(b) => a.sub(b),
            None => a,
        }
    }

    fn pin(&self, u: &mut ScalarField) {
        if let Some((l, r)) = self.walls {
            for j in 0..self.grid.ny {
                u.set(0, j, l);
                u.set(self.grid.nx, j, r);
            }
        }
    }

    /// One SSP-RK2 step of size `dt`.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let limit = self.cfl_dt(&state.u);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::TimeStepTooLarge { dt, limit });
        }
        let check = |f: &ScalarField, t: f64| if f.is_finite() { Ok(()) } else { Err(Error::NaNDetected { t }) };

        let l0 = self.rhs(&state.u, &state.r);
        let mut u1 = state.u.zip_map(&l0, |u, l| u + dt * l);
        self.pin(&mut u1);
        check(&u1, state.t + dt)?;
        let r1 = self.solve_r(&u1)?;

        let l1 = self.rhs(&u1, &r1);
        let mut u2 = ScalarField::zeros(self.grid);
        {
            let (a, b, c) = (state.u.values(), u1.values(), l1.values());
            for (k, out) in u2.values_mut().iter_mut().enumerate() {
                *out = 0.5 * a[k] + 0.5 * (b[k] + dt * c[k]);
            }
        }
        self.pin(&mut u2);
        check(&u2, state.t + dt)?;
        let r2 = self.solve_r(&u2)?;
        check(&r2, state.t + dt)?;
        let q2 = reconstruct_q(&u2, &r2)?;
        Ok(SimState {
            t: state.t + dt,
            u: u2,
            q: q2,
            r: r2,
            profile: state.profile.clone(),
        })
    }
}

/// Steady state the perturbation is measured against.
#[derive(Clone, Debug)]
pub struct Reference {
    pub ubar: ScalarField,
    pub qbar: VectorField,
    pub rbar: ScalarField,
}

impl Reference {
    /// Continuous profile values `(ubar, (qbar, 0), qbar_x)` sampled at the nodes.
    pub fn continuous(prof: &StationaryProfile, g: Grid) -> Result<Self> {
        let zero = ScalarField::zeros(g);
        Ok(Reference {
            ubar: ScalarField::from_profile(g, &prof.ubar)?,
            qbar: VectorField::new(ScalarField::from_profile(g, &prof.qbar)?, zero)?,
            rbar: ScalarField::from_profile(g, &prof.qbar_x)?,
        })
    }

    /// Sampled `ubar` with its discrete elliptic image. This is the exact
    /// steady state of a balanced stepper built on the same `ubar`.
    pub fn discrete(stepper: &Stepper, ubar: ScalarField) -> Result<Self> {
        let rbar = stepper.solve_r(&ubar)?;
        let qbar = reconstruct_q(&ubar, &rbar)?;
        Ok(Reference { ubar, qbar, rbar })
    }
}

/// `v = u - ubar`, `p = q - qbar`, `divp = r - rbar`.
pub fn extract_perturbation(state: &SimState, reference: &Reference) -> Result<(ScalarField, VectorField, ScalarField)> {
    state.u.check_same_grid(&reference.ubar)?;
    let v = state.u.sub(&reference.ubar);
    let p = VectorField::new(
        state.q.comp1.sub(&reference.qbar.comp1),
        state.q.comp2.sub(&reference.qbar.comp2),
    )?;
    let divp = state.r.sub(&reference.rbar);
    Ok((v, p, divp))
}

/// Stationary profile for the configuration, sampled on the grid nodes.
pub fn profile_for(cfg: &SimConfig) -> Result<StationaryProfile> {
    shoot_profile(&cfg.flux, &cfg.endpoints, cfg.lx, cfg.nx, PROFILE_TOL)
}

/// [`initialize_with`] treating an amplitude violation as an error.
pub fn initialize(cfg: &SimConfig) -> Result<SimState> {
    Ok(Simulation::new(cfg)?.state)
}

/// A configured run: stepper, current state, frozen initial-data norms and
/// the step counter used for record scheduling.
#[derive(Clone)]
pub struct Simulation {
    pub cfg: SimConfig,
    pub stepper: Stepper,
    pub state: SimState,
    pub m0_sq: f64,
    pub malpha_sq: f64,
    pub steps: usize,
    /// Discrete steady state used for the perturbation diagnostics.
    pub reference: Arc<Reference>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        Self::initialize_with(cfg, true)
    }

    /// With `strict = false` a sign violation of `u0` in the non-degenerate
    /// case is logged instead of returned.
    pub fn initialize_with(cfg: &SimConfig, strict: bool) -> Result<Self> {
        let (prof, stepper, reference) = Self::setup(cfg)?;
        let g = *stepper.grid();
        let ubar = &reference.ubar;
        let v0 = cfg.perturbation.sample(&g);
        let u0 = ubar.add(&v0);
        if classify_case(&cfg.endpoints)? == CaseTag::NonDegenerate {
            if let Some(k) = u0.values().iter().position(|&u| u >= 0.0) {
                let (i, j) = (k % g.nxp(), k / g.nxp());
                let err = Error::AmplitudeTooLarge { x: g.x(i), y: g.y(j) };
                if strict {
                    return Err(err);
                }
                log::warn!("{err}");
            }
        }
        let state = stepper.state_from_u(0.0, u0, Some(prof))?;
        let (m0_sq, malpha_sq) = diagnostics::initial_norms(&v0, cfg.alpha);
        Ok(Simulation {
            cfg: cfg.clone(),
            stepper,
            state,
            m0_sq,
            malpha_sq,
            steps: 0,
            reference,
        })
    }

    /// Resumes from stored fields; the fields are used as given.
    pub fn from_state(cfg: &SimConfig, mut state: SimState) -> Result<Self> {
        let (prof, stepper, reference) = Self::setup(cfg)?;
        if !state.u.grid().same_shape(stepper.grid()) {
            return Err(Error::ShapeMismatch("stored grid differs from configuration".into()));
        }
        // rebind the stored fields to the configured grid (identical spacing)
        let g = *stepper.grid();
        let rebind = |f: ScalarField| ScalarField::from_values(g, f.into_values());
        state.u = rebind(state.u)?;
        state.r = rebind(state.r)?;
        state.q = VectorField::new(rebind(state.q.comp1)?, rebind(state.q.comp2)?)?;
        state.profile = Some(prof);
        let v0 = cfg.perturbation.sample(stepper.grid());
        let (m0_sq, malpha_sq) = diagnostics::initial_norms(&v0, cfg.alpha);
        Ok(Simulation {
            cfg: cfg.clone(),
            stepper,
            state,
            m0_sq,
            malpha_sq,
            steps: 0,
            reference,
        })
    }

    fn setup(cfg: &SimConfig) -> Result<(Arc<StationaryProfile>, Stepper, Arc<Reference>)> {
        cfg.validate()?;
        let g = cfg.grid()?;
        let prof = Arc::new(profile_for(cfg)?);
        let ubar = ScalarField::from_profile(g, &prof.ubar)?;
        let walls = (prof.ubar[0], *prof.ubar.last().unwrap());
        let far = *prof.qbar_x.last().unwrap();
        let stepper = Stepper::half_strip(g, cfg.flux, cfg.cfl, walls, cfg.elliptic_bc(), far, Some(&ubar))?;
        let reference = Arc::new(Reference::discrete(&stepper, ubar)?);
        Ok((prof, stepper, reference))
    }

    pub fn cfl_dt(&self) -> f64 {
        self.stepper.cfl_dt(&self.state.u)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        self.state = self.stepper.step(&self.state, dt)?;
        self.steps += 1;
        Ok(())
    }

    /// One CFL-limited step, shortened to land on `t_end`. Returns the step size.
    pub fn advance(&mut self) -> Result<f64> {
        if self.done() {
            return Ok(0.0);
        }
        let dt = self.cfl_dt().min(self.cfg.t_end - self.state.t);
        self.step(dt)?;
        Ok(dt)
    }

    pub fn done(&self) -> bool {
        self.state.t >= self.cfg.t_end
    }

    pub fn record(&self) -> Result<DiagnosticsRecord> {
        let (v, p, divp) = extract_perturbation(&self.state, &self.reference)?;
        let prof = self.state.profile.as_ref().expect("profile");
        Ok(diagnostics::snapshot(&diagnostics::SnapshotInput {
            t: self.state.t,
            v: &v,
            p: &p,
            divp: &divp,
            ubar_x: prof.ubar_x(),
            u_minus: self.cfg.endpoints.u_minus,
            alpha: self.cfg.alpha,
            m0_sq: self.m0_sq,
            malpha_sq: self.malpha_sq,
        }))
    }

    /// Runs to `t_end`, passing a record to `sink` at the start, every
    /// `record_every` steps and at the final time. `on_record` may stop the
    /// loop early by returning `false`.
    pub fn run_with(&mut self, mut sink: impl FnMut(&Simulation, DiagnosticsRecord) -> Result<bool>) -> Result<()> {
        let mut last_recorded = None;
        if self.steps.is_multiple_of(self.cfg.record_every) {
            last_recorded = Some(self.steps);
            if !sink(self, self.record()?)? {
                return Ok(());
            }
        }
        while !self.done() {
            self.advance()?;
            if self.steps.is_multiple_of(self.cfg.record_every) || self.done() {
                last_recorded = Some(self.steps);
                if !sink(self, self.record()?)? {
                    return Ok(());
                }
            }
        }
        debug_assert_eq!(last_recorded, Some(self.steps));
        Ok(())
    }
}

/// Runs a configuration from `t = 0` and collects every record. On a step
/// failure the records gathered so far are returned alongside the error.
pub fn run(cfg: &SimConfig) -> std::result::Result<Vec<DiagnosticsRecord>, (Vec<DiagnosticsRecord>, Error)> {
    let mut sim = Simulation::new(cfg).map_err(|e| (Vec::new(), e))?;
    let mut records = Vec::new();
    match sim.run_with(|_, rec| {
        records.push(rec);
        Ok(true)
    }) {
        Ok(()) => Ok(records),
        Err(e) => Err((records, e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate2d;

    fn small_cfg() -> SimConfig {
        SimConfig {
            nx: 96,
            ny: 8,
            lx: 60.0,
            ly: 8.0,
            t_end: 1.0,
            record_every: 5,
            perturbation: Perturbation::Gaussian {
                amp: 0.01,
                x0: 5.0,
                y0: 4.0,
                sx: 1.0,
                sy: 1.0,
            },
            ..SimConfig::default()
        }
    }

    #[test]
    fn cfl_formula() {
        let g = Grid::torus(10, 10, 1.0, 1.0).unwrap();
        let s = Stepper::torus(g, FluxConfig::default(), 0.4).unwrap();
        assert!((s.cfl_dt(&ScalarField::constant(g, 1.0)) - 0.02).abs() < 1e-15);
        let sz = Stepper::torus(g, FluxConfig::new(FluxKind::Zero, 1.0).unwrap(), 0.5).unwrap();
        assert!((sz.cfl_dt(&ScalarField::constant(g, -1.0)) - 0.05).abs() < 1e-15);
        let dt = s.cfl_dt(&ScalarField::zeros(g));
        assert!(dt.is_finite() && dt > 0.0);
    }

    #[test]
    fn gaussian_initial_data() {
        let mut cfg = small_cfg();
        cfg.perturbation = Perturbation::Gaussian {
            amp: 0.01,
            x0: 5.0,
            y0: 4.0,
            sx: 1.0,
            sy: 1.0,
        };
        let sim = Simulation::new(&cfg).unwrap();
        let st = &sim.state;
        let (v, p, _) = extract_perturbation(st, &sim.reference).unwrap();
        assert!((0..8).all(|j| v.get(0, j) == 0.0));
        let v0 = cfg.perturbation.sample(st.u.grid());
        assert!(v0.max_abs() <= 0.01);
        // u = ubar + v0 is rounded once, so v matches v0 to an ulp of ubar
        assert!(v.sub(&v0).max_abs() <= 2.0 * f64::EPSILON);
        assert!(p.comp1.is_finite());
    }

    #[test]
    fn none_is_exact_profile() {
        let mut cfg = small_cfg();
        cfg.perturbation = Perturbation::None;
        let sim = Simulation::new(&cfg).unwrap();
        let (v, p, divp) = extract_perturbation(&sim.state, &sim.reference).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        assert_eq!(p.comp1.max_abs(), 0.0);
        assert_eq!(divp.max_abs(), 0.0);
        assert_eq!(sim.m0_sq, 0.0);
    }

    #[test]
    fn weighted_tail_norm_is_finite() {
        let g = Grid::new(400, 8, 400.0, 8.0).unwrap();
        let v = Perturbation::WeightedTail { amp: 0.01, beta: 1.0 }.sample(&g);
        // (1+x)^(alpha - 2 beta) is integrable for alpha < 1
        let w = crate::grid::weighted_l2_sq(&v, 0.5);
        assert!(w.is_finite() && w > 0.0);
        assert!(w < 0.01f64.powi(2) * 8.0 * 2.0);
    }

    #[test]
    fn amplitude_guard() {
        let mut cfg = small_cfg();
        cfg.perturbation = Perturbation::Gaussian {
            amp: 1.0,
            x0: 10.0,
            y0: 4.0,
            sx: 1.0,
            sy: 1.0,
        };
        assert!(matches!(Simulation::new(&cfg), Err(Error::AmplitudeTooLarge { .. })));
        assert!(Simulation::initialize_with(&cfg, false).is_ok());
    }

    #[test]
    fn dirichlet_and_oversize_step() {
        let cfg = SimConfig {
            t_end: 10.0,
            ..small_cfg()
        };
        let mut sim = Simulation::new(&cfg).unwrap();
        let dt = sim.cfl_dt();
        assert!(matches!(sim.step(2.0 * dt), Err(Error::TimeStepTooLarge { .. })));
        for _ in 0..10 {
            sim.advance().unwrap();
        }
        let u = &sim.state.u;
        assert!((0..8).all(|j| u.get(0, j) == cfg.endpoints.u_minus));
    }

    #[test]
    fn y_independent_data_stays_y_independent() {
        let g = Grid::new(96, 8, 60.0, 4.0).unwrap();
        let prof = profile_for(&SimConfig {
            nx: 96,
            lx: 60.0,
            ..SimConfig::default()
        })
        .unwrap();
        let ubar = ScalarField::from_profile(g, &prof.ubar).unwrap();
        let s = Stepper::half_strip(
            g,
            FluxConfig::default(),
            0.4,
            (prof.ubar[0], *prof.ubar.last().unwrap()),
            EllipticBC::compatibility(-1.0),
            0.0,
            None,
        )
        .unwrap();
        let u = ubar.add(&ScalarField::from_fn(g, |x, _| 0.01 * x * (-x).exp()));
        let mut st = s.state_from_u(0.0, u, None).unwrap();
        for _ in 0..20 {
            let dt = s.cfl_dt(&st.u);
            st = s.step(&st, dt).unwrap();
        }
        assert!(st.u.max_y_variation() <= 1e-12);
        assert!(s.rhs(&st.u, &st.r).max_y_variation() <= 1e-12);
    }

    #[test]
    fn torus_constant_is_fixed_point() {
        let g = Grid::torus(16, 8, 4.0, 2.0).unwrap();
        let s = Stepper::torus(g, FluxConfig::default(), 0.4).unwrap();
        let st = s.state_from_u(0.0, ScalarField::constant(g, -0.4), None).unwrap();
        assert_eq!(s.rhs(&st.u, &st.r).max_abs(), 0.0);
    }

    #[test]
    fn torus_mass_conserved_short() {
        let g = Grid::torus(32, 16, 8.0, 4.0).unwrap();
        let s = Stepper::torus(g, FluxConfig::default(), 0.4).unwrap();
        let u = ScalarField::from_fn(g, |x, y| {
            -0.5 + 0.2 * (std::f64::consts::PI * x / 4.0).sin() * (std::f64::consts::PI * y / 2.0).cos()
        });
        let m0 = integrate2d(&u, 0.0);
        let mut st = s.state_from_u(0.0, u, None).unwrap();
        for _ in 0..200 {
            let dt = s.cfl_dt(&st.u);
            st = s.step(&st, dt).unwrap();
        }
        assert!(((integrate2d(&st.u, 0.0) - m0) / m0).abs() < 1e-12);
    }

    #[test]
    fn run_with_zero_end_time() {
        let mut cfg = small_cfg();
        cfg.t_end = 0.0;
        let recs = run(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].t, 0.0);
        assert!(recs[0].m0_sq > 0.0 && recs[0].malpha_sq >= recs[0].m0_sq);
    }
}
