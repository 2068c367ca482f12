use proptest::prelude::*;
use radgas::elliptic::{BcKind, EllipticBC};
use radgas::flux::{FluxConfig, FluxKind};
use radgas::grid::{integrate2d, Grid, ScalarField};
use radgas::stepper::{extract_perturbation, profile_for, run, Perturbation, SimConfig, Simulation, Stepper};
use radgas::Error;

fn cfg(nx: usize, ny: usize, t_end: f64) -> SimConfig {
    SimConfig {
        nx,
        ny,
        lx: 60.0,
        ly: 8.0,
        t_end,
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

/// Unbalanced and balanced operators applied to the sampled profile.
fn stationary_defect(nx: usize) -> (Grid, ScalarField, ScalarField) {
    let c = cfg(nx, 4, 1.0);
    let prof = profile_for(&c).unwrap();
    let g = c.grid().unwrap();
    let ubar = ScalarField::from_profile(g, &prof.ubar).unwrap();
    let s = Stepper::half_strip(
        g,
        c.flux,
        c.cfl,
        (prof.ubar[0], *prof.ubar.last().unwrap()),
        c.elliptic_bc(),
        *prof.qbar_x.last().unwrap(),
        Some(&ubar),
    )
    .unwrap();
    let r = s.solve_r(&ubar).unwrap();
    (g, s.spatial_operator(&ubar, &r), s.rhs(&ubar, &r))
}

#[test]
fn stationary_defect_orders() {
    for nx in [256, 1024] {
        let (g, a, balanced) = stationary_defect(nx);
        assert_eq!(balanced.max_abs(), 0.0);
        // second order away from the wall, first order in the wall cells
        let i0 = (2.0 / g.dx) as usize;
        let interior = a.row(0)[i0..nx].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(interior <= 2e-3 * g.dx * g.dx, "interior {interior:e}");
        assert!(a.max_abs() <= 3e-3 * g.dx, "wall {:e}", a.max_abs());
    }
}

#[test]
fn unperturbed_profile_is_preserved() {
    let mut c = cfg(256, 32, 1e9);
    c.lx = 128.0;
    c.ly = 32.0;
    c.perturbation = Perturbation::None;
    let mut sim = Simulation::new(&c).unwrap();
    for _ in 0..100 {
        sim.advance().unwrap();
    }
    let (v, _, _) = extract_perturbation(&sim.state, &sim.reference).unwrap();
    assert!(v.max_abs() <= 1e-6);
}

#[test]
fn unperturbed_records_stay_small() {
    let mut c = cfg(96, 8, 10.0);
    c.perturbation = Perturbation::None;
    let recs = run(&c).unwrap();
    assert!(recs.len() > 2);
    for r in &recs {
        assert!(r.sup_v <= 1e-6 && r.h_norms[3] <= 1e-6 && r.e_norm <= 1e-6);
    }
}

#[test]
fn zero_end_time_gives_one_record() {
    let recs = run(&cfg(96, 8, 0.0)).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].t, 0.0);
    assert!(recs[0].m0_sq > 0.0 && recs[0].malpha_sq > 0.0);
}

#[test]
fn wall_trace_and_identities_during_run() {
    let c = cfg(96, 8, 5.0);
    let mut sim = Simulation::new(&c).unwrap();
    let g = c.grid().unwrap();
    let scale = 0.01;
    while !sim.done() {
        sim.advance().unwrap();
        let (v, _, _) = extract_perturbation(&sim.state, &sim.reference).unwrap();
        assert!((0..c.ny).all(|j| v.get(0, j) == 0.0));
        let rec = sim.record().unwrap();
        assert!(rec.boundary_residual <= 10.0 * g.dx * g.dx * scale);
        assert!(rec.curl_residual <= 10.0 * (g.dx * g.dx + g.dy * g.dy) * scale);
    }
}

#[test]
fn homogeneous_bc_breaks_boundary_identity() {
    let run_bres = |bc: BcKind| {
        let mut c = cfg(96, 8, 2.0);
        c.bc = bc;
        run(&c).unwrap().iter().map(|r| r.boundary_residual).fold(0.0, f64::max)
    };
    let compat = run_bres(BcKind::Compatibility);
    let hom = run_bres(BcKind::Homogeneous);
    assert!(hom > 1e-4, "homogeneous residual {hom:e}");
    assert!(hom > 1e3 * compat.max(1e-16));
}

#[test]
fn perturbation_decays_on_short_run() {
    let recs = run(&cfg(96, 8, 20.0)).unwrap();
    assert!(recs.last().unwrap().sup_v < recs[0].sup_v);
}

#[test]
fn small_data_h2_stays_bounded() {
    // amp = 0.01 <= delta / 10 = 0.08
    let recs = run(&cfg(192, 16, 30.0)).unwrap();
    let h2_0 = recs[0].h_norms[2];
    let worst = recs.iter().map(|r| r.h_norms[2]).fold(0.0, f64::max);
    assert!(worst <= 10.0 * h2_0, "{worst:e} vs {h2_0:e}");
}

#[test]
fn weighted_tail_run_decays() {
    let mut c = cfg(96, 8, 10.0);
    c.perturbation = Perturbation::WeightedTail { amp: 0.01, beta: 1.0 };
    c.alpha = 0.5;
    let recs = run(&c).unwrap();
    assert!(recs[0].malpha_sq > 0.0 && recs[0].weighted.iter().all(|w| w.is_finite()));
    assert!(recs.last().unwrap().sup_v < recs[0].sup_v);
}

#[test]
fn oversize_step_is_rejected() {
    let mut sim = Simulation::new(&cfg(96, 8, 1.0)).unwrap();
    let dt = sim.cfl_dt();
    assert!(matches!(sim.step(1.5 * dt), Err(Error::TimeStepTooLarge { .. })));
    sim.step(dt).unwrap();
}

#[test]
fn torus_mass_conserved() {
    let g = Grid::torus(32, 32, 10.0, 10.0).unwrap();
    let flux = FluxConfig::new(FluxKind::Linear(0.3), 1.0).unwrap();
    let s = Stepper::torus(g, flux, 0.4).unwrap();
    let u = ScalarField::from_fn(g, |x, y| -0.5 + 0.2 * (0.6 * x).sin() * (0.6283 * y).cos());
    let mut st = s.state_from_u(0.0, u, None).unwrap();
    let m0 = integrate2d(&st.u, 0.0);
    for _ in 0..2000 {
        let dt = s.cfl_dt(&st.u);
        st = s.step(&st, dt).unwrap();
    }
    assert!(((integrate2d(&st.u, 0.0) - m0) / m0).abs() <= 1e-10);
}

#[test]
fn compatibility_bc_uses_wall_speed() {
    let c = cfg(96, 8, 1.0);
    assert_eq!(c.elliptic_bc(), EllipticBC::compatibility(-1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn y_independent_data_stays_y_independent(amp in 0.001f64..0.02, x0 in 3.0f64..10.0) {
        let mut c = cfg(96, 8, 2.0);
        c.perturbation = Perturbation::Gaussian { amp, x0, y0: 4.0, sx: 1.0, sy: 1e6 };
        let mut sim = Simulation::new(&c).unwrap();
        for _ in 0..10 {
            sim.advance().unwrap();
        }
        prop_assert!(sim.state.u.max_y_variation() <= 1e-12);
    }

    #[test]
    fn dirichlet_value_is_exact(amp in 0.001f64..0.02, y0 in 0.0f64..8.0) {
        let mut c = cfg(96, 8, 1.0);
        c.perturbation = Perturbation::Gaussian { amp, x0: 6.0, y0, sx: 1.5, sy: 1.0 };
        let mut sim = Simulation::new(&c).unwrap();
        for _ in 0..5 {
            sim.advance().unwrap();
        }
        prop_assert!((0..8).all(|j| sim.state.u.get(0, j) == -1.0));
    }
}
