use radgas::flux::FluxConfig;
use radgas::stationary::{linearized_nd_rate, shoot_profile, verify_profile_decay, CaseTag, EndpointStates};

fn burgers() -> FluxConfig {
    FluxConfig::default()
}

/// Fourth-order central second difference at interior node `i`.
fn d2_4th(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h)
}

fn d1_4th(f: &[f64], i: usize, h: f64) -> f64 {
    (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
}

#[test]
fn nd_profile_residuals() {
    let ep = EndpointStates::new(-1.0, -0.2).unwrap();
    let p = shoot_profile(&burgers(), &ep, 80.0, 4096, 1e-10).unwrap();
    assert_eq!(p.case_tag, CaseTag::NonDegenerate);
    assert_eq!(p.ubar[0], -1.0);
    assert!(p.first_integral_residual() <= 1e-8);
    assert!(p.strictly_increasing());
    // -qbar_xx + qbar + ubar_x = 0, checked from the sampled qbar alone
    let h = p.dx;
    let worst = (2..p.len() - 2)
        .map(|i| (-d2_4th(&p.qbar, i, h) + p.qbar[i] + d1_4th(&p.ubar, i, h)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "ODE residual {worst:e}");
    // qbar_x(0) = -f'(u_minus) ubar_x(0)
    let fp = burgers().f.deriv(ep.u_minus);
    assert!((p.qbar_x[0] + fp * p.ubar_x()[0]).abs() <= 1e-6);
}

#[test]
fn degenerate_profile_shape() {
    let ep = EndpointStates::new(-0.5, 0.0).unwrap();
    let p = shoot_profile(&burgers(), &ep, 400.0, 8192, 1e-10).unwrap();
    assert_eq!(p.case_tag, CaseTag::Degenerate);
    assert!(p.strictly_increasing());
    assert!(p.ubar.iter().all(|&u| u < 0.0));
    assert!(p.first_integral_residual() <= 1e-8);
}

#[test]
fn nd_rate_within_three_percent() {
    let ep = EndpointStates::new(-1.0, -0.2).unwrap();
    let p = shoot_profile(&burgers(), &ep, 80.0, 4096, 1e-10).unwrap();
    let lam = linearized_nd_rate(&burgers(), &ep).unwrap();
    let fit = verify_profile_decay(&p, 0).unwrap();
    assert!((fit / lam - 1.0).abs() <= 0.03, "fit {fit} vs {lam}");
}

#[test]
fn degenerate_algebraic_exponents() {
    let ep = EndpointStates::new(-0.5, 0.0).unwrap();
    let p = shoot_profile(&burgers(), &ep, 400.0, 8192, 1e-10).unwrap();
    for k in 0..3 {
        let e = verify_profile_decay(&p, k).unwrap();
        let target = -(k as f64 + 1.0);
        assert!((e / target - 1.0).abs() <= 0.15, "k={k}: {e}");
    }
}

#[test]
fn smaller_jump_flattens_profile() {
    let slope = |up: f64| {
        let ep = EndpointStates::new(-1.0, up).unwrap();
        let p = shoot_profile(&burgers(), &ep, 200.0, 4096, 1e-10).unwrap();
        p.ubar_x().iter().cloned().fold(0.0, f64::max)
    };
    assert!(slope(-0.6) < slope(-0.2));
}
