//! Planar stationary solution `(ubar, qbar)` on `x >= 0`.
//!
//! Eliminating `qbar` through the first integral `f(ubar) + qbar = f(u_plus)`
//! leaves the autonomous second-order equation
//!
//! ```text
//! (f(ubar))_xx + f(u_plus) - f(ubar) + ubar_x = 0
//! ```
//!
//! which is integrated as the planar system in `v = ubar` and `w = f'(v) v_x`:
//!
//! ```text
//! v' = w / f'(v),    w' = f(v) - f(u_plus) - v'.
//! ```
//!
//! The far state `(u_plus, 0)` is a saddle (non-degenerate case) or a
//! degenerate node on the singular line `f'(v) = 0` (degenerate case). The
//! connecting orbit is its one-dimensional stable manifold, so the orbit is
//! traced backward in `x` from the far-field asymptotics, where integration
//! is stable, until `v` reaches `u_minus`; that point is then moved to
//! `x = 0`. The state is carried as the deviation `a = v - u_plus` so the
//! exponentially small tail keeps full relative precision.

use crate::error::{Error, Result};
use crate::fit::least_squares;
use crate::flux::{FluxConfig, FluxKind};
use crate::grid::{diff2_1d, diff_1d};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointStates {
    pub u_minus: f64,
    pub u_plus: f64,
}

impl EndpointStates {
    /// Requires `u_minus < u_plus <= 0`.
    pub fn new(u_minus: f64, u_plus: f64) -> Result<Self> {
        let ep = EndpointStates { u_minus, u_plus };
        ep.validate()?;
        Ok(ep)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, p) = (self.u_minus, self.u_plus);
        if !(m.is_finite() && p.is_finite()) {
            return Err(Error::InvalidEndpoints("states must be finite".into()));
        }
        if m >= p {
            return Err(Error::InvalidEndpoints(format!(
                "u_minus = {m} must be below u_plus = {p}"
            )));
        }
        if p > 0.0 {
            return Err(Error::InvalidEndpoints(format!(
                "u_plus = {p} must not be positive"
            )));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        (self.u_plus - self.u_minus).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseTag {
    /// `u_plus < 0`: exponential approach to the far state.
    NonDegenerate,
    /// `u_plus = 0`: algebraic approach.
    Degenerate,
}

pub fn classify_case(ep: &EndpointStates) -> Result<CaseTag> {
    ep.validate()?;
    Ok(if ep.u_plus < 0.0 {
        CaseTag::NonDegenerate
    } else {
        CaseTag::Degenerate
    })
}

/// Stationary profile sampled on the uniform nodes `x_i = i * lx / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryProfile {
    pub x: Vec<f64>,
    pub ubar: Vec<f64>,
    /// `ubar - u_plus`, kept separately to resolve the far tail.
    pub dev: Vec<f64>,
    pub qbar: Vec<f64>,
    /// `d/dx qbar = -f'(ubar) ubar_x`.
    pub qbar_x: Vec<f64>,
    /// `dk[k-1]` holds the k-th derivative of `ubar`, k = 1..=4.
    pub dk: [Vec<f64>; 4],
    pub case_tag: CaseTag,
    pub endpoints: EndpointStates,
    pub flux: FluxConfig,
    pub dx: f64,
}

impl StationaryProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn lx(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn ubar_x(&self) -> &[f64] {
        &self.dk[0]
    }

    /// `max |f(ubar) + qbar - f(u_plus)|`.
    pub fn first_integral_residual(&self) -> f64 {
        let f = self.flux.f;
        let fp = f.eval(self.endpoints.u_plus);
        self.ubar
            .iter()
            .zip(&self.qbar)
            .map(|(u, q)| (f.eval(*u) + q - fp).abs())
            .fold(0.0, f64::max)
    }

    /// `|ubar(lx) - u_plus|`.
    pub fn far_residual(&self) -> f64 {
        self.dev.last().unwrap().abs()
    }

    /// True when `ubar_x > 0` at every interior node.
    pub fn strictly_increasing(&self) -> bool {
        let n = self.len();
        self.dk[0][1..n - 1].iter().all(|&d| d > 0.0)
            && self.ubar.windows(2).all(|w| w[1] >= w[0])
    }
}

/// `qbar = f(u_plus) - f(ubar)`.
pub fn first_integral_qbar(cfg: &FluxConfig, ep: &EndpointStates, ubar: &[f64]) -> Vec<f64> {
    ubar.iter()
        .map(|&u| cfg.f.eval(ep.u_plus) - cfg.f.eval(u))
        .collect()
}

/// Exponential rate of the stable direction at `u_plus`: the magnitude of the
/// negative root of `f'(u_plus) mu^2 + mu - f'(u_plus) = 0`.
pub fn linearized_nd_rate(cfg: &FluxConfig, ep: &EndpointStates) -> Result<f64> {
    if classify_case(ep)? == CaseTag::Degenerate {
        return Err(Error::DegenerateCase);
    }
    let c = cfg.f.deriv(ep.u_plus);
    // roots (-1 ± sqrt(1 + 4c^2)) / (2c); with c < 0 the "+" root is negative.
    // Written as 2c / (1 + sqrt(1 + 4c^2)) to avoid cancellation for small c.
    let mu = 2.0 * c / (1.0 + (1.0 + 4.0 * c * c).sqrt());
    Ok(-mu)
}

#[derive(Clone, Copy, Debug)]
struct Phase {
    a: f64,
    w: f64,
}

struct Orbit {
    flux: FluxKind,
    u_plus: f64,
}

impl Orbit {
    #[inline]
    fn rhs(&self, s: Phase) -> Result<(f64, f64)> {
        let fp = self.flux.deriv(self.u_plus + s.a);
        if fp == 0.0 {
            return Err(Error::SingularDerivative {
                x: f64::NAN,
                v: self.u_plus + s.a,
            });
        }
        let da = s.w / fp;
        let dw = self.flux.increment(self.u_plus, s.a) - da;
        Ok((da, dw))
    }

    fn rk4(&self, s: Phase, h: f64) -> Result<Phase> {
        let add = |s: Phase, k: (f64, f64), c: f64| Phase {
            a: s.a + c * k.0,
            w: s.w + c * k.1,
        };
        let k1 = self.rhs(s)?;
        let k2 = self.rhs(add(s, k1, 0.5 * h))?;
        let k3 = self.rhs(add(s, k2, 0.5 * h))?;
        let k4 = self.rhs(add(s, k3, h))?;
        Ok(Phase {
            a: s.a + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            w: s.w + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        })
    }
}

/// Integrator node: position, state and state derivative (for Hermite
/// interpolation).
#[derive(Clone, Copy, Debug)]
struct Node {
    xi: f64,
    s: Phase,
    d: (f64, f64),
}

const MAX_STEPS: usize = 20_000_000;
const MAX_STEP: f64 = 0.5;

/// Traces the stable manifold backward from `start` until `a` falls to
/// `a_target`. Returns nodes in increasing `xi` with the last-reached node
/// (where `a = a_target`) first.
fn trace_backward(orbit: &Orbit, start: Phase, a_target: f64, rtol: f64, h0: f64) -> Result<Vec<Node>> {
    let mut nodes = Vec::new();
    let mut xi = 0.0;
    let mut s = start;
    let mut h = -h0.abs();
    nodes.push(Node {
        xi,
        s,
        d: orbit.rhs(s)?,
    });
    for _ in 0..MAX_STEPS {
        let full = orbit.rk4(s, h)?;
        let half = orbit.rk4(orbit.rk4(s, 0.5 * h)?, 0.5 * h)?;
        let err_a = (half.a - full.a).abs() / (15.0 * (rtol * half.a.abs()).max(f64::MIN_POSITIVE));
        let err_w = (half.w - full.w).abs() / (15.0 * (rtol * half.w.abs()).max(f64::MIN_POSITIVE));
        let err = err_a.max(err_w);
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.1) } else { 0.1 };
            h *= fac;
            if h.abs() < 1e-14 {
                return Err(Error::BisectionFailed(format!(
                    "step size underflow at a = {:e}",
                    s.a
                )));
            }
            continue;
        }
        let next = Phase {
            a: half.a + (half.a - full.a) / 15.0,
            w: half.w + (half.w - full.w) / 15.0,
        };
        if next.a >= s.a {
            return Err(Error::BisectionFailed(format!(
                "orbit turned back at v = {}",
                orbit.u_plus + s.a
            )));
        }
        if next.a <= a_target {
            // locate the crossing inside this step with plain RK4 sub-steps
            let (mut lo, mut hi) = (0.0, h);
            let mut hit = s;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let p = orbit.rk4(s, mid)?;
                if p.a > a_target {
                    lo = mid;
                } else {
                    hi = mid;
                    hit = p;
                }
                if (hi - lo).abs() <= 1e-15 * h.abs() {
                    break;
                }
            }
            let end = Phase {
                a: a_target,
                w: hit.w,
            };
            nodes.push(Node {
                xi: xi + hi,
                s: end,
                d: orbit.rhs(end)?,
            });
            nodes.reverse();
            return Ok(nodes);
        }
        xi += h;
        s = next;
        nodes.push(Node {
            xi,
            s,
            d: orbit.rhs(s)?,
        });
        let grow = if err > 0.0 { (0.9 * err.powf(-0.2)).min(4.0) } else { 4.0 };
        h = (h * grow).max(-MAX_STEP);
    }
    Err(Error::BisectionFailed("step budget exhausted".into()))
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Computes the stationary profile on `n + 1` uniform nodes over `[0, lx]`.
///
/// `tol` is the relative local-error tolerance of the adaptive RK4 integrator.
pub fn shoot_profile(
    cfg: &FluxConfig,
    ep: &EndpointStates,
    lx: f64,
    n: usize,
    tol: f64,
) -> Result<StationaryProfile> {
    cfg.validate()?;
    let case_tag = classify_case(ep)?;
    if n < crate::grid::MIN_NX || !(lx > 0.0) {
        return Err(Error::InvalidGrid(format!("profile needs n >= 8 and lx > 0 (n = {n}, lx = {lx})")));
    }
    let delta = ep.delta();
    let a_target = ep.u_minus - ep.u_plus;
    let orbit = Orbit {
        flux: cfg.f,
        u_plus: ep.u_plus,
    };
    let rtol = tol.clamp(1e-13, 1e-6);

    let lambda = match case_tag {
        CaseTag::NonDegenerate => {
            let lambda = linearized_nd_rate(cfg, ep)?;
            if lambda * lx < 10.0 {
                return Err(Error::TruncationTooShort {
                    residual: delta * (-lambda * lx).exp(),
                });
            }
            Some(lambda)
        }
        CaseTag::Degenerate => {
            if delta * lx < 50.0 {
                return Err(Error::TruncationTooShort {
                    residual: 2.0 / lx,
                });
            }
            None
        }
    };

    // start deep enough in the tail that the traced orbit covers [0, lx]
    let mut depth = lx + 8.0 / lambda.unwrap_or(1.0);
    let nodes = loop {
        let (start, h0) = match lambda {
            Some(lambda) => {
                let c = cfg.f.deriv(ep.u_plus);
                let a0 = -delta * (-lambda * depth).exp();
                if a0 == 0.0 {
                    return Err(Error::TruncationTooShort { residual: 0.0 });
                }
                (Phase { a: a0, w: -c * lambda * a0 }, 1e-3 / lambda)
            }
            None => {
                // far-field expansion ubar ~ -2/x, w ~ v^3/2 - 3 v^5 / 4
                let a0 = -2.0 / (depth + 10.0);
                (
                    Phase {
                        a: a0,
                        w: 0.5 * a0.powi(3) - 0.75 * a0.powi(5),
                    },
                    1e-3 * a0.abs(),
                )
            }
        };
        let nodes = trace_backward(&orbit, start, a_target, rtol, h0)?;
        let span = nodes.last().unwrap().xi - nodes[0].xi;
        if span >= lx {
            break nodes;
        }
        depth += 2.0 * (lx - span) + 10.0;
    };

    // resample: x = xi - xi_end
    let xi0 = nodes[0].xi;
    let dx = lx / n as f64;
    let mut x = Vec::with_capacity(n + 1);
    let mut dev = Vec::with_capacity(n + 1);
    let mut wv = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for i in 0..=n {
        let xi_target = xi0 + i as f64 * dx;
        while seg + 2 < nodes.len() && nodes[seg + 1].xi < xi_target {
            seg += 1;
        }
        let (p, q) = (nodes[seg], nodes[seg + 1]);
        let a = hermite(p.xi, q.xi, p.s.a, q.s.a, p.d.0, q.d.0, xi_target);
        let w = hermite(p.xi, q.xi, p.s.w, q.s.w, p.d.1, q.d.1, xi_target);
        x.push(i as f64 * dx);
        dev.push(a);
        wv.push(w);
    }
    dev[0] = a_target;
    wv[0] = nodes[0].s.w;

    let f = cfg.f;
    let mut ubar: Vec<f64> = dev.iter().map(|a| ep.u_plus + a).collect();
    ubar[0] = ep.u_minus;
    let mut d1 = Vec::with_capacity(n + 1);
    let mut d2 = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let v = ubar[i];
        let fp = f.deriv(v);
        if fp == 0.0 {
            return Err(Error::SingularDerivative { x: x[i], v });
        }
        let ux = wv[i] / fp;
        let wx = f.increment(ep.u_plus, dev[i]) - ux;
        d1.push(ux);
        d2.push((wx - f.second_deriv(v) * ux * ux) / fp);
    }
    let mut d3 = vec![0.0; n + 1];
    let mut d4 = vec![0.0; n + 1];
    diff_1d(&d2, dx, &mut d3);
    diff2_1d(&d2, dx, &mut d4);

    let qbar: Vec<f64> = dev.iter().map(|&a| -f.increment(ep.u_plus, a)).collect();
    let qbar_x: Vec<f64> = wv.iter().map(|w| -w).collect();

    Ok(StationaryProfile {
        x,
        ubar,
        dev,
        qbar,
        qbar_x,
        dk: [d1, d2, d3, d4],
        case_tag,
        endpoints: *ep,
        flux: *cfg,
        dx,
    })
}

const DECAY_FLOOR: f64 = 1e-12;

/// Fits the far-field decay of the k-th derivative of `ubar - u_plus` over
/// the second half of the domain.
///
/// Non-degenerate profiles return the exponential rate (positive);
/// degenerate profiles return the algebraic exponent against `1 + delta x`
/// (negative, about `-(k + 1)`).
pub fn verify_profile_decay(prof: &StationaryProfile, k: usize) -> Result<f64> {
    assert!(k <= 4, "derivative order {k} > 4");
    let series = if k == 0 { &prof.dev } else { &prof.dk[k - 1] };
    let half = 0.5 * prof.lx();
    let delta = prof.endpoints.delta();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (x, v) in prof.x.iter().zip(series) {
        if *x >= half && v.abs() > DECAY_FLOOR {
            xs.push(match prof.case_tag {
                CaseTag::NonDegenerate => *x,
                CaseTag::Degenerate => (1.0 + delta * x).ln(),
            });
            ys.push(v.abs().ln());
        }
    }
    let fit = least_squares(&xs, &ys).ok_or(Error::WindowEmpty)?;
    Ok(match prof.case_tag {
        CaseTag::NonDegenerate => -fit.slope,
        CaseTag::Degenerate => fit.slope,
    })
}
