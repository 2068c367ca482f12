//! Flux functions `f`, `g` of the conservation law and the local
//! Lax-Friedrichs interface flux.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FluxKind {
    /// `u^2 / 2`
    Burgers,
    /// `c u`
    Linear(f64),
    Zero,
}

impl FluxKind {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            FluxKind::Burgers => 0.5 * u * u,
            FluxKind::Linear(c) => c * u,
            FluxKind::Zero => 0.0,
        }
    }

    #[inline]
    pub fn deriv(self, u: f64) -> f64 {
        match self {
            FluxKind::Burgers => u,
            FluxKind::Linear(c) => c,
            FluxKind::Zero => 0.0,
        }
    }

    #[inline]
    pub fn second_deriv(self, _u: f64) -> f64 {
        match self {
            FluxKind::Burgers => 1.0,
            FluxKind::Linear(_) | FluxKind::Zero => 0.0,
        }
    }

    /// `flux(base + a) - flux(base)` without cancellation for small `a`.
    #[inline]
    pub fn increment(self, base: f64, a: f64) -> f64 {
        match self {
            FluxKind::Burgers => a * (base + 0.5 * a),
            FluxKind::Linear(c) => c * a,
            FluxKind::Zero => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    F,
    G,
}

/// Flux pair. `f` is restricted to the strictly convex Burgers flux.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxConfig {
    pub f: FluxKind,
    pub g: FluxKind,
    /// Lower bound for `f''`.
    pub kappa: f64,
}

impl Default for FluxConfig {
    fn default() -> Self {
        FluxConfig {
            f: FluxKind::Burgers,
            g: FluxKind::Burgers,
            kappa: 1.0,
        }
    }
}

impl FluxConfig {
    pub fn new(g: FluxKind, kappa: f64) -> Result<Self> {
        let cfg = FluxConfig {
            f: FluxKind::Burgers,
            g,
            kappa,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f != FluxKind::Burgers {
            return Err(Error::Validation("flux.f must be burgers".into()));
        }
        if !(self.kappa > 0.0 && self.kappa <= self.f.second_deriv(0.0)) {
            return Err(Error::Validation(format!(
                "convexity floor kappa = {} must lie in (0, 1] for burgers f",
                self.kappa
            )));
        }
        if let FluxKind::Linear(c) = self.g {
            if !c.is_finite() {
                return Err(Error::Validation("flux.g_coeff must be finite".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn kind(&self, which: Which) -> FluxKind {
        match which {
            Which::F => self.f,
            Which::G => self.g,
        }
    }
}

pub fn eval_flux(cfg: &FluxConfig, which: Which, u: f64) -> f64 {
    cfg.kind(which).eval(u)
}

pub fn eval_flux_deriv(cfg: &FluxConfig, which: Which, u: f64) -> f64 {
    cfg.kind(which).deriv(u)
}

/// Local Lax-Friedrichs flux. `a` must dominate `|flux'|` at both states.
pub fn llf_flux(cfg: &FluxConfig, which: Which, ul: f64, ur: f64, a: f64) -> Result<f64> {
    let k = cfg.kind(which);
    let speed = k.deriv(ul).abs().max(k.deriv(ur).abs());
    if a < speed {
        return Err(Error::WaveSpeedTooSmall { bound: a, speed });
    }
    Ok(rusanov(k, ul, ur, a))
}

/// Unchecked LLF value; callers guarantee the wave-speed bound.
#[inline]
pub(crate) fn rusanov(k: FluxKind, ul: f64, ur: f64, a: f64) -> f64 {
    0.5 * (k.eval(ul) + k.eval(ur)) - 0.5 * a * (ur - ul)
}

/// Rusanov flux with the tightest admissible local speed.
#[inline]
pub(crate) fn rusanov_local(k: FluxKind, ul: f64, ur: f64) -> f64 {
    let a = k.deriv(ul).abs().max(k.deriv(ur).abs());
    rusanov(k, ul, ur, a)
}
