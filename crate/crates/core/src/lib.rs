//! Simulator and verification harness for the two-dimensional
//! hyperbolic-elliptic radiating gas model
//!
//! ```text
//! u_t + f(u)_x + g(u)_y + div q = 0,    -grad div q + q + grad u = 0
//! ```
//!
//! on the half-strip `x > 0` with outflow Dirichlet data `u(0, y, t) = u_minus`.

pub mod elliptic;
pub mod diagnostics;
pub mod error;
pub mod fit;
pub mod flux;
pub mod grid;
pub mod io;
pub mod par;
pub mod stationary;
pub mod stepper;

pub use error::{Error, Result};
