//! Integral state-feedback control of chain plants and of the rotary
//! inverted pendulum.
//!
//! * [`lti`]: integrator-chain plants with integral action, closed-loop
//!   polynomials and disturbance rejection.
//! * [`model`]: full Euler-Lagrange pendulum dynamics and the reduced
//!   small-angle model with its cubic corrections.
//! * [`synthesis`]: pole placement for the augmented pendulum.
//! * [`analysis`]: norm bounds, Cauchy convergence and energy checks.
//! * [`sim`]: sampled-controller simulation with saturation, anti-windup and
//!   filtered rate estimates.
//!
//! ```
//! use pendulum_control::{model::ReducedDynamics, synthesis};
//!
//! let r = ReducedDynamics::identified();
//! let k = synthesis::place_poles(&r, &synthesis::lab_poles()).unwrap();
//! assert!((k.get(2) - 27.681).abs() < 0.02 * 27.681);
//! ```

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod lti;
pub mod model;
pub mod poly;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
pub use poly::Polynomial;
