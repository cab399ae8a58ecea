//! Fixed-step simulation of the pendulum under the sampled controller.

mod controller;
mod filter;
mod integrate;
mod scenario;
mod trace;

pub use controller::{controller_update, ControlOutput, ControllerRuntimeConfig, Measurement, RateSource};
pub use filter::{filtered_derivative_update, DerivativeFilter};
pub use integrate::{rk4_integrate, rk4_step};
pub use scenario::{
    inject_disturbance, run_scenario, simulate_feedback_loop, simulate_free_motion, summarize, PlantModel,
    ReferenceKind, ReferenceSignal, Scenario, ScenarioSummary, SegmentSummary, STEADY_STATE_WINDOW,
};
pub use trace::{format_sig9, PlantMode, Trace, TraceMeta, TraceRecord, CSV_HEADER};
