//! Rotary inverted pendulum: full Euler-Lagrange model, small-angle
//! matrices, the reduced coefficient model and its linear state space.

mod nonlinear;
mod params;
mod reduced;

pub use nonlinear::{
    full_derivative, full_dynamics, kinetic_energy, lagrangian, mass_matrix, motor_torque,
    potential_energy, total_energy, FullState,
};
pub use params::PhysicalParams;
pub use reduced::{
    augment_integral, controllability_rank, nonlinear_reduced_dynamics, reduced_derivative,
    reduced_dynamics, small_angle_matrices, state_space, IntegralChannel, PendulumState,
    ReducedDynamics, SmallAngleMatrices,
};
