//! The random walk of the network: Monte Carlo estimates, exact Green
//! quantities of the killed chain, and the Poisson representation.

pub mod green;
pub mod poisson;
pub mod walk;

pub use green::{
    dipole_green, dipole_matrix_m, green_exact, green_identities, hitting_function, monopole_green, multipole,
    root_green_sequence, two_point_hitting, DipoleMatrix, GreenIdentityReport, GreenSolve,
};
pub use poisson::{poisson_kernel, poisson_stabilization, Compatibility, PoissonMethod, PoissonResult, StabilizationReport};
pub use walk::{
    level_progression, sample_stopping_times, simulate_walks, Estimate, Quantity, StoppingTimeSample, WalkConfig,
    WalkEstimates, Walker,
};
