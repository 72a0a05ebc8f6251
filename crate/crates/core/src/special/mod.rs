//! Special functions: gamma family, quadrature, one-sided stable densities.

pub mod gamma;
pub mod quadrature;
pub mod stable;

pub use gamma::{beta, gamma, gamma_ratio, ln_factorial, ln_gamma, ln_rising_factorial, rising_factorial};
pub use quadrature::{integrate, Estimate, Integrator};
pub use stable::{
    ballot_density_p, chi_density, first_passage_density_q, positive_stable_density, Alpha, LnDensityTable,
    PositiveStable, StableConstants,
};
