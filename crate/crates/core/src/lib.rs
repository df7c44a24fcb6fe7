//! Numerics for the parabolic Anderson model driven by finitely many moving
//! catalysts: annealed Lyapunov exponents λ_p^{(n)}(κ, ρ), lattice Green
//! functions, Feynman–Kac Monte Carlo and certified intermittency regimes.
//!
//! Lattice fields, the moment generator and the eigensolver are generic over
//! the scalar type; [`Field64`], [`Generator32`] and friends fix it.

pub mod eigen;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod montecarlo;
pub mod num;
pub mod phase;
pub mod quadrature;
pub mod special;
pub mod spectral;

pub use error::{PamError, Result};
pub use greens::{alpha, green_at, green_l2sq, green_zero, GreenEstimate, GreenMethod, GreenQuantity, GreenTable, GreenValue};
pub use lattice::{Field, LatticeBox, MAX_SITES};
pub use montecarlo::{collision_time, lambda_mc, pde_moment_oracle, sample_path, JumpPath, McEstimate, McOptions};
pub use num::Real;
pub use phase::{classify, kappa_bounds, sweep, KappaBounds, Regime, RegimeLabel};
pub use spectral::{
    check_gn, f0_rayleigh, lambda_spectral, mu, mu_inverse, tensor_gap, top_eigen, EstimateKind, Generator,
    LyapunovEstimate, PamParams, SpectralOptions,
};

pub type Field64 = Field<f64>;
pub type Field32 = Field<f32>;
pub type Generator64 = Generator<f64>;
pub type Generator32 = Generator<f32>;
