//! Particle simulation of a mean-field system whose particles are pushed
//! down by the fraction of the population that has already hit zero:
//!
//! ```text
//! Y_t = Y_0 + W_t - alpha * L_t,    L_t = P(tau <= t),    tau = inf{t : Y_t <= 0}
//! ```
//!
//! The crate provides the plain and Brownian-bridge timestepping schemes
//! ([`scheme`]), reproducible path generation ([`stochastic`]), refinement
//! studies ([`study`]), post-processing ([`analysis`]) and the horizons from
//! the convergence theory ([`theory`]).

pub mod analysis;
pub mod error;
pub mod io;
pub mod model;
pub mod par;
pub mod scheme;
pub mod stochastic;
pub mod study;
pub mod theory;
#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
pub use model::{
    build_refined_mesh, build_uniform_mesh, InitialLaw, MeshKind, ModelParams, TheoryConstants,
    TimeMesh,
};
pub use scheme::{loss_at, simulate, simulate_bridge, simulate_plain, LossCurve, ParticleState, SchemeKind};
pub use stochastic::{BrownianPaths, PathEnsemble, StreamedPaths};
