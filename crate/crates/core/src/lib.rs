//! Spectral Galerkin simulation of the fractional stochastic wave equation
//! `∂²u/∂t² = −(−Δ)^γ u + b(u) + σ(u) L̇` on `(0,1)^d` with Dirichlet
//! boundary conditions and Lévy space-time noise `L`.
//!
//! Locally Lipschitz coefficients are handled by truncation at level `N` and
//! pasting at the stopping times `τ_N`; heavy-tailed noise by removing jumps
//! above `K` and pasting at `τ^K`. The [`verify`] module holds the Monte
//! Carlo checks. The guide in `book/` walks through each module.
//!
//! ```
//! use fracwave::RunConfig;
//!
//! let sc = RunConfig::default().scenario()?;
//! let traj = sc.solve(&sc.sample_path(0)?)?;
//! assert_eq!(traj.times.last(), Some(&1.0));
//! # Ok::<(), fracwave::Error>(())
//! ```

pub mod basis;
pub mod config;
pub mod error;
pub mod green;
pub mod io;
pub mod noise;
pub mod solver;
pub mod verify;

pub use config::{parse_config, RunConfig, Scenario};
pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/basis.md")]
    mod basis {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
