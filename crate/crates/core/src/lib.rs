//! Quantum and classical correlations of finite-dimensional states, measured
//! as relative-entropy distances.
//!
//! Starting from a state `ρ`, the closest separable state `σ`, the closest
//! classical state `χ` and the closest product state `π` are located, and
//! each correlation is the relative entropy between two of them:
//!
//! | quantity | distance |
//! |---|---|
//! | entanglement `E` | `min_σ S(ρ‖σ)` |
//! | discord `D` (relative entropy of discord) | `min_χ S(ρ‖χ)` |
//! | dissonance `Q` | `min_χ S(σ‖χ)` |
//! | classical correlations `C` | `S(χ‖π_χ)` |
//! | total correlations `T` | `S(ρ‖π_ρ)` |
//! | `L` | `S(π_ρ‖π_χ)` |
//!
//! All but `E` reduce to entropy differences, so the loops close exactly:
//! `D + C = T + L`. The mutual-information based quantities (discord `δ`,
//! measurement-induced disturbance) are provided alongside. Entropies are in
//! bits throughout.
//!
//! ```
//! use qcorr::families::{BellKind, StateFamily};
//! use qcorr::measures;
//! use qcorr::optimizer::OptimizerSettings;
//!
//! let rho = StateFamily::Bell(BellKind::PhiPlus).instantiate().unwrap();
//! let red = measures::red(&rho, &[0, 1], &OptimizerSettings::default()).unwrap();
//! assert!((red.value - 1.0).abs() < 1e-6);
//! assert!((rho.mutual_information() - 2.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod families;
pub mod linalg;
pub mod measurement;
pub mod measures;
pub mod optimizer;
pub mod state;

pub use error::{QcorrError, Result};
pub use measurement::{LocalBasis, LocalBasisSet, MeasurementEnsemble};
pub use optimizer::OptimizerSettings;
pub use state::{dephase, relative_entropy, DensityMatrix, SubsystemLayout};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Largest accepted `|ρ − ρ†|` entry before validation fails.
    pub const HERM: f64 = 1e-8;
    /// Largest accepted `|tr ρ − 1|`.
    pub const TRACE: f64 = 1e-8;
    /// Eigenvalues down to `-PSD` are clamped to zero; eigenvalues up to `PSD`
    /// count as outside the support.
    pub const PSD: f64 = 1e-10;
    /// Unitarity tolerance for basis matrices and eigenvector sets.
    pub const ORTH: f64 = 1e-10;
    /// Weight on a null eigenvector that makes a relative entropy infinite.
    pub const SUPPORT: f64 = 1e-12;
}
