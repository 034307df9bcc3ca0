//! Quantum Fisher information for multimode Gaussian states.
//!
//! The crate works in the ladder (complex) phase-space representation: a
//! state is the pair of first and second moments of (a_1..a_n, a†_1..a†_n),
//! with symplectic form K = diag(I, -I). It provides
//!
//! * Gaussian state types, validation and quadrature-form conversion
//!   ([`state`]),
//! * symplectic spectra and gauge-fixed Williamson factorizations
//!   ([`williamson`]),
//! * one-parameter state families with analytic, generator or
//!   finite-difference derivative data ([`family`]),
//! * two-mode Uhlmann fidelity and a fidelity-based QFI check ([`fidelity`]),
//! * the QFI proper through several interchangeable routes: closed two-mode
//!   expressions, an exact multimode Williamson form, a convergent series
//!   with a rigorous remainder bound, iso-thermal and pure-state shortcuts,
//!   and a regularization for states with pure modes ([`qfi`]),
//! * an independent truncated Fock-space oracle ([`fock`]),
//! * probe/channel builders for squeezing-estimation studies and the
//!   associated closed-form optima ([`probes`]),
//! * seeded random generators of physical states and families ([`sampling`]).

pub mod error;
pub mod family;
pub mod fidelity;
pub mod fock;
pub mod linalg;
pub mod probes;
pub mod qfi;
pub mod sampling;
pub mod state;
pub mod williamson;

pub use error::{Error, Result};
pub use family::{DerivativeBundle, DerivativeTier, FdConfig, P1Blocks, StateFamily};
pub use fidelity::{bures_qfi_fd, two_mode_fidelity, FidelityBreakdown};
pub use qfi::{
    qfi_auto, qfi_isothermal, qfi_multimode_williamson, qfi_pure_point, qfi_regularized,
    qfi_regularized_ladder, qfi_series, qfi_two_mode, qfi_two_mode_williamson,
    series_remainder_bound, Diagnostics, PureConvention, QfiConfig, QfiEstimate, QfiMethod,
};
pub use linalg::{CMat, CVec, RMat, RVec};
pub use probes::{
    apply_channel_family, build_probe, ellipse_export, figure_ellipses, probe_family, ChannelSpec,
    Ellipse, ProbeMode, ProbeSpec,
};
pub use state::{GaussianState, RealGaussianState, Tolerances, ValidationReport};
pub use williamson::{
    symplectic_eigenvalues, symplectic_eigenvalues_two_mode, williamson_decompose, GaugeTag,
    SymplecticMatrix, WilliamsonFactors,
};
