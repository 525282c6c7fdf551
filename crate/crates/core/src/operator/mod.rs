//! Hermitian, positive and density operators with cached spectra.

mod hermitian;
mod io;
mod ops;
mod positive;
mod spectral;

pub use hermitian::{CMatrix, CVector, HermitianOperator, C64};
pub use io::MatrixJson;
pub use ops::{
    apply_spectral_function, commutator_trace_norm, moore_penrose_inverse, partial_trace, partial_trace_positive,
    product_state, purify, support_projector, tensor, tensor_positive, trace_norm, trace_norm_distance, Purification,
    Subsystem,
};
pub use positive::{DensityOperator, PositiveOperator, Projector, PROJECTOR_TOL, PSD_TOL, RANK_TOL, TRACE_TOL};
pub use spectral::{eigh, EigenBasis, SpectralDecomposition, DEFAULT_GAP_TOL};
