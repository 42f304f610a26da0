use crate::expr::{EvalError, ParseError};
use crate::tensor::Valence;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("point has {found} coordinates, expected {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported dimension {0} (supported: 2..={max})", max = crate::MAX_DIM)]
    UnsupportedDimension(usize),
    #[error("tensor has {found} components, expected {expected}")]
    ComponentCount { expected: usize, found: usize },
    #[error("non-finite tensor component at flat index {0}")]
    NonFinite(usize),
    #[error("expected valence {expected}, found {found}")]
    Valence { expected: Valence, found: Valence },
    #[error("slot {slot} out of range for valence {valence}")]
    SlotOutOfRange { slot: usize, valence: Valence },
    #[error("slot kinds do not match the operation")]
    SlotKindMismatch,
    #[error("symmetric part of the metric is singular (|det| = {det:e})")]
    SingularMetric { det: f64 },
    #[error("space has no metric")]
    MissingMetric,
    #[error("space has no structure field")]
    MissingStructure,
    #[error("xi is not antisymmetric in its lower indices (max |xi_jk + xi_kj| = {residual:e})")]
    NotAntisymmetric { residual: f64 },
    #[error("geodesic integration needs a positive finite step, got {0}")]
    InvalidStep(f64),
    #[error("velocity vanishes at sample {0}")]
    ZeroVelocity(usize),
    #[error("geodesic state became non-finite at step {0}")]
    DivergedState(usize),
}
