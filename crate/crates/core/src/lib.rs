//! Connections, torsion and covariant derivatives for generalized Riemannian
//! spaces, i.e. manifolds carrying a non-symmetric basic tensor `g_ij`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! machinery:
//!
//! * [`expr`]: closed-form scalar component functions with exact first
//!   derivatives via forward-mode dual numbers;
//! * [`tensor`]: dense point-wise tensor storage and index algebra;
//! * [`space`]: metric split, inverse of the symmetric part, generalized
//!   Christoffel symbols and torsion;
//! * [`covderiv`]: the four kinds of covariant derivative;
//! * [`kahler`]: checks for generalized Kählerian spaces of the first kind;
//! * [`geomap`]: deformation tensors, geodesic and equitorsion mapping checks;
//! * [`geodesics`]: RK4 geodesics and the geodesic-preservation defect.
//!
//! File formats, sampling, reports and the command-line front end live in the
//! `gkverify` crate.

#![no_std]

extern crate alloc;

pub mod covderiv;
mod error;
pub mod expr;
pub mod geodesics;
pub mod geomap;
pub mod kahler;
mod linalg;
pub mod space;
pub mod tensor;

pub use covderiv::CovKind;
pub use error::Error;
pub use expr::{EvalError, Expr, ParseError};
pub use space::{MapDirection, Space};
pub use tensor::{Components, Slot, TensorField, Valence};

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Largest supported dimension of a space.
pub const MAX_DIM: usize = 8;

/// Threshold below which `|det(g_sym)|` is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Default tolerance for residual checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Residuals of a check that only makes sense once its premises hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Gated<T> {
    Checked(T),
    /// A premise failed; `premise` names it and `residual` is how far off it was.
    PremisesFail {
        premise: &'static str,
        residual: f64,
    },
}

impl<T> Gated<T> {
    pub fn checked(&self) -> Option<&T> {
        match self {
            Gated::Checked(t) => Some(t),
            Gated::PremisesFail { .. } => None,
        }
    }
}

/// Largest absolute value over a set of residual magnitudes; `0` when empty.
pub(crate) fn max_abs<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0, |acc, v| {
        let v = v.abs();
        if v > acc || v.is_nan() {
            v
        } else {
            acc
        }
    })
}
