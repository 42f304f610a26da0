//! The four kinds of covariant derivative with respect to a non-symmetric
//! connection.
//!
//! For a `(1, 1)` tensor `a^i_j`:
//!
//! ```text
//! kind 1: a^i_{j,m} + Γ^i_{pm} a^p_j - Γ^p_{jm} a^i_p
//! kind 2: a^i_{j,m} + Γ^i_{mp} a^p_j - Γ^p_{mj} a^i_p
//! kind 3: a^i_{j,m} + Γ^i_{pm} a^p_j - Γ^p_{mj} a^i_p
//! kind 4: a^i_{j,m} + Γ^i_{mp} a^p_j - Γ^p_{jm} a^i_p
//! ```
//!
//! Other valences are handled slot by slot: each slot takes the connection
//! with the differentiation index either last ([`Orientation::DiffLast`],
//! the kind-1 pattern) or first ([`Orientation::DiffFirst`], kind 2). Kinds 3
//! and 4 are complementary mixed patterns, see [`CovKind::orientations`].
//! The differentiation index is appended as the last lower slot.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::space::{ConnectionAt, Space};
use crate::tensor::{unravel, Components, Jet, TensorField, Valence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `Γ^i_{pm}` on upper slots, `Γ^p_{jm}` on lower slots.
    DiffLast,
    /// `Γ^i_{mp}` on upper slots, `Γ^p_{mj}` on lower slots.
    DiffFirst,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::DiffLast => Orientation::DiffFirst,
            Orientation::DiffFirst => Orientation::DiffLast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CovKind {
    First,
    Second,
    Third,
    Fourth,
}

impl CovKind {
    pub const ALL: [CovKind; 4] = [
        CovKind::First,
        CovKind::Second,
        CovKind::Third,
        CovKind::Fourth,
    ];

    pub fn number(self) -> u8 {
        match self {
            CovKind::First => 1,
            CovKind::Second => 2,
            CovKind::Third => 3,
            CovKind::Fourth => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(CovKind::First),
            2 => Some(CovKind::Second),
            3 => Some(CovKind::Third),
            4 => Some(CovKind::Fourth),
            _ => None,
        }
    }

    /// Per-slot orientation, upper slots first.
    ///
    /// Kinds 1 and 2 orient every slot alike. Kind 3 orients upper slots as
    /// kind 1 and lower slots as kind 2; kind 4 is its complement. For purely
    /// covariant or purely contravariant tensors of rank ≥ 2 that rule would
    /// collapse onto kind 1 or 2, so there the first slot takes the kind-1
    /// (kind 3) or kind-2 (kind 4) pattern and the remaining slots the other.
    pub fn orientations(self, valence: Valence) -> Vec<Orientation> {
        let rank = valence.rank();
        match self {
            CovKind::First => vec![Orientation::DiffLast; rank],
            CovKind::Second => vec![Orientation::DiffFirst; rank],
            CovKind::Third | CovKind::Fourth => {
                let pure = valence.upper == 0 || valence.lower == 0;
                let mut out: Vec<Orientation> = (0..rank)
                    .map(|pos| {
                        let kind_one = if pure { pos == 0 } else { pos < valence.upper };
                        if kind_one {
                            Orientation::DiffLast
                        } else {
                            Orientation::DiffFirst
                        }
                    })
                    .collect();
                if self == CovKind::Fourth {
                    out.iter_mut().for_each(|o| *o = o.flipped());
                }
                out
            }
        }
    }
}

impl fmt::Display for CovKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Ordinary partials of every component; valence `(p, q + 1)`.
pub fn partial_of_field(field: &TensorField, p: &[f64]) -> Result<Components> {
    Ok(field.jet_at(p)?.partial)
}

/// Covariant derivative of a tensor given by its jet, with respect to
/// `gamma` (valence `(1, 2)`), using one orientation per slot.
pub fn covariant_derivative(
    jet: &Jet,
    gamma: &Components,
    orientations: &[Orientation],
) -> Result<Components> {
    let valence = jet.value.valence();
    let n = jet.value.dim();
    let rank = valence.rank();
    if gamma.valence() != Valence::new(1, 2) {
        return Err(Error::Valence {
            expected: Valence::new(1, 2),
            found: gamma.valence(),
        });
    }
    if gamma.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gamma.dim(),
        });
    }
    if orientations.len() != rank {
        return Err(Error::SlotOutOfRange {
            slot: orientations.len(),
            valence,
        });
    }
    let value = jet.value.data();
    let g = gamma.data();
    let g_at = |i: usize, j: usize, k: usize| g[(i * n + j) * n + k];
    let mut strides = [0usize; crate::tensor::MAX_RANK];
    let mut s = 1;
    for pos in (0..rank).rev() {
        strides[pos] = s;
        s *= n;
    }
    let mut out = jet.partial.clone();
    let data = out.data_mut();
    for (flat, slot) in data.iter_mut().enumerate() {
        let m = flat % n;
        let base = flat / n;
        let idx = unravel(base, n, rank);
        let mut acc = *slot;
        for pos in 0..rank {
            let a = idx[pos];
            let stride = strides[pos];
            let rest = base - a * stride;
            let upper = pos < valence.upper;
            for r in 0..n {
                let t = value[rest + r * stride];
                if t == 0.0 {
                    continue;
                }
                let coeff = match (upper, orientations[pos]) {
                    (true, Orientation::DiffLast) => g_at(a, r, m),
                    (true, Orientation::DiffFirst) => g_at(a, m, r),
                    (false, Orientation::DiffLast) => -g_at(r, a, m),
                    (false, Orientation::DiffFirst) => -g_at(r, m, a),
                };
                acc += coeff * t;
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// Covariant derivative of the given kind with respect to `conn`.
pub fn cov_deriv_jet(jet: &Jet, conn: &ConnectionAt, kind: CovKind) -> Result<Components> {
    covariant_derivative(jet, &conn.gamma, &kind.orientations(jet.value.valence()))
}

/// Covariant derivative with respect to the symmetric part of the connection
/// only, where all orientations agree.
pub fn symmetric_cov_deriv_jet(jet: &Jet, conn: &ConnectionAt) -> Result<Components> {
    let rank = jet.value.valence().rank();
    covariant_derivative(jet, &conn.gamma_sym, &vec![Orientation::DiffLast; rank])
}

pub fn cov_deriv(
    field: &TensorField,
    space: &Space,
    kind: CovKind,
    p: &[f64],
) -> Result<Components> {
    check_dims(field, space)?;
    let conn = space.connection_at(p)?;
    cov_deriv_jet(&field.jet_at(p)?, &conn, kind)
}

pub fn symmetric_cov_deriv(field: &TensorField, space: &Space, p: &[f64]) -> Result<Components> {
    check_dims(field, space)?;
    let conn = space.connection_at(p)?;
    symmetric_cov_deriv_jet(&field.jet_at(p)?, &conn)
}

/// `max(|k1 + k2 - 2s|, |k3 + k4 - 2s|)` where `s` is the derivative with
/// respect to the symmetric part of the connection.
pub fn kind_sum_residual(jet: &Jet, conn: &ConnectionAt) -> Result<f64> {
    let sym = symmetric_cov_deriv_jet(jet, conn)?;
    let d: Vec<Components> = CovKind::ALL
        .iter()
        .map(|&k| cov_deriv_jet(jet, conn, k))
        .collect::<Result<_>>()?;
    let twice = sym.scale(2.0);
    let a = d[0].add(&d[1])?.max_abs_diff(&twice)?;
    let b = d[2].add(&d[3])?.max_abs_diff(&twice)?;
    Ok(crate::max_abs([a, b]))
}

fn check_dims(field: &TensorField, space: &Space) -> Result<()> {
    if field.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: field.dim(),
        });
    }
    Ok(())
}
