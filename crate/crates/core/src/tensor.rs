//! Dense point-wise tensor components and component-function fields.
//!
//! Components are stored row-major with all upper indices first, so the
//! component `t^{i1..ip}_{j1..jq}` lives at the flat offset of the multi-index
//! `(i1, .., ip, j1, .., jq)`. Indices are zero-based in code.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::expr::Expr;
use crate::{Error, Result, MAX_DIM};

/// Largest total rank handled by the multi-index helpers.
pub const MAX_RANK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Valence {
    pub upper: usize,
    pub lower: usize,
}

impl Valence {
    pub const SCALAR: Valence = Valence::new(0, 0);

    pub const fn new(upper: usize, lower: usize) -> Self {
        Valence { upper, lower }
    }

    pub const fn rank(self) -> usize {
        self.upper + self.lower
    }

    /// Position of `slot` among all indices (upper first).
    fn position(self, slot: Slot) -> Result<usize> {
        let (pos, ok) = match slot {
            Slot::Upper(i) => (i, i < self.upper),
            Slot::Lower(j) => (self.upper + j, j < self.lower),
        };
        if ok {
            Ok(pos)
        } else {
            Err(Error::SlotOutOfRange {
                slot: slot.index(),
                valence: self,
            })
        }
    }
}

impl fmt::Display for Valence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.upper, self.lower)
    }
}

/// An index slot of a tensor, numbered separately among upper and lower slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Upper(usize),
    Lower(usize),
}

impl Slot {
    pub fn index(self) -> usize {
        match self {
            Slot::Upper(i) | Slot::Lower(i) => i,
        }
    }

    fn is_upper(self) -> bool {
        matches!(self, Slot::Upper(_))
    }
}

/// Decodes a flat offset into a multi-index of the given rank.
pub(crate) fn unravel(mut flat: usize, dim: usize, rank: usize) -> [usize; MAX_RANK] {
    let mut idx = [0; MAX_RANK];
    for pos in (0..rank).rev() {
        idx[pos] = flat % dim;
        flat /= dim;
    }
    idx
}

pub(crate) fn ravel(idx: &[usize], dim: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    dim: usize,
    valence: Valence,
    data: Vec<f64>,
}

impl Components {
    pub fn zeros(dim: usize, valence: Valence) -> Self {
        assert!(valence.rank() <= MAX_RANK, "rank above {MAX_RANK}");
        Components {
            dim,
            valence,
            data: vec![0.0; dim.pow(valence.rank() as u32)],
        }
    }

    pub fn from_vec(dim: usize, valence: Valence, data: Vec<f64>) -> Result<Self> {
        if valence.rank() > MAX_RANK {
            return Err(Error::Valence {
                expected: Valence::new(MAX_RANK, 0),
                found: valence,
            });
        }
        let expected = dim.pow(valence.rank() as u32);
        if data.len() != expected {
            return Err(Error::ComponentCount {
                expected,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Components { dim, valence, data })
    }

    pub fn scalar(value: f64) -> Self {
        Components {
            dim: 1,
            valence: Valence::SCALAR,
            data: vec![value],
        }
    }

    /// The Kronecker delta `δ^i_j`.
    pub fn kronecker(dim: usize) -> Self {
        let mut t = Self::zeros(dim, Valence::new(1, 1));
        for i in 0..dim {
            t.set(&[i, i], 1.0);
        }
        t
    }

    /// A `(0, 2)` or `(2, 0)` tensor from a row-major square matrix.
    pub fn from_matrix(dim: usize, valence: Valence, matrix: &[f64]) -> Result<Self> {
        if valence.rank() != 2 {
            return Err(Error::Valence {
                expected: Valence::new(0, 2),
                found: valence,
            });
        }
        Self::from_vec(dim, valence, matrix.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.valence.rank());
        self.data[ravel(idx, self.dim)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        debug_assert_eq!(idx.len(), self.valence.rank());
        let at = ravel(idx, self.dim);
        self.data[at] = value;
    }

    /// The single component of a rank-0 tensor.
    pub fn value(&self) -> f64 {
        debug_assert_eq!(self.valence.rank(), 0);
        self.data[0]
    }

    pub fn max_abs(&self) -> f64 {
        crate::max_abs(self.data.iter().copied())
    }

    fn check_same_shape(&self, other: &Components) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.valence != other.valence {
            return Err(Error::Valence {
                expected: self.valence,
                found: other.valence,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Components, f: impl Fn(f64, f64) -> f64) -> Result<Components> {
        self.check_same_shape(other)?;
        Ok(Components {
            dim: self.dim,
            valence: self.valence,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Components) -> Result<Components> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Components) -> Result<Components> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Components {
        Components {
            dim: self.dim,
            valence: self.valence,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest absolute component of `self - other`.
    pub fn max_abs_diff(&self, other: &Components) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Component with the indices at positions `a` and `b` swapped.
    fn swapped(&self, a: usize, b: usize) -> Components {
        let rank = self.valence.rank();
        let mut out = self.clone();
        for flat in 0..self.data.len() {
            let mut idx = unravel(flat, self.dim, rank);
            idx.swap(a, b);
            out.data[flat] = self.data[ravel(&idx[..rank], self.dim)];
        }
        out
    }

    /// Einstein summation over one upper and one lower slot.
    pub fn contract(&self, a: Slot, b: Slot) -> Result<Components> {
        let (up, low) = match (a, b) {
            (Slot::Upper(_), Slot::Lower(_)) => (a, b),
            (Slot::Lower(_), Slot::Upper(_)) => (b, a),
            _ => return Err(Error::SlotKindMismatch),
        };
        let pu = self.valence.position(up)?;
        let pl = self.valence.position(low)?;
        let rank = self.valence.rank();
        let out_valence = Valence::new(self.valence.upper - 1, self.valence.lower - 1);
        let mut out = Components::zeros(self.dim, out_valence);
        for flat in 0..self.data.len() {
            let idx = unravel(flat, self.dim, rank);
            if idx[pu] != idx[pl] {
                continue;
            }
            let rest: Vec<usize> = (0..rank)
                .filter(|&p| p != pu && p != pl)
                .map(|p| idx[p])
                .collect();
            let at = ravel(&rest, self.dim);
            out.data[at] += self.data[flat];
        }
        Ok(out)
    }

    /// Symmetric and antisymmetric parts over two slots of the same kind:
    /// `sym = ½(t + t_swapped)` and `antisym = ½(t - t_swapped)`.
    pub fn split_sym_antisym(&self, a: Slot, b: Slot) -> Result<(Components, Components)> {
        if a.is_upper() != b.is_upper() {
            return Err(Error::SlotKindMismatch);
        }
        let pa = self.valence.position(a)?;
        let pb = self.valence.position(b)?;
        let swapped = self.swapped(pa, pb);
        let sym = self.zip_with(&swapped, |x, y| 0.5 * (x + y))?;
        let anti = self.zip_with(&swapped, |x, y| 0.5 * (x - y))?;
        Ok((sym, anti))
    }

    /// Lowers an upper slot with the symmetric metric part `g_sym` (valence
    /// `(0, 2)`); the lowered index becomes the last lower slot.
    pub fn lower_index(&self, slot: Slot, g_sym: &Components) -> Result<Components> {
        if !slot.is_upper() {
            return Err(Error::SlotKindMismatch);
        }
        self.move_index(slot, g_sym, Valence::new(0, 2))
    }

    /// Raises a lower slot with `g_sym_inverse` (valence `(2, 0)`); the raised
    /// index becomes the last upper slot.
    pub fn raise_index(&self, slot: Slot, g_sym_inverse: &Components) -> Result<Components> {
        if slot.is_upper() {
            return Err(Error::SlotKindMismatch);
        }
        self.move_index(slot, g_sym_inverse, Valence::new(2, 0))
    }

    fn move_index(&self, slot: Slot, metric: &Components, want: Valence) -> Result<Components> {
        if metric.valence != want {
            return Err(Error::Valence {
                expected: want,
                found: metric.valence,
            });
        }
        if metric.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: metric.dim,
            });
        }
        let from = self.valence.position(slot)?;
        let rank = self.valence.rank();
        let v = self.valence;
        let (out_valence, to) = if slot.is_upper() {
            (Valence::new(v.upper - 1, v.lower + 1), rank - 1)
        } else {
            (Valence::new(v.upper + 1, v.lower - 1), v.upper)
        };
        let n = self.dim;
        let mut out = Components::zeros(n, out_valence);
        let mut src = [0usize; MAX_RANK];
        for flat in 0..out.data.len() {
            let idx = unravel(flat, n, rank);
            // Remove the new index from position `to` and reinsert the summed
            // index at `from`.
            let mut rest = [0usize; MAX_RANK];
            let mut r = 0;
            for (p, &i) in idx[..rank].iter().enumerate() {
                if p != to {
                    rest[r] = i;
                    r += 1;
                }
            }
            let new_index = idx[to];
            let mut sum = 0.0;
            for s in 0..n {
                let mut k = 0;
                for p in 0..rank {
                    if p == from {
                        src[p] = s;
                    } else {
                        src[p] = rest[k];
                        k += 1;
                    }
                }
                sum += self.data[ravel(&src[..rank], n)] * metric.get(&[s, new_index]);
            }
            out.data[flat] = sum;
        }
        Ok(out)
    }
}

/// Component functions of a tensor field over a single chart.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    dim: usize,
    valence: Valence,
    exprs: Vec<Expr>,
}

impl TensorField {
    pub fn zeros(dim: usize, valence: Valence) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        assert!(valence.rank() <= MAX_RANK);
        TensorField {
            dim,
            valence,
            exprs: vec![Expr::constant(dim, 0.0); dim.pow(valence.rank() as u32)],
        }
    }

    pub fn from_exprs(dim: usize, valence: Valence, exprs: Vec<Expr>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let expected = dim.pow(valence.rank() as u32);
        if exprs.len() != expected {
            return Err(Error::ComponentCount {
                expected,
                found: exprs.len(),
            });
        }
        if let Some(bad) = exprs.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(TensorField {
            dim,
            valence,
            exprs,
        })
    }

    /// Constant field with the given components.
    pub fn constant(components: &Components) -> Self {
        let dim = components.dim();
        TensorField {
            dim,
            valence: components.valence(),
            exprs: components
                .data()
                .iter()
                .map(|&v| Expr::constant(dim, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.exprs[ravel(idx, self.dim)]
    }

    pub fn set(&mut self, idx: &[usize], expr: Expr) {
        assert_eq!(expr.dim(), self.dim, "expression dimension");
        let at = ravel(idx, self.dim);
        self.exprs[at] = expr;
    }

    /// Component-wise map over two fields of equal shape.
    pub fn zip_map(&self, other: &TensorField, f: impl Fn(&Expr, &Expr) -> Expr) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.valence != other.valence {
            return Err(Error::Valence {
                expected: self.valence,
                found: other.valence,
            });
        }
        Ok(TensorField {
            dim: self.dim,
            valence: self.valence,
            exprs: self
                .exprs
                .iter()
                .zip(&other.exprs)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        TensorField {
            dim: self.dim,
            valence: self.valence,
            exprs: self.exprs.iter().map(f).collect(),
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::PointDimension {
                expected: self.dim,
                found: p.len(),
            });
        }
        Ok(())
    }

    pub fn eval_at(&self, p: &[f64]) -> Result<Components> {
        self.check_point(p)?;
        let data = self
            .exprs
            .iter()
            .map(|e| e.eval(p))
            .collect::<core::result::Result<Vec<_>, _>>()?;
        Components::from_vec(self.dim, self.valence, data)
    }

    /// Values and exact first partials at `p`.
    pub fn jet_at(&self, p: &[f64]) -> Result<Jet> {
        self.check_point(p)?;
        let n = self.dim;
        let mut value = Vec::with_capacity(self.exprs.len());
        let mut partial = Vec::with_capacity(self.exprs.len() * n);
        for e in &self.exprs {
            let d = e.eval_dual(p)?;
            value.push(d.re);
            partial.extend_from_slice(&d.eps[..n]);
        }
        Ok(Jet {
            value: Components::from_vec(n, self.valence, value)?,
            partial: Components::from_vec(
                n,
                Valence::new(self.valence.upper, self.valence.lower + 1),
                partial,
            )?,
        })
    }
}

/// A tensor's components at a point together with their first partials; the
/// partial carries the differentiation index as its last lower slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Components,
    pub partial: Components,
}

impl Jet {
    /// Symmetric and antisymmetric parts over two lower slots, applied to both
    /// the values and the partials.
    pub fn split_lower(&self, a: usize, b: usize) -> Result<(Jet, Jet)> {
        let (vs, va) = self
            .value
            .split_sym_antisym(Slot::Lower(a), Slot::Lower(b))?;
        let (ps, pa) = self
            .partial
            .split_sym_antisym(Slot::Lower(a), Slot::Lower(b))?;
        Ok((
            Jet {
                value: vs,
                partial: ps,
            },
            Jet {
                value: va,
                partial: pa,
            },
        ))
    }
}
