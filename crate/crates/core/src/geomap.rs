//! Geodesic mappings between two spaces over a common chart.
//!
//! With `Γ̄ = Γ + P`, a mapping is geodesic iff
//! `P^i_{jk} = δ^i_j ψ_k + δ^i_k ψ_j + ξ^i_{jk}` where
//! `ψ_i = P^α_{iα} / (N + 1)` and `ξ` is the antisymmetric part of `P`.
//!
//! # Slot order of ξ in the mapping conditions
//!
//! The ξ-terms of the metric (M) and structure (S) conditions use a fixed
//! index order per kind (`k` is the differentiation index):
//!
//! | kind | M `ξ^α_{..} ḡ_{αj}` | M `ξ^α_{..} ḡ_{iα}` | S `-ξ^h_{..} F̄^α_i` | S `ξ^α_{..} F̄^h_α` |
//! |------|------|------|------|------|
//! | 1 | `ik` | `jk` | `αk` | `ik` |
//! | 2 | `ki` | `kj` | `kα` | `ki` |
//! | 3 | `ik` | `kj` | `αk` | `ki` |
//! | 4 | `ki` | `jk` | `kα` | `ik` |
//!
//! The metric conditions are checked with the literal term `ψ_i ḡ_{jk}`. The
//! same equation with `ψ_i ḡ_{kj}`, which is what substituting `Γ = Γ̄ - P`
//! into the source derivative produces, is reported alongside; the two differ
//! by `2 ψ_i ḡ∨_{jk}`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::covderiv::{covariant_derivative, CovKind, Orientation};
use crate::space::{ConnectionAt, MapDirection, MetricAt, Space};
use crate::tensor::{Components, Jet, Slot, TensorField, Valence};
use crate::{Error, Gated, Result, SINGULAR_DET};

const COVECTOR: Valence = Valence::new(0, 1);
const CONNECTION: Valence = Valence::new(1, 2);

/// Below this `max |ψ|` a mapping is reported as trivial.
pub const TRIVIAL_PSI: f64 = 1e-12;

/// Largest `|ξ^i_{jk} + ξ^i_{kj}|` accepted when building a mapped connection.
pub const ANTISYMMETRY_TOLERANCE: f64 = 1e-12;

/// The fields `ψ_i` and `ξ^i_{jk}` of a geodesic deformation.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    psi: TensorField,
    xi: TensorField,
}

impl Deformation {
    pub fn new(psi: TensorField, xi: TensorField) -> Result<Self> {
        let d = Deformation { psi, xi };
        d.check_shape(d.psi.dim())?;
        Ok(d)
    }

    pub fn zero(dim: usize) -> Self {
        Deformation {
            psi: TensorField::zeros(dim, COVECTOR),
            xi: TensorField::zeros(dim, CONNECTION),
        }
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    pub fn psi(&self) -> &TensorField {
        &self.psi
    }

    pub fn xi(&self) -> &TensorField {
        &self.xi
    }

    pub fn negated(&self) -> Self {
        Deformation {
            psi: self.psi.map(|e| e.negated()),
            xi: self.xi.map(|e| e.negated()),
        }
    }

    pub fn check_shape(&self, dim: usize) -> Result<()> {
        for (field, valence) in [(&self.psi, COVECTOR), (&self.xi, CONNECTION)] {
            if field.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: field.dim(),
                });
            }
            if field.valence() != valence {
                return Err(Error::Valence {
                    expected: valence,
                    found: field.valence(),
                });
            }
        }
        Ok(())
    }

    /// `P^i_{jk} = δ^i_j ψ_k + δ^i_k ψ_j + ξ^i_{jk}` at `p`.
    pub fn tensor_at(&self, p: &[f64]) -> Result<Components> {
        compose(&self.psi.eval_at(p)?, &self.xi.eval_at(p)?)
    }

    /// `max |ξ^i_{jk} + ξ^i_{kj}|` at `p`.
    pub fn antisymmetry_residual_at(&self, p: &[f64]) -> Result<f64> {
        let (sym, _) = self
            .xi
            .eval_at(p)?
            .split_sym_antisym(Slot::Lower(0), Slot::Lower(1))?;
        Ok(2.0 * sym.max_abs())
    }
}

/// `δ^i_j ψ_k + δ^i_k ψ_j + ξ^i_{jk}`.
pub fn compose(psi: &Components, xi: &Components) -> Result<Components> {
    if psi.valence() != COVECTOR {
        return Err(Error::Valence {
            expected: COVECTOR,
            found: psi.valence(),
        });
    }
    if xi.valence() != CONNECTION {
        return Err(Error::Valence {
            expected: CONNECTION,
            found: xi.valence(),
        });
    }
    let n = psi.dim();
    if xi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: xi.dim(),
        });
    }
    let mut out = xi.clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = 0.0;
                if i == j {
                    v += psi.get(&[k]);
                }
                if i == k {
                    v += psi.get(&[j]);
                }
                out.set(&[i, j, k], v + xi.get(&[i, j, k]));
            }
        }
    }
    Ok(out)
}

/// Two spaces over a common chart; `source` carries `Γ`, `target` carries
/// `Γ̄`, `ḡ` and `F̄`.
#[derive(Debug, Clone, Copy)]
pub struct MappingPair<'a> {
    pub source: &'a Space,
    pub target: &'a Space,
}

impl<'a> MappingPair<'a> {
    pub fn new(source: &'a Space, target: &'a Space) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: source.dim(),
                found: target.dim(),
            });
        }
        Ok(MappingPair { source, target })
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    fn connections_at(&self, p: &[f64]) -> Result<(ConnectionAt, ConnectionAt)> {
        Ok((self.source.connection_at(p)?, self.target.connection_at(p)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingData {
    /// `P^i_{jk} = Γ̄^i_{jk} - Γ^i_{jk}`.
    pub deformation: Components,
    pub psi: Components,
    pub xi: Components,
}

impl MappingData {
    pub fn from_deformation(deformation: Components) -> Result<Self> {
        let n = deformation.dim();
        let trace = deformation.contract(Slot::Upper(0), Slot::Lower(1))?;
        let psi = trace.scale(1.0 / (n as f64 + 1.0));
        let (_, xi) = deformation.split_sym_antisym(Slot::Lower(0), Slot::Lower(1))?;
        Ok(MappingData {
            deformation,
            psi,
            xi,
        })
    }

    /// `max |P - δψ - δψ - ξ|`.
    pub fn geodesic_form_residual(&self) -> Result<f64> {
        self.deformation
            .max_abs_diff(&compose(&self.psi, &self.xi)?)
    }

    /// `ξ^α_{iα}`.
    pub fn xi_trace(&self) -> Components {
        self.xi
            .contract(Slot::Upper(0), Slot::Lower(1))
            .expect("xi has valence (1, 2)")
    }
}

pub fn deformation_tensor(pair: &MappingPair<'_>, p: &[f64]) -> Result<Components> {
    let (source, target) = pair.connections_at(p)?;
    target.gamma.sub(&source.gamma)
}

pub fn extract_psi_xi(pair: &MappingPair<'_>, p: &[f64]) -> Result<MappingData> {
    MappingData::from_deformation(deformation_tensor(pair, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeodesicForm {
    pub residual: f64,
    pub psi_max: f64,
    pub xi_max: f64,
}

impl GeodesicForm {
    pub fn merge(self, other: Self) -> Self {
        GeodesicForm {
            residual: crate::max_abs([self.residual, other.residual]),
            psi_max: crate::max_abs([self.psi_max, other.psi_max]),
            xi_max: crate::max_abs([self.xi_max, other.xi_max]),
        }
    }

    pub fn trivial(&self) -> bool {
        self.psi_max < TRIVIAL_PSI
    }
}

pub fn geodesic_form_at(pair: &MappingPair<'_>, p: &[f64]) -> Result<GeodesicForm> {
    let data = extract_psi_xi(pair, p)?;
    Ok(GeodesicForm {
        residual: data.geodesic_form_residual()?,
        psi_max: data.psi.max_abs(),
        xi_max: data.xi.max_abs(),
    })
}

pub fn check_geodesic_form(pair: &MappingPair<'_>, points: &[Vec<f64>]) -> Result<GeodesicForm> {
    points.iter().try_fold(GeodesicForm::default(), |acc, p| {
        Ok(acc.merge(geodesic_form_at(pair, p)?))
    })
}

/// Metric and structure attached to a space built by
/// [`build_mapped_connection`].
#[derive(Debug, Clone, Default)]
pub struct Overlay {
    pub name: Option<String>,
    pub metric: Option<TensorField>,
    pub structure: Option<TensorField>,
}

/// A space whose connection is `base`'s deformed by `deformation`
/// (`Γ̄ = Γ + P` forward, `Γ̄ = Γ - P` backward). `ξ` must be antisymmetric at
/// every point of `check_points`.
pub fn build_mapped_connection(
    base: &Space,
    deformation: Deformation,
    direction: MapDirection,
    overlay: Overlay,
    check_points: &[Vec<f64>],
) -> Result<Space> {
    deformation.check_shape(base.dim())?;
    let residual = check_points.iter().try_fold(0.0_f64, |acc, p| {
        Ok::<_, Error>(acc.max(deformation.antisymmetry_residual_at(p)?))
    })?;
    if residual > ANTISYMMETRY_TOLERANCE {
        return Err(Error::NotAntisymmetric { residual });
    }
    let name = overlay
        .name
        .unwrap_or_else(|| alloc::format!("{} (mapped)", base.name()));
    let mut space = Space::mapped(name, base.clone(), deformation, direction)?;
    if let Some(metric) = overlay.metric {
        space = space.with_metric(metric)?;
    }
    if let Some(structure) = overlay.structure {
        space = space.with_structure(structure)?;
    }
    Ok(space)
}

/// Literal index order of the ξ-terms per kind: `[metric left, metric right,
/// structure upper, structure lower]`. `DiffLast` reads `ξ_{ik}`, `DiffFirst` reads `ξ_{ki}`.
pub const XI_SLOTS: [[Orientation; 4]; 4] = {
    use Orientation::{DiffFirst as F, DiffLast as L};
    [[L, L, L, L], [F, F, F, F], [L, F, L, F], [F, L, F, L]]
};

/// One ξ-term of the condition pair, used to transpose its lower slots for
/// debugging index-order mistakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiTerm {
    MetricLeft,
    MetricRight,
    StructureUpper,
    StructureLower,
}

impl XiTerm {
    fn position(self) -> usize {
        match self {
            XiTerm::MetricLeft => 0,
            XiTerm::MetricRight => 1,
            XiTerm::StructureUpper => 2,
            XiTerm::StructureLower => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TheoremOptions {
    pub transpose_xi: Option<XiTerm>,
}

/// Algebraic conditions on `(ḡ, F̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideConditions {
    pub min_abs_det: f64,
    /// `max |F̄^α_i ḡ_{αj} + F̄^α_j ḡ_{αi}|` with the symmetric part of `ḡ`.
    pub compatibility: f64,
    /// `max |F̄^h_α F̄^α_i + δ^h_i|`.
    pub almost_complex: f64,
}

impl Default for SideConditions {
    fn default() -> Self {
        SideConditions {
            min_abs_det: f64::INFINITY,
            compatibility: 0.0,
            almost_complex: 0.0,
        }
    }
}

impl SideConditions {
    pub fn merge(self, other: Self) -> Self {
        SideConditions {
            min_abs_det: self.min_abs_det.min(other.min_abs_det),
            compatibility: crate::max_abs([self.compatibility, other.compatibility]),
            almost_complex: crate::max_abs([self.almost_complex, other.almost_complex]),
        }
    }

    pub fn pass(&self, tol: f64) -> bool {
        self.min_abs_det >= SINGULAR_DET && self.compatibility <= tol && self.almost_complex <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingResiduals {
    pub kind: CovKind,
    /// Residual of the metric condition with the literal `ψ_i ḡ_{jk}`.
    pub metric: f64,
    /// Residual of the metric condition with `ψ_i ḡ_{kj}`.
    pub metric_reordered: f64,
    /// Residual of the structure condition.
    pub structure: f64,
    pub side: SideConditions,
    pub psi_max: f64,
}

impl MappingResiduals {
    fn empty(kind: CovKind) -> Self {
        MappingResiduals {
            kind,
            metric: 0.0,
            metric_reordered: 0.0,
            structure: 0.0,
            side: SideConditions::default(),
            psi_max: 0.0,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        MappingResiduals {
            kind: self.kind,
            metric: crate::max_abs([self.metric, other.metric]),
            metric_reordered: crate::max_abs([self.metric_reordered, other.metric_reordered]),
            structure: crate::max_abs([self.structure, other.structure]),
            side: self.side.merge(other.side),
            psi_max: crate::max_abs([self.psi_max, other.psi_max]),
        }
    }

    pub fn trivial(&self) -> bool {
        self.psi_max < TRIVIAL_PSI
    }
}

/// Target-side data shared by the mapping and equitorsion conditions.
struct TargetAt {
    metric: MetricAt,
    metric_jet: Jet,
    structure: Jet,
    connection: ConnectionAt,
    side: SideConditions,
}

fn target_at(pair: &MappingPair<'_>, p: &[f64]) -> Result<TargetAt> {
    let target = pair.target;
    let metric_field = target.metric().ok_or(Error::MissingMetric)?;
    let structure_field = target.structure().ok_or(Error::MissingStructure)?;
    let metric = MetricAt::from_field(metric_field, p)?;
    let metric_jet = metric_field.jet_at(p)?;
    let structure = structure_field.jet_at(p)?;
    let connection = target.connection_at(p)?;
    let side = side_conditions(&metric, &structure.value);
    Ok(TargetAt {
        metric,
        metric_jet,
        structure,
        connection,
        side,
    })
}

fn side_conditions(metric: &MetricAt, f: &Components) -> SideConditions {
    let n = metric.dim();
    let gs = &metric.g_sym;
    let mut compatibility = 0.0_f64;
    let mut almost_complex = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let c: f64 = (0..n)
                .map(|a| f.get(&[a, i]) * gs.get(&[a, j]) + f.get(&[a, j]) * gs.get(&[a, i]))
                .sum();
            compatibility = crate::max_abs([compatibility, c]);
            let delta = if i == j { 1.0 } else { 0.0 };
            let ff: f64 = (0..n).map(|a| f.get(&[i, a]) * f.get(&[a, j])).sum();
            almost_complex = crate::max_abs([almost_complex, ff + delta]);
        }
    }
    SideConditions {
        min_abs_det: metric.det_sym.abs(),
        compatibility,
        almost_complex,
    }
}

fn orientations_2(kind: CovKind) -> [Orientation; 2] {
    let o = kind.orientations(Valence::new(0, 2));
    [o[0], o[1]]
}

/// `ξ^a_{xk}` (`DiffLast`) or `ξ^a_{kx}` (`DiffFirst`).
fn xi_at(xi: &Components, orientation: Orientation, a: usize, x: usize, k: usize) -> f64 {
    match orientation {
        Orientation::DiffLast => xi.get(&[a, x, k]),
        Orientation::DiffFirst => xi.get(&[a, k, x]),
    }
}

/// Residuals of the condition pair for `kind` at one point.
pub fn mapping_theorem_at(
    pair: &MappingPair<'_>,
    kind: CovKind,
    p: &[f64],
    options: TheoremOptions,
) -> Result<MappingResiduals> {
    let n = pair.dim();
    let t = target_at(pair, p)?;
    let source = pair.source.connection_at(p)?;
    let data = MappingData::from_deformation(t.connection.gamma.sub(&source.gamma)?)?;
    let (psi, xi) = (&data.psi, &data.xi);

    let mut slots = XI_SLOTS[kind.number() as usize - 1];
    if let Some(term) = options.transpose_xi {
        let at = term.position();
        slots[at] = slots[at].flipped();
    }

    // Metric: ḡ_{ij|k} in Γ against ḡ∨_{ij|k} in Γ̄ plus the ψ and ξ terms.
    let o2 = orientations_2(kind);
    let lhs_a = covariant_derivative(&t.metric_jet, &source.gamma, &o2)?;
    let (_, anti) = t.metric_jet.split_lower(0, 1)?;
    let bar_a = covariant_derivative(&anti, &t.connection.gamma, &o2)?;
    let g = &t.metric.g;
    let ps = |i: usize| psi.get(&[i]);
    let mut metric = 0.0_f64;
    let mut metric_reordered = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let xi_terms: f64 = (0..n)
                    .map(|a| {
                        xi_at(xi, slots[0], a, i, k) * g.get(&[a, j])
                            + xi_at(xi, slots[1], a, j, k) * g.get(&[i, a])
                    })
                    .sum();
                let common = bar_a.get(&[i, j, k])
                    + 2.0 * ps(k) * g.get(&[i, j])
                    + ps(j) * g.get(&[i, k])
                    + xi_terms;
                let lhs = lhs_a.get(&[i, j, k]);
                metric = crate::max_abs([metric, lhs - (common + ps(i) * g.get(&[j, k]))]);
                metric_reordered =
                    crate::max_abs([metric_reordered, lhs - (common + ps(i) * g.get(&[k, j]))]);
            }
        }
    }

    // Structure: F̄^h_{i|k} in Γ.
    let o11 = kind.orientations(Valence::new(1, 1));
    let lhs_b = covariant_derivative(&t.structure, &source.gamma, &o11)?;
    let bar_b = match kind {
        // Zero on a GK1 target, so kinds 1 and 2 omit it.
        CovKind::First | CovKind::Second => None,
        CovKind::Third | CovKind::Fourth => Some(covariant_derivative(
            &t.structure,
            &t.connection.gamma,
            &o11,
        )?),
    };
    let f = &t.structure.value;
    let mut structure = 0.0_f64;
    for h in 0..n {
        for i in 0..n {
            for k in 0..n {
                let f_psi: f64 = (0..n).map(|a| f.get(&[a, i]) * ps(a)).sum();
                let xi_terms: f64 = (0..n)
                    .map(|a| {
                        -xi_at(xi, slots[2], h, a, k) * f.get(&[a, i])
                            + xi_at(xi, slots[3], a, i, k) * f.get(&[h, a])
                    })
                    .sum();
                let mut rhs = f.get(&[h, k]) * ps(i) + xi_terms;
                if h == k {
                    rhs -= f_psi;
                }
                if let Some(bar) = &bar_b {
                    rhs += bar.get(&[h, i, k]);
                }
                structure = crate::max_abs([structure, lhs_b.get(&[h, i, k]) - rhs]);
            }
        }
    }

    Ok(MappingResiduals {
        kind,
        metric,
        metric_reordered,
        structure,
        side: t.side,
        psi_max: psi.max_abs(),
    })
}

pub fn check_mapping_theorem(
    pair: &MappingPair<'_>,
    kind: CovKind,
    points: &[Vec<f64>],
    options: TheoremOptions,
) -> Result<MappingResiduals> {
    points
        .iter()
        .try_fold(MappingResiduals::empty(kind), |acc, p| {
            Ok(acc.merge(mapping_theorem_at(pair, kind, p, options)?))
        })
}

/// `max |Γ̄∨ - Γ∨|` at one point.
pub fn equitorsion_at(pair: &MappingPair<'_>, p: &[f64]) -> Result<f64> {
    let (source, target) = pair.connections_at(p)?;
    target.torsion.max_abs_diff(&source.torsion)
}

pub fn check_equitorsion(pair: &MappingPair<'_>, points: &[Vec<f64>]) -> Result<f64> {
    points.iter().try_fold(0.0, |acc, p| {
        Ok(crate::max_abs([acc, equitorsion_at(pair, p)?]))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquitorsionResiduals {
    pub kind: CovKind,
    /// Reduced metric condition on the symmetric part of `ḡ`.
    pub metric: f64,
    /// Kind 4 only: the reduced metric condition with `ψ_i ḡ_{jk}` taken from
    /// the full `ḡ`. Zero for the other kinds.
    pub metric_full_variant: f64,
    pub structure: f64,
    pub side: SideConditions,
    pub psi_max: f64,
}

impl EquitorsionResiduals {
    fn empty(kind: CovKind) -> Self {
        EquitorsionResiduals {
            kind,
            metric: 0.0,
            metric_full_variant: 0.0,
            structure: 0.0,
            side: SideConditions::default(),
            psi_max: 0.0,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        EquitorsionResiduals {
            kind: self.kind,
            metric: crate::max_abs([self.metric, other.metric]),
            metric_full_variant: crate::max_abs([
                self.metric_full_variant,
                other.metric_full_variant,
            ]),
            structure: crate::max_abs([self.structure, other.structure]),
            side: self.side.merge(other.side),
            psi_max: crate::max_abs([self.psi_max, other.psi_max]),
        }
    }

    pub fn trivial(&self) -> bool {
        self.psi_max < TRIVIAL_PSI
    }
}

/// Reduced conditions at one point, without the equitorsion gate.
pub fn equitorsion_theorem_at(
    pair: &MappingPair<'_>,
    kind: CovKind,
    p: &[f64],
) -> Result<EquitorsionResiduals> {
    let n = pair.dim();
    let t = target_at(pair, p)?;
    let source = pair.source.connection_at(p)?;
    let data = MappingData::from_deformation(t.connection.gamma.sub(&source.gamma)?)?;
    let psi = &data.psi;
    let ps = |i: usize| psi.get(&[i]);

    let (sym, _) = t.metric_jet.split_lower(0, 1)?;
    let lhs_a = covariant_derivative(&sym, &source.gamma, &orientations_2(kind))?;
    let gs = &t.metric.g_sym;
    let g = &t.metric.g;
    let mut metric = 0.0_f64;
    let mut metric_full_variant = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let common = 2.0 * ps(k) * gs.get(&[i, j]) + ps(j) * gs.get(&[i, k]);
                let lhs = lhs_a.get(&[i, j, k]);
                metric = crate::max_abs([metric, lhs - (common + ps(i) * gs.get(&[j, k]))]);
                if kind == CovKind::Fourth {
                    metric_full_variant = crate::max_abs([
                        metric_full_variant,
                        lhs - (common + ps(i) * g.get(&[j, k])),
                    ]);
                }
            }
        }
    }

    let o11 = kind.orientations(Valence::new(1, 1));
    let lhs_b = covariant_derivative(&t.structure, &source.gamma, &o11)?;
    let bar_b = match kind {
        CovKind::First | CovKind::Second => None,
        CovKind::Third | CovKind::Fourth => Some(covariant_derivative(
            &t.structure,
            &t.connection.gamma,
            &o11,
        )?),
    };
    let f = &t.structure.value;
    let mut structure = 0.0_f64;
    for h in 0..n {
        for i in 0..n {
            for k in 0..n {
                let mut rhs = f.get(&[h, k]) * ps(i);
                if h == k {
                    rhs -= (0..n).map(|a| f.get(&[a, i]) * ps(a)).sum::<f64>();
                }
                if let Some(bar) = &bar_b {
                    rhs += bar.get(&[h, i, k]);
                }
                structure = crate::max_abs([structure, lhs_b.get(&[h, i, k]) - rhs]);
            }
        }
    }

    Ok(EquitorsionResiduals {
        kind,
        metric,
        metric_full_variant,
        structure,
        side: t.side,
        psi_max: psi.max_abs(),
    })
}

/// Reduced conditions, gated on `max |Γ̄∨ - Γ∨| <= tol`.
pub fn check_equitorsion_theorem(
    pair: &MappingPair<'_>,
    kind: CovKind,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Gated<EquitorsionResiduals>> {
    let gate = check_equitorsion(pair, points)?;
    if !(gate <= tol) {
        return Ok(Gated::PremisesFail {
            premise: "equitorsion",
            residual: gate,
        });
    }
    let merged = points
        .iter()
        .try_fold(EquitorsionResiduals::empty(kind), |acc, p| {
            Ok::<_, Error>(acc.merge(equitorsion_theorem_at(pair, kind, p)?))
        })?;
    Ok(Gated::Checked(merged))
}
