//! Generalized Kählerian spaces of the first kind: an almost complex structure
//! `F^h_i` with
//!
//! ```text
//! F^h_p F^p_i = -δ^h_i
//! g_(pq) F^p_i F^q_j = g_(ij),   g^(ij) = g^(pq) F^i_p F^j_q
//! F^h_{i|j} = 0    (kind 1)
//! F^h_{i;j} = 0    (symmetric part of the connection)
//! ```
//!
//! Under these the other kinds satisfy `F^h_{i 2|j} = 0`,
//! `F^h_{i 3|j} = 2 F^h_p Γ∨^p_{ij}` and `F^h_{i 4|j} = 2 F^p_i Γ∨^h_{jp}`.

use alloc::vec::Vec;

use crate::covderiv::{cov_deriv_jet, kind_sum_residual, symmetric_cov_deriv_jet, CovKind};
use crate::space::{ConnectionAt, MetricAt, Space};
use crate::tensor::{Components, Jet, Slot};
use crate::{max_abs, Error, Gated, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StructureResiduals {
    /// `max |F^h_p F^p_i + δ^h_i|`.
    pub almost_complex: f64,
    /// `max |g_(pq) F^p_i F^q_j - g_(ij)|`.
    pub compatibility: f64,
    /// `max |g^(ij) - g^(pq) F^i_p F^j_q|`.
    pub compatibility_inverse: f64,
    /// `max |F_ij + F_ji|` with `F_ji = F^p_j g_(pi)`.
    pub antisymmetry_lower: f64,
    /// `max |F^ij + F^ji|` with `F^ji = F^j_p g^(pi)`.
    pub antisymmetry_upper: f64,
}

impl StructureResiduals {
    pub fn merge(self, o: Self) -> Self {
        StructureResiduals {
            almost_complex: max_abs([self.almost_complex, o.almost_complex]),
            compatibility: max_abs([self.compatibility, o.compatibility]),
            compatibility_inverse: max_abs([self.compatibility_inverse, o.compatibility_inverse]),
            antisymmetry_lower: max_abs([self.antisymmetry_lower, o.antisymmetry_lower]),
            antisymmetry_upper: max_abs([self.antisymmetry_upper, o.antisymmetry_upper]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstancyResiduals {
    /// `max |F^h_{i 1|j}|`.
    pub first_kind: f64,
    /// `max |F^h_{i;j}|`.
    pub symmetric: f64,
}

impl ConstancyResiduals {
    pub fn merge(self, o: Self) -> Self {
        ConstancyResiduals {
            first_kind: max_abs([self.first_kind, o.first_kind]),
            symmetric: max_abs([self.symmetric, o.symmetric]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorsionRelationResiduals {
    /// `max |F^h_{i 2|j}|`.
    pub second: f64,
    /// `max |F^h_{i 3|j} - 2 F^h_p Γ∨^p_{ij}|`.
    pub third: f64,
    /// `max |F^h_{i 4|j} - 2 F^p_i Γ∨^h_{jp}|`.
    pub fourth: f64,
}

impl TorsionRelationResiduals {
    pub fn merge(self, o: Self) -> Self {
        TorsionRelationResiduals {
            second: max_abs([self.second, o.second]),
            third: max_abs([self.third, o.third]),
            fourth: max_abs([self.fourth, o.fourth]),
        }
    }

    pub fn max(&self) -> f64 {
        max_abs([self.second, self.third, self.fourth])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceResiduals {
    /// `max |Γ∨^α_{iα}|`.
    pub torsion: f64,
    /// `|F^α_α|`, `None` without a structure.
    pub structure: Option<f64>,
}

impl TraceResiduals {
    pub fn merge(self, o: Self) -> Self {
        TraceResiduals {
            torsion: max_abs([self.torsion, o.torsion]),
            structure: match (self.structure, o.structure) {
                (Some(a), Some(b)) => Some(max_abs([a, b])),
                (a, b) => a.or(b),
            },
        }
    }
}

fn structure_jet(space: &Space, p: &[f64]) -> Result<Jet> {
    space.structure().ok_or(Error::MissingStructure)?.jet_at(p)
}

pub fn structure_algebra_at(space: &Space, p: &[f64]) -> Result<StructureResiduals> {
    let f = structure_jet(space, p)?.value;
    let metric = space.metric_at(p)?;
    Ok(structure_algebra(&f, &metric))
}

fn structure_algebra(f: &Components, metric: &MetricAt) -> StructureResiduals {
    let n = f.dim();
    let gs = &metric.g_sym;
    let gi = &metric.g_sym_inverse;
    let fl = |a: usize, b: usize| -> f64 { (0..n).map(|p| f.get(&[p, a]) * gs.get(&[p, b])).sum() };
    let fu = |a: usize, b: usize| -> f64 { (0..n).map(|p| f.get(&[a, p]) * gi.get(&[p, b])).sum() };
    let mut r = StructureResiduals::default();
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            let ff: f64 = (0..n).map(|p| f.get(&[i, p]) * f.get(&[p, j])).sum();
            let mut lower = 0.0;
            let mut upper = 0.0;
            for p in 0..n {
                for q in 0..n {
                    lower += gs.get(&[p, q]) * f.get(&[p, i]) * f.get(&[q, j]);
                    upper += gi.get(&[p, q]) * f.get(&[i, p]) * f.get(&[j, q]);
                }
            }
            r = r.merge(StructureResiduals {
                almost_complex: ff + delta,
                compatibility: lower - gs.get(&[i, j]),
                compatibility_inverse: gi.get(&[i, j]) - upper,
                antisymmetry_lower: fl(i, j) + fl(j, i),
                antisymmetry_upper: fu(i, j) + fu(j, i),
            });
        }
    }
    r
}

pub fn check_structure_algebra(space: &Space, points: &[Vec<f64>]) -> Result<StructureResiduals> {
    points
        .iter()
        .try_fold(StructureResiduals::default(), |acc, p| {
            Ok(acc.merge(structure_algebra_at(space, p)?))
        })
}

pub fn cov_constancy_at(space: &Space, p: &[f64]) -> Result<ConstancyResiduals> {
    let f = structure_jet(space, p)?;
    let conn = space.connection_at(p)?;
    cov_constancy(&f, &conn)
}

fn cov_constancy(f: &Jet, conn: &ConnectionAt) -> Result<ConstancyResiduals> {
    Ok(ConstancyResiduals {
        first_kind: cov_deriv_jet(f, conn, CovKind::First)?.max_abs(),
        symmetric: symmetric_cov_deriv_jet(f, conn)?.max_abs(),
    })
}

pub fn check_cov_constancy(space: &Space, points: &[Vec<f64>]) -> Result<ConstancyResiduals> {
    points
        .iter()
        .try_fold(ConstancyResiduals::default(), |acc, p| {
            Ok(acc.merge(cov_constancy_at(space, p)?))
        })
}

/// Residuals of the kind 2, 3, 4 relations at one point, whether or not the
/// premises hold there.
pub fn torsion_relations_at(space: &Space, p: &[f64]) -> Result<TorsionRelationResiduals> {
    let f = structure_jet(space, p)?;
    let conn = space.connection_at(p)?;
    torsion_relations(&f, &conn)
}

fn torsion_relations(f: &Jet, conn: &ConnectionAt) -> Result<TorsionRelationResiduals> {
    let n = f.value.dim();
    let fv = &f.value;
    let t = &conn.torsion;
    let d2 = cov_deriv_jet(f, conn, CovKind::Second)?;
    let d3 = cov_deriv_jet(f, conn, CovKind::Third)?;
    let d4 = cov_deriv_jet(f, conn, CovKind::Fourth)?;
    let mut r = TorsionRelationResiduals {
        second: d2.max_abs(),
        ..Default::default()
    };
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                let want3: f64 = (0..n)
                    .map(|p| 2.0 * fv.get(&[h, p]) * t.get(&[p, i, j]))
                    .sum();
                let want4: f64 = (0..n)
                    .map(|p| 2.0 * fv.get(&[p, i]) * t.get(&[h, j, p]))
                    .sum();
                r.third = max_abs([r.third, d3.get(&[h, i, j]) - want3]);
                r.fourth = max_abs([r.fourth, d4.get(&[h, i, j]) - want4]);
            }
        }
    }
    Ok(r)
}

/// Kind 2, 3, 4 relations, checked only when the defining conditions hold at
/// every point to within `tol`.
pub fn check_torsion_relations(
    space: &Space,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Gated<TorsionRelationResiduals>> {
    let structure = check_structure_algebra(space, points)?;
    let constancy = check_cov_constancy(space, points)?;
    if let Some(gate) = premise_failure(&structure, &constancy, tol) {
        return Ok(gate);
    }
    let r = points
        .iter()
        .try_fold(TorsionRelationResiduals::default(), |acc, p| {
            Ok::<_, Error>(acc.merge(torsion_relations_at(space, p)?))
        })?;
    Ok(Gated::Checked(r))
}

fn premise_failure<T>(
    s: &StructureResiduals,
    c: &ConstancyResiduals,
    tol: f64,
) -> Option<Gated<T>> {
    let premises = [
        ("almost complex structure", s.almost_complex),
        (
            "metric compatibility",
            max_abs([s.compatibility, s.compatibility_inverse]),
        ),
        ("kind-1 constancy", c.first_kind),
        ("symmetric constancy", c.symmetric),
    ];
    premises
        .iter()
        .find(|(_, r)| !(*r <= tol))
        .map(|&(premise, residual)| Gated::PremisesFail { premise, residual })
}

pub fn trace_identities_at(space: &Space, p: &[f64]) -> Result<TraceResiduals> {
    let conn = space.connection_at(p)?;
    let structure = match space.structure() {
        Some(f) => Some(f.eval_at(p)?),
        None => None,
    };
    trace_identities(&conn, structure.as_ref())
}

fn trace_identities(conn: &ConnectionAt, f: Option<&Components>) -> Result<TraceResiduals> {
    let torsion = conn
        .torsion
        .contract(Slot::Upper(0), Slot::Lower(1))?
        .max_abs();
    let structure = match f {
        Some(f) => Some(f.contract(Slot::Upper(0), Slot::Lower(0))?.value().abs()),
        None => None,
    };
    Ok(TraceResiduals { torsion, structure })
}

pub fn check_trace_identities(space: &Space, points: &[Vec<f64>]) -> Result<TraceResiduals> {
    points.iter().try_fold(TraceResiduals::default(), |acc, p| {
        Ok(acc.merge(trace_identities_at(space, p)?))
    })
}

/// Everything the Kähler suite computes at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KahlerAt {
    pub structure: StructureResiduals,
    pub constancy: ConstancyResiduals,
    pub relations: TorsionRelationResiduals,
    pub traces: TraceResiduals,
    /// `max |k1(F) + k2(F) - 2 F_;|` and likewise for kinds 3 and 4.
    pub kind_sum: f64,
}

impl KahlerAt {
    pub fn merge(self, o: Self) -> Self {
        KahlerAt {
            structure: self.structure.merge(o.structure),
            constancy: self.constancy.merge(o.constancy),
            relations: self.relations.merge(o.relations),
            traces: self.traces.merge(o.traces),
            kind_sum: max_abs([self.kind_sum, o.kind_sum]),
        }
    }
}

pub fn kahler_at(space: &Space, p: &[f64]) -> Result<KahlerAt> {
    let f = structure_jet(space, p)?;
    let metric = space.metric_at(p)?;
    let conn = space.connection_at(p)?;
    Ok(KahlerAt {
        structure: structure_algebra(&f.value, &metric),
        constancy: cov_constancy(&f, &conn)?,
        relations: torsion_relations(&f, &conn)?,
        traces: trace_identities(&conn, Some(&f.value))?,
        kind_sum: kind_sum_residual(&f, &conn)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KahlerReport {
    pub structure: StructureResiduals,
    pub constancy: ConstancyResiduals,
    pub relations: Gated<TorsionRelationResiduals>,
    pub traces: TraceResiduals,
    pub kind_sum: f64,
    pub tolerance: f64,
}

impl KahlerReport {
    /// Assembles a report from merged per-point results.
    pub fn from_merged(merged: KahlerAt, tolerance: f64) -> Self {
        let relations = premise_failure(&merged.structure, &merged.constancy, tolerance)
            .unwrap_or(Gated::Checked(merged.relations));
        KahlerReport {
            structure: merged.structure,
            constancy: merged.constancy,
            relations,
            traces: merged.traces,
            kind_sum: merged.kind_sum,
            tolerance,
        }
    }

    /// The four defining groups all within tolerance.
    pub fn is_kahler(&self) -> bool {
        let t = self.tolerance;
        self.structure.almost_complex <= t
            && self.structure.compatibility <= t
            && self.structure.compatibility_inverse <= t
            && self.constancy.first_kind <= t
            && self.constancy.symmetric <= t
    }
}

pub fn check_kahler(space: &Space, points: &[Vec<f64>], tolerance: f64) -> Result<KahlerReport> {
    let merged = points.iter().try_fold(KahlerAt::default(), |acc, p| {
        Ok::<_, Error>(acc.merge(kahler_at(space, p)?))
    })?;
    Ok(KahlerReport::from_merged(merged, tolerance))
}
