//! Check suites behind the subcommands. Each fills a [`CheckReport`].

use anyhow::Result;
use gkverify_core::geodesics::{
    integrate_geodesic_with, mapping_geodesic_residual, max_position_gap, ConnectionPart,
};
use gkverify_core::geomap::{
    equitorsion_at, equitorsion_theorem_at, extract_psi_xi, geodesic_form_at, mapping_theorem_at,
    EquitorsionResiduals, MappingPair, MappingResiduals, TheoremOptions, TRIVIAL_PSI,
};
use gkverify_core::kahler::{kahler_at, KahlerAt, KahlerReport};
use gkverify_core::{CovKind, Gated, Slot, Space, SINGULAR_DET};
use rayon::prelude::*;

use crate::report::{Check, CheckReport};

/// Tolerance for trajectories integrated with and without the torsion part.
pub const TORSION_INVARIANCE_TOL: f64 = 1e-12;

/// Evaluates `f` at every point in parallel; the first error in point order wins.
fn per_point<T: Send>(
    points: &[Vec<f64>],
    f: impl Fn(&[f64]) -> gkverify_core::Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<_> = points.par_iter().map(|p| f(p)).collect();
    Ok(results.into_iter().collect::<gkverify_core::Result<Vec<T>>>()?)
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |acc: f64, v| if v.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(v.abs()) })
}

fn c<'a>(name: &'a str, equation: &'a str) -> Check<'a> {
    Check {
        name,
        equation,
        kind: None,
    }
}

fn ck<'a>(name: &'a str, equation: &'a str, kind: CovKind) -> Check<'a> {
    Check {
        name,
        equation,
        kind: Some(kind.number()),
    }
}

struct SpaceAt {
    inverse: Option<f64>,
    split: Option<f64>,
    det: Option<f64>,
    connection_split: f64,
    torsion: f64,
    torsion_trace: f64,
}

pub fn check_space(space: &Space, points: &[Vec<f64>], tol: f64, report: &mut CheckReport) -> Result<()> {
    let n = space.dim();
    let rows = per_point(points, |p| {
        let conn = space.connection_at(p)?;
        let connection_split = conn.gamma.max_abs_diff(&conn.gamma_sym.add(&conn.torsion)?)?;
        let torsion_trace = conn.torsion.contract(Slot::Upper(0), Slot::Lower(1))?.max_abs();
        let (inverse, split, det) = match space.metric() {
            None => (None, None, None),
            Some(_) => {
                let m = space.metric_at(p)?;
                let mut worst = 0.0_f64;
                for i in 0..n {
                    for k in 0..n {
                        let v: f64 = (0..n)
                            .map(|j| m.g_sym.get(&[i, j]) * m.g_sym_inverse.get(&[j, k]))
                            .sum();
                        worst = max_of([worst, v - if i == k { 1.0 } else { 0.0 }]);
                    }
                }
                let split = m.g_sym.add(&m.g_antisym)?.max_abs_diff(&m.g)?;
                (Some(worst), Some(split), Some(m.det_sym.abs()))
            }
        };
        Ok(SpaceAt {
            inverse,
            split,
            det,
            connection_split,
            torsion: conn.torsion.max_abs(),
            torsion_trace,
        })
    })?;
    if space.metric().is_some() {
        let min_det = rows.iter().filter_map(|r| r.det).fold(f64::INFINITY, f64::min);
        report.check_min(c("symmetric metric determinant", "|det g_(ij)| > 0"), min_det, SINGULAR_DET, vec![]);
        report.check(
            c("symmetric inverse", "g_(ij) g^(jk) = δ_i^k"),
            max_of(rows.iter().filter_map(|r| r.inverse)),
            tol,
            vec![],
        );
        report.check(
            c("metric split", "g_(ij) + g_[ij] = g_ij"),
            max_of(rows.iter().filter_map(|r| r.split)),
            tol,
            vec![],
        );
    } else {
        report.skipped(
            c("symmetric metric determinant", "|det g_(ij)| > 0"),
            vec!["no metric: explicit connection".into()],
        );
    }
    report.check(
        c("connection split", "Γ^i_jk = Γ^i_(jk) + Γ∨^i_jk"),
        max_of(rows.iter().map(|r| r.connection_split)),
        tol,
        vec![],
    );
    report.info(c("torsion", "Γ∨^i_jk = (Γ^i_jk - Γ^i_kj)/2"), max_of(rows.iter().map(|r| r.torsion)), vec![]);
    report.info(
        c("torsion trace", "Γ∨^α_iα = 0"),
        max_of(rows.iter().map(|r| r.torsion_trace)),
        vec![],
    );
    Ok(())
}

pub fn check_kahler(space: &Space, points: &[Vec<f64>], tol: f64, report: &mut CheckReport) -> Result<()> {
    let merged = per_point(points, |p| kahler_at(space, p))?
        .into_iter()
        .fold(KahlerAt::default(), KahlerAt::merge);
    let r = KahlerReport::from_merged(merged, tol);
    let s = r.structure;
    report.check(c("almost complex structure", "F^h_p F^p_i = -δ^h_i"), s.almost_complex, tol, vec![]);
    report.check(c("metric compatibility", "g_(pq) F^p_i F^q_j = g_(ij)"), s.compatibility, tol, vec![]);
    report.check(
        c("metric compatibility (inverse)", "g^(ij) = g^(pq) F^i_p F^j_q"),
        s.compatibility_inverse,
        tol,
        vec![],
    );
    let algebra = s.almost_complex <= tol && s.compatibility <= tol && s.compatibility_inverse <= tol;
    for (name, eq, value) in [
        ("lowered structure antisymmetry", "F_ij = -F_ji", s.antisymmetry_lower),
        ("raised structure antisymmetry", "F^ij = -F^ji", s.antisymmetry_upper),
    ] {
        if algebra {
            report.check(c(name, eq), value, tol, vec![]);
        } else {
            report.info(c(name, eq), value, vec!["structure algebra fails; not implied".into()]);
        }
    }
    report.check(c("kind-1 constancy", "F^h_i|j = 0 (kind 1)"), r.constancy.first_kind, tol, vec![]);
    report.check(c("symmetric constancy", "F^h_i;j = 0"), r.constancy.symmetric, tol, vec![]);
    let relations = [
        (CovKind::Second, "F^h_i|j = 0 (kind 2)"),
        (CovKind::Third, "F^h_i|j = 2 F^h_p Γ∨^p_ij (kind 3)"),
        (CovKind::Fourth, "F^h_i|j = 2 F^p_i Γ∨^h_jp (kind 4)"),
    ];
    match &r.relations {
        Gated::Checked(rel) => {
            for ((kind, eq), value) in relations.iter().zip([rel.second, rel.third, rel.fourth]) {
                report.check(ck("torsion relation", eq, *kind), value, tol, vec![]);
            }
        }
        Gated::PremisesFail { premise, residual } => {
            for (kind, eq) in relations {
                report.skipped(
                    ck("torsion relation", eq, kind),
                    vec![format!("premises fail: {premise} (residual {residual:.3e})")],
                );
            }
        }
    }
    let torsion_trace = c("torsion trace", "Γ∨^α_iα = 0");
    if r.is_kahler() {
        report.check(torsion_trace, r.traces.torsion, tol, vec![]);
    } else {
        report.info(torsion_trace, r.traces.torsion, vec!["not a generalized Kähler space".into()]);
    }
    report.check(
        c("structure trace", "F^α_α = 0"),
        r.traces.structure.unwrap_or(0.0),
        tol,
        vec![],
    );
    report.check(
        c("kind sums", "F|1 + F|2 = F|3 + F|4 = 2 F;"),
        r.kind_sum,
        tol,
        vec![],
    );
    Ok(())
}

struct FormAt {
    form: f64,
    psi: f64,
    xi_trace: f64,
    torsion_traces: f64,
    equitorsion: f64,
}

pub fn check_mapping(
    pair: &MappingPair<'_>,
    kinds: &[CovKind],
    points: &[Vec<f64>],
    tol: f64,
    report: &mut CheckReport,
) -> Result<()> {
    let rows = per_point(points, |p| {
        let form = geodesic_form_at(pair, p)?;
        let data = extract_psi_xi(pair, p)?;
        let trace = |s: &Space| -> gkverify_core::Result<_> {
            s.connection_at(p)?.torsion.contract(Slot::Upper(0), Slot::Lower(1))
        };
        Ok(FormAt {
            form: form.residual,
            psi: data.psi.max_abs(),
            xi_trace: data.xi_trace().max_abs(),
            torsion_traces: trace(pair.target)?.max_abs_diff(&trace(pair.source)?)?,
            equitorsion: equitorsion_at(pair, p)?,
        })
    })?;
    let psi_max = max_of(rows.iter().map(|r| r.psi));
    let trivial = psi_max < TRIVIAL_PSI;
    let trivial_note = || {
        if trivial {
            vec![format!("trivial mapping: max |ψ| < {TRIVIAL_PSI:e}")]
        } else {
            vec![]
        }
    };
    report.check(
        c("geodesic form", "P^i_jk = δ^i_j ψ_k + δ^i_k ψ_j + ξ^i_jk"),
        max_of(rows.iter().map(|r| r.form)),
        tol,
        vec![],
    );
    report.info(c("psi", "ψ_i = P^α_iα / (N+1)"), psi_max, trivial_note());
    report.check(c("xi trace", "ξ^α_iα = 0"), max_of(rows.iter().map(|r| r.xi_trace)), tol, vec![]);
    report.check(
        c("torsion traces", "Γ̄∨^α_iα = Γ∨^α_iα"),
        max_of(rows.iter().map(|r| r.torsion_traces)),
        tol,
        vec![],
    );

    let mut side = None;
    for &kind in kinds {
        let r = per_point(points, |p| mapping_theorem_at(pair, kind, p, TheoremOptions::default()))?
            .into_iter()
            .reduce(MappingResiduals::merge);
        let Some(r) = r else { continue };
        side.get_or_insert(r.side);
        let mut notes = trivial_note();
        notes.extend(mixed_orientation_note(kind));
        let reordered = format!(
            "with ψ_i ḡ_kj in place of ψ_i ḡ_jk the residual is {:.3e}",
            r.metric_reordered
        );
        notes.push(reordered);
        report.check(
            ck(
                "metric condition",
                "ḡ_ij|k = ḡ∨_ij|̄k + 2ψ_k ḡ_ij + ψ_i ḡ_jk + ψ_j ḡ_ik + ξ-terms",
                kind,
            ),
            r.metric,
            tol,
            notes,
        );
        report.info(
            ck(
                "metric condition, reordered",
                "ḡ_ij|k = ḡ∨_ij|̄k + 2ψ_k ḡ_ij + ψ_i ḡ_kj + ψ_j ḡ_ik + ξ-terms",
                kind,
            ),
            r.metric_reordered,
            trivial_note(),
        );
        let eq = match kind {
            CovKind::First | CovKind::Second => "F̄^h_i|k = F̄^h_k ψ_i - δ^h_k F̄^p_i ψ_p + ξ-terms",
            _ => "F̄^h_i|k = F̄^h_i|̄k + F̄^h_k ψ_i - δ^h_k F̄^p_i ψ_p + ξ-terms",
        };
        report.check(ck("structure condition", eq, kind), r.structure, tol, trivial_note());
    }
    if let Some(s) = side {
        report.check_min(c("target determinant", "|det ḡ_(ij)| > 0"), s.min_abs_det, SINGULAR_DET, vec![]);
        report.check(
            c("target compatibility", "F̄^α_i ḡ_(αj) + F̄^α_j ḡ_(αi) = 0"),
            s.compatibility,
            tol,
            vec![],
        );
        report.check(c("target almost complex", "F̄^h_α F̄^α_i = -δ^h_i"), s.almost_complex, tol, vec![]);
    }

    let gap = max_of(rows.iter().map(|r| r.equitorsion));
    let equitorsion = gap <= tol;
    report.info(
        c("torsion difference", "Γ̄∨^h_ij = Γ∨^h_ij"),
        gap,
        vec![if equitorsion { "equitorsion" } else { "not equitorsion" }.into()],
    );
    for &kind in kinds {
        let metric = ck(
            "equitorsion metric condition",
            "ḡ_(ij)|k = 2ψ_k ḡ_(ij) + ψ_i ḡ_(jk) + ψ_j ḡ_(ik)",
            kind,
        );
        let structure = ck(
            "equitorsion structure condition",
            match kind {
                CovKind::First | CovKind::Second => "F̄^h_i|k = F̄^h_k ψ_i - δ^h_k F̄^p_i ψ_p",
                _ => "F̄^h_i|k = F̄^h_i|̄k + F̄^h_k ψ_i - δ^h_k F̄^p_i ψ_p",
            },
            kind,
        );
        if !equitorsion {
            let note = vec![format!("not equitorsion (max |Γ̄∨ - Γ∨| = {gap:.3e})")];
            report.skipped(metric, note.clone());
            report.skipped(structure, note);
            continue;
        }
        let Some(r) = per_point(points, |p| equitorsion_theorem_at(pair, kind, p))?
            .into_iter()
            .reduce(EquitorsionResiduals::merge)
        else {
            continue;
        };
        let mut notes = trivial_note();
        notes.extend(mixed_orientation_note(kind));
        report.check(metric, r.metric, tol, notes);
        if kind == CovKind::Fourth {
            report.info(
                ck(
                    "equitorsion metric condition, full ḡ_jk",
                    "ḡ_(ij)|k = 2ψ_k ḡ_(ij) + ψ_i ḡ_jk + ψ_j ḡ_(ik)",
                    kind,
                ),
                r.metric_full_variant,
                vec![],
            );
        }
        report.check(structure, r.structure, tol, trivial_note());
    }
    Ok(())
}

/// Kinds 3 and 4 on the (0,2) field `ḡ` use the chosen pure-tensor pattern.
fn mixed_orientation_note(kind: CovKind) -> Option<String> {
    let (first, rest) = match kind {
        CovKind::Third => (1, 2),
        CovKind::Fourth => (2, 1),
        _ => return None,
    };
    Some(format!(
        "kind {} on ḡ_ij: slot i oriented as kind {first}, slot j as kind {rest}",
        kind.number()
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct GeodesicOptions {
    pub steps: usize,
    pub h: f64,
    pub defect_tol: f64,
}

pub fn geodesic_test(
    pair: &MappingPair<'_>,
    starts: &[(Vec<f64>, Vec<f64>)],
    options: GeodesicOptions,
    report: &mut CheckReport,
) -> Result<()> {
    let results: Vec<_> = starts
        .par_iter()
        .map(|(x, v)| -> gkverify_core::Result<_> {
            let curve = integrate_geodesic_with(pair.source, ConnectionPart::Symmetric, x, v, options.steps, options.h)?;
            let full = integrate_geodesic_with(pair.source, ConnectionPart::Full, x, v, options.steps, options.h)?;
            let defects = mapping_geodesic_residual(pair, &curve)?;
            Ok((defects.max(), defects.degenerate, max_position_gap(&curve, &full)))
        })
        .collect();
    let results = results.into_iter().collect::<gkverify_core::Result<Vec<_>>>()?;
    let degenerate: usize = results.iter().map(|r| r.1).sum();
    let mut notes = vec![format!(
        "{} curves, {} steps of h = {}",
        starts.len(),
        options.steps,
        options.h
    )];
    if degenerate > 0 {
        notes.push(format!("{degenerate} samples with r at rounding level counted as 0"));
    }
    report.check(
        c("collinearity defect", "|r - (r·x') x'/|x'|²| / |r| = 0, r^i = x''^i + Γ̄^i_(jk) x'^j x'^k"),
        max_of(results.iter().map(|r| r.0)),
        options.defect_tol,
        notes,
    );
    report.check(
        c("torsion invariance", "Γ^i_jk x'^j x'^k = Γ^i_(jk) x'^j x'^k"),
        max_of(results.iter().map(|r| r.2)),
        TORSION_INVARIANCE_TOL,
        vec![],
    );
    Ok(())
}
