//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the lines are printed on success too.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::{central_difference, classical_christoffel, max_diff, rng};
use gkverify::deffile::{parse_pair, parse_space};
use gkverify_core::covderiv::{cov_deriv, symmetric_cov_deriv};
use gkverify_core::geodesics::{
    integrate_geodesic, integrate_geodesic_with, mapping_geodesic_residual, max_position_gap,
    ConnectionPart, GeodesicCurve,
};
use gkverify_core::geomap::{
    build_mapped_connection, check_equitorsion, check_equitorsion_theorem, check_geodesic_form,
    check_mapping_theorem, extract_psi_xi, Deformation, MappingPair, Overlay, TheoremOptions,
};
use gkverify_core::kahler::{check_kahler, StructureResiduals};
use gkverify_core::tensor::Slot;
use gkverify_core::{Components, CovKind, Gated, MapDirection, Space, TensorField, Valence};
use rand::Rng;

type Outcome = (bool, String);

fn catalog(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../catalog").join(name)
}

fn load_space(name: &str) -> Space {
    let text = std::fs::read_to_string(catalog(name)).unwrap();
    parse_space(&text).unwrap().build(name).unwrap()
}

fn load_pair(name: &str, checks: &[Vec<f64>]) -> (Space, Space) {
    let text = std::fs::read_to_string(catalog(name)).unwrap();
    parse_pair(&text).unwrap().build(checks).unwrap()
}

fn points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| common::point(&mut r, n, 1.0)).collect()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0_f64;
    for seed in 0..100 {
        let mut r = rng(10_000 + seed);
        let n = r.gen_range(2..=4);
        let e = common::expr(&mut r, n, 4);
        let p = common::point(&mut r, n, 1.0);
        let (_, grad) = e.eval_with_gradient(&p).unwrap();
        for (k, &g) in grad.iter().enumerate() {
            let fd = central_difference(|q| e.eval(q).unwrap(), &p, k, 1e-5);
            worst = worst.max((g - fd).abs() / g.abs().max(1.0));
        }
    }
    (
        worst <= 1e-6,
        format!("100 trees: max relative gap to central differences {worst:.2e} (tol 1e-6)"),
    )
}

fn criterion_2() -> Outcome {
    let mut christoffel = 0.0_f64;
    let mut sym_torsion = 0.0_f64;
    let mut plane_torsion = 0.0_f64;
    for seed in 0..10 {
        let mut r = rng(20_000 + seed);
        let n = 2 + (seed as usize % 3);
        let g = common::polynomial_metric(&mut r, n, true);
        let s = Space::from_metric("m", g.clone()).unwrap();
        for _ in 0..10 {
            let p = common::point(&mut r, n, 1.0);
            let c = s.connection_at(&p).unwrap();
            christoffel = christoffel.max(max_diff(c.gamma_sym.data(), &classical_christoffel(&g, &p)));
        }
        let sym = Space::from_metric("s", common::polynomial_metric(&mut r, n, false)).unwrap();
        let plane = Space::from_metric("p", common::tree_metric_2d(&mut r)).unwrap();
        for _ in 0..10 {
            let p = common::point(&mut r, n, 1.0);
            sym_torsion = sym_torsion.max(sym.connection_at(&p).unwrap().torsion.max_abs());
            let q = common::point(&mut r, 2, 1.0);
            plane_torsion = plane_torsion.max(plane.connection_at(&q).unwrap().torsion.max_abs());
        }
    }
    (
        christoffel <= 1e-10 && sym_torsion <= 1e-12 && plane_torsion <= 1e-12,
        format!(
            "Γ_sym vs Christoffel {christoffel:.2e} (tol 1e-10); torsion: symmetric metrics {sym_torsion:.2e}, N = 2 {plane_torsion:.2e} (tol 1e-12)"
        ),
    )
}

fn criterion_3() -> Outcome {
    let valences = [Valence::new(1, 1), Valence::new(0, 2), Valence::new(2, 0)];
    let mut sums = 0.0_f64;
    let mut coincide = 0.0_f64;
    for seed in 0..10 {
        let mut r = rng(30_000 + seed);
        let n = 2 + (seed as usize % 3);
        let s = Space::from_metric("m", common::polynomial_metric(&mut r, n, true)).unwrap();
        let sym = Space::from_metric("s", common::polynomial_metric(&mut r, n, false)).unwrap();
        for valence in valences {
            let t = common::field(&mut r, n, valence, 1.0);
            for _ in 0..3 {
                let p = common::point(&mut r, n, 1.0);
                let d: Vec<Components> = CovKind::ALL
                    .iter()
                    .map(|&k| cov_deriv(&t, &s, k, &p).unwrap())
                    .collect();
                let twice = symmetric_cov_deriv(&t, &s, &p).unwrap().scale(2.0);
                sums = sums.max(d[0].add(&d[1]).unwrap().max_abs_diff(&twice).unwrap());
                sums = sums.max(d[2].add(&d[3]).unwrap().max_abs_diff(&twice).unwrap());
                let first = cov_deriv(&t, &sym, CovKind::First, &p).unwrap();
                for k in CovKind::ALL {
                    let dk = cov_deriv(&t, &sym, k, &p).unwrap();
                    coincide = coincide.max(dk.max_abs_diff(&first).unwrap());
                }
            }
        }
    }
    (
        sums <= 1e-10 && coincide <= 1e-12,
        format!("kind sums vs 2 × symmetric {sums:.2e} (tol 1e-10); kinds without torsion {coincide:.2e} (tol 1e-12)"),
    )
}

fn criterion_4() -> Outcome {
    let flat = load_space("flat_gk1.space");
    let r = check_kahler(&flat, &points(4, 50, 40), 1e-9).unwrap();
    let flat_exact = r.structure == StructureResiduals::default()
        && r.constancy.first_kind == 0.0
        && r.constancy.symmetric == 0.0;

    let mut relations = 0.0_f64;
    let mut qualifying = 0;
    for name in ["flat_gk1.space", "flat_kahler.space", "scaled_gk1.space", "curved_gk1_2d.space", "curved_gk1.space"] {
        let s = load_space(name);
        let r = check_kahler(&s, &points(s.dim(), 50, 41), 1e-10).unwrap();
        if r.constancy.first_kind <= 1e-10 && r.constancy.symmetric <= 1e-10 {
            qualifying += 1;
            relations = relations.max(r.relations.checked().map_or(f64::INFINITY, |x| x.max()));
        }
    }

    let fail = load_space("torsion_fail.space");
    let r = check_kahler(&fail, &points(4, 50, 42), 1e-9).unwrap();
    let rejected = r.constancy.first_kind > 1e-9 && r.constancy.symmetric <= 1e-9 && !r.is_kahler();
    (
        flat_exact && qualifying == 5 && relations <= 1e-9 && rejected,
        format!(
            "flat GK1 exact: {flat_exact}; torsion relations on {qualifying} GK1 spaces {relations:.2e} (tol 1e-9); torsion_fail kind-1 {:.2e}, symmetric {:.2e}",
            r.constancy.first_kind, r.constancy.symmetric
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut round_trip = 0.0_f64;
    for seed in 0..8 {
        let mut r = rng(50_000 + seed);
        let n = 2 + (seed as usize % 3);
        let base = Space::from_metric("base", common::polynomial_metric(&mut r, n, true)).unwrap();
        let psi = common::psi_field(&mut r, n, 1.0);
        let xi = common::xi_field(&mut r, n, 1.0);
        let pts = points(n, 10, seed);
        let target = build_mapped_connection(
            &base,
            Deformation::new(psi.clone(), xi.clone()).unwrap(),
            MapDirection::Forward,
            Overlay::default(),
            &pts,
        )
        .unwrap();
        let pair = MappingPair::new(&base, &target).unwrap();
        for p in &pts {
            let data = extract_psi_xi(&pair, p).unwrap();
            round_trip = round_trip.max(data.psi.max_abs_diff(&psi.eval_at(p).unwrap()).unwrap());
            round_trip = round_trip.max(data.xi.max_abs_diff(&xi.eval_at(p).unwrap()).unwrap());
        }
    }

    let mut traces = 0.0_f64;
    for name in ["pair_kind1.pair", "pair_curved.pair", "pair_symmetric.pair", "pair_equitorsion.pair"] {
        let pts = points(4, 20, 51);
        let (source, target) = load_pair(name, &pts);
        let pair = MappingPair::new(&source, &target).unwrap();
        for p in &pts {
            let data = extract_psi_xi(&pair, p).unwrap();
            traces = traces.max(data.xi_trace().max_abs());
            let (sym, _) = data.deformation.split_sym_antisym(Slot::Lower(0), Slot::Lower(1)).unwrap();
            let from_sym = sym.contract(Slot::Upper(0), Slot::Lower(1)).unwrap().scale(1.0 / 5.0);
            traces = traces.max(from_sym.max_abs_diff(&data.psi).unwrap());
        }
    }

    let pts = points(2, 20, 52);
    let (source, target) = load_pair("pair_nongeodesic.pair", &pts);
    let rejected = check_geodesic_form(&MappingPair::new(&source, &target).unwrap(), &pts)
        .unwrap()
        .residual;
    (
        round_trip <= 1e-12 && traces <= 1e-12 && rejected >= 0.5,
        format!("round trip {round_trip:.2e} (tol 1e-12); traces {traces:.2e}; non-geodesic residual {rejected:.3}"),
    )
}

/// Flat GK1 target with random polynomial ψ and ξ, built backwards.
fn random_gk1_pair(seed: u64, with_xi: bool) -> (Space, Space) {
    let mut r = rng(seed);
    let target = load_space("flat_gk1.space");
    let psi = common::psi_field(&mut r, 4, 0.5);
    let xi = if with_xi {
        common::xi_field(&mut r, 4, 0.5)
    } else {
        TensorField::zeros(4, Valence::new(1, 2))
    };
    let source = build_mapped_connection(
        &target,
        Deformation::new(psi, xi).unwrap(),
        MapDirection::Backward,
        Overlay::default(),
        &points(4, 10, seed),
    )
    .unwrap();
    (source, target)
}

fn criterion_6() -> Outcome {
    let pts = points(4, 50, 60);
    let mut pairs: Vec<(String, (Space, Space))> = [
        "pair_kind1.pair",
        "pair_curved.pair",
        "pair_symmetric.pair",
        "pair_equitorsion.pair",
    ]
    .iter()
    .map(|&n| (n.to_string(), load_pair(n, &pts)))
    .collect();
    pairs.push(("random ψ, ξ".into(), random_gk1_pair(61, true)));

    let (mut a, mut reordered, mut b) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut side = true;
    let mut failing = Vec::new();
    for (name, (source, target)) in &pairs {
        let pair = MappingPair::new(source, target).unwrap();
        let mut worst_a = 0.0_f64;
        for kind in CovKind::ALL {
            let r = check_mapping_theorem(&pair, kind, &pts, TheoremOptions::default()).unwrap();
            worst_a = worst_a.max(r.metric);
            reordered = reordered.max(r.metric_reordered);
            b = b.max(r.structure);
            side &= r.side.pass(1e-9);
        }
        if worst_a > 1e-9 {
            failing.push(name.clone());
        }
        a = a.max(worst_a);
    }
    (
        a <= 1e-9 && b <= 1e-9 && side,
        format!(
            "residual_a {a:.2e}, residual_b {b:.2e} (tol 1e-9), side conditions {side}; residual_a with ψ_i ḡ_kj {reordered:.2e}; residual_a fails on: {}",
            if failing.is_empty() { "none".into() } else { failing.join(", ") }
        ),
    )
}

fn criterion_7() -> Outcome {
    let pts = points(4, 50, 70);
    let mut pairs = vec![
        load_pair("pair_kind1.pair", &pts),
        load_pair("pair_equitorsion.pair", &pts),
    ];
    pairs.push(random_gk1_pair(71, false));
    let mut gate = 0.0_f64;
    let mut reduced = 0.0_f64;
    let mut all_gated = true;
    for (source, target) in &pairs {
        let pair = MappingPair::new(source, target).unwrap();
        gate = gate.max(check_equitorsion(&pair, &pts).unwrap());
        for kind in CovKind::ALL {
            match check_equitorsion_theorem(&pair, kind, &pts, 1e-9).unwrap().checked() {
                Some(r) => reduced = reduced.max(r.metric).max(r.structure),
                None => all_gated = false,
            }
        }
    }

    let pts = points(4, 20, 72);
    let (source, target) = load_pair("pair_torsion_cancel.pair", &pts);
    let pair = MappingPair::new(&source, &target).unwrap();
    let cancel = check_equitorsion(&pair, &pts).unwrap();
    let refused = CovKind::ALL.iter().all(|&k| {
        matches!(
            check_equitorsion_theorem(&pair, k, &pts, 1e-9).unwrap(),
            Gated::PremisesFail { .. }
        )
    });
    (
        all_gated && reduced <= 1e-9 && refused && cancel > 1e-9,
        format!(
            "ξ = 0 pairs: gate {gate:.2e}, reduced conditions {reduced:.2e} (tol 1e-9); ξ = -T pair: torsion gap {cancel:.3}, gate refused {refused}"
        ),
    )
}

fn rk4_ratio() -> f64 {
    let polar = load_space("polar.space");
    let (x0, v0) = ([1.0, 0.0], [0.3, 0.9]);
    let run = |h: f64| integrate_geodesic(&polar, &x0, &v0, (1.0 / h).round() as usize, h).unwrap();
    let end = |c: &GeodesicCurve| c.positions.last().unwrap().clone();
    let reference = end(&run(0.1 / 64.0));
    let err = |h: f64| max_diff(&end(&run(h)), &reference);
    err(0.1) / err(0.05)
}

fn criterion_8() -> Outcome {
    let mut defect = 0.0_f64;
    let mut invariance = 0.0_f64;
    let mut r = rng(80);
    for name in ["pair_kind1.pair", "pair_curved.pair", "pair_symmetric.pair", "pair_equitorsion.pair"] {
        let (source, target) = load_pair(name, &points(4, 10, 81));
        let pair = MappingPair::new(&source, &target).unwrap();
        for _ in 0..10 {
            let x0 = common::point(&mut r, 4, 1.0);
            let v0: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
            let curve = integrate_geodesic(&source, &x0, &v0, 1000, 1e-3).unwrap();
            defect = defect.max(mapping_geodesic_residual(&pair, &curve).unwrap().max());
            let full = integrate_geodesic_with(&source, ConnectionPart::Full, &x0, &v0, 1000, 1e-3).unwrap();
            invariance = invariance.max(max_position_gap(&curve, &full));
        }
    }
    let ratio = rk4_ratio();
    (
        defect <= 1e-8 && invariance <= 1e-12 && (12.0..=20.0).contains(&ratio),
        format!(
            "collinearity defect {defect:.2e} (tol 1e-8); torsion invariance {invariance:.2e} (tol 1e-12); RK4 halving ratio {ratio:.2}"
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_gkverify"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut consistent = true;
    let mut runs = 0;
    let cases: Vec<(&str, &str)> = vec![
        ("check-space", "nonsym4.space"),
        ("check-space", "polar.space"),
        ("check-kahler", "flat_gk1.space"),
        ("check-kahler", "curved_gk1.space"),
        ("check-kahler", "torsion_fail.space"),
        ("check-mapping", "pair_kind1.pair"),
        ("check-mapping", "pair_symmetric.pair"),
        ("check-mapping", "pair_torsion_cancel.pair"),
        ("check-mapping", "pair_nongeodesic.pair"),
        ("geodesic-test", "pair_curved.pair"),
    ];
    for (command, file) in &cases {
        let path = catalog(file);
        let mut reports = Vec::new();
        for attempt in 0..2 {
            let json = dir.path().join(format!("{file}.{attempt}.json"));
            let (code, stdout) = run_cli(&[
                command,
                path.to_str().unwrap(),
                "--seed",
                "7",
                "--json",
                json.to_str().unwrap(),
            ]);
            let report = std::fs::read(&json).unwrap();
            let value: serde_json::Value = serde_json::from_slice(&report).unwrap();
            let expected = if value["verdict"] == "pass" { 0 } else { 1 };
            consistent &= code == expected;
            reports.push((report, stdout));
            runs += 1;
        }
        identical &= reports[0] == reports[1];
    }

    let kahler_flat = run_cli(&["check-kahler", catalog("flat_gk1.space").to_str().unwrap(), "--points", "50", "--seed", "7"]).0;
    let kahler_fail = run_cli(&["check-kahler", catalog("torsion_fail.space").to_str().unwrap()]).0;
    let missing = run_cli(&["check-space", "missing.space"]).0;
    let no_structure = run_cli(&["check-kahler", catalog("polar.space").to_str().unwrap()]).0;
    let bad_flag = run_cli(&["check-mapping", catalog("pair_kind1.pair").to_str().unwrap(), "--kind", "5"]).0;
    let kind1 = run_cli(&["check-mapping", catalog("pair_kind1.pair").to_str().unwrap(), "--kind", "1"]).0;
    let codes = kahler_flat == 0 && kahler_fail == 1 && missing == 2 && no_structure == 2 && bad_flag == 2;
    (
        identical && consistent && codes,
        format!(
            "{runs} runs: byte-identical {identical}, exit matches verdict {consistent}; exits flat 0/{kahler_flat}, torsion_fail 1/{kahler_fail}, missing 2/{missing}, no F 2/{no_structure}, bad kind 2/{bad_flag}; pair_kind1 --kind 1 exits {kind1}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("AD gradients", criterion_1),
        ("connection decomposition", criterion_2),
        ("four kinds of derivative", criterion_3),
        ("GK1 axioms and torsion relations", criterion_4),
        ("deformation round trip", criterion_5),
        ("mapping conditions", criterion_6),
        ("equitorsion conditions", criterion_7),
        ("geodesic preservation", criterion_8),
        ("CLI determinism and exit codes", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        println!("criterion {} {}: {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
