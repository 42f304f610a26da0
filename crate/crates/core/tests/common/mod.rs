//! Random inputs and independent oracles shared by the integration tests.
#![allow(dead_code)]

use gkverify_core::expr::{BinaryOp, Node, UnaryOp};
use gkverify_core::{Components, Expr, Space, TensorField, Valence};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(rng: &mut TestRng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n)
        .map(|_| rng.gen_range(-half_width..half_width))
        .collect()
}

fn small_const(rng: &mut TestRng) -> f64 {
    // Two decimals, so printing and reparsing cannot lose anything.
    (rng.gen_range(-300..=300) as f64) / 100.0
}

/// A random tree built from constants, coordinates, `+ - *`, integer powers,
/// `sin`, `cos`, `exp` and divisions by `1 + u^2`; defined everywhere.
pub fn tree(rng: &mut TestRng, n: usize, depth: u32) -> Node {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.6) {
            Node::Var(rng.gen_range(0..n))
        } else {
            Node::Const(small_const(rng))
        };
    }
    let sub = |rng: &mut TestRng| Box::new(tree(rng, n, depth - 1));
    match rng.gen_range(0..9) {
        0 => Node::Binary(BinaryOp::Add, sub(rng), sub(rng)),
        1 => Node::Binary(BinaryOp::Sub, sub(rng), sub(rng)),
        2 | 3 => Node::Binary(BinaryOp::Mul, sub(rng), sub(rng)),
        4 => Node::Pow(sub(rng), rng.gen_range(2..=3)),
        5 => Node::Unary(UnaryOp::Sin, sub(rng)),
        6 => Node::Unary(UnaryOp::Cos, sub(rng)),
        7 => Node::Unary(UnaryOp::Exp, Box::new(Node::Unary(UnaryOp::Sin, sub(rng)))),
        _ => {
            let u = sub(rng);
            let den = Node::Binary(
                BinaryOp::Add,
                Box::new(Node::Const(1.0)),
                Box::new(Node::Pow(u, 2)),
            );
            Node::Binary(BinaryOp::Div, sub(rng), Box::new(den))
        }
    }
}

pub fn expr(rng: &mut TestRng, n: usize, depth: u32) -> Expr {
    Expr::from_node(n, tree(rng, n, depth))
}

/// `c0 + Σ c_a x_a + Σ c_ab x_a x_b` with small coefficients.
pub fn polynomial(rng: &mut TestRng, n: usize, scale: f64) -> Expr {
    let mut terms = vec![format!("{:.3}", rng.gen_range(-scale..scale))];
    for a in 1..=n {
        terms.push(format!("{:.3}*x{a}", rng.gen_range(-scale..scale)));
        for b in a..=n {
            terms.push(format!("{:.3}*x{a}*x{b}", rng.gen_range(-scale..scale)));
        }
    }
    Expr::parse(&terms.join(" + "), n).unwrap()
}

/// `c0 + Σ c_a x_a`, for fields evaluated along long integrations.
pub fn affine(rng: &mut TestRng, n: usize, scale: f64) -> Expr {
    let mut terms = vec![format!("{:.3}", rng.gen_range(-scale..scale))];
    for a in 1..=n {
        terms.push(format!("{:.3}*x{a}", rng.gen_range(-scale..scale)));
    }
    Expr::parse(&terms.join(" + "), n).unwrap()
}

/// A polynomial metric whose symmetric part stays diagonally dominant on
/// `[-1, 1]^n`; `antisym` controls whether a non-zero antisymmetric part is
/// added.
pub fn polynomial_metric(rng: &mut TestRng, n: usize, antisym: bool) -> TensorField {
    let mut g = TensorField::zeros(n, Valence::new(0, 2));
    let off = 0.1 / n as f64;
    for i in 0..n {
        let d = polynomial(rng, n, 0.1).plus(&Expr::constant(n, 2.0 + i as f64));
        g.set(&[i, i], d);
        for j in i + 1..n {
            let s = polynomial(rng, n, off);
            let (up, down) = if antisym {
                let a = polynomial(rng, n, 0.5);
                (s.plus(&a), s.minus(&a))
            } else {
                (s.clone(), s)
            };
            g.set(&[i, j], up);
            g.set(&[j, i], down);
        }
    }
    g
}

/// A metric of trees (not just polynomials) for spaces of dimension 2.
pub fn tree_metric_2d(rng: &mut TestRng) -> TensorField {
    let mut g = TensorField::zeros(2, Valence::new(0, 2));
    let bump = |rng: &mut TestRng| {
        let t = expr(rng, 2, 3);
        // 0.2 * t / (1 + t^2) is bounded by 0.1.
        Expr::parse(&format!("0.2*({t})/(1 + ({t})^2)"), 2).unwrap()
    };
    g.set(&[0, 0], bump(rng).plus(&Expr::constant(2, 2.0)));
    g.set(&[1, 1], bump(rng).plus(&Expr::constant(2, 3.0)));
    let s = bump(rng);
    let a = expr(rng, 2, 3);
    g.set(&[0, 1], s.plus(&a));
    g.set(&[1, 0], s.minus(&a));
    g
}

pub fn field(rng: &mut TestRng, n: usize, valence: Valence, scale: f64) -> TensorField {
    let count = n.pow(valence.rank() as u32);
    let exprs = (0..count).map(|_| polynomial(rng, n, scale)).collect();
    TensorField::from_exprs(n, valence, exprs).unwrap()
}

/// Random covector field with polynomial components.
pub fn psi_field(rng: &mut TestRng, n: usize, scale: f64) -> TensorField {
    field(rng, n, Valence::new(0, 1), scale)
}

pub fn affine_psi_field(rng: &mut TestRng, n: usize, scale: f64) -> TensorField {
    let exprs = (0..n).map(|_| affine(rng, n, scale)).collect();
    TensorField::from_exprs(n, Valence::new(0, 1), exprs).unwrap()
}

/// Random `ξ^i_{jk}`, antisymmetric in `j, k` with `ξ^α_{jα} = 0`:
/// `ξ = A - (δ^i_k t_j - δ^i_j t_k) / (N - 1)` for an antisymmetric `A` with
/// trace `t_j = A^α_{jα}`.
pub fn xi_field(rng: &mut TestRng, n: usize, scale: f64) -> TensorField {
    xi_field_from(rng, n, scale, polynomial)
}

pub fn affine_xi_field(rng: &mut TestRng, n: usize, scale: f64) -> TensorField {
    xi_field_from(rng, n, scale, affine)
}

fn xi_field_from(
    rng: &mut TestRng,
    n: usize,
    scale: f64,
    entry: fn(&mut TestRng, usize, f64) -> Expr,
) -> TensorField {
    let mut a = TensorField::zeros(n, Valence::new(1, 2));
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                let e = entry(rng, n, scale);
                a.set(&[i, k, j], e.negated());
                a.set(&[i, j, k], e);
            }
        }
    }
    let trace: Vec<Expr> = (0..n)
        .map(|j| {
            (0..n).fold(Expr::constant(n, 0.0), |acc, al| {
                acc.plus(a.get(&[al, j, al]))
            })
        })
        .collect();
    let c = 1.0 / (n as f64 - 1.0);
    let mut xi = a.clone();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut e = a.get(&[i, j, k]).clone();
                if i == k {
                    e = e.minus(&trace[j].scaled(c));
                }
                if i == j {
                    e = e.plus(&trace[k].scaled(c));
                }
                xi.set(&[i, j, k], e);
            }
        }
    }
    xi
}

/// The standard complex structure on `R^n` (`n` even): `F^{2a}_{2a+1} = -1`,
/// `F^{2a+1}_{2a} = 1` (zero-based).
pub fn standard_structure(n: usize) -> TensorField {
    let mut f = TensorField::zeros(n, Valence::new(1, 1));
    for a in (0..n).step_by(2) {
        f.set(&[a, a + 1], Expr::constant(n, -1.0));
        f.set(&[a + 1, a], Expr::constant(n, 1.0));
    }
    f
}

pub fn metric_from(n: usize, entries: &[(usize, usize, &str)]) -> TensorField {
    let mut g = TensorField::zeros(n, Valence::new(0, 2));
    for &(i, j, text) in entries {
        g.set(&[i, j], Expr::parse(text, n).unwrap());
    }
    g
}

pub fn constant_metric(n: usize, matrix: &[f64]) -> TensorField {
    TensorField::constant(&Components::from_matrix(n, Valence::new(0, 2), matrix).unwrap())
}

/// Flat GK1 space: `δ` plus a constant antisymmetric part, standard structure.
pub fn flat_gk1(n: usize) -> Space {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    for a in (0..n).step_by(2) {
        let c = 0.5 / (a + 1) as f64;
        m[a * n + a + 1] = c;
        m[(a + 1) * n + a] = -c;
    }
    Space::from_metric("flat_gk1", constant_metric(n, &m))
        .unwrap()
        .with_structure(standard_structure(n))
        .unwrap()
}

/// Central finite difference of a scalar function.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, p: &[f64], k: usize, h: f64) -> f64 {
    let mut a = p.to_vec();
    let mut b = p.to_vec();
    a[k] += h;
    b[k] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

/// Classical Christoffel symbols `½ g^{il}(∂_j g_lk + ∂_k g_lj - ∂_l g_jk)`
/// of the symmetric part of `metric`, built with nalgebra's inverse and the
/// exact component gradients. Returned as `[i][j][k]` flattened.
pub fn classical_christoffel(metric: &TensorField, p: &[f64]) -> Vec<f64> {
    let n = metric.dim();
    let mut gs = DMatrix::<f64>::zeros(n, n);
    let mut dgs = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let (a, da) = metric.get(&[i, j]).eval_with_gradient(p).unwrap();
            let (b, db) = metric.get(&[j, i]).eval_with_gradient(p).unwrap();
            gs[(i, j)] = 0.5 * (a + b);
            for k in 0..n {
                dgs[(i * n + j) * n + k] = 0.5 * (da[k] + db[k]);
            }
        }
    }
    let inv = gs.try_inverse().expect("invertible symmetric part");
    let d = |a: usize, b: usize, c: usize| dgs[(a * n + b) * n + c];
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = 0.5
                    * (0..n)
                        .map(|l| inv[(i, l)] * (d(l, k, j) + d(l, j, k) - d(j, k, l)))
                        .sum::<f64>();
            }
        }
    }
    out
}

/// Connection of a metric by central differences of the metric components
/// (step `h`), straight from `Γ_{i.jk} = ½(g_{ji,k} - g_{jk,i} + g_{ik,j})`.
pub fn fd_connection(metric: &TensorField, p: &[f64], h: f64) -> Vec<f64> {
    let n = metric.dim();
    let d = |a: usize, b: usize, c: usize| {
        central_difference(|q| metric.get(&[a, b]).eval(q).unwrap(), p, c, h)
    };
    let mut gs = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let a = metric.get(&[i, j]).eval(p).unwrap();
            let b = metric.get(&[j, i]).eval(p).unwrap();
            gs[(i, j)] = 0.5 * (a + b);
        }
    }
    let inv = gs.try_inverse().unwrap();
    let mut first = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                first[(i * n + j) * n + k] = 0.5 * (d(j, i, k) - d(j, k, i) + d(i, k, j));
            }
        }
    }
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = (0..n)
                    .map(|p| inv[(i, p)] * first[(p * n + j) * n + k])
                    .sum();
            }
        }
    }
    out
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
