//! Geodesics `x''^i + Γ^i_(jk) x'^j x'^k = 0` by fixed-step RK4, and the
//! collinearity defect used to test that a mapping sends geodesics to
//! geodesics as paths.

use alloc::vec::Vec;

use crate::geomap::MappingPair;
use crate::space::{ConnectionAt, Space};
use crate::tensor::Components;
use crate::{Error, Result};

/// Below `DEGENERATE_RATIO * |Γ| |x'|²` the residual `r` is indistinguishable
/// from rounding and its direction is not meaningful; the defect is then 0.
pub const DEGENERATE_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConnectionPart {
    /// `Γ^i_(jk)` only.
    #[default]
    Symmetric,
    /// The full, possibly non-symmetric, `Γ^i_{jk}`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicCurve {
    pub step: f64,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl GeodesicCurve {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self, sample: usize) -> f64 {
        sample as f64 * self.step
    }
}

/// `-Γ^i_{jk} v^j v^k`.
fn acceleration(gamma: &Components, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let g = gamma.data();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += g[(i * n + j) * n + k] * v[j] * v[k];
                }
            }
            -acc
        })
        .collect()
}

fn pick(conn: ConnectionAt, part: ConnectionPart) -> Components {
    match part {
        ConnectionPart::Symmetric => conn.gamma_sym,
        ConnectionPart::Full => conn.gamma,
    }
}

pub fn integrate_geodesic(
    space: &Space,
    x0: &[f64],
    v0: &[f64],
    steps: usize,
    h: f64,
) -> Result<GeodesicCurve> {
    integrate_geodesic_with(space, ConnectionPart::Symmetric, x0, v0, steps, h)
}

pub fn integrate_geodesic_with(
    space: &Space,
    part: ConnectionPart,
    x0: &[f64],
    v0: &[f64],
    steps: usize,
    h: f64,
) -> Result<GeodesicCurve> {
    let n = space.dim();
    for len in [x0.len(), v0.len()] {
        if len != n {
            return Err(Error::PointDimension {
                expected: n,
                found: len,
            });
        }
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h));
    }
    let accel = |x: &[f64], v: &[f64]| -> Result<Vec<f64>> {
        Ok(acceleration(&pick(space.connection_at(x)?, part), v))
    };
    let axpy = |x: &[f64], a: f64, d: &[f64]| -> Vec<f64> {
        x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
    };

    let mut positions = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    positions.push(x.clone());
    velocities.push(v.clone());
    for step in 1..=steps {
        let k1x = v.clone();
        let k1v = accel(&x, &v)?;
        let x2 = axpy(&x, 0.5 * h, &k1x);
        let v2 = axpy(&v, 0.5 * h, &k1v);
        let k2v = accel(&x2, &v2)?;
        let x3 = axpy(&x, 0.5 * h, &v2);
        let v3 = axpy(&v, 0.5 * h, &k2v);
        let k3v = accel(&x3, &v3)?;
        let x4 = axpy(&x, h, &v3);
        let v4 = axpy(&v, h, &k3v);
        let k4v = accel(&x4, &v4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        if x.iter().chain(&v).any(|c| !c.is_finite()) {
            return Err(Error::DivergedState(step));
        }
        positions.push(x.clone());
        velocities.push(v.clone());
    }
    Ok(GeodesicCurve {
        step: h,
        positions,
        velocities,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefectSeries {
    /// `|r_⊥| / |r|` per sample, `r_⊥` being the part of `r` orthogonal to `x'`.
    pub defects: Vec<f64>,
    /// Samples where `r` was below the rounding floor.
    pub degenerate: usize,
}

impl DefectSeries {
    pub fn max(&self) -> f64 {
        crate::max_abs(self.defects.iter().copied())
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|c| c * c).sum())
}

/// Collinearity defect of `r^i = x''^i + Γ̄^i_(jk) x'^j x'^k` along a curve
/// integrated in the source space.
pub fn mapping_geodesic_residual(
    pair: &MappingPair<'_>,
    curve: &GeodesicCurve,
) -> Result<DefectSeries> {
    let n = pair.dim();
    let mut out = DefectSeries {
        defects: Vec::with_capacity(curve.len()),
        degenerate: 0,
    };
    for (sample, (x, v)) in curve.positions.iter().zip(&curve.velocities).enumerate() {
        let speed = norm(v);
        if speed == 0.0 {
            return Err(Error::ZeroVelocity(sample));
        }
        let source = pair.source.connection_at(x)?.gamma_sym;
        let target = pair.target.connection_at(x)?.gamma_sym;
        let p = target.sub(&source)?;
        // r = x'' + Γ̄ x'x' with x'' = -Γ x'x', i.e. the symmetric deformation
        // contracted twice with x'.
        let r: Vec<f64> = acceleration(&p, v).iter().map(|c| -c).collect();
        let r_norm = norm(&r);
        let scale = (source.max_abs() + target.max_abs()) * speed * speed;
        if r_norm <= DEGENERATE_RATIO * scale || r_norm == 0.0 {
            out.degenerate += usize::from(r_norm != 0.0);
            out.defects.push(0.0);
            continue;
        }
        let along: f64 = r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (speed * speed);
        let perp: Vec<f64> = (0..n).map(|i| r[i] - along * v[i]).collect();
        out.defects.push(norm(&perp) / r_norm);
    }
    Ok(out)
}

/// Largest coordinate-wise distance between two sampled curves of equal length.
pub fn max_position_gap(a: &GeodesicCurve, b: &GeodesicCurve) -> f64 {
    crate::max_abs(
        a.positions
            .iter()
            .zip(&b.positions)
            .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| x - y)),
    )
}

/// Integrates every `(x0, v0)` pair; convenience for sequential callers.
pub fn integrate_many(
    space: &Space,
    starts: &[(Vec<f64>, Vec<f64>)],
    steps: usize,
    h: f64,
) -> Result<Vec<GeodesicCurve>> {
    starts
        .iter()
        .map(|(x, v)| integrate_geodesic(space, x, v, steps, h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::tensor::{TensorField, Valence};

    fn diag_space(entries: &[&str]) -> Space {
        let n = entries.len();
        let mut g = TensorField::zeros(n, Valence::new(0, 2));
        for (i, e) in entries.iter().enumerate() {
            g.set(&[i, i], Expr::parse(e, n).unwrap());
        }
        Space::from_metric("diag", g).unwrap()
    }

    #[test]
    fn straight_line_in_flat_space() {
        let s = diag_space(&["1", "1", "1", "1"]);
        let c = integrate_geodesic(&s, &[0.0; 4], &[1.0, 0.0, 0.0, 0.0], 100, 0.01).unwrap();
        assert_eq!(c.len(), 101);
        let last = &c.positions[100];
        assert!((last[0] - 1.0).abs() < 1e-12);
        assert_eq!(&last[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn radial_line_in_polar_metric() {
        let s = diag_space(&["1", "x1^2"]);
        let c = integrate_geodesic(&s, &[1.0, 0.3], &[1.0, 0.0], 200, 0.005).unwrap();
        for (k, p) in c.positions.iter().enumerate() {
            assert!((p[0] - (1.0 + c.time(k))).abs() < 1e-12);
            assert_eq!(p[1], 0.3);
        }
    }

    #[test]
    fn rejects_bad_step_and_shape() {
        let s = diag_space(&["1", "1"]);
        assert_eq!(
            integrate_geodesic(&s, &[0.0, 0.0], &[1.0, 0.0], 1, 0.0),
            Err(Error::InvalidStep(0.0))
        );
        assert!(matches!(
            integrate_geodesic(&s, &[0.0], &[1.0, 0.0], 1, 0.1),
            Err(Error::PointDimension { .. })
        ));
    }

    #[test]
    fn leaving_the_domain_is_an_error() {
        let s = diag_space(&["1", "ln(x1)"]);
        let err = integrate_geodesic(&s, &[1.05, 0.0], &[-1.0, 0.0], 100, 0.01).unwrap_err();
        assert!(matches!(err, Error::Eval(_) | Error::SingularMetric { .. }));
    }

    #[test]
    fn identical_spaces_have_zero_defect() {
        let s = diag_space(&["1", "x1^2"]);
        let c = integrate_geodesic(&s, &[1.0, 0.0], &[0.3, 0.8], 50, 0.01).unwrap();
        let pair = MappingPair::new(&s, &s).unwrap();
        let d = mapping_geodesic_residual(&pair, &c).unwrap();
        assert_eq!(d.max(), 0.0);
        assert_eq!(d.degenerate, 0);
    }

    #[test]
    fn zero_velocity_is_reported() {
        let s = diag_space(&["1", "1"]);
        let c = integrate_geodesic(&s, &[0.0, 0.0], &[0.0, 0.0], 2, 0.1).unwrap();
        let pair = MappingPair::new(&s, &s).unwrap();
        assert_eq!(
            mapping_geodesic_residual(&pair, &c),
            Err(Error::ZeroVelocity(0))
        );
    }
}
