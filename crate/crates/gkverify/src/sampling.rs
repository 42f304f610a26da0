//! Seeded sample points and initial velocities.

use gkverify_core::Expr;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deffile::Domain;

/// Draws per point before giving up on a heavily excluded box.
const ATTEMPTS_PER_POINT: usize = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("only {found} of {wanted} sample points survived the exclusions")]
pub struct SampleError {
    pub wanted: usize,
    pub found: usize,
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

fn excluded(excludes: &[Expr], p: &[f64]) -> bool {
    excludes
        .iter()
        .any(|e| !matches!(e.eval(p), Ok(v) if v <= 0.0))
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `count` points uniform in `domain`, skipping excluded ones.
    pub fn points(
        &mut self,
        domain: &Domain,
        excludes: &[Expr],
        count: usize,
    ) -> Result<Vec<Vec<f64>>, SampleError> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count.saturating_mul(ATTEMPTS_PER_POINT) {
            if out.len() == count {
                break;
            }
            let p: Vec<f64> = (0..domain.dim())
                .map(|a| self.rng.gen_range(domain.lo[a]..domain.hi[a]))
                .collect();
            if !excluded(excludes, &p) {
                out.push(p);
            }
        }
        if out.len() < count {
            return Err(SampleError {
                wanted: count,
                found: out.len(),
            });
        }
        Ok(out)
    }

    /// A velocity uniform in `[-1, 1]^n`, redrawn while shorter than 0.1.
    pub fn velocity(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
            if v.iter().map(|c| c * c).sum::<f64>() >= 0.01 {
                return v;
            }
        }
    }
}
