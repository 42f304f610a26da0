use super::Scalar;
use crate::MAX_DIM;

/// A value together with its partial derivatives with respect to up to
/// [`MAX_DIM`] coordinates. Slots beyond the expression's dimension stay zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: [f64; MAX_DIM],
}

impl Dual {
    pub fn constant(re: f64) -> Self {
        Dual {
            re,
            eps: [0.0; MAX_DIM],
        }
    }

    /// Seeds coordinate `index` with unit derivative.
    pub fn variable(index: usize, re: f64) -> Self {
        let mut eps = [0.0; MAX_DIM];
        eps[index] = 1.0;
        Dual { re, eps }
    }

    /// Chain rule for a unary function with value `f` and derivative `df` at `re`.
    fn chain(self, f: f64, df: f64) -> Self {
        let mut eps = [0.0; MAX_DIM];
        for (out, e) in eps.iter_mut().zip(self.eps) {
            *out = df * e;
        }
        Dual { re: f, eps }
    }
}

impl Scalar for Dual {
    const SQRT_AT_ZERO: bool = false;

    fn constant(c: f64) -> Self {
        Dual::constant(c)
    }
    fn variable(index: usize, value: f64) -> Self {
        Dual::variable(index, value)
    }
    fn value(&self) -> f64 {
        self.re
    }
    fn add(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps) {
            *e += r;
        }
        Dual {
            re: self.re + rhs.re,
            eps,
        }
    }
    fn sub(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps) {
            *e -= r;
        }
        Dual {
            re: self.re - rhs.re,
            eps,
        }
    }
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [0.0; MAX_DIM];
        for k in 0..MAX_DIM {
            eps[k] = self.eps[k] * rhs.re + self.re * rhs.eps[k];
        }
        Dual {
            re: self.re * rhs.re,
            eps,
        }
    }
    fn div(self, rhs: Self) -> Self {
        let re = self.re / rhs.re;
        let mut eps = [0.0; MAX_DIM];
        for k in 0..MAX_DIM {
            eps[k] = (self.eps[k] - re * rhs.eps[k]) / rhs.re;
        }
        Dual { re, eps }
    }
    fn neg(self) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e = -*e;
        }
        Dual { re: -self.re, eps }
    }
    fn sin(self) -> Self {
        self.chain(libm::sin(self.re), libm::cos(self.re))
    }
    fn cos(self) -> Self {
        self.chain(libm::cos(self.re), -libm::sin(self.re))
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.re);
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(libm::log(self.re), 1.0 / self.re)
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.re);
        self.chain(s, 0.5 / s)
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.iter().all(|e| e.is_finite())
    }
}
