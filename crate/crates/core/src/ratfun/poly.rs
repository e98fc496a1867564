use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use serde::Serialize;

use super::roots::{aberth, RootSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Real polynomial in the backward-shift variable `q = z^{-1}`.
///
/// `coeffs[k]` multiplies `q^k`. Trailing zeros are trimmed, so the zero
/// polynomial has no coefficients at all.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Like [`Polynomial::new`] but rejects non-finite coefficients.
    pub fn try_new(coeffs: Vec<T>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite polynomial coefficient {c}"
            )));
        }
        Ok(Self::new(coeffs))
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// `c * q^k`
    pub fn monomial(k: usize, c: T) -> Self {
        let mut v = vec![T::zero(); k + 1];
        v[k] = c;
        Self::new(v)
    }

    /// `lead * prod (1 - rho q)` over the given z-roots. Complex roots must
    /// appear together with their conjugates.
    pub fn from_z_roots(lead: T, roots: &[Complex<T>]) -> Self {
        let mut acc = vec![Complex::new(lead, T::zero())];
        for &r in roots {
            let mut next = vec![Complex::new(T::zero(), T::zero()); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest power of `q` present; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Lowest power of `q` with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, q: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * q + c)
    }

    pub fn eval_complex(&self, q: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * q + c)
    }

    /// Value at the point `z` of the z-plane (`q = 1/z`).
    pub fn eval_z(&self, z: Complex<T>) -> Complex<T> {
        self.eval_complex(z.inv())
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(self.coeffs.iter().map(|&x| x * c).collect())
    }

    /// Multiplies by `q^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut v = vec![T::zero(); k];
        v.extend_from_slice(&self.coeffs);
        Self::new(v)
    }

    /// Drops the first `k` coefficients, i.e. divides by `q^k` discarding
    /// whatever sits below.
    pub fn unshift(&self, k: usize) -> Self {
        Self::new(self.coeffs.iter().skip(k).copied().collect())
    }

    /// Keeps the first `n` coefficients (reduction modulo `q^n`).
    pub fn truncate(&self, n: usize) -> Self {
        Self::new(self.coeffs.iter().take(n).copied().collect())
    }

    /// Euclidean division by `d`, eliminating from the highest power down.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("polynomial division by zero");
        let Some(n) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if n < dd {
            return (Self::zero(), self.clone());
        }
        let lead = d.coeffs[dd];
        let mut r = self.coeffs.clone();
        let mut quot = vec![T::zero(); n - dd + 1];
        for k in (0..=n - dd).rev() {
            let c = r[k + dd] / lead;
            quot[k] = c;
            for j in 0..=dd {
                r[k + j] -= c * d.coeffs[j];
            }
            r[k + dd] = T::zero();
        }
        r.truncate(dd);
        (Self::new(quot), Self::new(r))
    }

    pub fn rem(&self, m: &Self) -> Self {
        self.div_rem(m).1
    }

    /// Quotient of a division expected to be exact.
    ///
    /// Eliminating from the low end is the stable direction when the factor's
    /// z-roots lie inside the unit circle; from the high end otherwise. The
    /// remainder is dropped.
    pub fn deflate(&self, factor: &Self, from_low_end: bool) -> Self {
        let fd = factor.degree().expect("deflation by zero");
        let Some(n) = self.degree() else {
            return Self::zero();
        };
        if n < fd {
            return Self::zero();
        }
        if !from_low_end {
            return self.div_rem(factor).0;
        }
        let f0 = factor.coeffs[0];
        assert!(
            !f0.is_zero(),
            "low-end deflation needs a nonzero constant term"
        );
        let m = n - fd + 1;
        let mut s = vec![T::zero(); m];
        for k in 0..m {
            let mut acc = self.coeffs[k];
            for j in 1..=fd.min(k) {
                acc -= factor.coeffs[j] * s[k - j];
            }
            s[k] = acc / f0;
        }
        Self::new(s)
    }

    /// Coefficients of the ordinary z-polynomial with the same nonzero roots,
    /// highest power of z first.
    pub fn z_coeffs(&self) -> Vec<T> {
        match self.valuation() {
            Some(v) => self.coeffs[v..].to_vec(),
            None => Vec::new(),
        }
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * T::from_usize(k).unwrap())
                .collect(),
        )
    }

    /// Roots of the z-polynomial `z^d p(1/z)`: the reciprocals of the nonzero
    /// roots in `q`.
    pub fn roots_in_z(&self) -> Result<RootSet<T>> {
        if self.is_zero() {
            return Err(Error::Invalid("roots of the zero polynomial".into()));
        }
        let desc = self.z_coeffs();
        let raw = aberth(&desc).map_err(|_| Error::RootsNoConvergence {
            poly: format!("{:?}", self.coeffs),
        })?;
        let mut set = RootSet::from_roots(raw);
        set.polish_repeated(&desc);
        Ok(set)
    }

    fn canonical_pair<'a>(a: &'a Self, b: &'a Self) -> (&'a Self, &'a Self) {
        let ord = a.coeffs.len().cmp(&b.coeffs.len()).then_with(|| {
            a.coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
        if ord == Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        }
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: Self) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    /// Convolution. Operands are put in a canonical order first so that
    /// `a * b` and `b * a` agree bit for bit.
    fn mul(self, rhs: Self) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let (a, b) = Polynomial::canonical_pair(self, rhs);
        let mut out = vec![T::zero(); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            for (j, &y) in b.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Polynomial::new(out)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        Polynomial::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Polynomial<f64>;

    #[test]
    fn trims_trailing_zeros() {
        assert_eq!(P::new(vec![1.0, 2.0, 0.0, 0.0]).coeffs(), &[1.0, 2.0]);
        assert!(P::new(vec![0.0, 0.0]).is_zero());
        assert_eq!(P::zero().degree(), None);
    }

    #[test]
    fn rejects_nan() {
        assert!(P::try_new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn arithmetic() {
        let a = P::new(vec![1.0, -1.1]);
        let b = P::new(vec![1.0, -1.2]);
        let ab = &a * &b;
        assert_eq!(ab.degree(), Some(2));
        assert!((ab.coeff(1) + 2.3).abs() < 1e-15);
        assert!((ab.coeff(2) - 1.32).abs() < 1e-15);
        assert_eq!(&a * &b, &b * &a);
        assert!((&(&a + &b) - &P::new(vec![2.0, -2.3])).max_abs() < 1e-15);
    }

    #[test]
    fn div_rem_reconstructs() {
        let p = P::new(vec![3.0, -1.0, 0.5, 2.0, 1.0]);
        let d = P::new(vec![1.0, 0.3, -2.0]);
        let (q, r) = p.div_rem(&d);
        assert!(r.degree().unwrap_or(0) < 2);
        let back = &(&q * &d) + &r;
        assert!((&back - &p).max_abs() < 1e-12);
    }

    #[test]
    fn deflate_both_directions() {
        let f_in = P::new(vec![1.0, -0.5]);
        let f_out = P::new(vec![1.0, -3.0]);
        let rest = P::new(vec![2.0, 0.7, -0.1]);
        let p = &(&rest * &f_in) * &f_out;
        let q1 = p.deflate(&f_in, true).deflate(&f_out, false);
        assert!((&q1 - &rest).max_abs() < 1e-12);
    }

    #[test]
    fn z_roots_round_trip() {
        // (z + 1.2)(z - 1.1) written in z^{-1}
        let p = P::new(vec![1.0, 0.1, -1.32]);
        let roots = p.roots_in_z().unwrap();
        let mut re: Vec<f64> = roots.expanded().iter().map(|r| r.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 1.2).abs() < 1e-12 && (re[1] - 1.1).abs() < 1e-12);
        let back = P::from_z_roots(1.0, &roots.expanded());
        assert!((&back - &p).max_abs() < 1e-12);
    }

    #[test]
    fn delay_factors_are_not_roots() {
        // q^2 (1 - 0.5 q): the only finite nonzero z-root is 0.5
        let p = P::new(vec![0.0, 0.0, 1.0, -0.5]);
        let roots = p.roots_in_z().unwrap();
        assert_eq!(roots.degree(), 1);
        assert!((roots.roots()[0].re - 0.5).abs() < 1e-14);
        assert!(P::constant(1.0).roots_in_z().unwrap().is_empty());
    }

    #[test]
    fn single_precision() {
        let p = Polynomial::<f32>::new(vec![1.0, 0.1, -1.32]);
        let roots = p.roots_in_z().unwrap();
        assert_eq!(roots.degree(), 2);
        assert!(roots
            .expanded()
            .iter()
            .all(|r| (r.re - 1.1).abs() < 1e-4 || (r.re + 1.2).abs() < 1e-4));
    }
}
