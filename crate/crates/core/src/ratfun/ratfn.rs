use num_complex::Complex;
use serde::Serialize;

use super::poly::Polynomial;
use super::roots::{RootLocation, RootSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Three-valued outcome of a root-location test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    /// Some root lies on the unit circle within tolerance.
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub stable: Verdict,
    pub minimum_phase: Verdict,
    pub proper: bool,
}

fn verdict_all_inside<T: Scalar>(roots: &RootSet<T>) -> Verdict {
    if roots.any(RootLocation::Outside) {
        Verdict::No
    } else if roots.any(RootLocation::OnCircle) {
        Verdict::Marginal
    } else {
        Verdict::Yes
    }
}

/// Real rational function `num(q) / den(q)` in `q = z^{-1}`.
///
/// Canonical form: no common roots within [`Scalar::CANCEL_TOL`], no common
/// factor of `q`, and the lowest nonzero coefficient of `den` equal to one
/// (that is `den[0] = 1` whenever the function is proper).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalFunction<T> {
    num: Polynomial<T>,
    den: Polynomial<T>,
}

impl<T: Scalar> RationalFunction<T> {
    /// Reduced quotient `num / den`.
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        reduce(num, den)
    }

    /// Quotient that is only normalized, keeping every common factor.
    pub fn unreduced(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(normalize(num, den))
    }

    pub fn from_poly(p: Polynomial<T>) -> Self {
        normalize(p, Polynomial::one())
    }

    pub fn constant(c: T) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn zero() -> Self {
        Self::from_poly(Polynomial::zero())
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    /// `q^k`, a delay of `k` steps.
    pub fn delay(k: usize) -> Self {
        Self::from_poly(Polynomial::monomial(k, T::one()))
    }

    /// `z^k`, an advance of `k` steps.
    pub fn advance(k: usize) -> Self {
        normalize(Polynomial::one(), Polynomial::monomial(k, T::one()))
    }

    /// From ordinary z-polynomials given highest power first.
    pub fn from_z_coeffs(num_desc: &[T], den_desc: &[T]) -> Result<Self> {
        let strip = |v: &[T]| -> Vec<T> {
            let first = v.iter().position(|c| !c.is_zero()).unwrap_or(v.len());
            v[first..].to_vec()
        };
        let n = strip(num_desc);
        let d = strip(den_desc);
        if d.is_empty() {
            return Err(Error::DivisionByZero);
        }
        let top = n.len().max(d.len());
        let pad = |v: Vec<T>| -> Result<Polynomial<T>> {
            let mut out = vec![T::zero(); top - v.len()];
            out.extend(v);
            Polynomial::try_new(out)
        };
        if n.is_empty() {
            return Ok(Self::zero());
        }
        Self::new(pad(n)?, pad(d)?)
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    /// Numerator and denominator as ordinary z-polynomials, highest power
    /// first, without leading zeros.
    pub fn z_coeffs(&self) -> (Vec<T>, Vec<T>) {
        // after multiplying through by z^{top-1}, coefficient k of the q-form
        // multiplies z^{top-1-k}
        let top = self.num.coeffs().len().max(self.den.coeffs().len());
        let desc = |p: &Polynomial<T>| -> Vec<T> {
            let v: Vec<T> = (0..top).map(|k| p.coeff(k)).collect();
            let first = v.iter().position(|c| !c.is_zero()).unwrap_or(v.len());
            v[first..].to_vec()
        };
        (desc(&self.num), desc(&self.den))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn eval_z(&self, z: Complex<T>) -> Complex<T> {
        self.eval_q(z.inv())
    }

    pub fn eval_q(&self, q: Complex<T>) -> Complex<T> {
        self.num.eval_complex(q) / self.den.eval_complex(q)
    }

    /// Frequency response at angle `theta`.
    pub fn freq(&self, theta: T) -> Complex<T> {
        self.eval_z(Complex::from_polar(T::one(), theta))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.den == other.den {
            return Self::new(&self.num + &other.num, self.den.clone());
        }
        let (g, a_rest, b_rest) = common_factor(&self.den, &other.den)?;
        let num = &(&self.num * &b_rest) + &(&other.num * &a_rest);
        Self::new(num, &(&g * &a_rest) * &b_rest)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Self::new(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(normalize(self.den.clone(), self.num.clone()))
    }

    pub fn neg(&self) -> Self {
        Self {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Denominator z-degree minus numerator z-degree, which is the index of
    /// the first nonzero impulse response sample. Zero for the zero function.
    pub fn relative_degree(&self) -> i64 {
        match (self.num.valuation(), self.den.valuation()) {
            (Some(n), Some(d)) => n as i64 - d as i64,
            _ => 0,
        }
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.is_zero() || self.relative_degree() >= 1
    }

    pub fn poles(&self) -> Result<RootSet<T>> {
        self.den.roots_in_z()
    }

    pub fn zeros(&self) -> Result<RootSet<T>> {
        if self.is_zero() {
            return Ok(RootSet::empty());
        }
        self.num.roots_in_z()
    }

    pub fn classify(&self) -> Result<Classification> {
        let proper = self.is_proper();
        let stable = if proper {
            verdict_all_inside(&self.poles()?)
        } else {
            Verdict::No
        };
        let minimum_phase = verdict_all_inside(&self.zeros()?);
        Ok(Classification {
            stable,
            minimum_phase,
            proper,
        })
    }

    /// First `count` coefficients of the power series in `q`.
    pub fn impulse_prefix(&self, count: usize) -> Result<Vec<T>> {
        if !self.is_proper() {
            return Err(Error::Improper(format!(
                "relative degree {} has no causal expansion",
                self.relative_degree()
            )));
        }
        let d0 = self.den.coeff(0);
        let mut s = vec![T::zero(); count];
        for k in 0..count {
            let mut acc = self.num.coeff(k);
            for j in 1..=k.min(self.den.degree().unwrap_or(0)) {
                acc -= self.den.coeff(j) * s[k - j];
            }
            s[k] = acc / d0;
        }
        Ok(s)
    }
}

/// Scales so the lowest nonzero denominator coefficient is one.
fn normalize<T: Scalar>(num: Polynomial<T>, den: Polynomial<T>) -> RationalFunction<T> {
    if num.is_zero() {
        return RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        };
    }
    let v = den.valuation().expect("nonzero denominator");
    let c = den.coeff(v);
    if c == T::one() {
        RationalFunction { num, den }
    } else {
        RationalFunction {
            num: num.scale(T::one() / c),
            den: den.scale(T::one() / c),
        }
    }
}

/// Zeroes the lowest coefficients of `p` that are negligible relative to its
/// largest one, stopping below index `limit`.
fn snap_low_order<T: Scalar>(p: &Polynomial<T>, limit: usize) -> Polynomial<T> {
    let thr = T::NEGLIGIBLE * p.max_abs();
    let mut c = p.coeffs().to_vec();
    for x in c.iter_mut().take(limit) {
        if x.abs() <= thr {
            *x = T::zero();
        } else {
            break;
        }
    }
    Polynomial::new(c)
}

fn strip_common_delay<T: Scalar>(
    num: Polynomial<T>,
    den: Polynomial<T>,
) -> (Polynomial<T>, Polynomial<T>) {
    let (vn, vd) = (num.valuation().unwrap(), den.valuation().unwrap());
    let (num, den) = if vd > vn {
        (snap_low_order(&num, vd), den)
    } else if vn > vd {
        (num, snap_low_order(&den, vn))
    } else {
        (num, den)
    };
    let s = num.valuation().unwrap().min(den.valuation().unwrap());
    (num.unshift(s), den.unshift(s))
}

fn negligible_top<T: Scalar>(p: &Polynomial<T>) -> usize {
    let thr = T::NEGLIGIBLE * p.max_abs();
    p.coeffs()
        .iter()
        .rev()
        .take_while(|x| x.abs() <= thr)
        .count()
}

/// Drops negligible leading coefficients (z-roots numerically at the
/// origin) where both sides have them, the counterpart of
/// [`strip_common_delay`] at the other end.
fn trim_common_top<T: Scalar>(
    num: Polynomial<T>,
    den: Polynomial<T>,
) -> (Polynomial<T>, Polynomial<T>) {
    let k = negligible_top(&num).min(negligible_top(&den));
    if k == 0 {
        return (num, den);
    }
    let (ln, ld) = (num.coeffs().len(), den.coeffs().len());
    (num.truncate(ln - k), den.truncate(ld - k))
}

/// The linear or quadratic real factor in `q` that carries the z-root `r`
/// (and its conjugate).
fn root_factor<T: Scalar>(r: Complex<T>) -> Polynomial<T> {
    if r.im.is_zero() {
        Polynomial::new(vec![T::one(), -r.re])
    } else {
        Polynomial::new(vec![T::one(), -(r.re + r.re), r.norm_sqr()])
    }
}

fn remove_root<T: Scalar>(p: &Polynomial<T>, r: Complex<T>, times: usize) -> Polynomial<T> {
    let f = root_factor(r);
    let low = r.norm() <= T::one();
    (0..times).fold(p.clone(), |acc, _| acc.deflate(&f, low))
}

/// Pairs of matching finite roots: (root in `a`, root in `b`, count). Roots
/// on the unit circle never match. Complex roots are reported once per
/// conjugate pair, by the member in the upper half plane.
fn matching_roots<T: Scalar>(
    a: &RootSet<T>,
    b: &RootSet<T>,
) -> Vec<(Complex<T>, Complex<T>, usize)> {
    let mut used = vec![false; b.roots().len()];
    let mut out = Vec::new();
    for (ra, ma, la) in a.iter() {
        if la == RootLocation::OnCircle || ra.im < T::zero() {
            continue;
        }
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, (rb, _, lb))| {
                !used[*j]
                    && *lb != RootLocation::OnCircle
                    && rb.im.is_zero() == ra.im.is_zero()
                    && rb.im >= T::zero()
            })
            .map(|(j, (rb, mb, _))| (j, rb, mb, (ra - rb).norm()))
            .min_by(|x, y| x.3.partial_cmp(&y.3).unwrap_or(std::cmp::Ordering::Equal));
        if let Some((j, rb, mb, d)) = best {
            if d <= T::CANCEL_TOL * ra.norm().max(rb.norm()) {
                used[j] = true;
                out.push((ra, rb, ma.min(mb)));
            }
        }
    }
    out
}

fn finite_degree<T: Scalar>(p: &Polynomial<T>) -> usize {
    p.degree().unwrap_or(0) - p.valuation().unwrap_or(0)
}

fn reduce<T: Scalar>(num: Polynomial<T>, den: Polynomial<T>) -> Result<RationalFunction<T>> {
    if num.is_zero() {
        return Ok(normalize(num, den));
    }
    let (num, den) = strip_common_delay(num, den);
    let (mut num, mut den) = trim_common_top(num, den);
    if finite_degree(&num) > 0 && finite_degree(&den) > 0 {
        let rn = num.roots_in_z()?;
        let rd = den.roots_in_z()?;
        for (zn, zd, k) in matching_roots(&rn, &rd) {
            num = remove_root(&num, zn, k);
            den = remove_root(&den, zd, k);
        }
    }
    Ok(normalize(num, den))
}

/// Splits two denominators as `a = g a'`, `b ~ g b'` over their shared roots
/// and shared power of `q`; `g` is built from `a`'s own factors.
fn common_factor<T: Scalar>(
    a: &Polynomial<T>,
    b: &Polynomial<T>,
) -> Result<(Polynomial<T>, Polynomial<T>, Polynomial<T>)> {
    let s = a.valuation().unwrap().min(b.valuation().unwrap());
    let mut g = Polynomial::monomial(s, T::one());
    let mut a1 = a.unshift(s);
    let mut b1 = b.unshift(s);
    if finite_degree(&a1) > 0 && finite_degree(&b1) > 0 {
        let ra = a1.roots_in_z()?;
        let rb = b1.roots_in_z()?;
        for (za, zb, k) in matching_roots(&ra, &rb) {
            a1 = remove_root(&a1, za, k);
            b1 = remove_root(&b1, zb, k);
            for _ in 0..k {
                g = &g * &root_factor(za);
            }
        }
        // keep a = g a' exact in scale: g carries unit constant terms, so the
        // leftover scale sits in a' and b'
    }
    Ok((g, a1, b1))
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Polynomial<f64>;
    type R = RationalFunction<f64>;

    fn close(a: &R, b: &R, tol: f64) -> bool {
        (0..16).all(|k| {
            let z = Complex::from_polar(1.3, 0.37 * k as f64 + 0.1);
            (a.eval_z(z) - b.eval_z(z)).norm() <= tol * (1.0 + b.eval_z(z).norm())
        })
    }

    fn plant(r: usize) -> R {
        // (z - 0.2) / (z^r (z - 1.1)(z - 1.2))
        let mut den = vec![1.0, -2.3, 1.32];
        den.extend(std::iter::repeat_n(0.0, r));
        R::from_z_coeffs(&[1.0, -0.2], &den).unwrap()
    }

    #[test]
    fn inverse_gives_one() {
        let a = R::from_z_coeffs(&[1.0, -0.2], &[1.0, -1.1]).unwrap();
        assert_eq!(a.mul(&a.inv().unwrap()).unwrap(), R::one());
    }

    #[test]
    fn cancellation() {
        let f = R::from_z_coeffs(&[1.0, -0.5], &[1.0, -0.5]).unwrap();
        assert_eq!(f, R::one());
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(R::one().div(&R::zero()), Err(Error::DivisionByZero));
        assert_eq!(R::new(P::one(), P::zero()), Err(Error::DivisionByZero));
    }

    #[test]
    fn relative_degree_of_plant() {
        assert_eq!(plant(0).relative_degree(), 1);
        assert_eq!(plant(3).relative_degree(), 4);
        assert_eq!(R::one().relative_degree(), 0);
        assert_eq!(R::advance(2).relative_degree(), -2);
    }

    #[test]
    fn plant_representation() {
        let p = plant(0);
        assert_eq!(p.den().coeffs(), &[1.0, -2.3, 1.32]);
        assert!((p.num().coeff(1) - 1.0).abs() < 1e-15);
        assert!((p.num().coeff(2) + 0.2).abs() < 1e-15);
        let (n, d) = p.z_coeffs();
        assert_eq!(n, vec![1.0, -0.2]);
        assert_eq!(d, vec![1.0, -2.3, 1.32]);
    }

    #[test]
    fn mean_channel_times_plant() {
        // H = 0.36 + 0.12 q; H P = 0.12 (3z + 1)(z - 0.2) / (z^2 (z-1.1)(z-1.2))
        let h = R::from_poly(P::new(vec![0.36, 0.12]));
        let hp = h.mul(&plant(0)).unwrap();
        let expect =
            R::from_z_coeffs(&[0.36, 0.12 - 0.072, -0.024], &[1.0, -2.3, 1.32, 0.0]).unwrap();
        assert!(close(&hp, &expect, 1e-13));
        assert_eq!(hp.relative_degree(), 1);
    }

    #[test]
    fn delay_cancels_with_negligible_terms() {
        // numerator 1e-17 + 1e-18 q + q^2 over q^2: the tiny terms are noise
        let f = R::new(P::new(vec![1e-17, 1e-18, 1.0]), P::monomial(2, 1.0)).unwrap();
        assert_eq!(f, R::one());
    }

    #[test]
    fn addition_shares_denominator_factors() {
        let a = R::from_z_coeffs(&[1.0], &[1.0, -1.1]).unwrap();
        let b = R::from_z_coeffs(&[2.0, 0.0], &[1.0, -1.1])
            .unwrap()
            .scale(-0.5);
        // a + b = (1 - z)/(z - 1.1), still first order
        let s = a.add(&b).unwrap();
        assert_eq!(s.den().degree(), Some(1));
        let c = R::from_z_coeffs(&[1.0], &[1.0, 0.3]).unwrap();
        let d = a.mul(&c).unwrap();
        let e = d.sub(&a.mul(&c).unwrap()).unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn marginal_roots_never_cancel() {
        let f = R::new(P::new(vec![1.0, -1.0]), P::new(vec![1.0, -1.0])).unwrap();
        assert_eq!(f.den().degree(), Some(1));
        let c = f.classify().unwrap();
        assert_eq!(c.stable, Verdict::Marginal);
        assert_eq!(c.minimum_phase, Verdict::Marginal);
    }

    #[test]
    fn classify_mean_channels() {
        let h1 = R::from_z_coeffs(&[40.0, 12.0], &[110.0, 0.0]).unwrap();
        assert_eq!(h1.classify().unwrap().minimum_phase, Verdict::Yes);
        let z = h1.zeros().unwrap();
        assert!((z.roots()[0].re + 0.3).abs() < 1e-12);
        let h2 = R::from_z_coeffs(&[5.0, 6.0], &[11.0, 0.0]).unwrap();
        assert_eq!(h2.classify().unwrap().minimum_phase, Verdict::No);
        let one = R::one().classify().unwrap();
        assert_eq!(
            one,
            Classification {
                stable: Verdict::Yes,
                minimum_phase: Verdict::Yes,
                proper: true
            }
        );
        assert_eq!(plant(0).classify().unwrap().stable, Verdict::No);
    }

    #[test]
    fn impulse_prefixes() {
        let f = R::new(P::one(), P::new(vec![1.0, -0.5])).unwrap();
        assert_eq!(f.impulse_prefix(3).unwrap(), vec![1.0, 0.5, 0.25]);
        assert_eq!(R::delay(2).impulse_prefix(2).unwrap(), vec![0.0, 0.0]);
        assert!(R::advance(1).impulse_prefix(2).is_err());
        // W = (0.3188 - 0.1355 q)/(0.36 + 0.12 q): leading sample 0.3188/0.36
        let w = R::new(P::new(vec![0.3188, -0.1355]), P::new(vec![0.36, 0.12])).unwrap();
        let pre = w.impulse_prefix(2).unwrap();
        assert!((pre[0] - 0.3188 / 0.36).abs() < 1e-12);
        assert!((pre[1] - (-0.1355 - 0.12 * 0.3188 / 0.36) / 0.36).abs() < 1e-12);
    }

    #[test]
    fn z_coefficient_round_trip() {
        let f = R::from_z_coeffs(&[2.0, 0.5, 0.0], &[1.0, -0.3, 0.02, 0.0]).unwrap();
        let (n, d) = f.z_coeffs();
        let g = R::from_z_coeffs(&n, &d).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn single_precision_arith() {
        let a = RationalFunction::<f32>::from_z_coeffs(&[1.0, -0.2], &[1.0, -1.1]).unwrap();
        let one = a.mul(&a.inv().unwrap()).unwrap();
        assert_eq!(one, RationalFunction::<f32>::one());
    }
}
