use num_complex::Complex;

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::ratfun::{Polynomial, RationalFunction, RootLocation, RootSet, Verdict};
use crate::scalar::Scalar;

/// Single-input single-output realization `x+ = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: T,
}

impl<T: Scalar> StateSpace<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>, c: Matrix<T>, d: T) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || b.cols() != 1 || c.cols() != n || c.rows() != 1 {
            return Err(Error::Invalid(format!(
                "inconsistent realization: A {}x{}, B {}x{}, C {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless gain.
    pub fn gain(d: T) -> Self {
        Self {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, 1),
            c: Matrix::zeros(1, 0),
            d,
        }
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    /// `C (zI - A)^{-1} B + D`
    pub fn eval_z(&self, z: Complex<T>) -> Complex<T> {
        let n = self.order();
        let mut m: Vec<Complex<T>> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let diag = if i == j {
                    z
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                diag - self.a[(i, j)]
            })
            .collect();
        let mut x: Vec<Complex<T>> = (0..n)
            .map(|i| Complex::new(self.b[(i, 0)], T::zero()))
            .collect();
        complex_solve_in_place(&mut m, &mut x, n);
        (0..n).fold(Complex::new(self.d, T::zero()), |acc, i| {
            acc + x[i] * self.c[(0, i)]
        })
    }

    /// `[A B; C D]`
    pub fn composite(&self) -> Matrix<T> {
        let n = self.order();
        let mut m = Matrix::zeros(n + 1, n + 1);
        m.set_block(0, 0, &self.a);
        m.set_block(0, n, &self.b);
        m.set_block(n, 0, &self.c);
        m[(n, n)] = self.d;
        m
    }

    /// Feeds the output of `self` into `next`.
    pub fn series(&self, next: &Self) -> Self {
        let (n1, n2) = (self.order(), next.order());
        let mut a = Matrix::zeros(n1 + n2, n1 + n2);
        a.set_block(0, 0, &self.a);
        a.set_block(n1, n1, &next.a);
        a.set_block(n1, 0, &next.b.matmul(&self.c));
        let mut b = Matrix::zeros(n1 + n2, 1);
        b.set_block(0, 0, &self.b);
        b.set_block(n1, 0, &next.b.scale(self.d));
        let mut c = Matrix::zeros(1, n1 + n2);
        c.set_block(0, 0, &self.c.scale(next.d));
        c.set_block(0, n1, &next.c);
        Self {
            a,
            b,
            c,
            d: next.d * self.d,
        }
    }

    /// Orthogonal (or any invertible) change of state coordinates
    /// `x = S x'`.
    pub fn similarity(&self, s: &Matrix<T>) -> Result<Self> {
        let si = s.inverse()?;
        Ok(Self {
            a: si.matmul(&self.a).matmul(s),
            b: si.matmul(&self.b),
            c: self.c.matmul(s),
            d: self.d,
        })
    }

    /// Markov parameters `D, CB, CAB, ...`.
    pub fn markov(&self, count: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d);
        let mut v = self.b.clone();
        for _ in 1..count {
            out.push(if self.order() == 0 {
                T::zero()
            } else {
                self.c.matmul(&v)[(0, 0)]
            });
            v = self.a.matmul(&v);
        }
        out
    }

    /// Transfer function as ordinary polynomials in the frequency variable,
    /// highest power first: `(num, den)` with monic `den = det(sI - A)`.
    /// Faddeev-LeVerrier, fine for the handful of states used here.
    pub fn transfer_coeffs(&self) -> (Vec<T>, Vec<T>) {
        let n = self.order();
        let mut den = vec![T::zero(); n + 1];
        den[0] = T::one();
        let mut num = vec![T::zero(); n + 1];
        let mut mk = Matrix::zeros(n, n);
        for k in 1..=n {
            mk = self
                .a
                .matmul(&mk)
                .add(&Matrix::identity(n).scale(den[k - 1]));
            den[k] = -self.a.matmul(&mk).trace() / T::from_usize(k).unwrap();
            num[k] = self.c.matmul(&mk).matmul(&self.b)[(0, 0)];
        }
        for k in 0..=n {
            num[k] += self.d * den[k];
        }
        (num, den)
    }

    /// The transfer function as a rational function of `z`.
    pub fn to_ratfn(&self) -> Result<RationalFunction<T>> {
        let (num, den) = self.transfer_coeffs();
        RationalFunction::from_z_coeffs(&num, &den)
    }
}

fn complex_solve_in_place<T: Scalar>(m: &mut [Complex<T>], x: &mut [Complex<T>], n: usize) {
    for k in 0..n {
        let p = (k..n)
            .max_by(|&a, &b| {
                m[a * n + k]
                    .norm()
                    .partial_cmp(&m[b * n + k].norm())
                    .unwrap()
            })
            .unwrap();
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let l = m[i * n + k] / pivot;
            for j in k..n {
                let v = m[k * n + j];
                m[i * n + j] -= l * v;
            }
            let v = x[k];
            x[i] -= l * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
}

/// Controllable canonical realization of a proper rational function.
pub fn realize<T: Scalar>(f: &RationalFunction<T>) -> Result<StateSpace<T>> {
    if !f.is_proper() {
        return Err(Error::Improper(format!(
            "cannot realize relative degree {}",
            f.relative_degree()
        )));
    }
    let d0 = f.den().coeff(0);
    let num = f.num().scale(T::one() / d0);
    let den = f.den().scale(T::one() / d0);
    let m = num.coeffs().len().max(den.coeffs().len()).saturating_sub(1);
    let d = num.coeff(0);
    if m == 0 {
        return Ok(StateSpace::gain(d));
    }
    let a = Matrix::from_fn(m, m, |i, j| {
        if i == 0 {
            -den.coeff(j + 1)
        } else if i == j + 1 {
            T::one()
        } else {
            T::zero()
        }
    });
    let mut b = Matrix::zeros(m, 1);
    b[(0, 0)] = T::one();
    let c = Matrix::from_fn(1, m, |_, j| num.coeff(j + 1) - d * den.coeff(j + 1));
    Ok(StateSpace { a, b, c, d })
}

/// Upper estimate of the spectral radius from `||A^(2^k)||^(1/2^k)`, with the
/// powers renormalized at every squaring.
pub fn spectral_radius_bound<T: Scalar>(a: &Matrix<T>) -> T {
    if a.rows() == 0 {
        return T::zero();
    }
    let mut m = a.clone();
    let mut log_norm = T::zero();
    let mut est = T::infinity();
    let mut weight = T::one();
    for _ in 0..40 {
        let s = m.norm_fro();
        if s.is_zero() {
            return T::zero();
        }
        m = m.scale(T::one() / s);
        log_norm += s.ln();
        est = (log_norm * weight).exp();
        m = m.matmul(&m);
        log_norm = log_norm + log_norm;
        weight /= T::one() + T::one();
    }
    est
}

/// Solves `X = A X Aᵀ + Q` by the doubling iteration.
pub fn stein_solve<T: Scalar>(a: &Matrix<T>, q: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    if !a.is_square() || q.rows() != n || q.cols() != n {
        return Err(Error::Invalid("stein_solve dimension mismatch".into()));
    }
    if q.max_abs_diff(&q.transpose()) > T::lit(1e3) * T::epsilon() * (T::one() + q.norm_fro()) {
        return Err(Error::Invalid(
            "stein_solve needs a symmetric right-hand side".into(),
        ));
    }
    let rho = spectral_radius_bound(a);
    if rho >= T::one() - T::CIRCLE_TOL {
        return Err(Error::MarginallyStable {
            radius: rho.as_f64(),
        });
    }
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..100 {
        let update = ak.matmul(&x).matmul(&ak.transpose());
        x = x.add(&update);
        if update.norm_fro() <= T::STEIN_TOL * T::one().max(x.norm_fro()) {
            break;
        }
        ak = ak.matmul(&ak);
    }
    let two = T::one() + T::one();
    Ok(x.add(&x.transpose()).scale(T::one() / two))
}

/// Squared H2 norm `(1/2pi) int |f(e^{j theta})|^2 d theta` of a strictly
/// stable proper function, by the Schur-Cohn reflection recursion on the
/// coefficients. Unlike a companion realization this stays accurate when
/// the numerator has large coefficients of alternating sign.
pub fn h2_norm_sq<T: Scalar>(f: &RationalFunction<T>) -> Result<T> {
    if f.is_zero() {
        return Ok(T::zero());
    }
    let cls = f.classify()?;
    if !cls.proper {
        return Err(Error::Improper("H2 norm of a non-causal function".into()));
    }
    match cls.stable {
        Verdict::Yes => {}
        Verdict::Marginal => return Err(Error::Unstable("pole on the unit circle".into())),
        Verdict::No => return Err(Error::Unstable("pole outside the unit circle".into())),
    }
    let n = f.num().coeffs().len().max(f.den().coeffs().len()) - 1;
    let mut a: Vec<T> = (0..=n).map(|i| f.den().coeff(i)).collect();
    let mut b: Vec<T> = (0..=n).map(|i| f.num().coeff(i)).collect();
    let a0 = a[0];
    let mut sum = T::zero();
    for k in (1..=n).rev() {
        let alpha = a[k] / a[0];
        let beta = b[k] / a[0];
        sum += a[0] * beta * beta;
        let (na, nb): (Vec<T>, Vec<T>) = (0..k)
            .map(|i| (a[i] - alpha * a[k - i], b[i] - beta * a[k - i]))
            .unzip();
        if !(na[0] * a[0] > T::zero()) {
            return Err(Error::Unstable(
                "reflection recursion met a pole on or outside the unit circle".into(),
            ));
        }
        a = na;
        b = nb;
    }
    let beta = b[0] / a[0];
    sum += a[0] * beta * beta;
    Ok(sum / a0)
}

/// `C X Cᵀ + D²` with `X` the controllability Gramian of the companion
/// realization. Same value as [`h2_norm_sq`], less accurate on high-order
/// closed loops.
pub fn h2_norm_sq_gramian<T: Scalar>(f: &RationalFunction<T>) -> Result<T> {
    if f.is_zero() {
        return Ok(T::zero());
    }
    let s = realize(f)?;
    if s.order() == 0 {
        return Ok(s.d * s.d);
    }
    let x = stein_solve(&s.a, &s.b.matmul(&s.b.transpose()))?;
    Ok(s.c.matmul(&x).matmul(&s.c.transpose())[(0, 0)] + s.d * s.d)
}

/// Balanced realization of the inner function
/// `prod (z - l) / (1 - conj(l) z)` over the given poles, built as a cascade
/// of first-order sections for real poles and balanced second-order sections
/// for conjugate pairs.
pub fn balanced_inner<T: Scalar>(poles: &RootSet<T>) -> Result<StateSpace<T>> {
    let mut sys = StateSpace::gain(T::one());
    for (l, m, loc) in poles.iter() {
        if loc != RootLocation::Outside {
            return Err(Error::Precondition(format!(
                "inner factor needs poles outside the unit circle, got {l}"
            )));
        }
        if l.im < T::zero() {
            if !poles.roots().iter().any(|r| *r == l.conj()) {
                return Err(Error::Precondition(format!(
                    "pole set not closed under conjugation at {l}"
                )));
            }
            continue;
        }
        let section = if l.im.is_zero() {
            first_order_inner(l.re)
        } else {
            second_order_inner(l)?
        };
        for _ in 0..m {
            sys = sys.series(&section);
        }
    }
    Ok(sys)
}

/// `(z - l)/(1 - l z)` with `A = 1/l`, `B = C = sqrt(l^2 - 1)/l`, `D = -1/l`.
pub fn first_order_inner<T: Scalar>(l: T) -> StateSpace<T> {
    let s = (l * l - T::one()).sqrt() / l;
    StateSpace {
        a: Matrix::from_vec(1, 1, vec![T::one() / l]),
        b: Matrix::from_vec(1, 1, vec![s]),
        c: Matrix::from_vec(1, 1, vec![s]),
        d: -T::one() / l,
    }
}

fn second_order_inner<T: Scalar>(l: num_complex::Complex<T>) -> Result<StateSpace<T>> {
    let two = T::one() + T::one();
    let num = Polynomial::new(vec![T::one(), -two * l.re, l.norm_sqr()]);
    let den = Polynomial::new(vec![l.norm_sqr(), -two * l.re, T::one()]);
    let s = realize(&RationalFunction::unreduced(num, den)?)?;
    let p = stein_solve(&s.a, &s.b.matmul(&s.b.transpose()))?;
    let chol = p.cholesky()?;
    s.similarity(&chol)
}

/// `(A - B D^{-1} C, -B D^{-1}, D^{-1} C, D^{-1})`
pub fn inverse_realization<T: Scalar>(s: &StateSpace<T>) -> Result<StateSpace<T>> {
    if s.d.abs() <= T::epsilon() {
        return Err(Error::Precondition(
            "inverse realization needs D != 0".into(),
        ));
    }
    let di = T::one() / s.d;
    Ok(StateSpace {
        a: s.a.sub(&s.b.matmul(&s.c).scale(di)),
        b: s.b.scale(-di),
        c: s.c.scale(di),
        d: di,
    })
}

/// `num(M) den(M)^{-1}` with `num`, `den` the z-polynomials of `f`.
pub fn ratfn_of_matrix<T: Scalar>(f: &RationalFunction<T>, m: &Matrix<T>) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::Invalid("matrix argument must be square".into()));
    }
    let n = m.rows();
    let top = f.num().coeffs().len().max(f.den().coeffs().len());
    let horner = |p: &Polynomial<T>| {
        let mut r = Matrix::zeros(n, n);
        for k in 0..top {
            r = r.matmul(m).add(&Matrix::identity(n).scale(p.coeff(k)));
        }
        r
    };
    let num = horner(f.num());
    let den = horner(f.den());
    if n == 0 {
        return Ok(num);
    }
    den.solve(&num)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::Polynomial;

    type R = RationalFunction<f64>;
    type M = Matrix<f64>;

    fn w52() -> R {
        R::from_z_coeffs(&[0.8856, -0.8856 * 0.425], &[1.0, 0.3333]).unwrap()
    }

    fn matches(s: &StateSpace<f64>, f: &R) -> bool {
        (0..20).all(|k| {
            let z = Complex::from_polar(1.1, 0.31 * k as f64);
            (s.eval_z(z) - f.eval_z(z)).norm() <= 1e-8 * f.eval_z(z).norm().max(1e-300)
        })
    }

    #[test]
    fn realize_examples() {
        let f = R::from_z_coeffs(&[1.0], &[1.0, -0.5]).unwrap();
        let s = realize(&f).unwrap();
        assert_eq!(s.a, M::from_vec(1, 1, vec![0.5]));
        assert!(matches(&s, &f));
        let c = realize(&R::constant(2.5)).unwrap();
        assert_eq!(c.order(), 0);
        assert_eq!(c.d, 2.5);
        let w = realize(&w52()).unwrap();
        assert_eq!(w.order(), 1);
        assert!((w.a[(0, 0)] + 0.3333).abs() < 1e-15);
        assert!(matches(&w, &w52()));
        assert!(realize(&R::advance(1)).is_err());
    }

    #[test]
    fn stein_examples() {
        let x = stein_solve(&M::from_vec(1, 1, vec![0.5]), &M::from_vec(1, 1, vec![1.0])).unwrap();
        assert!((x[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        let q = M::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(stein_solve(&M::zeros(2, 2), &q).unwrap(), q);
        let err = stein_solve(&M::from_vec(1, 1, vec![1.0]), &M::identity(1));
        assert!(matches!(err, Err(Error::MarginallyStable { .. })));
    }

    #[test]
    fn spectral_radius_of_nonnormal() {
        let a = M::from_rows(&[vec![0.9, 50.0], vec![0.0, -0.3]]);
        let r = spectral_radius_bound(&a);
        assert!((r - 0.9).abs() < 1e-8, "{r}");
    }

    #[test]
    fn h2_examples() {
        assert!((h2_norm_sq(&R::delay(1)).unwrap() - 1.0).abs() < 1e-15);
        let f = R::new(Polynomial::one(), Polynomial::new(vec![1.0, -0.5])).unwrap();
        assert!((h2_norm_sq(&f).unwrap() - 4.0 / 3.0).abs() < 1e-13);
        let unstable = R::new(Polynomial::one(), Polynomial::new(vec![1.0, -2.0])).unwrap();
        assert!(matches!(h2_norm_sq(&unstable), Err(Error::Unstable(_))));
        let g = R::from_z_coeffs(&[0.3, -1.0, 0.5], &[1.0, -1.2, 0.72]).unwrap();
        let (a, b) = (h2_norm_sq(&g).unwrap(), h2_norm_sq_gramian(&g).unwrap());
        assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
        assert_eq!(h2_norm_sq_gramian(&R::constant(-2.0)).unwrap(), 4.0);
    }

    #[test]
    fn inner_for_worked_poles() {
        let s = balanced_inner(&RootSet::<f64>::from_real(&[1.1, 1.2])).unwrap();
        assert_eq!(s.order(), 2);
        assert!((s.d.abs() - 1.0 / 1.32).abs() < 1e-15);
        assert!((s.d.abs() - 0.7576).abs() < 5e-5);
        let g = s.composite();
        assert!(g.matmul(&g.transpose()).max_abs_diff(&M::identity(3)) < 1e-14);
        let inv = inverse_realization(&s).unwrap();
        let ait = s.a.inverse().unwrap().transpose();
        assert!(inv.a.max_abs_diff(&ait) < 1e-12);
    }

    #[test]
    fn inner_first_order_section() {
        let s = balanced_inner(&RootSet::<f64>::from_real(&[-1.7])).unwrap();
        let f = R::from_z_coeffs(&[1.0, 1.7], &[1.7, 1.0]).unwrap();
        assert!(matches(&s, &f));
        assert_eq!(s, first_order_inner(-1.7));
    }

    #[test]
    fn inner_complex_pair() {
        let l = Complex::new(0.6, 1.1);
        let s = balanced_inner(&RootSet::from_roots(vec![l, l.conj()])).unwrap();
        let g = s.composite();
        assert!(g.matmul(&g.transpose()).max_abs_diff(&M::identity(3)) < 1e-10);
        for k in 0..64 {
            let z = Complex::from_polar(1.0, 0.1 * k as f64);
            assert!((s.eval_z(z).norm() - 1.0).abs() < 1e-10);
            let expect = (z - l) * (z - l.conj()) / ((1.0 - l.conj() * z) * (1.0 - l * z));
            assert!((s.eval_z(z) - expect).norm() < 1e-10);
        }
        assert!((s.d.abs() - 1.0 / l.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn inner_rejects_stable_pole() {
        assert!(balanced_inner(&RootSet::from_real(&[0.5])).is_err());
        assert_eq!(
            balanced_inner(&RootSet::<f64>::empty()).unwrap(),
            StateSpace::gain(1.0)
        );
    }

    #[test]
    fn inverse_examples() {
        let s = StateSpace::new(
            M::from_vec(1, 1, vec![0.5]),
            M::identity(1),
            M::identity(1),
            2.0,
        )
        .unwrap();
        let i = inverse_realization(&s).unwrap();
        assert_eq!(
            (i.a[(0, 0)], i.b[(0, 0)], i.c[(0, 0)], i.d),
            (0.0, -0.5, 0.5, 0.5)
        );
        let cascade = s.series(&i);
        for k in 0..10 {
            let z = Complex::from_polar(1.3, k as f64);
            assert!((cascade.eval_z(z) - 1.0).norm() < 1e-9);
        }
        let id = StateSpace::gain(1.0);
        assert_eq!(inverse_realization(&id).unwrap(), id);
        assert!(inverse_realization(&StateSpace::gain(0.0)).is_err());
    }

    #[test]
    fn matrix_argument() {
        let m = M::from_rows(&[vec![0.3, 1.0], vec![0.0, 2.0]]);
        assert_eq!(
            ratfn_of_matrix(&R::constant(3.0), &m).unwrap(),
            M::identity(2).scale(3.0)
        );
        let w = w52();
        let one = ratfn_of_matrix(&w, &M::from_vec(1, 1, vec![1.1])).unwrap();
        assert!((one[(0, 0)] - w.eval_z(Complex::new(1.1, 0.0)).re).abs() < 1e-14);
        // W at a matrix that has -0.3333 as an eigenvalue is refused
        let bad = M::from_vec(1, 1, vec![-0.3333]);
        assert!(matches!(
            ratfn_of_matrix(&w, &bad),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn transfer_coefficients_round_trip() {
        let f = R::from_z_coeffs(&[0.5, -0.1, 0.3], &[1.0, -0.4, 0.2, 0.1]).unwrap();
        let g = realize(&f).unwrap().to_ratfn().unwrap();
        for k in 0..10 {
            let z = Complex::from_polar(0.9, k as f64);
            assert!((f.eval_z(z) - g.eval_z(z)).norm() < 1e-12);
        }
    }

    #[test]
    fn single_precision_h2() {
        let f = RationalFunction::<f32>::new(Polynomial::one(), Polynomial::new(vec![1.0, -0.5]))
            .unwrap();
        assert!((h2_norm_sq(&f).unwrap() - 4.0 / 3.0).abs() < 1e-5);
    }
}
