//! Mean-square stabilizability and H2-optimal controller synthesis through
//! the Youla parameterization.

use num_complex::Complex;
use serde::Serialize;

use crate::analysis::{ms_stability, NetworkModel};
use crate::error::{Error, Result};
use crate::linalg::{
    balanced_inner, inverse_realization, ratfn_of_matrix, stein_solve, Matrix, StateSpace,
};
use crate::ratfun::{Polynomial, RationalFunction, RootLocation, RootSet, Verdict};
use crate::scalar::Scalar;

const BEZOUT_SAMPLES: usize = 64;

/// Coprime factors `HP = N / M` with `M X + N Y = 1`, `M` inner.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoprimePair<T> {
    pub n: RationalFunction<T>,
    pub m: RationalFunction<T>,
    pub x: RationalFunction<T>,
    pub y: RationalFunction<T>,
}

impl<T: Scalar> CoprimePair<T> {
    /// Largest `|M X + N Y - 1|` over `samples` equispaced points of the
    /// unit circle.
    pub fn bezout_residual(&self, samples: usize) -> T {
        unit_circle(samples)
            .map(|z| {
                let v = self.m.eval_z(z) * self.x.eval_z(z) + self.n.eval_z(z) * self.y.eval_z(z);
                (v - T::one()).norm()
            })
            .fold(T::zero(), T::max)
    }

    /// Largest deviation of `|M|` from one on the unit circle.
    pub fn inner_defect(&self, samples: usize) -> T {
        unit_circle(samples)
            .map(|z| (self.m.eval_z(z).norm() - T::one()).abs())
            .fold(T::zero(), T::max)
    }
}

fn unit_circle<T: Scalar>(samples: usize) -> impl Iterator<Item = Complex<T>> {
    let step = T::TAU() / T::from_usize(samples.max(1)).unwrap();
    (0..samples).map(move |k| Complex::from_polar(T::one(), step * T::from_usize(k).unwrap()))
}

fn unstable_poles<T: Scalar>(f: &RationalFunction<T>) -> Result<RootSet<T>> {
    let poles = f.poles()?;
    if let Some((p, _, _)) = poles.iter().find(|(_, _, l)| *l == RootLocation::OnCircle) {
        return Err(Error::Precondition(format!(
            "pole on the unit circle at {p}"
        )));
    }
    Ok(poles.outside())
}

/// Coprime factorization of a strictly proper `HP` with an inner `M`
/// carrying exactly the unstable poles.
///
/// With `HP = b/a` in `q = z^{-1}` and `a = a_u a_s`, `a_u = prod (1 - l q)`,
/// the factors are `M = a_u / rev(a_u)`, `N = b / (a_s rev(a_u))`,
/// `Y = y` and `X = (a_s rev(a_u) - b y) / (a_u a_s)`, where the polynomial
/// `y` of degree below `deg a_u` solves `b y = a_s rev(a_u)` modulo `a_u`.
pub fn coprime_factorize<T: Scalar>(hp: &RationalFunction<T>) -> Result<CoprimePair<T>> {
    if hp.is_zero() {
        return Err(Error::Invalid("cannot factorize the zero function".into()));
    }
    if !hp.is_strictly_proper() {
        return Err(Error::Improper(
            "coprime factorization needs a strictly proper HP".into(),
        ));
    }
    let (b, a) = (hp.num(), hp.den());
    let unstable = unstable_poles(hp)?;
    if unstable.is_empty() {
        return Ok(CoprimePair {
            n: hp.clone(),
            m: RationalFunction::one(),
            x: RationalFunction::one(),
            y: RationalFunction::zero(),
        });
    }
    let a_u = Polynomial::from_z_roots(T::one(), &unstable.expanded());
    let n = a_u.degree().unwrap_or(0);
    let a_u_rev = Polynomial::new(a_u.coeffs().iter().rev().copied().collect());
    for (l, _, _) in unstable.iter() {
        let v = b.eval_z(l).norm();
        if v <= T::CANCEL_TOL
            * b.max_abs()
            * T::one().max(l.norm().powi(b.degree().unwrap_or(0) as i32))
        {
            return Err(Error::UnstableCancellation(format!("{l}")));
        }
    }
    let a_s = a.deflate(&a_u, false);
    let rhs = (&a_s * &a_u_rev).rem(&a_u);
    let sys = Matrix::from_fn(n, n, |i, k| {
        (b * &Polynomial::monomial(k, T::one())).rem(&a_u).coeff(i)
    });
    let y = sys.solve(&Matrix::column(
        &(0..n).map(|i| rhs.coeff(i)).collect::<Vec<_>>(),
    ))?;
    let y = Polynomial::new(y.data().to_vec());
    let c_x = (&(&a_s * &a_u_rev) - &(b * &y)).deflate(&a_u, false);
    let pair = CoprimePair {
        n: RationalFunction::new(b.clone(), &a_s * &a_u_rev)?,
        m: RationalFunction::new(a_u.clone(), a_u_rev)?,
        x: RationalFunction::new(c_x, a_s)?,
        y: RationalFunction::from_poly(y),
    };
    check_pair(&pair)?;
    Ok(pair)
}

fn check_pair<T: Scalar>(pair: &CoprimePair<T>) -> Result<()> {
    let res = pair.bezout_residual(BEZOUT_SAMPLES);
    if !(res <= T::BEZOUT_TOL) {
        return Err(Error::Consistency(format!(
            "Bezout residual {res} exceeds {}",
            T::BEZOUT_TOL
        )));
    }
    let inner = pair.inner_defect(BEZOUT_SAMPLES);
    if !(inner <= T::CIRCLE_TOL) {
        return Err(Error::Consistency(format!(
            "|M| deviates from one by {inner}"
        )));
    }
    for (name, f) in [
        ("N", &pair.n),
        ("M", &pair.m),
        ("X", &pair.x),
        ("Y", &pair.y),
    ] {
        let c = f.classify()?;
        if c.stable != Verdict::Yes || !c.proper {
            return Err(Error::Consistency(format!(
                "coprime factor {name} is not stable and proper"
            )));
        }
    }
    Ok(())
}

/// The first `tau` coefficients of the causal expansion of the inverse of
/// the inner function realized by `m_in`, as a polynomial in `z^{-1}`.
pub fn inner_truncation<T: Scalar>(m_in: &StateSpace<T>, tau: usize) -> Result<Polynomial<T>> {
    let inv = inverse_realization(m_in)?;
    Ok(Polynomial::new(inv.markov(tau)))
}

/// `W(A^{-1}) A^{-(tau-1)} C^T / D` for the balanced inner realization; the
/// index is its squared length.
fn index_vector<T: Scalar>(
    inner: &StateSpace<T>,
    w: &RationalFunction<T>,
    tau: usize,
) -> Result<Matrix<T>> {
    let a_inv = inner.a.inverse()?;
    let wa = ratfn_of_matrix(w, &a_inv).map_err(|e| match e {
        Error::Singular { .. } => {
            Error::Precondition("a pole of W coincides with an unstable plant pole".into())
        }
        e => e,
    })?;
    let mut v = wa.matmul(&inner.c.transpose()).scale(T::one() / inner.d);
    for _ in 1..tau {
        v = inner.a.solve(&v)?;
    }
    Ok(v)
}

fn check_index_inputs<T: Scalar>(
    poles: &RootSet<T>,
    w: &RationalFunction<T>,
    tau: usize,
) -> Result<()> {
    if tau == 0 {
        return Err(Error::Precondition(
            "relative degree must be at least one".into(),
        ));
    }
    if !poles.all(RootLocation::Outside) {
        return Err(Error::Precondition(
            "unstable poles must lie strictly outside the unit circle".into(),
        ));
    }
    if !w.is_zero() && !w.poles()?.all(RootLocation::Inside) {
        return Err(Error::Precondition("W must be stable".into()));
    }
    Ok(())
}

/// Infimum of `||W T||_2^2` over all stabilizing controllers for a plant
/// with the given unstable poles and relative degree `tau`.
///
/// `W` may be improper by `k` steps when `tau > k`; the expression is
/// unchanged by moving powers of `z` between `W` and the delay.
pub fn stabilizability_index<T: Scalar>(
    poles: &RootSet<T>,
    w: &RationalFunction<T>,
    tau: usize,
) -> Result<T> {
    check_index_inputs(poles, w, tau)?;
    if poles.is_empty() || w.is_zero() {
        return Ok(T::zero());
    }
    let inner = balanced_inner(poles)?;
    let v = index_vector(&inner, w, tau)?;
    Ok(v.data().iter().map(|&x| x * x).sum())
}

/// Anti-causal remainder of the optimal model-matching problem, realized in
/// the advance variable: with `s = z`, `Z2 = C (s^{-1} I - A)^{-1} B` where
/// the returned system is `(A, B, C, 0)`. Its Markov parameters
/// `0, z2(1), z2(2), ...` are the coefficients of `z, z^2, ...`.
pub fn anticausal_part<T: Scalar>(
    poles: &RootSet<T>,
    w: &RationalFunction<T>,
    tau: usize,
) -> Result<StateSpace<T>> {
    check_index_inputs(poles, w, tau)?;
    if poles.is_empty() || w.is_zero() {
        return Ok(StateSpace::gain(T::zero()));
    }
    let inner = balanced_inner(poles)?;
    let at = inner.a.transpose();
    let c = index_vector(&inner, w, tau)?.transpose();
    let b = at.matmul(&inner.b).scale(T::one() / inner.d);
    StateSpace::new(at, b, c, T::zero())
}

/// `Z2` as a rational function of `z^{-1}` together with `||Z2||_2^2`.
pub fn anticausal_function<T: Scalar>(
    poles: &RootSet<T>,
    w: &RationalFunction<T>,
    tau: usize,
) -> Result<(RationalFunction<T>, T)> {
    let ss = anticausal_part(poles, w, tau)?;
    if ss.order() == 0 {
        return Ok((RationalFunction::zero(), T::zero()));
    }
    let (num, den) = ss.transfer_coeffs();
    let f = RationalFunction::new(
        Polynomial::new(num.into_iter().rev().collect()),
        Polynomial::new(den.into_iter().rev().collect()),
    )?;
    let x = stein_solve(&ss.a, &ss.b.matmul(&ss.b.transpose()))?;
    let norm = ss.c.matmul(&x).matmul(&ss.c.transpose())[(0, 0)];
    Ok((f, norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DropoutCorollary<T> {
    pub stabilizable: bool,
    /// Largest tolerable dropout probability `prod |l|^{-2}`.
    pub threshold: T,
}

/// Closed-form verdict for a pure dropout channel with loss probability `p`
/// and a plant of relative degree one.
pub fn corollary_dropout<T: Scalar>(p: T, poles: &RootSet<T>) -> DropoutCorollary<T> {
    let threshold = T::one() / poles.product_norm_sqr();
    DropoutCorollary {
        stabilizable: p < threshold,
        threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SinglePoleCorollary<T> {
    pub stabilizable: bool,
    /// `(l^2 - 1) W(l)^2`
    pub lhs: T,
}

/// Closed-form index for one real unstable pole and relative degree one.
pub fn corollary_single_pole<T: Scalar>(
    lambda: T,
    w: &RationalFunction<T>,
) -> SinglePoleCorollary<T> {
    let wl = w.eval_z(Complex::new(lambda, T::zero())).re;
    let lhs = (lambda * lambda - T::one()) * wl * wl;
    SinglePoleCorollary {
        stabilizable: lhs < T::one(),
        lhs,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CorollaryChecks<T> {
    pub dropout: Option<DropoutCorollary<T>>,
    pub single_pole: Option<SinglePoleCorollary<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizabilityReport<T: Scalar> {
    pub index: T,
    pub stabilizable: bool,
    pub unstable_poles: RootSet<T>,
    /// Relative degree of `HP`.
    pub relative_degree_tau: usize,
    /// Largest channel delay.
    pub delay_bound: usize,
    pub corollary_checks: CorollaryChecks<T>,
    /// Complex unstable poles go beyond the real-pole cases the method is
    /// usually illustrated with.
    pub beyond_worked_cases: bool,
    pub warnings: Vec<String>,
}

/// Loss probability when the receiver only ever uses undelayed packets.
fn dropout_probability<T: Scalar>(model: &NetworkModel<T>) -> Option<T> {
    let ch = model.channel();
    if ch.weights()[1..].iter().all(|a| a.is_zero()) && !ch.weights()[0].is_zero() {
        Some(T::one() - ch.pmf()[0])
    } else {
        None
    }
}

/// Stabilizability index, verdict and closed-form checks for a network model.
pub fn analyze_stabilizability<T: Scalar>(
    model: &NetworkModel<T>,
) -> Result<StabilizabilityReport<T>> {
    let stats = model.stats()?;
    let plant = model.plant();
    if !plant.zeros()?.all(RootLocation::Inside) {
        return Err(Error::Precondition(
            "the plant must be minimum phase".into(),
        ));
    }
    if !model.mean_channel().zeros()?.all(RootLocation::Inside) {
        return Err(Error::Precondition(
            "the mean channel must be minimum phase".into(),
        ));
    }
    let hp = model.hp()?;
    let mut warnings = stats.warnings.clone();
    let tau = usize::try_from(hp.relative_degree())
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| Error::Precondition("H P must be strictly proper".into()))?;
    if hp.relative_degree() != plant.relative_degree() {
        warnings.push(format!(
            "relative degree of H P ({}) differs from that of P ({}); using {}",
            hp.relative_degree(),
            plant.relative_degree(),
            tau
        ));
    }
    let poles = unstable_poles(&hp)?;
    let index = stabilizability_index(&poles, &stats.w, tau)?;
    let mut checks = CorollaryChecks::default();
    if tau == 1 {
        if let Some(p) = dropout_probability(model) {
            checks.dropout = Some(corollary_dropout(p, &poles));
        }
        if poles.degree() == 1 {
            checks.single_pole = Some(corollary_single_pole(poles.roots()[0].re, &stats.w));
        }
    }
    Ok(StabilizabilityReport {
        index,
        stabilizable: index < T::one(),
        beyond_worked_cases: !poles.is_real(),
        unstable_poles: poles,
        relative_degree_tau: tau,
        delay_bound: model.channel().delay_bound(),
        corollary_checks: checks,
        warnings,
    })
}

/// `K = -(Y + M Q) / (X - N Q)`
pub fn youla_controller<T: Scalar>(
    pair: &CoprimePair<T>,
    q: &RationalFunction<T>,
) -> Result<RationalFunction<T>> {
    let den = pair.x.sub(&pair.n.mul(q)?)?;
    if den.is_zero() {
        return Err(Error::DegenerateLoop);
    }
    pair.y.add(&pair.m.mul(q)?)?.div(&den).map(|k| k.neg())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SynthesisResult<T: Scalar> {
    pub q_opt: RationalFunction<T>,
    pub k_opt: RationalFunction<T>,
    pub achieved_margin: T,
    pub z2_norm_sq: T,
    pub index: T,
    pub relative_degree_tau: usize,
    pub pair: CoprimePair<T>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> SynthesisResult<T> {
    /// `||W N Qt||_2^2`: the optimal margin grows by `kappa^2` times this
    /// under the perturbation `Q_opt + kappa Qt`, the cross term vanishing
    /// by optimality.
    pub fn perturbation_gain(
        &self,
        w: &RationalFunction<T>,
        qt: &RationalFunction<T>,
    ) -> Result<T> {
        crate::linalg::h2_norm_sq(&w.mul(&self.pair.n)?.mul(qt)?)
    }

    /// Controller for the Youla parameter `Q_opt + kappa Qt`.
    pub fn perturbed_controller(
        &self,
        qt: &RationalFunction<T>,
        kappa: T,
    ) -> Result<RationalFunction<T>> {
        youla_controller(&self.pair, &self.q_opt.add(&qt.scale(kappa))?)
    }

    /// `kappa >= 0` that raises the margin to `target`, from the quadratic
    /// dependence of the margin on `kappa`.
    pub fn kappa_for_margin(
        &self,
        w: &RationalFunction<T>,
        qt: &RationalFunction<T>,
        target: T,
    ) -> Result<T> {
        if target < self.index {
            return Err(Error::Invalid(format!(
                "target margin {target} is below the index {}",
                self.index
            )));
        }
        let gain = self.perturbation_gain(w, qt)?;
        if !(gain > T::zero()) {
            return Err(Error::Invalid(
                "perturbation does not change the margin".into(),
            ));
        }
        Ok(((target - self.index) / gain).sqrt())
    }
}

fn stable_and_proper<T: Scalar>(f: &RationalFunction<T>) -> Result<bool> {
    let c = f.classify()?;
    Ok(c.stable == Verdict::Yes && c.proper)
}

/// H2-optimal mean-square stabilizing controller.
pub fn synthesize<T: Scalar>(model: &NetworkModel<T>) -> Result<SynthesisResult<T>> {
    let report = analyze_stabilizability(model)?;
    if !report.stabilizable {
        return Err(Error::NotStabilizable {
            index: report.index.as_f64(),
        });
    }
    let w = &model.stats()?.w;
    let tau = report.relative_degree_tau;
    let pair = coprime_factorize(&model.hp()?)?;
    let q_opt = if w.is_zero() {
        RationalFunction::zero()
    } else {
        if !w.zeros()?.all(RootLocation::Inside) {
            return Err(Error::Precondition(
                "the spectral factor must be strictly minimum phase".into(),
            ));
        }
        let inner = balanced_inner(&report.unstable_poles)?;
        let m_hat = RationalFunction::from_poly(inner_truncation(&inner, tau)?);
        let (z2, _) = anticausal_function(&report.unstable_poles, w, tau)?;
        let f = w
            .mul(&pair.m.inv()?.sub(&m_hat)?)?
            .mul(&RationalFunction::advance(tau))?;
        let z1 = f.sub(&z2)?;
        if !stable_and_proper(&z1)? {
            return Err(Error::Consistency(format!(
                "causal part Z1 is not stable and proper: {z1:?}"
            )));
        }
        let inner_term = w.inv()?.mul(&z1)?.mul(&RationalFunction::delay(tau))?;
        pair.x.sub(&m_hat)?.sub(&inner_term)?.mul(&pair.n.inv()?)?
    };
    if !stable_and_proper(&q_opt)? {
        return Err(Error::Consistency(format!(
            "optimal Youla parameter is not stable and proper: {q_opt:?}"
        )));
    }
    let k_opt = youla_controller(&pair, &q_opt)?;
    let stab = ms_stability(&model.with_controller(k_opt.clone()))?;
    let achieved = stab.ms_margin.ok_or_else(|| {
        Error::Consistency("synthesized controller does not stabilize the nominal loop".into())
    })?;
    let (_, z2_norm) = anticausal_function(&report.unstable_poles, w, tau)?;
    Ok(SynthesisResult {
        q_opt,
        k_opt,
        achieved_margin: achieved,
        z2_norm_sq: z2_norm,
        index: report.index,
        relative_degree_tau: tau,
        pair,
        warnings: report.warnings,
    })
}
