//! Statistics of the random-delay channel seen through a linear receiver.
//!
//! A packet sent at time `n` arrives after `tau_n` steps, `tau_n` i.i.d. with
//! PMF `p_0..p_N`. At every step the receiver combines whatever arrived,
//! weighting a packet of age `i` by `alpha_i`.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratfun::{Polynomial, RationalFunction, RootLocation};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelSpec<T> {
    pmf: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> ChannelSpec<T> {
    /// Validates and renormalizes the PMF. Probabilities must sum to one
    /// within 1e-12 before the exact renormalization.
    pub fn new(pmf: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::Invalid("channel.pmf must not be empty".into()));
        }
        if pmf.len() != weights.len() {
            return Err(Error::Invalid(format!(
                "channel.pmf has {} entries but channel.weights has {}",
                pmf.len(),
                weights.len()
            )));
        }
        for (i, &p) in pmf.iter().enumerate() {
            if !p.is_finite() || p < T::zero() || p > T::one() {
                return Err(Error::Invalid(format!(
                    "channel.pmf[{i}] = {p} is not a probability"
                )));
            }
        }
        if let Some((i, a)) = weights.iter().enumerate().find(|(_, a)| !a.is_finite()) {
            return Err(Error::Invalid(format!(
                "channel.weights[{i}] = {a} is not finite"
            )));
        }
        let sum: T = pmf.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize(4 * pmf.len()).unwrap());
        if (sum - T::one()).abs() > tol {
            return Err(Error::Invalid(format!("channel.pmf sums to {sum}, not 1")));
        }
        let pmf = pmf.into_iter().map(|p| p / sum).collect();
        Ok(Self { pmf, weights })
    }

    /// Every packet arrives immediately and is used as is.
    pub fn perfect() -> Self {
        Self {
            pmf: vec![T::one()],
            weights: vec![T::one()],
        }
    }

    /// Packets are either used on arrival or lost with probability `p`.
    pub fn dropout(p: T) -> Result<Self> {
        Self::new(vec![T::one() - p, p], vec![T::one(), T::zero()])
    }

    pub fn pmf(&self) -> &[T] {
        &self.pmf
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Largest possible delay.
    pub fn delay_bound(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn scaled_weights(&self, c: T) -> Self {
        Self {
            pmf: self.pmf.clone(),
            weights: self.weights.iter().map(|&a| a * c).collect(),
        }
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let last = self.delay_bound();
        if last > 0 && !self.weights[last].is_zero() {
            w.push(format!(
                "weight of the largest delay ({last}) is {}; packets at the delay bound are usually discarded",
                self.weights[last]
            ));
        }
        w
    }
}

/// Mean channel `H = sum alpha_i p_i z^{-i}`.
pub fn mean_channel<T: Scalar>(spec: &ChannelSpec<T>) -> Result<RationalFunction<T>> {
    let h = Polynomial::new(
        spec.weights
            .iter()
            .zip(&spec.pmf)
            .map(|(&a, &p)| a * p)
            .collect(),
    );
    if h.is_zero() {
        return Err(Error::ZeroMeanChannel);
    }
    Ok(RationalFunction::from_poly(h))
}

/// Autocorrelation `r(0..=N)` of the zero-mean channel uncertainty.
pub fn autocorrelation<T: Scalar>(spec: &ChannelSpec<T>) -> Vec<T> {
    let (a, p) = (&spec.weights, &spec.pmf);
    let n = p.len();
    (0..n)
        .map(|l| {
            if l == 0 {
                (0..n).map(|i| a[i] * a[i] * p[i] * (T::one() - p[i])).sum()
            } else {
                T::zero()
                    - (0..n - l)
                        .map(|i| a[i] * a[i + l] * p[i] * p[i + l])
                        .sum::<T>()
            }
        })
        .collect()
}

/// Energy spectral density `S(z) = sum_l r(l) z^{-l}` stored by its
/// one-sided autocorrelation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralDensity<T> {
    r: Vec<T>,
}

impl<T: Scalar> SpectralDensity<T> {
    pub fn from_autocorrelation(r: Vec<T>) -> Self {
        Self { r }
    }

    /// Accepts a two-sided coefficient list (`z^m` first) and checks symmetry.
    pub fn from_laurent(coeffs: &[T]) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::Invalid(
                "Laurent coefficient list must have odd length".into(),
            ));
        }
        let m = coeffs.len() / 2;
        for l in 1..=m {
            let (a, b) = (coeffs[m - l], coeffs[m + l]);
            if (a - b).abs() > T::lit(1e-12) * (T::one() + a.abs()) {
                return Err(Error::Invalid(format!(
                    "spectral density not symmetric at lag {l}"
                )));
            }
        }
        Ok(Self {
            r: coeffs[m..].to_vec(),
        })
    }

    pub fn autocorrelation(&self) -> &[T] {
        &self.r
    }

    /// Coefficients of `z^m, ..., z^0, ..., z^{-m}`.
    pub fn laurent(&self) -> Vec<T> {
        let mut v: Vec<T> = self.r.iter().rev().copied().collect();
        v.extend(self.r.iter().skip(1).copied());
        v
    }

    /// `S(e^{j theta})`, real by symmetry.
    pub fn eval(&self, theta: T) -> T {
        let two = T::one() + T::one();
        self.r.iter().enumerate().fold(T::zero(), |acc, (l, &r)| {
            if l == 0 {
                acc + r
            } else {
                acc + two * r * (T::from_usize(l).unwrap() * theta).cos()
            }
        })
    }
}

pub fn spectral_density<T: Scalar>(spec: &ChannelSpec<T>) -> SpectralDensity<T> {
    SpectralDensity::from_autocorrelation(autocorrelation(spec))
}

/// The same density from the pairwise form
/// `1/2 sum_{i,k} (a_i z^i - a_k z^k)(a_i z^{-i} - a_k z^{-k}) p_i p_k`,
/// returned as a two-sided list (`z^N` first).
pub fn spectral_density_pairwise<T: Scalar>(spec: &ChannelSpec<T>) -> Vec<T> {
    let (a, p) = (&spec.weights, &spec.pmf);
    let n = p.len();
    let m = n - 1;
    let half = T::one() / (T::one() + T::one());
    let mut out = vec![T::zero(); 2 * m + 1];
    // index m - e holds the coefficient of z^e
    for i in 0..n {
        for k in 0..n {
            let w = half * p[i] * p[k];
            out[m] += w * (a[i] * a[i] + a[k] * a[k]);
            let cross = w * a[i] * a[k];
            let e = i as isize - k as isize;
            out[(m as isize - e) as usize] -= cross;
            out[(m as isize + e) as usize] -= cross;
        }
    }
    out
}

const SPECTRUM_SAMPLES: usize = 1024;

/// Minimum-phase `Phi` with `Phi(z^{-1}) Phi(z) = S(z)`, by splitting the
/// reciprocal root pairs of `z^m S(z)`.
pub fn spectral_factorize<T: Scalar>(s: &SpectralDensity<T>) -> Result<Polynomial<T>> {
    let two_pi = T::PI() + T::PI();
    for k in 0..SPECTRUM_SAMPLES {
        let theta = two_pi * T::from_usize(k).unwrap() / T::from_usize(SPECTRUM_SAMPLES).unwrap();
        let v = s.eval(theta);
        if v < -T::lit(1e-10) {
            return Err(Error::NegativeSpectrum {
                theta: theta.as_f64(),
                value: v.as_f64(),
            });
        }
    }
    let scale = s.r.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    if scale.is_zero() {
        return Ok(Polynomial::zero());
    }
    let negligible = T::epsilon() * T::lit(16.0) * scale;
    let m = s.r.iter().rposition(|r| r.abs() > negligible).unwrap_or(0);
    let r0 = s.r[0];
    if m == 0 {
        return Ok(Polynomial::constant(r0.max(T::zero()).sqrt()));
    }
    let palindrome: Vec<T> = (0..=2 * m)
        .map(|j| s.r[(j as isize - m as isize).unsigned_abs()])
        .collect();
    let roots = Polynomial::new(palindrome).roots_in_z()?;
    let mut inside = Vec::with_capacity(m);
    for (rho, mult, _) in roots.iter() {
        if (rho.norm() - T::one()).abs() <= T::CLUSTER_TOL {
            return Err(Error::MarginalSpectralFactor {
                theta: rho.arg().as_f64(),
            });
        }
        if rho.norm() < T::one() {
            inside.extend(std::iter::repeat_n(rho, mult));
        }
    }
    if inside.len() != m {
        return Err(Error::Consistency(format!(
            "spectral density of degree {m} split into {} inside roots",
            inside.len()
        )));
    }
    let psi = Polynomial::from_z_roots(T::one(), &inside);
    let energy: T = psi.coeffs().iter().map(|&c| c * c).sum();
    Ok(psi.scale((r0 / energy).sqrt()))
}

/// Frequency response of variation `W = Phi / H`.
pub fn frv<T: Scalar>(spec: &ChannelSpec<T>) -> Result<RationalFunction<T>> {
    let h = mean_channel(spec)?;
    let phi = spectral_factorize(&spectral_density(spec))?;
    frv_from_parts(&h, &phi)
}

fn frv_from_parts<T: Scalar>(
    h: &RationalFunction<T>,
    phi: &Polynomial<T>,
) -> Result<RationalFunction<T>> {
    let zeros = h.zeros()?;
    if let Some((z, _, _)) = zeros.iter().find(|(_, _, l)| *l == RootLocation::OnCircle) {
        return Err(Error::MarginalMeanChannel(format!("{z}")));
    }
    if phi.is_zero() {
        return Ok(RationalFunction::zero());
    }
    RationalFunction::from_poly(phi.clone()).div(h)
}

/// Everything the analysis needs to know about a channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelStats<T> {
    pub h: RationalFunction<T>,
    pub r: Vec<T>,
    pub spectral_density: SpectralDensity<T>,
    pub phi: Polynomial<T>,
    pub w: RationalFunction<T>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> ChannelStats<T> {
    pub fn compute(spec: &ChannelSpec<T>) -> Result<Self> {
        let h = mean_channel(spec)?;
        let sd = spectral_density(spec);
        let phi = spectral_factorize(&sd)?;
        let w = frv_from_parts(&h, &phi)?;
        let mut warnings = spec.warnings();
        if !w.is_proper() {
            warnings.push(
                "alpha_0 p_0 = 0: the mean channel is strictly proper and W is improper".into(),
            );
        }
        Ok(Self {
            h,
            r: sd.autocorrelation().to_vec(),
            spectral_density: sd,
            phi,
            w,
            warnings,
        })
    }
}

/// Channel SNR factor `1/|W(e^{j theta})|^2` on `angles` points of
/// `[0, pi]`; `None` where `W` vanishes (unbounded SNR).
pub fn snr_profile<T: Scalar>(w: &RationalFunction<T>, angles: usize) -> Vec<(T, Option<T>)> {
    let step = if angles > 1 {
        T::PI() / T::from_usize(angles - 1).unwrap()
    } else {
        T::zero()
    };
    (0..angles)
        .map(|k| {
            let theta = step * T::from_usize(k).unwrap();
            let mag = w.eval_z(Complex::from_polar(T::one(), theta)).norm_sqr();
            (
                theta,
                if mag.is_zero() {
                    None
                } else {
                    Some(T::one() / mag)
                },
            )
        })
        .collect()
}
