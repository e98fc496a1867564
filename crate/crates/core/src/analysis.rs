//! Closed loop over the mean channel and the mean-square stability test.
//!
//! Loop convention: the controller output `u = K y` is sent over the
//! channel, the plant is driven by `v + u_d`, and the nominal loop is the
//! positive feedback interconnection `y = P (v + H u)`.

use num_complex::Complex;
use serde::{Serialize, Serializer};

use crate::channel::{mean_channel, ChannelSpec, ChannelStats};
use crate::error::{Error, Result};
use crate::linalg::h2_norm_sq;
use crate::ratfun::{Polynomial, RationalFunction, RootLocation};
use crate::scalar::Scalar;

/// Plant plus channel, before a controller is chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel<T> {
    plant: RationalFunction<T>,
    channel: ChannelSpec<T>,
    h: RationalFunction<T>,
    stats: std::result::Result<ChannelStats<T>, Error>,
}

impl<T: Scalar> NetworkModel<T> {
    /// Validates that the plant is strictly proper and that the mean channel
    /// and the plant share no unstable pole-zero pair.
    pub fn new(plant: RationalFunction<T>, channel: ChannelSpec<T>) -> Result<Self> {
        let m = Self::new_unchecked(plant, channel)?;
        if let Some(z) = m.unstable_cancellations()?.first() {
            return Err(Error::UnstableCancellation(format!("{z}")));
        }
        m.stats.clone()?;
        Ok(m)
    }

    /// Skips the cancellation check and tolerates channel statistics that
    /// cannot be computed (their error resurfaces from [`Self::stats`]).
    /// Useful to show what goes wrong when the checks are violated.
    pub fn new_unchecked(plant: RationalFunction<T>, channel: ChannelSpec<T>) -> Result<Self> {
        if plant.is_zero() {
            return Err(Error::Invalid("plant is identically zero".into()));
        }
        if plant.relative_degree() < 1 {
            return Err(Error::Invalid(format!(
                "plant must be strictly proper, relative degree is {}",
                plant.relative_degree()
            )));
        }
        let h = mean_channel(&channel)?;
        let stats = ChannelStats::compute(&channel);
        Ok(Self {
            plant,
            channel,
            h,
            stats,
        })
    }

    pub fn plant(&self) -> &RationalFunction<T> {
        &self.plant
    }

    pub fn channel(&self) -> &ChannelSpec<T> {
        &self.channel
    }

    pub fn mean_channel(&self) -> &RationalFunction<T> {
        &self.h
    }

    pub fn stats(&self) -> Result<&ChannelStats<T>> {
        self.stats.as_ref().map_err(Clone::clone)
    }

    /// Outside-circle roots shared by (H zeros, P poles) or (H poles, P zeros).
    pub fn unstable_cancellations(&self) -> Result<Vec<Complex<T>>> {
        let h = &self.h;
        let mut out = Vec::new();
        for (a, b) in [
            (h.zeros()?, self.plant.poles()?),
            (h.poles()?, self.plant.zeros()?),
        ] {
            for (ra, _, la) in a.iter() {
                if la != RootLocation::Outside {
                    continue;
                }
                let hit = b.iter().any(|(rb, _, lb)| {
                    lb == RootLocation::Outside
                        && (ra - rb).norm() <= T::CANCEL_TOL * ra.norm().max(rb.norm())
                });
                if hit {
                    out.push(ra);
                }
            }
        }
        Ok(out)
    }

    /// `H P`, the plant as seen by the controller.
    pub fn hp(&self) -> Result<RationalFunction<T>> {
        self.h.mul(&self.plant)
    }

    pub fn with_controller(&self, k: RationalFunction<T>) -> LoopModel<T> {
        LoopModel {
            model: self.clone(),
            controller: k,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopModel<T> {
    pub model: NetworkModel<T>,
    pub controller: RationalFunction<T>,
}

impl<T: Scalar> LoopModel<T> {
    pub fn new(
        plant: RationalFunction<T>,
        controller: RationalFunction<T>,
        channel: ChannelSpec<T>,
    ) -> Result<Self> {
        Ok(NetworkModel::new(plant, channel)?.with_controller(controller))
    }

    fn parts(&self) -> [&Polynomial<T>; 6] {
        let (h, p, k) = (&self.model.h, &self.model.plant, &self.controller);
        [h.num(), h.den(), p.num(), p.den(), k.num(), k.den()]
    }

    /// `d_H d_P d_K - n_H n_P n_K`, formed without any cancellation.
    pub fn characteristic_polynomial(&self) -> Polynomial<T> {
        let [nh, dh, np, dp, nk, dk] = self.parts();
        &(&(dh * dp) * dk) - &(&(nh * np) * nk)
    }

    fn closed_loop(&self, num: Polynomial<T>) -> Result<RationalFunction<T>> {
        let ch = self.characteristic_polynomial();
        if ch.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        RationalFunction::new(num, ch)
    }

    fn closed_loop_unreduced(&self, num: Polynomial<T>) -> Result<RationalFunction<T>> {
        let ch = self.characteristic_polynomial();
        if ch.is_zero() {
            return Err(Error::DegenerateLoop);
        }
        RationalFunction::unreduced(num, ch)
    }

    fn g_numerator(&self) -> Polynomial<T> {
        let [_, dh, np, _, nk, _] = self.parts();
        &(nk * np) * dh
    }
}

/// Nominal map `G = K P (1 - H K P)^{-1}` from the external input to `u`.
pub fn nominal_g<T: Scalar>(m: &LoopModel<T>) -> Result<RationalFunction<T>> {
    m.closed_loop(m.g_numerator())
}

/// Complementary sensitivity `T = H K P (1 - H K P)^{-1}`.
pub fn comp_sensitivity_t<T: Scalar>(m: &LoopModel<T>) -> Result<RationalFunction<T>> {
    let [nh, _, np, _, nk, _] = m.parts();
    m.closed_loop(&(nh * np) * nk)
}

/// Nominal internal stability. Every unstable cancellation between `K` and
/// `HP` leaves its root in the un-cancelled characteristic polynomial, so
/// checking that polynomial covers both conditions.
pub fn internal_stability<T: Scalar>(m: &LoopModel<T>) -> Result<bool> {
    if !m.controller.is_proper() {
        return Ok(false);
    }
    let ch = m.characteristic_polynomial();
    if ch.is_zero() || ch.coeff(0).is_zero() {
        return Ok(false);
    }
    Ok(ch.roots_in_z()?.all(RootLocation::Inside))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MsVerdict {
    MeanSquareStable,
    NotMeanSquareStable,
    NominallyUnstable,
}

/// Ratio of control power to input power, or unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerGain<T> {
    Finite(T),
    Unbounded,
}

impl<T: Scalar> PowerGain<T> {
    pub fn finite(&self) -> Option<T> {
        match *self {
            Self::Finite(v) => Some(v),
            Self::Unbounded => None,
        }
    }
}

impl<T: Serialize> Serialize for PowerGain<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => v.serialize(s),
            Self::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport<T> {
    pub internally_stable: bool,
    /// `||W T||_2^2`; absent when the nominal loop is unstable.
    pub ms_margin: Option<T>,
    pub verdict: MsVerdict,
    /// `||G||_2^2 / (1 - margin)` for unit-variance white input.
    pub predicted_power_gain: PowerGain<T>,
    pub g_norm_sq: Option<T>,
}

/// Mean-square input-output stability verdict for a given controller.
///
/// The margin is evaluated as `||Phi G||_2^2`, which equals `||W T||_2^2`
/// because `W T = (Phi/H) H G`, and stays well defined even when `H` has
/// zeros outside the unit circle.
pub fn ms_stability<T: Scalar>(m: &LoopModel<T>) -> Result<StabilityReport<T>> {
    if !internal_stability(m)? {
        return Ok(StabilityReport {
            internally_stable: false,
            ms_margin: None,
            verdict: MsVerdict::NominallyUnstable,
            predicted_power_gain: PowerGain::Unbounded,
            g_norm_sq: None,
        });
    }
    let g = m.closed_loop_unreduced(m.g_numerator())?;
    let phi_g = m.closed_loop_unreduced(&m.g_numerator() * &m.model.stats()?.phi)?;
    let g_norm = h2_norm_sq(&g)?;
    let margin = h2_norm_sq(&phi_g)?;
    let (verdict, gain) = if margin < T::one() {
        (
            MsVerdict::MeanSquareStable,
            PowerGain::Finite(g_norm / (T::one() - margin)),
        )
    } else {
        (MsVerdict::NotMeanSquareStable, PowerGain::Unbounded)
    };
    Ok(StabilityReport {
        internally_stable: true,
        ms_margin: Some(margin),
        verdict,
        predicted_power_gain: gain,
        g_norm_sq: Some(g_norm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    type R = RationalFunction<f64>;
    type Spec = ChannelSpec<f64>;

    fn stable_plant() -> R {
        R::from_z_coeffs(&[1.0, 0.3], &[1.0, -0.5, 0.06]).unwrap()
    }

    fn unweighted_51() -> (R, Spec) {
        let p = R::from_z_coeffs(&[1.0, 0.9], &[1.0, 0.1, -1.32]).unwrap();
        (
            p,
            Spec::new(vec![5.0 / 11.0, 6.0 / 11.0], vec![1.0, 1.0]).unwrap(),
        )
    }

    #[test]
    fn zero_controller() {
        let m = LoopModel::new(stable_plant(), R::zero(), Spec::dropout(0.2).unwrap()).unwrap();
        assert!(nominal_g(&m).unwrap().is_zero());
        assert!(comp_sensitivity_t(&m).unwrap().is_zero());
        assert!(internal_stability(&m).unwrap());
        let r = ms_stability(&m).unwrap();
        assert_eq!(r.ms_margin, Some(0.0));
        assert_eq!(r.verdict, MsVerdict::MeanSquareStable);
    }

    #[test]
    fn cancellation_gate() {
        let (p, spec) = unweighted_51();
        assert!(matches!(
            NetworkModel::new(p.clone(), spec.clone()),
            Err(Error::UnstableCancellation(_))
        ));
        let weighted = Spec::new(vec![5.0 / 11.0, 6.0 / 11.0], vec![0.8, 0.2]).unwrap();
        let m = NetworkModel::new(p.clone(), weighted).unwrap();
        assert!((m.mean_channel().zeros().unwrap().roots()[0].re + 0.3).abs() < 1e-9);
        // with the cancellation forced through, G keeps the pole at -1.2
        let bad = NetworkModel::new_unchecked(p, spec).unwrap();
        for k in [
            R::constant(-0.7),
            R::from_z_coeffs(&[0.4, 0.1], &[1.0, 0.5]).unwrap(),
        ] {
            let lm = bad.with_controller(k);
            let poles = nominal_g(&lm).unwrap().poles().unwrap();
            assert!(poles
                .roots()
                .iter()
                .any(|r| (r.re + 1.2).abs() < 1e-6 && r.im == 0.0));
            assert!(!internal_stability(&lm).unwrap());
        }
    }

    #[test]
    fn strictly_proper_plant_required() {
        assert!(NetworkModel::new(R::constant(1.0), Spec::perfect()).is_err());
    }

    #[test]
    fn t_equals_h_g_and_sensitivity_identity() {
        let m = LoopModel::new(
            stable_plant(),
            R::from_z_coeffs(&[0.2, -0.05], &[1.0, 0.1]).unwrap(),
            Spec::new(vec![0.6, 0.3, 0.1], vec![0.6, 0.4, 0.0]).unwrap(),
        )
        .unwrap();
        let t = comp_sensitivity_t(&m).unwrap();
        let hg = m.model.mean_channel().mul(&nominal_g(&m).unwrap()).unwrap();
        let hkp = m.model.hp().unwrap().mul(&m.controller).unwrap();
        let s = R::one().sub(&hkp).unwrap().inv().unwrap();
        for k in 0..16 {
            let z = Complex::from_polar(1.0, 0.4 * k as f64);
            assert!((t.eval_z(z) - hg.eval_z(z)).norm() < 1e-10);
            // positive feedback: S - T = 1
            assert!((s.eval_z(z) - t.eval_z(z) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn perfect_channel_margin_zero() {
        let m = LoopModel::new(stable_plant(), R::constant(0.3), Spec::perfect()).unwrap();
        let r = ms_stability(&m).unwrap();
        assert_eq!(r.ms_margin, Some(0.0));
        assert_eq!(
            r.predicted_power_gain,
            PowerGain::Finite(r.g_norm_sq.unwrap())
        );
    }

    #[test]
    fn memoryless_channel_identity() {
        let (p, a0) = (0.3, 1.5);
        let spec = Spec::new(vec![1.0 - p, p], vec![a0, 0.0]).unwrap();
        let k = R::from_z_coeffs(&[-0.3, 0.1], &[1.0, -0.2]).unwrap();
        let m = LoopModel::new(stable_plant(), k.clone(), spec).unwrap();
        let mu = a0 * (1.0 - p);
        let sigma = (a0 * a0 * p * (1.0 - p)).sqrt();
        let mkp = k.mul(&stable_plant()).unwrap().scale(mu);
        let t = mkp
            .div(&R::one().sub(&mkp).unwrap())
            .unwrap()
            .scale(sigma / mu);
        let expect = h2_norm_sq(&t).unwrap();
        let got = ms_stability(&m).unwrap().ms_margin.unwrap();
        assert!(
            (got - expect).abs() < 1e-12 * (1.0 + expect),
            "{got} vs {expect}"
        );
    }

    #[test]
    fn unstable_loop_reports_unbounded() {
        let m = LoopModel::new(stable_plant(), R::constant(5.0), Spec::perfect()).unwrap();
        let r = ms_stability(&m).unwrap();
        assert_eq!(r.verdict, MsVerdict::NominallyUnstable);
        assert_eq!(r.predicted_power_gain, PowerGain::Unbounded);
    }
}
