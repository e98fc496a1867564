//! Aberth-Ehrlich simultaneous root iteration and root bookkeeping.

use num_complex::Complex;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::scalar::Scalar;

const MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootLocation {
    Inside,
    OnCircle,
    Outside,
}

impl RootLocation {
    pub fn of<T: Scalar>(r: Complex<T>) -> Self {
        let m = r.norm();
        if m > T::one() + T::CIRCLE_TOL {
            Self::Outside
        } else if m < T::one() - T::CIRCLE_TOL {
            Self::Inside
        } else {
            Self::OnCircle
        }
    }
}

/// Distinct z-roots with multiplicities and their position relative to the
/// unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet<T> {
    roots: Vec<Complex<T>>,
    multiplicities: Vec<usize>,
    locations: Vec<RootLocation>,
}

impl<T: Scalar> RootSet<T> {
    pub fn empty() -> Self {
        Self {
            roots: Vec::new(),
            multiplicities: Vec::new(),
            locations: Vec::new(),
        }
    }

    /// Builds a set from raw roots of a real polynomial: conjugates are
    /// paired up and made exact, then numerically repeated roots are merged
    /// into one entry at their mean.
    pub fn from_roots(raw: Vec<Complex<T>>) -> Self {
        let sym = symmetrize(raw);
        let mut clusters: Vec<(Complex<T>, Vec<Complex<T>>)> = Vec::new();
        for r in sym {
            let tol = T::CLUSTER_TOL * T::one().max(r.norm());
            match clusters.iter_mut().find(|(c, _)| (*c - r).norm() <= tol) {
                Some((c, members)) => {
                    members.push(r);
                    let n = T::from_usize(members.len()).unwrap();
                    *c = members
                        .iter()
                        .fold(Complex::new(T::zero(), T::zero()), |a, &m| a + m)
                        / n;
                }
                None => clusters.push((r, vec![r])),
            }
        }
        clusters.sort_by(|a, b| {
            a.0.re
                .partial_cmp(&b.0.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(
                    a.0.im
                        .partial_cmp(&b.0.im)
                        .unwrap_or(std::cmp::Ordering::Equal),
                )
        });
        let mut set = Self::empty();
        for (c, members) in clusters {
            let c = if c.im.abs() <= T::CLUSTER_TOL * T::one().max(c.re.abs()) {
                Complex::new(c.re, T::zero())
            } else {
                c
            };
            set.push(c, members.len());
        }
        set
    }

    /// Real roots, each with multiplicity one unless repeated.
    pub fn from_real(values: &[T]) -> Self {
        Self::from_roots(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    /// Refines each repeated root by Newton's method on the derivative of
    /// order `multiplicity - 1`, where the root is simple. `desc` holds the
    /// polynomial coefficients, highest power first.
    pub(crate) fn polish_repeated(&mut self, desc: &[T]) {
        for i in 0..self.roots.len() {
            let m = self.multiplicities[i];
            if m < 2 || desc.len() <= m {
                continue;
            }
            let mut d: Vec<T> = desc.to_vec();
            for _ in 1..m {
                let n = d.len() - 1;
                d = d[..n]
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * T::from_usize(n - k).unwrap())
                    .collect();
            }
            let dd: Vec<T> = {
                let n = d.len() - 1;
                d[..n]
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * T::from_usize(n - k).unwrap())
                    .collect()
            };
            let start = self.roots[i];
            let mut z = start;
            for _ in 0..20 {
                let f = horner(&d, z);
                let g = horner(&dd, z);
                if g.norm() == T::zero() {
                    break;
                }
                let step = f / g;
                z -= step;
                if step.norm() <= T::STEP_TOL * T::one().max(z.norm()) {
                    break;
                }
            }
            if start.im == T::zero() {
                z.im = T::zero();
            }
            let ok = z.re.is_finite() && z.im.is_finite();
            if ok && (z - start).norm() <= T::CLUSTER_TOL * T::one().max(start.norm()) {
                self.roots[i] = z;
                self.locations[i] = RootLocation::of(z);
            }
        }
    }

    fn push(&mut self, r: Complex<T>, m: usize) {
        self.roots.push(r);
        self.multiplicities.push(m);
        self.locations.push(RootLocation::of(r));
    }

    pub fn roots(&self) -> &[Complex<T>] {
        &self.roots
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn locations(&self) -> &[RootLocation] {
        &self.locations
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Number of roots counted with multiplicity.
    pub fn degree(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex<T>, usize, RootLocation)> + '_ {
        self.roots
            .iter()
            .zip(&self.multiplicities)
            .zip(&self.locations)
            .map(|((&r, &m), &l)| (r, m, l))
    }

    /// Every root repeated according to its multiplicity.
    pub fn expanded(&self) -> Vec<Complex<T>> {
        self.iter()
            .flat_map(|(r, m, _)| std::iter::repeat_n(r, m))
            .collect()
    }

    pub fn with_location(&self, loc: RootLocation) -> Self {
        let mut out = Self::empty();
        for (r, m, l) in self.iter() {
            if l == loc {
                out.push(r, m);
            }
        }
        out
    }

    pub fn outside(&self) -> Self {
        self.with_location(RootLocation::Outside)
    }

    pub fn all(&self, loc: RootLocation) -> bool {
        self.locations.iter().all(|&l| l == loc)
    }

    pub fn any(&self, loc: RootLocation) -> bool {
        self.locations.contains(&loc)
    }

    pub fn is_real(&self) -> bool {
        self.roots.iter().all(|r| r.im.is_zero())
    }

    /// `prod |rho|^2` over all roots with multiplicity.
    pub fn product_norm_sqr(&self) -> T {
        self.iter()
            .fold(T::one(), |acc, (r, m, _)| acc * r.norm_sqr().powi(m as i32))
    }
}

/// Pairs every non-real root with its nearest conjugate partner and replaces
/// both by an exact conjugate pair; roots that are their own best partner
/// become real.
/// Serialized as a list of `{re, im, multiplicity, location}` records.
impl<T: Scalar + Serialize> Serialize for RootSet<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Entry<'a, T>(&'a Complex<T>, usize, RootLocation);
        impl<T: Serialize> Serialize for Entry<'_, T> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut st = s.serialize_struct("Root", 4)?;
                st.serialize_field("re", &self.0.re)?;
                st.serialize_field("im", &self.0.im)?;
                st.serialize_field("multiplicity", &self.1)?;
                st.serialize_field("location", &self.2)?;
                st.end()
            }
        }
        let mut seq = s.serialize_seq(Some(self.roots.len()))?;
        for (i, r) in self.roots.iter().enumerate() {
            seq.serialize_element(&Entry(r, self.multiplicities[i], self.locations[i]))?;
        }
        seq.end()
    }
}

fn horner<T: Scalar>(desc: &[T], z: Complex<T>) -> Complex<T> {
    desc.iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
}

fn symmetrize<T: Scalar>(raw: Vec<Complex<T>>) -> Vec<Complex<T>> {
    let n = raw.len();
    let mut out = raw.clone();
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = raw[i].conj();
        let self_dist = (raw[i] - target).norm();
        let best = (0..n)
            .filter(|&j| !used[j])
            .map(|j| (j, (raw[j] - target).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        match best {
            Some((j, d)) if d < self_dist => {
                used[j] = true;
                let two = T::one() + T::one();
                let avg = (raw[i] + raw[j].conj()) / two;
                out[i] = avg;
                out[j] = avg.conj();
            }
            _ => out[i] = Complex::new(raw[i].re, T::zero()),
        }
    }
    out
}

/// Ratio p(z)/p'(z) for monic `a` (ascending). Large |z| goes through the
/// reversed polynomial so nothing overflows.
fn newton_ratio<T: Scalar>(a: &[T], z: Complex<T>) -> Complex<T> {
    let n = a.len() - 1;
    let zero = Complex::new(T::zero(), T::zero());
    if z.norm() <= T::one() {
        let (mut p, mut dp) = (zero, zero);
        for &c in a.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        p / dp
    } else {
        let w = z.inv();
        let (mut p, mut dp) = (zero, zero);
        for &c in a.iter() {
            dp = dp * w + p;
            p = p * w + c;
        }
        let nn = T::from_usize(n).unwrap();
        z * p / (p * nn - w * dp)
    }
}

/// |p(z)| scaled by max(1, |z|)^n, for the monic ascending `a`.
fn scaled_residual<T: Scalar>(a: &[T], z: Complex<T>) -> T {
    let zero = Complex::new(T::zero(), T::zero());
    if z.norm() <= T::one() {
        a.iter().rev().fold(zero, |p, &c| p * z + c).norm()
    } else {
        let w = z.inv();
        a.iter().fold(zero, |p, &c| p * w + c).norm()
    }
}

/// Starting points from the upper convex hull of (k, ln|a_k|): each hull
/// edge contributes as many points as its width, on a circle whose radius
/// matches the root moduli that edge predicts.
fn initial_guesses<T: Scalar>(a: &[T]) -> Vec<Complex<T>> {
    let n = a.len() - 1;
    let pts: Vec<(usize, T)> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k, c.abs().ln()))
        .collect();
    let mut hull: Vec<(usize, T)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let q = hull[hull.len() - 1];
            let cross = T::from_usize(q.0 - o.0).unwrap() * (p.1 - o.1)
                - (q.1 - o.1) * T::from_usize(p.0 - o.0).unwrap();
            if cross >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let two_pi = T::PI() + T::PI();
    let nf = T::from_usize(n).unwrap();
    let sigma = T::lit(0.4);
    let mut z = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let width = T::from_usize(j - i).unwrap();
        let radius = ((li - lj) / width).exp();
        for k in 0..(j - i) {
            let theta = two_pi * T::from_usize(k).unwrap() / width
                + two_pi * T::from_usize(i).unwrap() / nf
                + sigma;
            z.push(Complex::from_polar(radius, theta));
        }
    }
    z
}

/// All roots of the polynomial with coefficients `desc` (highest power first,
/// nonzero constant term). Fails when the iteration neither converges within
/// the cap nor lands on acceptable residuals.
pub(crate) fn aberth<T: Scalar>(desc: &[T]) -> std::result::Result<Vec<Complex<T>>, ()> {
    if desc.iter().any(|c| !c.is_finite()) {
        return Err(());
    }
    let n = desc.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = desc[0];
    let a: Vec<T> = (0..=n).map(|j| desc[n - j] / lead).collect();
    if n == 1 {
        return Ok(vec![Complex::new(-a[0], T::zero())]);
    }
    let mut z = initial_guesses(&a);
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let ratio = newton_ratio(&a, z[i]);
            let w = if ratio.re.is_finite() && ratio.im.is_finite() {
                let mut s = Complex::new(T::zero(), T::zero());
                for j in 0..n {
                    if j != i {
                        let d = z[i] - z[j];
                        if !d.norm().is_zero() {
                            s += d.inv();
                        }
                    }
                }
                let denom = Complex::new(T::one(), T::zero()) - ratio * s;
                if denom.norm().is_zero() {
                    ratio
                } else {
                    ratio / denom
                }
            } else {
                Complex::new(T::zero(), T::zero())
            };
            z[i] -= w;
            if w.norm() <= T::STEP_TOL * T::one().max(z[i].norm()) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    let scale = T::one() + a.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    for (i, &r) in z.iter().enumerate() {
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(());
        }
        // Repeated roots stall short of the step criterion but still sit on
        // tiny residuals.
        if !done[i] && scaled_residual(&a, r) > T::CIRCLE_TOL * scale {
            return Err(());
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::Polynomial;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn planted_roots_recovered() {
        let planted = vec![
            c(0.3, 0.0),
            c(-1.7, 0.0),
            c(0.5, 0.8),
            c(0.5, -0.8),
            c(2.5, 0.0),
        ];
        let p = Polynomial::from_z_roots(1.3, &planted);
        let got = p.roots_in_z().unwrap().expanded();
        assert_eq!(got.len(), 5);
        for r in &planted {
            let d = got
                .iter()
                .map(|g| (g - r).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-10, "missing {r}: {d}");
        }
    }

    #[test]
    fn classification() {
        let set = RootSet::from_roots(vec![c(0.5, 0.0), c(1.0 + 1e-12, 0.0), c(-3.0, 0.0)]);
        assert_eq!(set.with_location(RootLocation::Inside).degree(), 1);
        assert_eq!(set.with_location(RootLocation::OnCircle).degree(), 1);
        assert_eq!(set.outside().degree(), 1);
    }

    #[test]
    fn repeated_roots_merge() {
        let p = Polynomial::from_z_roots(1.0, &[c(1.1, 0.0), c(1.1, 0.0), c(0.2, 0.0)]);
        let set = p.roots_in_z().unwrap();
        assert_eq!(set.degree(), 3);
        let i = set
            .multiplicities()
            .iter()
            .position(|&m| m == 2)
            .expect("double root");
        assert!((set.roots()[i].re - 1.1).abs() < 1e-6);
        assert!(set.roots()[i].im == 0.0);
    }

    #[test]
    fn conjugates_are_exact() {
        let p = Polynomial::from_z_roots(
            1.0,
            &[c(0.1, 1.3), c(0.1, -1.3), c(-0.4, 0.2), c(-0.4, -0.2)],
        );
        let set = p.roots_in_z().unwrap();
        for r in set.roots() {
            assert!(set.roots().iter().any(|s| *s == r.conj()));
        }
    }

    #[test]
    fn wide_root_spread() {
        // roots from 1e-6 up to 1e6 in modulus
        let planted: Vec<_> = [1e-6, 1e-3, 0.7, 40.0, 1e6]
            .iter()
            .map(|&r| c(r, 0.0))
            .collect();
        let p = Polynomial::from_z_roots(1.0, &planted);
        let got = p.roots_in_z().unwrap().expanded();
        for r in &planted {
            let d = got
                .iter()
                .map(|g| (g - r).norm() / r.norm())
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-8, "{r}: {d}");
        }
    }

    #[test]
    fn guesses_count_matches_degree() {
        let a = vec![1e-12, 3.0, 0.0, 0.5, 1.0];
        assert_eq!(initial_guesses(&a).len(), 4);
    }
}
