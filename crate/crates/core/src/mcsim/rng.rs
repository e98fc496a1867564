//! Pinned pseudorandom streams.
//!
//! The generator is xorshift64* (shifts 12, 25, 27; multiplier
//! `0x2545F4914F6CDD1D`). Uniforms take the top 53 bits. Every run `r` of a
//! simulation with master seed `s` owns two streams seeded from
//! `splitmix64(s + (r + 1) * 0x9E3779B97F4A7C15)`: the noise stream uses that
//! value, the delay stream uses it xor `0xD1B54A32D192ED03`, both passed
//! through splitmix64 once more.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const DELAY_STREAM: u64 = 0xD1B5_4A32_D192_ED03;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed shared by both streams of run `run`.
pub fn run_seed(master: u64, run: u64) -> u64 {
    splitmix64(master.wrapping_add(run.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[derive(Clone, Debug)]
pub struct Xorshift64Star {
    state: u64,
}

impl Xorshift64Star {
    /// A zero seed (the generator's fixed point) is replaced by the golden
    /// ratio constant.
    pub fn new(seed: u64) -> Self {
        Self {
            state: if seed == 0 { GOLDEN } else { seed },
        }
    }

    pub fn noise_stream(run_seed: u64) -> Self {
        Self::new(splitmix64(run_seed))
    }

    pub fn delay_stream(run_seed: u64) -> Self {
        Self::new(splitmix64(run_seed ^ DELAY_STREAM))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal variates by Box-Muller, using both outputs of each
/// transform.
#[derive(Clone, Debug)]
pub struct Gaussian {
    rng: Xorshift64Star,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(rng: Xorshift64Star) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.rng.next_f64();
        let u2 = self.rng.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Inverse-CDF sampler over `0..pmf.len()`.
#[derive(Clone, Debug)]
pub struct Categorical {
    cdf: Vec<f64>,
}

impl Categorical {
    pub fn new(pmf: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn sample(&self, rng: &mut Xorshift64Star) -> usize {
        let u = rng.next_f64();
        self.cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cdf.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xorshift_reference_values() {
        let mut r = Xorshift64Star::new(1);
        assert_eq!(r.next_u64(), 5180492295206395165);
        assert_eq!(r.next_u64(), 12380297144915551517);
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn uniform_range_and_mean() {
        let mut r = Xorshift64Star::new(42);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn gaussian_moments() {
        let mut g = Gaussian::new(Xorshift64Star::new(7));
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = g.sample();
            s1 += z;
            s2 += z * z;
        }
        assert!((s1 / n as f64).abs() < 0.01);
        assert!((s2 / n as f64 - 1.0).abs() < 0.015);
    }

    #[test]
    fn categorical_frequencies() {
        let c = Categorical::new(&[0.6, 0.3, 0.1]);
        let mut r = Xorshift64Star::new(3);
        let mut counts = [0usize; 3];
        for _ in 0..100_000 {
            counts[c.sample(&mut r)] += 1;
        }
        for (n, p) in counts.iter().zip([0.6, 0.3, 0.1]) {
            assert!((*n as f64 / 1e5 - p).abs() < 0.006);
        }
    }

    #[test]
    fn streams_differ() {
        let s = run_seed(99, 0);
        assert_ne!(s, run_seed(99, 1));
        assert_ne!(
            Xorshift64Star::noise_stream(s).next_u64(),
            Xorshift64Star::delay_stream(s).next_u64()
        );
    }
}
