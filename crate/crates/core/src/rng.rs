//! Counter-based keyed random streams.
//!
//! Every random decision in the simulator is drawn from a stream identified by
//! `(seed, domain, key_a, key_b)`. The stream's i-th word is
//! `splitmix64_finalize(base + (i + 1) * GOLDEN)` where `base` is a hash of the
//! key tuple, so a stream's content depends only on its key and never on the
//! order in which other streams were consumed. This is what makes network
//! construction and stimulus generation independent of partitioning and
//! thread scheduling.
//!
//! The algorithm is fixed: changing any constant here changes every raster.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream domains. Keeping them distinct means a network seed reused as a
/// stimulus seed still yields unrelated streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Connectivity = 0x436f_6e6e,
    Stimulus = 0x5374_696d,
    Test = 0x5465_7374,
}

#[inline(always)]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic stream keyed by `(seed, domain, a, b)`.
#[derive(Debug, Clone)]
pub struct KeyedRng {
    base: u64,
    counter: u64,
}

impl KeyedRng {
    pub fn new(seed: u64, domain: Domain, a: u64, b: u64) -> Self {
        let mut h = finalize(seed ^ (domain as u64).wrapping_mul(GOLDEN));
        h = finalize(h ^ a.wrapping_add(0x632B_E59B_D9B4_E019));
        h = finalize(h ^ b.wrapping_add(0xD6E8_FEB8_6659_FD93));
        Self { base: h, counter: 0 }
    }

    /// Number of words drawn so far.
    pub fn position(&self) -> u64 {
        self.counter
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        finalize(self.base.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`, unbiased (Lemire's multiply-shift with rejection).
    #[inline]
    pub fn below(&mut self, n: u32) -> u32 {
        debug_assert!(n > 0);
        let n = n as u64;
        loop {
            let m = (self.next_u64() >> 32) * n;
            let low = m & 0xFFFF_FFFF;
            if low >= n || low >= (1u64 << 32) % n {
                return (m >> 32) as u32;
            }
        }
    }

    /// Poisson variate. Large means are split into chunks of at most
    /// [`POISSON_CHUNK`] so the multiplicative method never underflows.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let mut remaining = mean;
        let mut total = 0u64;
        while remaining > 0.0 {
            let chunk = remaining.min(POISSON_CHUNK);
            remaining -= chunk;
            let limit = (-chunk).exp();
            let mut product = self.next_f64();
            while product > limit {
                total += 1;
                product *= self.next_f64();
            }
        }
        total
    }

    /// Binomial variate by CDF inversion, using the symmetry `n - B(n, 1-p)`
    /// for `p > 1/2` and chunking `n` so `(1-p)^n` stays representable.
    pub fn binomial(&mut self, n: u32, p: f64) -> u32 {
        if n == 0 || p <= 0.0 {
            return 0;
        }
        if p >= 1.0 {
            return n;
        }
        if p > 0.5 {
            return n - self.binomial(n, 1.0 - p);
        }
        let chunk = ((BINOMIAL_CHUNK_MEAN / p) as u32).clamp(1, n);
        let mut left = n;
        let mut total = 0;
        while left > 0 {
            let m = left.min(chunk);
            left -= m;
            total += self.binomial_inversion(m, p);
        }
        total
    }

    fn binomial_inversion(&mut self, n: u32, p: f64) -> u32 {
        let q = 1.0 - p;
        let ratio = p / q;
        let mut prob = q.powi(n as i32);
        let mut cdf = prob;
        let u = self.next_f64();
        let mut k = 0;
        while u >= cdf && k < n {
            prob *= ratio * (n - k) as f64 / (k + 1) as f64;
            k += 1;
            cdf += prob;
        }
        k
    }
}

pub const POISSON_CHUNK: f64 = 30.0;
const BINOMIAL_CHUNK_MEAN: f64 = 64.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_pure_functions_of_their_key() {
        let mut a = KeyedRng::new(7, Domain::Test, 1, 2);
        let first: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        // Draining an unrelated stream in between must not matter.
        let mut other = KeyedRng::new(7, Domain::Test, 1, 3);
        for _ in 0..100 {
            other.next_u64();
        }
        let mut b = KeyedRng::new(7, Domain::Test, 1, 2);
        let second: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(first, second);
        assert_ne!(first[0], other.next_u64());
    }

    #[test]
    fn domains_separate_streams() {
        let mut a = KeyedRng::new(1, Domain::Connectivity, 0, 0);
        let mut b = KeyedRng::new(1, Domain::Stimulus, 0, 0);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn below_stays_in_range_and_covers_it() {
        let mut rng = KeyedRng::new(3, Domain::Test, 0, 0);
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            let x = rng.below(7);
            seen[x as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 850 && c < 1150), "{seen:?}");
    }

    #[test]
    fn poisson_mean_and_variance() {
        let mut rng = KeyedRng::new(11, Domain::Test, 0, 0);
        for &mean in &[0.3, 1.782, 12.0, 75.0] {
            let n = 200_000;
            let draws: Vec<f64> = (0..n).map(|_| rng.poisson(mean) as f64).collect();
            let m = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
            assert!((m - mean).abs() < 4.0 * (mean / n as f64).sqrt() + 1e-9, "mean {m} vs {mean}");
            assert!((var / mean - 1.0).abs() < 0.03, "var {var} vs {mean}");
        }
    }

    #[test]
    fn binomial_edge_cases_and_moments() {
        let mut rng = KeyedRng::new(5, Domain::Test, 0, 0);
        assert_eq!(rng.binomial(0, 0.4), 0);
        assert_eq!(rng.binomial(50, 0.0), 0);
        assert_eq!(rng.binomial(50, 1.0), 50);
        for &(n, p) in &[(100u32, 0.03), (100, 0.8), (5000, 0.2)] {
            let trials = 50_000;
            let draws: Vec<f64> = (0..trials).map(|_| rng.binomial(n, p) as f64).collect();
            let m = draws.iter().sum::<f64>() / trials as f64;
            let expect = n as f64 * p;
            let sd = (expect * (1.0 - p) / trials as f64).sqrt();
            assert!((m - expect).abs() < 5.0 * sd, "n={n} p={p}: {m} vs {expect}");
            assert!(draws.iter().all(|&x| x <= n as f64));
        }
    }
}
