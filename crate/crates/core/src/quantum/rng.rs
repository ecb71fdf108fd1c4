use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

/// Seeded, platform-independent random stream (ChaCha8).
///
/// One stream feeds one sampler; independent experiments should use
/// [`SeededRng::child`] rather than sharing a stream.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh stream for sub-experiment `id`, seeded by [`derive_seed`].
    pub fn child(&self, id: u64) -> Self {
        Self::new(derive_seed(self.seed, id))
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Number of successes in `trials` independent Bernoulli(`p`) draws,
    /// sampled exactly in one step. `p` is clamped to `[0, 1]`.
    pub fn binomial(&mut self, trials: u64, p: f64) -> u64 {
        let p = p.clamp(0.0, 1.0);
        Binomial::new(trials, p)
            .expect("probability clamped to [0, 1]")
            .sample(&mut self.inner)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed: `splitmix64(seed ^ splitmix64(id))`.
pub fn derive_seed(seed: u64, id: u64) -> u64 {
    splitmix64(seed ^ splitmix64(id))
}
