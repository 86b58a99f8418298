//! Counter-based seeding and the normal-theory draws shared by the Monte
//! Carlo routines.
//!
//! Every replicate owns a generator seeded from `(seed, stream, index)`, so a
//! replicate's draws do not depend on which worker thread evaluates it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed, a stream tag and a replicate counter into one seed.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub(crate) fn replicate_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

/// Draws `S` and the sample means of a one-way layout.
#[derive(Debug, Clone)]
pub(crate) struct LayoutSampler {
    scale: Vec<f64>,
    chi2: Gamma<f64>,
    nu: f64,
    sigma: f64,
}

impl LayoutSampler {
    /// `sizes` are `n_0..n_k`; `nu` is the error degrees of freedom.
    pub(crate) fn new(sizes: &[u32], nu: u32, sigma: f64) -> Self {
        let nu = f64::from(nu);
        Self {
            scale: sizes.iter().map(|&n| sigma / f64::from(n).sqrt()).collect(),
            chi2: Gamma::new(0.5 * nu, 2.0).expect("nu >= 1"),
            nu,
            sigma,
        }
    }

    /// Fills `means[g]` with a draw of the mean of group `g` around `mu[g]`
    /// (control first), then returns `S`.
    #[inline]
    pub(crate) fn draw<R: Rng>(&self, rng: &mut R, mu: &[f64], means: &mut [f64]) -> f64 {
        for ((out, &m), &sd) in means.iter_mut().zip(mu).zip(&self.scale) {
            let z: f64 = rng.sample(StandardNormal);
            *out = m + sd * z;
        }
        let chi2: f64 = rng.sample(self.chi2);
        self.sigma * (chi2 / self.nu).sqrt()
    }
}
