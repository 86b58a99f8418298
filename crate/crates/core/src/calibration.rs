//! Monte Carlo calibration of the nested step-up cutoffs `c_1..c_k`.
//!
//! Hypothesis `i` is tested with the union region
//! `R_i = {stat_1 > c_1} ∪ ... ∪ {stat_i > c_i}` where
//! `stat_j = (fitted_j - mean_0 - delta) / S`. Its rejection probability over
//! the null `mu_i - mu_0 <= delta` peaks at the configuration
//! `mu_1 = ... = mu_i = mu_0 + delta`, `mu_{i+1..k} = +inf`. There `c_1` has a
//! closed form and every later `c_i` is chosen so the union has probability
//! exactly `alpha`, given the cutoffs already fixed.
//!
//! With the upper doses at `+inf` they never pool into doses `1..=i`, so a
//! replicate only draws groups `0..=i` and fits the isotonic means of
//! `1..=i`. Statistics are location and scale free, so `mu_0 = 0` and
//! `sigma = 1` throughout.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::isotonic::sdmmsa_fill;
use crate::rng::{replicate_rng, LayoutSampler};
use crate::tdist::t_quantile;

pub const DEFAULT_REPLICATES: usize = 100_000;
pub const MIN_REPLICATES: usize = 1_000;

/// Design and Monte Carlo settings for [`calibrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub alpha: f64,
    pub delta: f64,
    /// `n_0..n_k`, control first.
    pub sizes: Vec<u32>,
    pub nu: u32,
    pub replicates: usize,
    pub seed: u64,
}

impl CalibrationConfig {
    pub fn new(
        alpha: f64,
        delta: f64,
        sizes: Vec<u32>,
        nu: u32,
        replicates: usize,
        seed: u64,
    ) -> Result<Self> {
        let config = Self {
            alpha,
            delta,
            sizes,
            nu,
            replicates,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(argument(format!("alpha {} is not in (0, 0.5]", self.alpha)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(argument(format!(
                "delta {} must be finite and >= 0",
                self.delta
            )));
        }
        if self.sizes.len() < 2 {
            return Err(argument(
                "sizes must list the control and at least one dose",
            ));
        }
        if self.sizes.contains(&0) {
            return Err(argument("every group size must be positive"));
        }
        if self.nu == 0 {
            return Err(argument("degrees of freedom must be positive"));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(argument(format!(
                "{} replicates requested, at least {MIN_REPLICATES} required",
                self.replicates
            )));
        }
        Ok(())
    }

    /// Number of treatment doses.
    pub fn k(&self) -> usize {
        self.sizes.len() - 1
    }
}

/// Calibrated cutoffs together with their Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CriticalValuesFile", into = "CriticalValuesFile")]
pub struct CriticalValues {
    c: Vec<f64>,
    standard_errors: Vec<f64>,
    config: CalibrationConfig,
}

/// On-disk layout of a calibration table.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CriticalValuesFile {
    alpha: f64,
    delta: f64,
    sizes: Vec<u32>,
    nu: u32,
    replicates: usize,
    seed: u64,
    c: Vec<f64>,
    se: Vec<f64>,
}

impl From<CriticalValues> for CriticalValuesFile {
    fn from(cv: CriticalValues) -> Self {
        let CalibrationConfig {
            alpha,
            delta,
            sizes,
            nu,
            replicates,
            seed,
        } = cv.config;
        Self {
            alpha,
            delta,
            sizes,
            nu,
            replicates,
            seed,
            c: cv.c,
            se: cv.standard_errors,
        }
    }
}

impl TryFrom<CriticalValuesFile> for CriticalValues {
    type Error = Error;

    fn try_from(f: CriticalValuesFile) -> Result<Self> {
        let config = CalibrationConfig {
            alpha: f.alpha,
            delta: f.delta,
            sizes: f.sizes,
            nu: f.nu,
            replicates: f.replicates,
            seed: f.seed,
        };
        CriticalValues::new(config, f.c, f.se)
    }
}

impl CriticalValues {
    /// Assembles a table from known cutoffs, e.g. tabulated ones.
    ///
    /// Infinite cutoffs are accepted (they switch a step off or on), but
    /// cannot be written to JSON.
    pub fn new(config: CalibrationConfig, c: Vec<f64>, standard_errors: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let k = config.k();
        if c.len() != k || standard_errors.len() != k {
            return Err(argument(format!(
                "design has {k} doses but {} cutoffs and {} standard errors were given",
                c.len(),
                standard_errors.len()
            )));
        }
        if c.iter().any(|x| x.is_nan()) {
            return Err(argument("cutoffs must not be NaN"));
        }
        if standard_errors
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(argument("standard errors must be finite and >= 0"));
        }
        Ok(Self {
            c,
            standard_errors,
            config,
        })
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.c
    }

    pub fn standard_errors(&self) -> &[f64] {
        &self.standard_errors
    }

    pub fn config(&self) -> &CalibrationConfig {
        &self.config
    }

    pub fn k(&self) -> usize {
        self.c.len()
    }

    pub fn to_json(&self) -> Result<String> {
        if self.c.iter().any(|c| !c.is_finite()) {
            return Err(argument("infinite cutoffs cannot be serialized"));
        }
        Ok(serde_json::to_string_pretty(self).expect("plain data serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| argument(format!("calibration table: {e}")))
    }
}

/// `c_1 = t_{alpha,nu} * sqrt(1/n_1 + 1/n_0)`.
pub fn first_cutoff(config: &CalibrationConfig) -> Result<f64> {
    let t = t_quantile(config.alpha, config.nu)?;
    let (n0, n1) = (f64::from(config.sizes[0]), f64::from(config.sizes[1]));
    Ok(t * (1.0 / n1 + 1.0 / n0).sqrt())
}

fn lfc_statistics(i: usize, config: &CalibrationConfig, sigma: f64, seed: u64) -> Vec<f64> {
    let sizes = &config.sizes[..=i];
    let sampler = LayoutSampler::new(sizes, config.nu, sigma);
    let mut mu = vec![config.delta * sigma; i + 1];
    mu[0] = 0.0;
    let mut means = vec![0.0; i + 1];
    let mut rng = replicate_rng(seed, i as u64, 0);
    let s = sampler.draw(&mut rng, &mu, &mut means);

    let weights: Vec<f64> = sizes[1..].iter().map(|&n| f64::from(n)).collect();
    let mut fitted = vec![0.0; i];
    sdmmsa_fill(&means[1..], &weights, &mut fitted);
    let shift = means[0] + config.delta * sigma;
    fitted.iter().map(|f| (f - shift) / s).collect()
}

/// Statistics `stat_1..stat_i` of one replicate drawn at the least favorable
/// configuration of hypothesis `i` (1-based).
pub fn simulate_lfc_replicate(
    i: usize,
    config: &CalibrationConfig,
    replicate_seed: u64,
) -> Result<Vec<f64>> {
    check_dose(i, config.k())?;
    Ok(lfc_statistics(i, config, 1.0, replicate_seed))
}

/// Seed of replicate `r` at dose `i` for a run seeded with `seed`.
pub fn replicate_seed(seed: u64, i: usize, r: usize) -> u64 {
    crate::rng::derive_seed(seed, i as u64, r as u64)
}

fn check_dose(i: usize, k: usize) -> Result<()> {
    if i == 0 || i > k {
        return Err(argument(format!("dose {i} is not in 1..={k}")));
    }
    Ok(())
}

/// Per replicate: whether an earlier step already rejected, and `stat_i`.
fn replicate_outcomes(
    i: usize,
    config: &CalibrationConfig,
    cutoffs: &[f64],
    seed: u64,
    replicates: usize,
) -> Vec<(bool, f64)> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let stats = lfc_statistics(i, config, 1.0, replicate_seed(seed, i, r));
            let captured = stats[..i - 1].iter().zip(cutoffs).any(|(s, c)| s > c);
            (captured, stats[i - 1])
        })
        .collect()
}

/// Calibrates `c_1..c_k` for the design in `config`.
///
/// `c_1` is analytic. For `i >= 2`, among replicates not already rejected by
/// steps `1..i`, `c_i` is the order statistic at rank `ceil(m (1 - a'))`
/// where `m` is the survivor count and `a'` the conditional tail mass that
/// brings the union to `alpha`. The reported standard error is half the
/// spread between the order statistics one binomial sd either side.
pub fn calibrate(config: &CalibrationConfig) -> Result<CriticalValues> {
    config.validate()?;
    let k = config.k();
    let reps = config.replicates;
    let mut c = vec![first_cutoff(config)?];
    let mut se = vec![0.0];

    for i in 2..=k {
        let outcomes = replicate_outcomes(i, config, &c, config.seed, reps);
        let mut survivors: Vec<f64> = outcomes
            .iter()
            .filter(|(captured, _)| !captured)
            .map(|&(_, stat)| stat)
            .collect();
        let captured = reps - survivors.len();
        let remaining = config.alpha * reps as f64 - captured as f64;
        if remaining <= 0.0 || survivors.is_empty() {
            return Err(Error::Calibration {
                dose: i,
                reason: format!(
                    "earlier steps already reject with probability {:.5} >= alpha = {}",
                    captured as f64 / reps as f64,
                    config.alpha
                ),
            });
        }
        let m = survivors.len();
        let tail = remaining / m as f64;
        let q = 1.0 - tail;
        survivors.sort_unstable_by(f64::total_cmp);

        let rank = |x: f64| (x as usize).clamp(1, m) - 1;
        let centre = (m as f64 * q).ceil();
        let spread = (m as f64 * q * tail).sqrt();
        let lo = survivors[rank((m as f64 * q - spread).floor())];
        let hi = survivors[rank((m as f64 * q + spread).ceil())];
        c.push(survivors[rank(centre)]);
        se.push(0.5 * (hi - lo));
    }

    CriticalValues::new(config.clone(), c, se)
}

/// A Monte Carlo probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_count(hits: usize, trials: usize) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            value: p,
            se: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }
}

/// Fresh estimate of `P(R_{c_1..c_i})` at the least favorable configuration
/// of hypothesis `i`. `seed` must differ from the calibration seed.
pub fn verify_level(
    i: usize,
    cv: &CriticalValues,
    replicates: usize,
    seed: u64,
) -> Result<Estimate> {
    let config = cv.config();
    check_dose(i, config.k())?;
    if replicates == 0 {
        return Err(argument("at least one replicate is required"));
    }
    if seed == config.seed {
        return Err(argument(
            "verification seed must differ from the calibration seed",
        ));
    }
    let hits = (0..replicates)
        .into_par_iter()
        .filter(|&r| {
            let stats = lfc_statistics(i, config, 1.0, replicate_seed(seed, i, r));
            stats.iter().zip(cv.cutoffs()).any(|(s, c)| s > c)
        })
        .count();
    Ok(Estimate::from_count(hits, replicates))
}
