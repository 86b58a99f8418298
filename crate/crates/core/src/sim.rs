//! Monte Carlo studies of the MED procedures: familywise error, power against
//! the Hsu–Berger comparator, and stochastic ordering of the isotonic fit.
//!
//! Replicates are evaluated in parallel but reduced in replicate order (or by
//! integer counts), so every result depends only on the scenario and seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationConfig, CriticalValues, Estimate};
use crate::error::{argument, Error, Result};
use crate::isotonic::sdmmsa_fill;
use crate::med::{first_exceedance, hsu_berger_statistics_raw, step_up_statistics_raw, MedMethod};
use crate::rng::{replicate_rng, LayoutSampler};
use crate::tdist::t_quantile;

const STUDY_STREAM: u64 = 0x5EED_0001;
const ORDERING_STREAM: u64 = 0x5EED_0002;

/// True means and design for a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// `mu_0..mu_k`, control first; `mu_1..mu_k` must be nondecreasing.
    pub mu: Vec<f64>,
    pub sigma: f64,
    pub sizes: Vec<u32>,
    pub delta: f64,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu.len() < 2 {
            return Err(argument("mu must list the control and at least one dose"));
        }
        if self.mu.len() != self.sizes.len() {
            return Err(argument(format!(
                "{} means but {} group sizes",
                self.mu.len(),
                self.sizes.len()
            )));
        }
        if self.mu.iter().any(|m| !m.is_finite()) {
            return Err(argument("true means must be finite"));
        }
        if self.mu[1..].windows(2).any(|w| w[0] > w[1]) {
            return Err(argument("treatment means must be nondecreasing"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(argument("sigma must be positive"));
        }
        if self.sizes.contains(&0) {
            return Err(argument("group sizes must be positive"));
        }
        if self.nu() == 0 {
            return Err(argument("design has no error degrees of freedom"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(argument("alpha must be in (0, 1)"));
        }
        if !self.delta.is_finite() {
            return Err(argument("delta must be finite"));
        }
        if self.replicates == 0 {
            return Err(argument("at least one replicate is required"));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.mu.len() - 1
    }

    /// `sum(n_i) - (k + 1)`.
    pub fn nu(&self) -> u32 {
        let total: u32 = self.sizes.iter().sum();
        total.saturating_sub(self.sizes.len() as u32)
    }

    /// Smallest dose with `mu_i > mu_0 + delta`.
    pub fn true_med(&self) -> Option<usize> {
        let threshold = self.mu[0] + self.delta;
        self.mu[1..]
            .iter()
            .position(|&m| m > threshold)
            .map(|i| i + 1)
    }

    /// Calibration settings matching this design.
    pub fn calibration_config(&self, replicates: usize, seed: u64) -> Result<CalibrationConfig> {
        CalibrationConfig::new(
            self.alpha,
            self.delta.max(0.0),
            self.sizes.clone(),
            self.nu(),
            replicates,
            seed,
        )
    }

    fn check_cutoffs(&self, cv: &CriticalValues) -> Result<()> {
        let config = cv.config();
        if config.sizes != self.sizes || config.nu != self.nu() {
            return Err(Error::DesignMismatch(format!(
                "scenario design (sizes {:?}, nu {}) differs from the cutoffs' (sizes {:?}, nu {})",
                self.sizes,
                self.nu(),
                config.sizes,
                config.nu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Error,
    Power,
}

/// Operating characteristics of one procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: MedMethod,
    /// Asserted MED strictly below the true MED.
    pub error_rate: Estimate,
    pub correct_med_rate: Estimate,
    /// Probability of asserting dose `i` at index `i - 1`; the last entry is "none".
    pub med_distribution: Vec<f64>,
    /// `P(asserted MED <= j)` at index `j - 1`.
    pub cumulative: Vec<Estimate>,
}

impl MethodSummary {
    fn from_decisions(
        method: MedMethod,
        meds: &[Option<usize>],
        k: usize,
        truth: Option<usize>,
    ) -> Self {
        let reps = meds.len();
        let mut counts = vec![0usize; k + 1];
        for m in meds {
            counts[m.map_or(k, |d| d - 1)] += 1;
        }
        let rank = |m: Option<usize>| m.unwrap_or(k + 1);
        let errors = meds.iter().filter(|&&m| rank(m) < rank(truth)).count();
        let correct = meds.iter().filter(|&&m| m == truth).count();
        let mut running = 0;
        let cumulative = counts[..k]
            .iter()
            .map(|&c| {
                running += c;
                Estimate::from_count(running, reps)
            })
            .collect();
        Self {
            method,
            error_rate: Estimate::from_count(errors, reps),
            correct_med_rate: Estimate::from_count(correct, reps),
            med_distribution: counts.iter().map(|&c| c as f64 / reps as f64).collect(),
            cumulative,
        }
    }

    pub fn method_name(&self) -> &'static str {
        self.method.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: StudyKind,
    pub k: usize,
    pub true_med: Option<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
}

impl StudyResult {
    pub fn method(&self, method: MedMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Both procedures' verdicts on each replicate, in replicate order.
fn simulate_decisions(
    scenario: &ScenarioConfig,
    cv: &CriticalValues,
    with_comparator: bool,
) -> Result<Vec<(Option<usize>, Option<usize>)>> {
    scenario.validate()?;
    scenario.check_cutoffs(cv)?;
    let k = scenario.k();
    let sampler = LayoutSampler::new(&scenario.sizes, scenario.nu(), scenario.sigma);
    let weights: Vec<f64> = scenario.sizes[1..].iter().map(|&n| f64::from(n)).collect();
    let n0 = f64::from(scenario.sizes[0]);
    let t = if with_comparator {
        t_quantile(scenario.alpha, scenario.nu())?
    } else {
        f64::NAN
    };
    let cutoffs = cv.cutoffs();

    Ok((0..scenario.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(scenario.seed, STUDY_STREAM, r as u64);
            let mut means = vec![0.0; k + 1];
            let s = sampler.draw(&mut rng, &scenario.mu, &mut means);
            let stats = step_up_statistics_raw(means[0], &means[1..], &weights, s, scenario.delta);
            let step_up = first_exceedance(&stats, cutoffs);
            let hb = with_comparator.then(|| {
                let tail = hsu_berger_statistics_raw(
                    means[0],
                    n0,
                    &means[1..],
                    &weights,
                    s,
                    scenario.delta,
                );
                first_exceedance(&tail, &vec![t; k])
            });
            (step_up, hb.flatten())
        })
        .collect())
}

/// Familywise error of the step-up procedure under `scenario`.
pub fn run_error_study(scenario: &ScenarioConfig, cv: &CriticalValues) -> Result<StudyResult> {
    let decisions = simulate_decisions(scenario, cv, false)?;
    let meds: Vec<_> = decisions.iter().map(|d| d.0).collect();
    Ok(StudyResult {
        study: StudyKind::Error,
        k: scenario.k(),
        true_med: scenario.true_med(),
        replicates: scenario.replicates,
        seed: scenario.seed,
        methods: vec![MethodSummary::from_decisions(
            MedMethod::StepUp,
            &meds,
            scenario.k(),
            scenario.true_med(),
        )],
    })
}

/// Step-up versus Hsu–Berger on common random numbers.
pub fn run_power_study(scenario: &ScenarioConfig, cv: &CriticalValues) -> Result<StudyResult> {
    let decisions = simulate_decisions(scenario, cv, true)?;
    let (step_up, hb): (Vec<_>, Vec<_>) = decisions.into_iter().unzip();
    let (k, truth) = (scenario.k(), scenario.true_med());
    Ok(StudyResult {
        study: StudyKind::Power,
        k,
        true_med: truth,
        replicates: scenario.replicates,
        seed: scenario.seed,
        methods: vec![
            MethodSummary::from_decisions(MedMethod::StepUp, &step_up, k, truth),
            MethodSummary::from_decisions(MedMethod::HsuBerger, &hb, k, truth),
        ],
    })
}

/// Exceedance probabilities of the fitted means as one true mean is raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// 1-based dose whose true mean is bumped.
    pub dose: usize,
    pub bumps: Vec<f64>,
    pub grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// `exceedance[b][i][x]` estimates `P(fitted_{i+1} > grid[x])` under bump `b`.
    pub exceedance: Vec<Vec<Vec<Estimate>>>,
    /// Replicates where a larger bump lowered some fitted mean.
    pub pathwise_violations: usize,
    /// `(b, i, x)` cells where the estimate fell by more than 3 standard errors
    /// from bump `b - 1` to bump `b`.
    pub ordering_violations: usize,
}

impl OrderingReport {
    pub fn is_monotone(&self) -> bool {
        self.pathwise_violations == 0 && self.ordering_violations == 0
    }
}

fn default_grid(base: &ScenarioConfig, bumps: &[f64]) -> Vec<f64> {
    let treat = &base.mu[1..];
    let n_min = f64::from(*base.sizes[1..].iter().min().expect("k >= 1"));
    let spread = 2.0 * base.sigma / n_min.sqrt();
    let lo = treat.iter().copied().fold(f64::INFINITY, f64::min) - spread;
    let top_bump = bumps.iter().copied().fold(0.0, f64::max);
    let hi = treat.iter().copied().fold(f64::NEG_INFINITY, f64::max) + top_bump + spread;
    (0..9).map(|g| lo + (hi - lo) * g as f64 / 8.0).collect()
}

/// Raises `mu_dose` by each bump on common noise draws and tallies
/// `fitted_i > x` over `grid` (a default grid spans the plausible range).
pub fn run_ordering_study(
    base: &ScenarioConfig,
    dose: usize,
    bumps: &[f64],
    grid: Option<&[f64]>,
) -> Result<OrderingReport> {
    base.validate()?;
    let k = base.k();
    if dose == 0 || dose > k {
        return Err(argument(format!("dose {dose} is not in 1..={k}")));
    }
    if bumps.is_empty() || bumps.iter().any(|b| !b.is_finite()) {
        return Err(argument("bumps must be finite and non-empty"));
    }
    if bumps.windows(2).any(|w| w[0] > w[1]) {
        return Err(argument("bumps must be increasing"));
    }
    let grid = grid.map_or_else(|| default_grid(base, bumps), <[f64]>::to_vec);
    if grid.is_empty() {
        return Err(argument("grid must not be empty"));
    }

    let sampler = LayoutSampler::new(&base.sizes, base.nu(), base.sigma);
    let weights: Vec<f64> = base.sizes[1..].iter().map(|&n| f64::from(n)).collect();
    let cells = bumps.len() * k * grid.len();

    // Integer tallies add associatively, so the fold order cannot leak into the result.
    let (counts, pathwise) = (0..base.replicates)
        .into_par_iter()
        .fold(
            || (vec![0u64; cells], 0usize),
            |(mut counts, mut violations), r| {
                let mut rng = replicate_rng(base.seed, ORDERING_STREAM, r as u64);
                let mut means = vec![0.0; k + 1];
                sampler.draw(&mut rng, &base.mu, &mut means);
                let noise_free = means[dose];
                let mut previous: Option<Vec<f64>> = None;
                let mut violated = false;
                for (b, bump) in bumps.iter().enumerate() {
                    means[dose] = noise_free + bump;
                    let mut fitted = vec![0.0; k];
                    sdmmsa_fill(&means[1..], &weights, &mut fitted);
                    for (i, f) in fitted.iter().enumerate() {
                        for (x, g) in grid.iter().enumerate() {
                            if f > g {
                                counts[(b * k + i) * grid.len() + x] += 1;
                            }
                        }
                    }
                    if let Some(prev) = &previous {
                        violated |= prev.iter().zip(&fitted).any(|(p, f)| *f < p - 1e-12);
                    }
                    previous = Some(fitted);
                }
                violations += usize::from(violated);
                (counts, violations)
            },
        )
        .reduce(
            || (vec![0u64; cells], 0usize),
            |(mut a, va), (b, vb)| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                (a, va + vb)
            },
        );

    let reps = base.replicates;
    let exceedance: Vec<Vec<Vec<Estimate>>> = (0..bumps.len())
        .map(|b| {
            (0..k)
                .map(|i| {
                    (0..grid.len())
                        .map(|x| {
                            Estimate::from_count(
                                counts[(b * k + i) * grid.len() + x] as usize,
                                reps,
                            )
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut ordering_violations = 0;
    for pair in exceedance.windows(2) {
        for (before, after) in pair[0].iter().zip(&pair[1]) {
            for (lo, hi) in before.iter().zip(after) {
                let se = (lo.se.powi(2) + hi.se.powi(2)).sqrt();
                if hi.value < lo.value - 3.0 * se {
                    ordering_violations += 1;
                }
            }
        }
    }

    Ok(OrderingReport {
        dose,
        bumps: bumps.to_vec(),
        grid,
        replicates: reps,
        seed: base.seed,
        exceedance,
        pathwise_violations: pathwise,
        ordering_violations,
    })
}
