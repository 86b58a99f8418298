//! Minimum effective dose identification.
//!
//! The step-up test asserts `mu_i - mu_0 > delta` for every `i` at or above
//! the first dose whose isotonic statistic exceeds its calibrated cutoff. The
//! Hsu–Berger comparator instead steps down from the top dose using the
//! smallest pairwise t statistic over each upper tail of doses.

use serde::{Deserialize, Serialize};

use crate::calibration::CriticalValues;
use crate::error::{argument, Error, Result};
use crate::isotonic::sdmmsa_fill;
use crate::summary::DoseResponseData;
use crate::tdist::t_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MedMethod {
    StepUp,
    HsuBerger,
}

impl MedMethod {
    pub fn name(self) -> &'static str {
        match self {
            MedMethod::StepUp => "step-up",
            MedMethod::HsuBerger => "hsu-berger",
        }
    }
}

/// Per-dose statistics, the cutoffs they were compared with, and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedDecision {
    pub method: MedMethod,
    pub statistics: Vec<f64>,
    pub cutoffs: Vec<f64>,
    /// 1-based dose; `None` when no dose is declared effective.
    pub med: Option<usize>,
    /// Doses whose null hypothesis is rejected: `med..=k`.
    pub rejected: Vec<usize>,
}

impl MedDecision {
    fn from_first_exceedance(method: MedMethod, statistics: Vec<f64>, cutoffs: Vec<f64>) -> Self {
        let med = first_exceedance(&statistics, &cutoffs);
        let k = statistics.len();
        let rejected = med.map_or_else(Vec::new, |m| (m..=k).collect());
        Self {
            method,
            statistics,
            cutoffs,
            med,
            rejected,
        }
    }

    pub fn k(&self) -> usize {
        self.statistics.len()
    }
}

/// First 1-based dose with `statistic > cutoff`; equality does not reject.
pub fn first_exceedance(statistics: &[f64], cutoffs: &[f64]) -> Option<usize> {
    statistics
        .iter()
        .zip(cutoffs)
        .position(|(s, c)| s > c)
        .map(|i| i + 1)
}

/// Hypotheses rejected by the nested regions `R_i = ∪_{j<=i} {stat_j > c_j}`.
pub fn rejected_by_union(statistics: &[f64], cutoffs: &[f64]) -> Vec<usize> {
    let mut occurred = false;
    let mut rejected = Vec::new();
    for (i, (s, c)) in statistics.iter().zip(cutoffs).enumerate() {
        occurred |= s > c;
        if occurred {
            rejected.push(i + 1);
        }
    }
    rejected
}

/// `(fitted_i - mean_0 - delta) / S` for `i = 1..k`.
pub fn step_up_statistics(data: &DoseResponseData, delta: f64) -> Vec<f64> {
    let treatments = data.weighted_treatments();
    step_up_statistics_raw(
        data.control().mean,
        treatments.means(),
        treatments.weights(),
        data.s(),
        delta,
    )
}

pub(crate) fn step_up_statistics_raw(
    control_mean: f64,
    means: &[f64],
    weights: &[f64],
    s: f64,
    delta: f64,
) -> Vec<f64> {
    let mut fitted = vec![0.0; means.len()];
    sdmmsa_fill(means, weights, &mut fitted);
    let shift = control_mean + delta;
    fitted.iter_mut().for_each(|f| *f = (*f - shift) / s);
    fitted
}

/// Tail minima of the pairwise t statistics, highest dose last.
pub(crate) fn hsu_berger_statistics_raw(
    control_mean: f64,
    control_n: f64,
    means: &[f64],
    sizes: &[f64],
    s: f64,
    delta: f64,
) -> Vec<f64> {
    let mut tail_min = vec![0.0; means.len()];
    let mut running = f64::INFINITY;
    for j in (0..means.len()).rev() {
        let t = (means[j] - control_mean - delta) / (s * (1.0 / sizes[j] + 1.0 / control_n).sqrt());
        running = running.min(t);
        tail_min[j] = running;
    }
    tail_min
}

fn check_design(data: &DoseResponseData, cv: &CriticalValues) -> Result<()> {
    let config = cv.config();
    if data.sizes() != config.sizes {
        return Err(Error::DesignMismatch(format!(
            "data group sizes {:?} differ from calibrated sizes {:?}",
            data.sizes(),
            config.sizes
        )));
    }
    if data.nu() != config.nu {
        return Err(Error::DesignMismatch(format!(
            "data has {} error degrees of freedom, cutoffs were calibrated for {}",
            data.nu(),
            config.nu
        )));
    }
    Ok(())
}

/// Step-up identification with calibrated cutoffs.
///
/// The cutoffs must come from the same design (group sizes and `nu`). They do
/// not depend on `delta`, so `delta` may differ from the calibration value.
pub fn step_up_identify_med(
    data: &DoseResponseData,
    cv: &CriticalValues,
    delta: f64,
) -> Result<MedDecision> {
    if !delta.is_finite() {
        return Err(argument("delta must be finite"));
    }
    check_design(data, cv)?;
    let statistics = step_up_statistics(data, delta);
    Ok(MedDecision::from_first_exceedance(
        MedMethod::StepUp,
        statistics,
        cv.cutoffs().to_vec(),
    ))
}

/// Hsu–Berger step-down identification.
///
/// `statistics[j-1]` is `min_{i >= j} (mean_i - mean_0 - delta) / (S sqrt(1/n_i + 1/n_0))`
/// and every cutoff is `t_{alpha,nu}`. Because the tail minimum is
/// nondecreasing in `j`, stepping down from `k` and stopping at the first
/// non-rejection lands on the same dose as the first exceedance from below.
pub fn hsu_berger_med(data: &DoseResponseData, delta: f64, alpha: f64) -> Result<MedDecision> {
    if !delta.is_finite() {
        return Err(argument("delta must be finite"));
    }
    let t = t_quantile(alpha, data.nu())?;
    let k = data.k();
    let sizes: Vec<f64> = data.treatments().iter().map(|g| f64::from(g.n)).collect();
    let tail_min = hsu_berger_statistics_raw(
        data.control().mean,
        f64::from(data.control().n),
        &data.treatment_means(),
        &sizes,
        data.s(),
        delta,
    );

    // T_0 is taken as 0, so a step-down that never fails stops at dose 1.
    let mut med = None;
    for j in (1..=k).rev() {
        if tail_min[j - 1] > t {
            med = Some(j);
        } else {
            break;
        }
    }

    let decision = MedDecision::from_first_exceedance(MedMethod::HsuBerger, tail_min, vec![t; k]);
    debug_assert_eq!(decision.med, med);
    Ok(decision)
}

/// Whether Hsu–Berger's `MED = 1` region is inside the step-up `R_1` here.
///
/// Only meaningful for balanced designs (`n_1 = ... = n_k`); anything else is
/// an argument error. Returns `true` vacuously when Hsu–Berger does not
/// declare dose 1.
pub fn dominance_check_med1(
    data: &DoseResponseData,
    cv: &CriticalValues,
    delta: f64,
    alpha: f64,
) -> Result<bool> {
    let n1 = data.treatments()[0].n;
    if data.treatments().iter().any(|g| g.n != n1) {
        return Err(argument(
            "dominance check needs equal treatment group sizes",
        ));
    }
    let hb = hsu_berger_med(data, delta, alpha)?;
    if hb.med != Some(1) {
        return Ok(true);
    }
    let step_up = step_up_identify_med(data, cv, delta)?;
    Ok(step_up.statistics[0] > step_up.cutoffs[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::CalibrationConfig;
    use crate::summary::GroupSummary;

    pub(crate) fn reference_data() -> DoseResponseData {
        let means = [25.5, 23.9, 27.7, 33.4, 40.5, 57.9, 74.4, 73.4, 73.5, 76.2];
        let sds = [2.6, 4.0, 3.3, 2.3, 10.5, 9.9, 14.6, 7.6, 4.5, 7.9];
        let groups = means
            .iter()
            .zip(sds)
            .enumerate()
            .map(|(i, (&m, sd))| GroupSummary::new(i.to_string(), 6, m, Some(sd)).unwrap())
            .collect();
        DoseResponseData::from_summaries(groups).unwrap()
    }

    fn reference_cutoffs() -> CriticalValues {
        let config = CalibrationConfig::new(0.05, 6.5, vec![6; 10], 50, 10_000, 0).unwrap();
        let c = vec![
            0.968, 1.022, 1.046, 1.046, 1.034, 1.043, 1.044, 1.047, 1.030,
        ];
        CriticalValues::new(config, c, vec![0.0; 9]).unwrap()
    }

    #[test]
    fn example_step_up() {
        let d = step_up_identify_med(&reference_data(), &reference_cutoffs(), 6.5).unwrap();
        let expected = [-1.045, -0.555, 0.181, 1.097];
        for (s, e) in d.statistics.iter().zip(expected) {
            assert!((s - e).abs() < 0.005, "{s} vs {e}");
        }
        assert_eq!(d.med, Some(4));
        assert_eq!(d.rejected, vec![4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn example_hsu_berger() {
        let d = hsu_berger_med(&reference_data(), 6.5, 0.05).unwrap();
        assert_eq!(d.med, Some(4));
        // Dose 4 is the tail minimum from 4 upward; 8.5 / (S sqrt(1/3)).
        assert!((d.statistics[3] - 1.899).abs() < 0.001);
        assert!((d.statistics[2] - 0.313).abs() < 0.001);
        assert!((d.cutoffs[0] - 1.676).abs() < 0.001);
    }

    #[test]
    fn nothing_identified() {
        let d = step_up_identify_med(&reference_data(), &reference_cutoffs(), 1000.0).unwrap();
        assert_eq!(d.med, None);
        assert!(d.rejected.is_empty());

        let d = reference_data();
        let treatments = d
            .treatments()
            .iter()
            .map(|g| GroupSummary {
                mean: d.control().mean,
                ..g.clone()
            })
            .collect();
        let flat = DoseResponseData::new(d.control().clone(), treatments, d.s(), d.nu()).unwrap();
        assert_eq!(hsu_berger_med(&flat, 0.0, 0.05).unwrap().med, None);
    }

    #[test]
    fn first_step_rejects_everything() {
        let d = step_up_identify_med(&reference_data(), &reference_cutoffs(), -20.0).unwrap();
        assert_eq!(d.med, Some(1));
        assert_eq!(d.rejected, (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn ties_do_not_reject() {
        assert_eq!(first_exceedance(&[1.0, 2.0], &[1.0, 2.0]), None);
        assert_eq!(
            rejected_by_union(&[1.0, 2.0], &[1.0, 2.0]),
            Vec::<usize>::new()
        );
        assert_eq!(first_exceedance(&[0.0, 2.5], &[1.0, 2.0]), Some(2));
    }

    #[test]
    fn design_mismatch() {
        let config = CalibrationConfig::new(0.05, 6.5, vec![6; 9], 50, 1000, 0).unwrap();
        let cv = CriticalValues::new(config, vec![1.0; 8], vec![0.0; 8]).unwrap();
        assert!(matches!(
            step_up_identify_med(&reference_data(), &cv, 6.5),
            Err(Error::DesignMismatch(_))
        ));
        let config = CalibrationConfig::new(0.05, 6.5, vec![6; 10], 49, 1000, 0).unwrap();
        let cv = CriticalValues::new(config, vec![1.0; 9], vec![0.0; 9]).unwrap();
        assert!(matches!(
            step_up_identify_med(&reference_data(), &cv, 6.5),
            Err(Error::DesignMismatch(_))
        ));
    }

    #[test]
    fn dominance_on_example() {
        assert!(dominance_check_med1(&reference_data(), &reference_cutoffs(), 6.5, 0.05).unwrap());
        // Small delta: Hsu–Berger declares dose 1, so the check is not vacuous.
        assert_eq!(hsu_berger_med(&reference_data(), -20.0, 0.05).unwrap().med, Some(1));
        assert!(dominance_check_med1(&reference_data(), &reference_cutoffs(), -20.0, 0.05).unwrap());
    }

    #[test]
    fn dominance_requires_balance() {
        let d = reference_data();
        let mut treatments = d.treatments().to_vec();
        treatments[2].n = 7;
        let unbalanced =
            DoseResponseData::new(d.control().clone(), treatments, d.s(), d.nu()).unwrap();
        assert!(matches!(
            dominance_check_med1(&unbalanced, &reference_cutoffs(), 6.5, 0.05),
            Err(Error::Argument(_))
        ));
    }
}
