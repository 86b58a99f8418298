//! Sufficient statistics of the one-way normal layout: group means, the
//! pooled standard deviation `S`, and its error degrees of freedom `nu`.

use serde::{Deserialize, Serialize};

use crate::error::{argument, data, Result};
use crate::isotonic::{CompensatedSum, WeightedMeans};

/// One dose group reduced to size, mean and (optionally) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub n: u32,
    pub mean: f64,
    pub sd: Option<f64>,
}

impl GroupSummary {
    pub fn new(label: impl Into<String>, n: u32, mean: f64, sd: Option<f64>) -> Result<Self> {
        let label = label.into();
        if n == 0 {
            return Err(data(format!("group '{label}' has sample size 0")));
        }
        if !mean.is_finite() {
            return Err(data(format!("group '{label}' has a non-finite mean")));
        }
        if let Some(sd) = sd {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(data(format!("group '{label}' has an invalid sd {sd}")));
            }
            if n < 2 {
                return Err(data(format!(
                    "group '{label}' reports an sd with a single observation"
                )));
            }
        }
        Ok(Self { label, n, mean, sd })
    }
}

/// A control group, `k >= 1` ordered treatment groups, and the pooled error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseResponseData {
    control: GroupSummary,
    treatments: Vec<GroupSummary>,
    s: f64,
    nu: u32,
}

impl DoseResponseData {
    pub fn new(
        control: GroupSummary,
        treatments: Vec<GroupSummary>,
        s: f64,
        nu: u32,
    ) -> Result<Self> {
        if treatments.is_empty() {
            return Err(data("at least one treatment group is required"));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(data(format!(
                "pooled standard deviation {s} must be positive"
            )));
        }
        if nu == 0 {
            return Err(data("error degrees of freedom must be positive"));
        }
        Ok(Self {
            control,
            treatments,
            s,
            nu,
        })
    }

    /// First group is the control; `S` and `nu` are pooled from the reported sds.
    pub fn from_summaries(groups: Vec<GroupSummary>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(data(
                "need a control group and at least one treatment group",
            ));
        }
        let (s, nu) = pool_from_summaries(&groups)?;
        let mut groups = groups.into_iter();
        let control = groups.next().expect("checked length");
        Self::new(control, groups.collect(), s, nu)
    }

    pub fn control(&self) -> &GroupSummary {
        &self.control
    }

    pub fn treatments(&self) -> &[GroupSummary] {
        &self.treatments
    }

    /// Number of treatment groups.
    pub fn k(&self) -> usize {
        self.treatments.len()
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    /// Sample sizes `n_0..n_k`, control first.
    pub fn sizes(&self) -> Vec<u32> {
        std::iter::once(&self.control)
            .chain(&self.treatments)
            .map(|g| g.n)
            .collect()
    }

    pub fn treatment_means(&self) -> Vec<f64> {
        self.treatments.iter().map(|g| g.mean).collect()
    }

    pub fn weighted_treatments(&self) -> WeightedMeans {
        WeightedMeans::new(
            self.treatment_means(),
            self.treatments.iter().map(|g| f64::from(g.n)).collect(),
        )
        .expect("group summaries are validated on construction")
    }

    /// Adds `shift` to every group mean, control included.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.control.mean += shift;
        for g in &mut out.treatments {
            g.mean += shift;
        }
        out
    }

    /// Multiplies means, sds and `S` by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for g in std::iter::once(&mut out.control).chain(&mut out.treatments) {
            g.mean *= factor;
            g.sd = g.sd.map(|sd| sd * factor);
        }
        out.s *= factor;
        out
    }
}

/// Pools per-group sds: `nu = sum(n_i - 1)`, `s^2 = sum((n_i - 1) sd_i^2) / nu`.
pub fn pool_from_summaries(groups: &[GroupSummary]) -> Result<(f64, u32)> {
    if groups.is_empty() {
        return Err(data("no groups to pool"));
    }
    let mut ss = CompensatedSum::default();
    let mut nu: u32 = 0;
    for g in groups {
        let sd =
            g.sd.ok_or_else(|| data(format!("group '{}' has no standard deviation", g.label)))?;
        let df = g.n - 1;
        ss.add(f64::from(df) * sd * sd);
        nu += df;
    }
    if nu == 0 {
        return Err(data("no error degrees of freedom"));
    }
    Ok(((ss.value() / f64::from(nu)).sqrt(), nu))
}

/// Per-group summaries of raw `(group, value)` observations, group 0 first.
pub fn summarize_groups(observations: &[(usize, f64)]) -> Result<Vec<GroupSummary>> {
    reduce_groups(observations).map(|(groups, _)| groups)
}

fn reduce_groups(observations: &[(usize, f64)]) -> Result<(Vec<GroupSummary>, f64)> {
    let Some(k) = observations.iter().map(|&(g, _)| g).max() else {
        return Err(data("no observations"));
    };
    if k == 0 {
        return Err(data("observations contain only the control group"));
    }
    if let Some(&(g, _)) = observations.iter().find(|(_, v)| !v.is_finite()) {
        return Err(argument(format!("non-finite observation in group {g}")));
    }

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); k + 1];
    for &(g, v) in observations {
        values[g].push(v);
    }
    if let Some(g) = values.iter().position(Vec::is_empty) {
        return Err(data(format!("group {g} has no observations")));
    }

    let mut groups = Vec::with_capacity(k + 1);
    let mut within = CompensatedSum::default();
    for (g, ys) in values.iter().enumerate() {
        let n = ys.len() as u32;
        let mut sum = CompensatedSum::default();
        ys.iter().for_each(|&y| sum.add(y));
        let mean = sum.value() / f64::from(n);
        let mut ss = CompensatedSum::default();
        ys.iter().for_each(|&y| ss.add((y - mean) * (y - mean)));
        within.add(ss.value());
        let sd = (n >= 2).then(|| (ss.value() / f64::from(n - 1)).sqrt());
        groups.push(GroupSummary::new(g.to_string(), n, mean, sd)?);
    }
    Ok((groups, within.value()))
}

/// Reduces raw `(group, value)` observations, group 0 being the control.
///
/// `nu = sum(n_i) - (k + 1)` and `S^2` is the within-group sum of squares over `nu`.
pub fn summarize_raw(observations: &[(usize, f64)]) -> Result<DoseResponseData> {
    let (groups, within) = reduce_groups(observations)?;
    let total_n: u32 = groups.iter().map(|g| g.n).sum();
    let nu = total_n - groups.len() as u32;
    if nu == 0 {
        return Err(data(
            "every group has a single observation; no variance estimate",
        ));
    }
    let s = (within / f64::from(nu)).sqrt();
    if s <= 0.0 {
        return Err(data("all observations equal their group means; S is zero"));
    }
    let mut groups = groups.into_iter();
    let control = groups.next().expect("k >= 1");
    DoseResponseData::new(control, groups.collect(), s, nu)
}
