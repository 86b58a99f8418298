//! Weighted isotonic (nondecreasing) regression of group means.
//!
//! Three interchangeable fitters are provided:
//!
//! * [`sdmmsa_fit`] repeatedly selects the maximal tail mean and fixes the
//!   rightmost block, then recurses on the remaining prefix.
//! * [`pava_fit`] pools adjacent violators until the sequence is monotone.
//! * [`oracle_fit`] enumerates every partition into consecutive blocks and
//!   returns the feasible one with the smallest weighted squared error.
//!
//! All three return the weighted least-squares projection onto the monotone
//! cone, so they agree up to rounding. The first is the production path; the
//! others exist for cross-checking.
//!
//! Dose indices in this module are 1-based: group `i` of `k` is stored at
//! position `i - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

/// Largest `k` accepted by [`oracle_fit`] (it visits `2^(k-1)` partitions).
pub const ORACLE_MAX_GROUPS: usize = 20;

/// Group means paired with positive weights (sample sizes).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMeans {
    means: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedMeans {
    pub fn new(means: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(argument("at least one group mean is required"));
        }
        if means.len() != weights.len() {
            return Err(argument(format!(
                "{} means but {} weights",
                means.len(),
                weights.len()
            )));
        }
        if let Some(i) = means.iter().position(|m| !m.is_finite()) {
            return Err(argument(format!("mean of group {} is not finite", i + 1)));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(argument(format!(
                "weight of group {} must be positive and finite",
                i + 1
            )));
        }
        Ok(Self { means, weights })
    }

    /// Every group gets the same weight.
    pub fn balanced(means: Vec<f64>, weight: f64) -> Result<Self> {
        let weights = vec![weight; means.len()];
        Self::new(means, weights)
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A maximal run of doses `first..=last` sharing one fitted value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub first: usize,
    pub last: usize,
    pub mean: f64,
}

impl Block {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, dose: usize) -> bool {
        (self.first..=self.last).contains(&dose)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.first == self.last {
            write!(f, "[{}]", self.first)
        } else {
            write!(f, "[{},{}]", self.first, self.last)
        }
    }
}

/// Fitted nondecreasing means and the level sets that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicFit {
    fitted: Vec<f64>,
    // Right-to-left, in the order the step-down selection discovers them.
    blocks: Vec<Block>,
}

impl IsotonicFit {
    fn from_blocks_right_to_left(k: usize, blocks: Vec<Block>) -> Self {
        let mut fitted = vec![0.0; k];
        for b in &blocks {
            fitted[b.first - 1..b.last].fill(b.mean);
        }
        Self { fitted, blocks }
    }

    /// Blocks are the maximal runs of exactly equal fitted values.
    fn from_fitted(fitted: Vec<f64>) -> Self {
        let mut blocks = Vec::new();
        let mut last = fitted.len();
        while last > 0 {
            let value = fitted[last - 1];
            let mut first = last;
            while first > 1 && fitted[first - 2] == value {
                first -= 1;
            }
            blocks.push(Block {
                first,
                last,
                mean: value,
            });
            last = first - 1;
        }
        Self { fitted, blocks }
    }

    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    pub fn into_fitted(self) -> Vec<f64> {
        self.fitted
    }

    pub fn len(&self) -> usize {
        self.fitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitted.is_empty()
    }

    /// Blocks from the highest dose down, i.e. discovery order.
    pub fn blocks_right_to_left(&self) -> &[Block] {
        &self.blocks
    }

    /// Blocks from dose 1 upward.
    pub fn partition(&self) -> Vec<Block> {
        self.blocks.iter().rev().copied().collect()
    }

    pub fn block_means(&self) -> Vec<f64> {
        self.partition().iter().map(|b| b.mean).collect()
    }

    /// 1-based block number (counted from dose 1) for every dose.
    pub fn block_ids(&self) -> Vec<usize> {
        let mut ids = vec![0; self.fitted.len()];
        for (id, b) in self.partition().iter().enumerate() {
            ids[b.first - 1..b.last].fill(id + 1);
        }
        ids
    }

    /// The partition written as a union, highest block first, e.g. `[9]∪[6,8]∪[5]`.
    pub fn partition_string(&self) -> String {
        self.blocks
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("∪")
    }
}

/// Which algorithm computes the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    #[default]
    Sdmmsa,
    Pava,
    Oracle,
}

impl FitMethod {
    pub fn fit(self, data: &WeightedMeans) -> Result<IsotonicFit> {
        match self {
            FitMethod::Sdmmsa => Ok(sdmmsa_fit(data)),
            FitMethod::Pava => Ok(pava_fit(data)),
            FitMethod::Oracle => oracle_fit(data),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FitMethod::Sdmmsa => "sdmmsa",
            FitMethod::Pava => "pava",
            FitMethod::Oracle => "oracle",
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Weighted mean of the raw means over doses `first..=last` (1-based, inclusive).
pub fn combined_mean(data: &WeightedMeans, first: usize, last: usize) -> Result<f64> {
    let k = data.len();
    if first == 0 || first > last || last > k {
        return Err(argument(format!(
            "dose range [{first}, {last}] is not within 1..={k}"
        )));
    }
    Ok(weighted_mean(
        &data.means[first - 1..last],
        &data.weights[first - 1..last],
    ))
}

fn weighted_mean(means: &[f64], weights: &[f64]) -> f64 {
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for (m, w) in means.iter().zip(weights) {
        num.add(w * m);
        den.add(*w);
    }
    num.value() / den.value()
}

/// Tail means this close (relative) to the maximum count as tied. Pooling
/// equal means can round a few ulps below the means themselves.
const TIE_ULPS: f64 = 8.0;

/// Step-down maximum-mean selection on raw slices.
///
/// Calls `visit(first, last, mean)` (0-based, inclusive) once per block,
/// highest block first. Ties among tail means go to the smallest start index.
#[inline]
pub(crate) fn sdmmsa_blocks(
    means: &[f64],
    weights: &[f64],
    mut visit: impl FnMut(usize, usize, f64),
) {
    let mut end = means.len();
    while end > 0 {
        let mut num = CompensatedSum::default();
        let mut den = CompensatedSum::default();
        let mut max = f64::NEG_INFINITY;
        let mut best = f64::NEG_INFINITY;
        let mut start = end - 1;
        for j in (0..end).rev() {
            num.add(weights[j] * means[j]);
            den.add(weights[j]);
            let tail = num.value() / den.value();
            max = max.max(tail);
            if tail >= max - TIE_ULPS * f64::EPSILON * max.abs() {
                best = tail;
                start = j;
            }
        }
        visit(start, end - 1, best);
        end = start;
    }
}

/// Writes the step-down fit of `means` into `out` without building a partition.
#[inline]
pub(crate) fn sdmmsa_fill(means: &[f64], weights: &[f64], out: &mut [f64]) {
    sdmmsa_blocks(means, weights, |first, last, mean| {
        out[first..=last].fill(mean);
    });
}

/// Isotonic fit by step-down maximum-mean selection.
pub fn sdmmsa_fit(data: &WeightedMeans) -> IsotonicFit {
    let mut blocks = Vec::new();
    sdmmsa_blocks(&data.means, &data.weights, |first, last, mean| {
        blocks.push(Block {
            first: first + 1,
            last: last + 1,
            mean,
        })
    });
    IsotonicFit::from_blocks_right_to_left(data.len(), blocks)
}

/// Isotonic fit by pooling adjacent violators.
///
/// The leftmost violating pair is pooled first, together with the maximal
/// constant runs on either side of it.
pub fn pava_fit(data: &WeightedMeans) -> IsotonicFit {
    let k = data.len();
    let mut current = data.means.clone();
    while let Some(j) = (0..k.saturating_sub(1)).find(|&j| current[j] > current[j + 1]) {
        let mut lo = j;
        while lo > 0 && current[lo - 1] == current[j] {
            lo -= 1;
        }
        let mut hi = j + 1;
        while hi + 1 < k && current[hi + 1] == current[j + 1] {
            hi += 1;
        }
        // A constant run is always a union of earlier pools, so pooling the
        // raw means over it gives the same value with less rounding.
        let pooled = weighted_mean(&data.means[lo..=hi], &data.weights[lo..=hi]);
        current[lo..=hi].fill(pooled);
    }
    IsotonicFit::from_fitted(current)
}

/// Exact monotone least-squares fit by exhaustive enumeration.
///
/// Only for cross-checking: the cost is `O(k * 2^(k-1))`.
pub fn oracle_fit(data: &WeightedMeans) -> Result<IsotonicFit> {
    let k = data.len();
    if k > ORACLE_MAX_GROUPS {
        return Err(Error::Capacity {
            groups: k,
            max: ORACLE_MAX_GROUPS,
        });
    }
    let means = data.means();
    let weights = data.weights();

    // (first, last, mean), 0-based.
    type Partition = Vec<(usize, usize, f64)>;
    let mut best: Option<(f64, Partition)> = None;
    let mut blocks = Vec::with_capacity(k);
    for cuts in 0u32..(1u32 << (k - 1)) {
        // Bit b set: a block boundary falls between positions b and b + 1.
        blocks.clear();
        let mut start = 0;
        for pos in 0..k {
            let closes = pos == k - 1 || cuts & (1 << pos) != 0;
            if closes {
                let (mut num, mut den) = (0.0, 0.0);
                for h in start..=pos {
                    num += weights[h] * means[h];
                    den += weights[h];
                }
                blocks.push((start, pos, num / den));
                start = pos + 1;
            }
        }
        if blocks.windows(2).any(|w| w[0].2 > w[1].2) {
            continue;
        }
        let sse: f64 = blocks
            .iter()
            .map(|&(first, last, m)| {
                (first..=last)
                    .map(|h| weights[h] * (means[h] - m).powi(2))
                    .sum::<f64>()
            })
            .sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, blocks.clone()));
        }
    }

    // The single-block partition is always feasible.
    let (_, chosen) = best.expect("at least one feasible partition");
    let blocks = chosen
        .into_iter()
        .rev()
        .map(|(first, last, mean)| Block {
            first: first + 1,
            last: last + 1,
            mean,
        })
        .collect();
    Ok(IsotonicFit::from_blocks_right_to_left(k, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE_MEANS: [f64; 9] = [23.9, 27.7, 33.4, 40.5, 57.9, 74.4, 73.4, 73.5, 76.2];

    fn reference_data() -> WeightedMeans {
        WeightedMeans::balanced(REFERENCE_MEANS.to_vec(), 6.0).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn combined_mean_examples() {
        let d = reference_data();
        let m = combined_mean(&d, 6, 8).unwrap();
        assert!((m - 221.3 / 3.0).abs() < 1e-12);
        assert_eq!(format!("{m:.2}"), "73.77");
        assert_eq!(combined_mean(&d, 4, 4).unwrap(), 40.5);

        let d = WeightedMeans::new(vec![1.0, 3.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(combined_mean(&d, 1, 2).unwrap(), 2.5);
    }

    #[test]
    fn combined_mean_rejects_bad_ranges() {
        let d = reference_data();
        assert!(matches!(combined_mean(&d, 0, 2), Err(Error::Argument(_))));
        assert!(matches!(combined_mean(&d, 3, 2), Err(Error::Argument(_))));
        assert!(matches!(combined_mean(&d, 1, 10), Err(Error::Argument(_))));
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(WeightedMeans::new(vec![], vec![]).is_err());
        assert!(WeightedMeans::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(WeightedMeans::new(vec![1.0], vec![0.0]).is_err());
        assert!(WeightedMeans::new(vec![1.0], vec![-2.0]).is_err());
        assert!(WeightedMeans::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn sdmmsa_reference() {
        let fit = sdmmsa_fit(&reference_data());
        let pooled = (74.4 + 73.4 + 73.5) / 3.0;
        let expected = [23.9, 27.7, 33.4, 40.5, 57.9, pooled, pooled, pooled, 76.2];
        assert_close(fit.fitted(), &expected, 1e-10);
        assert_eq!(fit.partition_string(), "[9]∪[6,8]∪[5]∪[4]∪[3]∪[2]∪[1]");
        assert_eq!(fit.blocks_right_to_left().len(), 7);
        assert_eq!(fit.block_ids(), vec![1, 2, 3, 4, 5, 6, 6, 6, 7]);
    }

    #[test]
    fn sdmmsa_identity_on_increasing_input() {
        let d = WeightedMeans::new(vec![-1.0, 0.5, 2.0, 7.0], vec![3.0, 1.0, 2.0, 5.0]).unwrap();
        let fit = sdmmsa_fit(&d);
        assert_eq!(fit.fitted(), d.means());
        assert!(fit.partition().iter().all(|b| b.len() == 1));
    }

    #[test]
    fn two_point_pools() {
        let d = WeightedMeans::new(vec![3.0, 1.0], vec![1.0, 1.0]).unwrap();
        let fit = sdmmsa_fit(&d);
        assert_eq!(fit.fitted(), &[2.0, 2.0]);
        assert_eq!(fit.partition().len(), 1);

        let d = WeightedMeans::new(vec![3.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(oracle_fit(&d).unwrap().fitted(), &[1.5, 1.5]);
        assert_eq!(pava_fit(&d).fitted(), &[1.5, 1.5]);
    }

    #[test]
    fn pava_examples() {
        let fit = pava_fit(&reference_data());
        assert_close(fit.fitted(), sdmmsa_fit(&reference_data()).fitted(), 1e-10);
        assert_eq!(fit.partition_string(), "[9]∪[6,8]∪[5]∪[4]∪[3]∪[2]∪[1]");

        let d = WeightedMeans::balanced(vec![5.0, 4.0, 3.0], 1.0).unwrap();
        assert_eq!(pava_fit(&d).fitted(), &[4.0, 4.0, 4.0]);

        let inc = WeightedMeans::balanced(vec![1.0, 2.0, 3.0], 2.0).unwrap();
        assert_eq!(pava_fit(&inc).fitted(), inc.means());
    }

    #[test]
    fn oracle_examples() {
        let fit = oracle_fit(&reference_data()).unwrap();
        assert_close(fit.fitted(), sdmmsa_fit(&reference_data()).fitted(), 1e-10);

        let single = WeightedMeans::new(vec![4.2], vec![3.0]).unwrap();
        assert_eq!(oracle_fit(&single).unwrap().fitted(), &[4.2]);
        assert_eq!(sdmmsa_fit(&single).fitted(), &[4.2]);
        assert_eq!(pava_fit(&single).fitted(), &[4.2]);
    }

    #[test]
    fn oracle_capacity() {
        let d = WeightedMeans::balanced(vec![0.0; ORACLE_MAX_GROUPS + 1], 1.0).unwrap();
        assert_eq!(
            oracle_fit(&d),
            Err(Error::Capacity {
                groups: 21,
                max: ORACLE_MAX_GROUPS
            })
        );
    }

    #[test]
    fn ties_go_to_smallest_index() {
        // Tail means from the right: 1, 1; the tie merges both doses.
        let d = WeightedMeans::balanced(vec![1.0, 1.0], 1.0).unwrap();
        let fit = sdmmsa_fit(&d);
        assert_eq!(fit.partition().len(), 1);
        assert_eq!(fit.partition_string(), "[1,2]");
    }

    #[test]
    fn rounded_ties_still_merge() {
        for weights in [
            vec![3.0, 7.0],
            vec![1.0, 9.0, 4.0, 6.0],
            vec![10.0, 3.0, 3.0],
        ] {
            let k = weights.len();
            let d = WeightedMeans::new(vec![8.408123701970675; k], weights).unwrap();
            assert_eq!(sdmmsa_fit(&d).partition().len(), 1);
            let d = WeightedMeans::new(vec![-1.7504965234314849; k], d.weights().to_vec()).unwrap();
            assert_eq!(sdmmsa_fit(&d).partition().len(), 1);
        }
    }

    #[test]
    fn fill_matches_fit() {
        let d = reference_data();
        let mut out = vec![0.0; d.len()];
        sdmmsa_fill(d.means(), d.weights(), &mut out);
        assert_eq!(out, sdmmsa_fit(&d).fitted());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }
}
