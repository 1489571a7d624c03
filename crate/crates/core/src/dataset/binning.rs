//! Optimal 1-D k-means discretization.
//!
//! Values are sorted and collapsed to distinct points with multiplicities;
//! the partition into `k` contiguous groups minimizing the within-group sum
//! of squares is found by dynamic programming. Each layer of the DP is
//! solved by divide and conquer over the monotone split points, giving
//! `O(k d log d)` for `d` distinct values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    /// `ranges[j]` is the smallest and largest fitted value in bin `j`.
    pub ranges: Vec<(f64, f64)>,
    /// Boundaries between consecutive bins: midpoints of the gaps.
    pub cuts: Vec<f64>,
}

impl Binning {
    pub fn n_bins(&self) -> usize {
        self.ranges.len()
    }

    /// Bin of an arbitrary value; values on a cut go to the lower bin.
    pub fn assign(&self, x: f64) -> usize {
        self.cuts.partition_point(|&c| c < x)
    }
}

/// Prefix sums over sorted distinct values, centered for stability.
struct Prefix {
    w: Vec<f64>,
    s: Vec<f64>,
    q: Vec<f64>,
}

impl Prefix {
    fn new(points: &[(f64, f64)]) -> Self {
        let total: f64 = points.iter().map(|p| p.1).sum();
        let mean = points.iter().map(|p| p.0 * p.1).sum::<f64>() / total;
        let mut w = vec![0.0];
        let mut s = vec![0.0];
        let mut q = vec![0.0];
        for &(x, c) in points {
            let y = x - mean;
            w.push(w.last().unwrap() + c);
            s.push(s.last().unwrap() + c * y);
            q.push(q.last().unwrap() + c * y * y);
        }
        Prefix { w, s, q }
    }

    /// Within-group sum of squares of points `i..j` (exclusive end).
    fn cost(&self, i: usize, j: usize) -> f64 {
        let w = self.w[j] - self.w[i];
        if w <= 0.0 {
            return 0.0;
        }
        let s = self.s[j] - self.s[i];
        let q = self.q[j] - self.q[i];
        (q - s * s / w).max(0.0)
    }
}

/// Fills `cur[j]` for `j in lo..=hi` given the previous layer, knowing the
/// optimal start of the last group lies in `opt_lo..=opt_hi`.
#[allow(clippy::too_many_arguments)]
fn solve_layer(
    prefix: &Prefix,
    prev: &[f64],
    cur: &mut [f64],
    arg: &mut [usize],
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    if lo > hi {
        return;
    }
    let mid = (lo + hi) / 2;
    let mut best = f64::INFINITY;
    let mut best_i = opt_lo;
    // last group is points i..mid, previous groups cover 0..i
    for (i, &p) in prev
        .iter()
        .enumerate()
        .take(opt_hi.min(mid - 1) + 1)
        .skip(opt_lo)
    {
        let v = p + prefix.cost(i, mid);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    cur[mid] = best;
    arg[mid] = best_i;
    if mid > lo {
        solve_layer(prefix, prev, cur, arg, lo, mid - 1, opt_lo, best_i);
    }
    solve_layer(prefix, prev, cur, arg, mid + 1, hi, best_i, opt_hi);
}

/// Group boundaries (start index of each group) of the optimal partition of
/// `points` into `k` contiguous groups.
fn optimal_starts(points: &[(f64, f64)], k: usize) -> Vec<usize> {
    let d = points.len();
    let prefix = Prefix::new(points);
    // layer c: cost of covering the first j points with c+1 groups
    let mut prev: Vec<f64> = (0..=d).map(|j| prefix.cost(0, j)).collect();
    let mut args: Vec<Vec<usize>> = Vec::with_capacity(k);
    args.push(vec![0; d + 1]);
    for c in 1..k {
        let mut cur = vec![f64::INFINITY; d + 1];
        let mut arg = vec![0; d + 1];
        // at least c+1 points are needed for c+1 nonempty groups
        solve_layer(&prefix, &prev, &mut cur, &mut arg, c + 1, d, c, d - 1);
        prev = cur;
        args.push(arg);
    }
    let mut starts = vec![0; k];
    let mut end = d;
    for c in (0..k).rev() {
        let s = args[c][end];
        starts[c] = if c == 0 { 0 } else { s };
        end = starts[c];
    }
    starts
}

/// Discretizes `values` into at most `k` bins by optimal 1-D k-means.
/// Returns the fitted binning and the bin of every input value.
pub fn bin_numeric(column: &str, values: &[f64], k: usize) -> Result<(Binning, Vec<usize>)> {
    if values.is_empty() {
        return Err(Error::Empty("numeric column has no values"));
    }
    if k == 0 {
        return Err(Error::InvalidInstance(
            "bin count must be at least 1".into(),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            column: column.to_string(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for x in sorted {
        match points.last_mut() {
            Some(p) if p.0 == x => p.1 += 1.0,
            _ => points.push((x, 1.0)),
        }
    }
    let k = k.min(points.len());
    let starts = optimal_starts(&points, k);
    let mut ranges = Vec::with_capacity(k);
    for (c, &s) in starts.iter().enumerate() {
        let e = starts.get(c + 1).copied().unwrap_or(points.len());
        ranges.push((points[s].0, points[e - 1].0));
    }
    let cuts = ranges.windows(2).map(|w| (w[0].1 + w[1].0) / 2.0).collect();
    let binning = Binning { ranges, cuts };
    let assignment = values.iter().map(|&v| binning.assign(v)).collect();
    Ok((binning, assignment))
}
