//! Time-to-event datasets: ingestion, validation, sorting, threshold
//! binarization, synthetic benchmark generation, and CV splits.
//!
//! The central structure downstream code works with is
//! [`SortedSurvivalDataset`]: rows ordered by nonincreasing observation
//! time so that every risk set — the samples still under observation at
//! an event time — is a contiguous prefix of the stored order. Ties are
//! grouped: samples with equal times belong to each other's risk sets,
//! so the prefix for a row extends to the end of its tie group.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// A validated time-to-event dataset in its original row order.
#[derive(Debug, Clone)]
pub struct SurvivalDataset {
    x: Array2<f64>,
    times: Vec<f64>,
    events: Vec<bool>,
    feature_names: Vec<String>,
}

impl SurvivalDataset {
    /// Build a dataset, enforcing the structural invariants: at least one
    /// row and one feature, finite feature values, nonnegative times,
    /// and at least one observed event.
    pub fn new(
        x: Array2<f64>,
        times: Vec<f64>,
        events: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        if p == 0 {
            return Err(Error::Validation("dataset has no features".into()));
        }
        if times.len() != n || events.len() != n {
            return Err(Error::Validation(format!(
                "length mismatch: {} rows, {} times, {} events",
                n,
                times.len(),
                events.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::Validation(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                p
            )));
        }
        if let Some((i, j)) = x.indexed_iter().find(|(_, v)| !v.is_finite()).map(|(ij, _)| ij) {
            return Err(Error::Validation(format!(
                "non-finite feature value at row {i}, column {j}"
            )));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Validation(format!(
                "observation time at row {i} is negative or non-finite"
            )));
        }
        if !events.iter().any(|&e| e) {
            return Err(Error::Validation(
                "no events: every row is censored, the partial likelihood is constant".into(),
            ));
        }
        Ok(Self {
            x,
            times,
            events,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    /// Select a subset of rows (for CV folds). Indices may be in any
    /// order; rows are emitted in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<SurvivalDataset> {
        let mut x = Array2::zeros((indices.len(), self.p()));
        let mut times = Vec::with_capacity(indices.len());
        let mut events = Vec::with_capacity(indices.len());
        for (out, &i) in indices.iter().enumerate() {
            if i >= self.n() {
                return Err(Error::Validation(format!("row index {i} out of range")));
            }
            x.row_mut(out).assign(&self.x.row(i));
            times.push(self.times[i]);
            events.push(self.events[i]);
        }
        SurvivalDataset::new(x, times, events, self.feature_names.clone())
    }
}

/// Model coefficients bound to the feature names they were fit against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl CoefficientVector {
    pub fn zeros(feature_names: Vec<String>) -> Self {
        let p = feature_names.len();
        Self {
            values: vec![0.0; p],
            feature_names,
        }
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A dataset reordered by nonincreasing observation time, with tie-group
/// indexing so each risk set is a contiguous prefix.
///
/// Features are stored column-major: the per-coordinate passes all walk a
/// single feature column over every row, and they dominate the runtime.
#[derive(Debug, Clone)]
pub struct SortedSurvivalDataset {
    cols: Vec<f64>,
    times: Vec<f64>,
    events: Vec<bool>,
    feature_names: Vec<String>,
    /// sorted position -> original row index
    permutation: Vec<usize>,
    /// start of each row's tie group (first sorted index with the same time)
    block_start: Vec<usize>,
    /// exclusive end of each row's tie group; the risk set of row i is [0, block_end[i])
    block_end: Vec<usize>,
    n_events: usize,
}

/// Sort rows by nonincreasing time (ties broken by original row index,
/// ascending) and index the tie groups.
pub fn sort_and_index(dataset: &SurvivalDataset) -> SortedSurvivalDataset {
    let n = dataset.n();
    let p = dataset.p();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        dataset.times[b]
            .partial_cmp(&dataset.times[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut cols = vec![0.0; n * p];
    for l in 0..p {
        let dst = &mut cols[l * n..(l + 1) * n];
        for (i, &orig) in order.iter().enumerate() {
            dst[i] = dataset.x[(orig, l)];
        }
    }
    let times: Vec<f64> = order.iter().map(|&i| dataset.times[i]).collect();
    let events: Vec<bool> = order.iter().map(|&i| dataset.events[i]).collect();

    let mut block_start = vec![0usize; n];
    let mut block_end = vec![0usize; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && times[end] == times[start] {
            end += 1;
        }
        for i in start..end {
            block_start[i] = start;
            block_end[i] = end;
        }
        start = end;
    }

    let n_events = events.iter().filter(|&&e| e).count();
    SortedSurvivalDataset {
        cols,
        times,
        events,
        feature_names: dataset.feature_names.clone(),
        permutation: order,
        block_start,
        block_end,
        n_events,
    }
}

impl SortedSurvivalDataset {
    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    /// Feature column `l` in sorted row order, contiguous.
    pub fn col(&self, l: usize) -> &[f64] {
        let n = self.n();
        &self.cols[l * n..(l + 1) * n]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// First sorted index sharing row `i`'s time.
    pub fn tie_group_start(&self, i: usize) -> usize {
        self.block_start[i]
    }

    /// Exclusive end of row `i`'s tie group; also the size of its risk set.
    pub fn risk_set_end(&self, i: usize) -> usize {
        self.block_end[i]
    }

    pub fn block_starts(&self) -> &[usize] {
        &self.block_start
    }

    pub fn block_ends(&self) -> &[usize] {
        &self.block_end
    }

    /// Undo the sort, recovering the dataset in its original row order.
    pub fn restore_original(&self) -> SurvivalDataset {
        let n = self.n();
        let p = self.p();
        let mut x = Array2::zeros((n, p));
        let mut times = vec![0.0; n];
        let mut events = vec![false; n];
        for (sorted_pos, &orig) in self.permutation.iter().enumerate() {
            for l in 0..p {
                x[(orig, l)] = self.col(l)[sorted_pos];
            }
            times[orig] = self.times[sorted_pos];
            events[orig] = self.events[sorted_pos];
        }
        SurvivalDataset {
            x,
            times,
            events,
            feature_names: self.feature_names.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion / export
// ---------------------------------------------------------------------------

/// Load a dataset from a headered CSV file. All columns other than the
/// time and event columns become features, in header order.
pub fn load_csv(
    path: impl AsRef<Path>,
    time_column: &str,
    event_column: &str,
) -> Result<SurvivalDataset> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let time_idx = headers
        .iter()
        .position(|h| h == time_column)
        .ok_or_else(|| Error::Schema(format!("missing time column '{time_column}'")))?;
    let event_idx = headers
        .iter()
        .position(|h| h == event_column)
        .ok_or_else(|| Error::Schema(format!("missing event column '{event_column}'")))?;

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != time_idx && i != event_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let p = feature_names.len();
    if p == 0 {
        return Err(Error::Schema("no feature columns in header".into()));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut times = Vec::new();
    let mut events = Vec::new();
    for (row_num, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_num + 1; // 1-based data rows, matching how people read files
        let parse_cell = |idx: usize, column: &str| -> Result<f64> {
            let raw = record.get(idx).ok_or_else(|| Error::Parse {
                row,
                column: column.to_string(),
                message: "missing cell".into(),
            })?;
            let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                row,
                column: column.to_string(),
                message: format!("'{raw}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: column.to_string(),
                    message: format!("non-finite value '{raw}'"),
                });
            }
            Ok(v)
        };

        let t = parse_cell(time_idx, time_column)?;
        let e = parse_cell(event_idx, event_column)?;
        if e != 0.0 && e != 1.0 {
            return Err(Error::Validation(format!(
                "event value {e} at row {row} is outside {{0,1}}"
            )));
        }
        times.push(t);
        events.push(e == 1.0);
        for (i, _) in headers.iter().enumerate() {
            if i != time_idx && i != event_idx {
                rows.push(parse_cell(i, &headers[i])?);
            }
        }
    }

    let n = times.len();
    let x = Array2::from_shape_vec((n, p), rows)
        .map_err(|e| Error::Validation(format!("ragged CSV: {e}")))?;
    SurvivalDataset::new(x, times, events, feature_names)
}

/// Write a dataset to CSV with the given time/event column names appended
/// after the feature columns.
pub fn write_csv(
    dataset: &SurvivalDataset,
    path: impl AsRef<Path>,
    time_column: &str,
    event_column: &str,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = dataset.feature_names.to_vec();
    header.push(time_column.to_string());
    header.push(event_column.to_string());
    writer.write_record(&header)?;
    for i in 0..dataset.n() {
        let mut record: Vec<String> = dataset
            .x
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        record.push(format!("{}", dataset.times[i]));
        record.push(if dataset.events[i] { "1" } else { "0" }.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Threshold binarization
// ---------------------------------------------------------------------------

/// Empirical quantile with linear interpolation between order statistics
/// (the same convention as numpy's default). `sorted` must be ascending.
fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * level;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Replace each continuous column by indicator columns `1[x <= threshold]`
/// at its empirical quantiles. Columns that are already binary (values in
/// {0,1}) pass through unchanged. Thresholds are taken at levels
/// q/(Q+1) for q = 1..=Q, deduplicated, and thresholds that would produce
/// a constant indicator column are dropped.
pub fn binarize_features(
    dataset: &SurvivalDataset,
    quantiles_per_feature: usize,
) -> SurvivalDataset {
    assert!(quantiles_per_feature >= 1, "need at least one quantile");
    let n = dataset.n();

    let mut new_cols: Vec<Vec<f64>> = Vec::new();
    let mut new_names: Vec<String> = Vec::new();
    for l in 0..dataset.p() {
        let col: Vec<f64> = dataset.x.column(l).to_vec();
        if col.iter().all(|&v| v == 0.0 || v == 1.0) {
            new_names.push(dataset.feature_names[l].clone());
            new_cols.push(col);
            continue;
        }
        let mut sorted = col.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (min, max) = (sorted[0], sorted[n - 1]);
        let mut thresholds: Vec<f64> = (1..=quantiles_per_feature)
            .map(|q| empirical_quantile(&sorted, q as f64 / (quantiles_per_feature + 1) as f64))
            .collect();
        thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thresholds.dedup();
        // a threshold below every value or at/above the max yields a constant column
        thresholds.retain(|&t| t >= min && t < max);
        for t in thresholds {
            new_names.push(format!("{}<={}", dataset.feature_names[l], t));
            new_cols.push(col.iter().map(|&v| if v <= t { 1.0 } else { 0.0 }).collect());
        }
    }

    let p = new_cols.len();
    let mut x = Array2::zeros((n, p));
    for (j, c) in new_cols.iter().enumerate() {
        for (i, &v) in c.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    SurvivalDataset {
        x,
        times: dataset.times.clone(),
        events: dataset.events.clone(),
        feature_names: new_names,
    }
}

// ---------------------------------------------------------------------------
// Synthetic benchmark generation
// ---------------------------------------------------------------------------

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n: usize,
    pub p: usize,
    /// AR(1) feature correlation: cov(x_j, x_l) = rho^|j-l|.
    pub rho: f64,
    /// number of nonzero ground-truth coefficients
    pub k: usize,
    /// exponent applied to the sampled death time
    pub s: f64,
    pub seed: u64,
}

/// Ground truth for a synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticGroundTruth {
    pub beta_star: Vec<f64>,
    pub support_star: Vec<usize>,
    pub params: SyntheticParams,
}

/// Generate a correlated-feature survival dataset with k-sparse unit
/// ground-truth coefficients.
///
/// Features are drawn from N(0, Sigma) with Sigma_{jl} = rho^|j-l| via the
/// AR(1) recursion x_j = rho*x_{j-1} + sqrt(1-rho^2)*z_j (same law as a
/// dense Cholesky draw, O(n*p) instead of O(p^3)). The true support sits
/// at the first k multiples of stride = floor(p/k), counting feature
/// positions from 1. Death times are (-ln V / exp(x.beta*))^s with
/// V ~ U(0,1]; censoring times are U(0,1); a row is an event when its
/// death time exceeds its censoring time, and the recorded time is the
/// smaller of the two.
pub fn generate_synthetic(
    params: &SyntheticParams,
) -> Result<(SurvivalDataset, SyntheticGroundTruth)> {
    let SyntheticParams { n, p, rho, k, s, seed } = *params;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Validation(format!("rho must be in (0, 1], got {rho}")));
    }
    if k < 1 || k > p {
        return Err(Error::Validation(format!("k must be in [1, p={p}], got {k}")));
    }
    if !(s > 0.0) {
        return Err(Error::Validation(format!("s must be positive, got {s}")));
    }
    if n == 0 || p == 0 {
        return Err(Error::Validation("n and p must be at least 1".into()));
    }

    let stride = p / k; // >= 1 since k <= p
    let mut beta_star = vec![0.0; p];
    let mut support_star = Vec::with_capacity(k);
    for m in 1..=k {
        let j = m * stride - 1; // positions counted from 1
        beta_star[j] = 1.0;
        support_star.push(j);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ar_noise = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    let mut times = Vec::with_capacity(n);
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let mut prev = 0.0;
        let mut eta = 0.0;
        for j in 0..p {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = if j == 0 { z } else { rho * prev + ar_noise * z };
            x[(i, j)] = v;
            eta += v * beta_star[j];
            prev = v;
        }
        let u: f64 = 1.0 - rng.gen::<f64>(); // in (0, 1]: keeps the log finite
        let death = (-u.ln() / eta.exp()).powf(s);
        let censor: f64 = rng.gen();
        events.push(death > censor);
        times.push(death.min(censor));
    }

    let feature_names = (0..p).map(|j| format!("x{j}")).collect();
    let dataset = SurvivalDataset::new(x, times, events, feature_names)?;
    let truth = SyntheticGroundTruth {
        beta_star,
        support_star,
        params: *params,
    };
    Ok((dataset, truth))
}

// ---------------------------------------------------------------------------
// Cross-validation splits
// ---------------------------------------------------------------------------

/// Partition row indices into `folds` disjoint test sets (sizes differ by
/// at most one) with the complement as training rows. Deterministic for a
/// fixed seed. Errors if any training fold would contain no events.
pub fn kfold_split(
    dataset: &SurvivalDataset,
    folds: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 {
        return Err(Error::Validation(format!("folds must be >= 2, got {folds}")));
    }
    let n = dataset.n();
    if folds > n {
        return Err(Error::Validation(format!(
            "cannot split {n} rows into {folds} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }

    let base = n / folds;
    let extra = n % folds;
    let mut splits = Vec::with_capacity(folds);
    let mut cursor = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut test: Vec<usize> = order[cursor..cursor + size].to_vec();
        cursor += size;
        let mut train: Vec<usize> = order[..cursor - size]
            .iter()
            .chain(order[cursor..].iter())
            .copied()
            .collect();
        test.sort_unstable();
        train.sort_unstable();
        if !train.iter().any(|&i| dataset.events[i]) {
            return Err(Error::Validation(format!(
                "training rows of fold {f} contain no events"
            )));
        }
        splits.push((train, test));
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy(times: &[f64], events: &[bool], col: &[f64]) -> SurvivalDataset {
        let x = Array2::from_shape_vec((col.len(), 1), col.to_vec()).unwrap();
        SurvivalDataset::new(x, times.to_vec(), events.to_vec(), vec!["f0".into()]).unwrap()
    }

    #[test]
    fn rejects_all_censored() {
        let x = array![[0.0], [1.0]];
        let err = SurvivalDataset::new(x, vec![1.0, 2.0], vec![false, false], vec!["f".into()])
            .unwrap_err();
        assert!(err.to_string().contains("no events"));
    }

    #[test]
    fn rejects_non_finite_feature() {
        let x = array![[f64::NAN], [1.0]];
        assert!(SurvivalDataset::new(x, vec![1.0, 2.0], vec![true, true], vec!["f".into()]).is_err());
    }

    #[test]
    fn sort_orders_by_nonincreasing_time() {
        let ds = toy(&[1.0, 3.0, 2.0], &[true, true, true], &[10.0, 20.0, 30.0]);
        let sorted = sort_and_index(&ds);
        assert_eq!(sorted.permutation(), &[1, 2, 0]);
        assert_eq!(sorted.times(), &[3.0, 2.0, 1.0]);
        assert_eq!(sorted.col(0), &[20.0, 30.0, 10.0]);
    }

    #[test]
    fn ties_share_risk_sets() {
        let ds = toy(&[2.0, 2.0, 1.0], &[true, true, true], &[1.0, 2.0, 3.0]);
        let sorted = sort_and_index(&ds);
        // both time-2 rows see a risk set of size 2; the time-1 row sees all 3
        assert_eq!(sorted.risk_set_end(0), 2);
        assert_eq!(sorted.risk_set_end(1), 2);
        assert_eq!(sorted.risk_set_end(2), 3);
        assert_eq!(sorted.tie_group_start(1), 0);
        // equal times break ties by original index
        assert_eq!(sorted.permutation(), &[0, 1, 2]);
    }

    #[test]
    fn sort_round_trips() {
        let ds = toy(&[1.0, 3.0, 2.0, 3.0], &[true, false, true, true], &[1.0, 2.0, 3.0, 4.0]);
        let restored = sort_and_index(&ds).restore_original();
        assert_eq!(restored.times(), ds.times());
        assert_eq!(restored.events(), ds.events());
        assert_eq!(restored.x(), ds.x());
    }

    #[test]
    fn risk_sets_are_nested_prefixes() {
        let ds = toy(
            &[5.0, 1.0, 3.0, 3.0, 2.0],
            &[true, true, false, true, true],
            &[1.0, 2.0, 3.0, 4.0, 5.0],
        );
        let sorted = sort_and_index(&ds);
        for i in 1..sorted.n() {
            assert!(sorted.risk_set_end(i) >= sorted.risk_set_end(i - 1));
            assert!(sorted.risk_set_end(i) > i);
        }
    }

    #[test]
    fn binarize_two_quantiles() {
        let ds = toy(&[1.0, 2.0, 3.0, 4.0], &[true, true, true, true], &[1.0, 2.0, 3.0, 4.0]);
        let out = binarize_features(&ds, 2);
        // thresholds at the 1/3 and 2/3 quantiles of [1,2,3,4]: 2 and 3
        assert_eq!(out.p(), 2);
        assert_eq!(out.feature_names(), &["f0<=2".to_string(), "f0<=3".to_string()]);
        assert_eq!(out.x().column(0).to_vec(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(out.x().column(1).to_vec(), vec![1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn binarize_passes_binary_through() {
        let ds = toy(&[1.0, 2.0, 3.0, 4.0], &[true, true, true, true], &[0.0, 1.0, 1.0, 0.0]);
        let out = binarize_features(&ds, 5);
        assert_eq!(out.p(), 1);
        assert_eq!(out.feature_names(), &["f0".to_string()]);
        assert_eq!(out.x().column(0).to_vec(), vec![0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn binarize_drops_constant_column() {
        let x = array![[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]];
        let ds = SurvivalDataset::new(
            x,
            vec![1.0, 2.0, 3.0],
            vec![true, true, true],
            vec!["c".into(), "v".into()],
        )
        .unwrap();
        let out = binarize_features(&ds, 3);
        // the constant column contributes nothing
        assert!(out.feature_names().iter().all(|n| n.starts_with("v<=")));
    }

    #[test]
    fn binarize_output_is_binary() {
        let (ds, _) = generate_synthetic(&SyntheticParams {
            n: 100,
            p: 3,
            rho: 0.5,
            k: 1,
            s: 0.5,
            seed: 7,
        })
        .unwrap();
        let out = binarize_features(&ds, 4);
        assert!(out.x().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn synthetic_k_equals_p_gives_all_ones() {
        let (_, truth) = generate_synthetic(&SyntheticParams {
            n: 10,
            p: 4,
            rho: 0.5,
            k: 4,
            s: 0.5,
            seed: 1,
        })
        .unwrap();
        assert_eq!(truth.beta_star, vec![1.0; 4]);
    }

    #[test]
    fn synthetic_support_uses_floor_stride() {
        // p=10, k=4: stride 2, support at 1-based positions 2,4,6,8
        let (_, truth) = generate_synthetic(&SyntheticParams {
            n: 10,
            p: 10,
            rho: 0.5,
            k: 4,
            s: 0.5,
            seed: 1,
        })
        .unwrap();
        assert_eq!(truth.support_star, vec![1, 3, 5, 7]);
        assert_eq!(truth.beta_star.iter().filter(|&&b| b != 0.0).count(), 4);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let params = SyntheticParams { n: 50, p: 8, rho: 0.9, k: 2, s: 0.1, seed: 42 };
        let (a, _) = generate_synthetic(&params).unwrap();
        let (b, _) = generate_synthetic(&params).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.times(), b.times());
        assert_eq!(a.events(), b.events());
    }

    #[test]
    fn synthetic_neighbor_correlation_tracks_rho() {
        let rho = 0.9;
        let (ds, _) = generate_synthetic(&SyntheticParams {
            n: 5000,
            p: 6,
            rho,
            k: 1,
            s: 0.5,
            seed: 3,
        })
        .unwrap();
        for j in 0..5 {
            let a = ds.x().column(j);
            let b = ds.x().column(j + 1);
            let n = a.len() as f64;
            let ma = a.sum() / n;
            let mb = b.sum() / n;
            let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
            let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
            let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
            let corr = cov / (va * vb).sqrt();
            assert!((corr - rho).abs() < 0.05, "corr({j},{}) = {corr}", j + 1);
        }
    }

    #[test]
    fn kfold_partitions_all_rows() {
        let ds = toy(
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            &[true; 10],
            &[0.0; 10],
        );
        let splits = kfold_split(&ds, 5, 0).unwrap();
        assert_eq!(splits.len(), 5);
        let mut seen: Vec<usize> = splits.iter().flat_map(|(_, test)| test.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        for (train, test) in &splits {
            assert_eq!(test.len(), 2);
            assert_eq!(train.len(), 8);
        }
    }

    #[test]
    fn kfold_is_deterministic() {
        let ds = toy(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[true; 6], &[0.0; 6]);
        assert_eq!(kfold_split(&ds, 3, 9).unwrap(), kfold_split(&ds, 3, 9).unwrap());
    }

    #[test]
    fn kfold_rejects_eventless_training_fold() {
        let mut events = vec![false; 6];
        events[0] = true; // the only event: some training fold must miss it
        let ds = toy(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &events, &[0.0; 6]);
        assert!(kfold_split(&ds, 2, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("fastsurv_data_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        let ds = toy(&[1.0, 2.0, 3.0], &[true, true, true], &[0.0, 1.0, 2.0]);
        write_csv(&ds, &path, "time", "event").unwrap();
        let loaded = load_csv(&path, "time", "event").unwrap();
        assert_eq!(loaded.n(), 3);
        assert_eq!(loaded.p(), 1);
        assert_eq!(loaded.times(), ds.times());
        assert_eq!(loaded.events(), ds.events());
        assert_eq!(loaded.x(), ds.x());
    }

    #[test]
    fn csv_rejects_bad_event_value() {
        let dir = std::env::temp_dir().join("fastsurv_data_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad_event.csv");
        std::fs::write(&path, "f,time,event\n1.0,1.0,1\n2.0,2.0,2\n").unwrap();
        let err = load_csv(&path, "time", "event").unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn csv_rejects_all_censored() {
        let dir = std::env::temp_dir().join("fastsurv_data_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("no_events.csv");
        std::fs::write(&path, "f,time,event\n1.0,1.0,0\n2.0,2.0,0\n").unwrap();
        let err = load_csv(&path, "time", "event").unwrap_err();
        assert!(err.to_string().contains("no events"), "{err}");
    }

    #[test]
    fn csv_rejects_missing_column() {
        let dir = std::env::temp_dir().join("fastsurv_data_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("missing_col.csv");
        std::fs::write(&path, "f,time\n1.0,1.0\n").unwrap();
        assert!(matches!(load_csv(&path, "time", "event"), Err(Error::Schema(_))));
    }

    #[test]
    fn csv_names_bad_cell() {
        let dir = std::env::temp_dir().join("fastsurv_data_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad_cell.csv");
        std::fs::write(&path, "f,time,event\noops,1.0,1\n").unwrap();
        match load_csv(&path, "time", "event") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "f");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
