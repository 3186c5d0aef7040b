//! Core model quantities: the negative log partial likelihood, the linear
//! predictor with incremental updates, exact per-coordinate first/second/
//! third derivatives in a single O(n) pass, weighted central moments over
//! risk sets, per-feature curvature bounds, and the sample-space gradient.
//!
//! Everything here relies on one structural fact: with rows sorted by
//! nonincreasing time, every risk set is a prefix of the row order and
//! the prefixes are nested. Sums over risk sets therefore come out of
//! running (reverse-cumulative) accumulators in one pass, with all rows
//! of a tie group sharing the group-inclusive value.
//!
//! All exponentials are taken as exp(eta - m) with m = max(eta). The
//! per-risk-set softmax weights are invariant under the shift, so this is
//! exact in exact arithmetic and overflow-proof in floating point.

use crate::data::SortedSurvivalDataset;
use crate::error::{Error, Result};
use crate::exec;

/// Inverse of the third-derivative bound constant: 1/(6*sqrt(3)).
pub const THIRD_MOMENT_BOUND_COEFF: f64 = 0.09622504486493763;

/// Compensated (Kahan) accumulator; keeps the O(n) cumulant path accurate
/// on long sums.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum
    }
}

/// The linear predictor eta = X*beta in sorted row order, plus the shift
/// used for overflow-safe exponentials.
#[derive(Debug, Clone)]
pub struct LinearPredictor {
    eta: Vec<f64>,
    stabilizer: f64,
}

impl LinearPredictor {
    pub fn values(&self) -> &[f64] {
        &self.eta
    }

    pub fn stabilizer(&self) -> f64 {
        self.stabilizer
    }

    /// Build directly from raw values (sorted order). Used by tests and
    /// by callers that manipulate eta themselves.
    pub fn from_values(eta: Vec<f64>) -> Result<Self> {
        if let Some(i) = eta.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite linear predictor at row {i}")));
        }
        let stabilizer = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
        Ok(Self { eta, stabilizer })
    }
}

/// eta = X*beta, accumulated column-wise over the sorted feature columns.
pub fn compute_eta(dataset: &SortedSurvivalDataset, beta: &[f64]) -> Result<LinearPredictor> {
    if beta.len() != dataset.p() {
        return Err(Error::Validation(format!(
            "beta has {} entries for {} features",
            beta.len(),
            dataset.p()
        )));
    }
    if let Some(l) = beta.iter().position(|b| !b.is_finite()) {
        return Err(Error::Numeric(format!("coefficient {l} is non-finite")));
    }
    let mut eta = vec![0.0; dataset.n()];
    for (l, &b) in beta.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        for (e, &x) in eta.iter_mut().zip(dataset.col(l)) {
            *e += b * x;
        }
    }
    if let Some(i) = eta.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "linear predictor overflowed at sorted row {i}"
        )));
    }
    LinearPredictor::from_values(eta)
}

/// Shift eta by `delta_beta` times feature column `l` and refresh the
/// stabilizer. O(n); this is what makes coordinate sweeps cheap.
pub fn update_eta(
    eta: &mut LinearPredictor,
    dataset: &SortedSurvivalDataset,
    l: usize,
    delta_beta: f64,
) -> Result<()> {
    if !delta_beta.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite coordinate update for feature {l}"
        )));
    }
    if delta_beta == 0.0 {
        return Ok(());
    }
    let col = dataset.col(l);
    let mut max = f64::NEG_INFINITY;
    for (e, &x) in eta.eta.iter_mut().zip(col) {
        *e += delta_beta * x;
        if !e.is_finite() {
            return Err(Error::Numeric(format!(
                "linear predictor overflowed updating feature {l}"
            )));
        }
        max = max.max(*e);
    }
    eta.stabilizer = max.max(0.0);
    Ok(())
}

/// Reverse-cumulative sums over risk sets for one feature: S0 holds
/// sum of exp(eta - m), S1/S2/S3 weight it by the feature value to the
/// first, second, and third power. Entry i covers the risk set of sorted
/// row i; rows in a tie group share identical values. Vectors beyond the
/// requested order are empty.
#[derive(Debug, Clone)]
pub struct RiskSetCumulants {
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
}

/// Compute S0..S`order` for feature `l` in one pass over tie groups.
pub fn risk_set_cumulants(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    l: usize,
    order: usize,
) -> RiskSetCumulants {
    debug_assert!(order <= 3);
    let n = dataset.n();
    let col = dataset.col(l);
    let m = eta.stabilizer;
    let mut s0 = vec![0.0; n];
    let mut s1 = if order >= 1 { vec![0.0; n] } else { Vec::new() };
    let mut s2 = if order >= 2 { vec![0.0; n] } else { Vec::new() };
    let mut s3 = if order >= 3 { vec![0.0; n] } else { Vec::new() };

    let (mut a0, mut a1, mut a2, mut a3) = (Kahan::default(), Kahan::default(), Kahan::default(), Kahan::default());
    let mut start = 0;
    while start < n {
        let end = dataset.risk_set_end(start);
        for j in start..end {
            let w = (eta.eta[j] - m).exp();
            a0.add(w);
            if order >= 1 {
                let x = col[j];
                let wx = w * x;
                a1.add(wx);
                if order >= 2 {
                    a2.add(wx * x);
                    if order >= 3 {
                        a3.add(wx * x * x);
                    }
                }
            }
        }
        for i in start..end {
            s0[i] = a0.value();
            if order >= 1 {
                s1[i] = a1.value();
            }
            if order >= 2 {
                s2[i] = a2.value();
            }
            if order >= 3 {
                s3[i] = a3.value();
            }
        }
        start = end;
    }
    RiskSetCumulants { s0, s1, s2, s3 }
}

/// Negative log partial likelihood, evaluated in O(n) through the risk-set
/// sums: sum over events of (log sum_{j in R_i} exp(eta_j) - eta_i).
pub fn loss(dataset: &SortedSurvivalDataset, eta: &LinearPredictor) -> f64 {
    let n = dataset.n();
    let m = eta.stabilizer;
    let eta_v = &eta.eta;
    let mut acc = Kahan::default();
    let mut s0 = Kahan::default();
    let mut start = 0;
    while start < n {
        let end = dataset.risk_set_end(start);
        for j in start..end {
            s0.add((eta_v[j] - m).exp());
        }
        let log_sum = m + s0.value().ln();
        for i in start..end {
            if dataset.events()[i] {
                acc.add(log_sum - eta_v[i]);
            }
        }
        start = end;
    }
    acc.value()
}

/// How many derivative orders to compute in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
    Third,
}

impl DerivOrder {
    fn rank(self) -> usize {
        match self {
            DerivOrder::First => 1,
            DerivOrder::Second => 2,
            DerivOrder::Third => 3,
        }
    }
}

/// Exact partial derivatives of the loss with respect to one coordinate.
/// `d2`/`d3` are present when requested. The per-event softmax moments
/// make d2 a sum of variances (hence nonnegative) and d3 a sum of third
/// central moments.
#[derive(Debug, Clone, Copy)]
pub struct CoordinateDerivatives {
    pub feature: usize,
    pub d1: f64,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
}

/// First, second, and (optionally) third derivative of the loss in
/// coordinate `l`, in a single O(n) pass over tie groups.
pub fn coordinate_partials(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    l: usize,
    order: DerivOrder,
) -> CoordinateDerivatives {
    let n = dataset.n();
    let rank = order.rank();
    let col = dataset.col(l);
    let m = eta.stabilizer;
    let eta_v = &eta.eta;
    let events = dataset.events();

    let (mut a0, mut a1, mut a2, mut a3) = (Kahan::default(), Kahan::default(), Kahan::default(), Kahan::default());
    let mut d1 = Kahan::default();
    let mut d2 = Kahan::default();
    let mut d3 = Kahan::default();

    let mut start = 0;
    while start < n {
        let end = dataset.risk_set_end(start);
        for j in start..end {
            let w = (eta_v[j] - m).exp();
            let x = col[j];
            let wx = w * x;
            a0.add(w);
            a1.add(wx);
            if rank >= 2 {
                a2.add(wx * x);
                if rank >= 3 {
                    a3.add(wx * x * x);
                }
            }
        }
        let s0 = a0.value();
        let mu1 = a1.value() / s0;
        let mu2 = if rank >= 2 { a2.value() / s0 } else { 0.0 };
        let mu3 = if rank >= 3 { a3.value() / s0 } else { 0.0 };
        for i in start..end {
            if events[i] {
                d1.add(mu1 - col[i]);
                if rank >= 2 {
                    d2.add(mu2 - mu1 * mu1);
                    if rank >= 3 {
                        d3.add(mu3 + 2.0 * mu1 * mu1 * mu1 - 3.0 * mu2 * mu1);
                    }
                }
            }
        }
        start = end;
    }

    CoordinateDerivatives {
        feature: l,
        d1: d1.value(),
        d2: (rank >= 2).then(|| d2.value()),
        d3: (rank >= 3).then(|| d3.value()),
    }
}

/// r-th central moment of feature `l` over the risk set of event `i`,
/// under the softmax weights exp(eta_k)/sum(exp(eta_j)).
///
/// The first central moment is identically zero (centering), so r = 1
/// returns exactly 0.
pub fn central_moment(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    l: usize,
    r: usize,
    event_index: usize,
) -> Result<f64> {
    if r < 1 {
        return Err(Error::Validation("moment order must be >= 1".into()));
    }
    if event_index >= dataset.n() {
        return Err(Error::Validation(format!("row {event_index} out of range")));
    }
    if !dataset.events()[event_index] {
        return Err(Error::Validation(format!(
            "row {event_index} is censored; central moments are defined at events"
        )));
    }
    if r == 1 {
        return Ok(0.0);
    }
    let end = dataset.risk_set_end(event_index);
    let col = dataset.col(l);
    let m = eta.stabilizer;

    let mut s0 = Kahan::default();
    let mut s1 = Kahan::default();
    for j in 0..end {
        let w = (eta.eta[j] - m).exp();
        s0.add(w);
        s1.add(w * col[j]);
    }
    let mu = s1.value() / s0.value();
    let mut acc = Kahan::default();
    for j in 0..end {
        let w = (eta.eta[j] - m).exp();
        acc.add(w * (col[j] - mu).powi(r as i32));
    }
    Ok(acc.value() / s0.value())
}

/// Per-feature curvature bounds, data-dependent and independent of beta.
/// `l2[l]` bounds the second derivative in coordinate l from above;
/// `l3[l]` bounds the third derivative's magnitude.
#[derive(Debug, Clone)]
pub struct LipschitzTable {
    pub l2: Vec<f64>,
    pub l3: Vec<f64>,
}

/// Curvature bounds from per-risk-set feature ranges:
/// l2 = 1/4 * sum over events of range^2, l3 = 1/(6*sqrt(3)) * sum of
/// range^3, where range is max - min of the feature over the event's risk
/// set. One running max/min pass per feature (risk sets are nested
/// prefixes), O(n*p) total, parallel over features.
pub fn lipschitz_constants(dataset: &SortedSurvivalDataset) -> LipschitzTable {
    let n = dataset.n();
    let per_feature = exec::map_indexed(dataset.p(), |l| {
        let col = dataset.col(l);
        let events = dataset.events();
        let mut max = f64::NEG_INFINITY;
        let mut min = f64::INFINITY;
        let mut sq = Kahan::default();
        let mut cu = Kahan::default();
        let mut start = 0;
        while start < n {
            let end = dataset.risk_set_end(start);
            for j in start..end {
                max = max.max(col[j]);
                min = min.min(col[j]);
            }
            let range = max - min;
            for i in start..end {
                if events[i] {
                    sq.add(range * range);
                    cu.add(range * range * range);
                }
            }
            start = end;
        }
        (0.25 * sq.value(), THIRD_MOMENT_BOUND_COEFF * cu.value())
    });
    let (l2, l3) = per_feature.into_iter().unzip();
    LipschitzTable { l2, l3 }
}

/// Gradient of the loss with respect to eta itself:
/// g_k = exp(eta_k) * sum over events whose risk set contains k of
/// 1/(risk-set sum) - delta_k. One cumulative pass over tie groups.
pub fn eta_gradient(dataset: &SortedSurvivalDataset, eta: &LinearPredictor) -> Vec<f64> {
    let n = dataset.n();
    let inv = event_inverse_sums(dataset, eta);
    let m = eta.stabilizer;
    let mut g = vec![0.0; n];
    for k in 0..n {
        g[k] = (eta.eta[k] - m).exp() * inv[k] - f64::from(u8::from(dataset.events()[k]));
    }
    g
}

/// For each row k, the sum of delta_i / S0_i over all events i whose risk
/// set contains k (i.e. events at or after k's tie group), in stabilized
/// units. Shared by the gradient and the Newton-type baselines.
pub(crate) fn event_inverse_sums(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
) -> Vec<f64> {
    accumulate_event_terms(dataset, eta, 1)
}

/// Same as [`event_inverse_sums`] but with delta_i / S0_i^2 terms; needed
/// for the diagonal of the sample-space Hessian.
pub(crate) fn event_inverse_square_sums(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
) -> Vec<f64> {
    accumulate_event_terms(dataset, eta, 2)
}

fn accumulate_event_terms(
    dataset: &SortedSurvivalDataset,
    eta: &LinearPredictor,
    power: i32,
) -> Vec<f64> {
    let n = dataset.n();
    let m = eta.stabilizer;

    // forward pass: group-inclusive S0 per tie group
    let mut group_bounds = Vec::new();
    let mut group_s0 = Vec::new();
    let mut acc = Kahan::default();
    let mut start = 0;
    while start < n {
        let end = dataset.risk_set_end(start);
        for j in start..end {
            acc.add((eta.eta[j] - m).exp());
        }
        group_bounds.push((start, end));
        group_s0.push(acc.value());
        start = end;
    }

    // backward pass: suffix sums of event terms, assigned group-wide
    let mut out = vec![0.0; n];
    let mut suffix = Kahan::default();
    for (&(gs, ge), &s0) in group_bounds.iter().zip(&group_s0).rev() {
        for i in gs..ge {
            if dataset.events()[i] {
                suffix.add(1.0 / s0.powi(power));
            }
        }
        let v = suffix.value();
        for slot in &mut out[gs..ge] {
            *slot = v;
        }
    }
    out
}

/// Full gradient in coefficient space: X^T times the eta-space gradient.
pub fn full_beta_gradient(dataset: &SortedSurvivalDataset, eta: &LinearPredictor) -> Vec<f64> {
    let g = eta_gradient(dataset, eta);
    exec::map_indexed(dataset.p(), |l| {
        let mut acc = Kahan::default();
        for (x, gi) in dataset.col(l).iter().zip(&g) {
            acc.add(x * gi);
        }
        acc.value()
    })
}
