//! Evaluation: bare partial-likelihood loss lives in [`crate::cph`];
//! here are concordance, the baseline cumulative hazard, censoring-
//! weighted integrated Brier scores, and support-recovery scores.

use ndarray::Array2;

use crate::cph::{compute_eta, loss};
use crate::data::{SortedSurvivalDataset, SurvivalDataset};
use crate::error::{Error, Result};

/// Harrell's concordance index. A pair (i, j) is comparable when
/// t_i < t_j and i is an event; it counts 1 when risk_i > risk_j,
/// 0.5 on risk ties, 0 otherwise.
pub fn concordance_index(times: &[f64], events: &[bool], risk_scores: &[f64]) -> Result<f64> {
    let n = times.len();
    if events.len() != n || risk_scores.len() != n {
        return Err(Error::Validation("times, events, and scores must have equal length".into()));
    }
    let mut comparable = 0u64;
    let mut credit = 0.0;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            if times[i] < times[j] {
                comparable += 1;
                if risk_scores[i] > risk_scores[j] {
                    credit += 1.0;
                } else if risk_scores[i] == risk_scores[j] {
                    credit += 0.5;
                }
            }
        }
    }
    if comparable == 0 {
        return Err(Error::UndefinedMetric(
            "no comparable pairs (all times tied or no events before others)".into(),
        ));
    }
    Ok(credit / comparable as f64)
}

/// Cumulative baseline hazard as a right-continuous step function:
/// jumps at each unique event time, ascending.
#[derive(Debug, Clone)]
pub struct BaselineHazard {
    /// unique event times, ascending
    pub times: Vec<f64>,
    /// cumulative hazard at and after the matching time
    pub cumulative: Vec<f64>,
}

impl BaselineHazard {
    /// H0(t): cumulative hazard of all event times <= t.
    pub fn at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u <= t);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }
}

/// Breslow estimate of the cumulative baseline hazard: each event
/// contributes one over its risk set's hazard mass.
pub fn breslow_baseline(dataset: &SortedSurvivalDataset, beta: &[f64]) -> Result<BaselineHazard> {
    let eta = compute_eta(dataset, beta)?;
    let m = eta.stabilizer();
    let n = dataset.n();

    // sorted order is time-descending; walk it backwards for ascending jumps
    let mut group_data: Vec<(f64, usize, f64)> = Vec::new(); // (time, event count, s0)
    let mut s0 = 0.0;
    let mut start = 0;
    while start < n {
        let end = dataset.risk_set_end(start);
        for j in start..end {
            s0 += (eta.values()[j] - m).exp();
        }
        let n_events = (start..end).filter(|&i| dataset.events()[i]).count();
        group_data.push((dataset.times()[start], n_events, s0));
        start = end;
    }

    let mut times = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for &(t, n_events, s0) in group_data.iter().rev() {
        if n_events == 0 {
            continue;
        }
        acc += n_events as f64 / (s0 * m.exp());
        times.push(t);
        cumulative.push(acc);
    }
    Ok(BaselineHazard { times, cumulative })
}

/// Predicted survival probabilities on a time grid, one row per sample:
/// S_i(t) = exp(-H0(t) * exp(eta_i)).
#[derive(Debug, Clone)]
pub struct SurvivalFunctionEstimate {
    pub time_grid: Vec<f64>,
    /// samples x grid
    pub survival: Array2<f64>,
}

/// Evaluate the survival curves implied by a baseline hazard and
/// per-sample linear predictors.
pub fn predict_survival(
    baseline: &BaselineHazard,
    eta: &[f64],
    time_grid: &[f64],
) -> SurvivalFunctionEstimate {
    let mut survival = Array2::zeros((eta.len(), time_grid.len()));
    for (gi, &t) in time_grid.iter().enumerate() {
        let h0 = baseline.at(t);
        for (i, &e) in eta.iter().enumerate() {
            survival[(i, gi)] = (-h0 * e.exp()).exp();
        }
    }
    SurvivalFunctionEstimate { time_grid: time_grid.to_vec(), survival }
}

/// Kaplan-Meier estimate of the censoring distribution G(t) = P(C > t),
/// built by treating censorings as the "events".
#[derive(Debug, Clone)]
pub struct CensoringDistribution {
    /// censoring times with at least one censored row, ascending
    times: Vec<f64>,
    /// G immediately after the matching time
    survival: Vec<f64>,
}

pub fn censoring_km(times: &[f64], events: &[bool]) -> CensoringDistribution {
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[a].partial_cmp(&times[b]).unwrap());

    let mut jump_times = Vec::new();
    let mut survival = Vec::new();
    let mut g = 1.0;
    let mut cursor = 0;
    while cursor < n {
        let t = times[order[cursor]];
        let at_risk = n - cursor;
        let mut censored_here = 0;
        let mut same = cursor;
        while same < n && times[order[same]] == t {
            if !events[order[same]] {
                censored_here += 1;
            }
            same += 1;
        }
        if censored_here > 0 {
            g *= 1.0 - censored_here as f64 / at_risk as f64;
            jump_times.push(t);
            survival.push(g);
        }
        cursor = same;
    }
    CensoringDistribution { times: jump_times, survival }
}

impl CensoringDistribution {
    /// G(t), right-continuous.
    pub fn at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u <= t);
        if idx == 0 {
            1.0
        } else {
            self.survival[idx - 1]
        }
    }

    /// Left limit G(t-).
    pub fn before(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u < t);
        if idx == 0 {
            1.0
        } else {
            self.survival[idx - 1]
        }
    }
}

/// Censoring-weighted Brier score at one time point. `survival_at_t`
/// holds each test sample's predicted S_i(t).
pub fn brier_score_at(
    times: &[f64],
    events: &[bool],
    survival_at_t: &[f64],
    t: f64,
    censoring: &CensoringDistribution,
) -> f64 {
    let n = times.len();
    let mut total = 0.0;
    for i in 0..n {
        let s = survival_at_t[i];
        if times[i] <= t && events[i] {
            total += s * s / censoring.before(times[i]);
        } else if times[i] > t {
            total += (1.0 - s) * (1.0 - s) / censoring.at(t);
        }
        // censored before t: outcome unknown, weight zero
    }
    total / n as f64
}

/// Integrated Brier score and whether the grid had to be truncated
/// because the censoring estimate reached zero.
#[derive(Debug, Clone, Copy)]
pub struct IbsResult {
    pub value: f64,
    pub grid_truncated: bool,
}

/// Graf-style integrated Brier score: Breslow baseline on the training
/// split, survival curves for the test split, inverse-probability-of-
/// censoring weights from the training censoring distribution, trapezoid
/// integration over the grid (normalized by its span).
pub fn integrated_brier_score(
    train: &SortedSurvivalDataset,
    test: &SurvivalDataset,
    beta: &[f64],
    time_grid: &[f64],
) -> Result<IbsResult> {
    if time_grid.len() < 2 {
        return Err(Error::Validation("time grid needs at least two points".into()));
    }
    if time_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("time grid must be strictly increasing".into()));
    }
    let max_follow_up = test.times().iter().copied().fold(0.0, f64::max);
    if *time_grid.last().unwrap() > max_follow_up {
        return Err(Error::Validation(format!(
            "grid extends past the test follow-up range ({max_follow_up})"
        )));
    }
    if beta.len() != test.p() {
        return Err(Error::Validation("beta does not match the test feature count".into()));
    }

    let baseline = breslow_baseline(train, beta)?;
    let censoring = censoring_km(train.times(), train.events());

    // drop grid points where the censoring weight vanishes
    let usable: Vec<f64> = time_grid
        .iter()
        .copied()
        .take_while(|&t| censoring.at(t) > 0.0)
        .collect();
    let grid_truncated = usable.len() < time_grid.len();
    if usable.len() < 2 {
        return Err(Error::UndefinedMetric(
            "censoring distribution vanishes across the whole grid".into(),
        ));
    }

    let eta_test: Vec<f64> = (0..test.n())
        .map(|i| {
            test.x()
                .row(i)
                .iter()
                .zip(beta)
                .map(|(x, b)| x * b)
                .sum()
        })
        .collect();
    let surv = predict_survival(&baseline, &eta_test, &usable);

    let scores: Vec<f64> = usable
        .iter()
        .enumerate()
        .map(|(gi, &t)| {
            let at_t: Vec<f64> = (0..test.n()).map(|i| surv.survival[(i, gi)]).collect();
            brier_score_at(test.times(), test.events(), &at_t, t, &censoring)
        })
        .collect();

    let mut integral = 0.0;
    for w in 0..usable.len() - 1 {
        integral += 0.5 * (scores[w] + scores[w + 1]) * (usable[w + 1] - usable[w]);
    }
    let span = usable[usable.len() - 1] - usable[0];
    Ok(IbsResult { value: integral / span, grid_truncated })
}

/// 100 equally spaced points between the 1st and 99th percentile of the
/// given times; the default integration grid.
pub fn default_time_grid(times: &[f64]) -> Vec<f64> {
    let mut sorted = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |level: f64| -> f64 {
        let h = (sorted.len() - 1) as f64 * level;
        let lo = h.floor() as usize;
        let frac = h - lo as f64;
        if lo + 1 >= sorted.len() {
            sorted[sorted.len() - 1]
        } else {
            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
        }
    };
    let (lo, hi) = (q(0.01), q(0.99));
    let points = 100;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    grid.dedup();
    grid
}

/// Support-recovery precision/recall/F1 between an estimate and the
/// ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision = |true support intersect estimated| / |estimated|,
/// recall = |intersection| / |true support|, F1 their harmonic mean.
/// An empty estimated support scores zero precision.
pub fn support_recovery(beta_hat: &[f64], beta_star: &[f64]) -> Result<RecoveryScores> {
    if beta_hat.len() != beta_star.len() {
        return Err(Error::Validation("coefficient vectors differ in length".into()));
    }
    let hat: Vec<usize> = nonzero(beta_hat);
    let star: Vec<usize> = nonzero(beta_star);
    let both = hat.iter().filter(|i| star.contains(i)).count() as f64;
    let precision = if hat.is_empty() { 0.0 } else { both / hat.len() as f64 };
    let recall = if star.is_empty() { 0.0 } else { both / star.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(RecoveryScores { precision, recall, f1 })
}

fn nonzero(v: &[f64]) -> Vec<usize> {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, _)| i).collect()
}

/// Bare loss of a coefficient vector on an (unsorted) dataset.
pub fn cph_loss(dataset: &SurvivalDataset, beta: &[f64]) -> Result<f64> {
    let sorted = crate::data::sort_and_index(dataset);
    let eta = compute_eta(&sorted, beta)?;
    Ok(loss(&sorted, &eta))
}
