//! Shared helpers for the integration suites: random instance generation
//! and finite-difference oracles. Everything here goes through public
//! crate APIs only for *inputs*; the oracles themselves are independent
//! numerical routes (finite differences of the loss, grid scans).

use fastsurv_core::cph::{compute_eta, loss, LinearPredictor};
use fastsurv_core::data::{sort_and_index, SortedSurvivalDataset, SurvivalDataset};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EPS: f64 = f64::EPSILON;

/// Random survival instance: U(0,10) times (rounded to one decimal on
/// odd seeds so tie groups get exercised), ~70% events with at least one
/// guaranteed, features and coefficients in [-2, 2].
pub fn random_instance(n: usize, p: usize, seed: u64) -> (SortedSurvivalDataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..n)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..10.0);
            if seed % 2 == 1 {
                (t * 10.0).round() / 10.0
            } else {
                t
            }
        })
        .collect();
    let events: Vec<bool> = (0..n).map(|i| i == 0 || rng.gen_bool(0.7)).collect();
    let mut x = Array2::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            x[(i, j)] = rng.gen_range(-2.0..2.0);
        }
    }
    let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let names = (0..p).map(|j| format!("f{j}")).collect();
    let ds = SurvivalDataset::new(x, times, events, names).unwrap();
    (sort_and_index(&ds), beta)
}

/// Loss as a function of beta, via the public pipeline.
pub fn loss_at(dataset: &SortedSurvivalDataset, beta: &[f64]) -> f64 {
    loss(dataset, &compute_eta(dataset, beta).unwrap())
}

/// Central finite differences of the loss in coordinate `l`: first
/// derivative (two-point), second (three-point), third (five-point),
/// with step sizes tuned per order.
pub fn fd_derivatives(dataset: &SortedSurvivalDataset, beta: &[f64], l: usize) -> (f64, f64, f64) {
    let scale = beta[l].abs().max(1.0);
    let eval = |delta: f64| {
        let mut b = beta.to_vec();
        b[l] += delta;
        loss_at(dataset, &b)
    };

    let h1 = EPS.cbrt() * scale;
    let d1 = (eval(h1) - eval(-h1)) / (2.0 * h1);

    let h2 = EPS.powf(0.25) * scale;
    let d2 = (eval(h2) - 2.0 * eval(0.0) + eval(-h2)) / (h2 * h2);

    let h3 = EPS.powf(0.2) * scale;
    let d3 = (eval(2.0 * h3) - 2.0 * eval(h3) + 2.0 * eval(-h3) - eval(-2.0 * h3))
        / (2.0 * h3 * h3 * h3);

    (d1, d2, d3)
}

/// Central finite difference of the loss in one eta coordinate.
pub fn fd_eta_gradient(dataset: &SortedSurvivalDataset, eta: &LinearPredictor, k: usize) -> f64 {
    let h = EPS.cbrt() * eta.values()[k].abs().max(1.0);
    let eval = |delta: f64| {
        let mut values = eta.values().to_vec();
        values[k] += delta;
        loss(dataset, &LinearPredictor::from_values(values).unwrap())
    };
    (eval(h) - eval(-h)) / (2.0 * h)
}

/// Relative error with a unit floor, the usual gradient-check metric.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
