//! Compares the rayon-backed fan-outs against their sequential twins on
//! the two hottest parallel workloads (per-feature curvature bounds and
//! candidate scoring), and tracks how a coordinate sweep scales with n.
//!
//! Build with default features to measure the parallel path; the
//! `*_sequential` entries always run single-threaded, so one run shows
//! both sides.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fastsurv_core::cph::{
    compute_eta, coordinate_partials, lipschitz_constants, DerivOrder,
};
use fastsurv_core::data::{generate_synthetic, sort_and_index, SortedSurvivalDataset, SyntheticParams};
use fastsurv_core::exec;
use fastsurv_core::selection::{rank_candidates, BeamState, SelectionConfig};

fn make(n: usize, p: usize) -> SortedSurvivalDataset {
    let (ds, _) = generate_synthetic(&SyntheticParams {
        n,
        p,
        rho: 0.7,
        k: (p / 10).max(1),
        s: 0.3,
        seed: 99,
    })
    .unwrap();
    sort_and_index(&ds)
}

/// The per-feature body of the curvature-bound table, run through both
/// executors.
fn bench_lipschitz(c: &mut Criterion) {
    let dataset = make(4000, 200);
    let mut group = c.benchmark_group("lipschitz_constants");
    group.bench_function("parallel", |b| b.iter(|| lipschitz_constants(&dataset)));
    group.bench_function("sequential", |b| {
        b.iter(|| {
            exec::map_indexed_seq(dataset.p(), |l| {
                // same arithmetic as the library path, forced sequential
                let col = dataset.col(l);
                let mut max = f64::NEG_INFINITY;
                let mut min = f64::INFINITY;
                let mut l2 = 0.0;
                let mut l3 = 0.0;
                let mut start = 0;
                while start < dataset.n() {
                    let end = dataset.risk_set_end(start);
                    for j in start..end {
                        max = max.max(col[j]);
                        min = min.min(col[j]);
                    }
                    let r = max - min;
                    for i in start..end {
                        if dataset.events()[i] {
                            l2 += r * r;
                            l3 += r * r * r;
                        }
                    }
                    start = end;
                }
                (0.25 * l2, l3 / (6.0 * 3.0f64.sqrt()))
            })
        })
    });
    group.finish();
}

fn bench_candidate_scoring(c: &mut Criterion) {
    let dataset = make(1000, 150);
    let table = lipschitz_constants(&dataset);
    let config = SelectionConfig::new(5);
    let state = BeamState::empty(&dataset).unwrap();
    let mut group = c.benchmark_group("candidate_scoring");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| rank_candidates(&dataset, &state, &table, &config))
    });
    group.finish();
}

/// One full pass of per-coordinate derivative evaluation at several n,
/// documenting the O(n) claim.
fn bench_sweep_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("derivative_sweep");
    group.sample_size(20);
    for n in [5_000usize, 10_000, 20_000] {
        let dataset = make(n, 20);
        let eta = compute_eta(&dataset, &vec![0.01; dataset.p()]).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let mut acc = 0.0;
                for l in 0..dataset.p() {
                    acc += coordinate_partials(&dataset, &eta, l, DerivOrder::Second).d1;
                }
                acc
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_lipschitz, bench_candidate_scoring, bench_sweep_scaling);
criterion_main!(benches);
