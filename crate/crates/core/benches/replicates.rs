//! Bootstrap replicate loop, sequential versus rayon.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shifterr_core::simgen::{gen_linear, Coefficients, DgpSpec, Misspec, NormalLaw};
use shifterr_core::{errx_dir, BootstrapConfig, Execution, FitAlgorithm, FitSpec, LossKind};
use std::hint::black_box;

fn shift_setting(p: usize) -> DgpSpec {
    DgpSpec {
        n: 100,
        n_test: 1000,
        p,
        coef: Coefficients {
            count: 4,
            strength: 2.0,
        },
        train_law: NormalLaw::STANDARD,
        test_law: NormalLaw::new(2.0, 2.0),
        sigma: Some(5.0),
        misspec: Misspec::None,
        imbalance_ratio: None,
        seed: 7,
        design_seed: None,
    }
}

fn bench_replicates(c: &mut Criterion) {
    let mut group = c.benchmark_group("errx_dir");
    group.sample_size(10);
    let cases = [
        (
            "ols_p10",
            shift_setting(10),
            FitSpec::new(FitAlgorithm::Ols),
        ),
        (
            "lasso_p50",
            shift_setting(50),
            FitSpec {
                n_lambda: 50,
                lambda_min_ratio: 1e-2,
                tolerance: 1e-7,
                ..FitSpec::new(FitAlgorithm::LassoCv)
            },
        ),
    ];
    for (name, dgp, spec) in cases {
        let sim = gen_linear(&dgp).unwrap();
        let replicates = if spec.algorithm == FitAlgorithm::Ols {
            500
        } else {
            50
        };
        for exec in [Execution::Sequential, Execution::Parallel] {
            let config = BootstrapConfig::new(replicates, 1).with_execution(exec);
            group.bench_with_input(
                BenchmarkId::new(name, format!("{exec:?}")),
                &config,
                |b, cfg| {
                    b.iter(|| {
                        errx_dir(
                            black_box(&sim.train),
                            sim.test.x(),
                            &spec,
                            LossKind::Squared,
                            cfg,
                        )
                        .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_replicates);
criterion_main!(benches);
