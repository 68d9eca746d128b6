use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use htf_bench::gaussian;
use htf_core::baselines::{AdaptiveGridParams, KdTreeParams, QuadTreeParams};
use htf_core::{HtfParams, Mechanism, NoiseSource};

fn releases(c: &mut Criterion) {
    let mut group = c.benchmark_group("release");
    group.sample_size(20);
    for side in [128usize, 256] {
        let f = gaussian(side, 100_000, side as f64 / 6.0);
        let methods = [
            Mechanism::Htf(HtfParams::default()),
            Mechanism::UniformGrid {
                eps_tot: 0.1,
                c0: 10.0,
            },
            Mechanism::AdaptiveGrid {
                eps_tot: 0.1,
                params: AdaptiveGridParams::default(),
            },
            Mechanism::QuadTree {
                eps_tot: 0.1,
                params: QuadTreeParams::default(),
            },
            Mechanism::KdTree {
                eps_tot: 0.1,
                params: KdTreeParams::default(),
            },
        ];
        for m in methods {
            group.bench_with_input(BenchmarkId::new(m.name(), side), &f, |b, f| {
                b.iter(|| m.release(f, &NoiseSource::new(1)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, releases);
criterion_main!(benches);
