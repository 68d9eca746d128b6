use proptest::prelude::*;

use htf_core::baselines::{AdaptiveGridParams, KdTreeParams, QuadTreeParams};
use htf_core::grid::Axis;
use htf_core::htf::split_objective;
use htf_core::{
    answer_query, FrequencyMatrix, HtfParams, Mechanism, NoiseSource, PartitionBudget, RangeQuery,
    Region,
};

fn matrix(max_side: usize, max_count: u64) -> impl Strategy<Value = FrequencyMatrix> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(r, c)| {
        prop::collection::vec(0..=max_count, r * c)
            .prop_map(move |v| FrequencyMatrix::from_counts(r, c, v).unwrap())
    })
}

fn region_in(rows: usize, cols: usize) -> impl Strategy<Value = Region> {
    (0..rows, 0..rows, 0..cols, 0..cols).prop_map(|(a, b, c, d)| {
        Region::new(a.min(b), a.max(b) + 1, c.min(d), c.max(d) + 1).unwrap()
    })
}

fn mechanisms(eps: f64) -> Vec<Mechanism> {
    vec![
        Mechanism::Htf(HtfParams {
            eps_tot: eps,
            eps_height: 0.01,
            partition: PartitionBudget::Total(eps / 10.0),
            ..HtfParams::default()
        }),
        Mechanism::UniformGrid {
            eps_tot: eps,
            c0: 10.0,
        },
        Mechanism::AdaptiveGrid {
            eps_tot: eps,
            params: AdaptiveGridParams::default(),
        },
        Mechanism::QuadTree {
            eps_tot: eps,
            params: QuadTreeParams::default(),
        },
        Mechanism::KdTree {
            eps_tot: eps,
            params: KdTreeParams::default(),
        },
        Mechanism::Singular { eps_tot: eps },
        Mechanism::FlatUniform { eps_tot: eps },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_record_moves_the_objective_by_at_most_two(
        f in matrix(8, 5),
        pick in any::<prop::sample::Index>(),
        add in any::<bool>(),
    ) {
        let cell = pick.index(f.rows() * f.cols());
        let (row, col) = (cell / f.cols(), cell % f.cols());
        let mut counts = f.counts().to_vec();
        if add {
            counts[cell] += 1;
        } else if counts[cell] > 0 {
            counts[cell] -= 1;
        } else {
            return Ok(());
        }
        let g = FrequencyMatrix::from_counts(f.rows(), f.cols(), counts).unwrap();
        let dom = f.domain();
        for axis in [Axis::Rows, Axis::Cols] {
            let extent = axis.extent(&dom);
            for k in 1..=extent {
                let d = (split_objective(&g, &dom, k, axis).unwrap()
                    - split_objective(&f, &dom, k, axis).unwrap()).abs();
                prop_assert!(d <= 2.0 + 1e-9, "{axis:?} k={k}: {d}");
                let first = if k == extent { dom } else { axis.split(&dom, k).0 };
                let inside = (first.row_lo..first.row_hi).contains(&row)
                    && (first.col_lo..first.col_hi).contains(&col);
                if add && inside {
                    let kv = first.cells() as f64;
                    prop_assert!(d <= 2.0 * (kv - 1.0) / kv + 1e-9);
                }
            }
        }
    }

    #[test]
    fn every_release_tiles_the_domain(f in matrix(24, 40), seed in any::<u64>()) {
        for m in mechanisms(0.5) {
            let r = m.release(&f, &NoiseSource::new(seed)).unwrap();
            let mut cover = vec![0u8; f.rows() * f.cols()];
            for l in r.histogram.leaves() {
                for i in l.region.row_lo..l.region.row_hi {
                    for j in l.region.col_lo..l.region.col_hi {
                        cover[i * f.cols() + j] += 1;
                    }
                }
            }
            prop_assert!(cover.iter().all(|&c| c == 1), "{} does not tile", m.name());
            prop_assert!(r.ledger.max_path_total() <= 0.5 + 1e-9, "{} overspends", m.name());
        }
    }

    #[test]
    fn answers_add_over_a_split_query(
        (f, q, cut) in matrix(24, 40).prop_flat_map(|f| {
            let (r, c) = (f.rows(), f.cols());
            (Just(f), region_in(r, c), any::<prop::sample::Index>())
        }),
        seed in any::<u64>(),
    ) {
        prop_assume!(q.cols() >= 2);
        let k = 1 + cut.index(q.cols() - 1);
        let (a, b) = q.split_cols(k);
        for m in mechanisms(1.0) {
            let r = m.release(&f, &NoiseSource::new(seed)).unwrap();
            let h = &r.histogram;
            let whole = answer_query(h, &RangeQuery::new(q)).unwrap();
            let parts = answer_query(h, &RangeQuery::new(a)).unwrap()
                + answer_query(h, &RangeQuery::new(b)).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-9 * (1.0 + whole.abs()), "{}", m.name());
            let full = answer_query(h, &RangeQuery::new(f.domain())).unwrap();
            prop_assert!((full - h.noisy_total()).abs() <= 1e-9 * (1.0 + full.abs()));
        }
    }
}
