use proptest::prelude::*;
use tailbound::bounds::{precompute_tails, refine_step, RefineState};
use tailbound::heap::ResultHeap;
use tailbound::layout::{build_batches, reconstruct};
use tailbound::transform::{cayley_map, orthogonality_error, SkewParams, TransformModel};
use tailbound::{LevelSpec, TransformedDataset, VectorSet};

fn vec_of(d: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-100.0f32..100.0, d)
}

fn levels_for(d: usize) -> impl Strategy<Value = LevelSpec> {
    (1..=d).prop_flat_map(move |l| {
        prop::sample::subsequence((1..d).collect::<Vec<_>>(), l - 1).prop_map(move |mut cuts| {
            cuts.insert(0, 0);
            cuts.push(d);
            LevelSpec::new(d, cuts).unwrap()
        })
    })
}

fn pair() -> impl Strategy<Value = (Vec<f32>, Vec<f32>, LevelSpec)> {
    prop::sample::select(vec![2usize, 3, 8, 64]).prop_flat_map(|d| (vec_of(d), vec_of(d), levels_for(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bounds_sandwich_the_distance((q, x, levels) in pair()) {
        let exact: f64 = q.iter().zip(&x).map(|(a, b)| (*a as f64 - *b as f64).powi(2)).sum();
        let tol = 1e-9 * (exact + 1.0) + 1e-12 * q.iter().chain(&x).map(|v| (*v as f64).powi(2)).sum::<f64>();
        let qt = precompute_tails(&q, &levels).unwrap();
        let xt = precompute_tails(&x, &levels).unwrap();
        let mut s = RefineState::initial(qt.as_ref(), xt.as_ref());
        prop_assert!(s.lb <= exact + tol && exact <= s.ub + tol);
        for level in 1..=levels.num_levels() {
            let next = refine_step(s, qt.as_ref(), xt.as_ref(), &levels, level).unwrap();
            prop_assert!(next.lb + tol >= s.lb, "LB fell at level {level}");
            prop_assert!(next.ub <= s.ub + tol, "UB rose at level {level}");
            prop_assert!(next.lb <= exact + tol && exact <= next.ub + tol);
            s = next;
        }
        let rel = 1e-5 * exact.max(f64::MIN_POSITIVE);
        prop_assert!((s.lb - exact).abs() <= rel.max(tol));
        prop_assert!((s.ub - exact).abs() <= rel.max(tol));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cayley_map_is_orthogonal(d in 2usize..12, gamma in 0.01f64..=4.0, seed in any::<u64>()) {
        let n = SkewParams::param_count(d);
        let mut state = seed;
        let upper = (0..n).map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 6.0
        }).collect();
        let t = cayley_map(&SkewParams::new(d, upper).unwrap(), gamma).unwrap();
        prop_assert!(orthogonality_error(&t) <= 1e-10);
    }

    #[test]
    fn published_models_preserve_norms(d in 2usize..16, scale in 0.0f64..2.0, x in vec_of(16)) {
        let n = SkewParams::param_count(d);
        let upper = (0..n).map(|i| scale * ((i as f64 * 0.7).sin())).collect();
        let warm = nalgebra::DMatrix::<f64>::identity(d, d);
        let model = TransformModel::compose(SkewParams::new(d, upper).unwrap(), 1.0, &warm, 0).unwrap();
        prop_assert!(model.orthogonality_error() <= 1e-4);
        let x = &x[..d];
        let y = model.apply(x).unwrap();
        let nx: f64 = x.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        prop_assert!((nx - ny).abs() <= 1e-4 * nx.max(1e-30));
    }

    #[test]
    fn level_major_round_trip(d in 1usize..20, n in 1usize..60, b in 1usize..17, seed in any::<u32>()) {
        let data: Vec<f32> = (0..n * d).map(|i| ((i as u32).wrapping_mul(2654435761) ^ seed) as f32 / 1e6).collect();
        let raw = VectorSet::new(d, data).unwrap();
        let levels = LevelSpec::default_for(d).unwrap();
        let ds = TransformedDataset::from_coefficients(raw.clone(), levels.clone()).unwrap();
        let batches = build_batches(&ds, b).unwrap();
        prop_assert_eq!(batches.len(), n.div_ceil(b));
        for batch in &batches {
            let bl = batch.len();
            let mut expected = 0;
            for level in 1..=levels.num_levels() {
                for i in 0..bl {
                    prop_assert_eq!(batch.offset(level, i), expected);
                    expected += levels.width(level);
                }
            }
        }
        let back = reconstruct(&batches).unwrap();
        prop_assert_eq!(back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        raw.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn heap_keeps_the_k_smallest(k in 1usize..10, items in prop::collection::vec((0u32..50, 0u32..1000), 1..80)) {
        let mut heap = ResultHeap::new(k);
        let mut seen = std::collections::BTreeMap::new();
        for (dist, id) in items {
            if seen.contains_key(&id) {
                continue;
            }
            seen.insert(id, dist as f64);
            heap.push_exact(dist as f64, id);
        }
        let mut all: Vec<(f64, u32)> = seen.iter().map(|(id, d)| (*d, *id)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        let got: Vec<(f64, u32)> = heap.into_sorted().into_iter().map(|e| (e.distance, e.id)).collect();
        prop_assert_eq!(got, all);
    }
}
