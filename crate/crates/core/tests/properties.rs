//! Property tests over the public API.

use std::collections::BTreeMap;

use proptest::prelude::*;

use vidprobe_core::analyze::{reversal_separability, ReversalConfig};
use vidprobe_core::knn::{knn_evaluate, KnnConfig, KnnMetric};
use vidprobe_core::metrics::{
    detection_ap, edit_score, segment_sequence, segmental_f1, tas_scores, TasOptions,
};
use vidprobe_core::numkit::{softmax, solve_spd, LrSchedule};
use vidprobe_core::probe::{infer_multiview, LinearHead};
use vidprobe_core::store::{pool_tokens, FrameLabelSeq, PoolMode, Segment, SegmentSet};
use vidprobe_core::synth::{gen_class_gaussians, gen_motion_pairs, SynthSpec};
use vidprobe_core::{load_embedding_set, write_embedding_set, EmbeddingSet, Level, Matrix, Rng};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn random_set(seed: u64, n: usize, dim: usize, tokens: usize) -> EmbeddingSet {
    let mut rng = Rng::new(seed, 0);
    let blocks = (0..n)
        .map(|i| {
            let clips = 1 + rng.below(3);
            let label = (rng.below(4) > 0).then(|| rng.below(3));
            let data = (0..clips * tokens * dim).map(|_| rng.normal() as f32).collect();
            (format!("vid-{i}"), label, clips, tokens, data)
        })
        .collect();
    let level = if tokens > 1 { Level::Patch } else { Level::Clip };
    EmbeddingSet::from_blocks("prop", dim, level, vec!["a".into(), "b".into(), "c".into()], blocks).unwrap()
}

fn seq(labels: Vec<usize>) -> FrameLabelSeq {
    FrameLabelSeq { video_id: "v".into(), fps: 10.0, labels }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn store_round_trip_is_exact(seed in any::<u64>(), n in 0usize..12, dim in 1usize..9, tokens in 1usize..4) {
        let set = random_set(seed, n, dim, tokens);
        let dir = tempfile::tempdir().unwrap();
        write_embedding_set(&set, dir.path()).unwrap();
        let back = load_embedding_set(dir.path()).unwrap();
        prop_assert_eq!(&back, &set);
        let bytes = std::fs::read(dir.path().join("data.bin")).unwrap();
        let want: Vec<u8> = set.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        prop_assert_eq!(bytes, want);
    }

    #[test]
    fn pooling_ignores_token_order_and_is_linear(seed in any::<u64>(), tokens in 1usize..8, dim in 1usize..6, alpha in -4.0f32..4.0, exp in -8i32..8) {
        let mut rng = Rng::new(seed, 0);
        let block: Vec<f32> = (0..tokens * dim).map(|_| rng.normal() as f32).collect();
        let base = pool_tokens(&block, 1, tokens, dim, PoolMode::Mean);
        let mut order: Vec<usize> = (0..tokens).collect();
        rng.shuffle(&mut order);
        let permuted: Vec<f32> = order.iter().flat_map(|&t| block[t * dim..(t + 1) * dim].to_vec()).collect();
        let p = pool_tokens(&permuted, 1, tokens, dim, PoolMode::Mean);
        for (a, b) in base.iter().zip(&p) {
            prop_assert!(rel_close(*a as f64, *b as f64, 1e-6));
        }
        // power-of-two scales commute with f32 rounding, so pooling is exactly linear
        let pow2 = 2f32.powi(exp);
        let s = pool_tokens(&block.iter().map(|v| pow2 * v).collect::<Vec<_>>(), 1, tokens, dim, PoolMode::Mean);
        for (a, b) in base.iter().zip(&s) {
            prop_assert_eq!(*b, pow2 * a);
        }
        // other scales round each input first; compare against the input magnitude
        let scaled: Vec<f32> = block.iter().map(|v| alpha * v).collect();
        let s = pool_tokens(&scaled, 1, tokens, dim, PoolMode::Mean);
        let mag = alpha.abs() as f64 * block.iter().map(|v| v.abs() as f64).fold(0.0, f64::max);
        for (a, b) in base.iter().zip(&s) {
            let want = alpha as f64 * *a as f64;
            prop_assert!((*b as f64 - want).abs() <= 1e-6 * want.abs().max(mag).max(1e-30));
        }
    }

    #[test]
    fn softmax_shift_invariant(logits in prop::collection::vec(-50.0f64..50.0, 1..10), shift in -1e3f64..1e3) {
        let a = softmax(&logits).unwrap();
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let b = softmax(&shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(*y) + 1e-300 || (x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_continuous_then_nonincreasing(base in 1e-4f64..1.0, frac in 0.0f64..1.0, warmup in 0usize..20, extra in 1usize..200) {
        let total = warmup + extra;
        let s = LrSchedule::new(base, base * frac, warmup, total).unwrap();
        let lrs: Vec<f64> = (0..total).map(|t| s.lr_at(t).unwrap()).collect();
        for w in lrs[warmup..].windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
        if warmup > 0 {
            prop_assert!((lrs[warmup] - base).abs() <= base * (1.0 / warmup as f64 + 1e-12));
            for w in lrs[..=warmup].windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }
    }

    #[test]
    fn spd_solve_residual(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = Rng::new(seed, 0);
        let g = Matrix::from_vec(n, n, (0..n * n).map(|_| rng.normal()).collect());
        let mut a = g.transpose().matmul(&g);
        for i in 0..n {
            a.data[i * n + i] += 1.0;
        }
        let b: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let x = solve_spd(&a, &b, 0.0).unwrap();
        let r = a.matvec(&x);
        let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (ri, bi) in r.iter().zip(&b) {
            prop_assert!((ri - bi).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn multiview_is_distribution_and_order_free(seed in any::<u64>(), views in 1usize..6, d in 1usize..6, c in 2usize..5) {
        let mut rng = Rng::new(seed, 0);
        let mut h = LinearHead::zeros(d, c);
        h.assign_flat(&(0..h.num_params()).map(|_| 2.0 * rng.normal()).collect::<Vec<_>>());
        let mut vs: Vec<Vec<f64>> = (0..views).map(|_| (0..d).map(|_| rng.normal()).collect()).collect();
        let p = infer_multiview(&h, &vs).unwrap();
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        vs.reverse();
        let q = infer_multiview(&h, &vs).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn detection_ap_invariant_to_monotone_scores(seed in any::<u64>(), tiou in 0.05f64..0.95) {
        let mut rng = Rng::new(seed, 0);
        let seg = |rng: &mut Rng, score: Option<f64>| {
            let s = 10.0 * rng.uniform();
            Segment { start: s, end: s + 0.5 + 5.0 * rng.uniform(), label: rng.below(3), score }
        };
        let gt = vec![SegmentSet { video_id: "a".into(), duration_sec: 20.0, segments: (0..5).map(|_| seg(&mut rng, None)).collect() }];
        let pred = vec![SegmentSet {
            video_id: "a".into(),
            duration_sec: 20.0,
            segments: (0..8).map(|_| { let s = rng.uniform(); seg(&mut rng, Some(s)) }).collect(),
        }];
        let mut moved = pred.clone();
        for s in &mut moved[0].segments {
            s.score = s.score.map(|v| (3.0 * v).exp() * 7.0 - 2.0);
        }
        let a = detection_ap(&pred, &gt, tiou).unwrap();
        let b = detection_ap(&moved, &gt, tiou).unwrap();
        prop_assert_eq!(a.per_class, b.per_class);
        prop_assert_eq!(a.map, b.map);
    }

    #[test]
    fn edit_is_symmetric(a in prop::collection::vec(0usize..4, 0..10), b in prop::collection::vec(0usize..4, 0..10)) {
        prop_assert_eq!(edit_score(&a, &b), edit_score(&b, &a));
        prop_assert_eq!(edit_score(&a, &a), 100.0);
    }

    #[test]
    fn constant_sequence_is_one_segment(label in 0usize..10, n in 1usize..50) {
        let segs = segment_sequence(&vec![label; n]);
        prop_assert_eq!(segs.len(), 1);
        prop_assert_eq!((segs[0].label, segs[0].start, segs[0].end), (label, 0, n));
    }

    #[test]
    fn f1_at_zero_overlap_is_label_multiset_match(
        pred in prop::collection::vec(0usize..4, 1..30),
        gt_seed in any::<u64>(),
        background in prop::option::of(0usize..4),
    ) {
        let mut rng = Rng::new(gt_seed, 0);
        let gt: Vec<usize> = (0..pred.len()).map(|_| rng.below(4)).collect();
        let opts = TasOptions { background };
        let count = |labels: &[usize]| {
            let mut m: BTreeMap<usize, usize> = BTreeMap::new();
            for s in segment_sequence(labels).into_iter().filter(|s| Some(s.label) != background) {
                *m.entry(s.label).or_default() += 1;
            }
            m
        };
        let (cp, cg) = (count(&pred), count(&gt));
        let tp: usize = cp.iter().map(|(l, n)| (*n).min(*cg.get(l).unwrap_or(&0))).sum();
        let (np, ng) = (cp.values().sum::<usize>(), cg.values().sum::<usize>());
        let want = if tp == 0 { 0.0 } else {
            let (p, r) = (tp as f64 / np as f64, tp as f64 / ng as f64);
            100.0 * 2.0 * p * r / (p + r)
        };
        let got = segmental_f1(&seq(pred), &seq(gt), 0.0, &opts).unwrap();
        prop_assert!((got - want).abs() <= 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn mf1_is_mean_of_f1_at(seed in any::<u64>(), videos in 1usize..4) {
        let mut rng = Rng::new(seed, 0);
        let seqs: Vec<(FrameLabelSeq, FrameLabelSeq)> = (0..videos)
            .map(|_| {
                let n = 5 + rng.below(30);
                let g: Vec<usize> = (0..n).map(|i| (i / 4 + rng.below(2)) % 3).collect();
                let p: Vec<usize> = g.iter().map(|&l| if rng.below(5) == 0 { rng.below(3) } else { l }).collect();
                (seq(p), seq(g))
            })
            .collect();
        let pairs: Vec<(&FrameLabelSeq, &FrameLabelSeq)> = seqs.iter().map(|(p, g)| (p, g)).collect();
        let s = tas_scores(&pairs, &TasOptions { background: Some(0) }).unwrap();
        prop_assert_eq!(s.mf1, s.f1_at.values().sum::<f64>() / 3.0);
    }

    #[test]
    fn generators_are_pure(seed in any::<u64>()) {
        let spec = SynthSpec { n_classes: 3, dim: 4, per_class: 5, eval_per_class: 2, seed, ..SynthSpec::default() };
        let (a, b) = (gen_class_gaussians(&spec).unwrap(), gen_class_gaussians(&spec).unwrap());
        prop_assert_eq!(a.train, b.train);
        prop_assert_eq!(a.eval, b.eval);
        prop_assert_eq!(a.truth, b.truth);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn knn_ignores_training_order(seed in any::<u64>(), k in 1usize..8, l2 in any::<bool>()) {
        let spec = SynthSpec { n_classes: 3, dim: 6, per_class: 20, eval_per_class: 10, separation: 1.5, clips_per_video: 2, seed, ..SynthSpec::default() };
        let data = gen_class_gaussians(&spec).unwrap();
        let mut rng = Rng::new(seed, 9);
        let order = rng.permutation(data.train.len());
        let blocks = order
            .iter()
            .map(|&i| {
                let r = &data.train.records[i];
                (r.id.clone(), r.label, r.clips, r.tokens, data.train.block(i).to_vec())
            })
            .collect();
        let t = &data.train;
        let shuffled = EmbeddingSet::from_blocks(t.dataset_name.clone(), t.dim, t.level, t.class_names.clone(), blocks).unwrap();
        let cfg = KnnConfig { k, metric: if l2 { KnnMetric::L2 } else { KnnMetric::Cosine }, ..KnnConfig::default() };
        let a = knn_evaluate(&data.train, &data.eval, &cfg).unwrap();
        let b = knn_evaluate(&shuffled, &data.eval, &cfg).unwrap();
        prop_assert_eq!(a.predictions, b.predictions);
    }

    #[test]
    fn lda_accuracy_invariant_under_affine_maps(seed in any::<u64>()) {
        let d = 6;
        let pairs = gen_motion_pairs(120, d, 1.0, seed).unwrap();
        let mut rng = Rng::new(seed, 77);
        let mut a = Matrix::identity(d);
        a.data.iter_mut().for_each(|v| *v += 0.15 * rng.normal());
        let shift: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let map = |set: &EmbeddingSet| {
            let blocks = (0..set.len())
                .map(|i| {
                    let r = &set.records[i];
                    let y: Vec<f32> = a.matvec(&set.clip_vectors(i)).iter().zip(&shift).map(|(u, c)| (u + c) as f32).collect();
                    (r.id.clone(), r.label, r.clips, r.tokens, y)
                })
                .collect();
            EmbeddingSet::from_blocks(set.dataset_name.clone(), d, set.level, set.class_names.clone(), blocks).unwrap()
        };
        let cfg = ReversalConfig { ridge: Some(0.0), ..ReversalConfig::default() };
        let base = reversal_separability(&pairs.forward, &pairs.reversed, &cfg).unwrap();
        let moved = reversal_separability(&map(&pairs.forward), &map(&pairs.reversed), &cfg).unwrap();
        prop_assert_eq!(base.accuracy, moved.accuracy);
    }
}
