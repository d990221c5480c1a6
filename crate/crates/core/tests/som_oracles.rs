use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use puckergrade::som::{
    in_neighborhood, ClassifyMode, Grade, SomError, SomModel, TrainingSchedule,
};

/// Full scan, no pruning; first minimum in row-major order.
fn brute_bmu(m: &SomModel, x: &[f64]) -> (usize, usize, f64) {
    let mut best = (0, 0, f64::INFINITY);
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let d: f64 = m
                .weight(r, c)
                .iter()
                .zip(x)
                .map(|(w, v)| (w - v).powi(2))
                .sum();
            if d < best.2 {
                best = (r, c, d);
            }
        }
    }
    (best.0, best.1, best.2.sqrt())
}

fn random_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random()).collect()
}

#[test]
fn bmu_agrees_with_full_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..300 {
        let dim = [1, 3, 64, 65, 200][trial % 5];
        let m = SomModel::new(
            rng.random_range(1..8),
            rng.random_range(1..8),
            dim,
            trial as u64,
        )
        .unwrap();
        let x = random_vec(&mut rng, dim);
        let b = m.bmu(&x).unwrap();
        let (r, c, d) = brute_bmu(&m, &x);
        if (b.row, b.col) != (r, c) {
            // Only acceptable when the two candidates are a floating-point tie.
            assert!(
                (b.distance - d).abs() <= 1e-12 * d.max(1.0),
                "trial {trial}"
            );
        }
        assert!((b.distance - d).abs() <= 1e-12 * d.max(1.0));
    }
}

#[test]
fn bmu_ties_go_to_first_node() {
    let dim = 70;
    let mut weights = Vec::new();
    for node in 0..6 {
        let v = if node == 2 || node == 4 { 0.5 } else { 0.9 };
        weights.extend(std::iter::repeat_n(v, dim));
    }
    let m = SomModel::from_parts(
        2,
        3,
        dim,
        0,
        weights,
        vec![None; 6],
        ClassifyMode::BmuDistance,
    )
    .unwrap();
    let b = m.bmu(&vec![0.5; dim]).unwrap();
    assert_eq!((b.row, b.col, b.distance), (0, 2, 0.0));
}

#[test]
fn schedules_hit_both_endpoints() {
    for (a0, d0, total) in [
        (0.35, 4.0, 1000),
        (1.0, 7.5, 1),
        (0.0, 0.0, 17),
        (0.9, 3.0, 123_456),
    ] {
        let s = TrainingSchedule::new(a0, d0, total).unwrap();
        assert_eq!(s.learning_rate(0).unwrap(), a0);
        assert_eq!(s.neighborhood_radius(0).unwrap(), d0);
        assert_eq!(s.learning_rate(total).unwrap(), 0.0);
        assert_eq!(s.neighborhood_radius(total).unwrap(), 0.0);
        let mut prev = f64::INFINITY;
        for t in (0..=total).step_by((total / 10).max(1) as usize) {
            let a = s.learning_rate(t).unwrap();
            assert!(a <= prev);
            prev = a;
        }
        assert!(matches!(
            s.learning_rate(total + 1),
            Err(SomError::IterationOutOfRange { .. })
        ));
    }
    assert!(TrainingSchedule::new(1.5, 1.0, 10).is_err());
    assert!(TrainingSchedule::new(0.5, -1.0, 10).is_err());
    assert!(TrainingSchedule::new(0.5, 1.0, 0).is_err());
}

#[test]
fn default_schedule_for_ten_by_ten() {
    let s = TrainingSchedule::default_for(10, 10, 5);
    assert_eq!((s.alpha0(), s.d0(), s.iterations()), (0.35, 4.0, 1000));
}

#[test]
fn full_step_copies_input_inside_window_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..50 {
        let (rows, cols, dim) = (
            rng.random_range(1..9),
            rng.random_range(1..9),
            rng.random_range(1..20),
        );
        let before = SomModel::new(rows, cols, dim, trial).unwrap();
        let mut after = before.clone();
        let winner = (rng.random_range(0..rows), rng.random_range(0..cols));
        let radius = rng.random_range(0.0..5.0);
        let x = random_vec(&mut rng, dim);
        after.update(&x, winner, 1.0, radius).unwrap();
        for r in 0..rows {
            for c in 0..cols {
                let inside = r.abs_diff(winner.0) as f64 <= radius.ceil() - 1.0
                    && c.abs_diff(winner.1) as f64 <= radius.ceil() - 1.0
                    || (r, c) == winner;
                assert_eq!(inside, in_neighborhood((r, c), winner, radius));
                if inside {
                    assert_eq!(after.weight(r, c), &x[..]);
                } else {
                    let a: Vec<u64> = after.weight(r, c).iter().map(|v| v.to_bits()).collect();
                    let b: Vec<u64> = before.weight(r, c).iter().map(|v| v.to_bits()).collect();
                    assert_eq!(a, b);
                }
            }
        }
    }
}

#[test]
fn zero_step_changes_nothing() {
    let before = SomModel::new(4, 4, 3, 1).unwrap();
    let mut after = before.clone();
    after.update(&[0.2, 0.3, 0.4], (1, 1), 0.0, 10.0).unwrap();
    assert_eq!(before, after);
}

#[test]
fn trained_prototypes_classify_to_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dim = 16;
    let protos: Vec<(Vec<f64>, Grade)> = Grade::ALL
        .iter()
        .map(|&g| (random_vec(&mut rng, dim), g))
        .collect();
    let samples: Vec<&[f64]> = protos.iter().map(|(v, _)| v.as_slice()).collect();
    let mut m = SomModel::new(10, 10, dim, 42).unwrap();
    assert_eq!(m.classify(samples[0]), Err(SomError::UnlabeledModel));
    m.train(
        &samples,
        &TrainingSchedule::default_for(10, 10, samples.len()),
    )
    .unwrap();
    m.label_nodes(&protos).unwrap();
    for (v, g) in &protos {
        assert_eq!(m.classify(v).unwrap().grade, *g);
    }
    assert!(m.quantization_error(&samples).unwrap() < 1e-3);
}

#[test]
fn training_is_deterministic() {
    let samples = vec![vec![0.1, 0.9], vec![0.8, 0.2], vec![0.5, 0.5]];
    let sched = TrainingSchedule::new(0.35, 2.0, 300).unwrap();
    let mut a = SomModel::new(5, 5, 2, 3).unwrap();
    let mut b = SomModel::new(5, 5, 2, 3).unwrap();
    a.train(&samples, &sched).unwrap();
    b.train(&samples, &sched).unwrap();
    let bits = |m: &SomModel| m.weights().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn dimension_errors() {
    let mut m = SomModel::new(2, 2, 3, 0).unwrap();
    let want = SomError::DimensionMismatch {
        expected: 3,
        found: 2,
    };
    assert_eq!(m.bmu(&[0.0, 0.0]), Err(want.clone()));
    assert_eq!(m.update(&[0.0, 0.0], (0, 0), 0.5, 1.0), Err(want));
    assert!(matches!(
        m.update(&[0.0; 3], (2, 0), 0.5, 1.0),
        Err(SomError::NodeOutOfRange { .. })
    ));
    assert!(matches!(
        m.update(&[0.0; 3], (0, 0), 1.5, 1.0),
        Err(SomError::InvalidLearningRate(_))
    ));
    let empty: Vec<Vec<f64>> = Vec::new();
    assert_eq!(
        m.train(&empty, &TrainingSchedule::new(0.1, 1.0, 1).unwrap()),
        Err(SomError::EmptyTrainingSet)
    );
}

proptest! {
    #[test]
    fn bmu_invariant_under_power_of_two_scaling(
        seed in any::<u64>(),
        x in proptest::collection::vec(0.0f64..1.0, 6),
        e in -8i32..8,
    ) {
        let m = SomModel::new(4, 5, 6, seed).unwrap();
        let k = 2f64.powi(e);
        let scaled_w: Vec<f64> = m.weights().iter().map(|w| w * k).collect();
        let scaled = SomModel::from_parts(4, 5, 6, seed, scaled_w, vec![None; 20], ClassifyMode::BmuDistance).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * k).collect();
        let (a, b) = (m.bmu(&x).unwrap(), scaled.bmu(&xs).unwrap());
        prop_assert_eq!((a.row, a.col), (b.row, b.col));
        prop_assert_eq!(a.distance * k, b.distance);
    }

    #[test]
    fn update_moves_window_toward_input(
        seed in any::<u64>(),
        alpha in 0.0f64..=1.0,
        radius in 0.0f64..6.0,
        wr in 0usize..6,
        wc in 0usize..6,
    ) {
        let before = SomModel::new(6, 6, 4, seed).unwrap();
        let mut after = before.clone();
        let x = [0.25, 0.5, 0.75, 1.0];
        after.update(&x, (wr, wc), alpha, radius).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let inside = in_neighborhood((r, c), (wr, wc), radius);
                for ((a, b), xv) in after.weight(r, c).iter().zip(before.weight(r, c)).zip(x) {
                    if inside {
                        prop_assert!((a - xv).abs() <= (b - xv).abs() + 1e-15);
                    } else {
                        prop_assert_eq!(a.to_bits(), b.to_bits());
                    }
                }
            }
        }
    }
}
