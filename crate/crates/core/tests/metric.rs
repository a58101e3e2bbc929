use mdimlab::metric::{ball_members, bowen_distance, set_diameter};
use mdimlab::systems::{build_line, build_shift, ShiftBoundary, ShiftSpec};
use mdimlab::{Ball, BowenScale, MetricSystem, PointId};
use proptest::prelude::*;

fn n(k: usize) -> BowenScale {
    BowenScale::new(k).unwrap()
}

fn find(sys: &MetricSystem, word: &[f64]) -> PointId {
    (0..sys.len()).find(|&u| sys.coords(u).unwrap() == word).expect("word in model")
}

// independent oracle: weighted sum over materialized coordinates
fn sum_metric(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| 0.5f64.powi(i as i32 + 1) * (x - y).abs())
        .sum()
}

fn shift_word(w: &[f64], hold: bool) -> Vec<f64> {
    let mut out = w[1..].to_vec();
    out.push(if hold { w[w.len() - 1] } else { 0.0 });
    out
}

fn oracle_bowen(a: &[f64], b: &[f64], k: usize, hold: bool) -> f64 {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    let mut best: f64 = 0.0;
    for _ in 0..k {
        best = best.max(sum_metric(&a, &b));
        a = shift_word(&a, hold);
        b = shift_word(&b, hold);
    }
    best
}

#[test]
fn two_symbol_cylinders_at_one_iterate() {
    let sys = build_shift("bin3", &ShiftSpec::new(vec![0.0, 1.0], 3).unwrap(), 100).unwrap();
    let (u, v) = (find(&sys, &[0.0, 1.0, 0.0]), find(&sys, &[0.0, 0.0, 1.0]));
    assert!((bowen_distance(&sys, n(1), u, v).unwrap() - 0.375).abs() < 1e-15);
}

#[test]
fn two_symbol_cylinders_at_two_iterates() {
    // 0.75 needs the shifted-in coordinate to be 0; holding the last
    // coordinate (the default boundary) gives 0.875
    let spec = ShiftSpec::new(vec![0.0, 1.0], 3).unwrap().with_boundary(ShiftBoundary::Zero);
    let sys = build_shift("bin3z", &spec, 100).unwrap();
    let (u, v) = (find(&sys, &[0.0, 1.0, 0.0]), find(&sys, &[0.0, 0.0, 1.0]));
    assert!((bowen_distance(&sys, n(2), u, v).unwrap() - 0.75).abs() < 1e-15);

    let held = build_shift("bin3", &ShiftSpec::new(vec![0.0, 1.0], 3).unwrap(), 100).unwrap();
    let (u, v) = (find(&held, &[0.0, 1.0, 0.0]), find(&held, &[0.0, 0.0, 1.0]));
    let d = bowen_distance(&held, n(2), u, v).unwrap();
    assert!((d - oracle_bowen(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], 2, true)).abs() < 1e-15);
    assert!((d - 0.875).abs() < 1e-15);
}

#[test]
fn shift_distances_match_oracle_exhaustively() {
    for hold in [true, false] {
        let boundary = if hold { ShiftBoundary::Hold } else { ShiftBoundary::Zero };
        let spec = ShiftSpec::new(vec![0.0, 0.5, 1.0], 3).unwrap().with_boundary(boundary);
        let sys = build_shift("tri3", &spec, 100).unwrap();
        for k in 1..=3 {
            for u in 0..sys.len() {
                for v in 0..sys.len() {
                    let want = oracle_bowen(sys.coords(u).unwrap(), sys.coords(v).unwrap(), k, hold);
                    let got = bowen_distance(&sys, n(k), u, v).unwrap();
                    assert!((got - want).abs() < 1e-14, "hold={hold} N={k} {u} {v}");
                }
            }
        }
    }
}

#[test]
fn identical_points_are_at_distance_zero() {
    let sys = build_shift("bin3", &ShiftSpec::new(vec![0.0, 1.0], 3).unwrap(), 100).unwrap();
    for k in 1..5 {
        for u in 0..sys.len() {
            assert_eq!(bowen_distance(&sys, n(k), u, u).unwrap(), 0.0);
        }
    }
}

#[test]
fn invalid_ids_are_rejected() {
    let sys = build_line("l", &[0.0, 1.0]).unwrap();
    assert!(matches!(bowen_distance(&sys, n(1), 0, 2), Err(mdimlab::Error::InvalidPoint { id: 2, len: 2 })));
    assert!(BowenScale::new(0).is_err());
}

#[test]
fn ball_examples() {
    let sys = build_line("line3", &[0.0, 0.5, 1.0]).unwrap();
    let all = ball_members(&sys, &Ball::new(1, 0.5, n(1)).unwrap()).unwrap();
    assert_eq!(all, vec![0, 1, 2]);
    let zero = ball_members(&sys, &Ball::new(2, 0.0, n(1)).unwrap()).unwrap();
    assert_eq!(zero, vec![2]);
    let big = ball_members(&sys, &Ball::new(0, 5.0, n(3)).unwrap()).unwrap();
    assert_eq!(big.len(), 3);
    assert!(Ball::new(0, -1.0, n(1)).is_err());
}

#[test]
fn diameter_examples() {
    let sys = build_line("line2", &[0.0, 1.0]).unwrap();
    assert_eq!(set_diameter(&sys, n(1), &[1]).unwrap(), 0.0);
    assert_eq!(set_diameter(&sys, n(1), &[0, 1]).unwrap(), 1.0);
    assert!(set_diameter(&sys, n(1), &[]).is_err());

    // full depth-3 binary model: brute-force pairwise maximum
    let sh = build_shift("bin3", &ShiftSpec::new(vec![0.0, 1.0], 3).unwrap(), 100).unwrap();
    let all: Vec<PointId> = (0..sh.len()).collect();
    let mut want: f64 = 0.0;
    for u in 0..sh.len() {
        for v in 0..sh.len() {
            want = want.max(oracle_bowen(sh.coords(u).unwrap(), sh.coords(v).unwrap(), 2, true));
        }
    }
    assert_eq!(set_diameter(&sh, n(2), &all).unwrap(), want);
    assert!((want - 0.875).abs() < 1e-15);
}

#[test]
fn corrupted_matrix_fails_validation() {
    let d = vec![0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0];
    let sys = MetricSystem::from_matrix("bad", 3, d, vec![0, 1, 2]).unwrap();
    assert!(sys.validate_metric(1).is_err());
    let ok = build_line("line3", &[0.0, 0.5, 1.0]).unwrap();
    ok.validate_metric(1).unwrap();
}

#[test]
fn dynamics_must_be_total() {
    assert!(MetricSystem::from_matrix("x", 2, vec![0.0, 1.0, 1.0, 0.0], vec![0, 2]).is_err());
}

fn random_system() -> impl Strategy<Value = MetricSystem> {
    (2usize..9).prop_flat_map(|len| {
        (
            prop::collection::vec(0.0f64..1.0, len),
            prop::collection::vec(0..len, len),
        )
            .prop_map(move |(xs, dyn_)| MetricSystem::from_coordinates("rand", 1, xs, vec![1.0], dyn_).unwrap())
    })
}

proptest! {
    #[test]
    fn bowen_metric_is_monotone_in_n(sys in random_system()) {
        for u in 0..sys.len() {
            for v in 0..sys.len() {
                for k in 1..5 {
                    let a = bowen_distance(&sys, n(k), u, v).unwrap();
                    let b = bowen_distance(&sys, n(k + 1), u, v).unwrap();
                    prop_assert!(a <= b);
                }
            }
        }
    }

    #[test]
    fn bowen_metric_satisfies_the_axioms(sys in random_system(), k in 1usize..5) {
        let d = |u, v| bowen_distance(&sys, n(k), u, v).unwrap();
        for u in 0..sys.len() {
            prop_assert_eq!(d(u, u), 0.0);
            for v in 0..sys.len() {
                prop_assert_eq!(d(u, v), d(v, u));
                for w in 0..sys.len() {
                    prop_assert!(d(u, w) <= d(u, v) + d(v, w) + 1e-12);
                }
            }
        }
        prop_assert!(sys.validate_metric(3).is_ok());
    }

    #[test]
    fn balls_grow_with_radius_and_have_small_diameter(
        sys in random_system(), r in 0.0f64..0.6, extra in 0.0f64..0.4, k in 1usize..4,
    ) {
        for c in 0..sys.len() {
            let small = ball_members(&sys, &Ball::new(c, r, n(k)).unwrap()).unwrap();
            let large = ball_members(&sys, &Ball::new(c, r + extra, n(k)).unwrap()).unwrap();
            prop_assert!(small.contains(&c));
            prop_assert!(small.iter().all(|p| large.contains(p)));
            let diam = set_diameter(&sys, n(k), &small).unwrap();
            prop_assert!(diam <= 2.0 * r + 1e-12);
        }
    }
}
