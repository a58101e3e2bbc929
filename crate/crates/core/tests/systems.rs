use mdimlab::systems::{
    build_full_shift, build_k_shift, build_line, build_product, build_self_similar, build_shift, build_two_point,
    uniformly_perfect_check, KAlphabetSpec, ProductSpec, SelfSimilarSpec, ShiftSpec,
};
use mdimlab::{BowenScale, MetricSystem, ProductMode};
use proptest::prelude::*;

fn n(k: usize) -> BowenScale {
    BowenScale::new(k).unwrap()
}

fn pairwise_max(sys: &MetricSystem, k: usize) -> f64 {
    let mut best: f64 = 0.0;
    for u in 0..sys.len() {
        for v in 0..sys.len() {
            best = best.max(sys.bowen_distance(n(k), u, v).unwrap());
        }
    }
    best
}

#[test]
fn full_shift_examples() {
    let sys = build_full_shift(2, 3, 100).unwrap();
    assert_eq!(sys.len(), 8);
    let (zero, one) = (
        (0..8).find(|&u| sys.coords(u).unwrap() == [0.0; 3]).unwrap(),
        (0..8).find(|&u| sys.coords(u).unwrap() == [1.0; 3]).unwrap(),
    );
    assert_eq!(sys.bowen_distance(n(1), zero, one).unwrap(), 0.5 + 0.25 + 0.125);

    let d1 = build_full_shift(2, 1, 100).unwrap();
    assert_eq!(d1.len(), 2);
    assert!((0..2).all(|u| d1.image(u).unwrap() == u));

    let g3 = build_full_shift(3, 2, 100).unwrap();
    assert_eq!(g3.len(), 9);
    assert_eq!(pairwise_max(&g3, 1), 0.75);
    assert!(build_full_shift(1, 3, 100).is_err());
}

#[test]
fn k_shift_examples() {
    let k1 = build_k_shift(KAlphabetSpec { m_max: 2 }, 1, 100).unwrap();
    let mut letters: Vec<f64> = (0..k1.len()).map(|u| k1.coords(u).unwrap()[0]).collect();
    letters.sort_by(f64::total_cmp);
    assert_eq!(letters, vec![0.0, 0.5, 1.0]);
    assert_eq!(build_k_shift(KAlphabetSpec { m_max: 3 }, 2, 100).unwrap().len(), 16);

    let k2 = build_k_shift(KAlphabetSpec { m_max: 2 }, 2, 100).unwrap();
    let find = |w: [f64; 2]| (0..k2.len()).find(|&u| k2.coords(u).unwrap() == w).unwrap();
    let d = k2.base_distance(find([1.0, 0.0]), find([0.5, 0.0])).unwrap();
    assert_eq!(d, 0.25);
}

#[test]
fn capacity_errors() {
    assert!(build_k_shift(KAlphabetSpec { m_max: 3 }, 8, 1000).unwrap_err().is_capacity());
    let a = build_full_shift(2, 3, 100).unwrap();
    let spec = ProductSpec {
        left: a.clone(),
        right: a,
        metric_mode: ProductMode::Max,
    };
    assert!(build_product(spec, 50).unwrap_err().is_capacity());
}

#[test]
fn truncation_error_is_recorded() {
    for depth in 1..5 {
        let sys = build_shift("s", &ShiftSpec::new(vec![0.0, 1.0], depth).unwrap(), 100).unwrap();
        assert!(sys.truncation_error() <= 0.5f64.powi(depth as i32) + 1e-15);
        assert!(sys.truncation_error() > 0.0);
    }
}

#[test]
fn self_similar_two_constant_drivers() {
    let spec = SelfSimilarSpec {
        contraction: 0.5,
        drivers: vec![vec![0.0; 4], vec![1.0; 4]],
        driver_map: None,
        depth: 4,
        iteration_depth: 3,
    };
    let sys = build_self_similar(&spec, 100).unwrap();
    assert_eq!(sys.len(), 8);
    let mut first: Vec<f64> = (0..8).map(|u| sys.coords(u).unwrap()[0]).collect();
    first.sort_by(f64::total_cmp);
    // S_{b1} S_{b2} S_{b3}(0) has first coordinate b1 + b2/2 + b3/4
    let mut want: Vec<f64> = (0..8u32)
        .map(|w| (0..3).map(|i| f64::from(w >> (2 - i) & 1) * 0.5f64.powi(i)).sum())
        .collect();
    want.sort_by(f64::total_cmp);
    assert_eq!(first, want);
    spec.check_equivariance().unwrap();
}

#[test]
fn self_similar_rejects_bad_specs() {
    let mut spec = SelfSimilarSpec {
        contraction: 0.5,
        drivers: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        driver_map: None,
        depth: 2,
        iteration_depth: 2,
    };
    // identity driver map cannot be equivariant for non-constant drivers
    assert!(spec.check_equivariance().is_err());
    spec.driver_map = Some(vec![1, 0]);
    spec.check_equivariance().unwrap();
    spec.contraction = 1.0;
    assert!(build_self_similar(&spec, 100).is_err());
}

#[test]
fn product_examples() {
    let two = || build_two_point(1.0).unwrap();
    for (mode, want) in [(ProductMode::HalfMax, 0.5), (ProductMode::Max, 1.0)] {
        let p = build_product(
            ProductSpec {
                left: two(),
                right: two(),
                metric_mode: mode,
            },
            100,
        )
        .unwrap();
        assert_eq!(p.len(), 4);
        for u in 0..4 {
            for v in 0..4 {
                let d = p.base_distance(u, v).unwrap();
                assert_eq!(d, if u == v { 0.0 } else { want });
            }
        }
    }
    let line = build_line("line3", &[0.0, 0.5, 1.0]).unwrap();
    let p = build_product(
        ProductSpec {
            left: line.clone(),
            right: MetricSystem::singleton("pt"),
            metric_mode: ProductMode::Max,
        },
        100,
    )
    .unwrap();
    for u in 0..3 {
        for v in 0..3 {
            assert_eq!(p.base_distance(u, v).unwrap(), line.base_distance(u, v).unwrap());
        }
    }
}

#[test]
fn perfectness_examples() {
    let cert = uniformly_perfect_check(&build_two_point(1.0).unwrap(), &[n(1)], &[1.0]).unwrap();
    assert!(cert.passed && cert.c_est > 0.99);
    let single = uniformly_perfect_check(&MetricSystem::singleton("s"), &[n(1)], &[0.5, 1.0]).unwrap();
    assert!(!single.passed);
    assert!(uniformly_perfect_check(&single_line(), &[], &[1.0]).is_err());

    let k = build_k_shift(KAlphabetSpec { m_max: 3 }, 2, 100).unwrap();
    let cert = uniformly_perfect_check(&k, &[n(1), n(2)], &[0.25, 0.5]).unwrap();
    assert!(cert.passed);
    assert!(cert.c_est > 0.0 && cert.c_est < 1.0);
    assert!(!cert.witnesses.is_empty());
}

fn single_line() -> MetricSystem {
    build_line("l", &[0.0, 1.0]).unwrap()
}

fn small_system() -> impl Strategy<Value = MetricSystem> {
    (1usize..5).prop_flat_map(|len| {
        (
            prop::collection::vec(0.0f64..1.0, len),
            prop::collection::vec(0..len, len),
        )
            .prop_map(move |(xs, d)| MetricSystem::from_coordinates("r", 1, xs, vec![1.0], d).unwrap())
    })
}

proptest! {
    #[test]
    fn product_bowen_metric_combines_factor_metrics(
        a in small_system(), b in small_system(), half in any::<bool>(), k in 1usize..4,
    ) {
        let mode = if half { ProductMode::HalfMax } else { ProductMode::Max };
        let p = build_product(ProductSpec { left: a.clone(), right: b.clone(), metric_mode: mode }, 1000).unwrap();
        let nb = b.len();
        for u in 0..p.len() {
            for v in 0..p.len() {
                let da = a.bowen_distance(n(k), u / nb, v / nb).unwrap();
                let db = b.bowen_distance(n(k), u % nb, v % nb).unwrap();
                let want = if half { 0.5 * da.max(db) } else { da.max(db) };
                prop_assert!((p.bowen_distance(n(k), u, v).unwrap() - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn self_similar_points_shift_inside_the_model(c in 0.2f64..0.8, it in 1usize..4) {
        let spec = SelfSimilarSpec {
            contraction: c,
            drivers: vec![vec![0.0; 3], vec![0.5; 3], vec![1.0; 3]],
            driver_map: None,
            depth: 3,
            iteration_depth: it,
        };
        let sys = build_self_similar(&spec, 1000).unwrap();
        for u in 0..sys.len() {
            let x = sys.coords(u).unwrap();
            let y = sys.coords(sys.image(u).unwrap()).unwrap();
            prop_assert!((x[1] - y[0]).abs() < 1e-9 && (x[2] - y[1]).abs() < 1e-9);
        }
    }
}
