use mdimlab::covers::{
    build_cube_tree, hausdorff_content, max_separated, min_spanning, optimal_cover_cost, sandwich_check, Method,
    SolverConfig, Window,
};
use mdimlab::systems::{build_k_shift, build_line, build_two_point, KAlphabetSpec};
use mdimlab::{BowenScale, MetricSystem, TOLERANCE};
use proptest::prelude::*;

fn n(k: usize) -> BowenScale {
    BowenScale::new(k).unwrap()
}

fn exact() -> SolverConfig {
    SolverConfig::default()
}

fn line3() -> MetricSystem {
    build_line("line3", &[0.0, 0.5, 1.0]).unwrap()
}

fn dist_table(sys: &MetricSystem, k: usize) -> Vec<Vec<f64>> {
    (0..sys.len())
        .map(|u| (0..sys.len()).map(|v| sys.bowen_distance(n(k), u, v).unwrap()).collect())
        .collect()
}

// brute force over all subsets
fn oracle_sep(d: &[Vec<f64>], eps: f64) -> usize {
    let len = d.len();
    (1u32..1 << len)
        .filter(|&m| {
            (0..len).all(|u| {
                (u + 1..len).all(|v| m >> u & 1 == 0 || m >> v & 1 == 0 || d[u][v] >= eps - TOLERANCE)
            })
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(1)
}

fn oracle_span(d: &[Vec<f64>], eps: f64) -> usize {
    let len = d.len();
    (1u32..1 << len)
        .filter(|&m| (0..len).all(|v| (0..len).any(|u| m >> u & 1 == 1 && d[u][v] < eps - TOLERANCE)))
        .map(|m| m.count_ones() as usize)
        .min()
        .unwrap()
}

#[test]
fn separation_examples() {
    let sys = line3();
    let v = sys.view(n(1));
    assert_eq!(max_separated(&v, 0.6, &exact()).unwrap().sep(), 2);
    assert_eq!(max_separated(&v, 0.4, &exact()).unwrap().sep(), 3);
    assert_eq!(max_separated(&v, 1.5, &exact()).unwrap().sep(), 1);
    assert!(max_separated(&v, 0.0, &exact()).is_err());
}

#[test]
fn spanning_examples() {
    let v3 = line3();
    assert_eq!(min_spanning(&v3.view(n(1)), 0.6, &exact()).unwrap().span(), 1);
    let single = MetricSystem::singleton("s");
    assert_eq!(min_spanning(&single.view(n(1)), 0.1, &exact()).unwrap().span(), 1);
    // open neighborhoods: distance exactly ε does not count
    let two = build_two_point(1.0).unwrap();
    assert_eq!(min_spanning(&two.view(n(1)), 1.0, &exact()).unwrap().span(), 2);
    assert_eq!(min_spanning(&two.view(n(1)), 1.0 + 1e-9, &exact()).unwrap().span(), 1);
}

#[test]
fn sandwich_examples() {
    let sys = line3();
    let v = sys.view(n(1));
    let out = sandwich_check(
        &max_separated(&v, 0.8, &exact()).unwrap(),
        &min_spanning(&v, 0.4, &exact()).unwrap(),
        &max_separated(&v, 0.4, &exact()).unwrap(),
    )
    .unwrap();
    assert!(out.passed);
    // neighbors sit at distance 0.5, outside every open 0.4-ball, so the
    // spanning count is 3 rather than 2
    let d = dist_table(&sys, 1);
    assert_eq!(oracle_span(&d, 0.4), 3);
    assert_eq!((out.sep_double, out.span, out.sep), (2, 3, 3));

    let single = MetricSystem::singleton("s");
    let v = single.view(n(1));
    let out = sandwich_check(
        &max_separated(&v, 1.0, &exact()).unwrap(),
        &min_spanning(&v, 0.5, &exact()).unwrap(),
        &max_separated(&v, 0.5, &exact()).unwrap(),
    )
    .unwrap();
    assert!(out.passed);
    assert_eq!((out.sep_double, out.span, out.sep), (1, 1, 1));

    let k = build_k_shift(KAlphabetSpec { m_max: 2 }, 2, 100).unwrap();
    let v = k.view(n(2));
    let e = 0.125;
    let reports = [
        max_separated(&v, 2.0 * e, &exact()).unwrap(),
        min_spanning(&v, e, &exact()).unwrap(),
        max_separated(&v, e, &exact()).unwrap(),
    ];
    assert!(reports.iter().all(|r| r.method == Method::Exact));
    assert!(sandwich_check(&reports[0], &reports[1], &reports[2]).unwrap().passed);
}

#[test]
fn sandwich_rejects_mismatched_scales() {
    let sys = line3();
    let v = sys.view(n(1));
    let bad = sandwich_check(
        &max_separated(&v, 0.5, &exact()).unwrap(),
        &min_spanning(&v, 0.4, &exact()).unwrap(),
        &max_separated(&v, 0.4, &exact()).unwrap(),
    );
    assert!(bad.is_err());
}

#[test]
fn greedy_modes_bound_the_exact_counts() {
    let k = build_k_shift(KAlphabetSpec { m_max: 3 }, 3, 1000).unwrap();
    let v = k.view(n(2));
    for eps in [0.5, 0.25, 0.125] {
        let se = max_separated(&v, eps, &exact()).unwrap();
        let sg = max_separated(&v, eps, &SolverConfig::greedy()).unwrap();
        assert_eq!(sg.method, Method::GreedyLower);
        assert!(sg.sep() <= se.sep());
        let pe = min_spanning(&v, eps, &exact()).unwrap();
        let pg = min_spanning(&v, eps, &SolverConfig::greedy()).unwrap();
        assert_eq!(pg.method, Method::GreedyUpper);
        assert!(pg.span() >= pe.span());
    }
}

#[test]
fn budget_exhaustion_is_a_capacity_error_without_degrading() {
    let k = build_k_shift(KAlphabetSpec { m_max: 3 }, 4, 1000).unwrap();
    let v = k.view(n(1));
    let strict = SolverConfig {
        degrade: false,
        ..SolverConfig::default().with_budget(1)
    };
    let err = min_spanning(&v, 0.05, &strict).unwrap_err();
    assert!(err.is_capacity());
    let soft = SolverConfig::default().with_budget(1);
    let r = min_spanning(&v, 0.05, &soft).unwrap();
    assert_eq!(r.method, Method::GreedyUpper);
}

#[test]
fn cover_cost_examples() {
    let two = build_two_point(1.0).unwrap();
    let v = two.view(n(1));
    // s = 0 counts balls
    let c = optimal_cover_cost(&v, Window::below(5.0), 0.0, &exact()).unwrap();
    assert_eq!(c.cost, 1.0);
    // only the candidate radius 1/4 is admissible: two balls of diameter 1/2
    let w = Window::half_open(0.0, 0.5).with_min_diameter(0.5);
    let c = optimal_cover_cost(&v, w, 1.0, &exact()).unwrap();
    assert!((c.cost - 1.0).abs() < 1e-12);
    assert_eq!(c.balls.len(), 2);

    let sys = line3();
    let c = optimal_cover_cost(&sys.view(n(1)), Window::half_open(0.4, 1.0), 1.0, &exact()).unwrap();
    assert!((c.cost - 1.0).abs() < 1e-12);
    assert_eq!(c.balls.len(), 1);
    assert_eq!(c.balls[0].center, 1);
    assert!(c.diameters.iter().all(|&d| d > 0.4 && d <= 1.0 + TOLERANCE));
}

#[test]
fn hausdorff_content_examples() {
    let single = MetricSystem::singleton("s");
    let v = single.view(n(1));
    let (h, _) = hausdorff_content(&v, 0.7, 1.0, 0.25, &exact()).unwrap();
    assert!((h - 0.25f64.powf(0.7)).abs() < 1e-12);
    let (h0, _) = hausdorff_content(&v, 0.7, 1.0, 0.0, &exact()).unwrap();
    assert_eq!(h0, 0.0);

    let two = build_two_point(1.0).unwrap();
    let v = two.view(n(1));
    assert_eq!(hausdorff_content(&v, 0.0, 0.5, 0.0, &exact()).unwrap().0, 2.0);
    assert_eq!(hausdorff_content(&v, 0.0, 3.0, 0.0, &exact()).unwrap().0, 1.0);
}

#[test]
fn cube_tree_examples() {
    let sys = line3();
    let v = sys.view(n(1));
    let tree = build_cube_tree(&v, 1.0 / 20.0, 1).unwrap();
    assert_eq!(tree.level(1).len(), 3);
    assert!(tree.level(1).iter().all(|c| c.members.len() == 1));
    tree.verify(&v).unwrap();

    let k = build_k_shift(KAlphabetSpec { m_max: 2 }, 3, 100).unwrap();
    let v = k.view(n(1));
    let tree = build_cube_tree(&v, 1.0 / 20.0, 2).unwrap();
    tree.verify(&v).unwrap();
    for k in 1..=tree.depth() {
        let mut all: Vec<usize> = tree.level(k).iter().flat_map(|c| c.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..v.len()).collect::<Vec<_>>(), "level {k} partitions");
    }
    for (i, cube) in tree.level(2).iter().enumerate() {
        let parent = cube.parent.expect("level-2 cubes have parents");
        let outer = &tree.level(1)[parent];
        assert!(cube.members.iter().all(|p| outer.members.contains(p)), "cube {i}");
        assert!(cube.members.iter().all(|&p| tree.cube_of(1, p) == parent));
    }
}

fn small_system() -> impl Strategy<Value = MetricSystem> {
    (1usize..9).prop_flat_map(|len| {
        (
            prop::collection::vec(0.0f64..1.0, len),
            prop::collection::vec(0..len, len),
        )
            .prop_map(move |(xs, d)| MetricSystem::from_coordinates("r", 1, xs, vec![1.0], d).unwrap())
    })
}

proptest! {
    #[test]
    fn exact_counts_match_brute_force(sys in small_system(), eps in 0.02f64..0.8, k in 1usize..4) {
        let d = dist_table(&sys, k);
        let v = sys.view(n(k));
        let sep = max_separated(&v, eps, &exact()).unwrap();
        let span = min_spanning(&v, eps, &exact()).unwrap();
        prop_assert_eq!(sep.method, Method::Exact);
        prop_assert_eq!(sep.sep(), oracle_sep(&d, eps));
        prop_assert_eq!(span.span(), oracle_span(&d, eps));
    }

    #[test]
    fn sandwich_holds_on_random_systems(sys in small_system(), eps in 0.02f64..0.6, k in 1usize..4) {
        let v = sys.view(n(k));
        let out = sandwich_check(
            &max_separated(&v, 2.0 * eps, &exact()).unwrap(),
            &min_spanning(&v, eps, &exact()).unwrap(),
            &max_separated(&v, eps, &exact()).unwrap(),
        ).unwrap();
        prop_assert!(out.passed, "{:?}", out.counterexample);
    }

    #[test]
    fn cover_cost_is_monotone_in_the_window(sys in small_system(), lo in 0.0f64..0.3, s in 0.0f64..2.0) {
        let v = sys.view(n(1));
        let narrow = optimal_cover_cost(&v, Window::half_open(lo + 0.2, 1.5), s, &exact());
        let wide = optimal_cover_cost(&v, Window::half_open(lo, 1.5), s, &exact());
        if let (Ok(a), Ok(b)) = (narrow, wide) {
            prop_assert!(b.cost <= a.cost * (1.0 + 1e-12));
        }
    }
}
