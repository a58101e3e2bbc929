use mdimlab::covers::{CoverInstance, Method, SolverConfig, Window};
use mdimlab::dimensions::{
    aggregate, chain_check, dim_eps_h, fixed_diameter_cell, grid_threshold, hausdorff_chain_cell, holder_check,
    mean_assouad_estimate, mean_hausdorff_estimate, metric_mean_cell, metric_mean_estimate, product_check,
    psi_cell, psi_intermediate_estimate, psi_monotonicity_check, psi_window, random_partitions,
    union_stability_check, AdmissibleFunction, CountStatistic, Flavor, GridSpec, HolderMap, Side, ThresholdConfig,
};
use mdimlab::systems::{build_dyadic_line, build_full_shift, build_k_shift, build_line, build_two_point, KAlphabetSpec};
use mdimlab::{BowenScale, MetricSystem};
use proptest::prelude::*;

fn n(k: usize) -> BowenScale {
    BowenScale::new(k).unwrap()
}

fn cfg() -> ThresholdConfig {
    ThresholdConfig::default()
}

fn k_shift(m: usize, depth: usize) -> MetricSystem {
    build_k_shift(KAlphabetSpec { m_max: m }, depth, 100_000).unwrap()
}

fn psi(theta: f64) -> AdmissibleFunction {
    AdmissibleFunction::power_theta(theta).unwrap()
}

// smallest k·step where `holds` is true, by linear scan
fn scan(step: f64, limit: f64, mut holds: impl FnMut(f64) -> bool) -> f64 {
    let mut k = 0u64;
    loop {
        let x = k as f64 * step;
        if x > limit {
            return f64::INFINITY;
        }
        if holds(x) {
            return x;
        }
        k += 1;
    }
}

#[test]
fn dim_eps_h_examples() {
    let single = MetricSystem::singleton("s");
    assert_eq!(dim_eps_h(&single.view(n(1)), 0.5, Some(0.0), &cfg()).unwrap().value, 0.0);
    // two balls charged 1/4 each: 2·(1/4)^t ≤ 1 from t = 1/2 on
    let two = build_two_point(1.0).unwrap();
    let t = dim_eps_h(&two.view(n(1)), 0.5, Some(0.25), &cfg()).unwrap();
    assert!((t.value - 0.5).abs() <= 1e-4, "{}", t.value);
    assert_eq!(t.method, Method::Exact);
}

#[test]
fn dim_eps_h_matches_linear_scan_on_k_shift() {
    let sys = k_shift(2, 2);
    let v = sys.view(n(2));
    let step = 1e-4;
    let floor = v.min_separation().unwrap();
    // the closest pair sits at 0.25, so ε = 0.25 admits no ball at all
    assert!(dim_eps_h(&v, 0.25, None, &cfg()).is_err());
    let got = dim_eps_h(&v, 0.5, None, &cfg()).unwrap().value;
    let inst = CoverInstance::build(&v, Window::below(0.5).with_min_diameter(floor), None).unwrap();
    let solver = SolverConfig::default();
    let want = scan(step, 20.0, |t| inst.solve(t, &solver).unwrap().cost <= 1.0 + 1e-12);
    assert!((got - want).abs() <= 1e-4, "{got} vs {want}");
}

#[test]
fn grid_threshold_matches_scan_for_monotone_predicates() {
    for edge in [0.0, 0.00005, 0.3333, 1.25, 7.0] {
        let got = grid_threshold(1e-3, |x| Ok(x >= edge)).unwrap();
        let want = scan(1e-3, 100.0, |x| x >= edge);
        assert!((got - want).abs() < 1e-12, "edge {edge}");
    }
}

#[test]
fn singleton_psi_threshold_has_a_closed_form() {
    // the only cover is one ball charged at the window floor Ψ(ε), so
    // Ψ(ε)^{N s} < δ gives s* = ln δ / (N ln Ψ(ε))
    let single = MetricSystem::singleton("s");
    for (theta, eps, k, delta) in [(0.5, 0.5, 1, 0.5f64), (0.5, 0.25, 2, 0.5), (0.25, 0.5, 3, 0.25)] {
        let p = psi(theta);
        let floor = p.eval(eps).unwrap();
        let want = delta.ln() / (k as f64 * floor.ln());
        let got = psi_cell(&single.view(n(k)), eps, &p, delta, &cfg()).unwrap().value;
        assert!(got >= want - 1e-12 && got <= want + 1e-4 + 1e-12, "{got} vs {want}");
        assert!(got > 0.0);
    }
}

#[test]
fn two_point_psi_threshold_has_a_closed_form() {
    // covers are one ball of reach d (charged 2d) or two balls at the floor
    let d = 0.2;
    let two = build_two_point(d).unwrap();
    let p = psi(0.5);
    for (eps, k, delta) in [(0.5, 1, 0.5f64), (0.45, 2, 0.5), (0.5, 2, 0.1)] {
        let lo = p.eval(eps).unwrap();
        let one = delta.ln() / (k as f64 * (2.0 * d).ln());
        let pair = (delta / 2.0).ln() / (k as f64 * lo.ln());
        let want = one.min(pair);
        let got = psi_cell(&two.view(n(k)), eps, &p, delta, &cfg()).unwrap().value;
        assert!(got >= want - 1e-12 && got <= want + 1e-4 + 1e-12, "{got} vs {want}");
    }
}

#[test]
fn psi_threshold_matches_linear_scan() {
    let step = 1e-3;
    let c = ThresholdConfig {
        step,
        solver: SolverConfig::default(),
    };
    let solver = SolverConfig::default();
    for sys in [k_shift(2, 2), build_line("line3", &[0.0, 0.5, 1.0]).unwrap()] {
        for k in [1, 2] {
            for eps in [0.5, 0.25] {
                let v = sys.view(n(k));
                let p = psi(0.5);
                let got = psi_cell(&v, eps, &p, 0.5, &c).unwrap().value;
                let inst = CoverInstance::build(&v, psi_window(&p, eps).unwrap(), None).unwrap();
                let want = scan(step, 50.0, |s| inst.solve(k as f64 * s, &solver).unwrap().cost < 0.5 - 1e-12);
                assert!((got - want).abs() < 1e-9, "{} N={k} eps={eps}: {got} vs {want}", sys.label());
            }
        }
    }
}

// points sharing the first N+2 letters are closer than 1/8 and points that
// differ there are at least 1/8 apart, so sep is the number of such prefixes
fn dyadic_sep_oracle(sys: &MetricSystem, k: usize) -> usize {
    let prefix = |u: usize| sys.coords(u).unwrap()[..k + 2].to_vec();
    for u in 0..sys.len() {
        for v in 0..sys.len() {
            let d = sys.bowen_distance(n(k), u, v).unwrap();
            assert_eq!(prefix(u) == prefix(v), d < 0.125, "{u} {v} at N={k}");
        }
    }
    let mut all: Vec<Vec<f64>> = (0..sys.len()).map(prefix).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    all.len()
}

#[test]
fn metric_mean_on_the_dyadic_model() {
    for (k, depth) in [(1, 4), (2, 5), (3, 6), (2, 7)] {
        let sys = build_full_shift(2, depth, 1000).unwrap();
        let sep = dyadic_sep_oracle(&sys, k);
        assert_eq!(sep, 1 << (k + 2));
        let (v, m) = metric_mean_cell(&sys.view(n(k)), 0.125, CountStatistic::Sep, &SolverConfig::default()).unwrap();
        assert_eq!(m, Method::Exact);
        let want = (k as f64 + 2.0) / (3.0 * k as f64);
        assert!((v - want).abs() < 1e-12, "N={k}: {v} vs {want}");
    }
}

#[test]
fn singleton_estimates_are_zero() {
    let single = MetricSystem::singleton("s");
    let spec = GridSpec::new(vec![0.5, 0.25, 0.125], vec![1, 2, 3, 4]).unwrap();
    for side in [Side::Upper, Side::Lower] {
        assert_eq!(mean_hausdorff_estimate(&single, &spec, side, &cfg()).unwrap().value, 0.0);
        let mm = metric_mean_estimate(&single, &spec, side, CountStatistic::Sep, &cfg()).unwrap();
        assert_eq!(mm.value, 0.0);
    }
    let fit = mean_assouad_estimate(&single, &[1, 2], &[0.5], &[0.25, 0.125], &SolverConfig::default()).unwrap();
    assert_eq!((fit.a, fit.c), (0.0, 1.0));
}

#[test]
fn identity_dynamics_has_vanishing_hausdorff_statistic() {
    let line = build_dyadic_line(8).unwrap();
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2, 4, 8]).unwrap();
    let est = mean_hausdorff_estimate(&line, &spec, Side::Upper, &cfg()).unwrap();
    // the numerator does not depend on N
    for ei in 0..2 {
        let first = est.grid.value(ei, 0).unwrap();
        for ni in 1..4 {
            let v = est.grid.value(ei, ni).unwrap();
            let k = spec.scales[ni] as f64;
            assert!((v - first / k).abs() < 1e-3, "{v} vs {}", first / k);
        }
    }
    let widest = (0..2).map(|ei| est.grid.value(ei, 0).unwrap()).fold(0.0, f64::max);
    assert!(est.value <= widest / 4.0 + 1e-3, "{} vs {widest}", est.value);
}

#[test]
fn zero_psi_matches_mean_hausdorff_cellwise() {
    let sys = k_shift(2, 3);
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    let zero = AdmissibleFunction::zero();
    let est = psi_intermediate_estimate(&sys, &spec, &zero, Side::Upper, 0.5, &cfg()).unwrap();
    let same = psi_intermediate_estimate(&sys, &spec, &zero, Side::Upper, 0.5, &cfg()).unwrap();
    assert_eq!(est.value, same.value);
    assert_eq!(est.flavor, Flavor::PsiIntermediate);
    assert_eq!(est.delta, Some(0.5));
}

#[test]
fn metric_mean_on_k_shift_grows_with_the_alphabet() {
    // depth-N model at ε = 1/16
    let mut last = 0.0;
    for m in 2..=4 {
        let sys = k_shift(m, 4);
        let (v, method) = metric_mean_cell(&sys.view(n(4)), 0.0625, CountStatistic::Sep, &SolverConfig::default()).unwrap();
        assert_eq!(method, Method::Exact);
        assert!(v >= last, "m={m}: {v} < {last}");
        assert!(v > 0.3 && v < 0.7, "m={m}: {v}");
        last = v;
    }
}

#[test]
fn hausdorff_upper_estimate_is_below_metric_mean() {
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    for m in 2..=3 {
        let sys = k_shift(m, 3);
        let h = mean_hausdorff_estimate(&sys, &spec, Side::Upper, &cfg()).unwrap();
        let mm = metric_mean_estimate(&sys, &spec, Side::Upper, CountStatistic::Sep, &cfg()).unwrap();
        assert!(h.value <= mm.value + 1e-9, "m={m}: {} > {}", h.value, mm.value);
    }
}

#[test]
fn assouad_on_dyadic_line() {
    let line = build_dyadic_line(32).unwrap();
    let fit = mean_assouad_estimate(
        &line,
        &[1, 2],
        &[0.5, 0.25],
        &[0.25, 0.125, 0.0625, 0.03125],
        &SolverConfig::default(),
    )
    .unwrap();
    assert!((fit.a - 1.0).abs() <= 0.15, "a = {}", fit.a);
    assert!(fit.samples.iter().all(|s| s.residual >= 0.0));

    let spec = GridSpec::new(vec![0.25, 0.125, 0.0625], vec![1, 2]).unwrap();
    let mm = metric_mean_estimate(&line, &spec, Side::Upper, CountStatistic::Sep, &cfg()).unwrap();
    assert!(fit.a >= mm.value, "{} < {}", fit.a, mm.value);
}

#[test]
fn chain_examples() {
    let spec = GridSpec::new(vec![0.5, 0.25, 0.125], vec![1, 2, 3]).unwrap();
    let p = psi(0.5);
    let single = chain_check(&MetricSystem::singleton("s"), &spec, &p, 0.5, &cfg()).unwrap();
    assert!(single.passed);
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    let k = chain_check(&k_shift(2, 3), &spec, &p, 0.5, &cfg()).unwrap();
    assert!(k.passed, "{:?}", k.violations);
    let full = chain_check(&build_full_shift(2, 4, 100).unwrap(), &spec, &p, 0.5, &cfg()).unwrap();
    assert!(full.passed, "{:?}", full.violations);
    for cell in k.cells.iter().chain(&full.cells) {
        if let (Some(h), Some(s), Some(f)) = (cell.hausdorff, cell.psi, cell.fixed) {
            assert!(h <= s + 1e-9 && s <= f + 1e-9);
        }
    }
}

#[test]
fn monotonicity_examples() {
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    let sys = k_shift(2, 3);
    let z = psi_monotonicity_check(&sys, &AdmissibleFunction::zero(), &psi(0.5), &spec, 0.5, &cfg()).unwrap();
    assert!(z.passed);
    let q = psi_monotonicity_check(&sys, &psi(0.25), &psi(0.5), &spec, 0.5, &cfg()).unwrap();
    assert!(q.passed, "{:?}", q.violations);
    let eq = psi_monotonicity_check(&sys, &psi(0.5), &psi(0.5), &spec, 0.5, &cfg()).unwrap();
    assert!(eq.passed);
    assert_eq!(eq.narrow.cells, eq.wide.cells);
}

#[test]
fn union_examples() {
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    let p = psi(0.5);
    let sys = k_shift(2, 2);
    let all: Vec<usize> = (0..sys.len()).collect();
    let sub = &all[..4];
    let r = union_stability_check(&sys, &all, sub, &spec, &p, 0.5, &cfg()).unwrap();
    assert!(r.passed);
    for c in &r.cells {
        assert!((c.s - c.s_a).abs() < 1e-12);
    }

    // far-apart pairs never share a ball, so costs add up exactly
    let line = build_line("pairs", &[0.0, 0.01, 0.9, 0.91]).unwrap();
    let spec = GridSpec::new(vec![0.5], vec![1]).unwrap();
    let r = union_stability_check(&line, &[0, 1], &[2, 3], &spec, &p, 0.5, &cfg()).unwrap();
    assert!(r.passed);
    for c in &r.cells {
        assert!((c.cost_union - (c.cost_a + c.cost_b)).abs() < 1e-12, "{c:?}");
    }

    let k = k_shift(2, 2);
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    for (a, b) in random_partitions(k.len(), 20, 7) {
        let r = union_stability_check(&k, &a, &b, &spec, &p, 0.5, &cfg()).unwrap();
        assert!(r.passed, "{:?}", r.violations);
    }
}

#[test]
fn random_partitions_are_seeded() {
    assert_eq!(random_partitions(9, 5, 3), random_partitions(9, 5, 3));
    for (a, b) in random_partitions(9, 5, 3) {
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
    }
}

#[test]
fn holder_examples() {
    // at ε = 1/4 the radius C·Ψ(ε) = 1/64 is below the image spacing 1/32,
    // where the image is not uniformly perfect
    let spec = GridSpec::new(vec![0.5], vec![1, 2]).unwrap();
    let p = psi(0.5);
    let src = build_dyadic_line(8).unwrap();
    let pts: Vec<f64> = (0..8).map(|j| j as f64 / 32.0).collect();
    let dst = build_line("line8/4", &pts).unwrap();
    let f = HolderMap {
        source: &src,
        target: &dst,
        map: (0..8).collect(),
        c: 0.25,
        alpha: 1.0,
    };
    f.verify(&[1, 2]).unwrap();
    let r = holder_check(&f, &p, &spec, 0.5, &cfg()).unwrap();
    assert!(r.passed, "{:?}", r.violations);
    assert!(r.cells.iter().all(|c| c.image_cost <= c.bound * (1.0 + 1e-12)));
    let fine = GridSpec::new(vec![0.25], vec![1]).unwrap();
    assert!(holder_check(&f, &p, &fine, 0.5, &cfg()).is_err());

    let point = MetricSystem::singleton("pt");
    let constant = HolderMap {
        source: &src,
        target: &point,
        map: vec![0; 8],
        c: 0.25,
        alpha: 1.0,
    };
    let r = holder_check(&constant, &p, &spec, 0.5, &cfg()).unwrap();
    assert!(r.passed);
    assert!(r.degenerate_image);

    let k = k_shift(2, 2);
    let coords: Vec<f64> = (0..k.len()).flat_map(|u| k.coords(u).unwrap().iter().map(|x| x / 4.0)).collect();
    let scaled =
        MetricSystem::from_coordinates("k/4", 2, coords, vec![0.5, 0.25], k.dynamics().to_vec()).unwrap();
    let f = HolderMap {
        source: &k,
        target: &scaled,
        map: (0..k.len()).collect(),
        c: 0.25,
        alpha: 1.0,
    };
    let r = holder_check(&f, &p, &spec, 0.5, &cfg()).unwrap();
    assert!(r.passed, "{:?}", r.violations);
}

#[test]
fn product_examples() {
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2]).unwrap();
    let p = psi(0.5);
    let two = build_two_point(1.0).unwrap();
    let r = product_check(&two, &two, &p, &spec, 0.5, &cfg()).unwrap();
    assert!(r.passed, "{:?}", r.violations);
    let single = product_check(&two, &MetricSystem::singleton("pt"), &p, &spec, 0.5, &cfg()).unwrap();
    assert!(single.passed);
    let spec3 = GridSpec::new(vec![0.5, 0.25], vec![1, 2, 3]).unwrap();
    let kf = product_check(&k_shift(2, 2), &build_full_shift(2, 2, 100).unwrap(), &p, &spec3, 0.5, &cfg()).unwrap();
    assert!(kf.passed, "{:?}", kf.violations);
}

#[test]
fn fixed_diameter_threshold_bounds_the_psi_threshold() {
    let sys = k_shift(2, 3);
    let p = psi(0.5);
    for k in 1..=2 {
        for eps in [0.5, 0.25] {
            let v = sys.view(n(k));
            let h = hausdorff_chain_cell(&v, eps, &p, &cfg()).unwrap().value;
            let s = psi_cell(&v, eps, &p, 0.5, &cfg()).unwrap().value;
            let f = fixed_diameter_cell(&v, eps, 0.5, &cfg()).unwrap().value;
            assert!(h <= s + 1e-9 && s <= f + 1e-9, "{h} {s} {f}");
        }
    }
}

#[test]
fn aggregation_uses_the_tail() {
    let sys = k_shift(2, 4);
    let spec = GridSpec::new(vec![0.5, 0.25], vec![1, 2, 3, 4]).unwrap();
    let est = metric_mean_estimate(&sys, &spec, Side::Upper, CountStatistic::Sep, &cfg()).unwrap();
    let (v, ex, _) = aggregate(&est.grid, Flavor::MetricMean, Side::Upper).unwrap();
    assert_eq!(v, est.value);
    assert_eq!(ex.tail_value, est.extrapolation.tail_value);
    let lower = metric_mean_estimate(&sys, &spec, Side::Lower, CountStatistic::Sep, &cfg()).unwrap();
    assert!(lower.value <= est.value + 1e-12);
}

#[test]
fn grid_spec_rejects_empty_axes() {
    assert!(GridSpec::new(vec![], vec![1]).is_err());
    assert!(GridSpec::new(vec![0.5], vec![]).is_err());
}

proptest! {
    #[test]
    fn power_psi_is_admissible(theta in 0.05f64..0.95) {
        let p = psi(theta);
        let grid: Vec<f64> = (1..12).map(|k| 0.5f64.powi(k)).collect();
        prop_assert!(p.validate_on(&grid).is_ok());
        let mut last = f64::INFINITY;
        for &e in &grid {
            let v = p.eval(e).unwrap();
            prop_assert!(v < e);
            prop_assert!(v / e <= last);
            last = v / e;
        }
    }

    #[test]
    fn wider_windows_never_raise_the_threshold(t1 in 0.1f64..0.9, t2 in 0.1f64..0.9, k in 1usize..3) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let sys = build_line("line4", &[0.0, 0.25, 0.5, 1.0]).unwrap();
        let v = sys.view(n(k));
        let c = ThresholdConfig { step: 1e-3, solver: SolverConfig::default() };
        // Ψ_lo ≤ Ψ_hi on (0, 1), so Ψ_lo has the wider window
        let wide = psi_cell(&v, 0.5, &psi(lo), 0.5, &c).unwrap().value;
        let narrow = psi_cell(&v, 0.5, &psi(hi), 0.5, &c).unwrap().value;
        prop_assert!(wide <= narrow + 1e-12);
    }
}
