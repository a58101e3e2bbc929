//! Product inequalities for the Ψ-intermediate dimensions.

use serde::{Deserialize, Serialize};

use super::admissible::AdmissibleFunction;
use super::cells::{check_delta, grid_threshold, instance_threshold, psi_window, Crossing, ThresholdConfig};
use super::estimate::GridSpec;
use crate::covers::{CoverInstance, Method, Window};
use crate::error::Result;
use crate::measures::{growth_constant, FiniteMeasure};
use crate::metric::{BowenScale, ProductMode};
use crate::{MetricSystem, TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditiveCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Threshold of the left factor and the added exponent from the right one.
    pub s_a: f64,
    pub t: f64,
    pub cost_a: f64,
    /// Cost at `s_a + t` of the product cover built from the left cover.
    pub product_cover_cost: f64,
    /// Optimal product cost at `s_a + t`.
    pub product_optimal_cost: f64,
    pub s_product: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperadditiveCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Exponents certified by the uniform measures on each factor.
    pub s_a: f64,
    pub s_b: f64,
    pub c_a: f64,
    pub c_b: f64,
    /// Largest `ϑ(B)/(c_A c_B D^{N(s_A+s_B)})` over admissible product balls.
    pub worst_ratio: f64,
    pub product_cost: f64,
    /// `a_A a_B / (c_A c_B)`.
    pub floor: f64,
    pub s_product: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub passed: bool,
    pub half_max: Vec<SubadditiveCell>,
    pub max: Vec<SuperadditiveCell>,
    pub violations: Vec<String>,
}

/// Both product inequalities, cell by cell.
///
/// Half-max mode: the left factor's optimal cover at its threshold `s_A`
/// is multiplied by minimal covers of the right factor by closed balls of
/// radius `D_k`; product balls of diameter `D_k` result, and with
/// `t ≥ max_k log n_k/(N log(1/D_k))` (rounded up to the grid) the product
/// cover costs at most the left cover at `s_A + t`.
///
/// Max mode: with `ν_A`, `ν_B` uniform and `c_A`, `c_B` their growth
/// constants at `s_A`, `s_B`, every admissible product ball satisfies
/// `ϑ(B) ≤ c_A c_B D^{N(s_A+s_B)}`, so each product cover costs at least
/// `1/(c_A c_B)`; both facts are checked directly.
pub fn product_check(
    a: &MetricSystem,
    b: &MetricSystem,
    psi: &AdmissibleFunction,
    spec: &GridSpec,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<ProductReport> {
    spec.validate()?;
    check_delta(delta)?;
    psi.validate_on(&spec.epsilons)?;
    let half = MetricSystem::product(a.clone(), b.clone(), ProductMode::HalfMax);
    let full = MetricSystem::product(a.clone(), b.clone(), ProductMode::Max);
    let mut violations = Vec::new();
    let mut half_cells = Vec::new();
    let mut max_cells = Vec::new();
    for &eps in &spec.epsilons {
        let window = psi_window(psi, eps)?;
        for &n in &spec.scales {
            let scale = BowenScale::new(n)?;
            match subadditive_cell(a, b, &half, scale, window, eps, delta, cfg)? {
                Some(c) => {
                    if !c.passed {
                        violations.push(format!("half_max eps = {eps}, N = {n}: {c:?}"));
                    }
                    half_cells.push(c);
                }
                None => violations.push(format!("half_max eps = {eps}, N = {n}: unbounded left threshold")),
            }
            let c = superadditive_cell(a, b, &full, scale, window, eps, delta, cfg)?;
            if !c.passed {
                violations.push(format!("max eps = {eps}, N = {n}: {c:?}"));
            }
            max_cells.push(c);
        }
    }
    Ok(ProductReport {
        passed: violations.is_empty(),
        half_max: half_cells,
        max: max_cells,
        violations,
    })
}

#[allow(clippy::too_many_arguments)]
fn subadditive_cell(
    a: &MetricSystem,
    b: &MetricSystem,
    half: &MetricSystem,
    scale: BowenScale,
    window: Window,
    eps: f64,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<Option<SubadditiveCell>> {
    let n = scale.get();
    let f = n as f64;
    let (va, vb, vp) = (a.view(scale), b.view(scale), half.view(scale));
    let inst_a = CoverInstance::build(&va, window, None)?;
    let th_a = instance_threshold(&inst_a, f, Crossing::Below(delta), cfg)?;
    if !th_a.value.is_finite() {
        return Ok(None);
    }
    let s_a = th_a.value;
    let cover_a = inst_a.solve(f * s_a, &cfg.solver)?;
    let mut exact = th_a.method == Method::Exact && cover_a.method == Method::Exact;
    let nb = b.len();

    // right-factor covers by closed balls of radius D_k
    let mut pieces = Vec::new();
    let mut t_raw: f64 = 0.0;
    for (ball, &d) in cover_a.balls.iter().zip(&cover_a.diameters) {
        let inst_b = CoverInstance::build(&vb, Window::fixed(2.0 * d), None)?;
        let cb = inst_b.solve(0.0, &cfg.solver)?;
        exact &= cb.method == Method::Exact;
        let nk = cb.balls.len();
        if nk > 1 {
            t_raw = t_raw.max((nk as f64).ln() / (f * (1.0 / d).ln()));
        }
        pieces.push((ball.center, d, cb.balls.iter().map(|bb| bb.center).collect::<Vec<_>>()));
    }
    let t = (t_raw / cfg.step - 1e-9).ceil().max(0.0) * cfg.step;
    let exponent = f * (s_a + t);

    let mut covered = vec![false; half.len()];
    let mut ok = true;
    let mut product_cover_cost = 0.0;
    for (u, d, centers) in &pieces {
        if !(*d >= window.floor() && window.admits(*d)) {
            ok = false;
        }
        let a_members = va.ball_members(*u, d / 2.0)?;
        for &v in centers {
            let center = u * nb + v;
            for y in vb.ball_members(v, *d)? {
                for &x in &a_members {
                    let p = x * nb + y;
                    if vp.dist(center, p) > d / 2.0 + TOLERANCE {
                        ok = false;
                    }
                    covered[p] = true;
                }
            }
            product_cover_cost += d.powf(exponent);
        }
    }
    ok &= covered.iter().all(|&c| c);
    ok &= product_cover_cost <= cover_a.cost * (1.0 + 1e-12) + TOLERANCE;

    let inst_p = CoverInstance::build(&vp, window, None)?;
    let best = inst_p.solve(exponent, &cfg.solver)?;
    exact &= best.method == Method::Exact;
    ok &= best.cost < delta - TOLERANCE;
    let th_p = instance_threshold(&inst_p, f, Crossing::Below(delta), cfg)?;
    Ok(Some(SubadditiveCell {
        epsilon: eps,
        n,
        s_a,
        t,
        cost_a: cover_a.cost,
        product_cover_cost,
        product_optimal_cost: best.cost,
        s_product: th_p.value,
        passed: ok && exact,
    }))
}

/// Largest grid `s` with `1/c(s) ≥ δ` for the uniform measure; `c` grows with `s`.
fn certified_exponent(view: &crate::BowenView<'_, f64>, nu: &FiniteMeasure, window: Window, delta: f64, step: f64) -> Result<(f64, f64)> {
    let first_bad = grid_threshold(step, |s| Ok(1.0 / growth_constant(view, nu, window, s)? < delta))?;
    let s = if first_bad.is_finite() { (first_bad - step).max(0.0) } else { 0.0 };
    Ok((s, growth_constant(view, nu, window, s)?))
}

#[allow(clippy::too_many_arguments)]
fn superadditive_cell(
    a: &MetricSystem,
    b: &MetricSystem,
    full: &MetricSystem,
    scale: BowenScale,
    window: Window,
    eps: f64,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<SuperadditiveCell> {
    let n = scale.get();
    let f = n as f64;
    let (va, vb, vp) = (a.view(scale), b.view(scale), full.view(scale));
    let nu_a = FiniteMeasure::uniform(&(0..a.len()).collect::<Vec<_>>())?;
    let nu_b = FiniteMeasure::uniform(&(0..b.len()).collect::<Vec<_>>())?;
    let (s_a, c_a) = certified_exponent(&va, &nu_a, window, delta, cfg.step)?;
    let (s_b, c_b) = certified_exponent(&vb, &nu_b, window, delta, cfg.step)?;
    let theta = FiniteMeasure::product(&nu_a, &nu_b, b.len())?;
    let e = f * (s_a + s_b);
    let inst = CoverInstance::build(&vp, window, None)?;
    let mut worst: f64 = 0.0;
    for cand in &inst.candidates {
        let mass: f64 = cand.members.iter().map(|&i| theta.mass_of(inst.targets[i as usize])).sum();
        worst = worst.max(mass / (c_a * c_b * cand.diameter.powf(e)));
    }
    let best = inst.solve(e, &cfg.solver)?;
    let floor = 1.0 / (c_a * c_b);
    let th = instance_threshold(&inst, f, Crossing::Below(delta), cfg)?;
    let passed = best.method == Method::Exact && worst <= 1.0 + 1e-12 && best.cost >= floor * (1.0 - 1e-12);
    Ok(SuperadditiveCell {
        epsilon: eps,
        n,
        s_a,
        s_b,
        c_a,
        c_b,
        worst_ratio: worst,
        product_cost: best.cost,
        floor,
        s_product: th.value,
        passed,
    })
}
