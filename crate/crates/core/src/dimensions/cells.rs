//! Per-cell statistics: one `(ε, N)` pair at a time.

use serde::{Deserialize, Serialize};

use super::admissible::AdmissibleFunction;
use crate::covers::{self, CoverInstance, Method, SolveMode, SolverConfig, Window};
use crate::error::{Error, Result};
use crate::metric::{BowenView, PointId};
use crate::TOLERANCE;

/// Exponents beyond this are reported as an unbounded threshold.
pub const MAX_EXPONENT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Grid step `h`; thresholds are reported as multiples of it.
    pub step: f64,
    pub solver: SolverConfig,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            step: 1e-4,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Smallest grid value where the predicate holds; infinite if none.
    pub value: f64,
    pub method: Method,
}

/// Smallest `k·step` (`k ≥ 0`) where a monotone predicate holds, by
/// doubling then bisection on the integer `k`.
pub fn grid_threshold(step: f64, mut holds: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain(format!("threshold step must be positive, got {step}")));
    }
    if holds(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0u64, 1u64);
    while !holds(hi as f64 * step)? {
        lo = hi;
        hi *= 2;
        if hi as f64 * step > MAX_EXPONENT {
            return Ok(f64::INFINITY);
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid as f64 * step)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi as f64 * step)
}

/// Predicate applied to an optimal cover cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Crossing {
    /// `cost < δ`.
    Below(f64),
    /// `cost ≤ bound`.
    AtMost(f64),
}

impl Crossing {
    pub fn holds(self, cost: f64) -> bool {
        match self {
            Crossing::Below(d) => cost < d - TOLERANCE,
            Crossing::AtMost(b) => cost <= b + TOLERANCE,
        }
    }
}

/// Threshold of `value ↦ optimal cost at exponent factor·value` on a
/// prepared instance. All candidate diameters must be at most 1, which
/// makes every cost nonincreasing in the exponent.
pub fn instance_threshold(
    inst: &CoverInstance,
    factor: f64,
    crossing: Crossing,
    cfg: &ThresholdConfig,
) -> Result<Threshold> {
    if let Some(c) = inst.candidates.iter().find(|c| c.diameter > 1.0 + TOLERANCE) {
        return Err(Error::precondition(format!(
            "candidate ball at {} has diameter {} > 1, so costs are not monotone in the exponent",
            c.center, c.diameter
        )));
    }
    let mut method = if cfg.solver.mode == SolveMode::Exact {
        Method::Exact
    } else {
        Method::GreedyUpper
    };
    let value = grid_threshold(cfg.step, |x| {
        let cover = inst.solve(factor * x, &cfg.solver)?;
        method = method.max(cover.method);
        Ok(crossing.holds(cover.cost))
    })?;
    Ok(Threshold { value, method })
}

/// `dim_ε^H(Ξ, d_N)`: smallest grid `t` with content `≤ 1` over covers by
/// balls of diameter `< ε`. Ball diameters are floored at `min_diameter`,
/// by default the smallest positive distance of the view.
pub fn dim_eps_h(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    min_diameter: Option<f64>,
    cfg: &ThresholdConfig,
) -> Result<Threshold> {
    if !(epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let floor = min_diameter.unwrap_or_else(|| view.min_separation().unwrap_or(0.0));
    let inst = CoverInstance::build(view, Window::below(epsilon).with_min_diameter(floor), None)?;
    instance_threshold(&inst, 1.0, Crossing::AtMost(1.0), cfg)
}

/// Window `(Ψ(ε), ε]` used by the intermediate dimensions.
pub fn psi_window(psi: &AdmissibleFunction, epsilon: f64) -> Result<Window> {
    let lo = psi.eval(epsilon)?;
    if !(lo < epsilon) {
        return Err(Error::domain(format!("Psi({epsilon}) = {lo} is not below epsilon")));
    }
    Ok(Window::half_open(lo, epsilon))
}

/// Hausdorff statistic `dim/N` measured so that it is comparable with the
/// Ψ-threshold: diameters in `[Ψ(ε), ε]`, bisection step `N·h` in `t`.
pub fn hausdorff_chain_cell(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    psi: &AdmissibleFunction,
    cfg: &ThresholdConfig,
) -> Result<Threshold> {
    let w = psi_window(psi, epsilon)?;
    let window = Window::half_open(0.0, epsilon).with_min_diameter(w.lo);
    let inst = CoverInstance::build(view, window, None)?;
    instance_threshold(&inst, view.n() as f64, Crossing::AtMost(1.0), cfg)
}

/// `s*(ε, N)`: smallest grid `s` with an admissible cover of cost
/// `Σ D_i^{N s} < δ` for the window `(Ψ(ε), ε]`.
pub fn psi_cell(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    psi: &AdmissibleFunction,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<Threshold> {
    psi_cell_on(view, epsilon, psi, delta, None, cfg)
}

/// [`psi_cell`] for covering only `targets` (centers still range over the system).
pub fn psi_cell_on(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    psi: &AdmissibleFunction,
    delta: f64,
    targets: Option<&[PointId]>,
    cfg: &ThresholdConfig,
) -> Result<Threshold> {
    check_delta(delta)?;
    let inst = CoverInstance::build(view, psi_window(psi, epsilon)?, targets)?;
    instance_threshold(&inst, view.n() as f64, Crossing::Below(delta), cfg)
}

/// Same threshold with every ball of diameter exactly `ε`.
pub fn fixed_diameter_cell(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<Threshold> {
    check_delta(delta)?;
    let inst = CoverInstance::build(view, Window::fixed(epsilon), None)?;
    instance_threshold(&inst, view.n() as f64, Crossing::Below(delta), cfg)
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountStatistic {
    Sep,
    Span,
}

/// `log count(N, ε) / (N |log ε|)`.
pub fn metric_mean_cell(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    statistic: CountStatistic,
    solver: &SolverConfig,
) -> Result<(f64, Method)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("metric mean needs 0 < epsilon < 1, got {epsilon}")));
    }
    let report = match statistic {
        CountStatistic::Sep => covers::max_separated(view, epsilon, solver)?,
        CountStatistic::Span => covers::min_spanning(view, epsilon, solver)?,
    };
    let count = report.sep_count.or(report.span_count).unwrap_or(1);
    Ok(((count as f64).ln() / (view.n() as f64 * epsilon.ln().abs()), report.method))
}
