//! Cell-wise inequality checks between estimators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::admissible::AdmissibleFunction;
use super::cells::{check_delta, psi_window, Crossing, ThresholdConfig};
use super::estimate::{fixed_diameter_grid, hausdorff_chain_grid, psi_grid, EvidenceGrid, GridSpec};
use crate::covers::{CoverInstance, Method};
use crate::error::{Error, Result};
use crate::metric::{BowenScale, PointId};
use crate::{MetricSystem, TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub hausdorff: Option<f64>,
    pub psi: Option<f64>,
    pub fixed: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub passed: bool,
    pub delta: f64,
    pub cells: Vec<ChainCell>,
    pub violations: Vec<String>,
}

/// Cell-wise `dim_ε^H/N ≤ s*_Ψ ≤ s*_{2r=ε}` on three matched grids.
pub fn chain_from_grids(
    hausdorff: &EvidenceGrid,
    psi: &EvidenceGrid,
    fixed: &EvidenceGrid,
    delta: f64,
) -> Result<ChainReport> {
    if !hausdorff.same_shape(psi) || !psi.same_shape(fixed) {
        return Err(Error::precondition("chain check needs matched grids"));
    }
    let mut cells = Vec::new();
    let mut violations = Vec::new();
    for i in 0..psi.cells.len() {
        let (h, p, m) = (hausdorff.cells[i].value, psi.cells[i].value, fixed.cells[i].value);
        let exact = [&hausdorff.cells[i], &psi.cells[i], &fixed.cells[i]]
            .iter()
            .all(|c| c.method.is_none_or(|m| m == Method::Exact));
        let le = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        };
        let ok = h.is_none_or(|h| h >= 0.0) && le(h, p) && le(p, m);
        let cell = &psi.cells[i];
        if !ok {
            violations.push(format!(
                "eps = {}, N = {}: H = {h:?}, Psi = {p:?}, fixed = {m:?}",
                cell.epsilon, cell.n
            ));
        } else if !exact {
            violations.push(format!(
                "eps = {}, N = {}: a non-exact cell makes the comparison inconclusive",
                cell.epsilon, cell.n
            ));
        }
        cells.push(ChainCell {
            epsilon: cell.epsilon,
            n: cell.n,
            hausdorff: h,
            psi: p,
            fixed: m,
            passed: ok && exact,
        });
    }
    Ok(ChainReport {
        passed: violations.is_empty(),
        delta,
        cells,
        violations,
    })
}

pub fn chain_check(
    sys: &MetricSystem,
    spec: &GridSpec,
    psi: &AdmissibleFunction,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<ChainReport> {
    check_delta(delta)?;
    let h = hausdorff_chain_grid(sys, spec, psi, cfg)?;
    let p = psi_grid(sys, spec, psi, delta, cfg)?;
    let m = fixed_diameter_grid(sys, spec, delta, cfg)?;
    chain_from_grids(&h, &p, &m, delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub passed: bool,
    pub narrow: EvidenceGrid,
    pub wide: EvidenceGrid,
    pub violations: Vec<String>,
}

/// With `Ψ₁ ≤ Ψ₂` on the grid, the wider window `(Ψ₁(ε), ε]` never has a
/// larger threshold.
pub fn psi_monotonicity_check(
    sys: &MetricSystem,
    psi1: &AdmissibleFunction,
    psi2: &AdmissibleFunction,
    spec: &GridSpec,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<MonotonicityReport> {
    for &e in &spec.epsilons {
        let (a, b) = (psi1.eval(e)?, psi2.eval(e)?);
        if a > b {
            return Err(Error::precondition(format!("Psi1({e}) = {a} exceeds Psi2({e}) = {b}")));
        }
    }
    let wide = psi_grid(sys, spec, psi1, delta, cfg)?;
    let narrow = psi_grid(sys, spec, psi2, delta, cfg)?;
    let mut violations = Vec::new();
    for (w, n) in wide.cells.iter().zip(&narrow.cells) {
        if let (Some(a), Some(b)) = (w.value, n.value) {
            if a > b {
                violations.push(format!("eps = {}, N = {}: {a} > {b}", w.epsilon, w.n));
            }
        }
    }
    Ok(MonotonicityReport {
        passed: violations.is_empty(),
        narrow,
        wide,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub s_a: f64,
    pub s_b: f64,
    /// `max(s_a, s_b)`, where the union cost is evaluated.
    pub s: f64,
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_union: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionReport {
    pub passed: bool,
    pub delta: f64,
    pub cells: Vec<UnionCell>,
    pub violations: Vec<String>,
}

fn check_subset(sys: &MetricSystem, pts: &[PointId]) -> Result<()> {
    if pts.is_empty() {
        return Err(Error::domain("union stability needs nonempty subsets"));
    }
    for &p in pts {
        if p >= sys.len() {
            return Err(Error::domain(format!("point {p} is not in the common system")));
        }
    }
    Ok(())
}

/// For `A, B` inside one system, on every cell at `s = max(s*_A, s*_B)`:
/// `cost(A) ≤ cost(A∪B)`, `cost(B) ≤ cost(A∪B)`,
/// `cost(A∪B) ≤ cost(A) + cost(B)` and `cost(A∪B) < 2δ`.
pub fn union_stability_check(
    sys: &MetricSystem,
    a: &[PointId],
    b: &[PointId],
    spec: &GridSpec,
    psi: &AdmissibleFunction,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<UnionReport> {
    check_subset(sys, a)?;
    check_subset(sys, b)?;
    check_delta(delta)?;
    spec.validate()?;
    let mut union: Vec<PointId> = a.iter().chain(b).copied().collect();
    union.sort_unstable();
    union.dedup();
    let mut cells = Vec::new();
    let mut violations = Vec::new();
    for &eps in &spec.epsilons {
        let window = psi_window(psi, eps)?;
        for &n in &spec.scales {
            let view = sys.view(BowenScale::new(n)?);
            let ia = CoverInstance::build(&view, window, Some(a))?;
            let ib = CoverInstance::build(&view, window, Some(b))?;
            let iu = CoverInstance::build(&view, window, Some(&union))?;
            let f = n as f64;
            let sa = super::cells::instance_threshold(&ia, f, Crossing::Below(delta), cfg)?;
            let sb = super::cells::instance_threshold(&ib, f, Crossing::Below(delta), cfg)?;
            let s = sa.value.max(sb.value);
            if !s.is_finite() {
                continue;
            }
            let cost = |inst: &CoverInstance| inst.solve(f * s, &cfg.solver).map(|c| (c.cost, c.method));
            let ((ca, ma), (cb, mb), (cu, mu)) = (cost(&ia)?, cost(&ib)?, cost(&iu)?);
            let slack = TOLERANCE * (1.0 + ca + cb);
            let exact = [ma, mb, mu, sa.method, sb.method].iter().all(|&m| m == Method::Exact);
            let ok = ca <= cu + slack && cb <= cu + slack && cu <= ca + cb + slack && cu < 2.0 * delta - TOLERANCE;
            if !ok || !exact {
                violations.push(format!(
                    "eps = {eps}, N = {n}, s = {s}: cost A = {ca}, B = {cb}, union = {cu}{}",
                    if exact { "" } else { " (non-exact)" }
                ));
            }
            cells.push(UnionCell {
                epsilon: eps,
                n,
                s_a: sa.value,
                s_b: sb.value,
                s,
                cost_a: ca,
                cost_b: cb,
                cost_union: cu,
                passed: ok && exact,
            });
        }
    }
    Ok(UnionReport {
        passed: violations.is_empty(),
        delta,
        cells,
        violations,
    })
}

/// Seeded random two-block partitions of the system's points.
pub fn random_partitions(len: usize, trials: usize, seed: u64) -> Vec<(Vec<PointId>, Vec<PointId>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let mut pts: Vec<PointId> = (0..len).collect();
            pts.shuffle(&mut rng);
            let cut = if len > 1 { rng.gen_range(1..len) } else { len };
            let (mut a, mut b) = (pts[..cut].to_vec(), pts[cut..].to_vec());
            a.sort_unstable();
            b.sort_unstable();
            if b.is_empty() {
                b = a.clone();
            }
            (a, b)
        })
        .collect()
}

