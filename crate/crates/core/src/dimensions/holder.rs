//! Pushing Ψ-window covers forward along a Hölder map.

use serde::{Deserialize, Serialize};

use super::admissible::AdmissibleFunction;
use super::cells::{check_delta, instance_threshold, psi_window, Crossing, ThresholdConfig};
use super::estimate::GridSpec;
use crate::covers::{CoverInstance, Method};
use crate::error::{Error, Result};
use crate::metric::{BowenScale, PointId};
use crate::systems::uniformly_perfect_check;
use crate::{MetricSystem, TOLERANCE};

/// `f: source → target` given pointwise, with claimed constants `(C, α)`.
#[derive(Clone, Debug)]
pub struct HolderMap<'a> {
    pub source: &'a MetricSystem,
    pub target: &'a MetricSystem,
    pub map: Vec<PointId>,
    pub c: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCell {
    pub epsilon: f64,
    /// `ε' = 4Cε^α`, the image window top.
    pub epsilon_image: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Source threshold `s*` and image exponent `t = s/α`.
    pub s: f64,
    pub t: f64,
    pub psi1: f64,
    pub source_cost: f64,
    pub image_cost: f64,
    /// `(4C)^t δ`.
    pub bound: f64,
    pub balls: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub passed: bool,
    pub degenerate_image: bool,
    /// Uniform perfectness constant `p` of the target.
    pub p: f64,
    pub psi1: Option<AdmissibleFunction>,
    pub cells: Vec<HolderCell>,
    pub violations: Vec<String>,
}

impl HolderMap<'_> {
    /// Checks `d_N(f u, f v) ≤ C d_N(u, v)^α` on every pair.
    pub fn verify(&self, scales: &[usize]) -> Result<()> {
        if !(self.c > 0.0 && self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain("Hoelder constants need C > 0 and 0 < alpha <= 1"));
        }
        if self.map.len() != self.source.len() {
            return Err(Error::domain("map must send every source point"));
        }
        for &y in &self.map {
            self.target.check_id(y)?;
        }
        for &n in scales {
            let scale = BowenScale::new(n)?;
            let (vs, vt) = (self.source.view(scale), self.target.view(scale));
            for u in 0..self.source.len() {
                for v in u + 1..self.source.len() {
                    let lhs = vt.dist(self.map[u], self.map[v]);
                    let rhs = self.c * vs.dist(u, v).powf(self.alpha);
                    if lhs > rhs + TOLERANCE {
                        return Err(Error::precondition(format!(
                            "map is not ({}, {})-Hoelder at N = {n}: pair ({u}, {v}) has {lhs} > {rhs}",
                            self.c, self.alpha
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Cell-wise form of the Hölder distortion bound.
///
/// For each `(ε, N)` the source's optimal Ψ-cover at its threshold `s` is
/// pushed forward: ball `B(u_i, D_i/2)` becomes
/// `U_i = f(B(u_i, D_i/2)) ∪ {v_i}` where `v_i` is a target point with
/// `Ψ₁ < d_N(f u_i, v_i) ≤ Ψ₁/p`, guaranteed by uniform perfectness.
/// With `l_i = diam U_i` and `t = s/α` the check asserts
/// `Ψ₁(ε') < 2l_i ≤ 4C D_i^α ≤ ε'`, that the `U_i` cover `f(Ξ)`, and
/// `Σ (2l_i)^{N t} ≤ (4C)^t δ`, where `Ψ₁(ε') = C p Ψ(ε)^α`.
pub fn holder_check(
    f: &HolderMap<'_>,
    psi: &AdmissibleFunction,
    spec: &GridSpec,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<HolderReport> {
    spec.validate()?;
    check_delta(delta)?;
    psi.validate_on(&spec.epsilons)?;
    if f.c > 0.25 {
        return Err(Error::precondition(format!("Hoelder constant C = {} exceeds 1/4", f.c)));
    }
    f.verify(&spec.scales)?;
    let mut image: Vec<PointId> = f.map.clone();
    image.sort_unstable();
    image.dedup();
    if image.len() == 1 {
        // one image point: any ball of vanishing radius covers it at cost 0
        let cells = spec
            .epsilons
            .iter()
            .flat_map(|&e| {
                spec.scales.iter().map(move |&n| HolderCell {
                    epsilon: e,
                    epsilon_image: 4.0 * f.c * e.powf(f.alpha),
                    n,
                    s: 0.0,
                    t: 0.0,
                    psi1: 0.0,
                    source_cost: 0.0,
                    image_cost: 0.0,
                    bound: delta,
                    balls: 1,
                    passed: true,
                })
            })
            .collect();
        return Ok(HolderReport {
            passed: true,
            degenerate_image: true,
            p: 0.0,
            psi1: None,
            cells,
            violations: Vec::new(),
        });
    }

    let scales: Vec<BowenScale> = spec.scales.iter().map(|&n| BowenScale::new(n)).collect::<Result<_>>()?;
    let mut radii = Vec::new();
    for &e in &spec.epsilons {
        let r = f.c * psi.eval(e)?.powf(f.alpha);
        if !(r > 0.0) {
            return Err(Error::precondition("the Hoelder check needs Psi > 0 on the grid"));
        }
        radii.push(r);
    }
    let cert = uniformly_perfect_check(f.target, &scales, &radii)?;
    if !cert.passed {
        return Err(Error::precondition(format!(
            "target is not uniformly perfect at radii C Psi^alpha: {:?}",
            cert.failure
        )));
    }
    let p = cert.c_est;
    let table: Vec<(f64, f64)> = spec
        .epsilons
        .iter()
        .zip(&radii)
        .map(|(&e, &r)| (4.0 * f.c * e.powf(f.alpha), p * r))
        .collect();
    let psi1 = AdmissibleFunction::custom_table(table.clone())?;

    let mut cells = Vec::new();
    let mut violations = Vec::new();
    for (ei, &eps) in spec.epsilons.iter().enumerate() {
        let window = psi_window(psi, eps)?;
        let (eps_img, psi1_v) = table[ei];
        for &scale in &scales {
            let n = scale.get();
            let (vs, vt) = (f.source.view(scale), f.target.view(scale));
            let inst = CoverInstance::build(&vs, window, None)?;
            let th = instance_threshold(&inst, n as f64, Crossing::Below(delta), cfg)?;
            if !th.value.is_finite() {
                violations.push(format!("eps = {eps}, N = {n}: source threshold is unbounded"));
                continue;
            }
            let s = th.value;
            let cover = inst.solve(n as f64 * s, &cfg.solver)?;
            let t = s / f.alpha;
            let mut covered = vec![false; f.target.len()];
            let mut image_cost = 0.0;
            let mut ok = th.method == Method::Exact && cover.method == Method::Exact;
            let mut why = String::new();
            for (ball, &d) in cover.balls.iter().zip(&cover.diameters) {
                let fu = f.map[ball.center];
                let mut u_set: Vec<PointId> =
                    vs.ball_members(ball.center, d / 2.0)?.into_iter().map(|x| f.map[x]).collect();
                for &y in &u_set {
                    covered[y] = true;
                }
                let hi = psi1_v / p + TOLERANCE;
                match (0..f.target.len()).find(|&w| {
                    let dw = vt.dist(fu, w);
                    dw > psi1_v && dw <= hi
                }) {
                    Some(w) => u_set.push(w),
                    None => {
                        ok = false;
                        why = format!("no perfectness witness near f({})", ball.center);
                        continue;
                    }
                }
                let l = vt.diameter_of(&u_set)?;
                let outer = 4.0 * f.c * d.powf(f.alpha);
                if !(psi1_v < 2.0 * l && 2.0 * l <= outer + TOLERANCE && outer <= eps_img + TOLERANCE) {
                    ok = false;
                    why = format!("ball at {}: 2l = {}, 4C D^alpha = {outer}", ball.center, 2.0 * l);
                }
                image_cost += (2.0 * l).powf(n as f64 * t);
            }
            if let Some(x) = image.iter().find(|&&y| !covered[y]) {
                ok = false;
                why = format!("image point {x} is not covered");
            }
            let bound = (4.0 * f.c).powf(t) * delta;
            let scaled_source = (4.0 * f.c).powf(t) * cover.cost;
            if image_cost > scaled_source + TOLERANCE || image_cost > bound + TOLERANCE {
                ok = false;
                why = format!("image cost {image_cost} exceeds (4C)^t times {}", cover.cost);
            }
            if !ok {
                if why.is_empty() {
                    why = "non-exact source threshold".into();
                }
                violations.push(format!("eps = {eps}, N = {n}: {why}"));
            }
            cells.push(HolderCell {
                epsilon: eps,
                epsilon_image: eps_img,
                n,
                s,
                t,
                psi1: psi1_v,
                source_cost: cover.cost,
                image_cost,
                bound,
                balls: cover.balls.len(),
                passed: ok,
            });
        }
    }
    Ok(HolderReport {
        passed: violations.is_empty(),
        degenerate_image: false,
        p,
        psi1: Some(psi1),
        cells,
        violations,
    })
}
