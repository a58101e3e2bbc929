//! Top-down reweighting on a cube tree, producing a probability measure
//! with controlled ball growth.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::FiniteMeasure;
use crate::covers::{build_cube_tree, CoverInstance, Method, SolverConfig};
use crate::dimensions::{psi_window, AdmissibleFunction, GridSpec, Side};
use crate::error::{Error, Result};
use crate::metric::BowenScale;
use crate::systems::uniformly_perfect_check;
use crate::{MetricSystem, TOLERANCE};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrostmanOptions {
    pub solver: SolverConfig,
    /// Use this perfectness constant instead of certifying one.
    pub c2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanParams {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub psi_value: f64,
    pub gamma: f64,
    pub s: f64,
    /// `N·s`, the power applied to radii.
    pub exponent: f64,
    pub m: usize,
    pub l: usize,
    pub c2: f64,
    /// Growth constant: `ν(B(u, r)) ≤ c·r^{N s}` for `Ψ(ε) < r ≤ ε`.
    pub c: f64,
    /// Most level-`k` cubes met by one ball from the band `k`.
    pub k_max: usize,
    pub delta: f64,
    /// Exact optimal Ψ-window cover cost at exponent `N·s`.
    pub delta_star: f64,
    pub delta_star_ge_delta: bool,
    pub mass_before_normalization: f64,
    /// `8^{-Ns}(1+1/c₂)^{-Ns}·δ*`.
    pub mass_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanOutput {
    pub measure: FiniteMeasure,
    pub params: FrostmanParams,
}

fn dyadic_radii(top: f64, bottom: f64) -> Vec<f64> {
    let mut out = vec![top];
    let mut r = top / 2.0;
    while r >= bottom && out.len() < 64 {
        out.push(r);
        r /= 2.0;
    }
    out
}

/// Builds `ν_{ε,N}`.
///
/// Level `m` is the one with `γ^m/2 < Ψ(ε) ≤ γ^{m-1}/2`, and `l` the
/// largest with `8γ^{m-l} ≤ ε`. Level-`m` centers get mass `γ^{m N s}`;
/// then, from level `m-1` up to level `m-l`, every cube heavier than
/// `γ^{k N s}` is scaled down to exactly that cap. The result is
/// normalized. Each step is verified: level caps, the mass floor (through
/// witness balls around the maximal capped cubes) and the ball growth bound.
pub fn frostman_construct(
    sys: &MetricSystem,
    scale: BowenScale,
    psi: &AdmissibleFunction,
    epsilon: f64,
    s: f64,
    delta: f64,
    opts: &FrostmanOptions,
) -> Result<FrostmanOutput> {
    crate::dimensions::check_delta(delta)?;
    if !(s >= 0.0) {
        return Err(Error::domain(format!("exponent s must be nonnegative, got {s}")));
    }
    let view = sys.view(scale);
    let n = scale.get();
    let e = n as f64 * s;
    let window = psi_window(psi, epsilon)?;
    let psi_v = window.lo;
    if !(psi_v > 0.0) {
        return Err(Error::domain("level selection needs Psi(eps) > 0"));
    }
    let diam = view.diameter();
    let c2 = match opts.c2 {
        Some(c2) => c2,
        None => {
            if diam <= TOLERANCE {
                return Err(Error::precondition("a single point is not uniformly perfect"));
            }
            let floor = psi_v.max(view.min_separation().unwrap_or(0.0));
            let radii = dyadic_radii(epsilon.min(diam), floor);
            let cert = uniformly_perfect_check(sys, &[scale], &radii)?;
            if !cert.passed {
                return Err(Error::precondition(format!(
                    "no uniform perfectness certificate: {:?}",
                    cert.failure
                )));
            }
            cert.c_est
        }
    };
    if !(c2 > 0.0 && c2 < 1.0) {
        return Err(Error::precondition(format!("perfectness constant {c2} must lie in (0, 1)")));
    }
    if psi_v / epsilon >= c2 / 320.0 {
        return Err(Error::precondition(format!(
            "Psi(eps)/eps = {} is not below c2/320 = {}",
            psi_v / epsilon,
            c2 / 320.0
        )));
    }
    let gamma = (1.0 / 20.0f64).min(diam);
    let g = |k: usize| gamma.powi(k as i32);

    let mut m = ((2.0 * psi_v).ln() / gamma.ln()).floor().max(0.0) as usize + 1;
    while 0.5 * g(m) >= psi_v {
        m += 1;
    }
    while m > 1 && psi_v > 0.5 * g(m - 1) {
        m -= 1;
    }
    if !(0.5 * g(m) < psi_v && psi_v <= 0.5 * g(m - 1)) {
        return Err(Error::domain(format!(
            "no level m with gamma^m/2 < Psi(eps) <= gamma^(m-1)/2 (Psi = {psi_v})"
        )));
    }
    if !(160.0 * g(m) < epsilon) {
        return Err(Error::domain(format!("160 gamma^m < eps fails: 160 * {} >= {epsilon}", g(m))));
    }
    let j = (1..=m)
        .find(|&j| 8.0 * g(j) <= epsilon)
        .expect("160 gamma^m < eps implies 8 gamma^m <= eps");
    let l = m - j;
    if l < 1 {
        return Err(Error::domain(format!(
            "8 gamma^(m-l) <= eps needs l >= 1, but 8 gamma^(m-1) = {} > {epsilon}",
            8.0 * g(m - 1)
        )));
    }
    let top = m - l;

    let tree = build_cube_tree(&view, gamma, m)?;
    let npts = sys.len();
    let mut mass = vec![0.0; npts];
    for cube in tree.level(m) {
        mass[cube.center] += g(m).powf(e);
    }
    let mut capped: Vec<Vec<bool>> = (0..=m).map(|k| if k == 0 { Vec::new() } else { vec![false; tree.level(k).len()] }).collect();
    for k in (top..m).rev() {
        let cap = g(k).powf(e);
        for (qi, cube) in tree.level(k).iter().enumerate() {
            let nu: f64 = cube.members.iter().map(|&p| mass[p]).sum();
            if nu > cap {
                let f = cap / nu;
                for &p in &cube.members {
                    mass[p] *= f;
                }
                capped[k][qi] = true;
            }
        }
    }
    for k in top..=m {
        let cap = g(k).powf(e);
        for cube in tree.level(k) {
            let nu: f64 = cube.members.iter().map(|&p| mass[p]).sum();
            if nu > cap * (1.0 + 1e-12) {
                return Err(Error::Verification(format!(
                    "level cap violated: cube at {} on level {k} has {nu} > {cap}",
                    cube.center
                )));
            }
        }
    }
    let total: f64 = mass.iter().sum();

    let inst = CoverInstance::build(&view, window, None)?;
    let best = inst.solve(e, &opts.solver)?;
    if best.method != Method::Exact {
        return Err(Error::Capacity {
            what: "exact cover cost for the Frostman mass floor".into(),
            needed: opts.solver.node_budget.saturating_add(1),
            budget: opts.solver.node_budget,
        });
    }
    let delta_star = best.cost;
    let spread = 8.0 * (1.0 + 1.0 / c2);
    let mass_floor = delta_star / spread.powf(e);

    // maximal capped cubes (or level-m seeds) partition the space; each
    // carries exactly its cap and sits inside an admissible witness ball
    let mut chosen: BTreeSet<(usize, usize)> = BTreeSet::new();
    for p in 0..npts {
        let k = (top..m).find(|&k| capped[k][tree.cube_of(k, p)]).unwrap_or(m);
        chosen.insert((k, tree.cube_of(k, p)));
    }
    let mut witness_cost = 0.0;
    for &(k, qi) in &chosen {
        let cube = &tree.level(k)[qi];
        let far = cube.members.iter().map(|&p| view.dist(cube.center, p)).fold(0.0, f64::max);
        let d = (2.0 * far).max(psi_v);
        if d > spread * g(k) * (1.0 + 1e-12) || d > epsilon + TOLERANCE {
            return Err(Error::Verification(format!(
                "witness ball at {} has diameter {d}, above 8(1+1/c2) gamma^{k} or eps",
                cube.center
            )));
        }
        witness_cost += d.powf(e);
    }
    if witness_cost < delta_star * (1.0 - 1e-12) || total < mass_floor * (1.0 - 1e-12) {
        return Err(Error::Verification(format!(
            "mass floor fails: total {total} vs floor {mass_floor} (witness cost {witness_cost}, optimum {delta_star})"
        )));
    }

    let support: Vec<usize> = (0..npts).filter(|&p| mass[p] > 0.0).collect();
    let masses: Vec<f64> = support.iter().map(|&p| mass[p] / total).collect();
    let measure = FiniteMeasure::new(support.clone(), masses)?;
    let norm: f64 = measure.masses().iter().sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Verification(format!("normalized mass is {norm}")));
    }

    let mut k_max = 1;
    for k in top..=m {
        let r = if k == top { epsilon } else { g(k) };
        for u in 0..npts {
            let met: BTreeSet<usize> = view.ball_members(u, r)?.into_iter().map(|p| tree.cube_of(k, p)).collect();
            k_max = k_max.max(met.len());
        }
    }
    let c = k_max as f64 * gamma.powf(-e) * spread.powf(e) / delta_star;

    let nbrs = view.neighbors_with_distances(epsilon);
    for &u in &support {
        let mut acc = measure.mass_of(u);
        let list = &nbrs[u];
        let mut i = 0;
        while i < list.len() {
            let r = list[i].1;
            while i < list.len() && list[i].1 <= r + TOLERANCE {
                acc += measure.mass_of(list[i].0 as usize);
                i += 1;
            }
            if r > psi_v && acc > c * r.powf(e) * (1.0 + 1e-12) {
                return Err(Error::Verification(format!(
                    "growth bound fails at ball({u}, {r}): {acc} > {}",
                    c * r.powf(e)
                )));
            }
        }
        if acc > c * epsilon.powf(e) * (1.0 + 1e-12) {
            return Err(Error::Verification(format!("growth bound fails at ball({u}, {epsilon})")));
        }
    }

    Ok(FrostmanOutput {
        measure,
        params: FrostmanParams {
            epsilon,
            n,
            psi_value: psi_v,
            gamma,
            s,
            exponent: e,
            m,
            l,
            c2,
            c,
            k_max,
            delta,
            delta_star,
            delta_star_ge_delta: delta_star >= delta,
            mass_before_normalization: total,
            mass_floor,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Largest scanned `s` whose measure forces every admissible cover to cost at least `δ`.
    pub certified_s: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub side: Side,
    pub delta: f64,
    pub step: f64,
    pub value: f64,
    pub cells: Vec<CharacterizationCell>,
}

/// Measure-side lower bound for the Ψ-intermediate threshold.
///
/// On each cell the exponent is raised in steps of `step` while the
/// Frostman measure at that exponent has `1/c ≥ δ`; by the mass
/// distribution principle every admissible cover then costs at least `δ`,
/// so the certified `s` never exceeds `s*(ε, N)`. Cells where the
/// construction's hypotheses fail certify nothing (0). The upper side
/// takes the maximum over the tail cells, the lower side the minimum.
pub fn measure_characterization_bound(
    sys: &MetricSystem,
    psi: &AdmissibleFunction,
    spec: &GridSpec,
    side: Side,
    delta: f64,
    step: f64,
    opts: &FrostmanOptions,
) -> Result<CharacterizationReport> {
    spec.validate()?;
    if !(step > 0.0) {
        return Err(Error::domain("scan step must be positive"));
    }
    let mut cells = Vec::new();
    for &eps in &spec.epsilons {
        for &n in &spec.scales {
            let scale = BowenScale::new(n)?;
            let mut best = None;
            let mut note = None;
            let mut k = 0u32;
            loop {
                let s = k as f64 * step;
                match frostman_construct(sys, scale, psi, eps, s, delta, opts) {
                    Ok(out) if 1.0 / out.params.c >= delta => best = Some(s),
                    Ok(_) => break,
                    Err(e @ (Error::Precondition(_) | Error::Domain(_))) => {
                        note = Some(e.to_string());
                        break;
                    }
                    Err(e) => return Err(e),
                }
                k += 1;
                if s > crate::dimensions::MAX_EXPONENT {
                    break;
                }
            }
            cells.push(CharacterizationCell {
                epsilon: eps,
                n,
                certified_s: best,
                note,
            });
        }
    }
    let ns = spec.scales.len();
    let ne = spec.epsilons.len();
    let tail = cells
        .iter()
        .enumerate()
        .filter(|(i, _)| i / ns >= ne / 2 && i % ns >= ns / 2)
        .map(|(_, c)| c.certified_s.unwrap_or(0.0));
    let value = match side {
        Side::Upper => tail.fold(0.0, f64::max),
        Side::Lower => tail.fold(f64::INFINITY, f64::min),
    };
    Ok(CharacterizationReport {
        side,
        delta,
        step,
        value: if value.is_finite() { value } else { 0.0 },
        cells,
    })
}
