use serde::Serialize;
use serde_json::Value;

use super::config::{CheckKind, HolderSpec, MapSpec, RunConfig};
use super::estimate::build_systems;
use super::report::{grid_rows, CellRow, Provenance, RunOutput, Status};
use crate::covers::{self, SandwichOutcome, SolveMode, SolverConfig, Window};
use crate::dimensions::{
    chain_from_grids, fixed_diameter_grid, hausdorff_chain_grid, holder_check, product_check, psi_cell,
    psi_grid, psi_monotonicity_check, psi_window, random_partitions, union_stability_check, AdmissibleFunction,
    GridSpec, HolderMap, ThresholdConfig,
};
use crate::error::{Error, Result};
use crate::measures::{ball_family, frostman_construct, mass_distribution_lower_bound, CellFamily, FrostmanOptions, MassDistributionCert};
use crate::metric::BowenScale;
use crate::MetricSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Passed,
    Failed,
    /// Hypotheses of the check do not hold here; nothing to assert.
    Skipped,
    /// Greedy bounds only; the comparison cannot be asserted.
    Inconclusive,
    /// A budget ran out before the check finished.
    Capacity,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub check: CheckKind,
    pub subject: String,
    pub outcome: Outcome,
    pub reason: Option<String>,
    pub detail: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemChecks {
    pub index: usize,
    pub label: String,
    pub points: Option<usize>,
    /// Metric axiom validation; a failure here stops the suite for the system.
    pub validation: Option<String>,
    pub checks: Vec<CheckEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub provenance: Provenance,
    pub status: Status,
    pub systems: Vec<SystemChecks>,
    pub holder: Vec<CheckEntry>,
    pub products: Vec<CheckEntry>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    spec: GridSpec,
    thr: ThresholdConfig,
    greedy: bool,
}

fn to_value(v: &impl Serialize) -> Option<Value> {
    serde_json::to_value(v).ok()
}

impl Ctx<'_> {
    /// Turns a check result into an entry. `passed` reads the verdict off the report.
    fn entry<T: Serialize>(&self, check: CheckKind, subject: &str, res: Result<T>, passed: impl Fn(&T) -> (bool, Option<String>)) -> CheckEntry {
        let (outcome, reason, detail) = match res {
            Ok(r) => {
                let (ok, why) = passed(&r);
                let outcome = match (ok, self.greedy) {
                    (true, _) => Outcome::Passed,
                    (false, true) => Outcome::Inconclusive,
                    (false, false) => Outcome::Failed,
                };
                (outcome, why, to_value(&r))
            }
            Err(e @ Error::Capacity { .. }) => (Outcome::Capacity, Some(e.to_string()), None),
            Err(e @ Error::Precondition(_)) => (Outcome::Skipped, Some(e.to_string()), None),
            Err(e) => (Outcome::Failed, Some(e.to_string()), None),
        };
        CheckEntry {
            check,
            subject: subject.to_string(),
            outcome,
            reason,
            detail,
        }
    }

    fn skipped(&self, check: CheckKind, subject: &str, reason: &str) -> CheckEntry {
        CheckEntry {
            check,
            subject: subject.to_string(),
            outcome: Outcome::Skipped,
            reason: Some(reason.to_string()),
            detail: None,
        }
    }

    fn psi(&self) -> &AdmissibleFunction {
        &self.cfg.psi[0]
    }
}

fn first_violation(v: &[String]) -> Option<String> {
    v.first().cloned()
}

fn sandwich(ctx: &Ctx, sys: &MetricSystem, label: &str, rows: &mut Vec<CellRow>) -> CheckEntry {
    if ctx.greedy {
        return ctx.skipped(
            CheckKind::Sandwich,
            label,
            "greedy mode: separated and spanning bounds are one-sided and cannot be compared",
        );
    }
    let mut run = || -> Result<Vec<SandwichOutcome>> {
        let solver = &ctx.thr.solver;
        let mut out = Vec::new();
        for &n in &ctx.spec.scales {
            let view = sys.view(BowenScale::new(n)?);
            for &eps in &ctx.spec.epsilons {
                let double = covers::max_separated(&view, 2.0 * eps, solver)?;
                let span = covers::min_spanning(&view, eps, solver)?;
                let sep = covers::max_separated(&view, eps, solver)?;
                for (stat, e, v, m) in [
                    ("sep_2eps", eps, double.sep(), double.method),
                    ("span", eps, span.span(), span.method),
                    ("sep", eps, sep.sep(), sep.method),
                ] {
                    rows.push(CellRow::new(label, n, e, stat, Some(v as f64), m.as_str()));
                }
                out.push(covers::sandwich_check(&double, &span, &sep)?);
            }
        }
        Ok(out)
    };
    ctx.entry(CheckKind::Sandwich, label, run(), |cells| {
        let bad = cells.iter().find_map(|c| c.counterexample.clone());
        (bad.is_none(), bad)
    })
}

fn chain(ctx: &Ctx, sys: &MetricSystem, label: &str, rows: &mut Vec<CellRow>) -> CheckEntry {
    let (cfg, spec, thr, psi) = (ctx.cfg, &ctx.spec, &ctx.thr, ctx.psi());
    let mut run = || {
        let h = hausdorff_chain_grid(sys, spec, psi, thr)?;
        let p = psi_grid(sys, spec, psi, cfg.delta, thr)?;
        let m = fixed_diameter_grid(sys, spec, cfg.delta, thr)?;
        rows.extend(grid_rows(label, &h, None, |e| psi_window(psi, e).ok()));
        rows.extend(grid_rows(label, &p, Some(cfg.delta), |e| psi_window(psi, e).ok()));
        rows.extend(grid_rows(label, &m, Some(cfg.delta), |e| Some(Window::fixed(e))));
        if h.hit_capacity() || p.hit_capacity() || m.hit_capacity() {
            return Err(Error::Capacity {
                what: "chain grid".into(),
                needed: cfg.budgets.nodes.saturating_add(1),
                budget: cfg.budgets.nodes,
            });
        }
        chain_from_grids(&h, &p, &m, cfg.delta)
    };
    ctx.entry(CheckKind::Chain, label, run(), |r| (r.passed, first_violation(&r.violations)))
}

fn monotonicity(ctx: &Ctx, sys: &MetricSystem, label: &str) -> Vec<CheckEntry> {
    let zero = AdmissibleFunction::zero();
    let mut pairs: Vec<(&AdmissibleFunction, &AdmissibleFunction)> = ctx.cfg.psi.iter().map(|p| (&zero, p)).collect();
    for (i, a) in ctx.cfg.psi.iter().enumerate() {
        for b in &ctx.cfg.psi[i + 1..] {
            pairs.push((a, b));
            pairs.push((b, a));
        }
    }
    pairs
        .into_iter()
        .map(|(wide, narrow)| {
            let res = psi_monotonicity_check(sys, wide, narrow, &ctx.spec, ctx.cfg.delta, &ctx.thr);
            ctx.entry(CheckKind::PsiMonotonicity, label, res, |r| (r.passed, first_violation(&r.violations)))
        })
        .collect()
}

fn union(ctx: &Ctx, sys: &MetricSystem, label: &str) -> CheckEntry {
    if sys.len() < 2 {
        return ctx.skipped(CheckKind::UnionStability, label, "fewer than two points");
    }
    let parts = random_partitions(sys.len(), ctx.cfg.union_trials, ctx.cfg.seed);
    let res: Result<Vec<_>> = parts
        .iter()
        .map(|(a, b)| union_stability_check(sys, a, b, &ctx.spec, ctx.psi(), ctx.cfg.delta, &ctx.thr))
        .collect();
    ctx.entry(CheckKind::UnionStability, label, res, |rs| {
        let bad = rs.iter().find_map(|r| first_violation(&r.violations));
        (bad.is_none(), bad)
    })
}

#[derive(Clone, Debug, Serialize)]
struct RoundTripCell {
    epsilon: f64,
    #[serde(rename = "N")]
    n: usize,
    s: Option<f64>,
    c: Option<f64>,
    certified: Option<bool>,
    skipped: Option<String>,
}

/// Constructs the Frostman measure on each cell just below the
/// Ψ-threshold and feeds it back into the mass distribution principle.
fn round_trip(ctx: &Ctx, sys: &MetricSystem, label: &str) -> CheckEntry {
    let psi = ctx.psi();
    let opts = FrostmanOptions {
        solver: ctx.thr.solver,
        c2: None,
    };
    let run = || -> Result<Vec<RoundTripCell>> {
        let mut cells = Vec::new();
        for &eps in &ctx.spec.epsilons {
            for &n in &ctx.spec.scales {
                let scale = BowenScale::new(n)?;
                let view = sys.view(scale);
                let mut cell = RoundTripCell {
                    epsilon: eps,
                    n,
                    s: None,
                    c: None,
                    certified: None,
                    skipped: None,
                };
                let star = match psi_cell(&view, eps, psi, ctx.cfg.delta, &ctx.thr) {
                    Ok(t) if t.value.is_finite() => t.value,
                    Ok(_) => {
                        cell.skipped = Some("threshold is infinite".into());
                        cells.push(cell);
                        continue;
                    }
                    Err(Error::Infeasible { .. }) => {
                        cell.skipped = Some("window is infeasible".into());
                        cells.push(cell);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let s = (star - ctx.cfg.step).max(0.0);
                cell.s = Some(s);
                let out = match frostman_construct(sys, scale, psi, eps, s, ctx.cfg.delta, &opts) {
                    Ok(out) => out,
                    Err(e @ (Error::Precondition(_) | Error::Domain(_))) => {
                        cell.skipped = Some(e.to_string());
                        cells.push(cell);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                cell.c = Some(out.params.c);
                let window = psi_window(psi, eps)?;
                let fam = CellFamily {
                    epsilon: eps,
                    n,
                    sets: ball_family(&view, out.measure.support(), window)?,
                };
                let cert = MassDistributionCert::new(1.0 - 1e-9, out.params.c, s, psi.clone())?;
                let verdict = if fam.sets.is_empty() {
                    true
                } else {
                    mass_distribution_lower_bound(sys, &out.measure, cert, &[fam])?.passed
                };
                cell.certified = Some(verdict);
                cells.push(cell);
            }
        }
        Ok(cells)
    };
    ctx.entry(CheckKind::MeasureRoundTrip, label, run(), |cells| {
        let bad = cells.iter().find(|c| c.certified == Some(false));
        (
            bad.is_none(),
            bad.map(|c| format!("eps = {}, N = {}: measure does not self-certify", c.epsilon, c.n)),
        )
    })
}

fn resolve_map(h: &HolderSpec, src: &MetricSystem, dst: &MetricSystem) -> Result<Vec<usize>> {
    match &h.map {
        MapSpec::Table { map } => Ok(map.clone()),
        MapSpec::Scale { factor } => (0..src.len())
            .map(|u| {
                let c = src.coords(u).ok_or_else(|| Error::Config("scale map needs coordinate models".into()))?;
                (0..dst.len())
                    .find(|&v| {
                        dst.coords(v).is_some_and(|d| {
                            d.len() == c.len() && d.iter().zip(c).all(|(x, y)| (x - factor * y).abs() <= 1e-9)
                        })
                    })
                    .ok_or_else(|| Error::Config(format!("point {u} scaled by {factor} is not in the target")))
            })
            .collect(),
    }
}

pub fn run_checks(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut solver: SolverConfig = cfg.solver();
    // exact comparisons only: exhausting the budget is reported, never hidden
    solver.degrade = cfg.mode == SolveMode::Greedy;
    let ctx = Ctx {
        cfg,
        spec: cfg.grid()?,
        thr: ThresholdConfig { step: cfg.step, solver },
        greedy: cfg.mode == SolveMode::Greedy,
    };
    let wanted = cfg.checks();
    let has = |k: CheckKind| wanted.contains(&k);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut status = Status::Passed;

    let built = build_systems(cfg)?;
    let mut systems = Vec::new();
    let mut usable: Vec<Option<&MetricSystem>> = Vec::new();
    for (index, (label, res)) in built.iter().enumerate() {
        let mut entry = SystemChecks {
            index,
            label: label.clone(),
            points: None,
            validation: None,
            checks: Vec::new(),
        };
        let sys = match res {
            Ok(s) => s,
            Err(e) => {
                status = status.max(if e.is_capacity() { Status::Partial } else { Status::Failed });
                entry.validation = Some(format!("not built: {e}"));
                summary.push(format!("{label}: not built: {e}"));
                systems.push(entry);
                usable.push(None);
                continue;
            }
        };
        entry.points = Some(sys.len());
        if let Err(e) = sys.validate_metric(cfg.seed) {
            status = Status::Failed;
            entry.validation = Some(e.to_string());
            summary.push(format!("{label}: metric validation failed: {e}"));
            systems.push(entry);
            usable.push(None);
            continue;
        }
        usable.push(Some(sys));
        if has(CheckKind::Sandwich) {
            entry.checks.push(sandwich(&ctx, sys, label, &mut rows));
        }
        if has(CheckKind::Chain) {
            entry.checks.push(chain(&ctx, sys, label, &mut rows));
        }
        if has(CheckKind::PsiMonotonicity) {
            entry.checks.extend(monotonicity(&ctx, sys, label));
        }
        if has(CheckKind::UnionStability) {
            entry.checks.push(union(&ctx, sys, label));
        }
        if has(CheckKind::MeasureRoundTrip) {
            entry.checks.push(round_trip(&ctx, sys, label));
        }
        systems.push(entry);
    }

    let mut holder = Vec::new();
    if has(CheckKind::Holder) {
        for h in &cfg.holder {
            let subject = format!("{} -> {}", built[h.source].0, built[h.target].0);
            let (Some(src), Some(dst)) = (usable[h.source], usable[h.target]) else {
                holder.push(ctx.skipped(CheckKind::Holder, &subject, "a system is unusable"));
                continue;
            };
            let res = resolve_map(h, src, dst).and_then(|map| {
                let f = HolderMap {
                    source: src,
                    target: dst,
                    map,
                    c: h.c,
                    alpha: h.alpha,
                };
                holder_check(&f, ctx.psi(), &ctx.spec, cfg.delta, &ctx.thr)
            });
            holder.push(ctx.entry(CheckKind::Holder, &subject, res, |r| (r.passed, first_violation(&r.violations))));
        }
    }
    let mut products = Vec::new();
    if has(CheckKind::Product) {
        for &(a, b) in &cfg.products {
            let subject = format!("{} x {}", built[a].0, built[b].0);
            let (Some(sa), Some(sb)) = (usable[a], usable[b]) else {
                products.push(ctx.skipped(CheckKind::Product, &subject, "a system is unusable"));
                continue;
            };
            let res = product_check(sa, sb, ctx.psi(), &ctx.spec, cfg.delta, &ctx.thr);
            products.push(ctx.entry(CheckKind::Product, &subject, res, |r| (r.passed, first_violation(&r.violations))));
        }
    }

    let all = systems.iter().flat_map(|s| &s.checks).chain(&holder).chain(&products);
    for c in all {
        status = status.max(match c.outcome {
            Outcome::Failed => Status::Failed,
            Outcome::Capacity => Status::Partial,
            _ => Status::Passed,
        });
        let why = c.reason.as_deref().map(|r| format!(": {r}")).unwrap_or_default();
        summary.push(format!("{:?} on {}: {:?}{why}", c.check, c.subject, c.outcome));
    }
    let report = CheckReport {
        provenance: Provenance::new("check", cfg, cfg.seed)?,
        status,
        systems,
        holder,
        products,
    };
    RunOutput::new(status, "check.json", &report, &rows, summary)
}
