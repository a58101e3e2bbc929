use serde::Serialize;

use super::config::{EstimatorKind, RunConfig};
use super::report::{grid_rows, CellRow, Provenance, RunOutput, Status};
use crate::covers::{Method, SolveMode, Window};
use crate::dimensions::{
    self, estimate_from_grid, hausdorff_grid, metric_mean_grid, psi_grid, psi_window, AssouadFit,
    DimensionEstimate, EvidenceGrid, Flavor, Side,
};
use crate::error::{Error, Result};
use crate::MetricSystem;

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EstimateEntry {
    Ok { estimate: Box<DimensionEstimate> },
    /// The grid was computed but could not be aggregated.
    Failed {
        flavor: Flavor,
        side: Side,
        reason: String,
        grid: Option<Box<EvidenceGrid>>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemEstimates {
    pub index: usize,
    pub label: String,
    pub points: Option<usize>,
    /// `None` when the system was usable.
    pub failure: Option<String>,
    pub estimates: Vec<EstimateEntry>,
    pub assouad: Option<AssouadFit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub provenance: Provenance,
    pub status: Status,
    pub systems: Vec<SystemEstimates>,
}

/// Builds every configured system under the point cap. Build failures are
/// kept so the run can go on with the remaining systems.
pub(crate) fn build_systems(cfg: &RunConfig) -> Result<Vec<(String, Result<MetricSystem>)>> {
    let budget = cfg.point_budget()?;
    Ok(cfg
        .systems
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let built = spec.build(budget).map(|s| match &spec.label {
                Some(l) => s.with_label(l.clone()),
                None => s,
            });
            let label = match (&spec.label, &built) {
                (Some(l), _) => l.clone(),
                (None, Ok(s)) => s.label().to_string(),
                (None, Err(_)) => format!("system{i}"),
            };
            (label, built)
        })
        .collect())
}

fn estimates_for(
    label: &str,
    grid: EvidenceGrid,
    flavor: Flavor,
    delta: Option<f64>,
    psi: Option<&dimensions::AdmissibleFunction>,
) -> Vec<EstimateEntry> {
    [Side::Upper, Side::Lower]
        .into_iter()
        .map(|side| match estimate_from_grid(label, grid.clone(), flavor, side, delta, psi.cloned()) {
            Ok(e) => EstimateEntry::Ok { estimate: Box::new(e) },
            Err(e) => EstimateEntry::Failed {
                flavor,
                side,
                reason: e.to_string(),
                grid: Some(Box::new(grid.clone())),
            },
        })
        .collect()
}

fn degraded(grid: &EvidenceGrid, mode: SolveMode) -> bool {
    grid.hit_capacity()
        || (mode == SolveMode::Exact && grid.cells.iter().any(|c| c.method.is_some_and(|m| m != Method::Exact)))
}

pub fn run_estimate(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.grid()?;
    let thr = cfg.threshold();
    let mut rows: Vec<CellRow> = Vec::new();
    let mut systems = Vec::new();
    let mut status = Status::Passed;
    let mut summary = Vec::new();

    for (index, (label, built)) in build_systems(cfg)?.into_iter().enumerate() {
        let mut entry = SystemEstimates {
            index,
            label: label.clone(),
            points: None,
            failure: None,
            estimates: Vec::new(),
            assouad: None,
        };
        let sys = match built {
            Ok(s) => s,
            Err(e) => {
                status = status.max(if e.is_capacity() { Status::Partial } else { Status::Failed });
                summary.push(format!("{label}: not built: {e}"));
                entry.failure = Some(e.to_string());
                systems.push(entry);
                continue;
            }
        };
        entry.points = Some(sys.len());
        if let Err(e) = sys.validate_metric(cfg.seed) {
            status = Status::Failed;
            summary.push(format!("{label}: metric validation failed: {e}"));
            entry.failure = Some(e.to_string());
            systems.push(entry);
            continue;
        }
        for &kind in &cfg.estimators {
            match kind {
                EstimatorKind::MeanHausdorff => {
                    let grid = hausdorff_grid(&sys, &spec, &thr)?;
                    rows.extend(grid_rows(&label, &grid, None, |e| Some(Window::below(e))));
                    if degraded(&grid, cfg.mode) {
                        status = status.max(Status::Partial);
                    }
                    entry.estimates.extend(estimates_for(&label, grid, Flavor::MeanHausdorff, None, None));
                }
                EstimatorKind::MetricMean => {
                    let grid = metric_mean_grid(&sys, &spec, cfg.statistic, &thr)?;
                    rows.extend(grid_rows(&label, &grid, None, |_| None));
                    if degraded(&grid, cfg.mode) {
                        status = status.max(Status::Partial);
                    }
                    entry.estimates.extend(estimates_for(&label, grid, Flavor::MetricMean, None, None));
                }
                EstimatorKind::PsiIntermediate => {
                    for psi in &cfg.psi {
                        let grid = psi_grid(&sys, &spec, psi, cfg.delta, &thr)?;
                        rows.extend(grid_rows(&label, &grid, Some(cfg.delta), |e| psi_window(psi, e).ok()));
                        if degraded(&grid, cfg.mode) {
                            status = status.max(Status::Partial);
                        }
                        entry.estimates.extend(estimates_for(
                            &label,
                            grid,
                            Flavor::PsiIntermediate,
                            Some(cfg.delta),
                            Some(psi),
                        ));
                    }
                }
                EstimatorKind::MeanAssouad => {
                    let big = if cfg.assouad_big_radii.is_empty() { &cfg.epsilons } else { &cfg.assouad_big_radii };
                    let small = if cfg.assouad_radii.is_empty() { &cfg.epsilons } else { &cfg.assouad_radii };
                    match dimensions::mean_assouad_estimate(&sys, &spec.scales, big, small, &thr.solver) {
                        Ok(fit) => {
                            if cfg.mode == SolveMode::Exact && fit.method != Method::Exact {
                                status = status.max(Status::Partial);
                            }
                            entry.assouad = Some(fit);
                        }
                        Err(e @ Error::Capacity { .. }) => {
                            status = status.max(Status::Partial);
                            summary.push(format!("{label}: Assouad fit: {e}"));
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        for est in &entry.estimates {
            match est {
                EstimateEntry::Ok { estimate } => summary.push(format!(
                    "{label}: {:?} {:?} = {:.6}",
                    estimate.flavor, estimate.side, estimate.value
                )),
                EstimateEntry::Failed { flavor, side, reason, .. } => {
                    summary.push(format!("{label}: {flavor:?} {side:?}: {reason}"))
                }
            }
        }
        if let Some(fit) = &entry.assouad {
            summary.push(format!("{label}: Assouad a = {:.6}, C = {:.6}", fit.a, fit.c));
        }
        systems.push(entry);
    }

    let report = EstimateReport {
        provenance: Provenance::new("estimate", cfg, cfg.seed)?,
        status,
        systems,
    };
    RunOutput::new(status, "estimate.json", &report, &rows, summary)
}
