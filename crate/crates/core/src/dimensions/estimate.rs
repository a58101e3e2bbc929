//! Evidence grids over `(ε, N)` and their aggregation into estimates.

use serde::{Deserialize, Serialize};

use super::admissible::AdmissibleFunction;
use super::cells::{self, CountStatistic, ThresholdConfig};
use crate::covers::Method;
use crate::error::{Error, Result};
use crate::metric::{BowenScale, BowenView};
use crate::MetricSystem;

/// `ε` values (strictly decreasing) crossed with scales (strictly increasing).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub epsilons: Vec<f64>,
    pub scales: Vec<usize>,
}

impl GridSpec {
    pub fn new(epsilons: Vec<f64>, scales: Vec<usize>) -> Result<Self> {
        let g = GridSpec { epsilons, scales };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.scales.is_empty() {
            return Err(Error::domain("grid needs at least one epsilon and one scale"));
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::domain("grid epsilons must be positive"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::domain("grid epsilons must be strictly decreasing"));
        }
        if self.scales[0] == 0 || self.scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("grid scales must be positive and strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// `dim_ε^H(Ξ, d_N) / N`.
    HausdorffRatio,
    /// Ψ-window cover threshold `s*(ε, N)`.
    PsiThreshold,
    /// Threshold with every diameter equal to `ε`.
    FixedDiameterThreshold,
    LogSep,
    LogSpan,
}

impl StatisticKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatisticKind::HausdorffRatio => "hausdorff_ratio",
            StatisticKind::PsiThreshold => "psi_threshold",
            StatisticKind::FixedDiameterThreshold => "fixed_diameter_threshold",
            StatisticKind::LogSep => "log_sep",
            StatisticKind::LogSpan => "log_span",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `None` when the cell's window is infeasible.
    pub value: Option<f64>,
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceGrid {
    pub statistic: StatisticKind,
    pub epsilons: Vec<f64>,
    pub scales: Vec<usize>,
    /// Row-major: all scales for `epsilons[0]`, then `epsilons[1]`, ...
    pub cells: Vec<GridCell>,
}

impl EvidenceGrid {
    pub fn cell(&self, ei: usize, ni: usize) -> &GridCell {
        &self.cells[ei * self.scales.len() + ni]
    }

    pub fn value(&self, ei: usize, ni: usize) -> Option<f64> {
        self.cell(ei, ni).value
    }

    /// True when some cell was dropped because a budget ran out.
    pub fn hit_capacity(&self) -> bool {
        self.cells
            .iter()
            .any(|c| c.note.as_deref().is_some_and(|n| n.starts_with("capacity")))
    }

    pub fn same_shape(&self, other: &EvidenceGrid) -> bool {
        self.epsilons == other.epsilons && self.scales == other.scales
    }
}

/// Evaluates `cell` on every grid point. Infeasible windows and exhausted
/// budgets become empty cells with a note; every other error aborts.
pub fn evaluate_grid(
    sys: &MetricSystem,
    spec: &GridSpec,
    statistic: StatisticKind,
    mut cell: impl FnMut(&BowenView<'_, f64>, f64) -> Result<(f64, Method)>,
) -> Result<EvidenceGrid> {
    spec.validate()?;
    let views: Vec<BowenView<'_, f64>> = spec
        .scales
        .iter()
        .map(|&n| BowenScale::new(n).map(|s| sys.view(s)))
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(spec.epsilons.len() * spec.scales.len());
    for &eps in &spec.epsilons {
        for view in &views {
            let (value, method, note) = match cell(view, eps) {
                Ok((v, m)) => (Some(v), Some(m), None),
                Err(Error::Infeasible { point, reason }) => {
                    (None, None, Some(format!("infeasible at point {point}: {reason}")))
                }
                Err(e @ Error::Capacity { .. }) => (None, None, Some(e.to_string())),
                Err(e) => return Err(e),
            };
            cells.push(GridCell {
                epsilon: eps,
                n: view.n(),
                value,
                method,
                note,
            });
        }
    }
    Ok(EvidenceGrid {
        statistic,
        epsilons: spec.epsilons.clone(),
        scales: spec.scales.clone(),
        cells,
    })
}

pub fn hausdorff_grid(sys: &MetricSystem, spec: &GridSpec, cfg: &ThresholdConfig) -> Result<EvidenceGrid> {
    evaluate_grid(sys, spec, StatisticKind::HausdorffRatio, |v, e| {
        let t = cells::dim_eps_h(v, e, None, cfg)?;
        Ok((t.value / v.n() as f64, t.method))
    })
}

/// Hausdorff ratios measured against the Ψ window, see [`cells::hausdorff_chain_cell`].
pub fn hausdorff_chain_grid(
    sys: &MetricSystem,
    spec: &GridSpec,
    psi: &AdmissibleFunction,
    cfg: &ThresholdConfig,
) -> Result<EvidenceGrid> {
    evaluate_grid(sys, spec, StatisticKind::HausdorffRatio, |v, e| {
        let t = cells::hausdorff_chain_cell(v, e, psi, cfg)?;
        Ok((t.value, t.method))
    })
}

pub fn psi_grid(
    sys: &MetricSystem,
    spec: &GridSpec,
    psi: &AdmissibleFunction,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<EvidenceGrid> {
    psi.validate_on(&spec.epsilons)?;
    evaluate_grid(sys, spec, StatisticKind::PsiThreshold, |v, e| {
        let t = cells::psi_cell(v, e, psi, delta, cfg)?;
        Ok((t.value, t.method))
    })
}

pub fn fixed_diameter_grid(sys: &MetricSystem, spec: &GridSpec, delta: f64, cfg: &ThresholdConfig) -> Result<EvidenceGrid> {
    evaluate_grid(sys, spec, StatisticKind::FixedDiameterThreshold, |v, e| {
        let t = cells::fixed_diameter_cell(v, e, delta, cfg)?;
        Ok((t.value, t.method))
    })
}

pub fn metric_mean_grid(
    sys: &MetricSystem,
    spec: &GridSpec,
    statistic: CountStatistic,
    cfg: &ThresholdConfig,
) -> Result<EvidenceGrid> {
    let kind = match statistic {
        CountStatistic::Sep => StatisticKind::LogSep,
        CountStatistic::Span => StatisticKind::LogSpan,
    };
    evaluate_grid(sys, spec, kind, |v, e| cells::metric_mean_cell(v, e, statistic, &cfg.solver))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    MeanHausdorff,
    MetricMean,
    PsiIntermediate,
    MeanAssouad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    /// Value bound by the estimate: the aggregate over the grid tail.
    pub tail_value: f64,
    /// Per-ε aggregate over the upper half of the scales.
    pub columns: Vec<(f64, f64)>,
    /// Fit of the column aggregates against `1/|log2 ε|`; the intercept is
    /// the value at `ε → 0`.
    pub fit: Option<LinearFit>,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub system: String,
    pub flavor: Flavor,
    pub side: Side,
    pub value: f64,
    pub delta: Option<f64>,
    pub psi: Option<AdmissibleFunction>,
    pub grid: EvidenceGrid,
    pub extrapolation: Extrapolation,
    pub warnings: Vec<String>,
}

fn least_squares(pts: &[(f64, f64)]) -> Option<LinearFit> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

fn fold(side: Side, vals: impl Iterator<Item = f64>) -> Option<f64> {
    vals.fold(None, |acc, v| {
        Some(match (acc, side) {
            (None, _) => v,
            (Some(a), Side::Upper) => a.max(v),
            (Some(a), Side::Lower) => a.min(v),
        })
    })
}

/// Turns a grid into an estimate.
///
/// The N-tail is the upper half of the scales and the ε-tail the smaller
/// half of the epsilons. Upper takes maxima, lower minima:
/// - mean Hausdorff: the N-tail aggregate of the finest ε column;
/// - metric mean: the N-tail maximum of each column, then aggregated over the ε-tail;
/// - Ψ-intermediate: aggregated over every tail cell.
pub fn aggregate(grid: &EvidenceGrid, flavor: Flavor, side: Side) -> Result<(f64, Extrapolation, Vec<String>)> {
    if grid.scales.len() < 2 || grid.epsilons.len() < 2 {
        return Err(Error::InsufficientGrid(format!(
            "need at least 2 scales and 2 epsilons, got {} and {}",
            grid.scales.len(),
            grid.epsilons.len()
        )));
    }
    let mut warnings = Vec::new();
    let n_tail: Vec<usize> = (grid.scales.len() / 2..grid.scales.len()).collect();
    let live: Vec<usize> = (0..grid.epsilons.len())
        .filter(|&ei| {
            let any = (0..grid.scales.len()).any(|ni| grid.value(ei, ni).is_some());
            if !any {
                warnings.push(format!("dropped column epsilon = {}: every cell infeasible", grid.epsilons[ei]));
            }
            any
        })
        .collect();
    if live.len() < 2 {
        return Err(Error::InsufficientGrid("fewer than 2 feasible epsilon columns".into()));
    }
    let eps_tail = &live[live.len() / 2..];
    let column = |ei: usize, s: Side| fold(s, n_tail.iter().filter_map(|&ni| grid.value(ei, ni)));

    let inner = match flavor {
        Flavor::MetricMean => Side::Upper,
        _ => side,
    };
    let columns: Vec<(f64, f64)> = live
        .iter()
        .filter_map(|&ei| column(ei, inner).map(|v| (grid.epsilons[ei], v)))
        .collect();
    let tail = match flavor {
        Flavor::MeanHausdorff => {
            let last = *live.last().expect("nonempty");
            column(last, side)
        }
        Flavor::MetricMean => fold(side, eps_tail.iter().filter_map(|&ei| column(ei, Side::Upper))),
        Flavor::PsiIntermediate | Flavor::MeanAssouad => fold(
            side,
            eps_tail
                .iter()
                .flat_map(|&ei| n_tail.iter().filter_map(move |&ni| grid.value(ei, ni))),
        ),
    };
    let tail_value = tail.ok_or_else(|| Error::InsufficientGrid("grid tail has no feasible cell".into()))?;
    let fit_pts: Vec<(f64, f64)> = columns
        .iter()
        .filter(|(e, v)| *e < 1.0 && v.is_finite())
        .map(|&(e, v)| (1.0 / e.log2().abs(), v))
        .collect();
    let fit = least_squares(&fit_pts);
    let description = format!(
        "tail over N >= {} and the {} smallest epsilons; linear fit of column values against 1/|log2 eps| over {} columns",
        grid.scales[n_tail[0]],
        eps_tail.len(),
        fit_pts.len()
    );
    Ok((
        tail_value,
        Extrapolation {
            tail_value,
            columns,
            fit,
            description,
        },
        warnings,
    ))
}

pub fn estimate_from_grid(
    system: &str,
    grid: EvidenceGrid,
    flavor: Flavor,
    side: Side,
    delta: Option<f64>,
    psi: Option<AdmissibleFunction>,
) -> Result<DimensionEstimate> {
    let (value, extrapolation, warnings) = aggregate(&grid, flavor, side)?;
    Ok(DimensionEstimate {
        system: system.to_string(),
        flavor,
        side,
        value,
        delta,
        psi,
        grid,
        extrapolation,
        warnings,
    })
}

pub fn mean_hausdorff_estimate(
    sys: &MetricSystem,
    spec: &GridSpec,
    side: Side,
    cfg: &ThresholdConfig,
) -> Result<DimensionEstimate> {
    let grid = hausdorff_grid(sys, spec, cfg)?;
    estimate_from_grid(sys.label(), grid, Flavor::MeanHausdorff, side, None, None)
}

pub fn metric_mean_estimate(
    sys: &MetricSystem,
    spec: &GridSpec,
    side: Side,
    statistic: CountStatistic,
    cfg: &ThresholdConfig,
) -> Result<DimensionEstimate> {
    let grid = metric_mean_grid(sys, spec, statistic, cfg)?;
    estimate_from_grid(sys.label(), grid, Flavor::MetricMean, side, None, None)
}

pub fn psi_intermediate_estimate(
    sys: &MetricSystem,
    spec: &GridSpec,
    psi: &AdmissibleFunction,
    side: Side,
    delta: f64,
    cfg: &ThresholdConfig,
) -> Result<DimensionEstimate> {
    let grid = psi_grid(sys, spec, psi, delta, cfg)?;
    estimate_from_grid(sys.label(), grid, Flavor::PsiIntermediate, side, Some(delta), Some(psi.clone()))
}
