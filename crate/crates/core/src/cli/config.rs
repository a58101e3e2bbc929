use serde::{Deserialize, Serialize};

use crate::covers::{SolveMode, SolverConfig, DEFAULT_NODE_BUDGET};
use crate::dimensions::{AdmissibleFunction, CountStatistic, GridSpec, ThresholdConfig};
use crate::error::{Error, Result};
use crate::systems::{SystemSpec, DEFAULT_POINT_BUDGET};

/// Environment variable overriding the point cap.
pub const BUDGET_ENV: &str = "MDIMLAB_BUDGET";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_nodes")]
    pub nodes: u64,
}

fn default_points() -> usize {
    DEFAULT_POINT_BUDGET
}

fn default_nodes() -> u64 {
    DEFAULT_NODE_BUDGET
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            points: default_points(),
            nodes: default_nodes(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    MeanHausdorff,
    MetricMean,
    PsiIntermediate,
    MeanAssouad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Sandwich,
    Chain,
    PsiMonotonicity,
    UnionStability,
    MeasureRoundTrip,
    Holder,
    Product,
}

pub const ALL_CHECKS: [CheckKind; 7] = [
    CheckKind::Sandwich,
    CheckKind::Chain,
    CheckKind::PsiMonotonicity,
    CheckKind::UnionStability,
    CheckKind::MeasureRoundTrip,
    CheckKind::Holder,
    CheckKind::Product,
];

/// How a Hölder map is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// Explicit image of every source point.
    Table { map: Vec<usize> },
    /// `u ↦` the target point whose coordinates are `factor·coords(u)`.
    Scale { factor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    /// Indices into `systems`.
    pub source: usize,
    pub target: usize,
    pub map: MapSpec,
    pub c: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub systems: Vec<SystemSpec>,
    pub epsilons: Vec<f64>,
    pub scales: Vec<usize>,
    #[serde(default = "default_psi")]
    pub psi: Vec<AdmissibleFunction>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mode")]
    pub mode: SolveMode,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: u64,
    /// Grid step of every threshold search.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_statistic")]
    pub statistic: CountStatistic,
    /// Assouad samples: outer radii `R` and inner radii `r`.
    #[serde(default)]
    pub assouad_big_radii: Vec<f64>,
    #[serde(default)]
    pub assouad_radii: Vec<f64>,
    #[serde(default)]
    pub checks: Option<Vec<CheckKind>>,
    #[serde(default = "default_trials")]
    pub union_trials: usize,
    #[serde(default)]
    pub holder: Vec<HolderSpec>,
    /// Pairs of indices into `systems`.
    #[serde(default)]
    pub products: Vec<(usize, usize)>,
}

fn default_psi() -> Vec<AdmissibleFunction> {
    vec![AdmissibleFunction::power_theta(0.5).expect("valid theta")]
}

fn default_delta() -> f64 {
    0.5
}

fn default_mode() -> SolveMode {
    SolveMode::Exact
}

fn default_step() -> f64 {
    1e-3
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::MeanHausdorff,
        EstimatorKind::MetricMean,
        EstimatorKind::PsiIntermediate,
    ]
}

fn default_statistic() -> CountStatistic {
    CountStatistic::Sep
}

fn default_trials() -> usize {
    20
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("field `{field}`: {why}")));
        if self.systems.is_empty() {
            return bad("systems", "at least one system is required");
        }
        if let Err(e) = self.grid() {
            return bad("epsilons/scales", &e.to_string());
        }
        if self.psi.is_empty() {
            return bad("psi", "at least one admissible function is required");
        }
        for p in &self.psi {
            if let Err(e) = p.validate_on(&self.epsilons) {
                return bad("psi", &e.to_string());
            }
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad("delta", "must lie in (0, 1]");
        }
        if self.budgets.points == 0 || self.budgets.nodes == 0 {
            return bad("budgets", "budgets must be positive");
        }
        if !(self.step > 0.0) {
            return bad("step", "must be positive");
        }
        let n = self.systems.len();
        for h in &self.holder {
            if h.source >= n || h.target >= n {
                return bad("holder", "system index out of range");
            }
        }
        if self.products.iter().any(|&(a, b)| a >= n || b >= n) {
            return bad("products", "system index out of range");
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.epsilons.clone(), self.scales.clone())
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            mode: self.mode,
            node_budget: self.budgets.nodes,
            degrade: true,
        }
    }

    pub fn threshold(&self) -> ThresholdConfig {
        ThresholdConfig {
            step: self.step,
            solver: self.solver(),
        }
    }

    /// Point cap after the environment override.
    pub fn point_budget(&self) -> Result<usize> {
        match std::env::var(BUDGET_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&b| b > 0)
                .ok_or_else(|| Error::Config(format!("{BUDGET_ENV} must be a positive integer, got {v:?}"))),
            Err(_) => Ok(self.budgets.points),
        }
    }

    pub fn checks(&self) -> Vec<CheckKind> {
        self.checks.clone().unwrap_or_else(|| ALL_CHECKS.to_vec())
    }
}
