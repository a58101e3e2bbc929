use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiKind {
    /// `Ψ(ε) = ε^{1/θ}`.
    PowerTheta { theta: f64 },
    Zero,
    /// Tabulated `(ε, Ψ(ε))` pairs, linearly interpolated.
    CustomTable { table: Vec<(f64, f64)> },
}

/// Window function `Ψ` with `Ψ(ε) < ε` and `Ψ(ε)/ε → 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleFunction {
    #[serde(flatten)]
    pub kind: PsiKind,
    #[serde(default = "one")]
    pub domain_bound: f64,
}

fn one() -> f64 {
    1.0
}

impl AdmissibleFunction {
    pub fn power_theta(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::domain(format!("theta must lie in (0, 1], got {theta}")));
        }
        Ok(AdmissibleFunction {
            kind: PsiKind::PowerTheta { theta },
            domain_bound: 1.0,
        })
    }

    pub fn zero() -> Self {
        AdmissibleFunction {
            kind: PsiKind::Zero,
            domain_bound: 1.0,
        }
    }

    pub fn custom_table(mut table: Vec<(f64, f64)>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::domain("custom Psi table is empty"));
        }
        table.sort_by(|a, b| a.0.total_cmp(&b.0));
        if table.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::domain("custom Psi table repeats an epsilon"));
        }
        let bound = table.last().map(|t| t.0).unwrap_or(1.0);
        Ok(AdmissibleFunction {
            kind: PsiKind::CustomTable { table },
            domain_bound: bound.clamp(f64::MIN_POSITIVE, 1.0),
        })
    }

    pub fn with_domain_bound(mut self, gamma: f64) -> Self {
        self.domain_bound = gamma;
        self
    }

    pub fn eval(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::domain(format!("Psi evaluated at {eps}")));
        }
        match &self.kind {
            PsiKind::PowerTheta { theta } => Ok(eps.powf(1.0 / theta)),
            PsiKind::Zero => Ok(0.0),
            PsiKind::CustomTable { table } => {
                let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
                if let Some(&(_, v)) = table.iter().find(|(e, _)| rel(*e, eps)) {
                    return Ok(v);
                }
                let i = table.partition_point(|(e, _)| *e < eps);
                if i == 0 || i == table.len() {
                    return Err(Error::domain(format!("epsilon {eps} outside the Psi table")));
                }
                let ((e0, v0), (e1, v1)) = (table[i - 1], table[i]);
                Ok(v0 + (v1 - v0) * (eps - e0) / (e1 - e0))
            }
        }
    }

    /// Finite-grid form of admissibility: monotone, `Ψ(ε) < ε`, and
    /// `Ψ(ε)/ε` nonincreasing as `ε` decreases along `grid` in `(0, γ)`.
    pub fn validate_on(&self, grid: &[f64]) -> Result<()> {
        if !(self.domain_bound > 0.0 && self.domain_bound <= 1.0) {
            return Err(Error::domain("Psi domain bound must lie in (0, 1]"));
        }
        let mut pts: Vec<f64> = grid.iter().copied().filter(|&e| e > 0.0 && e <= self.domain_bound).collect();
        pts.sort_by(|a, b| b.total_cmp(a));
        pts.dedup();
        let mut prev: Option<(f64, f64)> = None;
        for e in pts {
            let v = self.eval(e)?;
            if !(v >= 0.0 && v < e) {
                return Err(Error::domain(format!("Psi({e}) = {v} is not in [0, epsilon)")));
            }
            if let Some((pe, pv)) = prev {
                if v > pv {
                    return Err(Error::domain(format!("Psi not monotone between {e} and {pe}")));
                }
                if v / e > pv / pe + 1e-12 {
                    return Err(Error::domain(format!("Psi(eps)/eps increases from {pe} to {e}")));
                }
            }
            prev = Some((e, v));
        }
        Ok(())
    }
}
