//! The cylinder measure on `K^ℕ`, `K = {0} ∪ {1/n}`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{FiniteMeasure, SetMeasure};
use crate::error::{Error, Result};
use crate::metric::{BowenScale, PointId};
use crate::MetricSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example3Params {
    pub theta: f64,
    pub epsilon: f64,
    /// Bracketing index: `1/(m(m+1)) < 2ε ≤ 1/(m(m-1))`.
    pub m: usize,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: BowenScale,
}

impl Example3Params {
    /// `ε = 1/(2(m²-1))` (or `1/2` for `m = 1`) and `s = θ/(1+θ)`.
    pub fn new(theta: f64, m: usize, n: usize) -> Result<Self> {
        let epsilon = if m >= 2 {
            1.0 / (2.0 * ((m * m) as f64 - 1.0))
        } else {
            0.5
        };
        Self::with_epsilon(theta, epsilon, m, n)
    }

    pub fn with_epsilon(theta: f64, epsilon: f64, m: usize, n: usize) -> Result<Self> {
        let p = Example3Params {
            theta,
            epsilon,
            m,
            s: theta / (1.0 + theta),
            n: BowenScale::new(n)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_s(mut self, s: f64) -> Result<Self> {
        self.s = s;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::domain(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if self.m == 0 || !(self.s >= 0.0) {
            return Err(Error::domain("m must be positive and s nonnegative"));
        }
        let m = self.m as f64;
        let two_eps = 2.0 * self.epsilon;
        let upper = if self.m == 1 { f64::INFINITY } else { 1.0 / (m * (m - 1.0)) };
        if !(1.0 / (m * (m + 1.0)) < two_eps && two_eps <= upper * (1.0 + 1e-12)) {
            return Err(Error::domain(format!(
                "epsilon = {} is not bracketed by m = {}",
                self.epsilon, self.m
            )));
        }
        Ok(())
    }

    /// Mass of each support cylinder, `ε^{N(1+θ)s/(4θ)}`.
    pub fn atom_mass(&self) -> f64 {
        let n = self.n.get() as f64;
        self.epsilon.powf(n * (1.0 + self.theta) * self.s / (4.0 * self.theta))
    }

    /// Per-iterate exponent `(1+θ)s/4` of the growth bound `μ(U) ≤ diam^{N(1+θ)s/4}`.
    pub fn growth_exponent(&self) -> f64 {
        (1.0 + self.theta) * self.s / 4.0
    }
}

/// Equal mass on every depth-`N` cylinder whose letters lie in
/// `{1, 1/2, ..., 1/m}`; zero elsewhere.
///
/// A set is charged the mass of every support cylinder it meets, which is
/// the measure of the infinite model restricted to cylinder-saturated sets.
/// The atoms sit on the representatives `prefix·000…`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderMeasure {
    pub params: Example3Params,
    atoms: FiniteMeasure,
    /// Support cylinder of each point, if any.
    #[serde(skip)]
    cylinder: Vec<Option<usize>>,
}

impl CylinderMeasure {
    pub fn atoms(&self) -> &FiniteMeasure {
        &self.atoms
    }

    pub fn cylinder_of(&self, p: PointId) -> Option<usize> {
        self.cylinder.get(p).copied().flatten()
    }
}

impl SetMeasure for CylinderMeasure {
    fn total(&self) -> f64 {
        self.atoms.total()
    }

    fn measure(&self, points: &[PointId]) -> f64 {
        let met: BTreeSet<usize> = points.iter().filter_map(|&p| self.cylinder_of(p)).collect();
        met.len() as f64 * self.params.atom_mass()
    }
}

pub fn example3_measure(k_sys: &MetricSystem, params: &Example3Params) -> Result<CylinderMeasure> {
    params.validate()?;
    let n = params.n.get();
    let m = params.m;
    let letter = |x: f64| (1..=m).find(|&j| (x - 1.0 / j as f64).abs() <= 1e-12).map(|j| j - 1);
    let mut cylinder = vec![None; k_sys.len()];
    let mut reps = Vec::new();
    for (u, slot) in cylinder.iter_mut().enumerate() {
        let c = k_sys
            .coords(u)
            .ok_or_else(|| Error::domain("the cylinder measure needs a coordinate model"))?;
        if c.len() < n {
            return Err(Error::domain(format!("model depth {} is below N = {n}", c.len())));
        }
        let code = c[..n]
            .iter()
            .try_fold(0usize, |acc, &x| letter(x).map(|l| acc * m + l));
        if let Some(code) = code {
            *slot = Some(code);
            if c[n..].iter().all(|&x| x == 0.0) {
                reps.push(u);
            }
        }
    }
    let expected = m.checked_pow(n as u32).unwrap_or(usize::MAX);
    if reps.len() != expected {
        return Err(Error::domain(format!(
            "alphabet does not contain 1, 1/2, ..., 1/{m}: found {} of {expected} support cylinders",
            reps.len()
        )));
    }
    let atoms = FiniteMeasure::new(reps.clone(), vec![params.atom_mass(); reps.len()])?;
    Ok(CylinderMeasure {
        params: params.clone(),
        atoms,
        cylinder,
    })
}
