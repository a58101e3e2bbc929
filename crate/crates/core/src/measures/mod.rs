//! Finitely supported measures, the mass distribution principle, the
//! Frostman-type construction and the cylinder measure of the `K^ℕ` example.

mod example3;
mod frostman;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::covers::{CoverInstance, Window};
use crate::dimensions::{psi_window, AdmissibleFunction};
use crate::error::{Error, Result};
use crate::metric::{BowenScale, BowenView, PointId};
use crate::{MetricSystem, TOLERANCE};

pub use example3::{example3_measure, CylinderMeasure, Example3Params};
pub use frostman::{
    frostman_construct, measure_characterization_bound, CharacterizationReport, FrostmanOptions, FrostmanOutput,
    FrostmanParams,
};

/// Anything that can weigh a set of points.
pub trait SetMeasure {
    fn total(&self) -> f64;
    fn measure(&self, points: &[PointId]) -> f64;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr")]
pub struct FiniteMeasure {
    support: Vec<PointId>,
    masses: Vec<f64>,
    total: f64,
    #[serde(skip)]
    index: BTreeMap<PointId, usize>,
}

#[derive(Deserialize)]
struct MeasureRepr {
    support: Vec<PointId>,
    masses: Vec<f64>,
}

impl TryFrom<MeasureRepr> for FiniteMeasure {
    type Error = Error;

    fn try_from(r: MeasureRepr) -> Result<Self> {
        FiniteMeasure::new(r.support, r.masses)
    }
}

impl FiniteMeasure {
    /// Atoms need not be sorted; zero masses are kept on the support.
    pub fn new(support: Vec<PointId>, masses: Vec<f64>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::domain("support and masses differ in length"));
        }
        if let Some(m) = masses.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
            return Err(Error::domain(format!("mass {m} is not a nonnegative real")));
        }
        let mut index = BTreeMap::new();
        for (i, &p) in support.iter().enumerate() {
            if index.insert(p, i).is_some() {
                return Err(Error::domain(format!("support repeats point {p}")));
            }
        }
        let total = masses.iter().sum();
        Ok(FiniteMeasure {
            support,
            masses,
            total,
            index,
        })
    }

    /// Probability measure spread evenly over `points`.
    pub fn uniform(points: &[PointId]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("uniform measure on an empty set"));
        }
        let w = 1.0 / points.len() as f64;
        Self::new(points.to_vec(), vec![w; points.len()])
    }

    pub fn support(&self) -> &[PointId] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass_of(&self, p: PointId) -> f64 {
        self.index.get(&p).map_or(0.0, |&i| self.masses[i])
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.support.clone(), self.masses.iter().map(|m| m * k).collect())
    }

    /// `ν_A × ν_B` on a product system whose point `(i, j)` is `i·|B| + j`.
    pub fn product(a: &FiniteMeasure, b: &FiniteMeasure, right_len: usize) -> Result<Self> {
        let mut support = Vec::with_capacity(a.support.len() * b.support.len());
        let mut masses = Vec::with_capacity(support.capacity());
        for (&i, &ma) in a.support.iter().zip(&a.masses) {
            for (&j, &mb) in b.support.iter().zip(&b.masses) {
                if j >= right_len {
                    return Err(Error::domain(format!("right factor point {j} out of range")));
                }
                support.push(i * right_len + j);
                masses.push(ma * mb);
            }
        }
        Self::new(support, masses)
    }
}

impl SetMeasure for FiniteMeasure {
    fn total(&self) -> f64 {
        self.total
    }

    fn measure(&self, points: &[PointId]) -> f64 {
        points.iter().map(|&p| self.mass_of(p)).sum()
    }
}

/// A tested set together with the diameter it is charged at: `2r` for a
/// ball of radius `r`, the actual diameter for a raw set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    pub points: Vec<PointId>,
    pub diameter: f64,
    pub label: String,
}

impl TestSet {
    pub fn raw(view: &BowenView<'_, f64>, points: Vec<PointId>) -> Result<Self> {
        let diameter = view.diameter_of(&points)?;
        Ok(TestSet {
            label: format!("set{points:?}"),
            points,
            diameter,
        })
    }

    pub fn ball(view: &BowenView<'_, f64>, center: PointId, radius: f64) -> Result<Self> {
        Ok(TestSet {
            points: view.ball_members(center, radius)?,
            diameter: 2.0 * radius,
            label: format!("ball({center}, {radius})"),
        })
    }
}

/// The sets tested at one `(ε, N)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFamily {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub sets: Vec<TestSet>,
}

/// Balls centered at support points whose diameter `2r` is a realized
/// distance in `(lo, hi]` or `hi` itself.
pub fn ball_family(view: &BowenView<'_, f64>, support: &[PointId], window: Window) -> Result<Vec<TestSet>> {
    let nbrs = view.neighbors_with_distances(window.hi);
    let mut out = Vec::new();
    for &u in support {
        view.system().check_id(u)?;
        let mut diams: Vec<f64> = nbrs[u]
            .iter()
            .map(|&(_, d)| d)
            .filter(|&d| d > window.lo + TOLERANCE && window.admits(d))
            .collect();
        if window.admits(window.hi) {
            diams.push(window.hi);
        }
        diams.sort_by(f64::total_cmp);
        diams.dedup_by(|a, b| (*a - *b).abs() <= TOLERANCE);
        for d in diams {
            out.push(TestSet::ball(view, u, d / 2.0)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckedCell {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub tested: usize,
    pub passed: bool,
}

/// Constants of the mass distribution principle: `ν(supp) ≥ a` and
/// `ν(U) ≤ c·diam(U)^{N s}` for every tested `U` in the Ψ-window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassDistributionCert {
    pub a: f64,
    pub c: f64,
    pub s: f64,
    pub psi: AdmissibleFunction,
    pub checked_cells: Vec<CheckedCell>,
}

impl MassDistributionCert {
    pub fn new(a: f64, c: f64, s: f64, psi: AdmissibleFunction) -> Result<Self> {
        if !(a > 0.0 && c > 0.0 && s >= 0.0) {
            return Err(Error::domain("certificate needs a > 0, c > 0 and s >= 0"));
        }
        Ok(MassDistributionCert {
            a,
            c,
            s,
            psi,
            checked_cells: Vec::new(),
        })
    }

    pub fn is_valid(&self) -> bool {
        !self.checked_cells.is_empty() && self.checked_cells.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub set: Option<TestSet>,
    pub mass: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassDistributionOutcome {
    pub passed: bool,
    /// Certified lower bound on the dimension, `s`, when passed.
    pub lower_bound: Option<f64>,
    /// Every admissible cover by tested sets has `Σ diam^{N s} ≥ a/c`.
    pub cover_floor: f64,
    pub support_mass: f64,
    pub cert: MassDistributionCert,
    pub counterexample: Option<Counterexample>,
}

/// Checks both conditions of the mass distribution principle on every cell.
pub fn mass_distribution_lower_bound<M: SetMeasure>(
    sys: &MetricSystem,
    measure: &M,
    mut cert: MassDistributionCert,
    families: &[CellFamily],
) -> Result<MassDistributionOutcome> {
    if families.is_empty() || families.iter().all(|f| f.sets.is_empty()) {
        return Err(Error::domain("empty test family"));
    }
    cert.checked_cells.clear();
    let support_mass = measure.total();
    let mut counterexample = None;
    if support_mass < cert.a * (1.0 - 1e-12) {
        counterexample = Some(Counterexample {
            epsilon: families[0].epsilon,
            n: families[0].n,
            set: None,
            mass: support_mass,
            bound: cert.a,
        });
    }
    for fam in families {
        let window = psi_window(&cert.psi, fam.epsilon)?;
        BowenScale::new(fam.n)?;
        let mut ok = counterexample.is_none();
        for u in &fam.sets {
            for &p in &u.points {
                sys.check_id(p)?;
            }
            if !(u.diameter > window.lo && u.diameter <= window.hi + TOLERANCE) {
                return Err(Error::domain(format!(
                    "test set {} has diameter {} outside ({}, {}]",
                    u.label, u.diameter, window.lo, window.hi
                )));
            }
            let mass = measure.measure(&u.points);
            let bound = cert.c * u.diameter.powf(fam.n as f64 * cert.s);
            if mass > bound * (1.0 + 1e-12) {
                ok = false;
                if counterexample.is_none() {
                    counterexample = Some(Counterexample {
                        epsilon: fam.epsilon,
                        n: fam.n,
                        set: Some(u.clone()),
                        mass,
                        bound,
                    });
                }
            }
        }
        cert.checked_cells.push(CheckedCell {
            epsilon: fam.epsilon,
            n: fam.n,
            tested: fam.sets.len(),
            passed: ok,
        });
    }
    let passed = counterexample.is_none();
    Ok(MassDistributionOutcome {
        passed,
        lower_bound: passed.then_some(cert.s),
        cover_floor: cert.a / cert.c,
        support_mass,
        cert,
        counterexample,
    })
}

/// Smallest `c` with `ν(B) ≤ c·D^{N s}` for every admissible cover ball
/// (any center, charged diameter `D`) of the window; with it every
/// admissible cover costs at least `ν(supp)/c`.
pub fn growth_constant(view: &BowenView<'_, f64>, measure: &FiniteMeasure, window: Window, s: f64) -> Result<f64> {
    let inst = CoverInstance::build(view, window, Some(measure.support()))?;
    let e = view.n() as f64 * s;
    let mut c: f64 = 0.0;
    for cand in &inst.candidates {
        let mass: f64 = cand.members.iter().map(|&i| measure.mass_of(inst.targets[i as usize])).sum();
        c = c.max(mass / cand.diameter.powf(e));
    }
    Ok(c)
}
