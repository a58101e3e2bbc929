//! Separated and spanning sets, windowed ball covers and cube trees.

mod bits;
mod cubes;
mod mis;
mod setcover;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Ball, BowenScale, BowenView, PointId};
use crate::TOLERANCE;

pub use cubes::{build_cube_tree, Cube, CubeTree};

/// Default branch-and-bound node budget shared by the components of one query.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Exact,
    Greedy,
}

/// How a count or cost was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    /// Valid lower bound on a maximum (separated sets).
    GreedyLower,
    /// Valid upper bound on a minimum (spanning sets, cover costs).
    GreedyUpper,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::GreedyLower => "greedy_lower",
            Method::GreedyUpper => "greedy_upper",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolveMode,
    pub node_budget: u64,
    /// On budget exhaustion, keep the best bound found instead of failing.
    pub degrade: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: SolveMode::Exact,
            node_budget: DEFAULT_NODE_BUDGET,
            degrade: true,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        SolverConfig {
            degrade: false,
            ..Self::default()
        }
    }

    pub fn greedy() -> Self {
        SolverConfig {
            mode: SolveMode::Greedy,
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, nodes: u64) -> Self {
        self.node_budget = nodes;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub scale: BowenScale,
    pub epsilon: f64,
    pub sep_count: Option<usize>,
    pub span_count: Option<usize>,
    pub method: Method,
    pub witness: Vec<PointId>,
}

impl SeparationReport {
    pub fn sep(&self) -> usize {
        self.sep_count.expect("separation report")
    }

    pub fn span(&self) -> usize {
        self.span_count.expect("spanning report")
    }
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("epsilon must be positive, got {epsilon}")))
    }
}

fn budget_error(what: &str, cfg: &SolverConfig) -> Error {
    Error::Capacity {
        what: format!("{what} branch and bound"),
        needed: cfg.node_budget.saturating_add(1),
        budget: cfg.node_budget,
    }
}

/// Largest set with pairwise `d_N ≥ ε`.
pub fn max_separated(view: &BowenView<'_, f64>, epsilon: f64, cfg: &SolverConfig) -> Result<SeparationReport> {
    check_eps(epsilon)?;
    let conflicts = view.neighbors(epsilon, true);
    let (set, method) = match cfg.mode {
        SolveMode::Greedy => (mis::greedy_independent_set(&conflicts), Method::GreedyLower),
        SolveMode::Exact => {
            let mut budget = cfg.node_budget;
            let out = mis::max_independent_set(&conflicts, &mut budget);
            if out.exact {
                (out.set, Method::Exact)
            } else if cfg.degrade {
                (out.set, Method::GreedyLower)
            } else {
                return Err(budget_error("separated set", cfg));
            }
        }
    };
    Ok(SeparationReport {
        scale: view.scale(),
        epsilon,
        sep_count: Some(set.len()),
        span_count: None,
        method,
        witness: set,
    })
}

/// Smallest set whose open `ε`-neighborhoods cover the system.
pub fn min_spanning(view: &BowenView<'_, f64>, epsilon: f64, cfg: &SolverConfig) -> Result<SeparationReport> {
    check_eps(epsilon)?;
    let nbrs = view.neighbors(epsilon, true);
    let sets = nbrs
        .into_iter()
        .enumerate()
        .map(|(u, mut m)| {
            m.push(u as u32);
            m.sort_unstable();
            setcover::CoverSet {
                members: m,
                cost: 1.0,
                radius: epsilon,
                center: u,
            }
        })
        .collect();
    spanning_report(view, epsilon, view.len(), sets, |i| i, cfg)
}

/// Spanning count of the subset `points` with centers taken from it.
pub fn min_spanning_subset(
    view: &BowenView<'_, f64>,
    points: &[PointId],
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<SeparationReport> {
    check_eps(epsilon)?;
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.is_empty() {
        return Err(Error::domain("spanning set of an empty subset"));
    }
    for &p in &pts {
        view.system().check_id(p)?;
    }
    let lim = epsilon - TOLERANCE;
    let sets = pts
        .iter()
        .map(|&u| setcover::CoverSet {
            members: (0..pts.len())
                .filter(|&j| pts[j] == u || view.dist(u, pts[j]) < lim)
                .map(|j| j as u32)
                .collect(),
            cost: 1.0,
            radius: epsilon,
            center: u,
        })
        .collect();
    spanning_report(view, epsilon, pts.len(), sets, |i| pts[i], cfg)
}

fn spanning_report(
    view: &BowenView<'_, f64>,
    epsilon: f64,
    n: usize,
    sets: Vec<setcover::CoverSet>,
    to_point: impl Fn(usize) -> PointId,
    cfg: &SolverConfig,
) -> Result<SeparationReport> {
    let mut budget = cfg.node_budget;
    let out = setcover::solve_set_cover(n, &sets, cfg.mode == SolveMode::Exact, &mut budget);
    let method = if out.exact {
        Method::Exact
    } else if cfg.mode == SolveMode::Greedy || cfg.degrade {
        Method::GreedyUpper
    } else {
        return Err(budget_error("spanning set", cfg));
    };
    Ok(SeparationReport {
        scale: view.scale(),
        epsilon,
        sep_count: None,
        span_count: Some(out.chosen.len()),
        method,
        witness: out.chosen.into_iter().map(to_point).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichOutcome {
    pub passed: bool,
    pub sep_double: usize,
    pub span: usize,
    pub sep: usize,
    pub counterexample: Option<String>,
}

/// `sep(2ε) ≤ span(ε) ≤ sep(ε)` on exact reports of one system.
pub fn sandwich_check(
    sep_double: &SeparationReport,
    span: &SeparationReport,
    sep: &SeparationReport,
) -> Result<SandwichOutcome> {
    for r in [sep_double, span, sep] {
        if r.method != Method::Exact {
            return Err(Error::precondition("greedy reports give incomparable bounds"));
        }
    }
    if sep_double.scale != span.scale || span.scale != sep.scale {
        return Err(Error::precondition("reports use different scales"));
    }
    let eps = span.epsilon;
    if (sep.epsilon - eps).abs() > TOLERANCE || (sep_double.epsilon - 2.0 * eps).abs() > TOLERANCE {
        return Err(Error::precondition("reports must be at epsilon and 2 epsilon"));
    }
    let (a, b, c) = (
        sep_double.sep_count.ok_or_else(|| Error::precondition("missing sep(2 eps)"))?,
        span.span_count.ok_or_else(|| Error::precondition("missing span(eps)"))?,
        sep.sep_count.ok_or_else(|| Error::precondition("missing sep(eps)"))?,
    );
    let counterexample = if a > b {
        Some(format!("sep(2eps) = {a} > span(eps) = {b}"))
    } else if b > c {
        Some(format!("span(eps) = {b} > sep(eps) = {c}"))
    } else {
        None
    };
    Ok(SandwichOutcome {
        passed: counterexample.is_none(),
        sep_double: a,
        span: b,
        sep: c,
        counterexample,
    })
}

/// Admissible ball diameters `D`: `lo < D ≤ hi` (or `D < hi` when open),
/// never below `min_diameter`.
///
/// A ball whose farthest needed member sits at distance `ρ` from the center
/// is charged `max(2ρ, lo, min_diameter)`: with a strict lower end the
/// infimum over admissible radii is approached but not attained, and the
/// cost reported is that infimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub hi_closed: bool,
    pub min_diameter: f64,
}

impl Window {
    /// `(lo, hi]`.
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Window {
            lo,
            hi,
            hi_closed: true,
            min_diameter: 0.0,
        }
    }

    /// `(0, hi)`.
    pub fn below(hi: f64) -> Self {
        Window {
            lo: 0.0,
            hi,
            hi_closed: false,
            min_diameter: 0.0,
        }
    }

    /// Every ball has diameter exactly `d`.
    pub fn fixed(d: f64) -> Self {
        Window {
            lo: d,
            hi: d,
            hi_closed: true,
            min_diameter: d,
        }
    }

    pub fn with_min_diameter(mut self, d: f64) -> Self {
        self.min_diameter = d;
        self
    }

    pub fn floor(&self) -> f64 {
        self.lo.max(self.min_diameter)
    }

    pub fn admits(&self, d: f64) -> bool {
        if self.hi_closed {
            d <= self.hi + TOLERANCE
        } else {
            d < self.hi - TOLERANCE
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lo >= 0.0
            && self.min_diameter >= 0.0
            && self.hi.is_finite()
            && (self.lo < self.hi || (self.hi_closed && self.lo == self.hi && self.min_diameter == self.hi));
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("bad window ({}, {})", self.lo, self.hi)))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCover {
    pub balls: Vec<Ball>,
    /// Charged diameter of each ball, `max(2r, window floor)`.
    pub diameters: Vec<f64>,
    pub window: Window,
    /// Power applied to each diameter (`N·s` for dynamical costs).
    pub exponent: f64,
    pub cost: f64,
    pub method: Method,
}

impl BallCover {
    /// Cost of the same balls under another exponent.
    pub fn cost_at(&self, exponent: f64) -> f64 {
        self.diameters.iter().map(|d| d.powf(exponent)).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub center: PointId,
    /// Distance from the center to the farthest target member.
    pub reach: f64,
    pub diameter: f64,
    /// Indices into the instance targets.
    pub members: Vec<u32>,
}

/// All admissible balls for covering `targets` with centers from the system.
#[derive(Clone, Debug)]
pub struct CoverInstance {
    pub scale: BowenScale,
    pub window: Window,
    pub targets: Vec<PointId>,
    pub candidates: Vec<Candidate>,
}

impl CoverInstance {
    /// Targets default to every point; centers always range over every point.
    pub fn build(view: &BowenView<'_, f64>, window: Window, targets: Option<&[PointId]>) -> Result<Self> {
        window.validate()?;
        let n = view.len();
        let targets: Vec<PointId> = match targets {
            Some(t) => {
                let mut t = t.to_vec();
                t.sort_unstable();
                t.dedup();
                for &p in &t {
                    view.system().check_id(p)?;
                }
                t
            }
            None => (0..n).collect(),
        };
        let mut local = vec![u32::MAX; n];
        for (i, &p) in targets.iter().enumerate() {
            local[p] = i as u32;
        }
        let floor = window.floor();
        if !targets.is_empty() && !window.admits(floor) {
            return Err(Error::Infeasible {
                point: targets[0],
                reason: format!("no diameter above {floor} fits under {}", window.hi),
            });
        }
        let reach = window.hi / 2.0;
        let nbrs = view.neighbors_with_distances(reach);
        let mut candidates = Vec::new();
        for (c, list) in nbrs.into_iter().enumerate() {
            let mut ring: Vec<(u32, f64)> = Vec::new();
            if local[c] != u32::MAX {
                ring.push((local[c], 0.0));
            }
            ring.extend(list.into_iter().filter(|&(v, _)| local[v as usize] != u32::MAX).map(|(v, d)| (local[v as usize], d)));
            let mut members: Vec<u32> = Vec::new();
            let mut i = 0;
            while i < ring.len() {
                let rho = ring[i].1;
                while i < ring.len() && ring[i].1 <= rho + TOLERANCE {
                    members.push(ring[i].0);
                    i += 1;
                }
                let diameter = (2.0 * rho).max(floor);
                if !window.admits(diameter) {
                    break;
                }
                let mut m = members.clone();
                m.sort_unstable();
                candidates.push(Candidate {
                    center: c,
                    reach: rho,
                    diameter,
                    members: m,
                });
            }
        }
        let mut hit = vec![false; targets.len()];
        for cand in &candidates {
            for &m in &cand.members {
                hit[m as usize] = true;
            }
        }
        if let Some(i) = hit.iter().position(|h| !h) {
            return Err(Error::Infeasible {
                point: targets[i],
                reason: format!("window ({}, {}) admits no ball containing it", window.lo, window.hi),
            });
        }
        Ok(CoverInstance {
            scale: view.scale(),
            window,
            targets,
            candidates,
        })
    }

    /// Cheapest cover with each ball charged `diameter^exponent`.
    pub fn solve(&self, exponent: f64, cfg: &SolverConfig) -> Result<BallCover> {
        if !(exponent >= 0.0) {
            return Err(Error::domain(format!("cost exponent must be nonnegative, got {exponent}")));
        }
        let sets: Vec<setcover::CoverSet> = self
            .candidates
            .iter()
            .map(|c| setcover::CoverSet {
                members: c.members.clone(),
                cost: c.diameter.powf(exponent),
                radius: c.reach,
                center: c.center,
            })
            .collect();
        let mut budget = cfg.node_budget;
        let exact = cfg.mode == SolveMode::Exact;
        let out = setcover::solve_set_cover(self.targets.len(), &sets, exact, &mut budget);
        let method = if out.exact {
            Method::Exact
        } else if !exact || cfg.degrade {
            Method::GreedyUpper
        } else {
            return Err(budget_error("ball cover", cfg));
        };
        let mut balls = Vec::with_capacity(out.chosen.len());
        let mut diameters = Vec::with_capacity(out.chosen.len());
        for &i in &out.chosen {
            let c = &self.candidates[i];
            balls.push(Ball::new(c.center, c.diameter / 2.0, self.scale)?);
            diameters.push(c.diameter);
        }
        Ok(BallCover {
            balls,
            diameters,
            window: self.window,
            exponent,
            cost: out.cost,
            method,
        })
    }
}

/// Minimum of `Σ D_i^{N·s}` over admissible ball covers of the system.
pub fn optimal_cover_cost(view: &BowenView<'_, f64>, window: Window, s: f64, cfg: &SolverConfig) -> Result<BallCover> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!("exponent s must be nonnegative, got {s}")));
    }
    CoverInstance::build(view, window, None)?.solve(view.n() as f64 * s, cfg)
}

/// Upper approximation of `H^t_ε`: optimal `Σ D_i^t` over covers by balls
/// of diameter `< ε` (and at least `min_diameter`).
pub fn hausdorff_content(
    view: &BowenView<'_, f64>,
    t: f64,
    epsilon: f64,
    min_diameter: f64,
    cfg: &SolverConfig,
) -> Result<(f64, BallCover)> {
    check_eps(epsilon)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("exponent t must be nonnegative, got {t}")));
    }
    let window = Window::below(epsilon).with_min_diameter(min_diameter);
    let cover = CoverInstance::build(view, window, None)?.solve(t, cfg)?;
    Ok((cover.cost, cover))
}

/// One CSV line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system_label: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub s: Option<f64>,
    pub statistic_kind: String,
    pub value: f64,
    pub method: String,
}

impl ReportRow {
    pub fn from_separation(label: &str, r: &SeparationReport) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        let base = |kind: &str, v: usize| ReportRow {
            system_label: label.to_string(),
            n: r.scale.get(),
            epsilon: r.epsilon,
            window_lo: None,
            window_hi: None,
            s: None,
            statistic_kind: kind.to_string(),
            value: v as f64,
            method: r.method.as_str().to_string(),
        };
        if let Some(v) = r.sep_count {
            rows.push(base("sep", v));
        }
        if let Some(v) = r.span_count {
            rows.push(base("span", v));
        }
        rows
    }

    pub fn from_cover(label: &str, kind: &str, epsilon: f64, s: f64, c: &BallCover) -> ReportRow {
        let n = c.balls.first().map_or(1, |b| b.scale.get());
        ReportRow {
            system_label: label.to_string(),
            n,
            epsilon,
            window_lo: Some(c.window.lo),
            window_hi: Some(c.window.hi),
            s: Some(s),
            statistic_kind: kind.to_string(),
            value: c.cost,
            method: c.method.as_str().to_string(),
        }
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(())
}
