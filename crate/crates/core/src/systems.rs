//! Builders for shift spaces, self-similar sets, lines and products.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{BowenScale, PointId, ProductMode};
use crate::MetricSystem;

pub const DEFAULT_POINT_BUDGET: usize = 20_000;

/// What `sigma` does with the last materialized coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftBoundary {
    /// The last coordinate is repeated.
    #[default]
    Hold,
    /// The vacated coordinate becomes 0 (which must be a letter).
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub alphabet: Vec<f64>,
    pub depth: usize,
    #[serde(default)]
    pub boundary: ShiftBoundary,
}

impl ShiftSpec {
    pub fn new(mut alphabet: Vec<f64>, depth: usize) -> Result<Self> {
        alphabet.sort_by(f64::total_cmp);
        let spec = ShiftSpec {
            alphabet,
            depth,
            boundary: ShiftBoundary::Hold,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_boundary(mut self, boundary: ShiftBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::domain("shift depth must be at least 1"));
        }
        if self.alphabet.is_empty() {
            return Err(Error::domain("empty alphabet"));
        }
        if self.alphabet.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::domain("alphabet letters must lie in [0, 1]"));
        }
        if self.alphabet.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("alphabet must be sorted and pairwise distinct"));
        }
        Ok(())
    }

    /// `sum_{n > D} 2^{-n} * spread = 2^{-D} * spread`.
    pub fn truncation_error(&self) -> f64 {
        let spread = self.alphabet[self.alphabet.len() - 1] - self.alphabet[0];
        spread * 0.5f64.powi(self.depth as i32)
    }
}

/// `{0} u {1/n : 1 <= n <= m_max}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KAlphabetSpec {
    pub m_max: usize,
}

impl KAlphabetSpec {
    pub fn letters(&self) -> Vec<f64> {
        let mut a: Vec<f64> = std::iter::once(0.0)
            .chain((1..=self.m_max).map(|n| 1.0 / n as f64))
            .collect();
        a.sort_by(f64::total_cmp);
        a
    }
}

fn capacity(what: &str, needed: u128, budget: usize) -> Error {
    Error::Capacity {
        what: what.to_string(),
        needed: needed.min(u64::MAX as u128) as u64,
        budget: budget as u64,
    }
}

fn word_count(letters: usize, depth: usize, budget: usize, what: &str) -> Result<usize> {
    let count = (letters as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if count > budget as u128 {
        return Err(capacity(what, count, budget));
    }
    Ok(count as usize)
}

/// All depth-`D` words over the alphabet, first coordinate most significant,
/// with `d(u, v) = sum_n 2^{-n} |u_n - v_n|` and the coordinate shift.
pub fn build_shift(label: impl Into<String>, spec: &ShiftSpec, budget: usize) -> Result<MetricSystem> {
    spec.validate()?;
    let (k, depth) = (spec.alphabet.len(), spec.depth);
    let count = word_count(k, depth, budget, "shift model points")?;
    let zero_idx = spec.alphabet.iter().position(|&a| a == 0.0);
    if spec.boundary == ShiftBoundary::Zero && zero_idx.is_none() {
        return Err(Error::domain("zero boundary needs 0 in the alphabet"));
    }
    let mut coords = Vec::with_capacity(count * depth);
    let mut word = vec![0usize; depth];
    for idx in 0..count {
        let mut r = idx;
        for slot in word.iter_mut().rev() {
            *slot = r % k;
            r /= k;
        }
        coords.extend(word.iter().map(|&i| spec.alphabet[i]));
    }
    let head = count / k;
    let dynamics = (0..count)
        .map(|idx| {
            let last = match spec.boundary {
                ShiftBoundary::Hold => idx % k,
                ShiftBoundary::Zero => zero_idx.unwrap_or(0),
            };
            (idx % head) * k + last
        })
        .collect();
    let weights = (1..=depth).map(|n| 0.5f64.powi(n as i32)).collect();
    Ok(
        MetricSystem::from_coordinates(label, depth, coords, weights, dynamics)?
            .with_truncation_error(spec.truncation_error()),
    )
}

/// Grid model of `I^N`: letters `{0, 1/(g-1), ..., 1}`.
pub fn build_full_shift(grid_size: usize, depth: usize, budget: usize) -> Result<MetricSystem> {
    if grid_size < 2 {
        return Err(Error::domain("grid_size must be at least 2"));
    }
    let alphabet = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    build_shift(
        format!("full_shift(g={grid_size},D={depth})"),
        &ShiftSpec::new(alphabet, depth)?,
        budget,
    )
}

/// Truncation of `K^N` with `K = {0} u {1/n}`.
pub fn build_k_shift(k: KAlphabetSpec, depth: usize, budget: usize) -> Result<MetricSystem> {
    if k.m_max == 0 {
        return Err(Error::domain("m_max must be at least 1"));
    }
    build_shift(
        format!("k_shift(m={},D={depth})", k.m_max),
        &ShiftSpec::new(k.letters(), depth)?,
        budget,
    )
}

/// Finite driving system `(K, Gamma)` and the affine maps `S_k(u) = c u + a(k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarSpec {
    pub contraction: f64,
    /// `a(k)` truncated to `depth` coordinates, one row per letter of `K`.
    pub drivers: Vec<Vec<f64>>,
    /// `Gamma` on the letters of `K`; identity when absent.
    #[serde(default)]
    pub driver_map: Option<Vec<usize>>,
    pub depth: usize,
    pub iteration_depth: usize,
}

impl SelfSimilarSpec {
    fn driver_map(&self) -> Vec<usize> {
        self.driver_map
            .clone()
            .unwrap_or_else(|| (0..self.drivers.len()).collect())
    }

    /// `sigma(a(k))` agrees with `a(Gamma k)` on the shifted coordinates.
    pub fn check_equivariance(&self) -> Result<()> {
        let map = self.driver_map();
        for (k, a) in self.drivers.iter().enumerate() {
            let b = &self.drivers[map[k]];
            for j in 0..self.depth.saturating_sub(1) {
                if (a[j + 1] - b[j]).abs() > crate::TOLERANCE {
                    return Err(Error::domain(format!(
                        "driver map is not equivariant at letter {k}, coordinate {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn coord_key(coords: &[f64]) -> Vec<i64> {
    coords.iter().map(|x| (x * 1e9).round() as i64).collect()
}

/// Points `S_{k_1} o ... o S_{k_j}(0)` over all words of length
/// `iteration_depth`, deduplicated, with the coordinate shift as dynamics.
pub fn build_self_similar(spec: &SelfSimilarSpec, budget: usize) -> Result<MetricSystem> {
    if !(spec.contraction > 0.0 && spec.contraction < 1.0) {
        return Err(Error::domain("contraction must lie in (0, 1)"));
    }
    if spec.iteration_depth == 0 || spec.depth == 0 {
        return Err(Error::domain("depth and iteration_depth must be at least 1"));
    }
    if spec.drivers.is_empty() {
        return Err(Error::domain("at least one driver is required"));
    }
    if spec.drivers.iter().any(|a| a.len() != spec.depth) {
        return Err(Error::domain("every driver needs exactly `depth` coordinates"));
    }
    let map = spec.driver_map();
    if map.len() != spec.drivers.len() || map.iter().any(|&k| k >= spec.drivers.len()) {
        return Err(Error::domain("driver_map must be a total map on the drivers"));
    }
    spec.check_equivariance()?;
    let k = spec.drivers.len();
    let words = word_count(k, spec.iteration_depth, budget.saturating_mul(64), "self-similar words")?;
    let d = spec.depth;
    let mut unique: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
    let mut word = vec![0usize; spec.iteration_depth];
    for idx in 0..words {
        let mut r = idx;
        for slot in word.iter_mut().rev() {
            *slot = r % k;
            r /= k;
        }
        // innermost map is applied first: S_{k_1}(S_{k_2}(...S_{k_j}(0)))
        let mut x = vec![0.0; d];
        for &letter in word.iter().rev() {
            for (xi, ai) in x.iter_mut().zip(&spec.drivers[letter]) {
                *xi = spec.contraction * *xi + ai;
            }
        }
        unique.entry(coord_key(&x)).or_insert(x);
        if unique.len() > budget {
            return Err(capacity("self-similar points", unique.len() as u128, budget));
        }
    }
    let index: BTreeMap<Vec<i64>, usize> = unique.keys().cloned().zip(0..).collect();
    let points: Vec<Vec<f64>> = unique.into_values().collect();
    let mut dynamics = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let mut shifted: Vec<f64> = p[1..].to_vec();
        shifted.push(p[d - 1]);
        match index.get(&coord_key(&shifted)) {
            Some(&j) => dynamics.push(j),
            None => {
                return Err(Error::domain(format!(
                    "shift of point {i} leaves the attractor approximation"
                )))
            }
        }
    }
    let max_abs = spec
        .drivers
        .iter()
        .flatten()
        .fold(0.0f64, |m, a| m.max(a.abs()));
    let weights = (1..=d).map(|n| 0.5f64.powi(n as i32)).collect();
    let coords = points.into_iter().flatten().collect();
    let spread = 2.0 * max_abs / (1.0 - spec.contraction);
    Ok(MetricSystem::from_coordinates(
        format!("self_similar(c={},D={d},k={})", spec.contraction, spec.iteration_depth),
        d,
        coords,
        weights,
        dynamics,
    )?
    .with_truncation_error(spread * 0.5f64.powi(d as i32)))
}

/// Points on the real line with identity dynamics.
pub fn build_line(label: impl Into<String>, points: &[f64]) -> Result<MetricSystem> {
    MetricSystem::from_coordinates(label, 1, points.to_vec(), vec![1.0], (0..points.len()).collect())
}

/// `{0, 1/n, ..., (n-1)/n}` with identity dynamics.
pub fn build_dyadic_line(n: usize) -> Result<MetricSystem> {
    if n == 0 {
        return Err(Error::domain("line needs at least one point"));
    }
    let pts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    build_line(format!("line{n}"), &pts)
}

/// Two points at distance `d`, both fixed by the dynamics.
pub fn build_two_point(d: f64) -> Result<MetricSystem> {
    if !(d > 0.0) {
        return Err(Error::domain("two-point distance must be positive"));
    }
    build_line("two_point", &[0.0, d])
}

#[derive(Clone, Debug)]
pub struct ProductSpec {
    pub left: MetricSystem,
    pub right: MetricSystem,
    pub metric_mode: ProductMode,
}

pub fn build_product(spec: ProductSpec, budget: usize) -> Result<MetricSystem> {
    let count = spec.left.len() as u128 * spec.right.len() as u128;
    if count > budget as u128 {
        return Err(capacity("product points", count, budget));
    }
    Ok(MetricSystem::product(spec.left, spec.right, spec.metric_mode))
}

/// Witness for one `(u, r, N)` sample: the farthest point of `B(u, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusWitness {
    pub point: PointId,
    pub radius: f64,
    pub n: usize,
    pub farthest: Option<PointId>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerfectnessCert {
    pub passed: bool,
    /// Largest grid value `C` (step 1/1000) with every annulus nonempty;
    /// 0 when some annulus is empty for every `C`.
    pub c_est: f64,
    pub min_ratio: f64,
    /// Worst sample per `(N, r)`.
    pub witnesses: Vec<AnnulusWitness>,
    pub failure: Option<AnnulusWitness>,
}

/// Searches the largest `C` such that `B(u, r) \ B(u, C r)` is nonempty for
/// every sampled `u`, `r` and `N`.
pub fn uniformly_perfect_check(
    sys: &MetricSystem,
    scales: &[BowenScale],
    radii: &[f64],
) -> Result<PerfectnessCert> {
    if scales.is_empty() {
        return Err(Error::domain("uniformly_perfect_check needs at least one scale"));
    }
    if radii.is_empty() {
        return Err(Error::domain("uniformly_perfect_check needs at least one radius"));
    }
    let tol = crate::TOLERANCE;
    let max_diam = scales
        .iter()
        .map(|&s| sys.diameter(s))
        .fold(0.0f64, f64::max);
    if max_diam <= tol {
        // a single point (or a collapsed model): every annulus is empty
        let w = AnnulusWitness {
            point: 0,
            radius: radii[0],
            n: scales[0].get(),
            farthest: None,
            ratio: 0.0,
        };
        return Ok(PerfectnessCert {
            passed: false,
            c_est: 0.0,
            min_ratio: 0.0,
            witnesses: vec![w.clone()],
            failure: Some(w),
        });
    }
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0) || r > max_diam + tol) {
        return Err(Error::domain(format!(
            "radius {r} must be positive and at most the diameter {max_diam}"
        )));
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let mut witnesses = Vec::new();
    let mut worst: Option<AnnulusWitness> = None;
    for &scale in scales {
        let view = sys.view(scale);
        let nbrs = view.neighbors_with_distances(r_max);
        for &r in radii {
            let mut col: Option<AnnulusWitness> = None;
            for (u, list) in nbrs.iter().enumerate() {
                let far = list.iter().rev().find(|(_, d)| *d <= r + tol);
                let (farthest, ratio) = match far {
                    Some(&(v, d)) if d > tol => (Some(v as usize), (d / r).min(1.0)),
                    _ => (None, 0.0),
                };
                if col.as_ref().is_none_or(|w| ratio < w.ratio) {
                    col = Some(AnnulusWitness {
                        point: u,
                        radius: r,
                        n: scale.get(),
                        farthest,
                        ratio,
                    });
                }
            }
            let col = col.expect("system is nonempty");
            if worst.as_ref().is_none_or(|w| col.ratio < w.ratio) {
                worst = Some(col.clone());
            }
            witnesses.push(col);
        }
    }
    let worst = worst.expect("at least one sample");
    let min_ratio = worst.ratio;
    let passed = min_ratio > 0.0;
    let c_est = if !passed {
        0.0
    } else {
        let k = (min_ratio * 1000.0).ceil() as i64 - 1;
        if k >= 1 {
            (k.min(999)) as f64 / 1000.0
        } else {
            min_ratio / 2.0
        }
    };
    Ok(PerfectnessCert {
        passed,
        c_est,
        min_ratio,
        witnesses,
        failure: if passed { None } else { Some(worst) },
    })
}

/// JSON system description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(flatten)]
    pub kind: SystemKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    Singleton,
    TwoPoint {
        #[serde(default = "one")]
        distance: f64,
    },
    Line {
        points: Vec<f64>,
    },
    DyadicLine {
        size: usize,
    },
    Matrix {
        distances: Vec<Vec<f64>>,
        #[serde(default)]
        dynamics: Option<Vec<usize>>,
    },
    Shift {
        alphabet: Vec<f64>,
        depth: usize,
        #[serde(default)]
        boundary: ShiftBoundary,
    },
    FullShift {
        grid_size: usize,
        depth: usize,
    },
    KShift {
        m_max: usize,
        depth: usize,
    },
    SelfSimilar(SelfSimilarSpec),
    Product {
        product: ProductJson,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductJson {
    pub left: Box<SystemSpec>,
    pub right: Box<SystemSpec>,
    pub mode: ProductMode,
}

impl SystemSpec {
    pub fn build(&self, budget: usize) -> Result<MetricSystem> {
        let sys = match &self.kind {
            SystemKind::Singleton => MetricSystem::singleton("singleton"),
            SystemKind::TwoPoint { distance } => build_two_point(*distance)?,
            SystemKind::Line { points } => build_line(format!("line{}", points.len()), points)?,
            SystemKind::DyadicLine { size } => build_dyadic_line(*size)?,
            SystemKind::Matrix {
                distances,
                dynamics,
            } => {
                let n = distances.len();
                if distances.iter().any(|row| row.len() != n) {
                    return Err(Error::Config("distance matrix must be square".into()));
                }
                let dyn_map = dynamics.clone().unwrap_or_else(|| (0..n).collect());
                MetricSystem::from_matrix("matrix", n, distances.concat(), dyn_map)?
            }
            SystemKind::Shift {
                alphabet,
                depth,
                boundary,
            } => {
                let spec = ShiftSpec::new(alphabet.clone(), *depth)?.with_boundary(*boundary);
                build_shift(format!("shift(|A|={},D={depth})", alphabet.len()), &spec, budget)?
            }
            SystemKind::FullShift { grid_size, depth } => build_full_shift(*grid_size, *depth, budget)?,
            SystemKind::KShift { m_max, depth } => {
                build_k_shift(KAlphabetSpec { m_max: *m_max }, *depth, budget)?
            }
            SystemKind::SelfSimilar(spec) => build_self_similar(spec, budget)?,
            SystemKind::Product { product } => {
                let left = product.left.build(budget)?;
                let right = product.right.build(budget)?;
                build_product(
                    ProductSpec {
                        left,
                        right,
                        metric_mode: product.mode,
                    },
                    budget,
                )?
            }
        };
        if sys.len() > budget {
            return Err(capacity("system points", sys.len() as u128, budget));
        }
        Ok(match &self.label {
            Some(l) => sys.with_label(l.clone()),
            None => sys,
        })
    }
}
