//! Point models, Bowen metrics, balls and diameters.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index into the point table of a [`MetricSystem`].
pub type PointId = usize;

/// Number of iterates `N` the Bowen metric looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct BowenScale(usize);

impl BowenScale {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("Bowen scale N must be at least 1"));
        }
        Ok(BowenScale(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for BowenScale {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        BowenScale::new(n)
    }
}

impl From<BowenScale> for usize {
    fn from(s: BowenScale) -> usize {
        s.0
    }
}

/// Closed Bowen ball `{v : d_N(center, v) <= radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: PointId,
    pub radius: f64,
    pub scale: BowenScale,
}

impl Ball {
    pub fn new(center: PointId, radius: f64, scale: BowenScale) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::domain(format!("ball radius must be >= 0, got {radius}")));
        }
        Ok(Ball {
            center,
            radius,
            scale,
        })
    }
}

/// How the two factor metrics of a product are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    /// `d = max(d_left, d_right) / 2`
    HalfMax,
    /// `d = max(d_left, d_right)`
    Max,
}

impl ProductMode {
    pub fn combine<T: Scalar>(self, a: T, b: T) -> T {
        let m = a.max(b);
        match self {
            ProductMode::HalfMax => m * T::from_f64_lossy(0.5),
            ProductMode::Max => m,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Geometry<T: Scalar> {
    /// Points are coordinate vectors, `d(u, v) = sum_k w_k |u_k - v_k|`.
    WeightedL1 {
        dim: usize,
        coords: Vec<T>,
        weights: Vec<T>,
    },
    /// Explicit row-major distance table.
    Matrix { dist: Vec<T> },
    /// Point `i * |right| + j` is the pair `(i, j)`.
    Product {
        left: Box<MetricSystem<T>>,
        right: Box<MetricSystem<T>>,
        mode: ProductMode,
    },
}

/// Finite model of `(Omega, Gamma, d)`. Immutable after construction.
#[derive(Clone, Debug)]
pub struct MetricSystem<T: Scalar> {
    label: String,
    len: usize,
    geometry: Geometry<T>,
    dynamics: Vec<PointId>,
    truncation_error: T,
}

fn check_dynamics(len: usize, dynamics: &[PointId]) -> Result<()> {
    if dynamics.len() != len {
        return Err(Error::domain(format!(
            "dynamics has {} entries for {} points",
            dynamics.len(),
            len
        )));
    }
    if let Some((u, &img)) = dynamics.iter().enumerate().find(|(_, &v)| v >= len) {
        return Err(Error::domain(format!(
            "dynamics is not total: point {u} maps to {img}"
        )));
    }
    Ok(())
}

impl<T: Scalar> MetricSystem<T> {
    pub fn from_coordinates(
        label: impl Into<String>,
        dim: usize,
        coords: Vec<T>,
        weights: Vec<T>,
        dynamics: Vec<PointId>,
    ) -> Result<Self> {
        if weights.len() != dim {
            return Err(Error::domain(format!(
                "{} weights for dimension {dim}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::domain("metric weights must be nonnegative"));
        }
        let len = if dim == 0 {
            dynamics.len()
        } else {
            if !coords.len().is_multiple_of(dim) {
                return Err(Error::domain("coordinate table is ragged"));
            }
            coords.len() / dim
        };
        if len == 0 {
            return Err(Error::domain("a metric system needs at least one point"));
        }
        check_dynamics(len, &dynamics)?;
        Ok(MetricSystem {
            label: label.into(),
            len,
            geometry: Geometry::WeightedL1 {
                dim,
                coords,
                weights,
            },
            dynamics,
            truncation_error: T::zero(),
        })
    }

    /// Builds a system from an explicit distance table. Metric axioms are not
    /// checked here; call [`MetricSystem::validate_metric`].
    pub fn from_matrix(
        label: impl Into<String>,
        len: usize,
        dist: Vec<T>,
        dynamics: Vec<PointId>,
    ) -> Result<Self> {
        if len == 0 {
            return Err(Error::domain("a metric system needs at least one point"));
        }
        if dist.len() != len * len {
            return Err(Error::domain(format!(
                "distance table has {} entries, expected {}",
                dist.len(),
                len * len
            )));
        }
        check_dynamics(len, &dynamics)?;
        Ok(MetricSystem {
            label: label.into(),
            len,
            geometry: Geometry::Matrix { dist },
            dynamics,
            truncation_error: T::zero(),
        })
    }

    pub fn singleton(label: impl Into<String>) -> Self {
        MetricSystem {
            label: label.into(),
            len: 1,
            geometry: Geometry::WeightedL1 {
                dim: 0,
                coords: Vec::new(),
                weights: Vec::new(),
            },
            dynamics: vec![0],
            truncation_error: T::zero(),
        }
    }

    /// Product system with componentwise dynamics.
    pub fn product(left: MetricSystem<T>, right: MetricSystem<T>, mode: ProductMode) -> Self {
        let (nl, nr) = (left.len, right.len);
        let dynamics = (0..nl * nr)
            .map(|p| left.dynamics[p / nr] * nr + right.dynamics[p % nr])
            .collect();
        let mode_name = match mode {
            ProductMode::HalfMax => "half_max",
            ProductMode::Max => "max",
        };
        let truncation_error = mode.combine(left.truncation_error, right.truncation_error);
        MetricSystem {
            label: format!("({})x({})[{}]", left.label, right.label, mode_name),
            len: nl * nr,
            geometry: Geometry::Product {
                left: Box::new(left),
                right: Box::new(right),
                mode,
            },
            dynamics,
            truncation_error,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_truncation_error(mut self, err: T) -> Self {
        self.truncation_error = err;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn geometry(&self) -> &Geometry<T> {
        &self.geometry
    }

    pub fn dynamics(&self) -> &[PointId] {
        &self.dynamics
    }

    pub fn truncation_error(&self) -> T {
        self.truncation_error
    }

    pub fn check_id(&self, u: PointId) -> Result<()> {
        if u >= self.len {
            return Err(Error::InvalidPoint {
                id: u,
                len: self.len,
            });
        }
        Ok(())
    }

    pub fn image(&self, u: PointId) -> Result<PointId> {
        self.check_id(u)?;
        Ok(self.dynamics[u])
    }

    /// `Gamma^i(u)`.
    pub fn iterate(&self, u: PointId, i: usize) -> Result<PointId> {
        self.check_id(u)?;
        Ok((0..i).fold(u, |p, _| self.dynamics[p]))
    }

    /// Coordinates of `u` for coordinate-backed systems.
    pub fn coords(&self, u: PointId) -> Option<&[T]> {
        match &self.geometry {
            Geometry::WeightedL1 { dim, coords, .. } if u < self.len => {
                Some(&coords[u * dim..(u + 1) * dim])
            }
            _ => None,
        }
    }

    /// Factor indices of a product point.
    pub fn factors(&self, p: PointId) -> Option<(PointId, PointId)> {
        match &self.geometry {
            Geometry::Product { right, .. } => Some((p / right.len, p % right.len)),
            _ => None,
        }
    }

    pub(crate) fn base(&self, u: PointId, v: PointId) -> T {
        if u == v {
            return T::zero();
        }
        match &self.geometry {
            Geometry::WeightedL1 {
                dim,
                coords,
                weights,
            } => {
                let a = &coords[u * dim..(u + 1) * dim];
                let b = &coords[v * dim..(v + 1) * dim];
                a.iter()
                    .zip(b)
                    .zip(weights)
                    .fold(T::zero(), |acc, ((x, y), w)| acc + *w * (*x - *y).abs())
            }
            Geometry::Matrix { dist } => dist[u * self.len + v],
            Geometry::Product { left, right, mode } => {
                let nr = right.len;
                mode.combine(left.base(u / nr, v / nr), right.base(u % nr, v % nr))
            }
        }
    }

    pub fn base_distance(&self, u: PointId, v: PointId) -> Result<T> {
        self.check_id(u)?;
        self.check_id(v)?;
        Ok(self.base(u, v))
    }

    pub(crate) fn bowen(&self, n: usize, u: PointId, v: PointId) -> T {
        let (mut a, mut b) = (u, v);
        let mut best = T::zero();
        for _ in 0..n {
            best = best.max(self.base(a, b));
            a = self.dynamics[a];
            b = self.dynamics[b];
        }
        best
    }

    /// `d_N(u, v) = max_{0 <= i < N} d(Gamma^i u, Gamma^i v)`.
    pub fn bowen_distance(&self, scale: BowenScale, u: PointId, v: PointId) -> Result<T> {
        self.check_id(u)?;
        self.check_id(v)?;
        Ok(self.bowen(scale.get(), u, v))
    }

    pub fn view(&self, scale: BowenScale) -> BowenView<'_, T> {
        BowenView::new(self, scale)
    }

    /// Checks identity, symmetry, nonnegativity and the triangle inequality of
    /// the base metric: exhaustively up to 200 points, on sampled triples above.
    pub fn validate_metric(&self, seed: u64) -> Result<()> {
        let tol = T::tolerance();
        let n = self.len;
        let check_pair = |u: usize, v: usize| -> Result<()> {
            let (a, b) = (self.raw(u, v), self.raw(v, u));
            if !(a >= T::zero()) {
                return Err(Error::Metric(format!("d({u},{v}) = {a} is negative or NaN")));
            }
            if (a - b).abs() > tol {
                return Err(Error::Metric(format!("d({u},{v}) = {a} but d({v},{u}) = {b}")));
            }
            if u == v && a > tol {
                return Err(Error::Metric(format!("d({u},{u}) = {a} is not zero")));
            }
            Ok(())
        };
        let check_triple = |u: usize, v: usize, w: usize| -> Result<()> {
            let lhs = self.raw(u, w);
            let rhs = self.raw(u, v) + self.raw(v, w);
            if lhs > rhs + tol {
                return Err(Error::Metric(format!(
                    "triangle inequality fails: d({u},{w}) = {lhs} > d({u},{v}) + d({v},{w}) = {rhs}"
                )));
            }
            Ok(())
        };
        if n <= 200 {
            for u in 0..n {
                for v in 0..n {
                    check_pair(u, v)?;
                }
            }
            for u in 0..n {
                for v in 0..n {
                    for w in 0..n {
                        check_triple(u, v, w)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20_000 {
                let (u, v, w) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                check_pair(u, v)?;
                check_triple(u, v, w)?;
            }
        }
        Ok(())
    }

    // distance without the u == v shortcut, so a corrupted table is visible
    fn raw(&self, u: PointId, v: PointId) -> T {
        match &self.geometry {
            Geometry::Matrix { dist } => dist[u * self.len + v],
            _ => self.base(u, v),
        }
    }

    /// Largest pairwise `d_N` distance.
    pub fn diameter(&self, scale: BowenScale) -> T {
        self.view(scale).diameter()
    }
}

/// A system seen through `d_N` for one fixed `N`, with the orbit table
/// `Gamma^i(u)` for `i < N` materialized up front.
#[derive(Clone, Debug)]
pub struct BowenView<'a, T: Scalar> {
    sys: &'a MetricSystem<T>,
    n: usize,
    orbit: Vec<PointId>,
}

impl<'a, T: Scalar> BowenView<'a, T> {
    pub fn new(sys: &'a MetricSystem<T>, scale: BowenScale) -> Self {
        let n = scale.get();
        let mut orbit = Vec::with_capacity(sys.len * n);
        for u in 0..sys.len {
            let mut p = u;
            for _ in 0..n {
                orbit.push(p);
                p = sys.dynamics[p];
            }
        }
        BowenView { sys, n, orbit }
    }

    pub fn system(&self) -> &'a MetricSystem<T> {
        self.sys
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> BowenScale {
        BowenScale(self.n)
    }

    pub fn len(&self) -> usize {
        self.sys.len
    }

    pub fn is_empty(&self) -> bool {
        self.sys.len == 0
    }

    #[inline]
    pub fn dist(&self, u: PointId, v: PointId) -> T {
        if u == v {
            return T::zero();
        }
        let (a, b) = (&self.orbit[u * self.n..], &self.orbit[v * self.n..]);
        let mut best = T::zero();
        for i in 0..self.n {
            best = best.max(self.sys.base(a[i], b[i]));
        }
        best
    }

    /// `B_{d_N}(center, radius)` as a sorted list; always contains `center`.
    pub fn ball_members(&self, center: PointId, radius: T) -> Result<Vec<PointId>> {
        self.sys.check_id(center)?;
        let lim = radius + T::tolerance();
        Ok((0..self.len())
            .filter(|&v| v == center || self.dist(center, v) <= lim)
            .collect())
    }

    pub fn diameter_of(&self, pts: &[PointId]) -> Result<T> {
        if pts.is_empty() {
            return Err(Error::domain("diameter of an empty set"));
        }
        for &p in pts {
            self.sys.check_id(p)?;
        }
        let mut d = T::zero();
        for (i, &u) in pts.iter().enumerate() {
            for &v in &pts[i + 1..] {
                d = d.max(self.dist(u, v));
            }
        }
        Ok(d)
    }

    pub fn diameter(&self) -> T {
        let mut d = T::zero();
        for u in 0..self.len() {
            for v in u + 1..self.len() {
                d = d.max(self.dist(u, v));
            }
        }
        d
    }

    /// Smallest positive distance, if any two points are apart.
    pub fn min_separation(&self) -> Option<T> {
        let tol = T::tolerance();
        let mut best: Option<T> = None;
        for u in 0..self.len() {
            for v in u + 1..self.len() {
                let d = self.dist(u, v);
                if d > tol && best.is_none_or(|b| d < b) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// Visits every unordered pair `u < v` with `d_N(u, v) <= radius + tol`.
    ///
    /// Candidate pairs are pruned with three pivot distances; that relies on
    /// the triangle inequality, so explicit tables are scanned brute force.
    pub fn for_each_close_pair(&self, radius: T, mut f: impl FnMut(PointId, PointId, T)) {
        let n = self.len();
        let lim = radius + T::tolerance();
        let brute = n <= 64 || matches!(self.sys.geometry, Geometry::Matrix { .. });
        if brute {
            for u in 0..n {
                for v in u + 1..n {
                    let d = self.dist(u, v);
                    if d <= lim {
                        f(u, v, d);
                    }
                }
            }
            return;
        }
        let farthest = |from: PointId| -> PointId {
            let mut best = (T::zero(), from);
            for v in 0..n {
                let d = self.dist(from, v);
                if d > best.0 {
                    best = (d, v);
                }
            }
            best.1
        };
        let p0 = 0;
        let p1 = farthest(p0);
        let p2 = farthest(p1);
        let pd: Vec<[T; 3]> = (0..n)
            .map(|x| [self.dist(p0, x), self.dist(p1, x), self.dist(p2, x)])
            .collect();
        let mut order: Vec<PointId> = (0..n).collect();
        order.sort_by(|&a, &b| {
            pd[a][0]
                .partial_cmp(&pd[b][0])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        for (i, &x) in order.iter().enumerate() {
            let px = pd[x];
            for &y in &order[i + 1..] {
                let py = pd[y];
                if py[0] - px[0] > lim {
                    break;
                }
                if (py[1] - px[1]).abs() > lim || (py[2] - px[2]).abs() > lim {
                    continue;
                }
                let d = self.dist(x, y);
                if d <= lim {
                    f(x.min(y), x.max(y), d);
                }
            }
        }
    }

    /// For every point, the sorted ids of the other points within `radius`
    /// (`d < radius` when `strict`, `d <= radius` otherwise, both with tolerance).
    pub fn neighbors(&self, radius: T, strict: bool) -> Vec<Vec<u32>> {
        let tol = T::tolerance();
        let mut out = vec![Vec::new(); self.len()];
        self.for_each_close_pair(radius, |u, v, d| {
            let keep = if strict { d < radius - tol } else { true };
            if keep {
                out[u].push(v as u32);
                out[v].push(u as u32);
            }
        });
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }

    /// Closed neighbor lists with distances, each sorted by `(distance, id)`.
    pub fn neighbors_with_distances(&self, radius: T) -> Vec<Vec<(u32, T)>> {
        let mut out = vec![Vec::new(); self.len()];
        self.for_each_close_pair(radius, |u, v, d| {
            out[u].push((v as u32, d));
            out[v].push((u as u32, d));
        });
        for list in &mut out {
            list.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        }
        out
    }
}

pub fn bowen_distance<T: Scalar>(
    sys: &MetricSystem<T>,
    scale: BowenScale,
    u: PointId,
    v: PointId,
) -> Result<T> {
    sys.bowen_distance(scale, u, v)
}

pub fn ball_members<T: Scalar>(sys: &MetricSystem<T>, b: &Ball) -> Result<Vec<PointId>> {
    sys.view(b.scale)
        .ball_members(b.center, T::from_f64_lossy(b.radius))
}

pub fn set_diameter<T: Scalar>(
    sys: &MetricSystem<T>,
    scale: BowenScale,
    pts: &[PointId],
) -> Result<T> {
    sys.view(scale).diameter_of(pts)
}
