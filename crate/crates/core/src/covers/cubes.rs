//! Nested dyadic-style cube partitions of a finite model.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{BowenView, PointId};

#[derive(Clone, Debug, Serialize)]
pub struct Cube {
    pub center: PointId,
    pub members: Vec<PointId>,
    /// Index of the enclosing cube one level up (`None` at level 1).
    pub parent: Option<usize>,
}

/// Levels `1..=depth` of nested partitions with ratio `γ`.
///
/// Level-`k` centers form a maximal `γ^k`-separated set extending the
/// level-`k-1` centers. The finest level is a Voronoi partition; every
/// coarser cube is the union of the finer cubes whose centers are closest
/// to it. For `γ < 1/7` this gives
/// `B°(c, γ^k/3) ⊆ Q ⊆ B(c, 2γ^k)`, which [`CubeTree::verify`] re-checks.
#[derive(Clone, Debug, Serialize)]
pub struct CubeTree {
    pub ratio: f64,
    pub scale: usize,
    pub c0: f64,
    pub big_c0: f64,
    pub a0: f64,
    /// Inner sandwich constant `c₀/(3A₀²)`.
    pub c1: f64,
    /// Outer sandwich constant `2A₀C₀`.
    pub big_c1: f64,
    levels: Vec<Vec<Cube>>,
    #[serde(skip)]
    assign: Vec<Vec<usize>>,
}

impl CubeTree {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Cubes at level `k` (1-based).
    pub fn level(&self, k: usize) -> &[Cube] {
        &self.levels[k - 1]
    }

    /// Index of the level-`k` cube containing `u`.
    pub fn cube_of(&self, k: usize, u: PointId) -> usize {
        self.assign[k - 1][u]
    }

    /// Checks partition, nesting and both sandwich inclusions.
    pub fn verify(&self, view: &BowenView<'_, f64>) -> Result<()> {
        let tol = crate::TOLERANCE;
        let n = view.len();
        for (li, cubes) in self.levels.iter().enumerate() {
            let k = li + 1;
            let mut seen = vec![false; n];
            for cube in cubes {
                for &p in &cube.members {
                    if seen[p] {
                        return Err(Error::precondition(format!("point {p} in two level-{k} cubes")));
                    }
                    seen[p] = true;
                }
            }
            if let Some(p) = seen.iter().position(|s| !s) {
                return Err(Error::precondition(format!("point {p} in no level-{k} cube")));
            }
            let rk = self.ratio.powi(k as i32);
            for (ci, cube) in cubes.iter().enumerate() {
                for &p in &cube.members {
                    if view.dist(cube.center, p) > self.big_c1 * rk + tol {
                        return Err(Error::precondition(format!(
                            "level-{k} cube at {} reaches {p} beyond C1 gamma^k",
                            cube.center
                        )));
                    }
                }
                for p in 0..n {
                    if view.dist(cube.center, p) < self.c1 * rk - tol && self.assign[li][p] != ci {
                        return Err(Error::precondition(format!(
                            "point {p} near center {} lies outside its level-{k} cube",
                            cube.center
                        )));
                    }
                }
                if k > 1 {
                    let parent = cube.parent.expect("coarser level exists");
                    for &p in &cube.members {
                        if self.assign[li - 1][p] != parent {
                            return Err(Error::precondition(format!(
                                "level-{k} cube at {} is not nested",
                                cube.center
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn nearest(view: &BowenView<'_, f64>, p: PointId, centers: &[PointId]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, &c) in centers.iter().enumerate() {
        let d = view.dist(p, c);
        // centers are sorted by id, so strict < keeps the lowest index on ties
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

pub fn build_cube_tree(view: &BowenView<'_, f64>, gamma: f64, depth: usize) -> Result<CubeTree> {
    if !(gamma > 0.0 && 12.0 * gamma <= 1.0 + crate::TOLERANCE) {
        return Err(Error::domain(format!("cube ratio {gamma} must satisfy 0 < 12 gamma <= 1")));
    }
    if depth == 0 {
        return Err(Error::domain("cube tree depth must be at least 1"));
    }
    if view.is_empty() {
        return Err(Error::domain("cube tree of an empty system"));
    }
    let n = view.len();
    let tol = crate::TOLERANCE;

    let mut centers: Vec<Vec<PointId>> = Vec::with_capacity(depth);
    let mut current: Vec<PointId> = Vec::new();
    for k in 1..=depth {
        let sep = gamma.powi(k as i32) - tol;
        for p in 0..n {
            if current.iter().all(|&c| view.dist(p, c) >= sep) {
                current.push(p);
            }
        }
        current.sort_unstable();
        centers.push(current.clone());
    }

    let mut assign = vec![Vec::new(); depth];
    assign[depth - 1] = (0..n).map(|p| nearest(view, p, &centers[depth - 1])).collect();
    for li in (0..depth - 1).rev() {
        let child_parent: Vec<usize> = centers[li + 1]
            .iter()
            .map(|&c| nearest(view, c, &centers[li]))
            .collect();
        assign[li] = (0..n).map(|p| child_parent[assign[li + 1][p]]).collect();
    }

    let mut levels = Vec::with_capacity(depth);
    for li in 0..depth {
        let mut cubes: Vec<Cube> = centers[li]
            .iter()
            .map(|&c| Cube {
                center: c,
                members: Vec::new(),
                parent: None,
            })
            .collect();
        for p in 0..n {
            cubes[assign[li][p]].members.push(p);
        }
        if li > 0 {
            for cube in &mut cubes {
                cube.parent = Some(assign[li - 1][cube.center]);
            }
        }
        levels.push(cubes);
    }

    let tree = CubeTree {
        ratio: gamma,
        scale: view.n(),
        c0: 1.0,
        big_c0: 1.0,
        a0: 1.0,
        c1: 1.0 / 3.0,
        big_c1: 2.0,
        levels,
        assign,
    };
    tree.verify(view)?;
    Ok(tree)
}
