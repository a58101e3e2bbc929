use serde::{Deserialize, Serialize};

use crate::covers::{self, Method, SolverConfig};
use crate::error::{Error, Result};
use crate::metric::{BowenScale, PointId};
use crate::MetricSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssouadSample {
    pub point: PointId,
    #[serde(rename = "N")]
    pub n: usize,
    pub big_r: f64,
    pub r: f64,
    pub span: usize,
    /// `log2(C (R/r)^a) - log2 span`, never negative.
    pub residual: f64,
}

/// Envelope `span(Ξ ∩ B(u, R), N, r) ≤ C (R/r)^a` over the sampled triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssouadFit {
    pub c: f64,
    pub a: f64,
    /// Samples cover every `N > n_threshold`.
    pub n_threshold: usize,
    pub samples: Vec<AssouadSample>,
    pub method: Method,
}

/// Least-squares slope of `log2 span` against `log2(R/r)`, clamped at 0,
/// with `C` raised until no sample lies above the envelope.
pub fn mean_assouad_estimate(
    sys: &MetricSystem,
    scales: &[usize],
    big_radii: &[f64],
    radii: &[f64],
    solver: &SolverConfig,
) -> Result<AssouadFit> {
    let mut raw = Vec::new();
    let mut method = Method::Exact;
    for &n in scales {
        let view = sys.view(BowenScale::new(n)?);
        for &big_r in big_radii {
            for &r in radii {
                if !(r > 0.0) || r > big_r.min(1.0) {
                    continue;
                }
                for u in 0..sys.len() {
                    let ball = view.ball_members(u, big_r)?;
                    let rep = covers::min_spanning_subset(&view, &ball, r, solver)?;
                    method = method.max(rep.method);
                    raw.push((u, n, big_r, r, rep.span()));
                }
            }
        }
    }
    if raw.is_empty() {
        return Err(Error::domain("no Assouad sample satisfies 0 < r <= min(1, R)"));
    }
    let pts: Vec<(f64, f64)> = raw
        .iter()
        .map(|&(_, _, big_r, r, span)| ((big_r / r).log2(), (span as f64).log2()))
        .collect();
    let count = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let log_c = pts.iter().map(|(x, y)| y - a * x).fold(f64::NEG_INFINITY, f64::max);
    let samples = raw
        .iter()
        .zip(&pts)
        .map(|(&(point, n, big_r, r, span), &(x, y))| AssouadSample {
            point,
            n,
            big_r,
            r,
            span,
            residual: (log_c + a * x - y).max(0.0),
        })
        .collect();
    Ok(AssouadFit {
        c: log_c.exp2(),
        a,
        n_threshold: scales.iter().copied().min().unwrap_or(1) - 1,
        samples,
        method,
    })
}
