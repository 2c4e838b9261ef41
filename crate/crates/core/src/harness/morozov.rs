use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::SolveResult;

pub const DEFAULT_ETA: f64 = 1.1;
pub const DEFAULT_POINTS_PER_DECADE: usize = 25;

/// Log-spaced grid from `hi` down to `lo`, `per_decade` points per factor ten,
/// anchored at `hi`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && per_decade > 0) || !hi.is_finite() {
        return Err(Error::Argument(format!(
            "invalid alpha grid [{lo}, {hi}] with {per_decade} points per decade"
        )));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64 + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|i| hi * 10f64.powf(-(i as f64) / per_decade as f64))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscrepancyPoint {
    pub alpha: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MorozovSelection {
    pub alpha: f64,
    /// Set when no grid point met the discrepancy bound and the smallest
    /// grid value was returned instead.
    pub flagged: bool,
    pub target: f64,
    pub visited: Vec<DiscrepancyPoint>,
    pub solution: SolveResult,
}

/// Largest grid alpha whose fidelity residual is at most `eta * delta`.
///
/// `solve(alpha, warm)` must return the minimizer for `alpha`; the grid is
/// scanned from large to small alpha and each solve is warm started from the
/// previous one. The scan stops at the first alpha meeting the bound.
pub fn morozov_select_alpha<F>(mut solve: F, delta: f64, alpha_grid: &[f64], eta: f64) -> Result<MorozovSelection>
where
    F: FnMut(f64, Option<&[f64]>) -> Result<SolveResult>,
{
    if alpha_grid.is_empty() {
        return Err(Error::Argument("empty alpha grid".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Argument(format!("noise norm {delta} must be positive")));
    }
    let mut grid = alpha_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    let target = eta * delta;
    let mut visited = Vec::new();
    let mut last: Option<SolveResult> = None;
    for &alpha in &grid {
        let result = solve(alpha, last.as_ref().map(|r| r.x.as_slice())).map_err(|source| Error::AtAlpha {
            alpha,
            source: Box::new(source),
        })?;
        visited.push(DiscrepancyPoint {
            alpha,
            residual: result.residual_norm,
        });
        if result.residual_norm <= target {
            return Ok(MorozovSelection {
                alpha,
                flagged: false,
                target,
                visited,
                solution: result,
            });
        }
        last = Some(result);
    }
    Ok(MorozovSelection {
        alpha: *grid.last().expect("nonempty grid"),
        flagged: true,
        target,
        visited,
        solution: last.expect("nonempty grid"),
    })
}
