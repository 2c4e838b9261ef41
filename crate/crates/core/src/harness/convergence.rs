use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certify::SourceConfig;
use crate::error::{Error, Result};
use crate::harness::model::{Formulation, InverseModel};
use crate::harness::noise::scaled_perturbation;
use crate::solvers::{sign_preserving_alpha, LassoProblem, SolveResult, Tolerances};
use crate::spectral::WeightMatrix;

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRecord {
    /// Relative noise norm `||b_delta - b|| / ||b||`.
    pub delta: f64,
    /// Absolute noise norm `||b_delta - b||`.
    pub delta_abs: f64,
    pub alpha: f64,
    pub error_w: f64,
    pub formulation: Formulation,
    pub converged: bool,
    pub iterations: usize,
}

/// Least-squares line `log10 y = intercept + slope log10 x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

pub fn loglog_fit(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::Argument("line fit needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Argument("loglog fit needs positive values".into()));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("loglog fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = lx.iter().zip(&ly).map(|(x, y)| y - intercept - slope * x).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        residuals,
    })
}

/// Largest alpha for which the noise-free minimizer of
/// `1/2 ||G x - G x*||^2 + alpha ||W x||_1`, restricted to the support of
/// `x*`, keeps the signs of `x*`: the support solution is
/// `x*_J - alpha (G_J^T G_J)^{-1} W_J sgn(x*_J)`.
///
/// For `G = V_k^T` the coefficients coincide with the C.1 sign system.
pub fn sign_preserving_bound(g: &DMatrix<f64>, weights: &WeightMatrix, source: &SourceConfig) -> Result<f64> {
    let support = source.support();
    let gj = g.select_columns(support);
    let rhs = DVector::from_iterator(
        support.len(),
        support.iter().zip(source.signs()).map(|(&j, s)| weights.w[j] * s),
    );
    let a = (gj.transpose() * &gj)
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Argument("operator is not injective on the support".into()))?;
    Ok(sign_preserving_alpha(source.values(), a.as_slice()))
}

/// Fraction of the sign-preserving bound reached by `alpha = C delta` at the
/// largest noise level when no `C` is configured.
pub const DEFAULT_BOUND_FRACTION: f64 = 0.5;

/// `C = fraction * bound / max(delta)`, where `bound` is
/// [`sign_preserving_bound`] for the formulation's fidelity operator.
pub fn default_c(
    model: &InverseModel,
    source: &SourceConfig,
    formulation: Formulation,
    deltas: &[f64],
    fraction: f64,
) -> Result<f64> {
    let top = deltas.iter().copied().fold(0.0f64, f64::max);
    if !(top > 0.0) {
        return Err(Error::Argument("need a positive noise level".into()));
    }
    let b = model.forward.apply(&source.to_dense());
    let (g, _) = model.fidelity(formulation, &b)?;
    let bound = sign_preserving_bound(g, &model.weights, source)?;
    if !bound.is_finite() {
        return Err(Error::Argument("sign-preserving bound is unbounded".into()));
    }
    Ok(fraction * bound / top)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub formulation: Formulation,
    pub c: f64,
    /// Sign-preserving bound on alpha for noise-free data.
    pub alpha_bound: f64,
    pub records: Vec<ConvergenceRecord>,
    /// Fit over the converged records only.
    pub fit: LineFit,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceOptions {
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Solves the chosen formulation for `alpha = C delta` at every noise level
/// and fits the loglog slope of `||x_alpha - x*||_W` against `delta`.
///
/// Clean data is `b = A x*`; the perturbation at level `delta` has norm
/// exactly `delta ||b||` along a seeded Gaussian direction.
pub fn convergence_study(
    model: &InverseModel,
    source: &SourceConfig,
    c: f64,
    deltas: &[f64],
    formulation: Formulation,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceStudy> {
    if source.n() != model.n() {
        return Err(Error::Dimension(format!(
            "source has length {}, model has {} unknowns",
            source.n(),
            model.n()
        )));
    }
    if !(c > 0.0) {
        return Err(Error::Argument(format!("C = {c} must be positive")));
    }
    if deltas.len() < 4 || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Argument("need at least four positive noise levels".into()));
    }
    let (lo, hi) = deltas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::Argument("noise levels must span at least two decades".into()));
    }

    let x_true = source.to_dense();
    let b_clean = model.forward.apply(&x_true);
    let alpha_bound = sign_preserving_bound(model.fidelity(formulation, &b_clean)?.0, &model.weights, source)?;
    let b_norm = b_clean.iter().map(|v| v * v).sum::<f64>().sqrt();
    let direction = scaled_perturbation(b_clean.len(), 1.0, opts.seed);

    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut records = Vec::with_capacity(sorted.len());
    let mut warnings = Vec::new();
    let mut warm: Option<SolveResult> = None;
    for &delta in &sorted {
        let delta_abs = delta * b_norm;
        let b: Vec<f64> = b_clean.iter().zip(&direction).map(|(b, e)| b + delta_abs * e).collect();
        let (g, d) = model.fidelity(formulation, &b)?;
        let alpha = c * delta;
        let result = LassoProblem::new(g, &d, &model.weights)?
            .solve(alpha, &opts.tolerances, warm.as_ref().map(|r| r.x.as_slice()), false)
            .map_err(|source| Error::AtAlpha {
                alpha,
                source: Box::new(source),
            })?;
        let diff: Vec<f64> = result.x.iter().zip(&x_true).map(|(a, b)| a - b).collect();
        let error_w = model.weights.norm(&diff);
        if !result.converged {
            warnings.push(format!(
                "{} solve at delta = {delta:e} did not converge in {} iterations; excluded from the fit",
                formulation.label(),
                result.iterations
            ));
        }
        records.push(ConvergenceRecord {
            delta,
            delta_abs,
            alpha,
            error_w,
            formulation,
            converged: result.converged,
            iterations: result.iterations,
        });
        warm = Some(result);
    }
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.converged)
        .map(|r| (r.delta, r.error_w))
        .collect();
    let fit = loglog_fit(&points)?;
    Ok(ConvergenceStudy {
        formulation,
        c,
        alpha_bound,
        records,
        fit,
        warnings,
    })
}
