//! Weighted l1 solvers.
//!
//! Both solvers work in the substituted variable `z = W x`, which turns the
//! weighted penalty into a plain l1 norm with operator `G W^{-1}`, and map
//! the result back with `x = W^{-1} z`.

mod bp;
mod lasso;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::certify::SourceConfig;
use crate::spectral::WeightMatrix;

pub use bp::{solve_weighted_bp, BpOptions};
pub use lasso::{optimality_residual, solve_weighted_lasso, LassoProblem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative iterate change that ends the iteration.
    pub primal_tol: f64,
    /// Subgradient-optimality residual (LASSO) or relative duality gap (BP).
    pub dual_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            primal_tol: 1e-10,
            dual_tol: 1e-8,
            max_iter: 200_000,
        }
    }
}

/// `min_x 1/2 ||G x - d||^2 + alpha ||W x||_1`.
#[derive(Clone, Copy, Debug)]
pub struct SolveRequest<'a> {
    pub fidelity_operator: &'a DMatrix<f64>,
    pub data: &'a [f64],
    pub weights: &'a WeightMatrix,
    pub alpha: f64,
    pub tolerances: Tolerances,
    pub record_trace: bool,
}

impl<'a> SolveRequest<'a> {
    pub fn new(fidelity_operator: &'a DMatrix<f64>, data: &'a [f64], weights: &'a WeightMatrix, alpha: f64) -> Self {
        SolveRequest {
            fidelity_operator,
            data,
            weights,
            alpha,
            tolerances: Tolerances::default(),
            record_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub step: f64,
    pub restarted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    pub x: Vec<f64>,
    /// `T_alpha(x)` for LASSO, `||W x||_1` for basis pursuit.
    pub objective: f64,
    /// `||G x - d||_2`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Final optimality measure: subgradient residual (LASSO) or duality gap (BP).
    pub optimality: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<IterationRecord>,
}

impl SolveResult {
    pub fn support(&self, tau_supp: f64) -> Vec<usize> {
        extract_support(&self.x, tau_supp)
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective,step,restarted\n");
        for r in &self.trace {
            let _ = writeln!(out, "{},{:e},{:e},{}", r.iteration, r.objective, r.step, r.restarted);
        }
        out
    }
}

/// Default support threshold, `1e-6 * ||x||_inf`.
pub fn default_tau(x: &[f64]) -> f64 {
    1e-6 * x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Indices with `|x_i| > tau_supp`.
pub fn extract_support(x: &[f64], tau_supp: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tau_supp)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

pub(crate) fn mat_vec(a: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (a * DVector::from_column_slice(x)).iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictedSolution {
    pub y: Vec<f64>,
    /// Largest alpha keeping `sgn(x*_j - alpha a_j) = sgn(x*_j)` on the support.
    pub alpha_max: f64,
    /// False when `alpha >= alpha_max`: the closed form no longer applies.
    pub in_regime: bool,
}

/// Closed-form minimizer `y = sum_J (x*_j - alpha a_j) e_j` of the projected
/// problem when the sign-system coefficients `a` certify recovery.
pub fn predicted_solution(source: &SourceConfig, a: &[f64], alpha: f64) -> PredictedSolution {
    assert_eq!(a.len(), source.support().len());
    let mut y = vec![0.0; source.n()];
    for ((&j, &xj), &aj) in source.support().iter().zip(source.values()).zip(a) {
        y[j] = xj - alpha * aj;
    }
    let alpha_max = sign_preserving_alpha(source.values(), a);
    PredictedSolution {
        y,
        alpha_max,
        in_regime: alpha < alpha_max,
    }
}

/// `min { x_j / a_j : x_j / a_j > 0 }`, or infinity when no ratio is positive.
pub fn sign_preserving_alpha(values: &[f64], a: &[f64]) -> f64 {
    values
        .iter()
        .zip(a)
        .filter(|(_, &aj)| aj != 0.0)
        .map(|(&xj, &aj)| xj / aj)
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}
