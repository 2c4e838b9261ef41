use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::solvers::{LassoProblem, SolveResult, Tolerances};
use crate::spectral::{decompose, weights_from_basis, SpectralModel, WeightMatrix};

/// Data-fidelity term of a regularized solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// `1/2 ||A x - b||^2`
    FormA,
    /// `1/2 ||A_k^+ A x - A_k^+ b||^2`
    FormAd,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::FormA => "formA",
            Formulation::FormAd => "formAd",
        }
    }
}

/// A forward model together with its truncated spectral data and weights.
///
/// The truncated fidelity `||V_k V_k^T x - A_k^+ b||` equals
/// `||V_k^T x - S_k^{-1} U_k^T b||` because `V_k` has orthonormal columns, so
/// the `k x n` factor is used in place of the `n x n` projection.
#[derive(Clone, Debug)]
pub struct InverseModel {
    pub forward: ForwardModel,
    pub spectral: SpectralModel,
    pub k: usize,
    pub weights: WeightMatrix,
    reduced: DMatrix<f64>,
}

impl InverseModel {
    pub fn new(forward: ForwardModel, k: usize, rank_tol: f64, floor_tol: f64) -> Result<Self> {
        let spectral = decompose(&forward.a, rank_tol)?;
        let vk = spectral.range_basis(k)?;
        let weights = weights_from_basis(&vk, floor_tol)?;
        Ok(InverseModel {
            forward,
            spectral,
            k,
            weights,
            reduced: vk.transpose(),
        })
    }

    pub fn n(&self) -> usize {
        self.forward.n()
    }

    pub fn m(&self) -> usize {
        self.forward.m()
    }

    /// `P_k = V_k V_k^T`, dense.
    pub fn projection(&self) -> DMatrix<f64> {
        self.reduced.transpose() * &self.reduced
    }

    /// `V_k^T`, `k x n`.
    pub fn reduced_operator(&self) -> &DMatrix<f64> {
        &self.reduced
    }

    /// `S_k^{-1} U_k^T b`: coordinates of `A_k^+ b` in the basis `V_k`.
    pub fn reduced_data(&self, b: &[f64]) -> Vec<f64> {
        let uk = self.spectral.left_vectors().columns(0, self.k);
        let c = uk.transpose() * DVector::from_column_slice(b);
        c.iter()
            .zip(self.spectral.singular_values())
            .map(|(c, s)| c / s)
            .collect()
    }

    /// Operator and data of the requested fidelity for observation `b`.
    pub fn fidelity(&self, formulation: Formulation, b: &[f64]) -> Result<(&DMatrix<f64>, Vec<f64>)> {
        if b.len() != self.m() {
            return Err(Error::Dimension(format!(
                "observation has length {}, expected {}",
                b.len(),
                self.m()
            )));
        }
        Ok(match formulation {
            Formulation::FormA => (&self.forward.a, b.to_vec()),
            Formulation::FormAd => (&self.reduced, self.reduced_data(b)),
        })
    }

    /// Norm of a data perturbation as seen by the fidelity term.
    pub fn fidelity_noise_norm(&self, formulation: Formulation, noise: &[f64]) -> f64 {
        match formulation {
            Formulation::FormA => DVector::from_column_slice(noise).norm(),
            Formulation::FormAd => DVector::from_vec(self.reduced_data(noise)).norm(),
        }
    }

    /// Data of the exact projected problem `1/2 ||P x - P x*||^2` in reduced
    /// coordinates: `V_k^T x*`.
    pub fn projected_data(&self, x_true: &[f64]) -> Vec<f64> {
        (&self.reduced * DVector::from_column_slice(x_true))
            .iter()
            .copied()
            .collect()
    }

    pub fn solve(
        &self,
        formulation: Formulation,
        b: &[f64],
        weights: &WeightMatrix,
        alpha: f64,
        tol: &Tolerances,
    ) -> Result<SolveResult> {
        let (g, d) = self.fidelity(formulation, b)?;
        LassoProblem::new(g, &d, weights)?.solve(alpha, tol, None, false)
    }
}
