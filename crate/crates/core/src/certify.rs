//! Checkable recovery hypotheses: the max property, pairwise column
//! separation, sign-system (C.1/C.2) criteria, dual certificates, disjoint
//! projected supports, orthocomplement membership and injectivity.
//!
//! All indices are zero-based.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::sign_preserving_alpha;
use crate::spectral::{singular_values_of, WeightMatrix};

pub const DEFAULT_ANGLE_TOL: f64 = 1e-6;
pub const DEFAULT_SUPP_TOL: f64 = 1e-3;
pub const DEFAULT_ORTHO_TOL: f64 = 0.05;
pub const DEFAULT_INJ_TOL: f64 = 1e-8;
pub const DEFAULT_CERT_TOL: f64 = 1e-10;

/// A sparse source `x* = sum_J x*_j e_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SourceConfig {
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Source(format!(
                "{} indices but {} values",
                support.len(),
                values.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for (&j, &v) in support.iter().zip(&values) {
            if j >= n {
                return Err(Error::Source(format!("index {j} outside 0..{n}")));
            }
            if !seen.insert(j) {
                return Err(Error::Source(format!("index {j} listed twice")));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::Source(format!("value at index {j} must be finite and nonzero")));
            }
        }
        Ok(SourceConfig { n, support, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn signs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.signum()).collect()
    }

    pub fn complement(&self) -> Vec<usize> {
        let s: BTreeSet<_> = self.support.iter().copied().collect();
        (0..self.n).filter(|i| !s.contains(i)).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }

    /// Same support, magnitudes multiplied entrywise.
    pub fn rescaled(&self, factors: &[f64]) -> Result<Self> {
        let values = self.values.iter().zip(factors).map(|(v, f)| v * f).collect();
        SourceConfig::new(self.n, self.support.clone(), values)
    }
}

/// `[W^{-1} P e_j]_i = P_ij / w_i`
fn weighted_entry(p: &DMatrix<f64>, w: &WeightMatrix, i: usize, j: usize) -> f64 {
    p[(i, j)] / w.w[i]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParallelColumns {
    /// Pairs `(i, j)`, `i < j`, with `|cos| > 1 - angle_tol`.
    pub pairs: Vec<(usize, usize)>,
    /// Columns with zero norm.
    pub zero_columns: Vec<usize>,
}

impl ParallelColumns {
    pub fn flagged(&self) -> BTreeSet<usize> {
        self.pairs
            .iter()
            .flat_map(|&(i, j)| [i, j])
            .chain(self.zero_columns.iter().copied())
            .collect()
    }
}

pub fn check_parallel_columns(a: &DMatrix<f64>, angle_tol: f64) -> ParallelColumns {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let zero_columns: Vec<usize> = (0..a.ncols()).filter(|&j| norms[j] == 0.0).collect();
    let gram = a.transpose() * a;
    let mut pairs = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..j {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                continue;
            }
            let cos = gram[(i, j)] / (norms[i] * norms[j]);
            if cos.abs() > 1.0 - angle_tol {
                pairs.push((i, j));
            }
        }
    }
    ParallelColumns { pairs, zero_columns }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxPropertyEntry {
    pub index: usize,
    pub argmax: usize,
    /// `|[W^{-1} P e_j]_j| = ||P e_j||`.
    pub value: f64,
    /// Gap between the diagonal value and the largest off-diagonal one.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxPropertyReport {
    pub entries: Vec<MaxPropertyEntry>,
}

impl MaxPropertyReport {
    pub fn all_pass_except(&self, excluded: &BTreeSet<usize>) -> bool {
        self.entries
            .iter()
            .filter(|e| !excluded.contains(&e.index))
            .all(|e| e.pass)
    }
}

pub fn check_max_property(p: &DMatrix<f64>, w: &WeightMatrix) -> MaxPropertyReport {
    let n = p.ncols();
    let entries = (0..n)
        .map(|j| {
            let diag = weighted_entry(p, w, j, j).abs();
            let (mut off_i, mut off) = (j, f64::NEG_INFINITY);
            for i in (0..n).filter(|&i| i != j) {
                let v = weighted_entry(p, w, i, j).abs();
                if v > off {
                    (off_i, off) = (i, v);
                }
            }
            let off = off.max(0.0);
            let margin = if n == 1 { diag } else { diag - off };
            MaxPropertyEntry {
                index: j,
                argmax: if margin > 0.0 { j } else { off_i },
                value: diag,
                margin,
                pass: margin > 0.0 && diag <= 1.0 + 1e-10,
            }
        })
        .collect();
    MaxPropertyReport { entries }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C1C2 {
    pub c1_feasible: bool,
    pub a: Vec<f64>,
    /// `max_{i in J^c} |[sum_J a_j W^{-1} P e_j]_i|`; absent when C.1 is not solvable.
    pub c2_margin: Option<f64>,
    pub c2_pass: bool,
    pub alpha_max: f64,
}

pub fn check_c1_c2(p: &DMatrix<f64>, w: &WeightMatrix, source: &SourceConfig) -> Result<C1C2> {
    let s = source.support().len();
    if s == 0 {
        return Err(Error::Source("empty support".into()));
    }
    let supp = source.support();
    let m = DMatrix::from_fn(s, s, |r, c| weighted_entry(p, w, supp[r], supp[c]));
    let sv = singular_values_of(&m);
    let inconclusive = C1C2 {
        c1_feasible: false,
        a: Vec::new(),
        c2_margin: None,
        c2_pass: false,
        alpha_max: 0.0,
    };
    if !(sv.last().is_some_and(|&lo| lo > 1e-12 * sv[0])) {
        return Ok(inconclusive);
    }
    let Some(a) = m.lu().solve(&DVector::from_vec(source.signs())) else {
        return Ok(inconclusive);
    };
    let a: Vec<f64> = a.iter().copied().collect();
    let c2_margin = source
        .complement()
        .into_iter()
        .map(|i| {
            supp.iter()
                .zip(&a)
                .map(|(&j, &aj)| aj * weighted_entry(p, w, i, j))
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max);
    Ok(C1C2 {
        c1_feasible: true,
        alpha_max: sign_preserving_alpha(source.values(), &a),
        c2_pass: c2_margin < 1.0,
        c2_margin: Some(c2_margin),
        a,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualCertificate {
    pub nbp1_residual: f64,
    pub nbp2_margin: f64,
    pub valid: bool,
}

/// Checks `(P e_i / ||P e_i||) . c` against `sgn(x*_i)` on `J` and against
/// the open unit interval off `J`.
pub fn verify_dual_certificate(
    p: &DMatrix<f64>,
    w: &WeightMatrix,
    source: &SourceConfig,
    c: &[f64],
    tol: f64,
) -> DualCertificate {
    let pc = p * DVector::from_column_slice(c);
    let proj = |i: usize| pc[i] / w.w[i];
    let nbp1_residual = source
        .support()
        .iter()
        .zip(source.signs())
        .map(|(&i, s)| (proj(i) - s).abs())
        .fold(0.0, f64::max);
    let nbp2_margin = source
        .complement()
        .into_iter()
        .map(|i| proj(i).abs())
        .fold(0.0, f64::max);
    DualCertificate {
        nbp1_residual,
        nbp2_margin,
        valid: nbp1_residual <= tol && nbp2_margin < 1.0,
    }
}

/// `c = sum_J a_j e_j`.
pub fn induced_certificate(source: &SourceConfig, a: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; source.n()];
    for (&j, &aj) in source.support().iter().zip(a) {
        c[j] = aj;
    }
    c
}

/// `c = sum_J sgn(x*_j) P e_j / ||P e_j||`.
pub fn disjoint_certificate(p: &DMatrix<f64>, w: &WeightMatrix, source: &SourceConfig) -> Vec<f64> {
    let mut c = DVector::zeros(source.n());
    for (&j, s) in source.support().iter().zip(source.signs()) {
        c += p.column(j) * (s / w.w[j]);
    }
    c.iter().copied().collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisjointReport {
    pub disjoint: bool,
    /// `overlap[a][b] = max_i min(|P_ij| / ||P e_j||_inf, |P_ik| / ||P e_k||_inf)`
    /// for `j = J[a]`, `k = J[b]`; the pair is disjoint iff this is at most `supp_tol`.
    pub overlap: Vec<Vec<f64>>,
}

pub fn check_disjoint_supports(p: &DMatrix<f64>, support: &[usize], supp_tol: f64) -> DisjointReport {
    let rel: Vec<Vec<f64>> = support
        .iter()
        .map(|&j| {
            let col = p.column(j);
            let m = col.amax();
            col.iter().map(|v| if m > 0.0 { v.abs() / m } else { 0.0 }).collect()
        })
        .collect();
    let s = support.len();
    let mut overlap = vec![vec![0.0; s]; s];
    let mut disjoint = true;
    for a in 0..s {
        for b in 0..s {
            if a == b {
                overlap[a][b] = 1.0;
                continue;
            }
            let o = rel[a].iter().zip(&rel[b]).map(|(x, y)| x.min(*y)).fold(0.0, f64::max);
            overlap[a][b] = o;
            if o > supp_tol {
                disjoint = false;
            }
        }
    }
    DisjointReport { disjoint, overlap }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrthoMember {
    pub index: usize,
    pub norm: f64,
    pub member: bool,
}

pub fn check_orthocomplement(p: &DMatrix<f64>, j: usize, ortho_tol: f64) -> OrthoMember {
    let norm = p.column(j).norm();
    OrthoMember {
        index: j,
        norm,
        member: norm >= 1.0 - ortho_tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Injectivity {
    pub injective: bool,
    pub sigma_min: f64,
}

/// `sigma_min(A_J) > inj_tol * sigma_max(A)`.
pub fn check_injective_on_support(a: &DMatrix<f64>, support: &[usize], inj_tol: f64) -> Injectivity {
    let sub = a.select_columns(support);
    let sigma_min = if support.len() > a.nrows() {
        0.0
    } else {
        singular_values_of(&sub).last().copied().unwrap_or(0.0)
    };
    let sigma_max = singular_values_of(a).first().copied().unwrap_or(0.0);
    Injectivity {
        injective: sigma_min > inj_tol * sigma_max,
        sigma_min,
    }
}

/// True iff every entry above `tau_supp` carries the sign of `x*`.
pub fn check_sign_consistency(x: &[f64], source: &SourceConfig, tau_supp: f64) -> bool {
    let truth = source.to_dense();
    x.len() == truth.len()
        && x.iter()
            .zip(&truth)
            .all(|(&xk, &tk)| xk.abs() <= tau_supp || xk.signum() == tk.signum() && tk != 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub supp_tol: f64,
    pub ortho_tol: f64,
    pub inj_tol: f64,
    pub cert_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            supp_tol: DEFAULT_SUPP_TOL,
            ortho_tol: DEFAULT_ORTHO_TOL,
            inj_tol: DEFAULT_INJ_TOL,
            cert_tol: DEFAULT_CERT_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub support: Vec<usize>,
    pub c1_feasible: bool,
    pub a: Vec<f64>,
    pub c2_margin: Option<f64>,
    pub c2_pass: bool,
    pub alpha_max: f64,
    /// Induced `c = sum_J a_j e_j` when C.1 is solvable.
    pub dual_certificate: Option<Vec<f64>>,
    pub nbp1_residual: Option<f64>,
    pub nbp2_margin: Option<f64>,
    pub certificate_valid: bool,
    pub injective_on_support: bool,
    pub sigma_min_support: f64,
    pub disjoint: bool,
    pub overlap: Vec<Vec<f64>>,
    pub ortho_members: Vec<OrthoMember>,
}

impl CertificateReport {
    /// The sufficient conditions for support recovery below `alpha_max`.
    pub fn recovery_certified(&self) -> bool {
        self.c1_feasible && self.c2_pass && self.injective_on_support
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let yes = |b: bool| if b { "pass" } else { "fail" };
        let _ = writeln!(out, "{:<28} {:>6}  value", "check", "result");
        let _ = writeln!(
            out,
            "{:<28} {:>6}  a = {:?}",
            "C.1 sign system",
            yes(self.c1_feasible),
            self.a
        );
        match self.c2_margin {
            Some(m) => {
                let _ = writeln!(
                    out,
                    "{:<28} {:>6}  margin {m:.6e}",
                    "C.2 off-support bound",
                    yes(self.c2_pass)
                );
            }
            None => {
                let _ = writeln!(out, "{:<28} {:>6}  inconclusive", "C.2 off-support bound", yes(false));
            }
        }
        if let (Some(r), Some(m)) = (self.nbp1_residual, self.nbp2_margin) {
            let _ = writeln!(
                out,
                "{:<28} {:>6}  residual {r:.3e}, margin {m:.6e}",
                "dual certificate",
                yes(self.certificate_valid)
            );
        } else {
            let _ = writeln!(out, "{:<28} {:>6}  not constructed", "dual certificate", yes(false));
        }
        let _ = writeln!(
            out,
            "{:<28} {:>6}  sigma_min {:.6e}",
            "injective on support",
            yes(self.injective_on_support),
            self.sigma_min_support
        );
        let max_overlap = self
            .overlap
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().enumerate().filter(move |(b, _)| *b != a).map(|(_, v)| *v))
            .fold(0.0, f64::max);
        let _ = writeln!(
            out,
            "{:<28} {:>6}  max overlap {max_overlap:.3e}",
            "disjoint projections",
            yes(self.disjoint)
        );
        for m in &self.ortho_members {
            let _ = writeln!(
                out,
                "{:<28} {:>6}  ||Pe_{}|| = {:.6}",
                "orthocomplement member",
                yes(m.member),
                m.index,
                m.norm
            );
        }
        let _ = writeln!(out, "alpha_max = {:e}", self.alpha_max);
        out
    }
}

/// Runs the whole battery for one source configuration.
pub fn certify(
    a: &DMatrix<f64>,
    p: &DMatrix<f64>,
    w: &WeightMatrix,
    source: &SourceConfig,
    opts: &CertifyOptions,
) -> Result<CertificateReport> {
    if a.ncols() != source.n() || p.ncols() != source.n() || w.len() != source.n() {
        return Err(Error::Dimension(format!(
            "source has n = {}, operator has {} columns",
            source.n(),
            a.ncols()
        )));
    }
    let cc = check_c1_c2(p, w, source)?;
    let (dual_certificate, nbp1, nbp2, valid) = if cc.c1_feasible {
        let c = induced_certificate(source, &cc.a);
        let v = verify_dual_certificate(p, w, source, &c, opts.cert_tol);
        (Some(c), Some(v.nbp1_residual), Some(v.nbp2_margin), v.valid)
    } else {
        (None, None, None, false)
    };
    let inj = check_injective_on_support(a, source.support(), opts.inj_tol);
    let dis = check_disjoint_supports(p, source.support(), opts.supp_tol);
    Ok(CertificateReport {
        support: source.support().to_vec(),
        c1_feasible: cc.c1_feasible,
        a: cc.a,
        c2_margin: cc.c2_margin,
        c2_pass: cc.c2_pass,
        alpha_max: cc.alpha_max,
        dual_certificate,
        nbp1_residual: nbp1,
        nbp2_margin: nbp2,
        certificate_valid: valid,
        injective_on_support: inj.injective,
        sigma_min_support: inj.sigma_min,
        disjoint: dis.disjoint,
        overlap: dis.overlap,
        ortho_members: source
            .support()
            .iter()
            .map(|&j| check_orthocomplement(p, j, opts.ortho_tol))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::weight_matrix;

    fn example_p() -> DMatrix<f64> {
        let v = DVector::from_column_slice(&[1.0, 1.0, -1.0]);
        DMatrix::identity(3, 3) - &v * v.transpose() / 3.0
    }

    fn example_a() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0])
    }

    #[test]
    fn source_config_validation() {
        assert!(SourceConfig::new(3, vec![0, 0], vec![1.0, 2.0]).is_err());
        assert!(SourceConfig::new(3, vec![3], vec![1.0]).is_err());
        assert!(SourceConfig::new(3, vec![1], vec![0.0]).is_err());
        let s = SourceConfig::new(4, vec![2, 0], vec![1.0, -3.0]).unwrap();
        assert_eq!(s.complement(), vec![1, 3]);
        assert_eq!(s.to_dense(), vec![-3.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn parallel_columns() {
        assert!(check_parallel_columns(&DMatrix::identity(3, 3), DEFAULT_ANGLE_TOL)
            .pairs
            .is_empty());
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 3.0, 0.0, 2.0, 6.0, 1.0]);
        assert_eq!(check_parallel_columns(&a, DEFAULT_ANGLE_TOL).pairs, vec![(0, 1)]);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(check_parallel_columns(&z, DEFAULT_ANGLE_TOL).zero_columns, vec![1]);
    }

    #[test]
    fn max_property() {
        let i = DMatrix::identity(3, 3);
        let r = check_max_property(&i, &WeightMatrix::identity(3));
        assert!(r.entries.iter().all(|e| e.pass && e.margin == 1.0));
        let p = example_p();
        let w = weight_matrix(&p, 1e-8).unwrap();
        let e = check_max_property(&p, &w).entries[2];
        assert!(e.pass && e.argmax == 2);
        assert!((e.value - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((e.margin - (2.0 / 6f64.sqrt() - 1.0 / 6f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn c1_c2_single_source() {
        let p = example_p();
        let w = weight_matrix(&p, 1e-8).unwrap();
        let src = SourceConfig::new(3, vec![2], vec![1.0]).unwrap();
        let r = check_c1_c2(&p, &w, &src).unwrap();
        assert!(r.c1_feasible && r.c2_pass);
        assert!((r.a[0] - 3.0 / 6f64.sqrt()).abs() < 1e-14);
        assert!((r.c2_margin.unwrap() - 0.5).abs() < 1e-14);
        assert!((r.alpha_max - 6f64.sqrt() / 3.0).abs() < 1e-14);
        let neg = SourceConfig::new(3, vec![2], vec![-4.0]).unwrap();
        let r = check_c1_c2(&p, &w, &neg).unwrap();
        assert!((r.a[0] + 3.0 / 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn singular_sign_system_is_inconclusive() {
        let p = DMatrix::from_element(2, 2, 0.5);
        let w = weight_matrix(&p, 1e-8).unwrap();
        let src = SourceConfig::new(2, vec![0, 1], vec![1.0, 1.0]).unwrap();
        let r = check_c1_c2(&p, &w, &src).unwrap();
        assert!(!r.c1_feasible && !r.c2_pass);
    }

    #[test]
    fn dual_certificates() {
        let p = example_p();
        let w = weight_matrix(&p, 1e-8).unwrap();
        let src = SourceConfig::new(3, vec![2], vec![1.0]).unwrap();
        let zero = verify_dual_certificate(&p, &w, &src, &[0.0; 3], DEFAULT_CERT_TOL);
        assert_eq!(zero.nbp1_residual, 1.0);
        assert!(!zero.valid);
        let cc = check_c1_c2(&p, &w, &src).unwrap();
        let v = verify_dual_certificate(&p, &w, &src, &induced_certificate(&src, &cc.a), DEFAULT_CERT_TOL);
        assert!(v.valid && v.nbp1_residual < 1e-14);
    }

    #[test]
    fn disjoint_supports() {
        let p = example_p();
        assert!(!check_disjoint_supports(&p, &[0, 2], DEFAULT_SUPP_TOL).disjoint);
        let mut blocks = DMatrix::zeros(4, 4);
        blocks.view_mut((0, 0), (2, 2)).fill(0.5);
        blocks.view_mut((2, 2), (2, 2)).fill(0.5);
        let r = check_disjoint_supports(&blocks, &[0, 3], DEFAULT_SUPP_TOL);
        assert!(r.disjoint && r.overlap[0][1] == 0.0);
    }

    #[test]
    fn orthocomplement() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((0..3).all(|j| check_orthocomplement(&i, j, DEFAULT_ORTHO_TOL).member));
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 0.0]));
        let m = check_orthocomplement(&d, 2, DEFAULT_ORTHO_TOL);
        assert!(!m.member && m.norm == 0.0);
    }

    #[test]
    fn injectivity() {
        let r = check_injective_on_support(&DMatrix::identity(3, 3), &[0, 2], DEFAULT_INJ_TOL);
        assert!(r.injective && (r.sigma_min - 1.0).abs() < 1e-15);
        let r = check_injective_on_support(&example_a(), &[0, 2], DEFAULT_INJ_TOL);
        assert!((r.sigma_min - ((3.0 - 5f64.sqrt()) / 2.0).sqrt()).abs() < 1e-14);
        let dup = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 1.0]);
        assert!(!check_injective_on_support(&dup, &[0, 1], DEFAULT_INJ_TOL).injective);
    }

    #[test]
    fn sign_consistency() {
        let src = SourceConfig::new(3, vec![0, 2], vec![1.0, -2.0]).unwrap();
        assert!(check_sign_consistency(&src.to_dense(), &src, 1e-8));
        let neg: Vec<f64> = src.to_dense().iter().map(|v| -v).collect();
        assert!(!check_sign_consistency(&neg, &src, 1e-8));
        assert!(!check_sign_consistency(&[0.0, 0.5, 0.0], &src, 1e-8));
        assert!(check_sign_consistency(&[0.0, 1e-9, 0.0], &src, 1e-8));
    }

    #[test]
    fn full_report_serializes() {
        let p = example_p();
        let w = weight_matrix(&p, 1e-8).unwrap();
        let src = SourceConfig::new(3, vec![2], vec![1.0]).unwrap();
        let r = certify(&example_a(), &p, &w, &src, &CertifyOptions::default()).unwrap();
        assert!(r.recovery_certified() && r.certificate_valid);
        let json: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert!((json["c2_margin"].as_f64().unwrap() - 0.5).abs() < 1e-14);
        assert!(r.to_table().contains("C.2"));
    }
}
