use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use srcid::certify::{
    certify, check_c1_c2, check_disjoint_supports, check_orthocomplement, check_parallel_columns,
    check_sign_consistency, disjoint_certificate, induced_certificate, verify_dual_certificate, CertifyOptions,
    SourceConfig, DEFAULT_ANGLE_TOL, DEFAULT_CERT_TOL, DEFAULT_ORTHO_TOL, DEFAULT_SUPP_TOL,
};
use srcid::solvers::{predicted_solution, solve_weighted_lasso, SolveRequest};
use srcid::spectral::{decompose, weight_matrix, WeightMatrix, DEFAULT_RANK_TOL, DEFAULT_WEIGHT_FLOOR};

fn gaussian(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn signed(rng: &mut ChaCha20Rng) -> f64 {
    rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }
}

/// Random operator with its projection, weights and a source of 1-3 entries.
fn random_setup(seed: u64) -> (DMatrix<f64>, DMatrix<f64>, WeightMatrix, SourceConfig) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let m = rng.random_range(4..=8);
    let n = rng.random_range(m + 2..=14);
    let a = gaussian(&mut rng, m, n);
    let sm = decompose(&a, DEFAULT_RANK_TOL).unwrap();
    let p = sm.projection(sm.rank()).unwrap();
    let w = weight_matrix(&p, DEFAULT_WEIGHT_FLOOR).unwrap();
    let size = rng.random_range(1..=3);
    let mut support = sample(&mut rng, n, size).into_vec();
    support.sort_unstable();
    let values = support.iter().map(|_| signed(&mut rng)).collect();
    (a, p, w, SourceConfig::new(n, support, values).unwrap())
}

/// Block-diagonal projection with one source per block.
fn block_setup(seed: u64) -> (DMatrix<f64>, WeightMatrix, SourceConfig) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = (0..rng.random_range(2..=4)).map(|_| rng.random_range(3..=6)).collect();
    let n = sizes.iter().sum();
    let mut p = DMatrix::zeros(n, n);
    let (mut support, mut values, mut offset) = (Vec::new(), Vec::new(), 0);
    for &size in &sizes {
        let rank = rng.random_range(2..size);
        let q = gaussian(&mut rng, size, rank).qr().q();
        p.view_mut((offset, offset), (size, size))
            .copy_from(&(&q * q.transpose()));
        support.push(offset + rng.random_range(0..size));
        values.push(signed(&mut rng));
        offset += size;
    }
    let w = weight_matrix(&p, DEFAULT_WEIGHT_FLOOR).unwrap();
    (p, w, SourceConfig::new(n, support, values).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certificate_depends_only_on_signs(seed in any::<u64>(), factors in prop::collection::vec(0.1f64..10.0, 3)) {
        let (_, p, w, source) = random_setup(seed);
        let scaled = source.rescaled(&factors[..source.support().len()]).unwrap();
        let a = check_c1_c2(&p, &w, &source).unwrap();
        let b = check_c1_c2(&p, &w, &scaled).unwrap();
        prop_assert_eq!(a.c1_feasible, b.c1_feasible);
        prop_assert_eq!(a.c2_pass, b.c2_pass);
        prop_assert_eq!(&a.a, &b.a);
        prop_assert_eq!(a.c2_margin, b.c2_margin);
    }

    #[test]
    fn passing_conditions_induce_a_valid_dual_certificate(seed in any::<u64>()) {
        let (_, p, w, source) = random_setup(seed);
        let cc = check_c1_c2(&p, &w, &source).unwrap();
        prop_assume!(cc.c1_feasible);
        let cert = verify_dual_certificate(&p, &w, &source, &induced_certificate(&source, &cc.a), DEFAULT_CERT_TOL);
        prop_assert!(cert.nbp1_residual <= DEFAULT_CERT_TOL);
        prop_assert!((cert.nbp2_margin - cc.c2_margin.unwrap()).abs() <= 1e-12);
        prop_assert_eq!(cert.valid, cc.c2_pass);
    }

    #[test]
    fn disjoint_projections_certify_with_inverse_weights(seed in any::<u64>()) {
        let (p, w, source) = block_setup(seed);
        prop_assert!(check_disjoint_supports(&p, source.support(), DEFAULT_SUPP_TOL).disjoint);
        let cc = check_c1_c2(&p, &w, &source).unwrap();
        prop_assert!(cc.c1_feasible && cc.c2_pass);
        for ((&j, s), aj) in source.support().iter().zip(source.signs()).zip(&cc.a) {
            prop_assert!((aj - s / w.w[j]).abs() <= 1e-10 * aj.abs());
        }
        let cert = verify_dual_certificate(&p, &w, &source, &disjoint_certificate(&p, &w, &source), DEFAULT_CERT_TOL);
        prop_assert!(cert.valid);
    }

    #[test]
    fn certified_sources_give_the_closed_form(seed in any::<u64>(), frac in 0.05f64..0.95) {
        let (a, p, w, source) = random_setup(seed);
        let report = certify(&a, &p, &w, &source, &CertifyOptions::default()).unwrap();
        prop_assume!(report.recovery_certified() && report.alpha_max.is_finite());
        prop_assert!(report.certificate_valid);
        let alpha = frac * report.alpha_max;
        let d: Vec<f64> = (&p * DVector::from_column_slice(&source.to_dense())).iter().copied().collect();
        let x = solve_weighted_lasso(&SolveRequest::new(&p, &d, &w, alpha)).unwrap().x;
        let y = predicted_solution(&source, &report.a, alpha).y;
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((xi - yi).abs() <= 1e-6);
        }
        prop_assert!(check_sign_consistency(&x, &source, 1e-6 * source.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    }
}

#[test]
fn range_members_are_orthocomplement_members() {
    // Span of e_0 plus a random plane in the remaining coordinates.
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut basis = DMatrix::zeros(6, 3);
    basis[(0, 0)] = 1.0;
    let rest = gaussian(&mut rng, 5, 2).qr().q();
    basis.view_mut((1, 1), (5, 2)).copy_from(&rest);
    let p = &basis * basis.transpose();
    let member = check_orthocomplement(&p, 0, DEFAULT_ORTHO_TOL);
    assert!(member.member);
    assert!((member.norm - 1.0).abs() < 1e-12);
    let e0 = p.column(0);
    assert!((e0[0] - 1.0).abs() < 1e-12 && e0.rows(1, 5).amax() < 1e-12);
    for j in 1..6 {
        let other = check_orthocomplement(&p, j, DEFAULT_ORTHO_TOL);
        assert_eq!(other.member, other.norm >= 1.0 - DEFAULT_ORTHO_TOL);
        assert!(other.norm < 1.0 + 1e-12);
    }
}

#[test]
fn duplicated_columns_are_flagged() {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut a = gaussian(&mut rng, 4, 7);
    let col = a.column(1) * -2.5;
    a.set_column(5, &col);
    a.column_mut(3).fill(0.0);
    let par = check_parallel_columns(&a, DEFAULT_ANGLE_TOL);
    assert_eq!(par.pairs, vec![(1, 5)]);
    assert_eq!(par.zero_columns, vec![3]);
    assert_eq!(par.flagged().into_iter().collect::<Vec<_>>(), vec![1, 3, 5]);
}

#[test]
fn parallel_pair_breaks_the_strict_margin() {
    // A source whose column has a parallel twin: the twin sits exactly on
    // the boundary of the dual certificate.
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut a = gaussian(&mut rng, 4, 8);
    let twin = a.column(2) * 3.0;
    a.set_column(6, &twin);
    let sm = decompose(&a, DEFAULT_RANK_TOL).unwrap();
    let p = sm.projection(sm.rank()).unwrap();
    let w = weight_matrix(&p, DEFAULT_WEIGHT_FLOOR).unwrap();
    let source = SourceConfig::new(8, vec![2], vec![1.0]).unwrap();
    let cc = check_c1_c2(&p, &w, &source).unwrap();
    assert!(cc.c1_feasible);
    assert!((cc.c2_margin.unwrap() - 1.0).abs() < 1e-10);
}
