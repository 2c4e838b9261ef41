use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use srcid::forward::{assemble, build_forward_matrix, read_forward, AssembledSystem};
use srcid::mesh::{build_domain, ConductivityField, CrossGeometry, DomainSpec, Grading};

fn system(spec: DomainSpec, sigma: ConductivityField) -> AssembledSystem {
    assemble(&build_domain(&spec).unwrap(), &sigma, 2).unwrap()
}

/// Independent dense solve of the bordered system
/// `[K m; m^T 0] [u; lambda] = [load; 0]`.
fn dense_oracle(sys: &AssembledSystem, load: &[f64]) -> Vec<f64> {
    let n = sys.n_nodes();
    let k = sys.stiffness().to_dense();
    let m = sys.boundary_mass();
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b.view_mut((0, 0), (n, n)).copy_from(&k);
    for i in 0..n {
        b[(i, n)] = m[i];
        b[(n, i)] = m[i];
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from_slice(load);
    let sol = b.lu().solve(&rhs).expect("bordered system is nonsingular");
    sol.rows(0, n).iter().copied().collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn state_solve_matches_dense_oracle() {
    let cases = [
        system(DomainSpec::unit_square(1), ConductivityField::constant(1.0)),
        system(
            DomainSpec::unit_square(5).with_grading(Grading::new(3)),
            ConductivityField::sinusoidal(),
        ),
        system(
            DomainSpec::cross(CrossGeometry::default(), 3),
            ConductivityField::sinusoidal(),
        ),
    ];
    for sys in &cases {
        let n = sys.n_nodes();
        for j in [0, n / 2, n - 1] {
            let mut x = vec![0.0; n];
            x[j] = 1.0;
            let u = sys.solve_state(&x).unwrap();
            let oracle = dense_oracle(sys, &sys.load(&x));
            let err = max_abs(&u.iter().zip(&oracle).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(err <= 1e-12 * max_abs(&oracle).max(1e-300), "column {j}: {err:e}");
        }
    }
}

#[test]
fn forward_matrix_columns_are_state_traces() {
    let sys = system(
        DomainSpec::unit_square(6).with_grading(Grading::new(1)),
        ConductivityField::sinusoidal(),
    );
    let fm = build_forward_matrix(&sys).unwrap();
    let x: Vec<f64> = (0..fm.n()).map(|j| ((j * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let direct = sys.trace(&sys.solve_state(&x).unwrap());
    let via_matrix = fm.apply(&x);
    for (a, b) in direct.iter().zip(&via_matrix) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn unit_square_dimensions() {
    let sys = system(DomainSpec::unit_square(16), ConductivityField::constant(1.0));
    let fm = build_forward_matrix(&sys).unwrap();
    assert_eq!((fm.m(), fm.n()), (64, 289));
    assert_eq!(fm.trace_order, sys.mesh().boundary_nodes());
}

#[test]
fn frame_sum_is_annihilated() {
    // sum_j psi_j = 1 - 1 = 0, so A 1 = 0.
    let sys = system(
        DomainSpec::cross(CrossGeometry::default(), 6).with_grading(Grading::new(5)),
        ConductivityField::sinusoidal(),
    );
    let fm = build_forward_matrix(&sys).unwrap();
    let ones = vec![1.0; fm.n()];
    assert!(max_abs(&fm.apply(&ones)) < 1e-10 * fm.a.amax());
}

#[test]
fn green_matrix_is_symmetric() {
    // The inverse of the symmetric bordered matrix is symmetric, so the
    // response at node k to a unit load at node i equals the converse.
    let sys = system(
        DomainSpec::unit_square(5).with_grading(Grading::new(4)),
        ConductivityField::sinusoidal(),
    );
    let n = sys.n_nodes();
    let green: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut load = vec![0.0; n];
            load[i] = 1.0;
            sys.solve_load(&load).unwrap()
        })
        .collect();
    let scale = green.iter().map(|c| max_abs(c)).fold(0.0, f64::max);
    for i in 0..n {
        for k in 0..i {
            assert!((green[i][k] - green[k][i]).abs() < 1e-10 * scale, "({i},{k})");
        }
    }
}

#[test]
fn scaling_conductivity_scales_data_inversely() {
    let spec = DomainSpec::unit_square(6).with_grading(Grading::new(8));
    let one = build_forward_matrix(&system(spec, ConductivityField::constant(1.0))).unwrap();
    let three = build_forward_matrix(&system(spec, ConductivityField::constant(3.0))).unwrap();
    assert!((&one.a - &three.a * 3.0).amax() < 1e-12 * one.a.amax());
}

#[test]
fn nodal_error_decreases_under_refinement() {
    // -div grad u = f with f = cos(pi x) cos(pi y) has u = f / (2 pi^2), whose
    // boundary integral vanishes.
    let f = |p: [f64; 2]| (PI * p[0]).cos() * (PI * p[1]).cos();
    let errors: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&d| {
            let sys = system(DomainSpec::unit_square(d), ConductivityField::constant(1.0));
            let u = sys.solve_load(&sys.load_from_function(f)).unwrap();
            sys.mesh()
                .vertices()
                .iter()
                .zip(&u)
                .map(|(&p, v)| (v - f(p) / (2.0 * PI * PI)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
    assert!(errors[2] / errors[3] > 3.0, "{errors:?}");
}

#[test]
fn rebuild_is_bitwise_identical() {
    let spec = DomainSpec::cross(CrossGeometry::default(), 5).with_grading(Grading::new(11));
    let a = build_forward_matrix(&system(spec, ConductivityField::sinusoidal())).unwrap();
    let b = build_forward_matrix(&system(spec, ConductivityField::sinusoidal())).unwrap();
    assert_eq!(a.a, b.a);
}

#[test]
fn saved_model_reads_back() {
    let fm = build_forward_matrix(&system(DomainSpec::unit_square(4), ConductivityField::sinusoidal())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    fm.save(dir.path(), "fwd").unwrap();
    let mtx = std::fs::read_to_string(dir.path().join("fwd.mtx")).unwrap();
    let side = std::fs::read_to_string(dir.path().join("fwd.trace")).unwrap();
    let back = read_forward(&mtx, &side).unwrap();
    assert_eq!(back.a, fm.a);
    assert_eq!(back.trace_order, fm.trace_order);
    assert_eq!(back.boundary_mass, fm.boundary_mass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_is_linear_in_the_source(
        x in prop::collection::vec(-1.0f64..1.0, 49),
        y in prop::collection::vec(-1.0f64..1.0, 49),
        s in -3.0f64..3.0,
        t in -3.0f64..3.0,
    ) {
        let sys = system(DomainSpec::unit_square(6).with_grading(Grading::new(2)), ConductivityField::sinusoidal());
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| s * a + t * b).collect();
        let ux = sys.solve_state(&x).unwrap();
        let uy = sys.solve_state(&y).unwrap();
        let uc = sys.solve_state(&combo).unwrap();
        let scale = max_abs(&ux).max(max_abs(&uy)) * (s.abs() + t.abs()) + 1e-12;
        for i in 0..uc.len() {
            prop_assert!((uc[i] - s * ux[i] - t * uy[i]).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn states_satisfy_the_boundary_constraint(x in prop::collection::vec(-1.0f64..1.0, 49)) {
        let sys = system(DomainSpec::unit_square(6).with_grading(Grading::new(6)), ConductivityField::constant(2.0));
        let u = sys.solve_state(&x).unwrap();
        let mean: f64 = u.iter().zip(sys.boundary_mass()).map(|(a, b)| a * b).sum();
        prop_assert!(mean.abs() < 1e-12 * max_abs(&u).max(1e-300));
        prop_assert!(sys.frame().integral(&x).abs() < 1e-12);
    }
}
