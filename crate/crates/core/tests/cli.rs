use std::path::Path;
use std::process::{Command, Output};

fn srcid(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srcid"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mesh_forward_spectral_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = srcid(
        out,
        &[
            "mesh",
            "build",
            "--domain",
            "cross",
            "--divisions",
            "3",
            "--grading-seed",
            "2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mesh = out.join("mesh.txt");
    assert!(mesh.exists());

    assert_eq!(code(&srcid(out, &["mesh", "refine", path(&mesh)])), 0);
    let coarse = srcid::mesh::Mesh::load(&mesh).unwrap();
    let fine = srcid::mesh::Mesh::load(out.join("mesh_refined.txt")).unwrap();
    assert_eq!(fine.n_triangles(), 4 * coarse.n_triangles());

    let o = srcid(out, &["forward", "assemble", path(&mesh), "--sigma", "sinusoidal"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mtx = out.join("forward.mtx");
    let a = srcid::forward::read_matrix_market(&std::fs::read_to_string(&mtx).unwrap()).unwrap();
    assert_eq!(
        (a.nrows(), a.ncols()),
        (coarse.boundary_nodes().len(), coarse.n_vertices())
    );

    assert_eq!(code(&srcid(out, &["spectral", "svd", path(&mtx)])), 0);
    let sv = std::fs::read_to_string(out.join("singular_values.csv")).unwrap();
    assert!(sv.starts_with("index,value\n"));
    assert_eq!(sv.lines().count(), 1 + a.nrows().min(a.ncols()));
}

fn write_problem(dir: &Path, b: &str) -> (String, String) {
    let a = nalgebra::DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
    let mtx = dir.join("a.mtx");
    std::fs::write(&mtx, srcid::forward::write_matrix_market(&a)).unwrap();
    let data = dir.join("b.txt");
    std::fs::write(&data, b).unwrap();
    (path(&mtx).to_string(), path(&data).to_string())
}

#[test]
fn solvers_write_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let (mtx, data) = write_problem(out, "1 1\n");
    let o = srcid(out, &["solve", "bp", &mtx, &data]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sol: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    let x: Vec<f64> = sol["x"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // b = A e_3 and the weights favour the shared column.
    assert!(
        x[0].abs() < 1e-9 && x[1].abs() < 1e-9 && (x[2] - 1.0).abs() < 1e-9,
        "{x:?}"
    );

    for form in ["form-a", "form-ad"] {
        let o = srcid(
            out,
            &[
                "solve",
                "lasso",
                &mtx,
                &data,
                "--alpha",
                "1e-3",
                "--formulation",
                form,
                "--trace",
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("trace.csv").exists());
    }
}

#[test]
fn certify_prints_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let (mtx, _) = write_problem(out, "1 1\n");
    let o = srcid(out, &["certify", &mtx, "--support", "2:1.0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("alpha_max"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(report["support"], serde_json::json!([2]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&srcid(out, &["--help"])), 0);
    assert_eq!(code(&srcid(out, &["--version"])), 0);
    assert_eq!(code(&srcid(out, &["no-such-command"])), 1);
    assert_eq!(code(&srcid(out, &["mesh", "refine", "missing.txt"])), 1);

    // Rank-1 operator, data outside its range: certified infeasible.
    let a = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    let mtx = out.join("rank1.mtx");
    std::fs::write(&mtx, srcid::forward::write_matrix_market(&a)).unwrap();
    let data = out.join("b.txt");
    std::fs::write(&data, "1 0\n").unwrap();
    assert_eq!(code(&srcid(out, &["solve", "bp", path(&mtx), path(&data)])), 2);

    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "not_a_key = 3\n").unwrap();
    assert_eq!(code(&srcid(out, &["--config", path(&cfg), "example", "run", "0"])), 1);
}

#[test]
fn example_run_exports_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("ex0.toml");
    std::fs::write(&cfg, "divisions = 8\nk = 20\n").unwrap();
    let o = srcid(out, &["--config", path(&cfg), "--seed", "5", "example", "run", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let ex = out.join("example0");
    for f in [
        "results.csv",
        "support.csv",
        "certificates.json",
        "singular_values.csv",
        "heatmap_true.svg",
    ] {
        assert!(ex.join(f).exists(), "{f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ex.join("certificates.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["k"], 20);
    assert_eq!(json["config"]["seed"], 5);
}
