use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use srcid::certify::{certify, CertifyOptions, SourceConfig};
use srcid::forward::{assemble, build_forward_matrix, read_matrix_market};
use srcid::harness::{export_artifacts, run_example, ExampleConfig, Formulation, InverseModel};
use srcid::mesh::{build_domain, ConductivityField, CrossGeometry, DomainSpec, Grading, Mesh};
use srcid::solvers::{solve_weighted_bp, BpOptions, SolveRequest, SolveStatus};
use srcid::spectral::{decompose, weight_matrix, WeightMatrix, DEFAULT_RANK_TOL, DEFAULT_WEIGHT_FLOOR};
use srcid::{Error, Result};

#[derive(Parser)]
#[command(
    name = "srcid",
    version,
    about = "Sparse source/sink identification from Neumann boundary data"
)]
struct Cli {
    /// TOML file whose keys override the example defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for noise synthesis (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or refine triangulations.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Assemble the forward matrix of a mesh.
    #[command(subcommand)]
    Forward(ForwardCommand),
    /// Singular values and numerical rank of a matrix.
    #[command(subcommand)]
    Spectral(SpectralCommand),
    /// Weighted l1 solves.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Run the recoverability checks for a source configuration.
    Certify(CertifyArgs),
    /// Reference experiments.
    #[command(subcommand)]
    Example(ExampleCommand),
    /// Convergence-rate study (example 3).
    Convergence,
}

#[derive(Subcommand)]
enum MeshCommand {
    Build {
        #[arg(long, value_enum, default_value = "unit-square")]
        domain: DomainArg,
        #[arg(long, default_value_t = 8)]
        divisions: usize,
        #[arg(long)]
        grading_seed: Option<u64>,
    },
    Refine {
        mesh: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    UnitSquare,
    Cross,
}

#[derive(Subcommand)]
enum ForwardCommand {
    Assemble {
        mesh: PathBuf,
        /// A positive constant, or `sinusoidal` for 2 + sin(x) cos(y).
        #[arg(long, default_value = "1")]
        sigma: String,
        #[arg(long, default_value_t = 2)]
        quadrature: usize,
    },
}

#[derive(Subcommand)]
enum SpectralCommand {
    Svd {
        /// Matrix Market file.
        matrix: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Matrix Market file with the forward matrix.
    matrix: PathBuf,
    /// Whitespace-separated observation vector.
    data: PathBuf,
    /// Truncation level for the weights (defaults to the numerical rank).
    #[arg(long)]
    k: Option<usize>,
    /// Use unit weights instead of `||P e_i||`.
    #[arg(long)]
    unweighted: bool,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: bool,
}

#[derive(Subcommand)]
enum SolveCommand {
    /// min ||W x||_1 subject to A x = b.
    Bp(ProblemArgs),
    /// min 1/2 ||G x - d||^2 + alpha ||W x||_1.
    Lasso {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "form-a")]
        formulation: FormulationArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    FormA,
    FormAd,
}

#[derive(Args)]
struct CertifyArgs {
    /// Matrix Market file with the forward matrix.
    matrix: PathBuf,
    /// Comma-separated `index:value` pairs (zero-based indices).
    #[arg(long)]
    support: String,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum ExampleCommand {
    Run { id: u8 },
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for infeasible data.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    match &cli.command {
        Command::Mesh(MeshCommand::Build {
            domain,
            divisions,
            grading_seed,
        }) => {
            let spec = match domain {
                DomainArg::UnitSquare => DomainSpec::unit_square(*divisions),
                DomainArg::Cross => DomainSpec::cross(CrossGeometry::default(), *divisions),
            };
            let spec = match grading_seed {
                Some(s) => spec.with_grading(Grading::new(*s)),
                None => spec,
            };
            let mesh = build_domain(&spec)?;
            save_mesh(&mesh, &cli.out.join("mesh.txt"))?;
        }
        Command::Mesh(MeshCommand::Refine { mesh }) => {
            let fine = Mesh::load(mesh)?.refine()?;
            save_mesh(&fine, &cli.out.join("mesh_refined.txt"))?;
        }
        Command::Forward(ForwardCommand::Assemble {
            mesh,
            sigma,
            quadrature,
        }) => {
            let mesh = Mesh::load(mesh)?;
            let field = parse_sigma(sigma)?;
            let model = build_forward_matrix(&assemble(&mesh, &field, *quadrature)?)?;
            model.save(&cli.out, "forward")?;
            println!(
                "forward matrix {} x {} written to {}",
                model.m(),
                model.n(),
                cli.out.join("forward.mtx").display()
            );
        }
        Command::Spectral(SpectralCommand::Svd { matrix, rank_tol }) => {
            let spec = decompose(&load_matrix(matrix)?, *rank_tol)?;
            let path = cli.out.join("singular_values.csv");
            write_file(&path, &spec.singular_values_csv())?;
            println!(
                "rank {} of {} singular values (sigma_max {:e}); written to {}",
                spec.rank(),
                spec.singular_values().len(),
                spec.sigma_max(),
                path.display()
            );
        }
        Command::Solve(SolveCommand::Bp(args)) => {
            let (a, b) = (load_matrix(&args.matrix)?, load_vector(&args.data)?);
            let weights = weights_for(&a, args.k, args.unweighted)?;
            let mut req = SolveRequest::new(&a, &b, &weights, 0.0);
            req.record_trace = args.trace;
            let result = solve_weighted_bp(&req, &BpOptions::default())?;
            write_solution(cli, &result)?;
            if result.status == SolveStatus::Infeasible {
                eprintln!("data is not in the range of the matrix");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Solve(SolveCommand::Lasso {
            problem,
            alpha,
            formulation,
        }) => {
            let (a, b) = (load_matrix(&problem.matrix)?, load_vector(&problem.data)?);
            let result = match formulation {
                FormulationArg::FormA => {
                    let weights = weights_for(&a, problem.k, problem.unweighted)?;
                    let mut req = SolveRequest::new(&a, &b, &weights, *alpha);
                    req.record_trace = problem.trace;
                    srcid::solvers::solve_weighted_lasso(&req)?
                }
                FormulationArg::FormAd => {
                    let spec = decompose(&a, DEFAULT_RANK_TOL)?;
                    let k = problem.k.unwrap_or(spec.rank());
                    let model = InverseModel::new(
                        srcid::forward::ForwardModel {
                            trace_order: (0..a.nrows()).collect(),
                            boundary_mass: vec![1.0; a.nrows()],
                            a: a.clone(),
                        },
                        k,
                        DEFAULT_RANK_TOL,
                        DEFAULT_WEIGHT_FLOOR,
                    )?;
                    let weights = if problem.unweighted {
                        WeightMatrix::identity(a.ncols())
                    } else {
                        model.weights.clone()
                    };
                    let (g, d) = model.fidelity(Formulation::FormAd, &b)?;
                    let mut req = SolveRequest::new(g, &d, &weights, *alpha);
                    req.record_trace = problem.trace;
                    srcid::solvers::solve_weighted_lasso(&req)?
                }
            };
            write_solution(cli, &result)?;
        }
        Command::Certify(args) => {
            let a = load_matrix(&args.matrix)?;
            let spec = decompose(&a, DEFAULT_RANK_TOL)?;
            let p = spec.projection(args.k.unwrap_or(spec.rank()))?;
            let w = weight_matrix(&p, DEFAULT_WEIGHT_FLOOR)?;
            let source = parse_support(&args.support, a.ncols())?;
            let report = certify(&a, &p, &w, &source, &CertifyOptions::default())?;
            print!("{}", report.to_table());
            write_file(
                &cli.out.join("certificate.json"),
                &serde_json::to_string_pretty(&report)?,
            )?;
        }
        Command::Example(ExampleCommand::Run { id }) => run_and_export(cli, *id)?,
        Command::Convergence => run_and_export(cli, 3)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn run_and_export(cli: &Cli, id: u8) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExampleConfig::load(id, path)?,
        None => ExampleConfig::defaults(id)?,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let bundle = run_example(&config)?;
    let dir = cli.out.join(format!("example{id}"));
    let files = export_artifacts(&bundle, &dir)?;
    println!(
        "example {id} ({}): m = {}, n = {}, rank = {}",
        bundle.name, bundle.m, bundle.n, bundle.rank
    );
    if let Some(cert) = &bundle.certificate {
        print!("{}", cert.to_table());
    }
    for s in &bundle.solutions {
        println!(
            "{:<24} alpha {:<8e} iterations {:<7} true support detected {:<5} dominant entries match {}",
            s.label,
            s.alpha,
            s.result.iterations,
            s.support.all_detected(),
            s.support.positions_recovered
        );
    }
    for m in &bundle.morozov {
        println!(
            "Morozov at noise {}: alpha = {:e}{}",
            m.noise_level,
            m.selection.alpha,
            if m.selection.flagged { " (flagged)" } else { "" }
        );
    }
    for study in &bundle.convergence {
        println!(
            "{}: slope {:.3}, R^2 {:.3}",
            study.formulation.label(),
            study.fit.slope,
            study.fit.r_squared
        );
    }
    for note in &bundle.notes {
        println!("note: {note}");
    }
    println!("{} files written to {}", files.len(), dir.display());
    Ok(())
}

fn save_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    mesh.save(path)?;
    println!(
        "{} vertices, {} triangles, {} boundary nodes, h_max {:.4}; written to {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.boundary_nodes().len(),
        mesh.h_max(),
        path.display()
    );
    Ok(())
}

fn parse_sigma(s: &str) -> Result<ConductivityField> {
    if s == "sinusoidal" {
        return Ok(ConductivityField::sinusoidal());
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Argument(format!("conductivity `{s}` is neither a number nor `sinusoidal`")))?;
    Ok(ConductivityField::constant(v))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix_market(&read_text(path)?)
}

fn load_vector(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            out.push(tok.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("`{tok}` is not a number"),
            })?);
        }
    }
    Ok(out)
}

fn weights_for(a: &DMatrix<f64>, k: Option<usize>, unweighted: bool) -> Result<WeightMatrix> {
    if unweighted {
        return Ok(WeightMatrix::identity(a.ncols()));
    }
    let spec = decompose(a, DEFAULT_RANK_TOL)?;
    let p = spec.projection(k.unwrap_or(spec.rank()))?;
    weight_matrix(&p, DEFAULT_WEIGHT_FLOOR)
}

fn parse_support(text: &str, n: usize) -> Result<SourceConfig> {
    let mut support = Vec::new();
    let mut values = Vec::new();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let (i, v) = item
            .split_once(':')
            .ok_or_else(|| Error::Argument(format!("`{item}` is not `index:value`")))?;
        support.push(
            i.trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad index `{i}`")))?,
        );
        values.push(
            v.trim()
                .parse()
                .map_err(|_| Error::Argument(format!("bad value `{v}`")))?,
        );
    }
    SourceConfig::new(n, support, values)
}

fn write_solution(cli: &Cli, result: &srcid::solvers::SolveResult) -> Result<()> {
    let path = cli.out.join("solution.json");
    write_file(&path, &serde_json::to_string_pretty(result)?)?;
    if !result.trace.is_empty() {
        write_file(&cli.out.join("trace.csv"), &result.trace_csv())?;
    }
    println!(
        "status {:?}, objective {:e}, residual {:e}, {} iterations; written to {}",
        result.status,
        result.objective,
        result.residual_norm,
        result.iterations,
        path.display()
    );
    Ok(())
}
