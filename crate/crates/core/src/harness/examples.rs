use std::collections::BTreeSet;

use serde::Serialize;

use crate::certify::{certify, check_sign_consistency, CertificateReport, CertifyOptions, SourceConfig};
use crate::error::{Error, Result};
use crate::forward::{assemble, build_forward_matrix, AssembledSystem};
use crate::harness::config::{ExampleConfig, PointSource};
use crate::harness::convergence::{
    convergence_study, default_c, ConvergenceOptions, ConvergenceStudy, DEFAULT_BOUND_FRACTION,
};
use crate::harness::model::{Formulation, InverseModel};
use crate::harness::morozov::{log_grid, morozov_select_alpha, MorozovSelection};
use crate::harness::noise::{add_noise, NoisySpec};
use crate::mesh::{build_domain, Mesh, Refinement};
use crate::solvers::{default_tau, extract_support, LassoProblem, SolveResult, Tolerances};
use crate::spectral::WeightMatrix;

/// Where the clean observation came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// State solved on the refined mesh, read at the coarse boundary nodes.
    FineMesh,
    /// `A x*` with the inversion model itself.
    Model,
}

/// Coarse inversion model plus the refined forward mesh that generates data.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ExampleConfig,
    pub mesh: Mesh,
    pub refinement: Refinement,
    pub system: AssembledSystem,
    pub fine_system: AssembledSystem,
    pub model: InverseModel,
}

impl Scenario {
    pub fn build(config: &ExampleConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_domain(&config.domain_spec())?;
        let refinement = mesh.refine_nested()?;
        let sigma = config.conductivity.field();
        let system = assemble(&mesh, &sigma, config.quadrature_order)?;
        let fine_system = assemble(&refinement.mesh, &sigma, config.quadrature_order)?;
        let forward = build_forward_matrix(&system)?;
        let model = InverseModel::new(forward, config.k, config.rank_tol, config.weight_floor)?;
        Ok(Scenario {
            config: config.clone(),
            mesh,
            refinement,
            system,
            fine_system,
            model,
        })
    }

    /// Boundary data of the frame expansion `x`, generated on the refined
    /// mesh. Coarse vertices keep their indices under nested refinement, so
    /// the trace is read at the coarse boundary nodes directly; the result is
    /// shifted to zero coarse boundary mean to match the model's gauge.
    pub fn fine_data(&self, x: &[f64]) -> Result<Vec<f64>> {
        let nodal = self.system.frame().nodal_values(x);
        let fine_x = self.refinement.prolongate(&nodal);
        let u = self.fine_system.solve_state(&fine_x)?;
        let fm = &self.model.forward;
        let mut b: Vec<f64> = fm.trace_order.iter().map(|&i| u[i]).collect();
        let total: f64 = fm.boundary_mass.iter().sum();
        let mean = b.iter().zip(&fm.boundary_mass).map(|(v, w)| v * w).sum::<f64>() / total;
        b.iter_mut().for_each(|v| *v -= mean);
        Ok(b)
    }

    pub fn model_data(&self, x: &[f64]) -> Vec<f64> {
        self.model.forward.apply(x)
    }

    /// Sources of the configuration, snapped to vertices, plus the boundary
    /// selection when a threshold is configured.
    pub fn source_config(&self) -> Result<SourceConfig> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        if let Some(threshold) = self.config.boundary_threshold {
            let mut sign = 1.0;
            for &j in self.mesh.boundary_nodes() {
                if self.model.weights.w[j] >= threshold {
                    entries.push((j, sign));
                    sign = -sign;
                }
            }
        }
        let boundary = self.mesh.is_boundary();
        for s in &self.config.sources {
            let j = nearest_vertex(&self.mesh, &boundary, s)?;
            if entries.iter().any(|e| e.0 == j) {
                return Err(Error::Config(format!(
                    "source at ({}, {}) snaps to an occupied vertex {j}",
                    s.x, s.y
                )));
            }
            entries.push((j, s.value));
        }
        if self.config.composite_rings > 0 {
            entries = spread(&self.mesh, &entries, self.config.composite_rings)?;
        }
        entries.sort_by_key(|e| e.0);
        let (support, values) = entries.into_iter().unzip();
        SourceConfig::new(self.model.n(), support, values)
    }
}

fn nearest_vertex(mesh: &Mesh, boundary: &[bool], s: &PointSource) -> Result<usize> {
    mesh.vertices()
        .iter()
        .enumerate()
        .filter(|(j, _)| boundary[*j] == s.boundary)
        .min_by(|(_, p), (_, q)| {
            let dp = (p[0] - s.x).hypot(p[1] - s.y);
            let dq = (q[0] - s.x).hypot(q[1] - s.y);
            dp.total_cmp(&dq)
        })
        .map(|(j, _)| j)
        .ok_or_else(|| Error::Config(format!("no admissible vertex for source at ({}, {})", s.x, s.y)))
}

/// Replaces every point source by the vertices within `rings` edges of it,
/// each carrying the same value.
fn spread(mesh: &Mesh, entries: &[(usize, f64)], rings: usize) -> Result<Vec<(usize, f64)>> {
    let mut adjacency = vec![BTreeSet::new(); mesh.n_vertices()];
    for t in mesh.triangles() {
        for a in 0..3 {
            adjacency[t[a]].insert(t[(a + 1) % 3]);
            adjacency[t[(a + 1) % 3]].insert(t[a]);
        }
    }
    let mut out: Vec<(usize, f64)> = Vec::new();
    for &(centre, value) in entries {
        let mut patch = BTreeSet::from([centre]);
        for _ in 0..rings {
            let next: Vec<usize> = patch.iter().flat_map(|&v| adjacency[v].iter().copied()).collect();
            patch.extend(next);
        }
        for v in patch {
            if out.iter().any(|e| e.0 == v) {
                return Err(Error::Config(format!("composite sources overlap at vertex {v}")));
            }
            out.push((v, value));
        }
    }
    Ok(out)
}

/// Recovered versus true support of one solution.
#[derive(Clone, Debug, Serialize)]
pub struct SupportComparison {
    pub tau: f64,
    pub recovered: Vec<usize>,
    /// Per true index: above `tau` with the correct sign.
    pub detected: Vec<bool>,
    pub exact: bool,
    pub sign_consistent: bool,
    /// The `|J|` largest entries in magnitude.
    pub dominant: Vec<usize>,
    /// `dominant` equals the true support and carries the true signs.
    pub positions_recovered: bool,
    /// `||x_{J^c}||_1 / ||x||_1`.
    pub off_support_fraction: f64,
}

impl SupportComparison {
    pub fn new(x: &[f64], source: &SourceConfig) -> Self {
        let tau = default_tau(x);
        let recovered = extract_support(x, tau);
        let truth = source.to_dense();
        let detected = source
            .support()
            .iter()
            .map(|&j| x[j].abs() > tau && x[j].signum() == truth[j].signum())
            .collect();
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
        let mut dominant: Vec<usize> = order[..source.support().len()].to_vec();
        dominant.sort_unstable();
        let positions_recovered =
            dominant == source.support() && dominant.iter().all(|&j| x[j].signum() == truth[j].signum());
        let total: f64 = x.iter().map(|v| v.abs()).sum();
        let off: f64 = source.complement().iter().map(|&j| x[j].abs()).sum();
        SupportComparison {
            tau,
            exact: recovered == source.support(),
            recovered,
            detected,
            sign_consistent: check_sign_consistency(x, source, tau),
            dominant,
            positions_recovered,
            off_support_fraction: if total > 0.0 { off / total } else { 0.0 },
        }
    }

    pub fn all_detected(&self) -> bool {
        self.detected.iter().all(|&d| d)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionRecord {
    pub label: String,
    pub weighted: bool,
    pub formulation: Formulation,
    pub data: DataSource,
    pub noise_level: f64,
    pub alpha: f64,
    pub result: SolveResult,
    pub support: SupportComparison,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleBundle {
    pub id: u8,
    pub name: String,
    pub config: ExampleConfig,
    #[serde(skip)]
    pub mesh: Option<Mesh>,
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub source: SourceSummary,
    pub certificate: Option<CertificateReport>,
    #[serde(skip)]
    pub singular_values: Vec<f64>,
    pub noise: Vec<NoisySpec>,
    pub morozov: Vec<MorozovRecord>,
    pub solutions: Vec<SolutionRecord>,
    pub convergence: Vec<ConvergenceStudy>,
    pub notes: Vec<String>,
}

impl ExampleBundle {
    /// Bundle with no solutions, used for artifact plumbing.
    pub fn empty(id: u8, name: impl Into<String>) -> Result<Self> {
        Ok(ExampleBundle {
            id,
            name: name.into(),
            config: ExampleConfig::defaults(id)?,
            mesh: None,
            m: 0,
            n: 0,
            rank: 0,
            source: SourceSummary::default(),
            certificate: None,
            singular_values: Vec::new(),
            noise: Vec::new(),
            morozov: Vec::new(),
            solutions: Vec::new(),
            convergence: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn solution(&self, label: &str) -> Option<&SolutionRecord> {
        self.solutions.iter().find(|s| s.label == label)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SourceSummary {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub coordinates: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub on_boundary: Vec<bool>,
    #[serde(skip)]
    pub dense: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MorozovRecord {
    pub noise_level: f64,
    /// Norm of the noise as seen by the fidelity term.
    pub fidelity_delta: f64,
    pub selection: MorozovSelection,
}

struct Runner<'a> {
    scenario: &'a Scenario,
    source: SourceConfig,
    tolerances: Tolerances,
    identity: WeightMatrix,
    solutions: Vec<SolutionRecord>,
}

struct SolveSpec<'s> {
    label: &'s str,
    weighted: bool,
    formulation: Formulation,
    data: DataSource,
    noise_level: f64,
    alpha: f64,
}

impl Runner<'_> {
    fn solve(&mut self, spec: SolveSpec<'_>, b: &[f64]) -> Result<()> {
        let weights = if spec.weighted {
            &self.scenario.model.weights
        } else {
            &self.identity
        };
        let result = self
            .scenario
            .model
            .solve(spec.formulation, b, weights, spec.alpha, &self.tolerances)
            .map_err(|source| Error::AtAlpha {
                alpha: spec.alpha,
                source: Box::new(source),
            })?;
        let support = SupportComparison::new(&result.x, &self.source);
        self.solutions.push(SolutionRecord {
            label: spec.label.to_string(),
            weighted: spec.weighted,
            formulation: spec.formulation,
            data: spec.data,
            noise_level: spec.noise_level,
            alpha: spec.alpha,
            result,
            support,
        });
        Ok(())
    }
}

/// Builds and runs one reference experiment.
pub fn run_example(config: &ExampleConfig) -> Result<ExampleBundle> {
    let scenario = Scenario::build(config)?;
    run_scenario(&scenario)
}

pub fn run_scenario(scenario: &Scenario) -> Result<ExampleBundle> {
    let config = &scenario.config;
    let model = &scenario.model;
    let source = scenario.source_config()?;
    let p = model.projection();
    let certificate = certify(
        &model.forward.a,
        &p,
        &model.weights,
        &source,
        &CertifyOptions::default(),
    )?;
    drop(p);

    let x_true = source.to_dense();
    let mut runner = Runner {
        scenario,
        source: source.clone(),
        tolerances: Tolerances::default(),
        identity: WeightMatrix::identity(model.n()),
        solutions: Vec::new(),
    };
    let mut noise = Vec::new();
    let mut morozov = Vec::new();
    let mut convergence = Vec::new();
    let mut notes = Vec::new();

    if config.id == 3 {
        let opts = ConvergenceOptions {
            seed: config.seed,
            tolerances: runner.tolerances,
        };
        for (formulation, c) in [
            (Formulation::FormA, config.convergence_c_form_a),
            (Formulation::FormAd, config.convergence_c_form_ad),
        ] {
            let c = match c {
                Some(c) => c,
                None => default_c(
                    model,
                    &source,
                    formulation,
                    &config.convergence_deltas,
                    DEFAULT_BOUND_FRACTION,
                )?,
            };
            let study = convergence_study(model, &source, c, &config.convergence_deltas, formulation, &opts)?;
            notes.extend(study.warnings.iter().cloned());
            convergence.push(study);
        }
    } else {
        let clean = scenario.fine_data(&x_true)?;
        let exact = scenario.model_data(&x_true);
        let formulation = Formulation::FormAd;
        for (weighted, tag) in [(true, "weighted"), (false, "unweighted")] {
            let label = format!("{tag}_noise0");
            runner.solve(
                SolveSpec {
                    label: &label,
                    weighted,
                    formulation,
                    data: DataSource::FineMesh,
                    noise_level: 0.0,
                    alpha: config.alpha,
                },
                &clean,
            )?;
        }
        runner.solve(
            SolveSpec {
                label: "weighted_model_data",
                weighted: true,
                formulation,
                data: DataSource::Model,
                noise_level: 0.0,
                alpha: config.alpha,
            },
            &exact,
        )?;

        for (i, (&level, &alpha)) in config.noise_levels.iter().zip(&config.noise_alphas).enumerate() {
            let (b, spec) = add_noise(&clean, level, config.seed.wrapping_add(i as u64))?;
            let perturbation: Vec<f64> = b.iter().zip(&clean).map(|(x, y)| x - y).collect();
            noise.push(spec);
            let label = format!("weighted_noise{}", percent(level));
            runner.solve(
                SolveSpec {
                    label: &label,
                    weighted: true,
                    formulation,
                    data: DataSource::FineMesh,
                    noise_level: level,
                    alpha,
                },
                &b,
            )?;
            if level > 0.0 {
                let fidelity_delta = model.fidelity_noise_norm(formulation, &perturbation);
                let (g, d) = model.fidelity(formulation, &b)?;
                let problem = LassoProblem::new(g, &d, &model.weights)?;
                let grid = log_grid(
                    config.morozov_range[0],
                    config.morozov_range[1],
                    config.morozov_per_decade,
                )?;
                let tol = runner.tolerances;
                let selection = morozov_select_alpha(
                    |alpha, warm| problem.solve(alpha, &tol, warm, false),
                    fidelity_delta,
                    &grid,
                    config.morozov_eta,
                )?;
                if selection.flagged {
                    notes.push(format!(
                        "Morozov at noise level {level}: no grid alpha met the discrepancy bound"
                    ));
                }
                morozov.push(MorozovRecord {
                    noise_level: level,
                    fidelity_delta,
                    selection,
                });
            }
        }
        for s in &runner.solutions {
            if s.weighted && s.noise_level == 0.0 && !s.support.sign_consistent {
                notes.push(format!(
                    "{}: off-support entries above tau (off-support mass fraction {:.3e})",
                    s.label, s.support.off_support_fraction
                ));
            }
        }
    }

    let boundary = scenario.mesh.is_boundary();
    let summary = SourceSummary {
        support: source.support().to_vec(),
        values: source.values().to_vec(),
        coordinates: source.support().iter().map(|&j| scenario.mesh.vertices()[j]).collect(),
        weights: source.support().iter().map(|&j| model.weights.w[j]).collect(),
        on_boundary: source.support().iter().map(|&j| boundary[j]).collect(),
        dense: x_true,
    };
    Ok(ExampleBundle {
        id: config.id,
        name: config.name.clone(),
        config: config.clone(),
        mesh: Some(scenario.mesh.clone()),
        m: model.m(),
        n: model.n(),
        rank: model.spectral.rank(),
        source: summary,
        certificate: Some(certificate),
        singular_values: model.spectral.singular_values().to_vec(),
        noise,
        morozov,
        solutions: runner.solutions,
        convergence,
        notes,
    })
}

fn percent(level: f64) -> String {
    let p = level * 100.0;
    if p.fract() == 0.0 {
        format!("{}pct", p as i64)
    } else {
        format!("{p}pct")
    }
}
