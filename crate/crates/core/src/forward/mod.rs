//! P1 finite element discretization of the pure-Neumann potential equation
//! and the dense forward matrix mapping frame coefficients to boundary traces.
//!
//! The source space and the state space share the same P1 mesh. A frame
//! coefficient vector `x` represents `f_h = sum_j x_j psi_j` with
//! `psi_j = phi_j - (1/|Omega|) int phi_j`, so every `f_h` has zero integral.
//! The state is fixed by one bordered Lagrange-multiplier row enforcing a
//! zero (lumped) boundary integral.

mod io;
mod sparse;

use std::sync::Arc;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{ConductivityField, Mesh, Point};

pub use io::{read_forward, read_matrix_market, read_sidecar, write_matrix_market, write_sidecar};
pub use sparse::CsrMatrix;

/// Mean-corrected hat functions spanning the zero-integral source space.
#[derive(Clone, Debug)]
pub struct FrameBasis {
    /// `int_Omega phi_j` for every node.
    pub basis_integrals: Vec<f64>,
    /// `(1/|Omega|) int_Omega phi_j`, the constant removed from `phi_j`.
    pub mean_shift: Vec<f64>,
    pub domain_area: f64,
}

impl FrameBasis {
    pub fn len(&self) -> usize {
        self.basis_integrals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis_integrals.is_empty()
    }

    /// `int_Omega f_h` for `f_h = sum x_j psi_j`; zero up to rounding.
    pub fn integral(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.basis_integrals)
            .zip(&self.mean_shift)
            .map(|((xj, ij), sj)| xj * (ij - sj * self.domain_area))
            .sum()
    }

    /// Nodal values of `f_h`: `x_j - sum_k x_k mean_shift_k` at node `j`.
    pub fn nodal_values(&self, x: &[f64]) -> Vec<f64> {
        let shift: f64 = x.iter().zip(&self.mean_shift).map(|(a, b)| a * b).sum();
        x.iter().map(|xj| xj - shift).collect()
    }
}

/// Stiffness, mass and boundary data of one mesh/conductivity pair, plus a
/// factorization of the bordered Neumann system.
#[derive(Clone)]
pub struct AssembledSystem {
    mesh: Mesh,
    conductivity: ConductivityField,
    stiffness: CsrMatrix,
    mass: CsrMatrix,
    boundary_mass: Vec<f64>,
    frame: FrameBasis,
    bordered: Arc<Lu<usize, f64>>,
}

impl std::fmt::Debug for AssembledSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssembledSystem")
            .field("nodes", &self.mesh.n_vertices())
            .field("stiffness_nnz", &self.stiffness.nnz())
            .field("conductivity", &self.conductivity)
            .finish()
    }
}

/// Triangle quadrature in barycentric coordinates; weights sum to one.
fn quadrature_rule(order: usize) -> Result<&'static [([f64; 3], f64)]> {
    const CENTROID: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];
    const THREE_POINT: [([f64; 3], f64); 3] = [
        ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
        ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
    ];
    match order {
        1 => Ok(&CENTROID),
        2 => Ok(&THREE_POINT),
        other => Err(Error::Quadrature(other)),
    }
}

fn barycentric_point(p: [Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Smallest eigenvalue accepted for conductivity samples.
pub const SPD_FLOOR: f64 = 1e-12;

pub fn assemble(mesh: &Mesh, sigma: &ConductivityField, quadrature_order: usize) -> Result<AssembledSystem> {
    let rule = quadrature_rule(quadrature_order)?;
    let n = mesh.n_vertices();
    let mut k_trip = Vec::with_capacity(9 * mesh.n_triangles());
    let mut m_trip = Vec::with_capacity(9 * mesh.n_triangles());
    let mut integrals = vec![0.0; n];

    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|v| mesh.vertices()[v]);
        let area = mesh.triangle_area(t);

        // Quadrature-averaged conductivity tensor over the element.
        let mut s_bar = [[0.0; 2]; 2];
        for &(l, w) in rule {
            let q = barycentric_point(p, l);
            let min_eig = sigma.min_eigenvalue(q);
            if !(min_eig >= SPD_FLOOR) {
                return Err(Error::Conductivity {
                    x: q[0],
                    y: q[1],
                    min_eig,
                });
            }
            let s = sigma.eval(q);
            for r in 0..2 {
                for c in 0..2 {
                    s_bar[r][c] += w * 0.5 * (s[r][c] + s[c][r]);
                }
            }
        }

        // Gradients of the barycentric coordinates.
        let inv2a = 1.0 / (2.0 * area);
        let grad: [[f64; 2]; 3] = std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            [(p[j][1] - p[k][1]) * inv2a, (p[k][0] - p[j][0]) * inv2a]
        });
        for i in 0..3 {
            let sg = [
                s_bar[0][0] * grad[i][0] + s_bar[0][1] * grad[i][1],
                s_bar[1][0] * grad[i][0] + s_bar[1][1] * grad[i][1],
            ];
            for j in 0..3 {
                let kij = area * (sg[0] * grad[j][0] + sg[1] * grad[j][1]);
                k_trip.push((tri[i], tri[j], kij));
                let mij = if i == j { area / 6.0 } else { area / 12.0 };
                m_trip.push((tri[i], tri[j], mij));
            }
            integrals[tri[i]] += area / 3.0;
        }
    }

    let stiffness = CsrMatrix::from_triplets(n, n, k_trip);
    let mass = CsrMatrix::from_triplets(n, n, m_trip);

    let mut boundary_mass = vec![0.0; n];
    for &[a, b] in mesh.boundary_edges() {
        let half = 0.5 * crate::mesh::dist(mesh.vertices()[a], mesh.vertices()[b]);
        boundary_mass[a] += half;
        boundary_mass[b] += half;
    }

    let domain_area: f64 = mesh.area();
    let frame = FrameBasis {
        mean_shift: integrals.iter().map(|i| i / domain_area).collect(),
        basis_integrals: integrals,
        domain_area,
    };

    let mut entries: Vec<Triplet<usize, usize, f64>> = (0..n)
        .flat_map(|r| stiffness.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
        .collect();
    for (i, &w) in boundary_mass.iter().enumerate() {
        if w != 0.0 {
            entries.push(Triplet::new(i, n, w));
            entries.push(Triplet::new(n, i, w));
        }
    }
    let bordered = SparseColMat::<usize, f64>::try_new_from_triplets(n + 1, n + 1, &entries)
        .map_err(|_| Error::SingularSystem)?
        .sp_lu()
        .map_err(|_| Error::SingularSystem)?;

    Ok(AssembledSystem {
        mesh: mesh.clone(),
        conductivity: sigma.clone(),
        stiffness,
        mass,
        boundary_mass,
        frame,
        bordered: Arc::new(bordered),
    })
}

impl AssembledSystem {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn conductivity(&self) -> &ConductivityField {
        &self.conductivity
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    /// Lumped boundary weights: `boundary_mass . u` approximates `int_{dOmega} u`.
    pub fn boundary_mass(&self) -> &[f64] {
        &self.boundary_mass
    }

    pub fn frame(&self) -> &FrameBasis {
        &self.frame
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_vertices()
    }

    /// FEM load vector `int f_h phi_i` of the frame expansion `x`.
    pub fn load(&self, x: &[f64]) -> Vec<f64> {
        let mut load = self.mass.mul_vec(x);
        let shift: f64 = x
            .iter()
            .zip(&self.frame.basis_integrals)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.frame.domain_area;
        for (l, c) in load.iter_mut().zip(&self.frame.basis_integrals) {
            *l -= c * shift;
        }
        load
    }

    /// Load vector of a pointwise source function, integrated with the
    /// three-point rule. The caller is responsible for compatibility.
    pub fn load_from_function(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let rule = quadrature_rule(2).expect("order 2 is supported");
        let mut load = vec![0.0; self.n_nodes()];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let p = tri.map(|v| self.mesh.vertices()[v]);
            let area = self.mesh.triangle_area(t);
            for &(l, w) in rule {
                let fq = f(barycentric_point(p, l));
                for i in 0..3 {
                    load[tri[i]] += area * w * fq * l[i];
                }
            }
        }
        load
    }

    /// Solves `K u + lambda m = load`, `m . u = 0`.
    pub fn solve_load(&self, load: &[f64]) -> Result<Vec<f64>> {
        let n = self.n_nodes();
        if load.len() != n {
            return Err(Error::Dimension(format!(
                "load has length {}, expected {n}",
                load.len()
            )));
        }
        if load.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let rhs = faer::Col::<f64>::from_fn(n + 1, |i| if i < n { load[i] } else { 0.0 });
        let sol = self.bordered.solve(&rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        let u: Vec<f64> = (0..n).map(|i| sol[i]).collect();
        let lambda = sol[n];

        let ku = self.stiffness.mul_vec(&u);
        let mut res2 = 0.0;
        let mut scale2 = 0.0;
        for i in 0..n {
            let r = ku[i] + lambda * self.boundary_mass[i] - load[i];
            res2 += r * r;
            scale2 += load[i] * load[i] + ku[i] * ku[i];
        }
        let constraint: f64 = u.iter().zip(&self.boundary_mass).map(|(a, b)| a * b).sum();
        let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res = res2.sqrt() + constraint.abs();
        let scale = scale2.sqrt().max(unorm * f64::EPSILON);
        if scale > 0.0 && res > 1e-10 * scale {
            return Err(Error::SingularSystem);
        }
        Ok(u)
    }

    /// State `u_h` generated by the frame expansion `x`.
    pub fn solve_state(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_nodes() {
            return Err(Error::Dimension(format!(
                "frame coefficients have length {}, expected {}",
                x.len(),
                self.n_nodes()
            )));
        }
        self.solve_load(&self.load(x))
    }

    /// Nodal trace of `u` in counterclockwise boundary order.
    pub fn trace(&self, u: &[f64]) -> Vec<f64> {
        self.mesh.boundary_nodes().iter().map(|&b| u[b]).collect()
    }
}

/// Dense forward matrix: column `j` is the boundary trace of the state
/// generated by the frame function `psi_j`.
#[derive(Clone, Debug)]
pub struct ForwardModel {
    pub a: DMatrix<f64>,
    /// Mesh vertex index of every trace row.
    pub trace_order: Vec<usize>,
    /// Lumped boundary weight of every trace row.
    pub boundary_mass: Vec<f64>,
}

impl ForwardModel {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.a * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

pub fn build_forward_matrix(sys: &AssembledSystem) -> Result<ForwardModel> {
    let n = sys.n_nodes();
    let trace_order = sys.mesh.boundary_nodes().to_vec();
    let m = trace_order.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            sys.solve_state(&e)
                .map(|u| sys.trace(&u))
                .map_err(|source| Error::Column {
                    column: j,
                    source: Box::new(source),
                })
        })
        .collect::<Result<_>>()?;
    let a = DMatrix::from_fn(m, n, |i, j| columns[j][i]);
    let boundary_mass = trace_order.iter().map(|&b| sys.boundary_mass[b]).collect();
    Ok(ForwardModel {
        a,
        trace_order,
        boundary_mass,
    })
}
