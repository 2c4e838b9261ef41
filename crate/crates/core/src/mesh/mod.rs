//! Two-dimensional P1 triangulations with ordered boundary bookkeeping.
//!
//! A [`Mesh`] is immutable once constructed. Every constructor goes through
//! [`Mesh::from_parts`], which checks orientation and conformity and derives
//! the counterclockwise boundary node ordering used for trace vectors.

mod build;
mod conductivity;
mod io;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{build_domain, CrossGeometry, DomainKind, DomainSpec, Grading};
pub use conductivity::{ConductivityField, ConductivityKind, Tensor2};
pub use io::{read_mesh, write_mesh};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    UnitSquare,
    Cross,
    External,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<[usize; 2]>,
    domain_tag: DomainTag,
    h_max: f64,
}

/// Result of a uniform quadrisection: the fine mesh plus, for every vertex
/// appended after the coarse ones, the two coarse-edge endpoints it bisects.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub mesh: Mesh,
    pub coarse_vertices: usize,
    pub midpoint_parents: Vec<[usize; 2]>,
}

impl Mesh {
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain_tag: DomainTag) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidMesh("empty mesh".into()));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let mut used = vec![false; vertices.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} out of range"
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is not positively oriented (signed area {area:e})"
                )));
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} belongs to no triangle")));
        }

        // Directed edge usage: an interior edge must appear once in each direction.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if directed.insert((a, b), t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "directed edge ({a},{b}) used twice: non-conforming or inconsistently oriented"
                    )));
                }
            }
        }
        let mut boundary_edges: Vec<[usize; 2]> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .map(|&(a, b)| [a, b])
            .collect();
        boundary_edges.sort_unstable();

        let boundary_nodes = order_boundary(&vertices, &boundary_edges)?;
        check_no_hanging_nodes(&vertices, &boundary_edges, &boundary_nodes)?;

        let h_max = triangles
            .iter()
            .flat_map(|tri| (0..3).map(move |e| (tri[e], tri[(e + 1) % 3])))
            .map(|(a, b)| dist(vertices[a], vertices[b]))
            .fold(0.0, f64::max);

        Ok(Mesh {
            vertices,
            triangles,
            boundary_nodes,
            boundary_edges,
            domain_tag,
            h_max,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary vertices, counterclockwise from the lexicographically smallest.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Boundary edges oriented with the domain on their left.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn domain_tag(&self) -> DomainTag {
        self.domain_tag
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        // Each interior edge is counted twice among directed half-edges.
        let half_edges = 3 * self.triangles.len();
        (half_edges + self.boundary_edges.len()) / 2
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Inradius over circumradius; 1/2 for an equilateral triangle.
    pub fn triangle_quality(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
        let area = signed_area(a, b, c);
        8.0 * area * area / ((la + lb + lc) * la * lb * lc)
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_quality(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for &b in &self.boundary_nodes {
            flags[b] = true;
        }
        flags
    }

    /// Uniform refinement: every triangle is split into four by its edge
    /// midpoints. Coarse vertices keep their indices.
    pub fn refine(&self) -> Result<Mesh> {
        self.refine_nested().map(|r| r.mesh)
    }

    pub fn refine_nested(&self) -> Result<Refinement> {
        let coarse = self.vertices.len();
        let mut vertices = self.vertices.clone();
        let mut parents = Vec::new();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[key.0], vertices[key.1]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                parents.push([key.0, key.1]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mesh = Mesh::from_parts(vertices, triangles, self.domain_tag)?;
        Ok(Refinement {
            mesh,
            coarse_vertices: coarse,
            midpoint_parents: parents,
        })
    }
}

impl Refinement {
    /// Interpolates a coarse P1 nodal field onto the fine mesh. Exact for
    /// nested refinement since each new vertex is an edge midpoint.
    pub fn prolongate(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len(), self.coarse_vertices);
        let mut fine = coarse.to_vec();
        fine.extend(
            self.midpoint_parents
                .iter()
                .map(|&[a, b]| 0.5 * (coarse[a] + coarse[b])),
        );
        fine
    }
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

fn lex_less(p: Point, q: Point) -> bool {
    p[0] < q[0] || (p[0] == q[0] && p[1] < q[1])
}

/// Walks the directed boundary edges. Each loop starts at its
/// lexicographically smallest vertex; loops are emitted in order of those
/// starting vertices.
fn order_boundary(vertices: &[Point], edges: &[[usize; 2]]) -> Result<Vec<usize>> {
    let mut next: HashMap<usize, usize> = HashMap::with_capacity(edges.len());
    for &[a, b] in edges {
        if next.insert(a, b).is_some() {
            return Err(Error::InvalidMesh(format!(
                "boundary vertex {a} has two outgoing boundary edges (pinched domain)"
            )));
        }
    }
    let mut remaining: Vec<usize> = next.keys().copied().collect();
    remaining.sort_unstable();
    let mut visited = vec![false; vertices.len()];
    let mut loops: Vec<Vec<usize>> = Vec::new();
    loop {
        let start = remaining.iter().copied().filter(|&v| !visited[v]).reduce(|best, v| {
            if lex_less(vertices[v], vertices[best]) {
                v
            } else {
                best
            }
        });
        let Some(start) = start else { break };
        let mut ring = vec![start];
        visited[start] = true;
        let mut cur = start;
        loop {
            let nxt = *next
                .get(&cur)
                .ok_or_else(|| Error::InvalidMesh(format!("open boundary at vertex {cur}")))?;
            if nxt == start {
                break;
            }
            if visited[nxt] {
                return Err(Error::InvalidMesh(format!(
                    "boundary revisits vertex {nxt} before closing"
                )));
            }
            visited[nxt] = true;
            ring.push(nxt);
            cur = nxt;
        }
        loops.push(ring);
    }
    Ok(loops.concat())
}

/// A vertex lying inside a boundary edge signals a T-junction.
fn check_no_hanging_nodes(vertices: &[Point], edges: &[[usize; 2]], boundary_nodes: &[usize]) -> Result<()> {
    for &[a, b] in edges {
        let (pa, pb) = (vertices[a], vertices[b]);
        let len = dist(pa, pb);
        for &v in boundary_nodes {
            if v == a || v == b {
                continue;
            }
            let p = vertices[v];
            let cross = signed_area(pa, pb, p).abs() * 2.0 / len;
            let t = ((p[0] - pa[0]) * (pb[0] - pa[0]) + (p[1] - pa[1]) * (pb[1] - pa[1])) / (len * len);
            if cross <= 1e-12 * len && t > 1e-12 && t < 1.0 - 1e-12 {
                return Err(Error::InvalidMesh(format!(
                    "hanging node {v} on boundary edge ({a},{b})"
                )));
            }
        }
    }
    Ok(())
}
