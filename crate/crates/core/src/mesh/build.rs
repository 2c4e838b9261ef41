use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{dist, DomainTag, Mesh, Point};
use crate::error::{Error, Result};

/// Plus-shaped domain: the union of a vertical and a horizontal bar of width
/// `arm_width`, both spanning `[-half_extent, half_extent]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossGeometry {
    pub arm_width: f64,
    pub half_extent: f64,
}

impl Default for CrossGeometry {
    fn default() -> Self {
        CrossGeometry {
            arm_width: 2.0 / 3.0,
            half_extent: 1.0,
        }
    }
}

impl CrossGeometry {
    pub fn area(&self) -> f64 {
        let w = self.arm_width;
        2.0 * w * (2.0 * self.half_extent) - w * w
    }

    pub fn contains(&self, p: Point) -> bool {
        let a = 0.5 * self.arm_width;
        let l = self.half_extent;
        let inside_box = p[0].abs() <= l && p[1].abs() <= l;
        inside_box && (p[0].abs() <= a || p[1].abs() <= a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainKind {
    UnitSquare,
    Cross(CrossGeometry),
}

/// Seeded interior-vertex jitter. `amplitude` is relative to the shortest
/// edge incident to the moved vertex and is capped at 0.25.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grading {
    pub seed: u64,
    pub amplitude: f64,
}

impl Grading {
    pub const MAX_AMPLITUDE: f64 = 0.25;

    pub fn new(seed: u64) -> Self {
        Grading { seed, amplitude: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub divisions: usize,
    /// Every boundary edge of the base grid is split into this many pieces,
    /// fanned from the opposite vertex. 1 leaves the grid as is.
    #[serde(default = "one")]
    pub boundary_fan: usize,
    pub grading: Option<Grading>,
    pub quality_floor: f64,
}

fn one() -> usize {
    1
}

impl DomainSpec {
    pub const DEFAULT_QUALITY_FLOOR: f64 = 0.05;

    pub fn unit_square(divisions: usize) -> Self {
        DomainSpec {
            kind: DomainKind::UnitSquare,
            divisions,
            boundary_fan: 1,
            grading: None,
            quality_floor: Self::DEFAULT_QUALITY_FLOOR,
        }
    }

    pub fn cross(geometry: CrossGeometry, divisions: usize) -> Self {
        DomainSpec {
            kind: DomainKind::Cross(geometry),
            divisions,
            boundary_fan: 1,
            grading: None,
            quality_floor: Self::DEFAULT_QUALITY_FLOOR,
        }
    }

    pub fn with_boundary_fan(mut self, pieces: usize) -> Self {
        self.boundary_fan = pieces;
        self
    }

    pub fn with_grading(mut self, grading: Grading) -> Self {
        self.grading = Some(grading);
        self
    }

    pub fn analytic_area(&self) -> f64 {
        match self.kind {
            DomainKind::UnitSquare => 1.0,
            DomainKind::Cross(g) => g.area(),
        }
    }
}

/// Builds a conforming triangulation of the requested domain.
///
/// Without grading the mesh is a structured grid of right triangles. With
/// grading, interior vertices are displaced by a seeded random offset; the
/// offset radius never exceeds a quarter of the shortest incident edge, so no
/// triangle can invert.
pub fn build_domain(spec: &DomainSpec) -> Result<Mesh> {
    if spec.divisions == 0 {
        return Err(Error::InvalidDomain("divisions must be at least 1".into()));
    }
    if spec.boundary_fan == 0 {
        return Err(Error::InvalidDomain("boundary_fan must be at least 1".into()));
    }
    let (vertices, triangles, tag) = match spec.kind {
        DomainKind::UnitSquare => {
            let ticks = ticks(&[0.0, 1.0], spec.divisions);
            let (v, t) = grid(&ticks, &ticks, |_| true);
            (v, t, DomainTag::UnitSquare)
        }
        DomainKind::Cross(g) => {
            if !(g.arm_width > 0.0) || !(g.half_extent > 0.0) || !g.arm_width.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "cross arms must have positive width and length (width {}, half extent {})",
                    g.arm_width, g.half_extent
                )));
            }
            if g.arm_width >= 2.0 * g.half_extent {
                return Err(Error::InvalidDomain(
                    "cross arm width must be smaller than the total extent".into(),
                ));
            }
            let a = 0.5 * g.arm_width;
            let l = g.half_extent;
            let ticks = ticks(&[-l, -a, a, l], spec.divisions);
            let (v, t) = grid(&ticks, &ticks, |c| g.contains(c));
            (v, t, DomainTag::Cross)
        }
    };
    let mut mesh = Mesh::from_parts(vertices, triangles, tag)?;
    if spec.boundary_fan > 1 {
        mesh = fan_boundary(&mesh, spec.boundary_fan)?;
    }
    if let Some(grading) = spec.grading {
        mesh = jitter(mesh, grading)?;
    }
    let floor = spec.quality_floor;
    for t in 0..mesh.n_triangles() {
        let q = mesh.triangle_quality(t);
        if q < floor {
            return Err(Error::MeshQuality {
                triangle: t,
                quality: q,
                floor,
            });
        }
    }
    Ok(mesh)
}

fn ticks(breaks: &[f64], divisions: usize) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        for i in 1..=divisions {
            let t = i as f64 / divisions as f64;
            out.push(if i == divisions { w[1] } else { w[0] + t * (w[1] - w[0]) });
        }
    }
    out
}

/// Structured grid over the tick lines, keeping only cells whose centre
/// satisfies `keep`. Each cell is cut along its rising diagonal.
fn grid(xs: &[f64], ys: &[f64], keep: impl Fn(Point) -> bool) -> (Vec<Point>, Vec<[usize; 3]>) {
    let (nx, ny) = (xs.len(), ys.len());
    let mut index = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut id = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
        let slot = &mut index[j * nx + i];
        if *slot == usize::MAX {
            *slot = vertices.len();
            vertices.push([xs[i], ys[j]]);
        }
        *slot
    };
    // Register vertices row by row so numbering is lexicographic in (y, x).
    let mut kept = vec![false; (nx - 1) * (ny - 1)];
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
            kept[j * (nx - 1) + i] = keep(c);
        }
    }
    let cell_kept = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < nx - 1 && (j as usize) < ny - 1 && kept[j as usize * (nx - 1) + i as usize]
    };
    for j in 0..ny {
        for i in 0..nx {
            let (ii, jj) = (i as isize, j as isize);
            if cell_kept(ii - 1, jj - 1) || cell_kept(ii, jj - 1) || cell_kept(ii - 1, jj) || cell_kept(ii, jj) {
                id(i, j, &mut vertices);
            }
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            if !kept[j * (nx - 1) + i] {
                continue;
            }
            let v00 = id(i, j, &mut vertices);
            let v10 = id(i + 1, j, &mut vertices);
            let v11 = id(i + 1, j + 1, &mut vertices);
            let v01 = id(i, j + 1, &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    (vertices, triangles)
}

/// Splits boundary edges into `pieces` equal parts. A triangle with one
/// boundary edge is fanned from its opposite vertex; one with two boundary
/// edges (a convex corner) is fanned from its centroid.
fn fan_boundary(mesh: &Mesh, pieces: usize) -> Result<Mesh> {
    let mut v = mesh.vertices().to_vec();
    let boundary: HashSet<(usize, usize)> = mesh.boundary_edges().iter().map(|e| (e[0], e[1])).collect();
    let mut triangles = Vec::with_capacity(mesh.n_triangles() + 2 * pieces * mesh.boundary_edges().len());
    for tri in mesh.triangles() {
        let on_boundary: Vec<bool> = (0..3).map(|e| boundary.contains(&(tri[e], tri[(e + 1) % 3]))).collect();
        let count = on_boundary.iter().filter(|&&b| b).count();
        if count == 0 {
            triangles.push(*tri);
            continue;
        }
        let mut ring = Vec::with_capacity(3 + 2 * pieces);
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            ring.push(a);
            if on_boundary[e] {
                for i in 1..pieces {
                    let s = i as f64 / pieces as f64;
                    v.push([v[a][0] + s * (v[b][0] - v[a][0]), v[a][1] + s * (v[b][1] - v[a][1])]);
                    ring.push(v.len() - 1);
                }
            }
        }
        let len = ring.len();
        if count == 1 {
            let e = on_boundary.iter().position(|&b| b).unwrap_or(0);
            let apex = tri[(e + 2) % 3];
            let start = ring.iter().position(|&p| p == tri[e]).unwrap_or(0);
            for i in 0..pieces {
                triangles.push([ring[(start + i) % len], ring[(start + i + 1) % len], apex]);
            }
        } else {
            let p = tri.map(|i| v[i]);
            v.push([(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]);
            let c = v.len() - 1;
            for i in 0..len {
                triangles.push([ring[i], ring[(i + 1) % len], c]);
            }
        }
    }
    Mesh::from_parts(v, triangles, mesh.domain_tag())
}

fn jitter(mesh: Mesh, grading: Grading) -> Result<Mesh> {
    if !(grading.amplitude >= 0.0) || grading.amplitude > Grading::MAX_AMPLITUDE {
        return Err(Error::InvalidDomain(format!(
            "grading amplitude {} outside [0, {}]",
            grading.amplitude,
            Grading::MAX_AMPLITUDE
        )));
    }
    let n = mesh.n_vertices();
    let mut shortest = vec![f64::INFINITY; n];
    for tri in mesh.triangles() {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            let len = dist(mesh.vertices()[a], mesh.vertices()[b]);
            shortest[a] = shortest[a].min(len);
            shortest[b] = shortest[b].min(len);
        }
    }
    let boundary = mesh.is_boundary();
    let mut rng = ChaCha20Rng::seed_from_u64(grading.seed);
    let mut vertices = mesh.vertices().to_vec();
    for v in 0..n {
        // Draw for every vertex so the stream does not depend on the boundary layout.
        let radius: f64 = rng.random::<f64>() * grading.amplitude * shortest[v];
        let angle: f64 = rng.random::<f64>() * std::f64::consts::TAU;
        if !boundary[v] {
            vertices[v][0] += radius * angle.cos();
            vertices[v][1] += radius * angle.sin();
        }
    }
    Mesh::from_parts(vertices, mesh.triangles().to_vec(), mesh.domain_tag())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_square() {
        let m = build_domain(&DomainSpec::unit_square(1)).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_nodes().len(), 4);
    }

    #[test]
    fn structured_square_counts() {
        for n in [2usize, 5, 16] {
            let m = build_domain(&DomainSpec::unit_square(n)).unwrap();
            assert_eq!(m.n_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.n_triangles(), 2 * n * n);
            assert_eq!(m.boundary_nodes().len(), 4 * n);
        }
    }

    #[test]
    fn cross_euler_characteristic() {
        let m = build_domain(&DomainSpec::cross(CrossGeometry::default(), 8)).unwrap();
        let euler = m.n_vertices() as i64 - m.n_edges() as i64 + m.n_triangles() as i64;
        assert_eq!(euler, 1);
        assert_eq!(m.boundary_nodes().len(), 12 * 8);
        let area = CrossGeometry::default().area();
        assert!((m.area() - area).abs() < 1e-12 * area);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(
            build_domain(&DomainSpec::unit_square(0)),
            Err(Error::InvalidDomain(_))
        ));
        let flat = CrossGeometry {
            arm_width: 0.0,
            half_extent: 1.0,
        };
        assert!(matches!(
            build_domain(&DomainSpec::cross(flat, 4)),
            Err(Error::InvalidDomain(_))
        ));
    }

    #[test]
    fn grading_is_reproducible_and_keeps_boundary() {
        let spec = DomainSpec::unit_square(8).with_grading(Grading::new(7));
        let a = build_domain(&spec).unwrap();
        let b = build_domain(&spec).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        let plain = build_domain(&DomainSpec::unit_square(8)).unwrap();
        assert_ne!(a.vertices(), plain.vertices());
        for &v in plain.boundary_nodes() {
            assert_eq!(a.vertices()[v], plain.vertices()[v]);
        }
        assert!((a.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_fan_multiplies_boundary_nodes() {
        for (div, fan) in [(2usize, 3usize), (4, 4)] {
            let m = build_domain(&DomainSpec::unit_square(div).with_boundary_fan(fan)).unwrap();
            assert_eq!(m.boundary_nodes().len(), 4 * div * fan);
            assert!((m.area() - 1.0).abs() < 1e-12);
            let euler = m.n_vertices() as i64 - m.n_edges() as i64 + m.n_triangles() as i64;
            assert_eq!(euler, 1);
        }
        let c = build_domain(&DomainSpec::cross(CrossGeometry::default(), 2).with_boundary_fan(3)).unwrap();
        assert_eq!(c.boundary_nodes().len(), 12 * 2 * 3);
        assert!(build_domain(&DomainSpec::unit_square(2).with_boundary_fan(0)).is_err());
    }

    #[test]
    fn quality_floor_is_enforced() {
        let mut spec = DomainSpec::unit_square(4);
        spec.quality_floor = 0.45;
        assert!(matches!(build_domain(&spec), Err(Error::MeshQuality { .. })));
    }
}
