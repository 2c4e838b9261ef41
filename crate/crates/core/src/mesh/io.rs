//! Plain-text mesh format:
//!
//! ```text
//! mesh 2d
//! v <x> <y>
//! t <i> <j> <k>
//! b <i>
//! ```
//!
//! Indices are zero-based. Coordinates are written with Rust's shortest
//! round-trip float formatting, so export after import is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use super::{DomainTag, Mesh, Point};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::from("mesh 2d\n");
    for p in mesh.vertices() {
        let _ = writeln!(out, "v {} {}", p[0], p[1]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
    }
    for b in mesh.boundary_nodes() {
        let _ = writeln!(out, "b {b}");
    }
    out
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == "mesh 2d" => {}
        Some((i, _)) => {
            return Err(Error::Parse {
                line: i + 1,
                msg: "expected header `mesh 2d`".into(),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles = Vec::new();
    let mut boundary = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let bad = |msg: &str| Error::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let mut tok = line.split_whitespace();
        let tag = tok.next().unwrap_or_default();
        let rest: Vec<&str> = tok.collect();
        match (tag, rest.len()) {
            ("v", 2) => {
                let x: f64 = rest[0].parse().map_err(|_| bad("bad x coordinate"))?;
                let y: f64 = rest[1].parse().map_err(|_| bad("bad y coordinate"))?;
                vertices.push([x, y]);
            }
            ("t", 3) => {
                let mut tri = [0usize; 3];
                for (slot, s) in tri.iter_mut().zip(&rest) {
                    *slot = s.parse().map_err(|_| bad("bad triangle index"))?;
                }
                triangles.push(tri);
            }
            ("b", 1) => boundary.push(rest[0].parse::<usize>().map_err(|_| bad("bad boundary index"))?),
            _ => return Err(bad("unrecognised record")),
        }
    }
    let mesh = Mesh::from_parts(vertices, triangles, DomainTag::External)?;
    let mut listed = boundary.clone();
    listed.sort_unstable();
    listed.dedup();
    let mut derived = mesh.boundary_nodes().to_vec();
    derived.sort_unstable();
    if listed != derived || listed.len() != boundary.len() {
        return Err(Error::InvalidMesh(
            "listed boundary nodes differ from the topological boundary".into(),
        ));
    }
    Ok(mesh)
}

impl Mesh {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, write_mesh(self)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        read_mesh(&text)
    }
}
