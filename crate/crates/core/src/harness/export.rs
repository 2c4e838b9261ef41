use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::examples::ExampleBundle;
use crate::mesh::Mesh;

/// One row per unknown: coordinates, true value and every recovered solution.
pub fn results_csv(bundle: &ExampleBundle) -> String {
    table(bundle, |_| true)
}

/// Rows of `results_csv` restricted to the true support.
pub fn support_csv(bundle: &ExampleBundle) -> String {
    table(bundle, |v| v != 0.0)
}

fn table(bundle: &ExampleBundle, keep: impl Fn(f64) -> bool) -> String {
    let mut out = String::from("index,x,y,true");
    for s in &bundle.solutions {
        out.push(',');
        out.push_str(&s.label);
    }
    out.push('\n');
    let Some(mesh) = &bundle.mesh else {
        return out;
    };
    for (j, &t) in bundle.source.dense.iter().enumerate() {
        if !keep(t) {
            continue;
        }
        let p = mesh.vertices()[j];
        let _ = write!(out, "{j},{},{},{t}", p[0], p[1]);
        for s in &bundle.solutions {
            let _ = write!(out, ",{:e}", s.result.x[j]);
        }
        out.push('\n');
    }
    out
}

pub fn singular_values_csv(values: &[f64]) -> String {
    let mut out = String::from("index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{v:e}", i + 1);
    }
    out
}

/// Blue (negative) through white to red (positive).
fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(-1.0, 1.0);
    let blend = |a: f64, b: f64, s: f64| (a + (b - a) * s).round() as u8;
    if t >= 0.0 {
        (255, blend(255.0, 40.0, t), blend(255.0, 40.0, t))
    } else {
        let s = -t;
        (blend(255.0, 40.0, s), blend(255.0, 80.0, s), 255)
    }
}

/// Renders a nodal P1 field on the triangulation. Each triangle is split into
/// four by its edge midpoints and every piece is filled with the color of the
/// linear interpolant at its centroid. The scale is symmetric about zero.
pub fn heatmap_svg(mesh: &Mesh, values: &[f64], title: &str) -> String {
    assert_eq!(values.len(), mesh.n_vertices());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in mesh.vertices() {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let size = 480.0;
    let margin = 20.0;
    let scale = size / (x1 - x0).max(y1 - y0);
    let width = (x1 - x0) * scale + 2.0 * margin;
    let height = (y1 - y0) * scale + 2.0 * margin;
    let bar = 60.0;
    let map = |p: [f64; 2]| (margin + (p[0] - x0) * scale, margin + (y1 - p[1]) * scale);

    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let range = if peak > 0.0 { peak } else { 1.0 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.1} {:.1}">"#,
        width + bar,
        height + 24.0,
        width + bar,
        height + 24.0
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<g stroke="none">"#);
    for tri in mesh.triangles() {
        let p = tri.map(|v| mesh.vertices()[v]);
        let f = tri.map(|v| values[v]);
        let mid = |a: usize, b: usize| {
            (
                [0.5 * (p[a][0] + p[b][0]), 0.5 * (p[a][1] + p[b][1])],
                0.5 * (f[a] + f[b]),
            )
        };
        let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        let pieces = [
            [(p[0], f[0]), m01, m20],
            [m01, (p[1], f[1]), m12],
            [m20, m12, (p[2], f[2])],
            [m01, m12, m20],
        ];
        for piece in pieces {
            let value = (piece[0].1 + piece[1].1 + piece[2].1) / 3.0;
            let (r, g, b) = diverging(value / range);
            let pts: Vec<String> = piece
                .iter()
                .map(|(q, _)| {
                    let (sx, sy) = map(*q);
                    format!("{sx:.2},{sy:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r##"<polygon points="{}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
                pts.join(" ")
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g fill="none" stroke="#000000" stroke-width="1">"##);
    for &[a, b] in mesh.boundary_edges() {
        let (ax, ay) = map(mesh.vertices()[a]);
        let (bx, by) = map(mesh.vertices()[b]);
        let _ = writeln!(out, r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}"/>"#);
    }
    let _ = writeln!(out, "</g>");

    let steps = 20;
    let bx = width + 10.0;
    let bh = (height - 2.0 * margin) / steps as f64;
    for i in 0..steps {
        let t = 1.0 - 2.0 * (i as f64 + 0.5) / steps as f64;
        let (r, g, b) = diverging(t);
        let _ = writeln!(
            out,
            r##"<rect x="{bx:.1}" y="{:.2}" width="16" height="{:.2}" fill="#{r:02x}{g:02x}{b:02x}"/>"##,
            margin + i as f64 * bh,
            bh + 0.01
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{bx:.1}" y="{:.1}" font-size="10">{:+.3e}</text>"#,
        margin - 4.0,
        range
    );
    let _ = writeln!(
        out,
        r#"<text x="{bx:.1}" y="{:.1}" font-size="10">{:+.3e}</text>"#,
        height - margin + 12.0,
        -range
    );
    let _ = writeln!(
        out,
        r#"<text x="{margin:.1}" y="{:.1}" font-size="12">{}</text>"#,
        height + 14.0,
        escape(title)
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `results.csv`, `support.csv`, `certificates.json`,
/// `singular_values.csv`, convergence tables and one heatmap per solution.
pub fn export_artifacts(bundle: &ExampleBundle, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir.join("results.csv"), &results_csv(bundle))?,
        write(dir.join("support.csv"), &support_csv(bundle))?,
        write(
            dir.join("certificates.json"),
            &(serde_json::to_string_pretty(bundle)? + "\n"),
        )?,
        write(
            dir.join("singular_values.csv"),
            &singular_values_csv(&bundle.singular_values),
        )?,
    ];
    for study in &bundle.convergence {
        let mut text = String::from("delta,delta_abs,alpha,error_w,converged\n");
        for r in &study.records {
            let _ = writeln!(
                text,
                "{:e},{:e},{:e},{:e},{}",
                r.delta, r.delta_abs, r.alpha, r.error_w, r.converged
            );
        }
        written.push(write(
            dir.join(format!("convergence_{}.csv", study.formulation.label())),
            &text,
        )?);
    }
    if let Some(mesh) = &bundle.mesh {
        written.push(write(
            dir.join("heatmap_true.svg"),
            &heatmap_svg(mesh, &bundle.source.dense, "true sources"),
        )?);
        for s in &bundle.solutions {
            let title = format!("{} (alpha = {:e})", s.label, s.alpha);
            written.push(write(
                dir.join(format!("heatmap_{}.svg", s.label)),
                &heatmap_svg(mesh, &s.result.x, &title),
            )?);
        }
    }
    Ok(written)
}
