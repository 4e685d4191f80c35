//! Cell export: SVG (2D), OFF (3D) and JSON (any dimension).

use std::fmt::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{round_sig, to_json};
use crate::voronoi::VoronoiCell;

/// SVG scale, pixels per unit length.
pub const SVG_SCALE: f64 = 100.0;
const SVG_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Svg,
    Off,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(ExportFormat::Svg),
            "off" => Ok(ExportFormat::Off),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::InvalidConfig(format!("unknown export format {s:?}"))),
        }
    }
}

pub fn export(cell: &VoronoiCell, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Svg => svg(cell),
        ExportFormat::Off => off(cell),
        ExportFormat::Json => json(cell),
    }
}

fn need_dim(cell: &VoronoiCell, n: usize, what: &str) -> Result<()> {
    if cell.dim() == n {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{what} export needs a {n}-dimensional cell, got dimension {}",
            cell.dim()
        )))
    }
}

/// Rounded coordinate, with float dust relative to `scale` snapped to 0.
fn coord(x: f64, scale: f64) -> f64 {
    if x.abs() <= 1e-9 * scale {
        0.0
    } else {
        round_sig(x)
    }
}

/// Ids of the vertices of a convex planar polygon, counter-clockwise in
/// the frame `(e1, e2)`.
fn cyclic_order(cell: &VoronoiCell, ids: &[usize], e1: &[f64], e2: &[f64]) -> Vec<usize> {
    let n = e1.len();
    let mut c = vec![0.0; n];
    for &i in ids {
        for k in 0..n {
            c[k] += cell.vertices[i][k] / ids.len() as f64;
        }
    }
    let angle = |i: usize| {
        let d: Vec<f64> = (0..n).map(|k| cell.vertices[i][k] - c[k]).collect();
        let x: f64 = d.iter().zip(e1).map(|(a, b)| a * b).sum();
        let y: f64 = d.iter().zip(e2).map(|(a, b)| a * b).sum();
        y.atan2(x)
    };
    let mut order = ids.to_vec();
    order.sort_by(|&a, &b| angle(a).total_cmp(&angle(b)).then(a.cmp(&b)));
    order
}

/// The 2D cell as a centred polygon, y axis pointing up.
pub fn svg(cell: &VoronoiCell) -> Result<String> {
    need_dim(cell, 2, "SVG")?;
    let ids: Vec<usize> = (0..cell.vertices.len()).collect();
    let order = cyclic_order(cell, &ids, &[1.0, 0.0], &[0.0, 1.0]);
    let half = cell.covering_radius * SVG_SCALE + SVG_MARGIN;
    let size = round_sig(2.0 * half);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="{} {} {size} {size}">"#,
        round_sig(-half),
        round_sig(-half),
    );
    let points: Vec<String> = order
        .iter()
        .map(|&i| {
            let v = &cell.vertices[i];
            format!(
                "{},{}",
                coord(v[0] * SVG_SCALE, half),
                coord(-v[1] * SVG_SCALE, half)
            )
        })
        .collect();
    let _ = writeln!(
        out,
        r#"  <polygon points="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        points.join(" ")
    );
    let _ = writeln!(out, r#"  <circle cx="0" cy="0" r="2" fill="black"/>"#);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Orthonormal frame of the plane orthogonal to a unit vector in ℝ³.
fn plane_frame(normal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let axis = if normal[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let cross = |a: &[f64], b: &[f64]| {
        vec![
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let mut e1 = cross(normal, &axis);
    let len = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|x| *x /= len);
    let e2 = cross(normal, &e1);
    (e1, e2)
}

/// The 3D cell in Object File Format, faces counter-clockwise seen from
/// outside.
pub fn off(cell: &VoronoiCell) -> Result<String> {
    need_dim(cell, 3, "OFF")?;
    let v = cell.vertices.len();
    let f = cell.facets.len();
    let mut out = String::from("OFF\n");
    let _ = writeln!(out, "{v} {f} {}", v + f - 2);
    let r = cell.covering_radius;
    for x in &cell.vertices {
        let _ = writeln!(out, "{} {} {}", coord(x[0], r), coord(x[1], r), coord(x[2], r));
    }
    for facet in &cell.facets {
        let (e1, e2) = plane_frame(&facet.normal);
        let order = cyclic_order(cell, &facet.vertex_ids, &e1, &e2);
        let ids: Vec<String> = order.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{} {}", order.len(), ids.join(" "));
    }
    Ok(out)
}

#[derive(Serialize)]
struct FacetJson<'a> {
    normal: &'a [f64],
    relevant_vector: &'a [f64],
    distance: f64,
    measure: f64,
    vertex_ids: &'a [usize],
}

#[derive(Serialize)]
struct CellJson<'a> {
    dim: usize,
    vertices: &'a [Vec<f64>],
    facets: Vec<FacetJson<'a>>,
    volume: f64,
}

/// Vertices, facets and volume of a cell of any dimension.
pub fn json(cell: &VoronoiCell) -> Result<String> {
    to_json(&CellJson {
        dim: cell.dim(),
        vertices: &cell.vertices,
        facets: cell
            .facets
            .iter()
            .map(|f| FacetJson {
                normal: &f.normal,
                relevant_vector: &f.relevant_vector,
                distance: f.distance,
                measure: f.measure,
                vertex_ids: &f.vertex_ids,
            })
            .collect(),
        volume: cell.volume,
    })
}
