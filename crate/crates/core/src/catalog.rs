//! Named reference lattices.
//!
//! Bases are written with exact entries (integers, rationals and square
//! roots) or as integer Gram matrices, and only rendered to `f64` when a
//! [`Lattice`] is requested. Reference values are closed forms; the tests
//! recompute every one of them from the cell geometry.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// `(num / den) · √rad`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exact {
    pub num: i64,
    pub den: i64,
    pub rad: u32,
}

impl Exact {
    pub const fn int(num: i64) -> Self {
        Exact { num, den: 1, rad: 1 }
    }

    pub const fn ratio(num: i64, den: i64) -> Self {
        Exact { num, den, rad: 1 }
    }

    pub const fn surd(num: i64, den: i64, rad: u32) -> Self {
        Exact { num, den, rad }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64 * f64::from(self.rad).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Generator rows.
    Basis(Vec<Vec<Exact>>),
    /// Integer Gram matrix, realised by its Cholesky factor.
    Gram(Vec<Vec<i64>>),
    /// Too large for the geometry; metadata only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub dim: usize,
    pub generator: Generator,
    /// Euclidean perimeter of the Voronoi cell at covolume 1.
    pub reference_perimeter: Option<f64>,
    pub reference_facet_count: Option<usize>,
    pub notes: String,
}

impl CatalogEntry {
    pub fn has_basis(&self) -> bool {
        !matches!(self.generator, Generator::None)
    }

    /// The lattice as stored (not rescaled).
    pub fn lattice(&self) -> Result<Lattice> {
        match &self.generator {
            Generator::Basis(rows) => {
                let rows: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|r| r.iter().map(|e| e.value()).collect())
                    .collect();
                crate::lattice::make_lattice(&rows)
            }
            Generator::Gram(g) => {
                let n = g.len();
                let gram = DMatrix::from_fn(n, n, |i, j| g[i][j] as f64);
                let chol = gram.cholesky().ok_or_else(|| {
                    Error::GeometryDegenerate(format!("Gram matrix of {} is not definite", self.name))
                })?;
                Lattice::from_matrix(chol.l())
            }
            Generator::None => Err(Error::DimensionUnsupported(self.dim)),
        }
    }

    /// The lattice rescaled to covolume 1.
    pub fn unit_lattice(&self) -> Result<Lattice> {
        self.lattice()?.with_covolume(1.0)
    }
}

fn identity_rows(n: usize) -> Vec<Vec<Exact>> {
    (0..n)
        .map(|i| (0..n).map(|j| Exact::int(i64::from(i == j))).collect())
        .collect()
}

fn zn(n: usize) -> CatalogEntry {
    CatalogEntry {
        name: format!("Zn({n})"),
        dim: n,
        generator: Generator::Basis(identity_rows(n)),
        reference_perimeter: Some(2.0 * n as f64),
        reference_facet_count: Some(2 * n),
        notes: "cubic lattice; the cell is the unit cube".into(),
    }
}

fn hexagonal() -> CatalogEntry {
    CatalogEntry {
        name: "hexagonal".into(),
        dim: 2,
        generator: Generator::Basis(vec![
            vec![Exact::int(1), Exact::int(0)],
            vec![Exact::ratio(1, 2), Exact::surd(1, 2, 3)],
        ]),
        // Regular hexagon of unit area.
        reference_perimeter: Some(6.0 * 2f64.sqrt() * 3f64.powf(-0.75)),
        reference_facet_count: Some(6),
        notes: "A2; regular hexagonal honeycomb".into(),
    }
}

fn bcc() -> CatalogEntry {
    // Truncated octahedron with edge a: S = (6 + 12√3) a², V = 8√2 a³.
    let per = (6.0 + 12.0 * 3f64.sqrt()) * (8.0 * 2f64.sqrt()).powf(-2.0 / 3.0);
    CatalogEntry {
        name: "BCC".into(),
        dim: 3,
        generator: Generator::Basis(vec![
            vec![Exact::int(1), Exact::int(0), Exact::int(0)],
            vec![Exact::int(0), Exact::int(1), Exact::int(0)],
            vec![Exact::ratio(1, 2), Exact::ratio(1, 2), Exact::ratio(1, 2)],
        ]),
        reference_perimeter: Some(per),
        reference_facet_count: Some(14),
        notes: "body-centred cubic; cell is the truncated octahedron (8 hexagons, 6 squares)"
            .into(),
    }
}

fn fcc() -> CatalogEntry {
    // Rhombic dodecahedron with edge a: S = 8√2 a², V = (16√3/9) a³.
    let per = 8.0 * 2f64.sqrt() * (9.0 / (16.0 * 3f64.sqrt())).powf(2.0 / 3.0);
    CatalogEntry {
        name: "FCC".into(),
        dim: 3,
        generator: Generator::Basis(vec![
            vec![Exact::int(1), Exact::int(1), Exact::int(0)],
            vec![Exact::int(1), Exact::int(0), Exact::int(1)],
            vec![Exact::int(0), Exact::int(1), Exact::int(1)],
        ]),
        reference_perimeter: Some(per),
        reference_facet_count: Some(12),
        notes: "face-centred cubic (A3 = D3); cell is the rhombic dodecahedron".into(),
    }
}

/// A_n through its Cartan matrix. Every root is relevant, so the cell has
/// `n(n+1)` facets (A3 = FCC gives the rhombic dodecahedron).
fn a_n(n: usize) -> CatalogEntry {
    let gram = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match i.abs_diff(j) {
                    0 => 2,
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect();
    CatalogEntry {
        name: format!("A({n})"),
        dim: n,
        generator: Generator::Gram(gram),
        reference_perimeter: None,
        reference_facet_count: Some(n * (n + 1)),
        notes: "root lattice A_n; its dual A_n* has the permutohedron as cell".into(),
    }
}

/// D_n: integer vectors with even coordinate sum.
fn d_n(n: usize) -> CatalogEntry {
    let mut rows = vec![vec![Exact::int(0); n]; n];
    rows[0][0] = Exact::int(1);
    rows[0][1] = Exact::int(1);
    rows[1][0] = Exact::int(1);
    rows[1][1] = Exact::int(-1);
    for k in 2..n {
        rows[k][k - 1] = Exact::int(1);
        rows[k][k] = Exact::int(-1);
    }
    let (per, facets) = if n == 4 {
        // 24-cell: 24 facets at distance √2/2 with covolume 2, so
        // S = n·V/h = 8√2; rescale by 2^{-1/4}.
        (Some(8.0 * 2f64.powf(-0.25)), Some(24))
    } else if n == 3 {
        (fcc().reference_perimeter, Some(12))
    } else {
        (None, None)
    };
    CatalogEntry {
        name: if n == 4 { "D4".into() } else { format!("D({n})") },
        dim: n,
        generator: Generator::Basis(rows),
        reference_perimeter: per,
        reference_facet_count: facets,
        notes: if n == 4 {
            "checkerboard lattice D4; cell is the regular 24-cell".into()
        } else {
            "checkerboard lattice D_n".into()
        },
    }
}

fn e8() -> CatalogEntry {
    let mut rows = vec![vec![Exact::int(0); 8]; 8];
    rows[0][0] = Exact::int(2);
    for k in 1..7 {
        rows[k][k - 1] = Exact::int(-1);
        rows[k][k] = Exact::int(1);
    }
    rows[7] = vec![Exact::ratio(1, 2); 8];
    CatalogEntry {
        name: "E8".into(),
        dim: 8,
        generator: Generator::Basis(rows),
        reference_perimeter: None,
        reference_facet_count: None,
        notes: "even unimodular lattice in dimension 8; cell geometry is a stretch target".into(),
    }
}

fn leech() -> CatalogEntry {
    CatalogEntry {
        name: "Leech-meta".into(),
        dim: 24,
        generator: Generator::None,
        reference_perimeter: None,
        reference_facet_count: None,
        notes: "Leech lattice in dimension 24; beyond the geometry cap, metadata only".into(),
    }
}

/// Looks up `Zn(n)`, `A(n)`, `D(n)`, `hexagonal`, `BCC`, `FCC`, `D4`, `E8`,
/// `Leech-meta` (case-insensitive).
pub fn get(name: &str) -> Result<CatalogEntry> {
    let unknown = || Error::UnknownLattice(name.to_string());
    let key = name.trim();
    let lower = key.to_ascii_lowercase();
    let param = |prefix: &str| -> Option<usize> {
        lower
            .strip_prefix(prefix)?
            .strip_prefix('(')?
            .strip_suffix(')')?
            .trim()
            .parse()
            .ok()
    };
    let in_range = |n: usize| (crate::lattice::MIN_DIM..=crate::lattice::MAX_DIM).contains(&n);
    if let Some(n) = param("zn") {
        return in_range(n).then(|| zn(n)).ok_or_else(unknown);
    }
    if let Some(n) = param("a") {
        return in_range(n).then(|| a_n(n)).ok_or_else(unknown);
    }
    if let Some(n) = param("d") {
        return (in_range(n) && n >= 3).then(|| d_n(n)).ok_or_else(unknown);
    }
    match lower.as_str() {
        "hexagonal" | "hex" => Ok(hexagonal()),
        "bcc" => Ok(bcc()),
        "fcc" => Ok(fcc()),
        "d4" => Ok(d_n(4)),
        "e8" => Ok(e8()),
        "leech" | "leech-meta" => Ok(leech()),
        _ => Err(unknown()),
    }
}

/// Every entry, in a fixed order.
pub fn list() -> Vec<CatalogEntry> {
    vec![
        zn(2),
        zn(3),
        zn(4),
        hexagonal(),
        bcc(),
        fcc(),
        d_n(4),
        a_n(4),
        e8(),
        leech(),
    ]
}

/// Entries with a basis in dimension `n`.
pub fn entries_of_dim(n: usize) -> Vec<CatalogEntry> {
    list()
        .into_iter()
        .filter(|e| e.dim == n && e.has_basis())
        .collect()
}
