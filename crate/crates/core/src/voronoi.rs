//! The Voronoi cell `V_G = {x : |x| ≤ |x − g| for all g ∈ G}` as an explicit
//! polytope.
//!
//! Construction:
//! 1. LLL-reduce the basis and bound the covering radius by
//!    `R̂ = ½ (Σ |b*_i|²)^{1/2}`.
//! 2. Enumerate lattice vectors of norm `≤ 2R̂`. A relevant vector is the
//!    unique (up to sign) shortest vector of its class in `G / 2G`, so only
//!    the near-shortest members of each class are kept as candidates.
//! 3. Start from the parallelotope cut out by the reduced basis vectors and
//!    intersect with the candidate half-spaces `x·v ≤ |v|²/2` in order of
//!    increasing norm, skipping those that do not cut.
//! 4. Facets are the half-spaces whose tight vertices span a hyperplane;
//!    measures come from the recursive pyramid decomposition.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    dot, enumerate_reduced, gram_schmidt, minimum_vectors_reduced, reduce_with_transform, Lattice,
    LatticePoint, DEFAULT_ENUMERATION_BUDGET,
};
use crate::polytope::{FaceMeasure, HalfSpace, Polytope, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    /// Cap on enumeration-tree nodes.
    pub budget: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            budget: DEFAULT_ENUMERATION_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Facet {
    /// Unit outward normal `v/|v|`.
    pub normal: Vec<f64>,
    pub relevant_vector: Vec<f64>,
    /// Coordinates of the relevant vector in the lattice's own basis.
    pub coeffs: Vec<i64>,
    /// `|v|/2`
    pub distance: f64,
    /// (n−1)-dimensional measure.
    pub measure: f64,
    /// Indices of facets sharing an (n−2)-face with this one.
    pub ridges: Vec<usize>,
    pub vertex_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoronoiCell {
    pub lattice: Lattice,
    /// Facets in ± pairs: `facets[2k]` and `facets[2k+1]` are opposite.
    pub facets: Vec<Facet>,
    pub vertices: Vec<Vec<f64>>,
    pub volume: f64,
    pub covering_radius: f64,
    /// λ(G), the shortest nonzero vector length.
    pub lambda_min: f64,
}

impl VoronoiCell {
    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Euclidean perimeter `Σ measure_i`.
    pub fn surface_area(&self) -> f64 {
        self.facets.iter().map(|f| f.measure).sum()
    }

    /// `Σ measure_i · h_i`, which equals `n · volume`.
    pub fn divergence_sum(&self) -> f64 {
        self.facets.iter().map(|f| f.measure * f.distance).sum()
    }

    pub fn min_facet_distance(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| f.distance)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_cell(lattice: &Lattice) -> Result<VoronoiCell> {
    build_cell_with(lattice, &GeometryConfig::default())
}

pub fn build_cell_with(lattice: &Lattice, config: &GeometryConfig) -> Result<VoronoiCell> {
    let n = lattice.dim();
    let reduction = reduce_with_transform(lattice)?;
    let (lambda, _) = minimum_vectors_reduced(&reduction, config.budget)?;

    let rows = reduction.lattice.rows();
    let gs = gram_schmidt(&rows);
    let cover_bound = 0.5 * gs.norms2.iter().sum::<f64>().sqrt();
    let candidates = enumerate_reduced(&reduction, 2.0 * cover_bound * (1.0 + 1e-9), config.budget)?;
    let candidates = shortest_per_class(candidates, &reduction.transform);

    let tol = Tolerances::for_scale(lambda);
    let offsets: Vec<f64> = rows.iter().map(|r| dot(r, r) / 2.0).collect();
    let mut poly = Polytope::parallelotope(&rows, &offsets, tol, config.budget)
        .ok_or_else(|| Error::GeometryDegenerate("reduced basis is singular".into()))?;

    // Lattice vector behind each half-space of `poly`, with its sign.
    let reduced_points: Vec<LatticePoint> = (0..n)
        .map(|i| {
            let coeffs = (0..n).map(|j| reduction.transform[i][j]).collect();
            LatticePoint {
                norm: dot(&rows[i], &rows[i]).sqrt(),
                coords: rows[i].clone(),
                coeffs,
            }
        })
        .collect();
    let mut sources: Vec<LatticePoint> = Vec::new();
    for p in &reduced_points {
        sources.push(p.clone());
        sources.push(p.negated());
    }

    for cand in &candidates {
        if reduced_points.iter().any(|p| same_vector(p, cand)) {
            continue;
        }
        for v in [cand.clone(), cand.negated()] {
            let h = HalfSpace::new(v.coords.clone(), v.norm * v.norm / 2.0);
            if poly.cut(h)? {
                sources.push(v);
            }
        }
    }

    assemble(lattice, &poly, &sources, lambda)
}

fn same_vector(a: &LatticePoint, b: &LatticePoint) -> bool {
    a.coeffs == b.coeffs || a.coeffs.iter().zip(&b.coeffs).all(|(x, y)| *x == -*y)
}

/// Keeps, for each nonzero class of `G/2G`, the vectors within a relative
/// 1e-8 of the class minimum.
fn shortest_per_class(points: Vec<LatticePoint>, transform: &[Vec<i64>]) -> Vec<LatticePoint> {
    // Parity is taken in reduced coordinates; invert through the transform.
    let n = transform.len();
    let inverse = integer_inverse(transform);
    let class_of = |p: &LatticePoint| -> Vec<u8> {
        (0..n)
            .map(|j| {
                let c: i64 = (0..n).map(|i| p.coeffs[i] * inverse[i][j]).sum();
                c.rem_euclid(2) as u8
            })
            .collect()
    };
    let mut best: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    for p in &points {
        let e = best.entry(class_of(p)).or_insert(f64::INFINITY);
        *e = e.min(p.norm);
    }
    points
        .into_iter()
        .filter(|p| {
            let m = best[&class_of(p)];
            p.norm * p.norm <= m * m * (1.0 + 1e-8)
        })
        .collect()
}

fn integer_inverse(u: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = u.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| u[i][j] as f64);
    let inv = m.try_inverse().expect("unimodular transform is invertible");
    (0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)].round() as i64).collect())
        .collect()
}

fn assemble(
    lattice: &Lattice,
    poly: &Polytope,
    sources: &[LatticePoint],
    lambda: f64,
) -> Result<VoronoiCell> {
    let n = lattice.dim();
    let mut fm = FaceMeasure::new(poly);
    let facet_floor = 1e-12 * lambda.powi(n as i32 - 1);

    // Facets by half-space index, ordered so that ± pairs are adjacent.
    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&sources[a], &sources[b]);
        pa.norm
            .total_cmp(&pb.norm)
            .then_with(|| canonical_key(pa).cmp(&canonical_key(pb)))
            .then_with(|| sign_rank(pa).cmp(&sign_rank(pb)))
    });

    let mut facets = Vec::new();
    for &j in &order {
        let ids = poly.face_of(j);
        if ids.len() < n || fm.rank(&ids) != n - 1 {
            continue;
        }
        let measure = fm.measure(&ids, n - 1);
        if measure <= facet_floor {
            continue;
        }
        let v = &sources[j];
        facets.push(Facet {
            normal: v.coords.iter().map(|x| x / v.norm).collect(),
            relevant_vector: v.coords.clone(),
            coeffs: v.coeffs.clone(),
            distance: v.norm / 2.0,
            measure,
            ridges: Vec::new(),
            vertex_ids: ids,
        });
    }
    for a in 0..facets.len() {
        for b in a + 1..facets.len() {
            let common: Vec<usize> = facets[a]
                .vertex_ids
                .iter()
                .copied()
                .filter(|i| facets[b].vertex_ids.binary_search(i).is_ok())
                .collect();
            if common.len() >= n - 1 && fm.rank(&common) == n - 2 {
                facets[a].ridges.push(b);
                facets[b].ridges.push(a);
            }
        }
    }

    let all: Vec<usize> = (0..poly.vertices.len()).collect();
    let volume = fm.measure(&all, n);
    let rel = (volume / lattice.covolume() - 1.0).abs();
    if !(rel < 1e-6) {
        return Err(Error::GeometryDegenerate(format!(
            "cell volume {volume} does not match covolume {} (relative error {rel:e})",
            lattice.covolume()
        )));
    }
    if facets.len() % 2 != 0 {
        return Err(Error::GeometryDegenerate(format!(
            "{} facets do not pair up under x -> -x",
            facets.len()
        )));
    }
    let vertices: Vec<Vec<f64>> = poly.vertices.iter().map(|v| v.x.clone()).collect();
    let covering_radius = vertices
        .iter()
        .map(|v| dot(v, v).sqrt())
        .fold(0.0, f64::max);
    Ok(VoronoiCell {
        lattice: lattice.clone(),
        facets,
        vertices,
        volume,
        covering_radius,
        lambda_min: lambda,
    })
}

fn canonical_key(p: &LatticePoint) -> Vec<i64> {
    if crate::lattice::is_canonical_sign(&p.coords) {
        p.coeffs.clone()
    } else {
        p.coeffs.iter().map(|c| -c).collect()
    }
}

fn sign_rank(p: &LatticePoint) -> u8 {
    u8::from(!crate::lattice::is_canonical_sign(&p.coords))
}

/// The facet-defining lattice vectors, both signs.
pub fn relevant_vectors(lattice: &Lattice) -> Result<Vec<Vec<f64>>> {
    Ok(build_cell(lattice)?
        .facets
        .into_iter()
        .map(|f| f.relevant_vector)
        .collect())
}

/// The covering radius `r_G`: the largest vertex norm.
pub fn covering_radius(cell: &VoronoiCell) -> f64 {
    cell.covering_radius
}

/// Whether `x` lies in the closed cell.
pub fn contains(cell: &VoronoiCell, x: &[f64]) -> bool {
    cell.facets.iter().all(|f| {
        let v = &f.relevant_vector;
        let half = dot(v, v) / 2.0;
        dot(x, v) <= half + 1e-12 * (1.0 + half)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::make_lattice;

    fn hexagonal() -> Lattice {
        make_lattice(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])
            .unwrap()
            .with_covolume(1.0)
            .unwrap()
    }

    #[test]
    fn square_cell() {
        let cell = build_cell(&Lattice::integer(2).unwrap()).unwrap();
        assert_eq!(cell.facets.len(), 4);
        assert_eq!(cell.vertices.len(), 4);
        assert!((cell.volume - 1.0).abs() < 1e-12);
        for f in &cell.facets {
            assert!((f.measure - 1.0).abs() < 1e-12);
            assert_eq!(f.ridges.len(), 2);
        }
        for v in &cell.vertices {
            assert!(v.iter().all(|x| (x.abs() - 0.5).abs() < 1e-12));
        }
        assert!((covering_radius(&cell) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cube_covering_radius() {
        let cell = build_cell(&Lattice::integer(3).unwrap()).unwrap();
        assert!((cell.covering_radius - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert_eq!(relevant_vectors(&Lattice::integer(3).unwrap()).unwrap().len(), 6);
    }

    #[test]
    fn hexagon_cell() {
        let cell = build_cell(&hexagonal()).unwrap();
        assert_eq!(cell.facets.len(), 6);
        assert!((cell.volume - 1.0).abs() < 1e-12);
        let per = 6.0 * 2f64.sqrt() * 3f64.powf(-0.75);
        assert!((cell.surface_area() - per).abs() < 1e-12);
        let circumradius = (2.0 / (3.0 * 3f64.sqrt())).sqrt();
        assert!((cell.covering_radius - circumradius).abs() < 1e-12);
        assert!((circumradius - 0.620_403_2).abs() < 1e-7);
        for f in &cell.facets {
            assert!((2.0 * f.distance - cell.lambda_min).abs() < 1e-12);
        }
    }

    #[test]
    fn facets_pair_up() {
        let l = make_lattice(&[vec![1.0, 0.2, 0.1], vec![0.3, 1.1, -0.2], vec![0.1, 0.4, 0.9]])
            .unwrap();
        let cell = build_cell(&l).unwrap();
        assert!(cell.facets.len() <= 14);
        for pair in cell.facets.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            for (x, y) in a.relevant_vector.iter().zip(&b.relevant_vector) {
                assert_eq!(*x, -*y);
            }
            assert!((a.measure / b.measure - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn contains_boundary_cases() {
        let cell = build_cell(&Lattice::integer(2).unwrap()).unwrap();
        assert!(contains(&cell, &[0.0, 0.0]));
        assert!(!contains(&cell, &[0.6, 0.0]));

        let cell = build_cell(&hexagonal()).unwrap();
        let (_, short) = crate::lattice::minimum_vectors(&cell.lattice).unwrap();
        let v = &short[0].coords;
        assert!(!contains(&cell, v));
        let half: Vec<f64> = v.iter().map(|x| x / 2.0).collect();
        assert!(contains(&cell, &half));
    }

    #[test]
    fn budget_error_propagates() {
        let err = build_cell_with(&Lattice::integer(4).unwrap(), &GeometryConfig { budget: 5 })
            .unwrap_err();
        assert!(matches!(err, Error::EnumerationBudgetExceeded { cap: 5 }));
    }
}
