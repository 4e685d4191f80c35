mod common;

use common::*;
use foamlat::catalog;
use foamlat::report::random_unimodular;
use foamlat::{
    build_cell, contains, perimeter, relevant_vectors, shortest_vector, Lattice, NormSpec,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn catalog_reference_values() {
    for entry in catalog::list() {
        if !entry.has_basis() || entry.dim > 6 {
            continue;
        }
        let cell = build_cell(&entry.unit_lattice().unwrap()).unwrap();
        if let Some(p) = entry.reference_perimeter {
            let got = perimeter(&cell, &NormSpec::euclidean()).unwrap();
            assert!((got / p - 1.0).abs() < 1e-7, "{}: {got} vs {p}", entry.name);
        }
        if let Some(k) = entry.reference_facet_count {
            assert_eq!(cell.facets.len(), k, "{}", entry.name);
        }
    }
}

#[test]
fn closed_forms_match_catalog() {
    let hex = catalog::get("hexagonal").unwrap();
    assert!((hex.reference_perimeter.unwrap() / hexagon_perimeter() - 1.0).abs() < 1e-12);
    let bcc = catalog::get("BCC").unwrap();
    assert!((bcc.reference_perimeter.unwrap() / truncated_octahedron_area() - 1.0).abs() < 1e-12);
    let fcc = catalog::get("FCC").unwrap();
    assert!((fcc.reference_perimeter.unwrap() / rhombic_dodecahedron_area() - 1.0).abs() < 1e-12);
    let d4 = catalog::get("D4").unwrap();
    assert!((d4.reference_perimeter.unwrap() / twenty_four_cell_area() - 1.0).abs() < 1e-12);
}

#[test]
fn root_lattices_facet_counts() {
    // A_n: n(n+1) facets (permutohedron); D_n, n ≥ 4: 2n(n−1).
    for n in 2..=5 {
        let a = catalog::get(&format!("A({n})")).unwrap().unit_lattice().unwrap();
        assert_eq!(build_cell(&a).unwrap().facets.len(), n * (n + 1));
    }
    for n in 4..=5 {
        let d = catalog::get(&format!("D({n})")).unwrap().unit_lattice().unwrap();
        assert_eq!(build_cell(&d).unwrap().facets.len(), 2 * n * (n - 1));
    }
}

#[test]
fn oracle_equivalence_small_sample() {
    for n in 2..=3 {
        for l in random_lattices(n, 15, 40 + n as u64) {
            let inv = shortest_vector(&l).unwrap();
            let (lambda, count) = box_shortest(&l);
            assert!((inv.lambda_min / lambda - 1.0).abs() < 1e-12);
            assert_eq!(inv.shortest_vectors.len() * 2, count);
            let rel = relevant_vectors(&l).unwrap();
            assert!(same_vectors(&rel, &box_relevant(&l), 1e-9));
        }
    }
}

#[test]
fn four_dimensional_relevant_vectors() {
    for l in random_lattices(4, 3, 9) {
        let rel = relevant_vectors(&l).unwrap();
        assert!(same_vectors(&rel, &box_relevant(&l), 1e-9));
    }
}

#[test]
fn cells_tile_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 2..=4 {
        for l in random_lattices(n, 5, 100 + n as u64) {
            let cell = build_cell(&l).unwrap();
            let pts = box_points(&l);
            for _ in 0..30 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
                let mut hits = usize::from(contains(&cell, &x));
                for p in &pts {
                    let y: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
                    hits += usize::from(contains(&cell, &y));
                }
                assert_eq!(hits, 1, "n = {n}, x = {x:?}");
            }
        }
    }
}

#[test]
fn builds_are_deterministic() {
    for l in random_lattices(4, 3, 5) {
        assert_eq!(build_cell(&l).unwrap(), build_cell(&l).unwrap());
    }
}

#[test]
fn e8_degrades_gracefully() {
    let e8 = catalog::get("E8").unwrap().lattice().unwrap();
    let err = build_cell(&e8).unwrap_err();
    assert!(err.is_geometric(), "{err}");
    assert!(catalog::get("Leech-meta").unwrap().lattice().is_err());
}

fn lattice_strategy(n: usize) -> impl Strategy<Value = Lattice> {
    proptest::collection::vec(-2.0f64..2.0, n * n).prop_filter_map("ill-conditioned", move |v| {
        let l = Lattice::from_matrix(DMatrix::from_row_slice(n, n, &v)).ok()?;
        (l.orthogonality_defect() < 50.0).then_some(l)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unimodular_invariance(l in (2usize..=4).prop_flat_map(lattice_strategy), seed in any::<u64>()) {
        let n = l.dim();
        let u = random_unimodular(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = build_cell(&l).unwrap();
        let b = build_cell(&l.transformed(&u).unwrap()).unwrap();
        let e = NormSpec::euclidean();
        let (pa, pb) = (perimeter(&a, &e).unwrap(), perimeter(&b, &e).unwrap());
        prop_assert!((pa / pb - 1.0).abs() < 1e-9);
        prop_assert_eq!(a.facets.len(), b.facets.len());
        prop_assert!((a.volume / b.volume - 1.0).abs() < 1e-9);
        prop_assert!(same_vectors(
            &a.facets.iter().map(|f| f.relevant_vector.clone()).collect::<Vec<_>>(),
            &b.facets.iter().map(|f| f.relevant_vector.clone()).collect::<Vec<_>>(),
            1e-8 * a.lambda_min.max(1.0),
        ));
    }

    #[test]
    fn scaling_law(l in (2usize..=4).prop_flat_map(lattice_strategy), s in 0.2f64..5.0) {
        let n = l.dim() as i32;
        let a = build_cell(&l).unwrap();
        let b = build_cell(&l.scaled(s).unwrap()).unwrap();
        let e = NormSpec::euclidean();
        let (pa, pb) = (perimeter(&a, &e).unwrap(), perimeter(&b, &e).unwrap());
        prop_assert!((pb / (pa * s.powi(n - 1)) - 1.0).abs() < 1e-9);
        prop_assert!((b.volume / (a.volume * s.powi(n)) - 1.0).abs() < 1e-9);
        prop_assert!((b.lambda_min / (a.lambda_min * s) - 1.0).abs() < 1e-12);
        prop_assert_eq!(a.facets.len(), b.facets.len());
    }

    #[test]
    fn cell_invariants(l in (2usize..=4).prop_flat_map(lattice_strategy)) {
        let n = l.dim();
        let cell = build_cell(&l).unwrap();
        prop_assert!((cell.volume / l.covolume() - 1.0).abs() < 1e-8);
        prop_assert!((cell.divergence_sum() / (n as f64 * cell.volume) - 1.0).abs() < 1e-8);
        prop_assert!(cell.facets.len() <= 2 * ((1 << n) - 1));
        prop_assert!(cell.facets.len() >= 2 * n);
        prop_assert!((2.0 * cell.min_facet_distance() / cell.lambda_min - 1.0).abs() < 1e-12);
        for pair in cell.facets.chunks(2) {
            for k in 0..n {
                prop_assert!((pair[0].relevant_vector[k] + pair[1].relevant_vector[k]).abs() < 1e-9);
            }
            prop_assert!((pair[0].measure / pair[1].measure - 1.0).abs() < 1e-9);
        }
        // Vertices are the farthest points; none lies outside the cell.
        for v in &cell.vertices {
            prop_assert!(contains(&cell, v));
        }
    }
}

#[test]
fn scaled_square_lattice() {
    let l = Lattice::integer(3).unwrap().scaled(2.0).unwrap();
    let cell = build_cell(&l).unwrap();
    assert!((perimeter(&cell, &NormSpec::euclidean()).unwrap() - 24.0).abs() < 1e-10);
    assert!((cell.covering_radius - 3f64.sqrt()).abs() < 1e-12);
}
