//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use foamlat::{reduce_basis, Lattice};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const BOX: i64 = 5;

pub fn hexagonal_unit() -> Lattice {
    foamlat::make_lattice(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])
        .unwrap()
        .with_covolume(1.0)
        .unwrap()
}

/// `6√2·3^{−3/4}`: regular hexagon of unit area.
pub fn hexagon_perimeter() -> f64 {
    6.0 * 2f64.sqrt() * 3f64.powf(-0.75)
}

/// Truncated octahedron of unit volume: `S = (6+12√3)a²`, `V = 8√2a³`.
pub fn truncated_octahedron_area() -> f64 {
    (6.0 + 12.0 * 3f64.sqrt()) * (8.0 * 2f64.sqrt()).powf(-2.0 / 3.0)
}

/// Rhombic dodecahedron of unit volume: `S = 8√2a²`, `V = 16√3a³/9`.
pub fn rhombic_dodecahedron_area() -> f64 {
    8.0 * 2f64.sqrt() * (9.0 / (16.0 * 3f64.sqrt())).powf(2.0 / 3.0)
}

/// Regular 24-cell of unit volume: all 24 facets at distance `2^{−3/4}`
/// after rescaling, so `S = 4V/h`.
pub fn twenty_four_cell_area() -> f64 {
    8.0 * 2f64.powf(-0.25)
}

pub fn random_lattices(n: usize, count: usize, seed: u64) -> Vec<Lattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Lattice::random(n, &mut rng).unwrap())
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Every nonzero combination of the LLL-reduced basis with coefficients
/// in `[−BOX, BOX]`.
pub fn box_points(lattice: &Lattice) -> Vec<Vec<f64>> {
    let rows = reduce_basis(lattice).unwrap().rows();
    let n = rows.len();
    let side = (2 * BOX + 1) as usize;
    let total = side.pow(n as u32);
    let mut out = Vec::with_capacity(total - 1);
    for idx in 0..total {
        let mut rem = idx;
        let mut v = vec![0.0; n];
        let mut zero = true;
        for row in &rows {
            let c = (rem % side) as i64 - BOX;
            rem /= side;
            if c != 0 {
                zero = false;
                for (vk, rk) in v.iter_mut().zip(row) {
                    *vk += c as f64 * rk;
                }
            }
        }
        if !zero {
            out.push(v);
        }
    }
    out
}

/// Minimum norm and the number of vectors attaining it.
pub fn box_shortest(lattice: &Lattice) -> (f64, usize) {
    let pts = box_points(lattice);
    let min = pts.iter().map(|p| norm2(p)).fold(f64::INFINITY, f64::min);
    let count = pts
        .iter()
        .filter(|p| norm2(p) <= min * (1.0 + 1e-9))
        .count();
    (min.sqrt(), count)
}

/// Vectors `v` such that `0` and `v` are the only closest lattice points
/// to `v/2`.
pub fn box_relevant(lattice: &Lattice) -> Vec<Vec<f64>> {
    let pts = box_points(lattice);
    let mut out = Vec::new();
    for v in &pts {
        let h: Vec<f64> = v.iter().map(|x| x / 2.0).collect();
        let r2 = norm2(&h);
        let tol = 1e-9 * norm2(v);
        let rival = pts.iter().any(|w| {
            !std::ptr::eq(w, v)
                && w.iter().zip(&h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2 + tol
        });
        if !rival {
            out.push(v.clone());
        }
    }
    out
}

/// Whether two vector sets agree up to order, coordinatewise within `tol`.
pub fn same_vectors(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|u| {
            b.iter()
                .any(|w| u.iter().zip(w).all(|(x, y)| (x - y).abs() <= tol))
        })
}
