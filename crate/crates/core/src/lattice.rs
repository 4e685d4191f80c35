//! Full-rank lattices in ℝⁿ: construction, LLL reduction, ellipsoid
//! enumeration of lattice points and the shortest-vector problem.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

/// Lovász parameter of the LLL reduction.
pub const LLL_DELTA: f64 = 0.99;

/// Default cap on the number of enumeration-tree nodes.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

/// A full-rank lattice given by generator rows `v_1 … v_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeJson", into = "LatticeJson")]
pub struct Lattice {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
    covolume: f64,
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    dim: usize,
    basis: Vec<Vec<f64>>,
}

impl TryFrom<LatticeJson> for Lattice {
    type Error = Error;

    fn try_from(json: LatticeJson) -> Result<Self> {
        if json.basis.len() != json.dim {
            return Err(Error::MalformedBasis(format!(
                "dim is {} but basis has {} rows",
                json.dim,
                json.basis.len()
            )));
        }
        make_lattice(&json.basis)
    }
}

impl From<Lattice> for LatticeJson {
    fn from(lattice: Lattice) -> Self {
        LatticeJson {
            dim: lattice.dim(),
            basis: lattice.rows(),
        }
    }
}

/// Builds a lattice from generator rows. The basis is stored as given.
pub fn make_lattice(rows: &[Vec<f64>]) -> Result<Lattice> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::MalformedBasis(format!(
            "expected {n} columns, found a row with {}",
            bad.len()
        )));
    }
    if !(MIN_DIM..=MAX_DIM).contains(&n) {
        return Err(Error::DimensionUnsupported(n));
    }
    let basis = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Lattice::from_matrix(basis)
}

impl Lattice {
    pub fn from_matrix(basis: DMatrix<f64>) -> Result<Self> {
        let n = basis.nrows();
        if basis.ncols() != n {
            return Err(Error::MalformedBasis(format!(
                "basis is {}x{}, not square",
                n,
                basis.ncols()
            )));
        }
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::DimensionUnsupported(n));
        }
        let max_row = (0..n)
            .map(|i| basis.row(i).norm())
            .fold(0.0_f64, f64::max);
        let det = basis.determinant();
        let threshold = 1e-10 * max_row.powi(n as i32);
        // NaN entries fail this comparison as well.
        if !(det.abs() > threshold) || !det.is_finite() {
            return Err(Error::SingularBasis { det, threshold });
        }
        let gram = &basis * basis.transpose();
        Ok(Lattice {
            basis,
            gram,
            covolume: det.abs(),
        })
    }

    /// ℤⁿ.
    pub fn integer(n: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn covolume(&self) -> f64 {
        self.covolume
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.basis.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.row(i)).collect()
    }

    /// The lattice `s·G`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::from_matrix(&self.basis * s)
    }

    /// Rescales so that the covolume equals `m`.
    pub fn with_covolume(&self, m: f64) -> Result<Self> {
        let s = (m / self.covolume).powf(1.0 / self.dim() as f64);
        self.scaled(s)
    }

    /// The lattice generated by the rows of `transform · basis`.
    pub fn transformed(&self, transform: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(transform * &self.basis)
    }

    /// Orthogonality defect `∏|v_i| / d(G)`.
    pub fn orthogonality_defect(&self) -> f64 {
        let prod: f64 = (0..self.dim()).map(|i| self.basis.row(i).norm()).product();
        prod / self.covolume
    }

    /// A random lattice of covolume 1 with standard-normal basis entries.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::DimensionUnsupported(n));
        }
        loop {
            let basis = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(lattice) = Self::from_matrix(basis) {
                // Skip the rare nearly-flat draws; they only stress enumeration.
                if lattice.orthogonality_defect() < 1e3 {
                    return lattice.with_covolume(1.0);
                }
            }
        }
    }
}

/// Gram–Schmidt data of a basis: `mu[i][j]` for `j < i` and `|b*_i|²`.
pub(crate) struct GramSchmidt {
    pub mu: Vec<Vec<f64>>,
    pub norms2: Vec<f64>,
}

pub(crate) fn gram_schmidt(rows: &[Vec<f64>]) -> GramSchmidt {
    let n = rows.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms2 = vec![0.0; n];
    for i in 0..n {
        let mut v = rows[i].clone();
        for j in 0..i {
            mu[i][j] = dot(&rows[i], &star[j]) / norms2[j];
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= mu[i][j] * sk;
            }
        }
        mu[i][i] = 1.0;
        norms2[i] = dot(&v, &v);
        star.push(v);
    }
    GramSchmidt { mu, norms2 }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// LLL-reduced basis together with the integer transform `U`,
/// `reduced = U · original`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub lattice: Lattice,
    pub transform: Vec<Vec<i64>>,
}

/// LLL reduction with parameter [`LLL_DELTA`]. The result generates the
/// same group; only the basis changes.
pub fn reduce_basis(lattice: &Lattice) -> Result<Lattice> {
    Ok(reduce_with_transform(lattice)?.lattice)
}

pub fn reduce_with_transform(lattice: &Lattice) -> Result<Reduction> {
    let n = lattice.dim();
    let mut b = lattice.rows();
    let mut u: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
        .collect();

    let mut k = 1;
    let mut steps = 0usize;
    while k < n {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::GeometryDegenerate(
                "LLL reduction did not terminate".into(),
            ));
        }
        let mut gs = gram_schmidt(&b);
        for j in (0..k).rev() {
            let q = gs.mu[k][j].round();
            if q != 0.0 {
                let (head, tail) = b.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= q * y;
                }
                let qi = q as i64;
                let (head, tail) = u.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= qi * y;
                }
                for i in 0..j {
                    gs.mu[k][i] -= q * gs.mu[j][i];
                }
                gs.mu[k][j] -= q;
            }
        }
        let lhs = gs.norms2[k];
        let rhs = (LLL_DELTA - gs.mu[k][k - 1].powi(2)) * gs.norms2[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(Reduction {
        lattice: make_lattice(&b)?,
        transform: u,
    })
}

/// A lattice vector with its integer coordinates in the input basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coords: Vec<f64>,
    pub coeffs: Vec<i64>,
    pub norm: f64,
}

impl LatticePoint {
    pub fn negated(&self) -> LatticePoint {
        LatticePoint {
            coords: self.coords.iter().map(|x| -x).collect(),
            coeffs: self.coeffs.iter().map(|x| -x).collect(),
            norm: self.norm,
        }
    }
}

/// True when the first coordinate that is not negligible is positive.
pub fn is_canonical_sign(v: &[f64]) -> bool {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    v.iter()
        .find(|x| x.abs() > 1e-9 * scale)
        .is_some_and(|x| *x > 0.0)
}

/// All nonzero lattice vectors of norm at most `radius`, one per sign pair
/// (the canonical sign, see [`is_canonical_sign`]), sorted by norm.
pub fn enumerate_points(lattice: &Lattice, radius: f64) -> Result<Vec<LatticePoint>> {
    enumerate_points_with_budget(lattice, radius, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumerate_points_with_budget(
    lattice: &Lattice,
    radius: f64,
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    let reduction = reduce_with_transform(lattice)?;
    enumerate_reduced(&reduction, radius, budget)
}

pub(crate) fn enumerate_reduced(
    reduction: &Reduction,
    radius: f64,
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "enumeration radius must be positive and finite, got {radius}"
        )));
    }
    let rows = reduction.lattice.rows();
    let n = rows.len();
    let gs = gram_schmidt(&rows);
    let bound = radius * radius * (1.0 + 1e-12);

    let mut x = vec![0i64; n];
    let mut out = Vec::new();
    let mut nodes: u64 = 0;
    enumerate_level(
        n - 1,
        0.0,
        &gs,
        bound,
        &mut x,
        &mut nodes,
        budget,
        &mut |x| {
            if x.iter().all(|&c| c == 0) {
                return;
            }
            let coords: Vec<f64> = (0..n)
                .map(|j| (0..n).map(|i| x[i] as f64 * rows[i][j]).sum())
                .collect();
            if !is_canonical_sign(&coords) {
                return;
            }
            let norm = dot(&coords, &coords).sqrt();
            if norm > radius * (1.0 + 1e-12) {
                return;
            }
            let coeffs = (0..n)
                .map(|j| (0..n).map(|i| x[i] * reduction.transform[i][j]).sum())
                .collect();
            out.push(LatticePoint {
                coords,
                coeffs,
                norm,
            });
        },
    )?;
    out.sort_by(|a, b| a.norm.total_cmp(&b.norm).then_with(|| a.coeffs.cmp(&b.coeffs)));
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_level(
    level: usize,
    partial: f64,
    gs: &GramSchmidt,
    bound: f64,
    x: &mut [i64],
    nodes: &mut u64,
    budget: u64,
    emit: &mut dyn FnMut(&[i64]),
) -> Result<()> {
    let n = x.len();
    let center: f64 = -(level + 1..n)
        .map(|i| x[i] as f64 * gs.mu[i][level])
        .sum::<f64>();
    let remaining = bound - partial;
    if remaining < 0.0 {
        return Ok(());
    }
    let width = (remaining / gs.norms2[level]).sqrt();
    let lo = (center - width).ceil() as i64;
    let hi = (center + width).floor() as i64;
    for c in lo..=hi {
        *nodes += 1;
        if *nodes > budget {
            return Err(Error::EnumerationBudgetExceeded { cap: budget });
        }
        let d = c as f64 - center;
        let p = partial + d * d * gs.norms2[level];
        if p > bound {
            continue;
        }
        x[level] = c;
        if level == 0 {
            emit(x);
        } else {
            enumerate_level(level - 1, p, gs, bound, x, nodes, budget, emit)?;
        }
    }
    x[level] = 0;
    Ok(())
}

/// λ(G), ρ_G, r_G and the kissing set (up to sign).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeInvariants {
    pub lambda_min: f64,
    pub packing_radius: f64,
    pub covering_radius: f64,
    pub shortest_vectors: Vec<LatticePoint>,
}

/// λ(G) and every vector attaining it, one per sign pair.
pub fn minimum_vectors(lattice: &Lattice) -> Result<(f64, Vec<LatticePoint>)> {
    let reduction = reduce_with_transform(lattice)?;
    minimum_vectors_reduced(&reduction, DEFAULT_ENUMERATION_BUDGET)
}

pub(crate) fn minimum_vectors_reduced(
    reduction: &Reduction,
    budget: u64,
) -> Result<(f64, Vec<LatticePoint>)> {
    let basis = reduction.lattice.basis();
    let radius = (0..basis.nrows())
        .map(|i| basis.row(i).norm())
        .fold(f64::INFINITY, f64::min);
    let points = enumerate_reduced(reduction, radius, budget)?;
    let lambda = points
        .iter()
        .map(|p| p.norm)
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-10 * lambda.min(1.0);
    let shortest = points
        .into_iter()
        .filter(|p| p.norm - lambda <= tol)
        .collect();
    Ok((lambda, shortest))
}

/// Exact λ(G) by enumeration, together with ρ_G = λ/2 and the covering
/// radius read off the Voronoi cell.
pub fn shortest_vector(lattice: &Lattice) -> Result<LatticeInvariants> {
    let (lambda_min, shortest_vectors) = minimum_vectors(lattice)?;
    let cell = crate::voronoi::build_cell(lattice)?;
    Ok(LatticeInvariants {
        lambda_min,
        packing_radius: lambda_min / 2.0,
        covering_radius: cell.covering_radius,
        shortest_vectors,
    })
}
