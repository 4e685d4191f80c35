//! Bounded convex polytopes as incremental half-space intersections.
//!
//! Vertices carry the set of half-spaces they are tight on; edges are
//! recovered combinatorially (two vertices are adjacent iff no third vertex
//! is tight on every half-space they share), which stays correct for the
//! highly degenerate cells of root lattices. Measures of faces of every
//! dimension come from a recursive pyramid decomposition anchored at face
//! centroids.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::lattice::dot;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64).max(1)])
    }

    pub fn set(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.0.len() {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
    }

    pub fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    pub fn or_assign(&mut self, other: &Bits) {
        if other.0.len() > self.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    /// `self ⊆ other`
    pub fn subset_of(&self, other: &Bits) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(i, a)| a & !other.0.get(i).copied().unwrap_or(0) == 0)
    }
}

/// `normal · x ≤ offset`
#[derive(Clone, Debug)]
pub(crate) struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
    norm: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        let norm = dot(&normal, &normal).sqrt();
        HalfSpace {
            normal,
            offset,
            norm,
        }
    }

    /// Signed Euclidean distance to the boundary, positive inside.
    pub fn slack(&self, x: &[f64]) -> f64 {
        (self.offset - dot(&self.normal, x)) / self.norm
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Vertex {
    pub x: Vec<f64>,
    pub active: Bits,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tolerances {
    /// A half-space is inserted only if some vertex violates it by more.
    pub cut: f64,
    /// Vertices within this distance of a hyperplane are tight on it.
    pub on: f64,
    /// Vertices closer than this are merged.
    pub merge: f64,
    /// Residual below which a direction is considered dependent.
    pub rank: f64,
}

impl Tolerances {
    pub fn for_scale(scale: f64) -> Self {
        Tolerances {
            cut: 1e-10 * scale,
            on: 1e-9 * scale,
            merge: 1e-9 * scale,
            rank: 1e-9 * scale,
        }
    }
}

#[derive(Debug)]
pub(crate) struct Polytope {
    dim: usize,
    pub halfspaces: Vec<HalfSpace>,
    pub vertices: Vec<Vertex>,
    edges: Vec<(usize, usize)>,
    tol: Tolerances,
    work: u64,
    budget: u64,
}

impl Polytope {
    /// The parallelotope `{x : |x·b_i| ≤ c_i}` with half-spaces ordered
    /// `+b_0, −b_0, +b_1, −b_1, …`.
    pub fn parallelotope(
        rows: &[Vec<f64>],
        offsets: &[f64],
        tol: Tolerances,
        budget: u64,
    ) -> Option<Self> {
        let n = rows.len();
        let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let lu = mat.lu();
        let mut halfspaces = Vec::with_capacity(2 * n);
        for (row, &c) in rows.iter().zip(offsets) {
            halfspaces.push(HalfSpace::new(row.clone(), c));
            halfspaces.push(HalfSpace::new(row.iter().map(|x| -x).collect(), c));
        }
        let mut vertices = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let rhs = nalgebra::DVector::from_fn(n, |i, _| {
                if mask & (1 << i) == 0 {
                    offsets[i]
                } else {
                    -offsets[i]
                }
            });
            let x = lu.solve(&rhs)?;
            let x: Vec<f64> = x.iter().copied().collect();
            let mut active = Bits::new(2 * n);
            for i in 0..n {
                active.set(2 * i + usize::from(mask & (1 << i) != 0));
            }
            vertices.push(Vertex { x, active });
        }
        let mut edges = Vec::with_capacity(n << n.saturating_sub(1));
        for mask in 0..(1usize << n) {
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    edges.push((mask, mask | (1 << i)));
                }
            }
        }
        edges.sort_unstable();
        Some(Polytope {
            dim: n,
            halfspaces,
            vertices,
            edges,
            tol,
            work: 0,
            budget,
        })
    }

    /// Pairs of adjacent vertices, `a < b`, sorted.
    #[cfg(test)]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Intersects with `h`. Returns false (and leaves the polytope untouched)
    /// when `h` does not cut off any vertex.
    ///
    /// Edges are updated incrementally: surviving edges stay, each cut edge
    /// leaves a stub to its new vertex, and the remaining new edges lie in
    /// the new facet, where they are found combinatorially.
    pub fn cut(&mut self, h: HalfSpace) -> Result<bool> {
        let slacks: Vec<f64> = self.vertices.iter().map(|v| h.slack(&v.x)).collect();
        if slacks.iter().all(|&s| s >= -self.tol.cut) {
            return Ok(false);
        }
        let idx = self.halfspaces.len();
        self.halfspaces.push(h);
        let on = self.tol.on;

        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept: Vec<Vertex> = Vec::with_capacity(self.vertices.len());
        let mut facet: Vec<usize> = Vec::new();
        for (i, (v, &s)) in self.vertices.iter().zip(&slacks).enumerate() {
            if s < -on {
                continue;
            }
            let mut v = v.clone();
            if s.abs() <= on {
                v.active.set(idx);
                facet.push(kept.len());
            }
            remap[i] = kept.len();
            kept.push(v);
        }

        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.edges.len());
        for &(a, b) in &self.edges {
            let (sa, sb) = (slacks[a], slacks[b]);
            if remap[a] != usize::MAX && remap[b] != usize::MAX {
                edges.push((remap[a], remap[b]));
                continue;
            }
            let (inside, outside, si, so) = if sa > on && sb < -on {
                (a, b, sa, sb)
            } else if sb > on && sa < -on {
                (b, a, sb, sa)
            } else {
                continue;
            };
            let t = si / (si - so);
            let p = &self.vertices[inside].x;
            let q = &self.vertices[outside].x;
            let x: Vec<f64> = p.iter().zip(q).map(|(pi, qi)| pi + t * (qi - pi)).collect();
            self.work += facet.len() as u64;
            let id = match facet
                .iter()
                .copied()
                .find(|&f| dist(&kept[f].x, &x) <= self.tol.merge)
            {
                Some(f) => {
                    let active = self.tight_set(&x);
                    kept[f].active.or_assign(&active);
                    f
                }
                None => {
                    let active = self.tight_set(&x);
                    kept.push(Vertex { x, active });
                    facet.push(kept.len() - 1);
                    kept.len() - 1
                }
            };
            edges.push((remap[inside], id));
        }

        let need = self.dim.saturating_sub(1) as u32;
        for (i, &a) in facet.iter().enumerate() {
            self.work += facet.len() as u64;
            if self.work > self.budget {
                return Err(Error::EnumerationBudgetExceeded { cap: self.budget });
            }
            for &b in &facet[i + 1..] {
                let common = kept[a].active.and(&kept[b].active);
                if common.count() < need {
                    continue;
                }
                self.work += facet.len() as u64;
                let blocked = facet
                    .iter()
                    .any(|&c| c != a && c != b && common.subset_of(&kept[c].active));
                if !blocked {
                    edges.push((a, b));
                }
            }
        }
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.retain(|&(a, b)| a != b);

        self.vertices = kept;
        self.edges = edges;
        if self.work > self.budget {
            return Err(Error::EnumerationBudgetExceeded { cap: self.budget });
        }
        Ok(true)
    }

    fn tight_set(&self, x: &[f64]) -> Bits {
        let mut bits = Bits::new(self.halfspaces.len());
        for (j, h) in self.halfspaces.iter().enumerate() {
            if h.slack(x).abs() <= self.tol.on {
                bits.set(j);
            }
        }
        bits
    }

    /// Vertex ids tight on half-space `j`.
    pub fn face_of(&self, j: usize) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.vertices[i].active.get(j))
            .collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Orthonormal basis of the direction space of the affine hull of `pts`.
pub(crate) fn affine_basis(pts: &[&[f64]], tol: f64) -> Vec<Vec<f64>> {
    let Some((first, rest)) = pts.split_first() else {
        return Vec::new();
    };
    let mut residuals: Vec<Vec<f64>> = rest
        .iter()
        .map(|p| p.iter().zip(first.iter()).map(|(a, b)| a - b).collect())
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    loop {
        let best = residuals
            .iter()
            .enumerate()
            .map(|(i, r)| (i, dot(r, r)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, n2)) = best else { break };
        if n2.sqrt() <= tol {
            break;
        }
        let norm = n2.sqrt();
        let e: Vec<f64> = residuals.swap_remove(i).iter().map(|x| x / norm).collect();
        for r in residuals.iter_mut() {
            let c = dot(r, &e);
            for (rk, ek) in r.iter_mut().zip(&e) {
                *rk -= c * ek;
            }
        }
        basis.push(e);
    }
    basis
}

/// Measures of faces of a finished polytope, memoised by vertex set.
pub(crate) struct FaceMeasure<'a> {
    poly: &'a Polytope,
    memo: HashMap<Vec<usize>, f64>,
}

impl<'a> FaceMeasure<'a> {
    pub fn new(poly: &'a Polytope) -> Self {
        FaceMeasure {
            poly,
            memo: HashMap::new(),
        }
    }

    fn points(&self, ids: &[usize]) -> Vec<&'a [f64]> {
        ids.iter().map(|&i| self.poly.vertices[i].x.as_slice()).collect()
    }

    pub fn rank(&self, ids: &[usize]) -> usize {
        affine_basis(&self.points(ids), self.poly.tol.rank).len()
    }

    /// Facets of the `k`-face spanned by `ids`, each tagged with one
    /// half-space that cuts it out.
    pub fn subfaces(&self, ids: &[usize], k: usize) -> Vec<(usize, Vec<usize>)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        if k == 0 {
            return out;
        }
        for j in 0..self.poly.halfspaces.len() {
            let sub: Vec<usize> = ids
                .iter()
                .copied()
                .filter(|&i| self.poly.vertices[i].active.get(j))
                .collect();
            if sub.is_empty() || sub.len() == ids.len() || seen.contains(&sub) {
                continue;
            }
            if self.rank(&sub) + 1 == k {
                seen.insert(sub.clone());
                out.push((j, sub));
            }
        }
        out
    }

    /// `k`-dimensional measure of the face spanned by `ids`:
    /// `vol_k(F) = (1/k) Σ_g dist(c_F, aff g) · vol_{k−1}(g)`.
    pub fn measure(&mut self, ids: &[usize], k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if let Some(&m) = self.memo.get(ids) {
            return m;
        }
        let n = self.poly.dim;
        let centroid: Vec<f64> = (0..n)
            .map(|c| ids.iter().map(|&i| self.poly.vertices[i].x[c]).sum::<f64>() / ids.len() as f64)
            .collect();
        let mut total = 0.0;
        for (_, sub) in self.subfaces(ids, k) {
            let pts = self.points(&sub);
            let dirs = affine_basis(&pts, self.poly.tol.rank);
            let mut w: Vec<f64> = pts[0].iter().zip(&centroid).map(|(p, c)| p - c).collect();
            for e in &dirs {
                let c = dot(&w, e);
                for (wk, ek) in w.iter_mut().zip(e) {
                    *wk -= c * ek;
                }
            }
            let height = dot(&w, &w).sqrt();
            total += height * self.measure(&sub, k - 1);
        }
        let m = total / k as f64;
        self.memo.insert(ids.to_vec(), m);
        m
    }
}
