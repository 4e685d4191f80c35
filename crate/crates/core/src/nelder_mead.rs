//! Nelder–Mead simplex search.
//!
//! The objective returns a value and an auxiliary tag (the optimizer uses
//! it for facet counts); `+∞` marks infeasible points and is never accepted
//! over a finite value.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NelderMeadParams {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when `f_worst − f_best` falls below this.
    pub value_tol: f64,
    /// Stop when every vertex is this close to the best one.
    pub diameter_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadParams {
    fn default() -> Self {
        NelderMeadParams {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            value_tol: 1e-10,
            diameter_tol: 1e-9,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome<T> {
    pub x: Vec<f64>,
    pub value: f64,
    pub tag: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration (non-increasing).
    pub trajectory: Vec<f64>,
    /// Tag of the best vertex after each iteration.
    pub tags: Vec<T>,
}

#[derive(Clone)]
struct Point<T> {
    x: Vec<f64>,
    f: f64,
    tag: T,
}

pub fn nelder_mead<T, F>(
    mut objective: F,
    x0: &[f64],
    step: f64,
    params: &NelderMeadParams,
) -> NelderMeadOutcome<T>
where
    T: Clone,
    F: FnMut(&[f64]) -> (f64, T),
{
    let dim = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: Vec<f64>| {
        evaluations += 1;
        let (f, tag) = objective(&x);
        let f = if f.is_nan() { f64::INFINITY } else { f };
        Point { x, f, tag }
    };

    let mut simplex: Vec<Point<T>> = Vec::with_capacity(dim + 1);
    simplex.push(eval(x0.to_vec()));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push(eval(x));
    }

    let mut trajectory = Vec::new();
    let mut tags = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        // Stable sort keeps the older vertex first on ties.
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let best = &simplex[0];
        trajectory.push(best.f);
        tags.push(best.tag.clone());

        let worst = &simplex[dim];
        let spread = worst.f - best.f;
        let diameter = simplex[1..]
            .iter()
            .map(|p| distance(&p.x, &best.x))
            .fold(0.0, f64::max);
        if best.f.is_finite() && (spread < params.value_tol || diameter < params.diameter_tol) {
            converged = true;
            break;
        }
        if iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|p| p.x[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].x)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = eval(along(params.reflection));
        if reflected.f < simplex[0].f {
            let expanded = eval(along(params.reflection * params.expansion));
            simplex[dim] = if expanded.f < reflected.f {
                expanded
            } else {
                reflected
            };
            continue;
        }
        if reflected.f < simplex[dim - 1].f {
            simplex[dim] = reflected;
            continue;
        }
        let contracted = if reflected.f < simplex[dim].f {
            eval(along(params.reflection * params.contraction))
        } else {
            eval(along(-params.contraction))
        };
        if contracted.f < simplex[dim].f.min(reflected.f) {
            simplex[dim] = contracted;
            continue;
        }
        let anchor = simplex[0].x.clone();
        for p in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = anchor
                .iter()
                .zip(&p.x)
                .map(|(a, xi)| a + params.shrink * (xi - a))
                .collect();
            *p = eval(x);
        }
    }

    let best = simplex.swap_remove(0);
    NelderMeadOutcome {
        x: best.x,
        value: best.f,
        tag: best.tag,
        iterations,
        evaluations,
        converged,
        trajectory,
        tags,
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
