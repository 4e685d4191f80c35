//! Analysis reports, the randomized invariant suite, and stable number
//! formatting for everything the CLI prints.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::anisotropy::{perimeter, NormSpec};
use crate::bounds::bounds_row;
use crate::error::{Error, Result};
use crate::lattice::{enumerate_points_with_budget, Lattice, MAX_DIM, MIN_DIM};
use crate::voronoi::{build_cell_with, contains, GeometryConfig, VoronoiCell};

/// Significant digits kept in JSON and CSV output.
pub const SIGNIFICANT_DIGITS: usize = 9;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Rounded decimal rendering used in CSV output.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        round_sig(x).to_string()
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if !(num.is_i64() || num.is_u64()) => {
            if let Some(x) = num.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                    *num = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`SIGNIFICANT_DIGITS`].
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Error::InvalidConfig(format!("serialization failed: {e}")))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)
        .map_err(|e| Error::InvalidConfig(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Nonnegative when the inequality holds.
    pub slack: f64,
    pub pass: bool,
}

impl InequalityCheck {
    /// `lhs ≥ rhs`, passing up to a relative rounding allowance.
    fn at_least(name: &str, relation: &str, lhs: f64, rhs: f64) -> Self {
        let slack = lhs - rhs;
        InequalityCheck {
            name: name.into(),
            relation: relation.into(),
            lhs,
            rhs,
            slack,
            pass: slack >= -1e-12 * lhs.abs().max(rhs.abs()),
        }
    }

    fn at_most(name: &str, relation: &str, lhs: f64, rhs: f64) -> Self {
        let mut c = Self::at_least(name, relation, rhs, lhs);
        std::mem::swap(&mut c.lhs, &mut c.rhs);
        c
    }
}

/// The three perimeter inequalities every lattice cell satisfies:
/// `λ ≥ 2d/Per`, `Per ≤ n·d/ρ` and `Per ≥ nω_n^{1/n}·d^{(n−1)/n}`.
pub fn inequality_checks(cell: &VoronoiCell, per: f64) -> Vec<InequalityCheck> {
    let n = cell.dim();
    let d = cell.lattice.covolume();
    let lambda = cell.lambda_min;
    let rho = lambda / 2.0;
    let lower = bounds_row(n).lower * d.powf((n as f64 - 1.0) / n as f64);
    vec![
        InequalityCheck::at_least("packing_lower", "lambda >= 2 d / Per", lambda, 2.0 * d / per),
        InequalityCheck::at_most("packing_upper", "Per <= n d / rho", per, n as f64 * d / rho),
        InequalityCheck::at_least(
            "isoperimetric_lower",
            "Per >= n omega_n^(1/n) d^((n-1)/n)",
            per,
            lower,
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    pub lambda_min: f64,
    pub packing_radius: f64,
    pub covering_radius: f64,
    pub covolume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormPerimeter {
    pub norm: String,
    pub perimeter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub facet_count: usize,
    pub vertex_count: usize,
    pub volume: f64,
    pub perimeter: f64,
    pub perimeters: Vec<NormPerimeter>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub lattice: Lattice,
    pub invariants: Invariants,
    pub cell: CellSummary,
    pub checks: Vec<InequalityCheck>,
    pub all_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

/// Builds the cell and reports invariants, perimeters for each norm (the
/// Euclidean one always), and the inequality checks. Wall-clock time is
/// recorded only when `timing` is set, so reports stay reproducible.
pub fn analyze(
    lattice: &Lattice,
    norms: &[NormSpec],
    geometry: &GeometryConfig,
    timing: bool,
) -> Result<AnalysisReport> {
    let start = Instant::now();
    let cell = build_cell_with(lattice, geometry)?;
    let per = perimeter(&cell, &NormSpec::euclidean())?;
    let perimeters = norms
        .iter()
        .map(|spec| {
            Ok(NormPerimeter {
                norm: spec.label(),
                perimeter: perimeter(&cell, spec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = inequality_checks(&cell, per);
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(AnalysisReport {
        lattice: lattice.clone(),
        invariants: Invariants {
            lambda_min: cell.lambda_min,
            packing_radius: cell.lambda_min / 2.0,
            covering_radius: cell.covering_radius,
            covolume: lattice.covolume(),
        },
        cell: CellSummary {
            facet_count: cell.facets.len(),
            vertex_count: cell.vertices.len(),
            volume: cell.volume,
            perimeter: per,
            perimeters,
        },
        checks,
        all_pass,
        timing_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Names of the checks run by [`run_checks`], in report order.
pub const CHECK_NAMES: [&str; 10] = [
    "volume",
    "divergence",
    "facet_cap",
    "symmetry",
    "packing_lower",
    "packing_upper",
    "isoperimetric_lower",
    "lambda_facet",
    "unimodular",
    "tiling",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckTally {
    pub passed: usize,
    pub failed: usize,
    /// Smallest margin seen; negative means a failure.
    pub worst_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionChecks {
    pub dim: usize,
    pub samples: usize,
    pub checks: BTreeMap<String, CheckTally>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub samples: usize,
    pub tiling_points: usize,
    pub dimensions: Vec<DimensionChecks>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub dims: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Random points per lattice for the tiling check.
    pub tiling_points: usize,
    pub geometry: GeometryConfig,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            dims: vec![2, 3, 4],
            samples: 100,
            seed: 0,
            tiling_points: 20,
            geometry: GeometryConfig::default(),
        }
    }
}

/// A random unimodular matrix: a product of elementary row operations.
pub fn random_unimodular<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut u = DMatrix::<f64>::identity(n, n);
    for _ in 0..2 * n {
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let k = [-2.0, -1.0, 1.0, 2.0][rng.random_range(0..4)];
        let row = u.row(j).clone_owned() * k;
        let mut target = u.row_mut(i);
        target += row;
    }
    if rng.random_bool(0.5) {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        u.swap_rows(i, j);
    }
    u
}

/// Number of lattice translates of the cell that contain `x`.
fn covering_multiplicity(cell: &VoronoiCell, x: &[f64], geometry: &GeometryConfig) -> Result<usize> {
    let lattice = &cell.lattice;
    let n = lattice.dim();
    let b = lattice.basis();
    let inv = b
        .clone()
        .try_inverse()
        .ok_or(Error::GeometryDegenerate("basis not invertible".into()))?;
    let xv = nalgebra::RowDVector::from_row_slice(x);
    let t = (&xv * inv).map(f64::round);
    let y: Vec<f64> = (&xv - t * b).iter().copied().collect();
    let radius = y.iter().map(|v| v * v).sum::<f64>().sqrt() + cell.covering_radius;
    let mut count = usize::from(contains(cell, &y));
    for p in enumerate_points_with_budget(lattice, radius * (1.0 + 1e-9), geometry.budget)? {
        // One vector per sign pair.
        for sign in [1.0, -1.0] {
            let z: Vec<f64> = (0..n).map(|i| y[i] - sign * p.coords[i]).collect();
            count += usize::from(contains(cell, &z));
        }
    }
    Ok(count)
}

struct Outcome {
    name: &'static str,
    margin: f64,
}

fn sample_checks(
    lattice: &Lattice,
    rng: &mut ChaCha8Rng,
    config: &CheckConfig,
) -> Result<Vec<Outcome>> {
    let n = lattice.dim();
    let g = &config.geometry;
    let cell = build_cell_with(lattice, g)?;
    let d = lattice.covolume();
    let per = perimeter(&cell, &NormSpec::euclidean())?;
    let mut out = Vec::new();
    let mut push = |name: &'static str, margin: f64| out.push(Outcome { name, margin });

    push("volume", 1e-8 - (cell.volume / d - 1.0).abs());
    push(
        "divergence",
        1e-8 - (cell.divergence_sum() / (n as f64 * cell.volume) - 1.0).abs(),
    );
    let cap = 2 * ((1usize << n) - 1);
    push("facet_cap", cap as f64 - cell.facets.len() as f64);
    let asym = cell
        .facets
        .chunks(2)
        .map(|pair| {
            if pair.len() != 2 {
                return f64::INFINITY;
            }
            let (a, b) = (&pair[0], &pair[1]);
            let opp = a
                .relevant_vector
                .iter()
                .zip(&b.relevant_vector)
                .map(|(x, y)| (x + y).abs())
                .fold(0.0, f64::max)
                / cell.lambda_min;
            opp.max((a.measure / b.measure - 1.0).abs())
        })
        .fold(0.0, f64::max);
    push("symmetry", 1e-9 - asym);
    for c in inequality_checks(&cell, per) {
        let name = CHECK_NAMES.iter().find(|n| **n == c.name).copied().unwrap_or("inequality");
        // Random lattices are never equality cases; demand strict slack.
        push(name, c.slack);
    }
    push(
        "lambda_facet",
        1e-12 - (2.0 * cell.min_facet_distance() / cell.lambda_min - 1.0).abs(),
    );

    let u = random_unimodular(n, rng);
    let other = build_cell_with(&lattice.transformed(&u)?, g)?;
    let other_per = perimeter(&other, &NormSpec::euclidean())?;
    let drift = (other.volume / cell.volume - 1.0)
        .abs()
        .max((other_per / per - 1.0).abs())
        .max((other.facets.len() as f64 - cell.facets.len() as f64).abs());
    push("unimodular", 1e-9 - drift);

    let mut worst = 0i64;
    for _ in 0..config.tiling_points {
        let t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| t[i] * lattice.basis()[(i, j)]).sum())
            .collect();
        let k = covering_multiplicity(&cell, &x, g)? as i64;
        worst = worst.max((k - 1).abs());
    }
    push("tiling", -(worst as f64));
    Ok(out)
}

/// Seeded random lattices per dimension, each run through the full
/// invariant suite. Deterministic given the configuration.
pub fn run_checks(config: &CheckConfig) -> Result<CheckReport> {
    let mut dimensions = Vec::new();
    for &n in &config.dims {
        if !(MIN_DIM..=MAX_DIM).contains(&n) {
            return Err(Error::DimensionUnsupported(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(n as u64);
        let mut checks: BTreeMap<String, CheckTally> = CHECK_NAMES
            .iter()
            .map(|name| {
                (
                    name.to_string(),
                    CheckTally {
                        worst_margin: f64::INFINITY,
                        ..Default::default()
                    },
                )
            })
            .collect();
        let mut failures = Vec::new();
        for s in 0..config.samples {
            let lattice = Lattice::random(n, &mut rng)?;
            match sample_checks(&lattice, &mut rng, config) {
                Ok(outcomes) => {
                    for o in outcomes {
                        let tally = checks.entry(o.name.to_string()).or_default();
                        tally.worst_margin = tally.worst_margin.min(o.margin);
                        if o.margin >= 0.0 {
                            tally.passed += 1;
                        } else {
                            tally.failed += 1;
                            failures.push(format!("sample {s}: {} margin {:e}", o.name, o.margin));
                        }
                    }
                }
                Err(e) => failures.push(format!("sample {s}: {e}")),
            }
        }
        dimensions.push(DimensionChecks {
            dim: n,
            samples: config.samples,
            checks,
            failures,
        });
    }
    let all_pass = dimensions.iter().all(|d| d.failures.is_empty());
    Ok(CheckReport {
        seed: config.seed,
        samples: config.samples,
        tiling_points: config.tiling_points,
        dimensions,
        all_pass,
    })
}
