//! Minimisation of `Per_φ(V_G)` over lattices of fixed covolume.
//!
//! Lattices are encoded as unconstrained parameter vectors; every decoded
//! lattice is rescaled to the target covolume, so the constraint is exact
//! and the search itself is unconstrained Nelder–Mead.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::anisotropy::{perimeter, NormSpec};
use crate::catalog;
use crate::error::{Error, Result};
use crate::lattice::{reduce_basis, Lattice, DEFAULT_ENUMERATION_BUDGET, MAX_DIM, MIN_DIM};
use crate::nelder_mead::{nelder_mead, NelderMeadParams};
use crate::voronoi::{build_cell_with, GeometryConfig};

/// Largest dimension searched without an explicit budget override.
pub const ROUTINE_MAX_DIM: usize = 5;

/// Values closer than this are ties between restarts.
const TIE_TOL: f64 = 1e-12;

/// Strict improvement threshold for [`polish`].
pub const POLISH_IMPROVEMENT: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Lower-triangular factor of the Gram matrix, log-diagonal first.
    /// Only meaningful for rotation-invariant norms.
    GramCholesky,
    /// All `n²` basis entries, row-major.
    FullBasis,
}

impl std::str::FromStr for ParamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gram_cholesky" | "gram" => Ok(ParamMode::GramCholesky),
            "full_basis" | "full" => Ok(ParamMode::FullBasis),
            _ => Err(Error::InvalidConfig(format!("unknown parameter mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpace {
    pub dim: usize,
    pub mode: ParamMode,
    pub target_covolume: f64,
}

impl ParamSpace {
    pub fn new(dim: usize, mode: ParamMode, target_covolume: f64) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(Error::DimensionUnsupported(dim));
        }
        if !(target_covolume.is_finite() && target_covolume > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "target covolume must be positive, got {target_covolume}"
            )));
        }
        Ok(ParamSpace {
            dim,
            mode,
            target_covolume,
        })
    }

    pub fn param_count(&self) -> usize {
        match self.mode {
            ParamMode::GramCholesky => self.dim * (self.dim + 1) / 2,
            ParamMode::FullBasis => self.dim * self.dim,
        }
    }

    pub fn encode(&self, lattice: &Lattice) -> Result<Vec<f64>> {
        let n = self.dim;
        if lattice.dim() != n {
            return Err(Error::InvalidConfig(format!(
                "lattice has dimension {}, parameter space {n}",
                lattice.dim()
            )));
        }
        match self.mode {
            ParamMode::FullBasis => Ok(lattice.rows().concat()),
            ParamMode::GramCholesky => {
                let chol = lattice.gram().clone().cholesky().ok_or_else(|| {
                    Error::GeometryDegenerate("Gram matrix is not positive definite".into())
                })?;
                let l = chol.l();
                let mut params: Vec<f64> = (0..n).map(|i| l[(i, i)].ln()).collect();
                for i in 1..n {
                    for j in 0..i {
                        params.push(l[(i, j)]);
                    }
                }
                Ok(params)
            }
        }
    }

    /// The lattice encoded by `params`, at covolume `target_covolume`.
    pub fn decode(&self, params: &[f64]) -> Result<Lattice> {
        let n = self.dim;
        if params.len() != self.param_count() {
            return Err(Error::InvalidConfig(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::MalformedBasis("non-finite parameter".into()));
        }
        let basis = match self.mode {
            ParamMode::FullBasis => DMatrix::from_row_slice(n, n, params),
            ParamMode::GramCholesky => {
                let mut l = DMatrix::zeros(n, n);
                for i in 0..n {
                    l[(i, i)] = params[i].exp();
                }
                let mut k = n;
                for i in 1..n {
                    for j in 0..i {
                        l[(i, j)] = params[k];
                        k += 1;
                    }
                }
                l
            }
        };
        let lattice = Lattice::from_matrix(basis)?;
        if lattice.covolume() == self.target_covolume {
            Ok(lattice)
        } else {
            lattice.with_covolume(self.target_covolume)
        }
    }
}

/// One objective evaluation: the perimeter and the facet count, or `+∞`
/// and 0 when the lattice is infeasible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub facets: usize,
}

pub fn evaluate(
    params: &[f64],
    space: &ParamSpace,
    spec: &NormSpec,
    geometry: &GeometryConfig,
) -> Evaluation {
    let value = space
        .decode(params)
        .and_then(|l| build_cell_with(&l, geometry))
        .and_then(|cell| Ok((perimeter(&cell, spec)?, cell.facets.len())));
    match value {
        Ok((value, facets)) if value.is_finite() => Evaluation { value, facets },
        _ => Evaluation {
            value: f64::INFINITY,
            facets: 0,
        },
    }
}

/// `Per_φ` of the decoded lattice, `+∞` when it is infeasible.
pub fn objective(params: &[f64], space: &ParamSpace, spec: &NormSpec) -> f64 {
    evaluate(params, space, spec, &GeometryConfig::default()).value
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    /// Random starts on top of the identity and catalog lattices.
    pub restarts: usize,
    /// Nelder–Mead iteration cap per round.
    pub max_iter: usize,
    /// Extra Nelder–Mead rounds from the best point with halved step.
    pub reinit_rounds: usize,
    pub initial_step: f64,
    pub value_tol: f64,
    pub diameter_tol: f64,
    pub seed: u64,
    /// Enumeration cap; required for `n > 5`.
    pub budget_override: Option<u64>,
    /// Additional starting lattices, tried after the catalog ones.
    #[serde(skip)]
    pub extra_starts: Vec<(String, Lattice)>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 20,
            max_iter: 2000,
            reinit_rounds: 3,
            initial_step: 0.25,
            value_tol: 1e-10,
            diameter_tol: 1e-9,
            seed: 0,
            budget_override: None,
            extra_starts: Vec::new(),
        }
    }
}

impl OptimizerConfig {
    fn nelder_mead(&self) -> NelderMeadParams {
        NelderMeadParams {
            value_tol: self.value_tol,
            diameter_tol: self.diameter_tol,
            max_iter: self.max_iter,
            ..Default::default()
        }
    }

    fn geometry(&self) -> GeometryConfig {
        GeometryConfig {
            budget: self.budget_override.unwrap_or(DEFAULT_ENUMERATION_BUDGET),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    pub origin: String,
    pub start_value: f64,
    pub value: f64,
    pub facets: usize,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolishSummary {
    pub start_value: f64,
    pub improvement: f64,
    /// Whether the value dropped by more than [`POLISH_IMPROVEMENT`].
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationRun {
    pub config: OptimizerConfig,
    pub space: ParamSpace,
    pub norm: NormSpec,
    pub best_lattice: Lattice,
    /// Gram matrix of the LLL-reduced best basis.
    pub reduced_gram: Vec<Vec<f64>>,
    pub best_value: f64,
    pub best_facets: usize,
    pub best_origin: String,
    /// Best value per iteration of the winning restart.
    pub trajectory: Vec<f64>,
    pub facet_history: Vec<usize>,
    pub status: RunStatus,
    pub restarts: Vec<RestartSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polish: Option<PolishSummary>,
}

struct Start {
    origin: String,
    params: Vec<f64>,
}

struct Local {
    params: Vec<f64>,
    summary: RestartSummary,
    trajectory: Vec<f64>,
    facet_history: Vec<usize>,
}

fn validate(space: &ParamSpace, spec: &NormSpec, config: &OptimizerConfig) -> Result<()> {
    spec.check_dim(space.dim)?;
    if space.dim > ROUTINE_MAX_DIM && config.budget_override.is_none() {
        return Err(Error::InvalidConfig(format!(
            "dimension {} needs an explicit enumeration budget",
            space.dim
        )));
    }
    if space.mode == ParamMode::GramCholesky && !spec.is_isotropic() {
        return Err(Error::InvalidConfig(
            "anisotropic norms need the full_basis parameter space".into(),
        ));
    }
    if !(config.initial_step.is_finite() && config.initial_step > 0.0) {
        return Err(Error::InvalidConfig("initial step must be positive".into()));
    }
    Ok(())
}

/// A random start `L` lower-triangular with normal entries and the diagonal
/// shifted positive; the Gram matrix is `L·Lᵀ`.
fn random_start(n: usize, seed: u64, index: usize) -> Result<Lattice> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let z: f64 = StandardNormal.sample(&mut rng);
            l[(i, j)] = if i == j { z.abs() + 0.5 } else { z };
        }
    }
    Lattice::from_matrix(l)
}

fn starts(space: &ParamSpace, config: &OptimizerConfig) -> Result<Vec<Start>> {
    let n = space.dim;
    let mut lattices = vec![("identity".to_string(), Lattice::integer(n)?)];
    for entry in catalog::entries_of_dim(n) {
        lattices.push((format!("catalog:{}", entry.name), entry.lattice()?));
    }
    lattices.extend(config.extra_starts.iter().cloned());
    for k in 0..config.restarts {
        lattices.push((format!("random:{k}"), random_start(n, config.seed, k)?));
    }
    lattices
        .into_iter()
        .map(|(origin, l)| {
            let l = l.with_covolume(space.target_covolume)?;
            Ok(Start {
                origin,
                params: space.encode(&l)?,
            })
        })
        .collect()
}

fn local_search(
    index: usize,
    start: &Start,
    space: &ParamSpace,
    spec: &NormSpec,
    config: &OptimizerConfig,
    step: f64,
) -> Local {
    let geometry = config.geometry();
    let params = config.nelder_mead();
    let f = |x: &[f64]| {
        let e = evaluate(x, space, spec, &geometry);
        (e.value, e.facets)
    };
    let start_value = f(&start.params).0;

    let mut x = start.params.clone();
    let mut trajectory: Vec<f64> = Vec::new();
    let mut facet_history = Vec::new();
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut converged = false;
    let mut value = f64::INFINITY;
    let mut facets = 0;
    let mut step = step;
    for round in 0..=config.reinit_rounds {
        let out = nelder_mead(f, &x, step, &params);
        iterations += out.iterations;
        evaluations += out.evaluations;
        trajectory.extend(&out.trajectory);
        facet_history.extend(&out.tags);
        converged = out.converged;
        let gain = value - out.value;
        if out.value <= value {
            x = out.x;
            value = out.value;
            facets = out.tag;
        }
        if round > 0 && !(gain > config.value_tol) {
            break;
        }
        step *= 0.5;
    }
    // Rounds restart from the incumbent, so only a float tie can make the
    // concatenated record rise; keep it monotone.
    for i in 1..trajectory.len() {
        if trajectory[i] > trajectory[i - 1] {
            trajectory[i] = trajectory[i - 1];
            facet_history[i] = facet_history[i - 1];
        }
    }
    Local {
        params: x,
        summary: RestartSummary {
            index,
            origin: start.origin.clone(),
            start_value,
            value,
            facets,
            iterations,
            evaluations,
            converged,
        },
        trajectory,
        facet_history,
    }
}

fn reduced_gram(lattice: &Lattice) -> Vec<Vec<f64>> {
    let g = match reduce_basis(lattice) {
        Ok(r) => r.gram().clone(),
        Err(_) => lattice.gram().clone(),
    };
    (0..g.nrows())
        .map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect())
        .collect()
}

fn lex_cmp(a: &[Vec<f64>], b: &[Vec<f64>]) -> std::cmp::Ordering {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn assemble(
    space: ParamSpace,
    spec: &NormSpec,
    config: &OptimizerConfig,
    locals: Vec<Local>,
) -> Result<OptimizationRun> {
    let mut best: Option<(usize, Lattice, Vec<Vec<f64>>)> = None;
    for (i, local) in locals.iter().enumerate() {
        let value = local.summary.value;
        if !value.is_finite() {
            continue;
        }
        let lattice = space.decode(&local.params)?;
        let gram = reduced_gram(&lattice);
        let better = match &best {
            None => true,
            Some((j, _, g)) => {
                let incumbent = locals[*j].summary.value;
                value < incumbent - TIE_TOL
                    || (value <= incumbent + TIE_TOL && lex_cmp(&gram, g).is_lt())
            }
        };
        if better {
            best = Some((i, lattice, gram));
        }
    }
    let Some((i, best_lattice, reduced_gram)) = best else {
        return Err(Error::GeometryDegenerate(
            "no starting point has a finite objective".into(),
        ));
    };
    let winner = &locals[i];
    Ok(OptimizationRun {
        config: config.clone(),
        space,
        norm: spec.clone(),
        best_lattice,
        reduced_gram,
        best_value: winner.summary.value,
        best_facets: winner.summary.facets,
        best_origin: winner.summary.origin.clone(),
        trajectory: winner.trajectory.clone(),
        facet_history: winner.facet_history.clone(),
        status: if winner.summary.converged {
            RunStatus::Converged
        } else {
            RunStatus::BudgetExhausted
        },
        restarts: locals.into_iter().map(|l| l.summary).collect(),
        polish: None,
    })
}

/// Nelder–Mead from the identity, every catalog lattice of the dimension,
/// any extra starts, and `config.restarts` seeded random lattices. The
/// result is deterministic given the configuration.
pub fn minimize(
    space: ParamSpace,
    spec: &NormSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationRun> {
    validate(&space, spec, config)?;
    let starts = starts(&space, config)?;
    let locals: Vec<Local> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| local_search(i, s, &space, spec, config, config.initial_step))
        .collect();
    assemble(space, spec, config, locals)
}

/// Local search with a tight simplex around `lattice`, reporting whether a
/// strict improvement exists at that resolution.
pub fn polish(
    lattice: &Lattice,
    spec: &NormSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationRun> {
    let mode = if spec.is_isotropic() {
        ParamMode::GramCholesky
    } else {
        ParamMode::FullBasis
    };
    let space = ParamSpace::new(lattice.dim(), mode, lattice.covolume())?;
    let config = OptimizerConfig {
        restarts: 0,
        initial_step: 1e-3,
        ..config.clone()
    };
    validate(&space, spec, &config)?;
    let start = Start {
        origin: "polish".into(),
        params: space.encode(lattice)?,
    };
    let local = local_search(0, &start, &space, spec, &config, config.initial_step);
    let start_value = local.summary.start_value;
    let mut run = assemble(space, spec, &config, vec![local])?;
    let improvement = start_value - run.best_value;
    run.polish = Some(PolishSummary {
        start_value,
        improvement,
        improved: improvement > POLISH_IMPROVEMENT,
    });
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex_value() -> f64 {
        6.0 * 2f64.sqrt() * 3f64.powf(-0.75)
    }

    fn gram_close(a: &Lattice, b: &Lattice, tol: f64) -> bool {
        (a.gram() - b.gram()).abs().max() <= tol
    }

    #[test]
    fn encode_decode_round_trip() {
        let l = catalog::get("bcc").unwrap().unit_lattice().unwrap();
        let gram = ParamSpace::new(3, ParamMode::GramCholesky, 1.0).unwrap();
        let back = gram.decode(&gram.encode(&l).unwrap()).unwrap();
        assert!(gram_close(&l, &back, 1e-10));

        let full = ParamSpace::new(3, ParamMode::FullBasis, 1.0).unwrap();
        let back = full.decode(&full.encode(&l).unwrap()).unwrap();
        assert!((back.basis() - l.basis()).abs().max() <= 1e-15);
    }

    #[test]
    fn decoded_covolume_is_target() {
        let space = ParamSpace::new(3, ParamMode::GramCholesky, 2.5).unwrap();
        let d = space.decode(&[0.3, -0.2, 0.1, 0.7, -1.1, 0.4]).unwrap();
        assert!((d.covolume() / 2.5 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_examples() {
        let e = NormSpec::euclidean();
        let space = ParamSpace::new(2, ParamMode::GramCholesky, 1.0).unwrap();
        let z2 = space.encode(&Lattice::integer(2).unwrap()).unwrap();
        assert!((objective(&z2, &space, &e) - 4.0).abs() < 1e-12);
        let hex = catalog::get("hexagonal").unwrap().unit_lattice().unwrap();
        let p = space.encode(&hex).unwrap();
        assert!((objective(&p, &space, &e) / hex_value() - 1.0).abs() < 1e-10);

        let bcc = catalog::get("bcc").unwrap().unit_lattice().unwrap();
        let s3 = ParamSpace::new(3, ParamMode::GramCholesky, 1.0).unwrap();
        let want = (6.0 + 12.0 * 3f64.sqrt()) * (8.0 * 2f64.sqrt()).powf(-2.0 / 3.0);
        let got = objective(&s3.encode(&bcc).unwrap(), &s3, &e);
        assert!((got / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singular_params_are_infinite() {
        let space = ParamSpace::new(2, ParamMode::FullBasis, 1.0).unwrap();
        let e = NormSpec::euclidean();
        assert_eq!(objective(&[1.0, 2.0, 2.0, 4.0], &space, &e), f64::INFINITY);
        assert_eq!(objective(&[f64::NAN, 0.0, 0.0, 1.0], &space, &e), f64::INFINITY);
    }

    #[test]
    fn config_validation() {
        let e = NormSpec::euclidean();
        let space = ParamSpace::new(6, ParamMode::GramCholesky, 1.0).unwrap();
        let err = minimize(space, &e, &OptimizerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));

        let aniso = NormSpec::weighted(vec![2.0, 1.0]).unwrap();
        let space = ParamSpace::new(2, ParamMode::GramCholesky, 1.0).unwrap();
        assert!(minimize(space, &aniso, &OptimizerConfig::default()).is_err());
        assert!(ParamSpace::new(9, ParamMode::FullBasis, 1.0).is_err());
        assert!(ParamSpace::new(2, ParamMode::FullBasis, 0.0).is_err());
    }

    #[test]
    fn two_dimensional_search_finds_hexagon() {
        let config = OptimizerConfig {
            restarts: 4,
            seed: 3,
            ..Default::default()
        };
        let space = ParamSpace::new(2, ParamMode::GramCholesky, 1.0).unwrap();
        let run = minimize(space, &NormSpec::euclidean(), &config).unwrap();
        assert!((run.best_value - hex_value()).abs() < 1e-4, "{}", run.best_value);
        assert!(run.trajectory.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(run.trajectory.len(), run.facet_history.len());
        assert_eq!(run.restarts.len(), 2 + 1 + 4);
        assert!((run.best_lattice.covolume() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn polish_square_and_hexagon() {
        let e = NormSpec::euclidean();
        let config = OptimizerConfig::default();
        let sq = polish(&Lattice::integer(2).unwrap(), &e, &config).unwrap();
        let summary = sq.polish.unwrap();
        assert!(summary.improved);
        assert!(sq.best_value < 4.0);

        let hex = catalog::get("hexagonal").unwrap().unit_lattice().unwrap();
        let run = polish(&hex, &e, &config).unwrap();
        assert!(!run.polish.unwrap().improved);
    }
}
