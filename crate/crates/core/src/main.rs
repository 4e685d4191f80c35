use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use foamlat::bounds::bounds_row;
use foamlat::catalog;
use foamlat::export::{export, ExportFormat};
use foamlat::lattice::{make_lattice, DEFAULT_ENUMERATION_BUDGET};
use foamlat::optimizer::{self, OptimizerConfig, ParamMode, ParamSpace, RunStatus};
use foamlat::report::{self, fmt_num, to_json, CheckConfig};
use foamlat::voronoi::{build_cell_with, GeometryConfig};
use foamlat::{perimeter, Error, Lattice, NormSpec};

/// Voronoi cells of lattices, their perimeters, and searches for
/// perimeter-minimising lattice tilings.
#[derive(Parser)]
#[command(name = "foamlat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Invariants, perimeters and inequality checks for one lattice.
    Analyze(AnalyzeArgs),
    /// Build a Voronoi cell and export it.
    Voronoi(VoronoiArgs),
    /// Search for the lattice of least cell perimeter.
    Optimize(OptimizeArgs),
    /// Table of the isoperimetric bracket as CSV.
    Bounds(BoundsArgs),
    /// List or show reference lattices.
    Catalog(CatalogArgs),
    /// Run the invariant suite on seeded random lattices.
    Check(CheckArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Lattice JSON file, or catalog:NAME.
    lattice: String,
    /// Extra norms (euclidean, p:1.5, p:inf, weighted:2,1 or JSON).
    #[arg(long = "norm")]
    norms: Vec<String>,
    /// Include wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VoronoiArgs {
    lattice: String,
    #[arg(long, default_value = "json")]
    export: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=8))]
    dim: Option<u64>,
    /// Target covolume.
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value = "euclidean")]
    norm: String,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra starting lattice; with --restarts 0 only this one is polished.
    #[arg(long)]
    init: Option<String>,
    /// gram_cholesky or full_basis; defaults by norm.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Enumeration cap; needed above dimension 5.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 2)]
    from: usize,
    #[arg(long, default_value_t = 8)]
    to: usize,
    /// Lattice whose covolume-1 perimeter is placed in the bracket.
    #[arg(long)]
    witness: Option<String>,
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long)]
    name: Option<String>,
    /// Export the covolume-1 cell: svg, off or json.
    #[arg(long)]
    export: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    tiling_points: usize,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_geometric() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult = Result<u8, Failure>;

fn geometry() -> Result<GeometryConfig, Failure> {
    Ok(GeometryConfig {
        budget: env_budget()?.unwrap_or(DEFAULT_ENUMERATION_BUDGET),
    })
}

fn env_budget() -> Result<Option<u64>, Failure> {
    match std::env::var("FOAMLAT_BUDGET") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("FOAMLAT_BUDGET is not an integer: {s:?}"))),
        Err(_) => Ok(None),
    }
}

#[derive(serde::Deserialize)]
struct LatticeFile {
    dim: Option<usize>,
    basis: Vec<Vec<f64>>,
}

/// `catalog:NAME` (rescaled to covolume 1) or a JSON file with a `basis`.
fn load_lattice(source: &str) -> Result<Lattice, Failure> {
    if let Some(name) = source.strip_prefix("catalog:") {
        return Ok(catalog::get(name)?.unit_lattice()?);
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| usage(format!("cannot read {source}: {e}")))?;
    let file: LatticeFile = serde_json::from_str(&text)
        .map_err(|e| usage(format!("cannot parse {source}: {e}")))?;
    if let Some(dim) = file.dim {
        if dim != file.basis.len() {
            return Err(Error::MalformedBasis(format!(
                "dim is {dim} but the basis has {} rows",
                file.basis.len()
            ))
            .into());
        }
    }
    Ok(make_lattice(&file.basis)?)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| usage(format!("cannot write output: {e}")))
        }
    }
}

fn analyze(args: AnalyzeArgs) -> CliResult {
    let lattice = load_lattice(&args.lattice)?;
    let norms = args
        .norms
        .iter()
        .map(|s| s.parse::<NormSpec>())
        .collect::<Result<Vec<_>, _>>()?;
    let report = report::analyze(&lattice, &norms, &geometry()?, args.timing)?;
    emit(&to_json(&report)?, None)?;
    Ok(if report.all_pass { 0 } else { 1 })
}

fn voronoi(args: VoronoiArgs) -> CliResult {
    let format: ExportFormat = args.export.parse()?;
    let lattice = load_lattice(&args.lattice)?;
    let cell = build_cell_with(&lattice, &geometry()?)?;
    emit(&export(&cell, format)?, args.out.as_ref())?;
    Ok(0)
}

fn optimize(args: OptimizeArgs) -> CliResult {
    let spec: NormSpec = args.norm.parse()?;
    let init = args.init.as_deref().map(load_lattice).transpose()?;
    let dim = match (args.dim, &init) {
        (Some(d), _) => d as usize,
        (None, Some(l)) => l.dim(),
        (None, None) => return Err(usage("--dim is required without --init")),
    };
    let mode = match &args.mode {
        Some(m) => m.parse()?,
        None if spec.is_isotropic() => ParamMode::GramCholesky,
        None => ParamMode::FullBasis,
    };
    let space = ParamSpace::new(dim, mode, args.m)?;
    let budget_override = match args.budget {
        Some(b) => Some(b),
        None => env_budget()?,
    };
    let mut config = OptimizerConfig {
        restarts: args.restarts,
        max_iter: args.max_iter,
        seed: args.seed,
        budget_override,
        ..Default::default()
    };
    let run = match init {
        Some(l) if args.restarts == 0 => {
            if l.dim() != dim {
                return Err(usage("--init dimension differs from --dim"));
            }
            optimizer::polish(&l.with_covolume(args.m)?, &spec, &config)?
        }
        Some(l) => {
            config
                .extra_starts
                .push((args.init.clone().unwrap_or_default(), l));
            optimizer::minimize(space, &spec, &config)?
        }
        None => optimizer::minimize(space, &spec, &config)?,
    };
    emit(&to_json(&run)?, args.out.as_ref())?;
    Ok(match run.status {
        RunStatus::Converged => 0,
        RunStatus::BudgetExhausted => 1,
    })
}

fn bounds(args: BoundsArgs) -> CliResult {
    if args.from < 2 {
        return Err(usage("--from must be at least 2"));
    }
    if args.to < args.from {
        return Err(usage("--to must not be below --from"));
    }
    let witness = match &args.witness {
        Some(source) => {
            let l = load_lattice(source)?.with_covolume(1.0)?;
            let cell = build_cell_with(&l, &geometry()?)?;
            Some((l.dim(), perimeter(&cell, &NormSpec::euclidean())?))
        }
        None => None,
    };
    let mut out = String::from("n,omega_n,zeta_n,lower,upper,mh_radius,asymptote");
    if witness.is_some() {
        out.push_str(",witness,in_bracket");
    }
    out.push('\n');
    for n in args.from..=args.to {
        let r = bounds_row(n);
        let cols = [
            r.omega_n,
            r.zeta_n,
            r.lower,
            r.upper,
            r.mh_packing_radius,
            r.asymptote,
        ];
        out.push_str(&n.to_string());
        for c in cols {
            out.push(',');
            out.push_str(&fmt_num(c));
        }
        if let Some((dim, w)) = witness {
            if dim == n {
                let inside = r.lower <= w && w <= r.upper;
                out.push_str(&format!(",{},{inside}", fmt_num(w)));
            } else {
                out.push_str(",,");
            }
        }
        out.push('\n');
    }
    emit(&out, None)?;
    Ok(0)
}

fn catalog_cmd(args: CatalogArgs) -> CliResult {
    let Some(name) = args.name else {
        if args.export.is_some() {
            return Err(usage("--export needs --name"));
        }
        emit(&to_json(&catalog::list())?, None)?;
        return Ok(0);
    };
    let entry = catalog::get(&name)?;
    match args.export {
        None => emit(&to_json(&entry)?, None)?,
        Some(format) => {
            let format: ExportFormat = format.parse()?;
            let cell = build_cell_with(&entry.unit_lattice()?, &geometry()?)?;
            emit(&export(&cell, format)?, None)?;
        }
    }
    Ok(0)
}

fn check(args: CheckArgs) -> CliResult {
    let config = CheckConfig {
        dims: args.dims,
        samples: args.samples,
        seed: args.seed,
        tiling_points: args.tiling_points,
        geometry: geometry()?,
    };
    let report = report::run_checks(&config)?;
    emit(&to_json(&report)?, None)?;
    Ok(if report.all_pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Voronoi(a) => voronoi(a),
        Command::Optimize(a) => optimize(a),
        Command::Bounds(a) => bounds(a),
        Command::Catalog(a) => catalog_cmd(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
