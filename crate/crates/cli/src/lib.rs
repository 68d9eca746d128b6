//! Command-line front end: dataset generation and ingestion, private
//! releases, workload evaluation and parameter sweeps.

pub mod config;

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use htf_core::baselines::{AdaptiveGridParams, KdTreeParams, LevelAlloc, QuadTreeParams};
use htf_core::experiment::{
    run_sweep, summarize, write_summary_csv, write_sweep_csv, SweepConfig, SweepMethod,
};
use htf_core::grid::{discretize, gaussian_points, generate_gaussian, read_points, write_points};
use htf_core::htf::{HtfParams, PartitionBudget, DEFAULT_C0};
use htf_core::queries::{
    evaluate, generate_workload, read_workload, write_workload, QueryShape, QuerySize,
    WorkloadSpec, DEFAULT_SMOOTHING,
};
use htf_core::{Bounds, Error, FrequencyMatrix, Mechanism, NoiseSource, PrivateHistogram, Result};

#[derive(Debug, Parser)]
#[command(
    name = "htf",
    version,
    about = "Differentially private spatial histograms"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic Gaussian point set.
    Generate(GenerateArgs),
    /// Bin a point file into a frequency matrix.
    Ingest(IngestArgs),
    /// Release a private histogram and its budget ledger.
    Release(ReleaseArgs),
    /// Measure relative errors of a released histogram on a query workload.
    Evaluate(EvaluateArgs),
    /// Run every method over budgets, query sizes and seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    /// Square grid side; shorthand for --rows N --cols N.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
}

impl GridArgs {
    fn dims(&self) -> Result<(usize, usize)> {
        let rows = self.rows.or(self.grid);
        let cols = self.cols.or(self.grid);
        match (rows, cols) {
            (Some(r), Some(c)) if r > 0 && c > 0 => Ok((r, c)),
            (Some(_), Some(_)) => Err(Error::Config("grid dimensions must be positive".into())),
            _ => Err(Error::Config(
                "grid size needed: --grid N or --rows/--cols".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Cluster spread, in cells.
    #[arg(long)]
    pub sigma: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Point file (`x,y` per line, cell units).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the binned frequency matrix.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub points: PathBuf,
    /// Domain rectangle `x_min,y_min,x_max,y_max`. Points outside are dropped.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    pub bounds: Vec<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Htf,
    Ug,
    Ag,
    Quadtree,
    Kdtree,
    Singular,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AllocArg {
    Uniform,
    Geometric,
}

impl From<AllocArg> for LevelAlloc {
    fn from(a: AllocArg) -> Self {
        match a {
            AllocArg::Uniform => LevelAlloc::Uniform,
            AllocArg::Geometric => LevelAlloc::Geometric,
        }
    }
}

/// Mechanism knobs shared by `release` and `sweep`.
#[derive(Debug, Args, Clone)]
pub struct MechanismArgs {
    #[arg(long, default_value_t = 0.1)]
    pub eps_tot: f64,
    /// Fixed partitioning budget per tree level (HTF).
    #[arg(long, conflicts_with = "eps_prt")]
    pub eps_prt_level: Option<f64>,
    /// Total partitioning budget, spread over the levels (HTF).
    #[arg(long)]
    pub eps_prt: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_height: f64,
    /// Split search rounds (HTF).
    #[arg(long = "T", alias = "rounds", default_value_t = 3)]
    pub rounds: u32,
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    pub stop_count: f64,
    #[arg(long, default_value_t = 5)]
    pub stop_cells: usize,
    /// Tree height; skips HTF height estimation.
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_C0)]
    pub c0: f64,
    /// Level budget allocation for quadtree and kd-tree.
    #[arg(long, value_enum, default_value_t = AllocArg::Geometric)]
    pub alloc: AllocArg,
    /// Hierarchical consistency for quadtree and kd-tree.
    #[arg(long)]
    pub smooth: bool,
    /// First-level budget share of the adaptive grid.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// kd-tree budget share for choosing splits.
    #[arg(long, default_value_t = 0.15)]
    pub structure_fraction: f64,
}

impl MechanismArgs {
    pub fn htf_params(&self) -> HtfParams {
        let partition = match (self.eps_prt, self.eps_prt_level) {
            (Some(total), _) => PartitionBudget::Total(total),
            (None, Some(level)) => PartitionBudget::PerLevel(level),
            (None, None) => PartitionBudget::PerLevel(5e-4),
        };
        HtfParams {
            eps_tot: self.eps_tot,
            eps_height: self.eps_height,
            partition,
            rounds: self.rounds,
            stop_count: self.stop_count,
            stop_cells: self.stop_cells,
            height_override: self.height,
            c0: self.c0,
        }
    }

    pub fn mechanism(&self, method: MethodArg) -> Mechanism {
        let eps_tot = self.eps_tot;
        match method {
            MethodArg::Htf => Mechanism::Htf(self.htf_params()),
            MethodArg::Ug => Mechanism::UniformGrid {
                eps_tot,
                c0: self.c0,
            },
            MethodArg::Ag => Mechanism::AdaptiveGrid {
                eps_tot,
                params: AdaptiveGridParams {
                    alpha: self.alpha,
                    c0: self.c0,
                },
            },
            MethodArg::Quadtree => Mechanism::QuadTree {
                eps_tot,
                params: QuadTreeParams {
                    height: self.height,
                    alloc: self.alloc.into(),
                    smooth: self.smooth,
                },
            },
            MethodArg::Kdtree => Mechanism::KdTree {
                eps_tot,
                params: KdTreeParams {
                    height: self.height,
                    structure_fraction: self.structure_fraction,
                    alloc: self.alloc.into(),
                    smooth: self.smooth,
                },
            },
            MethodArg::Singular => Mechanism::Singular { eps_tot },
            MethodArg::Flat => Mechanism::FlatUniform { eps_tot },
        }
    }
}

#[derive(Debug, Args)]
pub struct ReleaseArgs {
    /// Frequency matrix snapshot.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Htf)]
    pub method: MethodArg,
    #[command(flatten)]
    pub mech: MechanismArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Suppress all noise (debugging only; the output is not private).
    #[arg(long)]
    pub noiseless: bool,
    /// Clamp negative released counts to zero.
    #[arg(long)]
    pub clamp_nonnegative: bool,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Budget ledger; defaults to `<out>.ledger.csv`.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Rect,
    Square,
}

impl From<ShapeArg> for QueryShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Rect => QueryShape::RandomRect,
            ShapeArg::Square => QueryShape::Square,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub hist: PathBuf,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Query file (`row_lo row_hi col_lo col_hi` per line). Generated if absent.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub queries: usize,
    /// `random`, or a fraction of the domain such as `2%`.
    #[arg(long, default_value = "random", value_parser = parse_size)]
    pub size: QuerySize,
    #[arg(long, value_enum, default_value_t = ShapeArg::Rect)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 0)]
    pub workload_seed: u64,
    /// Save the generated workload here.
    #[arg(long)]
    pub workload_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    /// Report file; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Frequency matrix snapshot; otherwise a Gaussian dataset is generated.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 50.0)]
    pub sigma: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Methods to compare. `quadtree` and `kdtree` take an optional
    /// `-uniform`/`-geo` suffix overriding --alloc.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "htf,ug,ag,quadtree-uniform,quadtree-geo,kdtree-geo,singular,flat"
    )]
    pub methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5")]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2%,6%,10%", value_parser = parse_size)]
    pub sizes: Vec<QuerySize>,
    #[arg(long, value_enum, default_value_t = ShapeArg::Rect)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 2000)]
    pub queries: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    pub smoothing: f64,
    #[command(flatten)]
    pub mech: MechanismArgs,
    /// Per-run table; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Cross-seed median table.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn parse_size(s: &str) -> std::result::Result<QuerySize, String> {
    s.parse::<QuerySize>().map_err(|e| e.to_string())
}

/// Process exit status for an error: 2 configuration, 3 I/O or unreadable
/// input, 4 internal invariant breach.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Unsupported(_) => 2,
        Error::Io(_) | Error::Parse { .. } => 3,
        Error::BudgetOverflow { .. } | Error::NoSplit { .. } => 4,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Release(a) => cmd_release(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn read_matrix(path: &Path) -> Result<FrequencyMatrix> {
    FrequencyMatrix::read_snapshot(open(path)?)
}

/// Writes through a buffer into a file created only once `body` succeeds.
fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn write_out(path: Option<&Path>, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => write_file(p, body),
        None => {
            let mut buf = Vec::new();
            body(&mut buf)?;
            let mut out = BufWriter::new(io::stdout().lock());
            out.write_all(&buf)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let (rows, cols) = a.grid.dims()?;
    let pts = gaussian_points(a.n, a.sigma, rows, cols, a.seed)?;
    let header = format!(
        "gaussian n={} sigma={} rows={rows} cols={cols} seed={}\nbounds 0,0,{cols},{rows}",
        a.n, a.sigma, a.seed
    );
    let matrix = match &a.matrix_out {
        Some(_) => Some(discretize(&pts, &Bounds::cell_units(rows, cols), rows, cols)?.matrix),
        None => None,
    };
    write_file(&a.out, |w| write_points(w, &header, &pts))?;
    if let (Some(path), Some(m)) = (&a.matrix_out, matrix) {
        write_file(path, |w| m.write_snapshot(w))?;
    }
    Ok(())
}

pub fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let (rows, cols) = a.grid.dims()?;
    let [x0, y0, x1, y1] = a.bounds[..] else {
        return Err(Error::Config(
            "--bounds needs x_min,y_min,x_max,y_max".into(),
        ));
    };
    let bounds = Bounds::new(x0, y0, x1, y1).map_err(|e| Error::Config(e.to_string()))?;
    let pts = read_points(open(&a.points)?)?;
    let d = discretize(&pts, &bounds, rows, cols)?;
    if d.rejected > 0 {
        eprintln!("{} points outside the bounds were dropped", d.rejected);
    }
    write_file(&a.out, |w| d.matrix.write_snapshot(w))
}

pub fn cmd_release(a: &ReleaseArgs) -> Result<()> {
    let mechanism = a.mech.mechanism(a.method);
    let f = read_matrix(&a.matrix)?;
    if let Mechanism::Htf(p) = &mechanism {
        p.validate(f.rows(), f.cols())?;
    }
    let noise = if a.noiseless {
        NoiseSource::noiseless(a.seed)
    } else {
        NoiseSource::new(a.seed)
    };
    let r = mechanism.release(&f, &noise)?;
    let hist = if a.clamp_nonnegative {
        r.histogram.clamp_nonnegative()
    } else {
        r.histogram
    };
    let ledger_path = a.ledger.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".ledger.csv");
        PathBuf::from(p)
    });
    write_file(&a.out, |w| hist.write_to(w))?;
    write_file(&ledger_path, |w| r.ledger.write_csv(w))?;
    for msg in r.ledger.warnings() {
        eprintln!("warning: {msg}");
    }
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let hist = PrivateHistogram::read_from(open(&a.hist)?)?;
    let f = read_matrix(&a.matrix)?;
    let workload = match &a.workload {
        Some(p) => read_workload(open(p)?)?,
        None => generate_workload(
            &WorkloadSpec {
                count: a.queries,
                size: a.size,
                shape: a.shape.into(),
                seed: a.workload_seed,
            },
            f.rows(),
            f.cols(),
        )?,
    };
    let report = evaluate(&hist, &f, &workload, a.smoothing)?;
    if let Some(p) = &a.workload_out {
        write_file(p, |w| write_workload(w, &workload))?;
    }
    write_out(a.out.as_deref(), |w| report.write_csv(w))
}

fn sweep_method(label: &str, mech: &MechanismArgs) -> Result<SweepMethod> {
    let (base, alloc) = match label.rsplit_once('-') {
        Some((b, "uniform")) => (b, Some(AllocArg::Uniform)),
        Some((b, "geo" | "geometric")) => (b, Some(AllocArg::Geometric)),
        _ => (label, None),
    };
    let method = MethodArg::from_str(base, true)
        .map_err(|_| Error::Config(format!("unknown method {label:?}")))?;
    if alloc.is_some() && !matches!(method, MethodArg::Quadtree | MethodArg::Kdtree) {
        return Err(Error::Config(format!(
            "{label:?}: allocation suffix only applies to trees"
        )));
    }
    let mut m = mech.clone();
    if let Some(a) = alloc {
        m.alloc = a;
        // the tree baselines are compared with smoothing on
        m.smooth = true;
    }
    Ok(SweepMethod {
        label: label.to_owned(),
        mechanism: m.mechanism(method),
    })
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let methods = a
        .methods
        .iter()
        .map(|l| sweep_method(l.trim(), &a.mech))
        .collect::<Result<Vec<_>>>()?;
    if let Some(e) = a.eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("budgets must be positive, got {e}")));
    }
    let f = match &a.matrix {
        Some(p) => read_matrix(p)?,
        None => {
            let (rows, cols) = a.grid.dims().or_else(|_| {
                GridArgs {
                    grid: Some(256),
                    ..a.grid.clone()
                }
                .dims()
            })?;
            generate_gaussian(a.n, a.sigma, rows, cols, a.data_seed)?
        }
    };
    let cfg = SweepConfig {
        methods,
        eps: a.eps.clone(),
        sizes: a.sizes.clone(),
        shape: a.shape.into(),
        queries: a.queries,
        seeds: a.seeds.clone(),
        smoothing: a.smoothing,
    };
    let rows = run_sweep(&f, &cfg)?;
    for r in &rows {
        if let Err(e) = &r.outcome {
            eprintln!(
                "{} eps={} size={} seed={}: {e}",
                r.method, r.eps, r.size, r.seed
            );
        }
    }
    if let Some(p) = &a.summary {
        let s = summarize(&rows);
        write_file(p, |w| write_summary_csv(w, &s))?;
    }
    write_out(a.out.as_deref(), |w| write_sweep_csv(w, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Io(io::Error::other("x"))), 3);
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                msg: "x".into()
            }),
            3
        );
    }

    #[test]
    fn partition_flags_pick_the_budget_mode() {
        let cli = Cli::try_parse_from([
            "htf",
            "release",
            "--matrix",
            "m",
            "-o",
            "h",
            "--eps-prt",
            "0.02",
        ])
        .unwrap();
        let Command::Release(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.mech.htf_params().partition, PartitionBudget::Total(0.02));
        assert!(Cli::try_parse_from([
            "htf",
            "release",
            "--matrix",
            "m",
            "-o",
            "h",
            "--eps-prt",
            "0.02",
            "--eps-prt-level",
            "0.001"
        ])
        .is_err());
        let cli = Cli::try_parse_from([
            "htf", "release", "--matrix", "m", "-o", "h", "--T", "2", "--T", "5",
        ])
        .unwrap();
        let Command::Release(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.mech.rounds, 5);
    }

    #[test]
    fn sweep_labels() {
        let mech = MechanismArgs {
            eps_tot: 0.1,
            eps_prt_level: None,
            eps_prt: None,
            eps_height: 1e-4,
            rounds: 3,
            stop_count: 100.0,
            stop_cells: 5,
            height: None,
            c0: DEFAULT_C0,
            alloc: AllocArg::Geometric,
            smooth: false,
            alpha: 0.5,
            structure_fraction: 0.15,
        };
        let m = sweep_method("quadtree-uniform", &mech).unwrap();
        assert!(matches!(
            m.mechanism,
            Mechanism::QuadTree {
                params: QuadTreeParams {
                    alloc: LevelAlloc::Uniform,
                    smooth: true,
                    ..
                },
                ..
            }
        ));
        assert_eq!(
            sweep_method("flat", &mech).unwrap().mechanism.name(),
            "flat"
        );
        assert!(sweep_method("flat-geo", &mech).is_err());
    }
}
