//! `dogs`: build models and influence bounds, evaluate and optimize Gibbs
//! scans, run samplers, query exact oracles and run the experiment suite.

mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dogs_core::experiments::{loose_bound, marginal, mle, scan_eval, wall_clock, ExperimentReport};
use dogs_core::gibbs::{sample_terminal_features, EstimateReport, StartSpec};
use dogs_core::influence::ergodicity_check;
use dogs_core::io::{influence_to_json, model_to_json, scan_to_json};
use dogs_core::model::{LatticeSpec, ParamSource, MARGINAL_LATTICE_COUPLING};
use dogs_core::oracle::{
    enumerate_distribution, exact_marginal_tv, exact_step_distribution, exact_tv,
    exhaustive_best_scan, ExactDistribution,
};
use dogs_core::{
    forward_coupling_bounds, iterate_optimize, lattice_ising, length_doubling_select,
    optimize_scan, scale_bound, DiscreteMrf, Error as CoreError, Model, OptimizerConfig,
};
use serde_json::{json, Value};

use args::{
    bound_for, parse_feature, parse_start, parse_weights, read_influence, read_model, BoundArgs,
    ScanArgs,
};

#[derive(Debug, Parser)]
#[command(
    name = "dogs",
    version,
    about = "Certify and optimize Gibbs sampler scans with Dobrushin influence"
)]
struct Cli {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory receiving output files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Format of tabular output on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for parallel sections.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate or validate model files.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Influence matrix bounds.
    #[command(subcommand)]
    Influence(InfluenceCmd),
    /// Dobrushin variation of a scan.
    #[command(subcommand)]
    Dv(DvCmd),
    /// Scan optimization.
    #[command(subcommand)]
    Dogs(DogsCmd),
    /// Gibbs sampling.
    #[command(subcommand)]
    Gibbs(GibbsCmd),
    /// Exact computations by enumeration (small models only).
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Experiment suite.
    #[command(subcommand)]
    Exp(ExpCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    /// θ_ij ~ U[0, 0.25], θ_i uniform on {0, 1}.
    RandomFerromagnet,
    /// Constant coupling 1/3.915, no field.
    Marginal,
    /// Toroidal, constant coupling 0.165, no field.
    Torus,
}

#[derive(Debug, Subcommand)]
enum ModelCmd {
    /// Grid Ising model.
    Gen {
        #[arg(long, value_enum, default_value_t = Preset::RandomFerromagnet)]
        preset: Preset,
        #[arg(long, default_value_t = 10)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        cols: usize,
        /// Constant coupling overriding the preset.
        #[arg(long)]
        coupling: Option<f64>,
        /// Constant unary weight overriding the preset.
        #[arg(long)]
        field: Option<f64>,
    },
    /// Load a model file and report its shape.
    Validate { path: PathBuf },
}

#[derive(Debug, Subcommand)]
enum InfluenceCmd {
    /// Closed-form bound (or exact influence with --exact) of a model.
    Compute {
        model: PathBuf,
        #[arg(long)]
        exact: bool,
    },
    /// Multiply a bound by a factor ≥ 1, clipping entries at 1.
    Scale {
        influence: PathBuf,
        #[arg(long)]
        factor: f64,
    },
}

#[derive(Debug, Subcommand)]
enum DvCmd {
    /// Evaluate the variation of a scan.
    Eval {
        #[command(flatten)]
        bound: BoundArgs,
        #[command(flatten)]
        scan: ScanArgs,
        /// ones, unit:I, indicator:I,J or weights:W,..
        #[arg(long, default_value = "ones")]
        d: String,
        /// Write the forward trace (t, changed_index, dv_running) as CSV.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum DogsCmd {
    /// One coordinate-descent pass (or repeated passes with --iterate).
    Optimize {
        #[command(flatten)]
        bound: BoundArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, default_value = "ones")]
        d: String,
        /// Stop once the variation is at most this value.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        iterate: bool,
    },
    /// Shortest doubled prefix whose optimized variation matches the reference.
    Doubling {
        #[command(flatten)]
        bound: BoundArgs,
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, default_value = "ones")]
        d: String,
    },
}

#[derive(Debug, Subcommand)]
enum GibbsCmd {
    /// Terminal feature of independent chains, one row per replicate.
    Run(SampleArgs),
    /// Mean and standard error of the terminal feature.
    Estimate(SampleArgs),
}

#[derive(Debug, clap::Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    scan: ScanArgs,
    /// all-plus, uniform or fixed:V,..
    #[arg(long, default_value = "all-plus")]
    start: String,
    /// coordinate:I or product:I,J,..
    #[arg(long, default_value = "coordinate:0")]
    feature: String,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
}

#[derive(Debug, Subcommand)]
enum OracleCmd {
    /// Exact influence matrix.
    Influence { model: PathBuf },
    /// Exact total variation between the chain law after the scan and the target.
    Tv {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
        /// all-plus, uniform or fixed:V,..
        #[arg(long, default_value = "all-plus")]
        start: String,
    },
    /// Minimum variation over all deterministic scans of a given length.
    BestScan {
        #[command(flatten)]
        bound: BoundArgs,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value = "ones")]
        d: String,
    },
}

#[derive(Debug, clap::Args)]
struct ExpArgs {
    /// Full configuration as JSON; defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Small configuration for smoke runs.
    #[arg(long)]
    quick: bool,
}

#[derive(Debug, Subcommand)]
enum ExpCmd {
    /// Systematic, uniform and optimized variation curves on random 10×10 lattices.
    ScanEval(ExpArgs),
    /// Setup and sampling time of a length-doubled optimized scan against a long systematic scan.
    WallClock {
        #[command(flatten)]
        common: ExpArgs,
        /// Zero the unary weights so the target mean is 0.
        #[arg(long)]
        symmetric: bool,
    },
    /// Maximum likelihood fitting with Gibbs-estimated gradients.
    Mle {
        #[command(flatten)]
        common: ExpArgs,
        /// Train on independent ±1 data instead of samples from the true model.
        #[arg(long)]
        rademacher: bool,
    },
    /// Single-variable marginal on the 40×40 lattice.
    Marginal(ExpArgs),
    /// Sensitivity of the optimized scan to an inflated bound.
    LooseBound(ExpArgs),
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn exit_code(error: &anyhow::Error) -> u8 {
    for cause in error.chain() {
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::StateSpaceTooLarge { .. } | CoreError::BudgetExceeded { .. } => 3,
                CoreError::Inconsistent { .. } => 4,
                _ => 2,
            };
        }
    }
    2
}

struct Output {
    format: Format,
    dir: Option<PathBuf>,
}

impl Output {
    fn write_file(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    /// Prints a JSON document and saves it as `<name>.json`.
    fn json(&self, name: &str, value: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_file(&format!("{name}.json"), &text)?;
        emit(&text)
    }

    /// Prints a document already serialized by the library and saves it.
    fn raw_json(&self, name: &str, text: &str) -> Result<()> {
        self.write_file(&format!("{name}.json"), text)?;
        emit(text)
    }

    /// Prints rows as CSV or a JSON array of objects; saves `<name>.csv`.
    fn table(&self, name: &str, columns: &[&str], rows: &[Vec<Value>]) -> Result<()> {
        let cell = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        let mut csv = columns.join(",");
        csv.push('\n');
        for row in rows {
            csv.push_str(&row.iter().map(cell).collect::<Vec<_>>().join(","));
            csv.push('\n');
        }
        self.write_file(&format!("{name}.csv"), &csv)?;
        match self.format {
            Format::Csv => emit(csv.trim_end()),
            Format::Json => {
                let objects: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        Value::Object(
                            columns
                                .iter()
                                .map(|c| c.to_string())
                                .zip(row.iter().cloned())
                                .collect(),
                        )
                    })
                    .collect();
                emit(&serde_json::to_string_pretty(&objects)?)
            }
        }
    }
}

fn lattice(
    preset: Preset,
    rows: usize,
    cols: usize,
    coupling: Option<f64>,
    field: Option<f64>,
) -> LatticeSpec {
    let mut spec = match preset {
        Preset::RandomFerromagnet => LatticeSpec::random_ferromagnet(rows, cols),
        Preset::Marginal => LatticeSpec::constant(rows, cols, false, MARGINAL_LATTICE_COUPLING),
        Preset::Torus => LatticeSpec::constant(rows, cols, true, 0.165),
    };
    if let Some(c) = coupling {
        spec.coupling = ParamSource::Constant(c);
    }
    if let Some(f) = field {
        spec.unary = ParamSource::Constant(f);
    }
    spec
}

fn model_cmd(cmd: &ModelCmd, seed: u64, out: &Output) -> Result<()> {
    match cmd {
        ModelCmd::Gen {
            preset,
            rows,
            cols,
            coupling,
            field,
        } => {
            let spec = lattice(*preset, *rows, *cols, *coupling, *field);
            let model = Model::from(lattice_ising(&spec, seed)?);
            out.raw_json("model", &model_to_json(&model)?)
        }
        ModelCmd::Validate { path } => {
            let model = read_model(path)?;
            let verdict = ergodicity_check(&dogs_core::influence_bound(&model));
            out.json(
                "validation",
                &json!({
                    "valid": true,
                    "kind": model.kind(),
                    "p": model.num_vars(),
                    "domains": model.domains(),
                    "norm": verdict.norm,
                    "in_dobrushin_regime": verdict.in_dobrushin_regime,
                }),
            )
        }
    }
}

fn influence_cmd(cmd: &InfluenceCmd, out: &Output) -> Result<()> {
    let bound = match cmd {
        InfluenceCmd::Compute { model, exact } => bound_for(&read_model(model)?, *exact)?,
        InfluenceCmd::Scale { influence, factor } => {
            scale_bound(&read_influence(influence)?, *factor)?
        }
    };
    out.raw_json("influence", &influence_to_json(&bound)?)
}

fn dv_cmd(cmd: &DvCmd, out: &Output) -> Result<()> {
    let DvCmd::Eval {
        bound,
        scan,
        d,
        trace,
    } = cmd;
    let bound = bound.load()?;
    let scan = scan.load()?;
    let p = bound.dim();
    let d = parse_weights(d, p)?;
    let start = Instant::now();
    let forward = forward_coupling_bounds(&scan, &d, &bound)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(path) = trace {
        let mut csv = String::from("t,changed_index,dv_running\n");
        for (t, i, v) in forward.csv_rows() {
            csv.push_str(&format!("{t},{i},{v}\n"));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    out.json(
        "dv",
        &json!({
            "dv": forward.variation(),
            "T": scan.len(),
            "p": p,
            "scan_kind": scan.kind().as_str(),
            "wall_time_ms": ms,
        }),
    )
}

fn dogs_cmd(cmd: &DogsCmd, out: &Output) -> Result<()> {
    match cmd {
        DogsCmd::Optimize {
            bound,
            scan,
            d,
            epsilon,
            iterate,
        } => {
            let bound = bound.load()?;
            let scan = scan.load()?;
            let p = bound.dim();
            let d = parse_weights(d, p)?;
            let config = OptimizerConfig {
                epsilon: *epsilon,
                ..OptimizerConfig::default()
            };
            let start = Instant::now();
            let result = if *iterate {
                iterate_optimize(&scan, &d, &bound, &config)?
            } else {
                optimize_scan(&scan, &d, &bound, &config)?
            };
            let report = result.report(start.elapsed().as_secs_f64() * 1e3);
            out.write_file("scan.json", &scan_to_json(&result.scan, p)?)?;
            out.json("optimizer_report", &serde_json::to_value(report)?)
        }
        DogsCmd::Doubling { bound, scan, d } => {
            let bound = bound.load()?;
            let reference = scan.load()?;
            let p = bound.dim();
            let d = parse_weights(d, p)?;
            let result = length_doubling_select(&reference, &d, &bound)?;
            out.write_file("scan.json", &scan_to_json(&result.optimized.scan, p)?)?;
            out.json(
                "doubling",
                &json!({
                    "reference_T": reference.len(),
                    "reference_dv": result.reference_dv,
                    "T": result.optimized.scan.len(),
                    "dv": result.optimized.dv_after,
                    "lengths_tried": result.lengths_tried,
                    "setup_time_ms": result.setup_time_ms,
                }),
            )
        }
    }
}

fn gibbs_cmd(cmd: &GibbsCmd, seed: u64, out: &Output) -> Result<()> {
    let (a, estimate) = match cmd {
        GibbsCmd::Run(a) => (a, false),
        GibbsCmd::Estimate(a) => (a, true),
    };
    let model = read_model(&a.model)?;
    let scan = a.scan.load()?;
    let start_spec = parse_start(&a.start)?;
    let feature = parse_feature(&a.feature)?;
    if estimate && a.replicates < 2 {
        return Err(CoreError::TooFewReplicates(a.replicates).into());
    }
    let start = Instant::now();
    let batch = sample_terminal_features(&model, &scan, &start_spec, &feature, a.replicates, seed)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    if estimate {
        let e = batch.estimate();
        let report = EstimateReport {
            mean: e.mean,
            stderr: e.stderr,
            replicates: e.replicates,
            length: scan.len(),
            scan_kind: scan.kind().as_str().into(),
            start_kind: start_spec.kind().into(),
            wall_time_ms: ms,
        };
        out.json("estimate", &serde_json::to_value(report)?)
    } else {
        let rows: Vec<Vec<Value>> = batch
            .seeds
            .iter()
            .zip(&batch.values)
            .enumerate()
            .map(|(r, (s, v))| vec![json!(r), json!(s), json!(v)])
            .collect();
        out.table("samples", &["replicate", "seed", "terminal_feature"], &rows)
    }
}

fn start_distribution(model: &Model, start: &StartSpec) -> Result<ExactDistribution> {
    let domains = model.domains();
    Ok(match start {
        StartSpec::AllPlus => {
            let state: Vec<usize> = domains.iter().map(|n| n - 1).collect();
            ExactDistribution::point_mass(domains, &state)?
        }
        StartSpec::UniformRandom => ExactDistribution::uniform(domains)?,
        StartSpec::Fixed(state) => ExactDistribution::point_mass(domains, state)?,
    })
}

fn oracle_cmd(cmd: &OracleCmd, out: &Output) -> Result<()> {
    match cmd {
        OracleCmd::Influence { model } => {
            let bound = bound_for(&read_model(model)?, true)?;
            out.raw_json("influence", &influence_to_json(&bound)?)
        }
        OracleCmd::Tv { model, scan, start } => {
            let model = read_model(model)?;
            let scan = scan.load()?;
            let start = parse_start(start)?;
            let target = enumerate_distribution(&model)?;
            let law = exact_step_distribution(&model, &scan, &start_distribution(&model, &start)?)?;
            let marginals = (0..model.num_vars())
                .map(|s| exact_marginal_tv(&law, &target, &[s]))
                .collect::<dogs_core::Result<Vec<_>>>()?;
            out.json(
                "tv",
                &json!({
                    "T": scan.len(),
                    "start_kind": start.kind(),
                    "tv": exact_tv(&law, &target)?,
                    "marginal_tv": marginals,
                }),
            )
        }
        OracleCmd::BestScan { bound, length, d } => {
            let bound = bound.load()?;
            let d = parse_weights(d, bound.dim())?;
            let best = exhaustive_best_scan(&bound, &d, *length)?;
            out.json(
                "best_scan",
                &json!({"indices": best.indices, "dv": best.dv}),
            )
        }
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>) -> Result<Option<T>> {
    path.as_ref()
        .map(|p| -> Result<T> {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .transpose()
}

fn exp_cmd(cmd: &ExpCmd, seed: u64, dir: &Path, format: Format) -> Result<()> {
    let report: ExperimentReport = match cmd {
        ExpCmd::ScanEval(a) => {
            let mut config = load_config(&a.config)?.unwrap_or_default();
            if a.quick {
                config = scan_eval::ScanEvalConfig {
                    lattice: LatticeSpec::random_ferromagnet(4, 4),
                    lengths: vec![0, 16, 32, 64],
                    seeds: vec![seed, seed + 1],
                    iterate: true,
                };
            } else if a.config.is_none() {
                config.seeds = (seed..seed + 5).collect();
            }
            scan_eval::report(&config)?.1
        }
        ExpCmd::WallClock { common, symmetric } => {
            let mut config: wall_clock::WallClockConfig =
                load_config(&common.config)?.unwrap_or_default();
            if common.quick {
                config.lattice = LatticeSpec::random_ferromagnet(8, 8);
                config.reference_length = 640;
                config.samples = 10;
                config.speedup_counts = vec![1, 10, 100];
            }
            if *symmetric {
                config = config.symmetric();
            }
            config.seed = seed;
            wall_clock::report(&config)?.1
        }
        ExpCmd::Mle { common, rademacher } => {
            let mut config: mle::MleConfig = load_config(&common.config)?.unwrap_or_default();
            if common.quick {
                config.lattice.rows = 2;
                config.lattice.cols = 2;
                config.training_samples = 1000;
                config.gradient_steps = 10;
                config.gibbs_runs = 5;
                config.runs = 2;
            }
            if *rademacher {
                config.data = mle::DataSource::Rademacher;
            }
            config.seed = seed;
            mle::report(&config)?.1
        }
        ExpCmd::Marginal(a) => {
            let mut config: marginal::MarginalConfig = load_config(&a.config)?.unwrap_or_default();
            if a.quick {
                config.lattice = LatticeSpec::constant(6, 6, false, MARGINAL_LATTICE_COUPLING);
                config.length = 360;
                config.curve_lengths = vec![0, 90, 180, 360];
                config.bias_lengths = vec![360];
                config.replicates = 20;
            }
            config.seed = seed;
            marginal::report(&config)?.1
        }
        ExpCmd::LooseBound(a) => {
            let mut config: loose_bound::LooseBoundConfig =
                load_config(&a.config)?.unwrap_or_default();
            if a.quick {
                config.lattice = LatticeSpec::constant(5, 5, true, 0.165);
                config.lengths = vec![50, 100];
                config.replicates = 20;
            }
            config.seed = seed;
            loose_bound::report(&config)?.1
        }
    };
    let files = report.write(dir)?;
    match format {
        Format::Json => emit(&serde_json::to_string_pretty(&report.manifest())?)?,
        Format::Csv => {
            for f in files {
                emit(&f.display().to_string())?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(CoreError::InvalidConfig(
                "--threads must be at least 1".into()
            ));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let out = Output {
        format: cli.format,
        dir: cli.out.clone(),
    };
    match &cli.command {
        Command::Model(c) => model_cmd(c, cli.seed, &out),
        Command::Influence(c) => influence_cmd(c, &out),
        Command::Dv(c) => dv_cmd(c, &out),
        Command::Dogs(c) => dogs_cmd(c, &out),
        Command::Gibbs(c) => gibbs_cmd(c, cli.seed, &out),
        Command::Oracle(c) => oracle_cmd(c, &out),
        Command::Exp(c) => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
            exp_cmd(c, cli.seed, &dir, cli.format)
        }
    }
}

fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn broken_pipe(error: &anyhow::Error) -> bool {
    error
        .chain()
        .filter_map(|e| e.downcast_ref::<std::io::Error>())
        .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).map_err(|error| Failure {
        code: exit_code(&error),
        error,
    }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { error, .. }) if broken_pipe(&error) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
