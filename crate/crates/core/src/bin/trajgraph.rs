//! `trajgraph` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 malformed input file,
//! 3 configuration or checkpoint mismatch. Failures print a single line
//! `error kind=<kind> [line=<n>] message="<text>"` on stderr.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trajgraph::config::RunConfig;
use trajgraph::gnn::{Gnn, GnnConfig, TrajGraph};
use trajgraph::io::{load_trajectories, save_trajectories};
use trajgraph::nn::Checkpoint;
use trajgraph::rng::{derive_seed, SeedDomain};
use trajgraph::sim::{add_noise, simulate, simulate_segmented, Model, Trajectory};
use trajgraph::train::eval::write_block;
use trajgraph::train::{evaluate, export_latent, predict_graphs, train, SamplingConfig, TaskMode, Workers};
use trajgraph::{Error, Result};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Name of the resolved configuration written next to every output.
const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Parser)]
#[command(name = "trajgraph", version, about = "Anomalous diffusion inference with graph neural networks")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Global seed; every random draw of the run derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Data-generation threads. 1 gives bit-reproducible runs.
    #[arg(long, global = true, env = "TRAJGRAPH_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate trajectories and write them to a batch file.
    Simulate(SimulateArgs),
    /// Train a network on freshly simulated trajectories.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a fresh evaluation set.
    Eval(EvalArgs),
    /// Predict model and exponent for every trajectory of a batch file.
    Infer(InferArgs),
    /// Write the latent vector of every trajectory of a batch file.
    ExportLatent(InferArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// attm, ctrw, fbm, lw, sbm, bm, ou or seg:<first>:<second>:<fraction_first>.
    #[arg(long)]
    model: Option<String>,
    /// Anomalous exponent α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Points per trajectory.
    #[arg(long)]
    n: Option<usize>,
    /// Spatial dimension (1, 2 or 3).
    #[arg(long)]
    dim: Option<usize>,
    /// Number of trajectories.
    #[arg(long)]
    count: Option<usize>,
    /// Localisation noise amplitude relative to the jump-size std.
    #[arg(long)]
    noise: Option<f64>,
    /// Output batch file (`.gz` compresses).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Shortest trajectory length.
    #[arg(long)]
    n_min: Option<usize>,
    /// Longest trajectory length.
    #[arg(long)]
    n_max: Option<usize>,
    /// Lower bound of the noise amplitude.
    #[arg(long)]
    noise_min: Option<f64>,
    /// Upper bound of the noise amplitude.
    #[arg(long)]
    noise_max: Option<f64>,
    /// Spatial dimension (1, 2 or 3).
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated model list.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<Model>>,
    /// Step clipping factor (0 disables clipping).
    #[arg(long)]
    clip: Option<f64>,
}

impl SamplingArgs {
    fn apply(&self, s: &mut SamplingConfig) {
        set(&mut s.n_min, self.n_min);
        set(&mut s.n_max, self.n_max);
        set(&mut s.noise_min, self.noise_min);
        set(&mut s.noise_max, self.noise_max);
        set(&mut s.dim, self.dim);
        set(&mut s.models, self.models.clone());
        set(&mut s.clip, self.clip);
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Architecture preset (tiny, small, medium, large, xlarge) or a JSON
    /// model configuration file.
    #[arg(long)]
    preset: Option<String>,
    /// Training trajectories.
    #[arg(long)]
    budget: Option<u64>,
    /// Trajectories per optimisation step.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long)]
    lr0: Option<f64>,
    /// Learning rate reached at the end of the budget.
    #[arg(long)]
    lr_floor: Option<f64>,
    /// joint, regression_only or classification_only.
    #[arg(long)]
    task: Option<TaskMode>,
    /// Validate after every this many trajectories.
    #[arg(long)]
    val_every: Option<u64>,
    /// Validation trajectories (0 disables validation).
    #[arg(long)]
    val_size: Option<usize>,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output directory for checkpoints, log and resolved configuration.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Checkpoint (`.tgck`) written by `train`.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Evaluation trajectories.
    #[arg(long)]
    count: Option<usize>,
    /// Trajectories per forward pass.
    #[arg(long)]
    chunk: Option<usize>,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Also print one matrix block: `length,noise` (accuracy grid),
    /// `true,pred` (α histogram) or `pred,true` (confusion).
    #[arg(long, value_name = "ROWS,COLS")]
    grid: Option<String>,
    /// Also write per-trajectory predictions.
    #[arg(long)]
    predictions: bool,
    /// Output directory for summary, metrics and resolved configuration.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Checkpoint (`.tgck`) written by `train`.
    #[arg(long, value_name = "FILE")]
    checkpoint: PathBuf,
    /// Trajectory batch file.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Output CSV file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Step clipping factor; defaults to the one the network was trained with.
    #[arg(long)]
    clip: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error kind=usage message={:?}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code, line) = match &e {
                Error::Parse { line, .. } => ("parse", 2, Some(*line)),
                Error::Mismatch(_) => ("mismatch", 3, None),
                Error::Domain(_) => ("domain", 1, None),
                Error::NonFinite(_) => ("non_finite", 1, None),
                Error::Io(_) => ("io", 1, None),
            };
            let message = e.to_string().replace('\n', " ");
            match line {
                Some(l) => eprintln!("error kind={kind} line={l} message={message:?}"),
                None => eprintln!("error kind={kind} message={message:?}"),
            }
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed.map(Some));
    set(&mut cfg.workers, cli.workers.map(Some));
    let workers = Workers::new(cfg.workers.unwrap_or(1).max(1));
    match cli.command {
        Command::Simulate(a) => cmd_simulate(cfg, a),
        Command::Train(a) => cmd_train(cfg, a, &workers),
        Command::Eval(a) => cmd_eval(cfg, a, &workers, cli.config.as_deref()),
        Command::Infer(a) => cmd_infer(a, false),
        Command::ExportLatent(a) => cmd_infer(a, true),
    }
}

fn cmd_simulate(mut cfg: RunConfig, a: SimulateArgs) -> Result<()> {
    let s = &mut cfg.simulate;
    set(&mut s.model, a.model);
    set(&mut s.alpha, a.alpha);
    set(&mut s.n, a.n);
    set(&mut s.dim, a.dim);
    set(&mut s.count, a.count);
    set(&mut s.noise, a.noise);
    let seed = cfg.seed.unwrap_or(0);
    cfg.seed = Some(seed);
    let s = &cfg.simulate;
    let trajs = (0..s.count as u64)
        .map(|i| {
            let ts = derive_seed(seed, SeedDomain::Probe, i);
            let clean = simulate_named(&s.model, s.alpha, s.n, s.dim, ts)?;
            add_noise(&clean, s.noise, ts)
        })
        .collect::<Result<Vec<Trajectory>>>()?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_trajectories(&a.out, &trajs)?;
    cfg.save(sibling(&a.out, ".config.toml"))
}

fn simulate_named(model: &str, alpha: f64, n: usize, dim: usize, seed: u64) -> Result<Trajectory> {
    match model.strip_prefix("seg:") {
        Some(rest) => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [first, second, fraction] = parts[..] else {
                return Err(Error::Domain(format!("expected seg:<first>:<second>:<fraction>, got '{model}'")));
            };
            let fraction: f64 = fraction
                .parse()
                .map_err(|_| Error::Domain(format!("invalid segment fraction '{fraction}'")))?;
            simulate_segmented(first.parse()?, second.parse()?, alpha, n, dim, fraction, seed)
        }
        None => simulate(model.parse()?, alpha, n, dim, 1.0, seed),
    }
}

/// `path` with `suffix` appended to its file name.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn architecture(choice: &str, dim: usize) -> Result<GnnConfig> {
    if choice.ends_with(".json") {
        GnnConfig::from_json(&fs::read_to_string(choice)?)
    } else {
        GnnConfig::preset_for_dim(choice, dim)
    }
}

fn cmd_train(mut cfg: RunConfig, a: TrainArgs, workers: &Workers) -> Result<()> {
    let t = &mut cfg.train;
    set(&mut cfg.preset, a.preset);
    set(&mut t.budget, a.budget);
    set(&mut t.batch_size, a.batch_size);
    set(&mut t.lr0, a.lr0);
    set(&mut t.lr_floor, a.lr_floor);
    set(&mut t.task, a.task);
    set(&mut t.val_every, a.val_every);
    set(&mut t.val_size, a.val_size);
    a.sampling.apply(&mut t.sampling);
    set(&mut t.seed, cfg.seed);
    cfg.seed = Some(t.seed);
    let model = architecture(&cfg.preset, cfg.train.sampling.dim)?;

    fs::create_dir_all(&a.out)?;
    cfg.save(a.out.join(RESOLVED_CONFIG))?;
    let outcome = train(&cfg.train, &model, Some(&a.out), workers, |row| {
        let val = match (row.val_loss, row.val_mae, row.val_f1) {
            (Some(l), Some(m), Some(f)) => format!(" val_loss={l:.4} val_mae={m:.4} val_f1={f:.4}"),
            _ => String::new(),
        };
        eprintln!("step={} seen={} lr={:.3e} loss={:.4}{val}", row.step, row.trajs_seen, row.lr, row.loss);
    })?;
    if let Some(l) = outcome.best_val_loss {
        println!("best_val_loss={l}");
    }
    println!("checkpoint={}", a.out.join(trajgraph::train::trainer::BEST_CHECKPOINT).display());
    Ok(())
}

/// Whether the configuration file sets `eval.sampling.dim` itself.
fn file_sets_eval_dim(path: Option<&Path>) -> Result<bool> {
    let Some(path) = path else { return Ok(false) };
    let table: toml::Table = fs::read_to_string(path)?
        .parse()
        .map_err(|e: toml::de::Error| Error::Mismatch(format!("invalid configuration: {}", e.message())))?;
    Ok(table
        .get("eval")
        .and_then(|e| e.get("sampling"))
        .and_then(|s| s.get("dim"))
        .is_some())
}

fn cmd_eval(mut cfg: RunConfig, a: EvalArgs, workers: &Workers, config_path: Option<&Path>) -> Result<()> {
    let net = Gnn::<f32>::load(&a.checkpoint)?;
    let e = &mut cfg.eval;
    set(&mut e.count, a.count);
    set(&mut e.chunk, a.chunk);
    if a.sampling.dim.is_none() && !file_sets_eval_dim(config_path)? {
        e.sampling.dim = net.config().dim;
    }
    a.sampling.apply(&mut e.sampling);
    set(&mut e.seed, cfg.seed);
    cfg.seed = Some(e.seed);
    let grid = a.grid.as_deref().map(grid_block).transpose()?;

    fs::create_dir_all(&a.out)?;
    cfg.save(a.out.join(RESOLVED_CONFIG))?;
    let report = evaluate(&net, &cfg.eval, workers)?;
    let summary = report.summary();
    fs::write(a.out.join("summary.txt"), &summary)?;
    report.write_metrics(BufWriter::new(File::create(a.out.join("metrics.txt"))?))?;
    if a.predictions {
        report.write_predictions(BufWriter::new(File::create(a.out.join("predictions.csv"))?))?;
    }
    print!("{summary}");
    if let Some(name) = grid {
        let (name, header, rows) = report
            .blocks()
            .into_iter()
            .find(|b| b.0 == name)
            .expect("every grid name is a report block");
        let mut out = std::io::stdout().lock();
        writeln!(out)?;
        write_block(&mut out, name, &header, &rows)?;
        let mut f = BufWriter::new(File::create(a.out.join(format!("grid_{name}.csv")))?);
        writeln!(f, "{header}")?;
        for r in &rows {
            writeln!(f, "{r}")?;
        }
    }
    Ok(())
}

fn grid_block(axes_arg: &str) -> Result<&'static str> {
    let axes: Vec<String> = axes_arg.split(',').map(|s| s.trim().to_ascii_lowercase()).collect();
    let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
    Ok(match axes[..] {
        ["length", "noise"] => "length_noise_accuracy",
        ["true", "pred"] => "alpha_histogram",
        ["pred", "true"] => "confusion",
        _ => {
            return Err(Error::Domain(format!(
                "unknown grid '{axes_arg}', expected length,noise or true,pred or pred,true"
            )))
        }
    })
}

fn cmd_infer(a: InferArgs, latent: bool) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let net = Gnn::<f32>::load(&a.checkpoint)?;
    let clip = match a.clip {
        Some(c) => c,
        None => match ck.header.get("clip") {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Mismatch(format!("checkpoint clip '{v}' is not a number")))?,
            None => trajgraph::features::DEFAULT_CLIP,
        },
    };
    let records = load_trajectories(&a.input)?;
    let dim = net.config().dim;
    if let Some((i, (h, _))) = records.iter().enumerate().find(|(_, (h, _))| h.dim != dim) {
        return Err(Error::Mismatch(format!(
            "trajectory {i} has d = {}, the network expects d = {dim}",
            h.dim
        )));
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(&a.out)?);
    if latent {
        let trajs: Vec<Trajectory> = records.into_iter().map(|(_, t)| t).collect();
        export_latent(&net, &trajs, clip)?.write(&mut out)?;
        return Ok(out.flush()?);
    }
    let cfg = net.config();
    let graphs = records
        .iter()
        .map(|(_, t)| TrajGraph::from_trajectory(t, cfg.wiring, cfg.k, (clip > 0.0).then_some(clip)))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&TrajGraph> = graphs.iter().collect();
    let preds = predict_graphs(&net, &refs, 256)?;
    let probs: Vec<String> = Model::CLASSES.iter().map(|m| format!("p_{m}")).collect();
    writeln!(out, "index,N,pred_model,pred_alpha,{}", probs.join(","))?;
    for (i, ((h, _), p)) in records.iter().zip(&preds).enumerate() {
        let ps: Vec<String> = p.class_probs.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{i},{},{},{},{}", h.n, p.predicted_model(), p.alpha_hat, ps.join(","))?;
    }
    Ok(out.flush()?)
}
