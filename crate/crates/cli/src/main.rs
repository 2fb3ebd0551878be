//! `actdiag` command-line front end.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 when reading data or
//! estimating fails.

mod args;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actdiag::tensor_io::write_raw_f64;
use actdiag::toylab::{run_single, run_sweep, CirclesConfig, Hyper, SweepKind, Variant};
use actdiag::{
    analyze, fit_density, rank_models, read_array, read_csv, write_array, DigammaMode,
    DiversityReport, Error, EstimatorConfig, Execution, MiMode, Orientation,
};
use clap::{CommandFactory, Parser};
use serde_json::json;

use args::{
    AnalyzeArgs, Cli, Command, DensityArgs, DigammaArg, EstimatorArgs, ModeArg, OrientationArg,
    RankArgs, SweepVariantArg, ToyCommand, TrainingArgs, VariantArg,
};

const MANIFEST_SCHEMA: &str = "actdiag-manifest/1";
const TOY_RUN_SCHEMA: &str = "actdiag-toy-run/1";

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Analyze(a) => cmd_analyze(a, verbose),
        Command::Density(a) => cmd_density(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Toy { command } => match command {
            ToyCommand::Train {
                variant,
                alpha,
                beta,
                seed,
                dump_activations,
                training,
                out,
            } => cmd_train(
                variant,
                alpha,
                beta,
                seed,
                dump_activations,
                &training,
                out,
                verbose,
            ),
            ToyCommand::Sweep {
                variant,
                grid,
                seeds,
                training,
                out,
                csv,
                threads,
            } => cmd_sweep(variant, &grid, seeds, &training, out, csv, threads, verbose),
        },
        Command::Convert { input, output } => {
            let m = read_csv(&input)?;
            write_array(&m, &output)?;
            Ok(())
        }
    }
}

fn estimator_config(a: &EstimatorArgs) -> CliResult<EstimatorConfig> {
    let cfg = EstimatorConfig {
        n_bins: a.bins,
        k: a.k,
        mi_mode: match a.mode {
            ModeArg::Paper => MiMode::PaperLiteral,
            ModeArg::Ksg => MiMode::KsgCanonical,
        },
        digamma: match a.digamma {
            DigammaArg::Exact => DigammaMode::Exact,
            DigammaArg::PaperApprox => DigammaMode::PaperApprox,
        },
        normalize: !a.no_normalize,
        jitter: !a.no_jitter,
        jitter_scale: a.jitter_scale,
        max_samples: a.max_samples,
        seed: a.seed,
        clamp_negative: a.clamp_negative,
        include_diagonal: a.include_diagonal,
        force_full_mi: a.force_full_mi,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Failure {
    Failure::Data(Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_json<T: serde::Serialize + ?Sized>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn cmd_analyze(a: AnalyzeArgs, verbose: bool) -> CliResult<()> {
    let mut cfg = estimator_config(&a.estimator)?;
    cfg.force_full_mi |= a.full_mi.is_some();
    let m = if is_csv(&a.matrix) {
        read_csv(&a.matrix)?
    } else {
        read_array(&a.matrix)?
    };
    let m = m.with_source(file_stem(&a.matrix));
    if verbose {
        eprintln!("analysing {} samples x {} neurons", m.rows(), m.cols());
    }
    let report = with_threads(a.threads, || analyze(&m, &cfg))??;
    if let Some(path) = &a.full_mi {
        let mi = report.mi_matrix().expect("full matrix was requested");
        write_raw_f64(path, mi.n(), mi.n(), mi.values())?;
    }
    emit_json(&report, a.out.as_deref())
}

fn cmd_density(a: DensityArgs) -> CliResult<()> {
    let values = if is_csv(&a.input) {
        read_csv(&a.input)?.data().to_vec()
    } else {
        read_report(&a.input)?.mi_values()
    };
    let model = fit_density(&values, a.max_components, a.seed)?;
    emit_json(&model, a.out.as_deref())
}

fn read_report(path: &Path) -> CliResult<DiversityReport> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let report = serde_json::from_str(&text).map_err(|e| Error::Run {
        context: path.display().to_string(),
        source: Box::new(Error::Json(e)),
    })?;
    Ok(report)
}

fn read_extrinsic(path: &Path) -> CliResult<Vec<(String, f64)>> {
    let csv_err = |e: csv::Error| Failure::Data(Error::Csv(format!("{}: {e}", path.display())));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_error(path, io),
            other => Failure::Data(Error::Csv(format!("{}: {other:?}", path.display()))),
        })?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() != 2 || &header[0] != "model_id" || &header[1] != "metric" {
        return Err(Failure::Data(Error::Csv(format!(
            "{}: expected header `model_id,metric`",
            path.display()
        ))));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let value: f64 = record[1].parse().map_err(|_| {
            Failure::Data(Error::NonNumericCell {
                line: line + 2,
                cell: record[1].to_string(),
            })
        })?;
        rows.push((record[0].to_string(), value));
    }
    Ok(rows)
}

fn cmd_rank(a: RankArgs) -> CliResult<()> {
    let extrinsic = read_extrinsic(&a.extrinsic)?;
    let reports = a
        .reports
        .iter()
        .map(|p| Ok((file_stem(p), read_report(p)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let orientation = match a.orientation {
        OrientationArg::Heuristic => Orientation::Heuristic,
        OrientationArg::ExampleLevel => Orientation::ExampleLevel,
        OrientationArg::Raw => Orientation::Raw,
    };
    let result = rank_models(&reports, &extrinsic, orientation)?;
    emit_json(&result, a.out.as_deref())
}

/// Variant defaults, then any explicit overrides.
fn toy_setup(variant: Variant, seed: u64, t: &TrainingArgs) -> (CirclesConfig, Hyper) {
    let mut data = CirclesConfig::for_variant(variant, seed);
    let mut hyper = match variant {
        Variant::Shuffled { .. } => Hyper::memorizing(),
        _ => Hyper::default(),
    };
    if let Some(h) = &t.hidden {
        hyper.hidden = h.clone();
    }
    if let Some(e) = t.epochs {
        hyper.epochs = e;
    }
    if let Some(lr) = t.learning_rate {
        hyper.learning_rate = lr;
    }
    if let Some(b) = t.batch_size {
        hyper.batch_size = b;
    }
    if let Some(n) = t.n_train {
        data.n_train = n;
    }
    if let Some(n) = t.n_test {
        data.n_test = n;
    }
    if let Some(s) = t.noise_sigma {
        data.noise_sigma = s;
    }
    (data, hyper)
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    variant: VariantArg,
    alpha: Option<f64>,
    beta: Option<f64>,
    seed: u64,
    dump: Option<PathBuf>,
    training: &TrainingArgs,
    out: Option<PathBuf>,
    verbose: bool,
) -> CliResult<()> {
    let (variant, setting) = match (variant, alpha, beta) {
        (VariantArg::Base, None, None) => (Variant::Base, 0.0),
        (VariantArg::Spurious, a, None) => {
            let alpha = a.unwrap_or(1.0);
            (Variant::Spurious { alpha }, alpha)
        }
        (VariantArg::Shuffled, None, b) => {
            let beta = b.unwrap_or(1.0);
            (Variant::Shuffled { beta }, beta)
        }
        _ => {
            return Err(Failure::Usage(
                "--alpha goes with --variant spurious and --beta with --variant shuffled".into(),
            ))
        }
    };
    let (data, hyper) = toy_setup(variant, seed, training);
    data.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if verbose {
        eprintln!(
            "training {} seed {seed} for {} epochs",
            variant.name(),
            hyper.epochs
        );
    }
    let est = EstimatorConfig::default();
    let run = run_single(&data, &hyper, &est, setting, Execution::Parallel)?;

    if let Some(dir) = dump {
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let mut layers = Vec::new();
        for (l, acts) in run.activations.iter().enumerate() {
            let file = format!("layer{l}.npy");
            write_array(acts, dir.join(&file))?;
            layers.push(json!({
                "name": format!("hidden{l}"),
                "path": file,
                "samples": acts.rows(),
                "neurons": acts.cols(),
            }));
        }
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "model": format!("{}-seed{seed}", variant.name()),
            "layers": layers,
            "seed": seed,
        });
        emit_json(&manifest, Some(&dir.join("manifest.json")))?;
    }

    let summary = json!({
        "schema": TOY_RUN_SCHEMA,
        "data": data,
        "hyper": hyper,
        "record": run.record,
        "reports": run.reports,
    });
    emit_json(&summary, out.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    variant: SweepVariantArg,
    grid: &[f64],
    seeds: u64,
    training: &TrainingArgs,
    out: Option<PathBuf>,
    csv_out: Option<PathBuf>,
    threads: Option<usize>,
    verbose: bool,
) -> CliResult<()> {
    if grid.len() < 2 {
        return Err(Failure::Usage("--grid needs at least two values".into()));
    }
    if seeds == 0 {
        return Err(Failure::Usage("--seeds must be at least 1".into()));
    }
    let kind = match variant {
        SweepVariantArg::Spurious => SweepKind::Spurious,
        SweepVariantArg::Shuffled => SweepKind::Shuffled,
    };
    let (template, hyper) = toy_setup(kind.variant(grid[0]), 0, training);
    for &g in grid {
        CirclesConfig {
            variant: kind.variant(g),
            ..template.clone()
        }
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let seeds: Vec<u64> = (0..seeds).collect();
    if verbose {
        eprintln!("sweeping {} settings x {} seeds", grid.len(), seeds.len());
    }
    let est = EstimatorConfig::default();
    let result = with_threads(threads, || {
        run_sweep(
            kind,
            grid,
            &seeds,
            &hyper,
            &est,
            &template,
            Execution::Parallel,
        )
    })??;
    if let Some(path) = &csv_out {
        fs::write(path, result.to_csv()?).map_err(|e| io_error(path, e))?;
    }
    emit_json(&result, out.as_deref())
}
