//! `it2tsk` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
//! or inference failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use it2tsk::data::{kfold, load_csv, load_keel, load_keel_folds, FoldSplit};
use it2tsk::eval::{case_study, explainability, run_cv, write_predictions_csv, EvalReport};
use it2tsk::pipeline::Manifest;
use it2tsk::reference::{available_datasets, canonical_name, references};
use it2tsk::rule::export_rules;
use it2tsk::{Dataset, PipelineConfig, TrainedModel};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Training(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Training(_) => 4,
        }
    }
}

impl From<it2tsk::Error> for Failure {
    fn from(e: it2tsk::Error) -> Self {
        use it2tsk::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) => Failure::Config(msg),
            E::InvalidInput(_) | E::DegeneratePartition { .. } | E::Parse { .. } | E::Data(_) | E::Io { .. } => {
                Failure::Data(msg)
            }
            E::Serde(_) => Failure::Data(msg),
            E::InvalidRule(_) | E::Unfittable(_) | E::ZeroSupport | E::EmptyUniverse | E::Untrained(_) => {
                Failure::Training(msg)
            }
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "it2tsk", version, about = "Interval type-2 hybrid fuzzy regression")]
struct Cli {
    /// TOML file with pipeline settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write model.json, trace.csv and rules.txt.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validation against stored reference results. `--data` is a
    /// directory of KEEL `*-5-<i>tra.dat`/`tst.dat` files, or a single data
    /// file split into seeded folds.
    Crossval {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Dataset name for reference lookup; defaults to the file name.
        #[arg(long)]
        name: Option<String>,
        /// Folds when splitting a single file.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export rules, explainability metrics and per-row explanations.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Holdout comparison of the hybrid model with its centroid baseline.
    Baseline {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Keel,
    Csv,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Variant {
    D2,
    D3,
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Defaults to `csv` for `.csv` files and `keel` otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Target column for CSV input; defaults to the last column.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Fuzzy sets per variable.
    #[arg(long)]
    sets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(path: Option<&Path>, args: Option<&PipelineArgs>) -> Outcome<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(a) = args {
        if let Some(v) = a.variant {
            cfg.degree = match v {
                Variant::D2 => 2,
                Variant::D3 => 3,
            };
        }
        if let Some(k) = a.sets {
            cfg.partition.num_sets = k;
        }
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(args: &DataArgs) -> Outcome<Dataset> {
    let format = args.format.unwrap_or_else(|| {
        match args.data.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Keel,
        }
    });
    let data = match format {
        Format::Keel => load_keel(&args.data)?,
        Format::Csv => load_csv(&args.data, args.target.as_deref())?,
    };
    let name = args.data.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    Ok(data.with_name(name))
}

fn load_model(path: &Path) -> Outcome<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    TrainedModel::from_json(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Outcome {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn rules_text(model: &TrainedModel) -> Outcome<String> {
    let rules = export_rules(model.model.knowledge_base(), model.model.rules())?;
    Ok(format!("# manifest: {}\n\n{rules}", model.manifest.to_line()))
}

fn trace_csv(model: &TrainedModel) -> String {
    let mut s = format!("# manifest: {}\niteration,best_rmse\n", model.manifest.to_line());
    for t in &model.trace {
        let _ = writeln!(s, "{},{}", t.iteration, t.best_rmse);
    }
    s
}

fn train_cmd(data: &DataArgs, cfg: &PipelineConfig, out: &Path) -> Outcome {
    let data = load_data(data)?;
    let model = it2tsk::train(&data, cfg)?;
    write(&out.join("model.json"), model.to_json())?;
    write(&out.join("trace.csv"), trace_csv(&model))?;
    write(&out.join("rules.txt"), rules_text(&model)?)?;
    println!(
        "trained {} rules from a universe of {}; selection rmse {:.4}",
        model.model.rules().len(),
        model.universe_size,
        model.selection_rmse
    );
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    manifest: Manifest,
    report: &'a EvalReport,
}

fn crossval_cmd(data: &DataArgs, cfg: &PipelineConfig, name: Option<&str>, k: usize, out: &Path) -> Outcome {
    let (folds, stem): (Vec<FoldSplit>, String) = if data.data.is_dir() {
        let stem = data.data.file_name().and_then(|s| s.to_str()).unwrap_or("data").to_string();
        (load_keel_folds(&data.data)?, stem)
    } else {
        let d = load_data(data)?;
        let stem = d.name().to_string();
        (kfold(&d, k, cfg.seed)?, stem)
    };
    let name = name.map(str::to_string).unwrap_or(stem);
    if canonical_name(&name).is_none() {
        eprintln!(
            "no stored references for `{name}`; available: {}",
            available_datasets().join(", ")
        );
    }
    let report = run_cv(&name, &folds, cfg)?;
    let full = folds[0].train.concat(&folds[0].test)?.with_name(name.as_str());
    let file = ReportFile {
        manifest: Manifest::new(&full, cfg),
        report: &report,
    };
    write(&out.join("report.json"), to_json(&file))?;
    let table = report.comparison_table();
    write(&out.join("comparison.txt"), format!("# manifest: {}\n{table}", file.manifest.to_line()))?;
    print!("{table}");
    if report.mean_rmse.is_none() {
        return Err(Failure::Training("every fold failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct ExplainFile {
    manifest: Manifest,
    data_fingerprint: String,
    explainability: it2tsk::eval::Explainability,
}

fn explain_cmd(model_path: &Path, data: &DataArgs, out: &Path) -> Outcome {
    let model = load_model(model_path)?;
    let data = load_data(data)?;
    if model.model.rules().is_empty() {
        return Err(Failure::Training("model has no rules".into()));
    }
    let rules = rules_text(&model)?;
    let metrics = explainability(&model.model, &data, &data, model.manifest.seed)?;
    let file = ExplainFile {
        manifest: model.manifest.clone(),
        data_fingerprint: data.fingerprint(),
        explainability: metrics,
    };
    let mut rows = format!(
        "# manifest: {}\nrow,prediction,fallback,rule,firing_lower,firing_upper,output,weight\n",
        model.manifest.to_line()
    );
    for (i, x) in data.rows().enumerate() {
        let p = model.model.predict(x)?;
        if p.fired_rules.is_empty() {
            let _ = writeln!(rows, "{i},{},{},,,,,", p.value, u8::from(p.fallback_used));
        }
        for f in &p.fired_rules {
            let _ = writeln!(
                rows,
                "{i},{},{},{},{},{},{},{}",
                p.value,
                u8::from(p.fallback_used),
                f.rule + 1,
                f.firing.lower(),
                f.firing.upper(),
                f.output,
                f.weight
            );
        }
    }
    write(&out.join("rules.txt"), &rules)?;
    write(&out.join("explain.json"), to_json(&file))?;
    write(&out.join("rows.csv"), rows)?;
    print!("{rules}");
    let c = &file.explainability.coverage;
    println!(
        "coverage: classes {:.3}, rows {:.3}, prediction range {:.3}",
        c.classes_covered, c.dataset_coverage, c.prediction_range_fraction
    );
    for a in &file.explainability.active_rules {
        println!("active rules above {}: {:.2}", a.threshold, a.mean_rules);
    }
    for n in &file.explainability.noise {
        println!("noise {}: {:.2}% mean change", n.level, n.mean_change_pct);
    }
    Ok(())
}

fn predict_cmd(model_path: &Path, data: &DataArgs, out: &Path) -> Outcome {
    let model = load_model(model_path)?;
    let data = load_data(data)?;
    let batch = model.model.predict_batch(&data)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    write_predictions_csv(out, &model.manifest.to_line(), data.targets(), &batch)?;
    println!(
        "rmse {:.4} over {} rows ({:.1}% fallback)",
        batch.rmse,
        data.len(),
        100.0 * batch.fallback_rate()
    );
    Ok(())
}

#[derive(Serialize)]
struct BaselineFile {
    manifest: Manifest,
    test_fraction: f64,
    hybrid_rmse: f64,
    baseline_rmse: f64,
    explainability: it2tsk::eval::Explainability,
}

fn baseline_cmd(data: &DataArgs, cfg: &PipelineConfig, test_fraction: f64, out: &Path) -> Outcome {
    let data = load_data(data)?;
    let cs = case_study(&data, cfg, test_fraction)?;
    let manifest = cs.hybrid.manifest.to_line();
    write(&out.join("model.json"), cs.hybrid.to_json())?;
    write(&out.join("rules.txt"), rules_text(&cs.hybrid)?)?;
    fs::create_dir_all(out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    write_predictions_csv(&out.join("hybrid_test.csv"), &manifest, cs.test.targets(), &cs.hybrid_test)?;
    write_predictions_csv(&out.join("baseline_test.csv"), &manifest, cs.test.targets(), &cs.baseline_test)?;
    let file = BaselineFile {
        manifest: cs.hybrid.manifest.clone(),
        test_fraction,
        hybrid_rmse: cs.hybrid_test.rmse,
        baseline_rmse: cs.baseline_test.rmse,
        explainability: cs.explainability,
    };
    write(&out.join("comparison.json"), to_json(&file))?;
    println!("{:<16} {:>10}", "method", "rmse");
    println!("{:<16} {:>10.4}", "hybrid", file.hybrid_rmse);
    println!("{:<16} {:>10.4}", "baseline", file.baseline_rmse);
    for r in references(data.name()).unwrap_or_default() {
        println!("{:<16} {:>10}", r.method, r.rmse);
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Train { data, pipeline, out } => train_cmd(data, &load_config(config, Some(pipeline))?, out),
        Command::Crossval {
            data,
            pipeline,
            name,
            folds,
            out,
        } => crossval_cmd(data, &load_config(config, Some(pipeline))?, name.as_deref(), *folds, out),
        Command::Explain { model, data, out } => explain_cmd(model, data, out),
        Command::Predict { model, data, out } => predict_cmd(model, data, out),
        Command::Baseline {
            data,
            pipeline,
            test_fraction,
            out,
        } => baseline_cmd(data, &load_config(config, Some(pipeline))?, *test_fraction, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
