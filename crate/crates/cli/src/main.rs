//! `inkpark` command-line entry point.
//!
//! Stages compose through files: `synth` writes trials and a manifest,
//! `extract` writes one feature CSV per task, and `select`, `train`,
//! `evaluate` and `ensemble` write JSON reports. Machine-readable summaries
//! go to stdout, prose to stderr. Exit status is 0 on success, 1 for invalid
//! input and 2 for internal failures.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use inkpark::classifier::KernelFamily;
use inkpark::evaluation::{
    compute_metrics, ensemble, fit_pipeline, kfold_evaluate, loocv_evaluate, select_features,
    ConfusionCounts, EnsembleMode, EnsembleResult, Partition, PipelineConfig, SelectionMode,
    SelectionScope, TaskResult, WeightMode,
};
use inkpark::preprocess::{apply_zscore, fit_zscore};
use inkpark::rng::derive;
use inkpark::signal_io::load_cohort;
use inkpark::stats_agg::{build_feature_matrix, FeatureMatrix, FeatureRegistry, REGISTRY_VERSION};
use inkpark::synth_cohort::{generate_cohort, write_cohort, CohortSpec};
use inkpark::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "inkpark",
    version,
    about = "Handwriting-based Parkinson's disease screening pipeline"
)]
struct Cli {
    /// Worker threads (default: available parallelism). Never changes output.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort (trial files + manifest.json).
    Synth(SynthArgs),
    /// Extract one feature CSV per task from a cohort manifest.
    Extract(ExtractArgs),
    /// Run feature selection on a whole feature CSV.
    Select(SelectArgs),
    /// Fit the full pipeline on a feature CSV and save it.
    Train(TrainArgs),
    /// Cross-validate the pipeline on one or more feature CSVs.
    Evaluate(EvaluateArgs),
    /// Combine evaluate reports with a weighted task vote.
    Ensemble(EnsembleArgs),
    /// Summarize and self-check reports as TSV.
    Report(ReportArgs),
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    /// Severity preset: separable or hard.
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,
    /// Cohort spec JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, env = "INKPARK_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    n_pd: Option<usize>,
    #[arg(long)]
    n_hc: Option<usize>,
    /// Keep only the first N task templates.
    #[arg(long)]
    tasks: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SelectionArg {
    None,
    Topk,
    Sffs,
    TopkThenSffs,
}

impl From<SelectionArg> for SelectionMode {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::None => SelectionMode::None,
            SelectionArg::Topk => SelectionMode::Topk,
            SelectionArg::Sffs => SelectionMode::Sffs,
            SelectionArg::TopkThenSffs => SelectionMode::TopkThenSffs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Fold,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CvArg {
    Loocv,
    Kfold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Linear,
    Rbf,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EnsembleArg {
    Top3,
    Top5,
    All,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightArg {
    Accuracy,
    Uniform,
}

#[derive(clap::Args, Debug, Clone)]
struct PipelineArgs {
    #[arg(long, env = "INKPARK_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "topk-then-sffs")]
    selection: SelectionArg,
    #[arg(long, default_value_t = 10.0)]
    k_percent: f64,
    #[arg(long, default_value_t = 10)]
    sffs_max_size: usize,
    #[arg(long, default_value_t = 200)]
    trees: usize,
    #[arg(long, default_value_t = 100)]
    budget: usize,
    /// Kernel families searched (repeatable; default all).
    #[arg(long = "kernel", value_enum)]
    kernels: Vec<FamilyArg>,
    /// Column excluded before fitting (repeatable).
    #[arg(long = "exclude-feature")]
    exclude_features: Vec<String>,
}

impl PipelineArgs {
    fn config(&self, scope: SelectionScope) -> PipelineConfig {
        let families = if self.kernels.is_empty() {
            KernelFamily::ALL.to_vec()
        } else {
            let mut f: Vec<KernelFamily> = self
                .kernels
                .iter()
                .map(|k| match k {
                    FamilyArg::Linear => KernelFamily::Linear,
                    FamilyArg::Rbf => KernelFamily::Rbf,
                    FamilyArg::Sigmoid => KernelFamily::Sigmoid,
                })
                .collect();
            f.sort();
            f.dedup();
            f
        };
        PipelineConfig {
            seed: self.seed.unwrap_or(0),
            selection: self.selection.into(),
            selection_scope: scope,
            k_percent: self.k_percent,
            sffs_max_size: self.sffs_max_size,
            n_trees: self.trees,
            search_budget: self.budget,
            kernel_families: families,
            exclude_features: self.exclude_features.clone(),
        }
    }
}

#[derive(clap::Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write the SFFS trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct EvaluateArgs {
    /// Feature CSVs, one per task (`task<N>.csv` names set the task id).
    #[arg(long, num_args = 1.., required = true)]
    features: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "loocv")]
    cv: CvArg,
    /// Folds for `--cv kfold`.
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value = "fold")]
    selection_scope: ScopeArg,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Ensemble of the evaluated tasks added to the report.
    #[arg(long, value_enum, default_value = "none")]
    ensemble: EnsembleArg,
    #[arg(long, value_enum, default_value = "accuracy")]
    weights: WeightArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct EnsembleArgs {
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "top3")]
    mode: EnsembleArg,
    #[arg(long, value_enum, default_value = "accuracy")]
    weights: WeightArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<PathBuf>,
}

/// Everything needed to rerun an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunConfig {
    command: String,
    inputs: Vec<String>,
    cv: String,
    k: Option<usize>,
    pipeline: PipelineConfig,
    ensemble: Option<EnsembleMode>,
    weights: Option<WeightMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Seeds {
    run: u64,
    /// How every sub-seed is obtained from the run seed.
    derivation: String,
}

impl Seeds {
    fn of(run: u64) -> Self {
        Seeds {
            run,
            derivation: "splitmix64 keyed derivation, chacha8 streams; fold f uses derive(run, f)"
                .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EvaluationReport {
    kind: String,
    tool_version: String,
    registry_version: String,
    config: RunConfig,
    seeds: Seeds,
    task_results: Vec<TaskResult>,
    ensemble: Option<EnsembleResult>,
    self_check: String,
    notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnsembleReport {
    kind: String,
    tool_version: String,
    registry_version: String,
    reports: Vec<String>,
    mode: EnsembleMode,
    weights: WeightMode,
    /// Configs of the member reports, in input order.
    member_configs: Vec<RunConfig>,
    ensemble: EnsembleResult,
    self_check: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{}", e.render());
                    ExitCode::from(1)
                }
            };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be >= 1");
            return ExitCode::from(1);
        }
        builder = builder.num_threads(j);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Extract(a) => extract(a),
        Command::Select(a) => select(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Ensemble(a) => ensemble_cmd(a),
        Command::Report(a) => report(a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    Ok(fs::read_to_string(path)?)
}

fn synth(a: SynthArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let mut spec = match (&a.preset, &a.spec) {
        (_, Some(path)) => {
            let mut s = CohortSpec::from_json(&read_text(path)?)?;
            if a.seed.is_some() {
                s.seed = seed;
            }
            s
        }
        (Some(p), None) => CohortSpec::preset(p, seed)?,
        (None, None) => {
            return Err(Error::InvalidConfig(
                "synth needs --preset or --spec".into(),
            ));
        }
    };
    if let Some(n) = a.n_pd {
        spec.n_pd = n;
    }
    if let Some(n) = a.n_hc {
        spec.n_hc = n;
    }
    if let Some(n) = a.tasks {
        if n == 0 || n > spec.tasks.len() {
            return Err(Error::InvalidConfig(format!(
                "--tasks must be in 1..={}",
                spec.tasks.len()
            )));
        }
        spec.tasks.truncate(n);
    }
    let (trials, manifest) = generate_cohort(&spec)?;
    let path = write_cohort(&a.out, &trials, &manifest)?;
    write_json(&a.out.join("cohort_spec.json"), &spec)?;
    eprintln!(
        "wrote {} trials ({} PD, {} HC, {} tasks)",
        trials.len(),
        spec.n_pd,
        spec.n_hc,
        spec.tasks.len()
    );
    println!(
        "{}",
        serde_json::json!({"manifest": path.display().to_string(), "trials": trials.len()})
    );
    Ok(())
}

fn extract(a: ExtractArgs) -> Result<()> {
    let cohort = load_cohort(&a.manifest)?;
    let registry = FeatureRegistry::default();
    fs::create_dir_all(&a.out)?;
    for (task, trials) in cohort.by_task() {
        let m = build_feature_matrix(&trials, &registry)?;
        let csv = a.out.join(format!("task{task}.csv"));
        m.write_csv(&csv)?;
        write_json(
            &a.out.join(format!("task{task}.imputed.json")),
            &m.imputation_report(),
        )?;
        eprintln!(
            "task {task}: {} rows x {} features, {} imputed cells",
            m.n_rows(),
            m.n_cols(),
            m.imputed.len()
        );
        println!(
            "{}",
            serde_json::json!({"task_id": task, "csv": csv.display().to_string(), "rows": m.n_rows(), "features": m.n_cols()})
        );
    }
    Ok(())
}

fn task_id_of(path: &Path) -> Option<u8> {
    let stem = path.file_stem()?.to_str()?;
    stem.strip_prefix("task")?.parse().ok()
}

fn load_matrix(path: &Path) -> Result<FeatureMatrix> {
    let m = FeatureMatrix::read_csv(path)?;
    if m.n_rows() == 0 {
        return Err(Error::Empty("feature matrix"));
    }
    Ok(m)
}

fn select(a: SelectArgs) -> Result<()> {
    let cfg = a.pipeline.config(SelectionScope::Global);
    cfg.validate()?;
    let m = load_matrix(&a.features)?;
    let data = Partition::from_matrix(&m, &cfg.exclude_features)?;
    let params = fit_zscore(&data.rows, &data.names)?;
    let x = apply_zscore(&data.rows, &data.names, &params)?;
    let outcome = select_features(&x, &data, &cfg, derive(cfg.seed, u64::MAX))?;
    let names: Vec<String> = outcome
        .selected
        .iter()
        .map(|&c| data.names[c].clone())
        .collect();
    if let (Some(path), Some(trace)) = (&a.trace, &outcome.trace) {
        fs::write(path, trace.to_jsonl()?)?;
    }
    let report = serde_json::json!({
        "kind": "selection",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "registry_version": REGISTRY_VERSION,
        "input": a.features.display().to_string(),
        "config": cfg,
        "seeds": Seeds::of(cfg.seed),
        "selected_features": names,
        "criterion": outcome.j,
        "ranking": outcome.ranking,
        "trace": outcome.trace,
        "note": "selection fitted on every row of the input; use evaluate for honest estimates",
    });
    write_json(&a.out, &report)?;
    println!(
        "{}",
        serde_json::json!({"selected_features": names, "criterion": outcome.j})
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.pipeline.config(SelectionScope::Fold);
    cfg.validate()?;
    let m = load_matrix(&a.features)?;
    let data = Partition::from_matrix(&m, &cfg.exclude_features)?;
    let fitted = fit_pipeline(&data, &cfg, None, cfg.seed)?;
    let mut counts = ConfusionCounts::default();
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        counts.record(y, fitted.predict(row)?.0);
    }
    let report = serde_json::json!({
        "kind": "model",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "registry_version": REGISTRY_VERSION,
        "input": a.features.display().to_string(),
        "config": cfg,
        "seeds": Seeds::of(cfg.seed),
        "columns": data.names,
        "training_metrics": compute_metrics(&counts)?,
        "pipeline": fitted,
    });
    write_json(&a.out, &report)?;
    eprintln!("selected {} features", fitted.selected_names.len());
    println!(
        "{}",
        serde_json::json!({"selected_features": fitted.selected_names, "family": fitted.family, "c": fitted.c, "gamma": fitted.gamma})
    );
    Ok(())
}

/// Recomputes every confusion matrix and metric from raw predictions.
fn self_check(results: &[&TaskResult], ens: Option<&EnsembleResult>) -> Result<()> {
    let check = |preds: &[inkpark::evaluation::Prediction],
                 counts: &ConfusionCounts,
                 metrics: &inkpark::evaluation::Metrics|
     -> Result<()> {
        let mut c = ConfusionCounts::default();
        for p in preds {
            c.record(p.label.sign(), p.predicted.sign());
        }
        if &c != counts || &compute_metrics(&c)? != metrics {
            return Err(Error::InvalidConfig(
                "report metrics disagree with its predictions".into(),
            ));
        }
        Ok(())
    };
    for r in results {
        check(&r.predictions, &r.counts, &r.metrics)?;
    }
    if let Some(e) = ens {
        check(&e.predictions, &e.counts, &e.metrics)?;
    }
    Ok(())
}

fn ensemble_mode(e: EnsembleArg) -> Option<EnsembleMode> {
    match e {
        EnsembleArg::Top3 => Some(EnsembleMode::Top3),
        EnsembleArg::Top5 => Some(EnsembleMode::Top5),
        EnsembleArg::All => Some(EnsembleMode::All),
        EnsembleArg::None => None,
    }
}

fn weight_mode(w: WeightArg) -> WeightMode {
    match w {
        WeightArg::Accuracy => WeightMode::Accuracy,
        WeightArg::Uniform => WeightMode::Uniform,
    }
}

fn summary_line(kind: &str, task: Option<u8>, counts: &ConfusionCounts, acc: f64) -> String {
    serde_json::json!({
        "kind": kind,
        "task_id": task,
        "accuracy": acc,
        "tp": counts.tp, "tn": counts.tn, "fp": counts.fp, "fn": counts.fn_,
    })
    .to_string()
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let scope = match a.selection_scope {
        ScopeArg::Fold => SelectionScope::Fold,
        ScopeArg::Global => SelectionScope::Global,
    };
    let cfg = a.pipeline.config(scope);
    cfg.validate()?;
    let mut results = Vec::new();
    for path in &a.features {
        let m = load_matrix(path)?;
        let task = task_id_of(path);
        eprintln!("evaluating {} ({} rows)", path.display(), m.n_rows());
        let r = match a.cv {
            CvArg::Loocv => loocv_evaluate(&m, &cfg, task)?,
            CvArg::Kfold => kfold_evaluate(&m, a.k, &cfg, task)?,
        };
        println!(
            "{}",
            summary_line("task", r.task_id, &r.counts, r.metrics.accuracy)
        );
        results.push(r);
    }
    let mode = ensemble_mode(a.ensemble);
    let ens = match mode {
        Some(mode) => Some(ensemble(&results, mode, weight_mode(a.weights))?),
        None => None,
    };
    if let Some(e) = &ens {
        println!(
            "{}",
            summary_line("ensemble", None, &e.counts, e.metrics.accuracy)
        );
    }
    self_check(&results.iter().collect::<Vec<_>>(), ens.as_ref())?;
    let mut notes = Vec::new();
    if scope == SelectionScope::Global {
        notes.push(
            "selection_scope=global: features were selected on all rows, including each fold's held-out subject; accuracy is optimistically biased"
                .to_string(),
        );
    }
    let report = EvaluationReport {
        kind: "evaluation".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        registry_version: REGISTRY_VERSION.into(),
        config: RunConfig {
            command: "evaluate".into(),
            inputs: a.features.iter().map(|p| p.display().to_string()).collect(),
            cv: match a.cv {
                CvArg::Loocv => "loocv".into(),
                CvArg::Kfold => "kfold".into(),
            },
            k: (a.cv == CvArg::Kfold).then_some(a.k),
            pipeline: cfg.clone(),
            ensemble: mode,
            weights: mode.map(|_| weight_mode(a.weights)),
        },
        seeds: Seeds::of(cfg.seed),
        task_results: results,
        ensemble: ens,
        self_check: "pass".into(),
        notes,
    };
    for n in &report.notes {
        eprintln!("note: {n}");
    }
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    } else {
        println!("{}", serde_json::to_string(&report)?);
    }
    Ok(())
}

fn ensemble_cmd(a: EnsembleArgs) -> Result<()> {
    let Some(mode) = ensemble_mode(a.mode) else {
        return Err(Error::InvalidConfig(
            "ensemble --mode must be top3, top5 or all".into(),
        ));
    };
    let mut results = Vec::new();
    let mut configs = Vec::new();
    for path in &a.reports {
        let r: EvaluationReport = serde_json::from_str(&read_text(path)?)?;
        if r.registry_version != REGISTRY_VERSION {
            return Err(Error::InvalidConfig(format!(
                "{} uses registry {}, expected {REGISTRY_VERSION}",
                path.display(),
                r.registry_version
            )));
        }
        configs.push(r.config);
        results.extend(r.task_results);
    }
    let mut seen = BTreeMap::new();
    for r in &results {
        if let Some(t) = r.task_id {
            if seen.insert(t, ()).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "task {t} appears in more than one report"
                )));
            }
        }
    }
    let e = ensemble(&results, mode, weight_mode(a.weights))?;
    self_check(&[], Some(&e))?;
    for m in &e.members {
        eprintln!("member task {:?}: weight {}", m.task_id, m.weight);
    }
    println!(
        "{}",
        summary_line("ensemble", None, &e.counts, e.metrics.accuracy)
    );
    let report = EnsembleReport {
        kind: "ensemble".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        registry_version: REGISTRY_VERSION.into(),
        reports: a.reports.iter().map(|p| p.display().to_string()).collect(),
        mode,
        weights: weight_mode(a.weights),
        member_configs: configs,
        ensemble: e,
        self_check: "pass".into(),
    };
    match &a.out {
        Some(out) => write_json(out, &report)?,
        None => println!("{}", serde_json::to_string(&report)?),
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    println!("source\tkind\ttask_id\taccuracy\tprecision\trecall\tf1\ttp\ttn\tfp\tfn");
    let row = |src: &str, kind: &str, task: Option<u8>, c: &ConfusionCounts| -> Result<String> {
        let m = compute_metrics(c)?;
        Ok(format!(
            "{src}\t{kind}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            task.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            m.accuracy,
            m.precision,
            m.recall,
            m.f1,
            c.tp,
            c.tn,
            c.fp,
            c.fn_
        ))
    };
    for path in &a.reports {
        let text = read_text(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let src = path.display().to_string();
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("evaluation") => {
                let r: EvaluationReport = serde_json::from_value(value)?;
                self_check(
                    &r.task_results.iter().collect::<Vec<_>>(),
                    r.ensemble.as_ref(),
                )?;
                for t in &r.task_results {
                    println!("{}", row(&src, "task", t.task_id, &t.counts)?);
                }
                if let Some(e) = &r.ensemble {
                    println!("{}", row(&src, "ensemble", None, &e.counts)?);
                }
            }
            Some("ensemble") => {
                let r: EnsembleReport = serde_json::from_value(value)?;
                self_check(&[], Some(&r.ensemble))?;
                println!("{}", row(&src, "ensemble", None, &r.ensemble.counts)?);
            }
            other => {
                return Err(Error::InvalidConfig(format!(
                    "{src}: unsupported report kind {other:?}"
                )));
            }
        }
    }
    eprintln!("self-check passed for {} report(s)", a.reports.len());
    Ok(())
}
