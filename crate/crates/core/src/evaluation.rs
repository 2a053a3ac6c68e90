//! Cross-validation harnesses, metrics and weighted task ensembles.
//!
//! Every fold sees only its training partition: standardization, feature
//! ranking, floating selection and the hyperparameter search are all fitted
//! inside [`fit_pipeline`], which never receives held-out rows.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    search_with_inner_cv, stratified_folds, train_svm, KernelFamily, KernelSpec, SearchSpace,
    SearchTrial, SvmModel,
};
use crate::error::{Error, Result};
use crate::preprocess::{apply_zscore, fit_zscore, ZScoreParams};
use crate::rng::{derive, str_key};
use crate::selection::{
    inner_cv_criterion, rf_gini_ranking_keyed, sffs, top_k_percent, ForestConfig,
    ImportanceRanking, SelectionTrace,
};
use crate::signal_io::Label;
use crate::stats_agg::FeatureMatrix;

/// Positive class is PD (+1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, truth: i8, predicted: i8) {
        match (truth > 0, predicted > 0) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a i8, &'a i8)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (&t, &p) in pairs {
            c.record(t, p);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl Fraction {
    fn of(r: Ratio<u64>) -> Self {
        Fraction {
            numerator: *r.numer(),
            denominator: *r.denom(),
        }
    }

    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.numerator, self.denominator)
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

/// Percentages, each as an exact reduced fraction and its nearest `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy_exact: Fraction,
    pub precision_exact: Fraction,
    pub recall_exact: Fraction,
    pub f1_exact: Fraction,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn percent(num: u64, den: u64) -> (Fraction, bool) {
    if den == 0 {
        (
            Fraction {
                numerator: 0,
                denominator: 1,
            },
            true,
        )
    } else {
        (Fraction::of(Ratio::new(num * 100, den)), false)
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Empty("confusion counts"));
    }
    let (acc, _) = percent(c.tp + c.tn, total);
    let (prec, pu) = percent(c.tp, c.tp + c.fp);
    let (rec, ru) = percent(c.tp, c.tp + c.fn_);
    let (f1, fu) = percent(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Ok(Metrics {
        accuracy: acc.to_f64(),
        precision: prec.to_f64(),
        recall: rec.to_f64(),
        f1: f1.to_f64(),
        accuracy_exact: acc,
        precision_exact: prec,
        recall_exact: rec,
        f1_exact: f1,
        precision_undefined: pu,
        recall_undefined: ru,
        f1_undefined: fu,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    None,
    Topk,
    Sffs,
    TopkThenSffs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    Fold,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub selection: SelectionMode,
    pub selection_scope: SelectionScope,
    pub k_percent: f64,
    pub sffs_max_size: usize,
    pub n_trees: usize,
    pub search_budget: usize,
    pub kernel_families: Vec<KernelFamily>,
    /// Columns dropped before any fitting.
    pub exclude_features: Vec<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            selection: SelectionMode::TopkThenSffs,
            selection_scope: SelectionScope::Fold,
            k_percent: 10.0,
            sffs_max_size: 10,
            n_trees: 200,
            search_budget: 100,
            kernel_families: KernelFamily::ALL.to_vec(),
            exclude_features: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_percent > 0.0 && self.k_percent <= 100.0) {
            return Err(Error::InvalidConfig(format!(
                "k_percent must be in (0, 100], got {}",
                self.k_percent
            )));
        }
        if self.sffs_max_size == 0 || self.n_trees == 0 || self.search_budget == 0 {
            return Err(Error::InvalidConfig(
                "sffs_max_size, n_trees and search_budget must be >= 1".into(),
            ));
        }
        if self.kernel_families.is_empty() {
            return Err(Error::InvalidConfig("no kernel families".into()));
        }
        Ok(())
    }
}

/// Rows available to a fold's fitting code.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub subject_ids: Vec<String>,
}

impl Partition {
    fn take(&self, idx: &[usize]) -> Partition {
        Partition {
            names: self.names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            subject_ids: idx.iter().map(|&i| self.subject_ids[i].clone()).collect(),
        }
    }

    fn columns(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| cols.iter().map(|&c| r[c]).collect())
            .collect()
    }

    fn majority(&self) -> i8 {
        let pos = self.labels.iter().filter(|&&l| l > 0).count();
        if 2 * pos >= self.labels.len() {
            1
        } else {
            -1
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub zscore: ZScoreParams<f64>,
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    pub family: Option<KernelFamily>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub inner_score: Option<f64>,
    pub model: Option<SvmModel<f64>>,
    /// Set when the training partition held one class only.
    pub fallback_label: Option<i8>,
    pub trace: Option<SelectionTrace>,
}

impl FittedPipeline {
    pub fn predict(&self, row: &[f64]) -> Result<(i8, f64)> {
        if let Some(l) = self.fallback_label {
            return Ok((l, 0.0));
        }
        let z = self.zscore.transform_row(row)?;
        let x: Vec<f64> = self.selected.iter().map(|&c| z[c]).collect();
        self.model.as_ref().expect("fitted model").predict(&x)
    }
}

/// Result of one selection run on standardized training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// Column indices, in ranking order for top-k, sorted for SFFS.
    pub selected: Vec<usize>,
    pub ranking: Option<ImportanceRanking<f64>>,
    pub trace: Option<SelectionTrace>,
    /// Criterion value of the returned SFFS subset.
    pub j: Option<f64>,
}

/// Runs the configured selection on standardized rows `x` of `train`.
pub fn select_features(
    x: &[Vec<f64>],
    train: &Partition,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<SelectionOutcome> {
    let m = train.names.len();
    let ranked = || -> Result<(Vec<usize>, ImportanceRanking<f64>)> {
        let forest = ForestConfig {
            n_trees: cfg.n_trees,
            seed: derive(seed, 1),
            ..Default::default()
        };
        let keys: Vec<u64> = train.subject_ids.iter().map(|s| str_key(s)).collect();
        let r = rf_gini_ranking_keyed(x, &train.labels, &train.names, &keys, &forest)?;
        Ok((top_k_percent(&r, cfg.k_percent)?, r))
    };
    let floating =
        |pool: &[usize], ranking: Option<ImportanceRanking<f64>>| -> Result<SelectionOutcome> {
            let mut pool = pool.to_vec();
            pool.sort_unstable();
            let j = inner_cv_criterion(x, &train.labels, derive(seed, 3));
            let r = sffs(&pool, cfg.sffs_max_size, j)?;
            Ok(SelectionOutcome {
                selected: r.subset,
                ranking,
                trace: Some(r.trace),
                j: Some(r.j),
            })
        };
    match cfg.selection {
        SelectionMode::None => Ok(SelectionOutcome {
            selected: (0..m).collect(),
            ranking: None,
            trace: None,
            j: None,
        }),
        SelectionMode::Topk => {
            let (selected, ranking) = ranked()?;
            Ok(SelectionOutcome {
                selected,
                ranking: Some(ranking),
                trace: None,
                j: None,
            })
        }
        SelectionMode::Sffs => floating(&(0..m).collect::<Vec<_>>(), None),
        SelectionMode::TopkThenSffs => {
            let (pool, ranking) = ranked()?;
            floating(&pool, Some(ranking))
        }
    }
}

/// Fits standardization, selection (unless `fixed_selection` is given),
/// hyperparameter search and the final SVM on `train` alone.
pub fn fit_pipeline(
    train: &Partition,
    cfg: &PipelineConfig,
    fixed_selection: Option<&[usize]>,
    seed: u64,
) -> Result<FittedPipeline> {
    let zscore = fit_zscore(&train.rows, &train.names)?;
    let single_class = train.labels.iter().all(|&l| l == train.labels[0]);
    let mut fitted = FittedPipeline {
        zscore,
        selected: Vec::new(),
        selected_names: Vec::new(),
        family: None,
        c: None,
        gamma: None,
        inner_score: None,
        model: None,
        fallback_label: None,
        trace: None,
    };
    if single_class {
        fitted.fallback_label = Some(train.majority());
        return Ok(fitted);
    }
    let x = apply_zscore(&train.rows, &train.names, &fitted.zscore)?;
    let (selected, trace) = match fixed_selection {
        Some(s) => (s.to_vec(), None),
        None => {
            let o = select_features(&x, train, cfg, seed)?;
            (o.selected, o.trace)
        }
    };
    let xs = Partition::columns(&x, &selected);
    let space = SearchSpace {
        families: cfg.kernel_families.clone(),
        budget: cfg.search_budget,
        seed: derive(seed, 2),
        ..Default::default()
    };
    let outcome = search_with_inner_cv(&xs, &train.labels, &space)?;
    // best scored trial first, ties to the earliest; later candidates only
    // matter if the full-partition fit does not converge
    let mut ranked: Vec<&SearchTrial> = outcome
        .history
        .iter()
        .filter(|t| t.score.is_some())
        .collect();
    ranked.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));
    let mut chosen = None;
    for t in ranked {
        let spec = KernelSpec::with_family(t.family, t.gamma);
        match train_svm(&xs, &train.labels, t.c, &spec) {
            Ok(model) => {
                chosen = Some((t, model));
                break;
            }
            Err(Error::NotConverged(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let (trial, model) = chosen.ok_or(Error::NotConverged(0))?;
    fitted.selected_names = selected.iter().map(|&c| train.names[c].clone()).collect();
    fitted.selected = selected;
    fitted.family = Some(trial.family);
    fitted.c = Some(trial.c);
    fitted.gamma = Some(trial.gamma);
    fitted.inner_score = trial.score;
    fitted.model = Some(model);
    fitted.trace = trace;
    Ok(fitted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject_id: String,
    pub label: Label,
    pub predicted: Label,
    pub decision: f64,
    pub fold: usize,
    pub single_class_fold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub held_out: Vec<String>,
    pub selected_features: Vec<String>,
    pub family: Option<KernelFamily>,
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub inner_score: Option<f64>,
    pub trace: Option<SelectionTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: Option<u8>,
    pub cv: String,
    pub predictions: Vec<Prediction>,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    /// How many folds selected each feature.
    pub feature_frequency: BTreeMap<String, usize>,
    pub folds: Vec<FoldSummary>,
    pub global_selection: Option<Vec<String>>,
}

impl TaskResult {
    /// Accuracy as a fraction in [0, 1].
    pub fn accuracy_fraction(&self) -> f64 {
        let a = self.metrics.accuracy_exact;
        a.numerator as f64 / (a.denominator as f64 * 100.0)
    }

    fn accuracy_ratio(&self) -> Ratio<u64> {
        self.metrics.accuracy_exact.ratio()
    }
}

impl Partition {
    /// The matrix without the `exclude` columns; subject ids must be unique.
    pub fn from_matrix(matrix: &FeatureMatrix, exclude: &[String]) -> Result<Partition> {
        matrix.validate()?;
        let mut seen = HashSet::new();
        for s in &matrix.subject_ids {
            if !seen.insert(s) {
                return Err(Error::InvalidConfig(format!(
                    "subject {s} appears twice in one task"
                )));
            }
        }
        for name in exclude {
            if matrix.column_index(name).is_none() {
                return Err(Error::ColumnMismatch(format!(
                    "excluded feature {name} is not a column"
                )));
            }
        }
        let keep: Vec<usize> = (0..matrix.n_cols())
            .filter(|&c| !exclude.contains(&matrix.names[c]))
            .collect();
        if keep.is_empty() {
            return Err(Error::Empty("feature columns"));
        }
        let m = matrix.select_columns(&keep);
        Ok(Partition {
            labels: m.label_signs(),
            names: m.names,
            rows: m.rows,
            subject_ids: m.subject_ids,
        })
    }
}

/// Evaluates the pipeline over the given test folds (row indices).
fn cross_validate(
    matrix: &FeatureMatrix,
    folds: Vec<Vec<usize>>,
    cv_name: String,
    cfg: &PipelineConfig,
    task_id: Option<u8>,
    allow_single_class: bool,
) -> Result<TaskResult> {
    cfg.validate()?;
    let data = Partition::from_matrix(matrix, &cfg.exclude_features)?;
    let n = data.rows.len();

    let global = match cfg.selection_scope {
        SelectionScope::Fold => None,
        SelectionScope::Global => {
            let params = fit_zscore(&data.rows, &data.names)?;
            let x = apply_zscore(&data.rows, &data.names, &params)?;
            Some(select_features(&x, &data, cfg, derive(cfg.seed, u64::MAX))?.selected)
        }
    };

    let outcomes = folds
        .par_iter()
        .enumerate()
        .map(
            |(f, test)| -> Result<(FoldSummary, Vec<(usize, i8, f64, bool)>)> {
                let in_test: HashSet<usize> = test.iter().copied().collect();
                let train_idx: Vec<usize> = (0..n).filter(|i| !in_test.contains(i)).collect();
                let train = data.take(&train_idx);
                let classes = train.labels.iter().collect::<HashSet<_>>().len();
                if classes < 2 && !allow_single_class {
                    return Err(Error::Fold {
                        fold: f,
                        message: "a class is absent from the training partition".into(),
                    });
                }
                let fitted =
                    fit_pipeline(&train, cfg, global.as_deref(), derive(cfg.seed, f as u64))
                        .map_err(|e| Error::Fold {
                            fold: f,
                            message: e.to_string(),
                        })?;
                let preds = test
                    .iter()
                    .map(|&i| {
                        let (p, d) = fitted.predict(&data.rows[i])?;
                        Ok((i, p, d, fitted.fallback_label.is_some()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let summary = FoldSummary {
                    fold: f,
                    held_out: test.iter().map(|&i| data.subject_ids[i].clone()).collect(),
                    selected_features: fitted.selected_names.clone(),
                    family: fitted.family,
                    c: fitted.c,
                    gamma: fitted.gamma,
                    inner_score: fitted.inner_score,
                    trace: fitted.trace.clone(),
                };
                Ok((summary, preds))
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let mut slots: Vec<Option<Prediction>> = vec![None; n];
    let mut summaries = Vec::with_capacity(outcomes.len());
    let mut feature_frequency = BTreeMap::new();
    for (f, (summary, preds)) in outcomes.into_iter().enumerate() {
        for name in &summary.selected_features {
            *feature_frequency.entry(name.clone()).or_insert(0) += 1;
        }
        for (i, p, d, flag) in preds {
            slots[i] = Some(Prediction {
                subject_id: data.subject_ids[i].clone(),
                label: Label::from_sign(data.labels[i]).expect("label"),
                predicted: Label::from_sign(p).expect("prediction"),
                decision: d,
                fold: f,
                single_class_fold: flag,
            });
        }
        summaries.push(summary);
    }
    let predictions: Vec<Prediction> = slots
        .into_iter()
        .map(|p| p.ok_or_else(|| Error::InvalidConfig("folds do not cover every row".into())))
        .collect::<Result<_>>()?;
    let counts = counts_of(&predictions);
    Ok(TaskResult {
        task_id,
        cv: cv_name,
        metrics: compute_metrics(&counts)?,
        counts,
        predictions,
        feature_frequency,
        folds: summaries,
        global_selection: global.map(|g| g.iter().map(|&c| data.names[c].clone()).collect()),
    })
}

fn ratio_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

fn counts_of(predictions: &[Prediction]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for p in predictions {
        c.record(p.label.sign(), p.predicted.sign());
    }
    c
}

/// Leave-one-subject-out evaluation of one task's matrix.
pub fn loocv_evaluate(
    matrix: &FeatureMatrix,
    cfg: &PipelineConfig,
    task_id: Option<u8>,
) -> Result<TaskResult> {
    let n = matrix.n_rows();
    if n < 3 {
        return Err(Error::TooShort {
            what: "LOOCV rows",
            required: 3,
            got: n,
        });
    }
    let folds = (0..n).map(|i| vec![i]).collect();
    cross_validate(matrix, folds, "loocv".into(), cfg, task_id, true)
}

/// Stratified, seeded k-fold evaluation.
pub fn kfold_evaluate(
    matrix: &FeatureMatrix,
    k: usize,
    cfg: &PipelineConfig,
    task_id: Option<u8>,
) -> Result<TaskResult> {
    let n = matrix.n_rows();
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!(
            "k must be in [2, {n}], got {k}"
        )));
    }
    let assign = stratified_folds(&matrix.label_signs(), k, derive(cfg.seed, 0xF01D));
    let folds = (0..k)
        .map(|f| (0..n).filter(|&i| assign[i] == f).collect())
        .collect();
    cross_validate(matrix, folds, format!("kfold{k}"), cfg, task_id, false)
}

/// sign(Σ w_i f_i) evaluated exactly on the given `f64` weights; a zero sum
/// votes +1.
pub fn weighted_vote(outputs: &[i8], weights: &[f64]) -> Result<i8> {
    let exact = weights
        .iter()
        .map(|&w| {
            BigRational::from_float(w).ok_or_else(|| {
                Error::InvalidConfig(format!("ensemble weight {w} must be finite and >= 0"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    weighted_vote_exact(outputs, &exact)
}

/// sign(Σ w_i f_i) over rational weights; a zero sum votes +1.
pub fn weighted_vote_exact(outputs: &[i8], weights: &[BigRational]) -> Result<i8> {
    if outputs.len() != weights.len() || outputs.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: outputs.len(),
            got: weights.len(),
        });
    }
    let mut sum = BigRational::zero();
    for (&o, w) in outputs.iter().zip(weights) {
        if w.is_negative() {
            return Err(Error::InvalidConfig(format!(
                "ensemble weight {w} must be >= 0"
            )));
        }
        if o != 1 && o != -1 {
            return Err(Error::InvalidConfig(format!("vote output {o} is not ±1")));
        }
        sum += w * BigRational::from_integer(BigInt::from(o));
    }
    Ok(if sum.is_negative() { -1 } else { 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    Top3,
    Top5,
    All,
}

impl EnsembleMode {
    fn size(self) -> Option<usize> {
        match self {
            EnsembleMode::Top3 => Some(3),
            EnsembleMode::Top5 => Some(5),
            EnsembleMode::All => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Accuracy,
    Uniform,
}

/// Member indices by descending accuracy, ties to the lower task id.
pub fn rank_members(results: &[TaskResult], mode: EnsembleMode) -> Result<Vec<usize>> {
    let mut idx: Vec<usize> = (0..results.len()).collect();
    idx.sort_by(|&a, &b| {
        results[b]
            .accuracy_ratio()
            .cmp(&results[a].accuracy_ratio())
            .then(results[a].task_id.cmp(&results[b].task_id))
            .then(a.cmp(&b))
    });
    if let Some(k) = mode.size() {
        if results.len() < k {
            return Err(Error::InvalidConfig(format!(
                "{k} ensemble members requested, {} task results given",
                results.len()
            )));
        }
        idx.truncate(k);
    }
    if idx.is_empty() {
        return Err(Error::Empty("ensemble members"));
    }
    Ok(idx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub task_id: Option<u8>,
    pub accuracy: f64,
    pub weight: f64,
    pub weight_exact: Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub mode: EnsembleMode,
    pub weights: WeightMode,
    pub members: Vec<EnsembleMember>,
    pub predictions: Vec<Prediction>,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Weighted vote of `members` aligned by subject id, in the first member's
/// subject order.
pub fn ensemble_vote(members: &[&TaskResult], weights: &[BigRational]) -> Result<Vec<Prediction>> {
    if members.is_empty() || members.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: members.len(),
            got: weights.len(),
        });
    }
    let lookups: Vec<BTreeMap<&str, &Prediction>> = members
        .iter()
        .map(|m| {
            m.predictions
                .iter()
                .map(|p| (p.subject_id.as_str(), p))
                .collect()
        })
        .collect();
    for (m, l) in members.iter().zip(&lookups) {
        if l.len() != members[0].predictions.len() {
            return Err(Error::MissingSubject(format!(
                "task {:?} covers {} subjects, expected {}",
                m.task_id,
                l.len(),
                members[0].predictions.len()
            )));
        }
    }
    members[0]
        .predictions
        .iter()
        .map(|p0| {
            let mut outputs = Vec::with_capacity(members.len());
            for (m, l) in members.iter().zip(&lookups) {
                let p = l.get(p0.subject_id.as_str()).ok_or_else(|| {
                    Error::MissingSubject(format!(
                        "{} missing from task {:?}",
                        p0.subject_id, m.task_id
                    ))
                })?;
                if p.label != p0.label {
                    return Err(Error::InvalidConfig(format!(
                        "subject {} has conflicting labels",
                        p0.subject_id
                    )));
                }
                outputs.push(p.predicted.sign());
            }
            let vote = weighted_vote_exact(&outputs, weights)?;
            let decision: f64 = outputs
                .iter()
                .zip(weights)
                .map(|(&o, w)| o as f64 * ratio_f64(w))
                .sum();
            Ok(Prediction {
                subject_id: p0.subject_id.clone(),
                label: p0.label,
                predicted: Label::from_sign(vote).expect("vote"),
                decision,
                fold: p0.fold,
                single_class_fold: false,
            })
        })
        .collect()
}

pub fn ensemble(
    results: &[TaskResult],
    mode: EnsembleMode,
    weight_mode: WeightMode,
) -> Result<EnsembleResult> {
    let chosen = rank_members(results, mode)?;
    let members: Vec<&TaskResult> = chosen.iter().map(|&i| &results[i]).collect();
    let weights: Vec<Ratio<u64>> = members
        .iter()
        .map(|m| match weight_mode {
            WeightMode::Accuracy => m.accuracy_ratio() / 100,
            WeightMode::Uniform => Ratio::from_integer(1),
        })
        .collect();
    // members that all scored 0% would otherwise vote a constant +1
    let weights = if weights.iter().all(|w| *w.numer() == 0) {
        vec![Ratio::from_integer(1); weights.len()]
    } else {
        weights
    };
    let exact: Vec<BigRational> = weights
        .iter()
        .map(|w| BigRational::new(BigInt::from(*w.numer()), BigInt::from(*w.denom())))
        .collect();
    let predictions = ensemble_vote(&members, &exact)?;
    let counts = counts_of(&predictions);
    Ok(EnsembleResult {
        mode,
        weights: weight_mode,
        members: members
            .iter()
            .zip(&weights)
            .map(|(m, &w)| EnsembleMember {
                task_id: m.task_id,
                accuracy: m.metrics.accuracy,
                weight: Fraction::of(w).to_f64(),
                weight_exact: Fraction::of(w),
            })
            .collect(),
        metrics: compute_metrics(&counts)?,
        counts,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&ConfusionCounts {
            tp: 1,
            tn: 1,
            fp: 0,
            fn_: 0,
        })
        .unwrap();
        assert_eq!(
            (m.accuracy, m.precision, m.recall, m.f1),
            (100.0, 100.0, 100.0, 100.0)
        );
        let m = compute_metrics(&ConfusionCounts {
            tp: 3,
            tn: 4,
            fp: 1,
            fn_: 2,
        })
        .unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall), (70.0, 75.0, 60.0));
        assert_eq!(
            m.f1_exact,
            Fraction {
                numerator: 200,
                denominator: 3
            }
        );
        assert!((m.f1 - 66.666_666_666_666_67).abs() < 1e-12);
        let m = compute_metrics(&ConfusionCounts {
            tp: 0,
            tn: 2,
            fp: 0,
            fn_: 3,
        })
        .unwrap();
        assert!(m.precision_undefined && !m.recall_undefined);
        assert_eq!(m.precision, 0.0);
        assert!(compute_metrics(&ConfusionCounts::default()).is_err());
    }

    #[test]
    fn vote_examples() {
        assert_eq!(weighted_vote(&[1, 1, -1], &[1.0, 1.0, 1.0]).unwrap(), 1);
        assert_eq!(weighted_vote(&[1, -1, -1], &[0.9, 0.3, 0.3]).unwrap(), 1);
        assert_eq!(weighted_vote(&[1, -1], &[0.5, 0.5]).unwrap(), 1);
        assert_eq!(weighted_vote(&[-1, -1, 1], &[0.5, 0.5, 0.5]).unwrap(), -1);
        assert!(weighted_vote(&[1], &[-1.0]).is_err());
    }

    fn result(task: u8, preds: &[(&str, Label, Label)]) -> TaskResult {
        let predictions: Vec<Prediction> = preds
            .iter()
            .map(|&(s, l, p)| Prediction {
                subject_id: s.into(),
                label: l,
                predicted: p,
                decision: 0.0,
                fold: 0,
                single_class_fold: false,
            })
            .collect();
        let counts = counts_of(&predictions);
        TaskResult {
            task_id: Some(task),
            cv: "loocv".into(),
            metrics: compute_metrics(&counts).unwrap(),
            counts,
            predictions,
            feature_frequency: BTreeMap::new(),
            folds: Vec::new(),
            global_selection: None,
        }
    }

    #[test]
    fn member_ranking_and_identity() {
        use Label::*;
        let a = result(1, &[("a", Pd, Pd), ("b", Hc, Pd)]);
        let b = result(2, &[("a", Pd, Pd), ("b", Hc, Hc)]);
        let c = result(3, &[("b", Hc, Hc), ("a", Pd, Pd)]);
        let all = vec![a.clone(), b, c];
        assert_eq!(
            rank_members(&all, EnsembleMode::Top3).unwrap(),
            vec![1, 2, 0]
        );
        assert!(rank_members(&all, EnsembleMode::Top5).is_err());
        let single = ensemble_vote(&[&a], &[BigRational::new(1.into(), 2.into())]).unwrap();
        assert_eq!(
            single.iter().map(|p| p.predicted).collect::<Vec<_>>(),
            a.predictions
                .iter()
                .map(|p| p.predicted)
                .collect::<Vec<_>>()
        );
        let e = ensemble(&all, EnsembleMode::All, WeightMode::Accuracy).unwrap();
        assert_eq!(e.metrics.accuracy, 100.0);
        let missing = result(4, &[("a", Pd, Pd)]);
        assert!(ensemble_vote(
            &[&a, &missing],
            &vec![BigRational::from_integer(1.into()); 2]
        )
        .is_err());
    }
}
