//! Random-forest Gini importance ranking, top-k% filtering and sequential
//! floating forward selection.

use std::cmp::Ordering;
use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{cv_accuracy, KernelSpec};
use crate::error::{Error, Result};
use crate::rng::{derive, derive_path, keyed_unit, rng_from, splitmix64};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means ⌈√M⌉.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_features: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct RankedFeature<T> {
    pub index: usize,
    pub name: String,
    pub importance: T,
}

/// Features by descending importance; equal importances keep column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct ImportanceRanking<T> {
    pub features: Vec<RankedFeature<T>>,
}

impl<T: Scalar> ImportanceRanking<T> {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Importance of column `index`.
    pub fn importance_of(&self, index: usize) -> Option<T> {
        self.features
            .iter()
            .find(|f| f.index == index)
            .map(|f| f.importance)
    }

    /// Importances in column order.
    pub fn by_column(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.features.len()];
        for f in &self.features {
            v[f.index] = f.importance;
        }
        v
    }
}

/// Row key derived from the row's bytes and label, so bootstrap counts do
/// not depend on row order.
pub fn content_key<T: Scalar>(row: &[T], label: i8) -> u64 {
    let mut h = splitmix64(label as u64);
    for &v in row {
        h = splitmix64(h ^ v.to_f64_lossy().to_bits());
    }
    h
}

pub fn rf_gini_ranking<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    names: &[String],
    cfg: &ForestConfig,
) -> Result<ImportanceRanking<T>> {
    let keys: Vec<u64> = rows
        .iter()
        .zip(labels)
        .map(|(r, &l)| content_key(r, l))
        .collect();
    rf_gini_ranking_keyed(rows, labels, names, &keys, cfg)
}

/// As [`rf_gini_ranking`] with caller-supplied row keys.
pub fn rf_gini_ranking_keyed<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    names: &[String],
    keys: &[u64],
    cfg: &ForestConfig,
) -> Result<ImportanceRanking<T>> {
    let n = rows.len();
    if n < 4 {
        return Err(Error::TooShort {
            what: "random forest rows",
            required: 4,
            got: n,
        });
    }
    if labels.len() != n || keys.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len().min(keys.len()),
        });
    }
    let m = names.len();
    if m == 0 {
        return Err(Error::Empty("feature pool"));
    }
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::ColumnMismatch(
            "row width differs from feature names".into(),
        ));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    if cfg.n_trees == 0 || cfg.min_leaf == 0 {
        return Err(Error::InvalidConfig(
            "forest needs n_trees >= 1 and min_leaf >= 1".into(),
        ));
    }
    let mtry = cfg
        .max_features
        .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
        .clamp(1, m);

    let per_tree: Vec<Vec<T>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = derive(cfg.seed, t as u64);
            let weights: Vec<u32> = keys
                .iter()
                .map(|&k| {
                    if cfg.bootstrap {
                        poisson1(derive(tree_seed, k))
                    } else {
                        1
                    }
                })
                .collect();
            grow_tree(
                rows,
                labels,
                keys,
                &weights,
                mtry,
                cfg.min_leaf,
                tree_seed,
                m,
            )
        })
        .collect();

    let mut total = vec![T::zero(); m];
    for imp in &per_tree {
        for (acc, &v) in total.iter_mut().zip(imp) {
            *acc += v;
        }
    }
    let s: T = total.iter().copied().sum();
    if s > T::zero() {
        for v in &mut total {
            *v /= s;
        }
    }
    let mut features: Vec<RankedFeature<T>> = total
        .into_iter()
        .enumerate()
        .map(|(index, importance)| RankedFeature {
            index,
            name: names[index].clone(),
            importance,
        })
        .collect();
    features.sort_by(|a, b| {
        b.importance
            .partial_cmp(&a.importance)
            .unwrap_or(Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    Ok(ImportanceRanking { features })
}

/// Poisson(1) draw by inversion of a keyed uniform.
fn poisson1(seed: u64) -> u32 {
    let u = keyed_unit(seed);
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u >= cdf && k < 20 {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k
}

fn gini<T: Scalar>(pos: T, neg: T) -> T {
    let n = pos + neg;
    if n == T::zero() {
        return T::zero();
    }
    let (p, q) = (pos / n, neg / n);
    T::one() - p * p - q * q
}

/// Grows one tree to full depth and returns its normalized importances.
#[allow(clippy::too_many_arguments)]
fn grow_tree<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    keys: &[u64],
    weights: &[u32],
    mtry: usize,
    min_leaf: usize,
    tree_seed: u64,
    m: usize,
) -> Vec<T> {
    let mut imp = vec![T::zero(); m];
    let root: Vec<usize> = (0..rows.len()).filter(|&i| weights[i] > 0).collect();
    let mut stack = vec![(root, tree_seed)];
    while let Some((node, node_seed)) = stack.pop() {
        let w = |i: usize| T::from(weights[i]).expect("weight");
        let (mut pos, mut neg) = (T::zero(), T::zero());
        for &i in &node {
            if labels[i] > 0 {
                pos += w(i);
            } else {
                neg += w(i);
            }
        }
        let total = pos + neg;
        if pos == T::zero() || neg == T::zero() || total < T::from_count(2 * min_leaf) {
            continue;
        }
        let parent = gini(pos, neg);
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng_from(node_seed));

        let mut best: Option<(T, usize, T)> = None;
        let mut tried = 0;
        for &f in &order {
            if tried >= mtry {
                break;
            }
            let mut sorted = node.clone();
            sorted.sort_by(|&a, &b| {
                rows[a][f]
                    .partial_cmp(&rows[b][f])
                    .unwrap_or(Ordering::Equal)
                    .then(keys[a].cmp(&keys[b]))
            });
            if rows[sorted[0]][f] == rows[sorted[sorted.len() - 1]][f] {
                continue;
            }
            tried += 1;
            let (mut lp, mut ln) = (T::zero(), T::zero());
            let min_w = T::from_count(min_leaf);
            for s in 0..sorted.len() - 1 {
                let i = sorted[s];
                if labels[i] > 0 {
                    lp += w(i);
                } else {
                    ln += w(i);
                }
                let (a, b) = (rows[i][f], rows[sorted[s + 1]][f]);
                if a == b {
                    continue;
                }
                let (lw, rw) = (lp + ln, total - lp - ln);
                if lw < min_w || rw < min_w {
                    continue;
                }
                let decrease = total * parent - lw * gini(lp, ln) - rw * gini(pos - lp, neg - ln);
                if best.is_none_or(|(d, _, _)| decrease > d) {
                    best = Some((decrease, f, (a + b) / T::lit(2.0)));
                }
            }
        }
        let Some((decrease, f, threshold)) = best else {
            continue;
        };
        imp[f] += decrease.max(T::zero());
        let (left, right): (Vec<usize>, Vec<usize>) =
            node.iter().partition(|&&i| rows[i][f] <= threshold);
        stack.push((right, derive(node_seed, 2)));
        stack.push((left, derive(node_seed, 1)));
    }
    let s: T = imp.iter().copied().sum();
    if s > T::zero() {
        for v in &mut imp {
            *v /= s;
        }
    }
    imp
}

/// The first ⌈k·M/100⌉ features of the ranking (at least one).
pub fn top_k_percent<T: Scalar>(
    ranking: &ImportanceRanking<T>,
    k_percent: f64,
) -> Result<Vec<usize>> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::InvalidConfig(format!(
            "k_percent must be in (0, 100], got {k_percent}"
        )));
    }
    let count = ((k_percent * ranking.len() as f64) / 100.0).ceil() as usize;
    let count = count.clamp(1, ranking.len());
    Ok(ranking
        .features
        .iter()
        .take(count)
        .map(|f| f.index)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub action: StepAction,
    pub feature: usize,
    /// J of the subset after the step.
    pub j: f64,
    pub size: usize,
    /// Sorted subset after the step.
    pub subset: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
}

impl SelectionTrace {
    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for s in &self.steps {
            serde_json::to_writer(&mut out, s)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SffsResult {
    pub subset: Vec<usize>,
    pub j: f64,
    pub trace: SelectionTrace,
}

fn sorted_with(x: &[usize], extra: Option<usize>, without: Option<usize>) -> Vec<usize> {
    let mut v: Vec<usize> = x.iter().copied().filter(|&f| Some(f) != without).collect();
    v.extend(extra);
    v.sort_unstable();
    v
}

/// Index of the largest score; ties go to the smallest feature id.
fn arg_best(scored: &[(usize, f64)]) -> Option<(usize, f64)> {
    scored
        .iter()
        .copied()
        .fold(None, |best, (f, j)| match best {
            Some((bf, bj)) if j < bj || (j == bj && f > bf) => Some((bf, bj)),
            _ => Some((f, j)),
        })
}

/// Sequential floating forward selection over the feature ids in `pool`.
///
/// A forward step adds the candidate maximizing `J`; it is taken only if it
/// beats the best `J` seen so far at the new size. After each addition,
/// features are removed while removal raises `J` above both the current
/// subset and the best seen at the smaller size.
pub fn sffs<F>(pool: &[usize], max_subset_size: usize, evaluator: F) -> Result<SffsResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if pool.is_empty() {
        return Err(Error::Empty("feature pool"));
    }
    if max_subset_size == 0 {
        return Err(Error::InvalidConfig("max_subset_size must be >= 1".into()));
    }
    let max_size = max_subset_size.min(pool.len());
    let mut best_seen = vec![f64::NEG_INFINITY; max_size + 1];
    let mut x: Vec<usize> = Vec::new();
    let mut trace = SelectionTrace::default();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let consider = |subset: &[usize], j: f64, best: &mut Option<(Vec<usize>, f64)>| {
        let better = match best {
            None => true,
            Some((bs, bj)) => {
                j > *bj
                    || (j == *bj
                        && (subset.len() < bs.len()
                            || (subset.len() == bs.len() && subset < bs.as_slice())))
            }
        };
        if better {
            *best = Some((subset.to_vec(), j));
        }
    };

    while x.len() < max_size {
        let candidates: Vec<usize> = pool.iter().copied().filter(|f| !x.contains(f)).collect();
        if candidates.is_empty() {
            break;
        }
        let scored = candidates
            .par_iter()
            .map(|&f| evaluator(&sorted_with(&x, Some(f), None)).map(|j| (f, j)))
            .collect::<Result<Vec<_>>>()?;
        let (f_add, j_add) = arg_best(&scored).expect("non-empty candidates");
        let k = x.len() + 1;
        if j_add <= best_seen[k] {
            break;
        }
        x = sorted_with(&x, Some(f_add), None);
        let mut x_j = j_add;
        best_seen[k] = j_add;
        trace.steps.push(SelectionStep {
            action: StepAction::Add,
            feature: f_add,
            j: j_add,
            size: k,
            subset: x.clone(),
        });
        consider(&x, x_j, &mut best);

        while x.len() >= 2 {
            let scored = x
                .par_iter()
                .map(|&f| evaluator(&sorted_with(&x, None, Some(f))).map(|j| (f, j)))
                .collect::<Result<Vec<_>>>()?;
            let (f_rm, j_rm) = arg_best(&scored).expect("non-empty subset");
            let k = x.len() - 1;
            if !(j_rm > x_j && j_rm > best_seen[k]) {
                break;
            }
            x = sorted_with(&x, None, Some(f_rm));
            x_j = j_rm;
            best_seen[k] = j_rm;
            trace.steps.push(SelectionStep {
                action: StepAction::Remove,
                feature: f_rm,
                j: j_rm,
                size: k,
                subset: x.clone(),
            });
            consider(&x, x_j, &mut best);
        }
    }
    let (subset, j) = best.expect("at least one forward step is always taken");
    Ok(SffsResult { subset, j, trace })
}

/// Plain greedy forward selection without floating; J of each prefix.
pub fn greedy_forward<F>(
    pool: &[usize],
    max_subset_size: usize,
    evaluator: F,
) -> Result<Vec<(Vec<usize>, f64)>>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    let mut x: Vec<usize> = Vec::new();
    let mut path = Vec::new();
    while x.len() < max_subset_size.min(pool.len()) {
        let scored = pool
            .iter()
            .copied()
            .filter(|f| !x.contains(f))
            .map(|f| evaluator(&sorted_with(&x, Some(f), None)).map(|j| (f, j)))
            .collect::<Result<Vec<_>>>()?;
        let (f, j) = arg_best(&scored).expect("candidates");
        x = sorted_with(&x, Some(f), None);
        path.push((x.clone(), j));
    }
    Ok(path)
}

/// SFFS criterion: stratified 5-fold inner-CV accuracy of an RBF SVM with
/// C = 1 and γ = 1/|subset| on the given columns.
pub fn inner_cv_criterion<'a, T: Scalar>(
    rows: &'a [Vec<T>],
    labels: &'a [i8],
    seed: u64,
) -> impl Fn(&[usize]) -> Result<f64> + Sync + 'a {
    move |subset: &[usize]| {
        if subset.is_empty() {
            return Err(Error::Empty("feature subset"));
        }
        let cols: Vec<Vec<T>> = rows
            .iter()
            .map(|r| subset.iter().map(|&c| r[c]).collect())
            .collect();
        let spec = KernelSpec::rbf(T::one() / T::from_count(subset.len()));
        cv_accuracy(
            &cols,
            labels,
            &spec,
            T::one(),
            5,
            derive_path(seed, &[0x5FF5]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use std::collections::HashMap;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|i| format!("f{i}")).collect()
    }

    fn noisy(n: usize, m: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut rng = rng_from(seed);
        let labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let rows = (0..n)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect();
        (rows, labels)
    }

    #[test]
    fn label_feature_dominates() {
        let (mut rows, labels) = noisy(200, 2, 3);
        for (r, &l) in rows.iter_mut().zip(&labels) {
            r[0] = l as f64;
        }
        let cfg = ForestConfig {
            n_trees: 50,
            seed: 11,
            ..Default::default()
        };
        let r = rf_gini_ranking(&rows, &labels, &names(2), &cfg).unwrap();
        let imp = r.by_column();
        assert!(imp[0] > 5.0 * imp[1], "{imp:?}");
        assert_eq!(r.features[0].index, 0);
    }

    #[test]
    fn pure_noise_spreads_importance() {
        let (rows, labels) = noisy(120, 10, 4);
        let cfg = ForestConfig {
            n_trees: 60,
            seed: 2,
            ..Default::default()
        };
        let r = rf_gini_ranking(&rows, &labels, &names(10), &cfg).unwrap();
        let sum: f64 = r.features.iter().map(|f| f.importance).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(r
            .features
            .iter()
            .all(|f| f.importance >= 0.0 && f.importance < 0.5));
        assert_eq!(
            r,
            rf_gini_ranking(&rows, &labels, &names(10), &cfg).unwrap()
        );
    }

    #[test]
    fn row_order_invariance() {
        let (rows, labels) = noisy(40, 5, 8);
        let cfg = ForestConfig {
            n_trees: 20,
            seed: 9,
            ..Default::default()
        };
        let a = rf_gini_ranking(&rows, &labels, &names(5), &cfg).unwrap();
        let perm: Vec<usize> = (0..40).rev().collect();
        let rows2: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let labels2: Vec<i8> = perm.iter().map(|&i| labels[i]).collect();
        let b = rf_gini_ranking(&rows2, &labels2, &names(5), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_errors() {
        let (rows, _) = noisy(10, 2, 1);
        assert!(matches!(
            rf_gini_ranking(&rows, &[1; 10], &names(2), &ForestConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    fn ranking(m: usize) -> ImportanceRanking<f64> {
        ImportanceRanking {
            features: (0..m)
                .map(|i| RankedFeature {
                    index: m - 1 - i,
                    name: String::new(),
                    importance: (m - i) as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn top_k_counts() {
        assert_eq!(top_k_percent(&ranking(100), 5.0).unwrap().len(), 5);
        assert_eq!(top_k_percent(&ranking(88), 1.0).unwrap().len(), 1);
        assert_eq!(top_k_percent(&ranking(527), 10.0).unwrap().len(), 53);
        let all = top_k_percent(&ranking(7), 100.0).unwrap();
        assert_eq!(all, vec![6, 5, 4, 3, 2, 1, 0]);
        assert!(top_k_percent(&ranking(7), 0.0).is_err());
        assert!(top_k_percent(&ranking(7), 100.5).is_err());
    }

    fn table_j(table: HashMap<Vec<usize>, f64>) -> impl Fn(&[usize]) -> Result<f64> + Sync {
        move |s: &[usize]| Ok(*table.get(s).unwrap_or(&0.0))
    }

    #[test]
    fn floating_removes_redundant_feature() {
        // features 1, 2 jointly perfect; 3 best alone
        let table: HashMap<Vec<usize>, f64> = [
            (vec![1], 0.6),
            (vec![2], 0.6),
            (vec![3], 0.8),
            (vec![1, 3], 0.85),
            (vec![2, 3], 0.85),
            (vec![1, 2], 1.0),
            (vec![1, 2, 3], 0.95),
        ]
        .into_iter()
        .collect();
        let r = sffs(&[1, 2, 3], 3, table_j(table)).unwrap();
        assert!(r
            .trace
            .steps
            .iter()
            .any(|s| s.action == StepAction::Remove && s.feature == 3));
        assert_eq!(r.subset, vec![1, 2]);
        assert_eq!(r.j, 1.0);
    }

    #[test]
    fn add_ties_take_lowest_index() {
        let r = sffs(&[4, 2, 7], 1, |_: &[usize]| Ok(0.5)).unwrap();
        assert_eq!(r.subset, vec![2]);
    }

    #[test]
    fn separating_feature_first() {
        let (mut rows, labels) = noisy(100, 6, 21);
        for (r, &l) in rows.iter_mut().zip(&labels) {
            r[3] = l as f64 * 2.0;
        }
        let j = inner_cv_criterion(&rows, &labels, 1);
        let r = sffs(&[0, 1, 2, 3, 4, 5], 3, &j).unwrap();
        assert_eq!(r.trace.steps[0].feature, 3);
        assert_eq!(r.trace.steps[0].j, 1.0);
        assert_eq!(r.subset, vec![3]);
        for s in &r.trace.steps {
            assert_eq!(j(&s.subset).unwrap(), s.j);
        }
        let text = r.trace.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), r.trace.steps.len());
    }

    #[test]
    fn empty_pool() {
        assert!(sffs(&[], 3, |_: &[usize]| Ok(0.0)).is_err());
    }
}
