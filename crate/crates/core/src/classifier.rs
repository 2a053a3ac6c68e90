//! Binary kernel SVM trained by sequential minimal optimization, plus a
//! seeded random search over (C, γ, kernel family).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, rng_from};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
    Sigmoid,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [
        KernelFamily::Linear,
        KernelFamily::Rbf,
        KernelFamily::Sigmoid,
    ];
}

/// `Linear`: u·v. `Rbf`: exp(−γ‖u−v‖²). `Sigmoid`: tanh(γ u·v + coef0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct KernelSpec<T> {
    pub family: KernelFamily,
    pub gamma: T,
    pub coef0: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            gamma: T::one(),
            coef0: T::zero(),
        }
    }

    pub fn rbf(gamma: T) -> Self {
        KernelSpec {
            family: KernelFamily::Rbf,
            gamma,
            coef0: T::zero(),
        }
    }

    pub fn sigmoid(gamma: T) -> Self {
        KernelSpec {
            family: KernelFamily::Sigmoid,
            gamma,
            coef0: T::zero(),
        }
    }

    pub fn with_family(family: KernelFamily, gamma: T) -> Self {
        match family {
            KernelFamily::Linear => Self::linear(),
            KernelFamily::Rbf => Self::rbf(gamma),
            KernelFamily::Sigmoid => Self::sigmoid(gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needs_gamma = self.family != KernelFamily::Linear;
        if needs_gamma && !(self.gamma > T::zero() && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kernel gamma must be > 0, got {}",
                self.gamma
            )));
        }
        if !self.coef0.is_finite() {
            return Err(Error::NonFinite("kernel coef0"));
        }
        Ok(())
    }

    /// Kernel value for equal-length inputs.
    pub fn eval(&self, u: &[T], v: &[T]) -> T {
        match self.family {
            KernelFamily::Linear => dot(u, v),
            KernelFamily::Rbf => {
                let d2: T = u.iter().zip(v).map(|(&a, &b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelFamily::Sigmoid => (self.gamma * dot(u, v) + self.coef0).tanh(),
        }
    }
}

fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&a, &b)| a * b).sum()
}

pub fn kernel_eval<T: Scalar>(spec: &KernelSpec<T>, u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(spec.eval(u, v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    /// Maximal violating-pair gap at termination, floored at 64 machine
    /// epsilons of the scalar type.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig {
            tolerance: 1e-8,
            max_iterations: 100_000,
        }
    }
}

/// Decision function `f(x) = Σ α_i y_i K(x_i, x) + b` over the support
/// vectors (α_i > 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct SvmModel<T> {
    pub kernel: KernelSpec<T>,
    pub c: T,
    pub support_vectors: Vec<Vec<T>>,
    pub labels: Vec<i8>,
    pub alphas: Vec<T>,
    pub bias: T,
    pub iterations: usize,
}

impl<T: Scalar> SvmModel<T> {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(Vec::len)
    }

    pub fn decision_value(&self, row: &[T]) -> Result<T> {
        if let Some(d) = self.dim() {
            if d != row.len() {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        let mut f = self.bias;
        for ((sv, &y), &a) in self
            .support_vectors
            .iter()
            .zip(&self.labels)
            .zip(&self.alphas)
        {
            f += a * T::from(y).expect("label") * self.kernel.eval(sv, row);
        }
        Ok(f)
    }

    /// Predicted label and decision value; a decision value of exactly 0
    /// predicts +1.
    pub fn predict(&self, row: &[T]) -> Result<(i8, T)> {
        let f = self.decision_value(row)?;
        Ok((if f >= T::zero() { 1 } else { -1 }, f))
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn predict<T: Scalar>(model: &SvmModel<T>, row: &[T]) -> Result<(i8, T)> {
    model.predict(row)
}

fn check_training_set<T: Scalar>(rows: &[Vec<T>], labels: &[i8]) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let d = rows[0].len();
    for r in rows {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features"));
        }
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidConfig("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    Ok(d)
}

pub fn train_svm<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    c: T,
    spec: &KernelSpec<T>,
) -> Result<SvmModel<T>> {
    train_svm_with(rows, labels, c, spec, SmoConfig::default())
}

/// Solves min ½αᵀQα − Σα subject to yᵀα = 0, 0 ≤ α ≤ C with
/// second-order working-set selection.
pub fn train_svm_with<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    c: T,
    spec: &KernelSpec<T>,
    cfg: SmoConfig,
) -> Result<SvmModel<T>> {
    check_training_set(rows, labels)?;
    spec.validate()?;
    if !(c > T::zero() && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("C must be > 0, got {c}")));
    }
    let n = rows.len();
    let y: Vec<T> = labels.iter().map(|&l| T::from(l).expect("label")).collect();
    let mut k = vec![T::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let v = spec.eval(&rows[i], &rows[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let kk = |i: usize, j: usize| k[i * n + j];
    let tau = T::lit(1e-12);
    let eps = T::lit(cfg.tolerance).max(T::epsilon() * T::lit(64.0));
    let mut alpha = vec![T::zero(); n];
    let mut grad = vec![-T::one(); n];

    let in_up = |a: T, yt: T| (yt > T::zero() && a < c) || (yt < T::zero() && a > T::zero());
    let in_low = |a: T, yt: T| (yt > T::zero() && a > T::zero()) || (yt < T::zero() && a < c);

    let mut iterations = 0;
    loop {
        let mut gmax = T::neg_infinity();
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmin = T::infinity();
        let mut j_sel = None;
        let mut best_obj = T::infinity();
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                if v < gmin {
                    gmin = v;
                }
                let b = gmax - v;
                if b > T::zero() {
                    let mut a = kk(i, i) + kk(t, t) - T::lit(2.0) * kk(i, t);
                    if a <= T::zero() {
                        a = tau;
                    }
                    let obj = -(b * b) / a;
                    if obj < best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if gmax - gmin < eps {
            break;
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::NotConverged(iterations));
        }
        iterations += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let mut quad = kk(i, i) + kk(j, j) - T::lit(2.0) * kk(i, j);
        if quad <= T::zero() {
            quad = tau;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            let (mut ni, mut nj) = (ai + delta, aj + delta);
            if diff > T::zero() {
                if nj < T::zero() {
                    nj = T::zero();
                    ni = diff;
                }
            } else if ni < T::zero() {
                ni = T::zero();
                nj = -diff;
            }
            if diff > T::zero() {
                if ni > c {
                    ni = c;
                    nj = c - diff;
                }
            } else if nj > c {
                nj = c;
                ni = c + diff;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            let (mut ni, mut nj) = (ai - delta, aj + delta);
            if sum > c {
                if ni > c {
                    ni = c;
                    nj = sum - c;
                }
            } else if nj < T::zero() {
                nj = T::zero();
                ni = sum;
            }
            if sum > c {
                if nj > c {
                    nj = c;
                    ni = sum - c;
                }
            } else if ni < T::zero() {
                ni = T::zero();
                nj = sum;
            }
            alpha[i] = ni;
            alpha[j] = nj;
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * kk(t, i) * di + y[j] * kk(t, j) * dj);
        }
    }

    let bias = bias_from_gradient(&alpha, &y, &grad, c);
    let mut model = SvmModel {
        kernel: *spec,
        c,
        support_vectors: Vec::new(),
        labels: Vec::new(),
        alphas: Vec::new(),
        bias,
        iterations,
    };
    for t in 0..n {
        if alpha[t] > T::zero() {
            model.support_vectors.push(rows[t].clone());
            model.labels.push(labels[t]);
            model.alphas.push(alpha[t]);
        }
    }
    Ok(model)
}

/// Bias from the dual gradient: the mean of −y_t G_t over free multipliers,
/// else the midpoint of the interval allowed by the bound multipliers.
pub fn bias_from_gradient<T: Scalar>(alpha: &[T], y: &[T], grad: &[T], c: T) -> T {
    let (mut ub, mut lb) = (T::infinity(), T::neg_infinity());
    let (mut sum_free, mut n_free) = (T::zero(), 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= T::zero() {
            if y[t] > T::zero() {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let r = if n_free > 0 {
        sum_free / T::from_count(n_free)
    } else {
        (ub + lb) / T::lit(2.0)
    };
    -r
}

/// Fold index per row: rows of each class are shuffled and dealt round-robin
/// so every fold holds each class to within one row of its share.
pub fn stratified_folds(labels: &[i8], k: usize, seed: u64) -> Vec<usize> {
    let mut folds = vec![0; labels.len()];
    let mut next = 0usize;
    for class in [1i8, -1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let mut rng = rng_from(derive(seed, class as u64));
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        for i in idx {
            folds[i] = next % k;
            next += 1;
        }
    }
    folds
}

/// Stratified k-fold accuracy (fraction) of an SVM with fixed
/// hyperparameters. A training fold with one class predicts that class.
pub fn cv_accuracy<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    spec: &KernelSpec<T>,
    c: T,
    k: usize,
    seed: u64,
) -> Result<f64> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    if rows.len() < 2 {
        return Err(Error::TooShort {
            what: "cross-validation rows",
            required: 2,
            got: rows.len(),
        });
    }
    let k = k.clamp(2, rows.len());
    let folds = stratified_folds(labels, k, seed);
    let mut correct = 0usize;
    for f in 0..k {
        let (mut tr_x, mut tr_y) = (Vec::new(), Vec::new());
        for i in 0..rows.len() {
            if folds[i] != f {
                tr_x.push(rows[i].clone());
                tr_y.push(labels[i]);
            }
        }
        let test: Vec<usize> = (0..rows.len()).filter(|&i| folds[i] == f).collect();
        if tr_y.iter().all(|&y| y == tr_y[0]) {
            correct += test.iter().filter(|&&i| labels[i] == tr_y[0]).count();
            continue;
        }
        let model = train_svm(&tr_x, &tr_y, c, spec)?;
        for i in test {
            if model.predict(&rows[i])?.0 == labels[i] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / rows.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub c_range: (f64, f64),
    pub gamma_range: (f64, f64),
    pub families: Vec<KernelFamily>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            c_range: (0.01, 100.0),
            gamma_range: (0.01, 100.0),
            families: KernelFamily::ALL.to_vec(),
            budget: 100,
            seed: 0,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi >= lo && hi.is_finite();
        if !ok(self.c_range) || !ok(self.gamma_range) {
            return Err(Error::InvalidConfig(
                "search ranges must be positive and ordered".into(),
            ));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("search budget must be >= 1".into()));
        }
        if self.families.is_empty() {
            return Err(Error::InvalidConfig("no kernel families to search".into()));
        }
        Ok(())
    }

    /// Trial `index`'s draw; depends only on (seed, index).
    pub fn draw(&self, index: usize) -> (KernelFamily, f64, f64) {
        let mut rng = rng_from(derive(self.seed, index as u64));
        let family = self.families[rng.random_range(0..self.families.len())];
        let log_uniform = |rng: &mut rand_chacha::ChaCha8Rng, (lo, hi): (f64, f64)| {
            let (a, b) = (lo.ln(), hi.ln());
            (a + (b - a) * rng.random::<f64>()).exp().clamp(lo, hi)
        };
        let c = log_uniform(&mut rng, self.c_range);
        let gamma = log_uniform(&mut rng, self.gamma_range);
        (family, c, gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrial {
    pub index: usize,
    pub family: KernelFamily,
    pub c: f64,
    pub gamma: f64,
    /// `None` when training did not converge for this candidate.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best_index: usize,
    pub family: KernelFamily,
    pub c: f64,
    pub gamma: f64,
    pub score: f64,
    pub history: Vec<SearchTrial>,
}

impl SearchOutcome {
    pub fn kernel<T: Scalar>(&self) -> KernelSpec<T> {
        KernelSpec::with_family(self.family, T::lit(self.gamma))
    }
}

/// Evaluates every trial of `space` with `evaluator` (higher is better);
/// ties go to the earliest trial. A trial whose training does not converge
/// is kept in the history without a score; any other evaluator error aborts
/// the search.
pub fn hyperparameter_search<T, F>(
    rows: &[Vec<T>],
    labels: &[i8],
    space: &SearchSpace,
    evaluator: F,
) -> Result<SearchOutcome>
where
    T: Scalar,
    F: Fn(&[Vec<T>], &[i8], &KernelSpec<T>, T) -> Result<f64> + Sync,
{
    space.validate()?;
    let history = (0..space.budget)
        .into_par_iter()
        .map(|index| {
            let (family, c, gamma) = space.draw(index);
            let spec = KernelSpec::with_family(family, T::lit(gamma));
            let score = match evaluator(rows, labels, &spec, T::lit(c)) {
                Ok(v) => Some(v),
                Err(Error::NotConverged(_)) => None,
                Err(e) => {
                    return Err(Error::SearchTrial {
                        trial: index,
                        source: Box::new(e),
                    })
                }
            };
            Ok(SearchTrial {
                index,
                family,
                c,
                gamma,
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(&SearchTrial, f64)> = None;
    for t in &history {
        if let Some(v) = t.score {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((t, v));
            }
        }
    }
    let Some((best, score)) = best else {
        return Err(Error::SearchTrial {
            trial: 0,
            source: Box::new(Error::NotConverged(0)),
        });
    };
    Ok(SearchOutcome {
        best_index: best.index,
        family: best.family,
        c: best.c,
        gamma: best.gamma,
        score,
        history,
    })
}

/// Search scored by stratified 5-fold inner-CV accuracy.
pub fn search_with_inner_cv<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[i8],
    space: &SearchSpace,
) -> Result<SearchOutcome> {
    let cv_seed = derive(space.seed, u64::MAX);
    hyperparameter_search(rows, labels, space, |x, y, spec, c| {
        cv_accuracy(x, y, spec, c, 5, cv_seed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_values() {
        let lin = KernelSpec::<f64>::linear();
        assert_eq!(kernel_eval(&lin, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let rbf = KernelSpec::rbf(3.7);
        assert_eq!(kernel_eval(&rbf, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let sig = KernelSpec::sigmoid(5.0);
        assert_eq!(kernel_eval(&sig, &[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(kernel_eval(&lin, &[1.0], &[1.0, 2.0]).is_err());
        assert!(KernelSpec::rbf(0.0f64).validate().is_err());
    }

    #[test]
    fn two_points_linear() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1, 1];
        let m = train_svm(&x, &y, 10.0, &KernelSpec::linear()).unwrap();
        // hard-margin optimum: w = 1, b = 0, α = 0.5 each
        assert!(m.decision_value(&[-1.0]).unwrap() < 0.0);
        assert!(m.decision_value(&[1.0]).unwrap() > 0.0);
        let w: f64 = m
            .support_vectors
            .iter()
            .zip(&m.labels)
            .zip(&m.alphas)
            .map(|((sv, &l), &a)| a * l as f64 * sv[0])
            .sum();
        assert!((w - 1.0).abs() < 1e-3);
        assert!(m.bias.abs() < 1e-3);
    }

    #[test]
    fn xor_rbf() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = vec![-1, -1, 1, 1];
        let m = train_svm(&x, &y, 10.0, &KernelSpec::rbf(1.0)).unwrap();
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(m.predict(r).unwrap().0, l);
        }
    }

    #[test]
    fn duplicated_rows_same_function() {
        let x = vec![
            vec![0.0, 0.5],
            vec![1.0, 2.0],
            vec![-1.0, 0.3],
            vec![2.0, -1.0],
            vec![0.2, 0.1],
        ];
        let y = vec![-1, 1, -1, 1, -1];
        let spec = KernelSpec::rbf(0.5);
        let m1 = train_svm_with(
            &x,
            &y,
            1.0,
            &spec,
            SmoConfig {
                tolerance: 1e-9,
                ..Default::default()
            },
        )
        .unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<i8> = y.iter().chain(&y).copied().collect();
        // duplicating rows doubles the loss term; halving C keeps the problem equivalent
        let m2 = train_svm_with(
            &x2,
            &y2,
            0.5,
            &spec,
            SmoConfig {
                tolerance: 1e-9,
                ..Default::default()
            },
        )
        .unwrap();
        for a in -4..=4 {
            for b in -4..=4 {
                let p = [a as f64 * 0.5, b as f64 * 0.5];
                let d = m1.decision_value(&p).unwrap() - m2.decision_value(&p).unwrap();
                assert!(d.abs() < 1e-3);
            }
        }
    }

    #[test]
    fn errors_and_tie_rule() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            train_svm(&x, &[1, 1], 1.0, &KernelSpec::linear()),
            Err(Error::SingleClass)
        ));
        assert!(train_svm(
            &[vec![f64::NAN], vec![1.0]],
            &[1, -1],
            1.0,
            &KernelSpec::linear()
        )
        .is_err());
        let m = SvmModel {
            kernel: KernelSpec::linear(),
            c: 1.0,
            support_vectors: vec![vec![1.0]],
            labels: vec![1],
            alphas: vec![1.0],
            bias: 0.0,
            iterations: 0,
        };
        assert_eq!(m.predict(&[0.0]).unwrap(), (1, 0.0));
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let x = vec![vec![0.1, 0.7], vec![1.3, -0.2], vec![-0.4, 0.9]];
        let m = train_svm(&x, &[1, -1, 1], 2.0, &KernelSpec::rbf(0.3)).unwrap();
        let back: SvmModel<f64> = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn stratified_fold_balance() {
        let labels: Vec<i8> = (0..23).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let f = stratified_folds(&labels, 5, 9);
        assert_eq!(f, stratified_folds(&labels, 5, 9));
        for fold in 0..5 {
            let pos = (0..23).filter(|&i| f[i] == fold && labels[i] == 1).count() as f64;
            let neg = (0..23).filter(|&i| f[i] == fold && labels[i] == -1).count() as f64;
            assert!((pos - 8.0 / 5.0).abs() <= 1.0);
            assert!((neg - 15.0 / 5.0).abs() <= 1.0);
        }
    }

    #[test]
    fn search_is_seeded_and_in_range() {
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i < 10 { -2.0 } else { 2.0 } + (i % 3) as f64 * 0.1])
            .collect();
        let y: Vec<i8> = (0..20).map(|i| if i < 10 { -1 } else { 1 }).collect();
        let space = SearchSpace {
            budget: 30,
            seed: 5,
            ..Default::default()
        };
        let a = search_with_inner_cv(&x, &y, &space).unwrap();
        let b = search_with_inner_cv(&x, &y, &space).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history.len(), 30);
        for t in &a.history {
            assert!((0.01..=100.0).contains(&t.c) && (0.01..=100.0).contains(&t.gamma));
        }
        assert_eq!(a.score, 1.0);
    }

    #[test]
    fn search_error_carries_trial() {
        let x = vec![vec![0.0], vec![1.0]];
        let space = SearchSpace {
            budget: 3,
            ..Default::default()
        };
        let r = hyperparameter_search(&x, &[1, -1], &space, |_, _, _, _: f64| {
            Err(Error::SingleClass)
        });
        assert!(matches!(r, Err(Error::SearchTrial { trial: 0, .. })));
    }

    #[test]
    fn unconverged_trials_are_skipped() {
        let x = vec![vec![0.0], vec![1.0]];
        let space = SearchSpace {
            budget: 4,
            ..Default::default()
        };
        let r = hyperparameter_search(&x, &[1, -1], &space, |_, _, _, c: f64| {
            if c > 1.0 {
                Err(Error::NotConverged(7))
            } else {
                Ok(c)
            }
        })
        .unwrap();
        assert!(r.history.iter().all(|t| t.score.is_none() == (t.c > 1.0)));
        assert_eq!(Some(r.score), r.history[r.best_index].score);
        assert!(r.c <= 1.0);
        let none = hyperparameter_search(&x, &[1, -1], &space, |_, _, _, _: f64| {
            Err(Error::NotConverged(7))
        });
        assert!(none.is_err());
    }

    proptest! {
        #[test]
        fn kernel_symmetry(u in prop::collection::vec(-5.0f64..5.0, 3), v in prop::collection::vec(-5.0f64..5.0, 3), g in 0.01f64..10.0) {
            for spec in [KernelSpec::linear(), KernelSpec::rbf(g), KernelSpec::sigmoid(g)] {
                prop_assert_eq!(spec.eval(&u, &v), spec.eval(&v, &u));
            }
        }

        #[test]
        fn dual_feasibility(
            pts in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 2), any::<bool>()), 4..30),
            c in 0.05f64..20.0,
        ) {
            let x: Vec<Vec<f64>> = pts.iter().map(|p| p.0.clone()).collect();
            let mut y: Vec<i8> = pts.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
            y[0] = 1;
            y[1] = -1;
            let m = train_svm(&x, &y, c, &KernelSpec::rbf(0.7)).unwrap();
            let mut s = 0.0;
            for (&a, &l) in m.alphas.iter().zip(&m.labels) {
                prop_assert!(a >= 0.0 && a <= c);
                s += a * l as f64;
            }
            prop_assert!(s.abs() <= 1e-6);
        }
    }
}
