//! Kernel classifiers and the repeated train/test evaluation protocol.
//!
//! The SVM is trained with sequential minimal optimisation using second-order
//! working-set selection. Classes `{0, 1}` map to labels `{−1, +1}`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::hmm::{GenerativeModel, Symbol};
use crate::kernels::{DivergenceTable, Family, GramMatrix, KernelSpec};
use crate::qhmm::Qhmm;
use crate::tasks::{generate_dataset_with, Task};
use crate::{Error, Result};

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;
const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every iteration.
    pub record_objective: bool,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions { c: 1.0, tol: KKT_TOL, max_iter: 10_000_000, record_objective: false }
    }
}

/// Trained binary SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    /// `α_i y_i` for every training example.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub c_param: f64,
    pub iterations: usize,
    /// Final maximal KKT violation.
    pub kkt_violation: f64,
    pub converged: bool,
    /// Dual objective `eᵀα − ½ αᵀQα` per iteration, when recorded.
    pub objective_trace: Vec<f64>,
}

fn signed_labels(classes: &[usize]) -> Result<Vec<f64>> {
    let mut seen = [false; 2];
    let mut y = Vec::with_capacity(classes.len());
    for &c in classes {
        match c {
            0 | 1 => seen[c] = true,
            other => return Err(Error::InvalidArgument(format!("class {other} is not binary"))),
        }
        y.push(if c == 1 { 1.0 } else { -1.0 });
    }
    if !(seen[0] && seen[1]) {
        return Err(Error::SingleClass);
    }
    Ok(y)
}

/// Trains on a (repaired) Gram matrix with box constraint `c_param`.
pub fn svm_train(gram: &GramMatrix, classes: &[usize], c_param: f64) -> Result<SvmModel> {
    svm_train_with(&gram.values, gram.n, classes, &SmoOptions { c: c_param, ..SmoOptions::default() })
}

/// SMO on a row-major `n × n` kernel matrix.
pub fn svm_train_with(kernel: &[f64], n: usize, classes: &[usize], opts: &SmoOptions) -> Result<SvmModel> {
    if kernel.len() != n * n || classes.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} kernel entries and {} classes for {n} examples",
            kernel.len(),
            classes.len()
        )));
    }
    if kernel.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel matrix"));
    }
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", opts.c)));
    }
    let y = signed_labels(classes)?;
    let c = opts.c;
    let k = |i: usize, j: usize| kernel[i * n + j];
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut objective_trace = Vec::new();
    let mut iterations = 0;
    let mut violation;
    let mut converged = false;

    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    loop {
        // First index: maximal violation among I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !is_upper(alpha[t]) } else { !is_lower(alpha[t]) };
            if in_up && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        // Second index: largest objective decrease among I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                let in_low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t]) };
                if !in_low {
                    continue;
                }
                let yg = y[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let b = gmax + yg;
                if b > 0.0 {
                    let a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                    let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                    if obj < best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        violation = if gmax2.is_finite() && gmax.is_finite() { gmax + gmax2 } else { 0.0 };
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if violation >= opts.tol => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k(i, i) + k(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
        if opts.record_objective {
            objective_trace.push(dual_objective(&alpha, &grad));
        }
    }

    // Bias from free support vectors, else the midpoint of the feasible interval.
    let (mut ub, mut lb, mut free_sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };

    let dual_coefficients: Vec<f64> = alpha.iter().zip(&y).map(|(a, yy)| a * yy).collect();
    let support_indices = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        alphas: alpha,
        dual_coefficients,
        bias: -rho,
        support_indices,
        c_param: c,
        iterations,
        kkt_violation: violation.max(0.0),
        converged,
        objective_trace,
    })
}

/// `eᵀα − ½ αᵀQα`, from the gradient `Qα − e`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

impl SvmModel {
    /// Dual objective of the final iterate given the training kernel.
    pub fn dual_objective(&self, kernel: &[f64]) -> f64 {
        let n = self.alphas.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.dual_coefficients[i] * self.dual_coefficients[j] * kernel[i * n + j];
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }
}

/// `Σ α_i y_i K(x, x_i) + b`.
pub fn decision_value(model: &SvmModel, kernel_row: &[f64]) -> Result<f64> {
    if kernel_row.len() != model.dual_coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "kernel row of length {} for {} training examples",
            kernel_row.len(),
            model.dual_coefficients.len()
        )));
    }
    Ok(model.support_indices.iter().map(|&i| model.dual_coefficients[i] * kernel_row[i]).sum::<f64>() + model.bias)
}

/// Class 1 when the decision value is positive.
pub fn svm_predict(model: &SvmModel, kernel_row: &[f64]) -> Result<usize> {
    Ok(usize::from(decision_value(model, kernel_row)? > 0.0))
}

/// Majority vote over the `k` nearest training points. Equal distances are
/// ordered by training index; tied votes go to the smallest class.
pub fn knn_classify(distances_to_train: &[f64], train_classes: &[usize], k: usize) -> Result<usize> {
    let n = train_classes.len();
    if n == 0 {
        return Err(Error::InvalidArgument("k-NN needs a non-empty training set".into()));
    }
    if distances_to_train.len() != n {
        return Err(Error::DimensionMismatch(format!("{} distances for {n} training points", distances_to_train.len())));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| distances_to_train[a].total_cmp(&distances_to_train[b]).then(a.cmp(&b)));
    let top = train_classes.iter().copied().max().unwrap_or(0);
    let mut votes = vec![0usize; top + 1];
    for &i in &order[..k] {
        votes[train_classes[i]] += 1;
    }
    let best = *votes.iter().max().unwrap();
    Ok(votes.iter().position(|&v| v == best).unwrap())
}

/// Feature-space distance induced by a kernel.
pub fn kernel_distance(kxx: f64, kyy: f64, kxy: f64) -> f64 {
    (kxx + kyy - 2.0 * kxy).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classifier {
    Svc,
    Knn,
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classifier::Svc => "SVC",
            Classifier::Knn => "k-NN",
        })
    }
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svc" | "svm" => Ok(Classifier::Svc),
            "knn" | "k-nn" => Ok(Classifier::Knn),
            other => Err(Error::InvalidArgument(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Repeated sample/split/train/score protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub n: usize,
    pub split: f64,
    pub reps: usize,
    pub seed: u64,
    pub length: usize,
    pub c: f64,
    pub k: usize,
    pub bootstrap: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol { n: 500, split: 0.5, reps: 100, seed: 0, length: 8, c: 1.0, k: 5, bootstrap: 1000 }
    }
}

impl Protocol {
    pub fn n_train(&self) -> usize {
        ((self.n as f64) * self.split).round() as usize
    }

    fn check(&self) -> Result<()> {
        let nt = self.n_train();
        if self.reps == 0 {
            return Err(Error::InvalidArgument("at least one repetition is required".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) || nt < 2 || nt >= self.n {
            return Err(Error::InvalidArgument(format!(
                "split {} of {} examples leaves no usable train/test partition",
                self.split, self.n
            )));
        }
        if self.k == 0 || self.k > nt {
            return Err(Error::InvalidArgument(format!("k = {} must lie in 1..={nt}", self.k)));
        }
        Ok(())
    }
}

/// Accuracies of one classifier/kernel pair across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classifier: Classifier,
    pub kernel: KernelSpec,
    pub in_sample_accuracy: f64,
    pub in_ci: (f64, f64),
    pub out_sample_accuracy: f64,
    pub out_ci: (f64, f64),
    pub repetitions: usize,
    pub seed: u64,
    /// Datasets redrawn because their training half had a single class.
    pub resamples: usize,
    pub per_rep_in: Vec<f64>,
    pub per_rep_out: Vec<f64>,
}

/// Percentile bootstrap (2.5%, 97.5%) of the mean of `values`.
pub fn bootstrap_ci(values: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let b = resamples.max(1);
    let mut means: Vec<f64> = (0..b)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = ((0.025 * b as f64).floor() as usize).min(b - 1);
    let hi = ((0.975 * b as f64).ceil() as usize).saturating_sub(1).min(b - 1);
    let mean = values.iter().sum::<f64>() / n as f64;
    (means[lo].min(mean), means[hi].max(mean))
}

struct Split {
    train: Vec<Vec<Symbol>>,
    train_y: Vec<usize>,
    test: Vec<Vec<Symbol>>,
    test_y: Vec<usize>,
}

fn draw_split(
    model: &dyn GenerativeModel,
    task: &Task,
    protocol: &Protocol,
    rep: usize,
) -> Result<(Split, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    rng.set_stream(rep as u64);
    let nt = protocol.n_train();
    for attempt in 0..MAX_RESAMPLES {
        let ds = generate_dataset_with(model, protocol.n, protocol.length, task, &mut rng)?;
        let train_y = ds.classes[..nt].to_vec();
        if train_y.iter().all(|&c| c == train_y[0]) {
            continue;
        }
        let mut seqs = ds.sequences;
        let test = seqs.split_off(nt);
        return Ok((Split { train: seqs, train_y, test, test_y: ds.classes[nt..].to_vec() }, attempt));
    }
    Err(Error::SingleClass)
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len().max(1) as f64
}

fn score(
    table: &DivergenceTable,
    split: &Split,
    classifier: Classifier,
    protocol: &Protocol,
) -> Result<(f64, f64)> {
    let sigma = match table.spec().family {
        Family::Rbf => Some(match table.spec().rbf_sigma {
            Some(s) => s,
            None => table.median_sigma(&split.train)?,
        }),
        _ => None,
    };
    let train_rows = table.cross(&split.train, &split.train, sigma)?;
    let test_rows = table.cross(&split.test, &split.train, sigma)?;
    match classifier {
        Classifier::Svc => {
            let n = split.train.len();
            let labels = vec![String::new(); n];
            let gram = GramMatrix::from_values(labels, train_rows.iter().flatten().copied().collect(), n)?;
            let model = svm_train(&gram, &split.train_y, protocol.c)?;
            let pin = train_rows.iter().map(|r| svm_predict(&model, r)).collect::<Result<Vec<_>>>()?;
            let pout = test_rows.iter().map(|r| svm_predict(&model, r)).collect::<Result<Vec<_>>>()?;
            Ok((accuracy(&pin, &split.train_y), accuracy(&pout, &split.test_y)))
        }
        Classifier::Knn => {
            let self_k: Vec<f64> = (0..split.train.len()).map(|i| train_rows[i][i]).collect();
            let self_test = table.cross(&split.test, &split.test, sigma)?;
            let classify = |rows: &[Vec<f64>], own: &dyn Fn(usize) -> f64| -> Result<Vec<usize>> {
                rows.iter()
                    .enumerate()
                    .map(|(r, row)| {
                        let d: Vec<f64> =
                            row.iter().zip(&self_k).map(|(&kxy, &kyy)| kernel_distance(own(r), kyy, kxy)).collect();
                        knn_classify(&d, &split.train_y, protocol.k)
                    })
                    .collect()
            };
            let pin = classify(&train_rows, &|r| self_k[r])?;
            let pout = classify(&test_rows, &|r| self_test[r][r])?;
            Ok((accuracy(&pin, &split.train_y), accuracy(&pout, &split.test_y)))
        }
    }
}

/// Runs the protocol for every classifier × kernel pair.
///
/// Repetition `r` draws from the ChaCha8 stream `r` of the master seed, so the
/// result does not depend on how repetitions are scheduled across threads.
/// `qhmm` supplies the feature states of quantum kernels.
pub fn evaluate(
    model: &dyn GenerativeModel,
    qhmm: Option<&Qhmm>,
    task: &Task,
    kernels: &[KernelSpec],
    classifiers: &[Classifier],
    protocol: &Protocol,
) -> Result<Vec<EvalReport>> {
    protocol.check()?;
    let drawn: Vec<(Split, usize)> =
        (0..protocol.reps).into_par_iter().map(|r| draw_split(model, task, protocol, r)).collect::<Result<_>>()?;
    let resamples = drawn.iter().map(|(_, a)| a).sum();
    let mut all: Vec<Vec<Symbol>> = Vec::new();
    for (s, _) in &drawn {
        all.extend(s.train.iter().cloned());
        all.extend(s.test.iter().cloned());
    }

    let mut reports = Vec::new();
    for spec in kernels {
        let table = DivergenceTable::build(qhmm, spec, &all)?;
        for &classifier in classifiers {
            let scores: Vec<(f64, f64)> = drawn
                .par_iter()
                .map(|(split, _)| score(&table, split, classifier, protocol))
                .collect::<Result<_>>()?;
            let per_rep_in: Vec<f64> = scores.iter().map(|s| s.0).collect();
            let per_rep_out: Vec<f64> = scores.iter().map(|s| s.1).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            reports.push(EvalReport {
                classifier,
                kernel: *spec,
                in_sample_accuracy: mean(&per_rep_in),
                in_ci: bootstrap_ci(&per_rep_in, protocol.bootstrap, protocol.seed),
                out_sample_accuracy: mean(&per_rep_out),
                out_ci: bootstrap_ci(&per_rep_out, protocol.bootstrap, protocol.seed.wrapping_add(1)),
                repetitions: protocol.reps,
                seed: protocol.seed,
                resamples,
                per_rep_in,
                per_rep_out,
            });
        }
    }
    Ok(reports)
}

/// Fraction of repetitions in which `a` scores strictly higher out of sample than `b`.
pub fn paired_win_rate(a: &EvalReport, b: &EvalReport) -> f64 {
    let wins = a.per_rep_out.iter().zip(&b.per_rep_out).filter(|(x, y)| x > y).count();
    wins as f64 / a.per_rep_out.len().max(1) as f64
}
