//! Command-line front end for the `qhmm` binary.
//!
//! Settings come from an optional JSON config file, overridden by flags. Every
//! output starts with `#` comment lines naming the tool version, a hash of the
//! resolved settings and the master seed.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use qhmm_core::circuits::{
    pauli_expectations_of_state, projected_gram_exact, projected_gram_shots, reconstruct_density, swap_test,
    PureState, TrajectorySource,
};
use qhmm_core::io::{
    dataset_csv, distribution_csv, eval_csv, gram_csv, histogram_csv, load_model, HistogramRow, LoadedModel,
};
use qhmm_core::kernels::{bin_counts, gram, pairwise_distances, uniform_edges};
use qhmm_core::learn::{evaluate, Classifier, Protocol};
use qhmm_core::metrics::{check_proposition1, check_proposition2, frobenius_distance, trace_distance};
use qhmm_core::qhmm::{random_density, random_pure_vector, random_qhmm};
use qhmm_core::tasks::generate_dataset;
use qhmm_core::{
    Alphabet, DensityOperator, Family, GenerativeModel, KernelSpec, Metric, Qhmm, Symbol, Task, C64,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "qhmm", version, about = "Quantum hidden Markov models: kernels, classifiers and circuit protocols")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact distribution of all sequences of a given length.
    Distribution,
    /// Histograms of pairwise kernel distances.
    Histogram,
    /// Classifier/kernel accuracy table over repeated train/test splits.
    Classify,
    /// Numerical property suites; exits 2 if any suite fails.
    Verify,
    /// Circuit-level protocols.
    Circuits {
        #[arg(value_enum)]
        protocol: CircuitProtocol,
    },
    /// Kernel Gram matrix over sampled sequences.
    Gram,
    /// Labelled dataset sampled from a model.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitProtocol {
    Swap,
    Tomo,
    Projgram,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Distribution => "distribution",
            Command::Histogram => "histogram",
            Command::Classify => "classify",
            Command::Verify => "verify",
            Command::Circuits { protocol: CircuitProtocol::Swap } => "circuits swap",
            Command::Circuits { protocol: CircuitProtocol::Tomo } => "circuits tomo",
            Command::Circuits { protocol: CircuitProtocol::Projgram } => "circuits projgram",
            Command::Gram => "gram",
            Command::Sample => "sample",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config file; flags take precedence over its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in name (market4, random:N:M[:SEED]) or JSON model path. Repeatable for histogram.
    #[arg(long, global = true)]
    pub model: Vec<String>,
    /// FAMILY:METRIC (predictive|structural with trace|bures|fidelity) or rbf. Repeatable.
    #[arg(long, global = true)]
    pub kernel: Vec<String>,
    /// structural, predictive or predictive-first.
    #[arg(long, global = true)]
    pub task: Option<String>,
    /// Number of sampled sequences.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Sequence length.
    #[arg(long, global = true)]
    pub length: Option<usize>,
    /// Training fraction.
    #[arg(long, global = true)]
    pub split: Option<f64>,
    /// Repetitions (classify) or estimates (circuits swap).
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per estimate or per tomography basis.
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    /// Projected-kernel bandwidth.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// SVM box constraint.
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Neighbours for k-NN.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Histogram bins.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// svc or knn. Repeatable.
    #[arg(long, global = true)]
    pub classifier: Vec<String>,
    /// cptp, prop1, prop2, metric or psd. Repeatable.
    #[arg(long, global = true)]
    pub suite: Vec<String>,
    /// State dimension for circuits swap.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Tomography target: zero, one, plus, minus, plus-i, minus-i, mixed or random.
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// Compare a random state with itself in circuits swap.
    #[arg(long, global = true)]
    pub identical: bool,
    /// Infinite-shot mode for circuits projgram.
    #[arg(long, global = true)]
    pub exact: bool,
    /// Append a dimension-trend summary to histogram output.
    #[arg(long, global = true)]
    pub trend: bool,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

/// Contents of a `--config` file. Keys mirror the flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(deserialize_with = "one_or_many")]
    pub model: Vec<String>,
    #[serde(deserialize_with = "one_or_many")]
    pub kernel: Vec<String>,
    pub task: Option<String>,
    pub n: Option<usize>,
    pub length: Option<usize>,
    pub split: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub gamma: Option<f64>,
    pub out: Option<PathBuf>,
    pub c: Option<f64>,
    pub k: Option<usize>,
    pub bins: Option<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub classifier: Vec<String>,
    #[serde(deserialize_with = "one_or_many")]
    pub suite: Vec<String>,
    pub dim: Option<usize>,
    pub state: Option<String>,
    pub identical: bool,
    pub exact: bool,
    pub trend: bool,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub command: String,
    pub models: Vec<String>,
    pub kernels: Vec<String>,
    pub task: String,
    pub classifiers: Vec<String>,
    pub suites: Vec<String>,
    pub n: usize,
    pub length: usize,
    pub split: f64,
    pub reps: usize,
    pub seed: u64,
    pub shots: usize,
    pub gamma: f64,
    pub c: f64,
    pub k: usize,
    pub bins: usize,
    pub dim: usize,
    pub state: String,
    pub identical: bool,
    pub exact: bool,
    pub trend: bool,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn pick_list(flag: Vec<String>, file: Vec<String>, default: &[&str]) -> Vec<String> {
    if !flag.is_empty() {
        flag
    } else if !file.is_empty() {
        file
    } else {
        default.iter().map(|s| s.to_string()).collect()
    }
}

impl Settings {
    pub fn resolve(command: Command, flags: Flags, file: ConfigFile) -> Self {
        let task = pick(flags.task, file.task, "predictive".into());
        let quantum_default = if task == "structural" { "structural:trace" } else { "predictive:trace" };
        let (n, length, shots) = match command {
            Command::Histogram => (100, 8, 1000),
            Command::Gram => (50, 8, 1000),
            Command::Circuits { protocol: CircuitProtocol::Tomo } => (500, 8, 10_000),
            Command::Circuits { protocol: CircuitProtocol::Projgram } => (500, 4, 1000),
            _ => (500, 8, 1000),
        };
        let kernels: &[&str] = match command {
            Command::Classify => &[quantum_default, "rbf"],
            _ => &[quantum_default],
        };
        Settings {
            command: command.name().into(),
            models: pick_list(flags.model, file.model, &["market4"]),
            kernels: pick_list(flags.kernel, file.kernel, kernels),
            task,
            classifiers: pick_list(flags.classifier, file.classifier, &["svc", "knn"]),
            suites: pick_list(flags.suite, file.suite, &["cptp", "prop1", "prop2", "metric", "psd"]),
            n: pick(flags.n, file.n, n),
            length: pick(flags.length, file.length, length),
            split: pick(flags.split, file.split, 0.5),
            reps: pick(flags.reps, file.reps, 100),
            seed: pick(flags.seed, file.seed, 0),
            shots: pick(flags.shots, file.shots, shots),
            gamma: pick(flags.gamma, file.gamma, 1.0),
            c: pick(flags.c, file.c, 1.0),
            k: pick(flags.k, file.k, 5),
            bins: pick(flags.bins, file.bins, 20),
            dim: pick(flags.dim, file.dim, 4),
            state: pick(flags.state, file.state, "plus".into()),
            identical: flags.identical || file.identical,
            exact: flags.exact || file.exact,
            trend: flags.trend || file.trend,
            out: flags.out.or(file.out),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("settings serialise")
    }

    /// First 16 hex digits of the SHA-256 of the resolved settings.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn header(&self) -> String {
        format!(
            "# qhmm {VERSION}\n# command: {}\n# config-hash: {}\n# seed: {}\n# config: {}\n",
            self.command,
            self.hash(),
            self.seed,
            self.to_json()
        )
    }

    fn task(&self) -> Result<Task, CliError> {
        Ok(self.task.parse::<Task>()?)
    }

    fn kernel_specs(&self) -> Result<Vec<KernelSpec>, CliError> {
        self.kernels.iter().map(|k| k.parse::<KernelSpec>().map_err(CliError::from)).collect()
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs; exit status 1.
    Usage(String),
    /// A numerical check failed; exit status 2.
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<qhmm_core::Error> for CliError {
    fn from(e: qhmm_core::Error) -> Self {
        use qhmm_core::Error as E;
        match e {
            E::NotHermitian(_) | E::NoConvergence(_) | E::NotPsd(_) | E::NonFinite(_) | E::InvalidState(_) => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Loads a model and rejects channels that fail the completeness check.
pub fn load_validated(reference: &str) -> Result<LoadedModel, CliError> {
    let model = load_model(reference)?;
    let report = model.channel().validate();
    if !report.passed {
        return Err(CliError::Validation(format!(
            "model {reference:?} is not trace preserving (completeness deviation {:.3e})",
            report.completeness_deviation
        )));
    }
    Ok(model)
}

fn first_model(s: &Settings) -> Result<(LoadedModel, Qhmm), CliError> {
    let reference = s.models.first().ok_or_else(|| CliError::Usage("no model given".into()))?;
    let model = load_validated(reference)?;
    let q = model.channel();
    Ok((model, q))
}

/// The sampler for a loaded model: the classical tables when available.
fn generator<'a>(model: &'a LoadedModel, q: &'a Qhmm) -> &'a dyn GenerativeModel {
    match model {
        LoadedModel::Classical(m) => m,
        _ => q,
    }
}

fn sample_sequences(model: &dyn GenerativeModel, n: usize, length: usize, seed: u64) -> Vec<Vec<Symbol>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| model.sample_sequence(length, &mut rng)).collect()
}

pub fn cmd_distribution(s: &Settings) -> Result<String, CliError> {
    let (model, q) = first_model(s)?;
    let dist = generator(&model, &q).distribution(s.length)?;
    Ok(distribution_csv(&dist, q.alphabet())?)
}

fn divergence_range(metric: Metric) -> f64 {
    match metric {
        Metric::Bures => 2.0,
        Metric::Trace | Metric::Fidelity => 1.0,
    }
}

pub fn cmd_histogram(s: &Settings) -> Result<String, CliError> {
    if s.bins == 0 {
        return Err(CliError::Usage("--bins must be positive".into()));
    }
    let specs = s.kernel_specs()?;
    if let Some(spec) = specs.iter().find(|k| !k.is_quantum()) {
        return Err(CliError::Usage(format!("histograms need a quantum kernel, got {spec}")));
    }
    let mut rows = Vec::new();
    // (kernel, dim, tail mass) for the trend summary.
    let mut tails: Vec<(String, usize, f64)> = Vec::new();
    for reference in &s.models {
        let model = load_validated(reference)?;
        let q = model.channel();
        let seqs = sample_sequences(generator(&model, &q), s.n, s.length, s.seed);
        for spec in &specs {
            let hi = divergence_range(spec.metric);
            let edges = uniform_edges(0.0, hi, s.bins);
            let d = pairwise_distances(&q, spec, &seqs)?;
            let counts = bin_counts(&d, &edges)?;
            let config = format!("model={reference};dim={};kernel={spec}", q.dim());
            for (b, count) in counts.into_iter().enumerate() {
                rows.push(HistogramRow { configuration: config.clone(), bin_low: edges[b], bin_high: edges[b + 1], count });
            }
            let tail = d.iter().filter(|&&x| x > hi / 2.0).count() as f64 / d.len().max(1) as f64;
            tails.push((spec.to_string(), q.dim(), tail));
        }
    }
    let mut out = histogram_csv(&rows)?;
    if s.trend {
        for spec in &specs {
            let name = spec.to_string();
            let mut by_dim: Vec<(usize, f64)> =
                tails.iter().filter(|t| t.0 == name).map(|t| (t.1, t.2)).collect();
            by_dim.sort_by_key(|t| t.0);
            let monotone = by_dim.windows(2).all(|w| w[1].1 >= w[0].1);
            let listing: Vec<String> = by_dim.iter().map(|(d, t)| format!("N={d}:{t:.4}")).collect();
            out.push_str(&format!(
                "# trend {name}: tail mass above half range {} non-decreasing={monotone}\n",
                listing.join(" ")
            ));
        }
    }
    Ok(out)
}

pub fn cmd_classify(s: &Settings) -> Result<String, CliError> {
    let (model, q) = first_model(s)?;
    let task = s.task()?;
    let specs = s.kernel_specs()?;
    let classifiers = s
        .classifiers
        .iter()
        .map(|c| c.parse::<Classifier>().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let protocol = Protocol {
        n: s.n,
        split: s.split,
        reps: s.reps,
        seed: s.seed,
        length: s.length,
        c: s.c,
        k: s.k,
        ..Protocol::default()
    };
    let reports = evaluate(generator(&model, &q), Some(&q), &task, &specs, &classifiers, &protocol)?;
    let mut out = eval_csv(&reports, true)?;
    if let Some(r) = reports.first() {
        out.push_str(&format!("# single-class resamples: {}\n", r.resamples));
    }
    Ok(out)
}

struct SuiteResult {
    name: &'static str,
    instances: usize,
    violations: usize,
    worst: f64,
    threshold: f64,
}

fn suite_cptp(model: &Qhmm) -> SuiteResult {
    let r = model.validate();
    SuiteResult {
        name: "cptp",
        instances: 1,
        violations: usize::from(!r.passed),
        worst: r.completeness_deviation,
        threshold: qhmm_core::qhmm::STATE_TOL,
    }
}

fn suite_prop1(rng: &mut ChaCha8Rng) -> Result<SuiteResult, CliError> {
    let (mut violations, mut worst) = (0, f64::INFINITY);
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(2..=3);
        let q = random_qhmm(n, m, Alphabet::binary(), None, rng)?.to_channel();
        let (r1, r2) = (random_density(n, rng), random_density(n, rng));
        let c = check_proposition1(&q, &r1, &r2, rng.random_range(0..=4))?;
        violations += usize::from(!c.holds);
        worst = worst.min(c.slack());
    }
    Ok(SuiteResult { name: "prop1", instances: 200, violations, worst, threshold: -qhmm_core::metrics::BOUND_SLACK })
}

fn suite_prop2(model: &LoadedModel, q: &Qhmm, s: &Settings, rng: &mut ChaCha8Rng) -> Result<SuiteResult, CliError> {
    if q.alphabet().len() != 2 {
        return Err(CliError::Usage("the prop2 suite needs a binary model".into()));
    }
    let task = Task::predictive();
    let gen = generator(model, q);
    let (mut violations, mut worst) = (0, f64::INFINITY);
    for _ in 0..100 {
        let y1 = gen.sample_sequence(s.length, rng);
        let y2 = gen.sample_sequence(s.length, rng);
        let c = check_proposition2(q, &task, &y1, &y2, 3)?;
        violations += usize::from(!c.holds);
        worst = worst.min(c.slack());
    }
    Ok(SuiteResult { name: "prop2", instances: 100, violations, worst, threshold: -qhmm_core::metrics::BOUND_SLACK })
}

fn suite_metric(rng: &mut ChaCha8Rng) -> Result<SuiteResult, CliError> {
    let (mut violations, mut worst) = (0, f64::INFINITY);
    for _ in 0..1000 {
        let n = rng.random_range(2..=6);
        let (a, b, c) = (random_density(n, rng), random_density(n, rng), random_density(n, rng));
        let ab = trace_distance(&a, &b)?;
        let slack = ab + trace_distance(&b, &c)? - trace_distance(&a, &c)?;
        violations += usize::from(slack < -1e-9 || ab != trace_distance(&b, &a)?);
        worst = worst.min(slack);
    }
    Ok(SuiteResult { name: "metric", instances: 1000, violations, worst, threshold: -1e-9 })
}

fn suite_psd(model: &LoadedModel, q: &Qhmm, s: &Settings) -> Result<SuiteResult, CliError> {
    let seqs = sample_sequences(generator(model, q), s.n.min(100), s.length, s.seed);
    let labels = vec![String::new(); seqs.len()];
    let (mut violations, mut worst) = (0, f64::INFINITY);
    for spec in [KernelSpec::predictive(Metric::Trace), KernelSpec::structural(Metric::Trace)] {
        let g = gram(Some(q), &spec, &seqs, labels.clone())?;
        violations += usize::from(g.min_eigenvalue_raw < -qhmm_core::kernels::PSD_REPAIR_TOL);
        worst = worst.min(g.min_eigenvalue_raw);
    }
    Ok(SuiteResult { name: "psd", instances: 2, violations, worst, threshold: -qhmm_core::kernels::PSD_REPAIR_TOL })
}

/// Runs the requested suites. The report is returned even when a suite fails;
/// the flag says whether every suite passed.
pub fn cmd_verify(s: &Settings) -> Result<(String, bool), CliError> {
    let (model, q) = first_model(s).or_else(|e| match e {
        // A failing completeness check is report content here.
        CliError::Validation(_) => {
            let m = load_model(&s.models[0])?;
            let q = m.channel();
            Ok((m, q))
        }
        other => Err(other),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut results = Vec::new();
    for suite in &s.suites {
        results.push(match suite.as_str() {
            "cptp" => suite_cptp(&q),
            "prop1" => suite_prop1(&mut rng)?,
            "prop2" => suite_prop2(&model, &q, s, &mut rng)?,
            "metric" => suite_metric(&mut rng)?,
            "psd" => suite_psd(&model, &q, s)?,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown suite {other:?} (expected cptp, prop1, prop2, metric or psd)"
                )))
            }
        });
    }
    let mut out = String::from("suite,instances,violations,worst,threshold,status\n");
    let mut all = true;
    for r in &results {
        let pass = r.violations == 0;
        all &= pass;
        out.push_str(&format!(
            "{},{},{},{:e},{:e},{}\n",
            r.name,
            r.instances,
            r.violations,
            r.worst,
            r.threshold,
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    Ok((out, all))
}

fn tomography_target(name: &str, rng: &mut ChaCha8Rng) -> Result<DensityOperator, CliError> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |a: C64, b: C64| DensityOperator::pure(&[a, b]);
    let (one, zero, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    Ok(match name {
        "zero" => ket(one, zero)?,
        "one" => ket(zero, one)?,
        "plus" => ket(one * h, one * h)?,
        "minus" => ket(one * h, -one * h)?,
        "plus-i" => ket(one * h, i * h)?,
        "minus-i" => ket(one * h, -i * h)?,
        "mixed" => DensityOperator::maximally_mixed(2),
        "random" => random_density(2, rng),
        other => return Err(CliError::Usage(format!("unknown tomography state {other:?}"))),
    })
}

pub fn cmd_circuits(protocol: CircuitProtocol, s: &Settings) -> Result<String, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    match protocol {
        CircuitProtocol::Swap => {
            if s.dim == 0 {
                return Err(CliError::Usage("--dim must be positive".into()));
            }
            let psi = PureState::new(random_pure_vector(s.dim, &mut rng))?;
            let phi = if s.identical { psi.clone() } else { PureState::new(random_pure_vector(s.dim, &mut rng))? };
            let mut out = String::from("trial,estimate\n");
            let mut total = 0.0;
            for t in 0..s.reps {
                let e = swap_test(&psi, &phi, s.shots, &mut rng)?;
                total += e;
                out.push_str(&format!("{t},{e}\n"));
            }
            out.push_str(&format!(
                "# exact overlap: {:.6}; mean estimate: {:.6}\n",
                psi.overlap_squared(&phi),
                total / s.reps.max(1) as f64
            ));
            Ok(out)
        }
        CircuitProtocol::Tomo => {
            let rho = tomography_target(&s.state, &mut rng)?;
            let r = pauli_expectations_of_state(&rho, s.shots, &mut rng)?;
            let err = frobenius_distance(&reconstruct_density(r), &rho)?;
            Ok(format!("quantity,value\nrx,{}\nry,{}\nrz,{}\nfrobenius_error,{err}\n", r.rx, r.ry, r.rz))
        }
        CircuitProtocol::Projgram => {
            let (model, q) = first_model(s)?;
            let seqs = q.alphabet().sequences(s.length)?;
            let result = if s.exact {
                projected_gram_exact(&q, &seqs, s.gamma)?
            } else {
                let source = match &model {
                    LoadedModel::Unitary(u) => TrajectorySource::Circuit(u),
                    _ => TrajectorySource::Kraus(&q),
                };
                projected_gram_shots(source, &q, &seqs, s.shots, s.gamma, &mut rng)?
            };
            let mut out = gram_csv(&result.gram)?;
            for (i, p) in &result.skipped {
                out.push_str(&format!("# skipped {} (probability {p:.3e})\n", q.alphabet().format(&seqs[*i])));
            }
            Ok(out)
        }
    }
}

pub fn cmd_gram(s: &Settings) -> Result<String, CliError> {
    let (model, q) = first_model(s)?;
    let spec = *s.kernel_specs()?.first().ok_or_else(|| CliError::Usage("no kernel given".into()))?;
    let seqs = sample_sequences(generator(&model, &q), s.n, s.length, s.seed);
    let labels = seqs.iter().map(|y| q.alphabet().format(y)).collect();
    let g = gram((spec.family != Family::Rbf).then_some(&q), &spec, &seqs, labels)?;
    let mut out = gram_csv(&g)?;
    out.push_str(&format!("# raw minimum eigenvalue: {:e}; repaired: {}\n", g.min_eigenvalue_raw, g.repaired));
    Ok(out)
}

pub fn cmd_sample(s: &Settings) -> Result<String, CliError> {
    let (model, q) = first_model(s)?;
    let ds = generate_dataset(generator(&model, &q), s.n, s.length, &s.task()?, s.seed)?;
    Ok(dataset_csv(&ds, q.alphabet())?)
}

fn emit(s: &Settings, body: &str) -> Result<(), CliError> {
    let text = format!("{}{body}", s.header());
    match &s.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    let s = Settings::resolve(cli.command, cli.flags, file);
    let body = match cli.command {
        Command::Distribution => cmd_distribution(&s)?,
        Command::Histogram => cmd_histogram(&s)?,
        Command::Classify => cmd_classify(&s)?,
        Command::Verify => {
            let (body, passed) = cmd_verify(&s)?;
            emit(&s, &body)?;
            return if passed { Ok(()) } else { Err(CliError::Validation("one or more suites failed".into())) };
        }
        Command::Circuits { protocol } => cmd_circuits(protocol, &s)?,
        Command::Gram => cmd_gram(&s)?,
        Command::Sample => cmd_sample(&s)?,
    };
    emit(&s, &body)
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qhmm: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults_fill_in() {
        let flags = Flags { length: Some(3), ..Flags::default() };
        let file = ConfigFile { length: Some(6), seed: Some(4), model: vec!["random:2:2".into()], ..ConfigFile::default() };
        let s = Settings::resolve(Command::Classify, flags, file);
        assert_eq!((s.length, s.seed, s.n), (3, 4, 500));
        assert_eq!(s.models, ["random:2:2"]);
        assert_eq!(s.kernels, ["predictive:trace", "rbf"]);
    }

    #[test]
    fn structural_task_selects_structural_kernel() {
        let flags = Flags { task: Some("structural".into()), ..Flags::default() };
        let s = Settings::resolve(Command::Gram, flags, ConfigFile::default());
        assert_eq!(s.kernels, ["structural:trace"]);
        assert_eq!(s.n, 50);
    }

    #[test]
    fn hash_ignores_output_path_only() {
        let a = Settings::resolve(Command::Sample, Flags::default(), ConfigFile::default());
        let mut b = a.clone();
        b.out = Some("elsewhere.csv".into());
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn config_accepts_single_or_list() {
        let c: ConfigFile = serde_json::from_str(r#"{"kernel": "rbf", "model": ["a", "b"]}"#).unwrap();
        assert_eq!(c.kernel, ["rbf"]);
        assert_eq!(c.model, ["a", "b"]);
    }

    #[test]
    fn numerical_errors_map_to_exit_two() {
        assert_eq!(CliError::from(qhmm_core::Error::NotPsd(-1.0)).exit_code(), 2);
        assert_eq!(CliError::from(qhmm_core::Error::InvalidArgument("x".into())).exit_code(), 1);
    }
}
