//! Predictive and structural quantum kernels, the RBF baseline and Gram matrices.
//!
//! A predictive kernel compares the states reached after each sequence; a
//! structural kernel compares the averages of the states visited along the
//! way. Both use `exp(−D)` for the trace and Bures divergences, while the
//! fidelity variant uses `F` directly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::hmm::Symbol;
use crate::linalg::ComplexMatrix;
use crate::metrics::{bures, fidelity, trace_distance};
use crate::qhmm::{DensityOperator, Qhmm};
use crate::{Error, Result};

/// Gram matrices whose smallest eigenvalue falls below this are repaired.
pub const PSD_REPAIR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Predictive,
    Structural,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Trace,
    Bures,
    Fidelity,
}

/// Kernel configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: Family,
    /// Ignored for the RBF family.
    pub metric: Metric,
    /// RBF bandwidth; `None` selects the median heuristic.
    pub rbf_sigma: Option<f64>,
    /// Projected-kernel scale.
    pub gamma: f64,
}

impl KernelSpec {
    pub fn new(family: Family, metric: Metric) -> Result<Self> {
        if family == Family::Structural && metric == Metric::Fidelity {
            return Err(Error::InvalidArgument("the structural family supports trace and bures only".into()));
        }
        Ok(KernelSpec { family, metric, rbf_sigma: None, gamma: 1.0 })
    }

    pub fn predictive(metric: Metric) -> Self {
        KernelSpec { family: Family::Predictive, metric, rbf_sigma: None, gamma: 1.0 }
    }

    pub fn structural(metric: Metric) -> Self {
        assert!(metric != Metric::Fidelity, "structural kernels use trace or bures");
        KernelSpec { family: Family::Structural, metric, rbf_sigma: None, gamma: 1.0 }
    }

    pub fn rbf(sigma: Option<f64>) -> Self {
        KernelSpec { family: Family::Rbf, metric: Metric::Trace, rbf_sigma: sigma, gamma: 1.0 }
    }

    pub fn is_quantum(&self) -> bool {
        self.family != Family::Rbf
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Predictive => "predictive",
            Family::Structural => "structural",
            Family::Rbf => "rbf",
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Trace => "trace",
            Metric::Bures => "bures",
            Metric::Fidelity => "fidelity",
        })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Rbf => f.write_str("rbf"),
            family => write!(f, "{family}:{}", self.metric),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `family:metric`, e.g. `predictive:trace`; `rbf` needs no metric.
    fn from_str(s: &str) -> Result<Self> {
        let (family, metric) = match s.split_once(':') {
            Some((f, m)) => (f, Some(m)),
            None => (s, None),
        };
        let family = match family {
            "predictive" => Family::Predictive,
            "structural" => Family::Structural,
            "rbf" => Family::Rbf,
            other => return Err(Error::InvalidArgument(format!("unknown kernel family {other:?}"))),
        };
        let metric = match (family, metric) {
            (Family::Rbf, _) => Metric::Trace,
            (_, None) => return Err(Error::InvalidArgument(format!("kernel {s:?} needs a metric"))),
            (_, Some("trace")) => Metric::Trace,
            (_, Some("bures")) => Metric::Bures,
            (_, Some("fidelity")) => Metric::Fidelity,
            (_, Some(other)) => return Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        };
        KernelSpec::new(family, metric)
    }
}

/// State reached after emitting `y`.
pub fn phi_predictive(q: &Qhmm, y: &[Symbol]) -> Result<DensityOperator> {
    q.final_state(y)
}

/// Mean of the generating states of `y`.
pub fn phi_structural(q: &Qhmm, y: &[Symbol]) -> Result<DensityOperator> {
    if y.is_empty() {
        return Err(Error::InvalidArgument("structural feature map needs a non-empty sequence".into()));
    }
    let states = q.generating_states(y)?;
    let n = q.dim();
    let sum = states.iter().fold(ComplexMatrix::zeros(n, n), |acc, s| &acc + s.matrix());
    Ok(DensityOperator::from_matrix_unchecked(sum.scale(1.0 / states.len() as f64)))
}

pub fn feature_state(q: &Qhmm, family: Family, y: &[Symbol]) -> Result<DensityOperator> {
    match family {
        Family::Predictive => phi_predictive(q, y),
        Family::Structural => phi_structural(q, y),
        Family::Rbf => Err(Error::InvalidArgument("the rbf kernel has no quantum feature state".into())),
    }
}

/// Divergence underlying a quantum kernel: `D`, `B` or `1 − F`.
pub fn state_divergence(metric: Metric, r1: &DensityOperator, r2: &DensityOperator) -> Result<f64> {
    match metric {
        Metric::Trace => trace_distance(r1, r2),
        Metric::Bures => bures(r1, r2),
        Metric::Fidelity => Ok(1.0 - fidelity(r1, r2)?),
    }
}

/// Kernel value from a divergence.
pub fn kernel_from_divergence(metric: Metric, d: f64) -> f64 {
    match metric {
        Metric::Trace | Metric::Bures => (-d).exp(),
        Metric::Fidelity => 1.0 - d,
    }
}

fn squared_euclidean(y1: &[Symbol], y2: &[Symbol]) -> Result<f64> {
    if y1.len() != y2.len() {
        return Err(Error::DimensionMismatch(format!(
            "rbf kernel on sequences of length {} and {}",
            y1.len(),
            y2.len()
        )));
    }
    Ok(y1.iter().zip(y2).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum())
}

/// `exp(−‖y1 − y2‖² / (2σ²))` with symbols read as numbers.
pub fn rbf_kernel(y1: &[Symbol], y2: &[Symbol], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("rbf sigma must be positive, got {sigma}")));
    }
    Ok((-squared_euclidean(y1, y2)? / (2.0 * sigma * sigma)).exp())
}

/// Median of the non-zero pairwise Euclidean distances; 1 if there are none.
pub fn median_sigma(sequences: &[Vec<Symbol>]) -> Result<f64> {
    let mut d = Vec::new();
    for i in 0..sequences.len() {
        for j in (i + 1)..sequences.len() {
            let s = squared_euclidean(&sequences[i], &sequences[j])?;
            if s > 0.0 {
                d.push(s.sqrt());
            }
        }
    }
    Ok(median_or_one(d))
}

fn median_or_one(mut d: Vec<f64>) -> f64 {
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    }
}

/// Single kernel evaluation. The pair is ordered before evaluation so the
/// result is exactly symmetric.
pub fn kernel_value(q: &Qhmm, spec: &KernelSpec, y1: &[Symbol], y2: &[Symbol]) -> Result<f64> {
    let (a, b) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
    match spec.family {
        Family::Rbf => {
            let sigma = spec
                .rbf_sigma
                .ok_or_else(|| Error::InvalidArgument("rbf kernel_value needs an explicit sigma".into()))?;
            rbf_kernel(a, b, sigma)
        }
        family => {
            let (s1, s2) = (feature_state(q, family, a)?, feature_state(q, family, b)?);
            Ok(kernel_from_divergence(spec.metric, state_divergence(spec.metric, &s1, &s2)?))
        }
    }
}

/// Pairwise divergences over the distinct sequences of a workload.
///
/// Entries are `D`, `B` or `1 − F` for quantum specs and the squared Euclidean
/// distance for the RBF family, so a single table serves every bandwidth.
#[derive(Debug, Clone)]
pub struct DivergenceTable {
    spec: KernelSpec,
    index: HashMap<Vec<Symbol>, usize>,
    distinct: Vec<Vec<Symbol>>,
    values: Vec<f64>,
}

impl DivergenceTable {
    /// Feature states are computed once per distinct sequence, then the upper
    /// triangle is filled in parallel and mirrored.
    pub fn build(q: Option<&Qhmm>, spec: &KernelSpec, sequences: &[Vec<Symbol>]) -> Result<Self> {
        let mut index = HashMap::new();
        let mut distinct = Vec::new();
        for y in sequences {
            if !index.contains_key(y) {
                index.insert(y.clone(), distinct.len());
                distinct.push(y.clone());
            }
        }
        let d = distinct.len();
        let rows: Vec<Vec<f64>> = match spec.family {
            Family::Rbf => (0..d)
                .into_par_iter()
                .map(|i| (i..d).map(|j| squared_euclidean(&distinct[i], &distinct[j])).collect())
                .collect::<Result<_>>()?,
            family => {
                let q = q.ok_or_else(|| Error::InvalidArgument(format!("kernel {spec} needs a model")))?;
                let states: Vec<DensityOperator> = distinct
                    .par_iter()
                    .enumerate()
                    .map(|(i, y)| {
                        feature_state(q, family, y).map_err(|e| match e {
                            Error::ImpossibleSequence { probability, .. } => {
                                let first = sequences.iter().position(|s| s == &distinct[i]).unwrap_or(i);
                                Error::ImpossibleSequence {
                                    sequence: format!("#{first} {}", q.alphabet().format(y)),
                                    probability,
                                }
                            }
                            other => other,
                        })
                    })
                    .collect::<Result<_>>()?;
                let metric = spec.metric;
                (0..d)
                    .into_par_iter()
                    .map(|i| {
                        (i..d)
                            .map(|j| {
                                if i == j && metric != Metric::Fidelity {
                                    Ok(0.0)
                                } else {
                                    state_divergence(metric, &states[i], &states[j])
                                }
                            })
                            .collect()
                    })
                    .collect::<Result<_>>()?
            }
        };
        let mut values = vec![0.0; d * d];
        for (i, row) in rows.into_iter().enumerate() {
            for (offset, v) in row.into_iter().enumerate() {
                let j = i + offset;
                values[i * d + j] = v;
                values[j * d + i] = v;
            }
        }
        Ok(DivergenceTable { spec: *spec, index, distinct, values })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn distinct(&self) -> &[Vec<Symbol>] {
        &self.distinct
    }

    fn slot(&self, y: &[Symbol]) -> Result<usize> {
        self.index
            .get(y)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("sequence {y:?} is not in the kernel table")))
    }

    pub fn divergence(&self, y1: &[Symbol], y2: &[Symbol]) -> Result<f64> {
        let (i, j) = (self.slot(y1)?, self.slot(y2)?);
        Ok(self.values[i * self.distinct.len() + j])
    }

    /// Kernel value; `sigma` is required for the RBF family.
    pub fn kernel(&self, y1: &[Symbol], y2: &[Symbol], sigma: Option<f64>) -> Result<f64> {
        let d = self.divergence(y1, y2)?;
        self.to_kernel(d, sigma)
    }

    fn to_kernel(&self, d: f64, sigma: Option<f64>) -> Result<f64> {
        match self.spec.family {
            Family::Rbf => {
                let s = sigma
                    .or(self.spec.rbf_sigma)
                    .ok_or_else(|| Error::InvalidArgument("rbf kernel needs a bandwidth".into()))?;
                Ok((-d / (2.0 * s * s)).exp())
            }
            _ => Ok(kernel_from_divergence(self.spec.metric, d)),
        }
    }

    /// Median heuristic bandwidth over `sequences`, from the cached squared distances.
    pub fn median_sigma(&self, sequences: &[Vec<Symbol>]) -> Result<f64> {
        let mut d = Vec::new();
        for i in 0..sequences.len() {
            for j in (i + 1)..sequences.len() {
                let s = self.divergence(&sequences[i], &sequences[j])?;
                if s > 0.0 {
                    d.push(s.sqrt());
                }
            }
        }
        Ok(median_or_one(d))
    }

    /// Kernel rows for `rows × cols`.
    pub fn cross(&self, rows: &[Vec<Symbol>], cols: &[Vec<Symbol>], sigma: Option<f64>) -> Result<Vec<Vec<f64>>> {
        let cs: Vec<usize> = cols.iter().map(|c| self.slot(c)).collect::<Result<_>>()?;
        let n = self.distinct.len();
        rows.iter()
            .map(|r| {
                let i = self.slot(r)?;
                cs.iter().map(|&j| self.to_kernel(self.values[i * n + j], sigma)).collect()
            })
            .collect()
    }

    /// Gram matrix over `sequences` with PSD repair.
    pub fn gram(&self, sequences: &[Vec<Symbol>], sigma: Option<f64>, labels: Vec<String>) -> Result<GramMatrix> {
        let n = sequences.len();
        let rows = self.cross(sequences, sequences, sigma)?;
        GramMatrix::from_values(labels, rows.into_iter().flatten().collect(), n)
    }
}

/// Symmetric kernel matrix with its raw spectrum bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub labels: Vec<String>,
    /// Row-major `n × n` values (after repair, if any).
    pub values: Vec<f64>,
    pub n: usize,
    pub min_eigenvalue_raw: f64,
    pub repaired: bool,
}

impl GramMatrix {
    /// Records the raw minimum eigenvalue and, when it is below
    /// `−PSD_REPAIR_TOL`, clips the spectrum at zero and rebuilds the matrix.
    pub fn from_values(labels: Vec<String>, values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() != n * n || labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} values and {} labels for an {n}x{n} Gram matrix",
                values.len(),
                labels.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gram matrix"));
        }
        if n == 0 {
            return Ok(GramMatrix { labels, values, n, min_eigenvalue_raw: 0.0, repaired: false });
        }
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (values[i * n + j] + values[j * n + i]));
        let eig = SymmetricEigen::new(m);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min >= -PSD_REPAIR_TOL {
            return Ok(GramMatrix { labels, values, n, min_eigenvalue_raw: min, repaired: false });
        }
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let v = &eig.eigenvectors;
        let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
        let mut repaired = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                repaired[i * n + j] = 0.5 * (rebuilt[(i, j)] + rebuilt[(j, i)]);
            }
        }
        Ok(GramMatrix { labels, values: repaired, n, min_eigenvalue_raw: min, repaired: true })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Smallest eigenvalue of the stored values.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = DMatrix::from_row_slice(self.n, self.n, &self.values);
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Gram matrix of `spec` over `sequences`. The RBF bandwidth defaults to the
/// median heuristic over the same sequences.
pub fn gram(q: Option<&Qhmm>, spec: &KernelSpec, sequences: &[Vec<Symbol>], labels: Vec<String>) -> Result<GramMatrix> {
    let table = DivergenceTable::build(q, spec, sequences)?;
    let sigma = match spec.family {
        Family::Rbf => Some(match spec.rbf_sigma {
            Some(s) => s,
            None => table.median_sigma(sequences)?,
        }),
        _ => None,
    };
    table.gram(sequences, sigma, labels)
}

/// Upper-triangle pairwise distances (`−ln κ`, or `1 − F` for fidelity).
pub fn pairwise_distances(q: &Qhmm, spec: &KernelSpec, sequences: &[Vec<Symbol>]) -> Result<Vec<f64>> {
    if !spec.is_quantum() {
        return Err(Error::InvalidArgument("pairwise distances are defined for quantum kernels".into()));
    }
    let table = DivergenceTable::build(Some(q), spec, sequences)?;
    let mut out = Vec::with_capacity(sequences.len() * sequences.len().saturating_sub(1) / 2);
    for i in 0..sequences.len() {
        for j in (i + 1)..sequences.len() {
            out.push(table.divergence(&sequences[i], &sequences[j])?);
        }
    }
    Ok(out)
}

/// Bins `values` by `edges` (`edges.len() − 1` bins, lower edge inclusive).
/// Values outside the edges land in the first or last bin.
pub fn bin_counts(values: &[f64], edges: &[f64]) -> Result<Vec<usize>> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("bin edges must be strictly increasing with at least two entries".into()));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0; bins];
    for &v in values {
        let k = edges[1..].iter().position(|&e| v < e).unwrap_or(bins - 1);
        counts[k] += 1;
    }
    Ok(counts)
}

/// Histogram of pairwise kernel distances.
pub fn distance_histogram(q: &Qhmm, spec: &KernelSpec, sequences: &[Vec<Symbol>], edges: &[f64]) -> Result<Vec<usize>> {
    bin_counts(&pairwise_distances(q, spec, sequences)?, edges)
}

/// `n + 1` evenly spaced edges over `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{Alphabet, ClassicalHmm};
    use crate::qhmm::{embed_hmm, random_qhmm, SymbolChannel};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn market() -> Qhmm {
        embed_hmm(&ClassicalHmm::market4())
    }

    fn labels(seqs: &[Vec<Symbol>]) -> Vec<String> {
        seqs.iter().map(|y| Alphabet::binary().format(y)).collect()
    }

    #[test]
    fn spec_parsing() {
        let s: KernelSpec = "predictive:bures".parse().unwrap();
        assert_eq!((s.family, s.metric), (Family::Predictive, Metric::Bures));
        assert_eq!(s.to_string(), "predictive:bures");
        assert_eq!("rbf".parse::<KernelSpec>().unwrap().family, Family::Rbf);
        assert!("structural:fidelity".parse::<KernelSpec>().is_err());
        assert!("predictive".parse::<KernelSpec>().is_err());
        assert!("quantum:trace".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn phi_predictive_examples() {
        let q = market();
        assert_eq!(phi_predictive(&q, &[]).unwrap(), *q.initial());
        let m = ClassicalHmm::market4();
        let y = [0, 1, 1, 0];
        let mut belief = m.initial().to_vec();
        for &a in &y {
            belief = m.belief_update(&belief, a).unwrap().0;
        }
        for (d, b) in phi_predictive(&q, &y).unwrap().diagonal().iter().zip(&belief) {
            assert!((d - b).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_predictive_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = random_qhmm(4, 2, Alphabet::binary(), None, &mut rng).unwrap().to_channel();
        for _ in 0..1000 {
            let y = q.sample(6, &mut rng);
            assert!(phi_predictive(&q, &y).unwrap().check().is_ok());
        }
    }

    #[test]
    fn phi_structural_examples() {
        let q = market();
        assert!(phi_structural(&q, &[]).is_err());
        assert_eq!(phi_structural(&q, &[1]).unwrap(), phi_predictive(&q, &[1]).unwrap());
        let y = [0, 0, 1, 1, 0];
        let s = phi_structural(&q, &y).unwrap();
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-12);
        let states = q.generating_states(&y).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let direct: f64 = states.iter().map(|r| r.matrix()[(i, j)].re).sum::<f64>() / 5.0;
                assert!((s.matrix()[(i, j)].re - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_value_examples() {
        let q = market();
        for spec in ["predictive:trace", "predictive:bures", "predictive:fidelity", "structural:trace"] {
            let spec: KernelSpec = spec.parse().unwrap();
            let v = kernel_value(&q, &spec, &[0, 1, 1], &[0, 1, 1]).unwrap();
            assert!((v - 1.0).abs() < 1e-9, "{spec}");
        }
        // Two states that deterministically map basis state 0 → 0 and 1 → 1.
        let mut k0 = ComplexMatrix::zeros(2, 2);
        k0[(0, 0)] = crate::C64::new(1.0, 0.0);
        let mut k1 = ComplexMatrix::zeros(2, 2);
        k1[(1, 1)] = crate::C64::new(1.0, 0.0);
        let q = Qhmm::new(
            Alphabet::binary(),
            vec![SymbolChannel { symbol: 0, kraus: vec![k0] }, SymbolChannel { symbol: 1, kraus: vec![k1] }],
            DensityOperator::maximally_mixed(2),
        )
        .unwrap();
        let v = kernel_value(&q, &KernelSpec::predictive(Metric::Trace), &[0], &[1]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_kernel(&[0, 1], &[0, 1], 1.0).unwrap(), 1.0);
        assert!((rbf_kernel(&[0; 4], &[1; 4], 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!(rbf_kernel(&[0], &[0, 1], 1.0).is_err());
        assert_eq!(rbf_kernel(&[0, 1, 1], &[1, 1, 0], 0.7).unwrap(), rbf_kernel(&[1, 1, 0], &[0, 1, 1], 0.7).unwrap());
    }

    #[test]
    fn median_heuristic() {
        let seqs = vec![vec![0, 0], vec![0, 1], vec![1, 1]];
        // distances: 1, √2, 1
        assert_eq!(median_sigma(&seqs).unwrap(), 1.0);
        assert_eq!(median_sigma(&[vec![0], vec![0]]).unwrap(), 1.0);
    }

    #[test]
    fn gram_examples() {
        let q = market();
        let one = vec![vec![0, 1, 0, 1]];
        let g = gram(Some(&q), &KernelSpec::predictive(Metric::Trace), &one, labels(&one)).unwrap();
        assert_eq!(g.values, vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let seqs: Vec<Vec<Symbol>> = (0..100).map(|_| q.sample(8, &mut rng)).collect();
        for spec in [KernelSpec::predictive(Metric::Trace), KernelSpec::structural(Metric::Trace)] {
            let g = gram(Some(&q), &spec, &seqs, labels(&seqs)).unwrap();
            assert!(g.min_eigenvalue_raw >= -1e-8, "{spec}: {}", g.min_eigenvalue_raw);
            for i in 0..g.n {
                assert!((g.get(i, i) - 1.0).abs() < 1e-9);
                for j in 0..g.n {
                    assert_eq!(g.get(i, j), g.get(j, i));
                }
            }
        }
    }

    #[test]
    fn repair_clips_negative_spectrum() {
        let values = vec![1.0, 2.0, 2.0, 1.0];
        let g = GramMatrix::from_values(vec!["a".into(), "b".into()], values, 2).unwrap();
        assert!(g.repaired);
        assert!((g.min_eigenvalue_raw + 1.0).abs() < 1e-12);
        assert!(g.min_eigenvalue() >= -1e-8);
        assert!(GramMatrix::from_values(vec!["a".into()], vec![f64::NAN], 1).is_err());
    }

    #[test]
    fn gram_reports_impossible_index() {
        let m = ClassicalHmm::new(Alphabet::binary(), vec![vec![1.0]], vec![vec![1.0], vec![0.0]], vec![1.0]).unwrap();
        let q = embed_hmm(&m);
        let seqs = vec![vec![0, 0], vec![0, 1]];
        match gram(Some(&q), &KernelSpec::predictive(Metric::Trace), &seqs, labels(&seqs)) {
            Err(Error::ImpossibleSequence { sequence, .. }) => assert!(sequence.starts_with("#1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn histogram_examples() {
        let q = market();
        let same = vec![vec![0, 1, 1]; 5];
        let edges = uniform_edges(0.0, 1.0, 10);
        let h = distance_histogram(&q, &KernelSpec::predictive(Metric::Trace), &same, &edges).unwrap();
        assert_eq!(h[0], 10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seqs: Vec<Vec<Symbol>> = (0..30).map(|_| q.sample(6, &mut rng)).collect();
        let h = distance_histogram(&q, &KernelSpec::structural(Metric::Bures), &seqs, &edges).unwrap();
        assert_eq!(h.iter().sum::<usize>(), 30 * 29 / 2);
        assert!(bin_counts(&[0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn divergence_table_matches_kernel_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = random_qhmm(2, 2, Alphabet::binary(), None, &mut rng).unwrap().to_channel();
        let seqs: Vec<Vec<Symbol>> = (0..12).map(|_| q.sample(5, &mut rng)).collect();
        for spec in ["predictive:trace", "predictive:fidelity", "structural:bures"] {
            let spec: KernelSpec = spec.parse().unwrap();
            let table = DivergenceTable::build(Some(&q), &spec, &seqs).unwrap();
            for a in &seqs {
                for b in &seqs {
                    let direct = kernel_value(&q, &spec, a, b).unwrap();
                    assert!((table.kernel(a, b, None).unwrap() - direct).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kernel_symmetry_and_range(seed in any::<u64>(), metric in prop_oneof![Just(Metric::Trace), Just(Metric::Bures)],
                                     structural in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_qhmm(2, 2, Alphabet::binary(), None, &mut rng).unwrap().to_channel();
            let (y1, y2) = (q.sample(5, &mut rng), q.sample(5, &mut rng));
            let spec = if structural { KernelSpec::structural(metric) } else { KernelSpec::predictive(metric) };
            let k12 = kernel_value(&q, &spec, &y1, &y2).unwrap();
            prop_assert_eq!(k12, kernel_value(&q, &spec, &y2, &y1).unwrap());
            prop_assert!(k12 > 0.0 && k12 <= 1.0);
            if metric == Metric::Trace {
                let (s1, s2) = (feature_state(&q, spec.family, &y1).unwrap(), feature_state(&q, spec.family, &y2).unwrap());
                prop_assert!((-k12.ln() - trace_distance(&s1, &s2).unwrap()).abs() < 1e-12);
            }
        }
    }
}
