//! Gate-level simulation of unitary QHMM circuits and the measurement
//! protocols built on them: SWAP test, single-qubit tomography and the
//! projected kernel.
//!
//! Trajectories are simulated on state vectors. Each step couples the state
//! register to a fresh emission register in `|e₀⟩`, applies `U`, rotates the
//! emission register by `V†`, samples an outcome by the Born rule, collapses
//! and resets.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::hmm::{draw_index, SequenceDistribution, Symbol};
use crate::kernels::{phi_predictive, GramMatrix};
use crate::linalg::{ComplexMatrix, Subsystem, C64};
use crate::metrics::frobenius_distance;
use crate::qhmm::{DensityOperator, Qhmm, UnitaryQhmm, STATE_TOL};
use crate::{Error, Result};

/// Sequences less likely than this are not post-selected.
pub const POST_SELECTION_FLOOR: f64 = 1e-6;

/// Normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm(&amplitudes);
        if amplitudes.is_empty() || (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Ok(PureState { amplitudes })
    }

    /// Computational basis state `|i⟩` of dimension `d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); d];
        amplitudes[i] = C64::new(1.0, 0.0);
        PureState { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(ComplexMatrix::outer(&self.amplitudes, &self.amplitudes))
    }

    pub fn overlap_squared(&self, other: &PureState) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome counts of a repeated measurement.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShotRecord {
    pub shots: usize,
    pub counts: BTreeMap<String, usize>,
}

impl ShotRecord {
    pub fn record(&mut self, outcome: String) {
        self.shots += 1;
        *self.counts.entry(outcome).or_insert(0) += 1;
    }

    pub fn frequency(&self, outcome: &str) -> f64 {
        self.counts.get(outcome).copied().unwrap_or(0) as f64 / self.shots.max(1) as f64
    }
}

/// Draws a pure state from the spectral decomposition of `rho`; a maximally
/// mixed state yields a uniformly random basis state.
pub fn sample_initial_state(rho: &DensityOperator, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<C64>> {
    let n = rho.dim();
    let mixed = DensityOperator::maximally_mixed(n);
    if (rho.matrix() - mixed.matrix()).max_abs() <= 1e-15 {
        return Ok(PureState::basis(n, rng.random_range(0..n)).amplitudes);
    }
    let eig = rho.matrix().hermitian_eig()?;
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    Ok(eig.eigenvectors.column(draw_index(&weights, rng)))
}

/// Source of pure-state trajectories conditioned on the emitted symbols.
#[derive(Debug, Clone, Copy)]
pub enum TrajectorySource<'a> {
    /// The dilation circuit: `U`, basis change `V†`, measure, reset.
    Circuit(&'a UnitaryQhmm),
    /// Quantum-jump unravelling of a channel: Kraus operator `K` is selected
    /// with probability `‖Kψ‖²`.
    Kraus(&'a Qhmm),
}

impl TrajectorySource<'_> {
    pub fn state_dim(&self) -> usize {
        match self {
            TrajectorySource::Circuit(u) => u.state_dim(),
            TrajectorySource::Kraus(q) => q.dim(),
        }
    }

    fn initial(&self) -> &DensityOperator {
        match self {
            TrajectorySource::Circuit(u) => u.initial(),
            TrajectorySource::Kraus(q) => q.initial(),
        }
    }

    /// Runs `steps` steps and returns the symbols and the final state vector.
    pub fn run(&self, steps: usize, rng: &mut (impl Rng + ?Sized)) -> Result<(Vec<Symbol>, Vec<C64>)> {
        let mut psi = sample_initial_state(self.initial(), rng)?;
        let mut symbols = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (a, next) = match self {
                TrajectorySource::Circuit(u) => circuit_step(u, &psi, rng),
                TrajectorySource::Kraus(q) => kraus_step(q, &psi, rng),
            };
            symbols.push(a);
            psi = next;
        }
        Ok((symbols, psi))
    }
}

fn circuit_step(u: &UnitaryQhmm, psi: &[C64], rng: &mut (impl Rng + ?Sized)) -> (Symbol, Vec<C64>) {
    let (n, m) = (u.state_dim(), u.emission_dim());
    let e0 = u.reset_index();
    let w = u.unitary();
    let v = u.basis();
    // U (ψ ⊗ |e₀⟩): only the columns with emission index e₀ contribute.
    let mut joint = vec![C64::new(0.0, 0.0); n * m];
    for (r, slot) in joint.iter_mut().enumerate() {
        *slot = (0..n).map(|s| w[(r, s * m + e0)] * psi[s]).sum();
    }
    // Rotate the emission register into the measurement basis.
    let mut rotated = vec![C64::new(0.0, 0.0); n * m];
    for s in 0..n {
        for k in 0..m {
            rotated[s * m + k] = (0..m).map(|f| v[(f, k)].conj() * joint[s * m + f]).sum();
        }
    }
    let probs: Vec<f64> = (0..m).map(|k| (0..n).map(|s| rotated[s * m + k].norm_sqr()).sum()).collect();
    let k = draw_index(&probs, rng);
    let scale = 1.0 / probs[k].sqrt();
    let next = (0..n).map(|s| rotated[s * m + k] * scale).collect();
    (u.partition()[k], next)
}

fn kraus_step(q: &Qhmm, psi: &[C64], rng: &mut (impl Rng + ?Sized)) -> (Symbol, Vec<C64>) {
    let mut branches = Vec::new();
    for ch in q.channels() {
        for k in &ch.kraus {
            let n = k.rows();
            let out: Vec<C64> = (0..n).map(|i| (0..n).map(|j| k[(i, j)] * psi[j]).sum()).collect();
            branches.push((ch.symbol, out));
        }
    }
    let probs: Vec<f64> = branches.iter().map(|(_, v)| v.iter().map(|z| z.norm_sqr()).sum()).collect();
    let pick = draw_index(&probs, rng);
    let (a, v) = branches.swap_remove(pick);
    let scale = 1.0 / probs[pick].sqrt();
    (a, v.into_iter().map(|z| z * scale).collect())
}

/// Samples `shots` trajectories of the dilation circuit.
pub fn run_trajectory_shots(u: &UnitaryQhmm, steps: usize, shots: usize, rng: &mut (impl Rng + ?Sized)) -> Result<ShotRecord> {
    let source = TrajectorySource::Circuit(u);
    let mut record = ShotRecord::default();
    for _ in 0..shots {
        let (y, _) = source.run(steps, rng)?;
        record.record(u.alphabet().format(&y));
    }
    Ok(record)
}

/// Exact output distribution via the equivalent Kraus channel.
pub fn run_trajectory_exact(u: &UnitaryQhmm, steps: usize) -> Result<SequenceDistribution> {
    u.to_channel().enumerate_distribution(steps)
}

/// Sup distance between empirical counts and an exact distribution.
pub fn shots_vs_exact(record: &ShotRecord, exact: &SequenceDistribution, alphabet: &crate::Alphabet) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (y, p) in exact.iter() {
        worst = worst.max((record.frequency(&alphabet.format(&y)) - p).abs());
    }
    for outcome in record.counts.keys() {
        let y = alphabet.parse(outcome)?;
        if exact.prob(&y) == 0.0 {
            worst = worst.max(record.frequency(outcome));
        }
    }
    Ok(worst)
}

/// Probability that the SWAP-test ancilla reads 1, from a gate-level simulation
/// of `H · CSWAP · H` on `|0⟩|ψ⟩|φ⟩`.
pub fn swap_test_ancilla_one(psi: &PureState, phi: &PureState) -> Result<f64> {
    let d = psi.dim();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch(format!("SWAP test on dimensions {d} and {}", phi.dim())));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let product: Vec<C64> = (0..d * d).map(|ab| psi.amplitudes[ab / d] * phi.amplitudes[ab % d]).collect();
    // After the first Hadamard both ancilla branches hold ψ⊗φ / √2.
    let branch0: Vec<C64> = product.iter().map(|z| z * s).collect();
    let mut branch1 = branch0.clone();
    // Controlled SWAP on the ancilla-1 branch.
    for a in 0..d {
        for b in (a + 1)..d {
            branch1.swap(a * d + b, b * d + a);
        }
    }
    // Second Hadamard; ancilla-1 amplitude is (branch0 − branch1)/√2.
    Ok(branch0.iter().zip(&branch1).map(|(x, y)| ((x - y) * s).norm_sqr()).sum::<f64>().clamp(0.0, 1.0))
}

/// Ancilla counts over `shots` runs of the SWAP test.
pub fn swap_test_counts(psi: &PureState, phi: &PureState, shots: usize, rng: &mut (impl Rng + ?Sized)) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("the SWAP test needs at least one shot".into()));
    }
    let p1 = swap_test_ancilla_one(psi, phi)?;
    let ones = if p1 == 0.0 {
        0
    } else {
        Binomial::new(shots as u64, p1).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng) as usize
    };
    let mut counts = BTreeMap::new();
    counts.insert("0".to_string(), shots - ones);
    counts.insert("1".to_string(), ones);
    Ok(ShotRecord { shots, counts })
}

/// `2 (r₀/R − ½)`, an unbiased estimate of `|⟨φ|ψ⟩|²`.
pub fn swap_test(psi: &PureState, phi: &PureState, shots: usize, rng: &mut (impl Rng + ?Sized)) -> Result<f64> {
    let rec = swap_test_counts(psi, phi, shots, rng)?;
    Ok(2.0 * (rec.counts["0"] as f64 / shots as f64 - 0.5))
}

/// Pauli measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Rotation applied before a computational-basis measurement:
    /// `H` for X, `H S†` for Y, identity for Z.
    pub fn rotation(self) -> [[C64; 2]; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            Basis::X => [[r(s), r(s)], [r(s), r(-s)]],
            Basis::Y => [[r(s), C64::new(0.0, -s)], [r(s), C64::new(0.0, s)]],
            Basis::Z => [[r(1.0), r(0.0)], [r(0.0), r(1.0)]],
        }
    }

    pub fn pauli(self) -> ComplexMatrix {
        let r = |x: f64| C64::new(x, 0.0);
        let data = match self {
            Basis::X => vec![r(0.0), r(1.0), r(1.0), r(0.0)],
            Basis::Y => vec![r(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), r(0.0)],
            Basis::Z => vec![r(1.0), r(0.0), r(0.0), r(-1.0)],
        };
        ComplexMatrix::from_vec(2, 2, data).expect("2x2 Pauli")
    }
}

/// Single-qubit Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    /// Scales onto the unit sphere when outside the Bloch ball.
    pub fn shrink(self) -> Self {
        let n = self.norm();
        if n > 1.0 {
            BlochVector { rx: self.rx / n, ry: self.ry / n, rz: self.rz / n }
        } else {
            self
        }
    }

    /// `tr(ρ σ_k)` for a single-qubit state.
    pub fn of_state(rho: &DensityOperator) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch(format!("Bloch vector of a dimension-{} state", rho.dim())));
        }
        let e = |b: Basis| (rho.matrix() * &b.pauli()).trace().re;
        Ok(BlochVector { rx: e(Basis::X), ry: e(Basis::Y), rz: e(Basis::Z) })
    }
}

/// `½ (I + Σ r_k σ_k)` after shrinkage into the Bloch ball.
pub fn reconstruct_density(r: BlochVector) -> DensityOperator {
    let r = r.shrink();
    let m = ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new(0.5 * (1.0 + r.rz), 0.0),
            C64::new(0.5 * r.rx, -0.5 * r.ry),
            C64::new(0.5 * r.rx, 0.5 * r.ry),
            C64::new(0.5 * (1.0 - r.rz), 0.0),
        ],
    )
    .expect("finite Bloch components");
    DensityOperator::from_matrix_unchecked(m)
}

/// Applies a single-qubit gate to `qubit` (0 = most significant) of an `n`-qubit vector.
fn apply_single_qubit(psi: &mut [C64], n_qubits: usize, qubit: usize, g: &[[C64; 2]; 2]) {
    let stride = 1 << (n_qubits - 1 - qubit);
    for base in 0..psi.len() {
        if base & stride != 0 {
            continue;
        }
        let (a, b) = (psi[base], psi[base | stride]);
        psi[base] = g[0][0] * a + g[0][1] * b;
        psi[base | stride] = g[1][0] * a + g[1][1] * b;
    }
}

fn qubit_count(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() && dim >= 2 {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::DimensionMismatch(format!("dimension {dim} is not a register of qubits")))
    }
}

/// Rotates every qubit into `basis` and samples one computational-basis outcome.
pub fn measure_all_qubits(psi: &[C64], basis: Basis, rng: &mut (impl Rng + ?Sized)) -> Result<Vec<usize>> {
    let n = qubit_count(psi.len())?;
    let mut v = psi.to_vec();
    let g = basis.rotation();
    for q in 0..n {
        apply_single_qubit(&mut v, n, q, &g);
    }
    let probs: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    let outcome = draw_index(&probs, rng);
    Ok((0..n).map(|q| (outcome >> (n - 1 - q)) & 1).collect())
}

/// Estimates a Bloch vector from `shots` preparations per basis.
/// `measure(basis, rng)` prepares the state afresh and returns the 0/1 outcome.
pub fn pauli_expectations<R: Rng + ?Sized>(
    measure: &mut dyn FnMut(Basis, &mut R) -> Result<usize>,
    shots: usize,
    rng: &mut R,
) -> Result<BlochVector> {
    if shots == 0 {
        return Err(Error::InvalidArgument("tomography needs at least one shot per basis".into()));
    }
    let mut r = [0.0; 3];
    for (slot, basis) in r.iter_mut().zip(Basis::ALL) {
        let mut n1 = 0usize;
        for _ in 0..shots {
            n1 += measure(basis, rng)?;
        }
        *slot = (shots as f64 - 2.0 * n1 as f64) / shots as f64;
    }
    Ok(BlochVector { rx: r[0], ry: r[1], rz: r[2] })
}

/// Tomography of a known single-qubit state, drawing outcomes by the Born rule
/// on the rotated state.
pub fn pauli_expectations_of_state<R: Rng + ?Sized>(rho: &DensityOperator, shots: usize, rng: &mut R) -> Result<BlochVector> {
    let exact = BlochVector::of_state(rho)?;
    let p1 = |b: Basis| match b {
        Basis::X => 0.5 * (1.0 - exact.rx),
        Basis::Y => 0.5 * (1.0 - exact.ry),
        Basis::Z => 0.5 * (1.0 - exact.rz),
    };
    pauli_expectations(&mut |b, r: &mut R| Ok(usize::from(r.random::<f64>() < p1(b))), shots, rng)
}

/// `exp(−γ ‖ρ₁ − ρ₂‖_F²)`.
pub fn projected_kernel(rho1: &DensityOperator, rho2: &DensityOperator, gamma: f64) -> Result<f64> {
    let d = frobenius_distance(rho1, rho2)?;
    Ok((-gamma * d * d).exp())
}

/// Single-qubit reduced states of a multi-qubit state, most significant qubit first.
pub fn one_qubit_rdms(rho: &DensityOperator) -> Result<Vec<DensityOperator>> {
    let n = qubit_count(rho.dim())?;
    (0..n)
        .map(|q| {
            let left = 1 << q;
            let right = 1 << (n - 1 - q);
            let upto = rho.matrix().partial_trace((2 * left, right), Subsystem::A)?;
            let one = upto.partial_trace((left, 2), Subsystem::B)?;
            Ok(DensityOperator::from_matrix_unchecked(one))
        })
        .collect()
}

/// Projected kernel on per-qubit reduced states: `exp(−γ Σ_q ‖ρ_q − σ_q‖_F²)`.
pub fn projected_kernel_rdms(a: &[DensityOperator], b: &[DensityOperator], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!("{} and {} reduced states", a.len(), b.len())));
    }
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = frobenius_distance(x, y)?;
        total += d * d;
    }
    Ok((-gamma * total).exp())
}

/// Projected-kernel Gram matrix plus the sequences dropped by post-selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedGram {
    pub gram: GramMatrix,
    /// `(index, probability)` of every skipped sequence.
    pub skipped: Vec<(usize, f64)>,
}

fn projected_from_rdms(
    sequences: &[Vec<Symbol>],
    labels: &[String],
    rdms: Vec<Option<Vec<DensityOperator>>>,
    skipped: Vec<(usize, f64)>,
    gamma: f64,
) -> Result<ProjectedGram> {
    let kept: Vec<usize> = (0..sequences.len()).filter(|&i| rdms[i].is_some()).collect();
    let n = kept.len();
    let mut values = vec![0.0; n * n];
    for a in 0..n {
        values[a * n + a] = 1.0;
        for b in (a + 1)..n {
            let k = projected_kernel_rdms(rdms[kept[a]].as_ref().unwrap(), rdms[kept[b]].as_ref().unwrap(), gamma)?;
            values[a * n + b] = k;
            values[b * n + a] = k;
        }
    }
    let gram = GramMatrix::from_values(kept.iter().map(|&i| labels[i].clone()).collect(), values, n)?;
    Ok(ProjectedGram { gram, skipped })
}

/// Infinite-shot projected Gram matrix from the predictive feature states of a channel.
pub fn projected_gram_exact(q: &Qhmm, sequences: &[Vec<Symbol>], gamma: f64) -> Result<ProjectedGram> {
    let labels: Vec<String> = sequences.iter().map(|y| q.alphabet().format(y)).collect();
    let mut rdms = Vec::with_capacity(sequences.len());
    let mut skipped = Vec::new();
    for (i, y) in sequences.iter().enumerate() {
        let p = q.sequence_probability(y)?;
        if p < POST_SELECTION_FLOOR {
            skipped.push((i, p));
            rdms.push(None);
        } else {
            rdms.push(Some(one_qubit_rdms(&phi_predictive(q, y)?)?));
        }
    }
    projected_from_rdms(sequences, &labels, rdms, skipped, gamma)
}

/// Shot-based projected Gram matrix: for every sequence and basis, trajectories
/// are rejection-sampled until `shots` of them emit the sequence, then all
/// qubits of the state register are measured in that basis.
pub fn projected_gram_shots(
    source: TrajectorySource<'_>,
    q: &Qhmm,
    sequences: &[Vec<Symbol>],
    shots: usize,
    gamma: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<ProjectedGram> {
    let n_qubits = qubit_count(source.state_dim())?;
    let labels: Vec<String> = sequences.iter().map(|y| q.alphabet().format(y)).collect();
    let mut rdms = Vec::with_capacity(sequences.len());
    let mut skipped = Vec::new();
    for (i, y) in sequences.iter().enumerate() {
        let p = q.sequence_probability(y)?;
        if p < POST_SELECTION_FLOOR {
            skipped.push((i, p));
            rdms.push(None);
            continue;
        }
        let mut ones = vec![[0usize; 3]; n_qubits];
        for (bi, basis) in Basis::ALL.into_iter().enumerate() {
            let mut accepted = 0;
            while accepted < shots {
                let (emitted, psi) = source.run(y.len(), rng)?;
                if &emitted != y {
                    continue;
                }
                accepted += 1;
                for (qubit, bit) in measure_all_qubits(&psi, basis, rng)?.into_iter().enumerate() {
                    ones[qubit][bi] += bit;
                }
            }
        }
        let per_qubit = ones
            .iter()
            .map(|c| {
                let r = |k: usize| (shots as f64 - 2.0 * c[k] as f64) / shots as f64;
                reconstruct_density(BlochVector { rx: r(0), ry: r(1), rz: r(2) })
            })
            .collect();
        rdms.push(Some(per_qubit));
    }
    projected_from_rdms(sequences, &labels, rdms, skipped, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{Alphabet, ClassicalHmm};
    use crate::qhmm::{embed_hmm, random_density, random_pure_vector, random_qhmm};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real_state(v: &[f64]) -> PureState {
        PureState::new(v.iter().map(|&x| C64::new(x, 0.0)).collect()).unwrap()
    }

    #[test]
    fn identity_unitary_repeats_reset_symbol() {
        let u = UnitaryQhmm::new(
            Alphabet::binary(),
            2,
            2,
            ComplexMatrix::identity(4),
            ComplexMatrix::identity(2),
            vec![1, 0],
            0,
            None,
        )
        .unwrap();
        let rec = run_trajectory_shots(&u, 5, 100, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(rec.counts.len(), 1);
        assert_eq!(rec.counts["11111"], 100);
    }

    #[test]
    fn shots_match_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u = random_qhmm(2, 2, Alphabet::binary(), None, &mut rng).unwrap();
        let rec = run_trajectory_shots(&u, 4, 100_000, &mut rng).unwrap();
        let exact = run_trajectory_exact(&u, 4).unwrap();
        assert!(shots_vs_exact(&rec, &exact, u.alphabet()).unwrap() <= 0.02);
    }

    #[test]
    fn kraus_unravelling_matches_exact() {
        let q = embed_hmm(&ClassicalHmm::market4());
        let source = TrajectorySource::Kraus(&q);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rec = ShotRecord::default();
        for _ in 0..50_000 {
            rec.record(q.alphabet().format(&source.run(3, &mut rng).unwrap().0));
        }
        let exact = q.enumerate_distribution(3).unwrap();
        assert!(shots_vs_exact(&rec, &exact, q.alphabet()).unwrap() <= 0.02);
    }

    #[test]
    fn general_initial_state_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(3, &mut rng);
        let mut acc = ComplexMatrix::zeros(3, 3);
        let shots = 20_000;
        for _ in 0..shots {
            let v = sample_initial_state(&rho, &mut rng).unwrap();
            acc = &acc + &ComplexMatrix::outer(&v, &v);
        }
        assert!((&acc.scale(1.0 / shots as f64) - rho.matrix()).max_abs() < 0.02);
    }

    #[test]
    fn swap_test_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = PureState::new(random_pure_vector(4, &mut rng)).unwrap();
        assert_eq!(swap_test(&psi, &psi, 7, &mut rng).unwrap(), 1.0);
        let s = 0.5_f64.sqrt();
        let (zero, plus) = (real_state(&[1.0, 0.0]), real_state(&[s, s]));
        assert!((1.0 - 2.0 * swap_test_ancilla_one(&zero, &plus).unwrap() - 0.5).abs() < 1e-12);
        let one = real_state(&[0.0, 1.0]);
        let r = 4000;
        let est = swap_test(&zero, &one, r, &mut rng).unwrap();
        assert!(est.abs() <= 3.0 * 2.0 * (0.25 / r as f64).sqrt());
        assert!(swap_test(&zero, &real_state(&[1.0, 0.0, 0.0]), 10, &mut rng).is_err());
    }

    #[test]
    fn swap_test_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = PureState::new(random_pure_vector(3, &mut rng)).unwrap();
        let b = PureState::new(random_pure_vector(3, &mut rng)).unwrap();
        let exact = a.overlap_squared(&b);
        let reps = 1000;
        let r = 500;
        let est: Vec<f64> = (0..reps).map(|_| swap_test(&a, &b, r, &mut rng).unwrap()).collect();
        let mean = est.iter().sum::<f64>() / reps as f64;
        let var = est.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((mean - exact).abs() <= 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn tomography_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = 10_000;
        let zero = DensityOperator::from_diagonal(&[1.0, 0.0]).unwrap();
        let b = pauli_expectations_of_state(&zero, r, &mut rng).unwrap();
        assert!(b.rx.abs() < 0.05 && b.ry.abs() < 0.05 && (b.rz - 1.0).abs() < 1e-12);
        let s = 0.5_f64.sqrt();
        let plus = real_state(&[s, s]).density();
        let b = pauli_expectations_of_state(&plus, r, &mut rng).unwrap();
        assert!((b.rx - 1.0).abs() < 1e-12 && b.rz.abs() < 0.05);
        let mixed = DensityOperator::maximally_mixed(2);
        let b = pauli_expectations_of_state(&mixed, r, &mut rng).unwrap();
        let tol = 3.0 / (r as f64).sqrt();
        assert!(b.rx.abs() < tol && b.ry.abs() < tol && b.rz.abs() < tol);
    }

    #[test]
    fn gate_level_measurement_matches_bloch_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_pure_vector(2, &mut rng);
        let rho = DensityOperator::pure(&v).unwrap();
        let exact = BlochVector::of_state(&rho).unwrap();
        let mut measure = |b: Basis, r: &mut ChaCha8Rng| Ok(measure_all_qubits(&v, b, r)?[0]);
        let est = pauli_expectations(&mut measure, 20_000, &mut rng).unwrap();
        assert!((est.rx - exact.rx).abs() < 0.03 && (est.ry - exact.ry).abs() < 0.03 && (est.rz - exact.rz).abs() < 0.03);
    }

    #[test]
    fn reconstruction_examples() {
        let z = reconstruct_density(BlochVector { rx: 0.0, ry: 0.0, rz: 1.0 });
        assert_eq!(z.matrix(), &ComplexMatrix::from_diagonal(&[1.0, 0.0]));
        let m = reconstruct_density(BlochVector { rx: 0.0, ry: 0.0, rz: 0.0 });
        assert_eq!(m, DensityOperator::maximally_mixed(2));
        let out = reconstruct_density(BlochVector { rx: 1.0, ry: 1.0, rz: 0.2 });
        assert!(out.check().is_ok());
    }

    #[test]
    fn tomography_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let rho = random_density(2, &mut rng);
            let est = reconstruct_density(pauli_expectations_of_state(&rho, 10_000, &mut rng).unwrap());
            assert!(frobenius_distance(&est, &rho).unwrap() < 0.05);
        }
    }

    #[test]
    fn projected_kernel_examples() {
        let zero = DensityOperator::from_diagonal(&[1.0, 0.0]).unwrap();
        let one = DensityOperator::from_diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(projected_kernel(&zero, &zero, 1.0).unwrap(), 1.0);
        assert!((projected_kernel(&zero, &one, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rdms_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (a, b) = (random_density(2, &mut rng), random_density(2, &mut rng));
        let ab = DensityOperator::new(a.matrix().tensor(b.matrix()).unwrap()).unwrap();
        let r = one_qubit_rdms(&ab).unwrap();
        assert!((r[0].matrix() - a.matrix()).max_abs() < 1e-14);
        assert!((r[1].matrix() - b.matrix()).max_abs() < 1e-14);
        assert!(one_qubit_rdms(&DensityOperator::maximally_mixed(3)).is_err());
    }

    #[test]
    fn projected_gram_exact_and_shots() {
        let q = embed_hmm(&ClassicalHmm::market4());
        let single = projected_gram_exact(&q, &[vec![0, 1, 1, 0]], 1.0).unwrap();
        assert_eq!(single.gram.values, vec![1.0]);
        let seqs = vec![vec![0, 0, 1], vec![1, 1, 0], vec![0, 1, 0]];
        let exact = projected_gram_exact(&q, &seqs, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let ri = one_qubit_rdms(&phi_predictive(&q, &seqs[i]).unwrap()).unwrap();
                let rj = one_qubit_rdms(&phi_predictive(&q, &seqs[j]).unwrap()).unwrap();
                let direct = projected_kernel_rdms(&ri, &rj, 1.0).unwrap();
                assert!((exact.gram.get(i, j) - direct).abs() < 1e-10);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let shots = projected_gram_shots(TrajectorySource::Kraus(&q), &q, &seqs, 10_000, 1.0, &mut rng).unwrap();
        for (a, b) in shots.gram.values.iter().zip(&exact.gram.values) {
            assert!((a - b).abs() < 0.1);
        }
    }

    #[test]
    fn post_selection_floor_skips() {
        let m = ClassicalHmm::new(Alphabet::binary(), vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![vec![1.0, 1.0], vec![0.0, 0.0]], vec![0.5, 0.5]).unwrap();
        let q = embed_hmm(&m);
        let out = projected_gram_exact(&q, &[vec![0, 0], vec![0, 1]], 1.0).unwrap();
        assert_eq!(out.gram.n, 1);
        assert_eq!(out.skipped, vec![(1, 0.0)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reconstruction_is_always_a_state(rx in -2.0f64..2.0, ry in -2.0f64..2.0, rz in -2.0f64..2.0) {
            let rho = reconstruct_density(BlochVector { rx, ry, rz });
            prop_assert!(rho.check().is_ok());
        }

        #[test]
        fn projected_kernel_symmetric(seed in any::<u64>(), n in 1usize..5, gamma in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (random_density(n, &mut rng), random_density(n, &mut rng));
            prop_assert_eq!(projected_kernel(&a, &b, gamma).unwrap(), projected_kernel(&b, &a, gamma).unwrap());
            prop_assert_eq!(projected_kernel(&a, &a, gamma).unwrap(), 1.0);
        }
    }
}
