//! Quantum hidden Markov models as per-symbol Kraus channels, and their
//! unitary dilations.
//!
//! The symbol-`a` sub-channel acts as `ρ ↦ Σ_j K_{a,j} ρ K_{a,j}†`; its trace
//! is the probability of emitting `a`. A [`UnitaryQhmm`] couples an
//! `N`-dimensional state system to an `M`-dimensional emission system, and
//! [`UnitaryQhmm::to_channel`] extracts the equivalent Kraus form.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::hmm::{draw_index, enumerate_tree, Alphabet, ClassicalHmm, GenerativeModel, SequenceDistribution, Symbol};
use crate::linalg::{ComplexMatrix, C64, MAX_DIM};
use crate::{Error, Result, IMPOSSIBLE_PROB};

/// Tolerance for Hermiticity, trace and positivity of states and for channel completeness.
pub const STATE_TOL: f64 = 1e-10;

/// Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates `matrix` as a density operator.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = DensityOperator { matrix };
        rho.check()?;
        Ok(DensityOperator { matrix: rho.matrix.hermitian_part() })
    }

    /// Wraps a matrix known to be a state up to roundoff; only the Hermitian part is kept.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        DensityOperator { matrix: matrix.hermitian_part() }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityOperator { matrix: ComplexMatrix::identity(n).scale(1.0 / n as f64) }
    }

    /// `|ψ⟩⟨ψ|` for a normalised `ψ`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Ok(DensityOperator { matrix: ComplexMatrix::outer(psi, psi) })
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(p))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Checks Hermiticity, unit trace and positivity within [`STATE_TOL`].
    pub fn check(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::InvalidState(format!("{}x{} matrix is not square", m.rows(), m.cols())));
        }
        let dev = m.hermitian_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let min = m.hermitian_eig()?.eigenvalues[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Real diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

/// Kraus operators realising the sub-channel of one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolChannel {
    pub symbol: Symbol,
    pub kraus: Vec<ComplexMatrix>,
}

impl SymbolChannel {
    /// `Σ_j K_j ρ K_j†` (unnormalised).
    pub fn branch(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let n = rho.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            out = &out + &rho.conjugate_by(k);
        }
        out
    }

    /// `Σ_j K_j† K_j`.
    pub fn effect(&self) -> ComplexMatrix {
        let n = self.kraus[0].cols();
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &(&k.adjoint() * k))
    }
}

/// Outcome of [`Qhmm::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Largest entry of `Σ_a Σ_j K† K − I`.
    pub completeness_deviation: f64,
    /// Largest eigenvalue of each symbol's effect `Σ_j K† K`; at most one for a
    /// trace-non-increasing branch.
    pub effect_norms: Vec<f64>,
    pub passed: bool,
}

/// Quantum HMM in channel form.
#[derive(Debug, Clone, PartialEq)]
pub struct Qhmm {
    alphabet: Alphabet,
    dim: usize,
    channels: Vec<SymbolChannel>,
    initial: DensityOperator,
}

impl Qhmm {
    /// Assembles a model. Channels must be listed in alphabet order.
    /// Completeness is not enforced here; see [`Qhmm::validate`].
    pub fn new(alphabet: Alphabet, channels: Vec<SymbolChannel>, initial: DensityOperator) -> Result<Self> {
        let dim = initial.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        if channels.len() != alphabet.len() {
            return Err(Error::InvalidModel(format!(
                "{} channels for an alphabet of {} symbols",
                channels.len(),
                alphabet.len()
            )));
        }
        for (a, ch) in channels.iter().enumerate() {
            if ch.symbol != a {
                return Err(Error::InvalidModel(format!("channel {a} is labelled with symbol {}", ch.symbol)));
            }
            if ch.kraus.is_empty() {
                return Err(Error::InvalidModel(format!("channel for symbol {a} has no Kraus operators")));
            }
            if let Some(k) = ch.kraus.iter().find(|k| k.rows() != dim || k.cols() != dim) {
                return Err(Error::InvalidModel(format!(
                    "Kraus operator of size {}x{} in a dimension-{dim} model",
                    k.rows(),
                    k.cols()
                )));
            }
        }
        Ok(Qhmm { alphabet, dim, channels, initial })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[SymbolChannel] {
        &self.channels
    }

    pub fn initial(&self) -> &DensityOperator {
        &self.initial
    }

    /// Same channels started from a different state.
    pub fn with_initial(&self, initial: DensityOperator) -> Result<Self> {
        Self::new(self.alphabet.clone(), self.channels.clone(), initial)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut total = ComplexMatrix::zeros(self.dim, self.dim);
        let mut effect_norms = Vec::with_capacity(self.channels.len());
        for ch in &self.channels {
            let e = ch.effect();
            let top = e
                .hermitian_eig()
                .map(|eig| *eig.eigenvalues.last().unwrap())
                .unwrap_or(f64::INFINITY);
            effect_norms.push(top);
            total = &total + &e;
        }
        let completeness_deviation = (&total - &ComplexMatrix::identity(self.dim)).max_abs();
        let passed = completeness_deviation <= STATE_TOL
            && effect_norms.iter().all(|&n| n <= 1.0 + STATE_TOL);
        ValidationReport { completeness_deviation, effect_norms, passed }
    }

    fn channel(&self, a: Symbol) -> Result<&SymbolChannel> {
        self.channels.get(a).ok_or_else(|| Error::UnknownSymbol(format!("#{a}")))
    }

    fn check_dim(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!("state of dimension {} for a dimension-{} model", rho.dim(), self.dim)))
        }
    }

    /// Unnormalised branch `T_a(ρ)`.
    pub fn branch(&self, rho: &ComplexMatrix, a: Symbol) -> Result<ComplexMatrix> {
        Ok(self.channel(a)?.branch(rho))
    }

    /// Probability of each symbol from `rho`.
    pub fn symbol_probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        self.check_dim(rho)?;
        Ok(self.channels.iter().map(|ch| ch.branch(rho.matrix()).trace().re).collect())
    }

    /// Measures one symbol: returns the normalised post-measurement state and its probability.
    pub fn apply_symbol(&self, rho: &DensityOperator, a: Symbol) -> Result<(DensityOperator, f64)> {
        self.check_dim(rho)?;
        let branch = self.branch(rho.matrix(), a)?;
        let p = branch.trace().re;
        if p <= IMPOSSIBLE_PROB {
            return Err(Error::impossible(&[a], p));
        }
        Ok((DensityOperator::from_matrix_unchecked(branch.scale(1.0 / p)), p))
    }

    /// `tr(T_y ρ)` for an arbitrary start state.
    pub fn sequence_probability_from(&self, rho: &DensityOperator, y: &[Symbol]) -> Result<f64> {
        self.check_dim(rho)?;
        self.alphabet.check(y)?;
        let mut m = rho.matrix().clone();
        for &a in y {
            m = self.channels[a].branch(&m);
        }
        Ok(m.trace().re)
    }

    /// `f^Q(y) = tr(T_y ρ₀)`.
    pub fn sequence_probability(&self, y: &[Symbol]) -> Result<f64> {
        self.sequence_probability_from(&self.initial, y)
    }

    /// Normalised states visited while emitting `y`, one per symbol.
    pub fn generating_states(&self, y: &[Symbol]) -> Result<Vec<DensityOperator>> {
        self.alphabet.check(y)?;
        let mut states = Vec::with_capacity(y.len());
        let mut rho = self.initial.clone();
        let mut total = 1.0;
        for (t, &a) in y.iter().enumerate() {
            let branch = self.channels[a].branch(rho.matrix());
            let p = branch.trace().re;
            total *= p;
            if p <= IMPOSSIBLE_PROB || total <= 0.0 {
                return Err(Error::impossible(&y[..=t], total));
            }
            rho = DensityOperator::from_matrix_unchecked(branch.scale(1.0 / p));
            states.push(rho.clone());
        }
        Ok(states)
    }

    /// `T_y ρ₀ / f^Q(y)`; the initial state for the empty sequence.
    pub fn final_state(&self, y: &[Symbol]) -> Result<DensityOperator> {
        Ok(self.generating_states(y)?.pop().unwrap_or_else(|| self.initial.clone()))
    }

    /// `P[a | y]` for every symbol `a`.
    pub fn conditional_next_distribution(&self, y: &[Symbol]) -> Result<Vec<f64>> {
        let rho = self.final_state(y)?;
        self.symbol_probabilities(&rho)
    }

    /// Exact distribution of the next `k` symbols starting from `rho`.
    pub fn distribution_from(&self, rho: &DensityOperator, k: usize) -> Result<SequenceDistribution> {
        self.check_dim(rho)?;
        enumerate_tree(
            self.alphabet.len(),
            k,
            rho.matrix().clone(),
            &|m: &ComplexMatrix, a| self.channels[a].branch(m),
            &|m: &ComplexMatrix| m.trace().re,
        )
    }

    pub fn enumerate_distribution(&self, t: usize) -> Result<SequenceDistribution> {
        self.distribution_from(&self.initial, t)
    }

    /// Samples by drawing each symbol from the current state and collapsing onto its branch.
    pub fn sample(&self, length: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<Symbol> {
        let mut rho = self.initial.matrix().clone();
        let mut out = Vec::with_capacity(length);
        for _ in 0..length {
            let branches: Vec<ComplexMatrix> = self.channels.iter().map(|ch| ch.branch(&rho)).collect();
            let probs: Vec<f64> = branches.iter().map(|b| b.trace().re.max(0.0)).collect();
            let a = draw_index(&probs, rng);
            rho = branches[a].scale(1.0 / probs[a]);
            out.push(a);
        }
        out
    }
}

impl GenerativeModel for Qhmm {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn sequence_probability(&self, y: &[Symbol]) -> Result<f64> {
        Qhmm::sequence_probability(self, y)
    }

    fn sample_sequence(&self, length: usize, rng: &mut dyn RngCore) -> Vec<Symbol> {
        self.sample(length, rng)
    }

    fn distribution(&self, t: usize) -> Result<SequenceDistribution> {
        self.enumerate_distribution(t)
    }
}

/// Diagonal embedding of a classical HMM: `K_{a,(i,j)} = √(B[a,i] A[j,i]) |j⟩⟨i|`
/// with `ρ₀ = diag(x₀)`.
pub fn embed_hmm(model: &ClassicalHmm) -> Qhmm {
    let n = model.n_states();
    let channels = (0..model.alphabet().len())
        .map(|a| {
            let mut kraus = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut k = ComplexMatrix::zeros(n, n);
                    k[(j, i)] = C64::new((model.emission(a, i) * model.transition(j, i)).sqrt(), 0.0);
                    kraus.push(k);
                }
            }
            SymbolChannel { symbol: a, kraus }
        })
        .collect();
    let initial = DensityOperator::from_matrix_unchecked(ComplexMatrix::from_diagonal(model.initial()));
    Qhmm::new(model.alphabet().clone(), channels, initial).expect("embedding preserves dimensions")
}

/// QHMM realised by a unitary on `state ⊗ emission`, a measurement basis of the
/// emission system and a map from emission outcomes to symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryQhmm {
    alphabet: Alphabet,
    state_dim: usize,
    emission_dim: usize,
    unitary: ComplexMatrix,
    basis: ComplexMatrix,
    partition: Vec<Symbol>,
    reset_index: usize,
    initial: DensityOperator,
}

impl UnitaryQhmm {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alphabet: Alphabet,
        state_dim: usize,
        emission_dim: usize,
        unitary: ComplexMatrix,
        basis: ComplexMatrix,
        partition: Vec<Symbol>,
        reset_index: usize,
        initial: Option<DensityOperator>,
    ) -> Result<Self> {
        let total = state_dim * emission_dim;
        if state_dim == 0 || emission_dim == 0 {
            return Err(Error::InvalidModel("state and emission dimensions must be positive".into()));
        }
        if total > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim: total, max: MAX_DIM });
        }
        if unitary.rows() != total || unitary.cols() != total {
            return Err(Error::InvalidModel(format!("unitary must be {total}x{total}")));
        }
        let dev = unitary.unitarity_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidModel(format!("U is not unitary (deviation {dev:e})")));
        }
        if basis.rows() != emission_dim || basis.cols() != emission_dim {
            return Err(Error::InvalidModel(format!("measurement basis must be {emission_dim}x{emission_dim}")));
        }
        let dev = basis.unitarity_deviation();
        if dev > STATE_TOL {
            return Err(Error::InvalidModel(format!("measurement basis is not unitary (deviation {dev:e})")));
        }
        if partition.len() != emission_dim {
            return Err(Error::InvalidModel(format!(
                "partition has {} entries for {emission_dim} emission outcomes",
                partition.len()
            )));
        }
        for a in 0..alphabet.len() {
            if !partition.contains(&a) {
                return Err(Error::InvalidModel(format!("symbol {} has no emission outcome", alphabet.symbol(a))));
            }
        }
        if let Some(&bad) = partition.iter().find(|&&a| a >= alphabet.len()) {
            return Err(Error::UnknownSymbol(format!("#{bad}")));
        }
        if reset_index >= emission_dim {
            return Err(Error::InvalidModel(format!("reset index {reset_index} out of range")));
        }
        let initial = initial.unwrap_or_else(|| DensityOperator::maximally_mixed(state_dim));
        if initial.dim() != state_dim {
            return Err(Error::DimensionMismatch(format!(
                "initial state of dimension {} for state dimension {state_dim}",
                initial.dim()
            )));
        }
        Ok(UnitaryQhmm { alphabet, state_dim, emission_dim, unitary, basis, partition, reset_index, initial })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn emission_dim(&self) -> usize {
        self.emission_dim
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn partition(&self) -> &[Symbol] {
        &self.partition
    }

    pub fn reset_index(&self) -> usize {
        self.reset_index
    }

    pub fn initial(&self) -> &DensityOperator {
        &self.initial
    }

    /// `T_e = (I ⊗ ⟨ẽ|) U (I ⊗ |e₀⟩)` for the `e`-th measurement basis vector `ẽ`.
    pub fn kraus_operator(&self, e: usize) -> ComplexMatrix {
        let (n, m) = (self.state_dim, self.emission_dim);
        let e0 = self.reset_index;
        ComplexMatrix::from_fn(n, n, |s2, s| {
            (0..m)
                .map(|f| self.basis[(f, e)].conj() * self.unitary[(s2 * m + f, s * m + e0)])
                .sum()
        })
    }

    /// Equivalent channel-form model.
    pub fn to_channel(&self) -> Qhmm {
        let mut channels: Vec<SymbolChannel> =
            (0..self.alphabet.len()).map(|a| SymbolChannel { symbol: a, kraus: Vec::new() }).collect();
        for e in 0..self.emission_dim {
            channels[self.partition[e]].kraus.push(self.kraus_operator(e));
        }
        Qhmm::new(self.alphabet.clone(), channels, self.initial.clone())
            .expect("validated dilation yields a well-formed channel")
    }
}

/// Kraus form of a unitary QHMM.
pub fn kraus_from_unitary(u: &UnitaryQhmm) -> Qhmm {
    u.to_channel()
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Gaussian matrix, which
/// fixes every diagonal entry of the implied `R` factor to be positive.
pub fn haar_unitary(n: usize, rng: &mut (impl Rng + ?Sized)) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C64> =
            (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Emission outcome `e` emits symbol `e mod |Σ|`.
pub fn modulo_partition(emission_dim: usize, alphabet_size: usize) -> Vec<Symbol> {
    (0..emission_dim).map(|e| e % alphabet_size).collect()
}

/// Random dilation with a Haar unitary, computational measurement basis,
/// reset index 0 and a maximally mixed initial state.
pub fn random_qhmm(
    state_dim: usize,
    emission_dim: usize,
    alphabet: Alphabet,
    partition: Option<Vec<Symbol>>,
    rng: &mut (impl Rng + ?Sized),
) -> Result<UnitaryQhmm> {
    if emission_dim < alphabet.len() {
        return Err(Error::InvalidArgument(format!(
            "emission dimension {emission_dim} is smaller than the alphabet ({})",
            alphabet.len()
        )));
    }
    if state_dim * emission_dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: state_dim * emission_dim, max: MAX_DIM });
    }
    let partition = partition.unwrap_or_else(|| modulo_partition(emission_dim, alphabet.len()));
    let unitary = haar_unitary(state_dim * emission_dim, rng);
    UnitaryQhmm::new(
        alphabet,
        state_dim,
        emission_dim,
        unitary,
        ComplexMatrix::identity(emission_dim),
        partition,
        0,
        None,
    )
}

/// Random full-rank mixed state `G G† / tr(G G†)` with Gaussian `G`.
pub fn random_density(n: usize, rng: &mut (impl Rng + ?Sized)) -> DensityOperator {
    let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let p = &g * &g.adjoint();
    let tr = p.trace().re;
    DensityOperator::from_matrix_unchecked(p.scale(1.0 / tr))
}

/// Haar-random unit vector.
pub fn random_pure_vector(n: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}
