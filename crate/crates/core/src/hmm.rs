//! Classical hidden Markov models over a finite alphabet.
//!
//! Beliefs are column vectors and the transition matrix is column-stochastic:
//! `transition[j][i] = P(next = j | current = i)`. A symbol is emitted from the
//! current state before the transition, so the observable operator for symbol
//! `a` is `T_a = A · diag(B[a, ·])` and `P(y) = 1ᵀ T_{y_t} ⋯ T_{y_1} x₀`.

use std::fmt;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, ENUMERATION_CAP, IMPOSSIBLE_PROB};

/// Index of a symbol within an [`Alphabet`].
pub type Symbol = usize;

/// Unnormalised or normalised weights over hidden states.
pub type BeliefVector = Vec<f64>;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Ordered set of single-character symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<char>", into = "Vec<char>")]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidModel("alphabet is empty".into()));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(Error::InvalidModel(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Alphabet(symbols))
    }

    /// The alphabet `{0, 1}`.
    pub fn binary() -> Self {
        Alphabet(vec!['0', '1'])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.0
    }

    pub fn symbol(&self, index: Symbol) -> char {
        self.0[index]
    }

    pub fn index_of(&self, c: char) -> Result<Symbol> {
        self.0
            .iter()
            .position(|&s| s == c)
            .ok_or_else(|| Error::UnknownSymbol(c.to_string()))
    }

    pub fn parse(&self, text: &str) -> Result<Vec<Symbol>> {
        text.chars().map(|c| self.index_of(c)).collect()
    }

    pub fn format(&self, seq: &[Symbol]) -> String {
        seq.iter().map(|&s| self.0[s]).collect()
    }

    pub fn check(&self, seq: &[Symbol]) -> Result<()> {
        match seq.iter().find(|&&s| s >= self.0.len()) {
            Some(s) => Err(Error::UnknownSymbol(format!("#{s}"))),
            None => Ok(()),
        }
    }

    /// All sequences of length `t` in lexicographic order (first symbol most significant).
    pub fn sequences(&self, t: usize) -> Result<Vec<Vec<Symbol>>> {
        let count = checked_count(self.len(), t)?;
        Ok((0..count).map(|idx| index_to_sequence(idx, self.len(), t)).collect())
    }
}

impl TryFrom<Vec<char>> for Alphabet {
    type Error = Error;

    fn try_from(symbols: Vec<char>) -> Result<Self> {
        Alphabet::new(symbols)
    }
}

impl From<Alphabet> for Vec<char> {
    fn from(a: Alphabet) -> Vec<char> {
        a.0
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().map(char::to_string).collect::<Vec<_>>().join(","))
    }
}

/// Anything that assigns probabilities to sequences and can sample them.
pub trait GenerativeModel: Sync {
    fn alphabet(&self) -> &Alphabet;

    fn sequence_probability(&self, y: &[Symbol]) -> Result<f64>;

    fn sample_sequence(&self, length: usize, rng: &mut dyn RngCore) -> Vec<Symbol>;

    /// Exact distribution over all sequences of length `t`.
    fn distribution(&self, t: usize) -> Result<SequenceDistribution>;
}

/// Exact probabilities of every sequence of a fixed length.
///
/// Entries are stored in lexicographic order of the sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDistribution {
    alphabet_size: usize,
    length: usize,
    probs: Vec<f64>,
}

impl SequenceDistribution {
    pub fn new(alphabet_size: usize, length: usize, probs: Vec<f64>) -> Result<Self> {
        let count = checked_count(alphabet_size, length)?;
        if probs.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for {count} sequences",
                probs.len()
            )));
        }
        Ok(SequenceDistribution { alphabet_size, length, probs })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, seq: &[Symbol]) -> usize {
        seq.iter().fold(0, |acc, &s| acc * self.alphabet_size + s)
    }

    pub fn sequence(&self, index: usize) -> Vec<Symbol> {
        index_to_sequence(index, self.alphabet_size, self.length)
    }

    pub fn prob(&self, seq: &[Symbol]) -> f64 {
        if seq.len() != self.length || seq.iter().any(|&s| s >= self.alphabet_size) {
            return 0.0;
        }
        self.probs[self.index_of(seq)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<Symbol>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.sequence(i), p))
    }
}

pub(crate) fn checked_count(alphabet_size: usize, t: usize) -> Result<usize> {
    match u32::try_from(t).ok().and_then(|t| alphabet_size.checked_pow(t)) {
        Some(c) if c <= ENUMERATION_CAP => Ok(c),
        _ => Err(Error::EnumerationCap { count: format!("{alphabet_size}^{t}"), cap: ENUMERATION_CAP }),
    }
}

fn index_to_sequence(mut index: usize, m: usize, t: usize) -> Vec<Symbol> {
    let mut seq = vec![0; t];
    for slot in seq.iter_mut().rev() {
        *slot = index % m;
        index /= m;
    }
    seq
}

/// Depth-first enumeration of all length-`t` continuations of `root`.
///
/// `step` maps a node state and a symbol to the child state; `mass` gives the
/// probability carried by a leaf. Leaves are produced in lexicographic order.
pub(crate) fn enumerate_tree<S>(
    alphabet_size: usize,
    t: usize,
    root: S,
    step: &impl Fn(&S, Symbol) -> S,
    mass: &impl Fn(&S) -> f64,
) -> Result<SequenceDistribution> {
    let count = checked_count(alphabet_size, t)?;
    let mut probs = Vec::with_capacity(count);
    fn walk<S>(
        node: &S,
        depth: usize,
        m: usize,
        step: &impl Fn(&S, Symbol) -> S,
        mass: &impl Fn(&S) -> f64,
        out: &mut Vec<f64>,
    ) {
        if depth == 0 {
            out.push(mass(node));
            return;
        }
        for a in 0..m {
            let child = step(node, a);
            walk(&child, depth - 1, m, step, mass, out);
        }
    }
    walk(&root, t, alphabet_size, step, mass, &mut probs);
    SequenceDistribution::new(alphabet_size, t, probs)
}

/// Draws an index with probability proportional to `weights`.
pub(crate) fn draw_index(weights: &[f64], rng: &mut (impl Rng + ?Sized)) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// Classical HMM with column-stochastic transitions and per-state emissions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalHmm {
    alphabet: Alphabet,
    n_states: usize,
    /// `transition[j * n + i] = P(next = j | current = i)`.
    transition: Vec<f64>,
    /// `emission[a * n + i] = P(symbol a | state i)`.
    emission: Vec<f64>,
    initial: Vec<f64>,
}

impl ClassicalHmm {
    /// Builds a model from a column-stochastic transition matrix
    /// (`transition[j][i] = P(j | i)`) and an emission matrix indexed
    /// `emission[a][i] = P(a | i)`.
    pub fn new(
        alphabet: Alphabet,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = initial.len();
        if n == 0 {
            return Err(Error::InvalidModel("model has no states".into()));
        }
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("transition matrix must be {n}x{n}")));
        }
        let m = alphabet.len();
        if emission.len() != m || emission.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("emission matrix must be {m}x{n}")));
        }
        let flat_t: Vec<f64> = transition.into_iter().flatten().collect();
        let flat_e: Vec<f64> = emission.into_iter().flatten().collect();
        for (name, values) in [("transition", &flat_t), ("emission", &flat_e), ("initial", &initial)] {
            if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidModel(format!("{name} entries must be finite and non-negative")));
            }
        }
        for i in 0..n {
            let col_t: f64 = (0..n).map(|j| flat_t[j * n + i]).sum();
            let col_e: f64 = (0..m).map(|a| flat_e[a * n + i]).sum();
            if (col_t - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("transitions out of state {i} sum to {col_t}")));
            }
            if (col_e - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("emissions of state {i} sum to {col_e}")));
            }
        }
        let total: f64 = initial.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!("initial belief sums to {total}")));
        }
        Ok(ClassicalHmm { alphabet, n_states: n, transition: flat_t, emission: flat_e, initial })
    }

    /// Builds a model from the tabular layout: `rows[i][j] = P(j | i)` and
    /// `emission_by_state[i][a] = P(a | i)`.
    pub fn from_row_stochastic(
        alphabet: Alphabet,
        rows: Vec<Vec<f64>>,
        emission_by_state: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let n = rows.len();
        let m = alphabet.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(format!("transition table must be {n}x{n}")));
        }
        if emission_by_state.len() != n || emission_by_state.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel(format!("emission table must be {n}x{m}")));
        }
        let transition = (0..n).map(|j| (0..n).map(|i| rows[i][j]).collect()).collect();
        let emission = (0..m).map(|a| (0..n).map(|i| emission_by_state[i][a]).collect()).collect();
        Self::new(alphabet, transition, emission, initial)
    }

    /// The four-state market movement model (bear, bull, transition to bear,
    /// transition to bull) over `{0 = down, 1 = up}`, uniform initial belief.
    pub fn market4() -> Self {
        let rows = vec![
            vec![0.50, 0.10, 0.15, 0.25],
            vec![0.10, 0.50, 0.25, 0.15],
            vec![0.25, 0.15, 0.50, 0.10],
            vec![0.15, 0.25, 0.10, 0.50],
        ];
        let emissions = vec![vec![0.80, 0.20], vec![0.20, 0.80], vec![0.40, 0.60], vec![0.60, 0.40]];
        Self::from_row_stochastic(Alphabet::binary(), rows, emissions, vec![0.25; 4])
            .expect("market model tables are stochastic")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// `P(next = j | current = i)`.
    pub fn transition(&self, j: usize, i: usize) -> f64 {
        self.transition[j * self.n_states + i]
    }

    /// `P(symbol a | state i)`.
    pub fn emission(&self, a: Symbol, i: usize) -> f64 {
        self.emission[a * self.n_states + i]
    }

    /// Row-major tabular transition layout (`rows[i][j] = P(j | i)`).
    pub fn transition_rows(&self) -> Vec<Vec<f64>> {
        let n = self.n_states;
        (0..n).map(|i| (0..n).map(|j| self.transition(j, i)).collect()).collect()
    }

    /// Per-state emission distributions (`rows[i][a] = P(a | i)`).
    pub fn emission_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_states)
            .map(|i| (0..self.alphabet.len()).map(|a| self.emission(a, i)).collect())
            .collect()
    }

    fn check_symbol(&self, a: Symbol) -> Result<()> {
        if a < self.alphabet.len() {
            Ok(())
        } else {
            Err(Error::UnknownSymbol(format!("#{a}")))
        }
    }

    /// Dense observable operator `T_a = A · diag(B[a, ·])`, indexed `[j][i]`.
    pub fn observable_operator(&self, a: Symbol) -> Result<Vec<Vec<f64>>> {
        self.check_symbol(a)?;
        let n = self.n_states;
        Ok((0..n)
            .map(|j| (0..n).map(|i| self.transition(j, i) * self.emission(a, i)).collect())
            .collect())
    }

    /// `T_a x` without normalisation.
    pub fn apply_operator(&self, a: Symbol, x: &[f64]) -> Vec<f64> {
        let n = self.n_states;
        let weighted: Vec<f64> = (0..n).map(|i| self.emission(a, i) * x[i]).collect();
        (0..n)
            .map(|j| (0..n).map(|i| self.transition[j * n + i] * weighted[i]).sum())
            .collect()
    }

    /// Unnormalised forward message `T_y x₀`; its sum is `P(y)`.
    pub fn feature_map(&self, y: &[Symbol]) -> Result<BeliefVector> {
        self.alphabet.check(y)?;
        Ok(y.iter().fold(self.initial.clone(), |x, &a| self.apply_operator(a, &x)))
    }

    pub fn sequence_probability(&self, y: &[Symbol]) -> Result<f64> {
        Ok(self.feature_map(y)?.iter().sum())
    }

    /// Conditions `belief` on emitting `a` and advances one step.
    pub fn belief_update(&self, belief: &[f64], a: Symbol) -> Result<(BeliefVector, f64)> {
        self.check_symbol(a)?;
        if belief.len() != self.n_states {
            return Err(Error::DimensionMismatch(format!(
                "belief of length {} for {} states",
                belief.len(),
                self.n_states
            )));
        }
        let next = self.apply_operator(a, belief);
        let p: f64 = next.iter().sum();
        if p <= IMPOSSIBLE_PROB {
            return Err(Error::impossible(&[a], p));
        }
        Ok((next.into_iter().map(|x| x / p).collect(), p))
    }

    /// Exact distribution over `Σ^t`.
    pub fn enumerate_distribution(&self, t: usize) -> Result<SequenceDistribution> {
        enumerate_tree(
            self.alphabet.len(),
            t,
            self.initial.clone(),
            &|x: &Vec<f64>, a| self.apply_operator(a, x),
            &|x: &Vec<f64>| x.iter().sum(),
        )
    }

    /// Samples a hidden trajectory and its emissions.
    pub fn sample(&self, length: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<Symbol> {
        let n = self.n_states;
        let m = self.alphabet.len();
        let mut state = draw_index(&self.initial, rng);
        let mut out = Vec::with_capacity(length);
        let mut column = vec![0.0; n.max(m)];
        for _ in 0..length {
            for a in 0..m {
                column[a] = self.emission(a, state);
            }
            out.push(draw_index(&column[..m], rng));
            for j in 0..n {
                column[j] = self.transition(j, state);
            }
            state = draw_index(&column[..n], rng);
        }
        out
    }
}

impl GenerativeModel for ClassicalHmm {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn sequence_probability(&self, y: &[Symbol]) -> Result<f64> {
        ClassicalHmm::sequence_probability(self, y)
    }

    fn sample_sequence(&self, length: usize, rng: &mut dyn RngCore) -> Vec<Symbol> {
        self.sample(length, rng)
    }

    fn distribution(&self, t: usize) -> Result<SequenceDistribution> {
        self.enumerate_distribution(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn market() -> ClassicalHmm {
        ClassicalHmm::market4()
    }

    /// Independent forward pass over explicit hidden paths.
    fn brute_force_probability(m: &ClassicalHmm, y: &[Symbol]) -> f64 {
        let n = m.n_states();
        let mut total = 0.0;
        let paths = n.pow(y.len() as u32);
        for code in 0..paths {
            let mut states = Vec::with_capacity(y.len());
            let mut c = code;
            for _ in 0..y.len() {
                states.push(c % n);
                c /= n;
            }
            let mut p = m.initial()[states[0]];
            for t in 0..y.len() {
                p *= m.emission(y[t], states[t]);
                if t + 1 < y.len() {
                    p *= m.transition(states[t + 1], states[t]);
                }
            }
            total += p;
        }
        total
    }

    #[test]
    fn observable_operator_market_column() {
        let t0 = market().observable_operator(0).unwrap();
        let expected = [0.50, 0.10, 0.15, 0.25];
        for j in 0..4 {
            assert!((t0[j][0] - 0.8 * expected[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn observable_operator_identity_case() {
        let m = ClassicalHmm::new(
            Alphabet::binary(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(m.observable_operator(0).unwrap(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn summed_operators_are_column_stochastic() {
        let m = market();
        let (t0, t1) = (m.observable_operator(0).unwrap(), m.observable_operator(1).unwrap());
        for i in 0..4 {
            let s: f64 = (0..4).map(|j| t0[j][i] + t1[j][i]).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unknown_symbol_rejected() {
        assert!(matches!(market().observable_operator(2), Err(Error::UnknownSymbol(_))));
        assert!(market().sequence_probability(&[0, 5]).is_err());
    }

    #[test]
    fn sequence_probability_examples() {
        let m = market();
        assert_eq!(m.sequence_probability(&[]).unwrap(), 1.0);
        assert!((m.sequence_probability(&[0]).unwrap() - 0.5).abs() < 1e-15);
        for y in [vec![0, 1, 1], vec![1, 1, 0, 1], vec![0, 0, 0, 1, 0]] {
            let p = m.sequence_probability(&y).unwrap();
            assert!((p - brute_force_probability(&m, &y)).abs() < 1e-15);
        }
    }

    #[test]
    fn per_length_normalisation() {
        let m = market();
        for t in 0..=8 {
            let total: f64 = Alphabet::binary()
                .sequences(t)
                .unwrap()
                .iter()
                .map(|y| m.sequence_probability(y).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn conditionals_are_probabilities() {
        let m = market();
        for y in Alphabet::binary().sequences(5).unwrap() {
            let p = m.sequence_probability(&y).unwrap();
            for a in 0..2 {
                let mut ya = y.clone();
                ya.push(a);
                let r = m.sequence_probability(&ya).unwrap() / p;
                assert!((0.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        let m = market();
        let d1 = m.enumerate_distribution(1).unwrap();
        assert!((d1.prob(&[0]) - 0.5).abs() < 1e-15 && (d1.prob(&[1]) - 0.5).abs() < 1e-15);
        let d0 = m.enumerate_distribution(0).unwrap();
        assert_eq!(d0.probs(), &[1.0]);
        let d6 = m.enumerate_distribution(6).unwrap();
        assert_eq!(d6.probs().len(), 64);
        assert!((d6.total() - 1.0).abs() < 1e-12);
        for (y, p) in d6.iter() {
            assert!((p - m.sequence_probability(&y).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn enumerate_cap() {
        assert!(matches!(market().enumerate_distribution(21), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn sample_matches_distribution() {
        let m = market();
        let exact = m.enumerate_distribution(4).unwrap();
        let mut counts = vec![0usize; 16];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shots = 100_000;
        for _ in 0..shots {
            counts[exact.index_of(&m.sample(4, &mut rng))] += 1;
        }
        let tv = counts
            .iter()
            .zip(exact.probs())
            .map(|(&c, &p)| (c as f64 / shots as f64 - p).abs())
            .fold(0.0, f64::max);
        assert!(tv <= 0.02, "tv={tv}");
    }

    #[test]
    fn sample_deterministic_model() {
        let m = ClassicalHmm::new(
            Alphabet::binary(),
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.sample(4, &mut rng), vec![1, 1, 1, 1]);
    }

    #[test]
    fn sample_replays_under_seed() {
        let m = market();
        let a = m.sample(20, &mut ChaCha8Rng::seed_from_u64(42));
        let b = m.sample(20, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn belief_update_examples() {
        let m = market();
        let (b, p) = m.belief_update(&[0.25; 4], 0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-15 && b.iter().all(|&x| x >= 0.0));
        let (_, p) = m.belief_update(&[1.0, 0.0, 0.0, 0.0], 0).unwrap();
        assert!((p - 0.8).abs() < 1e-15);
    }

    #[test]
    fn belief_update_impossible_symbol() {
        let m = ClassicalHmm::new(
            Alphabet::binary(),
            vec![vec![1.0]],
            vec![vec![1.0], vec![0.0]],
            vec![1.0],
        )
        .unwrap();
        assert!(matches!(m.belief_update(&[1.0], 1), Err(Error::ImpossibleSequence { .. })));
    }

    #[test]
    fn feature_map_consistency() {
        let m = market();
        assert_eq!(m.feature_map(&[]).unwrap(), vec![0.25; 4]);
        let f = m.feature_map(&[0]).unwrap();
        assert!((f.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y = m.sample(7, &mut rng);
            let f: f64 = m.feature_map(&y).unwrap().iter().sum();
            assert!((f - m.sequence_probability(&y).unwrap()).abs() < 1e-16);
        }
    }

    #[test]
    fn invalid_models_rejected() {
        let bad = ClassicalHmm::new(
            Alphabet::binary(),
            vec![vec![0.5, 0.5], vec![0.4, 0.5]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            vec![0.5, 0.5],
        );
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn alphabet_parse_and_format() {
        let a = Alphabet::binary();
        assert_eq!(a.parse("0110").unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(a.format(&[1, 0]), "10");
        assert!(a.parse("012").is_err());
        assert!(Alphabet::new(vec!['a', 'a']).is_err());
    }
}
