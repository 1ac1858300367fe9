//! Binary classification tasks over sequences and dataset generation.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hmm::{GenerativeModel, Symbol};
use crate::{Error, Result};

/// Number of trailing (or leading) symbols indexing the predictive table.
pub const PREDICTIVE_WINDOW: usize = 5;

/// 32-entry lookup table mapping a 5-bit window to a class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictiveLabelTable([u8; 32]);

impl PredictiveLabelTable {
    pub const MARKET_TABLE: &'static str = "11110011001100100110001011000110";

    pub fn new(table: &str) -> Result<Self> {
        let bytes = table.as_bytes();
        if bytes.len() != 32 || bytes.iter().any(|&b| b != b'0' && b != b'1') {
            return Err(Error::InvalidArgument(format!("label table must be 32 binary digits, got {table:?}")));
        }
        let mut t = [0u8; 32];
        for (slot, &b) in t.iter_mut().zip(bytes) {
            *slot = b - b'0';
        }
        Ok(PredictiveLabelTable(t))
    }

    /// The table used for the market experiments.
    pub fn market() -> Self {
        Self::new(Self::MARKET_TABLE).expect("built-in table is valid")
    }

    pub fn get(&self, index: usize) -> usize {
        self.0[index] as usize
    }
}

impl fmt::Display for PredictiveLabelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Which 5-symbol window of a sequence indexes the predictive table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefixMode {
    #[default]
    Last,
    First,
}

fn check_binary(y: &[Symbol]) -> Result<()> {
    match y.iter().find(|&&s| s > 1) {
        Some(s) => Err(Error::UnknownSymbol(format!("#{s} in a binary task"))),
        None => Ok(()),
    }
}

/// Class 1 iff strictly more than half of the symbols are `1`.
pub fn structural_label(y: &[Symbol]) -> Result<usize> {
    check_binary(y)?;
    let ones = y.iter().filter(|&&s| s == 1).count();
    Ok(usize::from(2 * ones > y.len()))
}

/// Table lookup on the 5-symbol window, read most significant bit first.
pub fn predictive_label(y: &[Symbol], table: &PredictiveLabelTable, mode: PrefixMode) -> Result<usize> {
    check_binary(y)?;
    if y.len() < PREDICTIVE_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "predictive labels need at least {PREDICTIVE_WINDOW} symbols, got {}",
            y.len()
        )));
    }
    let window = match mode {
        PrefixMode::Last => &y[y.len() - PREDICTIVE_WINDOW..],
        PrefixMode::First => &y[..PREDICTIVE_WINDOW],
    };
    Ok(table.get(window.iter().fold(0, |acc, &b| acc * 2 + b)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    Structural,
    Predictive(PredictiveLabelTable, PrefixMode),
}

impl Task {
    pub fn predictive() -> Self {
        Task::Predictive(PredictiveLabelTable::market(), PrefixMode::Last)
    }

    pub fn label(&self, y: &[Symbol]) -> Result<usize> {
        match self {
            Task::Structural => structural_label(y),
            Task::Predictive(table, mode) => predictive_label(y, table, *mode),
        }
    }

    pub fn min_length(&self) -> usize {
        match self {
            Task::Structural => 0,
            Task::Predictive(..) => PREDICTIVE_WINDOW,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Structural => "structural",
            Task::Predictive(_, PrefixMode::Last) => "predictive",
            Task::Predictive(_, PrefixMode::First) => "predictive-first",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structural" => Ok(Task::Structural),
            "predictive" => Ok(Task::predictive()),
            "predictive-first" => Ok(Task::Predictive(PredictiveLabelTable::market(), PrefixMode::First)),
            other => Err(Error::InvalidArgument(format!(
                "unknown task {other:?} (expected structural, predictive or predictive-first)"
            ))),
        }
    }
}

/// Fixed-length labelled sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub sequences: Vec<Vec<Symbol>>,
    pub classes: Vec<usize>,
    pub length: usize,
    pub source: String,
    pub seed: Option<u64>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn class_one_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.classes.iter().sum::<usize>() as f64 / self.len() as f64
    }
}

/// Draws `n` i.i.d. sequences from `model` and labels them.
pub fn generate_dataset_with(
    model: &dyn GenerativeModel,
    n: usize,
    length: usize,
    task: &Task,
    rng: &mut dyn RngCore,
) -> Result<LabeledDataset> {
    if length < task.min_length() {
        return Err(Error::InvalidArgument(format!(
            "{task} task needs sequences of length at least {}, got {length}",
            task.min_length()
        )));
    }
    let mut sequences = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for _ in 0..n {
        let y = model.sample_sequence(length, rng);
        classes.push(task.label(&y)?);
        sequences.push(y);
    }
    Ok(LabeledDataset { sequences, classes, length, source: String::new(), seed: None })
}

/// [`generate_dataset_with`] driven by a ChaCha8 stream seeded with `seed`.
pub fn generate_dataset(
    model: &dyn GenerativeModel,
    n: usize,
    length: usize,
    task: &Task,
    seed: u64,
) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ds = generate_dataset_with(model, n, length, task, &mut rng)?;
    ds.seed = Some(seed);
    Ok(ds)
}

/// Exact probability that a length-`length` sample falls in class 1.
pub fn labeled_mass(model: &dyn GenerativeModel, length: usize, task: &Task) -> Result<f64> {
    let dist = model.distribution(length)?;
    let mut mass = 0.0;
    for (y, p) in dist.iter() {
        if task.label(&y)? == 1 {
            mass += p;
        }
    }
    Ok(mass)
}
