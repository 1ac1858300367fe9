//! Model files (JSON) and tabular exports (CSV).
//!
//! Complex matrices are stored as rows of `[re, im]` pairs. Classical models
//! use the tabular layout: `transition[i][j] = P(j | i)` and
//! `emission[i][a] = P(a | i)`.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::ShotRecord;
use crate::hmm::{Alphabet, ClassicalHmm, GenerativeModel, SequenceDistribution};
use crate::kernels::GramMatrix;
use crate::learn::EvalReport;
use crate::linalg::{ComplexMatrix, C64};
use crate::qhmm::{embed_hmm, random_qhmm, DensityOperator, Qhmm, SymbolChannel, UnitaryQhmm};
use crate::tasks::LabeledDataset;
use crate::{Error, Result};

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HmmFile {
    pub states: usize,
    pub alphabet: Alphabet,
    pub transition: Vec<Vec<f64>>,
    pub emission: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub symbol: char,
    pub kraus: Vec<JsonMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QhmmFile {
    pub alphabet: Alphabet,
    pub dim: usize,
    pub channels: Vec<ChannelFile>,
    /// Defaults to the maximally mixed state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<JsonMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitaryFile {
    pub alphabet: Alphabet,
    pub state_dim: usize,
    pub emission_dim: usize,
    pub unitary: JsonMatrix,
    pub basis: JsonMatrix,
    pub partition: Vec<char>,
    pub reset_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<JsonMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Unitary(UnitaryFile),
    Channel(QhmmFile),
    Classical(HmmFile),
}

fn matrix_from_json(m: &JsonMatrix, what: &str) -> Result<ComplexMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidModel(format!("{what} is not a rectangular matrix")));
    }
    ComplexMatrix::from_vec(rows, cols, m.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect())
}

fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn initial_from_json(m: &Option<JsonMatrix>, dim: usize) -> Result<DensityOperator> {
    match m {
        None => Ok(DensityOperator::maximally_mixed(dim)),
        Some(m) => DensityOperator::new(matrix_from_json(m, "initial state")?),
    }
}

/// A model loaded from a file or a built-in name.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Classical(ClassicalHmm),
    Channel(Qhmm),
    Unitary(UnitaryQhmm),
}

impl LoadedModel {
    /// Channel form: classical models are embedded, dilations converted.
    pub fn channel(&self) -> Qhmm {
        match self {
            LoadedModel::Classical(m) => embed_hmm(m),
            LoadedModel::Channel(q) => q.clone(),
            LoadedModel::Unitary(u) => u.to_channel(),
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            LoadedModel::Classical(m) => GenerativeModel::alphabet(m),
            LoadedModel::Channel(q) => q.alphabet(),
            LoadedModel::Unitary(u) => u.alphabet(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Classical(_) => "classical",
            LoadedModel::Channel(_) => "channel",
            LoadedModel::Unitary(_) => "unitary",
        }
    }
}

impl TryFrom<ModelFile> for LoadedModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        match file {
            ModelFile::Classical(f) => {
                if f.transition.len() != f.states || f.initial.len() != f.states {
                    return Err(Error::InvalidModel(format!("tables do not match {} states", f.states)));
                }
                Ok(LoadedModel::Classical(ClassicalHmm::from_row_stochastic(
                    f.alphabet,
                    f.transition,
                    f.emission,
                    f.initial,
                )?))
            }
            ModelFile::Channel(f) => {
                let mut channels: Vec<Option<SymbolChannel>> = vec![None; f.alphabet.len()];
                for ch in &f.channels {
                    let a = f.alphabet.index_of(ch.symbol)?;
                    if channels[a].is_some() {
                        return Err(Error::InvalidModel(format!("symbol {:?} has two channels", ch.symbol)));
                    }
                    let kraus =
                        ch.kraus.iter().map(|k| matrix_from_json(k, "Kraus operator")).collect::<Result<Vec<_>>>()?;
                    channels[a] = Some(SymbolChannel { symbol: a, kraus });
                }
                let channels = channels
                    .into_iter()
                    .enumerate()
                    .map(|(a, c)| {
                        c.ok_or_else(|| Error::InvalidModel(format!("no channel for symbol {}", f.alphabet.symbol(a))))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let initial = initial_from_json(&f.initial, f.dim)?;
                Ok(LoadedModel::Channel(Qhmm::new(f.alphabet, channels, initial)?))
            }
            ModelFile::Unitary(f) => {
                let partition = f.partition.iter().map(|&c| f.alphabet.index_of(c)).collect::<Result<Vec<_>>>()?;
                let initial = initial_from_json(&f.initial, f.state_dim)?;
                Ok(LoadedModel::Unitary(UnitaryQhmm::new(
                    f.alphabet,
                    f.state_dim,
                    f.emission_dim,
                    matrix_from_json(&f.unitary, "unitary")?,
                    matrix_from_json(&f.basis, "measurement basis")?,
                    partition,
                    f.reset_index,
                    Some(initial),
                )?))
            }
        }
    }
}

impl From<&LoadedModel> for ModelFile {
    fn from(model: &LoadedModel) -> Self {
        match model {
            LoadedModel::Classical(m) => ModelFile::Classical(HmmFile {
                states: m.n_states(),
                alphabet: GenerativeModel::alphabet(m).clone(),
                transition: m.transition_rows(),
                emission: m.emission_rows(),
                initial: m.initial().to_vec(),
            }),
            LoadedModel::Channel(q) => ModelFile::Channel(QhmmFile {
                alphabet: q.alphabet().clone(),
                dim: q.dim(),
                channels: q
                    .channels()
                    .iter()
                    .map(|ch| ChannelFile {
                        symbol: q.alphabet().symbol(ch.symbol),
                        kraus: ch.kraus.iter().map(matrix_to_json).collect(),
                    })
                    .collect(),
                initial: Some(matrix_to_json(q.initial().matrix())),
            }),
            LoadedModel::Unitary(u) => ModelFile::Unitary(UnitaryFile {
                alphabet: u.alphabet().clone(),
                state_dim: u.state_dim(),
                emission_dim: u.emission_dim(),
                unitary: matrix_to_json(u.unitary()),
                basis: matrix_to_json(u.basis()),
                partition: u.partition().iter().map(|&a| u.alphabet().symbol(a)).collect(),
                reset_index: u.reset_index(),
                initial: Some(matrix_to_json(u.initial().matrix())),
            }),
        }
    }
}

pub fn parse_model(json: &str) -> Result<LoadedModel> {
    serde_json::from_str::<ModelFile>(json)?.try_into()
}

pub fn model_to_json(model: &LoadedModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from(model))?)
}

/// Names accepted in place of a model path.
pub const BUILTIN_MODELS: &[&str] = &["market4", "random:N:M[:SEED]"];

fn random_reference(spec: &str) -> Result<LoadedModel> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("expected random:N:M[:SEED], got {spec:?}"));
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let n: usize = parts[1].parse().map_err(|_| bad())?;
    let m: usize = parts[2].parse().map_err(|_| bad())?;
    let seed: u64 = match parts.get(3) {
        Some(s) => s.parse().map_err(|_| bad())?,
        None => 0,
    };
    if n == 0 {
        return Err(bad());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(LoadedModel::Unitary(random_qhmm(n, m, Alphabet::binary(), None, &mut rng)?))
}

/// Resolves a built-in name, a `random:N:M[:SEED]` unitary model over `{0, 1}`,
/// or reads a JSON model file.
pub fn load_model(reference: &str) -> Result<LoadedModel> {
    match reference {
        "market4" => Ok(LoadedModel::Classical(ClassicalHmm::market4())),
        r if r.starts_with("random:") => random_reference(r),
        path => parse_model(&fs::read_to_string(Path::new(path))?),
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Rows `sequence, probability`.
pub fn distribution_csv(dist: &SequenceDistribution, alphabet: &Alphabet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sequence", "probability"])?;
    for (y, p) in dist.iter() {
        w.write_record([alphabet.format(&y), format!("{p:.17e}")])?;
    }
    finish(w)
}

/// Labels on the first row, then the matrix.
pub fn gram_csv(gram: &GramMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&gram.labels)?;
    for i in 0..gram.n {
        w.write_record(gram.row(i).iter().map(|v| format!("{v:.17e}")))?;
    }
    finish(w)
}

/// One histogram bin for a named configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub configuration: String,
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
}

pub fn histogram_csv(rows: &[HistogramRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["configuration", "bin_low", "bin_high", "count"])?;
    for r in rows {
        w.write_record([r.configuration.clone(), r.bin_low.to_string(), r.bin_high.to_string(), r.count.to_string()])?;
    }
    finish(w)
}

pub fn dataset_csv(ds: &LabeledDataset, alphabet: &Alphabet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sequence", "class"])?;
    for (y, c) in ds.sequences.iter().zip(&ds.classes) {
        w.write_record([alphabet.format(y), c.to_string()])?;
    }
    finish(w)
}

pub fn shot_record_csv(record: &ShotRecord) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["outcome", "count"])?;
    for (outcome, count) in &record.counts {
        w.write_record([outcome.clone(), count.to_string()])?;
    }
    finish(w)
}

fn ci(c: (f64, f64)) -> String {
    format!("[{:.3}, {:.3}]", c.0, c.1)
}

/// Results table: `Classifier, Kernel, In Sample, CI, Out Sample, CI`.
/// Optionally appends a random-forest row marked as not implemented.
pub fn eval_csv(reports: &[EvalReport], include_rfs: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["Classifier", "Kernel", "In Sample", "CI", "Out Sample", "CI"])?;
    for r in reports {
        w.write_record([
            r.classifier.to_string(),
            r.kernel.to_string(),
            format!("{:.3}", r.in_sample_accuracy),
            ci(r.in_ci),
            format!("{:.3}", r.out_sample_accuracy),
            ci(r.out_ci),
        ])?;
    }
    if include_rfs {
        w.write_record(["RFS", "-", "not implemented", "-", "not implemented", "-"])?;
    }
    finish(w)
}

/// Reads a CSV body, skipping `#` comment lines; the first row is returned as headers.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).from_reader(text.as_bytes());
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((headers, rows))
}
