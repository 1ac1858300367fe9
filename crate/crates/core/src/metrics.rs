//! Divergences between quantum states and between forward distributions.

use crate::hmm::{SequenceDistribution, Symbol};
#[cfg(test)]
use crate::linalg::ComplexMatrix;
use crate::qhmm::{DensityOperator, Qhmm};
use crate::tasks::Task;
use crate::{Error, Result};

/// Slack allowed when checking the distinguishability bounds.
pub const BOUND_SLACK: f64 = 1e-9;

/// Distribution of the next `k` symbols from a given state.
pub type ForwardDistribution = SequenceDistribution;

fn same_dim(r1: &DensityOperator, r2: &DensityOperator) -> Result<()> {
    if r1.dim() == r2.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("states of dimension {} and {}", r1.dim(), r2.dim())))
    }
}

/// `½ tr|ρ₁ − ρ₂|`.
pub fn trace_distance(r1: &DensityOperator, r2: &DensityOperator) -> Result<f64> {
    same_dim(r1, r2)?;
    let diff = r1.matrix() - r2.matrix();
    let mut abs: Vec<f64> = diff.hermitian_eig()?.eigenvalues.iter().map(|l| l.abs()).collect();
    // Swapping the arguments reverses the spectrum; a fixed summation order keeps D symmetric bit for bit.
    abs.sort_by(f64::total_cmp);
    Ok((0.5 * abs.iter().sum::<f64>()).min(1.0))
}

/// `(tr √(√ρ₁ ρ₂ √ρ₁))²`, clamped to `[0, 1]`.
pub fn fidelity(r1: &DensityOperator, r2: &DensityOperator) -> Result<f64> {
    same_dim(r1, r2)?;
    let s = r1.matrix().sqrt_psd()?;
    let inner = (&(&s * r2.matrix()) * &s).hermitian_part();
    let eig = inner.hermitian_eig()?;
    // Both inputs have unit trace, so this is the rounding floor of the product;
    // anything below it would otherwise contribute a square root near 1e-8.
    let cutoff = f64::EPSILON * inner.rows() as f64;
    let root_trace: f64 = eig.eigenvalues.iter().filter(|&&l| l > cutoff).map(|l| l.sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// `2 − 2√F`, ranging over `[0, 2]`.
pub fn bures(r1: &DensityOperator, r2: &DensityOperator) -> Result<f64> {
    Ok(2.0 - 2.0 * fidelity(r1, r2)?.sqrt())
}

/// Exhaustive distribution of the next `k` symbols when `q` starts from `rho`.
pub fn forward_distribution(q: &Qhmm, rho: &DensityOperator, k: usize) -> Result<ForwardDistribution> {
    q.distribution_from(rho, k)
}

fn same_shape(d1: &ForwardDistribution, d2: &ForwardDistribution) -> Result<()> {
    if d1.length() == d2.length() && d1.alphabet_size() == d2.alphabet_size() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "horizons {} and {} (alphabets {} and {})",
            d1.length(),
            d2.length(),
            d1.alphabet_size(),
            d2.alphabet_size()
        )))
    }
}

/// `sup_z |P₁(z) − P₂(z)|`.
pub fn total_variation(d1: &ForwardDistribution, d2: &ForwardDistribution) -> Result<f64> {
    same_shape(d1, d2)?;
    Ok(d1.probs().iter().zip(d2.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// `½ Σ_z |P₁(z) − P₂(z)|`, the conventional total variation distance.
pub fn half_l1_distance(d1: &ForwardDistribution, d2: &ForwardDistribution) -> Result<f64> {
    same_shape(d1, d2)?;
    Ok(0.5 * d1.probs().iter().zip(d2.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Both sides of a bound `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck { lhs, rhs, holds: lhs <= rhs + BOUND_SLACK }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Sup distance between the `k`-step forward distributions of two states,
/// against twice their trace distance.
pub fn check_proposition1(q: &Qhmm, rho1: &DensityOperator, rho2: &DensityOperator, k: usize) -> Result<BoundCheck> {
    let d1 = forward_distribution(q, rho1, k)?;
    let d2 = forward_distribution(q, rho2, k)?;
    Ok(BoundCheck::new(total_variation(&d1, &d2)?, 2.0 * trace_distance(rho1, rho2)?))
}

/// Probability that the `k`-symbol continuation of `y` puts `y·z` in class `c`,
/// for `c ∈ {0, 1}`.
pub fn continuation_class_mass(q: &Qhmm, task: &Task, y: &[Symbol], k: usize) -> Result<[f64; 2]> {
    let rho = q.final_state(y)?;
    let dist = forward_distribution(q, &rho, k)?;
    let mut mass = [0.0; 2];
    let mut yz = y.to_vec();
    for (z, p) in dist.iter() {
        yz.truncate(y.len());
        yz.extend_from_slice(&z);
        mass[task.label(&yz)?] += p;
    }
    Ok(mass)
}

/// Difference in predictive class probabilities of two prefixes against
/// `2 |Σ|^k D(ρ_{y1}, ρ_{y2})`.
pub fn check_proposition2(q: &Qhmm, task: &Task, y1: &[Symbol], y2: &[Symbol], k: usize) -> Result<BoundCheck> {
    let m1 = continuation_class_mass(q, task, y1, k)?;
    let m2 = continuation_class_mass(q, task, y2, k)?;
    let lhs = (m1[0] - m2[0]).abs().max((m1[1] - m2[1]).abs());
    let d = trace_distance(&q.final_state(y1)?, &q.final_state(y2)?)?;
    let branches = (q.alphabet().len() as f64).powi(k as i32);
    Ok(BoundCheck::new(lhs, 2.0 * branches * d))
}

/// Frobenius distance, used by the projected kernel.
pub fn frobenius_distance(r1: &DensityOperator, r2: &DensityOperator) -> Result<f64> {
    same_dim(r1, r2)?;
    Ok((r1.matrix() - r2.matrix()).frobenius_norm())
}

/// Sum of singular values, taken as square roots of the eigenvalues of `M† M`.
#[cfg(test)]
fn nuclear_norm_via_gram(m: &ComplexMatrix) -> f64 {
    let g = &m.adjoint() * m;
    g.hermitian_eig().unwrap().eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum()
}
