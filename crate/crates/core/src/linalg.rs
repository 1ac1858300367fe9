//! Dense complex linear algebra for the small operators used throughout the
//! crate (dimension at most [`MAX_DIM`]).
//!
//! Composite systems use the ordering `index = a * dim_b + b`, so the first
//! tensor factor is the high-order digit.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

use crate::{Error, Result};

/// Largest matrix dimension accepted by the eigensolver and tensor products.
pub const MAX_DIM: usize = 32;

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_CLAMP_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 64;

/// Which factor of a bipartite system to keep in [`ComplexMatrix::partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are ascending; column `i` of `eigenvectors` belongs to
/// `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Outer product `|ket><bra|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        Self::from_fn(ket.len(), bra.len(), |i, j| ket[i] * bra[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Checked matrix product.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        if rows > MAX_DIM || cols > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim: rows.max(cols), max: MAX_DIM });
        }
        Ok(Self::from_fn(rows, cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        }))
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    /// `‖M − M†‖_F / max(1, ‖M‖_F)`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev = 0.0;
        for i in 0..n {
            for j in 0..n {
                dev += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        dev.sqrt() / self.frobenius_norm().max(1.0)
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `U M U†`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> ComplexMatrix {
        &(u * self) * &u.adjoint()
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
    pub fn hermitian_eig(&self) -> Result<HermitianEigen> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigendecomposition of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim: n, max: MAX_DIM });
        }
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }

        let mut a = self.hermitian_part();
        let mut v = ComplexMatrix::identity(n);
        let norm = a.frobenius_norm();
        let mut converged = false;

        for _ in 0..MAX_SWEEPS {
            if off_diagonal_norm(&a) <= f64::EPSILON * norm {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged {
            let off = off_diagonal_norm(&a);
            if off > 1e-12 * (1.0 + norm) {
                return Err(Error::NoConvergence(MAX_SWEEPS));
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
        let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        Ok(HermitianEigen { eigenvalues, eigenvectors })
    }

    /// Principal square root of a PSD matrix.
    ///
    /// Eigenvalues down to `-1e-10` (relative to the spectral radius when it
    /// exceeds one) are clamped to zero; anything more negative is an error.
    pub fn sqrt_psd(&self) -> Result<ComplexMatrix> {
        let eig = self.hermitian_eig()?;
        let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let mut roots = Vec::with_capacity(eig.eigenvalues.len());
        for &lambda in &eig.eigenvalues {
            if lambda < -PSD_CLAMP_TOL * scale {
                return Err(Error::NotPsd(lambda));
            }
            // Rounding-level eigenvalues would otherwise leave square roots near 1e-8.
            let floor = f64::EPSILON * scale * eig.eigenvalues.len() as f64;
            roots.push(if lambda <= floor { 0.0 } else { lambda.sqrt() });
        }
        Ok(eig.reconstruct_with(&roots))
    }

    /// Traces out one factor of a `dims.0 * dims.1` bipartite operator.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<ComplexMatrix> {
        let (da, db) = dims;
        if !self.is_square() || da == 0 || db == 0 || self.rows != da * db {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix does not factor as {da}x{db}",
                self.rows, self.cols
            )));
        }
        Ok(match keep {
            Subsystem::A => ComplexMatrix::from_fn(da, da, |a, a2| {
                (0..db).map(|b| self[(a * db + b, a2 * db + b)]).sum()
            }),
            Subsystem::B => ComplexMatrix::from_fn(db, db, |b, b2| {
                (0..da).map(|a| self[(a * db + b, a * db + b2)]).sum()
            }),
        })
    }

    /// Largest entry of `U U† − I`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self * &self.adjoint();
        (&prod - &ComplexMatrix::identity(self.rows)).max_abs()
    }
}

impl HermitianEigen {
    /// `V diag(values) V†`.
    pub fn reconstruct_with(&self, values: &[f64]) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..values.len()).map(|k| v[(i, k)] * values[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(&self.eigenvalues)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Annihilates `a[p,q]` with the unitary `W = diag(1, e^{-iφ}) · R(θ)` acting on
/// the `(p, q)` plane, where `φ = arg a[p,q]` and `R` is the real Jacobi rotation
/// of the resulting real symmetric 2x2 block.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let w_pp = C64::new(c, 0.0);
    let w_pq = C64::new(s, 0.0);
    let w_qp = -phase.conj() * s;
    let w_qq = phase.conj() * c;

    let n = a.rows();
    // A <- A W
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
    }
    // A <- W† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // V <- V W
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Unchecked product; panics on dimension mismatch. Use [`ComplexMatrix::matmul`]
/// for the checked form.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum dimension mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference dimension mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn identity_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(2, &mut rng);
        assert_eq!(ComplexMatrix::identity(2).matmul(&m).unwrap(), m);
    }

    #[test]
    fn diagonal_product() {
        let p = ComplexMatrix::from_diagonal(&[2.0, 3.0])
            .matmul(&ComplexMatrix::from_diagonal(&[5.0, 7.0]))
            .unwrap();
        assert_eq!(p, ComplexMatrix::from_diagonal(&[10.0, 21.0]));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(4, &mut rng);
        let b = random_matrix(4, &mut rng);
        let mut naive = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..4 {
                    s += a[(i, k)] * b[(k, j)];
                }
                naive[(i, j)] = s;
            }
        }
        assert!(close(&a.matmul(&b).unwrap(), &naive, 1e-12));
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn tensor_basics() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.tensor(&i2).unwrap(), ComplexMatrix::identity(4));

        let p0 = ComplexMatrix::from_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_diagonal(&[0.0, 1.0]);
        let t = p0.tensor(&p1).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert_eq!(t[(i, j)], C64::new(expected, 0.0));
            }
        }
    }

    #[test]
    fn tensor_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b, c, d) = (
            random_matrix(2, &mut rng),
            random_matrix(2, &mut rng),
            random_matrix(2, &mut rng),
            random_matrix(2, &mut rng),
        );
        let lhs = &a.tensor(&b).unwrap() * &c.tensor(&d).unwrap();
        let rhs = (&a * &c).tensor(&(&b * &d)).unwrap();
        assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn tensor_too_large() {
        let a = ComplexMatrix::identity(8);
        assert!(matches!(a.tensor(&a), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn eig_diagonal() {
        let e = ComplexMatrix::from_diagonal(&[1.0, 2.0, 3.0]).hermitian_eig().unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert!(close(&e.eigenvectors, &ComplexMatrix::identity(3), 1e-15));
    }

    #[test]
    fn eig_pauli_x() {
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = x.hermitian_eig().unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_pauli_y_complex_offdiagonal() {
        let y = ComplexMatrix::from_vec(
            2,
            2,
            vec![C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        let e = y.hermitian_eig().unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!(close(&e.reconstruct(), &y, 1e-14));
    }

    #[test]
    fn eig_reconstruction_up_to_dim_32() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 2, 3, 4, 7, 16, 32] {
            let m = random_hermitian(n, &mut rng);
            let e = m.hermitian_eig().unwrap();
            let err = (&e.reconstruct() - &m).frobenius_norm();
            assert!(err <= 1e-10 * (1.0 + m.frobenius_norm()), "n={n} err={err}");
            assert!(e.eigenvectors.unitarity_deviation() <= 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            let mnorm = m.frobenius_norm();
            for (i, &lambda) in e.eigenvalues.iter().enumerate() {
                let col = e.eigenvectors.column(i);
                let mv: Vec<C64> = (0..n).map(|r| (0..n).map(|k| m[(r, k)] * col[k]).sum()).collect();
                let res: f64 = mv.iter().zip(&col).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
                assert!(res <= 1e-10 * mnorm.max(1.0));
            }
        }
    }

    #[test]
    fn eig_degenerate_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = crate::qhmm::haar_unitary(4, &mut rng);
        let m = ComplexMatrix::from_diagonal(&[1.0, 1.0, 2.0, 2.0]).conjugate_by(&u);
        let e = m.hermitian_eig().unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-12 && (e.eigenvalues[3] - 2.0).abs() < 1e-12);
        assert!(close(&e.reconstruct(), &m, 1e-12));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.hermitian_eig(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sqrt_examples() {
        let s = ComplexMatrix::from_diagonal(&[4.0, 9.0]).sqrt_psd().unwrap();
        assert!(close(&s, &ComplexMatrix::from_diagonal(&[2.0, 3.0]), 1e-14));
        let i = ComplexMatrix::identity(3);
        assert!(close(&i.sqrt_psd().unwrap(), &i, 1e-14));
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [2, 4, 8] {
            let m = random_density(n, &mut rng).scale(3.0);
            let s = m.sqrt_psd().unwrap();
            assert!(close(&(&s * &s), &m, 1e-9));
        }
    }

    #[test]
    fn sqrt_clamps_roundoff_and_rejects_negative() {
        let m = ComplexMatrix::from_diagonal(&[1.0, -1e-12]);
        let s = m.sqrt_psd().unwrap();
        assert_eq!(s[(1, 1)], C64::new(0.0, 0.0));
        let bad = ComplexMatrix::from_diagonal(&[1.0, -1e-3]);
        assert!(matches!(bad.sqrt_psd(), Err(Error::NotPsd(_))));
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(2, &mut rng);
        let sigma = random_density(3, &mut rng).scale(2.5);
        let joint = rho.tensor(&sigma).unwrap();
        let kept = joint.partial_trace((2, 3), Subsystem::A).unwrap();
        assert!(close(&kept, &rho.scale(2.5), 1e-12));
        let kept_b = joint.partial_trace((2, 3), Subsystem::B).unwrap();
        assert!(close(&kept_b, &sigma.scale(rho.trace().re), 1e-12));
    }

    #[test]
    fn partial_trace_bell_state() {
        let h = 1.0 / 2f64.sqrt();
        let bell = [C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)];
        let rho = ComplexMatrix::outer(&bell, &bell);
        let kept = rho.partial_trace((2, 2), Subsystem::A).unwrap();
        assert!(close(&kept, &ComplexMatrix::identity(2).scale(0.5), 1e-15));
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let rho = random_density(4, &mut rng);
            for keep in [Subsystem::A, Subsystem::B] {
                let r = rho.partial_trace((2, 2), keep).unwrap();
                assert!((r.trace().re - 1.0).abs() < 1e-12);
                assert!(r.hermitian_eig().unwrap().eigenvalues[0] > -1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(m.partial_trace((3, 2), Subsystem::A).is_err());
    }

    #[test]
    fn norms_and_trace() {
        assert!((ComplexMatrix::identity(2).frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ComplexMatrix::from_diagonal(&[1.0, 2.0]).trace(), C64::new(3.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(5, &mut rng);
        let lhs = m.frobenius_norm().powi(2);
        let rhs = (&m.adjoint() * &m).trace();
        assert!((lhs - rhs.re).abs() < 1e-10 && rhs.im.abs() < 1e-10);
    }

    #[test]
    fn from_vec_rejects_nan() {
        let r = ComplexMatrix::from_vec(1, 1, vec![C64::new(f64::NAN, 0.0)]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
