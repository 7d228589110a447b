//! Dense complex linear algebra on multi-qubit registers.
//!
//! Everything here is plain `Vec<Complex64>` storage: registers never exceed
//! eight qubits, so dense arithmetic is fast enough and easy to audit.
//! Qubit 0 is the leftmost label of a ket string and maps to the most
//! significant bit of an amplitude index, so `|01⟩` has amplitude index 1.

use num_complex::Complex64;
use thiserror::Error;

/// Shorthand used throughout the crate.
pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error, PartialEq)]
pub enum QmathError {
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("qubit index {index} out of range for {qubits}-qubit register")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("duplicate qubit index {0}")]
    DuplicateIndex(usize),
    #[error("operator is {rows}x{cols}, expected {expected}x{expected}")]
    BadOperatorShape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("keep list must not be empty")]
    EmptyKeepList,
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),
    #[error("fidelity has non-negligible imaginary part {0:e}")]
    ImaginaryFidelity(f64),
}

pub type Result<T> = std::result::Result<T, QmathError>;

fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QmathError::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_indices(qubits: usize, idx: &[usize]) -> Result<()> {
    for (pos, &q) in idx.iter().enumerate() {
        if q >= qubits {
            return Err(QmathError::IndexOutOfRange { index: q, qubits });
        }
        if idx[..pos].contains(&q) {
            return Err(QmathError::DuplicateIndex(q));
        }
    }
    Ok(())
}

/// Bit of `index` that belongs to `qubit`, with qubit 0 most significant.
#[inline]
fn bit(index: usize, qubit: usize, qubits: usize) -> usize {
    (index >> (qubits - 1 - qubit)) & 1
}

/// Split a full register index into (selected-qubit bits, remaining bits).
///
/// The selected bits are packed in the order of `sel` (first entry most
/// significant); the remaining bits keep their register order.
#[inline]
fn split_index(index: usize, qubits: usize, sel: &[usize]) -> (usize, usize) {
    let mut sub = 0usize;
    for &q in sel {
        sub = (sub << 1) | bit(index, q, qubits);
    }
    let mut rest = 0usize;
    for q in 0..qubits {
        if !sel.contains(&q) {
            rest = (rest << 1) | bit(index, q, qubits);
        }
    }
    (sub, rest)
}

/// Inverse of [`split_index`]: rebuild a full index from selected and rest bits.
#[inline]
fn join_index(sub: usize, rest: usize, qubits: usize, sel: &[usize]) -> usize {
    let mut out = 0usize;
    let mut rest_pos = 0;
    let n_rest = qubits - sel.len();
    for q in 0..qubits {
        let b = if let Some(k) = sel.iter().position(|&s| s == q) {
            (sub >> (sel.len() - 1 - k)) & 1
        } else {
            let b = (rest >> (n_rest - 1 - rest_pos)) & 1;
            rest_pos += 1;
            b
        };
        out = (out << 1) | b;
    }
    out
}

/// Pure state on an n-qubit register (n = 0 is a scalar left over after
/// measuring every qubit).
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    qubits: usize,
    amps: Vec<C64>,
}

impl Ket {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let qubits = qubit_count(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QmathError::NonFinite("Ket::new"));
        }
        Ok(Self { qubits, amps })
    }

    /// Computational basis state |index⟩.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(QmathError::IndexOutOfRange {
                index,
                qubits: dim,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amp(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn scaled(&self, factor: C64) -> Ket {
        Ket {
            qubits: self.qubits,
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n <= 0.0 {
            return Err(QmathError::ZeroNorm);
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(QmathError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ket {
            qubits: self.qubits + other.qubits,
            amps,
        }
    }

    /// |self⟩⟨self| as a density matrix (no normalization applied).
    pub fn density(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix {
            qubits: self.qubits,
            entries,
        }
    }

    /// Apply `op` to the listed qubits (identity on the rest).
    pub fn apply_on_qubits(&self, op: &Operator, targets: &[usize]) -> Result<Ket> {
        check_indices(self.qubits, targets)?;
        let sub_dim = 1usize << targets.len();
        if op.rows != sub_dim || op.cols != sub_dim {
            return Err(QmathError::BadOperatorShape {
                rows: op.rows,
                cols: op.cols,
                expected: sub_dim,
            });
        }
        let mut out = vec![ZERO; self.dim()];
        let rest_dim = self.dim() >> targets.len();
        for rest in 0..rest_dim {
            for row in 0..sub_dim {
                let mut acc = ZERO;
                for col in 0..sub_dim {
                    let src = join_index(col, rest, self.qubits, targets);
                    acc += op.entry(row, col) * self.amps[src];
                }
                out[join_index(row, rest, self.qubits, targets)] = acc;
            }
        }
        Ket {
            qubits: self.qubits,
            amps: out,
        }
        .check_finite("Ket::apply_on_qubits")
    }

    /// Project the listed qubits onto `projector` and drop them from the
    /// register. Returns the outcome probability (squared norm of the
    /// projected component) and the unnormalized residual state.
    pub fn project_measure(&self, projector: &Ket, targets: &[usize]) -> Result<(f64, Ket)> {
        check_indices(self.qubits, targets)?;
        if projector.qubits != targets.len() {
            return Err(QmathError::DimensionMismatch(
                projector.dim(),
                1 << targets.len(),
            ));
        }
        let rest_qubits = self.qubits - targets.len();
        let mut amps = vec![ZERO; 1usize << rest_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let (sub, rest) = split_index(i, self.qubits, targets);
            amps[rest] += projector.amps[sub].conj() * a;
        }
        let residual = Ket {
            qubits: rest_qubits,
            amps,
        };
        Ok((residual.norm_sqr(), residual))
    }

    fn check_finite(self, op: &'static str) -> Result<Ket> {
        if self
            .amps
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(QmathError::NonFinite(op));
        }
        Ok(self)
    }
}

/// Mixed state on an n-qubit register, stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        let qubits = qubit_count(dim)?;
        if entries.len() != dim * dim {
            return Err(QmathError::DimensionMismatch(entries.len(), dim * dim));
        }
        if entries
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(QmathError::NonFinite("DensityMatrix::new"));
        }
        Ok(Self { qubits, entries })
    }

    pub fn zeros(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self {
            qubits,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: C64) {
        let dim = self.dim();
        self.entries[row * dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> DensityMatrix {
        DensityMatrix {
            qubits: self.qubits,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(QmathError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(DensityMatrix {
            qubits: self.qubits,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn normalized(&self) -> Result<DensityMatrix> {
        let t = self.trace().re;
        if t <= 0.0 {
            return Err(QmathError::ZeroNorm);
        }
        Ok(self.scaled(1.0 / t))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        for i in 0..dim {
            for j in i..dim {
                let d = self.entry(i, j) - self.entry(j, i).conj();
                if d.norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let da = self.dim();
        let db = other.dim();
        let dim = da * db;
        let mut entries = vec![ZERO; dim * dim];
        for ia in 0..da {
            for ja in 0..da {
                let a = self.entry(ia, ja);
                for ib in 0..db {
                    for jb in 0..db {
                        entries[(ia * db + ib) * dim + (ja * db + jb)] = a * other.entry(ib, jb);
                    }
                }
            }
        }
        DensityMatrix {
            qubits: self.qubits + other.qubits,
            entries,
        }
    }

    /// K ρ K† with `op` embedded on the listed qubits. For unitary `op` this
    /// is the usual conjugation; for a single Kraus operator it is one term of
    /// a channel.
    pub fn apply_on_qubits(&self, op: &Operator, targets: &[usize]) -> Result<DensityMatrix> {
        check_indices(self.qubits, targets)?;
        let sub_dim = 1usize << targets.len();
        if op.rows != sub_dim || op.cols != sub_dim {
            return Err(QmathError::BadOperatorShape {
                rows: op.rows,
                cols: op.cols,
                expected: sub_dim,
            });
        }
        let dim = self.dim();
        let rest_dim = dim >> targets.len();
        // pass 1: rows, A = K ρ
        let mut a = vec![ZERO; dim * dim];
        for col in 0..dim {
            for rest in 0..rest_dim {
                for row in 0..sub_dim {
                    let mut acc = ZERO;
                    for k in 0..sub_dim {
                        let src = join_index(k, rest, self.qubits, targets);
                        acc += op.entry(row, k) * self.entries[src * dim + col];
                    }
                    a[join_index(row, rest, self.qubits, targets) * dim + col] = acc;
                }
            }
        }
        // pass 2: columns, out = A K†
        let mut out = vec![ZERO; dim * dim];
        for row in 0..dim {
            for rest in 0..rest_dim {
                for col in 0..sub_dim {
                    let mut acc = ZERO;
                    for k in 0..sub_dim {
                        let src = join_index(k, rest, self.qubits, targets);
                        acc += a[row * dim + src] * op.entry(col, k).conj();
                    }
                    out[row * dim + join_index(col, rest, self.qubits, targets)] = acc;
                }
            }
        }
        Ok(DensityMatrix {
            qubits: self.qubits,
            entries: out,
        })
    }

    /// Project the listed qubits onto `projector` and drop them. Returns the
    /// outcome probability (trace of the projected block) and the
    /// unnormalized residual density matrix.
    pub fn project_measure(
        &self,
        projector: &Ket,
        targets: &[usize],
    ) -> Result<(f64, DensityMatrix)> {
        check_indices(self.qubits, targets)?;
        if projector.qubits != targets.len() {
            return Err(QmathError::DimensionMismatch(
                projector.dim(),
                1 << targets.len(),
            ));
        }
        let rest_qubits = self.qubits - targets.len();
        let rest_dim = 1usize << rest_qubits;
        let sub_dim = projector.dim();
        let mut entries = vec![ZERO; rest_dim * rest_dim];
        for r in 0..rest_dim {
            for c in 0..rest_dim {
                let mut acc = ZERO;
                for sr in 0..sub_dim {
                    let row = join_index(sr, r, self.qubits, targets);
                    for sc in 0..sub_dim {
                        let col = join_index(sc, c, self.qubits, targets);
                        acc += projector.amps[sr].conj()
                            * projector.amps[sc]
                            * self.entries[row * self.dim() + col];
                    }
                }
                entries[r * rest_dim + c] = acc;
            }
        }
        let residual = DensityMatrix {
            qubits: rest_qubits,
            entries,
        };
        Ok((residual.trace().re, residual))
    }

    /// Tr(Op ρ) with `op` embedded on the listed qubits. Unlike
    /// [`DensityMatrix::apply_on_qubits`], which conjugates (K ρ K†), this is
    /// the plain expectation value of a measurement operator.
    pub fn expectation(&self, op: &Operator, targets: &[usize]) -> Result<C64> {
        check_indices(self.qubits, targets)?;
        let sub_dim = 1usize << targets.len();
        if op.rows != sub_dim || op.cols != sub_dim {
            return Err(QmathError::BadOperatorShape {
                rows: op.rows,
                cols: op.cols,
                expected: sub_dim,
            });
        }
        let rest_dim = self.dim() >> targets.len();
        let mut acc = ZERO;
        for rest in 0..rest_dim {
            for s in 0..sub_dim {
                for s2 in 0..sub_dim {
                    let row = join_index(s2, rest, self.qubits, targets);
                    let col = join_index(s, rest, self.qubits, targets);
                    acc += op.entry(s, s2) * self.entries[row * self.dim() + col];
                }
            }
        }
        Ok(acc)
    }

    /// Trace out every qubit not in `keep`; surviving qubits appear in the
    /// order they are listed.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(QmathError::EmptyKeepList);
        }
        check_indices(self.qubits, keep)?;
        let keep_dim = 1usize << keep.len();
        let traced = self.qubits - keep.len();
        let traced_dim = 1usize << traced;
        let mut entries = vec![ZERO; keep_dim * keep_dim];
        for r in 0..keep_dim {
            for c in 0..keep_dim {
                let mut acc = ZERO;
                for t in 0..traced_dim {
                    let row = join_index(r, t, self.qubits, keep);
                    let col = join_index(c, t, self.qubits, keep);
                    acc += self.entries[row * self.dim() + col];
                }
                entries[r * keep_dim + c] = acc;
            }
        }
        Ok(DensityMatrix {
            qubits: keep.len(),
            entries,
        })
    }

    /// Eigenvalues assuming the matrix is Hermitian, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries, self.dim())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// ⟨ψ|ρ|ψ⟩ for a pure target state.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(QmathError::DimensionMismatch(rho.dim(), psi.dim()));
    }
    let dim = rho.dim();
    let mut acc = ZERO;
    for i in 0..dim {
        for j in 0..dim {
            acc += psi.amps[i].conj() * rho.entry(i, j) * psi.amps[j];
        }
    }
    if acc.im.abs() > 1e-10 {
        return Err(QmathError::ImaginaryFidelity(acc.im));
    }
    Ok(acc.re)
}

/// Dense complex matrix; square when applied to states.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl Operator {
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(QmathError::DimensionMismatch(entries.len(), rows * cols));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = ONE;
        }
        Self {
            rows: dim,
            cols: dim,
            entries,
        }
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    /// CNOT with the first qubit as control.
    pub fn cnot() -> Self {
        Self::from_real(
            4,
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        )
        .unwrap()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.cols + col]
    }

    pub fn adjoint(&self) -> Operator {
        let mut entries = vec![ZERO; self.entries.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries[j * self.rows + i] = self.entry(i, j).conj();
            }
        }
        Operator {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.cols != other.rows {
            return Err(QmathError::DimensionMismatch(self.cols, other.rows));
        }
        let mut entries = vec![ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    entries[i * other.cols + j] += a * other.entry(k, j);
                }
            }
        }
        Operator::new(self.rows, other.cols, entries)
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(QmathError::DimensionMismatch(
                self.rows * self.cols,
                other.rows * other.cols,
            ));
        }
        Operator::new(
            self.rows,
            self.cols,
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Operator {
        Operator {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn tensor(&self, other: &Operator) -> Operator {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut entries = vec![ZERO; rows * cols];
        for ia in 0..self.rows {
            for ja in 0..self.cols {
                let a = self.entry(ia, ja);
                for ib in 0..other.rows {
                    for jb in 0..other.cols {
                        entries[(ia * other.rows + ib) * cols + (ja * other.cols + jb)] =
                            a * other.entry(ib, jb);
                    }
                }
            }
        }
        Operator {
            rows,
            cols,
            entries,
        }
    }

    /// |k⟩⟨k| built from a ket.
    pub fn outer(ket: &Ket) -> Operator {
        let dim = ket.dim();
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                entries[i * dim + j] = ket.amps[i] * ket.amps[j].conj();
            }
        }
        Operator {
            rows: dim,
            cols: dim,
            entries,
        }
    }

    pub fn apply_to(&self, ket: &Ket) -> Result<Ket> {
        if self.cols != ket.dim() {
            return Err(QmathError::DimensionMismatch(self.cols, ket.dim()));
        }
        let mut amps = vec![ZERO; self.rows];
        for (i, out) in amps.iter_mut().enumerate() {
            for j in 0..self.cols {
                *out += self.entry(i, j) * ket.amps[j];
            }
        }
        Ket::new(amps)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        match self.adjoint().matmul(self) {
            Ok(prod) => prod.max_abs_diff(&Operator::identity(self.rows)) <= tol,
            Err(_) => false,
        }
    }

    /// Eigenvalues assuming the matrix is Hermitian, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        debug_assert_eq!(self.rows, self.cols);
        hermitian_eigenvalues(&self.entries, self.rows)
    }
}

/// Single-qubit correction elements used by the recovery searches. `XZ`
/// applies Z first, then X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Z,
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn matrix(&self) -> Operator {
        match self {
            Pauli::I => Operator::identity(2),
            Pauli::X => Operator::pauli_x(),
            Pauli::Z => Operator::pauli_z(),
            Pauli::XZ => Operator::pauli_x().matmul(&Operator::pauli_z()).unwrap(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Z => "Z",
            Pauli::XZ => "XZ",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Pauli::I)
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Eigenvalues of a Hermitian matrix via the real-symmetric embedding
/// [[Re, -Im], [Im, Re]] and cyclic Jacobi sweeps. The embedding doubles
/// every eigenvalue, so the result collapses pairs back to `dim` values.
fn hermitian_eigenvalues(entries: &[C64], dim: usize) -> Vec<f64> {
    let n = 2 * dim;
    let mut m = vec![0.0f64; n * n];
    for i in 0..dim {
        for j in 0..dim {
            let z = entries[i * dim + j];
            m[i * n + j] = z.re;
            m[i * n + (dim + j)] = -z.im;
            m[(dim + i) * n + j] = z.im;
            m[(dim + i) * n + (dim + j)] = z.re;
        }
    }
    let mut vals = real_symmetric_jacobi(&mut m, n);
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // every eigenvalue of the Hermitian matrix appears twice
    vals.into_iter().step_by(2).collect()
}

fn real_symmetric_jacobi(m: &mut [f64], n: usize) -> Vec<f64> {
    let scale: f64 = m
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}
