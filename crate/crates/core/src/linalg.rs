//! Dense complex matrix kernel for qubit-indexed states and operators.
//!
//! Matrices are row-major `2^n × 2^n` arrays of `Complex64`. The tensor-factor
//! order follows the qubit declaration order with the leftmost (first declared)
//! qubit as the most significant bit of a basis index; see [`QubitIndexing`].

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use thiserror::Error;

/// Default tolerance for equality, Hermiticity and positivity checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default capacity guard: dense simulation is limited to this many qubits
/// unless overridden (`RunConfig` / `QENT_MAX_QUBITS`).
pub const DEFAULT_MAX_QUBITS: usize = 10;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("result dimension {dim} exceeds the configured capacity of {max_dim}")]
    CapacityExceeded { dim: usize, max_dim: usize },
    #[error("bad gate target: {reason}")]
    BadTarget { reason: String },
    #[error("matrix is not Hermitian within tolerance {tol}")]
    NotHermitian { tol: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
}

/// Basis-index conventions for an `n`-qubit register.
///
/// A basis index `k ∈ [0, 2^n)` assigns to the qubit with ordinal `j`
/// (declaration order, 0-based) the bit `(k >> (n-1-j)) & 1`, i.e. the first
/// declared qubit is the most significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitIndexing {
    count: usize,
}

impl QubitIndexing {
    pub fn new(count: usize) -> Self {
        QubitIndexing { count }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        1usize << self.count
    }

    /// Bit position (shift) of the given qubit ordinal inside a basis index.
    pub fn shift(&self, qubit: usize) -> usize {
        debug_assert!(qubit < self.count);
        self.count - 1 - qubit
    }

    pub fn mask(&self, qubit: usize) -> usize {
        1usize << self.shift(qubit)
    }

    /// The bit of `qubit` in basis index `k` (`true` = 1).
    pub fn bit(&self, k: usize, qubit: usize) -> bool {
        (k >> self.shift(qubit)) & 1 == 1
    }
}

/// A square complex matrix of power-of-two dimension.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim.is_power_of_two(), "matrix dimension must be a power of two");
        CMatrix { dim, data: vec![C_ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C_ONE);
        }
        m
    }

    /// Build from a row-major slice of `dim * dim` entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Self {
        assert!(dim.is_power_of_two(), "matrix dimension must be a power of two");
        assert_eq!(entries.len(), dim * dim);
        CMatrix { dim, data: entries.to_vec() }
    }

    /// Build from real row-major entries (imaginary parts zero).
    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        let data: Vec<Complex64> = entries.iter().map(|&re| Complex64::new(re, 0.0)).collect();
        CMatrix::from_rows(dim, &data)
    }

    /// Rank-1 outer product `v v†` of an amplitude vector.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, v[i] * v[j].conj());
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits `n` with `dim = 2^n`.
    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&self, factor: Complex64) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|&z| z * factor).collect() }
    }

    pub fn scale_re(&self, factor: f64) -> CMatrix {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.set(j, i, self.get(i, j).conj());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for j in i..self.dim {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Eigenvalues of a Hermitian matrix, ascending order.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut evs = hermitian_eigen(self).0;
        evs.sort_by(|a, b| a.total_cmp(b));
        evs
    }

    /// Eigenvector for the largest eigenvalue of a Hermitian matrix,
    /// together with that eigenvalue.
    pub fn hermitian_top_eigenpair(&self) -> (f64, Vec<Complex64>) {
        let (evs, vecs) = hermitian_eigen(self);
        let mut best = 0usize;
        for (i, ev) in evs.iter().enumerate() {
            if *ev > evs[best] {
                best = i;
            }
        }
        (evs[best], vecs[best].clone())
    }
}

fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let dm = nalgebra::DMatrix::from_fn(m.dim, m.dim, |i, j| m.get(i, j));
    let se = dm.symmetric_eigen();
    let evs: Vec<f64> = se.eigenvalues.iter().copied().collect();
    let vecs: Vec<Vec<Complex64>> =
        (0..m.dim).map(|c| se.eigenvectors.column(c).iter().copied().collect()).collect();
    (evs, vecs)
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C_ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Gate and projector constants
// ---------------------------------------------------------------------------

/// Hadamard gate.
pub fn hadamard() -> CMatrix {
    CMatrix::from_real(2, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2])
}

/// Phase gate T = diag(1, e^{iπ/4}).
pub fn phase_t() -> CMatrix {
    CMatrix::from_rows(2, &[C_ONE, C_ZERO, C_ZERO, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)])
}

/// Controlled-NOT on two qubits, control = most significant index bit.
pub fn cnot() -> CMatrix {
    CMatrix::from_real(
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(
        2,
        &[C_ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), C_ZERO],
    )
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0])
}

/// Projector onto the measurement outcome read as `true` (basis index 0).
pub fn proj_true() -> CMatrix {
    CMatrix::from_real(2, &[1.0, 0.0, 0.0, 0.0])
}

/// Projector onto the measurement outcome read as `false` (basis index 1).
pub fn proj_false() -> CMatrix {
    CMatrix::from_real(2, &[0.0, 0.0, 0.0, 1.0])
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Kronecker product `a ⊗ b`; errors if the result exceeds `max_dim`.
pub fn kron(a: &CMatrix, b: &CMatrix, max_dim: usize) -> Result<CMatrix, LinalgError> {
    let dim = a.dim * b.dim;
    if dim > max_dim {
        return Err(LinalgError::CapacityExceeded { dim, max_dim });
    }
    let mut out = CMatrix::zeros(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let f = a.get(i, j);
            if f == C_ZERO {
                continue;
            }
            for k in 0..b.dim {
                for l in 0..b.dim {
                    out.set(i * b.dim + k, j * b.dim + l, f * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[CMatrix], max_dim: usize) -> Result<CMatrix, LinalgError> {
    let mut acc = CMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f, max_dim)?;
    }
    Ok(acc)
}

fn check_targets(n: usize, u: &CMatrix, targets: &[usize]) -> Result<(), LinalgError> {
    if u.dim != 1usize << targets.len() {
        return Err(LinalgError::BadTarget {
            reason: format!("gate dimension {} does not fit {} target(s)", u.dim, targets.len()),
        });
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(LinalgError::BadTarget {
                reason: format!("qubit ordinal {t} out of range for {n} qubits"),
            });
        }
        if targets[..i].contains(&t) {
            return Err(LinalgError::BadTarget { reason: format!("duplicate target ordinal {t}") });
        }
    }
    Ok(())
}

/// Embedding table: maps a gate-local basis index to the full-space bits it
/// occupies. `targets[0]` is the most significant bit of the gate index.
pub(crate) fn embed_table(idx: QubitIndexing, targets: &[usize]) -> Vec<usize> {
    let k = targets.len();
    let subdim = 1usize << k;
    let mut table = vec![0usize; subdim];
    for (x, entry) in table.iter_mut().enumerate() {
        let mut full = 0usize;
        for (m, &t) in targets.iter().enumerate() {
            if (x >> (k - 1 - m)) & 1 == 1 {
                full |= idx.mask(t);
            }
        }
        *entry = full;
    }
    table
}

/// Conjugation `E ρ E†` where `E` is `u` lifted onto the given target qubits.
///
/// Works by index arithmetic on the target bits; the lifted operator is never
/// materialized.
pub fn conjugate_gate(rho: &CMatrix, u: &CMatrix, targets: &[usize]) -> Result<CMatrix, LinalgError> {
    let n = rho.qubits();
    check_targets(n, u, targets)?;
    let idx = QubitIndexing::new(n);
    let dim = rho.dim;
    let subdim = u.dim;
    let emb = embed_table(idx, targets);
    let target_mask: usize = targets.iter().map(|&t| idx.mask(t)).sum();

    // tmp = E ρ
    let mut tmp = CMatrix::zeros(dim);
    for frame in 0..dim {
        if frame & target_mask != 0 {
            continue;
        }
        for col in 0..dim {
            for x in 0..subdim {
                let mut acc = C_ZERO;
                for y in 0..subdim {
                    acc += u.get(x, y) * rho.get(frame | emb[y], col);
                }
                tmp.set(frame | emb[x], col, acc);
            }
        }
    }

    // out = tmp E†
    let mut out = CMatrix::zeros(dim);
    for frame in 0..dim {
        if frame & target_mask != 0 {
            continue;
        }
        for row in 0..dim {
            for x in 0..subdim {
                let mut acc = C_ZERO;
                for y in 0..subdim {
                    acc += tmp.get(row, frame | emb[y]) * u.get(x, y).conj();
                }
                out.set(row, frame | emb[x], acc);
            }
        }
    }
    Ok(out)
}

/// Computational-basis projection `P_q ρ P_q` of a single qubit.
///
/// `outcome = true` keeps the bit-0 component (the projector with a single 1
/// in the top-left corner), `false` the bit-1 component.
pub fn project(rho: &CMatrix, qubit: usize, outcome: bool) -> Result<CMatrix, LinalgError> {
    let n = rho.qubits();
    if qubit >= n {
        return Err(LinalgError::BadTarget {
            reason: format!("qubit ordinal {qubit} out of range for {n} qubits"),
        });
    }
    let idx = QubitIndexing::new(n);
    let want = !outcome; // outcome=true keeps bit 0
    let mut out = CMatrix::zeros(rho.dim);
    for i in 0..rho.dim {
        if idx.bit(i, qubit) != want {
            continue;
        }
        for j in 0..rho.dim {
            if idx.bit(j, qubit) == want {
                out.set(i, j, rho.get(i, j));
            }
        }
    }
    Ok(out)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.dim).map(|i| m.get(i, i)).sum()
}

/// Löwner order: `a ⊑ b` iff every eigenvalue of `b - a` is ≥ -tol.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, LinalgError> {
    if a.dim != b.dim {
        return Err(LinalgError::DimMismatch { left: a.dim, right: b.dim });
    }
    if !a.is_hermitian(tol) || !b.is_hermitian(tol) {
        return Err(LinalgError::NotHermitian { tol });
    }
    let diff = b - a;
    Ok(diff.hermitian_eigenvalues().iter().all(|&ev| ev >= -tol))
}

/// Density-matrix predicate: Hermitian, positive semidefinite, trace ≤ 1,
/// all within `tol`.
pub fn is_density(m: &CMatrix, tol: f64) -> bool {
    if !m.is_hermitian(tol) {
        return false;
    }
    let tr = trace(m);
    if tr.im.abs() > tol || tr.re > 1.0 + tol {
        return false;
    }
    m.hermitian_eigenvalues().iter().all(|&ev| ev >= -tol)
}

/// Frobenius-norm equality within `tol`.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    assert_eq!(a.dim, b.dim, "matrix dimension mismatch");
    (a - b).frobenius_norm() <= tol
}

/// Partial trace keeping the listed qubit ordinals (in their given order).
pub fn partial_trace_keep(rho: &CMatrix, keep: &[usize]) -> CMatrix {
    let n = rho.qubits();
    let idx = QubitIndexing::new(n);
    let k = keep.len();
    let out_dim = 1usize << k;
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let traced_dim = 1usize << traced.len();
    let mut out = CMatrix::zeros(out_dim);
    for x in 0..out_dim {
        for y in 0..out_dim {
            let mut acc = C_ZERO;
            for f in 0..traced_dim {
                let mut i = 0usize;
                let mut j = 0usize;
                for (m, &q) in keep.iter().enumerate() {
                    if (x >> (k - 1 - m)) & 1 == 1 {
                        i |= idx.mask(q);
                    }
                    if (y >> (k - 1 - m)) & 1 == 1 {
                        j |= idx.mask(q);
                    }
                }
                for (m, &q) in traced.iter().enumerate() {
                    if (f >> (traced.len() - 1 - m)) & 1 == 1 {
                        i |= idx.mask(q);
                        j |= idx.mask(q);
                    }
                }
                acc += rho.get(i, j);
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Debug/JSON dump: array of rows, each entry `[re, im]`.
pub fn matrix_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = (0..m.dim)
        .map(|i| {
            let row: Vec<serde_json::Value> =
                (0..m.dim).map(|j| serde_json::json!([m.get(i, j).re, m.get(i, j).im])).collect();
            serde_json::Value::Array(row)
        })
        .collect();
    serde_json::Value::Array(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;
    const MAX_DIM: usize = 1 << DEFAULT_MAX_QUBITS;

    fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        m
    }

    fn random_density(rng: &mut ChaCha8Rng, qubits: usize) -> CMatrix {
        let dim = 1usize << qubits;
        let a = random_matrix(rng, dim);
        let psd = &a * &a.adjoint();
        let tr = trace(&psd).re;
        psd.scale_re(1.0 / tr)
    }

    #[test]
    fn kron_identities() {
        let i2 = CMatrix::identity(2);
        let i4 = CMatrix::identity(4);
        assert!(approx_eq(&kron(&i2, &i2, MAX_DIM).unwrap(), &i4, TOL));
    }

    #[test]
    fn kron_projectors() {
        // Direct 4x4 expansion: proj_true ⊗ proj_false = diag(0,1,0,0).
        let expected = CMatrix::from_real(
            4,
            &[
                0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0,
            ],
        );
        let got = kron(&proj_true(), &proj_false(), MAX_DIM).unwrap();
        assert!(approx_eq(&got, &expected, TOL));
    }

    #[test]
    fn kron_trace_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4);
            let b = random_matrix(&mut rng, 2);
            let lhs = trace(&kron(&a, &b, MAX_DIM).unwrap());
            let rhs = trace(&a) * trace(&b);
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn kron_capacity_guard() {
        let i = CMatrix::identity(1 << 6);
        match kron(&i, &i, 1 << 10) {
            Err(LinalgError::CapacityExceeded { dim, max_dim }) => {
                assert_eq!(dim, 1 << 12);
                assert_eq!(max_dim, 1 << 10);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn conjugate_hadamard_on_true() {
        // Direct 2x2 multiplication: H P^true H = [[1/2,1/2],[1/2,1/2]].
        let got = conjugate_gate(&proj_true(), &hadamard(), &[0]).unwrap();
        let expected = CMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(approx_eq(&got, &expected, TOL));
    }

    #[test]
    fn conjugate_identity_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&mut rng, 3);
        for q in 0..3 {
            let got = conjugate_gate(&rho, &CMatrix::identity(2), &[q]).unwrap();
            assert!(approx_eq(&got, &rho, TOL));
        }
    }

    /// Oracle: build the full lifted operator with explicit Kronecker products
    /// and multiply out E ρ E†.
    fn conjugate_via_kron(rho: &CMatrix, u: &CMatrix, targets: &[usize]) -> CMatrix {
        let n = rho.qubits();
        let idx = QubitIndexing::new(n);
        let dim = rho.dim();
        let mut lifted = CMatrix::zeros(dim);
        let k = targets.len();
        let subdim = u.dim();
        // lifted[i][j] = u[sub(i), sub(j)] when i and j agree off-target.
        let sub_of = |full: usize| -> usize {
            let mut s = 0usize;
            for (m, &t) in targets.iter().enumerate() {
                if idx.bit(full, t) {
                    s |= 1 << (k - 1 - m);
                }
            }
            s
        };
        let target_mask: usize = targets.iter().map(|&t| idx.mask(t)).sum();
        for i in 0..dim {
            for j in 0..dim {
                if i & !target_mask == j & !target_mask {
                    lifted.set(i, j, u.get(sub_of(i), sub_of(j)));
                }
            }
        }
        let _ = subdim;
        &(&lifted * rho) * &lifted.adjoint()
    }

    #[test]
    fn conjugate_matches_kron_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // Single-qubit gates on a 3-qubit state.
        let rho = random_density(&mut rng, 3);
        for (name, u) in [("H", hadamard()), ("T", phase_t()), ("Y", pauli_y())] {
            for q in 0..3 {
                let fast = conjugate_gate(&rho, &u, &[q]).unwrap();
                let slow = conjugate_via_kron(&rho, &u, &[q]);
                assert!(approx_eq(&fast, &slow, 1e-10), "{name} on qubit {q}");
            }
        }
        // CNot with every ordered qubit pair, up to 4 qubits.
        for n in 2..=4usize {
            let rho = random_density(&mut rng, n);
            for c in 0..n {
                for t in 0..n {
                    if c == t {
                        continue;
                    }
                    let fast = conjugate_gate(&rho, &cnot(), &[c, t]).unwrap();
                    let slow = conjugate_via_kron(&rho, &cnot(), &[c, t]);
                    assert!(approx_eq(&fast, &slow, 1e-10), "CNot({c},{t}) on {n} qubits");
                }
            }
        }
    }

    #[test]
    fn conjugate_middle_hadamard_explicit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_density(&mut rng, 3);
        let lifted = kron_all(
            &[CMatrix::identity(2), hadamard(), CMatrix::identity(2)],
            MAX_DIM,
        )
        .unwrap();
        let expected = &(&lifted * &rho) * &lifted.adjoint();
        let got = conjugate_gate(&rho, &hadamard(), &[1]).unwrap();
        assert!(approx_eq(&got, &expected, 1e-10));
    }

    #[test]
    fn conjugate_bad_targets() {
        let rho = CMatrix::identity(4);
        assert!(matches!(
            conjugate_gate(&rho, &hadamard(), &[2]),
            Err(LinalgError::BadTarget { .. })
        ));
        assert!(matches!(
            conjugate_gate(&rho, &cnot(), &[0, 0]),
            Err(LinalgError::BadTarget { .. })
        ));
        assert!(matches!(
            conjugate_gate(&rho, &cnot(), &[0]),
            Err(LinalgError::BadTarget { .. })
        ));
    }

    #[test]
    fn project_fixed_point_and_orthogonal() {
        let p = project(&proj_true(), 0, true).unwrap();
        assert!(approx_eq(&p, &proj_true(), TOL));
        let z = project(&proj_true(), 0, false).unwrap();
        assert!(approx_eq(&z, &CMatrix::zeros(2), TOL));
    }

    #[test]
    fn project_plus_state() {
        let plus = CMatrix::from_real(2, &[0.5, 0.5, 0.5, 0.5]);
        let got = project(&plus, 0, true).unwrap();
        let expected = CMatrix::from_real(2, &[0.5, 0.0, 0.0, 0.0]);
        assert!(approx_eq(&got, &expected, TOL));
    }

    #[test]
    fn project_sum_preserves_diagonal_blocks_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(&mut rng, 3);
        let idx = QubitIndexing::new(3);
        for q in 0..3 {
            let sum = &project(&rho, q, true).unwrap() + &project(&rho, q, false).unwrap();
            assert!((trace(&sum) - trace(&rho)).norm() < 1e-10);
            for i in 0..rho.dim() {
                for j in 0..rho.dim() {
                    if idx.bit(i, q) == idx.bit(j, q) {
                        assert!((sum.get(i, j) - rho.get(i, j)).norm() < 1e-12);
                    } else {
                        assert_eq!(sum.get(i, j), C_ZERO);
                    }
                }
            }
        }
    }

    #[test]
    fn trace_golden() {
        assert_eq!(trace(&CMatrix::identity(2)), Complex64::new(2.0, 0.0));
        assert_eq!(trace(&proj_true()), C_ONE);
    }

    #[test]
    fn trace_of_conjugation_vs_triple_product_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 4);
            let rho = random_density(&mut rng, 2);
            let product = &(&a * &rho) * &a.adjoint();
            // Independent oracle: tr(AρA†) = Σ_{i,k,l} A[i,k] ρ[k,l] conj(A[i,l]).
            let mut expected = C_ZERO;
            for i in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        expected += a.get(i, k) * rho.get(k, l) * a.get(i, l).conj();
                    }
                }
            }
            assert!((trace(&product) - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn loewner_golden() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_density(&mut rng, 2);
        assert!(loewner_leq(&CMatrix::zeros(4), &rho, TOL).unwrap());
        // Eigenvalues of I - P^true are {0, 1}.
        assert!(loewner_leq(&proj_true(), &CMatrix::identity(2), TOL).unwrap());
        // Eigenvalue -1 of P^false - P^true.
        assert!(!loewner_leq(&proj_true(), &proj_false(), TOL).unwrap());
    }

    #[test]
    fn loewner_rejects_non_hermitian() {
        let skew = CMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            loewner_leq(&skew, &CMatrix::identity(2), TOL),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn is_density_golden() {
        assert!(!is_density(&CMatrix::identity(2), TOL)); // trace 2
        assert!(is_density(&proj_true(), TOL));
        let mixed = &proj_true().scale_re(0.5) + &proj_false().scale_re(0.5);
        assert!(is_density(&mixed, TOL));
    }

    #[test]
    fn approx_eq_golden() {
        let a = proj_true();
        assert!(approx_eq(&a, &a, TOL));
        assert!(!approx_eq(&proj_true(), &proj_false(), TOL));
    }

    #[test]
    fn gates_are_unitary() {
        for (name, u) in [
            ("H", hadamard()),
            ("T", phase_t()),
            ("CNot", cnot()),
            ("X", pauli_x()),
            ("Y", pauli_y()),
            ("Z", pauli_z()),
        ] {
            let prod = &u.adjoint() * &u;
            assert!(
                approx_eq(&prod, &CMatrix::identity(u.dim()), 1e-12),
                "{name} is not unitary"
            );
        }
    }

    #[test]
    fn unitary_conjugation_preserves_trace_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=6usize {
            let rho = random_density(&mut rng, n);
            let q = rng.random_range(0..n);
            let got = conjugate_gate(&rho, &hadamard(), &[q]).unwrap();
            assert!((trace(&got) - trace(&rho)).norm() < 1e-10);
            assert!(got.is_hermitian(1e-10));
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_density(&mut rng, 1);
        let b = random_density(&mut rng, 1);
        let ab = kron(&a, &b, MAX_DIM).unwrap();
        assert!(approx_eq(&partial_trace_keep(&ab, &[0]), &a, 1e-10));
        assert!(approx_eq(&partial_trace_keep(&ab, &[1]), &b, 1e-10));
    }

    #[test]
    fn matrix_json_shape() {
        let v = matrix_json(&proj_true());
        assert_eq!(v[0][0][0], serde_json::json!(1.0));
        assert_eq!(v[1][1][1], serde_json::json!(0.0));
    }
}
