//! Dense statevector and density-matrix engine.
//!
//! States are small (total dimension at most a few dozen), so everything is
//! stored densely. A [`Ket`] carries the list of subsystem dimensions; the
//! amplitude at multi-index `(i_0, .., i_{k-1})` lives at the row-major
//! offset `((i_0 * d_1 + i_1) * d_2 + ..)`, so subsystem 0 is the most
//! significant digit.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the norm of every ket.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Tolerance on orthonormality and unitarity checks.
pub const UNITARY_TOLERANCE: f64 = 1e-10;
/// Tolerance on Hermiticity, positivity and trace of density matrices.
pub const DENSITY_TOLERANCE: f64 = 1e-12;
/// Measurement branches below this weight are never sampled.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-15;
/// Schmidt terms with squared coefficient below this are dropped.
pub const SCHMIDT_DROP_THRESHOLD: f64 = 1e-14;

/// A normalized pure state over a list of subsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    amplitudes: Vec<C64>,
    dims: Vec<usize>,
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidState(format!("bad subsystem dims {dims:?}")));
    }
    let total: usize = dims.iter().product();
    if total != len {
        return Err(Error::DimensionMismatch {
            expected: total,
            actual: len,
        });
    }
    Ok(())
}

fn norm_of(amplitudes: &[C64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

impl Ket {
    /// Builds a ket, rejecting inputs whose norm differs from 1 by more than
    /// [`NORM_TOLERANCE`].
    pub fn new(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Ket { amplitudes, dims })
    }

    /// Builds a ket after rescaling to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if !norm.is_finite() || norm < f64::MIN_POSITIVE.sqrt() {
            return Err(Error::InvalidState("cannot normalize a null vector".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Ket { amplitudes, dims })
    }

    /// Single-subsystem ket from real amplitudes.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect(),
            vec![amplitudes.len()],
        )
    }

    /// Computational basis state `|index⟩` of a `dim`-level system.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidSubsystem { index, count: dim });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Ket {
            amplitudes,
            dims: vec![dim],
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    /// `⟨self|other⟩`, ignoring subsystem structure.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Equality modulo a global phase: `1 - |⟨a|b⟩| <= tol`.
    pub fn approx_eq_up_to_phase(&self, other: &Ket, tol: f64) -> bool {
        self.inner(other)
            .map(|ip| 1.0 - ip.norm() <= tol)
            .unwrap_or(false)
    }

    /// Same amplitudes, reinterpreted as one flat subsystem.
    pub fn flattened(&self) -> Ket {
        Ket {
            amplitudes: self.amplitudes.clone(),
            dims: vec![self.dim()],
        }
    }
}

/// Splits the amplitude index space around `target` into
/// `(left, target_dim, right)` strides.
fn layout(dims: &[usize], target: usize) -> Result<(usize, usize, usize)> {
    if target >= dims.len() {
        return Err(Error::InvalidSubsystem {
            index: target,
            count: dims.len(),
        });
    }
    let left = dims[..target].iter().product();
    let right = dims[target + 1..].iter().product();
    Ok((left, dims[target], right))
}

/// Kronecker product; dims are concatenated.
pub fn tensor(a: &Ket, b: &Ket) -> Ket {
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    let dims = a.dims.iter().chain(&b.dims).copied().collect();
    Ket { amplitudes, dims }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity within
    /// [`DENSITY_TOLERANCE`].
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix { entries };
        rho.check()?;
        Ok(rho)
    }

    pub fn from_ket(ket: &Ket) -> Self {
        let n = ket.dim();
        let a = &ket.amplitudes;
        DensityMatrix {
            entries: DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj()),
        }
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Real eigenvalues, ascending order not guaranteed.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_entry_distance(&self, other: &DensityMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn check(&self) -> Result<()> {
        let m = &self.entries;
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > DENSITY_TOLERANCE {
                    return Err(Error::InvalidState("density matrix not Hermitian".into()));
                }
            }
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOLERANCE || tr.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        if let Some(min) = self.eigenvalues().into_iter().reduce(f64::min) {
            if min < -DENSITY_TOLERANCE {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(())
    }
}

/// A square matrix with `U†U = I` within [`UNITARY_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    entries: DMatrix<C64>,
}

fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let product = m.adjoint() * m;
    let identity = DMatrix::<C64>::identity(n, n);
    (product - identity)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

impl UnitaryMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::NotUnitary(f64::INFINITY));
        }
        let defect = unitarity_defect(&entries);
        if defect > UNITARY_TOLERANCE {
            return Err(Error::NotUnitary(defect));
        }
        Ok(UnitaryMatrix { entries })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix {
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Unitary from real row-major entries.
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: rows.len(),
            });
        }
        let entries = rows.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
        Self::new(DMatrix::from_row_slice(dim, dim, &entries))
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix {
            entries: self.entries.adjoint(),
        }
    }

    /// Column `k` as a single-subsystem ket.
    pub fn column(&self, k: usize) -> Ket {
        Ket {
            amplitudes: self.entries.column(k).iter().copied().collect(),
            dims: vec![self.dim()],
        }
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.entries)
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(UnitaryMatrix {
            entries: &self.entries * &other.entries,
        })
    }
}

/// Applies `I ⊗ .. ⊗ U ⊗ .. ⊗ I` with `U` acting on subsystem `target`.
pub fn apply_on_subsystem(u: &UnitaryMatrix, target: usize, state: &Ket) -> Result<Ket> {
    let (left, d, right) = layout(&state.dims, target)?;
    if u.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: u.dim(),
        });
    }
    let m = &u.entries;
    let src = &state.amplitudes;
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for l in 0..left {
        for r in 0..right {
            for i in 0..d {
                out[(l * d + i) * right + r] =
                    (0..d).map(|j| m[(i, j)] * src[(l * d + j) * right + r]).sum();
            }
        }
    }
    Ket::normalized(out, state.dims.clone())
}

/// Reduced density matrix of subsystem `keep`.
pub fn partial_trace(state: &Ket, keep: usize) -> Result<DensityMatrix> {
    if state.dims.len() < 2 {
        return Err(Error::InvalidState(
            "partial trace needs at least two subsystems".into(),
        ));
    }
    let (left, d, right) = layout(&state.dims, keep)?;
    let a = &state.amplitudes;
    let mut rho = DMatrix::from_fn(d, d, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for l in 0..left {
            for r in 0..right {
                acc += a[(l * d + i) * right + r] * a[(l * d + j) * right + r].conj();
            }
        }
        acc
    });
    // symmetrize away rounding noise
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    Ok(DensityMatrix { entries: rho })
}

/// Born probabilities of each computational-basis outcome on `target`.
pub fn outcome_probabilities(state: &Ket, target: usize) -> Result<Vec<f64>> {
    let (left, d, right) = layout(&state.dims, target)?;
    let a = &state.amplitudes;
    Ok((0..d)
        .map(|i| {
            (0..left)
                .flat_map(|l| (0..right).map(move |r| (l * d + i) * right + r))
                .map(|idx| a[idx].norm_sqr())
                .sum()
        })
        .collect())
}

/// Normalized post-measurement state for a fixed outcome, with its weight.
pub fn collapse(state: &Ket, target: usize, outcome: usize) -> Result<(Ket, f64)> {
    let (left, d, right) = layout(&state.dims, target)?;
    if outcome >= d {
        return Err(Error::InvalidSubsystem {
            index: outcome,
            count: d,
        });
    }
    let mut amps = state.amplitudes.clone();
    for l in 0..left {
        for i in (0..d).filter(|&i| i != outcome) {
            for r in 0..right {
                amps[(l * d + i) * right + r] = C64::new(0.0, 0.0);
            }
        }
    }
    let weight = norm_of(&amps).powi(2);
    if weight < MIN_BRANCH_PROBABILITY {
        return Err(Error::InvalidState(format!(
            "outcome {outcome} has negligible weight {weight:e}"
        )));
    }
    Ok((Ket::normalized(amps, state.dims.clone())?, weight))
}

/// Result of a computational-basis measurement of one subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: usize,
    pub post_state: Ket,
    pub probability: f64,
}

/// Samples a computational-basis measurement of `target` by the Born rule.
pub fn measure_subsystem<R: Rng + ?Sized>(
    state: &Ket,
    target: usize,
    rng: &mut R,
) -> Result<Measurement> {
    let probs = outcome_probabilities(state, target)?;
    let total: f64 = probs
        .iter()
        .filter(|&&p| p >= MIN_BRANCH_PROBABILITY)
        .sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut outcome = None;
    for (i, &p) in probs.iter().enumerate() {
        if p < MIN_BRANCH_PROBABILITY {
            continue;
        }
        acc += p;
        outcome = Some(i);
        if u < acc {
            break;
        }
    }
    let outcome = outcome.ok_or_else(|| Error::InvalidState("no measurable branch".into()))?;
    let (post_state, probability) = collapse(state, target, outcome)?;
    Ok(Measurement {
        outcome,
        post_state,
        probability,
    })
}

/// Applies `|ref⟩⟨ref|` (or its complement) to `target`, unnormalized.
fn project_on_reference(
    state: &Ket,
    target: usize,
    reference: &Ket,
    keep_reference: bool,
) -> Result<Vec<C64>> {
    let (left, d, right) = layout(&state.dims, target)?;
    if reference.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: reference.dim(),
        });
    }
    let a = &state.amplitudes;
    let rf = &reference.amplitudes;
    let mut out = if keep_reference {
        vec![C64::new(0.0, 0.0); a.len()]
    } else {
        a.clone()
    };
    for l in 0..left {
        for r in 0..right {
            let overlap: C64 = (0..d).map(|j| rf[j].conj() * a[(l * d + j) * right + r]).sum();
            for (i, &ri) in rf.iter().enumerate() {
                let idx = (l * d + i) * right + r;
                if keep_reference {
                    out[idx] = ri * overlap;
                } else {
                    out[idx] -= ri * overlap;
                }
            }
        }
    }
    Ok(out)
}

/// Probability that the binary test `{|ref⟩⟨ref|, I - |ref⟩⟨ref|}` on
/// `target` passes.
pub fn test_pass_probability(state: &Ket, target: usize, reference: &Ket) -> Result<f64> {
    let projected = project_on_reference(state, target, reference, true)?;
    Ok(norm_of(&projected).powi(2).clamp(0.0, 1.0))
}

/// Binary projective test of `target` against `reference`; returns the
/// verdict and the collapsed state.
pub fn projective_test<R: Rng + ?Sized>(
    state: &Ket,
    target: usize,
    reference: &Ket,
    rng: &mut R,
) -> Result<(bool, Ket)> {
    let p = test_pass_probability(state, target, reference)?;
    let pass = if p < MIN_BRANCH_PROBABILITY {
        false
    } else if 1.0 - p < MIN_BRANCH_PROBABILITY {
        true
    } else {
        rng.random::<f64>() < p
    };
    let post = project_on_reference(state, target, reference, pass)?;
    Ok((pass, Ket::normalized(post, state.dims.clone())?))
}

/// `Σ_k c_k |a_k⟩ ⊗ |b_k⟩` for a bipartite state.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<Ket>,
    pub basis_b: Vec<Ket>,
}

impl SchmidtDecomposition {
    /// Rebuilds the bipartite state from its terms.
    pub fn reconstruct(&self) -> Result<Ket> {
        let (da, db) = match (self.basis_a.first(), self.basis_b.first()) {
            (Some(a), Some(b)) => (a.dim(), b.dim()),
            _ => return Err(Error::InvalidState("empty decomposition".into())),
        };
        let mut amps = vec![C64::new(0.0, 0.0); da * db];
        for ((c, a), b) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            for (slot, z) in amps.iter_mut().zip(tensor(a, b).amplitudes) {
                *slot += z * c;
            }
        }
        Ket::normalized(amps, vec![da, db])
    }
}

fn bipartite_dims(state: &Ket) -> Result<(usize, usize)> {
    match state.dims[..] {
        [da, db] => Ok((da, db)),
        _ => Err(Error::InvalidState(format!(
            "expected a bipartite state, got dims {:?}",
            state.dims
        ))),
    }
}

/// Eigenbasis of the second subsystem's reduced state, sorted by
/// descending eigenvalue.
pub fn reduced_eigenbasis(state: &Ket) -> Result<Vec<(f64, Ket)>> {
    bipartite_dims(state)?;
    let rho = partial_trace(state, 1)?;
    let eig = rho.entries.clone().symmetric_eigen();
    let mut pairs = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&lambda, v)| {
            let ket = Ket::normalized(v.iter().copied().collect(), vec![v.len()])?;
            Ok((lambda, ket))
        })
        .collect::<Result<Vec<_>>>()?;
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(pairs)
}

/// Schmidt terms of a bipartite state relative to a fixed orthonormal basis
/// of the second subsystem: `|a_k⟩ = (I ⊗ ⟨b_k|)|state⟩ / c_k`.
///
/// Terms keep the order of `basis_b`; those with `c_k² <
/// SCHMIDT_DROP_THRESHOLD` are dropped. The result is a true Schmidt
/// decomposition only when `basis_b` diagonalizes the reduced state.
pub fn schmidt_in_basis(state: &Ket, basis_b: &[Ket]) -> Result<SchmidtDecomposition> {
    let (da, db) = bipartite_dims(state)?;
    let amps = &state.amplitudes;
    let mut out = SchmidtDecomposition {
        coefficients: Vec::new(),
        basis_a: Vec::new(),
        basis_b: Vec::new(),
    };
    for b in basis_b {
        if b.dim() != db {
            return Err(Error::DimensionMismatch {
                expected: db,
                actual: b.dim(),
            });
        }
        let v: Vec<C64> = (0..da)
            .map(|a| {
                (0..db)
                    .map(|i| b.amplitudes[i].conj() * amps[a * db + i])
                    .sum()
            })
            .collect();
        let c = norm_of(&v);
        if c * c < SCHMIDT_DROP_THRESHOLD {
            continue;
        }
        out.coefficients.push(c);
        out.basis_a.push(Ket::normalized(v, vec![da])?);
        out.basis_b.push(b.clone());
    }
    Ok(out)
}

/// Schmidt decomposition with coefficients in descending order.
pub fn schmidt_decompose(state: &Ket) -> Result<SchmidtDecomposition> {
    let basis: Vec<Ket> = reduced_eigenbasis(state)?
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    let mut dec = schmidt_in_basis(state, &basis)?;
    // eigenvalue order and projected-norm order can disagree by rounding
    let mut order: Vec<usize> = (0..dec.coefficients.len()).collect();
    order.sort_by(|&i, &j| dec.coefficients[j].total_cmp(&dec.coefficients[i]));
    dec = SchmidtDecomposition {
        coefficients: order.iter().map(|&i| dec.coefficients[i]).collect(),
        basis_a: order.iter().map(|&i| dec.basis_a[i].clone()).collect(),
        basis_b: order.iter().map(|&i| dec.basis_b[i].clone()).collect(),
    };
    Ok(dec)
}

/// Largest entrywise deviation of the Gram matrix of `vectors` from the
/// identity.
pub fn orthonormality_defect(vectors: &[Ket]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, u) in vectors.iter().enumerate() {
        for (j, v) in vectors.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            let dev = match u.inner(v) {
                Ok(ip) => (ip - C64::new(expected, 0.0)).norm(),
                Err(_) => f64::INFINITY,
            };
            worst = worst.max(dev);
        }
    }
    worst
}

/// Extends orthonormal `columns` to a `dim × dim` unitary whose first
/// columns are the inputs. Remaining columns come from Gram-Schmidt over
/// the computational basis, picking the largest residual first.
pub fn complete_to_unitary(columns: &[Ket], dim: usize) -> Result<UnitaryMatrix> {
    if dim == 0 || columns.len() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: columns.len(),
        });
    }
    if let Some(bad) = columns.iter().find(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    let defect = orthonormality_defect(columns);
    if defect > UNITARY_TOLERANCE {
        return Err(Error::NotOrthonormal(defect));
    }

    let mut basis: Vec<Vec<C64>> = columns.iter().map(|c| c.amplitudes.clone()).collect();
    let residual = |e: usize, basis: &[Vec<C64>]| {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[e] = C64::new(1.0, 0.0);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in basis {
                let ip: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= ip * y;
                }
            }
        }
        v
    };
    while basis.len() < dim {
        // first index wins ties, so empty input completes to the identity
        let best = (0..dim)
            .map(|e| residual(e, &basis))
            .reduce(|best, v| if norm_of(&v) > norm_of(&best) { v } else { best })
            .expect("dim > 0");
        let n = norm_of(&best);
        basis.push(best.into_iter().map(|z| z / n).collect());
    }
    let entries = DMatrix::from_fn(dim, dim, |i, j| basis[j][i]);
    UnitaryMatrix::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> Ket {
        Ket::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2])
            .map(|k| Ket::new(k.amplitudes, vec![2, 2]).unwrap())
            .unwrap()
    }

    fn random_ket(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> Ket {
        let n = dims.iter().product();
        let amps = (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        Ket::normalized(amps, dims).unwrap()
    }

    #[test]
    fn ket_rejects_bad_norm_and_dims() {
        assert!(Ket::from_real(&[1.0, 1.0]).is_err());
        assert!(matches!(
            Ket::new(vec![C64::new(1.0, 0.0)], vec![2]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Ket::normalized(vec![C64::new(0.0, 0.0); 2], vec![2]).is_err());
    }

    #[test]
    fn tensor_basis_products() {
        let zero = Ket::basis(2, 0).unwrap();
        let t = tensor(&zero, &zero);
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(t.amplitudes()[1..].iter().all(|z| z.norm() == 0.0));

        let plus = Ket::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let t = tensor(&plus, &zero);
        let expect = [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0];
        for (z, e) in t.amplitudes().iter().zip(expect) {
            assert!((z - C64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn apply_identity_and_bit_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_ket(&mut rng, vec![2]);
        let state = tensor(&Ket::basis(2, 0).unwrap(), &psi);
        let same = apply_on_subsystem(&UnitaryMatrix::identity(2), 1, &state).unwrap();
        assert_eq!(same, state);

        let x = UnitaryMatrix::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let flipped = apply_on_subsystem(&x, 0, &state).unwrap();
        let expect = tensor(&Ket::basis(2, 1).unwrap(), &psi);
        assert!(flipped.approx_eq_up_to_phase(&expect, 1e-14));
    }

    #[test]
    fn apply_rejects_mismatched_dimension() {
        let state = tensor(&Ket::basis(4, 0).unwrap(), &Ket::basis(2, 0).unwrap());
        assert!(matches!(
            apply_on_subsystem(&UnitaryMatrix::identity(2), 0, &state),
            Err(Error::DimensionMismatch { expected: 4, actual: 2 })
        ));
        assert!(matches!(
            apply_on_subsystem(&UnitaryMatrix::identity(2), 2, &state),
            Err(Error::InvalidSubsystem { .. })
        ));
    }

    #[test]
    fn partial_trace_bell_and_product() {
        for keep in 0..2 {
            let rho = partial_trace(&bell(), keep).unwrap();
            rho.check().unwrap();
            let m = rho.entries();
            assert!((m[(0, 0)].re - 0.5).abs() < 1e-15);
            assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
            assert!(m[(0, 1)].norm() < 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_ket(&mut rng, vec![3]);
        let b = random_ket(&mut rng, vec![2]);
        let rho = partial_trace(&tensor(&a, &b), 1).unwrap();
        let expect = DensityMatrix::from_ket(&b);
        assert!(rho.max_entry_distance(&expect) < 1e-14);
    }

    #[test]
    fn partial_trace_errors() {
        assert!(partial_trace(&Ket::basis(2, 0).unwrap(), 0).is_err());
        assert!(matches!(
            partial_trace(&bell(), 2),
            Err(Error::InvalidSubsystem { .. })
        ));
    }

    #[test]
    fn measuring_eigenstate_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let zero = Ket::basis(2, 0).unwrap();
        for _ in 0..100 {
            let m = measure_subsystem(&zero, 0, &mut rng).unwrap();
            assert_eq!(m.outcome, 0);
            assert_eq!(m.probability, 1.0);
            assert_eq!(m.post_state, zero);
        }
    }

    #[test]
    fn bell_halves_are_correlated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let first = measure_subsystem(&bell(), 0, &mut rng).unwrap();
            assert!((first.probability - 0.5).abs() < 1e-12);
            let second = measure_subsystem(&first.post_state, 1, &mut rng).unwrap();
            assert_eq!(first.outcome, second.outcome);
            assert!((second.probability - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negligible_branch_is_never_sampled() {
        let tiny = 1e-9;
        let ket = Ket::normalized(
            vec![C64::new(1.0, 0.0), C64::new(tiny, 0.0)],
            vec![2],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert_eq!(measure_subsystem(&ket, 0, &mut rng).unwrap().outcome, 0);
        }
        assert!(collapse(&ket, 0, 1).is_err());
    }

    #[test]
    fn projective_test_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_ket(&mut rng, vec![2]);
        let (pass, post) = projective_test(&psi, 0, &psi, &mut rng).unwrap();
        assert!(pass);
        assert!(post.approx_eq_up_to_phase(&psi, 1e-14));

        let a = psi.amplitudes();
        let orth = Ket::normalized(vec![-a[1].conj(), a[0].conj()], vec![2]).unwrap();
        assert!(test_pass_probability(&psi, 0, &orth).unwrap() < 1e-15);
        for _ in 0..50 {
            assert!(!projective_test(&psi, 0, &orth, &mut rng).unwrap().0);
        }
        assert!(matches!(
            projective_test(&psi, 0, &Ket::basis(3, 0).unwrap(), &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projective_test_collapse_on_entangled_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let zero = Ket::basis(2, 0).unwrap();
        let (pass, post) = projective_test(&bell(), 1, &zero, &mut rng).unwrap();
        let expect = if pass {
            tensor(&zero, &zero)
        } else {
            tensor(&Ket::basis(2, 1).unwrap(), &Ket::basis(2, 1).unwrap())
        };
        assert!(post.approx_eq_up_to_phase(&expect, 1e-14));
    }

    #[test]
    fn schmidt_product_and_bell() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let prod = tensor(&random_ket(&mut rng, vec![4]), &random_ket(&mut rng, vec![2]));
        let dec = schmidt_decompose(&prod).unwrap();
        assert_eq!(dec.coefficients.len(), 1);
        assert!((dec.coefficients[0] - 1.0).abs() < 1e-12);

        let dec = schmidt_decompose(&bell()).unwrap();
        assert_eq!(dec.coefficients.len(), 2);
        for c in &dec.coefficients {
            assert!((c - FRAC_1_SQRT_2).abs() < 1e-12);
        }
        assert!(dec.reconstruct().unwrap().approx_eq_up_to_phase(&bell(), 1e-12));
    }

    #[test]
    fn schmidt_rejects_tripartite() {
        let k = tensor(&bell(), &Ket::basis(2, 0).unwrap());
        assert!(schmidt_decompose(&k).is_err());
    }

    #[test]
    fn completion_identity_and_forced_column() {
        assert_eq!(complete_to_unitary(&[], 2).unwrap(), UnitaryMatrix::identity(2));

        let one = Ket::basis(2, 1).unwrap();
        let u = complete_to_unitary(std::slice::from_ref(&one), 2).unwrap();
        assert_eq!(u.column(0), one);
        assert!(u.unitarity_defect() < 1e-15);
    }

    #[test]
    fn completion_rejects_non_orthonormal() {
        let a = Ket::basis(2, 0).unwrap();
        let b = Ket::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(matches!(
            complete_to_unitary(&[a.clone(), b], 2),
            Err(Error::NotOrthonormal(_))
        ));
        assert!(complete_to_unitary(&[a.clone(), a.clone(), a], 2).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let bad = DMatrix::from_row_slice(2, 2, &[
            C64::new(1.5, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-0.5, 0.0),
        ]);
        assert!(DensityMatrix::new(bad).is_err());
        let non_herm = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.5, 0.0),
            C64::new(0.1, 0.0),
            C64::new(0.2, 0.0),
            C64::new(0.5, 0.0),
        ]);
        assert!(DensityMatrix::new(non_herm).is_err());
    }
}
