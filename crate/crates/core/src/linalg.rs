//! Dense complex linear algebra for small multi-qubit operators.
//!
//! Every generator in this crate is Hermitian and at most 8-dimensional, so
//! a single eigendecomposition per generator serves both the matrix
//! exponential `exp(-i s H)` and its directional (Fréchet) derivative. The
//! derivative uses the divided-difference formula in the eigenbasis, with a
//! confluent limit for nearly degenerate eigenvalue pairs.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense square complex matrix: Hamiltonians, propagators, target unitaries.
pub type CMat = DMatrix<C64>;

/// Eigenvalue gap below which the confluent limit of the divided difference
/// is used, avoiding catastrophic cancellation.
pub const DEGENERACY_GAP: f64 = 1e-9;

const EIG_MAX_ITER: usize = 10_000;

/// Pauli axis of a single-qubit factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidConfig(format!("unknown Pauli axis `{other}`"))),
        }
    }
}

/// 2x2 Pauli matrix for `axis`.
pub fn pauli(axis: Axis) -> CMat {
    let (a, b, c, d) = match axis {
        Axis::X => (C64::ZERO, C64::ONE, C64::ONE, C64::ZERO),
        Axis::Y => (C64::ZERO, -C64::I, C64::I, C64::ZERO),
        Axis::Z => (C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE),
    };
    CMat::from_row_slice(2, 2, &[a, b, c, d])
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Tensor product of Pauli factors on an `n`-qubit register, identity on
/// unlisted qubits. Qubit indices are 1-based; qubit 1 is the leftmost
/// (most significant) tensor factor.
pub fn pauli_product(n: usize, factors: &[(usize, Axis)]) -> Result<CMat> {
    let mut assigned: Vec<Option<Axis>> = vec![None; n];
    for &(qubit, axis) in factors {
        if qubit == 0 || qubit > n {
            return Err(Error::QubitOutOfRange { index: qubit, n });
        }
        if assigned[qubit - 1].replace(axis).is_some() {
            return Err(Error::DuplicateQubit(qubit));
        }
    }
    let mut out = CMat::identity(1, 1);
    for slot in &assigned {
        let factor = match slot {
            Some(axis) => pauli(*axis),
            None => CMat::identity(2, 2),
        };
        out = kron(&out, &factor);
    }
    Ok(out)
}

/// Entrywise max |a - b|.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// max |A - A^dag|, zero for exactly Hermitian input.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && hermiticity_defect(a) <= tol
}

/// max |U^dag U - I|.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let dim = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &CMat::identity(dim, dim))
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) <= tol
}

/// Frobenius inner product `tr(a^dag b)`.
pub fn frob_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition `H = V diag(values) V^dag` of a Hermitian matrix.
///
/// Cached so that the exponential, its Fréchet derivative and the adjoint
/// contraction all reuse the same factorization.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Decompose `h`, which must be Hermitian within `1e-12` entrywise.
pub fn herm_eig(h: &CMat) -> Result<HermEig> {
    let dim = h.nrows();
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let eig = h
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::EigenFailure { dim })?;
    Ok(HermEig {
        values: eig.eigenvalues.as_slice().to_vec(),
        vectors: eig.eigenvectors,
    })
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(-i s H)`.
    pub fn exp_scaled(&self, s: f64) -> CMat {
        let dim = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -s * lambda);
            for r in 0..dim {
                scaled[(r, k)] *= phase;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Divided-difference kernel for the derivative of `exp(-i s .)`:
    /// `K[j,k] = (e^{-i s l_j} - e^{-i s l_k}) / (l_j - l_k)`, with the
    /// confluent limit `-i s e^{-i s l_j}` below [`DEGENERACY_GAP`].
    fn kernel(&self, s: f64) -> CMat {
        let dim = self.dim();
        let phases: Vec<C64> = self
            .values
            .iter()
            .map(|&l| C64::from_polar(1.0, -s * l))
            .collect();
        let mut k = CMat::zeros(dim, dim);
        for j in 0..dim {
            for l in 0..dim {
                let gap = self.values[j] - self.values[l];
                k[(j, l)] = if gap.abs() < DEGENERACY_GAP {
                    -C64::I * s * phases[j]
                } else {
                    (phases[j] - phases[l]) / C64::from(gap)
                };
            }
        }
        k
    }

    /// Fréchet derivative of `A -> exp(-i s A)` at `H` in direction `dir`.
    pub fn dexp(&self, s: f64, dir: &CMat) -> CMat {
        let tilted = self.vectors.adjoint() * dir * &self.vectors;
        let weighted = tilted.component_mul(&self.kernel(s));
        &self.vectors * weighted * self.vectors.adjoint()
    }

    /// Adjoint of the step map for a real loss with cotangent `g`
    /// (convention: `dL = Re tr(g^dag dU)` for `U = exp(-i s H)`).
    ///
    /// The returned [`ExpAdjoint`] turns any Hermitian direction `D` into
    /// `dL/dtheta` for the perturbation `H + theta D`, and also carries the
    /// derivative of the loss with respect to `s` itself.
    pub fn exp_adjoint(&self, s: f64, g: &CMat) -> ExpAdjoint {
        let e = self.vectors.adjoint() * g * &self.vectors;
        // dU/ds = V (-i L) e^{-i s L} V^dag, so dL/ds only needs diag(E).
        let mut ds = 0.0;
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = -C64::I * lambda * C64::from_polar(1.0, -s * lambda);
            ds += (e[(j, j)].conj() * w).re;
        }
        let phi = e.conjugate().component_mul(&self.kernel(s));
        let weights = self.vectors.conjugate() * phi * self.vectors.transpose();
        ExpAdjoint { weights, ds }
    }
}

/// Precontracted adjoint of one step exponential; see [`HermEig::exp_adjoint`].
#[derive(Debug, Clone)]
pub struct ExpAdjoint {
    weights: CMat,
    ds: f64,
}

impl ExpAdjoint {
    /// `dL/dtheta` for the generator perturbation `H + theta dir`.
    pub fn direction_grad(&self, dir: &CMat) -> f64 {
        dir.iter()
            .zip(self.weights.iter())
            .map(|(d, q)| (d * q).re)
            .sum()
    }

    /// `dL/ds` for the step scale (duration) itself.
    pub fn scale_grad(&self) -> f64 {
        self.ds
    }
}

/// `exp(-i s H)` via Hermitian eigendecomposition.
pub fn expm_hermitian(h: &CMat, s: f64) -> Result<CMat> {
    Ok(herm_eig(h)?.exp_scaled(s))
}

/// Directional derivative of `A -> exp(-i s A)` at `h` in direction `dir`.
pub fn expm_derivative(h: &CMat, s: f64, dir: &CMat) -> Result<CMat> {
    if dir.shape() != h.shape() {
        return Err(Error::DimensionMismatch(format!(
            "direction shape {:?} does not match generator shape {:?}",
            dir.shape(),
            h.shape()
        )));
    }
    Ok(herm_eig(h)?.dexp(s, dir))
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let mut h = CMat::zeros(dim, dim);
        for i in 0..dim {
            h[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..dim {
                let v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[(i, j)] = v;
                h[(j, i)] = v.conj();
            }
        }
        h
    }

    /// Haar-ish random unitary: exponential of a random Hermitian generator.
    pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
        let h = random_hermitian(dim, rng);
        expm_hermitian(&h, rng.random_range(0.1..3.0)).unwrap()
    }
}
