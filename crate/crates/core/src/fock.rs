//! Truncated Fock-space linear algebra.
//!
//! Operators are dense `dim × dim` complex matrices in the number basis
//! |0⟩ … |dim−1⟩. Hard truncation means a†|dim−1⟩ = 0, so [a, a†] = 1 holds
//! only on the first dim−1 diagonal entries.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::analytic::geometric_population;
use crate::error::{domain, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Geometric tail mass allowed beyond the truncation.
pub const TAIL_TOLERANCE: f64 = 1e-10;
const HEADROOM: f64 = 1.25;
const MIN_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return domain(format!("Fock space needs dim >= 2, got {dim}"));
        }
        Ok(FockSpace { dim })
    }

    /// Smallest space meeting the tail rule for occupation `n_bar`.
    pub fn for_occupation(n_bar: f64) -> Result<Self> {
        FockSpace::new(required_dim(n_bar)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Geometric tail Σ_{n≥dim} ρ_nn = (n̄/(n̄+1))^dim of a thermal state.
pub fn thermal_tail(n_bar: f64, dim: usize) -> f64 {
    if n_bar == 0.0 {
        return 0.0;
    }
    (n_bar / (n_bar + 1.0)).powf(dim as f64)
}

/// Truncation rule: ceil(1.25·ln(1e−10·(n̄+1))/ln(n̄/(n̄+1))), at least 16,
/// and never below the dimension where the tail itself drops under 1e−10.
pub fn required_dim(n_bar: f64) -> Result<usize> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return domain(format!("occupation must be finite and >= 0, got {n_bar}"));
    }
    if n_bar == 0.0 {
        return Ok(MIN_DIM);
    }
    let ln_ratio = (n_bar / (n_bar + 1.0)).ln();
    let rule = (HEADROOM * (TAIL_TOLERANCE * (n_bar + 1.0)).ln() / ln_ratio).ceil() as usize;
    let bare = (TAIL_TOLERANCE.ln() / ln_ratio).ceil() as usize;
    Ok(rule.max(bare).max(MIN_DIM))
}

/// Ladder operators of a truncated mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOps {
    pub annihilate: CMatrix,
    pub create: CMatrix,
    pub number: CMatrix,
}

impl LadderOps {
    pub fn dim(&self) -> usize {
        self.annihilate.nrows()
    }
}

pub fn build_ops(space: FockSpace) -> LadderOps {
    let d = space.dim();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let create = a.adjoint();
    let number = &create * &a;
    LadderOps {
        annihilate: a,
        create,
        number,
    }
}

/// A density operator on a truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    /// Wrap `rho` after checking hermiticity, unit trace and positivity.
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() || rho.nrows() < 2 {
            return Err(Error::InvalidState(format!(
                "need a square matrix of size >= 2, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let state = DensityMatrix { rho };
        let herm = state.hermiticity_defect();
        if herm >= HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not hermitian (defect {herm:e})")));
        }
        let tr = state.trace_defect();
        if tr >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace differs from 1 by {tr:e}")));
        }
        let min = state.min_eigenvalue();
        if min <= -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(state)
    }

    /// Wrap an integrator iterate without validation.
    pub(crate) fn from_raw(rho: CMatrix) -> Self {
        DensityMatrix { rho }
    }

    /// |n⟩⟨n|.
    pub fn number_state(space: FockSpace, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return domain(format!("level {n} outside Fock space of dim {}", space.dim()));
        }
        let mut rho = CMatrix::zeros(space.dim(), space.dim());
        rho[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { rho })
    }

    pub fn vacuum(space: FockSpace) -> Self {
        let mut rho = CMatrix::zeros(space.dim(), space.dim());
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        DensityMatrix { rho }
    }

    /// |ψ⟩⟨ψ| for the normalized amplitude vector `psi`, zero-padded to dim.
    pub fn pure(space: FockSpace, psi: &[Complex64]) -> Result<Self> {
        if psi.len() > space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: psi.len(),
            });
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return domain("state vector must be nonzero");
        }
        let d = space.dim();
        let rho = CMatrix::from_fn(d, d, |m, n| match (psi.get(m), psi.get(n)) {
            (Some(a), Some(b)) => a * b.conj() / (norm * norm),
            _ => Complex64::new(0.0, 0.0),
        });
        Ok(DensityMatrix { rho })
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn trace_defect(&self) -> f64 {
        (self.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// max |ρ − ρ†| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for m in 0..d {
            for n in m..d {
                worst = worst.max((self.rho[(m, n)] - self.rho[(n, m)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the hermitian part of ρ.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().min()
    }

    /// Populations ρ_nn.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.rho[(n, n)].re).collect()
    }

    /// Largest |ρ_mn| with m ≠ n.
    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for m in 0..d {
            for n in 0..d {
                if m != n {
                    worst = worst.max(self.rho[(m, n)].norm());
                }
            }
        }
        worst
    }

    /// ⟨a†a⟩ = Σ n ρ_nn.
    pub fn mean_number(&self) -> f64 {
        (0..self.dim()).map(|n| n as f64 * self.rho[(n, n)].re).sum()
    }
}

/// Diagonal thermal state with occupation `n_bar`, renormalized on the
/// truncated basis. Fails if more than 1e−10 of the mass lies beyond it.
pub fn thermal_density(space: FockSpace, n_bar: f64) -> Result<DensityMatrix> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return domain(format!("occupation must be finite and >= 0, got {n_bar}"));
    }
    if thermal_tail(n_bar, space.dim()) >= TAIL_TOLERANCE {
        return Err(Error::InadequateTruncation {
            dim: space.dim(),
            n_bar,
            required_dim: required_dim(n_bar)?,
        });
    }
    let d = space.dim();
    let pops: Vec<f64> = (0..d).map(|n| geometric_population(n_bar, n)).collect();
    let total: f64 = pops.iter().sum();
    let mut rho = CMatrix::zeros(d, d);
    for (n, p) in pops.iter().enumerate() {
        rho[(n, n)] = Complex64::new(p / total, 0.0);
    }
    Ok(DensityMatrix { rho })
}

/// tr(obs·ρ).
pub fn expect(rho: &DensityMatrix, obs: &CMatrix) -> Result<Complex64> {
    let d = rho.dim();
    if obs.nrows() != d || obs.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: obs.nrows().max(obs.ncols()),
        });
    }
    // tr(AB) = Σ_mn A_mn B_nm without forming the product.
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..d {
        for n in 0..d {
            acc += obs[(m, n)] * rho.rho[(n, m)];
        }
    }
    Ok(acc)
}
