//! Vectorized Lindbladian construction and propagation.
//!
//! With column-stacked `vec(ρ)` the master equation
//! `ρ̇ = −i·2π[H, ρ] + Σ γ (LρL† − ½{L†L, ρ})` becomes a linear system
//! `d vec(ρ)/dt = 𝓛 vec(ρ)` with an n²×n² generator; segments with static
//! generators are propagated by `exp(𝓛 t)`. Hamiltonians are in Hz, hence
//! the 2π in the coherent part.



use super::{DensityMatrix, DynamicsError, StateSpace};
use crate::linalg::{c, expm, kron, matmul, CMat, CVec, I};

/// A decay channel `D[√rate · op]`.
#[derive(Debug, Clone)]
pub struct Collapse {
    pub op: CMat,
    pub rate: f64,
}

impl Collapse {
    pub fn new(op: CMat, rate: f64) -> Self {
        Collapse { op, rate }
    }

    /// Transfer channel |to⟩⟨from| at the given rate.
    pub fn transfer(dim: usize, from: usize, to: usize, rate: f64) -> Self {
        let mut op = CMat::zeros(dim, dim);
        op[(to, from)] = c(1.0);
        Collapse { op, rate }
    }
}

/// n²×n² generator of the master equation, angular units absorbed.
pub fn liouvillian(h: &CMat, collapses: &[Collapse]) -> CMat {
    let n = h.nrows();
    let id = CMat::identity(n, n);
    let tau = 2.0 * std::f64::consts::PI;
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * (-I * c(tau));
    for col in collapses {
        if col.rate == 0.0 {
            continue;
        }
        let ld = col.op.adjoint();
        let ldl = matmul(&ld, &col.op);
        let jump = kron(&col.op.conjugate(), &col.op);
        let damp = kron(&id, &ldl) + kron(&ldl.transpose(), &id);
        l += (jump - damp * c(0.5)) * c(col.rate);
    }
    l
}

/// Precomputed `exp(𝓛 t)` for one static segment.
#[derive(Debug, Clone)]
pub struct Propagator {
    map: CMat,
    dim: usize,
}

impl Propagator {
    pub fn from_liouvillian(l: &CMat, t: f64) -> Self {
        let n2 = l.nrows();
        let dim = (n2 as f64).sqrt().round() as usize;
        debug_assert_eq!(dim * dim, n2);
        Propagator {
            map: expm(&(l * c(t))),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, DynamicsError> {
        if rho.dim() != self.dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim,
                got: rho.dim(),
            });
        }
        let v = CVec::from_column_slice(rho.mat.as_slice());
        let out = &self.map * v;
        let mat = CMat::from_column_slice(self.dim, self.dim, out.as_slice());
        // Roundoff from the exponential can leave a ~1e-12 Hermiticity
        // defect; symmetrize so downstream invariant checks see clean states.
        let mat = (&mat + mat.adjoint()) * c(0.5);
        Ok(DensityMatrix {
            mat,
            space: rho.space,
        })
    }
}

/// Build the propagator for a Hamiltonian (Hz) and a set of channels.
pub fn propagator(h: &CMat, collapses: &[Collapse], t: f64) -> Propagator {
    Propagator::from_liouvillian(&liouvillian(h, collapses), t)
}

/// One explicit master-equation step with the validity guards of a public
/// building block: matching dimensions and `‖H‖·dt ≤ π`.
pub fn lindblad_step(
    rho: &DensityMatrix,
    h: &CMat,
    collapses: &[Collapse],
    dt: f64,
) -> Result<DensityMatrix, DynamicsError> {
    if h.nrows() != rho.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: rho.dim(),
            got: h.nrows(),
        });
    }
    for col in collapses {
        if col.op.nrows() != rho.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: rho.dim(),
                got: col.op.nrows(),
            });
        }
    }
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidModel(format!(
            "dt must be positive, got {dt}"
        )));
    }
    // One-norm bounds the spectral norm for Hermitian H.
    let h_norm = (0..h.ncols())
        .map(|j| h.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let norm_dt = h_norm * dt;
    if norm_dt > std::f64::consts::PI {
        return Err(DynamicsError::StepTooLarge { norm_dt });
    }
    propagator(h, collapses, dt).apply(rho)
}

/// Steady state of a static generator: the trace-one solution of
/// `𝓛 vec(ρ) = 0`.
pub fn steady_state(l: &CMat, space: StateSpace) -> Result<DensityMatrix, DynamicsError> {
    let dim = space.dim();
    debug_assert_eq!(l.nrows(), dim * dim);
    let mut a = l.clone();
    // Replace the first row by the trace constraint; diagonal entries of
    // vec(ρ) sit at stride dim+1.
    let mut rhs = CVec::zeros(dim * dim);
    rhs[0] = c(1.0);
    for j in 0..dim * dim {
        a[(0, j)] = c(0.0);
    }
    for k in 0..dim {
        a[(0, k * (dim + 1))] = c(1.0);
    }
    let lu = a.full_piv_lu();
    let x = lu.solve(&rhs).ok_or(DynamicsError::SteadyStateFailed)?;
    // Residual check against a defective pivot.
    let res = (l * &x).norm() / x.norm().max(1e-300);
    if !res.is_finite() || res > 1e-3 * l.norm() {
        return Err(DynamicsError::SteadyStateFailed);
    }
    let mat = CMat::from_column_slice(dim, dim, x.as_slice());
    let mat = (&mat + mat.adjoint()) * c(0.5);
    let tr = mat.diagonal().sum().re;
    Ok(DensityMatrix {
        mat: mat * c(1.0 / tr),
        space,
    })
}
