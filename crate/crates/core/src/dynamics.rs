//! Master-equation generator in the Heisenberg picture, its dual acting on
//! density matrices, steady states and time propagation.
//!
//! The generator is never written down by hand. Each column is obtained by
//! applying the operator expression of the master equation to one element of
//! the Hilbert–Schmidt basis and projecting the result back onto the basis.

use nalgebra::linalg::Schur;
use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::algebra::{commutator, hs_decompose, HsBasis, OperatorMatrix};
use crate::model::EffectiveModel;

/// Trace tolerance accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Singular values below this fraction of the largest one count as zero when
/// probing the nullspace of the rescaled dual generator.
pub const NULLSPACE_TOL: f64 = 1e-12;
/// Steady-state residual bound relative to the largest generator entry.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("no relaxation: every dissipative rate is zero")]
    NoRelaxation,
    #[error("degenerate steady state: nullspace dimension {nullity}")]
    DegenerateSteadyState { nullity: usize },
    #[error("steady-state residual {residual:.3e} exceeds {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("negative propagation time {0}")]
    NegativeTime(f64),
    #[error("model contains non-finite coefficient `{0}`")]
    NonFinite(&'static str),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
}

/// One term `−κ(⟨X[Y,Q]⟩ + ⟨[Q,Y†]X†⟩)` of the adjoint master equation.
#[derive(Debug, Clone, Copy)]
pub struct DissipativeChannel {
    pub name: &'static str,
    /// κ in s⁻¹.
    pub rate: f64,
    /// X.
    pub left: OperatorMatrix,
    /// Y.
    pub right: OperatorMatrix,
}

impl DissipativeChannel {
    pub fn adjoint_action(&self, q: &OperatorMatrix) -> OperatorMatrix {
        if self.rate == 0.0 {
            return OperatorMatrix::zero();
        }
        let x = self.left;
        let y = self.right;
        let term = x * commutator(&y, q) + commutator(q, &y.dagger()) * x.dagger();
        term * (-self.rate)
    }
}

/// The five channels in master-equation order: resonance fluorescence, laser
/// line, photon pair, resonance cross term, dephasing.
pub fn channels(model: &EffectiveModel) -> [DissipativeChannel; 5] {
    let sp = OperatorMatrix::sigma_plus();
    let sm = OperatorMatrix::sigma_minus();
    let sz = OperatorMatrix::sigma_z();
    [
        DissipativeChannel {
            name: "resonance",
            rate: model.gamma_r,
            left: sp,
            right: sm,
        },
        DissipativeChannel {
            name: "laser",
            rate: model.c_cross * model.gamma_l,
            left: sz,
            right: sm,
        },
        DissipativeChannel {
            name: "pair",
            rate: model.c_pump * model.gamma_t,
            left: sm,
            right: sp,
        },
        DissipativeChannel {
            name: "resonance-cross",
            rate: model.c_cross * model.gamma_r,
            left: sp,
            right: sz,
        },
        DissipativeChannel {
            name: "dephasing",
            rate: model.c_deph * model.gamma_l,
            left: sz,
            right: sz,
        },
    ]
}

/// Coherent part `Δ_eff·S_z + (Ω/2)(S⁺ + S⁻)` in s⁻¹.
pub fn rotating_hamiltonian(model: &EffectiveModel) -> OperatorMatrix {
    OperatorMatrix::sigma_z() * model.delta_eff
        + (OperatorMatrix::sigma_plus() + OperatorMatrix::sigma_minus()) * (0.5 * model.omega_rabi)
}

/// Heisenberg-picture generator over the basis `(I/√2, S⁺, S⁻, √2·S_z)`.
#[derive(Debug, Clone)]
pub struct AdjointGenerator {
    matrix: Matrix4<C64>,
    model: EffectiveModel,
    hamiltonian: OperatorMatrix,
    channels: [DissipativeChannel; 5],
    basis: HsBasis,
}

impl AdjointGenerator {
    /// `A_jk = Tr(B_j† L†(B_k))`, units s⁻¹.
    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    pub fn model(&self) -> &EffectiveModel {
        &self.model
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[DissipativeChannel; 5] {
        &self.channels
    }

    /// `d⟨Q⟩/dt` as an operator: `i[H̃₀, Q]` plus the dissipative terms.
    pub fn apply(&self, q: &OperatorMatrix) -> OperatorMatrix {
        let coherent = commutator(&self.hamiltonian, q) * C64::i();
        self.channels
            .iter()
            .fold(coherent, |acc, ch| acc + ch.adjoint_action(q))
    }

    /// Schrödinger-picture action `L(ρ)`, defined by `Tr(L(ρ) Q) = Tr(ρ L†(Q))`.
    pub fn dual_action(&self, rho: &OperatorMatrix) -> OperatorMatrix {
        let m = self.matrix_units_dual();
        let v = m * matrix_units_vec(rho);
        OperatorMatrix::from_rows([[v[0], v[1]], [v[2], v[3]]])
    }

    /// Largest generator entry modulus.
    pub fn max_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Whether any dissipative channel has a non-zero rate.
    pub fn is_dissipative(&self) -> bool {
        self.channels.iter().any(|ch| ch.rate != 0.0)
    }

    /// Dual generator in matrix units: `M[(a,b),(c,d)] = L†(|b⟩⟨a|)_{dc}`, so
    /// that `vec(L(ρ)) = M·vec(ρ)` with `vec` in row-major order.
    fn matrix_units_dual(&self) -> Matrix4<C64> {
        let mut m = Matrix4::zeros();
        for a in 0..2 {
            for b in 0..2 {
                let image = self.apply(&OperatorMatrix::unit(b, a));
                for c in 0..2 {
                    for d in 0..2 {
                        m[(2 * a + b, 2 * c + d)] = image.entry(d, c);
                    }
                }
            }
        }
        m
    }
}

fn matrix_units_vec(rho: &OperatorMatrix) -> Vector4<C64> {
    Vector4::new(
        rho.entry(0, 0),
        rho.entry(0, 1),
        rho.entry(1, 0),
        rho.entry(1, 1),
    )
}

fn check_finite(model: &EffectiveModel) -> Result<(), DynamicsError> {
    let fields = [
        ("omega_rabi", model.omega_rabi),
        ("delta_eff", model.delta_eff),
        ("gamma_r", model.gamma_r),
        ("gamma_l", model.gamma_l),
        ("gamma_t", model.gamma_t),
        ("c_cross", model.c_cross),
        ("c_pump", model.c_pump),
        ("c_deph", model.c_deph),
    ];
    match fields.iter().find(|(_, v)| !v.is_finite()) {
        Some((name, _)) => Err(DynamicsError::NonFinite(name)),
        None => Ok(()),
    }
}

pub fn build_adjoint_generator(model: &EffectiveModel) -> Result<AdjointGenerator, DynamicsError> {
    check_finite(model)?;
    let basis = HsBasis::standard();
    let mut generator = AdjointGenerator {
        matrix: Matrix4::zeros(),
        model: model.clone(),
        hamiltonian: rotating_hamiltonian(model),
        channels: channels(model),
        basis,
    };
    for (k, element) in basis.elements().iter().enumerate() {
        let column = hs_decompose(&generator.apply(element), &basis);
        for (j, c) in column.into_iter().enumerate() {
            generator.matrix[(j, k)] = c;
        }
    }
    Ok(generator)
}

/// Dual generator over the same basis: `D_jk = Tr(B_k · L†(B_j†))`, so that the
/// coefficient vector of `ρ` evolves as `ċ = D c`.
pub fn dual_generator(g: &AdjointGenerator) -> Matrix4<C64> {
    let basis = &g.basis;
    let mut d = Matrix4::zeros();
    for j in 0..4 {
        let image = g.apply(&basis.get(j).dagger());
        for k in 0..4 {
            d[(j, k)] = (*basis.get(k) * image).trace();
        }
    }
    d
}

/// A unit-trace density matrix of the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    rho: OperatorMatrix,
}

impl BlochState {
    pub fn new(rho: OperatorMatrix) -> Result<Self, DynamicsError> {
        if !rho.is_finite() {
            return Err(DynamicsError::InvalidState("non-finite entries".into()));
        }
        let tr = rho.trace();
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(DynamicsError::InvalidState(format!("trace {tr} ≠ 1")));
        }
        Ok(Self { rho })
    }

    pub fn ground() -> Self {
        Self {
            rho: OperatorMatrix::projector(crate::algebra::GROUND),
        }
    }

    pub fn excited() -> Self {
        Self {
            rho: OperatorMatrix::projector(crate::algebra::EXCITED),
        }
    }

    pub fn rho(&self) -> &OperatorMatrix {
        &self.rho
    }

    /// ⟨S⁺⟩ = ρ₁₂ (ground row, excited column).
    pub fn sigma_plus(&self) -> C64 {
        crate::algebra::expectation(&OperatorMatrix::sigma_plus(), &self.rho)
    }

    pub fn sigma_minus(&self) -> C64 {
        crate::algebra::expectation(&OperatorMatrix::sigma_minus(), &self.rho)
    }

    /// ⟨S_z⟩.
    pub fn inversion(&self) -> f64 {
        crate::algebra::expectation(&OperatorMatrix::sigma_z(), &self.rho).re
    }

    /// P₂ = ⟨S⁺S⁻⟩.
    pub fn excited_population(&self) -> f64 {
        self.rho.entry(1, 1).re
    }

    /// P₁ = ⟨S⁻S⁺⟩.
    pub fn ground_population(&self) -> f64 {
        self.rho.entry(0, 0).re
    }
}

/// Power of two closest to `x`, so that rescaling by it is exact.
fn pow2_scale(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        2f64.powi(x.log2().round() as i32)
    } else {
        1.0
    }
}

/// Unique state annihilated by the dual generator.
///
/// Solved on the unit-trace slice: `ρ₁₁ = 1 − ρ₂₂` is eliminated and the
/// remaining unknowns `(ρ₁₂, ρ₂₁, ρ₂₂)` satisfy a 3×3 system. Working in matrix
/// elements rather than `S_z` keeps small excited populations at full relative
/// precision.
pub fn steady_state(g: &AdjointGenerator) -> Result<BlochState, DynamicsError> {
    if !g.is_dissipative() {
        return Err(DynamicsError::NoRelaxation);
    }
    let model = g.model();
    let scale = pow2_scale(
        model
            .omega_rabi
            .abs()
            .max(model.delta_eff.abs())
            .max(model.gamma_r.abs())
            .max(g.max_entry()),
    );
    let m = g.matrix_units_dual() / C64::new(scale, 0.0);

    let sv = m.svd(false, false).singular_values;
    let top = sv.max();
    let nullity = sv.iter().filter(|&&s| s <= NULLSPACE_TOL * top).count();
    if nullity != 1 {
        return Err(DynamicsError::DegenerateSteadyState { nullity });
    }

    // Rows/unknowns: (0,1) → 1, (1,0) → 2, (1,1) → 3; (0,0) is eliminated.
    let idx = [1usize, 2, 3];
    let mut a = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (r, &row) in idx.iter().enumerate() {
        a[(r, 0)] = m[(row, 1)];
        a[(r, 1)] = m[(row, 2)];
        a[(r, 2)] = m[(row, 3)] - m[(row, 0)];
        rhs[r] = -m[(row, 0)];
    }
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or(DynamicsError::DegenerateSteadyState { nullity: 2 })?;
    // the exact solution is Hermitian; drop the rounding that breaks it
    let coherence = (x[0] + x[1].conj()) * 0.5;
    let p2 = C64::new(x[2].re, 0.0);
    let rho =
        OperatorMatrix::from_rows([[C64::new(1.0, 0.0) - p2, coherence], [coherence.conj(), p2]]);

    let residual = g.dual_action(&rho).max_abs();
    let tolerance = RESIDUAL_TOL * g.max_entry();
    if residual.is_nan() || residual > tolerance {
        return Err(DynamicsError::Residual {
            residual,
            tolerance,
        });
    }
    BlochState::new(rho)
}

/// Orthonormal Hermitian basis `(I, σ_x, σ_y, σ_z)/√2`.
fn hermitian_basis() -> [OperatorMatrix; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sp = OperatorMatrix::sigma_plus();
    let sm = OperatorMatrix::sigma_minus();
    [
        OperatorMatrix::identity() * r,
        (sp + sm) * r,
        (sp - sm) * C64::new(0.0, r),
        OperatorMatrix::sigma_z() * std::f64::consts::SQRT_2,
    ]
}

/// Dual generator over the Hermitian basis `P_k`: `R_jk = Tr(L†(P_j) P_k)`.
/// Real because the dual maps Hermitian matrices to Hermitian matrices.
pub fn real_dual_generator(g: &AdjointGenerator) -> Matrix4<f64> {
    let basis = hermitian_basis();
    let mut r = Matrix4::zeros();
    for (j, pj) in basis.iter().enumerate() {
        let image = g.apply(pj);
        for (k, pk) in basis.iter().enumerate() {
            r[(j, k)] = (image * *pk).trace().re;
        }
    }
    r
}

/// Largest eigenvector condition number accepted by the spectral propagator.
const SPECTRAL_COND_LIMIT: f64 = 1e6;

/// `(e^{z} − 1)/z · t` for `z = λt`, accurate for small `|z|`.
fn phi1(lambda: C64, t: f64) -> C64 {
    let z = lambda * t;
    if z.norm() < 1e-300 {
        return C64::new(t, 0.0);
    }
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    let em1 = C64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin());
    em1 / lambda
}

/// Eigendecomposition `B = V Λ V⁻¹` of the Bloch block of `R`.
#[derive(Debug, Clone)]
struct Spectral {
    lambda: [C64; 3],
    v: Matrix3<C64>,
    v_inv: Matrix3<C64>,
    /// `V⁻¹ b`.
    drive: Vector3<C64>,
}

impl Spectral {
    /// `None` when the eigenvectors are too close to parallel.
    fn new(r: &Matrix4<f64>) -> Option<Self> {
        let block: Matrix3<C64> = r.fixed_view::<3, 3>(1, 1).map(|x| C64::new(x, 0.0));
        let scale = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return None;
        }
        let (q, tri) = Schur::new(block).unpack();
        let lambda = [tri[(0, 0)], tri[(1, 1)], tri[(2, 2)]];
        // eigenvectors of the triangular factor by back-substitution
        let mut y = Matrix3::<C64>::zeros();
        for k in 0..3 {
            y[(k, k)] = C64::new(1.0, 0.0);
            for j in (0..k).rev() {
                let gap = tri[(j, j)] - lambda[k];
                if gap.norm() < 1e-8 * scale {
                    return None;
                }
                let sum: C64 = (j + 1..=k).map(|l| tri[(j, l)] * y[(l, k)]).sum();
                y[(j, k)] = -sum / gap;
            }
        }
        let v = q * y;
        let v_inv = v.try_inverse()?;
        if v.norm() * v_inv.norm() > SPECTRAL_COND_LIMIT {
            return None;
        }
        let b: Vector3<C64> = r.fixed_view::<3, 1>(1, 0).map(|x| C64::new(x, 0.0));
        Some(Self {
            lambda,
            v,
            v_inv,
            drive: v_inv * b,
        })
    }

    /// `exp(Rt) = [[1, 0], [φ(B) b, e^{Bt}]]` with `φ(B) = B⁻¹(e^{Bt} − I)`.
    fn at(&self, t: f64) -> Option<Matrix4<f64>> {
        let expo = Matrix3::from_diagonal(&Vector3::from_fn(|k, _| (self.lambda[k] * t).exp()));
        let e_bt = self.v * expo * self.v_inv;
        let feed = self.v * Vector3::from_fn(|k, _| phi1(self.lambda[k], t) * self.drive[k]);
        let mut out = Matrix4::zeros();
        out[(0, 0)] = 1.0;
        for i in 0..3 {
            out[(i + 1, 0)] = feed[i].re;
            for j in 0..3 {
                out[(i + 1, j + 1)] = e_bt[(i, j)].re;
            }
        }
        out.iter().all(|x| x.is_finite()).then_some(out)
    }
}

/// `exp(L t)` for one generator, reusable across many times.
///
/// Operators are split into Hermitian and anti-Hermitian parts, each
/// propagated with the real `exp(R t)`. Hermitian inputs stay exactly
/// Hermitian. When the Bloch block is diagonalisable with well-conditioned
/// eigenvectors the exponential is evaluated spectrally, so the error does not
/// grow with `t`; otherwise scaling and squaring is used.
#[derive(Debug, Clone)]
pub struct Propagator {
    r: Matrix4<f64>,
    spectral: Option<Spectral>,
}

impl Propagator {
    pub fn new(g: &AdjointGenerator) -> Self {
        let r = real_dual_generator(g);
        Self {
            spectral: Spectral::new(&r),
            r,
        }
    }

    /// `exp(R t)` over the basis `(I, σ_x, σ_y, σ_z)/√2`.
    pub fn matrix(&self, t: f64) -> Matrix4<f64> {
        self.spectral
            .as_ref()
            .and_then(|s| s.at(t))
            .unwrap_or_else(|| (self.r * t).exp())
    }

    pub fn apply(&self, op: &OperatorMatrix, t: f64) -> Result<OperatorMatrix, DynamicsError> {
        if t.is_nan() || t < 0.0 {
            return Err(DynamicsError::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(*op);
        }
        if !op.is_finite() {
            return Err(DynamicsError::NonFinite("operator"));
        }
        let propagator = self.matrix(t);
        let basis = hermitian_basis();
        let herm = (*op + op.dagger()) * 0.5;
        let anti = (*op - op.dagger()) * C64::new(0.0, -0.5);
        let evolve = |h: &OperatorMatrix| {
            let c = Vector4::from_fn(|k, _| (basis[k] * *h).trace().re);
            let v = propagator * c;
            basis
                .iter()
                .zip(v.iter())
                .fold(OperatorMatrix::zero(), |acc, (b, x)| acc + *b * *x)
        };
        let mut out = evolve(&herm);
        if anti != OperatorMatrix::zero() {
            out += evolve(&anti) * C64::i();
        }
        Ok(out)
    }
}

/// `exp(L t)` applied to an arbitrary operator (not necessarily a state).
pub fn propagate_operator(
    g: &AdjointGenerator,
    op: &OperatorMatrix,
    t: f64,
) -> Result<OperatorMatrix, DynamicsError> {
    if t.is_nan() || t < 0.0 {
        return Err(DynamicsError::NegativeTime(t));
    }
    Propagator::new(g).apply(op, t)
}

/// `ρ(t) = exp(L t) ρ₀`.
pub fn propagate(
    g: &AdjointGenerator,
    rho0: &BlochState,
    t: f64,
) -> Result<BlochState, DynamicsError> {
    let rho = propagate_operator(g, rho0.rho(), t)?;
    BlochState::new(rho)
}
