//! Intensity–intensity correlations of the THz/optical photon pair and the
//! Cauchy–Schwarz witness.
//!
//! Each channel's negative-frequency field is proportional to an atomic
//! operator: `E₁⁻ ∝ S⁻` for the THz line and `E₂⁻ ∝ S⁺` for the optical line.
//! The proportionality constants cancel in the normalised g⁽²⁾.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{expectation, OperatorMatrix};
use crate::dynamics::{AdjointGenerator, BlochState, DynamicsError, Propagator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("channel dark: mean intensity of the {0} channel is zero")]
    ChannelDark(Channel),
    #[error("delay grid must be sorted in ascending order (index {index})")]
    UnsortedGrid { index: usize },
    #[error("delays must be finite and non-negative, got {0}")]
    InvalidDelay(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Emission channel of the photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Channel 1: long-wavelength photon at ω_L − ω₀ − Ω²/(4ω_L).
    Thz,
    /// Channel 2: photon at the shifted transition frequency.
    Optical,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Thz => "THz",
            Channel::Optical => "optical",
        })
    }
}

/// Atomic source operators of the two channel fields (the `E⁻` parts).
#[derive(Debug, Clone, Copy)]
pub struct ChannelMap {
    pub thz: OperatorMatrix,
    pub optical: OperatorMatrix,
}

impl Default for ChannelMap {
    fn default() -> Self {
        Self {
            thz: OperatorMatrix::sigma_minus(),
            optical: OperatorMatrix::sigma_plus(),
        }
    }
}

impl ChannelMap {
    /// `E⁻` of the channel.
    pub fn creation(&self, ch: Channel) -> OperatorMatrix {
        match ch {
            Channel::Thz => self.thz,
            Channel::Optical => self.optical,
        }
    }

    /// `E⁺` of the channel.
    pub fn annihilation(&self, ch: Channel) -> OperatorMatrix {
        self.creation(ch).dagger()
    }

    /// `E⁻E⁺`: the projector onto |1⟩ for THz and onto |2⟩ for optical.
    pub fn intensity(&self, ch: Channel) -> OperatorMatrix {
        self.creation(ch) * self.annihilation(ch)
    }

    /// Normal-ordered `E_i⁻ E_j⁻ E_j⁺ E_i⁺`.
    pub fn pair_operator(&self, i: Channel, j: Channel) -> OperatorMatrix {
        self.creation(i) * self.creation(j) * self.annihilation(j) * self.annihilation(i)
    }

    fn mean_intensity(&self, ch: Channel, rho: &OperatorMatrix) -> Result<f64, CorrelationError> {
        let n = expectation(&self.intensity(ch), rho).re;
        if n > 0.0 {
            Ok(n)
        } else {
            Err(CorrelationError::ChannelDark(ch))
        }
    }
}

/// Zero-delay g⁽²⁾ and both sides of `g₁₁g₂₂ ≥ g₁₂²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
    pub g21: f64,
    pub cs_lhs: f64,
    pub cs_rhs: f64,
    pub violated: bool,
}

/// `g_ij(0) = ⟨E_i⁻E_j⁻E_j⁺E_i⁺⟩ / (⟨E_i⁻E_i⁺⟩⟨E_j⁻E_j⁺⟩)`.
pub fn g2_zero(i: Channel, j: Channel, rho_ss: &BlochState) -> Result<f64, CorrelationError> {
    let map = ChannelMap::default();
    let rho = rho_ss.rho();
    let ni = map.mean_intensity(i, rho)?;
    let nj = map.mean_intensity(j, rho)?;
    let num = expectation(&map.pair_operator(i, j), rho).re;
    Ok(num / (ni * nj))
}

pub fn cauchy_schwarz(rho_ss: &BlochState) -> Result<CorrelationReport, CorrelationError> {
    let g11 = g2_zero(Channel::Thz, Channel::Thz, rho_ss)?;
    let g22 = g2_zero(Channel::Optical, Channel::Optical, rho_ss)?;
    let g12 = g2_zero(Channel::Thz, Channel::Optical, rho_ss)?;
    let g21 = g2_zero(Channel::Optical, Channel::Thz, rho_ss)?;
    let cs_lhs = g11 * g22;
    let cs_rhs = g12 * g12;
    Ok(CorrelationReport {
        g11,
        g22,
        g12,
        g21,
        cs_lhs,
        cs_rhs,
        violated: cs_lhs < cs_rhs,
    })
}

fn check_grid(tau_grid: &[f64]) -> Result<(), CorrelationError> {
    if let Some(&bad) = tau_grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(CorrelationError::InvalidDelay(bad));
    }
    if let Some(index) = tau_grid.windows(2).position(|w| w[1] < w[0]) {
        return Err(CorrelationError::UnsortedGrid { index: index + 1 });
    }
    Ok(())
}

/// Delayed correlation via the quantum regression theorem:
/// `Tr(E_j⁻E_j⁺ · e^{Lτ}(E_i⁺ ρ_ss E_i⁻)) / (⟨E_i⁻E_i⁺⟩⟨E_j⁻E_j⁺⟩)`.
pub fn g2_tau(
    i: Channel,
    j: Channel,
    g: &AdjointGenerator,
    rho_ss: &BlochState,
    tau_grid: &[f64],
) -> Result<Vec<f64>, CorrelationError> {
    check_grid(tau_grid)?;
    let map = ChannelMap::default();
    let rho = rho_ss.rho();
    let ni = map.mean_intensity(i, rho)?;
    let nj = map.mean_intensity(j, rho)?;
    let conditioned = map.annihilation(i) * *rho * map.creation(i);
    let detector = map.intensity(j);
    let propagator = Propagator::new(g);
    tau_grid
        .par_iter()
        .map(|&tau| {
            let evolved = propagator.apply(&conditioned, tau)?;
            Ok(expectation(&detector, &evolved).re / (ni * nj))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_adjoint_generator, steady_state};
    use crate::model::{preset, EffectiveModel};
    use num_complex::Complex64 as C64;

    fn state(p2: f64) -> BlochState {
        let c = C64::new(0.1 * (p2 * (1.0 - p2)).sqrt(), 0.05);
        BlochState::new(OperatorMatrix::from_rows([
            [C64::new(1.0 - p2, 0.0), c],
            [c.conj(), C64::new(p2, 0.0)],
        ]))
        .unwrap()
    }

    fn preset_state(omega: f64) -> (AdjointGenerator, BlochState) {
        let m = EffectiveModel::from_physical(&preset("gamma-globulin").unwrap().with_rabi(omega))
            .unwrap();
        let g = build_adjoint_generator(&m).unwrap();
        let ss = steady_state(&g).unwrap();
        (g, ss)
    }

    #[test]
    fn intensity_operators_are_level_projectors() {
        let map = ChannelMap::default();
        assert_eq!(map.intensity(Channel::Thz), OperatorMatrix::projector(0));
        assert_eq!(
            map.intensity(Channel::Optical),
            OperatorMatrix::projector(1)
        );
    }

    #[test]
    fn auto_correlations_vanish_identically() {
        let map = ChannelMap::default();
        assert_eq!(
            map.pair_operator(Channel::Thz, Channel::Thz),
            OperatorMatrix::zero()
        );
        assert_eq!(
            map.pair_operator(Channel::Optical, Channel::Optical),
            OperatorMatrix::zero()
        );
        let rho = state(0.3);
        assert_eq!(g2_zero(Channel::Thz, Channel::Thz, &rho).unwrap(), 0.0);
        assert_eq!(
            g2_zero(Channel::Optical, Channel::Optical, &rho).unwrap(),
            0.0
        );
    }

    #[test]
    fn cross_correlations_are_inverse_populations() {
        for p2 in [1e-6, 0.01, 0.3, 0.7] {
            let rho = state(p2);
            let g12 = g2_zero(Channel::Thz, Channel::Optical, &rho).unwrap();
            let g21 = g2_zero(Channel::Optical, Channel::Thz, &rho).unwrap();
            assert!((g12 * p2 - 1.0).abs() < 1e-12);
            assert!((g21 * (1.0 - p2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dark_channel_is_an_error() {
        let err = g2_zero(Channel::Thz, Channel::Optical, &BlochState::ground()).unwrap_err();
        assert_eq!(err, CorrelationError::ChannelDark(Channel::Optical));
        let err = cauchy_schwarz(&BlochState::excited()).unwrap_err();
        assert_eq!(err, CorrelationError::ChannelDark(Channel::Thz));
    }

    #[test]
    fn preset_values_at_strong_drive() {
        // 1/P₂ and 1/(1 − P₂) with P₂ from the driven-damped formula: 5.99601, 1.20016.
        let (_, ss) = preset_state(1e13);
        let r = cauchy_schwarz(&ss).unwrap();
        assert!((r.g12 / 5.99600898 - 1.0).abs() < 1e-2, "{r:?}");
        assert!((r.g21 / 1.20015977 - 1.0).abs() < 1e-2, "{r:?}");
        assert_eq!(r.cs_lhs, 0.0);
        assert!((r.cs_rhs / 36.0 - 1.0).abs() < 2e-2);
        assert!(r.violated);
    }

    #[test]
    fn preset_values_at_moderate_drive() {
        let (_, ss) = preset_state(1e12);
        let r = cauchy_schwarz(&ss).unwrap();
        // g12 ≈ 402 ⇒ g12² ≈ 1.616e5
        assert!((r.cs_rhs / 1.61601e5 - 1.0).abs() < 1e-2, "{r:?}");
        assert!(r.violated);
    }

    #[test]
    fn delayed_correlation_starts_at_zero_delay_value() {
        let (g, ss) = preset_state(1e13);
        for (i, j) in [
            (Channel::Thz, Channel::Optical),
            (Channel::Optical, Channel::Thz),
        ] {
            let at_zero = g2_zero(i, j, &ss).unwrap();
            let curve = g2_tau(i, j, &g, &ss, &[0.0]).unwrap();
            assert_eq!(curve.len(), 1);
            assert!((curve[0] - at_zero).abs() < 1e-10);
        }
    }

    #[test]
    fn delayed_correlation_factorises_at_long_delay() {
        let (g, ss) = preset_state(1e13);
        let tau = 10.0 / g.model().gamma_r;
        let curve = g2_tau(Channel::Thz, Channel::Optical, &g, &ss, &[0.0, tau]).unwrap();
        assert!((curve[1] - 1.0).abs() < 1e-2, "{curve:?}");
    }

    #[test]
    fn grid_validation() {
        let (g, ss) = preset_state(1e13);
        let err = g2_tau(Channel::Thz, Channel::Optical, &g, &ss, &[0.0, 2.0, 1.0]).unwrap_err();
        assert_eq!(err, CorrelationError::UnsortedGrid { index: 2 });
        let err = g2_tau(Channel::Thz, Channel::Optical, &g, &ss, &[-1.0]).unwrap_err();
        assert_eq!(err, CorrelationError::InvalidDelay(-1.0));
    }
}
