//! Lab-frame parameters and the rotating-frame effective model derived from
//! them: light shift, effective detuning, channel rates and the prefactors of
//! the correction channels in the master equation.

use std::fmt;

use thiserror::Error;

/// One Debye in C·m.
pub const DEBYE: f64 = 3.33564e-30;
/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054572e-34;

/// Ratio above which the perturbative expansion is flagged as marginal.
pub const PERTURBATIVE_WARN: f64 = 0.25;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 2] = ["gamma-globulin", "gan-dot"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("perturbation theory invalid: {name}/omegaL = {ratio:.4} (must be < 1)")]
    NonPerturbative { name: &'static str, ratio: f64 },
    #[error("unknown preset `{name}` (available: {})", PRESETS.join(", "))]
    UnknownPreset { name: String },
}

/// Non-fatal conditions noticed while building an [`EffectiveModel`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelWarning {
    /// `ω_L − ω₀ − Ω²/(4ω_L) ≤ 0`: the photon-pair channel has no phase space.
    PairChannelClosed { pair_freq: f64 },
    /// Ω/ω_L or G/ω_L above [`PERTURBATIVE_WARN`].
    MarginalPerturbation { name: &'static str, ratio: f64 },
}

impl fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelWarning::PairChannelClosed { pair_freq } => {
                write!(f, "pair channel closed (pair_freq = {pair_freq:.6e} s^-1)")
            }
            ModelWarning::MarginalPerturbation { name, ratio } => {
                write!(f, "{name}/omegaL = {ratio:.4} exceeds {PERTURBATIVE_WARN}")
            }
        }
    }
}

/// How the laser drive is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    /// Rabi frequency Ω in s⁻¹.
    Rabi(f64),
    /// Field amplitude in V/m and transition dipole in Debye.
    Field { e0: f64, p12_debye: f64 },
}

impl Drive {
    /// Ω = ℘₁₂·E₀/ħ, or the given Rabi frequency.
    pub fn rabi(&self) -> f64 {
        match *self {
            Drive::Rabi(omega) => omega,
            Drive::Field { e0, p12_debye } => p12_debye * DEBYE * e0 / HBAR,
        }
    }
}

/// Lab-frame inputs. Frequencies and rates in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub omega0: f64,
    pub omega_l: f64,
    pub drive: Drive,
    /// |℘₁₁ − ℘₂₂| / |℘₁₂|.
    pub dipole_ratio: f64,
    /// Spontaneous decay rate at the reference frequency ω₀.
    pub gamma0: f64,
}

impl PhysicalParams {
    pub fn rabi(&self) -> f64 {
        self.drive.rabi()
    }

    pub fn with_rabi(mut self, omega: f64) -> Self {
        self.drive = Drive::Rabi(omega);
        self
    }

    /// Check the hard invariants (finiteness, signs, perturbative bound).
    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = |name, value: f64| {
            if value.is_finite() {
                Ok(())
            } else {
                Err(ModelError::NonFinite { name, value })
            }
        };
        finite("omega0", self.omega0)?;
        finite("omegaL", self.omega_l)?;
        finite("dipole_ratio", self.dipole_ratio)?;
        finite("gamma0", self.gamma0)?;
        match self.drive {
            Drive::Rabi(omega) => finite("rabi", omega)?,
            Drive::Field { e0, p12_debye } => {
                finite("e0_field", e0)?;
                finite("p12_debye", p12_debye)?;
            }
        }
        for (name, value) in [
            ("omega0", self.omega0),
            ("omegaL", self.omega_l),
            ("gamma0", self.gamma0),
        ] {
            if value <= 0.0 {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        let rabi = self.rabi();
        finite("rabi", rabi)?;
        for (name, value) in [("dipole_ratio", self.dipole_ratio), ("rabi", rabi)] {
            if value < 0.0 {
                return Err(ModelError::Negative { name, value });
            }
        }
        let g = self.dipole_ratio * rabi;
        for (name, value) in [("rabi", rabi), ("G", g)] {
            let ratio = value / self.omega_l;
            if ratio >= 1.0 {
                return Err(ModelError::NonPerturbative { name, ratio });
            }
        }
        Ok(())
    }
}

/// Free-space closure of the mode-sum rates: `γ₀·(ω/ω₀)³` for ω > 0, zero
/// otherwise.
pub fn rate_at(omega: f64, params: &PhysicalParams) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    params.gamma0 * (omega / params.omega0).powi(3)
}

/// Material presets. Both use a blue detuning ω_L − ω₀ = 10¹³ s⁻¹,
/// γ₀ = 3·10⁶ s⁻¹ and a default drive Ω = 10¹³ s⁻¹.
pub fn preset(name: &str) -> Result<PhysicalParams, ModelError> {
    let base = |omega0: f64, dipole_ratio: f64| PhysicalParams {
        omega0,
        omega_l: omega0 + 1e13,
        drive: Drive::Rabi(1e13),
        dipole_ratio,
        gamma0: 3e6,
    };
    match name {
        "gamma-globulin" => Ok(base(5.0e15, 100.0)),
        "gan-dot" => Ok(base(4.92e15, 1.0)),
        _ => Err(ModelError::UnknownPreset {
            name: name.to_owned(),
        }),
    }
}

/// Rotating-frame coefficients of the effective Hamiltonian and the master
/// equation. All frequencies in s⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub omega0: f64,
    pub omega_l: f64,
    pub omega_rabi: f64,
    /// Asymmetry drive G = dipole_ratio·Ω, stored as a magnitude.
    pub g_asym: f64,
    /// Bloch–Siegert shift Ω²/(4ω_L).
    pub bs_shift: f64,
    /// ω₀ − ω_L + Ω²/(4ω_L).
    pub delta_eff: f64,
    pub gamma_r: f64,
    pub gamma_l: f64,
    pub gamma_t: f64,
    /// Ω/(2ω_L). Signed; positive by default.
    pub c_cross: f64,
    /// (3G/(8ω_L))².
    pub c_pump: f64,
    /// (Ω/(2ω_L))².
    pub c_deph: f64,
    /// ω_L − ω₀ − Ω²/(4ω_L).
    pub pair_freq: f64,
    pub warnings: Vec<ModelWarning>,
}

impl EffectiveModel {
    pub fn from_physical(params: &PhysicalParams) -> Result<Self, ModelError> {
        params.validate()?;
        let omega = params.rabi();
        let omega_l = params.omega_l;
        let g = params.dipole_ratio * omega;
        let bs_shift = omega * omega / (4.0 * omega_l);
        let delta_eff = params.omega0 - omega_l + bs_shift;
        let pair_freq = omega_l - params.omega0 - bs_shift;
        let c_cross = omega / (2.0 * omega_l);
        let pump_amp = 3.0 * g / (8.0 * omega_l);

        let mut warnings = Vec::new();
        for (name, value) in [("rabi", omega), ("G", g)] {
            let ratio = value / omega_l;
            if ratio > PERTURBATIVE_WARN {
                warnings.push(ModelWarning::MarginalPerturbation { name, ratio });
            }
        }
        if pair_freq <= 0.0 {
            warnings.push(ModelWarning::PairChannelClosed { pair_freq });
        }

        Ok(Self {
            omega0: params.omega0,
            omega_l,
            omega_rabi: omega,
            g_asym: g,
            bs_shift,
            delta_eff,
            gamma_r: rate_at(params.omega0 + bs_shift, params),
            gamma_l: rate_at(omega_l, params),
            gamma_t: rate_at(pair_freq, params),
            c_cross,
            c_pump: pump_amp * pump_amp,
            c_deph: c_cross * c_cross,
            pair_freq,
            warnings,
        })
    }

    /// Driven, damped two-level model with every correction channel switched
    /// off: only Ω, the effective detuning and γ_R are non-zero.
    pub fn resonance_only(omega_rabi: f64, delta_eff: f64, gamma_r: f64) -> Self {
        Self {
            omega0: 0.0,
            omega_l: 0.0,
            omega_rabi,
            g_asym: 0.0,
            bs_shift: 0.0,
            delta_eff,
            gamma_r,
            gamma_l: 0.0,
            gamma_t: 0.0,
            c_cross: 0.0,
            c_pump: 0.0,
            c_deph: 0.0,
            pair_freq: 0.0,
            warnings: Vec::new(),
        }
    }

    /// Copy of the model with the three correction prefactors zeroed.
    pub fn without_corrections(&self) -> Self {
        Self {
            c_cross: 0.0,
            c_pump: 0.0,
            c_deph: 0.0,
            ..self.clone()
        }
    }

    pub fn pair_channel_open(&self) -> bool {
        self.pair_freq > 0.0
    }

    /// Rate of the broken-symmetry pair channel, c_pump·γ_T.
    pub fn pump_rate(&self) -> f64 {
        self.c_pump * self.gamma_t
    }
}
