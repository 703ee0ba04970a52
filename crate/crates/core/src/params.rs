//! Physical parameters of the mode and its two reservoirs, and the thermal
//! quantities every other module derives from them.
//!
//! All formulas keep ħ and k_B explicit. The defaults are natural units
//! (ħ = k_B = m = ω_s = 1), in which temperatures are measured in ħω_s/k_B.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Inputs for a single bosonic mode coupled to an emitter and a collector bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Mode angular frequency ω_s.
    pub omega_s: f64,
    /// Bath-induced frequency shift Δ; enters only the coherent phase.
    pub delta: f64,
    /// Emitter damping rate γ_e.
    pub gamma_e: f64,
    /// Collector damping rate γ_c.
    pub gamma_c: f64,
    /// Emitter temperature T_e.
    pub temp_e: f64,
    /// Collector temperature T_c.
    pub temp_c: f64,
    /// Oscillator mass, used by the phase-space and entropic-force formulas.
    pub mass: f64,
    pub hbar: f64,
    pub k_b: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            omega_s: 1.0,
            delta: 0.0,
            gamma_e: 1.0,
            gamma_c: 1.0,
            temp_e: 2.0,
            temp_c: 1.0,
            mass: 1.0,
            hbar: 1.0,
            k_b: 1.0,
        }
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be finite and > 0, got {v}"))
    }
}

impl SystemParams {
    /// Check every field; Δ may be any finite real.
    pub fn validate(&self) -> Result<()> {
        require_positive("omega_s", self.omega_s)?;
        require_positive("gamma_e", self.gamma_e)?;
        require_positive("gamma_c", self.gamma_c)?;
        require_positive("temp_e", self.temp_e)?;
        require_positive("temp_c", self.temp_c)?;
        require_positive("mass", self.mass)?;
        require_positive("hbar", self.hbar)?;
        require_positive("k_b", self.k_b)?;
        if !self.delta.is_finite() {
            return domain(format!("delta must be finite, got {}", self.delta));
        }
        Ok(())
    }

    /// γ = γ_e + γ_c, the relaxation rate of every first moment.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_e + self.gamma_c
    }

    /// Effective rotation frequency ω = ω_s + Δ.
    pub fn omega(&self) -> f64 {
        self.omega_s + self.delta
    }

    pub fn n_e(&self) -> Result<f64> {
        thermal_occupation(self.omega_s, self.temp_e, self.hbar, self.k_b)
    }

    pub fn n_c(&self) -> Result<f64> {
        thermal_occupation(self.omega_s, self.temp_c, self.hbar, self.k_b)
    }

    /// Copy with both bath temperatures multiplied by `lambda`.
    pub fn with_temperature_scale(&self, lambda: f64) -> Self {
        SystemParams {
            temp_e: self.temp_e * lambda,
            temp_c: self.temp_c * lambda,
            ..*self
        }
    }

    /// Weighted steady occupation n̄_s.
    pub fn n_s(&self) -> Result<f64> {
        Ok(summarize(self)?.n_s)
    }
}

/// Bose–Einstein occupation 1/(exp(ħω/k_BT) − 1).
pub fn thermal_occupation(omega: f64, temp: f64, hbar: f64, k_b: f64) -> Result<f64> {
    require_positive("omega", omega)?;
    require_positive("temperature", temp)?;
    let x = hbar * omega / (k_b * temp);
    // exp_m1 keeps the high-temperature limit accurate; overflow gives 0.
    Ok(1.0 / x.exp_m1())
}

/// Occupations and effective temperature derived from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalSummary {
    pub n_e: f64,
    pub n_c: f64,
    pub n_s: f64,
    /// T = (γ_e T_e + γ_c T_c)/γ.
    pub temp_sys: f64,
    pub gamma_total: f64,
}

pub fn summarize(params: &SystemParams) -> Result<ThermalSummary> {
    params.validate()?;
    let n_e = params.n_e()?;
    let n_c = params.n_c()?;
    let g = params.gamma_total();
    let we = params.gamma_e / g;
    let wc = params.gamma_c / g;
    Ok(ThermalSummary {
        n_e,
        n_c,
        n_s: we * n_e + wc * n_c,
        temp_sys: we * params.temp_e + wc * params.temp_c,
        gamma_total: g,
    })
}
