//! Closed-form dynamics of the mean occupation, the particle current and the
//! quantum transport factor.
//!
//! Every first moment relaxes at the single rate γ = γ_e + γ_c toward its
//! steady value, so each time-dependent quantity here has the shape
//! `steady + (initial - steady)·exp(-γt)`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::params::{summarize, SystemParams};

fn require_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        domain(format!("time must be >= 0, got {t}"))
    } else {
        Ok(())
    }
}

fn require_occupation(n: f64) -> Result<()> {
    if n.is_finite() && n >= 0.0 {
        Ok(())
    } else {
        domain(format!("occupation must be finite and >= 0, got {n}"))
    }
}

/// ⟨n⟩(t) = n̄_s + (n0 − n̄_s)e^{−γt}.
pub fn mean_number(params: &SystemParams, n0: f64, t: f64) -> Result<f64> {
    require_time(t)?;
    require_occupation(n0)?;
    let s = summarize(params)?;
    Ok(s.n_s + (n0 - s.n_s) * (-s.gamma_total * t).exp())
}

/// d⟨n⟩/dt = −γ(n − n̄_s).
pub fn mean_number_rate(params: &SystemParams, n_now: f64) -> Result<f64> {
    require_occupation(n_now)?;
    let s = summarize(params)?;
    Ok(-s.gamma_total * (n_now - s.n_s))
}

/// Current carried by a mode holding `n` bosons on average:
/// ½[γ_e(n̄_e − n) + γ_c(n − n̄_c)].
pub fn current_at_occupation(params: &SystemParams, n: f64) -> Result<f64> {
    let s = summarize(params)?;
    Ok(0.5 * (params.gamma_e * (s.n_e - n) + params.gamma_c * (n - s.n_c)))
}

/// I_0, the current at t = 0 for initial occupation `n0`.
pub fn initial_current(params: &SystemParams, n0: f64) -> Result<f64> {
    require_occupation(n0)?;
    current_at_occupation(params, n0)
}

/// I_s = γ_eγ_c(n̄_e − n̄_c)/(γ_e + γ_c).
pub fn steady_current(params: &SystemParams) -> Result<f64> {
    let s = summarize(params)?;
    Ok(params.gamma_e * params.gamma_c / s.gamma_total * (s.n_e - s.n_c))
}

/// E_s = ħω_s I_s, the steady energy throughput.
pub fn energy_loss_rate(params: &SystemParams) -> Result<f64> {
    Ok(params.hbar * params.omega_s * steady_current(params)?)
}

/// I(t) evaluated through ⟨n⟩(t).
pub fn current(params: &SystemParams, n0: f64, t: f64) -> Result<f64> {
    let n = mean_number(params, n0, t)?;
    current_at_occupation(params, n)
}

/// dI/dt = −γ(I − I_s).
pub fn current_rate(params: &SystemParams, i_now: f64) -> Result<f64> {
    Ok(-params.gamma_total() * (i_now - steady_current(params)?))
}

/// γ_e(n̄_e − n̄_s) − γ_c(n̄_s − n̄_c); zero up to rounding.
pub fn flux_balance_residual(params: &SystemParams) -> Result<f64> {
    let s = summarize(params)?;
    Ok(params.gamma_e * (s.n_e - s.n_s) - params.gamma_c * (s.n_s - s.n_c))
}

/// Geometric population (1/(n̄+1))(n̄/(n̄+1))ⁿ.
pub fn geometric_population(n_bar: f64, n: usize) -> f64 {
    if n_bar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let p0 = 1.0 / (n_bar + 1.0);
    let ratio = n_bar / (n_bar + 1.0);
    p0 * ratio.powf(n as f64)
}

/// Steady-state population of Fock level `n`.
pub fn steady_diagonal(params: &SystemParams, n: usize) -> Result<f64> {
    Ok(geometric_population(summarize(params)?.n_s, n))
}

fn eta_from_occupations(n_e: f64, n_c: f64) -> Result<f64> {
    if !(n_e > 0.0) || !n_e.is_finite() {
        return domain(format!(
            "emitter occupation must be > 0 for the transport factor, got {n_e}"
        ));
    }
    Ok(1.0 - n_c / n_e)
}

/// η_s = 1 − n̄_c/n̄_e.
pub fn transport_factor_steady(params: &SystemParams) -> Result<f64> {
    let s = summarize(params)?;
    eta_from_occupations(s.n_e, s.n_c)
}

/// η(t) = η_s + [γ/(γ_eγ_c) · I_0/n̄_e − η_s]e^{−γt}.
pub fn transport_factor_t(params: &SystemParams, n0: f64, t: f64) -> Result<f64> {
    require_time(t)?;
    let s = summarize(params)?;
    let eta_s = eta_from_occupations(s.n_e, s.n_c)?;
    let i0 = initial_current(params, n0)?;
    let prefactor = s.gamma_total / (params.gamma_e * params.gamma_c);
    Ok(eta_s + (prefactor * i0 / s.n_e - eta_s) * (-s.gamma_total * t).exp())
}

/// η_c = 1 − T_c/T_e.
pub fn carnot_factor(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    Ok(1.0 - params.temp_c / params.temp_e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpansionOrder {
    First,
    Second,
}

impl TryFrom<u32> for ExpansionOrder {
    type Error = crate::Error;

    fn try_from(order: u32) -> Result<Self> {
        match order {
            1 => Ok(ExpansionOrder::First),
            2 => Ok(ExpansionOrder::Second),
            _ => domain(format!("expansion available to order 1 or 2, not {order}")),
        }
    }
}

/// High-temperature series value of η_s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Expansion {
    pub value: f64,
    /// False when ħω_s/k_BT_c or ħω_s/k_BT_e is not below 1.
    pub in_regime: bool,
}

/// η_c at first order; η_c + (ħω_s/2k_BT_c)η_c(1 − η_c) at second.
pub fn transport_expansion(params: &SystemParams, order: ExpansionOrder) -> Result<Expansion> {
    let eta_c = carnot_factor(params)?;
    let x_c = params.hbar * params.omega_s / (params.k_b * params.temp_c);
    let x_e = params.hbar * params.omega_s / (params.k_b * params.temp_e);
    let value = match order {
        ExpansionOrder::First => eta_c,
        ExpansionOrder::Second => eta_c + 0.5 * x_c * eta_c * (1.0 - eta_c),
    };
    Ok(Expansion {
        value,
        in_regime: x_c < 1.0 && x_e < 1.0,
    })
}

/// Steady transport summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportReport {
    pub i_0: f64,
    pub i_s: f64,
    pub eta_s: f64,
    pub eta_c: f64,
    /// (ħω_s/2k_BT_c)η_c(1 − η_c), the leading quantum correction.
    pub correction: f64,
    pub e_s: f64,
}

pub fn transport_report(params: &SystemParams, n0: f64) -> Result<TransportReport> {
    let eta_c = carnot_factor(params)?;
    let second = transport_expansion(params, ExpansionOrder::Second)?;
    Ok(TransportReport {
        i_0: initial_current(params, n0)?,
        i_s: steady_current(params)?,
        eta_s: transport_factor_steady(params)?,
        eta_c,
        correction: second.value - eta_c,
        e_s: energy_loss_rate(params)?,
    })
}

/// η_s over a grid of collector temperatures at fixed emitter temperature.
pub fn transport_curve(params: &SystemParams, t_c_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    t_c_grid
        .iter()
        .map(|&t_c| {
            let p = SystemParams { temp_c: t_c, ..*params };
            Ok((t_c, transport_factor_steady(&p)?))
        })
        .collect()
}

/// One point of the half-factor locus; `t_c` is `None` when no root exists
/// in (0, T_e).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPoint {
    pub t_e: f64,
    pub t_c: Option<f64>,
}

const LOCUS_EDGE: f64 = 1e-9;
const LOCUS_RTOL: f64 = 1e-10;

/// Bisection for the collector temperature at which η_s falls to
/// `target_fraction` of its T_c → 0⁺ supremum.
pub fn half_factor_t_c(base: &SystemParams, t_e: f64, target_fraction: f64) -> Result<Option<f64>> {
    if !(t_e > 0.0) || !t_e.is_finite() {
        return domain(format!("emitter temperature must be > 0, got {t_e}"));
    }
    if !(target_fraction > 0.0 && target_fraction < 1.0) {
        return domain(format!("target fraction must lie in (0, 1), got {target_fraction}"));
    }
    let eta = |t_c: f64| {
        transport_factor_steady(&SystemParams {
            temp_e: t_e,
            temp_c: t_c,
            ..*base
        })
    };
    let mut lo = LOCUS_EDGE * t_e;
    let mut hi = t_e - LOCUS_EDGE * t_e;
    let target = target_fraction * eta(lo)?;
    // η_s decreases in T_c: positive at lo, negative at hi when a root exists.
    if eta(lo)? - target <= 0.0 || eta(hi)? - target >= 0.0 {
        return Ok(None);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if eta(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= LOCUS_RTOL * lo {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Half-factor locus over a grid of emitter temperatures.
pub fn half_factor_locus(base: &SystemParams, t_e_grid: &[f64], target_fraction: f64) -> Result<Vec<HalfPoint>> {
    half_factor_locus_with(Execution::default(), base, t_e_grid, target_fraction)
}

pub fn half_factor_locus_with(
    exec: Execution,
    base: &SystemParams,
    t_e_grid: &[f64],
    target_fraction: f64,
) -> Result<Vec<HalfPoint>> {
    base.validate()?;
    exec.map(t_e_grid, |&t_e| {
        Ok(HalfPoint {
            t_e,
            t_c: half_factor_t_c(base, t_e, target_fraction)?,
        })
    })
    .into_iter()
    .collect()
}
