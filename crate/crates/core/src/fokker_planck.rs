//! Fokker–Planck description of the P-representation.
//!
//! Writing α = x + iy, the P-function separates into two identical 1-D
//! Ornstein–Uhlenbeck problems
//!
//! ```text
//! ∂X/∂t = (γ/2)∂_x(xX) + D ∂²_x X,   D = (γ_e n̄_e + γ_c n̄_c)/4 = γn̄_s/4,
//! ```
//!
//! whose propagator is a Gaussian drifting as x₀e^{−γt/2} with variance
//! n̄_s(1 − e^{−γt})/2. This module carries the closed forms, the mapping to
//! position and momentum, the entropic force, and an explicit finite-volume
//! solver used as an independent check on the closed forms.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::output::{fmt_f64, params_hash, CsvTable};
use crate::params::{summarize, SystemParams};

/// Diffusion number limit D·dt/Δx² for the explicit solver.
pub const CFL_LIMIT: f64 = 0.4;
/// Variance of the grid stand-in for a delta initial condition, in units of n̄_s.
pub const NARROW_VARIANCE_FACTOR: f64 = 1e-3;
const MASS_TOL: f64 = 1e-6;
const GRID_HALF_WIDTH_SIGMAS: f64 = 8.0;
const GRID_MIN_SIGMAS: f64 = 6.0;

fn require_positive_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        domain(format!("t must be > 0 (t = 0 is a delta function), got {t}"))
    }
}

/// A normalized 1-D Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianState {
    pub center: f64,
    /// Variance σ² of the Gaussian.
    pub variance: f64,
    /// Trapezoid integral of the density over ±12σ.
    pub norm_check: f64,
}

impl GaussianState {
    fn new(center: f64, variance: f64) -> Self {
        let mut g = GaussianState {
            center,
            variance,
            norm_check: 0.0,
        };
        let sigma = variance.sqrt();
        let n = 4001;
        let (a, b) = (center - 12.0 * sigma, center + 12.0 * sigma);
        let h = (b - a) / (n - 1) as f64;
        let inner: f64 = (1..n - 1).map(|i| g.density(a + i as f64 * h)).sum();
        g.norm_check = h * (inner + 0.5 * (g.density(a) + g.density(b)));
        g
    }

    pub fn density(&self, x: f64) -> f64 {
        let d = x - self.center;
        (-d * d / (2.0 * self.variance)).exp() / (2.0 * PI * self.variance).sqrt()
    }
}

/// Evolve a Gaussian of variance `initial_variance` centred at `x0` for time
/// `t`; `initial_variance = 0` is the delta-function propagator.
pub fn evolved_gaussian(params: &SystemParams, x0: f64, initial_variance: f64, t: f64) -> Result<GaussianState> {
    if !(initial_variance >= 0.0) {
        return domain(format!("initial variance must be >= 0, got {initial_variance}"));
    }
    if initial_variance == 0.0 {
        require_positive_time(t)?;
    } else if !(t >= 0.0) {
        return domain(format!("t must be >= 0, got {t}"));
    }
    let s = summarize(params)?;
    let decay = (-s.gamma_total * t).exp();
    let variance = initial_variance * decay - 0.5 * s.n_s * (-s.gamma_total * t).exp_m1();
    Ok(GaussianState::new(x0 * (-0.5 * s.gamma_total * t).exp(), variance))
}

/// Propagator X(x, t | x₀, 0) as a [`GaussianState`].
pub fn gaussian_state(params: &SystemParams, x0: f64, t: f64) -> Result<GaussianState> {
    evolved_gaussian(params, x0, 0.0, t)
}

/// X(x,t|x₀,0) = (πn̄_s(1−e^{−γt}))^{−1/2} exp[−(x − x₀e^{−γt/2})²/(n̄_s(1−e^{−γt}))].
pub fn gaussian_x(params: &SystemParams, x0: f64, x: f64, t: f64) -> Result<f64> {
    require_positive_time(t)?;
    let s = summarize(params)?;
    let spread = -s.n_s * (-s.gamma_total * t).exp_m1();
    let d = x - x0 * (-0.5 * s.gamma_total * t).exp();
    Ok((-d * d / spread).exp() / (PI * spread).sqrt())
}

/// Joint P̃(x, y, t) = X(x,t|x₀)·Y(y,t|y₀); Y has the same form as X.
pub fn joint_p(params: &SystemParams, x0: f64, y0: f64, x: f64, y: f64, t: f64) -> Result<f64> {
    Ok(gaussian_x(params, x0, x, t)? * gaussian_x(params, y0, y, t)?)
}

fn normal_density(z: f64, center: f64, variance: f64) -> f64 {
    let d = z - center;
    (-d * d / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

/// Variance ħn̄_s(1−e^{−γt})/(mω_s) of the position distribution.
pub fn position_variance(params: &SystemParams, t: f64) -> Result<f64> {
    let s = summarize(params)?;
    Ok(-params.hbar * s.n_s * (-s.gamma_total * t).exp_m1() / (params.mass * params.omega_s))
}

/// Variance ħmω_s n̄_s(1−e^{−γt}) of the momentum distribution.
pub fn momentum_variance(params: &SystemParams, t: f64) -> Result<f64> {
    let s = summarize(params)?;
    Ok(-params.hbar * params.mass * params.omega_s * s.n_s * (-s.gamma_total * t).exp_m1())
}

/// Position density from q = x√(2ħ/mω_s), normalized over q.
pub fn p_position(params: &SystemParams, q0: f64, q: f64, t: f64) -> Result<f64> {
    require_positive_time(t)?;
    let center = q0 * (-0.5 * params.gamma_total() * t).exp();
    Ok(normal_density(q, center, position_variance(params, t)?))
}

/// Momentum density from p = y√(2ħmω_s), normalized over p.
pub fn p_momentum(params: &SystemParams, p0: f64, p: f64, t: f64) -> Result<f64> {
    require_positive_time(t)?;
    let center = p0 * (-0.5 * params.gamma_total() * t).exp();
    Ok(normal_density(p, center, momentum_variance(params, t)?))
}

/// Steady P(α, α*) = exp(−|α|²/n̄_s)/(πn̄_s).
pub fn steady_p(params: &SystemParams, alpha_sq: f64) -> Result<f64> {
    if !(alpha_sq >= 0.0) {
        return domain(format!("|alpha|^2 must be >= 0, got {alpha_sq}"));
    }
    let n_s = summarize(params)?.n_s;
    if !(n_s > 0.0) {
        return domain("steady occupation is zero; the P-distribution is a delta function");
    }
    Ok((-alpha_sq / n_s).exp() / (PI * n_s))
}

/// Entropic force k_BT ∂_q ln P(q,t) with T the damping-weighted temperature:
/// −(mω_s k_BT/(ħn̄_s))·(q − q₀e^{−γt/2})/(1 − e^{−γt}).
pub fn entropic_force(params: &SystemParams, q: f64, q0: f64, t: f64) -> Result<f64> {
    require_positive_time(t)?;
    let s = summarize(params)?;
    let center = q0 * (-0.5 * s.gamma_total * t).exp();
    let spread = -(-s.gamma_total * t).exp_m1();
    Ok(-steady_force_coefficient(params)? * (q - center) / spread)
}

/// Spring constant mω_s k_BT/(ħn̄_s) of the steady entropic force.
pub fn steady_force_coefficient(params: &SystemParams) -> Result<f64> {
    let s = summarize(params)?;
    Ok(params.mass * params.omega_s * params.k_b * s.temp_sys / (params.hbar * s.n_s))
}

/// True when ħω_s/k_BT < 0.01, where n̄_s ≈ k_BT/ħω_s and the entropic force
/// reduces to Hooke's law.
pub fn high_temperature_regime(params: &SystemParams) -> Result<bool> {
    let s = summarize(params)?;
    Ok(params.hbar * params.omega_s / (params.k_b * s.temp_sys) < 0.01)
}

/// |k(λ) − mω_s²|/(mω_s²) after scaling both bath temperatures by each λ.
pub fn hooke_limit_check(params: &SystemParams, lambdas: &[f64]) -> Result<Vec<f64>> {
    let hooke = params.mass * params.omega_s * params.omega_s;
    lambdas
        .iter()
        .map(|&l| {
            if !(l > 0.0) {
                return domain(format!("temperature scale must be > 0, got {l}"));
            }
            let k = steady_force_coefficient(&params.with_temperature_scale(l))?;
            Ok((k - hooke).abs() / hooke)
        })
        .collect()
}

/// A probability density sampled on a uniform grid including both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDistribution {
    pub x_min: f64,
    pub x_max: f64,
    pub values: Vec<f64>,
}

impl GridDistribution {
    pub fn new(x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return domain(format!("grid needs at least 3 points, got {}", values.len()));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return domain(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            ));
        }
        Ok(GridDistribution { x_min, x_max, values })
    }

    pub fn from_fn(x_min: f64, x_max: f64, n_points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut g = GridDistribution::new(x_min, x_max, vec![0.0; n_points.max(3)])?;
        if n_points < 3 {
            return domain(format!("grid needs at least 3 points, got {n_points}"));
        }
        for i in 0..n_points {
            g.values[i] = f(g.x(i));
        }
        Ok(g)
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    fn trapezoid(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.n_points();
        let inner: f64 = (1..n - 1).map(&f).sum();
        self.dx() * (inner + 0.5 * (f(0) + f(n - 1)))
    }

    pub fn mass(&self) -> f64 {
        self.trapezoid(|i| self.values[i])
    }

    pub fn mean(&self) -> f64 {
        self.trapezoid(|i| self.x(i) * self.values[i]) / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.trapezoid(|i| (self.x(i) - mu).powi(2) * self.values[i]) / self.mass()
    }

    /// Trapezoid L1 distance to a reference density.
    pub fn l1_distance(&self, reference: impl Fn(f64) -> f64) -> f64 {
        self.trapezoid(|i| (self.values[i] - reference(self.x(i))).abs())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `x,value` rows preceded by `# t=…` and `# params=…` comments.
    /// Undershoot below zero is clamped in the written values.
    pub fn to_table(&self, t: f64, params: &SystemParams) -> CsvTable {
        let mut table = CsvTable::new(&["x", "value"]);
        table.comment(format!("t={}", fmt_f64(t)));
        table.comment(format!("params={}", params_hash(params)));
        for (i, v) in self.values.iter().enumerate() {
            table.push_f64(&[self.x(i), v.max(0.0)]);
        }
        table
    }
}

/// Symmetric grid reaching 8√(n̄_s/2) beyond |x₀|.
pub fn auto_grid_bounds(params: &SystemParams, x0: f64) -> Result<(f64, f64)> {
    let sigma_s = (0.5 * summarize(params)?.n_s).sqrt();
    let half = x0.abs() + GRID_HALF_WIDTH_SIGMAS * sigma_s;
    Ok((-half, half))
}

/// Narrow Gaussian (variance 1e−3·n̄_s) at `x0` standing in for δ(x − x₀).
pub fn narrow_initial(params: &SystemParams, x0: f64, n_points: usize) -> Result<GridDistribution> {
    let (lo, hi) = auto_grid_bounds(params, x0)?;
    let v0 = NARROW_VARIANCE_FACTOR * summarize(params)?.n_s;
    GridDistribution::from_fn(lo, hi, n_points, |x| normal_density(x, x0, v0))
}

/// Largest step satisfying D·dt/Δx² ≤ 0.4 on `grid`.
pub fn max_fp_dt(params: &SystemParams, grid: &GridDistribution) -> Result<f64> {
    let d = diffusion(params)?;
    Ok(CFL_LIMIT * grid.dx() * grid.dx() / d)
}

fn diffusion(params: &SystemParams) -> Result<f64> {
    let s = summarize(params)?;
    Ok(0.25 * (params.gamma_e * s.n_e + params.gamma_c * s.n_c))
}

struct FpOperator {
    drift: f64,
    diffusion: f64,
    x_min: f64,
    dx: f64,
}

impl FpOperator {
    /// Conservative central flux difference; the end points stay at zero.
    fn apply(&self, u: &[f64], out: &mut [f64], flux: &mut [f64]) {
        let n = u.len();
        let (dx, a, d) = (self.dx, self.drift, self.diffusion);
        for i in 0..n - 1 {
            let x_face = self.x_min + (i as f64 + 0.5) * dx;
            flux[i] = -a * x_face * 0.5 * (u[i] + u[i + 1]) - d * (u[i + 1] - u[i]) / dx;
        }
        out[0] = 0.0;
        out[n - 1] = 0.0;
        for i in 1..n - 1 {
            out[i] = -(flux[i] - flux[i - 1]) / dx;
        }
    }
}

/// Explicit finite-volume solve of the 1-D equation with zero-density
/// Dirichlet ends, advanced by Heun's method (SSP-RK2). Time steps are
/// `t_end / ceil(t_end/dt)`.
pub fn solve_fp(params: &SystemParams, initial: &GridDistribution, t_end: f64, dt: f64) -> Result<GridDistribution> {
    let mut out = solve_fp_snapshots(params, initial, &[t_end], dt)?;
    Ok(out.pop().expect("one snapshot"))
}

/// Snapshots of the solution at each of the non-decreasing `times`.
pub fn solve_fp_snapshots(
    params: &SystemParams,
    initial: &GridDistribution,
    times: &[f64],
    dt: f64,
) -> Result<Vec<GridDistribution>> {
    let s = summarize(params)?;
    let d = diffusion(params)?;
    if !(dt > 0.0) {
        return domain(format!("dt must be > 0, got {dt}"));
    }
    let limit = max_fp_dt(params, initial)?;
    if d * dt / (initial.dx() * initial.dx()) > CFL_LIMIT * (1.0 + 1e-12) {
        return Err(Error::Stability {
            dt,
            suggested_dt: limit,
        });
    }
    let mass = initial.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return domain(format!("initial mass must be 1 within {MASS_TOL:e}, got {mass}"));
    }
    check_grid_extent(initial, s.n_s)?;
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return domain("snapshot times must be >= 0 and non-decreasing");
    }

    let op = FpOperator {
        drift: 0.5 * s.gamma_total,
        diffusion: d,
        x_min: initial.x_min,
        dx: initial.dx(),
    };
    let n = initial.n_points();
    let mut u = initial.values.clone();
    u[0] = 0.0;
    u[n - 1] = 0.0;
    let mut k = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut flux = vec![0.0; n - 1];
    let mut now = 0.0;
    let mut snapshots = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - now;
        let steps = (span / dt * (1.0 - 1e-12)).ceil() as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                op.apply(&u, &mut k, &mut flux);
                for i in 0..n {
                    stage[i] = u[i] + h * k[i];
                }
                op.apply(&stage, &mut k, &mut flux);
                for i in 0..n {
                    u[i] = 0.5 * (u[i] + stage[i] + h * k[i]);
                }
            }
        }
        now = target;
        snapshots.push(GridDistribution {
            x_min: initial.x_min,
            x_max: initial.x_max,
            values: u.clone(),
        });
    }
    Ok(snapshots)
}

/// The grid must span six standard deviations of both the initial data and
/// the steady Gaussian.
fn check_grid_extent(grid: &GridDistribution, n_s: f64) -> Result<()> {
    let mu = grid.mean();
    let sigma = grid.variance().sqrt().max((0.5 * n_s).sqrt());
    let need_lo = (mu - GRID_MIN_SIGMAS * sigma).min(-GRID_MIN_SIGMAS * (0.5 * n_s).sqrt());
    let need_hi = (mu + GRID_MIN_SIGMAS * sigma).max(GRID_MIN_SIGMAS * (0.5 * n_s).sqrt());
    if grid.x_min > need_lo || grid.x_max < need_hi {
        return domain(format!(
            "grid [{}, {}] must cover [{need_lo}, {need_hi}] (6 standard deviations)",
            grid.x_min, grid.x_max
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_params() -> SystemParams {
        // n̄_e = n̄_c = 1 gives n̄_s = 1; γ = 1.
        let t1 = 1.0 / std::f64::consts::LN_2;
        SystemParams {
            temp_e: t1,
            temp_c: t1,
            gamma_e: 0.5,
            gamma_c: 0.5,
            ..Default::default()
        }
    }

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / (n - 1) as f64;
        let inner: f64 = (1..n - 1).map(|i| f(a + i as f64 * h)).sum();
        h * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn steady_limit_peak() {
        let p = SystemParams::default();
        let n_s = p.n_s().unwrap();
        let v = gaussian_x(&p, 0.7, 0.0, 60.0).unwrap();
        assert_relative_eq!(v, 1.0 / (PI * n_s).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn propagator_normalized() {
        let p = SystemParams::default();
        for t in [0.01, 0.3, 2.0, 9.0] {
            let g = gaussian_state(&p, 1.2, t).unwrap();
            let s = 12.0 * g.variance.sqrt();
            let total = trapezoid(
                |x| gaussian_x(&p, 1.2, x, t).unwrap(),
                g.center - s,
                g.center + s,
                20001,
            );
            assert!((total - 1.0).abs() < 1e-10);
            assert!((g.norm_check - 1.0).abs() < 1e-9);
        }
        assert!(gaussian_x(&p, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn propagator_center_and_variance() {
        // n̄_s = 2, γ = 1, t = ln 4.
        let t2 = 1.0 / 1.5f64.ln();
        let p = SystemParams {
            temp_e: t2,
            temp_c: t2,
            gamma_e: 0.5,
            gamma_c: 0.5,
            ..Default::default()
        };
        let g = gaussian_state(&p, 1.0, 4.0f64.ln()).unwrap();
        assert_relative_eq!(g.center, 0.5, epsilon = 1e-12);
        assert_relative_eq!(g.variance, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn position_distribution_collapses_at_short_times() {
        let p = SystemParams::default();
        let (mut prev_off, mut prev_on) = (f64::INFINITY, 0.0);
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let off = p_position(&p, 0.5, 0.9, t).unwrap();
            let on = p_position(&p, 0.5, 0.5 * (-0.5 * p.gamma_total() * t).exp(), t).unwrap();
            assert!(off < prev_off && on > prev_on);
            prev_off = off;
            prev_on = on;
        }
        assert!(prev_off < 1e-100 && prev_on > 10.0);
        assert!(p_position(&p, 0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn position_matches_x_under_change_of_variables() {
        let p = SystemParams::default();
        let s2 = 2.0f64.sqrt();
        for (x0, x, t) in [(0.3, -0.2, 0.5), (1.0, 1.4, 2.0), (-0.7, 0.0, 0.05)] {
            let via_x = gaussian_x(&p, x0, x, t).unwrap() / s2;
            assert_relative_eq!(p_position(&p, x0 * s2, x * s2, t).unwrap(), via_x, max_relative = 1e-12);
            assert_relative_eq!(p_momentum(&p, x0 * s2, x * s2, t).unwrap(), via_x, max_relative = 1e-12);
        }
    }

    #[test]
    fn position_and_momentum_moments() {
        let p = SystemParams {
            mass: 2.5,
            omega_s: 1.3,
            hbar: 0.8,
            ..Default::default()
        };
        let t = 0.7;
        let s = summarize(&p).unwrap();
        let c = 0.4 * (-0.5 * s.gamma_total * t).exp();
        let vq = position_variance(&p, t).unwrap();
        let m2 = trapezoid(
            |q| (q - c).powi(2) * p_position(&p, 0.4, q, t).unwrap(),
            c - 15.0,
            c + 15.0,
            30001,
        );
        let want = p.hbar * s.n_s * (1.0 - (-s.gamma_total * t).exp()) / (p.mass * p.omega_s);
        assert_relative_eq!(m2, want, max_relative = 1e-9);
        assert_relative_eq!(vq, want, max_relative = 1e-12);
        let vp = momentum_variance(&p, 80.0).unwrap();
        assert_relative_eq!(vp, p.hbar * p.mass * p.omega_s * s.n_s, max_relative = 1e-12);
        let total = trapezoid(|x| p_momentum(&p, 0.0, x, t).unwrap(), -40.0, 40.0, 40001);
        assert!((total - 1.0).abs() < 1e-10);
        // In natural units m ↔ 1/m maps the momentum density onto the position density.
        let natural = SystemParams {
            omega_s: 1.0,
            hbar: 1.0,
            ..p
        };
        let inv = SystemParams {
            mass: 1.0 / p.mass,
            ..natural
        };
        assert_relative_eq!(
            p_momentum(&inv, 0.3, 0.9, t).unwrap(),
            p_position(&natural, 0.3, 0.9, t).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn steady_p_examples() {
        let p = unit_params();
        let n_s = p.n_s().unwrap();
        assert_relative_eq!(n_s, 1.0, epsilon = 1e-12);
        assert_relative_eq!(steady_p(&p, 0.0).unwrap(), 1.0 / PI, max_relative = 1e-12);
        // Mass inside |α| ≤ 1 by polar quadrature.
        let inside = trapezoid(|r| 2.0 * PI * r * steady_p(&p, r * r).unwrap(), 0.0, 1.0, 20001);
        assert_relative_eq!(inside, 1.0 - (-1.0f64).exp(), max_relative = 1e-8);
        assert!(steady_p(&p, -1.0).is_err());
        let frozen = SystemParams {
            temp_e: 1e-3,
            temp_c: 1e-3,
            ..p
        };
        assert!(steady_p(&frozen, 0.0).is_err());
    }

    #[test]
    fn steady_p_second_moment_by_cartesian_quadrature() {
        let p = SystemParams::default();
        let n_s = p.n_s().unwrap();
        let (l, n) = (12.0, 801);
        let h = 2.0 * l / (n - 1) as f64;
        let mut total = 0.0;
        let mut moment = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (-l + i as f64 * h, -l + j as f64 * h);
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                let v = steady_p(&p, x * x + y * y).unwrap() * w * h * h;
                total += v;
                moment += v * (x * x + y * y);
            }
        }
        assert!((total - 1.0).abs() < 1e-10);
        assert!((moment - n_s).abs() < 1e-8);
    }

    #[test]
    fn separated_solution_reaches_steady_p() {
        let p = SystemParams::default();
        for x in [-2.0, -0.5, 0.0, 0.8, 1.7] {
            for y in [-1.0, 0.0, 0.3, 2.2] {
                let joint = joint_p(&p, 0.9, -0.4, x, y, 40.0).unwrap();
                assert!((joint - steady_p(&p, x * x + y * y).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn steady_marginal_variances() {
        let p = SystemParams {
            mass: 0.6,
            omega_s: 2.0,
            ..Default::default()
        };
        let n_s = p.n_s().unwrap();
        assert_relative_eq!(
            position_variance(&p, 100.0).unwrap(),
            n_s / (p.mass * p.omega_s),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            momentum_variance(&p, 100.0).unwrap(),
            n_s * p.mass * p.omega_s,
            max_relative = 1e-12
        );
    }

    #[test]
    fn entropic_force_examples() {
        let p = SystemParams {
            mass: 1.7,
            omega_s: 0.9,
            ..Default::default()
        };
        let t = 0.6;
        let q0 = 1.1;
        let c = q0 * (-0.5 * p.gamma_total() * t).exp();
        assert_eq!(entropic_force(&p, c, q0, t).unwrap(), 0.0);
        let k = steady_force_coefficient(&p).unwrap();
        assert_relative_eq!(
            entropic_force(&p, 0.8, q0, 200.0).unwrap(),
            -k * 0.8,
            max_relative = 1e-12
        );
        let temp = summarize(&p).unwrap().temp_sys;
        let h = 1e-5;
        for q in [-1.0, 0.2, 0.9, 2.4] {
            let lp = |z: f64| p_position(&p, q0, z, t).unwrap().ln();
            let fd = p.k_b * temp * (lp(q + h) - lp(q - h)) / (2.0 * h);
            assert!((fd - entropic_force(&p, q, q0, t).unwrap()).abs() < 1e-8);
        }
        assert!(entropic_force(&p, 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn entropic_force_is_linear(q1 in -5.0f64..5.0, q2 in -5.0f64..5.0, t in 0.05f64..5.0) {
            let p = SystemParams::default();
            let f = |q: f64| entropic_force(&p, q, 0.4, t).unwrap();
            let mid = 0.5 * (q1 + q2);
            let scale = 1.0 + f(q1).abs() + f(q2).abs();
            prop_assert!((f(mid) - 0.5 * (f(q1) + f(q2))).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn hooke_limit_examples() {
        let dev = hooke_limit_check(&SystemParams::default(), &[1.0, 10.0, 100.0, 1000.0]).unwrap();
        assert!(dev.windows(2).all(|w| w[1] < w[0]));
        assert!(dev[3] < 1e-3);
        assert!(hooke_limit_check(&SystemParams::default(), &[0.0]).is_err());
        assert!(!high_temperature_regime(&SystemParams::default()).unwrap());
        assert!(high_temperature_regime(&SystemParams::default().with_temperature_scale(1000.0)).unwrap());
    }

    #[test]
    fn grid_validation() {
        assert!(GridDistribution::new(0.0, 1.0, vec![0.0, 1.0]).is_err());
        assert!(GridDistribution::new(1.0, 1.0, vec![0.0; 5]).is_err());
        let g = GridDistribution::from_fn(-1.0, 1.0, 5, |x| x).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.values, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn solver_guards() {
        let p = unit_params();
        let init = narrow_initial(&p, 1.0, 401).unwrap();
        let limit = max_fp_dt(&p, &init).unwrap();
        match solve_fp(&p, &init, 0.1, 2.0 * limit) {
            Err(Error::Stability { suggested_dt, .. }) => assert_relative_eq!(suggested_dt, limit),
            other => panic!("unexpected {other:?}"),
        }
        let mut heavy = init.clone();
        heavy.values.iter_mut().for_each(|v| *v *= 1.01);
        assert!(solve_fp(&p, &heavy, 0.1, limit).is_err());
        let (lo, hi) = auto_grid_bounds(&p, 0.0).unwrap();
        let cramped = GridDistribution::from_fn(lo / 3.0, hi / 3.0, 301, |x| normal_density(x, 0.0, 0.5)).unwrap();
        assert!(solve_fp(&p, &cramped, 0.1, 1e-5).is_err());
    }

    #[test]
    fn steady_gaussian_is_fixed_point() {
        let p = unit_params();
        let (lo, hi) = auto_grid_bounds(&p, 0.0).unwrap();
        let steady = GaussianState::new(0.0, 0.5 * p.n_s().unwrap());
        let init = GridDistribution::from_fn(lo, hi, 801, |x| steady.density(x)).unwrap();
        let dt = max_fp_dt(&p, &init).unwrap();
        let out = solve_fp(&p, &init, 2.0, dt).unwrap();
        assert!(out.l1_distance(|x| steady.density(x)) < 1e-4);
        assert!((out.mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn narrow_start_tracks_propagator() {
        let p = unit_params();
        let init = narrow_initial(&p, 1.0, 2048).unwrap();
        let dt = max_fp_dt(&p, &init).unwrap();
        let out = solve_fp(&p, &init, 1.0, dt).unwrap();
        let l1 = out.l1_distance(|x| gaussian_x(&p, 1.0, x, 1.0).unwrap());
        assert!(l1 < 1e-3, "L1 = {l1:e}");
        assert!((out.mass() - 1.0).abs() < 1e-6);
        assert!(out.min_value() >= -1e-12);
    }

    #[test]
    fn snapshot_csv_header() {
        let p = unit_params();
        let init = narrow_initial(&p, 0.5, 1024).unwrap();
        let snaps = solve_fp_snapshots(&p, &init, &[0.0, 0.1], max_fp_dt(&p, &init).unwrap()).unwrap();
        assert_eq!(snaps.len(), 2);
        let text = snaps[1].to_table(0.1, &p).to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# t="));
        assert!(lines[1].starts_with("# params="));
        assert_eq!(lines[2], "x,value");
        assert_eq!(lines.len(), 3 + 1024);
    }
}
