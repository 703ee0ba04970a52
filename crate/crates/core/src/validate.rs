//! Oracle-equivalence suite: each closed form checked against the Lindblad
//! integrator, the finite-volume Fokker–Planck solver, or Monte-Carlo sampling.

use std::fmt;

use serde::Serialize;

use crate::analytic::{current, flux_balance_residual, geometric_population, mean_number};
use crate::error::Result;
use crate::exec::Execution;
use crate::fock::{build_ops, required_dim, DensityMatrix, FockSpace};
use crate::fokker_planck::{evolved_gaussian, max_fp_dt, narrow_initial, solve_fp_snapshots, NARROW_VARIANCE_FACTOR};
use crate::lindblad::{evolve, p_sampling_mean_with, steady_state, Generator};
use crate::params::{summarize, SystemParams};

/// Largest Fock dimension the suite will integrate.
pub const MAX_SUITE_DIM: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub params: SystemParams,
    /// Initial number state for the relaxation checks.
    pub n0: usize,
    /// Step override; `None` uses the stability-limited default.
    pub dt: Option<f64>,
    /// Fock dimension override; `None` uses the truncation rule, capped at 80.
    pub dim: Option<usize>,
    pub seed: u64,
    pub samples: usize,
    pub fp_points: usize,
    /// Multiplies every tolerance. Zero forces every check to fail.
    pub tolerance_scale: f64,
    pub exec: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            params: SystemParams::default(),
            n0: 0,
            dt: None,
            dim: None,
            seed: 7,
            samples: 1_000_000,
            fp_points: 2048,
            tolerance_scale: 1.0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Fock dimension for master-equation checks.
    pub dim: Option<usize>,
    /// Grid points for Fokker–Planck checks.
    pub points: Option<usize>,
    pub dt: Option<f64>,
}

impl Check {
    fn new(name: &'static str, measured: f64, tolerance: f64, scale: f64) -> Self {
        let tolerance = tolerance * scale;
        Check {
            name,
            measured,
            tolerance,
            passed: measured < tolerance,
            dim: None,
            points: None,
            dt: None,
        }
    }

    fn with_run(mut self, dim: usize, dt: f64) -> Self {
        self.dim = Some(dim);
        self.dt = Some(dt);
        self
    }

    fn with_grid(mut self, points: usize, dt: f64) -> Self {
        self.points = Some(points);
        self.dt = Some(dt);
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} measured={:.3e} tol={:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance
        )?;
        if let Some(d) = self.dim {
            write!(f, " dim={d}")?;
        }
        if let Some(n) = self.points {
            write!(f, " points={n}")?;
        }
        if let Some(dt) = self.dt {
            write!(f, " dt={dt:.6e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Truncation used by the suite: the rule's dimension, covering `n0`, capped at 80.
pub fn suite_dim(params: &SystemParams, n0: usize) -> Result<usize> {
    let s = summarize(params)?;
    let rule = required_dim(s.n_e.max(s.n_c).max(s.n_s))?;
    Ok(rule.max(n0 + 8).clamp(2, MAX_SUITE_DIM))
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    let p = &cfg.params;
    let s = summarize(p)?;
    let k = cfg.tolerance_scale;
    let gamma = s.gamma_total;
    let mut checks = Vec::new();

    checks.push(Check::new(
        "flux_balance",
        flux_balance_residual(p)?.abs() / s.n_e.max(1.0),
        1e-12,
        k,
    ));

    // Relaxation from a number state against the closed forms.
    let dim = cfg.dim.unwrap_or(suite_dim(p, cfg.n0)?);
    let space = FockSpace::new(dim)?;
    let gen = Generator::new(p, dim)?;
    let dt = cfg.dt.unwrap_or_else(|| gen.default_dt());
    let t_end = 5.0 / gamma;
    let steps = (t_end / dt * (1.0 - 1e-12)).ceil() as usize;
    let every = (steps / 10).max(1);
    let rho0 = DensityMatrix::number_state(space, cfg.n0)?;
    let traj = evolve(p, &rho0, t_end, dt, every)?;
    let n0 = cfg.n0 as f64;
    let mut n_err: f64 = 0.0;
    let mut i_err: f64 = 0.0;
    for (idx, &t) in traj.times.iter().enumerate() {
        n_err = n_err.max((traj.mean_n[idx] - mean_number(p, n0, t)?).abs());
        i_err = i_err.max((traj.current[idx] - current(p, n0, t)?).abs());
    }
    let scale = s.n_s.max(1.0);
    checks.push(Check::new("lindblad_mean_number", n_err / scale, 1e-5, k).with_run(dim, traj.dt));
    checks.push(Check::new("lindblad_current", i_err / (gamma * scale), 1e-5, k).with_run(dim, traj.dt));
    checks.push(Check::new("trace_preservation", traj.max_trace_defect(), 1e-8, k).with_run(dim, traj.dt));
    checks.push(Check::new("hermiticity", traj.max_hermiticity_defect(), 1e-9, k).with_run(dim, traj.dt));
    checks.push(Check::new("positivity", (-traj.min_eigenvalue()).max(0.0), 1e-8, k).with_run(dim, traj.dt));

    // Δ only rotates coherences.
    let shifted = SystemParams {
        delta: p.delta + 0.7,
        ..*p
    };
    let gen_shift = Generator::new(&shifted, dim)?;
    let dt_shift = dt.min(gen_shift.default_dt());
    let a = evolve(p, &rho0, t_end, dt_shift, every)?;
    let b = evolve(&shifted, &rho0, t_end, dt_shift, every)?;
    let delta_err = a
        .mean_n
        .iter()
        .zip(&b.mean_n)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new("delta_independence", delta_err, 1e-9, k).with_run(dim, a.dt));

    // Steady diagonal against the geometric law.
    let ops = build_ops(space);
    let steady = steady_state(p, &ops)?;
    let diag = steady.diagonal();
    let diag_err = diag
        .iter()
        .enumerate()
        .map(|(n, v)| (v - geometric_population(s.n_s, n)).abs())
        .fold(0.0, f64::max);
    let steady_dt = gen.default_dt();
    checks.push(Check::new("steady_diagonal", diag_err, 1e-6, k).with_run(dim, steady_dt));
    checks.push(Check::new("steady_off_diagonal", steady.max_off_diagonal(), 1e-9, k).with_run(dim, steady_dt));

    // Finite-volume solver against the evolved Gaussian.
    let x0 = 1.0;
    let init = narrow_initial(p, x0, cfg.fp_points)?;
    let fp_dt = max_fp_dt(p, &init)?;
    let times = [1.0 / gamma, 5.0 / gamma];
    let snaps = solve_fp_snapshots(p, &init, &times, fp_dt)?;
    let v0 = NARROW_VARIANCE_FACTOR * s.n_s;
    let mut l1: f64 = 0.0;
    let mut mass: f64 = 0.0;
    for (snap, &t) in snaps.iter().zip(&times) {
        let g = evolved_gaussian(p, x0, v0, t)?;
        l1 = l1.max(snap.l1_distance(|x| g.density(x)));
        mass = mass.max((snap.mass() - 1.0).abs());
    }
    checks.push(Check::new("fokker_planck_l1", l1, 1e-3, k).with_grid(cfg.fp_points, fp_dt));
    checks.push(Check::new("fokker_planck_mass", mass, 1e-6, k).with_grid(cfg.fp_points, fp_dt));

    // Monte-Carlo ⟨|α|²⟩; measured in standard errors.
    let mc = p_sampling_mean_with(cfg.exec, p, cfg.samples, cfg.seed)?;
    checks.push(Check::new(
        "p_sampling_mean_sigmas",
        (mc.mean - s.n_s).abs() / mc.std_error,
        4.0,
        k,
    ));

    Ok(Report { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteConfig {
        SuiteConfig {
            samples: 20_000,
            fp_points: 512,
            ..Default::default()
        }
    }

    #[test]
    fn default_suite_passes() {
        let report = run_suite(&quick()).unwrap();
        assert!(report.passed(), "{report}");
        assert!(report.checks.iter().any(|c| c.dim.is_some() && c.dt.is_some()));
        assert!(report.to_string().contains("dim="));
    }

    #[test]
    fn corrupted_tolerance_fails() {
        let report = run_suite(&SuiteConfig {
            tolerance_scale: 0.0,
            ..quick()
        })
        .unwrap();
        assert!(!report.passed());
        assert!(report.checks.iter().all(|c| !c.passed));
    }

    #[test]
    fn suite_dim_is_capped() {
        let hot = SystemParams {
            temp_e: 40.0,
            temp_c: 30.0,
            ..Default::default()
        };
        assert_eq!(suite_dim(&hot, 0).unwrap(), MAX_SUITE_DIM);
        assert!(suite_dim(&SystemParams::default(), 3).unwrap() >= 11);
    }
}
