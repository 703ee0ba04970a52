use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use open_boson::analytic::{
    half_factor_t_c, transport_expansion, transport_factor_steady, transport_report, ExpansionOrder,
};
use open_boson::fock::{DensityMatrix, FockSpace};
use open_boson::fokker_planck::{
    gaussian_x, high_temperature_regime, max_fp_dt, narrow_initial, solve_fp_snapshots, steady_force_coefficient,
    GridDistribution,
};
use open_boson::lindblad::{evolve, Generator};
use open_boson::output::{fmt_f64, CsvTable};
use open_boson::validate::{run_suite, suite_dim, Report, SuiteConfig};
use open_boson::{summarize, Execution, SystemParams};

use crate::config::{RunConfig, SweepParam};
use crate::UsageError;

const EVOLVE_SAMPLES: usize = 100;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn with_sweep_column(cfg: &RunConfig, rest: &[&str]) -> CsvTable {
    let mut header: Vec<&str> = Vec::new();
    if let Some(s) = &cfg.sweep {
        header.push(s.param.name());
    }
    header.extend_from_slice(rest);
    CsvTable::new(&header)
}

fn prefixed(sweep_value: Option<f64>, rest: &[f64]) -> Vec<f64> {
    sweep_value.into_iter().chain(rest.iter().copied()).collect()
}

pub fn write_table(table: &CsvTable, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            table.write_to(&mut w)?;
            w.flush()?;
        }
        None => table.write_to(io::stdout().lock())?,
    }
    Ok(())
}

fn forbid_sweep(cfg: &RunConfig, cmd: &str) -> anyhow::Result<()> {
    if cfg.sweep.is_some() {
        return Err(usage(format!("{cmd} does not take --sweep")));
    }
    Ok(())
}

pub fn steady(cfg: &RunConfig) -> anyhow::Result<CsvTable> {
    let mut table = with_sweep_column(cfg, &["n_e", "n_c", "n_s", "T_sys", "I_s", "eta_s", "eta_c", "E_s"]);
    let rows = Execution::default().map(&cfg.points(), |(v, p)| -> open_boson::Result<Vec<f64>> {
        let s = summarize(p)?;
        let r = transport_report(p, 0.0)?;
        Ok(prefixed(
            *v,
            &[s.n_e, s.n_c, s.n_s, s.temp_sys, r.i_s, r.eta_s, r.eta_c, r.e_s],
        ))
    });
    for row in rows {
        table.push_f64(&row?);
    }
    Ok(table)
}

pub fn transport(cfg: &RunConfig) -> anyhow::Result<CsvTable> {
    let n0 = cfg.n0.unwrap_or(0.0);
    let mut table = with_sweep_column(
        cfg,
        &[
            "I_0",
            "I_s",
            "eta_s",
            "eta_c",
            "eta_order2",
            "correction",
            "E_s",
            "series_in_regime",
        ],
    );
    let rows = Execution::default().map(&cfg.points(), |(v, p)| -> open_boson::Result<Vec<String>> {
        let r = transport_report(p, n0)?;
        let second = transport_expansion(p, ExpansionOrder::Second)?;
        let mut row: Vec<String> = prefixed(*v, &[r.i_0, r.i_s, r.eta_s, r.eta_c, second.value, r.correction, r.e_s])
            .into_iter()
            .map(fmt_f64)
            .collect();
        row.push(u8::from(second.in_regime).to_string());
        Ok(row)
    });
    for row in rows {
        table.push(row?);
    }
    Ok(table)
}

pub fn evolve_cmd(cfg: &RunConfig) -> anyhow::Result<CsvTable> {
    let n0 = cfg.n0.unwrap_or(0.0);
    if n0 < 0.0 || n0.fract() != 0.0 {
        return Err(usage(format!(
            "evolve starts from a number state; --n0 must be a whole number, got {n0}"
        )));
    }
    let n0_idx = n0 as usize;
    let mut table = with_sweep_column(cfg, &["t", "mean_n", "current", "trace_defect", "min_eig"]);
    let points = cfg.points();
    let runs = Execution::default().map(&points, |(v, p)| -> open_boson::Result<(Option<f64>, _)> {
        let dim = match cfg.dim {
            Some(d) => d,
            None => suite_dim(p, n0_idx)?,
        };
        let gen = Generator::new(p, dim)?;
        let dt = cfg.dt.unwrap_or_else(|| gen.default_dt());
        let t_end = cfg.t_end.unwrap_or(5.0 / p.gamma_total());
        let steps = (t_end / dt * (1.0 - 1e-12)).ceil() as usize;
        let every = steps.div_ceil(EVOLVE_SAMPLES).max(1);
        let rho0 = DensityMatrix::number_state(FockSpace::new(dim)?, n0_idx)?;
        Ok((*v, evolve(p, &rho0, t_end, dt, every)?))
    });
    for run in runs {
        let (v, traj) = run?;
        table.comment(format!(
            "{}dim={} dt={}",
            v.map(|x| format!("sweep={} ", fmt_f64(x))).unwrap_or_default(),
            traj.dim,
            fmt_f64(traj.dt)
        ));
        for k in 0..traj.len() {
            table.push_f64(&prefixed(
                v,
                &[
                    traj.times[k],
                    traj.mean_n[k],
                    traj.current[k],
                    traj.trace_defect[k],
                    traj.min_eig[k],
                ],
            ));
        }
    }
    Ok(table)
}

pub fn fig1(cfg: &RunConfig, emitter_temps: &[f64]) -> anyhow::Result<CsvTable> {
    let temps: Vec<f64> = if emitter_temps.is_empty() {
        vec![cfg.params.temp_e]
    } else {
        emitter_temps.to_vec()
    };
    if temps.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(usage("emitter temperatures must be finite and > 0"));
    }
    let shared_grid = match &cfg.sweep {
        Some(s) if s.param != SweepParam::TempC => return Err(usage("fig1 sweeps temp_c only")),
        Some(s) => {
            let t_min = temps.iter().cloned().fold(f64::INFINITY, f64::min);
            if s.min <= 0.0 || s.max >= t_min {
                return Err(usage(format!(
                    "collector sweep must lie inside (0, T_e) = (0, {t_min}), got [{}, {}]",
                    s.min, s.max
                )));
            }
            Some(s.values())
        }
        None => None,
    };
    let mut table = CsvTable::new(&["T_e", "T_c", "eta_s", "eta_c"]);
    let curves = Execution::default().map(&temps, |&t_e| -> open_boson::Result<Vec<[f64; 4]>> {
        let grid = shared_grid
            .clone()
            .unwrap_or_else(|| (1..100).map(|k| t_e * k as f64 / 100.0).collect());
        grid.iter()
            .map(|&t_c| {
                let p = SystemParams {
                    temp_e: t_e,
                    temp_c: t_c,
                    ..cfg.params
                };
                Ok([t_e, t_c, transport_factor_steady(&p)?, 1.0 - t_c / t_e])
            })
            .collect()
    });
    for curve in curves {
        for row in curve? {
            table.push_f64(&row);
        }
    }
    Ok(table)
}

pub fn fig2(cfg: &RunConfig, fraction: f64) -> anyhow::Result<CsvTable> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(usage(format!("--fraction must lie in (0, 1), got {fraction}")));
    }
    let grid = match &cfg.sweep {
        Some(s) if s.param != SweepParam::TempE => return Err(usage("fig2 sweeps temp_e only")),
        Some(s) if s.min <= 0.0 => return Err(usage("emitter temperatures must be > 0")),
        Some(s) => s.values(),
        None => (0..40).map(|k| 0.25 + 0.25 * k as f64).collect(),
    };
    cfg.params.validate()?;
    let mut table = CsvTable::new(&["T_e", "T_c_half", "root_found"]);
    let points = Execution::default().map(&grid, |&t_e| half_factor_t_c(&cfg.params, t_e, fraction));
    for (t_e, t_c) in grid.iter().zip(points) {
        match t_c? {
            Some(t_c) => table.push(vec![fmt_f64(*t_e), fmt_f64(t_c), "1".into()]),
            None => table.push(vec![fmt_f64(*t_e), "nan".into(), "0".into()]),
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FpSource {
    /// Finite-volume solution from a narrow Gaussian.
    Numeric,
    /// Closed-form propagator on the same grid.
    Analytic,
}

/// One snapshot table per requested time.
pub fn fp(cfg: &RunConfig, times: &[f64], points: usize, source: FpSource) -> anyhow::Result<Vec<CsvTable>> {
    forbid_sweep(cfg, "fp")?;
    if times.is_empty() {
        return Err(usage("fp needs at least one --times value"));
    }
    let p = &cfg.params;
    let x0 = cfg.n0.unwrap_or(1.0);
    let init = narrow_initial(p, x0, points)?;
    let grids: Vec<GridDistribution> = match source {
        FpSource::Numeric => {
            let dt = match cfg.dt {
                Some(dt) => dt,
                None => max_fp_dt(p, &init)?,
            };
            solve_fp_snapshots(p, &init, times, dt)?
        }
        FpSource::Analytic => times
            .iter()
            .map(|&t| {
                let values = (0..init.n_points())
                    .map(|i| gaussian_x(p, x0, init.x(i), t))
                    .collect::<Result<_, _>>()?;
                GridDistribution::new(init.x_min, init.x_max, values)
            })
            .collect::<Result<_, _>>()?,
    };
    let k = steady_force_coefficient(p)?;
    let high_t = high_temperature_regime(p)?;
    if !high_t {
        eprintln!("note: outside the high-temperature regime; force coefficient uses the weighted temperature");
    }
    Ok(grids
        .iter()
        .zip(times)
        .map(|(g, &t)| {
            let mut table = g.to_table(t, p);
            table.comment(format!(
                "force_coefficient={} high_temperature_regime={high_t}",
                fmt_f64(k)
            ));
            table
        })
        .collect())
}

/// `out` for a single table, `stem-<k>.ext` for several.
pub fn snapshot_paths(out: &Path, count: usize) -> Vec<PathBuf> {
    if count == 1 {
        return vec![out.to_path_buf()];
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "snapshot".into());
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    (0..count)
        .map(|k| out.with_file_name(format!("{stem}-{k}{ext}")))
        .collect()
}

pub struct ValidateOptions {
    pub corrupt_tolerance: bool,
    pub samples: usize,
    pub fp_points: usize,
}

pub fn validate(cfg: &RunConfig, opts: &ValidateOptions) -> anyhow::Result<Report> {
    forbid_sweep(cfg, "validate")?;
    let n0 = cfg.n0.unwrap_or(0.0);
    if n0 < 0.0 || n0.fract() != 0.0 {
        return Err(usage(format!("--n0 must be a whole number for validate, got {n0}")));
    }
    if cfg.t_end.is_some() {
        return Err(usage("validate uses its own time span; drop --t-end"));
    }
    let suite = SuiteConfig {
        params: cfg.params,
        n0: n0 as usize,
        dt: cfg.dt,
        dim: cfg.dim,
        seed: cfg.seed,
        samples: opts.samples,
        fp_points: opts.fp_points,
        tolerance_scale: if opts.corrupt_tolerance { 0.0 } else { 1.0 },
        exec: Execution::default(),
    };
    Ok(run_suite(&suite)?)
}
