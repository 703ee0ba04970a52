//! Numerical oracle: fixed-step RK4 integration of the Schrödinger-picture
//! master equation on a truncated Fock space.
//!
//! The generator is written in Lindblad form,
//!
//! ```text
//! dρ/dt = −iω[a†a, ρ] + (γ + G)·D[a]ρ + G·D[a†]ρ,   G = γ_e n̄_e + γ_c n̄_c,
//! D[L]ρ = LρL† − ½{L†L, ρ},
//! ```
//!
//! which keeps ρ hermitian and gives d⟨n⟩/dt = −γ(⟨n⟩ − n̄_s) with the
//! geometric steady state at n̄_s. On diagonal states it coincides
//! term by term with the grouping −(γ/2)(a†aρ + ρa†a − 2aρa†) +
//! G(aρa† + a†ρa − ρaa† − a†aρ).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::analytic::current_at_occupation;
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::fock::{CMatrix, DensityMatrix, FockSpace, LadderOps};
use crate::output::{fmt_f64, CsvTable};
use crate::params::{summarize, SystemParams};

/// Largest |z| for which the whole left half-disk lies inside the RK4
/// stability region is ≈ 2.61.
const RK4_HALF_DISK: f64 = 2.5;
/// Accuracy guard: dt·γ and dt·|ω| must stay below this.
const ACCURACY_GUARD: f64 = 0.1;
const DEFAULT_STEPS_PER_TIME: f64 = 100.0;

const STEADY_RESIDUAL: f64 = 1e-10;
const STEADY_MAX_TIME_IN_RELAXATIONS: f64 = 500.0;
const STEADY_CHECK_EVERY: usize = 50;

pub const MIN_SAMPLES: usize = 10_000;
const SAMPLE_SHARDS: usize = 64;

/// dρ/dt built from the explicit ladder matrices. Dense reference form of
/// [`Generator::apply`].
pub fn rhs(params: &SystemParams, ops: &LadderOps, rho: &DensityMatrix) -> Result<CMatrix> {
    if ops.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho.dim(),
        });
    }
    let s = summarize(params)?;
    let pump = params.gamma_e * s.n_e + params.gamma_c * s.n_c;
    let r = rho.matrix();
    let a = &ops.annihilate;
    let ad = &ops.create;
    let num = &ops.number;
    let aad = a * ad;
    let half = Complex64::new(0.5, 0.0);
    let minus_i_omega = Complex64::new(0.0, -params.omega());

    let coherent = (num * r - r * num) * minus_i_omega;
    let a_r_ad = a * r * ad;
    let ad_r_a = ad * r * a;
    let damping = (num * r + r * num - &a_r_ad * Complex64::new(2.0, 0.0)) * Complex64::new(-0.5 * s.gamma_total, 0.0);
    let pumping = (&a_r_ad + &ad_r_a - (&aad + num) * r * half - r * (&aad + num) * half) * Complex64::new(pump, 0.0);
    Ok(coherent + damping + pumping)
}

/// Master-equation generator specialised to the bidiagonal ladder
/// operators, so one application costs O(dim²).
#[derive(Debug, Clone)]
pub struct Generator {
    dim: usize,
    omega: f64,
    /// γ + G, the coefficient of D[a].
    down: f64,
    /// G, the coefficient of D[a†].
    up: f64,
    gamma: f64,
    sqrt_n: Vec<f64>,
    /// Diagonal of the truncated a a†: 1, 2, …, dim−1, 0.
    raise_weight: Vec<f64>,
}

impl Generator {
    pub fn new(params: &SystemParams, dim: usize) -> Result<Self> {
        FockSpace::new(dim)?;
        let s = summarize(params)?;
        let pump = params.gamma_e * s.n_e + params.gamma_c * s.n_c;
        let sqrt_n = (0..=dim).map(|n| (n as f64).sqrt()).collect();
        let raise_weight = (0..dim)
            .map(|n| if n + 1 < dim { (n + 1) as f64 } else { 0.0 })
            .collect();
        Ok(Generator {
            dim,
            omega: params.omega(),
            down: s.gamma_total + pump,
            up: pump,
            gamma: s.gamma_total,
            sqrt_n,
            raise_weight,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Write dρ/dt into `out`. Both matrices are dim × dim.
    pub fn apply(&self, rho: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        let s = &self.sqrt_n;
        let w = &self.raise_weight;
        // Column-major: entry (m, n) lives at m + n·d.
        for n in 0..d {
            for m in 0..d {
                let idx = m + n * d;
                let decay = Complex64::new(
                    -0.5 * (self.down * (m + n) as f64 + self.up * (w[m] + w[n])),
                    -self.omega * (m as f64 - n as f64),
                );
                let mut acc = decay * r[idx];
                if m + 1 < d && n + 1 < d {
                    acc += r[idx + 1 + d] * (self.down * s[m + 1] * s[n + 1]);
                }
                if m > 0 && n > 0 {
                    acc += r[idx - 1 - d] * (self.up * s[m] * s[n]);
                }
                o[idx] = acc;
            }
        }
    }

    pub fn eval(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.apply(rho, &mut out);
        out
    }

    /// Row-sum (Gershgorin) bound on the spectral radius of the generator.
    pub fn spectral_bound(&self) -> f64 {
        let d = self.dim;
        let s = &self.sqrt_n;
        let w = &self.raise_weight;
        let mut bound = 0.0f64;
        for n in 0..d {
            for m in 0..d {
                let decay = Complex64::new(
                    0.5 * (self.down * (m + n) as f64 + self.up * (w[m] + w[n])),
                    self.omega * (m as f64 - n as f64),
                )
                .norm();
                let lower = if m + 1 < d && n + 1 < d {
                    self.down * s[m + 1] * s[n + 1]
                } else {
                    0.0
                };
                let upper = if m > 0 && n > 0 { self.up * s[m] * s[n] } else { 0.0 };
                bound = bound.max(decay + lower + upper);
            }
        }
        bound
    }

    /// Largest dt passing [`Generator::check_dt`].
    pub fn max_dt(&self) -> f64 {
        let accuracy = ACCURACY_GUARD / self.gamma.max(self.omega.abs());
        let stability = RK4_HALF_DISK / self.spectral_bound();
        accuracy.min(stability)
    }

    /// 0.01/max(γ, |ω|), shortened when the truncated generator is too stiff
    /// for RK4 at that step.
    pub fn default_dt(&self) -> f64 {
        let nominal = 1.0 / (DEFAULT_STEPS_PER_TIME * self.gamma.max(self.omega.abs()));
        nominal.min(0.8 * RK4_HALF_DISK / self.spectral_bound())
    }

    /// Stability and accuracy guard for a requested step.
    pub fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("dt must be finite and > 0, got {dt}"));
        }
        let ok = dt * self.gamma < ACCURACY_GUARD
            && dt * self.omega.abs() < ACCURACY_GUARD
            && dt * self.spectral_bound() <= RK4_HALF_DISK;
        if ok {
            Ok(())
        } else {
            Err(Error::Stability {
                dt,
                suggested_dt: self.default_dt(),
            })
        }
    }
}

/// Classical RK4 stepper with preallocated stage buffers.
struct Rk4 {
    k1: CMatrix,
    k2: CMatrix,
    k3: CMatrix,
    k4: CMatrix,
    tmp: CMatrix,
}

fn axpy_into(out: &mut CMatrix, x: &CMatrix, a: f64, y: &CMatrix) {
    for ((o, xv), yv) in out.as_mut_slice().iter_mut().zip(x.as_slice()).zip(y.as_slice()) {
        *o = xv + yv * a;
    }
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        let z = CMatrix::zeros(dim, dim);
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step(&mut self, gen: &Generator, rho: &mut CMatrix, h: f64) {
        gen.apply(rho, &mut self.k1);
        axpy_into(&mut self.tmp, rho, 0.5 * h, &self.k1);
        gen.apply(&self.tmp, &mut self.k2);
        axpy_into(&mut self.tmp, rho, 0.5 * h, &self.k2);
        gen.apply(&self.tmp, &mut self.k3);
        axpy_into(&mut self.tmp, rho, h, &self.k3);
        gen.apply(&self.tmp, &mut self.k4);
        let c = h / 6.0;
        for ((((r, a), b), cc), dd) in rho
            .as_mut_slice()
            .iter_mut()
            .zip(self.k1.as_slice())
            .zip(self.k2.as_slice())
            .zip(self.k3.as_slice())
            .zip(self.k4.as_slice())
        {
            *r += (a + (b + cc) * 2.0 + dd) * c;
        }
    }
}

/// Sampled observables along one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub mean_n: Vec<f64>,
    /// I(t) evaluated from the sampled ⟨n⟩.
    pub current: Vec<f64>,
    pub trace_defect: Vec<f64>,
    pub hermiticity_defect: Vec<f64>,
    pub min_eig: Vec<f64>,
    /// Step actually used (t_end divided into whole steps).
    pub dt: f64,
    pub dim: usize,
    pub final_state: DensityMatrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_defect(&self) -> f64 {
        self.trace_defect.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Header `t,mean_n,current,trace_defect,min_eig`.
    pub fn to_table(&self) -> CsvTable {
        let mut table = CsvTable::new(&["t", "mean_n", "current", "trace_defect", "min_eig"]);
        for k in 0..self.len() {
            table.push(vec![
                fmt_f64(self.times[k]),
                fmt_f64(self.mean_n[k]),
                fmt_f64(self.current[k]),
                fmt_f64(self.trace_defect[k]),
                fmt_f64(self.min_eig[k]),
            ]);
        }
        table
    }
}

/// Integrate from `rho0` to `t_end`, sampling every `sample_every` steps and
/// at the final step. The step is `t_end / ceil(t_end/dt)`, never above `dt`.
pub fn evolve(
    params: &SystemParams,
    rho0: &DensityMatrix,
    t_end: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return domain(format!("t_end must be finite and >= 0, got {t_end}"));
    }
    if sample_every == 0 {
        return domain("sample_every must be >= 1");
    }
    let gen = Generator::new(params, rho0.dim())?;
    gen.check_dt(dt)?;
    let steps = (t_end / dt * (1.0 - 1e-12)).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };

    let mut traj = Trajectory {
        times: Vec::new(),
        mean_n: Vec::new(),
        current: Vec::new(),
        trace_defect: Vec::new(),
        hermiticity_defect: Vec::new(),
        min_eig: Vec::new(),
        dt: h,
        dim: rho0.dim(),
        final_state: rho0.clone(),
    };
    let mut record = |t: f64, rho: &CMatrix| -> Result<()> {
        let state = DensityMatrix::from_raw(rho.clone());
        let n = state.mean_number();
        traj.times.push(t);
        traj.mean_n.push(n);
        traj.current.push(current_at_occupation(params, n)?);
        traj.trace_defect.push(state.trace_defect());
        traj.hermiticity_defect.push(state.hermiticity_defect());
        traj.min_eig.push(state.min_eigenvalue());
        Ok(())
    };

    let mut rho = rho0.matrix().clone();
    let mut rk = Rk4::new(rho0.dim());
    record(0.0, &rho)?;
    for k in 1..=steps {
        rk.step(&gen, &mut rho, h);
        if k % sample_every == 0 || k == steps {
            record(k as f64 * h, &rho)?;
        }
    }
    traj.final_state = DensityMatrix::from_raw(rho);
    Ok(traj)
}

/// One independent integration request.
#[derive(Debug, Clone)]
pub struct EvolveJob {
    pub params: SystemParams,
    pub rho0: DensityMatrix,
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
}

/// Run independent trajectories, one per worker; results keep job order.
pub fn evolve_many(exec: Execution, jobs: &[EvolveJob]) -> Vec<Result<Trajectory>> {
    exec.map(jobs, |j| evolve(&j.params, &j.rho0, j.t_end, j.dt, j.sample_every))
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Relax the vacuum until max|dρ/dt| < 1e−10.
pub fn steady_state(params: &SystemParams, ops: &LadderOps) -> Result<DensityMatrix> {
    let gen = Generator::new(params, ops.dim())?;
    let h = gen.default_dt();
    let max_steps = (STEADY_MAX_TIME_IN_RELAXATIONS / (params.gamma_total() * h)).ceil() as usize;
    let space = FockSpace::new(ops.dim())?;
    let mut rho = DensityMatrix::vacuum(space).into_matrix();
    let mut rk = Rk4::new(ops.dim());
    let mut residual = f64::INFINITY;
    let mut scratch = CMatrix::zeros(ops.dim(), ops.dim());
    for k in 0..max_steps {
        if k % STEADY_CHECK_EVERY == 0 {
            gen.apply(&rho, &mut scratch);
            residual = max_abs(&scratch);
            if residual < STEADY_RESIDUAL {
                return Ok(DensityMatrix::from_raw(rho));
            }
        }
        rk.step(&gen, &mut rho, h);
    }
    gen.apply(&rho, &mut scratch);
    let last = max_abs(&scratch);
    if last < STEADY_RESIDUAL {
        return Ok(DensityMatrix::from_raw(rho));
    }
    Err(Error::NonConvergence {
        steps: max_steps,
        residual: residual.min(last),
    })
}

/// Monte-Carlo estimate of ⟨|α|²⟩ under the steady P-distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleMean {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Estimate tr(a†aρ_s) by drawing α from the complex Gaussian
/// P(α) = exp(−|α|²/n̄_s)/(πn̄_s) and averaging |α|².
pub fn p_sampling_mean(params: &SystemParams, n_samples: usize, seed: u64) -> Result<SampleMean> {
    p_sampling_mean_with(Execution::default(), params, n_samples, seed)
}

/// As [`p_sampling_mean`]. Samples are split into a fixed number of shards,
/// each with its own ChaCha stream, so the estimate does not depend on `exec`.
pub fn p_sampling_mean_with(exec: Execution, params: &SystemParams, n_samples: usize, seed: u64) -> Result<SampleMean> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: n_samples,
        });
    }
    let n_s = summarize(params)?.n_s;
    // Re α and Im α each carry variance n̄_s/2.
    let sigma = (0.5 * n_s).sqrt();
    let base = n_samples / SAMPLE_SHARDS;
    let extra = n_samples % SAMPLE_SHARDS;
    let partials = exec.map_range(SAMPLE_SHARDS, |shard| {
        let count = base + usize::from(shard < extra);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard as u64);
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for _ in 0..count {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            let r2 = sigma * sigma * (x * x + y * y);
            sum += r2;
            sum_sq += r2 * r2;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = partials.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(SampleMean {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}
