use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use open_boson::SystemParams;
use serde::Deserialize;

/// Flags shared by every subcommand. Values resolve as built-in defaults,
/// then `--config`, then explicit flags.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON object with any of the flag names in snake_case
    /// (e.g. {"temp_e": 3.0, "gamma_c": 0.5, "seed": 11}).
    #[arg(long, value_name = "PATH", global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub omega_s: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_e: Option<f64>,
    #[arg(long, global = true)]
    pub gamma_c: Option<f64>,
    #[arg(long, global = true)]
    pub temp_e: Option<f64>,
    #[arg(long, global = true)]
    pub temp_c: Option<f64>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    /// Initial occupation (a number state for `evolve`; position x0 for `fp`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n0: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Fock-space dimension for `evolve`.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Grid over one parameter, NAME:MIN:MAX:COUNT with COUNT >= 2.
    #[arg(long, value_name = "NAME:MIN:MAX:COUNT", global = true, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH", global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    omega_s: Option<f64>,
    delta: Option<f64>,
    gamma_e: Option<f64>,
    gamma_c: Option<f64>,
    temp_e: Option<f64>,
    temp_c: Option<f64>,
    mass: Option<f64>,
    hbar: Option<f64>,
    k_b: Option<f64>,
    n0: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    dim: Option<usize>,
    seed: Option<u64>,
    sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    OmegaS,
    Delta,
    GammaE,
    GammaC,
    TempE,
    TempC,
    Mass,
}

impl SweepParam {
    fn parse(name: &str) -> anyhow::Result<Self> {
        Ok(match name.replace('-', "_").as_str() {
            "omega_s" => SweepParam::OmegaS,
            "delta" => SweepParam::Delta,
            "gamma_e" => SweepParam::GammaE,
            "gamma_c" => SweepParam::GammaC,
            "temp_e" => SweepParam::TempE,
            "temp_c" => SweepParam::TempC,
            "mass" => SweepParam::Mass,
            other => bail!("unknown sweep parameter '{other}'"),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::OmegaS => "omega_s",
            SweepParam::Delta => "delta",
            SweepParam::GammaE => "gamma_e",
            SweepParam::GammaC => "gamma_c",
            SweepParam::TempE => "temp_e",
            SweepParam::TempC => "temp_c",
            SweepParam::Mass => "mass",
        }
    }

    pub fn apply(self, p: &SystemParams, v: f64) -> SystemParams {
        let mut q = *p;
        match self {
            SweepParam::OmegaS => q.omega_s = v,
            SweepParam::Delta => q.delta = v,
            SweepParam::GammaE => q.gamma_e = v,
            SweepParam::GammaC => q.gamma_c = v,
            SweepParam::TempE => q.temp_e = v,
            SweepParam::TempC => q.temp_c = v,
            SweepParam::Mass => q.mass = v,
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Sweep {
    pub fn parse(spec: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 4 {
            bail!("sweep must look like NAME:MIN:MAX:COUNT, got '{spec}'");
        }
        let param = SweepParam::parse(parts[0])?;
        let min: f64 = parts[1]
            .parse()
            .with_context(|| format!("bad sweep min '{}'", parts[1]))?;
        let max: f64 = parts[2]
            .parse()
            .with_context(|| format!("bad sweep max '{}'", parts[2]))?;
        let count: usize = parts[3]
            .parse()
            .with_context(|| format!("bad sweep count '{}'", parts[3]))?;
        if count < 2 {
            bail!("sweep count must be >= 2, got {count}");
        }
        if !min.is_finite() || !max.is_finite() || max <= min {
            bail!("sweep needs finite MIN < MAX, got {min}..{max}");
        }
        Ok(Sweep { param, min, max, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + i as f64 * step
                }
            })
            .collect()
    }
}

/// Fully resolved inputs for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub n0: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub dim: Option<usize>,
    pub seed: u64,
    pub sweep: Option<Sweep>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 7;

fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let d = SystemParams::default();
        let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
        let params = SystemParams {
            omega_s: pick(args.omega_s, file.omega_s, d.omega_s),
            delta: pick(args.delta, file.delta, d.delta),
            gamma_e: pick(args.gamma_e, file.gamma_e, d.gamma_e),
            gamma_c: pick(args.gamma_c, file.gamma_c, d.gamma_c),
            temp_e: pick(args.temp_e, file.temp_e, d.temp_e),
            temp_c: pick(args.temp_c, file.temp_c, d.temp_c),
            mass: pick(args.mass, file.mass, d.mass),
            hbar: file.hbar.unwrap_or(d.hbar),
            k_b: file.k_b.unwrap_or(d.k_b),
        };
        let sweep = args
            .sweep
            .clone()
            .or(file.sweep)
            .map(|s| Sweep::parse(&s))
            .transpose()?;
        Ok(RunConfig {
            params,
            n0: args.n0.or(file.n0),
            t_end: args.t_end.or(file.t_end),
            dt: args.dt.or(file.dt),
            dim: args.dim.or(file.dim),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            sweep,
            out: args.out.clone(),
        })
    }

    /// One parameter set per sweep point, or just the base set.
    pub fn points(&self) -> Vec<(Option<f64>, SystemParams)> {
        match &self.sweep {
            Some(s) => s
                .values()
                .into_iter()
                .map(|v| (Some(v), s.param.apply(&self.params, v)))
                .collect(),
            None => vec![(None, self.params)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("temp_c:0.1:0.5:5").unwrap();
        assert_eq!(s.param, SweepParam::TempC);
        assert_eq!(s.values().len(), 5);
        assert_eq!(*s.values().last().unwrap(), 0.5);
        assert!(Sweep::parse("temp_c:0.1:0.5:1").is_err());
        assert!(Sweep::parse("temp_c:0.5:0.1:3").is_err());
        assert!(Sweep::parse("bogus:0:1:3").is_err());
        assert!(Sweep::parse("temp_c:0:1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("open-boson-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"temp_e": 5.0, "gamma_c": 0.25, "seed": 3}"#).unwrap();
        let args = CommonArgs {
            config: Some(path.clone()),
            temp_e: Some(4.0),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.params.temp_e, 4.0);
        assert_eq!(cfg.params.gamma_c, 0.25);
        assert_eq!(cfg.params.temp_c, 1.0);
        assert_eq!(cfg.seed, 3);
        std::fs::write(&path, r#"{"tmp_e": 5.0}"#).unwrap();
        assert!(RunConfig::resolve(&args).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
