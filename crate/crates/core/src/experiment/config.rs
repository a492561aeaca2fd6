//! Experiment configuration in a flat `key = value` text format.
//!
//! Lines starting with `#` and blank lines are ignored. Lists are
//! comma-separated. Recognized keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `preset` | `paper-fig1` fixes rank 3, 100 trials, threshold 1e-10, gaussian, alpha 1 | none |
//! | `dims` | mode sizes, e.g. `8,8,8` | required |
//! | `rank` | CP rank F | required unless preset |
//! | `kappa_grid` | factor condition numbers | `1,10,100,1000` |
//! | `trials` | trials per grid point | 100 |
//! | `m` | explicit measurement counts | |
//! | `m_factor` | M = ceil(m_factor · Σ Iₙ F) when `m` is absent | 1.5 |
//! | `alpha` | variance scale | 1 |
//! | `distribution` | `gaussian` or `rademacher` | gaussian |
//! | `success_mse_threshold` | success iff MSE below this | 1e-10 |
//! | `base_seed` | root seed | 0 |
//! | `restarts` | solver restarts | 5 |
//! | `max_iters` | solver iteration cap | 500 |
//! | `spacing` | `linear` or `log` singular values | linear |
//! | `init` | solver initialization, `spectral` or `random` | spectral |
//! | `record_wall_time` | write per-trial wall time instead of 0 | false |

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::conditioning::Spacing;
use crate::error::{Error, Result};
use crate::recovery::Initialization;
use crate::sensing::Distribution;

pub const PAPER_FIG1: &str = "paper-fig1";

#[derive(Debug, Clone, PartialEq)]
pub enum MRule {
    Explicit(Vec<usize>),
    /// `M = ceil(factor · Σ Iₙ F)`.
    ParamFactor(f64),
}

impl MRule {
    pub fn resolve(&self, dims: &[usize], rank: usize) -> Vec<usize> {
        match self {
            MRule::Explicit(ms) => ms.clone(),
            MRule::ParamFactor(c) => {
                let params = (dims.iter().sum::<usize>() * rank) as f64;
                vec![(c * params).ceil() as usize]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub kappa_grid: Vec<f64>,
    pub trials: usize,
    pub m_rule: MRule,
    pub alpha: f64,
    pub distribution: Distribution,
    pub success_mse_threshold: f64,
    pub base_seed: u64,
    pub restarts: usize,
    pub max_iters: usize,
    pub spacing: Spacing,
    pub init: Initialization,
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(dims: Vec<usize>, rank: usize) -> Self {
        Self {
            dims,
            rank,
            kappa_grid: vec![1.0, 10.0, 100.0, 1000.0],
            trials: 100,
            m_rule: MRule::ParamFactor(1.5),
            alpha: 1.0,
            distribution: Distribution::Gaussian,
            success_mse_threshold: 1e-10,
            base_seed: 0,
            restarts: 5,
            max_iters: 500,
            spacing: Spacing::Linear,
            init: Initialization::default(),
            record_wall_time: false,
        }
    }

    /// Recovery-vs-conditioning protocol: rank 3, 100 trials per condition
    /// number, success iff MSE < 1e-10, gaussian entries of variance 1/M.
    /// Mode sizes and the measurement rule are left to the caller.
    pub fn paper_fig1(dims: Vec<usize>, m_rule: MRule) -> Self {
        Self {
            m_rule,
            ..Self::new(dims, 3)
        }
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.m_rule.resolve(&self.dims, self.rank)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return bad(format!("dims must have at least 2 positive entries, got {:?}", self.dims));
        }
        if self.rank == 0 {
            return bad("rank must be >= 1".into());
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < self.rank) {
            return bad(format!("every mode size must be >= rank {}, found {d}", self.rank));
        }
        if self.kappa_grid.is_empty() {
            return bad("kappa_grid must be nonempty".into());
        }
        if let Some(k) = self.kappa_grid.iter().find(|&&k| !(k >= 1.0) || !k.is_finite()) {
            return bad(format!("kappa values must be finite and >= 1, got {k}"));
        }
        if self.rank == 1 && self.kappa_grid.iter().any(|&k| k != 1.0) {
            return bad("rank-1 factors cannot have a condition number other than 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        match &self.m_rule {
            MRule::Explicit(ms) if ms.is_empty() || ms.contains(&0) => {
                return bad("explicit m list must be nonempty and positive".into())
            }
            MRule::ParamFactor(c) if !(*c > 0.0) || !c.is_finite() => {
                return bad(format!("m_factor must be positive, got {c}"))
            }
            _ => {}
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.success_mse_threshold > 0.0) {
            return bad("success_mse_threshold must be > 0".into());
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return bad("restarts and max_iters must be >= 1".into());
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }

    /// Serialize back to the `key = value` format.
    pub fn to_text(&self) -> String {
        let list = |v: &[String]| v.join(",");
        let dims: Vec<String> = self.dims.iter().map(ToString::to_string).collect();
        let kappas: Vec<String> = self.kappa_grid.iter().map(|k| format!("{k:?}")).collect();
        let m_line = match &self.m_rule {
            MRule::Explicit(ms) => {
                let ms: Vec<String> = ms.iter().map(ToString::to_string).collect();
                format!("m = {}", list(&ms))
            }
            MRule::ParamFactor(c) => format!("m_factor = {c:?}"),
        };
        format!(
            "dims = {}\nrank = {}\nkappa_grid = {}\ntrials = {}\n{}\nalpha = {:?}\ndistribution = {}\nsuccess_mse_threshold = {:?}\nbase_seed = {}\nrestarts = {}\nmax_iters = {}\nspacing = {}\ninit = {}\nrecord_wall_time = {}\n",
            list(&dims),
            self.rank,
            list(&kappas),
            self.trials,
            m_line,
            self.alpha,
            self.distribution,
            self.success_mse_threshold,
            self.base_seed,
            self.restarts,
            self.max_iters,
            self.spacing,
            self.init,
            self.record_wall_time
        )
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = k.trim().to_string();
            if pairs.iter().any(|(seen, _): &(String, String)| *seen == key) {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            pairs.push((key, v.trim().to_string()));
        }
        let get = |key: &str| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());

        let dims: Vec<usize> = parse_list(
            "dims",
            get("dims").ok_or_else(|| Error::Config("missing required key `dims`".into()))?,
        )?;
        let preset = get("preset");
        let mut cfg = match preset {
            Some(PAPER_FIG1) => {
                if get("m").is_none() && get("m_factor").is_none() {
                    return Err(Error::Config(
                        "preset paper-fig1 requires `m` or `m_factor`".into(),
                    ));
                }
                ExperimentConfig::paper_fig1(dims, MRule::ParamFactor(1.5))
            }
            Some(other) => return Err(Error::Config(format!("unknown preset `{other}`"))),
            None => {
                let rank = parse_value(
                    "rank",
                    get("rank").ok_or_else(|| Error::Config("missing required key `rank`".into()))?,
                )?;
                ExperimentConfig::new(dims, rank)
            }
        };

        for (key, value) in &pairs {
            let (key, value) = (key.as_str(), value.as_str());
            match key {
                "preset" | "dims" => {}
                "rank" => {
                    let rank: usize = parse_value(key, value)?;
                    if preset.is_some() && rank != cfg.rank {
                        return Err(Error::Config(format!(
                            "preset paper-fig1 fixes rank {}, config sets {rank}",
                            cfg.rank
                        )));
                    }
                    cfg.rank = rank;
                }
                "kappa_grid" => cfg.kappa_grid = parse_list(key, value)?,
                "trials" => cfg.trials = parse_value(key, value)?,
                "m" => cfg.m_rule = MRule::Explicit(parse_list(key, value)?),
                "m_factor" => {
                    if get("m").is_some() {
                        return Err(Error::Config("set either `m` or `m_factor`, not both".into()));
                    }
                    cfg.m_rule = MRule::ParamFactor(parse_value(key, value)?);
                }
                "alpha" => cfg.alpha = parse_value(key, value)?,
                "distribution" => cfg.distribution = value.parse()?,
                "success_mse_threshold" => cfg.success_mse_threshold = parse_value(key, value)?,
                "base_seed" => cfg.base_seed = parse_value(key, value)?,
                "restarts" => cfg.restarts = parse_value(key, value)?,
                "max_iters" => cfg.max_iters = parse_value(key, value)?,
                "spacing" => cfg.spacing = value.parse()?,
                "init" => cfg.init = value.parse()?,
                "record_wall_time" => cfg.record_wall_time = parse_value(key, value)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "# sweep\ndims = 8,8,8\nrank = 3\nkappa_grid = 1, 10\ntrials = 4\nm = 90,108\n\
                    alpha = 1\ndistribution = rademacher\nbase_seed = 9\nrestarts = 2\nspacing = log\n";
        let cfg: ExperimentConfig = text.parse().unwrap();
        assert_eq!(cfg.dims, vec![8, 8, 8]);
        assert_eq!(cfg.kappa_grid, vec![1.0, 10.0]);
        assert_eq!(cfg.m_rule, MRule::Explicit(vec![90, 108]));
        assert_eq!(cfg.distribution, Distribution::Rademacher);
        assert_eq!(cfg.spacing, Spacing::Log);
        assert_eq!(cfg.restarts, 2);
        assert!(!cfg.record_wall_time);
    }

    #[test]
    fn m_factor_rule() {
        let cfg: ExperimentConfig = "dims = 8,8,8\nrank = 3\nm_factor = 1.5\n".parse().unwrap();
        assert_eq!(cfg.m_values(), vec![108]);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::new(vec![5, 6, 7], 2);
        cfg.kappa_grid = vec![1.0, 2.5];
        cfg.m_rule = MRule::Explicit(vec![40, 50]);
        let back: ExperimentConfig = cfg.to_text().parse().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!("rank = 3\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\nrank = 2\nbogus = 1\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\nrank = 2\ntrials = 0\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\nrank = 2\nkappa_grid = 0.5\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\nrank = 2\nkappa_grid =\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,2\nrank = 3\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\nrank = 2\nrank = 3\n".parse::<ExperimentConfig>().is_err());
        assert!("dims = 8,8\nrank = 2\nm = 5\nm_factor = 2\n".parse::<ExperimentConfig>().is_err());
        assert!("dims 8,8\n".parse::<ExperimentConfig>().is_err());
        assert!("preset = paper-fig1\ndims = 8,8,8\n".parse::<ExperimentConfig>().is_err());
        assert!("preset = other\ndims = 8,8,8\nm = 9\n".parse::<ExperimentConfig>().is_err());
        assert!("preset = paper-fig1\ndims = 8,8,8\nm = 9\nrank = 2\n"
            .parse::<ExperimentConfig>()
            .is_err());
    }
}
