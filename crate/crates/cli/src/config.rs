use std::path::Path;

use msdelay::channel::ChannelSpec;
use msdelay::mcsim::SimConfig;
use msdelay::RatFn;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Transfer function with coefficients in descending powers of `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfConfig {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl TfConfig {
    pub fn to_ratfn(&self, field: &str) -> Result<RatFn, CliError> {
        for (name, list) in [
            ("numerator", &self.numerator),
            ("denominator", &self.denominator),
        ] {
            if list.is_empty() {
                return Err(CliError::Validation(format!(
                    "{field}.{name} must not be empty"
                )));
            }
            if let Some((i, v)) = list.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(CliError::Validation(format!(
                    "{field}.{name}[{i}] = {v} is not finite"
                )));
            }
        }
        if self.denominator.iter().all(|&c| c == 0.0) {
            return Err(CliError::Validation(format!(
                "{field}.denominator = {:?} is identically zero",
                self.denominator
            )));
        }
        RatFn::from_z_coeffs(&self.numerator, &self.denominator)
            .map_err(|e| CliError::Validation(format!("{field}: {e}")))
    }

    pub fn from_ratfn(f: &RatFn) -> Self {
        let (numerator, denominator) = f.z_coeffs();
        Self {
            numerator,
            denominator,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub pmf: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Inclusive relative-degree range for `sweep-tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_range: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappas: Option<Vec<f64>>,
    /// Target margins, converted to kappas; alternative to `kappas`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margins: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qtilde: Option<TfConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub plant: TfConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<TfConfig>,
    pub channel: ChannelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

pub const DEFAULT_HORIZON: usize = 20_000;
pub const DEFAULT_RUNS: usize = 200;
pub const DEFAULT_TAU_RANGE: [usize; 2] = [1, 6];

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn plant(&self) -> Result<RatFn, CliError> {
        self.plant.to_ratfn("plant")
    }

    pub fn controller(&self) -> Result<Option<RatFn>, CliError> {
        self.controller
            .as_ref()
            .map(|c| c.to_ratfn("controller"))
            .transpose()
    }

    pub fn channel(&self) -> Result<ChannelSpec<f64>, CliError> {
        ChannelSpec::new(self.channel.pmf.clone(), self.channel.weights.clone())
            .map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn sweep(&self) -> SweepSection {
        self.sweep.clone().unwrap_or_default()
    }

    /// Simulation settings with defaults filled in; the filled-in values are
    /// written back so the echoed config reproduces the run.
    pub fn resolve_sim(&mut self, seed: u64) -> Result<SimConfig, CliError> {
        let s = self.sim.get_or_insert_with(SimSection::default);
        let horizon = *s.horizon.get_or_insert(DEFAULT_HORIZON);
        let runs = *s.runs.get_or_insert(DEFAULT_RUNS);
        let burn_in = *s.burn_in.get_or_insert(horizon / 10);
        let noise_std = *s.noise_std.get_or_insert(1.0);
        s.seed = Some(seed);
        let cfg = SimConfig {
            horizon,
            runs,
            burn_in,
            noise_std,
            seed,
        };
        cfg.validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_convert() {
        let cfg: JobConfig = serde_json::from_str(
            r#"{"plant": {"numerator": [1, -0.2], "denominator": [1, -2.3, 1.32]},
                "channel": {"pmf": [0.6, 0.3, 0.1], "weights": [0.6, 0.4, 0]}}"#,
        )
        .unwrap();
        let p = cfg.plant().unwrap();
        assert_eq!(p.relative_degree(), 1);
        assert_eq!(TfConfig::from_ratfn(&p).denominator, vec![1.0, -2.3, 1.32]);
        assert!(cfg.controller().unwrap().is_none());
    }

    #[test]
    fn validation_names_field() {
        let cfg: JobConfig = serde_json::from_str(
            r#"{"plant": {"numerator": [], "denominator": [1, 2]}, "channel": {"pmf": [1], "weights": [1]}}"#,
        )
        .unwrap();
        let e = cfg.plant().unwrap_err().to_string();
        assert!(e.contains("plant.numerator"), "{e}");
        assert!(serde_json::from_str::<JobConfig>(r#"{"plant": {}, "channel": {}}"#).is_err());
        let bad = JobConfig {
            channel: ChannelConfig {
                pmf: vec![0.5, 0.6],
                weights: vec![1.0, 1.0],
            },
            ..cfg
        };
        assert!(bad.channel().unwrap_err().to_string().contains("sums to"));
    }

    #[test]
    fn sim_defaults_written_back() {
        let mut cfg: JobConfig = serde_json::from_str(
            r#"{"plant": {"numerator": [1], "denominator": [1, 0.5]}, "channel": {"pmf": [1], "weights": [1]},
                "sim": {"runs": 3}}"#,
        )
        .unwrap();
        let s = cfg.resolve_sim(9).unwrap();
        assert_eq!(
            (s.runs, s.horizon, s.burn_in, s.seed),
            (3, DEFAULT_HORIZON, DEFAULT_HORIZON / 10, 9)
        );
        assert_eq!(cfg.sim.as_ref().unwrap().seed, Some(9));
    }
}
