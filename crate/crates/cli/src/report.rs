//! Serializable report sections. Transfer functions are written as
//! descending-power coefficient lists in `z`, like the config.

use msdelay::analysis::StabilityReport;
use msdelay::channel::{snr_profile, ChannelStats};
use msdelay::mcsim::{Estimate, KappaRow, SimResult};
use msdelay::synth::{StabilizabilityReport, SynthesisResult};
use msdelay::RatFn;
use serde::{Serialize, Serializer};

use crate::config::{JobConfig, TfConfig};

pub const SNR_ANGLES: usize = 33;

#[derive(Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: JobConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilityReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stabilizability: Option<StabilizabilityReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_sweep: Option<Vec<TauRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_sweep: Option<Vec<KappaRow>>,
}

impl Report {
    pub fn new(command: &str, config: JobConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: None,
            config,
            channel: None,
            stability: None,
            stabilizability: None,
            synthesis: None,
            simulation: None,
            tau_sweep: None,
            kappa_sweep: None,
        }
    }
}

#[derive(Serialize)]
pub struct SnrPoint {
    pub theta: f64,
    /// `1/|W|^2`, or "unbounded" where `W` vanishes.
    #[serde(serialize_with = "unbounded_if_none")]
    pub snr: Option<f64>,
}

fn unbounded_if_none<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("unbounded"),
    }
}

#[derive(Serialize)]
pub struct ChannelSummary {
    pub mean_channel: TfConfig,
    pub autocorrelation: Vec<f64>,
    /// Coefficients of `z^m, ..., z^{-m}`.
    pub spectral_density: Vec<f64>,
    pub spectral_factor: TfConfig,
    pub frv: TfConfig,
    pub snr_profile: Vec<SnrPoint>,
    pub warnings: Vec<String>,
}

impl ChannelSummary {
    pub fn new(stats: &ChannelStats<f64>) -> Self {
        Self {
            mean_channel: TfConfig::from_ratfn(&stats.h),
            autocorrelation: stats.r.clone(),
            spectral_density: stats.spectral_density.laurent(),
            spectral_factor: TfConfig::from_ratfn(&RatFn::from_poly(stats.phi.clone())),
            frv: TfConfig::from_ratfn(&stats.w),
            snr_profile: snr_profile(&stats.w, SNR_ANGLES)
                .into_iter()
                .map(|(theta, snr)| SnrPoint { theta, snr })
                .collect(),
            warnings: stats.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct CoprimeSummary {
    pub n: TfConfig,
    pub m: TfConfig,
    pub x: TfConfig,
    pub y: TfConfig,
}

#[derive(Serialize)]
pub struct SynthesisSummary {
    pub q_opt: TfConfig,
    pub k_opt: TfConfig,
    pub achieved_margin: f64,
    pub z2_norm_sq: f64,
    pub index: f64,
    pub relative_degree_tau: usize,
    pub coprime: CoprimeSummary,
    pub warnings: Vec<String>,
}

impl SynthesisSummary {
    pub fn new(s: &SynthesisResult<f64>) -> Self {
        let tf = TfConfig::from_ratfn;
        Self {
            q_opt: tf(&s.q_opt),
            k_opt: tf(&s.k_opt),
            achieved_margin: s.achieved_margin,
            z2_norm_sq: s.z2_norm_sq,
            index: s.index,
            relative_degree_tau: s.relative_degree_tau,
            coprime: CoprimeSummary {
                n: tf(&s.pair.n),
                m: tf(&s.pair.m),
                x: tf(&s.pair.x),
                y: tf(&s.pair.y),
            },
            warnings: s.warnings.clone(),
        }
    }
}

#[derive(Clone, Copy, Serialize)]
pub struct TauRow {
    pub tau: usize,
    pub index: f64,
    pub stabilizable: bool,
}

pub const TAU_HEADER: [&str; 3] = ["tau", "index", "stabilizable"];
pub const KAPPA_HEADER: [&str; 6] = [
    "kappa",
    "margin",
    "power_theory",
    "power_sim",
    "power_sim_stderr",
    "diverged",
];

pub fn tau_csv(rows: &[TauRow]) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TAU_HEADER)?;
    for r in rows {
        w.write_record([
            r.tau.to_string(),
            r.index.to_string(),
            r.stabilizable.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn estimate_fields(e: &Estimate) -> [String; 2] {
    [e.mean.to_string(), e.stderr.to_string()]
}

/// Nominally unstable rows leave the margin empty; unbounded theoretical
/// powers are written as `inf`.
pub fn kappa_csv(rows: &[KappaRow]) -> csv::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(KAPPA_HEADER)?;
    for r in rows {
        let [sim, err] = estimate_fields(&r.power_sim);
        w.write_record([
            r.kappa.to_string(),
            r.margin.map_or_else(String::new, |m| m.to_string()),
            r.power_theory
                .finite()
                .map_or_else(|| "inf".to_string(), |p| p.to_string()),
            sim,
            err,
            r.diverged.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}
