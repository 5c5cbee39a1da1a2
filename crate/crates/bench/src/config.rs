//! Experiment descriptions, read from TOML. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use riscf::geometry::SystemConfig;
use riscf::measurement::EntryModel;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OracleLs,
    Ls,
    Omp,
    Laomp,
    Somp,
    #[serde(rename = "mlaomp3d")]
    Mlaomp3d,
    TtIndividual,
    TtCooperative,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::OracleLs,
        Method::Ls,
        Method::Omp,
        Method::Laomp,
        Method::Somp,
        Method::Mlaomp3d,
        Method::TtIndividual,
        Method::TtCooperative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::OracleLs => "oracle-ls",
            Method::Ls => "ls",
            Method::Omp => "omp",
            Method::Laomp => "laomp",
            Method::Somp => "somp",
            Method::Mlaomp3d => "mlaomp3d",
            Method::TtIndividual => "tt-individual",
            Method::TtCooperative => "tt-cooperative",
        }
    }

    /// Whether the method estimates RIS–user channels (NMSE_h) rather
    /// than cascaded channels (NMSE_G).
    pub fn is_two_timescale(self) -> bool {
        matches!(self, Method::TtIndividual | Method::TtCooperative)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVariable {
    SnrDb,
    /// Sub-frames per RIS (Q̄ for cascaded methods, Q̄' for two-timescale).
    Measurements,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr-db",
            SweepVariable::Measurements => "measurements",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Training {
    /// Sub-frames each RIS is active for, unless swept.
    #[serde(default = "default_subframes")]
    pub subframes_per_ris: usize,
    /// Pilot length T; defaults to the number of users.
    #[serde(default)]
    pub pilot_symbols: Option<usize>,
    /// SNR used when sweeping measurements; otherwise the scenario's noise
    /// power applies.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub reflections: EntryModel,
}

fn default_subframes() -> usize {
    32
}

impl Default for Training {
    fn default() -> Self {
        Self {
            subframes_per_ris: default_subframes(),
            pilot_symbols: None,
            snr_db: None,
            reflections: EntryModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSettings {
    pub grid_bs: usize,
    pub grid_ris: usize,
    #[serde(default = "three")]
    pub look_ahead_aod: usize,
    #[serde(default = "nine")]
    pub look_ahead_aoa: usize,
    #[serde(default = "nine")]
    pub look_ahead_1d: usize,
    #[serde(default = "nine")]
    pub look_ahead_tt: usize,
    /// Residual tolerances are this multiple of the expected noise energy.
    #[serde(default = "default_tolerance_factor")]
    pub tolerance_factor: f64,
}

fn three() -> usize {
    3
}

fn nine() -> usize {
    9
}

fn default_tolerance_factor() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub scenario: SystemConfig,
    #[serde(default)]
    pub training: Training,
    pub estimator: EstimatorSettings,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub methods: Vec<Method>,
    pub trials: usize,
    #[serde(default)]
    pub on_grid: bool,
    #[serde(default)]
    pub seed: u64,
    pub output_path: PathBuf,
    #[serde(default)]
    pub plot: bool,
    /// Record wall time per method. Off by default so that outputs are
    /// byte-identical across runs.
    #[serde(default)]
    pub timing: bool,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig4,
    Fig5,
    Ci,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            "ci" => Ok(Preset::Ci),
            other => Err(BenchError::Config(format!(
                "unknown preset '{other}' (expected fig4, fig5 or ci)"
            ))),
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Preset::Fig4 => include_str!("../presets/fig4.toml"),
            Preset::Fig5 => include_str!("../presets/fig5.toml"),
            Preset::Ci => include_str!("../presets/ci.toml"),
        }
    }

    pub fn spec(self) -> ExperimentSpec {
        ExperimentSpec::from_toml(self.source()).expect("shipped presets are valid")
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(BenchError::Config(m));
        self.scenario
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        if self.trials == 0 {
            return cfg("trials must be at least 1".into());
        }
        if self.sweep_values.is_empty() {
            return cfg("sweep_values must not be empty".into());
        }
        if self.methods.is_empty() {
            return cfg("methods must not be empty".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return cfg(format!("method '{m}' listed twice"));
            }
        }
        match self.sweep_variable {
            SweepVariable::SnrDb => {
                if self.sweep_values.iter().any(|v| !v.is_finite()) {
                    return cfg("SNR sweep values must be finite".into());
                }
            }
            SweepVariable::Measurements => {
                if self.sweep_values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
                    return cfg("measurement sweep values must be positive integers".into());
                }
            }
        }
        if self.training.subframes_per_ris == 0 {
            return cfg("subframes_per_ris must be at least 1".into());
        }
        if let Some(t) = self.training.pilot_symbols {
            if t < self.scenario.num_users {
                return cfg(format!(
                    "pilot_symbols = {t} cannot separate {} users",
                    self.scenario.num_users
                ));
            }
        }
        let e = &self.estimator;
        if e.grid_bs == 0 || e.grid_ris == 0 {
            return cfg("grid sizes must be positive".into());
        }
        if [e.look_ahead_aod, e.look_ahead_aoa, e.look_ahead_1d, e.look_ahead_tt].contains(&0) {
            return cfg("look-ahead parameters must be at least 1".into());
        }
        if !(e.tolerance_factor >= 0.0 && e.tolerance_factor.is_finite()) {
            return cfg("tolerance_factor must be non-negative".into());
        }
        Ok(())
    }

    pub fn pilot_symbols(&self) -> usize {
        self.training.pilot_symbols.unwrap_or(self.scenario.num_users)
    }

    /// Scenario, sub-frames per RIS at one sweep point.
    pub fn point(&self, value: f64) -> (SystemConfig, usize) {
        let mut scenario = self.scenario.clone();
        let mut subframes = self.training.subframes_per_ris;
        match self.sweep_variable {
            SweepVariable::SnrDb => scenario.set_snr_db(value),
            SweepVariable::Measurements => {
                subframes = value as usize;
                if let Some(snr) = self.training.snr_db {
                    scenario.set_snr_db(snr);
                }
            }
        }
        (scenario, subframes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for p in [Preset::Fig4, Preset::Fig5, Preset::Ci] {
            let s = p.spec();
            assert!(s.trials >= 1);
        }
        let ci = Preset::Ci.spec();
        assert_eq!(ci.scenario.ris_elements, 32);
        assert_eq!(ci.estimator.grid_ris, 128);
        assert_eq!(ci.pilot_symbols(), 4);
        let fig5 = Preset::Fig5.spec();
        let (sc, q) = fig5.point(4.0);
        assert_eq!(q, 4);
        assert!((sc.snr_db() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = Preset::Ci.source().replace("trials = 50", "trials = 50\nbogus = 1");
        assert!(matches!(ExperimentSpec::from_toml(&bad), Err(BenchError::Config(_))));
        let bad = Preset::Ci.source().replace("num_bs = 3", "num_bs = 3\nextra = 2");
        assert!(ExperimentSpec::from_toml(&bad).is_err());
    }

    #[test]
    fn unknown_method_is_rejected() {
        let bad = Preset::Ci.source().replace("\"omp\"", "\"omp2\"");
        assert!(matches!(ExperimentSpec::from_toml(&bad), Err(BenchError::Config(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("trials = 50", "trials = 0"),
            ("sweep_values = [-5, 0, 5, 10, 15, 20]", "sweep_values = []"),
            ("bs_antennas = [16, 16, 16]", "bs_antennas = [16, 16]"),
        ] {
            let bad = Preset::Ci.source().replace(from, to);
            assert!(ExperimentSpec::from_toml(&bad).is_err(), "{to}");
        }
        assert!(Preset::parse("fig6").is_err());
    }
}
