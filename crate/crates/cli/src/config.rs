//! Experiment configuration files, presets and command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use softqec::decoding_graph::WeightPrecision;
use softqec::montecarlo::{DecoderKind, NoiseSpec, PointSpec, ReadoutSpec, SweepPlan};
use softqec::soft_measurement::{optimize_measurement, SoftModel};

use crate::CliError;

/// Named configurations shipped with the binary.
pub const PRESETS: [(&str, &str); 6] = [
    ("pheno-soft", include_str!("../presets/pheno-soft.toml")),
    ("pheno-hard", include_str!("../presets/pheno-hard.toml")),
    ("circuit-10x", include_str!("../presets/circuit-10x.toml")),
    ("circuit-1x", include_str!("../presets/circuit-1x.toml")),
    ("tradeoff", include_str!("../presets/tradeoff.toml")),
    ("convergence", include_str!("../presets/convergence.toml")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Config(format!("unknown preset {name:?}; available: {}", preset_names().join(", "))))?;
    ExperimentConfig::parse(text)
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub distances: Vec<usize>,
    pub rounds: Rounds,
    pub decoders: Vec<DecoderKind>,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Record decoder wall time (makes outputs run-dependent).
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub precision: WeightPrecision,
    /// Bootstrap resamples for threshold uncertainties.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub noise: NoiseConfig,
}

fn default_bootstrap() -> usize {
    200
}

/// Rounds per distance: a number, a list, or a rule `"d"` / `"<k>d"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rounds {
    Fixed(usize),
    List(Vec<usize>),
    Rule(String),
}

impl Rounds {
    pub fn resolve(&self, d: usize) -> Result<Vec<usize>, CliError> {
        let out = match self {
            Rounds::Fixed(t) => vec![*t],
            Rounds::List(ts) => ts.clone(),
            Rounds::Rule(r) => {
                let k = r.strip_suffix('d').ok_or_else(|| CliError::Config(format!("rounds rule {r:?} must end in 'd'")))?;
                let k: usize = if k.is_empty() { 1 } else { k.parse().map_err(|_| CliError::Config(format!("bad rounds rule {r:?}")))? };
                vec![k * d]
            }
        };
        if out.is_empty() || out.contains(&0) {
            return Err(CliError::Config("rounds must be positive".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseConfig {
    /// Data errors of probability `p` in every round, plus readout.
    Pheno {
        p: Vec<f64>,
        #[serde(default)]
        p_m: f64,
        #[serde(default)]
        readout: ReadoutConfig,
    },
    /// Circuit noise with every gate and idle location at probability `p`.
    Circuit {
        p: Vec<f64>,
        #[serde(default)]
        p_m: f64,
        #[serde(default)]
        readout: ReadoutConfig,
    },
    /// Circuit noise from durations (seconds), scanning the measurement time.
    ParametricCircuit {
        tau_g: f64,
        tau_d: f64,
        tau_a: f64,
        tau_f: f64,
        tau_m: Vec<f64>,
        /// Adds the measurement time that minimises the average soft-flip
        /// probability over the scanned range.
        #[serde(default)]
        include_flip_optimum: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReadoutConfig {
    /// Gaussian readout whose hardened flip probability is `ratio * p`.
    HardenedGaussian { ratio: f64 },
    Gaussian { sigma: f64 },
    AmplitudeDamping { tau_m: f64, tau_a: f64, tau_f: f64 },
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        ReadoutConfig::HardenedGaussian { ratio: 1.0 }
    }
}

impl ReadoutConfig {
    fn spec(&self, p: f64) -> ReadoutSpec {
        match *self {
            ReadoutConfig::HardenedGaussian { ratio } => ReadoutSpec::HardenedGaussian { p_hardened: ratio * p },
            ReadoutConfig::Gaussian { sigma } => ReadoutSpec::Gaussian { sigma },
            ReadoutConfig::AmplitudeDamping { tau_m, tau_a, tau_f } => ReadoutSpec::AmplitudeDamping { tau_m, tau_a, tau_f },
        }
    }

    fn validate(&self, ps: &[f64]) -> Result<(), CliError> {
        match *self {
            ReadoutConfig::HardenedGaussian { ratio } => {
                for &p in ps {
                    let q = ratio * p;
                    if !(q > 0.0 && q < 0.5) {
                        return Err(CliError::Config(format!("hardened readout flip probability {ratio} * {p} must be in (0, 0.5)")));
                    }
                }
                Ok(())
            }
            ReadoutConfig::Gaussian { sigma } => positive("sigma", sigma),
            ReadoutConfig::AmplitudeDamping { tau_m, tau_a, tau_f } => {
                positive("readout tau_m", tau_m)?;
                positive("readout tau_a", tau_a)?;
                positive("readout tau_f", tau_f)
            }
        }
    }
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub distances: Option<Vec<usize>>,
}

fn probability(name: &str, p: f64) -> Result<(), CliError> {
    if !(0.0..0.5).contains(&p) {
        return Err(CliError::Config(format!("{name} must be in [0, 0.5), got {p}")));
    }
    Ok(())
}

fn positive(name: &str, t: f64) -> Result<(), CliError> {
    if !(t > 0.0) {
        return Err(CliError::Config(format!("{name} must be positive, got {t}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses and validates a configuration file.
    pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if let Some(d) = &o.distances {
            self.distances = d.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.distances.is_empty() {
            return Err(CliError::Config("at least one distance is required".into()));
        }
        for &d in &self.distances {
            if d < 3 || d % 2 == 0 {
                return Err(CliError::Config(format!("distance {d} must be odd and at least 3")));
            }
            self.rounds.resolve(d)?;
        }
        if self.decoders.is_empty() {
            return Err(CliError::Config("at least one decoder is required".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be positive".into()));
        }
        match &self.noise {
            NoiseConfig::Pheno { p, p_m, readout } | NoiseConfig::Circuit { p, p_m, readout } => {
                if p.is_empty() {
                    return Err(CliError::Config("noise.p needs at least one value".into()));
                }
                for &x in p {
                    probability("p", x)?;
                }
                probability("p_m", *p_m)?;
                readout.validate(p)?;
            }
            NoiseConfig::ParametricCircuit { tau_g, tau_d, tau_a, tau_f, tau_m, .. } => {
                positive("tau_g", *tau_g)?;
                positive("tau_d", *tau_d)?;
                positive("tau_a", *tau_a)?;
                positive("tau_f", *tau_f)?;
                if tau_m.is_empty() {
                    return Err(CliError::Config("noise.tau_m needs at least one value".into()));
                }
                for &t in tau_m {
                    positive("tau_m", t)?;
                    if !t.is_finite() {
                        return Err(CliError::Config("tau_m must be finite".into()));
                    }
                }
                if !tau_f.is_finite() || !tau_g.is_finite() {
                    return Err(CliError::Config("tau_g and tau_f must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn param_name(&self) -> &'static str {
        match self.noise {
            NoiseConfig::ParametricCircuit { .. } => "tau_m",
            _ => "p",
        }
    }

    /// Measurement time and boundary minimising the average soft-flip
    /// probability over the scanned range (parametric noise only).
    pub fn flip_optimum(&self) -> Result<Option<softqec::soft_measurement::MeasurementOptimum>, CliError> {
        match &self.noise {
            NoiseConfig::ParametricCircuit { tau_a, tau_f, tau_m, .. } => {
                let lo = tau_m.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = tau_m.iter().cloned().fold(0.0, f64::max);
                if hi <= lo {
                    return Ok(None);
                }
                optimize_measurement(*tau_a, *tau_f, lo, hi).map(Some).map_err(|e| CliError::Config(e.to_string()))
            }
            _ => Ok(None),
        }
    }

    /// Scanned parameter values in output order.
    pub fn scan(&self) -> Result<Vec<f64>, CliError> {
        let mut v = match &self.noise {
            NoiseConfig::Pheno { p, .. } | NoiseConfig::Circuit { p, .. } => p.clone(),
            NoiseConfig::ParametricCircuit { tau_m, include_flip_optimum, .. } => {
                let mut v = tau_m.clone();
                if *include_flip_optimum {
                    if let Some(opt) = self.flip_optimum()? {
                        v.push(opt.tau_m);
                    }
                }
                v
            }
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(v)
    }

    fn noise_spec(&self, x: f64) -> NoiseSpec {
        match self.noise {
            NoiseConfig::Pheno { p_m, readout, .. } => NoiseSpec::Pheno { p_d: x, p_m, readout: readout.spec(x) },
            NoiseConfig::Circuit { p_m, readout, .. } => NoiseSpec::Circuit { p_ig: x, p_im: x, p_cnot: x, p_m, readout: readout.spec(x) },
            NoiseConfig::ParametricCircuit { tau_g, tau_d, tau_a, tau_f, .. } => {
                NoiseSpec::Parametric { tau_g, tau_m: x, tau_d, tau_a, tau_f }
            }
        }
    }

    fn extras(&self, x: f64, flip_opt: Option<f64>) -> Result<BTreeMap<String, f64>, CliError> {
        let mut m = BTreeMap::new();
        if let NoiseConfig::ParametricCircuit { tau_a, tau_f, .. } = self.noise {
            let model = SoftModel::amplitude_damping(x, tau_a, tau_f).map_err(|e| CliError::Config(e.to_string()))?;
            m.insert("avg_soft_flip".to_string(), model.avg_flip_prob());
            if let Some(t) = flip_opt {
                m.insert("tau_m_flip_opt".to_string(), t);
            }
        }
        Ok(m)
    }

    /// The sweep: distances, then rounds, decoders and scanned values.
    pub fn plan(&self) -> Result<SweepPlan, CliError> {
        let scan = self.scan()?;
        let flip_opt = self.flip_optimum()?.map(|o| o.tau_m);
        let mut points = Vec::new();
        for &d in &self.distances {
            for t in self.rounds.resolve(d)? {
                for &decoder in &self.decoders {
                    for &x in &scan {
                        points.push(PointSpec {
                            d,
                            rounds: t,
                            param_name: self.param_name().to_string(),
                            param: x,
                            decoder,
                            noise: self.noise_spec(x),
                            extras: self.extras(x, flip_opt)?,
                        });
                    }
                }
            }
        }
        Ok(SweepPlan { points, trials: self.trials, seed: self.seed, workers: self.workers, timing: self.timing, precision: self.precision })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
            assert!(!cfg.plan().unwrap().points.is_empty());
        }
    }

    #[test]
    fn rounds_rules() {
        assert_eq!(Rounds::Rule("d".into()).resolve(7).unwrap(), vec![7]);
        assert_eq!(Rounds::Rule("3d".into()).resolve(5).unwrap(), vec![15]);
        assert_eq!(Rounds::List(vec![100, 300]).resolve(7).unwrap(), vec![100, 300]);
        assert!(Rounds::Rule("x".into()).resolve(7).is_err());
        assert!(Rounds::Fixed(0).resolve(7).is_err());
    }

    #[test]
    fn rejects_invalid_values() {
        let base = preset("pheno-soft").unwrap();
        let text = toml::to_string(&base).unwrap();
        assert!(ExperimentConfig::parse(&text).is_ok());
        let bad = text.replace("0.032", "0.6");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(CliError::Config(_))));
        let mut c = base.clone();
        c.distances = vec![4];
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::parse(&format!("{text}\nunknown = 1\n")).is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut c = preset("pheno-soft").unwrap();
        c.apply(&Overrides { trials: Some(10), seed: Some(3), distances: Some(vec![3, 5]), ..Overrides::default() }).unwrap();
        assert_eq!((c.trials, c.seed, c.distances.clone()), (10, 3, vec![3, 5]));
        assert!(c.apply(&Overrides { trials: Some(0), ..Overrides::default() }).is_err());
    }

    #[test]
    fn tradeoff_includes_flip_optimum() {
        let c = preset("tradeoff").unwrap();
        let opt = c.flip_optimum().unwrap().unwrap();
        assert!(c.scan().unwrap().contains(&opt.tau_m));
        let plan = c.plan().unwrap();
        assert!(plan.points.iter().all(|p| p.extras["tau_m_flip_opt"] == opt.tau_m && p.extras.contains_key("avg_soft_flip")));
    }
}
