//! Experiment configuration files.
//!
//! ```toml
//! seed = 7
//!
//! [output]
//! plot = true
//!
//! [[experiment]]
//! inequality = "strichartz_5_1"
//! model = "circle"
//! h = [0.25, 0.125, 0.0625]
//! trials = 20
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{config, Error, Result};
use crate::fields::{DataFamily, FamilyKind};
use crate::lp::dyadic_index;
use crate::maximal::c_alpha;
use crate::probe::SLOPE_TOL;
use crate::spectra::{sphere2_degree_cutoff, ModelKind};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum InequalityId {
    #[serde(rename = "strichartz_5_1")]
    Strichartz,
    #[serde(rename = "maximal_5_2")]
    Maximal,
    #[serde(rename = "lemma_5_7")]
    MaximalLemma,
    #[serde(rename = "sphere_sec4")]
    SphereCascade,
    #[serde(rename = "smoothing_3_1")]
    SmoothingLow,
    #[serde(rename = "smoothing_3_2")]
    SmoothingHigh,
    #[serde(rename = "torus_6_1")]
    TorusPlane,
    #[serde(rename = "torus_6_2")]
    TorusLine,
    #[serde(rename = "torus_6_3")]
    TorusSpace,
    #[serde(rename = "sphere_sharp_1_8")]
    SphereSharp,
    #[serde(rename = "low_freq")]
    LowFrequency,
    #[serde(rename = "sweep")]
    Sweep,
}

impl InequalityId {
    pub const ALL: [InequalityId; 12] = [
        InequalityId::Strichartz,
        InequalityId::Maximal,
        InequalityId::MaximalLemma,
        InequalityId::SphereCascade,
        InequalityId::SmoothingLow,
        InequalityId::SmoothingHigh,
        InequalityId::TorusPlane,
        InequalityId::TorusLine,
        InequalityId::TorusSpace,
        InequalityId::SphereSharp,
        InequalityId::LowFrequency,
        InequalityId::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityId::Strichartz => "strichartz_5_1",
            InequalityId::Maximal => "maximal_5_2",
            InequalityId::MaximalLemma => "lemma_5_7",
            InequalityId::SphereCascade => "sphere_sec4",
            InequalityId::SmoothingLow => "smoothing_3_1",
            InequalityId::SmoothingHigh => "smoothing_3_2",
            InequalityId::TorusPlane => "torus_6_1",
            InequalityId::TorusLine => "torus_6_2",
            InequalityId::TorusSpace => "torus_6_3",
            InequalityId::SphereSharp => "sphere_sharp_1_8",
            InequalityId::LowFrequency => "low_freq",
            InequalityId::Sweep => "sweep",
        }
    }

    fn default_model(self) -> ModelKind {
        match self {
            InequalityId::Strichartz | InequalityId::TorusLine | InequalityId::LowFrequency | InequalityId::Sweep => {
                ModelKind::Circle
            }
            InequalityId::Maximal | InequalityId::MaximalLemma | InequalityId::TorusPlane => ModelKind::Torus2,
            InequalityId::SphereCascade | InequalityId::SphereSharp => ModelKind::Sphere2,
            InequalityId::SmoothingLow | InequalityId::SmoothingHigh => ModelKind::HyperbolicRadial3,
            InequalityId::TorusSpace => ModelKind::Torus3,
        }
    }

    /// The only model the check is defined on, if it is tied to one.
    fn fixed_model(self) -> Option<ModelKind> {
        match self {
            InequalityId::SphereCascade | InequalityId::SphereSharp => Some(ModelKind::Sphere2),
            InequalityId::SmoothingLow | InequalityId::SmoothingHigh => Some(ModelKind::HyperbolicRadial3),
            InequalityId::TorusPlane => Some(ModelKind::Torus2),
            InequalityId::TorusLine => Some(ModelKind::Circle),
            InequalityId::TorusSpace => Some(ModelKind::Torus3),
            _ => None,
        }
    }
}

impl fmt::Display for InequalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TrialSpec {
    Uniform(usize),
    PerScale(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleConfig {
    Sobolev {
        #[serde(default)]
        alpha: f64,
    },
    SingleMode {
        id: usize,
    },
    LevelBeam,
    HighestWeight,
    WavePacket {
        width: f64,
    },
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub inequality: InequalityId,
    pub model: Option<ModelKind>,
    /// Output file stem; defaults to the inequality id and model.
    pub name: Option<String>,
    pub cutoff: Option<f64>,
    pub h: Option<Vec<f64>>,
    #[serde(alias = "q")]
    pub p: Option<f64>,
    /// Sobolev index of the data (cascade, sweep members, ensembles).
    pub alpha: Option<f64>,
    /// Extra loss exponent of the maximal lemma.
    pub beta: Option<f64>,
    /// Threshold exponent for the maximal scaling check.
    pub exponent: Option<f64>,
    pub trials: Option<TrialSpec>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub slope_tol: Option<f64>,
    pub radius: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub ensemble: Option<EnsembleConfig>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// An experiment with every default filled in and every precondition
/// checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub id: InequalityId,
    pub model: ModelKind,
    pub name: String,
    pub cutoff: f64,
    pub hs: Vec<f64>,
    pub trials: Vec<usize>,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    pub exponent: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub slope_tol: f64,
    pub radius: f64,
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub family: DataFamily,
}

impl Experiment {
    /// Runs on three-dimensional compact models are opt-in.
    pub fn is_slow(&self) -> bool {
        matches!(self.model, ModelKind::Torus3 | ModelKind::SphereZonal3)
    }
}

fn dyadic(k0: i32, k1: i32) -> Vec<f64> {
    (k0..=k1).map(|k| 0.5f64.powi(k)).collect()
}

fn lebesgue_default(model: ModelKind) -> f64 {
    let n = model.dim() as f64;
    2.0 * (n + 2.0) / n
}

fn maximal_exponent(model: ModelKind) -> f64 {
    match model {
        ModelKind::Circle => 1.0 / 3.0,
        ModelKind::Torus2 => 0.5,
        m => {
            let n = m.dim() as f64;
            3.0 * n / (2.0 * (n + 2.0))
        }
    }
}

fn err(id: InequalityId, msg: impl fmt::Display) -> Error {
    config(format!("experiment {id}: {msg}"))
}

fn expand_trials(id: InequalityId, spec: Option<&TrialSpec>, default: &[usize], n: usize) -> Result<Vec<usize>> {
    let v = match spec {
        Some(TrialSpec::Uniform(t)) => vec![*t; n],
        Some(TrialSpec::PerScale(v)) => {
            if v.len() != n {
                return Err(err(id, format!("trials lists {} counts for {n} scales", v.len())));
            }
            v.clone()
        }
        None => (0..n).map(|i| default[i.min(default.len() - 1)]).collect(),
    };
    if v.contains(&0) {
        return Err(err(id, "trial counts must be positive"));
    }
    Ok(v)
}

impl ExperimentConfig {
    pub fn minimal(id: InequalityId) -> Self {
        Self {
            inequality: id,
            model: None,
            name: None,
            cutoff: None,
            h: None,
            p: None,
            alpha: None,
            beta: None,
            exponent: None,
            trials: None,
            seed: None,
            tolerance: None,
            slope_tol: None,
            radius: None,
            lambdas: None,
            times: None,
            alphas: None,
            ensemble: None,
        }
    }

    /// Fills defaults; `seed` is the fallback when the experiment sets none.
    pub fn resolve(&self, seed: u64) -> Result<Experiment> {
        use InequalityId as I;
        let id = self.inequality;
        let model = self.model.unwrap_or(id.default_model());
        if let Some(m) = id.fixed_model() {
            if model != m {
                return Err(err(id, format!("defined on {m} only, got {model}")));
            }
        }
        if model == ModelKind::HyperbolicRadial3 && id.fixed_model() != Some(model) {
            return Err(err(id, "needs a compact model"));
        }
        let seed = self.seed.unwrap_or(seed);
        let hs = self.h.clone().unwrap_or(match id {
            I::Maximal | I::MaximalLemma => dyadic(1, 5),
            I::TorusSpace => dyadic(1, 3),
            _ => dyadic(2, 6),
        });
        let scaled = !matches!(id, I::SphereCascade | I::SmoothingLow | I::SmoothingHigh | I::LowFrequency | I::Sweep);
        if scaled {
            if hs.is_empty() {
                return Err(err(id, "h list is empty"));
            }
            for h in &hs {
                dyadic_index(*h).map_err(|e| err(id, e))?;
            }
            if hs.windows(2).any(|w| w[1] >= w[0]) {
                return Err(err(id, "h values must strictly decrease"));
            }
        }
        let n = hs.len();
        let multi = model.dim() >= 2;
        let default_trials: Vec<usize> = match id {
            I::TorusLine => vec![50],
            I::TorusPlane => vec![50, 10, 3, 1, 1],
            I::TorusSpace => vec![4, 2, 1],
            I::SphereSharp => vec![1],
            I::Strichartz if multi => vec![10, 5, 2, 1, 1],
            I::Strichartz => vec![10],
            I::Maximal if model == ModelKind::Torus2 => vec![16, 16, 16, 8, 4],
            I::Maximal => vec![16, 16, 16, 8, 8],
            I::MaximalLemma => vec![8, 8, 4, 2, 1],
            I::SphereCascade | I::LowFrequency => vec![10],
            I::Sweep => vec![2],
            I::SmoothingLow | I::SmoothingHigh => vec![1],
        };
        let trials = if scaled {
            expand_trials(id, self.trials.as_ref(), &default_trials, n)?
        } else {
            expand_trials(id, self.trials.as_ref(), &default_trials, 1)?
        };
        let p = self.p.unwrap_or(match id {
            I::TorusPlane | I::SphereSharp | I::LowFrequency => 4.0,
            I::TorusLine => 6.0,
            I::TorusSpace => 8.0 / 3.0,
            I::SphereCascade | I::Sweep | I::SmoothingLow | I::SmoothingHigh => 2.0,
            _ => lebesgue_default(model),
        });
        if !(p >= 2.0 && p.is_finite()) {
            return Err(err(id, format!("exponent p must be at least 2, got {p}")));
        }
        let alpha = self.alpha.unwrap_or(if id == I::SphereCascade { 0.6 } else { 0.0 });
        if id == I::SphereCascade {
            c_alpha(alpha).map_err(|e| match e {
                Error::DivergentConstant(m) => Error::DivergentConstant(format!("experiment {id}: {m}")),
                other => other,
            })?;
        }
        let cutoff = self.cutoff.unwrap_or(match id {
            I::SphereCascade => sphere2_degree_cutoff(64),
            I::LowFrequency => 4.0,
            I::Sweep => 16.0,
            _ => 0.0,
        });
        if !(cutoff >= 0.0 && cutoff.is_finite()) {
            return Err(err(id, format!("cutoff must be nonnegative, got {cutoff}")));
        }
        if matches!(id, I::SphereCascade | I::LowFrequency | I::Sweep) && cutoff == 0.0 {
            return Err(err(id, "cutoff must be positive"));
        }
        let tolerance = self.tolerance.unwrap_or(1e-3);
        if !(tolerance > 0.0) {
            return Err(err(id, "tolerance must be positive"));
        }
        let slope_tol = self.slope_tol.unwrap_or(if id == I::SmoothingLow { 0.1 } else { SLOPE_TOL });
        let radius = self.radius.unwrap_or(1.0);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(err(id, "ball radius must be positive"));
        }
        let lambdas = self.lambdas.clone().unwrap_or(vec![8.0, 16.0, 32.0, 64.0, 128.0]);
        if matches!(id, I::SmoothingLow | I::SmoothingHigh)
            && (lambdas.len() < 3 || lambdas.iter().any(|l| !(*l > 0.0)) || lambdas.windows(2).any(|w| w[1] <= w[0]))
        {
            return Err(err(id, "lambdas must be at least 3 increasing positive values"));
        }
        let times = self.times.clone().unwrap_or(vec![1.0, 0.1, 0.01, 0.001]);
        if id == I::Sweep && times.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(err(id, "sweep times must lie in (0, 1]"));
        }
        let alphas = self.alphas.clone().unwrap_or(vec![0.2, 0.6]);
        let default_ensemble = match id {
            I::SphereSharp => EnsembleConfig::HighestWeight,
            _ => EnsembleConfig::Sobolev { alpha },
        };
        let count = trials.iter().copied().max().unwrap_or(1);
        let kind = match self.ensemble.clone().unwrap_or(default_ensemble) {
            EnsembleConfig::Sobolev { alpha } => FamilyKind::SobolevEnsemble { alpha, seed, trials: count },
            EnsembleConfig::SingleMode { id } => FamilyKind::SingleMode(id),
            EnsembleConfig::LevelBeam => FamilyKind::LevelBeam(0),
            EnsembleConfig::HighestWeight => FamilyKind::HighestWeightBeam(0),
            EnsembleConfig::WavePacket { width } => {
                if !(width > 0.0) {
                    return Err(err(id, "wave packet width must be positive"));
                }
                FamilyKind::WavePacket { center: 0.0, width }
            }
        };
        let name = self.name.clone().unwrap_or(format!("{}_{}", id.name(), model.name()));
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(err(id, format!("name `{name}` must be a nonempty [A-Za-z0-9_-] word")));
        }
        Ok(Experiment {
            id,
            model,
            name,
            cutoff,
            hs,
            trials,
            p,
            alpha,
            beta: self.beta.unwrap_or(1.0 / p),
            exponent: self.exponent.unwrap_or(maximal_exponent(model)),
            seed,
            tolerance,
            slope_tol,
            radius,
            lambdas,
            times,
            alphas,
            family: DataFamily::new(kind, cutoff),
        })
    }
}
