use std::fmt;
use std::path::{Path, PathBuf};

use hawkes_core::kernels::{KernelSpec, ScaleFactor, TabulatedKernel};
use hawkes_core::limits::{classify_regime, RegimeClass};
use hawkes_core::HawkesError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Resolvent,
    Functional,
    Flln,
    Fclt,
    WeaklyCritical,
    StronglyCritical,
    Rates,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Resolvent => "resolvent",
            Self::Functional => "functional",
            Self::Flln => "flln",
            Self::Fclt => "fclt",
            Self::WeaklyCritical => "weakly-critical",
            Self::StronglyCritical => "strongly-critical",
            Self::Rates => "rates",
        }
    }

    /// Regimes in which the experiment has a target; `None` means any.
    fn regimes(&self) -> Option<&'static [RegimeClass]> {
        use RegimeClass::*;
        match self {
            Self::Resolvent | Self::Functional => None,
            Self::Flln | Self::Fclt => Some(&[Subcritical, StronglyCritical]),
            Self::WeaklyCritical | Self::Rates => Some(&[WeaklyCritical]),
            Self::StronglyCritical => Some(&[StronglyCritical]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScaleConfig {
    Constant { value: f64 },
    TwoPoint { low: f64, high: f64, p_low: f64 },
    Pareto { x_m: f64, shape: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Exponential {
        m: f64,
        beta: f64,
    },
    ExponentialMixture {
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    MittagLeffler {
        alpha: f64,
        beta: f64,
    },
    MixedMittagLeffler {
        alpha1: f64,
        beta1: f64,
        alpha2: f64,
        beta2: f64,
    },
    ScaledStable {
        alpha: f64,
        xi: ScaleConfig,
    },
    /// CSV file with header `t,phi`; relative paths resolve against the config file.
    Tabulated {
        path: PathBuf,
        m: Option<f64>,
    },
}

impl KernelConfig {
    pub fn build(&self, base: &Path) -> Result<KernelSpec, HawkesError> {
        match self {
            Self::Exponential { m, beta } => KernelSpec::exponential(*m, *beta),
            Self::ExponentialMixture { weights, rates } => {
                KernelSpec::exponential_mixture(weights.clone(), rates.clone())
            }
            Self::MittagLeffler { alpha, beta } => KernelSpec::mittag_leffler(*alpha, *beta),
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => KernelSpec::mixed_mittag_leffler(*alpha1, *beta1, *alpha2, *beta2),
            Self::ScaledStable { alpha, xi } => {
                let xi = match xi {
                    ScaleConfig::Constant { value } => ScaleFactor::Constant(*value),
                    ScaleConfig::TwoPoint { low, high, p_low } => ScaleFactor::TwoPoint {
                        low: *low,
                        high: *high,
                        p_low: *p_low,
                    },
                    ScaleConfig::Pareto { x_m, shape } => ScaleFactor::Pareto {
                        x_m: *x_m,
                        shape: *shape,
                    },
                };
                KernelSpec::scaled_stable(*alpha, xi)
            }
            Self::Tabulated { path, m } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                Ok(KernelSpec::tabulated(TabulatedKernel::from_csv_path(
                    full, *m,
                )?))
            }
        }
    }
}

/// One experiment, read from a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kernel: KernelConfig,
    pub mu0: Option<f64>,
    /// Horizon `T`; for limit experiments the horizon in rescaled time.
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    /// Grid step; defaults to `horizon / 1000`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Scales `n`; defaults to `[8, 16, 32, 64]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    /// Monte Carlo replicas; defaults to 1000.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    /// Frequency `u` of the functional experiment; defaults to 0.5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

pub const DEFAULT_SCALES: [f64; 4] = [8.0, 16.0, 32.0, 64.0];
pub const DEFAULT_REPLICAS: usize = 1000;
pub const DEFAULT_FREQUENCY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosticKind {
    Invalid,
    Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub field: &'static str,
    pub message: String,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        field,
        message: message.into(),
        kind: DiagnosticKind::Invalid,
    }
}

fn positive(field: &'static str, v: Option<f64>, out: &mut Vec<Diagnostic>) {
    match v {
        None => out.push(invalid(field, "missing")),
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            out.push(invalid(field, format!("must be positive, got {x}")))
        }
        _ => {}
    }
}

/// A config whose mandatory fields have been checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub kernel: KernelSpec,
    pub mu0: f64,
    pub horizon: f64,
    pub seed: u64,
    pub step: f64,
    pub scales: Vec<f64>,
    pub replicas: usize,
    pub frequency: f64,
}

impl ExperimentConfig {
    /// Parses a config, or the `config` member of a run's `meta.json`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("config does not parse: {e}"))?;
        if value.get("schema").is_some() && value.get("config").is_some() {
            value = value["config"].take();
        }
        serde_json::from_value(value).map_err(|e| format!("config does not parse: {e}"))
    }

    /// Every violation found; an empty list means the config can run.
    pub fn validate(&self, base: &Path) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        positive("mu0", self.mu0, &mut out);
        positive("horizon", self.horizon, &mut out);
        if self.seed.is_none() {
            out.push(invalid("seed", "missing"));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                out.push(invalid("step", format!("must be positive, got {h}")));
            } else if let Some(t) = self.horizon {
                if h > t {
                    out.push(invalid("step", "step exceeds horizon"));
                }
            }
        }
        if let Some(ns) = &self.scales {
            if ns.is_empty() {
                out.push(invalid("scales", "must not be empty"));
            }
            if ns.iter().any(|n| !(*n > 0.0 && n.is_finite())) {
                out.push(invalid("scales", "all scales must be positive"));
            }
        }
        if let Some(r) = self.replicas {
            if r < 2 {
                out.push(invalid("replicas", format!("need at least 2, got {r}")));
            }
        }
        if let Some(u) = self.frequency {
            if !u.is_finite() {
                out.push(invalid("frequency", "must be finite"));
            }
        }
        match self.kernel.build(base) {
            Err(e) => out.push(invalid("kernel", e.to_string())),
            Ok(k) => {
                if let Some(allowed) = self.experiment.regimes() {
                    match classify_regime(&k) {
                        Ok(label) if !allowed.contains(&label.class) => {
                            out.push(Diagnostic {
                                field: "experiment",
                                message: format!(
                                "{} experiment does not apply to a {} kernel (m = {}); it needs {}",
                                self.experiment.name(),
                                label.class,
                                label.m,
                                allowed.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(" or ")
                            ),
                                kind: DiagnosticKind::Regime,
                            })
                        }
                        Ok(_) => {}
                        Err(e) => out.push(Diagnostic {
                            field: "kernel",
                            message: format!("cannot classify regime: {e}"),
                            kind: DiagnosticKind::Regime,
                        }),
                    }
                }
            }
        }
        out
    }

    /// The config with every default written out, tabulated paths made absolute and the
    /// output directory dropped; running it reproduces the same report.
    pub fn echo(&self, base: &Path) -> Self {
        let horizon = self.horizon.unwrap_or(f64::NAN);
        let kernel = match &self.kernel {
            KernelConfig::Tabulated { path, m } if !path.is_absolute() => {
                let full = base.join(path);
                KernelConfig::Tabulated {
                    path: full.canonicalize().unwrap_or(full),
                    m: *m,
                }
            }
            k => k.clone(),
        };
        Self {
            kernel,
            step: Some(self.step.unwrap_or(horizon / 1000.0)),
            scales: Some(
                self.scales
                    .clone()
                    .unwrap_or_else(|| DEFAULT_SCALES.to_vec()),
            ),
            replicas: Some(self.replicas.unwrap_or(DEFAULT_REPLICAS)),
            frequency: Some(self.frequency.unwrap_or(DEFAULT_FREQUENCY)),
            output: None,
            ..self.clone()
        }
    }

    /// Fills defaults; call only after [`ExperimentConfig::validate`] came back empty.
    pub fn resolve(&self, base: &Path) -> Result<Resolved, HawkesError> {
        let horizon = self.horizon.expect("validated");
        Ok(Resolved {
            experiment: self.experiment,
            kernel: self.kernel.build(base)?,
            mu0: self.mu0.expect("validated"),
            horizon,
            seed: self.seed.expect("validated"),
            step: self.step.unwrap_or(horizon / 1000.0),
            scales: self
                .scales
                .clone()
                .unwrap_or_else(|| DEFAULT_SCALES.to_vec()),
            replicas: self.replicas.unwrap_or(DEFAULT_REPLICAS),
            frequency: self.frequency.unwrap_or(DEFAULT_FREQUENCY),
        })
    }
}
