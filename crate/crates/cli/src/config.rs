use std::path::{Path, PathBuf};

use adiabatic_search::instance::{InstanceError, NoiseModel, ProblemInstance};
use adiabatic_search::schedule::{ScheduleKind, DEFAULT_EPSILON};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSource {
    Inline {
        n: u32,
        marked: usize,
        f: Vec<f64>,
    },
    Noise {
        n: u32,
        marked: usize,
        model: NoiseModel,
    },
    Unperturbed {
        n: u32,
        marked: usize,
    },
}

impl Default for InstanceSource {
    fn default() -> Self {
        InstanceSource::Unperturbed { n: 4, marked: 0 }
    }
}

impl InstanceSource {
    pub fn build(&self) -> Result<ProblemInstance, InstanceError> {
        match self {
            InstanceSource::Inline { n, marked, f } => ProblemInstance::new(*n, f.clone(), *marked),
            InstanceSource::Noise { n, marked, model } => {
                ProblemInstance::perturb(*n, *marked, model)
            }
            InstanceSource::Unperturbed { n, marked } => ProblemInstance::unperturbed(*n, *marked),
        }
    }
}

/// One uniform block of sample points `from + (to − from)·j/(points − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SGrid {
    pub points: usize,
    #[serde(default)]
    pub from: f64,
    #[serde(default = "one")]
    pub to: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Union of these grids, sorted and deduplicated.
    pub sweep: Vec<SGrid>,
    /// Number of lowest eigenvalue curves.
    pub k: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            sweep: vec![SGrid {
                points: 101,
                from: 0.0,
                to: 1.0,
            }],
            k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub grid_points: usize,
    /// Narrow/wide cutoff for consecutive gaps; `n/N` when absent.
    pub width_threshold: Option<f64>,
    /// Known minimum gap; measured when absent.
    pub g_min: Option<f64>,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            grid_points: 201,
            width_threshold: None,
            g_min: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinGapConfig {
    pub grid_points: usize,
    pub refine_tol: f64,
    /// Also probe the spectrum at `s₀ = 1/probe_p`.
    pub probe_p: Option<f64>,
}

impl Default for MinGapConfig {
    fn default() -> Self {
        Self {
            grid_points: adiabatic_search::spectrum::DEFAULT_GRID_POINTS,
            refine_tol: adiabatic_search::spectrum::DEFAULT_REFINE_TOL,
            probe_p: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schedules: Vec<ScheduleKind>,
    pub epsilons: Vec<f64>,
    /// Integrator steps; raised automatically to the stability minimum.
    pub steps: usize,
    pub nodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schedules: vec![ScheduleKind::Global, ScheduleKind::LocalExact],
            epsilons: vec![DEFAULT_EPSILON],
            steps: 0,
            nodes: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub spectrum: SpectrumConfig,
    pub envelope: EnvelopeConfig,
    pub mingap: MinGapConfig,
    pub run: RunConfig,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instance: InstanceSource::default(),
            spectrum: SpectrumConfig::default(),
            envelope: EnvelopeConfig::default(),
            mingap: MinGapConfig::default(),
            run: RunConfig::default(),
            out: PathBuf::from("out"),
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<u32>,
    pub seed: Option<u64>,
    pub epsilon: Option<Vec<f64>>,
    pub schedule: Option<Vec<ScheduleKind>>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub g_min: Option<f64>,
    pub width_threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                Ok(serde_json::from_str(&text)?)
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(n_new) = o.n {
            match &mut self.instance {
                InstanceSource::Inline { n, .. } if *n != n_new => {
                    return Err(ConfigError::Invalid(format!(
                        "--n {n_new} conflicts with the inline instance (n = {n})"
                    )))
                }
                InstanceSource::Inline { .. } => {}
                InstanceSource::Noise { n, .. } | InstanceSource::Unperturbed { n, .. } => {
                    *n = n_new
                }
            }
        }
        if let Some(seed_new) = o.seed {
            match &mut self.instance {
                InstanceSource::Noise {
                    model:
                        NoiseModel::UniformInterval { seed, .. }
                        | NoiseModel::GaussianClipped { seed, .. },
                    ..
                } => *seed = seed_new,
                _ => {
                    return Err(ConfigError::Invalid(
                        "--seed needs a seeded noise-model instance source".into(),
                    ))
                }
            }
        }
        if let Some(e) = &o.epsilon {
            self.run.epsilons = e.clone();
        }
        if let Some(s) = &o.schedule {
            self.run.schedules = s.clone();
        }
        if let Some(steps) = o.steps {
            self.run.steps = steps;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if o.g_min.is_some() {
            self.envelope.g_min = o.g_min;
        }
        if o.width_threshold.is_some() {
            self.envelope.width_threshold = o.width_threshold;
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.spectrum.k == 0 {
            return Err(ConfigError::Invalid("spectrum.k must be at least 1".into()));
        }
        if self.spectrum.sweep.is_empty()
            || self.spectrum.sweep.iter().any(|g| {
                g.points < 2
                    || !(0.0..=1.0).contains(&g.from)
                    || !(0.0..=1.0).contains(&g.to)
                    || g.to <= g.from
            })
        {
            return Err(ConfigError::Invalid(
                "spectrum.sweep needs grids with points >= 2 and 0 <= from < to <= 1".into(),
            ));
        }
        if self.envelope.grid_points < 2 {
            return Err(ConfigError::Invalid(
                "envelope.grid_points must be at least 2".into(),
            ));
        }
        if let Some(g) = self.envelope.g_min {
            if !(g > 0.0 && g < 1.0) {
                return Err(ConfigError::Invalid(format!(
                    "g_min = {g} must lie in (0, 1)"
                )));
            }
        }
        if self.run.epsilons.is_empty()
            || self
                .run
                .epsilons
                .iter()
                .any(|e| !(*e > 0.0 && e.is_finite()))
        {
            return Err(ConfigError::Invalid("run.epsilons must be positive".into()));
        }
        if self.run.schedules.is_empty() {
            return Err(ConfigError::Invalid(
                "run.schedules must not be empty".into(),
            ));
        }
        Ok(())
    }

    /// Sorted, deduplicated union of the spectrum sweep grids.
    pub fn s_grid(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .spectrum
            .sweep
            .iter()
            .flat_map(|g| {
                let last = (g.points - 1) as f64;
                (0..g.points).map(move |j| g.from + (g.to - g.from) * j as f64 / last)
            })
            .collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_merge_sorted_without_duplicates() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"spectrum": {"sweep": [{"points": 3}, {"points": 3, "from": 0.25, "to": 0.75}]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.s_grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn overrides_replace_entries() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&Overrides {
            n: Some(6),
            epsilon: Some(vec![0.4, 0.05]),
            schedule: Some(vec![ScheduleKind::LocalEnvelope]),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(
            cfg.instance,
            InstanceSource::Unperturbed { n: 6, marked: 0 }
        );
        assert_eq!(cfg.run.epsilons, vec![0.4, 0.05]);
        assert_eq!(cfg.run.schedules, vec![ScheduleKind::LocalEnvelope]);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        let bad = Overrides {
            epsilon: Some(vec![0.0]),
            ..Overrides::default()
        };
        assert!(matches!(cfg.apply(&bad), Err(ConfigError::Invalid(_))));
        let mut inline: ExperimentConfig = serde_json::from_str(
            r#"{"instance": {"source": "inline", "n": 2, "marked": 0, "f": [0, 1, 2, 3]}}"#,
        )
        .unwrap();
        let n = Overrides {
            n: Some(3),
            ..Overrides::default()
        };
        assert!(matches!(inline.apply(&n), Err(ConfigError::Invalid(_))));
    }
}
