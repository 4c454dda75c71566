//! Run configuration: one JSON file, overridden field by field from flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use hnn_core::group::PresentationDoc;
use hnn_core::lattice::QMatrix;
use hnn_core::y_space::{Window, YModel};
use hnn_core::Presentation;

/// A preset string such as `"bs:1:2"` or a full presentation document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresentationSource {
    Preset(String),
    Doc(PresentationDoc),
}

impl PresentationSource {
    pub fn build(&self) -> anyhow::Result<Presentation> {
        Ok(match self {
            PresentationSource::Preset(s) => Presentation::from_preset(s)?,
            PresentationSource::Doc(d) => Presentation::from_doc(d)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct YModelConfig {
    /// Rows of rational strings; identity when absent.
    pub base_metric: Option<Vec<Vec<String>>>,
    pub grid_step: f64,
    /// Defaults to `[-2, 2]^n x [-6, 6]`.
    pub window: Option<Window>,
}

impl Default for YModelConfig {
    fn default() -> Self {
        Self { base_metric: None, grid_step: 0.05, window: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub presentation: PresentationSource,
    /// Each command has its own default radius when absent.
    pub tree_radius: Option<usize>,
    pub y_model: YModelConfig,
    /// Pairs or samples drawn by the sampling commands.
    pub sample_budget: Option<usize>,
    pub seed: u64,
    pub p_values: Vec<f64>,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            presentation: PresentationSource::Preset("bs:1:2".into()),
            tree_radius: None,
            y_model: YModelConfig::default(),
            sample_budget: None,
            seed: 0,
            p_values: vec![2.0],
            output_dir: None,
        }
    }
}

/// Flag values that replace config fields when given.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub radius: Option<usize>,
    pub grid_step: Option<f64>,
    pub pairs: Option<usize>,
    pub seed: Option<u64>,
    pub p_values: Vec<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, over: Overrides) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = over.preset {
            cfg.presentation = PresentationSource::Preset(s);
        }
        if over.radius.is_some() {
            cfg.tree_radius = over.radius;
        }
        if let Some(h) = over.grid_step {
            cfg.y_model.grid_step = h;
        }
        if over.pairs.is_some() {
            cfg.sample_budget = over.pairs;
        }
        if let Some(s) = over.seed {
            cfg.seed = s;
        }
        if !over.p_values.is_empty() {
            cfg.p_values = over.p_values;
        }
        if over.out.is_some() {
            cfg.output_dir = over.out;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.sample_budget == Some(0) {
            bail!("sample_budget must be positive");
        }
        if self.p_values.is_empty() {
            bail!("p_values must not be empty");
        }
        if let Some(p) = self.p_values.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
            bail!("every p must exceed 1, got {p}");
        }
        let h = self.y_model.grid_step;
        if !(h > 0.0 && h <= 1.0) {
            bail!("grid_step must lie in (0, 1], got {h}");
        }
        Ok(())
    }

    pub fn radius_or(&self, default: usize) -> usize {
        self.tree_radius.unwrap_or(default)
    }

    pub fn budget_or(&self, default: usize) -> usize {
        self.sample_budget.unwrap_or(default)
    }

    pub fn presentation(&self) -> anyhow::Result<Arc<Presentation>> {
        Ok(Arc::new(self.presentation.build()?))
    }

    pub fn y_model(&self, pres: Arc<Presentation>) -> anyhow::Result<YModel> {
        let n = pres.rank();
        let window = self.y_model.window.clone().unwrap_or_else(|| Window::symmetric(n, 2.0, 6.0));
        self.y_model_in(pres, window)
    }

    pub fn y_model_in(&self, pres: Arc<Presentation>, window: Window) -> anyhow::Result<YModel> {
        let n = pres.rank();
        let metric = match &self.y_model.base_metric {
            Some(rows) => QMatrix::parse_rows(rows)?,
            None => QMatrix::identity(n),
        };
        Ok(YModel::new(pres, metric, self.y_model.grid_step, window)?)
    }
}
