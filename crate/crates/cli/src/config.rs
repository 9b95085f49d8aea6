//! Resolved run configuration: defaults, then the JSON file, then flags.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use boxreg::{AdamConfig, BBox, LossKind, LossSpec, Pairing, ScenarioConfig};

use crate::args::{Command, Format};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub alphas: Vec<f64>,
    pub clamps: Vec<[f64; 2]>,
    pub points: usize,
    pub start: BBox,
    pub gt: BBox,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            alphas: vec![0.9, 0.95, 0.98, 0.99],
            clamps: vec![[0.0, 0.99], [0.9, 0.99]],
            points: 101,
            start: BBox {
                cx: 0.2,
                cy: 0.3,
                w: 0.08,
                h: 0.12,
            },
            gt: BBox {
                cx: 0.5,
                cy: 0.5,
                w: 0.1,
                h: 0.1,
            },
        }
    }
}

impl LandscapeConfig {
    /// IoU, then one static curve per alpha, then one dynamic curve per clamp.
    pub fn specs(&self) -> Result<Vec<LossSpec>> {
        let mut out = vec![LossSpec::Iou];
        for &a in &self.alphas {
            out.push(LossSpec::interp(a)?);
        }
        for &[lo, hi] in &self.clamps {
            out.push(LossSpec::dyn_interp(lo, hi)?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub pairs: usize,
    /// Minimum distance from any kink for a sampled pair.
    pub margin: f64,
    pub fd_step: f64,
    pub analytic_tol: f64,
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            pairs: 1000,
            margin: 1e-4,
            fd_step: boxreg::DEFAULT_FD_STEP,
            analytic_tol: 1e-12,
            rel_tol: 1e-4,
            abs_floor: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaBoundConfig {
    pub pairs: usize,
    pub delta: f64,
}

impl Default for AlphaBoundConfig {
    fn default() -> Self {
        AlphaBoundConfig {
            pairs: 10_000,
            delta: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub adam: AdamConfig,
    pub losses: Vec<LossSpec>,
    pub format: Format,
    pub plot: bool,
    pub landscape: LandscapeConfig,
    pub gradcheck: GradcheckConfig,
    pub alpha_bound: AlphaBoundConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::default(),
            adam: AdamConfig::default(),
            losses: LossKind::ALL.iter().map(|k| k.default_spec()).collect(),
            format: Format::Csv,
            plot: false,
            landscape: LandscapeConfig::default(),
            gradcheck: GradcheckConfig::default(),
            alpha_bound: AlphaBoundConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse a config document. A run manifest is accepted too; its `config`
    /// member is used.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        if let Some(obj) = v.as_object_mut() {
            if obj.contains_key("command") && obj.contains_key("config") {
                v = obj.remove("config").unwrap_or_default();
            }
        }
        serde_json::from_value(v).context("invalid config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Config file (or defaults) with the command's flags applied on top.
    pub fn resolve(cmd: &Command) -> Result<Self> {
        let c = cmd.common();
        let mut cfg = match &c.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = c.seed {
            cfg.scenario.seed = s;
        }
        if let Some(n) = c.steps {
            cfg.adam.steps = n;
        }
        if let Some(lr) = c.lr {
            cfg.adam.lr = lr;
        }
        if let Some(n) = c.anchors {
            cfg.scenario.n_anchors = n;
        }
        if let Some(a) = c.gt_area {
            cfg.scenario.gt_area = a;
        }
        if let Some(l) = &c.losses {
            cfg.losses = l.0.clone();
        }
        if let Some(f) = c.format {
            cfg.format = f;
        }
        if c.plot {
            cfg.plot = true;
        }
        if let Some(p) = c.parameterization {
            cfg.adam.parameterization = p.into();
        }
        match cmd {
            Command::Simulate(a) => {
                if a.single_gt {
                    cfg.scenario.pairing = Pairing::SingleGt;
                }
                if let Some(m) = a.scale_mode {
                    cfg.scenario.scale_mode = m.into();
                }
            }
            Command::Landscape(a) => {
                let l = &mut cfg.landscape;
                if let Some(v) = &a.alphas {
                    l.alphas = v.clone();
                }
                if let Some(v) = &a.clamps {
                    l.clamps = v.clone();
                }
                if let Some(n) = a.points {
                    l.points = n;
                }
                if let Some(b) = a.start {
                    l.start = b;
                }
                if let Some(b) = a.gt {
                    l.gt = b;
                }
            }
            Command::Gradcheck(a) => {
                if let Some(n) = a.pairs {
                    cfg.gradcheck.pairs = n;
                }
            }
            Command::AlphaBound(a) => {
                if let Some(n) = a.pairs {
                    cfg.alpha_bound.pairs = n;
                }
                if let Some(d) = a.delta {
                    cfg.alpha_bound.delta = d;
                }
            }
            Command::Enlargement(_) => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.adam.validate()?;
        if self.losses.is_empty() {
            bail!("loss list is empty");
        }
        for l in &self.losses {
            l.validate()?;
        }
        self.landscape.specs()?;
        self.landscape.start.validate()?;
        self.landscape.gt.validate()?;
        if self.landscape.points < 3 {
            bail!("landscape needs at least 3 points");
        }
        let g = &self.gradcheck;
        if !(g.fd_step > 0.0 && g.margin >= 0.0 && g.rel_tol > 0.0 && g.abs_floor > 0.0 && g.analytic_tol >= 0.0) {
            bail!("gradcheck tolerances must be positive");
        }
        let d = self.alpha_bound.delta;
        if !(d > 0.0 && d < 1.0) {
            bail!("alpha-bound delta {d} must lie in (0, 1)");
        }
        Ok(())
    }
}
