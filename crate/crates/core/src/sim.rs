//! Synthetic regression scenarios and batched metric aggregation.
//!
//! The standard scenario scatters anchor points uniformly over a disk around
//! the target center, expands each point into boxes of several scales and
//! aspect ratios, and regresses every box toward targets of fixed area.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::losses::{breakdown, LossSpec, DEFAULT_ALPHA};
use crate::optim::{regress, regress_with, AdamConfig, RegressionCase, Trajectory};

pub const DEFAULT_SCALES: [f64; 7] = [
    1.0 / 32.0,
    1.0 / 24.0,
    3.0 / 64.0,
    1.0 / 16.0,
    1.0 / 12.0,
    3.0 / 32.0,
    1.0 / 8.0,
];

/// Width-to-height ratios 1:4 through 4:1.
pub const ASPECT_RATIOS: [f64; 7] = [0.25, 1.0 / 3.0, 0.5, 1.0, 2.0, 3.0, 4.0];

/// How prediction boxes are paired with targets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Every prediction box against every target aspect ratio.
    #[default]
    Cross,
    /// Only the square target.
    SingleGt,
}

/// How the `scales` list is turned into box sizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// `scale` is the box area: `w = sqrt(scale·ar)`, `h = sqrt(scale/ar)`.
    #[default]
    Area,
    /// `scale` is the side length of the square box: `w = scale·sqrt(ar)`.
    Side,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub n_anchors: usize,
    pub radius: f64,
    pub center: [f64; 2],
    pub scales: Vec<f64>,
    pub aspect_ratios: Vec<f64>,
    pub gt_area: f64,
    pub gt_aspect_ratios: Vec<f64>,
    pub seed: u64,
    pub pairing: Pairing,
    pub scale_mode: ScaleMode,
    /// Coefficient used for the tracked `r_interp` metric.
    pub track_alpha: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_anchors: 500,
            radius: 0.5,
            center: [0.5, 0.5],
            scales: DEFAULT_SCALES.to_vec(),
            aspect_ratios: ASPECT_RATIOS.to_vec(),
            gt_area: 1.0 / 64.0,
            gt_aspect_ratios: ASPECT_RATIOS.to_vec(),
            seed: 0,
            pairing: Pairing::Cross,
            scale_mode: ScaleMode::Area,
            track_alpha: DEFAULT_ALPHA,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_anchors == 0 {
            return bad("n_anchors must be at least 1".into());
        }
        if !(self.radius >= 0.0) {
            return bad(format!("radius {} must be non-negative", self.radius));
        }
        if !(self.gt_area > 0.0) {
            return bad(format!("gt_area {} must be positive", self.gt_area));
        }
        for (name, list) in [
            ("scales", &self.scales),
            ("aspect_ratios", &self.aspect_ratios),
            ("gt_aspect_ratios", &self.gt_aspect_ratios),
        ] {
            if list.is_empty() || list.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad(format!("{name} must be a non-empty list of positive values"));
            }
        }
        if !(self.track_alpha > 0.0 && self.track_alpha <= 1.0) {
            return Err(Error::InvalidAlpha(self.track_alpha));
        }
        Ok(())
    }

    /// Number of cases [`generate_cases`] produces.
    pub fn case_count(&self) -> usize {
        let gts = match self.pairing {
            Pairing::Cross => self.gt_aspect_ratios.len(),
            Pairing::SingleGt => 1,
        };
        self.n_anchors * self.scales.len() * self.aspect_ratios.len() * gts
    }

    fn box_size(&self, scale: f64, ar: f64) -> (f64, f64) {
        match self.scale_mode {
            ScaleMode::Area => ((scale * ar).sqrt(), (scale / ar).sqrt()),
            ScaleMode::Side => (scale * ar.sqrt(), scale / ar.sqrt()),
        }
    }
}

/// Anchor point `i`, drawn uniformly from the disk with its own RNG stream so
/// the draw does not depend on how many other anchors exist or on threading.
pub fn anchor_point(cfg: &ScenarioConfig, i: usize) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(i as u64);
    let r = cfg.radius * rng.random::<f64>().sqrt();
    let theta = TAU * rng.random::<f64>();
    [cfg.center[0] + r * theta.cos(), cfg.center[1] + r * theta.sin()]
}

/// Expand the configured scenario into regression cases, ordered by anchor,
/// scale, aspect ratio and target aspect ratio.
pub fn generate_cases(cfg: &ScenarioConfig) -> Result<Vec<RegressionCase>> {
    cfg.validate()?;
    let [gx, gy] = cfg.center;
    let gts: Vec<(u32, BBox)> = match cfg.pairing {
        Pairing::Cross => cfg
            .gt_aspect_ratios
            .iter()
            .enumerate()
            .map(|(k, &ar)| Ok((k as u32, BBox::with_area(gx, gy, cfg.gt_area, ar)?)))
            .collect::<Result<_>>()?,
        Pairing::SingleGt => {
            let k = cfg.gt_aspect_ratios.iter().position(|&a| a == 1.0).unwrap_or(0);
            vec![(k as u32, BBox::with_area(gx, gy, cfg.gt_area, 1.0)?)]
        }
    };

    let mut cases = Vec::with_capacity(cfg.case_count());
    for i in 0..cfg.n_anchors {
        let [ax, ay] = anchor_point(cfg, i);
        for (si, &scale) in cfg.scales.iter().enumerate() {
            for (ai, &ar) in cfg.aspect_ratios.iter().enumerate() {
                let (w, h) = cfg.box_size(scale, ar);
                let anchor = BBox::new(ax, ay, w, h)?;
                for &(gi, gt) in &gts {
                    cases.push(RegressionCase {
                        anchor,
                        gt,
                        ids: [i as u32, si as u32, ai as u32, gi],
                    });
                }
            }
        }
    }
    Ok(cases)
}

/// Signed relative area difference `(S - S_gt) / S_gt`.
pub fn r_diff(pred: &BBox, gt: &BBox) -> f64 {
    let sg = gt.area();
    (pred.area() - sg) / sg
}

pub const METRIC_NAMES: [&str; 9] = [
    "l_iou",
    "l1",
    "r_diff",
    "r_giou",
    "r_diou_dist",
    "r_eiou_wh",
    "r_siou",
    "r_piou",
    "r_interp",
];
pub const N_METRICS: usize = METRIC_NAMES.len();

pub fn metric_index(name: &str) -> Option<usize> {
    METRIC_NAMES.iter().position(|m| *m == name)
}

/// Tracked metrics at one pair, in [`METRIC_NAMES`] order.
pub fn metric_row(pred: &BBox, gt: &BBox, track_alpha: f64) -> [f64; N_METRICS] {
    let r = breakdown(pred, gt, track_alpha);
    [
        r.l_iou,
        r.l1,
        r_diff(pred, gt),
        r.r_giou,
        r.r_diou_dist,
        r.r_eiou_wh,
        r.r_siou,
        r.r_piou,
        r.r_interp,
    ]
}

/// Per-step means of every metric over a batch of cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSeries {
    pub n_cases: usize,
    /// `rows[t][m]` is the mean of metric `m` at step `t`.
    pub rows: Vec<[f64; N_METRICS]>,
}

impl StepSeries {
    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let m = metric_index(name)?;
        Some(self.rows.iter().map(|r| r[m]).collect())
    }

    pub fn final_value(&self, name: &str) -> Option<f64> {
        let m = metric_index(name)?;
        self.rows.last().map(|r| r[m])
    }
}

const CHUNK: usize = 1024;

/// Regress every case and average the metric rows per step.
///
/// Cases run in parallel on the current rayon pool; sums are accumulated in
/// case order, so the result does not depend on the thread count.
pub fn run_batch(cases: &[RegressionCase], loss: &LossSpec, cfg: &AdamConfig, track_alpha: f64) -> Result<StepSeries> {
    if cases.is_empty() {
        return Err(Error::InvalidConfig("empty case list".into()));
    }
    cfg.validate()?;
    loss.validate()?;
    let n_rows = cfg.steps + 1;
    let mut sums = vec![[0.0; N_METRICS]; n_rows];

    for (c, chunk) in cases.chunks(CHUNK).enumerate() {
        let rows: Vec<Vec<[f64; N_METRICS]>> = chunk
            .par_iter()
            .enumerate()
            .map(|(j, case)| {
                let mut rows = Vec::with_capacity(n_rows);
                regress_with(case, loss, cfg, |_, b, _, _| rows.push(metric_row(b, &case.gt, track_alpha)))
                    .map_err(|e| Error::Case {
                        case: c * CHUNK + j,
                        source: Box::new(e),
                    })?;
                Ok(rows)
            })
            .collect::<Result<_>>()?;
        for case_rows in &rows {
            for (acc, row) in sums.iter_mut().zip(case_rows) {
                for m in 0..N_METRICS {
                    acc[m] += row[m];
                }
            }
        }
    }

    let n = cases.len() as f64;
    for row in &mut sums {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok(StepSeries {
        n_cases: cases.len(),
        rows: sums,
    })
}

/// The controlled enlargement case: a 1:3 box at (0.5, 0.5) regressed onto a
/// 3:1 target at the origin, both of area 1/4.
pub fn enlargement_case() -> RegressionCase {
    let anchor = BBox::with_area(0.5, 0.5, 0.25, 1.0 / 3.0).expect("valid constant box");
    let gt = BBox::with_area(0.0, 0.0, 0.25, 3.0).expect("valid constant box");
    RegressionCase::new(anchor, gt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnlargementRun {
    pub loss: LossSpec,
    pub trajectory: Trajectory,
    pub r_diff: Vec<f64>,
}

impl EnlargementRun {
    pub fn max_r_diff(&self) -> f64 {
        self.r_diff.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_r_diff(&self) -> f64 {
        self.r_diff.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn enlargement_study(losses: &[LossSpec], cfg: &AdamConfig) -> Result<Vec<EnlargementRun>> {
    let case = enlargement_case();
    losses
        .iter()
        .map(|loss| {
            let trajectory = regress(&case, loss, cfg)?;
            let r_diff = trajectory.boxes.iter().map(|b| r_diff(b, &case.gt)).collect();
            Ok(EnlargementRun {
                loss: *loss,
                trajectory,
                r_diff,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub gt_area: f64,
    pub loss: LossSpec,
    pub series: StepSeries,
}

/// Rerun the batch protocol for each target area.
pub fn small_target_sweep(
    base: &ScenarioConfig,
    gt_areas: &[f64],
    losses: &[LossSpec],
    cfg: &AdamConfig,
) -> Result<Vec<SweepEntry>> {
    let mut out = Vec::with_capacity(gt_areas.len() * losses.len());
    for &gt_area in gt_areas {
        let scenario = ScenarioConfig {
            gt_area,
            ..base.clone()
        };
        let cases = generate_cases(&scenario)?;
        for loss in losses {
            let series = run_batch(&cases, loss, cfg, scenario.track_alpha)?;
            out.push(SweepEntry {
                gt_area,
                loss: *loss,
                series,
            });
        }
    }
    Ok(out)
}
