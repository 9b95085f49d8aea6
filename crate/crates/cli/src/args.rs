use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use boxreg::{BBox, LossSpec, Parameterization, ScaleMode};

#[derive(Debug, Parser)]
#[command(name = "boxreg", version, about = "Bounding-box regression loss simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regress the synthetic scenario under each loss and write mean curves.
    Simulate(SimulateArgs),
    /// Track the controlled 1:3 to 3:1 case and its enlargement ratio.
    Enlargement(CommonArgs),
    /// Loss values along the straight path from a start box to its target.
    Landscape(LandscapeArgs),
    /// Compare closed-form, forward-mode and finite-difference gradients.
    Gradcheck(GradcheckArgs),
    /// Check overlap just above and below the minimum interpolation weight.
    AlphaBound(AlphaBoundArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Enlargement(_) => "enlargement",
            Command::Landscape(_) => "landscape",
            Command::Gradcheck(_) => "gradcheck",
            Command::AlphaBound(_) => "alpha-bound",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) => &a.common,
            Command::Enlargement(a) => a,
            Command::Landscape(a) => &a.common,
            Command::Gradcheck(a) => &a.common,
            Command::AlphaBound(a) => &a.common,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON config file, or a manifest.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH", default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub anchors: Option<usize>,
    /// Target area; fractions such as `1/64` are accepted.
    #[arg(long, value_name = "F", value_parser = parse_fraction)]
    pub gt_area: Option<f64>,
    /// e.g. `iou,giou,interpiou:alpha=0.98,dinterpiou:low=0.9,high=0.99`
    #[arg(long, value_name = "LIST", value_parser = parse_losses)]
    pub losses: Option<LossList>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    #[arg(long, value_enum)]
    pub parameterization: Option<ParamArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParamArg {
    CenterSize,
    Corners,
}

impl From<ParamArg> for Parameterization {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::CenterSize => Parameterization::CenterSize,
            ParamArg::Corners => Parameterization::Corners,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Area,
    Side,
}

impl From<ScaleArg> for ScaleMode {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Area => ScaleMode::Area,
            ScaleArg::Side => ScaleMode::Side,
        }
    }
}

#[derive(Clone, Debug, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pair predictions with the square target only.
    #[arg(long)]
    pub single_gt: bool,
    /// Read `scales` as areas (default) or side lengths.
    #[arg(long, value_enum)]
    pub scale_mode: Option<ScaleArg>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Static interpolation weights, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
    pub alphas: Option<Vec<f64>>,
    /// Dynamic clamps as `low:high`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_clamp)]
    pub clamps: Option<Vec<[f64; 2]>>,
    /// Number of points on the path, endpoints included.
    #[arg(long)]
    pub points: Option<usize>,
    /// Start box as `cx,cy,w,h`.
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    pub start: Option<BBox>,
    /// Target box as `cx,cy,w,h`.
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    pub gt: Option<BBox>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct AlphaBoundArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Offset from the bound at which overlap is probed.
    #[arg(long)]
    pub delta: Option<f64>,
}

/// A decimal or an exact `p/q` fraction.
pub fn parse_fraction(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|e| format!("bad numerator in {s:?}: {e}"))?;
            let d: f64 = d.trim().parse().map_err(|e| format!("bad denominator in {s:?}: {e}"))?;
            if d == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            n / d
        }
        None => s.parse().map_err(|e| format!("bad number {s:?}: {e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

/// A parsed `--losses` value.
#[derive(Clone, Debug, PartialEq)]
pub struct LossList(pub Vec<LossSpec>);

fn parse_losses(s: &str) -> Result<LossList, String> {
    boxreg::parse_loss_list(s).map(LossList).map_err(|e| e.to_string())
}

fn parse_clamp(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("clamp {s:?} is not low:high"))?;
    Ok([parse_fraction(lo)?, parse_fraction(hi)?])
}

fn parse_box(s: &str) -> Result<BBox, String> {
    let v: Vec<f64> = s.split(',').map(parse_fraction).collect::<Result<_, _>>()?;
    match v[..] {
        [cx, cy, w, h] => BBox::new(cx, cy, w, h).map_err(|e| e.to_string()),
        _ => Err(format!("box {s:?} needs four values cx,cy,w,h")),
    }
}
