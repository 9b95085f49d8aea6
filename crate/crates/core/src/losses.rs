//! IoU-family bounding-box regression losses.
//!
//! Each loss is implemented once, generically over [`Scalar`], so the same
//! code yields plain values and forward-mode gradients.
//!
//! Conventions where the published formulas leave room:
//!
//! * DIoU adds `d²/D²` to the IoU loss (the penalty increases the loss).
//! * CIoU's aspect term `α·v` is active only when `IoU >= 0.5`.
//! * EIoU carries the DIoU center term in addition to its width/height terms.
//! * WIoU treats the enclosing-box diagonal as a constant when differentiating.
//! * SIoU's distance cost uses `ρx = (Δcx / W_c)²`, `ρy = (Δcy / H_c)²`.
//! * PIoU's edge discrepancies are absolute corner differences.
//! * Dynamic InterpIoU's coefficient is detached from the gradient.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::geometry::{edge_gaps, iou_generic, lerp, pair_terms, BBox, PairTerms};

pub const DEFAULT_ALPHA: f64 = 0.98;
pub const DEFAULT_THETA: f64 = 4.0;
/// Upper limit for the dynamic coefficient's clamp range.
pub const MAX_CLAMP_HIGH: f64 = 0.99;

/// Loss family without hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    L1,
    Iou,
    Giou,
    Diou,
    Ciou,
    Eiou,
    Wiou,
    Siou,
    Piou,
    Interp,
    DynInterp,
}

impl LossKind {
    pub const ALL: [LossKind; 11] = [
        LossKind::L1,
        LossKind::Iou,
        LossKind::Giou,
        LossKind::Diou,
        LossKind::Ciou,
        LossKind::Eiou,
        LossKind::Wiou,
        LossKind::Siou,
        LossKind::Piou,
        LossKind::Interp,
        LossKind::DynInterp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::Iou => "iou",
            LossKind::Giou => "giou",
            LossKind::Diou => "diou",
            LossKind::Ciou => "ciou",
            LossKind::Eiou => "eiou",
            LossKind::Wiou => "wiou",
            LossKind::Siou => "siou",
            LossKind::Piou => "piou",
            LossKind::Interp => "interpiou",
            LossKind::DynInterp => "dinterpiou",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::InvalidLossSpec(format!("unknown loss kind `{s}`")))
    }

    /// The kind with its default hyperparameters.
    pub fn default_spec(self) -> LossSpec {
        match self {
            LossKind::L1 => LossSpec::L1,
            LossKind::Iou => LossSpec::Iou,
            LossKind::Giou => LossSpec::Giou,
            LossKind::Diou => LossSpec::Diou,
            LossKind::Ciou => LossSpec::Ciou,
            LossKind::Eiou => LossSpec::Eiou,
            LossKind::Wiou => LossSpec::Wiou,
            LossKind::Siou => LossSpec::Siou {
                theta: DEFAULT_THETA,
            },
            LossKind::Piou => LossSpec::Piou,
            LossKind::Interp => LossSpec::Interp {
                alpha: DEFAULT_ALPHA,
            },
            LossKind::DynInterp => LossSpec::DynInterp {
                low: 0.5,
                high: MAX_CLAMP_HIGH,
            },
        }
    }
}

/// A loss family together with its hyperparameters.
///
/// Build through the constructors, [`FromStr`] or serde; all of them validate.
/// The text form is `name[:key=value[,key=value]]`, e.g. `interpiou:alpha=0.98`
/// or `dinterpiou:low=0.9,high=0.99`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LossSpec {
    L1,
    Iou,
    Giou,
    Diou,
    Ciou,
    Eiou,
    Wiou,
    Siou { theta: f64 },
    Piou,
    Interp { alpha: f64 },
    DynInterp { low: f64, high: f64 },
}

impl LossSpec {
    pub fn siou(theta: f64) -> Result<Self> {
        let s = LossSpec::Siou { theta };
        s.validate()?;
        Ok(s)
    }

    pub fn interp(alpha: f64) -> Result<Self> {
        let s = LossSpec::Interp { alpha };
        s.validate()?;
        Ok(s)
    }

    pub fn dyn_interp(low: f64, high: f64) -> Result<Self> {
        let s = LossSpec::DynInterp { low, high };
        s.validate()?;
        Ok(s)
    }

    pub fn kind(&self) -> LossKind {
        match self {
            LossSpec::L1 => LossKind::L1,
            LossSpec::Iou => LossKind::Iou,
            LossSpec::Giou => LossKind::Giou,
            LossSpec::Diou => LossKind::Diou,
            LossSpec::Ciou => LossKind::Ciou,
            LossSpec::Eiou => LossKind::Eiou,
            LossSpec::Wiou => LossKind::Wiou,
            LossSpec::Siou { .. } => LossKind::Siou,
            LossSpec::Piou => LossKind::Piou,
            LossSpec::Interp { .. } => LossKind::Interp,
            LossSpec::DynInterp { .. } => LossKind::DynInterp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Siou { theta } if !(2.0..=4.0).contains(&theta) => Err(
                Error::InvalidLossSpec(format!("siou theta {theta} outside [2, 4]")),
            ),
            LossSpec::Interp { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                Err(Error::InvalidAlpha(alpha))
            }
            LossSpec::DynInterp { low, high } => check_clamp(low, high),
            _ => Ok(()),
        }
    }

    /// True for the losses built only from IoU terms.
    pub fn is_interp(&self) -> bool {
        matches!(self, LossSpec::Interp { .. } | LossSpec::DynInterp { .. })
    }

    /// Short identifier safe for file names and CSV headers.
    pub fn label(&self) -> String {
        match *self {
            LossSpec::Siou { theta } if theta != DEFAULT_THETA => format!("siou_t{theta}"),
            LossSpec::Interp { alpha } => format!("interpiou_a{alpha}"),
            LossSpec::DynInterp { low, high } => format!("dinterpiou_{low}_{high}"),
            _ => self.kind().name().to_string(),
        }
    }

    /// Space-separated `key=value` form, e.g. `kind=interpiou alpha=0.98`.
    pub fn to_kv(&self) -> String {
        let mut out = format!("kind={}", self.kind().name());
        for (k, v) in self.params() {
            out.push_str(&format!(" {k}={v}"));
        }
        out
    }

    pub fn from_kv(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut params = Vec::new();
        for tok in s.split_whitespace() {
            let (k, v) = split_pair(tok)?;
            if k == "kind" {
                kind = Some(LossKind::from_name(v)?);
            } else {
                params.push((k, v));
            }
        }
        let kind = kind.ok_or_else(|| Error::InvalidLossSpec(format!("missing kind in `{s}`")))?;
        build_spec(kind, &params)
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            LossSpec::Siou { theta } => vec![("theta", theta)],
            LossSpec::Interp { alpha } => vec![("alpha", alpha)],
            LossSpec::DynInterp { low, high } => vec![("low", low), ("high", high)],
            _ => vec![],
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind().name())?;
        let params = self.params();
        for (i, (k, v)) in params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with("kind=") {
            return LossSpec::from_kv(s);
        }
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let kind = LossKind::from_name(name)?;
        let params = match rest {
            Some(r) => r.split(',').map(split_pair).collect::<Result<Vec<_>>>()?,
            None => vec![],
        };
        build_spec(kind, &params)
    }
}

impl TryFrom<String> for LossSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LossSpec> for String {
    fn from(s: LossSpec) -> String {
        s.to_string()
    }
}

fn split_pair(tok: &str) -> Result<(&str, &str)> {
    tok.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::InvalidLossSpec(format!("expected key=value, got `{tok}`")))
}

fn build_spec(kind: LossKind, params: &[(&str, &str)]) -> Result<LossSpec> {
    let mut spec = kind.default_spec();
    for &(k, v) in params {
        let x: f64 = v
            .parse()
            .map_err(|_| Error::InvalidLossSpec(format!("bad number `{v}` for `{k}`")))?;
        match (&mut spec, k) {
            (LossSpec::Siou { theta }, "theta") => *theta = x,
            (LossSpec::Interp { alpha }, "alpha") => *alpha = x,
            (LossSpec::DynInterp { low, .. }, "low") => *low = x,
            (LossSpec::DynInterp { high, .. }, "high") => *high = x,
            _ => {
                return Err(Error::InvalidLossSpec(format!(
                    "`{}` takes no parameter `{k}`",
                    kind.name()
                )))
            }
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Parse a comma-separated loss list such as
/// `iou,giou,interpiou:alpha=0.98,dinterpiou:low=0.9,high=0.99`.
///
/// A bare `key=value` token continues the parameters of the preceding spec.
pub fn parse_loss_list(s: &str) -> Result<Vec<LossSpec>> {
    let mut groups: Vec<String> = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if tok.contains('=') && !tok.contains(':') {
            let last = groups
                .last_mut()
                .ok_or_else(|| Error::InvalidLossSpec(format!("dangling parameter `{tok}`")))?;
            last.push(',');
            last.push_str(tok);
        } else {
            groups.push(tok.to_string());
        }
    }
    if groups.is_empty() {
        return Err(Error::InvalidLossSpec("empty loss list".into()));
    }
    groups.iter().map(|g| g.parse()).collect()
}

fn check_clamp(low: f64, high: f64) -> Result<()> {
    if low >= 0.0 && low <= high && high <= MAX_CLAMP_HIGH {
        Ok(())
    } else {
        Err(Error::InvalidClamp { low, high })
    }
}

// Penalty terms, shared by `eval` and `breakdown`.

#[inline]
fn giou_penalty<T: Scalar>(t: &PairTerms<T>) -> T {
    let c = t.enclose_w * t.enclose_h;
    // Round-off can leave C - U slightly negative when one box encloses the other.
    ((c - t.union) / c).max_s(T::cst(0.0))
}

#[inline]
fn diou_penalty<T: Scalar>(t: &PairTerms<T>) -> T {
    t.center_d2 / t.diag2
}

#[inline]
fn ciou_penalty<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>, iou: T) -> T {
    if iou.value() < 0.5 {
        return T::cst(0.0);
    }
    let v = T::cst(4.0 / (PI * PI)) * ((gt.w / gt.h).atan() - (pred.w / pred.h).atan()).square();
    let denom = T::cst(1.0) - iou + v;
    if denom.value() == 0.0 {
        return T::cst(0.0);
    }
    v / denom * v
}

#[inline]
fn eiou_wh_penalty<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>, t: &PairTerms<T>) -> T {
    (pred.w - gt.w).square() / t.enclose_w.square() + (pred.h - gt.h).square() / t.enclose_h.square()
}

#[inline]
fn wiou_factor<T: Scalar>(t: &PairTerms<T>) -> T {
    (t.center_d2 / t.diag2.detach()).exp()
}

/// Angle cost of SIoU, `1 - 2 sin²(x - π/4)` with `x` the smaller angle between
/// the center-to-center segment and the axes.
#[inline]
fn siou_angle<T: Scalar>(dx: T, dy: T) -> T {
    if dx.value() == 0.0 && dy.value() == 0.0 {
        return T::cst(1.0);
    }
    let (ax, ay) = (dx.abs(), dy.abs());
    let x = ay.atan2(ax).min_s(ax.atan2(ay));
    T::cst(1.0) - T::cst(2.0) * (x - T::cst(FRAC_PI_4)).sin().square()
}

/// Returns `(distance cost Δ, shape cost Ω)`.
#[inline]
fn siou_costs<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>, t: &PairTerms<T>, theta: f64) -> (T, T) {
    let one = T::cst(1.0);
    let dx = gt.cx - pred.cx;
    let dy = gt.cy - pred.cy;
    let gamma = T::cst(2.0) - siou_angle(dx, dy);
    let rho_x = (dx / t.enclose_w).square();
    let rho_y = (dy / t.enclose_h).square();
    let dist = T::cst(2.0) - (-(gamma * rho_x)).exp() - (-(gamma * rho_y)).exp();
    let omega_w = (pred.w - gt.w).abs() / pred.w.max_s(gt.w);
    let omega_h = (pred.h - gt.h).abs() / pred.h.max_s(gt.h);
    let shape = (one - (-omega_w).exp()).powf(theta) + (one - (-omega_h).exp()).powf(theta);
    (dist, shape)
}

#[inline]
fn siou_penalty<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>, t: &PairTerms<T>, theta: f64) -> T {
    let (dist, shape) = siou_costs(pred, gt, t, theta);
    (dist + shape) * T::cst(0.5)
}

#[inline]
fn piou_penalty<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>) -> T {
    let dw = (pred.x1() - gt.x1()).abs() + (pred.x2() - gt.x2()).abs();
    let dh = (pred.y1() - gt.y1()).abs() + (pred.y2() - gt.y2()).abs();
    let p = (dw / gt.w + dh / gt.h) * T::cst(0.25);
    T::cst(1.0) - (-p.square()).exp()
}

#[inline]
fn l1_distance<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>) -> T {
    (pred.cx - gt.cx).abs() + (pred.cy - gt.cy).abs() + (pred.w - gt.w).abs() + (pred.h - gt.h).abs()
}

/// IoU loss of the interpolated box against the target.
#[inline]
fn interp_term<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>, alpha: T) -> T {
    T::cst(1.0) - iou_generic(&lerp(pred, gt, alpha), gt)
}

pub(crate) fn loss_value<T: Scalar>(spec: &LossSpec, pred: &BBox<T>, gt: &BBox<T>) -> T {
    let one = T::cst(1.0);
    match *spec {
        LossSpec::L1 => l1_distance(pred, gt),
        LossSpec::Iou => one - iou_generic(pred, gt),
        LossSpec::Interp { alpha } => one - iou_generic(pred, gt) + interp_term(pred, gt, T::cst(alpha)),
        LossSpec::DynInterp { low, high } => {
            let iou = iou_generic(pred, gt);
            let alpha = (one - iou).clamp_s(low, high).detach();
            one - iou + interp_term(pred, gt, alpha)
        }
        LossSpec::Piou => one - iou_generic(pred, gt) + piou_penalty(pred, gt),
        _ => {
            let t = pair_terms(pred, gt);
            let iou = t.iou();
            let l_iou = one - iou;
            match *spec {
                LossSpec::Giou => l_iou + giou_penalty(&t),
                LossSpec::Diou => l_iou + diou_penalty(&t),
                LossSpec::Ciou => l_iou + diou_penalty(&t) + ciou_penalty(pred, gt, iou),
                LossSpec::Eiou => l_iou + diou_penalty(&t) + eiou_wh_penalty(pred, gt, &t),
                LossSpec::Wiou => wiou_factor(&t) * l_iou,
                LossSpec::Siou { theta } => l_iou + siou_penalty(pred, gt, &t, theta),
                _ => unreachable!(),
            }
        }
    }
}

/// Scalar loss value.
pub fn eval(spec: &LossSpec, pred: &BBox, gt: &BBox) -> f64 {
    loss_value(spec, pred, gt)
}

/// Every penalty term evaluated at one pair, independent of the loss being
/// optimized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBreakdown {
    pub l_iou: f64,
    pub l1: f64,
    pub r_giou: f64,
    pub r_diou_dist: f64,
    pub r_ciou: f64,
    pub r_eiou_wh: f64,
    /// Multiplicative WIoU factor `exp(d²/D²)`.
    pub r_wiou: f64,
    pub r_siou: f64,
    pub r_piou: f64,
    /// IoU loss of the interpolated box at the tracking coefficient.
    pub r_interp: f64,
}

impl PenaltyBreakdown {
    pub fn terms(&self) -> [(&'static str, f64); 10] {
        [
            ("l_iou", self.l_iou),
            ("l1", self.l1),
            ("r_giou", self.r_giou),
            ("r_diou_dist", self.r_diou_dist),
            ("r_ciou", self.r_ciou),
            ("r_eiou_wh", self.r_eiou_wh),
            ("r_wiou", self.r_wiou),
            ("r_siou", self.r_siou),
            ("r_piou", self.r_piou),
            ("r_interp", self.r_interp),
        ]
    }

    /// Recompose the total loss of `kind` from the tracked terms.
    ///
    /// SIoU is composed with the default θ and InterpIoU with the tracking
    /// coefficient. Dynamic InterpIoU depends on a per-pair coefficient and
    /// yields `None`.
    pub fn compose(&self, kind: LossKind) -> Option<f64> {
        let l = self.l_iou;
        Some(match kind {
            LossKind::L1 => self.l1,
            LossKind::Iou => l,
            LossKind::Giou => l + self.r_giou,
            LossKind::Diou => l + self.r_diou_dist,
            LossKind::Ciou => l + self.r_diou_dist + self.r_ciou,
            LossKind::Eiou => l + self.r_diou_dist + self.r_eiou_wh,
            LossKind::Wiou => self.r_wiou * l,
            LossKind::Siou => l + self.r_siou,
            LossKind::Piou => l + self.r_piou,
            LossKind::Interp => l + self.r_interp,
            LossKind::DynInterp => return None,
        })
    }
}

/// Evaluate every penalty term at `(pred, gt)`; `alpha` is the coefficient
/// used for the interpolation term.
pub fn breakdown(pred: &BBox, gt: &BBox, alpha: f64) -> PenaltyBreakdown {
    let t = pair_terms(pred, gt);
    let iou = t.iou();
    PenaltyBreakdown {
        l_iou: 1.0 - iou,
        l1: l1_distance(pred, gt),
        r_giou: giou_penalty(&t),
        r_diou_dist: diou_penalty(&t),
        r_ciou: ciou_penalty(pred, gt, iou),
        r_eiou_wh: eiou_wh_penalty(pred, gt, &t),
        r_wiou: wiou_factor(&t),
        r_siou: siou_penalty(pred, gt, &t, DEFAULT_THETA),
        r_piou: piou_penalty(pred, gt),
        r_interp: interp_term(pred, gt, alpha),
    }
}

/// SIoU distance and shape costs `(Δ, Ω)` with the given θ.
pub fn siou_components(pred: &BBox, gt: &BBox, theta: f64) -> (f64, f64) {
    siou_costs(pred, gt, &pair_terms(pred, gt), theta)
}

/// Smallest interpolation coefficient for which the interpolated box still
/// overlaps the target: `max_i max(d_i / (d_i + l_i^gt), 0)` over both axes.
///
/// Any `alpha` strictly above the bound gives a positive-IoU interpolated box.
pub fn min_alpha(pred: &BBox, gt: &BBox) -> f64 {
    let gaps = edge_gaps(pred, gt);
    let sides = [gt.w, gt.h];
    gaps.iter()
        .zip(sides)
        .map(|(&d, l)| if d > 0.0 { d / (d + l) } else { 0.0 })
        .fold(0.0, f64::max)
}

/// Axis (0 = x, 1 = y) that determines [`min_alpha`], if the bound is positive.
pub fn binding_axis(pred: &BBox, gt: &BBox) -> Option<usize> {
    let gaps = edge_gaps(pred, gt);
    let sides = [gt.w, gt.h];
    let b: Vec<f64> = (0..2)
        .map(|i| if gaps[i] > 0.0 { gaps[i] / (gaps[i] + sides[i]) } else { 0.0 })
        .collect();
    if b[0] <= 0.0 && b[1] <= 0.0 {
        None
    } else if b[0] >= b[1] {
        Some(0)
    } else {
        Some(1)
    }
}

/// Overlap check just above and just below [`min_alpha`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundProbe {
    pub bound: f64,
    pub axis: Option<usize>,
    /// IoU of the interpolated box at `min(bound + delta, 1)`.
    pub iou_above: f64,
    /// IoU at `bound - delta`; `None` unless `bound > delta`.
    pub iou_below: Option<f64>,
    /// Edge gap along the binding axis at `bound - delta`.
    pub gap_below: Option<f64>,
}

impl BoundProbe {
    /// Overlap above the bound and separation on the binding axis below it.
    pub fn holds(&self) -> bool {
        self.iou_above > 0.0 && self.gap_below.is_none_or(|g| g > 0.0)
    }
}

pub fn probe_alpha_bound(pred: &BBox, gt: &BBox, delta: f64) -> BoundProbe {
    let bound = min_alpha(pred, gt);
    let axis = binding_axis(pred, gt);
    let iou_above = iou_generic(&lerp(pred, gt, (bound + delta).min(1.0)), gt);
    let (iou_below, gap_below) = match axis {
        Some(ax) if bound > delta => {
            let b = lerp(pred, gt, bound - delta);
            (Some(iou_generic(&b, gt)), Some(edge_gaps(&b, gt)[ax]))
        }
        _ => (None, None),
    };
    BoundProbe {
        bound,
        axis,
        iou_above,
        iou_below,
        gap_below,
    }
}

/// `clamp(1 - IoU(pred, gt), low, high)`.
pub fn dynamic_alpha(pred: &BBox, gt: &BBox, low: f64, high: f64) -> Result<f64> {
    check_clamp(low, high)?;
    Ok((1.0 - iou_generic(pred, gt)).clamp(low, high))
}
