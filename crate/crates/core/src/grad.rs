//! Loss gradients with respect to the predicted box.
//!
//! Three independent routes are provided: forward-mode dual numbers
//! ([`grad_autodiff`]), the closed-form IoU-loss gradient
//! ([`grad_analytic_iou`]) and central finite differences ([`grad_fd`]).

use serde::{Deserialize, Serialize};

use crate::dual::Dual4;
use crate::error::{Error, Result};
use crate::geometry::{iou, lerp, pair_terms, BBox};
use crate::losses::{loss_value, LossSpec};

pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Gradient of a loss with respect to `(cx, cy, w, h)` of the prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grad4 {
    pub d_cx: f64,
    pub d_cy: f64,
    pub d_w: f64,
    pub d_h: f64,
}

impl Grad4 {
    pub const ZERO: Grad4 = Grad4 {
        d_cx: 0.0,
        d_cy: 0.0,
        d_w: 0.0,
        d_h: 0.0,
    };

    pub fn from_array(a: [f64; 4]) -> Self {
        Grad4 {
            d_cx: a[0],
            d_cy: a[1],
            d_w: a[2],
            d_h: a[3],
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.d_cx, self.d_cy, self.d_w, self.d_h]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.to_array().iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Grad4) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, s: f64) -> Grad4 {
        Grad4::from_array(self.to_array().map(|v| v * s))
    }

    pub fn add(&self, other: &Grad4) -> Grad4 {
        let b = other.to_array();
        let a = self.to_array();
        Grad4::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

fn seed(pred: &BBox) -> BBox<Dual4> {
    BBox {
        cx: Dual4::variable(pred.cx, 0),
        cy: Dual4::variable(pred.cy, 1),
        w: Dual4::variable(pred.w, 2),
        h: Dual4::variable(pred.h, 3),
    }
}

/// Loss value and forward-mode gradient.
///
/// Never fails: at coinciding edges the min/max tie rule of
/// [`Scalar`](crate::dual::Scalar) picks the mean of the one-sided derivatives.
/// This is what the optimizer uses.
pub fn value_and_grad(spec: &LossSpec, pred: &BBox, gt: &BBox) -> (f64, Grad4) {
    let out = loss_value(spec, &seed(pred), &gt.lift::<Dual4>());
    (out.value, Grad4::from_array(out.partials))
}

/// Forward-mode gradient, rejecting configurations where the loss has a kink
/// because a predicted (or interpolated) edge coincides with a target edge.
pub fn grad_autodiff(spec: &LossSpec, pred: &BBox, gt: &BBox) -> Result<Grad4> {
    check_differentiable(spec, pred, gt)?;
    Ok(value_and_grad(spec, pred, gt).1)
}

fn shared_edge(a: &BBox, b: &BBox) -> Option<String> {
    let (ca, cb) = (a.corners(), b.corners());
    for (axis, pa, pb) in [
        ("x", [ca.x1, ca.x2], [cb.x1, cb.x2]),
        ("y", [ca.y1, ca.y2], [cb.y1, cb.y2]),
    ] {
        for ea in pa {
            if pb.contains(&ea) {
                return Some(format!("{axis} edge {ea} shared"));
            }
        }
    }
    None
}

/// Err if `pred` and `gt` share an edge coordinate. For interpolation losses
/// the interpolated box is checked as well.
pub fn check_differentiable(spec: &LossSpec, pred: &BBox, gt: &BBox) -> Result<()> {
    if let Some(why) = shared_edge(pred, gt) {
        return Err(Error::NonDifferentiable(why));
    }
    let alpha = match *spec {
        LossSpec::Interp { alpha } => Some(alpha),
        LossSpec::DynInterp { low, high } => Some((1.0 - iou(pred, gt)).clamp(low, high)),
        _ => None,
    };
    if let Some(alpha) = alpha {
        if let Some(why) = shared_edge(&lerp(pred, gt, alpha), gt) {
            return Err(Error::NonDifferentiable(format!("interpolated box: {why}")));
        }
    }
    Ok(())
}

/// Derivatives of the overlap length along one axis with respect to the
/// predicted center and side length.
fn overlap_partials(p1: f64, p2: f64, g1: f64, g2: f64) -> (f64, f64, f64) {
    let len = p2.min(g2) - p1.max(g1);
    if len <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let hi = if p2 < g2 { 1.0 } else { 0.0 };
    let lo = if p1 > g1 { 1.0 } else { 0.0 };
    (len, hi - lo, 0.5 * (hi + lo))
}

/// Closed-form gradient of `1 - I/U`:
///
/// ```text
/// ∂L/∂x = -(S_g + S)/U² · ∂I/∂x
/// ∂L/∂w = -(S_g + S)/U² · ∂I/∂w + I/U² · ∂S/∂w,   ∂S/∂w = h
/// ```
/// and likewise for `y` and `h`.
pub fn grad_analytic_iou(pred: &BBox, gt: &BBox) -> Result<Grad4> {
    check_differentiable(&LossSpec::Iou, pred, gt)?;
    let (p, g) = (pred.corners(), gt.corners());
    let (iw, iw_x, iw_w) = overlap_partials(p.x1, p.x2, g.x1, g.x2);
    let (ih, ih_y, ih_h) = overlap_partials(p.y1, p.y2, g.y1, g.y2);
    let inter = iw * ih;
    let (s, s_g) = (pred.area(), gt.area());
    let union = s + s_g - inter;
    let u2 = union * union;
    let k = -(s_g + s) / u2;

    let di_dx = iw_x * ih;
    let di_dy = iw * ih_y;
    let di_dw = iw_w * ih;
    let di_dh = iw * ih_h;
    Ok(Grad4 {
        d_cx: k * di_dx,
        d_cy: k * di_dy,
        d_w: k * di_dw + inter / u2 * pred.h,
        d_h: k * di_dh + inter / u2 * pred.w,
    })
}

/// The loss as a plain function of the prediction, with any detached
/// subterm held at its value at `base`.
fn frozen_loss(spec: &LossSpec, base: &BBox, gt: &BBox) -> Box<dyn Fn(&BBox) -> f64> {
    let gt = *gt;
    match *spec {
        LossSpec::DynInterp { low, high } => {
            let alpha = (1.0 - iou(base, &gt)).clamp(low, high);
            let frozen = LossSpec::Interp { alpha };
            Box::new(move |p| loss_value(&frozen, p, &gt))
        }
        LossSpec::Wiou => {
            let diag2 = pair_terms(base, &gt).diag2;
            Box::new(move |p| {
                let t = pair_terms(p, &gt);
                (t.center_d2 / diag2).exp() * (1.0 - t.iou())
            })
        }
        spec => Box::new(move |p| loss_value(&spec, p, &gt)),
    }
}

/// Central-difference gradient with step `step` on each parameter.
///
/// Detached subterms (the dynamic coefficient, WIoU's enclosing diagonal) are
/// held fixed at their value at `pred`, matching what autodiff differentiates.
pub fn grad_fd(spec: &LossSpec, pred: &BBox, gt: &BBox, step: f64) -> Grad4 {
    let f = frozen_loss(spec, pred, gt);
    let base = pred.to_array();
    Grad4::from_array(std::array::from_fn(|i| {
        let mut plus = base;
        let mut minus = base;
        plus[i] += step;
        minus[i] -= step;
        (f(&BBox::from_array(plus)) - f(&BBox::from_array(minus))) / (2.0 * step)
    }))
}

/// Agreement between the gradient engines at one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parity {
    /// Max abs difference between closed form and autodiff (IoU only).
    pub analytic_abs: Option<f64>,
    /// Max abs difference between autodiff and central differences.
    pub fd_abs: f64,
    /// Max over parameters of `|a - f| / max(rel·|a|, abs_floor)`; at most 1
    /// when the pair is within tolerance.
    pub fd_ratio: f64,
    pub autodiff: Grad4,
    pub fd: Grad4,
}

/// Compare autodiff against central differences (and the closed form for
/// the IoU loss) at one pair.
pub fn parity(spec: &LossSpec, pred: &BBox, gt: &BBox, step: f64, rel: f64, abs_floor: f64) -> Result<Parity> {
    let ad = grad_autodiff(spec, pred, gt)?;
    let analytic_abs = match spec {
        LossSpec::Iou => Some(grad_analytic_iou(pred, gt)?.max_abs_diff(&ad)),
        _ => None,
    };
    let fd = grad_fd(spec, pred, gt, step);
    let (a, f) = (ad.to_array(), fd.to_array());
    let fd_ratio = (0..4)
        .map(|i| (a[i] - f[i]).abs() / (rel * a[i].abs()).max(abs_floor))
        .fold(0.0, f64::max);
    Ok(Parity {
        analytic_abs,
        fd_abs: ad.max_abs_diff(&fd),
        fd_ratio,
        autodiff: ad,
        fd,
    })
}
