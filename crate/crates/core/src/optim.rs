//! Adam regression of a single box toward its target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lerp, BBox};
use crate::grad::{value_and_grad, Grad4};
use crate::losses::{eval, LossSpec};
use crate::BOX_EPS;

/// Coordinates the optimizer updates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameterization {
    /// `(cx, cy, w, h)`.
    #[default]
    CenterSize,
    /// `(x1, y1, x2, y2)`.
    Corners,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub steps: usize,
    pub parameterization: Parameterization,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            steps: 200,
            parameterization: Parameterization::CenterSize,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        Ok(())
    }
}

/// One regression problem: start box and target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionCase {
    pub anchor: BBox,
    pub gt: BBox,
    /// (anchor index, scale index, aspect index, target aspect index)
    pub ids: [u32; 4],
}

impl RegressionCase {
    pub fn new(anchor: BBox, gt: BBox) -> Self {
        RegressionCase {
            anchor,
            gt,
            ids: [0; 4],
        }
    }
}

/// Boxes visited by the optimizer, with the loss and gradient at each.
///
/// All three vectors have `steps + 1` entries; `boxes[0]` is the anchor and
/// `grads[t]` is the gradient that produced `boxes[t + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub boxes: Vec<BBox>,
    pub grads: Vec<Grad4>,
    pub losses: Vec<f64>,
}

impl Trajectory {
    pub fn final_box(&self) -> &BBox {
        self.boxes.last().expect("trajectory is never empty")
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    m: [f64; 4],
    v: [f64; 4],
}

/// Minimize `loss` over the anchor's `(cx, cy, w, h)` with bias-corrected
/// Adam. Width and height are floored at [`BOX_EPS`](crate::BOX_EPS) after
/// each step.
pub fn regress(case: &RegressionCase, loss: &LossSpec, cfg: &AdamConfig) -> Result<Trajectory> {
    let n = cfg.steps;
    let mut boxes = Vec::with_capacity(n + 1);
    let mut grads = Vec::with_capacity(n + 1);
    let mut losses = Vec::with_capacity(n + 1);
    regress_with(case, loss, cfg, |_, b, v, g| {
        boxes.push(*b);
        losses.push(v);
        grads.push(*g);
    })?;
    Ok(Trajectory {
        boxes,
        grads,
        losses,
    })
}

/// Like [`regress`] but hands each visited state to `visit(step, box, loss,
/// grad)` instead of storing it.
pub fn regress_with<F>(case: &RegressionCase, loss: &LossSpec, cfg: &AdamConfig, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &BBox, f64, &Grad4),
{
    let gt = case.gt;
    let corners = cfg.parameterization == Parameterization::Corners;
    let mut params = if corners {
        let c = case.anchor.corners();
        [c.x1, c.y1, c.x2, c.y2]
    } else {
        case.anchor.to_array()
    };
    let mut mom = Moments::default();
    let (mut b1t, mut b2t) = (1.0, 1.0);

    for step in 0..=cfg.steps {
        let pred = if corners {
            corner_box(params)
        } else {
            BBox::from_array(params)
        };
        let (value, grad) = value_and_grad(loss, &pred, &gt);
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "loss", step });
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite { what: "gradient", step });
        }
        visit(step, &pred, value, &grad);
        if step == cfg.steps {
            break;
        }

        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let g = if corners {
            // cx = (x1 + x2) / 2, w = x2 - x1
            [
                0.5 * grad.d_cx - grad.d_w,
                0.5 * grad.d_cy - grad.d_h,
                0.5 * grad.d_cx + grad.d_w,
                0.5 * grad.d_cy + grad.d_h,
            ]
        } else {
            grad.to_array()
        };
        for i in 0..4 {
            mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
            mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = mom.m[i] / (1.0 - b1t);
            let v_hat = mom.v[i] / (1.0 - b2t);
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        params = if corners {
            floor_corners(params)
        } else {
            BBox::from_array(params).floored().to_array()
        };
    }
    Ok(())
}

fn corner_box(p: [f64; 4]) -> BBox {
    BBox::from_array([0.5 * (p[0] + p[2]), 0.5 * (p[1] + p[3]), p[2] - p[0], p[3] - p[1]])
}

/// Re-center any collapsed side at width [`BOX_EPS`](crate::BOX_EPS).
fn floor_corners(mut p: [f64; 4]) -> [f64; 4] {
    for (lo, hi) in [(0, 2), (1, 3)] {
        if p[hi] - p[lo] < BOX_EPS {
            let mid = 0.5 * (p[lo] + p[hi]);
            p[lo] = mid - 0.5 * BOX_EPS;
            p[hi] = mid + 0.5 * BOX_EPS;
        }
    }
    p
}

/// Loss values along the straight path from `start` to `gt`, sampled at
/// `t / k` for `t = 0..=k`. Returns one series per loss, in input order.
pub fn landscape_sweep(start: &BBox, gt: &BBox, losses: &[LossSpec], k: usize) -> Result<Vec<Vec<f64>>> {
    if k < 2 {
        return Err(Error::InvalidConfig("landscape sweep needs k >= 2".into()));
    }
    let path: Vec<BBox> = (0..=k)
        .map(|t| if t == k { *gt } else { lerp(start, gt, t as f64 / k as f64) })
        .collect();
    Ok(losses
        .iter()
        .map(|spec| path.iter().map(|p| eval(spec, p, gt)).collect())
        .collect())
}
