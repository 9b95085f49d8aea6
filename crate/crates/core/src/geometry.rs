//! Axis-aligned box arithmetic in center-size form.

use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{Error, Result};

/// Smallest width or height a box may take after an update.
pub const BOX_EPS: f64 = 1e-8;

/// Axis-aligned box `(cx, cy, w, h)` in normalized image units.
///
/// The scalar parameter lets the same box flow through the loss code as plain
/// numbers or as dual numbers carrying gradients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox<T = f64> {
    pub cx: T,
    pub cy: T,
    pub w: T,
    pub h: T,
}

/// Corner form `(x1, y1, x2, y2)` with `x1 < x2`, `y1 < y2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corners {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox<f64> {
    /// Validated constructor. Sizes must be finite and strictly positive.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = BBox { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cx.is_finite() && self.cy.is_finite() && self.w.is_finite() && self.h.is_finite())
        {
            return Err(Error::InvalidBox(format!("non-finite parameter in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::InvalidBox(format!("non-positive size in {self:?}")));
        }
        Ok(())
    }

    /// Box of the given area and aspect ratio (`w / h`) centred at `(cx, cy)`.
    pub fn with_area(cx: f64, cy: f64, area: f64, aspect: f64) -> Result<Self> {
        BBox::new(cx, cy, (area * aspect).sqrt(), (area / aspect).sqrt())
    }

    pub fn from_corners(c: Corners) -> Result<Self> {
        BBox::new(
            0.5 * (c.x1 + c.x2),
            0.5 * (c.y1 + c.y2),
            c.x2 - c.x1,
            c.y2 - c.y1,
        )
    }

    pub fn corners(&self) -> Corners {
        Corners {
            x1: self.x1(),
            y1: self.y1(),
            x2: self.x2(),
            y2: self.y2(),
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        BBox {
            cx: p[0],
            cy: p[1],
            w: p[2],
            h: p[3],
        }
    }

    /// Clamp width and height to at least [`BOX_EPS`].
    pub fn floored(mut self) -> Self {
        self.w = self.w.max(BOX_EPS);
        self.h = self.h.max(BOX_EPS);
        self
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BBox {
            cx: self.cx + dx,
            cy: self.cy + dy,
            ..*self
        }
    }

    /// Scale about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        BBox {
            cx: self.cx * s,
            cy: self.cy * s,
            w: self.w * s,
            h: self.h * s,
        }
    }

    /// Lift into another scalar type as constants.
    pub fn lift<T: Scalar>(&self) -> BBox<T> {
        BBox {
            cx: T::cst(self.cx),
            cy: T::cst(self.cy),
            w: T::cst(self.w),
            h: T::cst(self.h),
        }
    }
}

impl<T: Scalar> BBox<T> {
    #[inline]
    pub fn x1(&self) -> T {
        self.cx - self.w * T::cst(0.5)
    }
    #[inline]
    pub fn x2(&self) -> T {
        self.cx + self.w * T::cst(0.5)
    }
    #[inline]
    pub fn y1(&self) -> T {
        self.cy - self.h * T::cst(0.5)
    }
    #[inline]
    pub fn y2(&self) -> T {
        self.cy + self.h * T::cst(0.5)
    }
    #[inline]
    pub fn area(&self) -> T {
        self.w * self.h
    }

    pub fn values(&self) -> BBox<f64> {
        BBox {
            cx: self.cx.value(),
            cy: self.cy.value(),
            w: self.w.value(),
            h: self.h.value(),
        }
    }
}

pub fn area(b: &BBox) -> f64 {
    b.area()
}

/// Intermediate pairwise quantities shared by all losses.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairTerms<T> {
    pub inter: T,
    pub union: T,
    pub enclose_w: T,
    pub enclose_h: T,
    /// Squared center distance.
    pub center_d2: T,
    /// Squared enclosing-box diagonal.
    pub diag2: T,
}

impl<T: Scalar> PairTerms<T> {
    pub fn iou(&self) -> T {
        self.inter / self.union
    }
}

/// Area from the corner extents, so that a box intersected with itself gives
/// exactly its own area.
#[inline]
fn corner_area<T: Scalar>(b: &BBox<T>) -> T {
    (b.x2() - b.x1()) * (b.y2() - b.y1())
}

#[inline]
pub(crate) fn intersection<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let zero = T::cst(0.0);
    let iw = (a.x2().min_s(b.x2()) - a.x1().max_s(b.x1())).max_s(zero);
    let ih = (a.y2().min_s(b.y2()) - a.y1().max_s(b.y1())).max_s(zero);
    iw * ih
}

#[inline]
pub(crate) fn pair_terms<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> PairTerms<T> {
    let inter = intersection(a, b);
    let union = corner_area(a) + corner_area(b) - inter;
    let enclose_w = a.x2().max_s(b.x2()) - a.x1().min_s(b.x1());
    let enclose_h = a.y2().max_s(b.y2()) - a.y1().min_s(b.y1());
    let center_d2 = (a.cx - b.cx).square() + (a.cy - b.cy).square();
    let diag2 = enclose_w.square() + enclose_h.square();
    PairTerms {
        inter,
        union,
        enclose_w,
        enclose_h,
        center_d2,
        diag2,
    }
}

#[inline]
pub(crate) fn iou_generic<T: Scalar>(a: &BBox<T>, b: &BBox<T>) -> T {
    let inter = intersection(a, b);
    inter / (corner_area(a) + corner_area(b) - inter)
}

/// Intersection over union; 0 for disjoint or edge-touching boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    iou_generic(a, b)
}

/// Convex combination `(1 - alpha) * pred + alpha * gt` without range checks.
///
/// Evaluated as `pred + alpha * (gt - pred)` so that equal endpoints give the
/// endpoint back exactly; `alpha == 1` returns `gt`.
#[inline]
pub fn lerp<T: Scalar>(pred: &BBox<T>, gt: &BBox<T>, alpha: T) -> BBox<T> {
    if alpha.value() == 1.0 {
        return *gt;
    }
    BBox {
        cx: pred.cx + alpha * (gt.cx - pred.cx),
        cy: pred.cy + alpha * (gt.cy - pred.cy),
        w: pred.w + alpha * (gt.w - pred.w),
        h: pred.h + alpha * (gt.h - pred.h),
    }
}

/// Interpolated box between a prediction and its target.
///
/// `alpha` is the weight of `gt`; it must lie in `(0, 1]`.
pub fn interpolate(pred: &BBox, gt: &BBox, alpha: f64) -> Result<BBox> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(lerp(pred, gt, alpha))
}

/// Geometric relationship between two boxes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomPair {
    pub inter: f64,
    pub union: f64,
    pub enclose_w: f64,
    pub enclose_h: f64,
    /// Center-to-center distance.
    pub center_dist: f64,
    /// Diagonal of the smallest enclosing box.
    pub diag: f64,
    /// Edge-to-edge gap per axis (x, y); negative where the boxes overlap.
    pub gap: [f64; 2],
}

/// Signed edge gap `|c_a - c_b| - (l_a + l_b) / 2` along x and y.
pub fn edge_gaps(a: &BBox, b: &BBox) -> [f64; 2] {
    [
        (a.cx - b.cx).abs() - 0.5 * (a.w + b.w),
        (a.cy - b.cy).abs() - 0.5 * (a.h + b.h),
    ]
}

pub fn geom_pair(a: &BBox, b: &BBox) -> GeomPair {
    let t = pair_terms(a, b);
    GeomPair {
        inter: t.inter,
        union: t.union,
        enclose_w: t.enclose_w,
        enclose_h: t.enclose_h,
        center_dist: t.center_d2.sqrt(),
        diag: t.diag2.sqrt(),
        gap: edge_gaps(a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(cx: f64, cy: f64, w: f64, h: f64) -> BBox {
        BBox::new(cx, cy, w, h).unwrap()
    }

    #[test]
    fn areas() {
        assert_eq!(area(&b(0.0, 0.0, 1.0, 1.0)), 1.0);
        assert_eq!(area(&b(0.3, 0.1, 0.5, 0.25)), 0.125);
        assert_eq!(area(&b(0.0, 0.0, BOX_EPS, 1.0)), BOX_EPS);
    }

    #[test]
    fn iou_examples() {
        let u = b(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&u, &u), 1.0);
        assert_eq!(iou(&u, &b(2.5, 0.0, 1.0, 1.0)), 0.0);
        assert!((iou(&b(0.0, 0.0, 2.0, 2.0), &b(1.0, 1.0, 2.0, 2.0)) - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn touching_boxes_do_not_intersect() {
        let a = b(0.0, 0.0, 1.0, 1.0);
        let c = b(1.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &c), 0.0);
        assert_eq!(geom_pair(&a, &c).gap[0], 0.0);
    }

    #[test]
    fn geom_pair_identical_unit_boxes() {
        let u = b(0.0, 0.0, 1.0, 1.0);
        let g = geom_pair(&u, &u);
        assert_eq!(g.inter, 1.0);
        assert_eq!(g.union, 1.0);
        assert_eq!((g.enclose_w, g.enclose_h), (1.0, 1.0));
        assert_eq!(g.center_dist, 0.0);
        assert_eq!(g.gap, [-1.0, -1.0]);
    }

    #[test]
    fn geom_pair_side_by_side() {
        let g = geom_pair(&b(0.0, 0.0, 1.0, 1.0), &b(2.0, 0.0, 1.0, 1.0));
        assert_eq!(g.gap, [1.0, -1.0]);
        assert_eq!((g.enclose_w, g.enclose_h), (3.0, 1.0));
        assert_eq!((g.union, g.inter), (2.0, 0.0));
        assert_eq!(g.center_dist, 2.0);
        assert_eq!(g.diag, 10f64.sqrt());
    }

    #[test]
    fn overlapping_pair_has_negative_gap() {
        let g = geom_pair(&b(0.0, 0.0, 2.0, 2.0), &b(1.0, 0.5, 2.0, 2.0));
        assert!(g.gap[0] < 0.0 && g.gap[1] < 0.0);
    }

    #[test]
    fn gaps_are_reflection_symmetric() {
        let gt = b(0.5, 0.5, 0.2, 0.1);
        let right = b(0.9, 0.7, 0.1, 0.1);
        let left = b(0.1, 0.3, 0.1, 0.1);
        let (r, l) = (edge_gaps(&right, &gt), edge_gaps(&left, &gt));
        assert!((r[0] - l[0]).abs() < 1e-15 && (r[1] - l[1]).abs() < 1e-15);
    }

    #[test]
    fn interpolate_examples() {
        let pred = b(1.0, 1.0, 1.0, 1.0);
        let gt = b(0.0, 0.0, 3.0, 1.0);
        assert_eq!(interpolate(&pred, &gt, 1.0).unwrap(), gt);
        assert_eq!(interpolate(&pred, &gt, 0.5).unwrap(), b(0.5, 0.5, 2.0, 1.0));

        let r = interpolate(&b(0.5, 0.5, 0.2, 0.2), &b(0.0, 0.0, 0.2, 0.2), 0.98).unwrap();
        for (got, want) in r.to_array().iter().zip([0.01, 0.01, 0.2, 0.2]) {
            assert!((got - want).abs() < 1e-15, "{r:?}");
        }
    }

    #[test]
    fn interpolate_rejects_out_of_range_alpha() {
        let u = b(0.0, 0.0, 1.0, 1.0);
        for a in [0.0, -0.1, 1.0001, f64::NAN] {
            assert!(matches!(interpolate(&u, &u, a), Err(Error::InvalidAlpha(_))));
        }
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn corner_round_trip() {
        let a = b(0.25, 0.75, 0.5, 0.125);
        let c = a.corners();
        assert!(c.x1 < c.x2 && c.y1 < c.y2);
        assert_eq!(BBox::from_corners(c).unwrap(), a);
    }

    #[test]
    fn with_area_builds_requested_shape() {
        let a = BBox::with_area(0.0, 0.0, 1.0 / 16.0, 1.0).unwrap();
        assert_eq!((a.w, a.h), (0.25, 0.25));
    }

    #[test]
    fn floor_applies_minimum_size() {
        let f = BBox::from_array([0.0, 0.0, -1.0, 1e-12]).floored();
        assert_eq!((f.w, f.h), (BOX_EPS, BOX_EPS));
    }
}
