//! Seeded random box pairs for property and parity checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{iou, lerp, BBox};
use crate::losses::LossSpec;

/// Draws `(pred, gt)` pairs with centers in `[0, 1]²` and sides in
/// `[min_side, max_side]`.
#[derive(Clone, Debug)]
pub struct PairSampler {
    rng: ChaCha8Rng,
    pub min_side: f64,
    pub max_side: f64,
}

impl PairSampler {
    pub fn new(seed: u64) -> Self {
        PairSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            min_side: 0.05,
            max_side: 0.5,
        }
    }

    pub fn with_sides(mut self, min_side: f64, max_side: f64) -> Self {
        self.min_side = min_side;
        self.max_side = max_side;
        self
    }

    pub fn sample_box(&mut self) -> BBox {
        let (lo, hi) = (self.min_side, self.max_side);
        BBox {
            cx: self.rng.random::<f64>(),
            cy: self.rng.random::<f64>(),
            w: self.rng.random_range(lo..hi),
            h: self.rng.random_range(lo..hi),
        }
    }

    pub fn sample_pair(&mut self) -> (BBox, BBox) {
        (self.sample_box(), self.sample_box())
    }

    /// Next pair satisfying `keep`.
    pub fn sample_where(&mut self, mut keep: impl FnMut(&BBox, &BBox) -> bool) -> (BBox, BBox) {
        loop {
            let (p, g) = self.sample_pair();
            if keep(&p, &g) {
                return (p, g);
            }
        }
    }

    pub fn take_where(&mut self, n: usize, mut keep: impl FnMut(&BBox, &BBox) -> bool) -> Vec<(BBox, BBox)> {
        (0..n).map(|_| self.sample_where(&mut keep)).collect()
    }
}

fn edges_apart(a: &BBox, b: &BBox, margin: f64) -> bool {
    let (ca, cb) = (a.corners(), b.corners());
    let apart = |p: [f64; 2], q: [f64; 2]| p.iter().all(|x| q.iter().all(|y| (x - y).abs() > margin));
    apart([ca.x1, ca.x2], [cb.x1, cb.x2]) && apart([ca.y1, ca.y2], [cb.y1, cb.y2])
}

/// True when no loss in this crate has a kink within `margin` of the pair:
/// no shared edges, no equal sides, no aligned centers and IoU away from
/// the CIoU gate at 0.5.
pub fn kink_free(pred: &BBox, gt: &BBox, margin: f64) -> bool {
    edges_apart(pred, gt, margin)
        && (pred.w - gt.w).abs() > margin
        && (pred.h - gt.h).abs() > margin
        && (pred.cx - gt.cx).abs() > margin
        && (pred.cy - gt.cy).abs() > margin
        && (iou(pred, gt) - 0.5).abs() > margin
}

/// [`kink_free`] plus the same edge test for the interpolated box of an
/// interpolation loss.
pub fn kink_free_for(spec: &LossSpec, pred: &BBox, gt: &BBox, margin: f64) -> bool {
    if !kink_free(pred, gt, margin) {
        return false;
    }
    let alpha = match *spec {
        LossSpec::Interp { alpha } => alpha,
        LossSpec::DynInterp { low, high } => (1.0 - iou(pred, gt)).clamp(low, high),
        _ => return true,
    };
    edges_apart(&lerp(pred, gt, alpha), gt, margin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_seeded() {
        let a: Vec<_> = (0..5).map({
            let mut s = PairSampler::new(3);
            move |_| s.sample_pair()
        }).collect();
        let mut s = PairSampler::new(3);
        let b: Vec<_> = (0..5).map(|_| s.sample_pair()).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|(p, g)| p.validate().is_ok() && g.validate().is_ok()));
    }

    #[test]
    fn kink_detection() {
        let g = BBox::new(0.5, 0.5, 0.2, 0.2).unwrap();
        assert!(!kink_free(&g, &g, 1e-4));
        let shared_left = BBox::new(0.45, 0.3, 0.1, 0.13).unwrap();
        assert!(!kink_free(&shared_left, &g, 1e-4));
        let ok = BBox::new(0.43, 0.37, 0.13, 0.17).unwrap();
        assert!(kink_free(&ok, &g, 1e-4));
    }
}
