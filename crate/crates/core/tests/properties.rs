use proptest::prelude::*;

use boxreg::geometry::lerp;
use boxreg::losses::binding_axis;
use boxreg::sampling::kink_free_for;
use boxreg::{
    breakdown, eval, geom_pair, generate_cases, interpolate, iou, landscape_sweep, min_alpha, r_diff, regress,
    run_batch, value_and_grad, AdamConfig, BBox, Corners, LossKind, LossSpec, Pairing, RegressionCase,
    ScenarioConfig, BOX_EPS,
};

const MANY: u32 = 10_000;

fn many() -> ProptestConfig {
    ProptestConfig::with_cases(MANY)
}

fn bbox() -> impl Strategy<Value = BBox> {
    (0.0..1.0f64, 0.0..1.0f64, 0.01..0.5f64, 0.01..0.5f64).prop_map(|(cx, cy, w, h)| BBox { cx, cy, w, h })
}

fn pair() -> impl Strategy<Value = (BBox, BBox)> {
    (bbox(), bbox())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn corner_lerp(a: Corners, b: Corners, t: f64) -> [f64; 4] {
    let f = |p: f64, q: f64| p + t * (q - p);
    [f(a.x1, b.x1), f(a.y1, b.y1), f(a.x2, b.x2), f(a.y2, b.y2)]
}

proptest! {
    #![proptest_config(many())]

    #[test]
    fn interpolation_commutes_with_corner_form((p, g) in pair(), t in 0.0..=1.0f64) {
        let c = lerp(&p, &g, t).corners();
        let d = corner_lerp(p.corners(), g.corners(), t);
        for (x, y) in [c.x1, c.y1, c.x2, c.y2].into_iter().zip(d) {
            prop_assert!(close(x, y, 1e-14), "{x} vs {y}");
        }
    }

    #[test]
    fn iou_is_symmetric((a, b) in pair()) {
        prop_assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn geometry_is_translation_invariant((a, b) in pair(), dx in -5.0..5.0f64, dy in -5.0..5.0f64) {
        let (p, q) = (geom_pair(&a, &b), geom_pair(&a.translated(dx, dy), &b.translated(dx, dy)));
        let tol = 1e-12;
        prop_assert!((p.inter - q.inter).abs() <= tol);
        prop_assert!((p.union - q.union).abs() <= tol);
        prop_assert!((p.enclose_w - q.enclose_w).abs() <= tol);
        prop_assert!((p.enclose_h - q.enclose_h).abs() <= tol);
        prop_assert!((p.center_dist - q.center_dist).abs() <= tol);
        prop_assert!((p.diag - q.diag).abs() <= tol);
        prop_assert!((p.gap[0] - q.gap[0]).abs() <= tol && (p.gap[1] - q.gap[1]).abs() <= tol);
        prop_assert!((iou(&a, &b) - iou(&a.translated(dx, dy), &b.translated(dx, dy))).abs() <= 1e-10);
    }

    #[test]
    fn geometry_scales_covariantly((a, b) in pair(), s in 0.05..20.0f64) {
        let (p, q) = (geom_pair(&a, &b), geom_pair(&a.scaled(s), &b.scaled(s)));
        prop_assert!(close(q.inter, s * s * p.inter, 1e-12));
        prop_assert!(close(q.union, s * s * p.union, 1e-12));
        prop_assert!(close(q.center_dist, s * p.center_dist, 1e-12));
        prop_assert!(close(q.gap[0], s * p.gap[0], 1e-12) && close(q.gap[1], s * p.gap[1], 1e-12));
        prop_assert!(close(iou(&a, &b), iou(&a.scaled(s), &b.scaled(s)), 1e-12));
    }

    #[test]
    fn overlap_above_bound((p, g) in pair(), u in 1e-6..=1.0f64) {
        let bound = min_alpha(&p, &g);
        let alpha = bound + u * (1.0 - bound);
        prop_assert!(alpha > bound);
        let b = interpolate(&p, &g, alpha).unwrap();
        prop_assert!(iou(&b, &g) > 0.0, "bound {bound} alpha {alpha}");
    }

    #[test]
    fn interp_dominates_iou((p, g) in pair(), alpha in 0.01..=1.0f64) {
        let li = eval(&LossSpec::Iou, &p, &g);
        let spec = LossSpec::interp(alpha).unwrap();
        let lx = eval(&spec, &p, &g);
        prop_assert!(lx >= li);
        prop_assert!(lx > 0.0);
        prop_assert_eq!(eval(&spec, &g, &g), 0.0);
    }

    #[test]
    fn alpha_one_reduces_to_iou((p, g) in pair()) {
        let a = eval(&LossSpec::interp(1.0).unwrap(), &p, &g);
        prop_assert_eq!(a, eval(&LossSpec::Iou, &p, &g));
    }

    #[test]
    fn penalty_ranges((p, g) in pair()) {
        let r = breakdown(&p, &g, 0.98);
        prop_assert!((0.0..=1.0).contains(&r.l_iou));
        prop_assert!((0.0..1.0).contains(&r.r_giou));
        // 1 - exp(-P²) rounds to 1 once exp(-P²) drops below half an ulp.
        prop_assert!((0.0..=1.0).contains(&r.r_piou));
        let (a, b) = (p.corners(), g.corners());
        let pen = ((a.x1 - b.x1).abs() + (a.x2 - b.x2).abs()) / g.w + ((a.y1 - b.y1).abs() + (a.y2 - b.y2).abs()) / g.h;
        if (0.25 * pen).powi(2) < 36.0 {
            prop_assert!(r.r_piou < 1.0);
        }
        let (dist, shape) = boxreg::losses::siou_components(&p, &g, 4.0);
        prop_assert!((0.0..=2.0).contains(&dist), "{dist}");
        prop_assert!((0.0..=2.0).contains(&shape), "{shape}");
    }

    #[test]
    fn iou_losses_are_scale_invariant((p, g) in pair(), s in 0.05..20.0f64, alpha in 0.01..=1.0f64) {
        for spec in [LossSpec::Iou, LossSpec::interp(alpha).unwrap()] {
            let (a, b) = (eval(&spec, &p, &g), eval(&spec, &p.scaled(s), &g.scaled(s)));
            prop_assert!(close(a, b, 1e-10), "{spec}: {a} vs {b}");
        }
        let (a, b) = (eval(&LossSpec::L1, &p, &g), eval(&LossSpec::L1, &p.scaled(s), &g.scaled(s)));
        prop_assert!(close(b, s * a, 1e-12));
        if (s - 1.0).abs() > 1e-3 && a > 1e-6 {
            prop_assert!(!close(a, b, 1e-6));
        }
    }

    #[test]
    fn area_ratio_above_minus_one((p, g) in pair()) {
        prop_assert!(r_diff(&p, &g) > -1.0);
        prop_assert!(r_diff(&p.floored(), &g) > -1.0);
    }

    #[test]
    fn interp_chain_rule((p, g) in pair(), alpha in 0.05..0.999f64) {
        let spec = LossSpec::interp(alpha).unwrap();
        prop_assume!(kink_free_for(&spec, &p, &g, 1e-6));
        let full = value_and_grad(&spec, &p, &g).1;
        let base = value_and_grad(&LossSpec::Iou, &p, &g).1;
        let inner = value_and_grad(&LossSpec::Iou, &lerp(&p, &g, alpha), &g).1;
        let expect = base.add(&inner.scale(1.0 - alpha));
        prop_assert!(full.max_abs_diff(&expect) <= 1e-12 * (1.0 + expect.max_abs()));
    }

    #[test]
    fn dynamic_coefficient_is_detached((p, g) in pair(), lo in 0.0..0.5f64, hi in 0.5..0.99f64) {
        let spec = LossSpec::dyn_interp(lo, hi).unwrap();
        let alpha = boxreg::dynamic_alpha(&p, &g, lo, hi).unwrap();
        let frozen = LossSpec::interp(alpha).unwrap();
        let (v, grad) = value_and_grad(&spec, &p, &g);
        let (vf, gf) = value_and_grad(&frozen, &p, &g);
        prop_assert!(close(v, vf, 1e-14));
        prop_assert!(grad.max_abs_diff(&gf) <= 1e-12 * (1.0 + gf.max_abs()), "{grad:?} vs {gf:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { max_global_rejects: 100_000, ..many() })]

    #[test]
    fn no_overlap_on_binding_axis_below_bound((p, g) in pair(), u in 1e-6..1.0f64) {
        let bound = min_alpha(&p, &g);
        prop_assume!(bound > 0.0);
        let ax = binding_axis(&p, &g).unwrap();
        let b = lerp(&p, &g, bound * (1.0 - u));
        prop_assert!(boxreg::geometry::edge_gaps(&b, &g)[ax] > 0.0);
        prop_assert_eq!(iou(&b, &g), 0.0);
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dynamic_envelope_on_sweeps((p, g) in pair()) {
        let specs = [LossSpec::dyn_interp(0.0, 0.99).unwrap(), LossSpec::interp(0.99).unwrap()];
        let s = landscape_sweep(&p, &g, &specs, 100).unwrap();
        for (d, st) in s[0].iter().zip(&s[1]) {
            prop_assert!(d >= st);
        }
    }

    #[test]
    fn regression_never_collapses_a_side((p, g) in pair(), lr in 0.01..0.5f64, k in 0usize..11) {
        let cfg = AdamConfig { lr, steps: 40, ..Default::default() };
        let spec = LossKind::ALL[k].default_spec();
        let t = regress(&RegressionCase::new(p, g), &spec, &cfg).unwrap();
        prop_assert!(t.boxes.iter().all(|b| b.w >= BOX_EPS && b.h >= BOX_EPS));
    }

    #[test]
    fn iou_trends_upward((p, g) in pair(), k in 0usize..11) {
        let spec = LossKind::ALL[k].default_spec();
        prop_assume!(!value_and_grad(&spec, &p, &g).1.is_zero());
        let t = regress(&RegressionCase::new(p, g), &spec, &AdamConfig::default()).unwrap();
        let ious: Vec<f64> = t.boxes.iter().map(|b| iou(b, &g)).collect();
        let first: f64 = ious[..10].iter().sum::<f64>() / 10.0;
        let last: f64 = ious[ious.len() - 10..].iter().sum::<f64>() / 10.0;
        prop_assert!(last >= first, "{spec}: {first} -> {last}");
    }

    #[test]
    fn case_count_arithmetic(n in 1usize..6, s in 1usize..4, a in 1usize..4, gts in 1usize..4, cross in any::<bool>()) {
        let cfg = ScenarioConfig {
            n_anchors: n,
            scales: (1..=s).map(|i| 0.01 * i as f64).collect(),
            aspect_ratios: (1..=a).map(|i| i as f64).collect(),
            gt_aspect_ratios: (1..=gts).map(|i| 1.0 / i as f64).collect(),
            pairing: if cross { Pairing::Cross } else { Pairing::SingleGt },
            ..Default::default()
        };
        let expect = n * s * a * if cross { gts } else { 1 };
        prop_assert_eq!(generate_cases(&cfg).unwrap().len(), expect);
        prop_assert_eq!(cfg.case_count(), expect);
    }
}

#[test]
fn regression_is_deterministic() {
    let case = RegressionCase::new(BBox::new(0.2, 0.7, 0.3, 0.05).unwrap(), BBox::new(0.5, 0.5, 0.1, 0.1).unwrap());
    for kind in LossKind::ALL {
        let spec = kind.default_spec();
        let a = regress(&case, &spec, &AdamConfig::default()).unwrap();
        let b = regress(&case, &spec, &AdamConfig::default()).unwrap();
        assert_eq!(a, b, "{spec}");
    }
}

#[test]
fn batch_means_ignore_thread_count() {
    let scen = ScenarioConfig {
        n_anchors: 12,
        seed: 5,
        ..Default::default()
    };
    let cases = generate_cases(&scen).unwrap();
    let cfg = AdamConfig {
        steps: 30,
        ..Default::default()
    };
    let spec = LossSpec::interp(0.98).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| run_batch(&cases, &spec, &cfg, 0.98).unwrap())
    };
    let one = serde_json::to_string(&run(1)).unwrap();
    assert_eq!(one, serde_json::to_string(&run(3)).unwrap());
    assert_eq!(one, serde_json::to_string(&run(1)).unwrap());
}
