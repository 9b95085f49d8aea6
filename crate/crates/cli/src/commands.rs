use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use boxreg::sampling::{kink_free_for, PairSampler};
use boxreg::geometry::lerp;
use boxreg::{
    enlargement_case, enlargement_study, generate_cases, iou, landscape_sweep, parity, probe_alpha_bound, run_batch,
    LossKind, METRIC_NAMES,
};

use crate::config::RunConfig;
use crate::svg::{box_trajectory, line_chart, PlotSpec};
use crate::table::{Cell, Table};

/// What a command wrote and whether its in-command checks held.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub outputs: Vec<PathBuf>,
    pub passed: bool,
}

impl Report {
    fn new() -> Self {
        Report {
            outputs: Vec::new(),
            passed: true,
        }
    }

    fn table(&mut self, t: &Table, dir: &Path, stem: &str, cfg: &RunConfig) -> Result<()> {
        self.outputs.push(t.write(dir, stem, cfg.format)?);
        Ok(())
    }

    fn text(&mut self, path: PathBuf, body: &str) -> Result<()> {
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(path);
        Ok(())
    }
}

pub fn simulate(cfg: &RunConfig, dir: &Path) -> Result<Report> {
    let mut rep = Report::new();
    let cases = generate_cases(&cfg.scenario)?;
    eprintln!("simulate: {} cases x {} losses", cases.len(), cfg.losses.len());
    let labels: Vec<String> = cfg.losses.iter().map(|l| l.label()).collect();
    let mut finals = Vec::with_capacity(cfg.losses.len());
    let mut curves = Vec::with_capacity(cfg.losses.len());
    for (loss, label) in cfg.losses.iter().zip(&labels) {
        let series = run_batch(&cases, loss, &cfg.adam, cfg.scenario.track_alpha)
            .with_context(|| format!("loss {label}"))?;
        let mut t = Table::new(&METRIC_NAMES);
        for row in &series.rows {
            t.push(row.iter().map(|&v| v.into()).collect());
        }
        t.check_finite(&[])?;
        rep.table(&t, dir, &format!("simulate_{label}"), cfg)?;
        let l_iou = series.series("l_iou").expect("l_iou is tracked");
        finals.push(*l_iou.last().expect("at least one row"));
        curves.push(l_iou);
        eprintln!("  {label}: final mean l_iou {:.6}", finals.last().unwrap());
    }

    let mut cmp = Table::new(&labels);
    for step in 0..=cfg.adam.steps {
        cmp.push(curves.iter().map(|c| c[step].into()).collect());
    }
    rep.table(&cmp, dir, "comparison", cfg)?;
    if cfg.plot {
        let path = dir.join("comparison.svg");
        let spec = PlotSpec::full(labels.clone(), "mean IoU loss", cmp.rows.len(), path.clone());
        rep.text(path, &line_chart(&spec, &cmp)?)?;
    }
    for (label, v) in labels.iter().zip(&finals) {
        println!("{label:<24} {v:.6}");
    }
    Ok(rep)
}

pub fn enlargement(cfg: &RunConfig, dir: &Path) -> Result<Report> {
    let mut rep = Report::new();
    let gt = enlargement_case().gt;
    let runs = enlargement_study(&cfg.losses, &cfg.adam)?;
    let mut summary = Table::new(&["loss", "max_r_diff", "max_abs_r_diff", "final_iou"]);
    for run in &runs {
        let label = run.loss.label();
        let tr = &run.trajectory;
        let mut t = Table::new(&["cx", "cy", "w", "h", "loss", "iou", "r_diff"]);
        for (i, b) in tr.boxes.iter().enumerate() {
            t.push(vec![
                b.cx.into(),
                b.cy.into(),
                b.w.into(),
                b.h.into(),
                tr.losses[i].into(),
                iou(b, &gt).into(),
                run.r_diff[i].into(),
            ]);
        }
        t.check_finite(&[])?;
        rep.table(&t, dir, &format!("enlargement_{label}"), cfg)?;
        let svg = box_trajectory(&tr.boxes, &gt, &label);
        rep.text(dir.join(format!("enlargement_{label}.svg")), &svg)?;
        let fin = iou(tr.final_box(), &gt);
        summary.push(vec![label.into(), run.max_r_diff().into(), run.max_abs_r_diff().into(), fin.into()]);
    }
    rep.table(&summary, dir, "enlargement_summary", cfg)?;
    println!("{:<24} {:>12} {:>14} {:>10}", "loss", "max_r_diff", "max_abs_r_diff", "final_iou");
    for run in &runs {
        println!(
            "{:<24} {:>12.6} {:>14.6} {:>10.6}",
            run.loss.label(),
            run.max_r_diff(),
            run.max_abs_r_diff(),
            iou(run.trajectory.final_box(), &gt)
        );
    }
    Ok(rep)
}

pub fn landscape(cfg: &RunConfig, dir: &Path) -> Result<Report> {
    let mut rep = Report::new();
    let l = &cfg.landscape;
    let specs = l.specs()?;
    let k = l.points - 1;
    let curves = landscape_sweep(&l.start, &l.gt, &specs, k)?;
    let labels: Vec<String> = specs.iter().map(|s| s.label()).collect();
    let mut cols = vec!["t".to_string(), "iou_value".to_string()];
    cols.extend(labels.iter().cloned());
    let mut t = Table::new(&cols);
    for i in 0..=k {
        let frac = i as f64 / k as f64;
        let b = if i == k { l.gt } else { lerp(&l.start, &l.gt, frac) };
        let mut row: Vec<Cell> = vec![frac.into(), iou(&b, &l.gt).into()];
        row.extend(curves.iter().map(|c| c[i].into()));
        t.push(row);
    }
    t.check_finite(&[])?;
    rep.table(&t, dir, "landscape", cfg)?;
    let path = dir.join("landscape.svg");
    let spec = PlotSpec {
        x_label: "path position (step)".into(),
        ..PlotSpec::full(labels, "loss", t.rows.len(), path.clone())
    };
    rep.text(path, &line_chart(&spec, &t)?)?;
    Ok(rep)
}

pub fn gradcheck(cfg: &RunConfig, dir: &Path) -> Result<Report> {
    let mut rep = Report::new();
    let g = &cfg.gradcheck;
    let mut t = Table::new(&["loss", "pairs", "max_analytic_abs", "max_fd_abs", "max_fd_ratio"]);
    println!(
        "{:<24} {:>7} {:>16} {:>12} {:>12}",
        "loss", "pairs", "analytic_abs", "fd_abs", "fd_ratio"
    );
    for spec in &cfg.losses {
        let mut sampler = PairSampler::new(cfg.scenario.seed);
        let pairs = sampler.take_where(g.pairs, |p, q| kink_free_for(spec, p, q, g.margin));
        let (mut an, mut fd_abs, mut ratio) = (None::<f64>, 0.0f64, 0.0f64);
        for (i, (p, q)) in pairs.iter().enumerate() {
            let r = parity(spec, p, q, g.fd_step, g.rel_tol, g.abs_floor)
                .with_context(|| format!("{} pair {i}", spec.label()))?;
            if let Some(a) = r.analytic_abs {
                an = Some(an.unwrap_or(0.0).max(a));
            }
            fd_abs = fd_abs.max(r.fd_abs);
            ratio = ratio.max(r.fd_ratio);
            let analytic_bad = r.analytic_abs.is_some_and(|a| a > g.analytic_tol);
            if analytic_bad || r.fd_ratio > 1.0 {
                rep.passed = false;
                eprintln!(
                    "tolerance breach: loss {} pair {i}\n  pred {p:?}\n  gt   {q:?}\n  autodiff {:?}\n  fd       {:?}\n  analytic_abs {:?}",
                    spec.label(),
                    r.autodiff,
                    r.fd,
                    r.analytic_abs
                );
            }
        }
        let an = an.unwrap_or(f64::NAN);
        println!("{:<24} {:>7} {:>16.3e} {:>12.3e} {:>12.3e}", spec.label(), pairs.len(), an, fd_abs, ratio);
        t.push(vec![spec.label().into(), pairs.len().into(), an.into(), fd_abs.into(), ratio.into()]);
    }
    rep.table(&t, dir, "gradcheck", cfg)?;
    if !cfg.losses.iter().any(|l| l.kind() == LossKind::Iou) {
        eprintln!("note: closed-form gradient is only compared for the iou loss");
    }
    Ok(rep)
}

pub fn alpha_bound(cfg: &RunConfig, dir: &Path) -> Result<Report> {
    let mut rep = Report::new();
    let a = &cfg.alpha_bound;
    let mut sampler = PairSampler::new(cfg.scenario.seed);
    let mut t = Table::new(&[
        "pred_cx", "pred_cy", "pred_w", "pred_h", "gt_cx", "gt_cy", "gt_w", "gt_h", "bound", "iou_above", "iou_below",
    ]);
    let (mut disjoint, mut below_checked, mut violations) = (0usize, 0usize, 0usize);
    for i in 0..a.pairs {
        let (p, g) = sampler.sample_pair();
        let r = probe_alpha_bound(&p, &g, a.delta);
        if iou(&p, &g) == 0.0 {
            disjoint += 1;
        }
        if r.gap_below.is_some() {
            below_checked += 1;
        }
        if !r.holds() {
            violations += 1;
            rep.passed = false;
            eprintln!("bound violated at pair {i}\n  pred {p:?}\n  gt   {g:?}\n  {r:?}");
        }
        t.push(vec![
            p.cx.into(),
            p.cy.into(),
            p.w.into(),
            p.h.into(),
            g.cx.into(),
            g.cy.into(),
            g.w.into(),
            g.h.into(),
            r.bound.into(),
            r.iou_above.into(),
            r.iou_below.unwrap_or(f64::NAN).into(),
        ]);
    }
    t.check_finite(&["iou_below"])?;
    rep.table(&t, dir, "alpha_bound", cfg)?;
    println!(
        "pairs {} disjoint {} checked below bound {} violations {}",
        a.pairs, disjoint, below_checked, violations
    );
    Ok(rep)
}
