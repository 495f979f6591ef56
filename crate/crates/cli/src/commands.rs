use std::f64::consts::PI;

use anyhow::{bail, ensure, Result};
use mra_core::cz::{cz_split, whitney, CellSet, WhitneyDecomposition};
use mra_core::dyadic::{counting_ratios, enum_box, enum_cross, min_with_multiplicity, CrossParams};
use mra_core::lp::{run_lp_sweep, LpSweepConfig};
use mra_core::projectors::{apply_axis, parseval_gap, project_level, AxisProjector, InclusionExclusion, Transform};
use mra_core::sample::{random_piecewise_fn, random_smooth, trial_rng};
use mra_core::smoothness::{
    decay_check, max_ratio, normalize_to_class, seminorm_from_table, synthesize_extremal, ModulusTable,
    SmoothnessParams, Theta, DEFAULT_SHIFT_CAP,
};
use mra_core::widths::{
    budget_beta, budget_plan, cross_dimension, run_width_experiment, WidthCase, WidthExperimentConfig,
};
use mra_core::{DegreeVector, Grid, GridFunction, MultiIndex};

use crate::report::{Cell, Report};
use crate::{CrossArgs, CzArgs, Demo, LpArgs, SmoothArgs, TestFunction, VerifyArgs, WidthArgs};

/// Largest grid the commands will allocate.
const MAX_POINTS: usize = 1 << 22;

const TOL: f64 = 1e-10;

fn check_grid(d: usize, level: u32, nodes: usize) -> Result<()> {
    ensure!((1..=4).contains(&d), "--d must lie in 1..=4, got {d}");
    let side = (nodes as u128) << level;
    ensure!(
        side.pow(d as u32) <= MAX_POINTS as u128,
        "grid with {side}^{d} points is too large; lower --K"
    );
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn resolve_dim(d: Option<usize>, alpha: &[f64]) -> Result<usize> {
    ensure!(!alpha.is_empty(), "--alpha is required");
    if let Some(d) = d {
        ensure!(d == alpha.len(), "--d {d} does not match the {} entries of --alpha", alpha.len());
    }
    Ok(alpha.len())
}

fn rel(a: &GridFunction, b: &GridFunction, scale: f64) -> f64 {
    (a - b).l2_norm() / scale.max(1e-300)
}

pub fn verify_projectors(a: &VerifyArgs, seed: u64) -> Result<Report> {
    check_grid(a.d, a.level, 2 * a.l + 2)?;
    ensure!(a.trials > 0, "--trials must be positive");
    let deg = DegreeVector::uniform(a.d, a.l);
    let grid = Grid::for_degree(a.level, &deg, None)?;
    let t = Transform::new(&grid, &deg)?;
    let top = MultiIndex::uniform(a.d, a.level);
    let small = enum_box(&MultiIndex::uniform(a.d, a.level.min(2)));
    let names = [
        "parseval",
        "routes",
        "telescoping",
        "idempotency",
        "self_adjointness",
        "cross_orthogonality",
        "annihilation",
        "factorization",
    ];
    let mut worst = [0.0f64; 8];
    let mut cases = [0usize; 8];
    let mut note = |i: usize, v: f64| {
        worst[i] = worst[i].max(v);
        cases[i] += 1;
    };
    for trial in 0..a.trials as u64 {
        let mut rng = trial_rng(seed, trial);
        let f = random_smooth(&grid, &mut rng);
        let g = random_smooth(&grid, &mut rng);
        let (nf, ng) = (f.l2_norm(), g.l2_norm());
        let p = random_piecewise_fn(&grid, &top, &deg, &mut rng)?;
        note(0, parseval_gap(&p, &top, &deg)? / p.l2_norm().powi(2));

        let mut ie = InclusionExclusion::new(&f, &deg)?;
        let mut sum = GridFunction::zeros(&grid);
        for k in enum_box(&top) {
            let d = t.detail(&f, &k)?;
            note(1, rel(&ie.detail(&k)?, &d, nf));
            sum.axpy(1.0, &d)?;
        }
        note(2, rel(&sum, &project_level(&f, &top, &deg)?.to_grid(&grid)?, nf));

        for k in &small {
            let ef = t.detail(&f, k)?;
            let eg = t.detail(&g, k)?;
            note(3, rel(&t.detail(&ef, k)?, &ef, nf));
            note(4, (ef.inner(&g)? - f.inner(&eg)?).abs() / (nf * ng));
            let mut fac = f.clone();
            for j in 0..a.d {
                fac = apply_axis(&AxisProjector::detail(&grid, j, k.get(j), t.wavelets(j))?, j, &fac)?;
            }
            note(7, rel(&fac, &ef, nf));
            for kk in small.iter().filter(|kk| *kk != k) {
                note(5, t.detail(&ef, kk)?.l2_norm() / nf);
                if !k.le(kk) {
                    let q = random_piecewise_fn(&grid, kk, &deg, &mut rng)?;
                    note(6, t.detail(&q, k)?.l2_norm() / q.l2_norm());
                }
            }
        }
    }
    let mut r = Report::new("verify-projectors", vec!["check", "cases", "max_defect", "tolerance", "pass"]);
    r.config("d", a.d);
    r.config("l", a.l);
    r.config("K", a.level);
    r.config("trials", a.trials);
    for i in 0..names.len() {
        let pass = worst[i] <= TOL;
        if !pass {
            r.failures.push(format!("{}: defect {:e}", names[i], worst[i]));
        }
        r.row(vec![names[i].into(), cases[i].into(), worst[i].into(), TOL.into(), pass.into()]);
    }
    Ok(r)
}

pub fn lp_sweep(a: &LpArgs, seed: u64) -> Result<Report> {
    check_grid(a.d, a.level, 2 * a.l + 2)?;
    let cfg = LpSweepConfig {
        degree: DegreeVector::uniform(a.d, a.l),
        level: a.level,
        ps: a.p.clone(),
        trials: a.trials,
        sign_draws: a.sign_draws,
        seed,
    };
    let (reports, _) = run_lp_sweep(&cfg)?;
    let mut r = Report::new(
        "lp-sweep",
        vec![
            "p",
            "level",
            "square_min",
            "square_max",
            "square_band",
            "pstar_min",
            "pstar_max",
            "sign_min",
            "sign_max",
            "sign_band",
            "outside_hypotheses",
        ],
    );
    r.config("d", a.d);
    r.config("l", a.l);
    r.config("K", a.level);
    r.config("p", join(&a.p));
    r.config("trials", a.trials);
    r.config("sign_draws", a.sign_draws);
    for rep in reports {
        let p = rep.p;
        if rep.outside_hypotheses {
            r.warnings.push(format!("p = {p} is outside (1,inf): square-function and sign ratios carry no bound"));
        }
        if p == 2.0 && (rep.ratio_lower.max - 1.0).abs().max((rep.ratio_lower.min - 1.0).abs()) > TOL {
            r.failures.push("square function is not an isometry at p = 2".into());
        }
        r.constants.insert(format!("square_band_p{p}"), rep.ratio_lower.band());
        r.constants.insert(format!("pstar_max_p{p}"), rep.ratio_pstar.max);
        let sign = if a.sign_draws > 0 {
            r.constants.insert(format!("sign_band_p{p}"), rep.sign_ratio.band());
            (rep.sign_ratio.min, rep.sign_ratio.max, rep.sign_ratio.band())
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        r.row(vec![
            p.into(),
            a.level.into(),
            rep.ratio_lower.min.into(),
            rep.ratio_lower.max.into(),
            rep.ratio_lower.band().into(),
            rep.ratio_pstar.min.into(),
            rep.ratio_pstar.max.into(),
            sign.0.into(),
            sign.1.into(),
            sign.2.into(),
            rep.outside_hypotheses.into(),
        ]);
    }
    Ok(r)
}

fn whitney_summary(r: &mut Report, w: &WhitneyDecomposition) {
    r.summary("k0", w.k0.map_or("none".to_string(), |k| k.to_string()));
    r.summary("cubes", w.cubes.len());
    r.summary("w_measure", w.w_measure);
    r.summary("residual", w.residual);
    r.summary("residual_bound", w.residual_bound());
    if w.k0.is_none() {
        r.warnings.push("no Whitney cube is resolved at this level".into());
    }
    let fine = 1.0 / (1u64 << w.level) as f64;
    for (q, &dist) in w.cubes.iter().zip(&w.distances) {
        let diam = q.diam();
        if !(diam < dist && dist <= 4.0 * diam + fine) {
            r.failures.push(format!("cube {q}: diam {diam}, dist {dist}"));
        }
    }
}

pub fn czd(a: &CzArgs) -> Result<Report> {
    check_grid(a.d, a.level, 2)?;
    let mut columns = vec!["index", "level", "position", "diam", "dist"];
    let (w, means) = match a.demo {
        Demo::Unit => (whitney(&CellSet::open_unit_cube(a.d, a.level))?, None),
        Demo::Bump => {
            ensure!(a.alpha > 0.0 && a.alpha.is_finite(), "--alpha must be positive");
            let grid = Grid::new(a.d, a.level, &vec![2; a.d])?;
            let f = GridFunction::from_fn(&grid, |x| {
                4.0 * x.iter().map(|t| (1.0 - (2.0 * t - 1.0).powi(2)).max(0.0).powi(2)).product::<f64>()
            });
            let res = cz_split(&f, a.alpha)?;
            columns.push("mean");
            (res.whitney.clone(), Some((res, f)))
        }
    };
    let mut r = Report::new("czd", columns);
    r.config("d", a.d);
    r.config("K", a.level);
    r.config("demo", format!("{:?}", a.demo).to_lowercase());
    if a.demo == Demo::Bump {
        r.config("alpha", a.alpha);
    }
    whitney_summary(&mut r, &w);
    for (i, (q, &dist)) in w.cubes.iter().zip(&w.distances).enumerate() {
        let pos = q.position.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        let mut row: Vec<Cell> = vec![i.into(), q.level.get(0).into(), pos.into(), q.diam().into(), dist.into()];
        if let Some((res, _)) = &means {
            row.push(res.split.bad[i].mean.into());
        }
        r.row(row);
    }
    if let Some((res, f)) = &means {
        let worst_int = res.split.bad.iter().map(|b| b.h.integral().abs()).fold(0.0, f64::max);
        let recombination = (&res.split.recombine() - f).max_abs();
        r.summary("bad_blocks", res.split.bad.len());
        r.summary("max_bad_integral", worst_int);
        r.summary("recombination_error", recombination);
        r.summary("good_part_sup", res.split.g.max_abs());
        if worst_int > 1e-12 {
            r.failures.push(format!("bad block integral {worst_int:e}"));
        }
        if recombination > 1e-12 * f.max_abs() {
            r.failures.push(format!("f != g + sum h: {recombination:e}"));
        }
    }
    Ok(r)
}

fn smoothness_params(alpha: &[f64], p: f64, theta: f64) -> Result<SmoothnessParams> {
    Ok(SmoothnessParams::new(alpha.to_vec(), p, Theta::new(theta)?)?)
}

pub fn smoothness(a: &SmoothArgs, seed: u64) -> Result<Report> {
    let d = resolve_dim(a.d, &a.alpha)?;
    let params = smoothness_params(&a.alpha, a.p, a.theta)?;
    let q = a.q.unwrap_or(a.p);
    let deg = params.degree();
    let nodes = 2 * deg.as_slice().iter().max().copied().unwrap_or(0) + 2;
    check_grid(d, a.level, nodes)?;
    let f = match a.function {
        TestFunction::Sin => {
            let grid = Grid::for_degree(a.level, &deg, None)?;
            GridFunction::from_fn(&grid, |x| x.iter().map(|t| (PI * t).sin()).product())
        }
        TestFunction::Extremal => synthesize_extremal(&params, a.level, seed)?,
        TestFunction::Random => {
            let grid = Grid::for_degree(a.level, &deg, None)?;
            random_smooth(&grid, &mut trial_rng(seed, 0))
        }
    };
    let table = ModulusTable::new(&f, &params.order(), params.p, DEFAULT_SHIFT_CAP)?;
    let (seminorm, parts) = seminorm_from_table(&table, &params.alpha, params.theta)?;
    if seminorm == 0.0 {
        bail!("the test function has zero seminorm");
    }
    let (g, _) = normalize_to_class(&f, &params)?;
    let t = Transform::new(g.grid(), &deg)?;
    let rows = decay_check(&t, &g, &params, q)?;
    let mut r = Report::new("smoothness", vec!["kappa", "norm", "model", "ratio"]);
    r.config("d", d);
    r.config("alpha", join(&params.alpha));
    r.config("p", params.p);
    r.config("q", q);
    r.config("theta", params.theta.to_string());
    r.config("K", a.level);
    r.config("function", format!("{:?}", a.function).to_lowercase());
    r.summary("seminorm", seminorm);
    for (mask, v) in parts {
        r.summary(&format!("seminorm_J{mask}"), v);
    }
    let m = max_ratio(&rows);
    r.summary("max_ratio", m);
    r.constants.insert("max_ratio".into(), m);
    if a.function == TestFunction::Extremal && params.theta != Theta::Infinite {
        r.warnings.push("the extremal profile has bounded block ratios, a theta = inf profile".into());
    }
    for row in rows {
        r.row(vec![row.kappa.to_string().into(), row.norm.into(), row.model.into(), row.ratio.into()]);
    }
    Ok(r)
}

pub fn widths(a: &WidthArgs, seed: u64) -> Result<Report> {
    let d = resolve_dim(a.d, &a.alpha)?;
    let params = smoothness_params(&a.alpha, a.p, a.theta)?;
    let level = a.level.unwrap_or(match d {
        1 => 8,
        2 => 6,
        _ => 4,
    });
    let nodes = 2 * params.degree().as_slice().iter().max().copied().unwrap_or(0) + 2;
    check_grid(d, level, nodes)?;
    let cfg = WidthExperimentConfig {
        params: params.clone(),
        q: a.q,
        level,
        r_min: a.r.0,
        r_max: a.r.1,
        trials: a.trials,
        seed,
    };
    let rep = run_width_experiment(&cfg)?;
    let mut r = Report::new("widths", vec!["r", "n", "error", "grid_error", "model", "ratio"]);
    r.config("d", d);
    r.config("alpha", join(&params.alpha));
    r.config("p", params.p);
    r.config("q", a.q);
    r.config("theta", params.theta.to_string());
    r.config("K", level);
    r.config("r", format!("{}..{}", a.r.0, a.r.1));
    r.config("trials", a.trials);
    r.summary("config_hash", format!("{:016x}", rep.config_hash));
    r.summary("beta", join(&rep.beta));
    r.summary("analytic_tail", rep.analytic_tail);
    if let Some(e) = rep.exponents {
        r.summary("case", format!("{:?}", e.case).to_lowercase());
        r.summary("predicted_rate", -e.rate);
        r.summary("predicted_log_exponent", e.log_exponent);
        if e.case == WidthCase::Budget {
            match budget_beta(&params, a.q).and_then(|b| budget_plan(a.r.1, &b, &params, a.q)) {
                Ok(plan) => {
                    r.summary("budget_total", plan.total());
                    r.summary("budget_audit", plan.audit());
                }
                Err(e) => r.warnings.push(format!("budget plan: {e}")),
            }
        }
    }
    if let Some(fit) = rep.fit {
        r.summary("slope", fit.slope);
        r.summary("log_exponent", fit.log_exponent);
        r.summary("intercept", fit.intercept);
        r.summary("rms", fit.rms);
    }
    r.warnings.extend(rep.warnings);
    let worst = rep.rows.iter().map(|x| x.ratio).fold(0.0, f64::max);
    r.constants.insert("max_ratio".into(), worst);
    for row in rep.rows {
        r.row(vec![
            row.r.into(),
            row.n.into(),
            row.error.into(),
            row.grid_error.into(),
            row.model.into(),
            row.ratio.into(),
        ]);
    }
    Ok(r)
}

pub fn cross_count(a: &CrossArgs) -> Result<Report> {
    let d = a
        .d
        .or(a.beta.as_ref().map(Vec::len))
        .or(a.alpha.as_ref().map(Vec::len))
        .unwrap_or(2);
    let beta = a.beta.clone().unwrap_or_else(|| vec![1.0; d]);
    let alpha = a.alpha.clone().unwrap_or_else(|| vec![1.0; d]);
    ensure!(beta.len() == d && alpha.len() == d, "--d, --beta and --alpha must agree in length");
    ensure!(a.r.1 <= 40, "radius {} is too large", a.r.1);
    let deg = DegreeVector::uniform(d, a.l);
    let (_, c) = min_with_multiplicity(&beta);
    let counting = counting_ratios(&beta, &alpha, a.r.1)?;
    let mut r = Report::new(
        "cross-count",
        vec![
            "r",
            "cardinality",
            "dimension",
            "dimension_ratio",
            "head_sum",
            "head_ratio",
            "tail_sum",
            "tail_ratio",
        ],
    );
    r.config("d", d);
    r.config("beta", join(&beta));
    r.config("alpha", join(&alpha));
    r.config("l", a.l);
    r.config("r", format!("{}..{}", a.r.0, a.r.1));
    let mut dims = Vec::new();
    for row in counting.iter().filter(|x| x.r >= a.r.0) {
        let rf = row.r as f64;
        let card = enum_cross(&CrossParams::new(beta.clone(), row.r)?).len();
        let dim = cross_dimension(&beta, rf, &deg);
        let ratio = dim as f64 / (rf.exp2() * rf.powi(c as i32 - 1));
        dims.push(ratio);
        r.row(vec![
            row.r.into(),
            card.into(),
            dim.into(),
            ratio.into(),
            row.head_sum.into(),
            row.head_ratio().into(),
            row.tail_sum.into(),
            row.tail_ratio().into(),
        ]);
    }
    let band = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    if !dims.is_empty() {
        r.summary("dimension_band", band(&dims));
        r.constants.insert("dimension_band".into(), band(&dims));
    }
    Ok(r)
}
