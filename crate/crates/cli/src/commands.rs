//! One pipeline per subcommand. Each returns its artifacts without touching
//! the filesystem.

use std::f64::consts::PI;

use rayon::prelude::*;
use shapelab_core::distances::distance_report;
use shapelab_core::elliptic::{boundary_traces, solve_spectrum_with, solve_torsion};
use shapelab_core::energy::{evaluate, EnergyParams};
use shapelab_core::mesh::{assemble, triangulate};
use shapelab_core::optimizer::{key_estimate_check, minimize, selection_step, stability_sweep, TraceRow};
use shapelab_core::shapegrad::{fb_residual, field_rng, gradient_check, random_domain, random_field};
use shapelab_core::StarDomain;

use crate::config::ExperimentConfig;
use crate::output::{gnuplot_script, num, Artifacts, Header, Plot, Table};
use crate::CliError;

pub struct Context {
    pub cfg: ExperimentConfig,
    pub h: f64,
    pub header: Header,
    pub plot: bool,
}

impl Context {
    fn energy(&self) -> &EnergyParams {
        &self.cfg.energy
    }

    fn domain(&self) -> Result<StarDomain, CliError> {
        self.cfg.domain.clone().ok_or_else(|| CliError::Validation("no domain given".into()))
    }

    fn plot(&self, out: &mut Artifacts, stem: &str, plots: &[Plot]) {
        if self.plot {
            out.text(&format!("{stem}.gp"), gnuplot_script(stem, plots));
        }
    }
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

pub fn eig(ctx: &Context, mesh_dump: bool) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    let sys = assemble(triangulate(&d, ctx.h)?)?;
    let s = solve_spectrum_with(&sys, ctx.energy().gap_min)?;
    let mut t = Table::new(
        "eig.csv",
        &["h", "vertices", "triangles", "lambda1", "lambda2", "residual1", "residual2", "iterations", "gap_ok"],
    );
    t.push(vec![
        num(ctx.h),
        sys.mesh.n_vertices().to_string(),
        sys.mesh.triangles.len().to_string(),
        num(s.lambda1),
        num(s.lambda2),
        num(s.residual1),
        num(s.residual2),
        s.iterations.to_string(),
        flag(s.gap_ok),
    ]);
    let mut out = Artifacts {
        summary: format!("lambda1 = {:.6}\nlambda2 = {:.6}\n", s.lambda1, s.lambda2),
        ..Default::default()
    };
    out.table(&t, &ctx.header)?;
    if mesh_dump {
        let mut buf = ctx.header.render().into_bytes();
        sys.mesh.write_csv(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
        out.files.push(("mesh.csv".into(), buf));
    }
    Ok(out)
}

pub fn torsion(ctx: &Context) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    let sys = assemble(triangulate(&d, ctx.h)?)?;
    let w = solve_torsion(&sys)?;
    let mut t = Table::new("torsion.csv", &["h", "tor", "dirichlet_energy", "integral", "identity_gap"]);
    t.push(vec![num(ctx.h), num(w.tor), num(w.dirichlet_energy), num(w.integral), num(w.identity_gap())]);
    let mut out = Artifacts {
        summary: format!("tor = {:.6}\nidentity_gap = {:.3e}\n", w.tor, w.identity_gap()),
        ..Default::default()
    };
    out.table(&t, &ctx.header)?;
    Ok(out)
}

pub fn energy(ctx: &Context) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    let r = evaluate(&d, ctx.energy(), ctx.h)?;
    let mut t = Table::new(
        "energy.csv",
        &[
            "lambda1",
            "lambda2",
            "tor",
            "vol",
            "f_pen",
            "d0",
            "d1",
            "asym",
            "d_star_sq",
            "h_val",
            "e_base",
            "f_total",
            "gap_ok",
        ],
    );
    let ds = r.distances;
    t.push(vec![
        num(r.lambda1),
        num(r.lambda2),
        num(r.tor),
        num(r.vol),
        num(r.f_pen),
        num(ds.d0),
        num(ds.d1),
        num(ds.asym),
        num(ds.d_star_sq),
        num(r.h_val),
        num(r.e_base),
        num(r.f_total),
        flag(r.gap_ok),
    ]);
    let mut out =
        Artifacts { summary: format!("e_base = {:.6}\nf_total = {:.6}\n", r.e_base, r.f_total), ..Default::default() };
    out.table(&t, &ctx.header)?;
    Ok(out)
}

pub fn distances(ctx: &Context) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    let sys = assemble(triangulate(&d, ctx.h)?)?;
    let s = solve_spectrum_with(&sys, ctx.energy().gap_min)?;
    let r = distance_report(&d, &sys, &s, ctx.energy().c0, None)?;
    let mut t = Table::new("distances.csv", &["tag", "d0", "d1", "asym", "d_star_sq"]);
    t.push(vec!["domain".into(), num(r.d0), num(r.d1), num(r.asym), num(r.d_star_sq)]);
    let mut out = Artifacts {
        summary: format!(
            "d0 = {:.6e}\nd1 = {:.6e}\nasym = {:.6e}\nd_star_sq = {:.6e}\n",
            r.d0, r.d1, r.asym, r.d_star_sq
        ),
        ..Default::default()
    };
    out.table(&t, &ctx.header)?;
    Ok(out)
}

pub fn hadamard_check(ctx: &Context) -> Result<Artifacts, CliError> {
    let c = ctx.cfg.check;
    let mut rng = field_rng(ctx.cfg.seed.unwrap_or(0));
    // draws happen up front so the output does not depend on scheduling
    let domains: Vec<StarDomain> = match &ctx.cfg.domain {
        Some(d) => vec![d.clone()],
        None => (0..c.domains)
            .map(|_| random_domain(&mut rng, c.amplitude, c.kmax, ctx.energy().v))
            .collect::<Result<_, _>>()?,
    };
    let mut jobs = Vec::new();
    for (i, d) in domains.iter().enumerate() {
        for j in 0..c.fields {
            jobs.push((i, j, d, random_field(&mut rng, d.r0(), c.kmax)));
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(i, j, d, f)| gradient_check(d, f, ctx.h, c.step).map(|rows| (*i, *j, rows)))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new("hadamard.csv", &["domain", "field", "functional", "analytic", "fd", "rel_err", "order"]);
    let (mut worst_err, mut worst_order) = (0.0f64, f64::INFINITY);
    for (i, j, rows) in &results {
        for r in rows {
            worst_err = worst_err.max(r.rel_err);
            worst_order = worst_order.min(r.order);
            t.push(vec![
                i.to_string(),
                j.to_string(),
                r.functional.name().into(),
                num(r.analytic),
                num(r.fd[2]),
                num(r.rel_err),
                num(r.order),
            ]);
        }
    }
    let mut out = Artifacts {
        summary: format!("checks = {}\nmax_rel_err = {worst_err:.3e}\nmin_order = {worst_order:.3}\n", t_len(&results)),
        ..Default::default()
    };
    out.table(&t, &ctx.header)?;
    ctx.plot(
        &mut out,
        "hadamard",
        &[Plot { table: "hadamard.csv".into(), x: 0, ys: vec![(6, "points")], logy: true, xlabel: "check" }],
    );
    Ok(out)
}

fn t_len<T>(r: &[(usize, usize, Vec<T>)]) -> usize {
    r.iter().map(|x| x.2.len()).sum()
}

pub fn fb_residual_cmd(ctx: &Context) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    let sys = assemble(triangulate(&d, ctx.h)?)?;
    let s = solve_spectrum_with(&sys, ctx.energy().gap_min)?;
    let w = solve_torsion(&sys)?;
    let r = fb_residual(&boundary_traces(&sys, &s, &w), ctx.energy());
    let mut t = Table::new("fb.csv", &["theta", "residual"]);
    for (th, q) in r.theta.iter().zip(&r.residual) {
        t.push(vec![num(*th), num(*q)]);
    }
    let mut s_t = Table::new("fb_summary.csv", &["a0", "sup", "cv"]);
    s_t.push(vec![num(r.a0), num(r.sup), num(r.cv)]);
    let mut out = Artifacts {
        summary: format!("a0 = {:.6}\nsup = {:.3e}\ncv = {:.4}\n", r.a0, r.sup, r.cv),
        ..Default::default()
    };
    out.table(&t, &ctx.header)?;
    out.table(&s_t, &ctx.header)?;
    ctx.plot(
        &mut out,
        "fb",
        &[Plot { table: "fb.csv".into(), x: 1, ys: vec![(2, "lines")], logy: false, xlabel: "theta" }],
    );
    Ok(out)
}

pub fn stability_sweep_cmd(ctx: &Context) -> Result<Artifacts, CliError> {
    let g = &ctx.cfg.sweep;
    if g.ks.is_empty() || g.ts.is_empty() {
        return Err(CliError::Validation("sweep needs at least one k and one t".into()));
    }
    let s = stability_sweep(&g.ks, &g.ts, ctx.energy(), ctx.h)?;
    let mut t = Table::new("sweep.csv", &["k", "t", "deficit", "d0", "d1", "d_star_sq"]);
    for r in &s.rows {
        t.push(vec![r.k.to_string(), num(r.t), num(r.deficit), num(r.d0), num(r.d1), num(r.d_star_sq)]);
    }
    let t_max = g.ts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let deficit = |k: u32, t: f64| s.rows.iter().find(|r| r.k == k && (r.t - t).abs() < 1e-15).map(|r| r.deficit);
    let mut fits = Table::new("fits.csv", &["k", "c", "ratio"]);
    let mut summary = String::new();
    for &(k, c) in &s.fits {
        let ratio = match (deficit(k, t_max), deficit(k, t_max / 2.0)) {
            (Some(a), Some(b)) => num(a / b),
            _ => String::new(),
        };
        summary.push_str(&format!("k = {k}: c = {c:.5} ratio = {ratio}\n"));
        fits.push(vec![k.to_string(), num(c), ratio]);
    }
    summary.push_str(&format!("min deficit / d_star_sq = {:.5}\n", s.min_ratio));
    let mut out = Artifacts { summary, ..Default::default() };
    out.table(&t, &ctx.header)?;
    out.table(&fits, &ctx.header)?;
    ctx.plot(
        &mut out,
        "sweep",
        &[Plot { table: "sweep.csv".into(), x: 2, ys: vec![(3, "points")], logy: true, xlabel: "t" }],
    );
    Ok(out)
}

pub fn key_estimate(ctx: &Context) -> Result<Artifacts, CliError> {
    let (inner, outer) = match (&ctx.cfg.inner, &ctx.cfg.outer) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Validation("key-estimate needs an inner and an outer domain".into())),
    };
    let r = key_estimate_check(inner, outer, ctx.h)?;
    let mut t = Table::new(
        "key_estimate.csv",
        &["lhs_const", "lhs_sign", "delta_tor", "delta_lambda", "rhs", "c_emp", "monotone"],
    );
    t.push(vec![
        num(r.lhs_const),
        num(r.lhs_sign),
        num(r.delta_tor),
        num(r.delta_lambda),
        num(r.rhs),
        num(r.c_emp),
        flag(r.monotone),
    ]);
    let mut out = Artifacts { summary: format!("rhs = {:.6}\nc_emp = {:.4}\n", r.rhs, r.c_emp), ..Default::default() };
    out.table(&t, &ctx.header)?;
    Ok(out)
}

fn trace_table(trace: &[TraceRow]) -> Table {
    let mut t = Table::new("trace.csv", &["iteration", "h", "objective", "grad_norm", "area", "d_star_sq", "step"]);
    for r in trace {
        t.push(vec![
            r.iteration.to_string(),
            num(r.h),
            num(r.objective),
            num(r.grad_norm),
            num(r.area),
            num(r.d_star_sq),
            num(r.step),
        ]);
    }
    t
}

fn trace_plot(ctx: &Context, out: &mut Artifacts) {
    ctx.plot(
        out,
        "trace",
        &[
            Plot { table: "trace.csv".into(), x: 1, ys: vec![(3, "linespoints")], logy: false, xlabel: "iteration" },
            Plot { table: "trace.csv".into(), x: 1, ys: vec![(4, "linespoints")], logy: true, xlabel: "iteration" },
        ],
    );
}

fn domain_toml(ctx: &Context, d: &StarDomain) -> Result<String, CliError> {
    let body = toml::to_string(d).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format!("{}{body}", ctx.header.render()))
}

pub fn minimize_cmd(ctx: &Context) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    let r = minimize(&d, ctx.energy(), &ctx.cfg.optimizer)?;
    let mut res = Table::new(
        "result.csv",
        &["lambda1", "tor", "vol", "d_star_sq", "e_base", "f_total", "iterations", "converged", "stalled"],
    );
    res.push(vec![
        num(r.report.lambda1),
        num(r.report.tor),
        num(r.report.vol),
        num(r.report.distances.d_star_sq),
        num(r.report.e_base),
        num(r.report.f_total),
        r.trace.len().to_string(),
        flag(r.converged),
        flag(r.stalled),
    ]);
    let mut out = Artifacts {
        summary: format!(
            "f_total = {:.6}\nlambda1 = {:.6}\narea = {:.6} (v = {:.6})\nconverged = {}\n",
            r.report.f_total,
            r.report.lambda1,
            r.report.vol,
            ctx.energy().v,
            r.converged
        ),
        ..Default::default()
    };
    out.table(&trace_table(&r.trace), &ctx.header)?;
    out.table(&res, &ctx.header)?;
    out.text("minimizer.toml", domain_toml(ctx, &r.domain)?);
    trace_plot(ctx, &mut out);
    Ok(out)
}

pub fn selection(ctx: &Context) -> Result<Artifacts, CliError> {
    let d = ctx.domain()?;
    if ctx.energy().tau <= 0.0 {
        return Err(CliError::Validation("selection needs tau > 0".into()));
    }
    let r = selection_step(&d, ctx.energy(), &ctx.cfg.optimizer)?;
    let cols = [
        "d_j",
        "c_nl",
        "h_scale",
        "e_seed",
        "e_minimizer",
        "e_ball",
        "deficit_seed",
        "deficit_minimizer",
        "d_star_minimizer",
        "floor_lambda",
        "floor_distance",
        "tol_a",
        "tol_b",
        "converged",
        "stalled",
        "verdict_a",
        "verdict_b",
    ];
    let mut t = Table::new("selection.csv", &cols);
    t.push(vec![
        num(r.d_j),
        num(r.c_nl),
        num(r.h_scale),
        num(r.e_seed),
        num(r.e_minimizer),
        num(r.e_ball),
        num(r.deficit_seed),
        num(r.deficit_minimizer),
        num(r.d_star_minimizer),
        num(r.floors.lambda),
        num(r.floors.distance),
        num(r.tol_a),
        num(r.tol_b),
        flag(r.converged),
        flag(r.stalled),
        flag(r.verdict_a),
        flag(r.verdict_b),
    ]);
    let verdict = |b: bool| if b { "pass" } else { "fail" };
    let mut out = Artifacts {
        summary: format!(
            "d_j = {:.5}\nd_star(minimizer) = {:.5}\ndeficit seed = {:.5}, minimizer = {:.5}\n\
             verdict A (deficits) = {}\nverdict B (distance) = {}\n",
            r.d_j,
            r.d_star_minimizer,
            r.deficit_seed,
            r.deficit_minimizer,
            verdict(r.verdict_a),
            verdict(r.verdict_b)
        ),
        ..Default::default()
    };
    out.table(&t, &ctx.header)?;
    out.table(&trace_table(&r.trace), &ctx.header)?;
    out.text("minimizer.toml", domain_toml(ctx, &r.minimizer)?);
    trace_plot(ctx, &mut out);
    Ok(out)
}

/// Default domain for commands that need a non-ball start.
pub fn default_seed(v: f64) -> StarDomain {
    let d = StarDomain::new(Default::default(), 1.0, vec![(2, 0.08, 0.0).into()]).expect("valid seed");
    d.with_area(v).unwrap_or(d)
}

pub fn unit_disk(v: f64) -> StarDomain {
    StarDomain::disk(Default::default(), (v / PI).sqrt()).expect("positive radius")
}
