use hawkes_core::kernels::KernelSpec;
use hawkes_core::limits::{
    classify_regime, fclt_sample, flln_report, second_order_fclt_sample,
    strongly_critical_limit_variance, strongly_critical_mean_deviation, weakly_critical_report,
    RegimeClass, ReportRow, ScalingSpec, TREND_SLACK,
};
use hawkes_core::math::gamma;
use hawkes_core::metrics::{anderson_darling_normal, EmpiricalSample};
use hawkes_core::simulate::{run_replicas, simulate_cluster, DEFAULT_EVENT_CAP};
use hawkes_core::volterra::{
    char_functional, mean_count, resolvent_gap, solve_fourier_laplace, solve_resolvent,
    FunctionalSpec, Grid,
};
use hawkes_core::Result;
use num_complex::Complex64;

use crate::config::{Experiment, Resolved};

fn row(n: f64, t: f64, statistic: &str, estimate: f64) -> ReportRow {
    ReportRow {
        n,
        t,
        statistic: statistic.to_string(),
        estimate,
        target: None,
        stderr: None,
        pass: None,
    }
}

fn with_target(mut r: ReportRow, target: Option<f64>, rel_tol: f64) -> ReportRow {
    r.target = target;
    r.pass = target.map(|x| (r.estimate - x).abs() <= rel_tol * x.abs());
    r
}

/// Closed-form `(I_R(t), I²_R(t))` where one is known.
fn closed_form_integrals(k: &KernelSpec, t: f64) -> Option<(f64, f64)> {
    match k {
        KernelSpec::MittagLeffler { alpha, beta } => Some((
            beta * t.powf(*alpha) / gamma(alpha + 1.0),
            beta * t.powf(alpha + 1.0) / gamma(alpha + 2.0),
        )),
        KernelSpec::Exponential { m, beta } if *m == 1.0 => Some((beta * t, 0.5 * beta * t * t)),
        KernelSpec::Exponential { m, beta } => {
            let c = m / (1.0 - m);
            let r = beta * (1.0 - m);
            let i = c * -(-r * t).exp_m1();
            Some((i, c * (t + (-r * t).exp_m1() / r)))
        }
        _ => None,
    }
}

fn resolvent(cfg: &Resolved) -> Result<Vec<ReportRow>> {
    let grid = Grid::new(cfg.horizon, cfg.step)?;
    let tab = solve_resolvent(&cfg.kernel, &grid, cfg.mu0)?;
    let mut rows = Vec::new();
    for j in 1..=10 {
        let t = cfg.horizon * j as f64 / 10.0;
        let exact = closed_form_integrals(&cfg.kernel, t);
        rows.push(with_target(
            row(1.0, t, "I_R", tab.i_r_at(t)?),
            exact.map(|e| e.0),
            1e-3,
        ));
        rows.push(with_target(
            row(1.0, t, "I2_R", tab.i2_r_at(t)?),
            exact.map(|e| e.1),
            1e-3,
        ));
        let mean = exact.map(|e| cfg.mu0 * (t + e.1));
        rows.push(with_target(
            row(1.0, t, "mean_count", mean_count(&tab, cfg.mu0, t)?),
            mean,
            1e-3,
        ));
    }
    Ok(rows)
}

fn functional(cfg: &Resolved) -> Result<Vec<ReportRow>> {
    let t = cfg.horizon;
    let grid = Grid::new(t, cfg.step)?;
    let u = cfg.frequency;
    let spec = FunctionalSpec::new(t).with_constant_f(Complex64::new(0.0, u));
    let tab = solve_resolvent(&cfg.kernel, &grid, cfg.mu0)?;
    let sol = solve_fourier_laplace(&cfg.kernel, &spec, &grid)?;
    let phi = char_functional(&sol, &spec, &tab, cfg.mu0, grid.end())?;
    let counts: Result<Vec<f64>> = run_replicas(cfg.seed, cfg.replicas, |_, rng| {
        Ok(simulate_cluster(&cfg.kernel, cfg.mu0, t, rng, DEFAULT_EVENT_CAP)?.len() as f64)
    })
    .into_iter()
    .collect();
    let counts = counts?;
    let mut rows = Vec::new();
    for (name, part, target) in [
        ("Re_char_fn", (|x: f64| x.cos()) as fn(f64) -> f64, phi.re),
        ("Im_char_fn", |x: f64| x.sin(), phi.im),
    ] {
        let s = EmpiricalSample::new(counts.iter().map(|c| part(u * c)).collect())?;
        let se = s.stderr();
        rows.push(ReportRow {
            n: 1.0,
            t,
            statistic: name.into(),
            estimate: s.mean(),
            target: Some(target),
            stderr: Some(se),
            pass: Some((s.mean() - target).abs() < 3.0 * se.max(f64::MIN_POSITIVE)),
        });
    }
    Ok(rows)
}

fn fclt(cfg: &Resolved) -> Result<Vec<ReportRow>> {
    let label = classify_regime(&cfg.kernel)?;
    let t = cfg.horizon;
    let (target, tol) = match label.class {
        RegimeClass::StronglyCritical => (
            strongly_critical_limit_variance(label.alpha.unwrap_or(0.0), cfg.mu0, t),
            0.15,
        ),
        _ => (cfg.mu0 * t / (1.0 - label.m).powi(3), 0.10),
    };
    let mut rows = Vec::new();
    for (i, &n) in cfg.scales.iter().enumerate() {
        let s = fclt_sample(
            &cfg.kernel,
            cfg.mu0,
            n,
            t,
            cfg.replicas,
            cfg.seed.wrapping_add(i as u64),
        )?;
        let mut r = with_target(row(n, t, "variance", s.variance()), Some(target), tol);
        r.stderr = Some(s.variance_stderr());
        rows.push(r);
        if let Ok(ad) = anderson_darling_normal(&s, 0.01) {
            let mut r = row(n, t, "anderson_darling", ad.statistic);
            r.target = Some(ad.critical);
            r.pass = Some(ad.pass);
            rows.push(r);
        }
    }
    Ok(rows)
}

fn strongly_critical(cfg: &Resolved) -> Result<Vec<ReportRow>> {
    let t = cfg.horizon;
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut prev: Option<f64> = None;
    for &n in &cfg.scales {
        let d = strongly_critical_mean_deviation(&cfg.kernel, cfg.mu0, n, t)?;
        let mut r = row(n, t, "mean_sup_deviation", d);
        r.pass = prev.map(|p| d < p);
        prev = Some(d);
        rows.push(r);
    }
    if let Ok(spec) = ScalingSpec::for_kernel(&cfg.kernel) {
        for (i, &n) in cfg.scales.iter().enumerate() {
            let s = second_order_fclt_sample(
                &cfg.kernel,
                cfg.mu0,
                &spec,
                n,
                t,
                cfg.replicas,
                cfg.seed.wrapping_add(i as u64),
            )?;
            let mut m = row(n, t, "second_order_mean", s.mean());
            m.stderr = Some(s.stderr());
            let target = spec.mean_target(cfg.mu0, t);
            m.target = Some(target);
            m.pass = Some((s.mean() - target).abs() < 3.0 * s.stderr());
            rows.push(m);
            let mut v = with_target(
                row(n, t, "second_order_variance", s.variance()),
                Some(spec.variance_target(cfg.mu0, t)),
                0.15,
            );
            v.stderr = Some(s.variance_stderr());
            rows.push(v);
        }
    }
    Ok(rows)
}

fn rates(cfg: &Resolved) -> Result<Vec<ReportRow>> {
    let grid = Grid::new(cfg.horizon, cfg.step)?;
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &n in &cfg.scales {
        let (sup, l2) = resolvent_gap(&cfg.kernel, n, cfg.horizon, &grid)?;
        let trend = |now: f64, before: f64| now <= before * (1.0 + TREND_SLACK);
        let mut a = row(n, cfg.horizon, "resolvent_sup_gap", sup);
        let mut b = row(n, cfg.horizon, "resolvent_l2_gap", l2);
        if let Some((ps, pl)) = prev {
            a.pass = Some(trend(sup, ps));
            b.pass = Some(trend(l2, pl));
        }
        prev = Some((sup, l2));
        rows.push(a);
        rows.push(b);
    }
    Ok(rows)
}

pub fn execute(cfg: &Resolved) -> Result<Vec<ReportRow>> {
    match cfg.experiment {
        Experiment::Resolvent => resolvent(cfg),
        Experiment::Functional => functional(cfg),
        Experiment::Flln => flln_report(
            &cfg.kernel,
            cfg.mu0,
            &cfg.scales,
            cfg.replicas,
            cfg.horizon,
            cfg.seed,
        ),
        Experiment::Fclt => fclt(cfg),
        Experiment::WeaklyCritical => weakly_critical_report(
            &cfg.kernel,
            cfg.mu0,
            &cfg.scales,
            cfg.replicas,
            cfg.horizon,
            cfg.seed,
        ),
        Experiment::StronglyCritical => strongly_critical(cfg),
        Experiment::Rates => rates(cfg),
    }
}
