use hawkes_core::kernels::KernelSpec;
use hawkes_core::limits::{
    classify_regime, estimate_rv_index, fclt_sample, flln_report, geometric_probes, non_increasing,
    report_table, rescale, second_order_fclt_sample, strongly_critical_limit_variance,
    strongly_critical_mean_deviation, weakly_critical_report, write_report_csv, PsiStar,
    RegimeClass, ReportRow, RescaleMode, ScalingSpec,
};
use hawkes_core::math::gamma;
use hawkes_core::metrics::anderson_darling_normal;
use hawkes_core::quad;
use hawkes_core::simulate::{
    intensity, path_statistics, replica_rng, simulate_cluster, EventPath, DEFAULT_EVENT_CAP,
};
use hawkes_core::volterra::{solve_resolvent, variance_count, Grid};
use hawkes_core::HawkesError;
use proptest::prelude::*;

#[test]
fn classification_examples() {
    let sub = classify_regime(&KernelSpec::exponential(0.5, 1.0).unwrap()).unwrap();
    assert_eq!(sub.class, RegimeClass::Subcritical);
    assert_eq!(sub.psi_star, Some(PsiStar::Zero));

    let weak = classify_regime(&KernelSpec::exponential(1.0, 1.0).unwrap()).unwrap();
    assert_eq!(weak.class, RegimeClass::WeaklyCritical);
    assert!((weak.sigma.unwrap() - 1.0).abs() < 1e-10);

    let strong = classify_regime(&KernelSpec::mittag_leffler(0.5, 1.0).unwrap()).unwrap();
    assert_eq!(strong.class, RegimeClass::StronglyCritical);
    assert_eq!(strong.alpha, Some(0.5));

    let mix =
        classify_regime(&KernelSpec::exponential_mixture(vec![0.5, 0.5], vec![2.0, 0.25]).unwrap())
            .unwrap();
    assert_eq!(mix.class, RegimeClass::WeaklyCritical);
    assert!((mix.sigma.unwrap() - 2.25).abs() < 1e-9);

    assert!(matches!(
        classify_regime(&KernelSpec::exponential(1.5, 1.0).unwrap()),
        Err(HawkesError::Regime(_))
    ));
}

#[test]
fn rescale_examples() {
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let grid = Grid::with_cells(1.0, 10).unwrap();
    for n in [1.0, 7.0, 100.0] {
        let empty = EventPath::empty(n).unwrap();
        let r = rescale(&empty, &k, 1.0, None, n, RescaleMode::Subcritical, &grid).unwrap();
        assert!(r.count.iter().all(|&v| v == 0.0));
    }

    let n = 20.0;
    let one = EventPath::new(n, vec![n / 2.0]).unwrap();
    let r = rescale(&one, &k, 1.0, None, n, RescaleMode::Critical, &grid).unwrap();
    assert_eq!(*r.count.last().unwrap(), 1.0 / (n * n));

    let short = EventPath::empty(5.0).unwrap();
    assert!(matches!(
        rescale(&short, &k, 1.0, None, 10.0, RescaleMode::Subcritical, &grid),
        Err(HawkesError::Horizon { .. })
    ));

    let ml = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let table = report_table(&ml, 1.0, 100.0).unwrap();
    let want = 100f64.powf(1.5) / gamma(2.5);
    assert!((table.i2_r_at(100.0).unwrap() / want - 1.0).abs() < 1e-3);
    let path = EventPath::new(100.0, vec![10.0, 60.0]).unwrap();
    let r = rescale(
        &path,
        &ml,
        1.0,
        Some(&table),
        100.0,
        RescaleMode::StronglyCritical,
        &grid,
    )
    .unwrap();
    assert_eq!(
        *r.count.last().unwrap(),
        2.0 / table.i2_r_at(100.0).unwrap()
    );
}

#[test]
fn flln_subcritical_deviation_shrinks() {
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let rows = flln_report(&k, 1.0, &[8.0, 64.0], 1_000, 1.0, 3).unwrap();
    assert!(rows[1].estimate < rows[0].estimate, "{rows:?}");
    assert_eq!(rows[1].pass, Some(true));
}

#[test]
fn flln_at_unit_scale_is_the_raw_deviation() {
    // with n = 1 the statistic is sup_t |N(t) − 2t| of the unscaled path
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let rows = flln_report(&k, 1.0, &[1.0], 2, 3.0, 17).unwrap();
    let mut manual = 0.0;
    for r in 0..2 {
        let mut rng = replica_rng(17, r);
        let p = simulate_cluster(&k, 1.0, 3.0, &mut rng, DEFAULT_EVENT_CAP).unwrap();
        let mut d = 0.0f64;
        for (i, &tau) in p.events().iter().enumerate() {
            d = d
                .max((i as f64 - 2.0 * tau).abs())
                .max((i as f64 + 1.0 - 2.0 * tau).abs());
        }
        d = d.max((p.len() as f64 - 6.0).abs());
        manual += d / 2.0;
    }
    assert!((rows[0].estimate - manual).abs() < 1e-12);
}

#[test]
fn flln_rejects_weakly_critical_kernels() {
    let k = KernelSpec::exponential(1.0, 1.0).unwrap();
    assert!(matches!(
        flln_report(&k, 1.0, &[8.0], 10, 1.0, 0),
        Err(HawkesError::Regime(_))
    ));
}

#[test]
fn strongly_critical_mean_deviation_is_the_linear_term() {
    // E N(nt)/I²_R(n) − t^{3/2} = n t / I²_R(n) = Γ(5/2) t / √n for ML(1/2, 1)
    let k = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let devs: Vec<f64> = [16.0, 32.0, 64.0, 128.0, 256.0]
        .iter()
        .map(|&n| strongly_critical_mean_deviation(&k, 1.0, n, 1.0).unwrap())
        .collect();
    for (d, n) in devs.iter().zip([16.0f64, 32.0, 64.0, 128.0, 256.0]) {
        let want = gamma(2.5) / n.sqrt();
        assert!((d / want - 1.0).abs() < 5e-3, "n={n} dev={d} want={want}");
    }
    assert!(devs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn subcritical_fluctuation_variance_and_skewness() {
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let s = fclt_sample(&k, 1.0, 200.0, 1.0, 10_000, 4).unwrap();
    assert!(
        (s.variance() / 8.0 - 1.0).abs() < 0.1,
        "var={}",
        s.variance()
    );
    // N(nt) is compound Poisson over Borel(1/2) cluster sizes S, E S² = 8, E S³ = 64, so its
    // skewness is 200·64/(200·8)^{3/2} = 0.2; the Gaussian limit is only approached at rate n^{-1/2}
    let (m, sd) = (s.mean(), s.variance().sqrt());
    let skew = s
        .values()
        .iter()
        .map(|x| ((x - m) / sd).powi(3))
        .sum::<f64>()
        / s.len() as f64;
    assert!((skew - 0.2).abs() < 0.075, "skew={skew}");
    let ad = anderson_darling_normal(&s, 0.01).unwrap();
    eprintln!(
        "Anderson-Darling statistic {} (critical {})",
        ad.statistic, ad.critical
    );
}

#[test]
fn fluctuations_vanish_at_time_zero() {
    for k in [
        KernelSpec::exponential(0.5, 1.0).unwrap(),
        KernelSpec::mittag_leffler(0.5, 1.0).unwrap(),
    ] {
        let s = fclt_sample(&k, 1.0, 50.0, 0.0, 100, 1).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }
    let ml = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let spec = ScalingSpec::for_kernel(&ml).unwrap();
    let s = second_order_fclt_sample(&ml, 1.0, &spec, 50.0, 0.0, 100, 1).unwrap();
    assert!(s.values().iter().all(|&v| v == 0.0));
}

#[test]
fn strongly_critical_fluctuation_variance_matches_exact_moment() {
    // finite-n oracle: Var N(nt) from the resolvent variance formula
    let k = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let n = 100.0;
    let s = fclt_sample(&k, 1.0, n, 1.0, 4_000, 8).unwrap();
    let table = report_table(&k, 1.0, n).unwrap();
    let norm = table.i2_r_at(n).unwrap();
    let exact = n * n * norm.powi(-3) * variance_count(&table, 1.0, n).unwrap();
    eprintln!(
        "sample var {} exact {} limit {}",
        s.variance(),
        exact,
        strongly_critical_limit_variance(0.5, 1.0, 1.0)
    );
    assert!((s.variance() / exact - 1.0).abs() < 0.1);
}

#[test]
fn weakly_critical_moments_match_cir() {
    let k = KernelSpec::exponential(1.0, 1.0).unwrap();
    let rows = weakly_critical_report(&k, 1.0, &[100.0], 10_000, 1.0, 5).unwrap();
    let get = |name: &str| rows.iter().find(|r| r.statistic == name).unwrap();
    assert!((get("Lambda_mean").estimate - 1.0).abs() < 0.1);
    assert!((get("N_mean").estimate - 0.5).abs() < 0.05);
    assert!((get("Lambda_var").estimate / 0.5 - 1.0).abs() < 0.15);
    assert!(matches!(
        weakly_critical_report(
            &KernelSpec::exponential(0.5, 1.0).unwrap(),
            1.0,
            &[10.0],
            10,
            1.0,
            0
        ),
        Err(HawkesError::Regime(_))
    ));
}

#[test]
fn second_order_drift_for_small_index() {
    let k = KernelSpec::mittag_leffler(0.25, 1.0).unwrap();
    let spec = ScalingSpec::for_kernel(&k).unwrap();
    assert_eq!(spec.gamma3, 0.0);
    let s = second_order_fclt_sample(&k, 1.0, &spec, 100.0, 1.0, 4_000, 6).unwrap();
    assert!(
        (s.mean() - 1.0).abs() < 3.0 * s.stderr() + 5e-3,
        "mean={} se={}",
        s.mean(),
        s.stderr()
    );
    assert!((spec.mean_target(1.0, 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn second_order_variance_target_uses_beta_integral() {
    let k = KernelSpec::mittag_leffler(0.5, 2.0).unwrap();
    let spec = ScalingSpec::for_kernel(&k).unwrap();
    let integral = quad::adaptive(|s| (1.0 - s) * s.sqrt(), 0.0, 1.0, 1e-14, 1e-12).value;
    let want = 8.0 * 1.5 / gamma(2.5).powi(3) * integral;
    assert!((spec.variance_target(1.0, 1.0) / want - 1.0).abs() < 1e-9);
    assert_eq!(spec.mean_target(1.0, 1.0), 0.0);
    assert!(ScalingSpec::for_kernel(&KernelSpec::exponential(1.0, 1.0).unwrap()).is_err());
}

#[test]
fn rv_index_probes() {
    let probes = geometric_probes(1.0, 1e3, 20);
    let p = estimate_rv_index(|t| t.powf(1.5), &probes).unwrap();
    assert!((p.index - 1.5).abs() < 1e-6);

    let k = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let table = solve_resolvent(&k, &Grid::new(1e3, 0.25).unwrap(), 1.0).unwrap();
    let p = estimate_rv_index(|t| table.i2_r_at(t).unwrap(), &probes).unwrap();
    assert!((p.index - 1.5).abs() < 0.02, "index={}", p.index);

    // the correction t^{-1/4} biases the slope by about t^{-1/4}/4, so probe far out
    let p = estimate_rv_index(
        |t| t.sqrt() * (1.0 + t.powf(-0.25)),
        &geometric_probes(1e6, 1e9, 10),
    )
    .unwrap();
    assert!((p.index - 0.5).abs() < 0.02);

    assert!(matches!(
        estimate_rv_index(|_| -1.0, &probes),
        Err(HawkesError::Domain(_))
    ));
}

#[test]
fn report_csv_layout() {
    let rows = vec![
        ReportRow {
            n: 8.0,
            t: 1.0,
            statistic: "x".into(),
            estimate: 0.5,
            target: Some(1.0),
            stderr: None,
            pass: Some(false),
        },
        ReportRow {
            n: 16.0,
            t: 1.0,
            statistic: "x".into(),
            estimate: 0.25,
            target: None,
            stderr: Some(0.1),
            pass: None,
        },
    ];
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text,
        "# schema=1\nn,t,statistic,estimate,target,stderr,pass\n8,1,x,5e-1,1e0,NA,false\n16,1,x,2.5e-1,NA,1e-1,NA\n"
    );
    assert!(non_increasing(&[1.0, 1.05, 0.9], 0.1));
    assert!(!non_increasing(&[1.0, 1.2], 0.1));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn class_is_invariant_under_time_scaling(m in 0.05f64..1.0, b1 in 0.01f64..50.0, b2 in 0.01f64..50.0, critical: bool) {
        let m = if critical { 1.0 } else { m.min(0.99) };
        let a = classify_regime(&KernelSpec::exponential(m, b1).unwrap()).unwrap();
        let b = classify_regime(&KernelSpec::exponential(m, b2).unwrap()).unwrap();
        prop_assert_eq!(a.class, b.class);
    }

    #[test]
    fn unit_scale_critical_rescaling_is_the_identity(seed in 0u64..1000, horizon in 0.5f64..6.0) {
        let k = KernelSpec::exponential(0.9, 1.3).unwrap();
        let mut rng = replica_rng(seed, 0);
        let p = simulate_cluster(&k, 1.0, horizon, &mut rng, DEFAULT_EVENT_CAP).unwrap();
        let grid = Grid::with_cells(horizon, 12).unwrap();
        let r = rescale(&p, &k, 1.0, None, 1.0, RescaleMode::Critical, &grid).unwrap();
        for (j, t) in grid.nodes().enumerate() {
            let s = path_statistics(&p, &k, 1.0, t).unwrap();
            prop_assert_eq!(r.count[j], s.count);
            prop_assert_eq!(r.compensator.as_ref().unwrap()[j], s.compensator);
            prop_assert_eq!(r.martingale.as_ref().unwrap()[j], s.martingale);
            prop_assert_eq!(r.intensity.as_ref().unwrap()[j], intensity(&p, &k, 1.0, t).unwrap());
        }
    }
}
