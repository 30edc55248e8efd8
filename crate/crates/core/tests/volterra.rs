use approx::assert_relative_eq;
use hawkes_core::kernels::KernelSpec;
use hawkes_core::math::gamma;
use hawkes_core::volterra::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn exponential_resolvent_closed_form() {
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let grid = Grid::new(10.0, 1e-3).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let mut err = 0.0f64;
    for (j, t) in grid.nodes().enumerate() {
        err = err.max((tab.r()[j] - 0.5 * (-0.5 * t).exp()).abs());
    }
    assert!(err < 1e-6, "max error {err}");
}

#[test]
fn mittag_leffler_resolvent_closed_form() {
    let k = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let grid = Grid::new(10.0, 1e-3).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    assert_relative_eq!(
        tab.i_r_at(1.0).unwrap(),
        1.0 / gamma(1.5),
        max_relative = 1e-3
    );
    assert_relative_eq!(
        tab.i2_r_at(1.0).unwrap(),
        1.0 / gamma(2.5),
        max_relative = 1e-3
    );
    assert_relative_eq!(
        mean_count(&tab, 1.0, 1.0).unwrap(),
        1.0 + 1.0 / gamma(2.5),
        max_relative = 1e-3
    );
}

#[test]
fn mean_count_examples() {
    let grid = Grid::new(10.0, 1e-3).unwrap();
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let want = 4.0 - 2.0 * (1.0 - (-1.0f64).exp());
    assert_relative_eq!(
        mean_count(&tab, 1.0, 2.0).unwrap(),
        want,
        max_relative = 1e-6
    );
    let zero = solve_resolvent(&KernelSpec::zero(), &grid, 1.0).unwrap();
    assert_eq!(mean_count(&zero, 1.0, 10.0).unwrap(), 10.0);
    assert!(matches!(
        mean_count(&tab, 1.0, 11.0),
        Err(hawkes_core::HawkesError::OutOfRange { .. })
    ));
}

#[test]
fn table_invariants() {
    let grid = Grid::new(5.0, 1e-2).unwrap();
    for k in [
        KernelSpec::exponential(0.9, 2.0).unwrap(),
        KernelSpec::mittag_leffler(0.3, 1.0).unwrap(),
        KernelSpec::exponential_mixture(vec![0.5, 0.5], vec![2.0, 0.25]).unwrap(),
    ] {
        let tab = solve_resolvent(&k, &grid, 2.0).unwrap();
        assert!(tab.r().iter().all(|&r| r >= 0.0));
        assert!(tab.i_r().windows(2).all(|w| w[1] >= w[0]));
        assert!(tab.i2_r().windows(2).all(|w| w[1] >= w[0]));
        for (hm, y) in tab.h_mu().iter().zip(tab.i_r()) {
            assert_eq!(*hm, 2.0 * (1.0 + y));
        }
    }
    // trapezoid of R reproduces I_R for a smooth kernel
    let k = KernelSpec::exponential(0.9, 2.0).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let mut trap = 0.0;
    for j in 1..=grid.cells() {
        trap += 0.5 * grid.step() * (tab.r()[j] + tab.r()[j - 1]);
        assert!((trap - tab.i_r()[j]).abs() < 1e-4);
    }
}

#[test]
fn laplace_ir_examples() {
    let ml = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    assert_relative_eq!(laplace_ir(&ml, 4.0).unwrap(), 0.5, max_relative = 1e-14);
    let e = KernelSpec::exponential(0.5, 1.0).unwrap();
    assert!(laplace_ir(&e, 1e12).unwrap() < 1e-11);
    assert_relative_eq!(laplace_ir(&e, 1e-12).unwrap(), 1.0, max_relative = 1e-9);
    let sup = KernelSpec::exponential(1.5, 1.0).unwrap();
    assert!(matches!(
        laplace_ir(&sup, 0.1),
        Err(hawkes_core::HawkesError::Domain(_))
    ));
}

#[test]
fn laplace_ir_matches_solved_table() {
    // λ ∫ e^{-λt} I_R(t) dt, truncated where the integrand is negligible
    let k = KernelSpec::exponential_mixture(vec![0.3, 0.4], vec![1.0, 4.0]).unwrap();
    let grid = Grid::new(60.0, 1e-2).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let lambda = 0.7;
    let mut s = 0.0;
    for j in 1..=grid.cells() {
        let (a, b) = (grid.node(j - 1), grid.node(j));
        s += 0.5
            * (b - a)
            * (lambda * (-lambda * a).exp() * tab.i_r()[j - 1]
                + lambda * (-lambda * b).exp() * tab.i_r()[j]);
    }
    assert_relative_eq!(s, laplace_ir(&k, lambda).unwrap(), max_relative = 1e-4);
}

/// `φ^{*k}` for `φ = m β e^{-βt}`: `m^k β^k t^{k-1} e^{-βt} / (k-1)!`.
fn exp_conv_power(m: f64, beta: f64, k: u32, t: f64) -> f64 {
    let mut v = m * beta * (-beta * t).exp();
    for i in 1..k {
        v *= m * beta * t / i as f64;
    }
    v
}

#[test]
fn neumann_series_equivalence() {
    let grid = Grid::new(2.0, 1e-2).unwrap();
    for &(m, beta) in &[(0.5, 1.0), (0.9, 3.0)] {
        let k = KernelSpec::exponential(m, beta).unwrap();
        let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
        for (j, t) in grid.nodes().enumerate() {
            let series: f64 = (1..=25).map(|p| exp_conv_power(m, beta, p, t)).sum();
            assert!((tab.r()[j] - series).abs() < 1e-4, "m={m} t={t}");
        }
    }
    // mixture: convolution powers by fine trapezoid on [0,2]
    let k = KernelSpec::exponential_mixture(vec![0.4, 0.4], vec![1.0, 3.0]).unwrap();
    let fine = 2000;
    let hf = 2.0 / fine as f64;
    let phi: Vec<f64> = (0..=fine).map(|i| k.phi(i as f64 * hf).unwrap()).collect();
    let mut power = phi.clone();
    let mut total = phi.clone();
    for _ in 2..=25 {
        let mut next = vec![0.0; fine + 1];
        for i in 1..=fine {
            let mut s = 0.5 * (power[0] * phi[i] + power[i] * phi[0]);
            for l in 1..i {
                s += power[l] * phi[i - l];
            }
            next[i] = s * hf;
        }
        for i in 0..=fine {
            total[i] += next[i];
        }
        power = next;
    }
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    for j in 0..=grid.cells() {
        assert!(
            (tab.r()[j] - total[j * 10]).abs() < 1e-4,
            "mixture node {j}"
        );
    }
}

#[test]
fn regimes_reproduced() {
    // subcritical: I_R(∞) = m/(1-m)
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let tab = solve_resolvent(&k, &Grid::new(40.0, 1e-2).unwrap(), 1.0).unwrap();
    assert!((tab.i_r_at(40.0).unwrap() - 1.0).abs() < 1e-3);
    // weakly critical: I_R(T)/T → 1/σ
    let k = KernelSpec::exponential(1.0, 1.0).unwrap();
    let tab = solve_resolvent(&k, &Grid::new(200.0, 0.05).unwrap(), 1.0).unwrap();
    assert!((tab.i_r_at(200.0).unwrap() / 200.0 - 1.0).abs() < 1e-2);
    // strongly critical: I_R(t) Γ(1-α)Γ(1+α) Φ(t) → 1
    let k = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let tab = solve_resolvent(&k, &Grid::new(1000.0, 0.1).unwrap(), 1.0).unwrap();
    let t = 1000.0;
    let v = tab.i_r_at(t).unwrap() * gamma(0.5) * gamma(1.5) * k.big_phi(t).unwrap();
    assert!((v - 1.0).abs() < 0.02, "product {v}");
}

#[test]
fn resolvent_grid_refinement() {
    let k = KernelSpec::mittag_leffler(0.5, 1.0).unwrap();
    let a = solve_resolvent(&k, &Grid::new(4.0, 2e-3).unwrap(), 1.0).unwrap();
    let b = solve_resolvent(&k, &Grid::new(4.0, 1e-3).unwrap(), 1.0).unwrap();
    let (ya, yb) = (a.i_r_at(4.0).unwrap(), b.i_r_at(4.0).unwrap());
    assert!((ya - yb).abs() / yb < 4e-3);
}

#[test]
fn csv_exports() {
    let grid = Grid::new(1.0, 0.5).unwrap();
    let k = KernelSpec::exponential(0.5, 1.0).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let mut buf = Vec::new();
    tab.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,R,I_R,I2_R\n"));
    assert_eq!(text.lines().count(), 4);
    let sol = solve_fourier_laplace(&k, &FunctionalSpec::new(1.0), &grid).unwrap();
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf)
        .unwrap()
        .starts_with("t,ReV,ImV,ReW,ImW\n"));
}

#[test]
fn functional_trivial_cases() {
    let grid = Grid::new(5.0, 1e-2).unwrap();
    let k = KernelSpec::exponential(0.9, 1.0).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let spec = FunctionalSpec::new(5.0);
    let sol = solve_fourier_laplace(&k, &spec, &grid).unwrap();
    assert!(sol.v().iter().all(|v| v.norm() == 0.0));
    assert_eq!(
        char_functional(&sol, &spec, &tab, 1.0, 5.0).unwrap(),
        c(1.0, 0.0)
    );
    // no excitation: atom forcing vanishes
    let zero = KernelSpec::zero();
    let spec = FunctionalSpec::new(5.0).with_atom(0.0, c(-0.7, 0.0));
    let sol = solve_fourier_laplace(&zero, &spec, &grid).unwrap();
    assert!(sol.v().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn poisson_characteristic_function() {
    let grid = Grid::new(3.0, 1e-2).unwrap();
    let zero = KernelSpec::zero();
    let tab = solve_resolvent(&zero, &grid, 2.0).unwrap();
    let u = 0.8;
    let spec = FunctionalSpec::new(3.0).with_constant_f(c(0.0, u));
    let sol = solve_fourier_laplace(&zero, &spec, &grid).unwrap();
    let got = char_functional(&sol, &spec, &tab, 2.0, 3.0).unwrap();
    let want = (2.0 * 3.0 * (c(0.0, u).exp() - 1.0)).exp();
    assert!((got - want).norm() < 1e-12);
}

#[test]
fn two_volterra_forms_agree() {
    let grid = Grid::new(5.0, 5e-4).unwrap();
    let k = KernelSpec::exponential(0.9, 1.0).unwrap();
    let tab = solve_resolvent(&k, &grid, 1.0).unwrap();
    let spec = FunctionalSpec::new(5.0).with_constant_f(c(0.0, 0.5));
    let a = solve_fourier_laplace(&k, &spec, &grid).unwrap();
    let b = solve_fourier_laplace_resolvent(&tab, &spec).unwrap();
    let gap = a
        .v()
        .iter()
        .zip(b.v())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    eprintln!("sup gap {gap:e}");
    assert!(gap < 1e-8, "sup gap {gap:e}");
}

#[test]
fn functional_grid_refinement() {
    let k = KernelSpec::mittag_leffler(0.6, 1.0).unwrap();
    let spec = FunctionalSpec::new(2.0)
        .with_constant_f(c(-0.2, 0.7))
        .with_atom(1.0, c(-0.5, 0.3));
    let va = solve_fourier_laplace(&k, &spec, &Grid::new(2.0, 2e-3).unwrap()).unwrap();
    let vb = solve_fourier_laplace(&k, &spec, &Grid::new(2.0, 1e-3).unwrap()).unwrap();
    let (x, y) = (va.v()[va.v().len() - 1], vb.v()[vb.v().len() - 1]);
    assert!((x - y).norm() < 4e-3 * y.norm().max(1e-3), "{x} vs {y}");
}

#[test]
fn functional_modulus_bounded() {
    let grid = Grid::new(4.0, 1e-2).unwrap();
    for k in [
        KernelSpec::exponential(0.9, 1.0).unwrap(),
        KernelSpec::mittag_leffler(0.5, 1.0).unwrap(),
    ] {
        let tab = solve_resolvent(&k, &grid, 1.5).unwrap();
        for u in [-3.0, 0.5, 2.0] {
            let spec = FunctionalSpec::new(4.0)
                .with_f(move |t| if t <= 2.0 { c(0.0, u) } else { c(-0.1, 0.0) })
                .with_atom(1.5, c(-0.3, u));
            let sol = solve_fourier_laplace(&k, &spec, &grid).unwrap();
            let v = char_functional(&sol, &spec, &tab, 1.5, 4.0).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }
}

fn random_spec(seed: [f64; 6]) -> FunctionalSpec {
    let [a, b, z1, z2, f1, f2] = seed;
    FunctionalSpec::new(3.0)
        .with_atom(3.0 * a, c(-z1, 2.0 * z2 - 1.0))
        .with_density(move |t| c(-b * (1.0 + (t * 2.0).sin()).abs(), b * t.cos()))
        .with_f(move |t| c(-f1 * t / 3.0, 4.0 * (f2 - 0.5) * (1.0 + t)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn theorem_bounds_hold_nodewise(seed in prop::array::uniform6(0.0f64..1.0), which in 0usize..3) {
        let k = [
            KernelSpec::exponential(0.8, 1.0).unwrap(),
            KernelSpec::mittag_leffler(0.5, 1.0).unwrap(),
            KernelSpec::exponential_mixture(vec![0.5, 0.5], vec![2.0, 0.25]).unwrap(),
        ][which].clone();
        let grid = Grid::new(3.0, 2e-2).unwrap();
        let spec = random_spec(seed);
        let sol = solve_fourier_laplace(&k, &spec, &grid).unwrap();
        for (j, t) in grid.nodes().enumerate() {
            let g = sol.forcing()[j];
            let i_phi = k.branching_ratio() - k.big_phi(t).unwrap();
            let v = sol.v()[j];
            let tol = 1e-10;
            prop_assert!(v.re <= g.re + tol && g.re <= tol);
            prop_assert!(v.re >= g.re - 2.0 * i_phi - tol);
            prop_assert!(v.im.abs() <= g.im.abs() + i_phi + tol);
        }
    }
}

#[test]
fn cir_trivial_and_closed_form() {
    let grid = Grid::new(1.0, 1e-3).unwrap();
    let sol = solve_cir_riccati(&FunctionalSpec::new(1.0), 1.0, &grid).unwrap();
    assert!(sol.v_star().iter().all(|v| v.norm() == 0.0));
    assert_eq!(cir_functional(&sol, 1.0, 1.0).unwrap(), c(1.0, 0.0));

    let theta = 0.5;
    let spec = FunctionalSpec::new(1.0).with_density(move |_| c(-theta, 0.0));
    let sol = solve_cir_riccati(&spec, 1.0, &grid).unwrap();
    let v1 = sol.v_star()[grid.cells()];
    assert!((v1.re + 0.5f64.tanh()).abs() < 1e-8 && v1.im == 0.0);
    let f = cir_functional(&sol, 1.0, 1.0).unwrap();
    let want = (-2.0 * 0.5f64.cosh().ln()).exp();
    assert!((f.re - want).abs() < 1e-8);
    for (j, t) in grid.nodes().enumerate() {
        let v = sol.v_star()[j].re;
        assert!(-theta * t - 1e-12 <= v && v <= 0.0);
    }
    // step halving
    let fine = solve_cir_riccati(&spec, 1.0, &Grid::new(1.0, 5e-4).unwrap()).unwrap();
    assert!((fine.v_star()[2000] - v1).norm() < 1e-10);
}

#[test]
fn cir_atoms_jump() {
    // w = -δ_{0.5}: V* jumps by -1/σ at 0.5 then follows the Riccati flow
    let grid = Grid::new(1.0, 1e-3).unwrap();
    let spec = FunctionalSpec::new(1.0).with_atom(0.5, c(-1.0, 0.0));
    let sol = solve_cir_riccati(&spec, 2.0, &grid).unwrap();
    assert_eq!(sol.v_star()[499], c(0.0, 0.0));
    // V' = V²/(2σ) from V(0.5) = -1/2: V(t) = 1/(1/V0 - (t-0.5)/(2σ))
    let want = 1.0 / (-2.0 - 0.5 / 4.0);
    assert!((sol.v_star()[1000].re - want).abs() < 1e-10);
    assert!(cir_functional(&sol, 1.0, 1.0).unwrap().norm() <= 1.0);
}

#[test]
fn resolvent_gap_examples() {
    let grid = Grid::new(1.0, 1e-3).unwrap();
    let e = KernelSpec::exponential(1.0, 2.0).unwrap();
    assert_eq!(resolvent_gap(&e, 10.0, 1.0, &grid).unwrap(), (0.0, 0.0));
    let mix = KernelSpec::exponential_mixture(vec![0.5, 0.5], vec![2.0, 0.25]).unwrap();
    let grid = Grid::new(1.0, 1e-2).unwrap();
    let g8 = resolvent_gap(&mix, 8.0, 1.0, &grid).unwrap();
    let g64 = resolvent_gap(&mix, 64.0, 1.0, &grid).unwrap();
    assert!(g8.0 >= 0.0 && g8.1 >= 0.0);
    assert!(g64.0 < g8.0, "{g64:?} vs {g8:?}");
    let sub = KernelSpec::exponential(0.5, 1.0).unwrap();
    assert!(matches!(
        resolvent_gap(&sub, 8.0, 1.0, &grid),
        Err(hawkes_core::HawkesError::Regime(_))
    ));
}

#[test]
fn grid_validation() {
    assert!(Grid::new(1.0, 2.0).is_err());
    assert!(Grid::new(0.0, 0.1).is_err());
    assert_eq!(Grid::new(10.0, 1e-3).unwrap().cells(), 10_000);
}
