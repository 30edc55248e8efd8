//! Regime classification, path rescaling and limit-theorem verification statistics.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::kernels::{KernelSpec, RVProfile};
use crate::math::gamma;
use crate::metrics::{wasserstein1, EmpiricalSample};
use crate::simulate::{
    intensity, path_statistics, run_replicas, simulate_cir, simulate_cluster, EventPath,
    DEFAULT_EVENT_CAP,
};
use crate::volterra::{mean_count, solve_resolvent, Grid, ResolventTable};
use crate::{HawkesError, Result};

/// Branching ratios within this distance of 1 count as critical.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Cells used for resolvent tables built inside report functions.
pub const REPORT_CELLS: usize = 4000;

/// Euler steps per unit time for CIR reference samples.
pub const CIR_STEPS_PER_UNIT: usize = 10_000;

/// Relative slack allowed in monotone-trend checks.
pub const TREND_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeClass {
    Subcritical,
    WeaklyCritical,
    StronglyCritical,
}

impl RegimeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::WeaklyCritical => "weakly_critical",
            Self::StronglyCritical => "strongly_critical",
        }
    }
}

impl fmt::Display for RegimeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Limit of `Ψ_1(t)/√t` for a subcritical kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiStar {
    Zero,
    Finite(f64),
    /// `Ψ_1` regularly varying with index `1 − alpha`, `alpha ∈ [0, 1/2]`.
    Infinite {
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLabel {
    pub class: RegimeClass,
    pub m: f64,
    /// Dispersion `Ψ_1(∞)`; set for critical kernels.
    pub sigma: Option<f64>,
    /// Set for subcritical kernels.
    pub psi_star: Option<PsiStar>,
    /// Regular-variation index of `Φ` at infinity; set for strongly critical kernels.
    pub alpha: Option<f64>,
}

/// Fitted `a` in `φ(t) ~ t^{-1-a}` over the last decade of a tabulated kernel.
fn tabulated_tail_index(k: &KernelSpec) -> Option<f64> {
    let KernelSpec::Tabulated(tab) = k else {
        return None;
    };
    let tm = tab.t_max();
    let lo = k.phi(tm / 10.0).ok()?;
    let hi = *tab.values().last()?;
    (lo > 0.0 && hi > 0.0).then(|| (-(hi / lo).log10() - 1.0).clamp(0.0, 1.0))
}

/// Classifies `k` from its branching ratio and dispersion.
pub fn classify_regime(k: &KernelSpec) -> Result<RegimeLabel> {
    k.validate()?;
    let m = k.branching_ratio();
    if m < 1.0 - CRITICAL_TOL {
        // every subcritical variant here has Ψ_1 bounded, so Ψ_1(t)/√t → 0
        return Ok(RegimeLabel {
            class: RegimeClass::Subcritical,
            m,
            sigma: None,
            psi_star: Some(PsiStar::Zero),
            alpha: None,
        });
    }
    if m > 1.0 + CRITICAL_TOL {
        return Err(HawkesError::Regime(format!(
            "supercritical kernel (m={m}) is outside the supported regimes"
        )));
    }
    let sigma = k.dispersion_sigma()?;
    if sigma.is_finite() {
        return Ok(RegimeLabel {
            class: RegimeClass::WeaklyCritical,
            m,
            sigma: Some(sigma),
            psi_star: None,
            alpha: None,
        });
    }
    let alpha = match k.tail_profile() {
        Some(p) => -p.index,
        None => tabulated_tail_index(k).ok_or_else(|| {
            HawkesError::Indeterminate(format!("no tail index available for {}", k.name()))
        })?,
    };
    Ok(RegimeLabel {
        class: RegimeClass::StronglyCritical,
        m,
        sigma: Some(sigma),
        psi_star: None,
        alpha: Some(alpha),
    })
}

/// Resolvent table on `[0, horizon]` with [`REPORT_CELLS`] cells.
pub fn report_table(k: &KernelSpec, mu0: f64, horizon: f64) -> Result<ResolventTable> {
    solve_resolvent(k, &Grid::with_cells(horizon, REPORT_CELLS)?, mu0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RescaleMode {
    /// `N(nt)/n`.
    Subcritical,
    /// `Λ(nt)/n`, `I_Λ(nt)/n²`, `N(nt)/n²`, `Ñ(nt)/n`.
    Critical,
    /// `N(nt)/I²_R(n)`, `Ñ(nt)/√I²_R(n)`.
    StronglyCritical,
}

impl From<RegimeClass> for RescaleMode {
    fn from(c: RegimeClass) -> Self {
        match c {
            RegimeClass::Subcritical => Self::Subcritical,
            RegimeClass::WeaklyCritical => Self::Critical,
            RegimeClass::StronglyCritical => Self::StronglyCritical,
        }
    }
}

/// A path observed at `n·t_j` and normalized per mode; unused series are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub n: f64,
    pub mode: RescaleMode,
    pub times: Vec<f64>,
    pub count: Vec<f64>,
    pub intensity: Option<Vec<f64>>,
    pub compensator: Option<Vec<f64>>,
    pub martingale: Option<Vec<f64>>,
}

/// Rescales `p` onto the nodes of `grid`. The strongly critical mode reads `I²_R(n)` from `table`.
pub fn rescale(
    p: &EventPath,
    k: &KernelSpec,
    mu0: f64,
    table: Option<&ResolventTable>,
    n: f64,
    mode: RescaleMode,
    grid: &Grid,
) -> Result<RescaledPath> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "scale n={n} must be positive"
        )));
    }
    let needed = n * grid.end();
    if p.horizon() < needed * (1.0 - 1e-12) {
        return Err(HawkesError::Horizon {
            needed,
            available: p.horizon(),
        });
    }
    let times: Vec<f64> = grid.nodes().collect();
    let at = |t: f64| (n * t).min(p.horizon());
    let mut out = RescaledPath {
        n,
        mode,
        times: times.clone(),
        count: Vec::new(),
        intensity: None,
        compensator: None,
        martingale: None,
    };
    match mode {
        RescaleMode::Subcritical => {
            out.count = times.iter().map(|&t| p.count(at(t)) as f64 / n).collect();
        }
        RescaleMode::Critical => {
            let (mut lam, mut comp, mut mart) = (Vec::new(), Vec::new(), Vec::new());
            for &t in &times {
                let s = path_statistics(p, k, mu0, at(t))?;
                lam.push(intensity(p, k, mu0, at(t))? / n);
                comp.push(s.compensator / (n * n));
                out.count.push(s.count / (n * n));
                mart.push(s.martingale / n);
            }
            out.intensity = Some(lam);
            out.compensator = Some(comp);
            out.martingale = Some(mart);
        }
        RescaleMode::StronglyCritical => {
            let table = table.ok_or_else(|| {
                HawkesError::InvalidParameter(
                    "strongly critical rescaling needs a resolvent table".into(),
                )
            })?;
            let norm = table.i2_r_at(n)?;
            let mut mart = Vec::new();
            for &t in &times {
                let s = path_statistics(p, k, mu0, at(t))?;
                out.count.push(s.count / norm);
                mart.push(s.martingale / norm.sqrt());
            }
            out.martingale = Some(mart);
        }
    }
    Ok(out)
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: f64,
    pub t: f64,
    pub statistic: String,
    pub estimate: f64,
    pub target: Option<f64>,
    pub stderr: Option<f64>,
    pub pass: Option<bool>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:e}"))
}

/// CSV with a `# schema=1` comment and header `n,t,statistic,estimate,target,stderr,pass`.
pub fn write_report_csv<W: Write>(rows: &[ReportRow], mut w: W) -> Result<()> {
    writeln!(w, "# schema=1")?;
    writeln!(w, "n,t,statistic,estimate,target,stderr,pass")?;
    for r in rows {
        let pass = r.pass.map_or("NA", |b| if b { "true" } else { "false" });
        writeln!(
            w,
            "{},{},{},{:e},{},{},{}",
            r.n,
            r.t,
            r.statistic,
            r.estimate,
            opt(r.target),
            opt(r.stderr),
            pass
        )?;
    }
    Ok(())
}

/// True when each value is at most `(1 + slack)` times its predecessor.
pub fn non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

/// `sup_{u ≤ horizon} |X(u) − L(u)|` where `X` jumps by `1/norm` at `τ_i/n` and `L` is
/// continuous and non-decreasing, so the supremum sits at jump points or the ends.
fn sup_step_deviation<L: Fn(f64) -> f64>(
    events: &[f64],
    n: f64,
    norm: f64,
    horizon: f64,
    limit: L,
) -> f64 {
    let mut d = limit(0.0).abs();
    let mut k = 0usize;
    for &tau in events {
        let u = tau / n;
        if u > horizon {
            break;
        }
        let l = limit(u);
        d = d.max((k as f64 / norm - l).abs());
        k += 1;
        d = d.max((k as f64 / norm - l).abs());
    }
    d.max((k as f64 / norm - limit(horizon)).abs())
}

fn check_mc(replicas: usize, horizon: f64, mu0: f64) -> Result<()> {
    if replicas < 2 {
        return Err(HawkesError::InvalidParameter(format!(
            "replicas={replicas} must be at least 2"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "horizon={horizon} must be positive"
        )));
    }
    if !(mu0 > 0.0 && mu0.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "mu0={mu0} must be positive"
        )));
    }
    Ok(())
}

/// Monte Carlo `E[sup_{t ≤ T} |rescaled − limit|]` per scale. Rows after the first carry
/// the trend check against the previous scale.
pub fn flln_report(
    k: &KernelSpec,
    mu0: f64,
    ns: &[f64],
    replicas: usize,
    horizon: f64,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    check_mc(replicas, horizon, mu0)?;
    let label = classify_regime(k)?;
    let mut rows: Vec<ReportRow> = Vec::with_capacity(ns.len());
    for (idx, &n) in ns.iter().enumerate() {
        let sims = match label.class {
            RegimeClass::Subcritical => {
                if let Some(PsiStar::Infinite { .. }) = label.psi_star {
                    return Err(HawkesError::Unsupported("law of large numbers with infinite Psi* is not implemented".into()));
                }
                let slope = mu0 / (1.0 - label.m);
                run_replicas(seed.wrapping_add(idx as u64), replicas, |_, rng| {
                    let p = simulate_cluster(k, mu0, n * horizon, rng, DEFAULT_EVENT_CAP)?;
                    Ok(sup_step_deviation(p.events(), n, n, horizon, |u| slope * u))
                })
            }
            RegimeClass::StronglyCritical => {
                let alpha = label.alpha.expect("strongly critical labels carry alpha");
                let table = report_table(k, mu0, n * horizon.max(1.0))?;
                let norm = table.i2_r_at(n)?;
                run_replicas(seed.wrapping_add(idx as u64), replicas, |_, rng| {
                    let p = simulate_cluster(k, mu0, n * horizon, rng, DEFAULT_EVENT_CAP)?;
                    Ok(sup_step_deviation(p.events(), n, norm, horizon, |u| mu0 * u.powf(alpha + 1.0)))
                })
            }
            RegimeClass::WeaklyCritical => {
                return Err(HawkesError::Regime(
                    "weakly critical kernels have no deterministic law of large numbers; the rescaled intensity \
                     converges to a CIR diffusion (use the weakly critical report)"
                        .into(),
                ))
            }
        };
        let sample = EmpiricalSample::new(sims.into_iter().collect::<Result<Vec<f64>>>()?)?;
        let estimate = sample.mean();
        let pass = rows
            .last()
            .map(|prev| estimate <= prev.estimate * (1.0 + TREND_SLACK));
        rows.push(ReportRow {
            n,
            t: horizon,
            statistic: "sup_deviation".into(),
            estimate,
            target: None,
            stderr: Some(sample.stderr()),
            pass,
        });
    }
    Ok(rows)
}

/// `sup_{u ≤ T} |E[N(nu)]/I²_R(n) − μ0 u^{α+1}|` from the mean formula on the nodes of a
/// resolvent table covering `[0, max(n, nT)]`; no simulation.
pub fn strongly_critical_mean_deviation(
    k: &KernelSpec,
    mu0: f64,
    n: f64,
    horizon: f64,
) -> Result<f64> {
    let label = classify_regime(k)?;
    if label.class != RegimeClass::StronglyCritical {
        return Err(HawkesError::Regime(format!(
            "mean-level check needs a strongly critical kernel, got {}",
            label.class
        )));
    }
    let alpha = label.alpha.expect("strongly critical labels carry alpha");
    let table = report_table(k, mu0, n * horizon.max(1.0))?;
    let norm = table.i2_r_at(n)?;
    let mut d = 0.0f64;
    for t in table
        .grid()
        .nodes()
        .take_while(|&t| t <= n * horizon * (1.0 + 1e-12))
    {
        let u = t / n;
        d = d.max((mean_count(&table, mu0, t)? / norm - mu0 * u.powf(alpha + 1.0)).abs());
    }
    Ok(d)
}

fn counts_at(k: &KernelSpec, mu0: f64, at: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    run_replicas(seed, replicas, |_, rng| {
        Ok(simulate_cluster(k, mu0, at, rng, DEFAULT_EVENT_CAP)?.count(at) as f64)
    })
    .into_iter()
    .collect()
}

/// Replicas of the regime's normalized fluctuation at time `t`:
/// `n^{-1/2}(N(nt) − E N(nt))` (subcritical) or `n I²_R(n)^{-3/2}(N(nt) − E N(nt))`
/// (strongly critical), with `E N(nt)` from the mean formula.
pub fn fclt_sample(
    k: &KernelSpec,
    mu0: f64,
    n: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    check_mc(replicas, 1.0, mu0)?;
    if !(t >= 0.0 && n > 0.0) {
        return Err(HawkesError::InvalidParameter(format!(
            "need t >= 0 and n > 0, got t={t}, n={n}"
        )));
    }
    let label = classify_regime(k)?;
    let scale = match label.class {
        RegimeClass::Subcritical => None,
        RegimeClass::StronglyCritical => Some(()),
        RegimeClass::WeaklyCritical => {
            return Err(HawkesError::Regime(
                "weakly critical fluctuations are not Gaussian at this scaling; use the weakly critical report".into(),
            ))
        }
    };
    if t == 0.0 {
        return EmpiricalSample::new(vec![0.0; replicas]);
    }
    let at = n * t;
    let (table, factor) = match scale {
        None => {
            let table = report_table(k, mu0, at)?;
            (table, n.powf(-0.5))
        }
        Some(()) => {
            let table = report_table(k, mu0, at.max(n))?;
            let norm = table.i2_r_at(n)?;
            (table, n * norm.powf(-1.5))
        }
    };
    let mean = mean_count(&table, mu0, at)?;
    let counts = counts_at(k, mu0, at, replicas, seed)?;
    EmpiricalSample::new(counts.into_iter().map(|c| factor * (c - mean)).collect())
}

/// `Var G(t) = μ0 (α+1) ∫_0^t (t−s)^{2α} s^α ds = μ0 (α+1) t^{3α+1} B(2α+1, α+1)`.
pub fn strongly_critical_limit_variance(alpha: f64, mu0: f64, t: f64) -> f64 {
    let beta_fn = gamma(2.0 * alpha + 1.0) * gamma(alpha + 1.0) / gamma(3.0 * alpha + 2.0);
    mu0 * (alpha + 1.0) * t.powf(3.0 * alpha + 1.0) * beta_fn
}

fn moment_rows(
    n: f64,
    t: f64,
    name: &str,
    s: &EmpiricalSample,
    mean_target: f64,
    var_target: f64,
) -> [ReportRow; 2] {
    let (m, v) = (s.mean(), s.variance());
    [
        ReportRow {
            n,
            t,
            statistic: format!("{name}_mean"),
            estimate: m,
            target: Some(mean_target),
            stderr: Some(s.stderr()),
            pass: Some((m / mean_target - 1.0).abs() <= 0.10),
        },
        ReportRow {
            n,
            t,
            statistic: format!("{name}_var"),
            estimate: v,
            target: Some(var_target),
            stderr: Some(s.variance_stderr()),
            pass: Some((v / var_target - 1.0).abs() <= 0.15),
        },
    ]
}

/// Samples of `∫_0^T Λ*` for the CIR limit.
pub fn cir_integral_sample(
    mu0: f64,
    sigma: f64,
    horizon: f64,
    replicas: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    let steps = ((horizon * CIR_STEPS_PER_UNIT as f64).ceil() as usize).max(1);
    let xs: Result<Vec<f64>> = run_replicas(seed, replicas, |_, rng| {
        Ok(simulate_cir(mu0, sigma, horizon, steps, rng)?.integral())
    })
    .into_iter()
    .collect();
    EmpiricalSample::new(xs?)
}

/// Per scale: moments of `Λ^{(n)}(T)` and `N^{(n)}(T)` against the CIR targets
/// `μ0T/σ`, `μ0T²/(2σ³)`, `μ0T²/(2σ)`, `μ0T⁴/(12σ³)`, and the Wasserstein distance from
/// `N^{(n)}(T)` to simulated `∫_0^T Λ*` (trend-checked across scales).
pub fn weakly_critical_report(
    k: &KernelSpec,
    mu0: f64,
    ns: &[f64],
    replicas: usize,
    horizon: f64,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    check_mc(replicas, horizon, mu0)?;
    let label = classify_regime(k)?;
    if label.class != RegimeClass::WeaklyCritical {
        return Err(HawkesError::Regime(format!(
            "CIR moment targets need a weakly critical kernel (m = 1, sigma < inf), got {}",
            label.class
        )));
    }
    let sigma = label.sigma.expect("critical labels carry sigma");
    let reference = cir_integral_sample(mu0, sigma, horizon, replicas, seed ^ 0x5eed_c1c0)?;
    let t = horizon;
    let mut rows = Vec::new();
    let mut prev_w: Option<f64> = None;
    for (idx, &n) in ns.iter().enumerate() {
        let at = n * t;
        let pairs: Result<Vec<(f64, f64)>> =
            run_replicas(seed.wrapping_add(idx as u64), replicas, |_, rng| {
                let p = simulate_cluster(k, mu0, at, rng, DEFAULT_EVENT_CAP)?;
                Ok((intensity(&p, k, mu0, at)? / n, p.count(at) as f64 / (n * n)))
            })
            .into_iter()
            .collect();
        let pairs = pairs?;
        let lam = EmpiricalSample::new(pairs.iter().map(|p| p.0).collect())?;
        let cnt = EmpiricalSample::new(pairs.iter().map(|p| p.1).collect())?;
        rows.extend(moment_rows(
            n,
            t,
            "Lambda",
            &lam,
            mu0 * t / sigma,
            mu0 * t * t / (2.0 * sigma.powi(3)),
        ));
        rows.extend(moment_rows(
            n,
            t,
            "N",
            &cnt,
            mu0 * t * t / (2.0 * sigma),
            mu0 * t.powi(4) / (12.0 * sigma.powi(3)),
        ));
        let w = wasserstein1(&cnt, &reference);
        rows.push(ReportRow {
            n,
            t,
            statistic: "wasserstein_N_vs_cir".into(),
            estimate: w,
            target: None,
            stderr: None,
            pass: prev_w.map(|p| w <= p * (1.0 + TREND_SLACK)),
        });
        prev_w = Some(w);
    }
    Ok(rows)
}

/// Explicit second-order scaling for a strongly critical kernel.
#[derive(Clone)]
pub struct ScalingSpec {
    pub alpha: f64,
    /// `γ(n) = n^{gamma_exponent}`.
    pub gamma_exponent: f64,
    /// Limit coefficients of the drift, second-order and fluctuation terms.
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Second-order index of `I²_R`.
    pub rho: f64,
    pub auxiliary: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    /// Multiplier applied to the statistic, `β/Γ(α+2)` for Mittag-Leffler kernels.
    pub scale: f64,
}

impl fmt::Debug for ScalingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalingSpec")
            .field("alpha", &self.alpha)
            .field("gamma_exponent", &self.gamma_exponent)
            .field("gamma1", &self.gamma1)
            .field("gamma2", &self.gamma2)
            .field("gamma3", &self.gamma3)
            .field("rho", &self.rho)
            .field("scale", &self.scale)
            .finish()
    }
}

impl ScalingSpec {
    /// Known scalings: Mittag-Leffler kernels, whose `I²_R(t) = β t^{α+1}/Γ(α+2)` is an exact
    /// power (`ρ = −∞`).
    pub fn for_kernel(k: &KernelSpec) -> Result<Self> {
        match k {
            KernelSpec::MittagLeffler { alpha, beta } => {
                let (a, b) = (*alpha, *beta);
                let g = gamma(a + 2.0);
                Ok(Self {
                    alpha: a,
                    gamma_exponent: (0.5 * (1.0 - a)).min(a),
                    gamma1: if a <= 1.0 / 3.0 { g / b } else { 0.0 },
                    gamma2: 0.0,
                    gamma3: if a >= 1.0 / 3.0 { (b / g).sqrt() } else { 0.0 },
                    rho: f64::NEG_INFINITY,
                    auxiliary: None,
                    scale: b / g,
                })
            }
            _ => Err(HawkesError::Unsupported(format!(
                "no second-order scaling known for {} kernels",
                k.name()
            ))),
        }
    }

    pub fn gamma(&self, n: f64) -> f64 {
        n.powf(self.gamma_exponent)
    }

    /// Limit mean `scale · γ*₁ · μ0 t`.
    pub fn mean_target(&self, mu0: f64, t: f64) -> f64 {
        self.scale * self.gamma1 * mu0 * t
    }

    /// Limit variance `(scale · γ*₃)² Var G(t)`.
    pub fn variance_target(&self, mu0: f64, t: f64) -> f64 {
        (self.scale * self.gamma3).powi(2) * strongly_critical_limit_variance(self.alpha, mu0, t)
    }
}

/// Replicas of `scale · γ(n) (N(nt)/I²_R(n) − μ0 t^{α+1})`.
pub fn second_order_fclt_sample(
    k: &KernelSpec,
    mu0: f64,
    spec: &ScalingSpec,
    n: f64,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    check_mc(replicas, 1.0, mu0)?;
    let label = classify_regime(k)?;
    if label.class != RegimeClass::StronglyCritical {
        return Err(HawkesError::Regime(format!(
            "second-order scaling needs a strongly critical kernel, got {}",
            label.class
        )));
    }
    if t == 0.0 {
        return EmpiricalSample::new(vec![0.0; replicas]);
    }
    let at = n * t;
    let table = report_table(k, mu0, at.max(n))?;
    let norm = table.i2_r_at(n)?;
    let center = mu0 * t.powf(spec.alpha + 1.0);
    let factor = spec.scale * spec.gamma(n);
    let counts = counts_at(k, mu0, at, replicas, seed)?;
    EmpiricalSample::new(
        counts
            .into_iter()
            .map(|c| factor * (c / norm - center))
            .collect(),
    )
}

/// `count` points spaced geometrically on `[lo, hi]`.
pub fn geometric_probes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (r * i as f64).exp()).collect()
}

/// Least-squares slope of `ln F` against `ln t` over `probes`.
pub fn estimate_rv_index<F: Fn(f64) -> f64>(f: F, probes: &[f64]) -> Result<RVProfile> {
    if probes.len() < 2 {
        return Err(HawkesError::InvalidParameter(
            "need at least two probe scales".into(),
        ));
    }
    let mut pts = Vec::with_capacity(probes.len());
    for &t in probes {
        let v = f(t);
        if !(t > 0.0 && v > 0.0 && v.is_finite()) {
            return Err(HawkesError::Domain(format!("F({t}) = {v} is not positive")));
        }
        pts.push((t.ln(), v.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HawkesError::InvalidParameter(
            "probe scales must not all coincide".into(),
        ));
    }
    Ok(RVProfile::first_order(sxy / sxx))
}
