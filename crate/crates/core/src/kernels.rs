//! Excitation kernels, their integrated tails and transforms, and samplers
//! for the offspring delay distribution `φ/m`.

use std::f64::consts::PI;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{HawkesError, Result};
use crate::quad;
use crate::special::{kanter_a, ml_function, rgamma, stable_pdf, stable_sf};

const QUAD_REL: f64 = 1e-11;
/// `e^{-PARETO_PANELS}` is the neglected Pareto mass in `ScaleFactor::expect`.
const PARETO_PANELS: usize = 45;

/// Law of the scale factor `ξ` of a scaled-stable kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleFactor {
    /// `ξ ≡ value`.
    Constant(f64),
    /// `ξ = low` with probability `p_low`, else `high`.
    TwoPoint { low: f64, high: f64, p_low: f64 },
    /// Pareto law `P(ξ > x) = (x_m / x)^shape` for `x ≥ x_m`, with `shape ∈ (1, 2)`.
    Pareto { x_m: f64, shape: f64 },
}

impl ScaleFactor {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScaleFactor::Constant(c) => c > 0.0 && c.is_finite(),
            ScaleFactor::TwoPoint { low, high, p_low } => {
                low > 0.0
                    && high > 0.0
                    && low.is_finite()
                    && high.is_finite()
                    && (0.0..=1.0).contains(&p_low)
            }
            ScaleFactor::Pareto { x_m, shape } => {
                x_m > 0.0 && x_m.is_finite() && shape > 1.0 && shape < 2.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(HawkesError::InvalidParameter(format!(
                "invalid scale factor {self:?}"
            )))
        }
    }

    /// `E[ξ]`.
    pub fn mean(&self) -> f64 {
        match *self {
            ScaleFactor::Constant(c) => c,
            ScaleFactor::TwoPoint { low, high, p_low } => p_low * low + (1.0 - p_low) * high,
            ScaleFactor::Pareto { x_m, shape } => x_m * shape / (shape - 1.0),
        }
    }

    /// `E[h(ξ)]`; the Pareto case integrates over `u ∈ (0,1)` with `ξ = x_m u^{-1/shape}`.
    pub fn expect<F: FnMut(f64) -> Result<f64>>(&self, mut h: F) -> Result<f64> {
        match *self {
            ScaleFactor::Constant(c) => h(c),
            ScaleFactor::TwoPoint { low, high, p_low } => {
                let mut v = 0.0;
                if p_low > 0.0 {
                    v += p_low * h(low)?;
                }
                if p_low < 1.0 {
                    v += (1.0 - p_low) * h(high)?;
                }
                Ok(v)
            }
            ScaleFactor::Pareto { x_m, shape } => {
                // ξ = x_m e^{y/shape} with y ~ Exp(1); unit panels in y keep
                // integrands that peak at large ξ from being missed
                let mut err = None;
                let mut total = 0.0;
                for j in 0..PARETO_PANELS {
                    let (lo, hi) = (j as f64, j as f64 + 1.0);
                    let r = quad::adaptive(
                        |y| match h(x_m * (y / shape).exp()) {
                            Ok(v) => v * (-y).exp(),
                            Err(e) => {
                                err.get_or_insert(e);
                                0.0
                            }
                        },
                        lo,
                        hi,
                        1e-17,
                        1e-11,
                    );
                    total += r.value;
                }
                if let Some(e) = err {
                    return Err(e);
                }
                Ok(total)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScaleFactor::Constant(c) => c,
            ScaleFactor::TwoPoint { low, high, p_low } => {
                if rng.random::<f64>() < p_low {
                    low
                } else {
                    high
                }
            }
            ScaleFactor::Pareto { x_m, shape } => {
                let u = 1.0 - rng.random::<f64>();
                x_m * u.powf(-1.0 / shape)
            }
        }
    }
}

/// Kernel given by values of `φ` on a grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    times: Vec<f64>,
    values: Vec<f64>,
    /// `Φ` at the nodes (exact integral of the interpolant).
    tail: Vec<f64>,
    /// cumulative mass `m - Φ` at the nodes.
    cum: Vec<f64>,
}

impl TabulatedKernel {
    /// Builds a kernel from nodes `0 = t_0 < t_1 < ...` and values `φ(t_i) ≥ 0`.
    /// When `declared_m` is given it must match the trapezoid mass to `1e-6` relative.
    pub fn new(times: Vec<f64>, values: Vec<f64>, declared_m: Option<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(HawkesError::InvalidParameter(
                "tabulated kernel: length mismatch".into(),
            ));
        }
        if times.len() < 2 {
            return Err(HawkesError::InvalidParameter(
                "tabulated kernel needs at least two nodes".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(HawkesError::InvalidParameter(
                "tabulated kernel grid must start at t=0".into(),
            ));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(HawkesError::InvalidParameter(
                    "tabulated kernel grid must be strictly increasing and finite".into(),
                ));
            }
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(HawkesError::InvalidParameter(
                "tabulated kernel values must be finite and >= 0".into(),
            ));
        }
        let n = times.len();
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        let m = cum[n - 1];
        if let Some(d) = declared_m {
            if !(d >= 0.0) || (d - m).abs() > 1e-6 * d.max(m).max(f64::MIN_POSITIVE) {
                return Err(HawkesError::InvalidParameter(format!(
                    "tabulated kernel: declared m={d} but grid integrates to {m}"
                )));
            }
        }
        let tail = cum.iter().map(|c| m - c).collect();
        Ok(Self {
            times,
            values,
            tail,
            cum,
        })
    }

    /// Reads a `t,phi` CSV (header required).
    pub fn from_csv_reader<R: BufRead>(reader: R, declared_m: Option<f64>) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                let cols: Vec<_> = line.split(',').map(str::trim).collect();
                if cols != ["t", "phi"] {
                    return Err(HawkesError::Parse(format!(
                        "expected header `t,phi`, found `{line}`"
                    )));
                }
                header_seen = true;
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .ok_or_else(|| {
                        HawkesError::Parse(format!("line {}: missing column", lineno + 1))
                    })?
                    .parse::<f64>()
                    .map_err(|e| HawkesError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            times.push(parse(it.next())?);
            values.push(parse(it.next())?);
            if it.next().is_some() {
                return Err(HawkesError::Parse(format!(
                    "line {}: too many columns",
                    lineno + 1
                )));
            }
        }
        if !header_seen {
            return Err(HawkesError::Parse("empty kernel table".into()));
        }
        Self::new(times, values, declared_m)
    }

    pub fn from_csv_path<P: AsRef<Path>>(path: P, declared_m: Option<f64>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(f), declared_m)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index `i` with `t_i ≤ t < t_{i+1}` (clamped to the last cell).
    fn cell(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(self.times.len() - 2)
    }

    fn phi(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Ok(0.0);
        }
        if t > self.t_max() {
            return Err(HawkesError::OutOfRange {
                t,
                max: self.t_max(),
            });
        }
        let i = self.cell(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    fn big_phi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.mass();
        }
        if t >= self.t_max() {
            return 0.0;
        }
        let i = self.cell(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let x = t - t0;
        let slope = (v1 - v0) / (t1 - t0);
        // mass of the interpolant on [t0, t]
        let part = v0 * x + 0.5 * slope * x * x;
        (self.tail[i] - part).max(0.0)
    }

    /// `∫_a^b Φ`, exact for the piecewise quadratic `Φ` (Simpson per cell).
    fn big_phi_integral(&self, a: f64, b: f64) -> f64 {
        let tm = self.t_max();
        let (a, b) = (a.max(0.0), b.min(tm));
        if b <= a {
            return 0.0;
        }
        let mut knots = vec![a];
        let lo = self.times.partition_point(|&x| x <= a);
        for &x in &self.times[lo..] {
            if x >= b {
                break;
            }
            knots.push(x);
        }
        knots.push(b);
        knots
            .windows(2)
            .map(|w| {
                let (x0, x1) = (w[0], w[1]);
                (x1 - x0) / 6.0
                    * (self.big_phi(x0) + 4.0 * self.big_phi(0.5 * (x0 + x1)) + self.big_phi(x1))
            })
            .sum()
    }

    /// `∫_0^{min(t, t_max)} s^k φ(s) ds`, exact for the interpolant.
    fn psi_k(&self, t: f64, order: u32) -> f64 {
        let gl = quad::GaussLegendre::new((order as usize / 2) + 2);
        let end = t.min(self.t_max());
        let mut total = 0.0;
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            if t0 >= end {
                break;
            }
            let hi = t1.min(end);
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            total += gl.integrate(
                |s| {
                    let w = (s - t0) / (t1 - t0);
                    s.powi(order as i32) * (v0 * (1.0 - w) + v1 * w)
                },
                t0,
                hi,
            );
        }
        total
    }

    fn laplace(&self, lambda: f64) -> f64 {
        let gl = quad::GaussLegendre::new(8);
        let mut total = 0.0;
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let (v0, v1) = (self.values[i], self.values[i + 1]);
            total += gl.integrate(
                |s| {
                    let w = (s - t0) / (t1 - t0);
                    -(-lambda * s).exp_m1() * (v0 * (1.0 - w) + v1 * w)
                },
                t0,
                t1,
            );
        }
        total
    }

    /// Finite `σ` when the last decade of the grid adds at most 1% to `Ψ_1`;
    /// `∞` when the fitted tail `φ ~ t^{-1-a}` has `a ≤ 1`; otherwise indeterminate.
    fn dispersion(&self) -> Result<f64> {
        let tm = self.t_max();
        let total = self.psi_k(tm, 1);
        if total == 0.0 {
            return Ok(0.0);
        }
        let early = self.psi_k(tm / 10.0, 1);
        if tm / 10.0 <= self.times[1] {
            return Err(HawkesError::Indeterminate(
                "tabulated kernel grid spans less than a decade; cannot decide whether sigma is finite".into(),
            ));
        }
        let growth = (total - early) / total;
        if growth <= 0.01 {
            return Ok(total);
        }
        let lo = self.phi(tm / 10.0).unwrap_or(0.0);
        let hi = self.values[self.values.len() - 1];
        if lo > 0.0 && hi > 0.0 {
            let a = -(hi / lo).log10() - 1.0;
            if a <= 1.0 {
                return Ok(f64::INFINITY);
            }
        }
        Err(HawkesError::Indeterminate(format!(
            "tabulated kernel: last decade adds {:.1}% to Psi_1 but the tail does not indicate divergence",
            100.0 * growth
        )))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let target = rng.random::<f64>() * self.mass();
        let i = self
            .cum
            .partition_point(|&c| c <= target)
            .clamp(1, self.cum.len() - 1)
            - 1;
        let r = (target - self.cum[i]).max(0.0);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        let a = (v1 - v0) / (2.0 * h);
        // solve v0 x + a x^2 = r in the cancellation-free form
        let disc = (v0 * v0 + 4.0 * a * r).max(0.0);
        let denom = v0 + disc.sqrt();
        let x = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        t0 + x.clamp(0.0, h)
    }
}

/// Regular-variation profile `f(tx)/f(t) → x^index`, with optional second-order
/// index `ρ` and auxiliary rate function `A`.
#[derive(Clone)]
pub struct RVProfile {
    pub index: f64,
    /// `None` when the second-order behaviour is unknown; `-∞` when absent.
    pub second_order_rho: Option<f64>,
    pub auxiliary: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl fmt::Debug for RVProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RVProfile")
            .field("index", &self.index)
            .field("second_order_rho", &self.second_order_rho)
            .field("auxiliary", &self.auxiliary.as_ref().map(|_| "fn"))
            .finish()
    }
}

impl RVProfile {
    pub fn first_order(index: f64) -> Self {
        Self {
            index,
            second_order_rho: None,
            auxiliary: None,
        }
    }

    /// Checks that `|A|` is eventually decreasing to zero on `start·10^k`, `k = 0..decades`.
    pub fn auxiliary_vanishes(&self, start: f64, decades: u32) -> bool {
        let Some(a) = &self.auxiliary else {
            return true;
        };
        let vals: Vec<f64> = (0..=decades)
            .map(|k| a(start * 10f64.powi(k as i32)).abs())
            .collect();
        vals.windows(2).all(|w| w[1] <= w[0])
            && vals[vals.len() - 1] < 1e-2 * vals[0].max(1e-300) + 1e-12
    }
}

/// An excitation kernel `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `φ(t) = m β e^{-βt}`; `m = 0` gives the Poisson case.
    Exponential {
        m: f64,
        beta: f64,
    },
    /// `φ(t) = Σ w_i r_i e^{-r_i t}`, branching ratio `Σ w_i`.
    ExponentialMixture {
        weights: Vec<f64>,
        rates: Vec<f64>,
    },
    /// Mittag-Leffler density `β t^{α-1} E_{α,α}(-β t^α)`.
    MittagLeffler {
        alpha: f64,
        beta: f64,
    },
    /// Convolution of two Mittag-Leffler densities.
    MixedMittagLeffler {
        alpha1: f64,
        beta1: f64,
        alpha2: f64,
        beta2: f64,
    },
    /// Density of `Z ξ^{1/α}` with `Z` one-sided `α`-stable.
    ScaledStable {
        alpha: f64,
        xi: ScaleFactor,
    },
    Tabulated(TabulatedKernel),
}

fn check_index(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(HawkesError::InvalidParameter(format!(
            "{name}={a} must lie in (0,1)"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(HawkesError::InvalidParameter(format!(
            "{name}={v} must be positive and finite"
        )))
    }
}

/// Mittag-Leffler density `β t^{α-1} E_{α,α}(-β t^α)`.
fn ml_density(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(f64::INFINITY);
    }
    let x = -beta * t.powf(alpha);
    Ok((beta * t.powf(alpha - 1.0) * ml_function(alpha, alpha, x)?).max(0.0))
}

/// Mittag-Leffler survival `E_α(-β t^α)`.
fn ml_survival(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(1.0);
    }
    Ok(ml_function(alpha, 1.0, -beta * t.powf(alpha))?.clamp(0.0, 1.0))
}

/// `∫_0^t E_α(-β s^α) ds = t E_{α,2}(-β t^α)`.
fn ml_survival_antiderivative(alpha: f64, beta: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(t * ml_function(alpha, 2.0, -beta * t.powf(alpha))?)
}

/// Integrates `g` over `[a, b]` after the substitution `s = a + (b-a) v^{1/p}`,
/// which removes an endpoint singularity `(s-a)^{p-1}` at `a`.
fn integrate_singular_left<F: FnMut(f64) -> Result<f64>>(
    mut g: F,
    a: f64,
    b: f64,
    p: f64,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let len = b - a;
    let mut err = None;
    let r = quad::adaptive(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let s = a + len * v.powf(1.0 / p);
            let jac = len / p * v.powf(1.0 / p - 1.0);
            match g(s) {
                Ok(x) => x * jac,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        1.0,
        1e-300,
        QUAD_REL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r.value)
}

fn integrate_plain<F: FnMut(f64) -> Result<f64>>(mut g: F, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut err = None;
    let r = quad::adaptive(
        |s| match g(s) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        1e-300,
        QUAD_REL,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r.value)
}

impl KernelSpec {
    pub fn exponential(m: f64, beta: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(HawkesError::InvalidParameter(format!(
                "m={m} must be finite and >= 0"
            )));
        }
        check_positive("beta", beta)?;
        Ok(Self::Exponential { m, beta })
    }

    /// The zero kernel (homogeneous Poisson process).
    pub fn zero() -> Self {
        Self::Exponential { m: 0.0, beta: 1.0 }
    }

    pub fn exponential_mixture(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return Err(HawkesError::InvalidParameter(
                "exponential mixture needs equally many weights and rates".into(),
            ));
        }
        for (&w, &r) in weights.iter().zip(&rates) {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(HawkesError::InvalidParameter(format!(
                    "mixture weight {w} must be >= 0"
                )));
            }
            check_positive("rate", r)?;
        }
        Ok(Self::ExponentialMixture { weights, rates })
    }

    pub fn mittag_leffler(alpha: f64, beta: f64) -> Result<Self> {
        check_index("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self::MittagLeffler { alpha, beta })
    }

    pub fn mixed_mittag_leffler(alpha1: f64, beta1: f64, alpha2: f64, beta2: f64) -> Result<Self> {
        check_index("alpha1", alpha1)?;
        check_index("alpha2", alpha2)?;
        check_positive("beta1", beta1)?;
        check_positive("beta2", beta2)?;
        if alpha1 > alpha2 {
            return Err(HawkesError::InvalidParameter(format!(
                "mixed Mittag-Leffler requires alpha1 <= alpha2 (got {alpha1} > {alpha2})"
            )));
        }
        Ok(Self::MixedMittagLeffler {
            alpha1,
            beta1,
            alpha2,
            beta2,
        })
    }

    pub fn scaled_stable(alpha: f64, xi: ScaleFactor) -> Result<Self> {
        check_index("alpha", alpha)?;
        xi.validate()?;
        Ok(Self::ScaledStable { alpha, xi })
    }

    pub fn tabulated(table: TabulatedKernel) -> Self {
        Self::Tabulated(table)
    }

    /// Re-checks the parameter constraints (useful after manual construction).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Exponential { m, beta } => Self::exponential(*m, *beta).map(|_| ()),
            Self::ExponentialMixture { weights, rates } => {
                Self::exponential_mixture(weights.clone(), rates.clone()).map(|_| ())
            }
            Self::MittagLeffler { alpha, beta } => Self::mittag_leffler(*alpha, *beta).map(|_| ()),
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => Self::mixed_mittag_leffler(*alpha1, *beta1, *alpha2, *beta2).map(|_| ()),
            Self::ScaledStable { alpha, xi } => Self::scaled_stable(*alpha, xi.clone()).map(|_| ()),
            Self::Tabulated(_) => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::ExponentialMixture { .. } => "exponential-mixture",
            Self::MittagLeffler { .. } => "mittag-leffler",
            Self::MixedMittagLeffler { .. } => "mixed-mittag-leffler",
            Self::ScaledStable { .. } => "scaled-stable",
            Self::Tabulated(_) => "tabulated",
        }
    }

    /// `m = ∫ φ`.
    pub fn branching_ratio(&self) -> f64 {
        match self {
            Self::Exponential { m, .. } => *m,
            Self::ExponentialMixture { weights, .. } => weights.iter().sum(),
            Self::MittagLeffler { .. }
            | Self::MixedMittagLeffler { .. }
            | Self::ScaledStable { .. } => 1.0,
            Self::Tabulated(t) => t.mass(),
        }
    }

    /// Exponent `p` with `φ(t) ~ c t^{p-1}` at `0+` when `p < 1`.
    pub fn singular_exponent(&self) -> Option<f64> {
        match self {
            Self::MittagLeffler { alpha, .. } => Some(*alpha),
            Self::MixedMittagLeffler { alpha1, alpha2, .. } if alpha1 + alpha2 < 1.0 => {
                Some(alpha1 + alpha2)
            }
            _ => None,
        }
    }

    /// True when `φ` is bounded and non-increasing on `[0, ∞)`.
    pub fn is_monotone_bounded(&self) -> bool {
        match self {
            Self::Exponential { .. } | Self::ExponentialMixture { .. } => true,
            Self::Tabulated(t) => t.values.windows(2).all(|w| w[1] <= w[0]),
            _ => false,
        }
    }

    /// Excitation density `φ(t)`; `0` for `t < 0`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(HawkesError::Numeric("phi evaluated at NaN".into()));
        }
        if t < 0.0 {
            return Ok(0.0);
        }
        match self {
            Self::Exponential { m, beta } => Ok(m * beta * (-beta * t).exp()),
            Self::ExponentialMixture { weights, rates } => Ok(weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r * (-r * t).exp())
                .sum()),
            Self::MittagLeffler { alpha, beta } => ml_density(*alpha, *beta, t),
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => mixed_ml_density(*alpha1, *beta1, *alpha2, *beta2, t),
            Self::ScaledStable { alpha, xi } => {
                if t == 0.0 {
                    return Ok(0.0);
                }
                xi.expect(|x| {
                    let s = x.powf(1.0 / alpha);
                    Ok(stable_pdf(*alpha, t / s)? / s)
                })
            }
            Self::Tabulated(tab) => tab.phi(t),
        }
    }

    /// Integrated tail `Φ(t) = ∫_t^∞ φ`; `Φ(t) = m` for `t ≤ 0`.
    pub fn big_phi(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(HawkesError::Numeric("Phi evaluated at NaN".into()));
        }
        if t <= 0.0 {
            return Ok(self.branching_ratio());
        }
        if t == f64::INFINITY {
            return Ok(0.0);
        }
        match self {
            Self::Exponential { m, beta } => Ok(m * (-beta * t).exp()),
            Self::ExponentialMixture { weights, rates } => Ok(weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * (-r * t).exp())
                .sum()),
            Self::MittagLeffler { alpha, beta } => ml_survival(*alpha, *beta, t),
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => mixed_ml_survival(*alpha1, *beta1, *alpha2, *beta2, t),
            Self::ScaledStable { alpha, xi } => {
                xi.expect(|x| stable_sf(*alpha, t / x.powf(1.0 / alpha)))
            }
            Self::Tabulated(tab) => Ok(tab.big_phi(t)),
        }
    }

    /// `∫_a^b Φ(s) ds` for `0 ≤ a ≤ b`, in closed form where available.
    pub fn big_phi_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && b >= a) {
            return Err(HawkesError::InvalidParameter(format!(
                "bad interval [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        match self {
            Self::Exponential { m, beta } => {
                Ok(m / beta * (-beta * a).exp() * -(-beta * (b - a)).exp_m1())
            }
            Self::ExponentialMixture { weights, rates } => Ok(weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w / r * (-r * a).exp() * -(-r * (b - a)).exp_m1())
                .sum()),
            Self::MittagLeffler { alpha, beta } => {
                Ok(ml_survival_antiderivative(*alpha, *beta, b)?
                    - ml_survival_antiderivative(*alpha, *beta, a)?)
            }
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } if alpha1 == alpha2 && beta1 != beta2 => {
                let f = |t: f64| -> Result<f64> {
                    Ok((beta2 * ml_survival_antiderivative(*alpha1, *beta1, t)?
                        - beta1 * ml_survival_antiderivative(*alpha2, *beta2, t)?)
                        / (beta2 - beta1))
                };
                Ok(f(b)? - f(a)?)
            }
            Self::Tabulated(tab) => Ok(tab.big_phi_integral(a, b)),
            _ => integrate_plain(|s| self.big_phi(s), a, b),
        }
    }

    /// `Ψ_k(t) = ∫_0^t s^k φ(s) ds`; `t = ∞` is allowed and may return `∞`.
    pub fn psi_k(&self, t: f64, order: u32) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(HawkesError::InvalidParameter(format!(
                "psi_k needs t >= 0, got {t}"
            )));
        }
        let m = self.branching_ratio();
        if order == 0 {
            return Ok(m - self.big_phi(t)?);
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t == f64::INFINITY {
            let fact: f64 = (1..=order).map(f64::from).product();
            return Ok(match self {
                Self::Exponential { m, beta } => m * fact / beta.powi(order as i32),
                Self::ExponentialMixture { weights, rates } => weights
                    .iter()
                    .zip(rates)
                    .map(|(w, r)| w * fact / r.powi(order as i32))
                    .sum(),
                Self::MittagLeffler { .. }
                | Self::MixedMittagLeffler { .. }
                | Self::ScaledStable { .. } => f64::INFINITY,
                Self::Tabulated(tab) => tab.psi_k(t, order),
            });
        }
        if let Self::Tabulated(tab) = self {
            return Ok(tab.psi_k(t, order));
        }
        let k = order as i32;
        let g = |s: f64| -> Result<f64> { Ok(s.powi(k) * self.phi(s)?) };
        match self.singular_exponent() {
            Some(p) => integrate_singular_left(g, 0.0, t, p),
            None => integrate_plain(g, 0.0, t),
        }
    }

    /// Dispersion `σ = Ψ_1(∞)`.
    pub fn dispersion_sigma(&self) -> Result<f64> {
        match self {
            Self::Tabulated(tab) => tab.dispersion(),
            _ => self.psi_k(f64::INFINITY, 1),
        }
    }

    /// `Φ̂(λ) = ∫ (1 - e^{-λt}) φ(t) dt`.
    pub fn laplace_big_phi(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(HawkesError::InvalidParameter(format!(
                "Laplace argument {lambda} must be >= 0"
            )));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        if lambda == f64::INFINITY {
            return Ok(self.branching_ratio());
        }
        Ok(match self {
            Self::Exponential { m, beta } => m * lambda / (lambda + beta),
            Self::ExponentialMixture { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * lambda / (lambda + r))
                .sum(),
            Self::MittagLeffler { alpha, beta } => {
                let la = lambda.powf(*alpha);
                la / (beta + la)
            }
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => {
                let (l1, l2) = (lambda.powf(*alpha1), lambda.powf(*alpha2));
                // 1 - β1β2/((β1+l1)(β2+l2)), written without cancellation
                (l1 * l2 + beta1 * l2 + beta2 * l1) / ((beta1 + l1) * (beta2 + l2))
            }
            Self::ScaledStable { alpha, xi } => {
                let la = lambda.powf(*alpha);
                xi.expect(|x| Ok(-(-la * x).exp_m1()))?
            }
            Self::Tabulated(tab) => tab.laplace(lambda),
        })
    }

    /// First-order (and where known second-order) regular variation of `Φ` at infinity.
    pub fn tail_profile(&self) -> Option<RVProfile> {
        match self {
            Self::MittagLeffler { alpha, beta } => {
                let (a, b) = (*alpha, *beta);
                // Φ(t) = t^{-α}/(βΓ(1-α)) (1 + A(t) + ...), A(t) = -Γ(1-α)/(βΓ(1-2α)) t^{-α}
                let c = rgamma(1.0 - 2.0 * a) / (b * rgamma(1.0 - a));
                Some(RVProfile {
                    index: -a,
                    second_order_rho: Some(-a),
                    auxiliary: Some(Arc::new(move |t: f64| -c * t.powf(-a))),
                })
            }
            Self::MixedMittagLeffler { alpha1, alpha2, .. } => Some(RVProfile {
                index: -alpha1,
                second_order_rho: if alpha1 == alpha2 {
                    Some(-alpha1)
                } else {
                    None
                },
                auxiliary: None,
            }),
            Self::ScaledStable { alpha, .. } => Some(RVProfile::first_order(-alpha)),
            _ => None,
        }
    }

    /// Prepares a sampler for the delay law `φ/m`.
    pub fn delay_sampler(&self) -> Result<DelaySampler> {
        let m = self.branching_ratio();
        if !(m > 0.0) {
            return Err(HawkesError::Unsupported(
                "delay law undefined for a kernel with m = 0".into(),
            ));
        }
        Ok(match self {
            Self::Exponential { beta, .. } => DelaySampler::Exponential { rate: *beta },
            Self::ExponentialMixture { weights, rates } => {
                let mut cum = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for w in weights {
                    acc += w / m;
                    cum.push(acc);
                }
                DelaySampler::Mixture {
                    cum,
                    rates: rates.clone(),
                }
            }
            Self::MittagLeffler { alpha, beta } => DelaySampler::MittagLeffler {
                alpha: *alpha,
                beta: *beta,
            },
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => DelaySampler::MixedMittagLeffler {
                alpha1: *alpha1,
                beta1: *beta1,
                alpha2: *alpha2,
                beta2: *beta2,
            },
            Self::ScaledStable { alpha, xi } => DelaySampler::ScaledStable {
                alpha: *alpha,
                xi: xi.clone(),
            },
            Self::Tabulated(tab) => DelaySampler::Tabulated(Box::new(tab.clone())),
        })
    }

    /// One draw from `φ/m`. Prefer [`KernelSpec::delay_sampler`] in loops.
    pub fn sample_offspring_delay<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(self.delay_sampler()?.sample(rng))
    }
}

fn mixed_ml_density(a1: f64, b1: f64, a2: f64, b2: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Ok(0.0);
    }
    if a1 == a2 && b1 != b2 {
        if t == 0.0 {
            return Ok(if 2.0 * a1 < 1.0 {
                f64::INFINITY
            } else if 2.0 * a1 == 1.0 {
                b1 * b2
            } else {
                0.0
            });
        }
        let v = (b2 * ml_density(a1, b1, t)? - b1 * ml_density(a2, b2, t)?) / (b2 - b1);
        return Ok(v.max(0.0));
    }
    if t == 0.0 {
        let p = a1 + a2;
        return Ok(if p < 1.0 {
            f64::INFINITY
        } else if p == 1.0 {
            b1 * b2 * rgamma(p)
        } else {
            0.0
        });
    }
    // ∫_0^t f1(t-s) f2(s) ds, split at t/2 with power substitutions at both ends
    let half = 0.5 * t;
    let left = integrate_singular_left(
        |s| Ok(ml_density(a1, b1, t - s)? * ml_density(a2, b2, s)?),
        0.0,
        half,
        a2,
    )?;
    let right = integrate_singular_left(
        |u| Ok(ml_density(a1, b1, u)? * ml_density(a2, b2, t - u)?),
        0.0,
        half,
        a1,
    )?;
    Ok((left + right).max(0.0))
}

fn mixed_ml_survival(a1: f64, b1: f64, a2: f64, b2: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(1.0);
    }
    if a1 == a2 && b1 != b2 {
        let v = (b2 * ml_survival(a1, b1, t)? - b1 * ml_survival(a2, b2, t)?) / (b2 - b1);
        return Ok(v.clamp(0.0, 1.0));
    }
    // P(D1 + D2 > t) = Φ2(t) + ∫_0^t Φ1(t-s) f2(s) ds
    let half = 0.5 * t;
    let left = integrate_singular_left(
        |s| Ok(ml_survival(a1, b1, t - s)? * ml_density(a2, b2, s)?),
        0.0,
        half,
        a2,
    )?;
    let right = integrate_plain(
        |s| Ok(ml_survival(a1, b1, t - s)? * ml_density(a2, b2, s)?),
        half,
        t,
    )?;
    Ok((ml_survival(a2, b2, t)? + left + right).clamp(0.0, 1.0))
}

/// Draw with Laplace transform `e^{-λ^α}` (Kanter's representation).
pub fn sample_one_sided_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    loop {
        let u = PI * rng.random::<f64>();
        let w: f64 = Exp1.sample(rng);
        if w == 0.0 {
            continue;
        }
        let z = (kanter_a(alpha, u) / w).powf((1.0 - alpha) / alpha);
        if z > 0.0 && z.is_finite() {
            return z;
        }
    }
}

fn sample_ml_delay<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    let z = sample_one_sided_stable(alpha, rng);
    z * (e / beta).powf(1.0 / alpha)
}

/// Precomputed sampler for the delay law `φ/m`.
#[derive(Debug, Clone)]
pub enum DelaySampler {
    Exponential {
        rate: f64,
    },
    Mixture {
        cum: Vec<f64>,
        rates: Vec<f64>,
    },
    MittagLeffler {
        alpha: f64,
        beta: f64,
    },
    MixedMittagLeffler {
        alpha1: f64,
        beta1: f64,
        alpha2: f64,
        beta2: f64,
    },
    ScaledStable {
        alpha: f64,
        xi: ScaleFactor,
    },
    Tabulated(Box<TabulatedKernel>),
}

impl DelaySampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Self::Mixture { cum, rates } => {
                let u = rng.random::<f64>();
                let i = cum.partition_point(|&c| c <= u).min(rates.len() - 1);
                let e: f64 = Exp1.sample(rng);
                e / rates[i]
            }
            Self::MittagLeffler { alpha, beta } => sample_ml_delay(*alpha, *beta, rng),
            Self::MixedMittagLeffler {
                alpha1,
                beta1,
                alpha2,
                beta2,
            } => sample_ml_delay(*alpha1, *beta1, rng) + sample_ml_delay(*alpha2, *beta2, rng),
            Self::ScaledStable { alpha, xi } => {
                let x = xi.sample(rng);
                sample_one_sided_stable(*alpha, rng) * x.powf(1.0 / alpha)
            }
            Self::Tabulated(tab) => tab.sample(rng),
        }
    }
}
