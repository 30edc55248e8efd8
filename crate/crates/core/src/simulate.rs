//! Path samplers: Hawkes processes, the CIR limit diffusion and the Gaussian limit processes.

use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::kernels::KernelSpec;
use crate::volterra::Grid;
use crate::{HawkesError, Result};

/// Default cap on the number of events in one cluster-simulated path.
pub const DEFAULT_EVENT_CAP: usize = 10_000_000;

/// Independent stream for one replica of an experiment seeded with `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs `f` on `replicas` independent streams in parallel; results come back in replica order.
pub fn run_replicas<T, F>(seed: u64, replicas: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            f(r, &mut rng)
        })
        .collect()
}

/// Event times of one path on `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPath {
    horizon: f64,
    events: Vec<f64>,
    truncated: bool,
}

impl EventPath {
    /// Builds a path from event times, which must be strictly increasing in `(0, horizon]`.
    pub fn new(horizon: f64, events: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(HawkesError::InvalidParameter(format!(
                "horizon={horizon} must be positive"
            )));
        }
        if events.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(HawkesError::InvalidParameter(
                "event times must be strictly increasing".into(),
            ));
        }
        if let (Some(&first), Some(&last)) = (events.first(), events.last()) {
            if !(first > 0.0 && last <= horizon) {
                return Err(HawkesError::InvalidParameter(format!(
                    "event times must lie in (0, {horizon}]"
                )));
            }
        }
        Ok(Self {
            horizon,
            events,
            truncated: false,
        })
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(horizon, Vec::new())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[f64] {
        &self.events
    }

    /// Set when the sampler stopped at its event cap.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `N(t)`: number of events in `(0, t]`.
    pub fn count(&self, t: f64) -> usize {
        self.events.partition_point(|&e| e <= t)
    }

    /// CSV with header `index,time`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,time")?;
        for (i, t) in self.events.iter().enumerate() {
            writeln!(w, "{i},{t:e}")?;
        }
        Ok(())
    }
}

fn check_rate(mu0: f64, horizon: f64) -> Result<()> {
    if !(mu0 > 0.0 && mu0.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "mu0={mu0} must be positive"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "horizon={horizon} must be positive"
        )));
    }
    Ok(())
}

fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| HawkesError::InvalidParameter(e.to_string()))?;
    Ok(d.sample(rng) as u64)
}

/// Samples a path through the cluster representation: Poisson immigrants at rate `mu0`,
/// each event spawning `Poisson(m)` children at delays drawn from `φ/m`.
/// Expansion is breadth first; once `event_cap` events are kept the path is returned with
/// the truncated flag set.
pub fn simulate_cluster<R: Rng + ?Sized>(
    k: &KernelSpec,
    mu0: f64,
    horizon: f64,
    rng: &mut R,
    event_cap: usize,
) -> Result<EventPath> {
    check_rate(mu0, horizon)?;
    if event_cap == 0 {
        return Err(HawkesError::InvalidParameter(
            "event_cap must be positive".into(),
        ));
    }
    let m = k.branching_ratio();
    let sampler = if m > 0.0 {
        Some(k.delay_sampler()?)
    } else {
        None
    };

    let immigrants = poisson_draw(mu0 * horizon, rng)?;
    let mut events = Vec::with_capacity(immigrants as usize);
    let mut truncated = false;
    for _ in 0..immigrants {
        if events.len() >= event_cap {
            truncated = true;
            break;
        }
        // 1 - U lies in (0, 1]
        events.push(horizon * (1.0 - rng.random::<f64>()));
    }
    events.sort_by(f64::total_cmp);

    if let Some(sampler) = sampler {
        let mut queue: VecDeque<f64> = events.iter().copied().collect();
        'outer: while let Some(parent) = queue.pop_front() {
            let children = poisson_draw(m, rng)?;
            for _ in 0..children {
                let t = parent + sampler.sample(rng);
                if t <= horizon {
                    if events.len() >= event_cap {
                        truncated = true;
                        break 'outer;
                    }
                    events.push(t);
                    queue.push_back(t);
                }
            }
        }
        events.sort_by(f64::total_cmp);
    }
    events.dedup();
    Ok(EventPath {
        horizon,
        events,
        truncated,
    })
}

enum Excitation {
    /// `(weight·rate, rate, current sum of e^{-rate(t - τ)})` per component.
    Exponential(Vec<(f64, f64, f64)>, f64),
    Direct(Vec<f64>),
}

impl Excitation {
    fn new(k: &KernelSpec) -> Self {
        match k {
            KernelSpec::Exponential { m, beta } => {
                Self::Exponential(vec![(m * beta, *beta, 0.0)], 0.0)
            }
            KernelSpec::ExponentialMixture { weights, rates } => Self::Exponential(
                weights
                    .iter()
                    .zip(rates)
                    .map(|(w, r)| (w * r, *r, 0.0))
                    .collect(),
                0.0,
            ),
            _ => Self::Direct(Vec::new()),
        }
    }

    fn advance(&mut self, t: f64) {
        if let Self::Exponential(comps, now) = self {
            for c in comps.iter_mut() {
                c.2 *= (-c.1 * (t - *now)).exp();
            }
            *now = t;
        }
    }

    fn excitation(&self, k: &KernelSpec, t: f64) -> Result<f64> {
        match self {
            Self::Exponential(comps, _) => Ok(comps.iter().map(|c| c.0 * c.2).sum()),
            Self::Direct(events) => {
                let t_max = match k {
                    KernelSpec::Tabulated(tab) => tab.t_max(),
                    _ => f64::INFINITY,
                };
                let mut s = 0.0;
                for &e in events.iter().rev() {
                    if t - e > t_max {
                        break;
                    }
                    s += k.phi(t - e)?;
                }
                Ok(s)
            }
        }
    }

    fn record(&mut self, t: f64) {
        match self {
            Self::Exponential(comps, _) => comps.iter_mut().for_each(|c| c.2 += 1.0),
            Self::Direct(events) => events.push(t),
        }
    }
}

/// Ogata thinning with the intensity just after the current time as dominating rate.
/// Only kernels that are bounded and non-increasing are supported.
pub fn simulate_thinning<R: Rng + ?Sized>(
    k: &KernelSpec,
    mu0: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<EventPath> {
    check_rate(mu0, horizon)?;
    if !k.is_monotone_bounded() {
        return Err(HawkesError::Unsupported(format!(
            "thinning needs a bounded non-increasing kernel, got {}",
            k.name()
        )));
    }
    let mut state = Excitation::new(k);
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        let bound = mu0 + state.excitation(k, t)?;
        let e: f64 = Exp1.sample(rng);
        t += e / bound;
        if t > horizon {
            break;
        }
        state.advance(t);
        let lambda = mu0 + state.excitation(k, t)?;
        if rng.random::<f64>() * bound < lambda {
            events.push(t);
            state.record(t);
        }
    }
    Ok(EventPath {
        horizon,
        events,
        truncated: false,
    })
}

/// `(N(t), I_Λ(t), Ñ(t))` for one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStatistics {
    pub count: f64,
    pub compensator: f64,
    pub martingale: f64,
}

/// Count, compensator `μ0 t + Σ_{τ<t} (m − Φ(t − τ))` and their difference at time `t`.
pub fn path_statistics(p: &EventPath, k: &KernelSpec, mu0: f64, t: f64) -> Result<PathStatistics> {
    if t > p.horizon * (1.0 + 1e-12) {
        return Err(HawkesError::Horizon {
            needed: t,
            available: p.horizon,
        });
    }
    let m = k.branching_ratio();
    let n = p.count(t);
    let mut comp = mu0 * t;
    for &tau in &p.events[..n] {
        if tau < t {
            comp += m - k.big_phi(t - tau)?;
        }
    }
    let count = n as f64;
    Ok(PathStatistics {
        count,
        compensator: comp,
        martingale: count - comp,
    })
}

/// One row of a batch statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRecord {
    pub replica: u64,
    pub t: f64,
    pub stats: PathStatistics,
}

/// CSV with header `replica,t,N,I_Lambda,Ntilde`.
pub fn write_batch_csv<W: Write>(records: &[BatchRecord], mut w: W) -> Result<()> {
    writeln!(w, "replica,t,N,I_Lambda,Ntilde")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:e},{:e}",
            r.replica, r.t, r.stats.count, r.stats.compensator, r.stats.martingale
        )?;
    }
    Ok(())
}

/// Values of a process on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    grid: Grid,
    values: Vec<f64>,
}

impl GridPath {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at the last node.
    pub fn terminal(&self) -> f64 {
        *self
            .values
            .last()
            .expect("grid paths have at least two nodes")
    }

    /// Trapezoidal integral over the whole grid.
    pub fn integral(&self) -> f64 {
        let h = self.grid.step();
        self.values
            .windows(2)
            .map(|w| 0.5 * h * (w[0] + w[1]))
            .sum()
    }
}

/// Path of `Λ*`, the CIR diffusion without mean reversion.
pub type CirPath = GridPath;

/// Path of a Gaussian limit process.
pub type GaussianLimitPath = GridPath;

/// Full-truncation Euler scheme for `dΛ* = (μ0/σ) dt + σ^{-1} √Λ* dB`, `Λ*(0) = 0`.
pub fn simulate_cir<R: Rng + ?Sized>(
    mu0: f64,
    sigma: f64,
    horizon: f64,
    steps: usize,
    rng: &mut R,
) -> Result<CirPath> {
    check_rate(mu0, horizon)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "sigma={sigma} must be positive"
        )));
    }
    let grid = Grid::with_cells(horizon, steps)?;
    let h = grid.step();
    let sq = h.sqrt();
    let mut x = 0.0f64;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(0.0);
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        x += mu0 / sigma * h + x.max(0.0).sqrt() / sigma * sq * z;
        values.push(x.max(0.0));
    }
    Ok(GridPath { grid, values })
}

/// Which Gaussian limit to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianLimitKind {
    /// `√(μ0 (1−m)^{-3}) B(t) − μ0 Ψ* (1−m)^{-2} √t`.
    Subcritical { m: f64, psi_star: f64 },
    /// `√(μ0 (α+1)) ∫_0^t (t−s)^α s^{α/2} dB(s)`.
    StronglyCritical { alpha: f64 },
}

/// Samples a Gaussian limit path from one sequence of Brownian increments; stochastic
/// integrals use left-point sums.
pub fn simulate_limit_gaussian<R: Rng + ?Sized>(
    kind: GaussianLimitKind,
    mu0: f64,
    grid: &Grid,
    rng: &mut R,
) -> Result<GaussianLimitPath> {
    if !(mu0 > 0.0 && mu0.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "mu0={mu0} must be positive"
        )));
    }
    let n = grid.cells();
    let h = grid.step();
    let db: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * h.sqrt()
        })
        .collect();
    let values = match kind {
        GaussianLimitKind::Subcritical { m, psi_star } => {
            if !(0.0..1.0).contains(&m) || !(psi_star >= 0.0 && psi_star.is_finite()) {
                return Err(HawkesError::InvalidParameter(format!(
                    "subcritical limit needs m in [0,1) and finite psi_star >= 0, got m={m}, psi_star={psi_star}"
                )));
            }
            let scale = (mu0 / (1.0 - m).powi(3)).sqrt();
            let drift = mu0 * psi_star / (1.0 - m).powi(2);
            let mut b = 0.0;
            let mut out = Vec::with_capacity(n + 1);
            out.push(0.0);
            for (j, d) in db.iter().enumerate() {
                b += d;
                out.push(scale * b - drift * grid.node(j + 1).sqrt());
            }
            out
        }
        GaussianLimitKind::StronglyCritical { alpha } => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(HawkesError::InvalidParameter(format!(
                    "alpha={alpha} must lie in [0,1]"
                )));
            }
            let scale = (mu0 * (alpha + 1.0)).sqrt();
            let weighted: Vec<f64> = (0..n)
                .map(|i| grid.node(i).powf(0.5 * alpha) * db[i])
                .collect();
            let mut out = Vec::with_capacity(n + 1);
            out.push(0.0);
            for j in 1..=n {
                let t = grid.node(j);
                let s: f64 = (0..j)
                    .map(|i| (t - grid.node(i)).powf(alpha) * weighted[i])
                    .sum();
                out.push(scale * s);
            }
            out
        }
    };
    Ok(GridPath {
        grid: *grid,
        values,
    })
}

/// Left-continuous intensity `Λ(t) = μ0 + Σ_{τ<t} φ(t − τ)`.
pub fn intensity(p: &EventPath, k: &KernelSpec, mu0: f64, t: f64) -> Result<f64> {
    if t > p.horizon * (1.0 + 1e-12) {
        return Err(HawkesError::Horizon {
            needed: t,
            available: p.horizon,
        });
    }
    let t_max = match k {
        KernelSpec::Tabulated(tab) => tab.t_max(),
        _ => f64::INFINITY,
    };
    let mut s = mu0;
    for &tau in p.events.iter().take_while(|&&tau| tau < t) {
        if t - tau <= t_max {
            s += k.phi(t - tau)?;
        }
    }
    Ok(s)
}
