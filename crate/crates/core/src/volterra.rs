//! Linear resolvent equation, the nonlinear Volterra equations for the
//! Fourier-Laplace functional, and the CIR Riccati equation.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{HawkesError, Result};
use crate::kernels::KernelSpec;

/// Uniform grid `t_j = j h`, `j = 0..=n`, with `n = ⌈T/h⌉`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    horizon: f64,
    step: f64,
    n: usize,
}

impl Grid {
    pub fn new(horizon: f64, step: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(HawkesError::InvalidParameter(format!(
                "horizon {horizon} must be positive"
            )));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(HawkesError::InvalidParameter(format!(
                "step {step} must be positive"
            )));
        }
        if step > horizon {
            return Err(HawkesError::InvalidParameter(format!(
                "step {step} exceeds horizon {horizon}"
            )));
        }
        let ratio = horizon / step;
        let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio {
            ratio.round()
        } else {
            ratio.ceil()
        } as usize;
        Ok(Self { horizon, step, n })
    }

    /// Grid with `n` cells on `[0, T]`.
    pub fn with_cells(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(HawkesError::InvalidParameter(
                "grid needs at least one cell".into(),
            ));
        }
        let g = Self::new(horizon, horizon / n as f64)?;
        Ok(Self { n, ..g })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of cells; there are `cells() + 1` nodes.
    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn node(&self, j: usize) -> f64 {
        let t = j as f64 * self.step;
        // snap the last node onto T when the cells tile [0, T]
        if j == self.n && (t - self.horizon).abs() <= 1e-9 * self.horizon {
            self.horizon
        } else {
            t
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(move |j| self.node(j))
    }

    /// Last node, `⌈T/h⌉ h ≥ T`.
    pub fn end(&self) -> f64 {
        self.node(self.n)
    }

    /// Index of the node equal to `t` (to rounding), if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let x = t / self.step;
        let j = x.round();
        if j >= 0.0 && (x - j).abs() <= 1e-8 * x.max(1.0) && j as usize <= self.n {
            Some(j as usize)
        } else {
            None
        }
    }

    /// Cell index `j` and offset fraction for `t ∈ [0, end]`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !(t >= 0.0) || t > self.end() * (1.0 + 1e-12) {
            return Err(HawkesError::OutOfRange { t, max: self.end() });
        }
        let x = t / self.step;
        let j = (x.floor() as usize).min(self.n.saturating_sub(1));
        Ok((j, (x - j as f64).clamp(0.0, 1.0)))
    }
}

/// Per-cell integrals of `Φ` and node values needed by the product-integration weights.
struct TailTable {
    /// `Φ(t_j)`, `j = 0..=n`.
    phi_tail: Vec<f64>,
    /// `q_d = (1/h) ∫_{dh}^{(d+1)h} Φ`, `d = 0..n`.
    q: Vec<f64>,
}

impl TailTable {
    fn new(k: &KernelSpec, grid: &Grid) -> Result<Self> {
        let n = grid.cells();
        let h = grid.step();
        let mut phi_tail = Vec::with_capacity(n + 1);
        for j in 0..=n {
            phi_tail.push(k.big_phi(grid.node(j))?);
        }
        let mut q = Vec::with_capacity(n);
        for d in 0..n {
            q.push(k.big_phi_integral(grid.node(d), grid.node(d + 1))? / h);
        }
        Ok(Self { phi_tail, q })
    }
}

/// Grid solution of the resolvent equation `R = φ + R*φ`.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    grid: Grid,
    mu0: f64,
    r: Vec<f64>,
    i_r: Vec<f64>,
    i2_r: Vec<f64>,
    h_mu: Vec<f64>,
}

/// Solves the resolvent equation by marching on `I_R`, taken piecewise linear
/// on the grid, with exact cell integrals of the kernel:
///
/// `I_R(t_j) = m - Φ(t_j) + ∫_0^{t_j} (m - Φ(t_j - s)) dI_R(s)`.
///
/// `R` at the nodes follows from `R = φ + φ * dI_R`; `I²_R` is exact for the
/// piecewise-linear `I_R`.
pub fn solve_resolvent(k: &KernelSpec, grid: &Grid, mu0: f64) -> Result<ResolventTable> {
    if !(mu0 >= 0.0 && mu0.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "mu0={mu0} must be finite and >= 0"
        )));
    }
    let n = grid.cells();
    let h = grid.step();
    let m = k.branching_ratio();
    let tails = TailTable::new(k, grid)?;
    let q = &tails.q;
    let diag = 1.0 - m + q[0];
    if !(diag > 0.0) {
        return Err(HawkesError::StepSize(format!(
            "resolvent step ill-posed: 1 - m + q0 = {diag:e} (m={m}); decrease the step"
        )));
    }
    let mut y = vec![0.0; n + 1];
    let mut dy = vec![0.0; n];
    for j in 1..=n {
        let mut acc = m - tails.phi_tail[j] + y[j - 1] * q[0];
        // Σ_{c ≤ j-2} (y_{c+1} - y_c) q_{j-1-c}
        let mut s = 0.0;
        for c in 0..j - 1 {
            s += dy[c] * q[j - 1 - c];
        }
        acc -= s;
        y[j] = acc / diag;
        dy[j - 1] = y[j] - y[j - 1];
        if !y[j].is_finite() {
            return Err(HawkesError::Numeric(format!(
                "resolvent diverged at t={}",
                grid.node(j)
            )));
        }
    }
    // R_j = φ(t_j) + Σ_c (dy_c / h)(Φ(t_{j-1-c}) - Φ(t_{j-c}))
    let mut r = vec![0.0; n + 1];
    r[0] = k.phi(0.0)?;
    for (j, rj) in r.iter_mut().enumerate().skip(1) {
        let s: f64 = dy[..j]
            .iter()
            .enumerate()
            .map(|(c, dyc)| {
                let d = j - 1 - c;
                dyc * (tails.phi_tail[d] - tails.phi_tail[d + 1])
            })
            .sum();
        *rj = (k.phi(grid.node(j))? + s / h).max(0.0);
    }
    let mut i2 = vec![0.0; n + 1];
    for j in 1..=n {
        i2[j] = i2[j - 1] + 0.5 * h * (y[j] + y[j - 1]);
    }
    let h_mu = y.iter().map(|v| mu0 * (1.0 + v)).collect();
    Ok(ResolventTable {
        grid: *grid,
        mu0,
        r,
        i_r: y,
        i2_r: i2,
        h_mu,
    })
}

impl ResolventTable {
    /// Table for the zero kernel (`R ≡ 0`).
    pub fn zero(grid: &Grid, mu0: f64) -> Self {
        let n = grid.cells() + 1;
        Self {
            grid: *grid,
            mu0,
            r: vec![0.0; n],
            i_r: vec![0.0; n],
            i2_r: vec![0.0; n],
            h_mu: vec![mu0; n],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn i_r(&self) -> &[f64] {
        &self.i_r
    }

    pub fn i2_r(&self) -> &[f64] {
        &self.i2_r
    }

    pub fn h_mu(&self) -> &[f64] {
        &self.h_mu
    }

    /// `I_R(t)`, linear between nodes.
    pub fn i_r_at(&self, t: f64) -> Result<f64> {
        let (j, w) = self.grid.locate(t)?;
        Ok(self.i_r[j] * (1.0 - w) + self.i_r[j + 1] * w)
    }

    /// `I²_R(t)`, exact integral of the piecewise-linear `I_R`.
    pub fn i2_r_at(&self, t: f64) -> Result<f64> {
        let (j, w) = self.grid.locate(t)?;
        let h = self.grid.step();
        let x = w * h;
        let slope = (self.i_r[j + 1] - self.i_r[j]) / h;
        Ok(self.i2_r[j] + self.i_r[j] * x + 0.5 * slope * x * x)
    }

    /// `R(t)`; inside the first cell of a singular kernel the cell average is used.
    pub fn r_at(&self, t: f64) -> Result<f64> {
        let (j, w) = self.grid.locate(t)?;
        if j == 0 && !self.r[0].is_finite() {
            return Ok(self.i_r[1] / self.grid.step());
        }
        Ok(self.r[j] * (1.0 - w) + self.r[j + 1] * w)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,R,I_R,I2_R")?;
        for j in 0..=self.grid.cells() {
            writeln!(
                w,
                "{},{},{},{}",
                self.grid.node(j),
                self.r[j],
                self.i_r[j],
                self.i2_r[j]
            )?;
        }
        Ok(())
    }
}

/// `E[N(t)] = μ0 (t + I²_R(t))`.
pub fn mean_count(table: &ResolventTable, mu0: f64, t: f64) -> Result<f64> {
    Ok(mu0 * (t + table.i2_r_at(t)?))
}

/// `Var N(t) = μ0 ∫_0^t (1 + I_R(t-s))² (1 + I_R(s)) ds`, for `t` a grid node.
pub fn variance_count(table: &ResolventTable, mu0: f64, t: f64) -> Result<f64> {
    let j = table.grid.node_index(t).ok_or_else(|| {
        HawkesError::InvalidParameter(format!("variance_count needs t={t} on the grid"))
    })?;
    let y = &table.i_r;
    let h = table.grid.step();
    let f = |i: usize| (1.0 + y[j - i]).powi(2) * (1.0 + y[i]);
    let mut s = 0.0;
    for i in 0..j {
        // Simpson on each cell with linearly interpolated I_R
        let mid = (1.0 + 0.5 * (y[j - i] + y[j - i - 1])).powi(2) * (1.0 + 0.5 * (y[i] + y[i + 1]));
        s += h / 6.0 * (f(i) + 4.0 * mid + f(i + 1));
    }
    Ok(mu0 * s)
}

/// `Î_R(λ) = (m - Φ̂(λ)) / (1 - m + Φ̂(λ))`.
pub fn laplace_ir(k: &KernelSpec, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(HawkesError::InvalidParameter(format!(
            "lambda={lambda} must be positive"
        )));
    }
    let m = k.branching_ratio();
    let ph = k.laplace_big_phi(lambda)?;
    let den = 1.0 - m + ph;
    if !(den > 0.0) {
        return Err(HawkesError::Domain(format!(
            "1 - m + Phi_hat(lambda) = {den:e} vanishes at lambda={lambda}"
        )));
    }
    Ok((m - ph) / den)
}

type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Test measure `ν` (atoms plus a density) and function `f` on `[0, T]`.
#[derive(Clone)]
pub struct FunctionalSpec {
    pub horizon: f64,
    pub atoms: Vec<(f64, Complex64)>,
    pub density: Option<ComplexFn>,
    pub f: Option<ComplexFn>,
}

impl fmt::Debug for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalSpec")
            .field("horizon", &self.horizon)
            .field("atoms", &self.atoms)
            .field("density", &self.density.as_ref().map(|_| "fn"))
            .field("f", &self.f.as_ref().map(|_| "fn"))
            .finish()
    }
}

impl FunctionalSpec {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            atoms: Vec::new(),
            density: None,
            f: None,
        }
    }

    pub fn with_atom(mut self, location: f64, weight: Complex64) -> Self {
        self.atoms.push((location, weight));
        self
    }

    pub fn with_density<F: Fn(f64) -> Complex64 + Send + Sync + 'static>(mut self, g: F) -> Self {
        self.density = Some(Arc::new(g));
        self
    }

    pub fn with_f<F: Fn(f64) -> Complex64 + Send + Sync + 'static>(mut self, g: F) -> Self {
        self.f = Some(Arc::new(g));
        self
    }

    /// `f ≡ c` on `[0, T]`.
    pub fn with_constant_f(self, c: Complex64) -> Self {
        self.with_f(move |_| c)
    }

    pub fn f_at(&self, t: f64) -> Complex64 {
        self.f.as_ref().map_or(Complex64::new(0.0, 0.0), |g| g(t))
    }

    pub fn density_at(&self, t: f64) -> Complex64 {
        self.density
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |g| g(t))
    }

    /// Checks atom locations and the sign conditions (functions are checked at the grid nodes).
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(HawkesError::InvalidParameter(
                "functional horizon must be positive".into(),
            ));
        }
        for &(loc, z) in &self.atoms {
            if !(0.0..=self.horizon).contains(&loc) {
                return Err(HawkesError::InvalidParameter(format!(
                    "atom at {loc} outside [0, {}]",
                    self.horizon
                )));
            }
            if z.re > 0.0 || !z.is_finite() {
                return Err(HawkesError::InvalidParameter(format!(
                    "atom weight {z} must have Re <= 0"
                )));
            }
        }
        for t in grid.nodes().filter(|&t| t <= self.horizon * (1.0 + 1e-12)) {
            let (d, f) = (self.density_at(t), self.f_at(t));
            if d.re > 0.0 || !d.is_finite() {
                return Err(HawkesError::InvalidParameter(format!(
                    "density has Re > 0 at t={t}"
                )));
            }
            if f.re > 0.0 || !f.is_finite() {
                return Err(HawkesError::InvalidParameter(format!(
                    "f has Re > 0 at t={t}"
                )));
            }
        }
        Ok(())
    }
}

/// Grid solution `V` of the nonlinear Volterra equation and `W = e^{V+f} - 1 - V`.
#[derive(Debug, Clone)]
pub struct ComplexVolterraSolution {
    grid: Grid,
    v: Vec<Complex64>,
    w: Vec<Complex64>,
    /// `φ*dν` (or `R*dν`) at the nodes.
    forcing: Vec<Complex64>,
    iterations: usize,
}

impl ComplexVolterraSolution {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn v(&self) -> &[Complex64] {
        &self.v
    }

    pub fn w(&self) -> &[Complex64] {
        &self.w
    }

    /// Linear forcing term at the nodes.
    pub fn forcing(&self) -> &[Complex64] {
        &self.forcing
    }

    /// Largest number of fixed-point iterations used at any node.
    pub fn max_iterations(&self) -> usize {
        self.iterations
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,ReV,ImV,ReW,ImW")?;
        for j in 0..=self.grid.cells() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.grid.node(j),
                self.v[j].re,
                self.v[j].im,
                self.w[j].re,
                self.w[j].im
            )?;
        }
        Ok(())
    }
}

const PICARD_TOL: f64 = 1e-12;
const PICARD_DAMP_AFTER: usize = 20;
const PICARD_MAX: usize = 200;

/// Product-integration weights `∫_cell K(t_j - s) ℓ(s) ds` for the two linear
/// hat pieces of cell `d = j-1-c`: `near` multiplies the value at `t_{c+1}`,
/// `far` the value at `t_c`.
struct Weights {
    near: Vec<f64>,
    far: Vec<f64>,
}

impl Weights {
    /// Exact weights for `φ` from `Φ` at the nodes and its cell averages.
    fn from_kernel(t: &TailTable) -> Self {
        let n = t.q.len();
        let mut near = Vec::with_capacity(n);
        let mut far = Vec::with_capacity(n);
        for d in 0..n {
            near.push((t.phi_tail[d] - t.q[d]).max(0.0));
            far.push((t.q[d] - t.phi_tail[d + 1]).max(0.0));
        }
        Self { near, far }
    }

    /// Weights for `R` taken constant (cell average) on each cell.
    fn from_resolvent(table: &ResolventTable) -> Self {
        let y = &table.i_r;
        let r = &table.r;
        let n = y.len() - 1;
        let h = table.grid.step();
        let mut near = Vec::with_capacity(n);
        let mut far = Vec::with_capacity(n);
        for d in 0..n {
            let a = y[d + 1] - y[d];
            if d == 0 && !r[0].is_finite() {
                near.push(0.5 * a);
                far.push(0.5 * a);
                continue;
            }
            // R linear on the cell, rescaled to the cell mass of I_R
            let (r0, r1) = (r[d], r[d + 1]);
            let lin = 0.5 * h * (r0 + r1);
            let scale = if lin > 0.0 { a / lin } else { 0.0 };
            near.push(scale * h * (r0 / 3.0 + r1 / 6.0));
            far.push(scale * h * (r0 / 6.0 + r1 / 3.0));
        }
        Self { near, far }
    }

    /// `Σ_{c<j} far_{j-1-c} u_c + near_{j-1-c} u_{c+1}`, excluding the `u_j` term.
    fn history(&self, u: &[Complex64], j: usize) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for c in 0..j {
            let d = j - 1 - c;
            s += u[c] * self.far[d];
            if c + 1 < j {
                s += u[c + 1] * self.near[d];
            }
        }
        s
    }
}

/// Kernel value used for an atom at distance `x ≥ 0`: `φ(x)`, or the first-cell
/// average when `φ(0)` is infinite and `x = 0`.
fn atom_kernel(k: &KernelSpec, tails: &TailTable, h: f64, x: f64) -> Result<f64> {
    let v = k.phi(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Ok((tails.phi_tail[0] - tails.phi_tail[1]) / h)
    }
}

fn node_values(spec: &FunctionalSpec, grid: &Grid) -> (Vec<Complex64>, Vec<Complex64>) {
    let f = grid.nodes().map(|t| spec.f_at(t)).collect();
    let d = grid.nodes().map(|t| spec.density_at(t)).collect();
    (f, d)
}

#[derive(Clone, Copy)]
enum Form {
    /// `V = φ*dν + φ*(e^{V+f} - 1)`
    Direct,
    /// `V = R*dν + R*(e^{V+f} - 1 - V)`
    Resolvent,
}

fn march(
    form: Form,
    weights: &Weights,
    forcing: Vec<Complex64>,
    f: &[Complex64],
    grid: &Grid,
) -> Result<ComplexVolterraSolution> {
    let n = grid.cells();
    let one = Complex64::new(1.0, 0.0);
    let nonlin = |v: Complex64, f: Complex64| -> Complex64 {
        match form {
            Form::Direct => (v + f).exp() - one,
            Form::Resolvent => (v + f).exp() - one - v,
        }
    };
    let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut u = vec![Complex64::new(0.0, 0.0); n + 1];
    v[0] = forcing[0];
    u[0] = nonlin(v[0], f[0]);
    let mut max_iter = 0;
    for j in 1..=n {
        let base = forcing[j] + weights.history(&u, j);
        let wj = weights.near[0];
        let mut x = v[j - 1];
        let mut converged = false;
        for it in 1..=PICARD_MAX {
            let mut next = base + wj * nonlin(x, f[j]);
            if it > PICARD_DAMP_AFTER {
                next = 0.5 * (x + next);
            }
            let delta = (next - x).norm();
            x = next;
            if delta <= PICARD_TOL * x.norm().max(1.0) {
                max_iter = max_iter.max(it);
                converged = true;
                break;
            }
        }
        if !converged || !x.is_finite() {
            return Err(HawkesError::Numeric(format!(
                "fixed-point iteration did not converge at t={} within {PICARD_MAX} iterations",
                grid.node(j)
            )));
        }
        v[j] = x;
        u[j] = nonlin(x, f[j]);
    }
    let one = Complex64::new(1.0, 0.0);
    let w = v
        .iter()
        .zip(f)
        .map(|(&v, &f)| (v + f).exp() - one - v)
        .collect();
    Ok(ComplexVolterraSolution {
        grid: *grid,
        v,
        w,
        forcing,
        iterations: max_iter,
    })
}

/// `∫_0^{t_j} K(t_j - s) g(s) ds` for node samples `g` by product integration.
fn convolve_nodes(weights: &Weights, g: &[Complex64], j: usize) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for c in 0..j {
        let d = j - 1 - c;
        s += g[c] * weights.far[d] + g[c + 1] * weights.near[d];
    }
    s
}

/// Solves `V = φ*dν + φ*(e^{V+f} - 1)` on the grid. Atoms enter the forcing
/// through exact kernel values; the history integral uses product integration
/// with exact cell integrals of `φ`; the newest node is resolved by fixed-point
/// iteration (damped after 20 iterations, capped at 200).
pub fn solve_fourier_laplace(
    k: &KernelSpec,
    spec: &FunctionalSpec,
    grid: &Grid,
) -> Result<ComplexVolterraSolution> {
    spec.validate(grid)?;
    let tails = TailTable::new(k, grid)?;
    let weights = Weights::from_kernel(&tails);
    let (f, dens) = node_values(spec, grid);
    let h = grid.step();
    let mut forcing = Vec::with_capacity(grid.cells() + 1);
    for j in 0..=grid.cells() {
        let t = grid.node(j);
        let mut g = convolve_nodes(&weights, &dens, j);
        for &(loc, z) in &spec.atoms {
            let x = t - loc;
            if x >= -1e-12 * h {
                g += z * atom_kernel(k, &tails, h, x.max(0.0))?;
            }
        }
        forcing.push(g);
    }
    march(Form::Direct, &weights, forcing, &f, grid)
}

/// Solves the equivalent form `V = R*dν + R*(e^{V+f} - 1 - V)` using a resolvent table on the same grid.
pub fn solve_fourier_laplace_resolvent(
    table: &ResolventTable,
    spec: &FunctionalSpec,
) -> Result<ComplexVolterraSolution> {
    let grid = table.grid;
    spec.validate(&grid)?;
    let weights = Weights::from_resolvent(table);
    let (f, dens) = node_values(spec, &grid);
    let mut forcing = Vec::with_capacity(grid.cells() + 1);
    for j in 0..=grid.cells() {
        let t = grid.node(j);
        let mut g = convolve_nodes(&weights, &dens, j);
        for &(loc, z) in &spec.atoms {
            let x = t - loc;
            if x >= -1e-12 * grid.step() {
                g += z * table.r_at(x.max(0.0))?;
            }
        }
        forcing.push(g);
    }
    march(Form::Resolvent, &weights, forcing, &f, &grid)
}

/// `exp{H_μ*dν(T) + H_μ*W(T)}` with `H_μ = μ0 (1 + I_R)`; `T` must be a grid node.
pub fn char_functional(
    sol: &ComplexVolterraSolution,
    spec: &FunctionalSpec,
    table: &ResolventTable,
    mu0: f64,
    t_end: f64,
) -> Result<Complex64> {
    if sol.grid != table.grid {
        return Err(HawkesError::InvalidParameter(
            "solution and resolvent table must share a grid".into(),
        ));
    }
    let grid = sol.grid;
    let j = grid
        .node_index(t_end)
        .ok_or_else(|| HawkesError::InvalidParameter(format!("T={t_end} is not a grid node")))?;
    let y = &table.i_r;
    let h = grid.step();
    let hmu = |i: usize| 1.0 + y[i];
    // ∫_0^T (1 + I_R(T-s)) g(s) ds for node samples g, Simpson per cell (exact for linear × linear)
    let integrate = |g: &dyn Fn(usize) -> Complex64| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for c in 0..j {
            let (a, b) = (hmu(j - c), hmu(j - c - 1));
            let (ga, gb) = (g(c), g(c + 1));
            s += h / 6.0 * (ga * a + (ga + gb) * (a + b) + gb * b);
        }
        s
    };
    let w = &sol.w;
    let mut expo = integrate(&|i| w[i]);
    let (_, dens) = node_values(spec, &grid);
    expo += integrate(&|i| dens[i]);
    for &(loc, z) in &spec.atoms {
        if loc <= t_end * (1.0 + 1e-12) {
            expo += z * (1.0 + table.i_r_at((t_end - loc).max(0.0))?);
        }
    }
    Ok((mu0 * expo).exp())
}

/// Grid solution of the CIR Riccati equation.
#[derive(Debug, Clone)]
pub struct CirRiccatiSolution {
    grid: Grid,
    v_star: Vec<Complex64>,
    /// `∫_0^{t_j} V*`.
    integral: Vec<Complex64>,
    sigma: f64,
}

impl CirRiccatiSolution {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn v_star(&self) -> &[Complex64] {
        &self.v_star
    }

    pub fn integral(&self) -> &[Complex64] {
        &self.integral
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

const CIR_BLOWUP: f64 = 1e8;

/// Solves `V*(t) = I_w(t)/σ + (1/2σ) ∫_0^t (V* + g)² ds` by RK4 with the atoms
/// of `w` applied as jumps; `spec.density`/`spec.atoms` give `w` and `spec.f` gives `g`.
pub fn solve_cir_riccati(
    spec: &FunctionalSpec,
    sigma: f64,
    grid: &Grid,
) -> Result<CirRiccatiSolution> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(HawkesError::InvalidParameter(format!(
            "sigma={sigma} must be positive and finite"
        )));
    }
    spec.validate(grid)?;
    for t in grid.nodes() {
        if spec.f_at(t).re != 0.0 {
            return Err(HawkesError::InvalidParameter(format!(
                "g must be purely imaginary (t={t})"
            )));
        }
    }
    let mut atoms = spec.atoms.clone();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rhs = |t: f64, v: Complex64| -> Complex64 {
        let s = v + spec.f_at(t);
        spec.density_at(t) / sigma + s * s / (2.0 * sigma)
    };
    // state (V*, ∫V*)
    let rk4 = |t: f64, v: Complex64, acc: Complex64, dt: f64| -> (Complex64, Complex64) {
        let k1 = rhs(t, v);
        let k2 = rhs(t + 0.5 * dt, v + 0.5 * dt * k1);
        let k3 = rhs(t + 0.5 * dt, v + 0.5 * dt * k2);
        let k4 = rhs(t + dt, v + dt * k3);
        let nv = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // acc' = V*, stage values of V* from the same RK4 stages
        let nacc = acc
            + dt / 6.0
                * (v + 2.0 * (v + 0.5 * dt * k1) + 2.0 * (v + 0.5 * dt * k2) + (v + dt * k3));
        (nv, nacc)
    };
    let n = grid.cells();
    let mut v_star = Vec::with_capacity(n + 1);
    let mut integral = Vec::with_capacity(n + 1);
    let mut next_atom = 0;
    let mut v = Complex64::new(0.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    while next_atom < atoms.len() && atoms[next_atom].0 <= 0.0 {
        v += atoms[next_atom].1 / sigma;
        next_atom += 1;
    }
    v_star.push(v);
    integral.push(acc);
    for j in 0..n {
        let (t0, t1) = (grid.node(j), grid.node(j + 1));
        let mut t = t0;
        loop {
            let atom_here = atoms.get(next_atom).map(|a| a.0).filter(|&l| l <= t1);
            let stop = atom_here.unwrap_or(t1);
            if stop > t {
                let (nv, na) = rk4(t, v, acc, stop - t);
                v = nv;
                acc = na;
                t = stop;
            }
            match atom_here {
                Some(_) => {
                    v += atoms[next_atom].1 / sigma;
                    next_atom += 1;
                }
                None => break,
            }
        }
        if !v.is_finite() || v.norm() > CIR_BLOWUP {
            return Err(HawkesError::Numeric(format!(
                "Riccati solution blew up near t={t1}"
            )));
        }
        v_star.push(v);
        integral.push(acc);
    }
    Ok(CirRiccatiSolution {
        grid: *grid,
        v_star,
        integral,
        sigma,
    })
}

/// `exp{μ0 ∫_0^T V*}`; `T` must be a grid node.
pub fn cir_functional(sol: &CirRiccatiSolution, mu0: f64, t_end: f64) -> Result<Complex64> {
    let j = sol
        .grid
        .node_index(t_end)
        .ok_or_else(|| HawkesError::InvalidParameter(format!("T={t_end} is not a grid node")))?;
    Ok((mu0 * sol.integral[j]).exp())
}

/// `(sup_{t ≤ T} |I_R(nt)/n - t/σ|, ‖R(n·) - 1/σ‖_{L²[0,T]})` for a weakly critical
/// kernel. The resolvent is solved on `[0, nT]` with step `n h` (`h` from `grid`),
/// so the cost does not grow with `n`; the exponential kernel uses its closed form.
pub fn resolvent_gap(k: &KernelSpec, n: f64, t_end: f64, grid: &Grid) -> Result<(f64, f64)> {
    if !(n >= 1.0) {
        return Err(HawkesError::InvalidParameter(format!(
            "scale n={n} must be >= 1"
        )));
    }
    let m = k.branching_ratio();
    let sigma = k.dispersion_sigma()?;
    if (m - 1.0).abs() > 1e-12 || !sigma.is_finite() {
        return Err(HawkesError::Regime(format!(
            "resolvent gap needs a weakly critical kernel (m = 1, sigma < inf); got m={m}, sigma={sigma}"
        )));
    }
    if let KernelSpec::Exponential { beta, .. } = k {
        // R(t) = m β e^{-β(1-m)t} = β = 1/σ
        let r = m * beta;
        let gap_sup = (0..=grid.cells())
            .map(|j| (r * grid.node(j) - grid.node(j) / sigma).abs())
            .fold(0.0, f64::max);
        let gap_l2 = ((r - 1.0 / sigma).powi(2) * t_end).sqrt();
        return Ok((gap_sup, gap_l2));
    }
    let cells = ((t_end / grid.step()).round() as usize).max(1);
    let big = Grid::with_cells(n * t_end, cells)?;
    let table = solve_resolvent(k, &big, 1.0)?;
    let mut sup = 0.0f64;
    for j in 0..=cells {
        let t = t_end * j as f64 / cells as f64;
        sup = sup.max((table.i_r[j] / n - t / sigma).abs());
    }
    // trapezoid of (R(nt) - 1/σ)² in rescaled time
    let h = t_end / cells as f64;
    let mut l2 = 0.0;
    for j in 0..cells {
        let a = (table.r_at(big.node(j))? - 1.0 / sigma).powi(2);
        let b = (table.r[j + 1] - 1.0 / sigma).powi(2);
        l2 += 0.5 * h * (a + b);
    }
    Ok((sup, l2.sqrt()))
}
