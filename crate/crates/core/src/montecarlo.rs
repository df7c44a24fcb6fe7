//! Feynman–Kac Monte Carlo for the finite-time exponent Λ_p(t).
//!
//! Each sample draws p walkers at rate 2dκ and n catalysts at rate 2dρ, all
//! from the origin, and weighs them by exp of their exact collision local time.
//! Sample `i` uses its own ChaCha stream `i` under the run seed, and the
//! per-sample log-weights are reduced serially in index order, so results do
//! not depend on the number of worker threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::LinearOperator;
use crate::error::{PamError, Result};
use crate::lattice::{weighted_laplacian_into, Field, LatticeBox};
use crate::num::KahanSum;
use crate::spectral::{EstimateKind, Generator, LyapunovEstimate, PamParams};

/// Below this effective sample size no confidence interval is reported.
pub const MIN_ESS_FOR_CI: f64 = 30.0;

/// A continuous-time simple random walk on ℤ^d observed on [0, horizon].
#[derive(Clone, Debug, PartialEq)]
pub struct JumpPath {
    d: usize,
    rate: f64,
    start: Vec<i64>,
    /// (epoch, axis, ±1) with strictly increasing epochs.
    events: Vec<(f64, usize, i8)>,
    horizon: f64,
}

impl JumpPath {
    /// A path that never moves.
    pub fn constant(start: Vec<i64>, horizon: f64) -> Self {
        Self { d: start.len(), rate: 0.0, start, events: Vec::new(), horizon }
    }

    /// A path with prescribed jumps; epochs must increase and lie in [0, horizon].
    pub fn from_events(start: Vec<i64>, events: Vec<(f64, usize, i8)>, horizon: f64) -> Result<Self> {
        let d = start.len();
        let mut last = -f64::INFINITY;
        for &(s, axis, sign) in &events {
            if !(s > last && (0.0..=horizon).contains(&s)) || axis >= d || (sign != 1 && sign != -1) {
                return Err(PamError::Parameter(format!("invalid jump event ({s}, {axis}, {sign})")));
            }
            last = s;
        }
        Ok(Self { d, rate: f64::NAN, start, events, horizon })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Total jump rate 2dν.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[(f64, usize, i8)] {
        &self.events
    }

    pub fn start(&self) -> &[i64] {
        &self.start
    }

    /// Position at time s (right-continuous).
    pub fn position(&self, s: f64) -> Vec<i64> {
        let mut x = self.start.clone();
        for &(e, axis, sign) in &self.events {
            if e > s {
                break;
            }
            x[axis] += sign as i64;
        }
        x
    }

    pub fn end_position(&self) -> Vec<i64> {
        self.position(self.horizon)
    }

    /// Breakpoints 0 = b₀ < b₁ < … < b_m = t and the position on each [b_i, b_{i+1}).
    fn segments(&self, t: f64) -> (Vec<f64>, Vec<Vec<i64>>) {
        let mut bounds = vec![0.0];
        let mut pos = vec![self.start.clone()];
        let mut x = self.start.clone();
        for &(e, axis, sign) in &self.events {
            if e >= t {
                break;
            }
            x[axis] += sign as i64;
            if e > 0.0 {
                bounds.push(e);
                pos.push(x.clone());
            } else {
                pos[0] = x.clone();
            }
        }
        bounds.push(t);
        (bounds, pos)
    }
}

/// A walk from `start` with exponential holding times at rate 2dν and a uniform
/// choice among the 2d neighbours.
pub fn sample_path<R: Rng + ?Sized>(d: usize, nu: f64, t_end: f64, start: &[i64], rng: &mut R) -> JumpPath {
    assert!(nu >= 0.0 && t_end >= 0.0, "rate and horizon must be non-negative");
    assert_eq!(start.len(), d);
    let rate = 2.0 * d as f64 * nu;
    let mut events = Vec::new();
    if rate > 0.0 {
        let hold = Exp::new(rate).expect("positive rate");
        let mut s = 0.0;
        loop {
            s += hold.sample(rng);
            if s > t_end {
                break;
            }
            let dir = rng.random_range(0..2 * d);
            events.push((s, dir / 2, if dir % 2 == 0 { 1 } else { -1 }));
        }
    }
    JumpPath { d, rate, start: start.to_vec(), events, horizon: t_end }
}

fn check_horizons(paths: &[&JumpPath], t: f64) -> Result<()> {
    for p in paths {
        if p.horizon < t {
            return Err(PamError::HorizonTooShort { horizon: p.horizon, t });
        }
    }
    Ok(())
}

/// Lebesgue measure of {s ∈ [0, t] : a(s) = b(s)} for two step functions
/// given by breakpoints and values.
fn coincidence_measure(a: &(Vec<f64>, Vec<Vec<i64>>), b: &(Vec<f64>, Vec<Vec<i64>>), eq: impl Fn(&[i64], &[i64]) -> bool) -> f64 {
    let (ba, pa) = a;
    let (bb, pb) = b;
    let t = *ba.last().unwrap();
    let (mut i, mut j) = (0, 0);
    let mut cur = 0.0;
    let mut total = KahanSum::new();
    while cur < t && i < pa.len() && j < pb.len() {
        let next = ba[i + 1].min(bb[j + 1]);
        if eq(&pa[i], &pb[j]) {
            total.add(next - cur);
        }
        if ba[i + 1] <= next {
            i += 1;
        }
        if bb[j + 1] <= next {
            j += 1;
        }
        cur = next;
    }
    total.value()
}

/// The path s ↦ Y(t − s) on [0, t] as breakpoints and values.
fn reversed_segments(y: &JumpPath, t: f64) -> (Vec<f64>, Vec<Vec<i64>>) {
    let (bounds, pos) = y.segments(t);
    let m = pos.len();
    let rb: Vec<f64> = (0..=m).map(|i| if i == 0 { 0.0 } else if i == m { t } else { t - bounds[m - i] }).collect();
    let rp: Vec<Vec<i64>> = pos.into_iter().rev().collect();
    (rb, rp)
}

/// Σ_{j,k} ∫₀^t 1{X_j(s) = Y_k(t − s)} ds.
pub fn collision_time(xs: &[JumpPath], ys: &[JumpPath], t: f64) -> Result<f64> {
    let all: Vec<&JumpPath> = xs.iter().chain(ys).collect();
    check_horizons(&all, t)?;
    let xsegs: Vec<_> = xs.iter().map(|x| x.segments(t)).collect();
    let ysegs: Vec<_> = ys.iter().map(|y| reversed_segments(y, t)).collect();
    let mut total = KahanSum::new();
    for xa in &xsegs {
        for yb in &ysegs {
            total.add(coincidence_measure(xa, yb, |a, b| a == b));
        }
    }
    Ok(total.value())
}

/// Σ_{j,k} ∫₀^t 1{X_j(s) = Y_k(t) − Y_k(s)} ds.
///
/// The process s ↦ Y(t) − Y(s) has the law of a walk run backward from the
/// origin, so this kernel gives an estimator with the same mean as
/// [`collision_time`] from the same random draws.
pub fn collision_time_reversed(xs: &[JumpPath], ys: &[JumpPath], t: f64) -> Result<f64> {
    let all: Vec<&JumpPath> = xs.iter().chain(ys).collect();
    check_horizons(&all, t)?;
    let xsegs: Vec<_> = xs.iter().map(|x| x.segments(t)).collect();
    let mut total = KahanSum::new();
    for y in ys {
        let end = y.position(t);
        let ysegs = y.segments(t);
        for xa in &xsegs {
            total.add(coincidence_measure(xa, &ysegs, |a, b| a.iter().zip(b).zip(&end).all(|((x, yy), e)| *x == e - yy)));
        }
    }
    Ok(total.value())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionKernel {
    /// Catalysts run forward and are read backward in time.
    #[default]
    Forward,
    /// Catalysts represented as walks run backward from the origin.
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub kernel: CollisionKernel,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { workers: None, kernel: CollisionKernel::Forward }
    }
}

/// Estimate of Λ_p(t) = (1/(pt)) log E[u(0, t)^p].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub params: PamParams,
    pub t: f64,
    pub samples: usize,
    pub seed: u64,
    pub lambda_t: f64,
    pub stderr: f64,
    /// (Σw)²/Σw² for the sample weights.
    pub ess: f64,
    /// 95% interval, withheld when the effective sample size is below 30.
    pub ci: Option<(f64, f64)>,
}

impl McEstimate {
    pub fn to_lyapunov(&self) -> LyapunovEstimate {
        LyapunovEstimate {
            value: self.lambda_t,
            kind: EstimateKind::MonteCarlo { t: self.t, samples: self.samples },
            error: self.stderr,
            params: self.params,
            converged: self.ci.is_some(),
        }
    }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw_walkers(params: &PamParams, t: f64, rng: &mut ChaCha8Rng) -> (Vec<JumpPath>, Vec<JumpPath>) {
    let origin = vec![0i64; params.d];
    let xs = (0..params.p).map(|_| sample_path(params.d, params.kappa, t, &origin, rng)).collect();
    let ys = (0..params.n).map(|_| sample_path(params.d, params.rho, t, &origin, rng)).collect();
    (xs, ys)
}

fn run_in_pool<F, R>(workers: Option<usize>, job: F) -> Result<R>
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    match workers {
        None => Ok(job()),
        Some(0) => Err(PamError::Parameter("worker count must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| PamError::Parameter(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Summary of a sample of log-weights: log of the mean weight, the standard
/// error of that log-mean, and the effective sample size.
pub fn log_mean_exp(logw: &[f64]) -> (f64, f64, f64) {
    let n = logw.len() as f64;
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s1 = KahanSum::new();
    let mut s2 = KahanSum::new();
    for &l in logw {
        let w = (l - max).exp();
        s1.add(w);
        s2.add(w * w);
    }
    let (s1, s2) = (s1.value(), s2.value());
    let mean = s1 / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let se_log = (var / n).sqrt() / mean;
    (max + mean.ln(), se_log, s1 * s1 / s2)
}

/// Monte Carlo estimate of Λ_p(t).
pub fn lambda_mc(params: &PamParams, t: f64, samples: usize, seed: u64, opts: &McOptions) -> Result<McEstimate> {
    params.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(PamError::Parameter(format!("horizon must be positive, got {t}")));
    }
    if samples < 2 {
        return Err(PamError::Parameter(format!("need at least two samples, got {samples}")));
    }
    let kernel = opts.kernel;
    let logw: Vec<f64> = run_in_pool(opts.workers, || {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                let (xs, ys) = draw_walkers(params, t, &mut rng);
                match kernel {
                    CollisionKernel::Forward => collision_time(&xs, &ys, t),
                    CollisionKernel::Reversed => collision_time_reversed(&xs, &ys, t),
                }
                .expect("paths share the horizon")
            })
            .collect()
    })?;
    let (log_mean, se_log, ess) = log_mean_exp(&logw);
    let pt = params.p as f64 * t;
    let lambda_t = (log_mean / pt).clamp(0.0, params.n as f64);
    let stderr = se_log / pt;
    let ci = (ess >= MIN_ESS_FOR_CI).then_some((lambda_t - 1.96 * stderr, lambda_t + 1.96 * stderr));
    Ok(McEstimate { params: *params, t, samples, seed, lambda_t, stderr, ess, ci })
}

/// Mean and standard error of exp(∫₀^t ξ(X(s), t − s) ds) over `samples` walks X
/// at rate 2dκ, for a fixed catalyst realization.
pub fn conditional_mc(
    d: usize,
    kappa: f64,
    t: f64,
    catalysts: &[JumpPath],
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(PamError::Parameter(format!("need at least two samples, got {samples}")));
    }
    let refs: Vec<&JumpPath> = catalysts.iter().collect();
    check_horizons(&refs, t)?;
    let origin = vec![0i64; d];
    let logw: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = sample_path(d, kappa, t, &origin, &mut rng);
            collision_time(std::slice::from_ref(&x), catalysts, t).expect("horizons checked")
        })
        .collect();
    let (log_mean, se_log, _) = log_mean_exp(&logw);
    let mean = log_mean.exp();
    Ok((mean, mean * se_log))
}

/// Result of the direct integration of the catalyst-driven heat equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PdeMoment {
    /// u(0, t).
    pub value: f64,
    /// 1 − u(0, t) for the same box without catalysts.
    pub boundary_leak: f64,
}

/// Integrates ∂u/∂s = κΔu + ξ(·, s)u with u(·, 0) = 1 on {−R,…,R}^d (zero
/// outside), where ξ(x, s) = #{k : Y_k(s) = x}, and returns u(0, t).
///
/// ξ is constant between catalyst jumps; each such interval is split into at
/// least `min_substeps` pieces, and into enough pieces that every piece has
/// h‖A‖ ≤ 1/2, each propagated by a Taylor series of the matrix exponential.
pub fn pde_moment_oracle(
    params: &PamParams,
    radius: usize,
    t: f64,
    catalysts: &[JumpPath],
    min_substeps: usize,
) -> Result<PdeMoment> {
    params.validate()?;
    if catalysts.len() != params.n {
        return Err(PamError::DimensionMismatch { expected: params.n, got: catalysts.len() });
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PamError::Parameter(format!("time must be non-negative, got {t}")));
    }
    let refs: Vec<&JumpPath> = catalysts.iter().collect();
    check_horizons(&refs, t)?;
    let lattice = LatticeBox::new(params.d, radius)?;
    let value = integrate_heat(params, &lattice, t, Some(catalysts), min_substeps)?;
    let free = integrate_heat(params, &lattice, t, None, min_substeps)?;
    Ok(PdeMoment { value, boundary_leak: 1.0 - free })
}

fn integrate_heat(
    params: &PamParams,
    lattice: &LatticeBox,
    t: f64,
    catalysts: Option<&[JumpPath]>,
    min_substeps: usize,
) -> Result<f64> {
    let size = lattice.size();
    let mut epochs: Vec<f64> = vec![0.0, t];
    if let Some(cs) = catalysts {
        for c in cs {
            epochs.extend(c.events().iter().map(|e| e.0).filter(|&s| s > 0.0 && s < t));
        }
    }
    epochs.sort_by(f64::total_cmp);
    epochs.dedup();
    let weights = vec![params.kappa; params.d];
    let norm_bound = 4.0 * params.d as f64 * params.kappa + params.n as f64;
    let mut u = vec![1.0; size];
    let mut term = vec![0.0; size];
    let mut next = vec![0.0; size];
    let mut pot = vec![0.0; size];
    for w in epochs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        pot.iter_mut().for_each(|v| *v = 0.0);
        if let Some(cs) = catalysts {
            let mid = 0.5 * (a + b);
            for c in cs {
                if let Some(i) = lattice.index(&c.position(mid)) {
                    pot[i] += 1.0;
                }
            }
        }
        let op = |x: &[f64], y: &mut [f64]| weighted_laplacian_into(lattice, &weights, Some(&pot), 0.0, x, y);
        propagate(op, &mut u, a, b, norm_bound, min_substeps, &mut term, &mut next)?;
    }
    Ok(u[lattice.origin_index()])
}

/// u ← exp((b − a)A)u for an operator with ‖A‖ ≤ `norm_bound`, in pieces of
/// length h with h·‖A‖ ≤ 1/2, each summed as a Taylor series to round-off.
#[allow(clippy::too_many_arguments)]
fn propagate(
    op: impl Fn(&[f64], &mut [f64]),
    u: &mut [f64],
    a: f64,
    b: f64,
    norm_bound: f64,
    min_substeps: usize,
    term: &mut [f64],
    next: &mut [f64],
) -> Result<()> {
    let len = b - a;
    let pieces = (min_substeps.max(1) as f64).max((2.0 * len * norm_bound).ceil());
    if pieces > 1e9 {
        return Err(PamError::StepUnderflow { start: a, end: b });
    }
    let pieces = pieces as usize;
    let h = len / pieces as f64;
    if h <= 0.0 || a + h == a {
        return Err(PamError::StepUnderflow { start: a, end: b });
    }
    for _ in 0..pieces {
        term.copy_from_slice(u);
        for k in 1..60 {
            op(term, next);
            let scale = h / k as f64;
            let mut tn = 0.0f64;
            let mut un = 0.0f64;
            for i in 0..u.len() {
                term[i] = next[i] * scale;
                u[i] += term[i];
                tn = tn.max(term[i].abs());
                un = un.max(u[i].abs());
            }
            if tn <= 1e-17 * un {
                break;
            }
        }
    }
    Ok(())
}

/// Deterministic Λ_p(t) on the box {−R,…,R}^{d(p+n)}: integrates ∂v = 𝓛v
/// from v(0) = 1{all catalysts at 0} and sums v(t) over catalyst positions
/// with all walkers at the origin. Dirichlet truncation makes it a lower bound
/// that is sharp once R is large compared with the spread of the walks.
pub fn finite_time_exponent(params: &PamParams, radius: usize, t: f64) -> Result<f64> {
    params.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(PamError::Parameter(format!("horizon must be positive, got {t}")));
    }
    let gen = Generator::<f64>::new(*params, radius)?;
    let lattice = gen.lattice().clone();
    let (d, p) = (params.d, params.p);
    let walker_axes = d * p;
    let mut u = Field::<f64>::from_fn(&lattice, |s| if s[walker_axes..].iter().all(|&c| c == 0) { 1.0 } else { 0.0 })
        .into_values();
    let size = u.len();
    let mut term = vec![0.0; size];
    let mut next = vec![0.0; size];
    let norm_bound = 4.0 * d as f64 * (p as f64 * params.kappa + params.n as f64 * params.rho) + (p * params.n) as f64;
    propagate(|x: &[f64], y: &mut [f64]| gen.apply(x, y), &mut u, 0.0, t, norm_bound, 1, &mut term, &mut next)?;
    let mut total = KahanSum::new();
    let mut site = vec![0i64; lattice.dim()];
    for (i, v) in u.iter().enumerate() {
        lattice.site_into(i, &mut site);
        if site[..walker_axes].iter().all(|&c| c == 0) {
            total.add(*v);
        }
    }
    Ok(total.value().ln() / (p as f64 * t))
}
