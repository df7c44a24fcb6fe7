//! The spectral function μ(κ), the moment generator, and box estimates of the
//! annealed Lyapunov exponent.
//!
//! A box of radius R in ℤ^{d(p+n)} carries the p moment walkers on its first
//! dp axes and the n catalysts on the remaining dn axes. The generator acts as
//!
//! ```text
//! (𝓛 f)(x, y) = κ Δ_x f + ρ Δ_y f + #{(j, k) : x_j = y_k} · f
//! ```
//!
//! with zero extension outside the box, so every box eigenvalue (divided by p)
//! is a lower bound for the exponent on all of ℤ^{d(p+n)}.

use serde::{Deserialize, Serialize};

use crate::eigen::{largest_eigenpair, EigenOptions, LinearOperator};
use crate::error::{PamError, Result};
use crate::greens::{diagonal_resolvent, green_zero, GreenTable};
use crate::lattice::{grad_sq_norm, weighted_laplacian_into, Field, LatticeBox};
use crate::num::{KahanSum, Real};

/// One model instance: dimension, catalysts, moment order and the two rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PamParams {
    pub d: usize,
    pub n: usize,
    pub p: usize,
    pub kappa: f64,
    pub rho: f64,
}

impl PamParams {
    pub fn new(d: usize, n: usize, p: usize, kappa: f64, rho: f64) -> Result<Self> {
        let params = Self { d, n, p, kappa, rho };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 || self.p == 0 {
            return Err(PamError::Parameter(format!(
                "d, n and p must be positive (got d={}, n={}, p={})",
                self.d, self.n, self.p
            )));
        }
        for (name, v) in [("kappa", self.kappa), ("rho", self.rho)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PamError::Parameter(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// The parameters with the roles of walkers and catalysts exchanged.
    pub fn partner(&self) -> Self {
        Self { d: self.d, n: self.p, p: self.n, kappa: self.rho, rho: self.kappa }
    }

    /// Total lattice dimension d(p+n) of the configuration space.
    pub fn box_dim(&self) -> usize {
        self.d * (self.p + self.n)
    }

    pub fn with_p(&self, p: usize) -> Self {
        Self { p, ..*self }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EstimateKind {
    Spectral { radius: usize },
    ClosedForm,
    MonteCarlo { t: f64, samples: usize },
}

/// A value of λ or of the finite-time exponent with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    /// Residual-based bound for spectral estimates, standard error for Monte Carlo.
    pub error: f64,
    pub params: PamParams,
    pub converged: bool,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(PamError::Parameter(format!("tolerance must be positive, got {tol}")))
    }
}

/// Accuracy requested from each resolvent evaluation inside the root finders.
fn resolvent_tol(tol: f64, scale: f64) -> f64 {
    (1e-3 * tol * scale).clamp(1e-13, 1e-8)
}

/// Top of the spectrum of κΔ + δ₀ on ℓ²(ℤ^d).
///
/// Solves 1 = (1/κ) L_d(μ/κ) by bisection, where L_d is the diagonal
/// resolvent of the unit-rate walk. Returns 1 at κ = 0 and 0 once κ ≥ G_d(0).
pub fn mu(d: usize, kappa: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if d == 0 {
        return Err(PamError::Parameter("dimension must be at least 1".into()));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(PamError::Parameter(format!("kappa must be finite and non-negative, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok(1.0);
    }
    let qtol = resolvent_tol(tol, kappa);
    if d >= 3 {
        let g = green_zero(d, 1e-13)?.finite_value()?;
        if kappa >= g {
            return Ok(0.0);
        }
    }
    // F(μ) = L(μ/κ)/κ − 1 is strictly decreasing with its root in (0, 1]
    let f = |m: f64| -> Result<f64> { Ok(diagonal_resolvent(d, m / kappa, qtol)?.0 / kappa - 1.0) };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if f(hi)? >= 0.0 {
        return Ok(1.0);
    }
    while hi - lo > 0.25 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid == 0.0 || f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Generalized inverse of μ: the κ with μ(κ) = t, extended by 0 for t ≥ 1.
pub fn mu_inverse(d: usize, t: f64, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    if d == 0 {
        return Err(PamError::Parameter("dimension must be at least 1".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(PamError::Parameter(format!("argument must be finite and non-negative, got {t}")));
    }
    if t >= 1.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        if d <= 2 {
            return Err(PamError::Divergent { quantity: "mu^{-1}(0) = G_d(0)", d });
        }
        return green_zero(d, tol.min(1e-10))?.finite_value();
    }
    // μ(κ) ≤ 1/κ, so the root lies below 1/t; below G_d(0) when that is finite
    let mut hi = 1.0 / t;
    if d >= 3 {
        hi = hi.min(green_zero(d, 1e-13)?.finite_value()?);
    }
    let mut lo = 0.0f64;
    let qtol = resolvent_tol(tol, t);
    // μ(κ) > t exactly when L(t/κ)/κ > 1
    while hi - lo > 0.25 * tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = diagonal_resolvent(d, t / mid, qtol)?.0 / mid > 1.0;
        if above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The moment generator restricted to a box, as a matrix-free operator.
#[derive(Clone, Debug)]
pub struct Generator<T> {
    params: PamParams,
    lattice: LatticeBox,
    weights: Vec<T>,
    potential: Vec<T>,
    shift: T,
}

impl<T: Real> Generator<T> {
    pub fn new(params: PamParams, radius: usize) -> Result<Self> {
        params.validate()?;
        let lattice = LatticeBox::new(params.box_dim(), radius)?;
        Ok(Self::on_box(params, lattice))
    }

    fn on_box(params: PamParams, lattice: LatticeBox) -> Self {
        let dp = params.d * params.p;
        let weights: Vec<T> = (0..lattice.dim())
            .map(|a| if a < dp { T::lit(params.kappa) } else { T::lit(params.rho) })
            .collect();
        let potential = collision_counts(&params, &lattice);
        Self { params, lattice, weights, potential, shift: T::zero() }
    }

    /// Add `shift·Id` to the operator.
    pub fn shifted(mut self, shift: T) -> Self {
        self.shift = shift;
        self
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn params(&self) -> &PamParams {
        &self.params
    }

    /// Number of coincidences x_j = y_k at each site.
    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn apply_field(&self, f: &Field<T>) -> Result<Field<T>> {
        if f.lattice() != &self.lattice {
            return Err(PamError::DimensionMismatch { expected: self.lattice.size(), got: f.values().len() });
        }
        let mut out = Field::zeros(&self.lattice);
        self.apply(f.values(), out.values_mut());
        Ok(out)
    }

    /// ⟨f, 𝓛f⟩ / ⟨f, f⟩ without the shift.
    pub fn rayleigh(&self, f: &Field<T>) -> Result<T> {
        let lf = self.apply_field(f)?;
        let nrm = f.inner(f)?;
        if nrm == T::zero() {
            return Err(PamError::Parameter("Rayleigh quotient of the zero field".into()));
        }
        Ok(f.inner(&lf)? / nrm - self.shift)
    }
}

impl<T: Real> LinearOperator<T> for Generator<T> {
    fn dim(&self) -> usize {
        self.lattice.size()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        weighted_laplacian_into(&self.lattice, &self.weights, Some(&self.potential), self.shift, x, y);
    }
}

fn collision_counts<T: Real>(params: &PamParams, lattice: &LatticeBox) -> Vec<T> {
    let (d, p, n) = (params.d, params.p, params.n);
    let mut out = vec![T::zero(); lattice.size()];
    lattice.for_each_offset_coords(0, lattice.size(), |idx, c| {
        let mut count = 0usize;
        for j in 0..p {
            let xj = &c[j * d..(j + 1) * d];
            for k in 0..n {
                let yk = &c[(p + k) * d..(p + k + 1) * d];
                if xj == yk {
                    count += 1;
                }
            }
        }
        out[idx] = T::from_usize_lossy(count);
    });
    out
}

/// κΔ_x f + ρΔ_y f + I_p f on the box carrying `f`.
pub fn apply_generator<T: Real>(params: &PamParams, f: &Field<T>) -> Result<Field<T>> {
    params.validate()?;
    let m = params.box_dim();
    if f.lattice().dim() != m {
        return Err(PamError::DimensionMismatch { expected: m, got: f.lattice().dim() });
    }
    Generator::on_box(*params, f.lattice().clone()).apply_field(f)
}

/// Solver settings for box eigenvalue problems.
#[derive(Clone, Debug)]
pub struct SpectralOptions {
    /// Residual tolerance ‖𝓛v − θv‖₂ for the unit eigenvector.
    pub tol: f64,
    pub max_matvecs: usize,
    pub memory_budget: usize,
    pub basis: Option<usize>,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_matvecs: 50_000, memory_budget: 512 << 20, basis: None }
    }
}

fn default_start<T: Real>(lattice: &LatticeBox) -> Vec<T> {
    let half = T::lit(0.5);
    Field::<T>::from_fn(lattice, |s| {
        let l1: i64 = s.iter().map(|c| c.abs()).sum();
        (-half * T::lit(l1 as f64)).exp()
    })
    .into_values()
}

/// Largest box eigenvalue of 𝓛 divided by p, together with its eigenvector.
pub fn top_eigenpair<T: Real>(
    params: &PamParams,
    radius: usize,
    opts: &SpectralOptions,
    start: Option<Field<T>>,
) -> Result<(LyapunovEstimate, Field<T>)> {
    check_tol(opts.tol)?;
    params.validate()?;
    let lattice = LatticeBox::new(params.box_dim(), radius)?;
    let pf = params.p as f64;
    if params.kappa == 0.0 && params.rho == 0.0 {
        // pure multiplication operator, maximal at the all-zero configuration
        let est = LyapunovEstimate {
            value: params.n as f64,
            kind: EstimateKind::Spectral { radius },
            error: 0.0,
            params: *params,
            converged: true,
        };
        return Ok((est, Field::delta(&lattice)));
    }
    let shift = T::lit(2.0 * params.d as f64 * (pf * params.kappa + params.n as f64 * params.rho));
    let op = Generator::<T>::on_box(*params, lattice.clone()).shifted(shift);
    let start = match start {
        Some(f) => f.embed_into(&lattice)?.into_values(),
        None => default_start(&lattice),
    };
    let eopts = EigenOptions {
        tol: opts.tol,
        max_matvecs: opts.max_matvecs,
        basis: opts.basis,
        keep: 4,
        memory_budget: opts.memory_budget,
        start: Some(start),
    };
    let res = match largest_eigenpair(&op, &eopts) {
        Ok(r) => r,
        Err(PamError::NonConvergence { iterations, best, residual, best_vector }) => {
            return Err(PamError::NonConvergence {
                iterations,
                best: (best - shift.to_f64_lossy()) / pf,
                residual,
                best_vector,
            })
        }
        Err(e) => return Err(e),
    };
    let value = (res.value - shift).to_f64_lossy() / pf;
    let est = LyapunovEstimate {
        value,
        kind: EstimateKind::Spectral { radius },
        error: res.residual.to_f64_lossy() / pf,
        params: *params,
        converged: true,
    };
    Ok((est, Field::from_values(&lattice, res.vector)?))
}

/// Box estimate of λ_p^{(n)}(κ, ρ) at a single radius.
pub fn top_eigen<T: Real>(params: &PamParams, radius: usize, opts: &SpectralOptions) -> Result<LyapunovEstimate> {
    top_eigenpair::<T>(params, radius, opts, None).map(|(e, _)| e)
}

/// Box estimates over increasing radii, each warm-started from the last.
///
/// Since a smaller box embeds in a larger one, the previous value is still a
/// lower bound at the next radius; the reported sequence is its running
/// maximum. The last entry is marked converged when it moved by less than
/// `opts.tol` from its predecessor.
pub fn lambda_spectral<T: Real>(
    params: &PamParams,
    radii: &[usize],
    opts: &SpectralOptions,
) -> Result<Vec<LyapunovEstimate>> {
    if radii.is_empty() {
        return Err(PamError::Parameter("radius list is empty".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PamError::Parameter("radii must be strictly increasing".into()));
    }
    let mut out: Vec<LyapunovEstimate> = Vec::with_capacity(radii.len());
    let mut prev: Option<Field<T>> = None;
    for &r in radii {
        let (mut est, vec) = top_eigenpair::<T>(params, r, opts, prev.take())?;
        est.converged = false;
        if let Some(last) = out.last() {
            est.value = est.value.max(last.value);
        }
        prev = Some(vec);
        out.push(est);
    }
    let k = out.len();
    if k >= 2 {
        out[k - 1].converged = (out[k - 1].value - out[k - 2].value).abs() < opts.tol;
    }
    Ok(out)
}

/// Quantities certifying λ₂ ≥ λ₁ + gap on a box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TensorGap {
    pub lambda1: f64,
    pub gap: f64,
    pub rayleigh2: f64,
}

/// Tensor square f̃(x₁, x₂, y) = f(x₁, y) f(x₂, y) of the p = 1 eigenvector.
pub fn tensor_square<T: Real>(params: &PamParams, f: &Field<T>) -> Result<Field<T>> {
    let (d, n) = (params.d, params.n);
    if f.lattice().dim() != d * (1 + n) {
        return Err(PamError::DimensionMismatch { expected: d * (1 + n), got: f.lattice().dim() });
    }
    let big = LatticeBox::new(d * (2 + n), f.lattice().radius())?;
    let mut a = vec![0i64; d * (1 + n)];
    let mut b = vec![0i64; d * (1 + n)];
    Ok(Field::from_fn(&big, |s| {
        a[..d].copy_from_slice(&s[..d]);
        a[d..].copy_from_slice(&s[2 * d..]);
        b[..d].copy_from_slice(&s[d..2 * d]);
        b[d..].copy_from_slice(&s[2 * d..]);
        f.get(&a) * f.get(&b)
    }))
}

/// Gap term (ρ/2) Σ_y Σ_{z∼y} (Σ_x f(x,y)(f(x,z) − f(x,y)))² / ‖f̃‖₂².
fn gap_term<T: Real>(params: &PamParams, f: &Field<T>) -> Result<(T, T)> {
    let d = params.d;
    let lattice = f.lattice();
    let r = lattice.radius();
    let ybox = LatticeBox::new(d * params.n, r)?;
    let xbox = LatticeBox::new(d, r)?;
    let dy = ybox.dim();
    let mut site = vec![0i64; d + dy];
    let mut column = |y: &[i64]| -> Vec<T> {
        if !ybox.contains(y) {
            return vec![T::zero(); xbox.size()];
        }
        (0..xbox.size())
            .map(|i| {
                xbox.site_into(i, &mut site[..d]);
                site[d..].copy_from_slice(y);
                f.get(&site)
            })
            .collect()
    };
    let mut norm = KahanSum::new();
    let mut gap = KahanSum::new();
    let mut y = vec![0i64; dy];
    let mut z = vec![0i64; dy];
    for iy in 0..ybox.size() {
        ybox.site_into(iy, &mut y);
        let fy = column(&y);
        let fy2: T = crate::num::dot(&fy, &fy);
        norm.add(fy2 * fy2);
        for a in 0..dy {
            for step in [-1i64, 1] {
                z.copy_from_slice(&y);
                z[a] += step;
                let fz = column(&z);
                let c = crate::num::dot(&fy, &fz) - fy2;
                gap.add(c * c);
            }
        }
    }
    Ok((gap.value() * T::lit(0.5 * params.rho), norm.value()))
}

/// λ₁ from the p = 1 eigenvector, the gap term, and the p = 2 Rayleigh quotient
/// of the tensor square.
pub fn tensor_gap<T: Real>(params: &PamParams, radius: usize, opts: &SpectralOptions) -> Result<TensorGap> {
    if params.p != 1 {
        return Err(PamError::Parameter(format!("tensor gap needs p = 1, got p = {}", params.p)));
    }
    let (_, f) = top_eigenpair::<T>(params, radius, opts, None)?;
    tensor_gap_from(params, &f)
}

/// As [`tensor_gap`], for a given p = 1 eigenvector.
pub fn tensor_gap_from<T: Real>(params: &PamParams, f: &Field<T>) -> Result<TensorGap> {
    let lambda1 = Generator::<T>::on_box(*params, f.lattice().clone()).rayleigh(f)?;
    let (gap_num, norm_sq) = gap_term(params, f)?;
    if norm_sq == T::zero() {
        return Err(PamError::DegenerateEigenvector);
    }
    let tilde = tensor_square(params, f)?;
    let p2 = params.with_p(2);
    let lf = apply_generator(&p2, &tilde)?;
    let tn = tilde.inner(&tilde)?;
    if tn == T::zero() {
        return Err(PamError::DegenerateEigenvector);
    }
    let rayleigh2 = tilde.inner(&lf)? / (T::lit(2.0) * tn);
    Ok(TensorGap {
        lambda1: lambda1.to_f64_lossy(),
        gap: (gap_num / norm_sq).to_f64_lossy(),
        rayleigh2: rayleigh2.to_f64_lossy(),
    })
}

/// Both sides of the discrete Gagliardo–Nirenberg inequality with constant 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GnCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// d = 1: ‖f‖∞² ≤ 2‖f‖₂‖∇f‖₂; d = 2: ‖f‖₄² ≤ 2‖f‖₂‖∇f‖₂.
pub fn check_gn<T: Real>(f: &Field<T>, d: usize) -> Result<GnCheck> {
    if d != 1 && d != 2 {
        return Err(PamError::Domain(format!("the inequality is checked for d = 1, 2 only, got {d}")));
    }
    if f.lattice().dim() != d {
        return Err(PamError::DimensionMismatch { expected: d, got: f.lattice().dim() });
    }
    let norms = f.norms();
    let axes: Vec<usize> = (0..d).collect();
    let grad = grad_sq_norm(f, &axes)?.sqrt();
    let lhs = if d == 1 { norms.linf * norms.linf } else { norms.l4 * norms.l4 };
    let rhs = T::lit(2.0) * norms.l2 * grad;
    Ok(GnCheck { lhs: lhs.to_f64_lossy(), rhs: rhs.to_f64_lossy(), holds: lhs <= rhs })
}

/// The pieces of the κ lower-bound functional evaluated at the Green test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct F0Bound {
    /// Σ I_p f₀².
    pub interaction: f64,
    /// ‖∇_y f₀‖₂².
    pub grad_y: f64,
    /// ‖∇_x f₀‖₂².
    pub grad_x: f64,
    /// (interaction − ρ·grad_y) / grad_x.
    pub ratio: f64,
}

/// The normalized test function f₀(x, y) = Π_j g(x_j)/‖g‖₂ · Π_k δ₀(y_k), with
/// g = G_d restricted to {−R,…,R}^d, evaluated in product form.
pub fn f0_rayleigh(d: usize, n: usize, p: usize, rho: f64, radius: usize) -> Result<F0Bound> {
    if d <= 4 {
        return Err(PamError::Divergent { quantity: "||G_d||_2", d });
    }
    PamParams::new(d, n, p, 0.0, rho)?;
    let table = GreenTable::build(d, radius)?;
    Ok(f0_from_table(&table, n, p, rho))
}

/// As [`f0_rayleigh`], reusing a tabulated Green function.
pub fn f0_from_table(table: &GreenTable, n: usize, p: usize, rho: f64) -> F0Bound {
    let g0 = table.origin();
    let l2 = table.truncated_l2sq(table.radius());
    let grad = table.truncated_grad_sq();
    let (nf, pf) = (n as f64, p as f64);
    let interaction = nf * pf * g0 * g0 / l2;
    let grad_y = 2.0 * table.d() as f64 * nf;
    let grad_x = pf * grad / l2;
    F0Bound { interaction, grad_y, grad_x, ratio: (interaction - rho * grad_y) / grad_x }
}
