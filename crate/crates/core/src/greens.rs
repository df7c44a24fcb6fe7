//! Lattice Green function of the rate-2d simple random walk.
//!
//! Every quantity is computed from a one-dimensional time integral of products
//! of scaled Bessel functions. The integral is split at a cutoff `T`: the head
//! is integrated adaptively and the tail is integrated term by term from the
//! large-time expansion of e^{−2u} I_k(2u), with the first omitted term
//! bounding the remainder.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{PamError, Result};
use crate::num::KahanSum;
use crate::quadrature::{composite_rule, gauss_legendre, geometric_breakpoints, integrate_adaptive};
use crate::special::{bessel_i_scaled_seq, hankel_coefficients, i0_scaled, upper_gamma};

const TAIL_TERMS: usize = 12;
const MIN_CUTOFF: f64 = 64.0;
const MAX_PANELS: usize = 20_000;

/// Which Green-function quantity an estimate refers to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenQuantity {
    Zero,
    L2Squared,
    At(Vec<i64>),
    Alpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenMethod {
    TimeIntegral,
    FourierQuadrature,
    MonteCarlo,
}

/// A finite value or a typed divergence marker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GreenValue {
    Finite(f64),
    Divergent,
}

impl GreenValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            GreenValue::Finite(v) => Some(v),
            GreenValue::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, GreenValue::Divergent)
    }
}

impl Serialize for GreenValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GreenValue::Finite(v) => s.serialize_f64(*v),
            GreenValue::Divergent => s.serialize_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenEstimate {
    pub d: usize,
    pub quantity: GreenQuantity,
    pub value: GreenValue,
    pub abs_error: f64,
    pub method: GreenMethod,
}

impl GreenEstimate {
    fn divergent(d: usize, quantity: GreenQuantity) -> Self {
        Self { d, quantity, value: GreenValue::Divergent, abs_error: 0.0, method: GreenMethod::TimeIntegral }
    }

    /// The finite value, or a divergence error naming the quantity.
    pub fn finite_value(&self) -> Result<f64> {
        self.value.finite().ok_or(PamError::Divergent { quantity: self.quantity.label(), d: self.d })
    }
}

impl GreenQuantity {
    fn label(&self) -> &'static str {
        match self {
            GreenQuantity::Zero => "G_d(0)",
            GreenQuantity::L2Squared => "||G_d||_2^2",
            GreenQuantity::At(_) => "G_d(x)",
            GreenQuantity::Alpha => "alpha_d",
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(PamError::Parameter(format!("tolerance must be positive, got {tol}")))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(PamError::Parameter("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Diagonal transition probability p_t(0,0) = (e^{−2νt} I₀(2νt))^d.
pub fn heat_kernel_diag(d: usize, nu: f64, t: f64) -> f64 {
    assert!(nu >= 0.0 && t >= 0.0, "rate and time must be non-negative");
    i0_scaled(2.0 * nu * t).powi(d as i32)
}

/// Coefficients c_j with Π_i e^{−2u} I_{k_i}(2u) ≈ (4πu)^{−d/2} Σ_j c_j u^{−j}.
fn tail_series(orders: &[u32], terms: usize) -> Vec<f64> {
    let mut acc = vec![0.0; terms];
    acc[0] = 1.0;
    let mut cache: HashMap<u32, Vec<f64>> = HashMap::new();
    for &k in orders {
        let factor = cache.entry(k).or_insert_with(|| {
            let mut b = hankel_coefficients(k, terms);
            let mut scale = 1.0;
            for v in b.iter_mut() {
                *v *= scale;
                scale *= 0.5;
            }
            b
        });
        let mut next = vec![0.0; terms];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &b) in factor.iter().enumerate().take(terms - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

/// ∫_T^∞ e^{−su} u^{−a} du for s ≥ 0 (a > 1 when s = 0).
fn power_exp_tail(s: f64, a: f64, t: f64) -> f64 {
    if s == 0.0 {
        debug_assert!(a > 1.0);
        t.powf(1.0 - a) / (a - 1.0)
    } else if s * t > 650.0 {
        0.0
    } else {
        s.powf(a - 1.0) * upper_gamma(1.0 - a, s * t)
    }
}

/// Analytic tail of ∫_T^∞ u^w e^{−su} Π_i e^{−2u} I_{k_i}(2u) du and its remainder bound.
fn analytic_tail(orders: &[u32], s: f64, w: f64, t: f64) -> (f64, f64) {
    let d = orders.len() as f64;
    let c = tail_series(orders, TAIL_TERMS + 1);
    let pref = (4.0 * PI).powf(-0.5 * d);
    let mut sum = KahanSum::new();
    for (j, &cj) in c.iter().enumerate().take(TAIL_TERMS) {
        sum.add(cj * power_exp_tail(s, 0.5 * d + j as f64 - w, t));
    }
    let omitted = c[TAIL_TERMS].abs() * power_exp_tail(s, 0.5 * d + TAIL_TERMS as f64 - w, t);
    (pref * sum.value(), 2.0 * pref * omitted)
}

fn cutoff(kmax: u32) -> f64 {
    MIN_CUTOFF.max(2.0 * (kmax as f64).powi(2))
}

/// ∫₀^∞ u^w e^{−su} Π_i e^{−2u} I_{k_i}(2u) du, with `w` ∈ {0, 1}.
fn bessel_product_integral(orders: &[u32], s: f64, w: i32, tol: f64) -> Result<(f64, f64)> {
    let kmax = orders.iter().copied().max().unwrap_or(0);
    let t = cutoff(kmax);
    let (tail, tail_err) = analytic_tail(orders, s, w as f64, t);
    let all_zero = kmax == 0;
    let d = orders.len() as i32;
    let integrand = |u: f64| {
        let prod = if all_zero {
            i0_scaled(2.0 * u).powi(d)
        } else {
            let seq = bessel_i_scaled_seq(kmax as usize, 2.0 * u);
            orders.iter().map(|&k| seq[k as usize]).product()
        };
        prod * (-s * u).exp() * u.powi(w)
    };
    let bp = geometric_breakpoints(0.25, 2.0, t);
    let head_tol = (0.5 * tol - tail_err).max(0.1 * tol);
    let head = integrate_adaptive(integrand, &bp, head_tol, MAX_PANELS);
    let err = head.abs_error + tail_err;
    if err > tol {
        return Err(PamError::Quadrature { tol, err });
    }
    Ok((head.value + tail, err))
}

/// L_d(s) = ∫₀^∞ e^{−su} p_u(0,0) du, the diagonal resolvent of the unit-rate walk.
///
/// Finite for s > 0 in every dimension and for s = 0 when d ≥ 3.
pub fn diagonal_resolvent(d: usize, s: f64, tol: f64) -> Result<(f64, f64)> {
    check_dim(d)?;
    check_tol(tol)?;
    if s < 0.0 || !s.is_finite() {
        return Err(PamError::Parameter(format!("resolvent argument must be non-negative, got {s}")));
    }
    if s == 0.0 && d <= 2 {
        return Err(PamError::Divergent { quantity: "G_d(0)", d });
    }
    bessel_product_integral(&vec![0; d], s, 0, tol)
}

/// G_d(0), divergent for d ≤ 2.
pub fn green_zero(d: usize, tol: f64) -> Result<GreenEstimate> {
    check_dim(d)?;
    check_tol(tol)?;
    if d <= 2 {
        return Ok(GreenEstimate::divergent(d, GreenQuantity::Zero));
    }
    let (value, abs_error) = bessel_product_integral(&vec![0; d], 0.0, 0, tol)?;
    Ok(GreenEstimate {
        d,
        quantity: GreenQuantity::Zero,
        value: GreenValue::Finite(value),
        abs_error,
        method: GreenMethod::TimeIntegral,
    })
}

/// ‖G_d‖₂² = ∫₀^∞ u p_u(0,0) du, divergent for d ≤ 4.
pub fn green_l2sq(d: usize, tol: f64) -> Result<GreenEstimate> {
    check_dim(d)?;
    check_tol(tol)?;
    if d <= 4 {
        return Ok(GreenEstimate::divergent(d, GreenQuantity::L2Squared));
    }
    let (value, abs_error) = bessel_product_integral(&vec![0; d], 0.0, 1, tol)?;
    Ok(GreenEstimate {
        d,
        quantity: GreenQuantity::L2Squared,
        value: GreenValue::Finite(value),
        abs_error,
        method: GreenMethod::TimeIntegral,
    })
}

/// G_d(x) for d ≥ 3.
pub fn green_at(d: usize, x: &[i64], tol: f64) -> Result<GreenEstimate> {
    check_dim(d)?;
    check_tol(tol)?;
    if x.len() != d {
        return Err(PamError::DimensionMismatch { expected: d, got: x.len() });
    }
    if d <= 2 {
        return Err(PamError::Divergent { quantity: "G_d(x)", d });
    }
    let orders: Vec<u32> = x.iter().map(|&c| c.unsigned_abs() as u32).collect();
    let (value, abs_error) = bessel_product_integral(&orders, 0.0, 0, tol)?;
    Ok(GreenEstimate {
        d,
        quantity: GreenQuantity::At(x.to_vec()),
        value: GreenValue::Finite(value),
        abs_error,
        method: GreenMethod::TimeIntegral,
    })
}

/// α_d = G_d(0)/(2d‖G_d‖₂²); zero for d ∈ {3, 4}.
pub fn alpha(d: usize) -> Result<GreenEstimate> {
    alpha_with_tol(d, 1e-12)
}

pub fn alpha_with_tol(d: usize, tol: f64) -> Result<GreenEstimate> {
    check_dim(d)?;
    if d <= 2 {
        return Err(PamError::Domain(format!("alpha_d is undefined for d = {d}: G_d(0) diverges")));
    }
    let est = |value, abs_error| GreenEstimate {
        d,
        quantity: GreenQuantity::Alpha,
        value: GreenValue::Finite(value),
        abs_error,
        method: GreenMethod::TimeIntegral,
    };
    if d <= 4 {
        return Ok(est(0.0, 0.0));
    }
    let g = green_zero(d, tol)?;
    let l = green_l2sq(d, tol)?;
    let (g0, l2) = (g.finite_value()?, l.finite_value()?);
    let a = g0 / (2.0 * d as f64 * l2);
    let rel = g.abs_error / g0 + l.abs_error / l2;
    Ok(est(a, a * rel))
}

/// Fourier-side tensor quadrature of G_d(0) (power 1) or ‖G_d‖₂² (power 2).
///
/// The last angle is integrated in closed form; the remaining d−1 angles use
/// a tensor Gauss–Legendre rule after θ = π u⁴, which flattens the singularity
/// at the origin. The error estimate is the difference between `nodes` and
/// `2·nodes` points per axis.
pub fn green_fourier(d: usize, power: u32, nodes: usize) -> Result<GreenEstimate> {
    let quantity = match power {
        1 => GreenQuantity::Zero,
        2 => GreenQuantity::L2Squared,
        _ => return Err(PamError::Parameter(format!("power must be 1 or 2, got {power}"))),
    };
    if d <= 2 || (power == 2 && d <= 4) {
        return Ok(GreenEstimate::divergent(d, quantity));
    }
    if nodes == 0 {
        return Err(PamError::Parameter("need at least one node per axis".into()));
    }
    let coarse = fourier_tensor(d, power, nodes);
    let fine = fourier_tensor(d, power, 2 * nodes);
    Ok(GreenEstimate {
        d,
        quantity,
        value: GreenValue::Finite(fine),
        abs_error: (fine - coarse).abs(),
        method: GreenMethod::FourierQuadrature,
    })
}

const FOURIER_SUBST: i32 = 4;

fn fourier_tensor(d: usize, power: u32, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let q = FOURIER_SUBST as f64;
    // per-axis node data on [0, 1]: (2(1 − cos θ), weight · dθ/(π du))
    let axis: Vec<(f64, f64)> = x
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let u = 0.5 * (xi + 1.0);
            let theta = PI * u.powi(FOURIER_SUBST);
            let jac = q * u.powi(FOURIER_SUBST - 1);
            (4.0 * (0.5 * theta).sin().powi(2), 0.5 * wi * jac)
        })
        .collect();
    let k = d - 1;
    let total = n.pow(k as u32);
    let chunks: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut acc = KahanSum::new();
            let inner = total / n;
            let mut idx = vec![0usize; k];
            idx[k - 1] = first;
            for _ in 0..inner {
                let mut a = 0.0;
                let mut weight = 1.0;
                for &i in &idx {
                    a += axis[i].0;
                    weight *= axis[i].1;
                }
                let disc = a * (a + 4.0);
                let val = if power == 1 { 1.0 / disc.sqrt() } else { (a + 2.0) / disc.powf(1.5) };
                acc.add(weight * val);
                for c in idx.iter_mut().take(k - 1) {
                    *c += 1;
                    if *c < n {
                        break;
                    }
                    *c = 0;
                }
            }
            acc.value()
        })
        .collect();
    let mut total_sum = KahanSum::new();
    total_sum.extend(chunks);
    total_sum.value()
}

/// Monte Carlo of G_d(0) = E[1/(2Σ(1 − cos Θ_i))] with Θ_i uniform on [0, π].
///
/// Restricted to d ≥ 5, where the estimator has finite variance. The error is
/// one standard error.
pub fn green_zero_monte_carlo(d: usize, samples: usize, seed: u64) -> Result<GreenEstimate> {
    if d < 5 {
        return Err(PamError::Domain(format!(
            "Monte Carlo estimate of G_d(0) has infinite variance for d = {d}"
        )));
    }
    if samples < 2 {
        return Err(PamError::Parameter("need at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s1 = KahanSum::new();
    let mut s2 = KahanSum::new();
    for _ in 0..samples {
        let a: f64 = (0..d).map(|_| 2.0 * (1.0 - (PI * rng.random::<f64>()).cos())).sum();
        let v = 1.0 / a;
        s1.add(v);
        s2.add(v * v);
    }
    let n = samples as f64;
    let mean = s1.value() / n;
    let var = (s2.value() / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(GreenEstimate {
        d,
        quantity: GreenQuantity::Zero,
        value: GreenValue::Finite(mean),
        abs_error: (var / n).sqrt(),
        method: GreenMethod::MonteCarlo,
    })
}

/// G_d on the cube {−R,…,R}^d, stored once per orbit of the hyperoctahedral group.
#[derive(Clone, Debug)]
pub struct GreenTable {
    d: usize,
    radius: usize,
    orbits: Vec<Vec<u32>>,
    multiplicity: Vec<f64>,
    values: Vec<f64>,
    lookup: HashMap<Vec<u32>, usize>,
}

impl GreenTable {
    /// Tabulate G_d(x) for |x|_∞ ≤ R using a shared composite rule for all orbits.
    pub fn build(d: usize, radius: usize) -> Result<Self> {
        if d <= 2 {
            return Err(PamError::Divergent { quantity: "G_d(x)", d });
        }
        let orbits = enumerate_orbits(d, radius as u32);
        let t = cutoff(radius as u32);
        let bp = geometric_breakpoints(0.125, 1.4, t);
        let (nodes, weights) = composite_rule(&bp, 24);
        let bessel: Vec<Vec<f64>> =
            nodes.par_iter().map(|&u| bessel_i_scaled_seq(radius, 2.0 * u)).collect();
        let values: Vec<f64> = orbits
            .par_iter()
            .map(|orbit| {
                let mut acc = KahanSum::new();
                for (row, &w) in bessel.iter().zip(&weights) {
                    let prod: f64 = orbit.iter().map(|&k| row[k as usize]).product();
                    acc.add(w * prod);
                }
                acc.value() + analytic_tail(orbit, 0.0, 0.0, t).0
            })
            .collect();
        let multiplicity = orbits.iter().map(|o| orbit_size(o)).collect();
        let lookup = orbits.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        Ok(Self { d, radius, orbits, multiplicity, values, lookup })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    fn key(x: &[i64]) -> Vec<u32> {
        let mut k: Vec<u32> = x.iter().map(|&c| c.unsigned_abs() as u32).collect();
        k.sort_unstable_by(|a, b| b.cmp(a));
        k
    }

    /// G_d(x), or `None` outside the tabulated cube.
    pub fn get(&self, x: &[i64]) -> Option<f64> {
        if x.len() != self.d {
            return None;
        }
        self.lookup.get(&Self::key(x)).map(|&i| self.values[i])
    }

    pub fn origin(&self) -> f64 {
        self.values[self.lookup[&vec![0; self.d]]]
    }

    /// Σ_{|x|_∞ ≤ r} G_d(x)² for r ≤ R.
    pub fn truncated_l2sq(&self, r: usize) -> f64 {
        let r = r.min(self.radius) as u32;
        let mut acc = KahanSum::new();
        for ((o, &m), &v) in self.orbits.iter().zip(&self.multiplicity).zip(&self.values) {
            if o[0] <= r {
                acc.add(m * v * v);
            }
        }
        acc.value()
    }

    /// Σ_x Σ_i (g(x+e_i) − g(x))² for g = G_d restricted to the cube, zero outside.
    pub fn truncated_grad_sq(&self) -> f64 {
        let parts: Vec<f64> = (0..self.orbits.len())
            .into_par_iter()
            .map(|i| {
                let g = self.values[i];
                -self.multiplicity[i] * g * self.laplacian_at(i)
            })
            .collect();
        let mut acc = KahanSum::new();
        acc.extend(parts);
        acc.value()
    }

    /// (Δg)(x) at the orbit representative, with g zero outside the cube.
    pub fn laplacian_at(&self, i: usize) -> f64 {
        let orbit = &self.orbits[i];
        let g = self.values[i];
        let mut sum = -2.0 * self.d as f64 * g;
        let mut nb = orbit.clone();
        for j in 0..self.d {
            let k = orbit[j];
            let moves: [(u32, f64); 2] = if k == 0 { [(1, 2.0), (1, 0.0)] } else { [(k + 1, 1.0), (k - 1, 1.0)] };
            for (nk, count) in moves {
                if count == 0.0 || nk as usize > self.radius {
                    continue;
                }
                nb.copy_from_slice(orbit);
                nb[j] = nk;
                nb.sort_unstable_by(|a, b| b.cmp(a));
                sum += count * self.values[self.lookup[&nb]];
            }
        }
        sum
    }

    /// Orbit representatives with non-increasing coordinates.
    pub fn orbits(&self) -> &[Vec<u32>] {
        &self.orbits
    }
}

fn enumerate_orbits(d: usize, r: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, left: usize, max: u32, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in (0..=max).rev() {
            prefix.push(k);
            rec(prefix, left - 1, k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(d), d, r, &mut out);
    out
}

/// Number of lattice points obtained from a sorted |x| by signs and permutations.
fn orbit_size(orbit: &[u32]) -> f64 {
    let mut size = 1.0;
    for i in 1..=orbit.len() {
        size *= i as f64;
    }
    let mut run = 1;
    for i in 1..=orbit.len() {
        if i < orbit.len() && orbit[i] == orbit[i - 1] {
            run += 1;
        } else {
            for f in 2..=run {
                size /= f as f64;
            }
            run = 1;
        }
    }
    let nonzero = orbit.iter().filter(|&&k| k != 0).count();
    size * 2f64.powi(nonzero as i32)
}
