//! Scaled modified Bessel functions and the incomplete gamma function.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Argument above which the large-x expansion replaces the power series.
pub const HANKEL_SWITCH: f64 = 30.0;

/// Coefficients b_j of e^{−x} I_k(x) ≈ (2πx)^{−1/2} Σ_j b_j x^{−j}.
pub fn hankel_coefficients(k: u32, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut out = Vec::with_capacity(terms);
    let mut c = 1.0;
    out.push(c);
    for j in 1..terms {
        let odd = (2 * j - 1) as f64;
        c *= -(mu - odd * odd) / (j as f64 * 8.0);
        out.push(c);
    }
    out
}

fn hankel_scaled(k: u32, x: f64) -> f64 {
    let mu = 4.0 * (k as f64) * (k as f64);
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..200 {
        let odd = (2 * j - 1) as f64;
        let next = term * -(mu - odd * odd) / (j as f64 * 8.0 * x);
        if next.abs() >= term.abs() && j > 1 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// e^{−x} I₀(x) for x ≥ 0.
pub fn i0_scaled(x: f64) -> f64 {
    assert!(x >= 0.0, "i0_scaled needs x >= 0, got {x}");
    if x > HANKEL_SWITCH {
        return hankel_scaled(0, x);
    }
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum * (-x).exp()
}

/// e^{−x} I_k(x) for k = 0..=kmax.
pub fn bessel_i_scaled_seq(kmax: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_i_scaled_seq needs x >= 0, got {x}");
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let hankel_ok = |k: usize| x > HANKEL_SWITCH && x >= (k * k) as f64;
    if hankel_ok(kmax) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = hankel_scaled(k as u32, x);
        }
        return out;
    }
    // Miller's backward recurrence I_{k−1} = (2k/x) I_k + I_{k+1}
    let start = kmax + x.ceil() as usize + 40;
    let mut above = 0.0f64;
    let mut cur = 1e-300f64;
    for k in (1..=start).rev() {
        let below = (2.0 * k as f64 / x) * cur + above;
        above = cur;
        cur = below;
        if k - 1 <= kmax {
            out[k - 1] = cur;
        }
        if cur > 1e250 {
            cur *= 1e-250;
            above *= 1e-250;
            for v in out.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = i0_scaled(x) / out[0];
    for v in out.iter_mut() {
        *v *= norm;
    }
    out
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(a) for real a that is not a non-positive integer.
pub fn gamma(a: f64) -> f64 {
    if a < 0.5 {
        return PI / ((PI * a).sin() * gamma(1.0 - a));
    }
    let z = a - 1.0;
    let mut s = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * s
}

/// Exponential integral E₁(x) = Γ(0, x) for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0, got {x}");
    if x >= 1.0 {
        return upper_gamma_cf(0.0, x);
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..100 {
        term *= -x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Lower incomplete gamma by its power series, valid for a > 0.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..500 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * (a * x.ln() - x).exp()
}

/// Γ(a, x) by the Legendre continued fraction (modified Lentz).
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x).exp() * h
}

/// Upper incomplete gamma Γ(a, x) = ∫_x^∞ t^{a−1} e^{−t} dt for real a and x > 0.
pub fn upper_gamma(a: f64, x: f64) -> f64 {
    assert!(x > 0.0, "upper_gamma needs x > 0, got {x}");
    if x >= 1.0 {
        return upper_gamma_cf(a, x);
    }
    if a > 0.0 {
        return gamma(a) - lower_gamma_series(a, x);
    }
    let base = a - a.floor();
    let (mut ak, mut val) = if base == 0.0 {
        (0.0, exp_integral_e1(x))
    } else {
        (base, gamma(base) - lower_gamma_series(base, x))
    };
    // Γ(a, x) = (Γ(a+1, x) − x^a e^{−x}) / a, stepping down to the target
    while ak - a > 0.5 {
        ak -= 1.0;
        val = (val - (ak * x.ln() - x).exp()) / ak;
    }
    val
}
