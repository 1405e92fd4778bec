//! Log-probability of the symmetric Skellam distribution.
//!
//! `P(n) = exp(-2μ) I_|n|(2μ)` for the difference of two Poisson(μ) variables.
//! Two independent evaluation routes are provided:
//!
//! * [`ln_pmf_convolution`] sums the Poisson convolution directly in log space.
//!   It is exact up to the truncation of terms below `exp(-40)` of the peak
//!   term, and its cost grows like `sqrt(μ)`.
//! * [`ln_pmf_asymptotic`] evaluates `ln I_ν(x)` with the uniform (Debye)
//!   asymptotic expansion, rewritten in terms of `s = sqrt(ν² + x²)` so that it
//!   stays finite at `ν = 0`. The correction terms shrink like `s^-k`.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Rates above this use the asymptotic route.
pub const CONVOLUTION_MAX_RATE: f64 = 50.0;

const DEBYE_TERMS: usize = 24;
const LN_CUTOFF: f64 = -40.0;

/// `ln(n!)`, exact products below 20 and the Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 20 {
        let mut acc = 1.0f64;
        for i in 2..=n {
            acc *= i as f64;
        }
        return acc.ln();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + series
}

/// `ln P(n)` for Skellam(μ, μ) by direct summation of
/// `Σ_j Pois(j; μ) Pois(j + n; μ)`.
pub fn ln_pmf_convolution(n: u64, rate: f64) -> f64 {
    let ln_rate = rate.ln();
    let term = |j: u64| -> f64 {
        (2 * j + n) as f64 * ln_rate - ln_factorial(j) - ln_factorial(j + n) - 2.0 * rate
    };
    // The terms are unimodal in j with the peak where (j+1)(j+n+1) ≈ μ².
    let nf = n as f64;
    let peak_est = 0.5 * (-(nf + 2.0) + (nf * nf + 4.0 * rate * rate).sqrt());
    let mut peak = peak_est.max(0.0).floor() as u64;
    while term(peak + 1) > term(peak) {
        peak += 1;
    }
    while peak > 0 && term(peak - 1) > term(peak) {
        peak -= 1;
    }
    let top = term(peak);
    let mut sum = 1.0f64;
    let mut j = peak;
    while j > 0 {
        j -= 1;
        let d = term(j) - top;
        if d < LN_CUTOFF {
            break;
        }
        sum += d.exp();
    }
    let mut j = peak + 1;
    loop {
        let d = term(j) - top;
        if d < LN_CUTOFF {
            break;
        }
        sum += d.exp();
        j += 1;
    }
    top + sum.ln()
}

/// Polynomials `V_k(p) = U_k(p) / p^k` of the Debye expansion, as ascending
/// coefficient vectors.
fn debye_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        // U_{k+1}(p) = ½p²(1-p²)U_k'(p) + ⅛∫₀ᵖ(1-5t²)U_k(t)dt
        let mut u: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS - 1 {
            let cur = &u[k];
            let mut next = vec![0.0; cur.len() + 3];
            for (j, &c) in cur.iter().enumerate().skip(1) {
                let d = j as f64 * c; // coefficient of p^(j-1) in U_k'
                next[j + 1] += 0.5 * d;
                next[j + 3] -= 0.5 * d;
            }
            for (j, &c) in cur.iter().enumerate() {
                next[j + 1] += c / (8.0 * (j + 1) as f64);
                next[j + 3] -= 5.0 * c / (8.0 * (j + 3) as f64);
            }
            u.push(next);
        }
        u.into_iter()
            .enumerate()
            .map(|(k, coeffs)| coeffs[k..].to_vec())
            .collect()
    })
}

#[cfg(test)]
pub(crate) fn debye_u(k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v.extend_from_slice(&debye_polynomials()[k]);
    v
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `ln I_ν(x) - x` from the uniform asymptotic expansion.
pub fn ln_bessel_i_scaled(order: u64, x: f64) -> f64 {
    let nu = order as f64;
    let s = nu.hypot(x);
    let p = nu / s;
    let lead = nu * nu / (s + x) - nu * (nu / x).asinh() - 0.5 * (2.0 * PI * s).ln();
    let polys = debye_polynomials();
    let mut terms = Vec::with_capacity(DEBYE_TERMS);
    let mut scale = 1.0f64;
    for v in &polys[1..] {
        scale /= s;
        terms.push(scale * horner(v, p));
    }
    // Asymptotic series: truncate before two consecutive increases. A single
    // increase can follow a term that dips near a root of U_k.
    let mut keep = terms.len();
    for k in 1..terms.len() - 1 {
        if terms[k].abs() > terms[k - 1].abs() && terms[k + 1].abs() > terms[k].abs() {
            keep = k;
            break;
        }
    }
    let series = 1.0 + terms[..keep].iter().rev().sum::<f64>();
    lead + series.ln()
}

/// `ln P(n)` for Skellam(μ, μ) through the asymptotic Bessel route.
pub fn ln_pmf_asymptotic(n: u64, rate: f64) -> f64 {
    ln_bessel_i_scaled(n, 2.0 * rate)
}

/// `ln P(n)` using the route appropriate for `rate`.
pub fn ln_pmf(n: u64, rate: f64) -> f64 {
    if rate <= CONVOLUTION_MAX_RATE {
        ln_pmf_convolution(n, rate)
    } else {
        ln_pmf_asymptotic(n, rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_products() {
        let mut acc = 0.0f64;
        for n in 1..200u64 {
            acc += (n as f64).ln();
            assert!((ln_factorial(n) - acc).abs() < 1e-10 * acc.max(1.0), "n={n}");
        }
        assert_eq!(ln_factorial(0), 0.0);
    }

    #[test]
    fn debye_polynomials_match_tabulated() {
        // DLMF 10.41.10
        let u1 = debye_u(1);
        assert!((u1[1] - 3.0 / 24.0).abs() < 1e-15);
        assert!((u1[3] + 5.0 / 24.0).abs() < 1e-15);
        let u2 = debye_u(2);
        for (i, c) in [(2, 81.0), (4, -462.0), (6, 385.0)] {
            assert!((u2[i] - c / 1152.0).abs() < 1e-14, "U2 p^{i}");
        }
        let u3 = debye_u(3);
        for (i, c) in [(3, 30375.0), (5, -369603.0), (7, 765765.0), (9, -425425.0)] {
            assert!((u3[i] - c / 414720.0).abs() < 1e-12, "U3 p^{i}");
        }
    }

    #[test]
    fn hankel_limit_at_order_zero() {
        // I_0(x) e^-x ~ (2πx)^-1/2 (1 + 1/(8x) + 9/(128x²) + ...)
        let x = 400.0;
        let expected = -(0.5 * (2.0 * PI * x).ln())
            + (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x) + 225.0 / (3072.0 * x.powi(3))).ln();
        assert!((ln_bessel_i_scaled(0, x) - expected).abs() < 1e-11);
    }

    #[test]
    fn unit_rate_pmf_at_zero() {
        // P(0) for μ₁=μ₂=1/2 is e^-1 I_0(1) = 0.46575960759364043
        let p = ln_pmf_convolution(0, 0.5).exp();
        assert!((p - 0.465_759_607_593_640_4).abs() < 1e-14);
    }
}
