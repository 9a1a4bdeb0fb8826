//! Power-series evaluation of the special functions appearing in the
//! coherent-state closed forms: the modified Bessel function I_ν of integer
//! order and the generalized hypergeometric function ₀F₃.
//!
//! All series here are entire in their argument. Summation stops once the
//! term magnitude stays below 1e-16 of the partial sum for three consecutive
//! terms; exceeding the 10,000-term cap is a convergence error.

use crate::error::{Error, Result};

/// Relative size under which a term counts as negligible.
pub const SERIES_RELATIVE_TOLERANCE: f64 = 1e-16;

/// Consecutive negligible terms required before stopping.
pub const SERIES_CONSECUTIVE_SMALL: usize = 3;

/// Hard cap on the number of terms.
pub const SERIES_MAX_TERMS: usize = 10_000;

/// A converged series value and the number of terms consumed.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub value: f64,
    pub terms_used: usize,
}

/// Sum a term sequence under the standard stopping rule.
pub fn sum_series(terms: impl Iterator<Item = f64>) -> Result<SeriesSum> {
    let mut sum = 0.0f64;
    let mut small_streak = 0usize;
    for (count, term) in terms.enumerate() {
        if count >= SERIES_MAX_TERMS {
            return Err(Error::Convergence {
                max_terms: SERIES_MAX_TERMS,
            });
        }
        sum += term;
        if term.abs() <= SERIES_RELATIVE_TOLERANCE * sum.abs() {
            small_streak += 1;
            if small_streak >= SERIES_CONSECUTIVE_SMALL {
                return Ok(SeriesSum {
                    value: sum,
                    terms_used: count + 1,
                });
            }
        } else {
            small_streak = 0;
        }
    }
    Err(Error::Convergence {
        max_terms: SERIES_MAX_TERMS,
    })
}

/// `I_ν(z) / (z/2)^ν = Σ_j (z/2)^{2j} / (j!·(j+ν)!)`, the cutoff-free core of
/// the Bessel series (finite and nonzero at z = 0, where it equals 1/ν!).
pub fn bessel_i_reduced(order: u32, z: f64) -> Result<f64> {
    let q = (z / 2.0) * (z / 2.0);
    let mut factorial = 1.0f64;
    for k in 1..=order {
        factorial *= f64::from(k);
    }
    let first = 1.0 / factorial;
    let terms = std::iter::successors(Some((first, 0u32)), move |&(t, j)| {
        let jn = f64::from(j + 1);
        Some((t * q / (jn * (jn + f64::from(order))), j + 1))
    })
    .map(|(t, _)| t);
    Ok(sum_series(terms)?.value)
}

/// Modified Bessel function of integer order,
/// `I_ν(z) = Σ_j (z/2)^{ν+2j} / (j!·(j+ν)!)`, for z ≥ 0.
pub fn bessel_i(order: u32, z: f64) -> Result<f64> {
    if z < 0.0 || !z.is_finite() {
        return Err(Error::Parameter(format!("bessel_i needs finite z ≥ 0, got {z}")));
    }
    Ok((z / 2.0).powi(order as i32) * bessel_i_reduced(order, z)?)
}

/// Generalized hypergeometric `₀F₃(b1, b2, b3; z) = Σ_n zⁿ/((b1)_n (b2)_n (b3)_n n!)`.
/// The parameters must not be nonpositive integers.
pub fn hyper_0f3(b1: f64, b2: f64, b3: f64, z: f64) -> Result<f64> {
    for b in [b1, b2, b3] {
        if b <= 0.0 && (b - b.round()).abs() < 1e-12 {
            return Err(Error::Parameter(format!(
                "hypergeometric parameter {b} is a nonpositive integer"
            )));
        }
    }
    let terms = std::iter::successors(Some((1.0f64, 0u64)), move |&(t, n)| {
        let nf = n as f64;
        Some((t * z / ((b1 + nf) * (b2 + nf) * (b3 + nf) * (nf + 1.0)), n + 1))
    })
    .map(|(t, _)| t);
    Ok(sum_series(terms)?.value)
}
