use super::DigammaMode;
use crate::error::{Error, Result};

// Bernoulli-number coefficients B_2n / (2n) of the asymptotic expansion,
// applied to x^-2n.
const ASYMPTOTIC: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

const SERIES_FROM: f64 = 10.0;

/// Digamma function on positive reals.
pub fn digamma(x: f64, mode: DigammaMode) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::NonPositiveArgument(x));
    }
    Ok(match mode {
        DigammaMode::Exact => digamma_exact(x),
        DigammaMode::PaperApprox => x.ln() - 0.5 / x,
    })
}

pub(crate) fn digamma_unchecked(x: f64, mode: DigammaMode) -> f64 {
    match mode {
        DigammaMode::Exact => digamma_exact(x),
        DigammaMode::PaperApprox => x.ln() - 0.5 / x,
    }
}

fn digamma_exact(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < SERIES_FROM {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Horner over x^-2 with alternating signs folded into the table
    let mut tail = 0.0;
    for c in ASYMPTOTIC.iter().rev() {
        tail = (tail + c) * inv2;
    }
    x.ln() - 0.5 / x - tail - shift
}
