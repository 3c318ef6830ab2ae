//! Safeguarded Newton–Raphson for strictly decreasing score functions on a
//! half-line (floor, ∞).

use crate::error::{Error, Result};

use super::SolverOptions;

/// Upper bracket limit; a score still positive here has no usable root.
pub(crate) const UPPER_BRACKET_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds the root of a decreasing `score` on (floor, ∞).
///
/// The lower end of the bracket is `floor + ε·max(1, dim)`; the upper end
/// starts at `max(2·dim, 2·hint)` and doubles until the score turns
/// negative. Newton steps that leave the bracket, or a non-negative
/// derivative, fall back to bisection.
pub(crate) fn solve_decreasing(
    score: impl Fn(f64) -> Result<f64>,
    derivative: impl Fn(f64) -> Result<f64>,
    floor: f64,
    dim: usize,
    hint: Option<f64>,
    opts: &SolverOptions,
) -> Result<Root> {
    let mut lo = floor + opts.bracket_floor_epsilon * (dim as f64).max(1.0);
    let f_lo = score(lo)?;
    if !(f_lo > 0.0) {
        return Err(Error::SolverFailure {
            iterations: 0,
            last_value: lo,
            residual: f_lo,
        });
    }

    let hint = hint.filter(|h| h.is_finite() && *h > lo);
    let mut hi = (2.0 * dim as f64).max(2.0 * hint.unwrap_or(0.0)).max(lo * 2.0);
    let mut f_hi = score(hi)?;
    while f_hi > 0.0 {
        if hi >= UPPER_BRACKET_CAP {
            return Err(Error::DegenerateSample(format!(
                "score still positive at L = {hi:e}; estimate diverges"
            )));
        }
        lo = hi;
        hi *= 2.0;
        f_hi = score(hi)?;
    }
    if f_hi == 0.0 {
        return Ok(Root {
            value: hi,
            residual: 0.0,
            iterations: 0,
        });
    }

    let mut x = match hint {
        Some(h) if h > lo && h < hi => h,
        _ => 0.5 * (lo + hi),
    };
    let mut f = score(x)?;
    for iteration in 1..=opts.max_iterations {
        if f.abs() <= opts.abs_tolerance {
            return Ok(Root {
                value: x,
                residual: f,
                iterations: iteration - 1,
            });
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = derivative(x)?;
        let newton = x - f / d;
        let next = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x || hi - lo <= f64::EPSILON * hi {
            // Bracket collapsed to floating-point resolution.
            break;
        }
        x = next;
        f = score(x)?;
    }
    if f.abs() <= opts.abs_tolerance {
        return Ok(Root {
            value: x,
            residual: f,
            iterations: opts.max_iterations,
        });
    }
    Err(Error::SolverFailure {
        iterations: opts.max_iterations,
        last_value: x,
        residual: f,
    })
}
