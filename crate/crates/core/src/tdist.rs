//! Student-t upper-tail probabilities and quantiles.

use statrs::function::beta::beta_reg;

use crate::error::{argument, Result};

/// `P(T > t)` for `T ~ t(nu)`.
pub fn t_upper_tail(t: f64, nu: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let x = nu / (nu + t * t);
    let half = 0.5 * beta_reg(0.5 * nu, 0.5, x);
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// Upper-tail quantile: the `t` with `P(T > t) = p` for `T ~ t(nu)`.
///
/// Found by bisection on the incomplete-beta tail to a relative width of
/// `1e-13` (absolute below `|t| = 1`).
pub fn t_quantile(p: f64, nu: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(argument(format!("tail probability {p} is not in (0, 1)")));
    }
    if nu == 0 {
        return Err(argument("degrees of freedom must be at least 1"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return t_quantile(1.0 - p, nu).map(|t| -t);
    }

    let nu = f64::from(nu);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_upper_tail(hi, nu) > p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * mid.max(1.0) {
            break;
        }
        if t_upper_tail(mid, nu) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
