//! Bessel functions of the first kind and their positive zeros.

use crate::error::{Error, Result};

/// `J_0(x) ..= J_order(x)` by Miller's backward recurrence.
pub fn bessel_j_all(order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = order.max(ax as usize);
    let start = 2 * ((top + 20 + (40.0 * top as f64).sqrt() as usize) / 2) + 2;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx <= order {
            out[idx] = cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * cur;
        }
        // Rescale to stay inside the float range.
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    norm += cur;
    for (k, v) in out.iter_mut().enumerate() {
        *v /= norm;
        if x < 0.0 && k % 2 == 1 {
            *v = -*v;
        }
    }
    out
}

pub fn bessel_j(order: usize, x: f64) -> f64 {
    bessel_j_all(order, x)[order]
}

/// Derivative `J_m'(x)` through `J_{m-1} - J_{m+1}`.
pub fn bessel_j_prime(order: usize, x: f64) -> f64 {
    let all = bessel_j_all(order + 1, x);
    if order == 0 {
        -all[1]
    } else {
        0.5 * (all[order - 1] - all[order + 1])
    }
}

/// Positive zeros of `J_m` not exceeding `limit`, by scan and bisection.
pub fn bessel_zeros(order: usize, limit: f64) -> Result<Vec<f64>> {
    let mut roots = Vec::new();
    let step = 0.25;
    let mut a = order as f64 + 0.1;
    if order == 0 {
        a = 0.5;
    }
    let mut fa = bessel_j(order, a);
    while a < limit {
        let b = a + step;
        let fb = bessel_j(order, b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let r = bisect(|x| bessel_j(order, x), a, b)?;
            if r <= limit {
                roots.push(r);
            }
        }
        a = b;
        fa = fb;
    }
    Ok(roots)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> Result<f64> {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
        if (b - a) <= 1e-15 * mid.abs() {
            return Ok(0.5 * (a + b));
        }
    }
    Err(Error::RootFinding(format!(
        "bisection stalled on [{a}, {b}]"
    )))
}
