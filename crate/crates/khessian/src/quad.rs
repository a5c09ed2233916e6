//! Adaptive quadrature on finite intervals.
//!
//! A 15-point Gauss-Kronrod rule drives a globally adaptive bisection
//! scheme: the interval with the largest error estimate is split first.
//! All nodes are interior, so integrands with an integrable endpoint
//! singularity can be fed directly (convergence is then slow; the callers
//! that hit algebraic endpoint singularities remove them by substitution
//! first).

use crate::error::{Error, Result};
use std::collections::BinaryHeap;

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];

/// Kronrod-15 weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Gauss-7 weights for the embedded rule (nodes XGK[1], XGK[3], XGK[5], 0).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// One Gauss-Kronrod panel: returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_int = WGK[7] * fc.abs();
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        kronrod += WGK[j] * (f1 + f2);
        abs_int += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    kronrod *= half;
    gauss *= half;
    abs_int *= half.abs();

    // QUADPACK-style sharpened error estimate.
    let raw = (kronrod - gauss).abs();
    let err = if abs_int > 0.0 && raw > 0.0 {
        let scaled = (200.0 * raw / abs_int).powf(1.5) * abs_int;
        raw.min(scaled)
    } else {
        raw
    };
    (kronrod, err)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Maximum number of subintervals the adaptive loop may create.
pub const MAX_SUBINTERVALS: usize = 1 << 20;

/// Adaptively integrate `f` over `[a, b]` until the estimated error drops
/// below `abs_tol + rel_tol * |integral|`.
///
/// Non-finite panel values are treated as "split me first" rather than a
/// hard failure, so mild endpoint trouble self-heals; if the budget of
/// [`MAX_SUBINTERVALS`] is exhausted the partial value is reported inside
/// [`Error::QuadratureBudget`].
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (v0, e0) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        error: sanitize_error(v0, e0, b - a),
    });
    let mut total_value = v0;
    let mut total_error = e0;
    let mut evals = 15;
    let mut panels = 1usize;

    loop {
        let tol = abs_tol + rel_tol * total_value.abs();
        if total_error <= tol && total_value.is_finite() {
            return Ok(QuadResult {
                value: total_value,
                error: total_error,
                evaluations: evals,
            });
        }
        if panels >= MAX_SUBINTERVALS {
            return Err(Error::QuadratureBudget {
                partial: total_value,
                error_bound: total_error,
            });
        }
        let worst = heap.pop().expect("heap never empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at machine resolution; freeze it.
            continue;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evals += 30;
        panels += 1;
        total_value += (v1 + v2) - worst.value;
        total_error += (e1 + e2) - worst.error;
        if !total_value.is_finite() || !total_error.is_finite() {
            // Rebuild the running sums from the heap to shed inf/nan noise.
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: sanitize_error(v1, e1, mid - worst.a),
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: sanitize_error(v2, e2, worst.b - mid),
            });
            let mut v = 0.0;
            let mut e = 0.0;
            for p in heap.iter() {
                if p.value.is_finite() {
                    v += p.value;
                }
                e += p.error;
            }
            total_value = v;
            total_error = e;
            continue;
        }
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: sanitize_error(v1, e1, mid - worst.a),
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: sanitize_error(v2, e2, worst.b - mid),
        });
    }
}

fn sanitize_error(value: f64, error: f64, width: f64) -> f64 {
    if value.is_finite() && error.is_finite() {
        error
    } else {
        // Force this panel to the top of the heap.
        f64::MAX * (width.abs() / (1.0 + width.abs())).max(0.5)
    }
}
