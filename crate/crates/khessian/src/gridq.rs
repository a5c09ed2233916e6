//! High-order quadrature over function values stored on a (possibly
//! non-uniform) grid.
//!
//! Each interval is integrated by 4-point Gauss-Legendre applied to the
//! barycentric Lagrange interpolant through a 6-point stencil around the
//! interval, i.e. local degree-5 reconstruction. On the adapted grids the
//! integrators produce this is comfortably below their own error.

/// Gauss-Legendre 4 nodes/weights on [-1, 1].
pub(crate) const GL_X: [f64; 4] = [
    -0.8611363115940526,
    -0.3399810435848563,
    0.3399810435848563,
    0.8611363115940526,
];
pub(crate) const GL_W: [f64; 4] = [
    0.3478548451374538,
    0.6521451548625461,
    0.6521451548625461,
    0.3478548451374538,
];

/// Cumulative integral of the sampled function: returns `c` with
/// `c[i] = int_{x[0]}^{x[i]} f`, `c[0] = 0`.
pub(crate) fn cumulative(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), fs.len());
    let n = xs.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let width = 6.min(n);
    for i in 0..n - 1 {
        let lo = i
            .saturating_sub((width - 1) / 2)
            .min(n - width);
        let sx = &xs[lo..lo + width];
        let sf = &fs[lo..lo + width];
        out[i + 1] = out[i] + panel(sx, sf, xs[i], xs[i + 1]);
    }
    out
}

/// Integrate the interpolant through (sx, sf) over [a, b].
fn panel(sx: &[f64], sf: &[f64], a: f64, b: f64) -> f64 {
    // Barycentric weights in coordinates scaled to the stencil span.
    let center = 0.5 * (sx[0] + sx[sx.len() - 1]);
    let span = 0.5 * (sx[sx.len() - 1] - sx[0]).max(f64::MIN_POSITIVE);
    let z: Vec<f64> = sx.iter().map(|x| (x - center) / span).collect();
    let m = z.len();
    let mut w = vec![1.0f64; m];
    for j in 0..m {
        for l in 0..m {
            if l != j {
                w[j] /= z[j] - z[l];
            }
        }
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (gx, gw) in GL_X.iter().zip(GL_W.iter()) {
        let zq = (mid + half * gx - center) / span;
        // Barycentric evaluation; exact hit on a node short-circuits.
        let mut num = 0.0;
        let mut den = 0.0;
        let mut hit = None;
        for j in 0..m {
            let d = zq - z[j];
            if d.abs() < 1e-14 * (1.0 + zq.abs()) {
                hit = Some(sf[j]);
                break;
            }
            let c = w[j] / d;
            num += c * sf[j];
            den += c;
        }
        let val = hit.unwrap_or(num / den);
        acc += gw * val;
    }
    acc * half
}

/// Cubic Hermite evaluation of (value, derivative) from nodal values and
/// nodal derivatives, on the interval containing `x`.
pub(crate) fn hermite_eval(xs: &[f64], ys: &[f64], dys: &[f64], x: f64) -> (f64, f64) {
    let n = xs.len();
    debug_assert!(n >= 2);
    let i = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return (ys[i], dys[i]),
        Err(0) => 0,
        Err(i) if i >= n => n - 2,
        Err(i) => i - 1,
    };
    let h = xs[i + 1] - xs[i];
    let t = (x - xs[i]) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * ys[i] + h10 * h * dys[i] + h01 * ys[i + 1] + h11 * h * dys[i + 1];
    let dh00 = (6.0 * t2 - 6.0 * t) / h;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = (-6.0 * t2 + 6.0 * t) / h;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let d = dh00 * ys[i] + dh10 * dys[i] + dh01 * ys[i + 1] + dh11 * dys[i + 1];
    (v, d)
}
