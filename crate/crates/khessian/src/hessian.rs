//! The k-Hessian operator on eigenvalue profiles and its radial closed form.
//!
//! sigma_k is computed by coefficient extraction from prod_i (1 + lambda_i x)
//! (an O(Nk) recurrence) rather than by enumerating the C(N, k) principal
//! minors; enumeration survives only as a test oracle for small N.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Ball geometry for boundary problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    /// Ball radius R > 0.
    pub radius: f64,
    /// Constant boundary datum c > 0.
    pub datum: f64,
}

/// Dimension, Hessian order and (optionally) the ball for boundary problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    n: usize,
    k: usize,
    ball: Option<BallSpec>,
}

impl ProblemSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "N",
                reason: format!("dimension must be >= 2, got {n}"),
            });
        }
        if k < 1 || k > n {
            return Err(Error::OrderOutOfRange { k, n });
        }
        Ok(ProblemSpec { n, k, ball: None })
    }

    pub fn with_ball(mut self, radius: f64, datum: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter {
                name: "R",
                reason: format!("ball radius must be positive, got {radius}"),
            });
        }
        if !(datum > 0.0) || !datum.is_finite() {
            return Err(Error::InvalidParameter {
                name: "c",
                reason: format!("boundary datum must be positive, got {datum}"),
            });
        }
        self.ball = Some(BallSpec { radius, datum });
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn ball(&self) -> Option<BallSpec> {
        self.ball
    }

    pub(crate) fn ball_or_err(&self) -> Result<BallSpec> {
        self.ball.ok_or(Error::InvalidParameter {
            name: "ball",
            reason: "problem spec has no ball (radius/datum) attached".into(),
        })
    }

    /// C_{N-1}^{k-1}, the coefficient of the radial closed form.
    pub(crate) fn c_nm1_km1(&self) -> f64 {
        binomial(self.n - 1, self.k - 1)
    }

    /// C_N^k.
    pub(crate) fn c_n_k(&self) -> f64 {
        binomial(self.n, self.k)
    }

    /// Length scale used by near-origin branches.
    pub(crate) fn length_scale(&self) -> f64 {
        self.ball.map_or(1.0, |b| b.radius)
    }
}

/// Binomial coefficient as f64 (exact for the small N used here).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// k-th elementary symmetric polynomial of `lambda`.
///
/// Coefficient extraction: running product of (1 + lambda_i x) truncated at
/// degree k; the k-th coefficient is sigma_k.
pub fn sigma_k(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    let mut coeff = vec![0.0f64; k + 1];
    coeff[0] = 1.0;
    for &l in lambda {
        for j in (1..=k).rev() {
            coeff[j] += l * coeff[j - 1];
        }
    }
    Ok(coeff[k])
}

/// Hessian eigenvalues of a radial profile: (phi'', phi'/r, ..., phi'/r)
/// for r > 0 and (phi'', ..., phi'') at the origin.
pub fn radial_eigenvalues(n: usize, r: f64, phi1: f64, phi2: f64) -> Result<Vec<f64>> {
    if r < 0.0 {
        return Err(Error::NegativeInput {
            name: "r",
            value: r,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "N",
            reason: format!("dimension must be >= 2, got {n}"),
        });
    }
    if r == 0.0 {
        if phi1 != 0.0 {
            return Err(Error::InconsistentProfile { phi1 });
        }
        return Ok(vec![phi2; n]);
    }
    let mut lambda = vec![phi1 / r; n];
    lambda[0] = phi2;
    Ok(lambda)
}

/// Closed-form radial sigma_k:
/// C_{N-1}^{k-1} phi'' (phi'/r)^{k-1} + C_{N-1}^{k-1} (N-k)/k (phi'/r)^k
/// for r > 0, and C_N^k (phi'')^k at the origin. Radii below 1e-8 of the
/// problem's length scale use the origin limit phi'/r -> phi'' to avoid 0/0.
pub fn sigma_k_radial(spec: &ProblemSpec, r: f64, phi1: f64, phi2: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::NegativeInput {
            name: "r",
            value: r,
        });
    }
    let k = spec.order();
    let n = spec.dimension();
    if r == 0.0 {
        if phi1 != 0.0 {
            return Err(Error::InconsistentProfile { phi1 });
        }
        return Ok(spec.c_n_k() * phi2.powi(k as i32));
    }
    let slope = if r < 1e-8 * spec.length_scale() {
        phi2
    } else {
        phi1 / r
    };
    let c = spec.c_nm1_km1();
    Ok(c * phi2 * slope.powi(k as i32 - 1) + c * (n - k) as f64 / k as f64 * slope.powi(k as i32))
}

/// Check the admissible-cone chain sigma_j > 0 for j = 1..k, with a
/// roundoff guard: "positive" means sigma_j > 1e-14 * max(1, |lambda|_inf^j).
pub fn is_k_admissible(lambda: &[f64], k: usize) -> Result<bool> {
    let n = lambda.len();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    Ok(first_non_positive(lambda, k).is_none())
}

fn first_non_positive(lambda: &[f64], k: usize) -> Option<usize> {
    let sup = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let mut coeff = vec![0.0f64; k + 1];
    coeff[0] = 1.0;
    for &l in lambda {
        for j in (1..=k).rev() {
            coeff[j] += l * coeff[j - 1];
        }
    }
    for j in 1..=k {
        let tol = 1e-14 * sup.powi(j as i32).max(1.0);
        if coeff[j] <= tol {
            return Some(j);
        }
    }
    None
}

/// Maclaurin gap sigma_1/N - ((C_N^k)^{-1} sigma_k)^{1/k}; non-negative on
/// the admissible cone, zero exactly at equal eigenvalues.
pub fn maclaurin_gap(lambda: &[f64], k: usize) -> Result<f64> {
    let n = lambda.len();
    if k < 1 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if let Some(j) = first_non_positive(lambda, k) {
        return Err(Error::NotAdmissible { k, j });
    }
    let s1 = sigma_k(lambda, 1)?;
    let sk = sigma_k(lambda, k)?;
    Ok(s1 / n as f64 - (sk / binomial(n, k)).powf(1.0 / k as f64))
}
