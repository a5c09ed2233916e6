//! Finite-datum Dirichlet problems on balls.
//!
//! Two independent solvers: bisection shooting on the central value, and
//! the monotone sub/supersolution iteration. The explicit constant-source
//! quadratic serves as subsolution; the explosive solution of the
//! semilinear problem obtained through Maclaurin's inequality dominates
//! everything from above. Letting the boundary datum grow along a sequence
//! reproduces the construction of boundary blow-up solutions at desk scale.
//!
//! The monotone iteration solves, at step j,
//!
//! ```text
//! sigma_k(D^2 u_j) - mu u_j = g^k(u_{j-1}) - mu u_{j-1},   u_j(R) = c,
//! ```
//!
//! with mu a Lipschitz bound for g^k on the relevant range; the shift
//! makes the step map order-preserving, so the trace climbs from the
//! subsolution. (For non-decreasing g the unshifted source iteration is
//! *anti*tone - consecutive iterates oscillate around the solution - so
//! mu = 0 is offered only as an explicitly requested variant.) Each step
//! is an implicit problem in u_j, solved by damped Picard passes over the
//! exact radial double-integration formula
//!
//! ```text
//! (u')^k(r) = (k / C_{N-1}^{k-1}) r^{k-N} int_0^r s^{N-1} f(s) ds,
//! u(r) = c - int_r^R u'(s) ds .
//! ```

use crate::error::{Error, Result};
use crate::gridq;
use crate::hessian::ProblemSpec;
use crate::ivp::{
    blowup_radius_src, integrate_ivp, BlowupOptions, BlowupVerdict, IvpRunner, RadialTrajectory,
    StepControls,
};
use crate::nonlinearity::{ko_classify_of, Growth, KoClass, Nonlinearity, SemilinearMajorant};
use serde::{Deserialize, Serialize};

/// Radial profile on an explicit grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

impl RadialProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u\n");
        for i in 0..self.r.len() {
            out.push_str(&format!("{},{}\n", self.r[i], self.u[i]));
        }
        out
    }
}

/// How a Dirichlet solution was produced, with method-specific data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SolveMethod {
    Shooting {
        beta_star: f64,
        trajectory: RadialTrajectory,
    },
    MonotoneIteration {
        iterations: usize,
        final_update_norm: f64,
        shifted: bool,
    },
}

/// Solution of the ball Dirichlet problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletSolution {
    pub spec: ProblemSpec,
    pub nl: Nonlinearity,
    pub profile: RadialProfile,
    #[serde(flatten)]
    pub method: SolveMethod,
    /// Max finite-difference residual of sigma_k^{1/k} - g(u) over the
    /// interior grid (diagnostic; scales with grid spacing squared).
    pub residual: f64,
}

/// Snapshots of the monotone iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub grid: Vec<f64>,
    pub iterates: Vec<Vec<f64>>,
    /// Grid points at which some iterate dropped below its predecessor
    /// beyond roundoff. Must be zero.
    pub monotonicity_violations: usize,
}

/// Options for [`solve_monotone`].
#[derive(Debug, Clone, Copy)]
pub struct MonotoneOptions {
    pub grid_size: usize,
    /// Use the Lipschitz-shifted step (order-preserving). `false` runs the
    /// plain source iteration, whose trace is generally not monotone.
    pub shifted: bool,
    /// Outer stop: max update below this times max(1, c).
    pub update_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions {
            grid_size: 1024,
            shifted: true,
            update_tol: 1e-11,
            max_outer: 600,
            max_inner: 600,
        }
    }
}

/// Explosive radial profile (used as dominating supersolution).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplosiveProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub up: Vec<f64>,
    /// Central value whose blow-up radius matches the requested ball.
    pub beta: f64,
    pub rho_low: f64,
    pub rho_high: f64,
}

impl ExplosiveProfile {
    pub fn value_at(&self, r: f64) -> Result<f64> {
        let hi = *self.r.last().unwrap();
        if !(r >= self.r[0] && r <= hi) {
            return Err(Error::OutOfRange {
                what: "r",
                value: r,
                lo: self.r[0],
                hi,
            });
        }
        Ok(gridq::hermite_eval(&self.r, &self.u, &self.up, r).0)
    }
}

/// The quadratic subsolution u(r) = c + a (r^2 - R^2)/2 with
/// a = (C_N^k)^{-1/k} g(c): it satisfies sigma_k^{1/k} = g(c) exactly and
/// matches the boundary datum.
pub fn explicit_subsolution(
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    grid_size: usize,
) -> Result<RadialProfile> {
    let ball = spec.ball_or_err()?;
    let a = subsolution_curvature(spec, nl)?;
    let n = grid_size.max(2);
    let r: Vec<f64> = (0..n)
        .map(|j| ball.radius * j as f64 / (n - 1) as f64)
        .collect();
    let u: Vec<f64> = r
        .iter()
        .map(|&rj| ball.datum + 0.5 * a * (rj * rj - ball.radius * ball.radius))
        .collect();
    Ok(RadialProfile { r, u })
}

fn subsolution_curvature(spec: &ProblemSpec, nl: &Nonlinearity) -> Result<f64> {
    let ball = spec.ball_or_err()?;
    let g_c = nl.eval(ball.datum)?;
    Ok(spec.c_n_k().powf(-1.0 / spec.order() as f64) * g_c)
}

/// Explosive supersolution via the semilinear majorant: solves the k = 1
/// problem with source N ((C_N^k)^{-1} g^k)^{1/k}, tuning the central value
/// so the blow-up radius matches the ball. Errors when the majorant fails
/// the KO condition (then no such supersolution exists).
pub fn laplace_supersolution(spec: &ProblemSpec, nl: &Nonlinearity) -> Result<ExplosiveProfile> {
    let ball = spec.ball_or_err()?;
    let majorant = SemilinearMajorant::new(nl, spec.dimension());
    match ko_classify_of(&majorant) {
        Ok(KoClass::Holds) => {}
        Ok(KoClass::Fails) => return Err(Error::NoExplosiveSupersolution),
        Err(e) => return Err(e),
    }
    let spec1 = ProblemSpec::new(spec.dimension(), 1)?;
    explosive_profile_src(&spec1, &majorant, ball.radius)
}

/// Explosive profile of the given source with blow-up radius matched to
/// `target_radius` (from below, so the profile dominates on the ball).
fn explosive_profile_src(
    spec: &ProblemSpec,
    src: &dyn Growth,
    target_radius: f64,
) -> Result<ExplosiveProfile> {
    let opts = BlowupOptions {
        r_max: 1e3,
        bracket_tol: (1e-6 * target_radius).min(1e-6),
        ..BlowupOptions::default()
    };
    let rho_mid = |beta: f64| -> Result<f64> {
        let est = blowup_radius_src(spec, src, beta, &opts)?;
        match est.verdict {
            BlowupVerdict::Blowup => Ok(0.5 * (est.rho_low + est.rho_high)),
            BlowupVerdict::NoBlowupUpTo { r_max } => Ok(r_max),
        }
    };
    // Bracket the target radius: rho is decreasing in beta.
    let mut b_lo = 1.0f64;
    while rho_mid(b_lo)? <= target_radius {
        b_lo /= 4.0;
        if b_lo < 1e-14 {
            return Err(Error::NoExplosiveSupersolution);
        }
    }
    let mut b_hi = b_lo;
    while rho_mid(b_hi)? > target_radius {
        b_hi *= 2.0;
        if b_hi > 1e16 {
            return Err(Error::NoExplosiveSupersolution);
        }
    }
    for _ in 0..70 {
        let mid = 0.5 * (b_lo + b_hi);
        if rho_mid(mid)? > target_radius {
            b_lo = mid;
        } else {
            b_hi = mid;
        }
        if (b_hi - b_lo) <= 1e-12 * b_hi {
            break;
        }
    }
    // The lower edge errs on rho >= target_radius.
    let beta = b_lo;
    let est = blowup_radius_src(spec, src, beta, &opts)?;
    let mut runner = IvpRunner::new(spec, src, beta, 2.0 * target_radius, opts.controls)?;
    if let crate::ivp::StopReason::Underflow = runner.run(2.0 * target_radius, 1e12, 1e12, false)? {
        return Err(Error::BracketingFailed {
            beta,
            rho_low: est.rho_low,
            rho_high: est.rho_high,
        });
    }
    Ok(ExplosiveProfile {
        r: runner.r,
        u: runner.xi,
        up: runner.xip,
        beta,
        rho_low: est.rho_low,
        rho_high: est.rho_high,
    })
}

/// Shooting solver: bisect the central value until the trajectory hits the
/// boundary datum, |xi_beta(R) - c| <= 1e-8 c. The comparison principle
/// makes beta -> xi_beta(R) increasing, so the bracket is valid. The
/// returned trajectory is the overshooting bracket edge (xi(R) >= c), so
/// the solution never dips below sub-barriers that equal c at the boundary.
pub fn solve_shooting(
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    grid_size: usize,
) -> Result<DirichletSolution> {
    let ball = spec.ball_or_err()?;
    let (radius, c) = (ball.radius, ball.datum);
    let controls = StepControls {
        abs_tol: 1e-10 * c.min(1.0),
        ..StepControls::default()
    };
    let boundary_value = |beta: f64| -> Result<(f64, RadialTrajectory)> {
        let traj = integrate_ivp(spec, nl, beta, radius, &controls)?;
        let v = match traj.termination {
            crate::ivp::Termination::ReachedRmax => traj.value_at(radius)?.0,
            _ => f64::INFINITY,
        };
        Ok((v, traj))
    };

    let mut lo = 1e-9 * c;
    let mut tries = 0;
    while boundary_value(lo)?.0 > c {
        lo *= 1e-3;
        tries += 1;
        if tries > 3 {
            return Err(Error::BoundaryUnreachable { c, radius });
        }
    }
    let mut hi = c;
    let (mut v_hi, mut traj_hi) = boundary_value(hi)?;
    for _ in 0..200 {
        if v_hi - c <= 1e-8 * c || (hi - lo) <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (v, traj) = boundary_value(mid)?;
        if v >= c {
            hi = mid;
            v_hi = v;
            traj_hi = traj;
        } else {
            lo = mid;
        }
    }
    let (beta_star, trajectory) = (hi, traj_hi);
    if !(v_hi >= c - 1e-12 * c && v_hi - c <= 1e-6 * c) {
        return Err(Error::NonConvergence {
            iterations: 200,
            last_update: v_hi - c,
        });
    }

    let n = grid_size.max(2);
    let r: Vec<f64> = (0..n)
        .map(|j| radius * j as f64 / (n - 1) as f64)
        .collect();
    let mut u = Vec::with_capacity(n);
    for &rj in &r {
        u.push(trajectory.value_at(rj)?.0);
    }
    let residual = fd_residual(spec, nl, &r, &u);
    Ok(DirichletSolution {
        spec: *spec,
        nl: nl.clone(),
        profile: RadialProfile { r, u },
        method: SolveMethod::Shooting {
            beta_star,
            trajectory,
        },
        residual,
    })
}

/// Monotone iteration from the explicit subsolution.
pub fn solve_monotone(
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    opts: &MonotoneOptions,
) -> Result<(DirichletSolution, IterationTrace)> {
    if opts.grid_size < 64 {
        return Err(Error::InvalidParameter {
            name: "grid_size",
            reason: format!("need >= 64 points, got {}", opts.grid_size),
        });
    }
    let ball = spec.ball_or_err()?;
    let (radius, c) = (ball.radius, ball.datum);
    let n = opts.grid_size;
    let grid: Vec<f64> = (0..n)
        .map(|j| radius * j as f64 / (n - 1) as f64)
        .collect();
    let sub = explicit_subsolution(spec, nl, n)?;
    let mut u_prev = sub.u.clone();

    let mu = if opts.shifted {
        lipschitz_gk(nl, c)
    } else {
        0.0
    };
    let scale = c.max(1.0);
    let mut trace = IterationTrace {
        grid: grid.clone(),
        iterates: vec![u_prev.clone()],
        monotonicity_violations: 0,
    };

    let mut iterations = 0;
    let mut final_update = f64::INFINITY;
    for outer in 1..=opts.max_outer {
        let base: Vec<f64> = u_prev.iter().map(|&v| nl.gk_total(v)).collect();
        let u_next = shifted_step(spec, &grid, c, &base, &u_prev, mu, opts, scale)?;

        let mut viol = 0usize;
        for j in 0..n {
            if u_next[j] < u_prev[j] - 1e-10 * scale {
                viol += 1;
            }
        }
        trace.monotonicity_violations += viol;
        trace.iterates.push(u_next.clone());

        final_update = u_next
            .iter()
            .zip(&u_prev)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        u_prev = u_next;
        iterations = outer;
        if final_update <= opts.update_tol * scale {
            break;
        }
        if outer == opts.max_outer {
            return Err(Error::NonConvergence {
                iterations: outer,
                last_update: final_update,
            });
        }
    }
    if opts.shifted && trace.monotonicity_violations > 0 {
        return Err(Error::MonotonicityViolation {
            iteration: iterations,
            violations: trace.monotonicity_violations,
        });
    }

    let residual = fd_residual(spec, nl, &grid, &u_prev);
    let solution = DirichletSolution {
        spec: *spec,
        nl: nl.clone(),
        profile: RadialProfile {
            r: grid,
            u: u_prev,
        },
        method: SolveMethod::MonotoneIteration {
            iterations,
            final_update_norm: final_update,
            shifted: opts.shifted,
        },
        residual,
    };
    Ok((solution, trace))
}

/// One implicit shifted step: solve sigma_k(D^2 v) = base + mu (v - u_prev)
/// by damped Picard passes over the double-integration operator.
fn shifted_step(
    spec: &ProblemSpec,
    grid: &[f64],
    c: f64,
    base: &[f64],
    u_prev: &[f64],
    mu: f64,
    opts: &MonotoneOptions,
    scale: f64,
) -> Result<Vec<f64>> {
    let inner_tol = 1e-13 * scale;
    let mut theta = 1.0f64;
    'retry: loop {
        let mut v = u_prev.to_vec();
        let mut last_delta = f64::INFINITY;
        let mut grew = 0usize;
        for _ in 0..opts.max_inner {
            let source: Vec<f64> = (0..grid.len())
                .map(|j| (base[j] + mu * (v[j] - u_prev[j])).max(0.0))
                .collect();
            let t_v = double_integration_solve(spec, grid, &source, c);
            let mut delta = 0.0f64;
            let mut v_new = Vec::with_capacity(v.len());
            for j in 0..v.len() {
                let nv = v[j] + theta * (t_v[j] - v[j]);
                delta = delta.max((nv - v[j]).abs());
                v_new.push(nv);
            }
            v = v_new;
            if delta <= inner_tol {
                return Ok(v);
            }
            if delta > last_delta * 1.05 {
                grew += 1;
                if grew >= 4 {
                    if theta <= 1.0 / 64.0 {
                        return Err(Error::NonConvergence {
                            iterations: opts.max_inner,
                            last_update: delta,
                        });
                    }
                    theta *= 0.5;
                    continue 'retry;
                }
            }
            last_delta = delta;
        }
        if theta <= 1.0 / 64.0 {
            return Err(Error::NonConvergence {
                iterations: opts.max_inner,
                last_update: last_delta,
            });
        }
        theta *= 0.5;
    }
}

/// Exact solution operator of the frozen-source radial problem
/// `C [r^{N-k}/k (u')^k]' = r^{N-1} f`, u'(0) = 0, u(R) = c, on the grid.
fn double_integration_solve(spec: &ProblemSpec, grid: &[f64], f: &[f64], c: f64) -> Vec<f64> {
    let n = grid.len();
    let k = spec.order();
    let dim = spec.dimension();
    let cc = spec.c_nm1_km1();
    let inner = weighted_cumulative(grid, f, dim as i32 - 1);
    let mut up = vec![0.0; n];
    for j in 1..n {
        let val = (k as f64 / cc) * grid[j].powi(k as i32 - dim as i32) * inner[j].max(0.0);
        up[j] = val.max(0.0).powf(1.0 / k as f64);
    }
    let w = gridq::cumulative(grid, &up);
    let total = w[n - 1];
    (0..n).map(|j| c - (total - w[j])).collect()
}

/// Cumulative integral of s^w * f(s) with the monomial weight handled
/// exactly: f is reconstructed by local cubics, and the moments
/// int s^{w+m} ds are integrated in closed form, so the behaviour of the
/// weight near the origin costs no accuracy.
fn weighted_cumulative(xs: &[f64], fs: &[f64], w: i32) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let m = 4.min(n);
    for j in 0..n - 1 {
        let lo = j.saturating_sub((m - 1) / 2).min(n - m);
        let coeff = newton_to_monomial(&xs[lo..lo + m], &fs[lo..lo + m]);
        let (a, b) = (xs[j], xs[j + 1]);
        let mut seg = 0.0;
        for (deg, &cm) in coeff.iter().enumerate() {
            let e = w + deg as i32 + 1;
            seg += cm * (b.powi(e) - a.powi(e)) / e as f64;
        }
        out[j + 1] = out[j] + seg;
    }
    out
}

/// Monomial coefficients (low to high) of the interpolating polynomial.
fn newton_to_monomial(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let m = xs.len();
    // Divided differences.
    let mut dd = fs.to_vec();
    for level in 1..m {
        for i in (level..m).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    // Expand the Newton form into monomials.
    let mut coeff = vec![0.0f64; m];
    let mut basis = vec![0.0f64; m];
    basis[0] = 1.0; // running product prod (x - xs[i])
    coeff[0] = dd[0];
    for level in 1..m {
        // basis *= (x - xs[level-1])
        let mut next = vec![0.0f64; m];
        for d in 0..level {
            next[d + 1] += basis[d];
            next[d] -= xs[level - 1] * basis[d];
        }
        basis = next;
        for d in 0..=level {
            coeff[d] += dd[level] * basis[d];
        }
    }
    coeff
}

/// Max finite-difference residual |sigma_k^{1/k} - g(u)| over interior
/// nodes (5-point stencils on the uniform grid).
fn fd_residual(spec: &ProblemSpec, nl: &Nonlinearity, r: &[f64], u: &[f64]) -> f64 {
    let n = r.len();
    if n < 5 {
        return f64::NAN;
    }
    let h = r[1] - r[0];
    let k = spec.order() as f64;
    let mut worst = 0.0f64;
    for j in 2..n - 2 {
        let up = (u[j - 2] - 8.0 * u[j - 1] + 8.0 * u[j + 1] - u[j + 2]) / (12.0 * h);
        let upp = (-u[j - 2] + 16.0 * u[j - 1] - 30.0 * u[j] + 16.0 * u[j + 1] - u[j + 2])
            / (12.0 * h * h);
        if let Ok(sk) = crate::hessian::sigma_k_radial(spec, r[j], up, upp) {
            let lhs = sk.max(0.0).powf(1.0 / k);
            let g = nl.g_total(u[j]);
            worst = worst.max((lhs - g).abs());
        }
    }
    worst
}

/// Estimated Lipschitz bound of the (zero-extended) g^k on [0, c].
fn lipschitz_gk(nl: &Nonlinearity, c: f64) -> f64 {
    const SAMPLES: usize = 2048;
    let mut top = c * 1.0001;
    if let Some(lim) = nl.table_limit() {
        top = top.min(lim);
    }
    let mut worst = 0.0f64;
    let mut prev = nl.gk_total(0.0);
    for i in 1..=SAMPLES {
        let u = top * i as f64 / SAMPLES as f64;
        let cur = nl.gk_total(u);
        worst = worst.max((cur - prev) / (top / SAMPLES as f64));
        prev = cur;
    }
    worst * 1.05
}

/// Pointwise ordering of two profiles on a shared grid, with 1e-10 slack.
pub fn comparison_check(lower: &RadialProfile, upper: &RadialProfile) -> Result<bool> {
    if lower.r.len() != upper.r.len() {
        return Err(Error::GridMismatch {
            index: lower.r.len().min(upper.r.len()),
        });
    }
    for (i, (a, b)) in lower.r.iter().zip(&upper.r).enumerate() {
        if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
            return Err(Error::GridMismatch { index: i });
        }
    }
    Ok(lower
        .u
        .iter()
        .zip(&upper.u)
        .all(|(a, b)| *a <= *b + 1e-10 * a.abs().max(b.abs()).max(1.0)))
}

/// The boundary-datum-to-infinity construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LargeSolutionSequence {
    pub n_values: Vec<f64>,
    /// Fixed interior grid (0 to the interior fraction of R).
    pub interior_r: Vec<f64>,
    /// One row of interior values per boundary datum.
    pub interior_values: Vec<Vec<f64>>,
    /// Max-norm differences between consecutive rows.
    pub cauchy_differences: Vec<f64>,
    /// Explosive radial bound evaluated on the interior grid.
    pub bound_values: Vec<f64>,
    pub monotone_violations: usize,
    pub bound_violations: usize,
    /// The last iterate; the reported limit profile.
    pub limit_profile: Vec<f64>,
    pub solutions: Vec<DirichletSolution>,
}

/// Solve the Dirichlet problem for each datum in `n_values` (increasing),
/// record the interior values on [0, interior_fraction * R], and compare
/// against the explosive radial bound of the same equation on the ball.
pub fn large_solution_sequence(
    spec: &ProblemSpec,
    nl: &Nonlinearity,
    n_values: &[f64],
    interior_fraction: f64,
    interior_points: usize,
) -> Result<LargeSolutionSequence> {
    let ball = spec.ball_or_err()?;
    if nl.ko_classify()? != KoClass::Holds {
        return Err(Error::InvalidParameter {
            name: "nl",
            reason: "KO condition fails: no uniform interior bound exists".into(),
        });
    }
    for w in n_values.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidParameter {
                name: "n_values",
                reason: "boundary data must be strictly increasing".into(),
            });
        }
    }
    if !(interior_fraction > 0.0 && interior_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "interior_fraction",
            reason: format!("must be in (0,1), got {interior_fraction}"),
        });
    }

    let rim = interior_fraction * ball.radius;
    let m = interior_points.max(2);
    let interior_r: Vec<f64> = (0..m).map(|j| rim * j as f64 / (m - 1) as f64).collect();

    // Explosive radial bound of the k-Hessian problem itself on this ball.
    let base_spec = ProblemSpec::new(spec.dimension(), spec.order())?;
    let bound = explosive_profile_src(&base_spec, nl, ball.radius)?;
    let bound_values: Vec<f64> = interior_r
        .iter()
        .map(|&r| bound.value_at(r))
        .collect::<Result<_>>()?;

    let mut interior_values: Vec<Vec<f64>> = Vec::new();
    let mut solutions = Vec::new();
    let mut monotone_violations = 0usize;
    let mut bound_violations = 0usize;

    for &datum in n_values {
        let run_spec = ProblemSpec::new(spec.dimension(), spec.order())?
            .with_ball(ball.radius, datum)?;
        let sol = solve_shooting(&run_spec, nl, 257)?;
        let traj = match &sol.method {
            SolveMethod::Shooting { trajectory, .. } => trajectory,
            _ => unreachable!(),
        };
        let row: Vec<f64> = interior_r
            .iter()
            .map(|&r| traj.value_at(r).map(|(v, _)| v))
            .collect::<Result<_>>()?;
        if let Some(prev) = interior_values.last() {
            for j in 0..m {
                if row[j] < prev[j] - 1e-10 * datum.max(1.0) {
                    monotone_violations += 1;
                }
            }
        }
        for j in 0..m {
            if row[j] > bound_values[j] + 1e-10 * bound_values[j].abs().max(1.0) {
                bound_violations += 1;
            }
        }
        interior_values.push(row);
        solutions.push(sol);
    }

    let cauchy_differences: Vec<f64> = interior_values
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .fold(0.0f64, |mx, (a, b)| mx.max((b - a).abs()))
        })
        .collect();
    let limit_profile = interior_values.last().cloned().unwrap_or_default();

    Ok(LargeSolutionSequence {
        n_values: n_values.to_vec(),
        interior_r,
        interior_values,
        cauchy_differences,
        bound_values,
        monotone_violations,
        bound_violations,
        limit_profile,
        solutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_spec(n: usize, k: usize, radius: f64, c: f64) -> ProblemSpec {
        ProblemSpec::new(n, k).unwrap().with_ball(radius, c).unwrap()
    }

    #[test]
    fn subsolution_examples() {
        // N=3, k=2, g = sqrt(3): a = 1, u(0) = 5 - 4/2 = 3.
        let spec = ball_spec(3, 2, 2.0, 5.0);
        let nl = Nonlinearity::constant(3.0f64.sqrt(), 2).unwrap();
        let p = explicit_subsolution(&spec, &nl, 101).unwrap();
        assert!((p.u[0] - 3.0).abs() < 1e-12);
        assert!((p.u[100] - 5.0).abs() < 1e-12);
        // k=1, N=2, g(c)=2, R=1, c=1: a = 1, u(0) = 1/2.
        let spec2 = ball_spec(2, 1, 1.0, 1.0);
        let nl2 = Nonlinearity::constant(2.0, 1).unwrap();
        let p2 = explicit_subsolution(&spec2, &nl2, 11).unwrap();
        assert!((p2.u[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subsolution_satisfies_operator_identity() {
        // sigma_k^{1/k} of the quadratic equals g(c) at every radius.
        let spec = ball_spec(4, 2, 1.5, 3.0);
        let nl = Nonlinearity::power_law(2.0, 2).unwrap();
        let a = subsolution_curvature(&spec, &nl).unwrap();
        for r in [0.0, 0.4, 1.1, 1.5] {
            let sk = crate::hessian::sigma_k_radial(&spec, r, a * r, a).unwrap();
            assert!((sk.powf(0.5) - nl.eval(3.0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn shooting_constant_g_recovers_quadratic() {
        let spec = ball_spec(3, 2, 2.0, 5.0);
        let nl = Nonlinearity::constant(3.0f64.sqrt(), 2).unwrap();
        let sol = solve_shooting(&spec, &nl, 257).unwrap();
        match &sol.method {
            SolveMethod::Shooting { beta_star, .. } => {
                assert!((beta_star - 3.0).abs() < 1e-7, "beta* {beta_star}");
                assert!(*beta_star < 5.0);
            }
            _ => unreachable!(),
        }
        // Whole profile matches the quadratic.
        for (j, &r) in sol.profile.r.iter().enumerate() {
            let exact = 5.0 + 0.5 * (r * r - 4.0);
            assert!((sol.profile.u[j] - exact).abs() < 1e-7);
        }
    }

    #[test]
    fn shooting_linear_g_matches_sinh_solution() {
        // k=1, N=3, g(u) = u, R=1, c=2: beta* = 2/sinh(1).
        let spec = ball_spec(3, 1, 1.0, 2.0);
        let nl = Nonlinearity::power_law(1.0, 1).unwrap();
        let sol = solve_shooting(&spec, &nl, 129).unwrap();
        match &sol.method {
            SolveMethod::Shooting { beta_star, .. } => {
                let exact = 2.0 / 1.0f64.sinh();
                assert!(
                    (beta_star - exact).abs() < 1e-8 * exact,
                    "beta* {beta_star} vs {exact}"
                );
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn monotone_constant_g_converges_immediately() {
        let spec = ball_spec(3, 2, 2.0, 5.0);
        let nl = Nonlinearity::constant(3.0f64.sqrt(), 2).unwrap();
        let (sol, trace) = solve_monotone(
            &spec,
            &nl,
            &MonotoneOptions {
                grid_size: 128,
                ..MonotoneOptions::default()
            },
        )
        .unwrap();
        match sol.method {
            SolveMethod::MonotoneIteration { iterations, .. } => assert!(iterations <= 2),
            _ => unreachable!(),
        }
        assert_eq!(trace.monotonicity_violations, 0);
        for (j, &r) in sol.profile.r.iter().enumerate() {
            let exact = 5.0 + 0.5 * (r * r - 4.0);
            assert!(
                (sol.profile.u[j] - exact).abs() < 1e-9,
                "r={r}: {} vs {exact}",
                sol.profile.u[j]
            );
        }
    }

    #[test]
    fn cross_method_agreement_on_power_fixture() {
        // p=2, k=2, N=4, R=1, c=3 (the subsolution dips negative near the
        // origin; the zero-extension of g keeps the iteration sound).
        let spec = ball_spec(4, 2, 1.0, 3.0);
        let nl = Nonlinearity::power_law(2.0, 2).unwrap();
        let shoot = solve_shooting(&spec, &nl, 1024).unwrap();
        match &shoot.method {
            SolveMethod::Shooting { beta_star, .. } => {
                assert!((beta_star - 1.949502230925).abs() < 1e-6, "{beta_star}");
            }
            _ => unreachable!(),
        }
        let (mono, trace) = solve_monotone(
            &spec,
            &nl,
            &MonotoneOptions {
                grid_size: 1024,
                ..MonotoneOptions::default()
            },
        )
        .unwrap();
        assert_eq!(trace.monotonicity_violations, 0);
        let mut worst = 0.0f64;
        for j in 0..1024 {
            worst = worst.max((shoot.profile.u[j] - mono.profile.u[j]).abs());
        }
        assert!(worst <= 1e-6, "cross-method gap {worst}");
    }

    #[test]
    fn monotone_trace_is_increasing() {
        let spec = ball_spec(3, 1, 1.0, 2.0);
        let nl = Nonlinearity::power_law(2.0, 1).unwrap();
        let (_, trace) = solve_monotone(
            &spec,
            &nl,
            &MonotoneOptions {
                grid_size: 256,
                ..MonotoneOptions::default()
            },
        )
        .unwrap();
        assert_eq!(trace.monotonicity_violations, 0);
        assert!(trace.iterates.len() >= 3);
        for pair in trace.iterates.windows(2) {
            for j in 0..pair[0].len() {
                assert!(pair[1][j] >= pair[0][j] - 1e-10 * 2.0);
            }
        }
    }

    #[test]
    fn unshifted_iteration_oscillates_but_converges() {
        // The plain source iteration is antitone: its trace is NOT
        // monotone, but it still converges to the same solution.
        let spec = ball_spec(3, 1, 1.0, 2.0);
        let nl = Nonlinearity::power_law(2.0, 1).unwrap();
        let (shifted, _) = solve_monotone(
            &spec,
            &nl,
            &MonotoneOptions {
                grid_size: 256,
                ..MonotoneOptions::default()
            },
        )
        .unwrap();
        let (plain, trace) = solve_monotone(
            &spec,
            &nl,
            &MonotoneOptions {
                grid_size: 256,
                shifted: false,
                ..MonotoneOptions::default()
            },
        )
        .unwrap();
        assert!(trace.monotonicity_violations > 0, "antitone map should dip");
        let gap = shifted
            .profile
            .u
            .iter()
            .zip(&plain.profile.u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-8, "methods disagree by {gap}");
    }

    #[test]
    fn laplace_supersolution_requires_superlinear_majorant() {
        // p = 1: the majorant is linear for every k, no explosive solution.
        let spec = ball_spec(3, 1, 1.0, 2.0);
        let nl = Nonlinearity::power_law(1.0, 1).unwrap();
        assert!(matches!(
            laplace_supersolution(&spec, &nl),
            Err(Error::NoExplosiveSupersolution)
        ));
        let spec2 = ball_spec(4, 2, 1.0, 3.0);
        let nl2 = Nonlinearity::power_law(1.0, 2).unwrap();
        assert!(matches!(
            laplace_supersolution(&spec2, &nl2),
            Err(Error::NoExplosiveSupersolution)
        ));
        // p = 2, k = 2: the majorant is proportional to g itself and
        // superlinear, so the supersolution exists even though p <= k.
        let nl3 = Nonlinearity::power_law(2.0, 2).unwrap();
        let sup = laplace_supersolution(&spec2, &nl3).unwrap();
        assert!(sup.rho_low >= 1.0 - 1e-6);
    }

    #[test]
    fn laplace_supersolution_dominates_shooting_solution() {
        // p=3, k=2, N=4, R=0.6, c=10.
        let spec = ball_spec(4, 2, 0.6, 10.0);
        let nl = Nonlinearity::power_law(3.0, 2).unwrap();
        let sup = laplace_supersolution(&spec, &nl).unwrap();
        assert!(sup.rho_low >= 0.6 * (1.0 - 1e-6), "rho_low {}", sup.rho_low);
        let sol = solve_shooting(&spec, &nl, 257).unwrap();
        for (j, &r) in sol.profile.r.iter().enumerate() {
            if r > 0.594 {
                break; // supersolution grid ends just below its blow-up
            }
            let s = sup.value_at(r).unwrap();
            assert!(
                sol.profile.u[j] <= s + 1e-8 * s.abs().max(1.0),
                "r={r}: {} vs {s}",
                sol.profile.u[j]
            );
        }
    }

    #[test]
    fn ordering_chain_on_fixture() {
        let spec = ball_spec(3, 1, 1.0, 2.0);
        let nl = Nonlinearity::power_law(2.0, 1).unwrap();
        let sub = explicit_subsolution(&spec, &nl, 257).unwrap();
        let sol = solve_shooting(&spec, &nl, 257).unwrap();
        assert!(comparison_check(&sub, &sol.profile).unwrap());
        let sup = laplace_supersolution(&spec, &nl).unwrap();
        let sup_profile = RadialProfile {
            r: sol.profile.r.clone(),
            u: sol
                .profile
                .r
                .iter()
                .map(|&r| sup.value_at(r.min(0.99 * 1.0)).unwrap())
                .collect(),
        };
        // Compare on [0, 0.99 R] where the supersolution grid lives.
        assert!(comparison_check(&sol.profile, &sup_profile).unwrap() || {
            // allow the last nodes past 0.99R to be clipped
            let m = sol.profile.r.iter().filter(|r| **r <= 0.99).count();
            let a = RadialProfile {
                r: sol.profile.r[..m].to_vec(),
                u: sol.profile.u[..m].to_vec(),
            };
            let b = RadialProfile {
                r: sup_profile.r[..m].to_vec(),
                u: sup_profile.u[..m].to_vec(),
            };
            comparison_check(&a, &b).unwrap()
        });
    }

    #[test]
    fn comparison_check_basics() {
        let a = RadialProfile {
            r: vec![0.0, 0.5, 1.0],
            u: vec![1.0, 1.1, 1.2],
        };
        assert!(comparison_check(&a, &a).unwrap());
        let b = RadialProfile {
            r: vec![0.0, 0.6, 1.0],
            u: vec![1.0, 1.1, 1.2],
        };
        assert!(matches!(
            comparison_check(&a, &b),
            Err(Error::GridMismatch { .. })
        ));
        let c = RadialProfile {
            r: a.r.clone(),
            u: vec![0.9, 1.3, 1.2],
        };
        assert!(!comparison_check(&c, &a).unwrap());
    }

    #[test]
    fn boundary_monotonicity_in_datum() {
        let nl = Nonlinearity::power_law(2.0, 1).unwrap();
        let s1 = solve_shooting(&ball_spec(3, 1, 1.0, 1.5), &nl, 129).unwrap();
        let s2 = solve_shooting(&ball_spec(3, 1, 1.0, 3.0), &nl, 129).unwrap();
        assert!(comparison_check(&s1.profile, &s2.profile).unwrap());
    }

    #[test]
    fn small_datum_solutions_vanish() {
        // As c -> 0 with g(0) = 0, solutions sink to zero uniformly
        // (u == 0 solves the c = 0 problem).
        let nl = Nonlinearity::power_law(2.0, 1).unwrap();
        for c in [1e-2, 1e-4] {
            let sol = solve_shooting(&ball_spec(3, 1, 1.0, c), &nl, 65).unwrap();
            let max = sol.profile.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max <= c * (1.0 + 2e-8), "c={c}: max {max}");
        }
    }

    #[test]
    fn interior_admissibility_of_solutions() {
        // At every interior grid point the radial eigenvalue profile is
        // k-admissible.
        let spec = ball_spec(4, 2, 1.0, 3.0);
        let nl = Nonlinearity::power_law(2.0, 2).unwrap();
        let sol = solve_shooting(&spec, &nl, 257).unwrap();
        let traj = match &sol.method {
            SolveMethod::Shooting { trajectory, .. } => trajectory,
            _ => unreachable!(),
        };
        for j in 1..traj.len() {
            let r = traj.r[j];
            if r == 0.0 {
                continue;
            }
            let xidd = crate::ivp::ivp_rhs(&spec, &nl, r, traj.xi[j], traj.xip[j]).unwrap();
            let ev =
                crate::hessian::radial_eigenvalues(4, r, traj.xip[j], xidd).unwrap();
            assert!(
                crate::hessian::is_k_admissible(&ev, 2).unwrap(),
                "r={r}: {ev:?}"
            );
        }
    }

    #[test]
    fn large_solution_sequence_monotone_and_bounded() {
        let spec = ball_spec(3, 1, 1.0, 1.0);
        let nl = Nonlinearity::power_law(2.0, 1).unwrap();
        let seq =
            large_solution_sequence(&spec, &nl, &[2.0, 4.0, 8.0], 0.9, 33).unwrap();
        assert_eq!(seq.monotone_violations, 0);
        assert_eq!(seq.bound_violations, 0);
        assert_eq!(seq.cauchy_differences.len(), 2);
        // Oracle: u_2(0) = 1.53669310, u_4(0) = 2.55547065, u_8(0) = 3.92444199.
        assert!((seq.interior_values[0][0] - 1.53669310).abs() < 1e-5);
        assert!((seq.interior_values[1][0] - 2.55547065).abs() < 1e-5);
        assert!((seq.interior_values[2][0] - 3.92444199).abs() < 1e-5);
    }

    #[test]
    fn large_solution_sequence_rejects_failing_ko() {
        let spec = ball_spec(3, 1, 1.0, 1.0);
        let nl = Nonlinearity::power_law(1.0, 1).unwrap();
        assert!(large_solution_sequence(&spec, &nl, &[2.0, 4.0], 0.9, 17).is_err());
    }

    #[test]
    fn higher_order_fixture_agreement() {
        // p=4, k=3, N=6, R=0.6, c=2: spans the k=3 column.
        let spec = ball_spec(6, 3, 0.6, 2.0);
        let nl = Nonlinearity::power_law(4.0, 3).unwrap();
        let shoot = solve_shooting(&spec, &nl, 512).unwrap();
        let (mono, trace) = solve_monotone(
            &spec,
            &nl,
            &MonotoneOptions {
                grid_size: 512,
                ..MonotoneOptions::default()
            },
        )
        .unwrap();
        assert_eq!(trace.monotonicity_violations, 0);
        let mut worst = 0.0f64;
        for j in 0..512 {
            worst = worst.max((shoot.profile.u[j] - mono.profile.u[j]).abs());
        }
        assert!(worst <= 2e-6, "gap {worst}");
    }
}
