//! Property tests for the algebraic and quadrature invariants.

use khessian::hessian::{
    is_k_admissible, maclaurin_gap, radial_eigenvalues, sigma_k, sigma_k_radial, ProblemSpec,
};
use khessian::nonlinearity::{KoClass, Nonlinearity};
use khessian::quad;
use proptest::prelude::*;

/// Subset-enumeration oracle for sigma_k, exponential cost, N <= 10 only.
fn sigma_k_enumerated(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    let mut total = 0.0;
    // Iterate k-subsets by bitmask.
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut prod = 1.0;
        for (i, l) in lambda.iter().enumerate() {
            if mask >> i & 1 == 1 {
                prod *= l;
            }
        }
        total += prod;
    }
    total
}

/// Adaptive-Simpson oracle, an independent quadrature path.
fn simpson_adaptive<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    fn recurse<F: Fn(f64) -> f64 + Copy>(
        f: F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = (m - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m));
        let right = (b - m) / 6.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b));
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    recurse(f, a, b, whole, tol, depth)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn antiderivative_strictly_monotone(
        p in 1.0f64..4.0,
        k in 1usize..=3,
        t1 in 0.0f64..10.0,
        dt in 0.01f64..5.0,
    ) {
        let nl = Nonlinearity::power_law(p, k).unwrap();
        let g1 = nl.gk_antiderivative(t1).unwrap();
        let g2 = nl.gk_antiderivative(t1 + dt).unwrap();
        prop_assert!(g2 > g1, "G({t1}) = {g1}, G({}) = {g2}", t1 + dt);
    }

    #[test]
    fn power_law_antiderivative_matches_quadrature(
        p in 1.0f64..4.0,
        k in 1usize..=4,
        t in 0.01f64..20.0,
    ) {
        // Closed form vs the adaptive quadrature path, within 10x the
        // quadrature tolerance.
        let nl = Nonlinearity::power_law(p, k).unwrap();
        let closed = nl.gk_antiderivative(t).unwrap();
        let tol = 1e-10 * closed.max(1.0);
        let q = quad::integrate(|z| z.powf(p * k as f64), 0.0, t, tol, 1e-12).unwrap();
        prop_assert!(
            (closed - q.value).abs() <= 10.0 * (tol + q.error),
            "closed {closed} vs quadrature {} (err {})", q.value, q.error
        );
    }

    #[test]
    fn sigma_k_permutation_invariant(
        mut lambda in proptest::collection::vec(-3.0f64..3.0, 2..9),
        k in 1usize..=4,
        swap_a in 0usize..8,
        swap_b in 0usize..8,
    ) {
        let n = lambda.len();
        let k = 1 + k % n;
        let base = sigma_k(&lambda, k).unwrap();
        lambda.swap(swap_a % n, swap_b % n);
        lambda.reverse();
        let permuted = sigma_k(&lambda, k).unwrap();
        let scale = lambda.iter().fold(1.0f64, |m, l| m.max(l.abs())).powi(k as i32);
        prop_assert!((base - permuted).abs() <= 1e-12 * scale.max(base.abs()));
    }

    #[test]
    fn sigma_k_recurrence_matches_enumeration(
        lambda in proptest::collection::vec(-2.0f64..2.0, 2..10),
        k_seed in 1usize..=10,
    ) {
        let n = lambda.len();
        let k = 1 + k_seed % n;
        let fast = sigma_k(&lambda, k).unwrap();
        let slow = sigma_k_enumerated(&lambda, k);
        let scale = lambda.iter().fold(1.0f64, |m, l| m.max(l.abs())).powi(k as i32);
        prop_assert!(
            (fast - slow).abs() <= 1e-12 * scale.max(slow.abs()).max(1e-300),
            "recurrence {fast} vs enumeration {slow}"
        );
    }

    #[test]
    fn maclaurin_nonnegative_on_admissible_cone(
        lambda in proptest::collection::vec(-0.4f64..2.5, 3..7),
        k_seed in 0usize..4,
    ) {
        let n = lambda.len();
        let k = 2 + k_seed % (n - 1);
        prop_assume!(k <= n);
        prop_assume!(is_k_admissible(&lambda, k).unwrap());
        let gap = maclaurin_gap(&lambda, k).unwrap();
        let scale = lambda.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        prop_assert!(gap >= -1e-13 * scale.max(1.0), "gap {gap} for {lambda:?}, k={k}");
    }

    #[test]
    fn radial_closed_form_matches_general(
        n in 2usize..=8,
        k_seed in 0usize..8,
        r in 0.01f64..10.0,
        phi1 in -3.0f64..3.0,
        phi2 in -3.0f64..3.0,
    ) {
        let k = 1 + k_seed % n;
        let spec = ProblemSpec::new(n, k).unwrap();
        let closed = sigma_k_radial(&spec, r, phi1, phi2).unwrap();
        let ev = radial_eigenvalues(n, r, phi1, phi2).unwrap();
        let general = sigma_k(&ev, k).unwrap();
        prop_assert!(
            (closed - general).abs() <= 1e-12 * (1.0 + general.abs()),
            "closed {closed} vs general {general}"
        );
    }

    #[test]
    fn radial_operator_continuous_at_origin(
        n in 2usize..=6,
        k_seed in 0usize..6,
        a in 0.1f64..3.0,
    ) {
        // Smooth profile with phi'(r)/r -> phi''(0): values converge to the
        // origin branch.
        let k = 1 + k_seed % n;
        let spec = ProblemSpec::new(n, k).unwrap();
        let at_zero = sigma_k_radial(&spec, 0.0, 0.0, a).unwrap();
        for r in [1e-3, 1e-6, 1e-9, 1e-12] {
            let v = sigma_k_radial(&spec, r, a * r, a).unwrap();
            prop_assert!(
                (v - at_zero).abs() <= 1e-10 * (1.0 + at_zero.abs()),
                "r={r}: {v} vs {at_zero}"
            );
        }
    }
}

#[test]
fn radial_closed_form_matches_general_bulk() {
    // Dense deterministic sweep: 1000 random radial profiles.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7261_6469_616c);
    for _ in 0..1000 {
        let n = rng.gen_range(2usize..=8);
        let k = rng.gen_range(1usize..=n);
        let spec = ProblemSpec::new(n, k).unwrap();
        let r = rng.gen_range(1e-3f64..10.0);
        let phi1 = rng.gen_range(-3.0f64..3.0);
        let phi2 = rng.gen_range(-3.0f64..3.0);
        let closed = sigma_k_radial(&spec, r, phi1, phi2).unwrap();
        let ev = radial_eigenvalues(n, r, phi1, phi2).unwrap();
        let general = sigma_k(&ev, k).unwrap();
        assert!(
            (closed - general).abs() <= 1e-12 * (1.0 + general.abs()),
            "N={n} k={k} r={r}: {closed} vs {general}"
        );
    }
}

#[test]
fn ko_dichotomy_extends_to_larger_central_values() {
    // Blow-up at finite radius for beta = 16 on representative Holds
    // cells; no blow-up for the Fails family.
    use khessian::ivp::{blowup_radius, BlowupOptions};
    use khessian::BlowupVerdict;
    let opts = BlowupOptions::default();
    for (p, k, n) in [(1.5, 1usize, 3usize), (2.0, 2, 4), (3.0, 3, 6)] {
        let nl = Nonlinearity::power_law(p, k).unwrap();
        let spec = ProblemSpec::new(n, k).unwrap();
        let est = blowup_radius(&spec, &nl, 16.0, &opts).unwrap();
        assert_eq!(est.verdict, BlowupVerdict::Blowup, "p={p} k={k} N={n}");
        assert!(est.rho_high - est.rho_low <= 1e-4);
    }
    let lin = Nonlinearity::power_law(1.0, 2).unwrap();
    let spec = ProblemSpec::new(4, 2).unwrap();
    let est = blowup_radius(&spec, &lin, 16.0, &opts).unwrap();
    assert_eq!(est.verdict, BlowupVerdict::NoBlowupUpTo { r_max: 1e3 });
}

#[test]
fn step_underflow_is_a_verdict_not_an_error() {
    // Starving the integrator of steps must surface as the StepUnderflow
    // termination carrying the partial trajectory.
    use khessian::ivp::{integrate_ivp, StepControls, Termination};
    let spec = ProblemSpec::new(3, 1).unwrap();
    let nl = Nonlinearity::power_law(2.0, 1).unwrap();
    let controls = StepControls {
        max_steps: 25,
        ..StepControls::default()
    };
    let traj = integrate_ivp(&spec, &nl, 1.0, 10.0, &controls).unwrap();
    assert_eq!(traj.termination, Termination::StepUnderflow);
    assert!(traj.len() >= 2);
    assert!(traj.end_radius() < 10.0);
}

#[test]
fn estimate_slack_stable_under_tolerance_refinement() {
    // Tightening the integrator tolerance tenfold must move the slack by
    // less than the combined evaluation error bounds.
    use khessian::estimates::check_lower_bound;
    use khessian::ivp::{integrate_ivp, StepControls};
    let spec = ProblemSpec::new(3, 1).unwrap();
    let nl = Nonlinearity::power_law(2.0, 1).unwrap();
    let slack_at = |tol: f64| {
        let c = StepControls {
            abs_tol: tol,
            rel_tol: tol,
            ..StepControls::default()
        };
        let traj = integrate_ivp(&spec, &nl, 1.0, 0.8, &c).unwrap();
        let rep = check_lower_bound(&traj, 0.25, 0.5).unwrap();
        (rep.slack, rep.quadrature_error, rep.lhs)
    };
    let (s1, e1, lhs) = slack_at(1e-9);
    let (s2, e2, _) = slack_at(1e-10);
    let budget = e1 + e2 + 1e-8 * lhs.abs().max(1.0);
    assert!(
        (s1 - s2).abs() <= budget.max(1e-9),
        "slack moved {:.3e} under refinement (budget {:.3e})",
        (s1 - s2).abs(),
        budget
    );
}

#[test]
fn ko_report_invariants() {
    // Converging reports carry positive values, non-negative error bounds,
    // and survive doubling of the cutoff within 2x the error bound.
    for (p, k) in [(2.0, 1usize), (1.5, 2), (3.0, 3)] {
        let nl = Nonlinearity::power_law(p, k).unwrap();
        let rep = nl.ko_integral(1.0, 1e-8).unwrap();
        let (v, e) = match rep.verdict {
            khessian::KoVerdict::Converges { value, error_bound } => (value, error_bound),
            _ => panic!("expected convergence for p={p}"),
        };
        assert!(v > 0.0 && e >= 0.0);
        let rep2 = nl
            .ko_integral_opts(
                1.0,
                &khessian::KoOptions {
                    tol: 1e-8,
                    t_start: Some(2.0 * rep.tail_cutoff),
                    t_cap: None,
                },
            )
            .unwrap();
        let v2 = rep2.value().unwrap();
        assert!(
            (v - v2).abs() <= 2.0 * e.max(f64::EPSILON * v),
            "p={p} k={k}: {v} vs {v2} (bound {e})"
        );
    }
}

#[test]
fn sharpened_condition_finite_proxy() {
    // For every Holds-classified nonlinearity, the minimum of K over a
    // beta range drops when the range is extended tenfold.
    let families: Vec<Nonlinearity> = vec![
        Nonlinearity::power_law(1.5, 1).unwrap(),
        Nonlinearity::power_law(2.0, 2).unwrap(),
        Nonlinearity::power_law(3.0, 3).unwrap(),
        Nonlinearity::exp_minus_one(1.0, 1).unwrap(),
    ];
    for nl in families {
        assert_eq!(nl.ko_classify().unwrap(), KoClass::Holds);
        let short = [1.0, 3.0, 10.0];
        let long = [1.0, 3.0, 10.0, 30.0, 100.0];
        let min_of = |betas: &[f64]| -> f64 {
            nl.ko_scan(betas, 1e-8)
                .unwrap()
                .into_iter()
                .map(|r| r.unwrap().value().unwrap())
                .fold(f64::INFINITY, f64::min)
        };
        let m_short = min_of(&short);
        let m_long = min_of(&long);
        assert!(
            m_long < m_short,
            "min K did not drop: {m_short} -> {m_long}"
        );
    }
}

#[test]
fn singular_substitution_agrees_with_naive_epsilon_oracle() {
    // Naive oracle: integrate over [beta + eps, T] with plain quadrature,
    // extrapolate eps -> 0 with the known eps^{k/(k+1)} head, and close
    // the far tail with the asymptotic power integral.
    for (p, k) in [(2.0f64, 1usize), (3.0, 2)] {
        let nl = Nonlinearity::power_law(p, k).unwrap();
        let beta = 1.0f64;
        let value = nl.ko_integral(beta, 1e-10).unwrap().value().unwrap();
        let q = p * k as f64 + 1.0;
        let kp1 = k as f64 + 1.0;
        let integrand = |t: f64| {
            let dg = (t.powf(q) - beta.powf(q)) / q;
            (kp1 * dg).powf(-1.0 / kp1)
        };
        let t_big = 1e8f64;
        let naive = |eps: f64| -> f64 {
            simpson_adaptive(integrand, beta + eps, 10.0, 1e-13, 44)
                + simpson_adaptive(integrand, 10.0, t_big, 1e-13, 44)
        };
        // Richardson in eps: I(eps) = I0 - C eps^{k/(k+1)}.
        let gamma = k as f64 / kp1;
        let (e1, e2) = (1e-5, 1e-5 / 16.0);
        let (i1, i2) = (naive(e1), naive(e2));
        let w = (e2 / e1).powf(gamma);
        let extrapolated = (i2 - w * i1) / (1.0 - w);
        // Far tail: integrand ~ (kp1/q)^{-1/kp1} t^{-q/kp1} beyond t_big.
        let tail = (kp1 / q).powf(-1.0 / kp1) * t_big.powf(1.0 - q / kp1) * kp1 / (q - kp1);
        let oracle = extrapolated + tail;
        assert!(
            (oracle - value).abs() < 1e-6 * value.max(1.0),
            "p={p} k={k}: naive oracle {oracle} vs substituted {value}"
        );
    }
}
