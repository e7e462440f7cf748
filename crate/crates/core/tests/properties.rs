use approx::assert_relative_eq;
use known_roots::*;
use proptest::prelude::*;

use mfc_core::mfc::{ControllerSpec, DerivatorFilter, LagFilter, LawInputs};
use mfc_core::poly::{
    expand_pole, ip_charpoly, pid_closed_loop, pid_gains_from_target, roots, routh_hurwitz, IpLoopParams, Polynomial,
    StabilityKind,
};
use mfc_core::sim::{
    plant_step, run_closed_loop, LtiPlant, NoiseModel, PlantState, ReferenceTrajectory, SimConfig, TraceMeta,
};
use mfc_core::mfc::EstimatorConfig;
use mfc_core::stabmap::{export_grid, sweep, write_grid_csv, Aggregation, Axis, CellVerdict, GridSpec};

/// Polynomials built from known roots, the oracle for the root finder and
/// for right-half-plane counts.
mod known_roots {
    /// A real root or a conjugate pair `re ± i·im`.
    #[derive(Debug, Clone, Copy)]
    pub enum RootSpec {
        Real(f64),
        Pair(f64, f64),
    }

    pub fn expand(specs: &[RootSpec]) -> Vec<f64> {
        let mut c = vec![1.0];
        for s in specs {
            let factor: Vec<f64> = match *s {
                RootSpec::Real(r) => vec![-r, 1.0],
                RootSpec::Pair(re, im) => vec![re * re + im * im, -2.0 * re, 1.0],
            };
            let mut next = vec![0.0; c.len() + factor.len() - 1];
            for (i, a) in c.iter().enumerate() {
                for (j, b) in factor.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            c = next;
        }
        c
    }

    pub fn real_parts(specs: &[RootSpec]) -> Vec<f64> {
        specs
            .iter()
            .flat_map(|s| match *s {
                RootSpec::Real(r) => vec![r],
                RootSpec::Pair(re, _) => vec![re, re],
            })
            .collect()
    }
}

fn root_spec() -> impl Strategy<Value = RootSpec> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(RootSpec::Real),
        (-3.0..3.0f64, 0.2..3.0f64).prop_map(|(re, im)| RootSpec::Pair(re, im)),
    ]
}

/// Root sets whose real parts stay at least 0.05 from the imaginary axis.
fn off_axis_roots() -> impl Strategy<Value = Vec<RootSpec>> {
    prop::collection::vec(root_spec(), 1..4).prop_filter("roots near the axis", |specs| {
        real_parts(specs).iter().all(|r| r.abs() > 0.05)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn routh_counts_known_right_half_plane_roots(specs in off_axis_roots(), scale in prop_oneof![0.5..4.0f64, -4.0..-0.5f64]) {
        let coeffs: Vec<f64> = expand(&specs).into_iter().map(|c| c * scale).collect();
        let verdict = routh_hurwitz(&Polynomial::new(coeffs)).unwrap();
        let rhp = real_parts(&specs).iter().filter(|r| **r > 0.0).count();
        if rhp == 0 {
            prop_assert_eq!(verdict.kind, StabilityKind::Hurwitz);
        } else {
            prop_assert_eq!(verdict.kind, StabilityKind::Unstable);
            if !verdict.degenerate {
                prop_assert_eq!(verdict.right_half_plane_count, rhp);
            }
        }
    }

    #[test]
    fn root_finder_recovers_constructed_roots(specs in off_axis_roots()) {
        let p = Polynomial::new(expand(&specs));
        let mut found: Vec<f64> = roots(&p).unwrap().iter().map(|z| z.re).collect();
        let mut expected = real_parts(&specs);
        found.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        prop_assert_eq!(found.len(), expected.len());
        for (a, b) in found.iter().zip(&expected) {
            prop_assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", found, expected);
        }
    }

    #[test]
    fn routh_matches_root_oracle_on_random_coefficients(coeffs in prop::collection::vec(-10.0..10.0f64, 2..8)) {
        let p = Polynomial::new(coeffs);
        prop_assume!(p.degree() >= 1);
        let max_re = roots(&p).unwrap().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(max_re.abs() > 1e-6);
        let verdict = routh_hurwitz(&p).unwrap();
        let expected = if max_re < 0.0 { StabilityKind::Hurwitz } else { StabilityKind::Unstable };
        prop_assert_eq!(verdict.kind, expected);
    }

    #[test]
    fn sign_flip_does_not_change_the_verdict(coeffs in prop::collection::vec(-10.0..10.0f64, 2..8)) {
        let p = Polynomial::new(coeffs.clone());
        prop_assume!(p.degree() >= 1);
        let q = Polynomial::new(coeffs.iter().map(|c| -c).collect::<Vec<_>>());
        prop_assert_eq!(routh_hurwitz(&p).unwrap(), routh_hurwitz(&q).unwrap());
    }

    #[test]
    fn quartic_is_never_hurwitz_when_gain_and_alpha_share_sign(
        alpha in prop_oneof![-5.0..-1e-3f64, 1e-3..5.0f64],
        kp_mag in 0.0..5.0f64,
        t in 1e-3..1.9f64,
    ) {
        let kp = kp_mag * alpha.signum();
        let q = ip_charpoly(&IpLoopParams::new(alpha, kp, t).unwrap()).unwrap();
        prop_assert!(!routh_hurwitz(&q).unwrap().is_hurwitz());
    }

    #[test]
    fn quartic_is_never_hurwitz_for_long_filters(
        alpha in prop_oneof![-5.0..-1e-3f64, 1e-3..5.0f64],
        kp in -5.0..5.0f64,
        t in 2.0..20.0f64,
    ) {
        let q = ip_charpoly(&IpLoopParams::new(alpha, kp, t).unwrap()).unwrap();
        prop_assert!(!routh_hurwitz(&q).unwrap().is_hurwitz());
    }

    #[test]
    fn pid_placement_round_trip(
        a1 in -3.0..3.0f64, a0 in -3.0..3.0f64, b in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
        r in 0.1..3.0f64,
    ) {
        let plant = LtiPlant::new(a1, a0, b, 1.0).unwrap();
        let target = expand_pole(r, 3);
        let (kp, ki, kd) = pid_gains_from_target(&plant, &target).unwrap();
        let rebuilt = pid_closed_loop(&plant, kp, ki, kd);
        for k in 0..=3 {
            let (got, want) = (rebuilt.coeff(k), target.coeff(k));
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "s^{}: {} vs {}", k, got, want);
        }
    }

    #[test]
    fn expanded_pole_vanishes_with_its_derivatives(r in -3.0..3.0f64, m in 1u32..7) {
        let mut p = expand_pole(r, m);
        prop_assert_eq!(p.degree(), m as usize);
        for order in 0..m {
            let scale: f64 = p.coeffs().iter().enumerate().map(|(k, c)| c.abs() * r.abs().powi(k as i32)).sum();
            let v = p.eval(-r);
            prop_assert!(v.abs() <= 1e-12 * scale.max(1.0), "order {}: {} (scale {})", order, v, scale);
            p = p.derivative();
        }
    }

    #[test]
    fn derivator_and_lag_are_linear(
        a in -3.0..3.0f64, b in -3.0..3.0f64,
        y1 in prop::collection::vec(-1.0..1.0f64, 50),
        y2 in prop::collection::vec(-1.0..1.0f64, 50),
        order in 1usize..3,
    ) {
        let run_d = |ys: &[f64]| {
            let mut f = DerivatorFilter::new(order, 0.1, 1e-3);
            ys.iter().map(|&y| f.step(y)).collect::<Vec<_>>()
        };
        let run_l = |ys: &[f64]| {
            let mut f = LagFilter::new(order, 0.1, 1e-3);
            ys.iter().map(|&y| f.step(y)).collect::<Vec<_>>()
        };
        let mixed: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| a * p + b * q).collect();
        for run in [&run_d as &dyn Fn(&[f64]) -> Vec<f64>, &run_l] {
            let (r1, r2, rm) = (run(&y1), run(&y2), run(&mixed));
            for k in 0..rm.len() {
                let want = a * r1[k] + b * r2[k];
                let tol = 1e-12 * (1.0 + (a * r1[k]).abs() + (b * r2[k]).abs());
                prop_assert!((rm[k] - want).abs() <= tol, "k={}: {} vs {}", k, rm[k], want);
            }
        }
    }

    #[test]
    fn control_laws_are_linear(
        g in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        alpha in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
        x in prop::array::uniform6(-5.0..5.0f64),
        z in prop::array::uniform6(-5.0..5.0f64),
        (a, b) in (-2.0..2.0f64, -2.0..2.0f64),
    ) {
        let (kp, ki, kd) = g;
        let inputs = |v: [f64; 6]| LawInputs { f_hat: v[0], ystar_dot: v[1], ystar_ddot: v[2], e: v[3], e_int: v[4], e_dot: v[5] };
        let mix: [f64; 6] = std::array::from_fn(|i| a * x[i] + b * z[i]);
        for spec in [
            ControllerSpec::Ip { alpha, kp },
            ControllerSpec::Ipi { alpha, kp, ki },
            ControllerSpec::Ipd { alpha, kp, kd },
            ControllerSpec::Ipid { alpha, kp, ki, kd },
            ControllerSpec::ClassicPid { kp, ki, kd },
        ] {
            let (u1, u2, um) = (spec.command(&inputs(x)), spec.command(&inputs(z)), spec.command(&inputs(mix)));
            let tol = 1e-12 * (1.0 + (a * u1).abs() + (b * u2).abs() + um.abs());
            prop_assert!((um - (a * u1 + b * u2)).abs() <= tol, "{:?}", spec);
        }
    }

    #[test]
    fn gain_masking_is_exact(
        g in (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        alpha in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
        x in prop::array::uniform6(-5.0..5.0f64),
    ) {
        let (kp, ki, kd) = g;
        let i = LawInputs { f_hat: x[0], ystar_dot: x[1], ystar_ddot: x[2], e: x[3], e_int: x[4], e_dot: x[5] };
        prop_assert_eq!(
            ControllerSpec::Ipi { alpha, kp, ki }.command(&i),
            ControllerSpec::Ipid { alpha, kp, ki, kd: 0.0 }.command(&i)
        );
        prop_assert_eq!(
            ControllerSpec::Ipd { alpha, kp, kd }.command(&i),
            ControllerSpec::Ipid { alpha, kp, ki: 0.0, kd }.command(&i)
        );
    }

    #[test]
    fn stable_cells_need_opposite_signs_and_short_filters(
        kp0 in -5.0..0.0f64, a0 in -5.0..0.0f64, t in 1e-3..3.0f64,
    ) {
        let spec = GridSpec {
            kp_axis: Axis::new(kp0, kp0 + 5.0, 9),
            alpha_axis: Axis::new(a0, a0 + 5.0, 9),
            t_values: vec![t],
            aggregation: Aggregation::FixedT(0),
        };
        let grid = sweep(&spec).unwrap();
        for (i, j) in grid.indices() {
            if grid.verdict(i, j) == CellVerdict::Stable {
                prop_assert!(grid.kp(i) * grid.alpha(j) < 0.0);
                prop_assert!(t < 2.0);
            }
        }
    }

    #[test]
    fn for_all_t_is_contained_in_every_slice(
        kp0 in -5.0..0.0f64, a0 in -5.0..0.0f64,
        mut ts in prop::collection::vec(1e-3..1.9f64, 1..5),
    ) {
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let axes = |aggregation| GridSpec {
            kp_axis: Axis::new(kp0, kp0 + 5.0, 7),
            alpha_axis: Axis::new(a0, a0 + 5.0, 7),
            t_values: ts.clone(),
            aggregation,
        };
        let all = sweep(&axes(Aggregation::ForAllT)).unwrap();
        for k in 0..ts.len() {
            let slice = sweep(&axes(Aggregation::FixedT(k))).unwrap();
            for (i, j) in all.indices() {
                if all.verdict(i, j) == CellVerdict::Stable {
                    prop_assert_eq!(slice.verdict(i, j), CellVerdict::Stable);
                }
            }
        }
    }
}

fn short_config(seed: u64, sigma: f64, nu: usize) -> SimConfig {
    SimConfig {
        plant: LtiPlant::unstable_example(),
        controller: ControllerSpec::ClassicPid { kp: 1.3068, ki: 0.287496, kd: 2.98 },
        estimator: EstimatorConfig::delayed_input(nu, 0.5, 0.1),
        reference: ReferenceTrajectory::default(),
        noise: NoiseModel::new(sigma, seed),
        h: 1e-3,
        duration: 8.0,
        y0: -0.05,
        ydot0: 0.0,
        meta: TraceMeta { scenario: "props".into(), seed, controller: "pid".into() },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn same_seed_same_trace(seed in any::<u64>()) {
        let cfg = short_config(seed, 0.01, 2);
        let a = run_closed_loop(&cfg).unwrap();
        let b = run_closed_loop(&cfg).unwrap();
        prop_assert_eq!(a.to_csv_string(), b.to_csv_string());
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let plant = LtiPlant::unstable_example();
    let (y0, v0, u) = (0.3, -0.2, 0.7);
    let exact = |t: f64| y0 + (v0 + u) * (t.exp() - 1.0) - u * t;
    let steps: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&h| {
            let n = (1.0 / h).round() as usize;
            let mut s = PlantState { y: y0, ydot: v0, t: 0.0 };
            for _ in 0..n {
                s = plant_step(&plant, s, u, h).unwrap();
            }
            (s.y - exact(1.0)).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((14.0..18.0).contains(&ratio), "ratio {ratio}, errors {errors:?}");
    }
    let slope = (errors[0] / errors[2]).ln() / (steps[0] / steps[2]).ln();
    assert!((slope - 4.0).abs() < 0.2, "slope {slope}");
}

#[test]
fn logged_f_true_matches_plant_identities() {
    for nu in [1, 2] {
        let trace = run_closed_loop(&short_config(3, 0.0, nu)).unwrap();
        let plant = LtiPlant::unstable_example();
        let alpha = 0.5;
        for k in 0..trace.len() {
            let ydd = plant.acceleration(trace.y_true[k], trace.ydot_true[k], trace.u[k]);
            let yd = trace.ydot_true[k];
            let expected = if nu == 1 { -alpha * ydd + (1.0 + alpha) * yd } else { (1.0 - alpha) * ydd + alpha * yd };
            assert!((trace.f_true[k] - expected).abs() <= 1e-10 * (1.0 + expected.abs()), "nu={nu} k={k}");
        }
    }
}

#[test]
fn reference_column_matches_its_rate() {
    let trace = run_closed_loop(&short_config(1, 0.0, 2)).unwrap();
    let h = trace.h;
    for k in 1..trace.len() - 1 {
        let fd = (trace.y_ref[k + 1] - trace.y_ref[k - 1]) / (2.0 * h);
        assert!((fd - trace.y_ref_rate[k]).abs() <= h * h, "k={k}: {fd} vs {}", trace.y_ref_rate[k]);
    }
}

#[test]
fn noise_statistics() {
    let sigma = 0.01;
    let n = 200_000;
    let mut src = mfc_core::sim::NoiseSource::new(&NoiseModel::new(sigma, 7));
    let xs: Vec<f64> = (0..n).map(|_| src.sample()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!(mean.abs() <= 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
    assert_relative_eq!(sd, sigma, max_relative = 0.02);
}

#[test]
fn grid_export_is_deterministic() {
    let spec = GridSpec {
        kp_axis: Axis::new(-5.0, 5.0, 41),
        alpha_axis: Axis::new(-5.0, 5.0, 41),
        t_values: vec![0.01, 0.1, 1.0],
        aggregation: Aggregation::ForAllT,
    };
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    export_grid(&sweep(&spec).unwrap(), &a).unwrap();
    export_grid(&sweep(&spec).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mut buf = Vec::new();
    write_grid_csv(&sweep(&spec).unwrap(), &mut buf).unwrap();
    assert_eq!(buf, std::fs::read(&a).unwrap());
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 41 * 41 + 1);
}
