use matchpert::perturbation::{diagnose, History};
use matchpert::zero_order::domain_bases;
use matchpert::{find_eigenvalues, match_coefficients, PerturbationSpec, PotentialSpec, Tolerances, ZeroOrderOptions};
use proptest::prelude::*;

fn opts() -> ZeroOrderOptions<f64> {
    ZeroOrderOptions::default()
}

fn tol() -> Tolerances<f64> {
    Tolerances::default()
}

fn arb_spec(max_interior: usize) -> impl Strategy<Value = PotentialSpec<f64>> {
    (0..=max_interior)
        .prop_flat_map(|n| {
            (
                -1.0f64..1.0,
                prop::collection::vec(0.4f64..1.5, n + 1),
                prop::collection::vec(0.0f64..15.0, n + 1),
            )
        })
        .prop_map(|(start, widths, heights)| {
            let mut breakpoints = vec![start];
            for w in widths {
                breakpoints.push(breakpoints.last().unwrap() + w);
            }
            PotentialSpec::new(breakpoints, heights).unwrap()
        })
}

fn arb_poly() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=3)
}

fn lowest_roots(spec: &PotentialSpec<f64>, count: usize) -> Vec<f64> {
    let length = spec.right_wall() - spec.left_wall();
    let top = spec.heights().iter().copied().fold(f64::MIN, f64::max);
    let hi = top + ((count + 1) as f64 * std::f64::consts::PI / length).powi(2);
    find_eigenvalues(spec, spec.min_height(), hi, count, &opts()).unwrap().roots
}

/// Distance of `energy` from the nearest interval height. Corrections lose
/// digits roughly like |β|^(2 − 4k) as this shrinks, so properties on them
/// keep the level clear of every height.
fn clearance(spec: &PotentialSpec<f64>, energy: f64) -> f64 {
    spec.heights().iter().map(|h| (energy - h).abs()).fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn wronskian_is_one_across_each_domain(spec in arb_spec(3), lift in 0.3f64..30.0) {
        let energy = spec.min_height() + lift;
        let t = tol();
        for basis in domain_bases(&spec, energy, &opts()).unwrap() {
            let d = basis.domain;
            for i in 0..20 {
                let x = d.left_end + (d.right_end - d.left_end) * i as f64 / 19.0;
                let w = basis.wronskian(x, &t).unwrap();
                prop_assert!((w - 1.0).abs() < 1e-10, "W({x}) = {w}");
            }
            prop_assert!((basis.c.value(d.anchor, &t).unwrap() - 1.0).abs() < 1e-14);
            prop_assert!(basis.c.slope(d.anchor, &t).unwrap().abs() < 1e-14);
            prop_assert!(basis.s.value(d.anchor, &t).unwrap().abs() < 1e-14);
            prop_assert!((basis.s.slope(d.anchor, &t).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn roots_follow_a_gauge_shift(spec in arb_spec(3), shift in -20.0f64..20.0) {
        let roots = lowest_roots(&spec, 3);
        let moved = lowest_roots(&spec.gauge_shifted(shift), 3);
        prop_assert_eq!(roots.len(), moved.len());
        for (a, b) in roots.iter().zip(&moved) {
            prop_assert!((a + shift - b).abs() < 1e-10 * b.abs().max(1.0), "{a} + {shift} vs {b}");
        }
    }

    #[test]
    fn fictitious_breakpoint_keeps_the_spectrum(spec in arb_spec(2), fraction in 0.1f64..0.9) {
        let (a, b) = (spec.left_wall(), spec.right_wall());
        let refined = spec.with_fictitious_breakpoint(a + fraction * (b - a));
        prop_assume!(refined.is_ok());
        let roots = lowest_roots(&spec, 3);
        let again = lowest_roots(&refined.unwrap(), 3);
        prop_assert_eq!(roots.len(), again.len());
        for (x, y) in roots.iter().zip(&again) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn matched_states_are_smooth(spec in arb_spec(3)) {
        let t = tol();
        for e in lowest_roots(&spec, 2) {
            let state = match_coefficients(&spec, e, &opts()).unwrap();
            prop_assert!(state.overlap_mismatch(&t).unwrap() < 1e-9);
        }
    }

    #[test]
    fn first_order_is_linear_in_the_perturbation(spec in arb_spec(2), poly in arb_poly(), alpha in -3.0f64..3.0) {
        let e0 = lowest_roots(&spec, 1)[0];
        let state = match_coefficients(&spec, e0, &opts()).unwrap();
        let pert = PerturbationSpec::global(poly.clone(), &spec).unwrap();
        let scaled = PerturbationSpec::global(poly.iter().map(|c| alpha * c).collect(), &spec).unwrap();
        let mut h1 = History::new(state.clone(), &tol()).unwrap();
        let mut h2 = History::new(state, &tol()).unwrap();
        let e1 = h1.advance(&pert, &tol()).unwrap().energy;
        let e2 = h2.advance(&scaled, &tol()).unwrap().energy;
        let scale = (alpha * e1).abs().max(poly.iter().map(|c| c.abs()).sum::<f64>() * alpha.abs()).max(1e-300);
        prop_assert!((e2 - alpha * e1).abs() <= 1e-10 * scale, "{e2} vs {}", alpha * e1);
    }

    #[test]
    fn corrections_solve_the_order_equations(spec in arb_spec(2), poly in arb_poly()) {
        let e0 = lowest_roots(&spec, 1)[0];
        prop_assume!(clearance(&spec, e0) > 0.1);
        let state = match_coefficients(&spec, e0, &opts()).unwrap();
        let pert = PerturbationSpec::global(poly, &spec).unwrap();
        let mut history = History::new(state, &tol()).unwrap();
        for k in 1..=2 {
            history.advance(&pert, &tol()).unwrap();
            let d = diagnose(&history, &pert, k, &tol()).unwrap();
            prop_assert!(d.equation_residual < 1e-9, "{d:?}");
            prop_assert!(d.wall_residual < 1e-9, "{d:?}");
            prop_assert!(d.continuity < 1e-9, "{d:?}");
            prop_assert!(d.overlap < 1e-8, "{d:?}");
        }
    }

    #[test]
    fn omega_solves_the_energy_equation(spec in arb_spec(3)) {
        let t = tol();
        let e0 = lowest_roots(&spec, 1)[0];
        let state = match_coefficients(&spec, e0, &opts()).unwrap();
        let history = History::new(state, &t).unwrap();
        for (omega, psi) in history.omega.omegas.iter().zip(&history.psi0) {
            let d = omega.domain;
            let pieces = [
                (&omega.left, &psi.left, d.left_interval, d.left_end, d.anchor),
                (&omega.right, &psi.right, d.right_interval, d.anchor, d.right_end),
            ];
            for (w, p, interval, a, b) in pieces {
                prop_assert!(w.value_at_anchor().norm() < 1e-14 && w.slope_at_anchor().norm() < 1e-14);
                if b - a <= 0.0 {
                    continue;
                }
                let hw = w.apply_hamiltonian(spec.heights()[interval] - e0, &t).unwrap();
                let scale = (0..=10)
                    .map(|i| p.eval(a + (b - a) * i as f64 / 10.0, &t).unwrap().abs())
                    .fold(1e-300, f64::max);
                for i in 0..=10 {
                    let x = a + (b - a) * i as f64 / 10.0;
                    let r = hw.eval(x, &t).unwrap() - p.eval(x, &t).unwrap();
                    prop_assert!(r.abs() < 1e-10 * scale, "residual {r} at {x}");
                }
            }
        }
    }
}
