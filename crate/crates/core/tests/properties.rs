use std::f64::consts::PI;
use std::sync::OnceLock;

use crane_erg::config::{Config, Setup};
use crane_erg::constraints::tangent_embedding;
use crane_erg::erg::{dsm, erg_step, lyap_value, nav_attraction, repulsion_weight, GovernorState};
use crane_erg::model::equilibrium_vector;
use crane_erg::sim::closed_loop_step;
use crane_erg::synthesis::ellipsoid_support;
use crane_erg::StateVector;
use nalgebra::Vector2;
use proptest::prelude::*;

fn setup() -> &'static (Config, Setup) {
    static SETUP: OnceLock<(Config, Setup)> = OnceLock::new();
    SETUP.get_or_init(|| {
        let c = Config::bundled();
        let s = c.build().unwrap();
        (c, s)
    })
}

fn boom() -> impl Strategy<Value = Vector2<f64>> {
    (PI / 18.0..8.0 * PI / 9.0, -PI..PI).prop_map(|(a, b)| Vector2::new(a, b))
}

fn perturbation(scale: f64) -> impl Strategy<Value = StateVector> {
    prop::array::uniform8(-scale..scale).prop_map(StateVector::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dsm_is_never_negative(v in boom(), e in perturbation(0.5)) {
        let (_, s) = setup();
        let cl = &s.closed_loop;
        prop_assert!(dsm(&(equilibrium_vector(&v) + e), &v, &cl.constraints, &cl.governor) >= 0.0);
    }

    #[test]
    fn lyap_value_is_non_negative(v in boom(), e in perturbation(1.0)) {
        let (_, s) = setup();
        for cert in &s.closed_loop.constraints.linear_certificates {
            prop_assert!(lyap_value(&(equilibrium_vector(&v) + e), &v, &cert.p) >= 0.0);
        }
    }

    #[test]
    fn attraction_never_exceeds_unit_norm(r in boom(), v in boom()) {
        let (_, s) = setup();
        prop_assert!(nav_attraction(&r, &v, &s.closed_loop.governor).norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn repulsion_weight_is_bounded(dist in 0.0..1.0f64) {
        let (_, s) = setup();
        let g = &s.closed_loop.governor;
        let w = repulsion_weight(dist, g);
        prop_assert!(w >= 0.0);
        prop_assert!(w <= g.zeta / (g.zeta - g.delta_rep) + 1e-12);
    }

    #[test]
    fn level_sets_stay_inside_their_constraints(v in boom()) {
        let (_, s) = setup();
        let set = &s.closed_loop.constraints;
        for (c, cert) in set.linear.iter().zip(&set.linear_certificates) {
            if c.steady_margin(&v) >= 0.0 {
                let gamma = cert.threshold(&v, &c.beta, c.d);
                prop_assert!(ellipsoid_support(&v, &c.beta, gamma, cert.beta_pinv_beta()) <= c.d + 1e-9);
            }
        }
        for o in &set.obstacles {
            for (h, cert) in o.halfplanes.iter().zip(&o.certificates) {
                let (beta, d) = (h.beta(), h.d());
                if d - beta.dot(&equilibrium_vector(&v)) >= 0.0 {
                    let gamma = cert.threshold(&v, &beta, d);
                    prop_assert!(ellipsoid_support(&v, &beta, gamma, cert.beta_pinv_beta()) <= d + 1e-9);
                }
            }
        }
    }

    #[test]
    fn governor_keeps_reference_admissible(
        k in 0usize..400,
        r in boom(),
        e in perturbation(0.01),
    ) {
        let (config, s) = setup();
        let cl = &s.closed_loop;
        let set = &cl.constraints;
        // start from an admissible grid reference
        let v = Vector2::new(PI / 18.0 + 0.1 + 0.006 * k as f64, -PI + 0.0157 * k as f64);
        prop_assume!(set.check_steady_admissible(&v).is_ok());
        let x = equilibrium_vector(&v) + e;
        let dt = config.integration.dt_int;
        let n = (cl.governor.ts / dt).round() as usize;
        let propagate = |x: &StateVector, v: &Vector2<f64>| {
            let mut x = *x;
            for _ in 0..n {
                x = closed_loop_step(&x, v, &cl.gain, dt, &cl.params)?;
            }
            Ok(x)
        };
        let out = erg_step(&x, &GovernorState { v, r }, propagate, set, &cl.governor).unwrap();
        prop_assert!(set.min_steady_margin(&out.state.v) >= 0.0);
    }

    #[test]
    fn embedding_excludes_samples_and_covers_far_points(
        pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..30),
        n_t in 3usize..16,
        angle in 0.0..(2.0 * PI),
    ) {
        let pts: Vec<Vector2<f64>> = pts.into_iter().map(|(a, b)| Vector2::new(a, b)).collect();
        let oc = tangent_embedding(&pts, n_t, "p").unwrap();
        for p in &pts {
            prop_assert!(oc.steady_margin(p) <= 0.0);
        }
        // any point farther than diam·(1 + tan(π/n_t)) from the cloud's centre
        // is at least diam·tan(π/n_t) from the hull
        let centre = pts.iter().sum::<Vector2<f64>>() / pts.len() as f64;
        let diam = 2f64.sqrt() * 2.0;
        let far = centre + Vector2::new(angle.cos(), angle.sin()) * (diam * (2.0 + (PI / n_t as f64).tan()));
        prop_assert!(oc.is_safe(&far));
    }

    #[test]
    fn config_round_trip(
        k in 1.0..100.0f64,
        zeta in 1.0..20.0f64,
        delta in 0.01..0.9f64,
        duration in 0.0..100.0f64,
        grid_n in 8usize..400,
        tol in prop::option::of(1e-3..0.1f64),
    ) {
        let mut c = Config::bundled();
        c.erg.k = k;
        c.erg.zeta = zeta;
        c.erg.delta = delta;
        c.scenario.duration = duration;
        c.constraints.grid_n = grid_n;
        c.scenario.references[0].tol = tol;
        let again = Config::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(again, c);
    }
}
