use diffeo_lab::diffeo::{compose, invert_at, Diffeo, SmoothFn};
use diffeo_lab::family::{eval_c, member, plateau_radius, FamilyParam};
use diffeo_lab::mollifier::{mollifier_integral, phi, phi_scaled};
use diffeo_lab::seminorm::{seminorm, SeminormIndex};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn param() -> impl Strategy<Value = f64> {
    -0.2499f64..0.2499
}

fn point() -> impl Strategy<Value = f64> {
    1e-3f64..0.999
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn inversion_round_trip(t in param(), y in point()) {
        let c = member(t).unwrap();
        let x = invert_at(&c, y, 1e-15).unwrap();
        prop_assert!((c.eval(x).unwrap() - y).abs() <= 1e-12);
    }

    #[test]
    fn scaling_consistency(alpha in 0.01f64..2.0, s in -1.5f64..1.5) {
        let u = s * alpha;
        let lhs = phi_scaled(alpha, u).unwrap();
        prop_assert!((lhs - phi(u / alpha) / alpha).abs() <= 1e-12 * (1.0 + lhs));
        let v = u.clamp(-alpha, alpha);
        let lower = mollifier_integral(alpha, -alpha, v, 1e-12).unwrap();
        let upper = mollifier_integral(alpha, v, alpha, 1e-12).unwrap();
        prop_assert!((lower + upper - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn plateau_is_exact(x in point(), s in -0.999f64..0.999) {
        let t = s * plateau_radius(x).unwrap();
        prop_assert_eq!(eval_c(FamilyParam::new(t).unwrap(), x).unwrap(), x + t);
    }

    #[test]
    fn associativity_and_identity(a in param(), b in param(), c in param(), x in point()) {
        let (f, g, h) = (member(a).unwrap(), member(b).unwrap(), member(c).unwrap());
        let left = compose(&compose(&f, &g), &h).eval(x).unwrap();
        let right = compose(&f, &compose(&g, &h)).eval(x).unwrap();
        prop_assert!((left - right).abs() <= 1e-12);
        let id = Diffeo::identity();
        prop_assert_eq!(compose(&f, &id).eval(x).unwrap(), f.eval(x).unwrap());
        prop_assert_eq!(compose(&id, &f).eval(x).unwrap(), f.eval(x).unwrap());
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn seminorm_triangle_and_homogeneity(a in param(), b in param(), lambda in -3.0f64..3.0, n in 1u32..5, k in 0u32..3) {
        let idx = SeminormIndex::new(n, k).unwrap();
        let (f, g) = (member(a).unwrap(), member(b).unwrap());
        let norm = |s: &SmoothFn| seminorm(s, idx, 401).unwrap().value;
        let sum = {
            let neg_g = g.as_fn().scale(-1.0);
            f.as_fn().sub(&neg_g)
        };
        let slack = if k == 0 { 1e-12 } else { 1e-6 };
        prop_assert!(norm(&sum) <= norm(f.as_fn()) + norm(g.as_fn()) + slack);
        let scaled = norm(&f.as_fn().scale(lambda));
        prop_assert!((scaled - lambda.abs() * norm(f.as_fn())).abs() <= slack * (1.0 + scaled));
    }
}
