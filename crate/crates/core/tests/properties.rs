use hypocert::certifier::{
    build_t, build_tprime, default_coefficients, improved_coefficients, norm_equivalence, rate_lambda,
    split_conditions, verify_coercivity,
};
use hypocert::meanfield::ModelConfig;
use hypocert::rng::CounterRng;
use hypocert::simulator::{fit_decay_series, Observable};
use hypocert::{BumpSign, PotentialSpec};
use proptest::prelude::*;

fn family(dim: usize) -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(move |k| PotentialSpec::quadratic(k, dim).unwrap()),
        (0.05f64..1.0, 0.0f64..1.0).prop_map(move |(q, w)| PotentialSpec::double_well(q, w, dim).unwrap()),
        (0.01f64..1.0, 0.3f64..2.0, any::<bool>()).prop_map(move |(a, s, att)| {
            let sign = if att { BumpSign::Attractive } else { BumpSign::Repulsive };
            PotentialSpec::bump(a, s, sign, dim).unwrap()
        }),
        (0.01f64..1.0, 0.2f64..3.0).prop_map(move |(a, f)| PotentialSpec::cosine(a, f, dim).unwrap()),
    ]
}

fn confinement(dim: usize) -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(move |k| PotentialSpec::quadratic(k, dim).unwrap()),
        (0.05f64..1.0, 0.0f64..1.0).prop_map(move |(q, w)| PotentialSpec::double_well(q, w, dim).unwrap()),
    ]
}

fn interaction(dim: usize) -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        Just(PotentialSpec::zero(dim)),
        (0.01f64..1.0, 0.3f64..2.0, any::<bool>()).prop_map(move |(a, s, att)| {
            let sign = if att { BumpSign::Attractive } else { BumpSign::Repulsive };
            PotentialSpec::bump(a, s, sign, dim).unwrap()
        }),
        (0.01f64..1.0, 0.2f64..3.0).prop_map(move |(a, f)| PotentialSpec::cosine(a, f, dim).unwrap()),
    ]
}

fn model() -> impl Strategy<Value = (ModelConfig, Vec<f64>)> {
    (1usize..=3, 2usize..=7)
        .prop_flat_map(|(d, n)| (confinement(d), interaction(d), Just(n), prop::collection::vec(-3.0f64..3.0, n * d)))
        .prop_map(|(u, w, n, x)| (ModelConfig::new(n, u, w).unwrap(), x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn potentials_are_even(spec in (1usize..=3).prop_flat_map(family), x in prop::collection::vec(-4.0f64..4.0, 3)) {
        let x = &x[..spec.dim];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(spec.value(x), spec.value(&neg));
    }

    #[test]
    fn hessian_never_exceeds_declared_bound(spec in (1usize..=3).prop_flat_map(family), x in prop::collection::vec(-6.0f64..6.0, 3)) {
        let bound = spec.hessian_bound();
        let h = spec.eval(&x[..spec.dim]).unwrap().hessian;
        let top = h.symmetric_eigenvalues().amax();
        prop_assert!(top <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn interaction_forces_sum_to_zero((m, x) in model()) {
        let d = m.dim();
        let mut f = m.force(&x).unwrap();
        let mut g = vec![0.0; d];
        for (xi, fi) in x.chunks(d).zip(f.chunks_mut(d)) {
            m.confinement.gradient_into(xi, &mut g);
            fi.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        for k in 0..d {
            let s: f64 = f.iter().skip(k).step_by(d).sum();
            let scale: f64 = f.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            prop_assert!(s.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn interaction_hessian_within_k((m, x) in model()) {
        let op = m.hw_opnorm(&x).unwrap();
        prop_assert!(op.value <= m.interaction.hessian_bound() + 1e-8);
    }

    #[test]
    fn observables_are_exchangeable((m, x) in model(), shift in 0usize..7) {
        let (n, d) = (m.particles, m.dim());
        let v: Vec<f64> = x.iter().map(|a| 0.5 * a - 0.1).collect();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let px: Vec<f64> = perm.iter().flat_map(|&i| x[i * d..(i + 1) * d].to_vec()).collect();
        let pv: Vec<f64> = perm.iter().flat_map(|&i| v[i * d..(i + 1) * d].to_vec()).collect();
        for o in Observable::ALL {
            let (a, b) = (o.evaluate(&m, &x, &v), o.evaluate(&m, &px, &pv));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{o}: {a} vs {b}");
        }
        let e = m.total_potential(&x).unwrap();
        let ep = m.total_potential(&px).unwrap();
        prop_assert!((e - ep).abs() <= 1e-12 * (1.0 + e.abs()));
    }

    #[test]
    fn default_coefficients_are_coercive(m in 1.0f64..1e4) {
        let k = default_coefficients(m);
        let t = build_t(k.a, k.b, k.c, m);
        prop_assert!(verify_coercivity(&t, k.lambda0) >= -1e-12);
        prop_assert!(k.b * k.b < k.a * k.c);
    }

    #[test]
    fn rate_decreases_in_m_and_increases_in_kappa(m in 1.0f64..1e3, f in 1.0f64..10.0, kappa in 1e-3f64..10.0, g in 1.0f64..10.0) {
        let lam = |m: f64, kappa: f64| {
            let k = default_coefficients(m);
            rate_lambda(k.lambda0, k.a, k.c, kappa)
        };
        prop_assert!(lam(m * f, kappa) <= lam(m, kappa));
        prop_assert!(lam(m, kappa * g) >= lam(m, kappa));
    }

    #[test]
    fn norm_constants_bracket_one(m in 1.0f64..1e3) {
        let k = default_coefficients(m);
        let n = norm_equivalence(k.a, k.b, k.c).unwrap();
        prop_assert!(n.c1 <= 1.0 && n.c2 >= 1.0 && n.c0 >= 1.0);
    }

    #[test]
    fn improved_coefficients_satisfy_their_conditions(m1 in 0.1f64..10.0, m2 in 1.0f64..1e6) {
        let ic = improved_coefficients(m1, m2);
        let k = ic.coefficients;
        if ic.conditions_hold {
            prop_assert!(split_conditions(&k, m1, m2));
            let t = build_tprime(k.a, k.b, k.c, m1, m2);
            prop_assert!(verify_coercivity(&t, k.lambda0) >= -1e-12);
        }
        prop_assert!(k.a > 0.0 && k.b > 0.0 && k.c > 0.0 && k.lambda0 > 0.0);
    }

    #[test]
    fn counter_streams_are_pure(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let r = CounterRng::new(seed);
        prop_assert_eq!(r.uniform(&[a, b]).to_bits(), r.uniform(&[a, b]).to_bits());
        let u = r.uniform(&[a, b]);
        prop_assert!(u > 0.0 && u < 1.0);
    }

    #[test]
    fn synthetic_rates_are_recovered(rate in 0.2f64..2.0, amp in 0.5f64..5.0) {
        let t: Vec<f64> = (0..600).map(|i| i as f64 * 0.02).collect();
        let y: Vec<f64> = t.iter().map(|s| amp * (-rate * s).exp()).collect();
        let noise = vec![1e-6 * amp; t.len()];
        let f = fit_decay_series(&t, &y, &noise, 0.0, "x").unwrap();
        prop_assert!((f.lambda_hat - rate).abs() < 0.02 * rate);
        prop_assert!(f.window[0] >= t[0] && f.window[1] <= t[t.len() - 1]);
    }
}
