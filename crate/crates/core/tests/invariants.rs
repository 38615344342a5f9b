use proptest::prelude::*;

use bessel_credit::bessel_cev::{default_probability, CevParams};
use bessel_credit::credit_swaps::{cds_fair_coupon, eds_fair_coupon, SwapSchedule};
use bessel_credit::specfun::gamma::gamma_tail;
use bessel_credit::specfun::ncchi2::{ncchi2_q, NoncentralChi2Args};
use bessel_credit::sv_pricing::{tc_default_probability, TcModelSpec};
use bessel_credit::time_change::{integrated_cir_laplace, IntegratedCirSpec, TimeChangeSpec};
use bessel_credit::vanilla::cev_call_put;

fn cev() -> impl Strategy<Value = CevParams> {
    (0.5..2.0f64, 0.0..0.1f64, 0.2..0.8f64, 0.1..0.9f64).prop_map(|(s, r, sig, a)| CevParams::new(s, r, sig, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_tail_decreases_in_its_argument(a in 0.05..20.0f64, x in 0.0..50.0f64, dx in 1e-3..5.0f64) {
        let (p, q) = (gamma_tail(a, x).unwrap(), gamma_tail(a, x + dx).unwrap());
        prop_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        prop_assert!(q <= p + 1e-15);
    }

    #[test]
    fn ncchi2_tail_is_monotone(x in 0.0..60.0f64, dx in 1e-3..5.0f64, k in 0.5..20.0f64, l in 0.0..30.0f64, dl in 1e-3..5.0f64) {
        let q = |x: f64, l: f64| ncchi2_q(NoncentralChi2Args::new(x, k, l)).unwrap();
        prop_assert!(q(x + dx, l) <= q(x, l) + 1e-14);
        prop_assert!(q(x, l + dl) >= q(x, l) - 1e-14);
    }

    #[test]
    fn cev_parity_holds(p in cev(), k in 0.3..2.5f64, t in 0.1..5.0f64) {
        let cp = cev_call_put(&p, k, t).unwrap();
        prop_assert!(cp.call >= 0.0 && cp.put >= 0.0);
        prop_assert!(cp.parity_residual(p.spot, k * (-p.rate * t).exp()).abs() < 1e-10);
        prop_assert!(cp.call <= p.spot + 1e-12);
    }

    #[test]
    fn default_probability_is_a_distribution_function(p in cev(), t in 0.05..10.0f64, dt in 1e-3..5.0f64) {
        let (a, b) = (default_probability(&p, t).unwrap(), default_probability(&p, t + dt).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(b >= a - 1e-15);
    }

    #[test]
    fn clock_transform_lies_in_the_unit_interval(k in 0.2..3.0f64, th in 0.2..2.0f64, eta in 0.1..1.0f64, y0 in 0.1..2.0f64,
                                                 l in 0.0..20.0f64, dl in 1e-3..5.0f64, t in 0.1..5.0f64) {
        let s = IntegratedCirSpec::new(k, th, eta, y0);
        let (a, b) = (integrated_cir_laplace(&s, l, t).unwrap(), integrated_cir_laplace(&s, l + dl, t).unwrap());
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-15);
        prop_assert!(b <= a + 1e-15);
        // Jensen: E[e^{−λH}] ≥ e^{−λE[H]}
        prop_assert!(a >= (-l * s.integral_mean(t)).exp() * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn eds_coupon_exceeds_the_zero_recovery_cds(p in cev(), lvl in 0.2..0.8f64, n in 1usize..5) {
        let s = SwapSchedule::periodic(n as f64, 4, 0.0);
        let cds = cds_fair_coupon(&p, &s).unwrap();
        let eds = eds_fair_coupon(&p, &s.clone().with_trigger(lvl * p.spot)).unwrap();
        prop_assert!(eds >= cds * (1.0 - 1e-6), "eds {eds} cds {cds}");
    }

    #[test]
    fn time_changed_default_probability_grows_with_maturity(th in 0.3..1.5f64, y0 in 0.3..1.5f64, t in 0.2..3.0f64, dt in 0.05..2.0f64) {
        let m = TcModelSpec::new(0.0, 1.0, 0.05, TimeChangeSpec::IntegratedCir(IntegratedCirSpec::new(1.0, th, 0.5, y0)));
        let a = tc_default_probability(&m, t).unwrap();
        let b = tc_default_probability(&m, t + dt).unwrap();
        prop_assert!(b.value >= a.value - a.error - b.error);
    }
}
