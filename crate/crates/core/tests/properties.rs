//! Property tests for the invariants of the library.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use toral_dpm::exact::{smith_normal_form, IntMatrix, Rational};
use toral_dpm::measure::{
    calibrate_delta, pairing_distance_bound_check, weak_star_distance, EmpiricalMeasure, MetricFamily,
};
use toral_dpm::subshift::{cylinder_empirical, thue_morse, tm_substitute, xp_periodic_point};
use toral_dpm::torus::{periodic_points, ExactPoint, ToralAutomorphism};
use toral_dpm::unipotent::{is_periodic_with, periodic_approximants, unipotent_power, Param, SupportDescriptor};

fn cat() -> ToralAutomorphism {
    ToralAutomorphism::parse("2,1;1,1").unwrap()
}

fn point(num: &[u32], bits: u32) -> ExactPoint {
    ExactPoint::from_parts(num.iter().map(|&n| BigInt::from(n)).collect(), BigInt::one() << bits)
}

fn measure_strategy() -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec(prop::array::uniform2(0u32..1 << 12), 1..6).prop_map(|pts| {
        let pts: Vec<ExactPoint> = pts.iter().map(|p| point(p, 12)).collect();
        EmpiricalMeasure::uniform(2, &pts).unwrap()
    })
}

fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Sign of `u + q sqrt(c)` for a non-square `c > 0`.
fn sign_quadratic(u: &Rational, q: &Rational, c: &BigInt) -> i32 {
    let c = Rational::from_integer(c.clone());
    let sign = |r: &Rational| if r.is_positive() { 1 } else if r.is_negative() { -1 } else { 0 };
    match (sign(u), sign(q)) {
        (a, 0) => a,
        (0, b) => b,
        (a, b) if a == b => a,
        (a, _) => {
            if u * u > q * q * c {
                a
            } else {
                -a
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_symmetric_and_bounded(m1 in measure_strategy(), m2 in measure_strategy()) {
        let family = MetricFamily::torus(2);
        let d12 = weak_star_distance(&m1, &m2, &family).unwrap().value;
        let d21 = weak_star_distance(&m2, &m1, &family).unwrap().value;
        prop_assert_eq!(d12, d21);
        prop_assert!((0.0..=1.0).contains(&d12));
        prop_assert_eq!(weak_star_distance(&m1, &m1, &family).unwrap().value, 0.0);
    }

    #[test]
    fn metric_triangle(m1 in measure_strategy(), m2 in measure_strategy(), m3 in measure_strategy()) {
        let family = MetricFamily::torus(2);
        let d = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| weak_star_distance(a, b, &family).unwrap();
        let (d12, d23, d13) = (d(&m1, &m2), d(&m2, &m3), d(&m1, &m3));
        prop_assert!(d13.value <= d12.value + d23.value + 1e-12 + 2.0 * d13.certified_error);
    }

    #[test]
    fn point_masses_are_lipschitz(x in prop::array::uniform2(0u32..1 << 20), h in prop::array::uniform2(0u32..64)) {
        let family = MetricFamily::torus(2);
        let cal = calibrate_delta(&family, 0.1, 10, 0).unwrap();
        let lip = cal.eps / cal.analytic;
        let p = point(&x, 20);
        let q = p.add(&point(&h, 20));
        let gap = h.iter().map(|&t| t as f64 / (1u64 << 20) as f64).fold(0.0, f64::max);
        let d = weak_star_distance(
            &EmpiricalMeasure::uniform(2, &[p]).unwrap(),
            &EmpiricalMeasure::uniform(2, &[q]).unwrap(),
            &family,
        ).unwrap().value;
        prop_assert!(d <= lip * gap + 1e-12);
    }

    #[test]
    fn weights_sum_to_one(m in measure_strategy()) {
        prop_assert_eq!(m.total_weight(), Rational::one());
    }

    #[test]
    fn periodic_orbit_measure_is_invariant(n in 1u64..6, pick in 0usize..1000) {
        let a = cat();
        let pts = periodic_points(&a, n).unwrap();
        let x = &pts[pick % pts.len()];
        let mu = EmpiricalMeasure::from_orbit(&a, x, n as usize).unwrap();
        let family = MetricFamily::torus(2);
        prop_assert_eq!(weak_star_distance(&mu, &mu.pushforward(&a), &family).unwrap().value, 0.0);
        prop_assert_eq!(mu.total_weight(), Rational::one());
    }

    #[test]
    fn cylinder_tables_are_consistent(bits in prop::collection::vec(0u8..2, 1..200), len in 1usize..5) {
        let text: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
        let w = toral_dpm::subshift::Word::parse(&text, true).unwrap();
        let mu = cylinder_empirical(&w, len).unwrap();
        prop_assert!(mu.is_consistent());
    }

    #[test]
    fn substitution_doubles_thue_morse(n in 1usize..2000) {
        prop_assert_eq!(tm_substitute(&thue_morse(n)), thue_morse(2 * n));
    }

    #[test]
    fn xp_points_have_least_period(p in 2u64..4, n in 1u32..7) {
        let x = xp_periodic_point(p, n).unwrap();
        prop_assert_eq!(x.least_period(), Some(p.pow(n) as usize));
    }

    #[test]
    fn quadratic_params_round_trip(a in -20i64..20, b in -9i64..9, c in 2i64..40, d in 1i64..9) {
        prop_assume!(b != 0 && (c as f64).sqrt().fract() != 0.0);
        let t = Param::quadratic(a.into(), b.into(), c.into(), d.into());
        let back = Param::parse(&t.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), t.to_string());
        prop_assert!((back.to_f64() - t.to_f64()).abs() < 1e-12);
    }

    #[test]
    fn floor_affine_brackets(a in -20i64..20, b in 1i64..9, c in 2i64..40, d in 1i64..9,
                             sn in -50i64..50, sd in 1i64..50, hn in -50i64..50, hd in 1i64..50) {
        prop_assume!(sn != 0 && (c as f64).sqrt().fract() != 0.0);
        let t = Param::quadratic(a.into(), b.into(), c.into(), d.into());
        let (s, h) = (ratio(sn, sd), ratio(hn, hd));
        let n = Rational::from_integer(t.floor_affine(&s, &h));
        // s t + h - n = u + q sqrt(c) must lie in (0, 1).
        let q = &s * ratio(b, d);
        let u = &s * ratio(a, d) + &h - &n;
        let c = BigInt::from(c);
        prop_assert_eq!(sign_quadratic(&u, &q, &c), 1);
        prop_assert_eq!(sign_quadratic(&(u - Rational::one()), &q, &c), -1);
    }

    #[test]
    fn unipotent_power_matches_repeated_products(x in -5i64..5, y in -5i64..5, z in -5i64..5, p in 0u64..40) {
        let u = IntMatrix::from_i64_rows(&[vec![1, x, y], vec![0, 1, z], vec![0, 0, 1]]);
        let mut want = IntMatrix::identity(3);
        for _ in 0..p {
            want = want.mul(&u);
        }
        prop_assert_eq!(unipotent_power(&u, &BigInt::from(p)).unwrap(), want);
    }

    #[test]
    fn approximants_are_periodic(ns in prop::collection::vec(1u64..400, 1..5)) {
        let u = ToralAutomorphism::parse("1,1;0,1").unwrap();
        let mu = SupportDescriptor::parse("a = 0, phi; H = 1;0; m = 1").unwrap();
        let (c, aps) = periodic_approximants(&u, &mu.closure, &ns).unwrap();
        for ap in &aps {
            prop_assert_eq!(&ap.period, &(&c * &ap.n));
            prop_assert!(is_periodic_with(u.matrix(), &ap.exact(), &ap.period).unwrap());
        }
    }

    #[test]
    fn gcd_matches_binary_gcd(a in any::<i64>(), b in any::<i64>(), k in 0u32..200, shift in any::<bool>()) {
        use num_integer::Integer;
        let a = if shift { BigInt::one() << k } else { BigInt::from(a) * (BigInt::one() << k) };
        let b = BigInt::from(b);
        prop_assert_eq!(toral_dpm::exact::gcd(&a, &b), a.gcd(&b));
        prop_assert_eq!(toral_dpm::exact::gcd(&b, &a), a.gcd(&b));
    }

    #[test]
    fn smith_product_is_abs_det(entries in prop::collection::vec(-9i64..10, 9)) {
        let m = IntMatrix::from_i64_rows(&[entries[0..3].to_vec(), entries[3..6].to_vec(), entries[6..9].to_vec()]);
        let det = m.det().unwrap();
        prop_assume!(!det.is_zero());
        let prod: BigInt = smith_normal_form(&m.to_rat()).unwrap().invariant_factors().iter().product();
        prop_assert_eq!(prod.abs(), det.abs());
    }

    #[test]
    fn pairing_bound_holds(
        xs in prop::collection::vec(prop::array::uniform2(0u32..1 << 16), 1..20),
        shifts in prop::collection::vec(prop::array::uniform2(any::<u32>()), 20),
        far in prop::collection::vec(any::<bool>(), 20),
    ) {
        let family = MetricFamily::torus(2);
        let delta = calibrate_delta(&family, 0.1, 50, 1).unwrap().delta;
        // Close pairs move by less than delta in each coordinate.
        let scale = ((delta * (1u64 << 32) as f64).floor() as u32).max(1);
        let px: Vec<ExactPoint> = xs.iter().map(|p| point(p, 16)).collect();
        let py: Vec<ExactPoint> = px
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if far[i] {
                    point(&shifts[i], 32)
                } else {
                    p.add(&point(&[shifts[i][0] % scale, shifts[i][1] % scale], 32))
                }
            })
            .collect();
        prop_assert!(pairing_distance_bound_check(&px, &py, 0.1, delta, &family).unwrap().ok);
    }
}
