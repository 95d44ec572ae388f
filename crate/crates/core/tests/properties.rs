mod common;

use common::{pow2_inv, rat, Oracle};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use rigidity_core::cf::Irrational;
use rigidity_core::cli::parse_rational;
use rigidity_core::exceptional::{max_gap, max_gap_fixed, Theta};
use rigidity_core::trig::{birkhoff_direct, birkhoff_fourier, TorusRotation, TrigPoly};

fn golden() -> Irrational {
    Irrational::golden()
}

prop_compose! {
    fn small_poly(max_deg: usize)(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..=max_deg + 1)) -> TrigPoly {
        let mut c: Vec<Complex64> = coeffs.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        c[0].im = 0.0;
        TrigPoly::new("p", c)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_even_and_subadditive(k in -100_000i64..100_000, j in -100_000i64..100_000) {
        let a = golden();
        let tol = pow2_inv(80);
        let nk = a.circle_norm(&BigInt::from(k), &tol).unwrap();
        let nmk = a.circle_norm(&BigInt::from(-k), &tol).unwrap();
        prop_assert!(nk.lower <= nmk.upper && nmk.lower <= nk.upper);
        let nj = a.circle_norm(&BigInt::from(j), &tol).unwrap();
        let nkj = a.circle_norm(&BigInt::from(k + j), &tol).unwrap();
        prop_assert!(nkj.lower <= &nk.upper + &nj.upper);
        prop_assert!(nk.upper <= rat(1, 2));
    }

    #[test]
    fn norm_agrees_with_oracle(k in -1_000_000i64..1_000_000) {
        let o = Oracle::sqrt2();
        let iv = Irrational::sqrt2().circle_norm(&BigInt::from(k), &pow2_inv(100)).unwrap();
        prop_assert!(o.encloses(k, &iv.lower, &iv.upper));
    }

    #[test]
    fn bohr_slices_compose(start in 0i64..5000, len1 in 0i64..3000, len2 in 0i64..3000, d in 3i64..200) {
        let a = golden();
        let eps = rat(1, d);
        let whole = a.bohr_enumerate(&eps, start, start + len1 + len2).unwrap();
        let mut parts = a.bohr_enumerate(&eps, start, start + len1).unwrap();
        parts.extend(a.bohr_enumerate(&eps, start + len1, start + len1 + len2).unwrap());
        prop_assert_eq!(&whole, &parts);
        prop_assert!(whole.windows(2).all(|w| w[0] < w[1]));
        let first = a.bohr_first(&eps, start, start + len1 + len2).unwrap();
        prop_assert_eq!(first, whole.first().copied());
    }

    #[test]
    fn eval_matches_naive_sum(p in small_poly(40), x in 0.0f64..1.0) {
        let mut naive = p.coeff(0).re;
        for k in 1..=p.degree() as i64 {
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 * x);
            naive += 2.0 * (p.coeff(k) * e).re;
        }
        prop_assert!((p.eval(x) - naive).abs() <= p.eval_error() + 1e-12);
    }

    #[test]
    fn fourier_form_matches_direct(p in small_poly(12), q in small_poly(12), a in any::<u64>(), t in any::<u64>(), n in 0u64..3000) {
        let rot = TorusRotation::new(a, t);
        let d = birkhoff_direct(&p, &q, &rot, n);
        let f = birkhoff_fourier(&p, &q, &rot, n);
        prop_assert!((d.value - f.value).abs() <= d.error + f.error, "{} vs {}", d.value, f.value);
    }

    #[test]
    fn gaps_are_at_least_the_mean(pts in prop::collection::vec(any::<u64>(), 1..200)) {
        let g = max_gap_fixed(&pts);
        let mut distinct = pts.clone();
        distinct.sort_unstable();
        distinct.dedup();
        prop_assert!(g * distinct.len() as u128 >= 1u128 << 64);
        let f: Vec<f64> = pts.iter().map(|&p| p as f64 / 18446744073709551616.0).collect();
        prop_assert!((max_gap(&f) - g as f64 / 18446744073709551616.0).abs() < 1e-9);
    }

    #[test]
    fn rational_parsing_round_trips(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rational(&r.to_string()).unwrap(), r.clone());
        let dec = format!("{}e-6", n);
        prop_assert_eq!(parse_rational(&dec).unwrap(), rat(n, 1_000_000));
    }

    #[test]
    fn combos_parse_to_reduced_fields(p in -50i64..50, q in 1i64..50, r in -50i64..50, s in 1i64..50) {
        prop_assume!(p != 0);
        let t = Theta::parse(&format!("{p}/{q}*a+{r}/{s}")).unwrap();
        let c = t.combo().unwrap();
        prop_assert_eq!(c.coef(), rat(p, q));
        prop_assert_eq!(c.shift(), rat(r, s));
        let grid = c.grid_step();
        prop_assert!((c.shift() / &grid).is_integer());
        prop_assert!((BigRational::from_integer(c.a.clone()) / BigRational::from_integer(c.b.clone()) / &grid).is_integer());
        prop_assert!(grid <= rat(1, 1));
    }
}
