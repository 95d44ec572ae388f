mod common;

use common::{pow2_inv, rat, Oracle};
use num_bigint::BigInt;
use rigidity_core::cf::Irrational;

fn cases() -> [(Irrational, Oracle); 2] {
    [(Irrational::golden(), Oracle::golden()), (Irrational::sqrt2(), Oracle::sqrt2())]
}

#[test]
fn oracle_sanity() {
    let g = Oracle::golden();
    let (n, _) = g.norm(1);
    let digits = n.to_string();
    assert!(digits.starts_with("3819660112501051517954131656343618822796908201942371378645513772947395371810975502927927"));
    let s = Oracle::sqrt2();
    assert!(s.norm(1).0.to_string().starts_with("41421356237309504880168872420969807856967187537694"));
}

#[test]
fn circle_norms_match_the_oracle() {
    let tol = pow2_inv(120);
    for (alpha, oracle) in cases() {
        for k in (-2000i64..=2000).step_by(7).chain([0, 1, -1, 987, 1597, 2378, 5741]) {
            let iv = alpha.circle_norm(&BigInt::from(k), &tol).unwrap();
            assert!(oracle.encloses(k, &iv.lower, &iv.upper), "{} k={k}", alpha.label());
            assert!(iv.width() <= tol);
        }
    }
}

#[test]
fn min_norms_match_brute_force() {
    let tol = pow2_inv(100);
    for (alpha, oracle) in cases() {
        let table = oracle.argmin_table(5000);
        for bound in (1..=200).chain([233, 377, 408, 985, 986, 1000, 2500, 4181, 5000]) {
            let (k, iv) = alpha.min_norm_up_to(&BigInt::from(bound), &tol).unwrap();
            assert_eq!(k, BigInt::from(table[bound as usize]), "{} K={bound}", alpha.label());
            assert!(oracle.encloses(table[bound as usize], &iv.lower, &iv.upper));
        }
    }
}

#[test]
fn bohr_sets_match_brute_force() {
    for (alpha, oracle) in cases() {
        for (eps, start, end) in [(rat(1, 10), 0, 3000), (rat(1, 100), 500, 20_000), (rat(3, 7), 17, 400), (rat(1, 5000), 0, 50_000)] {
            let got = alpha.bohr_enumerate(&eps, start, end).unwrap();
            let want: Vec<i64> = (start..end).filter(|&m| oracle.below(m, &eps).expect("decidable")).collect();
            assert_eq!(got, want, "{} ε={eps} [{start}, {end})", alpha.label());
        }
    }
}
