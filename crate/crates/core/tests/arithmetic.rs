use ehm_core::arith::{beta_estimate, cf_from_real, default_tail_start, determinant_identity, liouville_build};
use ehm_core::ContinuedFraction;
use num_bigint::BigInt;
use num_traits::ToPrimitive;

fn brute_force_best(cf: &ContinuedFraction, below: u64) -> i64 {
    (1..below as i64)
        .min_by(|&a, &b| cf.circle_dist_multiple(a).partial_cmp(&cf.circle_dist_multiple(b)).unwrap())
        .unwrap()
}

#[test]
fn determinants_alternate_in_sign() {
    for cf in [
        ContinuedFraction::golden(40),
        ContinuedFraction::from_u64(&[2, 1, 3, 5, 1, 2, 4, 1, 7, 2, 1, 1, 9]).unwrap(),
        liouville_build(0.5, 8).unwrap(),
    ] {
        let signs: Vec<BigInt> = (1..=cf.depth()).map(|n| determinant_identity(&cf, n)).collect();
        for w in signs.windows(2) {
            assert_eq!(w[0].clone() * w[1].clone(), BigInt::from(-1));
        }
    }
}

#[test]
fn best_approximations_are_the_denominators() {
    for cf in [
        ContinuedFraction::golden(40),
        ContinuedFraction::from_u64(&[2, 1, 3, 5, 1, 2, 4, 1, 7, 2, 1, 1, 9, 3, 2, 2]).unwrap(),
    ] {
        for n in 1..7 {
            let next = cf.q(n + 1).to_u64().unwrap();
            assert_eq!(brute_force_best(&cf, next) as u64, cf.q(n).to_u64().unwrap(), "level {n}");
        }
    }
}

#[test]
fn liouville_exponent_is_close_to_target() {
    let cf = liouville_build(0.5, 8).unwrap();
    let b = beta_estimate(&cf, default_tail_start(&cf)).unwrap();
    assert!((b.tail_sup - 0.5).abs() <= 0.05, "{}", b.tail_sup);
    let g = ContinuedFraction::golden(40);
    assert!(beta_estimate(&g, default_tail_start(&g)).unwrap().tail_sup < 1e-3);
}

#[test]
fn expansion_of_pi() {
    let cf = cf_from_real(std::f64::consts::PI - 3.0, 5).unwrap();
    let q: Vec<u64> = cf.small_quotients().into_iter().map(Option::unwrap).collect();
    assert_eq!(q, vec![7, 15, 1, 292, 1]);
}
