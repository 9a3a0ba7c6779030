use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revutil_core::metrics::{
    krippendorff_alpha, quadratic_weighted_kappa, welch_t_test, Distance, RatingVector,
};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn welch_p_values_are_uniform_under_the_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ps: Vec<f64> = (0..10_000)
        .map(|_| {
            let x: Vec<f64> = (0..10).map(|_| normal(&mut rng)).collect();
            let y: Vec<f64> = (0..14).map(|_| 3.0 * normal(&mut rng)).collect();
            welch_t_test(&x, &y).unwrap().p_two_tailed
        })
        .collect();
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    let d = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| f64::max((i + 1) as f64 / n - p, p - i as f64 / n))
        .fold(0.0, f64::max);
    assert!(d < 0.05, "KS statistic {d}");
}

fn percent_agreement(a: &[u8], b: &[u8]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

fn alpha_nominal(a: &[u8], b: &[u8]) -> f64 {
    let m: Vec<Vec<Option<f64>>> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| vec![Some(x as f64), Some(y as f64)])
        .collect();
    krippendorff_alpha(&m, Distance::Nominal).unwrap().value
}

proptest! {
    // With pooled marginals held fixed (b1, b2 are permutations of a), the
    // expected disagreement is constant, so alpha orders like agreement.
    #[test]
    fn nominal_alpha_orders_like_percent_agreement(
        a in proptest::collection::vec(1u8..=4, 4..30),
        seed in any::<u64>(),
    ) {
        prop_assume!(a.iter().any(|&v| v != a[0]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b1 = a.clone();
        let mut b2 = a.clone();
        for b in [&mut b1, &mut b2] {
            for i in (1..b.len()).rev() {
                let j = rng.gen_range(0..=i);
                b.swap(i, j);
            }
        }
        let (p1, p2) = (percent_agreement(&a, &b1), percent_agreement(&a, &b2));
        let (a1, a2) = (alpha_nominal(&a, &b1), alpha_nominal(&a, &b2));
        if p1 > p2 {
            prop_assert!(a1 > a2);
        } else if p1 < p2 {
            prop_assert!(a1 < a2);
        } else {
            prop_assert!((a1 - a2).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_is_one_iff_identical(
        a in proptest::collection::vec(1u8..=5, 2..25),
        b in proptest::collection::vec(1u8..=5, 2..25),
    ) {
        let n = a.len().min(b.len());
        let (a, b) = (a[..n].to_vec(), b[..n].to_vec());
        prop_assume!(a.iter().any(|&v| v != a[0]) && b.iter().any(|&v| v != b[0]));
        let k = quadratic_weighted_kappa(&RatingVector::new(a.clone()).unwrap(), &RatingVector::new(b.clone()).unwrap())
            .unwrap()
            .value;
        prop_assert!(k <= 1.0 + 1e-12);
        prop_assert_eq!((k - 1.0).abs() < 1e-12, a == b);
        let k_self = quadratic_weighted_kappa(&RatingVector::new(a.clone()).unwrap(), &RatingVector::new(a).unwrap())
            .unwrap()
            .value;
        prop_assert!((k_self - 1.0).abs() < 1e-12);
    }
}
