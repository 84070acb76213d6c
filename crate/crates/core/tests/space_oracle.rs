//! Password-space counts checked against exhaustive enumeration of
//! profiles in small worlds.

use captchapass_core::combinatorics::{
    binomial, compositions, count_o, count_p, space_size, ExactCount, SpaceQuery,
};
use num_bigint::BigUint;
use proptest::prelude::*;

/// Counts every (set of pass-images, one nonempty position subset per
/// image) with `K >= k_min` and total position count `l`, by walking all
/// image bitmasks and all position-mask tuples.
fn brute_force(n: usize, m: usize, l: usize, k_min: usize) -> u64 {
    let pos_masks: Vec<u32> = (1u32..(1 << m)).collect();
    let mut total = 0u64;
    for images in 0u32..(1 << n) {
        let k = images.count_ones() as usize;
        if k < k_min || k == 0 {
            continue;
        }
        // Odometer over one position mask per chosen image.
        let mut idx = vec![0usize; k];
        loop {
            let len: u32 = idx.iter().map(|&i| pos_masks[i].count_ones()).sum();
            if len as usize == l {
                total += 1;
            }
            let mut d = 0;
            while d < k {
                idx[d] += 1;
                if idx[d] < pos_masks.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == k {
                break;
            }
        }
    }
    total
}

#[test]
fn small_world_matches_enumeration() {
    for n in 1..=5 {
        for m in 1..=3 {
            for k_min in 1..=3 {
                if n < k_min {
                    continue;
                }
                for l in k_min..=6 {
                    let q = SpaceQuery::new(l, n, m).with_min_pass_images(k_min);
                    let got = space_size(&q).unwrap().count;
                    let want = brute_force(n, m, l, k_min);
                    assert_eq!(got, ExactCount::from(want), "N={n} M={m} L={l} Kmin={k_min}");
                }
            }
        }
    }
}

#[test]
fn four_images_two_letters_length_three() {
    assert_eq!(brute_force(4, 2, 3, 3), 32);
    assert_eq!(space_size(&SpaceQuery::new(3, 4, 2)).unwrap().count, ExactCount::from(32));
}

#[test]
fn table_values_exceed_u64() {
    let s = space_size(&SpaceQuery::new(10, 50, 8)).unwrap();
    assert!(s.count.value() > &BigUint::from(u64::MAX));
    assert_eq!(s.count.to_string(), "25798075602605743360");
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u8), |a, i| a * i)
}

/// Recomputes O from nonincreasing partitions, weighting each by the
/// number of distinct orderings of its parts.
fn o_from_partitions(k: usize, l: usize, m: usize) -> BigUint {
    fn parts(rem: usize, k: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for p in (1..=max.min(rem)).rev() {
            cur.push(p);
            parts(rem - p, k - 1, p, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    parts(l, k, m, &mut Vec::new(), &mut all);
    let mut total = BigUint::from(0u8);
    for p in all {
        let mut mult = factorial(k);
        let mut i = 0;
        while i < p.len() {
            let j = p[i..].iter().take_while(|&&x| x == p[i]).count();
            mult /= factorial(j);
            i += j;
        }
        let prod = p.iter().fold(BigUint::from(1u8), |a, &n| a * binomial(m, n));
        total += mult * prod;
    }
    total
}

proptest! {
    #[test]
    fn o_is_order_symmetric(k in 1usize..6, l in 1usize..16, m in 1usize..9) {
        prop_assert_eq!(count_o(k, l, 50, m).0, o_from_partitions(k, l, m));
    }

    #[test]
    fn compositions_are_valid(l in 0usize..14, k in 1usize..6, m in 1usize..6) {
        for c in compositions(l, k, m) {
            prop_assert_eq!(c.len(), k);
            prop_assert_eq!(c.iter().sum::<usize>(), l);
            prop_assert!(c.iter().all(|&n| (1..=m).contains(&n)));
        }
    }

    #[test]
    fn space_monotone_in_n_and_m(l in 3usize..9, n in 3usize..30, m in 1usize..8) {
        let base = space_size(&SpaceQuery::new(l, n, m)).unwrap().count;
        let more_n = space_size(&SpaceQuery::new(l, n + 1, m)).unwrap().count;
        let more_m = space_size(&SpaceQuery::new(l, n, m + 1)).unwrap().count;
        prop_assert!(more_n >= base);
        prop_assert!(more_m >= base);
    }

    #[test]
    fn p_is_zero_when_k_exceeds_n(n in 1usize..6, extra in 1usize..4) {
        prop_assert_eq!(count_p(n + extra, n + extra, n, 8), ExactCount::zero());
    }
}
