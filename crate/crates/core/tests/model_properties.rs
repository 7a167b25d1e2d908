mod common;

use common::{random_covariates, random_full_params, random_state};
use netgame::model::{
    block_potential_diff, delta_action, delta_link, payoff, potential, statistic_value, Block, CovariateTable,
    NetworkState, Statistic,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flipped(s: &NetworkState, i: usize, j: usize, on: bool) -> NetworkState {
    let mut t = s.clone();
    if i == j {
        t.set_action(i, on);
    } else {
        t.set_link(i, j, on);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn condition_a_holds(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_covariates(n, &mut rng);
        let p = random_full_params(2.0, &mut rng);
        let s = random_state(n, &mut rng);
        let i = rng.random_range(0..n);
        let on = flipped(&s, i, i, true);
        let off = flipped(&s, i, i, false);
        let dphi = potential(&on, &x, &p).unwrap() - potential(&off, &x, &p).unwrap();
        let du = payoff(i, &on, &x, &p).unwrap() - payoff(i, &off, &x, &p).unwrap();
        let d = delta_action(i, &s, &x, &p).unwrap();
        prop_assert!((dphi - d).abs() <= 1e-9, "potential {dphi} vs delta {d}");
        prop_assert!((du - d).abs() <= 1e-9, "payoff {du} vs delta {d}");
    }

    #[test]
    fn condition_b_holds(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_covariates(n, &mut rng);
        let p = random_full_params(2.0, &mut rng);
        let s = random_state(n, &mut rng);
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let on = flipped(&s, i, j, true);
        let off = flipped(&s, i, j, false);
        let dphi = potential(&on, &x, &p).unwrap() - potential(&off, &x, &p).unwrap();
        let du = payoff(i, &on, &x, &p).unwrap() - payoff(i, &off, &x, &p).unwrap();
        let d = delta_link(i, j, &s, &x, &p).unwrap();
        prop_assert!((dphi - d).abs() <= 1e-9, "potential {dphi} vs delta {d}");
        prop_assert!((du - d).abs() <= 1e-9, "payoff {du} vs delta {d}");
    }

    #[test]
    fn potential_is_linear_in_theta(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_covariates(n, &mut rng);
        let p1 = random_full_params(2.0, &mut rng);
        let p2 = random_full_params(2.0, &mut rng);
        let sum = p1.with_theta(p1.theta.iter().zip(&p2.theta).map(|(a, b)| a + b).collect()).unwrap();
        let s = random_state(n, &mut rng);
        let lhs = potential(&s, &x, &sum).unwrap();
        let rhs = potential(&s, &x, &p1).unwrap() + potential(&s, &x, &p2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dyadic_statistics_are_label_and_direction_free(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = CovariateTable::uniform(n);
        let s = random_state(n, &mut rng);
        // transpose
        let mut t = s.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    t.set_link(i, j, s.link(j, i));
                }
            }
        }
        // random relabeling
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, rng.random_range(0..=k));
        }
        let mut r = NetworkState::empty(n).unwrap();
        for i in 0..n {
            r.set_action(perm[i], t.action(i));
            for j in 0..n {
                if i != j {
                    r.set_link(perm[i], perm[j], t.link(i, j));
                }
            }
        }
        for st in [Statistic::Reciprocity, Statistic::LocalExternality, Statistic::SymmetricTriangle] {
            prop_assert_eq!(statistic_value(st, &s, &x), statistic_value(st, &r, &x));
        }
    }
}

#[test]
fn block_diff_matches_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb10c);
    let n = 6;
    for _ in 0..10_000 {
        let x = random_covariates(n, &mut rng);
        let p = random_full_params(1.5, &mut rng);
        let s = random_state(n, &mut rng);
        let i = rng.random_range(0..n);
        let k = rng.random_range(2..=n);
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        for t in 0..k - 1 {
            let r = rng.random_range(t..others.len());
            others.swap(t, r);
        }
        let partners = &others[..k - 1];
        let old = Block(rng.random_range(0..1u32 << k));
        let new = Block(rng.random_range(0..1u32 << k));
        let d = block_potential_diff(i, partners, old, new, k, &s, &x, &p).unwrap();
        let mut so = s.clone();
        old.write(&mut so, i, partners);
        let mut sn = s.clone();
        new.write(&mut sn, i, partners);
        let brute = potential(&sn, &x, &p).unwrap() - potential(&so, &x, &p).unwrap();
        assert!((d - brute).abs() <= 1e-10, "{d} vs {brute}");
    }
}
