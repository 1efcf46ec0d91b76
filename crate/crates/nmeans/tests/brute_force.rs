//! Randomized properties: the DP against independent brute-force
//! oracles on small supports with exact rational data.

use proptest::prelude::*;

use nmeans::distribution::{make_finite_normalized, DiscreteDistribution};
use nmeans::scalar::Scalar;
use nmeans::solver::{distortion_of, solve, Mode};

/// Cell cost by direct two-pass summation (independent of the solver's
/// prefix-sum path).
fn er_direct(dist: &DiscreteDistribution, lo: usize, hi: usize) -> Scalar {
    let mut mass = Scalar::zero();
    let mut mean = Scalar::zero();
    for i in lo..=hi {
        let (p, w) = dist.atom(i).unwrap();
        mass = &mass + &w;
        mean = &mean + &(&p * &w);
    }
    mean = &mean / &mass;
    let mut acc = Scalar::zero();
    for i in lo..=hi {
        let (p, w) = dist.atom(i).unwrap();
        acc = &acc + &(&(&p - &mean).square() * &w);
    }
    acc
}

fn brute_force_contiguous(dist: &DiscreteDistribution, n: usize) -> (Scalar, Vec<Vec<usize>>) {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        dist: &DiscreteDistribution,
        m: usize,
        n: usize,
        start: usize,
        cuts: &mut Vec<usize>,
        acc: &Scalar,
        best: &mut Option<Scalar>,
        arg: &mut Vec<Vec<usize>>,
    ) {
        if cuts.len() == n - 1 {
            let total = acc + &er_direct(dist, start, m);
            match best {
                Some(b) if total > *b => {}
                Some(b) if total == *b => arg.push(cuts.clone()),
                _ => {
                    *best = Some(total);
                    arg.clear();
                    arg.push(cuts.clone());
                }
            }
            return;
        }
        let remaining = n - cuts.len() - 1;
        for end in start..=m - remaining {
            let acc2 = acc + &er_direct(dist, start, end);
            cuts.push(end);
            recurse(dist, m, n, end + 1, cuts, &acc2, best, arg);
            cuts.pop();
        }
    }
    let m = dist.size().unwrap();
    let mut best = None;
    let mut arg = Vec::new();
    recurse(
        dist,
        m,
        n,
        1,
        &mut Vec::new(),
        &Scalar::zero(),
        &mut best,
        &mut arg,
    );
    (best.unwrap(), arg)
}

fn brute_force_unrestricted(dist: &DiscreteDistribution, n: usize) -> Scalar {
    let m = dist.size().unwrap();
    let mut best: Option<Scalar> = None;
    let mut assignment = vec![0usize; m];
    loop {
        let mut mass = vec![Scalar::zero(); n];
        let mut sum = vec![Scalar::zero(); n];
        let mut sumsq = vec![Scalar::zero(); n];
        for (i, &cell) in assignment.iter().enumerate() {
            let (p, w) = dist.atom(i + 1).unwrap();
            mass[cell] = &mass[cell] + &w;
            sum[cell] = &sum[cell] + &(&p * &w);
            sumsq[cell] = &sumsq[cell] + &(&p.square() * &w);
        }
        let mut total = Scalar::zero();
        for c in 0..n {
            if !mass[c].is_zero() {
                total = &total + &(&sumsq[c] - &(&sum[c].square() / &mass[c]));
            }
        }
        best = Some(match best {
            None => total,
            Some(b) => b.min(total),
        });
        let mut idx = 0;
        loop {
            if idx == m {
                return best.unwrap();
            }
            assignment[idx] += 1;
            if assignment[idx] < n {
                break;
            }
            assignment[idx] = 0;
            idx += 1;
        }
    }
}

/// Random finite distribution: distinct half-integer points with
/// positive rational masses (weights normalized exactly).
fn arb_dist(max_atoms: usize) -> impl Strategy<Value = DiscreteDistribution> {
    (2..=max_atoms).prop_flat_map(|m| {
        (
            proptest::collection::btree_set(-24i64..=24, m),
            proptest::collection::vec(1i64..=12, m),
        )
            .prop_map(|(points, weights)| {
                let points: Vec<Scalar> = points
                    .into_iter()
                    .map(|p| Scalar::from_ratio(p, 2))
                    .collect();
                let masses: Vec<Scalar> = weights.into_iter().map(Scalar::from_int).collect();
                make_finite_normalized(points, masses).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_matches_contiguous_brute_force(
        dist in arb_dist(7),
        n_seed in 1usize..=7,
    ) {
        let m = dist.size().unwrap();
        let n = 1 + n_seed % m;
        let r = solve(&dist, n, Mode::All).unwrap();
        let (v, mut args) = brute_force_contiguous(&dist, n);
        prop_assert_eq!(&r.distortion, &v);
        args.sort();
        let got: Vec<Vec<usize>> = r.optima.iter().map(|cb| cb.cuts.clone()).collect();
        prop_assert_eq!(got, args);
    }

    #[test]
    fn contiguous_is_globally_optimal(
        dist in arb_dist(6),
        n_seed in 1usize..=3,
    ) {
        let m = dist.size().unwrap();
        let n = 1 + n_seed % m.min(3);
        let dp = solve(&dist, n, Mode::Single).unwrap().distortion;
        let free = brute_force_unrestricted(&dist, n);
        prop_assert_eq!(dp, free);
    }

    #[test]
    fn error_curve_is_strictly_monotone(dist in arb_dist(7)) {
        let m = dist.size().unwrap();
        let mut last: Option<Scalar> = None;
        for n in 1..=m {
            let v = solve(&dist, n, Mode::Single).unwrap().distortion;
            prop_assert!(!v.is_negative());
            if let Some(prev) = &last {
                prop_assert!(v < *prev);
            }
            last = Some(v);
        }
        prop_assert_eq!(last.unwrap(), Scalar::zero());
    }

    #[test]
    fn reported_distortion_matches_direct_evaluation(
        dist in arb_dist(7),
        n_seed in 1usize..=7,
    ) {
        let m = dist.size().unwrap();
        let n = 1 + n_seed % m;
        let r = solve(&dist, n, Mode::All).unwrap();
        for cb in &r.optima {
            prop_assert_eq!(&distortion_of(&dist, &cb.points).unwrap(), &r.distortion);
        }
    }

    #[test]
    fn optima_points_are_strictly_increasing(
        dist in arb_dist(7),
        n_seed in 1usize..=7,
    ) {
        let m = dist.size().unwrap();
        let n = 1 + n_seed % m;
        let r = solve(&dist, n, Mode::All).unwrap();
        for cb in &r.optima {
            for w in cb.points.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn range_means_stay_inside_the_range(dist in arb_dist(7)) {
        use nmeans::{PrefixSumCache, RangeEnd};
        let m = dist.size().unwrap();
        let mut cache = PrefixSumCache::new(dist.clone(), 64);
        for k in 1..=m {
            for l in k..=m {
                let av = cache.av(k, RangeEnd::At(l)).unwrap();
                let (lo, _) = dist.atom(k).unwrap();
                let (hi, _) = dist.atom(l).unwrap();
                prop_assert!(lo <= av && av <= hi);
            }
        }
    }
}
