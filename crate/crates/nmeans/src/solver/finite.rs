//! Exact optimal n-means for finite supports, plus a Lloyd-descent
//! baseline for comparison against the global optimum.

use crate::distribution::DiscreteDistribution;
use crate::interval::{PrefixSumCache, RangeEnd};
use crate::scalar::{Scalar, DEFAULT_PRECISION};

use super::{
    backtrack_cuts, build_codebook, dp_cells, Codebook, ErGrid, Mode, QuantizationResult,
    SolveError, TieRule,
};

/// Optimal n-means by dynamic programming over contiguous cells,
/// `O(n m^2)` with O(1) cell-cost queries. In `Mode::All` the result
/// carries every optimal codebook (distinct cut vectors, deduplicated).
/// Levels `n >= m` return the support itself with zero distortion.
pub fn solve(
    dist: &DiscreteDistribution,
    n: usize,
    mode: Mode,
) -> Result<QuantizationResult, SolveError> {
    assert!(n >= 1, "level count must be at least 1");
    let m = dist.size().ok_or(SolveError::InfiniteSupport)?;
    let mut cache = PrefixSumCache::new(dist.clone(), DEFAULT_PRECISION);
    let exact = cache.is_exact();
    let precision_bits = if exact { None } else { Some(cache.precision()) };

    if n >= m {
        let cuts: Vec<usize> = (1..m).collect();
        let codebook = build_codebook(&mut cache, &cuts, RangeEnd::At(m))?;
        return Ok(QuantizationResult {
            n,
            distortion: Scalar::zero(),
            optima: vec![codebook],
            exact,
            precision_bits,
        });
    }

    let tie = TieRule::for_cache(&cache);
    let er = ErGrid::new(&mut cache, m)?;
    let dp = dp_cells(&mut cache, &er, n, m, mode, tie)?;
    let distortion = dp.cost[n][m].clone().expect("feasible split");
    let cut_vectors = match mode {
        Mode::Single => vec![backtrack_cuts(&dp, n, m).remove(0)],
        Mode::All => backtrack_cuts(&dp, n, m),
    };
    let mut optima = Vec::with_capacity(cut_vectors.len());
    for cuts in &cut_vectors {
        optima.push(build_codebook(&mut cache, cuts, RangeEnd::At(m))?);
    }
    Ok(QuantizationResult {
        n,
        distortion,
        optima,
        exact,
        precision_bits,
    })
}

/// Number of distinct optimal codebooks at level `n`.
pub fn count_optima(dist: &DiscreteDistribution, n: usize) -> Result<usize, SolveError> {
    Ok(solve(dist, n, Mode::All)?.optima.len())
}

/// Distortion of an arbitrary codebook: the mass-weighted sum over
/// atoms of the squared distance to the nearest code point. Ties
/// contribute the tied distance, so no tie-break affects the value.
pub fn distortion_of(
    dist: &DiscreteDistribution,
    codebook: &[Scalar],
) -> Result<Scalar, SolveError> {
    assert!(!codebook.is_empty(), "codebook must be nonempty");
    let m = dist.size().ok_or(SolveError::InfiniteSupport)?;
    let mut code = codebook.to_vec();
    code.sort();
    for w in code.windows(2) {
        assert!(w[0] != w[1], "code points must be distinct");
    }
    let mut total = Scalar::zero();
    for i in 1..=m {
        let (x, w) = dist.atom(i)?;
        let idx = code.partition_point(|c| c < &x);
        let mut d2: Option<Scalar> = None;
        for cand in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if let Some(c) = code.get(cand) {
                let d = (&x - c).square();
                d2 = Some(match d2 {
                    None => d,
                    Some(prev) => prev.min(d),
                });
            }
        }
        total = &total + &(&w * &d2.expect("nonempty codebook"));
    }
    Ok(total)
}

/// Lloyd descent: alternate nearest-point assignment (ties to the
/// lower-index cell) and centroid update until the cut vector is stable
/// or `max_iters` is reached. Converges to a local optimum; the
/// distortion never increases across iterations. Returns the final
/// codebook, its distortion, and the number of completed iterations.
pub fn lloyd_descent(
    dist: &DiscreteDistribution,
    initial: &[Scalar],
    max_iters: usize,
) -> Result<(Codebook, Scalar, usize), SolveError> {
    assert!(!initial.is_empty(), "initial codebook must be nonempty");
    let m = dist.size().ok_or(SolveError::InfiniteSupport)?;
    let mut code = initial.to_vec();
    code.sort();
    for w in code.windows(2) {
        assert!(w[0] != w[1], "initial code points must be distinct");
    }
    let mut cache = PrefixSumCache::new(dist.clone(), DEFAULT_PRECISION);
    let k = code.len();
    let mut cuts: Option<Vec<usize>> = None;
    let mut iterations = 0usize;
    let mut ties: Vec<usize> = Vec::new();

    while iterations < max_iters {
        iterations += 1;
        // Assignment sweep: atom -> nearest code point, ties low. Both
        // atoms and code points ascend, so one monotone pass suffices.
        let mut new_cuts = Vec::with_capacity(k - 1);
        let mut new_ties = Vec::new();
        let mut cell = 0usize;
        let mut count = 0usize;
        for i in 1..=m {
            let (x, _) = dist.atom(i)?;
            loop {
                if cell + 1 == k {
                    break;
                }
                let mid = &(&code[cell] + &code[cell + 1]) / &Scalar::from_int(2);
                if x > mid {
                    if count == 0 {
                        return Err(SolveError::EmptyCellCollapse { iteration: iterations });
                    }
                    new_cuts.push(i - 1);
                    cell += 1;
                    count = 0;
                } else {
                    if x == mid {
                        new_ties.push(i);
                    }
                    break;
                }
            }
            count += 1;
        }
        if count == 0 || cell + 1 != k {
            return Err(SolveError::EmptyCellCollapse { iteration: iterations });
        }
        // Centroid update.
        let mut bounds = Vec::with_capacity(k + 1);
        bounds.push(0usize);
        bounds.extend_from_slice(&new_cuts);
        bounds.push(m);
        for t in 0..k {
            code[t] = cache.av(bounds[t] + 1, RangeEnd::At(bounds[t + 1]))?;
        }
        let stable = cuts.as_deref() == Some(new_cuts.as_slice());
        cuts = Some(new_cuts);
        ties = new_ties;
        if stable {
            break;
        }
    }

    let cuts = cuts.expect("at least one iteration ran");
    let mut bounds = Vec::with_capacity(k + 1);
    bounds.push(0usize);
    bounds.extend_from_slice(&cuts);
    bounds.push(m);
    let mut distortion = Scalar::zero();
    for t in 0..k {
        distortion = &distortion + &cache.er(bounds[t] + 1, RangeEnd::At(bounds[t + 1]))?;
    }
    let codebook = Codebook {
        points: code,
        cuts,
        ties,
        tail: false,
    };
    Ok((codebook, distortion, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::make_finite;

    fn s(v: &str) -> Scalar {
        v.parse().unwrap()
    }

    fn sv(vals: &[&str]) -> Vec<Scalar> {
        vals.iter().map(|v| s(v)).collect()
    }

    fn uniform6() -> DiscreteDistribution {
        make_finite((1..=6).map(Scalar::from_int).collect(), vec![s("1/6"); 6]).unwrap()
    }

    fn truncated(m: usize, x: &str) -> DiscreteDistribution {
        DiscreteDistribution::geometric_truncated(m, s(x).as_rational()).unwrap()
    }

    #[test]
    fn uniform_two_means() {
        let r = solve(&uniform6(), 2, Mode::All).unwrap();
        assert_eq!(r.optima.len(), 1);
        assert_eq!(r.codebook().points, sv(&["2", "5"]));
        assert_eq!(r.distortion, s("2/3"));
        assert!(r.exact);
    }

    #[test]
    fn truncated_half_fixtures() {
        let d = truncated(6, "1/2");
        let r = solve(&d, 2, Mode::All).unwrap();
        assert_eq!(r.codebook().points, sv(&["4/3", "31/8"]));
        assert_eq!(r.distortion, s("341/768"));
        assert_eq!(r.optima.len(), 1);

        let r = solve(&d, 5, Mode::Single).unwrap();
        assert_eq!(r.codebook().points, sv(&["1", "2", "3", "4", "11/2"]));
        assert_eq!(r.distortion, s("1/64"));
    }

    #[test]
    fn truncated_seven_tenths_four_means() {
        let r = solve(&truncated(6, "7/10"), 4, Mode::Single).unwrap();
        assert_eq!(r.codebook().points, sv(&["1", "2", "3", "439/100"]));
        assert_eq!(r.distortion, s("112833/10000000"));
    }

    #[test]
    fn level_at_or_above_support_size() {
        for d in [uniform6(), truncated(6, "7/10")] {
            for n in [6usize, 7, 12] {
                let r = solve(&d, n, Mode::All).unwrap();
                assert_eq!(r.distortion, Scalar::zero());
                assert_eq!(r.optima.len(), 1);
                assert_eq!(r.codebook().points.len(), 6);
                assert_eq!(r.codebook().cuts, vec![1, 2, 3, 4, 5]);
            }
        }
        let single = make_finite(vec![s("0")], vec![s("1")]).unwrap();
        let r = solve(&single, 1, Mode::All).unwrap();
        assert_eq!(r.codebook().points, sv(&["0"]));
        assert_eq!(r.distortion, Scalar::zero());
    }

    #[test]
    fn optima_counts() {
        assert_eq!(count_optima(&uniform6(), 5).unwrap(), 5);
        assert_eq!(count_optima(&uniform6(), 6).unwrap(), 1);
        assert_eq!(count_optima(&truncated(6, "1/2"), 2).unwrap(), 1);
        // Four-means over six uniform atoms: cells sized {2,2,1,1} in
        // any arrangement, C(4,2) = 6 optima.
        assert_eq!(count_optima(&uniform6(), 4).unwrap(), 6);
    }

    #[test]
    fn uniform_five_means_enumeration() {
        let r = solve(&uniform6(), 5, Mode::All).unwrap();
        let expected: Vec<Vec<Scalar>> = vec![
            sv(&["1", "2", "3", "4", "11/2"]),
            sv(&["1", "2", "3", "9/2", "6"]),
            sv(&["1", "2", "7/2", "5", "6"]),
            sv(&["1", "5/2", "4", "5", "6"]),
            sv(&["3/2", "3", "4", "5", "6"]),
        ];
        let got: Vec<Vec<Scalar>> = r.optima.iter().map(|c| c.points.clone()).collect();
        for e in &expected {
            assert!(got.contains(e), "missing optimum {:?}", e);
        }
        assert_eq!(got.len(), 5);
        assert_eq!(r.distortion, s("1/12"));
    }

    #[test]
    fn distortion_of_fixtures() {
        let d = truncated(6, "1/2");
        assert_eq!(
            distortion_of(&d, &sv(&["1", "7/3", "19/4"])).unwrap(),
            s("65/384")
        );
        let d7 = truncated(6, "7/10");
        assert_eq!(
            distortion_of(&d7, &sv(&["1", "24251/10000"])).unwrap(),
            s("174296997/1000000000")
        );
        // The support itself has zero distortion.
        let support: Vec<Scalar> = (1..=6).map(Scalar::from_int).collect();
        assert_eq!(distortion_of(&d, &support).unwrap(), Scalar::zero());
    }

    #[test]
    fn distortion_of_matches_solver_everywhere() {
        for d in [uniform6(), truncated(6, "1/2"), truncated(6, "7/10")] {
            for n in 1..=6 {
                let r = solve(&d, n, Mode::All).unwrap();
                for cb in &r.optima {
                    assert_eq!(distortion_of(&d, &cb.points).unwrap(), r.distortion);
                }
            }
        }
    }

    #[test]
    fn monotone_error_curve() {
        for d in [uniform6(), truncated(6, "1/2"), truncated(6, "7/10")] {
            let mut last: Option<Scalar> = None;
            for n in 1..=6 {
                let v = solve(&d, n, Mode::Single).unwrap().distortion;
                if let Some(prev) = &last {
                    assert!(v < *prev, "V_n must strictly decrease below the support size");
                }
                last = Some(v);
            }
        }
    }

    #[test]
    fn lloyd_fixed_point_uniform() {
        // Derived by hand: assignment of {2, 5} splits at 3.5, centroids
        // stay {2, 5}, and the distortion sums to 2/3.
        let (cb, v, iters) = lloyd_descent(&uniform6(), &sv(&["2", "5"]), 64).unwrap();
        assert_eq!(cb.points, sv(&["2", "5"]));
        assert_eq!(v, s("2/3"));
        assert!(iters <= 2);
    }

    #[test]
    fn lloyd_fixed_point_truncated() {
        let d = truncated(6, "1/2");
        let (cb, v, _) = lloyd_descent(&d, &sv(&["4/3", "31/8"]), 64).unwrap();
        assert_eq!(cb.points, sv(&["4/3", "31/8"]));
        assert_eq!(v, s("341/768"));
    }

    #[test]
    fn lloyd_single_atom() {
        let d = make_finite(vec![s("5")], vec![s("1")]).unwrap();
        let (cb, v, _) = lloyd_descent(&d, &sv(&["-17/3"]), 8).unwrap();
        assert_eq!(cb.points, sv(&["5"]));
        assert_eq!(v, Scalar::zero());
    }

    #[test]
    fn lloyd_descends_from_rough_start() {
        // {1, 2, 3} converges to the local optimum {1, 2, a[3,6]},
        // strictly worse than the exact three-means answer.
        let d = truncated(6, "1/2");
        let exact = solve(&d, 3, Mode::Single).unwrap().distortion;
        let (cb, v, _) = lloyd_descent(&d, &sv(&["1", "2", "3"]), 64).unwrap();
        assert_eq!(cb.points, sv(&["1", "2", "31/8"]));
        assert!(v > exact);
    }

    #[test]
    fn lloyd_empty_cell_reported() {
        // Both code points sit far above the single atom: the lower
        // cell keeps everything and the upper cell starves.
        let d = make_finite(vec![s("0"), s("1")], vec![s("1/2"), s("1/2")]).unwrap();
        match lloyd_descent(&d, &sv(&["50", "100"]), 8) {
            Err(SolveError::EmptyCellCollapse { .. }) => {}
            other => panic!("unexpected: {:?}", other.map(|(_, v, _)| v)),
        }
    }

    #[test]
    fn lloyd_from_dp_optimum_is_fixed() {
        for d in [uniform6(), truncated(6, "1/2"), truncated(6, "7/10")] {
            for n in 2..=5 {
                let r = solve(&d, n, Mode::All).unwrap();
                for cb in &r.optima {
                    let (lcb, lv, _) = lloyd_descent(&d, &cb.points, 4).unwrap();
                    assert_eq!(lcb.points, cb.points);
                    assert_eq!(lv, r.distortion);
                }
            }
        }
    }

    #[test]
    fn infinite_support_rejected() {
        let d = DiscreteDistribution::geometric_naturals();
        assert!(matches!(
            solve(&d, 2, Mode::Single),
            Err(SolveError::InfiniteSupport)
        ));
        assert!(matches!(
            distortion_of(&d, &sv(&["1"])),
            Err(SolveError::InfiniteSupport)
        ));
    }
}
