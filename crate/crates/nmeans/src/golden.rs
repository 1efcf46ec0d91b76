//! Built-in golden fixture suite: the closed-form codebooks,
//! distortions, and inverse-design thresholds the library reproduces,
//! runnable as one batch (the CLI `verify` command).
//!
//! Exact fixtures assert rational equality. Decimal fixtures assert
//! agreement to every quoted digit (half-ulp of the last quoted place).
//! Fixtures that need more precision than the run provides are
//! reported as skipped rather than failed.

use num_rational::BigRational;

use crate::distribution::{make_finite, DiscreteDistribution};
use crate::inverse::{feasible_x, verify_conjecture, InverseFamily};
use crate::scalar::Scalar;
use crate::solver::{
    count_optima, solve, solve_infinite, verify_naturals_structure,
    verify_reciprocal_structure, Mode,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureStatus {
    Pass,
    Fail,
    Skipped { reason: String },
}

#[derive(Debug, Clone)]
pub struct FixtureResult {
    pub name: String,
    pub status: FixtureStatus,
    pub expected: String,
    pub computed: String,
}

impl FixtureResult {
    pub fn passed(&self) -> bool {
        !matches!(self.status, FixtureStatus::Fail)
    }
}

/// Parse a quoted decimal ("0.101788", "1.5643...e-100") into its exact
/// rational value and the place value of its last digit.
fn parse_quoted(quoted: &str) -> (BigRational, BigRational) {
    let (mantissa, exp) = match quoted.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().expect("valid exponent")),
        None => (quoted, 0),
    };
    let value: Scalar = mantissa.parse().expect("valid decimal literal");
    let frac_digits = mantissa
        .split_once('.')
        .map(|(_, f)| f.len() as i64)
        .unwrap_or(0);
    let place = exp - frac_digits;
    let pow = |e: i64| -> BigRational {
        let ten = BigRational::from_integer(10.into());
        let mut acc = BigRational::from_integer(1.into());
        for _ in 0..e.abs() {
            acc = if e >= 0 { acc * &ten } else { acc / &ten };
        }
        acc
    };
    (value.as_rational() * pow(exp), pow(place))
}

/// A computed value matches a quoted decimal when it lies within half
/// an ulp of the quote's last digit.
pub fn matches_quoted_decimal(value: &Scalar, quoted: &str) -> bool {
    let (q, place) = parse_quoted(quoted);
    let diff = (value - &Scalar::Rational(q)).abs();
    let half_ulp = Scalar::Rational(place / BigRational::from_integer(2.into()));
    diff <= half_ulp
}

fn s(v: &str) -> Scalar {
    v.parse().unwrap()
}

fn sv(vals: &[&str]) -> Vec<Scalar> {
    vals.iter().map(|v| s(v)).collect()
}

fn record(results: &mut Vec<FixtureResult>, name: &str, expected: String, computed: String, ok: bool) {
    results.push(FixtureResult {
        name: name.to_string(),
        status: if ok { FixtureStatus::Pass } else { FixtureStatus::Fail },
        expected,
        computed,
    });
}

fn skip(results: &mut Vec<FixtureResult>, name: &str, expected: String, reason: &str) {
    results.push(FixtureResult {
        name: name.to_string(),
        status: FixtureStatus::Skipped {
            reason: reason.to_string(),
        },
        expected,
        computed: "-".to_string(),
    });
}

fn points_of(r: &crate::solver::QuantizationResult) -> Vec<Vec<Scalar>> {
    r.optima.iter().map(|cb| cb.points.clone()).collect()
}

fn fmt_points(points: &[Scalar]) -> String {
    let inner: Vec<String> = points.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

fn exact_codebook_fixture(
    results: &mut Vec<FixtureResult>,
    name: &str,
    dist: &DiscreteDistribution,
    n: usize,
    expected_points: &[Scalar],
    expected_v: &Scalar,
) {
    let r = solve(dist, n, Mode::All).expect("finite solve");
    let ok = points_of(&r).contains(&expected_points.to_vec()) && r.distortion == *expected_v;
    record(
        results,
        name,
        format!("{} V={}", fmt_points(expected_points), expected_v),
        format!(
            "{} V={}",
            fmt_points(&r.codebook().points),
            r.distortion
        ),
        ok,
    );
}

fn uniform6() -> DiscreteDistribution {
    make_finite((1..=6).map(Scalar::from_int).collect(), vec![s("1/6"); 6]).unwrap()
}

fn truncated(m: usize, x: &str) -> DiscreteDistribution {
    DiscreteDistribution::geometric_truncated(m, s(x).as_rational()).unwrap()
}

/// Run the whole fixture suite at the given float precision.
pub fn run_all(precision: u32) -> Vec<FixtureResult> {
    let mut out = Vec::new();

    // Uniform support {1..6}: all six optimal codebooks.
    let d = uniform6();
    let uniform_expected: Vec<(usize, Vec<Scalar>, Scalar)> = vec![
        (1, sv(&["7/2"]), s("35/12")),
        (2, sv(&["2", "5"]), s("2/3")),
        (3, sv(&["3/2", "7/2", "11/2"]), s("1/4")),
        (4, sv(&["3/2", "7/2", "5", "6"]), s("1/6")),
        (5, sv(&["3/2", "3", "4", "5", "6"]), s("1/12")),
        (6, sv(&["1", "2", "3", "4", "5", "6"]), s("0")),
    ];
    for (n, points, v) in &uniform_expected {
        exact_codebook_fixture(&mut out, &format!("uniform6 n={}", n), &d, *n, points, v);
    }
    let count = count_optima(&d, 5).expect("count");
    record(
        &mut out,
        "uniform6 n=5 optima count",
        "5".into(),
        count.to_string(),
        count == 5,
    );

    // Truncated geometric, x = 1/2.
    let d = truncated(6, "1/2");
    for (n, points, v) in [
        (2usize, sv(&["4/3", "31/8"]), s("341/768")),
        (3, sv(&["1", "7/3", "19/4"]), s("65/384")),
        (4, sv(&["1", "2", "10/3", "11/2"]), s("11/192")),
        (5, sv(&["1", "2", "3", "4", "11/2"]), s("1/64")),
    ] {
        exact_codebook_fixture(
            &mut out,
            &format!("truncated(6, 1/2) n={}", n),
            &d,
            n,
            &points,
            &v,
        );
    }

    // Truncated geometric, x = 7/10.
    let d = truncated(6, "7/10");
    for (n, points, v) in [
        (2usize, sv(&["1", "24251/10000"]), s("174296997/1000000000")),
        (3, sv(&["1", "2", "3417/1000"]), s("4779999/100000000")),
        (4, sv(&["1", "2", "3", "439/100"]), s("112833/10000000")),
        (5, sv(&["1", "2", "3", "4", "53/10"]), s("1701/1000000")),
    ] {
        exact_codebook_fixture(
            &mut out,
            &format!("truncated(6, 7/10) n={}", n),
            &d,
            n,
            &points,
            &v,
        );
    }

    // Reciprocal family: quoted decimals for V_1..V_6.
    let d = DiscreteDistribution::dyadic_reciprocal();
    let quoted = [
        (1usize, "0.101788"),
        (2, "0.0076288597"),
        (3, "0.00116437359"),
        (4, "0.0002418966477"),
        (5, "0.00005991266593"),
        (6, "0.00001658886625"),
    ];
    for (n, q) in quoted {
        let r = solve_infinite(&d, n, Mode::Single, precision).expect("tail solve");
        let ok = matches_quoted_decimal(&r.distortion, q);
        record(
            &mut out,
            &format!("reciprocal V_{}", n),
            q.to_string(),
            r.distortion.decimal_string(20),
            ok,
        );
    }
    let checks = verify_reciprocal_structure(&[1, 2, 3, 4, 5, 6, 7, 8], precision)
        .expect("structure check");
    let ok = checks.iter().all(|c| c.matches && c.midpoints_in_bounds);
    record(
        &mut out,
        "reciprocal structure n=1..8 (pair cell from n=6)",
        "all levels match".into(),
        if ok { "all levels match".into() } else { "mismatch".into() },
        ok,
    );

    // Reciprocal n=300 and the n=301 probe need deep precision.
    const DEEP: &str = "1.564317642582409606174128e-100";
    if precision < 512 {
        skip(
            &mut out,
            "reciprocal V_300",
            DEEP.into(),
            "precision below 512 bits",
        );
        skip(
            &mut out,
            "reciprocal structure n=301 (probe)",
            "paired form optimal".into(),
            "precision below 512 bits",
        );
    } else {
        let r = solve_infinite(&d, 300, Mode::Single, precision).expect("tail solve");
        let mut cuts: Vec<usize> = (1..=298).collect();
        cuts.push(300);
        let ok = matches_quoted_decimal(&r.distortion, DEEP) && r.codebook().cuts == cuts;
        record(
            &mut out,
            "reciprocal V_300",
            DEEP.into(),
            r.distortion.decimal_string(25),
            ok,
        );
        let probe = verify_reciprocal_structure(&[301], precision).expect("probe");
        record(
            &mut out,
            "reciprocal structure n=301 (probe)",
            "paired form optimal".into(),
            if probe[0].matches { "paired form optimal".into() } else { "different".into() },
            probe[0].matches,
        );
    }

    // Naturals family: exact values and the two known optimal shapes.
    let d = DiscreteDistribution::geometric_naturals();
    for (n, v, optima) in [(1usize, s("2"), 1usize), (2, s("2/3"), 1), (3, s("1/3"), 2)] {
        let r = solve_infinite(&d, n, Mode::All, precision).expect("tail solve");
        let ok = r.distortion == v && r.optima.len() == optima;
        record(
            &mut out,
            &format!("naturals V_{}", n),
            format!("{} ({} optima)", v, optima),
            format!("{} ({} optima)", r.distortion, r.optima.len()),
            ok,
        );
    }
    let checks = verify_naturals_structure(12).expect("structure check");
    let ok = checks
        .iter()
        .all(|c| c.matches_closed_form && c.contains_forced_prefix && c.exactly_two_structures);
    record(
        &mut out,
        "naturals V_n = 2^(3-n)/3 with two optima, n=4..12",
        "all levels match".into(),
        if ok { "all levels match".into() } else { "mismatch".into() },
        ok,
    );

    // Inverse design thresholds.
    for (name, family, expected) in [
        ("inverse truncated m=6", InverseFamily::Truncated { m: 6 }, "0.6628057756"),
        ("inverse truncated m=7", InverseFamily::Truncated { m: 7 }, "0.6654212000"),
        ("inverse infinite", InverseFamily::Infinite, "0.6666666667"),
    ] {
        let f = feasible_x(family, 10).expect("feasible");
        let got = f.lower_string();
        record(&mut out, name, expected.into(), got.clone(), got == expected);
    }

    // Conjecture samples.
    let pass = verify_conjecture(InverseFamily::Truncated { m: 6 }, &s("7/10").as_rational(), 6)
        .expect("conjecture")
        .all_pass();
    record(
        &mut out,
        "conjectured structure at x=7/10 (m=6)",
        "all levels".into(),
        if pass { "all levels".into() } else { "failure".into() },
        pass,
    );
    let rep = verify_conjecture(InverseFamily::Truncated { m: 6 }, &s("1/2").as_rational(), 6)
        .expect("conjecture");
    let ok = !rep.all_pass() && rep.failures().contains(&2);
    record(
        &mut out,
        "conjectured structure fails at x=1/2 (m=6, n=2)",
        "n=2 differs".into(),
        format!("failures at n={:?}", rep.failures()),
        ok,
    );

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_decimal_matching() {
        assert!(matches_quoted_decimal(&s("101788/1000000"), "0.101788"));
        assert!(matches_quoted_decimal(&s("1017879/10000000"), "0.101788"));
        assert!(!matches_quoted_decimal(&s("101789/1000000"), "0.101788"));
        // Scientific notation with an offset exponent.
        let v = s("15643176425824096061741279/10000000000000000000000000")
            * Scalar::pow2_rational(0);
        let tiny = &v / &s("10000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000"); // 1e-100
        assert!(matches_quoted_decimal(
            &tiny,
            "1.564317642582409606174128e-100"
        ));
    }

    #[test]
    fn suite_passes_at_default_precision() {
        let results = run_all(crate::scalar::DEFAULT_PRECISION);
        for r in &results {
            assert!(
                r.passed(),
                "{}: expected {}, computed {}",
                r.name,
                r.expected,
                r.computed
            );
        }
        // The deep fixtures are skipped below 512 bits.
        assert!(results
            .iter()
            .any(|r| matches!(r.status, FixtureStatus::Skipped { .. })));
    }
}
