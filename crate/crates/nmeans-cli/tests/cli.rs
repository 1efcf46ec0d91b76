//! End-to-end tests of the `nmeans` binary: spec ingestion, output
//! formats, exit codes, and determinism.

use std::io::Write;
use std::process::{Command, Output};

use nmeans::scalar::Scalar;
use nmeans::{PrefixSumCache, RangeEnd};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nmeans"))
}

struct SpecFile(tempfile::NamedTempFile);

impl SpecFile {
    fn as_str(&self) -> &str {
        self.0.path().to_str().unwrap()
    }
}

fn write_spec(content: &str) -> SpecFile {
    let mut f = tempfile::NamedTempFile::new().expect("temp file");
    f.write_all(content.as_bytes()).expect("write spec");
    f.flush().expect("flush spec");
    SpecFile(f)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn solve_truncated_three_means_json() {
    let spec = write_spec(r#"{"type":"family","name":"geometric_truncated","m":6,"x":"1/2"}"#);
    let out = run(&["solve", spec.as_str(), "--n", "3"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["distortion"]["rational"], "65/384");
    assert_eq!(json["exact"], true);
    let codebook: Vec<&str> = json["optima"][0]["codebook"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(codebook, vec!["1", "7/3", "19/4"]);
}

#[test]
fn solve_single_atom() {
    let spec = write_spec(r#"{"type":"finite","points":["5"],"masses":["1"]}"#);
    let out = run(&["solve", spec.as_str(), "--n", "1"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["distortion"]["rational"], "0");
    assert_eq!(json["optima"][0]["codebook"][0], "5");
}

#[test]
fn invalid_spec_exits_2_with_diagnostic() {
    let spec = write_spec(r#"{"type":"finite","points":["1","1"],"masses":["1/2","1/2"]}"#);
    let out = run(&["solve", spec.as_str(), "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("duplicate support point"), "stderr: {}", err);

    let spec = write_spec(r#"{"type":"family","name":"geometric_truncated","m":6}"#);
    let out = run(&["solve", spec.as_str(), "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("\"x\""), "stderr: {}", err);
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["solve", "/nonexistent/path.json", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn horizon_cap_exits_3() {
    let spec = write_spec(r#"{"type":"family","name":"geometric_naturals"}"#);
    let out = run(&["solve", spec.as_str(), "--n", "2", "--horizon-cap", "16"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("horizon"), "stderr: {}", err);
}

#[test]
fn error_curve_naturals_csv() {
    let spec = write_spec(r#"{"type":"family","name":"geometric_naturals"}"#);
    let out = run(&["error-curve", spec.as_str(), "--n-min", "1", "--n-max", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,distortion,codebook_size,num_optima");
    assert_eq!(lines[1], "1,2,1,1");
    assert_eq!(lines[2], "2,2/3,2,1");
    assert_eq!(lines[3], "3,1/3,3,2");
    assert_eq!(lines[4], "4,1/6,4,2");
    assert_eq!(lines[5], "5,1/12,5,2");
    assert_eq!(lines[6], "6,1/24,6,2");
}

#[test]
fn error_curve_truncated_reaches_zero() {
    let spec = write_spec(r#"{"type":"family","name":"geometric_truncated","m":6,"x":"7/10"}"#);
    let out = run(&["error-curve", spec.as_str(), "--n-min", "2", "--n-max", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "2,174296997/1000000000,2,1");
    assert_eq!(lines[2], "3,4779999/100000000,3,1");
    assert_eq!(lines[3], "4,112833/10000000,4,1");
    assert_eq!(lines[4], "5,1701/1000000,5,1");
    assert_eq!(lines[5], "6,0,6,1");
}

#[test]
fn inverse_thresholds() {
    let out = run(&["inverse", "--family", "truncated", "--m", "6"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["lower"], "0.6628057756");
    assert_eq!(json["lower_feasible"], "0.6628057757");
    let out = run(&["inverse", "--family", "infinite"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["lower"], "0.6666666667");
}

#[test]
fn inverse_argument_validation() {
    let out = run(&["inverse", "--family", "truncated"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["inverse", "--family", "infinite", "--m", "6"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_skips_deep_fixture_below_512_bits() {
    let out = run(&["verify", "--precision", "128"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("SKIP reciprocal V_300"));
    assert!(text.contains("0 failed"));
}

#[test]
fn deterministic_output() {
    let spec = write_spec(r#"{"type":"family","name":"dyadic_reciprocal"}"#);
    let a = run(&["solve", spec.as_str(), "--n", "4", "--all", "--precision", "192"]);
    let b = run(&["solve", spec.as_str(), "--n", "4", "--all", "--precision", "192"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn float_output_round_trips_within_two_ulps() {
    // Reparse the emitted reciprocal-family result and recompute the
    // distortion cell by cell from the parsed code points.
    let spec = write_spec(r#"{"type":"family","name":"dyadic_reciprocal"}"#);
    let out = run(&["solve", spec.as_str(), "--n", "3", "--precision", "192"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let reported: Scalar = json["distortion"]["decimal"]
        .as_str()
        .unwrap()
        .parse()
        .unwrap();
    let cuts: Vec<usize> = json["optima"][0]["cuts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let mut code: Vec<Scalar> = json["optima"][0]["codebook"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().parse().unwrap())
        .collect();
    assert!(json["optima"][0]["tail"].as_bool().unwrap());
    // Code points arrive ascending; cells are in descending-point
    // order for this family.
    code.reverse();
    let dist = nmeans::DiscreteDistribution::dyadic_reciprocal();
    let mut cache = PrefixSumCache::new(dist, 192);
    let mut recomputed = Scalar::zero();
    let mut start = 1usize;
    for (t, c) in code.iter().enumerate() {
        let end = if t < cuts.len() {
            RangeEnd::At(cuts[t])
        } else {
            RangeEnd::Infinity
        };
        let er = cache.er(start, end).unwrap();
        let m0 = cache.mass(start, end).unwrap();
        let av = cache.av(start, end).unwrap();
        recomputed = &recomputed + &(&er + &(&m0 * &(&av - c).square()));
        if t < cuts.len() {
            start = cuts[t] + 1;
        }
    }
    // Two units in the last printed digit: the reparsed values cannot
    // carry more precision than the emitted decimals.
    let digits = nmeans::scalar::justified_digits(192) as i64;
    let mut ulp = Scalar::one();
    for _ in 0..digits - 1 {
        ulp = &ulp / &Scalar::from_int(10);
    }
    let tol = &(&reported.abs() * &ulp) * &Scalar::from_int(2);
    assert!(
        (&recomputed - &reported).abs() <= tol,
        "recomputed {} vs reported {}",
        recomputed.decimal_string(30),
        reported.decimal_string(30)
    );
}

#[test]
fn table_format_mentions_exactness() {
    let spec = write_spec(r#"{"type":"family","name":"geometric_truncated","m":6,"x":"1/2"}"#);
    let out = run(&["solve", spec.as_str(), "--n", "2", "--format", "table"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("V = 341/768"));
    assert!(text.contains("exact"));
}

#[test]
fn stdin_is_not_consumed() {
    // Guard against the binary blocking on stdin when given all flags.
    let spec = write_spec(r#"{"type":"family","name":"geometric_naturals"}"#);
    let mut child = bin()
        .args(["solve", spec.as_str(), "--n", "2"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
}
