//! JSON wire formats: distribution specs in, solver results out.
//!
//! Distribution spec:
//! `{"type":"finite","points":["1","2"],"masses":["1/2","1/2"]}` or
//! `{"type":"family","name":"geometric_truncated","m":6,"x":"1/2"}`.
//! Numbers are strings: `"p/q"` rationals, integers, or plain decimals
//! (parsed exactly).
//!
//! Result: `{"n":..,"distortion":{"rational":..,"decimal":..},
//! "optima":[{"codebook":[..],"cuts":[..],"ties":[..],"tail":bool}],
//! "exact":bool,"precision_bits":..}`. Exact values carry both the
//! `p/q` form and a decimal preview; floats carry only the decimal,
//! printed to the precision-justified digit count.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distribution::{make_finite, DiscreteDistribution, DistError};
use crate::scalar::Scalar;
use crate::solver::QuantizationResult;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Finite {
        points: Vec<String>,
        masses: Vec<String>,
    },
    Family {
        name: FamilyName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    GeometricNaturals,
    DyadicReciprocal,
    GeometricTruncated,
    GeometricInfinite,
}

#[derive(Debug)]
pub enum SpecError {
    Json(serde_json::Error),
    BadScalar { field: String, literal: String },
    MissingField { field: String },
    UnexpectedField { field: String },
    Dist(DistError),
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Json(e) => write!(f, "malformed spec JSON: {}", e),
            SpecError::BadScalar { field, literal } => {
                write!(f, "field {:?}: invalid number literal {:?}", field, literal)
            }
            SpecError::MissingField { field } => {
                write!(f, "family spec is missing required field {:?}", field)
            }
            SpecError::UnexpectedField { field } => {
                write!(f, "field {:?} is not accepted by this family", field)
            }
            SpecError::Dist(e) => write!(f, "invalid distribution: {}", e),
        }
    }
}

impl std::error::Error for SpecError {}

impl From<serde_json::Error> for SpecError {
    fn from(e: serde_json::Error) -> Self {
        SpecError::Json(e)
    }
}

impl From<DistError> for SpecError {
    fn from(e: DistError) -> Self {
        SpecError::Dist(e)
    }
}

fn parse_scalar_field(field: &str, literal: &str) -> Result<Scalar, SpecError> {
    literal.parse().map_err(|_| SpecError::BadScalar {
        field: field.to_string(),
        literal: literal.to_string(),
    })
}

/// Build a distribution from a parsed spec.
pub fn dist_from_spec(spec: &DistSpec) -> Result<DiscreteDistribution, SpecError> {
    match spec {
        DistSpec::Finite { points, masses } => {
            let points = points
                .iter()
                .map(|s| parse_scalar_field("points", s))
                .collect::<Result<Vec<_>, _>>()?;
            let masses = masses
                .iter()
                .map(|s| parse_scalar_field("masses", s))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(make_finite(points, masses)?)
        }
        DistSpec::Family { name, m, x } => {
            let need_x = |x: &Option<String>| -> Result<Scalar, SpecError> {
                let literal = x.as_ref().ok_or(SpecError::MissingField {
                    field: "x".to_string(),
                })?;
                parse_scalar_field("x", literal)
            };
            let reject_m = |m: &Option<usize>| -> Result<(), SpecError> {
                if m.is_some() {
                    Err(SpecError::UnexpectedField {
                        field: "m".to_string(),
                    })
                } else {
                    Ok(())
                }
            };
            let reject_x = |x: &Option<String>| -> Result<(), SpecError> {
                if x.is_some() {
                    Err(SpecError::UnexpectedField {
                        field: "x".to_string(),
                    })
                } else {
                    Ok(())
                }
            };
            match name {
                FamilyName::GeometricNaturals => {
                    reject_m(m)?;
                    reject_x(x)?;
                    Ok(DiscreteDistribution::geometric_naturals())
                }
                FamilyName::DyadicReciprocal => {
                    reject_m(m)?;
                    reject_x(x)?;
                    Ok(DiscreteDistribution::dyadic_reciprocal())
                }
                FamilyName::GeometricTruncated => {
                    let m = m.ok_or(SpecError::MissingField {
                        field: "m".to_string(),
                    })?;
                    let x = need_x(x)?;
                    Ok(DiscreteDistribution::geometric_truncated(
                        m,
                        x.as_rational(),
                    )?)
                }
                FamilyName::GeometricInfinite => {
                    reject_m(m)?;
                    let x = need_x(x)?;
                    Ok(DiscreteDistribution::geometric_infinite(x.as_rational())?)
                }
            }
        }
    }
}

/// Parse a distribution spec from JSON text.
pub fn parse_dist_spec(json: &str) -> Result<DiscreteDistribution, SpecError> {
    let spec: DistSpec = serde_json::from_str(json)?;
    dist_from_spec(&spec)
}

/// A number in result JSON: `p/q` (exact values only) plus a decimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueJson {
    pub rational: Option<String>,
    pub decimal: String,
}

impl ValueJson {
    pub fn from_scalar(s: &Scalar) -> ValueJson {
        ValueJson {
            rational: s.rational_string(),
            decimal: s.decimal_string(s.justified_digits()),
        }
    }

    /// Reparse into an exact scalar (the `p/q` form when present).
    pub fn to_scalar(&self) -> Result<Scalar, SpecError> {
        let literal = self.rational.as_deref().unwrap_or(&self.decimal);
        parse_scalar_field("value", literal)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimumJson {
    pub codebook: Vec<String>,
    pub cuts: Vec<usize>,
    pub ties: Vec<usize>,
    pub tail: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultJson {
    pub n: usize,
    pub distortion: ValueJson,
    pub optima: Vec<OptimumJson>,
    pub exact: bool,
    pub precision_bits: Option<u32>,
}

fn scalar_to_string(s: &Scalar) -> String {
    match s.rational_string() {
        Some(r) => r,
        None => s.decimal_string(s.justified_digits()),
    }
}

pub fn result_to_json(r: &QuantizationResult) -> ResultJson {
    ResultJson {
        n: r.n,
        distortion: ValueJson::from_scalar(&r.distortion),
        optima: r
            .optima
            .iter()
            .map(|cb| OptimumJson {
                codebook: cb.points.iter().map(scalar_to_string).collect(),
                cuts: cb.cuts.clone(),
                ties: cb.ties.clone(),
                tail: cb.tail,
            })
            .collect(),
        exact: r.exact,
        precision_bits: r.precision_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{distortion_of, solve, Mode};

    #[test]
    fn parse_finite_spec() {
        let d = parse_dist_spec(
            r#"{"type":"finite","points":["1","2","3","4","5","6"],
                "masses":["1/6","1/6","1/6","1/6","1/6","1/6"]}"#,
        )
        .unwrap();
        assert_eq!(d.size(), Some(6));
    }

    #[test]
    fn parse_family_specs() {
        let d = parse_dist_spec(r#"{"type":"family","name":"geometric_naturals"}"#).unwrap();
        assert!(d.is_infinite());
        let d = parse_dist_spec(r#"{"type":"family","name":"geometric_truncated","m":6,"x":"1/2"}"#)
            .unwrap();
        assert_eq!(d.size(), Some(6));
        let d = parse_dist_spec(r#"{"type":"family","name":"geometric_infinite","x":"0.7"}"#)
            .unwrap();
        assert!(d.is_infinite());
    }

    #[test]
    fn spec_validation_errors() {
        assert!(matches!(
            parse_dist_spec(r#"{"type":"family","name":"geometric_truncated","m":6}"#),
            Err(SpecError::MissingField { .. })
        ));
        assert!(matches!(
            parse_dist_spec(r#"{"type":"family","name":"geometric_naturals","x":"1/2"}"#),
            Err(SpecError::UnexpectedField { .. })
        ));
        assert!(matches!(
            parse_dist_spec(r#"{"type":"finite","points":["1"],"masses":["1/x"]}"#),
            Err(SpecError::BadScalar { .. })
        ));
        assert!(matches!(
            parse_dist_spec(r#"{"type":"finite","points":["1","1"],"masses":["1/2","1/2"]}"#),
            Err(SpecError::Dist(_))
        ));
        assert!(matches!(
            parse_dist_spec(r#"{"type":"nonsense"}"#),
            Err(SpecError::Json(_))
        ));
    }

    #[test]
    fn result_round_trip_exact() {
        let d = parse_dist_spec(r#"{"type":"family","name":"geometric_truncated","m":6,"x":"1/2"}"#)
            .unwrap();
        let r = solve(&d, 3, Mode::All).unwrap();
        let json = serde_json::to_string(&result_to_json(&r)).unwrap();
        let parsed: ResultJson = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.n, 3);
        assert!(parsed.exact);
        let code: Vec<Scalar> = parsed.optima[0]
            .codebook
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let recomputed = distortion_of(&d, &code).unwrap();
        let reported = ValueJson {
            rational: parsed.distortion.rational.clone(),
            decimal: parsed.distortion.decimal.clone(),
        }
        .to_scalar()
        .unwrap();
        assert_eq!(recomputed, reported);
        assert_eq!(reported, r.distortion);
    }

    #[test]
    fn spec_json_shapes_serialize_back() {
        let spec = DistSpec::Family {
            name: FamilyName::GeometricTruncated,
            m: Some(6),
            x: Some("1/2".to_string()),
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            s,
            r#"{"type":"family","name":"geometric_truncated","m":6,"x":"1/2"}"#
        );
    }
}
