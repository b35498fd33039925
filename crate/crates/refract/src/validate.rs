//! Analytic-vs-Monte-Carlo validation harness.
//!
//! A config lists cases (model + query + path budget + scheme); each case
//! is run concurrently, compared at `|analytic - mean| <= max(3 stderr,
//! scheme band)`, and assembled into a deterministic report sorted by case
//! id. Identical (config, seed) inputs produce identical report bodies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mc::{estimate_occupation_lt, McConfig, Scheme};
use crate::model::ModelSpec;
use crate::occupation::{occupation_lt, LtOptions, OccupationQuery};
use crate::{Error, Result};

/// Acceptance band absorbing the Euler discretisation bias.
pub const EULER_BAND: f64 = 2e-2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuerySpec {
    pub theta: f64,
    /// Absent means -infinity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    /// Absent means +infinity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
}

impl QuerySpec {
    pub fn to_query(&self) -> OccupationQuery {
        OccupationQuery::new(
            self.theta,
            self.lo.unwrap_or(f64::NEG_INFINITY),
            self.hi.unwrap_or(f64::INFINITY),
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeSpec {
    Exact,
    Euler,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub model: ModelSpec,
    pub query: QuerySpec,
    pub n: usize,
    pub scheme: SchemeSpec,
    /// Euler step (required when scheme = euler).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Override of the default comparison band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
    /// Replaces the analytic value; used to test harness sensitivity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_override: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub cases: Vec<CaseSpec>,
}

impl ValidationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Config(format!(
                "malformed validation config at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: String,
    pub query: QuerySpec,
    pub analytic: Option<f64>,
    pub mc_mean: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub z_score: Option<f64>,
    pub band: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tool_version: String,
    pub seed: u64,
    pub n_pass: usize,
    pub n_fail: usize,
    pub cases: Vec<CaseRecord>,
    /// Echo of the input configuration.
    pub config: ValidationConfig,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.n_fail == 0
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_case(case: &CaseSpec, seed: u64, idx: usize) -> CaseRecord {
    let band = case.band.unwrap_or(match case.scheme {
        SchemeSpec::Exact => 0.0,
        SchemeSpec::Euler => EULER_BAND,
    });
    let fail = |msg: String| CaseRecord {
        id: case.id.clone(),
        query: case.query.clone(),
        analytic: None,
        mc_mean: None,
        mc_stderr: None,
        z_score: None,
        band,
        pass: false,
        error: Some(msg),
    };

    let model = match case.model.clone().build() {
        Ok(m) => m,
        Err(e) => return fail(e.to_string()),
    };
    let query = case.query.to_query();
    let analytic = match case.analytic_override {
        Some(v) => v,
        None => match occupation_lt(&model, &query, &LtOptions::default()) {
            Ok(r) => r.value,
            Err(e) => return fail(format!("analytic evaluation failed: {e}")),
        },
    };
    let scheme = match case.scheme {
        SchemeSpec::Exact => Scheme::ExactBv,
        SchemeSpec::Euler => match case.h {
            Some(h) => Scheme::Euler { h },
            None => return fail("euler scheme requires a step h".into()),
        },
    };
    let mc_config = McConfig::new(case.n, scheme, splitmix64(seed ^ idx as u64));
    let est = match estimate_occupation_lt(&model, &query, &mc_config) {
        Ok(e) => e,
        Err(e) => return fail(format!("simulation failed: {e}")),
    };
    let diff = (analytic - est.mean).abs();
    let z = if est.stderr > 0.0 { (est.mean - analytic) / est.stderr } else { 0.0 };
    CaseRecord {
        id: case.id.clone(),
        query: case.query.clone(),
        analytic: Some(analytic),
        mc_mean: Some(est.mean),
        mc_stderr: Some(est.stderr),
        z_score: Some(z),
        band,
        pass: diff <= (3.0 * est.stderr).max(band),
        error: None,
    }
}

/// Run every case of the config; records are sorted by case id so the
/// report body is stable under concurrency.
pub fn run_validation(config: &ValidationConfig, seed: u64) -> ValidationReport {
    let mut cases: Vec<CaseRecord> = config
        .cases
        .par_iter()
        .enumerate()
        .map(|(idx, case)| run_case(case, seed, idx))
        .collect();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let n_pass = cases.iter().filter(|c| c.pass).count();
    ValidationReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        n_pass,
        n_fail: cases.len() - n_pass,
        cases,
        config: config.clone(),
    }
}

/// The validation cases shipped as the default config: exact-scheme checks
/// on the Cramer-Lundberg fixture and Euler checks on the Brownian one.
pub fn default_validation_config() -> ValidationConfig {
    let cl1 = ModelSpec::from_model(&crate::fixtures::cl1_refracted(0.5, 0.0));
    let bm1 = ModelSpec::from_model(&crate::fixtures::bm1_refracted(0.5, 0.0));
    let mut cases = Vec::new();
    for theta in [0.5, 2.0] {
        cases.push(CaseSpec {
            id: format!("cl1-d05-two-sided-th{theta}"),
            model: cl1.clone(),
            query: QuerySpec { theta, lo: Some(-2.0), hi: Some(2.0) },
            n: 200_000,
            scheme: SchemeSpec::Exact,
            h: None,
            band: None,
            analytic_override: None,
        });
        cases.push(CaseSpec {
            id: format!("cl1-d05-up-th{theta}"),
            model: cl1.clone(),
            query: QuerySpec { theta, lo: None, hi: Some(2.0) },
            n: 200_000,
            scheme: SchemeSpec::Exact,
            h: None,
            band: None,
            analytic_override: None,
        });
        cases.push(CaseSpec {
            id: format!("cl1-d05-down-th{theta}"),
            model: cl1.clone(),
            query: QuerySpec { theta, lo: Some(-2.0), hi: None },
            n: 200_000,
            scheme: SchemeSpec::Exact,
            h: None,
            band: None,
            analytic_override: None,
        });
        cases.push(CaseSpec {
            id: format!("cl1-d05-total-th{theta}"),
            model: cl1.clone(),
            query: QuerySpec { theta, lo: None, hi: None },
            n: 200_000,
            scheme: SchemeSpec::Exact,
            h: None,
            band: None,
            analytic_override: None,
        });
    }
    for theta in [1.0, 2.0] {
        cases.push(CaseSpec {
            id: format!("bm1-d05-two-sided-th{theta}"),
            model: bm1.clone(),
            query: QuerySpec { theta, lo: Some(-1.0), hi: Some(1.0) },
            n: 100_000,
            scheme: SchemeSpec::Euler,
            h: Some(1e-3),
            band: None,
            analytic_override: None,
        });
    }
    cases.push(CaseSpec {
        id: "bm1-d05-total-th2".into(),
        model: bm1,
        query: QuerySpec { theta: 2.0, lo: None, hi: None },
        n: 100_000,
        scheme: SchemeSpec::Euler,
        h: Some(1e-3),
        band: None,
        analytic_override: None,
    });
    ValidationConfig { cases }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn small_config() -> ValidationConfig {
        ValidationConfig {
            cases: vec![CaseSpec {
                id: "cl1-quick".into(),
                model: ModelSpec::from_model(&fixtures::cl1_refracted(0.5, 0.0)),
                query: QuerySpec { theta: 0.5, lo: Some(-1.5), hi: Some(1.5) },
                n: 20_000,
                scheme: SchemeSpec::Exact,
                h: None,
                band: None,
                analytic_override: None,
            }],
        }
    }

    #[test]
    fn empty_config_passes() {
        let report = run_validation(&ValidationConfig { cases: vec![] }, 7);
        assert!(report.all_passed());
        assert_eq!(report.cases.len(), 0);
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = small_config();
        let r1 = run_validation(&cfg, 7);
        let r2 = run_validation(&cfg, 7);
        let t1 = serde_json::to_string(&r1).unwrap();
        let t2 = serde_json::to_string(&r2).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn quick_case_passes() {
        let report = run_validation(&small_config(), 7);
        assert!(report.all_passed(), "{:?}", report.cases);
    }

    #[test]
    fn wrong_constant_is_detected() {
        let mut cfg = small_config();
        // Perturb the expected value far beyond the Monte Carlo noise.
        cfg.cases[0].analytic_override = Some(0.99);
        let report = run_validation(&cfg, 7);
        assert!(!report.all_passed());
        let z = report.cases[0].z_score.unwrap();
        assert!(z.abs() > 3.0, "z = {z}");
    }

    #[test]
    fn analytic_failure_fails_case_not_process() {
        let mut cfg = small_config();
        // Total occupation with a downward-drifting Y is a domain error.
        cfg.cases[0].model.delta = 1.5;
        cfg.cases[0].query = QuerySpec { theta: 0.5, lo: None, hi: None };
        let report = run_validation(&cfg, 7);
        assert!(!report.all_passed());
        assert!(report.cases[0].error.is_some());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = default_validation_config();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ValidationConfig::from_json(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&cfg).unwrap());
    }

    #[test]
    fn malformed_config_reports_position() {
        let err = ValidationConfig::from_json("{\"cases\": [}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") && msg.contains("column"), "{msg}");
    }
}
