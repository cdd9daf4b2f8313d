//! Machine-readable run reports.

use std::collections::BTreeMap;

use nholo_core::lagrange::GeodesicReport;
use serde::Serialize;
use serde_json::Value;

use crate::checks::CheckResult;
use crate::config::GeodesicRequest;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the configuration text followed by the command-line overrides.
    pub config_hash: String,
    pub mode: &'static str,
    pub dims: [usize; 2],
    pub seed: u64,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub index: usize,
    pub coords: Vec<f64>,
    pub objects: BTreeMap<&'static str, Value>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    pub tau: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicResult {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub tau_span: [f64; 2],
    pub steps: usize,
    pub trajectory: Vec<Sample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub el_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl GeodesicResult {
    fn base(req: &GeodesicRequest) -> Self {
        Self {
            x0: req.x0.clone(),
            y0: req.y0.clone(),
            tau_span: [req.tau_span.0, req.tau_span.1],
            steps: req.steps,
            trajectory: Vec::new(),
            el_residual: None,
            energy_drift: None,
            constraint_residual: None,
            error: None,
        }
    }

    pub fn from_report(req: &GeodesicRequest, rep: GeodesicReport) -> Self {
        Self {
            trajectory: rep
                .trajectory
                .into_iter()
                .map(|s| Sample {
                    tau: s.tau,
                    x: s.x,
                    y: s.y,
                })
                .collect(),
            el_residual: Some(rep.el_residual),
            energy_drift: Some(rep.energy_drift),
            constraint_residual: Some(rep.constraint_residual),
            ..Self::base(req)
        }
    }

    pub fn failed(req: &GeodesicRequest, error: String) -> Self {
        Self {
            error: Some(error),
            ..Self::base(req)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub points: usize,
    pub checks: usize,
    pub failed_checks: usize,
    pub errors: usize,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    pub points: Vec<PointReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub geodesics: Vec<GeodesicResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl Report {
    pub fn error_count(&self) -> usize {
        self.points.iter().map(|p| p.errors.len()).sum::<usize>()
            + self.geodesics.iter().filter(|g| g.error.is_some()).count()
    }

    pub fn failed_checks(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}
