//! The property suite run by `verify`.

use ndarray::Array2;
use nholo_core::charforms::{assemble_curvature_form, trace_powers, trace_square_brute_force};
use nholo_core::curvature::{
    curvature_via_commutator, curvature_via_forms_oracle, dcurvature, dtorsion, einstein_residual_of,
    ricci_scalar_einstein, torsion_via_commutator, torsion_via_forms_oracle,
};
use nholo_core::dconn::{
    canonical_field, distortion_at, levi_civita_field, metricity_residual, metricity_residual_full,
};
use nholo_core::dmetric::{assemble_ansatz, extract_nconnection};
use nholo_core::lagrange::almost_complex;
use nholo_core::nconn::nijenhuis_oracle_jets;
use nholo_core::LocalGeometry;
use serde::Serialize;

use crate::config::{GeodesicRequest, ProblemConfig, Source};
use crate::report::GeodesicResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geodesic: Option<usize>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            point: None,
            geodesic: None,
            residual,
            tolerance,
            // NaN residuals fail
            pass: residual <= tolerance,
        }
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Every pointwise check on a geometry of jet order 2.
pub fn point_checks(cfg: &ProblemConfig, geo: &LocalGeometry) -> Result<Vec<CheckResult>, String> {
    let tol = |name: &str| cfg.tolerances.get(name);
    let dims = cfg.dims;
    let (n, m) = (dims.n(), dims.m());
    let nc = geo.nconn();
    let nat = nc.at_point();
    let mut out = Vec::new();

    let mut nij = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let oracle = nijenhuis_oracle_jets(nc, i, j);
            for (a, v) in oracle.iter().enumerate() {
                nij = nij.max((nat.omega[[a, i, j]] - v).abs());
            }
        }
    }
    out.push(CheckResult::new("nijenhuis", nij, tol("nijenhuis")));

    let field = canonical_field(geo, cfg.cvv);
    let canonical = field.values();
    let met = metricity_residual(&canonical, geo);
    for (block, r) in [("hh", met.hh), ("hv", met.hv), ("vh", met.vh), ("vv", met.vv)] {
        out.push(CheckResult::new(&format!("metricity.{block}"), r, tol("metricity")));
    }

    let t = dtorsion(&canonical, &nat);
    let pure = t.hhh.iter().chain(t.vvv.iter()).fold(0.0f64, |acc, v| acc.max(v.abs()));
    out.push(CheckResult::new("torsion.pure", pure, tol("torsion_pure")));
    let t_forms = torsion_via_forms_oracle(&canonical, nc);
    let t_comm = torsion_via_commutator(&canonical, nc);
    out.push(CheckResult::new(
        "torsion.oracles",
        t.max_diff(&t_forms).max(t.max_diff(&t_comm)),
        tol("oracle"),
    ));

    let curv = dcurvature(&field, nc);
    let c_forms = curvature_via_forms_oracle(&field, nc);
    let c_comm = curvature_via_commutator(&field, nc);
    out.push(CheckResult::new(
        "curvature.oracles",
        curv.max_diff(&c_forms).max(curv.max_diff(&c_comm)),
        tol("oracle"),
    ));

    out.push(CheckResult::new(
        "distortion",
        distortion_at(geo).residual,
        tol("distortion"),
    ));
    let lc = levi_civita_field(geo).values();
    out.push(CheckResult::new(
        "levi_civita.metricity",
        metricity_residual_full(&lc, geo).max(),
        tol("metricity"),
    ));

    if let Source::Ansatz(a) = &cfg.source {
        let e = extract_nconnection(a, geo.point()).map_err(|e| e.to_string())?;
        let full = a.values(geo.point()).map_err(|e| e.to_string())?;
        let back = assemble_ansatz(&e.g, &e.h, &e.n);
        out.push(CheckResult::new(
            "ansatz.round_trip",
            max_abs_diff(&back, &full),
            tol("ansatz"),
        ));
    }

    if n == m {
        let f = almost_complex(nc).map_err(|e| e.to_string())?;
        let id = Array2::<f64>::eye(n + m);
        let adapted = &f.adapted.dot(&f.adapted) + &id;
        // exact in the adapted basis
        out.push(CheckResult::new(
            "almost_complex.adapted",
            adapted.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            0.0,
        ));
        let coord = &f.coordinate.dot(&f.coordinate) + &id;
        out.push(CheckResult::new(
            "almost_complex.coordinate",
            coord.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            tol("almost_complex"),
        ));
    }

    let r = assemble_curvature_form(&curv);
    out.push(CheckResult::new(
        "charforms.ch1",
        trace_powers(&r, 1).form.max_abs(),
        tol("ch1"),
    ));
    if n + m >= 4 {
        let diff = trace_powers(&r, 2).form.max_diff(&trace_square_brute_force(&r));
        out.push(CheckResult::new("charforms.tr2", diff, tol("tr2")));
    }

    if let Some(e) = &cfg.einstein {
        let p = geo.point();
        let lh = e.lambda_h.value_at(dims, p).map_err(|e| e.to_string())?;
        let lv = e.lambda_v.value_at(dims, p).map_err(|e| e.to_string())?;
        let (g, h) = (geo.g_values(), geo.h_values());
        let ricci = ricci_scalar_einstein(&curv, &g, &h, p).map_err(|e| e.to_string())?;
        out.push(CheckResult::new(
            "einstein",
            einstein_residual_of(&ricci, &g, &h, lh, lv).max(),
            tol("einstein"),
        ));
    }
    Ok(out)
}

/// Integrates one request and checks the Euler–Lagrange, energy and constraint residuals.
pub fn geodesic_checks(cfg: &ProblemConfig, req: &GeodesicRequest) -> (GeodesicResult, Vec<CheckResult>) {
    let tol = |name: &str| cfg.tolerances.get(name);
    let Some(p) = cfg.source.lagrange() else {
        return (
            GeodesicResult::failed(req, "geodesics need lagrangian mode".into()),
            Vec::new(),
        );
    };
    match p.geodesic_integrate(&req.x0, &req.y0, req.tau_span, req.steps, &Default::default()) {
        Ok(rep) => {
            // the energy tolerance is per unit parameter length
            let span = (req.tau_span.1 - req.tau_span.0).max(1.0);
            let checks = vec![
                CheckResult::new("geodesic.el", rep.el_residual, tol("el")),
                CheckResult::new("geodesic.energy", rep.energy_drift, tol("energy") * span),
                CheckResult::new("geodesic.constraint", rep.constraint_residual, tol("constraint")),
            ];
            (GeodesicResult::from_report(req, rep), checks)
        }
        Err(e) => (GeodesicResult::failed(req, e.to_string()), Vec::new()),
    }
}
