//! Named objects that `compute` can evaluate at a point.

use ndarray::{Array, ArrayViewD, Dimension};
use nholo_core::charforms::{
    a_hat_degree4, assemble_curvature_form, chern_character, first_pontryagin, increasing_tuples, Form,
};
use nholo_core::curvature::{dcurvature, dtorsion, einstein_residual_of, ricci_scalar_einstein};
use nholo_core::dconn::{berwald_field, canonical_field, distortion_at, levi_civita_field, metricity_residual};
use nholo_core::dmetric::assemble_ansatz;
use nholo_core::lagrange::almost_complex;
use nholo_core::{DConnection, Dims, Jet, LocalGeometry};
use serde_json::{json, Map, Value};

use crate::config::{Mode, ProblemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    AdaptedFrame,
    AlmostComplex,
    Ansatz,
    BerwaldDConnection,
    CanonicalDConnection,
    Charforms,
    Curvature,
    Distortion,
    Einstein,
    Energy,
    HessianMetric,
    LeviCivita,
    Metric,
    Metricity,
    NConnection,
    NConnectionCurvature,
    Ricci,
    Semispray,
    Torsion,
}

impl Output {
    pub const ALL: [Output; 19] = [
        Output::AdaptedFrame,
        Output::AlmostComplex,
        Output::Ansatz,
        Output::BerwaldDConnection,
        Output::CanonicalDConnection,
        Output::Charforms,
        Output::Curvature,
        Output::Distortion,
        Output::Einstein,
        Output::Energy,
        Output::HessianMetric,
        Output::LeviCivita,
        Output::Metric,
        Output::Metricity,
        Output::NConnection,
        Output::NConnectionCurvature,
        Output::Ricci,
        Output::Semispray,
        Output::Torsion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::AdaptedFrame => "adapted_frame",
            Output::AlmostComplex => "almost_complex",
            Output::Ansatz => "ansatz",
            Output::BerwaldDConnection => "berwald_dconnection",
            Output::CanonicalDConnection => "canonical_dconnection",
            Output::Charforms => "charforms",
            Output::Curvature => "curvature",
            Output::Distortion => "distortion",
            Output::Einstein => "einstein",
            Output::Energy => "energy",
            Output::HessianMetric => "hessian_metric",
            Output::LeviCivita => "levi_civita",
            Output::Metric => "metric",
            Output::Metricity => "metricity",
            Output::NConnection => "nconnection",
            Output::NConnectionCurvature => "nconnection_curvature",
            Output::Ricci => "ricci",
            Output::Semispray => "semispray",
            Output::Torsion => "torsion",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }

    /// Why the output cannot be produced for this mode and shape, if it cannot.
    pub fn unavailable(self, mode: Mode, dims: Dims) -> Option<&'static str> {
        match self {
            Output::Energy | Output::HessianMetric | Output::Semispray if mode != Mode::Lagrangian => {
                Some("needs lagrangian mode")
            }
            Output::AlmostComplex if dims.n() != dims.m() => Some("needs m = n"),
            _ => None,
        }
    }

    /// Jet order of the local geometry this output needs.
    pub fn order(self) -> usize {
        match self {
            Output::Curvature | Output::Ricci | Output::Einstein | Output::Charforms => 2,
            _ => 1,
        }
    }
}

/// Nested JSON arrays for an n-dimensional array.
pub fn tensor<D: Dimension>(a: &Array<f64, D>) -> Value {
    fn rec(v: ArrayViewD<f64>) -> Value {
        if v.ndim() == 0 {
            json!(v.first().copied().unwrap_or(0.0))
        } else {
            Value::Array(v.outer_iter().map(rec).collect())
        }
    }
    rec(a.view().into_dyn())
}

fn blocks(c: &DConnection) -> Value {
    json!({
        "kind": c.kind.name(),
        "L_h": tensor(&c.l_h),
        "L_v": tensor(&c.l_v),
        "C_h": tensor(&c.c_h),
        "C_v": tensor(&c.c_v),
    })
}

fn form(f: &Form, i_power: u8) -> Value {
    json!({
        "degree": f.degree,
        "i_power": i_power,
        "indices": increasing_tuples(f.dim, f.degree),
        "coeffs": f.coeffs,
    })
}

pub fn lambda_values(cfg: &ProblemConfig, point: &[f64]) -> Result<Option<(f64, f64)>, String> {
    let Some(e) = &cfg.einstein else { return Ok(None) };
    let lh = e.lambda_h.value_at(cfg.dims, point).map_err(|e| e.to_string())?;
    let lv = e.lambda_v.value_at(cfg.dims, point).map_err(|e| e.to_string())?;
    Ok(Some((lh, lv)))
}

/// Evaluates one output on a prepared local geometry.
pub fn evaluate(out: Output, cfg: &ProblemConfig, geo: &LocalGeometry) -> Result<Value, String> {
    let point = geo.point();
    let nat = geo.nconn().at_point();
    let canonical = || canonical_field(geo, cfg.cvv);
    let e = |e: nholo_core::GeometryError| e.to_string();
    Ok(match out {
        Output::Metric => json!({ "g": tensor(&geo.g_values()), "h": tensor(&geo.h_values()) }),
        Output::NConnection => tensor(&nat.n),
        Output::NConnectionCurvature => tensor(&nat.omega),
        Output::AdaptedFrame => {
            let nc = geo.nconn();
            json!({
                "frame": tensor(&nc.frame_jets().map(Jet::value)),
                "coframe": tensor(&nc.coframe_jets().map(Jet::value)),
                "anholonomy": tensor(&nc.anholonomy_jets().map(Jet::value)),
            })
        }
        Output::Ansatz => tensor(&assemble_ansatz(&geo.g_values(), &geo.h_values(), &nat.n)),
        Output::CanonicalDConnection => blocks(&canonical().values()),
        Output::BerwaldDConnection => blocks(&berwald_field(geo).values()),
        Output::LeviCivita => tensor(&levi_civita_field(geo).values().coeffs),
        Output::Distortion => {
            let d = distortion_at(geo);
            json!({ "P": blocks(&d.p), "residual": d.residual })
        }
        Output::Metricity => {
            let r = metricity_residual(&canonical().values(), geo);
            json!({ "hh": r.hh, "hv": r.hv, "vh": r.vh, "vv": r.vv })
        }
        Output::Torsion => {
            let t = dtorsion(&canonical().values(), &nat);
            json!({
                "hhh": tensor(&t.hhh),
                "hhv": tensor(&t.hhv),
                "vhh": tensor(&t.vhh),
                "vvh": tensor(&t.vvh),
                "vvv": tensor(&t.vvv),
            })
        }
        Output::Curvature => {
            let c = dcurvature(&canonical(), geo.nconn());
            json!({
                "h_hh": tensor(&c.h_hh),
                "v_hh": tensor(&c.v_hh),
                "h_hv": tensor(&c.h_hv),
                "v_hv": tensor(&c.v_hv),
                "h_vv": tensor(&c.h_vv),
                "v_vv": tensor(&c.v_vv),
            })
        }
        Output::Ricci => {
            let c = dcurvature(&canonical(), geo.nconn());
            let r = ricci_scalar_einstein(&c, &geo.g_values(), &geo.h_values(), point).map_err(e)?;
            json!({
                "hh": tensor(&r.hh),
                "hv": tensor(&r.hv),
                "vh": tensor(&r.vh),
                "vv": tensor(&r.vv),
                "scalar": r.scalar,
            })
        }
        Output::Einstein => {
            let c = dcurvature(&canonical(), geo.nconn());
            let (g, h) = (geo.g_values(), geo.h_values());
            let r = ricci_scalar_einstein(&c, &g, &h, point).map_err(e)?;
            let mut obj = Map::new();
            obj.insert("tensor".into(), tensor(&r.einstein));
            if let Some((lh, lv)) = lambda_values(cfg, point)? {
                let res = einstein_residual_of(&r, &g, &h, lh, lv);
                obj.insert(
                    "residual".into(),
                    json!({ "lambda_h": lh, "lambda_v": lv, "hh": res.hh, "hv": res.hv, "vh": res.vh, "vv": res.vv }),
                );
            }
            Value::Object(obj)
        }
        Output::Charforms => {
            let r = assemble_curvature_form(&dcurvature(&canonical(), geo.nconn()));
            let ch = chern_character(&r);
            json!({
                "ch0": ch.ch0,
                "ch1": form(&ch.ch1.form, ch.ch1.i_power),
                "ch2": form(&ch.ch2.form, ch.ch2.i_power),
                "a_hat4": form(&a_hat_degree4(&r), 0),
                "p1": form(&first_pontryagin(&r), 0),
            })
        }
        Output::AlmostComplex => {
            let f = almost_complex(geo.nconn()).map_err(e)?;
            json!({ "adapted": tensor(&f.adapted), "coordinate": tensor(&f.coordinate) })
        }
        Output::HessianMetric | Output::Semispray | Output::Energy => {
            let Some(p) = cfg.source.lagrange() else {
                return Err("needs lagrangian mode".into());
            };
            match out {
                Output::HessianMetric => {
                    let (g, gi) = p.hessian_metric(point).map_err(e)?;
                    json!({ "g": tensor(&g), "g_inv": tensor(&gi) })
                }
                Output::Semispray => json!(p.semispray(point).map_err(e)?),
                _ => json!(p.energy(point).map_err(e)?),
            }
        }
    })
}
