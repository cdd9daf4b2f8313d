//! Problem configuration: TOML ingestion and validation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use nholo_core::lagrange::SasakiLift;
use nholo_core::{
    parse, AnsatzMetric, CvvFormula, DMetric, DStructure, Dims, Expr, GeometrySource, LagrangeProblem, NConnection,
};
use serde::Deserialize;

use crate::outputs::Output;

/// Every validation failure found in a configuration, in discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Text(String),
    Number(f64),
}

impl Entry {
    fn source(&self) -> String {
        match self {
            Entry::Text(s) => s.clone(),
            Entry::Number(v) => format!("{v:?}"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    outputs: Vec<String>,
    canonical_cvv: Option<String>,
    lagrangian: Option<RawLagrangian>,
    dmetric: Option<RawDMetric>,
    ansatz: Option<RawAnsatz>,
    points: Option<RawPoints>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    geodesic: Vec<RawGeodesic>,
    einstein: Option<RawEinstein>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLagrangian {
    #[serde(rename = "L")]
    l: Option<Entry>,
    regularity_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDMetric {
    g: Option<Vec<Vec<Entry>>>,
    h: Option<Vec<Vec<Entry>>>,
    #[serde(rename = "N")]
    n: Option<Vec<Vec<Entry>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnsatz {
    metric: Option<Vec<Vec<Entry>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoints {
    #[serde(default)]
    explicit: Vec<Vec<f64>>,
    count: Option<usize>,
    #[serde(rename = "box")]
    bounds: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeodesic {
    x0: Vec<f64>,
    y0: Vec<f64>,
    tau_span: Option<[f64; 2]>,
    steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEinstein {
    lambda_h: Option<Entry>,
    lambda_v: Option<Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Lagrangian,
    DMetric,
    Ansatz,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Lagrangian => "lagrangian",
            Mode::DMetric => "dmetric",
            Mode::Ansatz => "ansatz",
        }
    }
}

/// The geometric input, one variant per mode.
pub enum Source {
    Lagrangian(SasakiLift),
    DMetric(DStructure),
    Ansatz(AnsatzMetric),
}

impl Source {
    pub fn geometry(&self) -> &dyn GeometrySource {
        match self {
            Source::Lagrangian(l) => l,
            Source::DMetric(s) => s,
            Source::Ansatz(a) => a,
        }
    }

    pub fn lagrange(&self) -> Option<&LagrangeProblem> {
        match self {
            Source::Lagrangian(l) => Some(l.problem()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSpec {
    pub explicit: Vec<Vec<f64>>,
    pub count: usize,
    pub bounds: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicRequest {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub tau_span: (f64, f64),
    pub steps: usize,
}

/// Source terms `λ_h`, `λ_v` of the Einstein residual, as scalar fields.
#[derive(Debug, Clone)]
pub struct EinsteinSources {
    pub lambda_h: Expr,
    pub lambda_v: Expr,
}

/// Named check tolerances with their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

pub const TOLERANCE_DEFAULTS: &[(&str, f64)] = &[
    ("almost_complex", 1e-12),
    ("ansatz", 1e-10),
    ("ch1", 1e-8),
    ("constraint", 1e-6),
    ("distortion", 1e-9),
    ("einstein", 1e-8),
    ("el", 1e-6),
    ("energy", 1e-8),
    ("metricity", 1e-9),
    ("nijenhuis", 1e-9),
    ("oracle", 1e-8),
    ("torsion_pure", 1e-12),
    ("tr2", 1e-10),
];

impl Default for Tolerances {
    fn default() -> Self {
        Self(TOLERANCE_DEFAULTS.iter().copied().collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    /// Overrides one tolerance; unknown names and non-positive values are rejected.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        let Some((key, _)) = TOLERANCE_DEFAULTS.iter().find(|(k, _)| *k == name) else {
            let known: Vec<&str> = TOLERANCE_DEFAULTS.iter().map(|(k, _)| *k).collect();
            return Err(format!("unknown tolerance `{name}` (known: {})", known.join(", ")));
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance `{name}` must be positive and finite, got {value}"));
        }
        self.0.insert(key, value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

pub struct ProblemConfig {
    pub dims: Dims,
    pub mode: Mode,
    pub source: Source,
    pub seed: u64,
    pub outputs: Vec<Output>,
    pub cvv: CvvFormula,
    pub points: PointSpec,
    pub tolerances: Tolerances,
    pub geodesics: Vec<GeodesicRequest>,
    pub einstein: Option<EinsteinSources>,
}

pub fn load_config(path: &Path) -> Result<ProblemConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config(&text)
}

/// Parses and validates a configuration, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ProblemConfig, ConfigErrors> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigErrors(vec![format!("parse error: {e}")]))?;
    let mut errs = Vec::new();
    let cfg = validate(raw, &mut errs);
    match cfg {
        Some(cfg) if errs.is_empty() => Ok(cfg),
        _ => Err(ConfigErrors(errs)),
    }
}

fn matrix(
    rows: &[Vec<Entry>],
    shape: (usize, usize),
    field: &str,
    dims: Dims,
    errs: &mut Vec<String>,
) -> Option<ndarray::Array2<Expr>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        errs.push(format!(
            "{field}: expected a {}x{} array of expressions",
            shape.0, shape.1
        ));
        return None;
    }
    let mut ok = true;
    let mut out = Vec::with_capacity(shape.0 * shape.1);
    for (r, row) in rows.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            match parse(&e.source(), dims) {
                Ok(x) => out.push(x),
                Err(err) => {
                    errs.push(format!("{field}[{r}][{c}]: {err}"));
                    ok = false;
                    out.push(Expr::num(0.0));
                }
            }
        }
    }
    ok.then(|| ndarray::Array2::from_shape_vec(shape, out).expect("shape checked"))
}

fn scalar(e: &Entry, field: &str, dims: Dims, errs: &mut Vec<String>) -> Option<Expr> {
    parse(&e.source(), dims)
        .map_err(|err| errs.push(format!("{field}: {err}")))
        .ok()
}

fn validate(raw: RawConfig, errs: &mut Vec<String>) -> Option<ProblemConfig> {
    let mode = match raw.mode.as_deref() {
        Some("lagrangian") => Some(Mode::Lagrangian),
        Some("dmetric") => Some(Mode::DMetric),
        Some("ansatz") => Some(Mode::Ansatz),
        Some(other) => {
            errs.push(format!(
                "mode: unknown mode `{other}` (expected lagrangian, dmetric or ansatz)"
            ));
            None
        }
        None => {
            errs.push("mode: missing".into());
            None
        }
    };
    let n = raw.n.or_else(|| {
        errs.push("n: missing".into());
        None
    });
    let m = match (mode, raw.m, n) {
        (Some(Mode::Lagrangian), Some(m), Some(n)) if m != n => {
            errs.push(format!("m: lagrangian mode needs m = n, got m = {m}, n = {n}"));
            None
        }
        (Some(Mode::Lagrangian), None, n) => n,
        (_, Some(m), _) => Some(m),
        (_, None, _) => {
            errs.push("m: missing".into());
            None
        }
    };
    let dims = match (n, m) {
        (Some(n), Some(m)) => Dims::new(n, m).or_else(|| {
            errs.push(format!("n, m: dimensions must be at least 1, got ({n}, {m})"));
            None
        }),
        _ => None,
    };

    let cvv = match raw.canonical_cvv.as_deref() {
        None | Some("symmetric") => CvvFormula::Symmetric,
        Some("as_printed") => CvvFormula::AsPrinted,
        Some(other) => {
            errs.push(format!(
                "canonical_cvv: unknown variant `{other}` (expected symmetric or as_printed)"
            ));
            CvvFormula::Symmetric
        }
    };

    let mut tolerances = Tolerances::default();
    for (k, v) in &raw.tolerances {
        if let Err(e) = tolerances.set(k, *v) {
            errs.push(format!("tolerances.{k}: {e}"));
        }
    }

    let mut seen = BTreeSet::new();
    let mut outputs = Vec::new();
    for name in &raw.outputs {
        match Output::from_name(name) {
            Some(o) => {
                if !seen.insert(o) {
                    errs.push(format!("outputs: duplicate output `{name}`"));
                } else {
                    outputs.push(o);
                }
            }
            None => errs.push(format!("outputs: unknown output `{name}`")),
        }
    }

    let source = match (mode, dims) {
        (Some(mode), Some(dims)) => source(mode, dims, &raw, errs),
        _ => None,
    };

    let points = raw.points.as_ref();
    let spec = PointSpec {
        explicit: points.map(|p| p.explicit.clone()).unwrap_or_default(),
        count: points.and_then(|p| p.count).unwrap_or(0),
        bounds: points
            .and_then(|p| p.bounds.as_ref())
            .map(|b| b.iter().map(|[lo, hi]| (*lo, *hi)).collect()),
    };
    if let Some(dims) = dims {
        check_points(&spec, dims, errs);
        for o in &outputs {
            if let Some(why) = o.unavailable(mode.unwrap_or(Mode::DMetric), dims) {
                errs.push(format!("outputs: `{}` {why}", o.name()));
            }
        }
    }

    let mut geodesics = Vec::new();
    for (k, g) in raw.geodesic.iter().enumerate() {
        if mode.is_some_and(|m| m != Mode::Lagrangian) {
            errs.push(format!("geodesic[{k}]: geodesics need lagrangian mode"));
        }
        if let Some(n) = n {
            if g.x0.len() != n || g.y0.len() != n {
                errs.push(format!("geodesic[{k}]: x0 and y0 need {n} components"));
            }
        }
        let tau_span = g.tau_span.map(|[a, b]| (a, b)).unwrap_or((0.0, 1.0));
        if !(tau_span.1 > tau_span.0) {
            errs.push(format!("geodesic[{k}].tau_span: must be increasing"));
        }
        let steps = g.steps.unwrap_or(100);
        if steps < 4 {
            errs.push(format!("geodesic[{k}].steps: need at least 4 steps, got {steps}"));
        }
        geodesics.push(GeodesicRequest {
            x0: g.x0.clone(),
            y0: g.y0.clone(),
            tau_span,
            steps,
        });
    }

    let einstein = match (&raw.einstein, dims) {
        (Some(e), Some(dims)) => {
            let zero = Entry::Number(0.0);
            let lh = scalar(e.lambda_h.as_ref().unwrap_or(&zero), "einstein.lambda_h", dims, errs);
            let lv = scalar(e.lambda_v.as_ref().unwrap_or(&zero), "einstein.lambda_v", dims, errs);
            lh.zip(lv)
                .map(|(lambda_h, lambda_v)| EinsteinSources { lambda_h, lambda_v })
        }
        _ => None,
    };

    Some(ProblemConfig {
        dims: dims?,
        mode: mode?,
        source: source?,
        seed: raw.seed.unwrap_or(0),
        outputs,
        cvv,
        points: spec,
        tolerances,
        geodesics,
        einstein,
    })
}

fn source(mode: Mode, dims: Dims, raw: &RawConfig, errs: &mut Vec<String>) -> Option<Source> {
    let (n, m) = (dims.n(), dims.m());
    let misplaced = [
        ("lagrangian", raw.lagrangian.is_some(), Mode::Lagrangian),
        ("dmetric", raw.dmetric.is_some(), Mode::DMetric),
        ("ansatz", raw.ansatz.is_some(), Mode::Ansatz),
    ];
    for (name, present, owner) in misplaced {
        if present && owner != mode {
            errs.push(format!("[{name}]: section not used in {} mode", mode.name()));
        }
    }
    match mode {
        Mode::Lagrangian => {
            let Some(sec) = &raw.lagrangian else {
                errs.push("lagrangian: missing section".into());
                return None;
            };
            let Some(l) = &sec.l else {
                errs.push("lagrangian.L: missing".into());
                return None;
            };
            let expr = scalar(l, "lagrangian.L", dims, errs)?;
            let mut p = LagrangeProblem::new(n, expr)
                .map_err(|e| errs.push(format!("lagrangian: {e}")))
                .ok()?;
            if let Some(t) = sec.regularity_tol {
                if !(t.is_finite() && t > 0.0) {
                    errs.push(format!("lagrangian.regularity_tol: must be positive, got {t}"));
                }
                p = p.with_regularity_tol(t);
            }
            Some(Source::Lagrangian(p.sasaki_lift()))
        }
        Mode::DMetric => {
            let Some(sec) = &raw.dmetric else {
                errs.push("dmetric: missing section".into());
                return None;
            };
            let g = match &sec.g {
                Some(rows) => matrix(rows, (n, n), "dmetric.g", dims, errs),
                None => {
                    errs.push("dmetric.g: missing".into());
                    None
                }
            };
            let h = match &sec.h {
                Some(rows) => matrix(rows, (m, m), "dmetric.h", dims, errs),
                None => {
                    errs.push("dmetric.h: missing".into());
                    None
                }
            };
            let nc = match &sec.n {
                Some(rows) => matrix(rows, (m, n), "dmetric.N", dims, errs).and_then(|c| {
                    NConnection::new(dims, c)
                        .map_err(|e| errs.push(format!("dmetric.N: {e}")))
                        .ok()
                }),
                None => Some(NConnection::zero(dims)),
            };
            let (g, h, nc) = (g?, h?, nc?);
            let metric = DMetric::new(dims, g, h)
                .map_err(|e| errs.push(format!("dmetric: {e}")))
                .ok()?;
            DStructure::new(metric, nc)
                .map(Source::DMetric)
                .map_err(|e| errs.push(format!("dmetric: {e}")))
                .ok()
        }
        Mode::Ansatz => {
            let Some(rows) = raw.ansatz.as_ref().and_then(|a| a.metric.as_ref()) else {
                errs.push("ansatz.metric: missing".into());
                return None;
            };
            let k = dims.total();
            let c = matrix(rows, (k, k), "ansatz.metric", dims, errs)?;
            AnsatzMetric::new(dims, c)
                .map(Source::Ansatz)
                .map_err(|e| errs.push(format!("ansatz.metric: {e}")))
                .ok()
        }
    }
}

fn check_points(spec: &PointSpec, dims: Dims, errs: &mut Vec<String>) {
    let k = dims.total();
    if let Some(b) = &spec.bounds {
        if b.len() != k {
            errs.push(format!("points.box: need {k} [lo, hi] pairs, got {}", b.len()));
        }
        for (c, (lo, hi)) in b.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                errs.push(format!("points.box[{c}]: need finite lo < hi, got [{lo}, {hi}]"));
            }
        }
    }
    if spec.count > 0 && spec.bounds.is_none() {
        errs.push("points.box: required when points.count > 0".into());
    }
    for (p, pt) in spec.explicit.iter().enumerate() {
        if pt.len() != k {
            errs.push(format!("points.explicit[{p}]: need {k} coordinates, got {}", pt.len()));
            continue;
        }
        if pt.iter().any(|v| !v.is_finite()) {
            errs.push(format!("points.explicit[{p}]: coordinates must be finite"));
        }
        if let Some(b) = spec.bounds.as_ref().filter(|b| b.len() == k) {
            if pt.iter().zip(b).any(|(v, (lo, hi))| v < lo || v > hi) {
                errs.push(format!("points.explicit[{p}]: outside the declared box"));
            }
        }
    }
}
