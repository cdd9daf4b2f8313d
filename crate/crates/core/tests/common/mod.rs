//! Seeded random instances and coordinate-basis oracles shared by the integration tests.
#![allow(dead_code)]

use ndarray::{Array2, Array3};
use nholo_core::{
    dmetric::AnsatzMetric, parse, DMetric, DStructure, Dims, Expr, JetSpace, LagrangeProblem, NConnection,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coef(rng: &mut ChaCha8Rng, scale: f64) -> String {
    format!("({:.4})", rng.random_range(-scale..scale))
}

fn coord_names(dims: Dims) -> Vec<String> {
    (1..=dims.n())
        .map(|i| format!("x{i}"))
        .chain((1..=dims.m()).map(|a| format!("y{a}")))
        .collect()
}

/// `c_0 + Σ c_μ u^μ` with small coefficients.
pub fn linear(rng: &mut ChaCha8Rng, dims: Dims, scale: f64) -> String {
    let mut s = coef(rng, scale);
    for name in coord_names(dims) {
        s.push_str(&format!(" + {}*{}", coef(rng, scale), name));
    }
    s
}

fn pick(rng: &mut ChaCha8Rng, names: &[String]) -> String {
    names[rng.random_range(0..names.len())].clone()
}

/// A small polynomial/exponential field.
pub fn field(rng: &mut ChaCha8Rng, dims: Dims, scale: f64) -> String {
    let names = coord_names(dims);
    let (u, v) = (pick(rng, &names), pick(rng, &names));
    match rng.random_range(0..4) {
        0 => format!("{}*{}*{} + {}", coef(rng, scale), u, v, linear(rng, dims, scale)),
        1 => format!(
            "{}*exp({}) + {}*{}^2",
            coef(rng, scale),
            linear(rng, dims, 0.5),
            coef(rng, scale),
            u
        ),
        2 => format!(
            "{}*sin({}) + {}*{}",
            coef(rng, scale),
            linear(rng, dims, 1.0),
            coef(rng, scale),
            v
        ),
        _ => format!(
            "{}*{}^2*{} + {}*cos({})",
            coef(rng, scale),
            u,
            v,
            coef(rng, scale),
            linear(rng, dims, 1.0)
        ),
    }
}

/// A symmetric block whose diagonal dominates, with random signs on the diagonal when `indefinite`.
pub fn metric_block(rng: &mut ChaCha8Rng, dims: Dims, size: usize, indefinite: bool) -> Vec<Vec<String>> {
    let mut m = vec![vec![String::new(); size]; size];
    for i in 0..size {
        let sign = if indefinite && rng.random_bool(0.3) { "-" } else { "" };
        m[i][i] = match rng.random_range(0..3) {
            0 => format!("{sign}(2 + 0.3*sin({}))", linear(rng, dims, 1.0)),
            1 => format!("{sign}(1.5*exp({}))", linear(rng, dims, 0.3)),
            _ => format!("{sign}(2.5 + {})", field(rng, dims, 0.15)),
        };
        for j in i + 1..size {
            let e = format!("0.2*({})", field(rng, dims, 0.3));
            m[i][j] = e.clone();
            m[j][i] = e;
        }
    }
    m
}

fn as_refs(rows: &[Vec<String>]) -> Vec<Vec<&str>> {
    rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect()
}

pub fn nconnection_rows(rng: &mut ChaCha8Rng, dims: Dims, scale: f64) -> Vec<Vec<String>> {
    (0..dims.m())
        .map(|_| (0..dims.n()).map(|_| field(rng, dims, scale)).collect())
        .collect()
}

pub fn random_nconnection(rng: &mut ChaCha8Rng, dims: Dims) -> NConnection {
    NConnection::parse(dims, &as_refs(&nconnection_rows(rng, dims, 0.6))).unwrap()
}

pub fn random_dims(rng: &mut ChaCha8Rng) -> Dims {
    Dims::new(rng.random_range(1..=3), rng.random_range(1..=3)).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, dims: Dims) -> Vec<f64> {
    (0..dims.total()).map(|_| rng.random_range(-0.5..0.5)).collect()
}

/// A random d-structure and a point where it is regular.
pub fn random_structure(rng: &mut ChaCha8Rng, dims: Dims, indefinite: bool) -> (DStructure, Vec<f64>) {
    loop {
        let g = metric_block(rng, dims, dims.n(), indefinite);
        let h = metric_block(rng, dims, dims.m(), indefinite);
        let metric = DMetric::parse(dims, &as_refs(&g), &as_refs(&h)).unwrap();
        let s = DStructure::new(metric, random_nconnection(rng, dims)).unwrap();
        let p = random_point(rng, dims);
        if s.metric.values(&p).is_ok() {
            return (s, p);
        }
    }
}

/// Random d-structure with `N = 0` and a metric independent of `y`.
pub fn random_integrable_structure(rng: &mut ChaCha8Rng, dims: Dims) -> (DStructure, Vec<f64>) {
    let xdims = Dims::new(dims.n(), 1).unwrap();
    loop {
        // fields drawn in (n, 1) use only x1..xn and y1; replace y1 by a constant
        let strip = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> {
            rows.into_iter()
                .map(|r| r.into_iter().map(|e| e.replace("y1", "0.4")).collect())
                .collect()
        };
        let g = strip(metric_block(rng, xdims, dims.n(), false));
        let h = strip(metric_block(rng, xdims, dims.m(), false));
        let metric = DMetric::parse(dims, &as_refs(&g), &as_refs(&h)).unwrap();
        let s = DStructure::new(metric, NConnection::zero(dims)).unwrap();
        let p = random_point(rng, dims);
        if s.metric.values(&p).is_ok() {
            return (s, p);
        }
    }
}

/// A random positive regular Lagrangian
/// `½ Σ exp(ℓ_i(x)) y_i² + γ (Σ y²)² + δ x_i y_j` and a point with `|y|` away from zero.
pub fn random_lagrangian(rng: &mut ChaCha8Rng, n: usize) -> (LagrangeProblem, Vec<f64>) {
    let xdims = Dims::new(n, 1).unwrap();
    let mut terms = Vec::new();
    for i in 1..=n {
        let l = linear(rng, xdims, 0.4).replace("y1", "0");
        terms.push(format!("0.5*exp({l})*y{i}^2"));
    }
    let ysq: Vec<String> = (1..=n).map(|i| format!("y{i}^2")).collect();
    terms.push(format!("{:.4}*({})^2", rng.random_range(0.0..0.05), ysq.join(" + ")));
    let (i, j) = (rng.random_range(1..=n), rng.random_range(1..=n));
    terms.push(format!("({:.4})*x{i}*y{j}", rng.random_range(-0.3..0.3)));
    let p = LagrangeProblem::parse(n, &terms.join(" + ")).unwrap();
    let mut point: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    point.extend((0..n).map(|_| rng.random_range(0.3..1.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }));
    (p, point)
}

/// Random Riemannian metric `g(x)` on `n` dimensions as DSL rows (diagonally dominant).
pub fn random_riemannian_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<String>> {
    let xdims = Dims::new(n, 1).unwrap();
    metric_block(rng, xdims, n, false)
        .into_iter()
        .map(|r| r.into_iter().map(|e| e.replace("y1", "0.3")).collect())
        .collect()
}

pub fn parse_matrix(rows: &[Vec<String>], dims: Dims) -> Array2<Expr> {
    let k = rows.len();
    Array2::from_shape_fn((k, k), |(i, j)| parse(&rows[i][j], dims).unwrap())
}

/// Matrix of expression values at a point.
pub fn values(m: &Array2<Expr>, dims: Dims, point: &[f64]) -> Array2<f64> {
    m.map(|e| e.value_at(dims, point).unwrap())
}

/// Central differences with one Richardson step: `(4 D(h/2) − D(h)) / 3`.
pub fn richardson(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Coordinate Christoffels `γ^i_jk` of a metric field, differentiated by finite differences.
pub fn christoffel_fd(m: &Array2<Expr>, dims: Dims, point: &[f64], slots: &[usize]) -> Array3<f64> {
    let k = m.nrows();
    let inv = nholo_core::linalg::invert(&values(m, dims, point)).unwrap().0;
    // dg[a, b, c] = ∂_{slots[c]} g_ab
    let dg = Array3::from_shape_fn((k, k, k), |(a, b, c)| {
        let f = |t: f64| {
            let mut p = point.to_vec();
            p[slots[c]] += t;
            m[[a, b]].value_at(dims, &p).unwrap()
        };
        richardson(&f, 1e-3)
    });
    Array3::from_shape_fn((k, k, k), |(i, j, l)| {
        0.5 * (0..k)
            .map(|r| inv[[i, r]] * (dg[[r, l, j]] + dg[[r, j, l]] - dg[[j, l, r]]))
            .sum::<f64>()
    })
}

/// Scalar curvature of a coordinate metric in all `dims.total()` coordinates, from second-order jets.
pub fn coordinate_scalar_curvature(m: &Array2<Expr>, dims: Dims, point: &[f64]) -> f64 {
    let d = m.nrows();
    let space = JetSpace::shared(dims.total(), 2);
    let g = m.map(|e| e.eval_in(&space, dims, point, 2).unwrap());
    let gi = nholo_core::linalg::invert_jets(&g).unwrap();
    // Γ^i_jk as jets of order 1
    let gamma = Array3::from_shape_fn((d, d, d), |(i, j, k)| {
        let mut s = nholo_core::Jet::zero(&space, 1);
        for r in 0..d {
            let t = &(&g[[r, k]].derivative(j) + &g[[r, j]].derivative(k)) - &g[[j, k]].derivative(r);
            s = &s + &(&gi[[i, r]] * &t);
        }
        s.scale(0.5)
    });
    let gv = gamma.map(|j| j.value());
    // R_jk = ∂_i Γ^i_jk − ∂_k Γ^i_ji + Γ^i_ip Γ^p_jk − Γ^i_kp Γ^p_ji
    let mut scalar = 0.0;
    for j in 0..d {
        for k in 0..d {
            let mut r = 0.0;
            for i in 0..d {
                r += gamma[[i, j, k]].partial(&[i]) - gamma[[i, j, i]].partial(&[k]);
                for p in 0..d {
                    r += gv[[i, i, p]] * gv[[p, j, k]] - gv[[i, k, p]] * gv[[p, j, i]];
                }
            }
            scalar += gi[[j, k]].value() * r;
        }
    }
    scalar
}

pub fn ansatz_from_structure(s: &DStructure) -> (AnsatzMetric, Array2<Expr>) {
    // ğ = [[g + Nᵀ h N, Nᵀ h], [h N, h]] built symbolically
    let dims = s.metric.dims();
    let (n, m) = (dims.n(), dims.m());
    let (g, h, nc) = (s.metric.g(), s.metric.h(), s.nconn.coeffs());
    let mul = |a: &Expr, b: &Expr| format!("({a})*({b})");
    let hn = |a: usize, i: usize| -> String {
        (0..m)
            .map(|b| mul(&h[[a, b]], &nc[[b, i]]))
            .collect::<Vec<_>>()
            .join(" + ")
    };
    let total = n + m;
    let mut rows = vec![vec![String::new(); total]; total];
    for i in 0..n {
        for j in 0..n {
            let mut terms = vec![format!("({})", g[[i, j]])];
            for a in 0..m {
                terms.push(format!("({})*({})", nc[[a, i]], hn(a, j)));
            }
            rows[i][j] = terms.join(" + ");
        }
        for a in 0..m {
            rows[i][n + a] = hn(a, i);
            rows[n + a][i] = hn(a, i);
        }
    }
    for a in 0..m {
        for b in 0..m {
            rows[n + a][n + b] = h[[a, b]].to_string();
        }
    }
    // ğ_ij and ğ_ji differ structurally through summation order; symmetrize textually
    for i in 0..n {
        for j in 0..i {
            rows[i][j] = rows[j][i].clone();
        }
    }
    let exprs = parse_matrix(&rows, dims);
    (AnsatzMetric::new(dims, exprs.clone()).unwrap(), exprs)
}

/// A random composite expression, built so that it stays inside every function's domain.
pub fn random_expr(rng: &mut ChaCha8Rng, dims: Dims, depth: usize) -> String {
    let names = coord_names(dims);
    if depth == 0 || rng.random_bool(0.2) {
        return if rng.random_bool(0.75) {
            pick(rng, &names)
        } else {
            coef(rng, 2.0)
        };
    }
    let a = random_expr(rng, dims, depth - 1);
    match rng.random_range(0..14) {
        0 => format!("sin({a})"),
        1 => format!("cos({a})"),
        2 => format!("exp(0.5*sin({a}))"),
        3 => format!("atan({a})"),
        4 => format!("log(2 + sin({a}))"),
        5 => format!("sqrt(1 + ({a})^2)"),
        6 => format!("tan(0.4*cos({a}))"),
        7 => format!("sinh(0.5*sin({a}))*cosh(0.3*{a})"),
        8 => format!("({a})^3"),
        9 => format!("(1.5 + cos({a}))^(0.7)"),
        10 => format!("({a}) / (2 + sin({}))", random_expr(rng, dims, depth - 1)),
        11 => format!("({a}) * ({})", random_expr(rng, dims, depth - 1)),
        12 => format!("({a}) - ({})", random_expr(rng, dims, depth - 1)),
        _ => format!("({a}) + {}*({})", coef(rng, 2.0), random_expr(rng, dims, depth - 1)),
    }
}
