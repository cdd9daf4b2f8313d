//! d-metrics, the off-diagonal coordinate ansatz, and conversions between them.

use std::sync::Arc;

use ndarray::{s, Array2};

use crate::error::{GeometryError, Result};
use crate::expr::{parse, Dims, Expr};
use crate::geometry::{check_nondegenerate, GeometrySource, LocalGeometry};
use crate::jet::{Jet, JetSpace};
use crate::nconn::NConnection;

fn parse_matrix(dims: Dims, rows: &[Vec<&str>], size: usize, name: &str) -> Result<Array2<Expr>> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(GeometryError::Shape(format!("{name} must be {size}x{size}")));
    }
    let mut out = Vec::with_capacity(size * size);
    for row in rows {
        for src in row {
            out.push(parse(src, dims)?);
        }
    }
    Ok(Array2::from_shape_vec((size, size), out).expect("checked"))
}

fn check_square_symmetric(m: &Array2<Expr>, size: usize, name: &str) -> Result<()> {
    if m.dim() != (size, size) {
        return Err(GeometryError::Shape(format!(
            "{name} must be {size}x{size}, got {:?}",
            m.dim()
        )));
    }
    for i in 0..size {
        for j in i + 1..size {
            if m[[i, j]] != m[[j, i]] {
                return Err(GeometryError::Shape(format!(
                    "{name} is not symmetric: entry ({},{}) is `{}` but ({},{}) is `{}`",
                    i + 1,
                    j + 1,
                    m[[i, j]],
                    j + 1,
                    i + 1,
                    m[[j, i]]
                )));
            }
        }
    }
    Ok(())
}

fn eval_matrix(
    m: &Array2<Expr>,
    space: &Arc<JetSpace>,
    dims: Dims,
    point: &[f64],
    order: usize,
) -> Result<Array2<Jet>> {
    let mut out = Vec::with_capacity(m.len());
    for e in m.iter() {
        out.push(e.eval_in(space, dims, point, order)?);
    }
    Ok(Array2::from_shape_vec(m.dim(), out).expect("same shape"))
}

/// A block pair `(g_ij, h_ab)`, diagonal with respect to the adapted frames.
#[derive(Debug, Clone, PartialEq)]
pub struct DMetric {
    dims: Dims,
    g: Array2<Expr>,
    h: Array2<Expr>,
    signature: Option<Vec<f64>>,
}

impl DMetric {
    pub fn new(dims: Dims, g: Array2<Expr>, h: Array2<Expr>) -> Result<Self> {
        check_square_symmetric(&g, dims.n(), "g")?;
        check_square_symmetric(&h, dims.m(), "h")?;
        Ok(Self {
            dims,
            g,
            h,
            signature: None,
        })
    }

    pub fn parse(dims: Dims, g: &[Vec<&str>], h: &[Vec<&str>]) -> Result<Self> {
        let g = parse_matrix(dims, g, dims.n(), "g")?;
        let h = parse_matrix(dims, h, dims.m(), "h")?;
        Self::new(dims, g, h)
    }

    /// Constant diagonal blocks `diag(signature[..n])`, `diag(signature[n..])`.
    pub fn eta(dims: Dims, signature: &[f64]) -> Result<Self> {
        if signature.len() != dims.total() {
            return Err(GeometryError::Shape(format!(
                "signature needs {} entries, got {}",
                dims.total(),
                signature.len()
            )));
        }
        if let Some(bad) = signature.iter().find(|s| !(s.abs() > 0.0) || !s.is_finite()) {
            return Err(GeometryError::Shape(format!(
                "signature entry {bad} is not a nonzero number"
            )));
        }
        let diag = |k: usize, off: usize| {
            Array2::from_shape_fn((k, k), |(i, j)| {
                Expr::Num(if i == j { signature[off + i] } else { 0.0 })
            })
        };
        let mut m = Self::new(dims, diag(dims.n(), 0), diag(dims.m(), dims.n()))?;
        m.signature = Some(signature.to_vec());
        Ok(m)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn g(&self) -> &Array2<Expr> {
        &self.g
    }

    pub fn h(&self) -> &Array2<Expr> {
        &self.h
    }

    pub fn signature(&self) -> Option<&[f64]> {
        self.signature.as_deref()
    }

    pub fn jets(&self, space: &Arc<JetSpace>, point: &[f64], order: usize) -> Result<(Array2<Jet>, Array2<Jet>)> {
        Ok((
            eval_matrix(&self.g, space, self.dims, point, order)?,
            eval_matrix(&self.h, space, self.dims, point, order)?,
        ))
    }

    /// Block values at `point`, checked for nondegeneracy.
    pub fn values(&self, point: &[f64]) -> Result<(Array2<f64>, Array2<f64>)> {
        let space = JetSpace::shared(self.dims.total(), 0);
        let (g, h) = self.jets(&space, point, 0)?;
        let (g, h) = (g.map(Jet::value), h.map(Jet::value));
        check_nondegenerate(&g, "g block", point)?;
        check_nondegenerate(&h, "h block", point)?;
        Ok((g, h))
    }
}

/// A d-metric together with the N-connection it is adapted to.
#[derive(Debug, Clone, PartialEq)]
pub struct DStructure {
    pub metric: DMetric,
    pub nconn: NConnection,
}

impl DStructure {
    pub fn new(metric: DMetric, nconn: NConnection) -> Result<Self> {
        if metric.dims() != nconn.dims() {
            return Err(GeometryError::Shape("metric and N-connection dimensions differ".into()));
        }
        Ok(Self { metric, nconn })
    }
}

impl GeometrySource for DStructure {
    fn dims(&self) -> Dims {
        self.metric.dims()
    }

    fn local(&self, point: &[f64], order: usize) -> Result<LocalGeometry> {
        let space = JetSpace::shared(self.dims().total(), order);
        let (g, h) = self.metric.jets(&space, point, order)?;
        let nc = self.nconn.jets(&space, point, order)?;
        LocalGeometry::new(g, h, nc)
    }
}

/// A full `(n+m)×(n+m)` metric in the coordinate basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzMetric {
    dims: Dims,
    coeffs: Array2<Expr>,
}

impl AnsatzMetric {
    pub fn new(dims: Dims, coeffs: Array2<Expr>) -> Result<Self> {
        check_square_symmetric(&coeffs, dims.total(), "ansatz metric")?;
        Ok(Self { dims, coeffs })
    }

    pub fn parse(dims: Dims, rows: &[Vec<&str>]) -> Result<Self> {
        let coeffs = parse_matrix(dims, rows, dims.total(), "ansatz metric")?;
        Self::new(dims, coeffs)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn coeffs(&self) -> &Array2<Expr> {
        &self.coeffs
    }

    pub fn jets(&self, space: &Arc<JetSpace>, point: &[f64], order: usize) -> Result<Array2<Jet>> {
        eval_matrix(&self.coeffs, space, self.dims, point, order)
    }

    pub fn values(&self, point: &[f64]) -> Result<Array2<f64>> {
        let space = JetSpace::shared(self.dims.total(), 0);
        Ok(self.jets(&space, point, 0)?.map(Jet::value))
    }
}

/// Splits an ansatz jet matrix into `(g, h, N)` with `N^b_i = h^{ab} ğ_{ia}`.
fn split_ansatz(dims: Dims, full: &Array2<Jet>, point: &[f64]) -> Result<(Array2<Jet>, Array2<Jet>, Array2<Jet>)> {
    let (n, m) = (dims.n(), dims.m());
    let h = full.slice(s![n.., n..]).to_owned();
    check_nondegenerate(&h.map(Jet::value), "vertical block", point)?;
    let h_inv = crate::linalg::invert_jets(&h).map_err(|e| GeometryError::Degenerate {
        what: "vertical block".into(),
        point: point.to_vec(),
        pivot: e.pivot,
    })?;
    let nc = Array2::from_shape_fn((m, n), |(b, i)| {
        crate::jet::sum((0..m).map(|a| &h_inv[[a, b]] * &full[[i, n + a]])).expect("m >= 1")
    });
    let g = Array2::from_shape_fn((n, n), |(i, j)| {
        let mut v = full[[i, j]].clone();
        for a in 0..m {
            for b in 0..m {
                v = &v - &(&(&nc[[a, i]] * &nc[[b, j]]) * &h[[a, b]]);
            }
        }
        v
    });
    Ok((g, h, nc))
}

impl GeometrySource for AnsatzMetric {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn local(&self, point: &[f64], order: usize) -> Result<LocalGeometry> {
        let space = JetSpace::shared(self.dims.total(), order);
        let full = self.jets(&space, point, order)?;
        let (g, h, nc) = split_ansatz(self.dims, &full, point)?;
        LocalGeometry::new(g, h, crate::nconn::NConnectionJets::new(self.dims, point.to_vec(), nc))
    }
}

/// `[[g + Nᵀ h N, Nᵀ h], [h N, h]]` at `point`.
pub fn to_ansatz(metric: &DMetric, nc: &NConnection, point: &[f64]) -> Result<Array2<f64>> {
    let dims = metric.dims();
    if nc.dims() != dims {
        return Err(GeometryError::Shape("metric and N-connection dimensions differ".into()));
    }
    let (g, h) = metric.values(point)?;
    let space = JetSpace::shared(dims.total(), 0);
    let nv = nc.jets(&space, point, 0)?.coeffs().map(Jet::value);
    Ok(assemble_ansatz(&g, &h, &nv))
}

/// The ansatz from block values; `nv` is `N^a_i` stored `[a, i]`.
pub fn assemble_ansatz(g: &Array2<f64>, h: &Array2<f64>, nv: &Array2<f64>) -> Array2<f64> {
    let (n, m) = (g.nrows(), h.nrows());
    let hn = h.dot(nv);
    let mut out = Array2::zeros((n + m, n + m));
    out.slice_mut(s![..n, ..n]).assign(&(g + &nv.t().dot(&hn)));
    out.slice_mut(s![n.., ..n]).assign(&hn);
    out.slice_mut(s![..n, n..]).assign(&hn.t());
    out.slice_mut(s![n.., n..]).assign(h);
    out
}

/// Blocks recovered from an ansatz metric at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    /// `N^b_i` stored `[b, i]`.
    pub n: Array2<f64>,
    pub g: Array2<f64>,
    pub h: Array2<f64>,
}

pub fn extract_nconnection(ansatz: &AnsatzMetric, point: &[f64]) -> Result<Extracted> {
    let dims = ansatz.dims();
    let space = JetSpace::shared(dims.total(), 0);
    let full = ansatz.jets(&space, point, 0)?;
    let (g, h, nc) = split_ansatz(dims, &full, point)?;
    Ok(Extracted {
        n: nc.map(Jet::value),
        g: g.map(Jet::value),
        h: h.map(Jet::value),
    })
}

/// `max_{i,a} |ğ(e_i, ∂_a)|` with `e_i` built from the given `N`.
pub fn block_orthogonality_residual(ansatz: &AnsatzMetric, nc: &NConnection, point: &[f64]) -> Result<f64> {
    let dims = ansatz.dims();
    let (n, m) = (dims.n(), dims.m());
    let full = ansatz.values(point)?;
    let space = JetSpace::shared(dims.total(), 0);
    let nv = nc.jets(&space, point, 0)?.coeffs().map(Jet::value);
    let mut worst = 0.0f64;
    for i in 0..n {
        for a in 0..m {
            let mut v = full[[i, n + a]];
            for b in 0..m {
                v -= nv[[b, i]] * full[[n + b, n + a]];
            }
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::determinant;

    fn d(n: usize, m: usize) -> Dims {
        Dims::new(n, m).unwrap()
    }

    #[test]
    fn zero_connection_gives_block_diagonal() {
        let dims = d(2, 1);
        let g = DMetric::parse(dims, &[vec!["2", "x1"], vec!["x1", "3"]], &[vec!["exp(y1)"]]).unwrap();
        let a = to_ansatz(&g, &NConnection::zero(dims), &[0.5, 0.0, 0.0]).unwrap();
        assert_eq!(a[[0, 2]], 0.0);
        assert_eq!(a[[2, 1]], 0.0);
        assert_eq!(a[[0, 1]], 0.5);
        assert_eq!(a[[2, 2]], 1.0);
    }

    #[test]
    fn one_by_one_ansatz() {
        let dims = d(1, 1);
        let g = DMetric::parse(dims, &[vec!["1"]], &[vec!["1"]]).unwrap();
        let nc = NConnection::parse(dims, &[vec!["0.7"]]).unwrap();
        let a = to_ansatz(&g, &nc, &[0.0, 0.0]).unwrap();
        assert!((a[[0, 0]] - 1.49).abs() < 1e-15);
        assert_eq!(a[[0, 1]], 0.7);
        assert_eq!(a[[1, 0]], 0.7);
        assert_eq!(a[[1, 1]], 1.0);
        assert!((determinant(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extraction_inverts_ansatz() {
        let dims = d(1, 1);
        let a = AnsatzMetric::parse(dims, &[vec!["1.49", "0.7"], vec!["0.7", "1"]]).unwrap();
        let e = extract_nconnection(&a, &[0.0, 0.0]).unwrap();
        assert!((e.n[[0, 0]] - 0.7).abs() < 1e-15);
        assert!((e.g[[0, 0]] - 1.0).abs() < 1e-14);
        assert_eq!(e.h[[0, 0]], 1.0);
        let zero = NConnection::zero(dims);
        assert!((block_orthogonality_residual(&a, &zero, &[0.0, 0.0]).unwrap() - 0.7).abs() < 1e-15);
        let own = NConnection::parse(dims, &[vec!["0.7"]]).unwrap();
        assert!(block_orthogonality_residual(&a, &own, &[0.0, 0.0]).unwrap() < 1e-12);
    }

    #[test]
    fn block_diagonal_input_has_zero_connection() {
        let dims = d(1, 2);
        let a = AnsatzMetric::parse(dims, &[vec!["2", "0", "0"], vec!["0", "1", "x1"], vec!["0", "x1", "5"]]).unwrap();
        let e = extract_nconnection(&a, &[0.3, 1.0, 2.0]).unwrap();
        assert!(e.n.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn singular_vertical_block_is_reported() {
        let dims = d(1, 1);
        let a = AnsatzMetric::parse(dims, &[vec!["1", "0"], vec!["0", "y1"]]).unwrap();
        assert!(matches!(
            extract_nconnection(&a, &[0.0, 0.0]),
            Err(GeometryError::Degenerate { .. })
        ));
    }

    #[test]
    fn asymmetric_blocks_are_rejected() {
        let dims = d(2, 1);
        assert!(DMetric::parse(dims, &[vec!["1", "x1"], vec!["x2", "1"]], &[vec!["1"]]).is_err());
    }

    #[test]
    fn eta_metric_carries_signature() {
        let m = DMetric::eta(d(1, 2), &[-1.0, 1.0, 1.0]).unwrap();
        let (g, h) = m.values(&[0.0; 3]).unwrap();
        assert_eq!(g[[0, 0]], -1.0);
        assert_eq!(h[[1, 1]], 1.0);
        assert_eq!(m.signature(), Some(&[-1.0, 1.0, 1.0][..]));
        assert!(DMetric::eta(d(1, 1), &[1.0, 0.0]).is_err());
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let dims = d(1, 1);
        let g = DMetric::parse(dims, &[vec!["x1"]], &[vec!["1"]]).unwrap();
        assert!(matches!(g.values(&[0.0, 1.0]), Err(GeometryError::Degenerate { .. })));
    }
}
