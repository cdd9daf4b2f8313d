//! N-connections: curvature, adapted frames and anholonomy.
//!
//! Index conventions used throughout the crate:
//!
//! * coordinates `u = (x^0..x^{n-1}, y^0..y^{m-1})`, vertical slot `a` is `n + a`;
//! * `N^a_i` is stored as `[a, i]`;
//! * the frame matrix stores the coordinate components of `e_α` in column `α`,
//!   the coframe matrix stores the components of `e^β` in row `β`;
//! * `W[γ, α, β]` is defined by `[e_α, e_β] = W^γ_{αβ} e_γ`.

use std::sync::Arc;

use ndarray::{Array1, Array2, Array3};

use crate::error::Result;
use crate::expr::{parse, Dims, Expr};
use crate::jet::{Jet, JetSpace};

/// Coefficients `N^a_i(u)` as an `m × n` matrix of fields.
#[derive(Debug, Clone, PartialEq)]
pub struct NConnection {
    dims: Dims,
    coeffs: Array2<Expr>,
}

impl NConnection {
    pub fn new(dims: Dims, coeffs: Array2<Expr>) -> Result<Self> {
        if coeffs.dim() != (dims.m(), dims.n()) {
            return Err(crate::GeometryError::Shape(format!(
                "N-connection must be {}x{}, got {:?}",
                dims.m(),
                dims.n(),
                coeffs.dim()
            )));
        }
        Ok(Self { dims, coeffs })
    }

    pub fn zero(dims: Dims) -> Self {
        Self {
            dims,
            coeffs: Array2::from_elem((dims.m(), dims.n()), Expr::Num(0.0)),
        }
    }

    /// Parses rows `a = 1..m`, each holding `N^a_1 .. N^a_n`.
    pub fn parse(dims: Dims, rows: &[Vec<&str>]) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(dims.m() * dims.n());
        for row in rows {
            for src in row {
                coeffs.push(parse(src, dims)?);
            }
        }
        let coeffs = Array2::from_shape_vec((rows.len(), rows.first().map_or(0, Vec::len)), coeffs)
            .map_err(|e| crate::GeometryError::Shape(e.to_string()))?;
        Self::new(dims, coeffs)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn coeffs(&self) -> &Array2<Expr> {
        &self.coeffs
    }

    pub fn jets(&self, space: &Arc<JetSpace>, point: &[f64], order: usize) -> Result<NConnectionJets> {
        let mut n = Vec::with_capacity(self.coeffs.len());
        for e in self.coeffs.iter() {
            n.push(e.eval_in(space, self.dims, point, order)?);
        }
        let n = Array2::from_shape_vec(self.coeffs.dim(), n).expect("shape checked");
        Ok(NConnectionJets::new(self.dims, point.to_vec(), n))
    }

    fn jets_at(&self, point: &[f64], order: usize) -> Result<NConnectionJets> {
        let space = JetSpace::shared(self.dims.total(), order);
        self.jets(&space, point, order)
    }
}

/// Jets of `N^a_i` at a point, with the frame calculus built on them.
#[derive(Debug, Clone)]
pub struct NConnectionJets {
    dims: Dims,
    point: Vec<f64>,
    n: Array2<Jet>,
}

impl NConnectionJets {
    pub fn new(dims: Dims, point: Vec<f64>, n: Array2<Jet>) -> Self {
        assert_eq!(n.dim(), (dims.m(), dims.n()));
        Self { dims, point, n }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn coeffs(&self) -> &Array2<Jet> {
        &self.n
    }

    pub fn order(&self) -> usize {
        self.n.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.n[[0, 0]].space()
    }

    /// `e_α(f)`: `∂_i f − N^a_i ∂_a f` for horizontal `α = i`, `∂_a f` otherwise.
    pub fn frame_derivative(&self, f: &Jet, alpha: usize) -> Jet {
        let n = self.dims.n();
        if alpha >= n {
            return f.derivative(alpha);
        }
        let mut out = f.derivative(alpha);
        for a in 0..self.dims.m() {
            out = &out - &(&self.n[[a, alpha]] * &f.derivative(n + a));
        }
        out
    }

    /// `Ω^a_{ij} = ∂_j N^a_i − ∂_i N^a_j + N^b_i ∂_b N^a_j − N^b_j ∂_b N^a_i`, stored `[a, i, j]`.
    pub fn omega_jets(&self) -> Array3<Jet> {
        let (n, m) = (self.dims.n(), self.dims.m());
        Array3::from_shape_fn((m, n, n), |(a, i, j)| {
            let mut w = &self.n[[a, i]].derivative(j) - &self.n[[a, j]].derivative(i);
            for b in 0..m {
                let nb = self.dims.v(b);
                w = &w + &(&self.n[[b, i]] * &self.n[[a, j]].derivative(nb));
                w = &w - &(&self.n[[b, j]] * &self.n[[a, i]].derivative(nb));
            }
            w
        })
    }

    /// Anholonomy coefficients `W[γ, α, β]` as jets.
    pub fn anholonomy_jets(&self) -> Array3<Jet> {
        let (n, m) = (self.dims.n(), self.dims.m());
        let dim = self.dims.total();
        let order = self.order() - 1;
        let space = self.space().clone();
        let mut w = Array3::from_shape_fn((dim, dim, dim), |_| Jet::zero(&space, order));
        let omega = self.omega_jets();
        for a in 0..m {
            for i in 0..n {
                for j in 0..n {
                    w[[n + a, i, j]] = omega[[a, i, j]].clone();
                }
                for b in 0..m {
                    // [e_i, e_b] = ∂_b N^a_i e_a
                    let d = self.n[[a, i]].derivative(n + b);
                    w[[n + a, n + b, i]] = -&d;
                    w[[n + a, i, n + b]] = d;
                }
            }
        }
        w
    }

    /// Coordinate components of the adapted frame: column `α` is `e_α`.
    pub fn frame_jets(&self) -> Array2<Jet> {
        let (n, dim) = (self.dims.n(), self.dims.total());
        let order = self.order();
        let space = self.space().clone();
        Array2::from_shape_fn((dim, dim), |(mu, alpha)| {
            if mu == alpha {
                Jet::constant(&space, 1.0, order)
            } else if mu >= n && alpha < n {
                -&self.n[[mu - n, alpha]]
            } else {
                Jet::zero(&space, order)
            }
        })
    }

    /// Coordinate components of the adapted coframe: row `β` is `e^β`.
    pub fn coframe_jets(&self) -> Array2<Jet> {
        let (n, dim) = (self.dims.n(), self.dims.total());
        let order = self.order();
        let space = self.space().clone();
        Array2::from_shape_fn((dim, dim), |(beta, mu)| {
            if mu == beta {
                Jet::constant(&space, 1.0, order)
            } else if beta >= n && mu < n {
                self.n[[beta - n, mu]].clone()
            } else {
                Jet::zero(&space, order)
            }
        })
    }

    /// The values-only summary used by the torsion and curvature formulas.
    pub fn at_point(&self) -> NConnectionAt {
        let (n, m) = (self.dims.n(), self.dims.m());
        NConnectionAt {
            dims: self.dims,
            point: self.point.clone(),
            n: self.n.map(Jet::value),
            omega: self.omega_jets().map(Jet::value),
            dn_dy: Array3::from_shape_fn((m, n, m), |(a, i, b)| self.n[[a, i]].partial(&[n + b])),
        }
    }
}

/// Values of `N`, `Ω` and `∂_b N^a_i` at a point.
#[derive(Debug, Clone)]
pub struct NConnectionAt {
    pub dims: Dims,
    pub point: Vec<f64>,
    /// `N^a_i` as `[a, i]`.
    pub n: Array2<f64>,
    /// `Ω^a_{ij}` as `[a, i, j]`.
    pub omega: Array3<f64>,
    /// `∂_b N^a_i` as `[a, i, b]`.
    pub dn_dy: Array3<f64>,
}

/// Frame, coframe and anholonomy coefficients at a point.
#[derive(Debug, Clone)]
pub struct AdaptedFramePoint {
    pub point: Vec<f64>,
    /// Column `α` holds the coordinate components of `e_α`.
    pub frame: Array2<f64>,
    /// Row `β` holds the coordinate components of `e^β`.
    pub coframe: Array2<f64>,
    /// `W[γ, α, β]` with `[e_α, e_β] = W^γ_{αβ} e_γ`.
    pub anholonomy: Array3<f64>,
}

impl AdaptedFramePoint {
    /// The vielbein in row layout `e_α^{ μ}` (row = frame index); block upper-triangular.
    pub fn vielbein(&self) -> Array2<f64> {
        self.frame.t().to_owned()
    }
}

/// `Ω^a_{ij}` at a point, stored `[a, i, j]`.
pub fn nconnection_curvature(nc: &NConnection, point: &[f64]) -> Result<Array3<f64>> {
    Ok(nc.jets_at(point, 1)?.omega_jets().map(Jet::value))
}

fn lie_bracket(x: &[Jet], y: &[Jet]) -> Vec<Jet> {
    let dim = x.len();
    (0..dim)
        .map(|mu| {
            let mut s = &x[0] * &y[mu].derivative(0) - &y[0] * &x[mu].derivative(0);
            for nu in 1..dim {
                s = &s + &(&x[nu] * &y[mu].derivative(nu));
                s = &s - &(&y[nu] * &x[mu].derivative(nu));
            }
            s
        })
        .collect()
}

/// Vertical projection `v(X)^{n+a} = e^a(X) = X^{n+a} + N^a_k X^k`, horizontal part zero.
fn vertical(nj: &NConnectionJets, x: &[Jet]) -> Vec<Jet> {
    let (n, m) = (nj.dims.n(), nj.dims.m());
    let zero = Jet::zero(nj.space(), x[0].order());
    let mut out = vec![zero; n + m];
    for a in 0..m {
        let mut c = x[n + a].clone();
        for k in 0..n {
            c = &c + &(&nj.n[[a, k]] * &x[k]);
        }
        out[n + a] = c;
    }
    out
}

/// Nijenhuis form `Ω(X,Y) = [vX,vY] + v[X,Y] − v[vX,Y] − v[X,vY]` on the
/// coordinate fields `X = ∂_{x^i}`, `Y = ∂_{x^j}`; returns its `m` vertical components.
pub fn nijenhuis_curvature_oracle(nc: &NConnection, i: usize, j: usize, point: &[f64]) -> Result<Vec<f64>> {
    // two brackets deep, one derivative each
    Ok(nijenhuis_oracle_jets(&nc.jets_at(point, 2)?, i, j))
}

/// [`nijenhuis_curvature_oracle`] on precomputed jets of order at least 2.
pub fn nijenhuis_oracle_jets(nj: &NConnectionJets, i: usize, j: usize) -> Vec<f64> {
    let dims = nj.dims();
    assert!(i < dims.n() && j < dims.n(), "horizontal indices out of range");
    assert!(nj.order() >= 2, "the oracle needs second-order jets");
    let space = nj.space().clone();
    let coord = |k: usize| -> Vec<Jet> {
        (0..dims.total())
            .map(|mu| Jet::constant(&space, if mu == k { 1.0 } else { 0.0 }, nj.order()))
            .collect()
    };
    let (x, y) = (coord(i), coord(j));
    let (vx, vy) = (vertical(nj, &x), vertical(nj, &y));
    let t1 = lie_bracket(&vx, &vy);
    let t2 = vertical(nj, &lie_bracket(&x, &y));
    let t3 = vertical(nj, &lie_bracket(&vx, &y));
    let t4 = vertical(nj, &lie_bracket(&x, &vy));
    // every term is vertical, so e^a(Ω) is the y^a component
    (dims.n()..dims.total())
        .map(|mu| (t1[mu].value() + t2[mu].value()) - (t3[mu].value() + t4[mu].value()))
        .collect()
}

/// Adapted frame, coframe and anholonomy at a point.
pub fn adapted_frames(nc: &NConnection, point: &[f64]) -> Result<AdaptedFramePoint> {
    let nj = nc.jets_at(point, 1)?;
    Ok(AdaptedFramePoint {
        point: point.to_vec(),
        frame: nj.frame_jets().map(Jet::value),
        coframe: nj.coframe_jets().map(Jet::value),
        anholonomy: nj.anholonomy_jets().map(Jet::value),
    })
}

/// `(e_α f)` for every frame index `α`.
pub fn frame_derivative(f: &Expr, nc: &NConnection, point: &[f64]) -> Result<Array1<f64>> {
    let dims = nc.dims();
    let space = JetSpace::shared(dims.total(), 1);
    let fj = f.eval_in(&space, dims, point, 1)?;
    let nj = nc.jets(&space, point, 1)?;
    Ok((0..dims.total())
        .map(|alpha| nj.frame_derivative(&fj, alpha).value())
        .collect())
}

/// Residual of `[e_α, e_β](f) = W^γ_{αβ} e_γ(f)` over all frame pairs.
pub fn commutator_residual(f: &Expr, nc: &NConnection, point: &[f64]) -> Result<f64> {
    let dims = nc.dims();
    let dim = dims.total();
    let space = JetSpace::shared(dim, 2);
    let fj = f.eval_in(&space, dims, point, 2)?;
    let nj = nc.jets(&space, point, 2)?;
    let w = nj.anholonomy_jets().map(Jet::value);
    let first: Vec<Jet> = (0..dim).map(|a| nj.frame_derivative(&fj, a)).collect();
    let mut worst = 0.0f64;
    for alpha in 0..dim {
        for beta in 0..dim {
            let lhs =
                nj.frame_derivative(&first[beta], alpha).value() - nj.frame_derivative(&first[alpha], beta).value();
            let rhs: f64 = (0..dim).map(|g| w[[g, alpha, beta]] * first[g].value()).sum();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::invert;

    fn dims(n: usize, m: usize) -> Dims {
        Dims::new(n, m).unwrap()
    }

    fn example() -> NConnection {
        NConnection::parse(dims(2, 1), &[vec!["y1", "x1*y1"]]).unwrap()
    }

    #[test]
    fn flat_connection_has_no_curvature() {
        let om = nconnection_curvature(&NConnection::zero(dims(2, 2)), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(om.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hand_evaluated_curvature() {
        let om = nconnection_curvature(&example(), &[2.0, 0.0, 3.0]).unwrap();
        assert_eq!(om[[0, 0, 1]], -3.0);
        assert_eq!(om[[0, 1, 0]], 3.0);
        assert_eq!(om[[0, 0, 0]], 0.0);
    }

    #[test]
    fn nijenhuis_oracle_matches_example() {
        let v = nijenhuis_curvature_oracle(&example(), 0, 1, &[2.0, 0.0, 3.0]).unwrap();
        assert!((v[0] + 3.0).abs() < 1e-14);
    }

    #[test]
    fn y_linear_connection_with_cancelling_terms() {
        let nc = NConnection::parse(dims(2, 1), &[vec!["1*y1", "0*y1"]]).unwrap();
        let om = nconnection_curvature(&nc, &[0.3, -0.2, 5.0]).unwrap();
        assert!(om.iter().all(|v| v.abs() < 1e-15));
        let v = nijenhuis_curvature_oracle(&nc, 0, 1, &[0.3, -0.2, 5.0]).unwrap();
        assert!(v[0].abs() < 1e-15);
    }

    #[test]
    fn one_horizontal_dimension_is_flat() {
        let nc = NConnection::parse(dims(1, 2), &[vec!["x1*y2^2"], vec!["sin(y1)*exp(x1)"]]).unwrap();
        let om = nconnection_curvature(&nc, &[0.5, 0.1, -0.7]).unwrap();
        assert!(om.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flat_frames_are_identity() {
        let f = adapted_frames(&NConnection::zero(dims(1, 2)), &[0.0, 1.0, 2.0]).unwrap();
        for ((i, j), v) in f.frame.indexed_iter() {
            assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
        }
        assert_eq!(f.frame, f.coframe);
        assert!(f.anholonomy.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn half_y_connection_anholonomy() {
        let nc = NConnection::parse(dims(1, 1), &[vec!["y1/2"]]).unwrap();
        let f = adapted_frames(&nc, &[0.7, -1.3]).unwrap();
        // [e_1, e_2] = W^2_{12} e_2 with W = ∂_y (y/2)
        assert_eq!(f.anholonomy[[1, 0, 1]], 0.5);
        assert_eq!(f.anholonomy[[1, 1, 0]], -0.5);
        assert_eq!(f.anholonomy[[0, 0, 1]], 0.0);
    }

    #[test]
    fn vielbein_is_block_upper_triangular_and_inverse_to_coframe() {
        let nc = NConnection::parse(dims(2, 2), &[vec!["x2*y1", "y2^2"], vec!["sin(x1)", "y1*y2"]]).unwrap();
        let f = adapted_frames(&nc, &[0.3, 0.4, -0.5, 0.8]).unwrap();
        let e = f.vielbein();
        for r in 2..4 {
            for c in 0..2 {
                assert_eq!(e[[r, c]], 0.0);
            }
        }
        let (inv, _) = invert(&f.frame).unwrap();
        for (a, b) in inv.iter().zip(f.coframe.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_derivative_examples() {
        let d = dims(1, 1);
        let nc = NConnection::parse(d, &[vec!["2.5"]]).unwrap();
        let f = parse("y1", d).unwrap();
        let ef = frame_derivative(&f, &nc, &[0.1, 0.2]).unwrap();
        assert_eq!(ef[0], -2.5);
        assert_eq!(ef[1], 1.0);
        let g = parse("x1^2*y1", d).unwrap();
        let flat = frame_derivative(&g, &NConnection::zero(d), &[3.0, 2.0]).unwrap();
        assert_eq!(flat.to_vec(), vec![12.0, 9.0]);
    }

    #[test]
    fn commutator_matches_anholonomy() {
        let d = dims(2, 2);
        let nc = NConnection::parse(d, &[vec!["x2*y1", "y2^2 + x1"], vec!["sin(x1)*y2", "y1*y2"]]).unwrap();
        let f = parse("x1^3 + x1*y2*y1 - 2*x2^2*y2 + y1^3", d).unwrap();
        let r = commutator_residual(&f, &nc, &[0.3, 0.4, -0.5, 0.8]).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn shape_is_validated() {
        let d = dims(2, 1);
        assert!(NConnection::parse(d, &[vec!["y1"]]).is_err());
    }
}
