//! Distinguished connections in the adapted frame.
//!
//! Block connections store `L^i_jk = (D_{e_k} e_j)^i`, `L^a_bk`, `C^i_jc = (D_{e_c} e_j)^i`
//! and `C^a_bc` as `[upper, lower, direction]`. A full frame connection stores
//! `Γ[γ, α, β] = (D_{e_α} e_β)^γ`, direction first.

use ndarray::{Array2, Array3};

use crate::error::Result;
use crate::expr::Dims;
use crate::geometry::{GeometrySource, LocalGeometry};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionKind {
    Canonical,
    Berwald,
    Custom,
}

impl ConnectionKind {
    pub fn name(self) -> &'static str {
        match self {
            ConnectionKind::Canonical => "canonical",
            ConnectionKind::Berwald => "berwald",
            ConnectionKind::Custom => "custom",
        }
    }
}

/// Which expression to use for the `C^a_bc` block of the canonical connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CvvFormula {
    /// `½ h^{ad}(e_c h_bd + e_b h_cd − e_d h_bc)`.
    #[default]
    Symmetric,
    /// `½ h^{ad}(e_c h_bd + e_c h_cd − e_d h_bc)`, kept to demonstrate that it is not metric.
    AsPrinted,
}

/// The four coefficient blocks of a d-connection.
#[derive(Debug, Clone, PartialEq)]
pub struct DConnectionBlocks<T> {
    pub kind: ConnectionKind,
    /// `L^i_jk` as `[i, j, k]`.
    pub l_h: Array3<T>,
    /// `L^a_bk` as `[a, b, k]`.
    pub l_v: Array3<T>,
    /// `C^i_jc` as `[i, j, c]`.
    pub c_h: Array3<T>,
    /// `C^a_bc` as `[a, b, c]`.
    pub c_v: Array3<T>,
}

pub type DConnection = DConnectionBlocks<f64>;
/// Connection coefficients as jets, so that they can be differentiated.
pub type DConnectionField = DConnectionBlocks<Jet>;

/// All `(n+m)³` coefficients `Γ[γ, α, β] = (D_{e_α} e_β)^γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullFrameConnection<T> {
    pub coeffs: Array3<T>,
}

pub type FullConnectionField = FullFrameConnection<Jet>;

impl<T: Clone> DConnectionBlocks<T> {
    pub fn dims(&self) -> Dims {
        let (n, m) = (self.l_h.dim().0, self.c_v.dim().0);
        Dims::new(n, m).expect("nonempty blocks")
    }

    fn to_full_with(&self, zero: T) -> FullFrameConnection<T> {
        let dims = self.dims();
        let (n, m) = (dims.n(), dims.m());
        let dim = n + m;
        let mut g = Array3::from_elem((dim, dim, dim), zero);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    g[[i, k, j]] = self.l_h[[i, j, k]].clone();
                }
                for c in 0..m {
                    g[[i, n + c, j]] = self.c_h[[i, j, c]].clone();
                }
            }
        }
        for a in 0..m {
            for b in 0..m {
                for k in 0..n {
                    g[[n + a, k, n + b]] = self.l_v[[a, b, k]].clone();
                }
                for c in 0..m {
                    g[[n + a, n + c, n + b]] = self.c_v[[a, b, c]].clone();
                }
            }
        }
        FullFrameConnection { coeffs: g }
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> DConnectionBlocks<U> {
        DConnectionBlocks {
            kind: self.kind,
            l_h: self.l_h.map(&f),
            l_v: self.l_v.map(&f),
            c_h: self.c_h.map(&f),
            c_v: self.c_v.map(&f),
        }
    }
}

impl DConnection {
    pub fn to_full(&self) -> FullFrameConnection<f64> {
        self.to_full_with(0.0)
    }

    pub fn zero(dims: Dims, kind: ConnectionKind) -> Self {
        let (n, m) = (dims.n(), dims.m());
        Self {
            kind,
            l_h: Array3::zeros((n, n, n)),
            l_v: Array3::zeros((m, m, n)),
            c_h: Array3::zeros((n, n, m)),
            c_v: Array3::zeros((m, m, m)),
        }
    }

    pub fn max_abs(&self) -> f64 {
        [&self.l_h, &self.l_v, &self.c_h, &self.c_v]
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        [&self.l_h, &self.l_v, &self.c_h, &self.c_v]
            .iter()
            .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl DConnectionField {
    pub fn values(&self) -> DConnection {
        self.map(Jet::value)
    }

    pub fn to_full(&self) -> FullConnectionField {
        let zero = Jet::zero(self.l_h[[0, 0, 0]].space(), self.order());
        self.to_full_with(zero)
    }

    pub fn order(&self) -> usize {
        [&self.l_h, &self.l_v, &self.c_h, &self.c_v]
            .iter()
            .flat_map(|b| b.iter())
            .map(Jet::order)
            .min()
            .unwrap_or(0)
    }
}

impl FullFrameConnection<Jet> {
    pub fn values(&self) -> FullFrameConnection<f64> {
        FullFrameConnection {
            coeffs: self.coeffs.map(Jet::value),
        }
    }
}

impl FullFrameConnection<f64> {
    /// Reads the four d-connection blocks; coefficients mixing h and v are dropped.
    pub fn blocks(&self, dims: Dims) -> DConnection {
        let (n, m) = (dims.n(), dims.m());
        let g = &self.coeffs;
        DConnection {
            kind: ConnectionKind::Custom,
            l_h: Array3::from_shape_fn((n, n, n), |(i, j, k)| g[[i, k, j]]),
            l_v: Array3::from_shape_fn((m, m, n), |(a, b, k)| g[[n + a, k, n + b]]),
            c_h: Array3::from_shape_fn((n, n, m), |(i, j, c)| g[[i, n + c, j]]),
            c_v: Array3::from_shape_fn((m, m, m), |(a, b, c)| g[[n + a, n + c, n + b]]),
        }
    }
}

/// `e_α` applied to every entry of a matrix of jets: `[r, c, α]`.
fn frame_gradient(geo: &LocalGeometry, m: &Array2<Jet>) -> Array3<Jet> {
    let dim = geo.dims().total();
    let (r, c) = m.dim();
    let nc = geo.nconn();
    Array3::from_shape_fn((r, c, dim), |(i, j, a)| nc.frame_derivative(&m[[i, j]], a))
}

fn sum_jets(items: impl Iterator<Item = Jet>) -> Jet {
    crate::jet::sum(items).expect("nonempty index range")
}

/// Canonical coefficients as jets of order `geo.order() − 1`.
pub fn canonical_field(geo: &LocalGeometry, cvv: CvvFormula) -> DConnectionField {
    let dims = geo.dims();
    let (n, m) = (dims.n(), dims.m());
    let (g, h, gi, hi) = (geo.g(), geo.h(), geo.g_inv(), geo.h_inv());
    let eg = frame_gradient(geo, g);
    let eh = frame_gradient(geo, h);
    let nj = geo.nconn().coeffs();
    // ∂_b N^a_k as [a, k, b]
    let dn = Array3::from_shape_fn((m, n, m), |(a, k, b)| nj[[a, k]].derivative(n + b));

    let l_h = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
        sum_jets((0..n).map(|r| {
            let t = &(&eg[[j, r, k]] + &eg[[k, r, j]]) - &eg[[j, k, r]];
            &gi[[i, r]] * &t
        }))
        .scale(0.5)
    });
    let l_v = Array3::from_shape_fn((m, m, n), |(a, b, k)| {
        let s = sum_jets((0..m).map(|c| {
            let mut t = eh[[b, c, k]].clone();
            for d in 0..m {
                t = &t - &(&h[[d, c]] * &dn[[d, k, b]]);
                t = &t - &(&h[[d, b]] * &dn[[d, k, c]]);
            }
            &hi[[a, c]] * &t
        }));
        &dn[[a, k, b]] + &s.scale(0.5)
    });
    let c_h = Array3::from_shape_fn((n, n, m), |(i, j, c)| {
        sum_jets((0..n).map(|k| &gi[[i, k]] * &eg[[j, k, n + c]])).scale(0.5)
    });
    let c_v = Array3::from_shape_fn((m, m, m), |(a, b, c)| {
        sum_jets((0..m).map(|d| {
            let middle = match cvv {
                CvvFormula::Symmetric => &eh[[c, d, n + b]],
                CvvFormula::AsPrinted => &eh[[c, d, n + c]],
            };
            let t = &(&eh[[b, d, n + c]] + middle) - &eh[[b, c, n + d]];
            &hi[[a, d]] * &t
        }))
        .scale(0.5)
    });
    DConnectionBlocks {
        kind: ConnectionKind::Canonical,
        l_h,
        l_v,
        c_h,
        c_v,
    }
}

/// Berwald coefficients `(L̂^i_jk, ∂_b N^a_k, 0, Ĉ^a_bc)` as jets.
pub fn berwald_field(geo: &LocalGeometry) -> DConnectionField {
    let dims = geo.dims();
    let (n, m) = (dims.n(), dims.m());
    let canon = canonical_field(geo, CvvFormula::Symmetric);
    let order = canon.order();
    let nj = geo.nconn().coeffs();
    let zero = Jet::zero(geo.nconn().space(), order);
    DConnectionBlocks {
        kind: ConnectionKind::Berwald,
        l_v: Array3::from_shape_fn((m, m, n), |(a, b, k)| nj[[a, k]].derivative(n + b).truncate(order)),
        c_h: Array3::from_elem((n, n, m), zero),
        l_h: canon.l_h,
        c_v: canon.c_v,
    }
}

/// Levi-Civita connection of `diag(g, h)` in the adapted frame, via the Koszul formula.
pub fn levi_civita_field(geo: &LocalGeometry) -> FullConnectionField {
    let dim = geo.dims().total();
    let gm = geo.frame_metric();
    let gi = geo.frame_metric_inverse();
    let eg = frame_gradient(geo, &gm);
    let w = geo.nconn().anholonomy_jets();
    // Γ_{γ;αβ} = G(∇_α e_β, e_γ)
    let lowered = Array3::from_shape_fn((dim, dim, dim), |(c, a, b)| {
        let mut t = &(&eg[[b, c, a]] + &eg[[a, c, b]]) - &eg[[a, b, c]];
        for d in 0..dim {
            t = &t + &(&w[[d, a, b]] * &gm[[d, c]]);
            t = &t - &(&w[[d, b, c]] * &gm[[d, a]]);
            t = &t + &(&w[[d, c, a]] * &gm[[d, b]]);
        }
        t.scale(0.5)
    });
    let coeffs = Array3::from_shape_fn((dim, dim, dim), |(mu, a, b)| {
        sum_jets((0..dim).map(|c| &gi[[mu, c]] * &lowered[[c, a, b]]))
    });
    FullFrameConnection { coeffs }
}

/// Result of comparing the canonical connection with Levi-Civita plus distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    /// `P^i_jk = 0`, `P^a_bk = ∂_b N^a_k`, `P^i_jc = −½ g^{ik} Ω^a_kj h_ca`, `P^a_bc = 0`.
    pub p: DConnection,
    /// `max |Γ̂ − (∇ + P̂)|` over the four blocks.
    pub residual: f64,
}

/// Distortion blocks and the residual of `Γ̂ = ∇ + P̂`.
///
/// The Levi-Civita coefficients enter with their lower pair read as (vector, direction)
/// swapped relative to the block convention: `∇^i_jk := (∇_{e_j} e_k)^i`.
pub fn distortion_at(geo: &LocalGeometry) -> Distortion {
    let dims = geo.dims();
    let (n, m) = (dims.n(), dims.m());
    let canon = canonical_field(&geo.truncated(1), CvvFormula::Symmetric).values();
    let lc = levi_civita_field(&geo.truncated(1)).values().coeffs;
    let nat = geo.nconn().at_point();
    let (g_inv, h) = (geo.g_inv().map(Jet::value), geo.h_values());
    let mut p = DConnection::zero(dims, ConnectionKind::Custom);
    for a in 0..m {
        for b in 0..m {
            for k in 0..n {
                p.l_v[[a, b, k]] = nat.dn_dy[[a, k, b]];
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for c in 0..m {
                let mut s = 0.0;
                for k in 0..n {
                    for a in 0..m {
                        s += g_inv[[i, k]] * nat.omega[[a, k, j]] * h[[c, a]];
                    }
                }
                p.c_h[[i, j, c]] = -0.5 * s;
            }
        }
    }
    let mut residual = 0.0f64;
    let mut track = |x: f64| residual = residual.max(x.abs());
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                track(canon.l_h[[i, j, k]] - lc[[i, j, k]] - p.l_h[[i, j, k]]);
            }
            for c in 0..m {
                track(canon.c_h[[i, j, c]] - lc[[i, j, n + c]] - p.c_h[[i, j, c]]);
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            for k in 0..n {
                track(canon.l_v[[a, b, k]] - lc[[n + a, n + b, k]] - p.l_v[[a, b, k]]);
            }
            for c in 0..m {
                track(canon.c_v[[a, b, c]] - lc[[n + a, n + b, n + c]] - p.c_v[[a, b, c]]);
            }
        }
    }
    Distortion { p, residual }
}

/// Max residual of the covariant derivative of the frame metric, per block.
///
/// The first letter names the metric block (`g` → h, `h` → v), the second the
/// direction of differentiation: `hh = |D_k g_ij|`, `hv = |D_c g_ij|`,
/// `vh = |D_k h_ab|`, `vv = |D_c h_ab|`. `mixed` collects `(D_α G)_{ia}`,
/// which vanishes identically for d-connections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricityResidual {
    pub hh: f64,
    pub hv: f64,
    pub vh: f64,
    pub vv: f64,
    pub mixed: f64,
}

impl MetricityResidual {
    pub fn max(&self) -> f64 {
        self.hh.max(self.hv).max(self.vh).max(self.vv).max(self.mixed)
    }
}

/// `D_α G_βγ = e_α G_βγ − Γ^δ_{αβ} G_δγ − Γ^δ_{αγ} G_βδ` for a full frame connection.
pub fn metricity_residual_full(conn: &FullFrameConnection<f64>, geo: &LocalGeometry) -> MetricityResidual {
    let dims = geo.dims();
    let (n, dim) = (dims.n(), dims.total());
    let gm = geo.frame_metric();
    let eg = frame_gradient(&geo.truncated(1), &gm.map(|j| j.truncate(1))).map(Jet::value);
    let gv = gm.map(Jet::value);
    let gamma = &conn.coeffs;
    let mut out = MetricityResidual::default();
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                let mut r = eg[[b, c, a]];
                for d in 0..dim {
                    r -= gamma[[d, a, b]] * gv[[d, c]] + gamma[[d, a, c]] * gv[[b, d]];
                }
                let r = r.abs();
                let slot = match (b < n, c < n, a < n) {
                    (true, true, true) => &mut out.hh,
                    (true, true, false) => &mut out.hv,
                    (false, false, true) => &mut out.vh,
                    (false, false, false) => &mut out.vv,
                    _ => &mut out.mixed,
                };
                *slot = slot.max(r);
            }
        }
    }
    out
}

pub fn metricity_residual(conn: &DConnection, geo: &LocalGeometry) -> MetricityResidual {
    metricity_residual_full(&conn.to_full(), geo)
}

pub fn canonical_dconnection(src: &dyn GeometrySource, point: &[f64]) -> Result<DConnection> {
    Ok(canonical_field(&src.local(point, 1)?, CvvFormula::Symmetric).values())
}

pub fn berwald_dconnection(src: &dyn GeometrySource, point: &[f64]) -> Result<DConnection> {
    Ok(berwald_field(&src.local(point, 1)?).values())
}

pub fn levi_civita_adapted(src: &dyn GeometrySource, point: &[f64]) -> Result<FullFrameConnection<f64>> {
    Ok(levi_civita_field(&src.local(point, 1)?).values())
}

pub fn distortion(src: &dyn GeometrySource, point: &[f64]) -> Result<Distortion> {
    Ok(distortion_at(&src.local(point, 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmetric::{DMetric, DStructure};
    use crate::nconn::NConnection;

    fn structure(n: usize, m: usize, g: &[Vec<&str>], h: &[Vec<&str>], nc: &[Vec<&str>]) -> DStructure {
        let dims = Dims::new(n, m).unwrap();
        DStructure::new(
            DMetric::parse(dims, g, h).unwrap(),
            NConnection::parse(dims, nc).unwrap(),
        )
        .unwrap()
    }

    fn sasaki_example() -> DStructure {
        structure(1, 1, &[vec!["exp(x1)/2"]], &[vec!["exp(x1)/2"]], &[vec!["y1/2"]])
    }

    #[test]
    fn flat_canonical_is_zero() {
        let s = structure(2, 1, &[vec!["1", "0"], vec!["0", "1"]], &[vec!["1"]], &[vec!["0", "0"]]);
        let c = canonical_dconnection(&s, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    #[test]
    fn sasaki_example_blocks() {
        let s = sasaki_example();
        let c = canonical_dconnection(&s, &[0.4, 1.7]).unwrap();
        assert!((c.l_h[[0, 0, 0]] - 0.5).abs() < 1e-14);
        assert!((c.l_v[[0, 0, 0]] - 0.5).abs() < 1e-14);
        assert!(c.c_h[[0, 0, 0]].abs() < 1e-14);
        assert!(c.c_v[[0, 0, 0]].abs() < 1e-14);
        let b = berwald_dconnection(&s, &[0.4, 1.7]).unwrap();
        assert_eq!(b.kind, ConnectionKind::Berwald);
        assert!((b.l_v[[0, 0, 0]] - 0.5).abs() < 1e-14);
        let d = distortion(&s, &[0.4, 1.7]).unwrap();
        assert!((d.p.l_v[[0, 0, 0]] - 0.5).abs() < 1e-14);
        assert_eq!(d.p.c_h[[0, 0, 0]], 0.0);
        assert!(d.residual < 1e-12, "{}", d.residual);
    }

    #[test]
    fn canonical_is_metric_on_a_curved_instance() {
        let s = structure(
            2,
            2,
            &[vec!["2 + sin(x1*y2)", "0.3*x2"], vec!["0.3*x2", "1.5 + y1^2"]],
            &[vec!["exp(x1 - y1)", "0.2*y2*x2"], vec!["0.2*y2*x2", "2 + cos(x2 + y1)"]],
            &[vec!["x2*y1 + y2^2", "sin(x1)*y2"], vec!["y1*y2", "x1 - y1^2"]],
        );
        let geo = s.local(&[0.3, -0.4, 0.5, 0.7], 1).unwrap();
        let c = canonical_field(&geo, CvvFormula::Symmetric).values();
        let r = metricity_residual(&c, &geo);
        assert!(r.max() < 1e-12, "{r:?}");
        let printed = canonical_field(&geo, CvvFormula::AsPrinted).values();
        assert!(metricity_residual(&printed, &geo).vv > 1e-3);
        let lc = levi_civita_field(&geo).values();
        assert!(metricity_residual_full(&lc, &geo).max() < 1e-12);
        assert!(distortion_at(&geo).residual < 1e-12);
    }

    #[test]
    fn berwald_is_only_partially_metric() {
        let s = structure(1, 1, &[vec!["1 + x1^2"]], &[vec!["2 + x1*y1"]], &[vec!["y1^2/3 + x1"]]);
        let geo = s.local(&[0.6, 0.9], 1).unwrap();
        let r = metricity_residual(&berwald_field(&geo).values(), &geo);
        assert!(r.hh < 1e-12 && r.vv < 1e-12, "{r:?}");
        assert!(r.vh > 1e-3, "{r:?}");
    }

    #[test]
    fn integrable_case_canonical_equals_levi_civita() {
        let s = structure(
            1,
            2,
            &[vec!["exp(x1)"]],
            &[vec!["2 + x1^2", "0"], vec!["0", "1"]],
            &[vec!["0"], vec!["0"]],
        );
        let geo = s.local(&[0.5, 1.0, 2.0], 1).unwrap();
        let canon = canonical_field(&geo, CvvFormula::Symmetric).values();
        let lc = levi_civita_field(&geo).values().blocks(geo.dims());
        let diff = [
            (&canon.l_h, &lc.l_h),
            (&canon.l_v, &lc.l_v),
            (&canon.c_h, &lc.c_h),
            (&canon.c_v, &lc.c_v),
        ]
        .iter()
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
        assert!(diff < 1e-14, "{diff}");
    }
}
