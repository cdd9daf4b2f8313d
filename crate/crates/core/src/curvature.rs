//! d-torsion, d-curvature, Ricci and Einstein tensors, with two independent oracles each.
//!
//! Full (frame) tensors are stored as `t[γ, ρ, σ] = T^γ(e_ρ, e_σ)` and
//! `r[γ, β, ρ, σ] = R^γ_β(e_ρ, e_σ)`.

use ndarray::{Array2, Array3, Array4};

use crate::dconn::{canonical_field, CvvFormula, DConnection, DConnectionField, FullFrameConnection};
use crate::error::{GeometryError, Result};
use crate::expr::Dims;
use crate::geometry::{GeometrySource, LocalGeometry};
use crate::jet::Jet;
use crate::linalg::invert;
use crate::nconn::{NConnectionAt, NConnectionJets};

fn max_abs_diff<'a>(pairs: impl IntoIterator<Item = (&'a f64, &'a f64)>) -> f64 {
    pairs.into_iter().fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
}

/// The five torsion blocks of a d-connection.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionBlocks {
    /// `T^i_jk` as `[i, j, k]`.
    pub hhh: Array3<f64>,
    /// `T^i_ja` as `[i, j, a]`.
    pub hhv: Array3<f64>,
    /// `T^a_ji` as `[a, j, i]`.
    pub vhh: Array3<f64>,
    /// `T^a_bi` as `[a, b, i]`.
    pub vvh: Array3<f64>,
    /// `T^a_bc` as `[a, b, c]`.
    pub vvv: Array3<f64>,
}

impl TorsionBlocks {
    fn arrays(&self) -> [&Array3<f64>; 5] {
        [&self.hhh, &self.hhv, &self.vhh, &self.vvh, &self.vvv]
    }

    pub fn max_abs(&self) -> f64 {
        self.arrays()
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn max_diff(&self, other: &TorsionBlocks) -> f64 {
        self.arrays()
            .iter()
            .zip(other.arrays().iter())
            .map(|(a, b)| max_abs_diff(a.iter().zip(b.iter())))
            .fold(0.0, f64::max)
    }

    /// Reads the blocks from `t[γ, ρ, σ] = T^γ(e_ρ, e_σ)`.
    pub fn from_full(t: &Array3<f64>, dims: Dims) -> Self {
        let (n, m) = (dims.n(), dims.m());
        Self {
            hhh: Array3::from_shape_fn((n, n, n), |(i, j, k)| t[[i, k, j]]),
            hhv: Array3::from_shape_fn((n, n, m), |(i, j, a)| t[[i, n + a, j]]),
            vhh: Array3::from_shape_fn((m, n, n), |(a, j, i)| t[[n + a, i, j]]),
            vvh: Array3::from_shape_fn((m, m, n), |(a, b, i)| t[[n + a, n + b, i]]),
            vvv: Array3::from_shape_fn((m, m, m), |(a, b, c)| t[[n + a, n + c, n + b]]),
        }
    }
}

/// Torsion from the component formulas.
pub fn dtorsion(conn: &DConnection, nat: &NConnectionAt) -> TorsionBlocks {
    let (n, m) = (nat.dims.n(), nat.dims.m());
    TorsionBlocks {
        hhh: Array3::from_shape_fn((n, n, n), |(i, j, k)| conn.l_h[[i, j, k]] - conn.l_h[[i, k, j]]),
        hhv: conn.c_h.clone(),
        vhh: Array3::from_shape_fn((m, n, n), |(a, j, i)| nat.omega[[a, j, i]]),
        vvh: Array3::from_shape_fn((m, m, n), |(a, b, i)| nat.dn_dy[[a, i, b]] - conn.l_v[[a, b, i]]),
        vvv: Array3::from_shape_fn((m, m, m), |(a, b, c)| conn.c_v[[a, b, c]] - conn.c_v[[a, c, b]]),
    }
}

/// `T^γ(e_ρ, e_σ) = de^γ(e_ρ, e_σ) + Γ^γ_{ρσ} − Γ^γ_{σρ}`; `nc` needs order ≥ 1.
pub fn full_torsion_via_forms(conn: &FullFrameConnection<f64>, nc: &NConnectionJets) -> Array3<f64> {
    let dim = nc.dims().total();
    let frame = nc.frame_jets().map(Jet::value);
    let coframe = nc.coframe_jets();
    let gamma = &conn.coeffs;
    Array3::from_shape_fn((dim, dim, dim), |(c, r, s)| {
        let mut de = 0.0;
        for nu in 0..dim {
            for mu in 0..dim {
                let d = coframe[[c, mu]].partial(&[nu]) - coframe[[c, nu]].partial(&[mu]);
                de += frame[[nu, r]] * frame[[mu, s]] * d;
            }
        }
        de + gamma[[c, r, s]] - gamma[[c, s, r]]
    })
}

/// Coordinate Lie brackets of adapted frame vectors, re-expanded in the frame: `Z[γ, ρ, σ]`.
fn frame_brackets(nc: &NConnectionJets) -> Array3<f64> {
    let dim = nc.dims().total();
    let frame = nc.frame_jets();
    let coframe = nc.coframe_jets().map(Jet::value);
    let fv = frame.map(Jet::value);
    let mut z = Array3::zeros((dim, dim, dim));
    for r in 0..dim {
        for s in 0..dim {
            let bracket: Vec<f64> = (0..dim)
                .map(|mu| {
                    (0..dim)
                        .map(|nu| {
                            fv[[nu, r]] * frame[[mu, s]].partial(&[nu]) - fv[[nu, s]] * frame[[mu, r]].partial(&[nu])
                        })
                        .sum()
                })
                .collect();
            for c in 0..dim {
                z[[c, r, s]] = (0..dim).map(|mu| coframe[[c, mu]] * bracket[mu]).sum();
            }
        }
    }
    z
}

/// `T(e_ρ, e_σ) = D_ρ e_σ − D_σ e_ρ − [e_ρ, e_σ]` with coordinate brackets.
pub fn full_torsion_via_commutator(conn: &FullFrameConnection<f64>, nc: &NConnectionJets) -> Array3<f64> {
    let dim = nc.dims().total();
    let z = frame_brackets(nc);
    let gamma = &conn.coeffs;
    Array3::from_shape_fn((dim, dim, dim), |(c, r, s)| {
        gamma[[c, r, s]] - gamma[[c, s, r]] - z[[c, r, s]]
    })
}

pub fn torsion_via_forms_oracle(conn: &DConnection, nc: &NConnectionJets) -> TorsionBlocks {
    TorsionBlocks::from_full(&full_torsion_via_forms(&conn.to_full(), nc), nc.dims())
}

pub fn torsion_via_commutator(conn: &DConnection, nc: &NConnectionJets) -> TorsionBlocks {
    TorsionBlocks::from_full(&full_torsion_via_commutator(&conn.to_full(), nc), nc.dims())
}

/// The six curvature blocks of a d-connection.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureBlocks {
    /// `R^i_hjk` as `[i, h, j, k]`.
    pub h_hh: Array4<f64>,
    /// `R^a_bjk` as `[a, b, j, k]`.
    pub v_hh: Array4<f64>,
    /// `R^i_jka` as `[i, j, k, a]`.
    pub h_hv: Array4<f64>,
    /// `R^c_bka` as `[c, b, k, a]`.
    pub v_hv: Array4<f64>,
    /// `R^i_jbc` as `[i, j, b, c]`.
    pub h_vv: Array4<f64>,
    /// `R^a_bcd` as `[a, b, c, d]`.
    pub v_vv: Array4<f64>,
}

impl CurvatureBlocks {
    fn arrays(&self) -> [&Array4<f64>; 6] {
        [&self.h_hh, &self.v_hh, &self.h_hv, &self.v_hv, &self.h_vv, &self.v_vv]
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.h_hh.dim().0, self.v_vv.dim().0).expect("nonempty blocks")
    }

    pub fn max_abs(&self) -> f64 {
        self.arrays()
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn max_diff(&self, other: &CurvatureBlocks) -> f64 {
        self.arrays()
            .iter()
            .zip(other.arrays().iter())
            .map(|(a, b)| max_abs_diff(a.iter().zip(b.iter())))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            h_hh: &self.h_hh * c,
            v_hh: &self.v_hh * c,
            h_hv: &self.h_hv * c,
            v_hv: &self.v_hv * c,
            h_vv: &self.h_vv * c,
            v_vv: &self.v_vv * c,
        }
    }

    /// Reads the blocks from `r[γ, β, ρ, σ] = R^γ_β(e_ρ, e_σ)`.
    pub fn from_full(r: &Array4<f64>, dims: Dims) -> Self {
        let (n, m) = (dims.n(), dims.m());
        Self {
            h_hh: Array4::from_shape_fn((n, n, n, n), |(i, h, j, k)| r[[i, h, k, j]]),
            v_hh: Array4::from_shape_fn((m, m, n, n), |(a, b, j, k)| r[[n + a, n + b, k, j]]),
            h_hv: Array4::from_shape_fn((n, n, n, m), |(i, j, k, a)| r[[i, j, n + a, k]]),
            v_hv: Array4::from_shape_fn((m, m, n, m), |(c, b, k, a)| r[[n + c, n + b, n + a, k]]),
            h_vv: Array4::from_shape_fn((n, n, m, m), |(i, j, b, c)| r[[i, j, n + c, n + b]]),
            v_vv: Array4::from_shape_fn((m, m, m, m), |(a, b, c, d)| r[[n + a, n + b, n + d, n + c]]),
        }
    }

    /// The full frame tensor; slots mixing h and v in `(γ, β)` are zero.
    pub fn to_full(&self) -> Array4<f64> {
        let dims = self.dims();
        let (n, m) = (dims.n(), dims.m());
        let dim = n + m;
        let mut r = Array4::zeros((dim, dim, dim, dim));
        let mut put = |idx: [usize; 4], v: f64| {
            r[[idx[0], idx[1], idx[2], idx[3]]] = v;
            r[[idx[0], idx[1], idx[3], idx[2]]] = -v;
        };
        for ((i, h, j, k), v) in self.h_hh.indexed_iter() {
            if j < k {
                put([i, h, k, j], *v);
            }
        }
        for ((a, b, j, k), v) in self.v_hh.indexed_iter() {
            if j < k {
                put([n + a, n + b, k, j], *v);
            }
        }
        for ((i, j, k, a), v) in self.h_hv.indexed_iter() {
            put([i, j, n + a, k], *v);
        }
        for ((c, b, k, a), v) in self.v_hv.indexed_iter() {
            put([n + c, n + b, n + a, k], *v);
        }
        for ((i, j, b, c), v) in self.h_vv.indexed_iter() {
            if b < c {
                put([i, j, n + c, n + b], *v);
            }
        }
        for ((a, b, c, d), v) in self.v_vv.indexed_iter() {
            if c < d {
                put([n + a, n + b, n + d, n + c], *v);
            }
        }
        r
    }
}

/// Curvature from the component formulas; `conn` and `nc` need jet order ≥ 1.
pub fn dcurvature(conn: &DConnectionField, nc: &NConnectionJets) -> CurvatureBlocks {
    let dims = nc.dims();
    let (n, m) = (dims.n(), dims.m());
    let nat = nc.at_point();
    let v = conn.values();
    let (l, lv, c, cv) = (&v.l_h, &v.l_v, &v.c_h, &v.c_v);
    let e = |f: &Jet, alpha: usize| nc.frame_derivative(f, alpha).value();
    let om = &nat.omega;
    // T^b_ka = ∂_a N^b_k − L^b_ak, as [b, k, a]
    let t = Array3::from_shape_fn((m, n, m), |(b, k, a)| nat.dn_dy[[b, k, a]] - lv[[b, a, k]]);

    let h_hh = Array4::from_shape_fn((n, n, n, n), |(i, h, j, k)| {
        let mut s = e(&conn.l_h[[i, h, j]], k) - e(&conn.l_h[[i, h, k]], j);
        for p in 0..n {
            s += l[[p, h, j]] * l[[i, p, k]] - l[[p, h, k]] * l[[i, p, j]];
        }
        for a in 0..m {
            s -= c[[i, h, a]] * om[[a, k, j]];
        }
        s
    });
    let v_hh = Array4::from_shape_fn((m, m, n, n), |(a, b, j, k)| {
        let mut s = e(&conn.l_v[[a, b, j]], k) - e(&conn.l_v[[a, b, k]], j);
        for d in 0..m {
            s += lv[[d, b, j]] * lv[[a, d, k]] - lv[[d, b, k]] * lv[[a, d, j]];
            s -= cv[[a, b, d]] * om[[d, k, j]];
        }
        s
    });
    let h_hv = Array4::from_shape_fn((n, n, n, m), |(i, j, k, a)| {
        let mut dc = e(&conn.c_h[[i, j, a]], k);
        for p in 0..n {
            dc += l[[i, p, k]] * c[[p, j, a]] - l[[p, j, k]] * c[[i, p, a]];
        }
        for b in 0..m {
            dc -= lv[[b, a, k]] * c[[i, j, b]];
        }
        let mut s = e(&conn.l_h[[i, j, k]], n + a) - dc;
        for b in 0..m {
            s += c[[i, j, b]] * t[[b, k, a]];
        }
        s
    });
    let v_hv = Array4::from_shape_fn((m, m, n, m), |(cc, b, k, a)| {
        let mut dc = e(&conn.c_v[[cc, b, a]], k);
        for d in 0..m {
            dc += lv[[cc, d, k]] * cv[[d, b, a]] - lv[[d, b, k]] * cv[[cc, d, a]] - lv[[d, a, k]] * cv[[cc, b, d]];
        }
        let mut s = e(&conn.l_v[[cc, b, k]], n + a) - dc;
        for d in 0..m {
            s += cv[[cc, b, d]] * t[[d, k, a]];
        }
        s
    });
    let h_vv = Array4::from_shape_fn((n, n, m, m), |(i, j, b, cc)| {
        let mut s = e(&conn.c_h[[i, j, b]], n + cc) - e(&conn.c_h[[i, j, cc]], n + b);
        for p in 0..n {
            s += c[[p, j, b]] * c[[i, p, cc]] - c[[p, j, cc]] * c[[i, p, b]];
        }
        s
    });
    let v_vv = Array4::from_shape_fn((m, m, m, m), |(a, b, cc, d)| {
        let mut s = e(&conn.c_v[[a, b, cc]], n + d) - e(&conn.c_v[[a, b, d]], n + cc);
        for f in 0..m {
            s += cv[[f, b, cc]] * cv[[a, f, d]] - cv[[f, b, d]] * cv[[a, f, cc]];
        }
        s
    });
    CurvatureBlocks {
        h_hh,
        v_hh,
        h_hv,
        v_hv,
        h_vv,
        v_vv,
    }
}

/// `R = dΓ + Γ ∧ Γ` on frame pairs for any frame connection given as jets (order ≥ 1).
pub fn full_curvature_via_forms(conn: &FullFrameConnection<Jet>, nc: &NConnectionJets) -> Array4<f64> {
    let dim = nc.dims().total();
    let frame = nc.frame_jets().map(Jet::value);
    let coframe = nc.coframe_jets();
    let g = &conn.coeffs;
    let gv = g.map(Jet::value);
    let mut r = Array4::zeros((dim, dim, dim, dim));
    for c in 0..dim {
        for b in 0..dim {
            // coordinate components A_μ = Γ^c_{αb} e^α_μ
            let a: Vec<Jet> = (0..dim)
                .map(|mu| crate::jet::sum((0..dim).map(|al| &g[[c, al, b]] * &coframe[[al, mu]])).expect("dim ≥ 2"))
                .collect();
            let da = Array2::from_shape_fn((dim, dim), |(nu, mu)| a[mu].partial(&[nu]) - a[nu].partial(&[mu]));
            let on_frame = frame.t().dot(&da).dot(&frame);
            for rho in 0..dim {
                for sig in 0..dim {
                    let mut s = on_frame[[rho, sig]];
                    for d in 0..dim {
                        s += gv[[c, rho, d]] * gv[[d, sig, b]] - gv[[c, sig, d]] * gv[[d, rho, b]];
                    }
                    r[[c, b, rho, sig]] = s;
                }
            }
        }
    }
    r
}

/// `R(e_ρ, e_σ) e_β = D_ρ D_σ e_β − D_σ D_ρ e_β − D_{[e_ρ, e_σ]} e_β` with coordinate brackets.
pub fn full_curvature_via_commutator(conn: &FullFrameConnection<Jet>, nc: &NConnectionJets) -> Array4<f64> {
    let dim = nc.dims().total();
    let fv = nc.frame_jets().map(Jet::value);
    let z = frame_brackets(nc);
    let g = &conn.coeffs;
    let gv = g.map(Jet::value);
    // e_ρ(f) = F^μ_ρ ∂_μ f
    let act = |f: &Jet, rho: usize| -> f64 { (0..dim).map(|mu| fv[[mu, rho]] * f.partial(&[mu])).sum() };
    Array4::from_shape_fn((dim, dim, dim, dim), |(d, b, rho, sig)| {
        let half = |p: usize, q: usize| -> f64 {
            let mut s = act(&g[[d, q, b]], p);
            for c in 0..dim {
                s += gv[[c, q, b]] * gv[[d, p, c]];
            }
            s
        };
        let mut s = half(rho, sig) - half(sig, rho);
        for al in 0..dim {
            s -= z[[al, rho, sig]] * gv[[d, al, b]];
        }
        s
    })
}

pub fn curvature_via_forms_oracle(conn: &DConnectionField, nc: &NConnectionJets) -> CurvatureBlocks {
    CurvatureBlocks::from_full(&full_curvature_via_forms(&conn.to_full(), nc), nc.dims())
}

pub fn curvature_via_commutator(conn: &DConnectionField, nc: &NConnectionJets) -> CurvatureBlocks {
    CurvatureBlocks::from_full(&full_curvature_via_commutator(&conn.to_full(), nc), nc.dims())
}

/// `Σ_α R^α_α(e_ρ, e_σ)`; zero for metric connections.
pub fn curvature_trace(r: &Array4<f64>) -> Array2<f64> {
    let dim = r.dim().0;
    Array2::from_shape_fn((dim, dim), |(p, q)| (0..dim).map(|a| r[[a, a, p, q]]).sum())
}

/// `R_αβ = R^τ_α(e_τ, e_β)`.
pub fn ricci_full(r: &Array4<f64>) -> Array2<f64> {
    let dim = r.dim().0;
    Array2::from_shape_fn((dim, dim), |(a, b)| (0..dim).map(|t| r[[t, a, t, b]]).sum())
}

/// Ricci blocks, scalar curvature and Einstein tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciBlocks {
    /// `R_ij = R^k_ijk`.
    pub hh: Array2<f64>,
    /// `R_ia = −R^k_ika`.
    pub hv: Array2<f64>,
    /// `R_ai = R^b_aib`.
    pub vh: Array2<f64>,
    /// `R_ab = R^c_abc`.
    pub vv: Array2<f64>,
    /// `g^{ij} R_ij + h^{ab} R_ab`.
    pub scalar: f64,
    /// `G_αβ = R_αβ − ½ g_αβ ˢR` over the full frame index range.
    pub einstein: Array2<f64>,
}

impl RicciBlocks {
    /// The Ricci tensor over the full frame index range.
    pub fn full(&self) -> Array2<f64> {
        let (n, m) = (self.hh.nrows(), self.vv.nrows());
        let mut out = Array2::zeros((n + m, n + m));
        for i in 0..n {
            for j in 0..n {
                out[[i, j]] = self.hh[[i, j]];
            }
            for a in 0..m {
                out[[i, n + a]] = self.hv[[i, a]];
                out[[n + a, i]] = self.vh[[a, i]];
            }
        }
        for a in 0..m {
            for b in 0..m {
                out[[n + a, n + b]] = self.vv[[a, b]];
            }
        }
        out
    }
}

pub fn ricci_scalar_einstein(
    curv: &CurvatureBlocks,
    g: &Array2<f64>,
    h: &Array2<f64>,
    point: &[f64],
) -> Result<RicciBlocks> {
    let dims = curv.dims();
    let (n, m) = (dims.n(), dims.m());
    let degenerate = |what: &str, pivot| GeometryError::Degenerate {
        what: what.into(),
        point: point.to_vec(),
        pivot,
    };
    let (gi, _) = invert(g).map_err(|e| degenerate("g block", e.pivot))?;
    let (hi, _) = invert(h).map_err(|e| degenerate("h block", e.pivot))?;
    let hh = Array2::from_shape_fn((n, n), |(i, j)| (0..n).map(|k| curv.h_hh[[k, i, j, k]]).sum());
    let hv = Array2::from_shape_fn((n, m), |(i, a)| -(0..n).map(|k| curv.h_hv[[k, i, k, a]]).sum::<f64>());
    let vh = Array2::from_shape_fn((m, n), |(a, i)| (0..m).map(|b| curv.v_hv[[b, a, i, b]]).sum());
    let vv = Array2::from_shape_fn((m, m), |(a, b)| (0..m).map(|c| curv.v_vv[[c, a, b, c]]).sum());
    let scalar = (&gi * &hh.t()).sum() + (&hi * &vv.t()).sum();
    let mut out = RicciBlocks {
        hh,
        hv,
        vh,
        vv,
        scalar,
        einstein: Array2::zeros((n + m, n + m)),
    };
    let mut ein = out.full();
    for i in 0..n {
        for j in 0..n {
            ein[[i, j]] -= 0.5 * g[[i, j]] * scalar;
        }
    }
    for a in 0..m {
        for b in 0..m {
            ein[[n + a, n + b]] -= 0.5 * h[[a, b]] * scalar;
        }
    }
    out.einstein = ein;
    Ok(out)
}

/// Blockwise max-norm of `G_αβ − diag(λ_h g, λ_v h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinResidual {
    pub hh: f64,
    pub hv: f64,
    pub vh: f64,
    pub vv: f64,
}

impl EinsteinResidual {
    pub fn max(&self) -> f64 {
        self.hh.max(self.hv).max(self.vh).max(self.vv)
    }
}

pub fn einstein_residual_of(
    ricci: &RicciBlocks,
    g: &Array2<f64>,
    h: &Array2<f64>,
    lambda_h: f64,
    lambda_v: f64,
) -> EinsteinResidual {
    let n = g.nrows();
    let mut out = EinsteinResidual {
        hh: 0.0,
        hv: 0.0,
        vh: 0.0,
        vv: 0.0,
    };
    for ((r, c), v) in ricci.einstein.indexed_iter() {
        let (slot, source) = match (r < n, c < n) {
            (true, true) => (&mut out.hh, lambda_h * g[[r, c]]),
            (true, false) => (&mut out.hv, 0.0),
            (false, true) => (&mut out.vh, 0.0),
            (false, false) => (&mut out.vv, lambda_v * h[[r - n, c - n]]),
        };
        *slot = slot.max((v - source).abs());
    }
    out
}

/// Canonical connection field and its curvature blocks at the geometry's point.
pub fn canonical_curvature_at(geo: &LocalGeometry) -> CurvatureBlocks {
    let conn = canonical_field(&geo.truncated(2), CvvFormula::Symmetric);
    dcurvature(&conn, geo.nconn())
}

pub fn canonical_ricci(src: &dyn GeometrySource, point: &[f64]) -> Result<RicciBlocks> {
    let geo = src.local(point, 2)?;
    let curv = canonical_curvature_at(&geo);
    ricci_scalar_einstein(&curv, &geo.g_values(), &geo.h_values(), point)
}

/// Residual of the Einstein equations of the canonical connection with source `diag(λ_h g, λ_v h)`.
pub fn einstein_residual(
    src: &dyn GeometrySource,
    lambda_h: f64,
    lambda_v: f64,
    point: &[f64],
) -> Result<EinsteinResidual> {
    let geo = src.local(point, 2)?;
    let ricci = ricci_scalar_einstein(&canonical_curvature_at(&geo), &geo.g_values(), &geo.h_values(), point)?;
    Ok(einstein_residual_of(
        &ricci,
        &geo.g_values(),
        &geo.h_values(),
        lambda_h,
        lambda_v,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dconn::{levi_civita_field, ConnectionKind};
    use crate::dmetric::{DMetric, DStructure};
    use crate::nconn::NConnection;

    fn curved() -> DStructure {
        let dims = Dims::new(2, 2).unwrap();
        DStructure::new(
            DMetric::parse(
                dims,
                &[vec!["2 + sin(x1*y2)", "0.3*x2"], vec!["0.3*x2", "1.5 + y1^2"]],
                &[vec!["exp(x1 - y1)", "0.2*y2*x2"], vec!["0.2*y2*x2", "2 + cos(x2 + y1)"]],
            )
            .unwrap(),
            NConnection::parse(dims, &[vec!["x2*y1 + y2^2", "sin(x1)*y2"], vec!["y1*y2", "x1 - y1^2"]]).unwrap(),
        )
        .unwrap()
    }

    const P: [f64; 4] = [0.3, -0.4, 0.5, 0.7];

    #[test]
    fn torsion_paths_agree() {
        let geo = curved().local(&P, 2).unwrap();
        let conn = canonical_field(&geo, CvvFormula::Symmetric).values();
        let nc = geo.nconn();
        let a = dtorsion(&conn, &nc.at_point());
        let b = torsion_via_forms_oracle(&conn, nc);
        let c = torsion_via_commutator(&conn, nc);
        assert!(a.max_diff(&b) < 1e-12, "{}", a.max_diff(&b));
        assert!(a.max_diff(&c) < 1e-12, "{}", a.max_diff(&c));
        assert_eq!(a.hhh.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        assert_eq!(a.vvv.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        assert!(a.vhh.iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn levi_civita_is_torsion_free() {
        let geo = curved().local(&P, 2).unwrap();
        let lc = levi_civita_field(&geo.truncated(1)).values();
        let t = full_torsion_via_forms(&lc, geo.nconn());
        assert!(t.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn curvature_paths_agree() {
        let geo = curved().local(&P, 2).unwrap();
        let conn = canonical_field(&geo, CvvFormula::Symmetric);
        let nc = geo.nconn();
        let a = dcurvature(&conn, nc);
        let b = curvature_via_forms_oracle(&conn, nc);
        let c = curvature_via_commutator(&conn, nc);
        assert!(a.max_abs() > 1e-2);
        assert!(a.max_diff(&b) < 1e-10, "{}", a.max_diff(&b));
        assert!(a.max_diff(&c) < 1e-10, "{}", a.max_diff(&c));
        let full = a.to_full();
        assert!(CurvatureBlocks::from_full(&full, geo.dims()).max_diff(&a) == 0.0);
        assert!(curvature_trace(&full).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn flat_geometry_has_no_curvature() {
        let dims = Dims::new(1, 2).unwrap();
        let s = DStructure::new(DMetric::eta(dims, &[1.0, -1.0, 1.0]).unwrap(), NConnection::zero(dims)).unwrap();
        let geo = s.local(&[0.1, 0.2, 0.3], 2).unwrap();
        let curv = canonical_curvature_at(&geo);
        assert_eq!(curv.max_abs(), 0.0);
        let r = einstein_residual(&s, 0.0, 0.0, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(r.max(), 0.0);
        let conn = DConnection::zero(dims, ConnectionKind::Custom);
        assert_eq!(dtorsion(&conn, &geo.nconn().at_point()).max_abs(), 0.0);
    }

    #[test]
    fn product_of_spheres() {
        let dims = Dims::new(2, 2).unwrap();
        let s = DStructure::new(
            DMetric::parse(
                dims,
                &[vec!["1", "0"], vec!["0", "sin(x1)^2"]],
                &[vec!["1", "0"], vec!["0", "sin(y1)^2"]],
            )
            .unwrap(),
            NConnection::zero(dims),
        )
        .unwrap();
        let p = [0.9, 0.3, 1.2, -0.5];
        let ricci = canonical_ricci(&s, &p).unwrap();
        assert!((ricci.scalar - 4.0).abs() < 1e-12, "{}", ricci.scalar);
        assert!(einstein_residual(&s, -1.0, -1.0, &p).unwrap().max() < 1e-12);
    }

    #[test]
    fn einstein_trace_identity() {
        let geo = curved().local(&P, 2).unwrap();
        let ricci = ricci_scalar_einstein(&canonical_curvature_at(&geo), &geo.g_values(), &geo.h_values(), &P).unwrap();
        let (gi, hi) = (invert(&geo.g_values()).unwrap().0, invert(&geo.h_values()).unwrap().0);
        let n = 2;
        let mut tr = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr += gi[[i, j]] * ricci.einstein[[j, i]] + hi[[i, j]] * ricci.einstein[[n + j, n + i]];
            }
        }
        assert!((tr - ricci.scalar * (1.0 - 2.0)).abs() < 1e-10);
    }
}
