//! Regular Lagrangians: Hessian metric, semispray, canonical N-connection,
//! Sasaki lift, almost complex structure and geodesics.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{GeometryError, Result};
use crate::expr::{Dims, Expr};
use crate::geometry::{GeometrySource, LocalGeometry};
use crate::jet::{Jet, JetSpace};
use crate::linalg::{invert, invert_jets, PIVOT_THRESHOLD};
use crate::nconn::NConnectionJets;

pub const DEFAULT_REGULARITY_TOL: f64 = 1e-10;

/// A Lagrangian `L(x, y)` on the tangent bundle of an `n`-manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeProblem {
    dims: Dims,
    lagrangian: Expr,
    regularity_tol: f64,
}

/// Jets derived from `L` at one point.
#[derive(Debug, Clone)]
pub struct LagrangeJets {
    /// `ᴸg_ij = ½ ∂²L/∂y^i∂y^j`.
    pub g: Array2<Jet>,
    pub g_inv: Array2<Jet>,
    /// `G^i`.
    pub semispray: Vec<Jet>,
    /// `ᴸN^i_j = ∂G^i/∂y^j` as `[i, j]`.
    pub n: Array2<Jet>,
}

impl LagrangeProblem {
    pub fn new(n: usize, lagrangian: Expr) -> Result<Self> {
        let dims = Dims::new(n, n).ok_or_else(|| GeometryError::Shape("n must be at least 1".into()))?;
        let extent = lagrangian.coordinate_extent();
        if extent.0 > n || extent.1 > n {
            return Err(GeometryError::Shape(format!(
                "Lagrangian uses coordinates beyond n = {n}"
            )));
        }
        Ok(Self {
            dims,
            lagrangian,
            regularity_tol: DEFAULT_REGULARITY_TOL,
        })
    }

    pub fn parse(n: usize, source: &str) -> Result<Self> {
        let dims = Dims::new(n, n).ok_or_else(|| GeometryError::Shape("n must be at least 1".into()))?;
        Self::new(n, crate::expr::parse(source, dims)?)
    }

    pub fn with_regularity_tol(mut self, tol: f64) -> Self {
        self.regularity_tol = tol;
        self
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    fn l_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        let space: Arc<JetSpace> = JetSpace::shared(self.dims.total(), order);
        Ok(self.lagrangian.eval_in(&space, self.dims, point, order)?)
    }

    /// Jets with `N` valid to `order` (so `L` is expanded to `order + 3`).
    pub fn jets(&self, point: &[f64], order: usize) -> Result<LagrangeJets> {
        self.jets_from(&self.l_jet(point, order + 3)?, point)
    }

    fn jets_from(&self, l: &Jet, point: &[f64]) -> Result<LagrangeJets> {
        let n = self.dims.n();
        let ly: Vec<Jet> = (0..n).map(|i| l.derivative(n + i)).collect();
        let g = Array2::from_shape_fn((n, n), |(i, j)| ly[i].derivative(n + j).scale(0.5));
        let gv = g.map(Jet::value);
        let degenerate = |pivot| GeometryError::Degenerate {
            what: "Hessian".into(),
            point: point.to_vec(),
            pivot,
        };
        let (_, det) = invert(&gv).map_err(|e| degenerate(e.pivot))?;
        if !(det.abs() > self.regularity_tol) {
            return Err(degenerate(det));
        }
        let g_inv = invert_jets(&g).map_err(|e| degenerate(e.pivot))?;
        let space = l.space().clone();
        let order = g[[0, 0]].order();
        // b_j = ∂²L/∂y^j∂x^k y^k − ∂L/∂x^j
        let b: Vec<Jet> = (0..n)
            .map(|j| {
                let mut s = -&l.derivative(j).truncate(order);
                for k in 0..n {
                    let yk = Jet::variable(&space, n + k, point[n + k], order);
                    s = &s + &(&ly[j].derivative(k) * &yk);
                }
                s
            })
            .collect();
        let semispray: Vec<Jet> = (0..n)
            .map(|i| {
                crate::jet::sum((0..n).map(|j| &g_inv[[i, j]] * &b[j]))
                    .expect("n ≥ 1")
                    .scale(0.25)
            })
            .collect();
        let nmat = Array2::from_shape_fn((n, n), |(i, j)| {
            if order == 0 {
                Jet::zero(&space, 0)
            } else {
                semispray[i].derivative(n + j)
            }
        });
        Ok(LagrangeJets {
            g,
            g_inv,
            semispray,
            n: nmat,
        })
    }

    /// `(ᴸg, ᴸg⁻¹)` at `point`.
    pub fn hessian_metric(&self, point: &[f64]) -> Result<(Array2<f64>, Array2<f64>)> {
        let j = self.jets_from(&self.l_jet(point, 2)?, point)?;
        Ok((j.g.map(Jet::value), j.g_inv.map(Jet::value)))
    }

    pub fn semispray(&self, point: &[f64]) -> Result<Vec<f64>> {
        let j = self.jets_from(&self.l_jet(point, 2)?, point)?;
        Ok(j.semispray.iter().map(Jet::value).collect())
    }

    /// `ᴸN^i_j` at `point`, stored `[i, j]`.
    pub fn canonical_nconnection(&self, point: &[f64]) -> Result<Array2<f64>> {
        Ok(self.jets(point, 0)?.n.map(Jet::value))
    }

    pub fn sasaki_lift(&self) -> SasakiLift {
        SasakiLift { problem: self.clone() }
    }

    /// `E = y^i ∂L/∂y^i − L`.
    pub fn energy(&self, point: &[f64]) -> Result<f64> {
        let l = self.l_jet(point, 1)?;
        let n = self.dims.n();
        Ok((0..n).map(|i| point[n + i] * l.partial(&[n + i])).sum::<f64>() - l.value())
    }

    /// `(∂L/∂x, ∂L/∂y)` at `point`.
    pub fn gradients(&self, point: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let l = self.l_jet(point, 1)?;
        let n = self.dims.n();
        Ok((
            (0..n).map(|i| l.partial(&[i])).collect(),
            (0..n).map(|i| l.partial(&[n + i])).collect(),
        ))
    }
}

/// The d-metric `g = h = ᴸg` paired with `ᴸN`, as derived fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SasakiLift {
    problem: LagrangeProblem,
}

impl SasakiLift {
    pub fn problem(&self) -> &LagrangeProblem {
        &self.problem
    }

    /// Block values `(g, h)` at `point`.
    pub fn metric_at(&self, point: &[f64]) -> Result<(Array2<f64>, Array2<f64>)> {
        let (g, _) = self.problem.hessian_metric(point)?;
        Ok((g.clone(), g))
    }
}

impl GeometrySource for SasakiLift {
    fn dims(&self) -> Dims {
        self.problem.dims
    }

    fn local(&self, point: &[f64], order: usize) -> Result<LocalGeometry> {
        let j = self.problem.jets(point, order)?;
        let g = j.g.map(|x| x.truncate(order));
        LocalGeometry::new(
            g.clone(),
            g,
            NConnectionJets::new(self.problem.dims, point.to_vec(), j.n),
        )
    }
}

/// The almost complex structure in the adapted basis and in coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostComplex {
    /// `[[0, −I], [I, 0]]`.
    pub adapted: Array2<f64>,
    /// `frame · adapted · coframe`.
    pub coordinate: Array2<f64>,
}

pub fn almost_complex(nc: &NConnectionJets) -> Result<AlmostComplex> {
    let dims = nc.dims();
    let n = dims.n();
    if dims.m() != n {
        return Err(GeometryError::Shape("almost complex structure needs m = n".into()));
    }
    let adapted = Array2::from_shape_fn((2 * n, 2 * n), |(r, c)| {
        if r < n && c == r + n {
            -1.0
        } else if r >= n && c + n == r {
            1.0
        } else {
            0.0
        }
    });
    let frame = nc.frame_jets().map(Jet::value);
    let coframe = nc.coframe_jets().map(Jet::value);
    let coordinate = frame.dot(&adapted).dot(&coframe);
    Ok(AlmostComplex { adapted, coordinate })
}

/// One sample of a geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub tau: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Maximum accepted plus rejected steps per output interval.
    pub max_steps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicReport {
    /// `steps + 1` samples on a uniform grid.
    pub trajectory: Vec<GeodesicState>,
    /// `max |d/dτ(∂L/∂y) − ∂L/∂x|` over interior samples (fourth-order differences).
    pub el_residual: f64,
    /// `max |E(τ) − E(τ_0)|`.
    pub energy_drift: f64,
    /// `max |dx/dτ − y|` over interior samples.
    pub constraint_residual: f64,
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl LagrangeProblem {
    /// `d/dτ (x, y) = (y, −2G(x, y))`.
    fn rhs(&self, state: &[f64]) -> Result<Vec<f64>> {
        let n = self.dims.n();
        let g = self.semispray(state)?;
        let mut out = state[n..].to_vec();
        out.extend(g.iter().map(|v| -2.0 * v));
        Ok(out)
    }

    fn integrate_interval(
        &self,
        state: &mut Vec<f64>,
        t0: f64,
        t1: f64,
        h: &mut f64,
        opts: &GeodesicOptions,
    ) -> Result<()> {
        let dim = state.len();
        let mut t = t0;
        let mut k0 = self.rhs(state)?;
        let mut count = 0;
        while t < t1 {
            count += 1;
            if count > opts.max_steps {
                return Err(GeometryError::Integration {
                    tau: t,
                    reason: "too many steps".into(),
                });
            }
            let last = t + *h >= t1;
            let step = if last { t1 - t } else { *h };
            if !(step > 1e-14 * t.abs().max(1.0)) && !last {
                return Err(GeometryError::Integration {
                    tau: t,
                    reason: "step size underflow".into(),
                });
            }
            let mut k = vec![k0.clone()];
            let mut stage = vec![0.0; dim];
            let mut failed = None;
            for s in 1..7 {
                for d in 0..dim {
                    stage[d] = state[d] + step * (0..s).map(|r| A[s][r] * k[r][d]).sum::<f64>();
                }
                match self.rhs(&stage) {
                    Ok(v) => k.push(v),
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = failed {
                // try a smaller step before giving up
                if step > 1e-8 {
                    *h = step * 0.25;
                    continue;
                }
                return Err(GeometryError::Integration {
                    tau: t,
                    reason: e.to_string(),
                });
            }
            let new: Vec<f64> = (0..dim)
                .map(|d| state[d] + step * (0..7).map(|r| B5[r] * k[r][d]).sum::<f64>())
                .collect();
            let err = ((0..dim)
                .map(|d| {
                    let e = step * (0..7).map(|r| (B5[r] - B4[r]) * k[r][d]).sum::<f64>();
                    let sc = opts.atol + opts.rtol * state[d].abs().max(new[d].abs());
                    (e / sc).powi(2)
                })
                .sum::<f64>()
                / dim as f64)
                .sqrt();
            if !err.is_finite() {
                *h = step * 0.2;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                *state = new;
                k0 = k.pop().expect("seven stages");
                if !last {
                    *h = step * factor;
                }
            } else {
                *h = step * factor.min(1.0);
            }
        }
        Ok(())
    }

    /// Integrates the semispray from `(x0, y0)` over `tau_span`, sampling `steps + 1` points.
    pub fn geodesic_integrate(
        &self,
        x0: &[f64],
        y0: &[f64],
        tau_span: (f64, f64),
        steps: usize,
        opts: &GeodesicOptions,
    ) -> Result<GeodesicReport> {
        let n = self.dims.n();
        if x0.len() != n || y0.len() != n {
            return Err(GeometryError::Shape(format!("initial data must have {n} components")));
        }
        if steps == 0 || !(tau_span.1 > tau_span.0) {
            return Err(GeometryError::Shape("need steps ≥ 1 and an increasing τ span".into()));
        }
        let dt = (tau_span.1 - tau_span.0) / steps as f64;
        let mut state: Vec<f64> = x0.iter().chain(y0.iter()).copied().collect();
        let mut trajectory = vec![GeodesicState {
            tau: tau_span.0,
            x: x0.to_vec(),
            y: y0.to_vec(),
        }];
        let mut h = dt.min(0.01);
        for s in 0..steps {
            let t0 = tau_span.0 + dt * s as f64;
            let t1 = tau_span.0 + dt * (s + 1) as f64;
            self.integrate_interval(&mut state, t0, t1, &mut h, opts)?;
            trajectory.push(GeodesicState {
                tau: t1,
                x: state[..n].to_vec(),
                y: state[n..].to_vec(),
            });
        }
        self.report(trajectory, dt)
    }

    fn report(&self, trajectory: Vec<GeodesicState>, dt: f64) -> Result<GeodesicReport> {
        let n = self.dims.n();
        let mut p = Vec::with_capacity(trajectory.len());
        let mut f = Vec::with_capacity(trajectory.len());
        let mut energy_drift = 0.0f64;
        let mut e0 = None;
        for s in &trajectory {
            let pt: Vec<f64> = s.x.iter().chain(s.y.iter()).copied().collect();
            let (lx, ly) = self.gradients(&pt)?;
            p.push(ly);
            f.push(lx);
            let e = self.energy(&pt)?;
            let base = *e0.get_or_insert(e);
            energy_drift = energy_drift.max((e - base).abs());
        }
        // fourth-order central difference
        let d =
            |v: &dyn Fn(usize) -> f64, k: usize| (v(k - 2) - 8.0 * v(k - 1) + 8.0 * v(k + 1) - v(k + 2)) / (12.0 * dt);
        let mut el_residual = 0.0f64;
        let mut constraint_residual = 0.0f64;
        for k in 2..trajectory.len().saturating_sub(2) {
            for i in 0..n {
                let dp = d(&|s| p[s][i], k);
                el_residual = el_residual.max((dp - f[k][i]).abs());
                let dx = d(&|s| trajectory[s].x[i], k);
                constraint_residual = constraint_residual.max((dx - trajectory[k].y[i]).abs());
            }
        }
        Ok(GeodesicReport {
            trajectory,
            el_residual,
            energy_drift,
            constraint_residual,
        })
    }
}

/// Whether the Hessian at `point` passes the regularity threshold.
pub fn is_regular(problem: &LagrangeProblem, point: &[f64]) -> bool {
    problem
        .hessian_metric(point)
        .map(|(g, _)| crate::linalg::determinant(&g).abs() > PIVOT_THRESHOLD)
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dconn::canonical_dconnection;

    #[test]
    fn free_particle() {
        let p = LagrangeProblem::parse(2, "0.5*(y1^2+y2^2)").unwrap();
        let pt = [0.3, 0.1, 1.0, -2.0];
        let (g, gi) = p.hessian_metric(&pt).unwrap();
        assert_eq!(g[[0, 0]], 0.5);
        assert_eq!(g[[0, 1]], 0.0);
        assert_eq!(gi[[1, 1]], 2.0);
        assert!(p.semispray(&pt).unwrap().iter().all(|v| *v == 0.0));
        assert!(p.canonical_nconnection(&pt).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn exponential_example_chain() {
        let p = LagrangeProblem::parse(1, "0.5*exp(x1)*y1^2").unwrap();
        let pt = [0.8, 1.3];
        let (g, _) = p.hessian_metric(&pt).unwrap();
        assert!((g[[0, 0]] - 0.8f64.exp() / 2.0).abs() < 1e-14);
        assert!((p.semispray(&pt).unwrap()[0] - 1.3 * 1.3 / 4.0).abs() < 1e-14);
        assert!((p.canonical_nconnection(&pt).unwrap()[[0, 0]] - 0.65).abs() < 1e-14);
        let c = canonical_dconnection(&p.sasaki_lift(), &pt).unwrap();
        assert!((c.l_h[[0, 0, 0]] - 0.5).abs() < 1e-13);
        assert!((c.l_v[[0, 0, 0]] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn degenerate_hessian() {
        let p = LagrangeProblem::parse(1, "x1*y1").unwrap();
        assert!(matches!(
            p.hessian_metric(&[1.0, 1.0]),
            Err(GeometryError::Degenerate { .. })
        ));
    }

    #[test]
    fn almost_complex_squares_to_minus_identity() {
        let p = LagrangeProblem::parse(2, "exp(x2)*y1^2 + (1 + x1^2)*y2^2 + 0.1*y1^4").unwrap();
        let pt = [0.2, 0.4, 1.1, -0.6];
        let geo = p.sasaki_lift().local(&pt, 1).unwrap();
        let f = almost_complex(geo.nconn()).unwrap();
        let sq = f.adapted.dot(&f.adapted);
        for ((r, c), v) in sq.indexed_iter() {
            assert_eq!(*v, if r == c { -1.0 } else { 0.0 });
        }
        let sq = f.coordinate.dot(&f.coordinate);
        for ((r, c), v) in sq.indexed_iter() {
            assert!((v - if r == c { -1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn straight_line() {
        let p = LagrangeProblem::parse(1, "0.5*y1^2").unwrap();
        let r = p
            .geodesic_integrate(&[0.0], &[1.0], (0.0, 1.0), 10, &GeodesicOptions::default())
            .unwrap();
        assert!((r.trajectory.last().unwrap().x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_geodesic_is_consistent() {
        let p = LagrangeProblem::parse(1, "0.5*exp(x1)*y1^2").unwrap();
        let r = p
            .geodesic_integrate(&[0.1], &[0.9], (0.0, 1.0), 200, &GeodesicOptions::default())
            .unwrap();
        assert!(r.el_residual < 1e-6, "{}", r.el_residual);
        assert!(r.energy_drift < 1e-8, "{}", r.energy_drift);
        assert!(r.constraint_residual < 1e-6, "{}", r.constraint_residual);
    }
}
