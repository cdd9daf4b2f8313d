//! Jets of a d-metric and its N-connection at a single point.

use ndarray::Array2;

use crate::error::{GeometryError, Result};
use crate::expr::Dims;
use crate::jet::Jet;
use crate::linalg::{invert, invert_jets, PIVOT_THRESHOLD};
use crate::nconn::NConnectionJets;

/// Anything that can produce metric and N-connection jets at a point.
pub trait GeometrySource: Sync {
    fn dims(&self) -> Dims;

    /// Jets of `g`, `h` and `N` at `point`, valid to at least `order`.
    fn local(&self, point: &[f64], order: usize) -> Result<LocalGeometry>;
}

pub(crate) fn check_nondegenerate(m: &Array2<f64>, what: &str, point: &[f64]) -> Result<()> {
    let degenerate = |pivot| GeometryError::Degenerate {
        what: what.to_string(),
        point: point.to_vec(),
        pivot,
    };
    let (_, det) = invert(m).map_err(|e| degenerate(e.pivot))?;
    if !(det.abs() > PIVOT_THRESHOLD) {
        return Err(degenerate(det));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LocalGeometry {
    dims: Dims,
    g: Array2<Jet>,
    h: Array2<Jet>,
    g_inv: Array2<Jet>,
    h_inv: Array2<Jet>,
    nc: NConnectionJets,
}

impl LocalGeometry {
    pub fn new(g: Array2<Jet>, h: Array2<Jet>, nc: NConnectionJets) -> Result<Self> {
        let dims = nc.dims();
        if g.dim() != (dims.n(), dims.n()) || h.dim() != (dims.m(), dims.m()) {
            return Err(GeometryError::Shape("metric blocks do not match the dimensions".into()));
        }
        let sym = |m: &Array2<Jet>| Array2::from_shape_fn(m.dim(), |(r, c)| (&m[[r, c]] + &m[[c, r]]).scale(0.5));
        let (g, h) = (sym(&g), sym(&h));
        let point = nc.point().to_vec();
        let inv = |m: &Array2<Jet>, what: &str| -> Result<Array2<Jet>> {
            check_nondegenerate(&m.map(Jet::value), what, &point)?;
            invert_jets(m).map_err(|e| GeometryError::Degenerate {
                what: what.to_string(),
                point: point.clone(),
                pivot: e.pivot,
            })
        };
        let g_inv = inv(&g, "g block")?;
        let h_inv = inv(&h, "h block")?;
        Ok(Self {
            dims,
            g,
            h,
            g_inv,
            h_inv,
            nc,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn point(&self) -> &[f64] {
        self.nc.point()
    }

    /// Jet order common to every stored field.
    pub fn order(&self) -> usize {
        self.g
            .iter()
            .chain(self.h.iter())
            .map(Jet::order)
            .min()
            .unwrap_or(0)
            .min(self.nc.order())
    }

    pub fn g(&self) -> &Array2<Jet> {
        &self.g
    }

    pub fn h(&self) -> &Array2<Jet> {
        &self.h
    }

    pub fn g_inv(&self) -> &Array2<Jet> {
        &self.g_inv
    }

    pub fn h_inv(&self) -> &Array2<Jet> {
        &self.h_inv
    }

    pub fn nconn(&self) -> &NConnectionJets {
        &self.nc
    }

    /// `diag(g, h)`: the metric in the adapted frame.
    pub fn frame_metric(&self) -> Array2<Jet> {
        block_diag(&self.g, &self.h, self.nc.space())
    }

    pub fn frame_metric_inverse(&self) -> Array2<Jet> {
        block_diag(&self.g_inv, &self.h_inv, self.nc.space())
    }

    pub fn g_values(&self) -> Array2<f64> {
        self.g.map(Jet::value)
    }

    pub fn h_values(&self) -> Array2<f64> {
        self.h.map(Jet::value)
    }

    /// The same geometry with every jet truncated to `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let t = |m: &Array2<Jet>| m.map(|j| j.truncate(order));
        Self {
            dims: self.dims,
            g: t(&self.g),
            h: t(&self.h),
            g_inv: t(&self.g_inv),
            h_inv: t(&self.h_inv),
            nc: NConnectionJets::new(self.dims, self.point().to_vec(), t(self.nc.coeffs())),
        }
    }
}

fn block_diag(a: &Array2<Jet>, b: &Array2<Jet>, space: &std::sync::Arc<crate::JetSpace>) -> Array2<Jet> {
    let (n, m) = (a.nrows(), b.nrows());
    let order = a.iter().chain(b.iter()).map(Jet::order).min().unwrap_or(0);
    Array2::from_shape_fn((n + m, n + m), |(r, c)| {
        if r < n && c < n {
            a[[r, c]].truncate(order)
        } else if r >= n && c >= n {
            b[[r - n, c - n]].truncate(order)
        } else {
            Jet::zero(space, order)
        }
    })
}
