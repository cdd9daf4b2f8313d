//! Numeric engine for N-anholonomic geometry: nonlinear connections, d-metrics,
//! d-connections, their torsion and curvature, Lagrange spaces and low-degree
//! characteristic forms, all evaluated pointwise from truncated Taylor jets.

pub mod charforms;
pub mod curvature;
pub mod dconn;
pub mod dmetric;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod lagrange;
pub mod linalg;
pub mod nconn;

pub use dconn::{ConnectionKind, CvvFormula, DConnection, DConnectionField, FullFrameConnection};
pub use dmetric::{AnsatzMetric, DMetric, DStructure};
pub use error::{DomainError, GeometryError, Result};
pub use expr::{parse, Dims, Expr};
pub use geometry::{GeometrySource, LocalGeometry};
pub use jet::{Jet, JetSpace};
pub use lagrange::LagrangeProblem;
pub use nconn::NConnection;
