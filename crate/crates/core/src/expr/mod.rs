//! Scalar fields over the split coordinates `u = (x^1..x^n, y^1..y^m)`.
//!
//! Fields are written in a small DSL (see [`parse`]) and evaluated to
//! [`Jet`]s, which carry every partial derivative up to a chosen order.

mod parser;

use std::fmt;

use crate::error::DomainError;
use crate::jet::{Jet, JetSpace};

pub use parser::{parse, ParseError, ParseErrorKind};

/// Horizontal and vertical dimensions of the split manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    n: usize,
    m: usize,
}

impl Dims {
    /// Returns `None` unless both dimensions are positive.
    pub fn new(n: usize, m: usize) -> Option<Self> {
        (n >= 1 && m >= 1).then_some(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Total dimension `n + m`.
    pub fn total(&self) -> usize {
        self.n + self.m
    }

    /// Slot of the vertical coordinate `y^{a+1}` in the combined coordinate tuple.
    pub fn v(&self, a: usize) -> usize {
        self.n + a
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, m={})", self.n, self.m)
    }
}

/// A coordinate reference, 0-based within its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    X(usize),
    Y(usize),
}

impl Coord {
    /// Slot in the combined tuple: `x^i -> i`, `y^a -> n + a`.
    pub fn slot(&self, dims: Dims) -> usize {
        match *self {
            Coord::X(i) => i,
            Coord::Y(a) => dims.n + a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Atan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Atan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "atan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Immutable once built; cheap to clone relative to evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Coord(Coord),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Coord(Coord::X(i))
    }

    pub fn y(a: usize) -> Expr {
        Expr::Coord(Coord::Y(a))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Literal integer exponent, if the subtree is `k` or `-k` for an integer `k`.
    fn integer_literal(&self) -> Option<i32> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Neg(inner) => match inner.as_ref() {
                Expr::Num(v) => -*v,
                _ => return None,
            },
            _ => return None,
        };
        (v.fract() == 0.0 && v.abs() <= 1024.0).then_some(v as i32)
    }

    /// Largest coordinate index used in each block, as `(max_x, max_y)` counts.
    pub fn coordinate_extent(&self) -> (usize, usize) {
        match self {
            Expr::Num(_) => (0, 0),
            Expr::Coord(Coord::X(i)) => (i + 1, 0),
            Expr::Coord(Coord::Y(a)) => (0, a + 1),
            Expr::Neg(e) | Expr::Call(_, e) => e.coordinate_extent(),
            Expr::Binary(_, l, r) => {
                let (lx, ly) = l.coordinate_extent();
                let (rx, ry) = r.coordinate_extent();
                (lx.max(rx), ly.max(ry))
            }
        }
    }

    /// Evaluates the field and its partials up to `order` at `point`.
    ///
    /// `point` holds `n + m` coordinates; the jet's variables are the
    /// combined coordinate slots.
    pub fn evaluate_jet(&self, dims: Dims, point: &[f64], order: usize) -> Result<Jet, DomainError> {
        assert_eq!(point.len(), dims.total(), "point has wrong arity for {dims}");
        let space = JetSpace::shared(dims.total(), order);
        self.eval_in(&space, dims, point, order)
    }

    /// Evaluates the field in an existing jet space, truncated at `order`.
    pub fn eval_in(
        &self,
        space: &std::sync::Arc<JetSpace>,
        dims: Dims,
        point: &[f64],
        order: usize,
    ) -> Result<Jet, DomainError> {
        let tag = |e: &Expr, what: &str| DomainError::new(what, e.to_string());
        let out = match self {
            Expr::Num(v) => Jet::constant(space, *v, order),
            Expr::Coord(c) => {
                let slot = c.slot(dims);
                Jet::variable(space, slot, point[slot], order)
            }
            Expr::Neg(e) => -&e.eval_in(space, dims, point, order)?,
            Expr::Binary(op, l, r) => {
                let lhs = l.eval_in(space, dims, point, order)?;
                match op {
                    BinOp::Add => &lhs + &r.eval_in(space, dims, point, order)?,
                    BinOp::Sub => &lhs - &r.eval_in(space, dims, point, order)?,
                    BinOp::Mul => &lhs * &r.eval_in(space, dims, point, order)?,
                    BinOp::Div => {
                        let rhs = r.eval_in(space, dims, point, order)?;
                        let inv = rhs.recip().map_err(|_| tag(r, "division by zero"))?;
                        &lhs * &inv
                    }
                    BinOp::Pow => match r.integer_literal() {
                        Some(k) => lhs.powi(k).map_err(|_| tag(self, "zero base with negative exponent"))?,
                        None => {
                            if lhs.value() <= 0.0 {
                                return Err(tag(l, "non-integer power of a non-positive base"));
                            }
                            let rhs = r.eval_in(space, dims, point, order)?;
                            match r.as_ref() {
                                Expr::Num(p) => lhs.powf(*p).map_err(|_| tag(self, "power"))?,
                                _ => {
                                    let ln = lhs.ln().map_err(|_| tag(l, "log of non-positive value"))?;
                                    (&rhs * &ln).exp()
                                }
                            }
                        }
                    },
                }
            }
            Expr::Call(f, e) => {
                let arg = e.eval_in(space, dims, point, order)?;
                let r = match f {
                    Func::Sin => Ok(arg.sin()),
                    Func::Cos => Ok(arg.cos()),
                    Func::Tan => arg.tan(),
                    Func::Atan => Ok(arg.atan()),
                    Func::Exp => Ok(arg.exp()),
                    Func::Log => arg.ln(),
                    Func::Sqrt => arg.sqrt(),
                    Func::Sinh => Ok(arg.sinh()),
                    Func::Cosh => Ok(arg.cosh()),
                };
                r.map_err(|_| tag(self, &format!("{} outside its domain", f.name())))?
            }
        };
        if !out.is_finite() {
            return Err(tag(self, "non-finite result"));
        }
        Ok(out)
    }

    /// Plain value at a point (order-0 evaluation).
    pub fn value_at(&self, dims: Dims, point: &[f64]) -> Result<f64, DomainError> {
        Ok(self.evaluate_jet(dims, point, 0)?.value())
    }
}

fn is_atom(e: &Expr) -> bool {
    matches!(e, Expr::Num(_) | Expr::Coord(_) | Expr::Call(..))
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    if is_atom(e) {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

/// Prints in the DSL grammar; re-parsing yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Coord(Coord::X(i)) => write!(f, "x{}", i + 1),
            Expr::Coord(Coord::Y(a)) => write!(f, "y{}", a + 1),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_operand(f, e)
            }
            Expr::Binary(op, l, r) => {
                write_operand(f, l)?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, r)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
