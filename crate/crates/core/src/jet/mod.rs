//! Truncated multivariate jets.
//!
//! A [`Jet`] holds the value and every raw partial derivative `∂^κ f` with
//! `|κ| <= order` at a fixed base point. Arithmetic and elementary functions
//! act on jets through the Leibniz and Faà di Bruno rules, so derivatives are
//! exact up to floating-point rounding.
//!
//! Multi-indices are stored densely in graded-lexicographic order: all
//! degree-0 slots, then degree 1, and so on. A jet of order `k` is therefore
//! a prefix of the slot table of its [`JetSpace`], which lets jets of
//! different orders share one space.

mod series;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Returned when a jet operation leaves the function's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutOfDomain;

/// Slot tables for jets in `nvars` variables up to `max_order`.
pub struct JetSpace {
    nvars: usize,
    max_order: usize,
    monomials: Vec<Vec<u8>>,
    /// `upto[d]` = number of slots of degree `<= d`.
    upto: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    /// Leibniz terms for slot `s` live in `leibniz[leibniz_start[s]..leibniz_start[s + 1]]`.
    leibniz_start: Vec<usize>,
    leibniz: Vec<(u32, u32, f64)>,
    /// `raise[v][s]` = slot of `κ_s + e_v`, defined for slots of degree `< max_order`.
    raise: Vec<Vec<u32>>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("nvars", &self.nvars)
            .field("max_order", &self.max_order)
            .field("slots", &self.monomials.len())
            .finish()
    }
}

fn binomial(n: u8, k: u8) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * f64::from(n - i) / f64::from(i + 1);
    }
    r
}

fn monomials_of_degree(nvars: usize, degree: u8, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == nvars {
        prefix.push(degree);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first);
        monomials_of_degree(nvars, degree - first, prefix, out);
        prefix.pop();
    }
}

impl JetSpace {
    pub fn new(nvars: usize, max_order: usize) -> Self {
        assert!(nvars >= 1, "jet space needs at least one variable");
        assert!(max_order <= 12, "jet order {max_order} is unreasonably large");
        let mut monomials = Vec::new();
        let mut upto = Vec::with_capacity(max_order + 1);
        for d in 0..=max_order {
            monomials_of_degree(nvars, d as u8, &mut Vec::new(), &mut monomials);
            upto.push(monomials.len());
        }
        let index: HashMap<Vec<u8>, usize> = monomials.iter().enumerate().map(|(s, k)| (k.clone(), s)).collect();

        let mut leibniz_start = Vec::with_capacity(monomials.len() + 1);
        let mut leibniz = Vec::new();
        for kappa in &monomials {
            leibniz_start.push(leibniz.len());
            // enumerate alpha <= kappa componentwise
            let mut alpha = vec![0u8; nvars];
            loop {
                let beta: Vec<u8> = kappa.iter().zip(&alpha).map(|(k, a)| k - a).collect();
                let c: f64 = kappa.iter().zip(&alpha).map(|(&k, &a)| binomial(k, a)).product();
                leibniz.push((index[&alpha] as u32, index[&beta] as u32, c));
                let mut v = 0;
                loop {
                    if v == nvars {
                        break;
                    }
                    if alpha[v] < kappa[v] {
                        alpha[v] += 1;
                        break;
                    }
                    alpha[v] = 0;
                    v += 1;
                }
                if v == nvars {
                    break;
                }
            }
        }
        leibniz_start.push(leibniz.len());

        let lower = if max_order == 0 { 0 } else { upto[max_order - 1] };
        let raise = (0..nvars)
            .map(|v| {
                monomials[..lower]
                    .iter()
                    .map(|k| {
                        let mut r = k.clone();
                        r[v] += 1;
                        index[&r] as u32
                    })
                    .collect()
            })
            .collect();

        Self {
            nvars,
            max_order,
            monomials,
            upto,
            index,
            leibniz_start,
            leibniz,
            raise,
        }
    }

    /// Process-wide shared space for `(nvars, max_order)`; tables are built once.
    pub fn shared(nvars: usize, max_order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, max_order))
            .or_insert_with(|| Arc::new(JetSpace::new(nvars, max_order)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of slots in a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.upto[order]
    }

    /// Multi-index of a slot.
    pub fn multi_index(&self, slot: usize) -> &[u8] {
        &self.monomials[slot]
    }

    /// Slot of a multi-index.
    pub fn slot(&self, kappa: &[u8]) -> Option<usize> {
        self.index.get(kappa).copied()
    }

    fn slot_of_vars(&self, vars: &[usize]) -> usize {
        let mut kappa = vec![0u8; self.nvars];
        for &v in vars {
            assert!(v < self.nvars, "variable {v} out of range");
            kappa[v] += 1;
        }
        self.index[&kappa]
    }
}

/// Value plus raw partial derivatives to a fixed total order.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    d: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("d", &self.d)
            .finish()
    }
}

impl Jet {
    pub fn zero(space: &Arc<JetSpace>, order: usize) -> Jet {
        Self::constant(space, 0.0, order)
    }

    pub fn constant(space: &Arc<JetSpace>, c: f64, order: usize) -> Jet {
        assert!(
            order <= space.max_order,
            "order {order} exceeds space order {}",
            space.max_order
        );
        let mut d = vec![0.0; space.len(order)];
        d[0] = c;
        Jet {
            space: space.clone(),
            order,
            d,
        }
    }

    /// The coordinate function of variable `var`, based at `value`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64, order: usize) -> Jet {
        let mut j = Self::constant(space, value, order);
        if order >= 1 {
            let mut kappa = vec![0u8; space.nvars];
            kappa[var] = 1;
            j.d[space.index[&kappa]] = 1.0;
        }
        j
    }

    /// Builds a jet from raw partials laid out in slot order.
    pub fn from_raw(space: &Arc<JetSpace>, order: usize, d: Vec<f64>) -> Jet {
        assert_eq!(d.len(), space.len(order));
        Jet {
            space: space.clone(),
            order,
            d,
        }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    /// Raw partials in slot order.
    pub fn raw(&self) -> &[f64] {
        &self.d
    }

    /// `∂f/∂u^{vars[0]} ∂u^{vars[1]} ...`; the order of `vars` is irrelevant.
    ///
    /// Panics if `vars.len()` exceeds the jet order.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        assert!(
            vars.len() <= self.order,
            "partial of order {} from a jet of order {}",
            vars.len(),
            self.order
        );
        self.d[self.space.slot_of_vars(vars)]
    }

    pub fn is_finite(&self) -> bool {
        self.d.iter().all(|v| v.is_finite())
    }

    /// Drops all partials above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order);
        Jet {
            space: self.space.clone(),
            order,
            d: self.d[..self.space.len(order)].to_vec(),
        }
    }

    /// The jet of `∂f/∂u^var`, one order lower.
    ///
    /// Panics on an order-0 jet: the derivative is not represented.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let table = &self.space.raise[var];
        let d = (0..self.space.len(order)).map(|s| self.d[table[s] as usize]).collect();
        Jet {
            space: self.space.clone(),
            order,
            d,
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            order: self.order,
            d: self.d.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut r = self.clone();
        r.d[0] += c;
        r
    }

    fn check_space(&self, other: &Jet) {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space), "jets from different spaces");
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let len = self.space.len(order);
        let d = self.d[..len]
            .iter()
            .zip(&other.d[..len])
            .map(|(a, b)| f(*a, *b))
            .collect();
        Jet {
            space: self.space.clone(),
            order,
            d,
        }
    }

    fn product(&self, other: &Jet) -> Jet {
        self.check_space(other);
        let order = self.order.min(other.order);
        let sp = &self.space;
        let len = sp.len(order);
        let mut d = vec![0.0; len];
        for (s, out) in d.iter_mut().enumerate() {
            let terms = &sp.leibniz[sp.leibniz_start[s]..sp.leibniz_start[s + 1]];
            *out = terms
                .iter()
                .map(|&(a, b, c)| c * self.d[a as usize] * other.d[b as usize])
                .sum();
        }
        Jet {
            space: sp.clone(),
            order,
            d,
        }
    }

    /// `f(self)` given the Taylor coefficients `f^(j)(u0)/j!` of `f` at the base value.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let k = self.order;
        assert!(taylor.len() > k, "need {} Taylor coefficients", k + 1);
        let mut delta = self.clone();
        delta.d[0] = 0.0;
        let mut acc = Jet::constant(&self.space, taylor[k], k);
        for j in (0..k).rev() {
            acc = acc.product(&delta);
            acc.d[0] += taylor[j];
        }
        acc
    }

    fn checked(self) -> Result<Jet, OutOfDomain> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(OutOfDomain)
        }
    }

    pub fn recip(&self) -> Result<Jet, OutOfDomain> {
        let u0 = self.value();
        if u0 == 0.0 {
            return Err(OutOfDomain);
        }
        self.compose(&series::recip(u0, self.order)).checked()
    }

    pub fn exp(&self) -> Jet {
        self.compose(&series::exp(self.value(), self.order))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&series::sin(self.value(), self.order))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&series::cos(self.value(), self.order))
    }

    pub fn sinh(&self) -> Jet {
        self.compose(&series::sinh(self.value(), self.order))
    }

    pub fn cosh(&self) -> Jet {
        self.compose(&series::cosh(self.value(), self.order))
    }

    pub fn tan(&self) -> Result<Jet, OutOfDomain> {
        if self.value().cos() == 0.0 {
            return Err(OutOfDomain);
        }
        self.compose(&series::tan(self.value(), self.order)).checked()
    }

    pub fn atan(&self) -> Jet {
        self.compose(&series::atan(self.value(), self.order))
    }

    pub fn ln(&self) -> Result<Jet, OutOfDomain> {
        if self.value() <= 0.0 {
            return Err(OutOfDomain);
        }
        self.compose(&series::ln(self.value(), self.order)).checked()
    }

    pub fn sqrt(&self) -> Result<Jet, OutOfDomain> {
        let u0 = self.value();
        if u0 < 0.0 || (u0 == 0.0 && self.order > 0) {
            return Err(OutOfDomain);
        }
        self.powf(0.5)
    }

    /// `self^p` for real `p`; requires a positive base unless `p` is a
    /// non-negative integer.
    pub fn powf(&self, p: f64) -> Result<Jet, OutOfDomain> {
        let u0 = self.value();
        if p.fract() == 0.0 && p.abs() <= 1024.0 {
            return self.powi(p as i32);
        }
        if u0 <= 0.0 {
            return Err(OutOfDomain);
        }
        self.compose(&series::pow(u0, p, self.order)).checked()
    }

    /// Integer power by repeated squaring; negative powers need a nonzero base.
    pub fn powi(&self, k: i32) -> Result<Jet, OutOfDomain> {
        let base = if k < 0 { self.recip()? } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Jet::constant(&self.space, 1.0, self.order);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.product(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.product(&sq);
            }
        }
        acc.checked()
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.product(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets, or `None` for an empty iterator.
pub fn sum<J: std::borrow::Borrow<Jet>>(items: impl IntoIterator<Item = J>) -> Option<Jet> {
    let mut it = items.into_iter();
    let first = it.next()?.borrow().clone();
    Some(it.fold(first, |acc, j| &acc + j.borrow()))
}
