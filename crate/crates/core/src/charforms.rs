//! Matrix-valued curvature 2-forms and their low-degree characteristic forms.
//!
//! Forms are expanded in the adapted coframe; a `p`-form stores one coefficient per
//! strictly increasing index tuple, `ω = Σ_{i₁<…<i_p} ω_{i₁…i_p} e^{i₁}∧…∧e^{i_p}`.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Array4};

use crate::curvature::CurvatureBlocks;
use crate::expr::Dims;

/// All strictly increasing `k`-tuples from `0..dim`, lexicographic.
pub fn increasing_tuples(dim: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, k, &mut Vec::new(), &mut out);
    out
}

fn pair_index(dim: usize, mu: usize, nu: usize) -> usize {
    debug_assert!(mu < nu && nu < dim);
    // pairs (0,1..), (1,2..), ...
    mu * dim - mu * (mu + 1) / 2 + (nu - mu - 1)
}

/// A homogeneous differential form at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    pub dim: usize,
    pub degree: usize,
    /// One coefficient per tuple of [`increasing_tuples`]`(dim, degree)`.
    pub coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            coeffs: vec![0.0; increasing_tuples(dim, degree).len()],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_diff(&self, other: &Form) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Coefficient on an arbitrary index tuple, with the permutation sign applied.
    pub fn component(&self, idx: &[usize]) -> f64 {
        let mut sorted = idx.to_vec();
        let mut sign = 1.0;
        for i in 0..sorted.len() {
            for j in 0..sorted.len() - 1 - i {
                if sorted[j] > sorted[j + 1] {
                    sorted.swap(j, j + 1);
                    sign = -sign;
                } else if sorted[j] == sorted[j + 1] {
                    return 0.0;
                }
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return 0.0;
        }
        let pos = increasing_tuples(self.dim, self.degree)
            .iter()
            .position(|t| *t == sorted)
            .expect("valid tuple");
        sign * self.coeffs[pos]
    }
}

/// Signed splits of an increasing 4-tuple into two increasing pairs.
const SHUFFLES_2_2: [([usize; 2], [usize; 2], f64); 6] = [
    ([0, 1], [2, 3], 1.0),
    ([0, 2], [1, 3], -1.0),
    ([0, 3], [1, 2], 1.0),
    ([1, 2], [0, 3], 1.0),
    ([1, 3], [0, 2], -1.0),
    ([2, 3], [0, 1], 1.0),
];

/// `R^α_β = Σ_{μ<ν} R^α_{βμν} e^μ ∧ e^ν` with `R^α_{βμν} = R^α_β(e_μ, e_ν)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTwoForm {
    dim: usize,
    /// `[α, β, pair]`.
    coeffs: Array3<f64>,
}

impl MatrixTwoForm {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: Array3::zeros((dim, dim, dim * (dim - 1) / 2)),
        }
    }

    /// From a full tensor `r[α, β, μ, ν] = R^α_β(e_μ, e_ν)`; only `μ < ν` is read.
    pub fn from_full(r: &Array4<f64>) -> Self {
        let dim = r.dim().0;
        let mut out = Self::zero(dim);
        for a in 0..dim {
            for b in 0..dim {
                for mu in 0..dim {
                    for nu in mu + 1..dim {
                        out.coeffs[[a, b, pair_index(dim, mu, nu)]] = r[[a, b, mu, nu]];
                    }
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R^α_β(e_μ, e_ν)` for any `μ, ν`.
    pub fn get(&self, a: usize, b: usize, mu: usize, nu: usize) -> f64 {
        match mu.cmp(&nu) {
            std::cmp::Ordering::Less => self.coeffs[[a, b, pair_index(self.dim, mu, nu)]],
            std::cmp::Ordering::Greater => -self.coeffs[[a, b, pair_index(self.dim, nu, mu)]],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn set(&mut self, a: usize, b: usize, mu: usize, nu: usize, v: f64) {
        assert!(mu != nu, "diagonal slots of a 2-form are zero");
        if mu < nu {
            self.coeffs[[a, b, pair_index(self.dim, mu, nu)]] = v;
        } else {
            self.coeffs[[a, b, pair_index(self.dim, nu, mu)]] = -v;
        }
    }

    pub fn to_full(&self) -> Array4<f64> {
        let d = self.dim;
        Array4::from_shape_fn((d, d, d, d), |(a, b, mu, nu)| self.get(a, b, mu, nu))
    }

    pub fn to_blocks(&self, dims: Dims) -> CurvatureBlocks {
        CurvatureBlocks::from_full(&self.to_full(), dims)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            coeffs: &self.coeffs * c,
        }
    }

    /// `P R P⁻¹` on the endomorphism indices.
    pub fn conjugated(&self, p: &Array2<f64>, p_inv: &Array2<f64>) -> Self {
        let d = self.dim;
        let mut out = Self::zero(d);
        for k in 0..self.coeffs.dim().2 {
            let slice = self.coeffs.index_axis(ndarray::Axis(2), k);
            let c = p.dot(&slice).dot(p_inv);
            out.coeffs.index_axis_mut(ndarray::Axis(2), k).assign(&c);
        }
        out
    }

    /// The matrix 2-form `c` evaluated on one increasing pair.
    fn on_pair(&self, mu: usize, nu: usize) -> ndarray::ArrayView2<'_, f64> {
        self.coeffs.index_axis(ndarray::Axis(2), pair_index(self.dim, mu, nu))
    }
}

/// Places the six curvature blocks into a full matrix 2-form.
pub fn assemble_curvature_form(curv: &CurvatureBlocks) -> MatrixTwoForm {
    MatrixTwoForm::from_full(&curv.to_full())
}

/// A trace power and whether its degree exceeded the dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceForm {
    pub form: Form,
    /// Set when `2k > dim`; the form is then zero.
    pub exceeds_dimension: bool,
}

/// `Tr_1 = tr R` or `Tr_2 = tr(R ∧ R)` via shuffle sums.
pub fn trace_powers(r: &MatrixTwoForm, k: usize) -> TraceForm {
    let dim = r.dim;
    assert!(k == 1 || k == 2, "only the first two trace powers are implemented");
    if 2 * k > dim {
        return TraceForm {
            form: Form::zero(dim, 2 * k),
            exceeds_dimension: true,
        };
    }
    let tuples = increasing_tuples(dim, 2 * k);
    let coeffs = tuples
        .iter()
        .map(|t| {
            if k == 1 {
                (0..dim).map(|a| r.get(a, a, t[0], t[1])).sum()
            } else {
                SHUFFLES_2_2
                    .iter()
                    .map(|(p, q, sign)| {
                        let a = r.on_pair(t[p[0]], t[p[1]]);
                        let b = r.on_pair(t[q[0]], t[q[1]]);
                        sign * (&a * &b.t()).sum()
                    })
                    .sum()
            }
        })
        .collect();
    TraceForm {
        form: Form {
            dim,
            degree: 2 * k,
            coeffs,
        },
        exceeds_dimension: false,
    }
}

/// `Tr_2` by the defining sum over all orderings of each 4-tuple.
pub fn trace_square_brute_force(r: &MatrixTwoForm) -> Form {
    let dim = r.dim;
    if dim < 4 {
        return Form::zero(dim, 4);
    }
    let perms = permutations4();
    let coeffs = increasing_tuples(dim, 4)
        .iter()
        .map(|t| {
            let mut s = 0.0;
            for (p, sign) in &perms {
                let idx: Vec<usize> = p.iter().map(|&i| t[i]).collect();
                for a in 0..dim {
                    for b in 0..dim {
                        s += sign * 0.25 * r.get(a, b, idx[0], idx[1]) * r.get(b, a, idx[2], idx[3]);
                    }
                }
            }
            s
        })
        .collect();
    Form { dim, degree: 4, coeffs }
}

fn permutations4() -> Vec<([usize; 4], f64)> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().any(|&i| std::mem::replace(&mut seen[i], true)) {
                        continue;
                    }
                    let mut inv = 0;
                    for i in 0..4 {
                        for j in i + 1..4 {
                            if p[i] > p[j] {
                                inv += 1;
                            }
                        }
                    }
                    out.push((p, if inv % 2 == 0 { 1.0 } else { -1.0 }));
                }
            }
        }
    }
    out
}

/// A real coefficient form times `i^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedForm {
    pub form: Form,
    /// The value is `i^i_power · form`, with `i_power` in `0..4`.
    pub i_power: u8,
}

/// `ch_0 = n+m`, `ch_k = (1/i)^k Tr_k / (k! (2π)^k)` for `k = 1, 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernCharacter {
    pub ch0: f64,
    pub ch1: PhasedForm,
    pub ch2: PhasedForm,
}

pub fn chern_character(r: &MatrixTwoForm) -> ChernCharacter {
    let tr1 = trace_powers(r, 1).form;
    let tr2 = trace_powers(r, 2).form;
    ChernCharacter {
        ch0: r.dim as f64,
        ch1: PhasedForm {
            form: tr1.scaled(1.0 / (2.0 * PI)),
            i_power: 3,
        },
        ch2: PhasedForm {
            form: tr2.scaled(1.0 / (2.0 * (2.0 * PI).powi(2))),
            i_power: 2,
        },
    }
}

/// Sign in `Â_4 = s · tr(R̃ ∧ R̃) / 48`, `R̃ = R / 2π`; fixed by the 2×2 sinh-series check.
pub const A_HAT_SIGN: f64 = 1.0;

pub fn a_hat_degree4(r: &MatrixTwoForm) -> Form {
    trace_powers(r, 2).form.scaled(A_HAT_SIGN / (48.0 * (2.0 * PI).powi(2)))
}

/// `p_1 = −tr(R̃ ∧ R̃) / 2`.
pub fn first_pontryagin(r: &MatrixTwoForm) -> Form {
    trace_powers(r, 2).form.scaled(-1.0 / (8.0 * PI * PI))
}
