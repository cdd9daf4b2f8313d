//! Univariate Taylor coefficients `c_j = f^(j)(u0) / j!`, `j = 0..=k`.

fn factorials(k: usize) -> Vec<f64> {
    let mut f = vec![1.0; k + 1];
    for j in 1..=k {
        f[j] = f[j - 1] * j as f64;
    }
    f
}

/// Coefficients from a periodic derivative cycle `f, f', f'', ...`.
fn cyclic(cycle: &[f64], k: usize) -> Vec<f64> {
    let fact = factorials(k);
    (0..=k).map(|j| cycle[j % cycle.len()] / fact[j]).collect()
}

pub fn exp(u0: f64, k: usize) -> Vec<f64> {
    let e = u0.exp();
    cyclic(&[e], k)
}

pub fn sin(u0: f64, k: usize) -> Vec<f64> {
    let (s, c) = u0.sin_cos();
    cyclic(&[s, c, -s, -c], k)
}

pub fn cos(u0: f64, k: usize) -> Vec<f64> {
    let (s, c) = u0.sin_cos();
    cyclic(&[c, -s, -c, s], k)
}

pub fn sinh(u0: f64, k: usize) -> Vec<f64> {
    cyclic(&[u0.sinh(), u0.cosh()], k)
}

pub fn cosh(u0: f64, k: usize) -> Vec<f64> {
    cyclic(&[u0.cosh(), u0.sinh()], k)
}

pub fn recip(u0: f64, k: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(k + 1);
    let inv = 1.0 / u0;
    let mut p = inv;
    for _ in 0..=k {
        c.push(p);
        p *= -inv;
    }
    c
}

pub fn ln(u0: f64, k: usize) -> Vec<f64> {
    let mut c = vec![u0.ln()];
    let inv = 1.0 / u0;
    let mut p = inv;
    for j in 1..=k {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        c.push(sign * p / j as f64);
        p *= inv;
    }
    c
}

/// `(u0 + t)^p` via generalized binomial coefficients.
pub fn pow(u0: f64, p: f64, k: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(k + 1);
    let mut binom = 1.0;
    for j in 0..=k {
        c.push(binom * u0.powf(p - j as f64));
        binom *= (p - j as f64) / (j as f64 + 1.0);
    }
    c
}

/// Power-series quotient `a / b`; `b[0]` must be nonzero.
fn divide(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut q = vec![0.0; a.len()];
    for j in 0..a.len() {
        let mut s = a[j];
        for i in 0..j {
            s -= q[i] * b[j - i];
        }
        q[j] = s / b[0];
    }
    q
}

pub fn tan(u0: f64, k: usize) -> Vec<f64> {
    divide(&sin(u0, k), &cos(u0, k))
}

/// Integrates the series of `1 / (1 + (u0 + t)^2)`.
pub fn atan(u0: f64, k: usize) -> Vec<f64> {
    let mut q = vec![0.0; k.max(1)];
    q[0] = 1.0 + u0 * u0;
    if q.len() > 1 {
        q[1] = 2.0 * u0;
    }
    if q.len() > 2 {
        q[2] = 1.0;
    }
    let one: Vec<f64> = (0..q.len()).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
    let deriv = divide(&one, &q);
    let mut c = vec![u0.atan()];
    for j in 1..=k {
        c.push(deriv[j - 1] / j as f64);
    }
    c
}
