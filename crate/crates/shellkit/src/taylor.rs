//! Truncated bivariate Taylor series used to differentiate surface
//! parametrizations exactly, including composed surfaces such as normal
//! offsets whose derivatives involve derivatives of the base normal.

use std::ops::{Add, Mul, Neg, Sub};

/// Truncated Taylor expansion `Σ c_ij δ₁^i δ₂^j` with `i + j ≤ order`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    order: usize,
    coeffs: Vec<f64>,
}

fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

fn size(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

impl Taylor {
    /// Constant series.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; size(order)];
        coeffs[0] = value;
        Self { order, coeffs }
    }

    /// The coordinate `x_k` expanded about `x0` (`k ∈ {0, 1}`).
    pub fn variable(x0: f64, k: usize, order: usize) -> Self {
        let mut t = Self::constant(x0, order);
        if order >= 1 {
            let idx = if k == 0 { index(1, 0) } else { index(0, 1) };
            t.coeffs[idx] = 1.0;
        }
        t
    }

    /// Truncation order.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Value at the expansion point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Partial derivative `∂₁^i ∂₂^j` at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return 0.0;
        }
        self.coeffs[index(i, j)] * factorial(i) * factorial(j)
    }

    /// Series of the partial derivative with respect to `x_k`, one order lower.
    pub fn diff(&self, k: usize) -> Self {
        let order = self.order.saturating_sub(1);
        let mut out = Self::constant(0.0, order);
        if self.order == 0 {
            return out;
        }
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                out.coeffs[index(i, j)] =
                    if k == 0 { (i + 1) as f64 * self.coeffs[index(i + 1, j)] } else { (j + 1) as f64 * self.coeffs[index(i, j + 1)] };
            }
        }
        out
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self { order, coeffs: self.coeffs[..size(order)].to_vec() }
    }

    /// Multiplies by a scalar.
    pub fn scale(&self, s: f64) -> Self {
        Self { order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Adds a scalar.
    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Composition `f(self)` given the scaled derivatives `f^(k)(a)/k!` at `a = self.value()`.
    fn compose(&self, scaled_derivs: &[f64]) -> Self {
        let delta = self.add_scalar(-self.value());
        let n = self.order;
        let mut acc = Self::constant(scaled_derivs[n], n);
        for k in (0..n).rev() {
            acc = (&acc * &delta).add_scalar(scaled_derivs[k]);
        }
        acc
    }

    /// `sin` of the series.
    pub fn sin(&self) -> Self {
        let a = self.value();
        let cycle = [a.sin(), a.cos(), -a.sin(), -a.cos()];
        let d: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.compose(&d)
    }

    /// `cos` of the series.
    pub fn cos(&self) -> Self {
        let a = self.value();
        let cycle = [a.cos(), -a.sin(), -a.cos(), a.sin()];
        let d: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4] / factorial(k)).collect();
        self.compose(&d)
    }

    /// Real power `self^p` (the expansion point must be positive unless `p` is a natural number).
    pub fn powf(&self, p: f64) -> Self {
        let a = self.value();
        let mut d = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for k in 0..=self.order {
            d.push(binom * a.powf(p - k as f64));
            binom *= (p - k as f64) / (k + 1) as f64;
        }
        self.compose(&d)
    }

    /// Square root of the series.
    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    /// Reciprocal of the series.
    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Add for &Taylor {
    type Output = Taylor;
    fn add(self, rhs: &Taylor) -> Taylor {
        let order = self.order.min(rhs.order);
        let coeffs = (0..size(order)).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect();
        Taylor { order, coeffs }
    }
}

impl Sub for &Taylor {
    type Output = Taylor;
    fn sub(self, rhs: &Taylor) -> Taylor {
        let order = self.order.min(rhs.order);
        let coeffs = (0..size(order)).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect();
        Taylor { order, coeffs }
    }
}

impl Neg for &Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Mul for &Taylor {
    type Output = Taylor;
    fn mul(self, rhs: &Taylor) -> Taylor {
        let order = self.order.min(rhs.order);
        let mut out = Taylor::constant(0.0, order);
        for d1 in 0..=order {
            for j1 in 0..=d1 {
                let a = self.coeffs[index(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(order - d1) {
                    for j2 in 0..=d2 {
                        let b = rhs.coeffs[index(d2 - j2, j2)];
                        out.coeffs[index(d1 - j1 + d2 - j2, j1 + j2)] += a * b;
                    }
                }
            }
        }
        out
    }
}

/// A 3-vector of Taylor series.
pub type TVec3 = [Taylor; 3];

/// Dot product of two series vectors.
pub fn dot(a: &TVec3, b: &TVec3) -> Taylor {
    let s = &(&a[0] * &b[0]) + &(&a[1] * &b[1]);
    &s + &(&a[2] * &b[2])
}

/// Cross product of two series vectors.
pub fn cross(a: &TVec3, b: &TVec3) -> TVec3 {
    [&(&a[1] * &b[2]) - &(&a[2] * &b[1]), &(&a[2] * &b[0]) - &(&a[0] * &b[2]), &(&a[0] * &b[1]) - &(&a[1] * &b[0])]
}

/// Componentwise partial derivative.
pub fn diff(a: &TVec3, k: usize) -> TVec3 {
    [a[0].diff(k), a[1].diff(k), a[2].diff(k)]
}

/// Multiplies every component by a scalar series.
pub fn scale(a: &TVec3, s: &Taylor) -> TVec3 {
    [&a[0] * s, &a[1] * s, &a[2] * s]
}

/// Componentwise sum.
pub fn add(a: &TVec3, b: &TVec3) -> TVec3 {
    [&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]]
}

/// Unit vector `a/‖a‖`.
pub fn normalize(a: &TVec3) -> TVec3 {
    scale(a, &dot(a, a).sqrt().recip())
}
