//! Dense real polynomials with exact shift, product and integration.

use std::ops::Mul;

/// `Σ coeffs[j] x^j`, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn identity() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() == 1 {
            return Polynomial::constant(0.0);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, &c)| j as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Polynomial {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(self.coeffs.iter().enumerate().map(|(j, &c)| c / (j as f64 + 1.0)));
        Polynomial::new(out)
    }

    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    /// The polynomial `x ↦ p(x + c)`.
    pub fn shift(&self, c: f64) -> Polynomial {
        // Horner's scheme on polynomials: p(x + c) = (...(a_n (x+c) + a_{n-1})(x+c) + ...).
        let mut acc = vec![0.0; self.coeffs.len()];
        for &a in self.coeffs.iter().rev() {
            let mut next = vec![0.0; acc.len()];
            for (j, &v) in acc.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                next[j] += v * c;
                if j + 1 < next.len() {
                    next[j + 1] += v;
                }
            }
            next[0] += a;
            acc = next;
        }
        Polynomial::new(acc)
    }

    /// The polynomial `x ↦ p(s·x + c)`.
    pub fn affine_compose(&self, s: f64, c: f64) -> Polynomial {
        let shifted = self.shift(c);
        Polynomial::new(
            shifted
                .coeffs
                .iter()
                .enumerate()
                .map(|(j, &a)| a * s.powi(j as i32))
                .collect(),
        )
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}
