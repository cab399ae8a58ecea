//! Real polynomials with ascending coefficients, roots, and Hurwitz tests.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Real-axis margin for the eigenvalue Hurwitz test, relative to root size.
const HURWITZ_MARGIN: f64 = 1e-10;

/// A real polynomial, `coeffs[k]` multiplies `s^k`.
///
/// Trailing zero coefficients are trimmed on construction so the leading
/// coefficient is always nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        Ok(Self { coeffs })
    }

    /// Monic polynomial with the given roots.
    ///
    /// Fails unless the roots are closed under conjugation, since the result
    /// must have real coefficients.
    pub fn from_roots(roots: &[Complex64]) -> Result<Self> {
        if !linalg::is_conjugate_closed(roots, 1e-9) {
            return Err(Error::NotConjugateClosed);
        }
        let mut c = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= ck * r;
            }
            c = next;
        }
        Self::new(c.into_iter().map(|z| z.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("nonempty")
    }

    pub fn monic(&self) -> Self {
        let lead = self.leading();
        Self {
            coeffs: self.coeffs.iter().map(|c| c / lead).collect(),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Evaluate at a square matrix argument (Horner form).
    pub fn eval_matrix(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        self.coeffs
            .iter()
            .rev()
            .fold(DMatrix::zeros(n, n), |acc, &c| acc * a + &id * c)
    }

    /// Roots as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let p = self.monic();
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -p.coeffs[i];
        }
        linalg::eigenvalues(&companion)
    }

    /// Hurwitz test through companion-matrix eigenvalues.
    pub fn is_hurwitz(&self) -> Result<bool> {
        if self.degree() == 0 {
            return Err(Error::invalid("Hurwitz test needs degree >= 1"));
        }
        let roots = self.roots();
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        Ok(roots.iter().all(|r| r.re < -HURWITZ_MARGIN * scale))
    }

    /// Hurwitz test through the Routh array.
    ///
    /// A zero anywhere in the first column counts as not Hurwitz (roots on or
    /// right of the imaginary axis).
    pub fn routh_hurwitz(&self) -> Result<bool> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::invalid("Hurwitz test needs degree >= 1"));
        }
        let p = self.monic();
        // Descending order for the table.
        let desc: Vec<f64> = p.coeffs.iter().rev().copied().collect();
        if desc.iter().any(|&c| c <= 0.0) {
            return Ok(false);
        }
        let width = n / 2 + 1;
        let mut prev: Vec<f64> = (0..width).map(|k| desc.get(2 * k).copied().unwrap_or(0.0)).collect();
        let mut curr: Vec<f64> =
            (0..width).map(|k| desc.get(2 * k + 1).copied().unwrap_or(0.0)).collect();
        for _ in 0..n - 1 {
            if curr[0] <= 0.0 {
                return Ok(false);
            }
            let next: Vec<f64> = (0..width)
                .map(|k| {
                    let a = prev.get(k + 1).copied().unwrap_or(0.0);
                    let b = curr.get(k + 1).copied().unwrap_or(0.0);
                    (curr[0] * a - prev[0] * b) / curr[0]
                })
                .collect();
            prev = curr;
            curr = next;
        }
        Ok(curr[0] > 0.0)
    }
}

impl TryFrom<Vec<f64>> for Polynomial {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

/// Hurwitz check of a polynomial (all roots strictly in the left half-plane).
pub fn is_hurwitz(p: &Polynomial) -> Result<bool> {
    p.is_hurwitz()
}
