//! Dense univariate polynomials over the scalar field, plus the helpers the
//! QAP reduction needs: the vanishing polynomial of the constraint domain
//! {1..n}, its derivative at the roots in closed form, and interpolation of
//! evaluation vectors given over that domain.

use crate::algebra::{batch_invert, Scalar};

/// Dense polynomial, coefficients low-to-high, always trimmed so the leading
/// coefficient is non-zero (the zero polynomial is the empty vector).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn from_coeffs(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().map_or(false, Scalar::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Scalar::ZERO; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += *c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += *c;
        }
        Poly::from_coeffs(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Scalar::ZERO; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += *c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] -= *c;
        }
        Poly::from_coeffs(out)
    }

    /// Schoolbook product.
    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Scalar::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += *a * b;
            }
        }
        Poly::from_coeffs(out)
    }

    pub fn scale(&self, k: &Scalar) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| *c * k).collect())
    }

    /// Long division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        if self.coeffs.len() < divisor.coeffs.len() {
            return (Poly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let d = divisor.coeffs.len() - 1;
        let lead_inv = divisor
            .coeffs
            .last()
            .unwrap()
            .invert()
            .expect("trimmed polynomial has non-zero leading coefficient");
        let mut quot = vec![Scalar::ZERO; rem.len() - d];
        for i in (d..rem.len()).rev() {
            let q = rem[i] * lead_inv;
            if q.is_zero() {
                continue;
            }
            quot[i - d] = q;
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[i - d + j] -= q * dc;
            }
        }
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    pub fn formal_derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let out = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| *c * Scalar::from_u64(i as u64 + 1))
            .collect();
        Poly::from_coeffs(out)
    }
}

/// The monic vanishing polynomial t(X) = Π_{k=1..n} (X − k) whose roots index
/// the constraints.
pub fn vanishing(n: usize) -> Poly {
    let mut coeffs = vec![Scalar::ONE];
    for k in 1..=n as u64 {
        // Multiply by (X − k) in place, high index first so each old
        // coefficient is read before it is overwritten.
        let neg_k = -Scalar::from_u64(k);
        coeffs.push(Scalar::ZERO);
        for i in (0..coeffs.len() - 1).rev() {
            let c = coeffs[i];
            coeffs[i + 1] += c;
            coeffs[i] = c * neg_k;
        }
    }
    Poly::from_coeffs(coeffs)
}

/// t′(k) for k = 1..n in closed form:
/// t′(k) = Π_{j≠k} (k − j) = (−1)^{n−k} · (k−1)! · (n−k)!.
pub fn vanishing_derivative_at_roots(n: usize) -> Vec<Scalar> {
    let mut fact = Vec::with_capacity(n);
    fact.push(Scalar::ONE);
    for i in 1..n as u64 {
        let prev = *fact.last().unwrap();
        fact.push(prev * Scalar::from_u64(i));
    }
    (1..=n)
        .map(|k| {
            let v = fact[k - 1] * fact[n - k];
            if (n - k) % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Interpolates the degree-≤ n−1 polynomial with p(k) = evals[k−1] for
/// k = 1..n, given the domain's vanishing polynomial and the inverses of its
/// derivative at the roots. Each non-zero evaluation contributes one O(n)
/// synthetic division of t by (X − k), so sparse evaluation vectors are cheap.
pub fn interpolate_at_roots(evals: &[Scalar], t: &Poly, inv_t_prime: &[Scalar]) -> Poly {
    let n = evals.len();
    assert_eq!(inv_t_prime.len(), n, "derivative table must match domain size");
    assert_eq!(t.coeffs.len(), n + 1, "vanishing polynomial must match domain size");
    let mut acc = vec![Scalar::ZERO; n];
    let mut quot = vec![Scalar::ZERO; n];
    for (idx, s) in evals.iter().enumerate() {
        if s.is_zero() {
            continue;
        }
        let k = Scalar::from_u64(idx as u64 + 1);
        // Synthetic division: q = t / (X − k), exact because t(k) = 0.
        quot[n - 1] = t.coeffs[n];
        for i in (1..n).rev() {
            quot[i - 1] = t.coeffs[i] + k * quot[i];
        }
        let w = *s * inv_t_prime[idx];
        for (a, q) in acc.iter_mut().zip(&quot) {
            *a += w * q;
        }
    }
    Poly::from_coeffs(acc)
}

/// Convenience wrapper producing the inverse-derivative table for
/// [`interpolate_at_roots`].
pub fn inverse_derivative_table(n: usize) -> Vec<Scalar> {
    let mut tbl = vanishing_derivative_at_roots(n);
    batch_invert(&mut tbl);
    tbl
}
