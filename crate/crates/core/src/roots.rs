//! Scalar root finding and polynomial root extraction.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Safeguarded Newton iteration on a sign-change bracket.
///
/// `f` returns `(value, derivative)`; it must satisfy `f(lo) <= 0 <= f(hi)`.
/// A Newton step is taken whenever it lands strictly inside the current
/// bracket, otherwise the bracket is bisected.
pub fn newton_bisect<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let (fhi, _) = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::RootNotConverged { iterations: 0, lo, hi });
    }

    let mut x = hi;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let scale = next.abs().max(1e-300);
        if (next - x).abs() <= rel_tol * scale || (hi - lo) <= rel_tol * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::RootNotConverged {
        iterations: max_iter,
        lo,
        hi,
    })
}

/// Plain bisection for an increasing function, used where no derivative is
/// available (and as an independent check of [`newton_bisect`]).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, abs_tol: f64) -> f64 {
    while hi - lo > abs_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real polynomial with coefficients stored from the constant term upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `a + b·x`
    pub fn linear(a: f64, b: f64) -> Self {
        Poly(vec![a, b])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// Drops leading coefficients that are exactly zero.
    pub fn trimmed(mut self) -> Poly {
        while self.0.len() > 1 && *self.0.last().unwrap() == 0.0 {
            self.0.pop();
        }
        self
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.0.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// All complex roots by the Aberth–Ehrlich simultaneous iteration.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let p = self.clone().trimmed();
        let n = p.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = p.0[n];
        let monic = p.scale(1.0 / lead);
        // Cauchy bound on the root moduli.
        let bound = 1.0 + monic.0[..n].iter().fold(0.0f64, |m, c| m.max(c.abs()));

        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
                Complex64::from_polar(0.5 * bound, angle)
            })
            .collect();

        let max_iter = 500;
        for _ in 0..max_iter {
            let mut max_step = 0.0f64;
            for i in 0..n {
                let (pv, dpv) = monic.eval_with_derivative(z[i]);
                if pv.norm() == 0.0 {
                    continue;
                }
                let ratio = pv / dpv;
                let mut repulsion = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    if j != i {
                        repulsion += 1.0 / (z[i] - z[j]);
                    }
                }
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[i] -= step;
                    max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
                }
            }
            if max_step < 1e-15 {
                return Ok(z);
            }
        }
        // Aberth converges cubically for simple roots; slow convergence means
        // clustered roots, which the callers reject anyway.
        Ok(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_bisect_finds_sqrt2() {
        let r = newton_bisect(|x| (x * x - 2.0, 2.0 * x), 0.0, 4.0, 1e-14, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn newton_bisect_rejects_bad_bracket() {
        assert!(newton_bisect(|x| (x * x + 1.0, 2.0 * x), 0.0, 4.0, 1e-14, 100).is_err());
    }

    #[test]
    fn bisection_matches() {
        let r = bisect(|x| x.powi(3) - 5.0, 0.0, 3.0, 1e-14);
        assert!((r - 5f64.cbrt()).abs() < 1e-13);
    }

    #[test]
    fn poly_roots_real_and_complex() {
        // (x - 1)(x + 2)(x^2 + 2x + 5): roots 1, -2, -1 ± 2i
        let p = Poly::linear(-1.0, 1.0)
            .mul(&Poly::linear(2.0, 1.0))
            .mul(&Poly(vec![5.0, 2.0, 1.0]));
        let mut roots = p.roots().unwrap();
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let expected = [
            Complex64::new(-2.0, 0.0),
            Complex64::new(-1.0, -2.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(1.0, 0.0),
        ];
        for (r, e) in roots.iter().zip(expected.iter()) {
            assert!((r - e).norm() < 1e-12, "{r} vs {e}");
        }
    }
}
