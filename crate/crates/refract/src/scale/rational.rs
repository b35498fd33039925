//! Closed-form scale function backends.
//!
//! When the magnitude law has a rational Laplace transform P/Q, the scale
//! transform is the rational function Q(th)/D(th) with
//!
//! ```text
//! D(th) = (c th + sigma2 th^2/2 - (lambda + q)) Q(th) + lambda P(th),
//! ```
//!
//! where c = gamma + lambda E[M 1{M<1}] is the uncompensated linear drift.
//! W is then the inverse transform of the partial fraction expansion: a sum
//! of x^j e^{r x} terms over the roots of D. Deterministic jump sizes make
//! the exponent transcendental instead; there W has an exact piecewise
//! series with one new term per multiple of the jump size.

use num_complex::Complex64;

use crate::model::{JumpSpec, LevyModel, MagnitudeLaw};
use crate::numerics::roots::{
    poly_add, poly_deriv, poly_eval, poly_mul, poly_scale, polynomial_roots,
};
use crate::{Error, Result};

/// One exponential cluster of the partial fraction expansion:
/// sum_j coeffs[j] x^j e^{root x} / j!.
struct ExpTerm {
    root: Complex64,
    /// coeffs[j] multiplies x^j e^{root x} / j! (so coeffs[j] = c_{j+1} of
    /// the pole of order j+1).
    coeffs: Vec<Complex64>,
}

pub struct RationalScale {
    terms: Vec<ExpTerm>,
}

/// Laplace transform numerator/denominator polynomials of the magnitude law.
fn law_polynomials(law: &MagnitudeLaw) -> (Vec<f64>, Vec<f64>) {
    match law {
        MagnitudeLaw::Exponential { mean } => (vec![1.0], vec![1.0, *mean]),
        MagnitudeLaw::MixedExponential { weights, means } => {
            let mut q = vec![1.0];
            for m in means {
                q = poly_mul(&q, &[1.0, *m]);
            }
            let mut p = vec![0.0];
            for (i, w) in weights.iter().enumerate() {
                let mut part = vec![*w];
                for (j, m) in means.iter().enumerate() {
                    if j != i {
                        part = poly_mul(&part, &[1.0, *m]);
                    }
                }
                p = poly_add(&p, &part);
            }
            (p, q)
        }
        MagnitudeLaw::Erlang { shape, mean } => {
            let mut q = vec![1.0];
            for _ in 0..*shape {
                q = poly_mul(&q, &[1.0, mean / f64::from(*shape)]);
            }
            (vec![1.0], q)
        }
        MagnitudeLaw::PointMass { .. } => unreachable!("point mass is not rational"),
    }
}

impl RationalScale {
    pub fn new(model: &LevyModel, q: f64, phi: f64) -> Result<Self> {
        let (lambda, p_poly, q_poly) = match model.jumps() {
            JumpSpec::None => (0.0, vec![1.0], vec![1.0]),
            JumpSpec::CompoundPoisson { rate, law } => {
                let (p, qq) = law_polynomials(law);
                (*rate, p, qq)
            }
        };
        let drift = model.linear_drift();
        // D = (drift*th + sigma2/2 th^2 - (lambda + q)) * Q + lambda * P
        let mut quad = vec![-(lambda + q), drift];
        if model.sigma2() > 0.0 {
            quad.push(0.5 * model.sigma2());
        }
        let mut d_poly = poly_add(&poly_mul(&quad, &q_poly), &poly_scale(&p_poly, lambda));

        let mut roots: Vec<Complex64> = Vec::new();
        if q == 0.0 {
            // psi(0) = 0 makes zero an exact root; deflate it explicitly so
            // float noise in the constant term cannot smear it.
            d_poly[0] = 0.0;
            d_poly.remove(0);
            roots.push(Complex64::new(0.0, 0.0));
        }
        roots.extend(polynomial_roots(&d_poly)?);
        if q == 0.0 {
            // Restore D for residue evaluation.
            d_poly.insert(0, 0.0);
        }

        // The dominant root is Phi(q); replace it by the Newton-accurate
        // value from the exponent itself.
        let mut best = 0usize;
        let mut best_dist = f64::MAX;
        for (i, r) in roots.iter().enumerate() {
            let d = (r - Complex64::new(phi, 0.0)).norm();
            if d < best_dist {
                best_dist = d;
                best = i;
            }
        }
        let scale = roots.iter().map(|r| r.norm()).fold(1.0f64, f64::max);
        if best_dist > 1e-4 * scale {
            return Err(Error::RootFind(format!(
                "largest transform pole {} does not match Phi(q) = {}",
                roots[best], phi
            )));
        }
        roots[best] = Complex64::new(phi, 0.0);

        // Cluster roots to handle (near-)multiplicities.
        let cluster_tol = 1e-6 * scale;
        let mut used = vec![false; roots.len()];
        let mut terms = Vec::new();
        let d_deriv = poly_deriv(&d_poly);
        for i in 0..roots.len() {
            if used[i] {
                continue;
            }
            let mut member_idx = vec![i];
            used[i] = true;
            for j in (i + 1)..roots.len() {
                if !used[j] && (roots[j] - roots[i]).norm() <= cluster_tol {
                    member_idx.push(j);
                    used[j] = true;
                }
            }
            let m = member_idx.len();
            if m == 1 {
                let r = roots[i];
                let num = poly_eval(&q_poly, r);
                let den = poly_eval(&d_deriv, r);
                if den.norm() < 1e-300 {
                    return Err(Error::RootFind("vanishing residue denominator".into()));
                }
                terms.push(ExpTerm { root: r, coeffs: vec![num / den] });
            } else {
                // Confluent cluster: extract Laurent coefficients by a small
                // contour integral around the cluster centre.
                let centre =
                    member_idx.iter().map(|&j| roots[j]).sum::<Complex64>() / m as f64;
                let mut radius = f64::INFINITY;
                for (j, r) in roots.iter().enumerate() {
                    if !member_idx.contains(&j) {
                        radius = radius.min(0.3 * (r - centre).norm());
                    }
                }
                if !radius.is_finite() {
                    radius = 0.5 * scale.max(1.0);
                }
                radius = radius.max(10.0 * cluster_tol).max(1e-4);
                let k = 512usize;
                let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
                for step in 0..k {
                    let angle = 2.0 * std::f64::consts::PI * step as f64 / k as f64;
                    let offset = radius * Complex64::new(angle.cos(), angle.sin());
                    let theta = centre + offset;
                    let g = poly_eval(&q_poly, theta) / poly_eval(&d_poly, theta);
                    // Laurent coefficient of (theta - centre)^{-(j+1)}:
                    // (1/2 pi i) contour integral of g (theta-centre)^j.
                    let mut pow = offset;
                    for c in coeffs.iter_mut() {
                        *c += g * pow;
                        pow *= offset;
                    }
                }
                for c in coeffs.iter_mut() {
                    *c /= k as f64;
                }
                terms.push(ExpTerm { root: centre, coeffs });
            }
        }
        Ok(RationalScale { terms })
    }

    pub fn w(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let e = (t.root * x).exp();
            let mut xpow = 1.0;
            let mut fact = 1.0;
            for (j, c) in t.coeffs.iter().enumerate() {
                if j > 0 {
                    xpow *= x;
                    fact *= j as f64;
                }
                acc += c * xpow / fact * e;
            }
        }
        acc.re
    }

    pub fn w_prime(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let e = (t.root * x).exp();
            for (j, c) in t.coeffs.iter().enumerate() {
                let fact: f64 = (1..=j).map(|v| v as f64).product();
                let poly_part = if j == 0 {
                    t.root
                } else {
                    j as f64 * x.powi(j as i32 - 1) + t.root * x.powi(j as i32)
                };
                acc += c * poly_part / fact * e;
            }
        }
        acc.re
    }

    /// int_0^x W(u) du, exact antiderivative of the exponential sum.
    pub fn integral_w(&self, x: f64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            for (j, c) in t.coeffs.iter().enumerate() {
                let fact: f64 = (1..=j).map(|v| v as f64).product();
                acc += c * monomial_exp_integral(j, t.root, x) / fact;
            }
        }
        acc.re
    }
}

/// int_0^x u^n e^{r u} du.
fn monomial_exp_integral(n: usize, r: Complex64, x: f64) -> Complex64 {
    if r.norm() < 1e-12 {
        return Complex64::new(x.powi(n as i32 + 1) / (n as f64 + 1.0), 0.0);
    }
    let e = (r * x).exp();
    let mut acc = (e - 1.0) / r;
    for k in 1..=n {
        acc = (x.powi(k as i32) * e - k as f64 * acc) / r;
    }
    acc
}

/// Exact piecewise series for deterministic jump sizes:
///
/// ```text
/// W^{(q)}(x) = sum_{n <= x/s} (-lambda)^n (x - n s)^n
///              e^{(lambda+q)(x - n s)/c} / (c^{n+1} n!)
/// ```
pub struct PointMassScale {
    c: f64,
    lambda: f64,
    s: f64,
    /// (lambda + q)/c
    mu: f64,
}

impl PointMassScale {
    pub fn new(c: f64, lambda: f64, q: f64, s: f64) -> Self {
        PointMassScale { c, lambda, s, mu: (lambda + q) / c }
    }

    /// Kink locations of W' within a practical plotting range.
    pub fn kinks(&self) -> Vec<f64> {
        (1..=64).map(|n| n as f64 * self.s).collect()
    }

    pub fn w(&self, x: f64) -> f64 {
        let n_max = (x / self.s).floor() as usize;
        let mut acc = 0.0;
        for n in 0..=n_max {
            let u = x - n as f64 * self.s;
            // (-lambda)^n u^n / (c^{n+1} n!)
            let mut coeff = 1.0 / self.c;
            for k in 1..=n {
                coeff *= -self.lambda * u / (self.c * k as f64);
            }
            acc += coeff * (self.mu * u).exp();
        }
        acc
    }

    /// Right derivative; at the kinks x = n s the n-th term enters with its
    /// one-sided slope.
    pub fn w_prime(&self, x: f64) -> f64 {
        // At u = 0 the n >= 1 terms contribute n u^{n-1}: only n = 1 is
        // nonzero there, handled by the series below a jump point.
        let n_max = (x / self.s).floor() as usize;
        let mut acc = 0.0;
        for n in 0..=n_max {
            let u = x - n as f64 * self.s;
            let e = (self.mu * u).exp();
            // d/du [u^n e^{mu u}] = (n u^{n-1} + mu u^n) e^{mu u}
            let mut base = 1.0 / self.c; // lambda^n / (c^{n+1} n!) * sign, via recurrence
            for k in 1..=n {
                base *= -self.lambda / (self.c * k as f64);
            }
            let un1 = if n >= 1 { u.powi(n as i32 - 1) } else { 0.0 };
            let un = u.powi(n as i32);
            acc += base * (n as f64 * un1 + self.mu * un) * e;
        }
        acc
    }

    pub fn integral_w(&self, x: f64) -> f64 {
        let n_max = (x / self.s).floor() as usize;
        let mu = Complex64::new(self.mu, 0.0);
        let mut acc = 0.0;
        for n in 0..=n_max {
            let u = x - n as f64 * self.s;
            let mut base = 1.0 / self.c;
            for k in 1..=n {
                base *= -self.lambda / (self.c * k as f64);
            }
            acc += base * monomial_exp_integral(n, mu, u).re;
        }
        acc
    }
}
