//! Numeric scale-function backend: Bromwich inversion on a cached grid.
//!
//! W^{(q)} grows like e^{Phi(q) x}, so the bounded tilted function
//! W_Phi(x) = e^{-Phi(q) x} W^{(q)}(x), whose transform is
//! 1/(psi(s + Phi(q)) - q), is inverted instead and the exponential factor
//! is restored at evaluation time. Node values are interpolated with a
//! four-point Lagrange stencil; the grid is geometric near zero (resolving
//! the W(0+) jump of bounded-variation exponents) and uniform beyond.

use num_complex::Complex64;

use crate::model::LevyModel;
use crate::numerics::laplace::{invert, InversionParams};
use crate::numerics::quad::adaptive_simpson_split;
use crate::{Error, Result};

/// Precision controls for the numeric backend.
#[derive(Debug, Clone, Copy)]
pub struct NumericParams {
    pub inversion: InversionParams,
    /// Grid extent; evaluations beyond it are range errors.
    pub x_max: f64,
    /// Node spacing of the uniform section.
    pub uniform_step: f64,
    /// Geometric section start (first positive node).
    pub geo_from: f64,
    /// Geometric section end / uniform section start.
    pub geo_to: f64,
    /// Number of geometric nodes.
    pub geo_points: usize,
}

impl Default for NumericParams {
    fn default() -> Self {
        NumericParams {
            inversion: InversionParams::default(),
            x_max: 40.0,
            uniform_step: 6e-3,
            geo_from: 1e-4,
            geo_to: 0.1,
            geo_points: 120,
        }
    }
}

pub struct NumericScale {
    phi: f64,
    nodes: Vec<f64>,
    /// Tilted values e^{-phi x} W(x) at the nodes.
    tilted: Vec<f64>,
    /// Derivative of the tilted function at the nodes.
    tilted_deriv: Vec<f64>,
    x_max: f64,
}

/// Direct single-point inversion of the tilted scale transform, without any
/// grid interpolation (exposed for accuracy tests).
#[cfg(test)]
pub(crate) fn invert_scale_transform_at(
    model: &LevyModel,
    q: f64,
    phi: f64,
    x: f64,
    params: &NumericParams,
) -> f64 {
    let tilted = invert(
        |s| 1.0 / (model.laplace_exponent_complex(s + phi) - q),
        x,
        &params.inversion,
    );
    tilted * (phi * x).exp()
}

impl NumericScale {
    pub fn new(
        model: &LevyModel,
        q: f64,
        phi: f64,
        w_zero: f64,
        params: &NumericParams,
    ) -> Result<Self> {
        if params.x_max <= params.geo_to || params.uniform_step <= 0.0 || params.geo_points < 4 {
            return Err(Error::Config("invalid numeric grid parameters".into()));
        }
        let mut nodes = Vec::new();
        nodes.push(0.0);
        let ratio = (params.geo_to / params.geo_from).powf(1.0 / (params.geo_points - 1) as f64);
        let mut x = params.geo_from;
        for _ in 0..params.geo_points {
            nodes.push(x);
            x *= ratio;
        }
        let n_uniform = ((params.x_max - params.geo_to) / params.uniform_step).ceil() as usize;
        for i in 1..=n_uniform {
            nodes.push(params.geo_to + i as f64 * params.uniform_step);
        }

        let transform = |s: Complex64| 1.0 / (model.laplace_exponent_complex(s + phi) - q);
        let mut tilted = Vec::with_capacity(nodes.len());
        tilted.push(w_zero);
        for &x in &nodes[1..] {
            tilted.push(invert(transform, x, &params.inversion));
        }

        // Node derivatives of the tilted function by four-point Lagrange
        // differentiation (fourth-order central stencils where the grid is
        // uniform).
        let n = nodes.len();
        let mut tilted_deriv = vec![0.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(2).min(n - 5);
            let idx = [lo, lo + 1, lo + 2, lo + 3, lo + 4];
            tilted_deriv[i] = lagrange_derivative(&nodes, &tilted, &idx, nodes[i]);
        }

        Ok(NumericScale {
            phi,
            x_max: *nodes.last().unwrap(),
            nodes,
            tilted,
            tilted_deriv,
        })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if x > self.x_max {
            return Err(Error::RangeError(format!(
                "numeric backend extends to x = {}, requested {x}",
                self.x_max
            )));
        }
        Ok(())
    }

    fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let n = self.nodes.len();
        let seg = match self.nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return values[i],
            Err(i) => i,
        };
        if seg <= 1 {
            // Between the analytic anchor at zero and the first nodes the
            // grid is too distorted for a cubic; use the secant.
            let t = (x - self.nodes[0]) / (self.nodes[1] - self.nodes[0]);
            return values[0] + t * (values[1] - values[0]);
        }
        let lo = (seg - 2).min(n - 4);
        let idx = [lo, lo + 1, lo + 2, lo + 3];
        let mut acc = 0.0;
        for &i in &idx {
            let mut li = 1.0;
            for &j in &idx {
                if j != i {
                    li *= (x - self.nodes[j]) / (self.nodes[i] - self.nodes[j]);
                }
            }
            acc += li * values[i];
        }
        acc
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        Ok(self.interpolate(&self.tilted, x) * (self.phi * x).exp())
    }

    pub fn w_prime(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let t = self.interpolate(&self.tilted, x);
        let dt = self.interpolate(&self.tilted_deriv, x);
        Ok((self.phi * t + dt) * (self.phi * x).exp())
    }

    pub fn integral_w(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let f = |u: f64| self.interpolate(&self.tilted, u) * (self.phi * u).exp();
        // 1e-9 absolute, degrading to 1e-9 relative once the integrand
        // grows past O(1) and float noise caps the attainable precision.
        let tol = 1e-9 * (x * f(x)).abs().max(1.0);
        Ok(adaptive_simpson_split(&f, 0.0, x, &[self.nodes[1], 0.1], tol)?.value)
    }
}

/// Derivative at `at` of the Lagrange polynomial through the five stencil
/// points `idx`.
fn lagrange_derivative(xs: &[f64], ys: &[f64], idx: &[usize; 5], at: f64) -> f64 {
    let mut acc = 0.0;
    for &i in idx {
        let mut deriv_sum = 0.0;
        for &k in idx {
            if k == i {
                continue;
            }
            let mut prod = 1.0 / (xs[i] - xs[k]);
            for &j in idx {
                if j != i && j != k {
                    prod *= (at - xs[j]) / (xs[i] - xs[j]);
                }
            }
            deriv_sum += prod;
        }
        acc += deriv_sum * ys[i];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_derivative_is_exact_on_cubics() {
        let xs: Vec<f64> = (0..6).map(|i| 0.3 * i as f64).collect();
        let f = |x: f64| 2.0 * x * x * x - x * x + 4.0;
        let df = |x: f64| 6.0 * x * x - 2.0 * x;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for i in 0..5 {
            let idx = [0, 1, 2, 3, 4];
            let _ = i;
            let at = xs[2];
            let d = lagrange_derivative(&xs, &ys, &idx, at);
            assert!((d - df(at)).abs() < 1e-10);
        }
    }
}
