//! Polynomial root finding via Durand-Kerner iteration with Newton polish,
//! plus the small polynomial algebra the scale engine needs.

use num_complex::Complex64;

use crate::{Error, Result};

/// Coefficients are stored low-to-high: `p[k]` multiplies `x^k`.
pub fn poly_eval(coeffs: &[f64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub fn poly_deriv(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

pub fn poly_scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|c| c * s).collect()
}

fn trim(coeffs: &[f64]) -> &[f64] {
    let mut n = coeffs.len();
    while n > 1 && coeffs[n - 1] == 0.0 {
        n -= 1;
    }
    &coeffs[..n]
}

/// All complex roots of the real polynomial, leading coefficient nonzero
/// after trimming. Degree zero yields an empty list.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let coeffs = trim(coeffs);
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    if lead == 0.0 || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::RootFind("degenerate polynomial".into()));
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    // Cauchy bound for the root radius.
    let radius = 1.0
        + monic[..degree]
            .iter()
            .map(|c| c.abs())
            .fold(0.0f64, f64::max);

    // Durand-Kerner from spread starting points.
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| radius * seed.powu(k as u32 + 1) / seed.norm().powi(k as i32 + 1) * 0.9)
        .collect();
    for iter in 0..600 {
        let mut max_step = 0.0f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() < 1e-280 {
                // Perturb coincident iterates.
                z[i] += Complex64::new(1e-6 * radius, 1e-6 * radius * (i as f64 + 1.0));
                max_step = f64::MAX;
                continue;
            }
            let step = poly_eval(&monic, z[i]) / denom;
            z[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= 1e-14 * radius.max(1.0) {
            break;
        }
        if iter == 599 && max_step > 1e-8 * radius.max(1.0) {
            return Err(Error::RootFind(format!(
                "Durand-Kerner stalled with step {max_step:e}"
            )));
        }
    }

    // Newton polish (skipped automatically near multiple roots where the
    // derivative collapses; the cluster handling downstream covers those).
    let dcoeffs = poly_deriv(&monic);
    for zi in z.iter_mut() {
        for _ in 0..4 {
            let p = poly_eval(&monic, *zi);
            let d = poly_eval(&dcoeffs, *zi);
            if d.norm() < 1e-10 {
                break;
            }
            let step = p / d;
            if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 0.5 * radius {
                break;
            }
            *zi -= step;
        }
        // Snap near-real roots onto the axis.
        if zi.im.abs() <= 1e-10 * zi.re.abs().max(1.0) {
            zi.im = 0.0;
        }
    }
    z.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(z)
}
