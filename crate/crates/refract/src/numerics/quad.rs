//! Adaptive Simpson quadrature with explicit split points.

use crate::{Error, Result};

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Accumulated local error estimate (absolute).
    pub error: f64,
    pub evals: usize,
}

struct Panel {
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, fa: f64, fm: f64, fb: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

const MAX_DEPTH: u32 = 48;
const MAX_PANELS: usize = 4_000_000;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evals: 0 });
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, fa, fm, fb, b);
    let mut stack = vec![Panel { a, fa, m, fm, b, fb, whole, tol, depth: 0 }];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evals = 3usize;
    let mut processed = 0usize;
    let mut worst = 0.0f64;
    while let Some(p) = stack.pop() {
        processed += 1;
        if processed > MAX_PANELS {
            return Err(Error::Accuracy { requested: tol, achieved: error + worst });
        }
        let ml = 0.5 * (p.a + p.m);
        let mr = 0.5 * (p.m + p.b);
        let (fml, fmr) = (f(ml), f(mr));
        evals += 2;
        let left = simpson(p.a, p.fa, fml, p.fm, p.m);
        let right = simpson(p.m, p.fm, fmr, p.fb, p.b);
        let diff = left + right - p.whole;
        if diff.abs() <= 15.0 * p.tol || p.depth >= MAX_DEPTH {
            value += left + right + diff / 15.0;
            let local = diff.abs() / 15.0;
            error += local;
            if p.depth >= MAX_DEPTH {
                worst = worst.max(local);
            }
        } else {
            let half = 0.5 * p.tol;
            stack.push(Panel {
                a: p.a,
                fa: p.fa,
                m: ml,
                fm: fml,
                b: p.m,
                fb: p.fm,
                whole: left,
                tol: half,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: p.m,
                fa: p.fm,
                m: mr,
                fm: fmr,
                b: p.b,
                fb: p.fb,
                whole: right,
                tol: half,
                depth: p.depth + 1,
            });
        }
    }
    if error > tol.max(1e-300) * 16.0 {
        return Err(Error::Accuracy { requested: tol, achieved: error });
    }
    Ok(QuadResult { value, error, evals })
}

/// Integrate over `[a, b]` splitting first at the interior points in
/// `splits` (unsorted, possibly outside the interval; both are handled).
/// Useful when the integrand has known kinks or jumps.
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    splits: &[f64],
    tol: f64,
) -> Result<QuadResult> {
    if b <= a {
        return Ok(QuadResult { value: 0.0, error: 0.0, evals: 0 });
    }
    let mut pts: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|x| *x > a + 1e-14 * (b - a) && *x < b - 1e-14 * (b - a))
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (b - a));
    let n = pts.len() - 1;
    let mut total = QuadResult { value: 0.0, error: 0.0, evals: 0 };
    for w in pts.windows(2) {
        let share = tol * (w[1] - w[0]) / (b - a);
        let r = adaptive_simpson(f, w[0], w[1], share.max(tol / (4.0 * n as f64)))?;
        total.value += r.value;
        total.error += r.error;
        total.evals += r.evals;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = adaptive_simpson(&|x| x * x * x - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = adaptive_simpson(&|x: f64| (10.0 * x).sin(), 0.0, 3.0, 1e-11).unwrap();
        let exact = (1.0 - (30.0f64).cos()) / 10.0;
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn split_handles_jump_discontinuity() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { (x - 1.0).exp() };
        let r = adaptive_simpson_split(&f, 0.0, 2.0, &[1.0], 1e-11).unwrap();
        let exact = 1.0 + (1.0f64.exp() - 1.0);
        assert!((r.value - exact).abs() < 1e-10, "got {}", r.value);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = adaptive_simpson(&|x: f64| x, 2.0, 2.0, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
