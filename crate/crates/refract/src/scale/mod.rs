//! Scale functions W, W', Z of a spectrally negative exponent and the exit
//! identities built from them.
//!
//! For every supported jump family the transform 1/(psi(theta) - q) is
//! rational (exponential, mixture, Erlang, or no jumps) or admits an exact
//! piecewise series (deterministic jump sizes), so the default backend
//! evaluates W in closed form. A numeric backend inverts the transform on a
//! Bromwich contour instead and is used to cross-check the closed forms.

mod numeric;
mod rational;

pub use numeric::NumericParams;

use crate::model::{JumpSpec, LevyModel, MagnitudeLaw, RefractedModel};
use crate::numerics::quad::adaptive_simpson_split;
use crate::{Error, Result};

/// Which evaluation strategy backs a [`ScaleFunctionSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    /// Exact partial fractions (or exact piecewise series for point-mass
    /// jumps).
    Rational,
    /// Bromwich-contour inversion of the transform on a cached grid.
    NumericInversion,
}

enum Backend {
    Rational(rational::RationalScale),
    PointMass(rational::PointMassScale),
    Numeric(numeric::NumericScale),
}

/// Evaluators for the q-scale functions of one exponent at one q.
pub struct ScaleFunctionSet {
    model: LevyModel,
    q: f64,
    kind: BackendKind,
    phi: f64,
    w_zero: f64,
    backend: Backend,
}

impl ScaleFunctionSet {
    pub fn new(model: &LevyModel, q: f64, kind: BackendKind) -> Result<Self> {
        Self::with_params(model, q, kind, &NumericParams::default())
    }

    pub fn with_params(
        model: &LevyModel,
        q: f64,
        kind: BackendKind,
        params: &NumericParams,
    ) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("scale functions require q >= 0, got {q}")));
        }
        let phi = model.inverse_exponent(q)?;
        let w_zero = if model.is_bv() { 1.0 / model.linear_drift() } else { 0.0 };
        let backend = match kind {
            BackendKind::Rational => match model.jumps() {
                JumpSpec::CompoundPoisson { rate, law: MagnitudeLaw::PointMass { size } } => {
                    let c = model
                        .bv_drift()
                        .ok_or_else(|| Error::UnsupportedBackend(
                            "point-mass jumps with a Gaussian part have no closed-form backend; \
                             use numeric inversion"
                                .into(),
                        ))?;
                    Backend::PointMass(rational::PointMassScale::new(c, *rate, q, *size))
                }
                _ => Backend::Rational(rational::RationalScale::new(model, q, phi)?),
            },
            BackendKind::NumericInversion => {
                Backend::Numeric(numeric::NumericScale::new(model, q, phi, w_zero, params)?)
            }
        };
        Ok(ScaleFunctionSet { model: model.clone(), q, kind, phi, w_zero, backend })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.kind
    }

    /// Phi(q) for this exponent.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Right limit W(0+): 1/c for bounded variation, 0 otherwise.
    pub fn w_zero_plus(&self) -> f64 {
        self.w_zero
    }

    /// Largest x the backend can evaluate (infinite for closed forms).
    pub fn x_max(&self) -> f64 {
        match &self.backend {
            Backend::Numeric(n) => n.x_max(),
            _ => f64::INFINITY,
        }
    }

    /// Locations where W' jumps (deterministic jump sizes only).
    pub fn derivative_kinks(&self) -> Vec<f64> {
        match &self.backend {
            Backend::PointMass(p) => p.kinks(),
            _ => Vec::new(),
        }
    }

    /// W^{(q)}(x); zero on the negative half line, right limit at 0.
    pub fn w(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Ok(self.w_zero);
        }
        match &self.backend {
            Backend::Rational(r) => Ok(r.w(x)),
            Backend::PointMass(p) => Ok(p.w(x)),
            Backend::Numeric(n) => n.w(x),
        }
    }

    /// Density/derivative W^{(q)}'(x) for x > 0. For deterministic jump
    /// sizes the one-sided right derivative is returned at the kink points
    /// listed by [`Self::derivative_kinks`].
    pub fn w_prime(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(Error::Domain(format!("w_prime requires x > 0, got {x}")));
        }
        match &self.backend {
            Backend::Rational(r) => Ok(r.w_prime(x)),
            Backend::PointMass(p) => Ok(p.w_prime(x)),
            Backend::Numeric(n) => n.w_prime(x),
        }
    }

    /// Z^{(q)}(x) = 1 + q int_0^x W^{(q)}; identically 1 for x <= 0 or q = 0.
    pub fn z(&self, x: f64) -> Result<f64> {
        if x <= 0.0 || self.q == 0.0 {
            return Ok(1.0);
        }
        match &self.backend {
            Backend::Rational(r) => Ok(1.0 + self.q * r.integral_w(x)),
            Backend::PointMass(p) => Ok(1.0 + self.q * p.integral_w(x)),
            Backend::Numeric(n) => Ok(1.0 + self.q * n.integral_w(x)?),
        }
    }

    /// Check that every argument in `[0, x]` is evaluable by this backend.
    pub fn ensure_range(&self, x: f64) -> Result<()> {
        if x > self.x_max() {
            return Err(Error::RangeError(format!(
                "scale function requested at x = {x} beyond backend extent {}",
                self.x_max()
            )));
        }
        Ok(())
    }

    /// E_x[e^{-q T_upper^+}; T_upper^+ < T_0^-] = W(x)/W(upper).
    pub fn two_sided_exit_up(&self, x: f64, upper: f64) -> Result<f64> {
        if !(0.0 <= x && x <= upper) {
            return Err(Error::Domain(format!(
                "two_sided_exit_up requires 0 <= x <= upper, got x = {x}, upper = {upper}"
            )));
        }
        if x == upper {
            return Ok(1.0);
        }
        Ok(self.w(x)? / self.w(upper)?)
    }

    /// E_x[e^{-q T_0^-}; T_0^- < T_upper^+] = Z(x) - Z(upper) W(x)/W(upper).
    pub fn two_sided_exit_down(&self, x: f64, upper: f64) -> Result<f64> {
        if !(0.0 <= x && x <= upper) {
            return Err(Error::Domain(format!(
                "two_sided_exit_down requires 0 <= x <= upper, got x = {x}, upper = {upper}"
            )));
        }
        if x == upper {
            return Ok(0.0);
        }
        Ok(self.z(x)? - self.z(upper)? * self.w(x)? / self.w(upper)?)
    }
}

/// Density of the position of Y at its first passage below the barrier,
/// restricted to paths whose running supremum stays below `cap`:
///
/// ```text
/// P(Y_{k0-} in dz, sup Y < cap) / dz
///     = [W(0+)/W(cap)] int_0^cap W(cap - y) pi(z - y) dy
/// ```
///
/// with `pi` the Levy density of the driver. A test oracle for the
/// simulator's overshoot statistics; requires a bounded-variation Y.
pub struct OvershootKernel {
    y_set: ScaleFunctionSet,
    cap: f64,
    rate: f64,
    law: MagnitudeLaw,
}

impl OvershootKernel {
    pub fn new(rmodel: &RefractedModel, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::Domain(format!("overshoot kernel requires cap > 0, got {cap}")));
        }
        let y = rmodel.y_model();
        if !y.is_bv() {
            return Err(Error::UnsupportedBackend(
                "overshoot kernel requires a bounded-variation refracted process".into(),
            ));
        }
        let law = match y.jumps() {
            JumpSpec::CompoundPoisson { law, .. } => law.clone(),
            JumpSpec::None => {
                return Err(Error::UnsupportedBackend(
                    "overshoot kernel requires a jump component".into(),
                ))
            }
        };
        let y_set = ScaleFunctionSet::new(y, 0.0, BackendKind::Rational)?;
        Ok(OvershootKernel { y_set, cap, rate: y.jumps().rate(), law })
    }

    /// Density in z < 0.
    pub fn density(&self, z: f64) -> Result<f64> {
        if z >= 0.0 {
            return Err(Error::Domain(format!("overshoot density defined for z < 0, got {z}")));
        }
        let w_cap = self.y_set.w(self.cap)?;
        let w0 = self.y_set.w_zero_plus();
        match &self.law {
            MagnitudeLaw::PointMass { size } => {
                let y = z + size;
                if y > 0.0 && y < self.cap {
                    Ok(self.rate * w0 * self.y_set.w(self.cap - y)? / w_cap)
                } else {
                    Ok(0.0)
                }
            }
            law => {
                let rate = self.rate;
                let set = &self.y_set;
                let mut splits: Vec<f64> =
                    set.derivative_kinks().iter().map(|k| self.cap - k).collect();
                splits.retain(|y| *y > 0.0 && *y < self.cap);
                let f = |y: f64| {
                    set.w(self.cap - y).unwrap_or(0.0)
                        * law.density(y - z).unwrap_or(0.0)
                };
                let r = adaptive_simpson_split(&f, 0.0, self.cap, &splits, 1e-11)?;
                Ok(rate * w0 * r.value / w_cap)
            }
        }
    }

    /// Mass of the kernel over the interval (z0, z1), z0 < z1 <= 0.
    pub fn mass(&self, z0: f64, z1: f64) -> Result<f64> {
        if !(z0 < z1 && z1 <= 0.0) {
            return Err(Error::Domain("overshoot mass requires z0 < z1 <= 0".into()));
        }
        let f = |z: f64| if z >= 0.0 { 0.0 } else { self.density(z).unwrap_or(0.0) };
        let mut splits = Vec::new();
        if let MagnitudeLaw::PointMass { size } = &self.law {
            splits.push(-size);
            splits.push(self.cap - size);
        }
        let r = adaptive_simpson_split(&f, z0, z1.min(-1e-12), &splits, 1e-9)?;
        Ok(r.value)
    }
}

/// One-shot evaluation of the overshoot density.
pub fn overshoot_density(rmodel: &RefractedModel, z: f64, cap: f64) -> Result<f64> {
    OvershootKernel::new(rmodel, cap)?.density(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    /// Closed forms used as independent cross-checks in this module's tests.
    /// BM1 at q = 2: roots of th^2 + th - 2 are 1 and -2.
    fn bm1_w2(x: f64) -> f64 {
        (x.exp() - (-2.0 * x).exp()) / 3.0
    }

    fn bm1_w2_prime(x: f64) -> f64 {
        (x.exp() + 2.0 * (-2.0 * x).exp()) / 3.0
    }

    fn bm1_z2(x: f64) -> f64 {
        (2.0 * x.exp() + (-2.0 * x).exp()) / 3.0
    }

    /// CL1 at q = 0: W(x) = 1 - e^{-x/2}/2.
    fn cl1_w0(x: f64) -> f64 {
        1.0 - 0.5 * (-0.5 * x).exp()
    }

    #[test]
    fn w_vanishes_on_negatives() {
        let set = ScaleFunctionSet::new(&fixtures::bm1(), 2.0, BackendKind::Rational).unwrap();
        assert_eq!(set.w(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn bm1_rational_closed_forms() {
        let set = ScaleFunctionSet::new(&fixtures::bm1(), 2.0, BackendKind::Rational).unwrap();
        for x in [0.25, 0.5, 1.0, 2.0, 5.0, 17.0, 30.0] {
            assert!(rel_close(set.w(x).unwrap(), bm1_w2(x), 1e-11), "w({x})");
            assert!(rel_close(set.w_prime(x).unwrap(), bm1_w2_prime(x), 1e-11), "w'({x})");
            assert!(rel_close(set.z(x).unwrap(), bm1_z2(x), 1e-11), "z({x})");
        }
        // Frozen values for the spec'd points.
        assert!((set.w(1.0).unwrap() - 0.8609821817408108).abs() < 1e-12);
        assert!((set.w_prime(1.0).unwrap() - 0.9963174649774235).abs() < 1e-12);
        assert!((set.z(1.0).unwrap() - 1.857299646718233).abs() < 1e-12);
        // Unbounded variation: W(0+) = 0.
        assert_eq!(set.w(0.0).unwrap(), 0.0);
    }

    #[test]
    fn cl1_zero_q_closed_form() {
        let set = ScaleFunctionSet::new(&fixtures::cl1(), 0.0, BackendKind::Rational).unwrap();
        assert!((set.w(0.0).unwrap() - 0.5).abs() < 1e-14);
        for x in [0.1, 1.0, 4.0, 20.0] {
            assert!(rel_close(set.w(x).unwrap(), cl1_w0(x), 1e-12), "w({x})");
        }
        // q = 0 makes Z identically one.
        assert_eq!(set.z(3.0).unwrap(), 1.0);
        assert_eq!(set.z(-3.0).unwrap(), 1.0);
    }

    #[test]
    fn refracted_y_scale_closed_forms() {
        // Y for CL1 with delta = 0.5: W(x) = 2 - (4/3) e^{-x/3}.
        let r = fixtures::cl1_refracted(0.5, 0.0);
        let set = ScaleFunctionSet::new(r.y_model(), 0.0, BackendKind::Rational).unwrap();
        for x in [0.0f64, 0.5, 2.0, 10.0, 30.0] {
            let expect = 2.0 - (4.0 / 3.0) * (-x / 3.0).exp();
            assert!(rel_close(set.w(x).unwrap(), expect, 1e-12), "W_Y({x})");
        }
        // Y for CL1 with delta = 1.5: W(x) = 4 e^{x} - 2.
        let r = fixtures::cl1_refracted(1.5, 0.0);
        let set = ScaleFunctionSet::new(r.y_model(), 0.0, BackendKind::Rational).unwrap();
        for x in [0.0f64, 1.0, 3.0] {
            let expect = 4.0 * x.exp() - 2.0;
            assert!(rel_close(set.w(x).unwrap(), expect, 1e-12), "W_Y({x})");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for (model, q) in [
            (fixtures::cl_mixed(), 0.7),
            (fixtures::cl_erlang(), 1.3),
            (fixtures::bm1(), 0.5),
        ] {
            let set = ScaleFunctionSet::new(&model, q, BackendKind::Rational).unwrap();
            for x in [0.4, 1.1, 3.0] {
                let h = 1e-5;
                let fd = (set.w(x + h).unwrap() - set.w(x - h).unwrap()) / (2.0 * h);
                assert!(
                    rel_close(set.w_prime(x).unwrap(), fd, 1e-7),
                    "{model:?} q={q} x={x}"
                );
            }
        }
    }

    #[test]
    fn ratio_limit_reaches_phi() {
        let set = ScaleFunctionSet::new(&fixtures::bm1(), 2.0, BackendKind::Rational).unwrap();
        let ratio = set.w_prime(30.0).unwrap() / set.w(30.0).unwrap();
        assert!((ratio - set.phi()).abs() < 1e-6, "ratio {ratio} vs {}", set.phi());
    }

    #[test]
    fn exit_identities() {
        let set = ScaleFunctionSet::new(&fixtures::bm1(), 2.0, BackendKind::Rational).unwrap();
        assert_eq!(set.two_sided_exit_up(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(set.two_sided_exit_up(0.0, 1.0).unwrap(), 0.0);
        let up = set.two_sided_exit_up(0.5, 1.0).unwrap();
        assert!(rel_close(up, bm1_w2(0.5) / bm1_w2(1.0), 1e-12));
        assert!((up - 0.49588398640994147).abs() < 1e-9);
        assert_eq!(set.two_sided_exit_down(1.0, 1.0).unwrap(), 0.0);
        // ODE route for the down exit: u(x) = A e^{x} + B e^{-2x} with
        // u(0) = 1, u(1) = 0 solves (sigma^2/2) u'' + gamma u' = q u.
        let e1 = 1.0f64.exp();
        let em2 = (-2.0f64).exp();
        let b = e1 / (e1 - em2);
        let a = 1.0 - b;
        let x = 0.5f64;
        let ode = a * x.exp() + b * (-2.0 * x).exp();
        let down = set.two_sided_exit_down(0.5, 1.0).unwrap();
        assert!(rel_close(down, ode, 1e-11), "{down} vs {ode}");
        assert!(set.two_sided_exit_up(-0.1, 1.0).is_err());
        assert!(set.two_sided_exit_down(1.5, 1.0).is_err());
    }

    #[test]
    fn exit_down_at_q_zero_is_complement() {
        let set = ScaleFunctionSet::new(&fixtures::cl1(), 0.0, BackendKind::Rational).unwrap();
        let x = 0.7;
        let upper = 2.0;
        let down = set.two_sided_exit_down(x, upper).unwrap();
        let up = set.two_sided_exit_up(x, upper).unwrap();
        assert!((down - (1.0 - up)).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_on_grids() {
        for (model, q) in [
            (fixtures::cl1(), 0.5),
            (fixtures::cl_mixed(), 0.0),
            (fixtures::bm1(), 2.0),
            (fixtures::cl_erlang(), 2.0),
        ] {
            let set = ScaleFunctionSet::new(&model, q, BackendKind::Rational).unwrap();
            let mut prev_w = 0.0;
            let mut prev_z = 1.0;
            let mut prev_ratio = f64::INFINITY;
            for i in 1..=300 {
                let x = i as f64 * 0.1;
                let w = set.w(x).unwrap();
                let z = set.z(x).unwrap();
                assert!(w > 0.0, "positivity at {x}");
                assert!(w >= prev_w - 1e-12 * w.abs(), "W monotone at {x}");
                assert!(z >= prev_z - 1e-12 * z.abs(), "Z monotone at {x}");
                assert!(z >= 1.0);
                let ratio = set.w_prime(x).unwrap() / w;
                assert!(
                    ratio <= prev_ratio + 1e-9 * ratio.abs().max(1.0),
                    "W'/W nonincreasing at {x}: {ratio} vs {prev_ratio}"
                );
                prev_w = w;
                prev_z = z;
                prev_ratio = ratio;
            }
        }
    }

    #[test]
    fn laplace_transform_identity_samples() {
        // Fuller sweep lives in the acceptance suite; spot-check here.
        for (model, q) in [(fixtures::cl1(), 0.5), (fixtures::bm1(), 2.0)] {
            let set = ScaleFunctionSet::new(&model, q, BackendKind::Rational).unwrap();
            let phi = set.phi();
            for shift in [0.5, 2.0] {
                let theta = phi + shift;
                let f = |x: f64| (-theta * x).exp() * set.w(x).unwrap();
                let body = adaptive_simpson_split(&f, 0.0, 40.0, &[], 1e-12).unwrap().value;
                let tail = ((phi - theta) * 40.0).exp()
                    / (model.laplace_exponent_deriv(phi) * (theta - phi));
                let target = 1.0 / (model.laplace_exponent(theta) - q);
                assert!(
                    rel_close(body + tail, target, 1e-7),
                    "{model:?} q={q} theta={theta}: {} vs {target}",
                    body + tail
                );
            }
        }
    }

    #[test]
    fn asymptotic_ratios_of_refracted_scale() {
        // W(z - x)/W(z) -> e^{-phi(0) x} and W(z) -> 1/(psi'(0+) - delta).
        let r = fixtures::cl1_refracted(0.5, 0.0);
        let set = ScaleFunctionSet::new(r.y_model(), 0.0, BackendKind::Rational).unwrap();
        let z = 30.0;
        let phi0 = r.inverse_exponent_y(0.0).unwrap();
        for x in [0.5, 2.0, 4.0] {
            let ratio = set.w(z - x).unwrap() / set.w(z).unwrap();
            assert!((ratio - (-phi0 * x).exp()).abs() < 1e-4, "ratio at {x}");
        }
        let winf = 1.0 / (r.x_model().mean_drift() - r.delta());
        assert!((set.w(z).unwrap() - winf).abs() < 1e-4);

        let r = fixtures::cl1_refracted(1.5, 0.0);
        let set = ScaleFunctionSet::new(r.y_model(), 0.0, BackendKind::Rational).unwrap();
        let phi0 = r.inverse_exponent_y(0.0).unwrap();
        assert!((phi0 - 1.0).abs() < 1e-10);
        for x in [0.5, 2.0, 4.0] {
            let ratio = set.w(z - x).unwrap() / set.w(z).unwrap();
            assert!((ratio - (-phi0 * x).exp()).abs() < 1e-4, "ratio at {x}");
        }
    }

    #[test]
    fn point_mass_series_basics() {
        let set = ScaleFunctionSet::new(&fixtures::cl_pointmass(), 0.0, BackendKind::Rational)
            .unwrap();
        // W(0+) = 1/c.
        assert!((set.w(0.0).unwrap() - 0.5).abs() < 1e-14);
        // Below the first kink the series has a single term.
        let x = 0.6f64;
        let expect = 0.5 * (0.5 * x).exp();
        assert!(rel_close(set.w(x).unwrap(), expect, 1e-13));
        // Kinks at the deterministic jump size.
        let kinks = set.derivative_kinks();
        assert!(kinks.contains(&1.0) && kinks.contains(&2.0));
        // Right derivative at the kink agrees with a forward difference.
        let h = 1e-6;
        let fd = (set.w(1.0 + h).unwrap() - set.w(1.0).unwrap()) / h;
        assert!((set.w_prime(1.0).unwrap() - fd).abs() < 1e-4);
        // W stays nondecreasing across kinks.
        let mut prev = 0.0;
        for i in 0..200 {
            let x = i as f64 * 0.05;
            let w = set.w(x).unwrap();
            assert!(w >= prev - 1e-12);
            prev = w;
        }
    }

    #[test]
    fn numeric_backend_agrees_with_rational() {
        let params = NumericParams { x_max: 21.0, ..NumericParams::default() };
        for (model, q) in [
            (fixtures::bm1(), 2.0),
            (fixtures::bm1(), 0.5),
            (fixtures::cl1(), 0.0),
            (fixtures::cl1(), 2.0),
            (fixtures::cl_mixed(), 0.5),
            (fixtures::cl_erlang(), 0.5),
        ] {
            let rat = ScaleFunctionSet::new(&model, q, BackendKind::Rational).unwrap();
            let num =
                ScaleFunctionSet::with_params(&model, q, BackendKind::NumericInversion, &params)
                    .unwrap();
            for x in [0.01, 0.1, 0.7, 1.5, 4.0, 9.0, 20.0] {
                let a = rat.w(x).unwrap();
                let b = num.w(x).unwrap();
                assert!(rel_close(b, a, 1e-6), "{model:?} q={q} w({x}): {b} vs {a}");
                if x >= 0.1 {
                    let ap = rat.w_prime(x).unwrap();
                    let bp = num.w_prime(x).unwrap();
                    assert!(
                        (ap - bp).abs() <= 1e-6 * ap.abs().max(1.0),
                        "{model:?} q={q} w'({x}): {bp} vs {ap}"
                    );
                    let az = rat.z(x).unwrap();
                    let bz = num.z(x).unwrap();
                    assert!(rel_close(bz, az, 1e-6), "{model:?} q={q} z({x}): {bz} vs {az}");
                }
            }
            assert!(num.w(22.0).is_err(), "extent error expected");
        }
    }

    #[test]
    fn numeric_direct_inversion_accuracy() {
        // The raw inversion (no grid interpolation) should carry ~1e-8
        // relative accuracy against the closed form.
        let model = fixtures::bm1();
        let q = 2.0;
        let phi = model.inverse_exponent(q).unwrap();
        for x in [0.5, 1.0, 5.0, 10.0] {
            let val = numeric::invert_scale_transform_at(&model, q, phi, x, &NumericParams::default());
            assert!(
                rel_close(val, bm1_w2(x), 1e-8),
                "direct inversion at {x}: {val} vs {}",
                bm1_w2(x)
            );
        }
    }

    #[test]
    fn overshoot_kernel_point_mass_support() {
        let r = RefractedModel::new(fixtures::cl_pointmass(), 0.5, 0.0).unwrap();
        let k = OvershootKernel::new(&r, 2.0).unwrap();
        // Supported on (-s, 0) = (-1, 0).
        assert!(k.density(-0.5).unwrap() > 0.0);
        assert_eq!(k.density(-1.2).unwrap(), 0.0);
        assert!(k.density(0.5).is_err());
    }

    #[test]
    fn overshoot_kernel_total_mass_matches_ruin_probability() {
        // cap -> infinity: total mass is P(kappa_0^- < infty)
        //                = 1 - (psi'(0+) - delta) W_Y(0+).
        let r = fixtures::cl1_refracted(0.5, 0.0);
        let k = OvershootKernel::new(&r, 60.0).unwrap();
        let mass = k.mass(-60.0, 0.0).unwrap();
        let w0 = 1.0 / (r.x_model().bv_drift().unwrap() - r.delta());
        let expect = 1.0 - (r.x_model().mean_drift() - r.delta()) * w0;
        assert!((mass - expect).abs() < 1e-6, "{mass} vs {expect}");
    }

    #[test]
    fn overshoot_kernel_matches_quadrature_oracle() {
        // Brute-force trapezoid of the defining integral with the hand
        // closed form W_Y(x) = 2 - (4/3) e^{-x/3}, CL1 with delta = 0.5.
        let r = fixtures::cl1_refracted(0.5, 0.0);
        let k = OvershootKernel::new(&r, 2.0).unwrap();
        let z = -0.5;
        let cap = 2.0;
        let wy = |x: f64| 2.0 - (4.0 / 3.0) * (-x / 3.0).exp();
        let n = 2_000_000usize;
        let h = cap / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let y = i as f64 * h;
            let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += weight * wy(cap - y) * (-(y - z)).exp() * h;
        }
        let oracle = (2.0f64 / 3.0) * acc / wy(cap);
        let val = k.density(z).unwrap();
        assert!((val - oracle).abs() < 1e-6, "{val} vs {oracle}");
    }

    #[test]
    fn overshoot_kernel_rejects_unbounded_variation() {
        let r = fixtures::bm1_refracted(0.5, 0.0);
        let err = match OvershootKernel::new(&r, 2.0) {
            Err(e) => e,
            Ok(_) => panic!("expected unsupported-backend error"),
        };
        assert!(matches!(err, Error::UnsupportedBackend(_)));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn scale_invariants_hold(q in 0.0f64..3.0, step in 0.05f64..0.5) {
                let set = ScaleFunctionSet::new(&fixtures::cl_mixed(), q, BackendKind::Rational)
                    .unwrap();
                let mut prev_w = 0.0;
                let mut prev_z = 1.0;
                for i in 1..60 {
                    let x = i as f64 * step;
                    let w = set.w(x).unwrap();
                    let z = set.z(x).unwrap();
                    prop_assert!(w > 0.0 && w >= prev_w - 1e-11 * w);
                    prop_assert!(z >= 1.0 && z >= prev_z - 1e-11 * z);
                    prop_assert!(set.w(-x).unwrap() == 0.0);
                    prev_w = w;
                    prev_z = z;
                }
            }

            #[test]
            fn exits_stay_in_unit_interval(x in 0.0f64..2.0, extra in 0.01f64..3.0, q in 0.0f64..2.0) {
                let set = ScaleFunctionSet::new(&fixtures::cl1(), q, BackendKind::Rational).unwrap();
                let upper = x + extra;
                let up = set.two_sided_exit_up(x, upper).unwrap();
                let down = set.two_sided_exit_down(x, upper).unwrap();
                prop_assert!((0.0..=1.0).contains(&up));
                prop_assert!((-1e-12..=1.0).contains(&down));
            }
        }
    }
}
