//! Parametric spectrally negative Levy models and the refracted pair (X, Y).
//!
//! The driving process is specified by the triplet (gamma, sigma2, jumps)
//! of the Levy-Khintchine exponent
//!
//! ```text
//! psi(theta) = gamma*theta + sigma2*theta^2/2
//!              + lambda * E[exp(-theta M) - 1 + theta M 1{M < 1}]
//! ```
//!
//! where jumps of the process are the negatives of magnitudes `M` drawn from
//! a parametric law with closed-form exponential moments. Everything needed
//! downstream (exponent values, derivatives, right inverses, partial
//! moments) is evaluated in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Relative tolerance for the right-inverse root solve.
const INVERSE_RTOL: f64 = 1e-12;

/// Law of the (positive) jump magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MagnitudeLaw {
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Finite mixture of exponentials; weights must sum to one.
    MixedExponential { weights: Vec<f64>, means: Vec<f64> },
    /// Erlang with integer shape and the given mean (rate = shape / mean).
    Erlang { shape: u32, mean: f64 },
    /// Deterministic magnitude.
    PointMass { size: f64 },
}

impl MagnitudeLaw {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(msg.to_string()));
        match self {
            MagnitudeLaw::Exponential { mean } => {
                if !(*mean > 0.0 && mean.is_finite()) {
                    return bad("exponential magnitude mean must be positive and finite");
                }
            }
            MagnitudeLaw::MixedExponential { weights, means } => {
                if weights.is_empty() || weights.len() != means.len() {
                    return bad("mixed-exponential weights and means must be non-empty and equal length");
                }
                if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return bad("mixed-exponential weights must be positive");
                }
                if means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                    return bad("mixed-exponential means must be positive");
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return bad("mixed-exponential weights must sum to 1 within 1e-12");
                }
            }
            MagnitudeLaw::Erlang { shape, mean } => {
                if *shape == 0 {
                    return bad("erlang shape must be at least 1");
                }
                if !(*mean > 0.0 && mean.is_finite()) {
                    return bad("erlang mean must be positive and finite");
                }
            }
            MagnitudeLaw::PointMass { size } => {
                if !(*size > 0.0 && size.is_finite()) {
                    return bad("point-mass size must be positive and finite");
                }
            }
        }
        Ok(())
    }

    /// E[M].
    pub fn mean(&self) -> f64 {
        match self {
            MagnitudeLaw::Exponential { mean } => *mean,
            MagnitudeLaw::MixedExponential { weights, means } => {
                weights.iter().zip(means).map(|(w, m)| w * m).sum()
            }
            MagnitudeLaw::Erlang { mean, .. } => *mean,
            MagnitudeLaw::PointMass { size } => *size,
        }
    }

    /// Laplace transform E[exp(-theta M)] for theta >= 0 (real arguments).
    pub fn laplace(&self, theta: f64) -> f64 {
        match self {
            MagnitudeLaw::Exponential { mean } => 1.0 / (1.0 + theta * mean),
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| w / (1.0 + theta * m))
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                (1.0 + theta * mean / f64::from(*shape)).powi(-(*shape as i32))
            }
            MagnitudeLaw::PointMass { size } => (-theta * size).exp(),
        }
    }

    /// Analytic continuation of the Laplace transform to complex arguments.
    pub fn laplace_complex(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self {
            MagnitudeLaw::Exponential { mean } => one / (one + s * *mean),
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| *w * one / (one + s * *m))
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                (one + s * (*mean / f64::from(*shape))).powi(-(*shape as i32))
            }
            MagnitudeLaw::PointMass { size } => (-s * *size).exp(),
        }
    }

    /// E[M exp(-theta M)] = -d/dtheta of the Laplace transform.
    pub fn damped_mean(&self, theta: f64) -> f64 {
        match self {
            MagnitudeLaw::Exponential { mean } => {
                let d = 1.0 + theta * mean;
                mean / (d * d)
            }
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| {
                    let d = 1.0 + theta * m;
                    w * m / (d * d)
                })
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                mean * (1.0 + theta * mean / f64::from(*shape)).powi(-(*shape as i32) - 1)
            }
            MagnitudeLaw::PointMass { size } => size * (-theta * size).exp(),
        }
    }

    /// Complex version of [`Self::damped_mean`].
    pub fn damped_mean_complex(&self, s: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match self {
            MagnitudeLaw::Exponential { mean } => {
                let d = one + s * *mean;
                *mean * one / (d * d)
            }
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| {
                    let d = one + s * *m;
                    (*w * *m) * one / (d * d)
                })
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                *mean * (one + s * (*mean / f64::from(*shape))).powi(-(*shape as i32) - 1)
            }
            MagnitudeLaw::PointMass { size } => *size * (-s * *size).exp(),
        }
    }

    /// Compensation moment E[M 1{M < 1}] appearing in the exponent.
    pub fn partial_mean_below_one(&self) -> f64 {
        fn exp_part(mean: f64) -> f64 {
            // int_0^1 x (1/m) e^{-x/m} dx = m (1 - e^{-1/m}) - e^{-1/m}
            let e = (-1.0 / mean).exp();
            mean * (1.0 - e) - e
        }
        match self {
            MagnitudeLaw::Exponential { mean } => exp_part(*mean),
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| w * exp_part(*m))
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                let rate = f64::from(*shape) / mean;
                mean * lower_gamma_regularized(*shape + 1, rate)
            }
            MagnitudeLaw::PointMass { size } => {
                if *size < 1.0 {
                    *size
                } else {
                    0.0
                }
            }
        }
    }

    /// Survival function P(M > y).
    pub fn tail(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match self {
            MagnitudeLaw::Exponential { mean } => (-y / mean).exp(),
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| w * (-y / m).exp())
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                let rate = f64::from(*shape) / mean;
                upper_gamma_regularized(*shape, rate * y)
            }
            MagnitudeLaw::PointMass { size } => {
                if y < *size {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Partial mean E[M 1{M > y}].
    pub fn partial_mean_above(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.mean();
        }
        match self {
            MagnitudeLaw::Exponential { mean } => (y + mean) * (-y / mean).exp(),
            MagnitudeLaw::MixedExponential { weights, means } => weights
                .iter()
                .zip(means)
                .map(|(w, m)| w * (y + m) * (-y / m).exp())
                .sum(),
            MagnitudeLaw::Erlang { shape, mean } => {
                let rate = f64::from(*shape) / mean;
                mean * upper_gamma_regularized(*shape + 1, rate * y)
            }
            MagnitudeLaw::PointMass { size } => {
                if y < *size {
                    *size
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability density of M, when absolutely continuous.
    pub fn density(&self, m: f64) -> Option<f64> {
        if m <= 0.0 {
            return match self {
                MagnitudeLaw::PointMass { .. } => None,
                _ => Some(0.0),
            };
        }
        match self {
            MagnitudeLaw::Exponential { mean } => Some((-m / mean).exp() / mean),
            MagnitudeLaw::MixedExponential { weights, means } => Some(
                weights
                    .iter()
                    .zip(means)
                    .map(|(w, mm)| w / mm * (-m / mm).exp())
                    .sum(),
            ),
            MagnitudeLaw::Erlang { shape, mean } => {
                let k = f64::from(*shape);
                let rate = k / mean;
                let mut log_fact = 0.0;
                for j in 2..*shape {
                    log_fact += (f64::from(j)).ln();
                }
                Some(((k * rate.ln()) + (k - 1.0) * m.ln() - rate * m - log_fact).exp())
            }
            MagnitudeLaw::PointMass { .. } => None,
        }
    }

    /// Smallest cutoff `m` with tail(m) <= eps and E[M 1{M>m}] <= eps.
    pub fn tail_cutoff(&self, eps: f64) -> f64 {
        let mut m = self.mean().max(1.0);
        for _ in 0..200 {
            if self.tail(m) <= eps && self.partial_mean_above(m) <= eps {
                return m;
            }
            m *= 1.5;
        }
        m
    }
}

/// Regularized lower incomplete gamma P(n, x) for integer shape n.
fn lower_gamma_regularized(n: u32, x: f64) -> f64 {
    1.0 - upper_gamma_regularized(n, x)
}

/// Regularized upper incomplete gamma Q(n, x) = e^{-x} sum_{j<n} x^j / j!.
fn upper_gamma_regularized(n: u32, x: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for j in 1..n {
        term *= x / f64::from(j);
        sum += term;
    }
    (sum.ln() - x).exp().min(1.0)
}

/// Jump component of the model.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpSpec {
    /// No jumps.
    None,
    /// Compound Poisson with the given arrival rate and magnitude law.
    CompoundPoisson { rate: f64, law: MagnitudeLaw },
}

impl JumpSpec {
    fn validate(&self) -> Result<()> {
        match self {
            JumpSpec::None => Ok(()),
            JumpSpec::CompoundPoisson { rate, law } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidModel(
                        "compound-poisson rate must be positive and finite".into(),
                    ));
                }
                law.validate()
            }
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            JumpSpec::None => 0.0,
            JumpSpec::CompoundPoisson { rate, .. } => *rate,
        }
    }

    pub fn law(&self) -> Option<&MagnitudeLaw> {
        match self {
            JumpSpec::None => None,
            JumpSpec::CompoundPoisson { law, .. } => Some(law),
        }
    }
}

/// A spectrally negative Levy process in Levy-Khintchine form.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    gamma: f64,
    sigma2: f64,
    jumps: JumpSpec,
    /// Cached E[M 1{M<1}] scaled by the jump rate.
    compensation: f64,
}

impl LevyModel {
    pub fn new(gamma: f64, sigma2: f64, jumps: JumpSpec) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidModel("gamma must be finite".into()));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidModel("sigma2 must be non-negative and finite".into()));
        }
        jumps.validate()?;
        let compensation = match &jumps {
            JumpSpec::None => 0.0,
            JumpSpec::CompoundPoisson { rate, law } => rate * law.partial_mean_below_one(),
        };
        let model = LevyModel { gamma, sigma2, jumps, compensation };
        if model.is_bv() && model.linear_drift() <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "bounded-variation drift c = {} must be positive (process must not be a \
                 downward subordinator)",
                model.linear_drift()
            )));
        }
        Ok(model)
    }

    /// Build a bounded-variation model from its natural parametrisation
    /// X_t = c t - S_t, i.e. from the drift c rather than gamma.
    pub fn from_bv_drift(c: f64, jumps: JumpSpec) -> Result<Self> {
        jumps.validate()?;
        let compensation = match &jumps {
            JumpSpec::None => 0.0,
            JumpSpec::CompoundPoisson { rate, law } => rate * law.partial_mean_below_one(),
        };
        Self::new(c - compensation, 0.0, jumps)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn jumps(&self) -> &JumpSpec {
        &self.jumps
    }

    /// Bounded variation iff there is no Gaussian part (jumps are always
    /// finite-activity here).
    pub fn is_bv(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// Coefficient of the linear drift term when the compound Poisson part is
    /// left uncompensated: gamma + lambda E[M 1{M<1}]. Equals the drift `c`
    /// of the decomposition X_t = c t - S_t for bounded variation models.
    pub fn linear_drift(&self) -> f64 {
        self.gamma + self.compensation
    }

    /// The drift c > 0 of X_t = c t - S_t; only defined for BV models.
    pub fn bv_drift(&self) -> Option<f64> {
        if self.is_bv() {
            Some(self.linear_drift())
        } else {
            None
        }
    }

    /// Laplace exponent psi(theta) for theta >= 0.
    pub fn laplace_exponent(&self, theta: f64) -> f64 {
        let mut v = self.gamma * theta + 0.5 * self.sigma2 * theta * theta;
        if let JumpSpec::CompoundPoisson { rate, law } = &self.jumps {
            v += rate * (law.laplace(theta) - 1.0) + self.compensation * theta;
        }
        v
    }

    /// Analytic continuation of the exponent to complex arguments.
    pub fn laplace_exponent_complex(&self, s: Complex64) -> Complex64 {
        let mut v = self.gamma * s + 0.5 * self.sigma2 * s * s;
        if let JumpSpec::CompoundPoisson { rate, law } = &self.jumps {
            v += *rate * (law.laplace_complex(s) - 1.0) + self.compensation * s;
        }
        v
    }

    /// First derivative psi'(theta).
    pub fn laplace_exponent_deriv(&self, theta: f64) -> f64 {
        let mut v = self.gamma + self.sigma2 * theta;
        if let JumpSpec::CompoundPoisson { rate, law } = &self.jumps {
            v += rate * (law.partial_mean_below_one() - law.damped_mean(theta));
        }
        v
    }

    /// Complex derivative of the exponent.
    pub fn laplace_exponent_deriv_complex(&self, s: Complex64) -> Complex64 {
        let mut v = Complex64::new(self.gamma, 0.0) + self.sigma2 * s;
        if let JumpSpec::CompoundPoisson { rate, law } = &self.jumps {
            v += *rate * (law.partial_mean_below_one() - law.damped_mean_complex(s));
        }
        v
    }

    /// psi'(0+) = E[X_1], the mean drift of the process.
    pub fn mean_drift(&self) -> f64 {
        let mut v = self.gamma;
        if let JumpSpec::CompoundPoisson { rate, law } = &self.jumps {
            v += rate * (law.partial_mean_below_one() - law.mean());
        }
        v
    }

    /// Right inverse Phi(q) = sup{ lambda >= 0 : psi(lambda) = q } of the
    /// strictly convex exponent, solved by bracketing plus safeguarded
    /// Newton iteration.
    pub fn inverse_exponent(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("inverse exponent requires q >= 0, got {q}")));
        }
        let drift = self.mean_drift();
        if q == 0.0 && drift >= 0.0 {
            return Ok(0.0);
        }
        // Left end of the bracket: at or right of the exponent's minimiser.
        let mut lo = if drift >= 0.0 {
            0.0
        } else {
            let mut hi = 1.0;
            while self.laplace_exponent_deriv(hi) <= 0.0 {
                hi *= 2.0;
                if hi > 1e308 {
                    return Err(Error::RootFind("exponent derivative never positive".into()));
                }
            }
            let mut a = 0.0;
            let mut b = hi;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if self.laplace_exponent_deriv(mid) <= 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            a
        };
        let mut hi = (2.0 * lo).max(1.0);
        while self.laplace_exponent(hi) <= q {
            hi *= 2.0;
            if hi > 1e308 {
                return Err(Error::RootFind("failed to bracket inverse exponent".into()));
            }
        }
        let tol = INVERSE_RTOL * q.max(1.0);
        let mut x = hi;
        for _ in 0..200 {
            let fx = self.laplace_exponent(x) - q;
            if fx.abs() <= tol {
                return Ok(x);
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let dfx = self.laplace_exponent_deriv(x);
            let newton = x - fx / dfx;
            x = if dfx > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let achieved = (self.laplace_exponent(x) - q).abs();
        if achieved <= 1e-9 * q.max(1.0) {
            // Bisection stalled just short of the strict tolerance.
            return Ok(x);
        }
        Err(Error::RootFind(format!(
            "inverse exponent did not converge: residual {achieved:e} at q = {q}"
        )))
    }

    /// Analytic continuation of the right inverse, solved by Newton from a
    /// caller-provided seed (used when the inversion contour walks through
    /// complex arguments).
    pub fn inverse_exponent_complex(&self, s: Complex64, seed: Complex64) -> Result<Complex64> {
        let mut x = seed;
        for _ in 0..100 {
            let f = self.laplace_exponent_complex(x) - s;
            if f.norm() <= 1e-13 * s.norm().max(1.0) {
                return Ok(x);
            }
            let d = self.laplace_exponent_deriv_complex(x);
            if d.norm() < 1e-300 {
                break;
            }
            x -= f / d;
        }
        let f = self.laplace_exponent_complex(x) - s;
        if f.norm() <= 1e-8 * s.norm().max(1.0) {
            return Ok(x);
        }
        Err(Error::RootFind(format!(
            "complex inverse exponent did not converge at s = {s}"
        )))
    }
}

/// The refracted pair: driver X, barrier b and refraction rate delta. Owns
/// the derived process Y with exponent psi(theta) - delta*theta.
#[derive(Debug, Clone, PartialEq)]
pub struct RefractedModel {
    x_model: LevyModel,
    y_model: LevyModel,
    delta: f64,
    b: f64,
}

impl RefractedModel {
    pub fn new(x_model: LevyModel, delta: f64, b: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidModel("delta must be non-negative and finite".into()));
        }
        if !b.is_finite() {
            return Err(Error::InvalidModel("barrier b must be finite".into()));
        }
        if x_model.is_bv() {
            let c = x_model.linear_drift();
            if delta >= c {
                return Err(Error::HypothesisViolated(format!(
                    "bounded-variation driver requires delta < c (got delta = {delta}, c = {c})"
                )));
            }
        }
        let y_model = LevyModel::new(x_model.gamma() - delta, x_model.sigma2(), x_model.jumps().clone())?;
        Ok(RefractedModel { x_model, y_model, delta, b })
    }

    pub fn x_model(&self) -> &LevyModel {
        &self.x_model
    }

    /// The process Y = X - delta t governing excursions above the barrier.
    pub fn y_model(&self) -> &LevyModel {
        &self.y_model
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn barrier(&self) -> f64 {
        self.b
    }

    /// Right inverse of the Y exponent: phi(q) = sup{theta > 0 :
    /// psi(theta) - delta*theta = q}.
    pub fn inverse_exponent_y(&self, q: f64) -> Result<f64> {
        self.y_model.inverse_exponent(q)
    }

    /// (psi'(0+) - delta)^+, the upward drift of Y clipped at zero.
    pub fn drift_surplus(&self) -> f64 {
        (self.x_model.mean_drift() - self.delta).max(0.0)
    }
}

// ---------------------------------------------------------------------------
// JSON description
// ---------------------------------------------------------------------------

/// Wire format for a refracted model:
/// `{"gamma": r, "sigma2": r, "jumps": {...}, "delta": r, "b": r}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub gamma: f64,
    pub sigma2: f64,
    pub jumps: JumpSpecWire,
    pub delta: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum JumpSpecWire {
    None,
    CompoundPoisson { rate: f64, law: MagnitudeLaw },
}

impl From<&JumpSpec> for JumpSpecWire {
    fn from(j: &JumpSpec) -> Self {
        match j {
            JumpSpec::None => JumpSpecWire::None,
            JumpSpec::CompoundPoisson { rate, law } => {
                JumpSpecWire::CompoundPoisson { rate: *rate, law: law.clone() }
            }
        }
    }
}

impl From<JumpSpecWire> for JumpSpec {
    fn from(j: JumpSpecWire) -> Self {
        match j {
            JumpSpecWire::None => JumpSpec::None,
            JumpSpecWire::CompoundPoisson { rate, law } => {
                JumpSpec::CompoundPoisson { rate, law }
            }
        }
    }
}

impl ModelSpec {
    pub fn build(self) -> Result<RefractedModel> {
        let x = LevyModel::new(self.gamma, self.sigma2, self.jumps.into())?;
        RefractedModel::new(x, self.delta, self.b)
    }

    pub fn from_model(model: &RefractedModel) -> Self {
        ModelSpec {
            gamma: model.x_model().gamma(),
            sigma2: model.x_model().sigma2(),
            jumps: model.x_model().jumps().into(),
            delta: model.delta(),
            b: model.barrier(),
        }
    }
}
