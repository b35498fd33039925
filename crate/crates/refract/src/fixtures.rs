//! Reference models used across tests, the validation harness and the docs.

use crate::model::{JumpSpec, LevyModel, MagnitudeLaw, RefractedModel};

/// Brownian motion with drift: gamma = 1, sigma2 = 2, no jumps.
pub fn bm1() -> LevyModel {
    LevyModel::new(1.0, 2.0, JumpSpec::None).expect("bm1 fixture is valid")
}

/// Driftless Brownian motion: gamma = 0, sigma2 = 2. Useful because its
/// scale function W(x) = x makes several identities evaluable by hand.
pub fn driftless_bm() -> LevyModel {
    LevyModel::new(0.0, 2.0, JumpSpec::None).expect("driftless fixture is valid")
}

/// Cramer-Lundberg: drift c = 2, claims at rate 1 with exponential(1) sizes.
pub fn cl1() -> LevyModel {
    LevyModel::from_bv_drift(
        2.0,
        JumpSpec::CompoundPoisson { rate: 1.0, law: MagnitudeLaw::Exponential { mean: 1.0 } },
    )
    .expect("cl1 fixture is valid")
}

/// Bounded-variation model with a two-component exponential mixture.
pub fn cl_mixed() -> LevyModel {
    LevyModel::from_bv_drift(
        2.0,
        JumpSpec::CompoundPoisson {
            rate: 0.8,
            law: MagnitudeLaw::MixedExponential {
                weights: vec![0.4, 0.6],
                means: vec![0.5, 1.5],
            },
        },
    )
    .expect("mixed fixture is valid")
}

/// Bounded-variation model with Erlang(2) claim sizes.
pub fn cl_erlang() -> LevyModel {
    LevyModel::from_bv_drift(
        2.0,
        JumpSpec::CompoundPoisson { rate: 1.0, law: MagnitudeLaw::Erlang { shape: 2, mean: 1.0 } },
    )
    .expect("erlang fixture is valid")
}

/// Bounded-variation model with deterministic claim sizes.
pub fn cl_pointmass() -> LevyModel {
    LevyModel::from_bv_drift(
        2.0,
        JumpSpec::CompoundPoisson { rate: 1.0, law: MagnitudeLaw::PointMass { size: 1.0 } },
    )
    .expect("point-mass fixture is valid")
}

pub fn bm1_refracted(delta: f64, b: f64) -> RefractedModel {
    RefractedModel::new(bm1(), delta, b).expect("bm1 refraction is valid")
}

pub fn cl1_refracted(delta: f64, b: f64) -> RefractedModel {
    RefractedModel::new(cl1(), delta, b).expect("cl1 refraction is valid")
}

pub fn driftless_bm_refracted(b: f64) -> RefractedModel {
    RefractedModel::new(driftless_bm(), 0.0, b).expect("driftless refraction is valid")
}
