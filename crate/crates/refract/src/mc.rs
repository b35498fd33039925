//! Monte Carlo oracle for the refracted SDE.
//!
//! Bounded-variation drivers are simulated path-exactly: between jump
//! epochs the path is piecewise linear with slope c above the barrier
//! already reduced by delta, and every crossing time is solved in closed
//! form. Drivers with a Gaussian part use Euler-Maruyama steps with jumps
//! inserted at their exact exponential epochs.
//!
//! Every path owns a counter-based RNG substream derived from
//! (seed, path index), so estimates are reproducible and independent of
//! worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use rayon::prelude::*;

use crate::model::{JumpSpec, MagnitudeLaw, RefractedModel};
use crate::occupation::OccupationQuery;
use crate::scale::{BackendKind, ScaleFunctionSet};
use crate::{Error, Result};

/// Probability left uncensored when an infinite barrier is replaced by a
/// finite stopping level.
const CENSOR_TAIL: f64 = 1e-4;
/// Residual weight e^{-theta cap} at which accumulating more occupation
/// cannot move the estimate.
const OCC_CAP_TAIL: f64 = 1e-6;

/// How paths are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Closed-form piecewise-linear paths (bounded variation only).
    ExactBv,
    /// Euler-Maruyama with the given step.
    Euler { h: f64 },
}

/// Why a path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    HitHi,
    HitLo,
    Horizon,
}

impl ExitKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitKind::HitHi => "hit_hi",
            ExitKind::HitLo => "hit_lo",
            ExitKind::Horizon => "horizon",
        }
    }
}

/// One simulated path.
#[derive(Debug, Clone, Copy)]
pub struct PathOutcome {
    pub occupation_below_b: f64,
    /// Time spent at or above the barrier (diagnostic; the exact scheme
    /// keeps occupation_below_b + occupation_above_b == exit_time to
    /// rounding).
    pub occupation_above_b: f64,
    pub exit: ExitKind,
    pub exit_time: f64,
    pub final_value: f64,
}

/// Monte Carlo estimate of one Laplace functional.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard error plus any censoring bias bound.
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

/// Simulation controls.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n: usize,
    pub scheme: Scheme,
    pub seed: u64,
    /// Hard horizon for the Euler scheme.
    pub t_max: f64,
}

impl McConfig {
    pub fn new(n: usize, scheme: Scheme, seed: u64) -> Self {
        McConfig { n, scheme, seed, t_max: 1e4 }
    }
}

struct JumpSampler<'a> {
    rate: f64,
    law: Option<&'a MagnitudeLaw>,
}

impl<'a> JumpSampler<'a> {
    fn new(jumps: &'a JumpSpec) -> Self {
        JumpSampler { rate: jumps.rate(), law: jumps.law() }
    }

    /// Time to the next jump epoch (infinite when there are no jumps).
    fn next_epoch(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.rate == 0.0 {
            f64::INFINITY
        } else {
            Exp::new(self.rate).expect("positive rate").sample(rng)
        }
    }

    fn magnitude(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.law.expect("magnitude requested without jumps") {
            MagnitudeLaw::Exponential { mean } => {
                Exp::new(1.0 / mean).expect("positive rate").sample(rng)
            }
            MagnitudeLaw::MixedExponential { weights, means } => {
                let u: f64 = rand::Rng::random(rng);
                let mut acc = 0.0;
                for (w, m) in weights.iter().zip(means) {
                    acc += w;
                    if u <= acc {
                        return Exp::new(1.0 / m).expect("positive rate").sample(rng);
                    }
                }
                Exp::new(1.0 / means[means.len() - 1]).expect("positive rate").sample(rng)
            }
            MagnitudeLaw::Erlang { shape, mean } => {
                Gamma::new(f64::from(*shape), mean / f64::from(*shape))
                    .expect("valid gamma")
                    .sample(rng)
            }
            MagnitudeLaw::PointMass { size } => *size,
        }
    }
}

/// Exact piecewise-linear path of the refracted process for a
/// bounded-variation driver. Starts at the barrier; runs until the first
/// exit from (lo, hi) or until the accumulated occupation reaches
/// `occ_cap`, whichever is first. `lo` may be -inf, `hi` must be finite.
pub fn simulate_exact(
    rmodel: &RefractedModel,
    lo: f64,
    hi: f64,
    occ_cap: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathOutcome> {
    let x = rmodel.x_model();
    let c_below = x.bv_drift().ok_or_else(|| {
        Error::Domain("exact scheme requires a bounded-variation driver".into())
    })?;
    let c_above = c_below - rmodel.delta();
    let b = rmodel.barrier();
    if hi <= b {
        return Err(Error::Domain("exact scheme needs an upper level above b".into()));
    }
    if hi.is_infinite() && lo.is_infinite() && occ_cap.is_infinite() {
        return Err(Error::Domain("unbounded exact path: no exit level or occupation cap".into()));
    }
    let sampler = JumpSampler::new(x.jumps());

    let mut u = b;
    let mut t = 0.0;
    let mut occ_below = 0.0;
    let mut occ_above = 0.0;
    loop {
        let jump_in = sampler.next_epoch(rng);
        // Closed-form time to reach hi from the current position: climb at
        // c_below to the barrier (strictly below it), then at c_above.
        let (t_to_barrier, t_to_hi) = if u < b {
            let tb = (b - u) / c_below;
            (tb, tb + (hi - b) / c_above)
        } else {
            (0.0, (hi - u) / c_above)
        };
        // Occupation-cap crossing (only accrues strictly below b).
        let t_to_cap = if u < b && occ_cap - occ_below <= t_to_barrier {
            occ_cap - occ_below
        } else {
            f64::INFINITY
        };

        let event_dt = jump_in.min(t_to_hi).min(t_to_cap);
        let below_dt = event_dt.min(t_to_barrier);
        occ_below += below_dt;
        occ_above += event_dt - below_dt;
        t += event_dt;
        if t_to_cap <= jump_in.min(t_to_hi) {
            let final_value = u + c_below * t_to_cap;
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::Horizon,
                exit_time: t,
                final_value,
            });
        }
        if t_to_hi <= jump_in {
            // Upward passage is by creeping: the path exits exactly at hi.
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::HitHi,
                exit_time: t,
                final_value: hi,
            });
        }
        // Advance to the jump epoch and apply it.
        u = if u < b {
            if jump_in <= t_to_barrier {
                u + c_below * jump_in
            } else {
                b + c_above * (jump_in - t_to_barrier)
            }
        } else {
            u + c_above * jump_in
        };
        u -= sampler.magnitude(rng);
        if u < lo {
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::HitLo,
                exit_time: t,
                final_value: u,
            });
        }
    }
}

/// Euler-Maruyama path with jumps inserted at their exact epochs. Exits are
/// detected by threshold crossings at (sub-)step ends.
#[allow(clippy::too_many_arguments)]
pub fn simulate_euler(
    rmodel: &RefractedModel,
    lo: f64,
    hi: f64,
    h: f64,
    t_max: f64,
    occ_cap: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PathOutcome> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("Euler step must be positive, got {h}")));
    }
    let x = rmodel.x_model();
    let drift = x.linear_drift();
    let sigma = x.sigma2().sqrt();
    let delta = rmodel.delta();
    let b = rmodel.barrier();
    let sampler = JumpSampler::new(x.jumps());
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut u = b;
    let mut t = 0.0;
    let mut occ_below = 0.0;
    let mut occ_above = 0.0;
    let mut until_jump = sampler.next_epoch(rng);
    loop {
        if t >= t_max {
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::Horizon,
                exit_time: t,
                final_value: u,
            });
        }
        let dt = h.min(until_jump).min(t_max - t);
        let slope = if u > b { drift - delta } else { drift };
        if u < b {
            occ_below += dt;
        } else {
            occ_above += dt;
        }
        u += slope * dt + sigma * dt.sqrt() * normal.sample(rng);
        t += dt;
        until_jump -= dt;
        if until_jump <= 0.0 {
            u -= sampler.magnitude(rng);
            until_jump = sampler.next_epoch(rng);
        }
        if u > hi {
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::HitHi,
                exit_time: t,
                final_value: u,
            });
        }
        if u < lo {
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::HitLo,
                exit_time: t,
                final_value: u,
            });
        }
        if occ_below >= occ_cap {
            return Ok(PathOutcome {
                occupation_below_b: occ_below,
                occupation_above_b: occ_above,
                exit: ExitKind::Horizon,
                exit_time: t,
                final_value: u,
            });
        }
    }
}

/// Smallest level m above the barrier with
/// (psi'(0+) - delta) W_Y(m - b) >= 1 - tail, i.e. the probability of ever
/// returning below b from m is at most `tail`.
fn censor_level(rmodel: &RefractedModel, tail: f64) -> Result<f64> {
    let surplus = rmodel.x_model().mean_drift() - rmodel.delta();
    if !(surplus > 0.0) {
        return Err(Error::Domain(
            "censoring level needs psi'(0+) > delta (upward-drifting Y)".into(),
        ));
    }
    let y_set = ScaleFunctionSet::new(rmodel.y_model(), 0.0, BackendKind::Rational)?;
    let target = (1.0 - tail) / surplus;
    let mut hi = 1.0;
    while y_set.w(hi)? < target {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::RootFind("censoring level runaway".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if y_set.w(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(rmodel.barrier() + hi)
}

/// Effective simulation window and censoring bias for a query.
struct EffectiveWindow {
    lo: f64,
    hi: f64,
    occ_cap: f64,
    bias: f64,
}

fn effective_window(
    rmodel: &RefractedModel,
    query: &OccupationQuery,
) -> Result<EffectiveWindow> {
    let mut bias = 0.0;
    let upward = rmodel.x_model().mean_drift() > rmodel.delta();
    let hi = if query.hi.is_finite() {
        query.hi
    } else if upward {
        // The process escapes upward; past the censoring level the chance
        // of ever returning below b is at most CENSOR_TAIL.
        bias += CENSOR_TAIL;
        censor_level(rmodel, CENSOR_TAIL)?
    } else {
        // Drifting down: the lower exit (or the occupation cap) ends the
        // path almost surely.
        f64::INFINITY
    };
    let occ_cap = if query.theta > 0.0 {
        bias += OCC_CAP_TAIL;
        -OCC_CAP_TAIL.ln() / query.theta
    } else {
        f64::INFINITY
    };
    Ok(EffectiveWindow { lo: query.lo, hi, occ_cap, bias })
}

/// Simulate `n` paths of the query window under the given scheme.
pub fn simulate_paths(
    rmodel: &RefractedModel,
    query: &OccupationQuery,
    config: &McConfig,
) -> Result<Vec<PathOutcome>> {
    query.validate(rmodel.barrier())?;
    if query.lo.is_infinite() && query.hi.is_infinite() {
        let drift = rmodel.x_model().mean_drift();
        if !(drift > rmodel.delta()) {
            return Err(Error::Domain(
                "total-occupation simulation requires psi'(0+) > delta".into(),
            ));
        }
    }
    let window = effective_window(rmodel, query)?;
    if matches!(config.scheme, Scheme::ExactBv) && !rmodel.x_model().is_bv() {
        return Err(Error::Domain(
            "exact scheme requires a bounded-variation driver; use the Euler scheme".into(),
        ));
    }
    (0..config.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            match config.scheme {
                Scheme::ExactBv => {
                    simulate_exact(rmodel, window.lo, window.hi, window.occ_cap, &mut rng)
                }
                Scheme::Euler { h } => simulate_euler(
                    rmodel,
                    window.lo,
                    window.hi,
                    h,
                    config.t_max,
                    window.occ_cap,
                    &mut rng,
                ),
            }
        })
        .collect()
}

/// Estimate E[e^{-theta * occupation below b}] for the query by plain
/// Monte Carlo. The reduction order is fixed, so a given seed yields a
/// bit-identical estimate regardless of thread count.
pub fn estimate_occupation_lt(
    rmodel: &RefractedModel,
    query: &OccupationQuery,
    config: &McConfig,
) -> Result<McEstimate> {
    query.validate(rmodel.barrier())?;
    if config.n == 0 {
        return Err(Error::Config("need at least one path".into()));
    }
    if query.theta == 0.0 {
        // Constant functional.
        return Ok(McEstimate {
            mean: 1.0,
            stderr: 0.0,
            n: config.n,
            seed: config.seed,
            scheme: config.scheme,
        });
    }
    let window = effective_window(rmodel, query)?;
    let outcomes = simulate_paths(rmodel, query, config)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for o in &outcomes {
        let v = (-query.theta * o.occupation_below_b).exp();
        sum += v;
        sum_sq += v * v;
    }
    let n = config.n as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt() + window.bias,
        n: config.n,
        seed: config.seed,
        scheme: config.scheme,
    })
}

/// Position of Y relative to the barrier at its first passage below it,
/// provided the running supremum stayed below `barrier + cap`; `None` when
/// the path escapes above the cap first. Drives the overshoot-law checks.
pub fn sample_y_overshoot(
    rmodel: &RefractedModel,
    cap: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Option<f64>> {
    let x = rmodel.x_model();
    let c = x
        .bv_drift()
        .ok_or_else(|| Error::Domain("overshoot sampling requires bounded variation".into()))?;
    let c_above = c - rmodel.delta();
    let sampler = JumpSampler::new(x.jumps());
    // Y relative to the barrier.
    let mut y = 0.0;
    loop {
        let jump_in = sampler.next_epoch(rng);
        let reach_cap = (cap - y) / c_above;
        if reach_cap <= jump_in {
            return Ok(None);
        }
        y += c_above * jump_in;
        y -= sampler.magnitude(rng);
        if y < 0.0 {
            return Ok(Some(y));
        }
    }
}
