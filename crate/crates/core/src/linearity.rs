//! Deciding whether a qubit frame function comes from a density operator.
//!
//! A frame is linear exactly when `p(P_n) = a + ½ b·n` on the sphere, with
//! `a = ½` and `|b| ≤ 1`. [`fit_density_operator`] fits that model by
//! ordinary least squares over uniformly sampled `n`; a residual that does
//! not vanish means no `ρ` reproduces the frame. The remaining checks probe
//! the axioms a frame may satisfy even when it is nonlinear: the complement
//! rule, continuity and the existence of an eigenstate.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::frames::{odd_frame, FrameFunction, OddShapeFunction};
use crate::linalg::NormalEquations;
use crate::qubit::{BlochVector, DensityOperator, UNIT_TOLERANCE};
use crate::report::{MaxTracker, PropertyReport, WitnessData};
use crate::sampling::{derive_seed, map_blocks, tangent_vector, unit_vector};

pub const IDENTITY_TOLERANCE: f64 = 1e-12;
pub const VERDICT_TOLERANCE: f64 = 1e-3;
pub const MIN_FIT_SAMPLES: usize = 100;
pub const MIN_VERDICT_SAMPLES: usize = 10_000;
/// Lipschitz estimates are taken at `s`, `s/10` and `s/100`.
pub const SEPARATION_DECADES: usize = 3;
/// Growth of the Lipschitz estimate across the decades above which a frame
/// is flagged discontinuous. A jump grows by ~10× per decade.
pub const DIVERGENCE_GROWTH: f64 = 10.0;
pub const CONTINUITY_METRIC: &str = "euclidean distance between Bloch vectors";

/// `max |p(P_n) + p(P_{−n}) − 1|` over seeded uniform `n`.
pub fn check_complement_rule(frame: &FrameFunction, samples: usize, seed: u64, tol: f64) -> PropertyReport {
    let partials = map_blocks(samples, seed, |range, rng| {
        let mut worst = MaxTracker::default();
        for _ in range {
            let n = unit_vector(rng);
            let violation = (frame.eval_rank_one(n) + frame.eval_rank_one(-n) - 1.0).abs();
            worst.offer(violation, || n);
        }
        worst
    });
    let mut worst = MaxTracker::default();
    for part in partials {
        worst.merge(part);
    }
    let witness = worst.witness.map(|n| WitnessData::Vectors { vectors: vec![n, -n] });
    PropertyReport::new("complement_rule", samples, seed, worst.value, tol, witness)
}

/// Least-squares fit of `p(P_n) ≈ a + ½ b·n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Fitted Bloch vector `b`.
    pub r_hat: BlochVector,
    /// Fitted constant; `½` for any linear frame.
    pub a_hat: f64,
    pub rms_residual: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub inside_ball: bool,
    /// Standard errors of `r_hat` from the residual variance.
    pub r_std_error: [f64; 3],
    pub a_std_error: f64,
}

/// Absolute slack added to `k` standard errors so that exactly representable
/// frames, whose standard errors are at round-off level, are not rejected.
pub const STD_ERROR_FLOOR: f64 = 1e-12;

impl FitResult {
    /// True if every component of `r_hat` is within `k` standard errors of `truth`.
    pub fn covers(&self, truth: BlochVector, k: f64) -> bool {
        let err = self.r_hat - truth;
        [err.x, err.y, err.z]
            .iter()
            .zip(self.r_std_error)
            .all(|(e, se)| e.abs() <= k * se + STD_ERROR_FLOOR)
    }
}

fn sphere_features(n: BlochVector) -> [f64; 4] {
    [1.0, 0.5 * n.x, 0.5 * n.y, 0.5 * n.z]
}

pub(crate) struct SphereFit {
    pub beta: Vec<f64>,
    pub rms: f64,
    pub std_errors: Vec<f64>,
}

/// Ordinary least squares of `frame(P_n)` on `features(n)` over `samples`
/// seeded uniform `n`. Residuals are taken in a second pass over the same
/// draws so that exact fits report residuals at round-off level.
pub(crate) fn fit_on_sphere<const K: usize>(
    frame: &FrameFunction,
    samples: usize,
    seed: u64,
    features: impl Fn(BlochVector) -> [f64; K] + Sync,
) -> Result<SphereFit> {
    let partials = map_blocks(samples, seed, |range, rng| {
        let mut eq = NormalEquations::new(K);
        for _ in range {
            let n = unit_vector(rng);
            eq.push(&features(n), frame.eval_rank_one(n));
        }
        eq
    });
    let mut eq = NormalEquations::new(K);
    for part in &partials {
        eq.merge(part);
    }
    let beta = eq.solve()?;
    let sq_residuals: f64 = map_blocks(samples, seed, |range, rng| {
        range
            .map(|_| {
                let n = unit_vector(rng);
                let model: f64 = features(n).iter().zip(&beta).map(|(f, b)| f * b).sum();
                let r = frame.eval_rank_one(n) - model;
                r * r
            })
            .sum::<f64>()
    })
    .into_iter()
    .sum();
    let rms = (sq_residuals / samples as f64).sqrt();
    let dof = samples.saturating_sub(K).max(1) as f64;
    let sigma2 = sq_residuals / dof;
    let inv = eq.gram_inverse()?;
    let std_errors = (0..K).map(|i| (sigma2 * inv[i * K + i]).max(0.0).sqrt()).collect();
    Ok(SphereFit { beta, rms, std_errors })
}

pub fn fit_density_operator(frame: &FrameFunction, samples: usize, seed: u64) -> Result<FitResult> {
    if samples < MIN_FIT_SAMPLES {
        return Err(LabError::InvalidInput(format!(
            "density-operator fit needs at least {MIN_FIT_SAMPLES} samples, got {samples}"
        )));
    }
    let fit = fit_on_sphere(frame, samples, seed, sphere_features)?;
    let r_hat = BlochVector::new(fit.beta[1], fit.beta[2], fit.beta[3]);
    Ok(FitResult {
        r_hat,
        a_hat: fit.beta[0],
        rms_residual: fit.rms,
        sample_count: samples,
        seed,
        inside_ball: r_hat.norm() <= 1.0,
        r_std_error: [fit.std_errors[1], fit.std_errors[2], fit.std_errors[3]],
        a_std_error: fit.std_errors[0],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "rho", rename_all = "snake_case")]
pub enum Verdict {
    /// Reproduced by the enclosed density operator.
    Linear(DensityOperator),
    Nonlinear,
}

impl Verdict {
    pub fn is_linear(&self) -> bool {
        matches!(self, Verdict::Linear(_))
    }
}

/// Linear iff the residual is within `tol` and `|r_hat| ≤ 1 + 1e-9`.
pub fn linearity_verdict(fit: &FitResult, tol: f64) -> Result<Verdict> {
    if fit.sample_count < MIN_VERDICT_SAMPLES {
        return Err(LabError::InvalidInput(format!(
            "a verdict needs a fit over at least {MIN_VERDICT_SAMPLES} samples, got {}",
            fit.sample_count
        )));
    }
    if fit.rms_residual <= tol && fit.r_hat.norm() <= 1.0 + UNIT_TOLERANCE {
        Ok(Verdict::Linear(DensityOperator::new(fit.r_hat)?))
    } else {
        Ok(Verdict::Nonlinear)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleEstimate {
    pub max_separation: f64,
    pub lipschitz: f64,
}

/// Empirical Lipschitz behaviour of a frame on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub metric: &'static str,
    pub scales: Vec<ScaleEstimate>,
    /// Largest ratio `|p(P_n) − p(P_n′)| / ‖n − n′‖` over all scales.
    pub lipschitz_estimate: f64,
    /// Finest-scale estimate over coarsest-scale estimate.
    pub growth: f64,
    pub divergent: bool,
    /// `max_violation` is the growth; the tolerance is [`DIVERGENCE_GROWTH`].
    pub report: PropertyReport,
}

pub fn check_continuity(
    frame: &FrameFunction,
    samples: usize,
    seed: u64,
    max_separation: f64,
) -> Result<ContinuityReport> {
    if !(max_separation > 0.0 && max_separation <= 2.0) {
        return Err(LabError::InvalidInput(format!(
            "max_separation must lie in (0, 2], got {max_separation}"
        )));
    }
    let mut scales = Vec::with_capacity(SEPARATION_DECADES);
    let mut overall = MaxTracker::default();
    for decade in 0..SEPARATION_DECADES {
        let scale = max_separation / 10f64.powi(decade as i32);
        let partials = map_blocks(samples, derive_seed(seed, decade as u64 + 1), |range, rng| {
            let mut worst = MaxTracker::default();
            for _ in range {
                let n = unit_vector(rng);
                let t = tangent_vector(rng, n);
                // chord length in (s/2, s]; the great-circle angle follows from it
                let chord = scale * (1.0 - 0.5 * rand::Rng::gen::<f64>(rng));
                let angle = 2.0 * (0.5 * chord).min(1.0).asin();
                let m = n.scale(angle.cos()) + t.scale(angle.sin());
                let dist = n.distance(m);
                if dist == 0.0 {
                    continue;
                }
                let ratio = (frame.eval_rank_one(n) - frame.eval_rank_one(m)).abs() / dist;
                worst.offer(ratio, || (n, m));
            }
            worst
        });
        let mut worst = MaxTracker::default();
        for part in partials {
            worst.merge(part);
        }
        scales.push(ScaleEstimate { max_separation: scale, lipschitz: worst.value });
        overall.merge(worst);
    }
    let coarse = scales[0].lipschitz;
    let fine = scales[SEPARATION_DECADES - 1].lipschitz;
    let growth = if coarse > 0.0 {
        fine / coarse
    } else if fine > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let witness = overall.witness.map(|(n, m)| WitnessData::Vectors { vectors: vec![n, m] });
    let report = PropertyReport::new("continuity", samples, seed, growth, DIVERGENCE_GROWTH, witness)
        .with_note(format!("metric: {CONTINUITY_METRIC}; violation is Lipschitz growth over {SEPARATION_DECADES} decades"));
    Ok(ContinuityReport {
        metric: CONTINUITY_METRIC,
        scales,
        lipschitz_estimate: overall.value,
        growth,
        divergent: !report.pass,
        report,
    })
}

/// Passes iff `|p(P_φ) − 1| ≤ tol`.
pub fn check_eigenstate(frame: &FrameFunction, phi: BlochVector, tol: f64) -> Result<PropertyReport> {
    let phi = phi.to_unit()?;
    let violation = (frame.eval_rank_one(phi) - 1.0).abs();
    Ok(PropertyReport::new(
        "eigenstate",
        1,
        0,
        violation,
        tol,
        Some(WitnessData::Vectors { vectors: vec![phi] }),
    ))
}

/// Sampling budget and tolerances for [`continuous_eigenstate_counterexample`].
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub identity_tol: f64,
    pub verdict_tol: f64,
    pub max_separation: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 42,
            identity_tol: IDENTITY_TOLERANCE,
            verdict_tol: VERDICT_TOLERANCE,
            max_separation: 0.5,
        }
    }
}

/// A frame that is additive, continuous and has an eigenstate, yet is not
/// generated by any density operator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub frame: String,
    pub phi: BlochVector,
    pub complement: PropertyReport,
    pub continuity: ContinuityReport,
    pub eigenstate: PropertyReport,
    pub fit: FitResult,
    pub verdict: Verdict,
    /// All three axiom checks pass and the verdict is nonlinear.
    pub pass: bool,
}

/// Runs every check on `odd_frame(φ, f)`. The identity shape is rejected:
/// it is the Born frame of the pure state `φ`.
pub fn continuous_eigenstate_counterexample(
    shape: &OddShapeFunction,
    phi: BlochVector,
    config: &CounterexampleConfig,
) -> Result<CounterexampleReport> {
    if shape.is_linear() {
        return Err(LabError::InvalidInput(format!(
            "shape '{}' is linear; its frame is a Born frame, not a counterexample",
            shape.name()
        )));
    }
    let frame = odd_frame(phi, shape.clone())?;
    let phi = phi.to_unit()?;
    let complement = check_complement_rule(&frame, config.samples, config.seed, config.identity_tol);
    let continuity = check_continuity(&frame, config.samples, config.seed, config.max_separation)?;
    let eigenstate = check_eigenstate(&frame, phi, config.identity_tol)?;
    let fit = fit_density_operator(&frame, config.samples, config.seed)?;
    let verdict = linearity_verdict(&fit, config.verdict_tol)?;
    let pass = complement.pass && continuity.report.pass && eigenstate.pass && !verdict.is_linear();
    Ok(CounterexampleReport {
        frame: frame.label(),
        phi,
        complement,
        continuity,
        eigenstate,
        fit,
        verdict,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::born_frame;

    fn cubic_z() -> FrameFunction {
        odd_frame(BlochVector::Z, OddShapeFunction::cubic()).unwrap()
    }

    fn born(x: f64, y: f64, z: f64) -> FrameFunction {
        born_frame(DensityOperator::new(BlochVector::new(x, y, z)).unwrap())
    }

    #[test]
    fn complement_rule_examples() {
        assert!(check_complement_rule(&born(0.1, -0.4, 0.3), 10_000, 1, 1e-12).pass);
        assert!(check_complement_rule(&cubic_z(), 10_000, 1, 1e-12).pass);

        // ½(1 + max(0, n_z)) has an even part; the worst case is at the poles
        let lopsided = FrameFunction::rank_one("lopsided", |n| 0.5 * (1.0 + n.z.max(0.0)));
        let report = check_complement_rule(&lopsided, 10_000, 1, 1e-12);
        assert!(!report.pass);
        let oracle = |n: BlochVector| (0.5 * (1.0 + n.z.max(0.0)) + 0.5 * (1.0 + (-n.z).max(0.0)) - 1.0).abs();
        assert_eq!(oracle(BlochVector::Z), 0.5);
        assert!(report.max_violation <= 0.5 && report.max_violation > 0.49);
        let Some(WitnessData::Vectors { vectors }) = &report.witness else { panic!("missing witness") };
        assert!(vectors[0].z.abs() > 0.98);
    }

    #[test]
    fn fit_examples() {
        let fit = fit_density_operator(&born(0.0, 0.0, 0.6), 100_000, 5).unwrap();
        assert!(fit.r_hat.distance(BlochVector::new(0.0, 0.0, 0.6)) <= 1e-3);
        assert!(fit.rms_residual <= 1e-9);
        assert!((fit.a_hat - 0.5).abs() <= 1e-9);
        assert!(fit.inside_ball);

        let constant = FrameFunction::rank_one("constant", |_| 0.5);
        let fit = fit_density_operator(&constant, 10_000, 5).unwrap();
        assert!(fit.r_hat.norm() <= 1e-9);
        assert!(fit.rms_residual <= 1e-9);

        assert!(fit_density_operator(&constant, 99, 5).is_err());
    }

    #[test]
    fn verdict_examples() {
        let fit = fit_density_operator(&born(0.2, 0.0, -0.3), 10_000, 8).unwrap();
        match linearity_verdict(&fit, VERDICT_TOLERANCE).unwrap() {
            Verdict::Linear(rho) => assert!(rho.bloch().distance(BlochVector::new(0.2, 0.0, -0.3)) < 1e-9),
            Verdict::Nonlinear => panic!("Born frame judged nonlinear"),
        }
        let fit = fit_density_operator(&cubic_z(), 10_000, 8).unwrap();
        assert_eq!(linearity_verdict(&fit, VERDICT_TOLERANCE).unwrap(), Verdict::Nonlinear);
        let small = fit_density_operator(&cubic_z(), 1_000, 8).unwrap();
        assert!(linearity_verdict(&small, VERDICT_TOLERANCE).is_err());
    }

    #[test]
    fn verdict_rejects_fits_outside_the_ball() {
        // exactly affine but with slope 2: fits perfectly, yet no ρ has |r| = 2
        let steep = FrameFunction::rank_one("steep", |n| 0.5 + n.z);
        let fit = fit_density_operator(&steep, 10_000, 3).unwrap();
        assert!(fit.rms_residual < 1e-9);
        assert!(!fit.inside_ball);
        assert_eq!(linearity_verdict(&fit, VERDICT_TOLERANCE).unwrap(), Verdict::Nonlinear);
    }

    #[test]
    fn continuity_examples() {
        let cubic = check_continuity(&cubic_z(), 20_000, 4, 0.5).unwrap();
        assert!(cubic.lipschitz_estimate <= 1.5 + 1e-6);
        assert!(!cubic.divergent);

        let r = BlochVector::new(0.3, -0.5, 0.2);
        let b = check_continuity(&born(r.x, r.y, r.z), 20_000, 4, 2.0).unwrap();
        assert!(b.lipschitz_estimate <= 0.5 * r.norm() + 1e-6);
        assert!(b.report.pass);

        let step = FrameFunction::rank_one("step", |n| {
            if n.z > 0.0 { 1.0 } else if n.z < 0.0 { 0.0 } else { 0.5 }
        });
        let s = check_continuity(&step, 20_000, 4, 0.5).unwrap();
        assert!(s.divergent, "growth {}", s.growth);
        assert!(s.scales[2].lipschitz > 10.0 * s.scales[0].lipschitz);

        assert!(check_continuity(&step, 10, 4, 0.0).is_err());
        assert!(check_continuity(&step, 10, 4, 2.5).is_err());
    }

    #[test]
    fn eigenstate_examples() {
        let phi = BlochVector::new(0.6, 0.0, 0.8);
        let odd = odd_frame(phi, OddShapeFunction::cubic()).unwrap();
        assert!(check_eigenstate(&odd, phi, 1e-12).unwrap().pass);
        assert!(check_eigenstate(&born(0.6, 0.0, 0.8), phi, 1e-12).unwrap().pass);
        let mixed = check_eigenstate(&born(0.0, 0.0, 0.0), phi, 1e-12).unwrap();
        assert!(!mixed.pass);
        assert_eq!(mixed.max_violation, 0.5);
        assert!(check_eigenstate(&mixed_frame(), BlochVector::new(0.0, 0.0, 3.0), 1e-12).is_err());
    }

    fn mixed_frame() -> FrameFunction {
        born(0.0, 0.0, 0.0)
    }

    #[test]
    fn counterexample_bundle() {
        let config = CounterexampleConfig { samples: 20_000, ..Default::default() };
        let cubic = continuous_eigenstate_counterexample(&OddShapeFunction::cubic(), BlochVector::Z, &config).unwrap();
        assert!(cubic.pass);
        assert_eq!(cubic.verdict, Verdict::Nonlinear);
        assert_eq!(cubic.eigenstate.max_violation, 0.0);

        let sine = continuous_eigenstate_counterexample(&OddShapeFunction::sine(), BlochVector::X, &config).unwrap();
        assert!(sine.pass);
        assert!(sine.fit.rms_residual > 1e-3);

        assert!(continuous_eigenstate_counterexample(&OddShapeFunction::identity(), BlochVector::Z, &config).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let a = check_complement_rule(&cubic_z(), 9_000, 77, 1e-12);
        let b = check_complement_rule(&cubic_z(), 9_000, 77, 1e-12);
        assert_eq!(a, b);
        let fa = fit_density_operator(&cubic_z(), 9_000, 77).unwrap();
        let fb = fit_density_operator(&cubic_z(), 9_000, 77).unwrap();
        assert_eq!(crate::report::to_json(&fa), crate::report::to_json(&fb));
        let fc = fit_density_operator(&cubic_z(), 9_000, 78).unwrap();
        assert_ne!(fa.r_hat, fc.r_hat);
    }
}
