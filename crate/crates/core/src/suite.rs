//! End-to-end runs: single-frame verification, the claims table and plot scans.
//!
//! Every run is a pure function of its [`SuiteConfig`], so equal configs give
//! byte-identical serialized reports.

use std::f64::consts::PI;

use serde::Serialize;

use crate::additivity::{check_orthogonal_additivity_vec, sphere_restriction_demo, GudderFunction, SUPPORTED_DIMS};
use crate::effects::{
    check_busch_additivity, check_effect_additivity, chord_decomposition, compare_decompositions,
    decomposition_dependence_witness, SquaredBorn,
};
use crate::error::{LabError, Result};
use crate::frames::{born_frame, builtin_shapes, odd_frame, validate_shape_function, FrameFunction, OddShapeFunction, CONSTRUCTION_GRID};
use crate::linearity::{
    check_complement_rule, check_continuity, check_eigenstate, continuous_eigenstate_counterexample,
    fit_density_operator, linearity_verdict, ContinuityReport, CounterexampleConfig, FitResult, Verdict,
    IDENTITY_TOLERANCE, VERDICT_TOLERANCE,
};
use crate::qubit::{BlochVector, DensityOperator, Effect};
use crate::qutrit::{check_basis_additivity, nonlinear_d3_witness, random_density_operator3, Frame3, WITNESS_THRESHOLD};
use crate::report::PropertyReport;
use crate::sampling::{block_rng, derive_seed, unit_vector};

/// Largest chord used by the continuity check.
pub const CONTINUITY_SEPARATION: f64 = 0.5;
/// Expected rms residual of the cubic frame's best affine fit, `1/√175`.
pub const CUBIC_RESIDUAL: f64 = 0.075_592_894_601_845_44;
pub const RESIDUAL_TOLERANCE: f64 = 2e-3;
pub const RECOVERY_TOLERANCE: f64 = 5e-3;
pub const SPHERE_MATCH_TOLERANCE: f64 = 1e-3;
pub const POVM_COUNT: usize = 100;
pub const WITNESS_ATTEMPTS: usize = 10_000;
pub const BORN_WITNESS_ATTEMPTS: usize = 100_000;
pub const QUTRIT_BASES: usize = 1_000;
pub const QUTRIT_TRIALS: usize = 1_000;
pub const QUTRIT_TOLERANCE: f64 = 1e-10;
pub const DECOMPOSITION_THRESHOLD: f64 = 0.01;

/// Sampling budget, seed and tolerances shared by every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub samples: usize,
    pub seed: u64,
    pub identity_tol: f64,
    pub verdict_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { samples: 100_000, seed: 42, identity_tol: IDENTITY_TOLERANCE, verdict_tol: VERDICT_TOLERANCE }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(LabError::InvalidInput("samples must be at least 1".into()));
        }
        for (name, tol) in [("identity", self.identity_tol), ("verdict", self.verdict_tol)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(LabError::InvalidInput(format!("{name} tolerance must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Linear,
    Nonlinear,
}

/// Every check run on one frame, and whether the frame behaved as its kind predicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub frame: String,
    pub config: SuiteConfig,
    pub complement: PropertyReport,
    pub continuity: ContinuityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenstate: Option<PropertyReport>,
    pub fit: FitResult,
    pub verdict: Verdict,
    pub expected: Expectation,
    pub pass: bool,
}

/// Born frames (and odd frames with a linear shape) must come out linear.
/// Every other frame must satisfy the frame axioms and still come out nonlinear.
pub fn verify(frame: &FrameFunction, config: &SuiteConfig) -> Result<VerificationReport> {
    config.validate()?;
    let complement = check_complement_rule(frame, config.samples, config.seed, config.identity_tol);
    let continuity = check_continuity(frame, config.samples, config.seed, CONTINUITY_SEPARATION)?;
    let eigenstate = match frame.eigenstate() {
        Some(phi) => Some(check_eigenstate(frame, phi, config.identity_tol)?),
        None => None,
    };
    let fit = fit_density_operator(frame, config.samples, config.seed)?;
    let verdict = linearity_verdict(&fit, config.verdict_tol)?;
    let expected = if frame.is_linear_by_construction() { Expectation::Linear } else { Expectation::Nonlinear };
    let axioms = complement.pass && continuity.report.pass && eigenstate.as_ref().is_none_or(|e| e.pass);
    let pass = axioms && verdict.is_linear() == (expected == Expectation::Linear);
    Ok(VerificationReport {
        frame: frame.label(),
        config: *config,
        complement,
        continuity,
        eigenstate,
        fit,
        verdict,
        expected,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyNumber {
    pub name: String,
    pub value: f64,
}

fn key(name: &str, value: f64) -> KeyNumber {
    KeyNumber { name: name.into(), value }
}

/// One reproduced claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimRow {
    pub claim: String,
    /// The identity or inequality being tested.
    pub statement: String,
    pub pass: bool,
    pub numbers: Vec<KeyNumber>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimsTable {
    pub config: SuiteConfig,
    pub rows: Vec<ClaimRow>,
    pub pass: bool,
}

impl ClaimsTable {
    pub fn row(&self, claim: &str) -> Option<&ClaimRow> {
        self.rows.iter().find(|r| r.claim == claim)
    }
}

pub const CLAIM_COMPLEMENT: &str = "complement rule";
pub const CLAIM_FAMILY: &str = "odd-shape family";
pub const CLAIM_NONLINEAR: &str = "no generating density operator";
pub const CLAIM_EFFECTS: &str = "effect additivity";
pub const CLAIM_DECOMPOSITION: &str = "decomposition dependence";
pub const CLAIM_COUNTEREXAMPLE: &str = "continuous counterexample with eigenstate";
pub const CLAIM_SPHERE: &str = "sphere restriction of additive functions";
pub const CLAIM_QUTRIT: &str = "d=3 boundary";

fn cubic_z() -> Result<FrameFunction> {
    odd_frame(BlochVector::Z, OddShapeFunction::cubic())
}

fn complement_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let report = check_complement_rule(&cubic_z()?, config.samples, config.seed, config.identity_tol);
    Ok(ClaimRow {
        claim: CLAIM_COMPLEMENT.into(),
        statement: "p(P) + p(1 - P) = 1 for the cubic frame".into(),
        pass: report.pass,
        numbers: vec![key("max_violation", report.max_violation)],
    })
}

fn family_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let mut rng = block_rng(derive_seed(config.seed, 2), 0);
    let mut pass = true;
    let (mut oddness, mut complement) = (0.0f64, 0.0f64);
    for (i, shape) in builtin_shapes().into_iter().enumerate() {
        let validation = validate_shape_function(&shape, CONSTRUCTION_GRID)?;
        let frame = odd_frame(unit_vector(&mut rng), shape)?;
        let report = check_complement_rule(&frame, config.samples, derive_seed(config.seed, 20 + i as u64), config.identity_tol);
        pass &= validation.pass && report.pass;
        oddness = oddness.max(validation.oddness_violation);
        complement = complement.max(report.max_violation);
    }
    Ok(ClaimRow {
        claim: CLAIM_FAMILY.into(),
        statement: "every odd f with f(1) = 1 gives a frame".into(),
        pass,
        numbers: vec![key("max_oddness_violation", oddness), key("max_complement_violation", complement)],
    })
}

fn nonlinear_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let seed = derive_seed(config.seed, 3);
    let cubic = fit_density_operator(&cubic_z()?, config.samples, seed)?;
    let verdict = linearity_verdict(&cubic, config.verdict_tol)?;
    let recovered = cubic.r_hat.distance(BlochVector::Z.scale(0.6));
    let truth = BlochVector::new(0.2, -0.3, 0.5);
    let born = fit_density_operator(&born_frame(DensityOperator::new(truth)?), config.samples, seed)?;
    let pass = !verdict.is_linear()
        && (cubic.rms_residual - CUBIC_RESIDUAL).abs() <= RESIDUAL_TOLERANCE
        && recovered <= RECOVERY_TOLERANCE
        && born.rms_residual <= 1e-9
        && born.covers(truth, 3.0);
    Ok(ClaimRow {
        claim: CLAIM_NONLINEAR.into(),
        statement: "no a, r reproduce the cubic frame as a + r·n/2".into(),
        pass,
        numbers: vec![
            key("rms_residual", cubic.rms_residual),
            key("r_hat_z", cubic.r_hat.z),
            key("born_rms_residual", born.rms_residual),
        ],
    })
}

fn effects_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let seed = derive_seed(config.seed, 4);
    let rho = DensityOperator::new(BlochVector::new(0.3, -0.1, 0.4))?;
    let born = check_busch_additivity(&rho, POVM_COUNT, seed, config.identity_tol)?;
    let squared = check_effect_additivity(&SquaredBorn(rho), POVM_COUNT, seed, config.identity_tol)?;
    Ok(ClaimRow {
        claim: CLAIM_EFFECTS.into(),
        statement: "Born probabilities add over effects; squared ones do not".into(),
        pass: born.pass && !squared.pass && squared.witness.is_some(),
        numbers: vec![key("born_violation", born.max_violation), key("squared_violation", squared.max_violation)],
    })
}

fn decomposition_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let cubic = cubic_z()?;
    let c = BlochVector::new(0.0, 0.0, 0.5);
    let hand = compare_decompositions(&cubic, chord_decomposition(c, BlochVector::Z)?, chord_decomposition(c, BlochVector::X)?)?;
    let target = Effect { e0: 0.5, e: BlochVector::new(0.0, 0.0, 0.25) };
    let hand_ok = hand.effect.distance(&target) <= 1e-15
        && (hand.first_probability - 0.75).abs() <= 1e-15
        && (hand.second_probability - 9.0 / 16.0).abs() <= 1e-15;
    let seed = derive_seed(config.seed, 5);
    let search = decomposition_dependence_witness(&cubic, WITNESS_ATTEMPTS, seed, DECOMPOSITION_THRESHOLD)?;
    let born = born_frame(DensityOperator::new(BlochVector::new(-0.2, 0.5, 0.1))?);
    let born_search = decomposition_dependence_witness(&born, BORN_WITNESS_ATTEMPTS, seed, DECOMPOSITION_THRESHOLD)?;
    Ok(ClaimRow {
        claim: CLAIM_DECOMPOSITION.into(),
        statement: "two decompositions of (1/2, (0,0,1/4)) score 3/4 and 9/16".into(),
        pass: hand_ok && search.is_some() && born_search.is_none(),
        numbers: vec![
            key("hand_difference", hand.difference),
            key("search_difference", search.map_or(0.0, |w| w.difference)),
        ],
    })
}

fn counterexample_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let cx = CounterexampleConfig {
        samples: config.samples,
        seed: derive_seed(config.seed, 6),
        identity_tol: config.identity_tol,
        verdict_tol: config.verdict_tol,
        max_separation: CONTINUITY_SEPARATION,
    };
    let report = continuous_eigenstate_counterexample(&OddShapeFunction::cubic(), BlochVector::Z, &cx)?;
    let eigenvalue = cubic_z()?.eval_rank_one(BlochVector::Z);
    let pass = report.pass && (report.fit.rms_residual - CUBIC_RESIDUAL).abs() <= RESIDUAL_TOLERANCE;
    Ok(ClaimRow {
        claim: CLAIM_COUNTEREXAMPLE.into(),
        statement: "additive, continuous, p(P_phi) = 1, and still nonlinear".into(),
        pass,
        numbers: vec![
            key("rms_residual", report.fit.rms_residual),
            key("eigenstate_value", eigenvalue),
            key("lipschitz", report.continuity.lipschitz_estimate),
        ],
    })
}

fn sphere_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let seed = derive_seed(config.seed, 7);
    let mut quad_ok = true;
    let mut quad_violation = 0.0f64;
    for dim in SUPPORTED_DIMS {
        let b: Vec<f64> = (0..dim).map(|i| 0.5 - 0.25 * i as f64).collect();
        let g = GudderFunction::quad_linear(0.7, b);
        let report = check_orthogonal_additivity_vec(&g, dim, config.samples, seed, config.identity_tol)?;
        quad_ok &= report.pass;
        quad_violation = quad_violation.max(report.max_violation);
    }
    let demo = sphere_restriction_demo(&cubic_z()?, config.samples, seed)?;
    let residual = demo.restricted_fit.report.max_violation;
    let pass = quad_ok && demo.flaw_exhibited && (residual - CUBIC_RESIDUAL).abs() <= SPHERE_MATCH_TOLERANCE;
    Ok(ClaimRow {
        claim: CLAIM_SPHERE.into(),
        statement: "a v·v + b·v is forced on R^3, not on the sphere".into(),
        pass,
        numbers: vec![key("quad_linear_violation", quad_violation), key("sphere_rms_residual", residual)],
    })
}

fn qutrit_row(config: &SuiteConfig) -> Result<ClaimRow> {
    let seed = derive_seed(config.seed, 8);
    let born = check_basis_additivity(
        &Frame3::Born(random_density_operator3(seed)),
        QUTRIT_BASES,
        seed,
        QUTRIT_TOLERANCE,
    );
    let rho0 = random_density_operator3(derive_seed(seed, 1));
    let witness = nonlinear_d3_witness(&rho0, &OddShapeFunction::cubic(), QUTRIT_TRIALS, seed)?;
    let deviation = witness.as_ref().map_or(0.0, |w| w.deviation);
    Ok(ClaimRow {
        claim: CLAIM_QUTRIT.into(),
        statement: "in d = 3 only Born frames sum to 1 on every basis".into(),
        pass: born.pass && deviation > WITNESS_THRESHOLD,
        numbers: vec![key("born_violation", born.max_violation), key("witness_deviation", deviation)],
    })
}

/// Reproduces each claim as a pass/fail row.
pub fn claims_table(config: &SuiteConfig) -> Result<ClaimsTable> {
    config.validate()?;
    let builders: [fn(&SuiteConfig) -> Result<ClaimRow>; 8] = [
        complement_row,
        family_row,
        nonlinear_row,
        effects_row,
        decomposition_row,
        counterexample_row,
        sphere_row,
        qutrit_row,
    ];
    let rows = builders.iter().map(|b| b(config)).collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(ClaimsTable { config: *config, rows, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnglePoint {
    pub angle: f64,
    pub probability: f64,
}

/// `p(P_n)` along the meridian `n = (sin θ, 0, cos θ)`, `θ` from 0 to π inclusive.
pub fn scan_angles(frame: &FrameFunction, points: usize) -> Result<Vec<AnglePoint>> {
    if points < 2 {
        return Err(LabError::InvalidInput(format!("an angle scan needs at least 2 points, got {points}")));
    }
    Ok((0..points)
        .map(|i| {
            let angle = if i + 1 == points { PI } else { PI * i as f64 / (points - 1) as f64 };
            let n = BlochVector::new(angle.sin(), 0.0, angle.cos());
            AnglePoint { angle, probability: frame.eval_rank_one(n) }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub samples: usize,
    pub rms_residual: f64,
}

/// Decades `10², 10³, …` up to and including `max_samples`.
pub fn residual_sample_counts(max_samples: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = std::iter::successors(Some(100usize), |n| n.checked_mul(10))
        .take_while(|&n| n < max_samples)
        .collect();
    counts.push(max_samples.max(100));
    counts
}

/// Fit residual of `frame` at each sample count, all from the same seed.
pub fn scan_residuals(frame: &FrameFunction, counts: &[usize], seed: u64) -> Result<Vec<ResidualPoint>> {
    counts
        .iter()
        .map(|&samples| {
            let fit = fit_density_operator(frame, samples, seed)?;
            Ok(ResidualPoint { samples, rms_residual: fit.rms_residual })
        })
        .collect()
}
