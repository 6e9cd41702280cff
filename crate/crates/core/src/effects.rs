//! Effects, POVMs and mixtures of projectors.
//!
//! The Born rule extends linearly to effects, `E ↦ tr(ρE) = e0 + r·e`, and
//! that extension is additive over every family of effects summing to at most
//! `𝟙`. The odd-shape frames are defined on projectors only, so they are
//! never evaluated on effects here. Instead a mixture `Σ wᵢPᵢ` is scored as
//! `Σ wᵢ p(Pᵢ)`; for a nonlinear frame two mixtures with the same operator
//! can score differently, which is the obstruction to any additive
//! extension.

use rand::Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::frames::FrameFunction;
use crate::qubit::{effect_from_coeffs, BlochVector, DensityOperator, Effect, QubitProjector};
use crate::report::{MaxTracker, PropertyReport, WitnessData};
use crate::sampling::{block_rng, derive_seed, map_blocks, tangent_vector, unit_vector};

/// Elements of a POVM must sum to `𝟙` within this.
pub const POVM_SUM_TOLERANCE: f64 = 1e-9;
pub const MAX_POVM_LEN: usize = 8;
/// Largest POVM used for sub-multiset enumeration (2⁶ subsets).
pub const MAX_ENUMERATED_LEN: usize = 6;
/// Two decompositions describe the same effect within this.
pub const SAME_EFFECT_TOLERANCE: f64 = 1e-9;
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A finite POVM: valid effects summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Povm {
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        if effects.is_empty() || effects.len() > MAX_POVM_LEN {
            return Err(LabError::InvalidInput(format!(
                "a POVM needs between 1 and {MAX_POVM_LEN} effects, got {}",
                effects.len()
            )));
        }
        for e in &effects {
            effect_from_coeffs(e.e0, e.e)?;
        }
        let e0: f64 = effects.iter().map(|e| e.e0).sum();
        let e = effects.iter().fold(BlochVector::ZERO, |acc, x| acc + x.e);
        if (e0 - 1.0).abs() > POVM_SUM_TOLERANCE || e.norm() > POVM_SUM_TOLERANCE {
            return Err(LabError::InvalidInput(format!(
                "POVM elements sum to ({e0}, {e}) instead of the identity"
            )));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// `E_j = (w_j, w_j c a′_j)` where `a′_j = a_j − Σᵢ wᵢaᵢ` and `c ∈ (0, 1]`
    /// is the largest scale keeping every element an effect.
    pub fn from_weighted_directions(weights: &[f64], directions: &[BlochVector]) -> Result<Self> {
        if weights.len() != directions.len() || weights.len() < 2 {
            return Err(LabError::InvalidInput(
                "need matching weights and directions, at least two of each".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w > 0.0)) || (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(LabError::InvalidInput(format!(
                "weights must be positive and sum to 1, got sum {total}"
            )));
        }
        let mean = weights
            .iter()
            .zip(directions)
            .fold(BlochVector::ZERO, |acc, (&w, &a)| acc + a.scale(w));
        let centred: Vec<BlochVector> = directions.iter().map(|&a| a - mean).collect();
        // eigenvalues w(1 ± c|a′|) must stay in [0, 1]
        let mut scale: f64 = 1.0;
        for (&w, a) in weights.iter().zip(&centred) {
            let len = a.norm();
            if len > 0.0 {
                let room = 1.0f64.min((1.0 - w) / w);
                scale = scale.min(room / len);
            }
        }
        let effects = weights
            .iter()
            .zip(&centred)
            .map(|(&w, &a)| Effect { e0: w, e: a.scale(w * scale) })
            .collect();
        Povm::new(effects)
    }
}

/// A random `k`-outcome POVM: flat-simplex weights and uniform directions.
pub fn random_povm(k: usize, seed: u64) -> Result<Povm> {
    if !(2..=MAX_POVM_LEN).contains(&k) {
        return Err(LabError::InvalidInput(format!("POVM size must be in 2..={MAX_POVM_LEN}, got {k}")));
    }
    let mut rng = block_rng(seed, 0);
    random_povm_with(k, &mut rng)
}

fn random_povm_with<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Povm> {
    loop {
        // normalized unit exponentials are uniform on the simplex
        let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|x| x / total).collect();
        if weights.iter().any(|&w| w < 1e-9) {
            continue;
        }
        // put the round-off on the largest weight so the sum is 1 to the last bit
        let (imax, _) = weights.iter().enumerate().fold((0, 0.0), |acc, (i, &w)| if w > acc.1 { (i, w) } else { acc });
        let rest: f64 = weights.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, w)| w).sum();
        weights[imax] = 1.0 - rest;
        let directions: Vec<BlochVector> = (0..k).map(|_| unit_vector(rng)).collect();
        return Povm::from_weighted_directions(&weights, &directions);
    }
}

/// `tr(ρE) = e0 + r·e`.
pub fn effect_probability_born(rho: &DensityOperator, effect: &Effect) -> f64 {
    (effect.e0 + rho.bloch().dot(effect.e)).clamp(0.0, 1.0)
}

/// A probability assignment on effects.
pub trait EffectAssignment: Sync {
    fn name(&self) -> String;
    fn probability(&self, effect: &Effect) -> f64;
}

/// The linear extension `E ↦ tr(ρE)` of a Born frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornExtension(pub DensityOperator);

impl EffectAssignment for BornExtension {
    fn name(&self) -> String {
        let r = self.0.bloch();
        format!("born-extension:{},{},{}", r.x, r.y, r.z)
    }

    fn probability(&self, effect: &Effect) -> f64 {
        effect_probability_born(&self.0, effect)
    }
}

/// `E ↦ tr(ρE)²`: agrees with a pure-state Born rule on its eigenprojectors
/// but is not additive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredBorn(pub DensityOperator);

impl EffectAssignment for SquaredBorn {
    fn name(&self) -> String {
        let r = self.0.bloch();
        format!("squared-born:{},{},{}", r.x, r.y, r.z)
    }

    fn probability(&self, effect: &Effect) -> f64 {
        let p = effect.e0 + self.0.bloch().dot(effect.e);
        p * p
    }
}

/// Largest `|q(Σ_{j∈S} E_j) − Σ_{j∈S} q(E_j)|` over all non-empty subsets `S`
/// of the POVM, with its witness subset.
pub fn povm_additivity_violation(assign: &dyn EffectAssignment, povm: &Povm) -> Result<(f64, Vec<Effect>)> {
    let effects = povm.effects();
    if effects.len() > MAX_ENUMERATED_LEN {
        return Err(LabError::InvalidInput(format!(
            "sub-multiset enumeration is capped at {MAX_ENUMERATED_LEN} elements"
        )));
    }
    let mut worst = MaxTracker::default();
    for mask in 1u32..(1 << effects.len()) {
        let subset: Vec<Effect> = (0..effects.len())
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| effects[j])
            .collect();
        let mut sum = Effect::ZERO;
        for e in &subset {
            sum = sum.checked_add(e)?;
        }
        let separate: f64 = subset.iter().map(|e| assign.probability(e)).sum();
        let violation = (assign.probability(&sum) - separate).abs();
        worst.offer(violation, || subset.clone());
    }
    Ok((worst.value, worst.witness.unwrap_or_default()))
}

/// Effect additivity over `povms` random POVMs of 2 to 6 outcomes and all
/// their sub-multisets.
pub fn check_effect_additivity(
    assign: &dyn EffectAssignment,
    povms: usize,
    seed: u64,
    tol: f64,
) -> Result<PropertyReport> {
    if povms == 0 {
        return Err(LabError::InvalidInput("need at least one POVM".into()));
    }
    let mut worst = MaxTracker::default();
    for index in 0..povms {
        let mut rng = block_rng(derive_seed(seed, index as u64), 0);
        let k = rng.gen_range(2..=MAX_ENUMERATED_LEN);
        let povm = random_povm_with(k, &mut rng)?;
        let (violation, subset) = povm_additivity_violation(assign, &povm)?;
        worst.offer(violation, || subset);
    }
    let witness = worst
        .witness
        .filter(|_| worst.value > tol)
        .map(|effects| WitnessData::Effects { effects });
    Ok(PropertyReport::new(
        format!("effect_additivity[{}]", assign.name()),
        povms,
        seed,
        worst.value,
        tol,
        witness,
    ))
}

/// Effect additivity of the Born extension of `rho`.
pub fn check_busch_additivity(rho: &DensityOperator, povms: usize, seed: u64, tol: f64) -> Result<PropertyReport> {
    check_effect_additivity(&BornExtension(*rho), povms, seed, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureTerm {
    pub weight: f64,
    pub projector: QubitProjector,
}

/// A convex combination `Σ wᵢPᵢ` of projectors, kept as the list of terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureDecomposition {
    terms: Vec<MixtureTerm>,
}

impl MixtureDecomposition {
    pub fn new(terms: Vec<(f64, QubitProjector)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(LabError::InvalidInput("empty decomposition".into()));
        }
        if terms.iter().any(|(w, _)| !(0.0..=1.0).contains(w)) {
            return Err(LabError::InvalidInput("mixture weights must lie in [0, 1]".into()));
        }
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(LabError::InvalidInput(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self {
            terms: terms.into_iter().map(|(weight, projector)| MixtureTerm { weight, projector }).collect(),
        })
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    /// `(weight, Bloch vector)` pairs of the rank-1 terms.
    pub fn weighted_vectors(&self) -> Vec<(f64, BlochVector)> {
        self.terms
            .iter()
            .filter_map(|t| t.projector.bloch().map(|n| (t.weight, n)))
            .collect()
    }
}

/// `Σ wᵢ Pᵢ` as an effect.
pub fn mixture_effect(d: &MixtureDecomposition) -> Effect {
    let (e0, e) = d.terms.iter().fold((0.0, BlochVector::ZERO), |(e0, e), t| {
        let p = Effect::from_projector(t.projector);
        (e0 + t.weight * p.e0, e + p.e.scale(t.weight))
    });
    Effect { e0, e }
}

/// `Σ wᵢ p(Pᵢ)`.
pub fn mixture_probability(frame: &FrameFunction, d: &MixtureDecomposition) -> f64 {
    d.terms.iter().map(|t| t.weight * frame.eval(t.projector)).sum()
}

/// Two decompositions of one effect whose mixture probabilities differ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionWitness {
    pub first: MixtureDecomposition,
    pub second: MixtureDecomposition,
    pub effect: Effect,
    pub first_probability: f64,
    pub second_probability: f64,
    pub difference: f64,
}

impl DecompositionWitness {
    pub fn witness_data(&self) -> WitnessData {
        WitnessData::Decompositions {
            first: self.first.weighted_vectors(),
            second: self.second.weighted_vectors(),
            effect: self.effect,
            probabilities: [self.first_probability, self.second_probability],
        }
    }
}

/// Scores two decompositions of the same effect under `frame`.
pub fn compare_decompositions(
    frame: &FrameFunction,
    first: MixtureDecomposition,
    second: MixtureDecomposition,
) -> Result<DecompositionWitness> {
    let effect = mixture_effect(&first);
    let other = mixture_effect(&second);
    if effect.distance(&other) > SAME_EFFECT_TOLERANCE {
        return Err(LabError::Domain(format!(
            "decompositions give different effects ({}, {}) and ({}, {})",
            effect.e0, effect.e, other.e0, other.e
        )));
    }
    let first_probability = mixture_probability(frame, &first);
    let second_probability = mixture_probability(frame, &second);
    Ok(DecompositionWitness {
        first,
        second,
        effect,
        first_probability,
        second_probability,
        difference: (first_probability - second_probability).abs(),
    })
}

/// Writes the point `c` (|c| < 1) of the Bloch ball as `w P_a + (1 − w) P_b`,
/// where `a` and `b` are where the line through `c` along `u` meets the sphere.
pub fn chord_decomposition(c: BlochVector, u: BlochVector) -> Result<MixtureDecomposition> {
    let u = u.to_unit()?;
    let cu = c.dot(u);
    let disc = cu * cu + 1.0 - c.dot(c);
    if !(disc > 0.0) {
        return Err(LabError::InvalidInput(format!("point {c} is not inside the Bloch ball")));
    }
    let root = disc.sqrt();
    let (t_plus, t_minus) = (-cu + root, -cu - root);
    let a = (c + u.scale(t_plus)).to_unit()?;
    let b = (c + u.scale(t_minus)).to_unit()?;
    let w = -t_minus / (t_plus - t_minus);
    MixtureDecomposition::new(vec![(w, QubitProjector::RankOne(a)), (1.0 - w, QubitProjector::RankOne(b))])
}

/// Searches for two decompositions of one effect whose mixture
/// probabilities differ by more than `tol`.
///
/// Every mixture of two rank-1 projectors has `e0 = ½`, so each attempt draws
/// a target `(½, e)` with `|e| < ½` and compares the two extreme chords
/// through `c = 2e`: the diameter along `c` and the chord perpendicular to it.
/// Attempts run in seeded blocks; the first witness in attempt order wins.
pub fn decomposition_dependence_witness(
    frame: &FrameFunction,
    attempts: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<DecompositionWitness>> {
    let blocks = map_blocks(attempts, seed, |range, rng| -> Result<Option<DecompositionWitness>> {
        for _ in range {
            let radius = 0.999 * rng.gen::<f64>().cbrt();
            let c = unit_vector(rng).scale(radius);
            let along = if radius > 1e-6 { c.scale(1.0 / radius) } else { unit_vector(rng) };
            let across = tangent_vector(rng, along);
            let witness = compare_decompositions(
                frame,
                chord_decomposition(c, along)?,
                chord_decomposition(c, across)?,
            )?;
            if witness.difference > tol {
                return Ok(Some(witness));
            }
        }
        Ok(None)
    });
    for block in blocks {
        if let Some(w) = block? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// The witness search as a property report: the property is that mixture
/// probabilities do not depend on the decomposition, so a witness fails it.
pub fn check_decomposition_independence(
    frame: &FrameFunction,
    attempts: usize,
    seed: u64,
    tol: f64,
) -> Result<PropertyReport> {
    let found = decomposition_dependence_witness(frame, attempts, seed, tol)?;
    let (violation, witness) = match &found {
        Some(w) => (w.difference, Some(w.witness_data())),
        None => (0.0, None),
    };
    Ok(PropertyReport::new("decomposition_independence", attempts, seed, violation, tol, witness))
}
