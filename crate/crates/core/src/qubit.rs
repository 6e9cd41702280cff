//! Qubit operator algebra in Pauli/Bloch coordinates.
//!
//! A rank-1 projector is `½(𝟙 + σ·n)` for a unit vector `n`, a density operator
//! is `½(𝟙 + σ·r)` with `|r| ≤ 1`, and an effect is `e0·𝟙 + e·σ`. Nothing here
//! builds a 2×2 matrix; the matrix picture only appears as a test oracle.

use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Inputs whose norm is within this distance of 1 are renormalized silently.
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Two projectors are orthogonal when their trace product is at most this.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-9;
/// Slack on effect eigenvalues and density-operator norms.
pub const EIGEN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector::new(0.0, 0.0, 0.0);
    pub const X: BlochVector = BlochVector::new(1.0, 0.0, 0.0);
    pub const Y: BlochVector = BlochVector::new(0.0, 1.0, 0.0);
    pub const Z: BlochVector = BlochVector::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn distance(self, other: BlochVector) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns the vector rescaled to unit length if its norm is within
    /// [`UNIT_TOLERANCE`] of 1.
    pub fn to_unit(self) -> Result<BlochVector> {
        let norm = self.norm();
        if !self.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(LabError::InvalidInput(format!(
                "expected a unit vector, got {self} with norm {norm}"
            )));
        }
        Ok(if norm == 1.0 { self } else { self.scale(1.0 / norm) })
    }
}

impl From<[f64; 3]> for BlochVector {
    fn from(v: [f64; 3]) -> Self {
        BlochVector::new(v[0], v[1], v[2])
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for BlochVector {
    type Output = BlochVector;
    fn sub(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

impl std::fmt::Display for BlochVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// An element of the qubit projection lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rank", content = "bloch")]
pub enum QubitProjector {
    /// The zero operator.
    Zero,
    /// `½(𝟙 + σ·n)` with `|n| = 1`.
    RankOne(BlochVector),
    /// The identity.
    Identity,
}

impl QubitProjector {
    pub fn rank(&self) -> u8 {
        match self {
            QubitProjector::Zero => 0,
            QubitProjector::RankOne(_) => 1,
            QubitProjector::Identity => 2,
        }
    }

    pub fn bloch(&self) -> Option<BlochVector> {
        match self {
            QubitProjector::RankOne(n) => Some(*n),
            _ => None,
        }
    }

    pub fn trace(&self) -> f64 {
        f64::from(self.rank())
    }
}

pub fn projector_from_bloch(n: BlochVector) -> Result<QubitProjector> {
    Ok(QubitProjector::RankOne(n.to_unit()?))
}

/// `¬P = 𝟙 − P`.
pub fn complement(p: QubitProjector) -> QubitProjector {
    match p {
        QubitProjector::Zero => QubitProjector::Identity,
        QubitProjector::RankOne(n) => QubitProjector::RankOne(-n),
        QubitProjector::Identity => QubitProjector::Zero,
    }
}

/// `tr(PQ)`; for rank-1 inputs this is `½(1 + a·b)`.
pub fn trace_product(p: QubitProjector, q: QubitProjector) -> f64 {
    use QubitProjector::*;
    match (p, q) {
        (Zero, _) | (_, Zero) => 0.0,
        (Identity, other) | (other, Identity) => other.trace(),
        (RankOne(a), RankOne(b)) => 0.5 * (1.0 + a.dot(b)),
    }
}

fn require_orthogonal(p: QubitProjector, q: QubitProjector) -> Result<()> {
    let trace = trace_product(p, q);
    if trace > ORTHOGONALITY_TOLERANCE {
        return Err(LabError::NotOrthogonal { trace, tolerance: ORTHOGONALITY_TOLERANCE });
    }
    Ok(())
}

/// `P ∨ Q = P + Q` for orthogonal `P`, `Q`.
pub fn join_orthogonal(p: QubitProjector, q: QubitProjector) -> Result<QubitProjector> {
    require_orthogonal(p, q)?;
    Ok(match p.rank() + q.rank() {
        0 => QubitProjector::Zero,
        1 => if p.rank() == 1 { p } else { q },
        _ => QubitProjector::Identity,
    })
}

/// `P ∧ Q` on commuting pairs: orthogonal pairs meet at `𝟘`, `P ∧ 𝟙 = P`, `P ∧ P = P`.
pub fn meet_orthogonal(p: QubitProjector, q: QubitProjector) -> Result<QubitProjector> {
    use QubitProjector::*;
    match (p, q) {
        (Zero, _) | (_, Zero) => Ok(Zero),
        (Identity, other) | (other, Identity) => Ok(other),
        (RankOne(a), RankOne(_)) => {
            if trace_product(p, q) >= 1.0 - ORTHOGONALITY_TOLERANCE {
                Ok(RankOne(a))
            } else {
                require_orthogonal(p, q)?;
                Ok(Zero)
            }
        }
    }
}

/// `½(𝟙 + σ·r)` with `|r| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    bloch: BlochVector,
}

impl DensityOperator {
    /// Accepts `|r| ≤ 1`; norms in `(1, 1 + 1e-9]` are pulled back onto the sphere.
    pub fn new(r: BlochVector) -> Result<Self> {
        let norm = r.norm();
        if !r.is_finite() || norm > 1.0 + UNIT_TOLERANCE {
            return Err(LabError::InvalidInput(format!(
                "Bloch vector {r} has norm {norm} > 1; not a density operator"
            )));
        }
        let bloch = if norm > 1.0 { r.scale(1.0 / norm) } else { r };
        Ok(Self { bloch })
    }

    pub fn maximally_mixed() -> Self {
        Self { bloch: BlochVector::ZERO }
    }

    /// The pure state `½(𝟙 + σ·n)`.
    pub fn pure(n: BlochVector) -> Result<Self> {
        Ok(Self { bloch: n.to_unit()? })
    }

    pub fn bloch(&self) -> BlochVector {
        self.bloch
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = self.bloch.norm();
        (0.5 * (1.0 - r), 0.5 * (1.0 + r))
    }

    pub fn is_pure(&self) -> bool {
        (self.bloch.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }
}

/// `tr(ρP)`.
pub fn born_probability(rho: &DensityOperator, p: QubitProjector) -> f64 {
    match p {
        QubitProjector::Zero => 0.0,
        QubitProjector::Identity => 1.0,
        QubitProjector::RankOne(n) => (0.5 * (1.0 + rho.bloch.dot(n))).clamp(0.0, 1.0),
    }
}

/// `e0·𝟙 + e·σ` with both eigenvalues `e0 ± |e|` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub e0: f64,
    pub e: BlochVector,
}

impl Effect {
    pub const ZERO: Effect = Effect { e0: 0.0, e: BlochVector::ZERO };
    pub const IDENTITY: Effect = Effect { e0: 1.0, e: BlochVector::ZERO };

    pub fn eigenvalues(&self) -> (f64, f64) {
        let len = self.e.norm();
        (self.e0 - len, self.e0 + len)
    }

    pub fn from_projector(p: QubitProjector) -> Effect {
        match p {
            QubitProjector::Zero => Effect::ZERO,
            QubitProjector::Identity => Effect::IDENTITY,
            QubitProjector::RankOne(n) => Effect { e0: 0.5, e: n.scale(0.5) },
        }
    }

    /// Coefficient-wise sum, validated as an effect.
    pub fn checked_add(&self, other: &Effect) -> Result<Effect> {
        effect_from_coeffs(self.e0 + other.e0, self.e + other.e)
    }

    /// Largest coefficient difference to `other`.
    pub fn distance(&self, other: &Effect) -> f64 {
        (self.e0 - other.e0).abs().max((self.e - other.e).norm())
    }
}

pub fn effect_from_coeffs(e0: f64, e: BlochVector) -> Result<Effect> {
    let effect = Effect { e0, e };
    let (lower, upper) = effect.eigenvalues();
    if !(lower >= -EIGEN_SLACK && upper <= 1.0 + EIGEN_SLACK) {
        return Err(LabError::InvalidEffect { lower, upper });
    }
    Ok(effect)
}
