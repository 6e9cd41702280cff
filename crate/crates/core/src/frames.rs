//! Probability assignments on the qubit projection lattice.
//!
//! Two concrete families are provided: the Born frame `P ↦ tr(ρP)` and the
//! odd-shape frames `P_n ↦ ½[1 + f(m·n)]`, where `f` is odd on `[−1, 1]` with
//! `f(1) = 1`. Both fix `p(𝟘) = 0` and `p(𝟙) = 1`, and both satisfy
//! `p(P) + p(¬P) = 1`; only the Born frame (and the identity shape) is linear.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::qubit::{born_probability, BlochVector, DensityOperator, QubitProjector};

/// Grid size used when a shape is validated at frame construction.
pub const CONSTRUCTION_GRID: usize = 1001;
pub const MIN_GRID: usize = 101;
/// Tolerance on oddness, range and `f(1) = 1`.
pub const SHAPE_TOLERANCE: f64 = 1e-12;

type ShapeMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named real map on `[−1, 1]`, meant to be odd with `f(1) = 1`.
#[derive(Clone)]
pub struct OddShapeFunction {
    name: String,
    map: ShapeMap,
}

impl OddShapeFunction {
    pub fn new(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), map: Arc::new(map) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.map)(x)
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x)
    }

    pub fn cubic() -> Self {
        Self::new("cubic", |x| x * x * x)
    }

    pub fn quintic() -> Self {
        Self::new("quintic", |x: f64| x.powi(5))
    }

    pub fn sine() -> Self {
        Self::new("sine", |x: f64| (std::f64::consts::FRAC_PI_2 * x).sin())
    }

    /// True when `f` is numerically the identity on the validation grid. The
    /// identity is the only linear map allowed by oddness and `f(1) = 1`.
    pub fn is_linear(&self) -> bool {
        grid(CONSTRUCTION_GRID).all(|x| (self.eval(x) - x).abs() <= SHAPE_TOLERANCE)
    }
}

impl fmt::Debug for OddShapeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("OddShapeFunction").field(&self.name).finish()
    }
}

/// identity, cubic, quintic and sine.
pub fn builtin_shapes() -> Vec<OddShapeFunction> {
    vec![
        OddShapeFunction::identity(),
        OddShapeFunction::cubic(),
        OddShapeFunction::quintic(),
        OddShapeFunction::sine(),
    ]
}

pub fn shape_by_name(name: &str) -> Option<OddShapeFunction> {
    builtin_shapes().into_iter().find(|s| s.name() == name)
}

fn grid(points: usize) -> impl Iterator<Item = f64> {
    // (2i − N)/N keeps the grid exactly symmetric about 0
    let last = (points - 1) as f64;
    (0..points).map(move |i| (2.0 * i as f64 - last) / last)
}

/// Outcome of [`validate_shape_function`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeValidation {
    pub shape: String,
    pub grid_points: usize,
    /// `max |f(−x) + f(x)|`.
    pub oddness_violation: f64,
    /// `max (|f(x)| − 1)⁺`.
    pub range_violation: f64,
    /// `|f(1) − 1|`.
    pub endpoint_violation: f64,
    /// Largest `|f(x_{i+1}) − f(x_i)| / Δx` on the grid.
    pub max_grid_slope: f64,
    pub nan_found: bool,
    pub pass: bool,
}

pub fn validate_shape_function(f: &OddShapeFunction, grid_points: usize) -> Result<ShapeValidation> {
    if grid_points < MIN_GRID {
        return Err(LabError::InvalidInput(format!(
            "shape validation needs at least {MIN_GRID} grid points, got {grid_points}"
        )));
    }
    let xs: Vec<f64> = grid(grid_points).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let nan_found = ys.iter().any(|y| !y.is_finite());

    let mut oddness: f64 = 0.0;
    let mut range: f64 = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        // the grid is symmetric, so −x_i is x_{n−1−i}
        oddness = oddness.max((y + ys[grid_points - 1 - i]).abs());
        range = range.max(y.abs() - 1.0);
    }
    let endpoint = (ys[grid_points - 1] - 1.0).abs();
    let dx = 2.0 / (grid_points - 1) as f64;
    let slope = ys.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(0.0, f64::max);

    let pass = !nan_found
        && oddness <= SHAPE_TOLERANCE
        && range <= SHAPE_TOLERANCE
        && endpoint <= SHAPE_TOLERANCE;
    Ok(ShapeValidation {
        shape: f.name().to_string(),
        grid_points,
        oddness_violation: oddness,
        range_violation: range,
        endpoint_violation: endpoint,
        max_grid_slope: slope,
        nan_found,
        pass,
    })
}

type RankOneMap = Arc<dyn Fn(BlochVector) -> f64 + Send + Sync>;

/// A probability assignment `P ↦ p(P)` on qubit projectors.
#[derive(Clone)]
pub enum FrameFunction {
    /// `P ↦ tr(ρP)`.
    Born(DensityOperator),
    /// `P_n ↦ ½[1 + f(m·n)]`.
    OddShape { axis: BlochVector, shape: OddShapeFunction },
    /// An arbitrary rule on rank-1 projectors, with `𝟘 ↦ 0` and `𝟙 ↦ 1`.
    /// Used for probing the checkers with frames that break the axioms.
    RankOne { name: String, map: RankOneMap },
}

pub fn born_frame(rho: DensityOperator) -> FrameFunction {
    FrameFunction::Born(rho)
}

/// Builds `P_n ↦ ½[1 + f(m·n)]`, validating `m` and `f` first.
pub fn odd_frame(axis: BlochVector, shape: OddShapeFunction) -> Result<FrameFunction> {
    let axis = axis.to_unit()?;
    let report = validate_shape_function(&shape, CONSTRUCTION_GRID)?;
    if !report.pass {
        return Err(LabError::InvalidInput(format!(
            "shape '{}' fails validation (oddness {:e}, range {:e}, f(1) {:e}, NaN {})",
            report.shape,
            report.oddness_violation,
            report.range_violation,
            report.endpoint_violation,
            report.nan_found
        )));
    }
    Ok(FrameFunction::OddShape { axis, shape })
}

impl FrameFunction {
    pub fn rank_one(name: impl Into<String>, map: impl Fn(BlochVector) -> f64 + Send + Sync + 'static) -> Self {
        FrameFunction::RankOne { name: name.into(), map: Arc::new(map) }
    }

    pub fn eval(&self, p: QubitProjector) -> f64 {
        match p {
            QubitProjector::Zero => 0.0,
            QubitProjector::Identity => 1.0,
            QubitProjector::RankOne(n) => self.eval_rank_one(n),
        }
    }

    /// `p(P_n)` for a unit vector `n`; the caller guarantees `|n| = 1`.
    #[inline]
    pub fn eval_rank_one(&self, n: BlochVector) -> f64 {
        match self {
            FrameFunction::Born(rho) => born_probability(rho, QubitProjector::RankOne(n)),
            FrameFunction::OddShape { axis, shape } => 0.5 * (1.0 + shape.eval(axis.dot(n))),
            FrameFunction::RankOne { map, .. } => map(n),
        }
    }

    /// Canonical name, e.g. `born:0,0,0.6` or `odd:0,0,1:cubic`.
    pub fn label(&self) -> String {
        match self {
            FrameFunction::Born(rho) => {
                let r = rho.bloch();
                format!("born:{},{},{}", r.x, r.y, r.z)
            }
            FrameFunction::OddShape { axis, shape } => {
                format!("odd:{},{},{}:{}", axis.x, axis.y, axis.z, shape.name())
            }
            FrameFunction::RankOne { name, .. } => name.clone(),
        }
    }

    /// Whether the frame is linear in `P` by construction.
    pub fn is_linear_by_construction(&self) -> bool {
        match self {
            FrameFunction::Born(_) => true,
            FrameFunction::OddShape { shape, .. } => shape.is_linear(),
            FrameFunction::RankOne { .. } => false,
        }
    }

    /// The vector `φ` with `p(P_φ) = 1` that the family singles out, if any:
    /// `r` for a pure Born frame, `m` for an odd-shape frame.
    pub fn eigenstate(&self) -> Option<BlochVector> {
        match self {
            FrameFunction::Born(rho) if rho.is_pure() => Some(rho.bloch()),
            FrameFunction::OddShape { axis, .. } => Some(*axis),
            _ => None,
        }
    }
}

impl fmt::Debug for FrameFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FrameFunction({})", self.label())
    }
}

impl fmt::Display for FrameFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn parse_vector(text: &str) -> Result<BlochVector> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(LabError::InvalidInput(format!(
            "expected three comma-separated components, got '{text}'"
        )));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|e| {
            LabError::InvalidInput(format!("bad vector component '{part}': {e}"))
        })?;
        if !slot.is_finite() {
            return Err(LabError::InvalidInput(format!("non-finite vector component '{part}'")));
        }
    }
    Ok(BlochVector::from(v))
}

/// Parses `born:rx,ry,rz` or `odd:mx,my,mz:shape-name`.
impl FromStr for FrameFunction {
    type Err = LabError;

    fn from_str(spec: &str) -> Result<Self> {
        let mut parts = spec.trim().splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        match kind {
            "born" => {
                let vector = parts.next().ok_or_else(|| {
                    LabError::InvalidInput("born frame needs a Bloch vector".into())
                })?;
                if parts.next().is_some() {
                    return Err(LabError::InvalidInput(format!("trailing fields in '{spec}'")));
                }
                Ok(born_frame(DensityOperator::new(parse_vector(vector)?)?))
            }
            "odd" => {
                let (Some(vector), Some(name)) = (parts.next(), parts.next()) else {
                    return Err(LabError::InvalidInput(format!(
                        "odd frame spec must be odd:mx,my,mz:shape, got '{spec}'"
                    )));
                };
                let shape = shape_by_name(name.trim()).ok_or_else(|| {
                    LabError::InvalidInput(format!("unknown shape '{name}'"))
                })?;
                odd_frame(parse_vector(vector)?, shape)
            }
            other => Err(LabError::InvalidInput(format!(
                "unknown frame kind '{other}' (expected 'born' or 'odd')"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{complement, projector_from_bloch};
    use crate::sampling::{block_rng, unit_vector};

    fn cubic_z() -> FrameFunction {
        odd_frame(BlochVector::Z, OddShapeFunction::cubic()).unwrap()
    }

    #[test]
    fn born_frame_examples() {
        let pure = born_frame(DensityOperator::pure(BlochVector::Z).unwrap());
        assert_eq!(pure.eval(projector_from_bloch(BlochVector::Z).unwrap()), 1.0);
        let mixed = born_frame(DensityOperator::maximally_mixed());
        assert_eq!(mixed.eval_rank_one(BlochVector::new(0.0, 0.6, 0.8)), 0.5);
        let partial = born_frame(DensityOperator::new(BlochVector::new(0.0, 0.0, 0.6)).unwrap());
        assert!((partial.eval_rank_one(BlochVector::Z) - 0.8).abs() < 1e-15);
        assert_eq!(partial.eval(QubitProjector::Zero), 0.0);
        assert_eq!(partial.eval(QubitProjector::Identity), 1.0);
    }

    #[test]
    fn odd_frame_examples() {
        let f = cubic_z();
        // evaluated at m·n = ½
        assert_eq!(f.eval_rank_one(BlochVector::new(0.0, 0.0, 0.5)), 0.5625);
        assert_eq!(f.eval_rank_one(BlochVector::Z), 1.0);
        let identity = odd_frame(BlochVector::Z, OddShapeFunction::identity()).unwrap();
        let born = born_frame(DensityOperator::pure(BlochVector::Z).unwrap());
        assert_eq!(identity.eval_rank_one(BlochVector::X), 0.5);
        assert_eq!(born.eval_rank_one(BlochVector::X), 0.5);
        assert_eq!(f.eval(QubitProjector::Zero), 0.0);
        assert_eq!(f.eval(QubitProjector::Identity), 1.0);
    }

    #[test]
    fn odd_frame_rejects_bad_inputs() {
        assert!(odd_frame(BlochVector::new(0.0, 0.0, 2.0), OddShapeFunction::cubic()).is_err());
        assert!(odd_frame(BlochVector::Z, OddShapeFunction::new("square", |x| x * x)).is_err());
        assert!(odd_frame(BlochVector::Z, OddShapeFunction::new("nan", |x| if x > 0.5 { f64::NAN } else { x })).is_err());
    }

    #[test]
    fn validation_examples() {
        let cubic = validate_shape_function(&OddShapeFunction::cubic(), 1001).unwrap();
        assert!(cubic.pass);
        assert_eq!(cubic.oddness_violation, 0.0);
        assert_eq!(cubic.range_violation, 0.0);
        assert_eq!(cubic.endpoint_violation, 0.0);
        assert!(cubic.max_grid_slope <= 3.0);

        let square = validate_shape_function(&OddShapeFunction::new("square", |x| x * x), 101).unwrap();
        assert!(!square.pass);
        assert_eq!(square.oddness_violation, 2.0);

        let double = validate_shape_function(&OddShapeFunction::new("double", |x| 2.0 * x), 101).unwrap();
        assert!(!double.pass);
        assert_eq!(double.range_violation, 1.0);
        assert_eq!(double.endpoint_violation, 1.0);

        assert!(validate_shape_function(&OddShapeFunction::cubic(), 100).is_err());
    }

    #[test]
    fn builtin_registry() {
        assert_eq!(shape_by_name("cubic").unwrap().eval(-1.0), -1.0);
        assert_eq!(shape_by_name("sine").unwrap().eval(1.0), 1.0);
        assert_eq!(shape_by_name("identity").unwrap().eval(0.3), 0.3);
        assert!(shape_by_name("tanh").is_none());
        for shape in builtin_shapes() {
            assert!(validate_shape_function(&shape, CONSTRUCTION_GRID).unwrap().pass, "{}", shape.name());
        }
        let linear: Vec<bool> = builtin_shapes().iter().map(OddShapeFunction::is_linear).collect();
        assert_eq!(linear, [true, false, false, false]);
    }

    #[test]
    fn spec_strings() {
        let born: FrameFunction = "born:0,0,0.6".parse().unwrap();
        assert_eq!(born.label(), "born:0,0,0.6");
        let odd: FrameFunction = "odd:0,0,1:cubic".parse().unwrap();
        assert_eq!(odd.label(), "odd:0,0,1:cubic");
        let renorm: FrameFunction = "odd:0,0,1.0000000001:sine".parse().unwrap();
        assert_eq!(renorm.label(), "odd:0,0,1:sine");
        for bad in ["odd:0,0,2:cubic", "born:1,1,0", "odd:0,0,1", "odd:0,0,1:tanh", "born:0,0", "born:a,0,0", "gleason:0,0,1", "born:0,0,inf"] {
            assert!(bad.parse::<FrameFunction>().is_err(), "{bad}");
        }
        let roundtrip: FrameFunction = odd.label().parse().unwrap();
        assert_eq!(roundtrip.label(), odd.label());
    }

    #[test]
    fn builtin_frames_obey_complement_range_and_eigenstate() {
        let mut rng = block_rng(21, 0);
        for shape in builtin_shapes() {
            let axis = unit_vector(&mut rng);
            let frame = odd_frame(axis, shape.clone()).unwrap();
            assert!((frame.eval_rank_one(axis) - 1.0).abs() <= 1e-12);
            for _ in 0..20_000 {
                let p = QubitProjector::RankOne(unit_vector(&mut rng));
                let (a, b) = (frame.eval(p), frame.eval(complement(p)));
                assert!((0.0..=1.0).contains(&a));
                assert!((a + b - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_shape_reduces_to_born() {
        let mut rng = block_rng(22, 0);
        for _ in 0..20 {
            let m = unit_vector(&mut rng);
            let odd = odd_frame(m, OddShapeFunction::identity()).unwrap();
            let born = born_frame(DensityOperator::pure(m).unwrap());
            for _ in 0..500 {
                let n = unit_vector(&mut rng);
                assert!((odd.eval_rank_one(n) - born.eval_rank_one(n)).abs() <= 1e-12);
            }
        }
    }
}
