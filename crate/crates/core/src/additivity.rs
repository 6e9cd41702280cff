//! Orthogonal additivity of real functions on ℝ³ and ℝ⁴.
//!
//! A continuous `g` on all of ℝᵈ with `g(u + v) = g(u) + g(v)` whenever
//! `u·v = 0` has the form `g(v) = a v·v + b·v` (Gudder). The hypothesis is
//! about `g` on the whole space. A qubit frame is only known on unit Bloch
//! vectors, where two orthogonal unit vectors sum to a vector of length √2
//! off the sphere, so the hypothesis cannot even be stated for it.
//! [`GudderFunction::FrameRestriction`] carries that domain restriction and
//! every routine that needs a total function refuses it.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::frames::FrameFunction;
use crate::linalg::NormalEquations;
use crate::linearity::{check_continuity, fit_on_sphere, ContinuityReport, VERDICT_TOLERANCE};
use crate::qubit::BlochVector;
use crate::report::{MaxTracker, PropertyReport, WitnessData};
use crate::sampling::{gaussian_vec, map_blocks, MIN_DRAW_NORM};

pub const SUPPORTED_DIMS: [usize; 2] = [3, 4];
/// Magnitudes of sampled orthogonal pairs lie in `(0, MAX_PAIR_MAGNITUDE]`.
pub const MAX_PAIR_MAGNITUDE: f64 = 2.0;
/// Separation used by the continuity part of [`sphere_restriction_demo`].
pub const DEMO_SEPARATION: f64 = 0.5;

type VectorMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum GudderFunction {
    /// `g(v) = a v·v + b·v`, total on ℝᵈ with `d = b.len()`.
    QuadLinear { a: f64, b: Vec<f64> },
    /// `n ↦ p(P_n)`, defined only on unit vectors of ℝ³.
    FrameRestriction(FrameFunction),
    /// A user-supplied total function on ℝᵈ.
    UserSupplied { name: String, dim: usize, map: VectorMap },
}

impl GudderFunction {
    pub fn quad_linear(a: f64, b: Vec<f64>) -> Self {
        GudderFunction::QuadLinear { a, b }
    }

    pub fn user(name: impl Into<String>, dim: usize, map: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        GudderFunction::UserSupplied { name: name.into(), dim, map: Arc::new(map) }
    }

    pub fn name(&self) -> String {
        match self {
            GudderFunction::QuadLinear { a, b } => format!("quad-linear(a={a}, b={b:?})"),
            GudderFunction::FrameRestriction(frame) => format!("sphere-restriction({frame})"),
            GudderFunction::UserSupplied { name, .. } => name.clone(),
        }
    }

    /// Evaluates `g(v)`. A frame restriction accepts only unit 3-vectors.
    pub fn eval(&self, v: &[f64]) -> Result<f64> {
        match self {
            GudderFunction::FrameRestriction(frame) => {
                if v.len() != 3 {
                    return Err(LabError::Domain(format!(
                        "a frame restriction lives on unit 3-vectors, got dimension {}",
                        v.len()
                    )));
                }
                let n = BlochVector::new(v[0], v[1], v[2]);
                let n = n.to_unit().map_err(|_| {
                    LabError::Domain(format!("a frame restriction is undefined off the unit sphere (|v| = {})", n.norm()))
                })?;
                Ok(frame.eval_rank_one(n))
            }
            _ => {
                let total = self.as_total(v.len())?;
                Ok(total.eval(v))
            }
        }
    }

    /// The function as a total map on ℝ^dim, or a domain error for a frame restriction.
    pub fn as_total(&self, dim: usize) -> Result<TotalFunction<'_>> {
        if !SUPPORTED_DIMS.contains(&dim) {
            return Err(LabError::InvalidInput(format!("dimension must be 3 or 4, got {dim}")));
        }
        if let GudderFunction::FrameRestriction(_) = self {
            return Err(LabError::Domain(
                "a frame function is only defined on unit Bloch vectors; orthogonal u, v give |u + v| = √2 \
                 off the sphere, so additivity over ℝ³ or ℝ⁴ cannot be evaluated"
                    .into(),
            ));
        }
        if self.declared_dim() != Some(dim) {
            return Err(LabError::InvalidInput(format!(
                "{} is defined on dimension {:?}, not {dim}",
                self.name(),
                self.declared_dim()
            )));
        }
        Ok(TotalFunction { inner: self, dim })
    }

    fn declared_dim(&self) -> Option<usize> {
        match self {
            GudderFunction::QuadLinear { b, .. } => Some(b.len()),
            GudderFunction::UserSupplied { dim, .. } => Some(*dim),
            GudderFunction::FrameRestriction(_) => Some(3),
        }
    }
}

impl fmt::Debug for GudderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GudderFunction({})", self.name())
    }
}

/// A [`GudderFunction`] known to be defined on all of ℝ^dim.
#[derive(Clone, Copy)]
pub struct TotalFunction<'a> {
    inner: &'a GudderFunction,
    dim: usize,
}

impl TotalFunction<'_> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        match self.inner {
            GudderFunction::QuadLinear { a, b } => quad_linear_value(*a, b, v),
            GudderFunction::UserSupplied { map, .. } => map(v),
            GudderFunction::FrameRestriction(_) => unreachable!("frame restrictions are never total"),
        }
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn quad_linear_value(a: f64, b: &[f64], v: &[f64]) -> f64 {
    a * dot(v, v) + dot(b, v)
}

/// `a(v·v) + b·v`.
pub fn quad_linear_eval(a: f64, b: &[f64], v: &[f64]) -> Result<f64> {
    if b.len() != v.len() {
        return Err(LabError::InvalidInput(format!(
            "dimension mismatch: b has {} components, v has {}",
            b.len(),
            v.len()
        )));
    }
    Ok(quad_linear_value(a, b, v))
}

fn scaled_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize, against: Option<&[f64]>) -> Vec<f64> {
    loop {
        let mut g = gaussian_vec(rng, dim);
        if let Some(u) = against {
            // u is a unit vector; the second pass restores orthogonality lost to cancellation
            for _ in 0..2 {
                let proj = dot(&g, u);
                for (gi, ui) in g.iter_mut().zip(u) {
                    *gi -= proj * ui;
                }
            }
        }
        let norm = dot(&g, &g).sqrt();
        if norm >= MIN_DRAW_NORM {
            return g.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Orthogonal pair `(u, v)` with magnitudes in `(0, 2]`, by Gram–Schmidt on Gaussian draws.
pub fn orthogonal_pair<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let u_hat = scaled_direction(rng, dim, None);
    let v_hat = scaled_direction(rng, dim, Some(&u_hat));
    let su = MAX_PAIR_MAGNITUDE * (1.0 - rng.gen::<f64>());
    let sv = MAX_PAIR_MAGNITUDE * (1.0 - rng.gen::<f64>());
    (
        u_hat.iter().map(|x| x * su).collect(),
        v_hat.iter().map(|x| x * sv).collect(),
    )
}

/// `max |g(u + v) − g(u) − g(v)|` over seeded orthogonal pairs in ℝ^dim.
pub fn check_orthogonal_additivity_vec(
    g: &GudderFunction,
    dim: usize,
    pairs: usize,
    seed: u64,
    tol: f64,
) -> Result<PropertyReport> {
    let total = g.as_total(dim)?;
    let partials = map_blocks(pairs, seed, |range, rng| {
        let mut worst = MaxTracker::default();
        for _ in range {
            let (u, v) = orthogonal_pair(rng, dim);
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let violation = (total.eval(&sum) - total.eval(&u) - total.eval(&v)).abs();
            worst.offer(violation, || vec![u.clone(), v.clone()]);
        }
        worst
    });
    let mut worst = MaxTracker::default();
    for part in partials {
        worst.merge(part);
    }
    let witness = worst.witness.map(|vectors| WitnessData::RealVectors { vectors });
    Ok(PropertyReport::new(
        format!("orthogonal_additivity[{}; dim {dim}]", g.name()),
        pairs,
        seed,
        worst.value,
        tol,
        witness,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadLinearFit {
    pub a_hat: f64,
    pub b_hat: Vec<f64>,
    pub rms_residual: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Least squares of `g(v)` on `a(v·v) + b·v` over standard Gaussian `v ∈ ℝ^dim`.
pub fn fit_quad_linear(g: &GudderFunction, dim: usize, samples: usize, seed: u64) -> Result<QuadLinearFit> {
    let total = g.as_total(dim)?;
    let min = 10 * (dim + 1);
    if samples < min {
        return Err(LabError::InvalidInput(format!(
            "quadratic-plus-linear fit in dimension {dim} needs at least {min} samples, got {samples}"
        )));
    }
    let features = |v: &[f64]| {
        let mut f = Vec::with_capacity(dim + 1);
        f.push(dot(v, v));
        f.extend_from_slice(v);
        f
    };
    let partials = map_blocks(samples, seed, |range, rng| {
        let mut eq = NormalEquations::new(dim + 1);
        for _ in range {
            let v = gaussian_vec(rng, dim);
            eq.push(&features(&v), total.eval(&v));
        }
        eq
    });
    let mut eq = NormalEquations::new(dim + 1);
    for part in &partials {
        eq.merge(part);
    }
    let beta = eq.solve()?;
    let sq: f64 = map_blocks(samples, seed, |range, rng| {
        range
            .map(|_| {
                let v = gaussian_vec(rng, dim);
                let r = total.eval(&v) - dot(&features(&v), &beta);
                r * r
            })
            .sum::<f64>()
    })
    .into_iter()
    .sum();
    Ok(QuadLinearFit {
        a_hat: beta[0],
        b_hat: beta[1..].to_vec(),
        rms_residual: (sq / samples as f64).sqrt(),
        samples,
        seed,
    })
}

/// Result of fitting `a + b·n` to a frame on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedFit {
    pub a_hat: f64,
    pub b_hat: BlochVector,
    /// `max_violation` is the rms residual; tolerance is the verdict tolerance.
    pub report: PropertyReport,
}

/// The three findings that together locate the gap in a Gudder-style argument
/// for qubits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereRestrictionReport {
    pub frame: String,
    /// The frame is continuous in the Bloch vector.
    pub continuity: ContinuityReport,
    /// The error raised when orthogonal additivity over ℝ³ is requested.
    pub domain_error: Option<String>,
    /// On the sphere `a v·v + b·v` is `a + b·n`; this is the best such fit.
    pub restricted_fit: RestrictedFit,
    /// Continuous, refused by the additivity check, and not of the form `a + b·n`.
    pub flaw_exhibited: bool,
}

pub fn sphere_restriction_demo(frame: &FrameFunction, samples: usize, seed: u64) -> Result<SphereRestrictionReport> {
    let continuity = check_continuity(frame, samples, seed, DEMO_SEPARATION)?;
    let restricted = GudderFunction::FrameRestriction(frame.clone());
    let domain_error = match check_orthogonal_additivity_vec(&restricted, 3, samples, seed, VERDICT_TOLERANCE) {
        Err(e @ LabError::Domain(_)) => Some(e.to_string()),
        Err(other) => return Err(other),
        Ok(_) => None,
    };
    let fit = fit_on_sphere(frame, samples, seed, |n| [1.0, n.x, n.y, n.z])?;
    let report = PropertyReport::new("sphere_gudder_form", samples, seed, fit.rms, VERDICT_TOLERANCE, None)
        .with_note("model a + b·n, the unit-sphere restriction of a v·v + b·v");
    let restricted_fit = RestrictedFit {
        a_hat: fit.beta[0],
        b_hat: BlochVector::new(fit.beta[1], fit.beta[2], fit.beta[3]),
        report,
    };
    let flaw_exhibited = continuity.report.pass && domain_error.is_some() && !restricted_fit.report.pass;
    Ok(SphereRestrictionReport {
        frame: frame.label(),
        continuity,
        domain_error,
        restricted_fit,
        flaw_exhibited,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{born_frame, odd_frame, OddShapeFunction};
    use crate::qubit::DensityOperator;
    use crate::sampling::block_rng;

    fn cube_norm(dim: usize) -> GudderFunction {
        GudderFunction::user("norm-cubed", dim, |v| dot(v, v).powf(1.5))
    }

    #[test]
    fn quad_linear_examples() {
        assert_eq!(quad_linear_eval(1.0, &[0.0; 3], &[1.0, 2.0, 2.0]).unwrap(), 9.0);
        assert_eq!(quad_linear_eval(0.0, &[1.0, 0.0, 0.0], &[3.0, 4.0, 0.0]).unwrap(), 3.0);
        assert_eq!(quad_linear_eval(2.0, &[1.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap(), 3.0);
        assert!(quad_linear_eval(2.0, &[1.0; 4], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn orthogonal_pairs_are_orthogonal() {
        let mut rng = block_rng(4, 0);
        for dim in SUPPORTED_DIMS {
            for _ in 0..1000 {
                let (u, v) = orthogonal_pair(&mut rng, dim);
                assert!(dot(&u, &v).abs() < 1e-14);
                let (nu, nv) = (dot(&u, &u).sqrt(), dot(&v, &v).sqrt());
                assert!(nu > 0.0 && nu <= 2.0 + 1e-15);
                assert!(nv > 0.0 && nv <= 2.0 + 1e-15);
            }
        }
    }

    #[test]
    fn additivity_examples() {
        let g = GudderFunction::quad_linear(0.7, vec![1.0, 2.0, 3.0, -1.0]);
        assert!(check_orthogonal_additivity_vec(&g, 4, 10_000, 1, 1e-12).unwrap().pass);

        let cubed = cube_norm(3);
        let e1_e2 = (cubed.eval(&[1.0, 1.0, 0.0]).unwrap(), cubed.eval(&[1.0, 0.0, 0.0]).unwrap());
        assert!((e1_e2.0 - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(e1_e2.1, 1.0);
        let report = check_orthogonal_additivity_vec(&cubed, 3, 1_000, 1, 1e-12).unwrap();
        assert!(!report.pass);

        let cubic = odd_frame(BlochVector::Z, OddShapeFunction::cubic()).unwrap();
        let restricted = GudderFunction::FrameRestriction(cubic);
        assert!(matches!(check_orthogonal_additivity_vec(&restricted, 3, 10, 1, 1e-12), Err(LabError::Domain(_))));
        assert!(matches!(fit_quad_linear(&restricted, 3, 100, 1), Err(LabError::Domain(_))));
    }

    #[test]
    fn frame_restriction_lives_on_the_sphere() {
        let cubic = odd_frame(BlochVector::Z, OddShapeFunction::cubic()).unwrap();
        let restricted = GudderFunction::FrameRestriction(cubic);
        assert_eq!(restricted.eval(&[0.0, 0.0, 1.0]).unwrap(), 1.0);
        // e_x + e_z has length √2
        assert!(matches!(restricted.eval(&[1.0, 0.0, 1.0]), Err(LabError::Domain(_))));
        assert!(matches!(restricted.eval(&[1.0, 0.0, 0.0, 0.0]), Err(LabError::Domain(_))));
    }

    #[test]
    fn dimension_checks() {
        let g = GudderFunction::quad_linear(1.0, vec![0.0; 3]);
        assert!(g.as_total(4).is_err());
        assert!(g.as_total(5).is_err());
        assert!(check_orthogonal_additivity_vec(&g, 2, 10, 1, 1e-12).is_err());
    }

    #[test]
    fn fit_examples() {
        let g = GudderFunction::quad_linear(0.7, vec![1.0, 2.0, 3.0]);
        let fit = fit_quad_linear(&g, 3, 10_000, 2).unwrap();
        assert!((fit.a_hat - 0.7).abs() < 1e-9);
        for (b, truth) in fit.b_hat.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - truth).abs() < 1e-9);
        }
        assert!(fit.rms_residual < 1e-9);

        let zero = GudderFunction::quad_linear(0.0, vec![0.0; 4]);
        let fit = fit_quad_linear(&zero, 4, 1_000, 2).unwrap();
        assert_eq!(fit.a_hat, 0.0);
        assert!(fit.b_hat.iter().all(|&b| b == 0.0));
        assert_eq!(fit.rms_residual, 0.0);

        assert!(fit_quad_linear(&g, 3, 39, 2).is_err());
    }

    /// `E‖v‖ᵏ = 2^{k/2} Γ((3+k)/2) / Γ(3/2)` for standard Gaussian `v ∈ ℝ³`.
    /// By symmetry `b = 0`, so the best `a` is `E‖v‖⁵ / E‖v‖⁴` and the squared
    /// residual is `E‖v‖⁶ − (E‖v‖⁵)² / E‖v‖⁴`.
    fn norm_cubed_residual_oracle() -> f64 {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let gamma_three_halves = sqrt_pi / 2.0;
        let m4 = 4.0 * (2.5 * 1.5 * gamma_three_halves) / gamma_three_halves; // 15
        let m5 = 2f64.powf(2.5) * 6.0 / gamma_three_halves;
        let m6 = 8.0 * (3.5 * 2.5 * 1.5 * gamma_three_halves) / gamma_three_halves; // 105
        (m6 - m5 * m5 / m4).sqrt()
    }

    #[test]
    fn norm_cubed_has_no_quad_linear_form() {
        let oracle = norm_cubed_residual_oracle();
        assert!((oracle - 2.6865).abs() < 1e-3);
        let fit = fit_quad_linear(&cube_norm(3), 3, 200_000, 6).unwrap();
        assert!((fit.rms_residual - oracle).abs() / oracle < 0.05, "{} vs {oracle}", fit.rms_residual);
        assert!(fit.b_hat.iter().all(|b| b.abs() < 0.05));
    }

    #[test]
    fn sphere_demo_for_born_and_cubic() {
        let r = BlochVector::new(0.2, 0.3, 0.1);
        let born = born_frame(DensityOperator::new(r).unwrap());
        let demo = sphere_restriction_demo(&born, 20_000, 9).unwrap();
        assert!(demo.restricted_fit.report.max_violation <= 1e-9);
        assert!(demo.restricted_fit.b_hat.distance(r.scale(0.5)) <= 1e-3);
        assert!(demo.domain_error.is_some());
        assert!(!demo.flaw_exhibited);

        let cubic = odd_frame(BlochVector::Z, OddShapeFunction::cubic()).unwrap();
        let demo = sphere_restriction_demo(&cubic, 20_000, 9).unwrap();
        assert!((demo.restricted_fit.report.max_violation - 1.0 / 175f64.sqrt()).abs() < 2e-3);
        assert!(demo.flaw_exhibited);
    }
}
