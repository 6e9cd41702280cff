//! Frame functions on a qutrit.
//!
//! In dimension three a frame must sum to one over every orthonormal basis,
//! not only over complementary pairs. The Born frame does. The qutrit
//! analogue of the odd-shape construction,
//! `q(ψ) = ⅓ + κ f(s·(⟨ψ|ρ₀|ψ⟩ − ⅓))`, does not once `f` is nonlinear, and a
//! random search over bases finds the violation quickly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::frames::{validate_shape_function, OddShapeFunction, CONSTRUCTION_GRID};
use crate::report::{MaxTracker, PropertyReport, WitnessData};
use crate::sampling::{block_rng, map_blocks, MIN_DRAW_NORM};

pub const NORM_TOLERANCE: f64 = 1e-12;
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// A basis whose frame values miss 1 by more than this is a witness.
pub const WITNESS_THRESHOLD: f64 = 0.01;

const THIRD: f64 = 1.0 / 3.0;

type C = Complex64;
type Matrix3 = [[C; 3]; 3];

fn czero() -> C {
    C::new(0.0, 0.0)
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
fn inner(a: &[C; 3], b: &[C; 3]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C; 3]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// A unit vector of ℂ³. Global phase carries no meaning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexUnitVector3([C; 3]);

impl ComplexUnitVector3 {
    pub fn new(components: [C; 3]) -> Result<Self> {
        let n2 = norm_sqr(&components);
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOLERANCE {
            return Err(LabError::InvalidInput(format!("squared norm {n2} is not 1")));
        }
        Ok(Self(components))
    }

    /// Scales a non-zero vector to unit length.
    pub fn normalized(components: [C; 3]) -> Result<Self> {
        let n = norm_sqr(&components).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(LabError::InvalidInput("cannot normalize a zero vector".into()));
        }
        Ok(Self(components.map(|x| x / n)))
    }

    /// The standard basis vector `e_k`.
    pub fn basis(k: usize) -> Self {
        let mut v = [czero(); 3];
        v[k] = C::new(1.0, 0.0);
        Self(v)
    }

    pub fn components(&self) -> &[C; 3] {
        &self.0
    }

    pub fn inner(&self, other: &ComplexUnitVector3) -> C {
        inner(&self.0, &other.0)
    }

    /// `[[re, im]; 3]`, the serialized form.
    pub fn to_pairs(&self) -> [[f64; 2]; 3] {
        self.0.map(|x| [x.re, x.im])
    }
}

/// Density operator on ℂ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator3 {
    m: Matrix3,
}

impl DensityOperator3 {
    pub fn new(m: Matrix3) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                let skew = (m[i][j] - m[j][i].conj()).norm();
                if !(skew <= HERMITIAN_TOLERANCE) {
                    return Err(LabError::InvalidInput(format!(
                        "matrix is not Hermitian: entry ({i},{j}) differs from its mirror by {skew}"
                    )));
                }
            }
        }
        let trace: f64 = (0..3).map(|i| m[i][i].re).sum();
        if (trace - 1.0).abs() > HERMITIAN_TOLERANCE {
            return Err(LabError::InvalidInput(format!("trace {trace} is not 1")));
        }
        let rho = Self { m };
        let [low, _, _] = rho.eigenvalues();
        if low < EIGENVALUE_FLOOR {
            return Err(LabError::InvalidInput(format!("negative eigenvalue {low}")));
        }
        Ok(rho)
    }

    pub fn maximally_mixed() -> Self {
        Self::diagonal([THIRD; 3]).expect("I/3 is a density operator")
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        let mut m = [[czero(); 3]; 3];
        for i in 0..3 {
            m[i][i] = C::new(d[i], 0.0);
        }
        Self::new(m)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &ComplexUnitVector3) -> Self {
        let v = psi.components();
        let mut m = [[czero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = v[i] * v[j].conj();
            }
        }
        Self { m }
    }

    /// `G G† / tr(G G†)` for a complex Gaussian `G`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let g: Matrix3 = std::array::from_fn(|_| std::array::from_fn(|_| complex_gaussian(rng)));
            let mut m = [[czero(); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = (0..3).map(|k| g[i][k] * g[j][k].conj()).sum();
                }
            }
            let trace: f64 = (0..3).map(|i| m[i][i].re).sum();
            if trace < MIN_DRAW_NORM {
                continue;
            }
            for row in m.iter_mut() {
                for x in row.iter_mut() {
                    *x /= trace;
                }
            }
            // symmetrize away round-off
            for i in 0..3 {
                m[i][i].im = 0.0;
                for j in i + 1..3 {
                    m[j][i] = m[i][j].conj();
                }
            }
            if let Ok(rho) = Self::new(m) {
                return rho;
            }
        }
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        hermitian_eigenvalues(&self.m)
    }

    /// `⟨ψ|ρ|ψ⟩` without clamping.
    pub fn expectation(&self, psi: &ComplexUnitVector3) -> C {
        let v = psi.components();
        let mut rv = [czero(); 3];
        for i in 0..3 {
            rv[i] = (0..3).map(|j| self.m[i][j] * v[j]).sum();
        }
        inner(v, &rv)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C {
    C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Cyclic Jacobi on the real embedding `[[Re A, −Im A], [Im A, Re A]]`,
/// whose spectrum is that of `A` with every eigenvalue doubled.
fn hermitian_eigenvalues(a: &Matrix3) -> [f64; 3] {
    const N: usize = 6;
    let mut m = [[0.0f64; N]; N];
    for i in 0..3 {
        for j in 0..3 {
            let (re, im) = (0.5 * (a[i][j].re + a[j][i].re), 0.5 * (a[i][j].im - a[j][i].im));
            m[i][j] = re;
            m[i + 3][j + 3] = re;
            m[i + 3][j] = im;
            m[i][j + 3] = -im;
        }
    }
    for _sweep in 0..64 {
        let off: f64 = (0..N).flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let diag: f64 = (0..N).map(|i| m[i][i] * m[i][i]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..N - 1 {
            for q in p + 1..N {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..N).map(|i| m[i][i]).collect();
    d.sort_by(f64::total_cmp);
    [0.5 * (d[0] + d[1]), 0.5 * (d[2] + d[3]), 0.5 * (d[4] + d[5])]
}

/// Three mutually orthogonal unit vectors of ℂ³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalBasis3([ComplexUnitVector3; 3]);

impl OrthonormalBasis3 {
    pub fn new(vectors: [ComplexUnitVector3; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in i + 1..3 {
                let overlap = vectors[i].inner(&vectors[j]).norm();
                if overlap > ORTHOGONALITY_TOLERANCE {
                    return Err(LabError::InvalidInput(format!(
                        "basis vectors {i} and {j} overlap by {overlap}"
                    )));
                }
            }
        }
        Ok(Self(vectors))
    }

    pub fn standard() -> Self {
        Self([0, 1, 2].map(ComplexUnitVector3::basis))
    }

    pub fn vectors(&self) -> &[ComplexUnitVector3; 3] {
        &self.0
    }

    pub fn to_pairs(&self) -> Vec<[[f64; 2]; 3]> {
        self.0.iter().map(ComplexUnitVector3::to_pairs).collect()
    }
}

/// Gram–Schmidt (with one reorthogonalization pass) on complex Gaussian
/// vectors, redrawing whenever an intermediate norm drops below `1e-6`.
pub fn random_orthonormal_basis_with<R: Rng + ?Sized>(rng: &mut R) -> OrthonormalBasis3 {
    'draw: loop {
        let mut out: Vec<[C; 3]> = Vec::with_capacity(3);
        for _ in 0..3 {
            let mut v: [C; 3] = std::array::from_fn(|_| complex_gaussian(rng));
            for _ in 0..2 {
                for u in &out {
                    let c = inner(u, &v);
                    for k in 0..3 {
                        v[k] -= c * u[k];
                    }
                }
            }
            let n = norm_sqr(&v).sqrt();
            if n < MIN_DRAW_NORM {
                continue 'draw;
            }
            out.push(v.map(|x| x / n));
        }
        let vectors = [out[0], out[1], out[2]].map(ComplexUnitVector3);
        if let Ok(basis) = OrthonormalBasis3::new(vectors) {
            return basis;
        }
    }
}

pub fn random_orthonormal_basis(seed: u64) -> OrthonormalBasis3 {
    random_orthonormal_basis_with(&mut block_rng(seed, 0))
}

pub fn random_density_operator3(seed: u64) -> DensityOperator3 {
    DensityOperator3::random(&mut block_rng(seed, 0))
}

/// `⟨ψ|ρ|ψ⟩`, clamped to `[0, 1]`.
pub fn born_probability_d3(rho: &DensityOperator3, psi: &ComplexUnitVector3) -> f64 {
    rho.expectation(psi).re.clamp(0.0, 1.0)
}

/// `q(ψ) = ⅓ + κ f(s·(⟨ψ|ρ₀|ψ⟩ − ⅓))`.
///
/// The stretch `s` maps the attainable range `[λ_min − ⅓, λ_max − ⅓]` into
/// `[−1, 1]`; `κ` keeps `q` inside `[0, 1]`.
#[derive(Debug, Clone)]
pub struct OddAnalogue3 {
    rho0: DensityOperator3,
    shape: OddShapeFunction,
    kappa: f64,
    stretch: f64,
}

impl OddAnalogue3 {
    /// Default scales: `s = 1 / max|λ − ⅓|` and `κ` half the largest value
    /// that keeps `q` in `[0, 1]`.
    pub fn new(rho0: DensityOperator3, shape: OddShapeFunction) -> Result<Self> {
        let spread = Self::spread(&rho0);
        let stretch = if spread > 0.0 { 1.0 / spread } else { 1.0 };
        let kappa = 0.5 * Self::max_kappa(&rho0, &shape, stretch);
        Self::with_scales(rho0, shape, kappa, stretch)
    }

    pub fn with_scales(rho0: DensityOperator3, shape: OddShapeFunction, kappa: f64, stretch: f64) -> Result<Self> {
        let validation = validate_shape_function(&shape, CONSTRUCTION_GRID)?;
        if !validation.pass {
            return Err(LabError::InvalidInput(format!("shape '{}' fails validation", shape.name())));
        }
        if !(stretch > 0.0) || stretch * Self::spread(&rho0) > 1.0 + 1e-12 {
            return Err(LabError::InvalidInput(format!(
                "stretch {stretch} takes the argument of f outside [−1, 1]"
            )));
        }
        let limit = Self::max_kappa(&rho0, &shape, stretch);
        if !(kappa >= 0.0) || kappa > limit * (1.0 + 1e-12) {
            return Err(LabError::InvalidInput(format!(
                "scale κ = {kappa} pushes q outside [0, 1] (limit {limit})"
            )));
        }
        Ok(Self { rho0, shape, kappa, stretch })
    }

    fn spread(rho0: &DensityOperator3) -> f64 {
        let [low, _, high] = rho0.eigenvalues();
        (high - THIRD).max(THIRD - low).max(0.0)
    }

    /// Largest `κ` with `⅓ + κ f(s·y) ∈ [0, 1]` on a dense grid of the attainable `y`.
    fn max_kappa(rho0: &DensityOperator3, shape: &OddShapeFunction, stretch: f64) -> f64 {
        let [low, _, high] = rho0.eigenvalues();
        let (a, b) = ((low - THIRD) * stretch, (high - THIRD) * stretch);
        let (mut up, mut down) = (0.0f64, 0.0f64);
        for i in 0..CONSTRUCTION_GRID {
            let x = (a + (b - a) * i as f64 / (CONSTRUCTION_GRID - 1) as f64).clamp(-1.0, 1.0);
            let y = shape.eval(x);
            up = up.max(y);
            down = down.max(-y);
        }
        let from_up = if up > 0.0 { (1.0 - THIRD) / up } else { f64::INFINITY };
        let from_down = if down > 0.0 { THIRD / down } else { f64::INFINITY };
        let limit = from_up.min(from_down);
        if limit.is_finite() { limit } else { 1.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn shape(&self) -> &OddShapeFunction {
        &self.shape
    }

    pub fn eval(&self, psi: &ComplexUnitVector3) -> f64 {
        let y = self.rho0.expectation(psi).re - THIRD;
        THIRD + self.kappa * self.shape.eval((self.stretch * y).clamp(-1.0, 1.0))
    }
}

/// A probability assignment on rank-1 qutrit projectors.
#[derive(Debug, Clone)]
pub enum Frame3 {
    Born(DensityOperator3),
    Constant(f64),
    OddAnalogue(OddAnalogue3),
}

impl Frame3 {
    pub fn eval(&self, psi: &ComplexUnitVector3) -> f64 {
        match self {
            Frame3::Born(rho) => born_probability_d3(rho, psi),
            Frame3::Constant(c) => *c,
            Frame3::OddAnalogue(q) => q.eval(psi),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Frame3::Born(_) => "born-d3".into(),
            Frame3::Constant(c) => format!("constant-d3:{c}"),
            Frame3::OddAnalogue(q) => format!("odd-analogue-d3:{}", q.shape.name()),
        }
    }
}

fn basis_deviation(frame: &Frame3, basis: &OrthonormalBasis3) -> ([f64; 3], f64) {
    let values = basis.vectors().map(|v| frame.eval(&v));
    let deviation = (values.iter().sum::<f64>() - 1.0).abs();
    (values, deviation)
}

/// `max |Σ_k p(e_k) − 1|` over seeded random orthonormal bases.
pub fn check_basis_additivity(frame: &Frame3, bases: usize, seed: u64, tol: f64) -> PropertyReport {
    let partials = map_blocks(bases, seed, |range, rng| {
        let mut worst = MaxTracker::default();
        for _ in range {
            let basis = random_orthonormal_basis_with(rng);
            let (_, deviation) = basis_deviation(frame, &basis);
            worst.offer(deviation, || basis);
        }
        worst
    });
    let mut worst = MaxTracker::default();
    for part in partials {
        worst.merge(part);
    }
    let witness = worst.witness.map(|b| WitnessData::ComplexBasis { basis: b.to_pairs() });
    PropertyReport::new(format!("basis_additivity[{}]", frame.name()), bases, seed, worst.value, tol, witness)
}

/// An orthonormal basis on which a qutrit frame does not sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QutritWitness {
    pub basis: Vec<[[f64; 2]; 3]>,
    pub values: [f64; 3],
    pub deviation: f64,
    pub trial: usize,
}

/// First basis, in trial order, whose values under `frame` miss 1 by more than `threshold`.
pub fn basis_violation_search(frame: &Frame3, trials: usize, seed: u64, threshold: f64) -> Option<QutritWitness> {
    let blocks = map_blocks(trials, seed, |range, rng| {
        for trial in range {
            let basis = random_orthonormal_basis_with(rng);
            let (values, deviation) = basis_deviation(frame, &basis);
            if deviation > threshold {
                return Some(QutritWitness { basis: basis.to_pairs(), values, deviation, trial });
            }
        }
        None
    });
    blocks.into_iter().flatten().next()
}

/// Searches for a basis breaking additivity for the default-scaled analogue
/// of the odd-shape frame built on `rho0` and `f`.
pub fn nonlinear_d3_witness(
    rho0: &DensityOperator3,
    f: &OddShapeFunction,
    trials: usize,
    seed: u64,
) -> Result<Option<QutritWitness>> {
    let frame = Frame3::OddAnalogue(OddAnalogue3::new(*rho0, f.clone())?);
    Ok(basis_violation_search(&frame, trials, seed, WITNESS_THRESHOLD))
}
