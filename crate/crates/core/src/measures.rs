//! Reflected entropy, mutual information and logarithmic negativity of a
//! bipartite density matrix given in non-orthonormal bases.
//!
//! With `Q_A = R_A Λ_A R_A†` and `Q_B = R_B Λ_B R_B†`, the orthonormal-basis
//! density is `S = √Λ R† P R √Λ` for `R = R_A ⊗ R_B`, `Λ = Λ_A ⊗ Λ_B`.
//! Null directions of the Gram matrices are annihilated by `√Λ`; nothing is
//! ever inverted.

use std::ops::Add;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QentError, Result};
use crate::linalg::{self, entropy_term, CMatrix, HermitianMatrix, Spectrum, CLAMP_TOL};
use crate::statebuilder::NonOrthoDensity;

/// Gram eigenvalues at or below this fraction of the largest are exact zeros.
pub const RANK_EPS: f64 = 1e-12;
/// Slack allowed in `S_R ≥ I`.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Unit-trace tolerance of the orthonormal-basis density.
pub const TRACE_TOL: f64 = 1e-10;

/// The three measures for one state and geometry, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    #[serde(rename = "S_R")]
    pub reflected_entropy: f64,
    #[serde(rename = "I")]
    pub mutual_information: f64,
    #[serde(rename = "E_N")]
    pub log_negativity: f64,
    #[serde(rename = "gap")]
    pub markov_gap: f64,
}

impl MeasureSet {
    pub fn new(reflected_entropy: f64, mutual_information: f64, log_negativity: f64) -> Self {
        Self {
            reflected_entropy,
            mutual_information,
            log_negativity,
            markov_gap: reflected_entropy - mutual_information,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// `(S_R, I, E_N)`.
    pub fn triple(&self) -> [f64; 3] {
        [
            self.reflected_entropy,
            self.mutual_information,
            self.log_negativity,
        ]
    }

    pub fn from_triple(t: [f64; 3]) -> Self {
        Self::new(t[0], t[1], t[2])
    }

    /// Largest component-wise deviation over `(S_R, I, E_N)`.
    pub fn max_abs_diff(&self, other: &MeasureSet) -> f64 {
        self.triple()
            .iter()
            .zip(other.triple())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `S_R ≥ I` and `E_N ≥ 0` up to rounding, all values finite.
    pub fn validate(&self) -> Result<()> {
        if self.triple().iter().any(|v| !v.is_finite()) {
            return Err(QentError::Invariant(format!(
                "non-finite measure in {self:?}"
            )));
        }
        if self.reflected_entropy < self.mutual_information - INEQUALITY_TOL {
            return Err(QentError::Invariant(format!(
                "S_R >= I violated: S_R = {}, I = {}",
                self.reflected_entropy, self.mutual_information
            )));
        }
        if self.log_negativity < -CLAMP_TOL {
            return Err(QentError::Invariant(format!(
                "E_N >= 0 violated: E_N = {}",
                self.log_negativity
            )));
        }
        Ok(())
    }
}

impl Add for MeasureSet {
    type Output = MeasureSet;
    fn add(self, rhs: MeasureSet) -> MeasureSet {
        MeasureSet {
            reflected_entropy: self.reflected_entropy + rhs.reflected_entropy,
            mutual_information: self.mutual_information + rhs.mutual_information,
            log_negativity: self.log_negativity + rhs.log_negativity,
            markov_gap: self.markov_gap + rhs.markov_gap,
        }
    }
}

/// `ρ_AB` in an orthonormal product basis, `d_a d_b` dimensional.
#[derive(Debug, Clone)]
pub struct OrthoDensity {
    s: HermitianMatrix,
    d_a: usize,
    d_b: usize,
}

impl OrthoDensity {
    /// Checks unit trace and positivity.
    pub fn new(s: HermitianMatrix, d_a: usize, d_b: usize) -> Result<Self> {
        if s.dim() != d_a * d_b {
            return Err(QentError::Dimension(format!(
                "density of dimension {} does not factor as {d_a} x {d_b}",
                s.dim()
            )));
        }
        let trace = s.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(QentError::Invariant(format!(
                "trace of rho_AB is {trace}, expected 1"
            )));
        }
        linalg::clamp_nonnegative(&linalg::eigenvalues(&s)?)?;
        Ok(Self { s, d_a, d_b })
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.s
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn reduced_a(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::hermitize(linalg::partial_trace_b(
            self.s.as_matrix(),
            self.d_a,
            self.d_b,
        )?)
    }

    pub fn reduced_b(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::hermitize(linalg::partial_trace_a(
            self.s.as_matrix(),
            self.d_a,
            self.d_b,
        )?)
    }
}

/// `√Λ` with rank-deficient directions set to exactly zero, and `R`.
fn gram_factor(q: &HermitianMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (spectrum, r) = linalg::hermitian_eig(q)?;
    let clamped = linalg::clamp_nonnegative(&spectrum)?;
    let cutoff = RANK_EPS * spectrum.max().max(0.0);
    let roots = clamped
        .into_iter()
        .map(|v| if v <= cutoff { 0.0 } else { v.sqrt() })
        .collect();
    Ok((roots, r))
}

/// `S = √Λ R† P R √Λ`.
pub fn orthonormalize(rho: &NonOrthoDensity) -> Result<OrthoDensity> {
    let (d_a, d_b) = (rho.d_a(), rho.d_b());
    if rho.p.dims() != [d_a, d_b, d_a, d_b] || rho.gram_a.dim() != d_a || rho.gram_b.dim() != d_b {
        return Err(QentError::Dimension(
            "P tensor, bases and Gram matrices disagree in size".into(),
        ));
    }
    let (root_a, r_a) = gram_factor(&rho.gram_a)?;
    let (root_b, r_b) = gram_factor(&rho.gram_b)?;
    let r = linalg::kron(&r_a, &r_b);
    let root: Vec<Complex64> = root_a
        .iter()
        .flat_map(|&a| root_b.iter().map(move |&b| Complex64::new(a * b, 0.0)))
        .collect();
    let root = CMatrix::from_diagonal(&DVector::from_vec(root));
    let p = linalg::reshape4_to_2(&rho.p);
    let s = &root * r.adjoint() * p * &r * &root;
    OrthoDensity::new(HermitianMatrix::hermitize(s)?, d_a, d_b)
}

fn entropy_of(m: &HermitianMatrix) -> Result<f64> {
    linalg::von_neumann_entropy(&linalg::eigenvalues(m)?)
}

/// Entropy of `ρ_AA' = U U†` in the canonical purification.
pub fn reflected_entropy(rho: &OrthoDensity) -> Result<f64> {
    linalg::von_neumann_entropy(&reflected_spectrum(rho)?)
}

/// `I = H(S_A) + H(S_B) - H(S)`.
pub fn mutual_information(rho: &OrthoDensity) -> Result<f64> {
    Ok(entropy_of(&rho.reduced_a()?)? + entropy_of(&rho.reduced_b()?)? - entropy_of(&rho.s)?)
}

/// `E_N = ln tr|S̃|` with `S̃` the partial transpose on B.
pub fn log_negativity(rho: &OrthoDensity) -> Result<f64> {
    let st = linalg::partial_transpose_b(rho.s.as_matrix(), rho.d_a, rho.d_b)?;
    let st = HermitianMatrix::hermitize(st)?;
    Ok(linalg::trace_norm_hermitian(&st)?.ln())
}

/// All three measures, checked against their invariants.
pub fn measure(rho: &OrthoDensity) -> Result<MeasureSet> {
    let m = MeasureSet::new(
        reflected_entropy(rho)?,
        mutual_information(rho)?,
        log_negativity(rho)?,
    );
    m.validate()?;
    Ok(m)
}

/// Full pipeline from a non-orthonormal density.
pub fn measure_state(rho: &NonOrthoDensity) -> Result<MeasureSet> {
    measure(&orthonormalize(rho)?)
}

/// Closed forms for one classical particle found in A with probability `x1`
/// and in B with probability `x2`.
pub fn classical_closed_forms(x1: f64, x2: f64) -> MeasureSet {
    let s = x1 + x2;
    if s <= 0.0 {
        return MeasureSet::zero();
    }
    let p = x1 * x2;
    let root = (s * (s - 4.0 * p)).max(0.0).sqrt();
    let reflected = 2.0 * entropy_term(p / s)
        + entropy_term((s - 2.0 * p + root) / (2.0 * s))
        + entropy_term((s - 2.0 * p - root) / (2.0 * s));
    let mutual =
        entropy_term(x1) + entropy_term(1.0 - x1) + entropy_term(x2) + entropy_term(1.0 - x2)
            - entropy_term(s)
            - entropy_term(1.0 - s);
    let negativity = (s + ((1.0 - s).powi(2) + 4.0 * p).sqrt()).ln();
    MeasureSet::new(reflected, mutual, negativity)
}

/// Eigenvalues of `ρ_AA' = U U†`, where `U_{ij,αβ} = [√S]_{iα,jβ}`.
pub fn reflected_spectrum(rho: &OrthoDensity) -> Result<Spectrum> {
    let t = linalg::psd_sqrt(&rho.s)?;
    let u = linalg::reorder_u(t.as_matrix(), rho.d_a, rho.d_b)?;
    linalg::eigenvalues(&HermitianMatrix::hermitize(&u * u.adjoint())?)
}
