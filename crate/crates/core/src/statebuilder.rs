//! Density matrices of `ρ_AB` in non-orthonormal subsystem bases.
//!
//! A quasiparticle state `|K⟩` expands as a sum of products
//! `b†_{A,K_A} b†_{B,K_B} b†_{C,K_C} |G⟩` over all splittings of K. Tracing out
//! C leaves `ρ_AB = Σ P_{iα,jβ} |φ^A_i φ^B_α⟩⟨φ^A_j φ^B_β|` with the C overlaps
//! folded into P.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{bosonic_coefficient, fermionic_sign, MomentumMultiset, Splitting};
use crate::error::{QentError, Result};
use crate::linalg::{self, HermitianMatrix, Tensor4};
use crate::measures::MeasureSet;
use crate::model::{gram_matrix, Block, Geometry, Statistics};

/// Physical trace tolerance.
pub const TRACE_TOL: f64 = 1e-10;

/// `ρ_AB` as a coefficient tensor over labeled non-orthonormal bases.
#[derive(Debug, Clone)]
pub struct NonOrthoDensity {
    pub basis_a: Vec<MomentumMultiset>,
    pub basis_b: Vec<MomentumMultiset>,
    /// Indexed `(i, α, j, β)`.
    pub p: Tensor4,
    pub gram_a: HermitianMatrix,
    pub gram_b: HermitianMatrix,
}

impl NonOrthoDensity {
    pub fn d_a(&self) -> usize {
        self.basis_a.len()
    }

    pub fn d_b(&self) -> usize {
        self.basis_b.len()
    }

    /// `tr ρ_AB = Σ P_{iα,jβ} [Q_A ⊗ Q_B]_{jβ,iα}`.
    pub fn physical_trace(&self) -> Complex64 {
        let p = linalg::reshape4_to_2(&self.p);
        let q = linalg::kron(self.gram_a.as_matrix(), self.gram_b.as_matrix());
        (p * q).trace()
    }

    pub fn check_trace(&self) -> Result<()> {
        let t = self.physical_trace();
        if (t - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(QentError::Invariant(format!(
                "physical trace of rho_AB is {t}, expected 1"
            )));
        }
        Ok(())
    }

    /// The same state with the roles of A and B exchanged.
    pub fn swapped(&self) -> NonOrthoDensity {
        let [da, db, _, _] = self.p.dims();
        let mut p = Tensor4::zeros([db, da, db, da]);
        for i in 0..da {
            for a in 0..db {
                for j in 0..da {
                    for b in 0..db {
                        p.set([a, i, b, j], self.p.get([i, a, j, b]));
                    }
                }
            }
        }
        NonOrthoDensity {
            basis_a: self.basis_b.clone(),
            basis_b: self.basis_a.clone(),
            p,
            gram_a: self.gram_b.clone(),
            gram_b: self.gram_a.clone(),
        }
    }

    /// Density of two independent systems; basis labels are merged by
    /// multiset union, so the factors must use disjoint labels.
    pub fn tensor_product(&self, other: &NonOrthoDensity) -> NonOrthoDensity {
        let merge = |x: &[MomentumMultiset], y: &[MomentumMultiset]| -> Vec<MomentumMultiset> {
            x.iter()
                .flat_map(|u| y.iter().map(move |v| u.union(v)))
                .collect()
        };
        let [da1, db1, _, _] = self.p.dims();
        let [da2, db2, _, _] = other.p.dims();
        let (da, db) = (da1 * da2, db1 * db2);
        let mut p = Tensor4::zeros([da, db, da, db]);
        for i1 in 0..da1 {
            for a1 in 0..db1 {
                for j1 in 0..da1 {
                    for b1 in 0..db1 {
                        let x = self.p.get([i1, a1, j1, b1]);
                        if x == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        for i2 in 0..da2 {
                            for a2 in 0..db2 {
                                for j2 in 0..da2 {
                                    for b2 in 0..db2 {
                                        p.set(
                                            [
                                                i1 * da2 + i2,
                                                a1 * db2 + a2,
                                                j1 * da2 + j2,
                                                b1 * db2 + b2,
                                            ],
                                            x * other.p.get([i2, a2, j2, b2]),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        NonOrthoDensity {
            basis_a: merge(&self.basis_a, &other.basis_a),
            basis_b: merge(&self.basis_b, &other.basis_b),
            p,
            gram_a: HermitianMatrix::hermitize(linalg::kron(
                self.gram_a.as_matrix(),
                other.gram_a.as_matrix(),
            ))
            .expect("square"),
            gram_b: HermitianMatrix::hermitize(linalg::kron(
                self.gram_b.as_matrix(),
                other.gram_b.as_matrix(),
            ))
            .expect("square"),
        }
    }
}

/// Classical particles of one species: `r` particles, each found in A with
/// probability `x1` and in B with probability `x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub r: u32,
    pub x1: f64,
    pub x2: f64,
}

fn check_momenta(k: &MomentumMultiset, g: &Geometry) -> Result<()> {
    let l = g.sites() as i64;
    if let Some(&(bad, _)) = k.entries().iter().find(|&&(m, _)| m < 1 || m > l) {
        return Err(QentError::InvalidMultiset(format!(
            "momentum {bad} outside 1..={l}"
        )));
    }
    Ok(())
}

/// Builds `ρ_AB` of `|K⟩` for bosonic or fermionic quasiparticles.
pub fn build_quasiparticle_density(
    k: &MomentumMultiset,
    g: &Geometry,
    stats: Statistics,
) -> Result<NonOrthoDensity> {
    check_momenta(k, g)?;
    match stats {
        Statistics::Classical => {
            return Err(QentError::Invariant(
                "classical states are built with build_classical_density".into(),
            ))
        }
        Statistics::Fermionic => k.check_fermionic()?,
        Statistics::Bosonic => {}
    }

    let basis = k.sub_multisets();
    let index: HashMap<&MomentumMultiset, usize> =
        basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let gram_a = gram_matrix(Block::A, &basis, stats, g)?;
    let gram_b = gram_matrix(Block::B, &basis, stats, g)?;
    let gram_c = gram_matrix(Block::C, &basis, stats, g)?;

    // (i, α, index of K_C, expansion coefficient) for every valid splitting.
    let mut terms = Vec::new();
    for (ia, ka) in basis.iter().enumerate() {
        for (ib, kb) in basis.iter().enumerate() {
            let Some(split) = Splitting::complete(k, ka, kb) else {
                continue;
            };
            let coef = match stats {
                Statistics::Bosonic => bosonic_coefficient(k, &split)?,
                _ => f64::from(fermionic_sign(k, &split)?),
            };
            terms.push((ia, ib, index[&split.c], coef));
        }
    }

    let d = basis.len();
    let mut p = Tensor4::zeros([d, d, d, d]);
    let qc = gram_c.as_matrix();
    for &(i, a, ic, c1) in &terms {
        for &(j, b, jc, c2) in &terms {
            p.set([i, a, j, b], qc[(jc, ic)] * (c1 * c2));
        }
    }

    let rho = NonOrthoDensity {
        basis_a: basis.clone(),
        basis_b: basis,
        p,
        gram_a,
        gram_b,
    };
    rho.check_trace()?;
    Ok(rho)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `ρ_AB = tr_C |ψ⟩⟨ψ|` with multinomial amplitudes
/// `ψ(a,b,c) = √(r!/(a!b!c!) x1^a x2^b (1-x1-x2)^c)` in the orthonormal
/// occupation basis `|a⟩_A|b⟩_B`, `a, b = 0..=r`.
pub fn build_classical_density(state: &ClassicalState) -> Result<NonOrthoDensity> {
    build_classical_species(std::slice::from_ref(&state.r), state.x1, state.x2)
}

fn classical_single(r: u32, label: i64, x1: f64, x2: f64) -> NonOrthoDensity {
    let xc = (1.0 - x1 - x2).max(0.0);
    let d = r as usize + 1;
    let amplitude = |a: u32, b: u32| -> f64 {
        if a + b > r {
            return 0.0;
        }
        let c = r - a - b;
        let weight = factorial(r) / (factorial(a) * factorial(b) * factorial(c))
            * x1.powi(a as i32)
            * x2.powi(b as i32)
            * xc.powi(c as i32);
        weight.sqrt()
    };
    let mut p = Tensor4::zeros([d, d, d, d]);
    for a in 0..=r {
        for b in 0..=r {
            for a2 in 0..=r {
                for b2 in 0..=r {
                    if a + b == a2 + b2 {
                        let v = amplitude(a, b) * amplitude(a2, b2);
                        p.set(
                            [a as usize, b as usize, a2 as usize, b2 as usize],
                            Complex64::new(v, 0.0),
                        );
                    }
                }
            }
        }
    }
    let basis: Vec<MomentumMultiset> = (0..=r)
        .map(|a| {
            if a == 0 {
                MomentumMultiset::empty()
            } else {
                MomentumMultiset::from_pairs([(label, a)]).expect("positive multiplicity")
            }
        })
        .collect();
    NonOrthoDensity {
        basis_a: basis.clone(),
        basis_b: basis,
        p,
        gram_a: HermitianMatrix::identity(d),
        gram_b: HermitianMatrix::identity(d),
    }
}

/// Independent classical species sharing the same geometry; species `s`
/// carries `counts[s]` particles.
pub fn build_classical_species(counts: &[u32], x1: f64, x2: f64) -> Result<NonOrthoDensity> {
    let tol = 1e-12;
    if !(x1 >= 0.0 && x2 >= 0.0 && x1 + x2 <= 1.0 + tol) {
        return Err(QentError::Geometry(format!(
            "classical probabilities need x1, x2 >= 0 and x1 + x2 <= 1 (got {x1}, {x2})"
        )));
    }
    let mut rho = NonOrthoDensity {
        basis_a: vec![MomentumMultiset::empty()],
        basis_b: vec![MomentumMultiset::empty()],
        p: {
            let mut t = Tensor4::zeros([1, 1, 1, 1]);
            t.set([0, 0, 0, 0], Complex64::new(1.0, 0.0));
            t
        },
        gram_a: HermitianMatrix::identity(1),
        gram_b: HermitianMatrix::identity(1),
    };
    for (s, &r) in counts.iter().enumerate() {
        rho = rho.tensor_product(&classical_single(r, s as i64 + 1, x1, x2));
    }
    rho.check_trace()?;
    Ok(rho)
}

/// Dispatches on statistics. Classical states read the multiplicities of `k`
/// as species sizes and take `x1`, `x2` from the geometry.
pub fn build_density(
    k: &MomentumMultiset,
    g: &Geometry,
    stats: Statistics,
) -> Result<NonOrthoDensity> {
    match stats {
        Statistics::Classical => {
            let counts: Vec<u32> = k.entries().iter().map(|&(_, r)| r).collect();
            build_classical_species(&counts, g.x1(), g.x2())
        }
        _ => build_quasiparticle_density(k, g, stats),
    }
}

/// Additivity prediction: the component-wise sum of the parts.
pub fn compose_additive(parts: &[MeasureSet]) -> MeasureSet {
    parts.iter().fold(MeasureSet::zero(), |acc, m| acc + *m)
}
