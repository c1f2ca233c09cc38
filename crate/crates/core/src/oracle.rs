//! Brute-force reference: the state `|K⟩` written out in the site-occupation
//! basis, `ρ_AB` formed by an explicit partial trace over C.
//!
//! None of the non-orthonormal machinery is used here. Fermionic amplitudes
//! are brought into block order (A sites, B sites, C₁, C₂) before tracing,
//! which makes the A ⊗ B ⊗ C factorization a plain tensor product.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::combinatorics::MomentumMultiset;
use crate::error::{QentError, Result};
use crate::linalg::{self, CMatrix, HermitianMatrix};
use crate::measures::{self, MeasureSet, OrthoDensity};
use crate::model::{Geometry, Region, Statistics};
use crate::parallel::{map_ordered, Execution};
use crate::statebuilder;

/// Occupation vectors of `n` particles on `sites` sites.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub sites: usize,
    pub n: u32,
    pub stats: Statistics,
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    pub fn new(sites: usize, n: u32, stats: Statistics) -> Result<Self> {
        let cap = match stats {
            Statistics::Fermionic => 1,
            Statistics::Bosonic => n,
            Statistics::Classical => {
                return Err(QentError::Invariant(
                    "no Fock space for classical particles".into(),
                ))
            }
        };
        let mut states = Vec::new();
        let mut current = vec![0u8; sites];
        fill(&mut states, &mut current, 0, n, cap);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            sites,
            n,
            stats,
            states,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }
}

fn fill(out: &mut Vec<Vec<u8>>, current: &mut Vec<u8>, site: usize, left: u32, cap: u32) {
    if site == current.len() {
        if left == 0 {
            out.push(current.clone());
        }
        return;
    }
    for m in (0..=left.min(cap)).rev() {
        current[site] = m as u8;
        fill(out, current, site + 1, left - m, cap);
    }
    current[site] = 0;
}

/// Amplitudes of a state over a [`FockBasis`].
#[derive(Debug, Clone)]
pub struct FockState {
    pub basis: FockBasis,
    pub amplitudes: Vec<Complex64>,
}

impl FockState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }
}

type SparseState = BTreeMap<Vec<u8>, Complex64>;

/// `(A config, B config, C config, amplitude)` of one basis state.
type Entry = (Vec<u8>, Vec<u8>, Vec<u8>, Complex64);

/// `a†_j` for site `j` (0-based index into the occupation vector).
fn create_at(state: &SparseState, j: usize, stats: Statistics) -> SparseState {
    let mut out = SparseState::new();
    for (occ, &amp) in state {
        let mut next = occ.clone();
        let factor = match stats {
            Statistics::Bosonic => ((occ[j] + 1) as f64).sqrt(),
            _ => {
                if occ[j] == 1 {
                    continue;
                }
                let before: u32 = occ[..j].iter().map(|&x| u32::from(x)).sum();
                if before.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        next[j] += 1;
        *out.entry(next).or_insert(Complex64::new(0.0, 0.0)) += amp * factor;
    }
    out
}

/// `b†_k = L^{-1/2} Σ_j e^{2πijk/L} a†_j`, sites `j = 1..=L`.
fn create_momentum(state: &SparseState, k: i64, sites: usize, stats: Statistics) -> SparseState {
    let l = sites as f64;
    let mut out = SparseState::new();
    for j in 1..=sites {
        let phase = Complex64::from_polar(1.0 / l.sqrt(), 2.0 * PI * (j as f64) * (k as f64) / l);
        for (occ, amp) in create_at(state, j - 1, stats) {
            *out.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp * phase;
        }
    }
    out
}

/// `|K⟩ = Π_k (b†_k)^{r_k} / √(r_k!) |G⟩`, with the product for fermions
/// written left to right in ascending momentum.
pub fn build_full_state(
    k: &MomentumMultiset,
    sites: usize,
    stats: Statistics,
) -> Result<FockState> {
    if stats == Statistics::Fermionic {
        k.check_fermionic()?;
    }
    let l = sites as i64;
    if let Some(&(bad, _)) = k.entries().iter().find(|&&(m, _)| m < 1 || m > l) {
        return Err(QentError::InvalidMultiset(format!(
            "momentum {bad} outside 1..={l}"
        )));
    }
    let basis = FockBasis::new(sites, k.particle_count(), stats)?;
    let mut state = SparseState::new();
    state.insert(vec![0u8; sites], Complex64::new(1.0, 0.0));
    // Rightmost operator acts first.
    for &(momentum, r) in k.entries().iter().rev() {
        let mut norm = 1.0;
        for m in 1..=r {
            state = create_momentum(&state, momentum, sites, stats);
            norm *= f64::from(m);
        }
        let scale = 1.0 / norm.sqrt();
        state.values_mut().for_each(|z| *z *= scale);
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (occ, amp) in state {
        let i = basis.index_of(&occ).ok_or_else(|| {
            QentError::Invariant(format!("occupation {occ:?} outside the Fock sector"))
        })?;
        amplitudes[i] = amp;
    }
    let full = FockState { basis, amplitudes };
    let norm = full.norm_sqr();
    if norm < 1e-12 {
        return Err(QentError::InvalidMultiset(format!(
            "state {k} vanishes on L={sites} (repeated fermionic mode)"
        )));
    }
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QentError::Invariant(format!("<K|K> = {norm}, expected 1")));
    }
    Ok(full)
}

/// The state as a dense tensor `ψ[a][b][c]` over the A, B and C occupation
/// configurations that occur in it.
#[derive(Debug, Clone)]
struct BlockAmplitudes {
    configs_a: Vec<Vec<u8>>,
    configs_b: Vec<Vec<u8>>,
    d_c: usize,
    /// Row `a * d_b + b`, column `c`.
    psi: CMatrix,
}

fn block_amplitudes(state: &FockState, g: &Geometry) -> Result<BlockAmplitudes> {
    if g.sites() != state.basis.sites {
        return Err(QentError::Geometry(format!(
            "state lives on {} sites but the geometry has L={}",
            state.basis.sites,
            g.sites()
        )));
    }
    let fermionic = state.basis.stats == Statistics::Fermionic;
    let mut entries = Vec::new();
    for (occ, &amp) in state.basis.states.iter().zip(&state.amplitudes) {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let (mut a, mut b, mut c1, mut c2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (j, &n) in occ.iter().enumerate() {
            match g.region(j + 1) {
                Region::A => a.push(n),
                Region::C1 => c1.push(n),
                Region::B => b.push(n),
                Region::C2 => c2.push(n),
            }
        }
        // Moving the B operators to the left of the C₁ operators.
        let n_b: u32 = b.iter().map(|&x| u32::from(x)).sum();
        let n_c1: u32 = c1.iter().map(|&x| u32::from(x)).sum();
        let sign = if fermionic && (n_b * n_c1) % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        c1.extend(c2);
        entries.push((a, b, c1, amp * sign));
    }
    let collect = |pick: &dyn Fn(&Entry) -> &Vec<u8>| {
        let mut configs: Vec<Vec<u8>> = entries.iter().map(|e| pick(e).clone()).collect();
        configs.sort();
        configs.dedup();
        let index: HashMap<Vec<u8>, usize> = configs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        (configs, index)
    };
    let (configs_a, index_a) = collect(&|e| &e.0);
    let (configs_b, index_b) = collect(&|e| &e.1);
    let (configs_c, index_c) = collect(&|e| &e.2);
    let d_b = configs_b.len();
    let mut psi = CMatrix::zeros(configs_a.len() * d_b, configs_c.len());
    for (a, b, c, amp) in &entries {
        psi[(index_a[a] * d_b + index_b[b], index_c[c])] += *amp;
    }
    Ok(BlockAmplitudes {
        configs_a,
        configs_b,
        d_c: configs_c.len(),
        psi,
    })
}

/// Reduced density matrix over the A and B occupation configurations that
/// occur in the state (A-major product ordering).
pub fn exact_rdm(state: &FockState, g: &Geometry) -> Result<OrthoDensity> {
    let blocks = block_amplitudes(state, g)?;
    let rho = HermitianMatrix::hermitize(&blocks.psi * blocks.psi.adjoint())?;
    OrthoDensity::new(rho, blocks.configs_a.len(), blocks.configs_b.len())
}

/// Eigenvalues of `ρ_A` below this are dropped when restricting to supports.
const SUPPORT_EPS: f64 = 1e-13;

/// Orthonormal basis (columns) of the support of a density matrix.
fn support(rho: &CMatrix) -> Result<CMatrix> {
    let (spectrum, vectors) = linalg::hermitian_eig(&HermitianMatrix::hermitize(rho.clone())?)?;
    let rank = spectrum
        .values()
        .iter()
        .filter(|&&v| v > SUPPORT_EPS)
        .count();
    Ok(vectors.columns(0, rank).into_owned())
}

/// Measures of `ρ_AB = tr_C |ψ⟩⟨ψ|`. `ρ_AB` is first restricted to
/// `supp ρ_A ⊗ supp ρ_B`, a local isometry that leaves every measure
/// unchanged and keeps the dense algebra small.
pub fn oracle_measures(state: &FockState, g: &Geometry) -> Result<MeasureSet> {
    let blocks = block_amplitudes(state, g)?;
    let (d_a, d_b, d_c) = (blocks.configs_a.len(), blocks.configs_b.len(), blocks.d_c);
    let psi = &blocks.psi;

    let mut rho_a = CMatrix::zeros(d_a, d_a);
    let mut rho_b = CMatrix::zeros(d_b, d_b);
    for c in 0..d_c {
        for b in 0..d_b {
            for a in 0..d_a {
                let x = psi[(a * d_b + b, c)];
                for a2 in 0..d_a {
                    rho_a[(a, a2)] += x * psi[(a2 * d_b + b, c)].conj();
                }
                for b2 in 0..d_b {
                    rho_b[(b, b2)] += x * psi[(a * d_b + b2, c)].conj();
                }
            }
        }
    }
    let v_a = support(&rho_a)?;
    let v_b = support(&rho_b)?;
    let (r_a, r_b) = (v_a.ncols(), v_b.ncols());

    let mut reduced = CMatrix::zeros(r_a * r_b, d_c);
    for c in 0..d_c {
        for a in 0..d_a {
            for b in 0..d_b {
                let x = psi[(a * d_b + b, c)];
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                for i in 0..r_a {
                    let xa = v_a[(a, i)].conj() * x;
                    for j in 0..r_b {
                        reduced[(i * r_b + j, c)] += xa * v_b[(b, j)].conj();
                    }
                }
            }
        }
    }
    let rho = HermitianMatrix::hermitize(&reduced * reduced.adjoint())?;
    measures::measure(&OrthoDensity::new(rho, r_a, r_b)?)
}

/// One pipeline-versus-oracle comparison.
#[derive(Debug, Clone, Serialize)]
pub struct OracleCase {
    pub stats: Statistics,
    pub k: MomentumMultiset,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub case: OracleCase,
    pub pipeline: MeasureSet,
    pub oracle: MeasureSet,
    pub max_diff: f64,
    pub pass: bool,
}

pub fn check_case(case: &OracleCase, tol: f64) -> Result<OracleCheck> {
    let rho = statebuilder::build_quasiparticle_density(&case.k, &case.geometry, case.stats)?;
    let pipeline = measures::measure_state(&rho)?;
    let full = build_full_state(&case.k, case.geometry.sites(), case.stats)?;
    let oracle = oracle_measures(&full, &case.geometry)?;
    let max_diff = pipeline.max_abs_diff(&oracle);
    Ok(OracleCheck {
        case: case.clone(),
        pipeline,
        oracle,
        max_diff,
        pass: max_diff <= tol,
    })
}

/// Default agreement tolerance between pipeline and oracle.
pub const ORACLE_TOL: f64 = 1e-8;

/// Partitions `(ell1, d, ell2)` used by the small suite for a chain of `l`
/// sites: two with adjacent intervals (one leaving C empty) and three
/// separated ones.
pub fn small_suite_partitions(l: usize) -> Vec<(usize, usize, usize)> {
    vec![
        (2, 0, 3),
        (3, 0, l - 3),
        (2, 1, 2),
        (1, 2, 3),
        (3, l - 6, 2),
    ]
}

/// Every statistics, momentum set and partition of the small oracle grid.
pub fn small_suite() -> Vec<OracleCase> {
    let momenta = [
        ("1", true),
        ("1,2", true),
        ("1^2", false),
        ("1,2,3", true),
        ("1^2,2", false),
    ];
    let mut cases = Vec::new();
    for stats in [Statistics::Bosonic, Statistics::Fermionic] {
        for (k, fermion_ok) in momenta {
            if stats == Statistics::Fermionic && !fermion_ok {
                continue;
            }
            for l in [8usize, 9, 10] {
                for (ell1, d, ell2) in small_suite_partitions(l) {
                    cases.push(OracleCase {
                        stats,
                        k: k.parse().expect("valid literal"),
                        geometry: Geometry::new(l, ell1, d, ell2).expect("valid partition"),
                    });
                }
            }
        }
    }
    cases
}

/// Runs every case; evaluation errors become failing rows.
pub fn run_checks(cases: &[OracleCase], tol: f64, exec: Execution) -> Vec<Result<OracleCheck>> {
    map_ordered(cases, exec, |case| check_case(case, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ms(s: &str) -> MomentumMultiset {
        s.parse().unwrap()
    }

    #[test]
    fn fock_basis_sizes() {
        assert_eq!(
            FockBasis::new(6, 2, Statistics::Fermionic).unwrap().len(),
            15
        );
        assert_eq!(FockBasis::new(6, 2, Statistics::Bosonic).unwrap().len(), 21);
        assert_eq!(
            FockBasis::new(10, 3, Statistics::Bosonic).unwrap().len(),
            220
        );
        assert_eq!(FockBasis::new(4, 0, Statistics::Bosonic).unwrap().len(), 1);
    }

    #[test]
    fn single_particle_is_a_plane_wave() {
        let l = 7;
        for stats in [Statistics::Bosonic, Statistics::Fermionic] {
            let s = build_full_state(&ms("3"), l, stats).unwrap();
            for (occ, amp) in s.basis.states.iter().zip(&s.amplitudes) {
                let j = occ.iter().position(|&x| x == 1).unwrap() + 1;
                let expect = Complex64::from_polar(
                    1.0 / (l as f64).sqrt(),
                    2.0 * PI * (j * 3) as f64 / l as f64,
                );
                assert_abs_diff_eq!((amp - expect).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn two_fermions_are_normalized() {
        let s = build_full_state(&ms("1,2"), 6, Statistics::Fermionic).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn doubly_occupied_boson_mode() {
        // (b†_1)²/√2 on L = 4: amplitude of (2,0,0,0) is e^{4πi/4} √2 / (4 √2).
        let s = build_full_state(&ms("1^2"), 4, Statistics::Bosonic).unwrap();
        let i = s.basis.index_of(&[2, 0, 0, 0]).unwrap();
        let expect = Complex64::from_polar(0.25, PI);
        assert_abs_diff_eq!((s.amplitudes[i] - expect).norm(), 0.0, epsilon = 1e-14);
        // (1,1,0,0): 2 e^{2πi(1+2)/4} / (4 √2).
        let i = s.basis.index_of(&[1, 1, 0, 0]).unwrap();
        let expect = Complex64::from_polar(2.0 / (4.0 * 2f64.sqrt()), 2.0 * PI * 3.0 / 4.0);
        assert_abs_diff_eq!((s.amplitudes[i] - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_pauli_violation() {
        assert!(matches!(
            build_full_state(&ms("2^2"), 6, Statistics::Fermionic),
            Err(QentError::PauliExclusion { .. })
        ));
    }

    #[test]
    fn one_particle_rdm_matches_classical_matrix() {
        let g = Geometry::new(8, 2, 1, 3).unwrap();
        let s = build_full_state(&ms("5"), 8, Statistics::Fermionic).unwrap();
        let rho = exact_rdm(&s, &g).unwrap();
        assert_abs_diff_eq!(rho.matrix().trace(), 1.0, epsilon = 1e-13);
        // Either the particle sits coherently in AB or it is in C.
        let spectrum = linalg::eigenvalues(rho.matrix()).unwrap();
        let (x1, x2) = (0.25, 0.375);
        assert_abs_diff_eq!(spectrum.values()[0], x1 + x2, epsilon = 1e-13);
        assert_abs_diff_eq!(spectrum.values()[1], 1.0 - x1 - x2, epsilon = 1e-13);
        let sa = rho.reduced_a().unwrap();
        let pa = linalg::eigenvalues(&sa).unwrap();
        assert_abs_diff_eq!(pa.values()[0], 1.0 - x1, epsilon = 1e-13);
        assert_abs_diff_eq!(pa.values()[1], x1, epsilon = 1e-13);
    }

    #[test]
    fn oracle_reproduces_closed_forms() {
        let g = Geometry::new(8, 2, 2, 2).unwrap();
        let s = build_full_state(&ms("3"), 8, Statistics::Bosonic).unwrap();
        let m = oracle_measures(&s, &g).unwrap();
        let c = measures::classical_closed_forms(0.25, 0.25);
        assert!(m.max_abs_diff(&c) < 1e-10, "{m:?} vs {c:?}");
    }

    #[test]
    fn compressed_and_full_rdm_agree() {
        let g = Geometry::new(8, 2, 1, 2).unwrap();
        let s = build_full_state(&ms("1,2"), 8, Statistics::Fermionic).unwrap();
        let full = measures::measure(&exact_rdm(&s, &g).unwrap()).unwrap();
        let compressed = oracle_measures(&s, &g).unwrap();
        assert!(full.max_abs_diff(&compressed) < 1e-10);
    }

    #[test]
    fn central_bosonic_check() {
        let case = OracleCase {
            stats: Statistics::Bosonic,
            k: ms("1,2"),
            geometry: Geometry::new(8, 2, 1, 2).unwrap(),
        };
        let check = check_case(&case, ORACLE_TOL).unwrap();
        assert!(check.pass, "{check:?}");
    }
}
