//! Chain geometry, restricted Fourier overlaps and subsystem Gram matrices.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::MomentumMultiset;
use crate::error::{QentError, Result};
use crate::linalg::{self, CMatrix, HermitianMatrix, CLAMP_TOL};

/// Circular chain of `sites` sites cut into A, C₁, B, C₂ (in that order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    sites: usize,
    ell1: usize,
    d: usize,
    ell2: usize,
}

/// Which contiguous region a site belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    A,
    C1,
    B,
    C2,
}

impl Geometry {
    pub fn new(sites: usize, ell1: usize, d: usize, ell2: usize) -> Result<Self> {
        if sites == 0 {
            return Err(QentError::Geometry(
                "the chain needs at least one site".into(),
            ));
        }
        if ell1 + d + ell2 > sites {
            return Err(QentError::Geometry(format!(
                "ell1 + d + ell2 = {} exceeds L = {sites}",
                ell1 + d + ell2
            )));
        }
        Ok(Self {
            sites,
            ell1,
            d,
            ell2,
        })
    }

    /// Geometry from the ratios `x1 = ell1/L`, `x2 = ell2/L`, `y = d/L`.
    /// Every ratio must give an integer number of sites.
    pub fn from_ratios(sites: usize, x1: f64, x2: f64, y: f64) -> Result<Self> {
        let mut bad = Vec::new();
        let mut count = |name: &str, x: f64| -> usize {
            let n = x * sites as f64;
            let rounded = n.round();
            if !x.is_finite() || x < 0.0 || (n - rounded).abs() > 1e-9 {
                bad.push(format!("{name}={x} at L={sites}"));
                0
            } else {
                rounded as usize
            }
        };
        let ell1 = count("x1", x1);
        let ell2 = count("x2", x2);
        let d = count("y", y);
        if !bad.is_empty() {
            return Err(QentError::NonCommensurate(bad));
        }
        Self::new(sites, ell1, d, ell2)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }
    pub fn ell1(&self) -> usize {
        self.ell1
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn ell2(&self) -> usize {
        self.ell2
    }
    pub fn c_len(&self) -> usize {
        self.sites - self.ell1 - self.d - self.ell2
    }
    pub fn x1(&self) -> f64 {
        self.ell1 as f64 / self.sites as f64
    }
    pub fn x2(&self) -> f64 {
        self.ell2 as f64 / self.sites as f64
    }
    pub fn y(&self) -> f64 {
        self.d as f64 / self.sites as f64
    }

    /// Region of site `j`, counted from 1.
    pub fn region(&self, j: usize) -> Region {
        assert!(
            (1..=self.sites).contains(&j),
            "site {j} outside 1..={}",
            self.sites
        );
        if j <= self.ell1 {
            Region::A
        } else if j <= self.ell1 + self.d {
            Region::C1
        } else if j <= self.ell1 + self.d + self.ell2 {
            Region::B
        } else {
            Region::C2
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L={} ell1={} d={} ell2={}",
            self.sites, self.ell1, self.d, self.ell2
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Classical,
    Bosonic,
    Fermionic,
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Statistics::Classical => "classical",
            Statistics::Bosonic => "boson",
            Statistics::Fermionic => "fermion",
        })
    }
}

impl FromStr for Statistics {
    type Err = QentError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Ok(Statistics::Classical),
            "boson" | "bosonic" => Ok(Statistics::Bosonic),
            "fermion" | "fermionic" => Ok(Statistics::Fermionic),
            other => Err(QentError::Parse(format!(
                "unknown statistics {other:?} (expected classical, boson or fermion)"
            ))),
        }
    }
}

fn alpha_interval(k: i64, first: usize, len: usize, sites: usize) -> Complex64 {
    let l = sites as f64;
    let k = k.rem_euclid(sites as i64);
    if k == 0 {
        return Complex64::new(len as f64 / l, 0.0);
    }
    let k = k as f64;
    let (first, len) = (first as f64, len as f64);
    // Σ_{j=first}^{first+len-1} e^{-2πijk/L} / L in closed form.
    let phase = Complex64::from_polar(1.0, -PI * k * (2.0 * first + len - 1.0) / l);
    phase * ((PI * k * len / l).sin() / (l * (PI * k / l).sin()))
}

/// Overlap `α_{block,k} = (1/L) Σ_{j ∈ block} e^{-2πijk/L}` with the
/// momentum reduced modulo L.
pub fn alpha(block: Block, k: i64, g: &Geometry) -> Complex64 {
    match block {
        Block::A => alpha_interval(k, 1, g.ell1, g.sites),
        Block::B => alpha_interval(k, g.ell1 + g.d + 1, g.ell2, g.sites),
        Block::C => {
            let delta = if k.rem_euclid(g.sites as i64) == 0 {
                1.0
            } else {
                0.0
            };
            Complex64::new(delta, 0.0) - alpha(Block::A, k, g) - alpha(Block::B, k, g)
        }
    }
}

/// Inner products `⟨K_1|K_2⟩` of the raw subsystem basis vectors
/// `b†_{block,K}|G_block⟩`: a permanent (bosons) or determinant (fermions) of
/// `α_{block, k_1 - k_2}` over equal-size multisets, zero otherwise.
pub fn gram_matrix(
    block: Block,
    basis: &[MomentumMultiset],
    stats: Statistics,
    g: &Geometry,
) -> Result<HermitianMatrix> {
    if stats == Statistics::Classical {
        return Err(QentError::ClassicalGram);
    }
    let expanded: Vec<Vec<i64>> = basis.iter().map(|m| m.expanded()).collect();
    let n = basis.len();
    let mut q = CMatrix::zeros(n, n);
    for (i, rows) in expanded.iter().enumerate() {
        for (j, cols) in expanded.iter().enumerate() {
            if rows.len() != cols.len() {
                continue;
            }
            let m = CMatrix::from_fn(rows.len(), cols.len(), |r, c| {
                alpha(block, rows[r] - cols[c], g)
            });
            q[(i, j)] = match stats {
                Statistics::Bosonic => linalg::permanent(&m)?,
                Statistics::Fermionic => linalg::determinant(&m)?,
                Statistics::Classical => unreachable!(),
            };
        }
    }
    let q = HermitianMatrix::new(q)?;
    let q = HermitianMatrix::hermitize(q.into_inner())?;
    let spectrum = linalg::eigenvalues(&q)?;
    let threshold = CLAMP_TOL * spectrum.max().abs().max(1.0);
    if spectrum.min() < -threshold {
        return Err(QentError::NegativeEigenvalue {
            value: spectrum.min(),
            threshold: -threshold,
        });
    }
    Ok(q)
}
