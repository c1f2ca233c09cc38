//! Parameter sweeps, finite-size extrapolation and additivity reports.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::combinatorics::MomentumMultiset;
use crate::error::{QentError, Result};
use crate::measures::{self, MeasureSet};
use crate::model::{Geometry, Statistics};
use crate::parallel::{map_ordered, Execution};
use crate::statebuilder;

/// Momentum of the form `offset + num * L / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AffineMomentum {
    pub offset: i64,
    pub num: i64,
    pub den: i64,
}

impl AffineMomentum {
    pub fn constant(k: i64) -> Self {
        Self {
            offset: k,
            num: 0,
            den: 1,
        }
    }

    pub fn resolve(&self, sites: usize) -> Option<i64> {
        let scaled = self.num * sites as i64;
        (scaled % self.den == 0).then(|| self.offset + scaled / self.den)
    }

    fn add(self, other: AffineMomentum) -> AffineMomentum {
        let den = self.den * other.den;
        let num = self.num * other.den + other.num * self.den;
        let g = gcd(num.abs(), den).max(1);
        AffineMomentum {
            offset: self.offset + other.offset,
            num: num / g,
            den: den / g,
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// One summand: `7`, `L`, `3L/4`, `3*L/4`, `L/4`.
fn parse_summand(s: &str) -> Result<AffineMomentum> {
    let bad = || QentError::Parse(format!("invalid momentum term {s:?}"));
    let s = s.trim();
    if let Some(pos) = s.find('L') {
        let coef = s[..pos].trim().trim_end_matches('*').trim();
        let num = if coef.is_empty() {
            1
        } else {
            coef.parse().map_err(|_| bad())?
        };
        let rest = s[pos + 1..].trim();
        let den = if rest.is_empty() {
            1
        } else {
            rest.strip_prefix('/')
                .ok_or_else(bad)?
                .trim()
                .parse()
                .map_err(|_| bad())?
        };
        if den <= 0 {
            return Err(bad());
        }
        Ok(AffineMomentum {
            offset: 0,
            num,
            den,
        })
    } else {
        Ok(AffineMomentum::constant(s.parse().map_err(|_| bad())?))
    }
}

impl FromStr for AffineMomentum {
    type Err = QentError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(QentError::Parse("empty momentum".into()));
        }
        let mut total = AffineMomentum {
            offset: 0,
            num: 0,
            den: 1,
        };
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i] == b'+' || bytes[i] == b'-' {
                let piece = &s[start..i];
                let (sign, body) = match piece.as_bytes()[0] {
                    b'+' => (1, &piece[1..]),
                    b'-' => (-1, &piece[1..]),
                    _ => (1, piece),
                };
                let mut term = parse_summand(body)?;
                term.offset *= sign;
                term.num *= sign;
                total = total.add(term);
                start = i;
            }
        }
        Ok(total)
    }
}

impl fmt::Display for AffineMomentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scaled = match (self.num, self.den) {
            (0, _) => String::new(),
            (1, 1) => "L".to_string(),
            (n, 1) => format!("{n}L"),
            (1, d) => format!("L/{d}"),
            (n, d) => format!("{n}L/{d}"),
        };
        match (self.offset, scaled.is_empty()) {
            (k, true) => write!(f, "{k}"),
            (0, false) => f.write_str(&scaled),
            (k, false) if scaled.starts_with('-') => write!(f, "{k}{scaled}"),
            (k, false) => write!(f, "{k}+{scaled}"),
        }
    }
}

/// Momenta given as affine functions of L, e.g. `"1,L/4^2,1+L/2"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentumSpec {
    terms: Vec<(AffineMomentum, u32)>,
}

impl MomentumSpec {
    pub fn resolve(&self, sites: usize) -> Result<MomentumMultiset> {
        let mut pairs = Vec::with_capacity(self.terms.len());
        for (k, r) in &self.terms {
            let m = k.resolve(sites).ok_or_else(|| {
                QentError::NonCommensurate(vec![format!("momentum {k} at L={sites}")])
            })?;
            pairs.push((m, *r));
        }
        MomentumMultiset::from_pairs(pairs)
    }

    pub fn union(&self, other: &MomentumSpec) -> MomentumSpec {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().copied());
        MomentumSpec { terms }
    }
}

impl FromStr for MomentumSpec {
    type Err = QentError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "{}" {
            return Ok(MomentumSpec { terms: Vec::new() });
        }
        let mut terms = Vec::new();
        for part in s.split(',') {
            let (k, r) = match part.split_once('^') {
                Some((k, r)) => (
                    k,
                    r.trim()
                        .parse::<u32>()
                        .ok()
                        .filter(|&r| r > 0)
                        .ok_or_else(|| {
                            QentError::Parse(format!("invalid multiplicity in {part:?}"))
                        })?,
                ),
                None => (part, 1),
            };
            terms.push((k.parse()?, r));
        }
        Ok(MomentumSpec { terms })
    }
}

impl fmt::Display for MomentumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (k, r)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            if *r == 1 {
                write!(f, "{k}")?;
            } else {
                write!(f, "{k}^{r}")?;
            }
        }
        Ok(())
    }
}

/// Statistics plus momentum content, independent of the lattice size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpec {
    pub stats: Statistics,
    pub momenta: MomentumSpec,
}

impl StateSpec {
    pub fn new(stats: Statistics, momenta: &str) -> Result<Self> {
        let spec = StateSpec {
            stats,
            momenta: momenta.parse()?,
        };
        if stats == Statistics::Fermionic {
            if let Some((k, r)) = spec.momenta.terms.iter().find(|(_, r)| *r > 1) {
                return Err(QentError::PauliExclusion {
                    momentum: k.offset,
                    multiplicity: *r,
                });
            }
        }
        Ok(spec)
    }
}

/// Geometry as ratios `x1 = ell1/L`, `x2 = ell2/L`, `y = d/L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryTemplate {
    pub x1: f64,
    pub x2: f64,
    pub y: f64,
}

impl GeometryTemplate {
    pub fn new(x1: f64, x2: f64, y: f64) -> Self {
        Self { x1, x2, y }
    }

    pub fn at(&self, sites: usize) -> Result<Geometry> {
        Geometry::from_ratios(sites, self.x1, self.x2, self.y)
    }
}

/// Measures of one state at one geometry.
pub fn evaluate(state: &StateSpec, g: &Geometry) -> Result<(MomentumMultiset, MeasureSet)> {
    let k = state.momenta.resolve(g.sites())?;
    let rho = statebuilder::build_density(&k, g, state.stats)?;
    Ok((k.clone(), measures::measure_state(&rho)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "x2")]
    X2,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "L")]
    L,
}

impl FromStr for SweepParameter {
    type Err = QentError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x2" => Ok(SweepParameter::X2),
            "y" => Ok(SweepParameter::Y),
            "L" => Ok(SweepParameter::L),
            other => Err(QentError::Parse(format!(
                "unknown sweep parameter {other:?} (expected x2, y or L)"
            ))),
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParameter::X2 => "x2",
            SweepParameter::Y => "y",
            SweepParameter::L => "L",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(rename = "L")]
    pub sites: usize,
    pub x1: f64,
    pub x2: f64,
    pub y: f64,
    #[serde(rename = "K")]
    pub k: MomentumMultiset,
    pub measures: MeasureSet,
}

/// Fit of `X(L) = X_∞ + a/L + b/L²` for each measure.
#[derive(Debug, Clone, Serialize)]
pub struct Extrapolation {
    pub limit: MeasureSet,
    /// `[X_∞, a, b]` for S_R, I and E_N.
    pub coefficients: [[f64; 3]; 3],
    /// Fit residual per row, for S_R, I and E_N.
    pub residuals: Vec<[f64; 3]>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub stats: Statistics,
    pub momenta: String,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub extrapolated: Option<Extrapolation>,
}

fn evaluate_jobs(
    state: &StateSpec,
    jobs: &[(f64, Geometry)],
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    map_ordered(jobs, exec, |(value, g)| {
        evaluate(state, g).map(|(k, m)| SweepRow {
            value: *value,
            sites: g.sites(),
            x1: g.x1(),
            x2: g.x2(),
            y: g.y(),
            k,
            measures: m,
        })
    })
    .into_iter()
    .collect()
}

fn resolve_all(
    state: &StateSpec,
    candidates: impl IntoIterator<Item = (f64, Result<Geometry>)>,
) -> Result<Vec<(f64, Geometry)>> {
    let mut jobs = Vec::new();
    let mut bad = Vec::new();
    for (value, g) in candidates {
        match g.and_then(|g| state.momenta.resolve(g.sites()).map(|_| g)) {
            Ok(g) => jobs.push((value, g)),
            Err(QentError::NonCommensurate(mut v)) => bad.append(&mut v),
            Err(e) => return Err(e),
        }
    }
    if !bad.is_empty() {
        return Err(QentError::NonCommensurate(bad));
    }
    Ok(jobs)
}

/// One point per parameter value, evaluated independently. Rows come back
/// sorted by parameter value.
pub fn sweep(
    state: &StateSpec,
    template: &GeometryTemplate,
    sites: usize,
    parameter: SweepParameter,
    values: &[f64],
    exec: Execution,
) -> Result<SweepResult> {
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let candidates = values.iter().map(|&v| {
        let g = match parameter {
            SweepParameter::X2 => Geometry::from_ratios(sites, template.x1, v, template.y),
            SweepParameter::Y => Geometry::from_ratios(sites, template.x1, template.x2, v),
            SweepParameter::L => {
                if v >= 1.0 && v.fract() == 0.0 {
                    template.at(v as usize)
                } else {
                    Err(QentError::NonCommensurate(vec![format!("L={v}")]))
                }
            }
        };
        (v, g)
    });
    let jobs = resolve_all(state, candidates)?;
    let rows = evaluate_jobs(state, &jobs, exec)?;
    Ok(SweepResult {
        stats: state.stats,
        momenta: state.momenta.to_string(),
        parameter,
        values,
        rows,
        extrapolated: None,
    })
}

/// Default ladder for finite-size extrapolation.
pub const DEFAULT_LADDER: [usize; 4] = [32, 64, 128, 256];

/// Least-squares fit of `X_∞ + a/L + b/L²` to `(L, X)` pairs.
pub fn fit_inverse_l(sites: &[usize], values: &[f64]) -> Result<([f64; 3], Vec<f64>)> {
    if sites.len() < 3 || sites.len() != values.len() {
        return Err(QentError::Fit(format!(
            "need at least 3 usable lattice sizes, got {}",
            sites.len()
        )));
    }
    // Scaled variable u = L_min / L keeps the design well conditioned.
    let l0 = *sites.iter().min().expect("non-empty") as f64;
    let n = sites.len();
    let design = DMatrix::from_fn(n, 3, |r, c| (l0 / sites[r] as f64).powi(c as i32));
    let rhs = DVector::from_column_slice(values);
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| QentError::Fit(e.to_string()))?;
    let residuals = (&design * &coef - &rhs).iter().copied().collect();
    Ok(([coef[0], coef[1] * l0, coef[2] * l0 * l0], residuals))
}

/// Evaluates along an L ladder (non-commensurate sizes are skipped) and
/// extrapolates each measure to `L → ∞`.
pub fn extrapolate_l(
    state: &StateSpec,
    template: &GeometryTemplate,
    ladder: &[usize],
    exec: Execution,
) -> Result<SweepResult> {
    let mut ladder = ladder.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    let usable: Vec<f64> = ladder
        .iter()
        .filter(|&&l| template.at(l).is_ok() && state.momenta.resolve(l).is_ok())
        .map(|&l| l as f64)
        .collect();
    if usable.len() < 3 {
        return Err(QentError::Fit(format!(
            "need at least 3 commensurate lattice sizes, got {} from {ladder:?}",
            usable.len()
        )));
    }
    let mut result = sweep(state, template, 0, SweepParameter::L, &usable, exec)?;
    let sites: Vec<usize> = result.rows.iter().map(|r| r.sites).collect();
    let mut coefficients = [[0.0; 3]; 3];
    let mut residuals = vec![[0.0; 3]; sites.len()];
    for m in 0..3 {
        let ys: Vec<f64> = result.rows.iter().map(|r| r.measures.triple()[m]).collect();
        let (coef, res) = fit_inverse_l(&sites, &ys)?;
        coefficients[m] = coef;
        for (row, r) in residuals.iter_mut().zip(res) {
            row[m] = r;
        }
    }
    let max_residual = residuals
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    result.extrapolated = Some(Extrapolation {
        limit: MeasureSet::from_triple([
            coefficients[0][0],
            coefficients[1][0],
            coefficients[2][0],
        ]),
        coefficients,
        residuals,
        max_residual,
    });
    Ok(result)
}

/// Default bound on the additivity deviation at the largest L, in nats.
pub const DEFAULT_ADDITIVITY_BOUND: f64 = 0.05;
/// Rounding slack allowed when checking that deviations do not grow.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct AdditivityRow {
    #[serde(rename = "L")]
    pub sites: usize,
    pub x1: f64,
    pub x2: f64,
    pub y: f64,
    #[serde(rename = "K")]
    pub k: MomentumMultiset,
    pub joint: MeasureSet,
    pub predicted: MeasureSet,
    /// `|X_joint - Σ X_part|` for S_R, I and E_N.
    pub deviation: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct AdditivityReport {
    pub stats: Statistics,
    pub parts: Vec<String>,
    pub rows: Vec<AdditivityRow>,
    pub bound: f64,
    pub non_increasing: bool,
    pub within_bound: bool,
    pub pass: bool,
}

/// Compares `X_{K_1 ∪ K_2 ∪ ...}` with `Σ X_{K_i}` along an L ladder.
pub fn additivity_report(
    stats: Statistics,
    parts: &[MomentumSpec],
    template: &GeometryTemplate,
    ladder: &[usize],
    bound: f64,
    exec: Execution,
) -> Result<AdditivityReport> {
    if parts.len() < 2 {
        return Err(QentError::Parse(
            "additivity needs at least two momentum sets".into(),
        ));
    }
    if ladder.is_empty() {
        return Err(QentError::Parse("empty L ladder".into()));
    }
    let mut ladder = ladder.to_vec();
    ladder.sort_unstable();
    ladder.dedup();

    let joint_spec = parts
        .iter()
        .skip(1)
        .fold(parts[0].clone(), |acc, p| acc.union(p));
    let mut jobs: Vec<(usize, StateSpec, Geometry)> = Vec::new();
    let mut bad = Vec::new();
    for &l in &ladder {
        let g = match template.at(l) {
            Ok(g) => g,
            Err(QentError::NonCommensurate(mut v)) => {
                bad.append(&mut v);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut resolved: Vec<MomentumMultiset> = Vec::new();
        for p in parts {
            match p.resolve(l) {
                Ok(k) => resolved.push(k),
                Err(QentError::NonCommensurate(mut v)) => bad.append(&mut v),
                Err(e) => return Err(e),
            }
        }
        for (i, a) in resolved.iter().enumerate() {
            for b in &resolved[i + 1..] {
                if !a.is_disjoint(b) {
                    return Err(QentError::InvalidMultiset(format!(
                        "momentum sets {a} and {b} overlap at L={l}"
                    )));
                }
            }
        }
        jobs.push((
            l,
            StateSpec {
                stats,
                momenta: joint_spec.clone(),
            },
            g,
        ));
        for p in parts {
            jobs.push((
                l,
                StateSpec {
                    stats,
                    momenta: p.clone(),
                },
                g,
            ));
        }
    }
    if !bad.is_empty() {
        return Err(QentError::NonCommensurate(bad));
    }
    let results: Vec<(MomentumMultiset, MeasureSet)> =
        map_ordered(&jobs, exec, |(_, s, g)| evaluate(s, g))
            .into_iter()
            .collect::<Result<_>>()?;

    let stride = parts.len() + 1;
    let rows: Vec<AdditivityRow> = results
        .chunks(stride)
        .zip(jobs.chunks(stride))
        .map(|(res, job)| {
            let (k, joint) = res[0].clone();
            let predicted = statebuilder::compose_additive(
                &res[1..].iter().map(|(_, m)| *m).collect::<Vec<_>>(),
            );
            let j = joint.triple();
            let p = predicted.triple();
            let g = &job[0].2;
            AdditivityRow {
                sites: job[0].0,
                x1: g.x1(),
                x2: g.x2(),
                y: g.y(),
                k,
                joint,
                predicted,
                deviation: [
                    (j[0] - p[0]).abs(),
                    (j[1] - p[1]).abs(),
                    (j[2] - p[2]).abs(),
                ],
            }
        })
        .collect();

    let non_increasing = rows
        .windows(2)
        .all(|w| (0..3).all(|m| w[1].deviation[m] <= w[0].deviation[m] + MONOTONE_SLACK));
    let within_bound = rows
        .last()
        .map(|r| r.deviation.iter().all(|&d| d <= bound))
        .unwrap_or(false);
    Ok(AdditivityReport {
        stats,
        parts: parts.iter().map(|p| p.to_string()).collect(),
        rows,
        bound,
        non_increasing,
        within_bound,
        pass: non_increasing && within_bound,
    })
}
