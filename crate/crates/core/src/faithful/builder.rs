//! Inductive construction of a faithful Haar system adapted to an operator
//! `T` with a large Haar diagonal.
//!
//! Entry `j` is placed at the first level `m_j > m_{j-1}` where a sign choice
//! on the mandated support satisfies
//!
//! * the diagonal bound `⟨T h̃_j, h̃_j⟩ / (a_j b_j) ≥ δ`,
//! * `c3_j = Σ_{i<j} |⟨T h̃_i, h̃_j⟩| / (a_i b_j) < η_j / 2`,
//! * `c4_j = Σ_{i<j} |⟨T h̃_j, h̃_i⟩| / (a_j b_i) < η_j / 2`,
//!
//! with `a_j = ‖h_j‖`, `b_j = ‖h_j‖_*` and `η_j = η 3^{-j}`. The
//! conditional-expectation signs are tried first, then seeded random draws.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::signs::{greedy_signs, quadratic};
use super::{FaithfulEntry, FaithfulSystem};
use crate::dyadic::{exp2i, haar, interval_of, DyadicInterval};
use crate::error::HaarError;
use crate::operator::{pair_with_haar, LinearOperator, DIAGONAL_SLACK};
use crate::rinorm::{DualCertificate, RiNormSpec};
use crate::rng::{stream, stream_id};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildParams {
    pub delta: f64,
    pub eta: f64,
    /// Random sign draws per level after the deterministic choice fails.
    pub restarts: usize,
    pub seed: u64,
    /// Required number of functions `J` (counting `h̃_1`); `None` builds
    /// until the first index that cannot be placed.
    pub target_entries: Option<usize>,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams { delta: 0.5, eta: 0.5, restarts: 8, seed: 0x5EED, target_entries: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub j: u64,
    pub m: u32,
    pub c3: f64,
    pub c4: f64,
    /// `η_j`; the row passes when `c3 < η_j / 2` and `c4 < η_j / 2`.
    pub budget: f64,
    /// `⟨T h̃_j, h̃_j⟩ / (a_j b_j)`.
    pub diagonal: f64,
    /// Candidates evaluated before acceptance, over all levels.
    pub attempts: usize,
}

/// Why index `index` could not be placed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub index: u64,
    /// Deepest level tried, `None` when no level was left below the resolution.
    pub last_level: Option<u32>,
    /// Residuals of the candidate with the smallest `c3 + c4`, if any passed the diagonal bound.
    pub best_c3: Option<f64>,
    pub best_c4: Option<f64>,
    pub best_diagonal: Option<f64>,
    pub budget: f64,
    pub reason: String,
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "index {} could not be placed: {}", self.index, self.reason)?;
        if let (Some(m), Some(c3), Some(c4)) = (self.last_level, self.best_c3, self.best_c4) {
            write!(f, " (last level {m}, best c3 {c3:e}, c4 {c4:e}, budget/2 {:e})", self.budget / 2.0)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum BuildError {
    #[error("operator has no large diagonal: normalized entry {value} at index {index}")]
    NoLargeDiagonal { index: u64, value: f64 },
    #[error("{0}")]
    Failed(FailureReport),
    #[error(transparent)]
    Invalid(#[from] HaarError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOutcome {
    pub system: FaithfulSystem,
    pub certificates: Vec<CertificateRow>,
    /// `Σ_i Σ_{j≠i} |⟨T h̃_i, h̃_j⟩| / (a_i b_j)` over the built indices,
    /// recomputed from the final functions.
    pub grand_sum: f64,
    pub eta: f64,
    /// The index at which a default-length build stopped.
    pub stop: Option<FailureReport>,
    pub norms: Vec<f64>,
    pub dual_norms: Vec<f64>,
    pub dual_certificate: DualCertificate,
}

/// `(‖h_j‖, ‖h_j‖_*)` for `j = 1..=count` at resolution `n`. The dual is in
/// closed form for `L^p`; otherwise it is `|I_j| / ‖h_j‖`.
pub fn haar_normalizers(spec: &RiNormSpec, count: usize, n: u32) -> crate::Result<(Vec<f64>, Vec<f64>, DualCertificate)> {
    let mut a = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    for j in 1..=count as u64 {
        let node = interval_of(j)?;
        if j == 1 {
            a.push(1.0);
            b.push(1.0);
            continue;
        }
        if spec.has_exact_dual() {
            let pair = spec.haar_norm_pair(j, n)?;
            a.push(pair.norm);
            b.push(pair.dual);
        } else {
            let norm = spec.norm(&haar(node, n)?);
            a.push(norm);
            b.push(node.measure() / norm);
        }
    }
    let cert = if spec.has_exact_dual() { DualCertificate::Exact } else { DualCertificate::ProductIdentity };
    Ok((a, b, cert))
}

struct Candidate {
    signs: Vec<i8>,
    c3: f64,
    c4: f64,
    diagonal: f64,
}

/// Builds a faithful system adapted to `t`; see the module documentation.
pub fn build_adapted(t: &LinearOperator, spec: &RiNormSpec, params: &BuildParams) -> Result<BuildOutcome, BuildError> {
    let n = t.resolution();
    if !(params.delta > 0.0) || !(params.eta > 0.0) {
        return Err(HaarError::InvalidParameter(format!(
            "delta and eta must be positive, got {} and {}",
            params.delta, params.eta
        ))
        .into());
    }
    if let Some((index, value)) = t.large_diagonal_violation(params.delta, false) {
        return Err(BuildError::NoLargeDiagonal { index, value });
    }
    let cap = 1usize << n;
    if params.target_entries.is_some_and(|t| t > cap) {
        return Err(HaarError::InvalidParameter(format!("at most {cap} entries exist at resolution {n}")).into());
    }
    // Levels increase strictly, so at most N + 1 entries fit.
    let max_count = params.target_entries.unwrap_or((n as usize + 2).min(cap)).max(1);
    let (a, b, dual_certificate) = haar_normalizers(spec, max_count, n)?;
    let atom = exp2i(-(n as i32));
    let dot = |u: &[f64], v: &[f64]| -> f64 { atom * u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() };

    let mut system = FaithfulSystem::new(n, Vec::new())?;
    // h̃_i and T h̃_i as atom vectors.
    let mut functions: Vec<Vec<f64>> = vec![vec![1.0; 1 << n]];
    let mut images: Vec<Vec<f64>> = vec![t.haar_image(DyadicInterval::Empty)];
    let mut certificates = Vec::new();
    let mut stop = None;
    let mut prev_level: Option<u32> = None;

    for j in 2..=max_count as u64 {
        let jj = j as usize - 1;
        let budget = params.eta * 3f64.powi(-(j as i32));
        let half = budget / 2.0;
        let support = system.mandated_support(j)?;
        let lo = prev_level.map_or(0, |m| m + 1).max(support[0].level());
        let mut best: Option<Candidate> = None;
        let mut last_level = None;
        let mut attempts = 0;
        let mut accepted: Option<(u32, Vec<DyadicInterval>, Candidate)> = None;

        'levels: for m in lo..n {
            last_level = Some(m);
            let delta: Vec<DyadicInterval> =
                support.iter().flat_map(|i| i.subdivide(m).expect("level below resolution")).collect();
            let len = delta.len();
            // gram[a][b] = ⟨T h_a, h_b⟩, q[a][i] = ⟨T h_a, h̃_i⟩ and
            // r[i][a] = ⟨T h̃_i, h_a⟩ for the placed i.
            let mut gram = Vec::with_capacity(len * len);
            let mut q: Vec<Vec<f64>> = Vec::with_capacity(len);
            for d in &delta {
                let image = t.haar_image(*d);
                gram.extend(delta.iter().map(|e| pair_with_haar(&image, *e, n)));
                q.push(functions.iter().map(|h| dot(&image, h)).collect());
            }
            let r: Vec<Vec<f64>> =
                images.iter().map(|u| delta.iter().map(|d| pair_with_haar(u, *d, n)).collect()).collect();
            let evaluate = |signs: Vec<i8>| -> Candidate {
                let diagonal = quadratic(&gram, &signs) / (a[jj] * b[jj]);
                let c3 = (0..images.len())
                    .map(|i| {
                        let p: f64 = r[i].iter().zip(&signs).map(|(x, s)| x * *s as f64).sum();
                        p.abs() / (a[i] * b[jj])
                    })
                    .sum();
                let c4 = (0..functions.len())
                    .map(|i| {
                        let p: f64 = q.iter().zip(&signs).map(|(row, s)| row[i] * *s as f64).sum();
                        p.abs() / (a[jj] * b[i])
                    })
                    .sum();
                Candidate { signs, c3, c4, diagonal }
            };
            let mut rng = stream(params.seed, stream_id(0x31, j, m as u64, 0));
            for attempt in 0..=params.restarts {
                let signs = if attempt == 0 {
                    greedy_signs(&gram, len)
                } else {
                    (0..len).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect()
                };
                let cand = evaluate(signs);
                attempts += 1;
                if cand.diagonal < params.delta - DIAGONAL_SLACK {
                    continue;
                }
                if cand.c3 < half && cand.c4 < half {
                    accepted = Some((m, delta, cand));
                    break 'levels;
                }
                if best.as_ref().is_none_or(|b| cand.c3 + cand.c4 < b.c3 + b.c4) {
                    best = Some(cand);
                }
            }
        }

        let Some((m, delta, cand)) = accepted else {
            let reason = match last_level {
                None => "no level left below the resolution".to_string(),
                Some(_) => "the off-diagonal budget was not met at any remaining level".to_string(),
            };
            let report = FailureReport {
                index: j,
                last_level,
                best_c3: best.as_ref().map(|b| b.c3),
                best_c4: best.as_ref().map(|b| b.c4),
                best_diagonal: best.as_ref().map(|b| b.diagonal),
                budget,
                reason,
            };
            if j == 2 || params.target_entries.is_some() {
                return Err(BuildError::Failed(report));
            }
            stop = Some(report);
            break;
        };

        let entry = FaithfulEntry { level: m, intervals: delta, signs: cand.signs };
        let mut values = vec![0.0; 1 << n];
        entry.write(&mut values, n, 1.0);
        images.push(t.apply_values(&values));
        functions.push(values);
        system.push(entry);
        certificates.push(CertificateRow {
            j,
            m,
            c3: cand.c3,
            c4: cand.c4,
            budget,
            diagonal: cand.diagonal,
            attempts,
        });
        prev_level = Some(m);
    }

    let count = system.len();
    let mut grand_sum = 0.0;
    for i in 0..count {
        for jj in 0..count {
            if i != jj {
                grand_sum += dot(&images[i], &functions[jj]).abs() / (a[i] * b[jj]);
            }
        }
    }
    Ok(BuildOutcome {
        system,
        certificates,
        grand_sum,
        eta: params.eta,
        stop,
        norms: a[..count].to_vec(),
        dual_norms: b[..count].to_vec(),
        dual_certificate,
    })
}

/// Certificate table as CSV; floats use the shortest round-trip
/// representation, so equal runs give equal bytes.
pub fn certificates_csv(rows: &[CertificateRow]) -> String {
    let mut out = String::from("j,m,c3,c4,budget,diagonal,attempts\n");
    for r in rows {
        out.push_str(&format!("{},{},{:e},{:e},{:e},{:e},{}\n", r.j, r.m, r.c3, r.c4, r.budget, r.diagonal, r.attempts));
    }
    out
}
