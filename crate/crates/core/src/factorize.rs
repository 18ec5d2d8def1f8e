//! The approximate factorization `D ≈ B T A` through a faithful Haar system,
//! and the identity factorization `I ≈ S T A'` for operators with a large
//! signed Haar diagonal.
//!
//! Everything acts on the model span `F_J = span(h_1, …, h_J)` at the system
//! resolution: `A h_j = h̃_j`, `P f = Σ_j ⟨f, h̃_j⟩ h̃_j / |I_j|`,
//! `B = A⁻¹ P` and `D h_j = d_j h_j` with
//! `d_j = ⟨T h̃_j, h̃_j⟩ / (‖h_j‖ ‖h_j‖_*)`. Because `‖h_j‖ ‖h_j‖_* = |I_j|`
//! in every r.i. norm, `A`, `P` and `B` do not depend on the norm; only the
//! certified error and `D` do.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dyadic::{haar, interval_of};
use crate::error::{HaarError, Result};
use crate::faithful::{build_adapted, haar_normalizers, BuildError, BuildOutcome, BuildParams, FaithfulSystem};
use crate::operator::{power_iteration, LinearOperator};
use crate::rinorm::{DualCertificate, RiNormSpec};
use crate::rng::{stream, stream_id};
use crate::stepfn::StepFunction;

#[derive(Clone, Debug)]
pub struct FactorOptions {
    /// Random probes in `F_J`; the basis vectors `h_1..h_J` are always probed as well.
    pub probes: usize,
    pub seed: u64,
    /// The `η` the system was built with; enables the `‖D‖ ≤ ‖T‖ + 2η` check.
    pub eta: Option<f64>,
    /// Power iterations for `L²` norms.
    pub power_iterations: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions { probes: 64, seed: 0x5EED, eta: None, power_iterations: 300 }
    }
}

/// Norm evidence for the operators of a factorization.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormChecks {
    /// `max |‖A f‖ / ‖f‖ − 1|` over the probes in `F_J`.
    pub a_isometry_gap: f64,
    /// `max ‖B f‖ / ‖f‖` over random probes of the whole resolution-`N` space.
    pub b_probe: f64,
    /// `max_j |d_j|`; equal to `‖D‖` in `L²`, a lower bound otherwise.
    pub d_max: f64,
    /// `‖T‖` by power iteration, `L²` only.
    pub t_norm_l2: Option<f64>,
    /// `‖D − B T A‖` on `F_J` by power iteration on its `J × J` matrix, `L²` only.
    pub residual_l2: Option<f64>,
    /// `‖D‖ ≤ ‖T‖ + 2η`, when both sides are known.
    pub d_bound_holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationResult {
    #[serde(skip)]
    pub a: LinearOperator,
    #[serde(skip)]
    pub b: LinearOperator,
    #[serde(skip)]
    pub d: LinearOperator,
    pub j: usize,
    pub resolution: u32,
    pub spec: String,
    /// `d_1..d_J`.
    pub diag_entries: Vec<f64>,
    /// `2 Σ_j Σ_{i≠j} |⟨T h̃_j, h̃_i⟩| / (‖h_j‖ ‖h_i‖_*)`, an upper bound on `‖D − BTA‖` on `F_J`.
    pub certified_err: f64,
    /// `max ‖(BTA − D) f‖ / ‖f‖` over the probes, a lower bound on the same norm.
    pub probe_err: f64,
    /// `2η` when the building budget is known.
    pub eta_budget: Option<f64>,
    pub dual_certificate: DualCertificate,
    pub norms: NormChecks,
}

fn require_faithful(sys: &FaithfulSystem) -> Result<()> {
    let report = sys.validate();
    match report.clauses.iter().find(|c| !c.passed) {
        None => Ok(()),
        Some(c) => Err(HaarError::InvalidParameter(format!(
            "system is not faithful: {:?} fails at j = {}",
            c.clause,
            c.first_violation.unwrap_or(0)
        ))),
    }
}

fn haar_functions(count: usize, n: u32) -> Result<Vec<StepFunction>> {
    (1..=count as u64).map(|j| haar(interval_of(j)?, n)).collect()
}

fn tilde_functions(sys: &FaithfulSystem) -> Result<Vec<StepFunction>> {
    (1..=sys.len() as u64).map(|j| sys.materialize(j)).collect()
}

fn measures(count: usize) -> Result<Vec<f64>> {
    (1..=count as u64).map(|j| Ok(interval_of(j)?.measure())).collect()
}

/// `Σ_{j ≤ c.len()} c_j h_j` at resolution `n`.
pub fn haar_span(c: &[f64], n: u32) -> Result<StepFunction> {
    let len = 1usize << n;
    if c.len() > len {
        return Err(HaarError::IndexOutOfRange { index: c.len(), len });
    }
    let mut coeffs = vec![0.0; len];
    coeffs[..c.len()].copy_from_slice(c);
    StepFunction::from_haar_coeffs(&coeffs, n)
}

/// `A`: `h_j ↦ h̃_j` on `F_J`, extended by zero on `h_j`, `j > J`.
/// An isometry of `F_J` in every r.i. norm.
pub fn embed_a(sys: &FaithfulSystem) -> Result<LinearOperator> {
    require_faithful(sys)?;
    let n = sys.resolution();
    let functionals = haar_functions(sys.len(), n)?
        .into_iter()
        .zip(measures(sys.len())?)
        .map(|(h, m)| h.scale(1.0 / m))
        .collect();
    LinearOperator::finite_rank(n, functionals, tilde_functions(sys)?)
}

/// `P f = Σ_j ⟨f, h̃_j / ‖h_j‖_*⟩ h̃_j / ‖h_j‖`, the norm-one projection onto
/// `span(h̃_j)`.
pub fn projection_p(sys: &FaithfulSystem) -> Result<LinearOperator> {
    require_faithful(sys)?;
    let tilde = tilde_functions(sys)?;
    let functionals = tilde.iter().zip(measures(sys.len())?).map(|(h, m)| h.scale(1.0 / m)).collect();
    LinearOperator::finite_rank(sys.resolution(), functionals, tilde)
}

/// `B = A⁻¹ P`: reads the block coefficients `⟨f, h̃_j⟩ / |I_j|` and places
/// them on `h_j`.
pub fn coefficient_map_b(sys: &FaithfulSystem) -> Result<LinearOperator> {
    require_faithful(sys)?;
    let n = sys.resolution();
    let functionals = tilde_functions(sys)?.iter().zip(measures(sys.len())?).map(|(h, m)| h.scale(1.0 / m)).collect();
    LinearOperator::finite_rank(n, functionals, haar_functions(sys.len(), n)?)
}

fn diagonal_multiplier(entries: &[f64], n: u32) -> Result<LinearOperator> {
    let mut lambda = vec![0.0; 1usize << n];
    lambda[..entries.len()].copy_from_slice(entries);
    LinearOperator::haar_multiplier(n, lambda)
}

fn random_coeffs(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Assembles `A`, `B`, `D` for `T` and the system and certifies
/// `‖D − B T A‖ ≤ certified_err` on `F_J`.
pub fn factor_through(
    t: &LinearOperator,
    sys: &FaithfulSystem,
    spec: &RiNormSpec,
    opts: &FactorOptions,
) -> Result<FactorizationResult> {
    let n = t.resolution();
    if sys.resolution() != n {
        return Err(HaarError::ResolutionMismatch { operator: n, input: sys.resolution() });
    }
    let a_op = embed_a(sys)?;
    let b_op = coefficient_map_b(sys)?;
    let count = sys.len();
    let (norm_a, norm_b, dual_certificate) = haar_normalizers(spec, count, n)?;
    let tilde = tilde_functions(sys)?;
    let images: Vec<StepFunction> = tilde.iter().map(|h| t.apply(h)).collect::<Result<_>>()?;
    // pairings[j][i] = ⟨T h̃_j, h̃_i⟩
    let pairings: Vec<Vec<f64>> = images.iter().map(|u| tilde.iter().map(|h| u.pairing(h)).collect()).collect();

    let diag_entries: Vec<f64> = (0..count).map(|j| pairings[j][j] / (norm_a[j] * norm_b[j])).collect();
    let mut off = 0.0;
    for j in 0..count {
        for i in 0..count {
            if i != j {
                off += pairings[j][i].abs() / (norm_a[j] * norm_b[i]);
            }
        }
    }
    let certified_err = 2.0 * off;
    let d_op = diagonal_multiplier(&diag_entries, n)?;

    let residual = |f: &StepFunction| -> Result<StepFunction> {
        let btaf = b_op.apply(&t.apply(&a_op.apply(f)?)?)?;
        Ok(btaf.sub(&d_op.apply(f)?))
    };
    let mut probes: Vec<StepFunction> = haar_functions(count, n)?;
    let mut rng = stream(opts.seed, stream_id(0x40, count as u64, 0, 0));
    for _ in 0..opts.probes {
        probes.push(haar_span(&random_coeffs(&mut rng, count), n)?);
    }

    let mut t_norm_l2 = None;
    let mut residual_l2 = None;
    if spec.is_hilbert() {
        // In the orthonormal basis ψ_j = h_j / √|I_j| the residual has
        // entries ⟨T h̃_j, h̃_i⟩ / √(|I_i| |I_j|) off the diagonal.
        let m = measures(count)?;
        let mat: Vec<f64> = (0..count * count)
            .map(|k| {
                let (i, j) = (k / count, k % count);
                if i == j {
                    0.0
                } else {
                    pairings[j][i] / (m[i] * m[j]).sqrt()
                }
            })
            .collect();
        let mul = |x: &[f64], transpose: bool| -> Vec<f64> {
            (0..count)
                .map(|r| {
                    (0..count).map(|c| if transpose { mat[c * count + r] } else { mat[r * count + c] } * x[c]).sum()
                })
                .collect()
        };
        let (value, vector, _) =
            power_iteration(count, |x| mul(x, false), |y| mul(y, true), opts.seed, opts.power_iterations);
        residual_l2 = Some(value);
        let c: Vec<f64> = vector.iter().zip(&m).map(|(x, mi)| x / mi.sqrt()).collect();
        probes.push(haar_span(&c, n)?);
        t_norm_l2 = Some(t.l2_norm(opts.seed, opts.power_iterations).value);
    }

    let mut probe_err: f64 = 0.0;
    let mut a_isometry_gap: f64 = 0.0;
    for f in &probes {
        let nf = spec.norm(f);
        if nf == 0.0 {
            continue;
        }
        probe_err = probe_err.max(spec.norm(&residual(f)?) / nf);
        a_isometry_gap = a_isometry_gap.max((spec.norm(&a_op.apply(f)?) / nf - 1.0).abs());
    }
    let mut b_probe: f64 = 0.0;
    let mut rng = stream(opts.seed, stream_id(0x40, count as u64, 1, 0));
    for f in tilde.iter().cloned().chain((0..opts.probes).map(|_| {
        StepFunction::new(n, random_coeffs(&mut rng, 1usize << n)).expect("length")
    })) {
        let nf = spec.norm(&f);
        if nf > 0.0 {
            b_probe = b_probe.max(spec.norm(&b_op.apply(&f)?) / nf);
        }
    }

    let d_max = diag_entries.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let d_bound_holds = match (t_norm_l2, opts.eta) {
        (Some(tn), Some(eta)) => Some(d_max <= tn + 2.0 * eta),
        _ => None,
    };
    Ok(FactorizationResult {
        a: a_op,
        b: b_op,
        d: d_op,
        j: count,
        resolution: n,
        spec: spec.to_string(),
        diag_entries,
        certified_err,
        probe_err,
        eta_budget: opts.eta.map(|e| 2.0 * e),
        dual_certificate,
        norms: NormChecks { a_isometry_gap, b_probe, d_max, t_norm_l2, residual_l2, d_bound_holds },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityParams {
    pub delta: f64,
    pub eta: f64,
    pub restarts: usize,
    pub seed: u64,
    pub probes: usize,
    /// Random trials for the unconditional-constant estimate outside `L²`.
    pub unconditional_trials: usize,
}

impl Default for IdentityParams {
    fn default() -> Self {
        IdentityParams { delta: 0.5, eta: 0.5, restarts: 8, seed: 0x5EED, probes: 64, unconditional_trials: 200 }
    }
}

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("refused: {reason}")]
    Refused { reason: String },
    #[error("operator has no large signed diagonal: normalized entry {value} at index {index}")]
    NoLargeDiagonal { index: u64, value: f64 },
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Invalid(#[from] HaarError),
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityFactorization {
    /// `S = D⁻¹ B`.
    #[serde(skip)]
    pub s: LinearOperator,
    /// `A' = D̄ A`.
    #[serde(skip)]
    pub a_prime: LinearOperator,
    /// `D̄ h_j = sign(⟨T h_j, h_j⟩) h_j`.
    #[serde(skip)]
    pub sign_flip: LinearOperator,
    pub build: BuildOutcome,
    pub factorization: FactorizationResult,
    /// `K̂_u`: exactly 1 in `L²`, otherwise an empirical lower bound.
    pub unconditional_constant: f64,
    /// `certified_err · K̂_u / δ`; a proven bound only in `L²`.
    pub residual_bound: f64,
    pub residual_bound_is_surrogate: bool,
    /// `max ‖(I − S T A') f‖ / ‖f‖` over probes in `F_J`.
    pub residual_probe: f64,
}

/// Factors the identity of `F_J` through `T`: passes to `T̃ = T D̄`, builds an
/// adapted system for `T̃`, and inverts the resulting diagonal.
pub fn factor_identity(
    t: &LinearOperator,
    spec: &RiNormSpec,
    params: &IdentityParams,
) -> std::result::Result<IdentityFactorization, FactorError> {
    if !spec.unconditional_haar() {
        return Err(FactorError::Refused {
            reason: format!("requires unconditional basis: the Haar system is not unconditional in {spec}"),
        });
    }
    if let Some((index, value)) = t.large_diagonal_violation(params.delta, true) {
        return Err(FactorError::NoLargeDiagonal { index, value });
    }
    let n = t.resolution();
    let (t_tilde, sign_flip) = t.sign_flip_precondition()?;
    let build_params = BuildParams {
        delta: params.delta,
        eta: params.eta,
        restarts: params.restarts,
        seed: params.seed,
        target_entries: None,
    };
    let build = build_adapted(&t_tilde, spec, &build_params)?;
    let opts = FactorOptions { probes: params.probes, seed: params.seed, eta: Some(params.eta), ..FactorOptions::default() };
    let factorization = factor_through(&t_tilde, &build.system, spec, &opts)?;

    let inverse: Vec<f64> = factorization.diag_entries.iter().map(|d| 1.0 / d).collect();
    let s = LinearOperator::compose(vec![diagonal_multiplier(&inverse, n)?, factorization.b.clone()])?;
    let a_prime = LinearOperator::compose(vec![sign_flip.clone(), factorization.a.clone()])?;

    let unconditional_constant = if spec.is_hilbert() {
        1.0
    } else {
        unconditional_constant_estimate(spec, n, params.unconditional_trials, params.seed)
    };
    let residual_bound = factorization.certified_err * unconditional_constant / params.delta;

    let count = factorization.j;
    let mut probes = haar_functions(count, n)?;
    let mut rng = stream(params.seed, stream_id(0x42, count as u64, 0, 0));
    for _ in 0..params.probes {
        probes.push(haar_span(&random_coeffs(&mut rng, count), n)?);
    }
    let mut residual_probe: f64 = 0.0;
    for f in &probes {
        let nf = spec.norm(f);
        if nf > 0.0 {
            let back = s.apply(&t.apply(&a_prime.apply(f)?)?)?;
            residual_probe = residual_probe.max(spec.norm(&f.sub(&back)) / nf);
        }
    }
    Ok(IdentityFactorization {
        s,
        a_prime,
        sign_flip,
        build,
        factorization,
        unconditional_constant,
        residual_bound,
        residual_bound_is_surrogate: !spec.is_hilbert(),
        residual_probe,
    })
}

/// `‖Σ ε_j c_j h_j‖ / ‖Σ c_j h_j‖` for a coefficient vector and sign pattern.
fn sign_ratio(spec: &RiNormSpec, coeffs: &[f64], signs: &[f64], n: u32) -> f64 {
    let base = StepFunction::from_haar_coeffs(coeffs, n).expect("length");
    let flipped: Vec<f64> = coeffs.iter().zip(signs).map(|(c, e)| c * e).collect();
    let nb = spec.norm(&base);
    if nb == 0.0 {
        return 1.0;
    }
    spec.norm(&StepFunction::from_haar_coeffs(&flipped, n).expect("length")) / nb
}

/// Lower bound on the unconditional constant of the Haar system at
/// resolution `n`: the largest sign-change ratio over seeded random
/// coefficient vectors and the branch family `Σ_{l<k} 2^l h_{[0, 2^{-l})}`
/// with alternating signs, in both directions.
pub fn unconditional_constant_estimate(spec: &RiNormSpec, n: u32, trials: usize, seed: u64) -> f64 {
    let len = 1usize << n;
    let mut best: f64 = 1.0;
    for k in 1..=n {
        let mut coeffs = vec![0.0; len];
        let mut signs = vec![1.0; len];
        for l in 0..k {
            // h_{[0, 2^-l)} has index 2^l + 1.
            coeffs[1usize << l] = (1u64 << l) as f64;
            signs[1usize << l] = if l % 2 == 0 { 1.0 } else { -1.0 };
        }
        best = best.max(sign_ratio(spec, &coeffs, &signs, n));
        let alternated: Vec<f64> = coeffs.iter().zip(&signs).map(|(c, e)| c * e).collect();
        best = best.max(sign_ratio(spec, &alternated, &signs, n));
    }
    let mut rng = stream(seed, stream_id(0x41, n as u64, 0, 0));
    for _ in 0..trials {
        let mut coeffs = random_coeffs(&mut rng, len);
        coeffs[0] = 0.0;
        let signs: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        best = best.max(sign_ratio(spec, &coeffs, &signs, n));
    }
    best
}
