//! Sign selection for `h̃ = Σ_{I ∈ Δ} θ(I) h_I` by the method of conditional
//! expectations.
//!
//! With independent uniform signs, `E⟨T h̃, h̃⟩ = Σ_{I ∈ Δ} ⟨T h_I, h_I⟩`.
//! Fixing the signs left to right and always taking the branch whose exactly
//! computed conditional expectation is larger never lowers that expectation,
//! so the final deterministic value is at least the mean.

use crate::dyadic::DyadicInterval;
use crate::error::{HaarError, Result};
use crate::operator::{pair_with_haar, LinearOperator};
use crate::stepfn::check_disjoint;

/// Largest family the exhaustive mode will enumerate (`2^20` patterns).
pub const EXHAUSTIVE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignMode {
    ConditionalExpectation,
    /// Enumerates all patterns and returns the best one; the greedy value is still reported.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignChoice {
    pub signs: Vec<i8>,
    /// `⟨T h̃, h̃⟩` for the returned signs.
    pub value: f64,
    /// `Σ_{I ∈ Δ} ⟨T h_I, h_I⟩`, the mean over uniform random signs.
    pub expectation: f64,
    /// Value of the conditional-expectation signs.
    pub greedy_value: f64,
}

fn check_family(t: &LinearOperator, delta: &[DyadicInterval]) -> Result<()> {
    let first = delta.first().ok_or(HaarError::EmptySet)?;
    if delta.iter().any(|i| i.is_empty() || i.level() != first.level()) {
        return Err(HaarError::MixedLevels);
    }
    if first.level() >= t.resolution() {
        return Err(HaarError::ResolutionTooSmall { needed: first.level() + 1, resolution: t.resolution() });
    }
    check_disjoint(delta)
}

/// `M[a·L + b] = ⟨T h_a, h_b⟩` over the family, `L = |Δ|`.
pub fn haar_gram(t: &LinearOperator, delta: &[DyadicInterval]) -> Result<Vec<f64>> {
    check_family(t, delta)?;
    Ok(gram_unchecked(t, delta))
}

pub(crate) fn gram_unchecked(t: &LinearOperator, delta: &[DyadicInterval]) -> Vec<f64> {
    let n = t.resolution();
    let mut gram = Vec::with_capacity(delta.len() * delta.len());
    for a in delta {
        let image = t.haar_image(*a);
        gram.extend(delta.iter().map(|b| pair_with_haar(&image, *b, n)));
    }
    gram
}

pub(crate) fn quadratic(gram: &[f64], signs: &[i8]) -> f64 {
    let len = signs.len();
    let mut total = 0.0;
    for (a, sa) in signs.iter().enumerate() {
        let row: f64 = gram[a * len..(a + 1) * len].iter().zip(signs).map(|(m, sb)| m * *sb as f64).sum();
        total += *sa as f64 * row;
    }
    total
}

pub(crate) fn trace(gram: &[f64], len: usize) -> f64 {
    (0..len).map(|a| gram[a * len + a]).sum()
}

/// Left to right; the sign of `t` only enters the conditional expectation
/// through `θ_t Σ_{a<t} θ_a (M_at + M_ta)`. Ties pick `+1`.
pub(crate) fn greedy_signs(gram: &[f64], len: usize) -> Vec<i8> {
    let mut signs: Vec<i8> = Vec::with_capacity(len);
    for t in 0..len {
        let score: f64 = signs.iter().enumerate().map(|(a, s)| *s as f64 * (gram[a * len + t] + gram[t * len + a])).sum();
        signs.push(if score >= 0.0 { 1 } else { -1 });
    }
    signs
}

fn exhaustive_signs(gram: &[f64], len: usize) -> (Vec<i8>, f64) {
    let mut best: Option<(Vec<i8>, f64)> = None;
    for mask in 0u64..(1u64 << len) {
        let signs: Vec<i8> = (0..len).map(|a| if mask >> a & 1 == 0 { 1 } else { -1 }).collect();
        let v = quadratic(gram, &signs);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((signs, v));
        }
    }
    best.expect("at least one pattern")
}

/// Signs on a disjoint single-level family `Δ` making `⟨T h̃, h̃⟩` at least its mean.
pub fn derandomized_signs(t: &LinearOperator, delta: &[DyadicInterval], mode: SignMode) -> Result<SignChoice> {
    check_family(t, delta)?;
    if mode == SignMode::Exhaustive && delta.len() > EXHAUSTIVE_CAP {
        return Err(HaarError::InvalidParameter(format!(
            "exhaustive sign search is limited to {EXHAUSTIVE_CAP} intervals, got {}",
            delta.len()
        )));
    }
    let len = delta.len();
    let gram = gram_unchecked(t, delta);
    let expectation = trace(&gram, len);
    let greedy = greedy_signs(&gram, len);
    let greedy_value = quadratic(&gram, &greedy);
    let (signs, value) = match mode {
        SignMode::ConditionalExpectation => (greedy, greedy_value),
        SignMode::Exhaustive => exhaustive_signs(&gram, len),
    };
    Ok(SignChoice { signs, value, expectation, greedy_value })
}
