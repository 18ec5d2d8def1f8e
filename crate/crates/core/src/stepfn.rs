//! Step functions on the `2^N` atoms of `D_N`.
//!
//! Entry `k` of a resolution-`N` function is its value on
//! `[k 2^-N, (k+1) 2^-N)`. Binary operations between functions of different
//! resolutions first refine the coarser operand by value replication.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::dyadic::{checked_len, exp2i, DyadicInterval};
use crate::error::{HaarError, Result};

/// Hard cap on the resolution (16.7M atoms).
pub const MAX_RESOLUTION: u32 = 24;

/// Values closer than this are merged into one atom of a [`Distribution`].
pub const VALUE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep")]
pub struct StepFunction {
    resolution: u32,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStep {
    resolution: u32,
    values: Vec<f64>,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = HaarError;
    fn try_from(raw: RawStep) -> Result<Self> {
        StepFunction::new(raw.resolution, raw.values)
    }
}

impl StepFunction {
    pub fn new(resolution: u32, values: Vec<f64>) -> Result<Self> {
        let expected = checked_len(resolution)?;
        if values.len() != expected {
            return Err(HaarError::LengthMismatch { expected, got: values.len() });
        }
        Ok(StepFunction { resolution, values })
    }

    /// Infers the resolution from a power-of-two length.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(HaarError::LengthMismatch { expected: len.next_power_of_two().max(1), got: len });
        }
        StepFunction::new(len.trailing_zeros(), values)
    }

    pub fn zeros(resolution: u32) -> Result<Self> {
        StepFunction::constant(resolution, 0.0)
    }

    pub fn constant(resolution: u32, c: f64) -> Result<Self> {
        Ok(StepFunction { resolution, values: vec![c; checked_len(resolution)?] })
    }

    /// `χ_A` for a disjoint family of dyadic intervals.
    pub fn indicator(resolution: u32, set: &[DyadicInterval]) -> Result<Self> {
        let mut f = StepFunction::zeros(resolution)?;
        check_disjoint(set)?;
        for node in set {
            for k in node.atom_range(resolution)? {
                f.values[k] = 1.0;
            }
        }
        Ok(f)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measure of one atom, `2^-N`.
    pub fn atom_measure(&self) -> f64 {
        exp2i(-(self.resolution as i32))
    }

    /// The same function sampled on a finer grid.
    pub fn refine(&self, resolution: u32) -> Result<StepFunction> {
        if resolution < self.resolution {
            return Err(HaarError::ResolutionTooSmall { needed: self.resolution, resolution });
        }
        let rep = 1usize << (resolution - self.resolution);
        let mut values = Vec::with_capacity(checked_len(resolution)?);
        for v in &self.values {
            values.extend(std::iter::repeat_n(*v, rep));
        }
        Ok(StepFunction { resolution, values })
    }

    fn at_resolution(&self, resolution: u32) -> Cow<'_, StepFunction> {
        if resolution == self.resolution {
            Cow::Borrowed(self)
        } else {
            Cow::Owned(self.refine(resolution).expect("refinement to a finer resolution"))
        }
    }

    fn aligned<'a>(&'a self, other: &'a StepFunction) -> (Cow<'a, StepFunction>, Cow<'a, StepFunction>) {
        let n = self.resolution.max(other.resolution);
        (self.at_resolution(n), other.at_resolution(n))
    }

    /// `∫ f g dx`.
    pub fn pairing(&self, other: &StepFunction) -> f64 {
        let (f, g) = self.aligned(other);
        let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
        s * f.atom_measure()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.atom_measure()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn zip_with(&self, other: &StepFunction, op: impl Fn(f64, f64) -> f64) -> StepFunction {
        let (f, g) = self.aligned(other);
        StepFunction {
            resolution: f.resolution,
            values: f.values.iter().zip(&g.values).map(|(a, b)| op(*a, *b)).collect(),
        }
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn pointwise_multiply(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> StepFunction {
        StepFunction { resolution: self.resolution, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `self += c * other` in place; `other` must not be finer than `self`.
    pub fn axpy(&mut self, c: f64, other: &StepFunction) -> Result<()> {
        if other.resolution > self.resolution {
            return Err(HaarError::ResolutionMismatch { operator: self.resolution, input: other.resolution });
        }
        let g = other.at_resolution(self.resolution);
        self.values.iter_mut().zip(&g.values).for_each(|(a, b)| *a += c * b);
        Ok(())
    }

    /// `1_A f` for a disjoint family `A` of intervals of level at most `N`.
    pub fn restrict(&self, set: &[DyadicInterval]) -> Result<StepFunction> {
        check_disjoint(set)?;
        let mut out = vec![0.0; self.values.len()];
        for node in set {
            for k in node.atom_range(self.resolution)? {
                out[k] = self.values[k];
            }
        }
        Ok(StepFunction { resolution: self.resolution, values: out })
    }

    /// Multiset of `(value, measure)` pairs, values increasing.
    pub fn distribution(&self) -> Distribution {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        Distribution::from_sorted(&sorted, self.atom_measure())
    }

    /// Values of `|f|` sorted non-increasingly, as a step function.
    pub fn decreasing_rearrangement(&self) -> StepFunction {
        StepFunction { resolution: self.resolution, values: sorted_abs_desc(&self.values) }
    }

    /// Coefficients `c` with `f = Σ_j c_j h_j`, `c[j-1]` belonging to index `j`.
    ///
    /// Butterfly of averages and half-differences, `O(N 2^N)`.
    pub fn haar_coeffs(&self) -> Vec<f64> {
        haar_analysis(&self.values)
    }

    pub fn from_haar_coeffs(coeffs: &[f64], resolution: u32) -> Result<StepFunction> {
        let len = checked_len(resolution)?;
        if coeffs.len() != len {
            return Err(HaarError::LengthMismatch { expected: len, got: coeffs.len() });
        }
        Ok(StepFunction { resolution, values: haar_synthesis(coeffs) })
    }

    /// `Σ_{j ≤ k} c_j h_j`, the `k`-th partial sum of the Haar expansion.
    pub fn partial_sum(&self, k: usize) -> StepFunction {
        let mut coeffs = self.haar_coeffs();
        coeffs.iter_mut().skip(k).for_each(|c| *c = 0.0);
        StepFunction { resolution: self.resolution, values: haar_synthesis(&coeffs) }
    }
}

/// Forward butterfly on a power-of-two slice of atom values.
pub(crate) fn haar_analysis(values: &[f64]) -> Vec<f64> {
    let len = values.len();
    let mut coeffs = vec![0.0; len];
    let mut avg = values.to_vec();
    let mut half = len / 2;
    while half >= 1 {
        // averages currently live on level log2(2*half); emit level log2(half).
        for p in 0..half {
            let (a, b) = (avg[2 * p], avg[2 * p + 1]);
            coeffs[half + p] = 0.5 * (a - b);
            avg[p] = 0.5 * (a + b);
        }
        half /= 2;
    }
    coeffs[0] = avg[0];
    coeffs
}

/// Inverse of [`haar_analysis`].
pub(crate) fn haar_synthesis(coeffs: &[f64]) -> Vec<f64> {
    let len = coeffs.len();
    let mut values = vec![0.0; len];
    values[0] = coeffs[0];
    let mut scratch = vec![0.0; len];
    let mut width = 1;
    while width < len {
        for p in 0..width {
            let (m, c) = (values[p], coeffs[width + p]);
            scratch[2 * p] = m + c;
            scratch[2 * p + 1] = m - c;
        }
        values[..2 * width].copy_from_slice(&scratch[..2 * width]);
        width *= 2;
    }
    values
}

pub(crate) fn sorted_abs_desc(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Errors when two intervals of `set` overlap.
pub fn check_disjoint(set: &[DyadicInterval]) -> Result<()> {
    let mut spans: Vec<(f64, f64, DyadicInterval)> = set.iter().map(|i| (i.bounds().0, i.bounds().1, *i)).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    for w in spans.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(HaarError::Overlap(w[0].2.to_string(), w[1].2.to_string()));
        }
    }
    Ok(())
}

/// Distribution of a step function: `(value, measure)` pairs with strictly
/// increasing values and positive dyadic measures summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub atoms: Vec<(f64, f64)>,
}

impl Distribution {
    /// Builds from values already sorted increasingly, each of mass `atom`.
    pub fn from_sorted(sorted: &[f64], atom: f64) -> Distribution {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut anchor = f64::NAN;
        for v in sorted {
            match atoms.last_mut() {
                Some(last) if (v - anchor).abs() <= VALUE_TOLERANCE => last.1 += atom,
                _ => {
                    anchor = *v;
                    atoms.push((*v, atom));
                }
            }
        }
        Distribution { atoms }
    }

    /// Builds from arbitrary `(value, mass)` pairs.
    pub fn from_weighted(mut pairs: Vec<(f64, f64)>) -> Distribution {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut anchor = f64::NAN;
        for (v, m) in pairs {
            match atoms.last_mut() {
                Some(last) if (v - anchor).abs() <= VALUE_TOLERANCE => last.1 += m,
                _ => {
                    anchor = v;
                    atoms.push((v, m));
                }
            }
        }
        Distribution { atoms }
    }

    pub fn total_measure(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Multiset comparison: same number of atoms, values equal up to the
    /// merge tolerance, measures bit-equal.
    pub fn same_as(&self, other: &Distribution) -> bool {
        self.atoms.len() == other.atoms.len()
            && self
                .atoms
                .iter()
                .zip(&other.atoms)
                .all(|(a, b)| (a.0 - b.0).abs() <= VALUE_TOLERANCE && a.1 == b.1)
    }

    /// `|f|` profile: absolute values in non-increasing order with masses,
    /// equal absolute values merged.
    pub fn abs_profile(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pairs: Vec<(f64, f64)> = self.atoms.iter().map(|(v, m)| (v.abs(), *m)).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut widths: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, m) in pairs {
            match values.last() {
                Some(last) if (last - v).abs() <= VALUE_TOLERANCE => *widths.last_mut().unwrap() += m,
                _ => {
                    values.push(v);
                    widths.push(m);
                }
            }
        }
        (values, widths)
    }
}

/// `f` and `g` have the same distribution.
pub fn equidistributed(f: &StepFunction, g: &StepFunction) -> bool {
    let (f, g) = f.aligned(g);
    f.distribution().same_as(&g.distribution())
}
