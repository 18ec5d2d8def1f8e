//! Bounded operators on resolution-`N` step functions.
//!
//! Operators act on atom-value vectors; the adjoint is taken with respect to
//! the integral pairing `∫ f g`. Composite forms are matrix-free, so only
//! [`OperatorForm::Dense`] is limited by [`DENSE_CAP`].

mod dump;
mod zoo;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{checked_len, exp2i, haar, index_of, interval_of, rademacher_plain, DyadicInterval};
use crate::error::{HaarError, Result};
use crate::rinorm::RiNormSpec;
use crate::rng::{stream, stream_id};
use crate::stepfn::{haar_analysis, haar_synthesis, StepFunction};

pub use dump::{read_dense, write_dense, DUMP_HEADER_LEN, DUMP_MAGIC, DUMP_VERSION};
pub use zoo::{zoo, ZooEntry, CATALOGUE};

/// Largest resolution at which dense matrices are allowed (4096 atoms).
pub const DENSE_CAP: u32 = 12;

/// Absolute slack on every δ-threshold comparison.
pub const DIAGONAL_SLACK: f64 = 1e-12;

/// Square matrix in the atom basis, row-major. Transposition is a flag so
/// adjoints share storage.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    dim: usize,
    data: Arc<Vec<f64>>,
    transposed: bool,
}

impl DenseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        if self.transposed {
            self.data[c * self.dim + r]
        } else {
            self.data[r * self.dim + c]
        }
    }

    /// Row-major entries of the matrix as it acts.
    pub fn row_major(&self) -> Vec<f64> {
        if !self.transposed {
            return self.data.as_ref().clone();
        }
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] = self.data[c * n + r];
            }
        }
        out
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        if self.transposed {
            let mut y = vec![0.0; n];
            for (r, xr) in x.iter().enumerate() {
                if *xr != 0.0 {
                    y.iter_mut().zip(self.row(r)).for_each(|(yc, m)| *yc += xr * m);
                }
            }
            y
        } else {
            (0..n).map(|r| self.row(r).iter().zip(x).map(|(m, v)| m * v).sum()).collect()
        }
    }

    /// `M (χ_plus - χ_minus)` for contiguous atom ranges.
    fn signed_columns(&self, plus: std::ops::Range<usize>, minus: std::ops::Range<usize>) -> Vec<f64> {
        let n = self.dim;
        if self.transposed {
            let mut y = vec![0.0; n];
            for c in plus.clone() {
                y.iter_mut().zip(self.row(c)).for_each(|(v, m)| *v += m);
            }
            for c in minus.clone() {
                y.iter_mut().zip(self.row(c)).for_each(|(v, m)| *v -= m);
            }
            y
        } else {
            (0..n)
                .map(|r| {
                    let row = self.row(r);
                    row[plus.clone()].iter().sum::<f64>() - row[minus.clone()].iter().sum::<f64>()
                })
                .collect()
        }
    }

    /// `Σ_{r,c} h(r) M_rc h(c)` for `h = χ_plus - χ_minus`; the same for `M` and `Mᵀ`.
    fn signed_quadratic(&self, plus: std::ops::Range<usize>, minus: std::ops::Range<usize>) -> f64 {
        let mut total = 0.0;
        for (rows, rs) in [(plus.clone(), 1.0), (minus.clone(), -1.0)] {
            for r in rows {
                let row = self.row(r);
                total += rs * (row[plus.clone()].iter().sum::<f64>() - row[minus.clone()].iter().sum::<f64>());
            }
        }
        total
    }
}

#[derive(Clone, Debug)]
pub enum OperatorForm {
    Identity,
    Dense(DenseMatrix),
    /// `h_j ↦ λ_j h_j`, with `λ[j - 1]` belonging to index `j`.
    HaarMultiplier(Arc<Vec<f64>>),
    PointwiseMultiplier(StepFunction),
    /// Averaging onto `D_k`-measurable functions.
    ConditionalExpectation(u32),
    /// `f ↦ Σ_k ⟨f, φ_k⟩ ψ_k`.
    FiniteRank { functionals: Arc<Vec<StepFunction>>, outputs: Arc<Vec<StepFunction>> },
    /// `[A, B, C]` is `A ∘ B ∘ C`.
    Compose(Vec<LinearOperator>),
    Sum(Vec<LinearOperator>),
    Scale(f64, Box<LinearOperator>),
}

#[derive(Clone, Debug)]
pub struct LinearOperator {
    resolution: u32,
    form: OperatorForm,
}

/// Haar diagonal `d_j = ⟨T h_j, h_j⟩` for `j = 1..=2^N` and `d_j / |I_j|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarDiagonal {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PowerIteration {
    /// `‖T x‖₂ / ‖x‖₂` at the final iterate; a lower bound on `‖T‖_{L²}`.
    pub value: f64,
    pub vector: StepFunction,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct NormProbe {
    pub lower_bound: f64,
    pub witness: StepFunction,
    /// For `L²` only: the power-iteration value on `T*T`.
    pub power_iteration: Option<f64>,
}

fn node_measure(node: DyadicInterval) -> f64 {
    node.measure()
}

/// Atom ranges of `I+` and `I-` at resolution `n`; for `∅` the whole line is `+`.
pub(crate) fn haar_ranges(node: DyadicInterval, n: u32) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let full = node.atom_range(n).expect("level below resolution");
    match node {
        DyadicInterval::Empty => (full.clone(), full.end..full.end),
        _ => {
            let mid = full.start + full.len() / 2;
            (full.start..mid, mid..full.end)
        }
    }
}

impl LinearOperator {
    fn with_form(resolution: u32, form: OperatorForm) -> Result<Self> {
        checked_len(resolution)?;
        Ok(LinearOperator { resolution, form })
    }

    pub fn identity(resolution: u32) -> Result<Self> {
        Self::with_form(resolution, OperatorForm::Identity)
    }

    /// Dense matrix from row-major atom-basis entries.
    pub fn dense(resolution: u32, data: Vec<f64>) -> Result<Self> {
        if resolution > DENSE_CAP {
            return Err(HaarError::DenseTooLarge { resolution, cap: DENSE_CAP });
        }
        let dim = 1usize << resolution;
        if data.len() != dim * dim {
            return Err(HaarError::LengthMismatch { expected: dim * dim, got: data.len() });
        }
        Self::with_form(resolution, OperatorForm::Dense(DenseMatrix { dim, data: Arc::new(data), transposed: false }))
    }

    pub fn haar_multiplier(resolution: u32, lambda: Vec<f64>) -> Result<Self> {
        let len = checked_len(resolution)?;
        if lambda.len() != len {
            return Err(HaarError::LengthMismatch { expected: len, got: lambda.len() });
        }
        Self::with_form(resolution, OperatorForm::HaarMultiplier(Arc::new(lambda)))
    }

    pub fn pointwise(resolution: u32, m: &StepFunction) -> Result<Self> {
        if m.resolution() > resolution {
            return Err(HaarError::ResolutionMismatch { operator: resolution, input: m.resolution() });
        }
        Self::with_form(resolution, OperatorForm::PointwiseMultiplier(m.refine(resolution)?))
    }

    pub fn conditional_expectation(resolution: u32, k: u32) -> Result<Self> {
        if k > resolution {
            return Err(HaarError::ResolutionTooSmall { needed: k, resolution });
        }
        Self::with_form(resolution, OperatorForm::ConditionalExpectation(k))
    }

    pub fn finite_rank(resolution: u32, functionals: Vec<StepFunction>, outputs: Vec<StepFunction>) -> Result<Self> {
        if functionals.len() != outputs.len() {
            return Err(HaarError::LengthMismatch { expected: functionals.len(), got: outputs.len() });
        }
        let lift = |v: Vec<StepFunction>| -> Result<Vec<StepFunction>> {
            v.into_iter()
                .map(|f| {
                    if f.resolution() > resolution {
                        Err(HaarError::ResolutionMismatch { operator: resolution, input: f.resolution() })
                    } else {
                        f.refine(resolution)
                    }
                })
                .collect()
        };
        let form = OperatorForm::FiniteRank { functionals: Arc::new(lift(functionals)?), outputs: Arc::new(lift(outputs)?) };
        Self::with_form(resolution, form)
    }

    /// `parts[0] ∘ parts[1] ∘ …`.
    pub fn compose(parts: Vec<LinearOperator>) -> Result<Self> {
        let resolution = Self::common_resolution(&parts)?;
        Self::with_form(resolution, OperatorForm::Compose(parts))
    }

    pub fn sum(parts: Vec<LinearOperator>) -> Result<Self> {
        let resolution = Self::common_resolution(&parts)?;
        Self::with_form(resolution, OperatorForm::Sum(parts))
    }

    pub fn scale(c: f64, inner: LinearOperator) -> Self {
        LinearOperator { resolution: inner.resolution, form: OperatorForm::Scale(c, Box::new(inner)) }
    }

    fn common_resolution(parts: &[LinearOperator]) -> Result<u32> {
        let first = parts.first().ok_or_else(|| HaarError::InvalidParameter("empty operator list".into()))?;
        for p in parts {
            if p.resolution != first.resolution {
                return Err(HaarError::ResolutionMismatch { operator: first.resolution, input: p.resolution });
            }
        }
        Ok(first.resolution)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn form(&self) -> &OperatorForm {
        &self.form
    }

    fn len(&self) -> usize {
        1usize << self.resolution
    }

    fn atom(&self) -> f64 {
        exp2i(-(self.resolution as i32))
    }

    /// `T f`; coarser inputs are refined first.
    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        if f.resolution() > self.resolution {
            return Err(HaarError::ResolutionMismatch { operator: self.resolution, input: f.resolution() });
        }
        let f = f.refine(self.resolution)?;
        StepFunction::new(self.resolution, self.apply_values(f.values()))
    }

    pub(crate) fn apply_values(&self, v: &[f64]) -> Vec<f64> {
        match &self.form {
            OperatorForm::Identity => v.to_vec(),
            OperatorForm::Dense(m) => m.apply(v),
            OperatorForm::HaarMultiplier(lambda) => {
                let mut c = haar_analysis(v);
                c.iter_mut().zip(lambda.iter()).for_each(|(c, l)| *c *= l);
                haar_synthesis(&c)
            }
            OperatorForm::PointwiseMultiplier(m) => v.iter().zip(m.values()).map(|(a, b)| a * b).collect(),
            OperatorForm::ConditionalExpectation(k) => {
                let block = 1usize << (self.resolution - k);
                let mut out = Vec::with_capacity(v.len());
                for chunk in v.chunks(block) {
                    let mean = chunk.iter().sum::<f64>() / block as f64;
                    out.extend(std::iter::repeat_n(mean, block));
                }
                out
            }
            OperatorForm::FiniteRank { functionals, outputs } => {
                let mut out = vec![0.0; v.len()];
                for (phi, psi) in functionals.iter().zip(outputs.iter()) {
                    let c = self.atom() * phi.values().iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                    if c != 0.0 {
                        out.iter_mut().zip(psi.values()).for_each(|(o, p)| *o += c * p);
                    }
                }
                out
            }
            OperatorForm::Compose(parts) => {
                parts.iter().rev().fold(v.to_vec(), |acc, p| p.apply_values(&acc))
            }
            OperatorForm::Sum(parts) => {
                let mut out = vec![0.0; v.len()];
                for p in parts {
                    out.iter_mut().zip(p.apply_values(v)).for_each(|(o, x)| *o += x);
                }
                out
            }
            OperatorForm::Scale(c, inner) => inner.apply_values(v).into_iter().map(|x| c * x).collect(),
        }
    }

    /// The adjoint under `∫ f g`.
    pub fn adjoint(&self) -> LinearOperator {
        let form = match &self.form {
            OperatorForm::Dense(m) => OperatorForm::Dense(DenseMatrix { transposed: !m.transposed, ..m.clone() }),
            OperatorForm::FiniteRank { functionals, outputs } => {
                OperatorForm::FiniteRank { functionals: outputs.clone(), outputs: functionals.clone() }
            }
            OperatorForm::Compose(parts) => OperatorForm::Compose(parts.iter().rev().map(|p| p.adjoint()).collect()),
            OperatorForm::Sum(parts) => OperatorForm::Sum(parts.iter().map(|p| p.adjoint()).collect()),
            OperatorForm::Scale(c, inner) => OperatorForm::Scale(*c, Box::new(inner.adjoint())),
            other => other.clone(),
        };
        LinearOperator { resolution: self.resolution, form }
    }

    fn check_node(&self, node: DyadicInterval) -> Result<()> {
        match node {
            DyadicInterval::Node { level, .. } if level >= self.resolution => {
                Err(HaarError::ResolutionTooSmall { needed: level + 1, resolution: self.resolution })
            }
            _ => Ok(()),
        }
    }

    /// `T h_I`, with fast paths that avoid a full application.
    pub fn apply_haar(&self, node: DyadicInterval) -> Result<StepFunction> {
        self.check_node(node)?;
        StepFunction::new(self.resolution, self.haar_image(node))
    }

    pub(crate) fn haar_image(&self, node: DyadicInterval) -> Vec<f64> {
        let n = self.resolution;
        let plain = || haar(node, n).expect("checked node").into_values();
        if let Some(lambda) = self.haar_eigenvalue(node) {
            let mut h = plain();
            h.iter_mut().for_each(|v| *v *= lambda);
            return h;
        }
        match &self.form {
            OperatorForm::Dense(m) => {
                let (plus, minus) = haar_ranges(node, n);
                m.signed_columns(plus, minus)
            }
            OperatorForm::PointwiseMultiplier(m) => {
                let mut h = plain();
                h.iter_mut().zip(m.values()).for_each(|(a, b)| *a *= b);
                h
            }
            OperatorForm::FiniteRank { functionals, outputs } => {
                let (plus, minus) = haar_ranges(node, n);
                let mut out = vec![0.0; self.len()];
                for (phi, psi) in functionals.iter().zip(outputs.iter()) {
                    let v = phi.values();
                    let c = self.atom() * (v[plus.clone()].iter().sum::<f64>() - v[minus.clone()].iter().sum::<f64>());
                    if c != 0.0 {
                        out.iter_mut().zip(psi.values()).for_each(|(o, p)| *o += c * p);
                    }
                }
                out
            }
            OperatorForm::Compose(parts) => {
                let (last, rest) = parts.split_last().expect("non-empty composition");
                rest.iter().rev().fold(last.haar_image(node), |acc, p| p.apply_values(&acc))
            }
            OperatorForm::Sum(parts) => {
                let mut out = vec![0.0; self.len()];
                for p in parts {
                    out.iter_mut().zip(p.haar_image(node)).for_each(|(o, x)| *o += x);
                }
                out
            }
            OperatorForm::Scale(c, inner) => inner.haar_image(node).into_iter().map(|x| c * x).collect(),
            _ => self.apply_values(&plain()),
        }
    }

    /// `λ` with `T h_I = λ h_I` when the form is diagonal in the Haar basis.
    pub fn haar_eigenvalue(&self, node: DyadicInterval) -> Option<f64> {
        match &self.form {
            OperatorForm::Identity => Some(1.0),
            OperatorForm::HaarMultiplier(lambda) => Some(lambda[index_of(node) as usize - 1]),
            OperatorForm::ConditionalExpectation(k) => Some(match node {
                DyadicInterval::Node { level, .. } if level >= *k => 0.0,
                _ => 1.0,
            }),
            OperatorForm::Scale(c, inner) => inner.haar_eigenvalue(node).map(|l| c * l),
            OperatorForm::Sum(parts) => parts.iter().map(|p| p.haar_eigenvalue(node)).sum(),
            OperatorForm::Compose(parts) => parts.iter().map(|p| p.haar_eigenvalue(node)).product(),
            _ => None,
        }
    }

    /// `⟨T h_I, h_I⟩`.
    pub fn diagonal_entry(&self, node: DyadicInterval) -> Result<f64> {
        self.check_node(node)?;
        Ok(self.diag(node))
    }

    fn diag(&self, node: DyadicInterval) -> f64 {
        let measure = node_measure(node);
        if let Some(lambda) = self.haar_eigenvalue(node) {
            return lambda * measure;
        }
        let n = self.resolution;
        match &self.form {
            OperatorForm::Dense(m) => {
                let (plus, minus) = haar_ranges(node, n);
                self.atom() * m.signed_quadratic(plus, minus)
            }
            OperatorForm::PointwiseMultiplier(m) => {
                let range = node.atom_range(n).expect("checked node");
                self.atom() * m.values()[range].iter().sum::<f64>()
            }
            OperatorForm::Sum(parts) => parts.iter().map(|p| p.diag(node)).sum(),
            OperatorForm::Scale(c, inner) => c * inner.diag(node),
            OperatorForm::Compose(parts) => {
                // ⟨D T h, h⟩ = λ ⟨T h, h⟩ for Haar-diagonal D on either side.
                let (mut lo, mut hi, mut factor) = (0, parts.len(), 1.0);
                while lo < hi {
                    match parts[hi - 1].haar_eigenvalue(node) {
                        Some(l) => {
                            factor *= l;
                            hi -= 1;
                        }
                        None => break,
                    }
                }
                while lo < hi {
                    match parts[lo].haar_eigenvalue(node) {
                        Some(l) => {
                            factor *= l;
                            lo += 1;
                        }
                        None => break,
                    }
                }
                if factor == 0.0 {
                    return 0.0;
                }
                match hi - lo {
                    0 => factor * measure,
                    1 => factor * parts[lo].diag(node),
                    _ => {
                        let inner = LinearOperator { resolution: n, form: OperatorForm::Compose(parts[lo..hi].to_vec()) };
                        factor * self.haar_pair(&inner.haar_image(node), node)
                    }
                }
            }
            _ => self.haar_pair(&self.haar_image(node), node),
        }
    }

    fn haar_pair(&self, u: &[f64], node: DyadicInterval) -> f64 {
        pair_with_haar(u, node, self.resolution)
    }

    pub fn haar_diagonal(&self) -> HaarDiagonal {
        let len = self.len() as u64;
        let mut raw = Vec::with_capacity(len as usize);
        let mut normalized = Vec::with_capacity(len as usize);
        for j in 1..=len {
            let node = interval_of(j).expect("j >= 1");
            let d = self.diag(node);
            raw.push(d);
            normalized.push(d / node_measure(node));
        }
        HaarDiagonal { raw, normalized }
    }

    /// First index `j` whose normalized diagonal misses `δ` (by more than
    /// [`DIAGONAL_SLACK`]), with that normalized value.
    pub fn large_diagonal_violation(&self, delta: f64, signed: bool) -> Option<(u64, f64)> {
        let len = self.len() as u64;
        (1..=len).find_map(|j| {
            let node = interval_of(j).expect("j >= 1");
            let d = self.diag(node) / node_measure(node);
            let v = if signed { d.abs() } else { d };
            (v < delta - DIAGONAL_SLACK).then_some((j, d))
        })
    }

    pub fn has_large_diagonal(&self, delta: f64, signed: bool) -> bool {
        self.large_diagonal_violation(delta, signed).is_none()
    }

    /// `(T̃, D̄)` with `D̄ h_j = sign(⟨T h_j, h_j⟩) h_j` and `T̃ = T ∘ D̄`.
    pub fn sign_flip_precondition(&self) -> Result<(LinearOperator, LinearOperator)> {
        let diag = self.haar_diagonal();
        let mut signs = Vec::with_capacity(diag.raw.len());
        for (k, d) in diag.raw.iter().enumerate() {
            if d.abs() <= DIAGONAL_SLACK {
                return Err(HaarError::ZeroDiagonal { index: k as u64 + 1 });
            }
            signs.push(d.signum());
        }
        let d_bar = LinearOperator::haar_multiplier(self.resolution, signs)?;
        let t_tilde = LinearOperator::compose(vec![self.clone(), d_bar.clone()])?;
        Ok((t_tilde, d_bar))
    }

    /// Dense atom-basis matrix of this operator.
    pub fn materialize(&self) -> Result<LinearOperator> {
        if self.resolution > DENSE_CAP {
            return Err(HaarError::DenseTooLarge { resolution: self.resolution, cap: DENSE_CAP });
        }
        if let OperatorForm::Dense(m) = &self.form {
            return LinearOperator::dense(self.resolution, m.row_major());
        }
        let n = self.len();
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            for (r, v) in self.apply_values(&e).into_iter().enumerate() {
                data[r * n + c] = v;
            }
            e[c] = 0.0;
        }
        LinearOperator::dense(self.resolution, data)
    }

    /// Power iteration on `T*T`.
    pub fn l2_norm(&self, seed: u64, iterations: usize) -> PowerIteration {
        let adj = self.adjoint();
        let (value, vector, iterations) =
            power_iteration(self.len(), |x| self.apply_values(x), |y| adj.apply_values(y), seed, iterations);
        PowerIteration { value, vector: StepFunction::new(self.resolution, vector).expect("length"), iterations }
    }

    /// Lower bound on `‖T‖_{F→F}` from structured and seeded random probes.
    pub fn operator_norm_probe(&self, spec: &RiNormSpec, probes: usize, seed: u64) -> NormProbe {
        let n = self.resolution;
        let mut best = (0.0, StepFunction::constant(n, 1.0).expect("resolution"));
        let mut consider = |f: StepFunction| {
            let nf = spec.norm(&f);
            if nf > 0.0 {
                let r = spec.norm(&StepFunction::new(n, self.apply_values(f.values())).expect("length")) / nf;
                if r > best.0 {
                    best = (r, f);
                }
            }
        };
        consider(StepFunction::constant(n, 1.0).expect("resolution"));
        for j in 2..=(self.len() as u64).min(64) {
            consider(haar(interval_of(j).expect("j >= 1"), n).expect("level below resolution"));
        }
        for level in 1..=n.min(3) {
            for pos in 0..(1u64 << level) {
                consider(StepFunction::indicator(n, &[DyadicInterval::at(level, pos)]).expect("single interval"));
            }
        }
        for level in 0..n.min(8) {
            consider(rademacher_plain(level, n).expect("level below resolution"));
        }
        let mut rng = stream(seed, stream_id(0x0b, 0, 0, 0));
        for _ in 0..probes {
            let values = (0..self.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            consider(StepFunction::new(n, values).expect("length"));
        }
        let power_iteration = spec.is_hilbert().then(|| {
            let pi = self.l2_norm(seed, 500);
            consider(pi.vector.clone());
            pi.value
        });
        NormProbe { lower_bound: best.0, witness: best.1, power_iteration }
    }
}

/// `∫ u h_I` for an atom vector `u` at resolution `n`.
pub(crate) fn pair_with_haar(u: &[f64], node: DyadicInterval, n: u32) -> f64 {
    let (plus, minus) = haar_ranges(node, n);
    exp2i(-(n as i32)) * (u[plus].iter().sum::<f64>() - u[minus].iter().sum::<f64>())
}

/// Power iteration for the largest singular value of a square map given as
/// closures `x ↦ A x` and `y ↦ Aᵀ y`. Returns `(‖A x‖/‖x‖, x, iterations)`
/// for the final unit iterate `x`, so the value is always a lower bound.
pub fn power_iteration(
    dim: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
    seed: u64,
    iterations: usize,
) -> (f64, Vec<f64>, usize) {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rng = stream(seed, stream_id(0x0a, dim as u64, 0, 0));
    let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut value = norm(&apply(&x));
    let mut best = (value, x.clone());
    let mut done = 0;
    for it in 0..iterations {
        done = it + 1;
        let y = apply_t(&apply(&x));
        let ny = norm(&y);
        if ny == 0.0 {
            break;
        }
        x = y.iter().map(|v| v / ny).collect();
        let next = norm(&apply(&x));
        let settled = (next - value).abs() <= 1e-15 * next;
        value = next;
        if value > best.0 {
            best = (value, x.clone());
        }
        if settled {
            break;
        }
    }
    (best.0, best.1, done)
}
