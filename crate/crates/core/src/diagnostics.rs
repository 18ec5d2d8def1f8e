//! Finite-scale evidence about weakly null Rademacher sequences.
//!
//! Weak nullity is a limit statement and nothing here decides it. The module
//! reports how `⟨1_A r_n^θ, g⟩` behaves as `n` grows, how small convex
//! combinations of Rademachers get in a given norm, and whether the norm
//! axioms hold on random samples.

use rand::Rng;
use serde::Serialize;

use crate::dyadic::{rademacher, DyadicInterval};
use crate::error::{HaarError, Result};
use crate::rinorm::RiNormSpec;
use crate::rng::{stream, stream_id};
use crate::stepfn::{check_disjoint, Distribution, StepFunction};

/// Largest `k` for which the optimizer enumerates all `2^k` sign patterns.
pub const OPTIMIZER_CAP: usize = 16;
/// Largest `k` for the uniform-weight baseline.
pub const UNIFORM_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: u32,
    pub value: f64,
    /// `g` is constant on the atoms of `D_n`, so the pairing vanishes.
    pub exact_zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
}

impl DecayTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,value,exact_zero\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{}\n", r.n, r.value, r.exact_zero));
        }
        out
    }
}

/// Signs `θ` on `D_n` for row `n` of a decay table.
pub fn decay_signs(theta_seed: u64, n: u32) -> Vec<i8> {
    let mut rng = stream(theta_seed, stream_id(0x50, n as u64, 0, 0));
    (0..1usize << n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect()
}

/// `|⟨1_A r_n^θ, g⟩|` for each `n` in `levels`, computed from the Haar
/// coefficients of `g`: `1_A r_n^θ = Σ_{I ∈ D_n, I ⊂ A} θ(I) h_I` when every
/// interval of `A` is coarser than `n`.
pub fn rademacher_pairing_decay(
    g: &StepFunction,
    set: &[DyadicInterval],
    theta_seed: u64,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<DecayTable> {
    if set.is_empty() {
        return Err(HaarError::EmptySet);
    }
    check_disjoint(set)?;
    let k = set.iter().map(|i| i.level()).max().unwrap_or(0);
    let res = g.resolution();
    let coeffs = g.haar_coeffs();
    let mut rows = Vec::new();
    for n in levels {
        if n <= k {
            return Err(HaarError::InvalidParameter(format!("row n = {n} must exceed the level {k} of A")));
        }
        if n >= res {
            return Err(HaarError::ResolutionTooSmall { needed: n + 1, resolution: res });
        }
        let theta = decay_signs(theta_seed, n);
        let width = 1usize << n;
        let measure = crate::dyadic::exp2i(-(n as i32));
        let mut sum = 0.0;
        for interval in set {
            for sub in interval.subdivide(n)? {
                let p = sub.position() as usize;
                sum += theta[p] as f64 * coeffs[width + p] * measure;
            }
        }
        rows.push(DecayRow { n, value: sum.abs(), exact_zero: constant_on_atoms(g, n) });
    }
    Ok(DecayTable { rows })
}

fn constant_on_atoms(g: &StepFunction, n: u32) -> bool {
    let block = 1usize << (g.resolution() - n);
    g.values().chunks(block).all(|c| c.iter().all(|v| *v == c[0]))
}

/// `1_A r = ½((1_A r + 1_{A^c} r) + (1_A r − 1_{A^c} r))` for `r = r_n^θ`,
/// compared exactly.
pub fn splitting_identity_holds(set: &[DyadicInterval], n: u32, theta: &[i8], resolution: u32) -> Result<bool> {
    let r = rademacher(n, theta, resolution)?;
    let inside = StepFunction::indicator(resolution, set)?;
    let on_a = r.pointwise_multiply(&inside);
    let off_a = r.pointwise_multiply(&StepFunction::constant(resolution, 1.0)?.sub(&inside));
    let rhs = on_a.add(&off_a).add(&on_a.sub(&off_a)).scale(0.5);
    Ok(on_a.values().iter().zip(rhs.values()).all(|(x, y)| x == y))
}

/// `Σ_j α_j r_{n_lo + j}^{θ_j}` at `resolution`; plain Rademachers when
/// `theta_seed` is `None`.
pub fn rademacher_combination(alphas: &[f64], n_lo: u32, theta_seed: Option<u64>, resolution: u32) -> Result<StepFunction> {
    let mut out = StepFunction::zeros(resolution)?;
    for (j, a) in alphas.iter().enumerate() {
        let n = n_lo + j as u32;
        let theta = match theta_seed {
            Some(seed) => decay_signs(seed, n),
            None => vec![1; 1usize << n],
        };
        out.axpy(*a, &rademacher(n, &theta, resolution)?)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakNullCertificate {
    pub n_lo: u32,
    pub n_hi: u32,
    /// Best weights found; uniform when the optimizer was skipped.
    pub alphas: Vec<f64>,
    pub value: f64,
    /// `‖(1/k) Σ r_j‖`.
    pub uniform_value: f64,
    /// The optimizer ran (`k ≤ OPTIMIZER_CAP`).
    pub optimized: bool,
}

/// `‖Σ α_j ε_j‖` for independent fair signs `ε_j`, the law of any
/// combination of Rademachers at distinct levels, signed or not.
pub fn rademacher_law_norm(spec: &RiNormSpec, alphas: &[f64]) -> Result<f64> {
    let k = alphas.len();
    if k > OPTIMIZER_CAP {
        return Err(HaarError::InvalidParameter(format!("at most {OPTIMIZER_CAP} weights can be enumerated, got {k}")));
    }
    let (values, widths) = pattern_profile(alphas);
    Ok(spec.profile_norm(&values, &widths))
}

/// Sorted `|Σ α_j ε_j|` over all patterns, with the pattern order.
fn pattern_values(alphas: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let k = alphas.len();
    let values: Vec<f64> = (0..1usize << k)
        .map(|mask| alphas.iter().enumerate().map(|(j, a)| if mask >> j & 1 == 0 { *a } else { -a }).sum())
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|x, y| values[*y].abs().total_cmp(&values[*x].abs()));
    (values, order)
}

fn pattern_profile(alphas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (values, order) = pattern_values(alphas);
    let w = crate::dyadic::exp2i(-(alphas.len() as i32));
    (order.iter().map(|i| values[*i].abs()).collect(), vec![w; values.len()])
}

fn uniform_norm(spec: &RiNormSpec, k: usize) -> f64 {
    // (k − 2m)/k with probability C(k, m) 2^{−k}.
    let mut mass = crate::dyadic::exp2i(-(k as i32));
    let mut pairs = Vec::with_capacity(k + 1);
    for m in 0..=k {
        pairs.push(((k as f64 - 2.0 * m as f64) / k as f64, mass));
        mass = mass * (k - m) as f64 / (m + 1) as f64;
    }
    spec.norm_of_distribution(&Distribution::from_weighted(pairs))
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
}

const WEAK_NULL_RESTARTS: usize = 4;

/// Minimizes `α ↦ ‖Σ_{j=n_lo}^{n_hi} α_j r_j‖` over the simplex by projected
/// subgradient descent with `budget` steps per restart; best-so-far, so the
/// value never increases with the budget.
///
/// The objective is convex and invariant under permuting `α`, so uniform
/// weights are already optimal; the search serves as a check of that.
pub fn weak_null_certificate(spec: &RiNormSpec, n_lo: u32, n_hi: u32, budget: usize, seed: u64) -> Result<WeakNullCertificate> {
    if n_hi < n_lo {
        return Err(HaarError::InvalidParameter(format!("empty level range {n_lo}..={n_hi}")));
    }
    let k = (n_hi - n_lo + 1) as usize;
    if k > UNIFORM_CAP {
        return Err(HaarError::InvalidParameter(format!("at most {UNIFORM_CAP} Rademachers, got {k}")));
    }
    let uniform_value = uniform_norm(spec, k);
    let uniform = vec![1.0 / k as f64; k];
    if k > OPTIMIZER_CAP {
        return Ok(WeakNullCertificate { n_lo, n_hi, alphas: uniform, value: uniform_value, optimized: false, uniform_value });
    }
    let mut best = (uniform_value, uniform.clone());
    for r in 0..WEAK_NULL_RESTARTS {
        let mut alpha = if r == 0 {
            uniform.clone()
        } else {
            let mut rng = stream(seed, stream_id(0x51, r as u64, k as u64, 0));
            let mut a: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = a.iter().sum();
            a.iter_mut().for_each(|x| *x /= s);
            a
        };
        for t in 1..=budget {
            let (values, order) = pattern_values(&alpha);
            let w = crate::dyadic::exp2i(-(k as i32));
            let profile: Vec<f64> = order.iter().map(|i| values[*i].abs()).collect();
            let widths = vec![w; profile.len()];
            let norm = spec.profile_norm(&profile, &widths);
            if norm < best.0 {
                best = (norm, alpha.clone());
            }
            let dn = spec.profile_gradient(&profile, &widths, norm);
            let mut grad = vec![0.0; k];
            for (rank, idx) in order.iter().enumerate() {
                let s = values[*idx].signum() * dn[rank];
                for (j, gj) in grad.iter_mut().enumerate() {
                    *gj += if idx >> j & 1 == 0 { s } else { -s };
                }
            }
            let step = 0.5 / (t as f64).sqrt();
            alpha.iter_mut().zip(&grad).for_each(|(a, g)| *a -= step * g);
            project_simplex(&mut alpha);
        }
    }
    Ok(WeakNullCertificate { n_lo, n_hi, alphas: best.1, value: best.0, optimized: true, uniform_value })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub spec: String,
    pub resolution: u32,
    pub trials: usize,
    /// `|‖χ_[0,1)‖ − 1|`.
    pub unit_error: f64,
    pub sandwich_violations: usize,
    /// `min_f min(‖f‖ − ‖f‖₁, ‖f‖_∞ − ‖f‖) / ‖f‖_∞`; negative on a violation.
    pub worst_sandwich_slack: f64,
    pub monotone_violations: usize,
    /// `min (‖f‖ − ‖S_k f‖) / ‖f‖` over the tested prefixes.
    pub worst_monotone_slack: f64,
}

const SUITE_TOLERANCE: f64 = 1e-10;

/// Random sample `t` of the suite: dense values, sparse values, indicators of
/// random unions and non-negative functions, in rotation.
fn suite_sample(rng: &mut impl Rng, n: u32, t: usize) -> StepFunction {
    let len = 1usize << n;
    let values: Vec<f64> = match t % 4 {
        0 => (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => (0..len).map(|_| if rng.gen_bool(0.1) { rng.gen_range(-5.0..5.0) } else { 0.0 }).collect(),
        2 => {
            let p = rng.gen_range(0.05..0.95);
            (0..len).map(|_| if rng.gen_bool(p) { 1.0 } else { 0.0 }).collect()
        }
        _ => (0..len).map(|_| rng.gen::<f64>().powi(3)).collect(),
    };
    StepFunction::new(n, values).expect("length")
}

/// Sandwich `‖f‖₁ ≤ ‖f‖ ≤ ‖f‖_∞` and `‖S_k f‖ ≤ ‖f‖` on `trials` seeded
/// samples at resolution `n`. Prefixes tested per sample: every level
/// boundary `2^l` and eight random `k`.
pub fn sandwich_and_monotone_suite(spec: &RiNormSpec, n: u32, trials: usize, seed: u64) -> Result<SuiteReport> {
    let one = StepFunction::constant(n, 1.0)?;
    let unit_error = (spec.norm(&one) - 1.0).abs();
    let l1 = RiNormSpec::Lp { p: 1.0 };
    let len = 1usize << n;
    let mut rng = stream(seed, stream_id(0x52, n as u64, 0, 0));
    let mut report = SuiteReport {
        spec: spec.to_string(),
        resolution: n,
        trials,
        unit_error,
        sandwich_violations: 0,
        worst_sandwich_slack: f64::INFINITY,
        monotone_violations: 0,
        worst_monotone_slack: f64::INFINITY,
    };
    for t in 0..trials {
        let f = suite_sample(&mut rng, n, t);
        let sup = f.sup_abs();
        if sup == 0.0 {
            continue;
        }
        let nf = spec.norm(&f);
        let slack = (nf - l1.norm(&f)).min(sup - nf) / sup;
        report.worst_sandwich_slack = report.worst_sandwich_slack.min(slack);
        if slack < -SUITE_TOLERANCE {
            report.sandwich_violations += 1;
        }
        let mut prefixes: Vec<usize> = (0..=n).map(|l| 1usize << l).collect();
        prefixes.extend((0..8).map(|_| rng.gen_range(1..=len)));
        for k in prefixes {
            let slack = (nf - spec.norm(&f.partial_sum(k))) / nf;
            report.worst_monotone_slack = report.worst_monotone_slack.min(slack);
            if slack < -SUITE_TOLERANCE {
                report.monotone_violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{haar, interval_of};
    use proptest::prelude::{prop, prop_assert, proptest, ProptestConfig};

    fn lp(p: f64) -> RiNormSpec {
        RiNormSpec::lp(p).unwrap()
    }

    fn iv(level: u32, offset: u64) -> DyadicInterval {
        DyadicInterval::new(level, offset).unwrap()
    }

    /// Direct atom-domain pairing of `1_A r_n^θ` with `g`.
    fn direct_pairing(g: &StepFunction, set: &[DyadicInterval], theta_seed: u64, n: u32) -> f64 {
        let r = rademacher(n, &decay_signs(theta_seed, n), g.resolution()).unwrap();
        let chi = StepFunction::indicator(g.resolution(), set).unwrap();
        r.pointwise_multiply(&chi).pairing(g).abs()
    }

    #[test]
    fn coarse_functions_give_exact_zero_rows() {
        let g = haar(interval_of(3).unwrap(), 10).unwrap();
        let table = rademacher_pairing_decay(&g, &[DyadicInterval::UNIT], 7, 2..=9).unwrap();
        assert_eq!(table.rows.len(), 8);
        for row in &table.rows {
            assert!(row.exact_zero);
            assert_eq!(row.value.to_bits(), 0.0f64.to_bits());
        }
        let one = StepFunction::constant(8, 1.0).unwrap();
        for row in rademacher_pairing_decay(&one, &[DyadicInterval::UNIT], 1, 1..=7).unwrap().rows {
            assert_eq!(row.value, 0.0);
        }
    }

    #[test]
    fn decay_rows_match_direct_pairings() {
        let mut rng = stream(3, 3);
        let g = StepFunction::new(9, (0..512).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let set = [iv(2, 1), iv(2, 4)];
        let table = rademacher_pairing_decay(&g, &set, 11, 3..=8).unwrap();
        for row in &table.rows {
            assert!(!row.exact_zero);
            assert!((row.value - direct_pairing(&g, &set, 11, row.n)).abs() < 1e-12);
        }
        // g coarse at level 5 but not at 4.
        let coarse = g.partial_sum(32);
        let table = rademacher_pairing_decay(&coarse, &set, 11, 3..=8).unwrap();
        for row in &table.rows {
            assert_eq!(row.exact_zero, row.n >= 5);
            if row.exact_zero {
                assert!(row.value <= 1e-14);
            }
        }
        assert!(table.to_csv().starts_with("n,value,exact_zero\n3,"));
    }

    #[test]
    fn decay_preconditions() {
        let g = StepFunction::constant(6, 1.0).unwrap();
        assert!(rademacher_pairing_decay(&g, &[iv(2, 1)], 0, 2..=4).is_err());
        assert!(rademacher_pairing_decay(&g, &[iv(2, 1)], 0, 3..=6).is_err());
        assert!(rademacher_pairing_decay(&g, &[], 0, 3..=4).is_err());
    }

    #[test]
    fn uniform_l2_certificate_is_inverse_sqrt_k() {
        for k in 1..=64u32 {
            let c = weak_null_certificate(&lp(2.0), 1, k, 20, 0).unwrap();
            assert!((c.uniform_value - 1.0 / (k as f64).sqrt()).abs() < 1e-12, "k = {k}");
            assert!(c.value <= c.uniform_value);
        }
    }

    #[test]
    fn law_norm_matches_materialized_combinations() {
        let mut rng = stream(4, 4);
        for spec in [lp(1.0), lp(2.0), lp(4.0), RiNormSpec::lorentz(2.0, 1.0).unwrap()] {
            for _ in 0..5 {
                let alphas: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
                let law = rademacher_law_norm(&spec, &alphas).unwrap();
                let plain = spec.norm(&rademacher_combination(&alphas, 2, None, 9).unwrap());
                let signed = spec.norm(&rademacher_combination(&alphas, 2, Some(17), 9).unwrap());
                assert!((law - plain).abs() < 1e-12 * law.max(1.0));
                assert!((law - signed).abs() < 1e-12 * law.max(1.0));
            }
        }
    }

    #[test]
    fn optimizer_never_beats_uniform_by_much_and_is_monotone_in_budget() {
        let spec = lp(4.0);
        let c = weak_null_certificate(&spec, 1, 8, 200, 9).unwrap();
        assert!(c.optimized);
        assert!(c.value <= c.uniform_value);
        // Uniform is the minimizer of a symmetric convex function.
        assert!(c.value >= c.uniform_value - 1e-12);
        let mut prev = f64::INFINITY;
        for budget in [0, 5, 20, 80] {
            let v = weak_null_certificate(&lp(1.5), 3, 10, budget, 2).unwrap().value;
            assert!(v <= prev);
            prev = v;
        }
        let big = weak_null_certificate(&lp(3.0), 1, 40, 10, 0).unwrap();
        assert!(!big.optimized);
        assert!(weak_null_certificate(&lp(2.0), 1, 70, 10, 0).is_err());
    }

    #[test]
    fn suite_reports_no_violations() {
        for spec in [lp(2.0), lp(1.0), lp(3.0), RiNormSpec::lorentz(2.0, 1.0).unwrap()] {
            let r = sandwich_and_monotone_suite(&spec, 8, 200, 1).unwrap();
            assert!(r.unit_error < 1e-12);
            assert_eq!(r.sandwich_violations, 0, "{spec}");
            assert_eq!(r.monotone_violations, 0, "{spec}");
            assert!(r.worst_sandwich_slack >= -1e-10);
        }
    }

    #[test]
    fn indicator_sandwich_reads_measure() {
        let set = [iv(2, 1), iv(3, 7)];
        let chi = StepFunction::indicator(5, &set).unwrap();
        for spec in [lp(1.5), RiNormSpec::lorentz(2.0, 1.0).unwrap()] {
            let v = spec.norm(&chi);
            assert!(0.375 <= v + 1e-12 && v <= 1.0 + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn splitting_identity_is_exact(mask in 1u32..256, n in 3u32..7, seed in 0u64..1000) {
            let set: Vec<DyadicInterval> = (0..8).filter(|p| mask >> p & 1 == 1).map(|p| DyadicInterval::at(3, p)).collect();
            let theta = decay_signs(seed, n);
            prop_assert!(splitting_identity_holds(&set, n, &theta, 8).unwrap());
        }

        #[test]
        fn project_simplex_lands_on_simplex(v in prop::collection::vec(-3.0..3.0f64, 1..12)) {
            let mut w = v.clone();
            project_simplex(&mut w);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
