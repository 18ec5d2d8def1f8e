use rand::Rng;

use super::*;
use crate::dyadic::{haar, index_of};
use crate::operator::{zoo, LinearOperator};
use crate::rinorm::RiNormSpec;
use crate::stepfn::equidistributed;

fn iv(level: u32, offset: u64) -> DyadicInterval {
    DyadicInterval::new(level, offset).unwrap()
}

#[test]
fn canonical_is_the_haar_system() {
    let sys = FaithfulSystem::canonical(4).unwrap();
    assert!(sys.validate().passed());
    assert_eq!(sys.len(), 16);
    for j in 1..=16 {
        assert_eq!(sys.materialize(j).unwrap(), haar(interval_of(j).unwrap(), 4).unwrap());
    }
    assert_eq!(sys.materialize(2).unwrap(), haar(DyadicInterval::UNIT, 4).unwrap());
}

#[test]
fn single_and_multi_interval_entries() {
    let e = FaithfulEntry::new(2, vec![(iv(2, 1), 1)]).unwrap();
    let mut values = vec![0.0; 8];
    e.write(&mut values, 3, 1.0);
    assert_eq!(values, haar(iv(2, 1), 3).unwrap().into_values());
    let e = FaithfulEntry::new(3, vec![(iv(3, 5), -1), (iv(3, 2), 1)]).unwrap();
    assert_eq!(e.intervals, vec![iv(3, 2), iv(3, 5)]);
    assert_eq!(e.support_measure(), 0.25);
    assert!(FaithfulEntry::new(3, vec![(iv(3, 1), 1), (iv(2, 2), 1)]).is_err());
    assert!(FaithfulEntry::new(3, vec![(iv(3, 1), 1), (iv(3, 1), 1)]).is_err());
    assert!(FaithfulEntry::new(3, vec![(iv(3, 1), 2)]).is_err());
}

/// `h̃_2 = h_{[0,1/2)} + h_{[1/2,1)}` at level 1, children at level 2.
fn level_one_system(theta2: [i8; 2]) -> FaithfulSystem {
    let e2 = FaithfulEntry::new(1, vec![(iv(1, 1), theta2[0]), (iv(1, 2), theta2[1])]).unwrap();
    // Children built for θ_2 = (+1, +1): [h̃_2 = 1] = [0,1/4) ∪ [1/2,3/4).
    let e3 = FaithfulEntry::new(2, vec![(iv(2, 1), 1), (iv(2, 3), -1)]).unwrap();
    let e4 = FaithfulEntry::new(2, vec![(iv(2, 2), 1), (iv(2, 4), 1)]).unwrap();
    FaithfulSystem::new(3, vec![e2, e3, e4]).unwrap()
}

#[test]
fn validation_reports_the_violated_clause() {
    let good = level_one_system([1, 1]);
    assert!(good.validate().passed(), "{:?}", good.validate());
    let flipped = level_one_system([1, -1]).validate();
    assert!(!flipped.passed());
    let child = flipped.clause(Clause::ChildSupport);
    assert_eq!(child.first_violation, Some(3));
    assert!(flipped.clause(Clause::RootSupport).passed);
    assert!(flipped.clause(Clause::Balance).passed);

    // |supp h̃_3| = 1/4 ≠ |I_3| = 1/2.
    let e2 = FaithfulEntry::new(0, vec![(DyadicInterval::UNIT, 1)]).unwrap();
    let e3 = FaithfulEntry::new(2, vec![(iv(2, 1), 1)]).unwrap();
    let report = FaithfulSystem::new(3, vec![e2, e3]).unwrap().validate();
    assert_eq!(report.clause(Clause::Measure).first_violation, Some(3));
    assert_eq!(report.clause(Clause::ChildSupport).first_violation, Some(3));

    let e2 = FaithfulEntry::new(1, vec![(iv(1, 1), 1)]).unwrap();
    let report = FaithfulSystem::new(3, vec![e2]).unwrap().validate();
    assert_eq!(report.clause(Clause::RootSupport).first_violation, Some(2));
}

#[test]
fn random_systems_are_faithful_and_deterministic() {
    let sys = FaithfulSystem::random(10, 7, 1).unwrap();
    assert!(sys.validate().passed());
    assert_eq!(sys.len(), 7);
    assert_eq!(sys, FaithfulSystem::random(10, 7, 1).unwrap());
    assert_ne!(sys, FaithfulSystem::random(10, 7, 2).unwrap());
    for seed in 0..50 {
        let count = 2 + seed % 60;
        let sys = FaithfulSystem::random(7, count, seed).unwrap();
        assert!(sys.validate().passed(), "seed {seed}");
    }
    assert!(FaithfulSystem::random(3, 9, 0).is_err());
    assert!(FaithfulSystem::random(3, 8, 0).unwrap().validate().passed());
}

#[test]
fn json_round_trip() {
    let sys = FaithfulSystem::random(6, 9, 4).unwrap();
    let text = serde_json::to_string(&sys).unwrap();
    let back: FaithfulSystem = serde_json::from_str(&text).unwrap();
    assert_eq!(sys, back);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["entries"][0]["j"], 1);
    assert!(v["entries"][0]["m"].is_null());
    assert_eq!(v["entries"][1]["j"], 2);
    assert!(v["entries"][1]["intervals"][0].is_array());
}

#[test]
fn distribution_and_norm_equality() {
    let specs = [RiNormSpec::lp(1.0).unwrap(), RiNormSpec::lp(3.0).unwrap(), RiNormSpec::lorentz(2.0, 1.0).unwrap()];
    let canon = FaithfulSystem::canonical(8).unwrap();
    let mut rng = crate::rng::stream(3, 3);
    for seed in 0..20 {
        let sys = FaithfulSystem::random(8, 15, seed).unwrap();
        for prefix in 1..=15 {
            let xi: Vec<f64> = (0..prefix).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let f = canon.combination(&xi).unwrap();
            let g = sys.combination(&xi).unwrap();
            assert!(equidistributed(&f, &g));
            for spec in &specs {
                assert!((spec.norm(&f) - spec.norm(&g)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn derandomized_sign_examples() {
    let n = 6;
    let delta = vec![iv(4, 2), iv(4, 5), iv(4, 6), iv(4, 11)];
    let id = LinearOperator::identity(n).unwrap();
    let c = derandomized_signs(&id, &delta, SignMode::ConditionalExpectation).unwrap();
    assert_eq!(c.value, 4.0 / 16.0);
    assert_eq!(c.expectation, 4.0 / 16.0);

    let lambda: Vec<f64> = (0..64).map(|k| 0.5 + k as f64 / 128.0).collect();
    let mult = LinearOperator::haar_multiplier(n, lambda.clone()).unwrap();
    let c = derandomized_signs(&mult, &delta, SignMode::ConditionalExpectation).unwrap();
    let want: f64 = delta.iter().map(|d| lambda[index_of(*d) as usize - 1] * d.measure()).sum();
    assert!((c.value - want).abs() < 1e-15);

    // |Δ| = 2: the greedy choice is the best of all four patterns.
    let mut rng = crate::rng::stream(8, 0);
    for _ in 0..50 {
        let dense = LinearOperator::dense(4, (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let pair = vec![iv(2, 1), iv(2, 3)];
        let c = derandomized_signs(&dense, &pair, SignMode::ConditionalExpectation).unwrap();
        let mut best = f64::NEG_INFINITY;
        for s in [[1i8, 1], [1, -1], [-1, 1], [-1, -1]] {
            let mut values = vec![0.0; 16];
            for (d, sign) in pair.iter().zip(s) {
                crate::dyadic::write_haar(&mut values, *d, 4, sign as f64);
            }
            let h = StepFunction::new(4, values).unwrap();
            best = best.max(dense.apply(&h).unwrap().pairing(&h));
        }
        assert!((c.value - best).abs() < 1e-12);
    }
    assert_eq!(
        derandomized_signs(&id, &[iv(2, 1), iv(3, 5)], SignMode::ConditionalExpectation).unwrap_err(),
        HaarError::MixedLevels
    );
    assert_eq!(derandomized_signs(&id, &[], SignMode::ConditionalExpectation).unwrap_err(), HaarError::EmptySet);
}

#[test]
fn derandomized_signs_beat_the_mean() {
    let mut rng = crate::rng::stream(9, 0);
    for _ in 0..100 {
        let dense = LinearOperator::dense(4, (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let level = rng.gen_range(1..4u32);
        let mut delta: Vec<DyadicInterval> =
            (0..1u64 << level).filter(|_| rng.gen_bool(0.6)).map(|p| DyadicInterval::at(level, p)).collect();
        if delta.is_empty() {
            delta.push(DyadicInterval::at(level, 0));
        }
        let greedy = derandomized_signs(&dense, &delta, SignMode::ConditionalExpectation).unwrap();
        assert!(greedy.value >= greedy.expectation - 1e-12);
        let full = derandomized_signs(&dense, &delta, SignMode::Exhaustive).unwrap();
        assert!(full.value >= full.greedy_value);
        assert_eq!(full.greedy_value, greedy.value);
        let gram = haar_gram(&dense, &delta).unwrap();
        assert!((signs::quadratic(&gram, &full.signs) - full.value).abs() < 1e-15);
    }
}

fn independent_offdiagonal(t: &LinearOperator, spec: &RiNormSpec, sys: &FaithfulSystem) -> f64 {
    let n = sys.resolution();
    let (a, b, _) = haar_normalizers(spec, sys.len(), n).unwrap();
    let funcs: Vec<StepFunction> = (1..=sys.len() as u64).map(|j| sys.materialize(j).unwrap()).collect();
    let mut total = 0.0;
    for i in 0..funcs.len() {
        let image = t.apply(&funcs[i]).unwrap();
        for j in 0..funcs.len() {
            if i != j {
                total += image.pairing(&funcs[j]).abs() / (a[i] * b[j]);
            }
        }
    }
    total
}

#[test]
fn identity_builds_to_the_headroom_with_zero_certificates() {
    let n = 10;
    let t = LinearOperator::identity(n).unwrap();
    for spec in [RiNormSpec::lp(2.0).unwrap(), RiNormSpec::lp(1.0).unwrap(), RiNormSpec::lorentz(2.0, 1.0).unwrap()] {
        let params = BuildParams { delta: 1.0, eta: 0.01, ..BuildParams::default() };
        let out = build_adapted(&t, &spec, &params).unwrap();
        assert_eq!(out.system.len(), n as usize + 1);
        assert!(out.system.validate().passed());
        for (k, row) in out.certificates.iter().enumerate() {
            assert_eq!(row.m, k as u32);
            assert_eq!(row.c3, 0.0);
            assert_eq!(row.c4, 0.0);
            assert!((row.diagonal - 1.0).abs() < 1e-12);
        }
        assert_eq!(out.grand_sum, 0.0);
        assert!(out.stop.as_ref().unwrap().last_level.is_none());
    }
}

#[test]
fn haar_multiplier_diagonal_is_a_weighted_average() {
    let n = 9;
    let t = zoo("haar-mult-random:delta=0.5", n, 4).unwrap();
    let crate::operator::OperatorForm::HaarMultiplier(lambda) = t.form().clone() else { panic!() };
    let spec = RiNormSpec::lp(3.0).unwrap();
    let out = build_adapted(&t, &spec, &BuildParams { delta: 0.5, eta: 0.5, ..BuildParams::default() }).unwrap();
    assert!(out.system.validate().passed());
    for row in &out.certificates {
        assert!(row.c3 < 1e-15 && row.c4 < 1e-15);
        let e = out.system.entry(row.j).unwrap();
        let avg: f64 = e.intervals.iter().map(|i| lambda[index_of(*i) as usize - 1] * i.measure()).sum::<f64>()
            / e.support_measure();
        assert!((row.diagonal - avg).abs() < 1e-12);
        assert!(row.diagonal >= 0.5);
    }
    assert!(independent_offdiagonal(&t, &spec, &out.system) < 1e-14);
}

#[test]
fn noise_operator_builds_with_certificates() {
    let n = 10;
    let t = zoo("identity-noise:eps=0.02", n, 5).unwrap();
    let spec = RiNormSpec::lp(2.0).unwrap();
    let params = BuildParams { delta: 0.9, eta: 0.5, ..BuildParams::default() };
    let out = build_adapted(&t, &spec, &params).unwrap();
    assert!(out.system.len() >= 7, "J = {}", out.system.len());
    assert!(out.system.validate().passed());
    for row in &out.certificates {
        assert!(row.c3 < row.budget / 2.0 && row.c4 < row.budget / 2.0);
        assert!(row.diagonal >= 0.9 - 1e-12);
    }
    assert!(out.grand_sum < 0.5);
    let oracle = independent_offdiagonal(&t, &spec, &out.system);
    assert!((oracle - out.grand_sum).abs() < 1e-12, "{oracle} vs {}", out.grand_sum);
    let sum_rows: f64 = out.certificates.iter().map(|r| r.c3 + r.c4).sum();
    assert!((sum_rows - out.grand_sum).abs() < 1e-12);
    assert_eq!(out, build_adapted(&t, &spec, &params).unwrap());
}

#[test]
fn builder_preconditions_and_failures() {
    let n = 6;
    let cond = LinearOperator::conditional_expectation(n, 2).unwrap();
    let spec = RiNormSpec::lp(2.0).unwrap();
    let err = build_adapted(&cond, &spec, &BuildParams::default()).unwrap_err();
    assert!(matches!(err, BuildError::NoLargeDiagonal { index: 5, .. }));

    // White noise couples every level, so tight budgets run out of levels.
    let white = zoo("identity-white-noise:eps=0.05", 8, 1).unwrap();
    let params = BuildParams { delta: 0.5, eta: 0.05, restarts: 2, ..BuildParams::default() };
    let out = build_adapted(&white, &spec, &params).unwrap();
    let stop = out.stop.clone().expect("stops early");
    assert_eq!(stop.index as usize, out.system.len() + 1);
    assert!(stop.last_level.is_some());
    let strict = BuildParams { target_entries: Some(9), ..params };
    assert!(matches!(build_adapted(&white, &spec, &strict), Err(BuildError::Failed(_))));
}

#[test]
fn certificate_csv_shape() {
    let t = LinearOperator::identity(4).unwrap();
    let out = build_adapted(&t, &RiNormSpec::lp(2.0).unwrap(), &BuildParams { delta: 1.0, ..BuildParams::default() })
        .unwrap();
    let csv = certificates_csv(&out.certificates);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("j,m,c3,c4,budget,diagonal,attempts"));
    assert_eq!(lines.count(), out.certificates.len());
}
