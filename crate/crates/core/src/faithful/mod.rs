//! Faithful Haar systems `(h̃_j)`: `{0, ±1}`-valued functions whose supports
//! recurse into the `±1` sets of their tree parent exactly as the Haar
//! functions do.
//!
//! Every entry `j ≥ 2` has the special form `h̃_j = Σ_{I ∈ Δ_j} θ_j(I) h_I`
//! with `Δ_j` a disjoint family at one level `m_j`; `h̃_1 = χ_[0,1)`.

mod builder;
mod signs;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_signs, checked_len, exp2i, interval_of, parent_index, write_haar, DyadicInterval};
use crate::error::{HaarError, Result};
use crate::rng::{stream, stream_id};
use crate::stepfn::{check_disjoint, StepFunction};

pub use builder::{
    build_adapted, certificates_csv, haar_normalizers, BuildError, BuildOutcome, BuildParams, CertificateRow,
    FailureReport,
};
pub use signs::{derandomized_signs, haar_gram, SignChoice, SignMode, EXHAUSTIVE_CAP};

/// Entry `j ≥ 2`: `Σ_{I ∈ intervals} θ(I) h_I`, all intervals at `level`,
/// sorted left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaithfulEntry {
    pub level: u32,
    pub intervals: Vec<DyadicInterval>,
    pub signs: Vec<i8>,
}

impl FaithfulEntry {
    pub fn new(level: u32, mut pairs: Vec<(DyadicInterval, i8)>) -> Result<Self> {
        pairs.sort_by_key(|(i, _)| i.position());
        let (intervals, signs) = pairs.into_iter().unzip();
        let entry = FaithfulEntry { level, intervals, signs };
        entry.check_form()?;
        Ok(entry)
    }

    fn check_form(&self) -> Result<()> {
        if self.intervals.is_empty() {
            return Err(HaarError::EmptySet);
        }
        if self.intervals.iter().any(|i| i.is_empty() || i.level() != self.level) {
            return Err(HaarError::MixedLevels);
        }
        if self.signs.len() != self.intervals.len() {
            return Err(HaarError::SignMapLength { expected: self.intervals.len(), got: self.signs.len() });
        }
        check_signs(&self.signs)?;
        check_disjoint(&self.intervals)
    }

    /// Total measure of the support.
    pub fn support_measure(&self) -> f64 {
        self.intervals.len() as f64 * exp2i(-(self.level as i32))
    }

    /// `[h̃ = sign]` as intervals one level below `level`.
    pub fn sign_set(&self, sign: i8) -> Vec<DyadicInterval> {
        self.intervals
            .iter()
            .zip(&self.signs)
            .map(|(i, s)| {
                let (plus, minus) = i.children().expect("non-empty interval");
                if *s == sign {
                    plus
                } else {
                    minus
                }
            })
            .collect()
    }

    fn write(&self, values: &mut [f64], n: u32, scale: f64) {
        for (i, s) in self.intervals.iter().zip(&self.signs) {
            write_haar(values, *i, n, scale * *s as f64);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemJson", into = "SystemJson")]
pub struct FaithfulSystem {
    resolution: u32,
    /// `entries[j - 2]` is entry `j`.
    entries: Vec<FaithfulEntry>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    j: u64,
    /// `None` for the constant entry `j = 1`.
    m: Option<u32>,
    intervals: Vec<(u32, u64)>,
    signs: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    resolution: u32,
    entries: Vec<EntryJson>,
}

impl From<FaithfulSystem> for SystemJson {
    fn from(sys: FaithfulSystem) -> Self {
        let mut entries = vec![EntryJson { j: 1, m: None, intervals: vec![], signs: vec![] }];
        for (k, e) in sys.entries.into_iter().enumerate() {
            entries.push(EntryJson {
                j: k as u64 + 2,
                m: Some(e.level),
                intervals: e.intervals.iter().map(|i| (i.level(), i.position() + 1)).collect(),
                signs: e.signs,
            });
        }
        SystemJson { resolution: sys.resolution, entries }
    }
}

impl TryFrom<SystemJson> for FaithfulSystem {
    type Error = HaarError;

    fn try_from(raw: SystemJson) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, e) in raw.entries.into_iter().enumerate() {
            if e.j != k as u64 + 1 {
                return Err(HaarError::Parse { what: "faithful system".into(), reason: format!("entry {k} has j = {}", e.j) });
            }
            if e.j == 1 {
                continue;
            }
            let level = e.m.ok_or_else(|| HaarError::Parse {
                what: "faithful system".into(),
                reason: format!("entry j = {} has no level", e.j),
            })?;
            let intervals =
                e.intervals.iter().map(|(l, o)| DyadicInterval::new(*l, *o)).collect::<Result<Vec<_>>>()?;
            let entry = FaithfulEntry { level, intervals, signs: e.signs };
            entry.check_form()?;
            entries.push(entry);
        }
        FaithfulSystem::new(raw.resolution, entries)
    }
}

/// One clause of the faithfulness definition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// `h̃_j = Σ θ(I) h_I` over disjoint same-level intervals below the resolution.
    SpecialForm,
    /// `supp h̃_2 = [0, 1)`.
    RootSupport,
    /// `supp h̃_{2k-1} = [h̃_k = 1]`, `supp h̃_{2k} = [h̃_k = -1]`.
    ChildSupport,
    /// `{0, ±1}` values with `|[h̃_j = 1]| = |[h̃_j = -1]|`.
    Balance,
    /// `|supp h̃_j| = |I_j|`.
    Measure,
    /// `∫ h̃_j = 0` for `j ≥ 2`.
    MeanZero,
}

pub const CLAUSES: [Clause; 6] =
    [Clause::SpecialForm, Clause::RootSupport, Clause::ChildSupport, Clause::Balance, Clause::Measure, Clause::MeanZero];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: Clause,
    pub passed: bool,
    pub first_violation: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub clauses: Vec<ClauseResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, clause: Clause) -> &ClauseResult {
        self.clauses.iter().find(|c| c.clause == clause).expect("every clause is reported")
    }
}

impl FaithfulSystem {
    /// Checks the special form of every entry; faithfulness is left to [`Self::validate`].
    pub fn new(resolution: u32, entries: Vec<FaithfulEntry>) -> Result<Self> {
        checked_len(resolution)?;
        for e in &entries {
            e.check_form()?;
            if e.level >= resolution {
                return Err(HaarError::ResolutionTooSmall { needed: e.level + 1, resolution });
            }
        }
        Ok(FaithfulSystem { resolution, entries })
    }

    /// `h̃_j = h_j` for `j ≤ 2^N`.
    pub fn canonical(resolution: u32) -> Result<Self> {
        let len = checked_len(resolution)? as u64;
        let entries = (2..=len)
            .map(|j| {
                let node = interval_of(j).expect("j >= 1");
                FaithfulEntry { level: node.level(), intervals: vec![node], signs: vec![1] }
            })
            .collect();
        Ok(FaithfulSystem { resolution, entries })
    }

    /// A random faithful system with `count` entries (`count` includes `h̃_1`).
    /// Levels are drawn uniformly from the range that still leaves room for
    /// every descendant below the resolution.
    pub fn random(resolution: u32, count: u64, seed: u64) -> Result<Self> {
        checked_len(resolution)?;
        if count < 1 {
            return Err(HaarError::ZeroIndex);
        }
        let deepest = interval_of(count)?.level();
        if count >= 2 && deepest + 1 > resolution {
            return Err(HaarError::ResolutionTooSmall { needed: deepest + 1, resolution });
        }
        let mut rng = stream(seed, stream_id(0x30, resolution as u64, count, 0));
        let mut sys = FaithfulSystem { resolution, entries: Vec::new() };
        for j in 2..=count {
            let support = sys.mandated_support(j)?;
            let lo = support[0].level();
            let hi = resolution - 1 - subtree_height(j, count);
            let level = rng.gen_range(lo..=hi);
            let intervals: Vec<DyadicInterval> =
                support.iter().flat_map(|i| i.subdivide(level).expect("level below resolution")).collect();
            let signs = intervals.iter().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            sys.entries.push(FaithfulEntry { level, intervals, signs });
        }
        Ok(sys)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Number of functions `J`, counting `h̃_1`.
    pub fn len(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[FaithfulEntry] {
        &self.entries
    }

    /// Entry `j ≥ 2`.
    pub fn entry(&self, j: u64) -> Result<&FaithfulEntry> {
        if j < 2 || j as usize > self.len() {
            return Err(HaarError::IndexOutOfRange { index: j as usize, len: self.len() });
        }
        Ok(&self.entries[j as usize - 2])
    }

    pub(crate) fn push(&mut self, entry: FaithfulEntry) {
        self.entries.push(entry);
    }

    /// The support that faithfulness prescribes for entry `j`, as intervals:
    /// `[0, 1)` for `j = 2`, otherwise the `±1` set of the parent. Needs
    /// entries `2..j` to be present.
    pub fn mandated_support(&self, j: u64) -> Result<Vec<DyadicInterval>> {
        match parent_index(j) {
            None if j == 2 => Ok(vec![DyadicInterval::UNIT]),
            None => Err(HaarError::IndexOutOfRange { index: j as usize, len: self.len() }),
            Some(k) => {
                let sign = if j % 2 == 1 { 1 } else { -1 };
                Ok(self.entry(k)?.sign_set(sign))
            }
        }
    }

    /// `h̃_j` at the system resolution.
    pub fn materialize(&self, j: u64) -> Result<StepFunction> {
        self.materialize_at(j, self.resolution)
    }

    pub fn materialize_at(&self, j: u64, n: u32) -> Result<StepFunction> {
        let mut values = vec![0.0; checked_len(n)?];
        if j == 1 {
            values.fill(1.0);
        } else {
            let e = self.entry(j)?;
            if e.level >= n {
                return Err(HaarError::ResolutionTooSmall { needed: e.level + 1, resolution: n });
            }
            e.write(&mut values, n, 1.0);
        }
        StepFunction::new(n, values)
    }

    /// `Σ_i ξ_i h̃_i` for `i = 1..=ξ.len()`, accumulated in index order.
    pub fn combination(&self, xi: &[f64]) -> Result<StepFunction> {
        if xi.len() > self.len() {
            return Err(HaarError::IndexOutOfRange { index: xi.len(), len: self.len() });
        }
        let n = self.resolution;
        let mut values = vec![0.0; checked_len(n)?];
        for (k, c) in xi.iter().enumerate() {
            if k == 0 {
                values.iter_mut().for_each(|v| *v += c);
            } else {
                self.entries[k - 1].write(&mut values, n, *c);
            }
        }
        StepFunction::new(n, values)
    }

    /// Checks every clause of the definition; violations are reported, not raised.
    pub fn validate(&self) -> ValidationReport {
        let n = self.resolution;
        let atom = exp2i(-(n as i32));
        let mut first: Vec<Option<u64>> = vec![None; CLAUSES.len()];
        let mut flag = |clause: Clause, j: u64| {
            let slot = &mut first[CLAUSES.iter().position(|c| *c == clause).expect("known clause")];
            slot.get_or_insert(j);
        };
        let mut materialized: Vec<Option<Vec<f64>>> = vec![Some(vec![1.0; 1 << n])];
        for (k, e) in self.entries.iter().enumerate() {
            let j = k as u64 + 2;
            if e.check_form().is_err() || e.level >= n {
                flag(Clause::SpecialForm, j);
                materialized.push(None);
                continue;
            }
            let mut values = vec![0.0; 1 << n];
            e.write(&mut values, n, 1.0);
            materialized.push(Some(values));
        }
        for j in 2..=self.len() as u64 {
            let Some(values) = &materialized[j as usize - 1] else {
                for c in [Clause::RootSupport, Clause::ChildSupport, Clause::Balance, Clause::Measure, Clause::MeanZero] {
                    if c != Clause::RootSupport || j == 2 {
                        flag(c, j);
                    }
                }
                continue;
            };
            let in_support: Vec<bool> = values.iter().map(|v| *v != 0.0).collect();
            if j == 2 && !in_support.iter().all(|s| *s) {
                flag(Clause::RootSupport, j);
            }
            if let Some(k) = parent_index(j) {
                let target = if j % 2 == 1 { 1.0 } else { -1.0 };
                let ok = match &materialized[k as usize - 1] {
                    Some(parent) => parent.iter().zip(&in_support).all(|(p, s)| (*p == target) == *s),
                    None => false,
                };
                if !ok {
                    flag(Clause::ChildSupport, j);
                }
            }
            let plus = values.iter().filter(|v| **v == 1.0).count();
            let minus = values.iter().filter(|v| **v == -1.0).count();
            let support = in_support.iter().filter(|s| **s).count();
            if plus + minus != support || plus != minus {
                flag(Clause::Balance, j);
            }
            let expected = interval_of(j).expect("j >= 1").measure();
            if support as f64 * atom != expected {
                flag(Clause::Measure, j);
            }
            if values.iter().sum::<f64>() != 0.0 {
                flag(Clause::MeanZero, j);
            }
        }
        ValidationReport {
            clauses: CLAUSES
                .iter()
                .zip(first)
                .map(|(clause, v)| ClauseResult { clause: *clause, passed: v.is_none(), first_violation: v })
                .collect(),
        }
    }
}

/// Generations below `j` in the Haar tree that still have indices `≤ count`.
fn subtree_height(j: u64, count: u64) -> u32 {
    let mut height = 0;
    let mut first_child = 2 * j - 1;
    while first_child <= count {
        height += 1;
        first_child = 2 * first_child - 1;
    }
    height
}

#[cfg(test)]
mod tests;
