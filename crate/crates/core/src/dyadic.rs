//! Dyadic intervals of `[0, 1)`, their linear enumeration, and the Haar and
//! signed Rademacher generators built on them.
//!
//! A node `[(i-1)/2^j, i/2^j)` is stored as `(level = j, offset = i)` with the
//! 1-based offset convention, so that the enumeration is `2^j + i` and the
//! distinguished empty symbol gets index 1.

use serde::{Deserialize, Serialize};

use crate::error::{HaarError, Result};
use crate::stepfn::StepFunction;

/// Deepest level whose index still fits in a `u64`.
pub const MAX_LEVEL: u32 = 62;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DyadicInterval {
    /// The empty symbol; its Haar function is the constant one.
    Empty,
    Node { level: u32, offset: u64 },
}

impl DyadicInterval {
    pub const UNIT: DyadicInterval = DyadicInterval::Node { level: 0, offset: 1 };

    pub fn new(level: u32, offset: u64) -> Result<Self> {
        if level > MAX_LEVEL || offset == 0 || offset > (1u64 << level) {
            return Err(HaarError::InvalidInterval { level, offset });
        }
        Ok(DyadicInterval::Node { level, offset })
    }

    /// Builds a node from a 0-based position inside `D_level`.
    pub fn at(level: u32, position: u64) -> Self {
        debug_assert!(position < (1u64 << level));
        DyadicInterval::Node { level, offset: position + 1 }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, DyadicInterval::Empty)
    }

    /// Level of a node; the empty symbol sits at level 0 for resolution purposes.
    pub fn level(&self) -> u32 {
        match *self {
            DyadicInterval::Empty => 0,
            DyadicInterval::Node { level, .. } => level,
        }
    }

    /// 0-based position inside `D_level`.
    pub fn position(&self) -> u64 {
        match *self {
            DyadicInterval::Empty => 0,
            DyadicInterval::Node { offset, .. } => offset - 1,
        }
    }

    /// Lebesgue measure. The empty symbol is given measure 1 so that
    /// `|supp h_1| = |I_1|` holds with `h_1 = 1`.
    pub fn measure(&self) -> f64 {
        match *self {
            DyadicInterval::Empty => 1.0,
            DyadicInterval::Node { level, .. } => exp2i(-(level as i32)),
        }
    }

    /// Left and right endpoints as exact dyadic rationals.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            DyadicInterval::Empty => (0.0, 1.0),
            DyadicInterval::Node { level, offset } => {
                let w = exp2i(-(level as i32));
                ((offset - 1) as f64 * w, offset as f64 * w)
            }
        }
    }

    /// Left half `I+` and right half `I-`.
    pub fn children(&self) -> Result<(DyadicInterval, DyadicInterval)> {
        match *self {
            DyadicInterval::Empty => Err(HaarError::EmptyInterval),
            DyadicInterval::Node { level, offset } => {
                if level >= MAX_LEVEL {
                    return Err(HaarError::InvalidInterval { level: level + 1, offset: 2 * offset });
                }
                Ok((
                    DyadicInterval::Node { level: level + 1, offset: 2 * offset - 1 },
                    DyadicInterval::Node { level: level + 1, offset: 2 * offset },
                ))
            }
        }
    }

    /// Range of atom indices covered at resolution `n` (the whole range for `Empty`).
    pub fn atom_range(&self, n: u32) -> Result<std::ops::Range<usize>> {
        match *self {
            DyadicInterval::Empty => Ok(0..(1usize << n)),
            DyadicInterval::Node { level, offset } => {
                if level > n {
                    return Err(HaarError::ResolutionTooSmall { needed: level, resolution: n });
                }
                let width = 1usize << (n - level);
                let start = (offset as usize - 1) * width;
                Ok(start..start + width)
            }
        }
    }

    /// True when `self` is contained in `other` (as sets).
    pub fn is_within(&self, other: &DyadicInterval) -> bool {
        match (*self, *other) {
            (_, DyadicInterval::Empty) => true,
            (DyadicInterval::Empty, DyadicInterval::Node { level, .. }) => level == 0,
            (DyadicInterval::Node { level: a, offset: i }, DyadicInterval::Node { level: b, offset: k }) => {
                a >= b && ((i - 1) >> (a - b)) == k - 1
            }
        }
    }

    /// All level-`level` intervals contained in `self`, left to right.
    pub fn subdivide(&self, level: u32) -> Result<Vec<DyadicInterval>> {
        let own = self.level();
        if level < own {
            return Err(HaarError::ResolutionTooSmall { needed: own, resolution: level });
        }
        let shift = level - own;
        let first = self.position() << shift;
        Ok((0..(1u64 << shift)).map(|p| DyadicInterval::at(level, first + p)).collect())
    }
}

impl std::fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            DyadicInterval::Empty => write!(f, "∅"),
            DyadicInterval::Node { level, offset } => {
                write!(f, "[{}/2^{}, {}/2^{})", offset - 1, level, offset, level)
            }
        }
    }
}

/// `2^e` for integer exponents, exact in the normal range.
pub(crate) fn exp2i(e: i32) -> f64 {
    2f64.powi(e)
}

/// Enumeration: `ı(∅) = 1`, `ı([(i-1)/2^j, i/2^j)) = 2^j + i`.
pub fn index_of(node: DyadicInterval) -> u64 {
    match node {
        DyadicInterval::Empty => 1,
        DyadicInterval::Node { level, offset } => (1u64 << level) + offset,
    }
}

/// Inverse of [`index_of`]; `j = 0` is rejected.
pub fn interval_of(j: u64) -> Result<DyadicInterval> {
    match j {
        0 => Err(HaarError::ZeroIndex),
        1 => Ok(DyadicInterval::Empty),
        _ => {
            let level = 63 - (j - 1).leading_zeros();
            Ok(DyadicInterval::Node { level, offset: j - (1u64 << level) })
        }
    }
}

/// Parent index in the Haar tree: `j = 2k - 1` and `j = 2k` both map to `k`.
pub fn parent_index(j: u64) -> Option<u64> {
    (j >= 3).then_some(j.div_ceil(2))
}

/// `h_I = χ_{I+} - χ_{I-}` at resolution `n`; `h_∅ = 1`.
pub fn haar(node: DyadicInterval, n: u32) -> Result<StepFunction> {
    let mut values = vec![0.0; checked_len(n)?];
    match node {
        DyadicInterval::Empty => values.fill(1.0),
        DyadicInterval::Node { level, .. } => {
            if level >= n {
                return Err(HaarError::ResolutionTooSmall { needed: level + 1, resolution: n });
            }
            write_haar(&mut values, node, n, 1.0);
        }
    }
    StepFunction::new(n, values)
}

/// Adds `sign * h_I` into an atom vector at resolution `n`. Caller guarantees `level(I) < n`.
pub(crate) fn write_haar(values: &mut [f64], node: DyadicInterval, n: u32, sign: f64) {
    match node {
        DyadicInterval::Empty => values.iter_mut().for_each(|v| *v += sign),
        DyadicInterval::Node { level, offset } => {
            let width = 1usize << (n - level);
            let start = (offset as usize - 1) * width;
            let half = width / 2;
            values[start..start + half].iter_mut().for_each(|v| *v += sign);
            values[start + half..start + width].iter_mut().for_each(|v| *v -= sign);
        }
    }
}

/// Checks that a sign map only contains `±1`.
pub(crate) fn check_signs(theta: &[i8]) -> Result<()> {
    match theta.iter().position(|s| *s != 1 && *s != -1) {
        Some(i) => Err(HaarError::InvalidSign { position: i, value: theta[i] }),
        None => Ok(()),
    }
}

/// Signed Rademacher `r_n^θ = Σ_{I ∈ D_n} θ(I) h_I`, with `theta[p]` the sign of
/// the `p`-th interval of `D_n` from the left.
pub fn rademacher(n: u32, theta: &[i8], resolution: u32) -> Result<StepFunction> {
    if n >= resolution {
        return Err(HaarError::ResolutionTooSmall { needed: n + 1, resolution });
    }
    let expected = 1usize << n;
    if theta.len() != expected {
        return Err(HaarError::SignMapLength { expected, got: theta.len() });
    }
    check_signs(theta)?;
    let mut values = vec![0.0; checked_len(resolution)?];
    for (p, s) in theta.iter().enumerate() {
        write_haar(&mut values, DyadicInterval::at(n, p as u64), resolution, *s as f64);
    }
    StepFunction::new(resolution, values)
}

/// Classical Rademacher `r_n` (all signs `+1`).
pub fn rademacher_plain(n: u32, resolution: u32) -> Result<StepFunction> {
    rademacher(n, &vec![1; 1usize << n.min(MAX_LEVEL)], resolution)
}

pub(crate) fn checked_len(n: u32) -> Result<usize> {
    if n > crate::stepfn::MAX_RESOLUTION {
        return Err(HaarError::ResolutionCap { resolution: n, cap: crate::stepfn::MAX_RESOLUTION });
    }
    Ok(1usize << n)
}
