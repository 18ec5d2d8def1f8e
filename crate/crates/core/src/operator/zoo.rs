//! Seeded catalogue of test operators, addressed by descriptors such as
//! `identity-noise:eps=0.02,decay=1.5`.

use rand::Rng;

use super::LinearOperator;
use crate::error::{HaarError, Result};
use crate::rinorm::{param_f64, parse_descriptor};
use crate::rng::{stream, stream_id, StreamRng};
use crate::stepfn::{haar_synthesis, StepFunction};

pub struct ZooEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub const CATALOGUE: &[ZooEntry] = &[
    ZooEntry { name: "identity", params: "", summary: "the identity" },
    ZooEntry { name: "neg-identity", params: "", summary: "minus the identity" },
    ZooEntry {
        name: "haar-mult-random",
        params: "delta=0.5",
        summary: "Haar multiplier with λ_j uniform in [delta, 1]",
    },
    ZooEntry {
        name: "signed-haar-mult",
        params: "delta=0.5",
        summary: "Haar multiplier with λ_j = ±u_j, u_j uniform in [delta, 1], random signs",
    },
    ZooEntry {
        name: "identity-noise",
        params: "eps=0.02,decay=1.5",
        summary: "I + eps·K, K dense with Haar-domain entries decaying like 2^(-decay·(level_a + level_b)), ‖K‖₂ ≤ 1",
    },
    ZooEntry {
        name: "identity-white-noise",
        params: "eps=0.02",
        summary: "I + eps·K, K dense with iid atom-basis entries, ‖K‖₂ ≈ 1",
    },
    ZooEntry {
        name: "pointwise-mult",
        params: "eps=0.1",
        summary: "multiplication by 1 + eps·u, u uniform in [-1, 1] per atom",
    },
    ZooEntry { name: "cond-exp", params: "k=2", summary: "conditional expectation onto D_k" },
    ZooEntry {
        name: "noise-haar-mult",
        params: "eps=0.02,decay=1.5,delta=0.5",
        summary: "identity-noise composed with haar-mult-random",
    },
];

const NOISE_DECAY: f64 = 1.5;

struct Params<'a> {
    descriptor: &'a str,
    values: Vec<(String, String)>,
    allowed: &'static str,
}

impl Params<'_> {
    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        Ok(param_f64(&self.values, key, self.descriptor)?.unwrap_or(default))
    }

    fn check_keys(&self) -> Result<()> {
        for (k, _) in &self.values {
            if !self.allowed.split(',').any(|a| a.split('=').next() == Some(k.as_str())) {
                return Err(HaarError::Parse {
                    what: self.descriptor.to_string(),
                    reason: format!("unknown parameter `{k}`"),
                });
            }
        }
        Ok(())
    }
}

fn tag_of(name: &str) -> u16 {
    CATALOGUE.iter().position(|e| e.name == name).map_or(0xff, |p| 0x20 + p as u16)
}

/// Builds the operator named by `descriptor` at `resolution`; deterministic in `seed`.
pub fn zoo(descriptor: &str, resolution: u32, seed: u64) -> Result<LinearOperator> {
    let (name, values) = parse_descriptor(descriptor)?;
    let entry = CATALOGUE
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| HaarError::UnknownName { kind: "operator", name: name.clone() })?;
    let params = Params { descriptor, values, allowed: entry.params };
    params.check_keys()?;
    let rng = |sub: u64| stream(seed, stream_id(tag_of(entry.name), resolution as u64, sub, 0));
    let n = resolution;
    match entry.name {
        "identity" => LinearOperator::identity(n),
        "neg-identity" => Ok(LinearOperator::scale(-1.0, LinearOperator::identity(n)?)),
        "haar-mult-random" => random_multiplier(n, unit_interval(&params, "delta", 0.5)?, false, &mut rng(0)),
        "signed-haar-mult" => random_multiplier(n, unit_interval(&params, "delta", 0.5)?, true, &mut rng(0)),
        "identity-noise" => {
            let eps = params.f64("eps", 0.02)?;
            let decay = params.f64("decay", NOISE_DECAY)?;
            identity_plus(n, eps, LinearOperator::dense(n, haar_decaying_noise(n, decay, &mut rng(0))?)?)
        }
        "identity-white-noise" => {
            let eps = params.f64("eps", 0.02)?;
            identity_plus(n, eps, LinearOperator::dense(n, white_noise(n, &mut rng(0))?)?)
        }
        "pointwise-mult" => {
            let eps = params.f64("eps", 0.1)?;
            let mut r = rng(0);
            let m: Vec<f64> = (0..1usize << n).map(|_| 1.0 + eps * r.gen_range(-1.0..=1.0)).collect();
            LinearOperator::pointwise(n, &StepFunction::new(n, m)?)
        }
        "cond-exp" => {
            let k = params.f64("k", 2.0)?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(HaarError::InvalidParameter(format!("cond-exp needs an integer k >= 0, got {k}")));
            }
            LinearOperator::conditional_expectation(n, k as u32)
        }
        "noise-haar-mult" => {
            let eps = params.f64("eps", 0.02)?;
            let decay = params.f64("decay", NOISE_DECAY)?;
            let noise = identity_plus(n, eps, LinearOperator::dense(n, haar_decaying_noise(n, decay, &mut rng(0))?)?)?;
            let mult = random_multiplier(n, unit_interval(&params, "delta", 0.5)?, false, &mut rng(1))?;
            LinearOperator::compose(vec![noise, mult])
        }
        _ => unreachable!("catalogue entry without a builder"),
    }
}

fn unit_interval(params: &Params<'_>, key: &str, default: f64) -> Result<f64> {
    let v = params.f64(key, default)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(HaarError::InvalidParameter(format!("{key} must lie in (0, 1], got {v}")));
    }
    Ok(v)
}

fn identity_plus(n: u32, eps: f64, k: LinearOperator) -> Result<LinearOperator> {
    LinearOperator::sum(vec![LinearOperator::identity(n)?, LinearOperator::scale(eps, k)])
}

fn random_multiplier(n: u32, delta: f64, signed: bool, rng: &mut StreamRng) -> Result<LinearOperator> {
    let lambda = (0..1usize << n)
        .map(|_| {
            let u = rng.gen_range(delta..=1.0);
            if signed && rng.gen_bool(0.5) {
                -u
            } else {
                u
            }
        })
        .collect();
    LinearOperator::haar_multiplier(n, lambda)
}

/// Level of coefficient slot `a` (`a = j - 1`); the constant counts as level 0.
fn slot_level(a: usize) -> u32 {
    if a == 0 {
        0
    } else {
        usize::BITS - 1 - a.leading_zeros()
    }
}

/// Atom-basis matrix of `K = Σ k_ab ψ_a ⊗ ψ_b` in the orthonormal Haar basis
/// `ψ_a = h_a / √|I_a|`, with `k_ab = u_ab 2^{-decay (l_a + l_b)} / S`,
/// `u_ab` uniform in `[-1, 1]` and `S = Σ_a 2^{-2 decay l_a}`, so the
/// Frobenius norm, hence `‖K‖_{L²}`, is at most 1.
fn haar_decaying_noise(n: u32, decay: f64, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if n > super::DENSE_CAP {
        return Err(HaarError::DenseTooLarge { resolution: n, cap: super::DENSE_CAP });
    }
    if !(decay >= 0.0) {
        return Err(HaarError::InvalidParameter(format!("decay must be >= 0, got {decay}")));
    }
    let dim = 1usize << n;
    let weight: Vec<f64> = (0..dim).map(|a| (-decay * slot_level(a) as f64).exp2()).collect();
    let s: f64 = weight.iter().map(|w| w * w).sum();
    // ψ_a coefficient in the h_a basis.
    let scale: Vec<f64> = (0..dim).map(|a| if a == 0 { 1.0 } else { (slot_level(a) as f64 / 2.0).exp2() }).collect();
    let mut data = vec![0.0; dim * dim];
    for (a, row) in data.chunks_mut(dim).enumerate() {
        let coeffs: Vec<f64> =
            (0..dim).map(|b| rng.gen_range(-1.0..=1.0) * weight[a] * weight[b] / s * scale[b]).collect();
        row.copy_from_slice(&haar_synthesis(&coeffs));
    }
    transpose_in_place(&mut data, dim);
    let atom = (-(n as f64)).exp2();
    for row in data.chunks_mut(dim) {
        let coeffs: Vec<f64> = row.iter().zip(&scale).map(|(v, s)| v * s).collect();
        row.iter_mut().zip(haar_synthesis(&coeffs)).for_each(|(r, v)| *r = v * atom);
    }
    transpose_in_place(&mut data, dim);
    Ok(data)
}

/// Iid atom-basis entries uniform in `[-1, 1]`, scaled so the spectral norm is about 1.
fn white_noise(n: u32, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if n > super::DENSE_CAP {
        return Err(HaarError::DenseTooLarge { resolution: n, cap: super::DENSE_CAP });
    }
    let dim = 1usize << n;
    let scale = 3f64.sqrt() / (2.0 * (dim as f64).sqrt());
    Ok((0..dim * dim).map(|_| scale * rng.gen_range(-1.0..=1.0)).collect())
}

fn transpose_in_place(data: &mut [f64], dim: usize) {
    for r in 0..dim {
        for c in r + 1..dim {
            data.swap(r * dim + c, c * dim + r);
        }
    }
}
