//! Coefficient distributions and evaluation of the random wave
//!
//! ```text
//! F(t) = sqrt(2/N) * sum over pairs {mu, -mu} of
//!        eps1 cos(2 pi <mu, gamma(t)>) + eps2 sin(2 pi <mu, gamma(t)>)
//! ```
//!
//! One coefficient pair (eps1, eps2) is drawn per antipodal pair of lattice
//! points; the conjugate constraint eps(-mu) = conj(eps(mu)) is then automatic
//! and F is real by construction. With unit-variance components the sqrt(2/N)
//! scaling gives Var F(t) = 1 for every t and every distribution below, which
//! is the single normalization used across the crate.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{Curve, CurveSampler};
use crate::lattice::LatticeSet;
use crate::math;

/// Supported coefficient distributions (all mean 0, variance 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientKind {
    Gaussian,
    Bernoulli,
    Uniform,
    Mixed,
}

impl fmt::Display for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CoefficientKind::Gaussian => "gaussian",
            CoefficientKind::Bernoulli => "bernoulli",
            CoefficientKind::Uniform => "uniform",
            CoefficientKind::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// A coefficient distribution together with its declared regularity data:
/// `k_bound` is the constant K (density bound for continuous kinds, atom
/// floor witness for discrete ones); the mixed model takes the two atoms
/// +/-1 with total probability `atom_prob` and otherwise draws uniformly on
/// `[-spread, spread]` with `spread = sqrt(3)` so the variance stays 1.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientModel {
    pub kind: CoefficientKind,
    pub k_bound: f64,
    pub atom_prob: f64,
    pub spread: f64,
}

const SQRT3: f64 = 1.7320508075688772;

impl CoefficientModel {
    pub fn gaussian() -> Self {
        CoefficientModel {
            kind: CoefficientKind::Gaussian,
            // peak of the standard normal density
            k_bound: 0.3989422804014327,
            atom_prob: 0.0,
            spread: 0.0,
        }
    }

    pub fn bernoulli() -> Self {
        CoefficientModel {
            kind: CoefficientKind::Bernoulli,
            // |eps| = 1 > 1/K with probability one
            k_bound: 2.0,
            atom_prob: 1.0,
            spread: 0.0,
        }
    }

    pub fn uniform() -> Self {
        CoefficientModel {
            kind: CoefficientKind::Uniform,
            k_bound: 1.0 / (2.0 * SQRT3),
            atom_prob: 0.0,
            spread: SQRT3,
        }
    }

    pub fn mixed() -> Self {
        CoefficientModel {
            kind: CoefficientKind::Mixed,
            // the truncation eps * 1_{|eps| <= 1/K} keeps only the uniform
            // part (atoms sit at +/-1 > 1/2), whose density is 0.1/(2 sqrt 3)
            k_bound: 2.0,
            atom_prob: 0.9,
            spread: SQRT3,
        }
    }

    pub fn by_kind(kind: CoefficientKind) -> Self {
        match kind {
            CoefficientKind::Gaussian => Self::gaussian(),
            CoefficientKind::Bernoulli => Self::bernoulli(),
            CoefficientKind::Uniform => Self::uniform(),
            CoefficientKind::Mixed => Self::mixed(),
        }
    }

    /// One draw. The branch order is part of the determinism contract.
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            CoefficientKind::Gaussian => StandardNormal.sample(rng),
            CoefficientKind::Bernoulli => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientKind::Uniform => (2.0 * rng.random::<f64>() - 1.0) * SQRT3,
            CoefficientKind::Mixed => {
                let u: f64 = rng.random();
                if u < self.atom_prob {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    (2.0 * rng.random::<f64>() - 1.0) * self.spread
                }
            }
        }
    }
}

/// Deterministic per-trial seed: SplitMix64 finalizer over the master seed
/// and the trial index, so trials are reproducible and order-independent.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One drawn coefficient vector: arrays of length N/2, indexed like
/// [`LatticeSet::representatives`].
#[derive(Clone, Debug)]
pub struct WaveSample {
    lattice: Arc<LatticeSet>,
    eps1: Vec<f64>,
    eps2: Vec<f64>,
    pub seed: u64,
    pub model: CoefficientKind,
}

/// Draws the free-pair coefficients (eps1 then eps2 per pair, pairs in
/// storage order). Deterministic given (model, lattice, seed).
pub fn sample_coefficients(
    model: &CoefficientModel,
    lattice: &Arc<LatticeSet>,
    seed: u64,
) -> WaveSample {
    assert!(lattice.len() >= 2 && lattice.len().is_multiple_of(2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = lattice.len() / 2;
    let mut eps1 = Vec::with_capacity(half);
    let mut eps2 = Vec::with_capacity(half);
    for _ in 0..half {
        eps1.push(model.draw(&mut rng));
        eps2.push(model.draw(&mut rng));
    }
    WaveSample {
        lattice: Arc::clone(lattice),
        eps1,
        eps2,
        seed,
        model: model.kind,
    }
}

impl WaveSample {
    /// Builds a sample with explicit coefficients (test fixtures).
    pub fn from_coefficients(lattice: &Arc<LatticeSet>, eps1: Vec<f64>, eps2: Vec<f64>) -> Self {
        assert_eq!(eps1.len(), lattice.len() / 2);
        assert_eq!(eps2.len(), lattice.len() / 2);
        WaveSample {
            lattice: Arc::clone(lattice),
            eps1,
            eps2,
            seed: 0,
            model: CoefficientKind::Gaussian,
        }
    }

    pub fn lattice(&self) -> &Arc<LatticeSet> {
        &self.lattice
    }

    pub fn eps1(&self) -> &[f64] {
        &self.eps1
    }

    pub fn eps2(&self) -> &[f64] {
        &self.eps2
    }

    pub fn is_finite(&self) -> bool {
        self.eps1.iter().chain(&self.eps2).all(|x| x.is_finite())
    }

    /// sqrt(2/N), the single normalization constant.
    pub fn amplitude(&self) -> f64 {
        math::sqrt(2.0 / self.lattice.len() as f64)
    }

    /// Coefficient-wise rescaling (zero sets are invariant under it).
    pub fn scaled(&self, c: f64) -> WaveSample {
        WaveSample {
            lattice: Arc::clone(&self.lattice),
            eps1: self.eps1.iter().map(|x| x * c).collect(),
            eps2: self.eps2.iter().map(|x| x * c).collect(),
            seed: self.seed,
            model: self.model,
        }
    }

    /// sum over pairs of sqrt(eps1^2 + eps2^2); enters the derivative bound
    /// |F'| <= 2 pi sqrt(m) * speed * sqrt(2/N) * amplitude_sum.
    pub fn amplitude_sum(&self) -> f64 {
        self.eps1
            .iter()
            .zip(&self.eps2)
            .map(|(a, b)| math::sqrt(a * a + b * b))
            .sum()
    }

    /// F(t) along the curve.
    pub fn eval(&self, curve: &Curve, t: f64) -> f64 {
        let gamma = curve.eval(t);
        let mut acc = 0.0;
        for (j, mu) in self.lattice.representatives().iter().enumerate() {
            let phase = math::TAU * math::idot(mu, &gamma);
            acc += self.eps1[j] * math::cos(phase) + self.eps2[j] * math::sin(phase);
        }
        self.amplitude() * acc
    }

    /// Exact derivative dF/dt along the curve.
    pub fn eval_prime(&self, curve: &Curve, t: f64) -> f64 {
        let jet = curve.jet(t);
        let mut acc = 0.0;
        for (j, mu) in self.lattice.representatives().iter().enumerate() {
            let phase = math::TAU * math::idot(mu, &jet[0]);
            let rate = math::TAU * math::idot(mu, &jet[1]);
            acc += rate * (-self.eps1[j] * math::sin(phase) + self.eps2[j] * math::cos(phase));
        }
        self.amplitude() * acc
    }
}

/// Precomputed cos/sin of the phases 2 pi <mu, gamma(t_i)> on a sampler grid,
/// node-major. Grid values of F for one sample then cost one fused pass per
/// node, which is what makes large trial counts cheap: the table depends only
/// on (lattice, curve, grid), not on the coefficients.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    lattice: Arc<LatticeSet>,
    sampler: Arc<CurveSampler>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    pairs: usize,
}

impl PhaseTable {
    pub fn new(lattice: &Arc<LatticeSet>, sampler: &Arc<CurveSampler>) -> Self {
        let reps = lattice.representatives();
        let pairs = reps.len();
        let nodes = sampler.nodes().len();
        let mut cos = Vec::with_capacity(pairs * nodes);
        let mut sin = Vec::with_capacity(pairs * nodes);
        for gamma in sampler.gamma() {
            for mu in reps {
                let phase = math::TAU * math::idot(mu, gamma);
                cos.push(math::cos(phase));
                sin.push(math::sin(phase));
            }
        }
        PhaseTable {
            lattice: Arc::clone(lattice),
            sampler: Arc::clone(sampler),
            cos,
            sin,
            pairs,
        }
    }

    pub fn lattice(&self) -> &Arc<LatticeSet> {
        &self.lattice
    }

    pub fn sampler(&self) -> &Arc<CurveSampler> {
        &self.sampler
    }

    /// F at grid node i.
    pub fn value_at(&self, sample: &WaveSample, i: usize) -> f64 {
        let base = i * self.pairs;
        let mut acc = 0.0;
        for j in 0..self.pairs {
            acc += sample.eps1()[j] * self.cos[base + j] + sample.eps2()[j] * self.sin[base + j];
        }
        sample.amplitude() * acc
    }

    /// F at every grid node.
    pub fn values(&self, sample: &WaveSample) -> Vec<f64> {
        (0..self.sampler.nodes().len())
            .map(|i| self.value_at(sample, i))
            .collect()
    }
}

/// Empirical spread and moment check of a coefficient model.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoefficientModelReport {
    pub draws: u64,
    /// empirical P(c1 <= |eps - eps'| <= c2)
    pub prob_in_band: f64,
    /// half-width of the 3-sigma binomial confidence interval
    pub ci_halfwidth: f64,
    pub mean: f64,
    pub variance: f64,
    /// histogram estimate of the density sup (continuous kinds only)
    pub density_max: Option<f64>,
    pub k_bound: f64,
}

pub fn validate_coefficient_model(
    model: &CoefficientModel,
    draws: u64,
    c1: f64,
    c2: f64,
    seed: u64,
) -> CoefficientModelReport {
    assert!(draws >= 10_000, "need at least 1e4 draws");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_band = 0u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut values = Vec::with_capacity(2 * draws as usize);
    for _ in 0..draws {
        let a = model.draw(&mut rng);
        let b = model.draw(&mut rng);
        let d = math::abs(a - b);
        if (c1..=c2).contains(&d) {
            in_band += 1;
        }
        sum += a + b;
        sum_sq += a * a + b * b;
        values.push(a);
        values.push(b);
    }
    let n = 2.0 * draws as f64;
    let mean = sum / n;
    let variance = sum_sq / n - mean * mean;
    let p = in_band as f64 / draws as f64;
    let ci_halfwidth = 3.0 * math::sqrt(p * (1.0 - p) / draws as f64);
    let density_max = matches!(
        model.kind,
        CoefficientKind::Gaussian | CoefficientKind::Uniform
    )
    .then(|| {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bins = 64usize;
        let width = (hi - lo) / bins as f64;
        let mut counts = alloc::vec![0u64; bins];
        for v in &values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        let peak = *counts.iter().max().expect("bins nonempty") as f64;
        peak / (n * width)
    });
    CoefficientModelReport {
        draws,
        prob_in_band: p,
        ci_halfwidth,
        mean,
        variance,
        density_max,
        k_bound: model.k_bound,
    }
}
