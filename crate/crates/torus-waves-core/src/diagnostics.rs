//! Arithmetic-structure diagnostics for frequency sets: interval-cover
//! equidistribution, angular discrepancy, delocalization/derivative-growth
//! ratios of the scaled basis, the near-circle GAP probe, and the measure of
//! the tangent-aligned bad set.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Curve;
use crate::lattice::{AngleSet, Dim, LatticeSet};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub enum DiagnosticsError {
    /// GAP volume above the desk-scale enumeration cap (1e7).
    VolumeCapExceeded {
        volume: u128,
    },
    /// delta/eps outside 0 < eps < delta < 1.
    BadProbeParams {
        delta: f64,
        eps: f64,
    },
    PlaneOnly,
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::VolumeCapExceeded { volume } => {
                write!(f, "GAP volume {volume} exceeds the 1e7 enumeration cap")
            }
            DiagnosticsError::BadProbeParams { delta, eps } => {
                write!(f, "need 0 < eps < delta < 1, got delta={delta} eps={eps}")
            }
            DiagnosticsError::PlaneOnly => write!(f, "operation requires d=2"),
        }
    }
}

impl core::error::Error for DiagnosticsError {}

/// Minimal number of closed intervals of length `len` covering the values.
/// The greedy left-to-right sweep is optimal for fixed-length covering of
/// points on a line.
pub fn min_cover_count(values: &[f64], len: f64) -> usize {
    assert!(len > 0.0);
    if values.is_empty() {
        return 0;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let mut count = 1usize;
    let mut anchor = sorted[0];
    for &v in &sorted[1..] {
        if v > anchor + len {
            count += 1;
            anchor = v;
        }
    }
    count
}

/// Cover statistics of the projections `<r, mu>` over a fan of directions
/// with |r| = 1/(2 pi lambda), against intervals of length 1/N.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverReport {
    pub directions: usize,
    pub eps0: f64,
    /// N^eps0
    pub threshold: f64,
    pub counts: Vec<usize>,
    pub min: usize,
    pub median: usize,
    /// min >= N^eps0
    pub pass: bool,
}

pub fn projection_cover_report(
    lattice: &LatticeSet,
    directions: usize,
    eps0: f64,
) -> Result<CoverReport, DiagnosticsError> {
    if lattice.dim() != Dim::Two {
        return Err(DiagnosticsError::PlaneOnly);
    }
    assert!(directions >= 1);
    let n = lattice.len();
    let r_len = 1.0 / (math::TAU * lattice.lambda());
    let interval = 1.0 / n as f64;
    let mut counts = Vec::with_capacity(directions);
    for j in 0..directions {
        let phi = math::TAU * j as f64 / directions as f64;
        let r = [r_len * math::cos(phi), r_len * math::sin(phi), 0.0];
        let values: Vec<f64> = lattice
            .points()
            .iter()
            .map(|mu| math::idot(mu, &r))
            .collect();
        counts.push(min_cover_count(&values, interval));
    }
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let min = sorted[0];
    let median = sorted[sorted.len() / 2];
    let threshold = libm::pow(n as f64, eps0);
    Ok(CoverReport {
        directions,
        eps0,
        threshold,
        counts,
        min,
        median,
        pass: min as f64 >= threshold,
    })
}

/// Exact angular discrepancy: sup over intervals [a1, a2] in [0, 1] of
/// |#{angles in the interval} - |a2 - a1| N|. The sup is attained either on a
/// closed interval with endpoints at data angles (count excess) or on the
/// open interior between data angles / the boundary (count deficit), so a
/// scan over that finite candidate family is exact. Wrap-around intervals
/// need no extra handling: their discrepancy equals that of the open
/// complement.
pub fn discrepancy(angles: &AngleSet) -> f64 {
    let n = angles.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut vals: Vec<f64> = angles.values().to_vec();
    vals.sort_unstable_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    let mut endpoints: Vec<f64> = Vec::with_capacity(n + 2);
    endpoints.push(0.0);
    endpoints.extend_from_slice(&vals);
    endpoints.push(1.0);
    endpoints.dedup();
    let count_le = |x: f64| vals.partition_point(|v| *v <= x) as i64;
    let count_lt = |x: f64| vals.partition_point(|v| *v < x) as i64;
    let mut best = 0.0f64;
    for (i, &a) in endpoints.iter().enumerate() {
        for &b in &endpoints[i..] {
            let len = b - a;
            let closed = (count_le(b) - count_lt(a)) as f64;
            let open = (count_lt(b) - count_le(a)).max(0) as f64;
            best = best.max(math::abs(closed - len * nf));
            best = best.max(math::abs(open - len * nf));
        }
    }
    best
}

/// Delocalization and derivative-growth ratios of the scaled basis
/// g(x) = sqrt(2) cos(2 pi <mu, gamma(x/lambda)>), h = the sine partner, one
/// pair per antipodal class:
///
/// - `deloc`:  max |f| / sqrt(sum f^2)        (sum over the basis = N exactly)
/// - `dgrow1`: max of sum |f'|^2 / sum |f|^2
/// - `dgrow2`: max over mu of (|g''|^2 + |h''|^2) / sum |f|^2
pub fn delocalization_ratios(lattice: &LatticeSet, curve: &Curve, grid: usize) -> (f64, f64, f64) {
    assert!(grid >= 64);
    let n = lattice.len() as f64;
    let lambda = lattice.lambda();
    let mut deloc = 0.0f64;
    let mut dgrow1 = 0.0f64;
    let mut dgrow2 = 0.0f64;
    for i in 0..=grid {
        let t = i as f64 / grid as f64;
        let jet = curve.jet(t);
        let mut sum_d1 = 0.0;
        for mu in lattice.representatives() {
            let phase = math::TAU * math::idot(mu, &jet[0]);
            let ux = math::TAU / lambda * math::idot(mu, &jet[1]);
            let uxx = math::TAU / (lambda * lambda) * math::idot(mu, &jet[2]);
            let c = math::abs(math::cos(phase));
            let s = math::abs(math::sin(phase));
            deloc = deloc.max(math::sqrt(2.0) * c.max(s) / math::sqrt(n));
            // |g'|^2 + |h'|^2 = 2 ux^2 ; |g''|^2 + |h''|^2 = 2 (uxx^2 + ux^4)
            sum_d1 += 2.0 * ux * ux;
            dgrow2 = dgrow2.max(2.0 * (uxx * uxx + ux * ux * ux * ux) / n);
        }
        dgrow1 = dgrow1.max(sum_d1 / n);
    }
    (deloc, dgrow1, dgrow2)
}

/// A generalized arithmetic progression in the complex plane:
/// { g0 + sum a_i g_i : |a_i| <= dims_i }.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapSpec {
    pub g0: [f64; 2],
    pub generators: Vec<[f64; 2]>,
    pub dims: Vec<u64>,
}

impl GapSpec {
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn volume(&self) -> u128 {
        self.dims.iter().map(|&n| 2 * n as u128 + 1).product()
    }
}

/// Enumerates the GAP, keeps the elements within eps of the unit circle, and
/// greedily extracts a maximal delta-separated subset in order of argument
/// (separation also enforced across the argument wrap). Returns its size.
pub fn gap_circle_probe(spec: &GapSpec, delta: f64, eps: f64) -> Result<usize, DiagnosticsError> {
    if !(delta > 0.0 && delta < 1.0 && eps >= 0.0 && eps < delta) {
        return Err(DiagnosticsError::BadProbeParams { delta, eps });
    }
    assert!(spec.rank() <= 3 && spec.dims.len() == spec.rank());
    let volume = spec.volume();
    if volume > 10_000_000 {
        return Err(DiagnosticsError::VolumeCapExceeded { volume });
    }
    let mut near: Vec<[f64; 2]> = Vec::new();
    let mut coeffs: Vec<i64> = spec.dims.iter().map(|&d| -(d as i64)).collect();
    loop {
        let mut z = spec.g0;
        for (a, g) in coeffs.iter().zip(&spec.generators) {
            z[0] += *a as f64 * g[0];
            z[1] += *a as f64 * g[1];
        }
        let r = math::sqrt(z[0] * z[0] + z[1] * z[1]);
        if math::abs(r - 1.0) <= eps {
            near.push(z);
        }
        // odometer over the coefficient box
        let mut k = 0;
        loop {
            if k == coeffs.len() {
                break;
            }
            coeffs[k] += 1;
            if coeffs[k] <= spec.dims[k] as i64 {
                break;
            }
            coeffs[k] = -(spec.dims[k] as i64);
            k += 1;
        }
        if k == coeffs.len() {
            break;
        }
        if coeffs.is_empty() {
            break;
        }
    }
    if spec.rank() == 0 {
        // only g0 itself
        let r = math::sqrt(spec.g0[0] * spec.g0[0] + spec.g0[1] * spec.g0[1]);
        return Ok(usize::from(math::abs(r - 1.0) <= eps));
    }
    near.sort_unstable_by(|a, b| {
        math::atan2(a[1], a[0])
            .partial_cmp(&math::atan2(b[1], b[0]))
            .expect("finite angles")
    });
    let dist = |a: &[f64; 2], b: &[f64; 2]| {
        let d = [a[0] - b[0], a[1] - b[1]];
        math::sqrt(d[0] * d[0] + d[1] * d[1])
    };
    let mut kept: Vec<[f64; 2]> = Vec::new();
    for z in &near {
        if kept.last().is_none_or(|last| dist(last, z) >= delta) {
            kept.push(*z);
        }
    }
    if kept.len() >= 2 && dist(&kept[0], kept.last().expect("nonempty")) < delta {
        kept.pop();
    }
    Ok(kept.len())
}

/// Lebesgue measure (grid-resolved at step kappa/8) of the set of curve
/// parameters whose tangent is kappa-aligned with some difference direction
/// of the lattice, kappa = N^-3.
pub fn bad_set_measure(curve: &Curve, lattice: &LatticeSet) -> Result<f64, DiagnosticsError> {
    if lattice.dim() != Dim::Two {
        return Err(DiagnosticsError::PlaneOnly);
    }
    let n = lattice.len() as f64;
    if lattice.len() < 2 {
        return Ok(0.0);
    }
    let kappa = 1.0 / (n * n * n);
    Ok(bad_set_measure_with_kappa(curve, lattice, kappa))
}

/// Same with explicit kappa (kappa <= 0 gives an empty bad set).
pub fn bad_set_measure_with_kappa(curve: &Curve, lattice: &LatticeSet, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let lines = lattice.direction_lines();
    if lines.is_empty() {
        return 0.0;
    }
    let step = kappa / 8.0;
    let samples = (1.0 / step) as usize + 1;
    let mut hits = 0usize;
    for k in 0..samples {
        let t = (k as f64 + 0.5) * step;
        if t >= 1.0 {
            break;
        }
        let mut psi = curve.tangent_angle(t) % math::PI;
        if psi < 0.0 {
            psi += math::PI;
        }
        // nearest line angle mod pi via binary search on the sorted angles
        let i = lines.partition_point(|a| *a < psi);
        let mut best = f64::INFINITY;
        for cand in [
            lines.get(i.wrapping_sub(1)).copied(),
            lines.get(i).copied(),
            lines.first().map(|a| a + math::PI),
            lines.last().map(|a| a - math::PI),
        ]
        .into_iter()
        .flatten()
        {
            best = best.min(math::abs(psi - cand));
        }
        if best < kappa {
            hits += 1;
        }
    }
    hits as f64 * step
}

/// One-stop arithmetic report for a lattice set, optionally with the
/// curve-dependent ratios and bad-set measure.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiagnosticsReport {
    pub d: u8,
    pub m: u64,
    pub n: usize,
    pub lambda: f64,
    pub min_sep: Option<f64>,
    /// min_sep scaled by log^{3/2} m / sqrt m (separation-lemma statistic)
    pub sep_ratio: Option<f64>,
    pub b_arc: Option<usize>,
    pub tau4: Option<f64>,
    pub discrepancy: Option<f64>,
    pub cover: Option<CoverReport>,
    pub deloc: Option<f64>,
    pub dgrow1: Option<f64>,
    pub dgrow2: Option<f64>,
    pub bad_set_measure: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsOptions {
    pub directions: usize,
    pub eps0: f64,
    pub ratio_grid: usize,
    pub with_bad_set: bool,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            directions: 360,
            eps0: 0.1,
            ratio_grid: 512,
            with_bad_set: false,
        }
    }
}

pub fn report(
    lattice: &LatticeSet,
    curve: Option<&Curve>,
    opts: &DiagnosticsOptions,
) -> DiagnosticsReport {
    let d2 = lattice.dim() == Dim::Two;
    let m = lattice.level() as f64;
    let min_sep = lattice.min_separation().ok();
    let sep_ratio = min_sep.map(|s| {
        let log_m = if m > 1.0 { libm::log(m) } else { 0.0 };
        s * libm::pow(log_m, 1.5) / math::sqrt(m)
    });
    let ratios = curve.map(|c| delocalization_ratios(lattice, c, opts.ratio_grid.max(64)));
    DiagnosticsReport {
        d: lattice.dim().as_usize() as u8,
        m: lattice.level(),
        n: lattice.len(),
        lambda: lattice.lambda(),
        min_sep,
        sep_ratio,
        b_arc: d2.then(|| lattice.arc_concentration(None).expect("d=2")),
        tau4: (d2 && !lattice.is_empty()).then(|| lattice.fourth_fourier().expect("d=2")),
        discrepancy: d2.then(|| discrepancy(&lattice.angles().expect("d=2"))),
        cover: (d2 && !lattice.is_empty())
            .then(|| projection_cover_report(lattice, opts.directions, opts.eps0).expect("d=2")),
        deloc: ratios.map(|r| r.0),
        dgrow1: ratios.map(|r| r.1),
        dgrow2: ratios.map(|r| r.2),
        bad_set_measure: (d2 && opts.with_bad_set && curve.is_some())
            .then(|| bad_set_measure(curve.expect("curve"), lattice).expect("d=2")),
    }
}
