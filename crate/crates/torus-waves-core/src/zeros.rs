//! Certified counting of nodal intersections `Z = #{t in [a,b) : F(gamma(t)) = 0}`.
//!
//! Strategy: sign changes on the sampler grid are bracketed and bisected to
//! 1e-13. Cells without a sign change are suspicious when both endpoint
//! values sit below `theta * B1 * h`, where `B1` bounds `|dF/dt|` globally
//! through the coefficient amplitudes; such cells cannot be ruled out by the
//! global bound alone. Suspicious cells are re-examined with a local
//! certificate (endpoint derivative values plus a global second-derivative
//! bound) and subdivided 4x up to three times; a cell that survives all of
//! that is an unresolved near miss and the count is returned uncertified
//! rather than guessed.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::Curve;
use crate::lattice::LatticeSet;
use crate::math;
use crate::wave::{PhaseTable, WaveSample};

/// Sign-change brackets are bisected to this width; with the derivative
/// bounds in play the residual |F(root)| stays under 1e-10.
const BISECT_WIDTH: f64 = 1e-13;
/// Near-miss flag threshold multiplier.
const THETA_NEAR: f64 = 1.0;
/// Local escalation: subdivide 4x at most this many times.
const MAX_ESCALATIONS: u32 = 3;
/// Required sampler resolution: at least this many cells per unit length
/// times lambda.
const MIN_CELLS_PER_LAMBDA: f64 = 32.0;

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroError {
    /// Non-finite coefficient or field value.
    InvalidSample,
    /// Sampler grid is coarser than 32 lambda cells per unit length.
    GridTooCoarse { cells: usize, required: usize },
    /// Interval outside [0, 1] or reversed.
    BadInterval { a: f64, b: f64 },
    /// Sample and table were built from different lattice sets.
    LatticeMismatch,
}

impl fmt::Display for ZeroError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroError::InvalidSample => write!(f, "sample or field value is not finite"),
            ZeroError::GridTooCoarse { cells, required } => {
                write!(
                    f,
                    "grid has {cells} cells, zero counting needs >= {required}"
                )
            }
            ZeroError::BadInterval { a, b } => write!(f, "bad interval [{a}, {b})"),
            ZeroError::LatticeMismatch => {
                write!(f, "sample and phase table disagree on the lattice")
            }
        }
    }
}

impl core::error::Error for ZeroError {}

/// Certified count and locations of the zeros of t -> F(gamma(t)).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZeroCount {
    pub count: usize,
    pub roots: Vec<f64>,
    pub certified: bool,
    /// smallest gap between consecutive roots (None below two roots)
    pub min_gap: Option<f64>,
    /// width of the scan cells
    pub grid_resolution: f64,
    /// cells still flagged after full escalation
    pub unresolved_cells: usize,
}

/// First- and second-derivative envelopes of g(t) = F(gamma(t)), derived from
/// the coefficient amplitudes: |<mu, v>| <= sqrt(m) |v| pointwise.
struct DerivativeBounds {
    b1: f64,
    b2: f64,
}

fn derivative_bounds(sample: &WaveSample, curve_speed: f64, curve_accel: f64) -> DerivativeBounds {
    let m = sample.lattice().level() as f64;
    let amp_sum = sample.amplitude_sum() * sample.amplitude();
    let rate = math::TAU * math::sqrt(m) * curve_speed;
    let accel = math::TAU * math::sqrt(m) * curve_accel;
    DerivativeBounds {
        b1: rate * amp_sum,
        b2: (rate * rate + accel) * amp_sum,
    }
}

struct Scan<'a> {
    sample: &'a WaveSample,
    curve: &'a Curve,
    bounds: DerivativeBounds,
    /// values this close to zero are treated as roots sitting exactly on a
    /// breakpoint (ulp-scale relative to the slope envelope)
    zero_eps: f64,
    roots: Vec<f64>,
    unresolved: usize,
}

impl Scan<'_> {
    fn g(&self, t: f64) -> f64 {
        self.sample.eval(self.curve, t)
    }

    fn g_prime(&self, t: f64) -> f64 {
        self.sample.eval_prime(self.curve, t)
    }

    /// Rigorous no-root certificate on a same-sign cell: a root inside
    /// [u, v] forces |g(u)| + |g(v)| <= h * sup|g'|, and the sup is bounded
    /// by the endpoint derivatives plus the curvature envelope.
    fn certified_root_free(&self, u: f64, v: f64, gu: f64, gv: f64) -> bool {
        let h = v - u;
        let local_slope =
            math::abs(self.g_prime(u)).max(math::abs(self.g_prime(v))) + 0.5 * h * self.bounds.b2;
        let slope = local_slope.min(self.bounds.b1);
        math::abs(gu) + math::abs(gv) > h * slope
    }

    fn bisect(&mut self, mut lo: f64, mut hi: f64, mut glo: f64) {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= BISECT_WIDTH || mid <= lo || mid >= hi {
                break;
            }
            let gm = self.g(mid);
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (gm > 0.0) == (glo > 0.0) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        self.roots.push(0.5 * (lo + hi));
    }

    /// Handles one cell with values at its ends, recursing on near misses.
    /// Breakpoint-level zeros are recorded for the left endpoint only, so a
    /// value shared by two adjacent cells is counted once.
    fn cell(&mut self, u: f64, v: f64, gu: f64, gv: f64, depth: u32) {
        if math::abs(gu) <= self.zero_eps {
            self.roots.push(u);
            let nudge = u + (v - u) * 1e-6;
            let gn = self.g(nudge);
            if math::abs(gn) <= self.zero_eps {
                // cannot separate the field from zero next to the root
                self.unresolved += 1;
                return;
            }
            self.cell(nudge, v, gn, gv, depth);
            return;
        }
        if math::abs(gv) <= self.zero_eps {
            // the neighbor owning v as a left endpoint records the root
            let nudge = v - (v - u) * 1e-6;
            let gn = self.g(nudge);
            if math::abs(gn) <= self.zero_eps {
                self.unresolved += 1;
                return;
            }
            self.cell(u, nudge, gu, gn, depth);
            return;
        }
        if (gu > 0.0) != (gv > 0.0) {
            self.bisect(u, v, gu);
            return;
        }
        // same sign: flag per the near-miss predicate on the global bound
        let h = v - u;
        let level = THETA_NEAR * self.bounds.b1 * h;
        if math::abs(gu) >= level || math::abs(gv) >= level {
            return;
        }
        if self.certified_root_free(u, v, gu, gv) {
            return;
        }
        if depth >= MAX_ESCALATIONS {
            self.unresolved += 1;
            return;
        }
        let quarter = h / 4.0;
        let mut left = u;
        let mut gleft = gu;
        for k in 1..=4 {
            let right = if k == 4 { v } else { u + quarter * k as f64 };
            let gright = if k == 4 { gv } else { self.g(right) };
            self.cell(left, right, gleft, gright, depth + 1);
            left = right;
            gleft = gright;
        }
    }
}

/// Counts the zeros of F along the curve on the half-open interval [a, b).
pub fn count_zeros(
    sample: &WaveSample,
    table: &PhaseTable,
    interval: (f64, f64),
) -> Result<ZeroCount, ZeroError> {
    let (a, b) = interval;
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a >= b {
        return Err(ZeroError::BadInterval { a, b });
    }
    if !sample.is_finite() {
        return Err(ZeroError::InvalidSample);
    }
    if sample.lattice().level() != table.lattice().level()
        || sample.lattice().dim() != table.lattice().dim()
        || sample.lattice().len() != table.lattice().len()
    {
        return Err(ZeroError::LatticeMismatch);
    }
    let sampler = table.sampler();
    let cells = sampler.cells();
    let required = (MIN_CELLS_PER_LAMBDA * sample.lattice().lambda()) as usize;
    if cells < required {
        return Err(ZeroError::GridTooCoarse { cells, required });
    }

    let bounds = derivative_bounds(sample, sampler.max_speed(), sampler.max_accel());
    let zero_eps = (bounds.b1 * 1e-12).min(1e-10);
    let mut scan = Scan {
        sample,
        curve: sampler.curve(),
        bounds,
        zero_eps,
        roots: Vec::new(),
        unresolved: 0,
    };

    // breakpoints: a, interior grid nodes, b
    let h = 1.0 / cells as f64;
    let first = (math::floor(a / h) as usize).min(cells - 1);
    let mut xs: Vec<f64> = Vec::new();
    let mut gs: Vec<f64> = Vec::new();
    xs.push(a);
    gs.push(if a == sampler.nodes()[first] {
        table.value_at(sample, first)
    } else {
        scan.g(a)
    });
    for i in (first + 1)..=cells {
        let t = sampler.nodes()[i];
        if t >= b {
            break;
        }
        if t > a {
            xs.push(t);
            gs.push(table.value_at(sample, i));
        }
    }
    if *xs.last().expect("nonempty") < b {
        xs.push(b);
        gs.push(if b == 1.0 {
            table.value_at(sample, cells)
        } else {
            scan.g(b)
        });
    }
    if gs.iter().any(|v| !v.is_finite()) {
        return Err(ZeroError::InvalidSample);
    }

    for k in 0..xs.len() - 1 {
        scan.cell(xs[k], xs[k + 1], gs[k], gs[k + 1], 0);
    }

    let mut roots = scan.roots;
    roots.sort_unstable_by(|x, y| x.partial_cmp(y).expect("roots are finite"));
    // brackets next to a breakpoint-level zero converge onto it; merge
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-11);
    roots.retain(|r| *r >= a && *r < b);
    let min_gap = roots
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(None, |acc: Option<f64>, g| {
            Some(acc.map_or(g, |m| m.min(g)))
        });
    Ok(ZeroCount {
        count: roots.len(),
        roots,
        certified: scan.unresolved == 0,
        min_gap,
        grid_resolution: h,
        unresolved_cells: scan.unresolved,
    })
}

/// Zero sets are invariant under scaling the coefficient vector; this re-runs
/// the counter on the scaled sample and compares counts.
pub fn scaling_invariance_check(
    sample: &WaveSample,
    table: &PhaseTable,
    c: f64,
    interval: (f64, f64),
) -> Result<bool, ZeroError> {
    assert!(c != 0.0, "scaling by zero destroys the zero set");
    let base = count_zeros(sample, table, interval)?;
    let scaled = count_zeros(&sample.scaled(c), table, interval)?;
    Ok(base.count == scaled.count)
}

/// Removes from the intervals the bad set: parameters where the curve tangent
/// is within kappa = N^-3 (in angle, mod pi) of some direction spanned by a
/// difference of lattice points. For positive-curvature curves each removed
/// piece is an interval.
pub fn restrict_to_good_set(
    curve: &Curve,
    lattice: &LatticeSet,
    intervals: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let n = lattice.len() as f64;
    let kappa = 1.0 / (n * n * n);
    restrict_with_kappa(curve, lattice, intervals, kappa)
}

/// Same with an explicit kappa (kappa <= 0 returns the input unchanged).
pub fn restrict_with_kappa(
    curve: &Curve,
    lattice: &LatticeSet,
    intervals: &[(f64, f64)],
    kappa: f64,
) -> Vec<(f64, f64)> {
    assert_eq!(
        lattice.dim(),
        crate::lattice::Dim::Two,
        "direction set is a planar construction"
    );
    if kappa <= 0.0 || lattice.len() < 2 {
        return intervals.to_vec();
    }
    let mut bad: Vec<(f64, f64)> = Vec::new();
    for line in lattice.direction_lines() {
        bad.extend(crate::geometry::tangent_line_windows(curve, line, kappa));
    }
    bad.sort_unstable_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(a, b) in intervals {
        let mut cursor = a;
        for &(ba, bb) in &bad {
            if bb <= cursor {
                continue;
            }
            if ba >= b {
                break;
            }
            if ba > cursor {
                out.push((cursor, ba.min(b)));
            }
            cursor = cursor.max(bb);
            if cursor >= b {
                break;
            }
        }
        if cursor < b {
            out.push((cursor, b));
        }
    }
    out
}
