//! Frequency sets `E = {mu in Z^d : |mu|^2 = m}` on the flat torus and their
//! arithmetic statistics.
//!
//! Points are stored with an explicit antipodal pairing: the second half of
//! `points` is the negation of the first half, so `points[i + N/2] = -points[i]`.
//! The conjugate-symmetric wave sampler draws one coefficient pair per
//! representative and relies on this layout.

use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Torus dimension. Only 2 and 3 are meaningful for this crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

impl TryFrom<u8> for Dim {
    type Error = LatticeError;
    fn try_from(v: u8) -> Result<Self, LatticeError> {
        match v {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(LatticeError::BadDimension(v)),
        }
    }
}

impl From<Dim> for u8 {
    fn from(d: Dim) -> u8 {
        d.as_usize() as u8
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_usize())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LatticeError {
    /// d = 3 levels with m = 0, 4, 7 mod 8 are rejected.
    InvalidLevel {
        m: u64,
        residue: u64,
    },
    /// Operation needs at least two lattice points.
    Degenerate,
    /// Operation is only defined on the plane (d = 2).
    PlaneOnly,
    BadDimension(u8),
    /// `from_points` input violates a structural invariant.
    BadPointSet(&'static str),
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::InvalidLevel { m, residue } => {
                write!(
                    f,
                    "level m={m} is {residue} mod 8; no admissible E set on T^3"
                )
            }
            LatticeError::Degenerate => write!(f, "lattice set has fewer than 2 points"),
            LatticeError::PlaneOnly => write!(f, "operation requires d=2"),
            LatticeError::BadDimension(v) => write!(f, "dimension must be 2 or 3, got {v}"),
            LatticeError::BadPointSet(why) => write!(f, "invalid point set: {why}"),
        }
    }
}

impl core::error::Error for LatticeError {}

/// The frequency set for eigenvalue `lambda^2 = 4 pi^2 m`: all integer vectors
/// of squared norm exactly `m`, closed under negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSet {
    d: Dim,
    m: u64,
    points: Vec<[i64; 3]>,
    pairs: Vec<(usize, usize)>,
}

impl LatticeSet {
    /// Complete enumeration of `{mu : |mu|^2 = m}`. An empty set (m not a sum
    /// of d squares) is returned with N = 0 rather than as an error; callers
    /// check [`LatticeSet::is_empty`].
    pub fn enumerate(d: Dim, m: u64) -> Result<Self, LatticeError> {
        if d == Dim::Three && matches!(m % 8, 0 | 4 | 7) {
            return Err(LatticeError::InvalidLevel { m, residue: m % 8 });
        }
        let r = math::isqrt(m) as i64;
        let mut reps: Vec<[i64; 3]> = Vec::new();
        match d {
            Dim::Two => {
                for x in -r..=r {
                    let rest = m as i64 - x * x;
                    let y = math::isqrt(rest as u64) as i64;
                    if y * y == rest {
                        if y != 0 {
                            reps.push([x, y, 0]);
                            reps.push([x, -y, 0]);
                        } else {
                            reps.push([x, 0, 0]);
                        }
                    }
                }
            }
            Dim::Three => {
                for x in -r..=r {
                    let rest_x = m as i64 - x * x;
                    let ry = math::isqrt(rest_x as u64) as i64;
                    for y in -ry..=ry {
                        let rest = rest_x - y * y;
                        let z = math::isqrt(rest as u64) as i64;
                        if z * z == rest {
                            if z != 0 {
                                reps.push([x, y, z]);
                                reps.push([x, y, -z]);
                            } else {
                                reps.push([x, y, 0]);
                            }
                        }
                    }
                }
            }
        }
        Self::from_points(d, m, reps)
    }

    /// Builds a lattice set from an explicit point list, validating the
    /// structural invariants (exact norms, distinctness, negation closure)
    /// and normalizing the storage order. Useful for synthetic fixtures.
    pub fn from_points(d: Dim, m: u64, pts: Vec<[i64; 3]>) -> Result<Self, LatticeError> {
        for p in &pts {
            if d == Dim::Two && p[2] != 0 {
                return Err(LatticeError::BadPointSet(
                    "nonzero third coordinate for d=2",
                ));
            }
            let n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            if n2 != m as i64 {
                return Err(LatticeError::BadPointSet("point with |mu|^2 != m"));
            }
        }
        // canonical representative of each +/- pair: first nonzero coordinate positive
        let mut reps: Vec<[i64; 3]> = pts
            .iter()
            .copied()
            .filter(|p| {
                let lead = p.iter().find(|&&c| c != 0).copied().unwrap_or(0);
                lead > 0
            })
            .collect();
        reps.sort_unstable();
        reps.dedup();
        if reps.len() * 2 != pts.len() {
            return Err(LatticeError::BadPointSet(
                "points are not distinct or not closed under negation",
            ));
        }
        let half = reps.len();
        let mut points = reps;
        for i in 0..half {
            let p = points[i];
            points.push([-p[0], -p[1], -p[2]]);
        }
        // re-check closure: every negation listed came from a distinct original point
        let mut sorted: Vec<[i64; 3]> = points.clone();
        sorted.sort_unstable();
        let mut orig = pts;
        orig.sort_unstable();
        if sorted != orig {
            return Err(LatticeError::BadPointSet(
                "points are not distinct or not closed under negation",
            ));
        }
        let pairs = (0..half).map(|i| (i, i + half)).collect();
        Ok(LatticeSet {
            d,
            m,
            points,
            pairs,
        })
    }

    pub fn dim(&self) -> Dim {
        self.d
    }

    pub fn level(&self) -> u64 {
        self.m
    }

    /// N, the number of representations r_d(m).
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// lambda = 2 pi sqrt(m), the square root of the Laplace eigenvalue.
    pub fn lambda(&self) -> f64 {
        math::TAU * math::sqrt(self.m as f64)
    }

    pub fn points(&self) -> &[[i64; 3]] {
        &self.points
    }

    /// Index pairs (i, j) with points[j] = -points[i]; every index appears in
    /// exactly one pair and i < N/2 <= j.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// One representative per antipodal pair (the first half of the storage).
    pub fn representatives(&self) -> &[[i64; 3]] {
        &self.points[..self.points.len() / 2]
    }

    /// Exact minimum distance over distinct points, by all-pairs scan.
    pub fn min_separation(&self) -> Result<f64, LatticeError> {
        if self.len() < 2 {
            return Err(LatticeError::Degenerate);
        }
        let mut best = i64::MAX;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                let dx = p[0] - q[0];
                let dy = p[1] - q[1];
                let dz = p[2] - q[2];
                best = best.min(dx * dx + dy * dy + dz * dz);
            }
        }
        Ok(math::sqrt(best as f64))
    }

    /// Normalized angles theta in [0, 1) of the points (d = 2 only).
    pub fn angles(&self) -> Result<AngleSet, LatticeError> {
        if self.d != Dim::Two {
            return Err(LatticeError::PlaneOnly);
        }
        let angles = self
            .points
            .iter()
            .map(|p| {
                let a = math::atan2(p[1] as f64, p[0] as f64) / math::TAU;
                a - math::floor(a)
            })
            .collect();
        Ok(AngleSet { angles })
    }

    /// Maximal number of points on an arc of the given length, measured on the
    /// circle of radius lambda (points scaled by 2 pi). Defaults to arcs of
    /// size sqrt(lambda), the B quantity of the arc-concentration conjecture.
    pub fn arc_concentration(&self, arc_length: Option<f64>) -> Result<usize, LatticeError> {
        if self.d != Dim::Two {
            return Err(LatticeError::PlaneOnly);
        }
        if self.is_empty() {
            return Ok(0);
        }
        let lambda = self.lambda();
        let len = arc_length.unwrap_or_else(|| math::sqrt(lambda));
        let width = len / lambda; // angular width of the arc
        if width >= math::TAU {
            return Ok(self.len());
        }
        let mut angles: Vec<f64> = self
            .points
            .iter()
            .map(|p| {
                let a = math::atan2(p[1] as f64, p[0] as f64);
                if a < 0.0 {
                    a + math::TAU
                } else {
                    a
                }
            })
            .collect();
        angles.sort_unstable_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
        // sliding window anchored at each point, wrapping past 2 pi
        let n = angles.len();
        let mut best = 1;
        let mut j = 0;
        for i in 0..n {
            if j < i {
                j = i;
            }
            while j + 1 < i + n {
                let next = angles[(j + 1) % n] + if (j + 1) >= n { math::TAU } else { 0.0 };
                if next - angles[i] <= width {
                    j += 1;
                } else {
                    break;
                }
            }
            best = best.max(j - i + 1);
        }
        Ok(best.min(n))
    }

    /// Fourth Fourier coefficient of the angular measure: (1/N) sum cos(8 pi theta).
    /// The conjugate part vanishes by the reflection symmetry of the set.
    pub fn fourth_fourier(&self) -> Result<f64, LatticeError> {
        if self.d != Dim::Two {
            return Err(LatticeError::PlaneOnly);
        }
        let n = self.len() as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for p in &self.points {
            let theta = math::atan2(p[1] as f64, p[0] as f64);
            re += math::cos(4.0 * theta);
            im += math::sin(4.0 * theta);
        }
        let re = re / n;
        let im = im / n;
        assert!(math::abs(im) < 1e-12, "imaginary part {im} should vanish");
        Ok(re)
    }

    /// Unit directions spanned by difference vectors `mu1 - mu2`, reduced to
    /// lines: one angle in [0, pi) per direction class, antipodal and equal
    /// directions deduplicated exactly via gcd-reduced integer vectors.
    pub fn direction_lines(&self) -> Vec<f64> {
        let mut reduced: Vec<(i64, i64)> = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                let (mut dx, mut dy) = (p[0] - q[0], p[1] - q[1]);
                let g = gcd(dx.unsigned_abs(), dy.unsigned_abs()) as i64;
                if g == 0 {
                    continue;
                }
                dx /= g;
                dy /= g;
                // canonical sign: first nonzero coordinate positive
                if dx < 0 || (dx == 0 && dy < 0) {
                    dx = -dx;
                    dy = -dy;
                }
                reduced.push((dx, dy));
            }
        }
        reduced.sort_unstable();
        reduced.dedup();
        let mut out: Vec<f64> = reduced
            .iter()
            .map(|&(x, y)| {
                let a = math::atan2(y as f64, x as f64);
                if a < 0.0 {
                    a + math::PI
                } else {
                    a
                }
            })
            .map(|a| if a >= math::PI { a - math::PI } else { a })
            .collect();
        out.sort_unstable_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
        out
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Normalized angles of a planar frequency set, as a multiset on [0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct AngleSet {
    angles: Vec<f64>,
}

impl AngleSet {
    pub fn new(mut angles: Vec<f64>) -> Self {
        for a in &mut angles {
            *a -= math::floor(*a);
        }
        AngleSet { angles }
    }

    pub fn values(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Number of integer points in the closed disk |p|^2 <= x (Gauss circle count).
pub fn gauss_circle_count(x: u64) -> u64 {
    let r = math::isqrt(x) as i64;
    let mut count = 0u64;
    for i in -r..=r {
        let rest = x as i64 - i * i;
        count += 2 * math::isqrt(rest as u64) + 1;
    }
    count
}
