//! Analytic reference curves `gamma: [0,1] -> T^d`.
//!
//! Every family is closed form with exact derivatives up to third order, so
//! the regularity conditions (unit speed, positive curvature, torsion) can be
//! checked against finite differences in tests rather than estimated. Torus
//! wrapping never happens here: curves are evaluated on the unwrapped lift of
//! `R^d`, and only the phase `<mu, gamma(t)>` in the wave module is periodic.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::lattice::Dim;
use crate::math;
use crate::quad;

#[derive(Clone, Debug, PartialEq)]
pub enum CurveError {
    /// circle radius outside (0, 1/(2 pi)]
    RadiusOutOfRange(f64),
    /// helix parameters with a^2 alpha^2 + b^2 != 1
    NotUnitSpeed(f64),
    /// helix with a*alpha = 0 degenerates to a segment
    FlatHelix,
    /// speed below 1e-12 somewhere on the interior validation grid
    DegenerateSpeed { t: f64, speed: f64 },
}

impl fmt::Display for CurveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveError::RadiusOutOfRange(r) => {
                write!(f, "radius {r} outside (0, 1/(2 pi)]")
            }
            CurveError::NotUnitSpeed(s2) => {
                write!(f, "helix squared speed {s2} differs from 1")
            }
            CurveError::FlatHelix => write!(f, "helix with a*alpha = 0 is a straight segment"),
            CurveError::DegenerateSpeed { t, speed } => {
                write!(f, "speed {speed} at t={t} too small to reparametrize")
            }
        }
    }
}

impl core::error::Error for CurveError {}

/// Closed-form curve families. All evaluate on the unwrapped plane/space.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "family", content = "params", rename_all = "snake_case")
)]
pub enum CurveFamily {
    /// gamma(t) = radius (cos 2 pi t^warp, sin 2 pi t^warp). Unit speed iff
    /// radius = 1/(2 pi) and warp = 1.
    Circle { radius: f64, warp: f64 },
    /// gamma(t) = (a cos alpha t, a sin alpha t, b t). Unit speed iff
    /// a^2 alpha^2 + b^2 = 1.
    Helix { a: f64, alpha: f64, b: f64 },
    /// Product-style lift of a planar circle of the given radius:
    /// gamma(t) = (gamma0(t/sqrt 2), t/sqrt 2), so curvature and torsion both
    /// equal half the planar curvature.
    Product { radius: f64 },
    /// Straight segment from `start` along `dir` (need not be unit length).
    Segment {
        start: [f64; 3],
        dir: [f64; 3],
        d: u8,
    },
}

impl CurveFamily {
    pub fn dim(&self) -> Dim {
        match self {
            CurveFamily::Circle { .. } => Dim::Two,
            CurveFamily::Helix { .. } | CurveFamily::Product { .. } => Dim::Three,
            CurveFamily::Segment { d, .. } => {
                if *d == 3 {
                    Dim::Three
                } else {
                    Dim::Two
                }
            }
        }
    }

    /// Position and first three derivatives at parameter t.
    fn jet(&self, t: f64) -> [[f64; 3]; 4] {
        match *self {
            CurveFamily::Circle { radius, warp } => {
                // zero coefficients short-circuit so that integer warps never
                // hit 0 * inf from the negative powers at t = 0
                let angle_deriv = |coeff: f64, power: f64| {
                    if coeff == 0.0 {
                        0.0
                    } else {
                        math::TAU * coeff * powf_int_like(t, power)
                    }
                };
                let u = math::TAU * powf_int_like(t, warp);
                let u1 = angle_deriv(warp, warp - 1.0);
                let u2 = angle_deriv(warp * (warp - 1.0), warp - 2.0);
                let u3 = angle_deriv(warp * (warp - 1.0) * (warp - 2.0), warp - 3.0);
                let (c, s) = (math::cos(u), math::sin(u));
                // p = r e^{iu}; p' = i r u' e^{iu}; p'' = r (i u'' - u'^2) e^{iu};
                // p''' = r (i(u''' - u'^3) - 3 u' u'') e^{iu}
                let e = [c, s, 0.0];
                let ie = [-s, c, 0.0];
                [
                    scale(&e, radius),
                    scale(&ie, radius * u1),
                    add(&scale(&ie, radius * u2), &scale(&e, -radius * u1 * u1)),
                    add(
                        &scale(&ie, radius * (u3 - u1 * u1 * u1)),
                        &scale(&e, -3.0 * radius * u1 * u2),
                    ),
                ]
            }
            CurveFamily::Helix { a, alpha, b } => helix_jet(a, alpha, b, t),
            CurveFamily::Product { radius } => {
                let inv_sqrt2 = 1.0 / math::sqrt(2.0);
                helix_jet(radius, inv_sqrt2 / radius, inv_sqrt2, t)
            }
            CurveFamily::Segment { start, dir, .. } => [
                [
                    start[0] + t * dir[0],
                    start[1] + t * dir[1],
                    start[2] + t * dir[2],
                ],
                dir,
                [0.0; 3],
                [0.0; 3],
            ],
        }
    }
}

fn helix_jet(a: f64, alpha: f64, b: f64, t: f64) -> [[f64; 3]; 4] {
    let (c, s) = (math::cos(alpha * t), math::sin(alpha * t));
    [
        [a * c, a * s, b * t],
        [-a * alpha * s, a * alpha * c, b],
        [-a * alpha * alpha * c, -a * alpha * alpha * s, 0.0],
        [
            a * alpha * alpha * alpha * s,
            -a * alpha * alpha * alpha * c,
            0.0,
        ],
    ]
}

/// t^p for real p on t >= 0, with integer exponents handled exactly so that
/// warp = 1 curves have no spurious domain issues at t = 0.
fn powf_int_like(t: f64, p: f64) -> f64 {
    if p == math::floor(p) && math::abs(p) < 16.0 {
        let n = p as i32;
        let mut acc = 1.0;
        for _ in 0..n.unsigned_abs() {
            acc *= t;
        }
        if n < 0 {
            1.0 / acc
        } else {
            acc
        }
    } else {
        libm::pow(t, p)
    }
}

fn scale(v: &[f64; 3], k: f64) -> [f64; 3] {
    [v[0] * k, v[1] * k, v[2] * k]
}

fn add(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Declarative curve description; `arc_length` requests reparametrization by
/// arc length at compile time. Serializes as `{family, params, arc_length}`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub family: CurveFamily,
    #[cfg_attr(feature = "serde", serde(default))]
    pub arc_length: bool,
}

/// Planar circle of circumference 2 pi radius; unit length (and unit speed)
/// at the default radius 1/(2 pi). Radii below that yield a shorter curve,
/// which `validate_curve_regularity` reports via the `length` field.
pub fn make_circle_curve(radius: f64) -> Result<CurveSpec, CurveError> {
    if !(radius > 0.0 && radius <= 1.0 / math::TAU + 1e-15) {
        return Err(CurveError::RadiusOutOfRange(radius));
    }
    Ok(CurveSpec {
        family: CurveFamily::Circle { radius, warp: 1.0 },
        arc_length: false,
    })
}

pub const UNIT_CIRCLE_RADIUS: f64 = 1.0 / math::TAU;

/// Unit-speed helix segment on T^3; requires a^2 alpha^2 + b^2 = 1. b = 0 is
/// accepted and flagged planar by the validator.
pub fn make_helix_curve(a: f64, alpha: f64, b: f64) -> Result<CurveSpec, CurveError> {
    let s2 = a * a * alpha * alpha + b * b;
    if math::abs(s2 - 1.0) > 1e-9 {
        return Err(CurveError::NotUnitSpeed(s2));
    }
    if a * alpha == 0.0 {
        return Err(CurveError::FlatHelix);
    }
    Ok(CurveSpec {
        family: CurveFamily::Helix { a, alpha, b },
        arc_length: false,
    })
}

/// The product curve `(gamma0(t/sqrt 2), t/sqrt 2)` over a planar circle of
/// the given radius; unit speed by construction, curvature = torsion =
/// 1/(2 radius).
pub fn make_product_curve(radius: f64) -> Result<CurveSpec, CurveError> {
    if radius <= 0.0 {
        return Err(CurveError::RadiusOutOfRange(radius));
    }
    Ok(CurveSpec {
        family: CurveFamily::Product { radius },
        arc_length: false,
    })
}

pub fn make_segment_curve(d: Dim, start: [f64; 3], dir: [f64; 3]) -> CurveSpec {
    CurveSpec {
        family: CurveFamily::Segment {
            start,
            dir,
            d: d.as_usize() as u8,
        },
        arc_length: false,
    }
}

/// Default unit-speed helix used by the T^3 experiments: one winding
/// (alpha = 2 pi), equal horizontal and vertical speed.
pub fn default_helix() -> CurveSpec {
    let alpha = math::TAU;
    let b = 1.0 / math::sqrt(2.0);
    let a = b / alpha;
    make_helix_curve(a, alpha, b).expect("default helix is unit speed")
}

/// Arc-length reparametrization: returns a spec whose compiled curve has
/// constant speed equal to the total length of the input. Rejects curves
/// whose speed collapses on the interior (isolated endpoint zeros, as in
/// warped circles, are fine: the arc-length map stays strictly monotone).
pub fn reparametrize_arclength(spec: &CurveSpec) -> Result<CurveSpec, CurveError> {
    let raw = Curve {
        family: spec.family.clone(),
        map: None,
    };
    const GRID: usize = 4096;
    for i in 0..GRID {
        let t = (i as f64 + 0.5) / GRID as f64;
        let s = raw.speed(t);
        if s < 1e-12 {
            return Err(CurveError::DegenerateSpeed { t, speed: s });
        }
    }
    Ok(CurveSpec {
        family: spec.family.clone(),
        arc_length: true,
    })
}

/// Monotone map u -> t with arclen(t) = u * L, tabulated per panel and
/// inverted by bisection.
#[derive(Clone, Debug)]
struct ArcLengthMap {
    /// cumulative arc length at panel boundaries i/P, i = 0..=P
    cumulative: Vec<f64>,
    total: f64,
}

const ARC_PANELS: usize = 512;
const ARC_ORDER: usize = 16;

impl ArcLengthMap {
    fn build(family: &CurveFamily) -> Self {
        let mut cumulative = Vec::with_capacity(ARC_PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for p in 0..ARC_PANELS {
            let a = p as f64 / ARC_PANELS as f64;
            let b = (p + 1) as f64 / ARC_PANELS as f64;
            acc += quad::integrate(a, b, 1, ARC_ORDER, |t| math::norm(&family.jet(t)[1]));
            cumulative.push(acc);
        }
        ArcLengthMap {
            cumulative,
            total: acc,
        }
    }

    /// Arc length from 0 to t.
    fn arclen(&self, family: &CurveFamily, t: f64) -> f64 {
        let scaled = t * ARC_PANELS as f64;
        let panel = (math::floor(scaled) as usize).min(ARC_PANELS - 1);
        let left = panel as f64 / ARC_PANELS as f64;
        self.cumulative[panel]
            + quad::integrate(left, t, 1, ARC_ORDER, |x| math::norm(&family.jet(x)[1]))
    }

    fn invert(&self, family: &CurveFamily, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let target = u * self.total;
        let panel = match self
            .cumulative
            .binary_search_by(|s| s.partial_cmp(&target).expect("finite"))
        {
            Ok(i) => i.min(ARC_PANELS - 1),
            Err(i) => i.saturating_sub(1).min(ARC_PANELS - 1),
        };
        let mut lo = panel as f64 / ARC_PANELS as f64;
        let mut hi = (panel + 1) as f64 / ARC_PANELS as f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.arclen(family, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Compiled curve: evaluation, exact derivatives, and (if requested) the
/// arc-length reparametrization chain rule.
#[derive(Clone, Debug)]
pub struct Curve {
    family: CurveFamily,
    map: Option<ArcLengthMap>,
}

impl Curve {
    pub fn compile(spec: &CurveSpec) -> Self {
        let map = spec.arc_length.then(|| ArcLengthMap::build(&spec.family));
        Curve {
            family: spec.family.clone(),
            map,
        }
    }

    pub fn dim(&self) -> Dim {
        self.family.dim()
    }

    pub fn family(&self) -> &CurveFamily {
        &self.family
    }

    /// Total arc length over [0, 1].
    pub fn length(&self) -> f64 {
        match &self.map {
            Some(m) => m.total,
            None => quad::integrate(0.0, 1.0, 64, ARC_ORDER, |t| {
                math::norm(&self.family.jet(t)[1])
            }),
        }
    }

    /// Position and first three derivatives at t, after reparametrization
    /// when active. The chain rule uses sigma' = L/|c'(sigma)|; where the raw
    /// speed vanishes at an endpoint, derivatives are taken a hair inside.
    pub fn jet(&self, t: f64) -> [[f64; 3]; 4] {
        match &self.map {
            None => self.family.jet(t),
            Some(map) => {
                let mut u = t;
                let mut sigma = map.invert(&self.family, u);
                let mut raw = self.family.jet(sigma);
                if math::norm(&raw[1]) < 1e-9 {
                    u = if t < 0.5 { t + 1e-9 } else { t - 1e-9 };
                    sigma = map.invert(&self.family, u);
                    raw = self.family.jet(sigma);
                }
                let l = map.total;
                let c1 = raw[1];
                let c2 = raw[2];
                let c3 = raw[3];
                let sp = math::norm(&c1);
                let s1 = l / sp;
                let c1c2 = math::dot(&c1, &c2);
                let s2 = -l * l * c1c2 / (sp * sp * sp * sp);
                let q1 = (math::dot(&c2, &c2) + math::dot(&c1, &c3)) / (sp * sp * sp * sp)
                    - 4.0 * c1c2 * c1c2 / libm::pow(sp, 6.0);
                let s3 = -l * l * q1 * s1;
                let d1 = scale(&c1, s1);
                let d2 = add(&scale(&c2, s1 * s1), &scale(&c1, s2));
                let d3 = add(
                    &add(&scale(&c3, s1 * s1 * s1), &scale(&c2, 3.0 * s1 * s2)),
                    &scale(&c1, s3),
                );
                [raw[0], d1, d2, d3]
            }
        }
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        match &self.map {
            None => self.family.jet(t)[0],
            Some(map) => self.family.jet(map.invert(&self.family, t))[0],
        }
    }

    pub fn deriv(&self, t: f64) -> [f64; 3] {
        self.jet(t)[1]
    }

    pub fn speed(&self, t: f64) -> f64 {
        math::norm(&self.jet(t)[1])
    }

    pub fn curvature(&self, t: f64) -> f64 {
        let j = self.jet(t);
        let cr = math::cross(&j[1], &j[2]);
        let sp = math::norm(&j[1]);
        math::norm(&cr) / (sp * sp * sp)
    }

    /// Frenet torsion; None where the osculating plane degenerates.
    pub fn torsion(&self, t: f64) -> Option<f64> {
        let j = self.jet(t);
        let cr = math::cross(&j[1], &j[2]);
        let denom = math::dot(&cr, &cr);
        if denom < 1e-18 {
            return None;
        }
        Some(math::dot(&cr, &j[3]) / denom)
    }

    /// Angle of the tangent vector in the plane (d = 2).
    pub fn tangent_angle(&self, t: f64) -> f64 {
        let d = self.jet(t)[1];
        math::atan2(d[1], d[0])
    }
}

/// Cached grid of curve data: `cells + 1` uniform nodes on [0, 1] with
/// position, first and second derivative at each. `interpolation_order = 0`
/// records that consumers evaluate the curve exactly rather than through the
/// cache; the cache exists for grid-sweep loops.
#[derive(Clone, Debug)]
pub struct CurveSampler {
    curve: Arc<Curve>,
    cells: usize,
    nodes_t: Vec<f64>,
    gamma: Vec<[f64; 3]>,
    d1: Vec<[f64; 3]>,
    d2: Vec<[f64; 3]>,
    max_speed: f64,
    max_accel: f64,
    pub interpolation_order: u8,
}

impl CurveSampler {
    pub fn new(spec: &CurveSpec, cells: usize) -> Self {
        Self::from_curve(Arc::new(Curve::compile(spec)), cells)
    }

    pub fn from_curve(curve: Arc<Curve>, cells: usize) -> Self {
        assert!(cells >= 2);
        let mut nodes_t = Vec::with_capacity(cells + 1);
        let mut gamma = Vec::with_capacity(cells + 1);
        let mut d1 = Vec::with_capacity(cells + 1);
        let mut d2 = Vec::with_capacity(cells + 1);
        let mut max_speed = 0.0f64;
        let mut max_accel = 0.0f64;
        for i in 0..=cells {
            let t = i as f64 / cells as f64;
            let j = curve.jet(t);
            max_speed = max_speed.max(math::norm(&j[1]));
            max_accel = max_accel.max(math::norm(&j[2]));
            nodes_t.push(t);
            gamma.push(j[0]);
            d1.push(j[1]);
            d2.push(j[2]);
        }
        CurveSampler {
            curve,
            cells,
            nodes_t,
            gamma,
            d1,
            d2,
            max_speed,
            max_accel,
            interpolation_order: 0,
        }
    }

    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes_t
    }

    pub fn gamma(&self) -> &[[f64; 3]] {
        &self.gamma
    }

    pub fn d1(&self) -> &[[f64; 3]] {
        &self.d1
    }

    pub fn d2(&self) -> &[[f64; 3]] {
        &self.d2
    }

    /// Upper bound for the speed on [0, 1] (max over nodes; exact for the
    /// constant-speed families used in production runs).
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Max of the second-derivative norm over the nodes, used by the
    /// second-order slope envelope in the zero counter.
    pub fn max_accel(&self) -> f64 {
        self.max_accel
    }
}

/// Regularity report for a reference curve. Always produced; the boolean flags
/// summarize which clauses hold at the tolerances baked into the fields.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveRegularityReport {
    pub length: f64,
    pub unit_speed_err: f64,
    pub min_curvature: f64,
    /// min |torsion| over the grid (d = 3, non-planar curves only)
    pub min_torsion: Option<f64>,
    pub planar: bool,
    pub unit_speed: bool,
    pub curvature_positive: bool,
    /// whether every sub-interval of length c0/lambda escapes every ball of
    /// radius N^-alpha / lambda; None when no scale was supplied
    pub ball_nonconfinement: Option<bool>,
}

/// Scale parameters for the ball-nonconfinement clause.
#[derive(Clone, Copy, Debug)]
pub struct BallScale {
    pub lambda: f64,
    pub n_points: usize,
    pub alpha: f64,
    pub c0: f64,
}

pub fn validate_curve_regularity(
    spec: &CurveSpec,
    ball: Option<BallScale>,
) -> CurveRegularityReport {
    let curve = Curve::compile(spec);
    const GRID: usize = 2048;
    let mut unit_speed_err = 0.0f64;
    let mut min_curvature = f64::INFINITY;
    let mut max_abs_torsion = 0.0f64;
    let mut min_abs_torsion = f64::INFINITY;
    let mut torsion_defined = true;
    for i in 0..=GRID {
        // interior-shifted nodes: endpoint speed may legitimately vanish for
        // warped inputs, and the reparametrized curve is what matters there
        let t = (i as f64 + 0.5) / (GRID as f64 + 1.0);
        unit_speed_err = unit_speed_err.max(math::abs(curve.speed(t) - 1.0));
        min_curvature = min_curvature.min(curve.curvature(t));
        if curve.dim() == Dim::Three {
            match curve.torsion(t) {
                Some(tau) => {
                    max_abs_torsion = max_abs_torsion.max(math::abs(tau));
                    min_abs_torsion = min_abs_torsion.min(math::abs(tau));
                }
                None => torsion_defined = false,
            }
        }
    }
    let planar = curve.dim() == Dim::Two || !torsion_defined || max_abs_torsion < 1e-9;
    let min_torsion = (curve.dim() == Dim::Three && !planar).then_some(min_abs_torsion);
    let ball_nonconfinement = ball.map(|scale| {
        let span = scale.c0 / scale.lambda;
        let radius = libm::pow(scale.n_points as f64, -scale.alpha) / scale.lambda;
        let starts = 256;
        let probes = 16;
        (0..starts).all(|i| {
            let t0 = i as f64 / starts as f64 * (1.0 - span);
            let mut diameter = 0.0f64;
            let pts: Vec<[f64; 3]> = (0..=probes)
                .map(|k| curve.eval(t0 + span * k as f64 / probes as f64))
                .collect();
            for (a, p) in pts.iter().enumerate() {
                for q in &pts[a + 1..] {
                    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                    diameter = diameter.max(math::norm(&d));
                }
            }
            diameter > 2.0 * radius
        })
    });
    CurveRegularityReport {
        length: curve.length(),
        unit_speed_err,
        min_curvature,
        min_torsion,
        planar,
        unit_speed: unit_speed_err <= 1e-9,
        curvature_positive: min_curvature > 1e-9,
        ball_nonconfinement,
    }
}

/// Continuous lift of the tangent angle on a uniform grid (d = 2). For curves
/// with positive curvature the lift is strictly monotone.
pub fn tangent_angle_lift(curve: &Curve, samples: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(samples + 1);
    let mut prev = curve.tangent_angle(0.0);
    out.push((0.0, prev));
    for i in 1..=samples {
        let t = i as f64 / samples as f64;
        let mut a = curve.tangent_angle(t);
        while a - prev > math::PI {
            a -= math::TAU;
        }
        while a - prev < -math::PI {
            a += math::TAU;
        }
        out.push((t, a));
        prev = a;
    }
    out
}

/// Parameter windows where the tangent line of the curve is within `kappa`
/// (radians, mod pi) of the line with angle `line_angle`. Found by monotone
/// bisection on the lifted tangent angle, so each window is a genuine
/// interval for positive-curvature curves.
pub fn tangent_line_windows(curve: &Curve, line_angle: f64, kappa: f64) -> Vec<(f64, f64)> {
    if kappa <= 0.0 {
        return Vec::new();
    }
    const SAMPLES: usize = 4096;
    let lift = tangent_angle_lift(curve, SAMPLES);
    let (psi0, psi1) = (lift[0].1, lift[SAMPLES].1);
    let (lo, hi) = if psi0 <= psi1 {
        (psi0, psi1)
    } else {
        (psi1, psi0)
    };
    if hi - lo < 1e-12 {
        // straight segment: the whole interval is near the line or none of it
        let d = angle_line_dist(psi0, line_angle);
        return if d < kappa {
            alloc::vec![(0.0, 1.0)]
        } else {
            Vec::new()
        };
    }
    // every representative line_angle + k pi inside the swept range
    let mut windows = Vec::new();
    let k_min = math::floor((lo - line_angle) / math::PI) as i64 - 1;
    let k_max = math::floor((hi - line_angle) / math::PI) as i64 + 1;
    for k in k_min..=k_max {
        let center = line_angle + k as f64 * math::PI;
        let a = invert_lift(&lift, curve, center - kappa);
        let b = invert_lift(&lift, curve, center + kappa);
        let (mut wa, mut wb) = if psi0 <= psi1 { (a, b) } else { (b, a) };
        wa = wa.max(0.0);
        wb = wb.min(1.0);
        if wb - wa > 1e-15 && angle_in_range(center, lo - kappa, hi + kappa) {
            windows.push((wa, wb));
        }
    }
    windows.sort_unstable_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
    merge_overlaps(windows)
}

fn angle_in_range(a: f64, lo: f64, hi: f64) -> bool {
    a >= lo && a <= hi
}

fn angle_line_dist(psi: f64, line: f64) -> f64 {
    let mut d = (psi - line) % math::PI;
    if d < 0.0 {
        d += math::PI;
    }
    d.min(math::PI - d)
}

/// Solve lift(t) = target by bisection between bracketing grid nodes; clamps
/// to the ends when the target lies outside the swept range.
fn invert_lift(lift: &[(f64, f64)], curve: &Curve, target: f64) -> f64 {
    let n = lift.len() - 1;
    let increasing = lift[n].1 >= lift[0].1;
    let cmp = |v: f64| if increasing { v } else { -v };
    let tgt = cmp(target);
    if tgt <= cmp(lift[0].1) {
        return lift[0].0;
    }
    if tgt >= cmp(lift[n].1) {
        return lift[n].0;
    }
    // binary search for the bracketing cell
    let (mut i_lo, mut i_hi) = (0usize, n);
    while i_hi - i_lo > 1 {
        let mid = (i_lo + i_hi) / 2;
        if cmp(lift[mid].1) <= tgt {
            i_lo = mid;
        } else {
            i_hi = mid;
        }
    }
    let (mut lo, mut hi) = (lift[i_lo].0, lift[i_hi].0);
    let base = lift[i_lo].1;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let mut psi = curve.tangent_angle(mid);
        // unwrap against the cell's start; cells are far finer than pi
        while psi - base > math::PI {
            psi -= math::TAU;
        }
        while psi - base < -math::PI {
            psi += math::TAU;
        }
        if cmp(psi) <= tgt {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn merge_overlaps(windows: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(windows.len());
    for w in windows {
        match out.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => out.push(w),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences with one Richardson step, the derivative
    /// oracle for the analytic jets.
    fn fd_deriv(f: &dyn Fn(f64) -> [f64; 3], t: f64) -> [f64; 3] {
        let step = 1e-5;
        let d = |h: f64| {
            let a = f(t + h);
            let b = f(t - h);
            [
                (a[0] - b[0]) / (2.0 * h),
                (a[1] - b[1]) / (2.0 * h),
                (a[2] - b[2]) / (2.0 * h),
            ]
        };
        let d1 = d(step);
        let d2 = d(step / 2.0);
        [
            (4.0 * d2[0] - d1[0]) / 3.0,
            (4.0 * d2[1] - d1[1]) / 3.0,
            (4.0 * d2[2] - d1[2]) / 3.0,
        ]
    }

    #[test]
    fn circle_is_unit_speed_with_constant_curvature() {
        let spec = make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap();
        let curve = Curve::compile(&spec);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((curve.speed(t) - 1.0).abs() < 1e-15, "t={t}");
            assert!((curve.curvature(t) - math::TAU).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn circle_curvature_matches_inverse_radius() {
        for radius in [UNIT_CIRCLE_RADIUS, 0.1, 0.05] {
            let spec = make_circle_curve(radius).unwrap();
            let curve = Curve::compile(&spec);
            for i in 0..=64 {
                let t = i as f64 / 64.0;
                assert!((curve.curvature(t) - 1.0 / radius).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sub_unit_circle_is_reported() {
        let spec = make_circle_curve(1.0 / (2.0 * math::TAU)).unwrap();
        let report = validate_curve_regularity(&spec, None);
        assert!((report.length - 0.5).abs() < 1e-9);
        assert!(!report.unit_speed); // speed 1/2 everywhere
    }

    #[test]
    fn radius_bounds_are_enforced() {
        assert!(matches!(
            make_circle_curve(0.2),
            Err(CurveError::RadiusOutOfRange(_))
        ));
        assert!(matches!(
            make_circle_curve(-0.1),
            Err(CurveError::RadiusOutOfRange(_))
        ));
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        let families = [
            CurveFamily::Circle {
                radius: UNIT_CIRCLE_RADIUS,
                warp: 1.0,
            },
            CurveFamily::Circle {
                radius: 0.1,
                warp: 2.0,
            },
            CurveFamily::Helix {
                a: 0.5 / math::TAU,
                alpha: math::TAU,
                b: (1.0f64 - 0.25).sqrt(),
            },
            CurveFamily::Product { radius: 0.12 },
        ];
        for fam in &families {
            for i in 1..8 {
                let t = i as f64 / 8.0;
                let jet = fam.jet(t);
                let fd1 = fd_deriv(&|x| fam.jet(x)[0], t);
                let fd2 = fd_deriv(&|x| fam.jet(x)[1], t);
                let fd3 = fd_deriv(&|x| fam.jet(x)[2], t);
                for k in 0..3 {
                    assert!((jet[1][k] - fd1[k]).abs() < 1e-6, "{fam:?} d1[{k}] t={t}");
                    assert!((jet[2][k] - fd2[k]).abs() < 1e-5, "{fam:?} d2[{k}] t={t}");
                    assert!((jet[3][k] - fd3[k]).abs() < 1e-3, "{fam:?} d3[{k}] t={t}");
                }
            }
        }
    }

    #[test]
    fn helix_requires_unit_speed_and_curl() {
        assert!(matches!(
            make_helix_curve(0.3, 1.0, 0.3),
            Err(CurveError::NotUnitSpeed(_))
        ));
        assert!(matches!(
            make_helix_curve(0.0, 1.0, 1.0),
            Err(CurveError::FlatHelix)
        ));
        let ok = default_helix();
        let curve = Curve::compile(&ok);
        for i in 0..=32 {
            let t = i as f64 / 32.0;
            assert!((curve.speed(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn helix_torsion_matches_finite_difference_oracle() {
        // generic unit-speed helix: a alpha = 0.6, b = 0.8
        let alpha = 3.0;
        let a = 0.6 / alpha;
        let b = 0.8;
        let spec = make_helix_curve(a, alpha, b).unwrap();
        let curve = Curve::compile(&spec);
        // closed forms for the unit-speed circular helix
        let kappa_expect = a * alpha * alpha;
        let tau_expect = b * alpha;
        for i in 0..=16 {
            let t = i as f64 / 16.0;
            assert!((curve.curvature(t) - kappa_expect).abs() < 1e-9);
            assert!((curve.torsion(t).unwrap() - tau_expect).abs() < 1e-9);
        }
        // finite-difference torsion via (d1 x d2) . d3 with FD jets
        let fam = spec.family.clone();
        for i in 1..8 {
            let t = i as f64 / 8.0;
            let d1 = fd_deriv(&|x| fam.jet(x)[0], t);
            let d2 = fd_deriv(&|x| fam.jet(x)[1], t);
            let d3 = fd_deriv(&|x| fam.jet(x)[2], t);
            let cr = math::cross(&d1, &d2);
            let tau_fd = math::dot(&cr, &d3) / math::dot(&cr, &cr);
            assert!((curve.torsion(t).unwrap() - tau_fd).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn planar_helix_flagged() {
        // b = 0 keeps unit speed with a alpha = 1; constructor rejects the
        // zero-curl case but accepts b = 0
        let spec = make_helix_curve(1.0 / 3.0, 3.0, 0.0).unwrap();
        let report = validate_curve_regularity(&spec, None);
        assert!(report.planar);
        assert!(report.min_torsion.is_none());
        assert!(report.curvature_positive);
    }

    #[test]
    fn product_curve_halves_the_planar_curvature() {
        let radius = 0.11;
        let spec = make_product_curve(radius).unwrap();
        let curve = Curve::compile(&spec);
        for i in 0..=16 {
            let t = i as f64 / 16.0;
            assert!((curve.speed(t) - 1.0).abs() < 1e-12);
            assert!((curve.curvature(t) - 0.5 / radius).abs() < 1e-9);
            assert!((curve.torsion(t).unwrap().abs() - 0.5 / radius).abs() < 1e-9);
        }
    }

    #[test]
    fn reparametrize_unit_circle_is_identity() {
        let spec = make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap();
        let re = reparametrize_arclength(&spec).unwrap();
        let a = Curve::compile(&spec);
        let b = Curve::compile(&re);
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let pa = a.eval(t);
            let pb = b.eval(t);
            let d = [pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]];
            assert!(math::norm(&d) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn reparametrize_warped_circle_restores_unit_speed() {
        let spec = CurveSpec {
            family: CurveFamily::Circle {
                radius: UNIT_CIRCLE_RADIUS,
                warp: 2.0,
            },
            arc_length: false,
        };
        let re = reparametrize_arclength(&spec).unwrap();
        let curve = Curve::compile(&re);
        assert!((curve.length() - 1.0).abs() < 1e-10);
        for i in 0..=500 {
            let t = i as f64 / 500.0;
            assert!(
                (curve.speed(t) - 1.0).abs() < 1e-9,
                "t={t} speed={}",
                curve.speed(t)
            );
        }
        // quadrature oracle: position must equal the unwarped circle's
        let plain = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let pa = curve.eval(t);
            let pb = plain.eval(t);
            let d = [pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]];
            assert!(math::norm(&d) < 1e-8, "t={t}");
        }
    }

    #[test]
    fn reparametrize_leaves_straight_segment_unchanged() {
        let spec = make_segment_curve(Dim::Two, [0.0; 3], [1.0, 0.0, 0.0]);
        let re = reparametrize_arclength(&spec).unwrap();
        let curve = Curve::compile(&re);
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            let p = curve.eval(t);
            assert!((p[0] - t).abs() < 1e-12 && p[1].abs() < 1e-12);
            assert!((curve.speed(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reparametrize_rejects_interior_stalls() {
        // zero direction vector stalls everywhere
        let spec = make_segment_curve(Dim::Two, [0.0; 3], [0.0, 0.0, 0.0]);
        assert!(matches!(
            reparametrize_arclength(&spec),
            Err(CurveError::DegenerateSpeed { .. })
        ));
    }

    #[test]
    fn reparametrization_preserves_image() {
        // Hausdorff distance between dense samples of input and output
        let spec = CurveSpec {
            family: CurveFamily::Circle {
                radius: 0.1,
                warp: 2.0,
            },
            arc_length: false,
        };
        let re = reparametrize_arclength(&spec).unwrap();
        let a = Curve::compile(&spec);
        let b = Curve::compile(&re);
        let sample = |c: &Curve| -> Vec<[f64; 3]> {
            (0..=2000).map(|i| c.eval(i as f64 / 2000.0)).collect()
        };
        let pa = sample(&a);
        let pb = sample(&b);
        let one_sided = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
            from.iter()
                .map(|p| {
                    to.iter()
                        .map(|q| {
                            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                            math::norm(&d)
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        // dense-sample Hausdorff; 2000 nodes on a curve of length ~0.63
        // resolve to ~3e-4, so the bound checks identity of the images
        let h = one_sided(&pa, &pb).max(one_sided(&pb, &pa));
        assert!(h < 5e-4, "hausdorff {h}");
        // exact pointwise check: arc length of the warp-2 circle at raw
        // parameter t is t^2 * L, so b(t^2) must equal a(t)
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let p = a.eval(t);
            let q = b.eval(t * t);
            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            assert!(math::norm(&d) < 1e-8, "t={t}");
        }
    }

    #[test]
    fn straight_segment_fails_curvature_clause() {
        let spec = make_segment_curve(Dim::Two, [0.0; 3], [1.0, 0.0, 0.0]);
        let report = validate_curve_regularity(&spec, None);
        assert_eq!(report.min_curvature, 0.0);
        assert!(!report.curvature_positive);
        assert!(report.unit_speed);
    }

    #[test]
    fn unit_circle_passes_with_ball_clause() {
        let spec = make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap();
        let report = validate_curve_regularity(
            &spec,
            Some(BallScale {
                lambda: math::TAU * 5.0f64.sqrt(),
                n_points: 8,
                alpha: 0.5,
                c0: 1.0,
            }),
        );
        assert!(report.unit_speed && report.curvature_positive);
        assert!((report.min_curvature - math::TAU).abs() < 1e-6);
        assert_eq!(report.ball_nonconfinement, Some(true));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn sampler_cache_matches_direct_evaluation() {
        let spec = make_product_curve(0.11).unwrap();
        let sampler = CurveSampler::new(&spec, 257);
        let curve = sampler.curve();
        for (i, &t) in sampler.nodes().iter().enumerate().step_by(17) {
            let jet = curve.jet(t);
            for k in 0..3 {
                assert!((sampler.gamma()[i][k] - jet[0][k]).abs() < 1e-10);
                assert!((sampler.d1()[i][k] - jet[1][k]).abs() < 1e-10);
                assert!((sampler.d2()[i][k] - jet[2][k]).abs() < 1e-10);
            }
        }
        assert!((sampler.max_speed() - 1.0).abs() < 1e-12);
        assert_eq!(sampler.interpolation_order, 0);
    }

    #[test]
    fn tangent_angle_is_strictly_monotone_for_positive_curvature() {
        let spec = make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap();
        let curve = Curve::compile(&spec);
        let lift = tangent_angle_lift(&curve, 512);
        for w in lift.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
        // full turn over one period
        assert!((lift[512].1 - lift[0].1 - math::TAU).abs() < 1e-9);
    }

    #[test]
    fn tangent_line_windows_match_closed_form_on_circle() {
        // circle tangent angle is 2 pi t + pi/2; the window around a line at
        // angle beta has width 2 kappa / (2 pi) per branch, two branches
        let spec = make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap();
        let curve = Curve::compile(&spec);
        let kappa = 1e-3;
        let windows = tangent_line_windows(&curve, 0.3, kappa);
        let total: f64 = windows.iter().map(|w| w.1 - w.0).sum();
        assert!(
            (total - 2.0 * (2.0 * kappa) / math::TAU).abs() < 1e-9,
            "total={total}"
        );
        for (a, b) in &windows {
            let mid = 0.5 * (a + b);
            assert!(angle_line_dist(curve.tangent_angle(mid), 0.3) < kappa);
            // just outside the window the angle condition fails
            if a - 1e-6 > 0.0 {
                assert!(angle_line_dist(curve.tangent_angle(a - 1e-6), 0.3) >= kappa);
            }
        }
    }

    #[test]
    fn tangent_line_windows_on_segment_are_all_or_nothing() {
        let spec = make_segment_curve(Dim::Two, [0.0; 3], [1.0, 0.0, 0.0]);
        let curve = Curve::compile(&spec);
        assert_eq!(tangent_line_windows(&curve, 0.5, 1e-3), alloc::vec![]);
        assert_eq!(
            tangent_line_windows(&curve, 1e-5, 1e-3),
            alloc::vec![(0.0, 1.0)]
        );
    }
}
