//! Gaussian (Kac-Rice) predictions for the nodal intersection count.
//!
//! For the unit-variance wave on a unit-speed curve the covariance of
//! (F(t), F'(t)) is diag(1, alpha) with alpha = 4 pi^2 m / d exactly: the
//! frequency set is closed under the symmetries that make the second moment
//! of its direction measure isotropic. The first intensity is then constant,
//! K1 = sqrt(alpha)/pi, and the expected count over a length-1 curve is
//! (2/sqrt d) sqrt m.
//!
//! The two-point quantities are built from the exact lattice sums
//!
//! ```text
//! r(t1,t2)    = (1/N) sum_mu cos(2 pi <mu, gamma(t1) - gamma(t2)>)
//! d r/d t_i   = -/+ (2 pi/N) sum_mu <mu, gamma'(t_i)> sin(...)
//! d2 r        = (4 pi^2/N) sum_mu <mu, gamma'(t1)><mu, gamma'(t2)> cos(...)
//! ```
//!
//! The variance functional integrates the two-point expression
//! `4 [ (1/N) sum_mu <mu/|mu|, g'(t1)>^2 <mu/|mu|, g'(t2)>^2 - 1 ]` with the
//! mu-sum inside the brackets; that expression can be negative, so its value
//! is reported as a diagnostic next to Monte Carlo variances rather than
//! asserted against them.

use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Curve, CurveSampler};
use crate::lattice::{Dim, LatticeSet};
use crate::math;
use crate::quad;

#[derive(Clone, Debug, PartialEq)]
pub enum KacRiceError {
    /// covariance of (F(t1), F(t2), F'(t1), F'(t2)) is numerically singular
    SingularCell {
        min_eigenvalue: f64,
    },
    /// node doubling still moved the quadrature by more than 1e-6 relative
    QuadratureUnconverged {
        rel_change: f64,
    },
    PlaneOnly,
}

impl fmt::Display for KacRiceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KacRiceError::SingularCell { min_eigenvalue } => {
                write!(
                    f,
                    "singular two-point covariance (min eigenvalue {min_eigenvalue:.3e})"
                )
            }
            KacRiceError::QuadratureUnconverged { rel_change } => {
                write!(
                    f,
                    "variance quadrature unconverged (relative change {rel_change:.3e})"
                )
            }
            KacRiceError::PlaneOnly => write!(f, "operation requires d=2"),
        }
    }
}

impl core::error::Error for KacRiceError {}

/// Bundle of closed-form predictions for one (d, m).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KacRicePrediction {
    pub d: u8,
    pub m: u64,
    /// E Z = (2/sqrt d) sqrt m over a length-1 curve
    pub mean: f64,
    /// literal two-point variance integral, when computed
    pub variance_leading: Option<f64>,
    /// fourth Fourier coefficient of the angle measure (d = 2)
    pub tau4: Option<f64>,
    /// alpha = Var F'(t) = 4 pi^2 m / d
    pub alpha: f64,
}

/// E Z = (2/sqrt d) sqrt m.
pub fn predict_mean(d: Dim, m: u64) -> f64 {
    2.0 / math::sqrt(d.as_usize() as f64) * math::sqrt(m as f64)
}

/// K1 = sqrt(alpha)/pi with alpha = 4 pi^2 m / d; constant in t for
/// unit-speed curves, so it coincides with the expected count.
pub fn first_intensity(d: Dim, m: u64) -> f64 {
    let alpha = 4.0 * math::PI * math::PI * m as f64 / d.as_usize() as f64;
    math::sqrt(alpha) / math::PI
}

pub fn predict(lattice: &LatticeSet) -> KacRicePrediction {
    let d = lattice.dim();
    let m = lattice.level();
    KacRicePrediction {
        d: d.as_usize() as u8,
        m,
        mean: predict_mean(d, m),
        variance_leading: None,
        tau4: (d == Dim::Two).then(|| lattice.fourth_fourier().expect("d=2")),
        alpha: 4.0 * math::PI * math::PI * m as f64 / d.as_usize() as f64,
    }
}

/// Result of the literal two-point variance quadrature.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceIntegral {
    pub value: f64,
    pub integrand_min: f64,
    pub integrand_max: f64,
    /// per-axis node count of the accepted grid
    pub nodes: usize,
    /// relative change on the last node doubling
    pub rel_change: f64,
}

/// Tensor Gauss-Legendre quadrature of
/// `(m/N) * 4 [ (1/N) sum_mu <mu/|mu|, g'(t1)>^2 <mu/|mu|, g'(t2)>^2 - 1 ]`
/// over the unit square, with node-doubling convergence control.
pub fn variance_integral(
    lattice: &LatticeSet,
    curve: &Curve,
    quad_nodes: usize,
) -> Result<VarianceIntegral, KacRiceError> {
    if lattice.dim() != Dim::Two {
        return Err(KacRiceError::PlaneOnly);
    }
    assert!(
        quad_nodes >= 64,
        "need at least 64 quadrature nodes per axis"
    );
    let coarse = eval_variance_grid(lattice, curve, quad_nodes);
    let fine = eval_variance_grid(lattice, curve, 2 * quad_nodes);
    let rel_change = math::abs(fine.0 - coarse.0) / math::abs(fine.0).max(1e-12);
    if rel_change > 1e-6 {
        return Err(KacRiceError::QuadratureUnconverged { rel_change });
    }
    Ok(VarianceIntegral {
        value: fine.0,
        integrand_min: fine.1,
        integrand_max: fine.2,
        nodes: 2 * quad_nodes,
        rel_change,
    })
}

fn eval_variance_grid(lattice: &LatticeSet, curve: &Curve, nodes: usize) -> (f64, f64, f64) {
    // composite rule: order-8 panels so doubling `nodes` refines panels
    let order = 8;
    let panels = nodes.div_ceil(order);
    let (xs, ws) = quad::gauss_legendre_unit(order);
    let n = lattice.len() as f64;
    let m = lattice.level() as f64;
    let sqrt_m = math::sqrt(m);
    // flatten nodes over all panels
    let mut ts: Vec<f64> = Vec::with_capacity(panels * order);
    let mut weights: Vec<f64> = Vec::with_capacity(panels * order);
    let h = 1.0 / panels as f64;
    for p in 0..panels {
        let left = p as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            ts.push(left + x * h);
            weights.push(w * h);
        }
    }
    // projections <mu/|mu|, gamma'(t)>^2 per node, point-major
    let pts = lattice.points();
    let mut proj: Vec<f64> = Vec::with_capacity(ts.len() * pts.len());
    for &t in &ts {
        let d1 = curve.deriv(t);
        for mu in pts {
            let v = math::idot(mu, &d1) / sqrt_m;
            proj.push(v * v);
        }
    }
    let np = pts.len();
    let mut total = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..ts.len() {
        for j in 0..ts.len() {
            let mut s = 0.0;
            for k in 0..np {
                s += proj[i * np + k] * proj[j * np + k];
            }
            let integrand = 4.0 * (s / n - 1.0);
            lo = lo.min(integrand);
            hi = hi.max(integrand);
            total += weights[i] * weights[j] * integrand;
        }
    }
    (m / n * total, lo, hi)
}

/// Exact 4x4 covariance of (F(t1), F(t2), F'(t1), F'(t2)) from lattice sums.
pub fn covariance4(lattice: &LatticeSet, curve: &Curve, t1: f64, t2: f64) -> [[f64; 4]; 4] {
    let n = lattice.len() as f64;
    let g1 = curve.eval(t1);
    let g2 = curve.eval(t2);
    let d1 = curve.deriv(t1);
    let d2 = curve.deriv(t2);
    let delta = [g1[0] - g2[0], g1[1] - g2[1], g1[2] - g2[2]];
    let mut r = 0.0; // Cov(F(t1), F(t2))
    let mut r1 = 0.0; // Cov(F(t2), F'(t1)) = d/dt1
    let mut r2 = 0.0; // Cov(F(t1), F'(t2)) = d/dt2
    let mut r12 = 0.0; // Cov(F'(t1), F'(t2))
    let mut a1 = 0.0; // Var F'(t1)
    let mut a2 = 0.0; // Var F'(t2)
    for mu in lattice.points() {
        let phase = math::TAU * math::idot(mu, &delta);
        let (c, s) = (math::cos(phase), math::sin(phase));
        let p1 = math::TAU * math::idot(mu, &d1);
        let p2 = math::TAU * math::idot(mu, &d2);
        r += c;
        r1 += -p1 * s;
        r2 += p2 * s;
        r12 += p1 * p2 * c;
        a1 += p1 * p1;
        a2 += p2 * p2;
    }
    let scale = 1.0 / n;
    let (r, r1, r2, r12, a1, a2) = (
        r * scale,
        r1 * scale,
        r2 * scale,
        r12 * scale,
        a1 * scale,
        a2 * scale,
    );
    [
        [1.0, r, 0.0, r2],
        [r, 1.0, r1, 0.0],
        [0.0, r1, a1, r12],
        [r2, 0.0, r12, a2],
    ]
}

/// E |X Y| for a centered bivariate normal with standard deviations s1, s2
/// and correlation rho.
pub fn abs_product_moment(s1: f64, s2: f64, rho: f64) -> f64 {
    let rho = rho.clamp(-1.0, 1.0);
    2.0 * s1 * s2 / math::PI * (rho * math::asin(rho) + math::sqrt(1.0 - rho * rho))
}

/// Two-point intensity K2(t1, t2): density of (F(t1), F(t2)) at (0,0) times
/// the conditional expectation E(|F'(t1) F'(t2)| | F = 0 at both points).
pub fn second_intensity(
    lattice: &LatticeSet,
    curve: &Curve,
    t1: f64,
    t2: f64,
) -> Result<f64, KacRiceError> {
    let sigma = covariance4(lattice, curve, t1, t2);
    let ev = math::symmetric_eigenvalues(&sigma);
    if ev[0] <= 1e-10 {
        return Err(KacRiceError::SingularCell {
            min_eigenvalue: ev[0],
        });
    }
    // condition (F'(t1), F'(t2)) on F(t1) = F(t2) = 0:
    // cond = D - B^T A^{-1} B with A = [[1, rho], [rho, 1]]
    let rho = sigma[0][1];
    let det_vals = 1.0 - rho * rho;
    let b = [[sigma[0][2], sigma[0][3]], [sigma[1][2], sigma[1][3]]];
    let mut cond = [[sigma[2][2], sigma[2][3]], [sigma[3][2], sigma[3][3]]];
    for i in 0..2 {
        for j in 0..2 {
            let mut corr = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    let ainv = if k == l { 1.0 } else { -rho } / det_vals;
                    corr += b[k][i] * ainv * b[l][j];
                }
            }
            cond[i][j] -= corr;
        }
    }
    let s1 = math::sqrt(cond[0][0].max(0.0));
    let s2 = math::sqrt(cond[1][1].max(0.0));
    if s1 * s2 == 0.0 {
        return Err(KacRiceError::SingularCell {
            min_eigenvalue: 0.0,
        });
    }
    let rho_c = (cond[0][1] / (s1 * s2)).clamp(-1.0, 1.0);
    let density = 1.0 / (math::TAU * math::sqrt(det_vals));
    Ok(density * abs_product_moment(s1, s2, rho_c))
}

/// Fills in the literal variance integral next to the closed-form fields.
pub fn predict_with_variance(
    lattice: &LatticeSet,
    sampler: &CurveSampler,
    quad_nodes: usize,
) -> Result<(KacRicePrediction, VarianceIntegral), KacRiceError> {
    let mut pred = predict(lattice);
    let vi = variance_integral(lattice, sampler.curve(), quad_nodes)?;
    pred.variance_leading = Some(vi.value);
    Ok((pred, vi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_circle_curve, Curve, UNIT_CIRCLE_RADIUS};
    use crate::lattice::LatticeSet;
    use alloc::vec;

    #[test]
    fn mean_predictions() {
        assert!((predict_mean(Dim::Two, 2) - 2.0).abs() < 1e-15);
        assert!((predict_mean(Dim::Three, 3) - 2.0).abs() < 1e-15);
        assert!((predict_mean(Dim::Two, 65) - 130.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn first_intensity_formula() {
        assert!((first_intensity(Dim::Two, 1) - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((first_intensity(Dim::Three, 3) - 2.0).abs() < 1e-12);
        // K1 is constant on a length-1 curve, so it equals the mean
        let mut m = 1u64;
        for k in 0..20 {
            m = m
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let level = 1 + (m >> 33) % 5000;
            let d = if k % 2 == 0 { Dim::Two } else { Dim::Three };
            assert!(
                (first_intensity(d, level) - predict_mean(d, level)).abs() < 1e-9,
                "d={d} m={level}"
            );
        }
    }

    #[test]
    fn mean_squared_identity() {
        for (d, m) in [
            (Dim::Two, 2u64),
            (Dim::Two, 65),
            (Dim::Three, 3),
            (Dim::Three, 5),
        ] {
            let mean = predict_mean(d, m);
            let recovered = mean * mean * d.as_usize() as f64 / 4.0;
            assert!((recovered - m as f64).abs() < 1e-12 * (m as f64).max(1.0));
        }
    }

    #[test]
    fn single_time_covariance_is_diagonal() {
        // Gamma(t) = diag(1, alpha) exactly, alpha = 4 pi^2 m / d
        for m in [2u64, 5, 25, 65] {
            let lattice = LatticeSet::enumerate(Dim::Two, m).unwrap();
            let curve = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
            for t in [0.0, 0.21, 0.73] {
                let sigma = covariance4(&lattice, &curve, t, t + 0.31);
                assert!((sigma[0][0] - 1.0).abs() < 1e-10);
                assert!(sigma[0][2].abs() < 1e-10, "r1(t,t) = 0");
                let alpha = 4.0 * math::PI * math::PI * m as f64 / 2.0;
                assert!((sigma[2][2] - alpha).abs() < 1e-9 * alpha);
                assert!((sigma[3][3] - alpha).abs() < 1e-9 * alpha);
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn covariance_is_positive_semidefinite() {
        let lattice = LatticeSet::enumerate(Dim::Two, 65).unwrap();
        let curve = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
        for i in 0..12 {
            for j in (i + 1)..12 {
                let (t1, t2) = (i as f64 / 12.0, j as f64 / 12.0);
                let sigma = covariance4(&lattice, &curve, t1, t2);
                let ev = math::symmetric_eigenvalues(&sigma);
                assert!(ev[0] > -1e-10, "t1={t1} t2={t2} min={}", ev[0]);
                for r in 0..4 {
                    for c in 0..4 {
                        assert!((sigma[r][c] - sigma[c][r]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn abs_product_moment_limits() {
        // independent case
        assert!((abs_product_moment(1.3, 0.7, 0.0) - 2.0 * 1.3 * 0.7 / math::PI).abs() < 1e-14);
        // perfectly correlated: E X^2 = s^2
        assert!((abs_product_moment(2.0, 2.0, 1.0) - 4.0).abs() < 1e-12);
        // Monte Carlo oracle at rho = 0.6
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rho = 0.6f64;
        let trials = 2_000_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let x: f64 = StandardNormal.sample(&mut rng);
            let w: f64 = StandardNormal.sample(&mut rng);
            let y = rho * x + (1.0 - rho * rho).sqrt() * w;
            acc += (x * y).abs();
        }
        let mc = acc / trials as f64;
        assert!(
            (abs_product_moment(1.0, 1.0, rho) - mc).abs() < 5e-3,
            "mc={mc}"
        );
    }

    #[test]
    fn second_intensity_is_symmetric_and_rejects_the_diagonal() {
        let lattice = LatticeSet::enumerate(Dim::Two, 65).unwrap();
        let curve = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
        let k2a = second_intensity(&lattice, &curve, 0.2, 0.7).unwrap();
        let k2b = second_intensity(&lattice, &curve, 0.7, 0.2).unwrap();
        assert!((k2a - k2b).abs() < 1e-12 * k2a.abs().max(1.0));
        assert!(matches!(
            second_intensity(&lattice, &curve, 0.4, 0.4 + 1e-9),
            Err(KacRiceError::SingularCell { .. })
        ));
    }

    #[test]
    fn second_intensity_factorizes_when_nearly_independent() {
        // independence-limit oracle: scan for the pair with the smallest
        // cross-covariances, where K2 must be within 5% of K1^2
        let lattice = LatticeSet::enumerate(Dim::Two, 65).unwrap();
        let curve = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
        let alpha = 4.0 * math::PI * math::PI * 65.0 / 2.0;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for j in 0..40 {
            let t1 = j as f64 / 40.0;
            for i in 1..100 {
                let t2 = t1 + 0.05 + 0.9 * i as f64 / 100.0;
                if t2 >= 1.0 {
                    break;
                }
                let sigma = covariance4(&lattice, &curve, t1, t2);
                let cross = sigma[0][1]
                    .abs()
                    .max(sigma[0][3].abs() / alpha.sqrt())
                    .max(sigma[1][2].abs() / alpha.sqrt())
                    .max(sigma[2][3].abs() / alpha);
                if cross < best.0 {
                    best = (cross, t1, t2);
                }
            }
        }
        let (cross, t1, t2) = best;
        assert!(cross < 0.2, "no nearly-independent pair found: {cross}");
        let k2 = second_intensity(&lattice, &curve, t1, t2).unwrap();
        let k1sq = first_intensity(Dim::Two, 65).powi(2);
        assert!((k2 / k1sq - 1.0).abs() < 0.05, "k2/k1^2 = {}", k2 / k1sq);
    }

    #[test]
    fn variance_integral_converges_on_the_circle() {
        let lattice = LatticeSet::enumerate(Dim::Two, 5).unwrap();
        let curve = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
        let vi = variance_integral(&lattice, &curve, 128).unwrap();
        assert!(vi.rel_change < 1e-6);
        // angle-average bound: integrand of the literal expression lies in
        // [-4, 0] because each projection factor is at most 1
        assert!(vi.integrand_min >= -4.0 - 1e-12);
        assert!(vi.integrand_max <= 0.0 + 1e-12);
    }

    #[test]
    fn variance_integral_closed_form_for_parallel_fixture() {
        // all frequencies on one line: the double integral separates into
        // (int <mu_hat, gamma'>^2 dt)^2 = (1/2)^2, so the literal expression
        // evaluates to (m/N) * (4 * 1/4 - 4) = (25/2) * (-3)
        let lattice = LatticeSet::from_points(Dim::Two, 25, vec![[3, 4, 0], [-3, -4, 0]]).unwrap();
        let curve = Curve::compile(&make_circle_curve(UNIT_CIRCLE_RADIUS).unwrap());
        let vi = variance_integral(&lattice, &curve, 64).unwrap();
        assert!((vi.value - (-37.5)).abs() < 1e-6, "value={}", vi.value);
    }

    #[test]
    fn predict_bundles_tau4() {
        let lattice = LatticeSet::enumerate(Dim::Two, 5).unwrap();
        let p = predict(&lattice);
        assert_eq!(p.d, 2);
        assert!((p.tau4.unwrap() + 0.28).abs() < 1e-12);
        assert!(p.variance_leading.is_none());
        let lattice3 = LatticeSet::enumerate(Dim::Three, 3).unwrap();
        assert!(predict(&lattice3).tau4.is_none());
    }
}
