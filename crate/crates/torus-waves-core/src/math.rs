//! Thin wrappers over `libm` so the crate stays `no_std` and every build
//! produces bit-identical transcendentals regardless of the host libm.

pub use libm::{asin, atan2, cos, fabs as abs, floor, sin, sqrt};

pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

/// Euclidean norm of the first `d` coordinates.
pub fn norm(v: &[f64; 3]) -> f64 {
    sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}

/// Dot product over all three coordinates (unused ones are zero).
pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Dot product of an integer lattice vector with a real vector.
pub fn idot(mu: &[i64; 3], v: &[f64; 3]) -> f64 {
    mu[0] as f64 * v[0] + mu[1] as f64 * v[1] + mu[2] as f64 * v[2]
}

/// Floor of sqrt(n) for n >= 0, exact in integer arithmetic.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut s = sqrt(n as f64) as u64;
    while s > 0 && s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order. Sufficient for the 4x4 covariance checks.
#[allow(clippy::needless_range_loop)]
pub fn symmetric_eigenvalues<const N: usize>(m: &[[f64; N]; N]) -> [f64; N] {
    let mut a = *m;
    for _ in 0..64 {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if abs(a[p][q]) < 1e-300 {
                    continue;
                }
                let theta = 0.5 * atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                let (c, s) = (cos(theta), sin(theta));
                for k in 0..N {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = [0.0; N];
    for (i, e) in ev.iter_mut().enumerate() {
        *e = a[i][i];
    }
    ev.sort_unstable_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    ev
}
