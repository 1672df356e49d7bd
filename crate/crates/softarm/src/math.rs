//! Small fixed-size vector/matrix helpers for the rod dynamics.
//!
//! Everything is plain `[f64; 3]` / row-major `[[f64; 3]; 3]` so the physics
//! hot loop stays allocation-free.

pub type Vec3 = [f64; 3];
/// Row-major 3x3 matrix. Director frames store directors as rows
/// (row 0 = d1 normal, row 1 = d2 binormal, row 2 = d3 tangent), so
/// `matvec(q, v_lab)` yields material-frame components.
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Vec3 = [0.0; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    assert!(n > 0.0, "cannot normalize zero vector");
    scale(a, 1.0 / n)
}

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// M * v
#[inline]
pub fn matvec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// M^T * v
#[inline]
pub fn tr_matvec(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

#[inline]
pub fn transpose(m: &Mat3) -> Mat3 {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

/// Rodrigues formula: rotation matrix for rotation vector `phi` (axis * angle).
pub fn exp_so3(phi: Vec3) -> Mat3 {
    let theta = norm(phi);
    if theta < 1e-14 {
        // first-order: I + [phi]x
        return [
            [1.0, -phi[2], phi[1]],
            [phi[2], 1.0, -phi[0]],
            [-phi[1], phi[0], 1.0],
        ];
    }
    let k = scale(phi, 1.0 / theta);
    let (s, c) = theta.sin_cos();
    let v = 1.0 - c;
    [
        [
            c + k[0] * k[0] * v,
            k[0] * k[1] * v - k[2] * s,
            k[0] * k[2] * v + k[1] * s,
        ],
        [
            k[1] * k[0] * v + k[2] * s,
            c + k[1] * k[1] * v,
            k[1] * k[2] * v - k[0] * s,
        ],
        [
            k[2] * k[0] * v - k[1] * s,
            k[2] * k[1] * v + k[0] * s,
            c + k[2] * k[2] * v,
        ],
    ]
}

/// Rotation vector of a rotation matrix (inverse of `exp_so3`).
pub fn log_so3(r: &Mat3) -> Vec3 {
    let trace = r[0][0] + r[1][1] + r[2][2];
    let cos_theta = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let axis_raw = [
        r[2][1] - r[1][2],
        r[0][2] - r[2][0],
        r[1][0] - r[0][1],
    ];
    if theta < 1e-8 {
        // small angle: axis_raw = 2 sin(theta) k ~ 2 theta k
        return scale(axis_raw, 0.5);
    }
    if theta > std::f64::consts::PI - 1e-6 {
        // near pi the antisymmetric part degenerates; recover axis from the
        // symmetric part (largest diagonal entry of R + I)
        let mut k = [0.0; 3];
        let d = [
            (r[0][0] + 1.0).max(0.0),
            (r[1][1] + 1.0).max(0.0),
            (r[2][2] + 1.0).max(0.0),
        ];
        let i = if d[0] >= d[1] && d[0] >= d[2] {
            0
        } else if d[1] >= d[2] {
            1
        } else {
            2
        };
        k[i] = (d[i] * 0.5).sqrt();
        let denom = 2.0 * k[i];
        for j in 0..3 {
            if j != i {
                k[j] = (r[i][j] + r[j][i]) / (2.0 * denom);
            }
        }
        // sign from the antisymmetric part when it is not fully degenerate
        if dot(k, axis_raw) < 0.0 {
            k = scale(k, -1.0);
        }
        return scale(normalize(k), theta);
    }
    scale(axis_raw, theta / (2.0 * theta.sin()))
}

/// Re-orthonormalize a frame by Gram-Schmidt on its rows (d3 kept as anchor).
pub fn orthonormalize(m: &Mat3) -> Mat3 {
    let d3 = normalize(m[2]);
    let mut d1 = sub(m[0], scale(d3, dot(m[0], d3)));
    d1 = normalize(d1);
    let d2 = cross(d3, d1);
    [d1, d2, d3]
}

/// Frobenius norm of Q^T Q - I, used to monitor frame drift.
pub fn orthonormality_defect(m: &Mat3) -> f64 {
    let qtq = matmul(&transpose(m), m);
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let e = qtq[i][j] - if i == j { 1.0 } else { 0.0 };
            acc += e * e;
        }
    }
    acc.sqrt()
}

/// Build a right-handed director frame with d3 = `tangent`.
pub fn frame_from_tangent(tangent: Vec3) -> Mat3 {
    let d3 = normalize(tangent);
    let reference = if d3[2].abs() < 0.99 {
        [0.0, 0.0, 1.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d1 = normalize(cross(reference, d3));
    let d2 = cross(d3, d1);
    [d1, d2, d3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exp_log_roundtrip() {
        let cases = [
            [0.3, -0.2, 0.9],
            [1e-10, 0.0, 0.0],
            [0.0, 3.1, 0.0],
            [-2.0, 1.0, 0.5],
        ];
        for phi in cases {
            let r = exp_so3(phi);
            let back = log_so3(&r);
            for i in 0..3 {
                assert_relative_eq!(back[i], phi[i], epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn exp_is_rotation() {
        let r = exp_so3([0.4, 1.2, -0.7]);
        assert!(orthonormality_defect(&r) < 1e-12);
    }

    #[test]
    fn frame_right_handed() {
        for t in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.3, -0.4, 0.8]] {
            let f = frame_from_tangent(t);
            let d3 = f[2];
            assert_relative_eq!(dot(d3, normalize(t)), 1.0, epsilon = 1e-12);
            let c = cross(f[0], f[1]);
            for i in 0..3 {
                assert_relative_eq!(c[i], d3[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rotation_conjugation_identity() {
        // [Q^T u]x = Q^T [u]x Q, the identity behind the director update.
        let q = exp_so3([0.2, 0.5, -0.3]);
        let u = [0.7, -0.1, 0.4];
        let v = [0.2, 0.9, -0.5];
        let lhs = cross(tr_matvec(&q, u), v);
        let rhs = tr_matvec(&q, cross(u, matvec(&q, v)));
        for i in 0..3 {
            assert_relative_eq!(lhs[i], rhs[i], epsilon = 1e-12);
        }
    }
}
