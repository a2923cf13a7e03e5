use std::f64::consts::PI;

/// Sorted eigenvalues `λ₁ ≤ λ₂ ≤ λ₃` of a symmetric 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenTriple {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl EigenTriple {
    /// `max(0, λ₂)`
    pub fn lambda2_plus(&self) -> f64 {
        self.lambda2.max(0.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.lambda1, self.lambda2, self.lambda3]
    }

    fn sorted(mut v: [f64; 3]) -> Self {
        v.sort_by(|a, b| a.total_cmp(b));
        Self {
            lambda1: v[0],
            lambda2: v[1],
            lambda3: v[2],
        }
    }
}

/// Eigenvalues of the symmetric matrix with stored entries
/// `[xx, xy, xz, yy, yz, zz]`, by the trigonometric closed form.
///
/// Only the root separated from the other two by at least `√3·p` is taken
/// from the closed form; it gets one Newton step on the characteristic
/// polynomial if its residual exceeds `1e-12·‖m‖³`. The remaining pair comes
/// from the exact 2×2 problem on the orthogonal complement of that root's
/// eigenvector, which keeps nearly repeated roots accurate where `acos`
/// alone loses half the digits.
pub fn eig_sym(e: [f64; 6]) -> EigenTriple {
    let [a, b, c, d, f, g] = e;
    let off = b * b + c * c + f * f;
    if off == 0.0 {
        return EigenTriple::sorted([a, d, g]);
    }
    let q = (a + d + g) / 3.0;
    let (aq, dq, gq) = (a - q, d - q, g - q);
    let p = ((aq * aq + dq * dq + gq * gq + 2.0 * off) / 6.0).sqrt();
    // det((A - qI)/p) / 2
    let det_shifted = aq * (dq * gq - f * f) - b * (b * gq - f * c) + c * (b * f - dq * c);
    let r = (det_shifted / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let mut iso = if r >= 0.0 {
        q + 2.0 * p * phi.cos()
    } else {
        q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
    };

    // characteristic polynomial λ³ − c2 λ² + c1 λ − c0
    let c2 = a + d + g;
    let c1 = a * d + a * g + d * g - off;
    let c0 = a * (d * g - f * f) - b * (b * g - f * c) + c * (b * f - d * c);
    let norm = (a * a + d * d + g * g + 2.0 * off).sqrt();
    let poly = ((iso - c2) * iso + c1) * iso - c0;
    if poly.abs() > 1e-12 * norm * norm * norm {
        let slope = (3.0 * iso - 2.0 * c2) * iso + c1;
        if slope != 0.0 {
            iso -= poly / slope;
        }
    }

    let m = [[a, b, c], [b, d, f], [c, f, g]];
    let v = null_vector(&m, iso);
    let (e1, e2) = complement(v);
    let quad = |x: [f64; 3], y: [f64; 3]| -> f64 {
        (0..3)
            .map(|i| (0..3).map(|j| x[i] * m[i][j] * y[j]).sum::<f64>())
            .sum()
    };
    let (b11, b12, b22) = (quad(e1, e1), quad(e1, e2), quad(e2, e2));
    let mean = 0.5 * (b11 + b22);
    let rad = (0.5 * (b11 - b22)).hypot(b12);
    EigenTriple::sorted([iso, mean - rad, mean + rad])
}

fn cross(x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ]
}

fn unit(x: [f64; 3]) -> [f64; 3] {
    let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    x.map(|v| v / n)
}

/// Unit kernel vector of `m − λI` for a simple root `λ`.
fn null_vector(m: &[[f64; 3]; 3], lambda: f64) -> [f64; 3] {
    let row = |i: usize| {
        let mut r = m[i];
        r[i] -= lambda;
        r
    };
    let (r0, r1, r2) = (row(0), row(1), row(2));
    let cands = [cross(r0, r1), cross(r0, r2), cross(r1, r2)];
    let best = cands
        .into_iter()
        .max_by(|x, y| {
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            nx.total_cmp(&ny)
        })
        .expect("three candidates");
    unit(best)
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `v`.
fn complement(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let axis = if v[0].abs() <= v[1].abs() && v[0].abs() <= v[2].abs() {
        [1.0, 0.0, 0.0]
    } else if v[1].abs() <= v[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = unit(cross(v, axis));
    (e1, cross(v, e1))
}

/// [`eig_sym`] on a full matrix (only the upper triangle is read).
pub fn eig_symtensor(m: [[f64; 3]; 3]) -> EigenTriple {
    eig_sym([m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2]])
}
