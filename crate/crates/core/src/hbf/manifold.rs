use crate::linalg::CMatrix;

/// Tangent projection on the complex circle manifold: `G - Re{G o conj(X)} o X`.
pub fn riemannian_grad(euclid: &CMatrix, point: &CMatrix) -> CMatrix {
    euclid.zip_map(point, |g, x| g - x * (g * x.conj()).re)
}

/// Entrywise normalization of `point + step`; an entry that lands on zero keeps its old value.
pub fn retract(point: &CMatrix, step: &CMatrix) -> CMatrix {
    point.zip_map(step, |x, s| {
        let z = x + s;
        let n = z.norm();
        if n > 0.0 && n.is_finite() {
            z / n
        } else {
            x
        }
    })
}

/// Vector transport by projection onto the tangent space at `point`.
pub fn transport(point: &CMatrix, v: &CMatrix) -> CMatrix {
    riemannian_grad(v, point)
}

pub(crate) fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    crate::linalg::real_inner(a, b)
}
