//! Interaction kernels.

/// A pairwise interaction kernel `K(x, y)`.
///
/// Implementations must be finite for distinct points inside the unit
/// cube. Coincident points (including a point with itself) evaluate to
/// zero, so direct summation loops need no self-interaction special case.
pub trait Kernel {
    fn evaluate(&self, x: &[f64; 3], y: &[f64; 3]) -> f64;

    fn name(&self) -> &'static str;

    /// Degree `m` such that `K(a*x, a*y) = a^m * K(x, y)` for `a > 0`,
    /// when the kernel scales homogeneously. Enables reuse of transfer
    /// matrices across levels.
    fn homogeneity(&self) -> Option<f64> {
        None
    }
}

/// The Newtonian kernel `1 / |x - y|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Laplace;

impl Kernel for Laplace {
    #[inline]
    fn evaluate(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let dx = x[0] - y[0];
        let dy = x[1] - y[1];
        let dz = x[2] - y[2];
        let r2 = dx * dx + dy * dy + dz * dz;
        if r2 == 0.0 {
            0.0
        } else {
            1.0 / r2.sqrt()
        }
    }

    fn name(&self) -> &'static str {
        "laplace"
    }

    fn homogeneity(&self) -> Option<f64> {
        Some(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_distance() {
        let k = Laplace;
        assert_eq!(k.evaluate(&[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0]), 2.0);
        assert_eq!(k.evaluate(&[0.25, 0.25, 0.25], &[0.25, 0.25, 0.25]), 0.0);
        let v = k.evaluate(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        assert!((v - 1.0 / 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scales_inverse_linearly() {
        let k = Laplace;
        let x = [0.1, 0.2, 0.3];
        let y = [0.7, 0.5, 0.9];
        let xs = [0.05, 0.1, 0.15];
        let ys = [0.35, 0.25, 0.45];
        let m = k.homogeneity().unwrap();
        assert!((k.evaluate(&xs, &ys) - 0.5f64.powf(m) * k.evaluate(&x, &y)).abs() < 1e-12);
    }
}
