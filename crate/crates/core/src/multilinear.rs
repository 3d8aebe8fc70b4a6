//! Polarization of homogeneous polynomial maps into symmetric multilinear
//! forms, plus homogeneity checks.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::{norm, Scalar};

/// Symmetric trilinear form of a homogeneous cubic map `g`:
///
/// `T(a,b,c) = [g(a+b+c) − g(a+b) − g(a+c) − g(b+c) + g(a) + g(b) + g(c)] / 6`.
///
/// Fails if `g` does not scale as a cubic along `a + b + c`.
pub fn cubic_trilinear<T: Scalar, G>(
    g: G,
    a: &DVector<T>,
    b: &DVector<T>,
    c: &DVector<T>,
) -> Result<DVector<T>>
where
    G: Fn(&DVector<T>) -> DVector<T>,
{
    let probe = a + b + c;
    let err = homogeneity_error(&g, &probe, 3);
    if err > 1e-8 {
        return Err(Error::DegreeCheck { degree: 3, error: err });
    }
    Ok(polarize3(&g, a, b, c))
}

/// Unchecked trilinear polarization.
pub fn polarize3<T: Scalar, G>(g: &G, a: &DVector<T>, b: &DVector<T>, c: &DVector<T>) -> DVector<T>
where
    G: Fn(&DVector<T>) -> DVector<T>,
{
    let ab = a + b;
    let abc = &ab + c;
    let ac = a + c;
    let bc = b + c;
    let mut out = g(&abc);
    out -= g(&ab);
    out -= g(&ac);
    out -= g(&bc);
    out += g(a);
    out += g(b);
    out += g(c);
    out * T::of(1.0 / 6.0)
}

/// Symmetric bilinear form of a homogeneous quadratic map:
/// `B(a,b) = [q(a+b) − q(a) − q(b)] / 2`.
pub fn polarize2<T: Scalar, Q>(q: &Q, a: &DVector<T>, b: &DVector<T>) -> DVector<T>
where
    Q: Fn(&DVector<T>) -> DVector<T>,
{
    let ab = a + b;
    (q(&ab) - q(a) - q(b)) * T::of(0.5)
}

/// Worst relative deviation of `g(t x)` from `tᵈ g(x)` over a few scale
/// factors (including a negative one).
pub fn homogeneity_error<T: Scalar, G>(g: &G, x: &DVector<T>, degree: u32) -> f64
where
    G: Fn(&DVector<T>) -> DVector<T>,
{
    let base = g(x);
    let scale = norm(&base);
    let mut worst: f64 = 0.0;
    for t in [2.0, -0.7, 1.3] {
        let xt = x * T::of(t);
        let expect = &base * T::of(t.powi(degree as i32));
        let got = g(&xt);
        let diff = norm(&(got - &expect));
        let denom = norm(&expect).max(scale * t.abs().powi(degree as i32));
        let rel = if denom == 0.0 { diff } else { diff / denom };
        worst = worst.max(rel);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cube(x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| v * v * v)
    }

    #[test]
    fn scalar_cube_polarizes_to_one() {
        let one = DVector::from_element(1, 1.0);
        let t = cubic_trilinear(cube, &one, &one, &one).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_recovers_map() {
        let x = DVector::from_vec(vec![0.3, -1.2, 2.0]);
        let t = cubic_trilinear(cube, &x, &x, &x).unwrap();
        assert!((t - cube(&x)).norm() < 1e-13);
    }

    #[test]
    fn non_cubic_map_rejected() {
        let sq = |x: &DVector<f64>| x.map(|v| v * v);
        let x = DVector::from_vec(vec![0.3, -1.2]);
        assert!(matches!(
            cubic_trilinear(sq, &x, &x, &x),
            Err(Error::DegreeCheck { .. })
        ));
    }

    #[test]
    fn complex_polarization_of_real_cubic() {
        // g(z) = z0² z1 extended to complex arguments.
        let g = |z: &DVector<Complex64>| DVector::from_vec(vec![z[0] * z[0] * z[1]]);
        let a = DVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(0.5, -1.0)]);
        let b = DVector::from_vec(vec![Complex64::new(-0.3, 0.1), Complex64::new(2.0, 0.0)]);
        let c = DVector::from_vec(vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 1.0)]);
        let t = polarize3(&g, &a, &b, &c);
        // Symmetrized coefficient of z0 z0 z1 is 1/3 for each placement.
        let expect = (a[0] * b[0] * c[1] + a[0] * b[1] * c[0] + a[1] * b[0] * c[0]) / 3.0;
        assert!((t[0] - expect).norm() < 1e-13);
    }
}
