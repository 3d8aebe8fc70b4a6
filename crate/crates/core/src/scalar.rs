//! Field abstraction shared by the real beam evaluators and their complex
//! extensions (modal coordinates are complex).

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

/// `f64` or `Complex64`. All structural matrices stay real; vectors may be
/// complex when the nonlinear maps are evaluated on modal directions.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    fn compose(re: f64, im: f64) -> Self;

    fn of(re: f64) -> Self {
        Self::compose(re, 0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn compose(re: f64, _im: f64) -> Self {
        re
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn compose(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
}

/// Splits a vector into real and imaginary parts.
pub fn split<T: Scalar>(v: &DVector<T>) -> (DVector<f64>, DVector<f64>) {
    (v.map(|c| c.real()), v.map(|c| c.imaginary()))
}

pub fn join<T: Scalar>(re: &DVector<f64>, im: &DVector<f64>) -> DVector<T> {
    DVector::from_fn(re.len(), |i, _| T::compose(re[i], im[i]))
}

/// Applies a real linear map to a (possibly complex) vector.
pub fn apply_real<T: Scalar>(
    v: &DVector<T>,
    op: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> DVector<T> {
    let (re, im) = split(v);
    let re = op(&re);
    if im.iter().all(|x| *x == 0.0) {
        return re.map(T::of);
    }
    join(&re, &op(&im))
}

/// Real matrix times scalar-generic vector.
pub fn real_mul<T: Scalar>(m: &DMatrix<f64>, v: &DVector<T>) -> DVector<T> {
    apply_real(v, |x| m * x)
}

pub fn norm<T: Scalar>(v: &DVector<T>) -> f64 {
    v.iter().map(|c| c.modulus_squared()).sum::<f64>().sqrt()
}
