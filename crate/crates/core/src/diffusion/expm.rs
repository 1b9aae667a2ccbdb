use nalgebra::DMatrix;

const TAYLOR_DEGREE: usize = 18;

/// Matrix exponential by scaling and squaring around a Taylor core.
///
/// The input is scaled by `2^-s` until its 1-norm is at most 1/2, where a
/// degree-18 Taylor polynomial is accurate to well below double rounding.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let norm = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);

    // Horner: I + A(I + A/2(I + A/3(...)))
    let identity = DMatrix::<f64>::identity(n, n);
    let mut result = identity.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        result = &identity + (&scaled * &result) / k as f64;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
