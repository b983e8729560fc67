//! Dense linear algebra, activations and seeded initialization.

mod activation;
mod init;
mod matrix;
mod rng;
mod scalar;

pub use activation::{sigmoid, sigmoid_scalar, softmax, softmax_in_place, tanh_v};
pub use init::{gaussian_init, gaussian_init_with, orthogonal_init, INIT_VARIANCE};
pub use matrix::{add, axpy, dot, hadamard, Matrix, ShapeError, Vector};
pub use rng::SeededRng;
pub use scalar::Scalar;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matvec_is_linear(
            data in proptest::collection::vec(-10.0f64..10.0, 12),
            x in proptest::collection::vec(-10.0f64..10.0, 4),
            y in proptest::collection::vec(-10.0f64..10.0, 4),
        ) {
            let m = Matrix::from_vec(3, 4, data).unwrap();
            let lhs = m.matvec(&add(&x, &y)).unwrap();
            let a = m.matvec(&x).unwrap();
            let b = m.matvec(&y).unwrap();
            for i in 0..3 {
                let rhs = a[i] + b[i];
                let scale = lhs[i].abs().max(rhs.abs()).max(1.0);
                prop_assert!((lhs[i] - rhs).abs() / scale < 1e-6);
            }
        }

        #[test]
        fn operations_are_pure(v in proptest::collection::vec(-5.0f32..5.0, 1..16)) {
            let bits = |x: &[f32]| x.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&softmax(&v)), bits(&softmax(&v)));
            prop_assert_eq!(bits(&sigmoid(&v)), bits(&sigmoid(&v)));
            prop_assert_eq!(bits(&tanh_v(&v)), bits(&tanh_v(&v)));
        }
    }
}
