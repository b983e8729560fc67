use super::{Scalar, Vector};

/// Logistic sigmoid, evaluated on the branch that never overflows.
#[inline]
pub fn sigmoid_scalar<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

pub fn sigmoid<S: Scalar>(v: &[S]) -> Vector<S> {
    Vector(v.iter().map(|&x| sigmoid_scalar(x)).collect())
}

pub fn tanh_v<S: Scalar>(v: &[S]) -> Vector<S> {
    Vector(v.iter().map(|&x| x.tanh()).collect())
}

/// Softmax with max subtraction. Empty input yields an empty vector.
pub fn softmax<S: Scalar>(v: &[S]) -> Vector<S> {
    let mut out = v.to_vec();
    softmax_in_place(&mut out);
    Vector(out)
}

pub fn softmax_in_place<S: Scalar>(v: &mut [S]) {
    let max = v.iter().copied().fold(S::neg_infinity(), S::max);
    let mut total = S::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_cases() {
        assert_eq!(sigmoid(&[0.0f64])[0], 0.5);
        assert!((sigmoid(&[1000.0f64])[0] - 1.0).abs() < 1e-12);
        // 1 / (1 + e)
        let expected = 1.0 / (1.0 + std::f64::consts::E);
        assert!((sigmoid(&[-1.0f64])[0] - expected).abs() < 1e-15);
        assert!((expected - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!(sigmoid(&[-1000.0f64])[0].is_finite());
    }

    #[test]
    fn tanh_cases() {
        assert_eq!(tanh_v(&[0.0f64])[0], 0.0);
        assert!((tanh_v(&[1000.0f64])[0] - 1.0).abs() < 1e-12);
        // (e - 1) / (e + 1) at x = 0.5
        let e = 1.0f64.exp();
        assert!((tanh_v(&[0.5f64])[0] - (e - 1.0) / (e + 1.0)).abs() < 1e-15);
        assert!((tanh_v(&[0.5f64])[0] - 0.462_117_157_260_009_8).abs() < 1e-15);
    }

    #[test]
    fn softmax_cases() {
        let u = softmax(&[2.5f64, 2.5, 2.5]);
        for p in u.iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let d = softmax(&[1000.0f64, 0.0]);
        assert!((d[0] - 1.0).abs() < 1e-12);
        assert!(d[1].abs() < 1e-12);
        let s = softmax(&[1.0f64, 2.0, 3.0]);
        let z: f64 = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).sum();
        for (i, x) in [1.0f64, 2.0, 3.0].iter().enumerate() {
            assert!((s[i] - x.exp() / z).abs() < 1e-15);
        }
        assert!((s[0] - 0.09003).abs() < 1e-5);
        assert!((s[1] - 0.24473).abs() < 1e-5);
        assert!((s[2] - 0.66524).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(v in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let s = softmax(&v);
            let total: f64 = s.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            prop_assert!(s.iter().all(|&p| p > 0.0));
        }

        #[test]
        fn softmax_sums_to_one_f32(v in proptest::collection::vec(-50.0f32..50.0, 1..40)) {
            let total: f32 = softmax(&v).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
        }

        #[test]
        fn sigmoid_is_antisymmetric(x in -40.0f64..40.0) {
            let s = sigmoid_scalar(x) + sigmoid_scalar(-x);
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
