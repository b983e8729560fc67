use crate::error::{Error, Result};
use crate::models::Params;
use crate::numerics::Scalar;

/// Decayed second moments of gradients (`eg2`) and updates (`ex2`), shaped
/// like the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdadeltaState<S> {
    pub eg2: Params<S>,
    pub ex2: Params<S>,
}

impl<S: Scalar> AdadeltaState<S> {
    pub fn new(params: &Params<S>) -> Self {
        AdadeltaState {
            eg2: params.zeros_like(),
            ex2: params.zeros_like(),
        }
    }
}

/// Zeiler's rule for one scalar; returns the applied update.
#[inline]
pub fn adadelta_step<S: Scalar>(x: &mut S, g: S, eg2: &mut S, ex2: &mut S, rho: S, eps: S) -> S {
    let one = S::one();
    *eg2 = rho * *eg2 + (one - rho) * g * g;
    let delta = -((*ex2 + eps).sqrt() / (*eg2 + eps).sqrt()) * g;
    *ex2 = rho * *ex2 + (one - rho) * delta * delta;
    *x += delta;
    delta
}

pub fn adadelta_update<S: Scalar>(
    params: &mut Params<S>,
    grads: &Params<S>,
    state: &mut AdadeltaState<S>,
    rho: f64,
    eps: f64,
) -> Result<()> {
    let shapes = |p: &Params<S>| p.tensors().into_iter().map(|t| t.shape).collect::<Vec<_>>();
    let expected = shapes(params);
    for (what, other) in [
        ("gradient", grads),
        ("eg2", &state.eg2),
        ("ex2", &state.ex2),
    ] {
        if shapes(other) != expected {
            return Err(Error::Structure(format!(
                "adadelta: {what} shapes do not match the parameters"
            )));
        }
    }
    let (rho, eps) = (S::of(rho), S::of(eps));
    let grad_tensors = grads.tensors();
    let targets = params.tensors_mut();
    let eg2 = state.eg2.tensors_mut();
    let ex2 = state.ex2.tensors_mut();
    for (((g, (_, x)), (_, e)), (_, d)) in grad_tensors.iter().zip(targets).zip(eg2).zip(ex2) {
        for i in 0..x.len() {
            adadelta_step(&mut x[i], g.data[i], &mut e[i], &mut d[i], rho, eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_step_unit_gradient() {
        let (mut x, mut e, mut d) = (0.0f64, 0.0, 0.0);
        let delta = adadelta_step(&mut x, 1.0, &mut e, &mut d, 0.95, 1e-6);
        // sqrt(1e-6) / sqrt(0.05 + 1e-6)
        let expected = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
        assert!((delta - expected).abs() < 1e-15);
        assert!((delta + 4.4721e-3).abs() < 1e-7);
        assert_eq!(x, delta);
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let (mut x, mut e, mut d) = (0.37f32, 0.2, 0.1);
        let delta = adadelta_step(&mut x, 0.0, &mut e, &mut d, 0.95, 1e-6);
        assert_eq!(delta, 0.0);
        assert_eq!(x, 0.37);
        assert!(e < 0.2 && d < 0.1);
    }

    proptest! {
        #[test]
        fn update_opposes_gradient(g in -100.0f64..100.0, e in 0.0f64..10.0, d in 0.0f64..10.0) {
            prop_assume!(g != 0.0);
            let (mut x, mut e, mut d) = (0.0, e, d);
            let delta = adadelta_step(&mut x, g, &mut e, &mut d, 0.95, 1e-6);
            prop_assert_eq!(delta.signum(), -g.signum());
            prop_assert!(e >= 0.0 && d >= 0.0);
        }
    }
}
