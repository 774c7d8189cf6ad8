use super::{TcnError, TcnWeights};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates, shaped like the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: TcnWeights,
    pub v: TcnWeights,
    pub step: u64,
}

impl AdamState {
    pub fn new(weights: &TcnWeights) -> Self {
        Self {
            m: weights.zeros_like(),
            v: weights.zeros_like(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(
    weights: &mut TcnWeights,
    grads: &TcnWeights,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), TcnError> {
    if !weights.same_shape(grads) || !weights.same_shape(&state.m) || !weights.same_shape(&state.v)
    {
        return Err(TcnError::ShapeMismatch {
            expected: (weights.num_params(), 1),
            found: (grads.num_params(), 1),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - crate::math::powi(ADAM_BETA1, t);
    let c2 = 1.0 - crate::math::powi(ADAM_BETA2, t);
    let g = grads.params();
    let ws = weights.params_mut();
    let ms = state.m.params_mut();
    let vs = state.v.params_mut();
    for (((w, g), m), v) in ws.into_iter().zip(g).zip(ms).zip(vs) {
        for i in 0..w.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            w[i] -= lr * mh / (crate::math::sqrt(vh) + ADAM_EPS);
        }
    }
    Ok(())
}
