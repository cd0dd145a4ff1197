//! AdamW with decoupled weight decay.

use ndarray::Array2;

/// Moment constants. β1/β2/ε are the standard defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamParams {
    pub fn with_weight_decay(weight_decay: f64) -> Self {
        AdamParams {
            weight_decay,
            ..AdamParams::default()
        }
    }
}

/// First/second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub params: AdamParams,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(shapes: &[(usize, usize)], params: AdamParams) -> Self {
        AdamState {
            params,
            m: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            v: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            t: 0,
        }
    }

    pub fn for_tensors(tensors: &[&Array2<f64>], params: AdamParams) -> Self {
        let shapes: Vec<(usize, usize)> = tensors.iter().map(|t| t.dim()).collect();
        AdamState::new(&shapes, params)
    }
}

/// One decoupled-weight-decay update: `w ← w − lr·(adam_update + wd·w)`.
pub fn adamw_step(state: &mut AdamState, weights: &mut [&mut Array2<f64>], grads: &[&Array2<f64>], lr: f64) {
    assert_eq!(weights.len(), grads.len());
    assert_eq!(weights.len(), state.m.len());
    state.t += 1;
    let AdamParams {
        beta1,
        beta2,
        eps,
        weight_decay,
    } = state.params;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    for ((w, g), (m, v)) in weights
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        debug_assert_eq!(w.dim(), g.dim());
        ndarray::Zip::from(&mut **w)
            .and(*g)
            .and(m)
            .and(v)
            .for_each(|w, &g, m, v| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w -= lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * *w);
            });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_zero_decay_leave_weights_unchanged() {
        let mut w = Array2::from_elem((3, 2), 1.5);
        let g = Array2::zeros((3, 2));
        let mut state = AdamState::for_tensors(&[&w], AdamParams::default());
        let before = w.clone();
        adamw_step(&mut state, &mut [&mut w], &[&g], 0.01);
        assert_eq!(w, before);
    }

    #[test]
    fn zero_gradients_with_decay_shrink_weights_geometrically() {
        let mut w = Array2::from_elem((2, 2), 2.0);
        let g = Array2::zeros((2, 2));
        let wd = 0.0005;
        let lr = 0.1;
        let mut state = AdamState::for_tensors(&[&w], AdamParams::with_weight_decay(wd));
        for step in 1..=5 {
            adamw_step(&mut state, &mut [&mut w], &[&g], lr);
            let expected = 2.0 * (1.0 - lr * wd).powi(step);
            assert!((w[[0, 0]] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn converges_on_convex_quadratic() {
        // f(w) = Σ (w - c)^2, gradient 2(w - c); the rate halves every 20
        // steps to damp the characteristic Adam oscillation
        let c = Array2::from_shape_vec((2, 2), vec![0.5, -0.25, 0.75, 0.1]).unwrap();
        let mut w = Array2::zeros((2, 2));
        let mut state = AdamState::for_tensors(&[&w], AdamParams::default());
        for step in 0..100 {
            let g = (&w - &c) * 2.0;
            let lr = 0.08 * 0.5f64.powi(step / 20);
            adamw_step(&mut state, &mut [&mut w], &[&g], lr);
        }
        let dist = (&w - &c).mapv(f64::abs).iter().cloned().fold(0.0, f64::max);
        assert!(dist < 1e-3, "distance to optimum {dist}");
    }
}
