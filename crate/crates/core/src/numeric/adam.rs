use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for an ordered list of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first: Vec<Tensor2>,
    second: Vec<Tensor2>,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor2>) -> Self {
        let shapes: Vec<_> = params.into_iter().map(Tensor2::shape).collect();
        AdamState {
            config,
            step: 0,
            first: shapes.iter().map(|&(r, c)| Tensor2::zeros(r, c)).collect(),
            second: shapes.iter().map(|&(r, c)| Tensor2::zeros(r, c)).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, k: usize) -> &Tensor2 {
        &self.first[k]
    }

    pub fn second_moment(&self, k: usize) -> &Tensor2 {
        &self.second[k]
    }

    /// One bias-corrected Adam update. `params` pairs each tensor with a name
    /// used in error messages; order must match construction.
    pub fn step(&mut self, params: &mut [(&str, &mut Tensor2)], grads: &[Tensor2], lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate {lr} must be positive")));
        }
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "adam expects {} tensors, got {} params / {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((name, p), (g, m)) in params.iter().zip(grads.iter().zip(&self.first)) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::Shape {
                    op: "adam_step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
            g.ensure_finite(&format!("gradient of {name}"))?;
        }

        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (k, (name, p)) in params.iter_mut().enumerate() {
            let g = grads[k].data();
            let m = self.first[k].data_mut();
            let v = self.second[k].data_mut();
            let w = p.data_mut();
            for j in 0..w.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                w[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
            p.ensure_finite(&format!("parameter {name} after adam step"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut p = Tensor2::filled(2, 2, 0.5);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        st.step(&mut [("p", &mut p)], &[Tensor2::filled(2, 2, 1.0)], 0.1).unwrap();
        let m1 = st.first_moment(0).data()[0];
        st.step(&mut [("p", &mut p)], &[Tensor2::zeros(2, 2)], 0.1).unwrap();
        assert!(st.first_moment(0).data()[0] < m1);
        assert!((st.first_moment(0).data()[0] - 0.9 * m1).abs() < 1e-15);

        let mut q = Tensor2::filled(1, 3, -2.0);
        let mut st = AdamState::new(AdamConfig::default(), [&q]);
        st.step(&mut [("q", &mut q)], &[Tensor2::zeros(1, 3)], 0.1).unwrap();
        assert_eq!(q, Tensor2::filled(1, 3, -2.0));
    }

    #[test]
    fn first_step_moves_by_lr() {
        // t=1: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
        for &g in &[3.0, -0.25, 1e-2] {
            let mut p = Tensor2::zeros(1, 1);
            let mut st = AdamState::new(AdamConfig::default(), [&p]);
            st.step(&mut [("p", &mut p)], &[Tensor2::filled(1, 1, g)], 0.01).unwrap();
            let expected = -0.01 * f64::signum(g);
            assert!((p.data()[0] - expected).abs() < 1e-6, "g={g}: {}", p.data()[0]);
        }
        let mut p = Tensor2::zeros(1, 1);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        st.step(&mut [("p", &mut p)], &[Tensor2::filled(1, 1, 1.0)], 0.01).unwrap();
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut p = Tensor2::zeros(1, 1);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        let bad = Tensor2::from_vec_unchecked(1, 1, vec![f64::NAN]);
        let err = st.step(&mut [("user_emb", &mut p)], &[bad], 0.01).unwrap_err();
        assert!(err.to_string().contains("user_emb"));
        assert_eq!(st.step_count(), 0);
    }

    #[test]
    fn rejects_bad_lr_and_shapes() {
        let mut p = Tensor2::zeros(1, 2);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        assert!(st.step(&mut [("p", &mut p)], &[Tensor2::zeros(1, 2)], 0.0).is_err());
        assert!(st.step(&mut [("p", &mut p)], &[Tensor2::zeros(2, 1)], 0.1).is_err());
    }
}
