//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::{Param, Parameterized};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Use `η·m̂/√(v̂ + ε)` instead of `η·m̂/(√v̂ + ε)`.
    pub eps_inside_sqrt: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            eps_inside_sqrt: false,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.learning_rate > 0.0) || !in_unit(self.beta1) || !in_unit(self.beta2) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "adam requires lr > 0, betas in (0,1), epsilon > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

/// First and second moment estimates for a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<S> {
    pub m: Vec<S>,
    pub v: Vec<S>,
    pub t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![S::zero(); len],
            v: vec![S::zero(); len],
            t: 0,
        }
    }
}

fn check_finite<S: Scalar>(grads: &[S], what: &str) -> Result<()> {
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient {what}[{i}] is {}", grads[i])));
    }
    Ok(())
}

/// Bias-correction factors `(1/(1−β1^t), 1/(1−β2^t))` for step `t`.
fn corrections(config: &AdamConfig, t: u64) -> (f64, f64) {
    let t = t as i32;
    (1.0 / (1.0 - config.beta1.powi(t)), 1.0 / (1.0 - config.beta2.powi(t)))
}

fn update<S: Scalar>(config: &AdamConfig, c1: f64, c2: f64, params: &mut [S], grads: &[S], m: &mut [S], v: &mut [S]) {
    let (b1, b2) = (S::of(config.beta1), S::of(config.beta2));
    let (one_b1, one_b2) = (S::of(1.0 - config.beta1), S::of(1.0 - config.beta2));
    let (c1, c2) = (S::of(c1), S::of(c2));
    let (lr, eps) = (S::of(config.learning_rate), S::of(config.epsilon));
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + one_b1 * g;
        *v = b2 * *v + one_b2 * g * g;
        let m_hat = *m * c1;
        let v_hat = *v * c2;
        let denom = if config.eps_inside_sqrt {
            (v_hat + eps).sqrt()
        } else {
            v_hat.sqrt() + eps
        };
        *p -= lr * m_hat / denom;
    }
}

/// One Adam step on a flat parameter slice. A non-finite gradient rejects the
/// step before anything is modified.
pub fn adam_step<S: Scalar>(config: &AdamConfig, params: &mut [S], grads: &[S], state: &mut AdamState<S>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != state.v.len() {
        return Err(Error::shape(
            "adam",
            format!(
                "params {}, grads {}, moments {}/{}",
                params.len(),
                grads.len(),
                state.m.len(),
                state.v.len()
            ),
        ));
    }
    check_finite(grads, "flat")?;
    state.t += 1;
    let (c1, c2) = corrections(config, state.t);
    update(config, c1, c2, params, grads, &mut state.m, &mut state.v);
    Ok(())
}

/// Adam over every parameter of a model, in visiting order.
#[derive(Clone, Debug)]
pub struct Adam<S> {
    config: AdamConfig,
    state: AdamState<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new<M: Parameterized<S> + ?Sized>(config: AdamConfig, model: &M) -> Result<Self> {
        config.validate()?;
        Ok(Adam {
            config,
            state: AdamState::new(model.num_params()),
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn state(&self) -> &AdamState<S> {
        &self.state
    }

    pub fn step<M: Parameterized<S> + ?Sized>(&mut self, model: &mut M) -> Result<()> {
        let mut failure = None;
        model.visit_params("", &mut |name, p: &Param<S>| {
            if failure.is_none() {
                failure = check_finite(&p.grad, name).err();
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if model.num_params() != self.state.m.len() {
            return Err(Error::shape(
                "adam",
                format!("optimizer built for {} parameters, model has {}", self.state.m.len(), model.num_params()),
            ));
        }
        self.state.t += 1;
        let (c1, c2) = corrections(&self.config, self.state.t);
        let config = self.config;
        let mut offset = 0;
        let AdamState { m, v, .. } = &mut self.state;
        model.visit_params_mut("", &mut |_, p| {
            let n = p.len();
            update(&config, c1, c2, &mut p.value, &p.grad, &mut m[offset..offset + n], &mut v[offset..offset + n]);
            offset += n;
        });
        Ok(())
    }
}
