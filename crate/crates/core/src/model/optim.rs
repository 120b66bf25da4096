//! Rectified Adam with linear learning-rate warmup.
//!
//! The rectification term tracks how reliable the second-moment estimate is:
//! while the approximated simple moving average length `rho_t` is 4 or less
//! the variance of the adaptive step is intractable, so the update falls back
//! to plain momentum; once `rho_t` exceeds 4 the usual Adam denominator is
//! applied, scaled by the variance-correction factor `r_t`. With the default
//! betas the first four steps take the momentum branch.

/// One parameter tensor's contribution to an optimizer step: its base
/// learning rate (already warmup-scaled by the caller), the flattened values
/// and the matching flattened gradient.
pub struct ParamUpdate<'a> {
    pub lr: f64,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}

/// Rectified Adam. State is positional: every call to [`RAdam::step`] must
/// pass the same tensors in the same order.
#[derive(Debug, Clone)]
pub struct RAdam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    state: Vec<Moments>,
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl RAdam {
    pub fn new() -> RAdam {
        RAdam::with_hyperparams(0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparams(beta1: f64, beta2: f64, eps: f64) -> RAdam {
        assert!((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2));
        RAdam {
            beta1,
            beta2,
            eps,
            t: 0,
            state: Vec::new(),
        }
    }

    /// Steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update to every tensor. The step counter is shared across
    /// tensors and increments once per call.
    pub fn step(&mut self, params: &mut [ParamUpdate<'_>]) {
        if self.state.is_empty() {
            self.state = params
                .iter()
                .map(|p| Moments {
                    m: vec![0.0; p.value.len()],
                    v: vec![0.0; p.value.len()],
                })
                .collect();
        }
        assert_eq!(
            self.state.len(),
            params.len(),
            "tensor count changed between steps"
        );
        self.t += 1;
        let t = self.t as f64;
        let b1t = self.beta1.powi(self.t as i32);
        let b2t = self.beta2.powi(self.t as i32);
        let rho_inf = 2.0 / (1.0 - self.beta2) - 1.0;
        let rho = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
        let rect = if rho > 4.0 {
            let num = (rho - 4.0) * (rho - 2.0) * rho_inf;
            let den = (rho_inf - 4.0) * (rho_inf - 2.0) * rho;
            Some((num / den).sqrt())
        } else {
            None
        };
        for (param, state) in params.iter_mut().zip(&mut self.state) {
            assert_eq!(
                param.value.len(),
                state.m.len(),
                "tensor size changed between steps"
            );
            assert_eq!(param.value.len(), param.grad.len());
            for i in 0..param.value.len() {
                let g = param.grad[i];
                state.m[i] = self.beta1 * state.m[i] + (1.0 - self.beta1) * g;
                state.v[i] = self.beta2 * state.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = state.m[i] / (1.0 - b1t);
                match rect {
                    Some(r) => {
                        let v_hat = (state.v[i] / (1.0 - b2t)).sqrt();
                        param.value[i] -= param.lr * r * m_hat / (v_hat + self.eps);
                    }
                    None => param.value[i] -= param.lr * m_hat,
                }
            }
        }
    }
}

impl Default for RAdam {
    fn default() -> RAdam {
        RAdam::new()
    }
}

/// Warmup factor for a 1-based step: ramps linearly from `1/warmup` to `1.0`
/// over the first `warmup` steps, then stays constant. Zero warmup disables
/// the ramp.
pub fn warmup_scale(step: u64, warmup: u64) -> f64 {
    if warmup == 0 {
        1.0
    } else {
        (step as f64 / warmup as f64).min(1.0)
    }
}
