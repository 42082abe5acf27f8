//! ADAM with per-iteration exponential learning-rate decay and coupled L2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ParamSet, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr0: f64,
    /// Multiplicative learning-rate decay applied once per iteration.
    pub decay: f64,
    pub l2: f64,
    /// First-moment coefficient (beta1).
    pub p1: f64,
    /// Second-moment coefficient (beta2).
    pub p2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    /// The full-scale training settings: lr 4.22e-5 decayed by 0.9999987 per
    /// iteration, L2 1.84e-7, moment coefficients 0.85 / 0.99.
    fn default() -> Self {
        AdamConfig {
            lr0: 4.22e-5,
            decay: 0.9999987,
            l2: 1.84e-7,
            p1: 0.85,
            p2: 0.99,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    /// Learning rate used by the step taken at iteration `t` (0-based).
    ///
    /// Computed as `lr0 * exp(t * ln(1 - c))` with `c = 1 - decay` taken from
    /// the decimal form of `decay`. Decays such as 0.9999987 are not exact in
    /// binary, and raising the rounded value to a large power multiplies its
    /// representation error by `t`.
    pub fn lr(&self, t: u64) -> f64 {
        if t == 0 {
            return self.lr0;
        }
        self.lr0 * (t as f64 * (-decay_complement(self.decay)).ln_1p()).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| {
            Err(Error::Config {
                field: field.to_string(),
                msg: msg.to_string(),
            })
        };
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return bad("lr0", "must be a finite non-negative number");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay", "must lie in (0, 1]");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2", "must be a finite non-negative number");
        }
        if !(0.0..1.0).contains(&self.p1) {
            return bad("p1", "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.p2) {
            return bad("p2", "must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "must be positive");
        }
        Ok(())
    }
}

/// `1 - decay`, computed from the shortest decimal that round-trips to
/// `decay` so the complement carries the digits the user wrote.
fn decay_complement(decay: f64) -> f64 {
    let text = format!("{decay}");
    if let Some(frac) = text.strip_prefix("0.") {
        if frac.len() <= 18 && frac.bytes().all(|b| b.is_ascii_digit()) {
            let digits: u64 = frac.parse().expect("ascii digits");
            let complement = 10u64.pow(frac.len() as u32) - digits;
            return format!("{complement}e-{}", frac.len()).parse().expect("valid float");
        }
    }
    1.0 - decay
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Real>,
    pub second_moment: Vec<Real>,
    pub iteration: u64,
}

impl AdamState {
    pub fn new(parameter_count: usize) -> Self {
        AdamState {
            first_moment: vec![0.0; parameter_count],
            second_moment: vec![0.0; parameter_count],
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }
}

struct StepCoefs {
    lr: Real,
    l2: Real,
    p1: Real,
    p2: Real,
    correction1: Real,
    correction2: Real,
    epsilon: Real,
}

impl StepCoefs {
    fn new(cfg: &AdamConfig, t: u64) -> Self {
        let n = (t + 1) as i32;
        StepCoefs {
            lr: cfg.lr(t) as Real,
            l2: cfg.l2 as Real,
            p1: cfg.p1 as Real,
            p2: cfg.p2 as Real,
            correction1: (1.0 - cfg.p1.powi(n)) as Real,
            correction2: (1.0 - cfg.p2.powi(n)) as Real,
            epsilon: cfg.epsilon as Real,
        }
    }

    fn apply(&self, params: &mut [Real], grads: &[Real], m: &mut [Real], v: &mut [Real]) {
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
            let g = g + self.l2 * *p;
            *m = self.p1 * *m + (1.0 - self.p1) * g;
            *v = self.p2 * *v + (1.0 - self.p2) * g * g;
            let m_hat = *m / self.correction1;
            let v_hat = *v / self.correction2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// One bias-corrected ADAM step over a flat parameter vector.
pub fn adam_step(params: &mut [Real], grads: &[Real], state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} params / {} grads", params.len(), grads.len()),
            format!("{} moments", state.len()),
        ));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training(format!("non-finite gradient at flat index {i}")));
    }
    let coefs = StepCoefs::new(cfg, state.iteration);
    coefs.apply(params, grads, &mut state.first_moment, &mut state.second_moment);
    state.iteration += 1;
    Ok(())
}

/// ADAM step over a structured parameter set. Moments are laid out in the
/// set's visit order; a non-finite gradient is reported by block name.
pub fn adam_step_params<P: ParamSet>(
    params: &mut P,
    grads: &P,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    let mut flat = Vec::with_capacity(state.len());
    let mut bad_block = None;
    grads.visit(&mut |name, g| {
        if bad_block.is_none() && g.iter().any(|v| !v.is_finite()) {
            bad_block = Some(name.to_string());
        }
        flat.extend_from_slice(g);
    });
    if let Some(name) = bad_block {
        return Err(Error::Training(format!("non-finite gradient in parameter block `{name}`")));
    }
    if flat.len() != state.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} gradients", flat.len()),
            format!("{} moments", state.len()),
        ));
    }
    let coefs = StepCoefs::new(cfg, state.iteration);
    let mut offset = 0;
    let (m, v) = (&mut state.first_moment, &mut state.second_moment);
    params.visit_mut(&mut |_, p| {
        let end = offset + p.len();
        coefs.apply(p, &flat[offset..end], &mut m[offset..end], &mut v[offset..end]);
        offset = end;
    });
    state.iteration += 1;
    Ok(())
}
