//! Residual recurrent layer.
//!
//! Each time step carries a pre-activation state `p`. The residual branch sees
//! the layer input concatenated with `tanh(p_prev)`, applies two
//! fully-connected layers with a tanh between them, and its output is added to
//! the identity-mapped state:
//!
//! ```text
//! h1     = tanh(fc1([a_in, tanh(p_prev)]))
//! p_next = p_prev + fc2(h1)
//! a_out  = tanh(p_next)
//! ```
//!
//! The state at the first step is the trainable bias vector `p0`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::init::glorot_vec;
use crate::numerics::{DenseLayer, ParamSet, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct RrnnCellParams {
    /// `(input_dim + hidden) -> hidden`, input ordered `[a_in, tanh(p_prev)]`.
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
    /// Recurrent input at the first time step.
    pub p0: Vec<Real>,
}

impl RrnnCellParams {
    /// Glorot-uniform weights and zero biases; `p0` is drawn like a weight
    /// vector with fan terms `(1, hidden)`.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let fc1 = DenseLayer::glorot(input_dim + hidden, hidden, rng);
        let fc2 = DenseLayer::glorot(hidden, hidden, rng);
        let p0 = glorot_vec(hidden, 1, hidden, rng);
        RrnnCellParams { fc1, fc2, p0 }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        RrnnCellParams {
            fc1: DenseLayer::zeros(input_dim + hidden, hidden),
            fc2: DenseLayer::zeros(hidden, hidden),
            p0: vec![0.0; hidden],
        }
    }

    pub fn zeros_like(&self) -> Self {
        RrnnCellParams::zeros(self.input_dim(), self.hidden())
    }

    pub fn hidden(&self) -> usize {
        self.p0.len()
    }

    pub fn input_dim(&self) -> usize {
        self.fc1.input_dim() - self.hidden()
    }

    /// `(input + hidden) * hidden + hidden` for fc1, `hidden^2 + hidden` for
    /// fc2, and `hidden` for `p0`.
    pub fn count_for(input_dim: u64, hidden: u64) -> u64 {
        (input_dim + hidden) * hidden + hidden + hidden * hidden + hidden + hidden
    }

    pub(crate) fn visit_prefixed(&self, prefix: &str, f: &mut dyn FnMut(&str, &[Real])) {
        self.fc1.visit(&format!("{prefix}.fc1"), f);
        self.fc2.visit(&format!("{prefix}.fc2"), f);
        f(&format!("{prefix}.p0"), &self.p0);
    }

    pub(crate) fn visit_prefixed_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [Real])) {
        self.fc1.visit_mut(&format!("{prefix}.fc1"), f);
        self.fc2.visit_mut(&format!("{prefix}.fc2"), f);
        f(&format!("{prefix}.p0"), &mut self.p0);
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden();
        if self.fc1.output_dim() != h || self.fc1.input_dim() < h || self.fc2.input_dim() != h || self.fc2.output_dim() != h {
            return Err(Error::shape(
                "RrnnCellParams",
                format!("fc1 {} / fc2 {}", self.fc1.weights.shape(), self.fc2.weights.shape()),
                format!("hidden {h}"),
            ));
        }
        Ok(())
    }
}

impl ParamSet for RrnnCellParams {
    fn visit(&self, f: &mut dyn FnMut(&str, &[Real])) {
        self.visit_prefixed("rrnn", f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [Real])) {
        self.visit_prefixed_mut("rrnn", f);
    }
}

/// Values cached by one cell step for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    /// `[a_in, tanh(p_prev)]`.
    pub fc1_input: Vec<Real>,
    pub p_prev: Vec<Real>,
    pub h1: Vec<Real>,
    pub p_next: Vec<Real>,
    pub a_out: Vec<Real>,
}

impl StepTrace {
    pub fn a_in(&self) -> &[Real] {
        &self.fc1_input[..self.fc1_input.len() - self.p_prev.len()]
    }

    pub fn tanh_p_prev(&self) -> &[Real] {
        &self.fc1_input[self.fc1_input.len() - self.p_prev.len()..]
    }
}

/// Per-step traces in processing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RrnnTrace {
    pub steps: Vec<StepTrace>,
}

impl RrnnTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_state(&self) -> Option<&[Real]> {
        self.steps.last().map(|s| s.p_next.as_slice())
    }
}

pub fn cell_step(params: &RrnnCellParams, a_in: &[Real], p_prev: &[Real]) -> Result<StepTrace> {
    params.check()?;
    if a_in.len() != params.input_dim() || p_prev.len() != params.hidden() {
        return Err(Error::shape(
            "cell_step",
            format!("input {} / hidden {}", params.input_dim(), params.hidden()),
            format!("a_in {} / p_prev {}", a_in.len(), p_prev.len()),
        ));
    }
    Ok(step_unchecked(params, a_in, p_prev))
}

fn step_unchecked(params: &RrnnCellParams, a_in: &[Real], p_prev: &[Real]) -> StepTrace {
    let h = params.hidden();
    let mut fc1_input = Vec::with_capacity(a_in.len() + h);
    fc1_input.extend_from_slice(a_in);
    fc1_input.extend(p_prev.iter().map(|v| v.tanh()));

    let mut h1 = vec![0.0; h];
    params.fc1.forward_into(&fc1_input, &mut h1);
    h1.iter_mut().for_each(|v| *v = v.tanh());

    let mut p_next = vec![0.0; h];
    params.fc2.forward_into(&h1, &mut p_next);
    for (p, prev) in p_next.iter_mut().zip(p_prev) {
        *p += prev;
    }
    let a_out = p_next.iter().map(|v| v.tanh()).collect();
    StepTrace {
        fc1_input,
        p_prev: p_prev.to_vec(),
        h1,
        p_next,
        a_out,
    }
}

/// Runs the cell over `inputs` in the given order starting from `p0`.
/// Returns every step's `a_out`.
pub fn rrnn_forward<V: AsRef<[Real]>>(params: &RrnnCellParams, inputs: &[V]) -> Result<(Vec<Vec<Real>>, RrnnTrace)> {
    params.check()?;
    if inputs.is_empty() {
        return Err(Error::Usage("recurrent layer needs at least one time step".into()));
    }
    let mut trace = RrnnTrace {
        steps: Vec::with_capacity(inputs.len()),
    };
    let mut outputs = Vec::with_capacity(inputs.len());
    for (t, x) in inputs.iter().enumerate() {
        let x = x.as_ref();
        if x.len() != params.input_dim() {
            return Err(Error::shape(
                "rrnn_forward",
                format!("input_dim {}", params.input_dim()),
                format!("step {t} has length {}", x.len()),
            ));
        }
        let p_prev = trace.final_state().unwrap_or(&params.p0);
        let step = step_unchecked(params, x, p_prev);
        outputs.push(step.a_out.clone());
        trace.steps.push(step);
    }
    Ok((outputs, trace))
}

/// Encoder pass: consumes the sequence last-to-first and returns the output
/// of the final processed step. The trace is in processing (reversed) order.
pub fn encoder_forward<V: AsRef<[Real]>>(params: &RrnnCellParams, inputs: &[V]) -> Result<(Vec<Real>, RrnnTrace)> {
    if inputs.is_empty() {
        return Err(Error::Usage("cannot encode an empty sequence".into()));
    }
    let reversed: Vec<&[Real]> = inputs.iter().rev().map(|v| v.as_ref()).collect();
    let (mut outputs, trace) = rrnn_forward(params, &reversed)?;
    Ok((outputs.pop().expect("non-empty"), trace))
}

/// Decoder pass: feeds the same sentence vector at each of `steps` time steps.
pub fn decoder_forward(params: &RrnnCellParams, sv: &[Real], steps: usize) -> Result<(Vec<Vec<Real>>, RrnnTrace)> {
    if steps == 0 {
        return Err(Error::Usage("decoder needs at least one step".into()));
    }
    let inputs = vec![sv; steps];
    rrnn_forward(params, &inputs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrnnGrads {
    /// Parameter gradients; `params.p0` is the gradient w.r.t. the initial state.
    pub params: RrnnCellParams,
    /// Gradient w.r.t. each step's `a_in`, in trace (processing) order.
    pub grad_inputs: Vec<Vec<Real>>,
}

impl RrnnGrads {
    pub fn grad_p0(&self) -> &[Real] {
        &self.params.p0
    }
}

/// Backpropagation through time.
///
/// `grads_out[t]` is the gradient w.r.t. `a_out` at trace step `t`;
/// `grad_p_final`, if given, is an extra gradient on the last `p_next`.
pub fn rrnn_backward<V: AsRef<[Real]>>(
    params: &RrnnCellParams,
    trace: &RrnnTrace,
    grads_out: &[V],
    grad_p_final: Option<&[Real]>,
) -> Result<RrnnGrads> {
    if grads_out.len() != trace.len() {
        return Err(Error::Usage(format!(
            "trace has {} steps but {} output gradients were given",
            trace.len(),
            grads_out.len()
        )));
    }
    let h = params.hidden();
    if grads_out.iter().any(|g| g.as_ref().len() != h) || grad_p_final.is_some_and(|g| g.len() != h) {
        return Err(Error::shape("rrnn_backward", format!("hidden {h}"), "gradient length"));
    }
    let mut acc = params.zeros_like();
    let mut grad_inputs = vec![Vec::new(); trace.len()];
    backward_accumulate(
        params,
        trace,
        |t| Some(grads_out[t].as_ref()),
        grad_p_final,
        &mut acc,
        |t, g| grad_inputs[t] = g.to_vec(),
    );
    Ok(RrnnGrads {
        params: acc,
        grad_inputs,
    })
}

/// Unchecked BPTT core. Adds parameter gradients into `acc` and reports each
/// step's input gradient through `on_input_grad`, last step first.
pub(crate) fn backward_accumulate<'a>(
    params: &RrnnCellParams,
    trace: &RrnnTrace,
    grad_out_at: impl Fn(usize) -> Option<&'a [Real]>,
    grad_p_final: Option<&[Real]>,
    acc: &mut RrnnCellParams,
    mut on_input_grad: impl FnMut(usize, &[Real]),
) {
    let h = params.hidden();
    let in_dim = params.input_dim();
    let mut dp = grad_p_final.map_or_else(|| vec![0.0; h], |g| g.to_vec());
    let mut dh1 = vec![0.0; h];
    let mut dx = vec![0.0; in_dim + h];

    for t in (0..trace.len()).rev() {
        let s = &trace.steps[t];
        if let Some(g) = grad_out_at(t) {
            for ((d, g), a) in dp.iter_mut().zip(g).zip(&s.a_out) {
                *d += g * (1.0 - a * a);
            }
        }
        // The residual output adds straight into p_next, so dp is its gradient.
        dh1.iter_mut().for_each(|v| *v = 0.0);
        params.fc2.accumulate_backward(&s.h1, &dp, &mut acc.fc2, &mut dh1);
        for (d, y) in dh1.iter_mut().zip(&s.h1) {
            *d *= 1.0 - y * y;
        }
        dx.iter_mut().for_each(|v| *v = 0.0);
        params.fc1.accumulate_backward(&s.fc1_input, &dh1, &mut acc.fc1, &mut dx);
        on_input_grad(t, &dx[..in_dim]);
        // identity path plus the tanh(p_prev) path into the branch
        for ((d, g), tp) in dp.iter_mut().zip(&dx[in_dim..]).zip(s.tanh_p_prev()) {
            *d += g * (1.0 - tp * tp);
        }
    }
    for (a, d) in acc.p0.iter_mut().zip(&dp) {
        *a += d;
    }
}
