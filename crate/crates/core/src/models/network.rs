//! Forward pass and hand-written backprop for stacks of dense layers.
//!
//! Parameters are laid out layer by layer; each layer stores its weight
//! matrix row-major as `out × in` followed by `out` biases.

use super::spec::{Activation, ModelKind, ModelSpec};
use crate::scalar::Scalar;

pub(crate) struct Layout {
    pub dims: Vec<usize>,
    /// Offset of each layer's weight block; biases follow at `offset + out·in`.
    pub offsets: Vec<usize>,
}

impl Layout {
    pub fn new(spec: &ModelSpec) -> Self {
        let dims = spec.layer_dims();
        let mut offsets = Vec::with_capacity(dims.len() - 1);
        let mut at = 0;
        for w in dims.windows(2) {
            offsets.push(at);
            at += w[0] * w[1] + w[1];
        }
        Self { dims, offsets }
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }
}

fn activate<T: Scalar>(act: Activation, z: T) -> T {
    match act {
        Activation::Tanh => z.tanh(),
        Activation::Relu => z.max(T::zero()),
    }
}

/// Derivative expressed through the pre-activation `z` and output `a`.
fn activate_grad<T: Scalar>(act: Activation, z: T, a: T) -> T {
    match act {
        Activation::Tanh => T::one() - a * a,
        Activation::Relu => {
            if z > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        }
    }
}

/// Per-layer pre-activations and activations; `acts[0]` is the input.
pub(crate) struct Trace<T> {
    pre: Vec<Vec<T>>,
    acts: Vec<Vec<T>>,
}

impl<T: Scalar> Trace<T> {
    pub fn logits(&self) -> &[T] {
        self.pre.last().expect("at least one layer")
    }
}

pub(crate) fn forward<T: Scalar>(spec: &ModelSpec, layout: &Layout, theta: &[T], x: &[T]) -> Trace<T> {
    let n_layers = layout.layers();
    let mut pre = Vec::with_capacity(n_layers);
    let mut acts = Vec::with_capacity(n_layers + 1);
    acts.push(x.to_vec());
    for l in 0..n_layers {
        let (n_in, n_out) = (layout.dims[l], layout.dims[l + 1]);
        let off = layout.offsets[l];
        let w = &theta[off..off + n_in * n_out];
        let b = &theta[off + n_in * n_out..off + n_in * n_out + n_out];
        let input = &acts[l];
        let z: Vec<T> = (0..n_out)
            .map(|o| {
                let row = &w[o * n_in..(o + 1) * n_in];
                row.iter().zip(input).fold(b[o], |s, (&wi, &xi)| s + wi * xi)
            })
            .collect();
        if l + 1 < n_layers {
            acts.push(z.iter().map(|&v| activate(spec.activation, v)).collect());
        }
        pre.push(z);
    }
    Trace { pre, acts }
}

/// Numerically stable `ln(1 + eᶻ)`.
fn softplus<T: Scalar>(z: T) -> T {
    z.max(T::zero()) + (-z.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    m + z.iter().map(|&v| (v - m).exp()).sum::<T>().ln()
}

/// Per-example loss and its derivative with respect to the output logits.
///
/// Regression uses `½(z − y)²`; logistic uses binary cross-entropy on the
/// logit; softmax and MLP use categorical cross-entropy.
pub(crate) fn loss_and_logit_grad<T: Scalar>(kind: ModelKind, logits: &[T], y: T) -> (T, Vec<T>) {
    match kind {
        ModelKind::LinearRegression => {
            let r = logits[0] - y;
            (T::lit(0.5) * r * r, vec![r])
        }
        ModelKind::LogisticRegression => {
            let z = logits[0];
            (softplus(z) - y * z, vec![sigmoid(z) - y])
        }
        ModelKind::SoftmaxRegression | ModelKind::Mlp => {
            let class = class_index(y);
            let lse = log_sum_exp(logits);
            let grad = logits
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    let p = (v - lse).exp();
                    if c == class {
                        p - T::one()
                    } else {
                        p
                    }
                })
                .collect();
            (lse - logits[class], grad)
        }
    }
}

pub(crate) fn class_index<T: Scalar>(y: T) -> usize {
    y.to_f64_lossy().round() as usize
}

/// Writes `∇_θ ℓ(θ; x, y)` into `grad` (length `p`) and returns the loss.
pub(crate) fn backprop<T: Scalar>(
    spec: &ModelSpec,
    layout: &Layout,
    theta: &[T],
    x: &[T],
    y: T,
    grad: &mut [T],
) -> T {
    let trace = forward(spec, layout, theta, x);
    let (loss, mut delta) = loss_and_logit_grad(spec.kind, trace.logits(), y);
    for l in (0..layout.layers()).rev() {
        let (n_in, n_out) = (layout.dims[l], layout.dims[l + 1]);
        let off = layout.offsets[l];
        let input = &trace.acts[l];
        {
            let (gw, rest) = grad[off..].split_at_mut(n_in * n_out);
            for o in 0..n_out {
                let d = delta[o];
                for (g, &a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *g = d * a;
                }
                rest[o] = d;
            }
        }
        if l > 0 {
            let w = &theta[off..off + n_in * n_out];
            let z = &trace.pre[l - 1];
            let mut prev = vec![T::zero(); n_in];
            for (o, &d) in delta.iter().enumerate() {
                for (pv, &wi) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *pv += wi * d;
                }
            }
            for (i, pv) in prev.iter_mut().enumerate() {
                *pv *= activate_grad(spec.activation, z[i], input[i]);
            }
            delta = prev;
        }
    }
    loss
}

/// Loss only.
pub(crate) fn example_loss<T: Scalar>(spec: &ModelSpec, layout: &Layout, theta: &[T], x: &[T], y: T) -> (T, Vec<T>) {
    let trace = forward(spec, layout, theta, x);
    let logits = trace.logits().to_vec();
    let (loss, _) = loss_and_logit_grad(spec.kind, &logits, y);
    (loss, logits)
}
