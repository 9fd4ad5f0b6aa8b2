use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    LinearRegression,
    LogisticRegression,
    SoftmaxRegression,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

/// Architecture descriptor; serialized as JSON on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "default_classes")]
    pub num_classes: usize,
    #[serde(default)]
    pub activation: Activation,
}

fn default_classes() -> usize {
    2
}

impl ModelSpec {
    pub fn linear_regression(input_dim: usize) -> Self {
        Self { kind: ModelKind::LinearRegression, input_dim, hidden_dims: vec![], num_classes: 1, activation: Activation::Tanh }
    }

    pub fn logistic(input_dim: usize) -> Self {
        Self { kind: ModelKind::LogisticRegression, input_dim, hidden_dims: vec![], num_classes: 2, activation: Activation::Tanh }
    }

    pub fn softmax(input_dim: usize, num_classes: usize) -> Self {
        Self { kind: ModelKind::SoftmaxRegression, input_dim, hidden_dims: vec![], num_classes, activation: Activation::Tanh }
    }

    pub fn mlp(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize, activation: Activation) -> Self {
        Self { kind: ModelKind::Mlp, input_dim, hidden_dims, num_classes, activation }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("model spec: {msg}")));
        if self.input_dim == 0 {
            return bad("input_dim must be positive");
        }
        match self.kind {
            ModelKind::LinearRegression => {}
            ModelKind::LogisticRegression if self.num_classes != 2 => {
                return bad("logistic regression requires num_classes == 2")
            }
            ModelKind::LogisticRegression => {}
            ModelKind::SoftmaxRegression | ModelKind::Mlp if self.num_classes < 2 => {
                return bad("classification requires num_classes >= 2")
            }
            ModelKind::SoftmaxRegression | ModelKind::Mlp => {}
        }
        if self.kind == ModelKind::Mlp {
            if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
                return bad("mlp hidden_dims must be non-empty and positive");
            }
        } else if !self.hidden_dims.is_empty() {
            return bad("hidden_dims only apply to mlp");
        }
        Ok(())
    }

    pub fn is_classifier(&self) -> bool {
        self.kind != ModelKind::LinearRegression
    }

    /// Per-example loss is convex in the parameters.
    pub fn is_convex(&self) -> bool {
        self.kind != ModelKind::Mlp
    }

    pub fn output_dim(&self) -> usize {
        match self.kind {
            ModelKind::LinearRegression | ModelKind::LogisticRegression => 1,
            ModelKind::SoftmaxRegression | ModelKind::Mlp => self.num_classes,
        }
    }

    /// Widths `[input, hidden…, output]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        if self.kind == ModelKind::Mlp {
            dims.extend_from_slice(&self.hidden_dims);
        }
        dims.push(self.output_dim());
        dims
    }

    /// Total parameter count `p`: every dense layer contributes `in·out + out`.
    pub fn param_count(&self) -> usize {
        self.layer_dims().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Upper bound on the smoothness constant β of the per-example loss for
    /// features with `‖x‖₂ ≤ max_norm`; `None` for the non-convex MLP.
    pub fn smoothness_bound(&self, max_norm: f64) -> Option<f64> {
        // Hessian is (loss curvature in the logit) · x̃x̃ᵀ with x̃ = (x, 1).
        let r2 = max_norm * max_norm + 1.0;
        match self.kind {
            ModelKind::LinearRegression => Some(r2),
            ModelKind::LogisticRegression => Some(0.25 * r2),
            ModelKind::SoftmaxRegression => Some(0.5 * r2),
            ModelKind::Mlp => None,
        }
    }
}
