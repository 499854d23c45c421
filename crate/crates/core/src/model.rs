//! Reference differentiable estimator: a linear map or a single tanh hidden
//! layer, with sigmoid outputs clamped into the open unit interval, manual
//! forward/backward passes, and SGD/Adam optimizers.
//!
//! The probabilistic reading of each output as a conditional Bernoulli
//! probability requires values in (0, 1); sigmoid is the minimal choice and
//! the losses differentiate with respect to these post-sigmoid outputs.
//! Components pinned by the clamp propagate zero gradient.
//!
//! Trained parameters round-trip through a versioned, checksummed text
//! container that also records the node-name table and head kind.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::data::Standardization;
use crate::hierarchy::Hierarchy;
use crate::PROB_EPS;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: expected {expected} values for {what}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model file checksum mismatch (stored {stored}, computed {computed})")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("unsupported model file version '{0}'")]
    UnsupportedVersion(String),
    #[error("model does not match hierarchy: {0}")]
    HierarchyMismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which estimator head a model was trained as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    /// One output per hierarchy node, trained with the masked loss.
    Hierarchical,
    /// One output per labeled class, trained with one-hot MSE.
    Baseline,
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Hierarchical => "hierarchical",
            Self::Baseline => "baseline",
        })
    }
}

impl FromStr for Head {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hierarchical" => Ok(Self::Hierarchical),
            "baseline" => Ok(Self::Baseline),
            other => Err(format!("unknown head '{other}' (expected hierarchical or baseline)")),
        }
    }
}

/// Architecture descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArch {
    Linear,
    /// One hidden layer of the given width with a tanh nonlinearity.
    Hidden(usize),
}

/// Dense affine layer, weights row-major `(rows × cols)`. Also serves as the
/// value container for gradients and optimizer moments.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (cols + rows) as f64).sqrt();
        Self {
            rows,
            cols,
            weights: (0..rows * cols).map(|_| rng.random_range(-limit..limit)).collect(),
            bias: vec![0.0; rows],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = &self.weights[r * self.cols..(r + 1) * self.cols];
                self.bias[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn accumulate(&mut self, other: &DenseLayer) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            *w *= factor;
        }
        for b in &mut self.bias {
            *b *= factor;
        }
    }
}

/// Parameter gradients, shaped like the model they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub hidden: Option<DenseLayer>,
    pub output: DenseLayer,
}

impl Gradients {
    pub fn accumulate(&mut self, other: &Gradients) {
        if let (Some(a), Some(b)) = (self.hidden.as_mut(), other.hidden.as_ref()) {
            a.accumulate(b);
        }
        self.output.accumulate(&other.output);
    }

    pub fn scale(&mut self, factor: f64) {
        if let Some(h) = self.hidden.as_mut() {
            h.scale(factor);
        }
        self.output.scale(factor);
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Linear or one-hidden-layer estimator with clamped sigmoid outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub hidden: Option<DenseLayer>,
    pub output: DenseLayer,
}

impl Model {
    /// Fresh model with seeded Glorot-uniform weights and zero biases.
    pub fn init(arch: ModelArch, input_dim: usize, output_dim: usize, rng: &mut impl Rng) -> Self {
        match arch {
            ModelArch::Linear => Self {
                hidden: None,
                output: DenseLayer::glorot(output_dim, input_dim, rng),
            },
            ModelArch::Hidden(width) => Self {
                hidden: Some(DenseLayer::glorot(width, input_dim, rng)),
                output: DenseLayer::glorot(output_dim, width, rng),
            },
        }
    }

    pub fn arch(&self) -> ModelArch {
        match &self.hidden {
            None => ModelArch::Linear,
            Some(h) => ModelArch::Hidden(h.rows),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.as_ref().map_or(self.output.cols, |h| h.cols)
    }

    pub fn output_dim(&self) -> usize {
        self.output.rows
    }

    pub fn parameter_count(&self) -> usize {
        let count = |l: &DenseLayer| l.weights.len() + l.bias.len();
        self.hidden.as_ref().map_or(0, count) + count(&self.output)
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::ShapeMismatch {
                what: "input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Clamped sigmoid outputs, each in `[PROB_EPS, 1 - PROB_EPS]`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_input(x)?;
        let pre = match &self.hidden {
            None => self.output.affine(x),
            Some(layer) => {
                let mut act = layer.affine(x);
                for v in &mut act {
                    *v = v.tanh();
                }
                self.output.affine(&act)
            }
        };
        Ok(pre
            .into_iter()
            .map(|z| sigmoid(z).clamp(PROB_EPS, 1.0 - PROB_EPS))
            .collect())
    }

    /// Exact parameter gradients for the given output gradient, chaining
    /// through the sigmoid (and tanh, when present). Outputs pinned by the
    /// clamp contribute zero gradient.
    pub fn backward(&self, x: &[f64], grad_out: &[f64]) -> Result<Gradients, ModelError> {
        self.check_input(x)?;
        if grad_out.len() != self.output_dim() {
            return Err(ModelError::ShapeMismatch {
                what: "output gradient",
                expected: self.output_dim(),
                got: grad_out.len(),
            });
        }

        let hidden_act: Option<Vec<f64>> = self.hidden.as_ref().map(|layer| {
            let mut act = layer.affine(x);
            for v in &mut act {
                *v = v.tanh();
            }
            act
        });
        let last_input: &[f64] = hidden_act.as_deref().unwrap_or(x);
        let pre = self.output.affine(last_input);

        // d(out)/d(pre) of the clamped sigmoid
        let grad_pre: Vec<f64> = pre
            .iter()
            .zip(grad_out)
            .map(|(&z, &g)| {
                let s = sigmoid(z);
                if (PROB_EPS..=1.0 - PROB_EPS).contains(&s) {
                    g * s * (1.0 - s)
                } else {
                    0.0
                }
            })
            .collect();

        let mut out_grad = DenseLayer::zeros(self.output.rows, self.output.cols);
        for (r, &gp) in grad_pre.iter().enumerate() {
            let row = &mut out_grad.weights[r * out_grad.cols..(r + 1) * out_grad.cols];
            for (w, v) in row.iter_mut().zip(last_input) {
                *w = gp * v;
            }
            out_grad.bias[r] = gp;
        }

        let hidden_grad = self.hidden.as_ref().map(|layer| {
            let act = hidden_act.as_ref().expect("hidden activations computed above");
            let mut grad_act = vec![0.0; layer.rows];
            for (r, &gp) in grad_pre.iter().enumerate() {
                let row = &self.output.weights[r * self.output.cols..(r + 1) * self.output.cols];
                for (ga, w) in grad_act.iter_mut().zip(row) {
                    *ga += gp * w;
                }
            }
            let mut grad = DenseLayer::zeros(layer.rows, layer.cols);
            for r in 0..layer.rows {
                let grad_pre1 = grad_act[r] * (1.0 - act[r] * act[r]);
                let row = &mut grad.weights[r * layer.cols..(r + 1) * layer.cols];
                for (w, v) in row.iter_mut().zip(x) {
                    *w = grad_pre1 * v;
                }
                grad.bias[r] = grad_pre1;
            }
            grad
        });

        Ok(Gradients {
            hidden: hidden_grad,
            output: out_grad,
        })
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            hidden: self
                .hidden
                .as_ref()
                .map(|l| DenseLayer::zeros(l.rows, l.cols)),
            output: DenseLayer::zeros(self.output.rows, self.output.cols),
        }
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.output))
    }
}

/// Adam hyperparameters; defaults follow the usual recommendation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sgd => "sgd",
            Self::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::Adam),
            other => Err(format!("unknown optimizer '{other}' (expected sgd or adam)")),
        }
    }
}

/// Optimizer state: plain SGD or Adam with bias-corrected moments.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)] // one per training run, size is irrelevant
pub enum Optimizer {
    Sgd {
        learning_rate: f64,
    },
    Adam {
        learning_rate: f64,
        params: Adam,
        step: u64,
        first_moment: Gradients,
        second_moment: Gradients,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, model: &Model) -> Self {
        match kind {
            OptimizerKind::Sgd => Self::Sgd { learning_rate },
            OptimizerKind::Adam => Self::Adam {
                learning_rate,
                params: Adam::default(),
                step: 0,
                first_moment: model.zero_gradients(),
                second_moment: model.zero_gradients(),
            },
        }
    }

    /// Applies one update: `p -= lr·g` for SGD, the standard bias-corrected
    /// moment update for Adam.
    pub fn step(&mut self, model: &mut Model, grads: &Gradients) -> Result<(), ModelError> {
        check_same_shape(model, grads)?;
        match self {
            Self::Sgd { learning_rate } => {
                let lr = *learning_rate;
                for (layer, grad) in model
                    .layers_mut()
                    .zip(grads.hidden.iter().chain(std::iter::once(&grads.output)))
                {
                    for (p, g) in layer.weights.iter_mut().zip(&grad.weights) {
                        *p -= lr * g;
                    }
                    for (p, g) in layer.bias.iter_mut().zip(&grad.bias) {
                        *p -= lr * g;
                    }
                }
            }
            Self::Adam {
                learning_rate,
                params,
                step,
                first_moment,
                second_moment,
            } => {
                *step += 1;
                let t = *step;
                let lr = *learning_rate;
                let Adam { beta1, beta2, epsilon } = *params;
                let m_layers = first_moment
                    .hidden
                    .iter_mut()
                    .chain(std::iter::once(&mut first_moment.output));
                let v_layers = second_moment
                    .hidden
                    .iter_mut()
                    .chain(std::iter::once(&mut second_moment.output));
                let g_layers = grads.hidden.iter().chain(std::iter::once(&grads.output));
                for (((layer, m), v), g) in model.layers_mut().zip(m_layers).zip(v_layers).zip(g_layers) {
                    let tensors = [
                        (&mut layer.weights, &mut m.weights, &mut v.weights, &g.weights),
                        (&mut layer.bias, &mut m.bias, &mut v.bias, &g.bias),
                    ];
                    for (p_vec, m_vec, v_vec, g_vec) in tensors {
                        for i in 0..p_vec.len() {
                            let g = g_vec[i];
                            m_vec[i] = beta1 * m_vec[i] + (1.0 - beta1) * g;
                            v_vec[i] = beta2 * v_vec[i] + (1.0 - beta2) * g * g;
                            let m_hat = m_vec[i] / (1.0 - beta1.powi(t as i32));
                            let v_hat = v_vec[i] / (1.0 - beta2.powi(t as i32));
                            p_vec[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_same_shape(model: &Model, grads: &Gradients) -> Result<(), ModelError> {
    let shape_of = |l: &DenseLayer| (l.rows, l.cols);
    let model_hidden = model.hidden.as_ref().map(shape_of);
    let grad_hidden = grads.hidden.as_ref().map(shape_of);
    if model_hidden != grad_hidden || shape_of(&model.output) != shape_of(&grads.output) {
        return Err(ModelError::ShapeMismatch {
            what: "gradients",
            expected: model.parameter_count(),
            got: grads.output.weights.len()
                + grads.output.bias.len()
                + grads
                    .hidden
                    .as_ref()
                    .map_or(0, |l| l.weights.len() + l.bias.len()),
        });
    }
    Ok(())
}

const MODEL_MAGIC: &str = "hierclass-model";
const MODEL_VERSION: &str = "v1";

/// A trained model bundled with its head kind, the node-name table of the
/// hierarchy it was trained against, and the feature standardization fitted
/// on its training split (so held-out data can be transformed the same way).
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub model: Model,
    pub head: Head,
    /// `(name, labeled)` per node, in id order.
    pub nodes: Vec<(String, bool)>,
    pub standardization: Option<Standardization>,
}

impl SavedModel {
    pub fn from_hierarchy(model: Model, head: Head, h: &Hierarchy) -> Self {
        let nodes = h
            .node_ids()
            .map(|s| (h.name(s).to_owned(), h.is_labeled(s)))
            .collect();
        Self {
            model,
            head,
            nodes,
            standardization: None,
        }
    }

    /// Checks that a hierarchy has exactly the node table this model was
    /// trained against (same names, same labeled flags, same order).
    pub fn check_hierarchy(&self, h: &Hierarchy) -> Result<(), ModelError> {
        if h.node_count() != self.nodes.len() {
            return Err(ModelError::HierarchyMismatch(format!(
                "model has {} nodes, hierarchy has {}",
                self.nodes.len(),
                h.node_count()
            )));
        }
        for s in h.node_ids() {
            let (name, labeled) = &self.nodes[s.index()];
            if h.name(s) != name {
                return Err(ModelError::HierarchyMismatch(format!(
                    "node {} is '{}' in the model but '{}' in the hierarchy",
                    s.index(),
                    name,
                    h.name(s)
                )));
            }
            if h.is_labeled(s) != *labeled {
                return Err(ModelError::HierarchyMismatch(format!(
                    "node '{name}' has a different labeled flag in the hierarchy"
                )));
            }
        }
        Ok(())
    }

    /// Serializes to the versioned text container. Line 2 carries an FNV-1a
    /// checksum of everything after it.
    pub fn to_text(&self) -> String {
        let mut body = String::new();
        let _ = writeln!(body, "head\t{}", self.head);
        match self.model.arch() {
            ModelArch::Linear => {
                let _ = writeln!(body, "arch\tlinear");
            }
            ModelArch::Hidden(width) => {
                let _ = writeln!(body, "arch\thidden\t{width}");
            }
        }
        let _ = writeln!(body, "dims\t{}\t{}", self.model.input_dim(), self.model.output_dim());
        let _ = writeln!(body, "nodes\t{}", self.nodes.len());
        for (name, labeled) in &self.nodes {
            let _ = writeln!(body, "node\t{}\t{}", name, u8::from(*labeled));
        }
        if let Some(params) = &self.standardization {
            let _ = writeln!(body, "standardization\t{}", params.mean.len());
            let _ = writeln!(body, "{}", join_floats(&params.mean));
            let _ = writeln!(body, "{}", join_floats(&params.scale));
        }
        let mut write_layer = |tag: &str, layer: &DenseLayer| {
            let _ = writeln!(body, "tensor\t{tag}\t{}\t{}", layer.rows, layer.cols);
            for r in 0..layer.rows {
                let _ = writeln!(
                    body,
                    "{}",
                    join_floats(&layer.weights[r * layer.cols..(r + 1) * layer.cols])
                );
            }
            let _ = writeln!(body, "{}", join_floats(&layer.bias));
        };
        if let Some(hidden) = &self.model.hidden {
            write_layer("hidden", hidden);
        }
        write_layer("output", &self.model.output);

        format!(
            "{MODEL_MAGIC} {MODEL_VERSION}\nchecksum\t{:016x}\n{body}",
            fnv1a(body.as_bytes())
        )
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, message: String| ModelError::Parse { line: line + 1, message };

        let (i, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty model file".into()))?;
        let mut header_fields = header.split_whitespace();
        if header_fields.next() != Some(MODEL_MAGIC) {
            return Err(parse_err(i, format!("not a {MODEL_MAGIC} file")));
        }
        let version = header_fields.next().unwrap_or("");
        if version != MODEL_VERSION {
            return Err(ModelError::UnsupportedVersion(version.to_owned()));
        }

        let (i, checksum_line) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing checksum line".into()))?;
        let stored = checksum_line
            .strip_prefix("checksum\t")
            .ok_or_else(|| parse_err(i, "missing checksum line".into()))?
            .trim()
            .to_owned();
        let body_start = text
            .match_indices('\n')
            .nth(1)
            .map(|(pos, _)| pos + 1)
            .ok_or_else(|| parse_err(1, "missing body".into()))?;
        let computed = format!("{:016x}", fnv1a(&text.as_bytes()[body_start..]));
        if stored != computed {
            return Err(ModelError::ChecksumMismatch { stored, computed });
        }

        let mut head = None;
        let mut arch = None;
        let mut dims = None;
        let mut nodes: Vec<(String, bool)> = Vec::new();
        let mut hidden: Option<DenseLayer> = None;
        let mut output: Option<DenseLayer> = None;
        let mut standardization: Option<Standardization> = None;

        while let Some((i, line)) = lines.next() {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "head" => {
                    let value = fields.get(1).copied().unwrap_or("");
                    head = Some(value.parse::<Head>().map_err(|e| parse_err(i, e))?);
                }
                "arch" => {
                    arch = Some(match fields.get(1).copied() {
                        Some("linear") => ModelArch::Linear,
                        Some("hidden") => {
                            let width = fields
                                .get(2)
                                .and_then(|w| w.parse().ok())
                                .ok_or_else(|| parse_err(i, "bad hidden width".into()))?;
                            ModelArch::Hidden(width)
                        }
                        other => return Err(parse_err(i, format!("unknown arch {other:?}"))),
                    });
                }
                "dims" => {
                    let input = fields.get(1).and_then(|v| v.parse::<usize>().ok());
                    let output = fields.get(2).and_then(|v| v.parse::<usize>().ok());
                    match (input, output) {
                        (Some(a), Some(b)) => dims = Some((a, b)),
                        _ => return Err(parse_err(i, "bad dims line".into())),
                    }
                }
                "nodes" => {}
                "standardization" => {
                    let dim: usize = fields
                        .get(1)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| parse_err(i, "bad standardization dim".into()))?;
                    let (j, mean_line) = lines
                        .next()
                        .ok_or_else(|| parse_err(i, "truncated standardization".into()))?;
                    let mean = parse_floats(mean_line, dim).map_err(|e| parse_err(j, e))?;
                    let (j, scale_line) = lines
                        .next()
                        .ok_or_else(|| parse_err(i, "truncated standardization".into()))?;
                    let scale = parse_floats(scale_line, dim).map_err(|e| parse_err(j, e))?;
                    standardization = Some(Standardization { mean, scale });
                }
                "node" => {
                    let name = fields
                        .get(1)
                        .filter(|n| !n.is_empty())
                        .ok_or_else(|| parse_err(i, "bad node line".into()))?;
                    let labeled = match fields.get(2).copied() {
                        Some("0") => false,
                        Some("1") => true,
                        _ => return Err(parse_err(i, "bad node labeled flag".into())),
                    };
                    nodes.push(((*name).to_owned(), labeled));
                }
                "tensor" => {
                    let tag = *fields.get(1).unwrap_or(&"");
                    let rows: usize = fields
                        .get(2)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| parse_err(i, "bad tensor rows".into()))?;
                    let cols: usize = fields
                        .get(3)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| parse_err(i, "bad tensor cols".into()))?;
                    let mut layer = DenseLayer::zeros(rows, cols);
                    for r in 0..rows {
                        let (j, row_line) = lines
                            .next()
                            .ok_or_else(|| parse_err(i, "truncated tensor".into()))?;
                        let values = parse_floats(row_line, cols).map_err(|e| parse_err(j, e))?;
                        layer.weights[r * cols..(r + 1) * cols].copy_from_slice(&values);
                    }
                    let (j, bias_line) = lines
                        .next()
                        .ok_or_else(|| parse_err(i, "truncated tensor bias".into()))?;
                    layer.bias = parse_floats(bias_line, rows).map_err(|e| parse_err(j, e))?;
                    match tag {
                        "hidden" => hidden = Some(layer),
                        "output" => output = Some(layer),
                        other => return Err(parse_err(i, format!("unknown tensor '{other}'"))),
                    }
                }
                other => return Err(parse_err(i, format!("unknown record '{other}'"))),
            }
        }

        let head = head.ok_or_else(|| parse_err(0, "missing head record".into()))?;
        let arch = arch.ok_or_else(|| parse_err(0, "missing arch record".into()))?;
        let (input_dim, output_dim) = dims.ok_or_else(|| parse_err(0, "missing dims record".into()))?;
        let output = output.ok_or_else(|| parse_err(0, "missing output tensor".into()))?;
        let model = Model { hidden, output };
        if model.arch() != arch || model.input_dim() != input_dim || model.output_dim() != output_dim
        {
            return Err(parse_err(0, "tensor shapes disagree with arch/dims records".into()));
        }
        Ok(Self {
            model,
            head,
            nodes,
            standardization,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_text(&text)
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_floats(line: &str, expected: usize) -> Result<Vec<f64>, String> {
    let values: Result<Vec<f64>, _> = line.split(' ').map(str::parse).collect();
    let values = values.map_err(|e| format!("bad float: {e}"))?;
    if values.len() != expected {
        return Err(format!("expected {expected} values, got {}", values.len()));
    }
    Ok(values)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
