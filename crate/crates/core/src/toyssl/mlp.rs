//! Fully connected encoder + projector with cached forward and analytic backward passes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::spectrum::FeatureMatrix;

/// Affine layer `h = x Wᵀ + b` for row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`.
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn new(weight: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weight.nrows() != bias.len() {
            return Err(Error::Shape(format!(
                "weight has {} rows but bias has {} entries",
                weight.nrows(),
                bias.len()
            )));
        }
        if weight.nrows() == 0 || weight.ncols() == 0 {
            return Err(Error::Shape("layer dimensions must be positive".into()));
        }
        if weight.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite layer parameter".into()));
        }
        Ok(Self { weight, bias })
    }

    /// Uniform `±1/sqrt(fan_in)` for weights and biases.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let weight = DMatrix::from_fn(output, input, |_, _| rng.random_range(-bound..bound));
        let bias = DVector::from_fn(output, |_, _| rng.random_range(-bound..bound));
        Self { weight, bias }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: DMatrix::zeros(output, input),
            bias: DVector::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = x * self.weight.transpose();
        for mut row in h.row_iter_mut() {
            row += self.bias.transpose();
        }
        h
    }
}

/// Encoder `e(·)` followed by projector `g(·)`. ReLU between layers inside
/// each network; the outputs of both networks are linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    encoder: Vec<Layer>,
    projector: Vec<Layer>,
}

fn check_chain(layers: &[Layer], what: &str) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Shape(format!("{what} needs at least one layer")));
    }
    for (i, pair) in layers.windows(2).enumerate() {
        if pair[0].output_dim() != pair[1].input_dim() {
            return Err(Error::Shape(format!(
                "{what} layer {i} outputs {} but layer {} expects {}",
                pair[0].output_dim(),
                i + 1,
                pair[1].input_dim()
            )));
        }
    }
    Ok(())
}

impl MlpModel {
    pub fn new(encoder: Vec<Layer>, projector: Vec<Layer>) -> Result<Self> {
        check_chain(&encoder, "encoder")?;
        check_chain(&projector, "projector")?;
        let r = encoder.last().expect("checked").output_dim();
        if projector[0].input_dim() != r {
            return Err(Error::Shape(format!(
                "encoder outputs {r} features but projector expects {}",
                projector[0].input_dim()
            )));
        }
        if encoder
            .iter()
            .chain(&projector)
            .any(|l| l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidInput("non-finite model parameter".into()));
        }
        Ok(Self { encoder, projector })
    }

    /// Randomly initialized model; `encoder_widths` and `projector_widths`
    /// list each layer's output size.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        encoder_widths: &[usize],
        projector_widths: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        Self::build(input_dim, encoder_widths, projector_widths, |i, o| Layer::init(i, o, rng))
    }

    pub fn zeros(input_dim: usize, encoder_widths: &[usize], projector_widths: &[usize]) -> Result<Self> {
        Self::build(input_dim, encoder_widths, projector_widths, Layer::zeros)
    }

    fn build(
        input_dim: usize,
        encoder_widths: &[usize],
        projector_widths: &[usize],
        mut make: impl FnMut(usize, usize) -> Layer,
    ) -> Result<Self> {
        if input_dim == 0 || encoder_widths.contains(&0) || projector_widths.contains(&0) {
            return Err(Error::Shape("layer widths must be positive".into()));
        }
        let mut prev = input_dim;
        let mut stack = |widths: &[usize]| -> Vec<Layer> {
            widths
                .iter()
                .map(|&w| {
                    let layer = make(prev, w);
                    prev = w;
                    layer
                })
                .collect()
        };
        let encoder = stack(encoder_widths);
        let projector = stack(projector_widths);
        Self::new(encoder, projector)
    }

    pub fn encoder(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn projector(&self) -> &[Layer] {
        &self.projector
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn representation_dim(&self) -> usize {
        self.encoder.last().expect("nonempty").output_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.projector.last().expect("nonempty").output_dim()
    }

    /// Encoder layers followed by projector layers.
    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.iter().chain(&self.projector)
    }

    pub(crate) fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.encoder.iter_mut().chain(self.projector.iter_mut())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &FeatureMatrix) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} input features, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Cache-free evaluation of `(R, Z)`.
    pub fn embed(&self, x: &FeatureMatrix) -> Result<(FeatureMatrix, FeatureMatrix)> {
        self.check_input(x)?;
        let r = run_plain(&self.encoder, x.as_matrix().clone());
        let z = run_plain(&self.projector, r.clone());
        Ok((FeatureMatrix::from_computed(r)?, FeatureMatrix::from_computed(z)?))
    }

    /// Cache-free encoder output `R`.
    pub fn encode(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        self.check_input(x)?;
        FeatureMatrix::from_computed(run_plain(&self.encoder, x.as_matrix().clone()))
    }
}

fn relu_in_place(h: &mut DMatrix<f64>) {
    h.apply(|v| *v = v.max(0.0));
}

fn run_plain(layers: &[Layer], mut x: DMatrix<f64>) -> DMatrix<f64> {
    let last = layers.len() - 1;
    for (i, layer) in layers.iter().enumerate() {
        x = layer.apply(&x);
        if i != last {
            relu_in_place(&mut x);
        }
    }
    x
}

/// Per-layer inputs and pre-activations of one network.
#[derive(Debug, Clone)]
struct NetCache {
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

fn run_cached(layers: &[Layer], x: DMatrix<f64>) -> (DMatrix<f64>, NetCache) {
    let last = layers.len() - 1;
    let mut cache = NetCache {
        inputs: Vec::with_capacity(layers.len()),
        pre: Vec::with_capacity(layers.len()),
    };
    let mut act = x;
    for (i, layer) in layers.iter().enumerate() {
        let pre = layer.apply(&act);
        cache.inputs.push(act);
        act = pre.clone();
        if i != last {
            relu_in_place(&mut act);
        }
        cache.pre.push(pre);
    }
    (act, cache)
}

fn backprop(layers: &[Layer], cache: &NetCache, grad_out: DMatrix<f64>) -> (Vec<LayerGrad>, DMatrix<f64>) {
    let last = layers.len() - 1;
    let mut grads = Vec::with_capacity(layers.len());
    let mut upstream = grad_out;
    for i in (0..layers.len()).rev() {
        if i != last {
            upstream.zip_apply(&cache.pre[i], |g, p| {
                if p <= 0.0 {
                    *g = 0.0;
                }
            });
        }
        let weight = upstream.transpose() * &cache.inputs[i];
        let bias = DVector::from_iterator(upstream.ncols(), upstream.column_iter().map(|c| c.sum()));
        let next = &upstream * &layers[i].weight;
        grads.push(LayerGrad { weight, bias });
        upstream = next;
    }
    grads.reverse();
    (grads, upstream)
}

/// Activations kept from a forward pass for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    encoder: NetCache,
    projector: NetCache,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub r: FeatureMatrix,
    pub z: FeatureMatrix,
    pub cache: ForwardCache,
}

pub fn forward(model: &MlpModel, x: &FeatureMatrix) -> Result<ForwardPass> {
    model.check_input(x)?;
    let (r, encoder) = run_cached(&model.encoder, x.as_matrix().clone());
    let (z, projector) = run_cached(&model.projector, r.clone());
    Ok(ForwardPass {
        r: FeatureMatrix::from_computed(r)?,
        z: FeatureMatrix::from_computed(z)?,
        cache: ForwardCache { encoder, projector },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Gradients laid out like [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            layers: model
                .layers()
                .map(|l| LayerGrad {
                    weight: DMatrix::zeros(l.weight.nrows(), l.weight.ncols()),
                    bias: DVector::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weight.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }
}

/// Backpropagates `dL/dZ` (and optionally an extra `dL/dR`) through the cached pass.
pub fn backward(
    model: &MlpModel,
    cache: &ForwardCache,
    grad_z: &DMatrix<f64>,
    grad_r: Option<&DMatrix<f64>>,
) -> Result<Gradients> {
    let n = cache.projector.inputs[0].nrows();
    if grad_z.shape() != (n, model.embedding_dim()) {
        return Err(Error::Shape(format!(
            "dL/dZ must be {n}x{}, got {}x{}",
            model.embedding_dim(),
            grad_z.nrows(),
            grad_z.ncols()
        )));
    }
    let (proj, mut to_r) = backprop(&model.projector, &cache.projector, grad_z.clone());
    if let Some(extra) = grad_r {
        if extra.shape() != to_r.shape() {
            return Err(Error::Shape("dL/dR shape does not match R".into()));
        }
        to_r += extra;
    }
    let (enc, _) = backprop(&model.encoder, &cache.encoder, to_r);
    Ok(Gradients {
        layers: enc.into_iter().chain(proj).collect(),
    })
}
