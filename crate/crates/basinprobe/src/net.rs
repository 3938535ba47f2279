//! Dense feedforward network with deterministic batched forward/backward and
//! a flat parameter vector as the single source of truth. Hidden layers share
//! one activation; the output layer is always linear (classification puts the
//! softmax inside the loss).

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Mat};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// First derivative. The ReLU subgradient at 0 is taken as 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::InvalidSpec(format!("unknown activation '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    LeastSquares,
    SoftmaxCrossEntropy,
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least_squares" => Ok(LossKind::LeastSquares),
            "softmax_cross_entropy" => Ok(LossKind::SoftmaxCrossEntropy),
            other => Err(Error::InvalidSpec(format!("unknown loss kind '{other}'"))),
        }
    }
}

/// Targets for one batch, matching the loss kind.
#[derive(Clone, Copy, Debug)]
pub enum TargetsRef<'a> {
    /// Real-valued targets, one row per sample (least squares).
    Real(&'a Mat),
    /// Class indices (softmax cross-entropy).
    Class(&'a [usize]),
}

/// Offsets of one layer's weight block (row-major, fan_out x fan_in) and bias
/// block inside the flat parameter vector.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LayerLayout {
    pub weight_offset: usize,
    pub bias_offset: usize,
    pub fan_in: usize,
    pub fan_out: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Layout {
    entries: Vec<LayerLayout>,
    total: usize,
}

impl Layout {
    fn new(layer_dims: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(layer_dims.len().saturating_sub(1));
        let mut offset = 0;
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            entries.push(LayerLayout {
                weight_offset: offset,
                bias_offset: offset + fan_in * fan_out,
                fan_in,
                fan_out,
            });
            offset += fan_in * fan_out + fan_out;
        }
        Layout { entries, total: offset }
    }

    pub fn layer(&self, l: usize) -> LayerLayout {
        self.entries[l]
    }

    pub fn num_layers(&self) -> usize {
        self.entries.len()
    }

    pub fn total_params(&self) -> usize {
        self.total
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Network {
    layer_dims: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    layout: Layout,
}

/// Loss value plus gradients from one backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBundle {
    pub loss: f64,
    pub grad_params: Vec<f64>,
    /// Per-sample gradients of the (scalar) network output w.r.t. its input,
    /// one row per sample. Present only when requested.
    pub grad_inputs: Option<Mat>,
}

impl Network {
    /// Zero-initialized network. `layer_dims` runs input dim first, output
    /// dim last, so it needs at least two entries.
    pub fn new(layer_dims: &[usize], activation: Activation) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need at least input and output dims, got {layer_dims:?}"
            )));
        }
        if layer_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidSpec(format!("zero-width layer in {layer_dims:?}")));
        }
        let layout = Layout::new(layer_dims);
        Ok(Network {
            layer_dims: layer_dims.to_vec(),
            activation,
            params: vec![0.0; layout.total_params()],
            layout,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.layout.total_params()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Flat parameter vector (the flatten direction).
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Overwrite all parameters from a flat vector (the unflatten direction).
    pub fn set_params(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "parameter vector length {} does not match P = {}",
                v.len(),
                self.params.len()
            )));
        }
        self.params.copy_from_slice(v);
        Ok(())
    }

    pub fn with_params(&self, v: &[f64]) -> Result<Network> {
        let mut net = self.clone();
        net.set_params(v)?;
        Ok(net)
    }

    pub fn weight(&self, l: usize) -> &[f64] {
        let e = self.layout.layer(l);
        &self.params[e.weight_offset..e.weight_offset + e.fan_in * e.fan_out]
    }

    pub fn weight_mut(&mut self, l: usize) -> &mut [f64] {
        let e = self.layout.layer(l);
        &mut self.params[e.weight_offset..e.weight_offset + e.fan_in * e.fan_out]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let e = self.layout.layer(l);
        &self.params[e.bias_offset..e.bias_offset + e.fan_out]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let e = self.layout.layer(l);
        &mut self.params[e.bias_offset..e.bias_offset + e.fan_out]
    }

    fn check_batch(&self, batch: &Mat) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "layer 0 expects input dim {}, batch has {} columns",
                self.input_dim(),
                batch.cols()
            )));
        }
        Ok(())
    }

    /// Z = A_prev Wᵀ + b for one layer.
    fn affine(&self, l: usize, a_prev: &Mat) -> Mat {
        let e = self.layout.layer(l);
        let w = self.weight(l);
        let b = self.bias(l);
        let n = a_prev.rows();
        let mut z = Mat::zeros(n, e.fan_out);
        for i in 0..n {
            let arow = a_prev.row(i);
            let zrow = z.row_mut(i);
            for (o, zo) in zrow.iter_mut().enumerate() {
                *zo = b[o] + dot(&w[o * e.fan_in..(o + 1) * e.fan_in], arow);
            }
        }
        z
    }

    fn first_nonfinite_row(m: &Mat) -> Option<usize> {
        (0..m.rows()).find(|&i| m.row(i).iter().any(|x| !x.is_finite()))
    }

    /// Forward pass caching pre-activations per layer. zs[l] holds Z_{l+1};
    /// the final entry is the (linear) network output.
    fn forward_cached(&self, batch: &Mat) -> Result<(Vec<Mat>, Vec<Mat>)> {
        self.check_batch(batch)?;
        let num_layers = self.layout.num_layers();
        let mut zs = Vec::with_capacity(num_layers);
        let mut acts = Vec::with_capacity(num_layers.saturating_sub(1));
        for l in 0..num_layers {
            let a_prev = if l == 0 { batch } else { &acts[l - 1] };
            let z = self.affine(l, a_prev);
            if let Some(i) = Self::first_nonfinite_row(&z) {
                return Err(Error::NonFinite { what: format!("activation in layer {l}"), sample: Some(i) });
            }
            if l + 1 < num_layers {
                let mut a = z.clone();
                for x in a.data_mut() {
                    *x = self.activation.apply(*x);
                }
                acts.push(a);
            }
            zs.push(z);
        }
        Ok((zs, acts))
    }

    /// Deterministic batched forward pass; row i of the result is f(x_i; θ).
    pub fn forward(&self, batch: &Mat) -> Result<Mat> {
        let (mut zs, _) = self.forward_cached(batch)?;
        Ok(zs.pop().unwrap())
    }

    /// Convenience single-sample forward for scalar-output networks.
    pub fn forward_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "forward_scalar needs output dim 1, network has {}",
                self.output_dim()
            )));
        }
        let out = self.forward(&Mat::from_vec(1, x.len(), x.to_vec()))?;
        Ok(out[(0, 0)])
    }

    /// Loss and output-layer delta (d loss_i / d output), both unscaled by 1/N.
    fn loss_and_delta(&self, output: &Mat, targets: TargetsRef<'_>, loss: LossKind) -> Result<(f64, Mat)> {
        let n = output.rows();
        let out_dim = output.cols();
        match (loss, targets) {
            (LossKind::LeastSquares, TargetsRef::Real(y)) => {
                if y.rows() != n || y.cols() != out_dim {
                    return Err(Error::Shape(format!(
                        "least-squares targets must be {n}x{out_dim}, got {}x{}",
                        y.rows(),
                        y.cols()
                    )));
                }
                let mut delta = Mat::zeros(n, out_dim);
                let mut total = 0.0;
                for i in 0..n {
                    let (orow, yrow, drow) = (output.row(i), y.row(i), delta.row_mut(i));
                    for j in 0..out_dim {
                        let r = orow[j] - yrow[j];
                        total += r * r;
                        drow[j] = 2.0 * r;
                    }
                }
                Ok((total, delta))
            }
            (LossKind::SoftmaxCrossEntropy, TargetsRef::Class(classes)) => {
                if classes.len() != n {
                    return Err(Error::Shape(format!(
                        "expected {n} class targets, got {}",
                        classes.len()
                    )));
                }
                let mut delta = Mat::zeros(n, out_dim);
                let mut total = 0.0;
                for i in 0..n {
                    let y = classes[i];
                    if y >= out_dim {
                        return Err(Error::Shape(format!(
                            "class {y} out of range for output dim {out_dim} (sample {i})"
                        )));
                    }
                    let orow = output.row(i);
                    let m = orow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let sum_exp: f64 = orow.iter().map(|&o| (o - m).exp()).sum();
                    total += m + sum_exp.ln() - orow[y];
                    let drow = delta.row_mut(i);
                    for j in 0..out_dim {
                        drow[j] = (orow[j] - m).exp() / sum_exp;
                    }
                    drow[y] -= 1.0;
                }
                Ok((total, delta))
            }
            (LossKind::LeastSquares, TargetsRef::Class(_)) => Err(Error::InvalidSpec(
                "least-squares loss needs real targets, got class indices".into(),
            )),
            (LossKind::SoftmaxCrossEntropy, TargetsRef::Real(_)) => Err(Error::InvalidSpec(
                "softmax cross-entropy needs class targets, got real values".into(),
            )),
        }
    }

    /// Backward pass: mean loss over the batch and its gradient w.r.t. every
    /// parameter. With `want_input_grads` (scalar-output networks only) the
    /// bundle also carries per-sample gradients of f w.r.t. the input.
    pub fn backward(
        &self,
        batch: &Mat,
        targets: TargetsRef<'_>,
        loss: LossKind,
        want_input_grads: bool,
    ) -> Result<GradientBundle> {
        let (zs, acts) = self.forward_cached(batch)?;
        let output = zs.last().unwrap();
        let n = batch.rows();
        if n == 0 {
            return Err(Error::InvalidSpec("empty batch".into()));
        }
        let (total_loss, out_delta) = self.loss_and_delta(output, targets, loss)?;

        let mut grad = vec![0.0; self.num_params()];
        self.backprop_into(batch, &zs, &acts, out_delta, &mut grad);
        let inv_n = 1.0 / n as f64;
        for g in &mut grad {
            *g *= inv_n;
        }

        let grad_inputs = if want_input_grads {
            if self.output_dim() != 1 {
                return Err(Error::Shape(format!(
                    "input gradients need output dim 1, network has {}",
                    self.output_dim()
                )));
            }
            let ones = Mat::from_vec(n, 1, vec![1.0; n]);
            Some(self.backprop_to_input(batch, &zs, ones))
        } else {
            None
        };

        Ok(GradientBundle { loss: total_loss * inv_n, grad_params: grad, grad_inputs })
    }

    /// Accumulate Δᵀ A weight gradients and column-sum bias gradients layer by
    /// layer, consuming the output delta. No 1/N scaling is applied here.
    fn backprop_into(&self, batch: &Mat, zs: &[Mat], acts: &[Mat], out_delta: Mat, grad: &mut [f64]) {
        let num_layers = self.layout.num_layers();
        let n = batch.rows();
        let mut delta = out_delta;
        for l in (0..num_layers).rev() {
            let e = self.layout.layer(l);
            let a_prev = if l == 0 { batch } else { &acts[l - 1] };
            // grad W_l += Δᵀ A_prev, grad b_l += column sums of Δ.
            {
                let gw = &mut grad[e.weight_offset..e.weight_offset + e.fan_in * e.fan_out];
                for i in 0..n {
                    let drow = delta.row(i);
                    let arow = a_prev.row(i);
                    for (o, &d) in drow.iter().enumerate() {
                        axpy(&mut gw[o * e.fan_in..(o + 1) * e.fan_in], d, arow);
                    }
                }
            }
            {
                let gb = &mut grad[e.bias_offset..e.bias_offset + e.fan_out];
                for i in 0..n {
                    for (o, &d) in delta.row(i).iter().enumerate() {
                        gb[o] += d;
                    }
                }
            }
            if l > 0 {
                delta = self.propagate_delta(l, &delta, &zs[l - 1]);
            }
        }
    }

    /// Δ_prev = (Δ W_l) ∘ σ'(Z_prev).
    fn propagate_delta(&self, l: usize, delta: &Mat, z_prev: &Mat) -> Mat {
        let e = self.layout.layer(l);
        let w = self.weight(l);
        let n = delta.rows();
        let mut prev = Mat::zeros(n, e.fan_in);
        for i in 0..n {
            let drow = delta.row(i);
            let prow = prev.row_mut(i);
            for (o, &d) in drow.iter().enumerate() {
                axpy(prow, d, &w[o * e.fan_in..(o + 1) * e.fan_in]);
            }
            let zrow = z_prev.row(i);
            for (p, &z) in prow.iter_mut().zip(zrow) {
                *p *= self.activation.derivative(z);
            }
        }
        prev
    }

    /// Propagate a delta all the way to the input: per-sample ∇_x of the
    /// seeded output combination.
    fn backprop_to_input(&self, batch: &Mat, zs: &[Mat], out_delta: Mat) -> Mat {
        let num_layers = self.layout.num_layers();
        let mut delta = out_delta;
        for l in (1..num_layers).rev() {
            delta = self.propagate_delta(l, &delta, &zs[l - 1]);
        }
        // First layer: no activation on the input itself.
        let e = self.layout.layer(0);
        let w = self.weight(0);
        let n = batch.rows();
        let mut input_grads = Mat::zeros(n, e.fan_in);
        for i in 0..n {
            let drow = delta.row(i);
            let grow = input_grads.row_mut(i);
            for (o, &d) in drow.iter().enumerate() {
                axpy(grow, d, &w[o * e.fan_in..(o + 1) * e.fan_in]);
            }
        }
        input_grads
    }

    /// Per-sample gradients ∇_θ f(x_i) for scalar-output networks, one row
    /// per sample. Intended for small nets (N x P storage).
    pub fn output_gradients(&self, batch: &Mat) -> Result<Mat> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "output_gradients needs output dim 1, network has {}",
                self.output_dim()
            )));
        }
        let (zs, acts) = self.forward_cached(batch)?;
        let n = batch.rows();
        let p = self.num_params();
        let mut rows = Mat::zeros(n, p);
        for i in 0..n {
            let x = Mat::from_vec(1, batch.cols(), batch.row(i).to_vec());
            let zrow: Vec<Mat> = zs.iter().map(|z| Mat::from_vec(1, z.cols(), z.row(i).to_vec())).collect();
            let arow: Vec<Mat> = acts.iter().map(|a| Mat::from_vec(1, a.cols(), a.row(i).to_vec())).collect();
            let seed = Mat::from_vec(1, 1, vec![1.0]);
            let mut g = vec![0.0; p];
            self.backprop_into(&x, &zrow, &arow, seed, &mut g);
            rows.row_mut(i).copy_from_slice(&g);
        }
        Ok(rows)
    }

    /// Σ_i w_i ∇_θ f(x_i) for scalar-output networks, in one batched pass.
    pub fn weighted_output_gradient(&self, batch: &Mat, weights: &[f64]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "weighted_output_gradient needs output dim 1, network has {}",
                self.output_dim()
            )));
        }
        if weights.len() != batch.rows() {
            return Err(Error::Shape(format!(
                "{} weights for {} samples",
                weights.len(),
                batch.rows()
            )));
        }
        let (zs, acts) = self.forward_cached(batch)?;
        let seed = Mat::from_vec(batch.rows(), 1, weights.to_vec());
        let mut g = vec![0.0; self.num_params()];
        self.backprop_into(batch, &zs, &acts, seed, &mut g);
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_unit_relu() -> Network {
        // a=1, b=1, c=0: f(x) = relu(x)
        let mut net = Network::new(&[1, 1, 1], Activation::Relu).unwrap();
        net.set_params(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        net
    }

    #[test]
    fn relu_unit_forward() {
        let net = one_unit_relu();
        assert_eq!(net.forward_scalar(&[2.0]).unwrap(), 2.0);
        assert_eq!(net.forward_scalar(&[-1.0]).unwrap(), 0.0);
    }

    #[test]
    fn zero_params_forward_is_zero() {
        let net = Network::new(&[3, 5, 2], Activation::Tanh).unwrap();
        let batch = Mat::from_vec(2, 3, vec![0.3, -1.0, 2.0, 0.0, 0.5, -0.2]);
        let out = net.forward(&batch).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn param_count_matches_layout_arithmetic() {
        // [2,3,1]: (2*3+3) + (3*1+1) = 13
        let net = Network::new(&[2, 3, 1], Activation::Relu).unwrap();
        assert_eq!(net.num_params(), 13);
        let e0 = net.layout().layer(0);
        let e1 = net.layout().layer(1);
        assert_eq!(e0.weight_offset, 0);
        assert_eq!(e0.bias_offset, 6);
        assert_eq!(e1.weight_offset, 9);
        assert_eq!(e1.bias_offset, 12);
    }

    #[test]
    fn set_params_roundtrips_bit_exactly() {
        let mut net = Network::new(&[4, 3, 2], Activation::Sigmoid).unwrap();
        let v: Vec<f64> = (0..net.num_params()).map(|i| (i as f64) * 0.137 - 1.0).collect();
        net.set_params(&v).unwrap();
        assert_eq!(net.params(), v.as_slice());
        assert!(net.set_params(&v[1..]).is_err());
    }

    #[test]
    fn backward_hand_computed_example() {
        // 1-unit ReLU net, least squares, (x, y) = (1, 0): f = 1, loss = 1,
        // d loss/da = 2 σ(1) = 2.
        let net = one_unit_relu();
        let batch = Mat::from_vec(1, 1, vec![1.0]);
        let y = Mat::from_vec(1, 1, vec![0.0]);
        let g = net
            .backward(&batch, TargetsRef::Real(&y), LossKind::LeastSquares, false)
            .unwrap();
        assert_eq!(g.loss, 1.0);
        // Layout: [w0, b0, w1 (=a), b1]; df/da = σ(b x + c) = 1 → 2·1·1 = 2.
        assert_eq!(g.grad_params[2], 2.0);
    }

    #[test]
    fn zero_residual_means_zero_gradient() {
        let net = one_unit_relu();
        let batch = Mat::from_vec(2, 1, vec![1.0, 2.0]);
        let y = Mat::from_vec(2, 1, vec![1.0, 2.0]);
        let g = net
            .backward(&batch, TargetsRef::Real(&y), LossKind::LeastSquares, false)
            .unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.grad_params.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn shape_error_names_offending_layer() {
        let net = Network::new(&[3, 2, 1], Activation::Relu).unwrap();
        let batch = Mat::from_vec(1, 2, vec![1.0, 2.0]);
        let err = net.forward(&batch).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
    }

    #[test]
    fn backward_is_byte_deterministic() {
        let mut net = Network::new(&[3, 4, 4, 2], Activation::Tanh).unwrap();
        let v: Vec<f64> = (0..net.num_params()).map(|i| ((i * 37 % 19) as f64 - 9.0) * 0.05).collect();
        net.set_params(&v).unwrap();
        let batch = Mat::from_vec(3, 3, vec![0.1, -0.2, 0.3, 1.0, 0.5, -0.5, 2.0, -1.0, 0.0]);
        let classes = [0usize, 1, 0];
        let g1 = net
            .backward(&batch, TargetsRef::Class(&classes), LossKind::SoftmaxCrossEntropy, false)
            .unwrap();
        let g2 = net
            .backward(&batch, TargetsRef::Class(&classes), LossKind::SoftmaxCrossEntropy, false)
            .unwrap();
        assert_eq!(g1.loss.to_bits(), g2.loss.to_bits());
        for (a, b) in g1.grad_params.iter().zip(&g2.grad_params) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
