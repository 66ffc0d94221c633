//! Minimal trainable transformer components on f64 ndarray storage.
//!
//! Everything here is single-threaded and deterministic: parameter init
//! draws from a caller-seeded RNG, forward passes cache what backward
//! needs, and gradients accumulate until [`AdamW::step`] consumes them.
//! The layers process one sequence at a time as `[tokens, dim]` matrices;
//! batching is gradient accumulation across sequences, which keeps the
//! shapes simple and makes training order the only source of variation.
//!
//! Correctness rests on the finite-difference tests at the bottom: every
//! layer's analytic backward pass is checked against central differences.

use ndarray::{s, Array1, Array2, Axis, Dimension};
use rand::Rng;

/// Trainable tensor with gradient and AdamW moment buffers.
#[derive(Debug, Clone)]
pub struct Param<D: Dimension> {
    pub value: ndarray::Array<f64, D>,
    pub grad: ndarray::Array<f64, D>,
    m: ndarray::Array<f64, D>,
    v: ndarray::Array<f64, D>,
    /// Weight decay applies only where it should: matrices yes, biases and
    /// norm parameters no.
    pub decay: bool,
}

impl<D: Dimension> Param<D> {
    pub fn new(value: ndarray::Array<f64, D>, decay: bool) -> Self {
        let zeros = ndarray::Array::zeros(value.raw_dim());
        Param {
            grad: zeros.clone(),
            m: zeros.clone(),
            v: zeros,
            value,
            decay,
        }
    }
}

/// Type-erased view of a [`Param`] for the optimizer and serialization.
/// Parameters are never zero-sized, so `len` comes without `is_empty`.
#[allow(clippy::len_without_is_empty)]
pub trait AnyParam {
    fn adamw_update(&mut self, lr: f64, beta1: f64, beta2: f64, eps: f64, wd: f64, t: i32);
    fn zero_grad(&mut self);
    fn shape(&self) -> Vec<usize>;
    fn flat(&self) -> Vec<f64>;
    fn load_flat(&mut self, data: &[f64]);
    fn len(&self) -> usize;
}

impl<D: Dimension> AnyParam for Param<D> {
    fn adamw_update(&mut self, lr: f64, beta1: f64, beta2: f64, eps: f64, wd: f64, t: i32) {
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        ndarray::Zip::from(&mut self.value)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(&self.grad)
            .for_each(|p, m, v, &g| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let step = (*m / bc1) / ((*v / bc2).sqrt() + eps);
                // Decoupled decay: shrink the weight directly, not the
                // gradient.
                *p -= lr * (step + if self.decay { wd * *p } else { 0.0 });
            });
    }

    fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    fn shape(&self) -> Vec<usize> {
        self.value.shape().to_vec()
    }

    fn flat(&self) -> Vec<f64> {
        self.value.iter().copied().collect()
    }

    fn load_flat(&mut self, data: &[f64]) {
        assert_eq!(data.len(), self.value.len(), "weight size mismatch");
        for (slot, &x) in self.value.iter_mut().zip(data) {
            *slot = x;
        }
        self.m.fill(0.0);
        self.v.fill(0.0);
        self.grad.fill(0.0);
    }

    fn len(&self) -> usize {
        self.value.len()
    }
}

/// Anything holding parameters exposes them in a fixed traversal order.
/// That order is the serialization format, so it must never depend on
/// runtime state.
pub trait Tensors {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam));
}

/// Decoupled-weight-decay Adam over any [`Tensors`] tree.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    t: i32,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
        }
    }

    /// Applies one update from the accumulated gradients, then clears them.
    pub fn step(&mut self, model: &mut dyn Tensors) {
        self.t += 1;
        let (lr, b1, b2, eps, wd, t) = (
            self.lr,
            self.beta1,
            self.beta2,
            self.eps,
            self.weight_decay,
            self.t,
        );
        model.visit_params(&mut |p| {
            p.adamw_update(lr, b1, b2, eps, wd, t);
            p.zero_grad();
        });
    }
}

fn xavier(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

/// Token id lookup table.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: Param<ndarray::Ix2>,
    cached_ids: Vec<usize>,
}

impl Embedding {
    pub fn new(rng: &mut impl Rng, vocab: usize, dim: usize) -> Self {
        Embedding {
            table: Param::new(xavier(rng, vocab, dim), true),
            cached_ids: Vec::new(),
        }
    }

    pub fn forward(&mut self, ids: &[usize]) -> Array2<f64> {
        self.cached_ids = ids.to_vec();
        let dim = self.table.value.ncols();
        let mut out = Array2::zeros((ids.len(), dim));
        for (row, &id) in ids.iter().enumerate() {
            out.row_mut(row).assign(&self.table.value.row(id));
        }
        out
    }

    pub fn backward(&mut self, dy: &Array2<f64>) {
        for (row, &id) in self.cached_ids.iter().enumerate() {
            let mut g = self.table.grad.row_mut(id);
            g += &dy.row(row);
        }
    }
}

impl Tensors for Embedding {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        f(&mut self.table);
    }
}

/// Per-row normalization with learned scale and shift.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: Param<ndarray::Ix1>,
    pub beta: Param<ndarray::Ix1>,
    eps: f64,
    cached_xhat: Array2<f64>,
    cached_inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        LayerNorm {
            gamma: Param::new(Array1::ones(dim), false),
            beta: Param::new(Array1::zeros(dim), false),
            eps: 1e-5,
            cached_xhat: Array2::zeros((0, 0)),
            cached_inv_std: Array1::zeros(0),
        }
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let (n, d) = x.dim();
        let mut xhat = Array2::zeros((n, d));
        let mut inv_std = Array1::zeros(n);
        for (row, xr) in x.rows().into_iter().enumerate() {
            let mean = xr.mean().unwrap();
            let var = xr.mapv(|v| (v - mean).powi(2)).mean().unwrap();
            let is = 1.0 / (var + self.eps).sqrt();
            inv_std[row] = is;
            xhat.row_mut(row).assign(&xr.mapv(|v| (v - mean) * is));
        }
        self.cached_xhat = xhat.clone();
        self.cached_inv_std = inv_std;
        xhat * &self.gamma.value + &self.beta.value
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Array2<f64> {
        let (n, d) = dy.dim();
        let xhat = &self.cached_xhat;
        for col in 0..d {
            self.gamma.grad[col] += dy.column(col).dot(&xhat.column(col));
            self.beta.grad[col] += dy.column(col).sum();
        }
        let mut dx = Array2::zeros((n, d));
        for row in 0..n {
            let dxhat = &dy.row(row) * &self.gamma.value;
            let sum_dxhat = dxhat.sum();
            let sum_dxhat_xhat = dxhat.dot(&xhat.row(row));
            let is = self.cached_inv_std[row];
            let df = d as f64;
            for col in 0..d {
                dx[[row, col]] = is / df
                    * (df * dxhat[col] - sum_dxhat - xhat[[row, col]] * sum_dxhat_xhat);
            }
        }
        dx
    }
}

impl Tensors for LayerNorm {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        f(&mut self.gamma);
        f(&mut self.beta);
    }
}

/// Affine map `y = xW + b`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Param<ndarray::Ix2>,
    pub b: Param<ndarray::Ix1>,
    cached_x: Array2<f64>,
}

impl Linear {
    pub fn new(rng: &mut impl Rng, d_in: usize, d_out: usize) -> Self {
        Linear {
            w: Param::new(xavier(rng, d_in, d_out), true),
            b: Param::new(Array1::zeros(d_out), false),
            cached_x: Array2::zeros((0, 0)),
        }
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        self.cached_x = x.clone();
        x.dot(&self.w.value) + &self.b.value
    }

    /// Scoring-only forward that skips the cache.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.value) + &self.b.value
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Array2<f64> {
        self.w.grad += &self.cached_x.t().dot(dy);
        self.b.grad += &dy.sum_axis(Axis(0));
        dy.dot(&self.w.value.t())
    }
}

impl Tensors for Linear {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        f(&mut self.w);
        f(&mut self.b);
    }
}

fn gelu(x: f64) -> f64 {
    const C: f64 = 0.7978845608028654; // sqrt(2/pi)
    const A: f64 = 0.044715;
    0.5 * x * (1.0 + (C * (x + A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    const C: f64 = 0.7978845608028654;
    const A: f64 = 0.044715;
    let u = C * (x + A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * C * (1.0 + 3.0 * A * x * x)
}

/// Two-layer position-wise MLP with GELU.
#[derive(Debug, Clone)]
pub struct FeedForward {
    pub lin1: Linear,
    pub lin2: Linear,
    cached_pre: Array2<f64>,
}

impl FeedForward {
    pub fn new(rng: &mut impl Rng, dim: usize, hidden: usize) -> Self {
        FeedForward {
            lin1: Linear::new(rng, dim, hidden),
            lin2: Linear::new(rng, hidden, dim),
            cached_pre: Array2::zeros((0, 0)),
        }
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let pre = self.lin1.forward(x);
        self.cached_pre = pre.clone();
        self.lin2.forward(&pre.mapv(gelu))
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Array2<f64> {
        let dh = self.lin2.backward(dy);
        let dpre = dh * self.cached_pre.mapv(gelu_grad);
        self.lin1.backward(&dpre)
    }
}

impl Tensors for FeedForward {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        self.lin1.visit_params(f);
        self.lin2.visit_params(f);
    }
}

fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Full bidirectional multi-head self-attention.
#[derive(Debug, Clone)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    n_heads: usize,
    cached_q: Array2<f64>,
    cached_k: Array2<f64>,
    cached_v: Array2<f64>,
    cached_attn: Vec<Array2<f64>>,
}

impl MultiHeadAttention {
    pub fn new(rng: &mut impl Rng, dim: usize, n_heads: usize) -> Self {
        assert!(dim.is_multiple_of(n_heads), "dim {dim} not divisible by heads {n_heads}");
        MultiHeadAttention {
            wq: Linear::new(rng, dim, dim),
            wk: Linear::new(rng, dim, dim),
            wv: Linear::new(rng, dim, dim),
            wo: Linear::new(rng, dim, dim),
            n_heads,
            cached_q: Array2::zeros((0, 0)),
            cached_k: Array2::zeros((0, 0)),
            cached_v: Array2::zeros((0, 0)),
            cached_attn: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let (n, dim) = x.dim();
        let dh = dim / self.n_heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let q = self.wq.forward(x);
        let k = self.wk.forward(x);
        let v = self.wv.forward(x);
        let mut concat = Array2::zeros((n, dim));
        self.cached_attn.clear();
        for h in 0..self.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let attn = softmax_rows(&(qh.dot(&kh.t()) * scale));
            concat.slice_mut(cols).assign(&attn.dot(&vh));
            self.cached_attn.push(attn);
        }
        self.cached_q = q;
        self.cached_k = k;
        self.cached_v = v;
        self.wo.forward(&concat)
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Array2<f64> {
        let dconcat = self.wo.backward(dy);
        let (n, dim) = dconcat.dim();
        let dh = dim / self.n_heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut dq = Array2::zeros((n, dim));
        let mut dk = Array2::zeros((n, dim));
        let mut dv = Array2::zeros((n, dim));
        for h in 0..self.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let attn = &self.cached_attn[h];
            let qh = self.cached_q.slice(cols);
            let kh = self.cached_k.slice(cols);
            let vh = self.cached_v.slice(cols);
            let dout = dconcat.slice(cols);
            let dattn = dout.dot(&vh.t());
            dv.slice_mut(cols).assign(&attn.t().dot(&dout));
            // Softmax backward per row: a ⊙ (g − ⟨g, a⟩).
            let mut dscores = Array2::zeros((n, n));
            for row in 0..n {
                let a = attn.row(row);
                let g = dattn.row(row);
                let dot = g.dot(&a);
                for col in 0..n {
                    dscores[[row, col]] = a[col] * (g[col] - dot);
                }
            }
            dscores *= scale;
            dq.slice_mut(cols).assign(&dscores.dot(&kh));
            dk.slice_mut(cols).assign(&dscores.t().dot(&qh));
        }
        self.wq.backward(&dq) + self.wk.backward(&dk) + self.wv.backward(&dv)
    }
}

impl Tensors for MultiHeadAttention {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        self.wq.visit_params(f);
        self.wk.visit_params(f);
        self.wv.visit_params(f);
        self.wo.visit_params(f);
    }
}

/// Pre-norm residual block: `x + attn(ln1(x))`, then `x + ff(ln2(x))`.
#[derive(Debug, Clone)]
pub struct TransformerBlock {
    pub ln1: LayerNorm,
    pub attn: MultiHeadAttention,
    pub ln2: LayerNorm,
    pub ff: FeedForward,
}

impl TransformerBlock {
    pub fn new(rng: &mut impl Rng, dim: usize, n_heads: usize, ff_hidden: usize) -> Self {
        TransformerBlock {
            ln1: LayerNorm::new(dim),
            attn: MultiHeadAttention::new(rng, dim, n_heads),
            ln2: LayerNorm::new(dim),
            ff: FeedForward::new(rng, dim, ff_hidden),
        }
    }

    pub fn forward(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let mid = x + &self.attn.forward(&self.ln1.forward(x));
        &mid + &self.ff.forward(&self.ln2.forward(&mid))
    }

    pub fn backward(&mut self, dy: &Array2<f64>) -> Array2<f64> {
        let dmid = dy + &self.ln2.backward(&self.ff.backward(dy));
        &dmid + &self.ln1.backward(&self.attn.backward(&dmid))
    }
}

impl Tensors for TransformerBlock {
    fn visit_params(&mut self, f: &mut dyn FnMut(&mut dyn AnyParam)) {
        self.ln1.visit_params(f);
        self.attn.visit_params(f);
        self.ln2.visit_params(f);
        self.ff.visit_params(f);
    }
}

/// Mean cross-entropy over token rows with optional per-class weights.
/// Returns the loss and the gradient w.r.t. the logits.
///
/// Weighted form: `Σ w[y_t]·CE_t / Σ w[y_t]`, so reweighting classes does
/// not rescale the overall learning rate.
pub fn token_cross_entropy(
    logits: &Array2<f64>,
    targets: &[usize],
    class_weights: Option<&[f64]>,
) -> (f64, Array2<f64>) {
    assert_eq!(logits.nrows(), targets.len(), "one target per row");
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    let mut weight_sum = 0.0;
    let mut dlogits = probs.clone();
    for (row, &target) in targets.iter().enumerate() {
        let w = class_weights.map_or(1.0, |cw| cw[target]);
        loss += -w * probs[[row, target]].max(1e-300).ln();
        weight_sum += w;
        dlogits[[row, target]] -= 1.0;
        let mut r = dlogits.row_mut(row);
        r *= w;
    }
    if weight_sum == 0.0 {
        return (0.0, Array2::zeros(logits.raw_dim()));
    }
    (loss / weight_sum, dlogits / weight_sum)
}

/// Cross-entropy of one position over a score vector (start/end heads).
pub fn position_cross_entropy(logits: &Array1<f64>, target: usize) -> (f64, Array1<f64>) {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps = logits.mapv(|v| (v - max).exp());
    let sum = exps.sum();
    let probs = exps / sum;
    let loss = -probs[target].max(1e-300).ln();
    let mut dlogits = probs;
    dlogits[target] -= 1.0;
    (loss, dlogits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-5;
    const TOL: f64 = 1e-6;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn rand_mat(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
    }

    /// Scalar objective: fixed random projection of the output. Its exact
    /// gradient w.r.t. the output is the coefficient matrix itself.
    fn project(out: &Array2<f64>, coeffs: &Array2<f64>) -> f64 {
        (out * coeffs).sum()
    }

    fn check_input_grad(
        x: &Array2<f64>,
        analytic_dx: &Array2<f64>,
        mut f: impl FnMut(&Array2<f64>) -> f64,
    ) {
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                let mut xp = x.clone();
                xp[[i, j]] += EPS;
                let mut xm = x.clone();
                xm[[i, j]] -= EPS;
                let numeric = (f(&xp) - f(&xm)) / (2.0 * EPS);
                assert_abs_diff_eq!(analytic_dx[[i, j]], numeric, epsilon = TOL);
            }
        }
    }

    #[test]
    fn linear_grads_match_finite_differences() {
        let mut r = rng();
        let mut layer = Linear::new(&mut r, 4, 3);
        let x = rand_mat(&mut r, 5, 4);
        let coeffs = rand_mat(&mut r, 5, 3);
        let out = layer.forward(&x);
        let dx = layer.backward(&coeffs);
        check_input_grad(&x, &dx, |xx| project(&layer.apply(xx), &coeffs));
        let _ = out;
        // Weight gradient, element by element.
        for i in 0..4 {
            for j in 0..3 {
                let analytic = layer.w.grad[[i, j]];
                let orig = layer.w.value[[i, j]];
                layer.w.value[[i, j]] = orig + EPS;
                let up = project(&layer.apply(&x), &coeffs);
                layer.w.value[[i, j]] = orig - EPS;
                let down = project(&layer.apply(&x), &coeffs);
                layer.w.value[[i, j]] = orig;
                assert_abs_diff_eq!(analytic, (up - down) / (2.0 * EPS), epsilon = TOL);
            }
        }
        for j in 0..3 {
            let analytic = layer.b.grad[j];
            let orig = layer.b.value[j];
            layer.b.value[j] = orig + EPS;
            let up = project(&layer.apply(&x), &coeffs);
            layer.b.value[j] = orig - EPS;
            let down = project(&layer.apply(&x), &coeffs);
            layer.b.value[j] = orig;
            assert_abs_diff_eq!(analytic, (up - down) / (2.0 * EPS), epsilon = TOL);
        }
    }

    #[test]
    fn layer_norm_grads_match_finite_differences() {
        let mut r = rng();
        let mut layer = LayerNorm::new(6);
        // Non-trivial gamma/beta so their gradients are exercised.
        layer.gamma.value = Array1::from_shape_fn(6, |_| r.random_range(0.5..1.5));
        layer.beta.value = Array1::from_shape_fn(6, |_| r.random_range(-0.5..0.5));
        let x = rand_mat(&mut r, 4, 6);
        let coeffs = rand_mat(&mut r, 4, 6);
        layer.forward(&x);
        let dx = layer.backward(&coeffs);
        let gamma_grad = layer.gamma.grad.clone();
        let beta_grad = layer.beta.grad.clone();
        check_input_grad(&x, &dx, |xx| project(&layer.clone().forward(xx), &coeffs));
        for j in 0..6 {
            let mut up = layer.clone();
            up.gamma.value[j] += EPS;
            let mut down = layer.clone();
            down.gamma.value[j] -= EPS;
            let numeric =
                (project(&up.forward(&x), &coeffs) - project(&down.forward(&x), &coeffs))
                    / (2.0 * EPS);
            assert_abs_diff_eq!(gamma_grad[j], numeric, epsilon = TOL);
            let mut up = layer.clone();
            up.beta.value[j] += EPS;
            let mut down = layer.clone();
            down.beta.value[j] -= EPS;
            let numeric =
                (project(&up.forward(&x), &coeffs) - project(&down.forward(&x), &coeffs))
                    / (2.0 * EPS);
            assert_abs_diff_eq!(beta_grad[j], numeric, epsilon = TOL);
        }
    }

    #[test]
    fn attention_grads_match_finite_differences() {
        let mut r = rng();
        let mut layer = MultiHeadAttention::new(&mut r, 6, 2);
        let x = rand_mat(&mut r, 5, 6);
        let coeffs = rand_mat(&mut r, 5, 6);
        layer.forward(&x);
        let dx = layer.backward(&coeffs);
        check_input_grad(&x, &dx, |xx| project(&layer.clone().forward(xx), &coeffs));
    }

    #[test]
    fn attention_param_grads_match_finite_differences() {
        let mut r = rng();
        let mut layer = MultiHeadAttention::new(&mut r, 4, 2);
        let x = rand_mat(&mut r, 3, 4);
        let coeffs = rand_mat(&mut r, 3, 4);
        layer.forward(&x);
        layer.backward(&coeffs);
        // Spot-check a slice of each projection's weight gradient.
        let analytic: Vec<f64> = vec![
            layer.wq.w.grad[[0, 1]],
            layer.wk.w.grad[[1, 2]],
            layer.wv.w.grad[[2, 3]],
            layer.wo.w.grad[[3, 0]],
            layer.wo.b.grad[2],
        ];
        let mut numeric = Vec::new();
        let perturb = |get: &dyn Fn(&mut MultiHeadAttention) -> &mut f64| {
            let mut up = layer.clone();
            *get(&mut up) += EPS;
            let mut down = layer.clone();
            *get(&mut down) -= EPS;
            (project(&up.forward(&x), &coeffs) - project(&down.forward(&x), &coeffs))
                / (2.0 * EPS)
        };
        numeric.push(perturb(&|l| &mut l.wq.w.value[[0, 1]]));
        numeric.push(perturb(&|l| &mut l.wk.w.value[[1, 2]]));
        numeric.push(perturb(&|l| &mut l.wv.w.value[[2, 3]]));
        numeric.push(perturb(&|l| &mut l.wo.w.value[[3, 0]]));
        numeric.push(perturb(&|l| &mut l.wo.b.value[2]));
        for (a, n) in analytic.iter().zip(&numeric) {
            assert_abs_diff_eq!(a, n, epsilon = TOL);
        }
    }

    #[test]
    fn feed_forward_grads_match_finite_differences() {
        let mut r = rng();
        let mut layer = FeedForward::new(&mut r, 4, 7);
        let x = rand_mat(&mut r, 3, 4);
        let coeffs = rand_mat(&mut r, 3, 4);
        layer.forward(&x);
        let dx = layer.backward(&coeffs);
        check_input_grad(&x, &dx, |xx| project(&layer.clone().forward(xx), &coeffs));
    }

    #[test]
    fn block_grads_match_finite_differences() {
        let mut r = rng();
        let mut block = TransformerBlock::new(&mut r, 4, 2, 6);
        let x = rand_mat(&mut r, 4, 4);
        let coeffs = rand_mat(&mut r, 4, 4);
        block.forward(&x);
        let dx = block.backward(&coeffs);
        check_input_grad(&x, &dx, |xx| project(&block.clone().forward(xx), &coeffs));
    }

    #[test]
    fn embedding_accumulates_row_grads() {
        let mut r = rng();
        let mut emb = Embedding::new(&mut r, 5, 3);
        let dy = rand_mat(&mut r, 3, 3);
        emb.forward(&[2, 4, 2]);
        emb.backward(&dy);
        // Row 2 appears twice; its gradient is the sum of both rows of dy.
        let expect = &dy.row(0) + &dy.row(2);
        for j in 0..3 {
            assert_abs_diff_eq!(emb.table.grad[[2, j]], expect[j], epsilon = 1e-12);
            assert_abs_diff_eq!(emb.table.grad[[4, j]], dy[[1, j]], epsilon = 1e-12);
            assert_abs_diff_eq!(emb.table.grad[[0, j]], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn token_cross_entropy_grads_match_finite_differences() {
        let mut r = rng();
        let logits = rand_mat(&mut r, 4, 5);
        let targets = [0usize, 3, 2, 3];
        let weights = [1.0, 2.0, 0.5, 1.5, 1.0];
        for cw in [None, Some(&weights[..])] {
            let (_, dlogits) = token_cross_entropy(&logits, &targets, cw);
            for i in 0..4 {
                for j in 0..5 {
                    let mut up = logits.clone();
                    up[[i, j]] += EPS;
                    let mut down = logits.clone();
                    down[[i, j]] -= EPS;
                    let numeric = (token_cross_entropy(&up, &targets, cw).0
                        - token_cross_entropy(&down, &targets, cw).0)
                        / (2.0 * EPS);
                    assert_abs_diff_eq!(dlogits[[i, j]], numeric, epsilon = TOL);
                }
            }
        }
    }

    #[test]
    fn position_cross_entropy_grads_match_finite_differences() {
        let mut r = rng();
        let logits = Array1::from_shape_fn(7, |_| r.random_range(-2.0..2.0));
        let (_, dlogits) = position_cross_entropy(&logits, 4);
        for j in 0..7 {
            let mut up = logits.clone();
            up[j] += EPS;
            let mut down = logits.clone();
            down[j] -= EPS;
            let numeric = (position_cross_entropy(&up, 4).0
                - position_cross_entropy(&down, 4).0)
                / (2.0 * EPS);
            assert_abs_diff_eq!(dlogits[j], numeric, epsilon = TOL);
        }
    }

    #[test]
    fn adamw_decays_only_flagged_params() {
        let mut r = rng();
        let mut layer = Linear::new(&mut r, 2, 2);
        layer.b.value.fill(1.0);
        let w_before = layer.w.value.clone();
        let b_before = layer.b.value.clone();
        // Zero gradients: the Adam part contributes nothing, leaving pure
        // decay on the weight matrix.
        let mut opt = AdamW::new(0.1, 0.5);
        opt.step(&mut layer);
        assert_eq!(layer.b.value, b_before);
        for (after, before) in layer.w.value.iter().zip(w_before.iter()) {
            assert_abs_diff_eq!(*after, before * (1.0 - 0.1 * 0.5), epsilon = 1e-12);
        }
    }

    #[test]
    fn adamw_reduces_a_quadratic() {
        // Minimize ||x||² over a 1x4 "parameter" via the Linear weight.
        let mut r = rng();
        let mut layer = Linear::new(&mut r, 1, 4);
        let mut opt = AdamW::new(0.05, 0.0);
        let x = Array2::ones((1, 1));
        let loss = |l: &Linear| l.apply(&x).mapv(|v| v * v).sum();
        let initial = loss(&layer);
        for _ in 0..200 {
            let out = layer.forward(&x);
            layer.backward(&(out * 2.0));
            opt.step(&mut layer);
        }
        assert!(loss(&layer) < initial * 1e-3);
    }

    #[test]
    fn params_round_trip_through_flat_vectors() {
        let mut r = rng();
        let mut block = TransformerBlock::new(&mut r, 4, 2, 6);
        let mut shapes = Vec::new();
        let mut flats = Vec::new();
        block.visit_params(&mut |p| {
            shapes.push(p.shape());
            flats.push(p.flat());
        });
        let mut other = TransformerBlock::new(&mut r, 4, 2, 6);
        let mut i = 0;
        other.visit_params(&mut |p| {
            assert_eq!(p.shape(), shapes[i]);
            p.load_flat(&flats[i]);
            i += 1;
        });
        let x = rand_mat(&mut r, 3, 4);
        assert_eq!(block.forward(&x), other.forward(&x));
    }
}
