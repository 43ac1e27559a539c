//! Reverse-mode automatic differentiation over 2-D matrices.
//!
//! A [`Tape`] records every operation of a forward pass as a node holding its
//! value; [`Tape::backward`] walks the nodes in reverse and accumulates
//! gradients. The op set is exactly what the transformer forward pass needs:
//! GEMMs, row softmax, row layer norm, GELU, embedding gather, block-wise
//! broadcasts (per-sample conditioning), slicing/pasting for attention heads,
//! and a mean-squared-error head.
//!
//! Everything is generic over [`Scalar`] so the same code runs in `f32` for
//! the production pipeline and in `f64` for finite-difference gradient
//! checks.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2};
use rand::Rng;

/// Element type of all tensors: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + ndarray::LinalgScalar
    + ndarray::ScalarOperand
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Draw from N(0, 1) using the generator's native stream for this width.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample::<f32, _>(rand_distr::StandardNormal)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    }
}

pub type Matrix<T> = Array2<T>;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op<T: Scalar> {
    /// Input; `param_slot` links it back to a parameter registry index.
    Leaf { param_slot: Option<usize> },
    /// a.dot(b)
    MatMul(NodeId, NodeId),
    /// a.dot(b.t())
    MatMulNT(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, T),
    AddConst(NodeId, T),
    /// `a[B*block, d] * b[B, d]`, row r of `a` scaled by row r/block of `b`.
    BlockMul(NodeId, NodeId, usize),
    /// `a[B*block, d] + b[B, d]`.
    BlockAdd(NodeId, NodeId, usize),
    Gelu(NodeId),
    /// Row-wise layer norm without affine; caches mean and 1/std per row.
    LayerNorm { x: NodeId, mean: Vec<T>, rstd: Vec<T> },
    SoftmaxRows(NodeId),
    Slice { x: NodeId, r0: usize, c0: usize },
    /// Pieces pasted at (row, col) offsets into a zeroed output.
    Paste(Vec<(NodeId, usize, usize)>),
    /// Rows of `table` selected by index; duplicates accumulate on backward.
    Gather { table: NodeId, idx: Vec<usize> },
    /// Scalar mean of squared residuals against a constant target.
    MseLoss { pred: NodeId, target: Matrix<T> },
}

struct Node<T: Scalar> {
    value: Matrix<T>,
    grad: Option<Matrix<T>>,
    op: Op<T>,
}

/// Records a forward computation and computes gradients on demand.
pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
}

const LN_EPS: f64 = 1e-6;

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::with_capacity(256) }
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> NodeId {
        self.nodes.push(Node { value, grad: None, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Matrix<T> {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&Matrix<T>> {
        self.nodes[id.0].grad.as_ref()
    }

    pub fn scalar_value(&self, id: NodeId) -> T {
        self.nodes[id.0].value[[0, 0]]
    }

    pub fn leaf(&mut self, value: Matrix<T>) -> NodeId {
        self.push(value, Op::Leaf { param_slot: None })
    }

    pub fn param_leaf(&mut self, value: Matrix<T>, slot: usize) -> NodeId {
        self.push(value, Op::Leaf { param_slot: Some(slot) })
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        self.push(v, Op::MatMul(a, b))
    }

    /// `a.dot(b.t())` without materializing the transpose.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.dot(&self.nodes[b.0].value.t());
        self.push(v, Op::MatMulNT(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = &self.nodes[a.0].value + &self.nodes[b.0].value;
        self.push(v, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = &self.nodes[a.0].value * &self.nodes[b.0].value;
        self.push(v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> NodeId {
        let v = self.nodes[a.0].value.mapv(|x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_const(&mut self, a: NodeId, c: T) -> NodeId {
        let v = self.nodes[a.0].value.mapv(|x| x + c);
        self.push(v, Op::AddConst(a, c))
    }

    /// Multiply rows of `a` (grouped in blocks of `block`) by rows of `b`.
    pub fn block_mul(&mut self, a: NodeId, b: NodeId, block: usize) -> NodeId {
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        debug_assert_eq!(va.nrows(), vb.nrows() * block);
        debug_assert_eq!(va.ncols(), vb.ncols());
        let mut v = va.clone();
        for (r, mut row) in v.rows_mut().into_iter().enumerate() {
            let src = vb.row(r / block);
            for (x, m) in row.iter_mut().zip(src.iter()) {
                *x = *x * *m;
            }
        }
        self.push(v, Op::BlockMul(a, b, block))
    }

    /// Add rows of `b` (one per block of `block` rows) onto rows of `a`.
    pub fn block_add(&mut self, a: NodeId, b: NodeId, block: usize) -> NodeId {
        let va = &self.nodes[a.0].value;
        let vb = &self.nodes[b.0].value;
        debug_assert_eq!(va.nrows(), vb.nrows() * block);
        debug_assert_eq!(va.ncols(), vb.ncols());
        let mut v = va.clone();
        for (r, mut row) in v.rows_mut().into_iter().enumerate() {
            let src = vb.row(r / block);
            for (x, m) in row.iter_mut().zip(src.iter()) {
                *x = *x + *m;
            }
        }
        self.push(v, Op::BlockAdd(a, b, block))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a.0].value.mapv(gelu_val);
        self.push(v, Op::Gelu(a))
    }

    /// Per-row layer norm, no affine parameters.
    pub fn layer_norm(&mut self, x: NodeId) -> NodeId {
        let vx = &self.nodes[x.0].value;
        let n = vx.ncols();
        let inv_n = T::from_f64(1.0 / n as f64);
        let eps = T::from_f64(LN_EPS);
        let mut out = vx.clone();
        let mut means = Vec::with_capacity(vx.nrows());
        let mut rstds = Vec::with_capacity(vx.nrows());
        for mut row in out.rows_mut() {
            let mut mean = T::zero();
            for v in row.iter() {
                mean = mean + *v;
            }
            mean = mean * inv_n;
            let mut var = T::zero();
            for v in row.iter() {
                let d = *v - mean;
                var = var + d * d;
            }
            var = var * inv_n;
            let rstd = (var + eps).sqrt().recip();
            for v in row.iter_mut() {
                *v = (*v - mean) * rstd;
            }
            means.push(mean);
            rstds.push(rstd);
        }
        self.push(out, Op::LayerNorm { x, mean: means, rstd: rstds })
    }

    /// Numerically stable per-row softmax.
    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let mut v = self.nodes[a.0].value.clone();
        for mut row in v.rows_mut() {
            let mut max = T::neg_infinity();
            for x in row.iter() {
                if *x > max {
                    max = *x;
                }
            }
            let mut sum = T::zero();
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                sum = sum + *x;
            }
            let inv = sum.recip();
            for x in row.iter_mut() {
                *x = *x * inv;
            }
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    /// Copy out the `nr`×`nc` block at (`r0`,`c0`).
    pub fn slice(&mut self, x: NodeId, r0: usize, nr: usize, c0: usize, nc: usize) -> NodeId {
        let v = self.nodes[x.0].value.slice(s![r0..r0 + nr, c0..c0 + nc]).to_owned();
        self.push(v, Op::Slice { x, r0, c0 })
    }

    /// Paste pieces at (row, col) offsets into a zeroed (`rows`×`cols`) matrix.
    pub fn paste(&mut self, pieces: Vec<(NodeId, usize, usize)>, rows: usize, cols: usize) -> NodeId {
        let mut v = Matrix::<T>::zeros((rows, cols));
        for &(p, r0, c0) in &pieces {
            let pv = &self.nodes[p.0].value;
            v.slice_mut(s![r0..r0 + pv.nrows(), c0..c0 + pv.ncols()]).assign(pv);
        }
        self.push(v, Op::Paste(pieces))
    }

    /// Select rows of `table` by index.
    pub fn gather(&mut self, table: NodeId, idx: Vec<usize>) -> NodeId {
        let tv = &self.nodes[table.0].value;
        let mut v = Matrix::<T>::zeros((idx.len(), tv.ncols()));
        for (r, &i) in idx.iter().enumerate() {
            v.row_mut(r).assign(&tv.row(i));
        }
        self.push(v, Op::Gather { table, idx })
    }

    /// Mean over all elements of `(pred - target)^2`; yields a 1×1 node.
    pub fn mse_loss(&mut self, pred: NodeId, target: Matrix<T>) -> NodeId {
        let pv = &self.nodes[pred.0].value;
        debug_assert_eq!(pv.dim(), target.dim());
        let mut acc = T::zero();
        for (a, b) in pv.iter().zip(target.iter()) {
            let d = *a - *b;
            acc = acc + d * d;
        }
        let n = T::from_f64((pv.len()) as f64);
        let v = Matrix::from_elem((1, 1), acc / n);
        self.push(v, Op::MseLoss { pred, target })
    }

    fn grad_buf(&mut self, id: NodeId) -> &mut Matrix<T> {
        if self.nodes[id.0].grad.is_none() {
            let dim = self.nodes[id.0].value.dim();
            self.nodes[id.0].grad = Some(Matrix::zeros(dim));
        }
        self.nodes[id.0].grad.as_mut().unwrap()
    }

    /// Take (grad, value) out of a node temporarily to appease the borrow
    /// checker while accumulating into other nodes.
    fn take_grad(&mut self, id: NodeId) -> Option<Matrix<T>> {
        self.nodes[id.0].grad.take()
    }

    fn put_grad(&mut self, id: NodeId, g: Matrix<T>) {
        self.nodes[id.0].grad = Some(g);
    }

    /// Accumulate gradients of every node reachable from `root`,
    /// seeding d(root)/d(root) = 1. `root` must be 1×1.
    pub fn backward(&mut self, root: NodeId) {
        assert_eq!(self.nodes[root.0].value.dim(), (1, 1), "backward root must be scalar");
        self.nodes[root.0].grad = Some(Matrix::from_elem((1, 1), T::one()));
        for i in (0..=root.0).rev() {
            if self.nodes[i].grad.is_none() {
                continue;
            }
            let id = NodeId(i);
            let g = self.take_grad(id).unwrap();
            self.backprop_node(id, &g);
            self.put_grad(id, g);
        }
    }

    fn backprop_node(&mut self, id: NodeId, g: &Matrix<T>) {
        // Ops are immutable once pushed; clone the lightweight descriptors we
        // need so `self` can be re-borrowed mutably.
        match &self.nodes[id.0].op {
            Op::Leaf { .. } => {}
            Op::MatMul(a, b) => {
                let (a, b) = (*a, *b);
                let bv = self.nodes[b.0].value.clone();
                let av = self.nodes[a.0].value.clone();
                general_mat_mul(T::one(), g, &bv.t(), T::one(), self.grad_buf(a));
                general_mat_mul(T::one(), &av.t(), g, T::one(), self.grad_buf(b));
            }
            Op::MatMulNT(a, b) => {
                let (a, b) = (*a, *b);
                let bv = self.nodes[b.0].value.clone();
                let av = self.nodes[a.0].value.clone();
                general_mat_mul(T::one(), g, &bv, T::one(), self.grad_buf(a));
                general_mat_mul(T::one(), &g.t(), &av, T::one(), self.grad_buf(b));
            }
            Op::Add(a, b) => {
                let (a, b) = (*a, *b);
                *self.grad_buf(a) += g;
                *self.grad_buf(b) += g;
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                let bv = self.nodes[b.0].value.clone();
                let av = self.nodes[a.0].value.clone();
                self.grad_buf(a).zip_mut_with(&(g * &bv), |x, y| *x = *x + *y);
                self.grad_buf(b).zip_mut_with(&(g * &av), |x, y| *x = *x + *y);
            }
            Op::Scale(a, c) => {
                let (a, c) = (*a, *c);
                self.grad_buf(a).zip_mut_with(g, |x, y| *x = *x + *y * c);
            }
            Op::AddConst(a, _) => {
                let a = *a;
                *self.grad_buf(a) += g;
            }
            Op::BlockMul(a, b, block) => {
                let (a, b, block) = (*a, *b, *block);
                let av = self.nodes[a.0].value.clone();
                let bv = self.nodes[b.0].value.clone();
                {
                    let ga = self.grad_buf(a);
                    for (r, grow) in g.rows().into_iter().enumerate() {
                        let brow = bv.row(r / block);
                        let mut garow = ga.row_mut(r);
                        for ((x, gy), m) in garow.iter_mut().zip(grow.iter()).zip(brow.iter()) {
                            *x = *x + *gy * *m;
                        }
                    }
                }
                {
                    let gb = self.grad_buf(b);
                    for (r, grow) in g.rows().into_iter().enumerate() {
                        let arow = av.row(r);
                        let mut gbrow = gb.row_mut(r / block);
                        for ((x, gy), m) in gbrow.iter_mut().zip(grow.iter()).zip(arow.iter()) {
                            *x = *x + *gy * *m;
                        }
                    }
                }
            }
            Op::BlockAdd(a, b, block) => {
                let (a, b, block) = (*a, *b, *block);
                {
                    let ga = self.grad_buf(a);
                    *ga += g;
                }
                {
                    let gb = self.grad_buf(b);
                    for (r, grow) in g.rows().into_iter().enumerate() {
                        let mut gbrow = gb.row_mut(r / block);
                        for (x, gy) in gbrow.iter_mut().zip(grow.iter()) {
                            *x = *x + *gy;
                        }
                    }
                }
            }
            Op::Gelu(a) => {
                let a = *a;
                let av = self.nodes[a.0].value.clone();
                let ga = self.grad_buf(a);
                for ((x, gy), v) in ga.iter_mut().zip(g.iter()).zip(av.iter()) {
                    *x = *x + *gy * gelu_deriv(*v);
                }
            }
            Op::LayerNorm { x, mean: _, rstd } => {
                let x = *x;
                let rstd = rstd.clone();
                let yv = self.nodes[id.0].value.clone();
                let n = yv.ncols();
                let inv_n = T::from_f64(1.0 / n as f64);
                let gx = self.grad_buf(x);
                for (r, (grow, yrow)) in g.rows().into_iter().zip(yv.rows()).enumerate() {
                    let mut sum_g = T::zero();
                    let mut sum_gy = T::zero();
                    for (gy, y) in grow.iter().zip(yrow.iter()) {
                        sum_g = sum_g + *gy;
                        sum_gy = sum_gy + *gy * *y;
                    }
                    let mg = sum_g * inv_n;
                    let mgy = sum_gy * inv_n;
                    let rs = rstd[r];
                    let mut gxrow = gx.row_mut(r);
                    for ((xg, gy), y) in gxrow.iter_mut().zip(grow.iter()).zip(yrow.iter()) {
                        *xg = *xg + rs * (*gy - mg - *y * mgy);
                    }
                }
            }
            Op::SoftmaxRows(a) => {
                let a = *a;
                let yv = self.nodes[id.0].value.clone();
                let ga = self.grad_buf(a);
                for (r, (grow, yrow)) in g.rows().into_iter().zip(yv.rows()).enumerate() {
                    let mut dot = T::zero();
                    for (gy, y) in grow.iter().zip(yrow.iter()) {
                        dot = dot + *gy * *y;
                    }
                    let mut garow = ga.row_mut(r);
                    for ((xg, gy), y) in garow.iter_mut().zip(grow.iter()).zip(yrow.iter()) {
                        *xg = *xg + *y * (*gy - dot);
                    }
                }
            }
            Op::Slice { x, r0, c0 } => {
                let (x, r0, c0) = (*x, *r0, *c0);
                let (nr, nc) = g.dim();
                let gx = self.grad_buf(x);
                let mut region = gx.slice_mut(s![r0..r0 + nr, c0..c0 + nc]);
                region += g;
            }
            Op::Paste(pieces) => {
                let pieces = pieces.clone();
                for (p, r0, c0) in pieces {
                    let (nr, nc) = self.nodes[p.0].value.dim();
                    let sub = g.slice(s![r0..r0 + nr, c0..c0 + nc]).to_owned();
                    *self.grad_buf(p) += &sub;
                }
            }
            Op::Gather { table, idx } => {
                let (table, idx) = (*table, idx.clone());
                let gt = self.grad_buf(table);
                for (r, &i) in idx.iter().enumerate() {
                    let mut trow = gt.row_mut(i);
                    for (x, gy) in trow.iter_mut().zip(g.row(r).iter()) {
                        *x = *x + *gy;
                    }
                }
            }
            Op::MseLoss { pred, target } => {
                let pred = *pred;
                let target = target.clone();
                let scale = g[[0, 0]] * T::from_f64(2.0 / target.len() as f64);
                let pv = self.nodes[pred.0].value.clone();
                let gp = self.grad_buf(pred);
                for ((x, p), t) in gp.iter_mut().zip(pv.iter()).zip(target.iter()) {
                    *x = *x + scale * (*p - *t);
                }
            }
        }
    }

    /// Gradients of parameter leaves, as (slot, grad) pairs in tape order.
    pub fn param_grads(&self) -> Vec<(usize, &Matrix<T>)> {
        self.nodes
            .iter()
            .filter_map(|n| match (&n.op, &n.grad) {
                (Op::Leaf { param_slot: Some(s) }, Some(g)) => Some((*s, g)),
                _ => None,
            })
            .collect()
    }
}

fn gelu_val<T: Scalar>(x: T) -> T {
    let c = T::from_f64(0.7978845608028654); // sqrt(2/pi)
    let k = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    let inner = c * (x + k * x * x * x);
    half * x * (T::one() + inner.tanh())
}

fn gelu_deriv<T: Scalar>(x: T) -> T {
    let c = T::from_f64(0.7978845608028654);
    let k = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    let inner = c * (x + k * x * x * x);
    let t = inner.tanh();
    let sech2 = T::one() - t * t;
    let dinner = c * (T::one() + T::from_f64(3.0) * k * x * x);
    half * (T::one() + t) + half * x * sech2 * dinner
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix<f64> {
        Matrix::from_shape_fn((r, c), |_| f64::standard_normal(rng))
    }

    /// Finite-difference check of d(loss)/d(input) for a scalar-producing graph.
    fn fd_check<F>(build: F, input: Matrix<f64>, tol: f64)
    where
        F: Fn(&mut Tape<f64>, NodeId) -> NodeId,
    {
        let mut tape = Tape::new();
        let x = tape.leaf(input.clone());
        let loss = build(&mut tape, x);
        tape.backward(loss);
        let analytic = tape.grad(x).unwrap().clone();

        let h = 1e-6;
        let mut max_rel = 0.0f64;
        for i in 0..input.nrows() {
            for j in 0..input.ncols() {
                let mut plus = input.clone();
                plus[[i, j]] += h;
                let mut minus = input.clone();
                minus[[i, j]] -= h;
                let f = |m: Matrix<f64>| {
                    let mut t = Tape::new();
                    let x = t.leaf(m);
                    let l = build(&mut t, x);
                    t.scalar_value(l)
                };
                let fd = (f(plus) - f(minus)) / (2.0 * h);
                let a = analytic[[i, j]];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < tol, "max rel grad error {max_rel}");
    }

    #[test]
    fn matmul_grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = randn(&mut rng, 4, 3);
        let target = randn(&mut rng, 5, 3);
        fd_check(
            move |t, x| {
                let w = t.leaf(w.clone());
                let y = t.matmul(x, w);
                t.mse_loss(y, target.clone())
            },
            randn(&mut rng, 5, 4),
            1e-6,
        );
    }

    #[test]
    fn matmul_nt_grads_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = randn(&mut rng, 6, 4);
        let target = randn(&mut rng, 5, 6);
        fd_check(
            move |t, x| {
                let w = t.leaf(w.clone());
                let y = t.matmul_nt(x, w);
                t.mse_loss(y, target.clone())
            },
            randn(&mut rng, 5, 4),
            1e-6,
        );

        // Also check the gradient wrt the transposed operand.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = randn(&mut rng, 5, 4);
        let target = randn(&mut rng, 5, 6);
        fd_check(
            move |t, x| {
                let a = t.leaf(a.clone());
                let y = t.matmul_nt(a, x);
                t.mse_loss(y, target.clone())
            },
            randn(&mut rng, 6, 4),
            1e-6,
        );
    }

    #[test]
    fn softmax_layernorm_gelu_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = randn(&mut rng, 3, 5);
        fd_check(
            move |t, x| {
                let s = t.softmax_rows(x);
                let n = t.layer_norm(s);
                let gl = t.gelu(n);
                t.mse_loss(gl, target.clone())
            },
            randn(&mut rng, 3, 5),
            1e-5,
        );
    }

    #[test]
    fn block_ops_slice_paste_gather_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cond = randn(&mut rng, 2, 4);
        let table_idx = vec![0usize, 2, 1, 2, 0, 3];
        let target = randn(&mut rng, 6, 4);
        fd_check(
            move |t, x| {
                // x is a 4-row table; gather 6 rows, apply per-block affine,
                // slice two pieces and paste them back swapped.
                let g = t.gather(x, table_idx.clone());
                let c = t.leaf(cond.clone());
                let m = t.block_mul(g, c, 3);
                let a = t.block_add(m, c, 3);
                let top = t.slice(a, 0, 3, 0, 4);
                let bot = t.slice(a, 3, 3, 0, 4);
                let re = t.paste(vec![(bot, 0, 0), (top, 3, 0)], 6, 4);
                t.mse_loss(re, target.clone())
            },
            randn(&mut rng, 4, 4),
            1e-5,
        );
    }

    #[test]
    fn add_mul_scale_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let other = randn(&mut rng, 3, 3);
        let target = randn(&mut rng, 3, 3);
        fd_check(
            move |t, x| {
                let o = t.leaf(other.clone());
                let a = t.add(x, o);
                let m = t.mul(a, x);
                let s = t.scale(m, 0.37);
                let s = t.add_const(s, 1.5);
                t.mse_loss(s, target.clone())
            },
            randn(&mut rng, 3, 3),
            1e-5,
        );
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(array![[1.0, 2.0, 3.0], [-5.0, 0.0, 5.0]]);
        let s = tape.softmax_rows(x);
        for row in tape.value(s).rows() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gather_accumulates_duplicate_rows() {
        let mut tape = Tape::<f64>::new();
        let table = tape.leaf(array![[1.0, 0.0], [0.0, 1.0]]);
        let g = tape.gather(table, vec![0, 0, 1]);
        let loss = tape.mse_loss(g, Matrix::zeros((3, 2)));
        tape.backward(loss);
        let gt = tape.grad(table).unwrap();
        // Row 0 used twice: its gradient is twice the single-use row's scale.
        assert!((gt[[0, 0]] - 2.0 * gt[[1, 1]]).abs() < 1e-12);
    }
}
