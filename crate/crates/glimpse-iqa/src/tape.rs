//! Recorded-graph reverse-mode differentiation.
//!
//! Every primitive the model needs is recorded on a [`GraphTape`]; calling
//! [`GraphTape::backward`] replays the tape in exact reverse order and
//! accumulates vector-Jacobian products into per-slot gradient buffers.
//! Leaves that do not reach the loss keep zero gradients. An unrolled
//! episode is one tape, so backpropagation through time falls out of the
//! replay with no special casing.
//!
//! External gradient seeds can be injected at arbitrary slots before the
//! sweep; the REINFORCE term enters the location pathway that way, since
//! it has no differentiable forward value.

use crate::tensor::Tensor;

pub type ValueId = usize;

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    /// y = W·x + b with W: [out, in]
    Linear { x: ValueId, w: ValueId, b: ValueId },
    /// y = W·x (no bias); used for the recurrent connection
    MatVec { x: ValueId, w: ValueId },
    /// Same-padded cross-correlation plus per-channel bias
    Conv2d { x: ValueId, k: ValueId, b: ValueId },
    Relu { x: ValueId },
    HardTanh { x: ValueId },
    Softmax { x: ValueId },
    AvgPool { x: ValueId, size: usize },
    /// -log softmax(logits)[label]
    NllLoss { logits: ValueId, label: usize },
    /// |pred - target| for a scalar pred and constant target
    MaeLoss { pred: ValueId, target: f64 },
    Add { a: ValueId, b: ValueId },
    Scale { x: ValueId, c: f64 },
    /// Concatenation along axis 0 (channels for [c,h,w], elements for [n])
    Concat { parts: Vec<ValueId> },
    Reshape { x: ValueId },
    /// Gathers scalar slots into one vector
    StackScalars { parts: Vec<ValueId> },
    Dot { a: ValueId, b: ValueId },
}

pub struct GraphTape {
    values: Vec<Tensor>,
    ops: Vec<Op>,
}

/// Per-slot gradient buffers produced by a backward sweep.
pub struct Gradients {
    grads: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn grad(&self, id: ValueId) -> &[f64] {
        &self.grads[id]
    }
}

impl Default for GraphTape {
    fn default() -> Self {
        Self::new()
    }
}

impl GraphTape {
    pub fn new() -> Self {
        GraphTape { values: Vec::new(), ops: Vec::new() }
    }

    pub fn value(&self, id: ValueId) -> &Tensor {
        &self.values[id]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> ValueId {
        debug_assert!(value.is_finite(), "primitive produced non-finite values");
        let id = self.values.len();
        self.values.push(value);
        self.ops.push(op);
        id
    }

    pub fn leaf(&mut self, value: Tensor) -> ValueId {
        self.push(value, Op::Leaf)
    }

    pub fn linear(&mut self, x: ValueId, w: ValueId, b: ValueId) -> ValueId {
        let (xs, ws, bs) = (self.values[x].shape(), self.values[w].shape(), self.values[b].shape());
        assert_eq!(ws.len(), 2, "linear weight must be 2-D, got {ws:?}");
        assert_eq!(xs, &[ws[1]], "linear input {xs:?} does not match weight {ws:?}");
        assert_eq!(bs, &[ws[0]], "linear bias {bs:?} does not match weight {ws:?}");
        let out = matvec_acc(
            self.values[w].data(),
            self.values[x].data(),
            Some(self.values[b].data()),
        );
        self.push(Tensor::from_parts(vec![ws[0]], out), Op::Linear { x, w, b })
    }

    pub fn matvec(&mut self, x: ValueId, w: ValueId) -> ValueId {
        let (xs, ws) = (self.values[x].shape(), self.values[w].shape());
        assert_eq!(ws.len(), 2, "matvec weight must be 2-D, got {ws:?}");
        assert_eq!(xs, &[ws[1]], "matvec input {xs:?} does not match weight {ws:?}");
        let out = matvec_acc(self.values[w].data(), self.values[x].data(), None);
        self.push(Tensor::from_parts(vec![ws[0]], out), Op::MatVec { x, w })
    }

    pub fn conv2d(&mut self, x: ValueId, k: ValueId, b: ValueId) -> ValueId {
        let (xs, ks, bs) = (self.values[x].shape(), self.values[k].shape(), self.values[b].shape());
        assert_eq!(xs.len(), 3, "conv input must be [c,h,w], got {xs:?}");
        assert_eq!(ks.len(), 4, "conv kernel must be [co,ci,kh,kw], got {ks:?}");
        let (ci, h, w) = (xs[0], xs[1], xs[2]);
        let (co, kci, kh, kw) = (ks[0], ks[1], ks[2], ks[3]);
        assert_eq!(ci, kci, "conv channel mismatch: input {ci}, kernel {kci}");
        assert!(kh % 2 == 1 && kw % 2 == 1, "conv kernel sides must be odd, got {kh}x{kw}");
        assert_eq!(bs, &[co], "conv bias {bs:?} does not match kernel {ks:?}");
        let mut out = vec![0.0; co * h * w];
        for (o, plane) in out.chunks_mut(h * w).enumerate() {
            plane.fill(self.values[b].data()[o]);
        }
        conv_shifted_acc(
            self.values[k].data(),
            co,
            ci,
            kh,
            kw,
            self.values[x].data(),
            h,
            w,
            &mut out,
            false,
        );
        self.push(Tensor::from_parts(vec![co, h, w], out), Op::Conv2d { x, k, b })
    }

    pub fn relu(&mut self, x: ValueId) -> ValueId {
        let out: Vec<f64> = self.values[x].data().iter().map(|&v| v.max(0.0)).collect();
        let shape = self.values[x].shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::Relu { x })
    }

    pub fn hardtanh(&mut self, x: ValueId) -> ValueId {
        let out: Vec<f64> = self.values[x].data().iter().map(|&v| v.clamp(-1.0, 1.0)).collect();
        let shape = self.values[x].shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::HardTanh { x })
    }

    pub fn softmax(&mut self, x: ValueId) -> ValueId {
        assert!(!self.values[x].data().is_empty(), "softmax needs at least one element");
        let out = softmax_stable(self.values[x].data());
        let shape = self.values[x].shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::Softmax { x })
    }

    pub fn avg_pool(&mut self, x: ValueId, size: usize) -> ValueId {
        let xs = self.values[x].shape();
        assert_eq!(xs.len(), 3, "avg_pool input must be [c,h,w], got {xs:?}");
        let (c, h, w) = (xs[0], xs[1], xs[2]);
        assert!(
            size > 0 && h % size == 0 && w % size == 0,
            "pool size {size} does not divide {h}x{w}"
        );
        let (oh, ow) = (h / size, w / size);
        let count = (size * size) as f64;
        let data = self.values[x].data();
        let mut out = vec![0.0; c * oh * ow];
        for ch in 0..c {
            let plane = &data[ch * h * w..(ch + 1) * h * w];
            let oplane = &mut out[ch * oh * ow..(ch + 1) * oh * ow];
            for oi in 0..oh {
                for oj in 0..ow {
                    let mut acc = 0.0;
                    for di in 0..size {
                        let row = (oi * size + di) * w + oj * size;
                        for v in &plane[row..row + size] {
                            acc += *v;
                        }
                    }
                    oplane[oi * ow + oj] = acc / count;
                }
            }
        }
        self.push(Tensor::from_parts(vec![c, oh, ow], out), Op::AvgPool { x, size })
    }

    pub fn nll_loss(&mut self, logits: ValueId, label: usize) -> ValueId {
        let v = self.values[logits].data();
        assert!(label < v.len(), "label {label} out of range for {} logits", v.len());
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = v.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
        let loss = lse - v[label];
        self.push(Tensor::from_parts(vec![1], vec![loss]), Op::NllLoss { logits, label })
    }

    pub fn mae_loss(&mut self, pred: ValueId, target: f64) -> ValueId {
        let p = self.values[pred].item();
        self.push(
            Tensor::from_parts(vec![1], vec![(p - target).abs()]),
            Op::MaeLoss { pred, target },
        )
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> ValueId {
        assert_eq!(
            self.values[a].shape(),
            self.values[b].shape(),
            "add shape mismatch"
        );
        let out: Vec<f64> = self.values[a]
            .data()
            .iter()
            .zip(self.values[b].data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.values[a].shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::Add { a, b })
    }

    pub fn scale(&mut self, x: ValueId, c: f64) -> ValueId {
        let out: Vec<f64> = self.values[x].data().iter().map(|v| v * c).collect();
        let shape = self.values[x].shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::Scale { x, c })
    }

    /// Concatenates along axis 0; all trailing dimensions must agree.
    pub fn concat(&mut self, parts: &[ValueId]) -> ValueId {
        assert!(!parts.is_empty(), "concat of nothing");
        let tail = self.values[parts[0]].shape()[1..].to_vec();
        let mut dim0 = 0;
        for &p in parts {
            let s = self.values[p].shape();
            assert_eq!(&s[1..], &tail[..], "concat trailing dims mismatch");
            dim0 += s[0];
        }
        let mut out = Vec::with_capacity(dim0 * tail.iter().product::<usize>().max(1));
        for &p in parts {
            out.extend_from_slice(self.values[p].data());
        }
        let mut shape = vec![dim0];
        shape.extend_from_slice(&tail);
        self.push(Tensor::from_parts(shape, out), Op::Concat { parts: parts.to_vec() })
    }

    pub fn reshape(&mut self, x: ValueId, shape: Vec<usize>) -> ValueId {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, self.values[x].numel(), "reshape element count mismatch");
        let data = self.values[x].data().to_vec();
        self.push(Tensor::from_parts(shape, data), Op::Reshape { x })
    }

    pub fn stack_scalars(&mut self, parts: &[ValueId]) -> ValueId {
        assert!(!parts.is_empty(), "stack of nothing");
        let out: Vec<f64> = parts
            .iter()
            .map(|&p| {
                assert_eq!(self.values[p].numel(), 1, "stack_scalars takes scalar slots");
                self.values[p].item()
            })
            .collect();
        self.push(
            Tensor::from_parts(vec![parts.len()], out),
            Op::StackScalars { parts: parts.to_vec() },
        )
    }

    pub fn dot(&mut self, a: ValueId, b: ValueId) -> ValueId {
        assert_eq!(self.values[a].shape(), self.values[b].shape(), "dot shape mismatch");
        let s: f64 = self.values[a]
            .data()
            .iter()
            .zip(self.values[b].data())
            .map(|(x, y)| x * y)
            .sum();
        self.push(Tensor::from_parts(vec![1], vec![s]), Op::Dot { a, b })
    }

    /// Reverse sweep from a scalar loss. Equivalent to
    /// `backward_with_seeds(loss, &[])`.
    pub fn backward(&self, loss: ValueId) -> Gradients {
        self.backward_with_seeds(loss, &[])
    }

    /// Reverse sweep with extra gradient seeds added at the named slots
    /// before replay. Every leaf receives dLoss/dLeaf (plus seeded flows);
    /// slots on no path to the loss or a seed stay zero.
    pub fn backward_with_seeds(&self, loss: ValueId, seeds: &[(ValueId, Vec<f64>)]) -> Gradients {
        assert_eq!(self.values[loss].numel(), 1, "loss root must be scalar");
        let mut grads: Vec<Vec<f64>> = self.values.iter().map(|v| vec![0.0; v.numel()]).collect();
        grads[loss][0] = 1.0;
        for (id, seed) in seeds {
            assert_eq!(seed.len(), grads[*id].len(), "seed length mismatch at slot {id}");
            for (g, s) in grads[*id].iter_mut().zip(seed) {
                *g += s;
            }
        }
        for id in (0..self.ops.len()).rev() {
            if grads[id].iter().all(|&g| g == 0.0) {
                continue;
            }
            let gy = std::mem::take(&mut grads[id]);
            match &self.ops[id] {
                Op::Leaf => {}
                Op::Linear { x, w, b } => {
                    self.back_linear(*x, *w, Some(*b), &gy, &mut grads);
                }
                Op::MatVec { x, w } => {
                    self.back_linear(*x, *w, None, &gy, &mut grads);
                }
                Op::Conv2d { x, k, b } => {
                    let xs = self.values[*x].shape();
                    let ks = self.values[*k].shape();
                    let (ci, h, w) = (xs[0], xs[1], xs[2]);
                    let (co, kh, kw) = (ks[0], ks[2], ks[3]);
                    // d/dx: spread gy back through the kernel taps
                    conv_shifted_acc(
                        self.values[*k].data(),
                        co,
                        ci,
                        kh,
                        kw,
                        &gy,
                        h,
                        w,
                        &mut grads[*x],
                        true,
                    );
                    conv_kernel_grad(
                        &gy,
                        co,
                        self.values[*x].data(),
                        ci,
                        h,
                        w,
                        kh,
                        kw,
                        &mut grads[*k],
                    );
                    let gb = &mut grads[*b];
                    for (o, plane) in gy.chunks(h * w).enumerate() {
                        gb[o] += plane.iter().sum::<f64>();
                    }
                }
                Op::Relu { x } => {
                    let xin = self.values[*x].data();
                    for ((g, &gyv), &xv) in grads[*x].iter_mut().zip(&gy).zip(xin) {
                        if xv > 0.0 {
                            *g += gyv;
                        }
                    }
                }
                Op::HardTanh { x } => {
                    let xin = self.values[*x].data();
                    for ((g, &gyv), &xv) in grads[*x].iter_mut().zip(&gy).zip(xin) {
                        // subgradient 0 at the corners |x| == 1
                        if xv > -1.0 && xv < 1.0 {
                            *g += gyv;
                        }
                    }
                }
                Op::Softmax { x } => {
                    let y = self.values[id].data();
                    let dotp: f64 = gy.iter().zip(y).map(|(g, v)| g * v).sum();
                    for ((g, &gyv), &yv) in grads[*x].iter_mut().zip(&gy).zip(y) {
                        *g += yv * (gyv - dotp);
                    }
                }
                Op::AvgPool { x, size } => {
                    let xs = self.values[*x].shape();
                    let (c, h, w) = (xs[0], xs[1], xs[2]);
                    let (oh, ow) = (h / size, w / size);
                    let inv = 1.0 / (size * size) as f64;
                    let gx = &mut grads[*x];
                    for ch in 0..c {
                        let gyp = &gy[ch * oh * ow..(ch + 1) * oh * ow];
                        let gxp = &mut gx[ch * h * w..(ch + 1) * h * w];
                        for i in 0..h {
                            let orow = (i / size) * ow;
                            for j in 0..w {
                                gxp[i * w + j] += gyp[orow + j / size] * inv;
                            }
                        }
                    }
                }
                Op::NllLoss { logits, label } => {
                    let g = gy[0];
                    let sm = softmax_stable(self.values[*logits].data());
                    let gl = &mut grads[*logits];
                    for (i, (gv, &p)) in gl.iter_mut().zip(&sm).enumerate() {
                        let t = if i == *label { 1.0 } else { 0.0 };
                        *gv += g * (p - t);
                    }
                }
                Op::MaeLoss { pred, target } => {
                    let p = self.values[*pred].item();
                    // subgradient 0 at pred == target
                    let s = if p > *target {
                        1.0
                    } else if p < *target {
                        -1.0
                    } else {
                        0.0
                    };
                    grads[*pred][0] += gy[0] * s;
                }
                Op::Add { a, b } => {
                    for (g, &gyv) in grads[*a].iter_mut().zip(&gy) {
                        *g += gyv;
                    }
                    for (g, &gyv) in grads[*b].iter_mut().zip(&gy) {
                        *g += gyv;
                    }
                }
                Op::Scale { x, c } => {
                    for (g, &gyv) in grads[*x].iter_mut().zip(&gy) {
                        *g += c * gyv;
                    }
                }
                Op::Concat { parts } => {
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.values[p].numel();
                        for (g, &gyv) in grads[p].iter_mut().zip(&gy[offset..offset + n]) {
                            *g += gyv;
                        }
                        offset += n;
                    }
                }
                Op::Reshape { x } => {
                    for (g, &gyv) in grads[*x].iter_mut().zip(&gy) {
                        *g += gyv;
                    }
                }
                Op::StackScalars { parts } => {
                    for (i, &p) in parts.iter().enumerate() {
                        grads[p][0] += gy[i];
                    }
                }
                Op::Dot { a, b } => {
                    let g = gy[0];
                    let (av, bv) = (self.values[*a].data(), self.values[*b].data());
                    for (gv, &x) in grads[*a].iter_mut().zip(bv) {
                        *gv += g * x;
                    }
                    for (gv, &x) in grads[*b].iter_mut().zip(av) {
                        *gv += g * x;
                    }
                }
            }
            grads[id] = gy;
        }
        Gradients { grads }
    }

    fn back_linear(
        &self,
        x: ValueId,
        w: ValueId,
        b: Option<ValueId>,
        gy: &[f64],
        grads: &mut [Vec<f64>],
    ) {
        let wv = self.values[w].data();
        let xv = self.values[x].data();
        let n = xv.len();
        {
            let gx = &mut grads[x];
            for (o, &g) in gy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &wv[o * n..(o + 1) * n];
                for (gxv, &wv) in gx.iter_mut().zip(row) {
                    *gxv += g * wv;
                }
            }
        }
        {
            let gw = &mut grads[w];
            for (o, &g) in gy.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &mut gw[o * n..(o + 1) * n];
                for (gwv, &x) in row.iter_mut().zip(xv) {
                    *gwv += g * x;
                }
            }
        }
        if let Some(b) = b {
            for (gbv, &g) in grads[b].iter_mut().zip(gy) {
                *gbv += g;
            }
        }
    }
}

/// y = W·x (+ bias); W is [out, in] row-major.
fn matvec_acc(w: &[f64], x: &[f64], b: Option<&[f64]>) -> Vec<f64> {
    let n = x.len();
    let m = w.len() / n;
    let mut out = Vec::with_capacity(m);
    for o in 0..m {
        let row = &w[o * n..(o + 1) * n];
        let mut acc = match b {
            Some(bias) => bias[o],
            None => 0.0,
        };
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        out.push(acc);
    }
    out
}

fn softmax_stable(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Shared kernel for the conv forward pass and its input gradient.
///
/// Forward (`transpose == false`): `out[o,i,j] += k[o,c,p,q] * src[c,i+dp,j+dq]`
/// over valid in-bounds taps, where (dp, dq) = (p - ph, q - pw).
/// Input gradient (`transpose == true`) is the adjoint:
/// `out[c,i+dp,j+dq] += k[o,c,p,q] * src[o,i,j]` with the same tap ranges.
#[allow(clippy::too_many_arguments)]
fn conv_shifted_acc(
    k: &[f64],
    co: usize,
    ci: usize,
    kh: usize,
    kw: usize,
    src: &[f64],
    h: usize,
    w: usize,
    out: &mut [f64],
    transpose: bool,
) {
    let ph = (kh / 2) as isize;
    let pw = (kw / 2) as isize;
    let (outer, inner) = if transpose { (ci, co) } else { (co, ci) };
    for a in 0..outer {
        let oplane = &mut out[a * h * w..(a + 1) * h * w];
        for b in 0..inner {
            let splane = &src[b * h * w..(b + 1) * h * w];
            let (o, c) = if transpose { (b, a) } else { (a, b) };
            let kbase = ((o * ci + c) * kh) * kw;
            for p in 0..kh {
                let dp = p as isize - ph;
                let i0 = (-dp).max(0) as usize;
                let i1 = (h as isize).min(h as isize - dp) as usize;
                for q in 0..kw {
                    let dq = q as isize - pw;
                    let kv = k[kbase + p * kw + q];
                    if kv == 0.0 {
                        continue;
                    }
                    let j0 = (-dq).max(0) as usize;
                    let j1 = (w as isize).min(w as isize - dq) as usize;
                    if j0 >= j1 {
                        continue;
                    }
                    let len = j1 - j0;
                    for i in i0..i1 {
                        let si = (i as isize + dp) as usize;
                        let sj0 = (j0 as isize + dq) as usize;
                        if transpose {
                            let dst = &mut oplane[si * w + sj0..si * w + sj0 + len];
                            let srow = &splane[i * w + j0..i * w + j1];
                            for (d, s) in dst.iter_mut().zip(srow) {
                                *d += kv * s;
                            }
                        } else {
                            let dst = &mut oplane[i * w + j0..i * w + j1];
                            let srow = &splane[si * w + sj0..si * w + sj0 + len];
                            for (d, s) in dst.iter_mut().zip(srow) {
                                *d += kv * s;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// dK[o,c,p,q] += sum over valid (i,j) of gy[o,i,j] * x[c, i+dp, j+dq].
#[allow(clippy::too_many_arguments)]
fn conv_kernel_grad(
    gy: &[f64],
    co: usize,
    x: &[f64],
    ci: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    gk: &mut [f64],
) {
    let ph = (kh / 2) as isize;
    let pw = (kw / 2) as isize;
    for o in 0..co {
        let gplane = &gy[o * h * w..(o + 1) * h * w];
        for c in 0..ci {
            let xplane = &x[c * h * w..(c + 1) * h * w];
            let kbase = ((o * ci + c) * kh) * kw;
            for p in 0..kh {
                let dp = p as isize - ph;
                let i0 = (-dp).max(0) as usize;
                let i1 = (h as isize).min(h as isize - dp) as usize;
                for q in 0..kw {
                    let dq = q as isize - pw;
                    let j0 = (-dq).max(0) as usize;
                    let j1 = (w as isize).min(w as isize - dq) as usize;
                    if j0 >= j1 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for i in i0..i1 {
                        let si = (i as isize + dp) as usize;
                        let grow = &gplane[i * w + j0..i * w + j1];
                        let sj0 = (j0 as isize + dq) as usize;
                        let xrow = &xplane[si * w + sj0..si * w + sj0 + (j1 - j0)];
                        for (g, xv) in grow.iter().zip(xrow) {
                            acc += g * xv;
                        }
                    }
                    gk[kbase + p * kw + q] += acc;
                }
            }
        }
    }
}

/// Central finite differences, (f(x+εe) - f(x-εe)) / 2ε per coordinate.
/// The reference oracle for every analytic gradient in the crate.
pub fn finite_diff_grad<F>(mut f: F, x: &Tensor, step: f64) -> Tensor
where
    F: FnMut(&Tensor) -> f64,
{
    let mut probe = x.clone();
    let mut grad = vec![0.0; x.numel()];
    for i in 0..x.numel() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - step;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    Tensor::new(x.shape().to_vec(), grad)
}

/// Relative error with an absolute floor, used by all gradient checks.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn rand_tensor(shape: Vec<usize>, rng: &mut impl Rng) -> Tensor {
        let numel: usize = shape.iter().product();
        let data = (0..numel).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        Tensor::new(shape, data)
    }

    /// Checks d(probe . op(x))/dx against finite differences for one input
    /// of the op, with all other inputs held fixed.
    fn check_input_grad<F>(build: F, inputs: &[Tensor], wrt: usize, tol: f64)
    where
        F: Fn(&mut GraphTape, &[ValueId]) -> ValueId,
    {
        let mut rng = stream(99, &[wrt as u64]);
        let mut tape = GraphTape::new();
        let ids: Vec<ValueId> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &ids);
        let probe = rand_tensor(tape.value(out).shape().to_vec(), &mut rng);
        let pid = tape.leaf(probe.clone());
        let loss = tape.dot(out, pid);
        let grads = tape.backward(loss);
        let analytic = grads.grad(ids[wrt]).to_vec();

        let numeric = finite_diff_grad(
            |x| {
                let mut t = GraphTape::new();
                let ids: Vec<ValueId> = inputs
                    .iter()
                    .enumerate()
                    .map(|(i, inp)| t.leaf(if i == wrt { x.clone() } else { inp.clone() }))
                    .collect();
                let out = build(&mut t, &ids);
                let pid = t.leaf(probe.clone());
                let loss = t.dot(out, pid);
                t.value(loss).item()
            },
            &inputs[wrt],
            1e-5,
        );
        for (i, (&a, &n)) in analytic.iter().zip(numeric.data()).enumerate() {
            let e = rel_err(a, n, 1e-3);
            assert!(e < tol, "grad mismatch at {i}: analytic {a}, numeric {n}, rel {e}");
        }
    }

    // ── linear ─────────────────────────────────────────────────────────

    #[test]
    fn linear_identity() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        let w = tape.leaf(Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]));
        let b = tape.leaf(Tensor::from_vec(vec![0.0, 0.0]));
        let y = tape.linear(x, w, b);
        assert_eq!(tape.value(y).data(), &[1.0, 2.0]);
    }

    #[test]
    fn linear_forced_arithmetic() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 1.0]));
        let w = tape.leaf(Tensor::new(vec![1, 2], vec![1.0, 1.0]));
        let b = tape.leaf(Tensor::from_vec(vec![-2.0]));
        let y = tape.linear(x, w, b);
        assert_eq!(tape.value(y).data(), &[0.0]);
    }

    #[test]
    fn linear_matches_nested_loop_oracle() {
        let mut rng = stream(1, &[0]);
        let x = rand_tensor(vec![5], &mut rng);
        let w = rand_tensor(vec![3, 5], &mut rng);
        let b = rand_tensor(vec![3], &mut rng);
        let mut tape = GraphTape::new();
        let (xi, wi, bi) = (tape.leaf(x.clone()), tape.leaf(w.clone()), tape.leaf(b.clone()));
        let y = tape.linear(xi, wi, bi);
        // independent nested-loop dot-product oracle
        for o in 0..3 {
            let mut acc = b.data()[o];
            for i in 0..5 {
                acc += w.data()[o * 5 + i] * x.data()[i];
            }
            assert!((tape.value(y).data()[o] - acc).abs() < 1e-12);
        }
    }

    #[test]
    #[should_panic(expected = "does not match")]
    fn linear_shape_mismatch_panics() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0, 3.0]));
        let w = tape.leaf(Tensor::new(vec![2, 2], vec![1.0; 4]));
        let b = tape.leaf(Tensor::from_vec(vec![0.0, 0.0]));
        tape.linear(x, w, b);
    }

    #[test]
    fn linear_gradients_exact() {
        let mut rng = stream(2, &[0]);
        let inputs = vec![
            rand_tensor(vec![5], &mut rng),
            rand_tensor(vec![3, 5], &mut rng),
            rand_tensor(vec![3], &mut rng),
        ];
        for wrt in 0..3 {
            check_input_grad(|t, ids| t.linear(ids[0], ids[1], ids[2]), &inputs, wrt, 1e-6);
        }
    }

    // ── conv2d ─────────────────────────────────────────────────────────

    #[test]
    fn conv_1x1_scaling() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::new(vec![1, 3, 3], vec![1.0; 9]));
        let k = tape.leaf(Tensor::new(vec![1, 1, 1, 1], vec![2.0]));
        let b = tape.leaf(Tensor::from_vec(vec![0.0]));
        let y = tape.conv2d(x, k, b);
        assert!(tape.value(y).data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn conv_3x3_zero_padding() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::new(vec![1, 3, 3], vec![1.0; 9]));
        let k = tape.leaf(Tensor::new(vec![1, 1, 3, 3], vec![1.0; 9]));
        let b = tape.leaf(Tensor::from_vec(vec![0.0]));
        let y = tape.conv2d(x, k, b);
        let out = tape.value(y).data();
        assert_eq!(out[4], 9.0); // center: full 3x3 support
        for corner in [0, 2, 6, 8] {
            assert_eq!(out[corner], 4.0); // corners: 2x2 in-bounds support
        }
    }

    /// Six-nested-loop reference convolution (zero-padded, same size).
    fn conv_oracle(x: &Tensor, k: &Tensor, b: &Tensor) -> Vec<f64> {
        let (ci, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (co, kh, kw) = (k.shape()[0], k.shape()[2], k.shape()[3]);
        let (ph, pw) = (kh as isize / 2, kw as isize / 2);
        let mut out = vec![0.0; co * h * w];
        for o in 0..co {
            for i in 0..h {
                for j in 0..w {
                    let mut acc = b.data()[o];
                    for c in 0..ci {
                        for p in 0..kh {
                            for q in 0..kw {
                                let si = i as isize + p as isize - ph;
                                let sj = j as isize + q as isize - pw;
                                if si >= 0 && si < h as isize && sj >= 0 && sj < w as isize {
                                    acc += k.data()[((o * ci + c) * kh + p) * kw + q]
                                        * x.data()[(c * h + si as usize) * w + sj as usize];
                                }
                            }
                        }
                    }
                    out[(o * h + i) * w + j] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_six_loop_oracle() {
        let mut rng = stream(3, &[0]);
        let x = rand_tensor(vec![2, 8, 8], &mut rng);
        let k = rand_tensor(vec![4, 2, 5, 5], &mut rng);
        let b = rand_tensor(vec![4], &mut rng);
        let mut tape = GraphTape::new();
        let (xi, ki, bi) = (tape.leaf(x.clone()), tape.leaf(k.clone()), tape.leaf(b.clone()));
        let y = tape.conv2d(xi, ki, bi);
        let want = conv_oracle(&x, &k, &b);
        for (got, want) in tape.value(y).data().iter().zip(&want) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    #[should_panic(expected = "odd")]
    fn conv_even_kernel_rejected() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::new(vec![1, 4, 4], vec![0.0; 16]));
        let k = tape.leaf(Tensor::new(vec![1, 1, 2, 2], vec![0.0; 4]));
        let b = tape.leaf(Tensor::from_vec(vec![0.0]));
        tape.conv2d(x, k, b);
    }

    #[test]
    fn conv_gradients_match_finite_differences() {
        let mut rng = stream(4, &[0]);
        let inputs = vec![
            rand_tensor(vec![2, 6, 6], &mut rng),
            rand_tensor(vec![3, 2, 3, 3], &mut rng),
            rand_tensor(vec![3], &mut rng),
        ];
        for wrt in 0..3 {
            check_input_grad(|t, ids| t.conv2d(ids[0], ids[1], ids[2]), &inputs, wrt, 1e-6);
        }
    }

    // ── activations ────────────────────────────────────────────────────

    #[test]
    fn relu_values() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![-1.0, 0.0, 2.0]));
        let y = tape.relu(x);
        assert_eq!(tape.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn hardtanh_values() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![-3.0, 0.5, 2.0]));
        let y = tape.hardtanh(x);
        assert_eq!(tape.value(y).data(), &[-1.0, 0.5, 1.0]);
    }

    #[test]
    fn activation_gradients_away_from_kinks() {
        // values chosen away from 0 and +-1 so central differences are valid
        let x = Tensor::from_vec(vec![-1.7, -0.58, 0.33, 0.8, 1.9]);
        check_input_grad(|t, ids| t.relu(ids[0]), &[x.clone()], 0, 1e-6);
        check_input_grad(|t, ids| t.hardtanh(ids[0]), &[x], 0, 1e-6);
    }

    // ── softmax ────────────────────────────────────────────────────────

    #[test]
    fn softmax_symmetry_and_arithmetic() {
        let mut tape = GraphTape::new();
        let a = tape.leaf(Tensor::from_vec(vec![0.0, 0.0]));
        let sa = tape.softmax(a);
        assert_eq!(tape.value(sa).data(), &[0.5, 0.5]);

        let b = tape.leaf(Tensor::from_vec(vec![2.0_f64.ln(), 0.0]));
        let sb = tape.softmax(b);
        assert!((tape.value(sb).data()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((tape.value(sb).data()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_no_overflow_on_huge_inputs() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1000.0, 1000.0]));
        let y = tape.softmax(x);
        assert_eq!(tape.value(y).data(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_gradient() {
        let mut rng = stream(5, &[0]);
        let x = rand_tensor(vec![7], &mut rng);
        check_input_grad(|t, ids| t.softmax(ids[0]), &[x], 0, 1e-6);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            vals in proptest::collection::vec(-50.0_f64..50.0, 1..12),
            shift in -100.0_f64..100.0,
        ) {
            let mut tape = GraphTape::new();
            let a = tape.leaf(Tensor::from_vec(vals.clone()));
            let sa = tape.softmax(a);
            let sum: f64 = tape.value(sa).data().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);

            let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
            let b = tape.leaf(Tensor::from_vec(shifted));
            let sb = tape.softmax(b);
            for (x, y) in tape.value(sa).data().iter().zip(tape.value(sb).data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    // ── avg_pool ───────────────────────────────────────────────────────

    #[test]
    fn avg_pool_ones() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::new(vec![1, 4, 4], vec![1.0; 16]));
        let y = tape.avg_pool(x, 2);
        assert_eq!(tape.value(y).shape(), &[1, 2, 2]);
        assert!(tape.value(y).data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn avg_pool_mean() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::new(vec![1, 2, 2], vec![1.0, 3.0, 5.0, 7.0]));
        let y = tape.avg_pool(x, 2);
        assert_eq!(tape.value(y).data(), &[4.0]);
    }

    #[test]
    fn avg_pool_matches_block_oracle_exactly() {
        let mut rng = stream(6, &[0]);
        let x = rand_tensor(vec![3, 8, 8], &mut rng);
        let mut tape = GraphTape::new();
        let xi = tape.leaf(x.clone());
        let y = tape.avg_pool(xi, 2);
        for c in 0..3 {
            for oi in 0..4 {
                for oj in 0..4 {
                    let mut acc = 0.0;
                    for di in 0..2 {
                        for dj in 0..2 {
                            acc += x.data()[(c * 8 + oi * 2 + di) * 8 + oj * 2 + dj];
                        }
                    }
                    let got = tape.value(y).data()[(c * 4 + oi) * 4 + oj];
                    assert_eq!(got, acc * 0.25);
                }
            }
        }
    }

    #[test]
    #[should_panic(expected = "does not divide")]
    fn avg_pool_non_divisible_rejected() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::new(vec![1, 5, 5], vec![0.0; 25]));
        tape.avg_pool(x, 2);
    }

    #[test]
    fn avg_pool_gradient() {
        let mut rng = stream(7, &[0]);
        let x = rand_tensor(vec![2, 4, 4], &mut rng);
        check_input_grad(|t, ids| t.avg_pool(ids[0], 2), &[x], 0, 1e-6);
    }

    // ── losses ─────────────────────────────────────────────────────────

    #[test]
    fn nll_uniform_case() {
        let mut tape = GraphTape::new();
        let logits = tape.leaf(Tensor::from_vec(vec![0.0, 0.0]));
        let loss = tape.nll_loss(logits, 0);
        assert!((tape.value(loss).item() - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nll_saturated_case() {
        let mut tape = GraphTape::new();
        let logits = tape.leaf(Tensor::from_vec(vec![10.0, -10.0]));
        let loss = tape.nll_loss(logits, 0);
        assert!(tape.value(loss).item() < 1e-8);
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn nll_label_out_of_range() {
        let mut tape = GraphTape::new();
        let logits = tape.leaf(Tensor::from_vec(vec![0.0, 0.0]));
        tape.nll_loss(logits, 2);
    }

    #[test]
    fn nll_gradient_k15() {
        let mut rng = stream(8, &[0]);
        let logits = rand_tensor(vec![15], &mut rng);
        let analytic = {
            let mut tape = GraphTape::new();
            let l = tape.leaf(logits.clone());
            let loss = tape.nll_loss(l, 4);
            tape.backward(loss).grad(l).to_vec()
        };
        let numeric = finite_diff_grad(
            |x| {
                let mut t = GraphTape::new();
                let l = t.leaf(x.clone());
                let loss = t.nll_loss(l, 4);
                t.value(loss).item()
            },
            &logits,
            1e-5,
        );
        for (&a, &n) in analytic.iter().zip(numeric.data()) {
            assert!(rel_err(a, n, 1e-3) < 1e-6, "{a} vs {n}");
        }
    }

    #[test]
    fn mae_values_and_batch_mean() {
        let mut tape = GraphTape::new();
        let a = tape.leaf(Tensor::scalar(3.0));
        let la = tape.mae_loss(a, 3.0);
        assert_eq!(tape.value(la).item(), 0.0);
        let b = tape.leaf(Tensor::scalar(1.0));
        let lb = tape.mae_loss(b, 4.5);
        assert_eq!(tape.value(lb).item(), 3.5);

        // batch of seeded pairs: mean equals a plain loop oracle
        let mut rng = stream(9, &[0]);
        let pairs: Vec<(f64, f64)> =
            (0..32).map(|_| (rng.gen::<f64>() * 9.0, rng.gen::<f64>() * 9.0)).collect();
        let mut tape = GraphTape::new();
        let losses: Vec<ValueId> = pairs
            .iter()
            .map(|&(p, t)| {
                let s = tape.leaf(Tensor::scalar(p));
                tape.mae_loss(s, t)
            })
            .collect();
        let stacked = tape.stack_scalars(&losses);
        let ones = tape.leaf(Tensor::from_vec(vec![1.0 / 32.0; 32]));
        let mean = tape.dot(stacked, ones);
        let oracle: f64 = pairs.iter().map(|&(p, t)| (p - t).abs()).sum::<f64>() / 32.0;
        assert!((tape.value(mean).item() - oracle).abs() < 1e-12);
    }

    // ── backward structure ─────────────────────────────────────────────

    #[test]
    fn backward_of_sum_is_ones() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![3.0, -2.0, 5.0]));
        let ones = tape.leaf(Tensor::from_vec(vec![1.0; 3]));
        let loss = tape.dot(x, ones);
        let grads = tape.backward(loss);
        assert_eq!(grads.grad(x), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn shared_weight_accumulates_both_paths() {
        let mut rng = stream(10, &[0]);
        let x = rand_tensor(vec![4], &mut rng);
        let w = rand_tensor(vec![3, 4], &mut rng);
        let b = rand_tensor(vec![3], &mut rng);
        let probe = rand_tensor(vec![3], &mut rng);

        let grad_double = {
            let mut tape = GraphTape::new();
            let (xi, wi, bi) = (tape.leaf(x.clone()), tape.leaf(w.clone()), tape.leaf(b.clone()));
            let y1 = tape.linear(xi, wi, bi);
            let y2 = tape.linear(xi, wi, bi);
            let sum = tape.add(y1, y2);
            let p = tape.leaf(probe.clone());
            let loss = tape.dot(sum, p);
            tape.backward(loss).grad(wi).to_vec()
        };
        let grad_single = {
            let mut tape = GraphTape::new();
            let (xi, wi, bi) = (tape.leaf(x), tape.leaf(w), tape.leaf(b));
            let y = tape.linear(xi, wi, bi);
            let p = tape.leaf(probe);
            let loss = tape.dot(y, p);
            tape.backward(loss).grad(wi).to_vec()
        };
        for (d, s) in grad_double.iter().zip(&grad_single) {
            assert!((d - 2.0 * s).abs() < 1e-12);
        }
    }

    #[test]
    fn dag_equals_expanded_tree() {
        // y = relu(W x); loss = probe.(y + y) with shared subexpression vs
        // recomputing relu(W x) twice as separate nodes
        let mut rng = stream(11, &[0]);
        let x = rand_tensor(vec![4], &mut rng);
        let w = rand_tensor(vec![4, 4], &mut rng);
        let probe = rand_tensor(vec![4], &mut rng);

        let shared = {
            let mut tape = GraphTape::new();
            let (xi, wi) = (tape.leaf(x.clone()), tape.leaf(w.clone()));
            let y = tape.matvec(xi, wi);
            let y = tape.relu(y);
            let s = tape.add(y, y);
            let p = tape.leaf(probe.clone());
            let loss = tape.dot(s, p);
            let g = tape.backward(loss);
            (g.grad(xi).to_vec(), g.grad(wi).to_vec())
        };
        let expanded = {
            let mut tape = GraphTape::new();
            let (xi, wi) = (tape.leaf(x), tape.leaf(w));
            let y1 = tape.matvec(xi, wi);
            let y1 = tape.relu(y1);
            let y2 = tape.matvec(xi, wi);
            let y2 = tape.relu(y2);
            let s = tape.add(y1, y2);
            let p = tape.leaf(probe);
            let loss = tape.dot(s, p);
            let g = tape.backward(loss);
            (g.grad(xi).to_vec(), g.grad(wi).to_vec())
        };
        // accumulation order differs between the two graphs, so allow
        // round-off at the last ulp
        for (a, b) in shared.0.iter().zip(&expanded.0).chain(shared.1.iter().zip(&expanded.1)) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn unreachable_leaves_get_zero() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        let unused = tape.leaf(Tensor::from_vec(vec![5.0]));
        let ones = tape.leaf(Tensor::from_vec(vec![1.0, 1.0]));
        let loss = tape.dot(x, ones);
        let grads = tape.backward(loss);
        assert_eq!(grads.grad(unused), &[0.0]);
    }

    #[test]
    #[should_panic(expected = "scalar")]
    fn non_scalar_loss_rejected() {
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        tape.backward(x);
    }

    #[test]
    fn replay_is_bit_identical() {
        let run = || {
            let mut rng = stream(12, &[0]);
            let x = rand_tensor(vec![6], &mut rng);
            let w1 = rand_tensor(vec![5, 6], &mut rng);
            let b1 = rand_tensor(vec![5], &mut rng);
            let w2 = rand_tensor(vec![3, 5], &mut rng);
            let b2 = rand_tensor(vec![3], &mut rng);
            let mut tape = GraphTape::new();
            let (xi, w1i, b1i) = (tape.leaf(x), tape.leaf(w1), tape.leaf(b1));
            let (w2i, b2i) = (tape.leaf(w2), tape.leaf(b2));
            let h = tape.linear(xi, w1i, b1i);
            let h = tape.relu(h);
            let y = tape.linear(h, w2i, b2i);
            let sm = tape.softmax(y);
            let loss = tape.nll_loss(sm, 1);
            let g = tape.backward(loss);
            (
                tape.value(loss).item().to_bits(),
                g.grad(w1i).iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn injected_seeds_flow_through() {
        // seed at an intermediate slot adds W^T seed to x even though the
        // loss itself does not depend on that path
        let mut tape = GraphTape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]));
        let w = tape.leaf(Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 3.0]));
        let y = tape.matvec(x, w);
        let z = tape.leaf(Tensor::scalar(0.0));
        let loss = tape.mae_loss(z, 0.0);
        let grads = tape.backward_with_seeds(loss, &[(y, vec![1.0, 1.0])]);
        assert_eq!(grads.grad(x), &[1.0, 3.0]);
    }

    // ── finite differences oracle ──────────────────────────────────────

    #[test]
    fn fd_of_sum_is_ones() {
        let x = Tensor::from_vec(vec![0.3, -1.2, 4.0]);
        let g = finite_diff_grad(|t| t.data().iter().sum(), &x, 1e-5);
        for &v in g.data() {
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn fd_of_dot_square() {
        let x = Tensor::from_vec(vec![1.0, 2.0]);
        let g = finite_diff_grad(|t| t.data().iter().map(|v| v * v).sum(), &x, 1e-5);
        assert!((g.data()[0] - 2.0).abs() < 1e-8);
        assert!((g.data()[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn fd_agrees_with_backward_on_two_layer_net() {
        let mut rng = stream(13, &[0]);
        let x = rand_tensor(vec![6], &mut rng);
        let w1 = rand_tensor(vec![5, 6], &mut rng);
        let b1 = rand_tensor(vec![5], &mut rng);
        let w2 = rand_tensor(vec![1, 5], &mut rng);
        let b2 = rand_tensor(vec![1], &mut rng);

        let eval = |w: &Tensor| {
            let mut tape = GraphTape::new();
            let (xi, w1i, b1i) = (tape.leaf(x.clone()), tape.leaf(w.clone()), tape.leaf(b1.clone()));
            let (w2i, b2i) = (tape.leaf(w2.clone()), tape.leaf(b2.clone()));
            let h = tape.linear(xi, w1i, b1i);
            let h = tape.relu(h);
            let y = tape.linear(h, w2i, b2i);
            t_item(&tape, y)
        };
        fn t_item(tape: &GraphTape, id: ValueId) -> f64 {
            tape.value(id).item()
        }

        let analytic = {
            let mut tape = GraphTape::new();
            let (xi, w1i, b1i) = (tape.leaf(x.clone()), tape.leaf(w1.clone()), tape.leaf(b1.clone()));
            let (w2i, b2i) = (tape.leaf(w2.clone()), tape.leaf(b2.clone()));
            let h = tape.linear(xi, w1i, b1i);
            let h = tape.relu(h);
            let y = tape.linear(h, w2i, b2i);
            tape.backward(y).grad(w1i).to_vec()
        };
        let numeric = finite_diff_grad(eval, &w1, 1e-5);
        for (&a, &n) in analytic.iter().zip(numeric.data()) {
            assert!(rel_err(a, n, 1e-3) < 1e-6, "{a} vs {n}");
        }
    }
}
