//! Reverse-mode tape with coarse fused operations.
//!
//! Values live in one arena; parameters are read from an external flat slice so that
//! many assemblies can share a single parameter store.

use super::params::{ConvParams, GruParams, LinearParams};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Linear { x: NodeId, p: LinearParams },
    Concat { parts: (usize, usize) },
    /// `cache` holds reset gate, update gate, candidate and the hidden projection.
    Gru { x: NodeId, h: NodeId, p: GruParams, cache: usize },
    Tanh(NodeId),
    Relu(NodeId),
    Conv { x: NodeId, p: ConvParams, height: usize, width: usize },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    off: usize,
    len: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Tape<S> {
    vals: Vec<S>,
    nodes: Vec<Node>,
    cache: Vec<S>,
    concat_parts: Vec<NodeId>,
}

#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [S::zero(); 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let i = c * 8;
        for k in 0..8 {
            acc[k] = acc[k] + a[i + k] * b[i + k];
        }
    }
    let mut tail = S::zero();
    for i in chunks * 8..n {
        tail = tail + a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
fn axpy<S: Scalar>(y: &mut [S], alpha: S, x: &[S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// `out[i] = b[i] + W[i] . x` with `W` row-major.
fn matvec<S: Scalar>(out: &mut [S], w: &[S], b: &[S], x: &[S]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = b[i] + dot(&w[i * cols..(i + 1) * cols], x);
    }
}

/// Accumulates gradients of `out = b + W x` given `g = dL/dout`.
fn matvec_back<S: Scalar>(g: &[S], w: &[S], x: &[S], dw: &mut [S], db: &mut [S], dx: Option<&mut [S]>) {
    let cols = x.len();
    for (i, &gi) in g.iter().enumerate() {
        if gi != S::zero() {
            axpy(&mut dw[i * cols..(i + 1) * cols], gi, x);
            db[i] = db[i] + gi;
        }
    }
    if let Some(dx) = dx {
        for (i, &gi) in g.iter().enumerate() {
            if gi != S::zero() {
                axpy(dx, gi, &w[i * cols..(i + 1) * cols]);
            }
        }
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { vals: Vec::new(), nodes: Vec::new(), cache: Vec::new(), concat_parts: Vec::new() }
    }

    pub fn clear(&mut self) {
        self.vals.clear();
        self.nodes.clear();
        self.cache.clear();
        self.concat_parts.clear();
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[S] {
        let n = &self.nodes[id.0];
        &self.vals[n.off..n.off + n.len]
    }

    fn push(&mut self, op: Op, len: usize) -> (NodeId, usize) {
        let off = self.vals.len();
        self.vals.resize(off + len, S::zero());
        self.nodes.push(Node { op, off, len });
        (NodeId(self.nodes.len() - 1), off)
    }

    /// Constant leaf; gradients stop here.
    pub fn input(&mut self, data: &[S]) -> NodeId {
        let (id, off) = self.push(Op::Input, data.len());
        self.vals[off..off + data.len()].copy_from_slice(data);
        id
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.push(Op::Input, len).0
    }

    pub fn linear(&mut self, params: &[S], p: LinearParams, x: NodeId) -> NodeId {
        assert_eq!(self.nodes[x.0].len, p.cols, "linear input width");
        let (id, off) = self.push(Op::Linear { x, p }, p.rows);
        let xn = &self.nodes[x.0];
        let (head, out) = self.vals.split_at_mut(off);
        matvec(
            &mut out[..p.rows],
            &params[p.w..p.w + p.rows * p.cols],
            &params[p.b..p.b + p.rows],
            &head[xn.off..xn.off + xn.len],
        );
        id
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let len = parts.iter().map(|p| self.nodes[p.0].len).sum();
        let start = self.concat_parts.len();
        self.concat_parts.extend_from_slice(parts);
        let (id, mut off) = self.push(Op::Concat { parts: (start, parts.len()) }, len);
        for p in parts {
            let n = &self.nodes[p.0];
            let (src, l) = (n.off, n.len);
            self.vals.copy_within(src..src + l, off);
            off += l;
        }
        id
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Tanh(x), x, |v| v.tanh())
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Relu(x), x, |v| if v > S::zero() { v } else { S::zero() })
    }

    fn unary(&mut self, op: Op, x: NodeId, f: impl Fn(S) -> S) -> NodeId {
        let len = self.nodes[x.0].len;
        let src = self.nodes[x.0].off;
        let (id, off) = self.push(op, len);
        for i in 0..len {
            self.vals[off + i] = f(self.vals[src + i]);
        }
        id
    }

    pub fn gru(&mut self, params: &[S], p: GruParams, x: NodeId, h: NodeId) -> NodeId {
        let hs = p.hidden;
        assert_eq!(self.nodes[x.0].len, p.input, "gru input width");
        assert_eq!(self.nodes[h.0].len, hs, "gru state width");
        let cache = self.cache.len();
        self.cache.resize(cache + 4 * hs, S::zero());
        let (id, off) = self.push(Op::Gru { x, h, p, cache }, hs);
        let (xn, hn) = (&self.nodes[x.0], &self.nodes[h.0]);
        let mut gi = vec![S::zero(); 3 * hs];
        let mut gh = vec![S::zero(); 3 * hs];
        matvec(
            &mut gi,
            &params[p.w_ih..p.w_ih + 3 * hs * p.input],
            &params[p.b_ih..p.b_ih + 3 * hs],
            &self.vals[xn.off..xn.off + xn.len],
        );
        matvec(
            &mut gh,
            &params[p.w_hh..p.w_hh + 3 * hs * hs],
            &params[p.b_hh..p.b_hh + 3 * hs],
            &self.vals[hn.off..hn.off + hs],
        );
        let hoff = hn.off;
        let c = &mut self.cache[cache..cache + 4 * hs];
        for j in 0..hs {
            let r = sigmoid(gi[j] + gh[j]);
            let z = sigmoid(gi[hs + j] + gh[hs + j]);
            let hproj = gh[2 * hs + j];
            let n = (gi[2 * hs + j] + r * hproj).tanh();
            c[j] = r;
            c[hs + j] = z;
            c[2 * hs + j] = n;
            c[3 * hs + j] = hproj;
            let prev = self.vals[hoff + j];
            self.vals[off + j] = (S::one() - z) * n + z * prev;
        }
        id
    }

    /// Valid cross-correlation over a `channels x height x width` input.
    pub fn conv2d(&mut self, params: &[S], p: ConvParams, x: NodeId, height: usize, width: usize) -> NodeId {
        assert_eq!(self.nodes[x.0].len, p.in_ch * height * width, "conv input shape");
        let (oh, ow) = (height + 1 - p.k, width + 1 - p.k);
        let (id, off) = self.push(Op::Conv { x, p, height, width }, p.out_ch * oh * ow);
        let xoff = self.nodes[x.0].off;
        let k = p.k;
        for o in 0..p.out_ch {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = params[p.b + o];
                    for c in 0..p.in_ch {
                        for u in 0..k {
                            let wrow = p.w + ((o * p.in_ch + c) * k + u) * k;
                            let xrow = xoff + (c * height + i + u) * width + j;
                            acc = acc + dot(&params[wrow..wrow + k], &self.vals[xrow..xrow + k]);
                        }
                    }
                    self.vals[off + (o * oh + i) * ow + j] = acc;
                }
            }
        }
        id
    }

    /// Propagates `seeds` (node, dL/dnode) back through the tape, adding parameter
    /// gradients into `grads`.
    pub fn backward(&self, params: &[S], seeds: &[(NodeId, Vec<S>)], grads: &mut [S]) {
        assert_eq!(params.len(), grads.len());
        let mut adj = vec![S::zero(); self.vals.len()];
        let mut last = 0;
        for (id, g) in seeds {
            let n = &self.nodes[id.0];
            assert_eq!(g.len(), n.len, "seed width");
            axpy(&mut adj[n.off..n.off + n.len], S::one(), g);
            last = last.max(id.0 + 1);
        }
        for idx in (0..last).rev() {
            let node = &self.nodes[idx];
            let (off, len) = (node.off, node.len);
            if matches!(node.op, Op::Input) {
                continue;
            }
            let (lower, upper) = adj.split_at_mut(off);
            let g = &upper[..len];
            if g.iter().all(|&v| v == S::zero()) {
                continue;
            }
            match node.op {
                Op::Input => {}
                Op::Linear { x, p } => {
                    let xn = &self.nodes[x.0];
                    let (dw, db) = split_pair(grads, p.w, p.rows * p.cols, p.b, p.rows);
                    let dx = (!matches!(xn.op, Op::Input)).then(|| &mut lower[xn.off..xn.off + xn.len]);
                    matvec_back(g, &params[p.w..p.w + p.rows * p.cols], &self.vals[xn.off..xn.off + xn.len], dw, db, dx);
                }
                Op::Concat { parts } => {
                    let mut o = 0;
                    for part in &self.concat_parts[parts.0..parts.0 + parts.1] {
                        let pn = &self.nodes[part.0];
                        if !matches!(pn.op, Op::Input) {
                            axpy(&mut lower[pn.off..pn.off + pn.len], S::one(), &g[o..o + pn.len]);
                        }
                        o += pn.len;
                    }
                }
                Op::Tanh(x) => {
                    let xo = self.nodes[x.0].off;
                    for i in 0..len {
                        let y = self.vals[off + i];
                        lower[xo + i] = lower[xo + i] + g[i] * (S::one() - y * y);
                    }
                }
                Op::Relu(x) => {
                    let xo = self.nodes[x.0].off;
                    for i in 0..len {
                        if self.vals[off + i] > S::zero() {
                            lower[xo + i] = lower[xo + i] + g[i];
                        }
                    }
                }
                Op::Gru { x, h, p, cache } => self.gru_back(params, grads, lower, g, x, h, p, cache),
                Op::Conv { x, p, height, width } => {
                    let xn = &self.nodes[x.0];
                    let need_dx = !matches!(xn.op, Op::Input);
                    let (k, oh, ow) = (p.k, height + 1 - p.k, width + 1 - p.k);
                    for o in 0..p.out_ch {
                        for i in 0..oh {
                            for j in 0..ow {
                                let go = g[(o * oh + i) * ow + j];
                                if go == S::zero() {
                                    continue;
                                }
                                grads[p.b + o] = grads[p.b + o] + go;
                                for c in 0..p.in_ch {
                                    for u in 0..k {
                                        let wrow = p.w + ((o * p.in_ch + c) * k + u) * k;
                                        let xrow = xn.off + (c * height + i + u) * width + j;
                                        axpy(&mut grads[wrow..wrow + k], go, &self.vals[xrow..xrow + k]);
                                        if need_dx {
                                            axpy(&mut lower[xrow..xrow + k], go, &params[wrow..wrow + k]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn gru_back(&self, params: &[S], grads: &mut [S], lower: &mut [S], g: &[S], x: NodeId, h: NodeId, p: GruParams, cache: usize) {
        let hs = p.hidden;
        let c = &self.cache[cache..cache + 4 * hs];
        let (xn, hn) = (&self.nodes[x.0], &self.nodes[h.0]);
        let hprev = &self.vals[hn.off..hn.off + hs];
        let mut gi = vec![S::zero(); 3 * hs];
        let mut gh = vec![S::zero(); 3 * hs];
        let mut dh_direct = vec![S::zero(); hs];
        for j in 0..hs {
            let (r, z, n, hproj) = (c[j], c[hs + j], c[2 * hs + j], c[3 * hs + j]);
            let dz = g[j] * (hprev[j] - n);
            let dn = g[j] * (S::one() - z);
            dh_direct[j] = g[j] * z;
            let dn_pre = dn * (S::one() - n * n);
            let dr_pre = dn_pre * hproj * r * (S::one() - r);
            let dz_pre = dz * z * (S::one() - z);
            gi[j] = dr_pre;
            gi[hs + j] = dz_pre;
            gi[2 * hs + j] = dn_pre;
            gh[j] = dr_pre;
            gh[hs + j] = dz_pre;
            gh[2 * hs + j] = dn_pre * r;
        }
        let wi_len = 3 * hs * p.input;
        let wh_len = 3 * hs * hs;
        {
            let (dw, db) = split_pair(grads, p.w_ih, wi_len, p.b_ih, 3 * hs);
            let dx = (!matches!(xn.op, Op::Input)).then(|| &mut lower[xn.off..xn.off + xn.len]);
            matvec_back(&gi, &params[p.w_ih..p.w_ih + wi_len], &self.vals[xn.off..xn.off + xn.len], dw, db, dx);
        }
        let (dw, db) = split_pair(grads, p.w_hh, wh_len, p.b_hh, 3 * hs);
        if matches!(hn.op, Op::Input) {
            matvec_back(&gh, &params[p.w_hh..p.w_hh + wh_len], hprev, dw, db, None);
        } else {
            let dh = &mut lower[hn.off..hn.off + hs];
            axpy(dh, S::one(), &dh_direct);
            matvec_back(&gh, &params[p.w_hh..p.w_hh + wh_len], hprev, dw, db, Some(dh));
        }
    }
}

/// Two disjoint mutable windows of `v`.
fn split_pair<S>(v: &mut [S], a: usize, alen: usize, b: usize, blen: usize) -> (&mut [S], &mut [S]) {
    if a < b {
        assert!(a + alen <= b);
        let (lo, hi) = v.split_at_mut(b);
        (&mut lo[a..a + alen], &mut hi[..blen])
    } else {
        assert!(b + blen <= a);
        let (lo, hi) = v.split_at_mut(a);
        (&mut hi[..alen], &mut lo[b..b + blen])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compnet::params::ParamStore;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central differences of `loss(params)` against the tape gradient.
    fn check(store: &ParamStore<f64>, build: impl Fn(&mut Tape<f64>, &[f64]) -> NodeId) {
        let mut tape = Tape::new();
        let out = build(&mut tape, &store.data);
        let width = tape.value(out).len();
        let weights: Vec<f64> = (0..width).map(|i| 1.0 + i as f64 * 0.37).collect();
        let mut grads = vec![0.0; store.len()];
        tape.backward(&store.data, &[(out, weights.clone())], &mut grads);
        let loss = |p: &[f64]| {
            let mut t = Tape::new();
            let o = build(&mut t, p);
            t.value(o).iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut p = store.data.clone();
        for i in 0..p.len() {
            let keep = p[i];
            p[i] = keep + 1e-5;
            let up = loss(&p);
            p[i] = keep - 1e-5;
            let down = loss(&p);
            p[i] = keep;
            let fd = (up - down) / 2e-5;
            let err = (fd - grads[i]).abs();
            assert!(err <= 1e-6 || err <= 1e-5 * fd.abs().max(grads[i].abs()), "param {i}: fd {fd} vs {}", grads[i]);
        }
    }

    #[test]
    fn gru_chain_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut store = ParamStore::<f64>::new();
        let cell = GruParams::new(&mut store, &mut rng, "cell", 3, 4, 0.7);
        let head = LinearParams::new(&mut store, &mut rng, "head", 2, 4, 0.7);
        for v in store.data.iter_mut().filter(|v| **v == 0.0) {
            *v = 0.1;
        }
        check(&store, |t, p| {
            let mut h = t.zeros(4);
            for s in 0..3 {
                let x = t.input(&[0.5, -0.2 * s as f64, 1.0]);
                h = t.gru(p, cell, x, h);
            }
            let y = t.linear(p, head, h);
            t.tanh(y)
        });
    }

    #[test]
    fn conv_relu_concat_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::<f64>::new();
        let c1 = ConvParams::new(&mut store, &mut rng, "c1", 2, 3, 2, 0.5);
        let lin = LinearParams::new(&mut store, &mut rng, "l", 2, 3 * 3 * 3 + 2, 0.5);
        let input: Vec<f64> = (0..32).map(|i| ((i * 7) % 5) as f64 / 4.0 - 0.3).collect();
        check(&store, |t, p| {
            let x = t.input(&input);
            let c = t.conv2d(p, c1, x, 4, 4);
            let r = t.relu(c);
            let extra = t.input(&[0.3, -0.1]);
            let cat = t.concat(&[r, extra]);
            t.linear(p, lin, cat)
        });
    }
}
