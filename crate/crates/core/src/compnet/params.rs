use std::collections::HashMap;

use rand::Rng;

use crate::Scalar;

/// Named tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// All trainable values of a model in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<S> {
    pub data: Vec<S>,
    entries: Vec<ParamEntry>,
    index: HashMap<String, usize>,
}

impl<S: Scalar> Default for ParamStore<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        Self { data: Vec::new(), entries: Vec::new(), index: HashMap::new() }
    }

    /// Appends a tensor filled with uniform draws from `[-bound, bound]` (zeros when `bound == 0`).
    pub fn add<R: Rng + ?Sized>(&mut self, rng: &mut R, name: &str, shape: &[usize], bound: f64) -> usize {
        assert!(!self.index.contains_key(name), "duplicate tensor {name}");
        let offset = self.data.len();
        let n: usize = shape.iter().product();
        if bound == 0.0 {
            self.data.extend(std::iter::repeat(S::zero()).take(n));
        } else {
            self.data.extend((0..n).map(|_| S::of(rng.gen_range(-bound..=bound))));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push(ParamEntry { name: name.to_string(), offset, shape: shape.to_vec() });
        offset
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn entry(&self, name: &str) -> Option<&ParamEntry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn slice(&self, offset: usize, len: usize) -> &[S] {
        &self.data[offset..offset + len]
    }

    /// Entry holding flat index `i`.
    pub fn owner(&self, i: usize) -> Option<&ParamEntry> {
        self.entries.iter().find(|e| e.range().contains(&i))
    }

    /// Rebuilds a store from saved entries and values.
    pub fn from_parts(entries: Vec<ParamEntry>, data: Vec<S>) -> Self {
        let index = entries.iter().enumerate().map(|(i, e)| (e.name.clone(), i)).collect();
        Self { data, entries, index }
    }
}

/// Offsets of `y = W x + b` with `W` stored row-major as `rows x cols`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearParams {
    pub w: usize,
    pub b: usize,
    pub rows: usize,
    pub cols: usize,
}

impl LinearParams {
    pub fn new<S: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<S>, rng: &mut R, name: &str, rows: usize, cols: usize, bound: f64) -> Self {
        let w = store.add(rng, &format!("{name}.weight"), &[rows, cols], bound);
        let b = store.add(rng, &format!("{name}.bias"), &[rows], 0.0);
        Self { w, b, rows, cols }
    }
}

/// Gated recurrent cell; gates are stacked reset, update, candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruParams {
    pub w_ih: usize,
    pub w_hh: usize,
    pub b_ih: usize,
    pub b_hh: usize,
    pub input: usize,
    pub hidden: usize,
}

impl GruParams {
    pub fn new<S: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<S>, rng: &mut R, name: &str, input: usize, hidden: usize, bound: f64) -> Self {
        let w_ih = store.add(rng, &format!("{name}.w_ih"), &[3 * hidden, input], bound);
        let w_hh = store.add(rng, &format!("{name}.w_hh"), &[3 * hidden, hidden], bound);
        let b_ih = store.add(rng, &format!("{name}.b_ih"), &[3 * hidden], 0.0);
        let b_hh = store.add(rng, &format!("{name}.b_hh"), &[3 * hidden], 0.0);
        Self { w_ih, w_hh, b_ih, b_hh, input, hidden }
    }
}

/// Valid (unpadded) 2-d convolution with square kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub w: usize,
    pub b: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub k: usize,
}

impl ConvParams {
    pub fn new<S: Scalar, R: Rng + ?Sized>(store: &mut ParamStore<S>, rng: &mut R, name: &str, in_ch: usize, out_ch: usize, k: usize, bound: f64) -> Self {
        let w = store.add(rng, &format!("{name}.weight"), &[out_ch, in_ch, k, k], bound);
        let b = store.add(rng, &format!("{name}.bias"), &[out_ch], 0.0);
        Self { w, b, in_ch, out_ch, k }
    }
}
