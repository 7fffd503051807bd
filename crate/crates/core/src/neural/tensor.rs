use alloc::vec;
use alloc::vec::Vec;

/// Real activations laid out as `[channel][batch][position]`.
///
/// Complex signals enter as stacked channels: the first half holds real
/// parts, the second half imaginary parts. A single block is `batch == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    batch: usize,
    length: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, batch: usize, length: usize) -> Self {
        Self {
            channels,
            batch,
            length,
            data: vec![0.0; channels * batch * length],
        }
    }

    /// Panics when `data.len()` disagrees with the shape.
    pub fn from_vec(channels: usize, batch: usize, length: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            channels * batch * length,
            "tensor data does not match shape"
        );
        Self {
            channels,
            batch,
            length,
            data,
        }
    }

    pub fn from_fn(
        channels: usize,
        batch: usize,
        length: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(channels, batch, length);
        for c in 0..channels {
            for b in 0..batch {
                for p in 0..length {
                    t.data[(c * batch + b) * length + p] = f(c, b, p);
                }
            }
        }
        t
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.batch, self.length)
    }

    /// Columns per channel row, `batch · length`.
    pub fn columns(&self) -> usize {
        self.batch * self.length
    }

    #[inline]
    pub fn index(&self, c: usize, b: usize, p: usize) -> usize {
        (c * self.batch + b) * self.length + p
    }

    #[inline]
    pub fn get(&self, c: usize, b: usize, p: usize) -> f64 {
        self.data[self.index(c, b, p)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, b: usize, p: usize, v: f64) {
        let i = self.index(c, b, p);
        self.data[i] = v;
    }

    #[inline]
    pub fn add_at(&mut self, c: usize, b: usize, p: usize, v: f64) {
        let i = self.index(c, b, p);
        self.data[i] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, c: usize) -> &[f64] {
        let n = self.columns();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.columns();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Copies batch item `b` out as a one-block tensor.
    pub fn block(&self, b: usize) -> Tensor {
        Tensor::from_fn(self.channels, 1, self.length, |c, _, p| self.get(c, b, p))
    }

    /// Concatenates single-or-multi-block tensors along the batch axis.
    pub fn stack(blocks: &[Tensor]) -> Tensor {
        let first = &blocks[0];
        let (channels, length) = (first.channels, first.length);
        let batch: usize = blocks.iter().map(|t| t.batch).sum();
        let mut out = Tensor::zeros(channels, batch, length);
        let mut offset = 0;
        for t in blocks {
            assert_eq!(
                (t.channels, t.length),
                (channels, length),
                "stacking tensors of different shapes"
            );
            for c in 0..channels {
                for b in 0..t.batch {
                    for p in 0..length {
                        out.set(c, offset + b, p, t.get(c, b, p));
                    }
                }
            }
            offset += t.batch;
        }
        out
    }

    /// One-hot labels: channel `labels[b·length + p]` set to 1 at `(b, p)`.
    pub fn one_hot(classes: usize, batch: usize, length: usize, labels: &[usize]) -> Tensor {
        assert_eq!(labels.len(), batch * length);
        let mut t = Tensor::zeros(classes, batch, length);
        for b in 0..batch {
            for p in 0..length {
                t.set(labels[b * length + p], b, p, 1.0);
            }
        }
        t
    }

    /// Per-column argmax over channels, ordered `b·length + p`.
    pub fn argmax_channels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.columns());
        for b in 0..self.batch {
            for p in 0..self.length {
                let mut best = 0;
                let mut best_v = f64::NEG_INFINITY;
                for c in 0..self.channels {
                    let v = self.get(c, b, p);
                    if v > best_v {
                        best_v = v;
                        best = c;
                    }
                }
                out.push(best);
            }
        }
        out
    }
}
