//! Modified LSTM cell with a gated residual path.
//!
//! ```text
//! i = σ(W_xi x + W_hi h')        f = σ(W_xf x + W_hf h')
//! c = f ⊙ c' + i ⊙ (W_xc x + W_hc h')
//! o = σ(W_xo x + W_ho h')
//! h = o ⊙ tanh(c) + (1 − i) ⊙ x
//! ```
//!
//! `h'`/`c'` are the previous state. There are no bias terms, and the
//! residual `(1 − i) ⊙ x` needs input and hidden sizes to agree.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ac, bc) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ar, br) = (ac.remainder(), bc.remainder());
    for (x, y) in ac.zip(bc) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ar.iter().zip(br) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// `y += self · x`
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr += dot(self.row(r), x);
        }
    }

    /// `y += selfᵀ · d`
    pub fn matvec_t_acc(&self, d: &[f64], y: &mut [f64]) {
        debug_assert_eq!(d.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for (r, &dr) in d.iter().enumerate() {
            if dr != 0.0 {
                axpy(y, dr, self.row(r));
            }
        }
    }

    /// `self += d · xᵀ`
    pub fn rank1_acc(&mut self, d: &[f64], x: &[f64]) {
        debug_assert_eq!(d.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &dr) in d.iter().enumerate() {
            if dr != 0.0 {
                axpy(self.row_mut(r), dr, x);
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The eight weight matrices of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
}

pub const LSTM_TENSOR_NAMES: [&str; 8] = [
    "W_xi", "W_hi", "W_xf", "W_hf", "W_xc", "W_hc", "W_xo", "W_ho",
];

impl LstmParams {
    pub fn zeros(hidden: usize) -> Self {
        let z = || Matrix::zeros(hidden, hidden);
        LstmParams {
            w_xi: z(),
            w_hi: z(),
            w_xf: z(),
            w_hf: z(),
            w_xc: z(),
            w_hc: z(),
            w_xo: z(),
            w_ho: z(),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_xi.rows()
    }

    /// Matrices in [`LSTM_TENSOR_NAMES`] order.
    pub fn matrices(&self) -> [&Matrix; 8] {
        [
            &self.w_xi, &self.w_hi, &self.w_xf, &self.w_hf, &self.w_xc, &self.w_hc, &self.w_xo,
            &self.w_ho,
        ]
    }

    pub fn matrices_mut(&mut self) -> [&mut Matrix; 8] {
        [
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.w_xc,
            &mut self.w_hc,
            &mut self.w_xo,
            &mut self.w_ho,
        ]
    }
}

/// Activations of one step, kept for back-propagation.
#[derive(Debug, Clone, Default)]
pub(crate) struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub i: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn step_cached(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let n = p.hidden();
    let gate = |wx: &Matrix, wh: &Matrix| {
        let mut a = vec![0.0; n];
        wx.matvec_acc(x, &mut a);
        wh.matvec_acc(h_prev, &mut a);
        a
    };
    let mut i = gate(&p.w_xi, &p.w_hi);
    let mut f = gate(&p.w_xf, &p.w_hf);
    let g = gate(&p.w_xc, &p.w_hc);
    let mut o = gate(&p.w_xo, &p.w_ho);
    let mut c = vec![0.0; n];
    let mut tanh_c = vec![0.0; n];
    let mut h = vec![0.0; n];
    for k in 0..n {
        i[k] = sigmoid(i[k]);
        f[k] = sigmoid(f[k]);
        o[k] = sigmoid(o[k]);
        c[k] = f[k] * c_prev[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k] + (1.0 - i[k]) * x[k];
    }
    StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        tanh_c,
        c,
        h,
    }
}

/// Gradients of one step. Accumulates weight gradients into `grads`,
/// returns `(dx, dh_prev, dc_prev)`.
pub(crate) fn step_backward(
    p: &LstmParams,
    s: &StepCache,
    dh: &[f64],
    dc_next: &[f64],
    grads: &mut LstmParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = p.hidden();
    let mut da_i = vec![0.0; n];
    let mut da_f = vec![0.0; n];
    let mut dg = vec![0.0; n];
    let mut da_o = vec![0.0; n];
    let mut dc_prev = vec![0.0; n];
    let mut dx = vec![0.0; n];
    for k in 0..n {
        let (i, f, o, tc) = (s.i[k], s.f[k], s.o[k], s.tanh_c[k]);
        da_o[k] = dh[k] * tc * o * (1.0 - o);
        let dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
        let di = dc * s.g[k] - dh[k] * s.x[k];
        da_i[k] = di * i * (1.0 - i);
        da_f[k] = dc * s.c_prev[k] * f * (1.0 - f);
        dg[k] = dc * i;
        dc_prev[k] = dc * f;
        dx[k] = dh[k] * (1.0 - i);
    }
    let mut dh_prev = vec![0.0; n];
    for (da, wx, wh, gx, gh) in [
        (&da_i, &p.w_xi, &p.w_hi, 0, 1),
        (&da_f, &p.w_xf, &p.w_hf, 2, 3),
        (&dg, &p.w_xc, &p.w_hc, 4, 5),
        (&da_o, &p.w_xo, &p.w_ho, 6, 7),
    ] {
        wx.matvec_t_acc(da, &mut dx);
        wh.matvec_t_acc(da, &mut dh_prev);
        let g = grads.matrices_mut();
        g[gx].rank1_acc(da, &s.x);
        g[gh].rank1_acc(da, &s.h_prev);
    }
    (dx, dh_prev, dc_prev)
}

fn check_dims(p: &LstmParams, vs: &[&[f64]]) -> Result<()> {
    let n = p.hidden();
    for v in vs {
        if v.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for hidden size {n}",
                v.len()
            )));
        }
    }
    Ok(())
}

/// One time step: returns `(h_t, c_t)`.
pub fn lstm_step(
    p: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(p, &[x, h_prev, c_prev])?;
    let s = step_cached(p, x, h_prev, c_prev);
    Ok((s.h, s.c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// Layer `k` (0-based) runs forward when `k` is even.
    pub fn of_layer(k: usize) -> Self {
        if k.is_multiple_of(2) {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }

    fn order(self, len: usize) -> Box<dyn Iterator<Item = usize>> {
        match self {
            Direction::Forward => Box::new(0..len),
            Direction::Backward => Box::new((0..len).rev()),
        }
    }
}

/// Caches in original time order.
pub(crate) fn run_layer_cached(
    p: &LstmParams,
    inputs: &[Vec<f64>],
    dir: Direction,
) -> Vec<StepCache> {
    let n = p.hidden();
    let mut caches: Vec<StepCache> = vec![StepCache::default(); inputs.len()];
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    for t in dir.order(inputs.len()) {
        let s = step_cached(p, &inputs[t], &h, &c);
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        caches[t] = s;
    }
    caches
}

/// Back-propagates through a whole layer; returns the input gradients.
pub(crate) fn backward_layer(
    p: &LstmParams,
    caches: &[StepCache],
    d_out: &[Vec<f64>],
    dir: Direction,
    grads: &mut LstmParams,
) -> Vec<Vec<f64>> {
    let n = p.hidden();
    let len = caches.len();
    let mut d_in = vec![Vec::new(); len];
    let mut dh_rec = vec![0.0; n];
    let mut dc_rec = vec![0.0; n];
    let reverse = match dir {
        Direction::Forward => Direction::Backward,
        Direction::Backward => Direction::Forward,
    };
    for t in reverse.order(len) {
        let mut dh = d_out[t].clone();
        axpy(&mut dh, 1.0, &dh_rec);
        let (dx, dh_prev, dc_prev) = step_backward(p, &caches[t], &dh, &dc_rec, grads);
        d_in[t] = dx;
        dh_rec = dh_prev;
        dc_rec = dc_prev;
    }
    d_in
}

/// Unrolls the cell over `inputs` with zero initial state. Outputs are in
/// the original time order whichever way the layer runs.
pub fn run_layer(p: &LstmParams, inputs: &[Vec<f64>], dir: Direction) -> Result<Vec<Vec<f64>>> {
    for x in inputs {
        check_dims(p, &[x])?;
    }
    Ok(run_layer_cached(p, inputs, dir)
        .into_iter()
        .map(|s| s.h)
        .collect())
}
