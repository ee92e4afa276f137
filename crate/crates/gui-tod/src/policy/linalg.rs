//! Small dense row-major matrix type and the handful of operations the
//! policy needs. Everything is `f64` and allocation-explicit so training
//! stays deterministic.

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, cols: usize) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for row in rows {
            debug_assert_eq!(row.len(), cols);
            data.extend(row);
        }
        Self { rows: n, cols, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Keep or pad rows so the matrix has exactly `rows` rows.
    pub fn resize_rows(&self, rows: usize) -> Mat {
        let mut out = Mat::zeros(rows, self.cols);
        let keep = rows.min(self.rows);
        out.data[..keep * self.cols].copy_from_slice(&self.data[..keep * self.cols]);
        out
    }

    /// Column-wise mean of all rows; zeros when there are no rows.
    pub fn row_mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        if self.rows == 0 {
            return out;
        }
        for i in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        let inv = 1.0 / self.rows as f64;
        for o in &mut out {
            *o *= inv;
        }
        out
    }

    /// `self * other^T`: (r×c) x (s×c) -> (r×s).
    pub fn mul_transpose(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.row_mut(i)[j] = dot(a, other.row(j));
            }
        }
        out
    }

    /// `self * other`: (r×c) x (c×s) -> (r×s).
    pub fn mul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let out_row = out.row_mut(i);
            for (t, &a_t) in a.iter().enumerate() {
                if a_t == 0.0 {
                    continue;
                }
                let b_row = other.row(t);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a_t * b;
                }
            }
        }
        out
    }

    /// `self^T * other`: (r×c) x (r×s) -> (c×s).
    pub fn t_mul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a = self.row(r);
            let b = other.row(r);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                for (o, &bj) in out.row_mut(i).iter_mut().zip(b) {
                    *o += ai * bj;
                }
            }
        }
        out
    }

    pub fn add_in_place(&mut self, other: &Mat) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    /// Accumulate the outer product `col ⊗ row` into `self`.
    pub fn add_outer(&mut self, col: &[f64], row: &[f64]) {
        debug_assert_eq!(self.rows, col.len());
        debug_assert_eq!(self.cols, row.len());
        for (i, &c) in col.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (o, &r) in self.row_mut(i).iter_mut().zip(row) {
                *o += c * r;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w * x` for row-major `w` (rows×cols) and `x` of length cols.
/// Skips zero entries of `x`, which dominates on sparse hashed features.
pub fn matvec(w: &Mat, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.cols, x.len());
    let mut out = vec![0.0; w.rows];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += w.data[i * w.cols + j] * xj;
        }
    }
    out
}

/// `w^T * y` for row-major `w` (rows×cols) and `y` of length rows.
pub fn matvec_transpose(w: &Mat, y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(w.rows, y.len());
    let mut out = vec![0.0; w.cols];
    for (i, &yi) in y.iter().enumerate() {
        if yi == 0.0 {
            continue;
        }
        for (o, &wij) in out.iter_mut().zip(w.row(i)) {
            *o += wij * yi;
        }
    }
    out
}

pub fn add_scaled(target: &mut [f64], source: &[f64], factor: f64) {
    debug_assert_eq!(target.len(), source.len());
    for (t, &s) in target.iter_mut().zip(source) {
        *t += s * factor;
    }
}

/// Numerically stable softmax; empty input stays empty.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    if logits.is_empty() {
        return Vec::new();
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o /= sum;
    }
    out
}

/// Backprop through a row softmax: given probabilities `p` and upstream
/// gradient `dp`, return the gradient on the logits.
pub fn softmax_backward(p: &[f64], dp: &[f64]) -> Vec<f64> {
    let inner = dot(p, dp);
    p.iter().zip(dp).map(|(&pi, &di)| pi * (di - inner)).collect()
}

/// Index of the maximum value, ties resolved to the lowest index.
/// Empty input returns `None`.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_naive() {
        let w = Mat { rows: 2, cols: 3, data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0] };
        assert_eq!(matvec(&w, &[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(matvec_transpose(&w, &[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn mul_transpose_shapes() {
        let a = Mat { rows: 2, cols: 3, data: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0] };
        let b = Mat { rows: 2, cols: 3, data: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0] };
        let c = a.mul_transpose(&b);
        assert_eq!((c.rows, c.cols), (2, 2));
        assert_eq!(c.data, vec![2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn softmax_sums_to_one_and_shifts() {
        let p = softmax(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted = softmax(&[11.0, 12.0, 13.0]);
        for (a, b) in p.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax(&[0.0; 4]);
        for v in p {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn softmax_backward_finite_difference() {
        let logits = [0.3, -1.2, 0.7, 0.1];
        let upstream = [0.5, -0.25, 1.5, 0.0];
        let p = softmax(&logits);
        let grad = softmax_backward(&p, &upstream);
        let eps = 1e-6;
        for i in 0..logits.len() {
            let mut plus = logits;
            plus[i] += eps;
            let mut minus = logits;
            minus[i] -= eps;
            let f = |l: &[f64]| dot(&softmax(l), &upstream);
            let numeric = (f(&plus) - f(&minus)) / (2.0 * eps);
            assert!((grad[i] - numeric).abs() < 1e-8, "component {i}");
        }
    }

    #[test]
    fn resize_rows_pads_and_truncates() {
        let m = Mat { rows: 2, cols: 2, data: vec![1.0, 2.0, 3.0, 4.0] };
        let padded = m.resize_rows(3);
        assert_eq!(padded.row(2), &[0.0, 0.0]);
        let cut = m.resize_rows(1);
        assert_eq!(cut.data, vec![1.0, 2.0]);
    }

    #[test]
    fn row_mean_handles_empty() {
        assert_eq!(Mat::zeros(0, 3).row_mean(), vec![0.0; 3]);
        let m = Mat { rows: 2, cols: 2, data: vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(m.row_mean(), vec![2.0, 3.0]);
    }
}
