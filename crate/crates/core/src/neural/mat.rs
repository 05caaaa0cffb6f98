//! Minimal dense matrix used for LSTM weights and their gradients.

/// Row-major f64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        self.matvec_add(x, &mut y);
        y
    }

    /// y += A x
    pub fn matvec_add(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *out += acc;
        }
    }

    /// y += A^T x (used to push gradients back through a weight matrix)
    pub fn tr_matvec_add(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for (r, &xr) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (out, &a) in y.iter_mut().zip(row) {
                *out += a * xr;
            }
        }
    }

    /// A += u v^T (gradient accumulation as an outer product)
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (slot, &vc) in row.iter_mut().zip(v) {
                *slot += ur * vc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree_with_hand_computation() {
        let a = Mat::from_fn(2, 3, |r, c| (r * 3 + c) as f64); // [[0,1,2],[3,4,5]]
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]), vec![8.0, 26.0]);
        let mut y = vec![0.0; 3];
        a.tr_matvec_add(&[1.0, 10.0], &mut y);
        assert_eq!(y, vec![30.0, 41.0, 52.0]);
    }

    #[test]
    fn outer_product_accumulates() {
        let mut a = Mat::zeros(2, 2);
        a.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        a.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(a.data(), &[6.0, 8.0, 12.0, 16.0]);
    }
}
