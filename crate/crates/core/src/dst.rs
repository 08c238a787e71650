//! Orthonormal type-I discrete sine transforms on rows and columns of a grid.
//!
//! The DST-I basis `e_j(x) = sqrt(2/(M+1)) sin(π j x / (M+1))`, `j, x = 1..M`,
//! diagonalizes the Dirichlet random-walk generator on a segment of `M` sites.
//! Two real rows are packed into one complex FFT of length `2(M+1)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Dst1 {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    pub fn new(len: usize) -> Self {
        assert!(len > 0);
        let fft = FftPlanner::new().plan_fft_forward(2 * (len + 1));
        Dst1 { len, fft }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Transforms `count` contiguous rows of length `len` in place.
    pub fn transform_rows(&self, data: &mut [f64], count: usize) {
        let m = self.len;
        assert_eq!(data.len(), m * count);
        self.batched(data, count, false, |r, j| r * m + j);
    }

    /// Transforms every column of a row-major grid with `count` columns of
    /// length `len`.
    pub fn transform_columns(&self, data: &mut [f64], count: usize) {
        let m = self.len;
        assert_eq!(data.len(), m * count);
        self.batched(data, count, true, |c, j| j * count + c);
    }

    /// Transforms `count` sequences, element `j` of sequence `r` living at `at(r, j)`.
    fn batched(&self, data: &mut [f64], count: usize, strided: bool, at: impl Fn(usize, usize) -> usize) {
        let m = self.len;
        let period = 2 * (m + 1);
        // F_k = -2i A_k + 2 B_k with A, B the unnormalized sine sums of sequences a, b
        let scale = 0.5 * (2.0 / (m + 1) as f64).sqrt();
        let mut buf = vec![Complex64::new(0.0, 0.0); CHUNK_PAIRS * period];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for first in (0..count).step_by(2 * CHUNK_PAIRS) {
            let n = (count - first).min(2 * CHUNK_PAIRS);
            let pairs = n.div_ceil(2);
            let buf = &mut buf[..pairs * period];
            let load = |buf: &mut [Complex64], p: usize, j: usize| {
                let a = first + 2 * p;
                let im = if 2 * p + 1 < n { data[at(a + 1, j)] } else { 0.0 };
                let v = Complex64::new(data[at(a, j)], im);
                buf[p * period + j + 1] = v;
                buf[p * period + period - 1 - j] = -v;
            };
            // walk memory in order: across sequences for columns, along them for rows
            if strided {
                for j in 0..m {
                    for p in 0..pairs {
                        load(buf, p, j);
                    }
                }
            } else {
                for p in 0..pairs {
                    for j in 0..m {
                        load(buf, p, j);
                    }
                }
            }
            for p in 0..pairs {
                buf[p * period] = Complex64::new(0.0, 0.0);
                buf[p * period + m + 1] = Complex64::new(0.0, 0.0);
            }
            self.fft.process_with_scratch(buf, &mut scratch);
            let mut store = |p: usize, k: usize| {
                let a = first + 2 * p;
                let f = buf[p * period + k + 1];
                data[at(a, k)] = -f.im * scale;
                if 2 * p + 1 < n {
                    data[at(a + 1, k)] = f.re * scale;
                }
            };
            if strided {
                for k in 0..m {
                    for p in 0..pairs {
                        store(p, k);
                    }
                }
            } else {
                for p in 0..pairs {
                    for k in 0..m {
                        store(p, k);
                    }
                }
            }
        }
    }
}

const CHUNK_PAIRS: usize = 8;

/// Separable DST-I on a row-major `width × height` grid (rows run along `x`).
pub struct Dst2 {
    rows: Dst1,
    cols: Dst1,
}

impl Dst2 {
    pub fn new(width: usize, height: usize) -> Self {
        Dst2 { rows: Dst1::new(width), cols: Dst1::new(height) }
    }

    pub fn width(&self) -> usize {
        self.rows.len()
    }

    pub fn height(&self) -> usize {
        self.cols.len()
    }

    /// In-place orthonormal 2D transform; it is its own inverse.
    pub fn transform(&self, data: &mut [f64]) {
        let (w, h) = (self.width(), self.height());
        assert_eq!(data.len(), w * h);
        self.rows.transform_rows(data, h);
        self.cols.transform_columns(data, w);
    }
}

/// `sqrt(2/(M+1)) sin(π j x/(M+1))` for one-based `j` and `x`.
pub fn basis(m: usize, j: usize, x: usize) -> f64 {
    let l = (m + 1) as f64;
    (2.0 / l).sqrt() * (std::f64::consts::PI * (j * x) as f64 / l).sin()
}

/// Eigenvalue `1 - (cos(πj/(M1+1)) + cos(πl/(M2+1)))/2` of the Dirichlet
/// generator `I - P` on an `M1 × M2` rectangle.
pub fn generator_eigenvalue(m1: usize, m2: usize, j: usize, l: usize) -> f64 {
    use std::f64::consts::PI;
    1.0 - 0.5 * ((PI * j as f64 / (m1 + 1) as f64).cos() + (PI * l as f64 / (m2 + 1) as f64).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(row: &[f64]) -> Vec<f64> {
        let m = row.len();
        (1..=m).map(|k| (1..=m).map(|x| basis(m, k, x) * row[x - 1]).sum()).collect()
    }

    #[test]
    fn rows_match_naive_sum() {
        for m in [1usize, 2, 5, 8, 13] {
            let count = 3;
            let data: Vec<f64> = (0..m * count).map(|i| ((i * 7 + 3) % 11) as f64 - 4.5).collect();
            let mut fast = data.clone();
            Dst1::new(m).transform_rows(&mut fast, count);
            for r in 0..count {
                let slow = naive(&data[r * m..(r + 1) * m]);
                for k in 0..m {
                    assert!((fast[r * m + k] - slow[k]).abs() < 1e-12, "m={m} r={r} k={k}");
                }
            }
        }
    }

    #[test]
    fn columns_match_rows_of_the_transpose() {
        let (w, h) = (5, 7);
        let data: Vec<f64> = (0..w * h).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut cols = data.clone();
        Dst1::new(h).transform_columns(&mut cols, w);
        let mut t: Vec<f64> = (0..w * h).map(|i| data[(i % h) * w + i / h]).collect();
        Dst1::new(h).transform_rows(&mut t, w);
        for c in 0..w {
            for j in 0..h {
                assert!((cols[j * w + c] - t[c * h + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_dimensional_transform_is_an_involution() {
        let (w, h) = (7, 4);
        let data: Vec<f64> = (0..w * h).map(|i| (i as f64).sin()).collect();
        let mut t = data.clone();
        let dst = Dst2::new(w, h);
        dst.transform(&mut t);
        dst.transform(&mut t);
        for (a, b) in t.iter().zip(&data) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
