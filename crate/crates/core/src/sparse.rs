//! Compressed sparse row storage for the assembled system.

use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates in the
    /// order they appear so the result does not depend on thread count.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut count = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            count[r + 1] += 1;
        }
        for i in 0..n_rows {
            count[i + 1] += count[i];
        }
        // counting sort by row keeps the input order inside each row
        let mut next = count.clone();
        let mut by_row = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..n_rows {
            let row = &mut by_row[count[r]..count[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            let mut last = usize::MAX;
            for &(c, v) in row.iter() {
                if c == last {
                    *values.last_mut().expect("entry exists") += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = c;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, r)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `|A| |x|`, the scale of rounding errors in `A x`.
    pub fn abs_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, v)| (v * x[c]).abs()).sum())
            .collect()
    }

    /// `b - A x` with compensated row sums (error-free products via FMA),
    /// accurate to about one rounding of the exact residual.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .into_par_iter()
            .map(|r| {
                let (mut s, mut c) = (b[r], 0.0);
                for (j, a) in self.row(r) {
                    let p = -a * x[j];
                    let pe = (-a).mul_add(x[j], -p);
                    let t = s + p;
                    let z = t - s;
                    c += (s - (t - z)) + (p - z) + pe;
                    s = t;
                }
                s + c
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T| / max |A|` (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for (r, c, v) in self.triplets() {
            worst = worst.max((v - self.get(c, r)).abs());
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }
}
