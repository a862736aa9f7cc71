use std::io::{self, Write};

use super::SparseError;

/// Compressed sparse row matrix.
///
/// Column indices are sorted and unique within each row, and no explicit
/// zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order when the matrix is built.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(value);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn build(self) -> SparseMatrix {
        let TripletBuilder { nrows, ncols, rows, cols, vals } = self;
        // Bucket by row (stable), then sort each row by column (stable) so that
        // duplicates are summed in insertion order.
        let mut count = vec![0usize; nrows + 1];
        for &r in &rows {
            count[r + 1] += 1;
        }
        for i in 0..nrows {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut bucket = vec![(0usize, 0.0f64); vals.len()];
        for ((&r, &c), &v) in rows.iter().zip(&cols).zip(&vals) {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(vals.len());
        let mut values = Vec::with_capacity(vals.len());
        row_ptr.push(0);
        for i in 0..nrows {
            let row = &mut bucket[count[i]..count[i + 1]];
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == c {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_idx.push(c);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix { nrows, ncols, row_ptr, col_idx, values }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::with_capacity(d.len(), d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, triplets.len());
        for &(r, c, v) in triplets {
            b.push(r, c, v);
        }
        b.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut b = TripletBuilder::new(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            for (j, &v) in row.iter().enumerate() {
                b.push(i, j, v);
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates the stored `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// Iterates every stored entry as `(row, column, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        if x.len() != self.ncols {
            return Err(SparseError::DimensionMismatch {
                op: "spmv",
                expected: (self.ncols, 1),
                found: (x.len(), 1),
            });
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// `r = b - A x` with compensated row sums, so the result is accurate
    /// even when `A x` and `b` nearly cancel.
    pub fn residual_into(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(b.len(), self.nrows);
        debug_assert_eq!(r.len(), self.nrows);
        for (i, ri) in r.iter_mut().enumerate() {
            let (mut s, mut c) = (b[i], 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let p = -self.values[k] * x[self.col_idx[k]];
                let e = (-self.values[k]).mul_add(x[self.col_idx[k]], -p);
                // two-sum of s and p
                let t = s + p;
                let z = t - s;
                c += (s - (t - z)) + (p - z) + e;
                s = t;
            }
            *ri = s + c;
        }
    }

    /// Quadratic form `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        let mut acc = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            acc += xi * row;
        }
        acc
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut count = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            count[c + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.col_idx[k];
                col_idx[next[c]] = i;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        SparseMatrix { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        if s == 0.0 {
            return SparseMatrix::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Returns `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::DimensionMismatch {
                op: "lincomb",
                expected: (self.nrows, self.ncols),
                found: (other.nrows, other.ncols),
            });
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_ptr.push(0);
        for i in 0..self.nrows {
            let (mut p, pe) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut q, qe) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.col_idx[p] } else { usize::MAX };
                let cq = if q < qe { other.col_idx[q] } else { usize::MAX };
                let (c, v) = if cp == cq {
                    let v = a * self.values[p] + b * other.values[q];
                    p += 1;
                    q += 1;
                    (cp, v)
                } else if cp < cq {
                    p += 1;
                    (cp, a * self.values[p - 1])
                } else {
                    q += 1;
                    (cq, b * other.values[q - 1])
                };
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values })
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        match self.lincomb(1.0, &self.transpose(), -1.0) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Largest `|A_ij + A_ji|`.
    pub fn max_skew_defect(&self) -> f64 {
        match self.lincomb(1.0, &self.transpose(), 1.0) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Places `blocks[r][c]` at block position `(r, c)`; `None` is a zero
    /// block. Block rows must agree on height and block columns on width.
    pub fn block(blocks: &[Vec<Option<&SparseMatrix>>]) -> Result<SparseMatrix, SparseError> {
        let nbr = blocks.len();
        let nbc = blocks.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (r, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(SparseError::BlockShape { block_row: r, block_col: row.len() });
            }
            for (c, blk) in row.iter().enumerate() {
                if let Some(m) = blk {
                    let h = *heights[r].get_or_insert(m.nrows);
                    let w = *widths[c].get_or_insert(m.ncols);
                    if h != m.nrows || w != m.ncols {
                        return Err(SparseError::BlockShape { block_row: r, block_col: c });
                    }
                }
            }
        }
        let heights: Vec<usize> = heights.into_iter().map(|h| h.unwrap_or(0)).collect();
        let widths: Vec<usize> = widths.into_iter().map(|w| w.unwrap_or(0)).collect();
        let col_off: Vec<usize> = widths
            .iter()
            .scan(0, |acc, w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect();
        let nrows: usize = heights.iter().sum();
        let ncols: usize = widths.iter().sum();
        let nnz: usize = blocks.iter().flatten().flatten().map(|m| m.nnz()).sum();

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (r, row) in blocks.iter().enumerate() {
            for i in 0..heights[r] {
                // Blocks are visited left to right, so columns stay sorted.
                for (c, blk) in row.iter().enumerate() {
                    if let Some(m) = blk {
                        for (j, v) in m.row(i) {
                            col_idx.push(col_off[c] + j);
                            values.push(v);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        Ok(SparseMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Writes one `row col value` line per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Saddle-point block matrix `[[A, -B^T], [B, 0]]`.
pub fn compose_saddle(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix, SparseError> {
    if a.nrows() != a.ncols() || b.ncols() != a.ncols() {
        return Err(SparseError::DimensionMismatch {
            op: "compose_saddle",
            expected: (a.nrows(), a.nrows()),
            found: (b.nrows(), b.ncols()),
        });
    }
    let neg_bt = b.transpose().scaled(-1.0);
    SparseMatrix::block(&[vec![Some(a), Some(&neg_bt)], vec![Some(b), None]])
}
