//! Compressed sparse row storage for the level-to-level conductance blocks.

/// A sparse `nrows × ncols` matrix in CSR form.
///
/// Column indices are stored as `u32` to keep the largest generated trees
/// within memory. Explicit zeros are kept: the stored pattern is the
/// incidence of the diagram and a zero value is a (reportable) zero
/// conductance on an existing edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

/// Row-by-row builder for [`Csr`].
#[derive(Debug)]
pub struct CsrBuilder {
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(ncols: usize) -> Self {
        Self::with_capacity(ncols, 0, 0)
    }

    pub fn with_capacity(ncols: usize, rows: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        CsrBuilder {
            ncols,
            row_ptr,
            col_idx: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    /// Appends an entry to the current row.
    pub fn push(&mut self, col: usize, val: f64) {
        assert!(col < self.ncols, "column {col} out of range {}", self.ncols);
        self.col_idx.push(col as u32);
        self.vals.push(val);
    }

    /// Closes the current row. Returns the offending column if the row
    /// contains the same column twice.
    pub fn finish_row(&mut self) -> Result<(), usize> {
        let start = *self.row_ptr.last().unwrap();
        let cols = &self.col_idx[start..];
        if !cols.windows(2).all(|w| w[0] < w[1]) {
            let mut pairs: Vec<(u32, f64)> = self.col_idx[start..]
                .iter()
                .copied()
                .zip(self.vals[start..].iter().copied())
                .collect();
            pairs.sort_by_key(|p| p.0);
            if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(w[0].0 as usize);
            }
            for (k, (c, v)) in pairs.into_iter().enumerate() {
                self.col_idx[start + k] = c;
                self.vals[start + k] = v;
            }
        }
        self.row_ptr.push(self.col_idx.len());
        Ok(())
    }

    pub fn finish(self) -> Csr {
        Csr {
            nrows: self.row_ptr.len() - 1,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            vals: self.vals,
        }
    }
}

impl Csr {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate positions
    /// are rejected and reported.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Csr, (usize, usize)> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut b = CsrBuilder::with_capacity(ncols, nrows, triplets.len());
        let mut it = order.into_iter().peekable();
        for row in 0..nrows {
            while let Some(&k) = it.peek() {
                let (r, c, v) = triplets[k];
                if r != row {
                    break;
                }
                b.push(c, v);
                it.next();
            }
            b.finish_row().map_err(|c| (row, c))?;
        }
        Ok(b.finish())
    }

    pub fn from_dense(rows: &[Vec<f64>], ncols: usize) -> Csr {
        let mut b = CsrBuilder::new(ncols);
        for r in rows {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    b.push(j, v);
                }
            }
            b.finish_row().expect("dense rows have unique columns");
        }
        b.finish()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .map(|&c| c as usize)
            .zip(self.vals[r].iter().copied())
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// All entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[r.clone()];
        cols.binary_search(&(j as u32)).ok().map(|k| self.vals[r.start + k])
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `Aᵀ x`.
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (j, v) in self.row(i) {
                    y[j] += v * xi;
                }
            }
        }
        y
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.tmul_vec(&vec![1.0; self.nrows])
    }

    /// Number of stored entries per column.
    pub fn col_counts(&self) -> Vec<usize> {
        let mut n = vec![0usize; self.ncols];
        for &c in &self.col_idx {
            n[c as usize] += 1;
        }
        n
    }

    pub fn transpose(&self) -> Csr {
        let mut trips = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.iter() {
            trips.push((j, i, v));
        }
        Csr::from_triplets(self.ncols, self.nrows, &trips).expect("transpose keeps positions unique")
    }

    /// Multiplies every stored value by `t`.
    pub fn scaled(&self, t: f64) -> Csr {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= t);
        out
    }

    /// Divides row `i` by `d[i]`.
    pub fn row_scaled_inv(&self, d: &[f64]) -> Csr {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] /= d[i];
            }
        }
        out
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            m[i][j] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_roundtrip_and_products() {
        let a = Csr::from_triplets(2, 3, &[(1, 2, 3.0), (0, 1, 2.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(a.to_dense(), vec![vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]]);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(a.tmul_vec(&[1.0, 2.0]), vec![1.0, 2.0, 6.0]);
        assert_eq!(a.transpose().to_dense(), vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(a.get(1, 2), Some(3.0));
        assert_eq!(a.get(1, 0), None);
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(Csr::from_triplets(1, 2, &[(0, 1, 1.0), (0, 1, 2.0)]), Err((0, 1)));
    }
}
