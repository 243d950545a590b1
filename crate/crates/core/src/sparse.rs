//! Sparse assembly and direct factorization.
//!
//! Every system in the solver keeps a fixed sparsity pattern for the whole
//! run (the mesh topology never changes), so the symbolic analysis is done
//! once and only the numeric factorization is repeated per time step.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::{MatMut, Side};

use crate::error::{FsiError, Result};

/// Coordinate-format accumulator. Duplicate entries are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct TripletList {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletList {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            ..Default::default()
        }
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
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Appends every stored entry of `m`, scaled, with indices remapped.
    /// Entries whose row or column map to `None` are skipped.
    pub fn extend_mapped(
        &mut self,
        m: &CsrMatrix,
        scale: f64,
        map: impl Fn(usize) -> Option<usize>,
    ) {
        for (r, c, v) in m.iter() {
            if let (Some(rr), Some(cc)) = (map(r), map(c)) {
                self.push(rr, cc, scale * v);
            }
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, &self.rows, &self.cols, &self.vals)
    }
}

/// Compressed sparse row matrix used for the small operators (shell
/// blocks, mass matrices) that are multiplied far more often than they
/// are factorized.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from coordinate triplets, summing duplicates.
    /// Explicit zeros are kept so patterns stay value-independent.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
    ) -> Self {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_unstable_by_key(|&k| (rows[k], cols[k]));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(vals.len());
        let mut values: Vec<f64> = Vec::with_capacity(vals.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let key = (rows[k], cols[k]);
            if last == Some(key) {
                *values.last_mut().expect("non-empty") += vals[k];
            } else {
                row_ptr[key.0 + 1] += 1;
                col_idx.push(key.1);
                values.push(vals[k]);
                last = Some(key);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
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

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// Entries `(col, value)` of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_add(1.0, x, &mut y);
        y
    }

    /// `y += alpha * A x`
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr += alpha * acc;
        }
    }

    /// `xᵀ A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.iter() {
            d[r][c] += v;
        }
        d
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.iter()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

/// A fixed-pattern square system that can be refactorized with new values.
pub struct PatternLu {
    n: usize,
    symbolic_mat: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic_lu: SymbolicLu<usize>,
    numeric: Option<Lu<usize, f64>>,
    n_triplets: usize,
    context: &'static str,
}

impl PatternLu {
    /// Analyzes the pattern of `triplets`; values are ignored.
    pub fn analyze(triplets: &TripletList, context: &'static str) -> Result<Self> {
        if triplets.nrows != triplets.ncols {
            return Err(solver_err(context, "system matrix is not square"));
        }
        let n = triplets.nrows;
        let (symbolic_mat, argsort) = symbolic_pattern(triplets, context)?;
        let symbolic_lu = SymbolicLu::try_new(symbolic_mat.as_ref())
            .map_err(|e| solver_err(context, format!("symbolic LU: {e:?}")))?;
        Ok(Self {
            n,
            symbolic_mat,
            argsort,
            symbolic_lu,
            numeric: None,
            n_triplets: triplets.len(),
            context,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Numerically factorizes new values laid out exactly like the
    /// triplets passed to [`PatternLu::analyze`].
    pub fn factorize(&mut self, triplets: &TripletList) -> Result<()> {
        let mat = self.matrix(triplets)?;
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat.as_ref())
            .map_err(|e| solver_err(self.context, format!("numeric LU: {e:?}")))?;
        self.numeric = Some(lu);
        Ok(())
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        let lu = self
            .numeric
            .as_ref()
            .ok_or_else(|| solver_err(self.context, "solve called before factorize"))?;
        if rhs.len() != self.n {
            return Err(solver_err(self.context, "right-hand side has wrong length"));
        }
        let n = self.n;
        lu.solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
        check_finite(rhs, self.context)
    }

    fn matrix(&self, triplets: &TripletList) -> Result<SparseColMat<usize, f64>> {
        if triplets.len() != self.n_triplets {
            return Err(solver_err(
                self.context,
                "triplet count differs from analyzed pattern",
            ));
        }
        SparseColMat::new_from_argsort(self.symbolic_mat.clone(), &self.argsort, &triplets.vals)
            .map_err(|e| solver_err(self.context, format!("assembly: {e:?}")))
    }
}

/// Symmetric positive definite system, factorized once.
pub struct SpdFactor {
    n: usize,
    llt: Llt<usize, f64>,
    context: &'static str,
}

impl SpdFactor {
    pub fn new(triplets: &TripletList, context: &'static str) -> Result<Self> {
        let (symbolic_mat, argsort) = symbolic_pattern(triplets, context)?;
        let mat = SparseColMat::new_from_argsort(symbolic_mat, &argsort, &triplets.vals)
            .map_err(|e| solver_err(context, format!("assembly: {e:?}")))?;
        let symbolic = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
            .map_err(|e| solver_err(context, format!("symbolic Cholesky: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(symbolic, mat.as_ref(), Side::Lower)
            .map_err(|e| solver_err(context, format!("Cholesky: {e:?}")))?;
        Ok(Self {
            n: triplets.nrows,
            llt,
            context,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        self.llt
            .solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
        check_finite(rhs, self.context)
    }
}

/// One-shot sparse LU solve for small systems assembled fresh every call.
pub fn solve_once(triplets: &TripletList, rhs: &mut [f64], context: &'static str) -> Result<()> {
    let mut lu = PatternLu::analyze(triplets, context)?;
    lu.factorize(triplets)?;
    lu.solve_in_place(rhs)
}

fn symbolic_pattern(
    triplets: &TripletList,
    context: &'static str,
) -> Result<(SymbolicSparseColMat<usize>, Argsort<usize>)> {
    let pairs: Vec<Pair<usize, usize>> = triplets
        .rows
        .iter()
        .zip(&triplets.cols)
        .map(|(&row, &col)| Pair { row, col })
        .collect();
    SymbolicSparseColMat::try_new_from_indices(triplets.nrows, triplets.ncols, &pairs)
        .map_err(|e| solver_err(context, format!("pattern: {e:?}")))
}

fn check_finite(x: &[f64], context: &'static str) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(solver_err(
            context,
            format!("non-finite solution entry at index {i} (singular or ill-conditioned system)"),
        )),
    }
}

fn solver_err(context: &'static str, reason: impl Into<String>) -> FsiError {
    FsiError::Solver {
        context,
        reason: reason.into(),
    }
}
