//! Sparse symmetric solves over the interior unknowns of a grid.
//!
//! Every linear system in the crate has the form `(Δ_h + diag(s)) x = b`
//! restricted to interior nodes, with boundary values moved to the right-hand
//! side by the caller. The sparsity pattern depends only on the grid, so the
//! symbolic factorization is computed once and reused across Newton steps.
//! The numeric factorization is a pivoted `LBLᵀ`, which also handles the
//! indefinite Jacobians met past a fold.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};
use crate::field::Grid;

const NONE: usize = usize::MAX;

pub(crate) struct InteriorOperator {
    grid: Arc<Grid>,
    unknowns: Vec<usize>,
    slot: Vec<usize>,
    matrix: SparseColMat<usize, f64>,
    diag_pos: Vec<usize>,
    center: f64,
    symbolic: SymbolicCholesky<usize>,
    l_values: Vec<f64>,
    subdiag: Vec<f64>,
    perm_fwd: Vec<usize>,
    perm_inv: Vec<usize>,
    mem: MemBuffer,
    factored: bool,
}

impl InteriorOperator {
    pub fn new(grid: Arc<Grid>) -> Result<Self> {
        let unknowns: Vec<usize> = grid.interior_nodes().collect();
        if unknowns.is_empty() {
            return Err(Error::InvalidGrid("grid has no interior nodes".into()));
        }
        let mut slot = vec![NONE; grid.len()];
        for (i, &k) in unknowns.iter().enumerate() {
            slot[k] = i;
        }
        let ih2 = 1.0 / (grid.h() * grid.h());
        let center = -2.0 * grid.dim() as f64 * ih2;
        let mut triplets = Vec::with_capacity(unknowns.len() * (2 * grid.dim() + 1));
        for (i, &k) in unknowns.iter().enumerate() {
            triplets.push(Triplet::new(i, i, center));
            let (nb, count) = grid.neighbors(k);
            for &m in &nb[..count] {
                if slot[m] != NONE {
                    triplets.push(Triplet::new(slot[m], i, ih2));
                }
            }
        }
        let n = unknowns.len();
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Linear(format!("assembly failed: {e:?}")))?;
        let mut diag_pos = vec![NONE; n];
        {
            let col_ptr = matrix.symbolic().col_ptr();
            let row_idx = matrix.symbolic().row_idx();
            for c in 0..n {
                for pos in col_ptr[c]..col_ptr[c + 1] {
                    if row_idx[pos] == c {
                        diag_pos[c] = pos;
                    }
                }
            }
        }
        let symbolic = factorize_symbolic_cholesky(
            matrix.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Linear(format!("symbolic factorization failed: {e:?}")))?;
        let scratch = symbolic
            .factorize_numeric_intranode_lblt_scratch::<f64>(Par::Seq, Default::default())
            .or(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        Ok(InteriorOperator {
            l_values: vec![0.0; symbolic.len_val()],
            subdiag: vec![0.0; n],
            perm_fwd: vec![0; n],
            perm_inv: vec![0; n],
            mem: MemBuffer::new(scratch),
            grid,
            unknowns,
            slot,
            matrix,
            diag_pos,
            center,
            symbolic,
            factored: false,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Node index of each unknown.
    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    pub fn len(&self) -> usize {
        self.unknowns.len()
    }

    /// Factorizes `Δ_h + diag(shift)`.
    pub fn factor(&mut self, shift: &[f64]) -> Result<()> {
        debug_assert_eq!(shift.len(), self.unknowns.len());
        if let Some(i) = shift.iter().position(|s| !s.is_finite()) {
            return Err(Error::Linear(format!("non-finite diagonal shift at unknown {i}")));
        }
        let vals = self.matrix.val_mut();
        for (i, &s) in shift.iter().enumerate() {
            vals[self.diag_pos[i]] = self.center + s;
        }
        self.symbolic.factorize_numeric_intranode_lblt(
            &mut self.l_values,
            &mut self.subdiag,
            &mut self.perm_fwd,
            &mut self.perm_inv,
            self.matrix.as_ref(),
            Side::Lower,
            Par::Seq,
            MemStack::new(&mut self.mem),
            Default::default(),
        );
        self.factored = true;
        Ok(())
    }

    /// Solves with the last factorization, overwriting `rhs`.
    pub fn solve(&mut self, rhs: &mut [f64]) -> Result<()> {
        if !self.factored {
            return Err(Error::Internal("solve called before factor".into()));
        }
        let n = self.unknowns.len();
        let perm = PermRef::new_checked(&self.perm_fwd, &self.perm_inv, n);
        let lblt = IntranodeLbltRef::new(&self.symbolic, &self.l_values, &self.subdiag, perm);
        lblt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(rhs, n, 1),
            Par::Seq,
            MemStack::new(&mut self.mem),
        );
        if let Some(i) = rhs.iter().position(|v| !v.is_finite()) {
            return Err(Error::Linear(format!("singular or ill-conditioned system (unknown {i})")));
        }
        Ok(())
    }

    /// Gathers node values into unknown order.
    pub fn gather(&self, values: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&k| values[k]).collect()
    }

    /// Writes unknowns back into a node array.
    pub fn scatter(&self, x: &[f64], values: &mut [f64]) {
        for (&k, &v) in self.unknowns.iter().zip(x) {
            values[k] = v;
        }
    }

    /// Contribution of non-interior neighbor values to `Δ_h` at each unknown.
    pub fn boundary_rhs(&self, values: &[f64]) -> Vec<f64> {
        let ih2 = 1.0 / (self.grid.h() * self.grid.h());
        self.unknowns
            .iter()
            .map(|&k| {
                let (nb, count) = self.grid.neighbors(k);
                nb[..count].iter().filter(|&&m| self.slot[m] == NONE).map(|&m| values[m] * ih2).sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_poisson_on_disk() {
        // Δ_h w = 4 with w = |x|² - 1 on the boundary nodes: exact for quadratics.
        let grid = Arc::new(Grid::disk([0.0, 0.0], 1.0, 1.0 / 32.0).unwrap());
        let exact: Vec<f64> = (0..grid.len()).map(|k| {
            let x = grid.coords(k);
            x[0] * x[0] + x[1] * x[1] - 1.0
        }).collect();
        let mut op = InteriorOperator::new(grid.clone()).unwrap();
        let bnd = op.boundary_rhs(&exact);
        let mut rhs: Vec<f64> = bnd.iter().map(|b| 4.0 - b).collect();
        op.factor(&vec![0.0; op.len()]).unwrap();
        op.solve(&mut rhs).unwrap();
        let want = op.gather(&exact);
        let err = rhs.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn indefinite_shift() {
        let grid = Arc::new(Grid::interval(0.0, 1.0, 41).unwrap());
        let mut op = InteriorOperator::new(grid).unwrap();
        let n = op.len();
        // Shift past the first Dirichlet eigenvalue π² makes the matrix indefinite.
        op.factor(&vec![15.0; n]).unwrap();
        let mut x = vec![1.0; n];
        op.solve(&mut x).unwrap();
        let h = 1.0 / 40.0;
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            let r = (left - 2.0 * x[i] + right) / (h * h) + 15.0 * x[i];
            assert!((r - 1.0).abs() < 1e-9);
        }
    }
}
