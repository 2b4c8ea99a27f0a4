//! Node-valued data: scalar fields (one value per node) and symmetric
//! matrix fields (one matrix per stencil-admissible node).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::parallel;
use crate::real::Real;

use super::grid::{Grid, GridRef, MAX_DIM};
use super::symmat::SymMat;

#[derive(Clone, Debug)]
pub struct ScalarField<T> {
    grid: GridRef<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: GridRef<T>) -> Self {
        let n = grid.node_count();
        ScalarField {
            grid,
            values: vec![T::zero(); n],
        }
    }

    pub fn from_values(grid: GridRef<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ScalarField::from_values"));
        }
        Ok(ScalarField { grid, values })
    }

    /// Sample a function of the node coordinates.
    pub fn from_fn(grid: GridRef<T>, f: impl Fn(&[T]) -> T + Sync) -> Result<Self> {
        let mut values = vec![T::zero(); grid.node_count()];
        let g = grid.clone();
        parallel::fill_indexed(&mut values, |i| {
            let idx = g.unflat(i);
            f(&g.coords(&idx)[..g.dim()])
        });
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &GridRef<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn at(&self, idx: &[usize]) -> T {
        self.values[self.grid.flat(idx)]
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn mean(&self) -> T {
        parallel::sum(&self.values) / T::from_usize_(self.values.len())
    }

    pub fn sup_abs(&self) -> T {
        parallel::sup_abs(&self.values)
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |acc, &v| acc.min(v))
    }

    pub fn max(&self) -> T {
        self.values
            .iter()
            .fold(T::neg_infinity(), |acc, &v| acc.max(v))
    }

    pub fn assert_finite(&self, context: &'static str) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(context));
        }
        Ok(())
    }
}

/// Which nodes of the grid a matrix field covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteSet {
    /// Interior nodes of a box grid, ascending flat order.
    Interior,
    /// Every node (periodic grids).
    All,
}

#[derive(Clone, Debug)]
pub struct SymMatrixField<T> {
    grid: GridRef<T>,
    sites: SiteSet,
    /// Flat node index of each site, ascending.
    site_nodes: Arc<Vec<usize>>,
    mats: Vec<SymMat<T>>,
}

impl<T: Real> SymMatrixField<T> {
    pub fn new(
        grid: GridRef<T>,
        sites: SiteSet,
        site_nodes: Arc<Vec<usize>>,
        mats: Vec<SymMat<T>>,
    ) -> Self {
        assert_eq!(site_nodes.len(), mats.len());
        SymMatrixField {
            grid,
            sites,
            site_nodes,
            mats,
        }
    }

    pub fn grid(&self) -> &GridRef<T> {
        &self.grid
    }

    pub fn sites(&self) -> SiteSet {
        self.sites
    }

    pub fn site_nodes(&self) -> &[usize] {
        &self.site_nodes
    }

    pub fn mats(&self) -> &[SymMat<T>] {
        &self.mats
    }

    pub fn mats_mut(&mut self) -> &mut [SymMat<T>] {
        &mut self.mats
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Map every matrix in place.
    pub fn map(&self, f: impl Fn(&SymMat<T>) -> SymMat<T> + Sync) -> Self
    where
        SymMat<T>: Send,
    {
        let mut mats = vec![SymMat::zero(self.grid.dim()); self.mats.len()];
        parallel::fill_indexed(&mut mats, |i| f(&self.mats[i]));
        SymMatrixField {
            grid: self.grid.clone(),
            sites: self.sites,
            site_nodes: self.site_nodes.clone(),
            mats,
        }
    }

    pub fn min_over_sites(&self, f: impl Fn(&SymMat<T>) -> T + Sync) -> T {
        -parallel::max_indexed(self.mats.len(), |i| -f(&self.mats[i]))
    }

    pub fn max_over_sites(&self, f: impl Fn(&SymMat<T>) -> T + Sync) -> T {
        parallel::max_indexed(self.mats.len(), |i| f(&self.mats[i]))
    }
}

/// Lookup table from flat node index to site ordinal (usize::MAX when the
/// node carries no matrix). Shared by the stencil kernels.
pub fn site_ordinals<T: Real>(grid: &Grid<T>, site_nodes: &[usize]) -> Vec<usize> {
    let mut ord = vec![usize::MAX; grid.node_count()];
    for (k, &f) in site_nodes.iter().enumerate() {
        ord[f] = k;
    }
    ord
}

/// Coordinates of a flat index, padded to MAX_DIM.
pub fn node_coords<T: Real>(grid: &Grid<T>, flat: usize) -> [T; MAX_DIM] {
    let idx = grid.unflat(flat);
    grid.coords(&idx)
}
