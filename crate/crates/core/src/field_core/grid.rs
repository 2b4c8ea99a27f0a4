//! Computational grids: boxes [-L, L]^n with Dirichlet boundaries and
//! periodic unit cells with wrap-around indexing. Node coordinates are a
//! pure function of the constructor arguments, so identical parameters
//! reproduce identical grids bit for bit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

pub const MAX_DIM: usize = 3;

/// Uniform grid on [-L, L]^n. Spacing h = 2L/(m-1); nodes x_i = -L + i*h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid<T> {
    dim: usize,
    half_width: T,
    nodes_per_axis: usize,
    spacing: T,
}

impl<T: Real> BoxGrid<T> {
    pub fn new(dim: usize, half_width: T, nodes_per_axis: usize) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidSpec(format!("dim {dim} not in {{2,3}}")));
        }
        if nodes_per_axis < 8 {
            return Err(Error::InsufficientGrid(format!(
                "box grid needs >= 8 nodes per axis, got {nodes_per_axis}"
            )));
        }
        if half_width <= T::zero() || !half_width.is_finite() {
            return Err(Error::InvalidSpec("half_width must be positive".into()));
        }
        let spacing = T::of(2.0) * half_width / T::from_usize_(nodes_per_axis - 1);
        Ok(BoxGrid {
            dim,
            half_width,
            nodes_per_axis,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.pow(self.dim as u32)
    }

    pub fn coord_1d(&self, i: usize) -> T {
        -self.half_width + self.spacing * T::from_usize_(i)
    }

    pub fn coords(&self, idx: &[usize]) -> [T; MAX_DIM] {
        let mut x = [T::zero(); MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.coord_1d(idx[a]);
        }
        x
    }

    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx[..self.dim]
            .iter()
            .all(|&i| i >= 1 && i + 2 <= self.nodes_per_axis)
    }

    pub fn is_boundary(&self, idx: &[usize]) -> bool {
        !self.is_interior(idx)
    }

    /// Flat index, row major (last axis fastest).
    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for a in 0..self.dim {
            f = f * self.nodes_per_axis + idx[a];
        }
        f
    }

    pub fn unflat(&self, mut f: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = f % self.nodes_per_axis;
            f /= self.nodes_per_axis;
        }
        idx
    }

    /// Flat index offset by `delta` nodes along `axis`, or None off-grid.
    pub fn offset(&self, idx: &[usize], axis: usize, delta: isize) -> Option<[usize; MAX_DIM]> {
        let mut out = [0usize; MAX_DIM];
        out[..self.dim].copy_from_slice(&idx[..self.dim]);
        let ni = idx[axis] as isize + delta;
        if ni < 0 || ni >= self.nodes_per_axis as isize {
            return None;
        }
        out[axis] = ni as usize;
        Some(out)
    }

    /// Ordered list of boundary flat indices (ascending).
    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&f| self.is_boundary(&self.unflat(f)))
            .collect()
    }

    /// Ordered list of interior flat indices (ascending).
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&f| self.is_interior(&self.unflat(f)))
            .collect()
    }
}

/// Periodic grid on the cell [0, a_1) x ... x [0, a_n); index arithmetic
/// wraps modulo the per-axis node counts, so periodicity is structural.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid<T> {
    dim: usize,
    periods: Vec<T>,
    nodes_per_axis: Vec<usize>,
    spacing: Vec<T>,
}

impl<T: Real> PeriodicGrid<T> {
    pub fn new(periods: &[T], nodes_per_axis: &[usize]) -> Result<Self> {
        let dim = periods.len();
        if !(1..=MAX_DIM).contains(&dim) || nodes_per_axis.len() != dim {
            return Err(Error::InvalidSpec(format!(
                "periodic grid: {} periods, {} node counts",
                periods.len(),
                nodes_per_axis.len()
            )));
        }
        if periods.iter().any(|&a| a <= T::zero() || !a.is_finite()) {
            return Err(Error::InvalidSpec("periods must be positive".into()));
        }
        if nodes_per_axis.iter().any(|&m| m < 4) {
            return Err(Error::InsufficientGrid(
                "periodic grid needs >= 4 nodes per axis".into(),
            ));
        }
        let spacing = periods
            .iter()
            .zip(nodes_per_axis)
            .map(|(&a, &m)| a / T::from_usize_(m))
            .collect();
        Ok(PeriodicGrid {
            dim,
            periods: periods.to_vec(),
            nodes_per_axis: nodes_per_axis.to_vec(),
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes_per_axis
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.spacing[axis]
    }

    pub fn cell_volume(&self) -> T {
        self.periods.iter().fold(T::one(), |acc, &a| acc * a)
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis.iter().product()
    }

    pub fn coords(&self, idx: &[usize]) -> [T; MAX_DIM] {
        let mut x = [T::zero(); MAX_DIM];
        for a in 0..self.dim {
            x[a] = self.spacing[a] * T::from_usize_(idx[a]);
        }
        x
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for a in 0..self.dim {
            f = f * self.nodes_per_axis[a] + idx[a];
        }
        f
    }

    pub fn unflat(&self, mut f: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = f % self.nodes_per_axis[a];
            f /= self.nodes_per_axis[a];
        }
        idx
    }

    /// Wrapped index offset; always lands on a node.
    pub fn offset(&self, idx: &[usize], axis: usize, delta: isize) -> [usize; MAX_DIM] {
        let m = self.nodes_per_axis[axis] as isize;
        let mut out = [0usize; MAX_DIM];
        out[..self.dim].copy_from_slice(&idx[..self.dim]);
        out[axis] = (((idx[axis] as isize + delta) % m + m) % m) as usize;
        out
    }
}

/// A grid a scalar field can live on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Grid<T> {
    Box(BoxGrid<T>),
    Periodic(PeriodicGrid<T>),
}

impl<T: Real> Grid<T> {
    pub fn dim(&self) -> usize {
        match self {
            Grid::Box(g) => g.dim(),
            Grid::Periodic(g) => g.dim(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Grid::Box(g) => g.node_count(),
            Grid::Periodic(g) => g.node_count(),
        }
    }

    pub fn coords(&self, idx: &[usize]) -> [T; MAX_DIM] {
        match self {
            Grid::Box(g) => g.coords(idx),
            Grid::Periodic(g) => g.coords(idx),
        }
    }

    pub fn unflat(&self, f: usize) -> [usize; MAX_DIM] {
        match self {
            Grid::Box(g) => g.unflat(f),
            Grid::Periodic(g) => g.unflat(f),
        }
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        match self {
            Grid::Box(g) => g.flat(idx),
            Grid::Periodic(g) => g.flat(idx),
        }
    }

    pub fn as_box(&self) -> Result<&BoxGrid<T>> {
        match self {
            Grid::Box(g) => Ok(g),
            Grid::Periodic(_) => Err(Error::GridMismatch("expected a box grid".into())),
        }
    }

    pub fn as_periodic(&self) -> Result<&PeriodicGrid<T>> {
        match self {
            Grid::Periodic(g) => Ok(g),
            Grid::Box(_) => Err(Error::GridMismatch("expected a periodic grid".into())),
        }
    }
}

pub type GridRef<T> = Arc<Grid<T>>;

/// Lattice vector e = sum_i k_i a_i e_i of the period lattice, used in
/// second incremental quotients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeVector<T> {
    coeffs: Vec<i32>,
    realized: Vec<T>,
    norm: T,
}

impl<T: Real> LatticeVector<T> {
    pub fn new(coeffs: &[i32], periods: &[T]) -> Result<Self> {
        if coeffs.len() != periods.len() {
            return Err(Error::LatticeMismatch(format!(
                "{} coefficients vs {} periods",
                coeffs.len(),
                periods.len()
            )));
        }
        if coeffs.iter().all(|&k| k == 0) {
            return Err(Error::InvalidSpec("lattice vector must be nonzero".into()));
        }
        let realized: Vec<T> = coeffs
            .iter()
            .zip(periods)
            .map(|(&k, &a)| T::of(k as f64) * a)
            .collect();
        let norm = realized
            .iter()
            .fold(T::zero(), |acc, &v| acc + v * v)
            .sqrt();
        Ok(LatticeVector {
            coeffs: coeffs.to_vec(),
            realized,
            norm,
        })
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }

    pub fn realized(&self) -> &[T] {
        &self.realized
    }

    pub fn norm(&self) -> T {
        self.norm
    }

    /// Per-axis node steps of this vector on a box grid; the realized
    /// components must be integer multiples of the spacing.
    pub fn index_steps(&self, grid: &BoxGrid<T>) -> Result<Vec<isize>> {
        let h = grid.spacing();
        let mut steps = Vec::with_capacity(self.realized.len());
        for &v in &self.realized {
            let s = (v / h).as_f64();
            let r = s.round();
            if (s - r).abs() > 1e-9 * (1.0 + r.abs()) {
                return Err(Error::LatticeMismatch(format!(
                    "lattice component {} is not a node multiple of spacing {}",
                    v.as_f64(),
                    h.as_f64()
                )));
            }
            steps.push(r as isize);
        }
        Ok(steps)
    }
}
