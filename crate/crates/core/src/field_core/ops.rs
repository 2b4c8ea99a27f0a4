//! Finite-difference calculus on grids: discrete Hessians (second-order
//! central stencils, exact on quadratics), second incremental quotients
//! along lattice vectors, and the divergence of the Hessian cofactor field.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::parallel;
use crate::real::Real;

use super::field::{site_ordinals, ScalarField, SiteSet, SymMatrixField};
use super::grid::{BoxGrid, Grid, LatticeVector, MAX_DIM};
use super::symmat::SymMat;

/// Row-major strides of a box grid.
fn box_strides<T: Real>(g: &BoxGrid<T>) -> [usize; MAX_DIM] {
    let mut s = [0usize; MAX_DIM];
    let mut acc = 1usize;
    for a in (0..g.dim()).rev() {
        s[a] = acc;
        acc *= g.nodes_per_axis();
    }
    s
}

/// Discrete Hessian by central differences. Diagonal entries use the
/// three-point second difference, mixed entries the four-point cross
/// stencil; the result is symmetric by construction and exact on
/// polynomials of degree <= 2. Box grids produce one matrix per interior
/// node, periodic grids one per node (wrap-around).
pub fn hessian<T: Real>(u: &ScalarField<T>) -> Result<SymMatrixField<T>> {
    u.assert_finite("hessian input")?;
    match u.grid().as_ref() {
        Grid::Box(g) => hessian_box(u, g),
        Grid::Periodic(_) => hessian_periodic(u),
    }
}

fn hessian_box<T: Real>(u: &ScalarField<T>, g: &BoxGrid<T>) -> Result<SymMatrixField<T>> {
    let dim = g.dim();
    let strides = box_strides(g);
    let sites = Arc::new(g.interior_indices());
    if sites.is_empty() {
        return Err(Error::InsufficientGrid("no interior nodes".into()));
    }
    let h = g.spacing();
    let inv_h2 = T::one() / (h * h);
    let inv_4h2 = inv_h2 * T::of(0.25);
    let v = u.values();
    let mut mats = vec![SymMat::zero(dim); sites.len()];
    let sites_ref = sites.clone();
    parallel::fill_indexed(&mut mats, |k| {
        let f = sites_ref[k];
        let mut m = SymMat::zero(dim);
        let center = v[f];
        for a in 0..dim {
            let sa = strides[a];
            m.set(a, a, (v[f + sa] + v[f - sa] - center - center) * inv_h2);
            for b in (a + 1)..dim {
                let sb = strides[b];
                let cross = v[f + sa + sb] - v[f + sa - sb] - v[f - sa + sb] + v[f - sa - sb];
                m.set(a, b, cross * inv_4h2);
            }
        }
        m
    });
    let out = SymMatrixField::new(u.grid().clone(), SiteSet::Interior, sites, mats);
    check_mats_finite(&out)?;
    Ok(out)
}

fn hessian_periodic<T: Real>(u: &ScalarField<T>) -> Result<SymMatrixField<T>> {
    let g = u.grid().as_periodic()?.clone();
    let dim = g.dim();
    let n = g.node_count();
    let sites = Arc::new((0..n).collect::<Vec<_>>());
    let v = u.values();
    let mut mats = vec![SymMat::zero(dim.max(2)); n];
    parallel::fill_indexed(&mut mats, |f| {
        let idx = g.unflat(f);
        let mut m = SymMat::zero(dim.max(2));
        for a in 0..dim {
            let ha = g.spacing(a);
            let pa = g.flat(&g.offset(&idx, a, 1));
            let ma = g.flat(&g.offset(&idx, a, -1));
            m.set(a, a, (v[pa] + v[ma] - v[f] - v[f]) / (ha * ha));
            for b in (a + 1)..dim {
                let hb = g.spacing(b);
                let pp = g.flat(&g.offset(&g.offset(&idx, a, 1), b, 1));
                let pm = g.flat(&g.offset(&g.offset(&idx, a, 1), b, -1));
                let mp = g.flat(&g.offset(&g.offset(&idx, a, -1), b, 1));
                let mm = g.flat(&g.offset(&g.offset(&idx, a, -1), b, -1));
                let cross = v[pp] - v[pm] - v[mp] + v[mm];
                m.set(a, b, cross / (T::of(4.0) * ha * hb));
            }
        }
        m
    });
    let out = SymMatrixField::new(u.grid().clone(), SiteSet::All, sites, mats);
    check_mats_finite(&out)?;
    Ok(out)
}

fn check_mats_finite<T: Real>(f: &SymMatrixField<T>) -> Result<()> {
    if f.mats().iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("hessian"));
    }
    Ok(())
}

/// Second incremental quotient (u(x+e) + u(x-e) - 2u(x)) / ||e||^2 at a
/// box-grid node; errors when x +- e leaves the grid.
pub fn second_quotient<T: Real>(
    u: &ScalarField<T>,
    e: &LatticeVector<T>,
    x: &[usize],
) -> Result<T> {
    let g = u.grid().as_box()?;
    let steps = e.index_steps(g)?;
    let m = g.nodes_per_axis() as isize;
    let mut plus = [0usize; MAX_DIM];
    let mut minus = [0usize; MAX_DIM];
    for a in 0..g.dim() {
        let p = x[a] as isize + steps[a];
        let q = x[a] as isize - steps[a];
        if p < 0 || p >= m || q < 0 || q >= m {
            return Err(Error::StencilOutOfRange(x[..g.dim()].to_vec()));
        }
        plus[a] = p as usize;
        minus[a] = q as usize;
    }
    let two = T::of(2.0);
    Ok((u.at(&plus) + u.at(&minus) - two * u.at(x)) / (e.norm() * e.norm()))
}

/// Max over columns j of |central-difference divergence of column j of
/// cof(hessian(u))|, evaluated where the double stencil fits (margin of
/// two nodes on box grids, everywhere on periodic grids). Other nodes
/// hold zero. The continuum field is identically divergence free, so the
/// result measures pure truncation error and decays as O(h^2).
pub fn cofactor_divergence<T: Real>(u: &ScalarField<T>) -> Result<ScalarField<T>> {
    let hess = hessian(u)?;
    let cof = hess.map(|m| m.det_and_cofactor().1);
    let grid = u.grid().clone();
    let dim = grid.dim();
    let ord = site_ordinals(grid.as_ref(), cof.site_nodes());
    let mut out = vec![T::zero(); grid.node_count()];
    match grid.as_ref() {
        Grid::Box(g) => {
            let m = g.nodes_per_axis();
            if m < 5 {
                return Err(Error::InsufficientGrid(
                    "cofactor_divergence needs a margin of two nodes".into(),
                ));
            }
            let strides = box_strides(g);
            let inv_2h = T::one() / (T::of(2.0) * g.spacing());
            let g2 = g.clone();
            let mats = cof.mats();
            parallel::fill_indexed(&mut out, |f| {
                let idx = g2.unflat(f);
                if idx[..dim].iter().any(|&i| i < 2 || i + 3 > m) {
                    return T::zero();
                }
                let mut worst = T::zero();
                for j in 0..dim {
                    let mut div = T::zero();
                    for a in 0..dim {
                        let hi = &mats[ord[f + strides[a]]];
                        let lo = &mats[ord[f - strides[a]]];
                        div = div + (hi.get(a, j) - lo.get(a, j)) * inv_2h;
                    }
                    worst = worst.max(div.abs());
                }
                worst
            });
        }
        Grid::Periodic(g) => {
            let g2 = g.clone();
            let mats = cof.mats();
            parallel::fill_indexed(&mut out, |f| {
                let idx = g2.unflat(f);
                let mut worst = T::zero();
                for j in 0..dim {
                    let mut div = T::zero();
                    for a in 0..dim {
                        let hi = &mats[ord[g2.flat(&g2.offset(&idx, a, 1))]];
                        let lo = &mats[ord[g2.flat(&g2.offset(&idx, a, -1))]];
                        div = div + (hi.get(a, j) - lo.get(a, j)) / (T::of(2.0) * g2.spacing(a));
                    }
                    worst = worst.max(div.abs());
                }
                worst
            });
        }
    }
    ScalarField::from_values(grid, out)
}
