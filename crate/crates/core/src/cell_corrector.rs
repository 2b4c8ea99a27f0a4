//! Periodic corrector problem: find a mean-zero periodic ξ with
//! det(I + D²ξ) = f_p and I + D²ξ > 0. Newton iteration on the periodic
//! grid; the constant mode is deflated by projecting both the linearized
//! right-hand side and the updates to mean zero (without the projection
//! the periodic linear problem is singular). The mean-zero gauge is this
//! crate's normalization convention for ξ.

use serde::{Deserialize, Serialize};

use crate::density::PeriodicDensitySpec;
use crate::error::{Error, Result};
use crate::field_core::{hessian, GridRef, ScalarField, SymMat};
use crate::krylov::{apply_nondiv_periodic, bicgstab};
use crate::parallel;
use crate::real::Real;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrectorOptions<T> {
    pub tol: T,
    pub max_newton: usize,
    pub max_linear: usize,
    pub damping_levels: u32,
}

impl<T: Real> Default for CorrectorOptions<T> {
    fn default() -> Self {
        CorrectorOptions {
            tol: T::of(1e-8),
            max_newton: 60,
            max_linear: 200_000,
            damping_levels: 8,
        }
    }
}

/// Solved corrector with its residual and (gauge) mean.
#[derive(Clone, Debug)]
pub struct CorrectorField<T> {
    pub xi: ScalarField<T>,
    pub residual: T,
    pub mean: T,
    pub newton_iterations: usize,
}

/// Rescale a periodic density to unit cell average; returns the scaled
/// spec and the scale ⨍f_p, which feeds det(A) = ⨍f in reports.
pub fn normalize_periodic<T: Real>(
    fp: &PeriodicDensitySpec<T>,
) -> Result<(PeriodicDensitySpec<T>, T)> {
    let scale = fp.cell_average()?;
    let scaled = fp.scaled(T::one() / scale);
    Ok((scaled, scale))
}

fn project_mean_zero<T: Real>(v: &mut [T]) {
    let mean = parallel::sum(v) / T::from_usize_(v.len());
    for x in v.iter_mut() {
        *x = *x - mean;
    }
}

struct CellState<T> {
    sup: T,
    min_eig: T,
    resid: Vec<T>,
    cof: Vec<SymMat<T>>,
}

fn evaluate_cell<T: Real>(xi: &[T], fp: &[T], grid: &GridRef<T>) -> Result<CellState<T>> {
    let field = ScalarField::from_values(grid.clone(), xi.to_vec())?;
    let h = hessian(&field)?;
    let dim = grid.dim();
    let n = grid.node_count();
    let mut resid = vec![T::zero(); n];
    let mut cof = vec![SymMat::identity(dim); n];
    let mut sup = T::zero();
    let mut min_eig = T::infinity();
    for (k, &node) in h.site_nodes().iter().enumerate() {
        let mut m = h.mats()[k];
        for i in 0..dim {
            m.set(i, i, m.get(i, i) + T::one());
        }
        let (det, cf) = m.det_and_cofactor();
        let r = det - fp[node];
        resid[node] = r;
        cof[node] = cf;
        sup = sup.max(r.abs());
        min_eig = min_eig.min(m.min_eigenvalue());
    }
    if !sup.is_finite() {
        return Err(Error::NonFinite("corrector residual"));
    }
    Ok(CellState {
        sup,
        min_eig,
        resid,
        cof,
    })
}

/// Newton iteration for the corrector. `fp` must be sampled on a periodic
/// grid with unit discrete mean (the periodic Monge-Ampère measure of one
/// cell equals the cell volume; other means are incompatible).
pub fn solve_corrector<T: Real>(
    fp: &ScalarField<T>,
    opts: &CorrectorOptions<T>,
) -> Result<CorrectorField<T>> {
    let grid = fp.grid().clone();
    let pg = grid.as_periodic()?.clone();
    let mean = fp.mean();
    if (mean - T::one()).abs() > T::of(1e-10) {
        return Err(Error::IncompatibleAverage(mean.as_f64()));
    }
    if fp.min() <= T::zero() {
        return Err(Error::InvalidSpec(
            "corrector density must be positive".into(),
        ));
    }

    let n = grid.node_count();
    let fv = fp.values();
    let mut xi = vec![T::zero(); n];
    let mut state = evaluate_cell(&xi, fv, &grid)?;
    let mut newton_iterations = 0usize;

    while state.sup > opts.tol {
        if newton_iterations >= opts.max_newton {
            return Err(Error::Stagnation {
                residual: state.sup.as_f64(),
            });
        }
        let mut rhs: Vec<T> = state.resid.iter().map(|&r| -r).collect();
        project_mean_zero(&mut rhs);
        let cof = std::mem::take(&mut state.cof);
        let lin_tol = T::of(1e-12).max(T::of(1e-4) * (state.sup / (T::one() + state.sup)));
        let mut delta = vec![T::zero(); n];
        let pg2 = pg.clone();
        bicgstab(
            |x: &[T], y: &mut [T]| {
                apply_nondiv_periodic(&pg2, &cof, x, y);
                project_mean_zero(y);
            },
            &rhs,
            &mut delta,
            None,
            lin_tol,
            opts.max_linear,
        )?;
        project_mean_zero(&mut delta);

        let mut accepted = false;
        let mut positivity_blocked = true;
        let mut s = T::one();
        for _level in 0..=opts.damping_levels {
            let mut trial = xi.clone();
            parallel::axpy(s, &delta, &mut trial);
            project_mean_zero(&mut trial);
            let trial_state = evaluate_cell(&trial, fv, &grid)?;
            if trial_state.min_eig > T::zero() {
                positivity_blocked = false;
                if trial_state.sup < state.sup {
                    xi = trial;
                    state = trial_state;
                    accepted = true;
                    break;
                }
            }
            s = s * T::of(0.5);
        }
        if !accepted {
            if positivity_blocked {
                return Err(Error::LostEllipticity);
            }
            return Err(Error::Stagnation {
                residual: state.sup.as_f64(),
            });
        }
        newton_iterations += 1;
    }

    let field = ScalarField::from_values(grid, xi)?;
    let mean = field.mean();
    Ok(CorrectorField {
        residual: state.sup,
        mean,
        xi: field,
        newton_iterations,
    })
}

/// sup over nodes of |det(I + D²ξ) - f_p|.
pub fn corrector_residual<T: Real>(xi: &ScalarField<T>, fp: &ScalarField<T>) -> Result<T> {
    if xi.grid().as_ref() != fp.grid().as_ref() {
        return Err(Error::GridMismatch(
            "corrector and density grids differ".into(),
        ));
    }
    let state = evaluate_cell(xi.values(), fp.values(), xi.grid())?;
    Ok(state.sup)
}

/// Continuum oracle for separable densities f_p(x) = g(x_1) with unit
/// mean: the corrector is one-dimensional with ξ'' = g - 1, solved here by
/// cumulative double quadrature (trapezoid on a fine uniform grid) with
/// the periodic and mean-zero normalizations. Returns ξ at `nodes` equally
/// spaced points of the unit period.
pub fn separable_oracle<T: Real>(g: impl Fn(f64) -> f64, nodes: usize) -> Vec<T> {
    let refine = 1024usize;
    let n = nodes * refine;
    let h = 1.0 / n as f64;
    // I1(x) = int_0^x (g - 1)
    let mut i1 = vec![0.0f64; n + 1];
    for k in 0..n {
        let a = g(k as f64 * h) - 1.0;
        let b = g((k + 1) as f64 * h) - 1.0;
        i1[k + 1] = i1[k] + 0.5 * h * (a + b);
    }
    // periodic gauge: xi' = I1 + c1 with int_0^1 xi' = 0
    let mut int_i1 = 0.0;
    for k in 0..n {
        int_i1 += 0.5 * h * (i1[k] + i1[k + 1]);
    }
    let c1 = -int_i1;
    // xi(x) = int_0^x xi'
    let mut xi = vec![0.0f64; n + 1];
    for k in 0..n {
        xi[k + 1] = xi[k] + 0.5 * h * ((i1[k] + c1) + (i1[k + 1] + c1));
    }
    let mut mean = 0.0;
    for k in 0..n {
        mean += 0.5 * h * (xi[k] + xi[k + 1]);
    }
    (0..nodes).map(|j| T::of(xi[j * refine] - mean)).collect()
}
