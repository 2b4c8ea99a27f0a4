//! Matrix-free linear solves shared by the solvers and diagnostics:
//! BiCGStab with optional Jacobi scaling, plus stencil applications of
//! second-order operators (nondivergence a:D^2 and flux-divergence form)
//! and the generic Dirichlet reduction.

use crate::error::{Error, Result};
use crate::field_core::grid::{BoxGrid, PeriodicGrid, MAX_DIM};
use crate::field_core::SymMat;
use crate::parallel;
use crate::real::Real;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LinearStats {
    pub iterations: usize,
    #[allow(dead_code)]
    pub rel_residual: f64,
}

/// BiCGStab on A x = b. `apply` must write y = A x for full-length
/// vectors. Convergence is declared on the true relative residual
/// ||b - Ax|| / ||b||; `inv_diag`, when present, is used as a Jacobi
/// left scaling of the iteration.
pub(crate) fn bicgstab<T: Real, F: Fn(&[T], &mut [T]) + Sync>(
    apply: F,
    b: &[T],
    x: &mut [T],
    inv_diag: Option<&[T]>,
    tol_rel: T,
    max_iter: usize,
) -> Result<LinearStats> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let scale = |v: &mut Vec<T>| {
        if let Some(d) = inv_diag {
            for (vi, &di) in v.iter_mut().zip(d) {
                *vi = *vi * di;
            }
        }
    };
    let bnorm_true = parallel::norm2(b);
    if bnorm_true == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(LinearStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }

    let mut bhat = b.to_vec();
    scale(&mut bhat);
    let bnorm = parallel::norm2(&bhat);

    let mut r = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let mut scratch = vec![T::zero(); n];
    let mut iters = 0usize;

    let true_rel = |x: &[T], scratch: &mut Vec<T>| -> T {
        apply(x, scratch);
        let mut acc = T::zero();
        for i in 0..x.len() {
            let d = b[i] - scratch[i];
            acc = acc + d * d;
        }
        acc.sqrt() / bnorm_true
    };

    let mut hat_tol = tol_rel;
    loop {
        let iters_at_restart = iters;
        // (re)start from the current x
        apply(x, &mut r);
        scale(&mut r);
        for i in 0..n {
            r[i] = bhat[i] - r[i];
        }
        let rhat0 = r.clone();
        let mut rho = T::one();
        let mut alpha = T::one();
        let mut omega = T::one();
        let mut first = true;
        while iters < max_iter {
            let rho1 = parallel::dot(&rhat0, &r);
            if rho1.abs() < T::of(1e-300) {
                break; // breakdown; restart or verify below
            }
            if first {
                p.copy_from_slice(&r);
                first = false;
            } else {
                let beta = (rho1 / rho) * (alpha / omega);
                for i in 0..n {
                    p[i] = r[i] + beta * (p[i] - omega * v[i]);
                }
            }
            apply(&p, &mut scratch);
            v.copy_from_slice(&scratch);
            scale(&mut v);
            let denom = parallel::dot(&rhat0, &v);
            if denom.abs() < T::of(1e-300) {
                break;
            }
            alpha = rho1 / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            iters += 1;
            if parallel::norm2(&s) / bnorm <= hat_tol {
                parallel::axpy(alpha, &p, x);
                break;
            }
            apply(&s, &mut scratch);
            t.copy_from_slice(&scratch);
            scale(&mut t);
            let tt = parallel::dot(&t, &t);
            if tt == T::zero() {
                break;
            }
            omega = parallel::dot(&t, &s) / tt;
            for i in 0..n {
                x[i] = x[i] + alpha * p[i] + omega * s[i];
            }
            for i in 0..n {
                r[i] = s[i] - omega * t[i];
            }
            rho = rho1;
            if parallel::norm2(&r) / bnorm <= hat_tol {
                break;
            }
        }
        let rel = true_rel(x, &mut scratch);
        if rel <= tol_rel {
            return Ok(LinearStats {
                iterations: iters.max(1),
                rel_residual: rel.as_f64(),
            });
        }
        if iters >= max_iter || iters == iters_at_restart {
            return Err(Error::LinearSolve(format!(
                "BiCGStab stalled at relative residual {} after {} iterations",
                rel.as_f64(),
                iters
            )));
        }
        hat_tol = hat_tol * T::of(0.25);
    }
}

/// Box stencil geometry captured once per operator.
pub(crate) struct BoxStencil {
    pub dim: usize,
    pub strides: [usize; MAX_DIM],
    pub interior: Vec<bool>,
    pub inv_h2: f64,
}

impl BoxStencil {
    pub fn new<T: Real>(g: &BoxGrid<T>) -> Self {
        let dim = g.dim();
        let m = g.nodes_per_axis();
        let mut strides = [0usize; MAX_DIM];
        let mut acc = 1usize;
        for a in (0..dim).rev() {
            strides[a] = acc;
            acc *= m;
        }
        let mut interior = vec![false; g.node_count()];
        for f in 0..g.node_count() {
            interior[f] = g.is_interior(&g.unflat(f));
        }
        let h = g.spacing().as_f64();
        BoxStencil {
            dim,
            strides,
            interior,
            inv_h2: 1.0 / (h * h),
        }
    }
}

/// y = sum_ij a_ij(x) d_ij u, nondivergence form, at interior nodes
/// (zero elsewhere); `coeffs` is indexed by flat node.
pub(crate) fn apply_nondiv_box<T: Real>(
    st: &BoxStencil,
    coeffs: &[SymMat<T>],
    u: &[T],
    y: &mut [T],
) {
    let dim = st.dim;
    let inv_h2 = T::of(st.inv_h2);
    let inv_4h2 = inv_h2 * T::of(0.25);
    let strides = st.strides;
    let interior = &st.interior;
    parallel::fill_indexed(y, |f| {
        if !interior[f] {
            return T::zero();
        }
        let a = &coeffs[f];
        let mut acc = T::zero();
        let center = u[f];
        for i in 0..dim {
            let si = strides[i];
            acc = acc + a.get(i, i) * (u[f + si] + u[f - si] - center - center) * inv_h2;
            for j in (i + 1)..dim {
                let sj = strides[j];
                let cross = u[f + si + sj] - u[f + si - sj] - u[f - si + sj] + u[f - si - sj];
                acc = acc + T::of(2.0) * a.get(i, j) * cross * inv_4h2;
            }
        }
        acc
    });
}

/// Diagonal of the nondivergence operator (for Jacobi scaling): the mixed
/// cross stencil has no center weight, so only the pure second differences
/// contribute.
pub(crate) fn nondiv_diag<T: Real>(st: &BoxStencil, coeffs: &[SymMat<T>]) -> Vec<T> {
    let inv_h2 = T::of(st.inv_h2);
    let mut d = vec![T::one(); st.interior.len()];
    parallel::fill_indexed(&mut d, |f| {
        if !st.interior[f] {
            return T::one();
        }
        let a = &coeffs[f];
        let mut acc = T::zero();
        for i in 0..st.dim {
            acc = acc - T::of(2.0) * a.get(i, i) * inv_h2;
        }
        if acc == T::zero() {
            T::one()
        } else {
            T::one() / acc
        }
    });
    d
}

/// y = sum_i d_i ( a_ij d_j u ) in flux form: pure terms via half-node
/// averaged fluxes, mixed terms via centered differences of centered
/// fluxes. Zero outside the interior.
pub(crate) fn apply_flux_box<T: Real>(st: &BoxStencil, coeffs: &[SymMat<T>], u: &[T], y: &mut [T]) {
    let dim = st.dim;
    let inv_h2 = T::of(st.inv_h2);
    let inv_h = inv_h2.sqrt();
    let half = T::of(0.5);
    let strides = st.strides;
    let interior = &st.interior;
    parallel::fill_indexed(y, |f| {
        if !interior[f] {
            return T::zero();
        }
        let mut acc = T::zero();
        for i in 0..dim {
            let si = strides[i];
            let a_hi = half * (coeffs[f].get(i, i) + coeffs[f + si].get(i, i));
            let a_lo = half * (coeffs[f].get(i, i) + coeffs[f - si].get(i, i));
            acc = acc + (a_hi * (u[f + si] - u[f]) - a_lo * (u[f] - u[f - si])) * inv_h2;
            for j in 0..dim {
                if i == j {
                    continue;
                }
                let sj = strides[j];
                // d_i^0 ( a_ij d_j^0 u ): flux at f +- s_i
                let flux = |g: usize| -> T {
                    let up = u[g + sj];
                    let dn = u[g - sj];
                    coeffs[g].get(i.min(j), i.max(j)) * (up - dn) * half * inv_h
                };
                acc = acc + (flux(f + si) - flux(f - si)) * half * inv_h;
            }
        }
        acc
    });
}

/// y = sum_ij a_ij d_ij u on a periodic grid (all nodes, wrap-around).
pub(crate) fn apply_nondiv_periodic<T: Real>(
    g: &PeriodicGrid<T>,
    coeffs: &[SymMat<T>],
    u: &[T],
    y: &mut [T],
) {
    let dim = g.dim();
    parallel::fill_indexed(y, |f| {
        let idx = g.unflat(f);
        let a = &coeffs[f];
        let mut acc = T::zero();
        for i in 0..dim {
            let hi = g.spacing(i);
            let pi = g.flat(&g.offset(&idx, i, 1));
            let mi = g.flat(&g.offset(&idx, i, -1));
            acc = acc + a.get(i, i) * (u[pi] + u[mi] - u[f] - u[f]) / (hi * hi);
            for j in (i + 1)..dim {
                let hj = g.spacing(j);
                let pp = g.flat(&g.offset(&g.offset(&idx, i, 1), j, 1));
                let pm = g.flat(&g.offset(&g.offset(&idx, i, 1), j, -1));
                let mp = g.flat(&g.offset(&g.offset(&idx, i, -1), j, 1));
                let mm = g.flat(&g.offset(&g.offset(&idx, i, -1), j, -1));
                let cross = u[pp] - u[pm] - u[mp] + u[mm];
                acc = acc + T::of(2.0) * a.get(i, j) * cross / (T::of(4.0) * hi * hj);
            }
        }
        acc
    });
}

/// Solve L u = rhs on the interior of a box with Dirichlet values `g` on
/// the boundary, for any linear stencil operator `apply` that writes
/// interior rows and zeros elsewhere. Returns the full-grid solution.
pub(crate) fn dirichlet_solve<T: Real, F: Fn(&[T], &mut [T]) + Sync>(
    apply: F,
    interior_mask: &[bool],
    rhs: &[T],
    boundary_values: &[T],
    inv_diag: Option<&[T]>,
    tol_rel: T,
    max_iter: usize,
) -> Result<(Vec<T>, LinearStats)> {
    let n = rhs.len();
    let mut g_ext = vec![T::zero(); n];
    for i in 0..n {
        if !interior_mask[i] {
            g_ext[i] = boundary_values[i];
        }
    }
    let mut b = vec![T::zero(); n];
    apply(&g_ext, &mut b);
    for i in 0..n {
        b[i] = if interior_mask[i] {
            rhs[i] - b[i]
        } else {
            T::zero()
        };
    }
    let mut x = vec![T::zero(); n];
    let stats = bicgstab(&apply, &b, &mut x, inv_diag, tol_rel, max_iter)?;
    for i in 0..n {
        if !interior_mask[i] {
            x[i] = boundary_values[i];
        }
    }
    Ok((x, stats))
}
