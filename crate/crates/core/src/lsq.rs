//! Dense least squares for the decomposition fits: column-scaled normal
//! equations with a drop-tolerant Cholesky factorization. Columns that are
//! (numerically) dependent on earlier ones are dropped in order, which
//! resolves Fourier modes aliased to polynomials on coarse sampling
//! lattices deterministically: the polynomial block is listed first and
//! therefore always wins.

use crate::error::{Error, Result};
use crate::real::Real;

pub(crate) struct LsqFit<T> {
    pub coefs: Vec<T>,
    pub dropped: Vec<usize>,
}

/// Solve min ||B c - y||_2 given a streaming row generator. `fill_row`
/// writes the basis row for sample `s` and returns y_s.
pub(crate) fn least_squares<T: Real>(
    n_basis: usize,
    n_samples: usize,
    mut fill_row: impl FnMut(usize, &mut [T]) -> T,
) -> Result<LsqFit<T>> {
    if n_samples < n_basis {
        return Err(Error::DegenerateFit(format!(
            "{n_samples} samples for {n_basis} basis functions"
        )));
    }
    let mut gram = vec![T::zero(); n_basis * n_basis];
    let mut rhs = vec![T::zero(); n_basis];
    let mut row = vec![T::zero(); n_basis];
    for s in 0..n_samples {
        let y = fill_row(s, &mut row);
        for i in 0..n_basis {
            let ri = row[i];
            if ri == T::zero() {
                continue;
            }
            rhs[i] = rhs[i] + ri * y;
            let gi = &mut gram[i * n_basis..(i + 1) * n_basis];
            for j in i..n_basis {
                gi[j] = gi[j] + ri * row[j];
            }
        }
    }
    // mirror the upper triangle
    for i in 0..n_basis {
        for j in 0..i {
            gram[i * n_basis + j] = gram[j * n_basis + i];
        }
    }
    // column scaling
    let mut scale = vec![T::one(); n_basis];
    for i in 0..n_basis {
        let d = gram[i * n_basis + i];
        scale[i] = if d > T::zero() { d.sqrt() } else { T::zero() };
    }
    let mut dropped = Vec::new();
    let drop_tol = T::of(1e-20); // on the unit-scaled diagonal
                                 // Cholesky on the scaled Gram matrix, dropping dependent columns.
    let idx = |i: usize, j: usize| i * n_basis + j;
    let mut l = vec![T::zero(); n_basis * n_basis];
    let mut alive = vec![true; n_basis];
    for j in 0..n_basis {
        if scale[j] == T::zero() {
            alive[j] = false;
            dropped.push(j);
            continue;
        }
        let mut d = gram[idx(j, j)] / (scale[j] * scale[j]);
        for k in 0..j {
            if alive[k] {
                d = d - l[idx(j, k)] * l[idx(j, k)];
            }
        }
        if d <= drop_tol {
            alive[j] = false;
            dropped.push(j);
            continue;
        }
        let dj = d.sqrt();
        l[idx(j, j)] = dj;
        for i in (j + 1)..n_basis {
            if scale[i] == T::zero() {
                continue;
            }
            let mut v = gram[idx(i, j)] / (scale[i] * scale[j]);
            for k in 0..j {
                if alive[k] {
                    v = v - l[idx(i, k)] * l[idx(j, k)];
                }
            }
            l[idx(i, j)] = v / dj;
        }
    }
    // forward/back substitution on the alive set
    let mut z = vec![T::zero(); n_basis];
    for i in 0..n_basis {
        if !alive[i] {
            continue;
        }
        let mut v = rhs[i] / scale[i];
        for k in 0..i {
            if alive[k] {
                v = v - l[idx(i, k)] * z[k];
            }
        }
        z[i] = v / l[idx(i, i)];
    }
    let mut c = vec![T::zero(); n_basis];
    for i in (0..n_basis).rev() {
        if !alive[i] {
            continue;
        }
        let mut v = z[i];
        for k in (i + 1)..n_basis {
            if alive[k] {
                v = v - l[idx(k, i)] * c[k];
            }
        }
        c[i] = v / l[idx(i, i)];
    }
    for i in 0..n_basis {
        c[i] = if alive[i] { c[i] / scale[i] } else { T::zero() };
    }
    if !c.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite coefficients".into()));
    }
    Ok(LsqFit { coefs: c, dropped })
}

/// Slope/intercept of the least-squares line y = a + b x with the standard
/// error of the slope.
pub(crate) fn line_fit<T: Real>(xs: &[T], ys: &[T]) -> (T, T, T) {
    let n = T::from_usize_(xs.len());
    let mx = xs.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = ys.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let e = y - (intercept + slope * x);
        sse = sse + e * e;
    }
    let dof = xs.len().saturating_sub(2);
    let stderr = if dof > 0 && sxx > T::zero() {
        (sse / (T::from_usize_(dof) * sxx)).sqrt()
    } else {
        T::zero()
    };
    (slope, intercept, stderr)
}
