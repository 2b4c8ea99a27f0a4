//! Decompose computed solutions into parabola + periodic + remainder,
//! estimate the decay exponent of the remainder, and run the proof-step
//! diagnostics: second-quotient scans, level-set geometry, Green's
//! function decay for the cofactor operator, and the ABP ratio.

use serde::{Deserialize, Serialize};

use crate::density::{DensitySpec, PeriodicDensitySpec, TrigTerm};
use crate::error::{Error, Result};
use crate::field_core::grid::MAX_DIM;
use crate::field_core::{hessian, GridRef, LatticeVector, ScalarField, SymMat, SymMatrixField};
use crate::krylov::{apply_flux_box, apply_nondiv_box, dirichlet_solve, nondiv_diag, BoxStencil};
use crate::lsq::{least_squares, line_fit};
use crate::ma_dirichlet::QuadraticProfile;
use crate::real::Real;

/// Interior nodes of a box grid with r0 <= |x| < r1.
#[derive(Clone, Debug)]
pub struct AnnulusSpec<T> {
    r0: T,
    r1: T,
    nodes: Vec<usize>,
    mean_radius: T,
}

impl<T: Real> AnnulusSpec<T> {
    pub fn new(grid: &GridRef<T>, r0: T, r1: T) -> Result<Self> {
        let g = grid.as_box()?;
        if !(T::zero() < r0 && r0 < r1) {
            return Err(Error::InvalidSpec("need 0 < r0 < r1".into()));
        }
        if r1 > g.half_width() * T::of(1.0 + 1e-12) {
            return Err(Error::InvalidSpec(
                "annulus reaches past the box half-width".into(),
            ));
        }
        let dim = g.dim();
        let mut nodes = Vec::new();
        let mut radius_sum = T::zero();
        for f in 0..g.node_count() {
            let idx = g.unflat(f);
            if !g.is_interior(&idx) {
                continue;
            }
            let x = g.coords(&idx);
            let r = x[..dim].iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
            if r >= r0 && r < r1 {
                nodes.push(f);
                radius_sum = radius_sum + r;
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "annulus [{}, {}) holds no interior nodes",
                r0.as_f64(),
                r1.as_f64()
            )));
        }
        let mean_radius = radius_sum / T::from_usize_(nodes.len());
        Ok(AnnulusSpec {
            r0,
            r1,
            nodes,
            mean_radius,
        })
    }

    pub fn bounds(&self) -> (T, T) {
        (self.r0, self.r1)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn mean_radius(&self) -> T {
        self.mean_radius
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnnulusResidual<T> {
    pub mean_radius: T,
    pub sup_residual: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::Zero"))]
pub struct DecompositionFit<T> {
    pub a: SymMat<T>,
    pub b: [T; MAX_DIM],
    pub c: T,
    /// Lattice-dual Fourier coefficients of the periodic part, order <= K.
    pub fourier: Vec<TrigTerm<T>>,
    pub annulus_residuals: Vec<AnnulusResidual<T>>,
    pub sigma_hat: T,
    pub sigma_stderr: T,
    pub a_spd: bool,
    /// Basis columns dropped as dependent (Fourier modes aliased to
    /// polynomials on coarse sampling lattices).
    pub dropped_columns: usize,
}

impl<T: Real> DecompositionFit<T> {
    pub fn profile(&self) -> Result<QuadraticProfile<T>> {
        QuadraticProfile::new(self.a, self.b, self.c)
    }
}

/// Basis {quadratic monomials, linear, constant, Fourier modes of order
/// <= K on the dual lattice}; the polynomial block comes first so that it
/// wins over any aliased Fourier column.
struct FitBasis<T> {
    dim: usize,
    periods: Vec<T>,
    modes: Vec<Vec<i32>>,
    n_quad: usize,
}

impl<T: Real> FitBasis<T> {
    fn new(dim: usize, periods: &[T], order: usize) -> Self {
        let mut modes: Vec<Vec<i32>> = Vec::new();
        let k = order as i32;
        let mut scan = vec![-k; dim];
        loop {
            // canonical half: first nonzero entry positive
            if let Some(first) = scan.iter().find(|&&v| v != 0) {
                if *first > 0 {
                    modes.push(scan.clone());
                }
            }
            let mut axis = dim;
            loop {
                if axis == 0 {
                    break;
                }
                axis -= 1;
                scan[axis] += 1;
                if scan[axis] <= k {
                    break;
                }
                scan[axis] = -k;
            }
            if scan.iter().all(|&v| v == -k) {
                break;
            }
        }
        let n_quad = dim * (dim + 1) / 2;
        FitBasis {
            dim,
            periods: periods.to_vec(),
            modes,
            n_quad,
        }
    }

    fn len(&self) -> usize {
        self.n_quad + self.dim + 1 + 2 * self.modes.len()
    }

    fn fill_row(&self, x: &[T], row: &mut [T]) {
        let mut c = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                row[c] = x[i] * x[j];
                c += 1;
            }
        }
        for i in 0..self.dim {
            row[c] = x[i];
            c += 1;
        }
        row[c] = T::one();
        c += 1;
        let two_pi = T::of(2.0 * std::f64::consts::PI);
        for m in &self.modes {
            let mut theta = T::zero();
            for i in 0..self.dim {
                theta = theta + two_pi * T::of(m[i] as f64) * x[i] / self.periods[i];
            }
            row[c] = theta.cos();
            row[c + 1] = theta.sin();
            c += 2;
        }
    }

    fn eval(&self, coefs: &[T], x: &[T], row: &mut [T]) -> T {
        self.fill_row(x, row);
        let mut acc = T::zero();
        for (ci, ri) in coefs.iter().zip(row.iter()) {
            acc = acc + *ci * *ri;
        }
        acc
    }
}

/// Linear least squares of u against the decomposition basis on the
/// outermost annulus; per-annulus sup residuals on every annulus; the
/// decay exponent from log residual vs log radius over the non-fitting
/// annuli.
pub fn fit_decomposition<T: Real>(
    u: &ScalarField<T>,
    annuli: &[AnnulusSpec<T>],
    fp: &PeriodicDensitySpec<T>,
    order: usize,
) -> Result<DecompositionFit<T>> {
    let grid = u.grid().clone();
    let g = grid.as_box()?;
    let dim = g.dim();
    if annuli.len() < 3 {
        return Err(Error::InvalidSpec("need at least 3 annuli".into()));
    }
    if order > g.nodes_per_axis() / 4 {
        return Err(Error::InvalidSpec(format!(
            "Fourier order {} exceeds nodes_per_axis/4",
            order
        )));
    }
    if fp.dim() != dim {
        return Err(Error::GridMismatch("density dimension differs".into()));
    }
    let basis = FitBasis::new(dim, fp.periods(), order);
    let fit_idx = (0..annuli.len())
        .max_by(|&i, &j| {
            annuli[i]
                .r1
                .partial_cmp(&annuli[j].r1)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let fit_nodes = annuli[fit_idx].nodes();
    let vals = u.values();
    let n_cols = basis.len();
    let fit = least_squares(n_cols, fit_nodes.len(), |s, row| {
        let f = fit_nodes[s];
        let idx = grid.unflat(f);
        let x = grid.coords(&idx);
        basis.fill_row(&x[..dim], row);
        vals[f]
    })?;
    // the polynomial block must survive; aliased Fourier columns may drop
    if fit.dropped.iter().any(|&c| c < basis.n_quad + dim + 1) {
        return Err(Error::DegenerateFit(
            "polynomial block is rank deficient on the fitting annulus".into(),
        ));
    }

    let mut a = SymMat::zero(dim);
    let mut col = 0;
    for i in 0..dim {
        for j in i..dim {
            if i == j {
                a.set(i, j, T::of(2.0) * fit.coefs[col]);
            } else {
                a.set(i, j, fit.coefs[col]);
            }
            col += 1;
        }
    }
    let mut b = [T::zero(); MAX_DIM];
    for i in 0..dim {
        b[i] = fit.coefs[col];
        col += 1;
    }
    let c = fit.coefs[col];
    col += 1;
    let mut fourier = Vec::with_capacity(basis.modes.len());
    for m in &basis.modes {
        fourier.push(TrigTerm {
            k: m.clone(),
            cos: fit.coefs[col],
            sin: fit.coefs[col + 1],
        });
        col += 2;
    }

    let mut row = vec![T::zero(); n_cols];
    let mut residuals = Vec::with_capacity(annuli.len());
    for ann in annuli {
        let mut sup = T::zero();
        for &f in ann.nodes() {
            let idx = grid.unflat(f);
            let x = grid.coords(&idx);
            let fitted = basis.eval(&fit.coefs, &x[..dim], &mut row);
            sup = sup.max((vals[f] - fitted).abs());
        }
        residuals.push(AnnulusResidual {
            mean_radius: ann.mean_radius(),
            sup_residual: sup,
        });
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, r) in residuals.iter().enumerate() {
        if i != fit_idx && r.sup_residual > T::of(1e-13) {
            xs.push(r.mean_radius.ln());
            ys.push(r.sup_residual.ln());
        }
    }
    let (sigma_hat, sigma_stderr) = if xs.len() >= 2 {
        let (slope, _, stderr) = line_fit(&xs, &ys);
        (-slope, stderr)
    } else {
        (T::zero(), T::zero())
    };

    Ok(DecompositionFit {
        a_spd: a.min_eigenvalue() > T::zero(),
        a,
        b,
        c,
        fourier,
        annulus_residuals: residuals,
        sigma_hat,
        sigma_stderr,
        dropped_columns: fit.dropped.len(),
    })
}

/// det(A) - the cell average of the periodic density (the perturbation
/// averages out at infinity).
pub fn check_det_a<T: Real>(fit: &DecompositionFit<T>, spec: &DensitySpec<T>) -> Result<T> {
    Ok(fit.a.det() - spec.base().cell_average()?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuotientStats<T> {
    pub mean_radius: T,
    pub min: T,
    pub max: T,
    /// sup over e and nodes of |second quotient - 1|.
    pub sup_dev_from_one: T,
    pub skipped: usize,
}

/// Per-annulus extremes of the second incremental quotient over the given
/// lattice vectors. Nodes whose stencil leaves the grid are skipped and
/// counted.
pub fn quotient_scan<T: Real>(
    u: &ScalarField<T>,
    lattice: &[LatticeVector<T>],
    annuli: &[AnnulusSpec<T>],
) -> Result<Vec<QuotientStats<T>>> {
    let grid = u.grid().clone();
    let g = grid.as_box()?;
    let dim = g.dim();
    let m = g.nodes_per_axis() as isize;
    let mut steps = Vec::with_capacity(lattice.len());
    for e in lattice {
        steps.push((e.index_steps(g)?, e.norm() * e.norm()));
    }
    let vals = u.values();
    let mut out = Vec::with_capacity(annuli.len());
    for ann in annuli {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut dev = T::zero();
        let mut skipped = 0usize;
        for &f in ann.nodes() {
            let idx = g.unflat(f);
            for (st, norm2) in &steps {
                let mut plus = [0usize; MAX_DIM];
                let mut minus = [0usize; MAX_DIM];
                let mut ok = true;
                for a in 0..dim {
                    let p = idx[a] as isize + st[a];
                    let q = idx[a] as isize - st[a];
                    if p < 0 || p >= m || q < 0 || q >= m {
                        ok = false;
                        break;
                    }
                    plus[a] = p as usize;
                    minus[a] = q as usize;
                }
                if !ok {
                    skipped += 1;
                    continue;
                }
                let q =
                    (vals[g.flat(&plus)] + vals[g.flat(&minus)] - T::of(2.0) * vals[f]) / *norm2;
                lo = lo.min(q);
                hi = hi.max(q);
                dev = dev.max((q - T::one()).abs());
            }
        }
        out.push(QuotientStats {
            mean_radius: ann.mean_radius(),
            min: lo,
            max: hi,
            sup_dev_from_one: dev,
            skipped,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSetEntry<T> {
    pub level: T,
    pub volume: T,
    /// Square roots of the inertia-ellipsoid eigenvalues.
    pub axes: Vec<T>,
    /// Circumscribed over inscribed radius of the volume-normalized set.
    pub radius_ratio: T,
    pub truncated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSetReport<T> {
    pub entries: Vec<LevelSetEntry<T>>,
    pub growth_exponent: T,
    pub growth_stderr: T,
}

/// Sub-level set geometry of a normalized solution: volumes by node
/// counting, inertia-ellipsoid normalization, radius ratios, and the
/// growth exponent of |{u < M}| against M.
pub fn level_sets<T: Real>(u: &ScalarField<T>, m_values: &[T]) -> Result<LevelSetReport<T>> {
    let grid = u.grid().clone();
    let g = grid.as_box()?;
    let dim = g.dim();
    let h = g.spacing();
    let vals = u.values();
    // locate the minimum; it must sit near the center of the box
    let mut min_f = 0usize;
    let mut min_v = T::infinity();
    for (f, &v) in vals.iter().enumerate() {
        if v < min_v {
            min_v = v;
            min_f = f;
        }
    }
    let xmin = g.coords(&g.unflat(min_f));
    let rmin = xmin[..dim].iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    let near = (T::of(4.0) * h).max(g.half_width() * T::of(0.05));
    if rmin > near {
        return Err(Error::InvalidSpec(format!(
            "minimum sits at radius {}, not near the center",
            rmin.as_f64()
        )));
    }

    let hn = h.powi(dim as i32);
    let mut entries: Vec<LevelSetEntry<T>> = Vec::with_capacity(m_values.len());
    for &level in m_values {
        let mut members: Vec<usize> = Vec::new();
        let mut truncated = false;
        for (f, &v) in vals.iter().enumerate() {
            if v - min_v < level {
                let idx = g.unflat(f);
                if g.is_boundary(&idx) {
                    truncated = true;
                }
                members.push(f);
            }
        }
        let volume = T::from_usize_(members.len()) * hn;
        if members.len() < 20 {
            entries.push(LevelSetEntry {
                level,
                volume,
                axes: vec![T::zero(); dim],
                radius_ratio: T::one(),
                truncated: true,
            });
            continue;
        }
        // centroid and second moments
        let count = T::from_usize_(members.len());
        let mut centroid = [T::zero(); MAX_DIM];
        for &f in &members {
            let x = g.coords(&g.unflat(f));
            for a in 0..dim {
                centroid[a] = centroid[a] + x[a];
            }
        }
        for a in 0..dim {
            centroid[a] = centroid[a] / count;
        }
        let mut second = SymMat::zero(dim);
        for &f in &members {
            let x = g.coords(&g.unflat(f));
            for a in 0..dim {
                for b in a..dim {
                    second.set(
                        a,
                        b,
                        second.get(a, b) + (x[a] - centroid[a]) * (x[b] - centroid[b]),
                    );
                }
            }
        }
        second = second.scale(T::one() / count);
        let evs = second.eigenvalues();
        let ev_slice = if dim == 2 { &evs[..2] } else { &evs[..3] };
        let axes: Vec<T> = ev_slice.iter().map(|&l| l.max(T::zero()).sqrt()).collect();
        // volume-preserving normalization A = det(S)^{1/2n} S^{-1/2}
        let mut vecs: Vec<[T; 3]> = Vec::new();
        for &l in ev_slice {
            let v = second.eigenvector(l, &vecs);
            vecs.push(v);
        }
        let det_s = ev_slice.iter().fold(T::one(), |acc, &l| acc * l);
        let ratio = if det_s > T::zero() {
            let lam = det_s.powf(T::one() / T::of(2.0 * dim as f64));
            let to_normalized = |x: &[T]| -> T {
                // |A (x - centroid)| with A = lam S^{-1/2}
                let mut y2 = T::zero();
                for (k, v) in vecs.iter().enumerate() {
                    let mut proj = T::zero();
                    for a in 0..dim {
                        proj = proj + (x[a] - centroid[a]) * v[a];
                    }
                    let scaled = lam * proj / ev_slice[k].sqrt();
                    y2 = y2 + scaled * scaled;
                }
                y2.sqrt()
            };
            let mut r_out = T::zero();
            for &f in &members {
                let x = g.coords(&g.unflat(f));
                r_out = r_out.max(to_normalized(&x[..dim]));
            }
            let mut r_in = T::infinity();
            let member_set: std::collections::HashSet<usize> = members.iter().copied().collect();
            for f in 0..g.node_count() {
                if !member_set.contains(&f) {
                    let x = g.coords(&g.unflat(f));
                    r_in = r_in.min(to_normalized(&x[..dim]));
                }
            }
            if r_in > T::zero() && r_in.is_finite() {
                r_out / r_in
            } else {
                T::infinity()
            }
        } else {
            T::infinity()
        };
        entries.push(LevelSetEntry {
            level,
            volume,
            axes,
            radius_ratio: ratio,
            truncated,
        });
    }
    for w in entries.windows(2) {
        if w[1].volume < w[0].volume {
            return Err(Error::InvalidSpec("level-set volumes must increase".into()));
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for e in &entries {
        if !e.truncated && e.volume > T::zero() {
            xs.push(e.level.ln());
            ys.push(e.volume.ln());
        }
    }
    let (growth_exponent, growth_stderr) = if xs.len() >= 2 {
        let (slope, _, stderr) = line_fit(&xs, &ys);
        (slope, stderr)
    } else {
        (T::zero(), T::infinity())
    };
    Ok(LevelSetReport {
        entries,
        growth_exponent,
        growth_stderr,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreenDecay<T> {
    /// Fitted exponent of G ~ a r^slope + offset; the additive offset
    /// absorbs the image term of the zero boundary condition.
    pub slope: T,
    pub amplitude: T,
    pub offset: T,
    /// Log-binned (radius, mean G) samples for export.
    pub samples: Vec<(T, T)>,
}

/// Assemble -d_i(a_ij d_j .) with a = cof(D²u) in flux form, solve against
/// a discrete delta with zero boundary data, and fit a power law with
/// offset to G over radii in [4h, L/4].
pub fn green_decay<T: Real>(u: &ScalarField<T>, source: &[usize]) -> Result<GreenDecay<T>> {
    let grid = u.grid().clone();
    let g = grid.as_box()?;
    let dim = g.dim();
    if dim != 3 {
        return Err(Error::InvalidSpec(
            "green decay diagnostic is for n = 3".into(),
        ));
    }
    let m = g.nodes_per_axis();
    for a in 0..dim {
        let margin = source[a].min(m - 1 - source[a]);
        if margin < m / 4 {
            return Err(Error::InvalidSpec(
                "source must sit at least m/4 nodes from the boundary".into(),
            ));
        }
    }
    let hess = hessian(u)?;
    let mut min_eig = T::infinity();
    let mut coeffs = vec![SymMat::identity(dim); g.node_count()];
    for (k, &f) in hess.site_nodes().iter().enumerate() {
        let cof = hess.mats()[k].det_and_cofactor().1;
        min_eig = min_eig.min(cof.min_eigenvalue());
        coeffs[f] = cof;
    }
    if min_eig <= T::zero() {
        return Err(Error::LostEllipticity);
    }
    // extend coefficients to the boundary by clamping to the nearest
    // interior node (the fit never looks near the boundary)
    for f in 0..g.node_count() {
        let idx = g.unflat(f);
        if g.is_boundary(&idx) {
            let mut c = [0usize; MAX_DIM];
            for a in 0..dim {
                c[a] = idx[a].clamp(1, m - 2);
            }
            coeffs[f] = coeffs[g.flat(&c)];
        }
    }
    let st = BoxStencil::new(g);
    let h = g.spacing();
    let mut rhs = vec![T::zero(); g.node_count()];
    // -div(a grad G) = delta  =>  div(a grad G) = -delta
    rhs[g.flat(source)] = -T::one() / h.powi(dim as i32);
    let zero_bc = vec![T::zero(); g.node_count()];
    let (gree, _stats) = dirichlet_solve(
        |x: &[T], y: &mut [T]| apply_flux_box(&st, &coeffs, x, y),
        &st.interior,
        &rhs,
        &zero_bc,
        None,
        T::of(1e-10),
        400_000,
    )?;

    let xsrc = g.coords(source);
    let r_lo = T::of(4.0) * h;
    let r_hi = g.half_width() / T::of(4.0);
    let mut pts: Vec<(T, T)> = Vec::new();
    for f in 0..g.node_count() {
        let idx = g.unflat(f);
        if !g.is_interior(&idx) {
            continue;
        }
        let x = g.coords(&idx);
        let mut r2 = T::zero();
        for a in 0..dim {
            r2 = r2 + (x[a] - xsrc[a]) * (x[a] - xsrc[a]);
        }
        let r = r2.sqrt();
        if r >= r_lo && r <= r_hi {
            pts.push((r, gree[f]));
        }
    }
    if pts.len() < 16 {
        return Err(Error::InvalidSpec("too few nodes in the fit shell".into()));
    }
    let (slope, amplitude, offset) = fit_power_with_offset(&pts);
    // log-binned samples for export
    let bins = 24usize;
    let (lo, hi) = (r_lo.as_f64().ln(), r_hi.as_f64().ln());
    let mut acc = vec![(0.0f64, 0.0f64, 0usize); bins];
    for &(r, gv) in &pts {
        let t = ((r.as_f64().ln() - lo) / (hi - lo) * bins as f64).floor() as usize;
        let b = t.min(bins - 1);
        acc[b].0 += r.as_f64();
        acc[b].1 += gv.as_f64();
        acc[b].2 += 1;
    }
    let samples = acc
        .into_iter()
        .filter(|&(_, _, n)| n > 0)
        .map(|(r, gv, n)| (T::of(r / n as f64), T::of(gv / n as f64)))
        .collect();
    Ok(GreenDecay {
        slope,
        amplitude,
        offset,
        samples,
    })
}

/// Fit G ~ a r^s + b by scanning s and solving the linear (a, b)
/// subproblem; returns (s, a, b).
fn fit_power_with_offset<T: Real>(pts: &[(T, T)]) -> (T, T, T) {
    let sse_for = |s: f64| -> (f64, f64, f64) {
        let mut s00 = 0.0f64;
        let mut s01 = 0.0;
        let mut s11 = 0.0;
        let mut b0 = 0.0;
        let mut b1 = 0.0;
        for &(r, gv) in pts {
            let p = r.as_f64().powf(s);
            s00 += p * p;
            s01 += p;
            s11 += 1.0;
            b0 += p * gv.as_f64();
            b1 += gv.as_f64();
        }
        let det = s00 * s11 - s01 * s01;
        let a = (b0 * s11 - b1 * s01) / det;
        let b = (s00 * b1 - s01 * b0) / det;
        let mut sse = 0.0;
        for &(r, gv) in pts {
            let e = gv.as_f64() - a * r.as_f64().powf(s) - b;
            sse += e * e;
        }
        (sse, a, b)
    };
    let mut best = (f64::INFINITY, -1.0, 0.0, 0.0);
    let mut s = -2.5f64;
    while s <= -0.3 {
        let (sse, a, b) = sse_for(s);
        if sse < best.0 {
            best = (sse, s, a, b);
        }
        s += 0.01;
    }
    // golden-section refinement around the best grid point
    let (mut lo, mut hi) = (best.1 - 0.02, best.1 + 0.02);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) * 0.382;
        let m2 = lo + (hi - lo) * 0.618;
        if sse_for(m1).0 < sse_for(m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let s_best = 0.5 * (lo + hi);
    let (_, a, b) = sse_for(s_best);
    (T::of(s_best), T::of(a), T::of(b))
}

/// Solve a_ij d_ij v = g with zero boundary and return
/// sup|v| / (diam(box) * (sum |g|^n h^n)^{1/n}).
pub fn abp_ratio<T: Real>(a_field: &SymMatrixField<T>, g: &ScalarField<T>) -> Result<T> {
    let grid = g.grid().clone();
    let bg = grid.as_box()?;
    let dim = bg.dim();
    if a_field.grid().as_ref() != grid.as_ref() {
        return Err(Error::GridMismatch(
            "coefficient and source grids differ".into(),
        ));
    }
    let mut min_eig = T::infinity();
    let mut coeffs = vec![SymMat::identity(dim); grid.node_count()];
    for (k, &f) in a_field.site_nodes().iter().enumerate() {
        let mat = a_field.mats()[k];
        min_eig = min_eig.min(mat.min_eigenvalue());
        coeffs[f] = mat;
    }
    if min_eig <= T::zero() {
        return Err(Error::LostEllipticity);
    }
    let st = BoxStencil::new(bg);
    let h = bg.spacing();
    let n_t = T::from_usize_(dim);
    let mut gn = T::zero();
    for f in 0..grid.node_count() {
        if st.interior[f] {
            gn = gn + g.values()[f].abs().powf(n_t) * h.powi(dim as i32);
        }
    }
    let gn = gn.powf(T::one() / n_t);
    if gn == T::zero() {
        return Ok(T::zero());
    }
    let diam = T::of(2.0) * bg.half_width() * n_t.sqrt();
    let diag = nondiv_diag(&st, &coeffs);
    let zero_bc = vec![T::zero(); grid.node_count()];
    let (v, _) = dirichlet_solve(
        |x: &[T], y: &mut [T]| apply_nondiv_box(&st, &coeffs, x, y),
        &st.interior,
        g.values(),
        &zero_bc,
        Some(&diag),
        T::of(1e-10),
        400_000,
    )?;
    let sup = v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    Ok(sup / (diam * gn))
}

/// Min and max Hessian eigenvalues over interior nodes with |x| <= r_max
/// (the uniform-ellipticity proxy).
pub fn hessian_eig_range<T: Real>(u: &ScalarField<T>, r_max: T) -> Result<(T, T)> {
    let grid = u.grid().clone();
    grid.as_box()?;
    let dim = grid.dim();
    let hess = hessian(u)?;
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for (k, &f) in hess.site_nodes().iter().enumerate() {
        let x = grid.coords(&grid.unflat(f));
        let r = x[..dim].iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        if r <= r_max {
            let ev = hess.mats()[k].eigenvalues();
            lo = lo.min(ev[0]);
            hi = hi.max(if dim == 2 { ev[1] } else { ev[2] });
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidSpec("no interior nodes within r_max".into()));
    }
    Ok((lo, hi))
}
