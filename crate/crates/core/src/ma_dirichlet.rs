//! Damped-Newton finite-difference solver for the Dirichlet problem
//! det(D²u) = f on a box. Standard central differences with a Poisson
//! initializer (Δu₀ = n f^{1/n}, motivated by the AM-GM inequality
//! Δu ≥ n det(D²u)^{1/n} for convex u), Newton linearization through the
//! Hessian cofactor, sup-norm damping, and discrete-convexity monitoring
//! with ε_cvx = 10 h².

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::grid::MAX_DIM;
use crate::field_core::{hessian, GridRef, ScalarField, SymMat};
use crate::krylov::{apply_nondiv_box, bicgstab, dirichlet_solve, nondiv_diag, BoxStencil};
use crate::parallel;
use crate::real::Real;

/// Where a set of boundary values came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Profile,
    RadialOracle,
    Custom,
}

/// Dirichlet data on the boundary nodes of a box grid. Stored as a
/// full-grid vector whose interior entries are zero.
#[derive(Clone, Debug)]
pub struct BoundaryData<T> {
    grid: GridRef<T>,
    values: Vec<T>,
    provenance: Provenance,
}

impl<T: Real> BoundaryData<T> {
    pub fn from_fn(
        grid: GridRef<T>,
        provenance: Provenance,
        f: impl Fn(&[T]) -> T + Sync,
    ) -> Result<Self> {
        let g = grid.as_box()?.clone();
        let dim = g.dim();
        let mut values = vec![T::zero(); g.node_count()];
        parallel::fill_indexed(&mut values, |i| {
            let idx = g.unflat(i);
            if g.is_boundary(&idx) {
                f(&g.coords(&idx)[..dim])
            } else {
                T::zero()
            }
        });
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary data"));
        }
        Ok(BoundaryData {
            grid,
            values,
            provenance,
        })
    }

    pub fn grid(&self) -> &GridRef<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// The parabola ½ xᵀA x + b·x + c of the asymptotic decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticProfile<T> {
    pub a: SymMat<T>,
    pub b: [T; MAX_DIM],
    pub c: T,
}

impl<T: Real> QuadraticProfile<T> {
    pub fn new(a: SymMat<T>, b: [T; MAX_DIM], c: T) -> Result<Self> {
        if a.min_eigenvalue() <= T::zero() {
            return Err(Error::NotSpd(a.min_eigenvalue().as_f64()));
        }
        Ok(QuadraticProfile { a, b, c })
    }

    pub fn isotropic(dim: usize, scale: T) -> Result<Self> {
        Self::new(
            SymMat::identity(dim).scale(scale),
            [T::zero(); MAX_DIM],
            T::zero(),
        )
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut v = T::of(0.5) * self.a.quad_form(x);
        for i in 0..x.len() {
            v = v + self.b[i] * x[i];
        }
        v + self.c
    }
}

/// Value of a periodic field at an arbitrary point that must coincide with
/// one of its nodes modulo the cell.
pub(crate) fn periodic_node_value<T: Real>(xi: &ScalarField<T>, x: &[T]) -> Result<T> {
    let pg = xi.grid().as_periodic()?;
    let mut idx = [0usize; MAX_DIM];
    for a in 0..pg.dim() {
        let period = pg.periods()[a];
        let t = x[a] - period * (x[a] / period).floor();
        let h = pg.spacing(a);
        let s = (t / h).as_f64();
        let r = s.round();
        if (s - r).abs() > 1e-8 {
            return Err(Error::LatticeMismatch(format!(
                "box node does not land on the periodic lattice (axis {a}, offset {})",
                (s - r).abs()
            )));
        }
        idx[a] = (r as usize) % pg.nodes_per_axis()[a];
    }
    Ok(xi.at(&idx[..pg.dim()]))
}

/// Boundary values from the asymptotic ansatz P + ξ: the profile evaluated
/// at the boundary nodes plus, when present, the periodic corrector at
/// x mod cell.
pub fn boundary_from_profile<T: Real>(
    grid: GridRef<T>,
    q: &QuadraticProfile<T>,
    xi: Option<&ScalarField<T>>,
) -> Result<BoundaryData<T>> {
    let g = grid.as_box()?.clone();
    let dim = g.dim();
    // validate commensurability once up front on a boundary corner
    if let Some(field) = xi {
        let corner = g.coords(&[0usize; MAX_DIM]);
        periodic_node_value(field, &corner[..dim])?;
    }
    let mut values = vec![T::zero(); g.node_count()];
    let mut err: Option<Error> = None;
    for f in 0..g.node_count() {
        let idx = g.unflat(f);
        if !g.is_boundary(&idx) {
            continue;
        }
        let x = g.coords(&idx);
        let mut v = q.eval(&x[..dim]);
        if let Some(field) = xi {
            match periodic_node_value(field, &x[..dim]) {
                Ok(w) => v = v + w,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        values[f] = v;
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(BoundaryData {
        grid,
        values,
        provenance: Provenance::Profile,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    pub tol: T,
    pub max_newton: usize,
    pub max_linear: usize,
    pub damping_levels: u32,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            tol: T::of(1e-8),
            max_newton: 50,
            max_linear: 100_000,
            damping_levels: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub newton_iterations: usize,
    pub final_residual: T,
    pub damping: Vec<T>,
    pub convexity_violations: usize,
    /// min over interior nodes of Δu - n f^{1/n} (AM-GM diagnostic).
    pub amgm_min: T,
    pub linear_iterations: usize,
    pub wall_seconds: f64,
}

/// Solve the discrete linear problem Δu₀ = n f^{1/n} with boundary data g,
/// to relative residual 1e-10. Exact when the continuum solution is a
/// quadratic, since the discrete Laplacian is exact on quadratics.
pub fn poisson_initializer<T: Real>(
    f: &ScalarField<T>,
    g: &BoundaryData<T>,
) -> Result<ScalarField<T>> {
    let grid = f.grid().clone();
    let bg = grid.as_box()?;
    if !std::sync::Arc::ptr_eq(f.grid(), g.grid()) && grid.as_ref() != g.grid().as_ref() {
        return Err(Error::GridMismatch(
            "density and boundary grids differ".into(),
        ));
    }
    let st = BoxStencil::new(bg);
    let dim = bg.dim();
    let n_t = T::from_usize_(dim);
    let mut rhs = vec![T::zero(); grid.node_count()];
    let fv = f.values();
    for i in 0..rhs.len() {
        if st.interior[i] {
            if fv[i] <= T::zero() {
                return Err(Error::InvalidSpec(
                    "poisson initializer needs f > 0 on interior nodes".into(),
                ));
            }
            rhs[i] = n_t * fv[i].powf(T::one() / n_t);
        }
    }
    let id = vec![SymMat::identity(dim); grid.node_count()];
    let diag = nondiv_diag(&st, &id);
    let (u, _stats) = dirichlet_solve(
        |x: &[T], y: &mut [T]| apply_nondiv_box(&st, &id, x, y),
        &st.interior,
        &rhs,
        g.values(),
        Some(&diag),
        T::of(1e-10),
        10_000_000,
    )?;
    ScalarField::from_values(grid, u)
}

/// Interior residual field det(D²u) - f (zero on the boundary).
pub fn residual<T: Real>(u: &ScalarField<T>, f: &ScalarField<T>) -> Result<ScalarField<T>> {
    if u.grid().as_ref() != f.grid().as_ref() {
        return Err(Error::GridMismatch(
            "solution and density grids differ".into(),
        ));
    }
    let h = hessian(u)?;
    let mut out = vec![T::zero(); u.grid().node_count()];
    let fv = f.values();
    let sites = h.site_nodes();
    let mats = h.mats();
    for (k, &node) in sites.iter().enumerate() {
        out[node] = mats[k].det() - fv[node];
    }
    ScalarField::from_values(u.grid().clone(), out)
}

struct IterationState<T> {
    sup: T,
    cvx_violations: usize,
    resid: Vec<T>,
    cof: Vec<SymMat<T>>,
    amgm_min: T,
}

fn evaluate<T: Real>(
    u: &[T],
    f: &[T],
    grid: &GridRef<T>,
    eps_cvx: T,
    n_t: T,
) -> Result<IterationState<T>> {
    let dim = grid.dim();
    let field = ScalarField::from_values(grid.clone(), u.to_vec())?;
    let h = hessian(&field)?;
    let n = grid.node_count();
    let mut resid = vec![T::zero(); n];
    let mut cof = vec![SymMat::identity(dim); n];
    let sites = h.site_nodes();
    let mats = h.mats();
    let mut sup = T::zero();
    let mut cvx = 0usize;
    let mut amgm_min = T::infinity();
    for (k, &node) in sites.iter().enumerate() {
        let m = &mats[k];
        let (det, cf) = m.det_and_cofactor();
        let r = det - f[node];
        resid[node] = r;
        cof[node] = cf;
        sup = sup.max(r.abs());
        if m.min_eigenvalue() < -eps_cvx {
            cvx += 1;
        }
        let lap = m.trace();
        amgm_min = amgm_min.min(lap - n_t * f[node].max(T::zero()).powf(T::one() / n_t));
    }
    if !sup.is_finite() {
        return Err(Error::NonFinite("newton residual"));
    }
    Ok(IterationState {
        sup,
        cvx_violations: cvx,
        resid,
        cof,
        amgm_min,
    })
}

/// Damped Newton iteration on det(D²u) = f with Dirichlet data g.
///
/// Each step solves cof(D²u):D²δ = f - det(D²u) with zero boundary values
/// and applies u ← u + s δ for the first damping factor s ∈ {1, ½, …,
/// 2^-damping_levels} that decreases the sup-norm residual. Stops when
/// sup|det(D²u) - f| ≤ opts.tol; errors with "stagnation" when no damping
/// level decreases the residual and with "lost convexity" when interior
/// Hessians dip below -ε_cvx at convergence.
pub fn newton_solve<T: Real>(
    f: &ScalarField<T>,
    g: &BoundaryData<T>,
    initial: Option<&ScalarField<T>>,
    opts: &SolverOptions<T>,
) -> Result<(ScalarField<T>, SolveReport<T>)> {
    let start = Instant::now();
    let grid = f.grid().clone();
    let bg = grid.as_box()?;
    let st = BoxStencil::new(bg);
    let dim = bg.dim();
    let n_t = T::from_usize_(dim);
    let h = bg.spacing();
    let eps_cvx = T::of(10.0) * h * h;

    let mut u = match initial {
        Some(u0) => {
            if u0.grid().as_ref() != grid.as_ref() {
                return Err(Error::GridMismatch("initial iterate grid differs".into()));
            }
            let mut v = u0.values().to_vec();
            // boundary values come from g regardless of the supplied iterate
            for i in 0..v.len() {
                if !st.interior[i] {
                    v[i] = g.values()[i];
                }
            }
            v
        }
        None => poisson_initializer(f, g)?.values().to_vec(),
    };

    let fv = f.values();
    let mut state = evaluate(&u, fv, &grid, eps_cvx, n_t)?;
    let mut damping_history = Vec::new();
    let mut linear_iterations = 0usize;
    let mut newton_iterations = 0usize;

    while state.sup > opts.tol {
        if newton_iterations >= opts.max_newton {
            return Err(Error::Stagnation {
                residual: state.sup.as_f64(),
            });
        }
        // linearized equation: cof(D²u) : D² δ = -(det(D²u) - f)
        let mut rhs = vec![T::zero(); u.len()];
        for i in 0..u.len() {
            if st.interior[i] {
                rhs[i] = -state.resid[i];
            }
        }
        let diag = nondiv_diag(&st, &state.cof);
        let lin_tol = T::of(1e-12).max(T::of(1e-4) * (state.sup / (T::one() + state.sup)));
        let mut delta = vec![T::zero(); u.len()];
        let cof = std::mem::take(&mut state.cof);
        let stats = bicgstab(
            |x: &[T], y: &mut [T]| apply_nondiv_box(&st, &cof, x, y),
            &rhs,
            &mut delta,
            Some(&diag),
            lin_tol,
            opts.max_linear,
        )?;
        linear_iterations += stats.iterations;

        let mut accepted = false;
        let mut s = T::one();
        for _level in 0..=opts.damping_levels {
            let mut trial = u.clone();
            parallel::axpy(s, &delta, &mut trial);
            let trial_state = evaluate(&trial, fv, &grid, eps_cvx, n_t)?;
            if trial_state.sup < state.sup {
                u = trial;
                state = trial_state;
                damping_history.push(s);
                accepted = true;
                break;
            }
            s = s * T::of(0.5);
        }
        if !accepted {
            return Err(Error::Stagnation {
                residual: state.sup.as_f64(),
            });
        }
        newton_iterations += 1;
    }

    if state.cvx_violations > 0 {
        return Err(Error::LostConvexity {
            count: state.cvx_violations,
        });
    }
    let report = SolveReport {
        newton_iterations,
        final_residual: state.sup,
        damping: damping_history,
        convexity_violations: state.cvx_violations,
        amgm_min: state.amgm_min,
        linear_iterations,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let field = ScalarField::from_values(grid, u)?;
    Ok((field, report))
}

/// Closed-form manufactured pair on n = 2: u* = ½|x|² + a sin(2πx₁)sin(2πx₂)
/// and f* = det(D²u*), used for mesh-convergence studies.
pub mod manufactured {
    use crate::real::Real;

    pub fn solution<T: Real>(amplitude: T) -> impl Fn(&[T]) -> T + Sync + Copy {
        move |x: &[T]| {
            let two_pi = T::of(2.0 * std::f64::consts::PI);
            T::of(0.5) * (x[0] * x[0] + x[1] * x[1])
                + amplitude * (two_pi * x[0]).sin() * (two_pi * x[1]).sin()
        }
    }

    pub fn density<T: Real>(amplitude: T) -> impl Fn(&[T]) -> T + Sync + Copy {
        move |x: &[T]| {
            let two_pi = T::of(2.0 * std::f64::consts::PI);
            let w = T::of(4.0 * std::f64::consts::PI * std::f64::consts::PI) * amplitude;
            let ss = (two_pi * x[0]).sin() * (two_pi * x[1]).sin();
            let cc = (two_pi * x[0]).cos() * (two_pi * x[1]).cos();
            let d11 = T::one() - w * ss;
            let d12 = w * cc;
            d11 * d11 - d12 * d12
        }
    }
}
