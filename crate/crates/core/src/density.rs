//! Analytic densities f = (f_p^{1/n} + decaying perturbation)^n.
//!
//! The periodic part is stored as a trigonometric polynomial of f_p^{1/n}
//! on the dual lattice of the periods, so periodicity is exact by
//! construction and every derivative is available in closed form. The
//! perturbation acts on f^{1/n} directly: the decay hypothesis constrains
//! f^{1/n} - f_p^{1/n}, and building that difference makes it hold by
//! construction rather than by sampled approximation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_core::{Grid, GridRef, ScalarField, SymMat};
use crate::real::Real;

/// One term A cos(2 pi k.(x/a)) + B sin(2 pi k.(x/a)) of a trigonometric
/// polynomial on the dual lattice; k = 0 encodes the constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::Zero"))]
pub struct TrigTerm<T> {
    pub k: Vec<i32>,
    #[serde(default = "zero_amp")]
    pub cos: T,
    #[serde(default = "zero_amp")]
    pub sin: T,
}

fn zero_amp<T: num_traits::Zero>() -> T {
    T::zero()
}

/// Evaluation of a trig polynomial and its first two derivative tensors.
#[derive(Clone, Debug)]
struct TrigEval<T> {
    value: T,
    grad: [T; 3],
    hess: SymMat<T>,
}

fn eval_trig<T: Real>(terms: &[TrigTerm<T>], periods: &[T], x: &[T], dim: usize) -> TrigEval<T> {
    let two_pi = T::of(2.0 * std::f64::consts::PI);
    let mut value = T::zero();
    let mut grad = [T::zero(); 3];
    let mut hess = SymMat::zero(dim.max(2));
    for t in terms {
        let mut theta = T::zero();
        let mut omega = [T::zero(); 3];
        for i in 0..dim {
            omega[i] = two_pi * T::of(t.k[i] as f64) / periods[i];
            theta = theta + omega[i] * x[i];
        }
        let (s, c) = (theta.sin(), theta.cos());
        let v = t.cos * c + t.sin * s;
        let dv = -t.cos * s + t.sin * c;
        value = value + v;
        for i in 0..dim {
            grad[i] = grad[i] + omega[i] * dv;
            for j in i..dim {
                hess.set(i, j, hess.get(i, j) - omega[i] * omega[j] * v);
            }
        }
    }
    TrigEval { value, grad, hess }
}

/// Sum of per-term amplitude bounds sqrt(cos^2 + sin^2).
fn trig_sup_bound<T: Real>(terms: &[TrigTerm<T>]) -> T {
    terms
        .iter()
        .fold(T::zero(), |acc, t| acc + t.cos.hypot(t.sin))
}

/// Periodic density f_p, represented through f_p^{1/n}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::Zero"))]
pub struct PeriodicDensitySpec<T> {
    dim: usize,
    periods: Vec<T>,
    coeffs: Vec<TrigTerm<T>>,
    d0: T,
}

impl<T: Real> PeriodicDensitySpec<T> {
    pub fn new(dim: usize, periods: Vec<T>, coeffs: Vec<TrigTerm<T>>, d0: T) -> Result<Self> {
        let spec = PeriodicDensitySpec {
            dim,
            periods,
            coeffs,
            d0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// f_p identically equal to `c` on unit periods.
    pub fn constant(dim: usize, c: T) -> Result<Self> {
        let root = c.powf(T::one() / T::from_usize_(dim));
        Self::new(
            dim,
            vec![T::one(); dim],
            vec![TrigTerm {
                k: vec![0; dim],
                cos: root,
                sin: T::zero(),
            }],
            c.max(T::one() / c) + T::one(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidSpec(format!("dim {} out of range", self.dim)));
        }
        if self.periods.len() != self.dim {
            return Err(Error::InvalidSpec("periods length != dim".into()));
        }
        if self.periods.iter().any(|&a| a <= T::zero()) {
            return Err(Error::InvalidSpec("periods must be positive".into()));
        }
        if self.d0 < T::one() {
            return Err(Error::InvalidSpec("d0 must be >= 1".into()));
        }
        for t in &self.coeffs {
            if t.k.len() != self.dim {
                return Err(Error::InvalidSpec("frequency length != dim".into()));
            }
        }
        let (lo, hi) = self.root_range(33);
        if lo <= T::zero() {
            return Err(Error::InvalidSpec(format!(
                "f_p^(1/n) reaches {} <= 0 on the cell",
                lo.as_f64()
            )));
        }
        let n = T::from_usize_(self.dim);
        let (fp_lo, fp_hi) = (lo.powf(n), hi.powf(n));
        if fp_lo < T::one() / self.d0 || fp_hi > self.d0 {
            return Err(Error::InvalidSpec(format!(
                "f_p range [{}, {}] escapes [1/d0, d0] with d0 = {}",
                fp_lo.as_f64(),
                fp_hi.as_f64(),
                self.d0.as_f64()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn coeffs(&self) -> &[TrigTerm<T>] {
        &self.coeffs
    }

    pub fn d0(&self) -> T {
        self.d0
    }

    /// f_p^{1/n}(x)
    pub fn eval_root(&self, x: &[T]) -> T {
        eval_trig(&self.coeffs, &self.periods, x, self.dim).value
    }

    /// f_p(x)
    pub fn eval(&self, x: &[T]) -> T {
        self.eval_root(x).powi(self.dim as i32)
    }

    /// min/max of f_p^{1/n} over a dense cell sample.
    pub fn root_range(&self, per_axis: usize) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let total = per_axis.pow(self.dim as u32);
        let mut x = [T::zero(); 3];
        for f in 0..total {
            let mut rem = f;
            for a in (0..self.dim).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                x[a] = self.periods[a] * T::from_usize_(i) / T::from_usize_(per_axis);
            }
            let v = self.eval_root(&x[..self.dim]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Rescale f_p by `factor` (so the root scales by factor^{1/n}).
    pub fn scaled(&self, factor: T) -> Self {
        let root_scale = factor.powf(T::one() / T::from_usize_(self.dim));
        let coeffs = self
            .coeffs
            .iter()
            .map(|t| TrigTerm {
                k: t.k.clone(),
                cos: t.cos * root_scale,
                sin: t.sin * root_scale,
            })
            .collect();
        PeriodicDensitySpec {
            dim: self.dim,
            periods: self.periods.clone(),
            coeffs,
            d0: self.d0,
        }
    }

    /// Cell average of f_p by midpoint quadrature under refinement until
    /// two successive levels agree to 1e-10. Midpoint sums are spectrally
    /// accurate on periodic integrands, so convergence is immediate for
    /// trigonometric data.
    pub fn cell_average(&self) -> Result<T> {
        let mut prev: Option<T> = None;
        let mut per_axis = 8usize;
        for _level in 0..=20 {
            if per_axis.pow(self.dim as u32) > 1 << 24 {
                return Err(Error::QuadratureNonConvergence(
                    "cell average refinement exceeded the evaluation budget".into(),
                ));
            }
            let total = per_axis.pow(self.dim as u32);
            let mut sum = T::zero();
            let mut x = [T::zero(); 3];
            for f in 0..total {
                let mut rem = f;
                for a in (0..self.dim).rev() {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    x[a] = self.periods[a] * (T::from_usize_(i) + T::of(0.5))
                        / T::from_usize_(per_axis);
                }
                sum = sum + self.eval(&x[..self.dim]);
            }
            let avg = sum / T::from_usize_(total);
            if let Some(p) = prev {
                if (avg - p).abs() < T::of(1e-10) {
                    return Ok(avg);
                }
            }
            prev = Some(avg);
            per_axis *= 2;
        }
        Err(Error::QuadratureNonConvergence(
            "cell average did not settle within 20 refinement levels".into(),
        ))
    }

    /// Sample f_p on a periodic grid with the same periods.
    pub fn sample_fp(&self, grid: GridRef<T>) -> Result<ScalarField<T>> {
        let pg = grid.as_periodic()?;
        if pg.periods().len() != self.dim {
            return Err(Error::GridMismatch("period count mismatch".into()));
        }
        for (a, (&ga, &sa)) in pg.periods().iter().zip(&self.periods).enumerate() {
            if ((ga - sa) / sa).abs() > T::of(1e-12) {
                return Err(Error::GridMismatch(format!("period mismatch on axis {a}")));
            }
        }
        ScalarField::from_fn(grid.clone(), |x| self.eval(x))
    }
}

/// Full density built from a periodic base plus an algebraically decaying
/// perturbation of the n-th root:
/// f^{1/n}(x) = f_p^{1/n}(x) + d (1+|x|^2)^{-beta/2} w(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: serde::Deserialize<'de> + num_traits::Zero"))]
pub struct DensitySpec<T> {
    #[serde(flatten)]
    base: PeriodicDensitySpec<T>,
    #[serde(default = "zero_amp")]
    amp_d: T,
    beta: T,
    /// Optional bounded smooth factor w as a trig polynomial on the same
    /// lattice; absent means w = 1.
    #[serde(default)]
    factor: Option<Vec<TrigTerm<T>>>,
    /// Extra algebraic decay of the bounded factor: multiplies the profile
    /// by (1+|x|^2)^{-extra_decay/2}. The decay hypothesis is still checked
    /// at the declared beta, which remains an upper bound.
    #[serde(default = "zero_amp")]
    extra_decay: T,
    d1: T,
}

impl<T: Real> DensitySpec<T> {
    pub fn new(
        base: PeriodicDensitySpec<T>,
        amp_d: T,
        beta: T,
        factor: Option<Vec<TrigTerm<T>>>,
        d1: T,
    ) -> Result<Self> {
        let spec = DensitySpec {
            base,
            amp_d,
            beta,
            factor,
            extra_decay: T::zero(),
            d1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// As `new`, with the algebraic factor w = (1+|x|^2)^{-extra/2}.
    pub fn with_extra_decay(
        base: PeriodicDensitySpec<T>,
        amp_d: T,
        beta: T,
        extra: T,
        d1: T,
    ) -> Result<Self> {
        let spec = DensitySpec {
            base,
            amp_d,
            beta,
            factor: None,
            extra_decay: extra,
            d1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Zero perturbation: f = f_p.
    pub fn periodic_only(base: PeriodicDensitySpec<T>, d1: T) -> Result<Self> {
        Self::new(base, T::zero(), T::of(3.0), None, d1)
    }

    pub fn extra_decay(&self) -> T {
        self.extra_decay
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.amp_d < T::zero() {
            return Err(Error::InvalidSpec("amp_d must be >= 0".into()));
        }
        if self.amp_d > T::zero() && self.beta <= T::of(2.0) {
            return Err(Error::InvalidSpec(
                "beta must exceed 2 for a perturbed density".into(),
            ));
        }
        if self.d1 < T::one() {
            return Err(Error::InvalidSpec("d1 must be >= 1".into()));
        }
        if let Some(f) = &self.factor {
            for t in f {
                if t.k.len() != self.base.dim {
                    return Err(Error::InvalidSpec("factor frequency length != dim".into()));
                }
            }
        }
        if self.extra_decay < T::zero() {
            return Err(Error::InvalidSpec("extra_decay must be >= 0".into()));
        }
        Ok(())
    }

    pub fn base(&self) -> &PeriodicDensitySpec<T> {
        &self.base
    }

    pub fn amp_d(&self) -> T {
        self.amp_d
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn d1(&self) -> T {
        self.d1
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    /// Replace the periodic base, keeping the perturbation.
    pub fn with_base(&self, base: PeriodicDensitySpec<T>) -> Result<Self> {
        let spec = DensitySpec {
            base,
            amp_d: self.amp_d,
            beta: self.beta,
            factor: self.factor.clone(),
            extra_decay: self.extra_decay,
            d1: self.d1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Strict amplitude bound guaranteeing positivity of f^{1/n}:
    /// d sup|w| < min f_p^{1/n}.
    pub fn positivity_margin(&self) -> T {
        let w_bound = match &self.factor {
            Some(f) => trig_sup_bound(f),
            None => T::one(),
        };
        let (root_min, _) = self.base.root_range(33);
        root_min - self.amp_d * w_bound
    }

    fn w_eval(&self, x: &[T]) -> TrigEval<T> {
        match &self.factor {
            Some(f) => eval_trig(f, &self.base.periods, x, self.base.dim),
            None => TrigEval {
                value: T::one(),
                grad: [T::zero(); 3],
                hess: SymMat::zero(self.base.dim.max(2)),
            },
        }
    }

    /// Perturbation p = f^{1/n} - f_p^{1/n} with closed-form first and
    /// second derivatives.
    pub fn perturbation_with_derivatives(&self, x: &[T]) -> (T, [T; 3], SymMat<T>) {
        let dim = self.base.dim;
        let d = self.amp_d;
        let beta = self.beta + self.extra_decay;
        if d == T::zero() {
            return (T::zero(), [T::zero(); 3], SymMat::zero(dim.max(2)));
        }
        let r2 = x[..dim].iter().fold(T::zero(), |acc, &xi| acc + xi * xi);
        let base = T::one() + r2;
        let phi = base.powf(-beta / T::of(2.0));
        let phi1 = phi / base;
        let phi2 = phi1 / base;
        // grad phi = -beta x phi1; hess phi = -beta phi1 I + beta(beta+2) phi2 x x'
        let w = self.w_eval(x);
        let value = d * phi * w.value;
        let mut grad = [T::zero(); 3];
        for i in 0..dim {
            grad[i] = d * (-beta * x[i] * phi1 * w.value + phi * w.grad[i]);
        }
        let mut hess = SymMat::zero(dim.max(2));
        for i in 0..dim {
            for j in i..dim {
                let mut hij = beta * (beta + T::of(2.0)) * phi2 * x[i] * x[j] * w.value;
                if i == j {
                    hij = hij - beta * phi1 * w.value;
                }
                hij = hij - beta * phi1 * (x[i] * w.grad[j] + x[j] * w.grad[i]);
                hij = hij + phi * w.hess.get(i, j);
                hess.set(i, j, d * hij);
            }
        }
        (value, grad, hess)
    }

    pub fn perturbation(&self, x: &[T]) -> T {
        self.perturbation_with_derivatives(x).0
    }

    /// f^{1/n}(x)
    pub fn eval_root(&self, x: &[T]) -> T {
        self.base.eval_root(x) + self.perturbation(x)
    }

    /// f(x) = (f_p^{1/n}(x) + perturbation(x))^n
    pub fn eval(&self, x: &[T]) -> T {
        self.eval_root(x).powi(self.base.dim as i32)
    }

    /// Sample f on the nodes of a grid.
    pub fn sample(&self, grid: GridRef<T>) -> Result<ScalarField<T>> {
        if grid.dim() != self.base.dim {
            return Err(Error::GridMismatch(
                "density/grid dimension mismatch".into(),
            ));
        }
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

/// Per-check outcome of `verify_assumptions`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport<T> {
    pub f_min: T,
    pub f_max: T,
    /// sup over samples of (1+|x|)^{beta+j} |grad^j (f^{1/n} - f_p^{1/n})|
    /// for j = 0, 1, 2 (j = 2 measured in spectral norm).
    pub decay_sup: [T; 3],
    /// min f_p^{1/n} - d sup|w|; positive means f > 0 analytically.
    pub positivity_margin: T,
    pub bounds_ok: bool,
    pub decay_ok: [bool; 3],
    pub positivity_ok: bool,
    pub pass: bool,
}

/// Van der Corput radical inverse in the given base.
fn radical_inverse(base: u64, mut i: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic sample set: Halton points in the cell plus log-radial
/// Halton points in the ball of radius 1e3 (where the weighted suprema of
/// algebraically decaying profiles are attained near |x| ~ 1).
fn assumption_samples<T: Real>(spec: &DensitySpec<T>, count: usize) -> Vec<[T; 3]> {
    let dim = spec.base.dim;
    let mut out = Vec::with_capacity(count + 1);
    out.push([T::zero(); 3]);
    let cell = count / 2;
    for s in 0..cell {
        let mut x = [T::zero(); 3];
        for a in 0..dim {
            let t = radical_inverse([2, 3, 5][a], s as u64 + 1);
            x[a] = spec.base.periods[a] * T::of(t);
        }
        out.push(x);
    }
    for s in 0..count - cell {
        let t = radical_inverse(2, s as u64 + 1);
        let r = 10f64.powf(3.0 * t) - 1.0 + 1e-3;
        let dir: [f64; 3] = match dim {
            1 => [if s % 2 == 0 { 1.0 } else { -1.0 }, 0.0, 0.0],
            2 => {
                let th = 2.0 * std::f64::consts::PI * radical_inverse(3, s as u64 + 1);
                [th.cos(), th.sin(), 0.0]
            }
            _ => {
                let z = 2.0 * radical_inverse(3, s as u64 + 1) - 1.0;
                let th = 2.0 * std::f64::consts::PI * radical_inverse(5, s as u64 + 1);
                let rho = (1.0 - z * z).max(0.0).sqrt();
                [rho * th.cos(), rho * th.sin(), z]
            }
        };
        let mut x = [T::zero(); 3];
        for a in 0..dim {
            x[a] = T::of(r * dir[a]);
        }
        out.push(x);
    }
    out
}

/// Check the density bounds and the weighted decay suprema on a
/// deterministic sample set. Violations set flags; they never raise.
pub fn verify_assumptions<T: Real>(
    spec: &DensitySpec<T>,
    sample_count: usize,
) -> Result<AssumptionReport<T>> {
    if sample_count < 1000 {
        return Err(Error::InvalidSpec(
            "verify_assumptions needs at least 1000 samples".into(),
        ));
    }
    let samples = assumption_samples(spec, sample_count);
    let dim = spec.base.dim;
    let beta = spec.beta;
    let mut f_min = T::infinity();
    let mut f_max = T::neg_infinity();
    let mut decay_sup = [T::zero(); 3];
    for x in &samples {
        let f = spec.eval(&x[..dim]);
        f_min = f_min.min(f);
        f_max = f_max.max(f);
        let (p, grad, hess) = spec.perturbation_with_derivatives(&x[..dim]);
        let r = x[..dim]
            .iter()
            .fold(T::zero(), |acc, &xi| acc + xi * xi)
            .sqrt();
        let w0 = (T::one() + r).powf(beta);
        let w1 = w0 * (T::one() + r);
        let w2 = w1 * (T::one() + r);
        let gnorm = grad[..dim]
            .iter()
            .fold(T::zero(), |acc, &gi| acc + gi * gi)
            .sqrt();
        decay_sup[0] = decay_sup[0].max(w0 * p.abs());
        decay_sup[1] = decay_sup[1].max(w1 * gnorm);
        decay_sup[2] = decay_sup[2].max(w2 * hess.spectral_norm());
    }
    let positivity_margin = spec.positivity_margin();
    let d1 = spec.d1;
    let bounds_ok = f_min >= T::one() / d1 && f_max <= d1;
    let decay_ok = [decay_sup[0] <= d1, decay_sup[1] <= d1, decay_sup[2] <= d1];
    let positivity_ok = positivity_margin > T::zero();
    let pass = bounds_ok && decay_ok.iter().all(|&b| b) && positivity_ok;
    Ok(AssumptionReport {
        f_min,
        f_max,
        decay_sup,
        positivity_margin,
        bounds_ok,
        decay_ok,
        positivity_ok,
        pass,
    })
}

/// Piecewise-analytic radial density: 1 on [0,1], a quintic bridge on
/// [1,2] matching value and two derivatives at both ends, and the tail
/// 1 + d r^{-beta} for r > 2. beta = 2 is admitted here (the sharpness
/// counterexample lives outside the beta > 2 hypothesis).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialDensitySpec<T> {
    amp_d: T,
    beta: T,
    /// Quintic bridge in monomial form, argument t = r - 1 in [0, 1].
    bridge: [T; 6],
}

impl<T: Real> RadialDensitySpec<T> {
    pub fn new(amp_d: T, beta: T) -> Result<Self> {
        if beta < T::of(2.0) {
            return Err(Error::InvalidSpec("radial tails need beta >= 2".into()));
        }
        // Hermite data at r = 1 (t = 0): value 1, two flat derivatives.
        // At r = 2 (t = 1): match the tail 1 + d r^{-beta}.
        let two = T::of(2.0);
        let f1 = T::one() + amp_d * two.powf(-beta);
        let d1 = -beta * amp_d * two.powf(-beta - T::one());
        let s1 = beta * (beta + T::one()) * amp_d * two.powf(-beta - two);
        let bridge = quintic_hermite(T::one(), T::zero(), T::zero(), f1, d1, s1);
        let spec = RadialDensitySpec {
            amp_d,
            beta,
            bridge,
        };
        // dense positivity check of the bridge
        for i in 0..=1000 {
            let t = T::of(i as f64 / 1000.0);
            if spec.bridge_at(t) < T::of(0.5) {
                return Err(Error::InvalidSpec(format!(
                    "bridge dips below 1/2 for d = {}",
                    amp_d.as_f64()
                )));
            }
        }
        Ok(spec)
    }

    /// Flat density f = 1.
    pub fn flat() -> Self {
        Self::new(T::zero(), T::of(3.0)).expect("flat spec is valid")
    }

    pub fn amp_d(&self) -> T {
        self.amp_d
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    fn bridge_at(&self, t: T) -> T {
        let mut acc = T::zero();
        for &c in self.bridge.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval(&self, r: T) -> T {
        if r <= T::one() {
            T::one()
        } else if r < T::of(2.0) {
            self.bridge_at(r - T::one())
        } else {
            T::one() + self.amp_d * r.powf(-self.beta)
        }
    }

    /// Bridge coefficients (monomials in t = r - 1).
    pub fn bridge_coeffs(&self) -> &[T; 6] {
        &self.bridge
    }
}

/// Quintic matching (f, f', f'') at t = 0 and t = 1, monomial coefficients.
fn quintic_hermite<T: Real>(f0: T, d0: T, s0: T, f1: T, d1: T, s1: T) -> [T; 6] {
    let half = T::of(0.5);
    let c0 = f0;
    let c1 = d0;
    let c2 = s0 * half;
    // remaining three from the t = 1 conditions
    let r0 = f1 - (c0 + c1 + c2);
    let r1 = d1 - (c1 + T::of(2.0) * c2);
    let r2 = s1 - T::of(2.0) * c2;
    let c3 = T::of(10.0) * r0 - T::of(4.0) * r1 + half * r2;
    let c4 = -T::of(15.0) * r0 + T::of(7.0) * r1 - r2;
    let c5 = T::of(6.0) * r0 - T::of(3.0) * r1 + half * r2;
    [c0, c1, c2, c3, c4, c5]
}

/// Sample a density over a box grid (box grids only; used to feed the
/// Dirichlet solver from radial data).
pub fn sample_radial_on_box<T: Real>(
    spec: &RadialDensitySpec<T>,
    grid: GridRef<T>,
) -> Result<ScalarField<T>> {
    match grid.as_ref() {
        Grid::Box(_) => ScalarField::from_fn(grid.clone(), |x| {
            let r = x.iter().fold(T::zero(), |acc, &xi| acc + xi * xi).sqrt();
            spec.eval(r)
        }),
        Grid::Periodic(_) => Err(Error::GridMismatch("radial densities live on boxes".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cos_base(dim: usize, amp: f64) -> PeriodicDensitySpec<f64> {
        let mut k0 = vec![0; dim];
        let mut k1 = vec![0; dim];
        k1[0] = 1;
        PeriodicDensitySpec::new(
            dim,
            vec![1.0; dim],
            vec![
                TrigTerm {
                    k: k0.drain(..).collect(),
                    cos: 1.0,
                    sin: 0.0,
                },
                TrigTerm {
                    k: k1,
                    cos: amp,
                    sin: 0.0,
                },
            ],
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn periodicity_is_exact() {
        let base = cos_base(2, 0.2);
        for &(x, y) in &[(0.13, 0.71), (0.5, 0.25), (0.99, 0.01)] {
            let a = base.eval(&[x, y]);
            let b = base.eval(&[x + 1.0, y]);
            let c = base.eval(&[x, y + 1.0]);
            assert!((a - b).abs() <= 1e-12 * a.abs());
            assert!((a - c).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn eval_density_plugin_values() {
        let base = PeriodicDensitySpec::constant(3, 1.0).unwrap();
        let spec = DensitySpec::new(base, 0.1, 3.0, None, 2.0).unwrap();
        // at the origin: (1 + 0.1)^3
        assert!((spec.eval(&[0.0, 0.0, 0.0]) - 1.1f64.powi(3)).abs() < 1e-14);
        // far out: root deviation 0.1 (1+|x|^2)^{-1.5}
        let x = [30.0, 0.0, 0.0];
        let dev = spec.eval_root(&x) - 1.0;
        assert!((dev - 0.1 * (1.0 + 900.0f64).powf(-1.5)).abs() < 1e-16);

        // d = 0 reduces to f_p exactly
        let pure = DensitySpec::periodic_only(cos_base(2, 0.2), 4.0).unwrap();
        assert_eq!(pure.eval(&[0.3, 0.4]), pure.base().eval(&[0.3, 0.4]));
    }

    #[test]
    fn cell_average_trig_closed_form() {
        // fint (1 + 0.2 cos(2 pi x1))^2 = 1 + 0.04/2 = 1.02
        let base = cos_base(2, 0.2);
        let avg = base.cell_average().unwrap();
        assert!((avg - 1.02).abs() < 1e-10, "avg {avg}");

        let flat = PeriodicDensitySpec::<f64>::constant(3, 2.0).unwrap();
        assert!((flat.cell_average().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn verify_assumptions_flags() {
        // d = 0: all decay suprema vanish
        let spec = DensitySpec::periodic_only(cos_base(2, 0.2), 4.0).unwrap();
        let rep = verify_assumptions(&spec, 2000).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.decay_sup, [0.0; 3]);

        // j = 0 supremum of the (f_p = 1, d = 0.1, beta = 3) profile is
        // 0.1 * max_r (1+r)^3 (1+r^2)^{-3/2} = 0.1 * 2^{3/2}, attained at
        // r = 1 (maximize the closed-form ratio).
        let oracle = {
            let mut best: f64 = 0.0;
            for i in 0..=400000 {
                let r = i as f64 * 1e-5;
                best = best.max(0.1 * (1.0 + r).powi(3) * (1.0 + r * r).powf(-1.5));
            }
            best
        };
        assert!((oracle - 0.1 * 2f64.powf(1.5)).abs() < 1e-6);
        let base = PeriodicDensitySpec::constant(3, 1.0).unwrap();
        let spec = DensitySpec::new(base, 0.1, 3.0, None, 8.0).unwrap();
        let rep = verify_assumptions(&spec, 4000).unwrap();
        assert!((rep.decay_sup[0] - oracle).abs() <= 0.02 * oracle);
        assert!(rep.decay_sup[0] <= 2.0, "passes with d1 = 2 for j = 0");
        assert!(rep.pass, "report: {rep:?}");

        // amplitude past min f_p^{1/n} trips the positivity flag
        let base = PeriodicDensitySpec::constant(2, 1.0).unwrap();
        let bad = DensitySpec {
            base,
            amp_d: 1.5,
            beta: 3.0,
            factor: None,
            extra_decay: 0.0,
            d1: 8.0,
        };
        let rep = verify_assumptions(&bad, 1000).unwrap();
        assert!(!rep.positivity_ok);
        assert!(!rep.pass);
    }

    #[test]
    fn perturbation_derivatives_match_finite_differences() {
        let base = cos_base(3, 0.1);
        let spec = DensitySpec::new(
            base,
            0.2,
            2.5,
            Some(vec![TrigTerm {
                k: vec![1, 1, 0],
                cos: 0.3,
                sin: 0.1,
            }]),
            16.0,
        )
        .unwrap();
        let x = [0.37, -1.21, 0.64];
        let h = 1e-5;
        let (_, grad, hess) = spec.perturbation_with_derivatives(&x);
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (spec.perturbation(&xp) - spec.perturbation(&xm)) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-8, "grad {i}");
            for j in 0..3 {
                let mut xpp = x;
                xpp[i] += h;
                xpp[j] += h;
                let mut xpm = x;
                xpm[i] += h;
                xpm[j] -= h;
                let mut xmp = x;
                xmp[i] -= h;
                xmp[j] += h;
                let mut xmm = x;
                xmm[i] -= h;
                xmm[j] -= h;
                let fd2 =
                    (spec.perturbation(&xpp) - spec.perturbation(&xpm) - spec.perturbation(&xmp)
                        + spec.perturbation(&xmm))
                        / (4.0 * h * h);
                assert!(
                    (fd2 - hess.get(i.min(j), i.max(j))).abs() < 1e-6,
                    "hess {i}{j}"
                );
            }
        }
    }

    #[test]
    fn radial_spec_pieces() {
        let spec = RadialDensitySpec::<f64>::new(1.0, 2.0).unwrap();
        assert_eq!(spec.eval(0.5), 1.0);
        assert_eq!(spec.eval(1.0), 1.0);
        assert!((spec.eval(2.0) - 1.25).abs() < 1e-12);
        assert!((spec.eval(4.0) - (1.0 + 1.0 / 16.0)).abs() < 1e-15);
        // bridge is C^2 at both ends
        let eps = 1e-6;
        let d_left = (spec.eval(1.0 + eps) - spec.eval(1.0)) / eps;
        assert!(d_left.abs() < 1e-4);
        let d_right = (spec.eval(2.0) - spec.eval(2.0 - eps)) / eps;
        let tail_d = -2.0 * 1.0 * 2.0f64.powf(-3.0);
        assert!((d_right - tail_d).abs() < 1e-4);
        // flat spec has an identically-one bridge
        let flat = RadialDensitySpec::<f64>::flat();
        for i in 0..=100 {
            let r = 1.0 + i as f64 / 100.0;
            assert_eq!(flat.eval(r), 1.0);
        }
    }

    #[test]
    fn anisotropic_density_sampling() {
        let base = PeriodicDensitySpec::new(
            2,
            vec![1.0, 1.0],
            vec![
                TrigTerm {
                    k: vec![0, 0],
                    cos: 1.0,
                    sin: 0.0,
                },
                TrigTerm {
                    k: vec![1, 0],
                    cos: 0.1,
                    sin: 0.05,
                },
                TrigTerm {
                    k: vec![1, 1],
                    cos: 0.04,
                    sin: 0.0,
                },
            ],
            4.0,
        )
        .unwrap();
        let x = [0.21, 0.58];
        let th1 = 2.0 * PI * x[0];
        let th2 = 2.0 * PI * (x[0] + x[1]);
        let root = 1.0 + 0.1 * th1.cos() + 0.05 * th1.sin() + 0.04 * th2.cos();
        assert!((base.eval_root(&x) - root).abs() < 1e-14);
    }
}
