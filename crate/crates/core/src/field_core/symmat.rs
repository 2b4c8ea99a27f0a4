//! Symmetric n x n matrices for n in {2, 3}: closed-form determinant,
//! cofactor, and eigenvalue routines. No general eigensolver is used;
//! characteristic roots are evaluated directly (quadratic / trigonometric
//! cubic formulas).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Packed symmetric matrix, upper triangle authoritative.
/// Entry order: [a11, a12, a13, a22, a23, a33]; for n = 2 only the first,
/// second and fourth slots are meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMat<T> {
    pub n: usize,
    e: [T; 6],
}

const IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

impl<T: Real> SymMat<T> {
    pub fn zero(n: usize) -> Self {
        assert!(n == 2 || n == 3, "SymMat supports n in {{2,3}}");
        SymMat {
            n,
            e: [T::zero(); 6],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn diag(d: &[T]) -> Self {
        let mut m = Self::zero(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_entries(n: usize, entries: &[(usize, usize, T)]) -> Self {
        let mut m = Self::zero(n);
        for &(i, j, v) in entries {
            m.set(i, j, v);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.e[IDX[i][j]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.e[IDX[i][j]] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..6 {
            out.e[k] = out.e[k] + other.e[k];
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for k in 0..6 {
            out.e[k] = out.e[k] * s;
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    /// Matrix-vector product (first `n` slots of the output used).
    pub fn mat_vec(&self, x: &[T]) -> [T; 3] {
        let mut y = [T::zero(); 3];
        for i in 0..self.n {
            for j in 0..self.n {
                y[i] = y[i] + self.get(i, j) * x[j];
            }
        }
        y
    }

    pub fn quad_form(&self, x: &[T]) -> T {
        let y = self.mat_vec(x);
        (0..self.n).fold(T::zero(), |acc, i| acc + x[i] * y[i])
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (i..self.n).all(|j| self.get(i, j).is_finite()))
    }

    /// Determinant and cofactor matrix by closed-form minor expansion,
    /// so that S * cof(S) = det(S) * I for every symmetric S.
    pub fn det_and_cofactor(&self) -> (T, SymMat<T>) {
        match self.n {
            2 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let det = a * c - b * b;
                let cof = SymMat::from_entries(2, &[(0, 0, c), (0, 1, -b), (1, 1, a)]);
                (det, cof)
            }
            3 => {
                let a = self;
                let c00 = a.get(1, 1) * a.get(2, 2) - a.get(1, 2) * a.get(1, 2);
                let c01 = -(a.get(0, 1) * a.get(2, 2) - a.get(1, 2) * a.get(0, 2));
                let c02 = a.get(0, 1) * a.get(1, 2) - a.get(1, 1) * a.get(0, 2);
                let c11 = a.get(0, 0) * a.get(2, 2) - a.get(0, 2) * a.get(0, 2);
                let c12 = -(a.get(0, 0) * a.get(1, 2) - a.get(0, 1) * a.get(0, 2));
                let c22 = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(0, 1);
                let det = a.get(0, 0) * c00 + a.get(0, 1) * c01 + a.get(0, 2) * c02;
                let cof = SymMat::from_entries(
                    3,
                    &[
                        (0, 0, c00),
                        (0, 1, c01),
                        (0, 2, c02),
                        (1, 1, c11),
                        (1, 2, c12),
                        (2, 2, c22),
                    ],
                );
                (det, cof)
            }
            _ => unreachable!(),
        }
    }

    pub fn det(&self) -> T {
        self.det_and_cofactor().0
    }

    /// det(S)^(1/n) for symmetric positive definite S.
    pub fn detroot(&self) -> Result<T> {
        let lam = self.min_eigenvalue();
        if lam <= T::zero() {
            return Err(Error::NotSpd(lam.as_f64()));
        }
        Ok(self.det().powf(T::one() / T::from_usize_(self.n)))
    }

    /// Eigenvalues in ascending order, by characteristic-root formulas.
    pub fn eigenvalues(&self) -> [T; 3] {
        match self.n {
            2 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let half = T::of(0.5);
                let mean = half * (a + c);
                let d = ((a - c) * half).hypot(b);
                [mean - d, mean + d, T::zero()]
            }
            3 => {
                let p1 = self.get(0, 1).powi(2) + self.get(0, 2).powi(2) + self.get(1, 2).powi(2);
                let q = self.trace() / T::of(3.0);
                let p2 = (self.get(0, 0) - q).powi(2)
                    + (self.get(1, 1) - q).powi(2)
                    + (self.get(2, 2) - q).powi(2)
                    + T::of(2.0) * p1;
                if p2 <= T::zero() {
                    return [q, q, q];
                }
                let p = (p2 / T::of(6.0)).sqrt();
                let mut b = *self;
                for i in 0..3 {
                    b.set(i, i, b.get(i, i) - q);
                }
                let b = b.scale(T::one() / p);
                let r = (b.det() * T::of(0.5)).max(-T::one()).min(T::one());
                let phi = r.acos() / T::of(3.0);
                let two_thirds_pi = T::of(2.0 * std::f64::consts::PI / 3.0);
                let e_hi = q + T::of(2.0) * p * phi.cos();
                let e_lo = q + T::of(2.0) * p * (phi + two_thirds_pi).cos();
                let e_mid = T::of(3.0) * q - e_hi - e_lo;
                [e_lo, e_mid, e_hi]
            }
            _ => unreachable!(),
        }
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        let ev = self.eigenvalues();
        if self.n == 2 {
            ev[1]
        } else {
            ev[2]
        }
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn spectral_norm(&self) -> T {
        let ev = self.eigenvalues();
        let hi = if self.n == 2 { ev[1] } else { ev[2] };
        ev[0].abs().max(hi.abs())
    }

    /// Unit eigenvector for a given eigenvalue, via cross products of the
    /// rows of (S - lambda I); falls back to coordinate directions when the
    /// eigenvalue is (numerically) multiple.
    pub fn eigenvector(&self, lambda: T, avoid: &[[T; 3]]) -> [T; 3] {
        let n = self.n;
        let scale = self.max_abs().max(lambda.abs()).max(T::one());
        if n == 2 {
            // rows of S - lambda I; the eigenvector is orthogonal to either.
            let r0 = [self.get(0, 0) - lambda, self.get(0, 1)];
            let r1 = [self.get(0, 1), self.get(1, 1) - lambda];
            let n0 = r0[0].hypot(r0[1]);
            let n1 = r1[0].hypot(r1[1]);
            let row = if n0 >= n1 { r0 } else { r1 };
            let nr = row[0].hypot(row[1]);
            if nr > T::of(1e-12) * scale {
                return [-row[1] / nr, row[0] / nr, T::zero()];
            }
            // multiple eigenvalue: any direction orthogonal to `avoid`
            let candidates = [
                [T::one(), T::zero(), T::zero()],
                [T::zero(), T::one(), T::zero()],
            ];
            return orthogonal_unit(&candidates, avoid, 2);
        }
        let mut rows = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rows[i][j] = self.get(i, j);
            }
            rows[i][i] = rows[i][i] - lambda;
        }
        let mut best = [T::zero(); 3];
        let mut best_norm = T::zero();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let c = cross(&rows[i], &rows[j]);
            let nc = norm3(&c);
            if nc > best_norm {
                best_norm = nc;
                best = c;
            }
        }
        if best_norm > T::of(1e-10) * scale * scale {
            return [
                best[0] / best_norm,
                best[1] / best_norm,
                best[2] / best_norm,
            ];
        }
        let candidates = [
            [T::one(), T::zero(), T::zero()],
            [T::zero(), T::one(), T::zero()],
            [T::zero(), T::zero(), T::one()],
        ];
        orthogonal_unit(&candidates, avoid, 3)
    }
}

fn cross<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3<T: Real>(a: &[T; 3]) -> T {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// First candidate made orthogonal to the `avoid` set and normalized.
fn orthogonal_unit<T: Real>(candidates: &[[T; 3]], avoid: &[[T; 3]], n: usize) -> [T; 3] {
    for cand in candidates {
        let mut v = *cand;
        for a in avoid {
            let d = (0..n).fold(T::zero(), |acc, i| acc + v[i] * a[i]);
            for i in 0..n {
                v[i] = v[i] - d * a[i];
            }
        }
        let nv = norm3(&v);
        if nv > T::of(1e-6) {
            for vi in v.iter_mut() {
                *vi = *vi / nv;
            }
            return v;
        }
    }
    let mut v = [T::zero(); 3];
    v[0] = T::one();
    v
}
