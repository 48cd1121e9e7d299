//! Throughput of an arbitrary chain from the spectrum of a tridiagonal matrix.
//!
//! For rates `λ₀…λₙ` let `A` be the `(n+2)×(n+2)` symmetric matrix with zero
//! diagonal and off-diagonal entries `λₖ^{-1/2}`. Its eigenvalues are real and
//! distinct, and the steady-state throughput is `R = ζ_max⁻²`. Occupancies
//! then follow from the equilibrium flow balance, solved backwards from the
//! exit: `eₙ = R/λₙ`, `eᵢ = R / (λᵢ(1 − eᵢ₊₁))`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::rfm::{RateProfile, SteadyState};

/// Relative closure tolerance `|λ₀(1 − e₁) − R| ≤ CLOSURE_TOL · R`.
pub const CLOSURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    off_diagonal: Vec<f64>,
}

pub fn build_matrix(rates: &RateProfile) -> SpectralMatrix {
    SpectralMatrix {
        off_diagonal: rates.as_slice().iter().map(|l| 1.0 / sqrt(*l)).collect(),
    }
}

impl SpectralMatrix {
    /// From raw off-diagonal entries; all must be positive and finite.
    pub fn from_off_diagonal(off_diagonal: Vec<f64>) -> Result<Self> {
        if off_diagonal.is_empty() || off_diagonal.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::invalid(
                "off-diagonal entries must be non-empty, positive and finite",
            ));
        }
        Ok(SpectralMatrix { off_diagonal })
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.off_diagonal
    }

    /// Matrix dimension, `n + 2`.
    pub fn dim(&self) -> usize {
        self.off_diagonal.len() + 1
    }

    /// Sturm count: number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        // LDLᵀ pivots of A − xI; with a zero diagonal each pivot is
        // q_k = −x − b_{k−1}² / q_{k−1}
        let mut q = -x;
        let mut count = (q < 0.0) as usize;
        for b in &self.off_diagonal {
            let prev = if q == 0.0 { f64::MIN_POSITIVE } else { q };
            q = -x - b * b / prev;
            count += (q < 0.0) as usize;
        }
        count
    }

    /// Gershgorin bound on the spectral radius.
    fn radius_bound(&self) -> f64 {
        let b = &self.off_diagonal;
        let mut r = b[0].max(b[b.len() - 1]);
        for w in b.windows(2) {
            r = r.max(w[0] + w[1]);
        }
        r
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm
    /// count.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        let dim = self.dim();
        if k >= dim {
            return Err(Error::invalid("eigenvalue index out of range"));
        }
        let bound = self.radius_bound() * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
        Ok(self.bisect(-bound, bound, k + 1))
    }

    /// Smallest `x` with `count_below(x) ≥ target`, given that `lo` is below
    /// and `hi` above it.
    fn bisect(&self, mut lo: f64, mut hi: f64, target: usize) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return hi;
            }
            if self.count_below(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Largest eigenvalue `ζ_max`, bisected to adjacent floating-point
    /// numbers. The spectrum is symmetric about zero, so `0` is a valid lower
    /// bracket.
    pub fn max_eigenvalue(&self) -> f64 {
        let bound = self.radius_bound() * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE;
        self.bisect(0.0, bound, self.dim())
    }
}

pub fn max_eigenvalue(m: &SpectralMatrix) -> f64 {
    m.max_eigenvalue()
}

/// `R = ζ_max⁻²`.
pub fn spectral_throughput(rates: &RateProfile) -> f64 {
    let z = build_matrix(rates).max_eigenvalue();
    1.0 / (z * z)
}

/// Full steady state from the spectral throughput and the backward flow
/// recursion.
///
/// The recursion amplifies the rounding error of `R` roughly like `n²`, so on
/// very long chains it can miss the closure check. In that case the
/// occupancies are recovered from the Perron eigenvector instead, using
/// `eᵢ = bᵢ vᵢ₊₁ / (ζ vᵢ)`, and the same closure check applies.
pub fn spectral_steady_state(rates: &RateProfile) -> Result<SteadyState> {
    let m = build_matrix(rates);
    let zeta = m.max_eigenvalue();
    let r = 1.0 / (zeta * zeta);
    let lam = rates.as_slice();
    match closure_check(lam, backward_recursion(lam, r), r) {
        Ok(e) => Ok(SteadyState::from_flow(e, r)),
        Err(first) => {
            let e = eigenvector_occupancies(&m, zeta).ok_or(first.clone())?;
            closure_check(lam, e, r)
                .map(|e| SteadyState::from_flow(e, r))
                .map_err(|_| first)
        }
    }
}

fn backward_recursion(lam: &[f64], r: f64) -> Vec<f64> {
    let n = lam.len() - 1;
    let mut e = alloc::vec![0.0; n];
    e[n - 1] = r / lam[n];
    for i in (0..n - 1).rev() {
        e[i] = r / (lam[i + 1] * (1.0 - e[i + 1]));
    }
    e
}

fn closure_check(lam: &[f64], e: Vec<f64>, r: f64) -> Result<Vec<f64>> {
    if e.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(Error::NumericalConsistency {
            residual: f64::INFINITY,
        });
    }
    let closure = (lam[0] * (1.0 - e[0]) - r).abs();
    if closure > CLOSURE_TOL * r {
        return Err(Error::NumericalConsistency { residual: closure });
    }
    Ok(e)
}

fn eigenvector_occupancies(m: &SpectralMatrix, zeta: f64) -> Option<Vec<f64>> {
    let v = perron_vector(m, zeta)?;
    let b = m.off_diagonal();
    let n = b.len() - 1;
    Some((1..=n).map(|i| b[i] * v[i + 1] / (zeta * v[i])).collect())
}

/// Inverse iteration for the eigenvector of `zeta`, normalized positive.
fn perron_vector(m: &SpectralMatrix, zeta: f64) -> Option<Vec<f64>> {
    let b = m.off_diagonal();
    let dim = m.dim();
    let mut v = alloc::vec![1.0; dim];
    for _ in 0..3 {
        v = solve_shifted(b, zeta, &v)?;
        let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(scale > 0.0 && scale.is_finite()) {
            return None;
        }
        let sign = if v[dim / 2] < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / scale);
    }
    v.iter().all(|x| *x > 0.0).then_some(v)
}

/// Solves `(A − σI) x = rhs` by Gaussian elimination with partial pivoting
/// specialised to the tridiagonal band. Exactly zero pivots are nudged to
/// keep inverse iteration going.
fn solve_shifted(b: &[f64], sigma: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let dim = rhs.len();
    // row i of U: d[i] at column i, u1[i] at i+1, u2[i] at i+2
    let mut d: Vec<f64> = alloc::vec![-sigma; dim];
    let mut u1: Vec<f64> = (0..dim)
        .map(|i| if i + 1 < dim { b[i] } else { 0.0 })
        .collect();
    let mut u2 = alloc::vec![0.0; dim];
    let mut x = rhs.to_vec();
    let tiny = f64::EPSILON * sigma.abs().max(1.0);
    for i in 0..dim - 1 {
        // subdiagonal entry below the pivot
        let l = b[i];
        if l.abs() > d[i].abs() {
            // swap rows i and i+1
            let (ri0, ri1, ri2) = (d[i], u1[i], u2[i]);
            let next_u1 = if i + 2 < dim { b[i + 1] } else { 0.0 };
            d[i] = l;
            u1[i] = d[i + 1];
            u2[i] = next_u1;
            x.swap(i, i + 1);
            let f = ri0 / l;
            d[i + 1] = ri1 - f * u1[i];
            u1[i + 1] = ri2 - f * u2[i];
            x[i + 1] -= f * x[i];
        } else {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let f = l / d[i];
            d[i + 1] -= f * u1[i];
            // u2[i] is zero when no swap happened, so row i+1's u1 is intact
            x[i + 1] -= f * x[i];
        }
    }
    if d[dim - 1] == 0.0 {
        d[dim - 1] = tiny;
    }
    for i in (0..dim).rev() {
        let mut s = x[i];
        if i + 1 < dim {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < dim {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / d[i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{PI, SQRT_2};

    fn rates(v: &[f64]) -> RateProfile {
        RateProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn build_matrix_entries() {
        assert_eq!(
            build_matrix(&rates(&[1.0, 1.0])).off_diagonal(),
            &[1.0, 1.0]
        );
        assert_eq!(
            build_matrix(&rates(&[4.0, 4.0, 4.0])).off_diagonal(),
            &[0.5; 3]
        );
        let m = build_matrix(&rates(&[1.0, 4.0]));
        assert_eq!(m.off_diagonal(), &[1.0, 0.5]);
        assert_eq!(m.dim(), 3);
    }

    #[test]
    fn three_by_three_unit() {
        // eigenvalues of [[0,1,0],[1,0,1],[0,1,0]] are −√2, 0, √2
        let m = build_matrix(&rates(&[1.0, 1.0]));
        assert!((m.max_eigenvalue() - SQRT_2).abs() < 1e-15);
        assert!((m.eigenvalue(0).unwrap() + SQRT_2).abs() < 1e-15);
        assert!(m.eigenvalue(1).unwrap().abs() < 1e-15);
        assert!((spectral_throughput(&rates(&[1.0, 1.0])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_spectrum() {
        // constant tridiagonal of size N with off-diagonal b: 2b cos(kπ/(N+1))
        for n in [1usize, 3, 10, 60] {
            let lc = 2.5;
            let m = build_matrix(&RateProfile::homogeneous(n, lc).unwrap());
            let want = 2.0 / lc.sqrt() * (PI / (n + 3) as f64).cos();
            assert!((m.max_eigenvalue() - want).abs() < 1e-14 * want);
            for k in 0..m.dim() {
                let want = -2.0 / lc.sqrt() * ((k + 1) as f64 * PI / (n + 3) as f64).cos();
                assert!((m.eigenvalue(k).unwrap() - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn scaling() {
        let r = rates(&[0.3, 1.7, 2.2, 0.9]);
        let base = build_matrix(&r).max_eigenvalue();
        for c in [0.5, 2.0, 10.0] {
            let z = build_matrix(&r.scaled(c).unwrap()).max_eigenvalue();
            assert!((z - base / c.sqrt()).abs() < 1e-14 * base);
        }
    }

    #[test]
    fn single_site_steady_state() {
        let s = spectral_steady_state(&rates(&[1.0, 1.0])).unwrap();
        assert!((s.occupancies[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn large_homogeneous_closes() {
        for n in [200usize, 1000, 10_000] {
            let s = spectral_steady_state(&RateProfile::homogeneous(n, 1.0).unwrap());
            assert!(s.is_ok(), "n = {n}: {s:?}");
        }
    }

    #[test]
    fn eigenvector_route_matches_recursion() {
        let r = rates(&[0.8, 2.0, 0.3, 1.1, 5.0, 0.9]);
        let m = build_matrix(&r);
        let z = m.max_eigenvalue();
        let via_vec = eigenvector_occupancies(&m, z).unwrap();
        let via_rec = backward_recursion(r.as_slice(), 1.0 / (z * z));
        for (a, b) in via_vec.iter().zip(&via_rec) {
            assert!((a - b).abs() < 1e-12, "{via_vec:?} vs {via_rec:?}");
        }
    }

    #[test]
    fn shifted_solve_matches_dense_product() {
        let b = [0.7, 1.3, 0.2, 0.9];
        let sigma = 0.35;
        let rhs = [1.0, -2.0, 0.5, 3.0, 0.25];
        let x = solve_shifted(&b, sigma, &rhs).unwrap();
        for i in 0..5 {
            let mut y = -sigma * x[i];
            if i > 0 {
                y += b[i - 1] * x[i - 1];
            }
            if i < 4 {
                y += b[i] * x[i + 1];
            }
            assert!((y - rhs[i]).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn from_off_diagonal_validates() {
        assert!(SpectralMatrix::from_off_diagonal(vec![]).is_err());
        assert!(SpectralMatrix::from_off_diagonal(vec![1.0, 0.0]).is_err());
        assert!(SpectralMatrix::from_off_diagonal(vec![1.0, f64::INFINITY]).is_err());
    }
}
