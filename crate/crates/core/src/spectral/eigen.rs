//! Dense non-Hermitian eigensolvers.
//!
//! The general path reduces to Hessenberg form with Householder reflectors and
//! runs single-shift complex QR (Wilkinson shifts, Givens bulge chase). Right
//! eigenvectors come from back-substitution on the Schur form.
//!
//! Matrices that commute with leg exchange plus conjugation are similar to a
//! real matrix; for those an eigenvalue-only path runs real Schur on that form.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;
const SHIFT_HISTORY: usize = 8;

/// Eigenvalues plus an optional Schur-derived eigenvector matrix.
pub(crate) struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: Option<DMatrix<Complex64>>,
}

pub(crate) fn complex_eigen(a: &DMatrix<Complex64>, want_vectors: bool) -> Result<Eigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Eigen {
            values: vec![],
            vectors: want_vectors.then(|| DMatrix::zeros(0, 0)),
        });
    }

    let mut h = a.clone();
    let mut z = want_vectors.then(|| DMatrix::<Complex64>::identity(n, n));
    hessenberg(&mut h, z.as_mut());
    schur_qr(&mut h, z.as_mut())?;

    let values: Vec<Complex64> = (0..n).map(|i| h[(i, i)]).collect();
    let vectors = z.map(|z| triangular_eigenvectors(&h, &z));
    Ok(Eigen { values, vectors })
}

/// Householder reduction to upper Hessenberg form, accumulating into `q`.
fn hessenberg(a: &mut DMatrix<Complex64>, mut q: Option<&mut DMatrix<Complex64>>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;
        for (j, i) in (k + 1..n).enumerate() {
            v[j] = a[(i, k)];
        }
        v[0] -= alpha;
        let vnorm: f64 = v[..m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v[..m] {
            *z /= vnorm;
        }

        // rows: A <- (I - 2 v v*) A
        for j in k..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (r, i) in (k + 1..n).enumerate() {
                s += v[r].conj() * a[(i, j)];
            }
            s *= 2.0;
            for (r, i) in (k + 1..n).enumerate() {
                a[(i, j)] -= v[r] * s;
            }
        }
        // columns: A <- A (I - 2 v v*)
        reflect_columns(a, &v[..m], k + 1, n);
        if let Some(q) = q.as_deref_mut() {
            reflect_columns(q, &v[..m], k + 1, n);
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

fn reflect_columns(a: &mut DMatrix<Complex64>, v: &[Complex64], col0: usize, rows: usize) {
    for i in 0..rows {
        let mut s = Complex64::new(0.0, 0.0);
        for (r, v) in v.iter().enumerate() {
            s += a[(i, col0 + r)] * v;
        }
        s *= 2.0;
        for (r, v) in v.iter().enumerate() {
            a[(i, col0 + r)] -= s * v.conj();
        }
    }
}

/// Rotation `[[c, s], [-conj(s), c]]` with `c` real, mapping `(x, y)` to `(r, 0)`.
#[derive(Clone, Copy)]
struct Givens {
    c: f64,
    s: Complex64,
}

impl Givens {
    fn zeroing(x: Complex64, y: Complex64) -> Self {
        let ax = x.norm();
        if y.norm() == 0.0 {
            return Givens { c: 1.0, s: Complex64::new(0.0, 0.0) };
        }
        if ax == 0.0 {
            return Givens { c: 0.0, s: y.conj() / y.norm() };
        }
        let norm = ax.hypot(y.norm());
        Givens {
            c: ax / norm,
            s: (x / ax) * y.conj() / norm,
        }
    }

    fn rows(&self, h: &mut DMatrix<Complex64>, k: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let (a, b) = (h[(k, j)], h[(k + 1, j)]);
            h[(k, j)] = a * self.c + self.s * b;
            h[(k + 1, j)] = -self.s.conj() * a + b * self.c;
        }
    }

    fn cols(&self, h: &mut DMatrix<Complex64>, k: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let (a, b) = (h[(i, k)], h[(i, k + 1)]);
            h[(i, k)] = a * self.c + b * self.s.conj();
            h[(i, k + 1)] = -a * self.s + b * self.c;
        }
    }
}

fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Reduces a Hessenberg matrix to upper triangular Schur form in place.
fn schur_qr(h: &mut DMatrix<Complex64>, mut z: Option<&mut DMatrix<Complex64>>) -> Result<()> {
    let n = h.nrows();
    let norm = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = f64::MIN_POSITIVE * (n as f64) / EPS;
    let cap = 30 * n.max(10);
    let mut total = 0usize;
    let mut shifts: Vec<Complex64> = Vec::new();
    let mut hi = n - 1;
    let mut its = 0usize;

    while hi > 0 {
        // locate the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)];
            let mut scale = abs1(h[(lo - 1, lo - 1)]) + abs1(h[(lo, lo)]);
            if scale == 0.0 {
                scale = norm;
            }
            if abs1(sub) <= (EPS * scale).max(tiny) {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            its = 0;
            continue;
        }

        total += 1;
        its += 1;
        if total > cap {
            return Err(Error::NonConvergence {
                size: n,
                iterations: total - 1,
                shifts: shifts
                    .iter()
                    .rev()
                    .take(SHIFT_HISTORY)
                    .map(|s| format!("{:.6e}{:+.6e}i", s.re, s.im))
                    .collect(),
            });
        }

        let mu = if its.is_multiple_of(10) {
            h[(hi, hi)] + 0.75 * abs1(h[(hi, hi - 1)])
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        shifts.push(mu);
        if shifts.len() > 4 * SHIFT_HISTORY {
            shifts.drain(..shifts.len() - SHIFT_HISTORY);
        }

        // implicit single-shift sweep over [lo, hi]
        for k in lo..hi {
            let g = if k == lo {
                Givens::zeroing(h[(lo, lo)] - mu, h[(lo + 1, lo)])
            } else {
                Givens::zeroing(h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let first = if k == lo { k } else { k - 1 };
            g.rows(h, k, first..n);
            if k > lo {
                h[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            }
            g.cols(h, k, 0..(k + 3).min(hi + 1));
            if let Some(z) = z.as_deref_mut() {
                g.cols(z, k, 0..n);
            }
        }
    }
    Ok(())
}

fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let (l1, l2) = (m + disc, m - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvectors of `Z T Z*` from the upper triangular `T`, unit 2-norm columns.
fn triangular_eigenvectors(t: &DMatrix<Complex64>, z: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = t.nrows();
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let smin = (EPS * tnorm).max(f64::MIN_POSITIVE * 1e8);
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    let mut x = DVector::<Complex64>::zeros(n);
    for k in 0..n {
        x.fill(Complex64::new(0.0, 0.0));
        x[k] = Complex64::new(1.0, 0.0);
        let lambda = t[(k, k)];
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smin {
                denom = Complex64::new(smin, 0.0);
            }
            x[i] = -s / denom;
            let big = x[i].norm();
            if big > 1e100 {
                for v in x.iter_mut().take(k + 1) {
                    *v /= big;
                }
            }
        }
        let mut col = DVector::<Complex64>::zeros(n);
        for j in 0..=k {
            if x[j] != Complex64::new(0.0, 0.0) {
                for i in 0..n {
                    col[i] += z[(i, j)] * x[j];
                }
            }
        }
        let nrm = col.norm();
        out.set_column(k, &(col / Complex64::new(nrm, 0.0)));
    }
    out
}

/// Whether `P conj(H) P = H` with `P` exchanging indices `2n` and `2n + 1`.
pub(crate) fn is_pt_symmetric(h: &DMatrix<Complex64>, tol: f64) -> bool {
    let n = h.nrows();
    if !n.is_multiple_of(2) || n != h.ncols() {
        return false;
    }
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    (0..n).all(|i| (0..n).all(|j| (h[(i ^ 1, j ^ 1)].conj() - h[(i, j)]).norm() <= tol * scale))
}

/// Real matrix `W* H W` for a PT-symmetric `H`, with `W = ((1-i) I + (1+i) P) / 2`.
pub(crate) fn pt_real_form(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        0.5 * (h[(i, j)].re + h[(i ^ 1, j ^ 1)].re) - 0.5 * (h[(i, j ^ 1)].im - h[(i ^ 1, j)].im)
    })
}

/// Eigenvalues of a PT-symmetric matrix via real Schur. Conjugate pairs are exact.
pub(crate) fn pt_eigenvalues(h: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let m = pt_real_form(h);
    let cap = 30 * m.nrows().max(10);
    match nalgebra::linalg::Schur::try_new(m, EPS, cap) {
        Some(schur) => Ok(schur.complex_eigenvalues().iter().copied().collect()),
        None => complex_eigen(h, false).map(|e| e.values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hessenberg_is_similarity() {
        let n = 7;
        let a = DMatrix::from_fn(n, n, |i, j| c((i * 3 + j) as f64 * 0.37 % 1.3, (i as f64 - j as f64) * 0.11));
        let mut h = a.clone();
        let mut q = DMatrix::identity(n, n);
        hessenberg(&mut h, Some(&mut q));
        for i in 2..n {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], c(0.0, 0.0));
            }
        }
        let back = &q * &h * q.adjoint();
        assert!((back - a).norm() < 1e-13);
    }

    #[test]
    fn schur_form_reconstructs_matrix() {
        let n = 9;
        let a = DMatrix::from_fn(n, n, |i, j| c(((i + 2 * j) % 5) as f64 - 2.0, ((i * j) % 3) as f64 * 0.5));
        let mut h = a.clone();
        let mut z = DMatrix::identity(n, n);
        hessenberg(&mut h, Some(&mut z));
        schur_qr(&mut h, Some(&mut z)).unwrap();
        for i in 1..n {
            for j in 0..i {
                assert_eq!(h[(i, j)], c(0.0, 0.0));
            }
        }
        assert!((&z * &h * z.adjoint() - &a).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn pt_real_form_is_similar() {
        let spec = crate::lattice::LatticeSpec::new(crate::lattice::Topology::MoebiusPeriodic, 4)
            .with_gamma(0.8);
        let h = crate::lattice::build_real_space_hamiltonian(&spec).unwrap();
        assert!(is_pt_symmetric(&h, 1e-14));
        let fast = pt_eigenvalues(&h).unwrap();
        let slow = complex_eigen(&h, false).unwrap().values;
        assert!(crate::spectral::multiset_distance(&fast, &slow) < 1e-10);
    }

    #[test]
    fn delta_breaks_pt_detection() {
        let spec = crate::lattice::LatticeSpec::new(crate::lattice::Topology::OpenLadder, 3)
            .with_gamma(0.5)
            .with_delta(0.1);
        let h = crate::lattice::build_real_space_hamiltonian(&spec).unwrap();
        assert!(!is_pt_symmetric(&h, 1e-14));
    }

    #[test]
    fn cyclic_permutation_converges() {
        // unshifted QR stalls on this matrix; Wilkinson plus exceptional shifts must not
        let n = 4;
        let a = DMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let e = complex_eigen(&a, false).unwrap();
        for want in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            assert!(e.values.iter().any(|v| (v - want).norm() < 1e-12), "{:?}", e.values);
        }
    }
}
