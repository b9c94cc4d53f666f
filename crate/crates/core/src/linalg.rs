//! Small dense complex matrices.
//!
//! Everything in this crate works with matrices of order N <= 6 (one row per
//! lattice layer), so the implementations favor transparency over asymptotic
//! cleverness: LU with partial pivoting for determinants, one-sided Jacobi
//! for singular vectors, two-sided Jacobi for Hermitian eigenvalues.

use num_complex::Complex64 as C64;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    a: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, a: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        let a = rows.iter().flat_map(|r| r.iter().copied()).collect();
        CMat { n, a }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.a[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.at(j, i))
    }

    pub fn conj(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.at(i, j).conj())
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self.at(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat { n: self.n, a: self.a.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        CMat { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        CMat { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect() }
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.at(i, k);
                if aik == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let v = out.at(i, j) + aik * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j) * x[j]).sum())
            .collect()
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.a.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Product of row 2-norms (Hadamard bound on |det|); used to normalize
    /// determinant residuals into a scale-free quantity.
    pub fn hadamard_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j).norm_sqr()).sum::<f64>().sqrt())
            .product()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C64 {
        let n = self.n;
        let mut lu = self.a.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let mut piv = col;
            let mut best = lu[col * n + col].norm();
            for r in (col + 1)..n {
                let v = lu[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if piv != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            let d = lu[col * n + col];
            det *= d;
            for r in (col + 1)..n {
                let f = lu[r * n + col] / d;
                lu[r * n + col] = f;
                for j in (col + 1)..n {
                    let v = lu[col * n + j];
                    lu[r * n + j] -= f * v;
                }
            }
        }
        det
    }

    /// Solve A x = b by LU with partial pivoting; None if singular.
    pub fn solve(&self, b: &[C64]) -> Option<Vec<C64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut lu = self.a.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut piv = col;
            let mut best = lu[col * n + col].norm();
            for r in (col + 1)..n {
                let v = lu[r * n + col].norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let d = lu[col * n + col];
            for r in (col + 1)..n {
                let f = lu[r * n + col] / d;
                for j in (col + 1)..n {
                    let v = lu[col * n + j];
                    lu[r * n + j] -= f * v;
                }
                let xc = x[col];
                x[r] -= f * xc;
            }
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= lu[i * n + j] * x[j];
            }
            x[i] = acc / lu[i * n + i];
        }
        Some(x)
    }

    /// Singular values and right singular vectors, ascending by singular
    /// value, via one-sided Jacobi on the columns.
    pub fn svd_right(&self) -> Vec<(f64, Vec<C64>)> {
        let n = self.n;
        // cols[j] is the j-th column of the working matrix.
        let mut cols: Vec<Vec<C64>> = (0..n).map(|j| (0..n).map(|i| self.at(i, j)).collect()).collect();
        let mut v: Vec<Vec<C64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect())
            .collect();
        let tol = 1e-30;
        for _sweep in 0..80 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let app: f64 = cols[p].iter().map(|x| x.norm_sqr()).sum();
                    let aqq: f64 = cols[q].iter().map(|x| x.norm_sqr()).sum();
                    let apq: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                    let beta = apq.norm();
                    if beta <= tol + 1e-15 * (app * aqq).sqrt() {
                        continue;
                    }
                    off = off.max(beta / (app * aqq).sqrt().max(1e-300));
                    let (c, s, phase) = jacobi_angles(app, aqq, apq);
                    // Columns rotate by U = [[c, -s e^{i phi}], [s e^{-i phi}, c]].
                    for i in 0..n {
                        let xp = cols[p][i];
                        let xq = cols[q][i];
                        cols[p][i] = c * xp + s * phase.conj() * xq;
                        cols[q][i] = -s * phase * xp + c * xq;
                        let vp = v[p][i];
                        let vq = v[q][i];
                        v[p][i] = c * vp + s * phase.conj() * vq;
                        v[q][i] = -s * phase * vp + c * vq;
                    }
                }
            }
            if off < 1e-15 {
                break;
            }
        }
        let mut out: Vec<(f64, Vec<C64>)> = (0..n)
            .map(|j| {
                let sigma = cols[j].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                (sigma, v[j].clone())
            })
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    /// Right singular vector of the smallest singular value (near-null vector
    /// at an eigenfrequency).
    pub fn smallest_singular(&self) -> (f64, Vec<C64>) {
        self.svd_right().remove(0)
    }

    /// Eigenvalues of a Hermitian matrix by two-sided Jacobi, ascending.
    /// Panics in debug builds if fed a matrix that is visibly non-Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        debug_assert!(self.sub(&self.adjoint()).max_norm() <= 1e-9 * (1.0 + self.max_norm()));
        let mut h = self.clone();
        for _sweep in 0..80 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = h.at(p, q);
                    let beta = apq.norm();
                    let scale = (h.at(p, p).norm() + h.at(q, q).norm()).max(1e-300);
                    if beta <= 1e-16 * scale {
                        continue;
                    }
                    off = off.max(beta / scale);
                    let (c, s, phase) = jacobi_angles(h.at(p, p).re, h.at(q, q).re, apq);
                    // H <- U^H H U on rows/columns p, q.
                    for i in 0..n {
                        let hip = h.at(i, p);
                        let hiq = h.at(i, q);
                        h.set(i, p, c * hip + s * phase.conj() * hiq);
                        h.set(i, q, -s * phase * hip + c * hiq);
                    }
                    for j in 0..n {
                        let hpj = h.at(p, j);
                        let hqj = h.at(q, j);
                        h.set(p, j, c * hpj + s * phase * hqj);
                        h.set(q, j, -s * phase.conj() * hpj + c * hqj);
                    }
                }
            }
            if off < 1e-15 {
                break;
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| h.at(i, i).re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// Rotation annihilating the off-diagonal entry of the Hermitian 2x2 block
/// [[app, apq], [conj(apq), aqq]]. Returns (c, s, phase) with apq = |apq| phase,
/// for the unitary U = [[c, -s phase], [s conj(phase), c]]: the off-diagonal
/// of U^H G U is phase [beta (c^2 - s^2) + c s (aqq - app)], which vanishes
/// for t = tan(theta) solving t^2 + 2 sigma t - 1 = 0, sigma = (app - aqq)/(2 beta).
fn jacobi_angles(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let beta = apq.norm();
    let phase = apq / beta;
    let sigma = (app - aqq) / (2.0 * beta);
    let t = if sigma >= 0.0 {
        1.0 / (sigma + (1.0 + sigma * sigma).sqrt())
    } else {
        -1.0 / (-sigma + (1.0 + sigma * sigma).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, phase)
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Plain dot product without conjugation, x . y.
pub fn dot_t(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Hermitian inner product, conj(x) . y.
pub fn dot_h(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
