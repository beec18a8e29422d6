//! In-repo factorizations: Cholesky, LU, Householder QR, symmetric
//! eigendecomposition (Householder tridiagonalization + implicit QL) and
//! one-sided Jacobi SVD, plus the derived polar decomposition and
//! pseudo-inverse solves.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, Matrix};

/// Relative symmetry tolerance used when certifying SPD / symmetric inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Inputs whose condition estimate exceeds this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factorizes the lower triangle of `a`. Fails on a non-positive pivot.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.ensure_square("cholesky")?;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut s = a[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { op: "cholesky" });
            }
            let ljj = s.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let cols: Vec<Vec<f64>> = (0..b.cols()).map(|j| self.solve(b.col(j))).collect();
        Matrix::from_columns(b.rows(), &cols)
    }

    pub fn inverse(&self) -> Matrix {
        self.solve_matrix(&Matrix::identity(self.l.rows())).symmetrize()
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.ensure_square("lu")?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 || pivot <= f64::EPSILON * scale * 1e-3 {
                return Err(Error::Singular { op: "lu" });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(p, j)];
                    lu[(p, j)] = lu[(k, j)];
                    lu[(k, j)] = t;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] /= d;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == 0.0 {
                    continue;
                }
                for i in k + 1..n {
                    lu[(i, j)] -= lu[(i, k)] * ukj;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transposed(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lu[(k, i)] * y[k];
            }
            y[i] /= self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.lu[(k, i)] * y[k];
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.lu.rows();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.solve(&e)
            })
            .collect();
        Matrix::from_columns(n, &cols)
    }
}

/// Solves `A x = b` for square `A`.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::new(a)?.solve(b))
}

/// Dense inverse of a square matrix.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    Ok(Lu::new(a)?.inverse())
}

/// 1-norm condition number `‖A‖₁‖A⁻¹‖₁`; infinite for singular input.
pub fn cond_estimate(a: &Matrix) -> f64 {
    match Lu::new(a) {
        Ok(lu) => a.norm_one() * lu.inverse().norm_one(),
        Err(_) => f64::INFINITY,
    }
}

/// Fails with `IllConditioned` when the condition estimate exceeds [`CONDITION_LIMIT`].
pub fn ensure_well_conditioned(a: &Matrix, op: &'static str) -> Result<f64> {
    a.ensure_square(op)?;
    let cond = cond_estimate(a);
    if cond.is_finite() && cond < CONDITION_LIMIT {
        Ok(cond)
    } else {
        Err(Error::IllConditioned {
            op,
            cond,
            limit: CONDITION_LIMIT,
        })
    }
}

/// Householder QR of an `m x n` matrix.
#[derive(Clone, Debug)]
pub struct Qr {
    /// R in the upper triangle; reflectors stored separately.
    qr: Matrix,
    reflectors: Vec<Vec<f64>>,
}

impl Qr {
    pub fn new(a: &Matrix) -> Self {
        let (m, n) = a.shape();
        let mut r = a.clone();
        let mut reflectors = Vec::with_capacity(n.min(m));
        for k in 0..n.min(m) {
            let x: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
            let norm = dot(&x, &x).sqrt();
            let mut v = x;
            if norm == 0.0 {
                reflectors.push(vec![0.0; m - k]);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vn = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|t| *t /= vn);
            for j in k..n {
                let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                for i in k..m {
                    r[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
            for i in k + 1..m {
                r[(i, k)] = 0.0;
            }
            reflectors.push(v);
        }
        Self { qr: r, reflectors }
    }

    /// Upper-triangular `min(m,n) x n` factor.
    pub fn r(&self) -> Matrix {
        let (m, n) = self.qr.shape();
        let k = m.min(n);
        Matrix::from_fn(k, n, |i, j| if i <= j { self.qr[(i, j)] } else { 0.0 })
    }

    /// Applies `Qᵀ` to a vector of length `m`.
    pub fn apply_qt(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            let s: f64 = v.iter().zip(&y[k..]).map(|(a, b)| a * b).sum();
            for (yi, vi) in y[k..].iter_mut().zip(v) {
                *yi -= 2.0 * vi * s;
            }
        }
        y
    }

    /// Square orthogonal factor `m x m`.
    pub fn q_full(&self) -> Matrix {
        let m = self.qr.rows();
        let mut q = Matrix::identity(m);
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            for j in 0..m {
                let s: f64 = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
                if s == 0.0 {
                    continue;
                }
                for i in k..m {
                    q[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
        }
        q
    }

    /// Thin orthogonal factor `m x min(m,n)`.
    pub fn q_thin(&self) -> Matrix {
        let (m, n) = self.qr.shape();
        self.q_full().leading_cols(m.min(n))
    }

    /// Numerical rank: count of `|R_ii| > rel_tol · max |R_jj|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let (m, n) = self.qr.shape();
        let diag: Vec<f64> = (0..m.min(n)).map(|i| self.qr[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return 0;
        }
        diag.iter().filter(|&&d| d > rel_tol * max).count()
    }

    /// Least-squares solution of `min ‖A x − b‖₂` for full-column-rank `A` (`m ≥ n`).
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = self.qr.shape();
        if m < n {
            return Err(Error::dims("qr least squares", "rows >= cols", format!("{m}x{n}")));
        }
        if b.len() != m {
            return Err(Error::dims("qr least squares", m, b.len()));
        }
        if self.rank(1e-14) < n {
            return Err(Error::Singular {
                op: "qr least squares",
            });
        }
        let y = self.apply_qt(b);
        let mut x = y[..n].to_vec();
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.qr[(i, k)] * x[k];
            }
            x[i] /= self.qr[(i, i)];
        }
        Ok(x)
    }
}

/// Eigendecomposition `A = V diag(λ) Vᵀ` of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// Symmetrizes `a` and decomposes it. Fails only if the QL iteration stalls.
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.ensure_square("symmetric eigendecomposition")?;
        if n == 0 {
            return Ok(Self {
                values: vec![],
                vectors: Matrix::zeros(0, 0),
            });
        }
        let s = a.symmetrize();
        let mut v: Vec<Vec<f64>> = (0..n).map(|i| s.row(i)).collect();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tridiagonalize(&mut v, &mut d, &mut e);
        tql2(&mut v, &mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
        let values = order.iter().map(|&i| d[i]).collect();
        let vectors = Matrix::from_fn(n, n, |i, j| v[i][order[j]]);
        Ok(Self { values, vectors })
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Reciprocal spectrum with eigenvalues `≤ rank_tol · λ_max` discarded.
    fn inverted_spectrum(&self, rank_tol: f64) -> Vec<f64> {
        let cutoff = rank_tol * self.max_value().max(0.0);
        self.values
            .iter()
            .map(|&l| if l > cutoff && l > 0.0 { 1.0 / l } else { 0.0 })
            .collect()
    }

    /// Number of eigenvalues above `rank_tol · λ_max`.
    pub fn rank(&self, rank_tol: f64) -> usize {
        self.inverted_spectrum(rank_tol)
            .iter()
            .filter(|&&v| v != 0.0)
            .count()
    }

    /// `V f(λ) Vᵀ y`.
    fn apply_spectral(&self, f: &[f64], y: &[f64]) -> Vec<f64> {
        let mut coeff = self.vectors.tr_matvec(y);
        coeff.iter_mut().zip(f).for_each(|(c, w)| *c *= w);
        self.vectors.matvec(&coeff)
    }

    pub fn pseudo_solve(&self, y: &[f64], rank_tol: f64) -> Vec<f64> {
        self.apply_spectral(&self.inverted_spectrum(rank_tol), y)
    }

    pub fn pseudo_inverse(&self, rank_tol: f64) -> Matrix {
        let inv = self.inverted_spectrum(rank_tol);
        spectral_matrix(&self.vectors, &inv)
    }

    /// `V diag(√max(λ,0))`, a square-root factor `F` with `F Fᵀ = A₊`.
    pub fn sqrt_factor(&self) -> Matrix {
        let n = self.values.len();
        Matrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j].max(0.0).sqrt())
    }
}

/// `V diag(w) Vᵀ`, symmetric by construction.
fn spectral_matrix(v: &Matrix, w: &[f64]) -> Matrix {
    let n = v.rows();
    let mut out = Matrix::zeros(n, n);
    for (k, &wk) in w.iter().enumerate() {
        if wk != 0.0 {
            out.rank1_update(wk, v.col(k), v.col(k));
        }
    }
    out.symmetrize()
}

// Householder reduction to tridiagonal form (Bowdler, Martin, Reinsch, Wilkinson).
// On exit `v` holds the accumulated orthogonal transform, `d` the diagonal and
// `e` the sub-diagonal in e[1..].
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1][..n]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL with Wilkinson-style shifts on the tridiagonal (d, e).
fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Breakdown {
                        op: "symmetric eigendecomposition",
                        iteration: l,
                        detail: "QL iteration did not converge".into(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Thin SVD `A = U diag(σ) Vᵀ` for `rows ≥ cols`, singular values descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    /// One-sided (Hestenes) Jacobi.
    pub fn new(a: &Matrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::dims("svd", "rows >= cols", format!("{m}x{n}")));
        }
        let mut u = a.clone();
        let mut v = Matrix::identity(n);
        let tol = f64::EPSILON * (m as f64).sqrt();
        let mut converged = false;
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = dot(u.col(p), u.col(p));
                    let beta = dot(u.col(q), u.col(q));
                    let gamma = dot(u.col(p), u.col(q));
                    if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate_cols(&mut u, p, q, c, s);
                    rotate_cols(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Breakdown {
                op: "svd",
                iteration: 80,
                detail: "Jacobi sweeps did not converge".into(),
            });
        }
        let mut sigma: Vec<f64> = (0..n).map(|j| dot(u.col(j), u.col(j)).sqrt()).collect();
        for (j, &s) in sigma.iter().enumerate() {
            if s > 0.0 {
                u.col_mut(j).iter_mut().for_each(|x| *x /= s);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
        let u = Matrix::from_fn(m, n, |i, j| u[(i, order[j])]);
        let v = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        sigma = order.iter().map(|&i| sigma[i]).collect();
        Ok(Self { u, sigma, v })
    }

    /// `σ_max / σ_min` (infinite if any singular value is zero).
    pub fn condition(&self) -> f64 {
        match (self.sigma.first(), self.sigma.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }
}

fn rotate_cols(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.rows() {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// Symmetric positive-definite matrix with its Cholesky factor cached.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    matrix: Matrix,
    chol: Cholesky,
}

impl SpdMatrix {
    /// Certifies symmetry (relative Frobenius tolerance 1e-10) and positive pivots.
    pub fn new(matrix: Matrix) -> Result<Self> {
        matrix.ensure_square("SpdMatrix::new")?;
        if !matrix.is_finite() {
            return Err(Error::NonFinite("SpdMatrix::new"));
        }
        let asym = matrix.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric {
                op: "SpdMatrix::new",
                asymmetry: asym,
            });
        }
        let chol = Cholesky::new(&matrix).map_err(|_| Error::NotPositiveDefinite {
            op: "SpdMatrix::new",
        })?;
        Ok(Self { matrix, chol })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_inner(self) -> Matrix {
        self.matrix
    }
}

/// Polar decomposition `A = P H` of an invertible square matrix, via the SVD
/// `A = U Σ Vᵀ`: `P = U Vᵀ`, `H = V Σ Vᵀ`.
pub fn polar_decompose(a: &Matrix) -> Result<(Matrix, SpdMatrix)> {
    a.ensure_square("polar_decompose")?;
    let svd = Svd::new(a)?;
    let cond = svd.condition();
    if !(cond < CONDITION_LIMIT) {
        return Err(Error::Singular {
            op: "polar_decompose",
        });
    }
    let p = svd.u.matmul_tr(&svd.v);
    let h = spectral_matrix(&svd.v, &svd.sigma);
    Ok((p, SpdMatrix::new(h)?))
}

/// Minimum-norm least-squares solution of `M x = y` for symmetric PSD `M`,
/// discarding eigenvalues `≤ rank_tol · λ_max`.
pub fn pseudo_solve(m: &Matrix, y: &[f64], rank_tol: f64) -> Result<Vec<f64>> {
    let n = m.ensure_square("pseudo_solve")?;
    if y.len() != n {
        return Err(Error::dims("pseudo_solve", n, y.len()));
    }
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            op: "pseudo_solve",
            asymmetry: asym,
        });
    }
    Ok(SymEigen::new(m)?.pseudo_solve(y, rank_tol))
}
