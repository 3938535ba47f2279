//! Dense matrix type and the numerical kernels used across the crate:
//! row-major matmuls, Cholesky solves, a symmetric eigensolver
//! (Householder tridiagonalization + implicit-shift QL), and Lanczos with
//! full reorthogonalization for matrix-free operators.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Row-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length {} != {}x{}", data.len(), rows, cols);
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    /// Column vector from a slice.
    pub fn column(v: &[f64]) -> Self {
        Mat { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// y = A v.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| dot(row, v))
            .collect()
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += s * x
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// C = A Bᵀ where A is m×k and B is n×k.
pub fn matmul_nt(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.cols, "matmul_nt inner dims");
    let mut c = Mat::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let arow = a.row(i);
        let crow = c.row_mut(i);
        for (j, cij) in crow.iter_mut().enumerate() {
            *cij = dot(arow, b.row(j));
        }
    }
    c
}

/// C = A B where A is m×k and B is k×n.
pub fn matmul_nn(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows, "matmul_nn inner dims");
    let mut c = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let arow = a.row(i);
        for (q, &aiq) in arow.iter().enumerate() {
            let brow = b.row(q);
            let crow = c.row_mut(i);
            axpy(crow, aiq, brow);
        }
    }
    c
}

/// C = Aᵀ B where A is k×m and B is k×n.
pub fn matmul_tn(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows, "matmul_tn inner dims");
    let mut c = Mat::zeros(a.cols, b.cols);
    for q in 0..a.rows {
        let arow = a.row(q);
        let brow = b.row(q);
        for (i, &aqi) in arow.iter().enumerate() {
            axpy(c.row_mut(i), aqi, brow);
        }
    }
    c
}

/// Solve A x = b for symmetric positive-definite A via Cholesky.
pub fn cholesky_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Shape(format!(
            "cholesky_solve expects square A and matching rhs, got {}x{} and {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let l = cholesky_factor(a)?;
    // Forward substitution: L y = b.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s = b[i] - dot(&l.row(i)[..i], &y[..i]);
        y[i] = s / l[(i, i)];
    }
    // Back substitution: Lᵀ x = y.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky_factor(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    let scale: f64 = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    for j in 0..n {
        let mut d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if d <= scale * 1e-14 || !d.is_finite() {
            return Err(Error::Singular(format!(
                "pivot {d:.3e} at column {j}; the system is not positive definite (try a regularization term > 0)"
            )));
        }
        d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Eigendecomposition of a real symmetric matrix.
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column j is the eigenvector for `values[j]`.
    pub vectors: Mat,
}

/// All eigenvalues of a real symmetric matrix, ascending. Eigenvectors are
/// not accumulated, which roughly halves the work of [`symmetric_eigen`].
pub fn symmetric_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    let (mut d, mut e, _) = tridiagonalize(a, false)?;
    tql(&mut d, &mut e, None)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

/// Full eigendecomposition A = V diag(λ) Vᵀ of a real symmetric matrix.
pub fn symmetric_eigen(a: &Mat) -> Result<SymmetricEigen> {
    let (mut d, mut e, v) = tridiagonalize(a, true)?;
    let mut v = v.expect("vectors requested");
    tql(&mut d, &mut e, Some(&mut v))?;
    // Sort ascending, permuting eigenvector columns alongside.
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, newj)] = v[(i, oldj)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending. `offdiag[i]` sits
/// between diagonal entries i and i+1 (`offdiag.len() == diag.len() - 1`).
pub fn tridiagonal_eigenvalues(diag: &[f64], offdiag: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n == 0 || offdiag.len() == n - 1, "offdiag length mismatch");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);
    tql(&mut d, &mut e, None)?;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(d)
}

/// Householder reduction of a symmetric matrix to tridiagonal form
/// (EISPACK tred2). Returns (diagonal, subdiagonal with e[0] = 0, Q).
/// Q is only accumulated when `vectors` is set.
fn tridiagonalize(a: &Mat, vectors: bool) -> Result<(Vec<f64>, Vec<f64>, Option<Mat>)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape(format!("eigensolver needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite { what: "eigensolver input".into(), sample: None });
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return Ok((d, e, vectors.then(|| v)));
    }

    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        // Scale to avoid under/overflow.
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            // Generate Householder vector.
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
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            // Apply similarity transformation to remaining columns.
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
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
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations; the diagonal bookkeeping runs either way.
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if vectors && h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;

    Ok((d, e, vectors.then(|| v)))
}

const TQL_MAX_SWEEPS: usize = 60;

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix
/// (EISPACK tql2). On entry e[i] is the subdiagonal between i-1 and i for
/// i >= 1; on exit d holds the (unsorted) eigenvalues. When `v` is given,
/// its columns are rotated into the eigenvectors.
fn tql(d: &mut [f64], e: &mut [f64], mut v: Option<&mut Mat>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > TQL_MAX_SWEEPS {
                    return Err(Error::Eigensolver(format!(
                        "QL iteration failed to converge for eigenvalue {l} after {TQL_MAX_SWEEPS} sweeps"
                    )));
                }

                // Implicit shift.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // Implicit QL sweep.
                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let h = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * h;
                            v[(k, i)] = c * v[(k, i)] - s * h;
                        }
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

/// A symmetric linear operator given implicitly by its matrix-vector product.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>>;
}

impl LinearOperator for Mat {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.matvec(v))
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Number of leading eigenvalues requested.
    pub k: usize,
    /// Hard cap on Krylov dimension; clamped to the operator dimension.
    pub max_iters: usize,
    /// Relative Ritz-value change below which the top-k are considered converged.
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
}

impl LanczosOptions {
    pub fn new(k: usize) -> Self {
        LanczosOptions {
            k,
            max_iters: (6 * k).max(k + 80),
            tol: 1e-8,
            seed: 0,
            max_restarts: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOutcome {
    /// Top-k eigenvalue estimates, descending.
    pub top: Vec<f64>,
    /// All Ritz values of the final Krylov space, descending.
    pub ritz: Vec<f64>,
    pub iterations: usize,
}

/// Lanczos iteration with full reorthogonalization against all stored basis
/// vectors. Convergence is declared when every requested Ritz value changes
/// by less than `tol` relative between consecutive iterations. Breakdown
/// before k Ritz values are available triggers a restart with a fresh seed.
pub fn lanczos_top_k<Op: LinearOperator + ?Sized>(
    op: &Op,
    opts: &LanczosOptions,
) -> Result<LanczosOutcome> {
    let n = op.dim();
    if n == 0 || opts.k == 0 {
        return Err(Error::InvalidSpec("lanczos needs dim >= 1 and k >= 1".into()));
    }
    let k = opts.k.min(n);
    let max_m = opts.max_iters.min(n).max(k);

    let mut last_err = None;
    for attempt in 0..=opts.max_restarts {
        match lanczos_run(op, k, max_m, opts.tol, opts.seed.wrapping_add(attempt as u64)) {
            Ok(out) => return Ok(out),
            // Breakdown restarts with a fresh start vector; anything else propagates.
            Err(e @ Error::Eigensolver(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Eigensolver("lanczos failed with no attempts".into())))
}

fn lanczos_run<Op: LinearOperator + ?Sized>(
    op: &Op,
    k: usize,
    max_m: usize,
    tol: f64,
    seed: u64,
) -> Result<LanczosOutcome> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nv = norm2(&v);
    for x in &mut v {
        *x /= nv;
    }

    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut alphas: Vec<f64> = Vec::with_capacity(max_m);
    let mut betas: Vec<f64> = Vec::with_capacity(max_m);
    let mut prev_top: Option<Vec<f64>> = None;
    let mut scale = 0.0f64;

    for j in 0..max_m {
        let mut w = op.apply(&basis[j])?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "operator product in lanczos".into(), sample: None });
        }
        if j > 0 {
            axpy(&mut w, -betas[j - 1], &basis[j - 1]);
        }
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        axpy(&mut w, -alpha, &basis[j]);
        // Full reorthogonalization pass.
        for prev in &basis {
            let proj = dot(&w, prev);
            axpy(&mut w, -proj, prev);
        }
        scale = scale.max(alpha.abs());
        let beta = norm2(&w);

        let ritz = tridiagonal_eigenvalues(&alphas, &betas)?;
        let top: Vec<f64> = ritz.iter().rev().take(k).copied().collect();

        let converged = top.len() >= k
            && prev_top.as_ref().is_some_and(|prev| {
                prev.len() == top.len()
                    && prev.iter().zip(&top).all(|(a, b)| {
                        let denom = a.abs().max(b.abs());
                        denom == 0.0 || (a - b).abs() <= tol * denom
                    })
            });

        let breakdown = beta <= scale.max(1.0) * 1e-13;
        if converged || breakdown || j + 1 == max_m || j + 1 == n {
            if breakdown && top.len() < k && j + 1 < n {
                return Err(Error::Eigensolver(format!(
                    "lanczos breakdown at step {} with only {} Ritz values (need {k})",
                    j + 1,
                    top.len()
                )));
            }
            let mut all = ritz;
            all.reverse();
            return Ok(LanczosOutcome { top, ritz: all, iterations: j + 1 });
        }

        prev_top = Some(top);
        betas.push(beta);
        for x in &mut w {
            *x /= beta;
        }
        basis.push(w);
    }

    unreachable!("loop exits via convergence, breakdown, or iteration cap")
}

/// Gaussian random vector, deterministic per seed.
pub fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.sample(StandardNormal);
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let a = Mat::from_vec(3, 3, vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let vals = symmetric_eigenvalues(&a).unwrap();
        assert_eq!(vals, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = random_symmetric(12, 7);
        let eig = symmetric_eigen(&a).unwrap();
        // A v_j = λ_j v_j
        for j in 0..12 {
            let vj: Vec<f64> = (0..12).map(|i| eig.vectors[(i, j)]).collect();
            let av = a.matvec(&vj);
            for i in 0..12 {
                assert!(
                    (av[i] - eig.values[j] * vj[i]).abs() < 1e-9,
                    "residual at ({i},{j}): {} vs {}",
                    av[i],
                    eig.values[j] * vj[i]
                );
            }
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let a = random_symmetric(30, 3);
        let vals = symmetric_eigenvalues(&a).unwrap();
        let sum: f64 = vals.iter().sum();
        assert!((sum - a.trace()).abs() <= 1e-6 * a.trace().abs().max(1.0));
    }

    #[test]
    fn known_spectrum_recovered() {
        // Build A = Q diag(λ) Qᵀ from a random orthogonal Q (via eigenvectors
        // of a random symmetric matrix) and recover the planted spectrum.
        let helper = random_symmetric(8, 11);
        let q = symmetric_eigen(&helper).unwrap().vectors;
        let planted = [-4.0, -1.0, 0.0, 0.5, 1.0, 2.0, 8.0, 16.0];
        let mut a = Mat::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                let mut s = 0.0;
                for (m, lam) in planted.iter().enumerate() {
                    s += q[(i, m)] * lam * q[(j, m)];
                }
                a[(i, j)] = s;
            }
        }
        let vals = symmetric_eigenvalues(&a).unwrap();
        for (got, want) in vals.iter().zip(planted.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn lanczos_matches_dense_top() {
        let a = random_symmetric(60, 21);
        let dense = symmetric_eigenvalues(&a).unwrap();
        let out = lanczos_top_k(&a, &LanczosOptions::new(5)).unwrap();
        for (i, lam) in out.top.iter().enumerate() {
            let want = dense[dense.len() - 1 - i];
            assert!(
                (lam - want).abs() <= 1e-8 * want.abs().max(1.0),
                "top-{i}: {lam} vs {want}"
            );
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = random_symmetric(10, 5);
        // Make it diagonally dominant, hence SPD.
        for i in 0..10 {
            a[(i, i)] += 20.0;
        }
        let x_true: Vec<f64> = (0..10).map(|i| (i as f64) - 4.5).collect();
        let b = a.matvec(&x_true);
        let x = cholesky_solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = Mat::from_vec(2, 2, vec![1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn matmul_shapes_and_values() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = matmul_nn(&a, &b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
        let c2 = matmul_nt(&a, &b.transpose());
        assert_eq!(c.data(), c2.data());
        let c3 = matmul_tn(&a.transpose(), &b);
        assert_eq!(c3.data(), c2.data());
    }
}
