//! Dense square matrices with the few operations the simulations need:
//! products where the right factor is symmetric, and a symmetric eigensolver
//! (Householder tridiagonalization followed by implicit-shift QL), including
//! the tridiagonal variant used to build quadrature rules.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("eigenvalue iteration failed to converge at index {index} after {iterations} sweeps")]
    NoConvergence { index: usize, iterations: usize },
    #[error("matrix is not symmetric: max |M - M^T| = {residual:e} exceeds {tolerance:e} (relative)")]
    NotSymmetric { residual: f64, tolerance: f64 },
    #[error("eigenvalue sum {sum} disagrees with trace {trace} beyond 1e-6 relative")]
    TraceMismatch { sum: f64, trace: f64 },
}

/// Row-major square matrix of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replaces the matrix by (M + M^T)/2 after checking that the relative
    /// asymmetry is below `rel_tol`.
    pub fn symmetrize_checked(&mut self, rel_tol: f64) -> Result<(), MatrixError> {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let residual = self.max_asymmetry() / scale;
        if residual >= rel_tol {
            return Err(MatrixError::NotSymmetric {
                residual,
                tolerance: rel_tol,
            });
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
        Ok(())
    }

    /// self += factor * other
    pub fn add_scaled(&mut self, other: &Matrix, factor: f64) -> Result<(), MatrixError> {
        if self.n != other.n {
            return Err(MatrixError::DimensionMismatch(self.n, other.n));
        }
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.data.iter_mut() {
            *v *= factor;
        }
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let v = self.get(i, i) + shift;
            self.set(i, i, v);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the reduction pipelines
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..chunks {
        let i = 4 * k;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut rest = 0.0;
    for i in 4 * chunks..a.len() {
        rest += a[i] * b[i];
    }
    (s0 + s1) + (s2 + s3) + rest
}

/// C = A * B for symmetric B: C_ij is a dot product of two contiguous rows,
/// which keeps the inner loop sequential. The j-blocking keeps a tile of B's
/// rows hot in cache.
pub fn mul_with_symmetric_rhs(a: &Matrix, b_symmetric: &Matrix) -> Result<Matrix, MatrixError> {
    if a.n != b_symmetric.n {
        return Err(MatrixError::DimensionMismatch(a.n, b_symmetric.n));
    }
    let n = a.n;
    let mut c = Matrix::zeros(n);
    const TILE: usize = 24;
    for jb in (0..n).step_by(TILE) {
        let jend = (jb + TILE).min(n);
        for i in 0..n {
            let arow = a.row(i);
            for j in jb..jend {
                let v = dot(arow, b_symmetric.row(j));
                c.set(i, j, v);
            }
        }
    }
    Ok(c)
}

/// Eigenvalues of a symmetric matrix, ascending. The input is checked for
/// symmetry, reduced to tridiagonal form by Householder reflections, and
/// diagonalized by the implicit-shift QL iteration. The eigenvalue sum is
/// checked against the trace to 1e-6 relative.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>, MatrixError> {
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    if m.max_asymmetry() / scale > 1e-10 {
        return Err(MatrixError::NotSymmetric {
            residual: m.max_asymmetry() / scale,
            tolerance: 1e-10,
        });
    }
    let trace = m.trace();
    let (mut d, mut e) = householder_tridiagonalize(&mut m.clone());
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let sum: f64 = d.iter().sum();
    let denom = trace.abs().max(scale * m.n() as f64).max(1e-300);
    if (sum - trace).abs() / denom > 1e-6 {
        return Err(MatrixError::TraceMismatch { sum, trace });
    }
    Ok(d)
}

/// Eigenvalues and eigenvectors of a symmetric matrix (columns of the
/// returned matrix, in ascending eigenvalue order). Used by tests to verify
/// residuals; the large simulations only need eigenvalues.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix), MatrixError> {
    let n = m.n();
    let mut a = m.clone();
    let (mut d, mut e) = householder_tridiagonalize_accumulate(&mut a);
    ql_implicit(&mut d, &mut e, Some(&mut a))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).expect("finite"));
    let sorted: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut q = Matrix::zeros(n);
    for (newcol, &oldcol) in order.iter().enumerate() {
        for r in 0..n {
            q.set(r, newcol, a.get(r, oldcol));
        }
    }
    Ok((sorted, q))
}

// Reduces a symmetric matrix to tridiagonal form, returning (diagonal,
// subdiagonal); e[i] couples rows i-1 and i, e[0] unused. The rank-2 update
// runs over full rows so every inner loop is contiguous.
fn householder_tridiagonalize(a: &mut Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut p = vec![0.0f64; n];
    for i in (1..n).rev() {
        let l = i; // the active block is rows/cols 0..l
        let tail = l - 1;
        let scale: f64 = a.row(i)[..l].iter().map(|x| x.abs()).sum();
        if scale == 0.0 {
            e[i] = 0.0;
            d[i] = a.get(i, i);
            continue;
        }
        if l == 1 {
            e[i] = a.get(i, 0);
            d[i] = a.get(i, i);
            continue;
        }
        v[..l].copy_from_slice(&a.row(i)[..l]);
        for x in v[..l].iter_mut() {
            *x /= scale;
        }
        let mut h: f64 = v[..l].iter().map(|x| x * x).sum();
        let f = v[tail];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        v[tail] = f - g;
        // p = A v / h over the leading l x l block
        for j in 0..l {
            p[j] = dot(&a.row(j)[..l], &v[..l]) / h;
        }
        let k: f64 = dot(&p[..l], &v[..l]) / (2.0 * h);
        for j in 0..l {
            p[j] -= k * v[j];
        }
        // A -= v p^T + p v^T (full rows; symmetry preserved by construction)
        for j in 0..l {
            let (vj, pj) = (v[j], p[j]);
            let row = a.row_mut(j);
            for t in 0..l {
                row[t] -= vj * p[t] + pj * v[t];
            }
        }
        d[i] = a.get(i, i);
    }
    d[0] = a.get(0, 0);
    e[0] = 0.0;
    (d, e)
}

// Tridiagonalization that also accumulates the orthogonal transform into `a`
// (overwritten), for eigenvector computation on small matrices.
fn householder_tridiagonalize_accumulate(a: &mut Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    let mut vs: Vec<(usize, Vec<f64>, f64)> = Vec::new(); // (block size, reflector, h)
    for i in (1..n).rev() {
        let l = i;
        let tail = l - 1;
        let scale: f64 = a.row(i)[..l].iter().map(|x| x.abs()).sum();
        if scale == 0.0 {
            e[i] = 0.0;
            d[i] = a.get(i, i);
            continue;
        }
        if l == 1 {
            e[i] = a.get(i, 0);
            d[i] = a.get(i, i);
            continue;
        }
        let mut v = a.row(i)[..l].to_vec();
        for x in v.iter_mut() {
            *x /= scale;
        }
        let mut h: f64 = v.iter().map(|x| x * x).sum();
        let f = v[tail];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        v[tail] = f - g;
        let mut p = vec![0.0f64; l];
        for j in 0..l {
            p[j] = dot(&a.row(j)[..l], &v) / h;
        }
        let k: f64 = dot(&p, &v) / (2.0 * h);
        for j in 0..l {
            p[j] -= k * v[j];
        }
        for j in 0..l {
            let (vj, pj) = (v[j], p[j]);
            let row = a.row_mut(j);
            for t in 0..l {
                row[t] -= vj * p[t] + pj * v[t];
            }
        }
        d[i] = a.get(i, i);
        vs.push((l, v, h));
    }
    d[0] = a.get(0, 0);
    e[0] = 0.0;
    // Q = H_{n-1} ... H_2 applied to the identity
    let mut q = Matrix::identity(n);
    for (l, v, h) in vs.into_iter().rev() {
        for col in 0..n {
            let mut s = 0.0;
            for r in 0..l {
                s += v[r] * q.get(r, col);
            }
            s /= h;
            for r in 0..l {
                let val = q.get(r, col) - s * v[r];
                q.set(r, col, val);
            }
        }
    }
    *a = q;
    (d, e)
}

// Implicit-shift QL iteration on a tridiagonal matrix. `d` holds the
// diagonal, `e[i]` the coupling between rows i-1 and i (e[0] unused). When
// `z` is given, rotations accumulate into its columns.
fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Matrix>) -> Result<(), MatrixError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    // shift to the convention e[i] couples d[i] and d[i+1]
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    const MAX_SWEEPS: usize = 50;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_SWEEPS {
                return Err(MatrixError::NoConvergence {
                    index: l,
                    iterations,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    let nn = zm.n();
                    for k in 0..nn {
                        let f2 = zm.get(k, i + 1);
                        let zi = zm.get(k, i);
                        zm.set(k, i + 1, s * zi + c * f2);
                        zm.set(k, i, c * zi - s * f2);
                    }
                }
                f = 0.0;
                let _ = f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric tridiagonal matrix given by its
/// diagonal and subdiagonal (off[i] couples rows i and i+1). Returns
/// eigenvalues ascending and, when requested, the first component of each
/// normalized eigenvector (the Golub–Welsch weights ingredient).
pub fn tridiagonal_eigen_first_components(
    diag: &[f64],
    off: &[f64],
    want_first: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>), MatrixError> {
    let n = diag.len();
    assert_eq!(off.len(), n.saturating_sub(1));
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    for i in 1..n {
        e[i] = off[i - 1];
    }
    if want_first {
        let mut z = Matrix::identity(n);
        ql_implicit(&mut d, &mut e, Some(&mut z))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).expect("finite"));
        let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
        let firsts: Vec<f64> = order.iter().map(|&k| z.get(0, k)).collect();
        Ok((values, Some(firsts)))
    } else {
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        Ok((d, None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_distr::StandardNormal;

    fn random_symmetric(n: usize, seed: u64) -> Matrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.sample(StandardNormal);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_eigenvalues() {
        let mut m = Matrix::zeros(3);
        m.set(0, 0, 1.0);
        m.set(1, 1, 2.0);
        m.set(2, 2, 3.0);
        let ev = symmetric_eigenvalues(&m).unwrap();
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_by_two_off_diagonal() {
        let mut m = Matrix::zeros(2);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let ev = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut m = Matrix::zeros(2);
        m.set(0, 1, 1.0);
        assert!(matches!(
            symmetric_eigenvalues(&m),
            Err(MatrixError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn trace_is_preserved() {
        for seed in 0..5 {
            let m = random_symmetric(60, seed);
            let ev = symmetric_eigenvalues(&m).unwrap();
            let sum: f64 = ev.iter().sum();
            assert_abs_diff_eq!(sum, m.trace(), epsilon = 1e-8 * m.max_abs() * 60.0);
        }
    }

    #[test]
    fn eigen_moments_match_matrix_powers() {
        // spectral moments tr(M^k) computed two ways, k <= 4
        let m = random_symmetric(40, 11);
        let ev = symmetric_eigenvalues(&m).unwrap();
        let m2 = mul_with_symmetric_rhs(&m, &m).unwrap();
        let m3 = mul_with_symmetric_rhs(&m2, &m).unwrap();
        let m4 = mul_with_symmetric_rhs(&m3, &m).unwrap();
        for (k, mk) in [(2usize, &m2), (3, &m3), (4, &m4)] {
            let via_eigen: f64 = ev.iter().map(|l| l.powi(k as i32)).sum();
            let via_trace = mk.trace();
            assert!(
                (via_eigen - via_trace).abs() <= 1e-8 * via_trace.abs().max(1.0),
                "k={k}: {via_eigen} vs {via_trace}"
            );
        }
    }

    #[test]
    fn eigenvector_residuals_are_small() {
        let m = random_symmetric(50, 3);
        let (vals, q) = symmetric_eigen(&m).unwrap();
        let scale = m.max_abs();
        for &idx in &[0usize, 10, 25, 49] {
            let v: Vec<f64> = (0..50).map(|r| q.get(r, idx)).collect();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-8);
            let mut worst = 0.0f64;
            for r in 0..50 {
                let mv = dot(m.row(r), &v);
                worst = worst.max((mv - vals[idx] * v[r]).abs());
            }
            assert!(worst <= 1e-8 * scale, "residual {worst} at eigenvalue {}", vals[idx]);
        }
    }

    #[test]
    fn product_against_naive_multiplication() {
        let a = random_symmetric(30, 7);
        let b = random_symmetric(30, 8);
        let c = mul_with_symmetric_rhs(&a, &b).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let mut naive = 0.0;
                for k in 0..30 {
                    naive += a.get(i, k) * b.get(k, j);
                }
                assert_abs_diff_eq!(c.get(i, j), naive, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn tridiagonal_eigen_matches_dense_path() {
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + (i as f64 * 0.11).cos()).collect();
        let mut dense = Matrix::zeros(n);
        for i in 0..n {
            dense.set(i, i, diag[i]);
        }
        for i in 0..n - 1 {
            dense.set(i, i + 1, off[i]);
            dense.set(i + 1, i, off[i]);
        }
        let (tri_vals, firsts) = tridiagonal_eigen_first_components(&diag, &off, true).unwrap();
        let dense_vals = symmetric_eigenvalues(&dense).unwrap();
        for (a, b) in tri_vals.iter().zip(dense_vals.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
        // first components of normalized eigenvectors: their squares sum to 1
        let total: f64 = firsts.unwrap().iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }
}
