//! Dense complex least squares through column-scaled normal equations.

use num_complex::Complex64;

use super::NumericError;
use crate::exec::Exec;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, NumericError> {
        let m = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(NumericError::InvalidArgument("ragged rows".into()));
        }
        Ok(ComplexMatrix { rows: m, cols: k, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A*·y`.
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * yi;
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn columns(&self) -> Vec<Vec<Complex64>> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).collect())
            .collect()
    }
}

/// Least-squares solution plus solver diagnostics.
#[derive(Clone, Debug)]
pub struct LstsqReport {
    pub solution: Vec<Complex64>,
    pub residual_norm: f64,
    /// Estimated 2-norm condition number of the scaled matrix.
    pub condition: f64,
    /// True when Cholesky failed and partial-pivot LU was used.
    pub used_lu: bool,
}

enum Factor {
    Cholesky(Vec<Vec<Complex64>>),
    Lu(Vec<Vec<Complex64>>, Vec<usize>),
}

fn cholesky(g: &[Vec<Complex64>]) -> Option<(Vec<Vec<Complex64>>, f64)> {
    let n = g.len();
    let mut l = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for j in 0..n {
        let mut d = g[j][j].re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if !(d > 1e-15 * g[j][j].re.max(f64::MIN_POSITIVE)) {
            return None;
        }
        let d = d.sqrt();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
        l[j][j] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / d;
        }
    }
    Some((l, dmax / dmin))
}

fn lu(g: &[Vec<Complex64>]) -> Result<(Vec<Vec<Complex64>>, Vec<usize>, f64), NumericError> {
    let n = g.len();
    let mut a = g.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = g.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let (mut pmin, mut pmax) = (f64::INFINITY, 0.0f64);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm()))
            .expect("nonempty");
        let piv = a[p][k].norm();
        pmin = pmin.min(piv);
        pmax = pmax.max(piv);
        if piv <= 1e-14 * scale || !piv.is_finite() {
            return Err(NumericError::Singular { condition: pmax / piv.max(f64::MIN_POSITIVE) });
        }
        a.swap(k, p);
        perm.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            a[i][k] = f;
            for j in k + 1..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    Ok((a, perm, (pmax / pmin).sqrt()))
}

impl Factor {
    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        match self {
            Factor::Cholesky(l) => {
                let mut y = rhs.to_vec();
                for i in 0..n {
                    for k in 0..i {
                        let t = l[i][k] * y[k];
                        y[i] -= t;
                    }
                    y[i] /= l[i][i];
                }
                for i in (0..n).rev() {
                    for k in i + 1..n {
                        let t = l[k][i].conj() * y[k];
                        y[i] -= t;
                    }
                    y[i] /= l[i][i];
                }
                y
            }
            Factor::Lu(a, perm) => {
                let mut y: Vec<Complex64> = perm.iter().map(|&p| rhs[p]).collect();
                for i in 0..n {
                    for k in 0..i {
                        let t = a[i][k] * y[k];
                        y[i] -= t;
                    }
                }
                for i in (0..n).rev() {
                    for k in i + 1..n {
                        let t = a[i][k] * y[k];
                        y[i] -= t;
                    }
                    y[i] /= a[i][i];
                }
                y
            }
        }
    }
}

/// Solves `min ‖Ax − b‖₂` for `M ≥ K`.
pub fn lstsq_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, NumericError> {
    Ok(lstsq_solve_report(a, b, Exec::Sequential)?.solution)
}

/// As [`lstsq_solve`], with diagnostics. Columns are scaled to unit norm,
/// the Hermitian Gram system is factored by Cholesky (LU with partial
/// pivoting if a pivot is non-positive), and one step of iterative
/// refinement is applied.
pub fn lstsq_solve_report(
    a: &ComplexMatrix,
    b: &[Complex64],
    exec: Exec,
) -> Result<LstsqReport, NumericError> {
    let (m, k) = (a.rows, a.cols);
    if k == 0 || m < k {
        return Err(NumericError::InvalidArgument(format!("need M ≥ K ≥ 1, got {m}×{k}")));
    }
    if b.len() != m {
        return Err(NumericError::InvalidArgument("right-hand side length".into()));
    }
    if a.data.iter().chain(b).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumericError::NonFinite);
    }
    let mut cols = a.columns();
    let mut scales = Vec::with_capacity(k);
    for (j, col) in cols.iter_mut().enumerate() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(NumericError::InvalidArgument(format!("column {j} is identically zero")));
        }
        for z in col.iter_mut() {
            *z /= norm;
        }
        scales.push(norm);
    }
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 {
        u.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
    };
    let upper: Vec<Vec<Complex64>> =
        exec.map_range(k, |i| (i..k).map(|j| dot(&cols[i], &cols[j])).collect());
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    for i in 0..k {
        for j in i..k {
            gram[i][j] = upper[i][j - i];
            gram[j][i] = upper[i][j - i].conj();
        }
    }
    let atb = |r: &[Complex64]| -> Vec<Complex64> { exec.map(&cols, |c| dot(c, r)) };
    let (factor, condition, used_lu) = match cholesky(&gram) {
        Some((l, cond)) => (Factor::Cholesky(l), cond * cond, false),
        None => {
            let (lu, perm, cond) = lu(&gram)?;
            (Factor::Lu(lu, perm), cond * cond, true)
        }
    };
    let mut y = factor.solve(&atb(b));
    let residual = |y: &[Complex64]| -> Vec<Complex64> {
        (0..m)
            .map(|i| b[i] - cols.iter().zip(y).map(|(c, yj)| c[i] * yj).sum::<Complex64>())
            .collect()
    };
    let r = residual(&y);
    let corr = factor.solve(&atb(&r));
    for (yi, ci) in y.iter_mut().zip(&corr) {
        *yi += ci;
    }
    let r = residual(&y);
    let residual_norm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let solution: Vec<Complex64> = y.iter().zip(&scales).map(|(v, s)| v / s).collect();
    if solution.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumericError::Singular { condition });
    }
    Ok(LstsqReport { solution, residual_norm, condition, used_lu })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let a = ComplexMatrix::identity(4);
        let b: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let x = lstsq_solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).norm() < 1e-15);
        }
    }

    #[test]
    fn rank_deficient_is_reported() {
        let a = ComplexMatrix::from_fn(6, 2, |i, _| Complex64::new(i as f64 + 1.0, 0.0));
        let b = vec![Complex64::new(1.0, 0.0); 6];
        assert!(matches!(lstsq_solve(&a, &b), Err(NumericError::Singular { .. })));
    }

    #[test]
    fn shape_errors() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(lstsq_solve(&a, &[Complex64::new(0.0, 0.0); 2]).is_err());
    }
}
