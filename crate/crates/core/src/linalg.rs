//! Small dense linear algebra for covariance work: pivoted Cholesky,
//! Gaussian projections and symmetric eigenvalues.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `M Mᵀ`.
    pub fn outer_gram(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> Mat<T> {
        let mut out = Mat::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + *x * *y)
}

/// `vᵀ Σ v`.
pub fn quad_form<T: Scalar>(cov: &Mat<T>, v: &[T]) -> T {
    dot(v, &cov.mul_vec(v))
}

/// Relative pivot threshold under which a variable counts as a linear
/// function of the ones already accepted.
pub fn pivot_tolerance<T: Scalar>() -> T {
    T::epsilon().sqrt() * T::lit(1e-3)
}

/// Cholesky factor of `cov` restricted to `order`, visiting variables in the
/// given order and dropping those whose residual variance is below
/// `pivot_tolerance · max(1, max diag)`.
#[derive(Clone, Debug)]
pub struct PivotedCholesky<T> {
    kept: Vec<usize>,
    dropped: Vec<usize>,
    /// Lower-triangular factor over `kept`, stored by rows.
    l: Vec<Vec<T>>,
}

impl<T: Scalar> PivotedCholesky<T> {
    pub fn new(cov: &Mat<T>, order: &[usize]) -> Self {
        let scale = order.iter().fold(T::one(), |m, &i| m.max(cov.get(i, i).abs()));
        let tol = pivot_tolerance::<T>() * scale;
        let mut kept: Vec<usize> = Vec::new();
        let mut dropped = Vec::new();
        let mut l: Vec<Vec<T>> = Vec::new();
        for &i in order {
            if kept.contains(&i) || dropped.contains(&i) {
                continue;
            }
            let mut row = Vec::with_capacity(kept.len() + 1);
            for (a, &j) in kept.iter().enumerate() {
                let s = cov.get(i, j) - dot(&row[..a], &l[a][..a]);
                row.push(s / l[a][a]);
            }
            let d = cov.get(i, i) - dot(&row, &row);
            if d <= tol {
                dropped.push(i);
                continue;
            }
            row.push(d.sqrt());
            kept.push(i);
            l.push(row);
        }
        PivotedCholesky { kept, dropped, l }
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    /// Solves `Σ_KK x = b` for `b` indexed like `kept`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.kept.len();
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            y[i] = (b[i] - dot(&self.l[i][..i], &y[..i])) / self.l[i][i];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.l[k][i] * x[k];
            }
            x[i] = s / self.l[i][i];
        }
        x
    }
}

/// Best affine predictor of `g·X + c` from the variables in `block`.
#[derive(Clone, Debug)]
pub struct Projection<T> {
    /// Coefficients over all variables; zero outside the accepted block.
    pub coef: Vec<T>,
    pub constant: T,
    /// `Var(g·X − coef·X)`.
    pub residual_var: T,
    pub kept: Vec<usize>,
}

/// Gaussian projection of the functional `g·X + c` onto `block`, visited in
/// order so that earlier variables win when the block is degenerate.
pub fn project<T: Scalar>(mean: &[T], cov: &Mat<T>, g: &[T], c: T, block: &[usize]) -> Projection<T> {
    let n = mean.len();
    let chol = PivotedCholesky::new(cov, block);
    let rhs: Vec<T> = chol.kept().iter().map(|&i| dot(cov.row(i), g)).collect();
    let beta = chol.solve(&rhs);
    let mut coef = vec![T::zero(); n];
    for (&i, &b) in chol.kept().iter().zip(&beta) {
        coef[i] = b;
    }
    let constant = c + dot(g, mean) - dot(&coef, mean);
    let diff: Vec<T> = g.iter().zip(&coef).map(|(a, b)| *a - *b).collect();
    let residual_var = quad_form(cov, &diff).max(T::zero());
    Projection { coef, constant, residual_var, kept: chol.kept().to_vec() }
}

/// `|E D| + sqrt(Var D)` for the linear functional `D = d·X + c`; zero iff
/// `D` vanishes almost surely.
pub fn functional_discrepancy<T: Scalar>(mean: &[T], cov: &Mat<T>, d: &[T], c: T) -> T {
    (c + dot(d, mean)).abs() + quad_form(cov, d).max(T::zero()).sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Scalar>(m: &Mat<T>) -> Vec<T> {
    let n = m.rows();
    let mut a = m.clone();
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |s, (i, j)| s + a.get(i, j) * a.get(i, j));
        let diag = (0..n).fold(T::zero(), |s, i| s + a.get(i, i) * a.get(i, i));
        if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, cs * akp - sn * akq);
                    a.set(k, q, sn * akp + cs * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, cs * apk - sn * aqk);
                    a.set(q, k, sn * apk + cs * aqk);
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Errors if the smallest eigenvalue is below `-tol`.
pub fn check_psd<T: Scalar>(m: &Mat<T>, tol: T) -> Result<()> {
    if let Some(&lo) = symmetric_eigenvalues(m).first() {
        if lo < -tol {
            return Err(Error::NotPsd(lo.as_f64()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_known_matrix() {
        let m = Mat::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let ev = symmetric_eigenvalues(&m);
        let s = 2f64.sqrt();
        let expected = [2.0 - s, 2.0, 2.0 + s];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_drops_duplicates() {
        // X0 ~ N(0,1), X1 = X0, X2 = X0 + independent N(0,1)
        let cov: Mat<f64> = Mat::from_rows(&[vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 2.0]]);
        let mean = [0.0, 0.0, 0.0];
        let p = project(&mean, &cov, &[0.0, 0.0, 1.0], 0.0, &[0, 1]);
        assert_eq!(p.kept, vec![0]);
        assert!((p.coef[0] - 1.0).abs() < 1e-14);
        assert_eq!(p.coef[1], 0.0);
        assert!((p.residual_var - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solve_matches_direct_inverse() {
        let cov: Mat<f64> = Mat::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]);
        let ch = PivotedCholesky::new(&cov, &[0, 1]);
        let x = ch.solve(&[2.0, 1.0]);
        // inverse = [[3,-2],[-2,4]]/8
        assert!((x[0] - 0.5).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
    }

    #[test]
    fn psd_check_rejects_indefinite() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(check_psd(&m, 1e-10).is_err());
        assert!(check_psd(&Mat::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]), 1e-10).is_ok());
    }
}
