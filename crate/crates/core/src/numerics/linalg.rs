//! Matrix products and the symmetric positive-definite solves behind ridge
//! regression.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// `c = alpha * op(a) * op(b) + beta * c` on raw row-major slices.
///
/// `a` is `m×k` (or `k×m` when `trans_a`), `b` is `k×n` (or `n×k` when
/// `trans_b`), `c` is `m×n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sgemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f32,
    a: &[f32],
    trans_a: bool,
    b: &[f32],
    trans_b: bool,
    beta: f32,
    c: &mut [f32],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn dgemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    c: &mut [f64],
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: as in `sgemm`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Standard matrix product of two rank-2 tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::dim("matmul expects rank-2 operands"));
    }
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (k2, n) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(Error::dim(format!(
            "matmul inner extents differ: {m}×{k} · {k2}×{n}"
        )));
    }
    let mut out = vec![0.0f32; m * n];
    sgemm(m, k, n, 1.0, a.data(), false, b.data(), false, 0.0, &mut out);
    Tensor::new(&[m, n], out)
}

/// Row-major `f64` matrix for the least-squares machinery.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat64 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat64 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dim(format!(
                "{rows}×{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.rank() != 2 {
            return Err(Error::dim("expected a rank-2 tensor"));
        }
        Ok(Self {
            rows: t.shape()[0],
            cols: t.shape()[1],
            data: t.data().iter().map(|&v| v as f64).collect(),
        })
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(
            &[self.rows, self.cols],
            self.data.iter().map(|&v| v as f32).collect(),
        )
        .expect("matrix extents are positive")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self · other`
    pub fn mul(&self, other: &Mat64) -> Result<Mat64> {
        self.product(false, other, false)
    }

    /// `selfᵀ · other`
    pub fn tmul(&self, other: &Mat64) -> Result<Mat64> {
        self.product(true, other, false)
    }

    /// `self · otherᵀ`
    pub fn mul_t(&self, other: &Mat64) -> Result<Mat64> {
        self.product(false, other, true)
    }

    fn product(&self, ta: bool, other: &Mat64, tb: bool) -> Result<Mat64> {
        let (m, k) = if ta {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        let (k2, n) = if tb {
            (other.cols, other.rows)
        } else {
            (other.rows, other.cols)
        };
        if k != k2 {
            return Err(Error::dim(format!(
                "product inner extents differ: {m}×{k} · {k2}×{n}"
            )));
        }
        let mut out = Mat64::zeros(m, n);
        if m * n > 0 && k > 0 {
            dgemm(m, k, n, &self.data, ta, &other.data, tb, &mut out.data);
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Mat64, scale: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn transpose(&self) -> Mat64 {
        let mut out = Mat64::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    /// Replaces the matrix by `(self + selfᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        for r in 0..n {
            for c in r + 1..n {
                let v = 0.5 * (self.data[r * n + c] + self.data[c * n + r]);
                self.data[r * n + c] = v;
                self.data[c * n + r] = v;
            }
        }
    }
}

/// Lower Cholesky factor `L` with `A = L Lᵀ` of a symmetric positive-definite
/// matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Mat64) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::dim("Cholesky needs a square matrix"));
        }
        if !a.is_finite() {
            return Err(Error::Numeric("matrix contains NaN or infinity".into()));
        }
        let n = a.rows;
        let mut l = a.data.clone();
        for j in 0..n {
            let row_j: Vec<f64> = l[j * n..j * n + j].to_vec();
            let d = l[j * n + j] - row_j.iter().map(|v| v * v).sum::<f64>();
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Numeric(format!(
                    "matrix is not positive definite (pivot {j} = {d:e})"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let row_i = &mut l[i * n..i * n + j + 1];
                let dot: f64 = row_i[..j].iter().zip(&row_j).map(|(a, b)| a * b).sum();
                row_i[j] = (row_i[j] - dot) / d;
            }
        }
        // Clear the strict upper triangle so `lower` is exactly L.
        for r in 0..n {
            for c in r + 1..n {
                l[r * n + c] = 0.0;
            }
        }
        Ok(Self { n, lower: l })
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &Mat64) -> Result<Mat64> {
        let n = self.n;
        if b.rows != n {
            return Err(Error::dim(format!(
                "right-hand side has {} rows, system has {n}",
                b.rows
            )));
        }
        let m = b.cols;
        let mut x = b.data.clone();
        let l = &self.lower;
        // Forward: L Y = B
        for i in 0..n {
            let (head, tail) = x.split_at_mut(i * m);
            let row = &mut tail[..m];
            for k in 0..i {
                let lik = l[i * n + k];
                if lik != 0.0 {
                    let src = &head[k * m..k * m + m];
                    for (r, s) in row.iter_mut().zip(src) {
                        *r -= lik * s;
                    }
                }
            }
            let d = l[i * n + i];
            for r in row.iter_mut() {
                *r /= d;
            }
        }
        // Backward: Lᵀ X = Y
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * m);
            let row = &mut head[i * m..];
            for k in i + 1..n {
                let lki = l[k * n + i];
                if lki != 0.0 {
                    let src = &tail[(k - i - 1) * m..(k - i) * m];
                    for (r, s) in row.iter_mut().zip(src) {
                        *r -= lki * s;
                    }
                }
            }
            let d = l[i * n + i];
            for r in row.iter_mut() {
                *r /= d;
            }
        }
        Mat64::from_vec(n, m, x)
    }

    pub fn inverse(&self) -> Result<Mat64> {
        let mut inv = self.solve(&Mat64::identity(self.n))?;
        inv.symmetrize();
        Ok(inv)
    }
}

/// Ridge least squares in f64: `argmin ‖Hβ − T‖² + (1/c)‖β‖²`.
pub fn ridge_solve64(h: &Mat64, t: &Mat64, c_reg: f64) -> Result<Mat64> {
    if !(c_reg > 0.0) || !c_reg.is_finite() {
        return Err(Error::param(format!("c_reg must be positive, got {c_reg}")));
    }
    if h.rows() != t.rows() {
        return Err(Error::dim(format!(
            "H has {} rows, T has {}",
            h.rows(),
            t.rows()
        )));
    }
    if h.rows() == 0 || h.cols() == 0 {
        return Err(Error::dim("ridge_solve needs n ≥ 1 and d ≥ 1"));
    }
    if !h.is_finite() || !t.is_finite() {
        return Err(Error::Numeric("ridge input contains NaN or infinity".into()));
    }
    let mut gram = h.tmul(h)?;
    gram.add_diagonal(1.0 / c_reg);
    let rhs = h.tmul(t)?;
    Cholesky::factor(&gram)?.solve(&rhs)
}

/// Ridge least squares on tensors; solves `(HᵀH + I/c) β = HᵀT` through a
/// Cholesky factorization of the Gram matrix.
pub fn ridge_solve(h: &Tensor, t: &Tensor, c_reg: f64) -> Result<Tensor> {
    if h.rank() != 2 || t.rank() != 2 {
        return Err(Error::dim("ridge_solve expects rank-2 operands"));
    }
    h.ensure_finite("H")?;
    t.ensure_finite("T")?;
    let beta = ridge_solve64(&Mat64::from_tensor(h)?, &Mat64::from_tensor(t)?, c_reg)?;
    Ok(beta.to_tensor())
}
