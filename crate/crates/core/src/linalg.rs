//! Complex banded LU factorization with partial pivoting.
//!
//! Compact band storage: row `i` of the matrix holds its diagonals
//! `i - m1 .. i + m2` contiguously, so factorization and back substitution
//! cost O(n (m1 + m2)^2) and O(n (m1 + m2)) respectively.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Square banded matrix with `m1` sub- and `m2` superdiagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    /// Row-major `n x (m1 + m2 + 1)`; `a[i][m1 + j - i]` holds `A[i][j]`.
    a: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, m1: usize, m2: usize) -> Self {
        Self { n, m1, m2, a: vec![Complex64::default(); n * (m1 + m2 + 1)] }
    }

    fn width(&self) -> usize {
        self.m1 + self.m2 + 1
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let d = j as i64 - i as i64;
        if d < -(self.m1 as i64) || d > self.m2 as i64 || j >= self.n {
            return None;
        }
        Some(i * self.width() + (d + self.m1 as i64) as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.offset(i, j).map(|o| self.a[o]).unwrap_or_default()
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band m1={}, m2={}", self.m1, self.m2));
        self.a[o] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band m1={}, m2={}", self.m1, self.m2));
        self.a[o] += v;
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![Complex64::default(); self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.m1);
            let j1 = (i + self.m2 + 1).min(self.n);
            let mut acc = Complex64::default();
            for j in j0..j1 {
                acc += self.a[i * self.width() + (j + self.m1 - i)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// LU factorization with partial pivoting (compact-band elimination).
    pub fn factor(&self) -> Result<BandedLu> {
        let n = self.n;
        let m1 = self.m1;
        let m2 = self.m2;
        let mm = m1 + m2 + 1;
        let mut a = self.a.clone();
        let mut al = vec![Complex64::default(); n * m1];
        let mut indx = vec![0usize; n];

        let scale = self
            .a
            .iter()
            .fold(0.0f64, |m, v| m.max(v.norm()))
            .max(f64::MIN_POSITIVE);

        // Left-shift the first m1 rows so column 0 is the working diagonal.
        let mut l = m1;
        for i in 0..m1 {
            for j in (m1 - i)..mm {
                a[i * mm + j - l] = a[i * mm + j];
            }
            l -= 1;
            for j in (mm - l - 1)..mm {
                a[i * mm + j] = Complex64::default();
            }
        }

        l = m1;
        for k in 0..n {
            if l < n {
                l += 1;
            }
            // Partial pivot within the reachable rows.
            let mut piv = a[k * mm].norm();
            let mut ip = k;
            for i in (k + 1)..l {
                let v = a[i * mm].norm();
                if v > piv {
                    piv = v;
                    ip = i;
                }
            }
            indx[k] = ip;
            if piv <= 1e-14 * scale {
                return Err(CoreError::Parameter(format!(
                    "banded matrix is numerically singular at elimination step {k}"
                )));
            }
            if ip != k {
                for j in 0..mm {
                    a.swap(k * mm + j, ip * mm + j);
                }
            }
            for i in (k + 1)..l {
                let mult = a[i * mm] / a[k * mm];
                al[k * m1 + (i - k - 1)] = mult;
                for j in 1..mm {
                    a[i * mm + j - 1] = a[i * mm + j] - mult * a[k * mm + j];
                }
                a[i * mm + mm - 1] = Complex64::default();
            }
        }

        Ok(BandedLu { n, m1, m2, a, al, indx })
    }
}

/// Factorized banded system, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    m1: usize,
    m2: usize,
    a: Vec<Complex64>,
    al: Vec<Complex64>,
    indx: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let m1 = self.m1;
        let mm = m1 + self.m2 + 1;

        let mut l = m1;
        for k in 0..n {
            let ip = self.indx[k];
            if ip != k {
                b.swap(k, ip);
            }
            if l < n {
                l += 1;
            }
            for i in (k + 1)..l {
                let mult = self.al[k * m1 + (i - k - 1)];
                b[i] = b[i] - mult * b[k];
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in 1..l {
                acc -= self.a[i * mm + k] * b[i + k];
            }
            b[i] = acc / self.a[i * mm];
            if l < mm {
                l += 1;
            }
        }
    }
}
