//! Dense LU factorization of the basis with sparse triangular factors.

use crate::LpError;

pub(crate) struct BasisLu {
    m: usize,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
    l_cols: Vec<Vec<(usize, f64)>>,
    l_rows: Vec<Vec<(usize, f64)>>,
    u_cols: Vec<Vec<(usize, f64)>>,
    u_rows: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
}

impl BasisLu {
    /// Factors the `m × m` matrix whose `k`-th column has the given sparse entries.
    pub(crate) fn factor(
        m: usize,
        columns: &[Vec<(usize, f64)>],
        singular_tol: f64,
    ) -> Result<Self, LpError> {
        let mut a = vec![0.0; m * m];
        for (k, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                a[i * m + k] += v;
            }
        }
        let mut perm: Vec<usize> = (0..m).collect();
        let mut nz_row: Vec<usize> = Vec::with_capacity(m);
        for k in 0..m {
            let mut p = k;
            let mut best = a[k * m + k].abs();
            for i in k + 1..m {
                let v = a[i * m + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= singular_tol {
                return Err(LpError::Numerical(format!(
                    "singular basis at column {k} (pivot {best:e})"
                )));
            }
            if p != k {
                for j in 0..m {
                    a.swap(k * m + j, p * m + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * m + k];
            nz_row.clear();
            nz_row.extend((k + 1..m).filter(|&j| a[k * m + j] != 0.0));
            for i in k + 1..m {
                let aik = a[i * m + k];
                if aik == 0.0 {
                    continue;
                }
                let l = aik / pivot;
                a[i * m + k] = l;
                for &j in &nz_row {
                    a[i * m + j] -= l * a[k * m + j];
                }
            }
        }
        let mut l_cols = vec![Vec::new(); m];
        let mut l_rows = vec![Vec::new(); m];
        let mut u_cols = vec![Vec::new(); m];
        let mut u_rows = vec![Vec::new(); m];
        let mut u_diag = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                let v = a[i * m + j];
                if v == 0.0 {
                    continue;
                }
                match i.cmp(&j) {
                    std::cmp::Ordering::Greater => {
                        l_cols[j].push((i, v));
                        l_rows[i].push((j, v));
                    }
                    std::cmp::Ordering::Less => {
                        u_cols[j].push((i, v));
                        u_rows[i].push((j, v));
                    }
                    std::cmp::Ordering::Equal => u_diag[i] = v,
                }
            }
        }
        Ok(Self {
            m,
            perm,
            l_cols,
            l_rows,
            u_cols,
            u_rows,
            u_diag,
        })
    }

    /// Solves `B x = b` in place.
    pub(crate) fn ftran(&self, b: &mut [f64]) {
        let m = self.m;
        let mut y: Vec<f64> = (0..m).map(|i| b[self.perm[i]]).collect();
        for k in 0..m {
            let yk = y[k];
            if yk != 0.0 {
                for &(i, l) in &self.l_cols[k] {
                    y[i] -= l * yk;
                }
            }
        }
        for k in (0..m).rev() {
            if y[k] != 0.0 {
                y[k] /= self.u_diag[k];
                let xk = y[k];
                for &(i, u) in &self.u_cols[k] {
                    y[i] -= u * xk;
                }
            }
        }
        b.copy_from_slice(&y);
    }

    /// Solves `Bᵀ y = c` in place.
    pub(crate) fn btran(&self, c: &mut [f64]) {
        let m = self.m;
        let mut w = c.to_vec();
        for k in 0..m {
            if w[k] != 0.0 {
                w[k] /= self.u_diag[k];
                let wk = w[k];
                for &(j, u) in &self.u_rows[k] {
                    w[j] -= u * wk;
                }
            }
        }
        for k in (0..m).rev() {
            let vk = w[k];
            if vk != 0.0 {
                for &(j, l) in &self.l_rows[k] {
                    w[j] -= l * vk;
                }
            }
        }
        for i in 0..m {
            c[self.perm[i]] = w[i];
        }
    }
}
