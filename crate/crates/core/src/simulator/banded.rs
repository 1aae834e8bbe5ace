//! Banded LU with partial pivoting, and a bordered solve for a banded
//! block with a few dense trailing rows and columns.

/// Row-major band storage: row `i` holds columns `i−kl ..= i+ku+kl`
/// (the extra `kl` columns receive fill-in from row swaps).
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Banded { n, kl, ku, width, data: vec![0.0; n * width], pivots: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Whether `(i, j)` lies in the original band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// In-place factorization `PA = LU`.
    pub fn factor(&mut self) -> Result<(), SingularPivot> {
        let n = self.n;
        let reach = self.ku + self.kl;
        self.pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(SingularPivot { row: k });
            }
            self.pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let v = self.get(i, j) - l * self.get(k, j);
                        self.set(i, j, v);
                    }
                }
            }
        }
        Ok(())
    }

    /// Solves `Ax = b` in place after [`Banded::factor`].
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.get(i, k) * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + self.ku + self.kl).min(n - 1) {
                acc -= self.get(k, j) * b[j];
            }
            b[k] = acc / self.get(k, k);
        }
    }
}

/// `[[A, B], [C, D]]` with `A` banded and `m` border rows/columns.
#[derive(Debug, Clone)]
pub struct Bordered {
    pub a: Banded,
    /// Column-major `n × m`.
    pub b: Vec<Vec<f64>>,
    /// Row-major `m × n`.
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    ainv_b: Vec<Vec<f64>>,
    schur_lu: Vec<Vec<f64>>,
    schur_piv: Vec<usize>,
}

impl Bordered {
    pub fn zeros(n: usize, m: usize, kl: usize, ku: usize) -> Self {
        Bordered {
            a: Banded::zeros(n, kl, ku),
            b: vec![vec![0.0; n]; m],
            c: vec![vec![0.0; n]; m],
            d: vec![vec![0.0; m]; m],
            ainv_b: Vec::new(),
            schur_lu: Vec::new(),
            schur_piv: Vec::new(),
        }
    }

    pub fn factor(&mut self) -> Result<(), SingularPivot> {
        self.a.factor()?;
        let m = self.d.len();
        let n = self.a.len();
        self.ainv_b = self.b.clone();
        for col in self.ainv_b.iter_mut() {
            self.a.solve(col);
        }
        // Schur complement S = D − C A⁻¹ B, dense LU with partial pivoting.
        let mut s = self.d.clone();
        for (i, row) in s.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= (0..n).map(|k| self.c[i][k] * self.ainv_b[j][k]).sum::<f64>();
            }
        }
        let mut piv = vec![0; m];
        for k in 0..m {
            let p = (k..m).max_by(|&x, &y| s[x][k].abs().total_cmp(&s[y][k].abs())).unwrap();
            if !(s[p][k].abs() > 0.0) {
                return Err(SingularPivot { row: n + k });
            }
            s.swap(k, p);
            piv[k] = p;
            for i in k + 1..m {
                let l = s[i][k] / s[k][k];
                s[i][k] = l;
                for j in k + 1..m {
                    s[i][j] -= l * s[k][j];
                }
            }
        }
        self.schur_lu = s;
        self.schur_piv = piv;
        Ok(())
    }

    /// Solves for `(x, z)` given right-hand side `(f, g)` stacked in `rhs`.
    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.a.len();
        let m = self.d.len();
        let (f, g) = rhs.split_at_mut(n);
        self.a.solve(f);
        // z = S⁻¹ (g − C A⁻¹ f)
        let mut z: Vec<f64> = (0..m).map(|i| g[i] - (0..n).map(|k| self.c[i][k] * f[k]).sum::<f64>()).collect();
        for k in 0..m {
            z.swap(k, self.schur_piv[k]);
            for i in k + 1..m {
                z[i] -= self.schur_lu[i][k] * z[k];
            }
        }
        for k in (0..m).rev() {
            let mut acc = z[k];
            for j in k + 1..m {
                acc -= self.schur_lu[k][j] * z[j];
            }
            z[k] = acc / self.schur_lu[k][k];
        }
        for (k, fk) in f.iter_mut().enumerate() {
            *fk -= (0..m).map(|j| self.ainv_b[j][k] * z[j]).sum::<f64>();
        }
        g.copy_from_slice(&z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn banded_solve_matches_dense_product() {
        let mut rng = StdRng::seed_from_u64(7);
        let (n, kl, ku) = (40, 2, 2);
        let mut band = Banded::zeros(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // Small diagonal forces pivoting.
                let v = if i == j { 1e-3 * rng.gen_range(-1.0..1.0) } else { rng.gen_range(-1.0..1.0) };
                band.set(i, j, v);
                dense[i][j] = v;
            }
        }
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = dense_mul(&dense, &x);
        band.factor().unwrap();
        band.solve(&mut b);
        let err = b.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn bordered_solve_matches_dense_product() {
        let mut rng = StdRng::seed_from_u64(11);
        let (n, m) = (30, 2);
        let mut sys = Bordered::zeros(n, m, 2, 2);
        let mut dense = vec![vec![0.0; n + m]; n + m];
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                let v = rng.gen_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 };
                sys.a.set(i, j, v);
                dense[i][j] = v;
            }
            for k in 0..m {
                let v = rng.gen_range(-1.0..1.0);
                sys.b[k][i] = v;
                dense[i][n + k] = v;
                let w = if i + 3 > n { rng.gen_range(-1.0..1.0) } else { 0.0 };
                sys.c[k][i] = w;
                dense[n + k][i] = w;
            }
        }
        for i in 0..m {
            for j in 0..m {
                let v = rng.gen_range(-1.0..1.0) + if i == j { 3.0 } else { 0.0 };
                sys.d[i][j] = v;
                dense[n + i][n + j] = v;
            }
        }
        let x: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = dense_mul(&dense, &x);
        sys.factor().unwrap();
        sys.solve(&mut b);
        let err = b.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn singular_band_is_reported() {
        let mut band = Banded::zeros(4, 1, 1);
        band.set(0, 0, 1.0);
        band.set(1, 1, 1.0);
        assert!(band.factor().is_err());
    }
}
