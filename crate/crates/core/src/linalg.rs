//! Minimal sparse and banded linear algebra used by the solvers.
//!
//! The shifted systems produced by the time diagonalization are complex
//! symmetric (not Hermitian) and banded, so everything here is built on a
//! complex banded LU with partial pivoting in LAPACK `gbtrf` layout.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with a fixed symmetric pattern.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl Csr {
    /// Build from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    data.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n, indptr, indices, data }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn matvec_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&j, &v) in cols.iter().zip(vals) {
                acc += x[j] * v;
            }
            y[i] = acc;
        }
    }

    /// Half bandwidth: max |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut b = 0;
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            for &j in cols {
                b = b.max(i.abs_diff(j));
            }
        }
        b
    }

    /// A * diag(w), used for frozen-Jacobian shifts.
    pub fn scaled_columns(&self, w: &[f64]) -> Csr {
        debug_assert_eq!(w.len(), self.n);
        let mut out = self.clone();
        for i in 0..self.n {
            let (a, b) = (out.indptr[i], out.indptr[i + 1]);
            for p in a..b {
                out.data[p] *= w[out.indices[p]];
            }
        }
        out
    }

    /// x' A x, used for the mass-matrix norm.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row += v * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }
}

/// Banded complex matrix in `gbtrf` storage: row band offsets in
/// `[-kl, kl + ku]` relative to the diagonal, with `kl` extra superdiagonals
/// reserved for pivoting fill.
pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ldab: usize,
    /// Column-major: entry (i, j) lives at `data[j * ldab + kl + ku + i - j]`.
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, data: vec![Complex64::new(0.0, 0.0); ldab * n] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(j.abs_diff(i) <= self.ku.max(self.kl));
        let p = self.idx(i, j);
        self.data[p] += v;
    }

    /// Assemble `sum_k coeff_k * A_k` for CSR matrices sharing dimension `n`.
    pub fn from_weighted_csr(terms: &[(&Csr, Complex64)]) -> Self {
        let n = terms[0].0.n;
        let band = terms.iter().map(|(a, _)| a.bandwidth()).max().unwrap_or(0);
        let mut m = BandMatrix::zeros(n, band, band);
        for (a, c) in terms {
            for i in 0..n {
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    m.add(i, j, c * v);
                }
            }
        }
        m
    }

    /// In-place LU factorization with partial pivoting.
    pub fn factorize(mut self) -> Result<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku; // effective upper bandwidth after pivoting
        let mut pivots = vec![0usize; n];
        for j in 0..n {
            // pivot search in column j, rows j..=j+kl
            let imax = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].norm_sqr();
            for i in (j + 1)..=imax {
                let v = self.data[self.idx(i, j)].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(format!("zero pivot at column {j}")));
            }
            pivots[j] = p;
            let jmax = (j + kv).min(n - 1);
            if p != j {
                for jj in j..=jmax {
                    let a = self.idx(j, jj);
                    let b = self.idx(p, jj);
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.idx(j, j)];
            for i in (j + 1)..=imax {
                let l = self.data[self.idx(i, j)] / diag;
                let lp = self.idx(i, j);
                self.data[lp] = l;
                for jj in (j + 1)..=jmax {
                    let u = self.data[self.idx(j, jj)];
                    let t = self.idx(i, jj);
                    self.data[t] -= l * u;
                }
            }
        }
        Ok(BandLu { n, kl, ku, kv, ldab: self.ldab, data: self.data, pivots })
    }
}

/// Factorized banded matrix; `solve` may be called repeatedly.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Upper bandwidth of U after pivoting fill: kl + ku.
    kv: usize,
    ldab: usize,
    data: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.ldab + self.kl + self.ku + i - j]
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        debug_assert_eq!(b.len(), self.n);
        let n = self.n;
        // forward: apply pivots and L
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let imax = (j + self.kl).min(n - 1);
            let bj = b[j];
            for i in (j + 1)..=imax {
                b[i] -= self.at(i, j) * bj;
            }
        }
        // back substitution with U (bandwidth kv after fill)
        for j in (0..n).rev() {
            let x = b[j] / self.at(j, j);
            b[j] = x;
            let imin = j.saturating_sub(self.kv);
            for i in imin..j {
                b[i] -= self.at(i, j) * x;
            }
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve with a real right-hand side, returning the real part.
    pub fn solve_real(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.solve_in_place(&mut x);
        x.iter().map(|c| c.re).collect()
    }
}

/// Factor `coeff_m * M + coeff_k * K` (shared symmetric band pattern).
pub fn factor_shifted(
    mass: &Csr,
    stiffness: &Csr,
    coeff_m: Complex64,
    coeff_k: Complex64,
) -> Result<BandLu> {
    BandMatrix::from_weighted_csr(&[(mass, coeff_m), (stiffness, coeff_k)]).factorize()
}

/// Mass-matrix (discrete L2) norm of a coefficient vector.
pub fn mass_norm(mass: &Csr, x: &[f64]) -> f64 {
    mass.quadratic_form(x).max(0.0).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Vec<Complex64> {
        // naive Gaussian elimination with partial pivoting, test oracle only
        let n = b.len();
        let mut m: Vec<Vec<Complex64>> = a.to_vec();
        let mut x = b.to_vec();
        for j in 0..n {
            let p = (j..n).max_by(|&r, &s| m[r][j].norm().total_cmp(&m[s][j].norm())).unwrap();
            m.swap(j, p);
            x.swap(j, p);
            for i in (j + 1)..n {
                let l = m[i][j] / m[j][j];
                for jj in j..n {
                    let u = m[j][jj];
                    m[i][jj] -= l * u;
                }
                let t = x[j];
                x[i] -= l * t;
            }
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for jj in (j + 1)..n {
                acc -= m[j][jj] * x[jj];
            }
            x[j] = acc / m[j][j];
        }
        x
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn banded_lu_matches_dense() {
        let n = 24;
        let (kl, ku) = (3, 2);
        let mut seed = 7u64;
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v = Complex64::new(lcg(&mut seed), lcg(&mut seed));
                band.add(i, j, v);
                dense[i][j] = v;
            }
        }
        let b: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(lcg(&mut seed), lcg(&mut seed))).collect();
        let lu = band.factorize().unwrap();
        let x = lu.solve(&b);
        let y = dense_solve(&dense, &b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-10, "{u} vs {v}");
        }
    }

    #[test]
    fn csr_duplicate_triplets_are_summed() {
        let a = Csr::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0), (0, 1, -1.0)]);
        assert_eq!(a.row(0), (&[0usize, 1][..], &[3.0, -1.0][..]));
        let y = a.matvec_alloc(&[1.0, 1.0]);
        assert_eq!(y, vec![2.0, 4.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let band = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(band.factorize(), Err(Error::Singular(_))));
    }
}
