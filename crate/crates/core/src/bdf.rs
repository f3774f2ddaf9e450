//! BDFk weights and the starting-correction tables.
//!
//! The k-step BDF generating polynomial is
//! `delta_k(z) = sum_{l=1}^{k} (1 - z)^l / l`; its coefficients are the
//! stepping weights `omega_0..omega_k`. Starting corrections restore order-k
//! accuracy for incompatible data and are tabulated as exact rationals.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 6;

/// Stability angles theta_k (degrees) of the BDFk methods, k = 1..6.
pub const STABILITY_ANGLES_DEG: [f64; 6] = [90.0, 90.0, 86.03, 73.35, 51.84, 17.84];

/// BDFk stepping weights plus the starting-correction coefficients.
#[derive(Debug, Clone)]
pub struct BdfTableau {
    pub k: usize,
    /// omega_0..omega_k, coefficients of delta_k.
    pub omega: Vec<f64>,
    /// a_n^{(k)} for n = 1..k-1 (empty for k = 1).
    pub a_corr: Vec<f64>,
    /// b_{l,n}^{(k)} for l = 1..k-2, n = 1..k-1, row l-1 holds the n-row.
    pub b_corr: Vec<Vec<f64>>,
}

fn check_order(k: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidOrder(k))
    }
}

/// Exact rational BDFk weights via the binomial sum
/// `omega_j = sum_{l=max(1,j)}^{k} (-1)^j C(l, j) / l`.
pub fn bdf_weights_exact(k: usize) -> Result<Vec<Ratio<i64>>> {
    check_order(k)?;
    let binom = |n: i64, r: i64| -> i64 {
        let mut v = 1i64;
        for t in 0..r {
            v = v * (n - t) / (t + 1);
        }
        v
    };
    let sign = |j: usize| if j % 2 == 0 { 1i64 } else { -1i64 };
    let mut w = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let mut acc = Ratio::new(0, 1);
        for l in j.max(1)..=k {
            acc += Ratio::new(sign(j) * binom(l as i64, j as i64), l as i64);
        }
        w.push(acc);
    }
    Ok(w)
}

/// BDFk weights omega_0..omega_k as floats.
pub fn bdf_weights(k: usize) -> Result<Vec<f64>> {
    Ok(bdf_weights_exact(k)?
        .iter()
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .collect())
}

/// Evaluate `delta_k(zeta) = sum_{l=1}^{k} (1 - zeta)^l / l` directly.
pub fn delta_eval(k: usize, zeta: Complex64) -> Result<Complex64> {
    check_order(k)?;
    let one_minus = Complex64::new(1.0, 0.0) - zeta;
    let mut pow = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 1..=k {
        pow *= one_minus;
        acc += pow / l as f64;
    }
    Ok(acc)
}

/// Table of a_n^{(k)} and b_{l,n}^{(k)} as exact rational pairs.
/// Rows are (k, a-row, b-rows); zero entries for n >= k are implicit.
type Rat = (i64, i64);
const A_TABLE: [&[Rat]; 5] = [
    /* k=2 */ &[(1, 2)],
    /* k=3 */ &[(11, 12), (-5, 12)],
    /* k=4 */ &[(31, 24), (-7, 6), (3, 8)],
    /* k=5 */ &[(1181, 720), (-177, 80), (341, 240), (-251, 720)],
    /* k=6 */ &[(2837, 1440), (-2543, 720), (17, 5), (-1201, 720), (95, 288)],
];
const B_TABLE: [&[&[Rat]]; 5] = [
    /* k=2 */ &[],
    /* k=3 */ &[&[(1, 12), (0, 1)]],
    /* k=4 */ &[&[(1, 6), (-1, 12), (0, 1)], &[(0, 1), (0, 1), (0, 1)]],
    /* k=5 */
    &[
        &[(59, 240), (-29, 120), (19, 240), (0, 1)],
        &[(1, 240), (-1, 240), (0, 1), (0, 1)],
        &[(1, 720), (0, 1), (0, 1), (0, 1)],
    ],
    /* k=6 */
    &[
        &[(77, 240), (-7, 15), (73, 240), (-3, 40), (0, 1)],
        &[(1, 96), (-1, 60), (1, 160), (0, 1), (0, 1)],
        &[(-1, 360), (1, 720), (0, 1), (0, 1), (0, 1)],
        &[(0, 1), (0, 1), (0, 1), (0, 1), (0, 1)],
    ],
];

/// The starting-correction coefficients for order k.
///
/// Returns `(a, b)` with `a[n-1] = a_n^{(k)}` for n = 1..k-1 and
/// `b[l-1][n-1] = b_{l,n}^{(k)}` for l = 1..k-2. k = 1 has empty tables.
pub fn correction_table(k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    check_order(k)?;
    if k == 1 {
        return Ok((Vec::new(), Vec::new()));
    }
    let to_f = |&(p, q): &Rat| p as f64 / q as f64;
    let a = A_TABLE[k - 2].iter().map(to_f).collect();
    let b = B_TABLE[k - 2].iter().map(|row| row.iter().map(to_f).collect()).collect();
    Ok((a, b))
}

impl BdfTableau {
    pub fn new(k: usize) -> Result<Self> {
        let omega = bdf_weights(k)?;
        let (a_corr, b_corr) = correction_table(k)?;
        Ok(BdfTableau { k, omega, a_corr, b_corr })
    }

    /// a_n^{(k)}, zero for n >= k.
    pub fn a(&self, n: usize) -> f64 {
        if n >= 1 && n < self.k {
            self.a_corr[n - 1]
        } else {
            0.0
        }
    }

    /// b_{l,n}^{(k)}, zero for n >= k or l > k-2.
    pub fn b(&self, l: usize, n: usize) -> f64 {
        if l >= 1 && l + 1 < self.k && n >= 1 && n < self.k {
            self.b_corr[l - 1][n - 1]
        } else {
            0.0
        }
    }

    /// Partial sum `sum_{j=0}^{n-1} omega_j` (zero for n = 0, and for
    /// n > k it equals zero again since the weights sum to zero).
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.omega.iter().take(n).sum()
    }

    /// delta_k(-1), used by the roundoff bound.
    pub fn delta_at_minus_one(&self) -> f64 {
        delta_eval(self.k, Complex64::new(-1.0, 0.0)).unwrap().re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: expand `sum_l (1-z)^l / l` by repeated rational
    /// polynomial multiplication.
    fn weights_by_convolution(k: usize) -> Vec<Ratio<i64>> {
        let one_minus = vec![Ratio::new(1i64, 1), Ratio::new(-1, 1)]; // 1 - z
        let mut pow = vec![Ratio::new(1i64, 1)];
        let mut acc = vec![Ratio::new(0i64, 1); k + 1];
        for l in 1..=k {
            let mut next = vec![Ratio::new(0i64, 1); pow.len() + 1];
            for (i, &p) in pow.iter().enumerate() {
                for (j, &q) in one_minus.iter().enumerate() {
                    next[i + j] += p * q;
                }
            }
            pow = next;
            for (i, &p) in pow.iter().enumerate() {
                acc[i] += p / Ratio::new(l as i64, 1);
            }
        }
        acc
    }

    #[test]
    fn weights_match_convolution_oracle_exactly() {
        for k in 1..=6 {
            assert_eq!(bdf_weights_exact(k).unwrap(), weights_by_convolution(k), "k={k}");
        }
    }

    #[test]
    fn low_order_weights() {
        assert_eq!(bdf_weights(1).unwrap(), vec![1.0, -1.0]);
        assert_eq!(bdf_weights(2).unwrap(), vec![1.5, -2.0, 0.5]);
        let w3 = bdf_weights(3).unwrap();
        let expect = [11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0];
        for (a, b) in w3.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_sums_and_leading_coefficient() {
        for k in 1..=6 {
            let w = bdf_weights_exact(k).unwrap();
            let sum: Ratio<i64> = w.iter().sum();
            assert_eq!(sum, Ratio::new(0, 1), "delta_k(1) must vanish, k={k}");
            let harmonic: Ratio<i64> = (1..=k as i64).map(|l| Ratio::new(1, l)).sum();
            assert_eq!(w[0], harmonic, "omega_0 = H_k, k={k}");
        }
    }

    #[test]
    fn delta_eval_fixed_points() {
        for k in 1..=6 {
            assert!(delta_eval(k, Complex64::new(1.0, 0.0)).unwrap().norm() < 1e-15);
        }
        assert!((delta_eval(1, Complex64::new(-1.0, 0.0)).unwrap().re - 2.0).abs() < 1e-15);
        assert!((delta_eval(2, Complex64::new(-1.0, 0.0)).unwrap().re - 4.0).abs() < 1e-15);
    }

    #[test]
    fn correction_table_spot_values() {
        let (a2, b2) = correction_table(2).unwrap();
        assert_eq!(a2, vec![0.5]);
        assert!(b2.is_empty());

        let (a3, b3) = correction_table(3).unwrap();
        assert_eq!(a3, vec![11.0 / 12.0, -5.0 / 12.0]);
        assert_eq!(b3[0][0], 1.0 / 12.0);

        let (a4, b4) = correction_table(4).unwrap();
        assert_eq!(a4, vec![31.0 / 24.0, -7.0 / 6.0, 3.0 / 8.0]);
        assert_eq!(b4[0], vec![1.0 / 6.0, -1.0 / 12.0, 0.0]);

        let (a6, b6) = correction_table(6).unwrap();
        assert_eq!(a6[4], 95.0 / 288.0);
        assert!(b6[3].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_orders_rejected() {
        assert!(matches!(bdf_weights(0), Err(Error::InvalidOrder(0))));
        assert!(matches!(bdf_weights(7), Err(Error::InvalidOrder(7))));
        assert!(matches!(correction_table(7), Err(Error::InvalidOrder(7))));
    }

    #[test]
    fn zero_corrections_beyond_range() {
        for k in 2..=6 {
            let t = BdfTableau::new(k).unwrap();
            assert_eq!(t.a(k), 0.0);
            assert_eq!(t.a(k + 3), 0.0);
            assert_eq!(t.b(1, k), 0.0);
            assert_eq!(t.b(k, 1), 0.0);
        }
    }

    proptest! {
        #[test]
        fn horner_matches_direct_evaluation(
            k in 1usize..=6,
            re in -2.0f64..2.0,
            im in -2.0f64..2.0,
        ) {
            let zeta = Complex64::new(re, im);
            let w = bdf_weights(k).unwrap();
            let horner = w.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * zeta + c);
            let direct = delta_eval(k, zeta).unwrap();
            let scale = direct.norm().max(1.0);
            prop_assert!((horner - direct).norm() / scale < 1e-13);
        }
    }
}
