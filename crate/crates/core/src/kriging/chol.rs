//! Pivoted Cholesky factorization, generic over the scalar.
//!
//! The Gram matrices here are tiny (a handful of sites) but become
//! near-singular as the site cluster collapses, so the factorization pivots
//! on the largest remaining diagonal and reports the pivot ratio as a
//! condition estimate. The same code runs in f64 and in double-double; the
//! breakdown threshold scales with the scalar's unit roundoff.

use crate::specfun::Real;

/// Factorization failed: a pivot fell to (or below) the noise floor of the
/// working precision. `condition` is the pivot ratio accumulated so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CholBreakdown {
    pub at: usize,
    pub condition: f64,
}

#[derive(Debug)]
pub(crate) struct CholFactor<R> {
    n: usize,
    /// Lower-triangular factor of the permuted matrix, row-major, with the
    /// strict upper triangle left as zeros.
    l: Vec<R>,
    /// `perm[k]` = original index of the site in pivot position `k`.
    perm: Vec<usize>,
    /// Ratio of largest to smallest pivot; the pivots are the squared
    /// diagonal of `l`, so this estimates the spectral condition number from
    /// below.
    pub condition: f64,
}

/// Factor a symmetric positive definite matrix (row-major, `n x n`) as
/// `P A P' = L L'` with diagonal pivoting.
pub(crate) fn factor<R: Real>(a: &[R], n: usize) -> Result<CholFactor<R>, CholBreakdown> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut l = vec![R::zero(); n * n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut max_pivot = f64::MIN_POSITIVE;
    let mut min_pivot = f64::MAX;

    for k in 0..n {
        // Largest remaining diagonal entry becomes the pivot.
        let mut best = k;
        for j in k + 1..n {
            if m[j * n + j] > m[best * n + best] {
                best = j;
            }
        }
        if best != k {
            perm.swap(k, best);
            for c in 0..n {
                m.swap(k * n + c, best * n + c);
            }
            for r in 0..n {
                m.swap(r * n + k, r * n + best);
            }
            for c in 0..k {
                l.swap(k * n + c, best * n + c);
            }
        }

        let d = m[k * n + k].to_f64();
        max_pivot = max_pivot.max(d);
        let breakdown_floor = max_pivot * n as f64 * R::UNIT_ROUNDOFF;
        // Negated comparison on purpose: a NaN pivot must break down too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(d > breakdown_floor) {
            return Err(CholBreakdown {
                at: k,
                condition: if d > 0.0 {
                    max_pivot / d
                } else {
                    f64::INFINITY
                },
            });
        }
        min_pivot = min_pivot.min(d);

        let lkk = m[k * n + k].sqrt();
        l[k * n + k] = lkk;
        for i in k + 1..n {
            l[i * n + k] = m[i * n + k] / lkk;
        }
        for i in k + 1..n {
            for j in k + 1..=i {
                let upd = m[i * n + j] - l[i * n + k] * l[j * n + k];
                m[i * n + j] = upd;
                m[j * n + i] = upd;
            }
        }
    }

    Ok(CholFactor {
        n,
        l,
        perm,
        condition: max_pivot / min_pivot,
    })
}

impl<R: Real> CholFactor<R> {
    /// Solve `A x = b` through the pivoted factorization.
    // Index loops mirror the textbook triangular substitutions.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[R]) -> Vec<R> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut y: Vec<R> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s = s - self.l[i * n + j] * y[j];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s = s - self.l[j * n + i] * y[j];
            }
            y[i] = s / self.l[i * n + i];
        }
        let mut x = vec![R::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::Dd;
    use proptest::prelude::*;

    fn matvec(a: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn solves_a_fixed_spd_system() {
        // A = M M' for a fixed M, so A is SPD by construction.
        let m = [2.0, 0.0, 0.0, -1.0, 1.5, 0.0, 0.3, 0.7, 0.9];
        let n = 3;
        let mut a = vec![0.0; 9];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
            }
        }
        let b = vec![1.0, -2.0, 0.5];
        let f = factor(&a, n).unwrap();
        let x = f.solve(&b);
        let back = matvec(&a, &x, n);
        for (bi, vi) in b.iter().zip(&back) {
            assert!((bi - vi).abs() < 1e-12);
        }
        assert!(f.condition >= 1.0);
    }

    #[test]
    fn rejects_a_singular_matrix() {
        // Rank one: second pivot hits the breakdown floor.
        let a = [1.0, 2.0, 2.0, 4.0];
        let err = factor(&a, 2).unwrap_err();
        assert_eq!(err.at, 1);
        assert!(err.condition > 1e12);
    }

    #[test]
    fn pivoting_handles_increasing_diagonal() {
        // Largest diagonal entry last; unpivoted order would still work but
        // the permutation must round-trip through solve correctly.
        let a = [1.0, 0.2, 0.2, 100.0];
        let f = factor(&a, 2).unwrap();
        let x = f.solve(&[1.0, 1.0]);
        let back = matvec(&a, &x, 2);
        assert!((back[0] - 1.0).abs() < 1e-13 && (back[1] - 1.0).abs() < 1e-13);
        assert!((f.condition - 100.0).abs() < 1.0);
    }

    #[test]
    fn extended_scalar_resolves_what_f64_cannot() {
        // Gram matrix of two unit vectors at angle theta ~ 1e-9: condition
        // ~ 4/theta^2 ~ 4e18 defeats f64 but is easy in double-double.
        let theta = 1e-9f64;
        let c = Dd::from(1.0) - Dd::from(theta).sqr().mul_f64(0.5); // cos theta to dd accuracy
        let a = vec![Dd::ONE, c, c, Dd::ONE];
        let f = factor(&a, 2).unwrap();
        assert!(f.condition > 1e17, "condition = {:e}", f.condition);
        // Solve A x = (1, 1): exact solution x = (s, s) with s = 1/(1 + c).
        let x = f.solve(&[Dd::ONE, Dd::ONE]);
        let want = (Dd::ONE + c).recip();
        for xi in &x {
            let rel = ((*xi - want) / want).abs().to_f64();
            assert!(rel < 1e-12, "rel = {rel:e}");
        }
        // f64 on the same matrix must report the breakdown instead.
        let af: Vec<f64> = a.iter().map(|v| v.to_f64()).collect();
        assert!(factor(&af, 2).is_err());
    }

    proptest! {
        #[test]
        fn random_spd_systems_solve_to_tolerance(
            seed in proptest::array::uniform16(-1.0f64..1.0),
            nsel in 2usize..=4,
        ) {
            // Build A = M M' + 0.1 I from a random square M.
            let n = nsel;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] =
                        (0..n).map(|k| seed[i * 4 + k] * seed[j * 4 + k]).sum::<f64>();
                }
            }
            for i in 0..n {
                a[i * n + i] += 0.1;
            }
            let b: Vec<f64> = (0..n).map(|i| seed[i] + 0.3).collect();
            let f = factor(&a, n).unwrap();
            let x = f.solve(&b);
            let back = matvec(&a, &x, n);
            for (bi, vi) in b.iter().zip(&back) {
                prop_assert!((bi - vi).abs() < 1e-10);
            }
        }
    }
}
