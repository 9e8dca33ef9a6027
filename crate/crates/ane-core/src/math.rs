//! Small numeric helpers shared across the crate.
//!
//! Transcendentals go through `libm` so results are identical with and
//! without the standard library.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn fabs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

#[inline]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Compensated (Neumaier) summation; the running order is the call order, so
/// results are deterministic for a fixed input sequence.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if fabs(self.sum) >= fabs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Eigen decomposition of a small (`d <= 3`) symmetric matrix by cyclic
/// Jacobi rotations. Returns eigenvalues in ascending order with unit
/// eigenvectors; each vector is sign-normalized so its first entry of
/// non-negligible magnitude is positive, and exact eigenvalue ties are
/// ordered by lexicographically smallest vector.
///
/// `a` is `d*d` row-major and must be symmetric.
pub(crate) fn sym_eigen(d: usize, a: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert!(d >= 1 && d <= 3, "sym_eigen supports d in 1..=3");
    assert_eq!(a.len(), d * d);

    let mut m = [[0.0_f64; 3]; 3];
    let mut v = [[0.0_f64; 3]; 3];
    for i in 0..d {
        v[i][i] = 1.0;
        for j in 0..d {
            m[i][j] = a[i * d + j];
        }
    }

    let scale = {
        let mut s: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                s = s.max(fabs(m[i][j]));
            }
        }
        s.max(1.0e-300)
    };

    for _sweep in 0..64 {
        let mut off = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                off = off.max(fabs(m[i][j]));
            }
        }
        if off <= 1.0e-15 * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if fabs(m[p][q]) <= 1.0e-300 {
                    continue;
                }
                let tau = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = if tau >= 0.0 {
                    1.0 / (tau + sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|j| {
            let mut col: Vec<f64> = (0..d).map(|i| v[i][j]).collect();
            let n = norm2(&col);
            if n > 0.0 {
                for e in col.iter_mut() {
                    *e /= n;
                }
            }
            // Sign convention: first entry of non-negligible size positive.
            if let Some(&lead) = col.iter().find(|e| fabs(**e) > 1.0e-12) {
                if lead < 0.0 {
                    for e in col.iter_mut() {
                        *e = -*e;
                    }
                }
            }
            (m[j][j], col)
        })
        .collect();

    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| lex_cmp(&x.1, &y.1)));

    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = pairs.into_iter().map(|p| p.1).collect();
    (values, vectors)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            core::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    core::cmp::Ordering::Equal
}

/// Clamp tiny negative rounding residue to zero while letting NaN and
/// infinity through (`f64::max` would swallow them).
#[inline]
pub(crate) fn clamp_nonneg(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

/// FNV-1a over a little-endian byte view of the words.
pub(crate) fn fnv1a(words: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[allow(unused)]
pub(crate) fn zeros(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_compensates_small_terms() {
        let mut k = KahanSum::new();
        k.add(1.0e16);
        for _ in 0..10 {
            k.add(1.0);
        }
        k.add(-1.0e16);
        assert_eq!(k.value(), 10.0);
    }

    #[test]
    fn eigen_diagonal_is_identity_basis() {
        let (vals, vecs) = sym_eigen(2, &[2.0, 0.0, 0.0, 5.0]);
        assert!((vals[0] - 2.0).abs() < 1e-14);
        assert!((vals[1] - 5.0).abs() < 1e-14);
        assert_eq!(vecs[0], vec![1.0, 0.0]);
        assert_eq!(vecs[1], vec![0.0, 1.0]);
    }

    #[test]
    fn eigen_rank_one_line() {
        // Covariance of points spread along y = x.
        let (vals, vecs) = sym_eigen(2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(vals[0].abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((vecs[0][0] - inv_sqrt2).abs() < 1e-12);
        assert!((vecs[0][1] + inv_sqrt2).abs() < 1e-12);
        assert!((vecs[1][0] - inv_sqrt2).abs() < 1e-12);
        assert!((vecs[1][1] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn eigen_3d_known_spectrum() {
        // diag(1,2,3) conjugated by a rotation in the (0,2) plane.
        let c = (0.3_f64).cos();
        let s = (0.3_f64).sin();
        // R diag R^T with R rotating axes 0 and 2.
        let a = [
            c * c + 3.0 * s * s,
            0.0,
            c * s * (1.0 - 3.0),
            0.0,
            2.0,
            0.0,
            c * s * (1.0 - 3.0),
            0.0,
            s * s + 3.0 * c * c,
        ];
        let (vals, _) = sym_eigen(3, &a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!((vals[2] - 3.0).abs() < 1e-12);
    }
}
