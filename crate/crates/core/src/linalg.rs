//! Dense Cholesky factorization with packed lower-triangular storage.

use crate::scalar::{dot, flush, flush_threshold, Scalar};

/// Number of right-hand sides handled together by the batched kernels.
pub const LANES: usize = 16;

/// Lower-triangular factor `L` with `L Lᵀ = A`, rows stored contiguously.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    packed: Vec<T>,
}

#[inline]
fn offset(i: usize) -> usize {
    i * (i + 1) / 2
}

impl<T: Scalar> Cholesky<T> {
    /// Factors the symmetric `n × n` row-major matrix `a` with `shift` added
    /// to its diagonal. Returns `None` when the shifted matrix is not
    /// numerically positive definite.
    pub fn factor_shifted(a: &[T], n: usize, shift: T) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: the required CPU feature was detected above.
            return unsafe { Self::factor_avx(a, n, shift) };
        }
        Self::factor_kernel(a, n, shift)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx")]
    unsafe fn factor_avx(a: &[T], n: usize, shift: T) -> Option<Self> {
        Self::factor_kernel(a, n, shift)
    }

    #[inline(always)]
    fn factor_kernel(a: &[T], n: usize, shift: T) -> Option<Self> {
        let tiny: T = flush_threshold();
        let mut packed = vec![T::zero(); offset(n)];
        for i in 0..n {
            let row_i = offset(i);
            for j in 0..=i {
                let row_j = offset(j);
                let partial = dot(&packed[row_i..row_i + j], &packed[row_j..row_j + j]);
                let mut s = a[i * n + j] - partial;
                if i == j {
                    s += shift;
                    if !(s > T::zero()) || !s.is_finite() {
                        return None;
                    }
                    packed[row_i + i] = s.sqrt();
                } else {
                    packed[row_i + j] = flush(s / packed[row_j + j], tiny);
                }
            }
        }
        Some(Self { n, packed })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.packed[offset(i)..offset(i) + i + 1]
    }

    /// Entry `L[i][j]`, zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> T {
        if j > i {
            T::zero()
        } else {
            self.packed[offset(i) + j]
        }
    }

    /// Solves `L x = b` in place.
    pub fn forward_in_place(&self, b: &mut [T]) {
        let tiny: T = flush_threshold();
        for i in 0..self.n {
            let row = self.row(i);
            let s = b[i] - dot(&row[..i], &b[..i]);
            b[i] = flush(s / row[i], tiny);
        }
    }

    /// Forward substitution on [`LANES`] right-hand sides stored interleaved,
    /// `b[j * LANES + k]` holding entry `j` of right-hand side `k`.
    #[inline(always)]
    pub fn forward_lanes(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n * LANES);
        let tiny: T = flush_threshold();
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = [T::zero(); LANES];
            let (done, rest) = b.split_at_mut(i * LANES);
            for (l, v) in row[..i].iter().zip(done.chunks_exact(LANES)) {
                let v: &[T; LANES] = v.try_into().expect("exact chunk");
                for k in 0..LANES {
                    acc[k] += *l * v[k];
                }
            }
            let d = row[i];
            for k in 0..LANES {
                rest[k] = flush((rest[k] - acc[k]) / d, tiny);
            }
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward_in_place(&self, b: &mut [T]) {
        for i in (0..self.n).rev() {
            let row = self.row(i);
            let xi = b[i] / row[i];
            b[i] = xi;
            for (bk, lik) in b[..i].iter_mut().zip(&row[..i]) {
                *bk -= *lik * xi;
            }
        }
    }

    /// Solves `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    /// `ln det(L Lᵀ)`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.n).map(|i| two * self.row(i)[i].ln()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lanes_match_single_solves() {
        let n = 11;
        let c = Cholesky::factor_shifted(&spd(n), n, 0.0).unwrap();
        let rhs: Vec<Vec<f64>> = (0..LANES).map(|k| (0..n).map(|j| ((j * 7 + k * 3) % 5) as f64 - 2.0).collect()).collect();
        let mut packed = vec![0.0; n * LANES];
        for (k, r) in rhs.iter().enumerate() {
            for j in 0..n {
                packed[j * LANES + k] = r[j];
            }
        }
        c.forward_lanes(&mut packed);
        for (k, r) in rhs.iter().enumerate() {
            let mut single = r.clone();
            c.forward_in_place(&mut single);
            for j in 0..n {
                assert!((packed[j * LANES + k] - single[j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn tiny_entries_never_become_denormal() {
        let n = 12;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = match (i == j, (i + j) % 2) {
                    (true, _) => 1.0,
                    (false, 0) => 1e-140,
                    _ => 1e-160,
                };
            }
        }
        let c = Cholesky::factor_shifted(&a, n, 1e-10).unwrap();
        let normal_or_zero = |v: f64| v == 0.0 || v.is_normal();
        assert!((0..n).all(|i| (0..=i).all(|j| normal_or_zero(c.get(i, j)))));
        let mut b = vec![0.0; n * LANES];
        b[..LANES].fill(1e-149);
        c.forward_lanes(&mut b);
        assert!(b.iter().all(|v| normal_or_zero(*v)));
        let mut single = vec![0.0; n];
        single[0] = 1e-149;
        c.forward_in_place(&mut single);
        assert!(single.iter().all(|v| normal_or_zero(*v)));
        assert!(single.iter().zip(b.chunks_exact(LANES)).all(|(s, l)| *s == l[0]));
    }

    fn spd(n: usize) -> Vec<f64> {
        // Hilbert-like but well conditioned
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs());
            }
            a[i * n + i] += n as f64;
        }
        a
    }

    #[test]
    fn reconstructs_matrix() {
        let n = 9;
        let a = spd(n);
        let c = Cholesky::factor_shifted(&a, n, 0.0).unwrap();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| c.get(i, k) * c.get(j, k)).sum();
                assert!((v - a[i * n + j]).abs() < 1e-12);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let x = c.solve(&b);
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_and_accepts_shift() {
        let a = vec![1.0, 1.0, 1.0, 1.0];
        assert!(Cholesky::factor_shifted(&a, 2, 0.0).is_none());
        let c = Cholesky::factor_shifted(&a, 2, 1e-6).unwrap();
        let det = (1.0 + 1e-6f64).powi(2) - 1.0;
        assert!((c.log_det() - det.ln()).abs() < 1e-6);
        let neg = vec![-1.0];
        assert!(Cholesky::factor_shifted(&neg, 1, 0.0).is_none());
    }
}
