//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use std::ops::Index;

use serde::Serialize;

/// Dense symmetric matrix; every write goes to both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            entries: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in i..order {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.order + j] = v;
        self.entries[j * self.order + i] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `uᵀ A v`
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(self.mul_vec(v)).map(|(a, b)| a * b).sum()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in (i + 1)..self.order {
                s += self.get(i, j).powi(2);
            }
        }
        (2.0 * s).sqrt()
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.order + j]
    }
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector belonging to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Eigen-decomposition by cyclic Jacobi rotations; results sorted ascending.
pub fn eigh_small(matrix: &SymmetricMatrix) -> Eigen {
    let n = matrix.order();
    let mut a = matrix.clone();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = matrix.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        if a.off_diagonal_norm() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);

                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = order.iter().map(|&k| v.iter().map(|row| row[k]).collect()).collect();
    Eigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &SymmetricMatrix, e: &Eigen) -> f64 {
        let mut worst: f64 = 0.0;
        for (lam, vec) in e.values.iter().zip(&e.vectors) {
            let av = m.mul_vec(vec);
            let r: f64 = av
                .iter()
                .zip(vec)
                .map(|(a, v)| (a - lam * v).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    fn pseudo_random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut state = seed;
        SymmetricMatrix::from_fn(n, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    /// Number of eigenvalues below `sigma` from the inertia of `A − σI`
    /// (LDLᵀ pivots without pivoting). Independent of the Jacobi code path.
    fn count_below(m: &SymmetricMatrix, sigma: f64) -> usize {
        let n = m.order();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| m.get(i, j) - if i == j { sigma } else { 0.0 }).collect())
            .collect();
        let mut negatives = 0;
        for k in 0..n {
            let mut piv = a[k][k];
            if piv == 0.0 {
                piv = 1e-300;
            }
            if piv < 0.0 {
                negatives += 1;
            }
            let (upper, lower) = a.split_at_mut(k + 1);
            let pivot_row = &upper[k];
            for row in lower.iter_mut() {
                let f = row[k] / piv;
                for (x, p) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                    *x -= f * p;
                }
            }
        }
        negatives
    }

    fn bisection_eigenvalues(m: &SymmetricMatrix) -> Vec<f64> {
        let n = m.order();
        let bound = m.frobenius_norm() + 1.0;
        (0..n)
            .map(|k| {
                let (mut lo, mut hi) = (-bound, bound);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if count_below(m, mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    #[test]
    fn diagonal_input() {
        let m = SymmetricMatrix::from_diagonal(&[3.0, 1.0, 2.0]);
        let e = eigh_small(&m);
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_swap() {
        let mut m = SymmetricMatrix::zeros(2);
        m.set(0, 1, 1.0);
        let e = eigh_small(&m);
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
        assert!(residual(&m, &e) < 1e-14);
    }

    #[test]
    fn random_matrix_matches_inertia_bisection() {
        let m = pseudo_random_symmetric(10, 42);
        let e = eigh_small(&m);
        let oracle = bisection_eigenvalues(&m);
        for (a, b) in e.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        let norm = m.frobenius_norm();
        assert!(residual(&m, &e) <= 1e-12 * norm);
        for i in 0..10 {
            for j in 0..10 {
                let dot: f64 = e.vectors[i].iter().zip(&e.vectors[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn similarity_invariance() {
        let m = pseudo_random_symmetric(8, 7);
        let q = eigh_small(&pseudo_random_symmetric(8, 99)).vectors;
        // B = Qᵀ M Q
        let b = SymmetricMatrix::from_fn(8, |i, j| m.bilinear(&q[i], &q[j]));
        let ea = eigh_small(&m);
        let eb = eigh_small(&b);
        for (x, y) in ea.values.iter().zip(&eb.values) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn order_32_converges() {
        let m = pseudo_random_symmetric(32, 3);
        let e = eigh_small(&m);
        assert!(residual(&m, &e) <= 1e-12 * m.frobenius_norm());
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }
}
