//! Banded matrices for the pentadiagonal systems of 1D quadratic elements, and
//! a banded LU with partial pivoting.

use crate::error::{invalid, Error, Result};

/// Square matrix with `bandwidth` sub- and super-diagonals, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (2 * bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (2 * self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let w = self.bandwidth;
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(w);
                let hi = (i + w).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &BandedMatrix, beta: f64) -> BandedMatrix {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bandwidth, other.bandwidth);
        BandedMatrix {
            n: self.n,
            bandwidth: self.bandwidth,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> BandedMatrix {
        BandedMatrix {
            n: self.n,
            bandwidth: self.bandwidth,
            data: self.data.iter().map(|a| alpha * a).collect(),
        }
    }

    /// Largest absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> f64 {
        let w = 2 * self.bandwidth + 1;
        self.data
            .chunks(w)
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i.saturating_sub(self.bandwidth)..=(i + self.bandwidth).min(self.n - 1) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn lu(&self) -> Result<BandedLu> {
        BandedLu::factor(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(rhs)
    }
}

/// LU factors of a banded matrix with row pivoting. The upper factor has
/// bandwidth `2 * kl` to absorb fill-in from pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    // row i holds columns i - kl ..= i + 2 kl
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let n = a.n;
        let kl = a.bandwidth;
        let width = 3 * kl + 1;
        let mut data = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + kl).min(n.saturating_sub(1)) {
                data[at(i, j)] = a.get(i, j);
            }
        }
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = data[at(k, k)].abs();
            for r in k + 1..=last {
                let v = data[at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= 1e-14 * scale || !best.is_finite() {
                return Err(Error::Singular(format!(
                    "zero pivot in column {k} of a {n}x{n} banded system"
                )));
            }
            pivots[k] = p;
            let jmax = (k + 2 * kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    data.swap(at(k, j), at(p, j));
                }
            }
            let pivot = data[at(k, k)];
            for r in k + 1..=last {
                let l = data[at(r, k)] / pivot;
                data[at(r, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        data[at(r, j)] -= l * data[at(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            data,
            pivots,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return invalid(format!(
                "right-hand side of length {} for a system of size {}",
                rhs.len(),
                self.n
            ));
        }
        let (n, kl, width) = (self.n, self.kl, self.width);
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                x[r] -= self.data[at(r, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + 2 * kl).min(n - 1) {
                s -= self.data[at(k, j)] * x[j];
            }
            x[k] = s / self.data[at(k, k)];
        }
        Ok(x)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
