use super::dense::{DenseMatrix, PIVOT_REL_TOL};
use crate::error::{check_len, Error, Result};

/// Square band matrix in row-packed storage.
///
/// Row `i` occupies `bands[i*w .. (i+1)*w]` with `w = lower + upper + 1`;
/// entry `(i, j)` lives at offset `j + lower - i` inside its row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    bands: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Result<Self> {
        if n > 0 && (lower >= n || upper >= n) {
            return Err(Error::InvalidBand(format!(
                "bandwidths ({lower}, {upper}) must be below n = {n}"
            )));
        }
        Ok(Self {
            n,
            lower,
            upper,
            bands: vec![0.0; n * (lower + upper + 1)],
        })
    }

    pub fn from_dense(a: &DenseMatrix, lower: usize, upper: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut b = Self::zeros(n, lower, upper)?;
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if v == 0.0 {
                    continue;
                }
                if !b.in_band(i, j) {
                    return Err(Error::InvalidBand(format!(
                        "entry ({i}, {j}) lies outside bandwidths ({lower}, {upper})"
                    )));
                }
                b.set(i, j, v);
            }
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    pub fn bands(&self) -> &[f64] {
        &self.bands
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.lower >= i && j <= i + self.upper
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.lower - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.bands[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.bands[k] = v;
    }

    /// Panics when `(i, j)` is outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.offset(i, j);
        self.bands[k] += v;
    }

    fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        Ok((0..self.n)
            .map(|i| {
                self.col_range(i)
                    .map(|j| self.bands[self.offset(i, j)] * x[j])
                    .sum()
            })
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.bands.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.col_range(i) {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.n).all(|i| {
            self.col_range(i)
                .all(|j| (self.get(i, j) - self.get(j, i)).abs() <= rel_tol * scale)
        })
    }
}

/// One row of the working factor: entries for columns `start .. start + vals.len()`.
#[derive(Debug, Clone)]
struct PackedRow {
    start: usize,
    vals: Vec<f64>,
}

impl PackedRow {
    fn get(&self, j: usize) -> f64 {
        if j < self.start {
            return 0.0;
        }
        self.vals.get(j - self.start).copied().unwrap_or(0.0)
    }

    fn end(&self) -> usize {
        self.start + self.vals.len()
    }

    fn grow_to(&mut self, end: usize) {
        if end > self.end() {
            self.vals.resize(end - self.start, 0.0);
        }
    }
}

/// `PA = LU` of a band matrix with partial pivoting.
///
/// Rows are swapped as whole packed rows, so the stored multipliers follow
/// their rows and the final permutation applies to the right-hand side once.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    rows: Vec<PackedRow>,
    perm: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &BandedMatrix) -> Result<Self> {
        let n = a.dim();
        let l = a.lower();
        let threshold = PIVOT_REL_TOL * a.max_abs();
        let mut rows: Vec<PackedRow> = (0..n)
            .map(|i| {
                let cols = a.col_range(i);
                // room for the fill produced by pivoting: up to `lower + upper` right of the diagonal
                let end = (i + l + a.upper() + 1).min(n);
                let mut vals = vec![0.0; end - cols.start];
                for j in cols.clone() {
                    vals[j - cols.start] = a.get(i, j);
                }
                PackedRow {
                    start: cols.start,
                    vals,
                }
            })
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let last = (k + l).min(n - 1);
            let (p, pmax) = (k..=last)
                .map(|i| (i, rows[i].get(k).abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= threshold || pmax == 0.0 {
                return Err(Error::SingularMatrix {
                    step: k,
                    pivot: pmax,
                });
            }
            if p != k {
                rows.swap(k, p);
                perm.swap(k, p);
            }
            let (head, tail) = rows.split_at_mut(k + 1);
            let pivot_row = &head[k];
            let pivot = pivot_row.get(k);
            let pend = pivot_row.end();
            for row in tail.iter_mut().take(last - k) {
                let a_ik = row.get(k);
                if a_ik == 0.0 {
                    continue;
                }
                let f = a_ik / pivot;
                row.grow_to(pend);
                let off = k - row.start;
                row.vals[off] = f;
                let src = &pivot_row.vals[k + 1 - pivot_row.start..];
                let dst = &mut row.vals[off + 1..off + 1 + src.len()];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= f * s;
                }
            }
        }
        Ok(Self { n, rows, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, rhs.len())?;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..self.n {
            let row = &self.rows[i];
            let mut s = 0.0;
            for j in row.start..i.min(row.end()) {
                s += row.vals[j - row.start] * y[j];
            }
            y[i] -= s;
        }
        for i in (0..self.n).rev() {
            let row = &self.rows[i];
            let mut s = 0.0;
            for j in i + 1..row.end() {
                s += row.vals[j - row.start] * y[j];
            }
            y[i] = (y[i] - s) / row.vals[i - row.start];
        }
        Ok(y)
    }
}
