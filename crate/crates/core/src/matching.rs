//! Minimum-weight perfect matching on dense bipartite graphs.
//!
//! The solver is the shortest-augmenting-path form of the Hungarian method
//! with row/column potentials. It runs in O(r²·c) for an r×c instance with
//! r ≤ c, which is O(n³) on square matrices.

use crate::error::{Error, Result};

/// Dense square matrix of finite, nonnegative edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("cost matrix"));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        check_entries(&data)?;
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("cost matrix"));
        }
        let data: Vec<f64> = (0..n * n).map(|idx| f(idx / n, idx % n)).collect();
        check_entries(&data)?;
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }
}

fn check_entries(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(idx) => Err(Error::InvalidMatrix(format!(
            "entry {idx} is {}; weights must be finite and >= 0",
            data[idx]
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    /// Column matched to each row.
    pub assignment: Vec<usize>,
    pub total_cost: f64,
}

/// Optimal perfect matching of a square cost matrix.
pub fn solve_assignment(costs: &CostMatrix) -> Result<MatchingResult> {
    Ok(hungarian(costs.n, costs.n, &costs.data))
}

/// Optimal matching that covers every row of an r×c matrix with r ≤ c.
///
/// Equivalent to padding with `c − r` uniform dummy rows and discarding
/// their assignments, without paying for the dummy rows.
pub fn solve_rectangular(rows: usize, cols: usize, data: &[f64]) -> Result<MatchingResult> {
    if rows == 0 {
        return Ok(MatchingResult {
            assignment: Vec::new(),
            total_cost: 0.0,
        });
    }
    if rows > cols {
        return Err(Error::InvalidMatrix(format!(
            "{rows} rows cannot all be matched into {cols} columns"
        )));
    }
    if data.len() != rows * cols {
        return Err(Error::InvalidMatrix(format!(
            "expected {} entries, got {}",
            rows * cols,
            data.len()
        )));
    }
    check_entries(data)?;
    Ok(hungarian(rows, cols, data))
}

fn hungarian(rows: usize, cols: usize, data: &[f64]) -> MatchingResult {
    // 1-based potentials; column 0 is the virtual root of each search.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![f64::INFINITY; cols + 1];
    let mut used = vec![false; cols + 1];

    for row in 1..=rows {
        owner[0] = row;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let base = (i0 - 1) * cols;
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = data[base + j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    let total_cost = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| data[i * cols + j])
        .fold(0.0, |acc, c| acc + c);
    MatchingResult {
        assignment,
        total_cost,
    }
}

/// A rectangular instance embedded in a square one.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedMatrix {
    pub matrix: CostMatrix,
    pub real_rows: usize,
    pub real_cols: usize,
}

impl PaddedMatrix {
    pub fn is_dummy_row(&self, row: usize) -> bool {
        row >= self.real_rows
    }

    pub fn is_dummy_col(&self, col: usize) -> bool {
        col >= self.real_cols
    }

    /// Real row → real column pairs of a square solution; pairs touching a
    /// dummy are dropped.
    pub fn real_pairs(&self, result: &MatchingResult) -> Vec<(usize, usize)> {
        result
            .assignment
            .iter()
            .enumerate()
            .filter(|&(r, &c)| !self.is_dummy_row(r) && !self.is_dummy_col(c))
            .map(|(r, &c)| (r, c))
            .collect()
    }
}

/// Dummy weight that dominates every real assignment: one plus the sum of
/// all real entries.
pub fn default_pad_value(costs: &[Vec<f64>]) -> f64 {
    1.0 + costs.iter().flatten().sum::<f64>()
}

/// Pads an r×c matrix to max(r, c) square with `pad_value`.
pub fn pad_to_square(costs: &[Vec<f64>], pad_value: f64) -> Result<PaddedMatrix> {
    let real_rows = costs.len();
    let real_cols = costs.first().map_or(0, Vec::len);
    if real_rows == 0 || real_cols == 0 {
        return Err(Error::Empty("cost matrix"));
    }
    if costs.iter().any(|r| r.len() != real_cols) {
        return Err(Error::InvalidMatrix("ragged rows".into()));
    }
    if !(pad_value.is_finite() && pad_value >= 0.0) {
        return Err(Error::InvalidMatrix(format!("pad value {pad_value}")));
    }
    let n = real_rows.max(real_cols);
    let matrix = CostMatrix::from_fn(n, |r, c| {
        if r < real_rows && c < real_cols {
            costs[r][c]
        } else {
            pad_value
        }
    })?;
    Ok(PaddedMatrix {
        matrix,
        real_rows,
        real_cols,
    })
}
