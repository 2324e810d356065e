//! Rectangular linear assignment by shortest augmenting paths (Hungarian
//! method with row/column potentials), O(n²·m) for n rows and m ≥ n columns.

use crate::error::{Error, Result};

/// Minimum-cost assignment of every row of the `rows × cols` row-major
/// `cost` matrix to a distinct column. Returns the column of each row and
/// the total cost.
pub fn solve(cost: &[f64], rows: usize, cols: usize) -> Result<(Vec<usize>, f64)> {
    if rows > cols {
        return Err(Error::InvalidParameter(format!(
            "cannot assign {rows} rows to {cols} columns"
        )));
    }
    if cost.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "cost matrix has {} entries, expected {rows}x{cols}",
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter("non-finite assignment cost".into()));
    }
    if rows == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let at = |i: usize, j: usize| cost[(i - 1) * cols + (j - 1)];

    // 1-based; column 0 is the virtual source
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = at(i0, j) - u[i0] - v[j];
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
        // flip the augmenting path
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    let total = col_of.iter().enumerate().map(|(i, &j)| cost[i * cols + j]).sum();
    Ok((col_of, total))
}
