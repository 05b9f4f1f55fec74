//! Rectangular minimum-cost assignment by shortest augmenting paths
//! (Hungarian method with potentials), with its dual certificate.

/// Optimal assignment of every row to a distinct column (`rows <= cols`).
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
    /// Dual potentials: `u_i + v_j <= c_ij` with equality on assigned pairs.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Assignment {
    /// Largest violation of dual feasibility or complementary slackness.
    pub fn certificate_gap(&self, cost: &[Vec<f64>]) -> f64 {
        let mut gap: f64 = 0.0;
        for (i, row) in cost.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                gap = gap.max(self.u[i] + self.v[j] - c);
            }
            let j = self.row_to_col[i];
            gap = gap.max((row[j] - self.u[i] - self.v[j]).abs());
        }
        gap
    }
}

/// Solve `min sum_i cost[i][sigma(i)]` over injections `sigma`.
///
/// Panics if there are more rows than columns.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    if n == 0 {
        return Assignment {
            row_to_col: Vec::new(),
            total_cost: 0.0,
            u: Vec::new(),
            v: Vec::new(),
        };
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols");
    // 1-based arrays; column 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if col_owner[j] != 0 {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
    }
    let total_cost = row_to_col.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Assignment {
        row_to_col,
        total_cost,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
            if i == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost[0].len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[i][j] + rec(cost, i + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..6 {
            for m in n..n + 3 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| (next() * 10.0).floor()).collect()).collect();
                let a = solve_assignment(&cost);
                assert!((a.total_cost - brute(&cost)).abs() < 1e-12);
                assert!(a.certificate_gap(&cost) < 1e-9);
                let mut cols = a.row_to_col.clone();
                cols.sort();
                cols.dedup();
                assert_eq!(cols.len(), n);
            }
        }
    }
}
