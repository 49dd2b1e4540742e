//! Dense GF(2) linear solver with insolvability certificates.
//!
//! Rows are equations, columns unknowns, all over the field with two
//! elements. On an inconsistent system the solver returns the subset of
//! original equations whose XOR has zero left-hand side and right-hand
//! side one — an auditable witness that no solution exists.

/// One bit-packed row: coefficient words, the right-hand side, and a
/// record of which original rows have been XORed into this one.
#[derive(Clone, Debug)]
struct Row {
    cols: Vec<u64>,
    rhs: bool,
    history: Vec<u64>,
}

impl Row {
    fn get(&self, j: usize) -> bool {
        self.cols[j / 64] >> (j % 64) & 1 == 1
    }

    fn xor_in(&mut self, other: &Row) {
        for (a, b) in self.cols.iter_mut().zip(&other.cols) {
            *a ^= b;
        }
        for (a, b) in self.history.iter_mut().zip(&other.history) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
    }

    fn lhs_zero(&self) -> bool {
        self.cols.iter().all(|&w| w == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gf2Outcome {
    /// One solution, with free unknowns set to zero.
    Solution(Vec<bool>),
    /// Indices of original equations whose XOR is `0 = 1`.
    Witness(Vec<usize>),
}

/// Solves `A x = b` over GF(2). `rows[i]` lists the column indices with a
/// one in equation `i` (duplicates cancel).
pub fn solve(rows: &[Vec<usize>], rhs: &[bool], ncols: usize) -> Gf2Outcome {
    assert_eq!(rows.len(), rhs.len());
    let nrows = rows.len();
    let col_words = ncols.div_ceil(64).max(1);
    let hist_words = nrows.div_ceil(64).max(1);
    let mut mat: Vec<Row> = rows
        .iter()
        .zip(rhs)
        .enumerate()
        .map(|(i, (cols, &r))| {
            let mut row = Row {
                cols: vec![0; col_words],
                rhs: r,
                history: vec![0; hist_words],
            };
            for &c in cols {
                assert!(c < ncols, "column index out of range");
                row.cols[c / 64] ^= 1 << (c % 64);
            }
            row.history[i / 64] |= 1 << (i % 64);
            row
        })
        .collect();

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut next_row = 0usize;
    for col in 0..ncols {
        let Some(pivot) = (next_row..nrows).find(|&r| mat[r].get(col)) else {
            continue;
        };
        mat.swap(next_row, pivot);
        let pivot_row = mat[next_row].clone();
        for r in 0..nrows {
            if r != next_row && mat[r].get(col) {
                mat[r].xor_in(&pivot_row);
            }
        }
        pivot_of_col[col] = Some(next_row);
        next_row += 1;
        if next_row == nrows {
            break;
        }
    }

    for row in &mat {
        if row.lhs_zero() && row.rhs {
            let witness = (0..nrows)
                .filter(|&i| row.history[i / 64] >> (i % 64) & 1 == 1)
                .collect();
            return Gf2Outcome::Witness(witness);
        }
    }

    let mut solution = vec![false; ncols];
    for col in 0..ncols {
        if let Some(r) = pivot_of_col[col] {
            solution[col] = mat[r].rhs;
        }
    }
    Gf2Outcome::Solution(solution)
}

/// Checks a claimed solution against the original system.
pub fn verify_solution(rows: &[Vec<usize>], rhs: &[bool], solution: &[bool]) -> bool {
    rows.iter().zip(rhs).all(|(cols, &r)| {
        let lhs = cols.iter().fold(false, |acc, &c| acc ^ solution[c]);
        lhs == r
    })
}

/// Checks a claimed witness: every unknown must occur an even number of
/// times over the selected equations while the right-hand sides XOR to one.
pub fn verify_witness(rows: &[Vec<usize>], rhs: &[bool], witness: &[usize], ncols: usize) -> bool {
    let mut counts = vec![0usize; ncols];
    let mut parity = false;
    for &i in witness {
        for &c in &rows[i] {
            counts[c] += 1;
        }
        parity ^= rhs[i];
    }
    parity && counts.iter().all(|&c| c % 2 == 0)
}
