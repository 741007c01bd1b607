//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Rows are constraint rows, columns are basis positions. Pivots are picked
//! by singleton detection first and a threshold Markowitz search otherwise.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const THRESHOLD: f64 = 0.1;
const DROP_TOL: f64 = 1e-14;
const PIVOT_TOL: f64 = 1e-11;
const MARKOWITZ_COLUMNS: usize = 4;

#[derive(Debug, Clone, Default)]
struct UStep {
    row: usize,
    col: usize,
    diag: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
struct LStep {
    row: usize,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// Positions and rows left unpivoted by a rank-deficient factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactor {
    lower: Vec<LStep>,
    upper: Vec<UStep>,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

struct Active {
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<usize>>,
    row_count: Vec<usize>,
    col_count: Vec<usize>,
    row_live: Vec<bool>,
    col_live: Vec<bool>,
    row_heap: BinaryHeap<Reverse<(usize, usize)>>,
    col_heap: BinaryHeap<Reverse<(usize, usize)>>,
}

impl Active {
    fn entry(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row].iter().find(|(c, _)| *c == col).map(|(_, v)| *v)
    }

    fn live_col_entries(&self, col: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(self.col_count[col]);
        for &r in &self.cols[col] {
            if !self.row_live[r] || out.iter().any(|(i, _)| *i == r) {
                continue;
            }
            if let Some(v) = self.entry(r, col) {
                out.push((r, v));
            }
        }
        out
    }

    fn pop_col(&mut self) -> Option<usize> {
        while let Some(Reverse((cnt, c))) = self.col_heap.pop() {
            if self.col_live[c] && self.col_count[c] == cnt {
                return Some(c);
            }
        }
        None
    }

    fn pop_row(&mut self) -> Option<usize> {
        while let Some(Reverse((cnt, r))) = self.row_heap.pop() {
            if self.row_live[r] && self.row_count[r] == cnt {
                return Some(r);
            }
        }
        None
    }

    fn push_col(&mut self, c: usize) {
        self.col_heap.push(Reverse((self.col_count[c], c)));
    }

    fn push_row(&mut self, r: usize) {
        self.row_heap.push(Reverse((self.row_count[r], r)));
    }

    fn kill_col(&mut self, c: usize) {
        self.col_live[c] = false;
        for &r in &self.cols[c] {
            if self.row_live[r] {
                if let Some(k) = self.rows[r].iter().position(|(j, _)| *j == c) {
                    self.rows[r].swap_remove(k);
                    self.row_count[r] -= 1;
                    self.row_heap.push(Reverse((self.row_count[r], r)));
                }
            }
        }
    }
}

impl LuFactor {
    /// Factorizes the `m × m` matrix whose column `p` is `columns[p]` (row, value) pairs.
    pub(crate) fn factor(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactor, Singular> {
        let mut act = Active {
            rows: vec![Vec::new(); m],
            cols: vec![Vec::new(); m],
            row_count: vec![0; m],
            col_count: vec![0; m],
            row_live: vec![true; m],
            col_live: vec![true; m],
            row_heap: BinaryHeap::with_capacity(2 * m),
            col_heap: BinaryHeap::with_capacity(2 * m),
        };
        for (p, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v.abs() > DROP_TOL {
                    act.rows[r].push((p, v));
                    act.cols[p].push(r);
                }
            }
        }
        for r in 0..m {
            act.row_count[r] = act.rows[r].len();
            act.push_row(r);
        }
        for c in 0..m {
            act.col_count[c] = act.cols[c].len();
            act.push_col(c);
        }

        let mut lu = LuFactor { work: vec![0.0; m], ..Default::default() };
        let mut bad_cols = Vec::new();
        let mut slot = vec![usize::MAX; m];

        loop {
            let Some(c) = act.pop_col() else { break };
            let ccount = act.col_count[c];
            if ccount == 0 {
                act.col_live[c] = false;
                bad_cols.push(c);
                continue;
            }
            let pivot = if ccount == 1 {
                let (r, v) = act.live_col_entries(c)[0];
                if v.abs() < PIVOT_TOL {
                    act.kill_col(c);
                    bad_cols.push(c);
                    continue;
                }
                Some((r, c))
            } else {
                act.push_col(c);
                Self::choose_pivot(&mut act)
            };
            let Some((r, c)) = pivot else {
                continue;
            };
            lu.eliminate(&mut act, r, c, &mut slot);
        }

        let bad_rows: Vec<usize> = (0..m).filter(|&r| act.row_live[r]).collect();
        if bad_cols.is_empty() && bad_rows.is_empty() {
            Ok(lu)
        } else {
            bad_cols.sort_unstable();
            Err(Singular { positions: bad_cols, rows: bad_rows })
        }
    }

    /// Row singleton if one passes the threshold test, else a Markowitz search over the
    /// sparsest columns. Columns found numerically empty are retired and `None` returned.
    fn choose_pivot(act: &mut Active) -> Option<(usize, usize)> {
        if let Some(r) = act.pop_row() {
            act.push_row(r);
            if act.row_count[r] == 1 {
                let (c, v) = act.rows[r][0];
                let colmax = act.live_col_entries(c).iter().fold(0.0f64, |a, (_, x)| a.max(x.abs()));
                if v.abs() >= THRESHOLD * colmax && v.abs() >= PIVOT_TOL {
                    return Some((r, c));
                }
            }
        }
        let mut cands = Vec::with_capacity(MARKOWITZ_COLUMNS);
        while cands.len() < MARKOWITZ_COLUMNS {
            match act.pop_col() {
                Some(c) => cands.push(c),
                None => break,
            }
        }
        let mut best: Option<(usize, f64, usize, usize)> = None;
        for &c in &cands {
            let entries = act.live_col_entries(c);
            let colmax = entries.iter().fold(0.0f64, |a, (_, x)| a.max(x.abs()));
            if colmax < PIVOT_TOL {
                continue;
            }
            for &(r, v) in &entries {
                if v.abs() < THRESHOLD * colmax {
                    continue;
                }
                let cost = (act.row_count[r] - 1) * (act.col_count[c] - 1);
                let better = match best {
                    None => true,
                    Some((bc, bv, _, _)) => cost < bc || (cost == bc && v.abs() > bv),
                };
                if better {
                    best = Some((cost, v.abs(), r, c));
                }
            }
        }
        for &c in &cands {
            act.push_col(c);
        }
        match best {
            Some((_, _, r, c)) => Some((r, c)),
            None => {
                // every candidate column is numerically zero: retire them
                for &c in &cands {
                    let colmax = act.live_col_entries(c).iter().fold(0.0f64, |a, (_, x)| a.max(x.abs()));
                    if colmax < PIVOT_TOL {
                        act.kill_col(c);
                        act.col_count[c] = 0;
                        act.col_live[c] = true;
                        act.push_col(c);
                    }
                }
                None
            }
        }
    }

    fn eliminate(&mut self, act: &mut Active, r: usize, c: usize, slot: &mut [usize]) {
        let prow = std::mem::take(&mut act.rows[r]);
        let diag = prow.iter().find(|(j, _)| *j == c).map(|(_, v)| *v).unwrap_or(0.0);
        act.row_live[r] = false;
        for &(j, _) in &prow {
            act.col_count[j] -= 1;
            if j != c {
                act.push_col(j);
            }
        }
        act.col_live[c] = false;

        let mut lstep = LStep { row: r, entries: Vec::new() };
        let targets: Vec<usize> = std::mem::take(&mut act.cols[c]);
        for i in targets {
            if !act.row_live[i] {
                continue;
            }
            let Some(k) = act.rows[i].iter().position(|(j, _)| *j == c) else { continue };
            let (_, aic) = act.rows[i].swap_remove(k);
            act.row_count[i] -= 1;
            let l = aic / diag;
            lstep.entries.push((i, l));
            let row = &mut act.rows[i];
            for (k, &(j, _)) in row.iter().enumerate() {
                slot[j] = k;
            }
            for &(j, u) in &prow {
                if j == c {
                    continue;
                }
                if slot[j] != usize::MAX {
                    row[slot[j]].1 -= l * u;
                } else {
                    slot[j] = row.len();
                    row.push((j, -l * u));
                    act.cols[j].push(i);
                    act.col_count[j] += 1;
                }
            }
            for &(j, _) in row.iter() {
                slot[j] = usize::MAX;
            }
            let mut dropped = Vec::new();
            row.retain(|&(j, v)| {
                let keep = v.abs() > DROP_TOL;
                if !keep {
                    dropped.push(j);
                }
                keep
            });
            for j in dropped {
                act.col_count[j] -= 1;
            }
            act.row_count[i] = act.rows[i].len();
            act.push_row(i);
        }
        for &(j, _) in &prow {
            if j != c {
                act.push_col(j);
            }
        }
        if !lstep.entries.is_empty() {
            self.lower.push(lstep);
        }
        let entries = prow.into_iter().filter(|(j, _)| *j != c).collect();
        self.upper.push(UStep { row: r, col: c, diag, entries });
    }

    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = rhs`; `rhs` is indexed by row, the result by basis position.
    pub(crate) fn ftran(&mut self, rhs: &mut [f64]) {
        for step in &self.lower {
            let pivot = rhs[step.row];
            if pivot != 0.0 {
                for &(i, l) in &step.entries {
                    rhs[i] -= l * pivot;
                }
            }
        }
        let out = &mut self.work;
        for step in self.upper.iter().rev() {
            let mut v = rhs[step.row];
            for &(j, u) in &step.entries {
                v -= u * out[j];
            }
            out[step.col] = v / step.diag;
        }
        rhs.copy_from_slice(out);
        for eta in &self.etas {
            let xp = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = xp;
            if xp != 0.0 {
                for &(i, a) in &eta.entries {
                    rhs[i] -= a * xp;
                }
            }
        }
    }

    /// Solves `Bᵀ y = rhs`; `rhs` is indexed by basis position, the result by row.
    pub(crate) fn btran(&mut self, rhs: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut v = rhs[eta.pos];
            for &(i, a) in &eta.entries {
                v -= a * rhs[i];
            }
            rhs[eta.pos] = v / eta.pivot;
        }
        let out = &mut self.work;
        for step in &self.upper {
            let z = rhs[step.col] / step.diag;
            out[step.row] = z;
            if z != 0.0 {
                for &(j, u) in &step.entries {
                    rhs[j] -= u * z;
                }
            }
        }
        rhs.copy_from_slice(out);
        for step in self.lower.iter().rev() {
            let mut v = rhs[step.row];
            for &(i, l) in &step.entries {
                v -= l * rhs[i];
            }
            rhs[step.row] = v;
        }
    }

    /// Records the replacement of the column at `pos` by a column whose FTRAN image is `alpha`.
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { pos, pivot: alpha[pos], entries });
    }

}
