//! Dense two-phase primal simplex.
//!
//! Pricing is Dantzig (most positive reduced cost, lowest index on ties). After
//! a run of degenerate pivots the solver switches to Bland's rule until the
//! objective moves again, which rules out cycling. All choices are
//! index-ordered so a given model always follows the same pivot sequence.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const DEGENERATE_RUN: usize = 40;

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("linear program is infeasible (phase-one residual {0:.3e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Coefficients, relation and right-hand side of one normalised row.
type SparseRow = (Vec<(usize, f64)>, Relation, f64);

/// `maximize objective·x` subject to `rows`, `x >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    // row-major, `width` columns, last column is the right-hand side
    cells: Vec<f64>,
    width: usize,
    rows: usize,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize, cost: &mut [f64]) {
        let w = self.width;
        let p = self.at(row, col);
        for c in 0..w {
            self.cells[row * w + c] /= p;
        }
        self.cells[row * w + col] = 1.0;
        let (before, rest) = self.cells.split_at_mut(row * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        let eliminate = |target: &mut [f64]| {
            let f = target[col];
            if f != 0.0 {
                for (t, &pr) in target.iter_mut().zip(pivot_row.iter()) {
                    *t -= f * pr;
                }
                target[col] = 0.0;
            }
        };
        for chunk in before.chunks_mut(w) {
            eliminate(chunk);
        }
        for chunk in after.chunks_mut(w) {
            eliminate(chunk);
        }
        eliminate(cost);
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Maximizes the objective whose reduced costs are in `cost` (same width
    /// as a tableau row; the last entry holds minus the objective value).
    /// Only columns with `allowed[c]` may enter.
    fn optimize(&mut self, cost: &mut [f64], allowed: &[bool], max_pivots: usize) -> Result<(), SimplexError> {
        let ncols = self.width - 1;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = COST_TOL;
            for c in 0..ncols {
                if !allowed[c] || cost[c] <= COST_TOL {
                    continue;
                }
                if bland {
                    entering = Some(c);
                    break;
                }
                if cost[c] > best {
                    best = cost[c];
                    entering = Some(c);
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio);
                        if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((row, ratio)) = leaving else {
                return Err(SimplexError::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            if self.pivots >= max_pivots {
                return Err(SimplexError::IterationLimit(max_pivots));
            }
            self.pivot(row, col, cost);
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(Constraint { coeffs, relation, rhs });
    }

    /// Dense copy of the constraint matrix, one row per constraint.
    pub fn dense_matrix(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.num_vars];
                for &(j, a) in &row.coeffs {
                    dense[j] += a;
                }
                dense
            })
            .collect()
    }

    pub fn solve(&self) -> Result<LpSolution, SimplexError> {
        let n = self.num_vars;
        let m = self.rows.len();

        // normalise to rhs >= 0
        let rows: Vec<SparseRow> = self
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let flipped = match r.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (r.coeffs.iter().map(|&(j, a)| (j, -a)).collect(), flipped, -r.rhs)
                } else {
                    (r.coeffs.clone(), r.relation, r.rhs)
                }
            })
            .collect();

        let slack_count = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let ncols = n + slack_count + artificial_count;
        let width = ncols + 1;
        let mut tab = Tableau { cells: vec![0.0; m * width], width, rows: m, basis: vec![0; m], pivots: 0 };
        let mut is_artificial = vec![false; ncols];
        let mut next_slack = n;
        let mut next_art = n + slack_count;
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            for &(j, a) in coeffs {
                tab.cells[i * width + j] += a;
            }
            tab.cells[i * width + ncols] = *rhs;
            match rel {
                Relation::Le => {
                    tab.cells[i * width + next_slack] = 1.0;
                    tab.basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    tab.cells[i * width + next_slack] = -1.0;
                    next_slack += 1;
                    tab.cells[i * width + next_art] = 1.0;
                    is_artificial[next_art] = true;
                    tab.basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    tab.cells[i * width + next_art] = 1.0;
                    is_artificial[next_art] = true;
                    tab.basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let max_pivots = 50 * (m + ncols) + 1000;

        // phase one: maximize -sum(artificials)
        if artificial_count > 0 {
            let mut cost = vec![0.0; width];
            for i in 0..m {
                if is_artificial[tab.basis[i]] {
                    for (c, v) in cost.iter_mut().enumerate() {
                        *v += tab.at(i, c);
                    }
                }
            }
            for c in 0..ncols {
                if is_artificial[c] {
                    cost[c] = 0.0;
                }
            }
            let allowed = vec![true; ncols];
            tab.optimize(&mut cost, &allowed, max_pivots)?;
            let residual: f64 = (0..m).filter(|&i| is_artificial[tab.basis[i]]).map(|i| tab.rhs(i)).sum();
            let scale = 1.0 + rows.iter().map(|r| r.2).fold(0.0, f64::max);
            if residual > FEAS_TOL * scale {
                return Err(SimplexError::Infeasible(residual));
            }
            // drive zero-level artificials out of the basis where possible
            let mut scratch = vec![0.0; width];
            for i in 0..m {
                if !is_artificial[tab.basis[i]] {
                    continue;
                }
                let col = (0..ncols).filter(|&c| !is_artificial[c]).find(|&c| tab.at(i, c).abs() > PIVOT_TOL);
                if let Some(col) = col {
                    tab.pivot(i, col, &mut scratch);
                }
                // otherwise the row is redundant; its artificial stays basic at zero
            }
        }

        // phase two
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        for i in 0..m {
            let b = tab.basis[i];
            let cb = if b < n { self.objective[b] } else { 0.0 };
            if cb != 0.0 {
                for (c, v) in cost.iter_mut().enumerate() {
                    *v -= cb * tab.at(i, c);
                }
            }
        }
        let allowed: Vec<bool> = is_artificial.iter().map(|a| !a).collect();
        tab.optimize(&mut cost, &allowed, max_pivots)?;

        let mut x = vec![0.0; n];
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, objective, pivots: tab.pivots })
    }
}
