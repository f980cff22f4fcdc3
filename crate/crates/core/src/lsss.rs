// SPDX-License-Identifier: Apache-2.0

//! Linear secret sharing matrices compiled from [`PolicyAst`] trees.
//!
//! Uses the vector-labeling compilation for AND/OR formulas: OR copies the
//! parent label to both children, AND splits it into `v || 1` and
//! `0..0 || -1` on a fresh coordinate. An attribute set is authorized iff
//! `(1, 0, ..., 0)` lies in the span of its rows.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::field::Scalar;
use crate::policy::PolicyAst;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LsssError {
    #[error("attribute set does not satisfy the access structure")]
    Unsatisfiable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LsssMatrix {
    rows: Vec<Vec<Scalar>>,
    rho: Vec<String>,
    width: usize,
}

impl LsssMatrix {
    /// Builds a matrix from raw parts, checking shape invariants.
    pub fn from_parts(rows: Vec<Vec<Scalar>>, rho: Vec<String>) -> Option<LsssMatrix> {
        let width = rows.first()?.len();
        if width == 0 || rows.len() != rho.len() || rows.iter().any(|r| r.len() != width) {
            return None;
        }
        Some(LsssMatrix { rows, rho, width })
    }

    pub fn rows(&self) -> &[Vec<Scalar>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.rows[i]
    }

    pub fn rho(&self, i: usize) -> &str {
        &self.rho[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.rho
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Shares `v . row_i` for each row.
    pub fn share(&self, v: &[Scalar]) -> Vec<Scalar> {
        debug_assert_eq!(v.len(), self.width);
        self.rows.iter().map(|row| row.iter().zip(v).map(|(&m, &x)| m * x).sum()).collect()
    }

    pub fn satisfies<S>(&self, attrs: &BTreeSet<S>) -> bool
    where
        S: Ord + std::borrow::Borrow<str>,
    {
        self.reconstruct_coeffs(attrs).is_ok()
    }

    /// Coefficients `w_i` with `sum w_i * row_i = (1, 0, ..., 0)` over the rows
    /// whose label is in `attrs`. Rows with a zero coefficient are omitted.
    ///
    /// Gauss-Jordan elimination; candidate rows are taken in ascending index
    /// order and the first usable pivot wins, so output is deterministic.
    pub fn reconstruct_coeffs<S>(&self, attrs: &BTreeSet<S>) -> Result<BTreeMap<usize, Scalar>, LsssError>
    where
        S: Ord + std::borrow::Borrow<str>,
    {
        let selected: Vec<usize> = (0..self.rows.len()).filter(|&i| attrs.contains(self.rho[i].as_str())).collect();
        if selected.is_empty() {
            return Err(LsssError::Unsatisfiable);
        }
        let k = selected.len();
        let n = self.width;

        // equation j: sum_col rows[selected[col]][j] * w_col = [j == 0]
        let mut eq: Vec<Vec<Scalar>> = (0..n)
            .map(|j| {
                let mut line: Vec<Scalar> = selected.iter().map(|&i| self.rows[i][j]).collect();
                line.push(if j == 0 { Scalar::ONE } else { Scalar::ZERO });
                line
            })
            .collect();

        let mut pivot_of_col = vec![None; k];
        let mut next_eq = 0;
        for col in 0..k {
            if next_eq == n {
                break;
            }
            let Some(p) = (next_eq..n).find(|&j| !eq[j][col].is_zero()) else {
                continue;
            };
            eq.swap(next_eq, p);
            let inv = eq[next_eq][col].inverse().expect("nonzero pivot");
            for x in eq[next_eq].iter_mut() {
                *x *= inv;
            }
            let pivot_line = eq[next_eq].clone();
            for (j, line) in eq.iter_mut().enumerate() {
                if j == next_eq || line[col].is_zero() {
                    continue;
                }
                let f = line[col];
                for (x, &pv) in line.iter_mut().zip(&pivot_line).skip(col) {
                    *x -= f * pv;
                }
            }
            pivot_of_col[col] = Some(next_eq);
            next_eq += 1;
        }

        // leftover equations are all-zero on the left; their rhs must be zero
        if eq[next_eq..].iter().any(|line| !line[k].is_zero()) {
            return Err(LsssError::Unsatisfiable);
        }

        let mut out = BTreeMap::new();
        for (col, pivot) in pivot_of_col.iter().enumerate() {
            if let Some(j) = *pivot {
                let w = eq[j][k];
                if !w.is_zero() {
                    out.insert(selected[col], w);
                }
            }
        }
        Ok(out)
    }
}

/// Compiles a policy tree into its LSSS matrix.
pub fn to_lsss(ast: &PolicyAst) -> LsssMatrix {
    let mut counter = 1usize;
    let mut leaves: Vec<(String, Vec<Scalar>)> = Vec::new();
    label(ast, vec![Scalar::ONE], &mut counter, &mut leaves);
    let width = counter;
    let (rho, rows) = leaves
        .into_iter()
        .map(|(name, mut v)| {
            v.resize(width, Scalar::ZERO);
            (name, v)
        })
        .unzip();
    LsssMatrix { rows, rho, width }
}

fn label(node: &PolicyAst, v: Vec<Scalar>, counter: &mut usize, out: &mut Vec<(String, Vec<Scalar>)>) {
    match node {
        PolicyAst::Attr(name) => out.push((name.clone(), v)),
        PolicyAst::Or(l, r) => {
            label(l, v.clone(), counter, out);
            label(r, v, counter, out);
        }
        PolicyAst::And(l, r) => {
            let c = *counter;
            let mut left = v;
            left.resize(c, Scalar::ZERO);
            left.push(Scalar::ONE);
            let mut right = vec![Scalar::ZERO; c];
            right.push(-Scalar::ONE);
            *counter += 1;
            label(l, left, counter, out);
            label(r, right, counter, out);
        }
    }
}
