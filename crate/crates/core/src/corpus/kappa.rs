//! Fleiss' kappa for `n` raters assigning `N` items to `k` categories.
//!
//! With `n_ij` raters putting item `i` in category `j`:
//!
//! ```text
//! P_i  = sum_j n_ij (n_ij - 1) / (n (n - 1))      P_o = mean_i P_i
//! p_j  = sum_i n_ij / (N n)                       P_e = sum_j p_j^2
//! kappa = (P_o - P_e) / (1 - P_e)
//! ```
//!
//! The ratio is evaluated in exact integer arithmetic and rounded once.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationMatrix {
    counts: Vec<u32>,
    items: usize,
    categories: usize,
    raters: u32,
}

impl AnnotationMatrix {
    /// Every row must sum to the same rater count `n >= 2`.
    pub fn new(rows: &[Vec<u32>]) -> Result<Self> {
        let items = rows.len();
        if items == 0 {
            return Err(Error::Argument("annotation matrix has no items".into()));
        }
        let categories = rows[0].len();
        if categories == 0 {
            return Err(Error::Argument("annotation matrix has no categories".into()));
        }
        let raters: u32 = rows[0].iter().sum();
        if raters < 2 {
            return Err(Error::Argument(format!("need at least 2 raters per item, found {raters}")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != categories {
                return Err(Error::Argument(format!("row {i} has {} categories, expected {categories}", row.len())));
            }
            let s: u32 = row.iter().sum();
            if s != raters {
                return Err(Error::Argument(format!("row {i} sums to {s}, expected {raters}")));
            }
        }
        Ok(Self { counts: rows.concat(), items, categories, raters })
    }

    /// Parses whitespace- or comma-separated integer rows; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<u32>().map_err(|_| Error::Data(format!("bad count `{t}`"))))
                    .collect::<Result<Vec<u32>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&rows)
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn raters(&self) -> u32 {
        self.raters
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.counts[i * self.categories..(i + 1) * self.categories]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaBreakdown {
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub kappa: f64,
}

impl KappaBreakdown {
    pub fn compute(m: &AnnotationMatrix) -> Result<Self> {
        let n = m.raters as i128;
        let big_n = m.items as i128;
        let mut pair_agreements: i128 = 0;
        let mut column = vec![0i128; m.categories];
        for i in 0..m.items {
            for (j, &c) in m.row(i).iter().enumerate() {
                let c = c as i128;
                pair_agreements += c * (c - 1);
                column[j] += c;
            }
        }
        let total = big_n * n;
        if column.iter().any(|&c| c == total) {
            return Err(Error::UndefinedKappa);
        }
        let sum_sq: i128 = column.iter().map(|c| c * c).sum();
        // P_o = A / D1, P_e = B / D2
        let d1 = big_n * n * (n - 1);
        let d2 = total * total;
        let num = pair_agreements * d2 - sum_sq * d1;
        let den = d1 * (d2 - sum_sq);
        Ok(Self {
            observed_agreement: pair_agreements as f64 / d1 as f64,
            expected_agreement: sum_sq as f64 / d2 as f64,
            kappa: num as f64 / den as f64,
        })
    }
}

pub fn fleiss_kappa(matrix: &AnnotationMatrix) -> Result<f64> {
    KappaBreakdown::compute(matrix).map(|b| b.kappa)
}
