//! Finite metric spaces: labeled point sets with exact pairwise distances.
//!
//! A [`FiniteMetricSpace`] is the desk-scale stand-in for a discrete
//! countable metric space; all downstream structures (glue metrics,
//! operators) index into its ordered point list.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TOL;

/// Cap on stored violation witnesses per report.
pub const MAX_WITNESSES: usize = 100;

/// A finite metric space: an ordered list of labeled points and a dense
/// symmetric distance matrix.
///
/// Construction performs structural checks only (shape, finiteness,
/// non-negativity, label uniqueness). Whether the matrix is actually a
/// metric is a question for [`FiniteMetricSpace::validate`], which reports
/// violations instead of failing, so that generated or loaded data can be
/// diagnosed.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    points: Vec<String>,
    dist: Vec<f64>,
    index: HashMap<String, usize>,
}

impl FiniteMetricSpace {
    /// Build a space from labels and a row-major distance matrix.
    pub fn new(points: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Arc<Self>> {
        let n = points.len();
        if dist.len() != n {
            return Err(Error::DimensionMismatch {
                what: "distance matrix rows",
                expected: n,
                got: dist.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "distance matrix row length",
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry {
                        what: "distance matrix",
                        row: i,
                        col: j,
                    });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        what: "distance matrix",
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                flat.push(v);
            }
        }
        let mut index = HashMap::with_capacity(n);
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::DuplicateLabel { label: p.clone() });
            }
        }
        Ok(Arc::new(Self {
            points,
            dist: flat,
            index,
        }))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.points
    }

    /// Index of a label, if present.
    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Distance between points `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.points.len() + j]
    }

    /// Largest pairwise distance (0 for spaces with fewer than two points).
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points; infinite for fewer than
    /// two points.
    pub fn min_separation(&self) -> f64 {
        let n = self.len();
        let mut m = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.min(self.dist(i, j));
            }
        }
        m
    }

    /// Check the metric axioms and report every violation with a witness.
    ///
    /// Checked: zero diagonal, positivity between distinct points
    /// (discreteness), symmetry, and the triangle inequality over all
    /// ordered triples. The report stores at most [`MAX_WITNESSES`]
    /// witnesses but counts all violations.
    pub fn validate(&self) -> ValidationReport {
        let n = self.len();
        let mut report = ValidationReport::new(self.min_separation());
        for i in 0..n {
            let d = self.dist(i, i);
            if d != 0.0 {
                report.push(Violation {
                    kind: ViolationKind::Diagonal,
                    witness: vec![self.points[i].clone()],
                    lhs: d,
                    rhs: 0.0,
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.dist(i, j) <= 0.0 {
                    report.push(Violation {
                        kind: ViolationKind::Positivity,
                        witness: vec![self.points[i].clone(), self.points[j].clone()],
                        lhs: self.dist(i, j),
                        rhs: 0.0,
                    });
                }
                if (self.dist(i, j) - self.dist(j, i)).abs() > TOL {
                    report.push(Violation {
                        kind: ViolationKind::Symmetry,
                        witness: vec![self.points[i].clone(), self.points[j].clone()],
                        lhs: self.dist(i, j),
                        rhs: self.dist(j, i),
                    });
                }
            }
        }
        // Triangle over unordered end pairs {i, k} with every middle j.
        for i in 0..n {
            for k in (i + 1)..n {
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let lhs = self.dist(i, k);
                    let rhs = self.dist(i, j) + self.dist(j, k);
                    if lhs > rhs + TOL {
                        report.push(Violation {
                            kind: ViolationKind::Triangle,
                            witness: vec![
                                self.points[i].clone(),
                                self.points[j].clone(),
                                self.points[k].clone(),
                            ],
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        report
    }

    /// For each radius `R`, the largest ball cardinality
    /// `max_x |{p : d(x, p) <= R}|`.
    ///
    /// Radii must be strictly increasing.
    pub fn growth_function(&self, radii: &[f64]) -> Result<Vec<(f64, usize)>> {
        for w in radii.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter {
                    what: "radii",
                    message: format!("not strictly increasing at {} -> {}", w[0], w[1]),
                });
            }
        }
        let n = self.len();
        Ok(radii
            .iter()
            .map(|&r| {
                let best = (0..n)
                    .map(|x| (0..n).filter(|&p| self.dist(x, p) <= r + TOL).count())
                    .max()
                    .unwrap_or(0);
                (r, best)
            })
            .collect())
    }
}

/// Kinds of metric-axiom violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Nonzero self-distance.
    Diagonal,
    /// Zero or negative distance between distinct points.
    Positivity,
    /// Asymmetric entry pair.
    Symmetry,
    /// d(i,k) > d(i,j) + d(j,k).
    Triangle,
    /// Zero or negative cross distance in a glue metric.
    CrossPositivity,
    /// d_X(x,x') > cross(x,y) + cross(x',y).
    LeftTriangle,
    /// d_Y(y,y') > cross(x,y) + cross(x,y').
    RightTriangle,
    /// cross(x,y) > d_X(x,x') + cross(x',y).
    CrossViaLeft,
    /// cross(x,y) > cross(x,y') + d_Y(y',y).
    CrossViaRight,
}

/// One violation with its witness points and the two compared values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub witness: Vec<String>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of a validation scan. `ok` holds iff no violation was found;
/// `violations` stores the first [`MAX_WITNESSES`] witnesses while
/// `violation_count` counts them all.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    pub truncated: bool,
    pub min_separation: f64,
}

impl ValidationReport {
    pub(crate) fn new(min_separation: f64) -> Self {
        Self {
            ok: true,
            violations: Vec::new(),
            violation_count: 0,
            truncated: false,
            min_separation,
        }
    }

    pub(crate) fn push(&mut self, v: Violation) {
        self.ok = false;
        self.violation_count += 1;
        if self.violations.len() < MAX_WITNESSES {
            self.violations.push(v);
        } else {
            self.truncated = true;
        }
    }
}
