//! Glue metrics: metrics on a disjoint union X ⊔ Y extending d_X and d_Y.
//!
//! A glue metric is stored as its cross-distance block; the restrictions to
//! X and Y are the spaces' own matrices by construction. Composition is the
//! min-plus product of cross blocks, the adjoint is the transpose, and the
//! canonical self-glue d⁰ on two copies of X is `d_X + 1`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{FiniteMetricSpace, ValidationReport, Violation, ViolationKind};
use crate::TOL;

/// A metric on X ⊔ Y restricting to the given spaces, represented by its
/// |X| × |Y| cross block.
#[derive(Debug, Clone, PartialEq)]
pub struct GlueMetric {
    left: Arc<FiniteMetricSpace>,
    right: Arc<FiniteMetricSpace>,
    cross: Vec<f64>,
}

fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl GlueMetric {
    /// Build a glue metric from a row-major (by X) cross matrix.
    ///
    /// Structural checks only; positivity and the four coupling
    /// inequalities are reported by [`GlueMetric::validate`].
    pub fn new(
        left: Arc<FiniteMetricSpace>,
        right: Arc<FiniteMetricSpace>,
        cross: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if cross.len() != left.len() {
            return Err(Error::DimensionMismatch {
                what: "cross matrix rows",
                expected: left.len(),
                got: cross.len(),
            });
        }
        let mut flat = Vec::with_capacity(left.len() * right.len());
        for (i, row) in cross.iter().enumerate() {
            if row.len() != right.len() {
                return Err(Error::DimensionMismatch {
                    what: "cross matrix row length",
                    expected: right.len(),
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry {
                        what: "cross matrix",
                        row: i,
                        col: j,
                    });
                }
                flat.push(v);
            }
        }
        Ok(Self {
            left,
            right,
            cross: flat,
        })
    }

    pub(crate) fn from_flat(
        left: Arc<FiniteMetricSpace>,
        right: Arc<FiniteMetricSpace>,
        cross: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(cross.len(), left.len() * right.len());
        Self { left, right, cross }
    }

    pub fn left(&self) -> &Arc<FiniteMetricSpace> {
        &self.left
    }

    pub fn right(&self) -> &Arc<FiniteMetricSpace> {
        &self.right
    }

    /// Cross distance from point `i` of X to point `j` of Y.
    #[inline]
    pub fn cross(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.right.len() + j]
    }

    pub fn cross_rows(&self) -> Vec<Vec<f64>> {
        (0..self.left.len())
            .map(|i| (0..self.right.len()).map(|j| self.cross(i, j)).collect())
            .collect()
    }

    pub fn max_cross(&self) -> f64 {
        self.cross.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_cross(&self) -> f64 {
        self.cross.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest entrywise |self - other| between glues on the same spaces.
    pub fn max_abs_diff(&self, other: &GlueMetric) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .cross
            .iter()
            .zip(&other.cross)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn check_same_shape(&self, other: &GlueMetric) -> Result<()> {
        if !same_space(&self.left, &other.left) || !same_space(&self.right, &other.right) {
            return Err(Error::SpaceMismatch {
                context: "glue metrics live on different disjoint unions".into(),
            });
        }
        Ok(())
    }

    /// Check that the cross block really extends d_X and d_Y to a metric on
    /// the union: strictly positive cross distances and the four coupling
    /// inequalities, every violation witnessed.
    pub fn validate(&self) -> ValidationReport {
        let nx = self.left.len();
        let ny = self.right.len();
        let mut report = ValidationReport::new(self.min_cross());
        for x in 0..nx {
            for y in 0..ny {
                if self.cross(x, y) <= 0.0 {
                    report.push(Violation {
                        kind: ViolationKind::CrossPositivity,
                        witness: vec![self.left.label(x).into(), self.right.label(y).into()],
                        lhs: self.cross(x, y),
                        rhs: 0.0,
                    });
                }
            }
        }
        // d_X(x,x') <= cross(x,y) + cross(x',y)
        for x in 0..nx {
            for xp in (x + 1)..nx {
                for y in 0..ny {
                    let lhs = self.left.dist(x, xp);
                    let rhs = self.cross(x, y) + self.cross(xp, y);
                    if lhs > rhs + TOL {
                        report.push(Violation {
                            kind: ViolationKind::LeftTriangle,
                            witness: vec![
                                self.left.label(x).into(),
                                self.left.label(xp).into(),
                                self.right.label(y).into(),
                            ],
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        // d_Y(y,y') <= cross(x,y) + cross(x,y')
        for y in 0..ny {
            for yp in (y + 1)..ny {
                for x in 0..nx {
                    let lhs = self.right.dist(y, yp);
                    let rhs = self.cross(x, y) + self.cross(x, yp);
                    if lhs > rhs + TOL {
                        report.push(Violation {
                            kind: ViolationKind::RightTriangle,
                            witness: vec![
                                self.right.label(y).into(),
                                self.right.label(yp).into(),
                                self.left.label(x).into(),
                            ],
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        // cross(x,y) <= d_X(x,x') + cross(x',y)
        for x in 0..nx {
            for y in 0..ny {
                let lhs = self.cross(x, y);
                for xp in 0..nx {
                    if xp == x {
                        continue;
                    }
                    let rhs = self.left.dist(x, xp) + self.cross(xp, y);
                    if lhs > rhs + TOL {
                        report.push(Violation {
                            kind: ViolationKind::CrossViaLeft,
                            witness: vec![
                                self.left.label(x).into(),
                                self.right.label(y).into(),
                                self.left.label(xp).into(),
                            ],
                            lhs,
                            rhs,
                        });
                    }
                }
                // cross(x,y) <= cross(x,y') + d_Y(y',y)
                for yp in 0..ny {
                    if yp == y {
                        continue;
                    }
                    let rhs = self.cross(x, yp) + self.right.dist(yp, y);
                    if lhs > rhs + TOL {
                        report.push(Violation {
                            kind: ViolationKind::CrossViaRight,
                            witness: vec![
                                self.left.label(x).into(),
                                self.right.label(y).into(),
                                self.right.label(yp).into(),
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

    /// Min-plus composition: `self ∈ D(X,Y)` with `other ∈ D(Y,Z)` gives
    /// the metric on X ⊔ Z with
    /// `cross(x,z) = min_y (self.cross(x,y) + other.cross(y,z))`.
    ///
    /// The middle spaces must agree exactly and be nonempty.
    pub fn compose(&self, other: &GlueMetric) -> Result<GlueMetric> {
        if !same_space(&self.right, &other.left) {
            return Err(Error::SpaceMismatch {
                context: "middle spaces of a composition differ".into(),
            });
        }
        let ny = self.right.len();
        if ny == 0 {
            return Err(Error::EmptyMiddleSpace);
        }
        let nx = self.left.len();
        let nz = other.right.len();
        let mut cross = vec![0.0; nx * nz];
        for x in 0..nx {
            for z in 0..nz {
                let mut best = f64::INFINITY;
                for y in 0..ny {
                    let v = self.cross(x, y) + other.cross(y, z);
                    if v < best {
                        best = v;
                    }
                }
                cross[x * nz + z] = best;
            }
        }
        Ok(GlueMetric::from_flat(
            self.left.clone(),
            other.right.clone(),
            cross,
        ))
    }

    /// The same metric viewed as a morphism from Y to X: spaces swapped,
    /// cross block transposed. An exact involution.
    pub fn adjoint(&self) -> GlueMetric {
        let nx = self.left.len();
        let ny = self.right.len();
        let mut cross = vec![0.0; ny * nx];
        for x in 0..nx {
            for y in 0..ny {
                cross[y * nx + x] = self.cross(x, y);
            }
        }
        GlueMetric::from_flat(self.right.clone(), self.left.clone(), cross)
    }

    /// Pointwise maximum of two glue metrics on the same spaces. The result
    /// is again a glue metric and is a lower bound of both arguments in the
    /// domination order.
    pub fn meet(&self, other: &GlueMetric) -> Result<GlueMetric> {
        self.check_same_shape(other)?;
        let cross = self
            .cross
            .iter()
            .zip(&other.cross)
            .map(|(a, b)| a.max(*b))
            .collect();
        Ok(GlueMetric::from_flat(
            self.left.clone(),
            self.right.clone(),
            cross,
        ))
    }

    /// Shift every cross entry by a constant (useful for building test
    /// variants; positive shifts preserve validity).
    pub fn shifted(&self, delta: f64) -> GlueMetric {
        GlueMetric::from_flat(
            self.left.clone(),
            self.right.clone(),
            self.cross.iter().map(|v| v + delta).collect(),
        )
    }
}

/// The canonical glue metric d⁰ on two copies of a space:
/// `cross(x1, x2') = d_X(x1, x2) + 1`. Acts as the identity morphism.
pub fn identity_glue(space: &Arc<FiniteMetricSpace>) -> GlueMetric {
    let n = space.len();
    let mut cross = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cross[i * n + j] = space.dist(i, j) + 1.0;
        }
    }
    GlueMetric::from_flat(space.clone(), space.clone(), cross)
}
