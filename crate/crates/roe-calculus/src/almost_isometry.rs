//! Almost isometries, partial almost isometries, and the glue metrics they
//! induce.
//!
//! A map with defect C distorts every distance by at most the additive
//! constant C. Such a map f with support A induces a metric on X ⊔ Y via
//! `d(x,y) = min over x̃ in A of d_X(x,x̃) + C/2 + d_Y(f(x̃),y)`; the
//! constant used must dominate the defect, and for genuine isometries a
//! positive floor keeps the two copies separated.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::glue::{identity_glue, GlueMetric};
use crate::space::FiniteMetricSpace;
use crate::TOL;

/// A map f: A -> Y defined on a nonempty subset A of X.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMap {
    domain: Arc<FiniteMetricSpace>,
    codomain: Arc<FiniteMetricSpace>,
    assignment: BTreeMap<usize, usize>,
}

/// The almost-isometry defect of a map and a pair attaining it.
#[derive(Debug, Clone, Serialize)]
pub struct DefectReport {
    pub defect: f64,
    pub witness: (String, String),
}

impl PartialMap {
    /// Build a partial map from (domain index, codomain index) pairs.
    pub fn new(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<FiniteMetricSpace>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for (x, y) in pairs {
            if x >= domain.len() {
                return Err(Error::InvalidParameter {
                    what: "support point",
                    message: format!("index {x} out of bounds for domain of size {}", domain.len()),
                });
            }
            if y >= codomain.len() {
                return Err(Error::InvalidParameter {
                    what: "image point",
                    message: format!(
                        "index {y} out of bounds for codomain of size {}",
                        codomain.len()
                    ),
                });
            }
            assignment.insert(x, y);
        }
        if assignment.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(Self {
            domain,
            codomain,
            assignment,
        })
    }

    /// Build a map from labeled pairs.
    pub fn from_labels<'a>(
        domain: Arc<FiniteMetricSpace>,
        codomain: Arc<FiniteMetricSpace>,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut indexed = Vec::new();
        for (x, y) in pairs {
            let xi = domain
                .position(x)
                .ok_or_else(|| Error::UnknownLabel { label: x.into() })?;
            let yi = codomain
                .position(y)
                .ok_or_else(|| Error::UnknownLabel { label: y.into() })?;
            indexed.push((xi, yi));
        }
        Self::new(domain, codomain, indexed)
    }

    /// The identity map of a space onto a second copy of itself.
    pub fn identity(space: &Arc<FiniteMetricSpace>) -> Result<Self> {
        Self::new(space.clone(), space.clone(), (0..space.len()).map(|i| (i, i)))
    }

    pub fn domain(&self) -> &Arc<FiniteMetricSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<FiniteMetricSpace> {
        &self.codomain
    }

    /// Support indices in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignment.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.assignment.len()
    }

    /// Image of a support point; `None` off the support.
    pub fn apply(&self, x: usize) -> Option<usize> {
        self.assignment.get(&x).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment.iter().map(|(&x, &y)| (x, y))
    }

    /// Whether the map is defined on all of X.
    pub fn is_total(&self) -> bool {
        self.assignment.len() == self.domain.len()
    }

    /// Largest additive distance distortion over support pairs, with a
    /// witness pair attaining it. A singleton support has defect 0 with the
    /// degenerate witness (x, x).
    pub fn defect(&self) -> DefectReport {
        let mut best = 0.0;
        let first = *self.assignment.keys().next().expect("support is nonempty");
        let mut witness = (first, first);
        for (&x, &fx) in &self.assignment {
            for (&xp, &fxp) in self.assignment.range(x..) {
                let gap = (self.codomain.dist(fx, fxp) - self.domain.dist(x, xp)).abs();
                if gap > best {
                    best = gap;
                    witness = (x, xp);
                }
            }
        }
        DefectReport {
            defect: best,
            witness: (
                self.domain.label(witness.0).into(),
                self.domain.label(witness.1).into(),
            ),
        }
    }

    /// Composition with a following map: support is the part of this
    /// support that lands inside `next`'s support.
    pub fn compose(&self, next: &PartialMap) -> Result<PartialMap> {
        if self.codomain != next.domain {
            return Err(Error::SpaceMismatch {
                context: "map composition: codomain of the first differs from domain of the second"
                    .into(),
            });
        }
        let pairs: Vec<(usize, usize)> = self
            .assignment
            .iter()
            .filter_map(|(&x, &y)| next.apply(y).map(|z| (x, z)))
            .collect();
        if pairs.is_empty() {
            return Err(Error::EmptyComposite);
        }
        PartialMap::new(self.domain.clone(), next.codomain.clone(), pairs)
    }

    /// The induced glue metric with an explicit constant, which must
    /// dominate the defect and be positive.
    pub fn glue_with_constant(&self, constant: f64) -> Result<GlueMetric> {
        let defect = self.defect().defect;
        if constant.is_nan() || constant <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "constant",
                message: format!("must be positive, got {constant}"),
            });
        }
        if constant < defect - TOL {
            return Err(Error::InvalidParameter {
                what: "constant",
                message: format!("must dominate the defect {defect}, got {constant}"),
            });
        }
        let nx = self.domain.len();
        let ny = self.codomain.len();
        let half = constant / 2.0;
        let mut cross = vec![0.0; nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                let mut best = f64::INFINITY;
                for (&a, &fa) in &self.assignment {
                    let v = self.domain.dist(x, a) + half + self.codomain.dist(fa, y);
                    if v < best {
                        best = v;
                    }
                }
                cross[x * ny + y] = best;
            }
        }
        Ok(GlueMetric::from_flat(
            self.domain.clone(),
            self.codomain.clone(),
            cross,
        ))
    }

    /// The induced glue metric d_f with the effective constant
    /// `max(defect, epsilon)`. The floor keeps cross distances positive
    /// when the map is a genuine isometry; with the default epsilon 1 the
    /// identity map induces d⁰ shifted down by 1/2.
    pub fn glue(&self, epsilon: f64) -> Result<GlueMetric> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "epsilon",
                message: format!("must be positive, got {epsilon}"),
            });
        }
        let c_eff = self.defect().defect.max(epsilon);
        self.glue_with_constant(c_eff)
    }

    /// The effective constant used by [`PartialMap::glue`].
    pub fn effective_constant(&self, epsilon: f64) -> f64 {
        self.defect().defect.max(epsilon)
    }
}

/// Comparison of the two routes from maps to metrics: composing the glue
/// metrics versus gluing the composed map.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    /// Constant used for the composite's glue: the sum of the two
    /// effective constants, which dominates the composite defect.
    pub composite_constant: f64,
    /// max over (x,z) of d_g∘d_f - d_{g∘f}; nonpositive when the check
    /// passes.
    pub lower_gap_max: f64,
    /// max over (x,z) of d_{g∘f} - d_g∘d_f; the measured sandwich width.
    pub upper_gap_max: f64,
    /// min over (x,z) of d_{g∘f} - d_g∘d_f.
    pub upper_gap_min: f64,
    pub passes: bool,
    /// When the composite is a self-map: sup over its support of
    /// d_X(x, g(f(x))), a cheap almost-inverse diagnostic.
    pub almost_inverse_sup: Option<f64>,
}

/// Check the sandwich `d_g∘d_f <= d_{g∘f} <= d_g∘d_f + C` for two
/// composable maps, building the composite's glue with the accumulated
/// constant so the lower inequality is exact.
pub fn sandwich_check(f: &PartialMap, g: &PartialMap, epsilon: f64) -> Result<SandwichReport> {
    let composite = f.compose(g)?;
    let cf = f.effective_constant(epsilon);
    let cg = g.effective_constant(epsilon);
    let composed_glues = f.glue_with_constant(cf)?.compose(&g.glue_with_constant(cg)?)?;
    let composite_glue = composite.glue_with_constant(cf + cg)?;

    let nx = composite.domain().len();
    let nz = composite.codomain().len();
    let mut lower_gap_max = f64::NEG_INFINITY;
    let mut upper_gap_max = f64::NEG_INFINITY;
    let mut upper_gap_min = f64::INFINITY;
    for x in 0..nx {
        for z in 0..nz {
            let gap = composite_glue.cross(x, z) - composed_glues.cross(x, z);
            lower_gap_max = lower_gap_max.max(-gap);
            upper_gap_max = upper_gap_max.max(gap);
            upper_gap_min = upper_gap_min.min(gap);
        }
    }

    let almost_inverse_sup = if composite.domain() == composite.codomain() {
        Some(
            composite
                .pairs()
                .map(|(x, z)| composite.domain().dist(x, z))
                .fold(0.0, f64::max),
        )
    } else {
        None
    };

    Ok(SandwichReport {
        composite_constant: cf + cg,
        lower_gap_max,
        upper_gap_max,
        upper_gap_min,
        passes: lower_gap_max <= TOL,
        almost_inverse_sup,
    })
}

/// Result of trying to read a map back off a glue metric.
#[derive(Debug, Clone)]
pub enum ExtractOutcome {
    /// The nearest-point map on the points that have a partner within the
    /// bound.
    Map(PartialMap),
    /// No point has a partner within the bound; the witness is the first
    /// point with its least cross distance (None only for an empty left
    /// space).
    Failure { witness: Option<(String, f64)> },
}

/// Extract the map `x -> nearest y` restricted to points whose nearest
/// cross distance is within `bound`. Nearest-point ties break to the
/// smaller codomain index.
pub fn extract_close_map(glue: &GlueMetric, bound: f64) -> ExtractOutcome {
    let nx = glue.left().len();
    let ny = glue.right().len();
    let mut pairs = Vec::new();
    let mut first_miss: Option<(String, f64)> = None;
    for x in 0..nx {
        let mut best = f64::INFINITY;
        let mut best_y = 0;
        for y in 0..ny {
            let v = glue.cross(x, y);
            if v < best - TOL {
                best = v;
                best_y = y;
            }
        }
        if ny > 0 && best <= bound + TOL {
            pairs.push((x, best_y));
        } else if first_miss.is_none() {
            first_miss = Some((glue.left().label(x).into(), best));
        }
    }
    if pairs.is_empty() {
        return ExtractOutcome::Failure {
            witness: first_miss,
        };
    }
    ExtractOutcome::Map(
        PartialMap::new(glue.left().clone(), glue.right().clone(), pairs)
            .expect("pairs are nonempty and in bounds"),
    )
}

/// Comparison of a self-glue against d⁰ using the diagonal bound
/// `L = max_x cross(x, x')`: a valid glue satisfies
/// `cross <= d⁰ + (L - 1)` and `d⁰ <= cross + (L + 1)` pointwise.
#[derive(Debug, Clone, Serialize)]
pub struct NearIdentityReport {
    /// Largest diagonal cross distance.
    pub l: f64,
    /// min over pairs of (d⁰ + L - 1) - cross.
    pub slack_upper: f64,
    /// min over pairs of (cross + L + 1) - d⁰.
    pub slack_lower: f64,
    pub ok: bool,
}

/// Check whether a glue on two copies of the same space is uniformly close
/// to the identity glue d⁰, via the diagonal bound L.
pub fn near_identity_check(glue: &GlueMetric) -> Result<NearIdentityReport> {
    if glue.left() != glue.right() {
        return Err(Error::SpaceMismatch {
            context: "near-identity check needs a glue on two copies of one space".into(),
        });
    }
    let n = glue.left().len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            what: "glue",
            message: "near-identity check needs a nonempty space".into(),
        });
    }
    let d0 = identity_glue(glue.left());
    let l = (0..n).map(|x| glue.cross(x, x)).fold(0.0, f64::max);
    let mut slack_upper = f64::INFINITY;
    let mut slack_lower = f64::INFINITY;
    for x in 0..n {
        for y in 0..n {
            slack_upper = slack_upper.min(d0.cross(x, y) + l - 1.0 - glue.cross(x, y));
            slack_lower = slack_lower.min(glue.cross(x, y) + l + 1.0 - d0.cross(x, y));
        }
    }
    Ok(NearIdentityReport {
        l,
        slack_upper,
        slack_lower,
        ok: slack_upper >= -TOL && slack_lower >= -TOL,
    })
}
