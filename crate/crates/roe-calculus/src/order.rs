//! The domination order on glue metrics and its finite-scale diagnostics.
//!
//! A glue g is dominated by g' when finite propagation with respect to g
//! forces finite propagation with respect to g'. At finite scale this is
//! probed through domination profiles `h(R) = max{g'.cross : g.cross <= R}`
//! swept over a family of growing truncations: bounded profiles evidence
//! the order, per-index maxima that keep growing evidence its failure, and
//! everything else stays inconclusive. Equivalence is domination both
//! ways; idempotent and selfadjoint checks use uniform entrywise bounds
//! across the family, a checkable surrogate for bimodule equality.

use rayon::prelude::*;
use serde::Serialize;

use crate::almost_isometry::PartialMap;
use crate::error::{Error, Result};
use crate::family::MetricFamily;
use crate::glue::{identity_glue, GlueMetric};
use crate::matching::maximum_matching;
use crate::TOL;

/// Default growth threshold: the last value of a growing series must
/// exceed this multiple of the first.
pub const DEFAULT_GROWTH_THRESHOLD: f64 = 2.0;

/// Tail window used by the growth and stabilization rules.
const TAIL: usize = 3;

// ---------------------------------------------------------------------------
// Domination profiles
// ---------------------------------------------------------------------------

/// The step function h(R) = max{g'.cross(x,y) : g.cross(x,y) <= R} for one
/// pair of glues; `None` where no pair qualifies.
#[derive(Debug, Clone, Serialize)]
pub struct DominationProfile {
    pub radii: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// Direction tag "g -> g'": the condition is on g, the maximum over g'.
    pub direction: String,
}

/// Exact per-probe maxima by exhaustive scan over cross pairs.
pub fn domination_profile(
    g: &GlueMetric,
    g_prime: &GlueMetric,
    radii: &[f64],
) -> Result<DominationProfile> {
    if g.left() != g_prime.left() || g.right() != g_prime.right() {
        return Err(Error::SpaceMismatch {
            context: "domination profile needs glues on the same disjoint union".into(),
        });
    }
    let values = radii.iter().map(|&r| profile_value(g, g_prime, r)).collect();
    Ok(DominationProfile {
        radii: radii.to_vec(),
        values,
        direction: "g -> g'".into(),
    })
}

fn profile_value(g: &GlueMetric, g_prime: &GlueMetric, radius: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    for x in 0..g.left().len() {
        for y in 0..g.right().len() {
            if g.cross(x, y) <= radius + TOL {
                let v = g_prime.cross(x, y);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

/// Probe radii {1, 2, 4, 8, 16} clipped to the family's largest cross
/// distance.
// TODO: adaptive probe selection (bisect on the first inconclusive probe)
// would tighten verdicts on slowly stabilizing families.
pub fn default_radii(family: &MetricFamily) -> Result<Vec<f64>> {
    let mut max_cross = 0.0f64;
    for (_, g) in family.members()? {
        max_cross = max_cross.max(g.max_cross());
    }
    let mut radii: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0]
        .into_iter()
        .filter(|&r| r <= max_cross)
        .collect();
    if radii.is_empty() {
        radii.push(max_cross.max(1.0));
    }
    Ok(radii)
}

// ---------------------------------------------------------------------------
// Order verdicts over families
// ---------------------------------------------------------------------------

/// Verdict of an order check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderRelation {
    /// Every probe's per-index series stabilized inside the sweep.
    HoldsBounded,
    /// Some probe's series keeps growing at the end of the sweep and has
    /// passed the growth threshold.
    FailsGrowing,
    /// The sweep is too short or too ambiguous to decide.
    Inconclusive,
}

/// Per-probe least-squares slope and the raw profile table backing a
/// verdict.
#[derive(Debug, Clone, Serialize)]
pub struct OrderEvidence {
    pub radii: Vec<f64>,
    /// One row per family index: (index, h_n(R) per probe).
    pub per_index: Vec<(usize, Vec<Option<f64>>)>,
    /// Least-squares slope of each probe's series against the index.
    pub per_probe_slope: Vec<Option<f64>>,
    /// Per-index maximum over probes and its fitted slope.
    pub maxima: Vec<(usize, Option<f64>)>,
    pub maxima_slope: Option<f64>,
    /// The first probe that triggered the growth rule, if any.
    pub growing_probe: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderVerdict {
    pub relation: OrderRelation,
    pub evidence: OrderEvidence,
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < TOL {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn tail_growing(values: &[f64], threshold: f64) -> bool {
    if values.len() < TAIL {
        return false;
    }
    let tail = &values[values.len() - TAIL..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0] + TOL);
    increasing && *values.last().unwrap() > threshold * values[0]
}

fn tail_stable(values: &[f64]) -> bool {
    if values.len() < TAIL {
        return false;
    }
    let tail = &values[values.len() - TAIL..];
    tail.iter().all(|v| (v - tail[0]).abs() <= TOL)
}

/// Check whether the first family is dominated by the second.
///
/// For each probe R the per-index series `h_n(R)` is scanned: if the last
/// three values of any probe strictly increase and the final value exceeds
/// `growth_threshold` times the first, the relation fails as growing; if
/// every probe with at least three finite values has stabilized, it holds
/// bounded; otherwise the sweep is inconclusive. Fewer than three indices
/// are always inconclusive.
pub fn order_check(
    family_g: &MetricFamily,
    family_g_prime: &MetricFamily,
    radii: &[f64],
    growth_threshold: f64,
) -> Result<OrderVerdict> {
    if family_g.indices() != family_g_prime.indices() {
        return Err(Error::InvalidParameter {
            what: "families",
            message: "order check needs families over the same index set".into(),
        });
    }
    if radii.is_empty() {
        return Err(Error::InvalidParameter {
            what: "radii",
            message: "at least one probe radius is required".into(),
        });
    }
    let indices = family_g.indices().to_vec();
    let per_index: Vec<(usize, Vec<Option<f64>>)> = indices
        .par_iter()
        .map(|&n| {
            let g = family_g.member(n)?;
            let gp = family_g_prime.member(n)?;
            let profile = domination_profile(&g, &gp, radii)?;
            Ok((n, profile.values))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_probe_slope = Vec::with_capacity(radii.len());
    let mut growing_probe = None;
    let mut all_stable = true;
    let mut any_judged = false;
    for (p, &radius) in radii.iter().enumerate() {
        let series: Vec<(f64, f64)> = per_index
            .iter()
            .filter_map(|(n, vals)| vals[p].map(|v| (*n as f64, v)))
            .collect();
        let values: Vec<f64> = series.iter().map(|s| s.1).collect();
        per_probe_slope.push(least_squares_slope(&series));
        if values.len() >= TAIL {
            any_judged = true;
            if tail_growing(&values, growth_threshold) && growing_probe.is_none() {
                growing_probe = Some(radius);
            }
            if !tail_stable(&values) {
                all_stable = false;
            }
        }
    }

    let maxima: Vec<(usize, Option<f64>)> = per_index
        .iter()
        .map(|(n, vals)| {
            let m = vals
                .iter()
                .filter_map(|v| *v)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            (*n, m)
        })
        .collect();
    let maxima_points: Vec<(f64, f64)> = maxima
        .iter()
        .filter_map(|(n, m)| m.map(|v| (*n as f64, v)))
        .collect();
    let maxima_slope = least_squares_slope(&maxima_points);

    let relation = if indices.len() < TAIL {
        OrderRelation::Inconclusive
    } else if growing_probe.is_some() {
        OrderRelation::FailsGrowing
    } else if any_judged && all_stable {
        OrderRelation::HoldsBounded
    } else {
        OrderRelation::Inconclusive
    };

    Ok(OrderVerdict {
        relation,
        evidence: OrderEvidence {
            radii: radii.to_vec(),
            per_index,
            per_probe_slope,
            maxima,
            maxima_slope,
            growing_probe,
        },
    })
}

/// Order checks both ways; equivalent when both hold bounded.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceVerdict {
    pub forward: OrderVerdict,
    pub backward: OrderVerdict,
    pub equivalent: bool,
}

pub fn equivalence_check(
    family_g: &MetricFamily,
    family_g_prime: &MetricFamily,
    radii: &[f64],
    growth_threshold: f64,
) -> Result<EquivalenceVerdict> {
    let forward = order_check(family_g, family_g_prime, radii, growth_threshold)?;
    let backward = order_check(family_g_prime, family_g, radii, growth_threshold)?;
    let equivalent = forward.relation == OrderRelation::HoldsBounded
        && backward.relation == OrderRelation::HoldsBounded;
    Ok(EquivalenceVerdict {
        forward,
        backward,
        equivalent,
    })
}

// ---------------------------------------------------------------------------
// Regularity of g ∘ g* ∘ g
// ---------------------------------------------------------------------------

/// Slack of the two-sided bound `g <= g∘g*∘g <= 3g`.
#[derive(Debug, Clone, Serialize)]
pub struct InvSemiReport {
    pub lower_slack_min: f64,
    pub lower_slack_max: f64,
    pub upper_slack_min: f64,
    pub upper_slack_max: f64,
    pub ok: bool,
}

/// Compute g∘g*∘g and verify it sits between g and 3g entrywise.
pub fn inv_semi_check(g: &GlueMetric) -> Result<InvSemiReport> {
    let triple = g.compose(&g.adjoint())?.compose(g)?;
    let mut lower_min = f64::INFINITY;
    let mut lower_max = f64::NEG_INFINITY;
    let mut upper_min = f64::INFINITY;
    let mut upper_max = f64::NEG_INFINITY;
    for x in 0..g.left().len() {
        for y in 0..g.right().len() {
            let lower = triple.cross(x, y) - g.cross(x, y);
            let upper = 3.0 * g.cross(x, y) - triple.cross(x, y);
            lower_min = lower_min.min(lower);
            lower_max = lower_max.max(lower);
            upper_min = upper_min.min(upper);
            upper_max = upper_max.max(upper);
        }
    }
    Ok(InvSemiReport {
        lower_slack_min: lower_min,
        lower_slack_max: lower_max,
        upper_slack_min: upper_min,
        upper_slack_max: upper_max,
        ok: lower_min >= -TOL && upper_min >= -TOL,
    })
}

// ---------------------------------------------------------------------------
// Idempotent / selfadjoint checks over families
// ---------------------------------------------------------------------------

/// Uniform entrywise bound on |g∘g - g| across a family of self-glues.
#[derive(Debug, Clone, Serialize)]
pub struct IdempotentReport {
    pub per_index: Vec<(usize, f64)>,
    pub uniform_bound: f64,
    pub idempotent: bool,
}

pub fn idempotent_check(family: &MetricFamily) -> Result<IdempotentReport> {
    let per_index = family
        .indices()
        .to_vec()
        .par_iter()
        .map(|&n| {
            let g = family.member(n)?;
            if g.left() != g.right() {
                return Err(Error::SpaceMismatch {
                    context: "idempotent check needs glues on two copies of one space".into(),
                });
            }
            let gg = g.compose(&g)?;
            Ok((n, gg.max_abs_diff(&g)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_index.iter().map(|p| p.1).collect();
    let uniform_bound = values.iter().copied().fold(0.0, f64::max);
    Ok(IdempotentReport {
        per_index,
        uniform_bound,
        idempotent: !tail_growing(&values, DEFAULT_GROWTH_THRESHOLD),
    })
}

/// Uniform entrywise bound on |g* - g| across a family of self-glues.
#[derive(Debug, Clone, Serialize)]
pub struct SelfadjointReport {
    pub per_index: Vec<(usize, f64)>,
    pub uniform_bound: f64,
    pub selfadjoint: bool,
}

pub fn selfadjoint_check(family: &MetricFamily) -> Result<SelfadjointReport> {
    let per_index = family
        .indices()
        .to_vec()
        .par_iter()
        .map(|&n| {
            let g = family.member(n)?;
            if g.left() != g.right() {
                return Err(Error::SpaceMismatch {
                    context: "selfadjoint check needs glues on two copies of one space".into(),
                });
            }
            Ok((n, g.adjoint().max_abs_diff(&g)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = per_index.iter().map(|p| p.1).collect();
    let uniform_bound = values.iter().copied().fold(0.0, f64::max);
    Ok(SelfadjointReport {
        per_index,
        uniform_bound,
        selfadjoint: !tail_growing(&values, DEFAULT_GROWTH_THRESHOLD),
    })
}

// ---------------------------------------------------------------------------
// Common upper bounds
// ---------------------------------------------------------------------------

/// A triangle whose required cross bounds contradict an internal distance:
/// two points `a`, `b` on one side both forced within `bound` of the
/// center on the other side, while d(a, b) exceeds the sum.
#[derive(Debug, Clone, Serialize)]
pub struct ObstructionCertificate {
    pub kind: &'static str,
    pub center: String,
    pub a: String,
    pub b: String,
    /// Which side `a` and `b` live on ("left" = X, "right" = Y).
    pub side: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of the common-upper-bound feasibility test.
#[derive(Debug, Clone)]
pub enum UpperBoundOutcome {
    /// The shortest-path closure of the constraint graph is a valid glue
    /// metric meeting every required-close pair.
    Feasible(GlueMetric),
    /// A single triangle already contradicts the requirements.
    Obstruction(ObstructionCertificate),
    /// The closure shortcuts an internal distance but no single triangle
    /// witnesses it (the contradiction needs a longer chain).
    InfeasibleChain {
        side: &'static str,
        a: String,
        b: String,
        closure: f64,
        required: f64,
    },
}

/// Test whether some glue metric can dominate both inputs at the given
/// bound, in the sense of keeping every pair that either input puts within
/// `bound` at distance at most `bound`.
///
/// Required pairs get cross edges of weight exactly `bound`; the
/// shortest-path closure over X ⊔ Y is feasible iff it does not shortcut
/// d_X or d_Y. On failure the scan looks for a violated triangle to
/// certify the obstruction.
pub fn upper_bound_feasibility(
    g1: &GlueMetric,
    g2: &GlueMetric,
    bound: f64,
) -> Result<UpperBoundOutcome> {
    if g1.left() != g2.left() || g1.right() != g2.right() {
        return Err(Error::SpaceMismatch {
            context: "feasibility needs glues on the same disjoint union".into(),
        });
    }
    if bound.is_nan() || bound <= 0.0 {
        return Err(Error::InvalidParameter {
            what: "bound",
            message: format!("must be positive, got {bound}"),
        });
    }
    let left = g1.left().clone();
    let right = g1.right().clone();
    let nx = left.len();
    let ny = right.len();

    let mut required = vec![false; nx * ny];
    let mut any = false;
    for x in 0..nx {
        for y in 0..ny {
            if g1.cross(x, y) <= bound + TOL || g2.cross(x, y) <= bound + TOL {
                required[x * ny + y] = true;
                any = true;
            }
        }
    }
    if !any {
        // No constraints at all: a constant cross distance of half the
        // larger diameter (plus a positive margin) always glues.
        let c = left.diameter().max(right.diameter()) / 2.0 + bound.max(1.0);
        let cross = vec![vec![c; ny]; nx];
        return Ok(UpperBoundOutcome::Feasible(GlueMetric::new(
            left, right, cross,
        )?));
    }

    // Floyd–Warshall closure of the constraint graph.
    let n = nx + ny;
    let mut dist = vec![f64::INFINITY; n * n];
    for i in 0..n {
        dist[i * n + i] = 0.0;
    }
    for x in 0..nx {
        for xp in 0..nx {
            dist[x * n + xp] = left.dist(x, xp);
        }
    }
    for y in 0..ny {
        for yp in 0..ny {
            dist[(nx + y) * n + (nx + yp)] = right.dist(y, yp);
        }
    }
    for x in 0..nx {
        for y in 0..ny {
            if required[x * ny + y] {
                dist[x * n + (nx + y)] = bound;
                dist[(nx + y) * n + x] = bound;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + dist[k * n + j];
                if cand < dist[i * n + j] {
                    dist[i * n + j] = cand;
                }
            }
        }
    }

    // Feasible iff the closure restricts to the original metrics.
    let mut shortcut: Option<(&'static str, usize, usize, f64, f64)> = None;
    'left_scan: for x in 0..nx {
        for xp in 0..nx {
            if dist[x * n + xp] < left.dist(x, xp) - TOL {
                shortcut = Some(("left", x, xp, dist[x * n + xp], left.dist(x, xp)));
                break 'left_scan;
            }
        }
    }
    if shortcut.is_none() {
        'right_scan: for y in 0..ny {
            for yp in 0..ny {
                if dist[(nx + y) * n + (nx + yp)] < right.dist(y, yp) - TOL {
                    shortcut = Some((
                        "right",
                        y,
                        yp,
                        dist[(nx + y) * n + (nx + yp)],
                        right.dist(y, yp),
                    ));
                    break 'right_scan;
                }
            }
        }
    }

    let Some((side, a, b, closure, required_dist)) = shortcut else {
        let mut cross = vec![vec![0.0; ny]; nx];
        let mut positive = true;
        for (x, row) in cross.iter_mut().enumerate() {
            for (y, v) in row.iter_mut().enumerate() {
                *v = dist[x * n + (nx + y)];
                positive &= *v > 0.0;
            }
        }
        if positive {
            return Ok(UpperBoundOutcome::Feasible(GlueMetric::new(
                left, right, cross,
            )?));
        }
        // Zero cross distance: only possible through degenerate inputs;
        // report it as a chain infeasibility on the cross pair.
        return Ok(UpperBoundOutcome::InfeasibleChain {
            side: "cross",
            a: left.label(0).into(),
            b: right.label(0).into(),
            closure: 0.0,
            required: bound,
        });
    };

    // Look for a single violated triangle, centers scanned in index order.
    for x in 0..nx {
        let ys: Vec<usize> = (0..ny).filter(|&y| required[x * ny + y]).collect();
        for (i, &y1) in ys.iter().enumerate() {
            for &y2 in &ys[i + 1..] {
                if right.dist(y1, y2) > 2.0 * bound + TOL {
                    return Ok(UpperBoundOutcome::Obstruction(ObstructionCertificate {
                        kind: "triangle",
                        center: left.label(x).into(),
                        a: right.label(y1).into(),
                        b: right.label(y2).into(),
                        side: "right",
                        lhs: right.dist(y1, y2),
                        rhs: 2.0 * bound,
                    }));
                }
            }
        }
    }
    for y in 0..ny {
        let xs: Vec<usize> = (0..nx).filter(|&x| required[x * ny + y]).collect();
        for (i, &x1) in xs.iter().enumerate() {
            for &x2 in &xs[i + 1..] {
                if left.dist(x1, x2) > 2.0 * bound + TOL {
                    return Ok(UpperBoundOutcome::Obstruction(ObstructionCertificate {
                        kind: "triangle",
                        center: right.label(y).into(),
                        a: left.label(x1).into(),
                        b: left.label(x2).into(),
                        side: "left",
                        lhs: left.dist(x1, x2),
                        rhs: 2.0 * bound,
                    }));
                }
            }
        }
    }

    let (label_a, label_b) = match side {
        "left" => (left.label(a).to_string(), left.label(b).to_string()),
        _ => (right.label(a).to_string(), right.label(b).to_string()),
    };
    Ok(UpperBoundOutcome::InfeasibleChain {
        side,
        a: label_a,
        b: label_b,
        closure,
        required: required_dist,
    })
}

// ---------------------------------------------------------------------------
// Close pairs
// ---------------------------------------------------------------------------

/// Maximum bipartite matching on the pairs a glue keeps within a bound. A
/// matching size that grows across a family certifies that the close-pair
/// structure is not finite-rank-like.
#[derive(Debug, Clone, Serialize)]
pub struct ClosePairMatching {
    pub size: usize,
    pub pairs: Vec<(String, String)>,
}

pub fn close_pair_matching(g: &GlueMetric, bound: f64) -> ClosePairMatching {
    let mut edges = Vec::new();
    for x in 0..g.left().len() {
        for y in 0..g.right().len() {
            if g.cross(x, y) <= bound + TOL {
                edges.push((x, y));
            }
        }
    }
    let matched = maximum_matching(g.left().len(), g.right().len(), &edges);
    ClosePairMatching {
        size: matched.len(),
        pairs: matched
            .into_iter()
            .map(|(x, y)| (g.left().label(x).into(), g.right().label(y).into()))
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// Maximality inequality
// ---------------------------------------------------------------------------

/// The pointwise inequality behind maximality of d_f: any valid glue g on
/// the same spaces satisfies `g >= d_f - (C/2 + h(C/2))`, where h is the
/// domination profile from d_f to g.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalityReport {
    pub c_eff: f64,
    pub h_at_half_c: f64,
    pub allowed_drop: f64,
    /// max over pairs of d_f - allowed_drop - g; nonpositive when the
    /// inequality holds.
    pub max_violation: f64,
    pub ok: bool,
    pub profile: DominationProfile,
}

/// Check the maximality inequality of the glue induced by `f` (with the
/// given epsilon) against a competing glue on the same spaces. The bound
/// is tight for total maps; for partial maps it additionally absorbs the
/// distance to the support.
pub fn maximality_inequality_check(
    f: &PartialMap,
    g: &GlueMetric,
    epsilon: f64,
    radii: &[f64],
) -> Result<MaximalityReport> {
    let d_f = f.glue(epsilon)?;
    if g.left() != d_f.left() || g.right() != d_f.right() {
        return Err(Error::SpaceMismatch {
            context: "maximality check needs g on the same spaces as d_f".into(),
        });
    }
    let c_eff = f.effective_constant(epsilon);
    let h_at_half_c = profile_value(&d_f, g, c_eff / 2.0).ok_or_else(|| Error::InvalidParameter {
        what: "glue",
        message: "no pair within C/2 of d_f; the support pairs should qualify".into(),
    })?;
    let allowed_drop = c_eff / 2.0 + h_at_half_c;
    let mut max_violation = f64::NEG_INFINITY;
    for x in 0..g.left().len() {
        for y in 0..g.right().len() {
            max_violation = max_violation.max(d_f.cross(x, y) - allowed_drop - g.cross(x, y));
        }
    }
    let profile = domination_profile(&d_f, g, radii)?;
    Ok(MaximalityReport {
        c_eff,
        h_at_half_c,
        allowed_drop,
        max_violation,
        ok: max_violation <= TOL,
        profile,
    })
}

/// Pointwise lower bound `(g* ∘ g).cross(x, z) >= d_X(x, z)`, i.e.
/// g*∘g >= d⁰ - 1 entrywise; returns the minimal slack.
pub fn adjoint_composition_floor(g: &GlueMetric) -> Result<f64> {
    let through = g.compose(&g.adjoint())?;
    let d0 = identity_glue(g.left());
    let mut slack = f64::INFINITY;
    for x in 0..g.left().len() {
        for z in 0..g.left().len() {
            slack = slack.min(through.cross(x, z) - (d0.cross(x, z) - 1.0));
        }
    }
    Ok(slack)
}
