//! Finite-propagation operators as sparse complex matrices.
//!
//! An operator maps l²(X) to l²(Y); its propagation against a glue metric
//! is the largest cross distance over the nonzero entries. The algebra
//! (composition, adjoint, sums, scalars) keeps propagation additive under
//! the min-plus composition of the glues, every finite sparse matrix
//! splits into width-1 bands (injective row/column supports), and each
//! band factors through a middle space by relaying every entry over a
//! cheapest middle point.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::glue::GlueMetric;
use crate::matching::edge_coloring;
use crate::space::FiniteMetricSpace;
use crate::TOL;

/// Matrices at most this wide take the exact dense route in
/// [`FinitePropagationOperator::norm`].
const DENSE_NORM_LIMIT: usize = 512;

/// A bounded operator l²(X) -> l²(Y) with sparse entries T[(y, x)].
/// Exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePropagationOperator {
    source: Arc<FiniteMetricSpace>,
    target: Arc<FiniteMetricSpace>,
    entries: BTreeMap<(usize, usize), Complex64>,
}

fn is_zero(c: Complex64) -> bool {
    c.re == 0.0 && c.im == 0.0
}

impl FinitePropagationOperator {
    pub fn zero(source: Arc<FiniteMetricSpace>, target: Arc<FiniteMetricSpace>) -> Self {
        Self {
            source,
            target,
            entries: BTreeMap::new(),
        }
    }

    /// Build from (target index, source index, coefficient) triples; zero
    /// coefficients are dropped, duplicate positions accumulate.
    pub fn from_entries(
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (y, x, c) in entries {
            if y >= target.len() || x >= source.len() {
                return Err(Error::InvalidParameter {
                    what: "operator entry",
                    message: format!(
                        "position ({y}, {x}) out of bounds for {}x{}",
                        target.len(),
                        source.len()
                    ),
                });
            }
            *map.entry((y, x)).or_insert(Complex64::ZERO) += c;
        }
        map.retain(|_, c| !is_zero(*c));
        Ok(Self {
            source,
            target,
            entries: map,
        })
    }

    /// The elementary matrix e_{x,y}: the rank-one operator taking the
    /// basis vector at `x` to the basis vector at `y`.
    pub fn elementary(
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
        x: &str,
        y: &str,
    ) -> Result<Self> {
        let xi = source
            .position(x)
            .ok_or_else(|| Error::UnknownLabel { label: x.into() })?;
        let yi = target
            .position(y)
            .ok_or_else(|| Error::UnknownLabel { label: y.into() })?;
        Self::from_entries(source, target, [(yi, xi, Complex64::ONE)])
    }

    pub fn source(&self) -> &Arc<FiniteMetricSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMetricSpace> {
        &self.target
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&(y, x), &c)| (y, x, c))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, y: usize, x: usize) -> Complex64 {
        self.entries
            .get(&(y, x))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    /// Apply to a coefficient vector over the source basis.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.source.len() {
            return Err(Error::DimensionMismatch {
                what: "vector length",
                expected: self.source.len(),
                got: v.len(),
            });
        }
        let mut out = vec![Complex64::ZERO; self.target.len()];
        for (&(y, x), &c) in &self.entries {
            out[y] += c * v[x];
        }
        Ok(out)
    }

    /// Largest cross distance of the glue over the support; 0 for the zero
    /// operator. "Propagation less than L" means this value is < L.
    pub fn propagation(&self, glue: &GlueMetric) -> Result<f64> {
        if glue.left() != &self.source || glue.right() != &self.target {
            return Err(Error::SpaceMismatch {
                context: "propagation: glue does not join the operator's source and target".into(),
            });
        }
        Ok(self
            .entries
            .keys()
            .map(|&(y, x)| glue.cross(x, y))
            .fold(0.0, f64::max))
    }

    /// Propagation of an endomorphism measured against its space's own
    /// metric (the restriction metric d_X).
    pub fn propagation_in(&self, space: &Arc<FiniteMetricSpace>) -> Result<f64> {
        if &self.source != space || &self.target != space {
            return Err(Error::SpaceMismatch {
                context: "propagation_in: operator is not an endomorphism of the space".into(),
            });
        }
        Ok(self
            .entries
            .keys()
            .map(|&(y, x)| space.dist(x, y))
            .fold(0.0, f64::max))
    }

    /// Operator composition `self ∘ rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &FinitePropagationOperator) -> Result<FinitePropagationOperator> {
        if rhs.target != self.source {
            return Err(Error::SpaceMismatch {
                context: "operator composition: inner spaces differ".into(),
            });
        }
        // Group rhs entries by middle index for the sparse product.
        let mut by_middle: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for (&(y, x), &c) in &rhs.entries {
            by_middle.entry(y).or_default().push((x, c));
        }
        let mut out: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (&(z, y), &s) in &self.entries {
            if let Some(cols) = by_middle.get(&y) {
                for &(x, t) in cols {
                    *out.entry((z, x)).or_insert(Complex64::ZERO) += s * t;
                }
            }
        }
        out.retain(|_, c| !is_zero(*c));
        Ok(FinitePropagationOperator {
            source: rhs.source.clone(),
            target: self.target.clone(),
            entries: out,
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> FinitePropagationOperator {
        let entries = self
            .entries
            .iter()
            .map(|(&(y, x), &c)| ((x, y), c.conj()))
            .collect();
        FinitePropagationOperator {
            source: self.target.clone(),
            target: self.source.clone(),
            entries,
        }
    }

    /// Entrywise sum of operators between the same spaces.
    pub fn add(&self, other: &FinitePropagationOperator) -> Result<FinitePropagationOperator> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::SpaceMismatch {
                context: "operator sum: spaces differ".into(),
            });
        }
        let mut entries = self.entries.clone();
        for (&k, &c) in &other.entries {
            *entries.entry(k).or_insert(Complex64::ZERO) += c;
        }
        entries.retain(|_, c| !is_zero(*c));
        Ok(FinitePropagationOperator {
            source: self.source.clone(),
            target: self.target.clone(),
            entries,
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> FinitePropagationOperator {
        if is_zero(c) {
            return FinitePropagationOperator::zero(self.source.clone(), self.target.clone());
        }
        FinitePropagationOperator {
            source: self.source.clone(),
            target: self.target.clone(),
            entries: self.entries.iter().map(|(&k, &v)| (k, v * c)).collect(),
        }
    }

    /// Operator norm (largest singular value).
    ///
    /// Small matrices (min dimension <= 512) go through an exact dense SVD
    /// of the real embedding [[Re, -Im], [Im, Re]]; larger ones use power
    /// iteration on T*T with relative tolerance 1e-8, capped at 10000
    /// iterations.
    pub fn norm(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let rows = self.target.len();
        let cols = self.source.len();
        if rows.min(cols) <= DENSE_NORM_LIMIT {
            let mut m = DMatrix::<f64>::zeros(2 * rows, 2 * cols);
            for (&(y, x), &c) in &self.entries {
                m[(y, x)] = c.re;
                m[(y, x + cols)] = -c.im;
                m[(y + rows, x)] = c.im;
                m[(y + rows, x + cols)] = c.re;
            }
            return m
                .singular_values()
                .iter()
                .copied()
                .fold(0.0, f64::max);
        }
        self.power_iteration_norm()
    }

    fn power_iteration_norm(&self) -> f64 {
        let cols = self.source.len();
        let mut v = vec![Complex64::new(1.0 / (cols as f64).sqrt(), 0.0); cols];
        let adj = self.adjoint();
        let mut last = 0.0f64;
        for _ in 0..10_000 {
            let w = self.apply(&v).expect("dimensions fixed");
            let u = adj.apply(&w).expect("dimensions fixed");
            let norm_u: f64 = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm_u == 0.0 {
                return 0.0;
            }
            // Rayleigh quotient of T*T at the current unit vector.
            let sigma2: f64 = w.iter().map(|c| c.norm_sqr()).sum();
            let sigma = sigma2.sqrt();
            if (sigma - last).abs() <= 1e-8 * sigma.max(1.0) {
                return sigma;
            }
            last = sigma;
            for (vi, ui) in v.iter_mut().zip(&u) {
                *vi = ui / norm_u;
            }
        }
        last
    }
}

// ---------------------------------------------------------------------------
// Width-1 bands
// ---------------------------------------------------------------------------

/// A width-1 band: coefficients on a subset of X with an injective
/// assignment into the target. Entries map x -> (σ(x), λ_x).
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    source: Arc<FiniteMetricSpace>,
    target: Arc<FiniteMetricSpace>,
    entries: BTreeMap<usize, (usize, Complex64)>,
}

impl Band {
    pub fn source(&self) -> &Arc<FiniteMetricSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteMetricSpace> {
        &self.target
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.entries.iter().map(|(&x, &(z, c))| (x, z, c))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn to_operator(&self) -> FinitePropagationOperator {
        FinitePropagationOperator {
            source: self.source.clone(),
            target: self.target.clone(),
            entries: self
                .entries
                .iter()
                .map(|(&x, &(z, c))| ((z, x), c))
                .collect(),
        }
    }

    pub fn propagation(&self, glue: &GlueMetric) -> Result<f64> {
        self.to_operator().propagation(glue)
    }

    /// Interpret a width-1 operator as a band; errors if any row or column
    /// carries two entries.
    pub fn from_operator(op: &FinitePropagationOperator) -> Result<Band> {
        let mut entries = BTreeMap::new();
        let mut rows_seen = std::collections::BTreeSet::new();
        for (y, x, c) in op.entries() {
            if entries.insert(x, (y, c)).is_some() {
                return Err(Error::NotWidthOneBand {
                    context: format!("column {x} has two entries"),
                });
            }
            if !rows_seen.insert(y) {
                return Err(Error::NotWidthOneBand {
                    context: format!("row {y} has two entries"),
                });
            }
        }
        Ok(Band {
            source: op.source.clone(),
            target: op.target.clone(),
            entries,
        })
    }
}

/// A decomposition of an operator into width-1 bands that sum back to it
/// exactly.
#[derive(Debug, Clone)]
pub struct BandDecomposition {
    pub bands: Vec<Band>,
}

impl BandDecomposition {
    pub fn count(&self) -> usize {
        self.bands.len()
    }

    /// Exact reassembly of the original operator.
    pub fn reassemble(
        &self,
        source: Arc<FiniteMetricSpace>,
        target: Arc<FiniteMetricSpace>,
    ) -> FinitePropagationOperator {
        let mut acc = FinitePropagationOperator::zero(source, target);
        for band in &self.bands {
            acc = acc.add(&band.to_operator()).expect("bands share the spaces");
        }
        acc
    }
}

/// Largest row or column support degree of an operator.
pub fn max_support_degree(op: &FinitePropagationOperator) -> usize {
    let mut row_deg: BTreeMap<usize, usize> = BTreeMap::new();
    let mut col_deg: BTreeMap<usize, usize> = BTreeMap::new();
    for (y, x, _) in op.entries() {
        *row_deg.entry(y).or_default() += 1;
        *col_deg.entry(x).or_default() += 1;
    }
    row_deg
        .values()
        .chain(col_deg.values())
        .copied()
        .max()
        .unwrap_or(0)
}

/// Split an operator into width-1 bands via a proper edge coloring of its
/// support graph. The band count meets the König bound: it never exceeds
/// the largest row or column degree. The zero operator yields no bands.
///
/// Deterministic: support entries are scanned in (column, row) order and
/// colors are chosen smallest-first.
pub fn band_decompose(op: &FinitePropagationOperator) -> BandDecomposition {
    // Edge list in (x, z) order; the coloring is stable in this order.
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(op.entries.len());
    let mut coeffs: Vec<Complex64> = Vec::with_capacity(op.entries.len());
    let mut sorted: Vec<(usize, usize, Complex64)> = op.entries().collect();
    sorted.sort_by_key(|&(y, x, _)| (x, y));
    for &(y, x, c) in &sorted {
        edges.push((x, y));
        coeffs.push(c);
    }
    let colors = edge_coloring(op.source.len(), op.target.len(), &edges);
    let band_count = colors.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut bands: Vec<BTreeMap<usize, (usize, Complex64)>> =
        vec![BTreeMap::new(); band_count];
    for ((&(x, z), &color), &c) in edges.iter().zip(&colors).zip(&coeffs) {
        bands[color].insert(x, (z, c));
    }
    BandDecomposition {
        bands: bands
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|entries| Band {
                source: op.source.clone(),
                target: op.target.clone(),
                entries,
            })
            .collect(),
    }
}

/// One factor pair of a band: `s ∘ r` equals `band` entrywise.
#[derive(Debug, Clone)]
pub struct BandFactor {
    pub band: Band,
    /// X -> Y, carrying the coefficients.
    pub r: FinitePropagationOperator,
    /// Y -> Z, an indicator sum over the relayed pairs.
    pub s: FinitePropagationOperator,
}

/// Factor a width-1 band X -> Z through the middle space of a composable
/// pair of glues.
///
/// Every entry (x, σ(x)) is relayed over the middle point minimizing
/// `g_xy(x, y) + g_yz(y, σ(x))` (ties to the smaller index), which keeps
/// both factors' propagation within the band's propagation against the
/// composed glue. When the relay map collapses several sources onto one
/// middle point the band is split along relay fibers into sub-bands on
/// which the relay is injective; each part factors exactly and the parts
/// sum back to the band.
pub fn factor_through(
    band: &Band,
    g_xy: &GlueMetric,
    g_yz: &GlueMetric,
) -> Result<Vec<BandFactor>> {
    if g_xy.left() != band.source() {
        return Err(Error::SpaceMismatch {
            context: "factor_through: first glue does not start at the band's source".into(),
        });
    }
    if g_yz.right() != band.target() {
        return Err(Error::SpaceMismatch {
            context: "factor_through: second glue does not end at the band's target".into(),
        });
    }
    if g_xy.right() != g_yz.left() {
        return Err(Error::SpaceMismatch {
            context: "factor_through: glues do not share the middle space".into(),
        });
    }
    let ny = g_xy.right().len();
    if ny == 0 {
        return Err(Error::EmptyMiddleSpace);
    }
    if band.entries.is_empty() {
        return Ok(Vec::new());
    }

    // Cheapest relay per band entry.
    let mut relay: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &(z, _)) in &band.entries {
        let mut best = f64::INFINITY;
        let mut best_y = 0;
        for y in 0..ny {
            let v = g_xy.cross(x, y) + g_yz.cross(y, z);
            if v < best {
                best = v;
                best_y = y;
            }
        }
        relay.insert(x, best_y);
    }

    // Round-robin the members of each relay fiber across parts, so the
    // relay is injective within every part.
    let mut fibers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&x, &y) in &relay {
        fibers.entry(y).or_default().push(x);
    }
    let parts_needed = fibers.values().map(Vec::len).max().unwrap_or(0);
    let mut part_entries: Vec<BTreeMap<usize, (usize, Complex64)>> =
        vec![BTreeMap::new(); parts_needed];
    for xs in fibers.values() {
        for (slot, &x) in xs.iter().enumerate() {
            part_entries[slot].insert(x, band.entries[&x]);
        }
    }

    let mut out = Vec::with_capacity(parts_needed);
    for entries in part_entries {
        let sub_band = Band {
            source: band.source.clone(),
            target: band.target.clone(),
            entries,
        };
        let r = FinitePropagationOperator::from_entries(
            band.source.clone(),
            g_xy.right().clone(),
            sub_band
                .entries
                .iter()
                .map(|(&x, &(_, c))| (relay[&x], x, c)),
        )?;
        let s = FinitePropagationOperator::from_entries(
            g_yz.left().clone(),
            band.target.clone(),
            sub_band
                .entries
                .iter()
                .map(|(&x, &(z, _))| (z, relay[&x], Complex64::ONE)),
        )?;
        out.push(BandFactor { band: sub_band, r, s });
    }
    Ok(out)
}

/// Both sides of the composition propagation bound
/// `prop(S∘T, g_yz ∘ g_xy) <= prop(T, g_xy) + prop(S, g_yz)`.
#[derive(Debug, Clone, Serialize)]
pub struct PropagationBoundReport {
    pub lhs: f64,
    pub prop_t: f64,
    pub prop_s: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Verify the propagation bound for a composable pair of operators under a
/// composable pair of glues.
pub fn propagation_bound_check(
    s: &FinitePropagationOperator,
    t: &FinitePropagationOperator,
    g_xy: &GlueMetric,
    g_yz: &GlueMetric,
) -> Result<PropagationBoundReport> {
    let composed_glue = g_xy.compose(g_yz)?;
    let composed_op = s.compose(t)?;
    let lhs = composed_op.propagation(&composed_glue)?;
    let prop_t = t.propagation(g_xy)?;
    let prop_s = s.propagation(g_yz)?;
    Ok(PropagationBoundReport {
        lhs,
        prop_t,
        prop_s,
        rhs: prop_t + prop_s,
        ok: lhs <= prop_t + prop_s + TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::glue::identity_glue;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Op = FinitePropagationOperator;

    fn random_operator(
        source: &Arc<FiniteMetricSpace>,
        target: &Arc<FiniteMetricSpace>,
        density: f64,
        seed: u64,
    ) -> Op {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for y in 0..target.len() {
            for x in 0..source.len() {
                if rng.gen_bool(density) {
                    entries.push((
                        y,
                        x,
                        Complex64::new(
                            rng.gen_range(-8..=8) as f64 / 4.0,
                            rng.gen_range(-8..=8) as f64 / 4.0,
                        ),
                    ));
                }
            }
        }
        Op::from_entries(source.clone(), target.clone(), entries).unwrap()
    }

    #[test]
    fn elementary_moves_one_basis_vector() {
        let s = catalog::z_interval(2);
        let e = Op::elementary(s.clone(), s.clone(), "-1", "1").unwrap();
        let mut delta = vec![Complex64::ZERO; s.len()];
        delta[s.position("-1").unwrap()] = Complex64::ONE;
        let image = e.apply(&delta).unwrap();
        for (i, c) in image.iter().enumerate() {
            let expected = if s.label(i) == "1" { 1.0 } else { 0.0 };
            assert_eq!(c.re, expected);
            assert_eq!(c.im, 0.0);
        }
        assert!(Op::elementary(s.clone(), s, "-1", "99").is_err());
    }

    #[test]
    fn propagation_of_an_elementary_is_its_cross_distance() {
        let (g, _) = catalog::random_glue_pair(5, 4, 3, 2);
        let e = Op::elementary(
            g.left().clone(),
            g.right().clone(),
            g.left().label(2),
            g.right().label(1),
        )
        .unwrap();
        assert_eq!(e.propagation(&g).unwrap(), g.cross(2, 1));
        assert_eq!(e.adjoint().propagation(&g.adjoint()).unwrap(), g.cross(2, 1));
    }

    #[test]
    fn zero_operator_has_zero_propagation_and_norm() {
        let s = catalog::z_interval(2);
        let z = Op::zero(s.clone(), s.clone());
        assert_eq!(z.propagation(&identity_glue(&s)).unwrap(), 0.0);
        assert_eq!(z.norm(), 0.0);
        assert_eq!(band_decompose(&z).count(), 0);
    }

    #[test]
    fn identity_copy_has_propagation_one_under_dzero() {
        let s = catalog::z_interval(4);
        let mut id = Op::zero(s.clone(), s.clone());
        for i in 0..s.len() {
            id = id
                .add(&Op::from_entries(s.clone(), s.clone(), [(i, i, Complex64::ONE)]).unwrap())
                .unwrap();
        }
        assert_eq!(id.propagation(&identity_glue(&s)).unwrap(), 1.0);
    }

    #[test]
    fn propagation_of_random_operator_matches_entry_scan() {
        let (g, _) = catalog::random_glue_pair(6, 5, 4, 4);
        let t = random_operator(g.left(), g.right(), 0.4, 17);
        let oracle = t
            .entries()
            .map(|(y, x, _)| g.cross(x, y))
            .fold(0.0, f64::max);
        assert_eq!(t.propagation(&g).unwrap(), oracle);
    }

    #[test]
    fn elementary_composition_chains() {
        let x = catalog::z_interval(1);
        let y = catalog::z_interval(2);
        let z = catalog::z_interval(3);
        let e1 = Op::elementary(x.clone(), y.clone(), "0", "1").unwrap();
        let e2 = Op::elementary(y, z.clone(), "1", "-2").unwrap();
        let c = e2.compose(&e1).unwrap();
        let expected = Op::elementary(x, z, "0", "-2").unwrap();
        assert_eq!(c, expected);
    }

    #[test]
    fn sparse_product_matches_dense_oracle() {
        let a = catalog::random_bounded_geometry(20, 4, 1).unwrap();
        let b = catalog::random_bounded_geometry(20, 4, 2).unwrap();
        let c = catalog::random_bounded_geometry(20, 4, 3).unwrap();
        let t = random_operator(&a, &b, 0.25, 5);
        let s = random_operator(&b, &c, 0.25, 6);
        let st = s.compose(&t).unwrap();
        for z in 0..c.len() {
            for x in 0..a.len() {
                let mut acc = Complex64::ZERO;
                for y in 0..b.len() {
                    acc += s.entry(z, y) * t.entry(y, x);
                }
                assert!((st.entry(z, x) - acc).norm() == 0.0, "exact sparse product");
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution_and_antihomomorphism() {
        let a = catalog::z_interval(3);
        let b = catalog::z_interval(4);
        let t = random_operator(&a, &b, 0.4, 9);
        assert_eq!(t.adjoint().adjoint(), t);

        let e = Op::elementary(a.clone(), b.clone(), "0", "2").unwrap();
        let ea = e.adjoint();
        assert_eq!(ea.entry(a.position("0").unwrap(), b.position("2").unwrap()), Complex64::ONE);
    }

    #[test]
    fn bimodule_composition_keeps_propagation_additive() {
        let (g, _) = catalog::random_glue_pair(6, 6, 4, 8);
        let x = g.left().clone();
        let y = g.right().clone();
        let r = random_operator(&x, &x, 0.3, 21);
        let t = random_operator(&x, &y, 0.3, 22);
        let s = random_operator(&y, &y, 0.3, 23);
        let chained = s.compose(&t).unwrap().compose(&r).unwrap();
        let bound = r.propagation_in(&x).unwrap()
            + t.propagation(&g).unwrap()
            + s.propagation_in(&y).unwrap();
        assert!(chained.propagation(&g).unwrap() <= bound + TOL);
    }

    #[test]
    fn inner_products_have_finite_propagation_in_the_restriction() {
        // T*∘S is an endomorphism of the source; its propagation against
        // d_X is controlled by the glue propagations of both factors.
        let (g, _) = catalog::random_glue_pair(7, 6, 3, 19);
        let x = g.left().clone();
        for seed in 0..10 {
            let t = random_operator(&x, g.right(), 0.4, seed + 400);
            let s = random_operator(&x, g.right(), 0.4, seed + 500);
            let inner = t.adjoint().compose(&s).unwrap();
            let bound = t.propagation(&g).unwrap() + s.propagation(&g).unwrap();
            assert!(inner.propagation_in(&x).unwrap() <= bound + TOL);
        }
    }

    #[test]
    fn norm_of_elementary_and_diagonal() {
        let s = catalog::z_interval(3);
        let e = Op::elementary(s.clone(), s.clone(), "0", "1").unwrap();
        assert!((e.norm() - 1.0).abs() <= 1e-9);

        let diag = Op::from_entries(
            s.clone(),
            s.clone(),
            (0..s.len()).map(|i| (i, i, Complex64::new(-(i as f64) - 0.5, i as f64))),
        )
        .unwrap();
        let expected = (0..s.len())
            .map(|i| Complex64::new(-(i as f64) - 0.5, i as f64).norm())
            .fold(0.0, f64::max);
        assert!((diag.norm() - expected).abs() <= 1e-9);
    }

    #[test]
    fn norm_matches_hand_rolled_power_oracle() {
        let a = catalog::random_bounded_geometry(30, 4, 11).unwrap();
        let b = catalog::random_bounded_geometry(30, 4, 12).unwrap();
        let t = random_operator(&a, &b, 0.3, 13);

        // Independent oracle: dense power iteration on the Gram matrix.
        let n = a.len();
        let m = b.len();
        let mut dense = vec![vec![Complex64::ZERO; n]; m];
        for (y, x, c) in t.entries() {
            dense[y][x] = c;
        }
        let mut v = vec![Complex64::new(1.0, 0.25); n];
        let mut sigma = 0.0f64;
        for _ in 0..20_000 {
            let mut w = vec![Complex64::ZERO; m];
            for (y, row) in dense.iter().enumerate() {
                for (x, &c) in row.iter().enumerate() {
                    w[y] += c * v[x];
                }
            }
            let mut u = vec![Complex64::ZERO; n];
            for (y, row) in dense.iter().enumerate() {
                for (x, &c) in row.iter().enumerate() {
                    u[x] += c.conj() * w[y];
                }
            }
            let norm_u = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm_u == 0.0 {
                break;
            }
            sigma = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for (vi, ui) in v.iter_mut().zip(&u) {
                *vi = ui / norm_u;
            }
        }
        assert!(
            (t.norm() - sigma).abs() <= 1e-6,
            "dense {} vs oracle {}",
            t.norm(),
            sigma
        );
    }

    #[test]
    fn norm_properties_hold_on_random_instances() {
        let a = catalog::z_interval(6);
        let b = catalog::z_interval(5);
        let c = catalog::z_interval(4);
        for seed in 0..5 {
            let t = random_operator(&a, &b, 0.4, seed);
            let s = random_operator(&b, &c, 0.4, seed + 100);
            assert!((t.adjoint().norm() - t.norm()).abs() <= 1e-9);
            let st = s.compose(&t).unwrap();
            assert!(st.norm() <= s.norm() * t.norm() + 1e-9);
        }
    }

    #[test]
    fn permutation_support_is_a_single_band() {
        let s = catalog::z_interval(3);
        let n = s.len();
        let perm = Op::from_entries(
            s.clone(),
            s.clone(),
            (0..n).map(|i| ((i + 2) % n, i, Complex64::new(i as f64 + 1.0, 0.0))),
        )
        .unwrap();
        let d = band_decompose(&perm);
        assert_eq!(d.count(), 1);
        assert_eq!(d.reassemble(s.clone(), s).unwrap_entries(), perm.entries);
    }

    impl BandDecomposition {
        fn reassemble_for(&self, op: &Op) -> Op {
            self.reassemble(op.source.clone(), op.target.clone())
        }
    }

    impl Op {
        fn unwrap_entries(self) -> BTreeMap<(usize, usize), Complex64> {
            self.entries
        }
    }

    #[test]
    fn dense_two_by_two_needs_exactly_two_bands() {
        let two = FiniteMetricSpace::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let dense = Op::from_entries(
            two.clone(),
            two.clone(),
            [
                (0, 0, Complex64::new(1.0, 0.0)),
                (0, 1, Complex64::new(2.0, 0.0)),
                (1, 0, Complex64::new(3.0, 0.0)),
                (1, 1, Complex64::new(4.0, 0.0)),
            ],
        )
        .unwrap();
        let d = band_decompose(&dense);
        assert_eq!(d.count(), 2);
        assert_eq!(d.reassemble_for(&dense), dense);
    }

    #[test]
    fn random_bands_reassemble_exactly_within_the_degree_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for case in 0..30 {
            let n = rng.gen_range(3..=20);
            let m = rng.gen_range(3..=20);
            let a = catalog::random_bounded_geometry(n, 3, case).unwrap();
            let b = catalog::random_bounded_geometry(m, 3, case + 500).unwrap();
            let t = random_operator(&a, &b, 0.3, case + 900);
            let d = band_decompose(&t);
            assert!(d.count() <= max_support_degree(&t));
            assert_eq!(d.reassemble_for(&t), t);
            for band in &d.bands {
                // injectivity of σ
                let mut seen = std::collections::BTreeSet::new();
                for (_, z, _) in band.entries() {
                    assert!(seen.insert(z));
                }
            }
            // Determinism: a second run gives the identical decomposition.
            let again = band_decompose(&t);
            assert_eq!(again.bands, d.bands);
        }
    }

    #[test]
    fn single_entry_band_factors_through_the_cheapest_relay() {
        let (gxy, gyz) = catalog::random_glue_pair(4, 5, 4, 31);
        let e = Op::elementary(
            gxy.left().clone(),
            gyz.right().clone(),
            gxy.left().label(1),
            gyz.right().label(2),
        )
        .unwrap();
        let band = Band::from_operator(&e).unwrap();
        let parts = factor_through(&band, &gxy, &gyz).unwrap();
        assert_eq!(parts.len(), 1);
        let part = &parts[0];
        assert_eq!(part.s.compose(&part.r).unwrap(), e);
        // The relay realizes the min-plus composition at this entry.
        let composed = gxy.compose(&gyz).unwrap();
        let (y, x, _) = part.r.entries().next().unwrap();
        assert_eq!(gxy.cross(x, y) + gyz.cross(y, 2), composed.cross(1, 2));
    }

    #[test]
    fn identity_band_through_dzero_relays_on_the_diagonal() {
        let s = catalog::z_interval(4);
        let d0 = identity_glue(&s);
        let id = Op::from_entries(
            s.clone(),
            s.clone(),
            (0..s.len()).map(|i| (i, i, Complex64::ONE)),
        )
        .unwrap();
        let band = Band::from_operator(&id).unwrap();
        let parts = factor_through(&band, &d0, &d0).unwrap();
        assert_eq!(parts.len(), 1);
        let part = &parts[0];
        for (y, x, _) in part.r.entries() {
            assert_eq!(y, x, "relay minimizer is the diagonal");
        }
        assert_eq!(part.s.compose(&part.r).unwrap(), id);
    }

    #[test]
    fn noninjective_relays_split_into_exact_parts() {
        // A two-point middle space forces relay collisions for wide bands.
        let x = catalog::z_interval(3);
        let y = catalog::z_interval(0);
        let z = catalog::z_interval(3);
        let gxy = catalog::random_glue(&x, &y, 41);
        let gyz = catalog::random_glue(&y, &z, 42);
        let band_op = Op::from_entries(
            x.clone(),
            z.clone(),
            (0..x.len()).map(|i| (i, i, Complex64::new(1.0 + i as f64, -1.0))),
        )
        .unwrap();
        let band = Band::from_operator(&band_op).unwrap();
        let parts = factor_through(&band, &gxy, &gyz).unwrap();
        assert!(parts.len() > 1, "one middle point must collide");
        let mut sum = Op::zero(x, z);
        for part in &parts {
            let product = part.s.compose(&part.r).unwrap();
            assert_eq!(product, part.band.to_operator(), "per-part exactness");
            sum = sum.add(&product).unwrap();
        }
        assert_eq!(sum, band_op, "parts reassemble the band");
    }

    #[test]
    fn propagation_bound_holds_for_elementaries_and_random_pairs() {
        let (gxy, gyz) = catalog::random_glue_pair(5, 4, 6, 51);
        let e1 = Op::elementary(
            gxy.left().clone(),
            gxy.right().clone(),
            gxy.left().label(0),
            gxy.right().label(1),
        )
        .unwrap();
        let e2 = Op::elementary(
            gyz.left().clone(),
            gyz.right().clone(),
            gyz.left().label(1),
            gyz.right().label(3),
        )
        .unwrap();
        let report = propagation_bound_check(&e2, &e1, &gxy, &gyz).unwrap();
        assert!(report.ok);

        for seed in 0..10 {
            let t = random_operator(gxy.left(), gxy.right(), 0.35, seed);
            let s = random_operator(gyz.left(), gyz.right(), 0.35, seed + 60);
            let report = propagation_bound_check(&s, &t, &gxy, &gyz).unwrap();
            assert!(report.ok, "lhs {} rhs {}", report.lhs, report.rhs);
        }
    }

    #[test]
    fn identity_copies_under_dzero_compose_within_two() {
        let s = catalog::z_interval(5);
        let d0 = identity_glue(&s);
        let id = Op::from_entries(
            s.clone(),
            s.clone(),
            (0..s.len()).map(|i| (i, i, Complex64::ONE)),
        )
        .unwrap();
        let report = propagation_bound_check(&id, &id, &d0, &d0).unwrap();
        assert!(report.ok);
        assert!(report.lhs <= 2.0);
    }

    #[test]
    fn finite_propagation_definition_round_trips() {
        let (g, _) = catalog::random_glue_pair(6, 6, 3, 71);
        let t = random_operator(g.left(), g.right(), 0.4, 72);
        let p = t.propagation(&g).unwrap();
        let l = p + 0.5;
        for (y, x, c) in t.entries() {
            if g.cross(x, y) >= l {
                assert!(is_zero(c));
            }
        }
    }
}
