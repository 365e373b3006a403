//! Acceptance suite: one test per criterion, each printing a pass line
//! with its runtime. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roe_calculus::almost_isometry::{near_identity_check, sandwich_check, PartialMap};
use roe_calculus::catalog;
use roe_calculus::glue::{identity_glue, GlueMetric};
use roe_calculus::operator::{
    band_decompose, factor_through, max_support_degree, propagation_bound_check, Band,
    FinitePropagationOperator,
};
use roe_calculus::order::{
    inv_semi_check, order_check, selfadjoint_check, idempotent_check, upper_bound_feasibility,
    OrderRelation, UpperBoundOutcome, DEFAULT_GROWTH_THRESHOLD,
};
use roe_calculus::space::FiniteMetricSpace;
use roe_calculus::TOL;

fn finish(number: u32, name: &str, started: Instant, limit_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion {number:2} PASS ({name}) in {elapsed:.2}s");
    assert!(
        elapsed < limit_s,
        "criterion {number} exceeded its {limit_s}s budget: {elapsed:.2}s"
    );
}

#[test]
fn criterion_01_composition_suite() {
    let started = Instant::now();
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
        let nx = rng.gen_range(1..=12);
        let ny = rng.gen_range(1..=12);
        let nz = rng.gen_range(1..=12);
        let (gxy, gyz) = catalog::random_glue_pair(nx, ny, nz, seed);
        assert!(gxy.validate().ok, "seed {seed}: left glue invalid");
        assert!(gyz.validate().ok, "seed {seed}: right glue invalid");
        let composed = gxy.compose(&gyz).unwrap();
        assert!(composed.validate().ok, "seed {seed}: composition invalid");
        // Brute-force min-plus oracle, exact equality.
        for x in 0..nx {
            for z in 0..nz {
                let oracle = (0..ny)
                    .map(|y| gxy.cross(x, y) + gyz.cross(y, z))
                    .fold(f64::INFINITY, f64::min);
                assert_eq!(composed.cross(x, z), oracle, "seed {seed} entry ({x},{z})");
            }
        }
    }
    finish(1, "min-plus composition stays a glue metric", started, 5.0);
}

#[test]
fn criterion_02_regularity_suite() {
    let started = Instant::now();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xBEEF);
        let nx = rng.gen_range(1..=10);
        let ny = rng.gen_range(1..=10);
        let (g, _) = catalog::random_glue_pair(nx, ny, 1, seed + 10_000);
        let report = inv_semi_check(&g).unwrap();
        assert!(
            report.ok,
            "seed {seed}: slacks {} {}",
            report.lower_slack_min, report.upper_slack_min
        );
    }
    // Singleton case: the triple composition is exactly 3g.
    let x = FiniteMetricSpace::new(vec!["x".into()], vec![vec![0.0]]).unwrap();
    let y = FiniteMetricSpace::new(vec!["y".into()], vec![vec![0.0]]).unwrap();
    let g = GlueMetric::new(x, y, vec![vec![1.25]]).unwrap();
    let triple = g.compose(&g.adjoint()).unwrap().compose(&g).unwrap();
    assert_eq!(triple.cross(0, 0), 3.0 * 1.25);
    finish(2, "g <= g∘g*∘g <= 3g entrywise", started, 5.0);
}

fn random_operator(
    source: &Arc<FiniteMetricSpace>,
    target: &Arc<FiniteMetricSpace>,
    density: f64,
    seed: u64,
) -> FinitePropagationOperator {
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
    FinitePropagationOperator::from_entries(source.clone(), target.clone(), entries).unwrap()
}

#[test]
fn criterion_03_propagation_bound() {
    let started = Instant::now();
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let nx = rng.gen_range(2..=10);
        let ny = rng.gen_range(2..=10);
        let nz = rng.gen_range(2..=10);
        let (gxy, gyz) = catalog::random_glue_pair(nx, ny, nz, seed + 20_000);
        let t = random_operator(gxy.left(), gxy.right(), 0.4, seed + 1);
        let s = random_operator(gyz.left(), gyz.right(), 0.4, seed + 2);
        let report = propagation_bound_check(&s, &t, &gxy, &gyz).unwrap();
        assert!(
            report.ok,
            "seed {seed}: lhs {} > rhs {}",
            report.lhs, report.rhs
        );
    }
    finish(3, "prop(S∘T) <= prop(T) + prop(S)", started, 5.0);
}

/// Random support with row and column degrees capped.
fn random_capped_operator(
    source: &Arc<FiniteMetricSpace>,
    target: &Arc<FiniteMetricSpace>,
    max_degree: usize,
    complex_values: bool,
    seed: u64,
) -> FinitePropagationOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_deg = vec![0usize; target.len()];
    let mut col_deg = vec![0usize; source.len()];
    let mut entries = Vec::new();
    let mut slots: Vec<(usize, usize)> = (0..target.len())
        .flat_map(|y| (0..source.len()).map(move |x| (y, x)))
        .collect();
    // Fisher-Yates so degree capping doesn't bias toward low indices.
    for i in (1..slots.len()).rev() {
        slots.swap(i, rng.gen_range(0..=i));
    }
    for (y, x) in slots {
        if row_deg[y] < max_degree && col_deg[x] < max_degree && rng.gen_bool(0.25) {
            row_deg[y] += 1;
            col_deg[x] += 1;
            let value = if complex_values {
                Complex64::new(
                    rng.gen_range(-8..=8) as f64 / 4.0,
                    rng.gen_range(-8..=8) as f64 / 4.0,
                )
            } else {
                Complex64::ONE
            };
            if value != Complex64::ZERO {
                entries.push((y, x, value));
            }
        }
    }
    FinitePropagationOperator::from_entries(source.clone(), target.clone(), entries).unwrap()
}

#[test]
fn criterion_04_band_decomposition() {
    let started = Instant::now();
    for case in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case ^ 0xBA9D);
        let n = rng.gen_range(5..=40);
        let m = rng.gen_range(5..=40);
        let source = catalog::random_bounded_geometry(n, 3, case + 30_000).unwrap();
        let target = catalog::random_bounded_geometry(m, 3, case + 40_000).unwrap();
        let op = random_capped_operator(&source, &target, 6, case % 2 == 1, case + 50_000);
        let decomposition = band_decompose(&op);
        let degree = max_support_degree(&op);
        assert!(
            decomposition.count() <= degree,
            "case {case}: {} bands > degree {degree}",
            decomposition.count()
        );
        let rebuilt = decomposition.reassemble(source, target);
        assert_eq!(rebuilt, op, "case {case}: reassembly must be exact");
    }
    finish(4, "width-1 bands within the degree bound", started, 10.0);
}

#[test]
fn criterion_05_factorization() {
    let started = Instant::now();
    for case in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(case ^ 0xFAC7);
        let nx = rng.gen_range(2..=12);
        let ny = rng.gen_range(1..=10);
        let nz = rng.gen_range(2..=12);
        let (gxy, gyz) = catalog::random_glue_pair(nx, ny, nz, case + 60_000);
        // Random width-1 band: a partial injection with dyadic weights.
        let mut zs: Vec<usize> = (0..nz).collect();
        for i in (1..zs.len()).rev() {
            zs.swap(i, rng.gen_range(0..=i));
        }
        let mut entries = Vec::new();
        for (x, &z) in zs.iter().enumerate().take(nx.min(nz)) {
            if rng.gen_bool(0.7) || entries.is_empty() {
                entries.push((
                    z,
                    x,
                    Complex64::new(rng.gen_range(1..=8) as f64 / 4.0, 0.0),
                ));
            }
        }
        let band_op = FinitePropagationOperator::from_entries(
            gxy.left().clone(),
            gyz.right().clone(),
            entries,
        )
        .unwrap();
        let band = Band::from_operator(&band_op).unwrap();
        let composed = gxy.compose(&gyz).unwrap();
        let band_prop = band.propagation(&composed).unwrap();

        let parts = factor_through(&band, &gxy, &gyz).unwrap();
        let mut sum = FinitePropagationOperator::zero(gxy.left().clone(), gyz.right().clone());
        for part in &parts {
            let product = part.s.compose(&part.r).unwrap();
            assert_eq!(product, part.band.to_operator(), "case {case}: exact part");
            assert!(
                part.r.propagation(&gxy).unwrap() <= band_prop + 1.0 + TOL,
                "case {case}: R propagation"
            );
            assert!(
                part.s.propagation(&gyz).unwrap() <= band_prop + 1.0 + TOL,
                "case {case}: S propagation"
            );
            sum = sum.add(&product).unwrap();
        }
        assert_eq!(sum, band_op, "case {case}: parts reassemble the band");
    }
    finish(5, "bands factor exactly through the middle", started, 10.0);
}

#[test]
fn criterion_06_idem_scenario_at_fifty() {
    let started = Instant::now();
    let n = 50;
    let idem = catalog::idem_scenario(n).unwrap();
    let dzero = catalog::dzero_family(n).unwrap();

    let selfadj = selfadjoint_check(&idem).unwrap();
    assert!(selfadj.selfadjoint);
    assert_eq!(selfadj.uniform_bound, 0.0, "d_f is exactly symmetric");

    let idem_report = idempotent_check(&idem).unwrap();
    assert!(idem_report.idempotent);
    assert_eq!(idem_report.uniform_bound, 0.5, "g∘g = g + 1/2 exactly");

    let radii = [1.0, 2.0, 4.0, 8.0, 16.0];
    let forward = order_check(&idem, &dzero, &radii, DEFAULT_GROWTH_THRESHOLD).unwrap();
    assert_eq!(forward.relation, OrderRelation::HoldsBounded);
    let backward = order_check(&dzero, &idem, &radii, DEFAULT_GROWTH_THRESHOLD).unwrap();
    assert_eq!(backward.relation, OrderRelation::FailsGrowing);
    let slope = backward.evidence.maxima_slope.unwrap();
    assert!(slope >= 1.0, "maxima must grow at least linearly, slope {slope}");
    finish(6, "half-line glue: idempotent, not equivalent to d0", started, 10.0);
}

#[test]
fn criterion_07_non_directedness() {
    let started = Instant::now();
    let (f1, f2) = catalog::nonupper_scenario(10).unwrap();
    let g1 = f1.member(10).unwrap();
    let g2 = f2.member(10).unwrap();
    match upper_bound_feasibility(&g1, &g2, 3.0).unwrap() {
        UpperBoundOutcome::Obstruction(cert) => {
            assert!(cert.lhs > cert.rhs, "certificates must be genuine");
            assert_eq!(cert.rhs, 6.0);
        }
        other => panic!("expected an obstruction certificate, got {other:?}"),
    }
    let s = catalog::z_interval(10);
    let d0 = identity_glue(&s);
    match upper_bound_feasibility(&d0, &d0, 1.0).unwrap() {
        UpperBoundOutcome::Feasible(g) => assert!(g.validate().ok),
        other => panic!("expected the control to be feasible, got {other:?}"),
    }
    finish(7, "no common upper bound for identity and negation", started, 2.0);
}

/// Total map on a space defined by a label transform.
fn label_map(
    space: &Arc<FiniteMetricSpace>,
    transform: impl Fn(&str) -> String,
) -> PartialMap {
    let pairs: Vec<(usize, usize)> = (0..space.len())
        .map(|i| {
            let image = transform(space.label(i));
            (i, space.position(&image).expect("transform stays inside"))
        })
        .collect();
    PartialMap::new(space.clone(), space.clone(), pairs).unwrap()
}

fn grid_transform(kind: u8) -> impl Fn(&str) -> String {
    move |label: &str| {
        let body = label.trim_start_matches('(').trim_end_matches(')');
        let (i, j) = body.split_once(',').expect("grid label");
        let (i, j): (i64, i64) = (i.parse().unwrap(), j.parse().unwrap());
        let (a, b) = match kind {
            0 => (i, j),
            1 => (-i, -j),
            2 => (j, i),
            _ => (-j, -i),
        };
        format!("({a},{b})")
    }
}

#[test]
fn criterion_08_sandwich_lemma() {
    let started = Instant::now();
    let mut pairs: Vec<(PartialMap, PartialMap)> = Vec::new();

    let z = catalog::z_interval(8);
    let id = PartialMap::identity(&z).unwrap();
    let neg = catalog::negation_map(8);
    for f in [&id, &neg] {
        for g in [&id, &neg] {
            pairs.push((f.clone(), g.clone()));
        }
    }

    let grid = catalog::z2_grid(2);
    let grid_maps: Vec<PartialMap> = (0..4).map(|k| label_map(&grid, grid_transform(k))).collect();
    for f in &grid_maps {
        for g in &grid_maps {
            if pairs.len() < 16 {
                pairs.push((f.clone(), g.clone()));
            }
        }
    }

    let line = catalog::sparse_line(10);
    let line_id = PartialMap::identity(&line.space).unwrap();
    pairs.push((line.reflection.clone(), line.reflection.clone()));
    pairs.push((line_id.clone(), line.reflection.clone()));
    pairs.push((line.reflection.clone(), line_id.clone()));
    pairs.push((line_id.clone(), line_id));
    assert!(pairs.len() >= 20);

    for (i, (f, g)) in pairs.iter().take(20).enumerate() {
        assert!(f.is_total() && g.is_total());
        let report = sandwich_check(f, g, 1.0).unwrap();
        assert!(
            report.lower_gap_max <= TOL,
            "pair {i}: d_g∘d_f exceeds d_(g∘f) by {}",
            report.lower_gap_max
        );
        assert!(report.upper_gap_max.is_finite());
        assert!(report.passes);
    }
    finish(8, "composing glues sandwiches the composite glue", started, 10.0);
}

#[test]
fn criterion_09_near_identity_round_trip() {
    let started = Instant::now();
    let s = catalog::z_interval(8);
    let n = s.len() as i64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1DE);
        // Total self-map within distance 2 of the identity: the induced
        // glue has a diagonal bounded by defect/2 + 2 <= 4 <= 8.
        let pairs: Vec<(usize, usize)> = (0..s.len())
            .map(|i| {
                let shifted = (i as i64 + rng.gen_range(-2..=2)).clamp(0, n - 1);
                (i, shifted as usize)
            })
            .collect();
        let f = PartialMap::new(s.clone(), s.clone(), pairs).unwrap();
        let glue = f.glue(1.0).unwrap();
        assert!(glue.validate().ok);
        let report = near_identity_check(&glue).unwrap();
        assert!(report.l <= 8.0 + TOL, "seed {seed}: L = {}", report.l);
        assert!(
            report.ok,
            "seed {seed}: slacks {} {}",
            report.slack_upper, report.slack_lower
        );
    }
    finish(9, "bounded diagonals stay close to d0", started, 5.0);
}

/// Exhaustive search for distance-preserving bijections, with pruning on
/// partial assignments.
fn isometries_of(space: &FiniteMetricSpace) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut found = Vec::new();
    let mut assignment = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn recurse(
        space: &FiniteMetricSpace,
        assignment: &mut Vec<usize>,
        used: &mut Vec<bool>,
        depth: usize,
        found: &mut Vec<Vec<usize>>,
    ) {
        let n = space.len();
        if depth == n {
            found.push(assignment.clone());
            return;
        }
        for candidate in 0..n {
            if used[candidate] {
                continue;
            }
            let consistent = (0..depth).all(|prev| {
                (space.dist(prev, depth) - space.dist(assignment[prev], candidate)).abs() <= TOL
            });
            if consistent {
                assignment[depth] = candidate;
                used[candidate] = true;
                recurse(space, assignment, used, depth + 1, found);
                used[candidate] = false;
                assignment[depth] = usize::MAX;
            }
        }
    }
    recurse(space, &mut assignment, &mut used, 0, &mut found);
    found
}

#[test]
fn criterion_10_sparse_line() {
    let started = Instant::now();
    let line = catalog::sparse_line(20);
    let report = line.reflection.defect();
    // Exhaustive pair-scan oracle.
    let space = &line.space;
    let f = &line.reflection;
    let mut oracle = 0.0f64;
    for (x, fx) in f.pairs() {
        for (y, fy) in f.pairs() {
            oracle = oracle.max((space.dist(fx, fy) - space.dist(x, y)).abs());
        }
    }
    assert!(report.defect.is_finite());
    assert_eq!(report.defect, oracle);
    assert_eq!(report.defect, 2.0, "the reflection moves points by at most 1");

    // Even truncations have no symmetry: the identity is the only
    // distance-preserving bijection. (Odd truncations are an artifact of
    // cutting the chart symmetrically: the merged coordinate set becomes
    // mirror-symmetric and picks up the reflection, so they are excluded.)
    for n in [2usize, 4, 6] {
        let isos = isometries_of(&catalog::sparse_line(n).space);
        assert_eq!(isos.len(), 1, "N={n} should admit only the identity");
        assert!(isos[0].iter().enumerate().all(|(i, &j)| i == j));
    }
    for n in [3usize, 5] {
        let isos = isometries_of(&catalog::sparse_line(n).space);
        assert_eq!(isos.len(), 2, "odd N={n} picks up the mirror symmetry");
    }
    finish(10, "sparse line: finite defect, rigid even truncations", started, 30.0);
}

#[test]
fn criterion_11_universal_floor() {
    let started = Instant::now();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF100);
        let nx = rng.gen_range(1..=10);
        let ny = rng.gen_range(1..=10);
        let (g, _) = catalog::random_glue_pair(nx, ny, 1, seed + 70_000);
        let through = g.compose(&g.adjoint()).unwrap();
        let d0 = identity_glue(g.left());
        for x in 0..nx {
            for z in 0..nx {
                assert!(
                    through.cross(x, z) >= d0.cross(x, z) - 1.0 - TOL,
                    "seed {seed}: entry ({x},{z})"
                );
            }
        }
    }
    finish(11, "g*∘g dominates d0 - 1 entrywise", started, 5.0);
}
