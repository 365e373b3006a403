//! Deterministic generators for the spaces, maps, glues, and families used
//! by the examples and tests, plus the textual reference grammar the CLI
//! resolves ("z_interval:21", "df:id:10", ...).
//!
//! Every generator is pure: the same reference always produces the same
//! object, bit for bit. Random constructions are driven by an explicitly
//! seeded ChaCha8 stream and quantize weights to dyadic values so exact
//! equality checks stay exact.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::almost_isometry::PartialMap;
use crate::error::{Error, Result};
use crate::family::MetricFamily;
use crate::glue::{identity_glue, GlueMetric};
use crate::space::FiniteMetricSpace;

/// Name of the random stream recorded in reports.
pub const RNG_NAME: &str = "chacha8";

// ---------------------------------------------------------------------------
// Elementary spaces
// ---------------------------------------------------------------------------

/// Integer interval [-n, n] with the standard metric |a - b|.
pub fn z_interval(n: usize) -> Arc<FiniteMetricSpace> {
    let coords: Vec<i64> = (-(n as i64)..=n as i64).collect();
    line_space(&coords)
}

/// Integer half-line [0, n] with the standard metric.
pub fn halfline(n: usize) -> Arc<FiniteMetricSpace> {
    let coords: Vec<i64> = (0..=n as i64).collect();
    line_space(&coords)
}

/// Square grid [-n, n]^2 with the l1 metric.
pub fn z2_grid(n: usize) -> Arc<FiniteMetricSpace> {
    let side: Vec<i64> = (-(n as i64)..=n as i64).collect();
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for &i in &side {
        for &j in &side {
            labels.push(format!("({i},{j})"));
            coords.push((i, j));
        }
    }
    let m = coords.len();
    let mut dist = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            dist[a][b] =
                ((coords[a].0 - coords[b].0).abs() + (coords[a].1 - coords[b].1).abs()) as f64;
        }
    }
    FiniteMetricSpace::new(labels, dist).expect("grid matrix is structurally sound")
}

fn line_space(coords: &[i64]) -> Arc<FiniteMetricSpace> {
    let labels = coords.iter().map(|c| c.to_string()).collect();
    let n = coords.len();
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            dist[a][b] = (coords[a] - coords[b]).abs() as f64;
        }
    }
    FiniteMetricSpace::new(labels, dist).expect("line matrix is structurally sound")
}

// ---------------------------------------------------------------------------
// The sparse line and its reflection
// ---------------------------------------------------------------------------

/// The sparse-line truncation together with the reflection map
/// f(x_n) = x_{-n} and bookkeeping about the index-to-coordinate chart.
#[derive(Debug, Clone)]
pub struct SparseLine {
    pub space: Arc<FiniteMetricSpace>,
    /// The reflection n -> -n transported to coordinates. Total, and an
    /// involution.
    pub reflection: PartialMap,
    /// Largest m <= n such that the chart k -> coordinate(k) is injective
    /// on [-m, m]. The chart identifies x_{2k} with x_{-2k}, so this is 1
    /// for every truncation with n >= 2.
    pub injective_up_to: usize,
    /// Index pairs (k, -k) that landed on the same coordinate.
    pub collisions: Vec<(i64, i64)>,
}

fn sparse_coordinate(n: i64) -> i64 {
    if n <= 0 {
        -2 * n
    } else if n % 2 == 0 {
        2 * n
    } else {
        2 * n - 1
    }
}

/// Sparse-line truncation {x_k : |k| <= n}, where x_k = -2k for k <= 0 and
/// x_{2m} = 4m, x_{2m-1} = 4m - 3 for m > 0.
///
/// The chart k -> x_k is not injective (x_{2m} = x_{-2m}); the space is the
/// set of distinct coordinates, and the reflection k -> -k descends to a
/// well-defined self-map of that set.
pub fn sparse_line(n: usize) -> SparseLine {
    let ni = n as i64;
    let mut coords: Vec<i64> = (-ni..=ni).map(sparse_coordinate).collect();
    coords.sort_unstable();
    coords.dedup();
    let space = line_space(&coords);

    let idx = |c: i64| space.position(&c.to_string()).expect("coordinate present");
    let mut pairs = Vec::new();
    for k in -ni..=ni {
        pairs.push((idx(sparse_coordinate(k)), idx(sparse_coordinate(-k))));
    }
    let reflection =
        PartialMap::new(space.clone(), space.clone(), pairs).expect("range is nonempty");

    let mut collisions = Vec::new();
    let mut injective_up_to = n;
    for k in 1..=ni {
        if sparse_coordinate(k) == sparse_coordinate(-k) {
            collisions.push((k, -k));
            if injective_up_to == n {
                injective_up_to = (k - 1) as usize;
            }
        }
    }

    SparseLine {
        space,
        reflection,
        injective_up_to,
        collisions,
    }
}

// ---------------------------------------------------------------------------
// Named maps
// ---------------------------------------------------------------------------

fn integer_labels(space: &Arc<FiniteMetricSpace>) -> Result<Vec<i64>> {
    space
        .labels()
        .iter()
        .map(|l| {
            l.parse::<i64>().map_err(|_| Error::InvalidParameter {
                what: "space labels",
                message: format!("label {l:?} is not an integer"),
            })
        })
        .collect()
}

/// Partial shift v -> v + k on a space with integer labels; the support is
/// every point whose shifted label exists.
pub fn shift_map(space: &Arc<FiniteMetricSpace>, k: i64) -> Result<PartialMap> {
    let values = integer_labels(space)?;
    let pairs: Vec<(usize, usize)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| space.position(&(v + k).to_string()).map(|j| (i, j)))
        .collect();
    PartialMap::new(space.clone(), space.clone(), pairs)
}

/// The total negation map v -> -v on z_interval(n).
pub fn negation_map(n: usize) -> PartialMap {
    let space = z_interval(n);
    let values = integer_labels(&space).expect("interval labels are integers");
    let pairs: Vec<(usize, usize)> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (i, space.position(&(-v).to_string()).expect("symmetric range")))
        .collect();
    PartialMap::new(space.clone(), space, pairs).expect("nonempty")
}

/// Identity on the nonnegative half of z_interval(n): a partial almost
/// isometry with support [0, n] inside [-n, n].
pub fn halfline_inclusion(n: usize) -> Result<PartialMap> {
    let space = z_interval(n);
    let pairs: Vec<(usize, usize)> = (0..=n as i64)
        .map(|v| {
            let i = space.position(&v.to_string()).expect("in range");
            (i, i)
        })
        .collect();
    PartialMap::new(space.clone(), space, pairs)
}

// ---------------------------------------------------------------------------
// Scenario families
// ---------------------------------------------------------------------------

/// Family of glue metrics induced by the identity on the nonnegative half
/// of z_interval(k), for k = 1..=n, with epsilon = 1.
pub fn idem_scenario(n: usize) -> Result<MetricFamily> {
    MetricFamily::from_fn("d_f for halfline inclusion", (1..=n).collect(), |k| {
        halfline_inclusion(k)
            .and_then(|f| f.glue(1.0))
            .expect("halfline inclusion always glues")
    })
}

/// Family of identity glues d⁰ on z_interval(k), k = 1..=n.
pub fn dzero_family(n: usize) -> Result<MetricFamily> {
    MetricFamily::from_fn("d0 on z_interval", (1..=n).collect(), |k| {
        identity_glue(&z_interval(k))
    })
}

/// The two families d_{f1} (identity) and d_{f2} (negation) on
/// z_interval(k), k = 1..=n, whose classes have no common upper bound.
pub fn nonupper_scenario(n: usize) -> Result<(MetricFamily, MetricFamily)> {
    let f1 = MetricFamily::from_fn("d_f for identity", (1..=n).collect(), |k| {
        PartialMap::identity(&z_interval(k))
            .and_then(|f| f.glue(1.0))
            .expect("identity always glues")
    })?;
    let f2 = MetricFamily::from_fn("d_f for negation", (1..=n).collect(), |k| {
        negation_map(k).glue(1.0).expect("negation always glues")
    })?;
    Ok((f1, f2))
}

// ---------------------------------------------------------------------------
// Random constructions (seeded, dyadic)
// ---------------------------------------------------------------------------

/// Shortest-path metric of a random connected graph with maximum degree at
/// most `max_degree`. Distances are integers (unit edge weights).
pub fn random_bounded_geometry(n: usize, max_degree: usize, seed: u64) -> Result<Arc<FiniteMetricSpace>> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            what: "n",
            message: "a random space needs at least one point".into(),
        });
    }
    if n >= 3 && max_degree < 2 {
        return Err(Error::InvalidParameter {
            what: "max_degree",
            message: "a connected graph on 3+ points needs degree at least 2".into(),
        });
    }
    if n == 2 && max_degree < 1 {
        return Err(Error::InvalidParameter {
            what: "max_degree",
            message: "two points need one edge".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![Vec::<usize>::new(); n];
    let mut degree = vec![0usize; n];
    // Random spanning tree: attach each new vertex to an earlier one with
    // spare capacity. A tree on i nodes has degree sum 2(i-1), so some
    // node stays below any cap >= 2 and the candidate list is never empty.
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|&j| degree[j] < max_degree).collect();
        let j = candidates[rng.gen_range(0..candidates.len())];
        adj[i].push(j);
        adj[j].push(i);
        degree[i] += 1;
        degree[j] += 1;
    }
    // Sprinkle extra edges without breaking the degree cap.
    for _ in 0..n {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && degree[a] < max_degree && degree[b] < max_degree && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
            degree[a] += 1;
            degree[b] += 1;
        }
    }
    // All-pairs BFS.
    let mut dist = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut seen = vec![usize::MAX; n];
        seen[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if seen[v] == usize::MAX {
                    seen[v] = seen[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for t in 0..n {
            dist[s][t] = seen[t] as f64;
        }
    }
    let labels = (0..n).map(|i| format!("p{i}")).collect();
    FiniteMetricSpace::new(labels, dist)
}

/// A random valid glue between two spaces: dyadic raw cross weights with a
/// separation floor of half the larger diameter, completed by shortest
/// paths. The floor rules out internal shortcuts, so the completion
/// restricts to the original metrics and always validates.
pub fn random_glue(
    left: &Arc<FiniteMetricSpace>,
    right: &Arc<FiniteMetricSpace>,
    seed: u64,
) -> GlueMetric {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = left.len();
    let ny = right.len();
    let floor = (left.diameter().max(right.diameter()) / 2.0).ceil() + 1.0;
    let mut raw = vec![0.0; nx * ny];
    for v in raw.iter_mut() {
        *v = floor + rng.gen_range(0..=16) as f64 / 8.0;
    }
    // Single-crossing completion; multi-crossing paths cost at least
    // 3*floor and never win.
    let mut cross = vec![0.0; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            let mut best = f64::INFINITY;
            for xp in 0..nx {
                for yp in 0..ny {
                    let v = left.dist(x, xp) + raw[xp * ny + yp] + right.dist(yp, y);
                    if v < best {
                        best = v;
                    }
                }
            }
            cross[x * ny + y] = best;
        }
    }
    GlueMetric::from_flat(left.clone(), right.clone(), cross)
}

/// A composable pair of random glues on random bounded-geometry spaces of
/// the given sizes.
pub fn random_glue_pair(nx: usize, ny: usize, nz: usize, seed: u64) -> (GlueMetric, GlueMetric) {
    let x = random_bounded_geometry(nx, 3, seed).expect("sizes are positive");
    let y = random_bounded_geometry(ny, 3, seed.wrapping_add(1000)).expect("sizes are positive");
    let z = random_bounded_geometry(nz, 3, seed.wrapping_add(2000)).expect("sizes are positive");
    (
        random_glue(&x, &y, seed.wrapping_add(10)),
        random_glue(&y, &z, seed.wrapping_add(20)),
    )
}

/// A random partial map between two spaces: a nonempty random support with
/// arbitrary images.
pub fn random_partial_map(
    domain: &Arc<FiniteMetricSpace>,
    codomain: &Arc<FiniteMetricSpace>,
    seed: u64,
) -> Result<PartialMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if domain.is_empty() || codomain.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut pairs = Vec::new();
    for x in 0..domain.len() {
        if rng.gen_bool(0.6) {
            pairs.push((x, rng.gen_range(0..codomain.len())));
        }
    }
    if pairs.is_empty() {
        pairs.push((rng.gen_range(0..domain.len()), rng.gen_range(0..codomain.len())));
    }
    PartialMap::new(domain.clone(), codomain.clone(), pairs)
}

// ---------------------------------------------------------------------------
// Reference grammar
// ---------------------------------------------------------------------------

fn bad_ref(reference: &str, message: impl Into<String>) -> Error {
    Error::BadReference {
        reference: reference.into(),
        message: message.into(),
    }
}

fn parse_usize(reference: &str, part: &str) -> Result<usize> {
    part.parse()
        .map_err(|_| bad_ref(reference, format!("expected an integer, got {part:?}")))
}

fn parse_u64(reference: &str, part: &str) -> Result<u64> {
    part.parse()
        .map_err(|_| bad_ref(reference, format!("expected a seed, got {part:?}")))
}

/// Resolve a space reference: `z_interval:N`, `halfline:N`, `z2_grid:N`,
/// `sparse_line:N`, or `random_bg:N:MAXDEG:SEED`.
pub fn resolve_space(reference: &str) -> Result<Arc<FiniteMetricSpace>> {
    let parts: Vec<&str> = reference.split(':').collect();
    match parts.as_slice() {
        ["z_interval", n] => Ok(z_interval(parse_usize(reference, n)?)),
        ["halfline", n] => Ok(halfline(parse_usize(reference, n)?)),
        ["z2_grid", n] => Ok(z2_grid(parse_usize(reference, n)?)),
        ["sparse_line", n] => Ok(sparse_line(parse_usize(reference, n)?).space),
        ["random_bg", n, d, s] => random_bounded_geometry(
            parse_usize(reference, n)?,
            parse_usize(reference, d)?,
            parse_u64(reference, s)?,
        ),
        _ => Err(bad_ref(reference, "unknown space reference")),
    }
}

/// Resolve a glue reference: `dzero:<space-ref>`, `df:id:N`, `df:neg:N`,
/// `idem:N`, or `random_glue:NX:NY:SEED`.
pub fn resolve_glue(reference: &str) -> Result<GlueMetric> {
    let parts: Vec<&str> = reference.split(':').collect();
    match parts.as_slice() {
        ["dzero", rest @ ..] if !rest.is_empty() => {
            Ok(identity_glue(&resolve_space(&rest.join(":"))?))
        }
        ["df", "id", n] => PartialMap::identity(&z_interval(parse_usize(reference, n)?))?.glue(1.0),
        ["df", "neg", n] => negation_map(parse_usize(reference, n)?).glue(1.0),
        ["idem", n] => halfline_inclusion(parse_usize(reference, n)?)?.glue(1.0),
        ["random_glue", nx, ny, s] => {
            let seed = parse_u64(reference, s)?;
            let x = random_bounded_geometry(parse_usize(reference, nx)?, 3, seed)?;
            let y = random_bounded_geometry(parse_usize(reference, ny)?, 3, seed.wrapping_add(1000))?;
            Ok(random_glue(&x, &y, seed.wrapping_add(10)))
        }
        _ => Err(bad_ref(reference, "unknown glue reference")),
    }
}

/// Resolve a map reference: `id:<space-ref>`, `neg:N`, `halfid:N`,
/// `sparse_reflection:N`, or `shift:K:<space-ref>`.
pub fn resolve_map(reference: &str) -> Result<PartialMap> {
    let parts: Vec<&str> = reference.split(':').collect();
    match parts.as_slice() {
        ["id", rest @ ..] if !rest.is_empty() => {
            PartialMap::identity(&resolve_space(&rest.join(":"))?)
        }
        ["neg", n] => Ok(negation_map(parse_usize(reference, n)?)),
        ["halfid", n] => halfline_inclusion(parse_usize(reference, n)?),
        ["sparse_reflection", n] => Ok(sparse_line(parse_usize(reference, n)?).reflection),
        ["shift", k, rest @ ..] if !rest.is_empty() => {
            let shift: i64 = k
                .parse()
                .map_err(|_| bad_ref(reference, format!("expected a shift, got {k:?}")))?;
            shift_map(&resolve_space(&rest.join(":"))?, shift)
        }
        _ => Err(bad_ref(reference, "unknown map reference")),
    }
}

/// Resolve a family reference: `idem:N`, `dzero:N`, `df_id:N`, `df_neg:N`.
pub fn resolve_family(reference: &str) -> Result<MetricFamily> {
    let parts: Vec<&str> = reference.split(':').collect();
    match parts.as_slice() {
        ["idem", n] => idem_scenario(parse_usize(reference, n)?),
        ["dzero", n] => dzero_family(parse_usize(reference, n)?),
        ["df_id", n] => Ok(nonupper_scenario(parse_usize(reference, n)?)?.0),
        ["df_neg", n] => Ok(nonupper_scenario(parse_usize(reference, n)?)?.1),
        _ => Err(bad_ref(reference, "unknown family reference")),
    }
}
