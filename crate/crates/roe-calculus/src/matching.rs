//! Bipartite matching and edge coloring on sparse supports.
//!
//! Both algorithms are deterministic given the input edge order: adjacency
//! structures are built in the order edges arrive and scanned in that
//! order.

use std::collections::VecDeque;

const UNMATCHED: usize = usize::MAX;

/// Maximum bipartite matching (Hopcroft–Karp). `edges` are (left, right)
/// index pairs; returns matched pairs sorted by left index.
pub fn maximum_matching(left: usize, right: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut adj = vec![Vec::new(); left];
    for &(a, b) in edges {
        debug_assert!(a < left && b < right);
        adj[a].push(b);
    }
    let mut match_left = vec![UNMATCHED; left];
    let mut match_right = vec![UNMATCHED; right];

    loop {
        // BFS layering from free left vertices.
        let mut layer = vec![usize::MAX; left];
        let mut queue = VecDeque::new();
        for (a, &m) in match_left.iter().enumerate() {
            if m == UNMATCHED {
                layer[a] = 0;
                queue.push_back(a);
            }
        }
        let mut reachable_free = false;
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                match match_right[b] {
                    UNMATCHED => reachable_free = true,
                    next => {
                        if layer[next] == usize::MAX {
                            layer[next] = layer[a] + 1;
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
        if !reachable_free {
            break;
        }
        // DFS along the layering for a maximal set of augmenting paths.
        fn augment(
            a: usize,
            adj: &[Vec<usize>],
            layer: &mut [usize],
            match_left: &mut [usize],
            match_right: &mut [usize],
        ) -> bool {
            let depth = std::mem::replace(&mut layer[a], usize::MAX);
            for &b in &adj[a] {
                let next = match_right[b];
                let extends = next == UNMATCHED
                    || (layer[next] == depth + 1
                        && augment(next, adj, layer, match_left, match_right));
                if extends {
                    match_left[a] = b;
                    match_right[b] = a;
                    return true;
                }
            }
            false
        }
        for a in 0..left {
            if match_left[a] == UNMATCHED && layer[a] == 0 {
                augment(a, &adj, &mut layer, &mut match_left, &mut match_right);
            }
        }
    }

    match_left
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != UNMATCHED)
        .map(|(a, &b)| (a, b))
        .collect()
}

/// Proper edge coloring of a bipartite graph with exactly max-degree
/// colors (König). Returns one color per input edge.
///
/// Classic alternating-path construction: use the smallest color free at
/// both endpoints if one exists; otherwise take color `a` free at the left
/// endpoint and `b` free at the right, flip the maximal a/b alternating
/// path starting at the right endpoint, and use `a`. In a bipartite graph
/// that path cannot end at the left endpoint (an alternating path between
/// opposite sides has odd length and would arrive on an `a`-colored edge,
/// but `a` is free there), so the flip frees `a` at both ends.
pub fn edge_coloring(left: usize, right: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut deg_left = vec![0usize; left];
    let mut deg_right = vec![0usize; right];
    for &(a, b) in edges {
        deg_left[a] += 1;
        deg_right[b] += 1;
    }
    let colors = deg_left
        .iter()
        .chain(deg_right.iter())
        .copied()
        .max()
        .unwrap_or(0);
    // Slot tables: which edge uses color c at each vertex.
    let mut at_left = vec![vec![UNMATCHED; colors]; left];
    let mut at_right = vec![vec![UNMATCHED; colors]; right];
    let mut color = vec![UNMATCHED; edges.len()];

    for (e, &(a, b)) in edges.iter().enumerate() {
        if let Some(c) =
            (0..colors).find(|&c| at_left[a][c] == UNMATCHED && at_right[b][c] == UNMATCHED)
        {
            color[e] = c;
            at_left[a][c] = e;
            at_right[b][c] = e;
            continue;
        }
        let ca = (0..colors).find(|&c| at_left[a][c] == UNMATCHED).unwrap();
        let cb = (0..colors).find(|&c| at_right[b][c] == UNMATCHED).unwrap();

        // Collect the maximal ca/cb alternating path starting at b.
        let mut path = Vec::new();
        let mut v = b;
        let mut side_right = true;
        let mut want = ca;
        loop {
            let slot = if side_right {
                at_right[v][want]
            } else {
                at_left[v][want]
            };
            if slot == UNMATCHED {
                break;
            }
            path.push(slot);
            let (ea, eb) = edges[slot];
            v = if side_right { ea } else { eb };
            side_right = !side_right;
            want = if want == ca { cb } else { ca };
        }
        // Flip: clear every path slot first, then rewrite with the
        // toggled colors, so shared vertices never lose a live entry.
        for &pe in &path {
            let (ea, eb) = edges[pe];
            let c = color[pe];
            at_left[ea][c] = UNMATCHED;
            at_right[eb][c] = UNMATCHED;
        }
        for &pe in &path {
            let (ea, eb) = edges[pe];
            let c = if color[pe] == ca { cb } else { ca };
            color[pe] = c;
            at_left[ea][c] = pe;
            at_right[eb][c] = pe;
        }
        color[e] = ca;
        at_left[a][ca] = e;
        at_right[b][ca] = e;
    }
    color
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_proper(left: usize, right: usize, edges: &[(usize, usize)], colors: &[usize]) {
        for (i, &(a, b)) in edges.iter().enumerate() {
            for (j, &(c, d)) in edges.iter().enumerate() {
                if i != j && colors[i] == colors[j] {
                    assert!(a != c && b != d, "edges {i} and {j} clash");
                }
            }
        }
        let mut degl = vec![0usize; left];
        let mut degr = vec![0usize; right];
        for &(a, b) in edges {
            degl[a] += 1;
            degr[b] += 1;
        }
        let max_deg = degl.iter().chain(degr.iter()).copied().max().unwrap_or(0);
        let used = colors.iter().collect::<std::collections::HashSet<_>>().len();
        assert!(used <= max_deg, "{used} colors > max degree {max_deg}");
    }

    #[test]
    fn matching_saturates_a_perfect_case() {
        let edges = vec![(0, 1), (0, 0), (1, 0), (2, 2)];
        let m = maximum_matching(3, 3, &edges);
        assert_eq!(m.len(), 3);
    }

    #[test]
    fn matching_handles_empty_and_star() {
        assert!(maximum_matching(0, 0, &[]).is_empty());
        let star = vec![(0, 0), (1, 0), (2, 0)];
        assert_eq!(maximum_matching(3, 1, &star).len(), 1);
    }

    #[test]
    fn coloring_meets_the_koenig_bound() {
        let edges = vec![(0, 0), (0, 1), (1, 0), (2, 1), (2, 2), (1, 2)];
        let colors = edge_coloring(3, 3, &edges);
        check_proper(3, 3, &edges, &colors);

        // A shape where peeling plain maximum matchings can strand the
        // max-degree vertex; proper coloring still uses two colors.
        let tricky = vec![(1, 0), (2, 1), (0, 0), (0, 1)];
        let colors = edge_coloring(3, 2, &tricky);
        check_proper(3, 2, &tricky, &colors);
        assert_eq!(colors.iter().copied().max().unwrap(), 1);
    }

    #[test]
    fn coloring_random_supports_stays_proper() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let left = rng.gen_range(1..=12);
            let right = rng.gen_range(1..=12);
            let mut edges = Vec::new();
            for a in 0..left {
                for b in 0..right {
                    if rng.gen_bool(0.3) {
                        edges.push((a, b));
                    }
                }
            }
            let colors = edge_coloring(left, right, &edges);
            check_proper(left, right, &edges, &colors);
        }
    }
}
