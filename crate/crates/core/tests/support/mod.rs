//! Test-only oracles. Everything here is derived from edge activations (node
//! `i` wakes with probability 1/N, picks a neighbor uniformly), never from the
//! library's transition formulas.
#![allow(dead_code)]

use binvote_core::graph::{random_connected, Graph};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Every activation `(i, j)` with its probability `1 / (N d_i)`.
pub fn activations(g: &Graph) -> Vec<(usize, usize, f64)> {
    let n = g.n() as f64;
    (0..g.n())
        .flat_map(|i| {
            let p = 1.0 / (n * g.degree(i) as f64);
            g.neighbors(i).iter().map(move |&j| (i, j, p))
        })
        .collect()
}

/// Single-walker law of one strong opinion, accumulated over activations.
pub fn walker_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.n();
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut moved = 0.0;
        for &(i, j, pr) in &activations(g) {
            if i == x {
                p[(x, j)] += pr;
                moved += pr;
            } else if j == x {
                p[(x, i)] += pr;
                moved += pr;
            }
        }
        p[(x, x)] += 1.0 - moved;
    }
    p
}

/// Hitting times by iterating survival probabilities:
/// `E[T] = sum_t P(T > t)`, stopped once the survival mass is below `1e-15`
/// or after `horizon` steps, plus a geometric tail estimate.
pub fn dp_hitting_times(g: &Graph, horizon: usize) -> DMatrix<f64> {
    let n = g.n();
    let p = walker_matrix(g);
    let mut h = DMatrix::zeros(n, n);
    for y in 0..n {
        let mut q = DVector::from_fn(n, |x, _| if x == y { 0.0 } else { 1.0 });
        let mut acc = q.clone();
        let mut prev_max = 1.0;
        for _ in 0..horizon {
            let mut next = &p * &q;
            next[y] = 0.0;
            let max = next.max();
            acc += &next;
            q = next;
            if max < 1e-15 {
                let rho = (max / prev_max).min(1.0 - 1e-12);
                acc += &q * (rho / (1.0 - rho));
                break;
            }
            prev_max = max;
        }
        for x in 0..n {
            h[(x, y)] = acc[x];
        }
    }
    h
}

/// Exact expected meeting times of two opposite strong opinions, by solving
/// the absorbing chain on ordered pairs `(x, y)`, `x != y`.
///
/// Variant X: a tick's activation `(i, j)` moves a token when it touches it;
/// activating the edge between the tokens annihilates them. For `xprime`,
/// adjacent states additionally convert up to the edge's activation mass from
/// "stay" into "meet".
pub fn exact_meeting_times(g: &Graph, xprime: bool) -> DMatrix<f64> {
    let n = g.n();
    let index = |x: usize, y: usize| x * n + y;
    let size = n * n;
    let mut a = DMatrix::<f64>::identity(size, size);
    let mut b = DVector::zeros(size);
    let acts = activations(g);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let row = index(x, y);
            b[row] = 1.0;
            let mut stay = 1.0;
            let mut meet = 0.0;
            for &(i, j, pr) in &acts {
                let touches_x = i == x || j == x;
                let touches_y = i == y || j == y;
                if touches_x && touches_y {
                    meet += pr;
                    stay -= pr;
                } else if touches_x {
                    let to = if i == x { j } else { i };
                    a[(row, index(to, y))] -= pr;
                    stay -= pr;
                } else if touches_y {
                    let to = if i == y { j } else { i };
                    a[(row, index(x, to))] -= pr;
                    stay -= pr;
                }
            }
            if xprime {
                let extra = meet.min(stay.max(0.0));
                stay -= extra;
            }
            a[(row, row)] -= stay;
        }
    }
    // Diagonal states are absorbing with value zero.
    for x in 0..n {
        let d = index(x, x);
        b[d] = 0.0;
    }
    let sol = a.lu().solve(&b).expect("absorbing system solvable");
    DMatrix::from_fn(n, n, |x, y| sol[index(x, y)])
}

/// All connected graphs on `n` nodes, one per isomorphism class.
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let perms = permutations(n);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let edges: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        let g = Graph::from_edges(n, &edges).unwrap();
        if !g.is_connected() {
            continue;
        }
        let canon = perms
            .iter()
            .map(|perm| {
                let mut m = 0u64;
                for &(u, v) in &edges {
                    let (a, b) = (perm[u].min(perm[v]), perm[u].max(perm[v]));
                    let k = pairs.iter().position(|&p| p == (a, b)).unwrap();
                    m |= 1 << k;
                }
                m
            })
            .min()
            .unwrap();
        if seen.insert(canon) {
            out.push(g);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// Random connected graph with `n` drawn from `sizes` and a random edge
/// density.
pub fn random_graph<R: Rng>(rng: &mut R, sizes: std::ops::RangeInclusive<usize>) -> Graph {
    let n = rng.random_range(sizes);
    let extra = rng.random_range(0.0..0.6);
    random_connected(n, extra, rng).unwrap()
}

/// Random connected graph with an odd node count in `3..=max_n`.
pub fn random_odd_graph<R: Rng>(rng: &mut R, max_n: usize) -> Graph {
    let n = 2 * rng.random_range(1..=(max_n - 1) / 2) + 1;
    random_graph(rng, n..=n)
}

/// Pearson chi-square statistic against expected counts.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

/// 99% quantile of chi-square with `dof` degrees of freedom.
pub fn chi_square_99(dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99)
}
