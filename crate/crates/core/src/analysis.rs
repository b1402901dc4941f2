//! Exact electric-network quantities for the biased walk.
//!
//! Edge `(i, j)` carries conductance `w_ij = (1/d_i + 1/d_j) / N`; each node
//! also holds a self-weight making its total exactly one, so the whole network
//! weighs `N`. Hitting times come from one dense LU solve per target, and
//! effective resistances from the Laplacian grounded at one terminal.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::chains::{biased_hop, transition_matrix, TransitionMatrix, WalkKind};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative residual accepted from a dense solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Slack on hitting-time comparisons when testing for hidden vertices.
pub const HIDDEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedView {
    n: usize,
    /// Per node: `(neighbor, w_ij)`, neighbors ascending.
    edges: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
}

impl WeightedView {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `w_ij` for an edge, `w_ii` on the diagonal, zero otherwise.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.self_weight[i];
        }
        self.edges[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|k| self.edges[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn edge_weights(&self, i: usize) -> &[(usize, f64)] {
        &self.edges[i]
    }

    pub fn self_weight(&self, i: usize) -> f64 {
        self.self_weight[i]
    }

    /// `w_i = sum_j w_ij`, self-weight included.
    pub fn node_total(&self, i: usize) -> f64 {
        self.self_weight[i] + self.edges[i].iter().map(|&(_, w)| w).sum::<f64>()
    }

    /// `w = sum_i w_i`.
    pub fn total(&self) -> f64 {
        (0..self.n).map(|i| self.node_total(i)).sum()
    }

    /// Smallest weight on an actual edge; infinite for an edgeless graph.
    pub fn min_edge_weight(&self) -> f64 {
        self.edges
            .iter()
            .flatten()
            .map(|&(_, w)| w)
            .fold(f64::INFINITY, f64::min)
    }

    /// Weighted Laplacian over the edges (self-weights do not conduct).
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (i, list) in self.edges.iter().enumerate() {
            for &(j, w) in list {
                l[(i, j)] -= w;
                l[(i, i)] += w;
            }
        }
        l
    }
}

pub fn edge_weights(g: &Graph) -> Result<WeightedView> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    let edges: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| g.neighbors(i).iter().map(|&j| (j, biased_hop(g, i, j))).collect())
        .collect();
    let self_weight = edges
        .iter()
        .map(|list| {
            let r = 1.0 - list.iter().map(|&(_, w)| w).sum::<f64>();
            if r.abs() < 1e-14 {
                0.0
            } else {
                r
            }
        })
        .collect();
    Ok(WeightedView { n, edges, self_weight })
}

/// `H[x][y]`: expected ticks for the walk from `x` to first reach `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingMatrix {
    n: usize,
    data: Vec<f64>,
}

impl HittingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    /// Largest entry and its pair (`(0, (0, 0))` on a single node).
    pub fn max(&self) -> (f64, (usize, usize)) {
        self.extreme(|a, b| a > b).unwrap_or((0.0, (0, 0)))
    }

    /// Smallest off-diagonal entry and its pair.
    pub fn min_off_diagonal(&self) -> Option<(f64, (usize, usize))> {
        self.extreme(|a, b| a < b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> Option<(f64, (usize, usize))> {
        let mut best: Option<(f64, (usize, usize))> = None;
        for x in 0..self.n {
            for y in (0..self.n).filter(|&y| y != x) {
                let h = self.get(x, y);
                if best.is_none_or(|(b, _)| better(h, b)) {
                    best = Some((h, (x, y)));
                }
            }
        }
        best
    }
}

fn solve_checked(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let x = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("matrix is singular".into()))?;
    let residual = (&a * &x - &b).norm();
    let scale = a.norm() * x.norm() + b.norm();
    if !x.iter().all(|v| v.is_finite()) || residual > SOLVE_TOL * scale {
        return Err(Error::Singular(format!(
            "relative residual {:.3e} exceeds {SOLVE_TOL:e}",
            residual / scale
        )));
    }
    Ok(x)
}

/// Solves `(I - P restricted to states != y) h = 1` for each target `y`.
pub fn hitting_matrix(p: &TransitionMatrix) -> Result<HittingMatrix> {
    let n = p.n();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|y| {
            let others: Vec<usize> = (0..n).filter(|&k| k != y).collect();
            let m = others.len();
            if m == 0 {
                return Ok(vec![0.0]);
            }
            let a = DMatrix::from_fn(m, m, |r, c| {
                let delta = if r == c { 1.0 } else { 0.0 };
                delta - p.get(others[r], others[c])
            });
            let h = solve_checked(a, DVector::from_element(m, 1.0))?;
            let mut col = vec![0.0; n];
            for (r, &k) in others.iter().enumerate() {
                if h[r].is_nan() || h[r] <= 0.0 {
                    return Err(Error::Singular(format!("non-positive hitting time {} -> {y}", k)));
                }
                col[k] = h[r];
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; n * n];
    for (y, col) in columns.iter().enumerate() {
        for (x, &h) in col.iter().enumerate() {
            data[x * n + y] = h;
        }
    }
    Ok(HittingMatrix { n, data })
}

/// Hitting matrix of the biased walk on `g`.
pub fn biased_hitting_matrix(g: &Graph) -> Result<HittingMatrix> {
    hitting_matrix(&transition_matrix(g, WalkKind::Biased)?)
}

/// Two-terminal resistance: unit current in at `x`, out at grounded `y`.
pub fn effective_resistance(wv: &WeightedView, x: usize, y: usize) -> Result<f64> {
    let n = wv.n();
    for node in [x, y] {
        if node >= n {
            return Err(Error::NodeOutOfRange { node, n });
        }
    }
    if x == y {
        return Err(Error::InvalidArgument("terminals must differ".into()));
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != y).collect();
    let l = wv.laplacian();
    let reduced = DMatrix::from_fn(n - 1, n - 1, |r, c| l[(keep[r], keep[c])]);
    let mut current = DVector::zeros(n - 1);
    let xi = keep.iter().position(|&k| k == x).unwrap();
    current[xi] = 1.0;
    let v = solve_checked(reduced, current)?;
    Ok(v[xi])
}

/// All pairwise resistances from one grounded inverse:
/// `r(x, z) = G_xx + G_zz - 2 G_xz`, with the ground node's row zero.
pub fn resistance_matrix(wv: &WeightedView) -> Result<DMatrix<f64>> {
    let n = wv.n();
    if n < 2 {
        return Ok(DMatrix::zeros(n, n));
    }
    let l = wv.laplacian();
    let ground = n - 1;
    let reduced = l.view((0, 0), (ground, ground)).into_owned();
    let mut green = DMatrix::zeros(n, n);
    let inv = solve_checked_matrix(reduced)?;
    green.view_mut((0, 0), (ground, ground)).copy_from(&inv);
    Ok(DMatrix::from_fn(n, n, |x, z| {
        green[(x, x)] + green[(z, z)] - 2.0 * green[(x, z)]
    }))
}

fn solve_checked_matrix(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("grounded Laplacian is singular".into()))?;
    let residual = (&a * &inv - DMatrix::identity(m, m)).norm();
    let scale = a.norm() * inv.norm();
    if !inv.iter().all(|v| v.is_finite()) || residual > SOLVE_TOL * scale.max(1.0) {
        return Err(Error::Singular(format!("inverse residual {residual:.3e}")));
    }
    Ok(inv)
}

/// Largest `|H(x,y) + H(y,x) - w r'_xy| / (w r'_xy)` over pairs `x < y`.
pub fn commute_identity_check(h: &HittingMatrix, wv: &WeightedView) -> Result<f64> {
    let r = resistance_matrix(wv)?;
    let w = wv.total();
    let mut worst: f64 = 0.0;
    for x in 0..h.n() {
        for y in x + 1..h.n() {
            let expected = w * r[(x, y)];
            let commute = h.get(x, y) + h.get(y, x);
            worst = worst.max((commute - expected).abs() / expected);
        }
    }
    Ok(worst)
}

/// `|H(x,y) + H(y,z) + H(z,x) - (H(x,z) + H(z,y) + H(y,x))|`.
pub fn cyclic_tour_check(h: &HittingMatrix, x: usize, y: usize, z: usize) -> f64 {
    let forward = h.get(x, y) + h.get(y, z) + h.get(z, x);
    let backward = h.get(x, z) + h.get(z, y) + h.get(y, x);
    (forward - backward).abs()
}

fn is_hidden(h: &HittingMatrix, t: usize) -> bool {
    (0..h.n()).filter(|&v| v != t).all(|v| h.get(t, v) <= h.get(v, t) + HIDDEN_TOL)
}

/// Nodes `t` with `H(t, v) <= H(v, t)` for every other `v`. Reversible chains
/// always have one, so an empty result is an error.
pub fn hidden_vertices(h: &HittingMatrix) -> Result<Vec<usize>> {
    let hidden: Vec<usize> = (0..h.n()).filter(|&t| is_hidden(h, t)).collect();
    if hidden.is_empty() {
        Err(Error::NoHiddenVertex)
    } else {
        Ok(hidden)
    }
}

/// `phi(x, y) = H(x, y) + H(y, t) - H(t, y)` for a hidden vertex `t`.
pub fn potential_phi(h: &HittingMatrix, t: usize, x: usize, y: usize) -> Result<f64> {
    if !is_hidden(h, t) {
        return Err(Error::NotHidden(t));
    }
    Ok(h.get(x, y) + h.get(y, t) - h.get(t, y))
}

/// The quantities behind the `H < N^4 / 2` certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub max_hitting: f64,
    pub n4_over_2: f64,
    pub min_edge_weight: f64,
    pub two_over_n2: f64,
    pub max_resistance: f64,
    pub n3_over_2: f64,
    pub hidden_vertices: Vec<usize>,
    pub pass: bool,
}

impl BoundReport {
    pub fn hitting_ok(&self) -> bool {
        self.max_hitting < self.n4_over_2
    }

    pub fn weight_ok(&self) -> bool {
        self.min_edge_weight > self.two_over_n2
    }

    pub fn resistance_ok(&self) -> bool {
        self.max_resistance < self.n3_over_2
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn bound_report(g: &Graph) -> Result<BoundReport> {
    let n = g.n();
    if n < 2 {
        return Err(Error::TopologyTooSmall {
            topology: "bound report",
            min: 2,
            n,
        });
    }
    let wv = edge_weights(g)?;
    let h = biased_hitting_matrix(g)?;
    let r = resistance_matrix(&wv)?;
    let nf = n as f64;
    let mut report = BoundReport {
        n,
        max_hitting: h.max().0,
        n4_over_2: nf.powi(4) / 2.0,
        min_edge_weight: wv.min_edge_weight(),
        two_over_n2: 2.0 / (nf * nf),
        max_resistance: r.iter().copied().fold(0.0, f64::max),
        n3_over_2: nf.powi(3) / 2.0,
        hidden_vertices: hidden_vertices(&h)?,
        pass: false,
    };
    report.pass = report.hitting_ok() && report.weight_ok() && report.resistance_ok();
    Ok(report)
}
