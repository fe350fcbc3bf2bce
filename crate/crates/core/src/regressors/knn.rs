//! k-nearest-neighbour regression over a KD-tree with Minkowski-p distances.
//!
//! Distances are compared in reduced form (`sum |x_i - q_i|^p`, no root), and
//! neighbours are ordered by `(distance, training index)` so that ties resolve
//! to the lower index. The tree and the exhaustive scan use the same distance
//! kernel and the same summation order, which makes their predictions
//! bitwise identical.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[inline]
fn term(diff: f64, p: f64) -> f64 {
    let a = diff.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else {
        libm::pow(a, p)
    }
}

/// Reduced Minkowski distance.
#[inline]
pub fn reduced_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += term(x - y, p);
    }
    s
}

#[inline]
fn closer(a: (f64, usize), b: (f64, usize)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Equal => a.1 < b.1,
        Ordering::Greater => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KdNode {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Children, absent for leaves.
    children: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdTree {
    order: Vec<usize>,
    nodes: Vec<KdNode>,
    leaf_size: usize,
}

impl KdTree {
    pub fn build(x: &Matrix, leaf_size: usize) -> KdTree {
        let mut t = KdTree { order: (0..x.rows()).collect(), nodes: Vec::new(), leaf_size: leaf_size.max(1) };
        if x.rows() > 0 {
            t.build_node(x, 0, x.rows());
        }
        t
    }

    fn build_node(&mut self, x: &Matrix, start: usize, end: usize) -> u32 {
        let d = x.cols();
        let mut lo = alloc::vec![f64::INFINITY; d];
        let mut hi = alloc::vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (j, &v) in x.row(i).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let id = self.nodes.len() as u32;
        let spread_dim = (0..d).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)));
        self.nodes.push(KdNode { start, end, lo, hi, children: None });
        let Some(dim) = spread_dim else { return id };
        if end - start <= self.leaf_size || self.nodes[id as usize].hi[dim] == self.nodes[id as usize].lo[dim] {
            return id;
        }
        self.order[start..end].sort_by(|&a, &b| x[(a, dim)].total_cmp(&x[(b, dim)]).then(a.cmp(&b)));
        let mid = start + (end - start) / 2;
        let l = self.build_node(x, start, mid);
        let r = self.build_node(x, mid, end);
        self.nodes[id as usize].children = Some((l, r));
        id
    }

    fn box_distance(node: &KdNode, q: &[f64], p: f64) -> f64 {
        let mut s = 0.0;
        for ((&v, &lo), &hi) in q.iter().zip(&node.lo).zip(&node.hi) {
            let gap = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            s += term(gap, p);
        }
        s
    }

    /// The `k` nearest training rows as `(reduced distance, index)`, closest first.
    pub fn query(&self, x: &Matrix, q: &[f64], k: usize, p: f64) -> Vec<(f64, usize)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if !self.nodes.is_empty() && k > 0 {
            self.search(0, x, q, k, p, &mut best);
        }
        best
    }

    fn search(&self, id: usize, x: &Matrix, q: &[f64], k: usize, p: f64, best: &mut Vec<(f64, usize)>) {
        let node = &self.nodes[id];
        if best.len() == k && Self::box_distance(node, q, p) > best[k - 1].0 {
            return;
        }
        match node.children {
            None => {
                for &i in &self.order[node.start..node.end] {
                    let cand = (reduced_distance(x.row(i), q, p), i);
                    if best.len() < k || closer(cand, best[k - 1]) {
                        let pos = best.iter().position(|&b| closer(cand, b)).unwrap_or(best.len());
                        best.insert(pos, cand);
                        best.truncate(k);
                    }
                }
            }
            Some((l, r)) => {
                let dl = Self::box_distance(&self.nodes[l as usize], q, p);
                let dr = Self::box_distance(&self.nodes[r as usize], q, p);
                let (first, second) = if dr < dl { (r, l) } else { (l, r) };
                self.search(first as usize, x, q, k, p, best);
                self.search(second as usize, x, q, k, p, best);
            }
        }
    }
}

/// Exhaustive neighbour scan with the same ordering contract as [`KdTree::query`].
pub fn brute_force_neighbors(x: &Matrix, q: &[f64], k: usize, p: f64) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = x.row_iter().enumerate().map(|(i, r)| (reduced_distance(r, q, p), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNeighbors {
    x: Matrix,
    y: Vec<f64>,
    n_neighbors: usize,
    p: f64,
    tree: KdTree,
}

impl KNeighbors {
    pub fn fit(x: &Matrix, y: &[f64], n_neighbors: usize, p: f64, leaf_size: usize) -> Result<KNeighbors> {
        if n_neighbors == 0 || n_neighbors > x.rows() {
            return Err(Error::Hyperparameter {
                family: "KNR",
                reason: alloc::format!("n_neighbors = {n_neighbors} with {} training rows", x.rows()),
            });
        }
        Ok(KNeighbors { x: x.clone(), y: y.to_vec(), n_neighbors, p, tree: KdTree::build(x, leaf_size) })
    }

    fn average(&self, nn: &[(f64, usize)]) -> f64 {
        nn.iter().map(|&(_, i)| self.y[i]).sum::<f64>() / nn.len() as f64
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter().map(|q| self.average(&self.tree.query(&self.x, q, self.n_neighbors, self.p))).collect()
    }

    /// Reference predictions from an exhaustive scan.
    pub fn predict_brute_force(&self, x: &Matrix) -> Vec<f64> {
        x.row_iter()
            .map(|q| self.average(&brute_force_neighbors(&self.x, q, self.n_neighbors, self.p)))
            .collect()
    }
}
