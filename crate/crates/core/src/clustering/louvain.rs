//! Louvain community detection.
//!
//! Two phases repeated until a level makes no move:
//!
//! 1. Local moving: each node (in a seeded random order) joins the
//!    neighbouring community with the largest strictly positive modularity
//!    gain over staying put. Ties go to the smallest community index.
//! 2. Aggregation: communities collapse into super-nodes; intra-community
//!    weight becomes a self-loop.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::graph::SubjectGraph;
use super::Clustering;
use crate::{seed, Error, Result};

const GAIN_EPS: f64 = 1e-12;

/// Weighted graph with self-loops, as used on aggregated levels.
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
}

impl Level {
    fn from_graph(g: &SubjectGraph) -> Self {
        let n = g.len();
        let mut adj = vec![Vec::new(); n];
        for (i, j, w) in g.edges() {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        Level {
            adj,
            self_loops: vec![0.0; n],
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|(_, w)| w).sum::<f64>() + 2.0 * self.self_loops[i]
    }

    /// One local-moving phase. Returns the community of each node,
    /// renumbered `0..c` by first appearance, and whether anything moved.
    fn local_moving(&self, order: &[usize]) -> (Vec<usize>, bool) {
        let n = self.len();
        let degree: Vec<f64> = (0..n).map(|i| self.degree(i)).collect();
        let two_m: f64 = degree.iter().sum();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = degree.clone();
        let mut moved_any = false;

        loop {
            let mut moved = false;
            for &i in order {
                let own = comm[i];
                let ki = degree[i];
                let mut links: BTreeMap<usize, f64> = BTreeMap::new();
                for &(j, w) in &self.adj[i] {
                    *links.entry(comm[j]).or_insert(0.0) += w;
                }
                tot[own] -= ki;
                let gain = |c: usize, k_in: f64| k_in - tot[c] * ki / two_m;
                let mut best = own;
                let mut best_gain = gain(own, links.get(&own).copied().unwrap_or(0.0));
                for (&c, &k_in) in &links {
                    let g = gain(c, k_in);
                    if g > best_gain + GAIN_EPS {
                        best = c;
                        best_gain = g;
                    }
                }
                tot[best] += ki;
                if best != own {
                    comm[i] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }

        let mut renumber = BTreeMap::new();
        let labels = comm
            .iter()
            .map(|c| {
                let next = renumber.len();
                *renumber.entry(*c).or_insert(next)
            })
            .collect();
        (labels, moved_any)
    }

    fn aggregate(&self, labels: &[usize]) -> Level {
        let c = labels.iter().max().map_or(0, |m| m + 1);
        let mut self_loops = vec![0.0; c];
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for i in 0..self.len() {
            self_loops[labels[i]] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                if j < i {
                    continue;
                }
                let (a, b) = (labels[i], labels[j]);
                if a == b {
                    self_loops[a] += w;
                } else {
                    *weights.entry((a.min(b), a.max(b))).or_insert(0.0) += w;
                }
            }
        }
        let mut adj = vec![Vec::new(); c];
        for ((a, b), w) in weights {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Level { adj, self_loops }
    }
}

/// Runs Louvain on `g`. Node visiting order at each level is shuffled with
/// a stream derived from `seed`. The result is canonicalised so cluster 0
/// holds the smallest subject id, and so on.
pub fn louvain(g: &SubjectGraph, seed: u64) -> Result<Clustering> {
    if g.is_empty() {
        return Err(Error::Empty("graph has no nodes"));
    }
    if g.total_weight() <= 0.0 {
        return Err(Error::ZeroWeightGraph);
    }
    let mut membership: Vec<usize> = (0..g.len()).collect();
    let mut level = Level::from_graph(g);
    for depth in 0.. {
        let mut order: Vec<usize> = (0..level.len()).collect();
        order.shuffle(&mut seed::rng_for(seed, &format!("louvain-level-{depth}")));
        let (labels, moved) = level.local_moving(&order);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = labels[*m];
        }
        level = level.aggregate(&labels);
    }
    Clustering::from_labels(g.nodes(), &membership)
}
