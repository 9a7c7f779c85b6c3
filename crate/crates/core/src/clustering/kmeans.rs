//! Lloyd's K-Means with k-means++ seeding.

use rand::Rng;

use crate::{seed, Error, Result};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each centroid update.
    pub inertia: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check(points: &[Vec<f64>], k: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Empty("no points to cluster"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::InvalidK {
            k,
            points: points.len(),
        });
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidMap("points of unequal dimension".into()));
    }
    Ok(())
}

/// k-means++ choice of `k` initial point indices.
pub fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // rounding can walk past the end onto a zero-weight point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignment.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None::<(usize, f64)>;
        for (i, p) in points.iter().enumerate() {
            if sizes[assignment[i]] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[assignment[i]]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= number of points");
        assignment[i] = empty;
    }
}

fn update(points: &[Vec<f64>], assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = points[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        let c = c.max(1) as f64;
        s.iter_mut().for_each(|v| *v /= c);
    }
    sums
}

/// Lloyd iterations from the given initial centroids until the assignment
/// stops changing or [`MAX_ITERATIONS`] is reached.
pub fn lloyd(points: &[Vec<f64>], initial: Vec<Vec<f64>>) -> Result<KMeansResult> {
    check(points, initial.len())?;
    let k = initial.len();
    let mut centroids = initial;
    let mut assignment: Vec<usize> = Vec::new();
    let mut inertia = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        repair_empty(points, &centroids, &mut next);
        if next == assignment {
            break;
        }
        assignment = next;
        centroids = update(points, &assignment, k);
        inertia.push(
            points
                .iter()
                .zip(&assignment)
                .map(|(p, &a)| sq_dist(p, &centroids[a]))
                .sum(),
        );
    }
    Ok(KMeansResult {
        assignment,
        centroids,
        inertia,
    })
}

/// Seeded K-Means: k-means++ initialisation then Lloyd. Deterministic for
/// fixed `(points, k, seed)`; no cluster is ever left empty.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    check(points, k)?;
    let mut rng = seed::rng(seed);
    let init = kmeans_plus_plus(points, k, &mut rng);
    lloyd(
        points,
        init.into_iter().map(|i| points[i].clone()).collect(),
    )
}
