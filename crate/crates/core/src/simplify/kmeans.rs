use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geo::PlanePoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this, meters.
    pub tol: f64,
    /// Independent seedings; the lowest within-cluster sum of squares wins.
    pub restarts: usize,
}

impl ClusterConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        ClusterConfig {
            k,
            seed,
            max_iter: 100,
            tol: 1e-3,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Cluster index per input point.
    pub labels: Vec<usize>,
    pub centroids: Vec<PlanePoint>,
    pub iterations: usize,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub history: Vec<f64>,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn wcss(&self, points: &[PlanePoint]) -> f64 {
        within_cluster_ss(points, &self.labels, self.k())
    }
}

/// Sum of squared distances from each point to the mean of its cluster.
pub fn within_cluster_ss(points: &[PlanePoint], labels: &[usize], k: usize) -> f64 {
    let centroids = means(points, labels, k);
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| centroids[l].map_or(0.0, |c| p.dist2(&c)))
        .sum()
}

fn means(points: &[PlanePoint], labels: &[usize], k: usize) -> Vec<Option<PlanePoint>> {
    let mut sum = vec![(0.0, 0.0, 0usize); k];
    for (p, &l) in points.iter().zip(labels) {
        sum[l].0 += p.x;
        sum[l].1 += p.y;
        sum[l].2 += 1;
    }
    sum.into_iter()
        .map(|(x, y, n)| (n > 0).then(|| PlanePoint::new(x / n as f64, y / n as f64)))
        .collect()
}

fn rng_for(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"kmeans");
    h.update(seed.to_le_bytes());
    h.update((restart as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn seed_centroids(points: &[PlanePoint], k: usize, rng: &mut ChaCha8Rng) -> Vec<PlanePoint> {
    let n = points.len();
    let first = ((rng.next_u64() as u128 * n as u128) >> 64) as usize;
    let mut centers = vec![points[first]];
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist2(&points[first])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = unit(rng) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding may leave the target just past the last positive weight
            pick.or_else(|| d2.iter().rposition(|&d| d > 0.0)).unwrap()
        } else {
            chosen.iter().position(|c| !c).unwrap()
        };
        chosen[pick] = true;
        let c = points[pick];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.dist2(&c));
        }
    }
    centers
}

/// Uniform grid over centroids for exact nearest-centroid queries.
struct CentroidGrid<'a> {
    centroids: &'a [PlanePoint],
    cell: f64,
    origin: PlanePoint,
    cells: HashMap<(i64, i64), Vec<usize>>,
    span: i64,
}

impl<'a> CentroidGrid<'a> {
    fn new(centroids: &'a [PlanePoint]) -> Self {
        let (mut lo, mut hi) = (centroids[0], centroids[0]);
        for c in centroids {
            lo.x = lo.x.min(c.x);
            lo.y = lo.y.min(c.y);
            hi.x = hi.x.max(c.x);
            hi.y = hi.y.max(c.y);
        }
        let (w, h) = ((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
        let cell = ((w * h) / centroids.len() as f64)
            .sqrt()
            .max(w.max(h) / 4096.0)
            .max(1e-6);
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, c) in centroids.iter().enumerate() {
            cells.entry(Self::key_of(lo, cell, *c)).or_default().push(i);
        }
        let span = ((w.max(h) / cell).ceil() as i64) + 2;
        CentroidGrid {
            centroids,
            cell,
            origin: lo,
            cells,
            span,
        }
    }

    fn key_of(origin: PlanePoint, cell: f64, p: PlanePoint) -> (i64, i64) {
        (
            ((p.x - origin.x) / cell).floor() as i64,
            ((p.y - origin.y) / cell).floor() as i64,
        )
    }

    /// Nearest centroid; the smallest index wins ties.
    fn nearest(&self, p: PlanePoint) -> usize {
        let (cx, cy) = Self::key_of(self.origin, self.cell, p);
        // Outside the grid the ring search would mostly visit empty cells.
        if cx < -1 || cy < -1 || cx > self.span || cy > self.span {
            return brute_nearest(self.centroids, p);
        }
        let mut best: Option<(f64, usize)> = None;
        let mut r = 0i64;
        loop {
            for dx in -r..=r {
                for dy in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    for &i in self.cells.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                        let d = p.dist2(&self.centroids[i]);
                        if best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                            best = Some((d, i));
                        }
                    }
                }
            }
            if let Some((bd, bi)) = best {
                let reach = r as f64 * self.cell;
                if bd < reach * reach {
                    return bi;
                }
            }
            r += 1;
            // Thin grids (nearly collinear centroids) can need many rings;
            // stop once the search costs more than a scan.
            if r > self.span + 2 || (2 * r + 1) * (2 * r + 1) > 4 * self.centroids.len() as i64 + 16 {
                return brute_nearest(self.centroids, p);
            }
        }
    }
}

fn brute_nearest(centroids: &[PlanePoint], p: PlanePoint) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in centroids.iter().enumerate() {
        let d = p.dist2(c);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn assign(points: &[PlanePoint], centroids: &[PlanePoint]) -> Vec<usize> {
    let grid = CentroidGrid::new(centroids);
    points.iter().map(|p| grid.nearest(*p)).collect()
}

/// Gives every empty cluster the point farthest from the centroid of the
/// currently largest cluster.
fn repair_empty(points: &[PlanePoint], labels: &mut [usize], centroids: &mut [PlanePoint]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = (0..k)
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .unwrap();
        let center = means(points, labels, k)[largest].unwrap();
        let mut far: Option<(f64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            if labels[i] == largest {
                let d = p.dist2(&center);
                if far.is_none_or(|(fd, _)| d > fd) {
                    far = Some((d, i));
                }
            }
        }
        let (_, moved) = far.unwrap();
        labels[moved] = empty;
        centroids[empty] = points[moved];
    }
}

/// Lloyd's algorithm from k-means++ seeding. Deterministic for a fixed seed.
pub fn kmeans(points: &[PlanePoint], cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    run(points, cfg, 0)
}

/// Best of `cfg.restarts` seeded runs by within-cluster sum of squares.
pub fn kmeans_best_of(points: &[PlanePoint], cfg: &ClusterConfig) -> Result<ClusterAssignment> {
    let mut best: Option<(f64, ClusterAssignment)> = None;
    for r in 0..cfg.restarts.max(1) {
        let a = run(points, cfg, r)?;
        let w = a.wcss(points);
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, a));
        }
    }
    Ok(best.unwrap().1)
}

fn run(points: &[PlanePoint], cfg: &ClusterConfig, restart: usize) -> Result<ClusterAssignment> {
    let k = cfg.k;
    if k == 0 {
        return Err(Error::Config("cluster count must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Config(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let mut rng = rng_for(cfg.seed, restart);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < cfg.max_iter.max(1) {
        iterations += 1;
        let mut next = assign(points, &centroids);
        repair_empty(points, &mut next, &mut centroids);
        let stable = next == labels;
        labels = next;
        let updated: Vec<PlanePoint> = means(points, &labels, k).into_iter().map(Option::unwrap).collect();
        let shift = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max);
        centroids = updated;
        history.push(within_cluster_ss(points, &labels, k));
        if stable || shift < cfg.tol {
            break;
        }
    }
    Ok(ClusterAssignment {
        labels,
        centroids,
        iterations,
        history,
    })
}
