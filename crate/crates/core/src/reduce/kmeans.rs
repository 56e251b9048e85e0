//! K-means with k-means++ seeding, a monotone WCSS curve and knee selection.
//!
//! Identical observations are clustered as one weighted point; this gives
//! the same objective as clustering every copy and makes k larger than the
//! number of distinct points well defined (copies are split off).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    /// Cluster of each input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
}

impl Clustering {
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == c)
            .collect()
    }
}

struct Groups {
    points: Vec<Vec<f64>>,
    weight: Vec<f64>,
    members: Vec<Vec<usize>>,
}

fn group(points: &[Vec<f64>]) -> Groups {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let key = |i: usize| points[i].iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    idx.sort_by_cached_key(|&i| (key(i), i));
    let mut g = Groups {
        points: Vec::new(),
        weight: Vec::new(),
        members: Vec::new(),
    };
    for (n, &i) in idx.iter().enumerate() {
        if n > 0 && points[idx[n - 1]] == points[i] {
            g.members.last_mut().unwrap().push(i);
        } else {
            g.points.push(points[i].clone());
            g.members.push(vec![i]);
        }
    }
    // order groups by their first member
    let mut order: Vec<usize> = (0..g.points.len()).collect();
    order.sort_by_key(|&j| g.members[j][0]);
    let points = order.iter().map(|&j| g.points[j].clone()).collect();
    let members: Vec<Vec<usize>> = order.iter().map(|&j| g.members[j].clone()).collect();
    let weight = members.iter().map(|m| m.len() as f64).collect();
    Groups {
        points,
        weight,
        members,
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = dist2(p, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check(points: &[Vec<f64>], k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds {} points",
            points.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidArgument(
            "feature vectors must be finite and equally long".into(),
        ));
    }
    Ok(())
}

/// Best of `restarts` seeded runs by WCSS (lowest restart index on ties).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<Clustering> {
    check(points, k)?;
    let g = group(points);
    Ok(kmeans_groups(&g, points.len(), k, seed, restarts.max(1)))
}

fn kmeans_groups(g: &Groups, n: usize, k: usize, seed: u64, restarts: usize) -> Clustering {
    if k >= g.points.len() {
        return split_all(g, n, k);
    }
    let runs: Vec<(Vec<usize>, Vec<Vec<f64>>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let init = plus_plus(g, k, &mut rng);
            lloyd(g, init)
        })
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2).then(a.0.cmp(&b.0)))
        .map(|(_, r)| r)
        .unwrap();
    expand(g, n, best)
}

/// Lloyd iterations from the given centroids.
pub fn kmeans_from(points: &[Vec<f64>], init: Vec<Vec<f64>>) -> Result<Clustering> {
    check(points, init.len())?;
    let g = group(points);
    if init.len() >= g.points.len() {
        return Ok(split_all(&g, points.len(), init.len()));
    }
    let r = lloyd(&g, init);
    Ok(expand(&g, points.len(), r))
}

fn expand(g: &Groups, n: usize, (assign, centroids, wcss): (Vec<usize>, Vec<Vec<f64>>, f64)) -> Clustering {
    let mut assignments = vec![0; n];
    for (j, m) in g.members.iter().enumerate() {
        for &i in m {
            assignments[i] = assign[j];
        }
    }
    Clustering {
        k: centroids.len(),
        assignments,
        centroids,
        wcss,
    }
}

/// Every distinct point is its own cluster; leftover clusters take single
/// copies off repeated points.
fn split_all(g: &Groups, n: usize, k: usize) -> Clustering {
    let mut assignments = vec![0; n];
    let mut centroids = Vec::with_capacity(k);
    for (j, m) in g.members.iter().enumerate() {
        for &i in m {
            assignments[i] = j;
        }
        centroids.push(g.points[j].clone());
    }
    let mut extra = k - g.points.len();
    'outer: for (j, m) in g.members.iter().enumerate() {
        for &i in m.iter().skip(1) {
            if extra == 0 {
                break 'outer;
            }
            assignments[i] = centroids.len();
            centroids.push(g.points[j].clone());
            extra -= 1;
        }
    }
    Clustering {
        k,
        assignments,
        centroids,
        wcss: 0.0,
    }
}

fn pick(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    // rounding fell off the end: last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn plus_plus(g: &Groups, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let first = pick(&g.weight, rng);
    let mut centroids = vec![g.points[first].clone()];
    let mut d: Vec<f64> = g.points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let w: Vec<f64> = d.iter().zip(&g.weight).map(|(d, w)| d * w).collect();
        let next = if w.iter().any(|&x| x > 0.0) {
            pick(&w, rng)
        } else {
            // all remaining mass sits on chosen centers; take an unused point
            (0..g.points.len()).find(|&j| d[j] > 0.0).unwrap_or(0)
        };
        let c = g.points[next].clone();
        for (dj, p) in d.iter_mut().zip(&g.points) {
            *dj = dj.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

// Slack on the Hamerly bounds, so rounding never lets a point skip a scan
// that could change its assignment.
const BOUND_SLACK: f64 = 1e-9;

/// Lloyd iterations with Hamerly bounds: a point is rescanned only when its
/// assigned centroid is not provably the strict nearest. The result equals
/// plain Lloyd, including the lowest-index tie rule.
fn lloyd(g: &Groups, mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let k = centroids.len();
    let dim = g.points[0].len();
    let m = g.points.len();
    let mut assign: Vec<usize> = vec![usize::MAX; m];
    // upper bound on dist to own centroid, lower bound on dist to any other
    let mut upper = vec![f64::INFINITY; m];
    let mut lower = vec![0.0f64; m];
    let mut half_gap = vec![0.0f64; k];
    for _ in 0..MAX_ITER {
        for c in 0..k {
            let mut best = f64::INFINITY;
            for c2 in 0..k {
                if c2 != c {
                    best = best.min(dist2(&centroids[c], &centroids[c2]));
                }
            }
            half_gap[c] = 0.5 * best.sqrt();
        }
        let mut new_assign = assign.clone();
        for j in 0..m {
            let a = assign[j];
            if a != usize::MAX {
                let bound = half_gap[a].max(lower[j]) * (1.0 - BOUND_SLACK);
                if upper[j] < bound {
                    continue;
                }
                upper[j] = dist2(&g.points[j], &centroids[a]).sqrt() * (1.0 + BOUND_SLACK);
                if upper[j] < bound {
                    continue;
                }
            }
            let p = &g.points[j];
            let (mut b1, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
            for (c, mu) in centroids.iter().enumerate() {
                let d = dist2(p, mu);
                if d < d1 {
                    d2 = d1;
                    b1 = c;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            new_assign[j] = b1;
            upper[j] = d1.sqrt() * (1.0 + BOUND_SLACK);
            lower[j] = d2.sqrt() * (1.0 - BOUND_SLACK);
        }
        let mut count = vec![0usize; k];
        for &a in &new_assign {
            count[a] += 1;
        }
        if count.contains(&0) {
            // refill empty clusters with the worst-served point of a shared cluster
            let mut d2: Vec<f64> = (0..m)
                .map(|j| g.weight[j] * dist2(&g.points[j], &centroids[new_assign[j]]))
                .collect();
            for c in 0..k {
                if count[c] > 0 {
                    continue;
                }
                let cand = (0..m)
                    .filter(|&j| count[new_assign[j]] > 1)
                    .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)));
                if let Some(j) = cand {
                    count[new_assign[j]] -= 1;
                    new_assign[j] = c;
                    count[c] = 1;
                    d2[j] = 0.0;
                    upper[j] = f64::INFINITY;
                    lower[j] = 0.0;
                }
            }
        }
        let changed = new_assign != assign;
        assign = new_assign;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut wsum = vec![0.0; k];
        for j in 0..m {
            let c = assign[j];
            wsum[c] += g.weight[j];
            for (s, x) in sums[c].iter_mut().zip(&g.points[j]) {
                *s += g.weight[j] * x;
            }
        }
        let mut moved = vec![0.0f64; k];
        for c in 0..k {
            if wsum[c] > 0.0 {
                let next: Vec<f64> = sums[c].iter().map(|s| s / wsum[c]).collect();
                moved[c] = dist2(&next, &centroids[c]).sqrt() * (1.0 + BOUND_SLACK);
                centroids[c] = next;
            }
        }
        if !changed {
            break;
        }
        let (mut m1, mut m1c, mut m2) = (0.0f64, usize::MAX, 0.0f64);
        for (c, &d) in moved.iter().enumerate() {
            if d > m1 {
                m2 = m1;
                m1 = d;
                m1c = c;
            } else if d > m2 {
                m2 = d;
            }
        }
        for j in 0..m {
            let a = assign[j];
            upper[j] += moved[a];
            lower[j] -= if a == m1c { m2 } else { m1 };
        }
    }
    let wcss = (0..m)
        .map(|j| g.weight[j] * dist2(&g.points[j], &centroids[assign[j]]))
        .sum();
    (assign, centroids, wcss)
}

/// σ(k) for k = 1..=kmax. Each k takes the better of fresh restarts and a
/// warm start from k − 1 plus its worst-served point, so the curve never
/// increases.
pub fn wcss_curve(points: &[Vec<f64>], kmax: usize, seed: u64, restarts: usize) -> Result<Vec<Clustering>> {
    check(points, kmax.max(1))?;
    let g = group(points);
    let n = points.len();
    let mut out: Vec<Clustering> = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let fresh = kmeans_groups(&g, n, k, seed, restarts.max(1));
        let best = match out.last() {
            Some(prev) if k < g.points.len() => {
                let mut init = prev.centroids.clone();
                let worst = g
                    .points
                    .iter()
                    .enumerate()
                    .map(|(j, p)| (j, g.weight[j] * nearest(p, &init).1))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .unwrap()
                    .0;
                init.push(g.points[worst].clone());
                let warm = expand(&g, n, lloyd(&g, init));
                if warm.wcss < fresh.wcss {
                    warm
                } else {
                    fresh
                }
            }
            _ => fresh,
        };
        log::trace!("k = {k}: wcss {}", best.wcss);
        out.push(best);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elbow {
    pub k: usize,
    /// Normalized distance of the knee from the chord.
    pub distance: f64,
    /// True when the curve is a straight line.
    pub no_elbow: bool,
}

/// Knee of a decreasing curve: the interior point farthest from the chord
/// joining its ends, both axes scaled to [0, 1].
pub fn elbow_select(curve: &[(usize, f64)]) -> Result<Elbow> {
    if curve.len() < 3 {
        return Err(Error::InvalidArgument("elbow selection needs at least 3 points".into()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidArgument("curve k values must increase".into()));
    }
    let (k0, s0) = (curve[0].0 as f64, curve[0].1);
    let (k1, s1) = (curve[curve.len() - 1].0 as f64, curve[curve.len() - 1].1);
    let sx = k1 - k0;
    let sy = if (s0 - s1).abs() > 0.0 { (s0 - s1).abs() } else { 1.0 };
    let (ex, ey) = (1.0, (s1 - s0) / sy);
    let norm = (ex * ex + ey * ey).sqrt();
    let mut best = (curve[1].0, -1.0);
    for &(k, s) in &curve[1..curve.len() - 1] {
        let (x, y) = ((k as f64 - k0) / sx, (s - s0) / sy);
        let d = (x * ey - y * ex).abs() / norm;
        if d > best.1 + 1e-12 {
            best = (k, d);
        }
    }
    let no_elbow = best.1 <= 1e-12;
    if no_elbow {
        log::warn!("WCSS curve is linear: no elbow");
    }
    Ok(Elbow {
        k: best.0,
        distance: best.1.max(0.0),
        no_elbow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[cfg(test)]
    fn lloyd_naive(g: &Groups, mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
        let k = centroids.len();
        let dim = g.points[0].len();
        let m = g.points.len();
        let mut assign: Vec<usize> = vec![usize::MAX; m];
        for _ in 0..MAX_ITER {
            let next: Vec<(usize, f64)> = g.points.iter().map(|p| nearest(p, &centroids)).collect();
            let mut new_assign: Vec<usize> = next.iter().map(|x| x.0).collect();
            // refill empty clusters with the worst-served point of a shared cluster
            let mut count = vec![0usize; k];
            for &a in &new_assign {
                count[a] += 1;
            }
            let mut d2: Vec<f64> = next.iter().zip(&g.weight).map(|(x, w)| x.1 * w).collect();
            for c in 0..k {
                if count[c] > 0 {
                    continue;
                }
                let cand = (0..m)
                    .filter(|&j| count[new_assign[j]] > 1)
                    .max_by(|&a, &b| d2[a].total_cmp(&d2[b]).then(b.cmp(&a)));
                if let Some(j) = cand {
                    count[new_assign[j]] -= 1;
                    new_assign[j] = c;
                    count[c] = 1;
                    d2[j] = 0.0;
                }
            }
            let changed = new_assign != assign;
            assign = new_assign;
            let mut sums = vec![vec![0.0; dim]; k];
            let mut wsum = vec![0.0; k];
            for j in 0..m {
                let c = assign[j];
                wsum[c] += g.weight[j];
                for (s, x) in sums[c].iter_mut().zip(&g.points[j]) {
                    *s += g.weight[j] * x;
                }
            }
            for c in 0..k {
                if wsum[c] > 0.0 {
                    centroids[c] = sums[c].iter().map(|s| s / wsum[c]).collect();
                }
            }
            if !changed {
                break;
            }
        }
        let wcss = (0..m)
            .map(|j| g.weight[j] * dist2(&g.points[j], &centroids[assign[j]]))
            .sum();
        (assign, centroids, wcss)
    }

    fn cloud(cx: f64, n: usize, off: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(off);
        (0..n)
            .map(|_| vec![cx + rng.random::<f64>(), rng.random::<f64>()])
            .collect()
    }

    #[test]
    fn singletons_and_single_cluster() {
        let pts = cloud(0.0, 12, 1);
        let c = kmeans(&pts, 12, 7, 4).unwrap();
        assert_eq!(c.wcss, 0.0);
        let mut seen = c.assignments.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 12);

        let c = kmeans(&pts, 1, 7, 4).unwrap();
        let mean: Vec<f64> = (0..2).map(|d| pts.iter().map(|p| p[d]).sum::<f64>() / 12.0).collect();
        for d in 0..2 {
            assert!((c.centroids[0][d] - mean[d]).abs() < 1e-12);
        }
        let w: f64 = pts.iter().map(|p| dist2(p, &mean)).sum();
        assert!((c.wcss - w).abs() < 1e-9);
    }

    #[test]
    fn separated_clouds() {
        let mut pts = cloud(0.0, 20, 2);
        pts.extend(cloud(100.0, 15, 3));
        let c = kmeans(&pts, 2, 11, 8).unwrap();
        let a = c.assignments[0];
        assert!(c.assignments[..20].iter().all(|&x| x == a));
        assert!(c.assignments[20..].iter().all(|&x| x != a));
    }

    #[test]
    fn duplicates_split_when_k_exceeds_distinct() {
        let pts = vec![vec![0.0], vec![0.0], vec![0.0], vec![1.0]];
        let c = kmeans(&pts, 3, 0, 2).unwrap();
        assert_eq!(c.wcss, 0.0);
        for cl in 0..3 {
            assert!(!c.members(cl).is_empty());
        }
        assert!(kmeans(&pts, 5, 0, 2).is_err());
        assert!(kmeans(&pts, 0, 0, 2).is_err());
    }

    #[test]
    fn deterministic_and_monotone_curve() {
        let mut pts = cloud(0.0, 30, 4);
        pts.extend(cloud(5.0, 30, 5));
        let a = wcss_curve(&pts, 15, 9, 3).unwrap();
        let b = wcss_curve(&pts, 15, 9, 3).unwrap();
        assert_eq!(a, b);
        for w in a.windows(2) {
            assert!(w[1].wcss <= w[0].wcss);
        }
    }

    #[test]
    fn two_slope_knee() {
        let curve: Vec<(usize, f64)> = (1..=40)
            .map(|k| {
                (
                    k,
                    if k <= 10 {
                        100.0 - 9.0 * k as f64
                    } else {
                        10.0 - 0.2 * (k - 10) as f64
                    },
                )
            })
            .collect();
        let e = elbow_select(&curve).unwrap();
        assert_eq!(e.k, 10);
        assert!(!e.no_elbow);
    }

    #[test]
    fn linear_curve_has_no_elbow() {
        let curve: Vec<(usize, f64)> = (1..=5).map(|k| (k, 10.0 - k as f64)).collect();
        let e = elbow_select(&curve).unwrap();
        assert!(e.no_elbow);
        assert_eq!(e.k, 2);
        assert!(elbow_select(&curve[..2]).is_err());
    }

    #[test]
    fn bounded_lloyd_matches_plain_lloyd() {
        for seed in 0..20u64 {
            let mut pts = cloud(0.0, 40, seed);
            pts.extend(cloud(1.5, 25, seed + 100));
            pts.push(pts[3].clone());
            let g = group(&pts);
            for k in [2, 5, 9, 17] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let init = plus_plus(&g, k, &mut rng);
                assert_eq!(lloyd(&g, init.clone()), lloyd_naive(&g, init));
            }
        }
    }
}
