//! Lloyd's algorithm with k-means++ style seeding.

use rand::Rng;

use crate::cluster::{check_points, sq_dist};
use crate::error::{Error, Result};
use crate::graph::Partition;
use crate::num::{seeded_rng, Matrix, Prng, Scalar};

const MAX_ITERS: usize = 300;

fn seed_centroids<S: Scalar>(points: &Matrix<S>, k: usize, rng: &mut Prng) -> Matrix<S> {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = Matrix::zeros(k, d);
    let first = rng.gen_range(0..n);
    for j in 0..d {
        centroids.set(0, j, points.get(first, j));
    }
    let mut best_d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)).as_f64())
        .collect();
    for c in 1..k {
        let total: f64 = best_d2.iter().sum();
        let pick = if total > 0.0 {
            // d^2-weighted draw
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in best_d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        for j in 0..d {
            centroids.set(c, j, points.get(pick, j));
        }
        for i in 0..n {
            let d2 = sq_dist(points.row(i), centroids.row(c)).as_f64();
            if d2 < best_d2[i] {
                best_d2[i] = d2;
            }
        }
    }
    centroids
}

fn nearest_centroid<S: Scalar>(centroids: &Matrix<S>, point: &[S]) -> usize {
    let mut best = 0usize;
    let mut best_d = sq_dist(centroids.row(0), point);
    for c in 1..centroids.rows() {
        let d = sq_dist(centroids.row(c), point);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Within-cluster sum of squared distances.
fn wcss<S: Scalar>(points: &Matrix<S>, centroids: &Matrix<S>, assign: &[usize]) -> f64 {
    (0..points.rows())
        .map(|i| sq_dist(points.row(i), centroids.row(assign[i])).as_f64())
        .sum()
}

/// Partitions `points` into `k` clusters. Runs Lloyd iterations from
/// k-means++ seeding until the assignment reaches a fixpoint or 300
/// iterations; an empty cluster is reseeded to the point farthest from its
/// current centroid.
pub fn kmeans<S: Scalar>(points: &Matrix<S>, k: usize, seed: u64, t: usize) -> Result<Partition> {
    check_points(points)?;
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::Clustering(format!("k = {k} outside 1..={n}")));
    }
    let mut rng = seeded_rng(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let d = points.cols();
    let mut assign: Vec<usize> = (0..n).map(|i| nearest_centroid(&centroids, points.row(i))).collect();

    for _ in 0..MAX_ITERS {
        // recompute means
        let mut sums = Matrix::<S>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for j in 0..d {
                let v = sums.get(c, j) + points.get(i, j);
                sums.set(c, j, v);
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed to the point farthest from its assigned centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), centroids.row(assign[a])).as_f64();
                        let db = sq_dist(points.row(b), centroids.row(assign[b])).as_f64();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                for j in 0..d {
                    centroids.set(c, j, points.get(far, j));
                }
            } else {
                let inv = S::one() / S::from_f64(counts[c] as f64);
                for j in 0..d {
                    centroids.set(c, j, sums.get(c, j) * inv);
                }
            }
        }

        let next: Vec<usize> = (0..n).map(|i| nearest_centroid(&centroids, points.row(i))).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    Ok(Partition::new(t, assign).compacted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::fixtures::two_blobs;
    use crate::Mat;

    #[test]
    fn k_equals_n_gives_singletons() {
        let (points, _) = two_blobs(3, 1);
        let part = kmeans(&points, 6, 0, 1).unwrap();
        assert_eq!(part.community_count(), 6);
    }

    #[test]
    fn k_one_gives_single_community() {
        let (points, _) = two_blobs(5, 2);
        let part = kmeans(&points, 1, 0, 1).unwrap();
        assert_eq!(part.community_count(), 1);
    }

    #[test]
    fn two_blobs_recovered_exactly() {
        let (points, labels) = two_blobs(20, 3);
        let part = kmeans(&points, 2, 11, 1).unwrap();
        assert_eq!(part.community_count(), 2);
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                assert_eq!(labels[i] == labels[j], part.labels[i] == part.labels[j]);
            }
        }
    }

    #[test]
    fn k_larger_than_n_rejected() {
        let points = Mat::zeros(3, 2);
        assert!(kmeans(&points, 4, 0, 1).is_err());
        assert!(kmeans(&points, 0, 0, 1).is_err());
    }

    #[test]
    fn deterministic_under_seed() {
        let (points, _) = two_blobs(15, 4);
        let a = kmeans(&points, 3, 9, 1).unwrap();
        let b = kmeans(&points, 3, 9, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wcss_non_increasing_over_lloyd_iterations() {
        // run Lloyd manually and track the objective
        let (points, _) = two_blobs(25, 5);
        let k = 4;
        let mut rng = seeded_rng(17);
        let mut centroids = seed_centroids(&points, k, &mut rng);
        let n = points.rows();
        let d = points.cols();
        let mut assign: Vec<usize> =
            (0..n).map(|i| nearest_centroid(&centroids, points.row(i))).collect();
        let mut prev = wcss(&points, &centroids, &assign);
        for _ in 0..20 {
            let mut sums = Mat::zeros(k, d);
            let mut counts = vec![0usize; k];
            for (i, &c) in assign.iter().enumerate() {
                counts[c] += 1;
                for j in 0..d {
                    let v = sums.get(c, j) + points.get(i, j);
                    sums.set(c, j, v);
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    for j in 0..d {
                        centroids.set(c, j, sums.get(c, j) / counts[c] as f64);
                    }
                }
            }
            assign = (0..n).map(|i| nearest_centroid(&centroids, points.row(i))).collect();
            let cur = wcss(&points, &centroids, &assign);
            assert!(cur <= prev + 1e-9, "objective rose: {prev} -> {cur}");
            prev = cur;
        }
    }
}
