//! Planar point sampling and boundary handling for the snapshot
//! simulator.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

/// A point in the simulation plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };
}

/// Edge treatment of the square window [−L, L]².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    /// Wrap-around distances; points are sampled in the window itself.
    Torus,
    /// Plain Euclidean distances; every process is sampled in the
    /// window dilated by `margin` so edge cells see realistic
    /// interference.
    GuardZone { margin: f64 },
}

/// Squared distance under the boundary rule of a window of half-width
/// `half_width`.
pub fn dist2(a: Point, b: Point, boundary: Boundary, half_width: f64) -> f64 {
    match boundary {
        Boundary::Torus => {
            let period = 2.0 * half_width;
            let mut dx = (a.x - b.x).abs() % period;
            let mut dy = (a.y - b.y).abs() % period;
            if dx > half_width {
                dx = period - dx;
            }
            if dy > half_width {
                dy = period - dy;
            }
            dx * dx + dy * dy
        }
        Boundary::GuardZone { .. } => {
            let dx = a.x - b.x;
            let dy = a.y - b.y;
            dx * dx + dy * dy
        }
    }
}

/// Draw a Poisson count with the given mean.
pub fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng);
    draw as usize
}

/// Homogeneous PPP in the square [−half_width, half_width]²:
/// Poisson-many points, i.i.d. uniform.
pub fn sample_ppp<R: Rng>(intensity: f64, half_width: f64, rng: &mut R) -> Vec<Point> {
    let area = 4.0 * half_width * half_width;
    let n = poisson_count(intensity * area, rng);
    (0..n)
        .map(|_| Point {
            x: rng.random_range(-half_width..half_width),
            y: rng.random_range(-half_width..half_width),
        })
        .collect()
}

/// Uniform point in the disk of the given radius around the origin.
pub fn uniform_in_disk<R: Rng>(radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Point {
        x: r * theta.cos(),
        y: r * theta.sin(),
    }
}

/// Wrap a coordinate into [−half_width, half_width).
fn wrap(v: f64, half_width: f64) -> f64 {
    let period = 2.0 * half_width;
    let shifted = (v + half_width).rem_euclid(period);
    shifted - half_width
}

/// Neyman-Scott cluster process: Poisson parents, each with
/// Poisson(π R_c² λ_c) daughters uniform in a disk of radius `r_c`.
///
/// Parents are drawn in the window dilated by `r_c` so border clusters
/// contribute their share; under the torus rule daughters are wrapped
/// back into the window instead.
pub fn sample_cluster<R: Rng>(
    lambda_p: f64,
    lambda_c: f64,
    r_c: f64,
    half_width: f64,
    boundary: Boundary,
    rng: &mut R,
) -> Vec<Point> {
    let mean_daughters = std::f64::consts::PI * r_c * r_c * lambda_c;
    let torus = matches!(boundary, Boundary::Torus);
    let parent_hw = if torus { half_width } else { half_width + r_c };
    let parents = sample_ppp(lambda_p, parent_hw, rng);
    let mut out = Vec::new();
    for parent in parents {
        let n = poisson_count(mean_daughters, rng);
        for _ in 0..n {
            let offset = uniform_in_disk(r_c, rng);
            let mut p = Point {
                x: parent.x + offset.x,
                y: parent.y + offset.y,
            };
            if torus {
                p.x = wrap(p.x, half_width);
                p.y = wrap(p.y, half_width);
            }
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ppp_zero_intensity_is_empty() {
        let mut r = rng(1);
        assert!(sample_ppp(0.0, 1000.0, &mut r).is_empty());
    }

    #[test]
    fn ppp_count_statistics() {
        // mean within 3σ and Fano factor var/mean ≈ 1 within 3σ over 1e4 draws
        let mut r = rng(42);
        let intensity = 1e-4;
        let hw = 250.0;
        let expected = intensity * 4.0 * hw * hw; // 25
        let draws = 10_000usize;
        let counts: Vec<f64> = (0..draws)
            .map(|_| sample_ppp(intensity, hw, &mut r).len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let sigma_mean = (expected / draws as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * sigma_mean,
            "mean {mean} vs {expected}"
        );
        let fano = var / mean;
        let sigma_fano = (2.0 / draws as f64).sqrt();
        assert!((fano - 1.0).abs() < 3.0 * sigma_fano, "fano {fano}");
    }

    #[test]
    fn ppp_points_stay_in_window() {
        let mut r = rng(3);
        for p in sample_ppp(1e-3, 500.0, &mut r) {
            assert!(p.x.abs() <= 500.0 && p.y.abs() <= 500.0);
        }
    }

    #[test]
    fn cluster_empty_without_parents() {
        let mut r = rng(4);
        assert!(sample_cluster(0.0, 0.00127, 50.0, 1000.0, Boundary::Torus, &mut r).is_empty());
    }

    #[test]
    fn cluster_mean_intensity_identity() {
        // overall intensity ≈ π R_c² λ_c λ_p within 3σ over 1e4 draws
        let mut r = rng(5);
        let (lambda_p, lambda_c, r_c, hw) = (1e-5, 0.00127, 50.0, 500.0);
        let area = 4.0 * hw * hw;
        let expected_rate = std::f64::consts::PI * r_c * r_c * lambda_c * lambda_p;
        let draws = 10_000usize;
        let counts: Vec<f64> = (0..draws)
            .map(|_| {
                sample_cluster(lambda_p, lambda_c, r_c, hw, Boundary::Torus, &mut r).len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        let expected = expected_rate * area;
        // cluster counts are overdispersed: Var = E[N]·(1 + π R_c² λ_c)
        let var_per_draw = expected * (1.0 + std::f64::consts::PI * r_c * r_c * lambda_c);
        let sigma_mean = (var_per_draw / draws as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * sigma_mean,
            "mean {mean} vs {expected} (sigma {sigma_mean})"
        );
    }

    #[test]
    fn cluster_pair_correlation_exceeds_poisson() {
        // clustering signature: more point pairs within 2 R_c than a PPP
        // of the same intensity would produce
        let mut r = rng(6);
        let (lambda_p, lambda_c, r_c, hw) = (1e-5, 0.00127, 50.0, 500.0);
        let intensity = std::f64::consts::PI * r_c * r_c * lambda_c * lambda_p;
        let range2 = (2.0 * r_c) * (2.0 * r_c);
        let mut pairs = 0usize;
        let mut expected_pairs = 0.0;
        for _ in 0..400 {
            let pts = sample_cluster(lambda_p, lambda_c, r_c, hw, Boundary::Torus, &mut r);
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    if dist2(pts[i], pts[j], Boundary::Torus, hw) < range2 {
                        pairs += 1;
                    }
                }
            }
            // PPP reference: n(n−1)/2 · π(2R_c)²/area
            let n = pts.len() as f64;
            let area = 4.0 * hw * hw;
            expected_pairs += n * (n - 1.0) / 2.0 * std::f64::consts::PI * range2 / area;
        }
        assert!(
            pairs as f64 > 1.5 * expected_pairs,
            "pair count {pairs} vs PPP expectation {expected_pairs}"
        );
        let _ = intensity;
    }

    #[test]
    fn torus_distance_wraps() {
        let hw = 100.0;
        let a = Point { x: -95.0, y: 0.0 };
        let b = Point { x: 95.0, y: 0.0 };
        let d2 = dist2(a, b, Boundary::Torus, hw);
        assert!((d2 - 100.0).abs() < 1e-9, "wrapped distance² {d2}");
        let d2_plain = dist2(a, b, Boundary::GuardZone { margin: 0.0 }, hw);
        assert!((d2_plain - 190.0 * 190.0).abs() < 1e-9);
    }

    #[test]
    fn disk_sampling_radius_distribution() {
        // P{r ≤ R_c/2} = 1/4 for uniform-in-disk
        let mut r = rng(7);
        let draws = 20_000;
        let inside = (0..draws)
            .filter(|_| {
                let p = uniform_in_disk(50.0, &mut r);
                p.x * p.x + p.y * p.y <= 25.0 * 25.0
            })
            .count();
        let frac = inside as f64 / draws as f64;
        let sigma = (0.25 * 0.75 / draws as f64).sqrt();
        assert!((frac - 0.25).abs() < 4.0 * sigma, "frac {frac}");
    }
}
