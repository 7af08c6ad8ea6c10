//! Direction grids and random points in balls.

use crate::Point;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Point {
    loop {
        let v = Point::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Uniform point in the closed ball `B(center, radius)`.
pub fn in_ball<R: Rng + ?Sized>(rng: &mut R, center: &Point, radius: f64) -> Point {
    let dim = center.len();
    let u = unit_sphere(rng, dim);
    let s: f64 = rng.random::<f64>().powf(1.0 / dim as f64);
    center + u * (radius * s)
}

/// `count` equally spaced unit directions in the plane, starting at angle 0.
pub fn circle_grid(count: usize) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            Point::from_vec(vec![a.cos(), a.sin()])
        })
        .collect()
}

/// Fibonacci lattice on the 2-sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            Point::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Default direction set for cone estimation in dimension `dim`: a circle
/// grid in the plane, a Fibonacci lattice in 3-space, seeded Gaussian
/// directions (plus the signed coordinate axes) above that.
pub fn direction_grid(dim: usize, count: usize) -> Vec<Point> {
    match dim {
        0 => Vec::new(),
        1 => vec![Point::from_vec(vec![1.0]), Point::from_vec(vec![-1.0])],
        2 => circle_grid(count),
        3 => fibonacci_sphere(count),
        _ => {
            let mut dirs = Vec::with_capacity(count + 2 * dim);
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut e = Point::zeros(dim);
                    e[i] = s;
                    dirs.push(e);
                }
            }
            let mut rng = crate::par::item_rng(0x5eed, dim as u64);
            while dirs.len() < count.max(2 * dim) {
                dirs.push(unit_sphere(&mut rng, dim));
            }
            dirs
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_unit() {
        for d in circle_grid(64).iter().chain(fibonacci_sphere(50).iter()) {
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(direction_grid(5, 20).len(), 20);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = crate::par::item_rng(1, 1);
        let c = Point::from_vec(vec![1.0, -2.0, 0.5]);
        for _ in 0..500 {
            assert!((in_ball(&mut rng, &c, 0.3) - &c).norm() <= 0.3 + 1e-12);
        }
    }
}
