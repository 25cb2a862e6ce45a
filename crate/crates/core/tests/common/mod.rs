//! Reference implementations used as test oracles. They favour brute force
//! and bisection over speed and share no code with the library kernels.
#![allow(dead_code)]

/// Squared residual of the best `s`-sparse approximation, by enumerating supports.
pub fn best_sparse_residual(v: &[f64], s: usize) -> f64 {
    let d = v.len();
    (0u32..1 << d)
        .filter(|m| m.count_ones() as usize == s)
        .map(|m| (0..d).filter(|i| m & (1 << i) == 0).map(|i| v[i] * v[i]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn soft(v: &[f64], lambda: f64) -> Vec<f64> {
    v.iter().map(|x| x.signum() * (x.abs() - lambda).max(0.0)).collect()
}

/// Largest `lambda` in `[0, max|v|]` with `g(lambda) > target`, by bisection,
/// for `g` nonincreasing.
fn bisect(v: &[f64], target: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Projection of `v` onto `{z : |z - c|_1 <= r}` by bisection on the
/// soft-threshold level.
pub fn project_l1_bisect(v: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let w: Vec<f64> = v.iter().zip(c).map(|(a, b)| a - b).collect();
    if l1(&w) <= r {
        return v.to_vec();
    }
    let lambda = bisect(&w, r, |l| l1(&soft(&w, l)));
    soft(&w, lambda).iter().zip(c).map(|(a, b)| a + b).collect()
}

/// Projection of `v` onto the intersection of the l2 ball of radius `r2` and
/// the l1 ball of radius `r1` around `c`. From the optimality conditions the
/// answer is a soft threshold of `v - c` scaled into the l2 ball; the
/// threshold is found by bisection.
pub fn project_intersection_kkt(v: &[f64], c: &[f64], r2: f64, r1: f64) -> Vec<f64> {
    let w: Vec<f64> = v.iter().zip(c).map(|(a, b)| a - b).collect();
    let scaled = |s: Vec<f64>| {
        let n = l2(&s);
        if n > r2 {
            s.iter().map(|x| x * r2 / n).collect()
        } else {
            s
        }
    };
    let z0 = scaled(w.clone());
    let z = if l1(&z0) <= r1 {
        z0
    } else {
        let lambda = bisect(&w, r1, |l| l1(&scaled(soft(&w, l))));
        scaled(soft(&w, lambda))
    };
    z.iter().zip(c).map(|(a, b)| a + b).collect()
}

/// Smallest distance from `v` to a point of a regular grid with `n` points
/// per axis over the box `lo..=hi` that satisfies `feasible`.
pub fn grid_min_distance(v: &[f64], lo: &[f64], hi: &[f64], n: usize, feasible: impl Fn(&[f64]) -> bool) -> f64 {
    let d = v.len();
    let mut idx = vec![0usize; d];
    let mut z = vec![0.0; d];
    let mut best = f64::INFINITY;
    loop {
        for i in 0..d {
            z[i] = lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (n - 1) as f64;
        }
        if feasible(&z) {
            best = best.min(dist(&z, v));
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return best;
            }
            idx[axis] += 1;
            if idx[axis] < n {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Grid search around `p` at several scales: the smallest distance to `v`
/// over feasible grid points in boxes of half-width `scale` for each scale.
pub fn local_grid_min_distance(v: &[f64], p: &[f64], scales: &[f64], n: usize, feasible: impl Fn(&[f64]) -> bool) -> f64 {
    scales
        .iter()
        .map(|s| {
            let lo: Vec<f64> = p.iter().map(|x| x - s).collect();
            let hi: Vec<f64> = p.iter().map(|x| x + s).collect();
            grid_min_distance(v, &lo, &hi, n, &feasible)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}
