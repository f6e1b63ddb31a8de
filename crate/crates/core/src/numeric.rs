//! Small numeric helpers: flat-vector geometry, quadrature, root finding,
//! and deterministic direction sampling.
//!
//! States are stored as flat `&[f64]` slices of length `count * dim`, agent
//! major. Nothing here allocates in the hot paths of the integrator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Inner product of two equally sized slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance between two points.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Maximum pairwise Euclidean distance over `count` points of dimension
/// `dim` stored agent-major in `points`.
///
/// One-dimensional input reduces to `max - min`; higher dimensions scan all
/// pairs on squared distances.
pub fn max_pairwise_distance(points: &[f64], count: usize, dim: usize) -> f64 {
    debug_assert_eq!(points.len(), count * dim);
    if count < 2 {
        return 0.0;
    }
    if dim == 1 {
        let mut lo = points[0];
        let mut hi = points[0];
        for &p in &points[1..] {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        return hi - lo;
    }
    let mut best = 0.0f64;
    for i in 0..count {
        let pi = &points[i * dim..(i + 1) * dim];
        for j in (i + 1)..count {
            let pj = &points[j * dim..(j + 1) * dim];
            let d2: f64 = pi.iter().zip(pj).map(|(x, y)| (x - y) * (x - y)).sum();
            if d2 > best {
                best = d2;
            }
        }
    }
    best.sqrt()
}

/// Composite Simpson rule for `f` on `[a, b]` with an even panel count.
pub fn composite_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 2 && panels % 2 == 0, "panel count must be even");
    if a == b {
        return 0.0;
    }
    let dx = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * dx);
    }
    acc * dx / 3.0
}

/// Composite Simpson with panel doubling until two successive estimates
/// agree to `rel_tol` (relative to the estimate's magnitude, floored at 1).
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut panels = 64usize;
    let mut prev = composite_simpson(&f, a, b, panels);
    loop {
        panels *= 2;
        let next = composite_simpson(&f, a, b, panels);
        if (next - prev).abs() <= rel_tol * next.abs().max(1.0) || panels >= 1 << 22 {
            return next;
        }
        prev = next;
    }
}

/// Cumulative integral of uniformly spaced samples.
///
/// Each panel is integrated with the quadratic through its three nearest
/// samples (local error `O(dx^4)`), so the result is consistent with
/// composite Simpson while providing a value at every grid point.
pub fn cumulative_integral(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * dx * (values[0] + values[1]);
        return out;
    }
    for i in 0..n - 1 {
        let panel = if i == 0 {
            dx * (5.0 * values[0] + 8.0 * values[1] - values[2]) / 12.0
        } else {
            dx * (-values[i - 1] + 8.0 * values[i] + 5.0 * values[i + 1]) / 12.0
        };
        out[i + 1] = out[i] + panel;
    }
    out
}

/// Root of `f(x) = target` for non-decreasing `f`, bracketed by
/// `[lo, hi]` with `f(lo) <= target <= f(hi)`.
///
/// Bisects until the bracket width drops below `1e-12 * max(1, |x|)`.
pub fn bisect_nondecreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, target: f64) -> f64 {
    debug_assert!(lo <= hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(1.0) {
            return mid;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `count` unit vectors in `dim` dimensions from a seeded ChaCha8 stream
/// (normalized standard-normal draws), identical for identical seeds.
pub fn random_unit_vectors(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm(&v);
        if n > 1e-6 {
            out.push(v.iter().map(|x| x / n).collect());
        }
    }
    out
}
