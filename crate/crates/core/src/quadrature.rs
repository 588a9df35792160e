//! Quadrature rules and exact box-ball intersection volumes used to build the
//! photon momentum cells.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("positive degree"));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Adaptive double-exponential quadrature of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, abs_tol).integral
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
pub fn integrate_pieces(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|p, q| (*p - *q).abs() <= 1e-15 * (1.0 + q.abs()));
    let tol = abs_tol / pts.len() as f64;
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], tol)).sum()
}

/// `∫_0^y sqrt(r^2 - t^2) dt` for `0 <= y <= r`.
fn circle_primitive(r: f64, y: f64) -> f64 {
    let y = y.clamp(0.0, r);
    0.5 * (y * (r * r - y * y).max(0.0).sqrt() + r * r * (y / r).clamp(-1.0, 1.0).asin())
}

/// Area of the disk of radius `r` intersected with `[0, a] × [0, b]`, `a, b >= 0`.
fn quadrant_area(r: f64, a: f64, b: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let a = a.min(r);
    let b = b.min(r);
    if a * a + b * b <= r * r {
        return a * b;
    }
    let ystar = (r * r - b * b).max(0.0).sqrt();
    b * ystar + circle_primitive(r, a) - circle_primitive(r, ystar)
}

fn signed_quadrant_area(r: f64, a: f64, b: f64) -> f64 {
    a.signum() * b.signum() * quadrant_area(r, a.abs(), b.abs())
}

/// Area of the centered disk of radius `r` inside the rectangle `[y0, y1] × [z0, z1]`.
pub fn disk_rectangle_area(r: f64, y0: f64, y1: f64, z0: f64, z1: f64) -> f64 {
    signed_quadrant_area(r, y1, z1)
        - signed_quadrant_area(r, y0, z1)
        - signed_quadrant_area(r, y1, z0)
        + signed_quadrant_area(r, y0, z0)
}

/// Volume of the centered ball of radius `r` inside the box `[lo, hi]`.
pub fn box_ball_volume(lo: [f64; 3], hi: [f64; 3], r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let nearest: f64 = (0..3)
        .map(|i| {
            let c = 0.0f64.clamp(lo[i], hi[i]);
            c * c
        })
        .sum();
    if nearest >= r * r {
        return 0.0;
    }
    let farthest: f64 = (0..3).map(|i| lo[i].abs().max(hi[i].abs()).powi(2)).sum();
    let box_volume = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
    if farthest <= r * r {
        return box_volume;
    }
    let x0 = lo[0].max(-r);
    let x1 = hi[0].min(r);
    if x1 <= x0 {
        return 0.0;
    }
    // the slice area is smooth in x except where the slice radius crosses a
    // rectangle edge or corner distance
    let mut breaks = vec![0.0];
    let mut push = |d2: f64| {
        if d2 < r * r {
            let x = (r * r - d2).sqrt();
            breaks.push(x);
            breaks.push(-x);
        }
    };
    for &y in &[lo[1], hi[1]] {
        push(y * y);
        for &z in &[lo[2], hi[2]] {
            push(y * y + z * z);
        }
    }
    for &z in &[lo[2], hi[2]] {
        push(z * z);
    }
    let slice = |x: f64| {
        let rho = (r * r - x * x).max(0.0).sqrt();
        disk_rectangle_area(rho, lo[1], hi[1], lo[2], hi[2])
    };
    let tol = 1e-16 * box_volume.max(r * r * r);
    integrate_pieces(slice, x0, x1, &breaks, tol)
}

/// Volume of `{m <= |k| <= uv}` inside the box `[lo, hi]`.
pub fn box_shell_volume(lo: [f64; 3], hi: [f64; 3], m: f64, uv: f64) -> f64 {
    (box_ball_volume(lo, hi, uv) - box_ball_volume(lo, hi, m)).max(0.0)
}

pub fn ball_volume(r: f64) -> f64 {
    4.0 * PI * r * r * r / 3.0
}
