//! Gauss–Legendre panels, adaptive refinement and semi-infinite tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

fn rule(slot: &'static OnceLock<GaussLegendre>, n: usize) -> &'static GaussLegendre {
    slot.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(n).expect("n > 0")))
}

pub(crate) fn gl8() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    rule(&R, 8)
}

pub(crate) fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    rule(&R, 16)
}

/// Fixed 8-point rule on [a, b].
pub fn gauss8(a: f64, b: f64, f: impl FnMut(f64) -> f64) -> f64 {
    gl8().integrate(a, b, f)
}

fn gauss16(a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    gl16().integrate(a, b, f)
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn new(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, whole: f64) -> Self {
        let m = 0.5 * (a + b);
        let left = gauss16(a, m, f);
        let right = gauss16(m, b, f);
        Panel {
            a,
            b,
            left,
            right,
            err: (left + right - whole).abs(),
        }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then(other.a.total_cmp(&self.a))
    }
}

/// Upper bound on panels held by [`adaptive`].
const MAX_PANELS: usize = 4000;

/// Globally adaptive 16-point Gauss–Legendre: the panel with the largest
/// error estimate (whole vs. sum of halves) is split until the summed
/// estimate falls below `rel_tol` of the integral or the panel budget is
/// spent.
pub fn adaptive(a: f64, b: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gauss16(a, b, &mut f);
    let mut heap = BinaryHeap::new();
    heap.push(Panel::new(&mut f, a, b, whole));
    loop {
        let (total, err, mag) = heap.iter().fold((0.0, 0.0, 0.0), |(t, e, m), p| {
            (t + p.left + p.right, e + p.err, m + p.left.abs() + p.right.abs())
        });
        let done = err <= (rel_tol * total.abs()).max(1e-15 * mag) || !err.is_finite();
        if done || heap.len() >= MAX_PANELS {
            return total;
        }
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(Panel { err: 0.0, ..p });
            continue;
        }
        heap.push(Panel::new(&mut f, p.a, m, p.left));
        heap.push(Panel::new(&mut f, m, p.b, p.right));
    }
}

/// ∫_{r0}^∞ f over panels [r0·2^k, r0·2^{k+1}] (or unit-length panels from 0),
/// stopping once a panel is negligible. A power-law remainder is added from
/// the ratio of the last two panels when they are still shrinking slowly.
pub fn semi_infinite(r0: f64, rel_tol: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut a = r0;
    let mut width = if r0 > 0.0 { r0 } else { 1.0 };
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for _ in 0..1100 {
        let b = a + width;
        if !b.is_finite() {
            break;
        }
        let piece = adaptive(a, b, rel_tol, &mut f);
        total += piece;
        if piece.abs() <= 1e-17 * total.abs() || (piece == 0.0 && total == 0.0) {
            return total;
        }
        if let Some(last) = prev {
            let ratio = piece / last;
            if ratio > 0.0 && ratio < 1.0 && piece.abs() <= 1e-10 * total.abs() {
                return total + piece * ratio / (1.0 - ratio);
            }
        }
        prev = Some(piece);
        a = b;
        width *= 2.0;
    }
    total
}

/// Surface area ω_{N−1} of the unit sphere in ℝᴺ, via area(N) = 2π/(N−2)·area(N−2).
pub fn sphere_area(n: u32) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}
