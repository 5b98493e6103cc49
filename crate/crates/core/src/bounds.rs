//! The three bounds on the mean of a convex function: the value at the mean
//! (lower), the endpoint-chord combination (upper), and the tighter
//! three-point upper bound with an interior pivot, plus the derivative-free
//! search for the pivot that minimizes the latter.

use crate::convex::ConvexFn;
use crate::error::{Error, Result};
use crate::measure::{HalfOpenSpec, Measure};
use crate::quad::{self, QuadConfig};

/// Weights of the three-point upper bound at `a`, `t`, `b`.
#[derive(Debug, Clone, Copy)]
pub struct ThreePointWeights {
    pub p_a: f64,
    pub p_t: f64,
    pub p_b: f64,
    pub t: f64,
}

/// All bounds for one `(measure, f, t)` triple.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BoundsResult {
    pub jensen_lower: f64,
    pub integral: f64,
    pub h_upper: f64,
    pub th_upper: f64,
    pub t: f64,
}

fn cfg() -> QuadConfig {
    QuadConfig::effective(QuadConfig::tight())
}

/// f(mean), the lower bound.
pub fn jensen_lower(m: &Measure, f: &ConvexFn) -> Result<f64> {
    Ok(f.eval(m.mean()?))
}

/// int f dG, the quantity being bounded.
pub fn integral(m: &Measure, f: &ConvexFn) -> Result<f64> {
    let iv = m.interval();
    Ok(quad::integrate_stieltjes(
        |x| f.eval(x),
        f.kinks(),
        m,
        iv.a,
        iv.b,
        HalfOpenSpec::CLOSED,
        &cfg(),
    )?
    .value)
}

/// Endpoint-chord upper bound:
/// ((b - c) f(a) + (c - a) f(b)) / (b - a) with c the mean.
pub fn h_upper(m: &Measure, f: &ConvexFn) -> Result<f64> {
    let iv = m.interval();
    let c = m.mean()?;
    Ok(((iv.b - c) * f.eval(iv.a) + (c - iv.a) * f.eval(iv.b)) / iv.len())
}

fn check_pivot(m: &Measure, t: f64) -> Result<()> {
    let iv = m.interval();
    if !(iv.a < t && t < iv.b) {
        return Err(Error::validation(format!(
            "pivot t = {t} must lie strictly inside ({}, {})",
            iv.a, iv.b
        )));
    }
    Ok(())
}

/// Weights of the three-point bound. `p_t` is computed from its own
/// integrals rather than as `1 - p_a - p_b`, so the sum-to-one identity
/// stays a checkable property.
pub fn th_weights(m: &Measure, t: f64) -> Result<ThreePointWeights> {
    check_pivot(m, t)?;
    let iv = m.interval();
    let p_a = m.partial_deficit(t)? / (t - iv.a);
    let p_b = m.partial_excess(t)? / (iv.b - t);
    let left = quad::integrate_stieltjes(
        |x| (x - iv.a) / (t - iv.a),
        &[],
        m,
        iv.a,
        t,
        HalfOpenSpec::CLOSED,
        &cfg(),
    )?
    .value;
    let right = quad::integrate_stieltjes(
        |x| (iv.b - x) / (iv.b - t),
        &[],
        m,
        t,
        iv.b,
        HalfOpenSpec::OPEN_CLOSED,
        &cfg(),
    )?
    .value;
    Ok(ThreePointWeights {
        p_a,
        p_t: left + right,
        p_b,
        t,
    })
}

/// Three-point upper bound p_a f(a) + p_t f(t) + p_b f(b).
pub fn th_upper(m: &Measure, f: &ConvexFn, t: f64) -> Result<f64> {
    let w = th_weights(m, t)?;
    let iv = m.interval();
    Ok(w.p_a * f.eval(iv.a) + w.p_t * f.eval(t) + w.p_b * f.eval(iv.b))
}

/// Equivalent correction-term form of the three-point bound, used as a
/// cross-check: H-bound plus (f(t) - chord(t)) times the interior-mass
/// factor, the latter evaluated by direct Stieltjes quadrature.
pub fn th_upper_form2(m: &Measure, f: &ConvexFn, t: f64) -> Result<f64> {
    check_pivot(m, t)?;
    let iv = m.interval();
    let lambda = (iv.b - t) / iv.len();
    let chord_at_t = lambda * f.eval(iv.a) + (1.0 - lambda) * f.eval(iv.b);
    let left = quad::integrate_stieltjes(
        |x| (x - iv.a) / (t - iv.a),
        &[],
        m,
        iv.a,
        t,
        HalfOpenSpec::CLOSED,
        &cfg(),
    )?
    .value;
    let right = quad::integrate_stieltjes(
        |x| (iv.b - x) / (iv.b - t),
        &[],
        m,
        t,
        iv.b,
        HalfOpenSpec::OPEN_CLOSED,
        &cfg(),
    )?
    .value;
    Ok(h_upper(m, f)? + (f.eval(t) - chord_at_t) * (left + right))
}

/// Assembles the full chain; the ordering invariant is the caller's test.
pub fn all_bounds(m: &Measure, f: &ConvexFn, t: f64) -> Result<BoundsResult> {
    Ok(BoundsResult {
        jensen_lower: jensen_lower(m, f)?,
        integral: integral(m, f)?,
        h_upper: h_upper(m, f)?,
        th_upper: th_upper(m, f, t)?,
        t,
    })
}

/// Minimizes the gap between the three-point bound and the H bound over
/// the pivot: coarse 64-point grid, then golden-section refinement.
/// Returns `(t_star, d_star)` with `d_star <= 0`.
pub fn optimal_pivot(m: &Measure, f: &ConvexFn) -> Result<(f64, f64)> {
    let iv = m.interval();
    let h = h_upper(m, f)?;
    let diff = |t: f64| -> Result<f64> { Ok(th_upper(m, f, t)? - h) };

    let n = 64usize;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    let mut lo_val = f64::INFINITY;
    let mut hi_val = f64::NEG_INFINITY;
    let grid: Vec<f64> = (1..=n)
        .map(|i| iv.a + iv.len() * i as f64 / (n + 1) as f64)
        .collect();
    for (i, &t) in grid.iter().enumerate() {
        let d = diff(t)?;
        lo_val = lo_val.min(d);
        hi_val = hi_val.max(d);
        if d < best {
            best = d;
            best_i = i;
        }
    }
    // Degenerate (affine) case: the difference is flat at zero.
    if hi_val - lo_val < 1e-13 && hi_val.abs() < 1e-12 {
        return Ok((iv.midpoint(), 0.0));
    }

    let mut lo = if best_i == 0 { iv.a + 1e-12 * iv.len() } else { grid[best_i - 1] };
    let mut hi = if best_i + 1 == n {
        iv.b - 1e-12 * iv.len()
    } else {
        grid[best_i + 1]
    };

    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = diff(x1)?;
    let mut f2 = diff(x2)?;
    while hi - lo > 1e-8 * iv.len() {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = diff(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = diff(x2)?;
        }
    }
    let (t_star, d_star) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok((t_star, d_star))
}
