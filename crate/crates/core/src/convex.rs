//! Convex functions on a compact interval: the evaluation protocol, the
//! piecewise-linear families whose residuals vanish in the three-point
//! bound, pivot absolute-value probes, and bump-kernel mollification for
//! functions with kinks.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{Interval, RealFn};

/// Convexity tolerance for grid checks on analytic functions.
pub const CONV_TOL: f64 = 1e-12;
/// Looser tolerance after mollification (convolution quadrature noise).
pub const CONV_TOL_MOLLIFIED: f64 = 1e-8;

/// A convex function with optional derivatives and known kink locations.
#[derive(Clone)]
pub struct ConvexFn {
    eval: RealFn,
    d1: Option<RealFn>,
    d2: Option<RealFn>,
    kinks: Vec<f64>,
    label: String,
}

impl std::fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexFn")
            .field("kinks", &self.kinks)
            .field("label", &self.label)
            .finish()
    }
}

/// V-shaped curve data: values at the endpoints and the pivot.
/// Convex iff `tau <= min(alpha, beta)`.
#[derive(Debug, Clone, Copy)]
pub struct VeeParams {
    pub alpha: f64,
    pub tau: f64,
    pub beta: f64,
    pub t: f64,
}

impl ConvexFn {
    pub fn from_parts(
        eval: RealFn,
        d1: Option<RealFn>,
        d2: Option<RealFn>,
        kinks: Vec<f64>,
        label: impl Into<String>,
    ) -> Self {
        ConvexFn {
            eval,
            d1,
            d2,
            kinks,
            label: label.into(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn d1(&self, x: f64) -> Option<f64> {
        self.d1.as_ref().map(|d| d(x))
    }

    pub fn d2(&self, x: f64) -> Option<f64> {
        self.d2.as_ref().map(|d| d(x))
    }

    pub fn has_d2(&self) -> bool {
        self.d2.is_some()
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn affine(slope: f64, intercept: f64) -> Self {
        ConvexFn {
            eval: Arc::new(move |x| slope * x + intercept),
            d1: Some(Arc::new(move |_| slope)),
            d2: Some(Arc::new(|_| 0.0)),
            kinks: Vec::new(),
            label: format!("affine({slope},{intercept})"),
        }
    }

    pub fn square() -> Self {
        ConvexFn {
            eval: Arc::new(|x| x * x),
            d1: Some(Arc::new(|x| 2.0 * x)),
            d2: Some(Arc::new(|_| 2.0)),
            kinks: Vec::new(),
            label: "square".into(),
        }
    }

    pub fn exp() -> Self {
        ConvexFn {
            eval: Arc::new(f64::exp),
            d1: Some(Arc::new(f64::exp)),
            d2: Some(Arc::new(f64::exp)),
            kinks: Vec::new(),
            label: "exp".into(),
        }
    }

    /// x^p for p > 1, convex on [0, inf).
    pub fn powp(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::NotConvex(format!("x^{p} needs p > 1")));
        }
        Ok(ConvexFn {
            eval: Arc::new(move |x: f64| x.abs().powf(p)),
            d1: Some(Arc::new(move |x: f64| p * x.abs().powf(p - 1.0) * x.signum())),
            d2: Some(Arc::new(move |x: f64| p * (p - 1.0) * x.abs().powf(p - 2.0))),
            kinks: Vec::new(),
            label: format!("powp{p}"),
        })
    }

    /// x log x with 0 log 0 = 0, convex on [0, inf).
    pub fn negentropy() -> Self {
        ConvexFn {
            eval: Arc::new(|x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() }),
            d1: Some(Arc::new(|x: f64| if x <= 0.0 { f64::NEG_INFINITY } else { x.ln() + 1.0 })),
            d2: Some(Arc::new(|x: f64| if x <= 0.0 { f64::INFINITY } else { 1.0 / x })),
            kinks: Vec::new(),
            label: "negentropy".into(),
        }
    }

    /// x -> |x - u|.
    pub fn pivot_abs(u: f64) -> Self {
        ConvexFn {
            eval: Arc::new(move |x: f64| (x - u).abs()),
            d1: None,
            d2: None,
            kinks: vec![u],
            label: format!("abs:{u}"),
        }
    }

    /// Piecewise-linear function through (a, alpha), (t, tau), (b, beta).
    pub fn vee(p: VeeParams, interval: Interval) -> Result<Self> {
        let VeeParams { alpha, tau, beta, t } = p;
        let Interval { a, b } = interval;
        if !(a < t && t < b) {
            return Err(Error::validation(format!(
                "vee pivot {t} must lie strictly inside [{a}, {b}]"
            )));
        }
        if tau > alpha.min(beta) + 1e-15 {
            return Err(Error::NotConvex(format!(
                "vee with tau {tau} > min(alpha, beta) = {}",
                alpha.min(beta)
            )));
        }
        let sl = (tau - alpha) / (t - a);
        let sr = (beta - tau) / (b - t);
        Ok(ConvexFn {
            eval: Arc::new(move |x: f64| {
                if x <= t {
                    (t - x) / (t - a) * alpha + (x - a) / (t - a) * tau
                } else {
                    (b - x) / (b - t) * tau + (x - t) / (b - t) * beta
                }
            }),
            d1: Some(Arc::new(move |x: f64| if x <= t { sl } else { sr })),
            d2: None,
            kinks: vec![t],
            label: format!("vee:{alpha},{tau},{beta},{t}"),
        })
    }

    /// x -> alpha x + beta + sum c_i |x - u_i|, c_i > 0. Convex by
    /// construction; kinks at the u_i.
    pub fn kink_combination(alpha: f64, beta: f64, terms: &[(f64, f64)]) -> Result<Self> {
        for &(c, _) in terms {
            if !(c > 0.0) {
                return Err(Error::NotConvex(format!(
                    "kink combination needs positive coefficients, got {c}"
                )));
            }
        }
        let terms: Vec<(f64, f64)> = terms.to_vec();
        let mut kinks: Vec<f64> = terms.iter().map(|&(_, u)| u).collect();
        kinks.sort_by(|l, r| l.partial_cmp(r).unwrap());
        let label = format!("kinks[{}]", terms.len());
        Ok(ConvexFn {
            eval: Arc::new(move |x: f64| {
                alpha * x + beta + terms.iter().map(|&(c, u)| c * (x - u).abs()).sum::<f64>()
            }),
            d1: None,
            d2: None,
            kinks,
            label,
        })
    }

    /// Second derivative at x: analytic when available, central finite
    /// difference otherwise. `x` must be at least `h` away from any kink.
    pub fn d2_or_fd(&self, x: f64, h: f64) -> Result<f64> {
        if let Some(d2) = &self.d2 {
            return Ok(d2(x));
        }
        for k in &self.kinks {
            if (x - k).abs() < h {
                return Err(Error::Kinked(self.label.clone()));
            }
        }
        let e = &self.eval;
        Ok((e(x + h) - 2.0 * e(x) + e(x - h)) / (h * h))
    }

    /// Largest midpoint-convexity violation over an n-point grid;
    /// a convex function gives a value <= 0 up to roundoff.
    pub fn convexity_defect(&self, interval: Interval, n: usize) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        let w = interval.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let x = interval.a + w * i as f64 / (n - 1) as f64;
                let y = interval.a + w * j as f64 / (n - 1) as f64;
                let mid = self.eval(0.5 * (x + y));
                let chord = 0.5 * (self.eval(x) + self.eval(y));
                worst = worst.max(mid - chord);
            }
        }
        worst
    }

    /// Max deviation of the function from its endpoint chord over a grid;
    /// used as the non-affine detector in strictness checks.
    pub fn chord_deviation(&self, interval: Interval, n: usize) -> f64 {
        let fa = self.eval(interval.a);
        let fb = self.eval(interval.b);
        let w = interval.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let x = interval.a + w * i as f64 / (n - 1) as f64;
            let chord = fa + (fb - fa) * (x - interval.a) / w;
            worst = worst.max((self.eval(x) - chord).abs());
        }
        worst
    }

    /// Smooth convex approximation with sup distance <= eps on the interval,
    /// built by convolving a linear-continuation extension of the function
    /// with a compactly supported bump kernel.
    pub fn mollify(&self, interval: Interval, eps: f64) -> Result<ConvexFn> {
        if !(eps > 0.0) {
            return Err(Error::validation("mollification eps must be positive"));
        }
        let Interval { a, b } = interval;
        let w = interval.len();
        let h = 1e-6 * w;
        let e = self.eval.clone();
        // One-sided slopes at the endpoints; for convex f these bound the
        // Lipschitz constant on [a, b].
        let slope_a = match self.d1(a) {
            Some(s) if s.is_finite() => s,
            _ => (e(a + h) - e(a)) / h,
        };
        let slope_b = match self.d1(b) {
            Some(s) if s.is_finite() => s,
            _ => (e(b) - e(b - h)) / h,
        };
        let lip = slope_a.abs().max(slope_b.abs()).max(1e-12);
        let delta = 0.9 * eps / lip;
        if delta < 1e-13 * w {
            return Err(Error::NumericFailure {
                message: format!("mollification width {delta:e} underflows the grid"),
                value: delta,
                error_estimate: 0.0,
            });
        }
        // Cap the width so the kernel never reaches far outside the interval.
        let delta = delta.min(0.25 * w);

        let ext = Arc::new(move |x: f64| {
            if x < a {
                e(a) + slope_a * (x - a)
            } else if x > b {
                e(b) + slope_b * (x - b)
            } else {
                e(x)
            }
        });

        let kernel = BumpKernel::build();
        let label = format!("mollified({}, {eps:e})", self.label);
        let k0 = kernel.clone();
        let ext0 = ext.clone();
        let eval: RealFn = Arc::new(move |x: f64| k0.convolve(&*ext0, x, delta, 0));
        let k1 = kernel.clone();
        let ext1 = ext.clone();
        let d1: RealFn = Arc::new(move |x: f64| k1.convolve(&*ext1, x, delta, 1));
        let k2 = kernel;
        let ext2 = ext;
        let d2: RealFn = Arc::new(move |x: f64| k2.convolve(&*ext2, x, delta, 2));

        Ok(ConvexFn {
            eval,
            d1: Some(d1),
            d2: Some(d2),
            kinks: Vec::new(),
            label,
        })
    }
}

/// Discretized standard bump exp(1/(s^2-1)) on (-1, 1), with first and
/// second kernel derivatives for differentiating under the convolution.
/// The bump vanishes to all orders at the endpoints, so the midpoint rule
/// converges super-algebraically; the derivative weights are additionally
/// projected onto their exact low-order moments (sum rules for constants,
/// affine and quadratic inputs), which keeps d1/d2 accurate even when the
/// kernel width is tiny relative to the probe point.
#[derive(Clone)]
struct BumpKernel {
    nodes: Vec<f64>,
    w0: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl BumpKernel {
    fn build() -> Arc<Self> {
        use std::sync::OnceLock;
        static KERNEL: OnceLock<Arc<BumpKernel>> = OnceLock::new();
        KERNEL
            .get_or_init(|| {
                let n = 512usize;
                let step = 2.0 / n as f64;
                let nodes: Vec<f64> = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * step).collect();
                let weights: Vec<f64> = vec![step; n];
                let bump = |s: f64| {
                    if s.abs() >= 1.0 {
                        0.0
                    } else {
                        (1.0 / (s * s - 1.0)).exp()
                    }
                };
                let bump_d1 = |s: f64| {
                    let q = s * s - 1.0;
                    bump(s) * (-2.0 * s / (q * q))
                };
                let bump_d2 = |s: f64| {
                    let q = s * s - 1.0;
                    let u = -2.0 * s / (q * q);
                    let du = -2.0 / (q * q) + 8.0 * s * s / (q * q * q);
                    bump(s) * (u * u + du)
                };
                let norm: f64 = nodes.iter().zip(&weights).map(|(&s, &w)| w * bump(s)).sum();
                let mut w0: Vec<f64> = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&s, &w)| w * bump(s) / norm)
                    .collect();
                let mut w1: Vec<f64> = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&s, &w)| w * bump_d1(s) / norm)
                    .collect();
                let mut w2: Vec<f64> = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&s, &w)| w * bump_d2(s) / norm)
                    .collect();
                // Exact continuous moments: int psi = norm, int psi' s = -norm,
                // int psi'' s^2 = 2 norm, odd/lower moments zero.
                project_moments(&nodes, &weights, &mut w0, &[1.0, 0.0]);
                project_moments(&nodes, &weights, &mut w1, &[0.0, -1.0]);
                project_moments(&nodes, &weights, &mut w2, &[0.0, 0.0, 2.0]);
                Arc::new(BumpKernel { nodes, w0, w1, w2 })
            })
            .clone()
    }

    /// d-th derivative of the mollification at x:
    /// (1/delta^d) * sum_i w_i psi^(d)(s_i) f(x - delta s_i).
    fn convolve(&self, f: &dyn Fn(f64) -> f64, x: f64, delta: f64, d: u8) -> f64 {
        let weights = match d {
            0 => &self.w0,
            1 => &self.w1,
            _ => &self.w2,
        };
        let mut acc = 0.0;
        for (&s, &w) in self.nodes.iter().zip(weights) {
            acc += w * f(x - delta * s);
        }
        match d {
            0 => acc,
            1 => acc / delta,
            _ => acc / (delta * delta),
        }
    }
}

/// Perturbs the quadrature weights `v` by a low-degree polynomial multiple of
/// the base rule weights so that the discrete moments sum(v * s^k) exactly
/// match `targets[k]`. The correction solves a small symmetric Vandermonde
/// moment system by Gaussian elimination; the perturbation is of the order of
/// the base rule's quadrature error.
fn project_moments(nodes: &[f64], base: &[f64], v: &mut [f64], targets: &[f64]) {
    let m = targets.len();
    // Moment matrix a[j][k] = sum_i base_i s_i^(j+k), residual r[j].
    let mut a = vec![vec![0.0; m]; m];
    let mut r = vec![0.0; m];
    for j in 0..m {
        for k in 0..m {
            a[j][k] = nodes
                .iter()
                .zip(base)
                .map(|(&s, &w)| w * s.powi((j + k) as i32))
                .sum();
        }
        let got: f64 = nodes
            .iter()
            .zip(v.iter())
            .map(|(&s, &w)| w * s.powi(j as i32))
            .sum();
        r[j] = got - targets[j];
    }
    // Solve a * c = r with partial pivoting (m <= 3).
    let mut c = r;
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        c.swap(col, piv);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= factor * a[col][k];
            }
            c[row] -= factor * c[col];
        }
    }
    for col in (0..m).rev() {
        for k in col + 1..m {
            let ck = c[k];
            c[col] -= a[col][k] * ck;
        }
        c[col] /= a[col][col];
    }
    for (i, vi) in v.iter_mut().enumerate() {
        let s = nodes[i];
        let mut poly = 0.0;
        for (j, &cj) in c.iter().enumerate() {
            poly += cj * s.powi(j as i32);
        }
        *vi -= base[i] * poly;
    }
}

/// Builds a registry function from its CLI name:
/// `square | exp | negentropy | abs:u | powp:p | vee:alpha,tau,beta,t`.
pub fn from_registry(name: &str, interval: Interval) -> Result<ConvexFn> {
    let (head, args) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let parse_f64 = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::validation(format!("cannot parse '{s}' as a number in '{name}'")))
    };
    match (head, args) {
        ("square", None) => Ok(ConvexFn::square()),
        ("exp", None) => Ok(ConvexFn::exp()),
        ("negentropy", None) => Ok(ConvexFn::negentropy()),
        ("abs", Some(a)) => {
            let u = parse_f64(a)?;
            if !interval.contains(u) {
                return Err(Error::validation(format!(
                    "abs pivot {u} outside [{}, {}]",
                    interval.a, interval.b
                )));
            }
            Ok(ConvexFn::pivot_abs(u))
        }
        ("powp", Some(a)) => ConvexFn::powp(parse_f64(a)?),
        ("vee", Some(a)) => {
            let parts: Vec<&str> = a.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::validation(
                    "vee needs four parameters: alpha,tau,beta,t",
                ));
            }
            ConvexFn::vee(
                VeeParams {
                    alpha: parse_f64(parts[0])?,
                    tau: parse_f64(parts[1])?,
                    beta: parse_f64(parts[2])?,
                    t: parse_f64(parts[3])?,
                },
                interval,
            )
        }
        _ => Err(Error::validation(format!("unknown function '{name}'"))),
    }
}
