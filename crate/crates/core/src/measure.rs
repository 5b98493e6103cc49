//! Probability measures on a compact interval `[a, b]`, represented as a
//! mixture of an absolutely continuous part (density, with an optional
//! closed-form CDF) and finitely many atoms.
//!
//! One representation serves the continuous families, purely discrete
//! measures and mixtures, so every bound and residual downstream has a
//! single code path.

use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};

/// Tolerance on total mass and CDF endpoint values at construction.
pub const MASS_TOL: f64 = 1e-9;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Compact support interval, `a < b`, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || !(a < b) {
            return Err(Error::validation(format!(
                "invalid interval [{a}, {b}]: need finite a < b"
            )));
        }
        Ok(Interval { a, b })
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// Endpoint-closure flags for integration ranges; an atom sitting exactly on
/// an endpoint is counted iff that endpoint is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfOpenSpec {
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl HalfOpenSpec {
    pub const CLOSED: HalfOpenSpec = HalfOpenSpec {
        lower_closed: true,
        upper_closed: true,
    };
    /// `(lo, hi]`, the right half of the pivot split.
    pub const OPEN_CLOSED: HalfOpenSpec = HalfOpenSpec {
        lower_closed: false,
        upper_closed: true,
    };
}

/// Probability measure on `[a, b]`: optional density, optional closed-form
/// CDF, plus atoms. Immutable after construction.
#[derive(Clone)]
pub struct Measure {
    interval: Interval,
    density: Option<RealFn>,
    cdf_closed: Option<RealFn>,
    atoms: Vec<Atom>,
    label: String,
}

impl std::fmt::Debug for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Measure")
            .field("interval", &self.interval)
            .field("atoms", &self.atoms)
            .field("label", &self.label)
            .finish()
    }
}

fn moment_cfg() -> QuadConfig {
    QuadConfig::effective(QuadConfig::tight())
}

impl Measure {
    /// General constructor. `cdf_closed`, when given, must be the full CDF
    /// of the measure (continuous part and atoms together).
    pub fn new(
        interval: Interval,
        density: Option<RealFn>,
        cdf_closed: Option<RealFn>,
        atoms: Vec<Atom>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let mut atoms = atoms;
        atoms.sort_by(|l, r| l.x.partial_cmp(&r.x).unwrap());
        for a in &atoms {
            if !(a.p > 0.0) || a.p > 1.0 + MASS_TOL {
                return Err(Error::validation(format!(
                    "atom weight {} not in (0, 1]",
                    a.p
                )));
            }
            if !interval.contains(a.x) {
                return Err(Error::validation(format!(
                    "atom location {} outside [{}, {}]",
                    a.x, interval.a, interval.b
                )));
            }
        }
        for w in atoms.windows(2) {
            if w[0].x == w[1].x {
                return Err(Error::validation(format!(
                    "duplicate atom location {}",
                    w[0].x
                )));
            }
        }

        let atom_mass: f64 = atoms.iter().map(|a| a.p).sum();
        let density_mass = match &density {
            Some(d) => {
                quad::integrate(|x| d(x), interval.a, interval.b, &moment_cfg())?.value
            }
            None => 0.0,
        };
        let total = atom_mass + density_mass;
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::validation(format!(
                "total mass {total} differs from 1 by more than {MASS_TOL:e}"
            )));
        }

        if let Some(cdf) = &cdf_closed {
            if (cdf(interval.b) - 1.0).abs() > MASS_TOL {
                return Err(Error::validation("closed-form cdf(b) is not 1"));
            }
        }

        Ok(Measure {
            interval,
            density,
            cdf_closed,
            atoms,
            label: label.into(),
        })
    }

    /// Uniform (Lebesgue) probability measure on `interval`.
    pub fn uniform(interval: Interval) -> Result<Self> {
        let Interval { a, b } = interval;
        let w = interval.len();
        Measure::new(
            interval,
            Some(Arc::new(move |_x| 1.0 / w)),
            Some(Arc::new(move |x| ((x - a) / (b - a)).clamp(0.0, 1.0))),
            Vec::new(),
            format!("uniform[{a},{b}]"),
        )
    }

    /// Beta(2,2) on [0, 1]: G(x) = x^2 (3 - 2x), density 6x(1-x).
    pub fn beta22() -> Result<Self> {
        Measure::new(
            Interval::new(0.0, 1.0)?,
            Some(Arc::new(|x| 6.0 * x * (1.0 - x))),
            Some(Arc::new(|x: f64| {
                let x = x.clamp(0.0, 1.0);
                x * x * (3.0 - 2.0 * x)
            })),
            Vec::new(),
            "beta22",
        )
    }

    /// Exponential(lambda) truncated to [0, 1]:
    /// G(x) = (1 - e^{-lambda x}) / (1 - e^{-lambda}).
    pub fn trunc_exp(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::validation(format!(
                "truncated exponential needs lambda > 0, got {lambda}"
            )));
        }
        let norm = 1.0 - (-lambda).exp();
        Measure::new(
            Interval::new(0.0, 1.0)?,
            Some(Arc::new(move |x: f64| lambda * (-lambda * x).exp() / norm)),
            Some(Arc::new(move |x: f64| {
                let x = x.clamp(0.0, 1.0);
                (1.0 - (-lambda * x).exp()) / norm
            })),
            Vec::new(),
            format!("truncexp{lambda}"),
        )
    }

    /// Purely atomic measure from `(location, weight)` pairs.
    pub fn discrete(interval: Interval, points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::validation("discrete measure needs at least one atom"));
        }
        let atoms = points.iter().map(|&(x, p)| Atom { x, p }).collect();
        Measure::new(
            interval,
            None,
            None,
            atoms,
            format!("discrete({} atoms)", points.len()),
        )
    }

    /// Mixture of a density with weight `1 - sum(p_i)` and explicit atoms.
    pub fn mixed(
        interval: Interval,
        density: RealFn,
        atoms: &[(f64, f64)],
        label: impl Into<String>,
    ) -> Result<Self> {
        let atoms = atoms.iter().map(|&(x, p)| Atom { x, p }).collect();
        Measure::new(interval, Some(density), None, atoms, label)
    }

    pub fn from_config(cfg: &MeasureConfig) -> Result<Self> {
        cfg.build()
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn density(&self) -> Option<&RealFn> {
        self.density.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_discrete(&self) -> bool {
        self.density.is_none()
    }

    /// Atom locations, used as structural kink points by quadrature callers.
    pub fn atom_locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.x).collect()
    }

    /// Assumption needed for the strictness claims of the three-point bound:
    /// the measure must not be concentrated on two or fewer points.
    pub fn spread_over_three_points(&self) -> bool {
        if self.density.is_some() {
            // A density carrying positive mass spreads over a continuum.
            let atom_mass: f64 = self.atoms.iter().map(|a| a.p).sum();
            if atom_mass < 1.0 - MASS_TOL {
                return true;
            }
        }
        self.atoms.len() >= 3
    }

    /// Distribution function G(x) = mu(-inf, x], right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.interval.a {
            return 0.0;
        }
        if x >= self.interval.b {
            return 1.0;
        }
        if let Some(cdf) = &self.cdf_closed {
            return cdf(x);
        }
        let mut v = 0.0;
        if let Some(d) = &self.density {
            v += quad::integrate(|y| d(y), self.interval.a, x, &moment_cfg())
                .map(|r| r.value)
                .unwrap_or(f64::NAN);
        }
        for a in &self.atoms {
            if a.x <= x {
                v += a.p;
            }
        }
        v
    }

    /// c = int x dG(x).
    pub fn mean(&self) -> Result<f64> {
        let mut v: f64 = self.atoms.iter().map(|a| a.x * a.p).sum();
        if let Some(d) = &self.density {
            v += quad::integrate(|x| x * d(x), self.interval.a, self.interval.b, &moment_cfg())?
                .value;
        }
        Ok(v)
    }

    fn require_inside(&self, u: f64, what: &str) -> Result<()> {
        if !self.interval.contains(u) {
            return Err(Error::validation(format!(
                "{what} {u} outside [{}, {}]",
                self.interval.a, self.interval.b
            )));
        }
        Ok(())
    }

    /// int over [a, u] of (u - x) dG(x). Nonnegative, nondecreasing in u.
    pub fn partial_deficit(&self, u: f64) -> Result<f64> {
        self.require_inside(u, "partial_deficit point")?;
        let mut v: f64 = self
            .atoms
            .iter()
            .filter(|a| a.x <= u)
            .map(|a| (u - a.x) * a.p)
            .sum();
        if let Some(d) = &self.density {
            v += quad::integrate(|x| (u - x) * d(x), self.interval.a, u, &moment_cfg())?.value;
        }
        Ok(v)
    }

    /// int over (t, b] of (x - t) dG(x). Nonnegative, nonincreasing in t.
    pub fn partial_excess(&self, t: f64) -> Result<f64> {
        self.require_inside(t, "partial_excess point")?;
        let mut v: f64 = self
            .atoms
            .iter()
            .filter(|a| a.x > t)
            .map(|a| (a.x - t) * a.p)
            .sum();
        if let Some(d) = &self.density {
            v += quad::integrate(|x| (x - t) * d(x), t, self.interval.b, &moment_cfg())?.value;
        }
        Ok(v)
    }

    /// int_{lo}^{hi} G(x) dx, splitting at atom locations where G jumps.
    pub fn partial_cdf_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        self.require_inside(lo, "cdf-integral lower bound")?;
        self.require_inside(hi, "cdf-integral upper bound")?;
        if lo > hi {
            return Err(Error::validation(format!(
                "inverted cdf-integral bounds [{lo}, {hi}]"
            )));
        }
        if self.is_discrete() {
            // Piecewise-constant G: exact sum over steps.
            let mut cuts: Vec<f64> = vec![lo];
            cuts.extend(self.atoms.iter().map(|a| a.x).filter(|x| *x > lo && *x < hi));
            cuts.push(hi);
            let mut v = 0.0;
            for w in cuts.windows(2) {
                v += self.cdf(w[0]) * (w[1] - w[0]);
            }
            return Ok(v);
        }
        let kinks = self.atom_locations();
        Ok(quad::integrate_with_kinks(|x| self.cdf(x), lo, hi, &kinks, &moment_cfg())?.value)
    }
}

/// JSON-compatible measure description:
/// `{"family": "uniform"|"beta22"|"truncexp"|"discrete", "a":…, "b":…,
///   "lambda":…, "atoms":[[x,p],…]}`.
#[derive(Debug, Clone, Deserialize)]
pub struct MeasureConfig {
    pub family: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub atoms: Option<Vec<(f64, f64)>>,
}

impl MeasureConfig {
    pub fn build(&self) -> Result<Measure> {
        let a = self.a.unwrap_or(0.0);
        let b = self.b.unwrap_or(1.0);
        match self.family.as_str() {
            "uniform" => Measure::uniform(Interval::new(a, b)?),
            "beta22" => {
                if (a, b) != (0.0, 1.0) {
                    return Err(Error::validation("beta22 is defined on [0, 1]"));
                }
                Measure::beta22()
            }
            "truncexp" => {
                if (a, b) != (0.0, 1.0) {
                    return Err(Error::validation("truncexp is defined on [0, 1]"));
                }
                Measure::trunc_exp(self.lambda.ok_or_else(|| {
                    Error::validation("truncexp requires a lambda field")
                })?)
            }
            "discrete" => {
                let pts = self
                    .atoms
                    .as_ref()
                    .ok_or_else(|| Error::validation("discrete requires an atoms field"))?;
                Measure::discrete(Interval::new(a, b)?, pts)
            }
            other => Err(Error::validation(format!("unknown measure family '{other}'"))),
        }
    }
}
