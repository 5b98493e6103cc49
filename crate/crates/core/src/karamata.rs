//! Derived second measures for the three inequalities, moment-condition
//! checks, and the Karamata function phi(u) — the running integral of the
//! CDF difference whose nonnegativity characterizes validity of an
//! inequality for every convex function.

use std::io::Write;

use crate::bounds;
use crate::error::{Error, Result};
use crate::measure::{HalfOpenSpec, Interval, Measure};
use crate::quad::{self, QuadConfig};

/// Grid tolerance for phi nonnegativity and endpoint checks.
pub const PHI_TOL: f64 = 1e-9;

/// Which of the three inequalities a spec encodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalityKind {
    /// Lower bound at the mean.
    J,
    /// Endpoint-chord upper bound.
    H,
    /// Three-point upper bound with interior pivot t.
    Th { t: f64 },
}

impl InequalityKind {
    pub fn name(&self) -> &'static str {
        match self {
            InequalityKind::J => "J",
            InequalityKind::H => "H",
            InequalityKind::Th { .. } => "TH",
        }
    }
}

/// Orientation of `int f dG` against `int f dH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// int f dG >= int f dH (the Jensen side).
    Lower,
    /// int f dG <= int f dH (the upper-bound side).
    Upper,
}

/// Mass and mean agreement between the two measures of a spec.
#[derive(Debug, Clone, Copy)]
pub struct MomentDiagnostic {
    pub d_mass: f64,
    pub d_mean: f64,
    pub pass: bool,
}

/// A pair (G, H) with an orientation; phi is always reported so that a
/// valid inequality has phi >= 0.
#[derive(Debug, Clone)]
pub struct InequalitySpec {
    pub kind: InequalityKind,
    pub g: Measure,
    pub h: Measure,
    pub direction: Direction,
}

/// Sampled Karamata function on a uniform grid.
#[derive(Debug, Clone)]
pub struct KaramataCurve {
    pub kind: InequalityKind,
    pub measure_label: String,
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
}

fn cfg() -> QuadConfig {
    QuadConfig::effective(QuadConfig::tight())
}

/// Builds the discrete second measure for the given inequality kind:
/// unit mass at the mean (J), endpoint masses (H), or the three-point
/// masses at a, t, b (TH). Atoms whose weight vanishes (extreme pivots)
/// are dropped.
pub fn second_measure(kind: InequalityKind, m: &Measure) -> Result<Measure> {
    let iv = m.interval();
    let c = m.mean()?;
    let pts: Vec<(f64, f64)> = match kind {
        InequalityKind::J => vec![(c, 1.0)],
        InequalityKind::H => vec![
            (iv.a, (iv.b - c) / iv.len()),
            (iv.b, (c - iv.a) / iv.len()),
        ],
        InequalityKind::Th { t } => {
            let w = bounds::th_weights(m, t)?;
            vec![(iv.a, w.p_a), (t, w.p_t), (iv.b, w.p_b)]
        }
    };
    let pts: Vec<(f64, f64)> = pts.into_iter().filter(|&(_, p)| p > 1e-15).collect();
    Measure::discrete(iv, &pts)
}

/// Reports |delta mass| and |delta mean| between two measures.
pub fn check_moment_conditions(g: &Measure, h: &Measure, tol: f64) -> Result<MomentDiagnostic> {
    // Both constructions enforce unit mass, so the mass gap reduces to the
    // CDF endpoint values.
    let d_mass = (g.cdf(g.interval().b) - h.cdf(h.interval().b)).abs();
    let d_mean = (g.mean()? - h.mean()?).abs();
    Ok(MomentDiagnostic {
        d_mass,
        d_mean,
        pass: d_mass <= tol && d_mean <= tol,
    })
}

impl InequalitySpec {
    /// Derives the second measure from the primary one and orients the
    /// inequality by its kind.
    pub fn derive(kind: InequalityKind, g: &Measure) -> Result<Self> {
        let h = second_measure(kind, g)?;
        let direction = match kind {
            InequalityKind::J => Direction::Lower,
            _ => Direction::Upper,
        };
        Self::new(kind, g.clone(), h, direction)
    }

    /// Builds a spec from an explicit pair, enforcing the equal-mass and
    /// equal-mean preconditions.
    pub fn new(kind: InequalityKind, g: Measure, h: Measure, direction: Direction) -> Result<Self> {
        let diag = check_moment_conditions(&g, &h, 1e-8)?;
        if !diag.pass {
            return Err(Error::validation(format!(
                "moment conditions violated: |d_mass| = {:e}, |d_mean| = {:e}",
                diag.d_mass, diag.d_mean
            )));
        }
        Ok(InequalitySpec { kind, g, h, direction })
    }

    /// Skips the moment check; for diagnostics over deliberately invalid
    /// pairs.
    pub fn new_unchecked(
        kind: InequalityKind,
        g: Measure,
        h: Measure,
        direction: Direction,
    ) -> Self {
        InequalitySpec { kind, g, h, direction }
    }

    pub fn interval(&self) -> Interval {
        self.g.interval()
    }

    /// Structural points where the CDF difference jumps or kinks.
    fn structure_points(&self) -> Vec<f64> {
        let mut pts = self.g.atom_locations();
        pts.extend(self.h.atom_locations());
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }

    /// phi(u) by direct quadrature of the CDF difference, oriented so a
    /// valid inequality gives phi >= 0.
    pub fn phi_generic(&self, u: f64) -> Result<f64> {
        let iv = self.interval();
        if !iv.contains(u) {
            return Err(Error::validation(format!(
                "phi point {u} outside [{}, {}]",
                iv.a, iv.b
            )));
        }
        let sign = match self.direction {
            Direction::Lower => 1.0,
            Direction::Upper => -1.0,
        };
        let pts = self.structure_points();
        let r = quad::integrate_with_kinks(
            |x| sign * (self.g.cdf(x) - self.h.cdf(x)),
            iv.a,
            u,
            &pts,
            &cfg(),
        )?;
        Ok(r.value)
    }

    /// phi(u) through the partial-moment closed forms of the derived
    /// second measures; no CDF-difference quadrature.
    pub fn phi_closed(&self, u: f64) -> Result<f64> {
        let iv = self.interval();
        if !iv.contains(u) {
            return Err(Error::validation(format!(
                "phi point {u} outside [{}, {}]",
                iv.a, iv.b
            )));
        }
        match self.kind {
            InequalityKind::J => {
                let c = self.g.mean()?;
                Ok(self.g.partial_deficit(u)? - (u - c).max(0.0))
            }
            InequalityKind::H => {
                let c = self.g.mean()?;
                Ok((u - iv.a) / iv.len() * (iv.b - c) - self.g.partial_deficit(u)?)
            }
            InequalityKind::Th { t } => {
                if u <= t {
                    Ok((u - iv.a) / (t - iv.a) * self.g.partial_deficit(t)?
                        - self.g.partial_deficit(u)?)
                } else {
                    let tail = self.g.partial_cdf_integral(t, iv.b)?;
                    Ok((u - t) / (iv.b - t) * tail - self.g.partial_cdf_integral(t, u)?)
                }
            }
        }
    }

    /// Preferred phi evaluator: closed form for the three derived kinds.
    pub fn phi(&self, u: f64) -> Result<f64> {
        self.phi_closed(u)
    }

    /// Residual of the inequality at the probe function x -> |x - u|,
    /// by direct Stieltjes integration against both measures. Numerically
    /// this equals 2 phi(u); the factor is pinned by tests.
    pub fn abs_probe_residual(&self, u: f64) -> Result<f64> {
        let iv = self.interval();
        let f = |x: f64| (x - u).abs();
        let ig = quad::integrate_stieltjes(f, &[u], &self.g, iv.a, iv.b, HalfOpenSpec::CLOSED, &cfg())?
            .value;
        let ih = quad::integrate_stieltjes(f, &[u], &self.h, iv.a, iv.b, HalfOpenSpec::CLOSED, &cfg())?
            .value;
        Ok(match self.direction {
            Direction::Lower => ig - ih,
            Direction::Upper => ih - ig,
        })
    }

    /// True iff phi stays above -PHI_TOL across a uniform grid and closes at
    /// the right endpoint. phi(b) = 0 is the equal-means condition; without
    /// it a nonnegative phi only bounds the difference of partial integrals,
    /// not the inequality itself.
    pub fn dominance_test(&self, grid_n: usize) -> Result<bool> {
        if grid_n < 16 {
            return Err(Error::validation("dominance grid needs at least 16 points"));
        }
        let iv = self.interval();
        if self.phi_generic(iv.b)?.abs() > PHI_TOL {
            return Ok(false);
        }
        for i in 0..grid_n {
            let u = iv.a + iv.len() * i as f64 / (grid_n - 1) as f64;
            if self.phi_generic(u)? < -PHI_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Samples phi on a uniform grid including both endpoints.
    pub fn sample_curve(&self, grid_n: usize) -> Result<KaramataCurve> {
        if grid_n < 2 {
            return Err(Error::validation("curve grid needs at least 2 points"));
        }
        let iv = self.interval();
        let mut grid = Vec::with_capacity(grid_n);
        let mut phi = Vec::with_capacity(grid_n);
        for i in 0..grid_n {
            let u = iv.a + iv.len() * i as f64 / (grid_n - 1) as f64;
            grid.push(u);
            phi.push(self.phi(u)?);
        }
        Ok(KaramataCurve {
            kind: self.kind,
            measure_label: self.g.label().to_string(),
            grid,
            phi,
        })
    }
}

impl KaramataCurve {
    /// CSV schema: header `u,phi`, 17-significant-digit floats.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "u,phi")?;
        for (u, p) in self.grid.iter().zip(&self.phi) {
            writeln!(w, "{u:.16e},{p:.16e}")?;
        }
        Ok(())
    }

    /// Filename convention `<kind>_<measure>_<grid_n>.csv`.
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}.csv",
            self.kind.name(),
            self.measure_label,
            self.grid.len()
        )
    }

    pub fn max_phi(&self) -> f64 {
        self.phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}
