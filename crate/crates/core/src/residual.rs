//! Residuals of the three inequalities: direct gaps, the curvature form
//! kappa * int f''(u) phi(u) du, the function-free average residual AR, and
//! the comparison ratios RAR and RR.
//!
//! The proportionality constant kappa between the direct residual and
//! int f'' phi is never hard-coded silently: `calibrate_kappa` fits it over
//! a battery of smooth functions and measures, and reports carry the value
//! used.

use serde::Serialize;

use crate::bounds;
use crate::convex::ConvexFn;
use crate::error::{Error, Result};
use crate::karamata::{InequalityKind, InequalitySpec};
use crate::measure::{HalfOpenSpec, Measure};
use crate::quad::{self, QuadConfig};

/// Residual numbers for one (inequality, function) pair.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub direct: f64,
    pub curvature: Option<f64>,
    pub kappa: f64,
    pub ar: Option<f64>,
    pub notes: String,
}

/// Fitted curvature constant with its residual-of-fit diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct KappaFit {
    pub kappa: f64,
    pub fit_residual: f64,
}

fn cfg() -> QuadConfig {
    QuadConfig::effective(QuadConfig::tight())
}

/// Gap between the two sides of the inequality at `f`, oriented so a valid
/// inequality gives a nonnegative value.
pub fn direct_residual(spec: &InequalitySpec, f: &ConvexFn) -> Result<f64> {
    let iv = spec.interval();
    let ig = bounds::integral(&spec.g, f)?;
    let ih = quad::integrate_stieltjes(
        |x| f.eval(x),
        f.kinks(),
        &spec.h,
        iv.a,
        iv.b,
        HalfOpenSpec::CLOSED,
        &cfg(),
    )?
    .value;
    Ok(match spec.direction {
        crate::karamata::Direction::Lower => ig - ih,
        crate::karamata::Direction::Upper => ih - ig,
    })
}

/// int f''(u) phi(u) du over the interval, split at the structural points
/// of phi (mean, pivot, atoms).
pub fn curvature_integral(spec: &InequalitySpec, f: &ConvexFn) -> Result<f64> {
    if !f.kinks().is_empty() {
        return Err(Error::Kinked(f.label().to_string()));
    }
    let iv = spec.interval();
    let mut cuts = spec.g.atom_locations();
    cuts.push(spec.g.mean()?);
    if let InequalityKind::Th { t } = spec.kind {
        cuts.push(t);
    }
    let h = 1e-5 * iv.len();
    let r = quad::integrate_with_kinks(
        |u| {
            let d2 = match f.d2(u) {
                Some(v) => v,
                None => {
                    let e = |x: f64| f.eval(x);
                    (e(u + h) - 2.0 * e(u) + e(u - h)) / (h * h)
                }
            };
            d2 * spec.phi(u).unwrap_or(f64::NAN)
        },
        iv.a,
        iv.b,
        &cuts,
        &cfg(),
    )?;
    Ok(r.value)
}

/// kappa * int f'' phi; `kappa` comes from calibration or a CLI override.
pub fn curvature_residual(spec: &InequalitySpec, f: &ConvexFn, kappa: f64) -> Result<f64> {
    Ok(kappa * curvature_integral(spec, f)?)
}

/// Least-squares fit of direct residual against int f'' phi over a battery
/// of smooth convex functions, the three measure families and the three
/// inequality kinds. The fit is through the origin; the diagnostic is the
/// worst relative misfit across the battery.
pub fn calibrate_kappa() -> Result<KappaFit> {
    let measures = [
        Measure::uniform(crate::measure::Interval::new(0.0, 1.0)?)?,
        Measure::beta22()?,
        Measure::trunc_exp(1.0)?,
    ];
    let funcs = [ConvexFn::square(), ConvexFn::exp(), ConvexFn::powp(4.0)?];
    let kinds = [
        InequalityKind::J,
        InequalityKind::H,
        InequalityKind::Th { t: 0.5 },
    ];
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = Vec::new();
    for m in &measures {
        for kind in kinds {
            let spec = InequalitySpec::derive(kind, m)?;
            for f in &funcs {
                let d = direct_residual(&spec, f)?;
                let c = curvature_integral(&spec, f)?;
                num += d * c;
                den += c * c;
                pairs.push((d, c));
            }
        }
    }
    if den < 1e-18 {
        return Err(Error::Degenerate(
            "calibration battery has no curvature signal".into(),
        ));
    }
    let kappa = num / den;
    let fit_residual = pairs
        .iter()
        .map(|&(d, c)| ((d - kappa * c) / d.abs().max(1e-12)).abs())
        .fold(0.0, f64::max);
    Ok(KappaFit { kappa, fit_residual })
}

/// AR: mean of phi over the interval.
pub fn average_residual(spec: &InequalitySpec) -> Result<f64> {
    let iv = spec.interval();
    let mut cuts = spec.g.atom_locations();
    cuts.push(spec.g.mean()?);
    if let InequalityKind::Th { t } = spec.kind {
        cuts.push(t);
    }
    let r = quad::integrate_with_kinks(
        |u| spec.phi(u).unwrap_or(f64::NAN),
        iv.a,
        iv.b,
        &cuts,
        &cfg(),
    )?;
    Ok(r.value / iv.len())
}

/// RAR: ratio of average residuals of two inequalities.
pub fn relative_average_residual(spec: &InequalitySpec, spec0: &InequalitySpec) -> Result<f64> {
    let ar0 = average_residual(spec0)?;
    if ar0 <= 1e-15 {
        return Err(Error::Degenerate("reference inequality has zero AR".into()));
    }
    Ok(average_residual(spec)? / ar0)
}

/// RR: ratio of the residuals of two inequalities at the same function.
pub fn relative_residual(f: &ConvexFn, spec: &InequalitySpec, spec0: &InequalitySpec) -> Result<f64> {
    let r0 = direct_residual(spec0, f)?;
    if r0.abs() <= 1e-14 {
        return Err(Error::Degenerate(format!(
            "reference residual vanishes at '{}' (affine equality family)",
            f.label()
        )));
    }
    Ok(direct_residual(spec, f)? / r0)
}

/// Empirical check of the smoothing perturbation bound
/// |R(f) - R(f_hat)| <= 2 eps, plus the RR perturbation as a diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothingDiagnostic {
    pub eps: f64,
    pub r_f: f64,
    pub r_smoothed: f64,
    pub difference: f64,
    pub bound: f64,
    pub pass: bool,
    pub rr_f: Option<f64>,
    pub rr_smoothed: Option<f64>,
}

pub fn smoothing_error_bounds(
    f: &ConvexFn,
    eps: f64,
    spec: &InequalitySpec,
    spec0: Option<&InequalitySpec>,
) -> Result<SmoothingDiagnostic> {
    if !(eps > 0.0) {
        return Err(Error::validation("smoothing eps must be positive"));
    }
    let iv = spec.interval();
    let smoothed = f.mollify(iv, eps)?;
    let r_f = direct_residual(spec, f)?;
    let r_smoothed = direct_residual(spec, &smoothed)?;
    let difference = (r_f - r_smoothed).abs();
    let (rr_f, rr_smoothed) = match spec0 {
        Some(s0) => (
            relative_residual(f, spec, s0).ok(),
            relative_residual(&smoothed, spec, s0).ok(),
        ),
        None => (None, None),
    };
    Ok(SmoothingDiagnostic {
        eps,
        r_f,
        r_smoothed,
        difference,
        bound: 2.0 * eps,
        pass: difference <= 2.0 * eps,
        rr_f,
        rr_smoothed,
    })
}

impl ResidualReport {
    /// Assembles the full report for one pair; curvature is included only
    /// for kink-free functions.
    pub fn build(spec: &InequalitySpec, f: &ConvexFn, kappa: f64) -> Result<Self> {
        let direct = direct_residual(spec, f)?;
        let curvature = if f.kinks().is_empty() {
            Some(curvature_residual(spec, f, kappa)?)
        } else {
            None
        };
        let ar = average_residual(spec).ok();
        let notes = match &curvature {
            Some(c) => format!(
                "curvature form with kappa = {kappa}; |direct - curvature| = {:e}",
                (direct - c).abs()
            ),
            None => format!("'{}' has kinks; mollify for the curvature form", f.label()),
        };
        Ok(ResidualReport {
            direct,
            curvature,
            kappa,
            ar,
            notes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::karamata::Direction;
    use crate::measure::Interval;

    fn uni() -> Measure {
        Measure::uniform(Interval::new(0.0, 1.0).unwrap()).unwrap()
    }

    fn spec(kind: InequalityKind, m: &Measure) -> InequalitySpec {
        InequalitySpec::derive(kind, m).unwrap()
    }

    #[test]
    fn direct_residual_values() {
        let h = spec(InequalityKind::H, &uni());
        assert!((direct_residual(&h, &ConvexFn::square()).unwrap() - 1.0 / 6.0).abs() < 1e-10);
        let th = spec(InequalityKind::Th { t: 0.5 }, &uni());
        assert!((direct_residual(&th, &ConvexFn::square()).unwrap() - 1.0 / 24.0).abs() < 1e-10);
        let f = ConvexFn::affine(1.5, 0.2);
        for s in [&h, &th, &spec(InequalityKind::J, &uni())] {
            assert!(direct_residual(s, &f).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn curvature_matches_direct() {
        let h = spec(InequalityKind::H, &uni());
        let c = curvature_residual(&h, &ConvexFn::square(), 1.0).unwrap();
        assert!((c - 1.0 / 6.0).abs() < 1e-9);
        let th = spec(InequalityKind::Th { t: 0.5 }, &uni());
        let c = curvature_residual(&th, &ConvexFn::square(), 1.0).unwrap();
        assert!((c - 1.0 / 24.0).abs() < 1e-9);
        assert_eq!(
            curvature_residual(&h, &ConvexFn::affine(1.0, 0.0), 1.0).unwrap(),
            0.0
        );
        assert!(curvature_residual(&h, &ConvexFn::pivot_abs(0.5), 1.0).is_err());
    }

    #[test]
    fn kappa_calibration() {
        let fit = calibrate_kappa().unwrap();
        assert!(
            (fit.kappa - 1.0).abs() < 1e-6,
            "kappa = {}, worst misfit {}",
            fit.kappa,
            fit.fit_residual
        );
        assert!(fit.fit_residual < 1e-6);
        // single-pair sanity: direct / integral = 1 for H/uniform, square
        let h = spec(InequalityKind::H, &uni());
        let d = direct_residual(&h, &ConvexFn::square()).unwrap();
        let c = curvature_integral(&h, &ConvexFn::square()).unwrap();
        assert!((d / c - 1.0).abs() < 1e-8);
    }

    #[test]
    fn average_residual_uniform_fractions() {
        let j = spec(InequalityKind::J, &uni());
        assert!((average_residual(&j).unwrap() - 1.0 / 24.0).abs() < 1e-10);
        let h = spec(InequalityKind::H, &uni());
        assert!((average_residual(&h).unwrap() - 1.0 / 12.0).abs() < 1e-10);
        let th = spec(InequalityKind::Th { t: 0.5 }, &uni());
        assert!((average_residual(&th).unwrap() - 1.0 / 48.0).abs() < 1e-10);
    }

    #[test]
    fn rar_cases() {
        let th_u = spec(InequalityKind::Th { t: 0.5 }, &uni());
        let h_u = spec(InequalityKind::H, &uni());
        assert!((relative_average_residual(&th_u, &h_u).unwrap() - 0.25).abs() < 1e-8);
        assert!((relative_average_residual(&h_u, &h_u).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rr_cases() {
        let th_u = spec(InequalityKind::Th { t: 0.5 }, &uni());
        let h_u = spec(InequalityKind::H, &uni());
        assert!(
            (relative_residual(&ConvexFn::square(), &th_u, &h_u).unwrap() - 0.25).abs() < 1e-8
        );
        assert!(relative_residual(&ConvexFn::affine(2.0, 0.0), &th_u, &h_u).is_err());
        // dual-route check for exp: direct ratio vs curvature-integral ratio
        let f = ConvexFn::exp();
        let rr = relative_residual(&f, &th_u, &h_u).unwrap();
        let rr_curv = curvature_integral(&th_u, &f).unwrap() / curvature_integral(&h_u, &f).unwrap();
        assert!(rr > 0.0 && rr < 1.0);
        assert!((rr - rr_curv).abs() < 1e-6);
    }

    #[test]
    fn smoothing_bound_holds() {
        let h = spec(InequalityKind::H, &uni());
        for eps in [1e-2, 1e-4] {
            let d = smoothing_error_bounds(&ConvexFn::pivot_abs(0.5), eps, &h, None).unwrap();
            assert!(d.pass, "eps={eps}: {d:?}");
        }
        // smooth function: mollification barely moves the residual
        let d = smoothing_error_bounds(&ConvexFn::square(), 1e-3, &h, None).unwrap();
        assert!(d.difference < 2e-3);
        assert!(d.difference < 1e-4);
    }

    #[test]
    fn mean_value_form_attained_on_grid() {
        // direct = kappa * phi(theta) * (f'(b) - f'(a)) for some theta:
        // the difference changes sign over the grid.
        let f = ConvexFn::exp();
        for kind in [InequalityKind::J, InequalityKind::H, InequalityKind::Th { t: 0.5 }] {
            let s = spec(kind, &uni());
            let d = direct_residual(&s, &f).unwrap();
            let span = f.d1(1.0).unwrap() - f.d1(0.0).unwrap();
            let mut signs = (false, false);
            for i in 1..200 {
                let u = i as f64 / 200.0;
                let v = d - s.phi(u).unwrap() * span;
                if v >= -1e-12 {
                    signs.0 = true;
                }
                if v <= 1e-12 {
                    signs.1 = true;
                }
            }
            assert!(signs.0 && signs.1, "{:?}", kind);
        }
    }

    #[test]
    fn report_serialization_fields() {
        let h = spec(InequalityKind::H, &uni());
        let rep = ResidualReport::build(&h, &ConvexFn::square(), 1.0).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        for key in ["direct", "curvature", "kappa", "ar", "notes"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert!((json["direct"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_pair_gives_negative_phi_not_residual_contract() {
        // deliberately mismatched pair: direct residual of a convex f can
        // go negative, which dominance_test flags via phi
        let bad_h = Measure::discrete(Interval::new(0.0, 1.0).unwrap(), &[(0.6, 1.0)]).unwrap();
        let bad = InequalitySpec::new_unchecked(InequalityKind::J, uni(), bad_h, Direction::Lower);
        assert!(!bad.dominance_test(64).unwrap());
    }
}
