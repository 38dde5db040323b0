//! Admissible nonlinearities f: continuous, sign-preserving (s f(s) >= 0)
//! and polynomially bounded (s f(s) <= C |s|^{p+1}), together with their
//! antiderivatives G(s) = integral of f from 0 to s.
//!
//! The built-in catalog spans the behaviors the solver must tolerate:
//! a smooth superlinear power, the zero map, a truncated power that is
//! globally Lipschitz, and an oscillatory power that has no closed-form
//! antiderivative.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::numeric::pow_nonneg;
use serde::{Deserialize, Serialize};

/// Growth certificate (p, C) for the bound 0 <= s f(s) <= C |s|^{p+1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub p: f64,
    pub c: f64,
}

impl GrowthCertificate {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "growth exponent p must satisfy p > 1, got {p}"
            )));
        }
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "growth constant C must be positive, got {c}"
            )));
        }
        Ok(Self { p, c })
    }
}

/// Catalog of concrete nonlinearities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CatalogEntry {
    /// f(s) = |s|^{p-1} s
    PurePower { p: f64 },
    /// f(s) = 0
    Zero,
    /// f(s) = min(|s|, M)^{p-1} s
    TruncatedPower { p: f64, m: f64 },
    /// f(s) = |s|^{p-1} s sin^2(s)
    Oscillatory { p: f64 },
}

/// A nonlinearity together with its growth certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub kind: CatalogEntry,
    pub certificate: GrowthCertificate,
}

impl Nonlinearity {
    /// Build a catalog nonlinearity by name. `c` is the growth constant to
    /// certify; each entry validates that (p, c) actually bounds it.
    pub fn from_catalog(name: &str, p: f64, c: f64, m: Option<f64>) -> Result<Self> {
        let name = name.replace('-', "_");
        let kind = match name.as_str() {
            "pure_power" => CatalogEntry::PurePower { p },
            "zero" => CatalogEntry::Zero,
            "truncated_power" => {
                let m = m.ok_or_else(|| {
                    Error::InvalidParameter("truncated_power requires a cutoff M".into())
                })?;
                if !m.is_finite() || m <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "truncation level M must be positive, got {m}"
                    )));
                }
                CatalogEntry::TruncatedPower { p, m }
            }
            "oscillatory" => CatalogEntry::Oscillatory { p },
            other => return Err(Error::UnknownNonlinearity(other.to_string())),
        };
        let certificate = GrowthCertificate::new(p, c)?;
        let nl = Self { kind, certificate };
        nl.validate_certificate()?;
        Ok(nl)
    }

    /// Minimal-C construction: pure power with C = 1 (the equality case),
    /// and likewise for the other entries where C = 1 is valid.
    pub fn pure_power(p: f64) -> Result<Self> {
        Self::from_catalog("pure_power", p, 1.0, None)
    }

    pub fn zero() -> Self {
        Self {
            kind: CatalogEntry::Zero,
            certificate: GrowthCertificate { p: 3.0, c: 1.0 },
        }
    }

    pub fn truncated_power(p: f64, m: f64) -> Result<Self> {
        Self::from_catalog("truncated_power", p, 1.0, Some(m))
    }

    pub fn oscillatory(p: f64) -> Result<Self> {
        Self::from_catalog("oscillatory", p, 1.0, None)
    }

    fn validate_certificate(&self) -> Result<()> {
        // All catalog entries satisfy s f(s) <= |s|^{p+1} exactly, so any
        // C >= 1 certifies them; cheaper and sharper than a grid sweep.
        if let CatalogEntry::Zero = self.kind {
            return Ok(());
        }
        if self.certificate.c < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "growth constant C = {} does not certify this entry (minimal C is 1)",
                self.certificate.c
            )));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self.kind {
            CatalogEntry::PurePower { p } => pow_nonneg(s.abs(), p - 1.0) * s,
            CatalogEntry::Zero => 0.0,
            CatalogEntry::TruncatedPower { p, m } => pow_nonneg(s.abs().min(m), p - 1.0) * s,
            CatalogEntry::Oscillatory { p } => {
                let sn = s.sin();
                pow_nonneg(s.abs(), p - 1.0) * s * sn * sn
            }
        }
    }

    /// Points where f changes analytic piece (used to split quadrature).
    pub fn kinks(&self) -> Vec<f64> {
        match self.kind {
            CatalogEntry::TruncatedPower { m, .. } => vec![-m, m],
            _ => Vec::new(),
        }
    }

    /// Whether the antiderivative has a closed form.
    pub fn has_closed_form_antiderivative(&self) -> bool {
        !matches!(self.kind, CatalogEntry::Oscillatory { .. })
    }

    pub fn antiderivative(&self) -> Antiderivative {
        let method = if self.has_closed_form_antiderivative() {
            AntiderivativeMethod::ClosedForm
        } else {
            AntiderivativeMethod::Quadrature { tol: 1e-12 }
        };
        Antiderivative {
            f: self.clone(),
            method,
        }
    }
}

/// Evaluation method for G.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AntiderivativeMethod {
    ClosedForm,
    Quadrature { tol: f64 },
}

/// G(s) = integral of f over [0, s], with G(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Antiderivative {
    f: Nonlinearity,
    method: AntiderivativeMethod,
}

impl Antiderivative {
    pub fn method(&self) -> AntiderivativeMethod {
        self.method
    }

    pub fn source(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        match self.method {
            AntiderivativeMethod::ClosedForm => Ok(self.closed_form(s)),
            AntiderivativeMethod::Quadrature { tol } => {
                // G is even for every catalog entry (f is odd), so integrate
                // on the positive side only.
                let t = s.abs();
                quadrature::integrate_adaptive(&|x| self.f.eval(x), 0.0, t, tol)
            }
        }
    }

    /// G(b) - G(a), computed directly over [a, b]. For the quadrature
    /// method this avoids the cancellation of two long-range integrals.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        match self.method {
            AntiderivativeMethod::ClosedForm => Ok(self.closed_form(b) - self.closed_form(a)),
            AntiderivativeMethod::Quadrature { tol } => {
                quadrature::integrate_adaptive(&|x| self.f.eval(x), a, b, tol)
            }
        }
    }

    fn closed_form(&self, s: f64) -> f64 {
        match self.f.kind {
            CatalogEntry::PurePower { p } => pow_nonneg(s.abs(), p + 1.0) / (p + 1.0),
            CatalogEntry::Zero => 0.0,
            CatalogEntry::TruncatedPower { p, m } => {
                let a = s.abs();
                if a <= m {
                    pow_nonneg(a, p + 1.0) / (p + 1.0)
                } else {
                    m.powf(p + 1.0) / (p + 1.0) + m.powf(p - 1.0) * (a * a - m * m) / 2.0
                }
            }
            CatalogEntry::Oscillatory { .. } => unreachable!("oscillatory G has no closed form"),
        }
    }
}

/// Report from a grid sweep of the growth bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Max over the grid of (s f(s) - C |s|^{p+1})_+ .
    pub max_growth_violation: f64,
    pub growth_argmax: f64,
    /// Max over the grid of (-s f(s))_+ .
    pub max_sign_violation: f64,
    pub sign_argmax: f64,
}

/// Sweep the certificate bounds over a sample grid.
pub fn check_growth(f: &Nonlinearity, grid: &[f64]) -> Result<GrowthReport> {
    if grid.is_empty() || grid.iter().any(|s| !s.is_finite()) {
        return Err(Error::DegenerateGrid);
    }
    let GrowthCertificate { p, c } = f.certificate;
    let mut report = GrowthReport {
        max_growth_violation: 0.0,
        growth_argmax: grid[0],
        max_sign_violation: 0.0,
        sign_argmax: grid[0],
    };
    for &s in grid {
        let sf = s * f.eval(s);
        let growth = sf - c * pow_nonneg(s.abs(), p + 1.0);
        if growth > report.max_growth_violation {
            report.max_growth_violation = growth;
            report.growth_argmax = s;
        }
        if -sf > report.max_sign_violation {
            report.max_sign_violation = -sf;
            report.sign_argmax = s;
        }
    }
    Ok(report)
}

/// Uniform grid helper used by the sweeps.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
