//! Monte Carlo and quadrature estimators: section areas, spherical factors,
//! intrinsic measure, Federer densities, covering sums, and checks of the
//! identities relating them.

mod checks;
mod covering;
mod federer;
mod intrinsic;
mod optimize;
mod section;

use serde::{Deserialize, Serialize};

pub use checks::{
    area_check, coarea_check, section_concavity_check, vertical_translation_check, AreaOptions, CoveringOptions,
    AreaReport, CoareaOptions, CoareaReport, ConcavityReport, ConvexBody, ProbeReport,
    TranslationRegion, TranslationReport,
};
pub use covering::{covering_estimate, CoveringReport};
pub use federer::{federer_density, FedererOptions, FedererReport, RadiusRow};
pub use intrinsic::{hypersurface_density, intrinsic_measure, DensityScratch, IntrinsicDensity, Quadrature};
pub use optimize::nelder_mead;
pub use section::{
    beta_constancy_check, section_area, spherical_factor, BetaConstancyReport, BetaOptions,
    SphericalFactor,
};

/// A numerical value with its standard error and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Monte Carlo standard error, or a quadrature error estimate.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub method: String,
}

impl Estimate {
    pub fn exact(value: f64, method: &str) -> Self {
        Self {
            value,
            stderr: 0.0,
            samples: 0,
            seed: 0,
            method: method.to_string(),
        }
    }

    /// Hit-or-miss estimate of `volume · hits / samples`.
    pub fn hit_or_miss(volume: f64, hits: u64, samples: u64, seed: u64, method: &str) -> Self {
        let p = if samples == 0 { 0.0 } else { hits as f64 / samples as f64 };
        let stderr = if samples == 0 {
            0.0
        } else {
            volume * (p * (1.0 - p) / samples as f64).sqrt()
        };
        Self {
            value: volume * p,
            stderr,
            samples,
            seed,
            method: method.to_string(),
        }
    }

    /// Sample mean of values with running sums `sum`, `sum_sq` over `n` draws.
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64, seed: u64, method: &str) -> Self {
        let (mean, stderr) = if n == 0 {
            (0.0, 0.0)
        } else {
            let nf = n as f64;
            let mean = sum / nf;
            let var = (sum_sq / nf - mean * mean).max(0.0);
            (mean, (var / nf).sqrt())
        };
        Self {
            value: mean,
            stderr,
            samples: n,
            seed,
            method: method.to_string(),
        }
    }

    /// |a − b| / sqrt(σ_a² + σ_b²); zero-variance pairs compare to 1e-12.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        let diff = (self.value - other.value).abs();
        let sigma = self.stderr.hypot(other.stderr);
        if sigma > 0.0 {
            diff / sigma
        } else if diff <= 1e-12 * self.value.abs().max(other.value.abs()).max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// One comparison with its tolerance and both compared numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    /// Advisory verdicts are recorded but never fail a run.
    pub advisory: bool,
    pub tolerance: f64,
    /// "relative", "sigma" or "absolute".
    pub tolerance_kind: String,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Verdict {
    /// |lhs − rhs| ≤ tol·|rhs|.
    pub fn relative(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let scale = if rhs != 0.0 { rhs.abs() } else { lhs.abs().max(f64::MIN_POSITIVE) };
        Self {
            name: name.to_string(),
            passed: (lhs - rhs).abs() <= tol * scale,
            advisory: false,
            tolerance: tol,
            tolerance_kind: "relative".into(),
            lhs,
            rhs,
            note: None,
        }
    }

    pub fn sigma(name: &str, a: &Estimate, b: &Estimate, k: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: a.z_score(b) <= k,
            advisory: false,
            tolerance: k,
            tolerance_kind: "sigma".into(),
            lhs: a.value,
            rhs: b.value,
            note: None,
        }
    }

    pub fn advisory(mut self, note: &str) -> Self {
        self.advisory = true;
        self.note = Some(note.to_string());
        self
    }
}
