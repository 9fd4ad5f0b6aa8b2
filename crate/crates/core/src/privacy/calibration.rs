use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Privacy budget and clipping for one private computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub clip_norm: f64,
    /// Number of noisy releases covered by the budget (training iterations).
    #[serde(default = "one")]
    pub iterations: usize,
}

fn one() -> usize {
    1
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, clip_norm: f64, iterations: usize) -> Result<Self> {
        let p = Self { epsilon, delta, clip_norm, iterations };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {}", self.delta)));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm > 0.0) {
            return Err(Error::InvalidConfig(format!("clip norm must be positive, got {}", self.clip_norm)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Target accuracy `ρ` and failure probability `η` for an approximate distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloseApprox {
    pub rho: f64,
    pub eta: f64,
}

impl CloseApprox {
    pub fn new(rho: f64, eta: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("eta", eta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        Ok(Self { rho, eta })
    }
}

/// Sample-size bound for the private top eigenvector to give a `(ρ, η)`-close distance:
///
/// `p·c² / (ε·α·(1 − √(1 − ρ²))) · (4·ln(1/η)/p + 2·ln(8λ₁/(ρ²α)))`
pub fn required_sample_size(diag: &super::DpPcaDiagnostics, close: CloseApprox, epsilon: f64, c: f64) -> Result<f64> {
    let alpha = diag.eigengap;
    if !(alpha > 0.0) {
        return Err(Error::ZeroGap(alpha));
    }
    let p = diag.p as f64;
    let rho2 = close.rho * close.rho;
    let lead = p * c * c / (epsilon * alpha * (1.0 - (1.0 - rho2).sqrt()));
    let tail = 4.0 * (1.0 / close.eta).ln() / p + 2.0 * (8.0 * diag.top_eigenvalue / (rho2 * alpha)).ln();
    Ok(lead * tail)
}

/// Gaussian noise multiplier `σ = 2·√(2T·ln(1/δ))/ε`, plus a warning when `ε ≥ 2·ln(1/δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub sigma: f64,
    pub warning: Option<String>,
}

pub fn gep_noise_calibration(params: &PrivacyParams) -> NoiseCalibration {
    let log_inv_delta = (1.0 / params.delta).ln();
    let sigma = 2.0 * (2.0 * params.iterations as f64 * log_inv_delta).sqrt() / params.epsilon;
    let warning = (params.epsilon >= 2.0 * log_inv_delta).then(|| {
        format!(
            "epsilon {} is outside the calibrated range epsilon < 2 ln(1/delta) = {}",
            params.epsilon,
            2.0 * log_inv_delta
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    NoiseCalibration { sigma, warning }
}

pub fn gep_noise_scale(params: &PrivacyParams) -> f64 {
    gep_noise_calibration(params).sigma
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::DpPcaDiagnostics;

    fn diag(lambda1: f64, alpha: f64, p: usize) -> DpPcaDiagnostics {
        DpPcaDiagnostics { top_eigenvalue: lambda1, eigengap: alpha, p, m: 0 }
    }

    #[test]
    fn noise_golden() {
        let p = PrivacyParams::new(2.0, 1e-5, 1.0, 1).unwrap();
        let want = 4.798_525_912_188_081_207_567_4;
        assert!((gep_noise_scale(&p) - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn noise_scaling() {
        let base = PrivacyParams::new(1.0, 1e-5, 1.0, 3).unwrap();
        let s = gep_noise_scale(&base);
        let t4 = gep_noise_scale(&PrivacyParams { iterations: 12, ..base });
        let e2 = gep_noise_scale(&PrivacyParams { epsilon: 2.0, ..base });
        assert!((t4 / s - 2.0).abs() < 1e-12);
        assert!((e2 / s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn noise_warns_out_of_range() {
        let p = PrivacyParams::new(30.0, 1e-5, 1.0, 1).unwrap();
        assert!(gep_noise_calibration(&p).warning.is_some());
        let p = PrivacyParams::new(1.0, 1e-5, 1.0, 1).unwrap();
        assert!(gep_noise_calibration(&p).warning.is_none());
    }

    #[test]
    fn bound_golden_and_scaling() {
        let close = CloseApprox::new(0.5, 0.1).unwrap();
        let d = diag(1.0, 0.5, 20);
        let m = required_sample_size(&d, close, 1.0, 1.0).unwrap();
        let want = 2_620.879_908_066_792_710_013_2;
        assert!((m - want).abs() <= 1e-12 * want, "{m}");
        let m_c2 = required_sample_size(&d, close, 1.0, 2.0).unwrap();
        assert!((m_c2 / m - 4.0).abs() < 1e-12);
        let m_e = required_sample_size(&d, close, 0.5, 1.0).unwrap();
        assert!((m_e / m - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bound_needs_gap() {
        let close = CloseApprox::new(0.5, 0.1).unwrap();
        assert!(matches!(required_sample_size(&diag(1.0, 0.0, 5), close, 1.0, 1.0), Err(Error::ZeroGap(_))));
    }

    #[test]
    fn params_validation() {
        assert!(PrivacyParams::new(0.0, 1e-5, 1.0, 1).is_err());
        assert!(PrivacyParams::new(1.0, 1.0, 1.0, 1).is_err());
        assert!(PrivacyParams::new(1.0, 1e-5, -1.0, 1).is_err());
        assert!(CloseApprox::new(1.0, 0.1).is_err());
    }
}
