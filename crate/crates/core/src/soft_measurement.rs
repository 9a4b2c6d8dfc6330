//! Soft measurement models.
//!
//! Outcomes are in normalised signal units: an ideal outcome 0 integrates to
//! a mean of `+1` and an ideal outcome 1 to `-1`. A model maps the pair of
//! conditional densities `f0`, `f1` to hardened bits, likelihood ratios and
//! soft-flip probabilities.
//!
//! The amplitude-damping family models a qubit prepared in the excited state
//! that decays after an exponential time `K ~ Exp(tau_a)`. The noiseless
//! integrated signal is `1 - 2K/tau_m` for `K < tau_m` and `-1` otherwise;
//! white noise adds a Gaussian of variance `tau_f / tau_m`.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::numerics::{self, log_norm_diff, log_norm_sf, log_phi, logaddexp, norm_cdf, norm_sf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SoftFamily {
    Gaussian { sigma: f64 },
    AmplitudeDamping { tau_m: f64, tau_a: f64, tau_f: f64 },
}

/// A pair of outcome densities with a hardening rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftModel {
    family: SoftFamily,
    beta: Option<f64>,
    sigma: f64,
    // decay parameters in units of the measurement time: r = tau_m / tau_a,
    // lambda = r / 2
    r: f64,
    lambda: f64,
    ml_threshold: f64,
}

impl SoftModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(SoftModel { family: SoftFamily::Gaussian { sigma }, beta: None, sigma, r: 0.0, lambda: 0.0, ml_threshold: 0.0 })
    }

    /// Amplitude-damping model; `tau_a` may be infinite (no decay).
    pub fn amplitude_damping(tau_m: f64, tau_a: f64, tau_f: f64) -> Result<Self> {
        if !(tau_m > 0.0 && tau_m.is_finite() && tau_a > 0.0 && tau_f > 0.0 && tau_f.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "durations must be positive: tau_m={tau_m}, tau_a={tau_a}, tau_f={tau_f}"
            )));
        }
        let r = tau_m / tau_a;
        let mut m = SoftModel {
            family: SoftFamily::AmplitudeDamping { tau_m, tau_a, tau_f },
            beta: None,
            sigma: (tau_f / tau_m).sqrt(),
            r,
            lambda: 0.5 * r,
            ml_threshold: 0.0,
        };
        m.ml_threshold = m.find_ml_threshold();
        Ok(m)
    }

    pub fn from_family(family: SoftFamily) -> Result<Self> {
        match family {
            SoftFamily::Gaussian { sigma } => SoftModel::gaussian(sigma),
            SoftFamily::AmplitudeDamping { tau_m, tau_a, tau_f } => SoftModel::amplitude_damping(tau_m, tau_a, tau_f),
        }
    }

    /// Replaces the maximum-likelihood rule by the boundary `mu >= beta * sigma`.
    pub fn with_boundary(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn family(&self) -> SoftFamily {
        self.family
    }

    pub fn boundary(&self) -> Option<f64> {
        self.beta
    }

    /// Noise scale: standard deviation of each outcome distribution.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.family, SoftFamily::Gaussian { .. })
    }

    /// Outcome value at which the hard decision switches: hardened 0 iff
    /// `mu >= threshold`.
    pub fn threshold(&self) -> f64 {
        match self.beta {
            Some(b) => b * self.sigma,
            None => self.ml_threshold,
        }
    }

    pub fn log_pdf(&self, ideal: u8, mu: f64) -> f64 {
        let s = self.sigma;
        let ln_s = s.ln();
        match (self.family, ideal) {
            (_, 0) => log_phi((mu - 1.0) / s) - ln_s,
            (SoftFamily::Gaussian { .. }, _) => log_phi((mu + 1.0) / s) - ln_s,
            (SoftFamily::AmplitudeDamping { .. }, _) => {
                let (r, l) = (self.r, self.lambda);
                let point = -r + log_phi((mu + 1.0) / s) - ln_s;
                if l == 0.0 {
                    return point;
                }
                let c = mu + l * s * s;
                let cont = l.ln() + l * (mu - 1.0) + 0.5 * l * l * s * s + log_norm_diff((c - 1.0) / s, (c + 1.0) / s);
                logaddexp(point, cont)
            }
        }
    }

    pub fn pdf(&self, ideal: u8, mu: f64) -> f64 {
        self.log_pdf(ideal, mu).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, ideal: u8, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let mean = match (self.family, ideal) {
            (_, 0) => 1.0,
            (SoftFamily::Gaussian { .. }, _) => -1.0,
            (SoftFamily::AmplitudeDamping { tau_m, tau_a, .. }, _) => {
                if tau_a.is_infinite() {
                    -1.0
                } else {
                    let k: f64 = Exp::new(1.0 / tau_a).expect("positive rate").sample(rng);
                    if k >= tau_m { -1.0 } else { 1.0 - 2.0 * k / tau_m }
                }
            }
        };
        mean + self.sigma * z
    }

    /// `log f0(mu) - log f1(mu)`.
    pub fn log_ratio(&self, mu: f64) -> f64 {
        match self.family {
            SoftFamily::Gaussian { sigma } => 2.0 * mu / (sigma * sigma),
            SoftFamily::AmplitudeDamping { .. } => self.log_pdf(0, mu) - self.log_pdf(1, mu),
        }
    }

    pub fn harden(&self, mu: f64) -> u8 {
        match (self.beta, self.family) {
            (Some(_), _) | (None, SoftFamily::Gaussian { .. }) => (mu < self.threshold()) as u8,
            (None, SoftFamily::AmplitudeDamping { .. }) => {
                let g = self.log_ratio(mu);
                if g.is_nan() { (mu < self.ml_threshold) as u8 } else { (g < 0.0) as u8 }
            }
        }
    }

    /// Hardened bit and soft-edge weight `-log L` for one outcome. The weight
    /// is zero when the densities are equal or both vanish, and is clamped
    /// at zero when an explicit boundary makes the chosen bit less likely.
    pub fn harden_with_weight(&self, mu: f64) -> (u8, f64) {
        let g = self.log_ratio(mu);
        let hard = match (self.beta, self.family) {
            (None, SoftFamily::Gaussian { .. }) => (mu < 0.0) as u8,
            (None, _) if !g.is_nan() => (g < 0.0) as u8,
            _ => (mu < self.threshold()) as u8,
        };
        if g.is_nan() {
            return (hard, 0.0);
        }
        let w = if hard == 0 { g } else { -g };
        (hard, w.max(0.0))
    }

    /// `f^(other)(mu) / f^(hard)(mu)` with the hard bit from [`SoftModel::harden`].
    pub fn likelihood_ratio(&self, mu: f64) -> f64 {
        (-self.harden_with_weight(mu).1).exp()
    }

    /// Probability that the hardened outcome differs from `ideal`.
    pub fn soft_flip_prob(&self, ideal: u8) -> f64 {
        let th = self.threshold();
        let s = self.sigma;
        match (self.family, ideal) {
            (_, 0) => norm_cdf((th - 1.0) / s),
            (SoftFamily::Gaussian { .. }, _) => norm_sf((th + 1.0) / s),
            (SoftFamily::AmplitudeDamping { .. }, _) => ad_flip1(th, s, self.lambda),
        }
    }

    /// Mean of the two soft-flip probabilities.
    pub fn avg_flip_prob(&self) -> f64 {
        0.5 * (self.soft_flip_prob(0) + self.soft_flip_prob(1))
    }

    /// Soft-flip probability by direct numerical integration of the density
    /// over the region hardened to the other bit.
    pub fn soft_flip_prob_quadrature(&self, ideal: u8, tol: f64) -> Result<f64> {
        let th = self.threshold();
        let s = self.sigma;
        let f = |mu: f64| self.pdf(ideal, mu);
        let brk = [th - 8.0 * s, th - s, th + s, th + 8.0 * s, -1.0, 1.0];
        if ideal == 0 {
            numerics::integrate(f, f64::NEG_INFINITY, th, &brk, tol)
        } else {
            numerics::integrate(f, th, f64::INFINITY, &brk, tol)
        }
    }

    /// Total mass of one density by quadrature.
    pub fn normalization(&self, ideal: u8, tol: f64) -> Result<f64> {
        let s = self.sigma;
        let brk = [-1.0 - 8.0 * s, -1.0, 0.0, 1.0, 1.0 + 8.0 * s];
        numerics::integrate(|mu| self.pdf(ideal, mu), f64::NEG_INFINITY, f64::INFINITY, &brk, tol)
    }

    fn find_ml_threshold(&self) -> f64 {
        let g = |mu: f64| self.log_pdf(0, mu) - self.log_pdf(1, mu);
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut width = 1.0 + self.sigma;
        for _ in 0..80 {
            let (glo, ghi) = (g(lo), g(hi));
            if glo.is_finite() && ghi.is_finite() && glo < 0.0 && ghi >= 0.0 {
                return numerics::bisect(g, lo, hi, 1e-15).unwrap_or(0.0);
            }
            if !(glo < 0.0) {
                lo -= width;
            }
            if !(ghi >= 0.0) {
                hi += width;
            }
            width *= 2.0;
        }
        0.0
    }
}

/// `P(mu >= th | ideal 1)` for the amplitude-damping model in scaled units.
fn ad_flip1(th: f64, s: f64, l: f64) -> f64 {
    let q = norm_sf((th - 1.0) / s);
    if l == 0.0 {
        return norm_sf((th + 1.0) / s);
    }
    // Q((th-1)/s) minus the integral of exp(-l(1-u)) phi_s(th-u) over [-1, 1]
    let log_x = -l + l * th + 0.5 * l * l * s * s + log_norm_diff((th - 1.0) / s + l * s, (th + 1.0) / s + l * s);
    let v = q - log_x.exp();
    if v > 1e-3 {
        return v;
    }
    // Small results: sum the two positive pieces instead of subtracting.
    // Point mass at -1 plus the continuous part handled by quadrature.
    let point = (-2.0 * l + log_norm_sf((th + 1.0) / s)).exp();
    let cont = numerics::integrate(
        |u| l * (-l * (1.0 - u)).exp() * norm_sf((th - u) / s),
        -1.0,
        1.0,
        &[th.clamp(-1.0, 1.0)],
        1e-16,
    );
    match cont {
        Ok(c) => point + c,
        Err(_) => v.max(0.0),
    }
}

pub fn harden(m: &SoftModel, mu: f64) -> u8 {
    m.harden(mu)
}

pub fn likelihood_ratio(m: &SoftModel, mu: f64) -> f64 {
    m.likelihood_ratio(mu)
}

pub fn soft_flip_prob(m: &SoftModel, ideal: u8) -> f64 {
    m.soft_flip_prob(ideal)
}

/// Closed-form soft-flip probabilities of the amplitude-damping model with
/// boundary `beta`: `(P(flip | 0), P(flip | 1))`.
pub fn ad_soft_flip_probs(tau_m: f64, tau_a: f64, tau_f: f64, beta: f64) -> Result<(f64, f64)> {
    let m = SoftModel::amplitude_damping(tau_m, tau_a, tau_f)?.with_boundary(beta);
    Ok((m.soft_flip_prob(0), m.soft_flip_prob(1)))
}

/// Overall flip probability of a hardened outcome combining an ideal flip
/// and an independent soft flip.
pub fn hardened_flip_prob(p_m: f64, p_soft: f64) -> f64 {
    p_m + p_soft - p_m * p_soft
}

/// Gaussian width whose maximum-likelihood soft-flip probability is `p_target`.
pub fn sigma_for_hardened(p_target: f64) -> Result<f64> {
    if !(p_target > 0.0 && p_target < 0.5) {
        return Err(Error::InvalidParameter(format!("target flip probability must be in (0, 0.5), got {p_target}")));
    }
    let ln_sigma = numerics::bisect(|ls: f64| norm_cdf(-(-ls).exp()) - p_target, -20.0, 20.0, 1e-15)?;
    Ok(ln_sigma.exp())
}

/// Result of [`optimize_measurement`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOptimum {
    pub tau_m: f64,
    pub beta: f64,
    pub p_avg: f64,
}

/// Minimises the average soft-flip probability of the amplitude-damping
/// model over the measurement time in `[tau_m_lo, tau_m_hi]` and the
/// decision boundary, by nested golden-section searches.
pub fn optimize_measurement(tau_a: f64, tau_f: f64, tau_m_lo: f64, tau_m_hi: f64) -> Result<MeasurementOptimum> {
    if !(tau_m_lo > 0.0 && tau_m_hi > tau_m_lo) {
        return Err(Error::InvalidParameter("measurement time bounds must satisfy 0 < lo < hi".into()));
    }
    let inner = |tau_m: f64| -> (f64, f64) {
        let base = SoftModel::amplitude_damping(tau_m, tau_a, tau_f).expect("validated durations");
        let s = base.sigma();
        let b = 1.0 / s + 1.0;
        numerics::golden_section(|beta| base.clone().with_boundary(beta).avg_flip_prob(), -b, b, 1e-12)
    };
    SoftModel::amplitude_damping(tau_m_lo, tau_a, tau_f)?;
    let (ln_t, p) = numerics::golden_section(|lt| inner(lt.exp()).1, tau_m_lo.ln(), tau_m_hi.ln(), 1e-10);
    let tau_m = ln_t.exp();
    let (beta, p_avg) = inner(tau_m);
    debug_assert!((p_avg - p).abs() < 1e-9);
    Ok(MeasurementOptimum { tau_m, beta, p_avg })
}
