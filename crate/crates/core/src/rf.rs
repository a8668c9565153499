//! UAV RF links: 3D random-waypoint distance, κ-μ fading, MRC combining and
//! the resulting SNR distribution.
//!
//! Instantaneous SNR: γ = ϱ q^{−α} γ̄ Σ_l |h_l|², with E|h_l|² = 1 and q the
//! RWP distance on [0, D].

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::bessel::{ln_bessel_i, ln_truncation_coefficient};
use crate::specfun::gamma::{gamma_p, ln_gamma, lower_incomplete_gamma};
use crate::specfun::meijer::{meijer_g, EvalOptions, MeijerGSpec};

/// Polynomial RWP distance density f(q) = Σ C_i q^{β_i} / D^{β_i+1}.
pub const RWP_NUMERATORS: [i64; 3] = [735, -1190, 455];
pub const RWP_DENOMINATOR: i64 = 72;
pub const RWP_BETA: [i32; 3] = [2, 4, 6];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwpCoefficients {
    pub c: [f64; 3],
    pub beta: [i32; 3],
}

impl Default for RwpCoefficients {
    fn default() -> Self {
        RwpCoefficients {
            c: RWP_NUMERATORS.map(|n| n as f64 / RWP_DENOMINATOR as f64),
            beta: RWP_BETA,
        }
    }
}

/// Σ C_i/(β_i+1) in exact rational arithmetic.
pub fn rwp_normalization_exact() -> Ratio<i64> {
    RWP_NUMERATORS
        .iter()
        .zip(RWP_BETA)
        .map(|(&c, b)| Ratio::new(c, RWP_DENOMINATOR * (b as i64 + 1)))
        .sum()
}

/// f(D) · D = Σ C_i, exactly.
pub fn rwp_boundary_exact() -> Ratio<i64> {
    RWP_NUMERATORS.iter().map(|&c| Ratio::new(c, RWP_DENOMINATOR)).sum()
}

/// How the Bessel series coefficient of the SNR density is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BesselCoefficients {
    /// 1/(k! Γ(Lμ+k)), the exact Poisson-mixture weight.
    #[default]
    Exact,
    /// The finite-p approximation V(k, p, Lμ−1).
    Truncated,
}

/// Which representation evaluates the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StatRoute {
    /// Meijer G forms through the general evaluator.
    #[default]
    MeijerG,
    /// The equivalent incomplete-gamma forms.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfLinkParams {
    pub kappa: f64,
    pub mu: f64,
    pub alpha: f64,
    /// RWP sphere radius in meters.
    pub d: f64,
    pub l: u32,
    pub varrho: f64,
    /// Average SNR, linear.
    pub gbar: f64,
    pub bessel_p: u32,
    #[serde(default)]
    pub coefficients: BesselCoefficients,
}

impl Default for RfLinkParams {
    fn default() -> Self {
        RfLinkParams {
            kappa: 1.0,
            mu: 2.0,
            alpha: 2.0,
            d: 50.0,
            l: 1,
            varrho: 1.0,
            gbar: 1000.0,
            bessel_p: 20,
            coefficients: BesselCoefficients::Exact,
        }
    }
}

impl RfLinkParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa >= 0.0
            && self.mu > 0.0
            && self.alpha > 0.0
            && self.d > 0.0
            && self.l >= 1
            && self.varrho > 0.0
            && self.gbar > 0.0
            && self.bessel_p >= 1
            && [self.kappa, self.mu, self.alpha, self.d, self.varrho, self.gbar].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid RF link parameters: {self:?}")))
        }
    }
}

/// MRC absorbed into the fading parameters: μ ← Lμ, γ̄ ← Lγ̄, L ← 1.
pub fn mrc_map(params: &RfLinkParams) -> RfLinkParams {
    let l = params.l as f64;
    RfLinkParams {
        mu: params.mu * l,
        gbar: params.gbar * l,
        l: 1,
        ..*params
    }
}

/// Distance density of the 3D random-waypoint model.
pub fn rwp_distance_pdf(q: f64, d: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::Domain(format!("distance must be >= 0, got {q}")));
    }
    if q > d {
        return Ok(0.0);
    }
    let c = RwpCoefficients::default();
    let u = q / d;
    Ok(c.c.iter().zip(c.beta).map(|(ci, b)| ci * u.powi(b)).sum::<f64>() / d)
}

/// Distance CDF (245u³ − 238u⁵ + 65u⁷)/72 with u = q/D.
pub fn rwp_distance_cdf(q: f64, d: f64) -> f64 {
    let u = (q / d).clamp(0.0, 1.0);
    let c = RwpCoefficients::default();
    c.c.iter().zip(c.beta).map(|(ci, b)| ci / (b as f64 + 1.0) * u.powi(b + 1)).sum()
}

/// E[q^{−α}] under the RWP density (finite for α < 3).
pub fn rwp_inverse_moment(alpha: f64, d: f64) -> f64 {
    let c = RwpCoefficients::default();
    if alpha >= 3.0 {
        return f64::INFINITY;
    }
    c.c.iter().zip(c.beta).map(|(ci, b)| ci / (b as f64 + 1.0 - alpha)).sum::<f64>() * d.powf(-alpha)
}

/// κ-μ envelope density A x^μ e^{−Bx²} I_{μ−1}(Mx), normalized to E[x²] = 1.
pub fn kappa_mu_envelope_pdf(x: f64, kappa: f64, mu: f64) -> Result<f64> {
    if !(x >= 0.0) || !(kappa >= 0.0) || !(mu > 0.0) {
        return Err(Error::Domain(format!("kappa_mu_envelope_pdf(x={x}, kappa={kappa}, mu={mu})")));
    }
    if x == 0.0 {
        return Ok(if mu < 0.5 { f64::INFINITY } else if mu == 0.5 { kappa_mu_envelope_pdf(1e-300, kappa, mu)? } else { 0.0 });
    }
    let b = mu * (1.0 + kappa);
    if kappa == 0.0 {
        // Nakagami-m with m = μ
        let ln = std::f64::consts::LN_2 + mu * mu.ln() + (2.0 * mu - 1.0) * x.ln() - mu * x * x - ln_gamma(mu)?;
        return Ok(ln.exp());
    }
    let m = 2.0 * mu * (kappa * (1.0 + kappa)).sqrt();
    let ln_a = (2.0 * mu).ln() + 0.5 * (mu + 1.0) * (1.0 + kappa).ln() - 0.5 * (mu - 1.0) * kappa.ln() - mu * kappa;
    let ln = ln_a + mu * x.ln() - b * x * x + ln_bessel_i(mu - 1.0, m * x)?;
    Ok(ln.exp())
}

/// One (i, k) term of the Poisson–gamma representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfTerm {
    pub k1: f64,
    /// Gamma shape Lμ + k.
    pub lambda: f64,
    /// (β_i + 1)/α.
    pub psi: f64,
}

/// Constants of the closed-form SNR statistics after MRC mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RfDerivedCoeffs {
    pub mapped: RfLinkParams,
    /// Envelope constant A; NaN at κ = 0 where only the Nakagami limit exists.
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub k2: f64,
    pub psi: [f64; 3],
    pub terms: Vec<RfTerm>,
    /// Probability mass dropped by stopping the k-sum at p.
    pub truncation: f64,
}

impl RfDerivedCoeffs {
    pub fn new(params: &RfLinkParams) -> Result<Self> {
        params.validate()?;
        let mp = mrc_map(params);
        let (kappa, mu) = (mp.kappa, mp.mu);
        let rwp = RwpCoefficients::default();
        let b = mu * (1.0 + kappa);
        let m = 2.0 * mu * (kappa * (1.0 + kappa)).sqrt();
        let a = if kappa > 0.0 {
            (2.0 * mu).ln() + 0.5 * (mu + 1.0) * (1.0 + kappa).ln() - 0.5 * (mu - 1.0) * kappa.ln() - mu * kappa
        } else {
            f64::NAN
        }
        .exp();
        let k2 = b * mp.d.powf(mp.alpha) / (mp.varrho * mp.gbar);
        let psi = rwp.beta.map(|bi| (bi as f64 + 1.0) / mp.alpha);
        let nu = mu * kappa;
        let p = params.bessel_p;
        let mut terms = Vec::new();
        let mut kept = 0.0;
        for k in 0..=p {
            let kf = k as f64;
            let lambda = mu + kf;
            // ln of the Poisson weight divided by Γ(λ)
            let ln_w = if nu > 0.0 {
                -nu + kf * nu.ln() - ln_gamma(kf + 1.0)?
            } else if k == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            };
            if ln_w < -700.0 {
                continue;
            }
            kept += ln_w.exp();
            let ln_coef = match params.coefficients {
                BesselCoefficients::Exact => ln_w - ln_gamma(lambda)?,
                BesselCoefficients::Truncated => -nu + kf * nu.max(f64::MIN_POSITIVE).ln() + ln_truncation_coefficient(k, p, mu - 1.0)?,
            };
            for (i, &ci) in rwp.c.iter().enumerate() {
                terms.push(RfTerm { k1: ci / mp.alpha * ln_coef.exp(), lambda, psi: psi[i] });
            }
        }
        Ok(RfDerivedCoeffs { mapped: mp, a, b, m, k2, psi, terms, truncation: (1.0 - kept).max(0.0) })
    }

    /// SNR density f_γ(g).
    pub fn pdf(&self, g: f64, route: StatRoute, opts: &EvalOptions) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("SNR must be >= 0, got {g}")));
        }
        if g == 0.0 {
            return Ok(0.0);
        }
        let x = self.k2 * g;
        let mut acc = 0.0;
        for t in &self.terms {
            let v = match route {
                StatRoute::Reduced => x.powf(-t.psi) * lower_incomplete_gamma(t.lambda + t.psi, x)?,
                StatRoute::MeijerG => {
                    let s = MeijerGSpec::new(1, 1, vec![1.0 - t.psi], vec![t.lambda, -t.psi])?;
                    meijer_g(&s, x, opts)?.value
                }
            };
            acc += t.k1 * v;
        }
        Ok(acc / g)
    }

    /// SNR CDF F_γ(g).
    pub fn cdf(&self, g: f64, route: StatRoute, opts: &EvalOptions) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("SNR must be >= 0, got {g}")));
        }
        if g == 0.0 {
            return Ok(0.0);
        }
        let x = self.k2 * g;
        let mut acc = 0.0;
        for t in &self.terms {
            let v = match route {
                StatRoute::Reduced => cdf_kernel_reduced(t.lambda, t.psi, x)?,
                StatRoute::MeijerG => {
                    let s = MeijerGSpec::new(1, 2, vec![1.0 - t.psi, 1.0], vec![t.lambda, 0.0, -t.psi])?;
                    meijer_g(&s, x, opts)?.value
                }
            };
            acc += t.k1 * v;
        }
        Ok(acc)
    }

    /// High-SNR CDF: the leading power (K2 γ)^{Lμ+k} of every term.
    pub fn cdf_asymptotic(&self, g: f64) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("SNR must be >= 0, got {g}")));
        }
        if g == 0.0 {
            return Ok(0.0);
        }
        let lx = (self.k2 * g).ln();
        let mut acc = 0.0;
        for t in &self.terms {
            // Γ(Ψ+λ)Γ(λ) / (Γ(1+λ)Γ(1+Ψ+λ)) = 1/(λ(Ψ+λ)) · Γ(λ)
            let ln = t.lambda * lx + ln_gamma(t.psi + t.lambda)? + ln_gamma(t.lambda)? - ln_gamma(1.0 + t.lambda)? - ln_gamma(1.0 + t.psi + t.lambda)?;
            acc += t.k1 * ln.exp();
        }
        Ok(acc)
    }

    /// Diversity order: the smallest power of γ̄^{-1} in the outage probability.
    pub fn diversity_order(&self) -> f64 {
        self.mapped.mu
    }

    /// Mellin-pole of the heavy upper tail: P(γ > g) ~ g^{−Ψ_1}.
    pub fn tail_index(&self) -> f64 {
        self.psi[0]
    }
}

/// (1/Ψ)[γ(λ, X) − X^{−Ψ} γ(λ+Ψ, X)], the CDF kernel G^{1,2}_{2,3}[X | 1−Ψ, 1; λ, 0, −Ψ].
pub fn cdf_kernel_reduced(lambda: f64, psi: f64, x: f64) -> Result<f64> {
    Ok((lower_incomplete_gamma(lambda, x)? - x.powf(-psi) * lower_incomplete_gamma(lambda + psi, x)?) / psi)
}

pub fn snr_pdf(g: f64, params: &RfLinkParams) -> Result<f64> {
    RfDerivedCoeffs::new(params)?.pdf(g, StatRoute::MeijerG, &EvalOptions::default())
}

pub fn snr_cdf(g: f64, params: &RfLinkParams) -> Result<f64> {
    RfDerivedCoeffs::new(params)?.cdf(g, StatRoute::MeijerG, &EvalOptions::default())
}

pub fn snr_cdf_asymptotic(g: f64, params: &RfLinkParams) -> Result<f64> {
    RfDerivedCoeffs::new(params)?.cdf_asymptotic(g)
}

/// Reference CDF by direct averaging of the gamma-mixture CDF over the
/// distance density; independent of the closed forms above.
pub fn snr_cdf_by_distance_quadrature(g: f64, params: &RfLinkParams) -> Result<f64> {
    use crate::quad::{integrate, Tolerance};
    let mp = mrc_map(params);
    let nu = mp.mu * mp.kappa;
    let b = mp.mu * (1.0 + mp.kappa);
    let mut err = None;
    let r = integrate(
        |q: f64| {
            let x = b * g * q.powf(mp.alpha) / (mp.varrho * mp.gbar);
            let mut s = 0.0;
            for k in 0..=200u32 {
                let kf = k as f64;
                let w = if nu > 0.0 { (-nu + kf * nu.ln() - ln_gamma(kf + 1.0).unwrap_or(0.0)).exp() } else if k == 0 { 1.0 } else { 0.0 };
                if w == 0.0 && kf > nu {
                    break;
                }
                match gamma_p(mp.mu + kf, x) {
                    Ok(v) => s += w * v,
                    Err(e) => err = Some(e),
                }
            }
            s * rwp_distance_pdf(q, mp.d).unwrap_or(0.0)
        },
        0.0,
        mp.d,
        Tolerance { abs: 1e-15, rel: 1e-12 },
        200_000,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}
