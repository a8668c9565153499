//! RIS-aided underwater optical links.
//!
//! Per element u the cascade gain is Y_u = α_u β_u, each factor an mEGG
//! irradiance (exponential / generalized-gamma mixture) times a pointing
//! loss J·U^{1/ξ²}. The N-element sum χ = Σ Y_u is approximated by a gamma
//! law with shape ρ and scale w, and the SNR is γ = τ (χ/E[Y])^r with τ the
//! electrical SNR and r the detection exponent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rf::StatRoute;
use crate::specfun::gamma::{gamma_p, ln_gamma, ln_gamma_sign};
use crate::specfun::meijer::{meijer_g, EvalOptions, MeijerGSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeggParams {
    /// Mixture weight of the exponential component.
    pub w: f64,
    /// Mean of the exponential component.
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Pointing-error severity.
    pub xi: f64,
    /// Pointing loss (maximal gain).
    pub j: f64,
}

impl Default for MeggParams {
    /// Fresh water, 2.4 L/min bubbles, uniform temperature (registry placeholder).
    fn default() -> Self {
        MeggParams { w: 0.2130, lambda: 0.3291, a: 1.4299, b: 1.1817, c: 17.1984, xi: 1.0, j: 1.0 }
    }
}

impl MeggParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.w > 0.0 && self.w < 1.0 && self.lambda > 0.0 && self.a > 0.0 && self.b > 0.0 && self.c > 0.0 && self.xi > 0.0 && self.j > 0.0;
        if ok && [self.lambda, self.a, self.b, self.c, self.xi, self.j].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid mEGG parameters: {self:?}")))
        }
    }

    pub fn with_pointing(self, xi: f64, j: f64) -> Self {
        MeggParams { xi, j, ..self }
    }
}

/// Optical detection: heterodyne (r = 1) or intensity modulation / direct detection (r = 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    #[default]
    Hd,
    Imdd,
}

impl Detection {
    pub fn r(self) -> u32 {
        match self {
            Detection::Hd => 1,
            Detection::Imdd => 2,
        }
    }
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detection::Hd => "hd",
            Detection::Imdd => "imdd",
        })
    }
}

impl FromStr for Detection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hd" | "1" => Ok(Detection::Hd),
            "imdd" | "im/dd" | "2" => Ok(Detection::Imdd),
            other => Err(Error::Config(format!("unknown detection mode `{other}` (hd or imdd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UowcLinkParams {
    /// Relay to surface.
    pub hop1: MeggParams,
    /// Surface to receiver.
    pub hop2: MeggParams,
    /// Number of reflecting elements.
    pub n: u32,
    pub detection: Detection,
    /// Electrical SNR τ, linear.
    pub gbar: f64,
}

impl Default for UowcLinkParams {
    fn default() -> Self {
        UowcLinkParams { hop1: MeggParams::default(), hop2: MeggParams::default(), n: 2, detection: Detection::Hd, gbar: 100.0 }
    }
}

impl UowcLinkParams {
    pub fn validate(&self) -> Result<()> {
        self.hop1.validate()?;
        self.hop2.validate()?;
        if self.n < 1 || !(self.gbar > 0.0) || !self.gbar.is_finite() {
            return Err(Error::Domain(format!("invalid UOWC link: N={}, gbar={}", self.n, self.gbar)));
        }
        Ok(())
    }
}

/// E[(I h_p)^p] for one mEGG hop with pointing loss.
pub fn megg_moment(p: f64, hop: &MeggParams) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("moment order must be >= 0, got {p}")));
    }
    let exp_part = hop.w * hop.lambda.powf(p) * ln_gamma(1.0 + p)?.exp();
    let gg_part = (1.0 - hop.w) * hop.b.powf(p) * (ln_gamma(hop.a + p / hop.c)? - ln_gamma(hop.a)?).exp();
    let pointing = hop.xi * hop.xi * hop.j.powf(p) / (hop.xi * hop.xi + p);
    Ok((exp_part + gg_part) * pointing)
}

/// The four mixture cross terms of E[Y^p]: (exp·exp, exp·GG, GG·exp, GG·GG).
pub fn aleph_terms(p: f64, hop1: &MeggParams, hop2: &MeggParams) -> Result<[f64; 4]> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("moment order must be >= 0, got {p}")));
    }
    let e = |h: &MeggParams| -> Result<f64> { Ok(h.w * h.lambda.powf(p) * ln_gamma(1.0 + p)?.exp()) };
    let g = |h: &MeggParams| -> Result<f64> { Ok((1.0 - h.w) * h.b.powf(p) * (ln_gamma(h.a + p / h.c)? - ln_gamma(h.a)?).exp()) };
    let pt = |h: &MeggParams| h.xi * h.xi * h.j.powf(p) / (h.xi * h.xi + p);
    let scale = pt(hop1) * pt(hop2);
    Ok([e(hop1)? * e(hop2)? * scale, e(hop1)? * g(hop2)? * scale, g(hop1)? * e(hop2)? * scale, g(hop1)? * g(hop2)? * scale])
}

/// E[Y^p] of the per-element cascade gain.
pub fn megg_product_moment(p: f64, hop1: &MeggParams, hop2: &MeggParams) -> Result<f64> {
    Ok(aleph_terms(p, hop1, hop2)?.iter().sum())
}

/// Gamma approximation of the cascade and the SNR-law constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RisCascadeStats {
    pub m1: f64,
    pub m2: f64,
    /// Shape ρ = N m1² / (m2 − m1²).
    pub rho: f64,
    /// Scale w = (m2 − m1²)/m1.
    pub w_scale: f64,
    pub r: u32,
    pub gbar: f64,
    pub upsilon1: f64,
    pub upsilon2: f64,
    pub upsilon3: f64,
    pub upsilon4: f64,
    pub upsilon5: f64,
    /// Pole offsets of the small-γ expansion: 1 − j/r (j < r), then 1 + ρ/r.
    pub t3: Vec<f64>,
}

pub fn gamma_approx(params: &UowcLinkParams) -> Result<RisCascadeStats> {
    params.validate()?;
    let m1 = megg_product_moment(1.0, &params.hop1, &params.hop2)?;
    let m2 = megg_product_moment(2.0, &params.hop1, &params.hop2)?;
    let var = m2 - m1 * m1;
    if !(var > 0.0) || !(m1 > 0.0) {
        return Err(Error::Degenerate(format!("E[Y] = {m1}, Var[Y] = {var}")));
    }
    let n = params.n as f64;
    let rho = n * m1 * m1 / var;
    let w = var / m1;
    let r = params.detection.r();
    let rf = r as f64;
    let tau = params.gbar;
    let lg_rho = ln_gamma(rho)?;
    let ln_mw = (m1 / w).ln();
    let upsilon1 = (rho * ln_mw - rf.ln() - lg_rho - rho / rf * tau.ln()).exp();
    let upsilon2 = m1 / (w * tau.powf(1.0 / rf));
    let upsilon3 = (rho * ln_mw - 0.5 * rf.ln() - lg_rho - rho / rf * tau.ln() - 0.5 * (rf - 1.0) * (2.0 * std::f64::consts::PI).ln()).exp();
    let upsilon4 = (rf * ln_mw - rf * rf.ln() - tau.ln()).exp();
    let upsilon5 = (rf - 1.0) / rf;
    let mut t3: Vec<f64> = (0..r).map(|j| 1.0 - j as f64 / rf).collect();
    t3.push(1.0 + rho / rf);
    Ok(RisCascadeStats { m1, m2, rho, w_scale: w, r, gbar: tau, upsilon1, upsilon2, upsilon3, upsilon4, upsilon5, t3 })
}

impl RisCascadeStats {
    /// Υ1 γ^{ρ/r−1} exp(−Υ2 γ^{1/r}).
    pub fn pdf(&self, g: f64) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("SNR must be >= 0, got {g}")));
        }
        if g == 0.0 {
            let e = self.rho / self.r as f64 - 1.0;
            return Ok(if e > 0.0 { 0.0 } else if e == 0.0 { self.upsilon1 } else { f64::INFINITY });
        }
        let rf = self.r as f64;
        Ok((self.upsilon1.ln() + (self.rho / rf - 1.0) * g.ln() - self.upsilon2 * g.powf(1.0 / rf)).exp())
    }

    /// The G^{r,1}_{1,r+1} kernel of the CDF.
    pub fn cdf_spec(&self) -> Result<MeijerGSpec> {
        let rf = self.r as f64;
        let mut b: Vec<f64> = (0..self.r).map(|j| j as f64 / rf).collect();
        b.push(-self.rho / rf);
        MeijerGSpec::new(self.r as usize, 1, vec![1.0 - self.rho / rf], b)
    }

    /// Υ3 γ^{ρ/r} G^{r,1}_{1,r+1}[Υ4 γ | 1−ρ/r; Δ(r,0), −ρ/r].
    pub fn cdf(&self, g: f64, route: StatRoute, opts: &EvalOptions) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("SNR must be >= 0, got {g}")));
        }
        if g == 0.0 {
            return Ok(0.0);
        }
        match route {
            StatRoute::Reduced => gamma_p(self.rho, self.upsilon2 * g.powf(1.0 / self.r as f64)),
            StatRoute::MeijerG => {
                let v = meijer_g(&self.cdf_spec()?, self.upsilon4 * g, opts)?.value;
                Ok(self.upsilon3 * g.powf(self.rho / self.r as f64) * v)
            }
        }
    }

    /// Small-γ expansion: one term per m-group pole family.
    pub fn cdf_asymptotic(&self, g: f64) -> Result<f64> {
        if !(g >= 0.0) {
            return Err(Error::Domain(format!("SNR must be >= 0, got {g}")));
        }
        if g == 0.0 {
            return Ok(0.0);
        }
        let r = self.r as usize;
        let rf = self.r as f64;
        let lx = (self.upsilon4 * g).ln();
        let mut acc = 0.0;
        for k in 0..r {
            let tk = self.t3[k];
            let mut ln = (1.0 - tk) * lx;
            let mut sign = 1.0;
            for l in (0..r).filter(|&l| l != k) {
                let (v, s) = ln_gamma_sign(tk - self.t3[l])?;
                ln += v;
                sign *= s;
            }
            let (v, s) = ln_gamma_sign(1.0 + self.rho / rf - tk)?;
            ln += v;
            sign *= s;
            let (v, s) = ln_gamma_sign(1.0 + self.t3[r] - tk)?;
            ln -= v;
            sign *= s;
            acc += sign * ln.exp();
        }
        Ok(self.upsilon3 * g.powf(self.rho / rf) * acc)
    }

    /// Exponent of γ̄ in the high-SNR outage probability.
    pub fn diversity_order(&self) -> f64 {
        self.rho / self.r as f64
    }
}

pub fn ris_snr_pdf(g: f64, params: &UowcLinkParams) -> Result<f64> {
    gamma_approx(params)?.pdf(g)
}

pub fn ris_snr_cdf(g: f64, params: &UowcLinkParams) -> Result<f64> {
    gamma_approx(params)?.cdf(g, StatRoute::MeijerG, &EvalOptions::default())
}

pub fn ris_snr_cdf_asymptotic(g: f64, params: &UowcLinkParams) -> Result<f64> {
    gamma_approx(params)?.cdf_asymptotic(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_positive_axis, Tolerance};

    fn link(n: u32, detection: Detection) -> UowcLinkParams {
        UowcLinkParams { n, detection, ..Default::default() }
    }

    #[test]
    fn zeroth_moment_is_one() {
        let h = MeggParams::default();
        assert!((megg_product_moment(0.0, &h, &h).unwrap() - 1.0).abs() < 1e-15);
        let h2 = MeggParams { w: 0.4589, lambda: 0.3449, a: 1.0421, b: 1.5768, c: 35.9424, xi: 2.0, j: 0.8 };
        assert!((megg_product_moment(0.0, &h, &h2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn printed_fourth_cross_term_at_zero_order() {
        // the typeset GG·GG term carries Γ-ratios in p·c and the pointing
        // factor ξ²/c; at p = 0 it evaluates to (1−w_I)(1−w_n) c_I c_n
        let (h1, h2) = (MeggParams::default(), MeggParams { c: 4.0, ..MeggParams::default() });
        let printed = |p: f64| {
            (1.0 - h1.w) * (1.0 - h2.w) * h1.xi.powi(2) * h2.xi.powi(2) * (h1.b * h1.j).powf(h1.c * p) * (h2.b * h2.j).powf(h2.c * p)
                * (ln_gamma(h2.a + p).unwrap() + ln_gamma(h1.a + p).unwrap() - ln_gamma(h1.a).unwrap() - ln_gamma(h2.a).unwrap()).exp()
                / ((h2.xi.powi(2) / h2.c + p) * (h1.xi.powi(2) / h1.c + p))
        };
        let corrected = aleph_terms(0.0, &h1, &h2).unwrap()[3];
        assert!((printed(0.0) / corrected - h1.c * h2.c).abs() < 1e-9);
    }

    #[test]
    fn first_moment_factorizes() {
        let h = MeggParams::default();
        let m = megg_product_moment(1.0, &h, &h).unwrap();
        let e = megg_moment(1.0, &h).unwrap();
        assert!((m - e * e).abs() < 1e-15);
        // large ξ removes the pointing loss; this entry has unit mean irradiance
        assert!((megg_moment(1.0, &MeggParams { xi: 1e8, ..h }).unwrap() - 1.0).abs() < 2e-3);
    }

    #[test]
    fn moments_are_log_convex() {
        let h = MeggParams::default();
        let lm: Vec<f64> = (0..=40).map(|i| megg_product_moment(0.1 * i as f64, &h, &h).unwrap().ln()).collect();
        for w in lm.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
    }

    #[test]
    fn gamma_approx_scaling_in_n() {
        let s1 = gamma_approx(&link(1, Detection::Hd)).unwrap();
        let s2 = gamma_approx(&link(2, Detection::Hd)).unwrap();
        assert!((s2.rho - 2.0 * s1.rho).abs() < 1e-12 * s1.rho);
        assert_eq!(s1.w_scale, s2.w_scale);
    }

    #[test]
    fn pdf_normalizes() {
        for d in [Detection::Hd, Detection::Imdd] {
            for n in [1, 2, 4] {
                let s = gamma_approx(&link(n, d)).unwrap();
                let r = integrate_positive_axis(|g| s.pdf(g).unwrap(), s.gbar, Tolerance::rel(1e-12), 100_000);
                assert!((r.value - 1.0).abs() < 1e-8, "{d} N={n}: {}", r.value);
            }
        }
    }

    #[test]
    fn hd_cdf_is_regularized_gamma() {
        let s = gamma_approx(&link(2, Detection::Hd)).unwrap();
        let o = EvalOptions::default();
        for g in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let a = s.cdf(g, StatRoute::MeijerG, &o).unwrap();
            let b = gamma_p(s.rho, s.upsilon2 * g).unwrap();
            assert!((a - b).abs() < 1e-8, "g={g}: {a} vs {b}");
        }
    }

    #[test]
    fn imdd_routes_agree_and_saturate() {
        let s = gamma_approx(&link(2, Detection::Imdd)).unwrap();
        let o = EvalOptions::default();
        for g in [0.1, 1.0, 10.0, 100.0, 1e3, 1e4] {
            let a = s.cdf(g, StatRoute::MeijerG, &o).unwrap();
            let b = s.cdf(g, StatRoute::Reduced, &o).unwrap();
            assert!((a - b).abs() < 1e-8, "g={g}: {a} vs {b}");
        }
        assert!(s.cdf(1e6, StatRoute::MeijerG, &o).unwrap() > 1.0 - 1e-3);
        assert_eq!(s.cdf(0.0, StatRoute::MeijerG, &o).unwrap(), 0.0);
    }

    #[test]
    fn asymptotic_ratio_in_tail() {
        let o = EvalOptions::default();
        for d in [Detection::Hd, Detection::Imdd] {
            for gbar_db in [30.0, 40.0, 50.0] {
                let s = gamma_approx(&UowcLinkParams { gbar: 10f64.powf(gbar_db / 10.0), ..link(2, d) }).unwrap();
                let exact = s.cdf(1.0, StatRoute::MeijerG, &o).unwrap();
                if exact <= 1e-3 {
                    let asym = s.cdf_asymptotic(1.0).unwrap();
                    assert!((asym / exact - 1.0).abs() < 0.1, "{d} {gbar_db} dB: {asym} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn hd_below_imdd_up_to_average_snr() {
        let o = EvalOptions::default();
        for n in [1, 2, 4] {
            let hd = gamma_approx(&link(n, Detection::Hd)).unwrap();
            let im = gamma_approx(&link(n, Detection::Imdd)).unwrap();
            for i in 1..=50 {
                let g = hd.gbar * i as f64 / 50.0;
                assert!(hd.cdf(g, StatRoute::Reduced, &o).unwrap() <= im.cdf(g, StatRoute::Reduced, &o).unwrap() + 1e-15);
            }
        }
    }
}
