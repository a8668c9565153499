//! Secrecy metrics of the dual-hop link: average secrecy capacity with an
//! RF eavesdropper, lower-bound secrecy outage for the three eavesdropper
//! placements, their high-SNR forms, SPSC and effective secrecy throughput.
//!
//! Eavesdropper placements:
//! - `I`: a second RF receiver listens to the source (E).
//! - `II`: a second optical receiver listens behind the surface (Ẽ).
//! - `III`: both listen at once.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::accel::{sum_series, Acceleration};
use crate::error::{Error, Result};
use crate::quad::{integrate_positive_axis, Tolerance};
use crate::rf::{RfDerivedCoeffs, RfLinkParams, RfTerm, StatRoute};
use crate::specfun::bivariate::{bivariate_meijer_g, BivariateGSpec};
use crate::specfun::gamma::ln_gamma;
use crate::specfun::meijer::{leading_terms_large, meijer_g, EvalOptions, GValue, MeijerGSpec};
use crate::specfun::mellin::mellin_product;
use crate::uowc::{gamma_approx, RisCascadeStats, UowcLinkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scenario {
    #[default]
    I,
    II,
    III,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::I => "I",
            Scenario::II => "II",
            Scenario::III => "III",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Scenario::I),
            "II" | "2" => Ok(Scenario::II),
            "III" | "3" => Ok(Scenario::III),
            other => Err(Error::Config(format!("unknown scenario `{other}` (I, II or III)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Source to relay.
    pub rf_main: RfLinkParams,
    /// Source to RF eavesdropper.
    pub rf_eve: RfLinkParams,
    /// Relay to destination via the surface.
    pub uowc_main: UowcLinkParams,
    /// Relay to optical eavesdropper via the surface.
    pub uowc_eve: UowcLinkParams,
    /// Target secrecy rate, bits per channel use.
    pub rs: f64,
    pub scenario: Scenario,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            rf_main: RfLinkParams::default(),
            rf_eve: RfLinkParams { gbar: 100.0, ..RfLinkParams::default() },
            uowc_main: UowcLinkParams::default(),
            uowc_eve: UowcLinkParams { gbar: 10.0, ..UowcLinkParams::default() },
            rs: 0.01,
            scenario: Scenario::I,
        }
    }
}

impl ScenarioConfig {
    /// φ = 2^Rs.
    pub fn phi(&self) -> f64 {
        self.rs.exp2()
    }

    pub fn with_rs(&self, rs: f64) -> Self {
        ScenarioConfig { rs, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rs >= 0.0) || !self.rs.is_finite() {
            return Err(Error::Domain(format!("secrecy rate must be finite and >= 0, got {}", self.rs)));
        }
        self.rf_main.validate()?;
        self.rf_eve.validate()?;
        self.uowc_main.validate()?;
        self.uowc_eve.validate()
    }
}

/// How the outage integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SopMethod {
    /// Mellin-product G-functions term by term.
    #[default]
    Closed,
    /// Adaptive quadrature of the defining integrals.
    Quadrature,
}

/// Evaluation of the three-link cross term of the Scenario I outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CrossTerm {
    /// Quadrature below tolerance 1e-4, bivariate G otherwise.
    #[default]
    Auto,
    Bivariate,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    /// Terms kept in the alternating z-series of the capacity integrals.
    pub z_max: usize,
    pub accel: Acceleration,
    pub fallback_quadrature: bool,
    /// Relative target for G evaluations and quadrature.
    pub tol: f64,
    pub method: SopMethod,
    pub cross_term: CrossTerm,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl { z_max: 200, accel: Acceleration::Euler, fallback_quadrature: true, tol: 1e-7, method: SopMethod::Closed, cross_term: CrossTerm::Auto }
    }
}

impl SeriesControl {
    fn validate(&self) -> Result<()> {
        if self.z_max < 1 || !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Domain(format!("invalid series control: {self:?}")));
        }
        Ok(())
    }

    fn eval_options(&self) -> EvalOptions {
        EvalOptions::default().with_tol(self.tol.max(1e-13))
    }

    fn quad_tol(&self) -> Tolerance {
        Tolerance { abs: 1e-16, rel: self.tol }
    }

    fn cross_by_quadrature(&self) -> bool {
        match self.cross_term {
            CrossTerm::Auto => self.tol < 1e-4,
            CrossTerm::Bivariate => false,
            CrossTerm::Quadrature => true,
        }
    }
}

/// Which path produced a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Closed,
    Quadrature,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub route: Route,
    /// Set when a component missed its tolerance, a value was clamped, or a
    /// series was abandoned for quadrature.
    pub flagged: bool,
    pub note: Option<String>,
}

impl MetricValue {
    fn new(value: f64, route: Route, flagged: bool) -> Self {
        MetricValue { value, route, flagged, note: None }
    }

    /// Clamp to [0, 1], flagging any excursion beyond round-off.
    fn probability(mut self) -> Self {
        if !(0.0..=1.0).contains(&self.value) {
            if self.value < -1e-9 || self.value > 1.0 + 1e-9 {
                self.flagged = true;
            }
            self.value = self.value.clamp(0.0, 1.0);
        }
        self
    }
}

/// Derived constants of all four links.
#[derive(Debug, Clone)]
pub struct Secrecy {
    pub cfg: ScenarioConfig,
    pub rf_main: RfDerivedCoeffs,
    pub rf_eve: RfDerivedCoeffs,
    pub uowc_main: RisCascadeStats,
    pub uowc_eve: RisCascadeStats,
}

/// PDF kernel G^{1,1}_{1,2}[· | 1−Ψ; λ, −Ψ] of one RF term (density = Σ K1 G(K2 γ)/γ).
fn rf_pdf_kernel(t: &RfTerm) -> Result<MeijerGSpec> {
    MeijerGSpec::new(1, 1, vec![1.0 - t.psi], vec![t.lambda, -t.psi])
}

/// CDF kernel G^{1,2}_{2,3}[· | 1−Ψ, 1; λ, 0, −Ψ] of one RF term.
fn rf_cdf_kernel(t: &RfTerm) -> Result<MeijerGSpec> {
    MeijerGSpec::new(1, 2, vec![1.0 - t.psi, 1.0], vec![t.lambda, 0.0, -t.psi])
}

/// Upper bound on the contribution of one term to a probability.
fn term_mass(t: &RfTerm) -> f64 {
    t.k1.abs() * (ln_gamma(t.lambda).unwrap_or(f64::INFINITY)).exp() / t.psi
}

fn kept_terms(c: &RfDerivedCoeffs, tol: f64) -> Vec<RfTerm> {
    c.terms.iter().copied().filter(|t| term_mass(t) >= 1e-3 * tol).collect()
}

fn g_eval(spec: &MeijerGSpec, x: f64, opts: &EvalOptions, flagged: &mut bool) -> Result<f64> {
    let GValue { value, flagged: f, .. } = meijer_g(spec, x, opts)?;
    *flagged |= f;
    Ok(value)
}

impl Secrecy {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Secrecy {
            cfg: *cfg,
            rf_main: RfDerivedCoeffs::new(&cfg.rf_main)?,
            rf_eve: RfDerivedCoeffs::new(&cfg.rf_eve)?,
            uowc_main: gamma_approx(&cfg.uowc_main)?,
            uowc_eve: gamma_approx(&cfg.uowc_eve)?,
        })
    }

    fn phi(&self) -> f64 {
        self.cfg.phi()
    }

    // ---- shared pieces -------------------------------------------------

    /// Pr{γ_R ≤ φ γ_E} = Σ Σ K1_R K1_E G^{3,2}_{4,4}[K2_E/(φ K2_R)].
    fn rf_vs_rf_closed(&self, ctl: &SeriesControl, flagged: &mut bool) -> Result<f64> {
        let opts = ctl.eval_options();
        let (r, e) = (&self.rf_main, &self.rf_eve);
        let x = e.k2 / (self.phi() * r.k2);
        let mut acc = 0.0;
        for te in kept_terms(e, ctl.tol) {
            let ge = rf_pdf_kernel(&te)?;
            for tr in kept_terms(r, ctl.tol) {
                let z1 = mellin_product(&rf_cdf_kernel(&tr)?, &ge, 0.0)?;
                acc += te.k1 * tr.k1 * g_eval(&z1, x, &opts, flagged)?;
            }
        }
        Ok(acc)
    }

    /// Pr{γ_D ≤ φ γ_E} with the RF eavesdropper: Σ K1_E Υ3 φ^{ρ/r} σ^{−ρ/r} G[K2_E/σ], σ = Υ4 φ.
    fn uowc_vs_rf_closed(&self, ctl: &SeriesControl, flagged: &mut bool) -> Result<f64> {
        let opts = ctl.eval_options();
        let (d, e) = (&self.uowc_main, &self.rf_eve);
        let phi = self.phi();
        let alpha = d.rho / d.r as f64;
        let sigma = d.upsilon4 * phi;
        let fd = d.cdf_spec()?;
        let pre = d.upsilon3 * phi.powf(alpha) * sigma.powf(-alpha);
        let mut acc = 0.0;
        for te in kept_terms(e, ctl.tol) {
            let z2 = mellin_product(&fd, &rf_pdf_kernel(&te)?, alpha)?;
            acc += te.k1 * g_eval(&z2, e.k2 / sigma, &opts, flagged)?;
        }
        Ok(pre * acc)
    }

    /// Optical eavesdropper density as Ω G^{r,0}_{0,r}[θ γ | Δ(r,0)] γ^{ρ/r−1}: returns (Ω, θ, kernel).
    fn uowc_eve_pdf_kernel(&self) -> Result<(f64, f64, MeijerGSpec)> {
        let s = &self.uowc_eve;
        let rf = s.r as f64;
        let omega = s.upsilon1 * rf.sqrt() * (2.0 * PI).powf(0.5 * (1.0 - rf));
        let theta = s.upsilon2.powf(rf) * rf.powf(-rf);
        let b: Vec<f64> = (0..s.r).map(|j| j as f64 / rf).collect();
        Ok((omega, theta, MeijerGSpec::new(s.r as usize, 0, vec![], b)?))
    }

    /// Mellin-product representation of Pr{γ_D ≤ φ γ_Ẽ}: (prefactor, G spec, argument).
    fn uowc_vs_uowc_spec(&self) -> Result<(f64, MeijerGSpec, f64)> {
        let (d, phi) = (&self.uowc_main, self.phi());
        let ad = d.rho / d.r as f64;
        let zeta = ad + self.uowc_eve.rho / self.uowc_eve.r as f64;
        let (omega, theta, ge) = self.uowc_eve_pdf_kernel()?;
        let sigma = d.upsilon4 * phi;
        let spec = mellin_product(&d.cdf_spec()?, &ge, zeta)?;
        let pre = d.upsilon3 * phi.powf(ad) * omega * sigma.powf(-zeta);
        Ok((pre, spec, theta / sigma))
    }

    fn uowc_vs_uowc_closed(&self, ctl: &SeriesControl, flagged: &mut bool) -> Result<f64> {
        let (pre, spec, x) = self.uowc_vs_uowc_spec()?;
        Ok(pre * g_eval(&spec, x, &ctl.eval_options(), flagged)?)
    }

    /// ∫ F_main(φ γ) f_eve(γ) dγ by quadrature; `main` gives the CDF.
    fn outage_quadrature(&self, main: impl Fn(f64) -> Result<f64>, eve_pdf: impl Fn(f64) -> Result<f64>, center: f64, ctl: &SeriesControl) -> Result<f64> {
        let phi = self.phi();
        let mut err: Option<Error> = None;
        let r = integrate_positive_axis(
            |g| match (main(phi * g), eve_pdf(g)) {
                (Ok(f), Ok(p)) => f * p,
                (Err(e), _) | (_, Err(e)) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            center,
            ctl.quad_tol(),
            400_000,
        );
        if let Some(e) = err {
            return Err(e);
        }
        if !r.converged {
            return Err(Error::non_convergence("outage quadrature", r.value, r.abs_err));
        }
        Ok(r.value)
    }

    fn rf_eve_pdf(&self) -> impl Fn(f64) -> Result<f64> + '_ {
        let o = EvalOptions::default();
        move |g| self.rf_eve.pdf(g, StatRoute::Reduced, &o)
    }

    fn uowc_eve_pdf(&self) -> impl Fn(f64) -> Result<f64> + '_ {
        move |g| self.uowc_eve.pdf(g)
    }

    fn rf_main_cdf(&self) -> impl Fn(f64) -> Result<f64> + '_ {
        let o = EvalOptions::default();
        move |g| self.rf_main.cdf(g, StatRoute::Reduced, &o)
    }

    fn uowc_main_cdf(&self) -> impl Fn(f64) -> Result<f64> + '_ {
        let o = EvalOptions::default();
        move |g| self.uowc_main.cdf(g, StatRoute::Reduced, &o)
    }

    fn rf_eve_center(&self) -> f64 {
        1.0 / self.rf_eve.k2
    }

    fn uowc_eve_center(&self) -> f64 {
        self.uowc_eve.gbar
    }

    /// ∫ F_R(φγ) F_D(φγ) f_E(γ) dγ, the overlap of the two main-hop outage events.
    fn cross_term(&self, ctl: &SeriesControl, flagged: &mut bool) -> Result<f64> {
        if ctl.cross_by_quadrature() {
            let (fr, fd) = (self.rf_main_cdf(), self.uowc_main_cdf());
            return self.outage_quadrature(|g| Ok(fr(g)? * fd(g)?), self.rf_eve_pdf(), self.rf_eve_center(), ctl);
        }
        let opts = ctl.eval_options();
        let (r, d, e) = (&self.rf_main, &self.uowc_main, &self.rf_eve);
        let phi = self.phi();
        let alpha = d.rho / d.r as f64;
        let sigma = d.upsilon4 * phi;
        let fd = d.cdf_spec()?;
        let mut acc = 0.0;
        for te in kept_terms(e, ctl.tol) {
            let ge = rf_pdf_kernel(&te)?;
            for tr in kept_terms(r, ctl.tol) {
                let spec = BivariateGSpec::triple_product(&fd, &rf_cdf_kernel(&tr)?, &ge, alpha)?;
                let v = bivariate_meijer_g(&spec, r.k2 * phi / sigma, e.k2 / sigma, &opts)?;
                *flagged |= v.flagged;
                acc += te.k1 * tr.k1 * v.value;
            }
        }
        Ok(d.upsilon3 * phi.powf(alpha) * sigma.powf(-alpha) * acc)
    }

    // ---- outage --------------------------------------------------------

    /// Pr{min(γ_R, γ_D) ≤ φ γ_E}.
    pub fn sop1_lower(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        ctl.validate()?;
        let mut flagged = false;
        let (a, b, route) = match ctl.method {
            SopMethod::Closed => (self.rf_vs_rf_closed(ctl, &mut flagged)?, self.uowc_vs_rf_closed(ctl, &mut flagged)?, Route::Closed),
            SopMethod::Quadrature => {
                let c = self.rf_eve_center();
                (
                    self.outage_quadrature(self.rf_main_cdf(), self.rf_eve_pdf(), c, ctl)?,
                    self.outage_quadrature(self.uowc_main_cdf(), self.rf_eve_pdf(), c, ctl)?,
                    Route::Quadrature,
                )
            }
        };
        let c = self.cross_term(ctl, &mut flagged)?;
        Ok(MetricValue::new(a + b - c, route, flagged).probability())
    }

    fn uowc_eavesdropping(&self, ctl: &SeriesControl, flagged: &mut bool) -> Result<f64> {
        match ctl.method {
            SopMethod::Closed => self.uowc_vs_uowc_closed(ctl, flagged),
            SopMethod::Quadrature => self.outage_quadrature(self.uowc_main_cdf(), self.uowc_eve_pdf(), self.uowc_eve_center(), ctl),
        }
    }

    /// Pr{γ_R ≤ φ−1} + Pr{γ_R > φ−1} Pr{γ_D ≤ φ γ_Ẽ}.
    pub fn sop2_lower(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        ctl.validate()?;
        let mut flagged = false;
        let i = self.uowc_eavesdropping(ctl, &mut flagged)?;
        let fr = self.rf_main.cdf(self.phi() - 1.0, StatRoute::Reduced, &ctl.eval_options())?;
        let route = if ctl.method == SopMethod::Closed { Route::Closed } else { Route::Quadrature };
        Ok(MetricValue::new(i * (1.0 - fr) + fr, route, flagged).probability())
    }

    /// 1 − (1 − Pr{γ_R ≤ φγ_E})(1 − Pr{γ_D ≤ φγ_Ẽ}).
    pub fn sop3_lower(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        ctl.validate()?;
        let mut flagged = false;
        let p1 = match ctl.method {
            SopMethod::Closed => self.rf_vs_rf_closed(ctl, &mut flagged)?,
            SopMethod::Quadrature => self.outage_quadrature(self.rf_main_cdf(), self.rf_eve_pdf(), self.rf_eve_center(), ctl)?,
        };
        let p2 = self.uowc_eavesdropping(ctl, &mut flagged)?;
        let route = if ctl.method == SopMethod::Closed { Route::Closed } else { Route::Quadrature };
        let (s1, s2) = ((1.0 - p1).clamp(0.0, 1.0), (1.0 - p2).clamp(0.0, 1.0));
        Ok(MetricValue::new(1.0 - s1 * s2, route, flagged).probability())
    }

    pub fn sop_lower(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        match self.cfg.scenario {
            Scenario::I => self.sop1_lower(ctl),
            Scenario::II => self.sop2_lower(ctl),
            Scenario::III => self.sop3_lower(ctl),
        }
    }

    // ---- high-SNR forms ------------------------------------------------

    /// Leading large-argument residues of the RF-vs-RF term.
    fn rf_vs_rf_asymptotic(&self, opts: &EvalOptions) -> Result<f64> {
        let (r, e) = (&self.rf_main, &self.rf_eve);
        let x = e.k2 / (self.phi() * r.k2);
        let mut acc = 0.0;
        for te in kept_terms(e, opts.target_rel_tol) {
            let ge = rf_pdf_kernel(&te)?;
            for tr in kept_terms(r, opts.target_rel_tol) {
                let z1 = mellin_product(&rf_cdf_kernel(&tr)?, &ge, 0.0)?;
                acc += te.k1 * tr.k1 * leading_terms_large(&z1, x, opts)?;
            }
        }
        Ok(acc)
    }

    fn uowc_vs_rf_asymptotic(&self, opts: &EvalOptions) -> Result<f64> {
        let (d, e) = (&self.uowc_main, &self.rf_eve);
        let phi = self.phi();
        let alpha = d.rho / d.r as f64;
        let sigma = d.upsilon4 * phi;
        let fd = d.cdf_spec()?;
        let mut acc = 0.0;
        for te in kept_terms(e, opts.target_rel_tol) {
            let z2 = mellin_product(&fd, &rf_pdf_kernel(&te)?, alpha)?;
            acc += te.k1 * leading_terms_large(&z2, e.k2 / sigma, opts)?;
        }
        Ok(d.upsilon3 * phi.powf(alpha) * sigma.powf(-alpha) * acc)
    }

    fn uowc_vs_uowc_asymptotic(&self, opts: &EvalOptions) -> Result<f64> {
        let (pre, spec, x) = self.uowc_vs_uowc_spec()?;
        Ok(pre * leading_terms_large(&spec, x, opts)?)
    }

    /// High main-SNR form of [`Secrecy::sop1_lower`]: every leading residue of
    /// both outage terms, overlap dropped.
    pub fn sop1_asymptotic(&self) -> Result<MetricValue> {
        let o = EvalOptions::default();
        let v = self.rf_vs_rf_asymptotic(&o)? + self.uowc_vs_rf_asymptotic(&o)?;
        Ok(MetricValue::new(v, Route::Asymptotic, false))
    }

    pub fn sop2_asymptotic(&self) -> Result<MetricValue> {
        let o = EvalOptions::default();
        let v = self.uowc_vs_uowc_asymptotic(&o)? + self.rf_main.cdf_asymptotic(self.phi() - 1.0)?;
        Ok(MetricValue::new(v, Route::Asymptotic, false))
    }

    pub fn sop3_asymptotic(&self) -> Result<MetricValue> {
        let o = EvalOptions::default();
        let s1 = 1.0 - self.rf_vs_rf_asymptotic(&o)?;
        let s2 = 1.0 - self.uowc_vs_uowc_asymptotic(&o)?;
        Ok(MetricValue::new(1.0 - s1 * s2, Route::Asymptotic, false))
    }

    pub fn sop_asymptotic(&self) -> Result<MetricValue> {
        match self.cfg.scenario {
            Scenario::I => self.sop1_asymptotic(),
            Scenario::II => self.sop2_asymptotic(),
            Scenario::III => self.sop3_asymptotic(),
        }
    }

    /// Smallest exponent of the main-link average SNRs in the high-SNR outage.
    pub fn sop_diversity_order(&self) -> f64 {
        let rf = self.rf_main.diversity_order();
        let d = self.uowc_main.diversity_order();
        match self.cfg.scenario {
            Scenario::I => rf.min(d).min(self.rf_eve.tail_index()),
            Scenario::II => d,
            Scenario::III => rf.min(d).min(self.rf_eve.tail_index()),
        }
    }

    // ---- capacity ------------------------------------------------------

    /// Term-wise Mellin evaluation of the capacity integral; fails when a
    /// term integral has no convergence strip or the z-series does not settle.
    pub fn asc_series(&self, ctl: &SeriesControl) -> Result<f64> {
        let opts = ctl.eval_options();
        let (r, d, e) = (&self.rf_main, &self.uowc_main, &self.rf_eve);
        let one_over_one_plus = MeijerGSpec::new(1, 1, vec![0.0], vec![0.0])?;
        let ad = d.rho / d.r as f64;
        let fd = d.cdf_spec()?;
        let mut total = 0.0;
        let mut flagged = false;
        for te in kept_terms(e, ctl.tol) {
            let fe = rf_cdf_kernel(&te)?;
            // ∫ F_E(γ)/(1+γ) dγ
            let r1 = mellin_product(&one_over_one_plus, &fe, 1.0)?;
            let mut acc = g_eval(&r1, e.k2, &opts, &mut flagged)?;
            // F_E F_R, F_E F_D and F_E F_R F_D terms, 1/(1+γ) expanded in powers of γ
            let mut z_terms = Vec::with_capacity(ctl.z_max);
            for z in 1..=ctl.z_max {
                let sign = if z % 2 == 1 { 1.0 } else { -1.0 };
                let mut t = 0.0;
                for tr in kept_terms(r, ctl.tol) {
                    let spec = mellin_product(&rf_cdf_kernel(&tr)?, &fe, z as f64)?;
                    t -= tr.k1 * r.k2.powf(-(z as f64)) * g_eval(&spec, e.k2 / r.k2, &opts, &mut flagged)?;
                }
                let w = ad + z as f64;
                let spec = mellin_product(&fd, &fe, w)?;
                t -= d.upsilon3 * d.upsilon4.powf(-w) * g_eval(&spec, e.k2 / d.upsilon4, &opts, &mut flagged)?;
                for tr in kept_terms(r, ctl.tol) {
                    let spec = BivariateGSpec::triple_product(&fd, &rf_cdf_kernel(&tr)?, &fe, w)?;
                    let v = bivariate_meijer_g(&spec, r.k2 / d.upsilon4, e.k2 / d.upsilon4, &opts)?;
                    flagged |= v.flagged;
                    t += tr.k1 * d.upsilon3 * d.upsilon4.powf(-w) * v.value;
                }
                z_terms.push(sign * t);
            }
            let s = sum_series(&z_terms, ctl.accel);
            if !s.converged(ctl.tol) {
                return Err(Error::non_convergence("capacity z-series", s.value, s.tail));
            }
            acc += s.value;
            total += te.k1 * acc;
        }
        if flagged {
            return Err(Error::non_convergence("capacity series: G tolerance missed", total, f64::NAN));
        }
        Ok(total)
    }

    /// ∫ F_E(γ)(1 − F_eq(γ))/(1+γ) dγ by quadrature, in nats.
    pub fn asc_quadrature(&self, ctl: &SeriesControl) -> Result<f64> {
        let o = EvalOptions::default();
        let mut err: Option<Error> = None;
        let f = |g: f64| -> Result<f64> {
            let fe = self.rf_eve.cdf(g, StatRoute::Reduced, &o)?;
            let sr = 1.0 - self.rf_main.cdf(g, StatRoute::Reduced, &o)?;
            let sd = 1.0 - self.uowc_main.cdf(g, StatRoute::Reduced, &o)?;
            Ok(fe * sr * sd / (1.0 + g))
        };
        let r = integrate_positive_axis(
            |g| {
                f(g).unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    0.0
                })
            },
            self.rf_eve_center(),
            ctl.quad_tol(),
            400_000,
        );
        if let Some(e) = err {
            return Err(e);
        }
        if !r.converged {
            return Err(Error::non_convergence("capacity quadrature", r.value, r.abs_err));
        }
        Ok(r.value)
    }

    /// Average secrecy capacity with the RF eavesdropper, nats per channel use.
    pub fn asc_scenario1(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        ctl.validate()?;
        let mut out = match self.asc_series(ctl) {
            Ok(v) => MetricValue::new(v, Route::Closed, false),
            Err(series_err) => {
                if !ctl.fallback_quadrature {
                    return Err(series_err);
                }
                let v = self.asc_quadrature(ctl).map_err(|q| Error::non_convergence(format!("series: {series_err}; quadrature: {q}"), f64::NAN, f64::INFINITY))?;
                let mut m = MetricValue::new(v, Route::Quadrature, true);
                m.note = Some(format!("series abandoned: {series_err}"));
                m
            }
        };
        if out.value < 0.0 {
            out.flagged = true;
            out.value = 0.0;
        }
        Ok(out)
    }

    // ---- derived metrics -------------------------------------------------

    /// 1 − SOP at Rs = 0.
    pub fn spsc(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        let s = if self.cfg.rs == 0.0 { self.clone() } else { Secrecy { cfg: self.cfg.with_rs(0.0), ..self.clone() } };
        let mut m = s.sop_lower(ctl)?;
        m.value = 1.0 - m.value;
        Ok(m)
    }

    /// Rs (1 − SOP), an upper bound since the outage is a lower bound.
    pub fn est(&self, ctl: &SeriesControl) -> Result<MetricValue> {
        let mut m = self.sop_lower(ctl)?;
        m.value = self.cfg.rs * (1.0 - m.value);
        Ok(m)
    }
}

pub fn asc_scenario1(cfg: &ScenarioConfig, ctl: &SeriesControl) -> Result<MetricValue> {
    Secrecy::new(cfg)?.asc_scenario1(ctl)
}

pub fn sop_lower(cfg: &ScenarioConfig, ctl: &SeriesControl) -> Result<MetricValue> {
    Secrecy::new(cfg)?.sop_lower(ctl)
}

pub fn sop_asymptotic(cfg: &ScenarioConfig) -> Result<MetricValue> {
    Secrecy::new(cfg)?.sop_asymptotic()
}

pub fn spsc(cfg: &ScenarioConfig, ctl: &SeriesControl) -> Result<MetricValue> {
    Secrecy::new(&cfg.with_rs(0.0))?.spsc(ctl)
}

pub fn est(cfg: &ScenarioConfig, ctl: &SeriesControl) -> Result<MetricValue> {
    Secrecy::new(cfg)?.est(ctl)
}

/// EST-maximizing rate: grid scan, then golden-section refinement between the
/// neighbours of the best grid point. Returns (Rs*, EST(Rs*)).
pub fn est_optimal_rs(cfg: &ScenarioConfig, rs_grid: &[f64], ctl: &SeriesControl) -> Result<(f64, f64)> {
    if rs_grid.is_empty() || rs_grid.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Domain("rate grid must be nonempty and positive".into()));
    }
    let mut grid = rs_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let eval = |rs: f64| -> Result<f64> { Ok(est(&cfg.with_rs(rs), ctl)?.value) };
    let vals = grid.iter().map(|&r| eval(r)).collect::<Result<Vec<_>>>()?;
    let best = (0..vals.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let (mut x_best, mut f_best) = (grid[best], vals[best]);
    if hi > lo {
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
        while hi - lo > 1e-6 * hi.max(1e-12) {
            if f1 >= f2 {
                hi = x2;
                (x2, f2) = (x1, f1);
                x1 = hi - inv_phi * (hi - lo);
                f1 = eval(x1)?;
            } else {
                lo = x1;
                (x1, f1) = (x2, f2);
                x2 = lo + inv_phi * (hi - lo);
                f2 = eval(x2)?;
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > f_best {
                (x_best, f_best) = (x, f);
            }
        }
    }
    Ok((x_best, f_best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uowc::Detection;

    fn quad() -> SeriesControl {
        SeriesControl { method: SopMethod::Quadrature, ..SeriesControl::default() }
    }

    fn cfg(scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig { scenario, ..ScenarioConfig::default() }
    }

    #[test]
    fn closed_matches_quadrature() {
        for sc in [Scenario::I, Scenario::II, Scenario::III] {
            for det in [Detection::Hd, Detection::Imdd] {
                let mut c = cfg(sc);
                c.uowc_main.detection = det;
                c.uowc_eve.detection = det;
                let s = Secrecy::new(&c).unwrap();
                let a = s.sop_lower(&SeriesControl::default()).unwrap();
                let b = s.sop_lower(&quad()).unwrap();
                assert!(((a.value - b.value) / b.value).abs() < 1e-5, "{sc} {det}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn identities_and_monotonicity() {
        let ctl = SeriesControl::default();
        for sc in [Scenario::I, Scenario::II, Scenario::III] {
            let c = cfg(sc);
            let s = Secrecy::new(&c).unwrap();
            let sop0 = Secrecy::new(&c.with_rs(0.0)).unwrap().sop_lower(&ctl).unwrap().value;
            assert_eq!(s.spsc(&ctl).unwrap().value, 1.0 - sop0);
            let sop = s.sop_lower(&ctl).unwrap().value;
            assert_eq!(s.est(&ctl).unwrap().value, c.rs * (1.0 - sop));
            let mut prev = 0.0;
            for rs in [0.0, 0.1, 0.5, 1.0, 2.0, 4.0] {
                let v = Secrecy::new(&c.with_rs(rs)).unwrap().sop_lower(&ctl).unwrap().value;
                assert!(v >= prev - 1e-12 && v <= 1.0, "{sc} rs={rs}: {v} < {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn cross_term_routes_agree() {
        // κ = 0 keeps one Poisson term per link, so the bivariate sum stays small
        let mut c = cfg(Scenario::I);
        c.rf_main.kappa = 0.0;
        c.rf_eve.kappa = 0.0;
        let s = Secrecy::new(&c).unwrap();
        let mut f = false;
        let biv = s.cross_term(&SeriesControl { tol: 1e-4, cross_term: CrossTerm::Bivariate, ..SeriesControl::default() }, &mut f).unwrap();
        let q = s.cross_term(&SeriesControl { cross_term: CrossTerm::Quadrature, ..SeriesControl::default() }, &mut f).unwrap();
        assert!(((biv - q) / q).abs() < 1e-3, "{biv} vs {q}");
    }

    #[test]
    fn capacity_series_diverges_and_falls_back() {
        let s = Secrecy::new(&cfg(Scenario::I)).unwrap();
        let ctl = SeriesControl::default();
        assert!(matches!(s.asc_series(&ctl), Err(Error::NonConvergence { .. })));
        let v = s.asc_scenario1(&ctl).unwrap();
        assert_eq!(v.route, Route::Quadrature);
        assert!(v.value > 0.0);
        let strict = SeriesControl { fallback_quadrature: false, ..ctl };
        assert!(s.asc_scenario1(&strict).is_err());
    }

    #[test]
    fn capacity_vanishes_for_strong_eavesdropper() {
        let mut c = cfg(Scenario::I);
        c.rf_eve.gbar = 1e12;
        let v = asc_scenario1(&c, &SeriesControl::default()).unwrap();
        assert!(v.value < 1e-3, "{v:?}");
    }

    #[test]
    fn optimal_rate_interior() {
        let c = cfg(Scenario::I);
        let grid: Vec<f64> = (1..=12).map(|i| 0.5 * i as f64).collect();
        let (rs, v) = est_optimal_rs(&c, &grid, &SeriesControl::default()).unwrap();
        assert!(rs > grid[0] && rs < grid[grid.len() - 1], "{rs}");
        for &g in &grid {
            assert!(est(&c.with_rs(g), &SeriesControl::default()).unwrap().value <= v + 1e-12);
        }
    }

    #[test]
    fn scenario_parsing() {
        assert_eq!("ii".parse::<Scenario>().unwrap(), Scenario::II);
        assert_eq!("3".parse::<Scenario>().unwrap(), Scenario::III);
        assert!("IV".parse::<Scenario>().is_err());
    }
}
