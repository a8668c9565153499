//! Monte Carlo oracle: samplers for every random quantity and empirical
//! estimates of the secrecy metrics.
//!
//! Samples are produced in chunks of [`CHUNK`] draws. Chunk `k` of link `l`
//! owns the ChaCha8 stream derived from (stream id, k, l), so a fill is the
//! same whether chunks run in parallel or in sequence, and chunk results are
//! reduced in chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_items, Execution};
use crate::rf::{rwp_distance_cdf, RfLinkParams};
use crate::secrecy::{Scenario, ScenarioConfig};
use crate::uowc::{gamma_approx, MeggParams, UowcLinkParams};

pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u16,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream_id: 0 }
    }

    /// Generator for one chunk of one link.
    pub fn rng(&self, chunk: u64, link: Link) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream((chunk << 24) | ((self.stream_id as u64) << 8) | link as u64);
        r
    }
}

/// Independent substreams, one per physical link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Link {
    RfMain = 0,
    RfEve = 1,
    UowcMain = 2,
    UowcEve = 3,
    Distance = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub half_width_3sigma: f64,
    pub n_samples: u64,
}

/// Running mean and second central moment, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64,
        }
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        McEstimate { value: self.mean, half_width_3sigma: 3.0 * (var / self.n as f64).sqrt(), n_samples: self.n }
    }
}

fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    // (0, 1]
    1.0 - rng.random::<f64>()
}

/// Inverse-CDF draw of the random-waypoint distance, bisection to 1e-12 D.
pub fn sample_rwp_distance(d: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    let (mut lo, mut hi) = (0.0, d);
    while hi - lo > 1e-12 * d {
        let mid = 0.5 * (lo + hi);
        if rwp_distance_cdf(mid, d) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Normalized κ-μ branch power (unit mean): Poisson mixture of gammas.
fn kappa_mu_power(kappa: f64, mu: f64, rng: &mut ChaCha8Rng) -> f64 {
    let k = if kappa > 0.0 { Poisson::new(mu * kappa).expect("positive Poisson mean").sample(rng) } else { 0.0 };
    let g = Gamma::new(mu + k, 1.0).expect("positive gamma shape").sample(rng);
    g / (mu * (1.0 + kappa))
}

/// Instantaneous MRC SNR ϱ γ̄ q^{−α} Σ_l P_l, all L branches sharing one distance.
pub fn sample_kappa_mu_snr(p: &RfLinkParams, rng: &mut ChaCha8Rng) -> f64 {
    let q = sample_rwp_distance(p.d, rng);
    let sum: f64 = (0..p.l).map(|_| kappa_mu_power(p.kappa, p.mu, rng)).sum();
    p.varrho * p.gbar * q.powf(-p.alpha) * sum
}

/// One mEGG irradiance times its pointing loss J U^{1/ξ²}.
pub fn sample_megg(h: &MeggParams, rng: &mut ChaCha8Rng) -> f64 {
    let i = if rng.random::<f64>() < h.w {
        Exp::new(1.0 / h.lambda).expect("positive rate").sample(rng)
    } else {
        h.b * Gamma::new(h.a, 1.0).expect("positive shape").sample(rng).powf(1.0 / h.c)
    };
    i * h.j * uniform_open(rng).powf(1.0 / (h.xi * h.xi))
}

/// Sum over the N elements of the two-hop gains α_i β_i.
pub fn sample_cascade_gain(p: &UowcLinkParams, rng: &mut ChaCha8Rng) -> f64 {
    (0..p.n).map(|_| sample_megg(&p.hop1, rng) * sample_megg(&p.hop2, rng)).sum()
}

/// Law used for the cascade sum χ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CascadeModel {
    /// Independent mEGG and pointing draws per element.
    #[default]
    Physical,
    /// Moment-matched Gamma(ρ, w) in place of the element sum; isolates the
    /// algebra of the closed forms from the approximation error.
    GammaApprox,
}

/// Cascade SNR τ (χ/m1)^r with m1 = E[α β].
#[derive(Debug, Clone, Copy)]
pub struct CascadeSampler {
    pub params: UowcLinkParams,
    pub m1: f64,
    model: CascadeModel,
    gamma: Gamma<f64>,
}

impl CascadeSampler {
    pub fn new(params: &UowcLinkParams) -> Result<Self> {
        Self::with_model(params, CascadeModel::Physical)
    }

    pub fn with_model(params: &UowcLinkParams, model: CascadeModel) -> Result<Self> {
        let st = gamma_approx(params)?;
        let gamma = Gamma::new(st.rho, st.w_scale).map_err(|e| Error::Degenerate(e.to_string()))?;
        Ok(CascadeSampler { params: *params, m1: st.m1, model, gamma })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let chi = match self.model {
            CascadeModel::Physical => sample_cascade_gain(&self.params, rng),
            CascadeModel::GammaApprox => self.gamma.sample(rng),
        };
        self.params.gbar * (chi / self.m1).powi(self.params.detection.r() as i32)
    }
}

pub fn sample_ris_cascade_snr(params: &UowcLinkParams, rng: &mut ChaCha8Rng) -> Result<f64> {
    Ok(CascadeSampler::new(params)?.sample(rng))
}

/// Split n draws into chunk sizes.
fn chunks(n: u64) -> Vec<(u64, usize)> {
    let full = n / CHUNK as u64;
    let rest = (n % CHUNK as u64) as usize;
    let mut v: Vec<(u64, usize)> = (0..full).map(|k| (k, CHUNK)).collect();
    if rest > 0 {
        v.push((full, rest));
    }
    v
}

/// Draw n values with `f`, chunk by chunk, concatenated in chunk order.
pub fn fill<F>(n: u64, seed: RngSeed, link: Link, exec: Execution, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let parts = map_items(&chunks(n), exec, |&(k, len)| {
        let mut rng = seed.rng(k, link);
        (0..len).map(|_| f(&mut rng)).collect::<Vec<f64>>()
    });
    parts.concat()
}

pub fn rf_snr_samples(p: &RfLinkParams, n: u64, seed: RngSeed, exec: Execution) -> Vec<f64> {
    fill(n, seed, Link::RfMain, exec, |r| sample_kappa_mu_snr(p, r))
}

pub fn distance_samples(d: f64, n: u64, seed: RngSeed, exec: Execution) -> Vec<f64> {
    fill(n, seed, Link::Distance, exec, |r| sample_rwp_distance(d, r))
}

pub fn cascade_snr_samples(p: &UowcLinkParams, n: u64, seed: RngSeed, exec: Execution) -> Result<Vec<f64>> {
    cascade_snr_samples_with(p, CascadeModel::Physical, n, seed, exec)
}

pub fn cascade_snr_samples_with(p: &UowcLinkParams, model: CascadeModel, n: u64, seed: RngSeed, exec: Execution) -> Result<Vec<f64>> {
    let s = CascadeSampler::with_model(p, model)?;
    Ok(fill(n, seed, Link::UowcMain, exec, |r| s.sample(r)))
}

/// Per-element gain α β draws, for moment checks.
pub fn cascade_gain_samples(p: &UowcLinkParams, n: u64, seed: RngSeed, exec: Execution) -> Vec<f64> {
    let single = UowcLinkParams { n: 1, ..*p };
    fill(n, seed, Link::UowcMain, exec, |r| sample_cascade_gain(&single, r))
}

/// Mean estimate of g(x) over samples.
pub fn mean_estimate(xs: &[f64], g: impl Fn(f64) -> f64) -> McEstimate {
    let mut m = Moments::default();
    for &x in xs {
        m.push(g(x));
    }
    m.estimate()
}

/// Kolmogorov distance between the empirical law of `samples` and `cdf`,
/// checked at the empirical quantiles k/G, k = 1..G−1 (both sides of each
/// jump). Between grid points the gap can grow by at most 1/G.
pub fn sup_cdf_gap(samples: &[f64], grid: usize, mut cdf: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if samples.is_empty() || grid < 2 {
        return Err(Error::Domain("sup gap needs samples and a grid of at least 2".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mut gap: f64 = 0.0;
    for k in 1..grid {
        let i = (k * n / grid).max(1);
        let f = cdf(s[i - 1])?;
        gap = gap.max((f - i as f64 / n as f64).abs()).max((f - (i - 1) as f64 / n as f64).abs());
    }
    Ok(gap)
}

/// Exact two-sample Kolmogorov distance.
pub fn two_sample_sup_gap(a: &[f64], b: &[f64]) -> f64 {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut gap) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        gap = gap.max((i as f64 / na - j as f64 / nb).abs());
    }
    gap
}

/// Dvoretzky–Kiefer–Wolfowitz band holding with probability 1 − 0.0027.
pub fn dkw_band(n: u64) -> f64 {
    ((2.0f64 / 0.0027).ln() / (2.0 * n as f64)).sqrt()
}

/// Sample count, seed and execution of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRun {
    pub n: u64,
    pub seed: RngSeed,
    pub exec: Execution,
    pub cascade: CascadeModel,
}

impl McRun {
    pub fn new(n: u64, seed: u64) -> Self {
        McRun { n, seed: RngSeed::new(seed), exec: Execution::default(), cascade: CascadeModel::Physical }
    }
}

/// Instantaneous SNRs of one joint draw of the four links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDraw {
    pub rf_main: f64,
    pub rf_eve: f64,
    pub uowc_main: f64,
    pub uowc_eve: f64,
}

impl SnrDraw {
    pub fn min_eq(&self) -> f64 {
        self.rf_main.min(self.uowc_main)
    }

    /// γ_R γ_D / (γ_R + γ_D + 1).
    pub fn harmonic_eq(&self) -> f64 {
        self.rf_main * self.uowc_main / (self.rf_main + self.uowc_main + 1.0)
    }
}

/// Reduce per-chunk accumulators of joint draws, chunk order fixed.
fn joint_reduce<A, F>(cfg: &ScenarioConfig, run: &McRun, f: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(&mut dyn Iterator<Item = SnrDraw>) -> A + Sync + Send,
{
    let dm = CascadeSampler::with_model(&cfg.uowc_main, run.cascade)?;
    let de = CascadeSampler::with_model(&cfg.uowc_eve, run.cascade)?;
    let (scen, seed) = (cfg.scenario, run.seed);
    Ok(map_items(&chunks(run.n), run.exec, |&(k, len)| {
        let mut rr = seed.rng(k, Link::RfMain);
        let mut re = seed.rng(k, Link::RfEve);
        let mut ud = seed.rng(k, Link::UowcMain);
        let mut ue = seed.rng(k, Link::UowcEve);
        let need_rf_eve = scen != Scenario::II;
        let need_uowc_eve = scen != Scenario::I;
        let mut it = (0..len).map(|_| SnrDraw {
            rf_main: sample_kappa_mu_snr(&cfg.rf_main, &mut rr),
            rf_eve: if need_rf_eve { sample_kappa_mu_snr(&cfg.rf_eve, &mut re) } else { 0.0 },
            uowc_main: dm.sample(&mut ud),
            uowc_eve: if need_uowc_eve { de.sample(&mut ue) } else { 0.0 },
        });
        f(&mut it)
    }))
}

/// Outage events of the scenario. `lower` uses the min-SNR relay and the
/// φγ threshold; `exact` the harmonic relay SNR and φ(1+γ) − 1.
pub fn outage_events(scenario: Scenario, phi: f64, d: &SnrDraw) -> (bool, bool) {
    let shift = phi - 1.0;
    match scenario {
        Scenario::I => (d.min_eq() <= phi * d.rf_eve, d.harmonic_eq() <= phi * d.rf_eve + shift),
        Scenario::II => (
            d.rf_main <= shift || d.uowc_main <= phi * d.uowc_eve,
            d.rf_main <= shift || d.uowc_main <= phi * d.uowc_eve + shift,
        ),
        Scenario::III => (
            d.rf_main <= phi * d.rf_eve || d.uowc_main <= phi * d.uowc_eve,
            d.rf_main <= phi * d.rf_eve + shift || d.uowc_main <= phi * d.uowc_eve + shift,
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SopEstimate {
    /// Probability of the lower-bound event.
    pub lower: McEstimate,
    /// Probability of the exact secrecy-outage event.
    pub exact: McEstimate,
}

pub fn estimate_sop(cfg: &ScenarioConfig, run: &McRun) -> Result<SopEstimate> {
    check_n(run.n)?;
    cfg.validate()?;
    let phi = cfg.phi();
    let parts = joint_reduce(cfg, run, |it| {
        let (mut lo, mut ex) = (Moments::default(), Moments::default());
        for d in it {
            let (l, e) = outage_events(cfg.scenario, phi, &d);
            lo.push(l as u8 as f64);
            ex.push(e as u8 as f64);
        }
        (lo, ex)
    })?;
    let (lo, ex) = parts.into_iter().fold((Moments::default(), Moments::default()), |(a, b), (c, d)| (a.merge(c), b.merge(d)));
    Ok(SopEstimate { lower: lo.estimate(), exact: ex.estimate() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscEstimate {
    /// With the min-SNR relay.
    pub min: McEstimate,
    /// With the harmonic relay SNR.
    pub harmonic: McEstimate,
}

/// E[(ln(1+γ_eq) − ln(1+γ_E))⁺] in nats, RF eavesdropper.
pub fn estimate_asc(cfg: &ScenarioConfig, run: &McRun) -> Result<AscEstimate> {
    check_n(run.n)?;
    cfg.validate()?;
    let c = ScenarioConfig { scenario: Scenario::I, ..*cfg };
    let parts = joint_reduce(&c, run, |it| {
        let (mut a, mut b) = (Moments::default(), Moments::default());
        for d in it {
            let e = d.rf_eve.ln_1p();
            a.push((d.min_eq().ln_1p() - e).max(0.0));
            b.push((d.harmonic_eq().ln_1p() - e).max(0.0));
        }
        (a, b)
    })?;
    let (a, b) = parts.into_iter().fold((Moments::default(), Moments::default()), |(a, b), (c, d)| (a.merge(c), b.merge(d)));
    Ok(AscEstimate { min: a.estimate(), harmonic: b.estimate() })
}

/// Joint draws of the relay SNR under both combining rules: (min, harmonic).
pub fn eq_snr_samples(cfg: &ScenarioConfig, run: &McRun) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = ScenarioConfig { scenario: Scenario::II, ..*cfg };
    let parts = joint_reduce(&c, run, |it| it.map(|d| (d.min_eq(), d.harmonic_eq())).collect::<Vec<_>>())?;
    Ok(parts.into_iter().flatten().unzip())
}

fn check_n(n: u64) -> Result<()> {
    if n < 10_000 {
        return Err(Error::Domain(format!("Monte Carlo needs at least 1e4 samples, got {n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::{rwp_distance_cdf, snr_cdf};
    use crate::uowc::megg_product_moment;

    #[test]
    fn reproducible_and_order_independent() {
        let p = RfLinkParams::default();
        let s = RngSeed::new(7);
        let a = rf_snr_samples(&p, 10_000, s, Execution::Parallel);
        let b = rf_snr_samples(&p, 10_000, s, Execution::Sequential);
        assert_eq!(a, b);
        let c = rf_snr_samples(&p, 10_000, RngSeed { stream_id: 1, ..s }, Execution::Sequential);
        assert_ne!(a, c);
        // a prefix of a longer fill is the shorter fill
        let d = rf_snr_samples(&p, 20_000, s, Execution::Sequential);
        assert_eq!(&d[..10_000], &a[..]);
    }

    #[test]
    fn distance_law() {
        let d = 50.0;
        let xs = distance_samples(d, 200_000, RngSeed::new(1), Execution::Parallel);
        assert!(xs.iter().all(|&q| (0.0..=d).contains(&q)));
        let gap = sup_cdf_gap(&xs, 1000, |q| Ok(rwp_distance_cdf(q, d))).unwrap();
        assert!(gap < dkw_band(200_000) + 1e-3, "{gap}");
    }

    #[test]
    fn rf_snr_law() {
        let p = RfLinkParams { gbar: 1e3, ..RfLinkParams::default() };
        let xs = rf_snr_samples(&p, 100_000, RngSeed::new(2), Execution::Parallel);
        let gap = sup_cdf_gap(&xs, 200, |g| snr_cdf(g, &p)).unwrap();
        assert!(gap < dkw_band(100_000) + 5e-3, "{gap}");
    }

    #[test]
    fn nakagami_limit_has_gamma_power() {
        let mut rng = RngSeed::new(3).rng(0, Link::RfMain);
        let m = mean_estimate(&(0..50_000).map(|_| kappa_mu_power(0.0, 2.0, &mut rng)).collect::<Vec<_>>(), |x| x * x);
        // E[P²] = (μ+1)/μ for unit-mean Gamma(μ)
        assert!((m.value - 1.5).abs() < m.half_width_3sigma, "{m:?}");
    }

    #[test]
    fn scale_family() {
        let p = RfLinkParams::default();
        let a = rf_snr_samples(&p, 10_000, RngSeed::new(4), Execution::Sequential);
        let b = rf_snr_samples(&RfLinkParams { gbar: 2.0 * p.gbar, ..p }, 10_000, RngSeed::new(4), Execution::Sequential);
        for (x, y) in a.iter().zip(&b) {
            assert!((y / x - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cascade_moments() {
        let p = UowcLinkParams::default();
        let xs = cascade_gain_samples(&p, 400_000, RngSeed::new(5), Execution::Parallel);
        for k in [1.0, 2.0] {
            let m = mean_estimate(&xs, |x| x.powf(k));
            let want = megg_product_moment(k, &p.hop1, &p.hop2).unwrap();
            assert!((m.value - want).abs() < m.half_width_3sigma, "p={k}: {m:?} vs {want}");
        }
    }

    #[test]
    fn event_containment_and_symmetry() {
        let mut cfg = ScenarioConfig { rs: 0.0, ..ScenarioConfig::default() };
        cfg.rf_eve = cfg.rf_main;
        cfg.uowc_eve = cfg.uowc_main;
        cfg.scenario = Scenario::II;
        let e = estimate_sop(&cfg, &McRun::new(100_000, 6)).unwrap();
        assert!((e.lower.value - 0.5).abs() < e.lower.half_width_3sigma, "{e:?}");
        for sc in [Scenario::I, Scenario::II, Scenario::III] {
            let e = estimate_sop(&ScenarioConfig { scenario: sc, rs: 0.5, ..ScenarioConfig::default() }, &McRun::new(20_000, 8)).unwrap();
            assert!(e.lower.value <= e.exact.value);
        }
    }

    #[test]
    fn capacity_without_eavesdropper() {
        let mut cfg = ScenarioConfig::default();
        cfg.rf_eve.gbar = 1e-300;
        let run = McRun { exec: Execution::Sequential, ..McRun::new(20_000, 9) };
        let a = estimate_asc(&cfg, &run).unwrap();
        let (mins, _) = eq_snr_samples(&cfg, &run).unwrap();
        let m = mean_estimate(&mins, f64::ln_1p);
        assert!((a.min.value - m.value).abs() < 1e-12 * m.value);
        assert!(a.min.value >= 0.0 && a.harmonic.value <= a.min.value);
    }

    #[test]
    fn gamma_model_matches_its_cdf() {
        let p = UowcLinkParams::default();
        let st = gamma_approx(&p).unwrap();
        let xs = cascade_snr_samples_with(&p, CascadeModel::GammaApprox, 100_000, RngSeed::new(10), Execution::Parallel).unwrap();
        let o = crate::specfun::meijer::EvalOptions::default();
        let gap = sup_cdf_gap(&xs, 500, |g| st.cdf(g, crate::rf::StatRoute::Reduced, &o)).unwrap();
        assert!(gap < dkw_band(100_000) + 2e-3, "{gap}");
    }

    #[test]
    fn two_sample_gap() {
        assert_eq!(two_sample_sup_gap(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(two_sample_sup_gap(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
    }
}
