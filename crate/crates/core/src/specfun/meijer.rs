//! Univariate Meijer G-function.
//!
//! Convention (real parameters, x > 0):
//!
//! G^{m,n}_{p,q}(x | a; b) = (1/2πi) ∫_L H(s) x^s ds,
//!
//! H(s) = Π_{j<m} Γ(b_j − s) Π_{j<n} Γ(1 − a_j + s)
//!        / (Π_{j≥m} Γ(1 − b_j + s) Π_{j≥n} Γ(a_j − s)),
//!
//! with L separating the right poles b_j + k (j < m) from the left poles
//! a_j − 1 − k (j < n).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, Tolerance};
use crate::specfun::gamma::{is_pole, ln_gamma_complex, ln_gamma_sign};

/// Distance below which two parameters are treated as integer-coincident.
const COINCIDENCE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeijerGSpec {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogCaseStrategy {
    /// Shift the coincident parameters by ±δ, ±2δ and Richardson-extrapolate.
    Perturb,
    /// Exact residues of the merged poles, computed on small Cauchy circles.
    LogSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Auto,
    Series,
    Contour,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub target_rel_tol: f64,
    pub max_series_terms: usize,
    /// Minimum number of quadrature panels along the contour.
    pub contour_resolution: usize,
    pub log_case_strategy: LogCaseStrategy,
    /// Perturbation step δ of the `Perturb` strategy.
    pub perturbation: f64,
    pub backend: Backend,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            target_rel_tol: 1e-8,
            max_series_terms: 20_000,
            contour_resolution: 16,
            log_case_strategy: LogCaseStrategy::Perturb,
            perturbation: 1e-5,
            backend: Backend::Auto,
        }
    }
}

impl EvalOptions {
    pub fn with_backend(self, backend: Backend) -> Self {
        EvalOptions { backend, ..self }
    }

    pub fn with_tol(self, target_rel_tol: f64) -> Self {
        EvalOptions { target_rel_tol, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_rel_tol > 0.0) || self.max_series_terms < 1 {
            return Err(Error::Domain("EvalOptions needs target_rel_tol > 0 and max_series_terms >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Series,
    InvertedSeries,
    Contour,
}

/// A G-function value with its achieved relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub value: f64,
    pub rel_err: f64,
    pub method: Method,
    /// True when the target tolerance was not reached.
    pub flagged: bool,
}

impl MeijerGSpec {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if m > b.len() || n > a.len() {
            return Err(Error::Spec(format!("orders m={m}, n={n} exceed q={}, p={}", b.len(), a.len())));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Spec("non-finite parameter".into()));
        }
        Ok(MeijerGSpec { m, n, a, b })
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.a.len()
    }
    pub fn q(&self) -> usize {
        self.b.len()
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// G^{m,n}_{p,q}(x | a; b) = G^{n,m}_{q,p}(1/x | 1 − b; 1 − a).
    pub fn inverted(&self) -> Self {
        MeijerGSpec {
            m: self.n,
            n: self.m,
            a: self.b.iter().map(|v| 1.0 - v).collect(),
            b: self.a.iter().map(|v| 1.0 - v).collect(),
        }
    }

    /// x^σ G(x | a; b) = G(x | a + σ; b + σ).
    pub fn shifted(&self, sigma: f64) -> Self {
        MeijerGSpec {
            m: self.m,
            n: self.n,
            a: self.a.iter().map(|v| v + sigma).collect(),
            b: self.b.iter().map(|v| v + sigma).collect(),
        }
    }

    /// m + n − (p + q)/2; the contour integrand decays like e^{−πδ|t|}.
    pub fn delta(&self) -> f64 {
        (self.m + self.n) as f64 - 0.5 * (self.p() + self.q()) as f64
    }

    /// Reject parameter sets where a right pole meets a left pole.
    pub fn check_poles(&self) -> Result<()> {
        for bj in &self.b[..self.m] {
            for ak in &self.a[..self.n] {
                let d = bj - ak + 1.0;
                if d <= COINCIDENCE_TOL && (d - d.round()).abs() < 1e-12 {
                    return Err(Error::Spec(format!("pole collision: b - a + 1 = {d} is a nonpositive integer")));
                }
            }
        }
        Ok(())
    }

    /// ln H(s), `None` where H vanishes through a denominator pole.
    pub fn ln_kernel(&self, s: Complex64) -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for bj in &self.b[..self.m] {
            acc += ln_gamma_complex(bj - s);
        }
        for aj in &self.a[..self.n] {
            acc += ln_gamma_complex(1.0 - aj + s);
        }
        for bj in &self.b[self.m..] {
            let z = 1.0 - bj + s;
            if z.im == 0.0 && is_pole(z.re) {
                return None;
            }
            acc -= ln_gamma_complex(z);
        }
        for aj in &self.a[self.n..] {
            let z = aj - s;
            if z.im == 0.0 && is_pole(z.re) {
                return None;
            }
            acc -= ln_gamma_complex(z);
        }
        Some(acc)
    }

    /// ln|H(c)| on the real axis (−inf at zeros, +inf at poles).
    fn ln_kernel_abs_real(&self, c: f64) -> f64 {
        let lg = |z: f64| ln_gamma_sign(z).map(|v| v.0).unwrap_or(f64::INFINITY);
        let mut acc = 0.0;
        for bj in &self.b[..self.m] {
            acc += lg(bj - c);
        }
        for aj in &self.a[..self.n] {
            acc += lg(1.0 - aj + c);
        }
        for bj in &self.b[self.m..] {
            acc -= lg(1.0 - bj + c);
        }
        for aj in &self.a[self.n..] {
            acc -= lg(aj - c);
        }
        acc
    }

    /// Residue-series term at the right pole s = b_h + k as (ln|T|, sign);
    /// sign 0 marks an exact zero.
    fn ln_term(&self, h: usize, k: usize, lnx: f64) -> (f64, f64) {
        let s = self.b[h] + k as f64;
        let mut ln = -ln_gamma_sign(k as f64 + 1.0).map(|v| v.0).unwrap_or(0.0) + s * lnx;
        let mut sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let num = |z: f64, ln: &mut f64, sign: &mut f64| match ln_gamma_sign(z) {
            Ok((l, sg)) => {
                *ln += l;
                *sign *= sg;
                true
            }
            Err(_) => false,
        };
        for (j, bj) in self.b[..self.m].iter().enumerate() {
            if j != h && !num(bj - s, &mut ln, &mut sign) {
                return (f64::INFINITY, sign);
            }
        }
        for aj in &self.a[..self.n] {
            if !num(1.0 - aj + s, &mut ln, &mut sign) {
                return (f64::INFINITY, sign);
            }
        }
        for bj in &self.b[self.m..] {
            match ln_gamma_sign(1.0 - bj + s) {
                Ok((l, sg)) => {
                    ln -= l;
                    sign *= sg;
                }
                Err(_) => return (f64::NEG_INFINITY, 0.0),
            }
        }
        for aj in &self.a[self.n..] {
            match ln_gamma_sign(aj - s) {
                Ok((l, sg)) => {
                    ln -= l;
                    sign *= sg;
                }
                Err(_) => return (f64::NEG_INFINITY, 0.0),
            }
        }
        (ln, sign)
    }

    /// t_{k+1}/t_k along the series of the pole b_h, or `None` if a factor vanishes.
    fn term_ratio(&self, h: usize, k: usize, x: f64) -> Option<f64> {
        let s = self.b[h] + k as f64;
        let mut num = -x / (k as f64 + 1.0);
        let mut den = 1.0;
        for aj in &self.a[..self.n] {
            num *= 1.0 - aj + s;
        }
        for aj in &self.a[self.n..] {
            num *= aj - s - 1.0;
        }
        for (j, bj) in self.b[..self.m].iter().enumerate() {
            if j != h {
                den *= bj - s - 1.0;
            }
        }
        for bj in &self.b[self.m..] {
            den *= 1.0 - bj + s;
        }
        if den.abs() < 1e-13 || num == 0.0 {
            return None;
        }
        Some(num / den)
    }

    /// Groups of m-group indices whose b values differ by integers.
    fn coincidence_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for j in 0..self.m {
            let found = classes.iter_mut().find(|c| {
                let d = self.b[j] - self.b[c[0]];
                (d - d.round()).abs() < COINCIDENCE_TOL
            });
            match found {
                Some(c) => c.push(j),
                None => classes.push(vec![j]),
            }
        }
        classes.into_iter().filter(|c| c.len() > 1).collect()
    }

    fn perturbed(&self, classes: &[Vec<usize>], delta: f64) -> Self {
        let mut out = self.clone();
        for class in classes {
            let mut members = class.clone();
            members.sort_by(|&i, &j| self.b[i].total_cmp(&self.b[j]));
            for (rank, &j) in members.iter().enumerate() {
                out.b[j] += rank as f64 * delta;
            }
        }
        out
    }

    fn right_poles(&self, upto: usize) -> Vec<f64> {
        self.b[..self.m].iter().flat_map(|&b| (0..upto).map(move |k| b + k as f64)).collect()
    }

    fn left_poles(&self, upto: usize) -> Vec<f64> {
        self.a[..self.n].iter().flat_map(|&a| (0..upto).map(move |k| a - 1.0 - k as f64)).collect()
    }
}

struct RawSum {
    value: f64,
    abs_err: f64,
}

/// Residue series over simple right poles. Requires p < q, or p = q with x < 1.
fn series_simple(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<RawSum> {
    let lnx = x.ln();
    let mut parts: Vec<(f64, f64, f64)> = Vec::with_capacity(spec.m); // (ln scale, sum, sum|t|) per pole family
    for h in 0..spec.m {
        // first nonzero term
        let mut k0 = 0;
        let (mut ln0, mut sg0) = spec.ln_term(h, 0, lnx);
        while sg0 == 0.0 && k0 < 64 {
            k0 += 1;
            let r = spec.ln_term(h, k0, lnx);
            ln0 = r.0;
            sg0 = r.1;
        }
        if sg0 == 0.0 {
            continue;
        }
        if !ln0.is_finite() {
            return Err(Error::non_convergence("series term overflow", f64::NAN, f64::INFINITY));
        }
        let mut t = sg0;
        let mut sum = t;
        let mut sum_abs = t.abs();
        let mut max_abs = t.abs();
        let mut small = 0;
        let mut k = k0;
        let mut converged = false;
        while k < opts.max_series_terms {
            let next = match spec.term_ratio(h, k, x) {
                Some(r) if t != 0.0 => t * r,
                _ => {
                    let (l, sg) = spec.ln_term(h, k + 1, lnx);
                    if sg == 0.0 {
                        0.0
                    } else {
                        sg * (l - ln0).exp()
                    }
                }
            };
            k += 1;
            t = next;
            if !t.is_finite() {
                return Err(Error::non_convergence("series overflow", f64::NAN, f64::INFINITY));
            }
            sum += t;
            sum_abs += t.abs();
            max_abs = max_abs.max(t.abs());
            if max_abs > 1e15 * sum.abs().max(1e-300) && max_abs > 1e15 {
                return Err(Error::non_convergence("series cancellation", sum, max_abs * f64::EPSILON));
            }
            if t.abs() <= 1e-17 * sum.abs() || t.abs() <= 1e-20 * max_abs {
                small += 1;
                if small >= 3 {
                    converged = true;
                    break;
                }
            } else {
                small = 0;
            }
        }
        if !converged {
            return Err(Error::non_convergence(
                format!("residue series not converged after {} terms", opts.max_series_terms),
                sum * ln0.exp(),
                t.abs() * ln0.exp(),
            ));
        }
        parts.push((ln0, sum, sum_abs));
    }
    if parts.is_empty() {
        return Ok(RawSum { value: 0.0, abs_err: 0.0 });
    }
    let lref = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut value = 0.0;
    let mut mag = 0.0;
    for (l, s, sa) in parts {
        let w = (l - lref).exp();
        value += w * s;
        mag += w * sa;
    }
    let scale = lref.exp();
    let value = value * scale;
    let abs_err = 16.0 * f64::EPSILON * mag * scale;
    if !value.is_finite() {
        return Err(Error::non_convergence("series result not finite", value, f64::INFINITY));
    }
    Ok(RawSum { value, abs_err })
}

/// Residue of f at a (possibly merged) pole, from the trapezoid rule on a circle.
fn cauchy_residue(f: &dyn Fn(Complex64) -> Complex64, center: f64, radius: f64) -> Complex64 {
    const N: usize = 64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..N {
        let th = 2.0 * PI * (j as f64 + 0.5) / N as f64;
        let e = Complex64::new(th.cos(), th.sin());
        acc += f(center + radius * e) * e;
    }
    acc * (radius / N as f64)
}

/// H(s) x^s scaled by e^{-lref}.
fn kernel_times_power(spec: &MeijerGSpec, s: Complex64, lnx: f64, lref: f64) -> Complex64 {
    match spec.ln_kernel(s) {
        Some(l) => (l + s * lnx - lref).exp(),
        None => Complex64::new(0.0, 0.0),
    }
}

/// Residue series where integer-spaced right poles are merged and their
/// combined residue is taken on a Cauchy circle.
fn series_clustered(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<RawSum> {
    let lnx = x.ln();
    // distinct pole locations in increasing order with their multiplicity
    let classes = {
        let mut cls: Vec<Vec<usize>> = Vec::new();
        for j in 0..spec.m {
            match cls.iter_mut().find(|c| {
                let d = spec.b[j] - spec.b[c[0]];
                (d - d.round()).abs() < COINCIDENCE_TOL
            }) {
                Some(c) => c.push(j),
                None => cls.push(vec![j]),
            }
        }
        cls
    };
    let left = spec.left_poles(4);
    let mut total = 0.0;
    let mut mag = 0.0;
    for class in &classes {
        let base = class.iter().map(|&j| spec.b[j]).fold(f64::INFINITY, f64::min);
        let top = class.iter().map(|&j| spec.b[j]).fold(f64::NEG_INFINITY, f64::max);
        let others: Vec<f64> = spec
            .right_poles(4)
            .into_iter()
            .filter(|p| {
                let d = p - base;
                (d - d.round()).abs() >= COINCIDENCE_TOL
            })
            .chain(left.iter().copied())
            .collect();
        let mut sum = 0.0;
        let mut max_abs: f64 = 0.0;
        let mut small = 0;
        let mut k = 0usize;
        let mut converged = false;
        while k < opts.max_series_terms {
            let pos = base + k as f64;
            let members: Vec<usize> = class.iter().copied().filter(|&j| spec.b[j] <= pos + COINCIDENCE_TOL).collect();
            let term = if members.len() == 1 && pos > top + 0.5 || members.len() == 1 && class.len() == 1 {
                let h = members[0];
                let kk = (pos - spec.b[h]).round() as usize;
                let (l, sg) = spec.ln_term(h, kk, lnx);
                if sg == 0.0 {
                    0.0
                } else {
                    sg * l.exp()
                }
            } else {
                let nearest = others.iter().map(|o| (o - pos).abs()).fold(1.0, f64::min);
                let radius = (0.4 * nearest).min(0.3);
                let lref = spec.ln_kernel(Complex64::new(pos + radius, 0.0)).map(|l| l.re).unwrap_or(0.0) + (pos + radius) * lnx;
                let f = |s: Complex64| kernel_times_power(spec, s, lnx, lref);
                -(cauchy_residue(&f, pos, radius) * lref.exp()).re
            };
            if !term.is_finite() {
                return Err(Error::non_convergence("clustered series overflow", sum, f64::INFINITY));
            }
            sum += term;
            max_abs = max_abs.max(term.abs());
            mag += term.abs();
            k += 1;
            if pos > top && (term.abs() <= 1e-16 * sum.abs() || term.abs() <= 1e-20 * max_abs) {
                small += 1;
                if small >= 3 {
                    converged = true;
                    break;
                }
            } else {
                small = 0;
            }
        }
        if !converged {
            return Err(Error::non_convergence("clustered residue series not converged", sum, f64::INFINITY));
        }
        total += sum;
    }
    Ok(RawSum { value: total, abs_err: 1e-12 * mag })
}

/// Residue series in x with the configured treatment of merged poles.
fn series(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<RawSum> {
    let classes = spec.coincidence_classes();
    if classes.is_empty() {
        return series_simple(spec, x, opts);
    }
    match opts.log_case_strategy {
        LogCaseStrategy::LogSeries => series_clustered(spec, x, opts),
        LogCaseStrategy::Perturb => {
            let d = opts.perturbation;
            let f = |delta: f64| series_simple(&spec.perturbed(&classes, delta), x, opts);
            let (p1, m1, p2, m2) = (f(d)?, f(-d)?, f(2.0 * d)?, f(-2.0 * d)?);
            let a1 = 0.5 * (p1.value + m1.value);
            let a2 = 0.5 * (p2.value + m2.value);
            let value = (4.0 * a1 - a2) / 3.0;
            let abs_err = (value - a1).abs() + p1.abs_err.max(m1.abs_err) + p2.abs_err.max(m2.abs_err);
            Ok(RawSum { value, abs_err })
        }
    }
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = 0.618_033_988_749_894_8;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Vertical-line Mellin–Barnes quadrature with residue corrections for poles
/// on the wrong side of the line.
fn contour(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<RawSum> {
    let delta = spec.delta();
    if delta <= 0.0 {
        return Err(Error::non_convergence(
            format!("contour integral diverges (m + n - (p + q)/2 = {delta})"),
            f64::NAN,
            f64::INFINITY,
        ));
    }
    let lnx = x.ln();
    let hi = spec.b[..spec.m].iter().copied().fold(f64::INFINITY, f64::min);
    let lo = spec.a[..spec.n].iter().map(|a| a - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let phi = |c: f64| {
        let v = spec.ln_kernel_abs_real(c) + c * lnx;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let poles: Vec<f64> = spec.right_poles(8).into_iter().chain(spec.left_poles(8)).collect();
    let c = if lo < hi {
        let width = hi - lo;
        let margin = (0.1 * width).min(0.25);
        let (mut l, mut r) = (lo + margin, hi - margin);
        if !l.is_finite() && !r.is_finite() {
            l = -1.0;
            r = 1.0;
        }
        // expand an unbounded side until the minimum is bracketed
        if !l.is_finite() {
            let mut w = 1.0;
            while phi(r - 2.0 * w) < phi(r - w) && w < 1e4 {
                w *= 2.0;
            }
            l = r - 2.0 * w;
        }
        if !r.is_finite() {
            let mut w = 1.0;
            while phi(l + 2.0 * w) < phi(l + w) && w < 1e4 {
                w *= 2.0;
            }
            r = l + 2.0 * w;
        }
        if r - l < 1e-12 {
            0.5 * (l + r)
        } else {
            golden_min(&phi, l, r, 80)
        }
    } else {
        // empty strip: sit just left of the lowest right pole
        let below = poles.iter().copied().filter(|&p| p < hi - 1e-9).fold(f64::NEG_INFINITY, f64::max);
        let gap = if below.is_finite() { (hi - below).min(1.0) } else { 1.0 };
        hi - 0.5 * gap
    };
    // keep clear of poles
    let c = {
        let mut c = c;
        for _ in 0..8 {
            let near = poles.iter().copied().min_by(|p, q| (p - c).abs().total_cmp(&(q - c).abs()));
            match near {
                Some(p) if (p - c).abs() < 0.05 => c += if c >= p { 0.05 } else { -0.05 },
                _ => break,
            }
        }
        c
    };
    // corrections: right poles left of c, left poles right of c
    let mut correction = 0.0;
    let mut corr_err = 0.0;
    {
        let mut misplaced: Vec<(f64, f64)> = Vec::new(); // (location, orientation sign)
        for &b in &spec.b[..spec.m] {
            let mut k = 0.0;
            while b + k < c {
                misplaced.push((b + k, -1.0));
                k += 1.0;
            }
        }
        for &a in &spec.a[..spec.n] {
            let mut k = 0.0;
            while a - 1.0 - k > c {
                misplaced.push((a - 1.0 - k, 1.0));
                k += 1.0;
            }
        }
        misplaced.sort_by(|p, q| p.0.total_cmp(&q.0));
        misplaced.dedup_by(|p, q| (p.0 - q.0).abs() < COINCIDENCE_TOL);
        for &(loc, orient) in &misplaced {
            let nearest = poles
                .iter()
                .map(|p| (p - loc).abs())
                .filter(|d| *d > COINCIDENCE_TOL)
                .fold((loc - c).abs(), f64::min);
            let radius = (0.4 * nearest).min(0.25);
            let lref = spec.ln_kernel(Complex64::new(loc + radius, 0.0)).map(|l| l.re).unwrap_or(0.0) + (loc + radius) * lnx;
            let f = |s: Complex64| kernel_times_power(spec, s, lnx, lref);
            let r = cauchy_residue(&f, loc, radius) * lref.exp();
            correction += orient * r.re;
            corr_err += 1e-12 * r.norm();
        }
    }
    let phi0 = phi(c);
    if !phi0.is_finite() {
        return Err(Error::non_convergence("contour abscissa at a kernel singularity", f64::NAN, f64::INFINITY));
    }
    let envelope = |t: f64| match spec.ln_kernel(Complex64::new(c, t)) {
        Some(l) => (l.re + c * lnx - phi0).exp(),
        None => 0.0,
    };
    let mut t_max = 2.0;
    while envelope(t_max) > 1e-18 * (1.0 + t_max) || envelope(1.5 * t_max) > 1e-18 * (1.0 + t_max) {
        t_max *= 1.5;
        if t_max > 5e4 {
            return Err(Error::non_convergence("contour integrand does not decay", f64::NAN, f64::INFINITY));
        }
    }
    let integrand = |t: f64| match spec.ln_kernel(Complex64::new(c, t)) {
        Some(l) => {
            let z = l + Complex64::new(c, t) * lnx - phi0;
            z.exp().re
        }
        None => 0.0,
    };
    let panel = (2.0 / (1.0 + lnx.abs() / PI)).min(t_max / opts.contour_resolution.max(1) as f64);
    let n_panels = ((t_max / panel).ceil() as usize).clamp(1, 20_000);
    let breaks: Vec<f64> = (0..=n_panels).map(|i| t_max * i as f64 / n_panels as f64).collect();
    let tol = Tolerance { abs: 1e-3 * opts.target_rel_tol * 1e-6, rel: 0.05 * opts.target_rel_tol };
    let r = integrate_breaks(integrand, &breaks, tol, 400_000 + 100 * n_panels);
    let scale = phi0.exp() / PI;
    let value = r.value * scale + correction;
    let abs_err = (r.abs_err + 1e-18 * t_max) * scale + corr_err + 4.0 * f64::EPSILON * correction.abs();
    if !value.is_finite() {
        return Err(Error::non_convergence("contour result not finite", value, f64::INFINITY));
    }
    Ok(RawSum { value, abs_err })
}

fn finish(raw: RawSum, method: Method, opts: &EvalOptions) -> GValue {
    let rel_err = if raw.value != 0.0 { raw.abs_err / raw.value.abs() } else if raw.abs_err == 0.0 { 0.0 } else { f64::INFINITY };
    GValue { value: raw.value, rel_err, method, flagged: !(rel_err <= opts.target_rel_tol) }
}

/// Evaluate G^{m,n}_{p,q}(x | a; b) for x > 0.
///
/// Auto strategy: residue series in x (p < q, or p = q and x < 1), or in 1/x
/// through the inversion identity (p > q, or p = q and x > 1); the vertical
/// contour is used when the series is unavailable, too slow or too
/// ill-conditioned. Results that miss `target_rel_tol` come back with
/// `flagged` set.
pub fn meijer_g(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<GValue> {
    opts.validate()?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Meijer G argument must be positive and finite, got {x}")));
    }
    spec.check_poles()?;
    let (p, q) = (spec.p(), spec.q());
    let invert = p > q || (p == q && x > 1.0);
    let (sspec, sx, smethod) = if invert { (spec.inverted(), 1.0 / x, Method::InvertedSeries) } else { (spec.clone(), x, Method::Series) };
    let series_ok = p != q || sx < 0.95;
    let run_series = || -> Result<GValue> {
        if p == q && sx >= 1.0 {
            return Err(Error::non_convergence("series needs |x| < 1 when p = q", f64::NAN, f64::INFINITY));
        }
        series(&sspec, sx, opts).map(|r| finish(r, smethod, opts))
    };
    let run_contour = || contour(spec, x, opts).map(|r| finish(r, Method::Contour, opts));
    match opts.backend {
        Backend::Series => run_series(),
        Backend::Contour => run_contour(),
        Backend::Auto => {
            let first = if series_ok { Some(run_series()) } else { None };
            if let Some(Ok(v)) = &first {
                if !v.flagged {
                    return Ok(*v);
                }
            }
            match run_contour() {
                Ok(c) => match &first {
                    Some(Ok(s)) if s.rel_err < c.rel_err => Ok(*s),
                    _ => Ok(c),
                },
                Err(e) => match first {
                    Some(Ok(s)) => Ok(s),
                    _ => Err(e),
                },
            }
        }
    }
}

/// Convenience wrapper returning the value only; flagged results are errors.
pub fn meijer_g_value(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<f64> {
    let v = meijer_g(spec, x, opts)?;
    if v.flagged && v.rel_err > 1e3 * opts.target_rel_tol.max(1e-10) {
        return Err(Error::non_convergence("Meijer G tolerance not reached", v.value, v.rel_err * v.value.abs()));
    }
    Ok(v.value)
}

/// Leading small-x behaviour: the k = 0 residue of every right pole family.
/// Pole families that coincide modulo integers keep all residues up to the
/// top member, so perturbed cancellations stay complete.
pub fn leading_terms_small(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("leading terms need x > 0".into()));
    }
    spec.check_poles()?;
    let classes = spec.coincidence_classes();
    let eval = |s: &MeijerGSpec| -> f64 {
        let lnx = x.ln();
        let mut acc = 0.0;
        for h in 0..s.m {
            let top = classes
                .iter()
                .find(|c| c.contains(&h))
                .map(|c| c.iter().map(|&j| s.b[j]).fold(f64::NEG_INFINITY, f64::max))
                .unwrap_or(s.b[h]);
            let kmax = (top - s.b[h]).round().max(0.0) as usize;
            for k in 0..=kmax {
                let (l, sg) = s.ln_term(h, k, lnx);
                if sg != 0.0 {
                    acc += sg * l.exp();
                }
            }
        }
        acc
    };
    if classes.is_empty() {
        return Ok(eval(spec));
    }
    let d = opts.perturbation;
    let a1 = 0.5 * (eval(&spec.perturbed(&classes, d)) + eval(&spec.perturbed(&classes, -d)));
    let a2 = 0.5 * (eval(&spec.perturbed(&classes, 2.0 * d)) + eval(&spec.perturbed(&classes, -2.0 * d)));
    Ok((4.0 * a1 - a2) / 3.0)
}

/// Leading large-x behaviour: the k = 0 residue of every left pole family.
pub fn leading_terms_large(spec: &MeijerGSpec, x: f64, opts: &EvalOptions) -> Result<f64> {
    leading_terms_small(&spec.inverted(), 1.0 / x, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, n: usize, a: &[f64], b: &[f64]) -> MeijerGSpec {
        MeijerGSpec::new(m, n, a.to_vec(), b.to_vec()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exponential_reduction() {
        let s = spec(1, 0, &[], &[0.0]);
        let o = EvalOptions::default();
        for x in [1e-3, 0.1, 1.0, 5.0, 20.0, 50.0] {
            let v = meijer_g(&s, x, &o).unwrap();
            assert!(rel(v.value, (-x).exp()) < 1e-12, "x={x}: {v:?}");
        }
        assert!(rel(meijer_g(&s, 1.0, &o).unwrap().value, 0.367_879_441_171_442_32) < 1e-12);
    }

    #[test]
    fn rational_reduction() {
        let s = spec(1, 1, &[0.0], &[0.0]);
        let o = EvalOptions::default();
        for x in [0.01, 0.5, 3.0, 40.0] {
            let v = meijer_g(&s, x, &o).unwrap();
            assert!(rel(v.value, 1.0 / (1.0 + x)) < 1e-12, "x={x}: {v:?}");
        }
        let c = meijer_g(&s, 3.0, &o.with_backend(Backend::Contour)).unwrap();
        assert!(rel(c.value, 0.25) < 1e-9, "{c:?}");
    }

    #[test]
    fn cdf_class_against_oracle() {
        // G^{1,2}_{2,3}[0.7 | -0.5, 1; 4, 0, -1.5], mpmath meijerg
        let s = spec(1, 2, &[-0.5, 1.0], &[4.0, 0.0, -1.5]);
        let want = 0.006_847_139_901_530_932_428_250_791_030_66;
        let o = EvalOptions::default();
        let a = meijer_g(&s, 0.7, &o).unwrap();
        let c = meijer_g(&s, 0.7, &o.with_backend(Backend::Contour)).unwrap();
        assert!(rel(a.value, want) < 1e-12, "{a:?}");
        assert!(rel(c.value, want) < 1e-8, "{c:?}");
    }

    #[test]
    fn coincident_poles_both_strategies() {
        // G^{2,0}_{0,2}(x | 0, 0) = 2 K_0(2 √x); mpmath at x = 0.3
        let s = spec(2, 0, &[], &[0.0, 0.0]);
        let want = 2.0 * 0.367_932_916_290_043_144_235_763_068_762;
        let o = EvalOptions::default();
        let p = meijer_g(&s, 0.3, &o).unwrap();
        let l = meijer_g(&s, 0.3, &EvalOptions { log_case_strategy: LogCaseStrategy::LogSeries, ..o }).unwrap();
        let c = meijer_g(&s, 0.3, &o.with_backend(Backend::Contour)).unwrap();
        assert!(rel(p.value, want) < 1e-9, "{p:?} vs {want}");
        assert!(rel(l.value, want) < 1e-10, "{l:?}");
        assert!(rel(c.value, want) < 1e-8, "{c:?}");
    }

    #[test]
    fn pole_collision_is_rejected() {
        let s = spec(1, 1, &[1.0], &[0.0]);
        assert!(matches!(meijer_g(&s, 1.0, &EvalOptions::default()), Err(Error::Spec(_))));
        assert!(MeijerGSpec::new(2, 0, vec![], vec![0.0]).is_err());
    }

    #[test]
    fn inversion_identity() {
        let s = spec(1, 2, &[-0.5, 1.0], &[4.0, 0.0, -1.5]);
        let o = EvalOptions::default();
        for x in [0.3, 2.0, 9.0] {
            let g = meijer_g(&s, x, &o).unwrap().value;
            let gi = meijer_g(&s.inverted(), 1.0 / x, &o).unwrap().value;
            assert!(rel(g, gi) < 1e-9, "x={x}");
        }
    }

    #[test]
    fn large_argument_uses_contour() {
        // G^{1,2}_{2,3}[X | 1-Ψ, 1; λ, 0, -Ψ] = (γ(λ,X) - X^{-Ψ} γ(λ+Ψ,X))/Ψ
        use crate::specfun::gamma::lower_incomplete_gamma;
        let (lam, psi) = (4.0, 1.5);
        let s = spec(1, 2, &[1.0 - psi, 1.0], &[lam, 0.0, -psi]);
        for x in [30.0, 300.0, 1e5] {
            let want = (lower_incomplete_gamma(lam, x).unwrap() - x.powf(-psi) * lower_incomplete_gamma(lam + psi, x).unwrap()) / psi;
            let v = meijer_g(&s, x, &EvalOptions::default()).unwrap();
            assert!(rel(v.value, want) < 1e-8, "x={x}: {v:?} vs {want}");
        }
    }

    #[test]
    fn leading_terms_match_small_argument_limit() {
        let s = spec(1, 2, &[-0.5, 1.0], &[4.0, 0.0, -1.5]);
        let o = EvalOptions::default();
        let x = 1e-4;
        let g = meijer_g(&s, x, &o).unwrap().value;
        let lead = leading_terms_small(&s, x, &o).unwrap();
        assert!(rel(lead, g) < 1e-3);
    }
}
