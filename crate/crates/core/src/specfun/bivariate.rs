//! Bivariate Meijer G-function as a double Mellin–Barnes integral.
//!
//! G[x, y] = (1/(2πi)²) ∫∫ H_0(−s−t) H_1(s) H_2(t) x^s y^t ds dt,
//!
//! where H_k is the kernel of panel k (see [`MeijerGSpec::ln_kernel`]).
//! With an empty outer panel the function factors into G_1(x) G_2(y).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, Tolerance};
use crate::specfun::meijer::{EvalOptions, MeijerGSpec};
use crate::specfun::mellin::fundamental_strip;

#[derive(Debug, Clone, PartialEq)]
pub struct BivariateGSpec {
    pub outer: MeijerGSpec,
    pub inner1: MeijerGSpec,
    pub inner2: MeijerGSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateValue {
    pub value: f64,
    pub abs_err: f64,
    /// Truncation of the (u, v) integration box.
    pub extent: (f64, f64),
    pub flagged: bool,
}

impl BivariateGSpec {
    pub fn new(outer: MeijerGSpec, inner1: MeijerGSpec, inner2: MeijerGSpec) -> Result<Self> {
        for p in [&outer, &inner1, &inner2] {
            p.check_poles()?;
        }
        Ok(BivariateGSpec { outer, inner1, inner2 })
    }

    /// ∫_0^∞ γ^{α−1} G_A(σγ) G_B(βγ) G_C(ωγ) dγ = σ^{−α} G[β/σ, ω/σ] of the returned spec.
    pub fn triple_product(a: &MeijerGSpec, b: &MeijerGSpec, c: &MeijerGSpec, alpha: f64) -> Result<Self> {
        BivariateGSpec::new(a.shifted(alpha), b.clone(), c.clone())
    }

    /// Contour abscissae (c_s, c_t) maximizing the smallest distance to a pole family.
    fn abscissae(&self) -> Result<(f64, f64, f64)> {
        let (l1, h1) = fundamental_strip(&self.inner1);
        let (l2, h2) = fundamental_strip(&self.inner2);
        // outer kernel at u = −s−t: right poles need −(s+t) < b, left poles −(s+t) > a−1
        let (l0, h0) = fundamental_strip(&self.outer);
        let margin = |cs: f64, ct: f64| {
            let u = -(cs + ct);
            [cs - l1, h1 - cs, ct - l2, h2 - ct, u - l0, h0 - u]
                .into_iter()
                .fold(f64::INFINITY, f64::min)
                .min(3.0)
        };
        let center = |lo: f64, hi: f64| match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            _ => 0.0,
        };
        let (mut cs, mut ct) = (center(l1, h1), center(l2, h2));
        let mut best = margin(cs, ct);
        let mut step = 2.0;
        while step > 1e-6 {
            let mut moved = false;
            for (ds, dt) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step), (step, -step), (-step, step), (step, step), (-step, -step)] {
                let m = margin(cs + ds, ct + dt);
                if m > best + 1e-12 {
                    best = m;
                    cs += ds;
                    ct += dt;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if !(best > 0.0) {
            return Err(Error::non_convergence(
                format!("bivariate G: no admissible contour pair (best margin {best})"),
                f64::NAN,
                f64::INFINITY,
            ));
        }
        Ok((cs, ct, best))
    }
}

/// Evaluate the bivariate G-function at x, y > 0 by nested adaptive quadrature
/// along the vertical contours.
pub fn bivariate_meijer_g(spec: &BivariateGSpec, x: f64, y: f64, opts: &EvalOptions) -> Result<BivariateValue> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Domain(format!("bivariate G needs x, y > 0 (x={x}, y={y})")));
    }
    let (cs, ct, _) = spec.abscissae()?;
    let (lx, ly) = (x.ln(), y.ln());
    let ln_f = |u: f64, v: f64| -> Option<Complex64> {
        let s = Complex64::new(cs, u);
        let t = Complex64::new(ct, v);
        Some(spec.outer.ln_kernel(-s - t)? + spec.inner1.ln_kernel(s)? + spec.inner2.ln_kernel(t)? + s * lx + t * ly)
    };
    let l0 = ln_f(0.0, 0.0).map(|z| z.re).ok_or_else(|| Error::non_convergence("bivariate G: kernel vanishes at the contour origin", f64::NAN, f64::INFINITY))?;
    let mag = |u: f64, v: f64| ln_f(u, v).map(|z| (z.re - l0).exp()).unwrap_or(0.0);
    let cutoff = 1e-16;
    // extent along u: scan a few v rows
    let reach = |probe: &dyn Fn(f64) -> f64| {
        let mut t = 1.0;
        while t < 2e3 && (probe(t) > cutoff || probe(1.5 * t) > cutoff) {
            t *= 1.25;
        }
        t
    };
    let tv = reach(&|v: f64| (-8..=8).map(|k| mag(k as f64 * v / 4.0, v).max(mag(k as f64 * v / 4.0, -v))).fold(0.0, f64::max));
    let tu = reach(&|u: f64| (-8..=8).map(|k| mag(u, k as f64 * u / 4.0)).fold(0.0, f64::max));
    if tu >= 2e3 || tv >= 2e3 {
        return Err(Error::non_convergence("bivariate G: integrand does not decay along the contours", f64::NAN, f64::INFINITY));
    }
    let tol = Tolerance { abs: 1e-3 * opts.target_rel_tol * 1e-4, rel: 0.1 * opts.target_rel_tol };
    let panels = |t: f64, lo: f64| -> Vec<f64> {
        let n = (((t - lo) / 1.0).ceil() as usize).clamp(2, 4000);
        (0..=n).map(|i| lo + (t - lo) * i as f64 / n as f64).collect()
    };
    let mut inner_err = 0.0;
    let mut converged = true;
    let mut inner = |v: f64| {
        let r = integrate_breaks(
            |u: f64| ln_f(u, v).map(|z| (z - l0).exp().re).unwrap_or(0.0),
            &panels(tu, 0.0),
            tol,
            200_000,
        );
        inner_err += r.abs_err;
        converged &= r.converged;
        r.value
    };
    let outer = integrate_breaks(&mut inner, &panels(tv, -tv), tol, 100_000);
    let scale = l0.exp() / (2.0 * PI * PI);
    let value = outer.value * scale;
    let abs_err = (outer.abs_err + inner_err * (2.0 * tv) / (outer.evals.max(1) as f64)) * scale + cutoff * scale * tu * tv;
    let flagged = !(outer.converged && converged) || abs_err > opts.target_rel_tol * value.abs();
    if !value.is_finite() {
        return Err(Error::non_convergence("bivariate G: non-finite result", value, f64::INFINITY));
    }
    Ok(BivariateValue { value, abs_err, extent: (tu, tv), flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_positive_axis;
    use crate::specfun::meijer::meijer_g;

    fn spec(m: usize, n: usize, a: &[f64], b: &[f64]) -> MeijerGSpec {
        MeijerGSpec::new(m, n, a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn separable_case_factors() {
        let o = EvalOptions::default().with_tol(1e-7);
        let g1 = spec(1, 1, &[0.0], &[0.0]);
        let g2 = spec(1, 0, &[], &[0.5]);
        let b = BivariateGSpec::new(spec(0, 0, &[], &[]), g1.clone(), g2.clone()).unwrap();
        let (x, y) = (0.7, 1.8);
        let v = bivariate_meijer_g(&b, x, y, &o).unwrap();
        let want = meijer_g(&g1, x, &o).unwrap().value * meijer_g(&g2, y, &o).unwrap().value;
        assert!(((v.value - want) / want).abs() < 1e-6, "{v:?} vs {want}");
    }

    #[test]
    fn triple_product_matches_quadrature() {
        // ∫ γ^{α-1} e^{-σγ} (1+βγ)^{-1} G^{1,2}_{2,3}(ωγ) dγ
        let o = EvalOptions::default().with_tol(1e-7);
        let a = spec(1, 0, &[], &[0.0]);
        let b = spec(1, 1, &[0.0], &[0.0]);
        let c = spec(1, 2, &[-0.5, 1.0], &[4.0, 0.0, -1.5]);
        let (alpha, sigma, beta, omega) = (1.6, 1.2, 0.5, 0.9);
        let direct = integrate_positive_axis(
            |g| {
                g.powf(alpha - 1.0)
                    * (-sigma * g).exp()
                    * meijer_g(&b, beta * g, &o).unwrap().value
                    * meijer_g(&c, omega * g, &o).unwrap().value
            },
            1.0,
            Tolerance::rel(1e-10),
            400_000,
        )
        .value;
        let bs = BivariateGSpec::triple_product(&a, &b, &c, alpha).unwrap();
        let v = bivariate_meijer_g(&bs, beta / sigma, omega / sigma, &o).unwrap();
        let closed = sigma.powf(-alpha) * v.value;
        assert!(((closed - direct) / direct).abs() < 1e-6, "{closed} vs {direct} ({v:?})");
    }

    #[test]
    fn continuous_in_x() {
        let o = EvalOptions::default().with_tol(1e-6);
        let bs = BivariateGSpec::triple_product(&spec(1, 0, &[], &[0.0]), &spec(1, 1, &[0.0], &[0.0]), &spec(1, 0, &[], &[0.3]), 1.2).unwrap();
        let xs: Vec<f64> = (0..=20).map(|i| 0.5 + 0.05 * i as f64).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| bivariate_meijer_g(&bs, x, 0.8, &o).unwrap().value).collect();
        for w in vals.windows(3) {
            // second differences stay small relative to the values
            assert!((w[0] - 2.0 * w[1] + w[2]).abs() < 1e-2 * w[1].abs());
        }
    }
}
