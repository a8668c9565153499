//! Closed-form Mellin integrals of G-function products.

use crate::error::{Error, Result};
use crate::specfun::meijer::MeijerGSpec;

/// Open interval (lo, hi) of contour abscissae separating the pole families.
pub fn fundamental_strip(spec: &MeijerGSpec) -> (f64, f64) {
    let hi = spec.b()[..spec.m()].iter().copied().fold(f64::INFINITY, f64::min);
    let lo = spec.a()[..spec.n()].iter().map(|a| a - 1.0).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Parameters of the G-function produced by
///
/// ∫_0^∞ τ^{α−1} G_f(στ) G_g(ωτ) dτ = σ^{−α} G(ω/σ).
///
/// Fails when no common contour exists, i.e. when the integral diverges for
/// these parameters.
pub fn mellin_product(f: &MeijerGSpec, g: &MeijerGSpec, alpha: f64) -> Result<MeijerGSpec> {
    let (mf, nf) = (f.m(), f.n());
    let (mg, ng) = (g.m(), g.n());
    let shift = |v: &f64| 1.0 - alpha - v;
    let mut a: Vec<f64> = g.a()[..ng].to_vec();
    a.extend(f.b()[..mf].iter().map(shift));
    a.extend(f.b()[mf..].iter().map(shift));
    a.extend_from_slice(&g.a()[ng..]);
    let mut b: Vec<f64> = g.b()[..mg].to_vec();
    b.extend(f.a()[..nf].iter().map(shift));
    b.extend(f.a()[nf..].iter().map(shift));
    b.extend_from_slice(&g.b()[mg..]);
    let out = MeijerGSpec::new(mg + nf, ng + mf, a, b)?;
    let (lo, hi) = fundamental_strip(&out);
    if !(lo < hi) {
        return Err(Error::non_convergence(
            format!("Mellin product integral diverges: empty strip ({lo}, {hi})"),
            f64::NAN,
            f64::INFINITY,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_positive_axis, Tolerance};
    use crate::specfun::meijer::{meijer_g, EvalOptions};

    fn spec(m: usize, n: usize, a: &[f64], b: &[f64]) -> MeijerGSpec {
        MeijerGSpec::new(m, n, a.to_vec(), b.to_vec()).unwrap()
    }

    fn check(f: &MeijerGSpec, g: &MeijerGSpec, alpha: f64, sigma: f64, omega: f64) {
        let o = EvalOptions::default();
        let direct = integrate_positive_axis(
            |t| {
                t.powf(alpha - 1.0)
                    * meijer_g(f, sigma * t, &o).unwrap().value
                    * meijer_g(g, omega * t, &o).unwrap().value
            },
            1.0,
            Tolerance::rel(1e-11),
            400_000,
        );
        let h = mellin_product(f, g, alpha).unwrap();
        let closed = sigma.powf(-alpha) * meijer_g(&h, omega / sigma, &o).unwrap().value;
        assert!(((closed - direct.value) / direct.value).abs() < 1e-7, "{closed} vs {}", direct.value);
    }

    #[test]
    fn exponential_times_rational() {
        check(&spec(1, 0, &[], &[0.0]), &spec(1, 1, &[0.0], &[0.0]), 1.7, 0.8, 2.5);
    }

    #[test]
    fn cdf_times_density_kernels() {
        // F-type kernel against a gamma density kernel, as in the outage integrals
        let f = spec(1, 2, &[-0.5, 1.0], &[4.0, 0.0, -1.5]);
        let g = spec(1, 0, &[], &[0.0]);
        check(&f, &g, 2.3, 1.3, 0.6);
        let f2 = spec(2, 1, &[1.0 - 0.8], &[0.0, 0.5, -0.8]);
        check(&f2, &spec(1, 1, &[0.0], &[0.0]), 1.4, 0.7, 1.9);
    }

    #[test]
    fn divergent_product_is_reported() {
        // ∫ τ^{-3} e^{-τ} dτ diverges at the origin
        let r = mellin_product(&spec(1, 0, &[], &[0.0]), &spec(1, 1, &[0.0], &[0.0]), -2.0);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }
}
