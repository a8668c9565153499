//! Modified Bessel function of the first kind and its finite-p approximation.

use crate::error::{Error, Result};
use crate::specfun::gamma::{ln_gamma, ln_gamma_sign};

const LN_MAX: f64 = 709.78;

/// ln I_v(x) for v ≥ -1, x ≥ 0. Returns -inf where I_v(x) = 0.
pub fn ln_bessel_i(v: f64, x: f64) -> Result<f64> {
    if !(v >= -1.0) || !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_i needs v >= -1, x >= 0 (v={v}, x={x})")));
    }
    // integer negative order: I_{-n} = I_n
    let v = if v < 0.0 && v == v.round() { -v } else { v };
    if x == 0.0 {
        return Ok(if v == 0.0 { 0.0 } else if v > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY });
    }
    // Σ_k (x/2)^{v+2k} / (k! Γ(v+k+1)); all terms positive for v > -1
    let h = 0.5 * x;
    let lg = ln_gamma_sign(v + 1.0)?.0;
    let ln_t0 = v * h.ln() - lg;
    let q = h * h;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_scale = 0.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (v + k));
        sum += term;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            ln_scale += 280.0 * std::f64::consts::LN_10;
        }
        if term < sum * 1e-17 && k > h {
            break;
        }
    }
    Ok(ln_t0 + sum.ln() + ln_scale)
}

/// I_v(x) for v ≥ -1, x ≥ 0.
pub fn bessel_i(v: f64, x: f64) -> Result<f64> {
    let l = ln_bessel_i(v, x)?;
    if l > LN_MAX {
        return Err(Error::Overflow { ln_value: l });
    }
    Ok(l.exp())
}

/// ln V(k, p, v) = ln[Γ(p+k) p^{1-2k} / (Γ(k+1) Γ(p-k+1) Γ(v+k+1))] for 0 ≤ k ≤ p.
pub fn ln_truncation_coefficient(k: u32, p: u32, v: f64) -> Result<f64> {
    let (k, pf) = (k as f64, p as f64);
    Ok(ln_gamma(pf + k)? + (1.0 - 2.0 * k) * pf.ln()
        - ln_gamma(k + 1.0)?
        - ln_gamma(pf - k + 1.0)?
        - ln_gamma(v + k + 1.0)?)
}

/// Finite-p approximation Σ_{k=0}^{p} V(k,p,v) (x/2)^{v+2k} of I_v(x).
pub fn bessel_i_truncated(v: f64, x: f64, p: u32) -> Result<f64> {
    if p < 1 {
        return Err(Error::Domain("truncation order p must be >= 1".into()));
    }
    if !(v > -1.0) || !(x >= 0.0) {
        return Err(Error::Domain(format!("bessel_i_truncated needs v > -1, x >= 0 (v={v}, x={x})")));
    }
    let h = 0.5 * x;
    let mut sum = 0.0;
    for k in 0..=p {
        let e = v + 2.0 * k as f64;
        if h == 0.0 {
            if e == 0.0 {
                sum += ln_truncation_coefficient(k, p, v)?.exp();
            }
            continue;
        }
        sum += (ln_truncation_coefficient(k, p, v)? + e * h.ln()).exp();
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1.0, 0.0).unwrap(), 0.0);
        assert!((bessel_i_truncated(0.0, 0.0, 10).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reference_values() {
        // mpmath besseli
        assert!(rel(bessel_i(1.5, 2.0).unwrap(), 1.099_473_188_633_109_675_513_528_489_72) < 1e-14);
        assert!(rel(bessel_i(1.0, 2.0).unwrap(), 1.590_636_854_637_329_063_382_254_425) < 1e-14);
        assert!(rel(bessel_i(-1.0, 2.0).unwrap(), 1.590_636_854_637_329_063_382_254_425) < 1e-14);
        assert!(rel(bessel_i(0.0, 1.0).unwrap(), 1.266_065_877_752_008_335_598_244_625) < 1e-14);
        assert!(rel(ln_bessel_i(50.0, 700.0).unwrap(), 694.019_469_552_935_335_670_468_722_573) < 1e-13);
        assert!(rel(bessel_i(2.5, 30.0).unwrap(), 7.031_240_155_192_032_517_881_816_834_61e11) < 1e-13);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(bessel_i(0.0, 800.0), Err(Error::Overflow { .. })));
    }

    #[test]
    fn truncated_reference_values() {
        // six-term sum, mpmath
        assert!(rel(bessel_i_truncated(1.5, 0.5, 5).unwrap(), 0.096_402_615_319_627_347_358_693_271_865_7) < 1e-14);
        // the p = 20 approximation of I_1(2) is 1.94e-4 below the true value
        let t = bessel_i_truncated(1.0, 2.0, 20).unwrap();
        assert!(rel(t, 1.590_328_957_054_111_610_613_679_705_99) < 1e-14);
        assert!(rel(t, bessel_i(1.0, 2.0).unwrap()) > 1e-4);
    }

    #[test]
    fn truncated_error_shrinks_as_p_doubles() {
        for &(v, x) in &[(0.0, 1.0), (1.5, 2.0), (3.0, 4.0), (0.5, 0.3)] {
            let exact = bessel_i(v, x).unwrap();
            let mut prev = f64::INFINITY;
            for p in [5u32, 10, 20, 40, 80, 160] {
                let err = rel(bessel_i_truncated(v, x, p).unwrap(), exact);
                assert!(err < prev, "v={v} x={x} p={p}: {err} !< {prev}");
                prev = err;
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_i_truncated(1.0, 1.0, 0).is_err());
        assert!(bessel_i(-2.0, 1.0).is_err());
        assert!(bessel_i(0.0, -1.0).is_err());
    }
}
