//! End-to-end SNR of the decode-and-forward relay under the min-SNR
//! approximation γ_eq ≈ min(γ_R, γ_D).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rf::{RfDerivedCoeffs, RfLinkParams, StatRoute};
use crate::specfun::meijer::EvalOptions;
use crate::uowc::{gamma_approx, RisCascadeStats, UowcLinkParams};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DualHopParams {
    /// Source to relay.
    pub rf: RfLinkParams,
    /// Relay to destination through the surface.
    pub uowc: UowcLinkParams,
}

/// Both hops with their derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DualHop {
    pub rf: RfDerivedCoeffs,
    pub uowc: RisCascadeStats,
}

impl DualHop {
    pub fn new(params: &DualHopParams) -> Result<Self> {
        Ok(DualHop { rf: RfDerivedCoeffs::new(&params.rf)?, uowc: gamma_approx(&params.uowc)? })
    }

    /// F_R + F_D − F_R F_D.
    pub fn eq_cdf(&self, g: f64, route: StatRoute, opts: &EvalOptions) -> Result<f64> {
        check(g)?;
        let fr = self.rf.cdf(g, route, opts)?.clamp(0.0, 1.0);
        if fr >= 1.0 {
            return Ok(1.0);
        }
        let fd = self.uowc.cdf(g, route, opts)?.clamp(0.0, 1.0);
        Ok(1.0 - (1.0 - fr) * (1.0 - fd))
    }

    /// Sum of the per-hop high-SNR forms; the product term is of higher order.
    pub fn eq_cdf_asymptotic(&self, g: f64) -> Result<f64> {
        check(g)?;
        Ok(self.rf.cdf_asymptotic(g)? + self.uowc.cdf_asymptotic(g)?)
    }

    pub fn diversity_order(&self) -> f64 {
        self.rf.diversity_order().min(self.uowc.diversity_order())
    }
}

fn check(g: f64) -> Result<()> {
    if g >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("SNR must be >= 0, got {g}")))
    }
}

pub fn eq_cdf(g: f64, params: &DualHopParams) -> Result<f64> {
    DualHop::new(params)?.eq_cdf(g, StatRoute::Reduced, &EvalOptions::default())
}

pub fn eq_cdf_asymptotic(g: f64, params: &DualHopParams) -> Result<f64> {
    DualHop::new(params)?.eq_cdf_asymptotic(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hop() -> DualHop {
        DualHop::new(&DualHopParams::default()).unwrap()
    }

    #[test]
    fn zero_and_bounds() {
        let h = hop();
        let o = EvalOptions::default();
        assert_eq!(h.eq_cdf(0.0, StatRoute::Reduced, &o).unwrap(), 0.0);
        assert_eq!(h.eq_cdf_asymptotic(0.0).unwrap(), 0.0);
        for g in [0.01, 0.3, 1.0, 4.0, 20.0, 200.0] {
            let fr = h.rf.cdf(g, StatRoute::Reduced, &o).unwrap();
            let fd = h.uowc.cdf(g, StatRoute::Reduced, &o).unwrap();
            let f = h.eq_cdf(g, StatRoute::Reduced, &o).unwrap();
            assert!(f >= fr.max(fd) - 1e-15 && f <= fr + fd + 1e-15);
        }
    }

    #[test]
    fn routes_agree() {
        let h = hop();
        let o = EvalOptions::default();
        for g in [0.05, 2.0, 30.0] {
            let a = h.eq_cdf(g, StatRoute::Reduced, &o).unwrap();
            let b = h.eq_cdf(g, StatRoute::MeijerG, &o).unwrap();
            assert!((a - b).abs() < 1e-8 * a.max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn dominant_hop_asymptote() {
        // RF 30 dB weaker than the optical hop
        let mut p = DualHopParams::default();
        p.rf.gbar = 1e4;
        p.uowc.gbar = p.rf.gbar * 1e3 * 1e3;
        let h = DualHop::new(&p).unwrap();
        let g = 1e-2;
        let asym = h.eq_cdf_asymptotic(g).unwrap();
        let weak = h.rf.cdf_asymptotic(g).unwrap();
        assert!((asym / weak - 1.0).abs() < 0.05, "{asym} {weak}");
    }
}
