//! Adaptive Gauss–Kronrod (10/21) quadrature with global subdivision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_372_620,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Absolute/relative stopping rule: stop once err ≤ max(abs, rel·|value|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn rel(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[10];
    let mut g = 0.0;
    let mut abs_k = k.abs();
    for i in 0..10 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += WGK[i] * (f1 + f2);
        abs_k += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    let mut err = ((k - g) * h).abs();
    // QUADPACK-style error scaling
    let resasc = abs_k * h.abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * resasc;
    if round > err {
        err = round;
    }
    if !value.is_finite() {
        return (value, f64::INFINITY);
    }
    (value, err)
}

/// Integrate `f` over consecutive intervals delimited by `points` (at least two, increasing).
pub fn integrate_breaks<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tolerance, max_evals: usize) -> QuadResult {
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in points.windows(2) {
        let (v, e) = gk21(&mut f, w[0], w[1]);
        evals += 21;
        heap.push(Segment { a: w[0], b: w[1], value: v, err: e });
    }
    loop {
        let (value, err) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
        if err <= tol.abs.max(tol.rel * value.abs()) || !err.is_finite() && !value.is_finite() {
            return QuadResult { value, abs_err: err, evals, converged: err.is_finite() };
        }
        if evals + 42 > max_evals {
            return QuadResult { value, abs_err: err, evals, converged: false };
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at machine resolution; keep it and stop refining
            heap.push(Segment { err: 0.0, ..worst });
            let (value, err) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
            return QuadResult { value, abs_err: err + worst.err, evals, converged: false };
        }
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        evals += 42;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
}

/// Integrate `f` over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance, max_evals: usize) -> QuadResult {
    integrate_breaks(f, &[a, b], tol, max_evals)
}

/// ∫_0^∞ f(x) dx for a positive-axis integrand, integrating g(u) = f(e^u) e^u
/// in unit panels of u walking outward from ln(center) until the panel
/// contributions fall below the tolerance.
pub fn integrate_positive_axis<F: FnMut(f64) -> f64>(mut f: F, center: f64, tol: Tolerance, max_evals: usize) -> QuadResult {
    let u0 = center.ln();
    let mut g = |u: f64| {
        let x = u.exp();
        let v = f(x) * x;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let width = 2.0;
    let core = integrate_breaks(&mut g, &[u0 - 4.0 * width, u0 - 2.0 * width, u0, u0 + 2.0 * width, u0 + 4.0 * width], tol, max_evals);
    let mut total = core.value;
    let mut err = core.abs_err;
    let mut evals = core.evals;
    let mut converged = core.converged;
    for dir in [-1.0, 1.0] {
        let mut quiet = 0;
        let mut k = 4.0;
        while quiet < 3 && k * width < 700.0 {
            let (lo, hi) = if dir > 0.0 { (u0 + k * width, u0 + (k + 1.0) * width) } else { (u0 - (k + 1.0) * width, u0 - k * width) };
            let r = integrate(&mut g, lo, hi, Tolerance { abs: tol.abs, rel: tol.rel }, max_evals.saturating_sub(evals).max(42));
            total += r.value;
            err += r.abs_err;
            evals += r.evals;
            converged &= r.converged;
            if r.value.abs() <= 1e-3 * tol.rel * total.abs() + tol.abs * 1e-3 {
                quiet += 1;
            } else {
                quiet = 0;
            }
            k += 1.0;
        }
    }
    QuadResult { value: total, abs_err: err, evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_on_monomials() {
        for k in 0..=31 {
            let r = gk21(&mut |x: f64| x.powi(k), -1.0, 1.0).0;
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((r - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn smooth_and_peaked_integrands() {
        let r = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, Tolerance::rel(1e-13), 10_000);
        assert!((r.value - 2.0).abs() < 1e-13 && r.converged);
        let r = integrate(|x: f64| 1.0 / (1e-6 + x * x), -1.0, 1.0, Tolerance::rel(1e-10), 100_000);
        let exact = 2.0 * (1.0 / 1e-3f64) * (1.0 / 1e-3f64).atan();
        assert!(((r.value - exact) / exact).abs() < 1e-9, "{} vs {exact}", r.value);
    }

    #[test]
    fn positive_axis_integrals() {
        let r = integrate_positive_axis(|x: f64| (-x).exp(), 1.0, Tolerance::rel(1e-12), 100_000);
        assert!((r.value - 1.0).abs() < 1e-12);
        // heavy tail: ∫ 1/(1+x)^2.5 = 1/1.5
        let r = integrate_positive_axis(|x: f64| (1.0 + x).powf(-2.5), 1e3, Tolerance::rel(1e-11), 100_000);
        assert!((r.value - 1.0 / 1.5).abs() < 1e-10, "{}", r.value);
    }
}
