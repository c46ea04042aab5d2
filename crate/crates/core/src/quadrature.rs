//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and |Kronrod - Gauss| error estimate on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Integrate `f` over `[a, b]`, bisecting until the summed error estimate is
/// below `max(abs_tol, rel_tol * |value|)` or `max_intervals` is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    integrate_with_breaks(f, a, b, &[], abs_tol, rel_tol)
}

/// As [`integrate`], with known kinks or discontinuities as initial breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> QuadResult {
    const MAX_INTERVALS: usize = 4096;
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, intervals: 0 };
    }
    if a > b {
        let r = integrate_with_breaks(f, b, a, breaks, abs_tol, rel_tol);
        return QuadResult { value: -r.value, ..r };
    }
    let mut nodes: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    // (a, b, value, error)
    let mut pieces: Vec<(f64, f64, f64, f64)> = nodes
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let value: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) || pieces.len() >= MAX_INTERVALS {
            return QuadResult { value, error, intervals: pieces.len() };
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval no longer splittable in floating point
            let value: f64 = pieces.iter().map(|p| p.2).sum::<f64>() + gk15(&f, lo, hi).0;
            return QuadResult { value, error, intervals: pieces.len() + 1 };
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|x: f64| (-x).exp(), 0.0, 40.0, 1e-13, 1e-13);
        assert!((r.value - (1.0 - (-40f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn discontinuity_with_breakpoints() {
        let f = |x: f64| if x > 0.3 && x < 0.7 { 2.0 } else { 0.0 };
        let r = integrate_with_breaks(f, 0.0, 1.0, &[0.3, 0.7], 1e-14, 1e-14);
        assert!((r.value - 0.8).abs() < 1e-12);
    }

    #[test]
    fn reversed_bounds() {
        let r = integrate(|x| x, 1.0, 0.0, 1e-14, 1e-14);
        assert!((r.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn periodic_integrand() {
        let f = |x: f64| 1.0 + (1.5 * std::f64::consts::PI + 2.0 * std::f64::consts::PI * x).sin();
        let r = integrate(f, 0.0, 8.0, 1e-12, 1e-12);
        assert!((r.value - 8.0).abs() < 1e-9);
    }
}
