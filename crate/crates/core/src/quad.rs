//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use crate::scalar::Real;

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

const MAX_INTERVALS: usize = 2000;

struct Panel<T> {
    lo: T,
    hi: T,
    value: T,
    err: T,
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T) -> Panel<T> {
    let half = (hi - lo) * T::lit(0.5);
    let center = (lo + hi) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut absolute = fc.abs() * T::lit(WGK[7]);
    for i in 0..7 {
        let dx = half * T::lit(XGK[i]);
        let (left, right) = (f(center - dx), f(center + dx));
        kronrod = kronrod + (left + right) * T::lit(WGK[i]);
        absolute = absolute + (left.abs() + right.abs()) * T::lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + (left + right) * T::lit(WG[i / 2]);
        }
    }
    let half = half.abs();
    // Differences below the rounding level of the samples are not resolvable.
    let floor = T::lit(50.0) * T::epsilon() * absolute * half;
    let err = ((kronrod - gauss) * half).abs().max(floor);
    Panel { lo, hi, value: kronrod * (hi - lo) * T::lit(0.5), err }
}

/// ∫_a^b f with absolute-or-relative tolerance `tol`.
///
/// Globally adaptive: the panel with the largest error estimate is bisected
/// until the summed estimate meets the tolerance, the estimate reaches the
/// rounding floor of the integrand, or `MAX_INTERVALS` panels are in use.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> T {
    let mut panels = vec![gk15(&mut f, a, b)];
    loop {
        let total = panels.iter().fold(T::zero(), |acc, p| acc + p.value);
        let err = panels.iter().fold(T::zero(), |acc, p| acc + p.err);
        if !(err > tol * total.abs().max(T::one())) || panels.len() >= MAX_INTERVALS {
            return total;
        }
        let worst = (0..panels.len()).max_by(|&i, &j| panels[i].err.partial_cmp(&panels[j].err).unwrap()).unwrap();
        let mid = (panels[worst].lo + panels[worst].hi) * T::lit(0.5);
        if mid == panels[worst].lo || mid == panels[worst].hi {
            return total;
        }
        let Panel { lo, hi, .. } = panels.swap_remove(worst);
        panels.push(gk15(&mut f, lo, mid));
        panels.push(gk15(&mut f, mid, hi));
    }
}
