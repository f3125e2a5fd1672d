//! Error functions after W. J. Cody's rational Chebyshev approximations
//! (netlib specfun CALERF), which evaluate erf, erfc and the scaled
//! complement erfcx(x) = exp(x²)·erfc(x) to near machine precision.

const INV_SQRT_PI: f64 = 5.641_895_835_477_562_869_5e-1;
const THRESH: f64 = 0.46875;
const X_SMALL: f64 = 1.11e-16;
const X_BIG: f64 = 26.543;
const X_HUGE: f64 = 6.71e7;
const X_MAX: f64 = 2.53e307;
const X_NEG: f64 = -26.628;

const A: [f64; 5] = [
    3.161_123_743_870_565_6,
    1.138_641_541_510_501_56e2,
    3.774_852_376_853_020_21e2,
    3.209_377_589_138_469_47e3,
    1.857_777_061_846_031_53e-1,
];
const B: [f64; 4] = [
    2.360_129_095_234_412_09e1,
    2.440_246_379_344_441_73e2,
    1.282_616_526_077_372_28e3,
    2.844_236_833_439_170_62e3,
];
const C: [f64; 9] = [
    5.641_884_969_886_700_89e-1,
    8.883_149_794_388_375_94,
    6.611_919_063_714_162_95e1,
    2.986_351_381_974_001_31e2,
    8.819_522_212_417_690_9e2,
    1.712_047_612_634_070_58e3,
    2.051_078_377_826_071_47e3,
    1.230_339_354_797_997_25e3,
    2.153_115_354_744_038_46e-8,
];
const D: [f64; 8] = [
    1.574_492_611_070_983_47e1,
    1.176_939_508_913_124_99e2,
    5.371_811_018_620_098_58e2,
    1.621_389_574_566_690_19e3,
    3.290_799_235_733_459_63e3,
    4.362_619_090_143_247_16e3,
    3.439_367_674_143_721_64e3,
    1.230_339_354_803_749_42e3,
];
const P: [f64; 6] = [
    3.053_266_349_612_323_44e-1,
    3.603_448_999_498_044_39e-1,
    1.257_817_261_112_292_46e-1,
    1.608_378_514_874_227_66e-2,
    6.587_491_615_298_378_03e-4,
    1.631_538_713_730_209_78e-2,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_42,
    1.872_952_849_923_460_47,
    5.279_051_029_514_284_12e-1,
    6.051_834_131_244_131_91e-2,
    2.335_204_976_268_691_85e-3,
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Erf,
    Erfc,
    Erfcx,
}

/// exp(-y²) evaluated in two pieces so the exponent is exact for large y.
fn exp_neg_sq(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

fn calerf(x: f64, kind: Kind) -> f64 {
    let y = x.abs();
    let mut result;
    if y <= THRESH {
        let ysq = if y > X_SMALL { y * y } else { 0.0 };
        let mut num = A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + A[i]) * ysq;
            den = (den + B[i]) * ysq;
        }
        result = x * (num + A[3]) / (den + B[3]);
        if kind != Kind::Erf {
            result = 1.0 - result;
        }
        if kind == Kind::Erfcx {
            result *= ysq.exp();
        }
        return result;
    } else if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        result = (num + C[7]) / (den + D[7]);
        if kind != Kind::Erfcx {
            result *= exp_neg_sq(y);
        }
    } else {
        result = 0.0;
        let saturated = y >= X_BIG && (kind != Kind::Erfcx || y >= X_MAX);
        if y >= X_BIG && y >= X_HUGE {
            if kind == Kind::Erfcx && y < X_MAX {
                result = INV_SQRT_PI / y;
            }
        } else if !saturated {
            let ysq = 1.0 / (y * y);
            let mut num = P[5] * ysq;
            let mut den = ysq;
            for i in 0..4 {
                num = (num + P[i]) * ysq;
                den = (den + Q[i]) * ysq;
            }
            result = ysq * (num + P[4]) / (den + Q[4]);
            result = (INV_SQRT_PI - result) / y;
            if kind != Kind::Erfcx {
                result *= exp_neg_sq(y);
            }
        }
    }

    match kind {
        Kind::Erf => {
            result = (0.5 - result) + 0.5;
            if x < 0.0 {
                -result
            } else {
                result
            }
        }
        Kind::Erfc => {
            if x < 0.0 {
                2.0 - result
            } else {
                result
            }
        }
        Kind::Erfcx => {
            if x < 0.0 {
                if x < X_NEG {
                    f64::MAX
                } else {
                    let ysq = (x * 16.0).trunc() / 16.0;
                    let del = (x - ysq) * (x + ysq);
                    let e = (ysq * ysq).exp() * del.exp();
                    (e + e) - result
                }
            } else {
                result
            }
        }
    }
}

pub fn erf(x: f64) -> f64 {
    calerf(x, Kind::Erf)
}

pub fn erfc(x: f64) -> f64 {
    calerf(x, Kind::Erfc)
}

/// Scaled complementary error function exp(x²)·erfc(x).
///
/// Saturates at `f64::MAX` for x < -26.628 where the true value overflows.
pub fn erfcx(x: f64) -> f64 {
    calerf(x, Kind::Erfcx)
}
