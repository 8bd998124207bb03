//! Standard normal density, distribution and quantile functions.

use crate::{Error, Probability, Result};

#[allow(clippy::excessive_precision)]
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_868_5;

/// Standard normal density, unchecked.
#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, unchecked. Infinite arguments map to 0 and 1; NaN
/// propagates.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
#[inline]
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

/// Standard normal quantile, unchecked: Wichura's AS241 followed by one
/// Newton step against [`cdf`]. Returns `-inf`/`+inf` at 0 and 1 and NaN
/// outside `[0, 1]`.
pub fn quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let x = as241(p);
    // Residual on whichever tail is smaller, to avoid cancellation near 1.
    let resid = if p < 0.5 { cdf(x) - p } else { (1.0 - p) - sf(x) };
    let dens = pdf(x);
    if dens > 0.0 {
        x - resid / dens
    } else {
        x
    }
}

#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    const SPLIT1: f64 = 0.425;
    const SPLIT2: f64 = 5.0;
    const CONST1: f64 = 0.180625;
    const CONST2: f64 = 1.6;

    const A: [f64; 8] = [
        3.387_132_872_796_366_608_0e0,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083_0e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061_0e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561_0e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34e0,
        4.630_337_846_156_545_295_90e0,
        5.769_497_221_460_691_405_50e0,
        3.647_848_324_763_204_605_04e0,
        1.270_458_252_452_368_382_58e0,
        2.417_807_251_774_506_117_70e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_40e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87e0,
        1.676_384_830_183_803_849_40e0,
        6.897_673_349_851_000_045_50e-1,
        1.481_039_764_274_800_745_90e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946_00e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_20e0,
        5.463_784_911_164_114_369_90e0,
        1.784_826_539_917_291_335_80e0,
        2.965_605_718_285_048_912_30e-1,
        2.653_218_952_657_612_309_30e-2,
        1.242_660_947_388_078_438_60e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_90e-1,
        1.369_298_809_227_358_053_10e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591_00e-4,
        1.846_318_317_510_054_681_80e-5,
        1.421_511_758_316_445_888_70e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    fn horner(c: &[f64; 8], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
    }

    let q = p - 0.5;
    if q.abs() <= SPLIT1 {
        let r = CONST1 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= SPLIT2 {
        r -= CONST2;
        horner(&C, r) / horner(&D, r)
    } else {
        r -= SPLIT2;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Standard normal density φ(x).
pub fn norm_pdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("norm_pdf: non-finite input {x}")));
    }
    Ok(pdf(x))
}

/// Standard normal CDF Φ(x). Accepts ±∞.
pub fn norm_cdf(x: f64) -> Result<Probability> {
    if x.is_nan() {
        return Err(Error::domain("norm_cdf: NaN input"));
    }
    Ok(Probability::clamped(cdf(x)))
}

/// Standard normal quantile Φ⁻¹(p) for `0 < p < 1`.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("norm_quantile: p = {p} is not in (0, 1)")));
    }
    Ok(quantile(p))
}
