//! Bivariate normal probabilities.
//!
//! Upper-orthant probabilities use the Drezner–Wesolowsky single-integral
//! reduction evaluated with fixed Gauss–Legendre rules (6, 12 or 20 points
//! depending on |ρ|), as refined by Genz for double precision and for |ρ|
//! close to 1. Rectangles follow by inclusion–exclusion.

use std::f64::consts::PI;

use super::normal::{cdf, sf};
use crate::{Error, Probability, Result};

// (weight, abscissa) pairs for the negative half of each symmetric rule.
#[allow(clippy::excessive_precision)]
const GL6: [(f64, f64); 3] = [
    (0.1713244923791705e+00, -0.9324695142031522e+00),
    (0.3607615730481384e+00, -0.6612093864662647e+00),
    (0.4679139345726904e+00, -0.2386191860831970e+00),
];

#[allow(clippy::excessive_precision)]
const GL12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191e+00),
    (0.1069393259953183e+00, -0.9041172563704750e+00),
    (0.1600783285433464e+00, -0.7699026741943050e+00),
    (0.2031674267230659e+00, -0.5873179542866171e+00),
    (0.2334925365383547e+00, -0.3678314989981802e+00),
    (0.2491470458134029e+00, -0.1252334085114692e+00),
];

#[allow(clippy::excessive_precision)]
const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949e+00),
    (0.4060142980038694e-01, -0.9639719272779138e+00),
    (0.6267204833410906e-01, -0.9122344282513259e+00),
    (0.8327674157670475e-01, -0.8391169718222188e+00),
    (0.1019301198172404e+00, -0.7463319064601508e+00),
    (0.1181945319615184e+00, -0.6360536807265150e+00),
    (0.1316886384491766e+00, -0.5108670019508271e+00),
    (0.1420961093183821e+00, -0.3737060887154196e+00),
    (0.1491729864726037e+00, -0.2277858511416451e+00),
    (0.1527533871307259e+00, -0.7652652113349733e-01),
];

fn rule(abs_r: f64) -> &'static [(f64, f64)] {
    if abs_r < 0.3 {
        &GL6
    } else if abs_r < 0.75 {
        &GL12
    } else {
        &GL20
    }
}

/// `P(X > h, Y > k)` for a standard bivariate normal with correlation `r`,
/// unchecked. Infinite limits are allowed; `|r| = 1` uses the degenerate
/// formulas.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return sf(k);
    }
    if k == f64::NEG_INFINITY {
        return sf(h);
    }
    if r >= 1.0 {
        return sf(h.max(k));
    }
    if r <= -1.0 {
        // Y = -X: h < X < -k.
        return (cdf(-k) - cdf(h)).max(0.0);
    }
    if r == 0.0 {
        return sf(h) * sf(k);
    }

    let quad = rule(r.abs());
    let mut hk = h * k;

    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        let mut sum = 0.0;
        for &(w, x) in quad {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                sum += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return (sum * asr / (4.0 * PI) + sf(h) * sf(k)).clamp(0.0, 1.0);
    }

    // |r| >= 0.925: expand around the degenerate correlation.
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let a_s = (1.0 - r) * (1.0 + r);
    let mut a = a_s.sqrt();
    let b_s = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let mut bvn = a
        * (-(b_s / a_s + hk) / 2.0).exp()
        * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
    if hk > -160.0 {
        let b = b_s.sqrt();
        bvn -= (-hk / 2.0).exp()
            * (2.0 * PI).sqrt()
            * cdf(-b / a)
            * b
            * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
    }
    a /= 2.0;
    for &(w, x) in quad {
        for sign in [-1.0, 1.0] {
            let xs = (a * (sign * x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let expo = -(b_s / xs + hk) / 2.0;
            if expo > -100.0 {
                bvn += a
                    * w
                    * expo.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
    }
    bvn = -bvn / (2.0 * PI);

    let out = if r > 0.0 { bvn + sf(h.max(k)) } else { -bvn + (sf(h) - sf(k)).max(0.0) };
    out.clamp(0.0, 1.0)
}

/// `P(X <= a, Y <= b)`, unchecked.
#[inline]
pub fn bvn_lower(a: f64, b: f64, r: f64) -> f64 {
    bvn_upper(-a, -b, r)
}

/// Probability that a standard bivariate normal with correlation `rho` falls
/// in the rectangle `lower < (X, Y) <= upper`.
pub fn bvn_rect(lower: (f64, f64), upper: (f64, f64), rho: f64) -> Result<Probability> {
    let all = [lower.0, lower.1, upper.0, upper.1, rho];
    if all.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("bvn_rect: NaN input"));
    }
    if rho.abs() > 1.0 {
        return Err(Error::domain(format!("bvn_rect: |rho| = {} > 1", rho.abs())));
    }
    if lower.0 > upper.0 || lower.1 > upper.1 {
        return Err(Error::domain("bvn_rect: lower bound exceeds upper bound"));
    }
    Ok(Probability::clamped(rect_unchecked(lower, upper, rho)))
}

pub(crate) fn rect_unchecked(lower: (f64, f64), upper: (f64, f64), rho: f64) -> f64 {
    if lower.0 == upper.0 || lower.1 == upper.1 {
        return 0.0;
    }
    let p = bvn_upper(lower.0, lower.1, rho)
        - bvn_upper(upper.0, lower.1, rho)
        - bvn_upper(lower.0, upper.1, rho)
        + bvn_upper(upper.0, upper.1, rho);
    p.max(0.0)
}
