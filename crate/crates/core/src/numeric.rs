//! Small numerical helpers shared across modules.

use std::f64::consts::PI;

/// Reduces `x` to `[0, 1)` as `x - floor(x)`, mapping a rounded-up `1.0` back to `0.0`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two points of the circle `[0, 1)`.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// Fractional part of `n * alpha`, computed exactly from the binary value of `alpha`
/// and rounded once at the end.
///
/// Plain `frac(n as f64 * alpha)` loses `log2(n)` bits; rotation orbits with
/// horizons of 10^6 need the full 53.
pub fn frac_mul(n: i64, alpha: f64) -> f64 {
    if n == 0 || alpha == 0.0 || !alpha.is_finite() {
        return 0.0;
    }
    let bits = alpha.abs().to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mantissa, exponent) = if exp_bits == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), exp_bits - 1075)
    };
    let sign: i128 = if alpha < 0.0 { -1 } else { 1 };
    let product = sign * (n as i128) * (mantissa as i128);
    if exponent >= 0 {
        return 0.0;
    }
    let shift = (-exponent) as u32;
    if shift >= 120 {
        // |product| < 2^117, so the product is already below one in magnitude.
        return frac(scale_pow2(product as f64, exponent));
    }
    let modulus = 1i128 << shift;
    let residue = product.rem_euclid(modulus);
    let r = scale_pow2(residue as f64, exponent);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn scale_pow2(x: f64, exponent: i32) -> f64 {
    // Two steps keep every intermediate factor a normal double.
    let half = exponent / 2;
    x * 2f64.powi(half) * 2f64.powi(exponent - half)
}

/// Euclid's algorithm on unsigned integers.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `(cos 2πt, sin 2πt)` for an angle `t` given in turns, reducing the argument first.
#[inline]
pub fn cis_turns(turns: f64) -> (f64, f64) {
    let (s, c) = (2.0 * PI * frac(turns)).sin_cos();
    (c, s)
}

/// Median of a slice (averaging the two central values for even lengths).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// 8-point Gauss–Legendre nodes and weights on `[-1, 1]`.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_650, 0.362_683_783_378_362),
    (0.183_434_642_495_650, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Gauss–Legendre quadrature of `g` over `[a, b]`, exact for polynomials of degree ≤ 15.
pub fn gauss_legendre<F: Fn(f64) -> f64>(a: f64, b: f64, g: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL8.iter().map(|&(x, w)| w * g(mid + half * x)).sum::<f64>() * half
}

/// Composite midpoint rule with `panels` panels on `[a, b]`.
pub fn midpoint<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, g: F) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| g(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}
