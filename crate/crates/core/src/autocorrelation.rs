//! Autocorrelation coefficients `Ξ(T, η)(z)` by several independent engines.
//!
//! Conventions follow the two cases of the definition:
//!
//! * non-invertible maps: `Ξ(z) = ½ ∫ f·(f ∘ T^{|z|}) dη`,
//! * rotations: `Ξ(z) = ∫ (f ∘ T^{-z})·f dη`.
//!
//! The factor `½` is stored in the sequence; downstream spectra use the values
//! as they are.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::combs::CoefficientSeq;
use crate::dynamics::{orbit, IntervalMap, MeasureSpec, ReferencePoint};
use crate::io::{fmt_float, parse_csv_rows};
use crate::numeric::{frac_mul, gcd};
use crate::observables::Observable;
use crate::transfer::{spectral_data, Projection};
use crate::{Error, Result};

/// Horizon-to-window ratio required by [`xi_empirical`].
pub const MIN_HORIZON_RATIO: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XiEngine {
    Empirical,
    Rational,
    Irrational,
    Mixing,
    Analytic,
}

impl XiEngine {
    pub fn as_str(&self) -> &'static str {
        match self {
            XiEngine::Empirical => "empirical",
            XiEngine::Rational => "rational",
            XiEngine::Irrational => "irrational",
            XiEngine::Mixing => "mixing",
            XiEngine::Analytic => "analytic",
        }
    }
}

impl fmt::Display for XiEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for XiEngine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "empirical" => XiEngine::Empirical,
            "rational" => XiEngine::Rational,
            "irrational" => XiEngine::Irrational,
            "mixing" => XiEngine::Mixing,
            "analytic" => XiEngine::Analytic,
            other => return Err(Error::Parse(format!("unknown engine '{other}'"))),
        })
    }
}

/// `Ξ(z)` on `[-Z, Z]`, tagged with the engine that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSequence {
    engine: XiEngine,
    coeffs: CoefficientSeq,
}

impl XiSequence {
    pub fn new(engine: XiEngine, coeffs: CoefficientSeq) -> Self {
        XiSequence { engine, coeffs }
    }

    pub fn engine(&self) -> XiEngine {
        self.engine
    }

    pub fn half_window(&self) -> usize {
        self.coeffs.half_window()
    }

    pub fn get(&self, z: i64) -> Option<f64> {
        self.coeffs.get(z)
    }

    pub fn coefficients(&self) -> &CoefficientSeq {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.coeffs.iter()
    }

    /// Rows `(z, xi, engine)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,xi,engine\n");
        for (z, v) in self.iter() {
            let _ = writeln!(out, "{z},{},{}", fmt_float(v), self.engine);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_csv_rows(text, &["z", "xi", "engine"])?;
        let mut engine = None;
        let mut values = Vec::with_capacity(rows.len());
        let mut first = None;
        for (line, row) in &rows {
            let z: i64 = row[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad index '{}'", row[0])))?;
            let v: f64 = row[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad value '{}'", row[1])))?;
            let e: XiEngine = row[2].parse()?;
            if *engine.get_or_insert(e) != e {
                return Err(Error::Parse(format!("line {line}: mixed engines")));
            }
            let z0 = *first.get_or_insert(z);
            if z != z0 + values.len() as i64 {
                return Err(Error::Parse(format!("line {line}: indices must be consecutive")));
            }
            values.push(v);
        }
        let z0 = first.ok_or_else(|| Error::Parse("no rows".into()))?;
        if values.len() % 2 == 0 || z0 != -((values.len() / 2) as i64) {
            return Err(Error::Parse("window is not symmetric about 0".into()));
        }
        Ok(XiSequence {
            engine: engine.unwrap(),
            coeffs: CoefficientSeq::new(values.len() / 2, values)?,
        })
    }
}

/// Finite Birkhoff averages along the orbit of `y`.
///
/// Non-invertible: `Ξ̂(z) = (2N)⁻¹ Σ_{n<N} f(Tⁿy) f(T^{n+|z|}y)`.
/// Rotations: `Ξ̂(z) = (2N+1)⁻¹ Σ_{|n|≤N} f(Tⁿy) f(T^{n-z}y)`, averaged over
/// `±z` so the output is exactly symmetric.
pub fn xi_empirical(
    map: &IntervalMap,
    measure: &MeasureSpec,
    f: &Observable,
    y: impl Into<ReferencePoint>,
    half_window: usize,
    horizon: usize,
) -> Result<XiSequence> {
    let y = y.into();
    if horizon < MIN_HORIZON_RATIO * half_window.max(1) {
        return Err(Error::dimension(format!(
            "horizon {horizon} must be at least {MIN_HORIZON_RATIO} x window {half_window}"
        )));
    }
    match (y, measure) {
        (ReferencePoint::Exact(v), m) if !m.supports(v) => {
            return Err(Error::argument(format!(
                "reference point {v} is not in the support of the measure"
            )));
        }
        (ReferencePoint::Typical { .. }, MeasureSpec::AtomicOrbit { .. }) => {
            return Err(Error::argument(
                "a typical point is not in the support of an atomic measure",
            ));
        }
        _ => {}
    }
    let zmax = half_window as i64;
    let values = if map.is_invertible() {
        let n = horizon as i64;
        let pts = orbit(map, y, -n - zmax, 2 * horizon + 2 * half_window + 1)?;
        let w = eval_all(f, &pts)?;
        let at = |m: i64| w[(m + n + zmax) as usize];
        let norm = (2 * horizon + 1) as f64;
        let lagged = |z: i64| (-n..=n).map(|m| at(m) * at(m - z)).sum::<f64>() / norm;
        (0..=zmax)
            .into_par_iter()
            .map(|z| 0.5 * (lagged(z) + lagged(-z)))
            .collect::<Vec<_>>()
    } else {
        let pts = orbit(map, y, 0, horizon + half_window)?;
        let w = eval_all(f, &pts)?;
        let norm = 2.0 * horizon as f64;
        (0..=half_window)
            .into_par_iter()
            .map(|z| {
                w[..horizon]
                    .iter()
                    .zip(&w[z..z + horizon])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / norm
            })
            .collect::<Vec<_>>()
    };
    Ok(XiSequence::new(
        XiEngine::Empirical,
        CoefficientSeq::symmetric_from_nonnegative(&values),
    ))
}

fn eval_all(f: &Observable, points: &[f64]) -> Result<Vec<f64>> {
    points.iter().map(|&x| f.checked_eval(x)).collect()
}

/// Exact cyclic autocorrelation for the rotation by `p/q` on the orbit measure
/// `η_{q,w}`: `Ξ(z) = q⁻¹ Σ_{l ∈ ℤ_q} s(l - z) s(l)` with `s(l) = f(T^l w)`.
pub fn xi_rotation_rational(p: u64, q: u64, w: f64, f: &Observable, half_window: usize) -> Result<XiSequence> {
    if q == 0 || gcd(p, q) != 1 {
        return Err(Error::argument(format!("need gcd(p, q) = 1, got {p}/{q}")));
    }
    if !(0.0..1.0).contains(&w) {
        return Err(Error::argument(format!("orbit representative {w} not in [0, 1)")));
    }
    let s = f.cyclic_samples(p, q, w)?;
    let q_us = q as usize;
    let cyclic: Vec<f64> = (0..q_us)
        .map(|r| (0..q_us).map(|l| s[(l + q_us - r) % q_us] * s[l]).sum::<f64>() / q as f64)
        .collect();
    let values: Vec<f64> = (0..=half_window).map(|z| cyclic[z % q_us]).collect();
    Ok(XiSequence::new(
        XiEngine::Rational,
        CoefficientSeq::symmetric_from_nonnegative(&values),
    ))
}

/// `Ξ(T_α, Λ)(z) = ∫ f({x - zα}) f(x) dx`, via the circle autocorrelation of `f`.
/// The caller declares `α` irrational.
pub fn xi_rotation_irrational(alpha: f64, f: &Observable, half_window: usize) -> Result<XiSequence> {
    if !alpha.is_finite() {
        return Err(Error::argument(format!("rotation number {alpha} is not finite")));
    }
    let values: Vec<f64> = (0..=half_window as i64)
        .into_par_iter()
        .map(|z| f.circle_autocorrelation(frac_mul(z, alpha)))
        .collect();
    Ok(XiSequence::new(
        XiEngine::Irrational,
        CoefficientSeq::symmetric_from_nonnegative(&values),
    ))
}

/// Transfer-operator engine: `Ξ(z) = ((∫ f dη)² + c_z) / 2`.
pub fn xi_mixing(map: &IntervalMap, f: &Observable, half_window: usize, n_bins: usize) -> Result<XiSequence> {
    xi_mixing_with(map, f, half_window, n_bins, Projection::default())
}

pub fn xi_mixing_with(
    map: &IntervalMap,
    f: &Observable,
    half_window: usize,
    n_bins: usize,
    projection: Projection,
) -> Result<XiSequence> {
    let data = spectral_data(map, f, half_window, n_bins, projection)?;
    let m2 = data.mean_f * data.mean_f;
    let values: Vec<f64> = (0..=half_window as i64)
        .map(|z| 0.5 * (m2 + data.c.get(z).unwrap()))
        .collect();
    Ok(XiSequence::new(
        XiEngine::Mixing,
        CoefficientSeq::symmetric_from_nonnegative(&values),
    ))
}

/// Closed form for `x ↦ {kx}` with Lebesgue measure and polynomial `f`:
/// `Ξ(z) = ½ ∫ f(x) f({k^{|z|} x}) dx`, summed monomial by monomial.
pub fn xi_analytic_linear_mod(k: u32, f: &Observable, half_window: usize) -> Result<XiSequence> {
    if k < 2 {
        return Err(Error::argument(format!("linear_mod needs k >= 2, got {k}")));
    }
    let p = f
        .as_polynomial()
        .ok_or_else(|| Error::argument("the analytic engine needs a polynomial observable"))?;
    let a = p.coeffs();
    let deg = a.len().saturating_sub(1);
    let bern = bernoulli(deg + 1);
    let values: Vec<f64> = (0..=half_window)
        .map(|z| {
            let big_k = (k as f64).powi(z as i32);
            let mut total = 0.0;
            for (j, &aj) in a.iter().enumerate() {
                for (l, &al) in a.iter().enumerate() {
                    total += aj * al * monomial_moment(j, l, big_k, &bern);
                }
            }
            0.5 * total
        })
        .collect();
    Ok(XiSequence::new(
        XiEngine::Analytic,
        CoefficientSeq::symmetric_from_nonnegative(&values),
    ))
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = -1/2`.
fn bernoulli(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        let s: f64 = (0..m).map(|r| binomial(m + 1, r) * b[r]).sum();
        b[m] = -s / (m + 1) as f64;
    }
    b
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `S_p(K) / K^{p+1}` with `S_p(K) = Σ_{i<K} i^p`, by Faulhaber's formula.
fn scaled_power_sum(p: usize, big_k: f64, bern: &[f64]) -> f64 {
    (0..=p)
        .map(|r| binomial(p + 1, r) * bern[r] * big_k.powi(-(r as i32)))
        .sum::<f64>()
        / (p + 1) as f64
}

/// `∫₀¹ x^j {Kx}^l dx` for a positive integer `K`.
fn monomial_moment(j: usize, l: usize, big_k: f64, bern: &[f64]) -> f64 {
    (0..=j)
        .map(|i| binomial(j, i) / (i + l + 1) as f64 * scaled_power_sum(j - i, big_k, bern) * big_k.powi(-(i as i32)))
        .sum()
}

/// `max_{|z| ≤ Z} |a(z) - b(z)|`.
pub fn xi_distance(a: &XiSequence, b: &XiSequence, half_window: usize) -> Result<f64> {
    if a.half_window() < half_window || b.half_window() < half_window {
        return Err(Error::dimension(format!(
            "window {half_window} exceeds sequence windows {} and {}",
            a.half_window(),
            b.half_window()
        )));
    }
    let z = half_window as i64;
    Ok((-z..=z)
        .map(|k| (a.get(k).unwrap() - b.get(k).unwrap()).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{circle_distance, midpoint};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn monomial_moments_match_quadrature() {
        let bern = bernoulli(8);
        for (j, l, k) in [(0, 0, 2.0), (1, 1, 3.0), (2, 3, 4.0), (3, 1, 1.0), (4, 4, 27.0)] {
            let oracle = (0..k as usize)
                .map(|i| {
                    let (a, b) = (i as f64 / k, (i + 1) as f64 / k);
                    midpoint(a, b, 4096, |x: f64| {
                        x.powi(j as i32) * (k * x - i as f64).powi(l as i32)
                    })
                })
                .sum::<f64>();
            close(monomial_moment(j, l, k, &bern), oracle, 1e-8);
        }
        for (b, e) in bernoulli(4).iter().zip([1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0]) {
            close(*b, e, 1e-15);
        }
    }

    #[test]
    fn analytic_times_k_identity() {
        for k in [2u32, 3, 10] {
            let xi = xi_analytic_linear_mod(k, &Observable::identity(), 10).unwrap();
            for n in 0..=10i64 {
                let kn = (k as f64).powi(n as i32);
                close(2.0 * xi.get(n).unwrap(), 0.25 * (kn + 1.0 / 3.0) / kn, 1e-14);
            }
        }
        let xi = xi_analytic_linear_mod(2, &Observable::identity(), 0).unwrap();
        close(xi.get(0).unwrap(), 1.0 / 6.0, 1e-15);
    }

    #[test]
    fn analytic_engine_needs_a_polynomial() {
        let f = Observable::indicator(0.0, 0.5).unwrap();
        assert!(xi_analytic_linear_mod(2, &f, 3).is_err());
        assert!(xi_analytic_linear_mod(1, &Observable::identity(), 3).is_err());
    }

    #[test]
    fn rational_half_rotation() {
        let xi = xi_rotation_rational(1, 2, 0.0, &Observable::identity(), 6).unwrap();
        for z in -6..=6i64 {
            close(xi.get(z).unwrap(), if z % 2 == 0 { 0.125 } else { 0.0 }, 1e-15);
        }
    }

    #[test]
    fn rational_indicator_example() {
        let f = Observable::indicator(0.0, 0.4).unwrap();
        let xi = xi_rotation_rational(1, 5, 0.0, &f, 5).unwrap();
        close(xi.get(1).unwrap(), 0.2, 1e-15);
        // Brute force over ℤ_5 with s(l) = f(l/5).
        let s = |l: i64| f.eval(l.rem_euclid(5) as f64 / 5.0);
        for z in -5..=5i64 {
            let brute: f64 = (0..5).map(|l| s(l - z) * s(l)).sum::<f64>() / 5.0;
            close(xi.get(z).unwrap(), brute, 1e-15);
        }
    }

    #[test]
    fn rational_engine_checks_arguments() {
        let f = Observable::identity();
        assert!(xi_rotation_rational(2, 4, 0.0, &f, 3).is_err());
        assert!(xi_rotation_rational(1, 3, 1.0, &f, 3).is_err());
        let one = Observable::constant(1.0).unwrap();
        let xi = xi_rotation_rational(3, 7, 0.2, &one, 9).unwrap();
        assert!(xi.iter().all(|(_, v)| v == 1.0));
    }

    #[test]
    fn irrational_engine_on_identity_and_indicator() {
        let alpha = std::f64::consts::PI / 20.0;
        let f = Observable::identity();
        let xi = xi_rotation_irrational(alpha, &f, 20).unwrap();
        close(xi.get(0).unwrap(), 1.0 / 3.0, 1e-15);
        for z in 1..=20i64 {
            let t = (z as f64 * alpha).fract();
            let oracle = midpoint(0.0, 1.0, 1 << 20, |x| f.eval((x - t).rem_euclid(1.0)) * x);
            close(xi.get(z).unwrap(), oracle, 2e-6);
            assert_eq!(xi.get(z), xi.get(-z));
        }
        let len = 0.3;
        let ind = Observable::indicator(0.0, len).unwrap();
        let xi = xi_rotation_irrational(alpha, &ind, 20).unwrap();
        for z in -20..=20i64 {
            let d = circle_distance(0.0, z as f64 * alpha);
            close(xi.get(z).unwrap(), (len - d).max(0.0), 1e-12);
        }
    }

    #[test]
    fn mixing_engine_matches_closed_form() {
        let map = IntervalMap::linear_mod(3).unwrap();
        let xi = xi_mixing(&map, &Observable::identity(), 8, 1 << 10).unwrap();
        for z in -8..=8i64 {
            let exact = 0.125 * (1.0 + 3f64.powi(-(z.abs() as i32)) / 3.0);
            close(xi.get(z).unwrap(), exact, 1e-6);
        }
        let c = Observable::constant(0.7).unwrap();
        let xi = xi_mixing(&map, &c, 5, 64).unwrap();
        for z in -5..=5 {
            close(xi.get(z).unwrap(), 0.49 / 2.0, 1e-12);
        }
    }

    #[test]
    fn empirical_half_rotation_is_an_exact_orbit_sum() {
        let map = IntervalMap::rotation_rational(1, 2).unwrap();
        let eta = MeasureSpec::atomic_orbit(2, 0.0).unwrap();
        for n in [200usize, 1000] {
            let xi = xi_empirical(&map, &eta, &Observable::identity(), 0.0, 2, n).unwrap();
            // Odd n in [-N, N] for even N: N of them, weight 1/4 each.
            close(xi.get(0).unwrap(), n as f64 / (4.0 * (2 * n + 1) as f64), 1e-15);
            close(xi.get(1).unwrap(), 0.0, 1e-15);
        }
    }

    #[test]
    fn empirical_guards() {
        let map = IntervalMap::linear_mod(3).unwrap();
        let f = Observable::identity();
        let typical = ReferencePoint::Typical { seed: 1 };
        assert!(matches!(
            xi_empirical(&map, &MeasureSpec::Lebesgue, &f, typical, 16, 1000),
            Err(Error::Dimension(_))
        ));
        let rot = IntervalMap::rotation_rational(1, 3).unwrap();
        let eta = MeasureSpec::atomic_orbit(3, 0.0).unwrap();
        assert!(xi_empirical(&rot, &eta, &f, 0.5, 1, 100).is_err());
        assert!(xi_empirical(&rot, &eta, &f, typical, 1, 100).is_err());
        let zero = Observable::constant(0.0).unwrap();
        let xi = xi_empirical(&map, &MeasureSpec::Lebesgue, &zero, typical, 3, 300).unwrap();
        assert!(xi.iter().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn empirical_times_three() {
        let map = IntervalMap::linear_mod(3).unwrap();
        let xi = xi_empirical(
            &map,
            &MeasureSpec::Lebesgue,
            &Observable::identity(),
            ReferencePoint::Typical { seed: 42 },
            16,
            1_000_000,
        )
        .unwrap();
        close(xi.get(1).unwrap(), 5.0 / 36.0, 1e-2);
    }

    #[test]
    fn distance_and_csv() {
        let a = XiSequence::new(XiEngine::Analytic, CoefficientSeq::from_fn(3, |_| 0.2));
        let b = XiSequence::new(XiEngine::Mixing, CoefficientSeq::from_fn(4, |_| 0.5));
        close(xi_distance(&a, &b, 3).unwrap(), 0.3, 1e-15);
        assert_eq!(xi_distance(&a, &a, 3).unwrap(), 0.0);
        assert!(xi_distance(&a, &b, 4).is_err());
        let back = XiSequence::from_csv(&b.to_csv()).unwrap();
        assert_eq!(back, b);
        assert!(XiSequence::from_csv("z,xi,engine\n0,1,analytic\n1,1,analytic\n").is_err());
    }
}
