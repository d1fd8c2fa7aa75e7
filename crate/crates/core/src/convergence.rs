//! Rotation sequences `α_i → α`: uniform convergence of `Ξ`, the rational
//! counterexamples, and the drift of pure-point spectra with `α`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::autocorrelation::{xi_distance, xi_rotation_irrational, xi_rotation_rational, XiSequence};
use crate::diffraction::{rotation_diffraction_irrational, top_atoms};
use crate::dynamics::Rotation;
use crate::io::fmt_float;
use crate::numeric::{circle_distance, frac, frac_mul, gcd, midpoint};
use crate::observables::Observable;
use crate::{Error, Result};

/// Grid size for `‖f_i − f‖_∞`.
pub const SUP_GRID: usize = 1 << 14;

/// A rotation number with declared rationality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationNumber {
    Rational { p: u64, q: u64 },
    Irrational(f64),
}

impl RotationNumber {
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        Rotation::rational(p, q)?;
        Ok(RotationNumber::Rational { p, q })
    }

    pub fn irrational(alpha: f64) -> Result<Self> {
        Rotation::irrational(alpha)?;
        Ok(RotationNumber::Irrational(alpha))
    }

    pub fn value(&self) -> f64 {
        match *self {
            RotationNumber::Rational { p, q } => p as f64 / q as f64,
            RotationNumber::Irrational(a) => a,
        }
    }

    /// `q` for rationals, 0 otherwise.
    pub fn denominator(&self) -> u64 {
        match *self {
            RotationNumber::Rational { q, .. } => q,
            RotationNumber::Irrational(_) => 0,
        }
    }

    /// `{zα}`, exact for rationals.
    fn shift(&self, z: i64) -> f64 {
        match *self {
            RotationNumber::Rational { p, q } => (z as i128 * p as i128).rem_euclid(q as i128) as f64 / q as f64,
            RotationNumber::Irrational(a) => frac_mul(z, a),
        }
    }

    fn same_as(&self, other: &RotationNumber) -> bool {
        match (self, other) {
            (RotationNumber::Rational { p, q }, RotationNumber::Rational { p: p2, q: q2 }) => p == p2 && q == q2,
            _ => self.value() == other.value(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequenceItem {
    pub alpha: RotationNumber,
    /// Reference point; for rational `α_i` the orbit representative `w` of `η_{q_i, w}`.
    pub y: f64,
    pub f: Observable,
}

/// Target `(α, f)` and the approximating items `(α_i, y_i, f_i)`.
#[derive(Debug, Clone)]
pub struct RotationSequenceSpec {
    target: RotationNumber,
    f: Observable,
    items: Vec<SequenceItem>,
}

impl RotationSequenceSpec {
    pub fn new(target: RotationNumber, f: Observable, items: Vec<SequenceItem>) -> Result<Self> {
        for (i, item) in items.iter().enumerate() {
            if item.alpha.same_as(&target) {
                return Err(Error::argument(format!("item {} has alpha equal to the target", i + 1)));
            }
            if !(0.0..1.0).contains(&item.y) {
                return Err(Error::argument(format!(
                    "item {} has reference point {} outside [0, 1)",
                    i + 1,
                    item.y
                )));
            }
            if let RotationNumber::Rational { p, q } = item.alpha {
                if q == 0 || gcd(p, q) != 1 {
                    return Err(Error::argument(format!("item {} has gcd({p}, {q}) != 1", i + 1)));
                }
            }
        }
        Ok(RotationSequenceSpec { target, f, items })
    }

    /// Items `(p_i/q_i, w, f)` for the given convergents, all with the target observable.
    pub fn from_convergents(target: RotationNumber, f: Observable, convergents: &[(u64, u64)], w: f64) -> Result<Self> {
        let items = convergents
            .iter()
            .map(|&(p, q)| {
                Ok(SequenceItem {
                    alpha: RotationNumber::rational(p, q)?,
                    y: w,
                    f: f.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RotationSequenceSpec::new(target, f, items)
    }

    pub fn target(&self) -> RotationNumber {
        self.target
    }

    pub fn items(&self) -> &[SequenceItem] {
        &self.items
    }
}

/// Convergents `p/q` of the continued fraction of `x > 0`, skipping `p = 0`.
pub fn continued_fraction_convergents(x: f64, count: usize) -> Result<Vec<(u64, u64)>> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::argument(format!("need a positive finite number, got {x}")));
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, x.floor() as u64, 1u64);
    let mut out = Vec::with_capacity(count);
    if p1 > 0 {
        out.push((p1, q1));
    }
    let mut r = x - x.floor();
    while out.len() < count {
        if r < 1e-15 {
            break;
        }
        let inv = 1.0 / r;
        let a = inv.floor();
        r = inv - a;
        let a = a as u64;
        let (p2, q2) = (
            a.checked_mul(p1).and_then(|v| v.checked_add(p0)),
            a.checked_mul(q1).and_then(|v| v.checked_add(q0)),
        );
        let (Some(p2), Some(q2)) = (p2, q2) else { break };
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if p1 > 0 {
            out.push((p1, q1));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// 1-based item index.
    pub index: usize,
    pub alpha: f64,
    /// `q_i`, or 0 for irrational items.
    pub q: u64,
    /// `max_{|z| ≤ Z} |Ξ_i(z) − Ξ(T_α, Λ)(z)|`.
    pub sup_dist: f64,
    /// `‖f_i − f‖_∞` on a uniform grid.
    pub f_dist: f64,
    /// Upper bound for `sup_dist` from the Darboux and Lipschitz estimates.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub half_window: usize,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rows `(i, alpha_i, q_i_or_0, sup_dist, f_dist, bound)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,alpha_i,q_i_or_0,sup_dist,f_dist,bound\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.index,
                fmt_float(r.alpha),
                r.q,
                fmt_float(r.sup_dist),
                fmt_float(r.f_dist),
                fmt_float(r.bound)
            );
        }
        out
    }
}

/// Oscillation of `f` on the circle arc `[a, a + len)`.
fn arc_oscillation(f: &Observable, a: f64, len: f64) -> f64 {
    let b = a + len;
    if b <= 1.0 {
        f.oscillation(a, b)
    } else {
        f.oscillation(a, 1.0) + f.oscillation(0.0, b - 1.0) + (f.eval(a) - f.eval(0.0)).abs()
    }
}

/// `2 ‖f‖_∞ Σ_k q⁻¹ osc(f, [w + k/q, w + (k+1)/q))`: how far a `q`-point
/// Riemann sum of `f·(f ∘ shift)` can be from the integral.
pub fn darboux_term(f: &Observable, q: u64, w: f64) -> f64 {
    let total: f64 = (0..q)
        .map(|k| arc_oscillation(f, frac(w + k as f64 / q as f64), 1.0 / q as f64))
        .sum();
    2.0 * f.sup_norm() * total / q as f64
}

/// Lipschitz constant of `t ↦ ∫ f(x) f(x − t) dx` from `‖f‖_∞ · Var(f)`.
pub fn autocorrelation_lipschitz(f: &Observable) -> f64 {
    f.sup_norm() * f.circle_variation()
}

/// Computes `Ξ_i` with the engine matching each item's declared rationality and
/// compares it with `Ξ(T_α, Λ)` over `|z| ≤ Z`.
pub fn xi_convergence_run(spec: &RotationSequenceSpec, half_window: usize) -> Result<ConvergenceReport> {
    if half_window == 0 {
        return Err(Error::argument("window must be >= 1"));
    }
    let target = xi_rotation_irrational(spec.target.value(), &spec.f, half_window)?;
    let lip = autocorrelation_lipschitz(&spec.f);
    let rows = spec
        .items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let xi: XiSequence = match item.alpha {
                RotationNumber::Rational { p, q } => xi_rotation_rational(p, q, item.y, &item.f, half_window)?,
                RotationNumber::Irrational(a) => xi_rotation_irrational(a, &item.f, half_window)?,
            };
            let sup_dist = xi_distance(&xi, &target, half_window)?;
            let f_dist = item.f.sup_distance(&spec.f, SUP_GRID);
            let riemann = match item.alpha {
                RotationNumber::Rational { q, .. } => darboux_term(&item.f, q, item.y),
                RotationNumber::Irrational(_) => 0.0,
            };
            let shift = (0..=half_window as i64)
                .map(|z| circle_distance(item.alpha.shift(z), spec.target.shift(z)))
                .fold(0.0, f64::max);
            let observable = (item.f.sup_norm() + spec.f.sup_norm()) * f_dist;
            Ok(ConvergenceRow {
                index: i + 1,
                alpha: item.alpha.value(),
                q: item.alpha.denominator(),
                sup_dist,
                f_dist,
                bound: riemann + observable + lip * shift,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { half_window, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example46Row {
    pub m: u64,
    /// `Ξ(T_α, Λ)(m)` from the circle autocorrelation.
    pub continuous: f64,
    /// `Ξ(T_α, η_{q,0})(m)` from the cyclic sum.
    pub discrete: f64,
    /// `q·Ξ` on both sides, counted exactly.
    pub continuous_count: u64,
    pub discrete_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example46Report {
    pub rows: Vec<Example46Row>,
    /// Exact equality of the integer counts for every `m ∈ ℤ_q`.
    pub equal: bool,
    /// Largest difference between the two floating-point engines.
    pub max_float_gap: f64,
}

/// `f = χ_{[0, r/q))` and `α = p/q`: the Lebesgue and orbit-measure
/// autocorrelations coincide on `ℤ_q`.
pub fn example_46_check(r: u64, q: u64, p: u64) -> Result<Example46Report> {
    if !(1..=q).contains(&r) {
        return Err(Error::argument(format!("need 1 <= r <= q, got r = {r}, q = {q}")));
    }
    Rotation::rational(p, q)?;
    let f = Observable::indicator(0.0, r as f64 / q as f64)?;
    let discrete = xi_rotation_rational(p, q, 0.0, &f, q as usize)?;
    let alpha = RotationNumber::Rational { p, q };
    let rows: Vec<Example46Row> = (0..q)
        .map(|m| {
            let j = (m as u128 * p as u128 % q as u128) as u64;
            // Cells k/q of the indicator that stay inside it after a shift by j cells.
            let continuous_count = (0..r).filter(|k| (k + q - j) % q < r).count() as u64;
            let discrete_count = (0..q)
                .filter(|&l| {
                    let a = (l as u128 * p as u128 % q as u128) as u64;
                    let b = ((l + q - m) as u128 * p as u128 % q as u128) as u64;
                    a < r && b < r
                })
                .count() as u64;
            Example46Row {
                m,
                continuous: f.circle_autocorrelation(alpha.shift(m as i64)),
                discrete: discrete.get(m as i64).unwrap(),
                continuous_count,
                discrete_count,
            }
        })
        .collect();
    let equal = rows.iter().all(|r| r.continuous_count == r.discrete_count);
    let max_float_gap = rows
        .iter()
        .map(|r| (r.continuous - r.discrete).abs())
        .fold(0.0, f64::max);
    Ok(Example46Report {
        rows,
        equal,
        max_float_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TentRow {
    pub z: i64,
    /// `{zα}`.
    pub t: f64,
    /// Quadrature of `∫ f(x) f(x − t) dx`.
    pub quadrature: f64,
    /// `max(L − d(t), 0)` with `L = (2p+1)/(2q)` and `d` the circle distance to 0.
    pub tent: f64,
    /// The variant `2L − d(t)` with slope height `(2p+1)/q`; it overshoots the quadrature.
    pub doubled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example47Report {
    pub continuous_at_zero: f64,
    pub discrete_at_zero: f64,
    pub differ: bool,
    pub tent: Vec<TentRow>,
}

/// `f = χ_{[0, (2p+1)/(2q))}` and `α = p/q < 1/2`: the limit of the irrational
/// autocorrelations differs from the orbit-measure one at `z = 0`.
pub fn example_47_check(p: u64, q: u64) -> Result<Example47Report> {
    if 2 * p >= q {
        return Err(Error::argument(format!("need p/q < 1/2, got {p}/{q}")));
    }
    Rotation::rational(p, q)?;
    let len = (2 * p + 1) as f64 / (2 * q) as f64;
    let f = Observable::indicator(0.0, len)?;
    // Breakpoints sit on the 1/(2q) grid, so the midpoint rule on a refinement is exact.
    let panels = 2 * q as usize * 4096;
    let quad = |t: f64| midpoint(0.0, 1.0, panels, |x| f.eval(x) * f.eval(frac(x - t)));
    let continuous_at_zero = quad(0.0);
    let samples = f.cyclic_samples(p, q, 0.0)?;
    let discrete_at_zero = samples.iter().map(|s| s * s).sum::<f64>() / q as f64;
    let alpha = RotationNumber::Rational { p, q };
    let tent = (1..q as i64)
        .map(|z| {
            let t = alpha.shift(z);
            let d = t.min(1.0 - t);
            let doubled = if t < len {
                2.0 * len - t
            } else if t < 1.0 - len {
                0.0
            } else {
                2.0 * len - (1.0 - t)
            };
            TentRow {
                z,
                t,
                quadrature: quad(t),
                tent: (len - d).max(0.0),
                doubled,
            }
        })
        .collect();
    Ok(Example47Report {
        continuous_at_zero,
        discrete_at_zero,
        differ: (continuous_at_zero - discrete_at_zero).abs() > 1e-12,
        tent,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub mode: i64,
    pub position1: f64,
    pub position2: f64,
    pub mass1: f64,
    pub mass2: f64,
}

/// Top-`K` atoms of the pure-point spectra at `α₁` and `α₂`, matched by mode.
pub fn diffraction_drift(alpha1: f64, alpha2: f64, f: &Observable, count: usize) -> Result<Vec<DriftRow>> {
    if count == 0 {
        return Err(Error::argument("need at least one atom"));
    }
    let modes = (4 * count).max(64);
    let s1 = rotation_diffraction_irrational(alpha1, f, modes)?;
    let s2 = rotation_diffraction_irrational(alpha2, f, modes)?;
    let (top, _) = top_atoms(&s1, count)?;
    top.iter()
        .map(|a| {
            let m = a.mode.expect("rotation atoms carry modes");
            let b = s2
                .atoms()
                .iter()
                .find(|b| b.mode == Some(m))
                .ok_or_else(|| Error::argument(format!("mode {m} merged away at alpha = {alpha2}")))?;
            Ok(DriftRow {
                mode: m,
                position1: a.position,
                position2: b.position,
                mass1: a.mass,
                mass2: b.mass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn convergents_of_silver_ratio() {
        let c = continued_fraction_convergents(2f64.sqrt() - 1.0, 8).unwrap();
        assert_eq!(
            c,
            vec![
                (1, 2),
                (2, 5),
                (5, 12),
                (12, 29),
                (29, 70),
                (70, 169),
                (169, 408),
                (408, 985)
            ]
        );
        let c = continued_fraction_convergents(3.25, 5).unwrap();
        assert_eq!(c, vec![(3, 1), (13, 4)]);
    }

    #[test]
    fn spec_validation() {
        let target = RotationNumber::rational(1, 3).unwrap();
        let f = Observable::identity();
        let same = SequenceItem {
            alpha: RotationNumber::rational(1, 3).unwrap(),
            y: 0.0,
            f: f.clone(),
        };
        assert!(RotationSequenceSpec::new(target, f.clone(), vec![same]).is_err());
        let bad_y = SequenceItem {
            alpha: RotationNumber::rational(1, 4).unwrap(),
            y: 1.5,
            f: f.clone(),
        };
        assert!(RotationSequenceSpec::new(target, f.clone(), vec![bad_y]).is_err());
        assert!(RotationNumber::rational(2, 4).is_err());
        let bad_gcd = SequenceItem {
            alpha: RotationNumber::Rational { p: 2, q: 4 },
            y: 0.0,
            f,
        };
        assert!(RotationSequenceSpec::new(target, Observable::identity(), vec![bad_gcd]).is_err());
    }

    #[test]
    fn convergents_approach_the_silver_ratio() {
        let alpha = 2f64.sqrt() - 1.0;
        let conv = continued_fraction_convergents(alpha, 8).unwrap();
        let spec = RotationSequenceSpec::from_convergents(
            RotationNumber::irrational(alpha).unwrap(),
            Observable::identity(),
            &conv,
            0.0,
        )
        .unwrap();
        let report = xi_convergence_run(&spec, 32).unwrap();
        let d: Vec<f64> = report.rows.iter().map(|r| r.sup_dist).collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        assert!(d[4] < 0.05 && d[7] < 1e-3, "{d:?}");
        for r in &report.rows {
            assert!(r.sup_dist > 0.0 && r.sup_dist <= r.bound, "{r:?}");
            assert!(r.sup_dist <= 2.0 / r.q as f64);
        }
    }

    #[test]
    fn irrational_offsets_obey_the_lipschitz_bound() {
        let alpha = PI / 20.0;
        let f = Observable::identity();
        let items = (1..=6)
            .map(|i| SequenceItem {
                alpha: RotationNumber::irrational(alpha + 1.0 / (i as f64 + 10.0)).unwrap(),
                y: 0.0,
                f: f.clone(),
            })
            .collect();
        let spec = RotationSequenceSpec::new(RotationNumber::irrational(alpha).unwrap(), f.clone(), items).unwrap();
        let report = xi_convergence_run(&spec, 8).unwrap();
        let lip = autocorrelation_lipschitz(&f);
        for r in &report.rows {
            assert!(r.sup_dist <= lip * 8.0 * (r.alpha - alpha).abs() + 1e-15);
            assert_eq!(r.q, 0);
        }
    }

    #[test]
    fn constant_observable_gives_zero_distance() {
        let c = Observable::constant(0.8).unwrap();
        let spec = RotationSequenceSpec::from_convergents(
            RotationNumber::irrational(0.6180339887498949).unwrap(),
            c,
            &[(1, 2), (2, 3), (3, 5), (5, 8)],
            0.0,
        )
        .unwrap();
        let report = xi_convergence_run(&spec, 10).unwrap();
        for r in &report.rows {
            close(r.sup_dist, 0.0, 1e-15);
        }
    }

    #[test]
    fn step_observables_respect_the_darboux_bound() {
        let alpha = 2f64.sqrt() - 1.0;
        let f = Observable::step(vec![0.0, 0.3, 0.7, 1.0], vec![1.0, 0.2, 0.5]).unwrap();
        let conv = continued_fraction_convergents(alpha, 8).unwrap();
        let spec =
            RotationSequenceSpec::from_convergents(RotationNumber::irrational(alpha).unwrap(), f.clone(), &conv, 0.0)
                .unwrap();
        let report = xi_convergence_run(&spec, 16).unwrap();
        for r in &report.rows {
            let max_osc = (0..r.q)
                .map(|k| f.oscillation(k as f64 / r.q as f64, (k + 1) as f64 / r.q as f64))
                .fold(0.0, f64::max);
            assert!(r.sup_dist <= 2.0 * f.sup_norm() * max_osc, "{r:?}");
            assert!(r.sup_dist <= r.bound);
        }
    }

    #[test]
    fn grid_indicator_autocorrelations_coincide() {
        let rep = example_46_check(2, 5, 1).unwrap();
        assert!(rep.equal);
        close(rep.rows[1].continuous, 0.2, 1e-15);
        close(rep.rows[1].discrete, 0.2, 1e-15);
        let rep = example_46_check(5, 5, 2).unwrap();
        assert!(rep.rows.iter().all(|r| r.continuous_count == 5));
        let rep = example_46_check(1, 2, 1).unwrap();
        assert_eq!(
            rep.rows.iter().map(|r| (r.continuous, r.discrete)).collect::<Vec<_>>(),
            vec![(0.5, 0.5), (0.0, 0.0)]
        );
        assert!(example_46_check(0, 5, 1).is_err());
        assert!(example_46_check(2, 6, 2).is_err());
    }

    #[test]
    fn half_step_indicator_values_differ() {
        let rep = example_47_check(1, 3).unwrap();
        close(rep.continuous_at_zero, 0.5, 1e-12);
        close(rep.discrete_at_zero, 2.0 / 3.0, 1e-15);
        assert!(rep.differ);
        let rep = example_47_check(1, 5).unwrap();
        close(rep.continuous_at_zero, 0.3, 1e-12);
        close(rep.discrete_at_zero, 0.4, 1e-15);
        for row in &rep.tent {
            close(row.tent, row.quadrature, 1e-12);
        }
        assert!(rep.tent.iter().any(|r| (r.doubled - r.quadrature).abs() > 0.1));
        assert!(example_47_check(1, 2).is_err());
        assert!(example_47_check(2, 4).is_err());
    }

    #[test]
    fn drift_between_nearby_rotations() {
        let f = Observable::identity();
        let (a1, a2) = (PI / 20.0, 103.0 * PI / 2000.0);
        let rows = diffraction_drift(a1, a2, &f, 50).unwrap();
        assert_eq!(rows.len(), 50);
        assert_eq!(rows[0].mode, 0);
        close(rows[0].mass1, 0.25, 1e-15);
        let mut modes: Vec<i64> = rows.iter().map(|r| r.mode).collect();
        modes.sort();
        assert_eq!(modes, (-24..=25).collect::<Vec<_>>());
        for r in &rows {
            assert_eq!(r.mass1, r.mass2);
            let shift = circle_distance(r.position1, r.position2);
            assert!(shift <= r.mode.unsigned_abs() as f64 * (a2 - a1).abs() + 1e-12);
        }
        for r in diffraction_drift(a1, a1, &f, 10).unwrap() {
            assert_eq!(r.position1, r.position2);
        }
    }
}
