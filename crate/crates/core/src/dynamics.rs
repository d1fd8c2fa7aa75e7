//! Interval maps, their invariant measures, and orbit generation.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::{frac, frac_mul, gcd};
use crate::transfer::StationaryDensity;
use crate::{Error, Result};

/// A rigid rotation `x ↦ {x + α}`.
///
/// Rationality is declared by the caller: `Rotation::rational(p, q)` stores the
/// exact pair, `Rotation::irrational(α)` stores only the double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    alpha: f64,
    rational: Option<(u64, u64)>,
}

impl Rotation {
    pub fn irrational(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::argument(format!(
                "rotation number must be positive and finite, got {alpha}"
            )));
        }
        Ok(Rotation { alpha, rational: None })
    }

    pub fn rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::argument(format!("rational rotation needs q >= 1, got {p}/{q}")));
        }
        if gcd(p, q) != 1 {
            return Err(Error::argument(format!("gcd({p}, {q}) != 1")));
        }
        Ok(Rotation {
            alpha: p as f64 / q as f64,
            rational: Some((p, q)),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rational_parts(&self) -> Option<(u64, u64)> {
        self.rational
    }

    /// `{n α}`; exact residue arithmetic for declared rationals.
    pub fn shift(&self, n: i64) -> f64 {
        match self.rational {
            Some((p, q)) => {
                let r = ((n as i128 * p as i128).rem_euclid(q as i128)) as f64;
                r / q as f64
            }
            None => frac_mul(n, self.alpha),
        }
    }

    /// `T_α^n(y) = {y + nα}`.
    pub fn point(&self, y: f64, n: i64) -> f64 {
        frac(y + self.shift(n))
    }
}

/// One monotone branch of a piecewise monotone map, defined on `[lo, hi)`.
#[derive(Clone)]
pub struct Branch {
    lo: f64,
    hi: f64,
    kind: BranchKind,
}

#[derive(Clone)]
enum BranchKind {
    Affine {
        slope: f64,
        intercept: f64,
    },
    Monotone {
        map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            BranchKind::Affine { slope, intercept } => {
                write!(f, "Affine[{}, {}) x ↦ {} x + {}", self.lo, self.hi, slope, intercept)
            }
            BranchKind::Monotone { .. } => write!(f, "Monotone[{}, {})", self.lo, self.hi),
        }
    }
}

impl Branch {
    /// `x ↦ slope·x + intercept` on `[lo, hi)`; the image must lie in `[0, 1]`.
    pub fn affine(lo: f64, hi: f64, slope: f64, intercept: f64) -> Result<Self> {
        check_interval(lo, hi)?;
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::Singularity(format!(
                "affine branch on [{lo}, {hi}) has slope {slope}"
            )));
        }
        let b = Branch {
            lo,
            hi,
            kind: BranchKind::Affine { slope, intercept },
        };
        b.check_image()?;
        Ok(b)
    }

    /// A general strictly monotone branch with its exact derivative.
    pub fn monotone<F, D>(lo: f64, hi: f64, map: F, derivative: D) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_interval(lo, hi)?;
        let b = Branch {
            lo,
            hi,
            kind: BranchKind::Monotone {
                map: Arc::new(map),
                derivative: Arc::new(derivative),
            },
        };
        b.check_image()?;
        Ok(b)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.kind, BranchKind::Affine { .. })
    }

    /// Branch map evaluated on the closed interval `[lo, hi]`.
    pub fn apply(&self, x: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, intercept } => slope * x + intercept,
            BranchKind::Monotone { map, .. } => map(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, .. } => *slope,
            BranchKind::Monotone { derivative, .. } => derivative(x),
        }
    }

    /// Geometric potential `1/|T'(x)|`.
    pub fn potential(&self, x: f64) -> f64 {
        1.0 / self.derivative(x).abs()
    }

    /// Preimage of `y` inside `[lo, hi]` for `y` between the endpoint images.
    pub fn inverse(&self, y: f64) -> f64 {
        match &self.kind {
            BranchKind::Affine { slope, intercept } => ((y - intercept) / slope).clamp(self.lo, self.hi),
            BranchKind::Monotone { map, .. } => {
                let increasing = map(self.hi) > map(self.lo);
                let (mut a, mut b) = (self.lo, self.hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let below = map(m) < y;
                    if below == increasing {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            }
        }
    }

    /// Checks that the derivative is finite, non-zero and of constant sign on the
    /// branch interior (sampled on 257 interior points including the midpoint).
    pub fn check_derivative(&self) -> Result<()> {
        let samples = 257;
        let mut sign = 0.0f64;
        for i in 0..samples {
            let x = self.lo + (self.hi - self.lo) * (i as f64 + 0.5) / samples as f64;
            let d = self.derivative(x);
            if !d.is_finite() || d.abs() < 1e-12 {
                return Err(Error::Singularity(format!(
                    "derivative {d} at x = {x} in branch [{}, {})",
                    self.lo, self.hi
                )));
            }
            if sign != 0.0 && d.signum() != sign {
                return Err(Error::Singularity(format!(
                    "derivative changes sign in branch [{}, {})",
                    self.lo, self.hi
                )));
            }
            sign = d.signum();
        }
        Ok(())
    }

    fn check_image(&self) -> Result<()> {
        for x in [self.lo, self.hi] {
            let y = self.apply(x);
            if !(-1e-12..=1.0 + 1e-12).contains(&y) {
                return Err(Error::argument(format!(
                    "branch [{}, {}) maps {x} to {y}, outside [0, 1]",
                    self.lo, self.hi
                )));
            }
        }
        Ok(())
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
        return Err(Error::argument(format!(
            "branch interval [{lo}, {hi}) is not inside [0, 1)"
        )));
    }
    Ok(())
}

/// A map given by finitely many monotone branches partitioning `[0, 1)`.
#[derive(Debug, Clone)]
pub struct PiecewiseMonotone {
    branches: Vec<Branch>,
}

impl PiecewiseMonotone {
    pub fn new(mut branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::argument("piecewise monotone map needs a branch"));
        }
        branches.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        if branches[0].lo != 0.0 || branches.last().unwrap().hi != 1.0 {
            return Err(Error::argument("branches must cover [0, 1)"));
        }
        for w in branches.windows(2) {
            if (w[0].hi - w[1].lo).abs() > 1e-15 {
                return Err(Error::argument(format!(
                    "branches [{}, {}) and [{}, {}) do not tile",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(PiecewiseMonotone { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    fn branch_of(&self, x: f64) -> &Branch {
        let idx = self.branches.partition_point(|b| b.hi <= x);
        &self.branches[idx.min(self.branches.len() - 1)]
    }

    pub fn apply(&self, x: f64) -> f64 {
        frac(self.branch_of(x).apply(x))
    }
}

/// The dynamics `T` on `[0, 1)`.
#[derive(Debug, Clone)]
pub enum IntervalMap {
    Rotation(Rotation),
    /// `x ↦ {k x}` for `k ≥ 2`.
    LinearMod {
        k: u32,
    },
    PiecewiseMonotone(PiecewiseMonotone),
}

impl IntervalMap {
    pub fn rotation(alpha: f64) -> Result<Self> {
        Rotation::irrational(alpha).map(IntervalMap::Rotation)
    }

    pub fn rotation_rational(p: u64, q: u64) -> Result<Self> {
        Rotation::rational(p, q).map(IntervalMap::Rotation)
    }

    pub fn linear_mod(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::argument(format!("linear_mod needs k >= 2, got {k}")));
        }
        Ok(IntervalMap::LinearMod { k })
    }

    pub fn piecewise(branches: Vec<Branch>) -> Result<Self> {
        PiecewiseMonotone::new(branches).map(IntervalMap::PiecewiseMonotone)
    }

    /// Only rigid rotations are invertible.
    pub fn is_invertible(&self) -> bool {
        matches!(self, IntervalMap::Rotation(_))
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            IntervalMap::Rotation(r) => r.point(x, 1),
            IntervalMap::LinearMod { k } => frac(*k as f64 * x),
            IntervalMap::PiecewiseMonotone(pm) => pm.apply(x),
        }
    }

    /// `T^n(y)`. Negative `n` is only allowed for rotations.
    pub fn iterate(&self, y: f64, n: i64) -> Result<f64> {
        check_point(y)?;
        match self {
            IntervalMap::Rotation(r) => Ok(r.point(y, n)),
            _ if n < 0 => Err(Error::Domain(format!("cannot iterate a non-invertible map {n} times"))),
            _ => {
                let mut x = y;
                for _ in 0..n {
                    x = self.apply(x);
                }
                Ok(x)
            }
        }
    }

    /// Monotone branches of the map, when it has them (`LinearMod` is expanded
    /// into its `k` affine branches).
    pub fn branches(&self) -> Option<Vec<Branch>> {
        match self {
            IntervalMap::Rotation(_) => None,
            IntervalMap::LinearMod { k } => {
                let kf = *k as f64;
                let mut out = Vec::with_capacity(*k as usize);
                for m in 0..*k {
                    let lo = m as f64 / kf;
                    let hi = if m + 1 == *k { 1.0 } else { (m + 1) as f64 / kf };
                    out.push(Branch {
                        lo,
                        hi,
                        kind: BranchKind::Affine {
                            slope: kf,
                            intercept: -(m as f64),
                        },
                    });
                }
                Some(out)
            }
            IntervalMap::PiecewiseMonotone(pm) => Some(pm.branches.clone()),
        }
    }
}

fn check_point(y: f64) -> Result<()> {
    if !(0.0..1.0).contains(&y) {
        return Err(Error::Domain(format!("reference point {y} not in [0, 1)")));
    }
    Ok(())
}

/// Where an orbit starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferencePoint {
    /// A concrete double, iterated as given.
    Exact(f64),
    /// A Lebesgue-typical point drawn from a seeded generator.
    ///
    /// For `LinearMod` maps the point is an infinite stream of random base-`k`
    /// digits, so its orbit never collapses onto the dyadic or `k`-adic rationals
    /// that every double eventually becomes under `x ↦ {kx}`. For other maps it
    /// is a uniform double.
    Typical { seed: u64 },
}

impl From<f64> for ReferencePoint {
    fn from(y: f64) -> Self {
        ReferencePoint::Exact(y)
    }
}

/// Orbit points `T^n(y)` for `n = start, start + 1, …, start + len - 1`.
pub fn orbit(map: &IntervalMap, y: ReferencePoint, start: i64, len: usize) -> Result<Vec<f64>> {
    if start < 0 && !map.is_invertible() {
        return Err(Error::Domain(format!(
            "orbit of a non-invertible map cannot start at {start}"
        )));
    }
    match (map, y) {
        (IntervalMap::Rotation(r), _) => {
            let y0 = match y {
                ReferencePoint::Exact(v) => {
                    check_point(v)?;
                    v
                }
                ReferencePoint::Typical { seed } => ChaCha8Rng::seed_from_u64(seed).gen::<f64>(),
            };
            Ok((0..len as i64).map(|i| r.point(y0, start + i)).collect())
        }
        (IntervalMap::LinearMod { k }, ReferencePoint::Typical { seed }) => {
            Ok(digit_orbit(*k, seed, start as u64, len))
        }
        (_, ReferencePoint::Exact(v)) => forward_orbit(map, v, start as u64, len),
        (_, ReferencePoint::Typical { seed }) => {
            let v = ChaCha8Rng::seed_from_u64(seed).gen::<f64>();
            forward_orbit(map, v, start as u64, len)
        }
    }
}

fn forward_orbit(map: &IntervalMap, y: f64, start: u64, len: usize) -> Result<Vec<f64>> {
    check_point(y)?;
    let mut x = y;
    for _ in 0..start {
        x = map.apply(x);
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(x);
        x = map.apply(x);
    }
    Ok(out)
}

/// Orbit of a random base-`k` expansion `0.d₁d₂d₃…` under `x ↦ {kx}`: the n-th
/// point is `0.d_{n+1}d_{n+2}…`, read through a window of `D` digits with
/// `k^D ≤ 2^63`.
fn digit_orbit(k: u32, seed: u64, start: u64, len: usize) -> Vec<f64> {
    let k = k as u64;
    let mut digits = 0u32;
    let mut scale: u64 = 1;
    while let Some(next) = scale.checked_mul(k) {
        if next > (1u64 << 63) {
            break;
        }
        scale = next;
        digits += 1;
    }
    let top = scale / k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut window: u64 = 0;
    for _ in 0..digits {
        window = window * k + rng.gen_range(0..k);
    }
    for _ in 0..start {
        window = (window % top) * k + rng.gen_range(0..k);
    }
    let inv = 1.0 / scale as f64;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(window as f64 * inv);
        window = (window % top) * k + rng.gen_range(0..k);
    }
    out
}

/// The invariant measure `η`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Lebesgue,
    /// `η_{q,w} = q⁻¹ Σ_{k ∈ ℤ_q} δ_{{w + k/q}}`.
    AtomicOrbit {
        q: u64,
        w: f64,
    },
    /// Absolutely continuous with the transfer operator's stationary density.
    TransferStationary(StationaryDensity),
}

impl MeasureSpec {
    pub fn atomic_orbit(q: u64, w: f64) -> Result<Self> {
        if q == 0 || !(0.0..1.0).contains(&w) {
            return Err(Error::argument(format!(
                "atomic orbit needs q >= 1 and w in [0, 1), got q = {q}, w = {w}"
            )));
        }
        Ok(MeasureSpec::AtomicOrbit { q, w })
    }

    /// The `q` atoms `{w + k/q}` of an atomic orbit measure.
    pub fn atoms(&self) -> Option<Vec<f64>> {
        match self {
            MeasureSpec::AtomicOrbit { q, w } => Some((0..*q).map(|k| frac(w + k as f64 / *q as f64)).collect()),
            _ => None,
        }
    }

    /// Whether `y` lies in the support (within `1e-9` for atomic measures).
    pub fn supports(&self, y: f64) -> bool {
        match self {
            MeasureSpec::AtomicOrbit { .. } => self
                .atoms()
                .unwrap()
                .iter()
                .any(|&a| crate::numeric::circle_distance(a, y) < 1e-9),
            MeasureSpec::TransferStationary(h) => h.value_at(y) > 0.0,
            MeasureSpec::Lebesgue => (0.0..1.0).contains(&y),
        }
    }
}

/// `count` i.i.d. draws from `measure` with a seeded ChaCha generator.
pub fn sample(measure: &MeasureSpec, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(measure, count, &mut rng)
}

/// Like [`sample`], drawing from a caller-owned generator.
pub fn sample_with<R: Rng>(measure: &MeasureSpec, count: usize, rng: &mut R) -> Vec<f64> {
    match measure {
        MeasureSpec::Lebesgue => (0..count).map(|_| rng.gen::<f64>()).collect(),
        MeasureSpec::AtomicOrbit { q, w } => (0..count)
            .map(|_| frac(w + rng.gen_range(0..*q) as f64 / *q as f64))
            .collect(),
        MeasureSpec::TransferStationary(h) => {
            let n = h.bins();
            let mut cdf = Vec::with_capacity(n);
            let mut acc = 0.0;
            for &v in h.values() {
                acc += v / n as f64;
                cdf.push(acc);
            }
            (0..count)
                .map(|_| {
                    let u = rng.gen::<f64>() * acc;
                    let cell = cdf.partition_point(|&c| c <= u).min(n - 1);
                    (cell as f64 + rng.gen::<f64>()) / n as f64
                })
                .collect()
        }
    }
}
