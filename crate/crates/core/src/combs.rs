//! Return-time combs on ℤ, their windowed autocorrelations and periodograms.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dynamics::{orbit, IntervalMap, ReferencePoint};
use crate::io::{fmt_float, parse_csv_rows};
use crate::numeric::{cis_turns, frac};
use crate::observables::Observable;
use crate::{Error, Result};

/// Above this half-window the autocorrelation is computed through an FFT.
const DIRECT_AUTOCORRELATION_LIMIT: usize = 512;

/// A finitely supported comb `Σ w(z) δ_z`, stored from `origin` upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedComb {
    origin: i64,
    weights: Vec<f64>,
    invertible: bool,
}

impl WeightedComb {
    pub fn new(origin: i64, weights: Vec<f64>, invertible: bool) -> Result<Self> {
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::argument(format!(
                "comb weight at z = {} is {w}",
                origin + i as i64
            )));
        }
        if !invertible && origin < 0 {
            return Err(Error::argument(format!(
                "comb of a non-invertible map cannot start at {origin}"
            )));
        }
        Ok(WeightedComb {
            origin,
            weights,
            invertible,
        })
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    /// Largest index carrying a stored weight.
    pub fn end(&self) -> i64 {
        self.origin + self.weights.len() as i64 - 1
    }

    /// Weight at `z`; zero outside the stored range.
    pub fn weight(&self, z: i64) -> f64 {
        let i = z - self.origin;
        if i < 0 || i >= self.weights.len() as i64 {
            0.0
        } else {
            self.weights[i as usize]
        }
    }

    /// The weights on `B_n = [-n, n]`, after checking the comb covers the
    /// window (for non-invertible combs only `[0, n]` needs to be stored).
    fn window(&self, n: usize) -> Result<Vec<f64>> {
        let n = n as i64;
        let lo = if self.invertible { -n } else { 0 };
        if self.origin > lo || self.end() < n {
            return Err(Error::dimension(format!(
                "window [-{n}, {n}] exceeds comb support [{}, {}]",
                self.origin,
                self.end()
            )));
        }
        Ok((-n..=n).map(|z| self.weight(z)).collect())
    }

    /// Serializes as `(z, weight)` rows under a `# rtdiff-comb v1` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# rtdiff-comb v1\n");
        let _ = writeln!(out, "# invertible={}", self.invertible);
        out.push_str("z,weight\n");
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.origin + i as i64, fmt_float(*w));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("# rtdiff-comb v1") {
            return Err(Error::Parse("missing '# rtdiff-comb v1' header".into()));
        }
        let invertible = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("# invertible="))
            .map(|v| v.trim() == "true")
            .unwrap_or(false);
        let rows = parse_csv_rows(text, &["z", "weight"])?;
        let mut origin = None;
        let mut weights = Vec::with_capacity(rows.len());
        for (line, row) in rows {
            let z: i64 = row[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad index '{}'", row[0])))?;
            let w: f64 = row[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad weight '{}'", row[1])))?;
            let start = *origin.get_or_insert(z);
            if z != start + weights.len() as i64 {
                return Err(Error::Parse(format!("line {line}: indices must be consecutive")));
            }
            weights.push(w);
        }
        WeightedComb::new(origin.unwrap_or(0), weights, invertible)
    }
}

/// Real values indexed by `z ∈ [-Z, Z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSeq {
    half_window: usize,
    values: Vec<f64>,
}

impl CoefficientSeq {
    /// `values[i]` is the value at `z = i - Z`.
    pub fn new(half_window: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * half_window + 1 {
            return Err(Error::dimension(format!(
                "half window {half_window} needs {} values, got {}",
                2 * half_window + 1,
                values.len()
            )));
        }
        Ok(CoefficientSeq { half_window, values })
    }

    pub fn from_fn(half_window: usize, f: impl Fn(i64) -> f64) -> Self {
        let z = half_window as i64;
        CoefficientSeq {
            half_window,
            values: (-z..=z).map(f).collect(),
        }
    }

    /// Even extension of values given for `z = 0, 1, …, Z`.
    pub fn symmetric_from_nonnegative(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let z = values.len() - 1;
        Self::from_fn(z, |k| values[k.unsigned_abs() as usize])
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, z: i64) -> Option<f64> {
        if z.unsigned_abs() as usize > self.half_window {
            None
        } else {
            Some(self.values[(z + self.half_window as i64) as usize])
        }
    }

    /// `(z, value)` pairs in increasing `z`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let z0 = -(self.half_window as i64);
        self.values.iter().enumerate().map(move |(i, v)| (z0 + i as i64, *v))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let z = self.half_window as i64;
        (1..=z)
            .map(|k| (self.get(k).unwrap() - self.get(-k).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    /// Restriction to a smaller window.
    pub fn truncate(&self, half_window: usize) -> Result<Self> {
        if half_window > self.half_window {
            return Err(Error::dimension(format!(
                "cannot widen window {} to {half_window}",
                self.half_window
            )));
        }
        Ok(Self::from_fn(half_window, |z| self.get(z).unwrap()))
    }
}

/// The comb `Σ f(T^z y) δ_z`: `z = 0..=N` for non-invertible maps, `z = -N..=N`
/// for rotations.
pub fn build_comb(
    map: &IntervalMap,
    f: &Observable,
    y: impl Into<ReferencePoint>,
    horizon: usize,
) -> Result<WeightedComb> {
    if horizon == 0 {
        return Err(Error::argument("comb horizon must be >= 1"));
    }
    let y = y.into();
    let invertible = map.is_invertible();
    let (start, len) = if invertible {
        (-(horizon as i64), 2 * horizon + 1)
    } else {
        (0, horizon + 1)
    };
    let points = orbit(map, y, start, len)?;
    let weights = points.iter().map(|&x| f.checked_eval(x)).collect::<Result<Vec<_>>>()?;
    WeightedComb::new(start, weights, invertible)
}

/// `γ_n(z) = (2n+1)⁻¹ Σ w(m) w(m+z)` with `m, m+z ∈ [-n, n]`, for `|z| ≤ 2n`.
pub fn finite_autocorrelation(comb: &WeightedComb, n: usize) -> Result<CoefficientSeq> {
    if n == 0 {
        return Err(Error::argument("autocorrelation window must be >= 1"));
    }
    let w = comb.window(n)?;
    let raw = if n <= DIRECT_AUTOCORRELATION_LIMIT {
        lagged_products_direct(&w)
    } else {
        lagged_products_fft(&w)
    };
    let norm = (2 * n + 1) as f64;
    let max_lag = 2 * n;
    Ok(CoefficientSeq::from_fn(max_lag, |z| {
        raw[z.unsigned_abs() as usize] / norm
    }))
}

/// `r(k) = Σ_i w_i w_{i+k}` for `k = 0..len`.
fn lagged_products_direct(w: &[f64]) -> Vec<f64> {
    (0..w.len())
        .into_par_iter()
        .map(|k| w.iter().zip(&w[k..]).map(|(a, b)| a * b).sum())
        .collect()
}

fn lagged_products_fft(w: &[f64]) -> Vec<f64> {
    let len = (2 * w.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    buf.iter().take(w.len()).map(|c| c.re / len as f64).collect()
}

/// `P_n(θ) = |Σ_{m ∈ B_n} w(m) e^{-2πiθm}|² / (2n+1)`, evaluated directly at
/// each grid frequency.
pub fn periodogram(comb: &WeightedComb, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::argument("periodogram window must be >= 1"));
    }
    let w = comb.window(n)?;
    let n_i = n as i64;
    let norm = (2 * n + 1) as f64;
    Ok(grid
        .par_iter()
        .map(|&theta| {
            let theta = frac(theta);
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in w.iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let m = i as i64 - n_i;
                let (c, s) = cis_turns(frac(theta * m as f64));
                re += x * c;
                im -= x * s;
            }
            (re * re + im * im) / norm
        })
        .collect())
}

/// Fourier frequencies `j / len` for `j = 0..len`.
pub fn fourier_grid(len: usize) -> Vec<f64> {
    (0..len).map(|j| j as f64 / len as f64).collect()
}

/// [`periodogram`] on the Fourier grid `j / len`, by folding the window modulo
/// `len` and applying one FFT.
pub fn periodogram_fourier(comb: &WeightedComb, n: usize, len: usize) -> Result<Vec<f64>> {
    if n == 0 || len == 0 {
        return Err(Error::argument("periodogram window and grid must be >= 1"));
    }
    let w = comb.window(n)?;
    let n_i = n as i64;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (i, &x) in w.iter().enumerate() {
        let m = i as i64 - n_i;
        buf[m.rem_euclid(len as i64) as usize].re += x;
    }
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut buf);
    let norm = (2 * n + 1) as f64;
    Ok(buf.iter().map(|c| c.norm_sqr() / norm).collect())
}
