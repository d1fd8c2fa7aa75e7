//! Discretized Perron–Frobenius operators for piecewise monotone maps.
//!
//! The operator acts on functions that are affine on each cell
//! `I_i = [i/n, (i+1)/n)`, written as `a₀ + a₁ φ_i` with `φ_i` the first
//! Legendre polynomial of the cell. Each cell-to-cell transition therefore
//! carries a 2×2 block of moments,
//!
//! ```text
//! K[(i,a) → (j,b)] = norm_b · n · ∫_{I_i ∩ T⁻¹ I_j} φ_{i,a}(x) ψ_{j,b}(T x) dx,   norm = (1, 3),
//! ```
//!
//! whose `(0, 0)` entry is the classic Ulam matrix
//! `Λ(I_i ∩ T⁻¹ I_j) / Λ(I_i)`. [`Projection::CellAverage`] uses that entry
//! alone; [`Projection::CellLinear`] keeps the slope channel, which makes the
//! discretization exact on affine Markov maps such as `x ↦ {kx}`.

use rayon::prelude::*;

use crate::combs::CoefficientSeq;
use crate::dynamics::{Branch, IntervalMap, MeasureSpec};
use crate::numeric::gauss_legendre;
use crate::observables::Observable;
use crate::{Error, Result};

/// Power-iteration cap for [`stationary_density`].
pub const MAX_POWER_ITERATIONS: usize = 200_000;
/// Convergence threshold (sup-norm change) for [`stationary_density`].
pub const POWER_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// Piecewise-constant (classic Ulam) projection.
    CellAverage,
    /// Piecewise-affine projection: cell mean plus first Legendre moment.
    #[default]
    CellLinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Transition {
    target: usize,
    /// `block[a][b]`, source basis `a`, target basis `b`.
    block: [[f64; 2]; 2],
}

/// Discretized transfer operator on `bins` equal cells.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    bins: usize,
    rows: Vec<Vec<Transition>>,
}

impl UlamOperator {
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Ulam matrix entry `Λ(I_i ∩ T⁻¹ I_j) / Λ(I_i)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .filter(|t| t.target == j)
            .map(|t| t.block[0][0])
            .sum()
    }

    /// Non-zero Ulam entries of row `i` as `(j, value)`.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        self.rows[i].iter().map(|t| (t.target, t.block[0][0])).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|t| t.block[0][0]).sum()
    }

    /// Dense copy of the Ulam matrix (for small operators and tests).
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.bins]; self.bins];
        for (i, row) in self.rows.iter().enumerate() {
            for t in row {
                m[i][t.target] += t.block[0][0];
            }
        }
        m
    }

    /// One step of the transfer operator on cell densities: `v ↦ v M`.
    pub fn push_density(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for (i, row) in self.rows.iter().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for t in row {
                out[t.target] += vi * t.block[0][0];
            }
        }
        out
    }

    /// One step of the transfer operator on piecewise-affine coefficients.
    pub fn push_moments(&self, v: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.bins];
        for (i, row) in self.rows.iter().enumerate() {
            let [a0, a1] = v[i];
            if a0 == 0.0 && a1 == 0.0 {
                continue;
            }
            for t in row {
                let o = &mut out[t.target];
                o[0] += a0 * t.block[0][0] + a1 * t.block[1][0];
                o[1] += a0 * t.block[0][1] + a1 * t.block[1][1];
            }
        }
        out
    }
}

/// Builds the discretized transfer operator of a piecewise monotone (or
/// `LinearMod`) map on `n_bins` cells.
///
/// Affine branches are handled by exact interval arithmetic; general monotone
/// branches invert by bisection and integrate the slope moments by 8-point
/// Gauss–Legendre quadrature on each preimage piece.
pub fn build_ulam(map: &IntervalMap, n_bins: usize) -> Result<UlamOperator> {
    if n_bins < 2 {
        return Err(Error::argument(format!("need at least 2 bins, got {n_bins}")));
    }
    let branches = map
        .branches()
        .ok_or_else(|| Error::argument("Ulam discretization needs a piecewise monotone map"))?;
    for b in &branches {
        b.check_derivative()?;
    }
    let n = n_bins as f64;
    let rows: Vec<Vec<Transition>> = (0..n_bins)
        .into_par_iter()
        .map(|i| {
            let cell_lo = i as f64 / n;
            let cell_hi = (i + 1) as f64 / n;
            let mut row: Vec<Transition> = Vec::new();
            for b in &branches {
                let lo = cell_lo.max(b.lo());
                let hi = cell_hi.min(b.hi());
                if hi > lo {
                    cell_transitions(b, i, lo, hi, n_bins, &mut row);
                }
            }
            merge_targets(&mut row);
            let total: f64 = row.iter().map(|t| t.block[0][0]).sum();
            if total > 0.0 {
                for t in row.iter_mut() {
                    for a in 0..2 {
                        for c in 0..2 {
                            t.block[a][c] /= total;
                        }
                    }
                }
            }
            row
        })
        .collect();
    Ok(UlamOperator { bins: n_bins, rows })
}

fn cell_transitions(b: &Branch, i: usize, lo: f64, hi: f64, bins: usize, row: &mut Vec<Transition>) {
    let n = bins as f64;
    let ya = b.apply(lo).clamp(0.0, 1.0);
    let yb = b.apply(hi).clamp(0.0, 1.0);
    let (ylo, yhi) = if ya <= yb { (ya, yb) } else { (yb, ya) };
    if yhi <= ylo {
        return;
    }
    let first = ((ylo * n).floor() as usize).min(bins - 1);
    let last = ((yhi * n).ceil() as usize).clamp(first + 1, bins);
    let src_mid = (i as f64 + 0.5) / n;
    for j in first..last {
        let tlo = ylo.max(j as f64 / n);
        let thi = yhi.min((j + 1) as f64 / n);
        if thi <= tlo {
            continue;
        }
        let (mut x0, mut x1) = (b.inverse(tlo), b.inverse(thi));
        if x0 > x1 {
            std::mem::swap(&mut x0, &mut x1);
        }
        let x0 = x0.max(lo);
        let x1 = x1.min(hi);
        if x1 <= x0 {
            continue;
        }
        let dst_mid = (j as f64 + 0.5) / n;
        let phi = |x: f64| 2.0 * n * (x - src_mid);
        let psi = |x: f64| 2.0 * n * (b.apply(x) - dst_mid);
        let block = [
            [n * (x1 - x0), 3.0 * n * gauss_legendre(x0, x1, psi)],
            [
                n * gauss_legendre(x0, x1, phi),
                3.0 * n * gauss_legendre(x0, x1, |x| phi(x) * psi(x)),
            ],
        ];
        row.push(Transition { target: j, block });
    }
}

fn merge_targets(row: &mut Vec<Transition>) {
    row.sort_by_key(|t| t.target);
    let mut merged: Vec<Transition> = Vec::with_capacity(row.len());
    for t in row.drain(..) {
        match merged.last_mut() {
            Some(last) if last.target == t.target => {
                for a in 0..2 {
                    for c in 0..2 {
                        last.block[a][c] += t.block[a][c];
                    }
                }
            }
            _ => merged.push(t),
        }
    }
    *row = merged;
}

/// Piecewise-constant invariant density on the Ulam cells, normalized to
/// `∫ h dΛ = 1` (i.e. mean cell value 1).
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDensity {
    values: Vec<f64>,
}

impl StationaryDensity {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::argument("density values must be finite and >= 0"));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean <= 0.0 {
            return Err(Error::argument("density has zero mass"));
        }
        Ok(StationaryDensity {
            values: values.into_iter().map(|v| v / mean).collect(),
        })
    }

    pub fn uniform(bins: usize) -> Self {
        StationaryDensity {
            values: vec![1.0; bins],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.values.len();
        self.values[((x * n as f64) as usize).min(n - 1)]
    }
}

/// Eigenvector of the Ulam matrix for eigenvalue 1, by power iteration from
/// the uniform density.
pub fn stationary_density(op: &UlamOperator) -> Result<StationaryDensity> {
    let n = op.bins;
    let mut h = vec![1.0; n];
    for _ in 0..MAX_POWER_ITERATIONS {
        let mut next = op.push_density(&h);
        for v in next.iter_mut() {
            *v = v.max(0.0);
        }
        let mean = next.iter().sum::<f64>() / n as f64;
        if mean <= 0.0 {
            return Err(Error::Spectral("density vanished under iteration".into()));
        }
        next.iter_mut().for_each(|v| *v /= mean);
        let change = h.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        h = next;
        if change < POWER_TOLERANCE {
            return StationaryDensity::new(h);
        }
    }
    Err(Error::Spectral(format!(
        "power iteration did not reach {POWER_TOLERANCE:e} after {MAX_POWER_ITERATIONS} steps"
    )))
}

/// Everything the mixing diffraction needs from the transfer operator.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub h: StationaryDensity,
    /// `∫ f h dΛ`.
    pub mean_f: f64,
    /// `c_z` on `[-Z, Z]`.
    pub c: CoefficientSeq,
}

/// `c_z = ∫ P^{|z|}(f h) f dΛ − (∫ f dη)²` for `z ≠ 0`, and
/// `c_0 = ∫ f² dη − (∫ f dη)²`.
pub fn correlation_coefficients(
    op: &UlamOperator,
    h: &StationaryDensity,
    f: &Observable,
    window: usize,
    projection: Projection,
) -> Result<CoefficientSeq> {
    if h.bins() != op.bins {
        return Err(Error::dimension(format!(
            "density has {} bins, operator {}",
            h.bins(),
            op.bins
        )));
    }
    let n = op.bins;
    let eta = MeasureSpec::TransferStationary(h.clone());
    let mean = f.integrate(&eta);
    let c0 = f.integrate_square(&eta) - mean * mean;
    let moments: Vec<(f64, f64)> = (0..n)
        .map(|j| f.cell_moments(j as f64 / n as f64, (j + 1) as f64 / n as f64))
        .collect();
    let mut values = vec![0.0; window + 1];
    values[0] = c0;
    match projection {
        Projection::CellAverage => {
            let mut u: Vec<f64> = moments.iter().zip(h.values()).map(|(m, hv)| m.0 * hv).collect();
            for v in values.iter_mut().skip(1) {
                u = op.push_density(&u);
                let pair: f64 = u.iter().zip(&moments).map(|(a, m)| a * m.0).sum::<f64>() / n as f64;
                *v = pair - mean * mean;
            }
        }
        Projection::CellLinear => {
            let mut u: Vec<[f64; 2]> = moments
                .iter()
                .zip(h.values())
                .map(|(m, hv)| [m.0 * hv, 3.0 * m.1 * hv])
                .collect();
            for v in values.iter_mut().skip(1) {
                u = op.push_moments(&u);
                let pair: f64 = u
                    .iter()
                    .zip(&moments)
                    .map(|(a, m)| a[0] * m.0 + a[1] * m.1)
                    .sum::<f64>()
                    / n as f64;
                *v = pair - mean * mean;
            }
        }
    }
    Ok(CoefficientSeq::symmetric_from_nonnegative(&values))
}

/// Operator, stationary density and `c_z` in one call.
pub fn spectral_data(
    map: &IntervalMap,
    f: &Observable,
    window: usize,
    n_bins: usize,
    projection: Projection,
) -> Result<SpectralData> {
    let op = build_ulam(map, n_bins)?;
    let h = stationary_density(&op)?;
    let c = correlation_coefficients(&op, &h, f, window, projection)?;
    let mean_f = f.integrate(&MeasureSpec::TransferStationary(h.clone()));
    Ok(SpectralData { h, mean_f, c })
}
