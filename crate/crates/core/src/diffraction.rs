//! Diffraction spectra on the circle `[0, 1)`: atoms plus an optional density.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::autocorrelation::XiSequence;
use crate::combs::CoefficientSeq;
use crate::dynamics::{orbit, IntervalMap, MeasureSpec, ReferencePoint};
use crate::io::fmt_float;
use crate::numeric::{circle_distance, cis_turns, frac, frac_mul, gcd, median};
use crate::observables::Observable;
use crate::transfer::{spectral_data, Projection};
use crate::{Error, Result};

/// Atoms closer than this on the circle are merged.
pub const POSITION_RESOLUTION: f64 = 1e-9;
/// Density samples below `-DENSITY_FLOOR` signal a truncated coefficient series.
pub const DENSITY_FLOOR: f64 = 1e-8;
/// Detection threshold, in multiples of the periodogram median.
pub const DETECTION_FACTOR: f64 = 5.0;
/// Density bins masked on each side of a detected atom.
pub const MASK_HALF_WIDTH: usize = 5;
/// Relative mass below which a rotation mode counts as absent.
pub const NULL_MASS: f64 = 1e-24;
/// Atoms must also exceed `(ln N + margin) ×` the expected continuous
/// contribution at every prefix length.
pub const SIGNIFICANCE_MARGIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    /// Position on the circle, in `[0, 1)`.
    pub position: f64,
    pub mass: f64,
    /// Mode index `m` for rotation spectra.
    pub mode: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    PurePoint,
    AtomPlusAc,
    Estimated,
}

impl SpectrumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpectrumKind::PurePoint => "pure_point",
            SpectrumKind::AtomPlusAc => "atom_plus_ac",
            SpectrumKind::Estimated => "estimated",
        }
    }
}

/// Density samples `g(θ)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySamples {
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffractionSpectrum {
    atoms: Vec<Atom>,
    density: Option<DensitySamples>,
    kind: SpectrumKind,
    /// `Ξ(0)` minus the total atom mass, for truncated pure-point spectra.
    parseval_deficit: Option<f64>,
}

impl DiffractionSpectrum {
    pub fn new(
        atoms: Vec<Atom>,
        density: Option<DensitySamples>,
        kind: SpectrumKind,
        parseval_deficit: Option<f64>,
    ) -> Result<Self> {
        if let Some(a) = atoms
            .iter()
            .find(|a| !(a.mass.is_finite() && a.mass >= 0.0) || !(0.0..1.0).contains(&a.position))
        {
            return Err(Error::argument(format!("invalid atom {a:?}")));
        }
        if let Some(d) = &density {
            if d.theta.len() != d.values.len() {
                return Err(Error::dimension("density grid and values differ in length"));
            }
        }
        Ok(DiffractionSpectrum {
            atoms: merge_atoms(atoms),
            density,
            kind,
            parseval_deficit,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&DensitySamples> {
        self.density.as_ref()
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn parseval_deficit(&self) -> Option<f64> {
        self.parseval_deficit
    }

    pub fn total_atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Atom whose position is within `tol` of `theta` on the circle.
    pub fn atom_near(&self, theta: f64, tol: f64) -> Option<&Atom> {
        self.atoms
            .iter()
            .filter(|a| circle_distance(a.position, theta) <= tol)
            .max_by(|a, b| a.mass.total_cmp(&b.mass))
    }

    /// Rows `(position, mass, mode_index)`; a missing mode is left empty.
    pub fn atoms_csv(&self) -> String {
        let mut out = String::from("position,mass,mode_index\n");
        for a in &self.atoms {
            let mode = a.mode.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{mode}", fmt_float(a.position), fmt_float(a.mass));
        }
        out
    }

    /// Rows `(theta, g)`, empty body when there is no density.
    pub fn density_csv(&self) -> String {
        let mut out = String::from("theta,g\n");
        if let Some(d) = &self.density {
            for (t, g) in d.theta.iter().zip(&d.values) {
                let _ = writeln!(out, "{},{}", fmt_float(*t), fmt_float(*g));
            }
        }
        out
    }
}

/// Merges atoms whose positions are within [`POSITION_RESOLUTION`]; the
/// representative mode is the one with the smaller `|m|` (positive first).
fn merge_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    if atoms.len() < 2 {
        return atoms;
    }
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position).then(mode_order(a.mode, b.mode)));
    let mut groups: Vec<Vec<Atom>> = Vec::new();
    for a in atoms {
        match groups.last_mut() {
            Some(g) if a.position - g.last().unwrap().position <= POSITION_RESOLUTION => g.push(a),
            _ => groups.push(vec![a]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0].position;
        let last = groups.last().unwrap().last().unwrap().position;
        if first + 1.0 - last <= POSITION_RESOLUTION {
            let tail = groups.pop().unwrap();
            groups[0].extend(tail);
        }
    }
    let mut merged: Vec<Atom> = groups
        .into_iter()
        .map(|g| {
            let rep = *g.iter().min_by(|a, b| mode_order(a.mode, b.mode)).unwrap();
            Atom {
                mass: g.iter().map(|a| a.mass).sum(),
                ..rep
            }
        })
        .collect();
    if merged.iter().all(|a| a.mode.is_some()) {
        merged.sort_by_key(|a| a.mode.unwrap());
    }
    merged
}

/// Smaller `|m|` first, then positive before negative; atoms without a mode last.
fn mode_order(a: Option<i64>, b: Option<i64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.abs().cmp(&y.abs()).then(y.cmp(&x)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Drops modes whose mass is rounding noise (below `NULL_MASS × total`); mode 0
/// always stays.
fn prune_null_modes(atoms: Vec<Atom>) -> Vec<Atom> {
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    atoms
        .into_iter()
        .filter(|a| a.mode == Some(0) || a.mass > NULL_MASS * total)
        .collect()
}

/// Symmetric mode range for `ℤ_q`: `-(q-1)/2 ..= q/2`.
fn symmetric_modes(q: u64) -> impl Iterator<Item = i64> {
    let q = q as i64;
    (-(q - 1) / 2)..=(q / 2)
}

/// Pure-point spectrum of the rotation by `p/q` with orbit measure `η_{q,w}`,
/// seen from the reference point `w`.
///
/// `f̂(m) = q⁻¹ Σ_{k ∈ ℤ_q} s(k) e^{-2πi m k p/q}` with `s(k) = f(T^k w)`; the
/// atom of mode `m` sits at `{m p/q}` with mass `|f̂(m)|²`.
pub fn rotation_diffraction_rational(p: u64, q: u64, w: f64, f: &Observable) -> Result<DiffractionSpectrum> {
    if q == 0 || gcd(p, q) != 1 {
        return Err(Error::argument(format!("need gcd(p, q) = 1, got {p}/{q}")));
    }
    MeasureSpec::atomic_orbit(q, w)?;
    let s = f.cyclic_samples(p, q, w)?;
    let atoms = symmetric_modes(q)
        .map(|m| {
            let coef: Complex64 = s
                .iter()
                .enumerate()
                .map(|(k, &sk)| {
                    let r = (m as i128 * k as i128 * p as i128).rem_euclid(q as i128) as f64;
                    let (c, si) = cis_turns(-r / q as f64);
                    sk * Complex64::new(c, si)
                })
                .sum::<Complex64>()
                / q as f64;
            let pos = (m as i128 * p as i128).rem_euclid(q as i128) as f64 / q as f64;
            Atom {
                position: pos,
                mass: coef.norm_sqr(),
                mode: Some(m),
            }
        })
        .collect();
    DiffractionSpectrum::new(prune_null_modes(atoms), None, SpectrumKind::PurePoint, Some(0.0))
}

/// Pure-point spectrum of an irrational rotation, truncated to `|m| ≤ M`.
/// Masses `|f̂(m)|²` do not depend on `α` or the reference point.
pub fn rotation_diffraction_irrational(alpha: f64, f: &Observable, modes: usize) -> Result<DiffractionSpectrum> {
    if !alpha.is_finite() {
        return Err(Error::argument(format!("rotation number {alpha} is not finite")));
    }
    let masses: Vec<f64> = (0..=modes as i64)
        .into_par_iter()
        .map(|m| f.fourier_coefficient(m).norm_sqr())
        .collect();
    let mut atoms = Vec::with_capacity(2 * modes + 1);
    for m in -(modes as i64)..=modes as i64 {
        atoms.push(Atom {
            position: frac_mul(m, alpha),
            mass: masses[m.unsigned_abs() as usize],
            mode: Some(m),
        });
    }
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    let deficit = (f.integrate_square(&MeasureSpec::Lebesgue) - total).max(0.0);
    DiffractionSpectrum::new(prune_null_modes(atoms), None, SpectrumKind::PurePoint, Some(deficit))
}

/// `g(θ) = c₀/2 + Σ_{1≤z≤Z} c_z cos 2πθz`.
pub fn density_from_coefficients(c: &CoefficientSeq, theta: f64) -> f64 {
    let z_max = c.half_window() as i64;
    let mut g = 0.5 * c.get(0).unwrap();
    for z in 1..=z_max {
        g += c.get(z).unwrap() * cis_turns(frac(theta * z as f64)).0;
    }
    g
}

/// Atom `(½ mean², at 0)` plus the density series on `grid`.
pub fn mixing_diffraction_from_coefficients(
    mean_f: f64,
    c: &CoefficientSeq,
    grid: &[f64],
) -> Result<DiffractionSpectrum> {
    let values: Vec<f64> = grid.par_iter().map(|&t| density_from_coefficients(c, t)).collect();
    if let Some((t, g)) = grid.iter().zip(&values).find(|(_, g)| **g < -DENSITY_FLOOR) {
        return Err(Error::Truncation(format!(
            "density {g} at theta = {t}; increase the coefficient window"
        )));
    }
    let atom = Atom {
        position: 0.0,
        mass: 0.5 * mean_f * mean_f,
        mode: Some(0),
    };
    DiffractionSpectrum::new(
        vec![atom],
        Some(DensitySamples {
            theta: grid.to_vec(),
            values,
        }),
        SpectrumKind::AtomPlusAc,
        None,
    )
}

/// Spectrum of a mixing map from its transfer operator.
pub fn mixing_diffraction(
    map: &IntervalMap,
    f: &Observable,
    n_bins: usize,
    half_window: usize,
    grid: &[f64],
) -> Result<DiffractionSpectrum> {
    let data = spectral_data(map, f, half_window, n_bins, Projection::default())?;
    mixing_diffraction_from_coefficients(data.mean_f, &data.c, grid)
}

/// `g_k(θ) = (k − k⁻¹) / (24 (k + k⁻¹ − 2 cos 2πθ))`, the density of `x ↦ {kx}`
/// with `f(x) = x`.
pub fn g_linear_mod(k: u32, theta: f64) -> f64 {
    let k = k as f64;
    (k - 1.0 / k) / (24.0 * (k + 1.0 / k - 2.0 * (2.0 * PI * theta).cos()))
}

/// Fejér mean `Σ_{|z|≤Z} (1 − |z|/(Z+1)) Ξ(z) cos 2πθz` of the Fourier series of `Ξ`.
pub fn fejer_density(xi: &XiSequence, theta: f64) -> f64 {
    let z_max = xi.half_window() as i64;
    let weight = |z: i64| 1.0 - z.abs() as f64 / (z_max + 1) as f64;
    xi.iter()
        .map(|(z, v)| weight(z) * v * cis_turns(frac(theta * z as f64)).0)
        .sum()
}

/// Tuning for [`estimate_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Number of Welch segments for the density.
    pub segments: usize,
    /// Prefix lengths `N, N/2, …` that an atom must survive.
    pub stability_levels: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            segments: 256,
            stability_levels: 3,
        }
    }
}

/// Orbit samples `f(Tⁿ y)`, `n < N`, and the convention factor (½ for
/// non-invertible maps).
fn one_sided_samples(map: &IntervalMap, f: &Observable, y: ReferencePoint, horizon: usize) -> Result<(Vec<f64>, f64)> {
    let pts = orbit(map, y, 0, horizon)?;
    let w = pts.iter().map(|&x| f.checked_eval(x)).collect::<Result<Vec<_>>>()?;
    let kappa = if map.is_invertible() { 1.0 } else { 0.5 };
    Ok((w, kappa))
}

/// `κ |Σ_{n<L} w_n e^{-2πiθn}|² / L²`, the atom-mass statistic of a prefix.
pub fn prefix_mass(w: &[f64], kappa: f64, theta: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &x) in w.iter().enumerate() {
        let (c, s) = cis_turns(frac(theta * n as f64));
        re += x * c;
        im -= x * s;
    }
    kappa * (re * re + im * im) / (w.len() as f64).powi(2)
}

/// `κ |S_L(j/N)|² / L²` for all `j`, via one zero-padded FFT of length `N`.
fn padded_masses(w: &[f64], len: usize, kappa: f64, total: usize) -> Vec<f64> {
    let mut buf: Vec<Complex64> = w[..len].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    buf.resize(total, Complex64::new(0.0, 0.0));
    FftPlanner::<f64>::new().plan_fft_forward(total).process(&mut buf);
    let scale = kappa / (len as f64).powi(2);
    buf.iter().map(|c| c.norm_sqr() * scale).collect()
}

/// Golden-section maximization of `g` on `[a, b]`.
fn golden_max(a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..60 {
        if b - a < 1e-13 {
            break;
        }
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        }
    }
    0.5 * (a + b)
}

/// Spectrum estimated from one orbit of length `N`.
///
/// Atoms: local maxima of the mass statistic `κ|S_N(θ)|²/N²` on the Fourier grid
/// that exceed `5 ×` its median and `(ln N + 10) ĝ(θ)/L` at every prefix length
/// `L = N, N/2, N/4` (`ĝ` the unmasked Welch spectrum), and whose masses at those
/// lengths agree within a factor 2; positions are refined by
/// golden-section search within one bin. Density: Welch average of
/// `κ|S_seg|²/L` over `K` segments of length `L = N/K` on the grid `j/L`, with
/// bins near detected atoms removed.
pub fn estimate_spectrum(
    map: &IntervalMap,
    f: &Observable,
    y: impl Into<ReferencePoint>,
    horizon: usize,
    options: EstimateOptions,
) -> Result<DiffractionSpectrum> {
    let levels = options.stability_levels.max(1);
    if horizon < 1 << 12 {
        return Err(Error::argument(format!("horizon {horizon} below 4096")));
    }
    if options.segments == 0 || !horizon.is_multiple_of(options.segments) {
        return Err(Error::argument(format!(
            "segment count {} must divide the horizon {horizon}",
            options.segments
        )));
    }
    let (w, kappa) = one_sided_samples(map, f, y.into(), horizon)?;
    let welch = welch_spectrum(&w, kappa, options.segments);
    let atoms = detect_atoms(&w, kappa, levels, &welch);
    let density = masked_density(&welch, &atoms);
    DiffractionSpectrum::new(atoms, Some(density), SpectrumKind::Estimated, None)
}

/// Noise level `ĝ(θ)` from the Welch spectrum: the larger of the two
/// neighbouring segment bins.
fn welch_level(welch: &[f64], theta: f64) -> f64 {
    let len = welch.len();
    let x = frac(theta) * len as f64;
    let lo = (x.floor() as usize) % len;
    welch[lo].max(welch[(lo + 1) % len])
}

fn detect_atoms(w: &[f64], kappa: f64, levels: usize, welch: &[f64]) -> Vec<Atom> {
    let n = w.len();
    let level_masses: Vec<Vec<f64>> = (0..levels).map(|l| padded_masses(w, n >> l, kappa, n)).collect();
    let thresholds: Vec<f64> = level_masses
        .iter()
        .map(|q| {
            let max = q.iter().cloned().fold(0.0, f64::max);
            (DETECTION_FACTOR * median(q)).max(1e-9 * max)
        })
        .collect();
    // A continuous part contributes about ĝ(θ)/L at prefix length L with an
    // exponential tail; atoms stay at their mass.
    let significance = (n as f64).ln() + SIGNIFICANCE_MARGIN;
    let accept = |masses: &[f64], theta: f64| {
        let noise = welch_level(welch, theta);
        let lo = masses.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = masses.iter().cloned().fold(0.0, f64::max);
        lo > 0.0
            && hi <= 2.0 * lo
            && masses
                .iter()
                .zip(&thresholds)
                .enumerate()
                .all(|(l, (&m, &t))| m > t && m > significance * noise / (n >> l) as f64)
    };
    let full = &level_masses[0];
    let candidates: Vec<usize> = (0..n)
        .filter(|&j| {
            let q = full[j];
            q >= full[(j + n - 1) % n]
                && q >= full[(j + 1) % n]
                && level_masses.iter().zip(&thresholds).all(|(lm, &t)| lm[j] > t)
                && level_masses
                    .iter()
                    .enumerate()
                    .all(|(l, lm)| lm[j] > significance * welch_level(welch, j as f64 / n as f64) / (n >> l) as f64)
        })
        .collect();
    let step = 1.0 / n as f64;
    let mut atoms: Vec<Atom> = candidates
        .par_iter()
        .filter_map(|&j| {
            let centre = j as f64 * step;
            let theta = golden_max(centre - step, centre + step, |t| prefix_mass(w, kappa, t));
            let masses: Vec<f64> = (0..levels).map(|l| prefix_mass(&w[..n >> l], kappa, theta)).collect();
            let position = frac(theta);
            accept(&masses, theta).then(|| Atom {
                position: if 1.0 - position < 1e-12 { 0.0 } else { position },
                mass: masses[0],
                mode: None,
            })
        })
        .collect();
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
    atoms
}

/// Welch average `κ |S_seg(j/L)|² / L` over `K` segments of length `L = N/K`.
fn welch_spectrum(w: &[f64], kappa: f64, segments: usize) -> Vec<f64> {
    let len = w.len() / segments;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let mut acc = vec![0.0; len];
    for seg in w.chunks_exact(len) {
        let mut buf: Vec<Complex64> = seg.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }
    let scale = kappa / (len as f64 * segments as f64);
    acc.iter_mut().for_each(|a| *a *= scale);
    acc
}

/// Welch spectrum with bins near detected atoms removed.
fn masked_density(welch: &[f64], atoms: &[Atom]) -> DensitySamples {
    let len = welch.len();
    let radius = MASK_HALF_WIDTH as f64 / len as f64 + 0.5 / len as f64;
    let mut theta = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for (j, &v) in welch.iter().enumerate() {
        let t = j as f64 / len as f64;
        if atoms.iter().any(|at| circle_distance(at.position, t) < radius) {
            continue;
        }
        theta.push(t);
        values.push(v);
    }
    DensitySamples { theta, values }
}

/// The `K` heaviest atoms, by mass, then smaller `|m|`, then positive `m`.
/// The flag is set when fewer than `K` atoms exist.
pub fn top_atoms(spec: &DiffractionSpectrum, count: usize) -> Result<(Vec<Atom>, bool)> {
    if spec.atoms.is_empty() {
        return Err(Error::argument("spectrum has no atoms"));
    }
    let mut atoms = spec.atoms.clone();
    atoms.sort_by(|a, b| {
        b.mass
            .total_cmp(&a.mass)
            .then(mode_order(a.mode, b.mode))
            .then(a.position.total_cmp(&b.position))
    });
    let truncated = count > atoms.len();
    atoms.truncate(count);
    Ok((atoms, truncated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autocorrelation::{xi_analytic_linear_mod, xi_rotation_rational};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn half_rotation_spectrum() {
        let spec = rotation_diffraction_rational(1, 2, 0.0, &Observable::identity()).unwrap();
        assert_eq!(spec.atoms().len(), 2);
        let a0 = spec.atom_near(0.0, 1e-12).unwrap();
        let a1 = spec.atom_near(0.5, 1e-12).unwrap();
        close(a0.mass, 1.0 / 16.0, 1e-16);
        close(a1.mass, 1.0 / 16.0, 1e-16);
        let xi = xi_rotation_rational(1, 2, 0.0, &Observable::identity(), 0).unwrap();
        close(spec.total_atom_mass(), xi.get(0).unwrap(), 1e-15);
    }

    #[test]
    fn constant_observable_has_one_atom() {
        let one = Observable::constant(1.0).unwrap();
        let spec = rotation_diffraction_rational(2, 7, 0.0, &one).unwrap();
        close(spec.atom_near(0.0, 1e-12).unwrap().mass, 1.0, 1e-15);
        assert_eq!(spec.atoms().len(), 1);
        let c = Observable::constant(0.6).unwrap();
        let spec = rotation_diffraction_irrational(0.3819660112501051, &c, 20).unwrap();
        close(spec.atom_near(0.0, 1e-12).unwrap().mass, 0.36, 1e-15);
        close(spec.parseval_deficit().unwrap(), 0.0, 1e-15);
        assert_eq!(spec.atoms().len(), 1);
        let zero = Observable::constant(0.0).unwrap();
        let spec = rotation_diffraction_rational(1, 3, 0.0, &zero).unwrap();
        assert_eq!(spec.atoms().len(), 1);
        assert_eq!(spec.atoms()[0].mode, Some(0));
    }

    #[test]
    fn null_modes_are_dropped() {
        // Even modes of the indicator of half the circle vanish.
        let f = Observable::indicator(0.0, 0.5).unwrap();
        let spec = rotation_diffraction_irrational(0.3819660112501051, &f, 10).unwrap();
        let modes: Vec<i64> = spec.atoms().iter().map(|a| a.mode.unwrap()).collect();
        assert_eq!(modes, vec![-9, -7, -5, -3, -1, 0, 1, 3, 5, 7, 9]);
    }

    #[test]
    fn rational_spectrum_is_the_fourier_transform_of_xi() {
        let f = Observable::step(vec![0.0, 0.25, 0.6, 1.0], vec![1.0, 0.3, 2.0]).unwrap();
        for (p, q, y) in [(2u64, 5u64, 0.1), (3, 7, 0.0), (5, 12, 1.0 / 24.0)] {
            let spec = rotation_diffraction_rational(p, q, y, &f).unwrap();
            assert_eq!(spec.atoms().len(), q as usize);
            let xi = xi_rotation_rational(p, q, y, &f, q as usize).unwrap();
            for z in 0..=q as i64 {
                let series: f64 = spec
                    .atoms()
                    .iter()
                    .map(|a| a.mass * cis_turns(frac(a.position * z as f64)).0)
                    .sum();
                close(series, xi.get(z).unwrap(), 1e-13);
            }
        }
    }

    #[test]
    fn rational_spectrum_checks_arguments() {
        let f = Observable::identity();
        assert!(rotation_diffraction_rational(2, 6, 0.0, &f).is_err());
        assert!(rotation_diffraction_rational(1, 3, 1.0, &f).is_err());
    }

    #[test]
    fn irrational_identity_spectrum() {
        let alpha = PI / 20.0;
        let spec = rotation_diffraction_irrational(alpha, &Observable::identity(), 50).unwrap();
        assert_eq!(spec.atoms().len(), 101);
        close(spec.atom_near(0.0, 1e-12).unwrap().mass, 0.25, 1e-15);
        for m in [1i64, -1] {
            let a = spec.atom_near(frac(m as f64 * alpha), 1e-12).unwrap();
            close(a.mass, 1.0 / (4.0 * PI * PI), 1e-15);
        }
        let tail = 1.0 / (2.0 * PI * PI * 50.0);
        assert!(spec.parseval_deficit().unwrap() <= tail);
        let big = rotation_diffraction_irrational(alpha, &Observable::identity(), 10_000).unwrap();
        assert!(big.parseval_deficit().unwrap() <= 1e-4 / 3.0);
    }

    #[test]
    fn merging_adds_masses() {
        let atoms = vec![
            Atom {
                position: 0.3,
                mass: 0.1,
                mode: Some(2),
            },
            Atom {
                position: 0.3 + 5e-10,
                mass: 0.2,
                mode: Some(-1),
            },
            Atom {
                position: 1.0 - 4e-10,
                mass: 0.05,
                mode: Some(3),
            },
            Atom {
                position: 1e-10,
                mass: 0.05,
                mode: Some(0),
            },
        ];
        let spec = DiffractionSpectrum::new(atoms, None, SpectrumKind::PurePoint, None).unwrap();
        assert_eq!(spec.atoms().len(), 2);
        let a = spec.atom_near(0.3, 1e-6).unwrap();
        close(a.mass, 0.3, 1e-15);
        assert_eq!(a.mode, Some(-1));
        let b = spec.atom_near(0.0, 1e-6).unwrap();
        close(b.mass, 0.1, 1e-15);
        assert_eq!(b.mode, Some(0));
    }

    #[test]
    fn mixing_series_and_closed_form() {
        let map = IntervalMap::linear_mod(2).unwrap();
        let grid: Vec<f64> = (0..64).map(|j| j as f64 / 64.0).collect();
        let spec = mixing_diffraction(&map, &Observable::identity(), 1 << 10, 64, &grid).unwrap();
        close(spec.atoms()[0].mass, 0.125, 1e-12);
        close(spec.atoms()[0].position, 0.0, 0.0);
        let d = spec.density().unwrap();
        for (t, g) in d.theta.iter().zip(&d.values) {
            close(*g, g_linear_mod(2, *t), 1e-9);
        }
        close(g_linear_mod(2, 0.0), 0.125, 1e-15);
        close(g_linear_mod(3, 0.5), 1.0 / 48.0, 1e-15);
    }

    #[test]
    fn truncated_series_is_reported() {
        // c = (1, -0.9) gives g(0) = 0.5 - 0.9 < 0.
        let c = CoefficientSeq::symmetric_from_nonnegative(&[1.0, -0.9]);
        assert!(matches!(
            mixing_diffraction_from_coefficients(0.0, &c, &[0.0, 0.5]),
            Err(Error::Truncation(_))
        ));
    }

    #[test]
    fn fejer_means_converge_to_the_density() {
        let xi = xi_analytic_linear_mod(3, &Observable::identity(), 2000).unwrap();
        for theta in [0.2, 0.35, 0.5, 0.77] {
            close(fejer_density(&xi, theta), g_linear_mod(3, theta), 1e-3);
        }
    }

    #[test]
    fn estimated_half_rotation_atoms() {
        let map = IntervalMap::rotation_rational(1, 2).unwrap();
        let spec = estimate_spectrum(&map, &Observable::identity(), 0.0, 1 << 12, EstimateOptions::default()).unwrap();
        assert_eq!(spec.atoms().len(), 2);
        close(spec.atom_near(0.0, 1e-6).unwrap().mass, 1.0 / 16.0, 1e-12);
        close(spec.atom_near(0.5, 1e-6).unwrap().mass, 1.0 / 16.0, 1e-12);
    }

    #[test]
    fn zero_observable_has_an_empty_estimate() {
        let map = IntervalMap::linear_mod(2).unwrap();
        let zero = Observable::constant(0.0).unwrap();
        let spec = estimate_spectrum(
            &map,
            &zero,
            ReferencePoint::Typical { seed: 3 },
            1 << 12,
            EstimateOptions::default(),
        )
        .unwrap();
        assert!(spec.atoms().is_empty());
        assert!(spec.density().unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn estimate_rejects_bad_sizes() {
        let map = IntervalMap::linear_mod(2).unwrap();
        let f = Observable::identity();
        let y = ReferencePoint::Typical { seed: 3 };
        assert!(estimate_spectrum(&map, &f, y, 1000, EstimateOptions::default()).is_err());
        let opts = EstimateOptions {
            segments: 3,
            ..Default::default()
        };
        assert!(estimate_spectrum(&map, &f, y, 1 << 12, opts).is_err());
    }

    #[test]
    fn top_atoms_order() {
        let spec = rotation_diffraction_irrational(PI / 20.0, &Observable::identity(), 30).unwrap();
        let (top, truncated) = top_atoms(&spec, 3).unwrap();
        assert!(!truncated);
        assert_eq!(top.iter().map(|a| a.mode.unwrap()).collect::<Vec<_>>(), vec![0, 1, -1]);
        let (all, truncated) = top_atoms(&spec, 100).unwrap();
        assert!(truncated);
        assert_eq!(all.len(), 61);
        let equal: Vec<Atom> = [3i64, -1, 2, 1, -3]
            .iter()
            .map(|&m| Atom {
                position: frac(m as f64 * 0.1 + 0.05),
                mass: 0.5,
                mode: Some(m),
            })
            .collect();
        let spec = DiffractionSpectrum::new(equal, None, SpectrumKind::PurePoint, None).unwrap();
        let (top, _) = top_atoms(&spec, 5).unwrap();
        assert_eq!(
            top.iter().map(|a| a.mode.unwrap()).collect::<Vec<_>>(),
            vec![1, -1, 2, 3, -3]
        );
    }
}
