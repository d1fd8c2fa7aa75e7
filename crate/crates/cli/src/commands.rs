use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use rtdiff_core::autocorrelation::{
    xi_analytic_linear_mod, xi_distance, xi_empirical, xi_mixing, xi_rotation_irrational, xi_rotation_rational,
};
use rtdiff_core::combs::{build_comb, fourier_grid, periodogram_fourier};
use rtdiff_core::convergence::{
    continued_fraction_convergents, diffraction_drift, xi_convergence_run, RotationNumber, RotationSequenceSpec,
    SequenceItem,
};
use rtdiff_core::diffraction::{
    estimate_spectrum, mixing_diffraction, rotation_diffraction_irrational, rotation_diffraction_rational,
    EstimateOptions,
};
use rtdiff_core::io::fmt_float;
use rtdiff_core::{DiffractionSpectrum, MeasureSpec, ReferencePoint, XiEngine, XiSequence};

use crate::config::{ConfigError, ItemDesc, MapDesc, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Xi,
    Diffract,
    Periodogram,
    Converge,
    Fig1,
    Fig2,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Xi => "xi",
            Command::Diffract => "diffract",
            Command::Periodogram => "periodogram",
            Command::Converge => "converge",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numeric(#[from] rtdiff_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) | RunError::Io(_) => 1,
        }
    }
}

fn config_error(msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError(msg.into()))
}

/// Writes result files under one directory, each tagged with the run header.
struct Output {
    dir: PathBuf,
    header: String,
    params: String,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path, command: Command, cfg: &RunConfig) -> Result<Self, RunError> {
        let canonical =
            serde_json::to_string(&json!({ "command": command.name(), "config": cfg })).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let params: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            header: format!("# rtdiff v1 command={} params={params}\n", command.name()),
            params,
            written: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        self.write(name, format!("{}{body}", self.header))
    }

    /// Comb files keep their own header on the first line.
    fn comb(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let (first, rest) = body.split_once('\n').unwrap_or((body, ""));
        self.write(name, format!("{first}\n{}{rest}", self.header))
    }

    fn json(&mut self, name: &str, mut value: serde_json::Value) -> Result<(), RunError> {
        value["params"] = json!(self.params);
        let text = serde_json::to_string_pretty(&value).expect("json serializes") + "\n";
        self.write(name, text)
    }

    fn write(&mut self, name: &str, text: String) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }
}

/// Runs `command`; returns the files written.
pub fn run(command: Command, mut cfg: RunConfig, out: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>, RunError> {
    if let Some(c) = &cfg.command {
        if c != command.name() {
            return Err(config_error(format!(
                "field 'command': config is for '{c}' but '{}' was requested",
                command.name()
            )));
        }
    }
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    cfg.seed.get_or_insert(0);
    let mut o = Output::new(out, command, &cfg)?;
    match command {
        Command::Xi => cmd_xi(&cfg, &mut o)?,
        Command::Diffract => cmd_diffract(&cfg, &mut o)?,
        Command::Periodogram => cmd_periodogram(&cfg, &mut o)?,
        Command::Converge => cmd_converge(&cfg, &mut o)?,
        Command::Fig1 => cmd_fig1(&cfg, &mut o)?,
        Command::Fig2 => cmd_fig2(&cfg, &mut o)?,
    }
    Ok(o.written)
}

fn reference(cfg: &RunConfig) -> ReferencePoint {
    match cfg.y {
        Some(y) => ReferencePoint::Exact(y),
        None => ReferencePoint::Typical {
            seed: cfg.seed.unwrap_or(0),
        },
    }
}

fn map_desc(cfg: &RunConfig) -> Result<&MapDesc, RunError> {
    cfg.map.as_ref().ok_or_else(|| config_error("field 'map': missing"))
}

/// Smallest multiple of `k` that is at least 4096: `k | n` keeps the
/// discretization of `x ↦ {kx}` exact.
fn default_bins(k: u32) -> usize {
    let k = k as usize;
    k * 4096usize.div_ceil(k)
}

fn cmd_xi(cfg: &RunConfig, o: &mut Output) -> Result<(), RunError> {
    let desc = map_desc(cfg)?;
    let map = cfg.require_map()?;
    let f = cfg.observable()?;
    let window = cfg.window.unwrap_or(16);
    let engines: Vec<XiEngine> = match &cfg.engines {
        Some(names) => names
            .iter()
            .map(|n| {
                n.parse()
                    .map_err(|e: rtdiff_core::Error| config_error(format!("field 'engines': {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => match desc {
            MapDesc::RotationRational { .. } => vec![XiEngine::Rational],
            MapDesc::Rotation { .. } => vec![XiEngine::Irrational],
            MapDesc::LinearMod { .. } if f.as_polynomial().is_some() => vec![XiEngine::Analytic, XiEngine::Mixing],
            MapDesc::LinearMod { .. } => vec![XiEngine::Mixing],
        },
    };
    let mut results: Vec<XiSequence> = Vec::new();
    for engine in engines {
        let mismatch = || config_error(format!("field 'engines': '{engine}' does not apply to this map"));
        let xi = match (engine, desc) {
            (XiEngine::Rational, MapDesc::RotationRational { p, q }) => {
                xi_rotation_rational(*p, *q, cfg.w.unwrap_or(0.0), &f, window)?
            }
            (XiEngine::Irrational, MapDesc::Rotation { alpha }) => xi_rotation_irrational(*alpha, &f, window)?,
            (XiEngine::Analytic, MapDesc::LinearMod { k }) => xi_analytic_linear_mod(*k, &f, window)?,
            (XiEngine::Mixing, MapDesc::LinearMod { k }) => {
                xi_mixing(&map, &f, window, cfg.n_bins.unwrap_or(default_bins(*k)))?
            }
            (XiEngine::Empirical, _) => {
                let horizon = cfg.horizon.unwrap_or(1_000_000);
                let (measure, y) = match desc {
                    MapDesc::RotationRational { q, .. } => {
                        let w = cfg.w.unwrap_or(0.0);
                        (
                            MeasureSpec::atomic_orbit(*q, w)?,
                            ReferencePoint::Exact(cfg.y.unwrap_or(w)),
                        )
                    }
                    _ => (MeasureSpec::Lebesgue, reference(cfg)),
                };
                xi_empirical(&map, &measure, &f, y, window, horizon)?
            }
            _ => return Err(mismatch()),
        };
        o.csv(&format!("xi_{engine}.csv"), &xi.to_csv())?;
        results.push(xi);
    }
    let mut cmp = String::from("engine_a,engine_b,sup_dist\n");
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            let d = xi_distance(a, b, window)?;
            let _ = writeln!(cmp, "{},{},{}", a.engine(), b.engine(), fmt_float(d));
        }
    }
    o.csv("xi_comparison.csv", &cmp)
}

fn cmd_diffract(cfg: &RunConfig, o: &mut Output) -> Result<(), RunError> {
    let desc = map_desc(cfg)?;
    let map = cfg.require_map()?;
    let f = cfg.observable()?;
    let (spec, engine, cutoffs): (DiffractionSpectrum, &str, serde_json::Value) = if cfg.estimate.unwrap_or(false) {
        let horizon = cfg.horizon.unwrap_or(1 << 16);
        let segments = cfg.segments.unwrap_or(256);
        let opts = EstimateOptions {
            segments,
            ..EstimateOptions::default()
        };
        let spec = estimate_spectrum(&map, &f, reference(cfg), horizon, opts)?;
        (spec, "estimated", json!({ "horizon": horizon, "segments": segments }))
    } else {
        match desc {
            MapDesc::RotationRational { p, q } => {
                let w = cfg.w.unwrap_or(0.0);
                (
                    rotation_diffraction_rational(*p, *q, w, &f)?,
                    "rational",
                    json!({ "q": q }),
                )
            }
            MapDesc::Rotation { alpha } => {
                let modes = cfg.modes.unwrap_or(50);
                (
                    rotation_diffraction_irrational(*alpha, &f, modes)?,
                    "irrational",
                    json!({ "modes": modes }),
                )
            }
            MapDesc::LinearMod { k } => {
                let n_bins = cfg.n_bins.unwrap_or(default_bins(*k));
                let window = cfg.window.unwrap_or(64);
                let grid = fourier_grid(cfg.grid.unwrap_or(1024));
                let spec = mixing_diffraction(&map, &f, n_bins, window, &grid)?;
                (
                    spec,
                    "mixing",
                    json!({ "n_bins": n_bins, "window": window, "grid": grid.len() }),
                )
            }
        }
    };
    o.csv("atoms.csv", &spec.atoms_csv())?;
    o.csv("density.csv", &spec.density_csv())?;
    o.json(
        "spectrum.json",
        json!({
            "command": "diffract",
            "engine": engine,
            "kind": spec.kind().as_str(),
            "cutoffs": cutoffs,
            "atom_count": spec.atoms().len(),
            "total_atom_mass": spec.total_atom_mass(),
            "parseval_deficit": spec.parseval_deficit(),
        }),
    )
}

fn cmd_periodogram(cfg: &RunConfig, o: &mut Output) -> Result<(), RunError> {
    let map = cfg.require_map()?;
    let f = cfg.observable()?;
    let n = cfg.horizon.unwrap_or(4096);
    let len = cfg.grid.unwrap_or(n);
    let comb = build_comb(&map, &f, reference(cfg), n)?;
    let p = periodogram_fourier(&comb, n, len)?;
    o.comb("comb.csv", &comb.to_csv())?;
    let mut body = String::from("theta,p\n");
    for (j, v) in p.iter().enumerate() {
        let _ = writeln!(body, "{},{}", fmt_float(j as f64 / len as f64), fmt_float(*v));
    }
    o.csv("periodogram.csv", &body)
}

fn cmd_converge(cfg: &RunConfig, o: &mut Output) -> Result<(), RunError> {
    let alpha = cfg.alpha.unwrap_or(2f64.sqrt() - 1.0);
    let f = cfg.observable()?;
    let window = cfg.window.unwrap_or(32);
    let target = RotationNumber::irrational(alpha)?;
    let spec = match &cfg.items {
        Some(items) => {
            if cfg.convergents.is_some() {
                return Err(config_error("fields 'items' and 'convergents' are exclusive"));
            }
            let items = items
                .iter()
                .map(|it| {
                    Ok(match *it {
                        ItemDesc::Rational { p, q, y } => SequenceItem {
                            alpha: RotationNumber::rational(p, q)?,
                            y,
                            f: f.clone(),
                        },
                        ItemDesc::Irrational { alpha, y } => SequenceItem {
                            alpha: RotationNumber::irrational(alpha)?,
                            y,
                            f: f.clone(),
                        },
                    })
                })
                .collect::<Result<Vec<_>, rtdiff_core::Error>>()
                .map_err(|e| config_error(format!("field 'items': {e}")))?;
            RotationSequenceSpec::new(target, f.clone(), items)
                .map_err(|e| config_error(format!("field 'items': {e}")))?
        }
        None => {
            let conv = continued_fraction_convergents(alpha, cfg.convergents.unwrap_or(8))?;
            RotationSequenceSpec::from_convergents(target, f.clone(), &conv, cfg.w.unwrap_or(0.0))?
        }
    };
    let report = xi_convergence_run(&spec, window)?;
    o.csv("convergence.csv", &report.to_csv())?;
    let d: Vec<f64> = report.rows.iter().map(|r| r.sup_dist).collect();
    o.json(
        "convergence.json",
        json!({
            "command": "converge",
            "alpha": alpha,
            "window": window,
            "items": d.len(),
            "decreasing": d.windows(2).all(|w| w[1] < w[0]),
            "last_sup_dist": d.last(),
            "within_bounds": report.rows.iter().all(|r| r.sup_dist <= r.bound),
        }),
    )
}

fn cmd_fig1(cfg: &RunConfig, o: &mut Output) -> Result<(), RunError> {
    let ks = cfg.ks.clone().unwrap_or_else(|| vec![3, 5, 10, 30]);
    let grid = fourier_grid(cfg.grid.unwrap_or(1024));
    let window = cfg.window.unwrap_or(64);
    let f = cfg.observable()?;
    let n_bins = match cfg.n_bins {
        Some(n) => n,
        None => {
            let l = ks.iter().fold(1u64, |acc, &k| lcm(acc, k as u64)) as usize;
            l * 1024usize.div_ceil(l)
        }
    };
    let mut columns = Vec::with_capacity(ks.len());
    for &k in &ks {
        let map = rtdiff_core::IntervalMap::linear_mod(k)?;
        let spec = mixing_diffraction(&map, &f, n_bins, window, &grid)?;
        columns.push(spec.density().expect("mixing spectra carry a density").values.clone());
    }
    let mut body = String::from("theta");
    for k in &ks {
        let _ = write!(body, ",g_{k}");
    }
    body.push('\n');
    for (j, t) in grid.iter().enumerate() {
        body.push_str(&fmt_float(*t));
        for c in &columns {
            let _ = write!(body, ",{}", fmt_float(c[j]));
        }
        body.push('\n');
    }
    o.csv("fig1.csv", &body)
}

fn lcm(a: u64, b: u64) -> u64 {
    a / rtdiff_core::numeric::gcd(a, b) * b
}

fn cmd_fig2(cfg: &RunConfig, o: &mut Output) -> Result<(), RunError> {
    let [a1, a2] = cfg.alphas.unwrap_or([PI / 20.0, 103.0 * PI / 2000.0]);
    let count = cfg.count.unwrap_or(50);
    let f = cfg.observable()?;
    let rows = diffraction_drift(a1, a2, &f, count)?;
    let mut body = String::from("mode,position_alpha1,position_alpha2,mass\n");
    for r in rows {
        let _ = writeln!(
            body,
            "{},{},{},{}",
            r.mode,
            fmt_float(r.position1),
            fmt_float(r.position2),
            fmt_float(r.mass1)
        );
    }
    o.csv("fig2.csv", &body)
}
