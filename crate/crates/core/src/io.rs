//! Configuration text, time-series CSV and legacy VTK output.
//!
//! The configuration format is flat `key = value` lines grouped under
//! `[section]` headers, with `#` comments. A `benchmark = <id>` line loads a
//! preset whose values individual keys then override.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::benchmarks::{benchmark_config, BenchmarkId, ObservableSeries};
use crate::driver::{
    BoundarySpec, CoupledState, InitialBump, SimulationConfig, WallModel, WaveformSource,
};
use crate::error::{FsiError, Result};
use crate::fluid::FluidParams;
use crate::shell::{ShellBc, ShellKinematics, WallParams};

pub const SCHEME_VERSION: &str = concat!("fsi-beta-scheme ", env!("CARGO_PKG_VERSION"));

const SECTIONS: [&str; 6] = ["geometry", "fluid", "wall", "scheme", "boundary", "output"];

const KEYS: &[&str] = &[
    "benchmark",
    "geometry.length",
    "geometry.radius",
    "geometry.n_z",
    "geometry.n_r",
    "fluid.rho_f",
    "fluid.mu",
    "wall.young",
    "wall.poisson",
    "wall.c_v",
    "wall.d_v",
    "wall.rho_s",
    "wall.h",
    "wall.model",
    "wall.k",
    "wall.gamma",
    "wall.kinematics",
    "wall.c0",
    "wall.bc",
    "scheme.dt",
    "scheme.t_final",
    "scheme.beta",
    "scheme.bump",
    "boundary.kind",
    "boundary.p_max",
    "boundary.t_max",
    "boundary.p_in",
    "boundary.p_out",
    "boundary.waveform",
    "boundary.outlet_delay",
    "boundary.drop_per_cm",
    "output.snapshot_every",
    "output.observe_z",
];

/// Parses configuration text into a validated [`SimulationConfig`].
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut values: BTreeMap<String, String> = BTreeMap::new();
    let mut section: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(FsiError::config(
                    name,
                    format!("unknown section on line {}", lineno + 1),
                ));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            FsiError::config(line, format!("line {} is not `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        let full = match (&section, key) {
            (_, "benchmark") => key.to_string(),
            (Some(s), k) => format!("{s}.{k}"),
            (None, k) => k.to_string(),
        };
        if !KEYS.contains(&full.as_str()) {
            return Err(FsiError::config(full, "unknown key"));
        }
        if values
            .insert(full.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(FsiError::config(full, "given more than once"));
        }
    }
    build_config(&values)
}

struct Lookup<'a> {
    values: &'a BTreeMap<String, String>,
}

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn num(&self, key: &str, preset: Option<f64>) -> Result<f64> {
        match self.raw(key) {
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| FsiError::config(key, format!("`{v}` is not a finite number"))),
            None => preset.ok_or_else(|| FsiError::config(key, "missing required key")),
        }
    }

    fn count(&self, key: &str, preset: Option<usize>) -> Result<usize> {
        match self.raw(key) {
            Some(v) => v
                .parse::<usize>()
                .map_err(|_| FsiError::config(key, format!("`{v}` is not a non-negative integer"))),
            None => preset.ok_or_else(|| FsiError::config(key, "missing required key")),
        }
    }

    fn text<'b>(&'b self, key: &str, preset: Option<&'b str>) -> Result<&'b str> {
        self.raw(key)
            .or(preset)
            .ok_or_else(|| FsiError::config(key, "missing required key"))
    }
}

fn build_config(values: &BTreeMap<String, String>) -> Result<SimulationConfig> {
    let get = Lookup { values };
    let benchmark = match get.raw("benchmark") {
        None | Some("none") => None,
        Some(v) => Some(v.parse::<BenchmarkId>()?),
    };
    let preset = benchmark.map(benchmark_config);
    let p = preset.as_ref();

    let radius = get.num("geometry.radius", p.map(|c| c.radius))?;
    let length = get.num("geometry.length", p.map(|c| c.length))?;
    let wall = WallParams {
        young: get.num("wall.young", p.map(|c| c.wall.young))?,
        poisson: get.num("wall.poisson", p.map(|c| c.wall.poisson))?,
        c_v: get.num("wall.c_v", p.map(|c| c.wall.c_v))?,
        d_v: get.num("wall.d_v", p.map(|c| c.wall.d_v))?,
        density: get.num("wall.rho_s", p.map(|c| c.wall.density))?,
        thickness: get.num("wall.h", p.map(|c| c.wall.thickness))?,
        radius,
    };

    let preset_model = p.map(|c| match c.model {
        WallModel::Koiter => "koiter",
        WallModel::Formaggia { .. } => "formaggia",
    });
    let model = match get.text("wall.model", preset_model)? {
        "koiter" => WallModel::Koiter,
        "formaggia" => {
            let (pk, pg) = match p.map(|c| c.model) {
                Some(WallModel::Formaggia { k, gamma }) => (Some(k), Some(gamma)),
                _ => (None, None),
            };
            WallModel::Formaggia {
                k: get.num("wall.k", pk)?,
                gamma: get.num("wall.gamma", pg)?,
            }
        }
        other => {
            return Err(FsiError::config(
                "wall.model",
                format!("expected `koiter` or `formaggia`, got `{other}`"),
            ))
        }
    };
    let kinematics = match get.text("wall.kinematics", p.map(|c| kinematics_str(c.kinematics)))? {
        "full" => ShellKinematics::Full,
        "radial" => ShellKinematics::RadialOnly,
        other => {
            return Err(FsiError::config(
                "wall.kinematics",
                format!("expected `full` or `radial`, got `{other}`"),
            ))
        }
    };
    let c0_override = match get.raw("wall.c0") {
        Some("none") => None,
        Some(_) => Some(get.num("wall.c0", None)?),
        None => match p {
            Some(c) => c.c0_override,
            None => None,
        },
    };
    let bc = get
        .text("wall.bc", p.map(|c| c.bc.as_str()))?
        .parse::<ShellBc>()
        .map_err(|e| FsiError::config("wall.bc", e))?;

    let initial_bump = match get.raw("scheme.bump") {
        Some("none") => None,
        Some(v) => {
            let parts: Vec<f64> = v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    FsiError::config("scheme.bump", "expected `amplitude, center, width`")
                })?;
            match parts[..] {
                [amplitude, center, width] => Some(InitialBump {
                    amplitude,
                    center,
                    width,
                }),
                _ => {
                    return Err(FsiError::config(
                        "scheme.bump",
                        "expected `amplitude, center, width`",
                    ))
                }
            }
        }
        None => p.and_then(|c| c.initial_bump),
    };

    let boundary = parse_boundary(&get, p.map(|c| &c.boundary))?;

    let cfg = SimulationConfig {
        benchmark,
        length,
        radius,
        n_z: get.count("geometry.n_z", p.map(|c| c.n_z))?,
        n_r: get.count("geometry.n_r", p.map(|c| c.n_r))?,
        fluid: FluidParams {
            density: get.num("fluid.rho_f", p.map(|c| c.fluid.density))?,
            viscosity: get.num("fluid.mu", p.map(|c| c.fluid.viscosity))?,
        },
        wall,
        model,
        kinematics,
        c0_override,
        bc,
        dt: get.num("scheme.dt", p.map(|c| c.dt))?,
        t_final: get.num("scheme.t_final", p.map(|c| c.t_final))?,
        beta: get.num("scheme.beta", p.map(|c| c.beta))?,
        boundary,
        initial_bump,
        snapshot_every: get.count("output.snapshot_every", p.map(|c| c.snapshot_every))?,
        observe_z: get.num(
            "output.observe_z",
            p.map(|c| c.observe_z).or(Some(0.5 * length)),
        )?,
    };
    cfg.validate().map_err(|e| match e {
        FsiError::Parameter { name, reason } => FsiError::config(config_key(name), reason),
        other => other,
    })?;
    Ok(cfg)
}

/// Config key that carries a validated parameter.
fn config_key(param: &str) -> String {
    let key = match param {
        "beta" | "dt" | "t_final" => format!("scheme.{param}"),
        "length" | "radius" | "mesh" => format!("geometry.{param}"),
        "rho_f" | "mu" => format!("fluid.{param}"),
        "observe_z" => "output.observe_z".into(),
        "density" => "wall.rho_s".into(),
        "thickness" => "wall.h".into(),
        "young" | "poisson" | "c_v" | "d_v" | "k" | "gamma" | "c0" => format!("wall.{param}"),
        "shear_modulus" => "wall.young".into(),
        "t_max" => "boundary.t_max".into(),
        other => other.into(),
    };
    key
}

fn parse_boundary(get: &Lookup, preset: Option<&BoundarySpec>) -> Result<BoundarySpec> {
    let preset_kind = preset.map(boundary_kind);
    let kind = get.text("boundary.kind", preset_kind)?;
    let same = preset_kind == Some(kind);
    let pick =
        |f: &dyn Fn(&BoundarySpec) -> Option<f64>| if same { preset.and_then(f) } else { None };
    Ok(match kind {
        "zero" => BoundarySpec::Zero,
        "pulse" => BoundarySpec::Pulse {
            p_max: get.num(
                "boundary.p_max",
                pick(&|b| match b {
                    BoundarySpec::Pulse { p_max, .. } => Some(*p_max),
                    _ => None,
                }),
            )?,
            t_max: get.num(
                "boundary.t_max",
                pick(&|b| match b {
                    BoundarySpec::Pulse { t_max, .. } => Some(*t_max),
                    _ => None,
                }),
            )?,
        },
        "constant" => BoundarySpec::Constant {
            p_in: get.num(
                "boundary.p_in",
                pick(&|b| match b {
                    BoundarySpec::Constant { p_in, .. } => Some(*p_in),
                    _ => None,
                }),
            )?,
            p_out: get.num(
                "boundary.p_out",
                pick(&|b| match b {
                    BoundarySpec::Constant { p_out, .. } => Some(*p_out),
                    _ => None,
                }),
            )?,
        },
        "waveform" => {
            let preset_source = match preset {
                Some(BoundarySpec::Waveform { source, .. }) if same => Some(source.clone()),
                _ => None,
            };
            let source = match get.raw("boundary.waveform") {
                Some("bundled") => WaveformSource::Bundled,
                Some(path) => WaveformSource::File(PathBuf::from(path)),
                None => preset_source
                    .ok_or_else(|| FsiError::config("boundary.waveform", "missing required key"))?,
            };
            BoundarySpec::Waveform {
                source,
                outlet_delay: get.num(
                    "boundary.outlet_delay",
                    pick(&|b| match b {
                        BoundarySpec::Waveform { outlet_delay, .. } => Some(*outlet_delay),
                        _ => None,
                    }),
                )?,
                drop_per_cm: get.num(
                    "boundary.drop_per_cm",
                    pick(&|b| match b {
                        BoundarySpec::Waveform { drop_per_cm, .. } => Some(*drop_per_cm),
                        _ => None,
                    }),
                )?,
            }
        }
        other => {
            return Err(FsiError::config(
                "boundary.kind",
                format!("expected zero, pulse, constant or waveform, got `{other}`"),
            ))
        }
    })
}

fn boundary_kind(b: &BoundarySpec) -> &'static str {
    match b {
        BoundarySpec::Zero => "zero",
        BoundarySpec::Pulse { .. } => "pulse",
        BoundarySpec::Constant { .. } => "constant",
        BoundarySpec::Waveform { .. } => "waveform",
    }
}

fn kinematics_str(k: ShellKinematics) -> &'static str {
    match k {
        ShellKinematics::Full => "full",
        ShellKinematics::RadialOnly => "radial",
    }
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes every key of `cfg`, so the text parses back to the same config.
pub fn serialize_config(cfg: &SimulationConfig) -> String {
    let mut s = String::new();
    let bench = cfg.benchmark.map(|b| b.as_str()).unwrap_or("none");
    let _ = writeln!(s, "benchmark = {bench}");
    let _ = writeln!(s, "\n[geometry]");
    let _ = writeln!(s, "length = {}", num(cfg.length));
    let _ = writeln!(s, "radius = {}", num(cfg.radius));
    let _ = writeln!(s, "n_z = {}", cfg.n_z);
    let _ = writeln!(s, "n_r = {}", cfg.n_r);
    let _ = writeln!(s, "\n[fluid]");
    let _ = writeln!(s, "rho_f = {}", num(cfg.fluid.density));
    let _ = writeln!(s, "mu = {}", num(cfg.fluid.viscosity));
    let _ = writeln!(s, "\n[wall]");
    let w = &cfg.wall;
    for (k, v) in [
        ("young", w.young),
        ("poisson", w.poisson),
        ("c_v", w.c_v),
        ("d_v", w.d_v),
        ("rho_s", w.density),
        ("h", w.thickness),
    ] {
        let _ = writeln!(s, "{k} = {}", num(v));
    }
    match cfg.model {
        WallModel::Koiter => {
            let _ = writeln!(s, "model = koiter");
        }
        WallModel::Formaggia { k, gamma } => {
            let _ = writeln!(s, "model = formaggia");
            let _ = writeln!(s, "k = {}", num(k));
            let _ = writeln!(s, "gamma = {}", num(gamma));
        }
    }
    let _ = writeln!(s, "kinematics = {}", kinematics_str(cfg.kinematics));
    match cfg.c0_override {
        Some(c0) => {
            let _ = writeln!(s, "c0 = {}", num(c0));
        }
        None => {
            let _ = writeln!(s, "c0 = none");
        }
    }
    let _ = writeln!(s, "bc = {}", cfg.bc.as_str());
    let _ = writeln!(s, "\n[scheme]");
    let _ = writeln!(s, "dt = {}", num(cfg.dt));
    let _ = writeln!(s, "t_final = {}", num(cfg.t_final));
    let _ = writeln!(s, "beta = {}", num(cfg.beta));
    match cfg.initial_bump {
        Some(b) => {
            let _ = writeln!(
                s,
                "bump = {}, {}, {}",
                num(b.amplitude),
                num(b.center),
                num(b.width)
            );
        }
        None => {
            let _ = writeln!(s, "bump = none");
        }
    }
    let _ = writeln!(s, "\n[boundary]");
    let _ = writeln!(s, "kind = {}", boundary_kind(&cfg.boundary));
    match &cfg.boundary {
        BoundarySpec::Zero => {}
        BoundarySpec::Pulse { p_max, t_max } => {
            let _ = writeln!(s, "p_max = {}", num(*p_max));
            let _ = writeln!(s, "t_max = {}", num(*t_max));
        }
        BoundarySpec::Constant { p_in, p_out } => {
            let _ = writeln!(s, "p_in = {}", num(*p_in));
            let _ = writeln!(s, "p_out = {}", num(*p_out));
        }
        BoundarySpec::Waveform {
            source,
            outlet_delay,
            drop_per_cm,
        } => {
            match source {
                WaveformSource::Bundled => {
                    let _ = writeln!(s, "waveform = bundled");
                }
                WaveformSource::File(p) => {
                    let _ = writeln!(s, "waveform = {}", p.display());
                }
            }
            let _ = writeln!(s, "outlet_delay = {}", num(*outlet_delay));
            let _ = writeln!(s, "drop_per_cm = {}", num(*drop_per_cm));
        }
    }
    let _ = writeln!(s, "\n[output]");
    let _ = writeln!(s, "snapshot_every = {}", cfg.snapshot_every);
    let _ = writeln!(s, "observe_z = {}", num(cfg.observe_z));
    s
}

pub const TIMESERIES_HEADER: &str = "t,diameter,flowrate,mean_pressure,eta_z_mid,eta_r_mid";

fn check_finite<'a>(values: impl IntoIterator<Item = &'a f64>, what: &str) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FsiError::Data(format!("{what} contains non-finite values")))
    }
}

/// Writes the observable series as CSV.
pub fn write_timeseries(series: &ObservableSeries, path: &Path) -> Result<()> {
    series.validate()?;
    let cols = [
        &series.t,
        &series.diameter,
        &series.flowrate,
        &series.mean_pressure,
        &series.eta_z_mid,
        &series.eta_r_mid,
    ];
    check_finite(cols.iter().flat_map(|c| c.iter()), "time series")?;
    let mut out = String::with_capacity(128 * (series.len() + 1));
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for k in 0..series.len() {
        let row: Vec<String> = cols.iter().map(|c| num(c[k])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a file written by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> Result<ObservableSeries> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(TIMESERIES_HEADER) {
        return Err(FsiError::Data("unexpected time series header".into()));
    }
    let mut s = ObservableSeries::default();
    for (k, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| FsiError::Data(format!("bad number on row {}", k + 1)))?;
        if v.len() != 6 {
            return Err(FsiError::Data(format!(
                "row {} has {} columns",
                k + 1,
                v.len()
            )));
        }
        s.t.push(v[0]);
        s.diameter.push(v[1]);
        s.flowrate.push(v[2]);
        s.mean_pressure.push(v[3]);
        s.eta_z_mid.push(v[4]);
        s.eta_r_mid.push(v[5]);
    }
    Ok(s)
}

/// Legacy VTK ASCII unstructured grid of the current fine mesh.
pub fn write_vtk_snapshot(state: &CoupledState, path: &Path) -> Result<()> {
    let mesh = &state.mesh.reference;
    let pos = &state.mesh.positions;
    let fine = &mesh.fine;
    let p = mesh.prolongate(&state.fluid.p);
    check_finite(pos.iter().flatten(), "mesh positions")?;
    check_finite(state.fluid.u.iter().chain(&p), "snapshot fields")?;

    let n = fine.node_count();
    let nt = fine.triangles.len();
    let mut s = String::with_capacity(96 * n);
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "fsi snapshot step {} t {}", state.step, num(state.t));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for x in pos {
        let _ = writeln!(s, "{} {} 0", num(x[0]), num(x[1]));
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &fine.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "VECTORS velocity double");
    for k in 0..n {
        let u = state.fluid.velocity(k);
        let _ = writeln!(s, "{} {} 0", num(u[0]), num(u[1]));
    }
    let _ = writeln!(s, "SCALARS pressure double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for v in &p {
        let _ = writeln!(s, "{}", num(*v));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(s.as_bytes())?;
    Ok(())
}

/// What a run writes and how.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: SimulationConfig,
    pub out_dir: PathBuf,
    pub snapshot_every: usize,
    pub observables: Vec<String>,
    pub version: String,
}

impl RunManifest {
    /// Resolves the cadence (a zero `snapshot_every` means only the final
    /// state, i.e. every `steps()` steps) and checks that `out_dir` can be
    /// created and written.
    pub fn new(config: SimulationConfig, out_dir: PathBuf) -> Result<Self> {
        if out_dir.as_os_str().is_empty() {
            return Err(FsiError::config("output", "empty output directory"));
        }
        std::fs::create_dir_all(&out_dir)?;
        let probe = out_dir.join(".write-probe");
        std::fs::write(&probe, b"")?;
        std::fs::remove_file(&probe)?;
        let snapshot_every = match config.snapshot_every {
            0 => config.steps().max(1),
            n => n,
        };
        Ok(Self {
            snapshot_every,
            config,
            out_dir,
            observables: TIMESERIES_HEADER
                .split(',')
                .skip(1)
                .map(String::from)
                .collect(),
            version: SCHEME_VERSION.to_string(),
        })
    }

    /// Creates the output directory and writes `manifest.txt` and
    /// `config.txt` into it.
    pub fn write(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        let mut m = String::new();
        let _ = writeln!(m, "version = {}", self.version);
        let _ = writeln!(m, "snapshot_every = {}", self.snapshot_every);
        let _ = writeln!(m, "observables = {}", self.observables.join(","));
        std::fs::write(self.out_dir.join("manifest.txt"), m)?;
        std::fs::write(
            self.out_dir.join("config.txt"),
            serialize_config(&self.config),
        )?;
        Ok(())
    }
}
