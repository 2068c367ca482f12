//! Configuration files, series CSV, field checkpoints and run manifests.
//!
//! Configuration grammar: one `key = value` per line, `#` starts a comment,
//! blank lines are ignored, unknown or repeated keys are errors.
//!
//! Checkpoint layout: the ASCII line `RADGAS1 nx ny dx dy t` followed by
//! little-endian `f64` samples of `u`, `r`, `q1`, `q2`, each row-major with x
//! fastest over `(nx + 1) * ny` nodes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{DiagnosticsRecord, COLUMNS};
use crate::elliptic::BcKind;
use crate::error::{Error, Result};
use crate::flux::{FluxConfig, FluxKind};
use crate::grid::{Grid, ScalarField, Topology, VectorField};
use crate::stationary::EndpointStates;
use crate::stepper::{Perturbation, SimConfig, SimState};

const KEYS: [&str; 22] = [
    "u_minus",
    "u_plus",
    "flux.f",
    "flux.g",
    "flux.g_coeff",
    "grid.nx",
    "grid.ny",
    "grid.lx",
    "grid.ly",
    "cfl",
    "t_end",
    "bc",
    "alpha",
    "perturbation.kind",
    "perturbation.amp",
    "perturbation.x0",
    "perturbation.y0",
    "perturbation.sx",
    "perturbation.sy",
    "perturbation.beta",
    "record_every",
    "seed",
];

struct Entry {
    line: usize,
    value: String,
}

fn value<T: FromStr>(map: &BTreeMap<&str, Entry>, key: &str, default: T) -> Result<T> {
    match map.get(key) {
        None => Ok(default),
        Some(e) => e.value.parse().map_err(|_| Error::Parse {
            line: e.line,
            message: format!("cannot parse `{}` for {key}", e.value),
        }),
    }
}

fn word<'a>(map: &'a BTreeMap<&str, Entry>, key: &str, default: &'a str) -> (&'a str, usize) {
    map.get(key).map_or((default, 0), |e| (e.value.as_str(), e.line))
}

/// Parses configuration text. Omitted keys take the values of
/// [`SimConfig::default`]; `perturbation.y0` defaults to `grid.ly / 2`.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let mut map: BTreeMap<&str, Entry> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let (key, val) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        };
        let entry = Entry {
            line,
            value: val.trim().to_string(),
        };
        if map.insert(known, entry).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }

    let d = SimConfig::default();
    let endpoints = EndpointStates {
        u_minus: value(&map, "u_minus", d.endpoints.u_minus)?,
        u_plus: value(&map, "u_plus", d.endpoints.u_plus)?,
    };
    let (f, line) = word(&map, "flux.f", "burgers");
    if f != "burgers" {
        return Err(Error::Parse {
            line,
            message: format!("flux.f must be `burgers`, got `{f}`"),
        });
    }
    let coeff: f64 = value(&map, "flux.g_coeff", 1.0)?;
    let g = match word(&map, "flux.g", "burgers") {
        ("burgers", _) => FluxKind::Burgers,
        ("linear", _) => FluxKind::Linear(coeff),
        ("zero", _) => FluxKind::Zero,
        (other, line) => {
            return Err(Error::Parse {
                line,
                message: format!("flux.g must be burgers, linear or zero, got `{other}`"),
            })
        }
    };
    let bc = match word(&map, "bc", "compatibility") {
        ("compatibility", _) => BcKind::Compatibility,
        ("homogeneous", _) => BcKind::Homogeneous,
        (other, line) => {
            return Err(Error::Parse {
                line,
                message: format!("bc must be compatibility or homogeneous, got `{other}`"),
            })
        }
    };
    let ly: f64 = value(&map, "grid.ly", d.ly)?;
    let (dg_amp, dg_x0, dg_sx, dg_sy) = match d.perturbation {
        Perturbation::Gaussian { amp, x0, sx, sy, .. } => (amp, x0, sx, sy),
        _ => unreachable!("default perturbation is gaussian"),
    };
    let amp = value(&map, "perturbation.amp", dg_amp)?;
    let perturbation = match word(&map, "perturbation.kind", "gaussian") {
        ("none", _) => Perturbation::None,
        ("gaussian", _) => Perturbation::Gaussian {
            amp,
            x0: value(&map, "perturbation.x0", dg_x0)?,
            y0: value(&map, "perturbation.y0", 0.5 * ly)?,
            sx: value(&map, "perturbation.sx", dg_sx)?,
            sy: value(&map, "perturbation.sy", dg_sy)?,
        },
        ("weighted_tail", _) => Perturbation::WeightedTail {
            amp,
            beta: value(&map, "perturbation.beta", 1.0)?,
        },
        (other, line) => {
            return Err(Error::Parse {
                line,
                message: format!("perturbation.kind must be none, gaussian or weighted_tail, got `{other}`"),
            })
        }
    };
    let cfg = SimConfig {
        endpoints,
        flux: FluxConfig {
            f: FluxKind::Burgers,
            g,
            kappa: d.flux.kappa,
        },
        nx: value(&map, "grid.nx", d.nx)?,
        ny: value(&map, "grid.ny", d.ny)?,
        lx: value(&map, "grid.lx", d.lx)?,
        ly,
        cfl: value(&map, "cfl", d.cfl)?,
        t_end: value(&map, "t_end", d.t_end)?,
        bc,
        alpha: value(&map, "alpha", d.alpha)?,
        perturbation,
        record_every: value(&map, "record_every", d.record_every)?,
        seed: value(&map, "seed", d.seed)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Key/value pairs that reproduce `cfg` through [`parse_config_str`].
pub fn config_pairs(cfg: &SimConfig) -> Vec<(String, String)> {
    let mut out: Vec<(&str, String)> = vec![
        ("u_minus", cfg.endpoints.u_minus.to_string()),
        ("u_plus", cfg.endpoints.u_plus.to_string()),
        ("flux.f", "burgers".into()),
    ];
    match cfg.flux.g {
        FluxKind::Burgers => out.push(("flux.g", "burgers".into())),
        FluxKind::Zero => out.push(("flux.g", "zero".into())),
        FluxKind::Linear(c) => {
            out.push(("flux.g", "linear".into()));
            out.push(("flux.g_coeff", c.to_string()));
        }
    }
    out.extend([
        ("grid.nx", cfg.nx.to_string()),
        ("grid.ny", cfg.ny.to_string()),
        ("grid.lx", cfg.lx.to_string()),
        ("grid.ly", cfg.ly.to_string()),
        ("cfl", cfg.cfl.to_string()),
        ("t_end", cfg.t_end.to_string()),
        (
            "bc",
            match cfg.bc {
                BcKind::Compatibility => "compatibility",
                BcKind::Homogeneous => "homogeneous",
            }
            .into(),
        ),
        ("alpha", cfg.alpha.to_string()),
    ]);
    match cfg.perturbation {
        Perturbation::None => out.push(("perturbation.kind", "none".into())),
        Perturbation::Gaussian { amp, x0, y0, sx, sy } => out.extend([
            ("perturbation.kind", "gaussian".into()),
            ("perturbation.amp", amp.to_string()),
            ("perturbation.x0", x0.to_string()),
            ("perturbation.y0", y0.to_string()),
            ("perturbation.sx", sx.to_string()),
            ("perturbation.sy", sy.to_string()),
        ]),
        Perturbation::WeightedTail { amp, beta } => out.extend([
            ("perturbation.kind", "weighted_tail".into()),
            ("perturbation.amp", amp.to_string()),
            ("perturbation.beta", beta.to_string()),
        ]),
    }
    out.push(("record_every", cfg.record_every.to_string()));
    out.push(("seed", cfg.seed.to_string()));
    out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn emit_config(cfg: &SimConfig) -> String {
    config_pairs(cfg)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

// ---------------------------------------------------------------------------
// series CSV

/// Streaming CSV writer; the header is written on creation.
pub struct SeriesWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = SeriesWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        let header = COLUMNS.join(",");
        writeln!(w.out, "{header}").map_err(|e| Error::io(&w.path, e))?;
        Ok(w)
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        let row: Vec<String> = rec.to_row().iter().map(|v| v.to_string()).collect();
        writeln!(self.out, "{}", row.join(",")).map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_series(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let mut w = SeriesWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn read_series(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::io(path, e))?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    };
    if header.trim() != COLUMNS.join(",") {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected series header".into(),
        });
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: k + 2,
                message: e.to_string(),
            })?;
        let row: [f64; 23] = vals.try_into().map_err(|v: Vec<f64>| Error::Parse {
            line: k + 2,
            message: format!("expected {} columns, got {}", COLUMNS.len(), v.len()),
        })?;
        out.push(DiagnosticsRecord::from_row(&row));
    }
    Ok(out)
}

/// Stationary profile table: `x, ubar, qbar, d1ubar..d4ubar`.
pub fn write_profile(prof: &crate::stationary::StationaryProfile, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "x,ubar,qbar,d1ubar,d2ubar,d3ubar,d4ubar").map_err(io)?;
    for i in 0..prof.len() {
        let d = &prof.dk;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            prof.x[i], prof.ubar[i], prof.qbar[i], d[0][i], d[1][i], d[2][i], d[3][i]
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

// ---------------------------------------------------------------------------
// checkpoints

const MAGIC: &str = "RADGAS1";

pub fn checkpoint(state: &SimState, path: &Path) -> Result<()> {
    let g = state.u.grid();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{MAGIC} {} {} {} {} {}", g.nx, g.ny, g.dx, g.dy, state.t).map_err(io)?;
    for f in [&state.u, &state.r, &state.q.comp1, &state.q.comp2] {
        for v in f.values() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Reads a checkpoint. The returned state carries no profile; fields are
/// bit-identical to those written.
pub fn restore(path: &Path) -> Result<SimState> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or(Error::BadMagic)?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::BadMagic)?;
    let mut tok = header.split_ascii_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(Error::BadMagic);
    }
    let fields: Vec<&str> = tok.collect();
    if fields.len() != 5 {
        return Err(Error::ShapeMismatch(format!("header has {} fields, expected 5", fields.len())));
    }
    let bad = |what: &str| Error::ShapeMismatch(format!("unreadable {what} in header"));
    let nx: usize = fields[0].parse().map_err(|_| bad("nx"))?;
    let ny: usize = fields[1].parse().map_err(|_| bad("ny"))?;
    let dx: f64 = fields[2].parse().map_err(|_| bad("dx"))?;
    let dy: f64 = fields[3].parse().map_err(|_| bad("dy"))?;
    let t: f64 = fields[4].parse().map_err(|_| bad("t"))?;

    let body = &bytes[nl + 1..];
    let per_field = (nx + 1) * ny;
    let expected = 4 * per_field * 8;
    if body.len() != expected {
        // whole samples of all four fields: the header disagrees with the payload
        if body.len() % 32 == 0 && !body.is_empty() {
            return Err(Error::ShapeMismatch(format!(
                "header nx = {nx}, ny = {ny} needs {expected} bytes, payload has {}",
                body.len()
            )));
        }
        return Err(Error::TruncatedFile {
            expected,
            found: body.len(),
        });
    }
    let grid = Grid {
        nx,
        ny,
        lx: nx as f64 * dx,
        ly: ny as f64 * dy,
        dx,
        dy,
        topology: Topology::HalfStrip,
    };
    let mut it = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut next = || ScalarField::from_values(grid, it.by_ref().take(per_field).collect());
    let u = next()?;
    let r = next()?;
    let q1 = next()?;
    let q2 = next()?;
    Ok(SimState {
        t,
        u,
        r,
        q: VectorField::new(q1, q2)?,
        profile: None,
    })
}

// ---------------------------------------------------------------------------
// manifest

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub config: Vec<(String, String)>,
    pub code_version: String,
    /// Seconds since the Unix epoch.
    pub start_time: f64,
    pub end_time: f64,
    pub outputs: Vec<PathBuf>,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(scenario: &str, cfg: Option<&SimConfig>) -> Self {
        RunManifest {
            scenario: scenario.to_string(),
            config: cfg.map(config_pairs).unwrap_or_default(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            start_time: unix_now(),
            end_time: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.end_time = unix_now();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
