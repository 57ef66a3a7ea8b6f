//! Versioned CSV exchange files.
//!
//! Every file starts with `# pseudomode-csv v<N> kind=<kind>`, optionally
//! followed by `# key=value` metadata lines, then one column-header row.
//! Floats are written in Rust's shortest round-trip form, so equal inputs
//! give byte-identical files.

use std::io::{BufRead, Read, Write};

use crate::analysis::{CoherenceSpectrum, CrossoverRow, InterferenceMap};
use crate::dynamics::{AmplitudeTrace, ExpTerm, ExponentialSum, PhotonField};
use crate::error::{Error, Result};
use crate::lorentzian::{Lorentzian, LorentzianSet};
use crate::spectrum::TabulatedSpectrum;
use crate::units::{EnergyGrid, UnitConventions};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "# pseudomode-csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Kernel,
    Fit,
    ExpSum,
    Trace,
    Spectrum,
    Map,
    NodeLines,
    Scan,
    Beating,
}

impl CsvKind {
    pub fn name(self) -> &'static str {
        match self {
            CsvKind::Kernel => "kernel",
            CsvKind::Fit => "fit",
            CsvKind::ExpSum => "expsum",
            CsvKind::Trace => "trace",
            CsvKind::Spectrum => "spectrum",
            CsvKind::Map => "map",
            CsvKind::NodeLines => "nodelines",
            CsvKind::Scan => "scan",
            CsvKind::Beating => "beating",
        }
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            CsvKind::Kernel => &["energy_eV", "K_eV"],
            CsvKind::Fit => &["A_THz2", "B_eV", "Omega_eV"],
            CsvKind::ExpSum => &["re_X", "im_X", "re_Y", "im_Y", "k"],
            CsvKind::Trace => &["t_fs", "re_c_e0", "im_c_e0", "re_c_g0", "im_c_g0", "norm"],
            CsvKind::Spectrum => &["energy_eV", "magnitude"],
            CsvKind::Map => &["omega_eV", "t_fs", "density"],
            CsvKind::NodeLines => &[
                "line",
                "t0_fs",
                "delta0_eV",
                "slope_eV_per_fs",
                "r_squared",
                "visibility",
            ],
            CsvKind::Scan => &[
                "sigma_eV",
                "bandwidth_ratio",
                "elastic",
                "shoulder",
                "peak_ratio",
                "norm_error",
            ],
            CsvKind::Beating => &["area_eV2", "B_eV", "probe_eV", "t_beat_fs"],
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            CsvKind::Kernel,
            CsvKind::Fit,
            CsvKind::ExpSum,
            CsvKind::Trace,
            CsvKind::Spectrum,
            CsvKind::Map,
            CsvKind::NodeLines,
            CsvKind::Scan,
            CsvKind::Beating,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

fn header(w: &mut impl Write, kind: CsvKind, meta: &[(&str, String)]) -> Result<()> {
    writeln!(w, "{MAGIC} v{SCHEMA_VERSION} kind={}", kind.name())?;
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "{}", kind.columns().join(","))?;
    Ok(())
}

/// Kernel spectrum (energy_eV, K_eV); `meta` records geometry and material.
pub fn write_kernel(
    w: &mut impl Write,
    kernel: &TabulatedSpectrum,
    meta: &[(&str, String)],
) -> Result<()> {
    header(w, CsvKind::Kernel, meta)?;
    for (e, k) in kernel.energies().iter().zip(kernel.values()) {
        writeln!(w, "{e},{k}")?;
    }
    Ok(())
}

/// Lorentzian parameters as (A_THz2, B_eV, Omega_eV) rows.
pub fn write_lorentzians(
    w: &mut impl Write,
    set: &LorentzianSet,
    conv: &UnitConventions,
    meta: &[(&str, String)],
) -> Result<()> {
    header(w, CsvKind::Fit, meta)?;
    for t in set.terms() {
        // signed source-product areas keep their sign
        let a = t.area.signum() * conv.area_ev2_to_thz2(t.area.abs());
        writeln!(w, "{a},{},{}", t.half_width, t.center)?;
    }
    Ok(())
}

pub fn write_exponential_sum(
    w: &mut impl Write,
    sum: &ExponentialSum,
    meta: &[(&str, String)],
) -> Result<()> {
    header(w, CsvKind::ExpSum, meta)?;
    for t in sum.terms() {
        writeln!(
            w,
            "{},{},{},{},{}",
            t.amplitude.re, t.amplitude.im, t.rate.re, t.rate.im, t.power
        )?;
    }
    Ok(())
}

/// Amplitude trace; `solver` is recorded as metadata.
pub fn write_trace(
    w: &mut impl Write,
    trace: &AmplitudeTrace,
    solver: &str,
    meta: &[(&str, String)],
) -> Result<()> {
    let mut m = vec![("solver", solver.to_string())];
    m.extend(meta.iter().cloned());
    header(w, CsvKind::Trace, &m)?;
    for i in 0..trace.times.len() {
        let (e, g) = (trace.c_e0[i], trace.c_g0[i]);
        writeln!(
            w,
            "{},{},{},{},{},{}",
            trace.times[i], e.re, e.im, g.re, g.im, trace.norm[i]
        )?;
    }
    Ok(())
}

pub fn write_spectrum(
    w: &mut impl Write,
    spec: &CoherenceSpectrum,
    meta: &[(&str, String)],
) -> Result<()> {
    let mut m = vec![("center_eV", spec.center.to_string())];
    m.extend(meta.iter().cloned());
    header(w, CsvKind::Spectrum, &m)?;
    for (e, v) in spec.frequencies.iter().zip(&spec.magnitude) {
        writeln!(w, "{e},{v}")?;
    }
    Ok(())
}

/// Long-format |C_g1(ω,t)|² map, energy-major.
pub fn write_map(w: &mut impl Write, field: &PhotonField, meta: &[(&str, String)]) -> Result<()> {
    header(w, CsvKind::Map, meta)?;
    for (i, e) in field.grid.values().iter().enumerate() {
        for (j, t) in field.times.iter().enumerate() {
            writeln!(w, "{e},{t},{}", field.at(i, j).norm_sqr())?;
        }
    }
    Ok(())
}

/// Straight-line fits of every node line piece.
pub fn write_node_lines(
    w: &mut impl Write,
    map: &InterferenceMap,
    meta: &[(&str, String)],
) -> Result<()> {
    let mut m = vec![
        ("omega_e_eV", map.omega_e.to_string()),
        ("contrast", map.contrast.to_string()),
    ];
    m.extend(meta.iter().cloned());
    header(w, CsvKind::NodeLines, &m)?;
    for (l, line) in map.lines.iter().enumerate() {
        for g in &line.segments {
            writeln!(
                w,
                "{l},{},{},{},{},{}",
                g.t0, g.delta0, g.slope, g.r_squared, g.visibility
            )?;
        }
    }
    Ok(())
}

pub fn write_scan(
    w: &mut impl Write,
    rows: &[CrossoverRow],
    meta: &[(&str, String)],
) -> Result<()> {
    header(w, CsvKind::Scan, meta)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.sigma, r.bandwidth_ratio, r.elastic, r.shoulder, r.peak_ratio, r.norm_error
        )?;
    }
    Ok(())
}

/// Beating periods as (area, B, probe, T_beat) rows.
pub fn write_beating(
    w: &mut impl Write,
    rows: &[(f64, f64, f64, f64)],
    meta: &[(&str, String)],
) -> Result<()> {
    header(w, CsvKind::Beating, meta)?;
    for (a, b, p, t) in rows {
        writeln!(w, "{a},{b},{p},{t}")?;
    }
    Ok(())
}

/// A parsed schema-tagged file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub kind: CsvKind,
    pub version: u32,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Reads any file written by this module, checking the schema header and
/// column names.
pub fn read_table(r: impl Read) -> Result<CsvTable> {
    let mut text = String::new();
    std::io::BufReader::new(r).read_to_string(&mut text)?;
    let mut lines = text.lines();
    let first = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let rest = first.strip_prefix(MAGIC).ok_or_else(|| Error::Parse {
        line: 1,
        msg: format!("missing schema header '{MAGIC} v<N> kind=<kind>'"),
    })?;
    let mut parts = rest.split_whitespace();
    let version: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "bad schema version".into(),
        })?;
    if version != SCHEMA_VERSION {
        return Err(Error::Parse {
            line: 1,
            msg: format!("schema v{version} not supported (expected v{SCHEMA_VERSION})"),
        });
    }
    let kind = parts
        .next()
        .and_then(|k| k.strip_prefix("kind="))
        .and_then(CsvKind::from_name)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "unknown kind".into(),
        })?;
    let mut meta = Vec::new();
    let mut body_start = 1;
    for l in text.lines().skip(1) {
        match l.strip_prefix('#') {
            Some(m) => {
                if let Some((k, v)) = m.trim().split_once('=') {
                    meta.push((k.to_string(), v.to_string()));
                }
                body_start += 1;
            }
            None => break,
        }
    }
    let body: String = text.lines().skip(body_start).collect::<Vec<_>>().join("\n");
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(body_start + 1, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns != kind.columns() {
        return Err(Error::Parse {
            line: body_start + 1,
            msg: format!(
                "columns {:?} do not match kind {} ({:?})",
                columns,
                kind.name(),
                kind.columns()
            ),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = body_start + 2 + i;
        let rec = rec.map_err(|e| parse_err(line, e))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("not a number: '{f}'"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable {
        kind,
        version,
        meta,
        columns,
        rows,
    })
}

fn parse_err(line: usize, e: csv::Error) -> Error {
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

fn expect(t: &CsvTable, kind: CsvKind) -> Result<()> {
    if t.kind != kind {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected kind {}, found {}", kind.name(), t.kind.name()),
        });
    }
    Ok(())
}

pub fn read_kernel(r: impl Read) -> Result<TabulatedSpectrum> {
    let t = read_table(r)?;
    expect(&t, CsvKind::Kernel)?;
    let grid = EnergyGrid::from_values(t.rows.iter().map(|r| r[0]).collect())?;
    TabulatedSpectrum::new(grid, t.rows.iter().map(|r| r[1]).collect())
}

/// Reads (A_THz2, B_eV, Omega_eV) rows. Negative areas are kept (source
/// fits).
pub fn read_lorentzians(r: impl Read, conv: &UnitConventions) -> Result<LorentzianSet> {
    let t = read_table(r)?;
    expect(&t, CsvKind::Fit)?;
    let terms = t
        .rows
        .iter()
        .map(|r| {
            let a = r[0].signum() * conv.area_thz2_to_ev2(r[0].abs())?;
            Ok(Lorentzian::new(a, r[1], r[2]))
        })
        .collect::<Result<Vec<_>>>()?;
    LorentzianSet::new(terms)
}

pub fn read_exponential_sum(r: impl Read) -> Result<ExponentialSum> {
    let t = read_table(r)?;
    expect(&t, CsvKind::ExpSum)?;
    let terms = t
        .rows
        .iter()
        .map(|r| {
            if r[4] < 0.0 || r[4].fract() != 0.0 {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("power must be a non-negative integer, got {}", r[4]),
                });
            }
            Ok(ExpTerm {
                amplitude: num_complex::Complex64::new(r[0], r[1]),
                rate: num_complex::Complex64::new(r[2], r[3]),
                power: r[4] as u32,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExponentialSum::new(terms))
}

pub fn read_trace(r: impl Read) -> Result<(AmplitudeTrace, String)> {
    let t = read_table(r)?;
    expect(&t, CsvKind::Trace)?;
    let c = |a: f64, b: f64| num_complex::Complex64::new(a, b);
    let trace = AmplitudeTrace {
        times: t.rows.iter().map(|r| r[0]).collect(),
        c_e0: t.rows.iter().map(|r| c(r[1], r[2])).collect(),
        c_g0: t.rows.iter().map(|r| c(r[3], r[4])).collect(),
        norm: t.rows.iter().map(|r| r[5]).collect(),
    };
    Ok((trace, t.meta("solver").unwrap_or("").to_string()))
}

/// Ingests a user-supplied two-column spectrum (energy in eV, value).
///
/// Lines starting with `#` and a non-numeric first row are skipped; the
/// separator may be commas or whitespace. With `eps_background = Some(εb)`
/// the values are taken in the Jμ convention and multiplied by √εb/8.
pub fn ingest_tabulated_kernel(
    r: impl Read,
    eps_background: Option<f64>,
) -> Result<TabulatedSpectrum> {
    let scale = match eps_background {
        None => 1.0,
        Some(e) if e > 0.0 && e.is_finite() => e.sqrt() / 8.0,
        Some(e) => {
            return Err(Error::InvalidArgument(format!(
                "background permittivity must be positive, got {e}"
            )))
        }
    };
    let mut energies = Vec::new();
    let mut values = Vec::new();
    let mut seen_data = false;
    for (i, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        let nums: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        let nums = match nums {
            Some(n) => n,
            None if !seen_data => continue, // column header
            None => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("not numeric: '{s}'"),
                })
            }
        };
        if nums.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 2 columns, found {}", nums.len()),
            });
        }
        seen_data = true;
        if let Some(&last) = energies.last() {
            if nums[0] == last {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicated energy {}", nums[0]),
                });
            }
            if nums[0] < last {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("energies not increasing: {last} then {}", nums[0]),
                });
            }
        }
        energies.push(nums[0]);
        values.push(nums[1] * scale);
    }
    if energies.len() < 2 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("need at least 2 data rows, found {}", energies.len()),
        });
    }
    TabulatedSpectrum::new(EnergyGrid::from_values(energies)?, values)
}
