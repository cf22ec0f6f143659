//! Text formats.
//!
//! CSV files share one layout: optional `# key=value` metadata lines, one
//! header line, then comma-separated numeric rows. Blank lines are skipped.
//! Writers emit numbers with Rust's shortest round-trip formatting so a
//! parse of a written file reproduces the original values exactly.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::{
    AfmImage, ComplexSpectrum, ElementLine, Meta, PowerPoint, PowerSweepSeries, TemperaturePoint,
    TemperatureSweepSeries, WalkoffCurve, XpsSpectrum, DEFAULT_REFERENCE_TEMPERATURE_K,
    MIN_SPECTRUM_LEN,
};
use crate::error::{Error, Result};

struct Table {
    meta: Meta,
    rows: Vec<(usize, Vec<f64>)>,
    last_line: usize,
}

fn parse_number(field: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| {
        Error::parse(
            line,
            format!("cannot parse {column} value `{}`", field.trim()),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{column} value is not finite")));
    }
    Ok(v)
}

fn read_table(text: &str, header: &[&str]) -> Result<Table> {
    let mut meta = Meta::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if seen_header {
                    return Err(Error::parse(line, "metadata line after the header"));
                }
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !seen_header {
            let cols: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if cols != header {
                return Err(Error::parse(
                    line,
                    format!("expected header `{}`, found `{trimmed}`", header.join(",")),
                ));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let values = fields
            .iter()
            .zip(header)
            .map(|(f, col)| parse_number(f, line, col))
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, values));
    }
    if !seen_header {
        return Err(Error::parse(
            last_line.max(1),
            format!("missing header `{}`", header.join(",")),
        ));
    }
    Ok(Table {
        meta,
        rows,
        last_line,
    })
}

fn meta_number(meta: &Meta, key: &str) -> Result<Option<f64>> {
    match meta.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| Error::invalid("metadata", format!("`{key}={v}` is not a number"))),
    }
}

fn write_meta(out: &mut String, meta: &Meta) {
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
}

/// Parses a `freq_hz,re,im` reflection trace.
pub fn parse_s11_csv(text: &str) -> Result<ComplexSpectrum> {
    let table = read_table(text, &["freq_hz", "re", "im"])?;
    let mut freqs = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        if let Some(&prev) = freqs.last() {
            if row[0] <= prev {
                return Err(Error::parse(
                    *line,
                    format!(
                        "frequency {} Hz does not increase (previous row {} Hz)",
                        row[0], prev
                    ),
                ));
            }
        }
        freqs.push(row[0]);
        values.push(Complex64::new(row[1], row[2]));
    }
    if freqs.len() < MIN_SPECTRUM_LEN {
        return Err(Error::parse(
            table.last_line,
            format!(
                "{} data rows, need at least {MIN_SPECTRUM_LEN}",
                freqs.len()
            ),
        ));
    }
    ComplexSpectrum::new(freqs, values, table.meta)
}

pub fn write_s11_csv(spectrum: &ComplexSpectrum) -> String {
    let mut out = String::new();
    write_meta(&mut out, spectrum.meta());
    out.push_str("freq_hz,re,im\n");
    for (f, v) in spectrum.frequencies_hz().iter().zip(spectrum.values()) {
        let _ = writeln!(out, "{f},{},{}", v.re, v.im);
    }
    out
}

/// Parses a `be_ev,counts` file; the line comes from a `# line=<label>`
/// metadata entry.
pub fn parse_xps_csv(text: &str) -> Result<XpsSpectrum> {
    let table = read_table(text, &["be_ev", "counts"])?;
    let line = table
        .meta
        .get("line")
        .ok_or_else(|| Error::parse(1, "missing `# line=<element>` metadata"))?
        .parse::<ElementLine>()?;
    let mut be = Vec::with_capacity(table.rows.len());
    let mut counts = Vec::with_capacity(table.rows.len());
    for (ln, row) in &table.rows {
        if row[1] < 0.0 {
            return Err(Error::parse(*ln, format!("negative count {}", row[1])));
        }
        if be.len() >= 2 {
            let rising = be[1] > be[0];
            let last: f64 = be[be.len() - 1];
            if (rising && row[0] <= last) || (!rising && row[0] >= last) {
                return Err(Error::parse(*ln, "binding-energy axis is not monotone"));
            }
        } else if be.len() == 1 && row[0] == be[0] {
            return Err(Error::parse(*ln, "duplicated binding energy"));
        }
        be.push(row[0]);
        counts.push(row[1]);
    }
    XpsSpectrum::new(be, counts, line)
}

pub fn write_xps_csv(spectrum: &XpsSpectrum) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# line={}", spectrum.element_line());
    out.push_str("be_ev,counts\n");
    for (e, c) in spectrum.binding_energy_ev().iter().zip(spectrum.counts()) {
        let _ = writeln!(out, "{e},{c}");
    }
    out
}

/// Parses a whitespace grid: header `nx ny dx_m dy_m`, then `ny` rows of
/// `nx` heights in meters. Lines starting with `#` are comments.
pub fn parse_afm_grid(text: &str) -> Result<AfmImage> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing `nx ny dx_m dy_m` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::parse(hline, "header must be `nx ny dx_m dy_m`"));
    }
    let nx: usize = fields[0]
        .parse()
        .map_err(|_| Error::parse(hline, format!("bad nx `{}`", fields[0])))?;
    let ny: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(hline, format!("bad ny `{}`", fields[1])))?;
    let dx = parse_number(fields[2], hline, "dx_m")?;
    let dy = parse_number(fields[3], hline, "dy_m")?;
    let mut heights = Vec::with_capacity(nx * ny);
    let mut rows = 0;
    for (line, l) in lines {
        rows += 1;
        if rows > ny {
            return Err(Error::parse(
                line,
                format!("dimension mismatch: more than the declared {ny} rows"),
            ));
        }
        let before = heights.len();
        for tok in l.split_whitespace() {
            heights.push(parse_number(tok, line, "height")?);
        }
        let got = heights.len() - before;
        if got != nx {
            return Err(Error::parse(
                line,
                format!("dimension mismatch: row has {got} values, header declares {nx}"),
            ));
        }
    }
    if rows != ny {
        return Err(Error::parse(
            text.lines().count().max(1),
            format!("dimension mismatch: {rows} rows present, header declares {ny}"),
        ));
    }
    AfmImage::new(nx, ny, dx, dy, heights)
}

pub fn write_afm_grid(image: &AfmImage) -> String {
    let (dx, dy) = image.pixel_pitch_m();
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {dx} {dy}", image.nx(), image.ny());
    for y in 0..image.ny() {
        let row: Vec<String> = image.row(y).iter().map(|h| h.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses `temperature_K,f0_hz,f0_err_hz`; an optional
/// `# reference_temperature_K=` entry overrides the 200 mK default.
pub fn parse_temperature_sweep_csv(text: &str) -> Result<TemperatureSweepSeries> {
    let table = read_table(text, &["temperature_K", "f0_hz", "f0_err_hz"])?;
    let reference = meta_number(&table.meta, "reference_temperature_K")?
        .unwrap_or(DEFAULT_REFERENCE_TEMPERATURE_K);
    let points = table
        .rows
        .iter()
        .map(|(_, r)| TemperaturePoint {
            temperature_k: r[0],
            f0_hz: r[1],
            f0_err_hz: r[2],
        })
        .collect();
    TemperatureSweepSeries::new(points, reference)
}

pub fn write_temperature_sweep_csv(series: &TemperatureSweepSeries) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# reference_temperature_K={}",
        series.reference_temperature_k()
    );
    out.push_str("temperature_K,f0_hz,f0_err_hz\n");
    for p in series.points() {
        let _ = writeln!(out, "{},{},{}", p.temperature_k, p.f0_hz, p.f0_err_hz);
    }
    out
}

/// Parses `n_mean,qi,qi_err`; requires `# temperature_K=` and `# f0_hz=`.
pub fn parse_power_sweep_csv(text: &str) -> Result<PowerSweepSeries> {
    let table = read_table(text, &["n_mean", "qi", "qi_err"])?;
    let t = meta_number(&table.meta, "temperature_K")?
        .ok_or_else(|| Error::parse(1, "missing `# temperature_K=` metadata"))?;
    let f0 = meta_number(&table.meta, "f0_hz")?
        .ok_or_else(|| Error::parse(1, "missing `# f0_hz=` metadata"))?;
    let points = table
        .rows
        .iter()
        .map(|(_, r)| PowerPoint {
            mean_phonon_number: r[0],
            qi: r[1],
            qi_err: r[2],
        })
        .collect();
    PowerSweepSeries::new(points, t, f0)
}

pub fn write_power_sweep_csv(series: &PowerSweepSeries) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# f0_hz={}", series.f0_hz());
    let _ = writeln!(out, "# temperature_K={}", series.temperature_k());
    out.push_str("n_mean,qi,qi_err\n");
    for p in series.points() {
        let _ = writeln!(out, "{},{},{}", p.mean_phonon_number, p.qi, p.qi_err);
    }
    out
}

pub fn parse_walkoff_csv(text: &str) -> Result<WalkoffCurve> {
    let table = read_table(text, &["theta_deg", "eta_deg"])?;
    let mut theta = Vec::with_capacity(table.rows.len());
    let mut eta = Vec::with_capacity(table.rows.len());
    for (line, r) in &table.rows {
        if let Some(&prev) = theta.last() {
            if r[0] <= prev {
                return Err(Error::parse(*line, "theta does not increase"));
            }
        }
        theta.push(r[0]);
        eta.push(r[1]);
    }
    WalkoffCurve::new(theta, eta)
}

pub fn write_walkoff_csv(curve: &WalkoffCurve) -> String {
    let mut out = String::from("theta_deg,eta_deg\n");
    for (t, e) in curve.theta_deg().iter().zip(curve.eta_deg()) {
        let _ = writeln!(out, "{t},{e}");
    }
    out
}
