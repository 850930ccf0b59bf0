//! Vehicle trace formats: SUMO floating-car-data XML and a flat CSV.
//!
//! CSV layout is `time,id,x,y,speed,heading_rad`, one row per vehicle per
//! timestep. Headings are radians counterclockwise from east; FCD angles
//! (degrees clockwise from north) are converted at ingest.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use vanet_core::mobility::{normalize_heading, NetworkSnapshot, VehicleState};

use crate::error::TraceError;

pub const CSV_HEADER: [&str; 6] = ["time", "id", "x", "y", "speed", "heading_rad"];

const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    FcdXml,
    Csv,
}

impl TraceFormat {
    /// `.xml` is FCD, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("xml") => TraceFormat::FcdXml,
            _ => TraceFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub heading_rad: f64,
    /// Source line, for error reports.
    pub line: usize,
}

pub fn parse_trace(source: &str, format: TraceFormat) -> Result<Vec<NetworkSnapshot>, TraceError> {
    let rows = match format {
        TraceFormat::FcdXml => parse_fcd_rows(source)?,
        TraceFormat::Csv => parse_csv_rows(source)?,
    };
    rows_to_snapshots(&rows)
}

fn line_at(text: &str, offset: usize) -> usize {
    let end = offset.min(text.len());
    1 + text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count()
}

enum Place {
    Plane(f64, f64),
    Geo { lon: f64, lat: f64 },
}

struct RawVehicle {
    time: f64,
    id: String,
    place: Place,
    speed: f64,
    angle_deg: f64,
    line: usize,
}

fn attrs(e: &BytesStart<'_>, line: usize) -> Result<Vec<(String, String)>, TraceError> {
    e.attributes()
        .map(|a| {
            let a = a.map_err(|err| TraceError::Malformed { line, message: err.to_string() })?;
            let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
            let value = a
                .unescape_value()
                .map_err(|err| TraceError::Malformed { line, message: err.to_string() })?
                .into_owned();
            Ok((key, value))
        })
        .collect()
}

fn field<'a>(attrs: &'a [(String, String)], name: &str) -> Option<&'a str> {
    attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
}

fn number(attrs: &[(String, String)], name: &'static str, line: usize) -> Result<f64, TraceError> {
    let raw = field(attrs, name).ok_or(TraceError::MissingField { line, field: name })?;
    parse_number(raw, name, line)
}

fn parse_number(raw: &str, name: &str, line: usize) -> Result<f64, TraceError> {
    match raw.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(TraceError::InvalidRecord { line, message: format!("`{name}` is not a finite number: {raw:?}") }),
    }
}

/// Reads `timestep@time` / `vehicle@id,x,y,speed,angle` elements. Vehicles
/// given in `lon`/`lat` instead of `x`/`y` are projected onto a local
/// tangent plane anchored at the centroid of all geo positions.
pub fn parse_fcd_rows(xml: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);
    let mut raw: Vec<RawVehicle> = Vec::new();
    let mut current: Option<f64> = None;
    let mut previous: Option<f64> = None;
    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|err| TraceError::Malformed { line: line_at(xml, reader.buffer_position() as usize), message: err.to_string() })?;
        let start = offset + xml.as_bytes()[offset.min(xml.len())..].iter().take_while(|b| b.is_ascii_whitespace()).count();
        let line = line_at(xml, start);
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => match e.name().as_ref() {
                b"timestep" => {
                    let a = attrs(e, line)?;
                    let time = number(&a, "time", line)?;
                    if let Some(prev) = previous {
                        if time <= prev {
                            return Err(TraceError::Ordering { line, time, previous: prev });
                        }
                    }
                    previous = Some(time);
                    current = matches!(event, Event::Start(_)).then_some(time);
                }
                b"vehicle" => {
                    let time = current.ok_or_else(|| TraceError::Malformed {
                        line,
                        message: "vehicle element outside a timestep".into(),
                    })?;
                    let a = attrs(e, line)?;
                    let id = field(&a, "id").ok_or(TraceError::MissingField { line, field: "id" })?.to_string();
                    let place = match (field(&a, "x"), field(&a, "y")) {
                        (Some(x), Some(y)) => Place::Plane(parse_number(x, "x", line)?, parse_number(y, "y", line)?),
                        (None, None) if field(&a, "lon").is_some() || field(&a, "lat").is_some() => {
                            Place::Geo { lon: number(&a, "lon", line)?, lat: number(&a, "lat", line)? }
                        }
                        (None, _) => return Err(TraceError::MissingField { line, field: "x" }),
                        (_, None) => return Err(TraceError::MissingField { line, field: "y" }),
                    };
                    raw.push(RawVehicle {
                        time,
                        id,
                        place,
                        speed: number(&a, "speed", line)?,
                        angle_deg: number(&a, "angle", line)?,
                        line,
                    });
                }
                _ => {}
            },
            Event::End(ref e) if e.name().as_ref() == b"timestep" => current = None,
            Event::Eof => break,
            _ => {}
        }
    }
    project(raw)
}

fn project(raw: Vec<RawVehicle>) -> Result<Vec<TraceRow>, TraceError> {
    let geo: Vec<(f64, f64)> = raw
        .iter()
        .filter_map(|r| match r.place {
            Place::Geo { lon, lat } => Some((lon, lat)),
            Place::Plane(..) => None,
        })
        .collect();
    if !geo.is_empty() && geo.len() != raw.len() {
        let line = raw.iter().find(|r| matches!(r.place, Place::Plane(..))).map_or(1, |r| r.line);
        return Err(TraceError::InvalidRecord { line, message: "trace mixes planar and geographic positions".into() });
    }
    let (lon0, lat0) = if geo.is_empty() {
        (0.0, 0.0)
    } else {
        let n = geo.len() as f64;
        (geo.iter().map(|g| g.0).sum::<f64>() / n, geo.iter().map(|g| g.1).sum::<f64>() / n)
    };
    let scale_x = EARTH_RADIUS_M * lat0.to_radians().cos();
    Ok(raw
        .into_iter()
        .map(|r| {
            let (x, y) = match r.place {
                Place::Plane(x, y) => (x, y),
                Place::Geo { lon, lat } => (scale_x * (lon - lon0).to_radians(), EARTH_RADIUS_M * (lat - lat0).to_radians()),
            };
            TraceRow {
                time: r.time,
                id: r.id,
                x,
                y,
                speed: r.speed,
                heading_rad: normalize_heading(FRAC_PI_2 - r.angle_deg.to_radians()),
                line: r.line,
            }
        })
        .collect())
}

pub fn parse_csv_rows(text: &str) -> Result<Vec<TraceRow>, TraceError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|err| TraceError::Malformed { line: 1, message: err.to_string() })?.clone();
    let mut columns = [0usize; 6];
    for (slot, name) in columns.iter_mut().zip(CSV_HEADER) {
        *slot = headers.iter().position(|h| h.trim() == name).ok_or(TraceError::MissingField { line: 1, field: name })?;
    }
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    for record in reader.records() {
        let record = record.map_err(|err| TraceError::Malformed {
            line: err.position().map_or(0, |p| p.line() as usize),
            message: err.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let get = |i: usize| -> Result<&str, TraceError> {
            record.get(columns[i]).filter(|v| !v.trim().is_empty()).ok_or(TraceError::MissingField { line, field: CSV_HEADER[i] })
        };
        let num = |i: usize| get(i).and_then(|v| parse_number(v, CSV_HEADER[i], line));
        let time = num(0)?;
        if let Some(prev) = previous {
            if time < prev {
                return Err(TraceError::Ordering { line, time, previous: prev });
            }
        }
        previous = Some(time);
        rows.push(TraceRow {
            time,
            id: get(1)?.trim().to_string(),
            x: num(2)?,
            y: num(3)?,
            speed: num(4)?,
            heading_rad: num(5)?,
            line,
        });
    }
    Ok(rows)
}

/// Groups rows by timestep (in order) into snapshots without RSUs. The step
/// duration is the gap between the first two timesteps, 1 s for a single one.
pub fn rows_to_snapshots(rows: &[TraceRow]) -> Result<Vec<NetworkSnapshot>, TraceError> {
    let mut groups: Vec<(f64, Vec<&TraceRow>)> = Vec::new();
    for row in rows {
        match groups.last_mut() {
            Some((t, g)) if *t == row.time => g.push(row),
            Some((t, _)) if row.time < *t => {
                return Err(TraceError::Ordering { line: row.line, time: row.time, previous: *t });
            }
            _ => groups.push((row.time, vec![row])),
        }
    }
    let step_s = if groups.len() >= 2 { groups[1].0 - groups[0].0 } else { 1.0 };
    groups
        .iter()
        .enumerate()
        .map(|(step, (_, group))| {
            let vehicles = group
                .iter()
                .map(|r| {
                    VehicleState::new(r.id.as_str(), r.x, r.y, r.speed, r.heading_rad)
                        .map_err(|e| TraceError::InvalidRecord { line: r.line, message: e.to_string() })
                })
                .collect::<Result<Vec<_>, _>>()?;
            NetworkSnapshot::new(step as u64, step_s, vehicles, Vec::new())
                .map_err(|e| TraceError::InvalidRecord { line: group[0].line, message: e.to_string() })
        })
        .collect()
}

/// Writes snapshots as trace CSV: three decimals for positions and time,
/// two for speed and heading.
pub fn write_csv<W: Write>(snapshots: &[NetworkSnapshot], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in snapshots {
        let time = format!("{:.3}", s.step as f64 * s.step_s);
        for v in &s.vehicles {
            w.write_record([
                time.as_str(),
                v.id.0.as_str(),
                &format!("{:.3}", v.x),
                &format!("{:.3}", v.y),
                &format!("{:.2}", v.speed),
                &format!("{:.2}", v.heading),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// FCD XML text to trace CSV text.
pub fn convert_fcd(xml: &str) -> Result<String, TraceError> {
    let rows = parse_fcd_rows(xml)?;
    let mut buf = Vec::new();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
    let io = |e: csv::Error| TraceError::Malformed { line: 0, message: e.to_string() };
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in &rows {
        w.write_record([
            format!("{:.3}", r.time),
            r.id.clone(),
            format!("{:.3}", r.x),
            format!("{:.3}", r.y),
            format!("{:.2}", r.speed),
            format!("{:.2}", r.heading_rad),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| TraceError::Malformed { line: 0, message: e.to_string() })?;
    drop(w);
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
