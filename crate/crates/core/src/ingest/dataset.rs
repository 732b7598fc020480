use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use csv::StringRecord;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawBsRecord {
    pub id: u32,
    pub longitude: f64,
    pub latitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawTrafficRow {
    pub bs_id: u32,
    /// Hours since the first hour in the file.
    pub hour: u32,
    pub users: u64,
    pub packets: u64,
    pub bytes: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParseOptions {
    /// Multiplier from the file's traffic unit to bytes (1024 for kilobytes).
    pub byte_scale: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { byte_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub base_stations: Vec<RawBsRecord>,
    /// Sorted by `(bs_id, hour)`, one row per pair.
    pub traffic: Vec<RawTrafficRow>,
    pub dropped_bs_rows: usize,
    pub dropped_traffic_rows: usize,
    pub merged_duplicates: usize,
}

const BS_ID: &[&str] = &["id", "bs", "bs_id", "base_station"];
const LON: &[&str] = &["longitude", "lon", "lng"];
const LAT: &[&str] = &["latitude", "lat"];
const HOUR: &[&str] = &["hour", "time_hour", "time", "hour_index"];
const USERS: &[&str] = &["users", "user", "ues", "ue_count", "user_count"];
const PACKETS: &[&str] = &["packets", "packet", "packet_count"];
const BYTES: &[&str] = &["bytes", "traffic", "traffic_bytes"];

fn column(headers: &StringRecord, names: &[&str], file: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
        .ok_or_else(|| Error::Parse(format!("{file}: no column named any of {names:?}")))
}

fn field<T: std::str::FromStr>(rec: &StringRecord, i: usize) -> Option<T> {
    rec.get(i).map(str::trim).filter(|s| !s.is_empty())?.parse().ok()
}

fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let doy = (153 * (m + if m > 2 { -3 } else { 9 }) + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Absolute hour of a time label: either a plain hour count or a
/// `YYYYMMDDHH` stamp.
fn absolute_hour(v: u64) -> Option<i64> {
    if v < 1_000_000_000 {
        return Some(v as i64);
    }
    let (ymd, h) = (v / 100, (v % 100) as i64);
    let (y, m, d) = ((ymd / 10_000) as i64, (ymd / 100 % 100) as i64, (ymd % 100) as i64);
    if h > 23 || !(1..=12).contains(&m) || !(1..=31).contains(&d) {
        return None;
    }
    Some(days_from_civil(y, m, d) * 24 + h)
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(input)
}

pub fn parse_bs_table<R: Read>(input: R, name: &str) -> Result<(Vec<RawBsRecord>, usize)> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Parse(format!("{name}: {e}")))?.clone();
    let (ci, cx, cy) = (column(&headers, BS_ID, name)?, column(&headers, LON, name)?, column(&headers, LAT, name)?);
    let mut out: Vec<RawBsRecord> = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let Ok(rec) = rec else {
            dropped += 1;
            continue;
        };
        let row = (field(&rec, ci), field::<f64>(&rec, cx), field::<f64>(&rec, cy));
        match row {
            (Some(id), Some(lon), Some(lat)) if (-180.0..=180.0).contains(&lon) && (-90.0..=90.0).contains(&lat) => {
                if out.iter().any(|b| b.id == id) {
                    log::warn!("{name}: duplicate BS id {id}, keeping the first row");
                    dropped += 1;
                } else {
                    out.push(RawBsRecord { id, longitude: lon, latitude: lat });
                }
            }
            _ => dropped += 1,
        }
    }
    if out.is_empty() {
        return Err(Error::InsufficientData(format!("{name}: no valid BS rows")));
    }
    out.sort_by_key(|b| b.id);
    Ok((out, dropped))
}

/// Traffic rows keyed by absolute hour, plus drop and merge counts.
pub fn parse_traffic_table<R: Read>(input: R, name: &str, opts: &ParseOptions) -> Result<(Vec<RawTrafficRow>, usize, usize)> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Parse(format!("{name}: {e}")))?.clone();
    let cols = [
        column(&headers, BS_ID, name)?,
        column(&headers, HOUR, name)?,
        column(&headers, USERS, name)?,
        column(&headers, PACKETS, name)?,
        column(&headers, BYTES, name)?,
    ];
    let mut rows: BTreeMap<(u32, i64), (u64, u64, f64)> = BTreeMap::new();
    let (mut dropped, mut merged) = (0, 0);
    for rec in rdr.records() {
        let Ok(rec) = rec else {
            dropped += 1;
            continue;
        };
        let id = field::<u32>(&rec, cols[0]);
        let hour = field::<u64>(&rec, cols[1]).and_then(absolute_hour);
        let users = field::<u64>(&rec, cols[2]);
        let packets = field::<u64>(&rec, cols[3]);
        let bytes = field::<f64>(&rec, cols[4]).filter(|b| b.is_finite() && *b >= 0.0);
        let (Some(id), Some(hour), Some(users), Some(packets), Some(bytes)) = (id, hour, users, packets, bytes) else {
            dropped += 1;
            continue;
        };
        let bytes = bytes * opts.byte_scale;
        match rows.get_mut(&(id, hour)) {
            Some(e) => {
                log::warn!("{name}: duplicate row for BS {id} hour {hour}, summing");
                merged += 1;
                e.0 += users;
                e.1 += packets;
                e.2 += bytes;
            }
            None => {
                rows.insert((id, hour), (users, packets, bytes));
            }
        }
    }
    let Some(first) = rows.keys().map(|k| k.1).min() else {
        return Err(Error::InsufficientData(format!("{name}: no valid traffic rows")));
    };
    let out = rows
        .into_iter()
        .map(|((bs_id, h), (users, packets, bytes))| RawTrafficRow {
            bs_id,
            hour: (h - first) as u32,
            users,
            packets,
            bytes,
        })
        .collect();
    Ok((out, dropped, merged))
}

/// Reads the BS table and the hourly traffic table. Traffic rows for
/// unknown base stations are dropped and counted.
pub fn parse_dataset(bs_file: &Path, traffic_file: &Path, opts: &ParseOptions) -> Result<Dataset> {
    if !(opts.byte_scale > 0.0 && opts.byte_scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("byte scale must be positive, got {}", opts.byte_scale)));
    }
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| Error::io(p, e));
    let bs_name = bs_file.display().to_string();
    let tr_name = traffic_file.display().to_string();
    let (base_stations, dropped_bs_rows) = parse_bs_table(open(bs_file)?, &bs_name)?;
    let (traffic, mut dropped_traffic_rows, merged_duplicates) = parse_traffic_table(open(traffic_file)?, &tr_name, opts)?;
    let before = traffic.len();
    let traffic: Vec<_> = traffic
        .into_iter()
        .filter(|r| base_stations.binary_search_by_key(&r.bs_id, |b| b.id).is_ok())
        .collect();
    dropped_traffic_rows += before - traffic.len();
    if traffic.is_empty() {
        return Err(Error::InsufficientData(format!("{tr_name}: no traffic rows for known base stations")));
    }
    if dropped_bs_rows + dropped_traffic_rows > 0 {
        log::warn!("dropped {dropped_bs_rows} BS rows and {dropped_traffic_rows} traffic rows");
    }
    Ok(Dataset { base_stations, traffic, dropped_bs_rows, dropped_traffic_rows, merged_duplicates })
}

/// City-wide traffic per hour, in bytes, indexed from hour 0.
pub fn hourly_city_series(traffic: &[RawTrafficRow]) -> Vec<f64> {
    let n = traffic.iter().map(|r| r.hour as usize + 1).max().unwrap_or(0);
    let mut out = vec![0.0; n];
    for r in traffic {
        out[r.hour as usize] += r.bytes;
    }
    out
}
