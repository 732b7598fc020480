use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::TransmissionRecord;
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    bs_id: u32,
    time_s: f64,
    x_m: f64,
    y_m: f64,
    rate_bps: f64,
}

/// Writes `bs_id,time_s,x_m,y_m,rate_bps` rows, streams in the given order.
pub fn write_record_stream<F: Scalar>(streams: &[(u32, &[TransmissionRecord<F>])], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::io("<record stream>", e);
    for (id, recs) in streams {
        for r in recs.iter() {
            w.serialize(Row {
                bs_id: *id,
                time_s: r.time_s.as_f64(),
                x_m: r.location[0].as_f64(),
                y_m: r.location[1].as_f64(),
                rate_bps: r.rate_bps.as_f64(),
            })
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io("<record stream>", e))
}

/// Reads a record stream, grouped by BS id and sorted by time.
pub fn read_record_stream<F: Scalar>(input: impl Read) -> Result<BTreeMap<u32, Vec<TransmissionRecord<F>>>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out: BTreeMap<u32, Vec<TransmissionRecord<F>>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("record row {}: {e}", i + 1)))?;
        if !(row.rate_bps >= 0.0 && row.time_s.is_finite() && row.x_m.is_finite() && row.y_m.is_finite()) {
            return Err(Error::Parse(format!("record row {}: invalid values", i + 1)));
        }
        out.entry(row.bs_id).or_default().push(TransmissionRecord {
            rate_bps: F::lit(row.rate_bps),
            location: [F::lit(row.x_m), F::lit(row.y_m)],
            time_s: F::lit(row.time_s),
        });
    }
    for recs in out.values_mut() {
        recs.sort_by(|a, b| a.time_s.partial_cmp(&b.time_s).unwrap_or(std::cmp::Ordering::Equal));
    }
    Ok(out)
}
