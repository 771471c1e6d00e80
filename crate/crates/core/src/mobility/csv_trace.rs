//! CSV traces: header `time,vehicle_id,x,y[,speed]`, one sample per row.

use std::io::{Read, Write};
use std::str::FromStr;

use super::{TraceError, TraceSample};
use crate::model::{Point, VehicleId};
use crate::scalar::Real;

const BASE_HEADER: [&str; 4] = ["time", "vehicle_id", "x", "y"];

fn field<T: Real>(raw: &str, name: &str, line: usize) -> Result<T, TraceError> {
    <T as FromStr>::from_str(raw.trim())
        .ok()
        .filter(|v: &T| v.is_finite())
        .ok_or_else(|| TraceError::MalformedRow {
            line,
            message: format!("{name} is not a finite number: '{raw}'"),
        })
}

pub fn parse_csv_trace<T: Real, R: Read>(input: R) -> Result<Vec<TraceSample<T>>, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| TraceError::MalformedRow {
        line: 1,
        message: e.to_string(),
    })?;
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    let with_speed = match cols.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == BASE_HEADER => false,
        [a, b, c, d, "speed"] if [*a, *b, *c, *d] == BASE_HEADER => true,
        _ => {
            return Err(TraceError::MalformedRow {
                line: 1,
                message: format!("expected header time,vehicle_id,x,y[,speed], got '{}'", cols.join(",")),
            })
        }
    };
    let width = if with_speed { 5 } else { 4 };

    let mut samples: Vec<TraceSample<T>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| TraceError::MalformedRow {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(TraceError::MalformedRow {
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let time: T = field(&record[0], "time", line)?;
        if time < T::zero() {
            return Err(TraceError::MalformedRow {
                line,
                message: format!("negative time {}", &record[0]),
            });
        }
        if let Some(prev) = samples.last() {
            if time < prev.time {
                return Err(TraceError::NonMonotonicTime {
                    line,
                    previous: prev.time.as_f64(),
                    found: time.as_f64(),
                });
            }
        }
        let speed = match record.get(4).map(str::trim) {
            Some(raw) if !raw.is_empty() => Some(field(raw, "speed", line)?),
            _ => None,
        };
        samples.push(TraceSample {
            time,
            vehicle_id: VehicleId(record[1].to_owned()),
            position: Point::new(field(&record[2], "x", line)?, field(&record[3], "y", line)?),
            speed,
        });
    }
    Ok(samples)
}

/// Writes samples in the format read by [`parse_csv_trace`]. The speed
/// column is present when any sample carries a speed.
pub fn emit_csv<T: Real, W: Write>(samples: &[TraceSample<T>], out: W) -> Result<(), TraceError> {
    let with_speed = samples.iter().any(|s| s.speed.is_some());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let to_io = |e: csv::Error| TraceError::Io(std::io::Error::other(e));
    if with_speed {
        w.write_record(["time", "vehicle_id", "x", "y", "speed"])
            .map_err(to_io)?;
    } else {
        w.write_record(BASE_HEADER).map_err(to_io)?;
    }
    for s in samples {
        let mut row = vec![
            s.time.to_string(),
            s.vehicle_id.0.clone(),
            s.position.x.to_string(),
            s.position.y.to_string(),
        ];
        if with_speed {
            row.push(s.speed.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<Vec<TraceSample<f64>>, TraceError> {
        parse_csv_trace(s.as_bytes())
    }

    #[test]
    fn single_row() {
        let s = parse("time,vehicle_id,x,y\n1,veh0,100.0,200.0\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].time, 1.0);
        assert_eq!(s[0].vehicle_id, VehicleId::from("veh0"));
        assert_eq!(s[0].position, Point::new(100.0, 200.0));
        assert_eq!(s[0].speed, None);
    }

    #[test]
    fn short_row_is_malformed() {
        let err = parse("time,vehicle_id,x,y\n1,veh0,100.0\n").unwrap_err();
        assert!(matches!(err, TraceError::MalformedRow { line: 2, .. }), "{err}");
    }

    #[test]
    fn optional_speed() {
        let s = parse("time,vehicle_id,x,y,speed\n1,a,1,2,3.5\n1,b,1,2,\n").unwrap();
        assert_eq!(s[0].speed, Some(3.5));
        assert_eq!(s[1].speed, None);
    }

    #[test]
    fn bad_header_and_time_order() {
        assert!(parse("t,id,x,y\n").is_err());
        let err = parse("time,vehicle_id,x,y\n5,a,0,0\n3,a,0,0\n").unwrap_err();
        assert!(matches!(err, TraceError::NonMonotonicTime { line: 3, .. }));
    }

    fn arb_samples() -> impl Strategy<Value = Vec<TraceSample<f64>>> {
        prop::collection::vec(
            (
                0u32..50,
                "[a-z][a-z0-9_,\" ]{0,6}",
                -1e6..1e6f64,
                -1e6..1e6f64,
                prop::option::of(0.0..40.0f64),
            ),
            0..40,
        )
        .prop_map(|mut rows| {
            rows.sort_by_key(|r| r.0);
            rows.into_iter()
                .map(|(t, id, x, y, speed)| TraceSample {
                    time: f64::from(t) * 0.5,
                    vehicle_id: VehicleId(id),
                    position: Point::new(x, y),
                    speed,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn round_trip_exact(samples in arb_samples()) {
            let mut buf = Vec::new();
            emit_csv(&samples, &mut buf).unwrap();
            let back: Vec<TraceSample<f64>> = parse_csv_trace(buf.as_slice()).unwrap();
            prop_assert_eq!(back, samples);
        }
    }
}
