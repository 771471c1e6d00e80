//! Floating-car-data XML as exported by SUMO:
//!
//! ```xml
//! <fcd-export>
//!   <timestep time="1.00">
//!     <vehicle id="veh0" x="10.5" y="20.1" speed="13.2" angle="90" lane="e1_0"/>
//!   </timestep>
//! </fcd-export>
//! ```

use std::borrow::Cow;
use std::io::Read;
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{TraceError, TraceSample};
use crate::model::{Point, VehicleId};
use crate::scalar::Real;

/// Incremental byte offset to line number mapping; offsets must not decrease.
struct Lines<'a> {
    text: &'a [u8],
    offset: usize,
    line: usize,
}

impl Lines<'_> {
    fn at(&mut self, pos: usize) -> usize {
        let pos = pos.min(self.text.len());
        if pos > self.offset {
            self.line += self.text[self.offset..pos].iter().filter(|&&b| b == b'\n').count();
            self.offset = pos;
        }
        self.line
    }
}

/// The attributes of one element that the parser needs, gathered in a
/// single pass over its attribute list.
struct Attrs<'a, const N: usize> {
    element: &'a BytesStart<'a>,
    keys: [&'static str; N],
    values: [Option<Cow<'a, str>>; N],
    line: usize,
}

impl<'a, const N: usize> Attrs<'a, N> {
    fn read(element: &'a BytesStart<'a>, keys: [&'static str; N], line: usize) -> Result<Self, TraceError> {
        let malformed = |message: String| TraceError::MalformedXml { line, message };
        let mut values: [Option<Cow<'a, str>>; N] = std::array::from_fn(|_| None);
        for attr in element.attributes() {
            let attr = attr.map_err(|e| malformed(e.to_string()))?;
            if let Some(k) = keys.iter().position(|k| attr.key.as_ref() == k.as_bytes()) {
                if values[k].is_none() {
                    values[k] = Some(attr.unescape_value().map_err(|e| malformed(e.to_string()))?);
                }
            }
        }
        Ok(Attrs {
            element,
            keys,
            values,
            line,
        })
    }

    fn get(&self, k: usize) -> Option<&str> {
        self.values[k].as_deref()
    }

    fn require(&self, k: usize) -> Result<&str, TraceError> {
        self.get(k).ok_or_else(|| TraceError::MissingAttribute {
            line: self.line,
            element: String::from_utf8_lossy(self.element.name().as_ref()).into_owned(),
            attribute: self.keys[k].to_owned(),
        })
    }

    fn number<T: Real>(&self, k: usize, raw: &str) -> Result<T, TraceError> {
        <T as FromStr>::from_str(raw.trim())
            .ok()
            .filter(|v: &T| v.is_finite())
            .ok_or_else(|| TraceError::MalformedXml {
                line: self.line,
                message: format!("attribute '{}' is not a finite number: '{raw}'", self.keys[k]),
            })
    }
}

/// Parses an FCD export into time-ordered samples.
///
/// Elements other than `timestep` and `vehicle` (persons, containers, ...)
/// and unknown attributes are ignored.
pub fn parse_fcd<T: Real, R: Read>(mut input: R) -> Result<Vec<TraceSample<T>>, TraceError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;

    let mut reader = Reader::from_str(&text);
    reader.config_mut().trim_text(true);

    let mut samples = Vec::new();
    let mut current: Option<T> = None;
    let mut previous: Option<T> = None;

    let mut lines = Lines {
        text: text.as_bytes(),
        offset: 0,
        line: 1,
    };

    loop {
        let event = match reader.read_event() {
            Ok(ev) => ev,
            Err(e) => {
                return Err(TraceError::MalformedXml {
                    line: lines.at(reader.error_position() as usize),
                    message: e.to_string(),
                })
            }
        };
        // Line of the tag's closing '>'.
        let line = lines.at((reader.buffer_position() as usize).saturating_sub(1));
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => match e.name().as_ref() {
                b"timestep" => {
                    let attrs = Attrs::read(e, ["time"], line)?;
                    let raw = attrs.require(0)?;
                    let t: T = attrs.number(0, raw)?;
                    if t < T::zero() {
                        return Err(TraceError::MalformedXml {
                            line: attrs.line,
                            message: format!("negative time {raw}"),
                        });
                    }
                    if let Some(p) = previous {
                        if t < p {
                            return Err(TraceError::NonMonotonicTime {
                                line: attrs.line,
                                previous: p.as_f64(),
                                found: t.as_f64(),
                            });
                        }
                    }
                    previous = Some(t);
                    current = matches!(event, Event::Start(_)).then_some(t);
                }
                b"vehicle" => {
                    let time = current.ok_or_else(|| TraceError::MalformedXml {
                        line,
                        message: "<vehicle> outside <timestep>".into(),
                    })?;
                    let attrs = Attrs::read(e, ["id", "x", "y", "speed"], line)?;
                    let id = attrs.require(0)?.to_owned();
                    let x = attrs.number(1, attrs.require(1)?)?;
                    let y = attrs.number(2, attrs.require(2)?)?;
                    let speed = match attrs.get(3) {
                        Some(raw) => Some(attrs.number(3, raw)?),
                        None => None,
                    };
                    samples.push(TraceSample {
                        time,
                        vehicle_id: VehicleId(id),
                        position: Point::new(x, y),
                        speed,
                    });
                }
                _ => {}
            },
            Event::End(ref e) if e.name().as_ref() == b"timestep" => current = None,
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<TraceSample<f64>>, TraceError> {
        parse_fcd(s.as_bytes())
    }

    #[test]
    fn two_vehicles_one_step() {
        let xml = r#"<?xml version="1.0" encoding="UTF-8"?>
<fcd-export>
  <timestep time="1.00">
    <vehicle id="veh0" x="100.0" y="200.0" speed="3.5" angle="12" lane="a_0"/>
    <vehicle id="veh1" x="5" y="6" speed="0"/>
  </timestep>
</fcd-export>"#;
        let s = parse(xml).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.time == 1.0));
        assert_eq!(s[0].position, Point::new(100.0, 200.0));
        assert_eq!(s[0].speed, Some(3.5));
        assert_eq!(s[1].vehicle_id, VehicleId::from("veh1"));
    }

    #[test]
    fn empty_timestep() {
        let s = parse(r#"<fcd-export><timestep time="0"/><timestep time="1"></timestep></fcd-export>"#).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn time_going_backwards() {
        let err = parse(
            r#"<fcd-export><timestep time="5"/>
<timestep time="3"/></fcd-export>"#,
        )
        .unwrap_err();
        assert!(matches!(err, TraceError::NonMonotonicTime { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_attribute_names_line() {
        let err = parse("<fcd-export>\n<timestep time=\"1\">\n<vehicle id=\"a\" x=\"1\"/>\n</timestep></fcd-export>")
            .unwrap_err();
        match err {
            TraceError::MissingAttribute { line, attribute, .. } => {
                assert_eq!(line, 3);
                assert_eq!(attribute, "y");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_xml() {
        let err = parse("<fcd-export>\n<timestep time=\"1\">\n</vehicle></fcd-export>").unwrap_err();
        assert!(matches!(err, TraceError::MalformedXml { .. }), "{err}");
    }

    #[test]
    fn speed_optional_and_persons_ignored() {
        let s = parse(r#"<fcd-export><timestep time="2"><person id="p" x="1" y="1"/><vehicle id="v" x="1" y="2"/></timestep></fcd-export>"#).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].speed, None);
    }
}
