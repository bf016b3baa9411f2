//! Schedule files and trajectory CSV.

use std::io::{self, Write};

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::propagator::{Pulse, PulseShape, Schedule, TrajectoryPoint};
use crate::spin::PairParams;

pub const SCHEDULE_FILE_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "time,bx,by,bz,p00,p11";
pub const IDENTITY_LABEL: &str = "identity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, SerializeDerive, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeLabel {
    Square,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseEntry {
    pub j: f64,
    /// Full pulse window.
    pub t: f64,
    pub shape: ShapeLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fwhm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub version: u32,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_large: Option<f64>,
    pub j_max: f64,
    pub pulses: Vec<PulseEntry>,
    pub target: String,
    pub frame_synced: bool,
}

/// `Ω` assumed when a file leaves it out. It only sets the `|00⟩`/`|11⟩`
/// phases, which no logical result depends on.
pub fn default_omega_large(omega: f64) -> f64 {
    2.0 * omega.abs()
}

impl ScheduleFile {
    pub fn from_schedule(schedule: &Schedule, target: &str, frame_synced: bool) -> Self {
        let p = &schedule.params;
        let target = if schedule.is_empty() { IDENTITY_LABEL } else { target };
        Self {
            version: SCHEDULE_FILE_VERSION,
            omega: p.omega(),
            omega_large: Some(p.omega_large()),
            j_max: p.j_max,
            pulses: schedule
                .pulses
                .iter()
                .map(|pulse| match pulse.shape {
                    PulseShape::Square => PulseEntry {
                        j: pulse.j,
                        t: pulse.duration,
                        shape: ShapeLabel::Square,
                        fwhm: None,
                    },
                    PulseShape::Gaussian { fwhm } => PulseEntry {
                        j: pulse.j,
                        t: pulse.duration,
                        shape: ShapeLabel::Gaussian,
                        fwhm: Some(fwhm),
                    },
                })
                .collect(),
            target: target.to_string(),
            frame_synced,
        }
    }

    /// Check the file invariants, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidArgument(format!("{field}: {msg}")));
        if self.version != SCHEDULE_FILE_VERSION {
            return bad(
                "version",
                format!("expected {SCHEDULE_FILE_VERSION}, got {}", self.version),
            );
        }
        if !self.omega.is_finite() {
            return bad("omega", "must be finite".into());
        }
        if let Some(w) = self.omega_large {
            if !w.is_finite() {
                return bad("omega_large", "must be finite".into());
            }
        }
        if !(self.j_max.is_finite() && self.j_max > 0.0) {
            return bad("j_max", format!("must be finite and > 0, got {}", self.j_max));
        }
        if self.pulses.is_empty() && self.target != IDENTITY_LABEL {
            return bad(
                "pulses",
                format!("empty, but target is {:?} rather than \"identity\"", self.target),
            );
        }
        for (k, p) in self.pulses.iter().enumerate() {
            if !(p.j.is_finite() && p.j >= 0.0) {
                return bad(
                    &format!("pulses[{k}].j"),
                    format!("must be finite and >= 0, got {}", p.j),
                );
            }
            if !(p.t.is_finite() && p.t > 0.0) {
                return bad(
                    &format!("pulses[{k}].t"),
                    format!("must be finite and > 0, got {}", p.t),
                );
            }
            match (p.shape, p.fwhm) {
                (ShapeLabel::Gaussian, None) => {
                    return bad(&format!("pulses[{k}].fwhm"), "required for gaussian pulses".into())
                }
                (ShapeLabel::Square, Some(_)) => {
                    return bad(&format!("pulses[{k}].fwhm"), "only allowed for gaussian pulses".into())
                }
                (_, Some(f)) if !(f.is_finite() && f > 0.0) => {
                    return bad(&format!("pulses[{k}].fwhm"), format!("must be finite and > 0, got {f}"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PairParams> {
        self.validate()?;
        let big = self.omega_large.unwrap_or_else(|| default_omega_large(self.omega));
        PairParams::from_omegas(self.omega, big, self.j_max)
    }

    pub fn to_schedule(&self) -> Result<Schedule> {
        let params = self.params()?;
        let pulses = self
            .pulses
            .iter()
            .map(|p| match p.shape {
                ShapeLabel::Square => Pulse::square(p.j, p.t),
                ShapeLabel::Gaussian => Pulse::gaussian(p.j, p.fwhm.unwrap_or_default(), 0.5 * p.t),
            })
            .collect();
        Schedule::new(params, pulses).map_err(|e| match e {
            Error::DomainViolation(m) => Error::DomainViolation(format!("pulses: {m}")),
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("pulses: {m}")),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats::default());
        self.serialize(&mut ser).expect("schedule files always serialize");
        buf.push(b'\n');
        String::from_utf8(buf).expect("serde_json writes UTF-8")
    }

    /// Parse and validate; errors carry `line:column` or the field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("line {} column {}: {e}", e.line(), e.column())))?;
        file.validate()?;
        Ok(file)
    }
}

/// Pretty JSON with every float written to 17 significant digits.
#[derive(Default)]
struct ExactFloats(PrettyFormatter<'static>);

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Trajectory CSV. Time is written in units of `1/ω` when `ω ≠ 0`.
pub fn write_trajectory_csv<W: Write>(mut out: W, points: &[TrajectoryPoint], omega: f64) -> io::Result<()> {
    let scale = if omega != 0.0 { omega.abs() } else { 1.0 };
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.time * scale,
            p.bloch[0],
            p.bloch[1],
            p.bloch[2],
            p.p00,
            p.p11
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample() -> Schedule {
        let p = PairParams::from_omegas(1.0, 2.0, 0.8).unwrap();
        Schedule::new(
            p,
            vec![
                Pulse::square(0.5, PI / (2.0 * 2f64.sqrt())),
                Pulse::square(0.0, 1.0 / 3.0),
                Pulse::gaussian(0.3, 0.4, 0.9),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        let text = ScheduleFile::from_schedule(&s, "h", false).to_json();
        let back = ScheduleFile::from_json(&text).unwrap().to_schedule().unwrap();
        assert_eq!(back, s);
        assert!(text.contains("3.3333333333333331e-1"));
    }

    #[test]
    fn empty_schedule_is_identity() {
        let p = PairParams::from_omegas(1.0, 2.0, 0.8).unwrap();
        let f = ScheduleFile::from_schedule(&Schedule::empty(p), "rz:0", false);
        assert_eq!(f.target, IDENTITY_LABEL);
        assert!(f.validate().is_ok());

        let mut g = f.clone();
        g.target = "h".into();
        assert!(g.validate().unwrap_err().to_string().contains("pulses"));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let mut f = ScheduleFile::from_schedule(&sample(), "h", false);
        f.pulses[1].t = -1.0;
        let msg = f.validate().unwrap_err().to_string();
        assert!(msg.contains("pulses[1].t"), "{msg}");

        let msg = ScheduleFile::from_json("{\n  \"version\": 1,\n  \"omega\": oops\n}")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line 3"), "{msg}");

        let mut f = ScheduleFile::from_schedule(&sample(), "h", false);
        f.version = 2;
        assert!(f.validate().unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn coupling_above_bound_is_rejected_on_load() {
        let mut f = ScheduleFile::from_schedule(&sample(), "h", false);
        f.pulses[0].j = 5.0;
        assert!(matches!(f.to_schedule(), Err(Error::DomainViolation(_))));
    }

    #[test]
    fn csv_layout() {
        let pts = vec![
            TrajectoryPoint {
                time: 0.0,
                bloch: [0.0, 0.0, 1.0],
                p00: 0.0,
                p11: 0.0,
            };
            3
        ];
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &pts, 2.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 6);
    }
}
