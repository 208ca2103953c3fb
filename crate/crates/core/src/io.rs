//! CSV readers and writers. Floats are written in shortest round-trip form,
//! so everything emitted here parses back bit-for-bit.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::chain::{total_bend_angle, PullSolution, TarsusMode, SEGMENT_COUNT};
use crate::contact::{AttachmentState, DemoRun, EventKind};
use crate::error::{Error, Result};
use crate::gait::{MarkerFrame, StepCycle, TrialMetrics, TrialRecording};
use crate::leg::{JointSample, JointVector, Trajectory, TrajectorySample};

pub const TRAJECTORY_HEADER: &str = "t_ms,x_mm,y_mm,z_mm";
pub const JOINTS_HEADER: &str = "t_ms,coxa_rad,trochanter_rad,femur_rad,tibia_rad";
pub const MARKERS_HEADER: &str = "t_ms,label,x_mm,y_mm,z_mm";
pub const DEMO_HEADER: &str = "t_ms,claw_z_mm,mesh_z_mm,mode,attachment,event";
pub const CURVE_HEADER: &str = "displacement_mm,force_N";
pub const METRICS_HEADER: &str =
    "condition,beetle,cycle,touchdown_ms,liftoff_ms,next_touchdown_ms,cycle_time_ms,bend_amplitude_deg,gap";

fn chain_header() -> String {
    let mut cols = vec!["pull_mm".to_string(), "total_bend_deg".to_string()];
    for prefix in ["theta", "compression", "slack"] {
        let unit = if prefix == "theta" { "deg" } else { "mm" };
        cols.extend((1..=SEGMENT_COUNT).map(|i| format!("{prefix}{i}_{unit}")));
    }
    cols.push("clamped".into());
    cols.join(",")
}

fn io_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            row: p.line() as usize,
            message: e.to_string(),
        },
        None => Error::Io(e.to_string()),
    }
}

/// Rows of a headed CSV, with the header checked exactly.
fn read_rows<T: DeserializeOwned>(text: &str, header: &str) -> Result<Vec<(usize, T)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let got = rdr.headers().map_err(io_err)?.iter().collect::<Vec<_>>().join(",");
    if got != header {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header `{header}`, got `{got}`"),
        });
    }
    rdr.deserialize()
        .map(|r| {
            let rec: T = r.map_err(io_err)?;
            Ok(rec)
        })
        .enumerate()
        .map(|(i, r)| r.map(|rec| (i + 2, rec)))
        .collect()
}

fn write_rows<T: Serialize>(header: &str, rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header.split(',')).map_err(io_err)?;
    for r in rows {
        w.serialize(r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn finite(row: usize, vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parse {
            row,
            message: "non-finite value".into(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PointRow {
    #[serde(rename = "t_ms")]
    t: f64,
    #[serde(rename = "x_mm")]
    x: f64,
    #[serde(rename = "y_mm")]
    y: f64,
    #[serde(rename = "z_mm")]
    z: f64,
}

pub fn read_trajectory(text: &str) -> Result<Trajectory> {
    let rows: Vec<(usize, PointRow)> = read_rows(text, TRAJECTORY_HEADER)?;
    let mut samples = Vec::with_capacity(rows.len());
    let mut prev: Option<f64> = None;
    for (row, r) in rows {
        finite(row, &[r.t, r.x, r.y, r.z])?;
        if prev.is_some_and(|p| r.t <= p) {
            return Err(Error::Parse {
                row,
                message: format!("time {} ms does not increase", r.t),
            });
        }
        prev = Some(r.t);
        samples.push(TrajectorySample {
            t: r.t,
            p: Vector3::new(r.x, r.y, r.z),
        });
    }
    Trajectory::new(samples)
}

pub fn write_trajectory(traj: &Trajectory) -> Result<String> {
    write_rows(
        TRAJECTORY_HEADER,
        traj.samples().iter().map(|s| PointRow {
            t: s.t,
            x: s.p.x,
            y: s.p.y,
            z: s.p.z,
        }),
    )
}

pub fn read_joints(text: &str) -> Result<Vec<JointSample>> {
    let rows: Vec<(usize, (f64, f64, f64, f64, f64))> = read_rows(text, JOINTS_HEADER)?;
    rows.into_iter()
        .map(|(row, (t, a, b, c, d))| {
            finite(row, &[t, a, b, c, d])?;
            Ok(JointSample {
                t,
                q: JointVector([a, b, c, d]),
            })
        })
        .collect()
}

pub fn write_joints(series: &[JointSample]) -> Result<String> {
    write_rows(
        JOINTS_HEADER,
        series.iter().map(|s| (s.t, s.q.0[0], s.q.0[1], s.q.0[2], s.q.0[3])),
    )
}

#[derive(Serialize, Deserialize)]
struct MarkerRow {
    #[serde(rename = "t_ms")]
    t: f64,
    label: String,
    #[serde(rename = "x_mm")]
    x: f64,
    #[serde(rename = "y_mm")]
    y: f64,
    #[serde(rename = "z_mm")]
    z: f64,
}

/// Long-format marker file onto a uniform frame grid at `rate_hz`.
///
/// Frames missing from the file become empty frames (gaps). Timestamps off the
/// grid, out of order, or duplicated labels are parse errors.
pub fn read_markers(text: &str, rate_hz: f64) -> Result<TrialRecording> {
    if !(rate_hz > 0.0) {
        return Err(Error::domain("capture rate must be positive"));
    }
    let step = 1000.0 / rate_hz;
    let rows: Vec<(usize, MarkerRow)> = read_rows(text, MARKERS_HEADER)?;
    let Some(t0) = rows.first().map(|r| r.1.t) else {
        return TrialRecording::new(Vec::new(), rate_hz);
    };
    let mut frames: BTreeMap<usize, MarkerFrame> = BTreeMap::new();
    let mut last: Option<(f64, String)> = None;
    for (row, r) in rows {
        finite(row, &[r.t, r.x, r.y, r.z])?;
        let key = (r.t, r.label.clone());
        if let Some(prev) = &last {
            if key.0 < prev.0 || (key.0 == prev.0 && key.1 <= prev.1) {
                return Err(Error::Parse {
                    row,
                    message: "rows must be sorted by t then label without duplicates".into(),
                });
            }
        }
        last = Some(key);
        let k = ((r.t - t0) / step).round();
        if (r.t - (t0 + k * step)).abs() > 1e-6 * step {
            return Err(Error::Parse {
                row,
                message: format!("t = {} ms is off the {step} ms frame grid", r.t),
            });
        }
        frames
            .entry(k as usize)
            .or_insert_with(|| MarkerFrame::new(r.t))
            .points
            .insert(r.label, Vector3::new(r.x, r.y, r.z));
    }
    let n = frames.keys().next_back().map_or(0, |k| k + 1);
    let frames = (0..n)
        .map(|k| {
            frames
                .remove(&k)
                .unwrap_or_else(|| MarkerFrame::new(t0 + k as f64 * step))
        })
        .collect();
    TrialRecording::new(frames, rate_hz)
}

pub fn write_markers(rec: &TrialRecording) -> Result<String> {
    write_rows(
        MARKERS_HEADER,
        rec.frames().iter().flat_map(|f| {
            f.points.iter().map(move |(label, p)| MarkerRow {
                t: f.t,
                label: label.clone(),
                x: p.x,
                y: p.y,
                z: p.z,
            })
        }),
    )
}

/// One parsed demo row.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub t: f64,
    pub claw_z: f64,
    pub mesh_z: f64,
    pub mode: TarsusMode,
    pub attachment: AttachmentState,
    pub events: Vec<EventKind>,
}

fn join_events(events: &[EventKind]) -> String {
    events.iter().map(|e| e.as_str()).collect::<Vec<_>>().join(";")
}

pub fn write_demo(run: &DemoRun) -> Result<String> {
    write_rows(
        DEMO_HEADER,
        run.samples.iter().map(|s| {
            (
                s.t,
                s.claw_z,
                s.mesh_z,
                s.mode.to_string(),
                s.attachment.to_string(),
                join_events(&s.events),
            )
        }),
    )
}

pub fn write_demo_rows(rows: &[DemoRow]) -> Result<String> {
    write_rows(
        DEMO_HEADER,
        rows.iter().map(|s| {
            (
                s.t,
                s.claw_z,
                s.mesh_z,
                s.mode.to_string(),
                s.attachment.to_string(),
                join_events(&s.events),
            )
        }),
    )
}

pub fn read_demo(text: &str) -> Result<Vec<DemoRow>> {
    let rows: Vec<(usize, (f64, f64, f64, String, String, String))> = read_rows(text, DEMO_HEADER)?;
    rows.into_iter()
        .map(|(row, (t, claw_z, mesh_z, mode, att, ev))| {
            let bad = |e: Error| Error::Parse {
                row,
                message: e.to_string(),
            };
            finite(row, &[t, claw_z, mesh_z])?;
            let events = if ev.is_empty() {
                Vec::new()
            } else {
                ev.split(';').map(str::parse).collect::<Result<Vec<_>>>().map_err(bad)?
            };
            Ok(DemoRow {
                t,
                claw_z,
                mesh_z,
                mode: mode.parse().map_err(bad)?,
                attachment: att.parse().map_err(bad)?,
                events,
            })
        })
        .collect()
}

/// One row of the chain state table.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRow {
    pub pull: f64,
    pub total_bend_deg: f64,
    pub theta_deg: Vec<f64>,
    pub compression: Vec<f64>,
    pub slack: Vec<f64>,
    pub clamped: bool,
}

impl ChainRow {
    pub fn from_solution(pull: f64, sol: &PullSolution) -> Self {
        Self {
            pull,
            total_bend_deg: total_bend_angle(&sol.state),
            theta_deg: sol.state.theta.iter().map(|t| t.to_degrees()).collect(),
            compression: sol.state.compression.clone(),
            slack: sol.state.slack.clone(),
            clamped: sol.clamped,
        }
    }
}

pub fn write_chain_table(rows: &[ChainRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(chain_header().split(',')).map_err(io_err)?;
    for r in rows {
        let mut rec = vec![r.pull.to_string(), r.total_bend_deg.to_string()];
        for v in r.theta_deg.iter().chain(&r.compression).chain(&r.slack) {
            rec.push(v.to_string());
        }
        rec.push(r.clamped.to_string());
        w.write_record(&rec).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_chain_table(text: &str) -> Result<Vec<ChainRow>> {
    let header = chain_header();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let got = rdr.headers().map_err(io_err)?.iter().collect::<Vec<_>>().join(",");
    if got != header {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header `{header}`"),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(io_err)?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|e| Error::Parse {
                row,
                message: format!("column {}: {e}", k + 1),
            })
        };
        let block = |start: usize| -> Result<Vec<f64>> { (start..start + SEGMENT_COUNT).map(num).collect() };
        out.push(ChainRow {
            pull: num(0)?,
            total_bend_deg: num(1)?,
            theta_deg: block(2)?,
            compression: block(2 + SEGMENT_COUNT)?,
            slack: block(2 + 2 * SEGMENT_COUNT)?,
            clamped: rec[2 + 3 * SEGMENT_COUNT].parse().map_err(|e| Error::Parse {
                row,
                message: format!("clamped: {e}"),
            })?,
        });
    }
    Ok(out)
}

pub fn write_curve(points: &[(f64, f64)]) -> Result<String> {
    write_rows(CURVE_HEADER, points.iter().copied())
}

pub fn read_curve(text: &str) -> Result<Vec<(f64, f64)>> {
    let rows: Vec<(usize, (f64, f64))> = read_rows(text, CURVE_HEADER)?;
    rows.into_iter()
        .map(|(row, (d, f))| {
            finite(row, &[d, f])?;
            Ok((d, f))
        })
        .collect()
}

/// One cycle of one trial, as written to the metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub condition: String,
    pub beetle: String,
    pub cycle: usize,
    pub touchdown_ms: f64,
    pub liftoff_ms: f64,
    pub next_touchdown_ms: f64,
    pub cycle_time_ms: f64,
    pub bend_amplitude_deg: f64,
    pub gap: bool,
}

pub fn metrics_rows(trials: &[TrialMetrics]) -> Vec<MetricsRow> {
    trials
        .iter()
        .flat_map(|t| {
            t.cycles.iter().enumerate().map(|(i, c)| MetricsRow {
                condition: t.condition.clone(),
                beetle: t.beetle.clone(),
                cycle: i,
                touchdown_ms: c.touchdown_t,
                liftoff_ms: c.liftoff_t,
                next_touchdown_ms: c.next_touchdown_t,
                cycle_time_ms: c.cycle_time,
                bend_amplitude_deg: c.bend_amplitude,
                gap: c.gap,
            })
        })
        .collect()
}

impl MetricsRow {
    pub fn cycle(&self) -> StepCycle {
        StepCycle {
            touchdown_t: self.touchdown_ms,
            liftoff_t: self.liftoff_ms,
            next_touchdown_t: self.next_touchdown_ms,
            cycle_time: self.cycle_time_ms,
            bend_amplitude: self.bend_amplitude_deg,
            gap: self.gap,
        }
    }
}

pub fn write_metrics(rows: &[MetricsRow]) -> Result<String> {
    write_rows(METRICS_HEADER, rows)
}

pub fn read_metrics(text: &str) -> Result<Vec<MetricsRow>> {
    Ok(read_rows(text, METRICS_HEADER)?.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_round_trip() {
        let traj = Trajectory::uniform(
            10.0,
            [Vector3::new(0.1, 0.2, 0.3), Vector3::new(1.0 / 3.0, -2.5e-7, 1e300)],
        )
        .unwrap();
        let text = write_trajectory(&traj).unwrap();
        assert!(text.starts_with(TRAJECTORY_HEADER));
        assert_eq!(read_trajectory(&text).unwrap(), traj);
    }

    #[test]
    fn trajectory_errors_carry_rows() {
        let bad = "t_ms,x_mm,y_mm,z_mm\n0,1,2,3\n10,1,x,3\n";
        assert!(matches!(read_trajectory(bad), Err(Error::Parse { row: 3, .. })));
        let back = "t_ms,x_mm,y_mm,z_mm\n0,1,2,3\n0,1,2,3\n";
        assert!(matches!(read_trajectory(back), Err(Error::Parse { row: 3, .. })));
        assert!(matches!(read_trajectory("t,x,y,z\n"), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn markers_fill_gaps() {
        let text = "t_ms,label,x_mm,y_mm,z_mm\n0,B1,0,0,0\n0,L1,1,1,1\n20,B1,0,0,0\n";
        let rec = read_markers(text, 100.0).unwrap();
        assert_eq!(rec.frames().len(), 3);
        assert!(rec.frames()[1].points.is_empty());
        assert_eq!(rec.frames()[1].t, 10.0);
        let again = read_markers(&write_markers(&rec).unwrap(), 100.0).unwrap();
        assert_eq!(again, rec);
        let off = "t_ms,label,x_mm,y_mm,z_mm\n0,B1,0,0,0\n13,B1,0,0,0\n";
        assert!(matches!(read_markers(off, 100.0), Err(Error::Parse { row: 3, .. })));
        let unsorted = "t_ms,label,x_mm,y_mm,z_mm\n0,L1,0,0,0\n0,B1,0,0,0\n";
        assert!(matches!(read_markers(unsorted, 100.0), Err(Error::Parse { row: 3, .. })));
    }

    #[test]
    fn demo_rows_round_trip() {
        let rows = vec![
            DemoRow {
                t: 0.0,
                claw_z: -30.25,
                mesh_z: -60.0,
                mode: TarsusMode::Flexible,
                attachment: AttachmentState::Free,
                events: vec![],
            },
            DemoRow {
                t: 5.0,
                claw_z: -61.1,
                mesh_z: -60.0,
                mode: TarsusMode::Rigid,
                attachment: AttachmentState::Hooked(15),
                events: vec![EventKind::Hooked, EventKind::Saturation],
            },
        ];
        let text = write_demo_rows(&rows).unwrap();
        assert_eq!(read_demo(&text).unwrap(), rows);
        assert_eq!(write_demo_rows(&[]).unwrap().trim_end(), DEMO_HEADER);
    }

    #[test]
    fn curve_and_chain_round_trip() {
        let pts = vec![(0.0, 0.0), (0.1, 0.054), (1.0 / 7.0, 2.46)];
        assert_eq!(read_curve(&write_curve(&pts).unwrap()).unwrap(), pts);
        let chain = crate::chain::ChainGeometry::calibrated();
        let rows: Vec<ChainRow> = [0.0, 2.0, 5.5, 13.1]
            .iter()
            .map(|&p| ChainRow::from_solution(p, &crate::chain::solve_bend_from_pull(&chain, p).unwrap()))
            .collect();
        assert_eq!(read_chain_table(&write_chain_table(&rows).unwrap()).unwrap(), rows);
    }
}
