use std::io::{Read, Write};

use super::{AssignmentError, RideSegment, StrandReason, StrandedPerson, Trajectory};

fn format_err(context: &str, e: impl ToString) -> AssignmentError {
    AssignmentError::Format { context: context.to_string(), message: e.to_string() }
}

/// `person_id,trip_id,board_stop,board_time,alight_stop,alight_time`, times in seconds.
pub fn write_trajectories(trajectories: &[Trajectory], writer: impl Write) -> Result<(), AssignmentError> {
    let err = |e: csv::Error| format_err("trajectories.csv", e);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["person_id", "trip_id", "board_stop", "board_time", "alight_stop", "alight_time"]).map_err(err)?;
    for t in trajectories {
        for s in &t.segments {
            w.write_record([
                t.person_id.as_str(),
                &s.trip_id,
                &s.board_stop,
                &s.board_time.to_string(),
                &s.alight_stop,
                &s.alight_time.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| format_err("trajectories.csv", e))
}

/// Reads trajectories back, one per person, segments in boarding order.
pub fn read_trajectories(reader: impl Read) -> Result<Vec<Trajectory>, AssignmentError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out: Vec<Trajectory> = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| format_err("trajectories.csv", e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 6 {
            return Err(format_err(&format!("trajectories.csv:{line}"), "expected 6 fields"));
        }
        let time = |i: usize| {
            record[i].parse::<u32>().map_err(|e| format_err(&format!("trajectories.csv:{line}"), e))
        };
        let segment = RideSegment {
            trip_id: record[1].to_string(),
            board_stop: record[2].to_string(),
            board_time: time(3)?,
            alight_stop: record[4].to_string(),
            alight_time: time(5)?,
        };
        if segment.alight_time < segment.board_time {
            return Err(format_err(&format!("trajectories.csv:{line}"), "alight before board"));
        }
        match out.last_mut() {
            Some(t) if t.person_id == record[0] => t.segments.push(segment),
            _ => out.push(Trajectory { person_id: record[0].to_string(), segments: vec![segment], completed: true }),
        }
    }
    out.sort_by(|a, b| a.person_id.cmp(&b.person_id));
    let mut merged: Vec<Trajectory> = Vec::with_capacity(out.len());
    for t in out {
        match merged.last_mut() {
            Some(m) if m.person_id == t.person_id => m.segments.extend(t.segments),
            _ => merged.push(t),
        }
    }
    for t in &mut merged {
        t.segments.sort_by_key(|s| (s.board_time, s.alight_time));
    }
    Ok(merged)
}

pub fn write_stranded(stranded: &[StrandedPerson], writer: impl Write) -> Result<(), AssignmentError> {
    let err = |e: csv::Error| format_err("stranded.csv", e);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["person_id", "reason"]).map_err(err)?;
    for s in stranded {
        w.write_record([s.person_id.as_str(), s.reason.as_str()]).map_err(err)?;
    }
    w.flush().map_err(|e| format_err("stranded.csv", e))
}

pub fn read_stranded(reader: impl Read) -> Result<Vec<StrandedPerson>, AssignmentError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| format_err("stranded.csv", e))?;
        let reason = StrandReason::parse(record.get(1).unwrap_or(""))
            .ok_or_else(|| format_err("stranded.csv", format!("bad reason in {record:?}")))?;
        out.push(StrandedPerson { person_id: record[0].to_string(), reason });
    }
    Ok(out)
}
