use std::io::{Read, Write};

use super::{ContactEdge, ContactError, ContactNetwork};

/// `u,v,trip_id,t_start,t_end,duration_sec` with person ids as endpoints.
pub fn write_contact_edges(net: &ContactNetwork, writer: impl Write) -> Result<(), ContactError> {
    let err = |e: csv::Error| ContactError::Format { context: "contact_edges.csv".into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["u", "v", "trip_id", "t_start", "t_end", "duration_sec"]).map_err(err)?;
    for e in net.edges() {
        w.write_record([
            net.nodes()[e.u as usize].as_str(),
            net.nodes()[e.v as usize].as_str(),
            net.trip_id(e),
            &e.t_start.to_string(),
            &e.t_end.to_string(),
            &e.duration().to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| ContactError::Format { context: "contact_edges.csv".into(), message: e.to_string() })
}

/// Rebuilds a network from its edge list and full node set (isolated
/// passengers do not appear in the edge file).
pub fn read_contact_edges(reader: impl Read, mut nodes: Vec<String>) -> Result<ContactNetwork, ContactError> {
    nodes.sort();
    nodes.dedup();
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut raw = Vec::new();
    for record in r.records() {
        let record = record
            .map_err(|e| ContactError::Format { context: "contact_edges.csv".into(), message: e.to_string() })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |m: &str| ContactError::Format { context: format!("contact_edges.csv:{line}"), message: m.into() };
        if record.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let num = |i: usize| record[i].parse::<u32>().map_err(|_| bad("bad number"));
        let (start, end, dur) = (num(3)?, num(4)?, num(5)?);
        if end <= start || end - start != dur {
            return Err(bad("inconsistent contact interval"));
        }
        raw.push((record[0].to_string(), record[1].to_string(), record[2].to_string(), start, end));
    }
    let mut trip_ids: Vec<String> = raw.iter().map(|r| r.2.clone()).collect();
    trip_ids.sort();
    trip_ids.dedup();
    let find = |p: &str| {
        nodes
            .binary_search_by(|n| n.as_str().cmp(p))
            .map(|i| i as u32)
            .map_err(|_| ContactError::UnknownPerson(p.to_string()))
    };
    let mut edges = Vec::with_capacity(raw.len());
    for (a, b, trip, t_start, t_end) in &raw {
        let (x, y) = (find(a)?, find(b)?);
        if x == y {
            return Err(ContactError::Format { context: "contact_edges.csv".into(), message: format!("self contact of `{a}`") });
        }
        let trip = trip_ids.binary_search(trip).expect("collected") as u32;
        edges.push(ContactEdge { u: x.min(y), v: x.max(y), trip, t_start: *t_start, t_end: *t_end });
    }
    Ok(ContactNetwork::from_parts(nodes, trip_ids, edges))
}

/// One `person_id` per row.
pub fn write_nodes(net: &ContactNetwork, mut writer: impl Write) -> std::io::Result<()> {
    writeln!(writer, "person_id")?;
    for n in net.nodes() {
        writeln!(writer, "{n}")?;
    }
    Ok(())
}

pub fn read_nodes(reader: impl Read) -> Result<Vec<String>, ContactError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    r.records()
        .map(|rec| {
            rec.map(|rec| rec[0].to_string())
                .map_err(|e| ContactError::Format { context: "nodes.csv".into(), message: e.to_string() })
        })
        .collect()
}
