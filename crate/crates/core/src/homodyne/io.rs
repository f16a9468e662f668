//! CSV files for quadrature samples and raw shot counts.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::homodyne::{QuadratureSample, ShotRecord};

pub const SAMPLE_HEADER: [&str; 3] = ["theta_rad", "x_a", "x_b"];
pub const SHOT_HEADER: [&str; 3] = ["n_a", "n_b", "n_tot"];

pub fn write_samples<W: Write>(out: W, samples: &[QuadratureSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLE_HEADER).map_err(csv_err)?;
    for s in samples {
        // `{}` prints the shortest representation that round-trips exactly.
        w.write_record([s.theta.to_string(), s.x_a.to_string(), s.x_b.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_shots<W: Write>(out: W, shots: &[ShotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SHOT_HEADER).map_err(csv_err)?;
    for s in shots {
        w.write_record([s.n_a.to_string(), s.n_b.to_string(), s.n_tot.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<QuadratureSample>> {
    read_rows(input, &SAMPLE_HEADER, |line, fields| {
        let v: Vec<f64> = fields.iter().map(|f| parse_field::<f64>(line, f)).collect::<Result<_>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse { line, message: "non-finite value".into() });
        }
        Ok(QuadratureSample::new(v[0], v[1], v[2]))
    })
}

pub fn read_shots<R: Read>(input: R) -> Result<Vec<ShotRecord>> {
    read_rows(input, &SHOT_HEADER, |line, fields| {
        let v: Vec<u64> = fields.iter().map(|f| parse_field::<u64>(line, f)).collect::<Result<_>>()?;
        ShotRecord::new(v[0], v[1], v[2]).map_err(|e| Error::Parse { line, message: e.to_string() })
    })
}

fn read_rows<R: Read, T>(
    input: R,
    header: &[&str; 3],
    mut parse: impl FnMut(u64, &[&str]) -> Result<T>,
) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = reader.records();
    let first = match records.next() {
        None => return Err(Error::EmptyInput("file has no header")),
        Some(r) => r.map_err(csv_err)?,
    };
    if first.iter().collect::<Vec<_>>() != header {
        return Err(Error::Parse { line: 1, message: format!("expected header `{}`", header.join(",")) });
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = rec.iter().collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", fields.len()) });
        }
        out.push(parse(line, &fields)?);
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(line: u64, field: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse { line, message: format!("cannot parse `{field}`") })
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}
