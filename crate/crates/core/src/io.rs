//! CSV and JSON formats.
//!
//! Floats in CSV are written with 17 significant digits so every value
//! round-trips exactly.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{parse_word, Fractal, Mesh, VertexFunction};
use crate::interval::IntervalValue;
use crate::meanvalue::MeanValueNeighborhood;

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
struct VertexRow {
    word: String,
    vertex: usize,
    value: String,
}

/// Rows `word,vertex,value` for every canonical address of `V_m`.
pub fn write_vertex_function(f: &VertexFunction, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mesh = f.mesh();
    for (id, addr) in mesh.addresses()[..mesh.count_at(f.level())].iter().enumerate() {
        w.serialize(VertexRow { word: addr.word_string(), vertex: addr.vertex(), value: fmt17(f.value(id)) })?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_vertex_function`]; every address of `V_level` must appear once.
pub fn read_vertex_function(fractal: &Fractal, mesh: Arc<Mesh>, level: usize, input: impl Read) -> Result<VertexFunction> {
    let n = mesh.count_at(level);
    let mut values = vec![None; n];
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: VertexRow = row?;
        let word = parse_word(&row.word).ok_or_else(|| Error::InvalidAddress(row.word.clone()))?;
        let addr = fractal.address(&word, row.vertex)?;
        if addr.word() != word.as_slice() || addr.vertex() != row.vertex {
            return Err(Error::InvalidAddress(format!("{};{} is not canonical", row.word, row.vertex)));
        }
        let id = mesh.id_of(&addr).filter(|&id| id < n).ok_or_else(|| Error::InvalidAddress(format!("{addr} is not in V_{level}")))?;
        let value: f64 = row.value.parse().map_err(|_| Error::InvalidArgument(format!("bad value `{}`", row.value)))?;
        if values[id].replace(value).is_some() {
            return Err(Error::InvalidAddress(format!("{addr} appears twice")));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(id, v)| v.ok_or_else(|| Error::InvalidAddress(format!("{} is missing", mesh.address(id)))))
        .collect::<Result<Vec<f64>>>()?;
    VertexFunction::new(mesh, level, values)
}

/// One row of an evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub address: String,
    pub value: f64,
    pub bounds: IntervalValue,
}

/// Rows `address,value,lo,hi`.
pub fn write_grid(rows: &[GridRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["address", "value", "lo", "hi"])?;
    for r in rows {
        w.write_record([r.address.clone(), fmt17(r.value), fmt17(r.bounds.lo), fmt17(r.bounds.hi)])?;
    }
    w.flush()?;
    Ok(())
}

/// A solved neighborhood as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnRecord {
    pub fractal: String,
    pub word: String,
    pub vertex: usize,
    pub k: usize,
    pub c: [f64; 3],
    pub a_target: [f64; 3],
    pub residual: f64,
    pub cb: Option<IntervalValue>,
}

impl MvnRecord {
    pub fn new(fractal: &Fractal, mvn: &MeanValueNeighborhood, cb: Option<IntervalValue>) -> Self {
        MvnRecord {
            fractal: fractal.name().to_string(),
            word: mvn.x.word_string(),
            vertex: mvn.x.vertex(),
            k: mvn.spec.base_cell.level(),
            c: mvn.spec.c,
            a_target: mvn.target,
            residual: mvn.residual,
            cb,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02e23] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
