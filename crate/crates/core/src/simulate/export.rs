use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{PathSet, SimError};

pub const CSV_HEADER: [&str; 9] = ["time_s", "path_id", "X", "Y", "D", "P_hat", "q", "jump_flag", "xi_at_decision"];

fn csv_err(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Csv { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes one row per recorded node and path. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(paths: &PathSet, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let rows = paths.times.len();
    for (id, p) in paths.paths.iter().enumerate() {
        let mut flags = vec![0i32; rows];
        for m in &p.jumps {
            flags[paths.row_at_or_after(m.node)] += i32::from(m.sign);
        }
        let decision_row = paths.row_at_or_after(p.outcome.decision_node);
        for (i, flag) in flags.iter().enumerate() {
            let xi = if i == decision_row { p.outcome.production.to_string() } else { String::new() };
            w.write_record([
                paths.times[i].to_string(),
                id.to_string(),
                p.x[i].to_string(),
                p.y[i].to_string(),
                p.d[i].to_string(),
                p.p_hat[i].to_string(),
                p.q[i].to_string(),
                flag.to_string(),
                xi,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(paths: &PathSet, destination: &Path) -> Result<(), SimError> {
    let file = File::create(destination).map_err(|source| SimError::Io { path: destination.to_path_buf(), source })?;
    write_csv(paths, BufWriter::new(file)).map_err(|e| csv_err(destination, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvPath {
    pub path_id: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub q: Vec<f64>,
    pub jump_flag: Vec<i32>,
    /// Row index and value of the production decision.
    pub decision: Option<(usize, f64)>,
}

/// Contents of an exported path file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub times: Vec<f64>,
    pub paths: Vec<CsvPath>,
}

fn parse_table<R: Read>(input: R, path: &Path) -> Result<CsvTable, SimError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(csv_err(path, format!("unexpected header {header:?}")));
    }
    let mut times = Vec::new();
    let mut paths: Vec<CsvPath> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |i: usize| -> Result<f64, SimError> {
            rec[i].parse::<f64>().map_err(|e| csv_err(path, format!("row {}: {}: {e}", line + 2, CSV_HEADER[i])))
        };
        let id: usize = rec[1].parse().map_err(|e| csv_err(path, format!("row {}: path_id: {e}", line + 2)))?;
        if paths.last().is_none_or(|p| p.path_id != id) {
            paths.push(CsvPath {
                path_id: id,
                x: vec![],
                y: vec![],
                d: vec![],
                p_hat: vec![],
                q: vec![],
                jump_flag: vec![],
                decision: None,
            });
        }
        let t = field(0)?;
        if paths.len() == 1 {
            times.push(t);
        }
        let p = paths.last_mut().unwrap();
        let row = p.x.len();
        p.x.push(field(2)?);
        p.y.push(field(3)?);
        p.d.push(field(4)?);
        p.p_hat.push(field(5)?);
        p.q.push(field(6)?);
        p.jump_flag.push(rec[7].parse().map_err(|e| csv_err(path, format!("row {}: jump_flag: {e}", line + 2)))?);
        if !rec[8].is_empty() {
            p.decision = Some((row, field(8)?));
        }
    }
    Ok(CsvTable { times, paths })
}

pub fn read_csv(path: &Path) -> Result<CsvTable, SimError> {
    let file = File::open(path).map_err(|source| SimError::Io { path: path.to_path_buf(), source })?;
    parse_table(file, path)
}
