//! Dataset files.
//!
//! * stays: `stay_id,event_time_hours,censored` with `censored` in `{0, 1}`;
//!   row order is admission order.
//! * features (long format): `stay_id,t_hours,f0,...,f{d-1}`, one row per
//!   whole hour `t = 0, 1, ...` recorded for the stay, in any order.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so a written dataset reads back identical.

use std::collections::HashMap;
use std::path::Path;

use wrse_core::{Dataset, Matrix, StayRecord};

use crate::error::{CliError, CliResult};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.kind() {
        csv::ErrorKind::Io(_) => CliError::Runtime(format!("{}: {e}", path.display())),
        _ => CliError::Data(format!("{}: {e}", path.display())),
    }
}

fn data_err(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

pub fn write_dataset(dataset: &Dataset, stays_path: &Path, features_path: &Path) -> CliResult<()> {
    for dir in [stays_path.parent(), features_path.parent()].into_iter().flatten() {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    let mut w = csv::Writer::from_path(stays_path).map_err(csv_err(stays_path))?;
    w.write_record(["stay_id", "event_time_hours", "censored"])
        .map_err(csv_err(stays_path))?;
    for s in dataset.stays() {
        let event = s.event_time_hours().to_string();
        w.write_record([s.stay_id.as_str(), &event, if s.censored() { "1" } else { "0" }])
            .map_err(csv_err(stays_path))?;
    }
    w.flush().map_err(CliError::io(stays_path))?;

    let mut w = csv::Writer::from_path(features_path).map_err(csv_err(features_path))?;
    let mut header = vec!["stay_id".to_string(), "t_hours".to_string()];
    header.extend((0..dataset.n_features()).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(csv_err(features_path))?;
    let mut record = Vec::with_capacity(header.len());
    for s in dataset.stays() {
        for (t, row) in s.features().iter_rows().enumerate() {
            record.clear();
            record.push(s.stay_id.clone());
            record.push(t.to_string());
            record.extend(row.iter().map(f64::to_string));
            w.write_record(&record).map_err(csv_err(features_path))?;
        }
    }
    w.flush().map_err(CliError::io(features_path))?;
    Ok(())
}

fn parse_f64(path: &Path, line: u64, column: &str, s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| data_err(path, line, format!("{column}: `{s}` is not a number")))
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[String]) -> CliResult<()> {
    if found.iter().map(str::trim).eq(expected.iter().map(String::as_str)) {
        Ok(())
    } else {
        Err(data_err(
            path,
            1,
            format!("header must be `{}`, found `{}`", expected.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ))
    }
}

pub fn read_dataset(stays_path: &Path, features_path: &Path) -> CliResult<Dataset> {
    let mut r = csv::Reader::from_path(stays_path).map_err(csv_err(stays_path))?;
    let header = r.headers().map_err(csv_err(stays_path))?.clone();
    check_header(
        stays_path,
        &header,
        &["stay_id".into(), "event_time_hours".into(), "censored".into()],
    )?;
    let mut stays: Vec<(String, f64, bool)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(stays_path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].trim().to_string();
        let event = parse_f64(stays_path, line, "event_time_hours", &rec[1])?;
        let censored = match rec[2].trim() {
            "0" => false,
            "1" => true,
            other => return Err(data_err(stays_path, line, format!("censored must be 0 or 1, got `{other}`"))),
        };
        if index.insert(id.clone(), stays.len()).is_some() {
            return Err(data_err(stays_path, line, format!("duplicate stay_id {id}")));
        }
        stays.push((id, event, censored));
    }

    let mut r = csv::Reader::from_path(features_path).map_err(csv_err(features_path))?;
    let header = r.headers().map_err(csv_err(features_path))?.clone();
    if header.len() < 2 {
        return Err(data_err(features_path, 1, "header must start with `stay_id,t_hours`"));
    }
    let d = header.len() - 2;
    let mut expected = vec!["stay_id".to_string(), "t_hours".to_string()];
    expected.extend((0..d).map(|j| format!("f{j}")));
    check_header(features_path, &header, &expected)?;

    let mut rows: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); stays.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_err(features_path))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].trim();
        let i = *index
            .get(id)
            .ok_or_else(|| data_err(features_path, line, format!("unknown stay_id {id}")))?;
        let t = parse_f64(features_path, line, "t_hours", &rec[1])?;
        if !(t >= 0.0 && t.fract() == 0.0 && t < u32::MAX as f64) {
            return Err(data_err(features_path, line, format!("t_hours must be a whole hour, got {t}")));
        }
        let x = (0..d)
            .map(|j| parse_f64(features_path, line, &expected[j + 2], &rec[j + 2]))
            .collect::<CliResult<Vec<_>>>()?;
        rows[i].push((t as usize, x));
    }

    let mut records = Vec::with_capacity(stays.len());
    for ((id, event, censored), mut rs) in stays.into_iter().zip(rows) {
        rs.sort_by_key(|(t, _)| *t);
        if let Some(pos) = rs.iter().enumerate().position(|(k, (t, _))| *t != k) {
            return Err(CliError::Data(format!(
                "{}: stay {id} must have feature rows for hours 0..{} without gaps or repeats (row for hour {} is off)",
                features_path.display(),
                rs.len(),
                rs[pos].0
            )));
        }
        let mut m = Matrix::with_cols(d);
        for (_, x) in &rs {
            m.push_row(x).map_err(|e| CliError::Data(e.to_string()))?;
        }
        let stay = StayRecord::new(id, m, event, censored)
            .map_err(|e| CliError::Data(format!("{}: {e}", stays_path.display())))?;
        records.push(stay);
    }
    Dataset::new(records, None).map_err(|e| CliError::Data(e.to_string()))
}
