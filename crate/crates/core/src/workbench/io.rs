use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::MeasurementRow;
use crate::acoustics::MaterialParameters;
use crate::error::{Error, Result};
use crate::model::DefectParameters;

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_defect(path: impl AsRef<Path>) -> Result<DefectParameters> {
    let d: DefectParameters = read_json(path)?;
    d.validate()?;
    Ok(d)
}

pub fn load_material(path: impl AsRef<Path>) -> Result<MaterialParameters> {
    let m: MaterialParameters = read_json(path)?;
    m.validate()?;
    Ok(m)
}

/// Every `*.json` in `dir`, keyed by lower-cased file stem.
pub fn load_defects_dir(dir: impl AsRef<Path>) -> Result<BTreeMap<String, DefectParameters>> {
    let dir = dir.as_ref();
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_lowercase(), load_defect(&path)?);
        }
    }
    Ok(out)
}

pub fn read_measurements(path: impl AsRef<Path>) -> Result<Vec<MeasurementRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let row: MeasurementRow = rec?;
        row.validate()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defect_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("SiV.json");
        write_json(&p, &DefectParameters::siv()).unwrap();
        assert_eq!(load_defect(&p).unwrap(), DefectParameters::siv());
        let all = load_defects_dir(dir.path()).unwrap();
        assert!(all.contains_key("siv"));
    }

    #[test]
    fn g_defaults_when_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        std::fs::write(&p, r#"{"lambda_soc_ghz": 50, "q": 0.1, "d_phz": 1.3, "f_phz": -1.7}"#).unwrap();
        let d = load_defect(&p).unwrap();
        assert_eq!(d.g, crate::model::DEFAULT_G);
        assert_eq!(d.chi_s2, None);
    }

    #[test]
    fn missing_file_reports_path() {
        match load_material("/nonexistent/diamond.json") {
            Err(Error::Io { path, .. }) => assert!(path.contains("diamond.json")),
            other => panic!("{other:?}"),
        }
    }
}
