//! Field files, configs, manifests and CSV formatting.
//!
//! A field is stored as raw little-endian `f64` physical values, row-major with
//! x fastest, beside a JSON sidecar `{nx, ny, Lx, Ly, name, time}`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::{make_grid, PerturbationState, SpectralField};
use crate::solver::SolverConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
    pub name: String,
    pub time: f64,
}

pub fn parse_sidecar(text: &str) -> Result<Sidecar> {
    let s: Sidecar = serde_json::from_str(text)?;
    if s.nx == 0 || s.ny == 0 || s.nx.checked_mul(s.ny).is_none_or(|n| n > 1 << 28) {
        return Err(Error::MalformedField(format!("dimensions {}×{}", s.nx, s.ny)));
    }
    if !(s.lx > 0.0 && s.ly > 0.0 && s.lx.is_finite() && s.ly.is_finite() && s.time.is_finite()) {
        return Err(Error::MalformedField("box lengths and time must be finite, lengths positive".into()));
    }
    Ok(s)
}

/// Decode raw field bytes against a sidecar; every value must be finite.
pub fn decode_field(bytes: &[u8], side: &Sidecar) -> Result<Vec<f64>> {
    let n = side.nx * side.ny;
    if bytes.len() != n * 8 {
        return Err(Error::MalformedField(format!(
            "expected {} bytes for {}×{}, found {}",
            n * 8,
            side.nx,
            side.ny,
            bytes.len()
        )));
    }
    let v: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::MalformedField(format!("non-finite value at index {i}")));
    }
    Ok(v)
}

pub fn encode_field(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Write `<stem>.bin` and `<stem>.json`; returns both file names.
pub fn write_field(dir: &Path, stem: &str, name: &str, field: &SpectralField, time: f64) -> Result<[String; 2]> {
    let g = field.grid();
    let side = Sidecar {
        nx: g.nx,
        ny: g.ny,
        lx: g.lx,
        ly: g.ly,
        name: name.to_string(),
        time,
    };
    let bin = format!("{stem}.bin");
    let json = format!("{stem}.json");
    fs::write(dir.join(&bin), encode_field(&field.to_physical()))?;
    fs::write(dir.join(&json), serde_json::to_string_pretty(&side)?)?;
    Ok([bin, json])
}

/// Read a field from `<stem>.bin` and `<stem>.json`.
pub fn read_field(bin: &Path) -> Result<(SpectralField, Sidecar)> {
    let side = parse_sidecar(&fs::read_to_string(bin.with_extension("json"))?)?;
    let v = decode_field(&fs::read(bin)?, &side)?;
    let g = make_grid(side.nx, side.ny, side.lx, side.ly)?;
    Ok((SpectralField::from_physical(g, &v), side))
}

pub const STATE_NAMES: [&str; 4] = ["n", "u", "v", "psi"];

fn time_tag(t: f64) -> String {
    format!("t{t:012.6}")
}

/// Checkpoint all four fields at time `t`.
pub fn write_state(dir: &Path, s: &PerturbationState, t: f64) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (name, f) in STATE_NAMES.iter().zip(s.fields()) {
        out.extend(write_field(dir, &format!("{name}_{}", time_tag(t)), name, f, t)?);
    }
    Ok(out)
}

pub fn read_state(dir: &Path, t: f64) -> Result<PerturbationState> {
    let tag = time_tag(t);
    let mut fs = Vec::new();
    for name in STATE_NAMES {
        fs.push(read_field(&dir.join(format!("{name}_{tag}.bin")))?.0);
    }
    let [n, u, v, psi]: [SpectralField; 4] = fs.try_into().expect("four fields");
    Ok(PerturbationState::from_fields([n, u, v, psi]))
}

/// Parse a solver config, reporting unknown or mistyped fields by serde and
/// every range violation by name.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let c: SolverConfig =
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    c.validate()?;
    Ok(c)
}

/// One CSV row with round-trip precision (17 significant digits).
pub fn csv_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical (sorted-key, compact) JSON form of a value.
pub fn canonical_digest<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let text = serde_json::to_string(&v)?;
    Ok(hex(&Sha256::digest(text.as_bytes())))
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex(&Sha256::digest(fs::read(path)?)))
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_digest: String,
    pub seed: u64,
    pub version: String,
    pub threads: usize,
    pub start_unix: f64,
    pub end_unix: f64,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn begin<T: Serialize>(command: Vec<String>, config: &T, seed: u64) -> Result<Self> {
        Ok(RunManifest {
            command,
            config_digest: canonical_digest(config)?,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: rayon::current_num_threads(),
            start_unix: unix_now(),
            end_unix: 0.0,
            outputs: Vec::new(),
            config: serde_json::to_value(config)?,
        })
    }

    /// Stamp the end time and write `manifest.json` into `dir`.
    pub fn finish(&mut self, dir: &Path) -> Result<PathBuf> {
        let p = dir.join("manifest.json");
        self.finish_to(&p)?;
        Ok(p)
    }

    pub fn finish_to(&mut self, path: &Path) -> Result<()> {
        self.close();
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Stamp the end time and sort the output list.
    pub fn close(&mut self) {
        self.end_unix = unix_now();
        self.outputs.sort();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_roundtrip() {
        let g = make_grid(8, 6, 2.0, 3.0).unwrap();
        let f = SpectralField::from_fn(g, |x, y| (x * 3.0).sin() + y * 0.1);
        let d = tempfile::tempdir().unwrap();
        let names = write_field(d.path(), "f", "n", &f, 1.5).unwrap();
        assert_eq!(names, ["f.bin".to_string(), "f.json".to_string()]);
        let (g2, side) = read_field(&d.path().join("f.bin")).unwrap();
        assert_eq!(side.time, 1.5);
        let a = f.to_physical();
        let b = g2.to_physical();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn decode_rejects_bad_input() {
        let side = Sidecar { nx: 2, ny: 2, lx: 1.0, ly: 1.0, name: "n".into(), time: 0.0 };
        assert!(decode_field(&[0u8; 31], &side).is_err());
        let mut b = encode_field(&[1.0, 2.0, 3.0, f64::NAN]);
        assert!(decode_field(&b, &side).is_err());
        b = encode_field(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(decode_field(&b, &side).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert!(parse_sidecar(r#"{"nx":0,"ny":2,"Lx":1,"Ly":1,"name":"n","time":0}"#).is_err());
        assert!(parse_sidecar(r#"{"nx":2,"ny":2,"Lx":-1,"Ly":1,"name":"n","time":0}"#).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let v = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23];
        let row = csv_row(&v);
        let back: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, v);
    }

    #[test]
    fn digest_is_key_order_independent() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b":1,"a":[1,2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a":[1,2],"b":1}"#).unwrap();
        assert_eq!(canonical_digest(&a).unwrap(), canonical_digest(&b).unwrap());
    }

    #[test]
    fn config_parse_errors() {
        let good = serde_json::to_string(&SolverConfig::default()).unwrap();
        assert!(parse_config(&good).is_ok());
        let bad = good.replace("\"lambda\":0.05", "\"lambda\":1.5");
        let e = parse_config(&bad).unwrap_err().to_string();
        assert!(e.contains("lambda"), "{e}");
        assert!(parse_config("{").is_err());
    }
}
