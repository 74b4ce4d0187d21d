//! Bundled reference data.
//!
//! * `nile`: annual flow of the Nile at Aswan, 1871–1970 (10⁸ m³), public
//!   domain, 100 values.
//! * `wv_oracle`: implied wavelet variances computed by an independent
//!   ψ-weight / direct-convolution oracle (see `tests/wv_oracle.rs`).
//!
//! Each file is embedded at compile time and checked against its SHA-256
//! digest on load.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::simulate::TimeSeries;

const NILE_CSV: &str = include_str!("data/nile.csv");
const NILE_SHA256: &str = "30c6cb6b0ee6858642dc8667f5ec99c8223ef623acf6f50a966f728edccf1599";
const WV_ORACLE_CSV: &str = include_str!("data/wv_oracle.csv");
const WV_ORACLE_SHA256: &str = "d2fa250534450013636bc93f4f4ab3f3a2697959ab7f1afecc669a2d000097f3";

pub const FIXTURE_NAMES: [&str; 2] = ["nile", "wv_oracle"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub model: String,
    pub tau: f64,
    pub nu2: f64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FixtureData {
    Series(TimeSeries),
    Oracle(Vec<OracleRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub data: FixtureData,
    pub provenance: String,
    pub sha256: String,
}

impl Fixture {
    pub fn series(&self) -> Option<&TimeSeries> {
        match &self.data {
            FixtureData::Series(ts) => Some(ts),
            FixtureData::Oracle(_) => None,
        }
    }

    pub fn oracle_rows(&self) -> Option<&[OracleRow]> {
        match &self.data {
            FixtureData::Oracle(rows) => Some(rows),
            FixtureData::Series(_) => None,
        }
    }
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn verified(name: &str, text: &str, digest: &str) -> Result<String> {
    let got = sha256_hex(text.as_bytes());
    if got != digest {
        return Err(Error::CorruptFixture {
            name: name.into(),
            reason: format!("sha256 {got}, expected {digest}"),
        });
    }
    Ok(got)
}

fn corrupt(name: &str, reason: impl ToString) -> Error {
    Error::CorruptFixture {
        name: name.into(),
        reason: reason.to_string(),
    }
}

fn load_nile() -> Result<Fixture> {
    let sha256 = verified("nile", NILE_CSV, NILE_SHA256)?;
    let mut rdr = csv::Reader::from_reader(NILE_CSV.as_bytes());
    let mut values = Vec::with_capacity(100);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| corrupt("nile", e))?;
        let flow = rec.get(1).ok_or_else(|| corrupt("nile", "missing flow column"))?;
        values.push(flow.trim().parse::<f64>().map_err(|e| corrupt("nile", e))?);
    }
    Ok(Fixture {
        name: "nile".into(),
        data: FixtureData::Series(TimeSeries::new(values)?),
        provenance: "Nile annual flow at Aswan 1871-1970, public domain (Durbin & Koopman)".into(),
        sha256,
    })
}

fn load_oracle() -> Result<Fixture> {
    let sha256 = verified("wv_oracle", WV_ORACLE_CSV, WV_ORACLE_SHA256)?;
    let mut rdr = csv::Reader::from_reader(WV_ORACLE_CSV.as_bytes());
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<OracleRow>, _>>()
        .map_err(|e| corrupt("wv_oracle", e))?;
    Ok(Fixture {
        name: "wv_oracle".into(),
        data: FixtureData::Oracle(rows),
        provenance: "psi-weight ACVF with direct filter double sums".into(),
        sha256,
    })
}

pub fn load_fixture(name: &str) -> Result<Fixture> {
    match name {
        "nile" => load_nile(),
        "wv_oracle" => load_oracle(),
        other => Err(Error::UnknownFixture(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nile_record() {
        let f = load_fixture("nile").unwrap();
        let ts = f.series().unwrap();
        assert_eq!(ts.len(), 100);
        assert_eq!(ts.values()[0], 1120.0);
        assert_eq!(ts.values()[99], 740.0);
        let years = csv::Reader::from_reader(NILE_CSV.as_bytes())
            .records()
            .map(|r| r.unwrap()[0].parse::<u32>().unwrap())
            .collect::<Vec<_>>();
        assert_eq!((years[0], years[99]), (1871, 1970));
    }

    #[test]
    fn oracle_rows_present() {
        let f = load_fixture("wv_oracle").unwrap();
        assert!(f.oracle_rows().unwrap().len() > 50);
    }

    #[test]
    fn unknown_and_corrupt() {
        assert_eq!(load_fixture("prodn"), Err(Error::UnknownFixture("prodn".into())));
        assert!(matches!(
            verified("nile", "tampered", NILE_SHA256),
            Err(Error::CorruptFixture { .. })
        ));
    }
}
