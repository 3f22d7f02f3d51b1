//! Plain-text code definitions.
//!
//! A frozen-set file starts with a header line `N=<N> K=<K> C=<C>` followed by
//! one frozen index per line in ascending order. Lines starting with `#` are
//! ignored. A partition spec is a small TOML document:
//!
//! ```toml
//! n = 1024
//! mu = [410, 590, 708, 1023]
//! crc = [8, 8, 8, 8]
//! # optional, one per partition
//! generators = [7, 7, 7, 7]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code::{CrcSpec, PartitionedCode, PolarCode};
use crate::error::{Error, Result};

/// Contents of a frozen-set file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenSetFile {
    pub code: PolarCode,
    pub k: usize,
    pub c: usize,
}

pub fn format_frozen_set(code: &PolarCode, k: usize, c: usize) -> String {
    let mut out = format!("N={} K={k} C={c}\n", code.len());
    for i in code.frozen_set() {
        let _ = writeln!(out, "{i}");
    }
    out
}

pub fn parse_frozen_set(text: &str) -> Result<FrozenSetFile> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty frozen-set file".into()))?;
    let (mut n_len, mut k, mut c) = (None, None, None);
    for field in header.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header field `{field}`")))?;
        let value: usize = value
            .parse()
            .map_err(|_| Error::Parse(format!("header value `{value}` is not an integer")))?;
        match key {
            "N" => n_len = Some(value),
            "K" => k = Some(value),
            "C" => c = Some(value),
            other => return Err(Error::Parse(format!("unknown header key `{other}`"))),
        }
    }
    let (n_len, k, c) = match (n_len, k, c) {
        (Some(n), Some(k), Some(c)) => (n, k, c),
        _ => return Err(Error::Parse("header must define N, K and C".into())),
    };
    let mut frozen = Vec::new();
    for line in lines {
        let i: usize = line
            .parse()
            .map_err(|_| Error::Parse(format!("`{line}` is not an index")))?;
        if frozen.last().is_some_and(|&last| last >= i) {
            return Err(Error::Parse("frozen indices must be strictly ascending".into()));
        }
        if i >= n_len {
            return Err(Error::Parse(format!("frozen index {i} outside [0, {n_len})")));
        }
        frozen.push(i);
    }
    if frozen.len() + k + c != n_len {
        return Err(Error::InvalidCode(format!(
            "{} frozen indices do not leave K + C = {} information positions",
            frozen.len(),
            k + c
        )));
    }
    let mut is_frozen = vec![false; n_len];
    for &i in &frozen {
        is_frozen[i] = true;
    }
    let info = (0..n_len).filter(|&i| !is_frozen[i]).collect();
    Ok(FrozenSetFile { code: PolarCode::new(n_len, info)?, k, c })
}

pub fn read_frozen_set(path: &Path) -> Result<FrozenSetFile> {
    parse_frozen_set(&std::fs::read_to_string(path)?)
}

pub fn write_frozen_set(path: &Path, code: &PolarCode, k: usize, c: usize) -> Result<()> {
    std::fs::write(path, format_frozen_set(code, k, c))?;
    Ok(())
}

/// Serialized form of a partition layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub n: usize,
    pub mu: Vec<usize>,
    pub crc: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<u64>>,
}

impl PartitionSpec {
    pub fn from_code(pcode: &PartitionedCode) -> Self {
        Self {
            n: pcode.code().len(),
            mu: pcode.mu().to_vec(),
            crc: pcode.crc_widths(),
            generators: Some(pcode.crcs().iter().map(|c| c.generator()).collect()),
        }
    }

    pub fn crc_specs(&self) -> Result<Vec<CrcSpec>> {
        match &self.generators {
            None => self.crc.iter().map(|&w| CrcSpec::with_width(w)).collect(),
            Some(g) if g.len() == self.crc.len() => {
                self.crc.iter().zip(g).map(|(&w, &g)| CrcSpec::new(w, g)).collect()
            }
            Some(g) => Err(Error::Parse(format!(
                "{} generators given for {} partitions",
                g.len(),
                self.crc.len()
            ))),
        }
    }

    /// Applies this layout to `code`.
    pub fn apply(&self, code: PolarCode) -> Result<PartitionedCode> {
        if code.len() != self.n {
            return Err(Error::InvalidCode(format!(
                "partition spec is for N={}, code has N={}",
                self.n,
                code.len()
            )));
        }
        PartitionedCode::new(code, self.mu.clone(), self.crc_specs()?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("partition spec serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

pub fn read_partition_spec(path: &Path) -> Result<PartitionSpec> {
    PartitionSpec::from_toml(&std::fs::read_to_string(path)?)
}

pub fn write_partition_spec(path: &Path, spec: &PartitionSpec) -> Result<()> {
    std::fs::write(path, spec.to_toml())?;
    Ok(())
}
