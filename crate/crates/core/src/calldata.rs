// SPDX-License-Identifier: Apache-2.0

//! Transaction input parsing, 4-byte selector lookup and octet features.
//!
//! The octet features split the hex body of a transaction input into
//! consecutive 8-character chunks and look every chunk up in a
//! [`SignatureDirectory`], not just the leading selector. Argument words can
//! therefore collide with known selectors by chance; this is intentional and
//! matches how the features were defined for the model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hex characters in a selector (4 bytes).
pub const SELECTOR_HEX_LEN: usize = 8;

/// Validated, lowercase `0x`-prefixed transaction input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CalldataInput(String);

impl CalldataInput {
    pub fn parse(raw: &str) -> Result<Self> {
        let body = raw
            .strip_prefix("0x")
            .or_else(|| raw.strip_prefix("0X"))
            .ok_or_else(|| Error::InvalidCalldata(format!("missing 0x prefix: {}", preview(raw))))?;
        if let Some(bad) = body.chars().find(|c| !c.is_ascii_hexdigit()) {
            return Err(Error::InvalidCalldata(format!("non-hex character {bad:?} in {}", preview(raw))));
        }
        Ok(CalldataInput(format!("0x{}", body.to_ascii_lowercase())))
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        CalldataInput(format!("0x{}", hex::encode(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Hex digits after the prefix.
    pub fn body(&self) -> &str {
        &self.0[2..]
    }

    /// Decoded bytes; a trailing odd nibble is dropped.
    pub fn to_bytes(&self) -> Vec<u8> {
        let body = self.body();
        hex::decode(&body[..body.len() & !1]).expect("validated hex")
    }
}

impl TryFrom<String> for CalldataInput {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        CalldataInput::parse(&s)
    }
}

impl From<CalldataInput> for String {
    fn from(c: CalldataInput) -> String {
        c.0
    }
}

fn preview(s: &str) -> String {
    if s.len() > 24 {
        format!("{}...", &s[..24])
    } else {
        s.to_string()
    }
}

/// The selector (`0x` + first 8 hex digits), if the input is long enough.
pub fn extract_selector(input: &CalldataInput) -> Option<String> {
    let body = input.body();
    (body.len() >= SELECTOR_HEX_LEN).then(|| format!("0x{}", &body[..SELECTOR_HEX_LEN]))
}

/// Count of hex characters after `0x`.
pub fn input_length(input: &CalldataInput) -> usize {
    input.body().len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureClass {
    Benign,
    Malicious,
    Unknown,
}

impl SignatureClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "benign" => Some(SignatureClass::Benign),
            "malicious" => Some(SignatureClass::Malicious),
            "unknown" => Some(SignatureClass::Unknown),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignatureClass::Benign => "benign",
            SignatureClass::Malicious => "malicious",
            SignatureClass::Unknown => "unknown",
        }
    }
}

/// Map from selectors to function signatures, plus the per-class signature sets.
///
/// A signature may sit in both class sets; lookups treat it as malicious.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SignatureDirectory {
    pub hex_dic: BTreeMap<String, String>,
    pub mal_dic: BTreeSet<String>,
    pub benign_dic: BTreeSet<String>,
}

fn is_selector_key(key: &str) -> bool {
    key.len() == 2 + SELECTOR_HEX_LEN
        && key.starts_with("0x")
        && key[2..].bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl SignatureDirectory {
    /// Registers one `(selector, signature, class)` row.
    ///
    /// The first signature registered for a selector wins; a later row that
    /// maps the same selector to a different signature is ignored.
    pub fn insert(&mut self, selector: &str, signature: &str, class: SignatureClass) -> Result<(), String> {
        let key = selector.to_ascii_lowercase();
        if !is_selector_key(&key) {
            return Err(format!("selector {selector:?} is not 0x followed by 8 hex digits"));
        }
        let kept = self.hex_dic.entry(key).or_insert_with(|| signature.to_string());
        if kept != signature {
            return Ok(());
        }
        match class {
            SignatureClass::Benign => {
                self.benign_dic.insert(signature.to_string());
            }
            SignatureClass::Malicious => {
                self.mal_dic.insert(signature.to_string());
            }
            SignatureClass::Unknown => {}
        }
        Ok(())
    }

    pub fn lookup(&self, selector: &str) -> Option<&str> {
        self.hex_dic.get(selector).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.hex_dic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hex_dic.is_empty()
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut dir = SignatureDirectory::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if idx == 0 && line == "selector,function_signature,class" {
                continue;
            }
            let parse_err = |reason: String| Error::DirectoryParse { line: line_no, reason };
            // Signatures contain commas, so split off the first and last fields only.
            let (selector, rest) =
                line.split_once(',').ok_or_else(|| parse_err("expected 3 columns".into()))?;
            let (signature, class) =
                rest.rsplit_once(',').ok_or_else(|| parse_err("expected 3 columns".into()))?;
            let signature = signature.trim();
            let signature = signature
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(signature);
            if signature.is_empty() {
                return Err(parse_err("empty function signature".into()));
            }
            let class = SignatureClass::parse(class.trim())
                .ok_or_else(|| parse_err(format!("unknown class {:?}", class.trim())))?;
            dir.insert(selector.trim(), signature, class).map_err(parse_err)?;
        }
        Ok(dir)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("selector,function_signature,class\n");
        let mut emitted: BTreeSet<&str> = BTreeSet::new();
        for (sel, sig) in &self.hex_dic {
            let mut classes = Vec::new();
            if emitted.insert(sig) {
                if self.mal_dic.contains(sig) {
                    classes.push(SignatureClass::Malicious);
                }
                if self.benign_dic.contains(sig) {
                    classes.push(SignatureClass::Benign);
                }
            }
            if classes.is_empty() {
                classes.push(SignatureClass::Unknown);
            }
            for class in classes {
                let _ = writeln!(out, "{sel},{sig},{}", class.as_str());
            }
        }
        out
    }
}

pub fn load_directory(path: &Path) -> Result<SignatureDirectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SignatureDirectory::parse_csv(&text)
}

pub fn save_directory(dir: &SignatureDirectory, path: &Path) -> Result<()> {
    std::fs::write(path, dir.to_csv()).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OctetFeatures {
    pub n_octets: usize,
    pub valid_octet: usize,
    pub benign_octet: usize,
    pub mal_octet: usize,
}

impl std::ops::Add for OctetFeatures {
    type Output = OctetFeatures;
    fn add(self, o: OctetFeatures) -> OctetFeatures {
        OctetFeatures {
            n_octets: self.n_octets + o.n_octets,
            valid_octet: self.valid_octet + o.valid_octet,
            benign_octet: self.benign_octet + o.benign_octet,
            mal_octet: self.mal_octet + o.mal_octet,
        }
    }
}

/// Counts directory hits over every 8-hex-char chunk of the input body.
///
/// The final chunk may be short; it is counted in `n_octets` but can never
/// match. A matched signature counts as malicious before benign.
pub fn octet_features(input: &CalldataInput, dir: &SignatureDirectory) -> OctetFeatures {
    let body = input.body().as_bytes();
    let mut feats = OctetFeatures::default();
    for chunk in body.chunks(SELECTOR_HEX_LEN) {
        feats.n_octets += 1;
        if chunk.len() < SELECTOR_HEX_LEN {
            continue;
        }
        let key = format!("0x{}", std::str::from_utf8(chunk).expect("ascii hex"));
        let Some(sig) = dir.hex_dic.get(&key) else { continue };
        feats.valid_octet += 1;
        if dir.mal_dic.contains(sig) {
            feats.mal_octet += 1;
        } else if dir.benign_dic.contains(sig) {
            feats.benign_octet += 1;
        }
    }
    feats
}

/// Per-class histograms gathered by [`signature_stats`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassStats {
    pub rows: usize,
    /// Selector → row count; rows too short for a selector are not counted.
    pub selector_hist: BTreeMap<String, usize>,
    pub length_hist: BTreeMap<usize, usize>,
    pub valid_octet_hist: BTreeMap<usize, usize>,
    /// valid_octet / n_octets bucketed to tenths (0..=10); empty inputs land in bucket 0.
    pub valid_proportion_hist: BTreeMap<u32, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SignatureStats {
    pub benign: ClassStats,
    pub malicious: ClassStats,
    /// Selectors observed under the malicious label and never under the benign one.
    pub malicious_only: BTreeSet<String>,
}

/// Summarizes labeled calldata by class.
pub fn signature_stats<'a, I>(rows: I, dir: &SignatureDirectory) -> Result<SignatureStats>
where
    I: IntoIterator<Item = (&'a CalldataInput, bool)>,
{
    let mut stats = SignatureStats::default();
    let mut seen = false;
    for (input, malicious) in rows {
        seen = true;
        let class = if malicious { &mut stats.malicious } else { &mut stats.benign };
        class.rows += 1;
        if let Some(sel) = extract_selector(input) {
            *class.selector_hist.entry(sel).or_default() += 1;
        }
        *class.length_hist.entry(input_length(input)).or_default() += 1;
        let oct = octet_features(input, dir);
        *class.valid_octet_hist.entry(oct.valid_octet).or_default() += 1;
        let bucket = if oct.n_octets == 0 {
            0
        } else {
            ((oct.valid_octet as f64 / oct.n_octets as f64) * 10.0).floor() as u32
        };
        *class.valid_proportion_hist.entry(bucket).or_default() += 1;
    }
    if !seen {
        return Err(Error::EmptyDataset);
    }
    stats.malicious_only = stats
        .malicious
        .selector_hist
        .keys()
        .filter(|s| !stats.benign.selector_hist.contains_key(*s))
        .cloned()
        .collect();
    Ok(stats)
}
