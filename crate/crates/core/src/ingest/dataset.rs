//! JSON Lines eigenvalue datasets.
//!
//! The first line is a header object, every following line one record:
//!
//! ```text
//! {"schema":1,"source":"synthetic","complete":true,"branch":"..."}
//! {"level":11,"weight":2,"char":"11.1","p":2,"lambda":-1.4142135623730951,"form_id":"11.2.a.a"}
//! {"level":5,"weight":3,"char":{"modulus":5,"images":[[2,1,4]]},"p":2,"ap":[1.5,-0.5]}
//! ```
//!
//! `char` is either a Conrey label `"N.c"` or a serialized character. A
//! record carries `lambda` (normalized), `ap` (`[re, im]`, raw), or both.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characters::{CharacterRecord, DirichletCharacter, BRANCH_CONVENTION};
use crate::error::{Error, LineError, Result};
use crate::numtheory::Prime;
use crate::spectra::{group_records, EigenMultiset, EigenRecord, NormalizeTol};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema: u32,
    pub source: String,
    /// Every space present is listed with all of its newforms.
    pub complete: bool,
    /// Square-root branch used for `chi(p)^(-1/2)`; must be
    /// [`BRANCH_CONVENTION`].
    pub branch: String,
    /// How characters were chosen from orbit labels, when relevant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<String>,
}

impl DatasetHeader {
    pub fn new(source: impl Into<String>, complete: bool) -> Self {
        DatasetHeader {
            schema: SCHEMA_VERSION,
            source: source.into(),
            complete,
            branch: BRANCH_CONVENTION.to_string(),
            embedding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub records: Vec<EigenRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum CharField {
    Label(String),
    Explicit(CharacterRecord),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RecordLine {
    pub level: u64,
    pub weight: u32,
    #[serde(rename = "char")]
    pub character: CharField,
    pub p: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_id: Option<String>,
}

/// `"N.c"` with both parts decimal.
pub(crate) fn is_conrey_label(s: &str) -> bool {
    s.split_once('.').is_some_and(|(a, b)| {
        !a.is_empty()
            && !b.is_empty()
            && a.bytes().all(|c| c.is_ascii_digit())
            && b.bytes().all(|c| c.is_ascii_digit())
    })
}

/// Resolves `char` fields, reusing characters already built in this file.
#[derive(Default)]
pub(crate) struct CharResolver {
    seen: HashMap<String, DirichletCharacter>,
}

impl CharResolver {
    pub fn resolve(&mut self, field: &CharField) -> Result<(DirichletCharacter, String)> {
        let (key, build): (String, Box<dyn Fn() -> Result<DirichletCharacter>>) = match field {
            CharField::Label(label) => {
                let label = label.clone();
                (
                    label.clone(),
                    Box::new(move || DirichletCharacter::from_label(&label)),
                )
            }
            CharField::Explicit(rec) => {
                let rec = rec.clone();
                (
                    serde_json::to_string(&rec).expect("record serializes"),
                    Box::new(move || DirichletCharacter::try_from(&rec)),
                )
            }
        };
        let chi = match self.seen.get(&key) {
            Some(chi) => chi.clone(),
            None => {
                let chi = build()?;
                self.seen.insert(key, chi.clone());
                chi
            }
        };
        let label = match field {
            CharField::Label(l) => l.clone(),
            CharField::Explicit(_) => chi.canonical_label(),
        };
        Ok((chi, label))
    }
}

impl RecordLine {
    pub(crate) fn into_record(self, chars: &mut CharResolver) -> Result<EigenRecord> {
        let (character, char_label) = chars.resolve(&self.character)?;
        let p = Prime::new(self.p)?;
        let rec = EigenRecord {
            level: self.level,
            weight: self.weight,
            character,
            char_label,
            p,
            lambda: self.lambda,
            ap: self.ap.map(|[re, im]| Complex64::new(re, im)),
            field_degree: self.field_degree,
            form_id: self.form_id,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub(crate) fn from_record(rec: &EigenRecord) -> Self {
        let character = if is_conrey_label(&rec.char_label) {
            CharField::Label(rec.char_label.clone())
        } else {
            CharField::Explicit(rec.character.to_record())
        };
        RecordLine {
            level: rec.level,
            weight: rec.weight,
            character,
            p: rec.p.get(),
            lambda: rec.lambda,
            ap: rec.ap.map(|z| [z.re, z.im]),
            field_degree: rec.field_degree,
            form_id: rec.form_id.clone(),
        }
    }
}

type DuplicateKey = (u64, u32, String, u64, String);

/// Parses and validates dataset text; all problems are reported together.
pub fn parse_str(text: &str, tol: NormalizeTol) -> Result<DatasetFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((header_idx, header_line)) = lines.next() else {
        return Err(Error::Dataset(vec![LineError {
            line: 1,
            reason: "missing header line".into(),
        }]));
    };
    let header_err = |reason: String| {
        Error::Dataset(vec![LineError {
            line: header_idx + 1,
            reason,
        }])
    };
    let header: DatasetHeader = serde_json::from_str(header_line)
        .map_err(|e| header_err(format!("malformed header: {e}")))?;
    if header.schema != SCHEMA_VERSION {
        return Err(header_err(format!(
            "schema mismatch: version {} is not supported (expected {SCHEMA_VERSION})",
            header.schema
        )));
    }
    if header.branch != BRANCH_CONVENTION {
        return Err(header_err(format!(
            "branch convention mismatch: dataset uses {:?}, expected {BRANCH_CONVENTION:?}",
            header.branch
        )));
    }

    let mut chars = CharResolver::default();
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut keys: HashSet<DuplicateKey> = HashSet::new();
    for (idx, line) in lines {
        let parsed = serde_json::from_str::<RecordLine>(line)
            .map_err(|e| Error::integrity(format!("malformed JSON record: {e}")))
            .and_then(|rl| rl.into_record(&mut chars))
            .and_then(|rec| rec.normalize(tol).map(|_| rec));
        match parsed {
            Ok(rec) => {
                if let Some(id) = &rec.form_id {
                    let key = (
                        rec.level,
                        rec.weight,
                        rec.char_label.clone(),
                        rec.p.get(),
                        id.clone(),
                    );
                    if !keys.insert(key) {
                        errors.push(LineError {
                            line: idx + 1,
                            reason: format!("duplicate record {} for form {id}", rec.key()),
                        });
                        continue;
                    }
                }
                records.push(rec);
            }
            Err(e) => errors.push(LineError {
                line: idx + 1,
                reason: e.to_string(),
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Dataset(errors));
    }
    Ok(DatasetFile { header, records })
}

/// Reads and validates a dataset file.
pub fn parse_dataset(path: &Path, tol: NormalizeTol) -> Result<DatasetFile> {
    let text = std::fs::read_to_string(path)?;
    parse_str(&text, tol)
}

impl DatasetFile {
    /// Canonical JSON Lines text; [`parse_str`] inverts it.
    pub fn serialize(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for rec in &self.records {
            out.push_str(
                &serde_json::to_string(&RecordLine::from_record(rec)).expect("record serializes"),
            );
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }

    /// One multiset per space, using the header's completeness flag.
    pub fn multisets(&self, tol: NormalizeTol) -> Result<Vec<EigenMultiset>> {
        group_records(&self.records, tol, self.header.complete)
    }
}
