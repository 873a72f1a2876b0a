//! Keyword → primitive dictionary with JSON file persistence. Basis centers
//! and widths are stored explicitly so saved files stay valid if the
//! placement formula ever changes.

use super::VlmError;
use crate::dmp::{BasisSet, DmpGains, Primitive};
use crate::Vec3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Dictionary-level metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionaryMeta {
    pub task: String,
    pub version: String,
}

impl Default for DictionaryMeta {
    fn default() -> Self {
        Self { task: "object cutting".to_owned(), version: "1".to_owned() }
    }
}

/// Keyword-indexed collection of learned primitives. Keywords are stored
/// lowercase and trimmed; iteration order is sorted, which keeps saved
/// files byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveDictionary {
    meta: DictionaryMeta,
    entries: BTreeMap<String, Primitive>,
}

/// Canonical keyword form: trimmed and lowercased.
pub fn normalize_keyword(keyword: &str) -> String {
    keyword.trim().to_lowercase()
}

impl PrimitiveDictionary {
    pub fn new(meta: DictionaryMeta) -> Self {
        Self { meta, entries: BTreeMap::new() }
    }

    pub fn meta(&self) -> &DictionaryMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, keyword: &str) -> bool {
        self.entries.contains_key(&normalize_keyword(keyword))
    }

    /// Adds a primitive under its (normalized) keyword; refuses duplicates.
    pub fn insert(&mut self, primitive: Primitive) -> Result<(), VlmError> {
        let key = normalize_keyword(&primitive.keyword);
        if key.is_empty() {
            return Err(VlmError::BadDictionary("empty keyword".to_owned()));
        }
        if self.entries.contains_key(&key) {
            return Err(VlmError::DuplicateKeyword(key));
        }
        self.entries.insert(key, primitive);
        Ok(())
    }

    /// Adds or replaces a primitive under its keyword.
    pub fn insert_or_replace(&mut self, primitive: Primitive) -> Result<(), VlmError> {
        let key = normalize_keyword(&primitive.keyword);
        if key.is_empty() {
            return Err(VlmError::BadDictionary("empty keyword".to_owned()));
        }
        self.entries.insert(key, primitive);
        Ok(())
    }

    pub fn get(&self, keyword: &str) -> Option<&Primitive> {
        self.entries.get(&normalize_keyword(keyword))
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn primitives(&self) -> impl Iterator<Item = &Primitive> {
        self.entries.values()
    }

    pub fn load(path: &Path) -> Result<Self, VlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VlmError::BadDictionary(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), VlmError> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| VlmError::BadDictionary(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, VlmError> {
        let file: DictFile =
            serde_json::from_str(text).map_err(|e| VlmError::BadDictionary(e.to_string()))?;
        let mut dict = Self::new(DictionaryMeta { task: file.task, version: file.version });
        for entry in file.entries {
            dict.insert(entry.into_primitive()?)?;
        }
        Ok(dict)
    }

    pub fn to_json(&self) -> Result<String, VlmError> {
        let file = DictFile {
            version: self.meta.version.clone(),
            task: self.meta.task.clone(),
            entries: self.entries.values().map(EntryDto::from_primitive).collect(),
        };
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|e| VlmError::BadDictionary(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DictFile {
    version: String,
    task: String,
    entries: Vec<EntryDto>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryDto {
    keyword: String,
    #[serde(default)]
    gains: GainsDto,
    basis: BasisDto,
    weights: Vec<[f64; 3]>,
    demo_start: [f64; 3],
    demo_goal: [f64; 3],
}

/// Gains in a dictionary file; omitted values fall back to the defaults.
#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct GainsDto {
    alpha_z: f64,
    beta_z: f64,
    alpha_s: f64,
    tau: f64,
}

impl Default for GainsDto {
    fn default() -> Self {
        let g = DmpGains::default();
        Self { alpha_z: g.alpha_z, beta_z: g.beta_z, alpha_s: g.alpha_s, tau: g.tau }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BasisDto {
    count: usize,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl EntryDto {
    fn from_primitive(p: &Primitive) -> Self {
        Self {
            keyword: p.keyword.clone(),
            gains: GainsDto {
                alpha_z: p.gains.alpha_z,
                beta_z: p.gains.beta_z,
                alpha_s: p.gains.alpha_s,
                tau: p.gains.tau,
            },
            basis: BasisDto {
                count: p.basis.count(),
                centers: p.basis.centers().to_vec(),
                widths: p.basis.widths().to_vec(),
            },
            weights: p.weights.clone(),
            demo_start: [p.demo_start.x, p.demo_start.y, p.demo_start.z],
            demo_goal: [p.demo_goal.x, p.demo_goal.y, p.demo_goal.z],
        }
    }

    fn into_primitive(self) -> Result<Primitive, VlmError> {
        let bad = |e: crate::dmp::DmpError| VlmError::BadDictionary(e.to_string());
        if self.basis.count != self.basis.centers.len() {
            return Err(VlmError::BadDictionary(format!(
                "basis count {} does not match centers length {}",
                self.basis.count,
                self.basis.centers.len()
            )));
        }
        let gains = DmpGains::new(
            self.gains.alpha_z,
            self.gains.beta_z,
            self.gains.alpha_s,
            self.gains.tau,
        )
        .map_err(bad)?;
        let basis = BasisSet::from_parts(self.basis.centers, self.basis.widths).map_err(bad)?;
        Primitive::new(
            self.keyword,
            gains,
            basis,
            self.weights,
            Vec3::from(self.demo_start),
            Vec3::from(self.demo_goal),
        )
        .map_err(bad)
    }
}
