//! Surface-form → canonical object mapping and caption object extraction.

use std::collections::{BTreeMap, BTreeSet};

use super::coco::{COCO_CATEGORIES, COCO_SYNONYMS};
use super::MetricError;

/// Case-insensitive phrase map onto a closed set of canonical object names.
///
/// Every canonical name is also a surface form of itself. Phrases may span
/// several words; extraction prefers the longest phrase at each position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymMap {
    canonical: BTreeSet<String>,
    surface: BTreeMap<String, String>,
    max_words: usize,
}

fn normalize_phrase(phrase: &str) -> String {
    tokenize(phrase).join(" ")
}

/// Lowercased alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl SynonymMap {
    /// Builds a map from a canonical inventory and extra surface forms.
    pub fn new<C, S>(canonical: C, synonyms: S) -> Result<Self, MetricError>
    where
        C: IntoIterator,
        C::Item: AsRef<str>,
        S: IntoIterator<Item = (String, String)>,
    {
        let mut map = Self {
            canonical: BTreeSet::new(),
            surface: BTreeMap::new(),
            max_words: 1,
        };
        for name in canonical {
            let name = normalize_phrase(name.as_ref());
            if name.is_empty() {
                continue;
            }
            map.canonical.insert(name.clone());
            map.insert_surface(name.clone(), name);
        }
        for (surface, canonical) in synonyms {
            let canonical = normalize_phrase(&canonical);
            if !map.canonical.contains(&canonical) {
                return Err(MetricError::UnknownObject(canonical));
            }
            map.insert_surface(normalize_phrase(&surface), canonical);
        }
        Ok(map)
    }

    fn insert_surface(&mut self, surface: String, canonical: String) {
        if surface.is_empty() {
            return;
        }
        self.max_words = self.max_words.max(surface.split(' ').count());
        self.surface.insert(surface, canonical);
    }

    /// The 80 MSCOCO categories with common synonyms.
    pub fn coco() -> Self {
        Self::new(
            COCO_CATEGORIES,
            COCO_SYNONYMS.iter().map(|(s, c)| (s.to_string(), c.to_string())),
        )
        .expect("built-in synonym table is consistent")
    }

    /// Identity map over a vocabulary.
    pub fn from_vocabulary<I>(vocabulary: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        Self::new(vocabulary, std::iter::empty()).expect("no synonyms to validate")
    }

    /// Parses the two-column `surface<TAB>canonical` format.
    ///
    /// `#` starts a comment. A line with a single column declares a
    /// canonical name. Canonical targets are added to the inventory.
    pub fn parse(text: &str) -> Result<Self, MetricError> {
        let mut canonical = Vec::new();
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            match cols.as_slice() {
                [name] => canonical.push(name.to_string()),
                [surface, target] if !surface.is_empty() && !target.is_empty() => {
                    canonical.push(target.to_string());
                    pairs.push((surface.to_string(), target.to_string()));
                }
                _ => {
                    return Err(MetricError::Parse {
                        line: idx + 1,
                        message: format!("expected 'surface<TAB>canonical', got {raw:?}"),
                    })
                }
            }
        }
        Self::new(canonical, pairs)
    }

    /// Renders the map in the format read by [`SynonymMap::parse`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("# surface\tcanonical\n");
        for name in &self.canonical {
            out.push_str(name);
            out.push('\n');
        }
        for (surface, canonical) in &self.surface {
            if surface != canonical {
                out.push_str(&format!("{surface}\t{canonical}\n"));
            }
        }
        out
    }

    pub fn canonical(&self) -> &BTreeSet<String> {
        &self.canonical
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.canonical.contains(canonical)
    }

    /// Looks up one normalized phrase, falling back to simple plural
    /// stripping on the last word.
    pub fn lookup(&self, phrase: &str) -> Option<&str> {
        let phrase = normalize_phrase(phrase);
        if let Some(c) = self.surface.get(&phrase) {
            return Some(c);
        }
        for (suffix, replacement) in [("ies", "y"), ("es", ""), ("s", "")] {
            if let Some(stem) = phrase.strip_suffix(suffix) {
                if stem.is_empty() {
                    continue;
                }
                if let Some(c) = self.surface.get(&format!("{stem}{replacement}")) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Canonical objects in order of first mention, with repeats.
    pub fn scan(&self, text: &str) -> Vec<String> {
        let words = tokenize(text);
        let mut found = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let longest = self.max_words.min(words.len() - i);
            let hit = (1..=longest)
                .rev()
                .find_map(|n| self.lookup(&words[i..i + n].join(" ")).map(|c| (n, c.to_string())));
            match hit {
                Some((n, c)) => {
                    found.push(c);
                    i += n;
                }
                None => i += 1,
            }
        }
        found
    }
}

/// Deduplicated set of canonical objects mentioned in `text`.
pub fn extract_objects(text: &str, map: &SynonymMap) -> BTreeSet<String> {
    map.scan(text).into_iter().collect()
}

/// Ground-truth objects per image id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationSet {
    images: BTreeMap<String, BTreeSet<String>>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an image, checking every object against `map`'s inventory.
    pub fn insert<I>(&mut self, id: impl Into<String>, objects: I, map: &SynonymMap) -> Result<(), MetricError>
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for o in objects {
            let name = normalize_phrase(o.as_ref());
            if !map.contains(&name) {
                return Err(MetricError::UnknownObject(name));
            }
            set.insert(name);
        }
        self.images.insert(id.into(), set);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.images.get(id)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.images.iter()
    }

    /// Parses a JSON object mapping image id → list of canonical names.
    pub fn from_json(text: &str, map: &SynonymMap) -> Result<Self, MetricError> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(text).map_err(|e| MetricError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut set = Self::new();
        for (id, objects) in raw {
            set.insert(id, objects, map)?;
        }
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.images).expect("string maps serialize")
    }
}
