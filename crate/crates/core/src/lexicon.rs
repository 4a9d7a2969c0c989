//! Sense lexicon: words and underscore-joined multiword entries, each with an
//! ordered inventory of glossed senses.
//!
//! The on-disk format is JSON lines, one entry per line:
//!
//! ```text
//! {"key":"kick_the_bucket","pos":"v","senses":[{"id":"ktb.v.01","gloss":"pass from physical life"}]}
//! ```
//!
//! Sense order inside `senses` defines rank; rank 0 is the "first sense".

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: malformed lexicon entry: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate entry {key}/{pos}")]
    DuplicateEntry { key: String, pos: Pos },
    #[error("entry {key} has no senses")]
    EmptySenses { key: String },
    #[error("entry {key}: sense {sense_id} has an empty gloss")]
    EmptyGloss { key: String, sense_id: String },
    #[error("entry {key}: sense id {sense_id} is not unique")]
    DuplicateSenseId { key: String, sense_id: String },
    #[error("invalid entry key {key:?}")]
    InvalidKey { key: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Coarse part of speech: WordNet's four classes plus a catch-all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pos {
    #[serde(rename = "n")]
    Noun,
    #[serde(rename = "v")]
    Verb,
    #[serde(rename = "a")]
    Adjective,
    #[serde(rename = "r")]
    Adverb,
    #[serde(rename = "x")]
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "n",
            Pos::Verb => "v",
            Pos::Adjective => "a",
            Pos::Adverb => "r",
            Pos::Other => "x",
        }
    }

    /// Maps a corpus POS tag (UD, PTB or WordNet letters) onto the coarse set.
    pub fn from_corpus_tag(tag: &str) -> Pos {
        let upper = tag.to_ascii_uppercase();
        match upper.as_str() {
            "NOUN" | "PROPN" | "N" => Pos::Noun,
            "VERB" | "AUX" | "V" => Pos::Verb,
            "ADJ" | "A" | "S" => Pos::Adjective,
            "ADV" | "R" => Pos::Adverb,
            t if t.starts_with("NN") => Pos::Noun,
            t if t.starts_with("VB") || t == "MD" => Pos::Verb,
            t if t.starts_with("JJ") => Pos::Adjective,
            t if t.starts_with("RB") => Pos::Adverb,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "n" => Ok(Pos::Noun),
            "v" => Ok(Pos::Verb),
            "a" | "s" => Ok(Pos::Adjective),
            "r" => Ok(Pos::Adverb),
            "x" => Ok(Pos::Other),
            other => Err(format!("unknown POS {other:?}, expected one of n, v, a, r, x")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sense {
    pub id: String,
    pub gloss: String,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub key: String,
    pub constituents: Vec<String>,
    pub pos: Pos,
    pub senses: Vec<Sense>,
}

impl LexiconEntry {
    /// Builds a validated entry. The key is lowercased and split on `_`.
    pub fn new<I, S, G>(key: &str, pos: Pos, senses: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = (S, G)>,
        S: Into<String>,
        G: Into<String>,
    {
        let key = key.trim().to_lowercase();
        let constituents: Vec<String> = key.split('_').map(str::to_owned).collect();
        if key.is_empty() || constituents.iter().any(String::is_empty) {
            return Err(LexiconError::InvalidKey { key });
        }
        let mut out = Vec::new();
        for (rank, (id, gloss)) in senses.into_iter().enumerate() {
            let id = id.into();
            let gloss = gloss.into();
            if gloss.trim().is_empty() {
                return Err(LexiconError::EmptyGloss { key, sense_id: id });
            }
            if out.iter().any(|s: &Sense| s.id == id) {
                return Err(LexiconError::DuplicateSenseId { key, sense_id: id });
            }
            out.push(Sense { id, gloss, rank });
        }
        if out.is_empty() {
            return Err(LexiconError::EmptySenses { key });
        }
        Ok(LexiconEntry {
            key,
            constituents,
            pos,
            senses: out,
        })
    }

    pub fn is_mwe(&self) -> bool {
        self.constituents.len() >= 2
    }

    pub fn first_sense(&self) -> &Sense {
        &self.senses[0]
    }
}

#[derive(Serialize, Deserialize)]
struct RawSense {
    id: String,
    gloss: String,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    key: String,
    pos: Pos,
    senses: Vec<RawSense>,
}

/// Immutable after construction; share it across threads by reference.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    by_key: HashMap<String, Vec<usize>>,
    // lemma -> MWE entry ids, sorted by (key, pos)
    constituent_index: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn from_entries(entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        let mut lexicon = Lexicon::default();
        for entry in entries {
            lexicon.insert(entry)?;
        }
        lexicon.finish();
        Ok(lexicon)
    }

    fn insert(&mut self, entry: LexiconEntry) -> Result<(), LexiconError> {
        let ids = self.by_key.entry(entry.key.clone()).or_default();
        if ids.iter().any(|&i| self.entries[i].pos == entry.pos) {
            return Err(LexiconError::DuplicateEntry {
                key: entry.key,
                pos: entry.pos,
            });
        }
        ids.push(self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    fn finish(&mut self) {
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (id, entry) in self.entries.iter().enumerate() {
            if !entry.is_mwe() {
                continue;
            }
            for c in &entry.constituents {
                let ids = index.entry(c.clone()).or_default();
                if ids.last() != Some(&id) {
                    ids.push(id);
                }
            }
        }
        for ids in index.values_mut() {
            ids.sort_by(|&a, &b| {
                let (ea, eb) = (&self.entries[a], &self.entries[b]);
                (&ea.key, ea.pos).cmp(&(&eb.key, eb.pos))
            });
            ids.dedup();
        }
        self.constituent_index = index;
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, LexiconError> {
        let mut lexicon = Lexicon::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawEntry = serde_json::from_str(&line).map_err(|e| LexiconError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            })?;
            let entry = LexiconEntry::new(&raw.key, raw.pos, raw.senses.into_iter().map(|s| (s.id, s.gloss)))?;
            lexicon.insert(entry)?;
        }
        lexicon.finish();
        Ok(lexicon)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.entries {
            let raw = RawEntry {
                key: e.key.clone(),
                pos: e.pos,
                senses: e
                    .senses
                    .iter()
                    .map(|s| RawSense {
                        id: s.id.clone(),
                        gloss: s.gloss.clone(),
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut out, &raw)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// MWE entries containing `lemma` as a constituent, sorted by key.
    pub fn entries_for_constituent(&self, lemma: &str) -> Vec<&LexiconEntry> {
        let lemma = lemma.to_lowercase();
        self.constituent_index
            .get(&lemma)
            .map(|ids| ids.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    /// Exact lookup, falling back to any POS when `pos` is `None` or has no
    /// entry for the key.
    pub fn lookup(&self, key: &str, pos: Option<Pos>) -> Option<&LexiconEntry> {
        let ids = self.by_key.get(&key.to_lowercase())?;
        let entries = ids.iter().map(|&i| &self.entries[i]);
        match pos {
            Some(p) => entries
                .clone()
                .find(|e| e.pos == p)
                .or_else(|| entries.min_by_key(|e| e.pos)),
            None => entries.min_by_key(|e| e.pos),
        }
    }

    /// Lemma-level view of the constituent index, keyed and ordered for
    /// inspection and tests.
    pub fn constituent_index(&self) -> BTreeMap<&str, Vec<&str>> {
        self.constituent_index
            .iter()
            .map(|(k, ids)| (k.as_str(), ids.iter().map(|&i| self.entries[i].key.as_str()).collect()))
            .collect()
    }
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let file = File::open(path)?;
    Lexicon::from_reader(BufReader::new(file))
}
