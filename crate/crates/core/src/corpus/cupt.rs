//! CoNLL-U Plus with a `PARSEME:MWE` column.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, MweAnnotation, PredictedGroup, Sentence, SourceLayout, Token};

const DEFAULT_COLUMNS: [&str; 11] = [
    "ID",
    "FORM",
    "LEMMA",
    "UPOS",
    "XPOS",
    "FEATS",
    "HEAD",
    "DEPREL",
    "DEPS",
    "MISC",
    "PARSEME:MWE",
];
const MWE_COLUMN: &str = "PARSEME:MWE";

pub fn parse_cupt(path: impl AsRef<Path>) -> Result<Vec<Sentence>, CorpusError> {
    read_cupt(BufReader::new(File::open(path)?))
}

struct Columns {
    names: Vec<String>,
    id: usize,
    form: usize,
    lemma: usize,
    upos: usize,
    mwe: usize,
}

impl Columns {
    fn new(names: Vec<String>) -> Result<Self, String> {
        let find = |n: &str| {
            names
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| format!("global.columns lacks {n}"))
        };
        Ok(Columns {
            id: find("ID")?,
            form: find("FORM")?,
            lemma: find("LEMMA")?,
            upos: find("UPOS")?,
            mwe: find(MWE_COLUMN)?,
            names,
        })
    }
}

pub fn read_cupt<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut columns =
        Columns::new(DEFAULT_COLUMNS.iter().map(|s| s.to_string()).collect()).expect("default columns are complete");
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if let Some(spec) = line.strip_prefix("# global.columns =") {
            let names = spec.split_whitespace().map(str::to_owned).collect();
            columns = Columns::new(names).map_err(|reason| CorpusError::MalformedRow {
                sent_id: String::new(),
                line: line_no,
                reason,
            })?;
            continue;
        }
        if line.trim().is_empty() {
            if !block.is_empty() {
                let n = sentences.len();
                sentences.push(parse_block(&block, &columns, n)?);
                block.clear();
            }
        } else {
            block.push((line_no, line));
        }
    }
    if !block.is_empty() {
        let n = sentences.len();
        sentences.push(parse_block(&block, &columns, n)?);
    }
    Ok(sentences)
}

fn comment_value<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    let rest = comment.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix(key)?.trim_start();
    Some(rest.strip_prefix('=')?.trim())
}

fn parse_block(block: &[(usize, String)], columns: &Columns, ordinal: usize) -> Result<Sentence, CorpusError> {
    let metadata: Vec<String> = block
        .iter()
        .filter(|(_, l)| l.starts_with('#'))
        .map(|(_, l)| l.clone())
        .collect();
    let sent_id = metadata
        .iter()
        .find_map(|c| comment_value(c, "sent_id"))
        .or_else(|| metadata.iter().find_map(|c| comment_value(c, "source_sent_id")))
        .map(str::to_owned)
        .unwrap_or_else(|| format!("s{}", ordinal + 1));

    let malformed = |line: usize, reason: String| CorpusError::MalformedRow {
        sent_id: sent_id.clone(),
        line,
        reason,
    };

    let mut tokens = Vec::new();
    let mut rows = Vec::new();
    // mwe id -> (category, token indices)
    let mut groups: BTreeMap<u32, (Option<String>, Vec<usize>)> = BTreeMap::new();

    for (line_no, line) in block.iter().filter(|(_, l)| !l.starts_with('#')) {
        let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        if fields.len() != columns.names.len() {
            return Err(malformed(
                *line_no,
                format!("expected {} columns, found {}", columns.names.len(), fields.len()),
            ));
        }
        let id = &fields[columns.id];
        // multiword-token ranges and empty nodes keep their rows but never
        // become indexed tokens
        if id.contains('-') || id.contains('.') {
            rows.push(fields);
            continue;
        }
        if id.parse::<usize>().is_err() {
            return Err(malformed(*line_no, format!("bad token id {id:?}")));
        }
        let index = tokens.len();
        let mut token = Token::new(
            index,
            &fields[columns.form],
            &fields[columns.lemma],
            &fields[columns.upos],
        );
        let tag = fields[columns.mwe].as_str();
        if tag != "*" && tag != "_" {
            for part in tag.split(';') {
                let (id_str, cat) = match part.split_once(':') {
                    Some((i, c)) => (i, Some(c)),
                    None => (part, None),
                };
                let mwe_id: u32 = id_str
                    .parse()
                    .map_err(|_| malformed(*line_no, format!("bad MWE tag {part:?}")))?;
                match cat {
                    Some(c) => {
                        if groups.contains_key(&mwe_id) {
                            return Err(malformed(*line_no, format!("MWE {mwe_id} opened twice")));
                        }
                        groups.insert(mwe_id, (Some(c.to_string()), vec![index]));
                    }
                    None => match groups.get_mut(&mwe_id) {
                        Some((_, idx)) => idx.push(index),
                        None => {
                            return Err(CorpusError::DanglingMweRef {
                                sent_id: sent_id.clone(),
                                mwe_id,
                            })
                        }
                    },
                }
                token.gold_mwe_id.get_or_insert(mwe_id);
            }
        }
        tokens.push(token);
        rows.push(fields);
    }

    let gold_mwes = groups
        .into_iter()
        .map(|(mwe_id, (category, token_indices))| MweAnnotation {
            mwe_id,
            token_indices,
            category,
        })
        .collect();
    Ok(Sentence {
        sent_id,
        tokens,
        gold_mwes,
        metadata,
        layout: Some(SourceLayout::Cupt {
            columns: columns.names.clone(),
            rows,
        }),
    })
}

fn tags_for(groups: &[PredictedGroup], n_tokens: usize) -> Vec<String> {
    let mut tags: Vec<Vec<String>> = vec![Vec::new(); n_tokens];
    for g in groups {
        for (k, &i) in g.indices.iter().enumerate() {
            let tag = if k == 0 {
                format!("{}:{}", g.id, g.category.as_deref().unwrap_or("MWE"))
            } else {
                g.id.to_string()
            };
            tags[i].push(tag);
        }
    }
    tags.into_iter()
        .map(|t| if t.is_empty() { "*".to_string() } else { t.join(";") })
        .collect()
}

fn has_id_comment(metadata: &[String]) -> bool {
    metadata
        .iter()
        .any(|c| comment_value(c, "sent_id").is_some() || comment_value(c, "source_sent_id").is_some())
}

pub(crate) fn write_cupt<W: Write>(
    mut out: W,
    sentences: &[Sentence],
    groups: &[Vec<PredictedGroup>],
) -> Result<(), CorpusError> {
    let header_columns: Vec<String> = sentences
        .iter()
        .find_map(|s| match &s.layout {
            Some(SourceLayout::Cupt { columns, .. }) => Some(columns.clone()),
            _ => None,
        })
        .unwrap_or_else(|| DEFAULT_COLUMNS.iter().map(|s| s.to_string()).collect());
    writeln!(out, "# global.columns = {}", header_columns.join(" "))?;

    for (s, g) in sentences.iter().zip(groups) {
        let tags = tags_for(g, s.tokens.len());
        if !has_id_comment(&s.metadata) {
            writeln!(out, "# sent_id = {}", s.sent_id)?;
        }
        for m in &s.metadata {
            writeln!(out, "{m}")?;
        }
        match &s.layout {
            Some(SourceLayout::Cupt { columns, rows }) if *columns == header_columns => {
                let cols = Columns::new(columns.clone()).expect("layout columns were validated");
                let mut next = 0;
                for row in rows {
                    let mut row = row.clone();
                    let id = &row[cols.id];
                    if !(id.contains('-') || id.contains('.')) {
                        row[cols.mwe] = tags[next].clone();
                        next += 1;
                    }
                    writeln!(out, "{}", row.join("\t"))?;
                }
            }
            _ => {
                let cols = Columns::new(header_columns.clone()).expect("header columns are valid");
                for (t, tag) in s.tokens.iter().zip(&tags) {
                    let mut row = vec!["_".to_string(); header_columns.len()];
                    row[cols.id] = (t.index + 1).to_string();
                    row[cols.form] = t.form.clone();
                    row[cols.lemma] = t.lemma.clone();
                    row[cols.upos] = t.upos.clone();
                    row[cols.mwe] = tag.clone();
                    writeln!(out, "{}", row.join("\t"))?;
                }
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
