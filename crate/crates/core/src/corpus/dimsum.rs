//! DiMSUM 9-column TSV: offset, word, lemma, POS, MWE tag, parent offset,
//! strength, supersense, sentence id. MWE groups are the chains formed by
//! parent offsets; weak and strong links are not distinguished.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, MweAnnotation, PredictedGroup, Sentence, SourceLayout, Token};

const N_FIELDS: usize = 9;

pub fn parse_dimsum(path: impl AsRef<Path>) -> Result<Vec<Sentence>, CorpusError> {
    read_dimsum(BufReader::new(File::open(path)?))
}

pub fn read_dimsum<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(parse_block(&block, sentences.len())?);
                block.clear();
            }
            continue;
        }
        let mut fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
        // trailing empty columns are sometimes stripped
        if fields.len() < N_FIELDS {
            fields.resize(N_FIELDS, String::new());
        }
        block.push((i + 1, fields));
    }
    if !block.is_empty() {
        sentences.push(parse_block(&block, sentences.len())?);
    }
    Ok(sentences)
}

fn parse_block(block: &[(usize, Vec<String>)], ordinal: usize) -> Result<Sentence, CorpusError> {
    let sent_id = block
        .iter()
        .map(|(_, f)| f[8].trim())
        .find(|s| !s.is_empty())
        .map(str::to_owned)
        .unwrap_or_else(|| format!("s{}", ordinal + 1));
    let malformed = |line: usize, reason: String| CorpusError::MalformedRow {
        sent_id: sent_id.clone(),
        line,
        reason,
    };

    let n = block.len();
    let mut tokens = Vec::with_capacity(n);
    let mut parents: Vec<Option<usize>> = Vec::with_capacity(n);
    for (pos, (line_no, f)) in block.iter().enumerate() {
        if f.len() != N_FIELDS {
            return Err(malformed(
                *line_no,
                format!("expected {N_FIELDS} columns, found {}", f.len()),
            ));
        }
        let offset: usize = f[0]
            .trim()
            .parse()
            .map_err(|_| malformed(*line_no, format!("bad offset {:?}", f[0])))?;
        if offset != pos + 1 {
            return Err(malformed(*line_no, format!("offset {offset} out of sequence")));
        }
        let tag = f[4].trim();
        if !matches!(tag, "O" | "o" | "B" | "b" | "I" | "i") {
            return Err(malformed(*line_no, format!("bad MWE tag {tag:?}")));
        }
        let parent: usize = match f[5].trim() {
            "" => 0,
            p => p
                .parse()
                .map_err(|_| malformed(*line_no, format!("bad parent offset {p:?}")))?,
        };
        if parent == offset {
            return Err(CorpusError::CyclicParent {
                sent_id: sent_id.clone(),
                offset,
            });
        }
        if parent > n {
            return Err(malformed(*line_no, format!("parent {parent} beyond sentence end")));
        }
        if matches!(tag, "I" | "i") && parent == 0 {
            return Err(malformed(*line_no, "continuation tag without parent".into()));
        }
        parents.push(if parent == 0 { None } else { Some(parent - 1) });
        tokens.push(Token::new(pos, &f[1], &f[2], &f[3]));
    }

    // follow parent links to each chain's root
    let mut root = vec![usize::MAX; n];
    for (start, slot) in root.iter_mut().enumerate() {
        let mut cur = start;
        let mut steps = 0;
        while let Some(p) = parents[cur] {
            cur = p;
            steps += 1;
            if steps > n {
                return Err(CorpusError::CyclicParent {
                    sent_id: sent_id.clone(),
                    offset: start + 1,
                });
            }
        }
        *slot = cur;
    }

    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut chain_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let r = root[i];
        let is_member = parents[i].is_some() || parents.contains(&Some(i));
        if !is_member {
            continue;
        }
        if chain_of_root[r] == usize::MAX {
            chain_of_root[r] = chains.len();
            chains.push(Vec::new());
        }
        chains[chain_of_root[r]].push(i);
    }
    chains.sort();

    let mut gold_mwes = Vec::new();
    for (k, mut indices) in chains.into_iter().enumerate() {
        indices.sort_unstable();
        let mwe_id = k as u32 + 1;
        for &i in &indices {
            tokens[i].gold_mwe_id = Some(mwe_id);
        }
        gold_mwes.push(MweAnnotation {
            mwe_id,
            token_indices: indices,
            category: None,
        });
    }

    Ok(Sentence {
        sent_id,
        tokens,
        gold_mwes,
        metadata: Vec::new(),
        layout: Some(SourceLayout::Dimsum {
            rows: block.iter().map(|(_, f)| f.clone()).collect(),
        }),
    })
}

/// Per-token (tag, parent offset, strength) for a set of groups.
fn encode_groups(groups: &[PredictedGroup], n: usize) -> Vec<(String, usize, &'static str)> {
    let mut member: Vec<Option<(usize, usize)>> = vec![None; n]; // (group, position in group)
    for (g, grp) in groups.iter().enumerate() {
        for (k, &i) in grp.indices.iter().enumerate() {
            member[i].get_or_insert((g, k));
        }
    }
    let in_gap = |i: usize, own: Option<usize>| {
        groups
            .iter()
            .enumerate()
            .any(|(g, grp)| Some(g) != own && grp.indices[0] < i && i < *grp.indices.last().unwrap())
    };
    (0..n)
        .map(|i| match member[i] {
            None => {
                let t = if in_gap(i, None) { "o" } else { "O" };
                (t.to_string(), 0, "")
            }
            Some((g, k)) => {
                let lower = in_gap(i, Some(g));
                if k == 0 {
                    let t = if lower { "b" } else { "B" };
                    (t.to_string(), 0, "")
                } else {
                    let t = if lower { "i" } else { "I" };
                    (t.to_string(), groups[g].indices[k - 1] + 1, "_")
                }
            }
        })
        .collect()
}

pub(crate) fn write_dimsum<W: Write>(
    mut out: W,
    sentences: &[Sentence],
    groups: &[Vec<PredictedGroup>],
) -> Result<(), CorpusError> {
    for (s, g) in sentences.iter().zip(groups) {
        let encoded = encode_groups(g, s.tokens.len());
        let source_rows = match &s.layout {
            Some(SourceLayout::Dimsum { rows }) if rows.len() == s.tokens.len() => Some(rows),
            _ => None,
        };
        for (i, t) in s.tokens.iter().enumerate() {
            let (tag, parent, strength) = &encoded[i];
            let supersense = source_rows.map(|r| r[i][7].as_str()).unwrap_or("");
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                t.form,
                t.lemma,
                t.upos,
                tag,
                parent,
                strength,
                supersense,
                s.sent_id
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}
