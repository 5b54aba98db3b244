//! Attribute matrices from text corpora.
//!
//! Every distinct retained word is a feature. Documents are processed in the
//! given order and the words a document uses for the first time become its
//! new features, so the matrix is left-ordered by construction.
//!
//! Tokenization: lowercase, split on non-alphabetic characters, drop tokens
//! shorter than two characters and tokens on the stoplist.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::AttributeMatrix;

/// Identifies the tokenization rules in output metadata.
pub const TOKENIZER_VERSION: &str = "lowercase-alphabetic-min2/v1";

const MIN_TOKEN_LEN: usize = 2;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub id: String,
    pub date: String,
    pub title: String,
    pub body: String,
}

impl Document {
    fn is_blank(&self) -> bool {
        self.title.trim().is_empty() && self.body.trim().is_empty()
    }
}

/// Documents in publication order plus the number of entries that could not
/// be read.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub unreadable: usize,
}

impl Corpus {
    /// Stable sort by the date field (compared as text, so ISO dates sort
    /// chronologically).
    pub fn sort_by_date(&mut self) {
        self.documents.sort_by(|a, b| a.date.cmp(&b.date));
    }
}

#[derive(Debug, Clone, Default)]
pub struct Stoplist(HashSet<String>);

impl Stoplist {
    pub fn empty() -> Self {
        Self::default()
    }

    /// One word per line; case is ignored.
    pub fn from_reader<R: BufRead>(input: R) -> io::Result<Self> {
        let mut words = HashSet::new();
        for line in input.lines() {
            let w = line?.trim().to_lowercase();
            if !w.is_empty() {
                words.insert(w);
            }
        }
        Ok(Self(words))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let file = fs::File::open(path).map_err(|source| IngestError::File {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_reader(io::BufReader::new(file))?)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Distinct retained tokens of `text` in order of first occurrence.
pub fn tokenize(text: &str, stoplist: &Stoplist) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in text.split(|c: char| !c.is_alphabetic()) {
        if raw.chars().count() < MIN_TOKEN_LEN {
            continue;
        }
        let token = raw.to_lowercase();
        if stoplist.contains(&token) || seen.contains(&token) {
            continue;
        }
        seen.insert(token.clone());
        out.push(token);
    }
    out
}

#[derive(Debug, Clone)]
pub struct IngestOutput {
    pub matrix: AttributeMatrix,
    /// Word of each feature column.
    pub features: Vec<String>,
    /// Ids of the documents that became rows.
    pub ids: Vec<String>,
    /// Blank or unreadable documents left out.
    pub skipped: usize,
}

pub fn build_matrix(corpus: &Corpus, stoplist: &Stoplist) -> Result<IngestOutput, IngestError> {
    let kept: Vec<&Document> = corpus.documents.iter().filter(|d| !d.is_blank()).collect();
    let skipped = corpus.unreadable + (corpus.documents.len() - kept.len());
    if skipped > 0 {
        log::warn!("skipped {skipped} blank or unreadable documents");
    }
    if kept.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let tokens: Vec<Vec<String>> = kept
        .par_iter()
        .map(|d| tokenize(&format!("{}\n{}", d.title, d.body), stoplist))
        .collect();

    let mut index: HashMap<String, u32> = HashMap::new();
    let mut features = Vec::new();
    let mut rows = Vec::with_capacity(kept.len());
    let mut new_counts = Vec::with_capacity(kept.len());
    for words in tokens {
        let mut row = Vec::with_capacity(words.len());
        let mut fresh = 0;
        for w in words {
            let k = *index.entry(w).or_insert_with_key(|w| {
                features.push(w.clone());
                fresh += 1;
                (features.len() - 1) as u32
            });
            row.push(k);
        }
        row.sort_unstable();
        rows.push(row);
        new_counts.push(fresh);
    }
    let matrix = AttributeMatrix::with_counts(rows, &new_counts).expect("first-occurrence columns are left-ordered");
    Ok(IngestOutput {
        matrix,
        features,
        ids: kept.iter().map(|d| d.id.clone()).collect(),
        skipped,
    })
}

/// Reads `id<TAB>date<TAB>title<TAB>abstract` lines in file order. A first
/// line starting with `id<TAB>` is taken as a header; lines with fewer than
/// four fields count as unreadable.
pub fn read_tsv<R: BufRead>(input: R) -> Result<Corpus, IngestError> {
    let mut corpus = Corpus::default();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || (idx == 0 && line.starts_with("id\t")) {
            continue;
        }
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() < 4 {
            log::warn!("line {}: expected 4 tab-separated fields", idx + 1);
            corpus.unreadable += 1;
            continue;
        }
        corpus.documents.push(Document {
            id: fields[0].to_string(),
            date: fields[1].to_string(),
            title: fields[2].to_string(),
            body: fields[3].to_string(),
        });
    }
    Ok(corpus)
}

/// Parses one document file. Files in the arXiv abstract layout (header and
/// abstract delimited by `\\` lines) yield the `Title:` field and the
/// abstract; anything else is taken as plain body text.
pub fn parse_document(id: &str, text: &str) -> Document {
    let sections: Vec<&str> = split_sections(text);
    if sections.len() < 2 {
        return Document {
            id: id.to_string(),
            body: text.to_string(),
            ..Document::default()
        };
    }
    let header = sections[0];
    let mut title = String::new();
    let mut date = String::new();
    let mut in_title = false;
    for line in header.lines() {
        if let Some(rest) = line.strip_prefix("Title:") {
            title = rest.trim().to_string();
            in_title = true;
        } else if in_title && line.starts_with(char::is_whitespace) {
            title.push(' ');
            title.push_str(line.trim());
        } else {
            in_title = false;
            if let Some(rest) = line.strip_prefix("Date:") {
                date = rest.trim().to_string();
            }
        }
    }
    Document {
        id: id.to_string(),
        date,
        title,
        body: sections[1].trim().to_string(),
    }
}

/// Non-empty text between `\\` delimiter lines.
fn split_sections(text: &str) -> Vec<&str> {
    let mut sections = Vec::new();
    let mut start = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim_end() == "\\\\" {
            if let Some(s) = start {
                let chunk = &text[s..offset];
                if !chunk.trim().is_empty() {
                    sections.push(chunk);
                }
            }
            start = Some(offset + line.len());
        }
        offset += line.len();
    }
    if let Some(s) = start {
        let chunk = &text[s..];
        if !chunk.trim().is_empty() {
            sections.push(chunk);
        }
    }
    sections
}

/// Reads the documents listed in a manifest, one path per line relative to
/// `dir`, in manifest order. A line may carry a second tab-separated field
/// used as the document id (defaults to the file stem).
pub fn read_directory(dir: &Path, manifest: &Path) -> Result<Corpus, IngestError> {
    let text = fs::read_to_string(manifest).map_err(|source| IngestError::File {
        path: manifest.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let rel = parts.next().unwrap_or_default();
        if rel.is_empty() {
            return Err(IngestError::Manifest {
                line: idx + 1,
                message: "missing path".into(),
            });
        }
        let path = dir.join(rel);
        let id = match parts.next() {
            Some(id) => id.to_string(),
            None => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        entries.push((path, id));
    }
    let docs: Vec<Option<Document>> = entries
        .par_iter()
        .map(|(path, id)| match fs::read(path) {
            Ok(bytes) => Some(parse_document(id, &String::from_utf8_lossy(&bytes))),
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                None
            }
        })
        .collect();
    let mut corpus = Corpus::default();
    for doc in docs {
        match doc {
            Some(d) => corpus.documents.push(d),
            None => corpus.unreadable += 1,
        }
    }
    Ok(corpus)
}

/// Writes `index<TAB>word` lines.
pub fn write_features<W: Write>(out: W, features: &[String]) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    for (k, w) in features.iter().enumerate() {
        writeln!(out, "{k}\t{w}")?;
    }
    out.flush()
}
