//! Static word-embedding tables (word2vec / GloVe text) and precomputed
//! contextual token embeddings.

use std::collections::HashMap;
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::subspace::parse_floats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingFormat {
    /// Header line `<vocab_size> <dim>`, then `<word> <f1> … <fd>`.
    Word2VecText,
    /// No header; the dimension comes from the first line.
    GloveText,
}

impl FromStr for EmbeddingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word2vec_text" => Ok(EmbeddingFormat::Word2VecText),
            "glove_text" => Ok(EmbeddingFormat::GloveText),
            other => Err(Error::invalid(format!("unknown embedding format `{other}`"))),
        }
    }
}

impl fmt::Display for EmbeddingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingFormat::Word2VecText => "word2vec_text",
            EmbeddingFormat::GloveText => "glove_text",
        })
    }
}

/// Word → vector map with a fixed dimension. Word order is the file order.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
    format: EmbeddingFormat,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize, format: EmbeddingFormat) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingTable {
            dim,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            format,
            duplicates: 0,
        })
    }

    /// Appends a word. Returns `false` (and keeps the first vector) if the
    /// word is already present.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("invalid word `{word}`")));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite vector for `{word}`")));
        }
        if self.index.contains_key(word) {
            self.duplicates += 1;
            return Ok(false);
        }
        self.index.insert(word.to_owned(), self.words.len());
        self.words.push(word.to_owned());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn format(&self) -> EmbeddingFormat {
        self.format
    }

    /// Number of repeated words dropped while loading.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Vector at insertion position `i`.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.vector(i))
    }

    /// Case-sensitive lookup.
    pub fn lookup(&self, word: &str) -> Result<DenseVector> {
        let v = self
            .get(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_owned()))?;
        DenseVector::new(v.to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(w, v)| (w.as_str(), v))
    }

    pub fn read<R: BufRead>(reader: R, format: EmbeddingFormat) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut table: Option<EmbeddingTable> = None;

        if format == EmbeddingFormat::Word2VecText {
            let (line_no, header) = lines
                .next()
                .ok_or_else(|| Error::parse(1, "empty embedding file"))?;
            let header = header?;
            let fields: Vec<&str> = header.split_whitespace().collect();
            let dim = match fields.as_slice() {
                [n, d] if n.parse::<usize>().is_ok() => d.parse::<usize>().ok(),
                _ => None,
            }
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::parse(line_no, "expected header `<vocab_size> <dim>`"))?;
            table = Some(EmbeddingTable::new(dim, format)?);
        }

        for (line_no, line) in lines {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let (word, rest) = line
                .trim_start()
                .split_once(char::is_whitespace)
                .ok_or_else(|| Error::parse(line_no, "line has no vector"))?;
            let values = parse_floats(rest, line_no)?;
            if table.is_none() {
                if values.is_empty() {
                    return Err(Error::parse(line_no, "line has no vector"));
                }
                table = Some(EmbeddingTable::new(values.len(), format)?);
            }
            let table = table.as_mut().expect("table initialized above");
            if values.len() != table.dim {
                return Err(Error::parse(
                    line_no,
                    format!("expected {} values, found {}", table.dim, values.len()),
                ));
            }
            table
                .insert(word, &values)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }

        match table {
            Some(t) if !t.is_empty() => Ok(t),
            _ => Err(Error::parse(1, "embedding file has no entries")),
        }
    }

    pub fn write<W: Write>(&self, mut w: W, format: EmbeddingFormat) -> Result<()> {
        if format == EmbeddingFormat::Word2VecText {
            writeln!(w, "{} {}", self.len(), self.dim)?;
        }
        for (word, v) in self.iter() {
            write!(w, "{word}")?;
            for x in v {
                // `Display` for f64 is the shortest string that round-trips.
                write!(w, " {x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn load_word_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<EmbeddingTable> {
    let file = File::open(path)?;
    EmbeddingTable::read(BufReader::new(file), format)
}

pub fn lookup(table: &EmbeddingTable, word: &str) -> Result<DenseVector> {
    table.lookup(word)
}

/// One sentence: its tokens and one contextual vector per token.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    id: String,
    tokens: Vec<String>,
    vectors: Vec<DenseVector>,
}

impl SentenceEmbedding {
    /// Requires at least one token, one vector per token, a shared dimension
    /// and no zero vectors.
    pub fn new(id: impl Into<String>, tokens: Vec<String>, vectors: Vec<DenseVector>) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::invalid(format!("sentence `{id}` has no tokens")));
        }
        if tokens.len() != vectors.len() {
            return Err(Error::invalid(format!(
                "sentence `{id}` has {} tokens but {} vectors",
                tokens.len(),
                vectors.len()
            )));
        }
        let dim = vectors[0].dim();
        for (tok, v) in tokens.iter().zip(&vectors) {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
            if v.norm() == 0.0 {
                return Err(Error::invalid(format!(
                    "token `{tok}` of sentence `{id}` has a zero vector"
                )));
            }
        }
        Ok(SentenceEmbedding { id, tokens, vectors })
    }

    /// Builds a sentence from raw rows, naming tokens `t0, t1, …`.
    pub fn from_rows<R: AsRef<[f64]>>(id: impl Into<String>, rows: &[R]) -> Result<Self> {
        let tokens = (0..rows.len()).map(|i| format!("t{i}")).collect();
        let vectors = rows
            .iter()
            .map(|r| DenseVector::new(r.as_ref().to_vec()))
            .collect::<Result<_>>()?;
        SentenceEmbedding::new(id, tokens, vectors)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[DenseVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    /// Formats the sentence as one token-embedding record (no trailing newline).
    pub fn to_record(&self) -> String {
        let floats: Vec<String> = self
            .vectors
            .iter()
            .flat_map(|v| v.as_slice().iter().map(|x| x.to_string()))
            .collect();
        format!(
            "{}\t{}\t{}\t{}",
            self.id,
            self.tokens.join(" "),
            self.dim(),
            floats.join(" ")
        )
    }
}

/// Reads `id<TAB>tokens<TAB>dim<TAB>floats` records, one per line.
pub fn read_token_embeddings<R: BufRead>(reader: R) -> Result<Vec<SentenceEmbedding>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut file_dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, tokens, dim, floats] = fields.as_slice() else {
            return Err(Error::parse(line_no, format!("expected 4 tab-separated fields, found {}", fields.len())));
        };
        if id.is_empty() {
            return Err(Error::parse(line_no, "empty sentence id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(line_no, format!("duplicate sentence id `{id}`")));
        }
        let tokens: Vec<String> = tokens.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::parse(line_no, "record has no tokens"));
        }
        let dim: usize = dim
            .trim()
            .parse()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::parse(line_no, format!("invalid dimension `{dim}`")))?;
        if let Some(expected) = file_dim {
            if expected != dim {
                return Err(Error::parse(
                    line_no,
                    format!("dimension {dim} differs from earlier records ({expected})"),
                ));
            }
        }
        file_dim = Some(dim);
        let values = parse_floats(floats, line_no)?;
        if values.len() % dim != 0 || values.len() / dim != tokens.len() {
            return Err(Error::parse(
                line_no,
                format!(
                    "{} tokens need {} values, found {}",
                    tokens.len(),
                    tokens.len() * dim,
                    values.len()
                ),
            ));
        }
        let vectors = values
            .chunks_exact(dim)
            .map(|c| DenseVector::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let sentence = SentenceEmbedding::new(*id, tokens, vectors)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        out.push(sentence);
    }
    Ok(out)
}

pub fn load_token_embeddings(path: impl AsRef<Path>) -> Result<Vec<SentenceEmbedding>> {
    let file = File::open(path)?;
    read_token_embeddings(BufReader::new(file))
}

pub fn write_token_embeddings<W: Write>(mut w: W, sentences: &[SentenceEmbedding]) -> Result<()> {
    for s in sentences {
        writeln!(w, "{}", s.to_record())?;
    }
    Ok(())
}

/// Mean of a sentence's token vectors.
pub(crate) fn mean_vector(sentence: &SentenceEmbedding) -> Vec<f64> {
    let mut mean = vec![0.0; sentence.dim()];
    for v in sentence.vectors() {
        for (m, x) in mean.iter_mut().zip(v.as_slice()) {
            *m += x;
        }
    }
    let n = sentence.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}
