//! Set expansion: rank a vocabulary by membership in a seed word set.
//!
//! The seed ("span") words of a set define the query; every other word in
//! the embedding table is a candidate. Held-out ("test") words of the set are
//! then located in the ranking to compute R@k and the median rank.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linalg;
use crate::subspace::Subspace;

/// Number of words a derived set keeps as its span.
pub const DERIVED_SPAN_SIZE: usize = 5;

/// A named word set split into span (query) words and held-out test words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSetSpec {
    pub name: String,
    pub span_words: Vec<String>,
    pub test_words: Vec<String>,
}

impl WordSetSpec {
    pub fn new(name: impl Into<String>, span_words: Vec<String>, test_words: Vec<String>) -> Result<Self> {
        let spec = WordSetSpec {
            name: name.into(),
            span_words,
            test_words,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("invalid set name `{}`", self.name)));
        }
        if self.span_words.is_empty() {
            return Err(Error::invalid(format!("set `{}` has no span words", self.name)));
        }
        let mut seen = HashSet::new();
        for w in &self.span_words {
            if !seen.insert(w.as_str()) {
                return Err(Error::invalid(format!("duplicate span word `{w}` in `{}`", self.name)));
            }
        }
        let mut seen_test = HashSet::new();
        for w in &self.test_words {
            if seen.contains(w.as_str()) {
                return Err(Error::invalid(format!(
                    "`{w}` is both a span and a test word in `{}`",
                    self.name
                )));
            }
            if !seen_test.insert(w.as_str()) {
                return Err(Error::invalid(format!("duplicate test word `{w}` in `{}`", self.name)));
            }
        }
        Ok(())
    }

    /// Span words followed by test words.
    pub fn all_words(&self) -> impl Iterator<Item = &String> {
        self.span_words.iter().chain(&self.test_words)
    }
}

/// Parses the set-dataset format: blank-line separated records of
/// `set <name>`, `span w…`, `test w…`.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<WordSetSpec>> {
    let mut sets = Vec::new();
    let mut names = HashSet::new();
    let mut record: Vec<(usize, String)> = Vec::new();

    let mut flush = |record: &mut Vec<(usize, String)>| -> Result<()> {
        if record.is_empty() {
            return Ok(());
        }
        let start = record[0].0;
        if record.len() != 3 {
            return Err(Error::parse(start, "a set record needs `set`, `span` and `test` lines"));
        }
        let mut fields = record.iter().map(|(n, l)| {
            let mut it = l.split_whitespace();
            let key = it.next().unwrap_or_default();
            (*n, key, it.map(str::to_owned).collect::<Vec<_>>())
        });
        let (n, key, name) = fields.next().expect("three lines");
        if key != "set" || name.len() != 1 {
            return Err(Error::parse(n, "expected `set <name>`"));
        }
        let (n, key, span) = fields.next().expect("three lines");
        if key != "span" {
            return Err(Error::parse(n, "expected `span <words>`"));
        }
        let (n, key, test) = fields.next().expect("three lines");
        if key != "test" {
            return Err(Error::parse(n, "expected `test <words>`"));
        }
        let spec = WordSetSpec::new(name[0].clone(), span, test).map_err(|e| Error::parse(start, e.to_string()))?;
        if !names.insert(spec.name.clone()) {
            return Err(Error::parse(start, format!("duplicate set name `{}`", spec.name)));
        }
        sets.push(spec);
        record.clear();
        Ok(())
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            flush(&mut record)?;
        } else {
            record.push((i + 1, line));
        }
    }
    flush(&mut record)?;
    Ok(sets)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<WordSetSpec>> {
    read_dataset(BufReader::new(File::open(path)?))
}

pub fn write_dataset<W: Write>(mut w: W, sets: &[WordSetSpec]) -> Result<()> {
    for (i, s) in sets.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        writeln!(w, "set {}", s.name)?;
        writeln!(w, "span {}", s.span_words.join(" "))?;
        if s.test_words.is_empty() {
            writeln!(w, "test")?;
        } else {
            writeln!(w, "test {}", s.test_words.join(" "))?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionMethod {
    /// Soft membership in the span of the span-word vectors.
    Subspace,
    /// Cosine to the element-wise max of the span-word vectors.
    Fuzzy,
    /// Maximum cosine to any span-word vector (reconstructed nearest-neighbour baseline).
    Near,
}

impl FromStr for ExpansionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace" => Ok(ExpansionMethod::Subspace),
            "fuzzy" => Ok(ExpansionMethod::Fuzzy),
            "near" => Ok(ExpansionMethod::Near),
            other => Err(Error::invalid(format!("unknown expansion method `{other}`"))),
        }
    }
}

impl fmt::Display for ExpansionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpansionMethod::Subspace => "subspace",
            ExpansionMethod::Fuzzy => "fuzzy",
            ExpansionMethod::Near => "near",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedWord {
    pub word: String,
    pub score: f64,
}

/// Candidates sorted by descending score; ties keep table order.
#[derive(Debug, Clone)]
pub struct RankedList {
    pub entries: Vec<RankedWord>,
    /// Span words missing from the table.
    pub span_oov: Vec<String>,
    /// Span words removed from the candidate pool.
    pub span_excluded: usize,
    /// Candidates dropped because their vector is zero.
    pub zero_vectors: usize,
}

/// Ranks of the in-vocabulary test words, plus how many were missing.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRanks {
    /// 1-based, in test-word order.
    pub ranks: Vec<usize>,
    pub oov: usize,
}

impl TestRanks {
    pub fn recall_at(&self, k: usize) -> f64 {
        let hits = self.ranks.iter().filter(|&&r| r <= k).count();
        hits as f64 / self.ranks.len() as f64
    }

    pub fn median(&self) -> f64 {
        let xs: Vec<f64> = self.ranks.iter().map(|&r| r as f64).collect();
        median(&xs).expect("test ranks are non-empty")
    }
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    /// Builds a list from words already in ranked order (scores descend from 0).
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        RankedList {
            entries: words
                .iter()
                .enumerate()
                .map(|(i, w)| RankedWord {
                    word: w.as_ref().to_owned(),
                    score: -(i as f64),
                })
                .collect(),
            span_oov: Vec::new(),
            span_excluded: 0,
            zero_vectors: 0,
        }
    }

    /// Locates the test words. A test word is in vocabulary iff it appears in
    /// the ranking.
    pub fn test_ranks<S: AsRef<str>>(&self, test_words: &[S]) -> Result<TestRanks> {
        if test_words.is_empty() {
            return Err(Error::invalid("test word list is empty"));
        }
        let wanted: HashSet<&str> = test_words.iter().map(AsRef::as_ref).collect();
        let mut position: HashMap<&str, usize> = HashMap::with_capacity(wanted.len());
        for (i, e) in self.entries.iter().enumerate() {
            if wanted.contains(e.word.as_str()) {
                position.entry(e.word.as_str()).or_insert(i + 1);
            }
        }
        let mut ranks = Vec::new();
        let mut oov = 0;
        for w in test_words {
            match position.get(w.as_ref()) {
                Some(&r) => ranks.push(r),
                None => oov += 1,
            }
        }
        if ranks.is_empty() {
            return Err(Error::EmptyTestSet);
        }
        Ok(TestRanks { ranks, oov })
    }
}

/// Median of a non-empty sample; the mean of the two middle values for even sizes.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

enum Scorer {
    Subspace(Subspace),
    Pooled(Vec<f64>),
    Nearest(Vec<Vec<f64>>),
}

impl Scorer {
    fn score(&self, v: &[f64]) -> Result<f64> {
        match self {
            Scorer::Subspace(s) => s.soft_membership_slice(v),
            Scorer::Pooled(pooled) => linalg::cosine(v, pooled),
            Scorer::Nearest(span) => {
                let mut best = f64::NEG_INFINITY;
                for s in span {
                    best = best.max(linalg::cosine(v, s)?);
                }
                Ok(best)
            }
        }
    }
}

/// Scores every table word outside the span against the span words and
/// sorts descending. Span words missing from the table are skipped and
/// recorded; if none remain the set cannot be expanded.
pub fn expand_set(spec: &WordSetSpec, table: &EmbeddingTable, method: ExpansionMethod) -> Result<RankedList> {
    let mut span_vectors: Vec<Vec<f64>> = Vec::new();
    let mut span_oov = Vec::new();
    let mut span_idx = HashSet::new();
    for w in &spec.span_words {
        match table.index_of(w) {
            Some(i) => {
                span_idx.insert(i);
                span_vectors.push(table.vector(i).to_vec());
            }
            None => span_oov.push(w.clone()),
        }
    }
    span_vectors.retain(|v| linalg::norm(v) > 0.0);
    if span_vectors.is_empty() {
        return Err(Error::EmptySpan(spec.name.clone()));
    }

    let scorer = match method {
        ExpansionMethod::Subspace => Scorer::Subspace(Subspace::span_rows(table.dim(), &span_vectors)?),
        ExpansionMethod::Fuzzy => {
            let mut pooled = span_vectors[0].clone();
            for v in &span_vectors[1..] {
                for (p, &x) in pooled.iter_mut().zip(v) {
                    *p = p.max(x);
                }
            }
            if linalg::norm(&pooled) == 0.0 {
                return Err(Error::invalid(format!("max-pooled vector of `{}` is zero", spec.name)));
            }
            Scorer::Pooled(pooled)
        }
        ExpansionMethod::Near => Scorer::Nearest(span_vectors),
    };

    let candidates: Vec<usize> = (0..table.len())
        .filter(|i| !span_idx.contains(i))
        .filter(|&i| linalg::norm(table.vector(i)) > 0.0)
        .collect();
    let zero_vectors = table.len() - span_idx.len() - candidates.len();

    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|&i| scorer.score(table.vector(i)))
        .collect::<Result<_>>()?;

    let mut entries: Vec<RankedWord> = candidates
        .iter()
        .zip(scores)
        .map(|(&i, score)| RankedWord {
            word: table.words()[i].clone(),
            score,
        })
        .collect();
    // Stable: equal scores keep table order.
    entries.sort_by(|a, b| b.score.total_cmp(&a.score));

    Ok(RankedList {
        entries,
        span_oov,
        span_excluded: span_idx.len(),
        zero_vectors,
    })
}

/// Fraction of in-vocabulary test words found in the top `k`.
pub fn recall_at_k<S: AsRef<str>>(ranking: &RankedList, test_words: &[S], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(ranking.test_ranks(test_words)?.recall_at(k))
}

/// Median 1-based rank of the in-vocabulary test words.
pub fn median_rank<S: AsRef<str>>(ranking: &RankedList, test_words: &[S]) -> Result<f64> {
    Ok(ranking.test_ranks(test_words)?.median())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetOp {
    Union,
    Intersect,
}

impl FromStr for SetOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(SetOp::Union),
            "intersect" => Ok(SetOp::Intersect),
            other => Err(Error::invalid(format!("unknown set operation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DerivedSetParams {
    pub op: SetOp,
    pub seed: u64,
    pub count: usize,
    /// Union results are subsampled down to this many words.
    pub union_cap: usize,
    /// Intersections with fewer words are rejected.
    pub intersect_min: usize,
}

/// Builds union or intersection sets from random pairs of input sets.
///
/// Pairs are visited in a seeded random order; each accepted word list is
/// shuffled and split into the first [`DERIVED_SPAN_SIZE`] words as span and
/// the rest as test.
pub fn gen_derived_sets(sets: &[WordSetSpec], params: &DerivedSetParams) -> Result<Vec<WordSetSpec>> {
    if sets.len() < 2 {
        return Err(Error::invalid("need at least two sets to combine"));
    }
    if params.count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    if params.op == SetOp::Union && params.union_cap == 0 {
        return Err(Error::invalid("union cap must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pairs: Vec<(usize, usize)> = (0..sets.len())
        .flat_map(|i| (i + 1..sets.len()).map(move |j| (i, j)))
        .collect();
    pairs.shuffle(&mut rng);

    let mut out = Vec::with_capacity(params.count);
    for (i, j) in pairs {
        if out.len() == params.count {
            break;
        }
        let (a, b) = (&sets[i], &sets[j]);
        let (mut words, name) = match params.op {
            SetOp::Union => {
                let mut seen = HashSet::new();
                let mut words: Vec<String> =
                    a.all_words().chain(b.all_words()).filter(|w| seen.insert(w.as_str())).cloned().collect();
                if words.len() > params.union_cap {
                    let keep = index::sample(&mut rng, words.len(), params.union_cap);
                    words = keep.iter().map(|k| words[k].clone()).collect();
                }
                (words, format!("{}|{}", a.name, b.name))
            }
            SetOp::Intersect => {
                let in_b: HashSet<&str> = b.all_words().map(String::as_str).collect();
                let words: Vec<String> = a.all_words().filter(|w| in_b.contains(w.as_str())).cloned().collect();
                if words.len() < params.intersect_min {
                    continue;
                }
                (words, format!("{}&{}", a.name, b.name))
            }
        };
        if words.is_empty() {
            continue;
        }
        words.shuffle(&mut rng);
        let test = words.split_off(words.len().min(DERIVED_SPAN_SIZE));
        out.push(WordSetSpec::new(name, words, test)?);
    }
    if out.len() < params.count {
        return Err(Error::InsufficientPairs {
            accepted: out.len(),
            requested: params.count,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingFormat;

    const S2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn words(ws: &[&str]) -> Vec<String> {
        ws.iter().map(|w| w.to_string()).collect()
    }

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(3, EmbeddingFormat::GloveText).unwrap();
        t.insert("a", &[1.0, 0.0, 0.0]).unwrap();
        t.insert("b", &[0.0, 1.0, 0.0]).unwrap();
        t.insert("c", &[S2, S2, 0.0]).unwrap();
        t.insert("d", &[0.0, 0.0, 1.0]).unwrap();
        t
    }

    fn score(list: &RankedList, w: &str) -> f64 {
        list.entries.iter().find(|e| e.word == w).unwrap().score
    }

    #[test]
    fn subspace_expansion_example() {
        let spec = WordSetSpec::new("s", words(&["a", "b"]), words(&["c"])).unwrap();
        let list = expand_set(&spec, &table(), ExpansionMethod::Subspace).unwrap();
        assert_eq!(list.words().collect::<Vec<_>>(), ["c", "d"]);
        assert!((score(&list, "c") - 1.0).abs() < 1e-12);
        assert!(score(&list, "d").abs() < 1e-12);
    }

    #[test]
    fn near_expansion_example() {
        let spec = WordSetSpec::new("s", words(&["a"]), words(&["c"])).unwrap();
        let list = expand_set(&spec, &table(), ExpansionMethod::Near).unwrap();
        assert!((score(&list, "c") - S2).abs() < 1e-15);
        assert_eq!(score(&list, "d"), 0.0);
        assert_eq!(score(&list, "b"), 0.0);
        // b and d tie; table order decides.
        assert_eq!(list.words().collect::<Vec<_>>(), ["c", "b", "d"]);
    }

    #[test]
    fn fuzzy_expansion_example() {
        let spec = WordSetSpec::new("s", words(&["a", "b"]), words(&["c"])).unwrap();
        let list = expand_set(&spec, &table(), ExpansionMethod::Fuzzy).unwrap();
        assert!((score(&list, "c") - 1.0).abs() < 1e-15);
        assert_eq!(score(&list, "d"), 0.0);
    }

    #[test]
    fn span_oov_words_are_recorded() {
        let spec = WordSetSpec::new("s", words(&["a", "zzz"]), words(&["c"])).unwrap();
        let list = expand_set(&spec, &table(), ExpansionMethod::Subspace).unwrap();
        assert_eq!(list.span_oov, ["zzz"]);
        assert_eq!(list.span_excluded, 1);
        assert!(list.words().all(|w| w != "a"));

        let spec = WordSetSpec::new("lost", words(&["x", "y"]), vec![]).unwrap();
        let err = expand_set(&spec, &table(), ExpansionMethod::Near).unwrap_err();
        assert!(matches!(err, Error::EmptySpan(n) if n == "lost"));
    }

    #[test]
    fn recall_examples() {
        let r = RankedList::from_words(&["c", "d"]);
        assert_eq!(recall_at_k(&r, &["c"], 1).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, &["d"], 1).unwrap(), 0.0);
        assert_eq!(recall_at_k(&r, &["c", "d"], 2).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, &["c", "zzz"], 1).unwrap(), 1.0);
        assert!(matches!(recall_at_k(&r, &["zzz"], 1), Err(Error::EmptyTestSet)));
        assert!(recall_at_k(&r, &["c"], 0).is_err());
        assert!(recall_at_k::<&str>(&r, &[], 1).is_err());
    }

    #[test]
    fn median_examples() {
        let r = RankedList::from_words(&["c", "d", "x"]);
        assert_eq!(median_rank(&r, &["c"]).unwrap(), 1.0);
        assert_eq!(median_rank(&r, &["c", "x"]).unwrap(), 2.0);
        assert_eq!(median_rank(&r, &["c", "d", "x"]).unwrap(), 2.0);
        assert!(matches!(median_rank(&r, &["q"]), Err(Error::EmptyTestSet)));
        let ranks = r.test_ranks(&["x", "q"]).unwrap();
        assert_eq!((ranks.ranks.clone(), ranks.oov), (vec![3], 1));
    }

    #[test]
    fn word_set_validation() {
        assert!(WordSetSpec::new("s", vec![], words(&["a"])).is_err());
        assert!(WordSetSpec::new("s", words(&["a"]), words(&["a"])).is_err());
        assert!(WordSetSpec::new("s", words(&["a", "a"]), vec![]).is_err());
        assert!(WordSetSpec::new("s", words(&["a"]), words(&["b", "b"])).is_err());
        assert!(WordSetSpec::new("two words", words(&["a"]), vec![]).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let text = "set fruit\nspan apple banana\ntest orange\n\nset colour\nspan red\ntest\n";
        let sets = read_dataset(text.as_bytes()).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].span_words, ["apple", "banana"]);
        assert!(sets[1].test_words.is_empty());
        let mut buf = Vec::new();
        write_dataset(&mut buf, &sets).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn dataset_errors_carry_line_numbers() {
        let err = read_dataset("set a\nspan x\ntest w\n\nset b\nspam y\ntest z\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }), "{err:?}");
        let err = read_dataset("set a\nspan x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
        let err = read_dataset("set a\nspan x\ntest y\n\nset a\nspan x\ntest y\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err:?}");
    }

    fn set(name: &str, ws: &[&str]) -> WordSetSpec {
        let ws = words(ws);
        let (span, test) = ws.split_at(1);
        WordSetSpec::new(name, span.to_vec(), test.to_vec()).unwrap()
    }

    #[test]
    fn derived_intersection_example() {
        let sets = [set("X", &["a", "b", "c"]), set("Y", &["b", "c", "d"])];
        let params = DerivedSetParams {
            op: SetOp::Intersect,
            seed: 1,
            count: 1,
            union_cap: 50,
            intersect_min: 2,
        };
        let out = gen_derived_sets(&sets, &params).unwrap();
        let mut got: Vec<&String> = out[0].all_words().collect();
        got.sort();
        assert_eq!(got, ["b", "c"]);
        assert_eq!(out[0].name, "X&Y");

        let strict = DerivedSetParams { intersect_min: 3, ..params };
        assert!(matches!(
            gen_derived_sets(&sets, &strict),
            Err(Error::InsufficientPairs { accepted: 0, requested: 1 })
        ));
    }

    #[test]
    fn derived_union_is_capped() {
        let a: Vec<String> = (0..30).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..30).map(|i| format!("b{i}")).collect();
        let sets = [
            WordSetSpec::new("A", a[..5].to_vec(), a[5..].to_vec()).unwrap(),
            WordSetSpec::new("B", b[..5].to_vec(), b[5..].to_vec()).unwrap(),
        ];
        let params = DerivedSetParams {
            op: SetOp::Union,
            seed: 9,
            count: 1,
            union_cap: 50,
            intersect_min: 10,
        };
        let out = gen_derived_sets(&sets, &params).unwrap();
        assert_eq!(out[0].span_words.len(), DERIVED_SPAN_SIZE);
        assert_eq!(out[0].test_words.len(), 45);
        let pool: HashSet<&String> = a.iter().chain(&b).collect();
        assert!(out[0].all_words().all(|w| pool.contains(w)));

        let again = gen_derived_sets(&sets, &params).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn derived_sets_need_two_inputs() {
        let params = DerivedSetParams {
            op: SetOp::Union,
            seed: 0,
            count: 1,
            union_cap: 50,
            intersect_min: 10,
        };
        assert!(gen_derived_sets(&[set("X", &["a"])], &params).is_err());
    }
}
