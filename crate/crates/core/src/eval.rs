//! Experiment harnesses: STS correlation, set-retrieval reports and the
//! subspace-algebra file operations behind the CLI.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::embeddings::{load_token_embeddings, EmbeddingTable, SentenceEmbedding};
use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::retrieval::{expand_set, median, ExpansionMethod, WordSetSpec};
use crate::similarity::{avg_cos, bertscore, subspace_bertscore, ScoreTriple, Weighting};
use crate::subspace::{read_vectors, Subspace};

/// Average (fractional) ranks, 1-based.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j share the mean of ranks i+1..=j+1.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "sequences differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    if xs.iter().chain(ys).any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite observation"));
    }
    let constant = |s: &[f64]| s.iter().all(|&x| x == s[0]);
    if constant(xs) || constant(ys) {
        return Err(Error::DegenerateInput("constant sequence has no ranking".into()));
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsPair {
    pub pair_id: String,
    pub gold: f64,
    pub id_a: String,
    pub id_b: String,
}

/// Reads `pair_id<TAB>gold<TAB>id_a<TAB>id_b` lines.
pub fn read_pairs<R: BufRead>(reader: R) -> Result<Vec<StsPair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [pair_id, gold, id_a, id_b] = fields.as_slice() else {
            return Err(Error::parse(line_no, format!("expected 4 tab-separated fields, found {}", fields.len())));
        };
        let gold = gold
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|g| g.is_finite())
            .ok_or_else(|| Error::parse(line_no, format!("invalid gold score `{gold}`")))?;
        out.push(StsPair {
            pair_id: pair_id.to_string(),
            gold,
            id_a: id_a.to_string(),
            id_b: id_b.to_string(),
        });
    }
    Ok(out)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<StsPair>> {
    read_pairs(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StsMethod {
    SubspaceBertScore,
    BertScore,
    AvgCos,
}

impl FromStr for StsMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subspace_bertscore" => Ok(StsMethod::SubspaceBertScore),
            "bertscore" => Ok(StsMethod::BertScore),
            "avg_cos" => Ok(StsMethod::AvgCos),
            other => Err(Error::invalid(format!("unknown STS method `{other}`"))),
        }
    }
}

impl fmt::Display for StsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StsMethod::SubspaceBertScore => "subspace_bertscore",
            StsMethod::BertScore => "bertscore",
            StsMethod::AvgCos => "avg_cos",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    P,
    R,
    F,
}

impl Metric {
    pub fn pick(&self, s: &ScoreTriple) -> f64 {
        match self {
            Metric::P => s.precision,
            Metric::R => s.recall,
            Metric::F => s.f,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Metric::P),
            "R" | "r" => Ok(Metric::R),
            "F" | "f" => Ok(Metric::F),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::P => "P",
            Metric::R => "R",
            Metric::F => "F",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub weighting: String,
    pub metric: Metric,
    pub spearman_rho: f64,
    pub n_pairs: usize,
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "method\tweighting\tmetric\tspearman_rho\tn_pairs\n{}\t{}\t{}\t{:.9}\t{}\n",
            self.method, self.weighting, self.metric, self.spearman_rho, self.n_pairs
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub pair_id: String,
    pub scores: ScoreTriple,
}

#[derive(Debug, Clone)]
pub struct StsOutcome {
    pub report: EvalReport,
    /// In pair-file order.
    pub pairs: Vec<PairScore>,
}

impl StsOutcome {
    /// `pair_id<TAB>P<TAB>R<TAB>F`, nine decimals.
    pub fn pairs_tsv(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            let s = &p.scores;
            writeln!(out, "{}\t{:.9}\t{:.9}\t{:.9}", p.pair_id, s.precision, s.recall, s.f)
                .expect("writing to a String");
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StsConfig {
    pub method: StsMethod,
    pub metric: Metric,
    pub weighting: Weighting,
}

impl StsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.method == StsMethod::AvgCos {
            if self.metric != Metric::F {
                return Err(Error::InvalidCombination(
                    "avg_cos has no precision/recall decomposition; use --metric F".into(),
                ));
            }
            if self.weighting != Weighting::Uniform {
                return Err(Error::InvalidCombination("avg_cos takes no token weighting".into()));
            }
        }
        Ok(())
    }
}

/// Scores every pair and correlates the chosen metric with the gold scores.
///
/// Pairs are scored in parallel; each pair's arithmetic is sequential in
/// token order, so scores do not depend on the thread count.
pub fn run_sts(pairs: &[StsPair], sentences: &[SentenceEmbedding], config: &StsConfig) -> Result<StsOutcome> {
    config.validate()?;
    let by_id: HashMap<&str, &SentenceEmbedding> = sentences.iter().map(|s| (s.id(), s)).collect();
    let resolve = |id: &str| {
        by_id
            .get(id)
            .copied()
            .ok_or_else(|| Error::MissingSentence(id.to_owned()))
    };
    let mut seen = HashSet::new();
    for p in pairs {
        resolve(&p.id_a)?;
        resolve(&p.id_b)?;
        if !seen.insert(p.pair_id.as_str()) {
            return Err(Error::invalid(format!("duplicate pair id `{}`", p.pair_id)));
        }
    }

    let scored: Vec<PairScore> = pairs
        .par_iter()
        .map(|p| {
            let (a, b) = (resolve(&p.id_a)?, resolve(&p.id_b)?);
            let scores = match config.method {
                StsMethod::SubspaceBertScore => subspace_bertscore(a, b, config.weighting)?,
                StsMethod::BertScore => bertscore(a, b, config.weighting)?,
                StsMethod::AvgCos => {
                    let c = avg_cos(a, b)?;
                    ScoreTriple {
                        precision: c,
                        recall: c,
                        f: c,
                    }
                }
            };
            Ok(PairScore {
                pair_id: p.pair_id.clone(),
                scores,
            })
        })
        .collect::<Result<_>>()?;

    let system: Vec<f64> = scored.iter().map(|p| config.metric.pick(&p.scores)).collect();
    let gold: Vec<f64> = pairs.iter().map(|p| p.gold).collect();
    let rho = spearman(&system, &gold)?;
    Ok(StsOutcome {
        report: EvalReport {
            method: config.method.to_string(),
            weighting: config.weighting.to_string(),
            metric: config.metric,
            spearman_rho: rho,
            n_pairs: pairs.len(),
        },
        pairs: scored,
    })
}

/// File-level STS run: writes `report.tsv` and `pairs.tsv` into `out_dir`.
pub fn run_sts_files(
    pairs_path: &Path,
    embeddings_path: &Path,
    config: &StsConfig,
    out_dir: &Path,
) -> Result<StsOutcome> {
    config.validate()?;
    let pairs = load_pairs(pairs_path)?;
    let sentences = load_token_embeddings(embeddings_path)?;
    let outcome = run_sts(&pairs, &sentences, config)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("report.tsv"), outcome.report.to_tsv())?;
    fs::write(out_dir.join("pairs.tsv"), outcome.pairs_tsv())?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetResult {
    pub name: String,
    /// One value per requested k.
    pub recalls: Vec<f64>,
    pub median: f64,
    /// 1-based ranks of the in-vocabulary test words.
    pub ranks: Vec<usize>,
    pub test_oov: usize,
    pub span_oov: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub method: ExpansionMethod,
    pub ks: Vec<usize>,
    pub sets: Vec<SetResult>,
    /// Mean over sets of each R@k.
    pub macro_recalls: Vec<f64>,
    /// Median over all test-word ranks pooled across sets.
    pub pooled_median: f64,
    /// Median of the per-set medians.
    pub median_of_medians: f64,
}

pub const POOLED_ROW: &str = "__macro_pooled__";
pub const SET_MEDIAN_ROW: &str = "__macro_set_median__";

impl RetrievalReport {
    /// `set_name<TAB>method<TAB>R@k…<TAB>median`, one row per set followed by
    /// two macro rows: [`POOLED_ROW`] carries the pooled median and
    /// [`SET_MEDIAN_ROW`] the median of per-set medians.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("set_name\tmethod");
        for k in &self.ks {
            write!(out, "\tR@{k}").unwrap();
        }
        out.push_str("\tmedian\n");
        let mut row = |name: &str, recalls: &[f64], median: f64| {
            write!(out, "{name}\t{}", self.method).unwrap();
            for r in recalls {
                write!(out, "\t{r:.6}").unwrap();
            }
            writeln!(out, "\t{median:.1}").unwrap();
        };
        for s in &self.sets {
            row(&s.name, &s.recalls, s.median);
        }
        row(POOLED_ROW, &self.macro_recalls, self.pooled_median);
        row(SET_MEDIAN_ROW, &self.macro_recalls, self.median_of_medians);
        out
    }
}

pub fn run_retrieval(
    sets: &[WordSetSpec],
    table: &EmbeddingTable,
    method: ExpansionMethod,
    ks: &[usize],
) -> Result<RetrievalReport> {
    if sets.is_empty() {
        return Err(Error::invalid("dataset has no sets"));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("k values must be positive"));
    }
    let mut results = Vec::with_capacity(sets.len());
    for spec in sets {
        let ranking = expand_set(spec, table, method)?;
        let ranks = ranking.test_ranks(&spec.test_words)?;
        results.push(SetResult {
            name: spec.name.clone(),
            recalls: ks.iter().map(|&k| ranks.recall_at(k)).collect(),
            median: ranks.median(),
            ranks: ranks.ranks,
            test_oov: ranks.oov,
            span_oov: ranking.span_oov.len(),
        });
    }
    let n = results.len() as f64;
    let macro_recalls = (0..ks.len())
        .map(|i| results.iter().map(|r| r.recalls[i]).sum::<f64>() / n)
        .collect();
    let pooled: Vec<f64> = results.iter().flat_map(|r| r.ranks.iter().map(|&x| x as f64)).collect();
    let medians: Vec<f64> = results.iter().map(|r| r.median).collect();
    Ok(RetrievalReport {
        method,
        ks: ks.to_vec(),
        pooled_median: median(&pooled).expect("every set has a ranked test word"),
        median_of_medians: median(&medians).expect("at least one set"),
        macro_recalls,
        sets: results,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgebraOp {
    Union,
    Intersect { alpha: f64 },
}

#[derive(Debug, Clone)]
pub enum AlgebraOutput {
    Subspace(Subspace),
    Score(f64),
}

impl AlgebraOutput {
    /// Subspace file text, or the score with nine decimals.
    pub fn to_text(&self) -> String {
        match self {
            AlgebraOutput::Subspace(s) => s.to_text(),
            AlgebraOutput::Score(x) => format!("{x:.9}\n"),
        }
    }
}

pub fn read_subspace_file(path: &Path) -> Result<Subspace> {
    Subspace::read_from(BufReader::new(File::open(path)?))
}

pub fn read_vector_file(path: &Path) -> Result<Vec<DenseVector>> {
    read_vectors(BufReader::new(File::open(path)?))
}

/// Span of the vectors in a file. `dim` is required only when the file is empty.
pub fn algebra_span(vectors: &Path, dim: Option<usize>) -> Result<AlgebraOutput> {
    let vs = read_vector_file(vectors)?;
    let d = match (vs.first(), dim) {
        (Some(v), Some(d)) if v.dim() != d => {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.dim(),
            })
        }
        (Some(v), _) => v.dim(),
        (None, Some(d)) => d,
        (None, None) => return Err(Error::invalid("empty vector file needs an explicit dimension")),
    };
    Ok(AlgebraOutput::Subspace(Subspace::span(d, &vs)?))
}

pub fn algebra_binary(a: &Path, b: &Path, op: AlgebraOp) -> Result<AlgebraOutput> {
    let (a, b) = (read_subspace_file(a)?, read_subspace_file(b)?);
    let out = match op {
        AlgebraOp::Union => a.union(&b)?,
        AlgebraOp::Intersect { alpha } => a.intersection(&b, alpha)?,
    };
    Ok(AlgebraOutput::Subspace(out))
}

pub fn algebra_complement(a: &Path) -> Result<AlgebraOutput> {
    Ok(AlgebraOutput::Subspace(read_subspace_file(a)?.complement()))
}

/// Soft membership of the single vector in `vector` against `subspace`.
pub fn algebra_member(vector: &Path, subspace: &Path) -> Result<AlgebraOutput> {
    let vs = read_vector_file(vector)?;
    let [v] = vs.as_slice() else {
        return Err(Error::invalid(format!("expected one vector, found {}", vs.len())));
    };
    let s = read_subspace_file(subspace)?;
    Ok(AlgebraOutput::Score(s.soft_membership(v)?))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
