//! Sentence-pair similarity.
//!
//! Both scorers share the same recall/precision skeleton: every token of one
//! sentence gets an indicator value against the other sentence, and the
//! values are averaged with per-token weights. [`bertscore`] uses the
//! maximum cosine to any single token; [`subspace_bertscore`] uses the soft
//! membership of the token in the span of the other sentence.

use std::fmt;
use std::str::FromStr;

use crate::embeddings::{mean_vector, SentenceEmbedding};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseVector};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl ScoreTriple {
    /// Fills in `f` as the harmonic mean, or 0 when `P + R ≤ 0`.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        let sum = precision + recall;
        let f = if sum > 0.0 {
            2.0 * precision * recall / sum
        } else {
            0.0
        };
        ScoreTriple { precision, recall, f }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Each token weighted by the L2 norm of its vector.
    L2Norm,
}

impl Weighting {
    pub fn weight(&self, v: &DenseVector) -> f64 {
        match self {
            Weighting::Uniform => 1.0,
            Weighting::L2Norm => v.norm(),
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "l2" | "l2_norm" => Ok(Weighting::L2Norm),
            other => Err(Error::invalid(format!("unknown weighting `{other}`"))),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::L2Norm => "l2",
        })
    }
}

/// Maximum cosine similarity between `a` and any of `others`.
pub fn vector_indicator(a: &DenseVector, others: &[DenseVector]) -> Result<f64> {
    if others.is_empty() {
        return Err(Error::invalid("indicator against an empty vector set"));
    }
    let mut best = f64::NEG_INFINITY;
    for b in others {
        best = best.max(linalg::cosine(a.as_slice(), b.as_slice())?);
    }
    Ok(best)
}

fn check_pair(a: &SentenceEmbedding, b: &SentenceEmbedding) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Weighted mean of `indicator` over the tokens of `sentence`, in token order.
fn weighted_mean<F>(sentence: &SentenceEmbedding, w: Weighting, mut indicator: F) -> Result<f64>
where
    F: FnMut(&DenseVector) -> Result<f64>,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for v in sentence.vectors() {
        let weight = w.weight(v);
        num += weight * indicator(v)?;
        den += weight;
    }
    if den <= 0.0 {
        return Err(Error::invalid(format!(
            "sentence `{}` has zero total weight",
            sentence.id()
        )));
    }
    Ok(num / den)
}

/// Max-cosine BERTScore: recall matches `a`'s tokens against `b`, precision
/// the other way round.
pub fn bertscore(a: &SentenceEmbedding, b: &SentenceEmbedding, w: Weighting) -> Result<ScoreTriple> {
    check_pair(a, b)?;
    let recall = weighted_mean(a, w, |v| vector_indicator(v, b.vectors()))?;
    let precision = weighted_mean(b, w, |v| vector_indicator(v, a.vectors()))?;
    Ok(ScoreTriple::from_precision_recall(precision, recall))
}

/// SubspaceBERTScore: recall is the weighted mean soft membership of `a`'s
/// tokens in the span of `b`'s tokens; precision swaps the roles. The
/// averages run over tokens, not over basis directions.
pub fn subspace_bertscore(
    a: &SentenceEmbedding,
    b: &SentenceEmbedding,
    w: Weighting,
) -> Result<ScoreTriple> {
    check_pair(a, b)?;
    let span_a = Subspace::span(a.dim(), a.vectors())?;
    let span_b = Subspace::span(b.dim(), b.vectors())?;
    if span_a.rank() == 0 || span_b.rank() == 0 {
        return Err(Error::invalid("sentence has only zero vectors"));
    }
    let recall = weighted_mean(a, w, |v| span_b.soft_membership(v))?;
    let precision = weighted_mean(b, w, |v| span_a.soft_membership(v))?;
    Ok(ScoreTriple::from_precision_recall(precision, recall))
}

/// Cosine between the mean token vectors of the two sentences.
pub fn avg_cos(a: &SentenceEmbedding, b: &SentenceEmbedding) -> Result<f64> {
    check_pair(a, b)?;
    linalg::cosine(&mean_vector(a), &mean_vector(b))
        .map_err(|_| Error::invalid("mean token vector is zero"))
}
