//! Machine-readable output for the command-line tool.
//!
//! Every float is printed with exactly 12 significant digits, so reports are
//! byte-stable across runs and platforms.

use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::anchor::diversify_anchored;
use crate::diversify::{diversify_baseline, DiversifyParams, EvalStats, TopK};
use crate::error::QueryError;
use crate::features::FeatureEntry;
use crate::index::IndexBundle;
use crate::parallel::diversify_parallel;

const SIG_DIGITS: usize = 12;

/// `x` with 12 significant digits: positional for exponents -5..=11,
/// scientific otherwise.
pub fn format_fixed(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=11).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::from(sign);
    if exp >= 0 {
        let int_len = exp as usize + 1;
        out.push_str(&digits[..int_len]);
        if int_len < digits.len() {
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    out
}

/// A float serialized through [`format_fixed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_fixed(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_fixed(self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Baseline,
    Anchor,
    Parallel,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Anchor => "anchor",
            Algorithm::Parallel => "parallel",
        }
    }
}

/// Runs the chosen engine. `workers` only affects [`Algorithm::Parallel`].
pub fn run_search(
    keywords: &[String],
    params: DiversifyParams,
    index: &IndexBundle,
    algo: Algorithm,
    workers: usize,
) -> Result<(TopK, EvalStats), QueryError> {
    match algo {
        Algorithm::Baseline => diversify_baseline(keywords, params, index),
        Algorithm::Anchor => diversify_anchored(keywords, params, index),
        Algorithm::Parallel => diversify_parallel(keywords, params, index, workers),
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IntentRow {
    pub segments: Vec<String>,
    pub agg_mi: Fixed,
    pub relevance: Fixed,
    pub dif: Fixed,
    pub score: Fixed,
    pub results: Vec<String>,
}

/// Run-specific fields, present only when requested.
#[derive(Debug, Clone, Copy)]
pub struct RunInfo {
    pub workers: usize,
    pub stats: EvalStats,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchReport {
    pub query: Vec<String>,
    pub k: usize,
    pub m: usize,
    pub algo: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub intents: Vec<IntentRow>,
    pub phi: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<EvalStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl SearchReport {
    pub fn new(
        query: &[String],
        params: DiversifyParams,
        algo: Algorithm,
        top: &TopK,
        run: Option<RunInfo>,
    ) -> Self {
        let intents = top
            .entries
            .iter()
            .map(|e| IntentRow {
                segments: e.intent.segments.iter().map(ToString::to_string).collect(),
                agg_mi: Fixed(e.intent.agg_mi),
                relevance: Fixed(e.relevance),
                dif: Fixed(e.dif),
                score: Fixed(e.score),
                results: e.results.nodes().iter().map(ToString::to_string).collect(),
            })
            .collect();
        SearchReport {
            query: query.to_vec(),
            k: params.k,
            m: params.m,
            algo: algo.as_str(),
            workers: run.map(|r| r.workers),
            intents,
            phi: top.phi.iter().map(|(n, _)| n.to_string()).collect(),
            stats: run.map(|r| r.stats),
            elapsed_ms: run.map(|r| r.elapsed_ms),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per intent; segments and results are space-separated.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,intent,aggMi,relevance,dif,score,results\n");
        for (i, row) in self.intents.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                i + 1,
                row.segments.join(" "),
                row.agg_mi,
                row.relevance,
                row.dif,
                row.score,
                row.results.join(" ")
            );
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeatureRow {
    pub feature: String,
    pub mi: Fixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeatureReport {
    pub term: String,
    pub features: Vec<FeatureRow>,
}

impl FeatureReport {
    pub fn new(term: &str, entries: &[FeatureEntry]) -> Self {
        FeatureReport {
            term: term.to_string(),
            features: entries
                .iter()
                .map(|e| FeatureRow {
                    feature: e.feature.clone(),
                    mi: Fixed(e.mi),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,mi\n");
        for row in &self.features {
            let _ = writeln!(s, "{},{}", row.feature, row.mi);
        }
        s
    }
}
