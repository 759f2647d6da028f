//! Rule-based extraction of per-lesion scores from semi-structured
//! radiology report text.
//!
//! Extraction runs in two steps. First the report body is split into
//! per-finding sections by matching lesion headers of the form
//! `[finding keyword] (number indicator) [number]`, where the number part
//! may group several identifiers (`2+3`). Scores are then extracted per
//! section. When no section yields scores, strict pattern matching on the
//! full report accepts only joint `T2W/DWI/DCE score: x/y/±` matches, so
//! stray PI-RADS mentions (for example in follow-up prose) cannot produce
//! findings on their own.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which header keywords are recognised when splitting reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LanguageProfile {
    Dutch,
    English,
    /// Dutch and English keywords together.
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub case_id: String,
    pub body: String,
}

impl Report {
    pub fn new(case_id: impl Into<String>, body: impl Into<String>) -> Result<Self> {
        let body = body.into();
        if body.trim().is_empty() {
            return Err(Error::invalid("report body is empty"));
        }
        Ok(Report { case_id: case_id.into(), body })
    }
}

/// One per-finding section of a report. A header such as `afwijking 2+3`
/// yields `identifiers = [2, 3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LesionSection {
    pub identifiers: Vec<u32>,
    pub text: String,
}

/// DCE is reported as a sign rather than a 1-5 score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DceSign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl fmt::Display for DceSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DceSign::Positive => "+",
            DceSign::Negative => "-",
        })
    }
}

/// Scores for one finding. `multiplicity` is the number of lesion
/// identifiers the originating section covered (grouped findings count
/// more than once towards `n_sig`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingScores {
    pub pirads: Option<u8>,
    pub t2w: Option<u8>,
    pub dwi: Option<u8>,
    pub dce: Option<DceSign>,
    pub multiplicity: u32,
}

impl FindingScores {
    fn has_any_score(&self) -> bool {
        self.pirads.is_some() || self.t2w.is_some() || self.dwi.is_some() || self.dce.is_some()
    }

    /// Number of clinically significant findings this entry represents.
    pub fn significant_count(&self) -> u32 {
        match self.pirads {
            Some(p) if p >= 4 => self.multiplicity,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionStatus {
    Sectioned,
    StrictFallback,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportExtraction {
    pub case_id: String,
    pub findings: Vec<FindingScores>,
    pub n_sig: u32,
    pub status: ExtractionStatus,
}

/// Case-fold and strip diacritics so keyword matching is insensitive to
/// both. The mapping is char-for-char, so section offsets computed on the
/// folded text line up with it.
fn fold(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            'á' | 'à' | 'â' | 'ä' | 'Á' | 'À' | 'Â' | 'Ä' => 'a',
            'é' | 'è' | 'ê' | 'ë' | 'É' | 'È' | 'Ê' | 'Ë' => 'e',
            'í' | 'ì' | 'î' | 'ï' | 'Í' | 'Ì' | 'Î' | 'Ï' => 'i',
            'ó' | 'ò' | 'ô' | 'ö' | 'Ó' | 'Ò' | 'Ô' | 'Ö' => 'o',
            'ú' | 'ù' | 'û' | 'ü' | 'Ú' | 'Ù' | 'Û' | 'Ü' => 'u',
            'ç' | 'Ç' => 'c',
            'ñ' | 'Ñ' => 'n',
            _ => c.to_ascii_lowercase(),
        })
        .collect()
}

const DUTCH_KEYWORDS: &str = "afwijking|laesie|markering|regio";
const ENGLISH_KEYWORDS: &str = "lesion|finding";

fn header_regex(profile: LanguageProfile) -> Regex {
    static DUTCH: OnceLock<Regex> = OnceLock::new();
    static ENGLISH: OnceLock<Regex> = OnceLock::new();
    static BOTH: OnceLock<Regex> = OnceLock::new();
    let build = |keywords: &str| {
        Regex::new(&format!(
            r"\b(?:{keywords})\s*(?:nr\.?|mark|nummer)?\s*(\d+(?:\s*\+\s*\d+)*)\b"
        ))
        .expect("header pattern compiles")
    };
    match profile {
        LanguageProfile::Dutch => DUTCH.get_or_init(|| build(DUTCH_KEYWORDS)),
        LanguageProfile::English => ENGLISH.get_or_init(|| build(ENGLISH_KEYWORDS)),
        LanguageProfile::Both => {
            BOTH.get_or_init(|| build(&format!("{DUTCH_KEYWORDS}|{ENGLISH_KEYWORDS}")))
        }
    }
    .clone()
}

fn pirads_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"pi-?rads\s*(?:v2\s*category)?\s*:?\s*([1-5])\b").unwrap()
    })
}

fn joint_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"t2w\s*/\s*dwi\s*/\s*dce\s*score\s*:?\s*([1-5])\s*/\s*([1-5])\s*/\s*([+-])")
            .unwrap()
    })
}

fn t2w_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"t2w\s*(?:score)?\s*:?\s*([1-5])\b").unwrap())
}

fn dwi_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"dwi\s*(?:score)?\s*:?\s*([1-5])\b").unwrap())
}

fn dce_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"dce\s*(?:score)?\s*:?\s*([+-])").unwrap())
}

fn parse_identifiers(m: &str) -> Vec<u32> {
    m.split('+')
        .filter_map(|p| p.trim().parse::<u32>().ok())
        .filter(|&n| n >= 1)
        .collect()
}

/// Split a report body into per-finding sections. Section text runs from
/// the end of its header to the start of the next header (or end of body).
/// Returns an empty list when no header matches.
pub fn split_sections(report: &Report, profile: LanguageProfile) -> Vec<LesionSection> {
    let folded = fold(&report.body);
    let re = header_regex(profile);
    let matches: Vec<(usize, usize, Vec<u32>)> = re
        .captures_iter(&folded)
        .filter_map(|c| {
            let whole = c.get(0).unwrap();
            let ids = parse_identifiers(c.get(1).unwrap().as_str());
            if ids.is_empty() {
                None
            } else {
                Some((whole.start(), whole.end(), ids))
            }
        })
        .collect();
    let mut sections = Vec::with_capacity(matches.len());
    for (i, (_, end, ids)) in matches.iter().enumerate() {
        let text_end = matches.get(i + 1).map_or(folded.len(), |m| m.0);
        sections.push(LesionSection {
            identifiers: ids.clone(),
            text: folded[*end..text_end].to_string(),
        });
    }
    sections
}

fn capture_u8(re: &Regex, text: &str) -> Option<u8> {
    re.captures(text).and_then(|c| {
        c.iter()
            .skip(1)
            .flatten()
            .next()
            .and_then(|m| m.as_str().parse::<u8>().ok())
    })
}

fn sign_of(s: &str) -> DceSign {
    if s == "+" {
        DceSign::Positive
    } else {
        DceSign::Negative
    }
}

/// Extract scores from one section. Returns `None` when no score pattern
/// matches at all; the caller treats the section as score-less.
pub fn extract_scores_section(section: &LesionSection) -> Option<FindingScores> {
    let text = fold(&section.text);
    let mut scores = FindingScores {
        pirads: None,
        t2w: None,
        dwi: None,
        dce: None,
        multiplicity: section.identifiers.len() as u32,
    };
    if let Some(c) = joint_regex().captures(&text) {
        scores.t2w = c[1].parse().ok();
        scores.dwi = c[2].parse().ok();
        scores.dce = Some(sign_of(&c[3]));
    } else {
        scores.t2w = capture_u8(t2w_regex(), &text);
        scores.dwi = capture_u8(dwi_regex(), &text);
        scores.dce = dce_regex().captures(&text).map(|c| sign_of(&c[1]));
    }
    scores.pirads = capture_u8(pirads_regex(), &text);
    if scores.has_any_score() {
        Some(scores)
    } else {
        None
    }
}

/// Strict full-report fallback: only joint `T2W/DWI/DCE` matches are
/// accepted, each paired with the PI-RADS mention at the same document-order
/// position. A report with PI-RADS mentions but no joint match yields
/// nothing.
pub fn extract_strict(report: &Report) -> Vec<FindingScores> {
    let folded = fold(&report.body);
    let joints: Vec<_> = joint_regex().captures_iter(&folded).collect();
    if joints.is_empty() {
        return Vec::new();
    }
    let pirads: Vec<u8> = pirads_regex()
        .captures_iter(&folded)
        .filter_map(|c| c[1].parse().ok())
        .collect();
    joints
        .iter()
        .enumerate()
        .map(|(i, c)| FindingScores {
            pirads: pirads.get(i).copied(),
            t2w: c[1].parse().ok(),
            dwi: c[2].parse().ok(),
            dce: Some(sign_of(&c[3])),
            multiplicity: 1,
        })
        .collect()
}

/// Two-step extraction: sectioned when at least one section yields scores,
/// otherwise strict fallback, otherwise empty. Never fails on arbitrary
/// text.
pub fn extract(report: &Report, profile: LanguageProfile) -> ReportExtraction {
    let sectioned: Vec<FindingScores> = split_sections(report, profile)
        .iter()
        .filter_map(extract_scores_section)
        .collect();
    let (findings, status) = if !sectioned.is_empty() {
        (sectioned, ExtractionStatus::Sectioned)
    } else {
        let strict = extract_strict(report);
        if strict.is_empty() {
            (Vec::new(), ExtractionStatus::Empty)
        } else {
            (strict, ExtractionStatus::StrictFallback)
        }
    };
    let n_sig = findings.iter().map(FindingScores::significant_count).sum();
    ReportExtraction {
        case_id: report.case_id.clone(),
        findings,
        n_sig,
        status,
    }
}

/// Confusion matrix over significant-finding counts, bucketed 0..=5 with 5
/// meaning "5 or more".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `matrix[truth][predicted]`
    pub matrix: [[u32; 6]; 6],
    pub total: u32,
    pub accuracy: f64,
}

fn bucket(n: u32) -> usize {
    n.min(5) as usize
}

/// Tally predicted against true significant-finding counts.
pub fn evaluate_counts(predicted: &[u32], truth: &[u32]) -> Result<ConfusionMatrix> {
    if predicted.is_empty() {
        return Err(Error::invalid("count lists are empty"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "count list lengths differ: {} vs {}",
            predicted.len(),
            truth.len()
        )));
    }
    let mut matrix = [[0u32; 6]; 6];
    for (&p, &t) in predicted.iter().zip(truth) {
        matrix[bucket(t)][bucket(p)] += 1;
    }
    let total = predicted.len() as u32;
    let trace: u32 = (0..6).map(|i| matrix[i][i]).sum();
    Ok(ConfusionMatrix {
        matrix,
        total,
        accuracy: trace as f64 / total as f64,
    })
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "truth \\ predicted |    0    1    2    3    4   5+")?;
        for (t, row) in self.matrix.iter().enumerate() {
            let label = if t == 5 { "5+".into() } else { t.to_string() };
            write!(f, "{label:>17} |")?;
            for v in row {
                write!(f, " {v:>4}")?;
            }
            writeln!(f)?;
        }
        write!(f, "accuracy: {:.4} ({} cases)", self.accuracy, self.total)
    }
}
