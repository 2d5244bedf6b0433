//! Plain-text policy segmentation: headings become context, body text is
//! split into sentence-level clauses.
//!
//! Heading heuristics (markdown `#` prefixes, ALL-CAPS lines, short title
//! lines after a blank) and the sentence splitter (terminal punctuation
//! followed by whitespace and an uppercase letter, with an abbreviation
//! guard) are deliberately simple and deterministic: the pipeline receives
//! policies as plain text and favors reproducibility over linguistic
//! sophistication.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::sha256_hex;
use crate::types::Taxonomy;

/// One policy clause: a sentence-or-paragraph unit plus its heading context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    /// Stable hash of heading path + text (first 16 hex chars of sha-256).
    pub clause_id: String,
    pub heading_path: Vec<String>,
    pub text: String,
    pub taxonomy: Taxonomy,
}

impl Clause {
    pub fn new(heading_path: Vec<String>, text: String) -> Self {
        let mut payload = String::new();
        for h in &heading_path {
            payload.push_str(h);
            payload.push('\u{1f}');
        }
        payload.push('\u{1e}');
        payload.push_str(&text);
        let clause_id = sha256_hex(payload.as_bytes())[..16].to_string();
        Clause {
            clause_id,
            heading_path,
            text,
            taxonomy: Taxonomy::Other,
        }
    }
}

/// Collapses runs of whitespace to single spaces and trims.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "st", "no", "inc", "ltd", "co", "corp", "vs", "etc",
    "approx", "dept", "est", "art", "sec", "fig", "e.g", "i.e", "cf", "al", "u.s", "u.k",
];

fn is_abbreviation(token: &str) -> bool {
    let t = token.to_ascii_lowercase();
    if t.len() == 1 && t.chars().all(|c| c.is_ascii_alphabetic()) {
        return true; // single-letter initials ("J. Smith")
    }
    ABBREVIATIONS.contains(&t.as_str())
}

/// Splits a whitespace-normalized paragraph into sentences. A boundary is a
/// run of `.` `!` `?` (plus closing quotes/brackets) followed by whitespace
/// and an uppercase letter, unless the preceding word is a known
/// abbreviation or initial. Trailing text without terminal punctuation still
/// forms a final sentence.
pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let chars: Vec<char> = paragraph.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if c == '.' || c == '!' || c == '?' {
            // Extend over the full punctuation run and any closing marks.
            let mut end = i;
            while end + 1 < chars.len() && matches!(chars[end + 1], '.' | '!' | '?') {
                end += 1;
            }
            while end + 1 < chars.len()
                && matches!(chars[end + 1], '"' | '\'' | '\u{201d}' | '\u{2019}' | ')' | ']')
            {
                end += 1;
            }
            let next_nonspace = chars[end + 1..]
                .iter()
                .position(|ch| !ch.is_whitespace())
                .map(|off| end + 1 + off);
            let followed_by_space = end + 1 < chars.len() && chars[end + 1].is_whitespace();
            let next_upper = next_nonspace
                .map(|j| chars[j].is_uppercase() || chars[j] == '\u{201c}' || chars[j] == '"')
                .unwrap_or(false);
            let boundary = followed_by_space && next_upper && !{
                // Word immediately before the punctuation run.
                let mut k = i;
                let mut token = String::new();
                while k > 0 {
                    let p = chars[k - 1];
                    if p.is_alphanumeric() || p == '.' || p == '-' {
                        token.insert(0, p);
                        k -= 1;
                    } else {
                        break;
                    }
                }
                is_abbreviation(token.trim_matches('.'))
            };
            if boundary {
                let sentence: String = chars[start..=end].iter().collect();
                let sentence = sentence.trim().to_string();
                if !sentence.is_empty() {
                    sentences.push(sentence);
                }
                start = next_nonspace.unwrap_or(chars.len());
                i = start;
                continue;
            }
            i = end + 1;
            continue;
        }
        i += 1;
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        let tail = tail.trim().to_string();
        if !tail.is_empty() {
            sentences.push(tail);
        }
    }
    sentences
}

enum LineKind {
    Blank,
    Heading { level: u8, text: String },
    Body,
}

/// Classifies one raw line. `after_break` is true at document start and
/// after a blank or heading line; the short-title heuristic only fires
/// there, so wrapped body text is not mistaken for headings mid-paragraph.
fn classify_line(line: &str, after_break: bool) -> LineKind {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return LineKind::Blank;
    }
    // Markdown-style heading.
    if trimmed.starts_with('#') {
        let hashes = trimmed.chars().take_while(|&c| c == '#').count();
        let rest = trimmed[hashes..].trim();
        if hashes <= 6 && !rest.is_empty() {
            return LineKind::Heading {
                level: hashes as u8,
                text: normalize_whitespace(rest),
            };
        }
    }
    let has_alpha = trimmed.chars().any(|c| c.is_alphabetic());
    if !has_alpha {
        return LineKind::Body;
    }
    // ALL-CAPS heading (but a shouted sentence ending in .!? stays body).
    let all_caps = trimmed
        .chars()
        .filter(|c| c.is_alphabetic())
        .all(|c| c.is_uppercase());
    let sentence_end = trimmed
        .chars()
        .last()
        .map(|c| matches!(c, '.' | '!' | '?'))
        .unwrap_or(false);
    let word_count = trimmed.split_whitespace().count();
    if all_caps && !sentence_end && trimmed.chars().count() <= 80 && word_count <= 10 {
        return LineKind::Heading {
            level: 2,
            text: normalize_whitespace(trimmed),
        };
    }
    // Short title line: only at a paragraph break, no terminal punctuation.
    if after_break {
        let ends_with_punct = trimmed
            .chars()
            .last()
            .map(|c| matches!(c, '.' | '!' | '?' | ',' | ';' | ':'))
            .unwrap_or(true);
        let first_alpha_upper = trimmed
            .chars()
            .find(|c| c.is_alphabetic())
            .map(|c| c.is_uppercase())
            .unwrap_or(false);
        if !ends_with_punct
            && first_alpha_upper
            && trimmed.chars().count() <= 60
            && word_count <= 8
        {
            return LineKind::Heading {
                level: 2,
                text: normalize_whitespace(trimmed),
            };
        }
    }
    LineKind::Body
}

/// Segments a plain-text policy into clauses. Heading lines update the
/// heading context and produce no clauses; every body sentence becomes
/// exactly one clause, in document order.
pub fn segment_policy(text: &str) -> Result<Vec<Clause>> {
    if text.trim().is_empty() {
        return Err(Error::Validation(
            "policy text is empty or whitespace-only".into(),
        ));
    }
    let mut clauses = Vec::new();
    // Stack of (level, heading) pairs; the path is the texts in order.
    let mut heading_stack: Vec<(u8, String)> = Vec::new();
    let mut paragraph: Vec<String> = Vec::new();
    let mut after_break = true;

    let flush =
        |paragraph: &mut Vec<String>, stack: &[(u8, String)], clauses: &mut Vec<Clause>| {
            if paragraph.is_empty() {
                return;
            }
            let joined = normalize_whitespace(&paragraph.join(" "));
            paragraph.clear();
            if joined.is_empty() {
                return;
            }
            let path: Vec<String> = stack.iter().map(|(_, h)| h.clone()).collect();
            for sentence in split_sentences(&joined) {
                clauses.push(Clause::new(path.clone(), sentence));
            }
        };

    for line in text.lines() {
        match classify_line(line, after_break) {
            LineKind::Blank => {
                flush(&mut paragraph, &heading_stack, &mut clauses);
                after_break = true;
            }
            LineKind::Heading { level, text } => {
                flush(&mut paragraph, &heading_stack, &mut clauses);
                while heading_stack
                    .last()
                    .map(|(l, _)| *l >= level)
                    .unwrap_or(false)
                {
                    heading_stack.pop();
                }
                heading_stack.push((level, text));
                after_break = true;
            }
            LineKind::Body => {
                paragraph.push(line.trim().to_string());
                after_break = false;
            }
        }
    }
    flush(&mut paragraph, &heading_stack, &mut clauses);
    Ok(clauses)
}

/// Precision/recall/F1 of predicted clause boundaries against a gold
/// segmentation of the same text. Boundaries are compared as character
/// offsets into the whitespace-stripped concatenation, so differing
/// spacing conventions do not affect the score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEval {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_boundaries: usize,
    pub predicted_boundaries: usize,
}

fn boundary_offsets(clauses: &[String]) -> Vec<usize> {
    let mut offsets = Vec::new();
    let mut pos = 0usize;
    for (i, text) in clauses.iter().enumerate() {
        pos += text.chars().filter(|c| !c.is_whitespace()).count();
        if i + 1 < clauses.len() {
            offsets.push(pos);
        }
    }
    offsets
}

pub fn evaluate_boundaries(gold: &[String], predicted: &[String]) -> BoundaryEval {
    let gold_b = boundary_offsets(gold);
    let pred_b = boundary_offsets(predicted);
    let hits = pred_b.iter().filter(|b| gold_b.contains(b)).count();
    let precision = if pred_b.is_empty() {
        if gold_b.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits as f64 / pred_b.len() as f64
    };
    let recall = if gold_b.is_empty() {
        if pred_b.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        hits as f64 / gold_b.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BoundaryEval {
        precision,
        recall,
        f1,
        gold_boundaries: gold_b.len(),
        predicted_boundaries: pred_b.len(),
    }
}
