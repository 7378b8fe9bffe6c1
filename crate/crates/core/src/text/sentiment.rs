//! Sentiment scoring: a pluggable scorer contract and a rule-based lexicon scorer.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::tokenize::words;
use super::TextError;

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Lexicon valences live on [-4, 4] in files and on [-1, 1] internally.
const VALENCE_SCALE: f64 = 4.0;
/// Normalization constant of the saturating map, on the internal scale.
const SATURATION_ALPHA: f64 = 15.0 / (VALENCE_SCALE * VALENCE_SCALE);
const NEGATION_SCALAR: f64 = -0.74;
const BOOST: f64 = 0.293 / VALENCE_SCALE;
const WINDOW: usize = 3;

const NEGATORS: &[&str] = &[
    "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "nowhere", "cannot",
    "without", "hardly", "barely", "rarely", "seldom", "aint", "dont", "didnt", "doesnt", "isnt",
    "wasnt", "werent", "wont", "wouldnt", "couldnt", "shouldnt", "cant", "havent", "hasnt",
];

const BOOSTERS: &[&str] = &[
    "very",
    "really",
    "extremely",
    "incredibly",
    "super",
    "so",
    "absolutely",
    "totally",
    "truly",
    "completely",
    "highly",
    "especially",
    "exceptionally",
    "most",
    "utterly",
    "quite",
    "too",
];

const DAMPENERS: &[&str] = &[
    "slightly",
    "somewhat",
    "kinda",
    "sorta",
    "marginally",
    "little",
    "bit",
    "fairly",
    "mostly",
    "partly",
];

/// Maps text to a sentiment score in [-1, 1].
pub trait SentimentScorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, text: &str) -> f64;
}

/// Term valences, normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    valences: HashMap<String, f64>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_reader(BUNDLED_LEXICON.as_bytes()).expect("bundled lexicon parses")
    }
}

impl Lexicon {
    /// Reads `term<TAB>valence` lines with valence in [-4, 4]. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TextError> {
        let mut valences = HashMap::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = idx + 1;
            let bad = |reason: String| TextError::Lexicon {
                line: line_no,
                reason,
            };
            let line = line.map_err(|e| bad(e.to_string()))?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            let term = fields.next().unwrap_or_default().trim().to_lowercase();
            let valence = fields
                .next()
                .ok_or_else(|| bad("expected term<TAB>valence".into()))?;
            let v: f64 = valence
                .trim()
                .parse()
                .map_err(|_| bad(format!("valence {valence:?} is not a number")))?;
            if !(-VALENCE_SCALE..=VALENCE_SCALE).contains(&v) {
                return Err(bad(format!("valence {v} outside [-4, 4]")));
            }
            if term.is_empty() {
                return Err(bad("empty term".into()));
            }
            valences.insert(term, v / VALENCE_SCALE);
        }
        Ok(Self { valences })
    }

    pub fn from_path(path: &Path) -> Result<Self, TextError> {
        let f = std::fs::File::open(path).map_err(|source| TextError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_reader(f)
    }

    pub fn valence(&self, term: &str) -> Option<f64> {
        self.valences.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }
}

fn is_negator(w: &str) -> bool {
    NEGATORS.contains(&w) || w.ends_with("n't")
}

/// Rule-based score of raw text.
///
/// Each lexicon hit is boosted or damped by intensifiers among the three
/// preceding words (weight 1, 0.95, 0.9 by distance) and flipped by a negator in
/// the same window. The sum s is mapped to s / sqrt(s^2 + alpha).
pub fn lexicon_sentiment(text: &str, lexicon: &Lexicon) -> f64 {
    let tokens: Vec<String> = words(text).collect();
    let mut sum = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let Some(mut v) = lexicon.valence(tok) else {
            continue;
        };
        if v == 0.0 {
            continue;
        }
        let mut negated = false;
        for dist in 1..=WINDOW.min(i) {
            let prev = tokens[i - dist].as_str();
            let weight = 1.0 - 0.05 * (dist - 1) as f64;
            if BOOSTERS.contains(&prev) {
                v += v.signum() * BOOST * weight;
            } else if DAMPENERS.contains(&prev) {
                v -= v.signum() * BOOST * weight;
            } else if is_negator(prev) {
                negated = true;
            }
        }
        if negated {
            v *= NEGATION_SCALAR;
        }
        sum += v;
    }
    if sum == 0.0 {
        return 0.0;
    }
    (sum / (sum * sum + SATURATION_ALPHA).sqrt()).clamp(-1.0, 1.0)
}

/// [`SentimentScorer`] backed by a [`Lexicon`].
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    name: String,
    lexicon: Lexicon,
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::new("lexicon", Lexicon::default())
    }
}

impl LexiconScorer {
    pub fn new(name: impl Into<String>, lexicon: Lexicon) -> Self {
        Self {
            name: name.into(),
            lexicon,
        }
    }
}

impl SentimentScorer for LexiconScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, text: &str) -> f64 {
        lexicon_sentiment(text, &self.lexicon)
    }
}

/// Linear map from [-1, 1] onto the rating scale [1, 5].
pub fn rescale_polarity(s: f64) -> f64 {
    2.0 * (s.clamp(-1.0, 1.0) + 1.0) + 1.0
}

/// Mean of the scorers' outputs, rescaled into [1, 5].
pub fn polarity(text: &str, scorers: &[&dyn SentimentScorer]) -> Result<f64, TextError> {
    if scorers.is_empty() {
        return Err(TextError::NoScorers);
    }
    let mean = scorers.iter().map(|s| s.score(text)).sum::<f64>() / scorers.len() as f64;
    Ok(rescale_polarity(mean))
}
