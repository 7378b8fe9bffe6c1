//! Readers and writers for Yelp-style JSON-lines and the equivalent CSV layout.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, RawItem, RawReview};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    JsonLines,
    Csv,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json-lines" | "jsonl" | "json" => Ok(Self::JsonLines),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown input format {other:?}")),
        }
    }
}

/// What to do with a record that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MalformedPolicy {
    FailFast,
    #[default]
    SkipAndLog,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ReadOutcome<T> {
    pub records: Vec<T>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub corpus: Corpus,
    pub items: BTreeMap<String, RawItem>,
    pub skipped: Vec<SkippedRecord>,
}

/// Loads reviews and, optionally, the item catalog.
pub fn load_corpus(
    review_path: &Path,
    item_path: Option<&Path>,
    format: InputFormat,
    policy: MalformedPolicy,
) -> Result<LoadedData, CorpusError> {
    let reviews = read_reviews(open(review_path)?, format, policy)?;
    let mut skipped = reviews.skipped;
    let items = match item_path {
        Some(p) => {
            let out = read_items(open(p)?, format, policy)?;
            skipped.extend(out.skipped);
            out.records
                .into_iter()
                .map(|it| (it.item_id.clone(), it))
                .collect()
        }
        None => BTreeMap::new(),
    };
    let corpus = Corpus::from_reviews(reviews.records)?;
    log::info!(
        "loaded {} reviews ({} users, {} items), {} records skipped",
        corpus.len(),
        corpus.user_count(),
        corpus.item_count(),
        skipped.len()
    );
    Ok(LoadedData {
        corpus,
        items,
        skipped,
    })
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Parses review records. Duplicate review ids count as malformed records.
pub fn read_reviews<R: Read>(
    reader: R,
    format: InputFormat,
    policy: MalformedPolicy,
) -> Result<ReadOutcome<RawReview>, CorpusError> {
    let parsed = match format {
        InputFormat::JsonLines => parse_json_lines(reader, |line| {
            let rec: YelpReview = serde_json::from_str(line).map_err(|e| e.to_string())?;
            rec.into_review()
        })?,
        InputFormat::Csv => parse_csv(reader, |rec: CsvReview| rec.into_review())?,
    };
    let mut seen = HashSet::new();
    let mut out = ReadOutcome {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    for (line, res) in parsed {
        let res = res.and_then(|r| {
            if seen.insert(r.review_id.clone()) {
                Ok(r)
            } else {
                Err(format!("duplicate review id {:?}", r.review_id))
            }
        });
        accept(&mut out, line, res, policy)?;
    }
    Ok(out)
}

/// Parses item (business) records.
pub fn read_items<R: Read>(
    reader: R,
    format: InputFormat,
    policy: MalformedPolicy,
) -> Result<ReadOutcome<RawItem>, CorpusError> {
    let parsed = match format {
        InputFormat::JsonLines => parse_json_lines(reader, |line| {
            let rec: YelpItem = serde_json::from_str(line).map_err(|e| e.to_string())?;
            Ok(rec.into_item())
        })?,
        InputFormat::Csv => parse_csv(reader, |rec: CsvItem| Ok(rec.into_item()))?,
    };
    let mut seen = HashSet::new();
    let mut out = ReadOutcome {
        records: Vec::new(),
        skipped: Vec::new(),
    };
    for (line, res) in parsed {
        let res = res.and_then(|it| {
            if seen.insert(it.item_id.clone()) {
                Ok(it)
            } else {
                Err(format!("duplicate item id {:?}", it.item_id))
            }
        });
        accept(&mut out, line, res, policy)?;
    }
    Ok(out)
}

fn accept<T>(
    out: &mut ReadOutcome<T>,
    line: usize,
    res: Result<T, String>,
    policy: MalformedPolicy,
) -> Result<(), CorpusError> {
    match res {
        Ok(r) => out.records.push(r),
        Err(reason) => match policy {
            MalformedPolicy::FailFast => return Err(CorpusError::Malformed { line, reason }),
            MalformedPolicy::SkipAndLog => {
                log::warn!("skipping malformed record at line {line}: {reason}");
                out.skipped.push(SkippedRecord { line, reason });
            }
        },
    }
    Ok(())
}

type Parsed<T> = Vec<(usize, Result<T, String>)>;

fn parse_json_lines<R: Read, T>(
    reader: R,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Parsed<T>, CorpusError> {
    let mut out = Vec::new();
    let mut reader = BufReader::new(reader);
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|source| CorpusError::Io {
                path: "<reader>".into(),
                source,
            })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let res = match std::str::from_utf8(&buf) {
            Ok(s) if s.trim().is_empty() => continue,
            Ok(s) => parse(s.trim()),
            Err(e) => Err(format!("invalid UTF-8: {e}")),
        };
        out.push((line_no, res));
    }
    Ok(out)
}

fn parse_csv<R: Read, Row: for<'de> Deserialize<'de>, T>(
    reader: R,
    convert: impl Fn(Row) -> Result<T, String>,
) -> Result<Parsed<T>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = match rdr.byte_headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            return Err(CorpusError::Malformed {
                line: 1,
                reason: format!("unreadable header: {e}"),
            })
        }
    };
    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    loop {
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line() as usize);
                let res = record
                    .deserialize::<Row>(Some(&headers))
                    .map_err(|e| e.to_string())
                    .and_then(&convert);
                out.push((line, res));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                // the csv reader cannot resynchronise after an I/O error
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(e.into());
                }
                out.push((line, Err(e.to_string())));
            }
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Id {
    Text(String),
    Int(i64),
}

impl Id {
    fn into_string(self) -> Result<String, String> {
        let s = match self {
            Id::Text(s) => s,
            Id::Int(n) => n.to_string(),
        };
        if s.is_empty() {
            Err("empty identifier".into())
        } else {
            Ok(s)
        }
    }
}

#[derive(Deserialize)]
struct YelpVotes {
    #[serde(default)]
    useful: i64,
    #[serde(default)]
    funny: i64,
    #[serde(default)]
    cool: i64,
}

#[derive(Deserialize)]
struct YelpReview {
    review_id: Id,
    user_id: Id,
    business_id: Id,
    stars: f64,
    #[serde(default)]
    text: String,
    useful: Option<i64>,
    funny: Option<i64>,
    cool: Option<i64>,
    // older dataset releases nest the counts
    votes: Option<YelpVotes>,
    date: Option<String>,
}

impl YelpReview {
    fn into_review(self) -> Result<RawReview, String> {
        let nested = self.votes.unwrap_or(YelpVotes {
            useful: 0,
            funny: 0,
            cool: 0,
        });
        Ok(RawReview {
            review_id: self.review_id.into_string()?,
            user_id: self.user_id.into_string()?,
            item_id: self.business_id.into_string()?,
            stars: stars_from(self.stars)?,
            text: self.text,
            votes_useful: vote(self.useful.unwrap_or(nested.useful), "useful")?,
            votes_funny: vote(self.funny.unwrap_or(nested.funny), "funny")?,
            votes_cool: vote(self.cool.unwrap_or(nested.cool), "cool")?,
            date: self.date.filter(|d| !d.is_empty()),
        })
    }
}

fn stars_from(x: f64) -> Result<u8, String> {
    if x.fract() == 0.0 && (1.0..=5.0).contains(&x) {
        Ok(x as u8)
    } else {
        Err(format!("stars {x} is not an integer in 1..=5"))
    }
}

fn vote(v: i64, name: &str) -> Result<u32, String> {
    u32::try_from(v).map_err(|_| format!("{name} vote count {v} out of range"))
}

#[derive(Deserialize)]
struct CsvReview {
    review_id: String,
    user_id: String,
    #[serde(alias = "item_id")]
    business_id: String,
    stars: f64,
    #[serde(default)]
    text: String,
    #[serde(default)]
    useful: i64,
    #[serde(default)]
    funny: i64,
    #[serde(default)]
    cool: i64,
    #[serde(default)]
    date: Option<String>,
}

impl CsvReview {
    fn into_review(self) -> Result<RawReview, String> {
        YelpReview {
            review_id: Id::Text(self.review_id),
            user_id: Id::Text(self.user_id),
            business_id: Id::Text(self.business_id),
            stars: self.stars,
            text: self.text,
            useful: Some(self.useful),
            funny: Some(self.funny),
            cool: Some(self.cool),
            votes: None,
            date: self.date,
        }
        .into_review()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Categories {
    Joined(String),
    List(Vec<String>),
}

#[derive(Deserialize)]
struct YelpItem {
    business_id: Id,
    #[serde(default)]
    categories: Option<Categories>,
}

impl YelpItem {
    fn into_item(self) -> RawItem {
        let category_tags = match self.categories {
            Some(Categories::Joined(s)) => split_tags(&s),
            Some(Categories::List(v)) => v
                .into_iter()
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect(),
            None => BTreeSet::new(),
        };
        RawItem {
            item_id: match self.business_id {
                Id::Text(s) => s,
                Id::Int(n) => n.to_string(),
            },
            category_tags,
        }
    }
}

fn split_tags(s: &str) -> BTreeSet<String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Deserialize)]
struct CsvItem {
    #[serde(alias = "item_id")]
    business_id: String,
    #[serde(default)]
    categories: String,
}

impl CsvItem {
    fn into_item(self) -> RawItem {
        RawItem {
            item_id: self.business_id,
            category_tags: split_tags(&self.categories),
        }
    }
}

#[derive(Serialize)]
struct OutReview<'a> {
    review_id: &'a str,
    user_id: &'a str,
    business_id: &'a str,
    stars: u8,
    useful: u32,
    funny: u32,
    cool: u32,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    date: Option<&'a str>,
}

impl<'a> From<&'a RawReview> for OutReview<'a> {
    fn from(r: &'a RawReview) -> Self {
        OutReview {
            review_id: &r.review_id,
            user_id: &r.user_id,
            business_id: &r.item_id,
            stars: r.stars,
            useful: r.votes_useful,
            funny: r.votes_funny,
            cool: r.votes_cool,
            text: &r.text,
            date: r.date.as_deref(),
        }
    }
}

/// Writes reviews in the same layout [`read_reviews`] accepts.
pub fn write_reviews<W: Write>(
    reviews: &[RawReview],
    mut writer: W,
    format: InputFormat,
) -> Result<(), CorpusError> {
    match format {
        InputFormat::JsonLines => {
            for r in reviews {
                serde_json::to_writer(&mut writer, &OutReview::from(r))?;
                writer.write_all(b"\n").map_err(|source| CorpusError::Io {
                    path: "<writer>".into(),
                    source,
                })?;
            }
        }
        InputFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            w.write_record([
                "review_id",
                "user_id",
                "business_id",
                "stars",
                "useful",
                "funny",
                "cool",
                "text",
                "date",
            ])?;
            for r in reviews {
                w.write_record([
                    r.review_id.as_str(),
                    &r.user_id,
                    &r.item_id,
                    &r.stars.to_string(),
                    &r.votes_useful.to_string(),
                    &r.votes_funny.to_string(),
                    &r.votes_cool.to_string(),
                    &r.text,
                    r.date.as_deref().unwrap_or(""),
                ])?;
            }
            w.flush().map_err(|source| CorpusError::Io {
                path: "<writer>".into(),
                source,
            })?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LINE: &str = r#"{"review_id":"r1","user_id":"u1","business_id":"b1","stars":4.0,"useful":2,"funny":1,"cool":0,"text":"Nice room.","date":"2016-03-09"}"#;

    #[test]
    fn empty_input_gives_empty_corpus() {
        let out =
            read_reviews(&b""[..], InputFormat::JsonLines, MalformedPolicy::FailFast).unwrap();
        let c = Corpus::from_reviews(out.records).unwrap();
        assert_eq!((c.len(), c.user_count(), c.item_count()), (0, 0, 0));
    }

    #[test]
    fn single_record() {
        let out = read_reviews(
            LINE.as_bytes(),
            InputFormat::JsonLines,
            MalformedPolicy::FailFast,
        )
        .unwrap();
        let c = Corpus::from_reviews(out.records).unwrap();
        assert_eq!((c.len(), c.user_count(), c.item_count()), (1, 1, 1));
        let r = &c.reviews()[0];
        assert_eq!(r.stars, 4);
        assert_eq!(r.total_votes(), 3);
        assert_eq!(r.date.as_deref(), Some("2016-03-09"));
    }

    #[test]
    fn nested_votes_layout() {
        let line = r#"{"review_id":"r1","user_id":"u1","business_id":"b1","stars":5,"votes":{"useful":3,"funny":0,"cool":1},"text":"x"}"#;
        let out = read_reviews(
            line.as_bytes(),
            InputFormat::JsonLines,
            MalformedPolicy::FailFast,
        )
        .unwrap();
        assert_eq!(out.records[0].total_votes(), 4);
    }

    #[test]
    fn malformed_policy() {
        let input = format!("{LINE}\n{{\"review_id\": oops\n");
        let skip = read_reviews(
            input.as_bytes(),
            InputFormat::JsonLines,
            MalformedPolicy::SkipAndLog,
        )
        .unwrap();
        assert_eq!(skip.records.len(), 1);
        assert_eq!(skip.skipped[0].line, 2);
        let fail = read_reviews(
            input.as_bytes(),
            InputFormat::JsonLines,
            MalformedPolicy::FailFast,
        );
        assert!(matches!(fail, Err(CorpusError::Malformed { line: 2, .. })));
    }

    #[test]
    fn rejects_fractional_stars_and_negative_votes() {
        for bad in [
            r#"{"review_id":"r","user_id":"u","business_id":"b","stars":3.5,"text":""}"#,
            r#"{"review_id":"r","user_id":"u","business_id":"b","stars":3,"useful":-1,"text":""}"#,
            r#"{"review_id":"r","user_id":"u","business_id":"b","stars":6,"text":""}"#,
        ] {
            let res = read_reviews(
                bad.as_bytes(),
                InputFormat::JsonLines,
                MalformedPolicy::FailFast,
            );
            assert!(res.is_err(), "{bad}");
        }
    }

    #[test]
    fn csv_reviews_and_items() {
        let csv = "review_id,user_id,business_id,stars,text,useful,funny,cool\n\
                   r1,u1,b1,5,\"Great, clean\",1,0,0\n\
                   r2,u2,b1,x,bad,0,0,0\n";
        let out = read_reviews(
            csv.as_bytes(),
            InputFormat::Csv,
            MalformedPolicy::SkipAndLog,
        )
        .unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].text, "Great, clean");
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].line, 3);

        let items = "business_id,categories\nb1,\"Hotels, Travel\"\n";
        let it = read_items(
            items.as_bytes(),
            InputFormat::Csv,
            MalformedPolicy::FailFast,
        )
        .unwrap();
        assert!(it.records[0].category_tags.contains("Hotels"));
        assert!(it.records[0].category_tags.contains("Travel"));
    }

    #[test]
    fn json_items_accept_both_category_layouts() {
        let input = "{\"business_id\":\"a\",\"categories\":\"Hotels, Resorts\"}\n\
                     {\"business_id\":\"b\",\"categories\":[\"Hostels\"]}\n\
                     {\"business_id\":\"c\",\"categories\":null}\n";
        let it = read_items(
            input.as_bytes(),
            InputFormat::JsonLines,
            MalformedPolicy::FailFast,
        )
        .unwrap();
        assert_eq!(it.records.len(), 3);
        assert_eq!(it.records[0].category_tags.len(), 2);
        assert!(it.records[1].category_tags.contains("Hostels"));
        assert!(it.records[2].category_tags.is_empty());
    }

    fn arb_review() -> impl Strategy<Value = RawReview> {
        (
            "[a-zA-Z0-9_-]{1,12}",
            "[a-z0-9]{1,6}",
            "[a-z0-9]{1,6}",
            1u8..=5,
            any::<String>(),
            any::<u32>(),
            any::<u32>(),
            any::<u32>(),
        )
            .prop_map(|(id, u, i, stars, text, a, b, c)| RawReview {
                review_id: id,
                user_id: u,
                item_id: i,
                stars,
                text,
                votes_useful: a,
                votes_funny: b,
                votes_cool: c,
                date: None,
            })
    }

    proptest! {
        #[test]
        fn write_then_read_round_trips(
            reviews in proptest::collection::vec(arb_review(), 0..8),
            csv in any::<bool>(),
        ) {
            let mut uniq = std::collections::BTreeMap::new();
            for r in reviews {
                uniq.entry(r.review_id.clone()).or_insert(r);
            }
            let reviews: Vec<_> = uniq.into_values().collect();
            let format = if csv { InputFormat::Csv } else { InputFormat::JsonLines };
            let mut buf = Vec::new();
            write_reviews(&reviews, &mut buf, format).unwrap();
            let back = read_reviews(&buf[..], format, MalformedPolicy::FailFast).unwrap();
            prop_assert_eq!(back.records, reviews);
        }
    }
}
