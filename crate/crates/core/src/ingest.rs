//! Archive parsing, corpus filters, and snowball seed expansion.
//!
//! All operations here are pure streaming transforms over
//! [`InteractionRecord`] sequences; they can run on disjoint file shards and
//! the outputs concatenated.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{
    format_timestamp, parse_timestamp, InteractionRecord, RecordKind, TweetId, UserId,
};

pub const WEEK_SECS: i64 = 7 * 24 * 3600;

/// Whether a malformed archive line aborts parsing or is recorded and skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    Strict,
    Lenient,
}

/// How quote tweets found in an archive are mapped onto the record kinds.
///
/// Quotes share content rather than open a reply thread, so they default to
/// retweets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotePolicy {
    Retweet,
    Reply,
    Drop,
}

impl Default for QuotePolicy {
    fn default() -> Self {
        QuotePolicy::Retweet
    }
}

/// One rejected archive line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Result of parsing an archive stream.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<InteractionRecord>,
    pub errors: Vec<LineError>,
    /// Quote records dropped under [`QuotePolicy::Drop`].
    pub dropped_quotes: usize,
}

#[derive(Deserialize)]
struct RawRecord<'a> {
    id: String,
    author_id: String,
    created_at: &'a str,
    kind: &'a str,
    #[serde(default)]
    ref_tweet_id: Option<String>,
    #[serde(default)]
    ref_user_id: Option<String>,
    #[serde(default)]
    text: String,
}

fn convert_line(raw: RawRecord<'_>, quotes: QuotePolicy) -> std::result::Result<Option<InteractionRecord>, String> {
    let created_at = parse_timestamp(raw.created_at)
        .ok_or_else(|| format!("unparseable created_at {:?}", raw.created_at))?;
    let kind = match raw.kind {
        "original" => RecordKind::Original,
        "retweet" => RecordKind::Retweet,
        "reply" => RecordKind::Reply,
        "quote" => match quotes {
            QuotePolicy::Retweet => RecordKind::Retweet,
            QuotePolicy::Reply => RecordKind::Reply,
            QuotePolicy::Drop => return Ok(None),
        },
        other => return Err(format!("unknown kind {other:?}")),
    };
    match kind {
        RecordKind::Original => {
            if raw.ref_tweet_id.is_some() || raw.ref_user_id.is_some() {
                return Err("original record carries reference fields".into());
            }
        }
        RecordKind::Retweet | RecordKind::Reply => {
            if raw.ref_tweet_id.is_none() || raw.ref_user_id.is_none() {
                return Err(format!("{kind} record missing ref_tweet_id/ref_user_id"));
            }
        }
    }
    Ok(Some(InteractionRecord {
        tweet_id: TweetId(raw.id),
        author_id: UserId(raw.author_id),
        created_at,
        kind,
        ref_tweet_id: raw.ref_tweet_id.map(TweetId),
        ref_user_id: raw.ref_user_id.map(UserId),
        text: raw.text,
    }))
}

/// Parses a line-delimited archive stream.
///
/// In lenient mode malformed lines are recorded in [`ParseOutcome::errors`]
/// and parsing continues; in strict mode the first malformed line aborts.
/// Blank lines are skipped. Input order is preserved.
pub fn parse_archive(
    reader: impl BufRead,
    mode: ParseMode,
    quotes: QuotePolicy,
) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|raw| convert_line(raw, quotes));
        match parsed {
            Ok(Some(rec)) => out.records.push(rec),
            Ok(None) => out.dropped_quotes += 1,
            Err(message) => match mode {
                ParseMode::Strict => {
                    return Err(Error::Parse {
                        line: line_no,
                        message,
                    })
                }
                ParseMode::Lenient => out.errors.push(LineError {
                    line: line_no,
                    message,
                }),
            },
        }
    }
    Ok(out)
}

/// Writes records in the archive line format. `parse_archive` on the output
/// reproduces the records field-for-field.
pub fn write_archive(mut w: impl Write, records: &[InteractionRecord]) -> Result<()> {
    for rec in records {
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), rec.tweet_id.as_str().into());
        obj.insert("author_id".into(), rec.author_id.as_str().into());
        obj.insert("created_at".into(), format_timestamp(rec.created_at).into());
        obj.insert("kind".into(), rec.kind.to_string().into());
        if let Some(ref t) = rec.ref_tweet_id {
            obj.insert("ref_tweet_id".into(), t.as_str().into());
        }
        if let Some(ref u) = rec.ref_user_id {
            obj.insert("ref_user_id".into(), u.as_str().into());
        }
        obj.insert("text".into(), rec.text.clone().into());
        serde_json::to_writer(&mut w, &serde_json::Value::Object(obj))
            .map_err(|e| Error::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// A set of seed users, optionally with display handles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedSet {
    ids: BTreeSet<UserId>,
    labels: BTreeMap<UserId, String>,
}

impl SeedSet {
    /// Builds a seed set from ids; errors on an empty collection.
    pub fn new(ids: impl IntoIterator<Item = UserId>) -> Result<Self> {
        let ids: BTreeSet<UserId> = ids.into_iter().collect();
        if ids.is_empty() {
            return Err(Error::EmptyInput("seed set"));
        }
        Ok(SeedSet {
            ids,
            labels: BTreeMap::new(),
        })
    }

    pub fn with_label(mut self, id: UserId, handle: impl Into<String>) -> Self {
        self.labels.insert(id, handle.into());
        self
    }

    pub fn contains(&self, id: &UserId) -> bool {
        self.ids.contains(id)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserId> {
        self.ids.iter()
    }

    pub fn label(&self, id: &UserId) -> Option<&str> {
        self.labels.get(id).map(|s| s.as_str())
    }

    /// Reads `user_id[<TAB>handle]` lines; `#` comments and blanks skipped.
    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let mut labels = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let id = UserId::new(parts.next().unwrap().trim());
            if !ids.insert(id.clone()) {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("duplicate seed id {id}"),
                });
            }
            if let Some(handle) = parts.next() {
                labels.insert(id, handle.trim().to_owned());
            }
        }
        if ids.is_empty() {
            return Err(Error::EmptyInput("seed set"));
        }
        Ok(SeedSet { ids, labels })
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        for id in &self.ids {
            match self.labels.get(id) {
                Some(handle) => writeln!(w, "{id}\t{handle}")?,
                None => writeln!(w, "{id}")?,
            }
        }
        Ok(())
    }
}

/// Which records the keyword filter applies to.
///
/// The keyword list targets root posts and the event retweet network;
/// whether replies inside a tree should also be filtered is debatable, so
/// both modes exist. `RootsOnly` (the default) filters originals and
/// retweets and lets replies through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordScope {
    RootsOnly,
    AllRecords,
}

/// Time-window plus keyword corpus filter.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFilter {
    pub window_start: i64,
    pub window_end: i64,
    /// Lowercase stems, matched as substrings of the case-folded text.
    /// An empty list disables keyword filtering.
    pub keywords: Vec<String>,
    pub apply_keywords_to: KeywordScope,
}

impl CorpusFilter {
    pub fn validate(&self) -> Result<()> {
        if self.window_start >= self.window_end {
            return Err(Error::InvalidParameter(format!(
                "window_start {} must be before window_end {}",
                format_timestamp(self.window_start),
                format_timestamp(self.window_end)
            )));
        }
        for kw in &self.keywords {
            if kw.is_empty() {
                return Err(Error::InvalidParameter("empty keyword".into()));
            }
            if *kw != kw.to_lowercase() {
                return Err(Error::InvalidParameter(format!(
                    "keyword {kw:?} is not lowercase"
                )));
            }
        }
        Ok(())
    }

    /// Applies the window and the scoped keyword filter.
    pub fn apply(&self, records: Vec<InteractionRecord>) -> Result<Vec<InteractionRecord>> {
        self.validate()?;
        let windowed = filter_window(records, self.window_start, self.window_end);
        if self.keywords.is_empty() {
            return Ok(windowed);
        }
        Ok(match self.apply_keywords_to {
            KeywordScope::AllRecords => filter_keywords(windowed, &self.keywords),
            KeywordScope::RootsOnly => windowed
                .into_iter()
                .filter(|r| match r.kind {
                    RecordKind::Reply => true,
                    RecordKind::Original | RecordKind::Retweet => {
                        matches_any_keyword(&r.text, &self.keywords)
                    }
                })
                .collect(),
        })
    }
}

/// Keeps records with `window_start <= created_at < window_end`.
pub fn filter_window(
    records: Vec<InteractionRecord>,
    window_start: i64,
    window_end: i64,
) -> Vec<InteractionRecord> {
    records
        .into_iter()
        .filter(|r| r.created_at >= window_start && r.created_at < window_end)
        .collect()
}

fn matches_any_keyword(text: &str, keywords: &[String]) -> bool {
    let folded = text.to_lowercase();
    keywords.iter().any(|kw| folded.contains(kw.as_str()))
}

/// Keeps records whose case-folded text contains at least one keyword as a
/// substring. Keywords are stems ("randal" matches "Randale"), so no word
/// boundary is required.
pub fn filter_keywords(
    records: Vec<InteractionRecord>,
    keywords: &[String],
) -> Vec<InteractionRecord> {
    records
        .into_iter()
        .filter(|r| matches_any_keyword(&r.text, keywords))
        .collect()
}

/// One snowball round: adds users that seed users retweeted or mentioned at
/// an average rate of at least `min_weekly_rate` per week over `weeks`.
///
/// A mention is any seed-authored record whose `ref_user_id` names the user
/// (retweets and replies; archives carry no separate mention entity).
/// Returns `seeds ∪ added`; callers iterate for multiple rounds.
pub fn snowball_expand(
    records: &[InteractionRecord],
    seeds: &SeedSet,
    min_weekly_rate: f64,
    weeks: f64,
) -> Result<SeedSet> {
    if !(min_weekly_rate > 0.0) {
        return Err(Error::InvalidParameter(
            "min_weekly_rate must be > 0".into(),
        ));
    }
    if !(weeks >= 1.0) {
        return Err(Error::InvalidParameter("weeks must be >= 1".into()));
    }
    let (min_ts, max_ts) = match records
        .iter()
        .map(|r| r.created_at)
        .fold(None, |acc: Option<(i64, i64)>, t| {
            Some(acc.map_or((t, t), |(lo, hi)| (lo.min(t), hi.max(t))))
        }) {
        Some(span) => span,
        None => return Err(Error::EmptyInput("records")),
    };
    let span_secs = max_ts - min_ts;
    let required_secs = (weeks * WEEK_SECS as f64).floor() as i64;
    if span_secs < required_secs.max(WEEK_SECS) {
        return Err(Error::SpanTooShort {
            span_secs,
            required_secs: required_secs.max(WEEK_SECS),
        });
    }

    let mut counts: HashMap<&UserId, u64> = HashMap::new();
    for rec in records {
        if !seeds.contains(&rec.author_id) {
            continue;
        }
        if let Some(target) = &rec.ref_user_id {
            if !seeds.contains(target) && *target != rec.author_id {
                *counts.entry(target).or_insert(0) += 1;
            }
        }
    }

    let mut expanded = seeds.clone();
    for (user, count) in counts {
        if count as f64 / weeks >= min_weekly_rate {
            expanded.ids.insert(user.clone());
        }
    }
    Ok(expanded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec_line(id: &str, kind: &str, ts: &str, refs: Option<(&str, &str)>, text: &str) -> String {
        match refs {
            Some((rt, ru)) => format!(
                r#"{{"id":"{id}","author_id":"a_{id}","created_at":"{ts}","kind":"{kind}","ref_tweet_id":"{rt}","ref_user_id":"{ru}","text":"{text}"}}"#
            ),
            None => format!(
                r#"{{"id":"{id}","author_id":"a_{id}","created_at":"{ts}","kind":"{kind}","text":"{text}"}}"#
            ),
        }
    }

    #[test]
    fn parse_empty_stream() {
        let out = parse_archive(&b""[..], ParseMode::Strict, QuotePolicy::Retweet).unwrap();
        assert!(out.records.is_empty());
        assert!(out.errors.is_empty());
    }

    #[test]
    fn parse_preserves_order() {
        let data = [
            rec_line("1", "original", "2019-07-25T00:00:00Z", None, "a"),
            rec_line("2", "retweet", "2019-07-25T00:00:01Z", Some(("1", "a_1")), "b"),
            rec_line("3", "reply", "2019-07-25T00:00:02Z", Some(("1", "a_1")), "c"),
        ]
        .join("\n");
        let out = parse_archive(data.as_bytes(), ParseMode::Strict, QuotePolicy::Retweet).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(
            out.records.iter().map(|r| r.tweet_id.as_str()).collect::<Vec<_>>(),
            ["1", "2", "3"]
        );
    }

    #[test]
    fn parse_lenient_records_error_with_line_number() {
        let data = format!(
            "{}\n{}\n{}",
            rec_line("1", "original", "2019-07-25T00:00:00Z", None, "a"),
            r#"{"id":"2","author_id":"x","created_at":"2019-"#, // truncated
            rec_line("3", "original", "2019-07-25T00:00:02Z", None, "c"),
        );
        let out = parse_archive(data.as_bytes(), ParseMode::Lenient, QuotePolicy::Retweet).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.errors.len(), 1);
        assert_eq!(out.errors[0].line, 2);
    }

    #[test]
    fn parse_strict_aborts_on_malformed_line() {
        let data = format!(
            "{}\nnot json\n",
            rec_line("1", "original", "2019-07-25T00:00:00Z", None, "a")
        );
        let err = parse_archive(data.as_bytes(), ParseMode::Strict, QuotePolicy::Retweet)
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_ref_invariant_violations() {
        let bad_original = rec_line(
            "1",
            "original",
            "2019-07-25T00:00:00Z",
            Some(("9", "a_9")),
            "x",
        );
        let bad_reply = rec_line("2", "reply", "2019-07-25T00:00:00Z", None, "y");
        let out = parse_archive(
            format!("{bad_original}\n{bad_reply}").as_bytes(),
            ParseMode::Lenient,
            QuotePolicy::Retweet,
        )
        .unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.errors.len(), 2);
    }

    #[test]
    fn quote_policy_mapping() {
        let quote = rec_line("1", "quote", "2019-07-25T00:00:00Z", Some(("9", "a_9")), "q");
        let as_rt = parse_archive(quote.as_bytes(), ParseMode::Strict, QuotePolicy::Retweet)
            .unwrap();
        assert_eq!(as_rt.records[0].kind, RecordKind::Retweet);
        let dropped =
            parse_archive(quote.as_bytes(), ParseMode::Strict, QuotePolicy::Drop).unwrap();
        assert!(dropped.records.is_empty());
        assert_eq!(dropped.dropped_quotes, 1);
    }

    #[test]
    fn window_examples() {
        let records: Vec<_> = (0..10)
            .map(|i| InteractionRecord::original(format!("t{i}"), "u", i, ""))
            .collect();
        assert_eq!(filter_window(records.clone(), 0, 10).len(), 10);
        assert!(filter_window(records.clone(), 100, 200).is_empty());
        let mid = filter_window(records, 3, 7);
        assert_eq!(
            mid.iter().map(|r| r.created_at).collect::<Vec<_>>(),
            [3, 4, 5, 6]
        );
    }

    #[test]
    fn keyword_examples() {
        let kws = |ks: &[&str]| ks.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let rec = |text: &str| vec![InteractionRecord::original("t", "u", 0, text)];
        assert_eq!(
            filter_keywords(rec("Riots in LEIPZIG tonight"), &kws(&["leipzig"])).len(),
            1
        );
        assert_eq!(
            filter_keywords(rec("die Randale eskalierte"), &kws(&["randal"])).len(),
            1
        );
        assert_eq!(
            filter_keywords(rec("the police arrived"), &kws(&["polizei"])).len(),
            0
        );
    }

    #[test]
    fn roots_only_scope_exempts_replies() {
        let filter = CorpusFilter {
            window_start: 0,
            window_end: 100,
            keywords: vec!["leipzig".into()],
            apply_keywords_to: KeywordScope::RootsOnly,
        };
        let records = vec![
            InteractionRecord::original("t1", "u1", 1, "leipzig now"),
            InteractionRecord::original("t2", "u2", 2, "unrelated"),
            InteractionRecord::retweet("t3", "u3", 3, "t1", "u1", "RT leipzig now"),
            InteractionRecord::retweet("t4", "u4", 4, "t2", "u2", "RT unrelated"),
            InteractionRecord::reply("t5", "u5", 5, "t1", "u1", "unrelated reply"),
        ];
        let kept = filter.apply(records.clone()).unwrap();
        assert_eq!(
            kept.iter().map(|r| r.tweet_id.as_str()).collect::<Vec<_>>(),
            ["t1", "t3", "t5"]
        );
        let all = CorpusFilter {
            apply_keywords_to: KeywordScope::AllRecords,
            ..filter
        };
        let kept = all.apply(records).unwrap();
        assert_eq!(
            kept.iter().map(|r| r.tweet_id.as_str()).collect::<Vec<_>>(),
            ["t1", "t3"]
        );
    }

    fn seed(ids: &[&str]) -> SeedSet {
        SeedSet::new(ids.iter().map(|s| UserId::new(*s))).unwrap()
    }

    /// 4-week span fixture: a dummy original pins each end of the window.
    fn span_fixture(mut extra: Vec<InteractionRecord>) -> Vec<InteractionRecord> {
        let mut records = vec![
            InteractionRecord::original("span0", "s", 0, ""),
            InteractionRecord::original("span1", "s", 4 * WEEK_SECS, ""),
        ];
        records.append(&mut extra);
        records
    }

    #[test]
    fn snowball_fixed_point_without_mentions() {
        let records = span_fixture(vec![]);
        let seeds = seed(&["s"]);
        let out = snowball_expand(&records, &seeds, 1.0, 4.0).unwrap();
        assert_eq!(out, seeds);
    }

    #[test]
    fn snowball_adds_user_above_rate() {
        // x retweeted by a seed 8 times over 4 weeks => rate 2.0 >= 1.0
        let retweets = (0..8)
            .map(|i| {
                InteractionRecord::retweet(
                    format!("rt{i}"),
                    "s",
                    i * WEEK_SECS / 2,
                    format!("xt{i}"),
                    "x",
                    "",
                )
            })
            .collect();
        let out = snowball_expand(&span_fixture(retweets), &seed(&["s"]), 1.0, 4.0).unwrap();
        assert!(out.contains(&UserId::new("x")));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn snowball_skips_user_below_rate() {
        // y mentioned 2 times over 4 weeks => rate 0.5 < 1.0
        let mentions = (0..2)
            .map(|i| {
                InteractionRecord::reply(
                    format!("m{i}"),
                    "s",
                    (i + 1) * WEEK_SECS,
                    format!("yt{i}"),
                    "y",
                    "",
                )
            })
            .collect();
        let out = snowball_expand(&span_fixture(mentions), &seed(&["s"]), 1.0, 4.0).unwrap();
        assert!(!out.contains(&UserId::new("y")));
    }

    #[test]
    fn snowball_rejects_short_span() {
        let records = vec![
            InteractionRecord::original("a", "s", 0, ""),
            InteractionRecord::original("b", "s", WEEK_SECS / 2, ""),
        ];
        assert!(matches!(
            snowball_expand(&records, &seed(&["s"]), 1.0, 1.0),
            Err(Error::SpanTooShort { .. })
        ));
    }

    #[test]
    fn seed_set_file_round_trip() {
        let input = "u1\tAlice\n# comment\nu2\n\nu3\tCarol\n";
        let seeds = SeedSet::read(input.as_bytes()).unwrap();
        assert_eq!(seeds.len(), 3);
        assert_eq!(seeds.label(&UserId::new("u1")), Some("Alice"));
        assert_eq!(seeds.label(&UserId::new("u2")), None);
        let mut buf = Vec::new();
        seeds.write(&mut buf).unwrap();
        let again = SeedSet::read(&buf[..]).unwrap();
        assert_eq!(seeds, again);
    }

    proptest! {
        #[test]
        fn archive_round_trips_bit_exactly(
            n in 0usize..20,
            seed_val in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed_val);
            let records: Vec<InteractionRecord> = (0..n)
                .map(|i| {
                    let ts = rng.random_range(0i64..2_000_000_000);
                    match rng.random_range(0u8..3) {
                        0 => InteractionRecord::original(format!("t{i}"), format!("u{}", rng.random_range(0..5)), ts, "käse & \"quotes\""),
                        1 => InteractionRecord::retweet(format!("t{i}"), format!("u{}", rng.random_range(0..5)), ts, "ref", "refu", "rt"),
                        _ => InteractionRecord::reply(format!("t{i}"), format!("u{}", rng.random_range(0..5)), ts, "ref", "refu", ""),
                    }
                })
                .collect();
            let mut buf = Vec::new();
            write_archive(&mut buf, &records).unwrap();
            let out = parse_archive(&buf[..], ParseMode::Strict, QuotePolicy::Retweet).unwrap();
            prop_assert_eq!(out.records, records);
        }

        #[test]
        fn nested_windows_compose_to_intersection(
            times in proptest::collection::vec(0i64..100, 0..40),
            a in 0i64..50, b in 50i64..100,
            c in 0i64..50, d in 50i64..100,
        ) {
            let records: Vec<_> = times
                .iter()
                .enumerate()
                .map(|(i, &t)| InteractionRecord::original(format!("t{i}"), "u", t, ""))
                .collect();
            let nested = filter_window(filter_window(records.clone(), a, b), c, d);
            let direct = filter_window(records, a.max(c), b.min(d));
            prop_assert_eq!(nested, direct);
        }

        #[test]
        fn keyword_filter_is_idempotent(texts in proptest::collection::vec(".{0,20}", 0..20)) {
            let records: Vec<_> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| InteractionRecord::original(format!("t{i}"), "u", 0, t.clone()))
                .collect();
            let kws = vec!["a".to_string(), "z".to_string()];
            let once = filter_keywords(records, &kws);
            let twice = filter_keywords(once.clone(), &kws);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn snowball_is_monotone(
            targets in proptest::collection::vec(0u8..6, 0..30),
        ) {
            let records = span_fixture(
                targets
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        InteractionRecord::retweet(
                            format!("rt{i}"),
                            "s",
                            (i as i64 % 28) * 86_400,
                            format!("x{i}"),
                            format!("v{t}"),
                            "",
                        )
                    })
                    .collect(),
            );
            let seeds = seed(&["s"]);
            let once = snowball_expand(&records, &seeds, 1.0, 4.0).unwrap();
            for s in seeds.iter() {
                prop_assert!(once.contains(s));
            }
            let twice = snowball_expand(&records, &once, 1.0, 4.0).unwrap();
            for s in once.iter() {
                prop_assert!(twice.contains(s));
            }
        }
    }
}
