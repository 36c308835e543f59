//! The archived interaction record and its id newtypes.
//!
//! Archives are line-delimited JSON. Each line carries `id`, `author_id`,
//! `created_at` (ISO-8601), `kind` and, for retweets and replies, the
//! referenced tweet and author ids.

use std::fmt;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// Opaque user identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_owned())
    }
}

/// Opaque tweet identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TweetId(pub String);

impl TweetId {
    pub fn new(id: impl Into<String>) -> Self {
        TweetId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TweetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TweetId {
    fn from(s: &str) -> Self {
        TweetId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Original,
    Retweet,
    Reply,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordKind::Original => f.write_str("original"),
            RecordKind::Retweet => f.write_str("retweet"),
            RecordKind::Reply => f.write_str("reply"),
        }
    }
}

/// One archived post.
///
/// Invariants (enforced at parse time):
/// - retweets and replies carry both `ref_tweet_id` and `ref_user_id`
/// - originals carry neither
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub tweet_id: TweetId,
    pub author_id: UserId,
    /// UTC timestamp, seconds since the epoch.
    pub created_at: i64,
    pub kind: RecordKind,
    pub ref_tweet_id: Option<TweetId>,
    pub ref_user_id: Option<UserId>,
    pub text: String,
}

impl InteractionRecord {
    pub fn original(
        tweet_id: impl Into<String>,
        author_id: impl Into<String>,
        created_at: i64,
        text: impl Into<String>,
    ) -> Self {
        InteractionRecord {
            tweet_id: TweetId::new(tweet_id),
            author_id: UserId::new(author_id),
            created_at,
            kind: RecordKind::Original,
            ref_tweet_id: None,
            ref_user_id: None,
            text: text.into(),
        }
    }

    pub fn retweet(
        tweet_id: impl Into<String>,
        author_id: impl Into<String>,
        created_at: i64,
        ref_tweet_id: impl Into<String>,
        ref_user_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        InteractionRecord {
            tweet_id: TweetId::new(tweet_id),
            author_id: UserId::new(author_id),
            created_at,
            kind: RecordKind::Retweet,
            ref_tweet_id: Some(TweetId::new(ref_tweet_id)),
            ref_user_id: Some(UserId::new(ref_user_id)),
            text: text.into(),
        }
    }

    pub fn reply(
        tweet_id: impl Into<String>,
        author_id: impl Into<String>,
        created_at: i64,
        ref_tweet_id: impl Into<String>,
        ref_user_id: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        InteractionRecord {
            tweet_id: TweetId::new(tweet_id),
            author_id: UserId::new(author_id),
            created_at,
            kind: RecordKind::Reply,
            ref_tweet_id: Some(TweetId::new(ref_tweet_id)),
            ref_user_id: Some(UserId::new(ref_user_id)),
            text: text.into(),
        }
    }
}

/// Formats an epoch-seconds timestamp as RFC 3339 UTC (`2019-07-25T00:00:00Z`).
pub fn format_timestamp(secs: i64) -> String {
    match Utc.timestamp_opt(secs, 0).single() {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Secs, true),
        None => secs.to_string(),
    }
}

/// Parses an ISO-8601 / RFC 3339 timestamp into epoch seconds.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|dt| dt.timestamp())
}
