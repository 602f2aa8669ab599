use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// One ingested tweet with the raw metadata behind every feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub retweeted_status_present: bool,
    pub retweet_count: u64,
    pub favorite_count: u64,
    pub in_reply_to_status_id: Option<String>,
    pub possibly_sensitive: Option<bool>,
    pub url_entity_count: u64,
    pub hashtag_entity_count: u64,
    pub symbol_entity_count: u64,
    pub user_id: String,
    pub user_verified: bool,
    pub user_friends_count: u64,
    pub user_followers_count: u64,
    pub user_statuses_count: u64,
    pub user_favourites_count: u64,
    pub user_created_at: DateTime<Utc>,
    pub matched_keywords: BTreeSet<String>,
}

/// How strictly [`ingest_jsonl`] treats missing fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemaMode {
    /// Every required field must be present.
    #[default]
    Strict,
    /// Missing counts, flags and entity arrays default to zero/false, and
    /// lines that are not JSON objects are skipped.
    Lenient,
}

const CLASSIC_TIMESTAMP: &str = "%a %b %d %H:%M:%S %z %Y";

/// Parses either an ISO-8601 / RFC 3339 timestamp or the classic
/// `Wed Jun 03 17:42:11 +0000 2015` form used by tweet objects.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts.with_timezone(&Utc));
    }
    DateTime::parse_from_str(raw, CLASSIC_TIMESTAMP)
        .ok()
        .map(|ts| ts.with_timezone(&Utc))
}

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Reads one tweet object per line.
pub fn ingest_jsonl(path: impl AsRef<Path>, mode: SchemaMode) -> Result<Vec<TweetRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file), mode).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Reads several files in argument order, concatenating their records.
pub fn ingest_many<P: AsRef<Path>>(paths: &[P], mode: SchemaMode) -> Result<Vec<TweetRecord>> {
    let mut out = Vec::new();
    for path in paths {
        out.extend(ingest_jsonl(path, mode)?);
    }
    Ok(out)
}

pub fn read_jsonl(reader: impl BufRead, mode: SchemaMode) -> Result<Vec<TweetRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) if mode == SchemaMode::Lenient => {
                log::warn!("skipping unparseable line {line_no}: {e}");
                continue;
            }
            Err(e) => return Err(Error::schema(line_no, "<line>", e.to_string())),
        };
        let Some(obj) = value.as_object() else {
            if mode == SchemaMode::Lenient {
                log::warn!("skipping non-object line {line_no}");
                continue;
            }
            return Err(Error::schema(line_no, "<line>", "expected a JSON object"));
        };
        records.push(parse_record(obj, line_no, mode)?);
    }
    Ok(records)
}

struct Fields<'a> {
    line: usize,
    mode: SchemaMode,
    obj: &'a Map<String, Value>,
    prefix: &'static str,
}

impl<'a> Fields<'a> {
    fn name(&self, key: &str) -> String {
        format!("{}{}", self.prefix, key)
    }

    fn err(&self, key: &str, reason: impl Into<String>) -> Error {
        Error::schema(self.line, self.name(key), reason)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.obj.get(key).filter(|v| !v.is_null())
    }

    fn string(&self, key: &str) -> Result<String> {
        match self.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Number(n)) => Ok(n.to_string()),
            Some(_) => Err(self.err(key, "expected a string")),
            None => Err(self.err(key, "missing required field")),
        }
    }

    fn id(&self, key_str: &str, key_num: &str) -> Result<String> {
        let id = match self.get(key_str) {
            Some(_) => self.string(key_str)?,
            None if self.get(key_num).is_some() => self.string(key_num)?,
            None => return Err(self.err(key_str, "missing required field")),
        };
        if id.is_empty() {
            return Err(self.err(key_str, "must be nonempty"));
        }
        Ok(id)
    }

    fn timestamp(&self, key: &str) -> Result<DateTime<Utc>> {
        let raw = self.string(key)?;
        parse_timestamp(&raw).ok_or_else(|| self.err(key, format!("unrecognised timestamp `{raw}`")))
    }

    fn count(&self, key: &str) -> Result<u64> {
        match self.get(key) {
            Some(Value::Number(n)) => {
                if let Some(v) = n.as_u64() {
                    Ok(v)
                } else if n.as_i64().is_some_and(|v| v < 0) || n.as_f64().is_some_and(|v| v < 0.0) {
                    Err(self.err(key, format!("negative count {n}")))
                } else {
                    Err(self.err(key, format!("expected a nonnegative integer, got {n}")))
                }
            }
            Some(_) => Err(self.err(key, "expected a nonnegative integer")),
            None if self.mode == SchemaMode::Lenient => Ok(0),
            None => Err(self.err(key, "missing required field")),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(self.err(key, "expected a boolean")),
            None if self.mode == SchemaMode::Lenient => Ok(false),
            None => Err(self.err(key, "missing required field")),
        }
    }

    fn optional_flag(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(_) => Err(self.err(key, "expected a boolean")),
            None => Ok(None),
        }
    }

    fn optional_id(&self, key_str: &str, key_num: &str) -> Result<Option<String>> {
        if self.get(key_str).is_some() {
            return self.string(key_str).map(Some);
        }
        if self.get(key_num).is_some() {
            return self.string(key_num).map(Some);
        }
        Ok(None)
    }

    fn array_len(&self, key: &str) -> Result<u64> {
        match self.get(key) {
            Some(Value::Array(items)) => Ok(items.len() as u64),
            Some(_) => Err(self.err(key, "expected an array")),
            None if self.mode == SchemaMode::Lenient => Ok(0),
            None => Err(self.err(key, "missing required field")),
        }
    }

    fn nested(&self, key: &str, prefix: &'static str) -> Result<Option<Fields<'a>>> {
        match self.get(key) {
            Some(Value::Object(obj)) => Ok(Some(Fields {
                line: self.line,
                mode: self.mode,
                obj,
                prefix,
            })),
            Some(_) => Err(self.err(key, "expected an object")),
            None => Ok(None),
        }
    }
}

fn parse_record(obj: &Map<String, Value>, line: usize, mode: SchemaMode) -> Result<TweetRecord> {
    let top = Fields {
        line,
        mode,
        obj,
        prefix: "",
    };
    let empty = Map::new();

    let entities = match top.nested("entities", "entities.")? {
        Some(e) => e,
        None if mode == SchemaMode::Lenient => Fields {
            line,
            mode,
            obj: &empty,
            prefix: "entities.",
        },
        None => return Err(top.err("entities", "missing required field")),
    };
    let user = top
        .nested("user", "user.")?
        .ok_or_else(|| top.err("user", "missing required field"))?;

    let matched_keywords = match top.get("matched_keywords") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_lowercase)
                    .ok_or_else(|| top.err("matched_keywords", "expected strings"))
            })
            .collect::<Result<_>>()?,
        Some(_) => return Err(top.err("matched_keywords", "expected an array")),
        None => BTreeSet::new(),
    };

    Ok(TweetRecord {
        tweet_id: top.id("id_str", "id")?,
        created_at: top.timestamp("created_at")?,
        text: top.string("text")?,
        retweeted_status_present: top.get("retweeted_status").is_some(),
        retweet_count: top.count("retweet_count")?,
        favorite_count: top.count("favorite_count")?,
        in_reply_to_status_id: top.optional_id("in_reply_to_status_id_str", "in_reply_to_status_id")?,
        possibly_sensitive: top.optional_flag("possibly_sensitive")?,
        url_entity_count: entities.array_len("urls")?,
        hashtag_entity_count: entities.array_len("hashtags")?,
        symbol_entity_count: entities.array_len("symbols")?,
        user_id: user.id("id_str", "id")?,
        user_verified: user.flag("verified")?,
        user_friends_count: user.count("friends_count")?,
        user_followers_count: user.count("followers_count")?,
        user_statuses_count: user.count("statuses_count")?,
        user_favourites_count: user.count("favourites_count")?,
        user_created_at: user.timestamp("created_at")?,
        matched_keywords,
    })
}

impl TweetRecord {
    /// Tweet-object shaped JSON that [`ingest_jsonl`] reads back unchanged.
    ///
    /// Entity arrays carry one empty object per counted entity and a present
    /// retweet is written as an empty `retweeted_status` object.
    pub fn to_json(&self) -> Value {
        let entity = |n: u64| Value::Array((0..n).map(|_| json!({})).collect());
        let mut obj = json!({
            "id_str": self.tweet_id,
            "created_at": format_timestamp(&self.created_at),
            "text": self.text,
            "retweet_count": self.retweet_count,
            "favorite_count": self.favorite_count,
            "in_reply_to_status_id_str": self.in_reply_to_status_id,
            "entities": {
                "urls": entity(self.url_entity_count),
                "hashtags": entity(self.hashtag_entity_count),
                "symbols": entity(self.symbol_entity_count),
            },
            "user": {
                "id_str": self.user_id,
                "verified": self.user_verified,
                "friends_count": self.user_friends_count,
                "followers_count": self.user_followers_count,
                "statuses_count": self.user_statuses_count,
                "favourites_count": self.user_favourites_count,
                "created_at": format_timestamp(&self.user_created_at),
            },
        });
        let map = obj.as_object_mut().expect("object literal");
        if self.retweeted_status_present {
            map.insert("retweeted_status".into(), json!({}));
        }
        if let Some(flag) = self.possibly_sensitive {
            map.insert("possibly_sensitive".into(), Value::Bool(flag));
        }
        if !self.matched_keywords.is_empty() {
            map.insert("matched_keywords".into(), json!(self.matched_keywords));
        }
        obj
    }

    /// The drug keyword a tweet is attributed to when it matched exactly one.
    pub fn single_keyword(&self) -> Option<&str> {
        match self.matched_keywords.len() {
            1 => self.matched_keywords.iter().next().map(String::as_str),
            _ => None,
        }
    }
}

pub fn write_jsonl(writer: impl Write, records: &[TweetRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for record in records {
        serde_json::to_writer(&mut w, &record.to_json())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_jsonl(path: impl AsRef<Path>, records: &[TweetRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_jsonl(file, records).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{"id_str":"1","created_at":"Wed Jun 03 17:42:11 +0000 2015","text":"buy codeine","retweet_count":2,"favorite_count":0,"in_reply_to_status_id":null,"possibly_sensitive":false,"entities":{"urls":[{"url":"http://x.co"}],"hashtags":[],"symbols":[]},"user":{"id_str":"u1","verified":false,"friends_count":12,"followers_count":28,"statuses_count":166995,"favourites_count":0,"created_at":"2014-05-01T00:00:00Z"}}"#;

    fn read(text: &str, mode: SchemaMode) -> Result<Vec<TweetRecord>> {
        read_jsonl(text.as_bytes(), mode)
    }

    #[test]
    fn empty_input_yields_no_records() {
        assert!(read("", SchemaMode::Strict).unwrap().is_empty());
    }

    #[test]
    fn classic_and_iso_timestamps() {
        let a = parse_timestamp("Wed Jun 03 17:42:11 +0000 2015").unwrap();
        let b = parse_timestamp("2015-06-03T17:42:11Z").unwrap();
        assert_eq!(a, b);
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn parses_full_record() {
        let recs = read(FULL, SchemaMode::Strict).unwrap();
        let r = &recs[0];
        assert_eq!(r.tweet_id, "1");
        assert_eq!(r.url_entity_count, 1);
        assert_eq!(r.user_statuses_count, 166_995);
        assert_eq!(r.possibly_sensitive, Some(false));
        assert!(!r.retweeted_status_present);
        assert_eq!(r.in_reply_to_status_id, None);
    }

    #[test]
    fn negative_count_is_schema_error() {
        let line = FULL.replace("\"retweet_count\":2", "\"retweet_count\":-1");
        for mode in [SchemaMode::Strict, SchemaMode::Lenient] {
            match read(&line, mode) {
                Err(Error::Schema { line, field, .. }) => {
                    assert_eq!(line, 1);
                    assert_eq!(field, "retweet_count");
                }
                other => panic!("expected schema error, got {other:?}"),
            }
        }
    }

    #[test]
    fn strict_names_missing_field_and_line() {
        let missing = FULL.replace("\"friends_count\":12,", "");
        let text = format!("{FULL}\n{missing}\n");
        match read(&text, SchemaMode::Strict) {
            Err(Error::Schema { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "user.friends_count");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
        let lenient = read(&text, SchemaMode::Lenient).unwrap();
        assert_eq!(lenient[1].user_friends_count, 0);
    }

    #[test]
    fn lenient_defaults_entities_and_sensitivity() {
        let line = r#"{"id_str":"9","created_at":"2015-06-03T17:42:11Z","text":"x","user":{"id_str":"u","created_at":"2013-01-01T00:00:00Z"}}"#;
        assert!(read(line, SchemaMode::Strict).is_err());
        let r = &read(line, SchemaMode::Lenient).unwrap()[0];
        assert_eq!(r.url_entity_count, 0);
        assert_eq!(r.hashtag_entity_count, 0);
        assert_eq!(r.possibly_sensitive, None);
    }

    #[test]
    fn lenient_skips_garbage_lines() {
        let text = format!("not json\n{FULL}\n[1,2]\n");
        assert_eq!(read(&text, SchemaMode::Lenient).unwrap().len(), 1);
        assert!(read(&text, SchemaMode::Strict).is_err());
    }

    #[test]
    fn serialize_then_ingest_round_trips() {
        let mut r = read(FULL, SchemaMode::Strict).unwrap().remove(0);
        r.retweeted_status_present = true;
        r.in_reply_to_status_id = Some("77".into());
        r.matched_keywords.insert("codeine".into());
        let mut buf = Vec::new();
        write_jsonl(&mut buf, std::slice::from_ref(&r)).unwrap();
        let back = read_jsonl(buf.as_slice(), SchemaMode::Strict).unwrap();
        assert_eq!(back, vec![r]);
    }
}
