use std::fmt;
use std::str::FromStr;

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};
use crate::screening::ClassLabel;

/// The thirteen metadata features, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureName {
    RetweetedStatus,
    RetweetCount,
    FavoriteCount,
    InReplyStatusId,
    PossiblySensitive,
    EntitiesUrls,
    EntitiesSymbols,
    EntitiesHashtags,
    UserVerified,
    UserFriendsCount,
    UserFollowerCount,
    UserStatusesCount,
    UserFavoritesCount,
}

pub const FEATURE_COUNT: usize = 13;

/// Which aspect of behaviour a feature describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureGroup {
    UserEngagement,
    TweetBased,
    UserNetwork,
    UserProfile,
}

impl FeatureGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::UserEngagement => "user_engagement",
            FeatureGroup::TweetBased => "tweet_based",
            FeatureGroup::UserNetwork => "user_network",
            FeatureGroup::UserProfile => "user_profile",
        }
    }
}

impl FeatureName {
    pub const ALL: [FeatureName; FEATURE_COUNT] = [
        FeatureName::RetweetedStatus,
        FeatureName::RetweetCount,
        FeatureName::FavoriteCount,
        FeatureName::InReplyStatusId,
        FeatureName::PossiblySensitive,
        FeatureName::EntitiesUrls,
        FeatureName::EntitiesSymbols,
        FeatureName::EntitiesHashtags,
        FeatureName::UserVerified,
        FeatureName::UserFriendsCount,
        FeatureName::UserFollowerCount,
        FeatureName::UserStatusesCount,
        FeatureName::UserFavoritesCount,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::RetweetedStatus => "retweeted_status",
            FeatureName::RetweetCount => "retweet_count",
            FeatureName::FavoriteCount => "favorite_count",
            FeatureName::InReplyStatusId => "in_reply_status_id",
            FeatureName::PossiblySensitive => "possibly_sensitive",
            FeatureName::EntitiesUrls => "entities_urls",
            FeatureName::EntitiesSymbols => "entities_symbols",
            FeatureName::EntitiesHashtags => "entities_hashtags",
            FeatureName::UserVerified => "user_verified",
            FeatureName::UserFriendsCount => "user_friends_count",
            FeatureName::UserFollowerCount => "user_follower_count",
            FeatureName::UserStatusesCount => "user_statuses_count",
            FeatureName::UserFavoritesCount => "user_favorites_count",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn group(self) -> FeatureGroup {
        use FeatureName::*;
        match self {
            RetweetedStatus | RetweetCount | FavoriteCount | InReplyStatusId => FeatureGroup::UserEngagement,
            PossiblySensitive | EntitiesUrls | EntitiesSymbols | EntitiesHashtags => FeatureGroup::TweetBased,
            UserFriendsCount | UserFollowerCount => FeatureGroup::UserNetwork,
            UserVerified | UserStatusesCount | UserFavoritesCount => FeatureGroup::UserProfile,
        }
    }

    /// Whether the feature only takes the values 0 and 1 (entity features
    /// only under [`EntityMode::Presence`]).
    pub fn is_indicator(self, entities: EntityMode) -> bool {
        use FeatureName::*;
        match self {
            RetweetedStatus | InReplyStatusId | PossiblySensitive | UserVerified => true,
            EntitiesUrls | EntitiesSymbols | EntitiesHashtags => entities == EntityMode::Presence,
            _ => false,
        }
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureName::ALL
            .into_iter()
            .find(|f| f.as_str() == s || (s == "in_reply_to_status_id" && *f == FeatureName::InReplyStatusId))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature `{s}`")))
    }
}

/// How URL, hashtag and symbol entities become features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntityMode {
    /// 1 when the tweet has at least one entity of the kind.
    #[default]
    Presence,
    /// The number of entities.
    Count,
}

/// One tweet's features, optionally with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub tweet_id: String,
    pub values: [f64; FEATURE_COUNT],
    pub label: Option<ClassLabel>,
}

impl FeatureVector {
    pub fn get(&self, feature: FeatureName) -> f64 {
        self.values[feature.index()]
    }

    pub fn with_label(mut self, label: ClassLabel) -> Self {
        self.label = Some(label);
        self
    }
}

fn indicator(flag: bool) -> f64 {
    if flag {
        1.0
    } else {
        0.0
    }
}

pub fn extract_features(record: &TweetRecord, entities: EntityMode) -> FeatureVector {
    let entity = |n: u64| match entities {
        EntityMode::Presence => indicator(n > 0),
        EntityMode::Count => n as f64,
    };
    let values = [
        indicator(record.retweeted_status_present),
        record.retweet_count as f64,
        record.favorite_count as f64,
        indicator(record.in_reply_to_status_id.is_some()),
        indicator(record.possibly_sensitive == Some(true)),
        entity(record.url_entity_count),
        entity(record.symbol_entity_count),
        entity(record.hashtag_entity_count),
        indicator(record.user_verified),
        record.user_friends_count as f64,
        record.user_followers_count as f64,
        record.user_statuses_count as f64,
        record.user_favourites_count as f64,
    ];
    FeatureVector {
        tweet_id: record.tweet_id.clone(),
        values,
        label: None,
    }
}

/// CSV with `tweet_id`, the thirteen features in order, and `label`
/// (empty when unlabelled).
pub fn write_features_csv(writer: impl std::io::Write, vectors: &[FeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["tweet_id"];
    header.extend(FeatureName::ALL.iter().map(|f| f.as_str()));
    header.push("label");
    w.write_record(&header)?;
    for v in vectors {
        let mut row = Vec::with_capacity(FEATURE_COUNT + 2);
        row.push(v.tweet_id.clone());
        row.extend(v.values.iter().map(f64::to_string));
        row.push(v.label.map(|l| l.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_features_csv(reader: impl std::io::Read) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("tweet_id")
        .chain(FeatureName::ALL.iter().map(|f| f.as_str()))
        .chain(std::iter::once("label"))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Format {
            what: "features",
            line: 1,
            reason: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let bad = |reason: String| Error::Format {
            what: "features",
            line: i + 2,
            reason,
        };
        let mut values = [0.0; FEATURE_COUNT];
        for (j, slot) in values.iter_mut().enumerate() {
            let raw = &row[j + 1];
            *slot = raw.parse().map_err(|_| bad(format!("bad value `{raw}`")))?;
        }
        let label = match &row[FEATURE_COUNT + 1] {
            "" => None,
            raw => Some(raw.parse().map_err(|e: Error| bad(e.to_string()))?),
        };
        out.push(FeatureVector {
            tweet_id: row[0].to_string(),
            values,
            label,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::testing::record_with_text;

    #[test]
    fn url_tweet_mapping() {
        let mut r = record_with_text("1", "buy now");
        r.url_entity_count = 1;
        let v = extract_features(&r, EntityMode::Presence);
        assert_eq!(v.get(FeatureName::EntitiesUrls), 1.0);
        assert_eq!(v.get(FeatureName::UserVerified), 0.0);
        assert_eq!(v.get(FeatureName::RetweetCount), 0.0);
        assert_eq!(v.label, None);
    }

    #[test]
    fn entity_modes() {
        let mut r = record_with_text("1", "x");
        r.url_entity_count = 3;
        r.hashtag_entity_count = 2;
        let p = extract_features(&r, EntityMode::Presence);
        let c = extract_features(&r, EntityMode::Count);
        assert_eq!(p.get(FeatureName::EntitiesUrls), 1.0);
        assert_eq!(c.get(FeatureName::EntitiesUrls), 3.0);
        assert_eq!(c.get(FeatureName::EntitiesHashtags), 2.0);
        assert_eq!(p.get(FeatureName::EntitiesSymbols), 0.0);
    }

    #[test]
    fn sensitivity_only_when_true() {
        let mut r = record_with_text("1", "x");
        for (flag, expected) in [(None, 0.0), (Some(false), 0.0), (Some(true), 1.0)] {
            r.possibly_sensitive = flag;
            assert_eq!(
                extract_features(&r, EntityMode::Presence).get(FeatureName::PossiblySensitive),
                expected
            );
        }
    }

    #[test]
    fn boolean_features() {
        let mut r = record_with_text("1", "x");
        r.retweeted_status_present = true;
        r.in_reply_to_status_id = Some("5".into());
        r.user_verified = true;
        let v = extract_features(&r, EntityMode::Presence);
        assert_eq!(v.get(FeatureName::RetweetedStatus), 1.0);
        assert_eq!(v.get(FeatureName::InReplyStatusId), 1.0);
        assert_eq!(v.get(FeatureName::UserVerified), 1.0);
    }

    #[test]
    fn names_parse_and_group() {
        for f in FeatureName::ALL {
            assert_eq!(f.as_str().parse::<FeatureName>().unwrap(), f);
        }
        assert_eq!(
            "in_reply_to_status_id".parse::<FeatureName>().unwrap(),
            FeatureName::InReplyStatusId
        );
        assert_eq!(FeatureName::UserFollowerCount.group(), FeatureGroup::UserNetwork);
        assert_eq!(FeatureName::UserVerified.group(), FeatureGroup::UserProfile);
        assert_eq!(
            FeatureName::ALL
                .iter()
                .filter(|f| f.group() == FeatureGroup::TweetBased)
                .count(),
            4
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut r = record_with_text("7", "x");
        r.user_statuses_count = 166_995;
        let vectors = vec![
            extract_features(&r, EntityMode::Presence).with_label(ClassLabel::Rogue),
            extract_features(&record_with_text("8", "y"), EntityMode::Presence),
        ];
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &vectors).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tweet_id,retweeted_status,retweet_count,favorite_count,in_reply_status_id,"));
        assert_eq!(read_features_csv(buf.as_slice()).unwrap(), vectors);
    }
}
