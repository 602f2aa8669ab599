//! Seeded synthetic corpora for tests, examples and demos.
//!
//! Two generators live here. [`planted_topics`] builds bare token documents
//! from disjoint word communities. [`tweet_corpus`] builds full tweet
//! records: rogue tweets use sales vocabulary, carry a link and draw their
//! metadata from the rogue column of [`REFERENCE_MEANS`]; regular tweets mix
//! everyday themes with the regular column.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use crate::corpus::{build_doc_term, DocTermStats, TokenizedDoc, TweetRecord, Vocabulary};
use crate::features::{FeatureName, FEATURE_COUNT};
use crate::screening::ClassLabel;

/// Observed per-drug feature means, rogue column first, in feature order.
pub const REFERENCE_MEANS: [(&str, [f64; FEATURE_COUNT], [f64; FEATURE_COUNT]); 6] = [
    (
        "codeine",
        [
            0.0, 0.3234, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 12.39, 28.39, 166995.0, 0.0,
        ],
        [
            0.4131, 409.16, 386.82, 0.0658, 0.102, 0.1724, 0.0009, 0.1647, 0.0022, 1123.05, 2666.85, 38823.55, 5436.99,
        ],
    ),
    (
        "percocet",
        [
            0.0571, 0.4321, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 10.08, 31.025, 155576.0, 0.0,
        ],
        [
            0.4688, 244.13, 198.88, 0.0578, 0.023, 0.1764, 0.0048, 0.18, 0.0025, 1281.12, 3411.784, 41665.0, 6054.0,
        ],
    ),
    (
        "oxycontin",
        [
            0.0036, 0.0036, 0.0, 0.0, 0.0, 0.9927, 0.0, 0.0, 0.0, 15.03, 31.97, 159218.0, 0.0109,
        ],
        [
            0.2764, 7.2593, 5.1835, 0.0773, 0.0158, 0.7331, 0.0007, 0.3242, 0.0227, 1731.0, 7669.0, 41679.0, 4700.0,
        ],
    ),
    (
        "oxycodone",
        [
            0.0, 0.0, 0.0, 0.0, 0.0, 0.9999, 0.0, 0.0145, 0.0, 9.828, 25.518, 158638.0, 0.2956,
        ],
        [
            0.3075, 16.248, 8.7775, 0.0703, 0.0107, 0.7109, 0.0021, 0.4165, 0.0346, 1511.6, 11600.15, 50960.0, 3939.64,
        ],
    ),
    (
        "hydrocodone",
        [
            0.0992, 0.2977, 0.0, 0.0, 0.0, 0.8777, 0.0, 0.0114, 0.0, 37.4427, 110.52, 129878.0, 36.42,
        ],
        [
            0.1339, 1.6805, 2.5229, 0.1623, 0.0112, 0.2692, 0.0001, 0.1953, 0.0084, 1028.98, 3326.318, 38677.0, 7172.15,
        ],
    ),
    (
        "vicodin",
        [
            0.0147, 0.0147, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0221, 0.0, 12.2022, 46.48, 160245.0, 0.3492,
        ],
        [
            0.2062, 6.7211, 12.0797, 0.2034, 0.0134, 0.0769, 0.0011, 0.1528, 0.0045, 1342.68, 3066.871, 31104.78,
            13508.133,
        ],
    ),
];

/// Reference means for `drug` (rogue, regular), falling back to codeine.
pub fn reference_means(drug: &str) -> (&'static [f64; FEATURE_COUNT], &'static [f64; FEATURE_COUNT]) {
    let row = REFERENCE_MEANS
        .iter()
        .find(|(d, _, _)| *d == drug)
        .unwrap_or(&REFERENCE_MEANS[0]);
    (&row.1, &row.2)
}

/// Bare token documents drawn from disjoint word communities.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub stats: DocTermStats,
    /// Vocabulary indices (into `stats.vocabulary`) of each community.
    pub communities: Vec<Vec<usize>>,
    pub doc_community: Vec<usize>,
}

/// `docs` documents, each made of 5 or 6 distinct words of one community
/// of `community_size` words.
pub fn planted_topics(communities: usize, community_size: usize, docs: usize, seed: u64) -> PlantedCorpus {
    assert!(community_size >= 6, "communities need at least six words");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<Vec<String>> = (0..communities)
        .map(|c| (0..community_size).map(|w| format!("c{c}w{w}")).collect())
        .collect();
    let mut vocab = Vocabulary::new();
    for n in names.iter().flatten() {
        vocab.intern(n);
    }
    vocab.freeze();

    let mut out_docs = Vec::with_capacity(docs);
    let mut doc_community = Vec::with_capacity(docs);
    for d in 0..docs {
        let c = rng.random_range(0..communities);
        let len = rng.random_range(5..=6);
        let words: Vec<usize> = names[c]
            .choose_multiple(&mut rng, len)
            .map(|w| vocab.get(w).expect("interned"))
            .collect();
        out_docs.push(TokenizedDoc {
            tweet_id: format!("d{d}"),
            tokens: words,
        });
        doc_community.push(c);
    }
    let stats = build_doc_term(&out_docs, &vocab).expect("nonempty documents");
    let index = stats.vocabulary_index();
    let communities = names
        .iter()
        .map(|ws| ws.iter().map(|w| index.get(w).expect("in vocabulary")).collect())
        .collect();
    PlantedCorpus {
        stats,
        communities,
        doc_community,
    }
}

/// Words a rogue tweet is built from.
pub const SALES_WORDS: [&str; 16] = [
    "buy",
    "online",
    "order",
    "cheap",
    "pills",
    "price",
    "discount",
    "pharmacy",
    "free",
    "shipping",
    "quality",
    "offer",
    "quantity",
    "overnight",
    "delivery",
    "sale",
];

const REGULAR_THEMES: [&[&str]; 6] = [
    &["lean", "cup", "sprite", "dreams", "poured", "purple", "sipping"],
    &["teeth", "wisdom", "surgery", "pulled", "pain", "dentist", "recovery"],
    &["fda", "approval", "children", "pediatric", "abuse", "warning", "label"],
    &["deaths", "overdose", "police", "epidemic", "crisis", "heroin", "report"],
    &["sleep", "feel", "good", "makes", "tired", "night", "couch"],
    &["song", "lyrics", "album", "rapper", "verse", "track", "music"],
];

const FILLER: [&str; 12] = [
    "today", "really", "people", "gonna", "got", "life", "lol", "know", "time", "need", "right", "man",
];

#[derive(Debug, Clone)]
pub struct TweetCorpusConfig {
    pub drugs: Vec<String>,
    pub tweets_per_drug: usize,
    /// Share of tweets planted as rogue.
    pub rogue_fraction: f64,
    /// Distinct accounts posting the rogue tweets of each drug.
    pub rogue_accounts: usize,
    /// Chance that a regular tweet borrows one sales word ("buy", "free", ...).
    pub regular_sales_word_rate: f64,
}

impl Default for TweetCorpusConfig {
    fn default() -> Self {
        Self {
            drugs: vec!["codeine".into(), "oxycodone".into()],
            tweets_per_drug: 300,
            rogue_fraction: 0.2,
            rogue_accounts: 25,
            regular_sales_word_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledTweet {
    pub record: TweetRecord,
    pub label: ClassLabel,
}

/// Per-feature sampling law around a target mean.
#[derive(Debug, Clone, Copy)]
enum Law {
    Indicator(f64),
    /// Poisson counts; used for small means.
    Poisson(f64),
    /// Rounded log-normal counts with a point mass at zero.
    LogNormal {
        mean: f64,
        sigma: f64,
        zero: f64,
    },
}

impl Law {
    fn sample(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Law::Indicator(p) => f64::from(u8::from(rng.random_bool(p.clamp(0.0, 1.0)))),
            Law::Poisson(m) if m <= 0.0 => 0.0,
            Law::Poisson(m) => Poisson::new(m).expect("positive mean").sample(rng),
            Law::LogNormal { mean, .. } if mean <= 0.0 => 0.0,
            Law::LogNormal { mean, sigma, zero } => {
                if rng.random_bool(zero) {
                    return 0.0;
                }
                let positive_mean = mean / (1.0 - zero);
                let mu = positive_mean.ln() - sigma * sigma / 2.0;
                LogNormal::new(mu, sigma).expect("valid law").sample(rng).round()
            }
        }
    }
}

fn laws(means: &[f64; FEATURE_COUNT], rogue: bool) -> [Law; FEATURE_COUNT] {
    use FeatureName::*;
    std::array::from_fn(|j| {
        let f = FeatureName::ALL[j];
        let m = means[j];
        match f {
            RetweetedStatus | InReplyStatusId | PossiblySensitive | EntitiesUrls | EntitiesSymbols
            | EntitiesHashtags | UserVerified => Law::Indicator(m),
            _ if m < 5.0 => Law::Poisson(m),
            UserStatusesCount if rogue => Law::LogNormal {
                mean: m,
                sigma: 0.6,
                zero: 0.0,
            },
            _ if rogue => Law::LogNormal {
                mean: m,
                sigma: 0.5,
                zero: 0.0,
            },
            RetweetCount | FavoriteCount => Law::LogNormal {
                mean: m,
                sigma: 1.5,
                zero: 0.6,
            },
            UserFavoritesCount => Law::LogNormal {
                mean: m,
                sigma: 1.5,
                zero: 0.1,
            },
            _ => Law::LogNormal {
                mean: m,
                sigma: 1.2,
                zero: 0.02,
            },
        }
    })
}

/// Raw feature values (entity features as presence) for one population.
pub fn sample_population(means: &[f64; FEATURE_COUNT], rogue: bool, n: usize, seed: u64) -> Vec<[f64; FEATURE_COUNT]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let laws = laws(means, rogue);
    (0..n)
        .map(|_| std::array::from_fn(|j| laws[j].sample(&mut rng)))
        .collect()
}

fn timestamp(rng: &mut ChaCha8Rng, from: DateTime<Utc>, days: i64) -> DateTime<Utc> {
    from + Duration::seconds(rng.random_range(0..days * 86_400))
}

fn compose(rng: &mut ChaCha8Rng, drug: &str, pool: &[&str], words: std::ops::RangeInclusive<usize>) -> Vec<String> {
    let n = rng.random_range(words);
    let mut out: Vec<String> = pool.choose_multiple(rng, n).map(|w| w.to_string()).collect();
    out.push(drug.to_string());
    if rng.random_bool(0.5) {
        out.push(FILLER.choose(rng).expect("nonempty").to_string());
    }
    out.shuffle(rng);
    out
}

/// A keyword-matching tweet corpus with planted rogue tweets.
pub fn tweet_corpus(config: &TweetCorpusConfig, seed: u64) -> Vec<LabeledTweet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window_start = Utc.with_ymd_and_hms(2015, 6, 1, 0, 0, 0).unwrap();
    let accounts_start = Utc.with_ymd_and_hms(2008, 1, 1, 0, 0, 0).unwrap();
    let recent_start = Utc.with_ymd_and_hms(2014, 1, 1, 0, 0, 0).unwrap();
    let mut out = Vec::new();
    let mut next_id = 100_000u64;

    for drug in &config.drugs {
        let (rogue_means, regular_means) = reference_means(drug);
        let rogue_laws = laws(rogue_means, true);
        let regular_laws = laws(regular_means, false);
        let rogue_users: Vec<(String, DateTime<Utc>)> = (0..config.rogue_accounts)
            .map(|i| {
                let created = if rng.random_bool(0.75) {
                    timestamp(&mut rng, recent_start, 500)
                } else {
                    timestamp(&mut rng, accounts_start, 2190)
                };
                (format!("rx-{drug}-{i}"), created)
            })
            .collect();

        for _ in 0..config.tweets_per_drug {
            next_id += 1;
            let rogue = rng.random_bool(config.rogue_fraction);
            let (laws, mut words) = if rogue {
                (&rogue_laws, compose(&mut rng, drug, &SALES_WORDS, 3..=5))
            } else {
                let theme = REGULAR_THEMES.choose(&mut rng).expect("nonempty");
                let mut words = compose(&mut rng, drug, theme, 2..=4);
                if rng.random_bool(config.regular_sales_word_rate) {
                    words.push(SALES_WORDS.choose(&mut rng).expect("nonempty").to_string());
                }
                (&regular_laws, words)
            };
            let f: [f64; FEATURE_COUNT] = std::array::from_fn(|j| laws[j].sample(&mut rng));
            let has = |feature: FeatureName| f[feature.index()] > 0.0;
            let count = |feature: FeatureName| f[feature.index()] as u64;

            if has(FeatureName::EntitiesHashtags) {
                let w = words.pop().unwrap_or_else(|| drug.clone());
                words.push(format!("#{w}"));
            }
            let mut text = words.join(" ");
            if has(FeatureName::EntitiesUrls) {
                text.push_str(&format!(" https://t.co/{:x}", rng.random::<u32>()));
            }
            if has(FeatureName::RetweetedStatus) {
                text = format!("RT @user{}: {text}", rng.random_range(0..500));
            }

            let (user_id, user_created_at) = if rogue {
                rogue_users.choose(&mut rng).expect("rogue accounts").clone()
            } else {
                (
                    format!("u{}", rng.random_range(0..1_000_000u32)),
                    timestamp(&mut rng, accounts_start, 2700),
                )
            };
            let record = TweetRecord {
                tweet_id: next_id.to_string(),
                created_at: timestamp(&mut rng, window_start, 180),
                text,
                retweeted_status_present: has(FeatureName::RetweetedStatus),
                retweet_count: count(FeatureName::RetweetCount),
                favorite_count: count(FeatureName::FavoriteCount),
                in_reply_to_status_id: has(FeatureName::InReplyStatusId).then(|| (next_id - 7).to_string()),
                possibly_sensitive: Some(has(FeatureName::PossiblySensitive)),
                url_entity_count: count(FeatureName::EntitiesUrls),
                hashtag_entity_count: count(FeatureName::EntitiesHashtags),
                symbol_entity_count: count(FeatureName::EntitiesSymbols),
                user_id,
                user_verified: has(FeatureName::UserVerified),
                user_friends_count: count(FeatureName::UserFriendsCount),
                user_followers_count: count(FeatureName::UserFollowerCount),
                user_statuses_count: count(FeatureName::UserStatusesCount),
                user_favourites_count: count(FeatureName::UserFavoritesCount),
                user_created_at,
                matched_keywords: Default::default(),
            };
            out.push(LabeledTweet {
                record,
                label: if rogue { ClassLabel::Rogue } else { ClassLabel::NonRogue },
            });
        }
    }
    out
}
