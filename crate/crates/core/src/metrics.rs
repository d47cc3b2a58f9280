//! Pre/post engagement outcomes and follow-change exclusions.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Arm;
use crate::lexicon::Topic;
use crate::text;
use crate::UserId;

/// Most recent items considered per activity window.
pub const WINDOW_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("snapshots belong to different users ({0} vs {1})")]
    UserMismatch(UserId, UserId),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate media id {0} in handle list")]
    DuplicateMediaId(UserId),
    #[error("unknown outcome {0:?}")]
    UnknownOutcome(String),
}

/// The five outcome variables, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Following,
    NewsRetweets,
    NewsLikes,
    PoliticalTweets,
    PoliticalLikes,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Following,
        Outcome::NewsRetweets,
        Outcome::NewsLikes,
        Outcome::PoliticalTweets,
        Outcome::PoliticalLikes,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Following => "Following",
            Outcome::NewsRetweets => "News (Re)tweets",
            Outcome::NewsLikes => "News Likes",
            Outcome::PoliticalTweets => "Political Tweets",
            Outcome::PoliticalLikes => "Political Likes",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Outcome::Following => "following",
            Outcome::NewsRetweets => "news_retweets",
            Outcome::NewsLikes => "news_likes",
            Outcome::PoliticalTweets => "political_tweets",
            Outcome::PoliticalLikes => "political_likes",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Outcome {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Outcome::ALL
            .into_iter()
            .find(|o| o.key() == s.trim())
            .ok_or_else(|| MetricsError::UnknownOutcome(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsHandle {
    pub name: String,
    pub handle: String,
    pub media_user_id: UserId,
}

/// Accounts of news organizations.
#[derive(Debug, Clone, Default)]
pub struct NewsHandleList {
    entries: Vec<NewsHandle>,
    ids: HashSet<UserId>,
}

impl NewsHandleList {
    pub fn new(entries: Vec<NewsHandle>) -> Result<Self, MetricsError> {
        let mut ids = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !ids.insert(e.media_user_id) {
                return Err(MetricsError::DuplicateMediaId(e.media_user_id));
            }
        }
        Ok(NewsHandleList { entries, ids })
    }

    /// `name,handle,media_user_id` CSV with header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, MetricsError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let entries = rdr.deserialize().collect::<Result<Vec<NewsHandle>, _>>()?;
        NewsHandleList::new(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        NewsHandleList::read_csv(std::fs::File::open(path)?)
    }

    pub fn contains(&self, id: UserId) -> bool {
        self.ids.contains(&id)
    }

    pub fn entries(&self) -> &[NewsHandle] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Decides whether an item's text is about politics.
pub trait PoliticalClassifier {
    fn is_political(&self, text: &str) -> bool;
}

/// Terms the reference classifier treats as political.
pub const POLITICAL_TERMS: &[&str] = &[
    "abortion",
    "ballot",
    "biden",
    "bipartisan",
    "campaign",
    "candidate",
    "capitol",
    "congress",
    "congressman",
    "congresswoman",
    "conservative",
    "constitution",
    "democracy",
    "democrat",
    "democrats",
    "election",
    "elections",
    "filibuster",
    "gop",
    "government",
    "governor",
    "impeachment",
    "legislation",
    "liberal",
    "midterms",
    "parliament",
    "policy",
    "politician",
    "politicians",
    "politics",
    "president",
    "republican",
    "republicans",
    "senate",
    "senator",
    "supreme",
    "tariffs",
    "trump",
    "vote",
    "voters",
    "voting",
    "whitehouse",
];

/// Keyword scorer: an item is political when its cleaned text contains at
/// least `min_hits` political terms.
#[derive(Debug, Clone)]
pub struct KeywordPoliticalClassifier {
    terms: HashSet<String>,
    min_hits: usize,
}

impl Default for KeywordPoliticalClassifier {
    fn default() -> Self {
        KeywordPoliticalClassifier::new(POLITICAL_TERMS.iter().copied(), 1)
    }
}

impl KeywordPoliticalClassifier {
    pub fn new<'a>(terms: impl IntoIterator<Item = &'a str>, min_hits: usize) -> Self {
        KeywordPoliticalClassifier {
            terms: terms.into_iter().map(str::to_lowercase).collect(),
            min_hits: min_hits.max(1),
        }
    }
}

impl PoliticalClassifier for KeywordPoliticalClassifier {
    fn is_political(&self, raw: &str) -> bool {
        let cleaned = text::strip_urls_and_symbols(raw);
        let mut hits = 0;
        for (_, t) in text::tokens_with_offsets(&cleaned) {
            if self.terms.contains(&t) {
                hits += 1;
                if hits >= self.min_hits {
                    return true;
                }
            }
        }
        false
    }
}

/// Caches another classifier's verdict per distinct text.
pub struct MemoClassifier<'c, C: ?Sized> {
    inner: &'c C,
    cache: RefCell<HashMap<String, bool>>,
}

impl<'c, C: PoliticalClassifier + ?Sized> MemoClassifier<'c, C> {
    pub fn new(inner: &'c C) -> Self {
        MemoClassifier {
            inner,
            cache: Default::default(),
        }
    }
}

impl<C: PoliticalClassifier + ?Sized> PoliticalClassifier for MemoClassifier<'_, C> {
    fn is_political(&self, text: &str) -> bool {
        if let Some(v) = self.cache.borrow().get(text) {
            return *v;
        }
        let v = self.inner.is_political(text);
        self.cache.borrow_mut().insert(text.to_string(), v);
        v
    }
}

/// One liked or posted item: who authored it, and its text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowItem<'a> {
    pub author: UserId,
    pub text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementSnapshot {
    pub user_id: UserId,
    pub news_follows: u64,
    pub news_like_pct: Option<f64>,
    pub news_rt_pct: Option<f64>,
    pub pol_like_pct: Option<f64>,
    pub pol_rt_pct: Option<f64>,
    pub window_likes: usize,
    pub window_tweets: usize,
    /// Political items among the (re)tweet window.
    pub political_tweets: usize,
}

impl EngagementSnapshot {
    pub fn value(&self, outcome: Outcome) -> Option<f64> {
        match outcome {
            Outcome::Following => Some(self.news_follows as f64),
            Outcome::NewsRetweets => self.news_rt_pct,
            Outcome::NewsLikes => self.news_like_pct,
            Outcome::PoliticalTweets => self.pol_rt_pct,
            Outcome::PoliticalLikes => self.pol_like_pct,
        }
    }
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Computes the five outcomes for one user.
///
/// `likes` and `tweets` are ordered most recent first; only the first
/// [`WINDOW_CAP`] items of each count. Percentages are absent for empty windows.
pub fn snapshot_engagement<C: PoliticalClassifier + ?Sized>(
    user_id: UserId,
    likes: &[WindowItem<'_>],
    tweets: &[WindowItem<'_>],
    followed: &BTreeSet<UserId>,
    handles: &NewsHandleList,
    political: &C,
) -> EngagementSnapshot {
    let likes = &likes[..likes.len().min(WINDOW_CAP)];
    let tweets = &tweets[..tweets.len().min(WINDOW_CAP)];
    let news_likes = likes.iter().filter(|i| handles.contains(i.author)).count();
    let news_rts = tweets.iter().filter(|i| handles.contains(i.author)).count();
    let pol_likes = likes
        .iter()
        .filter(|i| political.is_political(i.text))
        .count();
    let pol_rts = tweets
        .iter()
        .filter(|i| political.is_political(i.text))
        .count();
    EngagementSnapshot {
        user_id,
        news_follows: followed.iter().filter(|id| handles.contains(**id)).count() as u64,
        news_like_pct: pct(news_likes, likes.len()),
        news_rt_pct: pct(news_rts, tweets.len()),
        pol_like_pct: pct(pol_likes, likes.len()),
        pol_rt_pct: pct(pol_rts, tweets.len()),
        window_likes: likes.len(),
        window_tweets: tweets.len(),
        political_tweets: pol_rts,
    }
}

/// Post − pre for each outcome; absent where either side is absent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeDeltas(pub [Option<f64>; 5]);

impl OutcomeDeltas {
    pub fn get(&self, o: Outcome) -> Option<f64> {
        self.0[o.index()]
    }
}

pub fn compute_delta(
    pre: &EngagementSnapshot,
    post: &EngagementSnapshot,
) -> Result<OutcomeDeltas, MetricsError> {
    if pre.user_id != post.user_id {
        return Err(MetricsError::UserMismatch(pre.user_id, post.user_id));
    }
    let mut d = [None; 5];
    for o in Outcome::ALL {
        d[o.index()] = match (pre.value(o), post.value(o)) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        };
    }
    Ok(OutcomeDeltas(d))
}

/// Pre-treatment account totals used for balancing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AccountCovariates {
    pub favorites: f64,
    pub statuses: f64,
    pub followers: f64,
    pub following: f64,
}

impl AccountCovariates {
    pub const NAMES: [&'static str; 4] = [
        "Favourites count",
        "Statuses count",
        "Followers count",
        "Friends count",
    ];

    pub fn to_array(self) -> [f64; 4] {
        [
            self.favorites,
            self.statuses,
            self.followers,
            self.following,
        ]
    }
}

/// Everything the estimators need about one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub user_id: UserId,
    pub arm: Arm,
    pub treated: bool,
    pub d_following: Option<f64>,
    pub d_news_retweets: Option<f64>,
    pub d_news_likes: Option<f64>,
    pub d_political_tweets: Option<f64>,
    pub d_political_likes: Option<f64>,
    pub follow_total_pre: u64,
    pub follow_total_post: u64,
    /// Political (re)tweets in the pre-treatment window.
    pub pre_political_tweets: usize,
    pub topic: Option<Topic>,
    pub favorites: f64,
    pub statuses: f64,
    pub followers: f64,
    pub following: f64,
    pub keep_follow_cap200: bool,
    pub keep_follow_cap500: bool,
    pub keep_follow_uncapped: bool,
}

impl DeltaRecord {
    pub fn delta(&self, o: Outcome) -> Option<f64> {
        match o {
            Outcome::Following => self.d_following,
            Outcome::NewsRetweets => self.d_news_retweets,
            Outcome::NewsLikes => self.d_news_likes,
            Outcome::PoliticalTweets => self.d_political_tweets,
            Outcome::PoliticalLikes => self.d_political_likes,
        }
    }

    pub fn set_deltas(&mut self, d: &OutcomeDeltas) {
        self.d_following = d.get(Outcome::Following);
        self.d_news_retweets = d.get(Outcome::NewsRetweets);
        self.d_news_likes = d.get(Outcome::NewsLikes);
        self.d_political_tweets = d.get(Outcome::PoliticalTweets);
        self.d_political_likes = d.get(Outcome::PoliticalLikes);
    }

    pub fn covariates(&self) -> AccountCovariates {
        AccountCovariates {
            favorites: self.favorites,
            statuses: self.statuses,
            followers: self.followers,
            following: self.following,
        }
    }
}

pub fn write_delta_records<W: Write>(w: W, records: &[DeltaRecord]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(w);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_delta_records<R: Read>(r: R) -> Result<Vec<DeltaRecord>, MetricsError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<_>, _>>()?)
}

pub fn write_snapshots<W: Write>(w: W, snaps: &[EngagementSnapshot]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(w);
    for s in snaps {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshots<R: Read>(r: R) -> Result<Vec<EngagementSnapshot>, MetricsError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<_>, _>>()?)
}

/// Follow-change plausibility rule for the Following outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FollowExclusionPolicy {
    /// Relative change must be strictly above this (−0.2 = −20%).
    pub min_relative_change: f64,
    /// Relative change must be strictly below this (0.5 = +50%).
    pub max_relative_change: f64,
    /// Absolute increase must be strictly below this, when set.
    pub absolute_cap: Option<u64>,
}

impl Default for FollowExclusionPolicy {
    fn default() -> Self {
        FollowExclusionPolicy {
            min_relative_change: -0.2,
            max_relative_change: 0.5,
            absolute_cap: Some(200),
        }
    }
}

impl FollowExclusionPolicy {
    pub fn with_cap(self, cap: Option<u64>) -> Self {
        FollowExclusionPolicy {
            absolute_cap: cap,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowExclusion {
    Kept,
    BelowBand,
    AboveBand,
    AboveCap,
    /// Pre total was zero and post total was not.
    ZeroBaseline,
}

pub fn follow_exclusion(
    pre_total: u64,
    post_total: u64,
    policy: &FollowExclusionPolicy,
) -> FollowExclusion {
    let rel = if pre_total == 0 {
        if post_total == 0 {
            0.0
        } else {
            return FollowExclusion::ZeroBaseline;
        }
    } else {
        (post_total as f64 - pre_total as f64) / pre_total as f64
    };
    if rel <= policy.min_relative_change {
        return FollowExclusion::BelowBand;
    }
    if rel >= policy.max_relative_change {
        return FollowExclusion::AboveBand;
    }
    if let Some(cap) = policy.absolute_cap {
        let increase = post_total as i128 - pre_total as i128;
        if increase >= cap as i128 {
            return FollowExclusion::AboveCap;
        }
    }
    FollowExclusion::Kept
}

/// Records whose follow-total change passes `policy`. Applies to the
/// Following outcome only.
pub fn apply_follow_exclusions<'a>(
    records: &'a [DeltaRecord],
    policy: &FollowExclusionPolicy,
) -> Vec<&'a DeltaRecord> {
    records
        .iter()
        .filter(|r| {
            follow_exclusion(r.follow_total_pre, r.follow_total_post, policy)
                == FollowExclusion::Kept
        })
        .collect()
}
