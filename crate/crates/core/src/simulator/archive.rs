use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::metrics::{NewsHandleList, WindowItem};
use crate::UserId;

use super::SimError;

/// Political sentences; each contains at least one reference political term.
pub const POLITICAL_TEXTS: &[&str] = &[
    "The senate vote on the new bill is happening tonight",
    "Cannot believe what the president said about the economy",
    "Midterms are coming, make sure you are registered for voting",
    "Congress still has not passed the budget legislation",
    "The governor just signed a controversial policy into law",
    "Republicans and democrats are fighting over the debt ceiling again",
    "This election will decide the future of our democracy",
    "The supreme court ruling is going to change everything",
    "Another campaign ad from a candidate I have never heard of",
    "Voters deserve better than these politicians",
    "Impeachment hearings are all over my feed today",
    "The conservative and liberal pundits agree on nothing",
    "Trump rally coverage is wall to wall tonight",
    "Biden announced new tariffs on imports",
    "My senator finally responded about the ballot measure",
    "Government shutdown talk is back in the news",
];

/// Everyday sentences with no political term.
pub const GENERAL_TEXTS: &[&str] = &[
    "Just finished my morning coffee and feeling great",
    "This weather is unreal, sunshine all week",
    "Anyone have a good podcast recommendation",
    "My dog learned a new trick today",
    "Traffic on the way home was brutal",
    "Trying a new pasta recipe tonight",
    "Monday again, how did that happen",
    "Finally cleaned out the garage",
    "Happy birthday to my little brother",
    "Cannot stop listening to this song",
    "Weekend plans involve a lot of sleep",
    "Who else is awake right now",
    "The sunset tonight was beautiful",
    "Need more hours in the day",
    "Best sandwich I have had in years",
    "Started reading a new book, so far so good",
    "My phone battery dies way too fast",
    "Thank you all for the kind messages",
    "Road trip this weekend, any stops to suggest",
    "Learning to knit is harder than it looks",
];

/// An archived like or (re)tweet: author and an index into the text table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchivedItem {
    pub author: UserId,
    pub text: u32,
}

/// Collected activity for one user at both collection waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserArchive {
    pub user_id: UserId,
    pub pre_likes: Vec<ArchivedItem>,
    pub pre_tweets: Vec<ArchivedItem>,
    pub post_likes: Vec<ArchivedItem>,
    pub post_tweets: Vec<ArchivedItem>,
    /// News accounts followed at each wave.
    pub pre_followed: BTreeSet<UserId>,
    pub post_followed: BTreeSet<UserId>,
    /// Total accounts followed at each wave.
    pub following_total_pre: u64,
    pub following_total_post: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActivityArchive {
    pub texts: Vec<String>,
    pub users: Vec<UserArchive>,
}

impl ActivityArchive {
    pub fn with_default_texts() -> Self {
        ActivityArchive {
            texts: POLITICAL_TEXTS
                .iter()
                .chain(GENERAL_TEXTS)
                .map(|s| s.to_string())
                .collect(),
            users: Vec::new(),
        }
    }

    pub fn text(&self, idx: u32) -> &str {
        &self.texts[idx as usize]
    }

    pub fn window<'a>(&'a self, items: &[ArchivedItem]) -> Vec<WindowItem<'a>> {
        items
            .iter()
            .map(|i| WindowItem {
                author: i.author,
                text: self.text(i.text),
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), SimError> {
        serde_json::to_writer(w, self).map_err(|e| SimError::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, SimError> {
        let a: ActivityArchive =
            serde_json::from_reader(r).map_err(|e| SimError::Format(e.to_string()))?;
        for u in &a.users {
            for i in u
                .pre_likes
                .iter()
                .chain(&u.pre_tweets)
                .chain(&u.post_likes)
                .chain(&u.post_tweets)
            {
                if i.text as usize >= a.texts.len() {
                    return Err(SimError::Format(format!(
                        "user {}: text index {} out of range",
                        u.user_id, i.text
                    )));
                }
            }
        }
        Ok(a)
    }
}

const GENERIC_AUTHOR_BASE: u64 = 1 << 40;

fn generic_author<R: Rng + ?Sized>(news: &NewsHandleList, rng: &mut R) -> UserId {
    loop {
        let id = UserId(GENERIC_AUTHOR_BASE + rng.gen_range(0..1_000_000));
        if !news.contains(id) {
            return id;
        }
    }
}

/// Draws `n` items: a news author with probability `p_news`, political text
/// with probability `p_political`, independently.
pub(crate) fn draw_window<R: Rng + ?Sized>(
    n: usize,
    p_news: f64,
    p_political: f64,
    news: &NewsHandleList,
    rng: &mut R,
) -> Vec<ArchivedItem> {
    let handles = news.entries();
    (0..n)
        .map(|_| {
            let author = if !handles.is_empty() && rng.gen::<f64>() < p_news {
                handles[rng.gen_range(0..handles.len())].media_user_id
            } else {
                generic_author(news, rng)
            };
            let text = if rng.gen::<f64>() < p_political {
                rng.gen_range(0..POLITICAL_TEXTS.len())
            } else {
                POLITICAL_TEXTS.len() + rng.gen_range(0..GENERAL_TEXTS.len())
            };
            ArchivedItem {
                author,
                text: text as u32,
            }
        })
        .collect()
}

/// News follow sets at both waves. Each handle is followed before with
/// probability `p_pre`; a followed handle is dropped with probability `churn`
/// and an unfollowed one picked up at the rate that makes the post-wave
/// follow probability `p_post`.
pub(crate) fn draw_follows<R: Rng + ?Sized>(
    p_pre: f64,
    p_post: f64,
    churn: f64,
    news: &NewsHandleList,
    rng: &mut R,
) -> (BTreeSet<UserId>, BTreeSet<UserId>) {
    let adopt = if p_pre < 1.0 {
        ((p_post - p_pre * (1.0 - churn)) / (1.0 - p_pre)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let mut pre = BTreeSet::new();
    let mut post = BTreeSet::new();
    for h in news.entries() {
        let before = rng.gen::<f64>() < p_pre;
        let after = if before {
            rng.gen::<f64>() >= churn
        } else {
            rng.gen::<f64>() < adopt
        };
        if before {
            pre.insert(h.media_user_id);
        }
        if after {
            post.insert(h.media_user_id);
        }
    }
    (pre, post)
}

/// Total followed accounts at both waves: news follow changes, small drift,
/// and rare follow sprees (150 to 700 new accounts) or wipes (half dropped).
pub(crate) fn draw_totals<R: Rng + ?Sized>(
    following: u64,
    pre_news: usize,
    post_news: usize,
    spree_share: f64,
    wipe_share: f64,
    rng: &mut R,
) -> (u64, u64) {
    let pre = following.max(pre_news as u64);
    let others = (pre - pre_news as u64) as f64;
    let drift = Normal::new(0.0, 0.03).unwrap().sample(rng);
    let u: f64 = rng.gen();
    let others_post = if u < spree_share {
        others + rng.gen_range(150.0..700.0)
    } else if u < spree_share + wipe_share {
        others * 0.5
    } else {
        others * (1.0 + drift)
    };
    let post = others_post.round().max(0.0) as u64 + post_news as u64;
    (pre, post)
}
