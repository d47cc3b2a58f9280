use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use crate::cohort::UserProfile;
use crate::lexicon::Topic;
use crate::metrics::Outcome;
use crate::UserId;

use super::SimError;

/// SplitMix64 finalizer; derives independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64, key: u64) -> u64 {
    let mut z =
        seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ key.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stream_rng(seed: u64, stream: u64, key: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream, key))
}

/// Engagement propensities indexed by [`Outcome`]:
///
/// - `Following`: chance of following each news account;
/// - `NewsRetweets` / `NewsLikes`: share of (re)tweets / likes authored by news accounts;
/// - `PoliticalTweets` / `PoliticalLikes`: share of (re)tweets / likes that are political.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propensities(pub [f64; 5]);

impl Propensities {
    pub fn get(&self, o: Outcome) -> f64 {
        self.0[o.index()]
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|p| (0.0..=1.0).contains(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PostingProcess {
    /// Homogeneous Poisson posting.
    Poisson { per_day: f64 },
    /// One post every `every_hours`, first at `offset_hours`.
    Periodic { every_hours: u64, offset_hours: u64 },
}

/// How one user behaves on the simulated platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityModel {
    pub posting: PostingProcess,
    /// Post topic mixture over sports, entertainment, lifestyle, none.
    pub topic_mix: [f64; 4],
    pub baseline: Propensities,
    /// Items in each pre/post like window.
    pub window_likes: usize,
    /// Items in each pre/post (re)tweet window.
    pub window_tweets: usize,
    /// No likes or (re)tweets at all after the intervention starts.
    pub silent_after: bool,
}

pub const TOPIC_SLOTS: [Option<Topic>; 4] = [
    Some(Topic::Sports),
    Some(Topic::Entertainment),
    Some(Topic::Lifestyle),
    None,
];

impl ActivityModel {
    /// A user who never posts or engages.
    pub fn inactive() -> Self {
        ActivityModel {
            posting: PostingProcess::Poisson { per_day: 0.0 },
            topic_mix: [0.0, 0.0, 0.0, 1.0],
            baseline: Propensities([0.0; 5]),
            window_likes: 0,
            window_tweets: 0,
            silent_after: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidActivity(m.to_string()));
        match self.posting {
            PostingProcess::Poisson { per_day } if !(per_day >= 0.0 && per_day.is_finite()) => {
                return bad("posting rate must be finite and non-negative");
            }
            PostingProcess::Periodic { every_hours: 0, .. } => {
                return bad("periodic posting needs a positive period")
            }
            _ => {}
        }
        if self.topic_mix.iter().any(|p| p.is_nan() || *p < 0.0)
            || (self.topic_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("topic mixture must be non-negative and sum to 1");
        }
        if !self.baseline.is_valid() {
            return bad("propensities must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Population calibration. Defaults target the observed aggregates: about
/// 13.2% of posts match a keyword and about 23% of users post no keyword
/// message over two weeks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Calibration {
    /// Gamma shape of the per-user posts-per-day rate.
    pub rate_shape: f64,
    /// Gamma scale of the per-user posts-per-day rate.
    pub rate_scale: f64,
    pub keyword_share: f64,
    /// Share of users whose main topic is sports, entertainment, lifestyle.
    pub main_topic_shares: [f64; 3],
    /// Share of a user's keyword posts on their main topic.
    pub main_topic_weight: f64,
    /// Mean propensities in [`Outcome`] order.
    pub propensity_means: [f64; 5],
    /// Beta concentration (alpha + beta) of the propensities.
    pub concentration: f64,
    pub silent_share: f64,
    /// Likes per (re)tweet when sizing windows.
    pub like_ratio: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            rate_shape: 0.667,
            rate_scale: 4.39,
            keyword_share: 0.132,
            main_topic_shares: [0.613, 0.3067, 0.0803],
            main_topic_weight: 0.75,
            propensity_means: [0.013, 0.0039, 0.0082, 0.1048, 0.1185],
            concentration: 20.0,
            silent_share: 0.05,
            like_ratio: 1.5,
        }
    }
}

fn beta_draw<R: Rng + ?Sized>(mean: f64, concentration: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean >= 1.0 {
        return 1.0;
    }
    Beta::new(mean * concentration, (1.0 - mean) * concentration)
        .map(|b| b.sample(rng))
        .unwrap_or(mean)
}

fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    rand_distr::Poisson::new(lambda)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

/// Draws one user's activity model from the calibrated population.
pub fn sample_activity<R: Rng + ?Sized>(cal: &Calibration, rng: &mut R) -> ActivityModel {
    let per_day = Gamma::new(cal.rate_shape, cal.rate_scale)
        .map(|g| g.sample(rng))
        .unwrap_or(0.0);
    let u: f64 = rng.gen();
    let main = if u < cal.main_topic_shares[0] {
        0
    } else if u < cal.main_topic_shares[0] + cal.main_topic_shares[1] {
        1
    } else {
        2
    };
    let q = cal.keyword_share.clamp(0.0, 1.0);
    let other = q * (1.0 - cal.main_topic_weight) / 2.0;
    let mut topic_mix = [other, other, other, 1.0 - q];
    topic_mix[main] = q * cal.main_topic_weight;
    let mut p = [0.0; 5];
    for (slot, mean) in p.iter_mut().zip(cal.propensity_means) {
        *slot = beta_draw(mean, cal.concentration, rng);
    }
    let tweets = (poisson_draw(14.0 * per_day, rng) + 1).min(100) as usize;
    let likes = (poisson_draw(14.0 * per_day * cal.like_ratio, rng) + 1).min(100) as usize;
    ActivityModel {
        posting: PostingProcess::Poisson { per_day },
        topic_mix,
        baseline: Propensities(p),
        window_likes: likes,
        window_tweets: tweets,
        silent_after: rng.gen::<f64>() < cal.silent_share,
    }
}

const ACTIVITY_STREAM: u64 = 1;
const PROFILE_STREAM: u64 = 2;

/// Activity model for one user, independent of cohort order.
pub fn activity_for_user(cal: &Calibration, seed: u64, user: UserId) -> ActivityModel {
    sample_activity(cal, &mut stream_rng(seed, ACTIVITY_STREAM, user.0))
}

/// Synthetic candidate table: mostly plausible accounts plus a tail that
/// fails each funnel stage.
pub fn synthetic_candidates(n: usize, seed: u64) -> Vec<UserProfile> {
    let followers = LogNormal::new(600f64.ln(), 1.1).unwrap();
    let following = LogNormal::new(700f64.ln(), 0.8).unwrap();
    let statuses = LogNormal::new(6000f64.ln(), 1.0).unwrap();
    let favorites = LogNormal::new(9000f64.ln(), 1.1).unwrap();
    let bot = Beta::new(2.0, 6.0).unwrap();
    (0..n)
        .map(|i| {
            let id = UserId(1_000_000 + i as u64);
            let mut rng = stream_rng(seed, PROFILE_STREAM, id.0);
            let weekly: f64 = Gamma::new(0.667, 4.39 * 7.0 * 0.132)
                .unwrap()
                .sample(&mut rng);
            let named_bot = rng.gen::<f64>() < 0.01;
            UserProfile {
                user_id: id,
                us_based: rng.gen::<f64>() < 0.92,
                english: rng.gen::<f64>() < 0.96,
                verified: rng.gen::<f64>() < 0.03,
                username: if named_bot {
                    format!("newsbot{i}")
                } else {
                    format!("user{i}")
                },
                followers: followers.sample(&mut rng).round() as u64,
                following: following.sample(&mut rng).round() as u64,
                statuses: statuses.sample(&mut rng).round() as u64,
                favorites: favorites.sample(&mut rng).round() as u64,
                listed: poisson_draw(4.0, &mut rng),
                bot_score: bot.sample(&mut rng),
                weekly_keyword_tweets: weekly.round() as u64,
                reply_only: rng.gen::<f64>() < 0.03,
            }
        })
        .collect()
}
