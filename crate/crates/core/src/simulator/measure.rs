use std::collections::BTreeMap;

use crate::cohort::UserProfile;
use crate::lexicon::{classify_user_topic, Lexicon};
use crate::metrics::{
    compute_delta, follow_exclusion, snapshot_engagement, DeltaRecord, EngagementSnapshot,
    FollowExclusion, FollowExclusionPolicy, NewsHandleList, PoliticalClassifier,
};
use crate::UserId;

use super::{ActivityArchive, EventLog, SimError, SimUserOutcome};

/// Snapshots at both waves and the per-user delta records.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub pre: Vec<EngagementSnapshot>,
    pub post: Vec<EngagementSnapshot>,
    pub records: Vec<DeltaRecord>,
}

/// Collects pre/post snapshots from an activity archive and joins them with
/// assignment, treatment status, account covariates and the user's topic
/// (from their posts during the run). Users are emitted in id order.
#[allow(clippy::too_many_arguments)]
pub fn measure(
    profiles: &[UserProfile],
    outcomes: &[SimUserOutcome],
    archive: &ActivityArchive,
    events: &EventLog,
    lexicon: &Lexicon,
    news: &NewsHandleList,
    political: &dyn PoliticalClassifier,
    base_policy: &FollowExclusionPolicy,
) -> Result<Measurement, SimError> {
    let profiles: BTreeMap<UserId, &UserProfile> =
        profiles.iter().map(|p| (p.user_id, p)).collect();
    let outcomes: BTreeMap<UserId, &SimUserOutcome> =
        outcomes.iter().map(|o| (o.user_id, o)).collect();
    let posts = events.posts_by_user();
    let mut users: Vec<_> = archive.users.iter().collect();
    users.sort_by_key(|u| u.user_id);
    let keep = |pre: u64, post: u64, cap: Option<u64>| {
        follow_exclusion(pre, post, &base_policy.with_cap(cap)) == FollowExclusion::Kept
    };
    let mut m = Measurement {
        pre: Vec::with_capacity(users.len()),
        post: Vec::with_capacity(users.len()),
        records: Vec::with_capacity(users.len()),
    };
    for ua in users {
        let id = ua.user_id;
        let missing = |what: &str| SimError::Format(format!("user {id} has no {what}"));
        let profile = profiles.get(&id).ok_or_else(|| missing("profile"))?;
        let outcome = outcomes
            .get(&id)
            .ok_or_else(|| missing("simulation outcome"))?;
        let pre = snapshot_engagement(
            id,
            &archive.window(&ua.pre_likes),
            &archive.window(&ua.pre_tweets),
            &ua.pre_followed,
            news,
            political,
        );
        let post = snapshot_engagement(
            id,
            &archive.window(&ua.post_likes),
            &archive.window(&ua.post_tweets),
            &ua.post_followed,
            news,
            political,
        );
        let deltas = compute_delta(&pre, &post).map_err(|e| SimError::Format(e.to_string()))?;
        let user_posts = posts.get(&id).map(Vec::as_slice).unwrap_or(&[]);
        let (tp, tq) = (ua.following_total_pre, ua.following_total_post);
        let mut r = DeltaRecord {
            user_id: id,
            arm: outcome.arm,
            treated: outcome.treated,
            d_following: None,
            d_news_retweets: None,
            d_news_likes: None,
            d_political_tweets: None,
            d_political_likes: None,
            follow_total_pre: tp,
            follow_total_post: tq,
            pre_political_tweets: pre.political_tweets,
            topic: classify_user_topic(user_posts, lexicon),
            favorites: profile.favorites as f64,
            statuses: profile.statuses as f64,
            followers: profile.followers as f64,
            following: profile.following as f64,
            keep_follow_cap200: keep(tp, tq, Some(200)),
            keep_follow_cap500: keep(tp, tq, Some(500)),
            keep_follow_uncapped: keep(tp, tq, None),
        };
        r.set_deltas(&deltas);
        m.pre.push(pre);
        m.post.push(post);
        m.records.push(r);
    }
    Ok(m)
}
