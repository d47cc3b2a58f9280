//! Deterministic discrete-event platform: users post, the engine scrapes on a
//! fixed cycle and sends rate-limited replies, and an injected behavioral
//! response shifts post-period engagement for treated users.

mod activity;
mod archive;
mod measure;

pub use activity::*;
pub use archive::*;
pub use measure::*;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Arm;
use crate::cohort::UserProfile;
use crate::lexicon::{match_keywords, Lexicon, Topic};
use crate::metrics::{NewsHandleList, Outcome, WINDOW_CAP};
use crate::outlets::{select_outlet, OutletRecord};
use crate::replygen::{compose_reply, generate_reply, GateLexicons, Generator, Provenance};
use crate::UserId;

pub const HOUR: u64 = 3600;
pub const EVENT_LOG_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid activity model: {0}")]
    InvalidActivity(String),
    #[error("user {0} appears twice")]
    DuplicateUser(UserId),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Additive shift on one arm's post-period propensity for one outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueEffect {
    pub arm: Arm,
    pub outcome: Outcome,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub duration_days: u64,
    pub scrape_interval_hours: u64,
    pub reply_cooldown_hours: u64,
    /// Supplied per run rather than read from config files.
    #[serde(skip)]
    pub seed: u64,
    pub true_effects: Vec<TrueEffect>,
    /// Chance a user likes a reply they received.
    pub reply_like_probability: f64,
    /// Chance a news follow is dropped between waves.
    pub follow_churn: f64,
    pub spree_share: f64,
    pub wipe_share: f64,
    /// Build like and (re)tweet windows; follow data is always recorded.
    pub record_windows: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            duration_days: 14,
            scrape_interval_hours: 8,
            reply_cooldown_hours: 24,
            seed: 0,
            true_effects: Vec::new(),
            reply_like_probability: 0.03,
            follow_churn: 0.05,
            spree_share: 0.03,
            wipe_share: 0.02,
            record_windows: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.duration_days == 0 {
            return bad("duration must be positive".into());
        }
        if self.scrape_interval_hours == 0 || 24 % self.scrape_interval_hours != 0 {
            return bad(format!(
                "scrape interval {}h must divide 24",
                self.scrape_interval_hours
            ));
        }
        if self.reply_cooldown_hours < self.scrape_interval_hours {
            return bad("cooldown must be at least the scrape interval".into());
        }
        for e in &self.true_effects {
            if e.arm == Arm::Control {
                return bad("true effects cannot target the control arm".into());
            }
            if !e.shift.is_finite() {
                return bad("true effect shifts must be finite".into());
            }
        }
        for (name, p) in [
            ("reply_like_probability", self.reply_like_probability),
            ("follow_churn", self.follow_churn),
            ("spree_share", self.spree_share),
            ("wipe_share", self.wipe_share),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn cooldown_secs(&self) -> u64 {
        self.reply_cooldown_hours * HOUR
    }

    pub fn duration_secs(&self) -> u64 {
        self.duration_days * 24 * HOUR
    }

    pub fn shift(&self, arm: Arm, outcome: Outcome) -> f64 {
        self.true_effects
            .iter()
            .filter(|e| e.arm == arm && e.outcome == outcome)
            .map(|e| e.shift)
            .sum()
    }
}

/// Post-period propensities: `clamp(baseline + shift · treated, 0, 1)`.
/// Control users are never shifted.
pub fn behavioral_response(
    arm: Arm,
    treated: bool,
    baseline: &Propensities,
    config: &SimConfig,
) -> Propensities {
    let mut p = baseline.0;
    if treated && arm.is_treatment() {
        for o in Outcome::ALL {
            p[o.index()] = (p[o.index()] + config.shift(arm, o)).clamp(0.0, 1.0);
        }
    }
    Propensities(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDecision {
    Allow,
    Deny,
}

/// Allows a reply iff the user got none in `(now − cooldown, now]`; on
/// allow, records `now` as the user's last reply.
pub fn rate_limit_check(
    user: UserId,
    now: u64,
    cooldown: u64,
    state: &mut HashMap<UserId, u64>,
) -> RateDecision {
    match state.get(&user) {
        Some(&last) if last > now || now - last < cooldown => RateDecision::Deny,
        _ => {
            state.insert(user, now);
            RateDecision::Allow
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressReason {
    ControlArm,
    Cooldown,
    NoOutlet,
    GenerationFailed,
    ComposeFailed,
}

/// One log record; `t` is seconds since the start of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Post {
        t: u64,
        user: UserId,
        post_id: u64,
        text: String,
        keywords: Vec<String>,
    },
    Scrape {
        t: u64,
        tick: u64,
        new_posts: usize,
        keyword_posts: usize,
    },
    ReplySent {
        t: u64,
        user: UserId,
        post_id: u64,
        topic: Topic,
        outlet: String,
        url: String,
        full_text: String,
        provenance: Provenance,
    },
    ReplySuppressed {
        t: u64,
        user: UserId,
        post_id: u64,
        reason: SuppressReason,
    },
    /// The user liked the reply to `post_id`.
    Like { t: u64, user: UserId, post_id: u64 },
    Follow {
        t: u64,
        user: UserId,
        account: UserId,
    },
}

impl Event {
    pub fn t(&self) -> u64 {
        match self {
            Event::Post { t, .. }
            | Event::Scrape { t, .. }
            | Event::ReplySent { t, .. }
            | Event::ReplySuppressed { t, .. }
            | Event::Like { t, .. }
            | Event::Follow { t, .. } => *t,
        }
    }

    pub fn user(&self) -> Option<UserId> {
        match self {
            Event::Scrape { .. } => None,
            Event::Post { user, .. }
            | Event::ReplySent { user, .. }
            | Event::ReplySuppressed { user, .. }
            | Event::Like { user, .. }
            | Event::Follow { user, .. } => Some(*user),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LogHeader {
    schema: String,
    version: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    /// JSONL: a schema header line, then one event per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), SimError> {
        let header = LogHeader {
            schema: "eventlog".into(),
            version: EVENT_LOG_VERSION,
        };
        let fmt = |e: serde_json::Error| SimError::Format(e.to_string());
        serde_json::to_writer(&mut w, &header).map_err(fmt)?;
        w.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut w, e).map_err(fmt)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, SimError> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| SimError::Format("empty event log".into()))??;
        let header: LogHeader =
            serde_json::from_str(&first).map_err(|e| SimError::Format(format!("header: {e}")))?;
        if header.version != EVENT_LOG_VERSION {
            return Err(SimError::Format(format!(
                "unsupported event log version {}",
                header.version
            )));
        }
        let mut events = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(
                serde_json::from_str(&line)
                    .map_err(|e| SimError::Format(format!("line {}: {e}", i + 2)))?,
            );
        }
        Ok(EventLog { events })
    }

    pub fn replies(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::ReplySent { .. }))
    }

    /// Posts by each user, in log order.
    pub fn posts_by_user(&self) -> BTreeMap<UserId, Vec<&str>> {
        let mut m: BTreeMap<UserId, Vec<&str>> = BTreeMap::new();
        for e in &self.events {
            if let Event::Post { user, text, .. } = e {
                m.entry(*user).or_default().push(text);
            }
        }
        m
    }
}

/// A simulated cohort member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimUser {
    pub user_id: UserId,
    pub arm: Arm,
    pub activity: ActivityModel,
    /// Total accounts followed before the run.
    pub following: u64,
}

impl SimUser {
    /// Cohort member with a calibrated activity model. Windows hold the last
    /// 100 items, so they are full unless the account has fewer likes or
    /// statuses than that.
    pub fn from_profile(profile: &UserProfile, arm: Arm, cal: &Calibration, seed: u64) -> Self {
        let mut activity = activity_for_user(cal, seed, profile.user_id);
        activity.window_likes = profile.favorites.min(WINDOW_CAP as u64) as usize;
        activity.window_tweets = profile.statuses.min(WINDOW_CAP as u64) as usize;
        SimUser {
            user_id: profile.user_id,
            arm,
            activity,
            following: profile.following,
        }
    }
}

/// Reply generation inputs shared across the run.
pub struct ReplyBundle<'a> {
    pub generator: &'a dyn Generator,
    pub gates: &'a GateLexicons,
    pub templates: &'a [String],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimUserOutcome {
    pub user_id: UserId,
    pub arm: Arm,
    /// Received at least one reply.
    pub treated: bool,
    pub replies: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: EventLog,
    pub users: Vec<SimUserOutcome>,
    pub archive: ActivityArchive,
}

impl SimOutput {
    pub fn total_posts(&self) -> usize {
        self.events
            .events
            .iter()
            .filter(|e| matches!(e, Event::Post { .. }))
            .count()
    }

    pub fn keyword_posts(&self) -> usize {
        self.events
            .events
            .iter()
            .filter(|e| matches!(e, Event::Post { keywords, .. } if !keywords.is_empty()))
            .count()
    }

    pub fn total_replies(&self) -> usize {
        self.users.iter().map(|u| u.replies).sum()
    }
}

const KEYWORD_PATTERNS: &[&str] = &[
    "Anybody else watching {} tonight?",
    "Can't stop thinking about {} right now",
    "Hot take: {} is underrated",
    "Spent the whole evening on {} again",
    "Who else is excited about {} this week",
    "Honestly {} made my day",
];

fn draw_post_text<R: Rng + ?Sized>(slot: Option<Topic>, lexicon: &Lexicon, rng: &mut R) -> String {
    if let Some(topic) = slot {
        let kws: Vec<&str> = lexicon.keywords_for(topic).collect();
        if !kws.is_empty() {
            let kw = kws[rng.gen_range(0..kws.len())];
            return KEYWORD_PATTERNS[rng.gen_range(0..KEYWORD_PATTERNS.len())].replace("{}", kw);
        }
    }
    GENERAL_TEXTS[rng.gen_range(0..GENERAL_TEXTS.len())].to_string()
}

fn draw_slot<R: Rng + ?Sized>(mix: &[f64; 4], rng: &mut R) -> Option<Topic> {
    let u: f64 = rng.gen::<f64>() * mix.iter().sum::<f64>();
    let mut acc = 0.0;
    for (slot, p) in TOPIC_SLOTS.iter().zip(mix) {
        acc += p;
        if u < acc {
            return *slot;
        }
    }
    None
}

/// Post times (seconds) for one user inside `[start, end)`.
fn draw_post_times<R: Rng + ?Sized>(
    posting: &PostingProcess,
    start: u64,
    end: u64,
    rng: &mut R,
) -> Vec<u64> {
    match *posting {
        PostingProcess::Poisson { per_day } => {
            let lambda = per_day * (end - start) as f64 / (24 * HOUR) as f64;
            if lambda <= 0.0 {
                return Vec::new();
            }
            let k =
                rand_distr::Distribution::sample(&rand_distr::Poisson::new(lambda).unwrap(), rng)
                    as usize;
            let mut ts: Vec<u64> = (0..k).map(|_| rng.gen_range(start..end)).collect();
            ts.sort_unstable();
            ts
        }
        PostingProcess::Periodic {
            every_hours,
            offset_hours,
        } => {
            let (every, offset) = (every_hours * HOUR, offset_hours * HOUR);
            let first = if start <= offset {
                0
            } else {
                (start - offset).div_ceil(every)
            };
            (first..)
                .map(|j| offset + j * every)
                .take_while(|t| *t < end)
                .filter(|t| *t >= start)
                .collect()
        }
    }
}

const POST_STREAM: u64 = 10;
const REPLY_STREAM: u64 = 11;
const FOLLOW_STREAM: u64 = 12;
const WINDOW_STREAM: u64 = 13;

/// Runs the platform for the configured duration.
///
/// Each tick draws new posts, then scrapes at the tick's end: keyword posts by
/// treatment-arm users get a reply when the cooldown allows, in
/// (time, user id) order. Follow changes and activity windows are drawn after
/// the loop from each user's final treated flag.
pub fn run_simulation(
    users: &[SimUser],
    lexicon: &Lexicon,
    outlets: &[OutletRecord],
    news: &NewsHandleList,
    bundle: &ReplyBundle<'_>,
    config: &SimConfig,
) -> Result<SimOutput, SimError> {
    config.validate()?;
    let mut users: Vec<&SimUser> = users.iter().collect();
    users.sort_by_key(|u| u.user_id);
    for w in users.windows(2) {
        if w[0].user_id == w[1].user_id {
            return Err(SimError::DuplicateUser(w[0].user_id));
        }
    }
    for u in &users {
        u.activity.validate()?;
    }

    let interval = config.scrape_interval_hours * HOUR;
    let cooldown = config.cooldown_secs();
    let ticks = config.duration_secs() / interval;
    let mut post_rngs: Vec<ChaCha8Rng> = users
        .iter()
        .map(|u| stream_rng(config.seed, POST_STREAM, u.user_id.0))
        .collect();
    let mut reply_rng = stream_rng(config.seed, REPLY_STREAM, 0);
    let mut limiter: HashMap<UserId, u64> = HashMap::new();
    let mut replies: Vec<usize> = vec![0; users.len()];
    let mut events = Vec::new();
    let mut next_post_id = 0u64;

    for tick in 0..ticks {
        let (start, end) = (tick * interval, (tick + 1) * interval);
        // (time, user index, text)
        let mut posts: Vec<(u64, usize, String)> = Vec::new();
        for (ui, u) in users.iter().enumerate() {
            let rng = &mut post_rngs[ui];
            for t in draw_post_times(&u.activity.posting, start, end, rng) {
                let slot = draw_slot(&u.activity.topic_mix, rng);
                posts.push((t, ui, draw_post_text(slot, lexicon, rng)));
            }
        }
        posts.sort_by_key(|a| (a.0, a.1));
        let mut pending = Vec::new();
        for (t, ui, text) in posts.iter() {
            let matches = match_keywords(text, lexicon);
            let post_id = next_post_id;
            next_post_id += 1;
            if !matches.is_empty() {
                pending.push((post_id, *ui, text.as_str(), matches[0].topic));
            }
            events.push(Event::Post {
                t: *t,
                user: users[*ui].user_id,
                post_id,
                text: text.clone(),
                keywords: matches.into_iter().map(|m| m.keyword).collect(),
            });
        }
        events.push(Event::Scrape {
            t: end,
            tick,
            new_posts: posts.len(),
            keyword_posts: pending.len(),
        });
        for (post_id, ui, text, topic) in pending {
            let user = users[ui].user_id;
            let suppress = |reason| Event::ReplySuppressed {
                t: end,
                user,
                post_id,
                reason,
            };
            if !users[ui].arm.is_treatment() {
                events.push(suppress(SuppressReason::ControlArm));
                continue;
            }
            if matches!(limiter.get(&user), Some(&last) if end - last < cooldown) {
                events.push(suppress(SuppressReason::Cooldown));
                continue;
            }
            let Ok((outlet, url)) = select_outlet(topic, outlets, &mut reply_rng) else {
                events.push(suppress(SuppressReason::NoOutlet));
                continue;
            };
            let Ok(generated) = generate_reply(
                text,
                bundle.generator,
                bundle.gates,
                bundle.templates,
                &mut reply_rng,
            ) else {
                events.push(suppress(SuppressReason::GenerationFailed));
                continue;
            };
            let Ok(composed) = compose_reply(&generated.text, topic, outlet, url) else {
                events.push(suppress(SuppressReason::ComposeFailed));
                continue;
            };
            let decision = rate_limit_check(user, end, cooldown, &mut limiter);
            debug_assert_eq!(decision, RateDecision::Allow);
            replies[ui] += 1;
            events.push(Event::ReplySent {
                t: end,
                user,
                post_id,
                topic,
                outlet: outlet.name.clone(),
                url: composed.url,
                full_text: composed.full_text,
                provenance: generated.provenance,
            });
            if reply_rng.gen::<f64>() < config.reply_like_probability {
                events.push(Event::Like {
                    t: end,
                    user,
                    post_id,
                });
            }
        }
    }

    let mut archive = ActivityArchive::with_default_texts();
    let mut outcomes = Vec::with_capacity(users.len());
    let mut follow_events = Vec::new();
    for (ui, u) in users.iter().enumerate() {
        let treated = replies[ui] > 0;
        let post_p = behavioral_response(u.arm, treated, &u.activity.baseline, config);
        let mut frng = stream_rng(config.seed, FOLLOW_STREAM, u.user_id.0);
        let (pre_f, post_f) = draw_follows(
            u.activity.baseline.get(Outcome::Following),
            post_p.get(Outcome::Following),
            config.follow_churn,
            news,
            &mut frng,
        );
        let (tot_pre, tot_post) = draw_totals(
            u.following,
            pre_f.len(),
            post_f.len(),
            config.spree_share,
            config.wipe_share,
            &mut frng,
        );
        for account in post_f.difference(&pre_f) {
            follow_events.push(Event::Follow {
                t: frng.gen_range(0..config.duration_secs()),
                user: u.user_id,
                account: *account,
            });
        }
        let mut ua = UserArchive {
            user_id: u.user_id,
            pre_likes: Vec::new(),
            pre_tweets: Vec::new(),
            post_likes: Vec::new(),
            post_tweets: Vec::new(),
            pre_followed: pre_f,
            post_followed: post_f,
            following_total_pre: tot_pre,
            following_total_post: tot_post,
        };
        if config.record_windows {
            let mut wrng = stream_rng(config.seed, WINDOW_STREAM, u.user_id.0);
            let a = &u.activity;
            let b = &a.baseline;
            ua.pre_likes = draw_window(
                a.window_likes,
                b.get(Outcome::NewsLikes),
                b.get(Outcome::PoliticalLikes),
                news,
                &mut wrng,
            );
            ua.pre_tweets = draw_window(
                a.window_tweets,
                b.get(Outcome::NewsRetweets),
                b.get(Outcome::PoliticalTweets),
                news,
                &mut wrng,
            );
            if !a.silent_after {
                ua.post_likes = draw_window(
                    a.window_likes,
                    post_p.get(Outcome::NewsLikes),
                    post_p.get(Outcome::PoliticalLikes),
                    news,
                    &mut wrng,
                );
                ua.post_tweets = draw_window(
                    a.window_tweets,
                    post_p.get(Outcome::NewsRetweets),
                    post_p.get(Outcome::PoliticalTweets),
                    news,
                    &mut wrng,
                );
            }
        }
        archive.users.push(ua);
        outcomes.push(SimUserOutcome {
            user_id: u.user_id,
            arm: u.arm,
            treated,
            replies: replies[ui],
        });
    }
    events.extend(follow_events);
    // Stable: same-time events keep their emission order.
    events.sort_by_key(Event::t);

    Ok(SimOutput {
        events: EventLog { events },
        users: outcomes,
        archive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::KeywordEntry;
    use crate::replygen::ReferenceGenerator;

    fn lexicon() -> Lexicon {
        Lexicon::from_entries([
            KeywordEntry {
                keyword: "nba".into(),
                topic: Topic::Sports,
            },
            KeywordEntry {
                keyword: "netflix".into(),
                topic: Topic::Entertainment,
            },
            KeywordEntry {
                keyword: "skincare".into(),
                topic: Topic::Lifestyle,
            },
        ])
        .unwrap()
    }

    fn outlets() -> Vec<OutletRecord> {
        vec![OutletRecord {
            name: "The New York Times".into(),
            credibility: 44.72,
            bias: -7.81,
            handle: "@nytimes".into(),
            sections: Topic::ALL
                .iter()
                .map(|t| (*t, format!("https://www.nytimes.com/section/{t}")))
                .collect(),
        }]
    }

    fn run(users: &[SimUser], cfg: &SimConfig) -> SimOutput {
        let gates = GateLexicons::new(["damn"], ["subreddit"], ["lol ok"]);
        let templates = vec!["Interesting!".to_string()];
        let bundle = ReplyBundle {
            generator: &ReferenceGenerator,
            gates: &gates,
            templates: &templates,
        };
        run_simulation(
            users,
            &lexicon(),
            &outlets(),
            &NewsHandleList::default(),
            &bundle,
            cfg,
        )
        .unwrap()
    }

    fn daily_user(id: u64, arm: Arm) -> SimUser {
        SimUser {
            user_id: UserId(id),
            arm,
            activity: ActivityModel {
                posting: PostingProcess::Periodic {
                    every_hours: 24,
                    offset_hours: 1,
                },
                topic_mix: [1.0, 0.0, 0.0, 0.0],
                ..ActivityModel::inactive()
            },
            following: 100,
        }
    }

    #[test]
    fn rate_limiter_boundaries() {
        let mut s = HashMap::new();
        let u = UserId(1);
        assert_eq!(
            rate_limit_check(u, 0, 24 * HOUR, &mut s),
            RateDecision::Allow
        );
        assert_eq!(
            rate_limit_check(u, 8 * HOUR, 24 * HOUR, &mut s),
            RateDecision::Deny
        );
        assert_eq!(
            rate_limit_check(u, 24 * HOUR, 24 * HOUR, &mut s),
            RateDecision::Allow
        );
        assert_eq!(s[&u], 24 * HOUR);
    }

    #[test]
    fn daily_poster_gets_fourteen_replies() {
        let out = run(&[daily_user(1, Arm::FemaleBot)], &SimConfig::default());
        assert_eq!(out.users[0].replies, 14);
        assert!(out.users[0].treated);
    }

    #[test]
    fn control_never_replied() {
        let out = run(&[daily_user(1, Arm::Control)], &SimConfig::default());
        assert_eq!(out.total_replies(), 0);
        assert_eq!(
            out.events
                .events
                .iter()
                .filter(|e| matches!(
                    e,
                    Event::ReplySuppressed {
                        reason: SuppressReason::ControlArm,
                        ..
                    }
                ))
                .count(),
            14
        );
    }

    #[test]
    fn zero_activity_zero_posts() {
        let u = SimUser {
            user_id: UserId(5),
            arm: Arm::MaleBot,
            activity: ActivityModel::inactive(),
            following: 10,
        };
        let out = run(&[u], &SimConfig::default());
        assert_eq!((out.total_posts(), out.total_replies()), (0, 0));
    }

    #[test]
    fn two_posts_per_tick_second_is_cooldown() {
        let mut u = daily_user(1, Arm::MaleBot);
        u.activity.posting = PostingProcess::Periodic {
            every_hours: 4,
            offset_hours: 0,
        };
        let cfg = SimConfig {
            duration_days: 1,
            ..SimConfig::default()
        };
        let out = run(&[u], &cfg);
        assert_eq!(out.total_replies(), 1);
        let cool = out
            .events
            .events
            .iter()
            .filter(|e| {
                matches!(
                    e,
                    Event::ReplySuppressed {
                        reason: SuppressReason::Cooldown,
                        ..
                    }
                )
            })
            .count();
        assert_eq!(cool, 5);
    }

    #[test]
    fn deterministic_and_roundtrips() {
        let cal = Calibration::default();
        let users: Vec<SimUser> = (0..60)
            .map(|i| SimUser {
                user_id: UserId(i),
                arm: Arm::ALL[i as usize % 3],
                activity: activity_for_user(&cal, 7, UserId(i)),
                following: 300,
            })
            .collect();
        let cfg = SimConfig {
            seed: 11,
            ..SimConfig::default()
        };
        let a = run(&users, &cfg);
        let b = run(&users, &cfg);
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.events.write_jsonl(&mut buf).unwrap();
        assert_eq!(EventLog::read_jsonl(buf.as_slice()).unwrap(), a.events);
        assert!(a.events.events.windows(2).all(|w| w[0].t() <= w[1].t()));
    }

    #[test]
    fn config_validation() {
        let bad = |c: SimConfig| c.validate().is_err();
        assert!(bad(SimConfig {
            duration_days: 0,
            ..Default::default()
        }));
        assert!(bad(SimConfig {
            scrape_interval_hours: 7,
            ..Default::default()
        }));
        assert!(bad(SimConfig {
            reply_cooldown_hours: 4,
            ..Default::default()
        }));
        assert!(bad(SimConfig {
            true_effects: vec![TrueEffect {
                arm: Arm::Control,
                outcome: Outcome::NewsLikes,
                shift: 0.1
            }],
            ..Default::default()
        }));
        assert!(SimConfig::default().validate().is_ok());
    }

    #[test]
    fn behavioral_response_examples() {
        let cfg = SimConfig {
            true_effects: vec![TrueEffect {
                arm: Arm::FemaleBot,
                outcome: Outcome::NewsLikes,
                shift: 0.05,
            }],
            ..Default::default()
        };
        let mut base = [0.0; 5];
        base[Outcome::NewsLikes.index()] = 0.10;
        let p = behavioral_response(Arm::FemaleBot, true, &Propensities(base), &cfg);
        assert!((p.get(Outcome::NewsLikes) - 0.15).abs() < 1e-12);
        assert_eq!(
            behavioral_response(Arm::FemaleBot, false, &Propensities(base), &cfg).0,
            base
        );
        assert_eq!(
            behavioral_response(Arm::MaleBot, true, &Propensities(base), &cfg).0,
            base
        );
        base[Outcome::NewsLikes.index()] = 0.99;
        let p = behavioral_response(Arm::FemaleBot, true, &Propensities(base), &cfg);
        assert_eq!(p.get(Outcome::NewsLikes), 1.0);
    }
}
