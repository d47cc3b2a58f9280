mod common;

use nudge_core::assignment::assign_arms;
use nudge_core::replygen::ReferenceGenerator;
use nudge_core::simulator::*;
use nudge_core::UserId;

/// Full-size cohort with calibrated rates: reply volume and keyword share land
/// in the observed range (tens of thousands of replies, ~13% keyword posts).
#[test]
fn paper_shape_run_orders_of_magnitude() {
    let d = common::shipped();
    let n = 28_457;
    let cal = Calibration::default();
    let ids: Vec<UserId> = (0..n).map(|i| UserId(10_000 + i)).collect();
    let arms = assign_arms(&ids, 5, [1.0 / 3.0; 3]).unwrap();
    let users: Vec<SimUser> = ids
        .iter()
        .map(|id| SimUser {
            user_id: *id,
            arm: arms[id],
            activity: activity_for_user(&cal, 5, *id),
            following: 500,
        })
        .collect();
    let bundle = ReplyBundle {
        generator: &ReferenceGenerator,
        gates: &d.gates,
        templates: &d.templates,
    };
    let cfg = SimConfig {
        seed: 5,
        record_windows: false,
        ..Default::default()
    };
    let out = run_simulation(&users, &d.lexicon, &d.outlets, &d.news, &bundle, &cfg).unwrap();
    let share = out.keyword_posts() as f64 / out.total_posts() as f64;
    assert!((share - 0.132).abs() < 0.01, "keyword share {share}");
    let posts = out.total_posts() as f64;
    assert!((posts / 1_172_143.0).log10().abs() < 1.0, "posts {posts}");
    let replies = out.total_replies() as f64;
    assert!(
        (replies / 28_211.0).log10().abs() < 1.0,
        "replies {replies}"
    );
    let keyword_users: std::collections::HashSet<UserId> = out
        .events
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Post { user, keywords, .. } if !keywords.is_empty() => Some(*user),
            _ => None,
        })
        .collect();
    let no_keyword = 1.0 - keyword_users.len() as f64 / n as f64;
    assert!(
        (no_keyword - 0.23).abs() < 0.03,
        "no-keyword share {no_keyword}"
    );
}
