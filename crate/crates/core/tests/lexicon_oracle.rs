mod common;

use std::collections::BTreeMap;

use nudge_core::lexicon::{
    classify_user_topic, match_keywords, read_lexicon, KeywordEntry, Lexicon,
};
use nudge_core::Topic;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute force: split on anything that is not alphanumeric, lowercase, then
/// look for each keyword's token sequence.
fn oracle(text: &str, lexicon: &Lexicon) -> Vec<String> {
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_lowercase())
            .collect()
    };
    let toks = split(text);
    let mut found: Vec<(usize, String)> = Vec::new();
    for e in lexicon.entries() {
        let kw = split(&e.keyword);
        if let Some(pos) =
            (0..toks.len()).find(|&i| toks.len() >= i + kw.len() && toks[i..i + kw.len()] == kw[..])
        {
            found.push((pos, e.keyword.clone()));
        }
    }
    found.sort();
    found.into_iter().map(|(_, k)| k).collect()
}

const FILLER: &[&str] = &[
    "the", "game", "tonight", "really", "love", "my", "day", "and", "so", "good", "ok",
];
const SEPARATORS: &[&str] = &[
    " ", "  ", ", ", "! ", "#", "@", "...", " - ", "\n", "/", "'", "😀",
];

fn random_post(lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> String {
    let kws: Vec<&str> = lexicon
        .entries()
        .iter()
        .map(|e| e.keyword.as_str())
        .collect();
    let n = rng.gen_range(1..12);
    let mut parts = Vec::new();
    for _ in 0..n {
        let word = match rng.gen_range(0..10) {
            0..=2 => kws.choose(rng).unwrap().to_string(),
            // Near misses: keyword glued to letters or digits.
            3 => format!("{}ish", kws.choose(rng).unwrap()),
            4 => format!("x{}", kws.choose(rng).unwrap()),
            5 => kws.choose(rng).unwrap().to_uppercase(),
            _ => FILLER.choose(rng).unwrap().to_string(),
        };
        parts.push(word);
        parts.push(SEPARATORS.choose(rng).unwrap().to_string());
    }
    parts.concat()
}

#[test]
fn thousand_post_corpus_matches_oracle() {
    let lexicon = common::shipped().lexicon;
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut with_match = 0;
    for _ in 0..1000 {
        let post = random_post(&lexicon, &mut rng);
        let got: Vec<String> = match_keywords(&post, &lexicon)
            .into_iter()
            .map(|m| m.keyword)
            .collect();
        assert_eq!(got, oracle(&post, &lexicon), "{post:?}");
        with_match += usize::from(!got.is_empty());
    }
    assert!(
        with_match > 300,
        "corpus should exercise matches: {with_match}"
    );
}

#[test]
fn documented_examples() {
    let lex = Lexicon::from_entries([KeywordEntry {
        keyword: "nba".into(),
        topic: Topic::Sports,
    }])
    .unwrap();
    assert_eq!(match_keywords("The NBA is back", &lex).len(), 1);
    assert!(match_keywords("NBAish fans", &lex).is_empty());
}

#[test]
fn planted_user_majorities() {
    let lexicon = common::shipped().lexicon;
    let by_topic: BTreeMap<Topic, Vec<&str>> = Topic::ALL
        .iter()
        .map(|t| {
            (
                *t,
                lexicon
                    .keywords_for(*t)
                    .filter(|k| !k.contains(' '))
                    .collect(),
            )
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts: BTreeMap<Topic, usize> = BTreeMap::new();
    for _ in 0..100 {
        let planted = *Topic::ALL.choose(&mut rng).unwrap();
        let others: Vec<Topic> = Topic::ALL
            .iter()
            .copied()
            .filter(|t| *t != planted)
            .collect();
        let majority = rng.gen_range(3..6);
        let mut posts = Vec::new();
        for _ in 0..majority {
            posts.push(format!(
                "so into {} lately",
                by_topic[&planted].choose(&mut rng).unwrap()
            ));
        }
        for _ in 0..majority - 1 {
            let t = others.choose(&mut rng).unwrap();
            posts.push(format!(
                "also {} sometimes",
                by_topic[t].choose(&mut rng).unwrap()
            ));
        }
        posts.push("nothing to see here".into());
        posts.shuffle(&mut rng);
        assert_eq!(classify_user_topic(&posts, &lexicon), Some(planted));
        *counts.entry(planted).or_default() += 1;
    }
    assert_eq!(counts.values().sum::<usize>(), 100);
}

fn token_strategy() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "nba",
        "NBA",
        "yoga",
        "oscars",
        "nbaish",
        "the",
        "fans",
        "Yoga!",
        "x",
        "super bowl",
        "bowl",
        "super",
    ])
    .prop_map(str::to_string)
}

fn small_lexicon() -> Lexicon {
    read_lexicon(
        "keyword,topic\nnba,sports\nsuper bowl,sports\nyoga,lifestyle\noscars,entertainment\n"
            .as_bytes(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn matches_are_whole_tokens(words in prop::collection::vec(token_strategy(), 0..12), seps in prop::collection::vec(prop::sample::select(vec![" ", ",", ".", "-", "🏀"]), 12)) {
        let lex = small_lexicon();
        let text: String = words.iter().zip(&seps).map(|(w, s)| format!("{w}{s}")).collect();
        let got: Vec<String> = match_keywords(&text, &lex).into_iter().map(|m| m.keyword).collect();
        prop_assert_eq!(&got, &oracle(&text, &lex));
        for k in &got {
            prop_assert!(lex.topic_of(k).is_some());
        }
    }

    #[test]
    fn classification_ignores_post_order(mut posts in prop::collection::vec(prop::collection::vec(token_strategy(), 0..6).prop_map(|w| w.join(" ")), 1..10), seed in any::<u64>()) {
        let lex = small_lexicon();
        let before = classify_user_topic(&posts, &lex);
        posts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(before, classify_user_topic(&posts, &lex));
    }
}

#[test]
fn shipped_lexicon_save_round_trips() {
    let path = common::data("lexicon.csv");
    let original = std::fs::read_to_string(&path).unwrap();
    let lex = nudge_core::lexicon::load_lexicon(&path).unwrap();
    let mut buf = Vec::new();
    lex.write_csv(&mut buf).unwrap();
    let again = read_lexicon(buf.as_slice()).unwrap();
    let mut buf2 = Vec::new();
    again.write_csv(&mut buf2).unwrap();
    assert_eq!(buf, buf2);
    assert_eq!(lex.len(), original.lines().count() - 1);
}
