#![allow(dead_code)]

use nudge_core::lexicon::{load_lexicon, Lexicon};
use nudge_core::metrics::NewsHandleList;
use nudge_core::outlets::{load_outlets, OutletRecord};
use nudge_core::replygen::{load_templates, GateLexicons};

pub fn data(p: &str) -> String {
    format!("{}/../../data/{p}", env!("CARGO_MANIFEST_DIR"))
}

pub struct Shipped {
    pub lexicon: Lexicon,
    pub outlets: Vec<OutletRecord>,
    pub news: NewsHandleList,
    pub gates: GateLexicons,
    pub templates: Vec<String>,
}

pub fn shipped() -> Shipped {
    Shipped {
        lexicon: load_lexicon(data("lexicon.csv")).unwrap(),
        outlets: load_outlets(data("outlets.csv")).unwrap(),
        news: NewsHandleList::load(data("news_handles.csv")).unwrap(),
        gates: GateLexicons::load(
            data("profanity.txt"),
            data("platform_terms.txt"),
            data("generic_responses.txt"),
        )
        .unwrap(),
        templates: load_templates(data("templates.txt")).unwrap(),
    }
}
