//! Seeded synthetic corpora for demos, tests, and benchmarks.
//!
//! The generated dialogues follow templated turn patterns covering every
//! action type. Utterance keywords, gold click targets, and input spans
//! are constructed so a policy can actually learn the mapping:
//!
//! - click targets carry a `go` marker token plus the keyword named in the
//!   utterance, distractor items never do;
//! - input texts are two-token spans `<va> <vb>` spoken verbatim in the
//!   current utterance, with start and end tokens drawn from disjoint
//!   vocabularies;
//! - swipe direction, back, and clear turns name their operation.
//!
//! `uniform_type_corpus` intentionally violates turn validity (no trailing
//! `End`) to produce gold action types that are exactly uniform; it is for
//! in-memory metric experiments only.

use crate::actions::{Action, SwipeDirection};
use crate::corpus::{save_corpus, CorpusError, Domain, Episode, ScreenSource, TraceStep, Turn};
use crate::hierarchy::{BBox, Screen, ViewNode};
use crate::rng::SplitMix64;
use std::collections::BTreeSet;
use std::collections::HashMap;
use std::path::Path;

const FILLER_WORDS: [&str; 10] =
    ["list", "entry", "row", "panel", "banner", "label", "section", "card", "tile", "note"];
const KEYWORDS: [&str; 8] = [
    "checkout", "confirm", "search", "details", "submit", "refresh", "directions", "bookmark",
];
const VALUE_STARTS: [&str; 8] =
    ["seven", "blue", "north", "cedar", "ninety", "velvet", "amber", "quartz"];
const VALUE_ENDS: [&str; 8] =
    ["pm", "street", "avenue", "lane", "degrees", "tonight", "plaza", "gate"];
const ITEM_CLASSES: [&str; 4] = [
    "android.widget.TextView",
    "android.widget.Button",
    "android.widget.ImageView",
    "android.widget.CheckBox",
];
const APPS: [(&str, Domain); 8] = [
    ("com.dailyforecast.weather", Domain::Weather),
    ("com.accurate.weather.forecast.live", Domain::Weather),
    ("me.proton.android.calendar", Domain::Calendar),
    ("com.simplemobiletools.calendar", Domain::Calendar),
    ("com.google.android.googlequicksearchbox", Domain::Search),
    ("com.ubercab", Domain::Taxi),
    ("com.booking", Domain::Hotel),
    ("com.yelp.android", Domain::Restaurant),
];

fn leaf(class: &str, text: String, clickable: bool, bbox: BBox) -> ViewNode {
    ViewNode {
        node_class: class.to_string(),
        text,
        content_desc: String::new(),
        resource_id: String::new(),
        clickable_attr: clickable,
        bounds: bbox,
        children: Vec::new(),
    }
}

/// Build a screen with the given item texts, one clickable leaf per text,
/// laid out as vertical rows.
pub fn screen_with_items(texts: &[String], rng: &mut SplitMix64) -> Screen {
    let mut children = Vec::with_capacity(texts.len());
    for (i, text) in texts.iter().enumerate() {
        let top = 160 + (i as i64) * 180;
        let bbox = BBox { left: 40, top, right: 1040, bottom: top + 160 };
        let class = ITEM_CLASSES[rng.next_below(ITEM_CLASSES.len())];
        children.push(leaf(class, text.clone(), true, bbox));
    }
    let root = ViewNode {
        node_class: "android.widget.FrameLayout".to_string(),
        text: String::new(),
        content_desc: String::new(),
        resource_id: String::new(),
        clickable_attr: false,
        bounds: BBox { left: 0, top: 0, right: 1080, bottom: 1920 },
        children,
    };
    Screen::from_hierarchy(root, (1080, 1920), None)
}

fn filler_text(rng: &mut SplitMix64) -> String {
    let a = FILLER_WORDS[rng.next_below(FILLER_WORDS.len())];
    let b = FILLER_WORDS[rng.next_below(FILLER_WORDS.len())];
    format!("{a} {b}")
}

/// A screen of `n_fillers + 1` items where exactly one item is the click
/// target, marked with `go <keyword>`. Returns the screen and the target
/// item index.
fn target_screen(keyword: &str, n_fillers: usize, rng: &mut SplitMix64) -> (Screen, usize) {
    let target_pos = rng.next_below(n_fillers + 1);
    let mut texts = Vec::with_capacity(n_fillers + 1);
    for i in 0..=n_fillers {
        if i == target_pos {
            texts.push(format!("go {keyword}"));
        } else {
            texts.push(filler_text(rng));
        }
    }
    (screen_with_items(&texts, rng), target_pos)
}

fn generic_screen(rng: &mut SplitMix64) -> Screen {
    let k = 2 + rng.next_below(3);
    let texts: Vec<String> = (0..k).map(|_| filler_text(rng)).collect();
    screen_with_items(&texts, rng)
}

struct TurnDraft {
    user: String,
    response: String,
    actions: Vec<(Screen, Action)>,
}

/// The five turn templates; between them they exercise all seven action
/// types.
fn draft_turn(rng: &mut SplitMix64) -> TurnDraft {
    let kw = KEYWORDS[rng.next_below(KEYWORDS.len())];
    let va = VALUE_STARTS[rng.next_below(VALUE_STARTS.len())];
    let vb = VALUE_ENDS[rng.next_below(VALUE_ENDS.len())];
    let n_fillers = 2 + rng.next_below(3);
    match rng.next_below(5) {
        0 => {
            let (screen, target) = target_screen(kw, n_fillers, rng);
            TurnDraft {
                user: format!("press the {kw} button"),
                response: format!("done , i pressed {kw}"),
                actions: vec![
                    (screen, Action::Click { item: target }),
                    (generic_screen(rng), Action::End),
                ],
            }
        }
        1 => TurnDraft {
            user: format!("type {va} {vb} in the field"),
            response: format!("entered {va} {vb} for you"),
            actions: vec![
                (generic_screen(rng), Action::Input { text: format!("{va} {vb}") }),
                (generic_screen(rng), Action::Enter),
                (generic_screen(rng), Action::End),
            ],
        },
        2 => {
            let direction =
                if rng.next_below(2) == 0 { SwipeDirection::Up } else { SwipeDirection::Down };
            let (screen, target) = target_screen(kw, n_fillers, rng);
            TurnDraft {
                user: format!("scroll {} and press the {kw} button", direction.name()),
                response: format!("scrolled {} and pressed {kw}", direction.name()),
                actions: vec![
                    (generic_screen(rng), Action::Swipe { direction }),
                    (screen, Action::Click { item: target }),
                    (generic_screen(rng), Action::End),
                ],
            }
        }
        3 => TurnDraft {
            user: "go back to the start".to_string(),
            response: "went back".to_string(),
            actions: vec![
                (generic_screen(rng), Action::Back),
                (generic_screen(rng), Action::End),
            ],
        },
        _ => TurnDraft {
            user: format!("erase it and type {va} {vb}"),
            response: format!("replaced it with {va} {vb}"),
            actions: vec![
                (generic_screen(rng), Action::Clear),
                (generic_screen(rng), Action::Input { text: format!("{va} {vb}") }),
                (generic_screen(rng), Action::End),
            ],
        },
    }
}

fn build_turn(draft: TurnDraft, domain: Domain, app: &str) -> Turn {
    Turn {
        user_utterance: draft.user,
        system_response: draft.response,
        trace: draft
            .actions
            .into_iter()
            .map(|(screen, action)| TraceStep {
                screen,
                source: ScreenSource::default(),
                action,
            })
            .collect(),
        apps: BTreeSet::from([app.to_string()]),
        domain,
    }
}

/// A small valid corpus with mixed domains, apps, and turn templates.
pub fn fixture_like_corpus(n_episodes: usize, seed: u64) -> Vec<Episode> {
    let mut rng = SplitMix64::new(seed ^ 0x5f17_c0de);
    let mut episodes = Vec::with_capacity(n_episodes);
    for e in 0..n_episodes {
        let (app, domain) = APPS[e % APPS.len()];
        let n_turns = 2 + rng.next_below(3);
        let turns =
            (0..n_turns).map(|_| build_turn(draft_turn(&mut rng), domain, app)).collect();
        episodes.push(Episode { episode_id: format!("synth-{e:03}"), turns });
    }
    episodes
}

/// A valid corpus with at least `min_actions` data points, sized for
/// policy training runs.
pub fn learnable_corpus(min_actions: usize, seed: u64) -> Vec<Episode> {
    let mut rng = SplitMix64::new(seed ^ 0x7ea6_ab1e);
    let mut episodes = Vec::new();
    let mut actions = 0;
    let mut e = 0;
    while actions < min_actions {
        let (app, domain) = APPS[e % APPS.len()];
        let n_turns = 2 + rng.next_below(2);
        let turns: Vec<Turn> =
            (0..n_turns).map(|_| build_turn(draft_turn(&mut rng), domain, app)).collect();
        actions += turns.iter().map(|t| t.trace.len()).sum::<usize>();
        episodes.push(Episode { episode_id: format!("learn-{e:03}"), turns });
        e += 1;
    }
    episodes
}

/// `n_points` data points whose gold action types are sampled uniformly
/// from all seven types. Turn invariants are deliberately not respected
/// (no trailing `End`), so this corpus is for in-memory use only.
pub fn uniform_type_corpus(n_points: usize, seed: u64) -> Vec<Episode> {
    let mut rng = SplitMix64::new(seed ^ 0x0421_f04d);
    let mut episodes = Vec::new();
    let mut remaining = n_points;
    let mut e = 0;
    while remaining > 0 {
        let turn_len = remaining.min(5);
        remaining -= turn_len;
        let (app, domain) = APPS[e % APPS.len()];
        let trace: Vec<TraceStep> = (0..turn_len)
            .map(|_| {
                let screen = generic_screen(&mut rng);
                let k = screen.items.len();
                let action = match rng.next_below(7) {
                    0 => Action::Click { item: rng.next_below(k) },
                    1 => Action::Swipe {
                        direction: if rng.next_below(2) == 0 {
                            SwipeDirection::Up
                        } else {
                            SwipeDirection::Down
                        },
                    },
                    2 => {
                        let va = VALUE_STARTS[rng.next_below(VALUE_STARTS.len())];
                        let vb = VALUE_ENDS[rng.next_below(VALUE_ENDS.len())];
                        Action::Input { text: format!("{va} {vb}") }
                    }
                    3 => Action::Enter,
                    4 => Action::Clear,
                    5 => Action::Back,
                    _ => Action::End,
                };
                TraceStep { screen, source: ScreenSource::default(), action }
            })
            .collect();
        episodes.push(Episode {
            episode_id: format!("uniform-{e:05}"),
            turns: vec![Turn {
                user_utterance: "do the next step".to_string(),
                system_response: "ok".to_string(),
                trace,
                apps: BTreeSet::from([app.to_string()]),
                domain,
            }],
        });
        e += 1;
    }
    episodes
}

/// A valid corpus (every turn ends in `End`, nowhere else) whose modal
/// action type is `Click`, not `End`.
pub fn click_heavy_corpus(n_turns: usize, seed: u64) -> Vec<Episode> {
    let mut rng = SplitMix64::new(seed ^ 0xc11c_4ea7);
    let mut episodes = Vec::new();
    for e in 0..n_turns {
        let (app, domain) = APPS[e % APPS.len()];
        let kw = KEYWORDS[rng.next_below(KEYWORDS.len())];
        let (s1, t1) = target_screen(kw, 3, &mut rng);
        let (s2, t2) = target_screen(kw, 3, &mut rng);
        let turn = Turn {
            user_utterance: format!("press the {kw} button twice"),
            system_response: format!("pressed {kw} twice"),
            trace: vec![
                TraceStep {
                    screen: s1,
                    source: ScreenSource::default(),
                    action: Action::Click { item: t1 },
                },
                TraceStep {
                    screen: s2,
                    source: ScreenSource::default(),
                    action: Action::Click { item: t2 },
                },
                TraceStep {
                    screen: generic_screen(&mut rng),
                    source: ScreenSource::default(),
                    action: Action::End,
                },
            ],
            apps: BTreeSet::from([app.to_string()]),
            domain,
        };
        episodes.push(Episode { episode_id: format!("clicky-{e:04}"), turns: vec![turn] });
    }
    episodes
}

/// Render a view hierarchy back to uiautomator-style XML.
pub fn hierarchy_to_xml(root: &ViewNode) -> String {
    fn escape(s: &str) -> String {
        s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
    }
    fn write_node(node: &ViewNode, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        out.push_str(&format!(
            "{pad}<node class=\"{}\" text=\"{}\" content-desc=\"{}\" resource-id=\"{}\" clickable=\"{}\" bounds=\"[{},{}][{},{}]\"",
            escape(&node.node_class),
            escape(&node.text),
            escape(&node.content_desc),
            escape(&node.resource_id),
            node.clickable_attr,
            node.bounds.left,
            node.bounds.top,
            node.bounds.right,
            node.bounds.bottom,
        ));
        if node.children.is_empty() {
            out.push_str("/>\n");
        } else {
            out.push_str(">\n");
            for child in &node.children {
                write_node(child, depth + 1, out);
            }
            out.push_str(&format!("{pad}</node>\n"));
        }
    }
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<hierarchy rotation=\"0\">\n");
    write_node(root, 1, &mut out);
    out.push_str("</hierarchy>\n");
    out
}

/// Write a corpus to `path` as JSONL, dumping every screen's layout to a
/// `layouts/` directory next to it so the file loads back with
/// [`crate::corpus::load_corpus`].
pub fn write_corpus_with_layouts(
    episodes: &[Episode],
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let layout_dir = dir.join("layouts");
    std::fs::create_dir_all(&layout_dir)
        .map_err(|source| CorpusError::Io { path: layout_dir.clone(), source })?;

    let mut written: HashMap<u64, String> = HashMap::new();
    let mut patched = episodes.to_vec();
    for episode in &mut patched {
        for turn in &mut episode.turns {
            for step in &mut turn.trace {
                let (content, ext) = match &step.screen.root {
                    Some(root) => (hierarchy_to_xml(root), "xml"),
                    None => (
                        serde_json::to_string_pretty(
                            &step
                                .screen
                                .items
                                .iter()
                                .map(|item| {
                                    serde_json::json!({
                                        "text": item.text,
                                        "bbox": [
                                            item.bbox.left,
                                            item.bbox.top,
                                            item.bbox.right,
                                            item.bbox.bottom
                                        ],
                                    })
                                })
                                .collect::<Vec<_>>(),
                        )
                        .expect("layout json serializes"),
                        "json",
                    ),
                };
                let hash = crate::rng::fnv1a(content.as_bytes());
                let rel = written.entry(hash).or_insert_with(|| {
                    let rel = format!("layouts/layout_{hash:016x}.{ext}");
                    std::fs::write(dir.join(&rel), &content).expect("layout file writes");
                    rel
                });
                if ext == "xml" {
                    step.source.xml_path = Some(rel.clone());
                    step.source.pseudo_layout_path = None;
                } else {
                    step.source.pseudo_layout_path = Some(rel.clone());
                    step.source.xml_path = None;
                }
            }
        }
    }
    save_corpus(&patched, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::ActionType;
    use crate::corpus::{expand_data_points, load_corpus};

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(fixture_like_corpus(4, 9), fixture_like_corpus(4, 9));
        assert_ne!(fixture_like_corpus(4, 9), fixture_like_corpus(4, 10));
    }

    #[test]
    fn valid_generators_respect_turn_invariants() {
        for episode in
            fixture_like_corpus(6, 1).iter().chain(&learnable_corpus(100, 2)).chain(&click_heavy_corpus(5, 3))
        {
            for turn in &episode.turns {
                assert!(!turn.trace.is_empty());
                let last = turn.trace.len() - 1;
                for (i, step) in turn.trace.iter().enumerate() {
                    assert_eq!(
                        step.action.action_type() == ActionType::End,
                        i == last,
                        "End placement violated"
                    );
                    if let Action::Click { item } = step.action {
                        assert!(item < step.screen.items.len());
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_corpus_has_requested_point_count() {
        let episodes = uniform_type_corpus(237, 5);
        assert_eq!(expand_data_points(&episodes).len(), 237);
    }

    #[test]
    fn click_heavy_modal_type_is_click() {
        let episodes = click_heavy_corpus(10, 0);
        let mut counts = [0usize; 7];
        for dp in expand_data_points(&episodes) {
            counts[dp.gold.action_type().index()] += 1;
        }
        let modal = counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0;
        assert_eq!(modal, ActionType::Click.index());
    }

    #[test]
    fn written_corpus_reloads_identically() {
        let episodes = fixture_like_corpus(3, 77);
        let dir = std::env::temp_dir().join("gui_tod_synth_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("synth.jsonl");
        write_corpus_with_layouts(&episodes, &path).unwrap();
        let reloaded = load_corpus(&path).unwrap();
        assert_eq!(reloaded.len(), episodes.len());
        for (a, b) in episodes.iter().zip(&reloaded) {
            for (ta, tb) in a.turns.iter().zip(&b.turns) {
                assert_eq!(ta.user_utterance, tb.user_utterance);
                for (sa, sb) in ta.trace.iter().zip(&tb.trace) {
                    assert_eq!(sa.action, sb.action);
                    let texts_a: Vec<&str> =
                        sa.screen.items.iter().map(|i| i.text.as_str()).collect();
                    let texts_b: Vec<&str> =
                        sb.screen.items.iter().map(|i| i.text.as_str()).collect();
                    assert_eq!(texts_a, texts_b);
                }
            }
        }
    }
}
