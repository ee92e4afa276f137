//! Dialogue episodes paired with GUI operation traces: the JSONL corpus
//! format, validation, per-action data-point expansion, statistics, and
//! split generation.
//!
//! One JSONL line holds one episode:
//!
//! ```json
//! {"episode_id": "ep1", "turns": [{"user": "...", "response": "...",
//!   "domain": "hotel", "apps": ["com.booking"], "trace": [
//!     {"screen": {"xml_path": "s1.xml", "pseudo_layout_path": null,
//!                 "screenshot_path": null, "size": [1080, 1920]},
//!      "action": "Click(item=2)"}]}]}
//! ```
//!
//! Exactly one of `xml_path` / `pseudo_layout_path` is non-null per screen;
//! paths are resolved relative to the corpus file's directory.

use crate::actions::{deserialize_action, Action, ActionType};
use crate::hierarchy::{self, Screen};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Task domain of a turn.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Weather,
    Calendar,
    Search,
    Taxi,
    Hotel,
    Restaurant,
}

impl Domain {
    pub const ALL: [Domain; 6] = [
        Domain::Weather,
        Domain::Calendar,
        Domain::Search,
        Domain::Taxi,
        Domain::Hotel,
        Domain::Restaurant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Weather => "weather",
            Domain::Calendar => "calendar",
            Domain::Search => "search",
            Domain::Taxi => "taxi",
            Domain::Hotel => "hotel",
            Domain::Restaurant => "restaurant",
        }
    }

    pub fn parse(name: &str) -> Option<Domain> {
        Self::ALL.iter().copied().find(|d| d.name() == name)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where a screen was loaded from; kept so corpora re-serialize losslessly.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScreenSource {
    pub xml_path: Option<String>,
    pub pseudo_layout_path: Option<String>,
    pub screenshot_path: Option<String>,
}

/// One recorded step: the screen shown to the agent and the action taken
/// on it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub screen: Screen,
    pub source: ScreenSource,
    pub action: Action,
}

/// One dialogue turn: a user utterance, the GUI trace executed for it
/// (always ending in `End`), and the system response.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub user_utterance: String,
    pub system_response: String,
    pub trace: Vec<TraceStep>,
    pub apps: BTreeSet<String>,
    pub domain: Domain,
}

/// A dialogue with one GUI trace per turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub episode_id: String,
    pub turns: Vec<Turn>,
}

/// One action-prediction instance: everything observable before action
/// `(turn_index, action_index)` plus that action as the gold label.
/// All history fields are read-only views into the episode.
#[derive(Debug, Clone)]
pub struct DataPoint<'a> {
    pub episode_id: &'a str,
    pub turn_index: usize,
    pub action_index: usize,
    /// Utterances in order: U1, R1, ..., U(i-1), R(i-1), Ui.
    pub dialogue_history: Vec<&'a str>,
    /// All actions before this one, flattened across turns.
    pub action_history: Vec<&'a Action>,
    /// All screens up to and including the current one. Never empty.
    pub screen_history: Vec<&'a Screen>,
    pub gold: &'a Action,
    pub domain: Domain,
    /// The turn's gold response, present only on the turn-final data point
    /// (the one whose gold action is `End`).
    pub system_response_target: Option<&'a str>,
}

impl<'a> DataPoint<'a> {
    pub fn current_screen(&self) -> &'a Screen {
        self.screen_history.last().expect("screen_history is never empty")
    }
}

/// Corpus-level statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_dialogues: usize,
    pub n_turns: usize,
    pub n_data_points: usize,
    pub avg_images_per_turn: f64,
    pub avg_items_per_image: f64,
    pub per_domain_turns: BTreeMap<Domain, usize>,
    /// A turn counts once under every app it involves, so the total may
    /// exceed `n_turns`.
    pub per_app_turns: BTreeMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("line {line}: invalid episode JSON: {detail}")]
    JsonLine { line: usize, detail: String },

    #[error("episode {episode_id}, turn {turn}: field `{field}`: {detail}")]
    Schema { episode_id: String, turn: usize, field: String, detail: String },

    #[error("episode {episode_id}, turn {turn}: {detail}")]
    Validation { episode_id: String, turn: usize, detail: String },

    #[error("episode {episode_id}: {detail}")]
    Episode { episode_id: String, detail: String },

    #[error("episode {episode_id}, turn {turn}, screen {path}: {source}")]
    ScreenLoad { episode_id: String, turn: usize, path: String, source: hierarchy::HierarchyError },

    #[error("need at least {need} episodes to split, got {have}")]
    TooFewEpisodes { have: usize, need: usize },

    #[error("unknown holdout {kind} {name:?}; known: {known:?}")]
    UnknownHoldout { kind: &'static str, name: String, known: Vec<String> },
}

#[derive(Serialize, Deserialize)]
struct EpisodeRecord {
    episode_id: String,
    turns: Vec<TurnRecord>,
}

#[derive(Serialize, Deserialize)]
struct TurnRecord {
    user: String,
    response: String,
    domain: String,
    apps: Vec<String>,
    trace: Vec<StepRecord>,
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    screen: ScreenRecord,
    action: String,
}

#[derive(Serialize, Deserialize)]
struct ScreenRecord {
    xml_path: Option<String>,
    pseudo_layout_path: Option<String>,
    screenshot_path: Option<String>,
    size: [u32; 2],
}

/// Load and validate a JSONL corpus. Screens are parsed through the
/// hierarchy module; identical layout files are parsed once.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Episode>, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();

    let mut episodes = Vec::new();
    let mut seen_ids = BTreeSet::new();
    let mut screen_cache: HashMap<(String, (u32, u32)), Screen> = HashMap::new();

    for (line_no, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EpisodeRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::JsonLine { line: line_no + 1, detail: e.to_string() })?;
        let episode = convert_episode(record, &base_dir, &mut screen_cache)?;
        if !seen_ids.insert(episode.episode_id.clone()) {
            return Err(CorpusError::Episode {
                episode_id: episode.episode_id,
                detail: "duplicate episode_id".into(),
            });
        }
        episodes.push(episode);
    }
    Ok(episodes)
}

fn convert_episode(
    record: EpisodeRecord,
    base_dir: &Path,
    screen_cache: &mut HashMap<(String, (u32, u32)), Screen>,
) -> Result<Episode, CorpusError> {
    let episode_id = record.episode_id;
    if record.turns.is_empty() {
        return Err(CorpusError::Episode {
            episode_id,
            detail: "episode has no turns".into(),
        });
    }
    let mut turns = Vec::with_capacity(record.turns.len());
    for (turn_idx, turn) in record.turns.into_iter().enumerate() {
        let schema_err = |field: &str, detail: String| CorpusError::Schema {
            episode_id: episode_id.clone(),
            turn: turn_idx,
            field: field.into(),
            detail,
        };
        let domain = Domain::parse(&turn.domain).ok_or_else(|| {
            schema_err(
                "domain",
                format!(
                    "unknown domain {:?}; expected one of {:?}",
                    turn.domain,
                    Domain::ALL.map(Domain::name)
                ),
            )
        })?;
        if turn.trace.is_empty() {
            return Err(CorpusError::Validation {
                episode_id: episode_id.clone(),
                turn: turn_idx,
                detail: "trace must be non-empty".into(),
            });
        }
        let mut trace = Vec::with_capacity(turn.trace.len());
        let last_idx = turn.trace.len() - 1;
        for (step_idx, step) in turn.trace.into_iter().enumerate() {
            let action = deserialize_action(&step.action)
                .map_err(|e| schema_err("action", e.to_string()))?;
            let is_end = action.action_type() == ActionType::End;
            if is_end != (step_idx == last_idx) {
                return Err(CorpusError::Validation {
                    episode_id: episode_id.clone(),
                    turn: turn_idx,
                    detail: if is_end {
                        format!("End at step {step_idx} is not the final action")
                    } else {
                        format!("final action is {action}, expected End()")
                    },
                });
            }
            let screen = load_screen(
                &step.screen,
                base_dir,
                &episode_id,
                turn_idx,
                screen_cache,
            )?;
            let source = ScreenSource {
                xml_path: step.screen.xml_path,
                pseudo_layout_path: step.screen.pseudo_layout_path,
                screenshot_path: step.screen.screenshot_path,
            };
            trace.push(TraceStep { screen, source, action });
        }
        turns.push(Turn {
            user_utterance: turn.user,
            system_response: turn.response,
            trace,
            apps: turn.apps.into_iter().collect(),
            domain,
        });
    }
    Ok(Episode { episode_id, turns })
}

fn load_screen(
    record: &ScreenRecord,
    base_dir: &Path,
    episode_id: &str,
    turn_idx: usize,
    cache: &mut HashMap<(String, (u32, u32)), Screen>,
) -> Result<Screen, CorpusError> {
    let size = (record.size[0], record.size[1]);
    let (layout_path, is_xml) = match (&record.xml_path, &record.pseudo_layout_path) {
        (Some(p), None) => (p.clone(), true),
        (None, Some(p)) => (p.clone(), false),
        (Some(_), Some(_)) | (None, None) => {
            return Err(CorpusError::Schema {
                episode_id: episode_id.to_string(),
                turn: turn_idx,
                field: "screen".into(),
                detail: "exactly one of xml_path / pseudo_layout_path must be non-null".into(),
            })
        }
    };

    let cache_key = (layout_path.clone(), size);
    let screen = if let Some(cached) = cache.get(&cache_key) {
        cached.clone()
    } else {
        let resolved = resolve_path(base_dir, &layout_path);
        let bytes = std::fs::read(&resolved)
            .map_err(|source| CorpusError::Io { path: resolved.clone(), source })?;
        let screen = if is_xml {
            let root = hierarchy::parse_hierarchy(&bytes).map_err(|source| {
                CorpusError::ScreenLoad {
                    episode_id: episode_id.to_string(),
                    turn: turn_idx,
                    path: layout_path.clone(),
                    source,
                }
            })?;
            Screen::from_hierarchy(root, size, None)
        } else {
            hierarchy::parse_pseudo_layout(&bytes, size).map_err(|source| {
                CorpusError::ScreenLoad {
                    episode_id: episode_id.to_string(),
                    turn: turn_idx,
                    path: layout_path.clone(),
                    source,
                }
            })?
        };
        cache.insert(cache_key, screen.clone());
        screen
    };

    let mut screen = screen;
    screen.screenshot_ref = record.screenshot_path.clone();
    Ok(screen)
}

fn resolve_path(base_dir: &Path, p: &str) -> PathBuf {
    let candidate = Path::new(p);
    if candidate.is_absolute() {
        candidate.to_path_buf()
    } else {
        base_dir.join(candidate)
    }
}

/// Serialize episodes back to the JSONL schema, using each screen's
/// recorded source paths verbatim.
pub fn save_corpus(episodes: &[Episode], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(path)
            .map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?,
    );
    for episode in episodes {
        let record = EpisodeRecord {
            episode_id: episode.episode_id.clone(),
            turns: episode
                .turns
                .iter()
                .map(|turn| TurnRecord {
                    user: turn.user_utterance.clone(),
                    response: turn.system_response.clone(),
                    domain: turn.domain.name().to_string(),
                    apps: turn.apps.iter().cloned().collect(),
                    trace: turn
                        .trace
                        .iter()
                        .map(|step| StepRecord {
                            screen: ScreenRecord {
                                xml_path: step.source.xml_path.clone(),
                                pseudo_layout_path: step.source.pseudo_layout_path.clone(),
                                screenshot_path: step.source.screenshot_path.clone(),
                                size: [step.screen.screen_size.0, step.screen.screen_size.1],
                            },
                            action: step.action.to_string(),
                        })
                        .collect(),
                })
                .collect(),
        };
        let line = serde_json::to_string(&record)
            .expect("episode records serialize infallibly");
        writeln!(out, "{line}")
            .map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    }
    Ok(())
}

/// Expand episodes into one data point per action (`End` included), in
/// episode, turn, action order.
pub fn expand_data_points(episodes: &[Episode]) -> Vec<DataPoint<'_>> {
    let mut points = Vec::new();
    for episode in episodes {
        let mut action_history: Vec<&Action> = Vec::new();
        let mut screen_history: Vec<&Screen> = Vec::new();
        let mut dialogue: Vec<&str> = Vec::new();
        for (turn_index, turn) in episode.turns.iter().enumerate() {
            dialogue.push(&turn.user_utterance);
            let last = turn.trace.len() - 1;
            for (action_index, step) in turn.trace.iter().enumerate() {
                screen_history.push(&step.screen);
                points.push(DataPoint {
                    episode_id: &episode.episode_id,
                    turn_index,
                    action_index,
                    dialogue_history: dialogue.clone(),
                    action_history: action_history.clone(),
                    screen_history: screen_history.clone(),
                    gold: &step.action,
                    domain: turn.domain,
                    system_response_target: (action_index == last)
                        .then_some(turn.system_response.as_str()),
                });
                action_history.push(&step.action);
            }
            dialogue.push(&turn.system_response);
        }
    }
    points
}

/// Split episodes into train/dev/test by the given ratios.
///
/// The split is at dialogue granularity: an episode lands in exactly one
/// part. Dev and test sizes are the ratio shares rounded to nearest (at
/// least 1), and train absorbs the remainder. Deterministic given `seed`.
#[allow(clippy::type_complexity)]
pub fn split_random(
    episodes: &[Episode],
    ratios: (u64, u64, u64),
    seed: u64,
) -> Result<(Vec<Episode>, Vec<Episode>, Vec<Episode>), CorpusError> {
    let n = episodes.len();
    if n < 3 {
        return Err(CorpusError::TooFewEpisodes { have: n, need: 3 });
    }
    let total = (ratios.0 + ratios.1 + ratios.2) as f64;
    assert!(total > 0.0, "ratios must not all be zero");
    let share = |r: u64| -> usize {
        if r == 0 {
            0
        } else {
            ((n as f64 * r as f64 / total).round() as usize).max(1)
        }
    };
    let n_dev = share(ratios.1);
    let n_test = share(ratios.2);
    let n_train = n
        .checked_sub(n_dev + n_test)
        .filter(|&t| t >= 1 || ratios.0 == 0)
        .ok_or(CorpusError::TooFewEpisodes { have: n, need: n_dev + n_test + 1 })?;

    let mut order: Vec<usize> = (0..n).collect();
    crate::rng::SplitMix64::new(seed).shuffle(&mut order);

    let pick = |slice: &[usize]| -> Vec<Episode> {
        let mut sorted: Vec<usize> = slice.to_vec();
        sorted.sort_unstable();
        sorted.into_iter().map(|i| episodes[i].clone()).collect()
    };
    Ok((
        pick(&order[..n_train]),
        pick(&order[n_train..n_train + n_dev]),
        pick(&order[n_train + n_dev..]),
    ))
}

/// What to hold out in a generality split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoldoutKey {
    App,
    Domain,
}

fn turn_matches(turn: &Turn, by: HoldoutKey, held: &str) -> bool {
    match by {
        HoldoutKey::App => turn.apps.contains(held),
        HoldoutKey::Domain => turn.domain.name() == held,
    }
}

/// Names available for holdout splitting, sorted.
pub fn holdout_names(episodes: &[Episode], by: HoldoutKey) -> Vec<String> {
    let mut names = BTreeSet::new();
    for episode in episodes {
        for turn in &episode.turns {
            match by {
                HoldoutKey::App => names.extend(turn.apps.iter().cloned()),
                HoldoutKey::Domain => {
                    names.insert(turn.domain.name().to_string());
                }
            }
        }
    }
    names.into_iter().collect()
}

/// Hold out one app or domain: test gets every episode touching it in any
/// turn and train gets the rest, so train is guaranteed pure.
pub fn split_holdout(
    episodes: &[Episode],
    by: HoldoutKey,
    held: &str,
) -> Result<(Vec<Episode>, Vec<Episode>), CorpusError> {
    let known = holdout_names(episodes, by);
    if !known.iter().any(|n| n == held) {
        return Err(CorpusError::UnknownHoldout {
            kind: match by {
                HoldoutKey::App => "app",
                HoldoutKey::Domain => "domain",
            },
            name: held.to_string(),
            known,
        });
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for episode in episodes {
        if episode.turns.iter().any(|t| turn_matches(t, by, held)) {
            test.push(episode.clone());
        } else {
            train.push(episode.clone());
        }
    }
    Ok((train, test))
}

/// Counts and averages over a validated corpus.
pub fn compute_stats(episodes: &[Episode]) -> CorpusStats {
    let mut n_turns = 0;
    let mut n_data_points = 0;
    let mut n_screens = 0;
    let mut n_items = 0;
    let mut per_domain_turns: BTreeMap<Domain, usize> = BTreeMap::new();
    let mut per_app_turns: BTreeMap<String, usize> = BTreeMap::new();
    for episode in episodes {
        for turn in &episode.turns {
            n_turns += 1;
            n_data_points += turn.trace.len();
            n_screens += turn.trace.len();
            n_items += turn.trace.iter().map(|s| s.screen.items.len()).sum::<usize>();
            *per_domain_turns.entry(turn.domain).or_default() += 1;
            for app in &turn.apps {
                *per_app_turns.entry(app.clone()).or_default() += 1;
            }
        }
    }
    CorpusStats {
        n_dialogues: episodes.len(),
        n_turns,
        n_data_points,
        avg_images_per_turn: if n_turns > 0 { n_screens as f64 / n_turns as f64 } else { 0.0 },
        avg_items_per_image: if n_screens > 0 { n_items as f64 / n_screens as f64 } else { 0.0 },
        per_domain_turns,
        per_app_turns,
    }
}
