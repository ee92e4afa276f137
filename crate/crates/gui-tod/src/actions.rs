//! The GUI action language: seven typed operations, three of which carry a
//! parameter, with a canonical string grammar used in episode and
//! prediction files.
//!
//! Canonical forms: `Click(item=3)`, `Swipe(direction=up)`,
//! `Input(text="7 pm")`, `Enter()`, `Clear()`, `Back()`, `End()`.

use crate::hierarchy::Screen;
use crate::metrics::tokenize;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use thiserror::Error;

/// The seven action types. Order is significant: tie-breaking and one-hot
/// encodings use the enum index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionType {
    Click,
    Swipe,
    Input,
    Enter,
    Clear,
    Back,
    End,
}

impl ActionType {
    pub const ALL: [ActionType; 7] = [
        ActionType::Click,
        ActionType::Swipe,
        ActionType::Input,
        ActionType::Enter,
        ActionType::Clear,
        ActionType::Back,
        ActionType::End,
    ];

    pub const COUNT: usize = 7;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<ActionType> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionType::Click => "Click",
            ActionType::Swipe => "Swipe",
            ActionType::Input => "Input",
            ActionType::Enter => "Enter",
            ActionType::Clear => "Clear",
            ActionType::Back => "Back",
            ActionType::End => "End",
        }
    }

    /// The special history token for this type, e.g. `[ACT:CLICK]`.
    /// Tokens are bracketed and uppercased so they can never collide with
    /// natural-language vocabulary.
    pub fn history_token(self) -> ActionTypeToken {
        ActionTypeToken {
            token: match self {
                ActionType::Click => "[ACT:CLICK]",
                ActionType::Swipe => "[ACT:SWIPE]",
                ActionType::Input => "[ACT:INPUT]",
                ActionType::Enter => "[ACT:ENTER]",
                ActionType::Clear => "[ACT:CLEAR]",
                ActionType::Back => "[ACT:BACK]",
                ActionType::End => "[ACT:END]",
            },
        }
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Special token marking an action type inside encoded histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionTypeToken {
    pub token: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwipeDirection {
    Up,
    Down,
}

impl SwipeDirection {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SwipeDirection::Up => "up",
            SwipeDirection::Down => "down",
        }
    }
}

/// One GUI operation. `End` is the virtual action closing every trace;
/// the rest are physical operations on the device.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    /// Click the item with this index on the current screen.
    Click { item: usize },
    Swipe { direction: SwipeDirection },
    /// Type text into the focused widget. The text must be non-empty.
    Input { text: String },
    Enter,
    Clear,
    Back,
    End,
}

impl Action {
    pub fn action_type(&self) -> ActionType {
        match self {
            Action::Click { .. } => ActionType::Click,
            Action::Swipe { .. } => ActionType::Swipe,
            Action::Input { .. } => ActionType::Input,
            Action::Enter => ActionType::Enter,
            Action::Clear => ActionType::Clear,
            Action::Back => ActionType::Back,
            Action::End => ActionType::End,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_action(self))
    }
}

// Actions travel as canonical strings in JSONL files.
impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&serialize_action(self))
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        deserialize_action(&raw).map_err(D::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("action parse error at offset {offset}: {message} in {input:?}")]
pub struct ActionParseError {
    pub offset: usize,
    pub message: String,
    pub input: String,
}

/// Render the canonical string form.
pub fn serialize_action(action: &Action) -> String {
    match action {
        Action::Click { item } => format!("Click(item={item})"),
        Action::Swipe { direction } => format!("Swipe(direction={})", direction.name()),
        Action::Input { text } => format!("Input(text=\"{}\")", escape_text(text)),
        Action::Enter => "Enter()".to_string(),
        Action::Clear => "Clear()".to_string(),
        Action::Back => "Back()".to_string(),
        Action::End => "End()".to_string(),
    }
}

fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out
}

/// Parse the canonical grammar `Type(key=value)` / `Type()`.
pub fn deserialize_action(input: &str) -> Result<Action, ActionParseError> {
    Parser { input, pos: 0 }.parse()
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ActionParseError {
        ActionParseError {
            offset: self.pos,
            message: message.into(),
            input: self.input.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn eat(&mut self, token: &str) -> Result<(), ActionParseError> {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(format!("expected {token:?}")))
        }
    }

    fn parse(mut self) -> Result<Action, ActionParseError> {
        let name_len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(self.rest().len());
        let name = &self.rest()[..name_len];
        let action_type = match name {
            "Click" => ActionType::Click,
            "Swipe" => ActionType::Swipe,
            "Input" => ActionType::Input,
            "Enter" => ActionType::Enter,
            "Clear" => ActionType::Clear,
            "Back" => ActionType::Back,
            "End" => ActionType::End,
            other => return Err(self.error(format!("unknown action type {other:?}"))),
        };
        self.pos += name_len;
        self.eat("(")?;

        let action = match action_type {
            ActionType::Click => {
                self.eat("item=")?;
                Action::Click { item: self.parse_index()? }
            }
            ActionType::Swipe => {
                self.eat("direction=")?;
                Action::Swipe { direction: self.parse_direction()? }
            }
            ActionType::Input => {
                self.eat("text=")?;
                Action::Input { text: self.parse_quoted()? }
            }
            ActionType::Enter => Action::Enter,
            ActionType::Clear => Action::Clear,
            ActionType::Back => Action::Back,
            ActionType::End => Action::End,
        };
        self.eat(")")?;
        if !self.rest().is_empty() {
            return Err(self.error("trailing characters after action"));
        }
        Ok(action)
    }

    fn parse_index(&mut self) -> Result<usize, ActionParseError> {
        let digits_len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        if digits_len == 0 {
            return Err(self.error("expected item index"));
        }
        let digits = &self.rest()[..digits_len];
        let value = digits
            .parse::<usize>()
            .map_err(|e| self.error(format!("bad item index {digits:?}: {e}")))?;
        self.pos += digits_len;
        Ok(value)
    }

    fn parse_direction(&mut self) -> Result<SwipeDirection, ActionParseError> {
        if self.rest().starts_with("up") {
            self.pos += 2;
            Ok(SwipeDirection::Up)
        } else if self.rest().starts_with("down") {
            self.pos += 4;
            Ok(SwipeDirection::Down)
        } else {
            let word_len = self
                .rest()
                .find(|c: char| !c.is_ascii_alphanumeric())
                .unwrap_or(self.rest().len());
            Err(self.error(format!(
                "invalid direction {:?}, expected \"up\" or \"down\"",
                &self.rest()[..word_len]
            )))
        }
    }

    fn parse_quoted(&mut self) -> Result<String, ActionParseError> {
        self.eat("\"")?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        loop {
            let Some((i, c)) = chars.next() else {
                return Err(self.error("unterminated string"));
            };
            match c {
                '"' => {
                    self.pos += i + 1;
                    break;
                }
                '\\' => match chars.next() {
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    Some((j, other)) => {
                        self.pos += j;
                        return Err(self.error(format!("invalid escape \\{other}")));
                    }
                    None => return Err(self.error("unterminated escape")),
                },
                _ => out.push(c),
            }
        }
        if out.is_empty() {
            return Err(self.error("input text must be non-empty"));
        }
        Ok(out)
    }
}

/// A constraint check failure from [`validate_action`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionViolation {
    pub message: String,
}

impl fmt::Display for ActionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Check an action against a screen. Returns every violation, not just the
/// first; an empty list means the action is valid.
pub fn validate_action(action: &Action, screen: &Screen) -> Vec<ActionViolation> {
    let mut violations = Vec::new();
    match action {
        Action::Click { item } => {
            if *item >= screen.items.len() {
                violations.push(ActionViolation {
                    message: format!(
                        "click index out of range: item {} on a screen with {} items",
                        item,
                        screen.items.len()
                    ),
                });
            }
        }
        Action::Input { text }
            if text.is_empty() => {
                violations.push(ActionViolation {
                    message: "input text must be non-empty".to_string(),
                });
            }
        // Swipe directions are constrained by the type; the remaining
        // actions carry no parameters.
        _ => {}
    }
    violations
}

/// Metric-grade equality: action types must match and parameters must
/// match, with `Input` text compared as normalized token sequences so the
/// check is consistent with token-level exact match.
pub fn actions_equal(pred: &Action, gold: &Action) -> bool {
    match (pred, gold) {
        (Action::Click { item: a }, Action::Click { item: b }) => a == b,
        (Action::Swipe { direction: a }, Action::Swipe { direction: b }) => a == b,
        (Action::Input { text: a }, Action::Input { text: b }) => tokenize(a) == tokenize(b),
        (Action::Enter, Action::Enter)
        | (Action::Clear, Action::Clear)
        | (Action::Back, Action::Back)
        | (Action::End, Action::End) => true,
        _ => false,
    }
}
