//! Screen representation: Android view-hierarchy parsing, OCR pseudo-layout
//! parsing, actionable-item extraction, and click hit-testing.
//!
//! The input dialects are the `uiautomator dump` XML format (nodes carry
//! `class`, `text`, `content-desc`, `resource-id`, `clickable` and
//! `bounds="[l,t][r,b]"` attributes) and a pseudo-layout JSON array of
//! `{"text": ..., "bbox": [l,t,r,b]}` records produced by OCR when no valid
//! hierarchy is available. Both normalize into a [`Screen`] holding an
//! ordered list of [`Item`]s, the unit that `Click` actions target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The item-type taxonomy. Any other class suffix maps to `"Unknown"`.
pub const ITEM_TYPES: [&str; 18] = [
    "Button",
    "CheckBox",
    "CheckedTextView",
    "EditText",
    "FrameLayout",
    "Image",
    "ImageButton",
    "ImageView",
    "LinearLayout",
    "ListView",
    "RadioButton",
    "RelativeLayout",
    "Switch",
    "TextView",
    "ToggleButton",
    "View",
    "ViewGroup",
    "WebView",
];

/// Pixel rectangle with `left <= right` and `top <= bottom`.
/// Containment tests are half-open: left/top edges inclusive,
/// right/bottom exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub left: i64,
    pub top: i64,
    pub right: i64,
    pub bottom: i64,
}

impl BBox {
    pub fn new(left: i64, top: i64, right: i64, bottom: i64) -> Result<Self, HierarchyError> {
        if left > right || top > bottom {
            return Err(HierarchyError::InvalidBounds {
                detail: format!("degenerate rectangle [{left},{top}][{right},{bottom}]"),
            });
        }
        Ok(Self { left, top, right, bottom })
    }

    pub fn width(&self) -> i64 {
        self.right - self.left
    }

    pub fn height(&self) -> i64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.left && x < self.right && y >= self.top && y < self.bottom
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance_to(&self, x: i64, y: i64) -> f64 {
        let dx = (self.left - x).max(x - (self.right - 1)).max(0) as f64;
        let dy = (self.top - y).max(y - (self.bottom - 1)).max(0) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// One node of a parsed view hierarchy.
///
/// Child bounds are not required to be contained in the parent bounds;
/// real device dumps violate containment routinely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewNode {
    pub node_class: String,
    pub text: String,
    pub content_desc: String,
    pub resource_id: String,
    pub clickable_attr: bool,
    pub bounds: BBox,
    pub children: Vec<ViewNode>,
}

impl ViewNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ViewNode::node_count).sum::<usize>()
    }
}

/// Where an item came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemSource {
    Xml,
    PseudoLayout,
}

/// An actionable screen element: a clickable leaf of the hierarchy, or one
/// OCR record of a pseudo-layout (always treated as clickable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    /// Ordinal within the screen, assigned in emission (document pre-) order.
    pub index: usize,
    /// First non-empty of the node's text, content-desc, resource-id.
    pub text: String,
    /// Unqualified class suffix, or `"Unknown"` when outside [`ITEM_TYPES`].
    pub item_type: String,
    pub bbox: BBox,
    pub source: ItemSource,
}

/// Which nodes pass clickability on to a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClickabilityScope {
    /// A leaf is actionable if it or any ancestor is clickable. Android
    /// routes click handling through container views, so recorded traces
    /// click leaves whose direct parent is a non-clickable wrapper.
    #[default]
    AnyAncestor,
    /// Strict reading: only the leaf itself or its direct parent counts.
    DirectParentOnly,
}

/// A screen: optional screenshot reference, optional parsed hierarchy root,
/// and the extracted actionable items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screen {
    pub screenshot_ref: Option<String>,
    pub root: Option<ViewNode>,
    pub items: Vec<Item>,
    /// (width, height) in pixels.
    pub screen_size: (u32, u32),
}

impl Screen {
    /// Build a screen from a parsed hierarchy, extracting items with the
    /// default clickability scope.
    pub fn from_hierarchy(
        root: ViewNode,
        screen_size: (u32, u32),
        screenshot_ref: Option<String>,
    ) -> Self {
        let items = extract_items(&root);
        Self { screenshot_ref, root: Some(root), items, screen_size }
    }
}

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("xml parse error at line {line}, column {col}: {detail}")]
    Xml { line: u32, col: u32, detail: String },

    #[error("node at line {line}, column {col}: bad `{attr}` attribute: {detail}")]
    NodeAttribute { line: u32, col: u32, attr: String, detail: String },

    #[error("invalid bounds: {detail}")]
    InvalidBounds { detail: String },

    #[error("expected a single root <node> element, found {found}")]
    RootShape { found: String },

    #[error("pseudo-layout parse error: {detail}")]
    PseudoLayout { detail: String },

    #[error("pseudo-layout record {index} ({text:?}): {detail}")]
    PseudoRecord { index: usize, text: String, detail: String },

    #[error("no item contains point ({x}, {y}); nearest is item {nearest_index} at distance {nearest_distance:.1}")]
    ClickMiss { x: i64, y: i64, nearest_index: usize, nearest_distance: f64 },

    #[error("cannot resolve a click on a screen with no items")]
    EmptyScreen,
}

/// Parse a uiautomator-style XML dump into a view-hierarchy tree.
///
/// Accepts either a bare `<node>` document root or the usual
/// `<hierarchy>` wrapper with a single `<node>` child. Missing string
/// attributes default to empty, missing `clickable` to false, missing
/// `bounds` to a zero rectangle.
pub fn parse_hierarchy(xml_bytes: &[u8]) -> Result<ViewNode, HierarchyError> {
    let text = std::str::from_utf8(xml_bytes).map_err(|e| HierarchyError::Xml {
        line: 1,
        col: 1,
        detail: format!("input is not valid UTF-8: {e}"),
    })?;
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        HierarchyError::Xml { line: pos.row, col: pos.col, detail: e.to_string() }
    })?;

    let root_el = doc.root_element();
    let node_el = if root_el.tag_name().name() == "node" {
        root_el
    } else {
        let mut nodes = root_el
            .children()
            .filter(|c| c.is_element() && c.tag_name().name() == "node");
        let first = nodes.next().ok_or_else(|| HierarchyError::RootShape {
            found: format!("<{}> with no <node> child", root_el.tag_name().name()),
        })?;
        if nodes.next().is_some() {
            return Err(HierarchyError::RootShape {
                found: format!("<{}> with multiple <node> children", root_el.tag_name().name()),
            });
        }
        first
    };
    parse_node(&doc, node_el)
}

fn parse_node(
    doc: &roxmltree::Document,
    el: roxmltree::Node,
) -> Result<ViewNode, HierarchyError> {
    let pos = doc.text_pos_at(el.range().start);
    let attr = |name: &str| el.attribute(name).unwrap_or("").to_string();

    let clickable_attr = match el.attribute("clickable") {
        None | Some("false") => false,
        Some("true") => true,
        Some(other) => {
            return Err(HierarchyError::NodeAttribute {
                line: pos.row,
                col: pos.col,
                attr: "clickable".into(),
                detail: format!("expected \"true\" or \"false\", got {other:?}"),
            })
        }
    };

    let bounds = match el.attribute("bounds") {
        None => BBox { left: 0, top: 0, right: 0, bottom: 0 },
        Some(raw) => parse_bounds(raw).map_err(|detail| HierarchyError::NodeAttribute {
            line: pos.row,
            col: pos.col,
            attr: "bounds".into(),
            detail,
        })?,
    };

    let mut children = Vec::new();
    for child in el.children() {
        if child.is_element() && child.tag_name().name() == "node" {
            children.push(parse_node(doc, child)?);
        }
    }

    Ok(ViewNode {
        node_class: attr("class"),
        text: attr("text"),
        content_desc: attr("content-desc"),
        resource_id: attr("resource-id"),
        clickable_attr,
        bounds,
        children,
    })
}

/// Parse a `"[l,t][r,b]"` bounds string.
fn parse_bounds(raw: &str) -> Result<BBox, String> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("expected \"[l,t][r,b]\", got {raw:?}"))?;
    let mut corners = inner.split("][");
    let (first, second) = match (corners.next(), corners.next(), corners.next()) {
        (Some(a), Some(b), None) => (a, b),
        _ => return Err(format!("expected \"[l,t][r,b]\", got {raw:?}")),
    };
    let parse_pair = |s: &str| -> Result<(i64, i64), String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected \"x,y\" pair, got {s:?}"))?;
        let x = a.trim().parse::<i64>().map_err(|e| format!("bad integer {a:?}: {e}"))?;
        let y = b.trim().parse::<i64>().map_err(|e| format!("bad integer {b:?}: {e}"))?;
        Ok((x, y))
    };
    let (left, top) = parse_pair(first)?;
    let (right, bottom) = parse_pair(second)?;
    if left > right {
        return Err(format!("left > right in {raw:?}"));
    }
    if top > bottom {
        return Err(format!("top > bottom in {raw:?}"));
    }
    Ok(BBox { left, top, right, bottom })
}

/// Extract actionable items from a parsed tree with the default
/// [`ClickabilityScope::AnyAncestor`] rule.
pub fn extract_items(root: &ViewNode) -> Vec<Item> {
    extract_items_scoped(root, ClickabilityScope::AnyAncestor)
}

/// Extract actionable items: pre-order traversal emitting every leaf that
/// is clickable itself or inherits clickability per `scope`. Item text is
/// the first non-empty of text, content-desc, resource-id.
pub fn extract_items_scoped(root: &ViewNode, scope: ClickabilityScope) -> Vec<Item> {
    let mut items = Vec::new();
    walk(root, false, scope, &mut items);
    items
}

fn walk(node: &ViewNode, inherited: bool, scope: ClickabilityScope, items: &mut Vec<Item>) {
    if node.is_leaf() {
        if node.clickable_attr || inherited {
            items.push(Item {
                index: items.len(),
                text: item_text(node),
                item_type: item_type_of(&node.node_class),
                bbox: node.bounds,
                source: ItemSource::Xml,
            });
        }
        return;
    }
    let child_inherited = match scope {
        ClickabilityScope::AnyAncestor => inherited || node.clickable_attr,
        ClickabilityScope::DirectParentOnly => node.clickable_attr,
    };
    for child in &node.children {
        walk(child, child_inherited, scope, items);
    }
}

fn item_text(node: &ViewNode) -> String {
    if !node.text.is_empty() {
        node.text.clone()
    } else if !node.content_desc.is_empty() {
        node.content_desc.clone()
    } else {
        node.resource_id.clone()
    }
}

/// Map a full class name to the taxonomy: unqualified suffix after the
/// last `.`, or `"Unknown"` when the suffix is not one of [`ITEM_TYPES`].
pub fn item_type_of(class: &str) -> String {
    let suffix = class.rsplit('.').next().unwrap_or(class);
    if ITEM_TYPES.contains(&suffix) {
        suffix.to_string()
    } else {
        "Unknown".to_string()
    }
}

#[derive(Deserialize)]
struct PseudoRecord {
    text: String,
    bbox: [i64; 4],
}

/// Parse an OCR pseudo-layout file: a JSON array of `{"text", "bbox"}`
/// records. All records become items of type `"Unknown"`, in array order,
/// and every one is treated as clickable.
pub fn parse_pseudo_layout(
    json_bytes: &[u8],
    screen_size: (u32, u32),
) -> Result<Screen, HierarchyError> {
    let records: Vec<PseudoRecord> = serde_json::from_slice(json_bytes)
        .map_err(|e| HierarchyError::PseudoLayout { detail: e.to_string() })?;

    let (w, h) = (screen_size.0 as i64, screen_size.1 as i64);
    let mut items = Vec::with_capacity(records.len());
    for (index, rec) in records.into_iter().enumerate() {
        let [l, t, r, b] = rec.bbox;
        if l > r || t > b {
            return Err(HierarchyError::PseudoRecord {
                index,
                text: rec.text,
                detail: format!("degenerate bbox [{l},{t},{r},{b}]"),
            });
        }
        if l < 0 || t < 0 || r > w || b > h {
            return Err(HierarchyError::PseudoRecord {
                index,
                text: rec.text,
                detail: format!("bbox [{l},{t},{r},{b}] outside screen {w}x{h}"),
            });
        }
        items.push(Item {
            index,
            text: rec.text,
            item_type: "Unknown".to_string(),
            bbox: BBox { left: l, top: t, right: r, bottom: b },
            source: ItemSource::PseudoLayout,
        });
    }
    Ok(Screen { screenshot_ref: None, root: None, items, screen_size })
}

/// Resolve a raw click coordinate to the item it targets: among items whose
/// bbox contains the point, the one with the smallest area wins, ties going
/// to the smallest index.
pub fn resolve_click(screen: &Screen, point: (i64, i64)) -> Result<usize, HierarchyError> {
    let (x, y) = point;
    if screen.items.is_empty() {
        return Err(HierarchyError::EmptyScreen);
    }
    let hit = screen
        .items
        .iter()
        .filter(|item| item.bbox.contains(x, y))
        .min_by_key(|item| (item.bbox.area(), item.index));
    if let Some(item) = hit {
        return Ok(item.index);
    }
    let nearest = screen
        .items
        .iter()
        .map(|item| (item.index, item.bbox.distance_to(x, y)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty items");
    Err(HierarchyError::ClickMiss {
        x,
        y,
        nearest_index: nearest.0,
        nearest_distance: nearest.1,
    })
}
