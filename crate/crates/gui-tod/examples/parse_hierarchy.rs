//! Parse an Android view-hierarchy dump and an OCR pseudo-layout into the
//! uniform screen representation, then resolve a raw click coordinate to
//! the item it targets.
//!
//! ```bash
//! cargo run --example parse_hierarchy
//! ```

use gui_tod::hierarchy::{
    extract_items, extract_items_scoped, parse_hierarchy, parse_pseudo_layout,
    resolve_click, ClickabilityScope, Screen,
};

fn fixture(name: &str) -> Vec<u8> {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read(&path).unwrap_or_else(|e| panic!("reading {path}: {e}"))
}

fn main() {
    let root = parse_hierarchy(&fixture("calendar_screen.xml")).expect("well-formed dump");
    println!("parsed {} nodes, root class {}", root.node_count(), root.node_class);

    let items = extract_items(&root);
    println!("{} actionable items (clickability inherited from any ancestor):", items.len());
    for item in &items {
        println!("  [{}] {:<12} {:?}", item.index, item.item_type, item.text);
    }

    let strict = extract_items_scoped(&root, ClickabilityScope::DirectParentOnly);
    println!("strict direct-parent scope keeps {} of {} items", strict.len(), items.len());

    // Clicks are recorded as raw coordinates; hit-testing maps them to the
    // smallest containing item.
    let screen = Screen::from_hierarchy(root, (1080, 1920), None);
    let target = resolve_click(&screen, (300, 560)).expect("point hits an item");
    println!("click at (300, 560) resolves to item {}: {:?}", target, screen.items[target].text);

    let pseudo = parse_pseudo_layout(&fixture("hotel_booking_pseudo.json"), (1080, 1920))
        .expect("valid pseudo layout");
    println!("pseudo-layout fallback: {} items, no hierarchy root", pseudo.items.len());
    for item in &pseudo.items {
        println!("  [{}] {:<12} {:?}", item.index, item.item_type, item.text);
    }
}
