//! Synthetic computer-parts catalogue for the restructuring replays, plus
//! the 250-feature timing model.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

pub const TOP_LEVEL: [&str; 42] = [
    "CPU", "Motherboard", "Memory", "Graphics Card", "SSD", "Hard Disk", "Power Supply", "Case",
    "CPU Cooler", "Case Fan", "Monitor", "Keyboard", "Mouse", "Headset", "Speakers", "Webcam",
    "Microphone", "Optical Drive", "Sound Card", "Network Card", "Wireless Adapter", "Bluetooth Adapter",
    "Operating System", "Office Suite", "Antivirus", "Thermal Paste", "Cable Kit", "UPS", "Card Reader",
    "USB Hub", "Docking Station", "Capture Card", "Controller", "VR Headset", "Printer", "Scanner",
    "External Drive", "NAS", "Router", "Surge Protector", "Mouse Pad", "Warranty",
];
/// How many top-level variation points carry one nested variation point.
pub const WITH_SUB: usize = 30;
pub const PARTS: usize = 1154;
/// Parts with a performance rating; the rest (cables, software, ...) have none.
pub const RATED: usize = 600;
pub const PRICE_TIERS: [&str; 5] = ["Budget", "Low", "Medium", "High", "Ultra"];
/// (tier, perfMin, perfMax); the bands partition 0..=200.
pub const PERF_BANDS: [(&str, i64, i64); 5] = [
    ("Entry", 0, 19),
    ("Low", 20, 39),
    ("Medium", 40, 59),
    ("High", 60, 79),
    ("Ultra", 80, 200),
];

pub struct Part {
    pub name: String,
    pub parent: String,
    pub price_cat: i64,
    pub rating: Option<i64>,
}

pub struct Catalogue {
    pub declarations: String,
    pub top_level: Vec<String>,
    /// Every variation point, top-level and nested.
    pub variation_points: Vec<String>,
    pub parts: Vec<Part>,
}

pub fn catalogue<R: Rng>(rng: &mut R) -> Catalogue {
    let mut vps: Vec<(String, String, &str)> = Vec::new();
    for (i, t) in TOP_LEVEL.iter().enumerate() {
        let kind = if i < 10 { "mandatory" } else { "optional" };
        vps.push((t.to_string(), "Computer".to_string(), kind));
    }
    for t in TOP_LEVEL.iter().take(WITH_SUB) {
        vps.push((format!("{t} Extras"), t.to_string(), "optional"));
    }
    let mut rated: Vec<bool> = (0..PARTS).map(|i| i < RATED).collect();
    rated.shuffle(rng);
    let parts: Vec<Part> = (0..PARTS)
        .map(|i| {
            let vp = &vps[i % vps.len()].0;
            Part {
                name: format!("{vp} #{}", i / vps.len() + 1),
                parent: vp.clone(),
                price_cat: rng.gen_range(1..=5),
                rating: rated[i].then(|| rng.gen_range(0..=200)),
            }
        })
        .collect();

    let mut d = String::from("root \"Computer\";\n");
    for (name, parent, kind) in &vps {
        let _ = writeln!(d, "feature \"{name}\" \"{parent}\" {kind};");
    }
    // parts of mandatory points are alternatives, the others or-groups
    let mut first_child: std::collections::HashMap<&str, &str> = Default::default();
    for p in &parts {
        let group = if vps.iter().any(|(n, _, k)| n == &p.parent && *k == "mandatory") {
            "alternative"
        } else {
            "or"
        };
        let sibling = *first_child.entry(p.parent.as_str()).or_insert(p.name.as_str());
        let _ = write!(
            d,
            "feature \"{}\" \"{}\" {group} to \"{sibling}\" attribute priceCat {} attribute price {}",
            p.name,
            p.parent,
            p.price_cat,
            p.price_cat * 100 + rng.gen_range(0..100)
        );
        if let Some(r) = p.rating {
            let _ = write!(d, " attribute rating {r}");
        }
        d.push_str(";\n");
    }
    for w in parts.chunks(50) {
        let _ = writeln!(d, "constraint \"{}\" requires \"{}\";", w[0].name, w[w.len() - 1].name);
    }
    Catalogue {
        declarations: d,
        top_level: TOP_LEVEL.iter().map(|s| s.to_string()).collect(),
        variation_points: vps.into_iter().map(|v| v.0).collect(),
        parts,
    }
}

fn add(name: &str, parent: &str, decomp: &str, attrs: &str) -> String {
    format!("add feature \"{name}\" with attributes (_parent = \"{parent}\", _decomp = {decomp}{attrs});\n")
}

/// Price-tier restructuring: six additions, five bulk moves and one
/// removal per top-level variation point.
pub fn branch_a(cat: &Catalogue) -> String {
    let mut s = add("Configuration Assistant", "Computer", "mandatory", "");
    for (i, tier) in PRICE_TIERS.iter().enumerate().rev() {
        let decomp = if i == 4 {
            "alternative".to_string()
        } else {
            "alternative to \"Pricing - Ultra\"".to_string()
        };
        s += &add(
            &format!("Pricing - {tier}"),
            "Configuration Assistant",
            &decomp,
            &format!(", priceCategory = numeric : {}", i + 1),
        );
    }
    for (i, tier) in PRICE_TIERS.iter().enumerate().rev() {
        let _ = writeln!(
            s,
            "updateall feature F set _parent = \"Pricing - {tier}\" where F.priceCat = {};",
            i + 1
        );
    }
    for t in &cat.top_level {
        let _ = writeln!(s, "remove feature \"{t}\";");
    }
    s
}

/// Constraint-based guidance: thirteen additions and two bulk constraint
/// additions.
pub fn branch_b() -> String {
    let mut s = add("Configuration Assistant", "Computer", "mandatory", "");
    s += &add("CA - Pricing", "Configuration Assistant", "mandatory", "");
    s += &add("CA - Performance", "Configuration Assistant", "mandatory", "");
    for (i, tier) in PRICE_TIERS.iter().enumerate() {
        let decomp = if i == 0 {
            "alternative".to_string()
        } else {
            format!("alternative to \"Pricing - {}\"", PRICE_TIERS[0])
        };
        s += &add(
            &format!("Pricing - {tier}"),
            "CA - Pricing",
            &decomp,
            &format!(", priceCategory = numeric : {}", i + 1),
        );
    }
    for (i, (tier, lo, hi)) in PERF_BANDS.iter().enumerate() {
        let decomp = if i == 0 {
            "alternative".to_string()
        } else {
            format!("alternative to \"Performance - {}\"", PERF_BANDS[0].0)
        };
        s += &add(
            &format!("Performance - {tier}"),
            "CA - Performance",
            &decomp,
            &format!(", perfMax = numeric : {hi}, perfMin = numeric : {lo}"),
        );
    }
    s += "add constraint F excludes G where F.priceCategory <> G.priceCat;\n";
    s += "add constraint F excludes G where G.rating > F.perfMax or G.rating < F.perfMin;\n";
    s
}

/// Constraints Branch B must add, counted pair by pair from the generated
/// categories.
pub fn branch_b_expected_constraints(cat: &Catalogue) -> usize {
    let price = (1..=5)
        .map(|k| cat.parts.iter().filter(|p| p.price_cat != k).count())
        .sum::<usize>();
    let perf = PERF_BANDS
        .iter()
        .map(|(_, lo, hi)| {
            cat.parts
                .iter()
                .filter_map(|p| p.rating)
                .filter(|r| r > hi || r < lo)
                .count()
        })
        .sum::<usize>();
    price + perf
}

pub const TIMING_GROUPS: usize = 10;
pub const TIMING_LEAVES: usize = 239;
pub const TIMING_CONSTRAINTS: usize = 88;

/// 250 features (root, ten groups, 239 leaves) and 88 constraints. Leaf
/// `Li` sits under `G(i mod 10)` with `w = i`; `Li requires L(i+10)` for
/// the first 88 leaves.
pub fn timing_model() -> String {
    let mut d = String::from("root \"Root\";\n");
    for g in 0..TIMING_GROUPS {
        let kind = if g % 2 == 0 { "mandatory" } else { "optional" };
        let _ = writeln!(d, "feature \"G{g}\" \"Root\" {kind} attribute w {};", 1000 + g);
    }
    for i in 0..TIMING_LEAVES {
        let _ = writeln!(
            d,
            "feature \"L{i}\" \"G{}\" optional attribute w {i} attribute cost {} attribute tag \"{}\";",
            i % TIMING_GROUPS,
            (i * 7) % 50,
            ["red", "green", "blue"][i % 3]
        );
    }
    for i in 0..TIMING_CONSTRAINTS {
        let _ = writeln!(d, "constraint \"L{i}\" requires \"L{}\";", i + TIMING_GROUPS);
    }
    d
}
