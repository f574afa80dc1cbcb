//! Ground-truth plot membership for the Crescent intelligence-report corpus,
//! shipped as demo metadata for coloring a live session.

use std::collections::BTreeMap;

pub const CRESCENT_GROUNDTRUTH_JSON: &str = include_str!("../data/crescent_groundtruth.json");

/// Plot name (`boston`, `newyork`, `atlanta`, `irrelevant`) to report ids.
/// A report may belong to several plots.
pub fn crescent_groundtruth() -> BTreeMap<String, Vec<String>> {
    serde_json::from_str(CRESCENT_GROUNDTRUTH_JSON).expect("bundled ground truth is valid JSON")
}

/// The plots a report belongs to, in name order.
pub fn plots_of(report_id: &str) -> Vec<String> {
    crescent_groundtruth()
        .into_iter()
        .filter(|(_, ids)| ids.iter().any(|id| id == report_id))
        .map(|(plot, _)| plot)
        .collect()
}
