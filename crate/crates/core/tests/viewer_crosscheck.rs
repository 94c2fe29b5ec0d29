//! Runs the inlined viewer's filtering under node (when installed) and
//! compares it with `apply_threshold` on the five-node fixture.
mod common;

use std::process::Command;

use forestflow::flow::FlowDocument;

fn node_available() -> bool {
    Command::new("node").arg("--version").output().is_ok_and(|o| o.status.success())
}

/// `(theta, aggregate JSON)` pairs the viewer produced.
pub fn viewer_filter(doc_json: &str, thetas: &[f64]) -> Option<Vec<serde_json::Value>> {
    if !node_available() {
        return None;
    }
    let dir = tempfile::TempDir::new().unwrap();
    let doc_path = dir.path().join("doc.json");
    std::fs::write(&doc_path, doc_json).unwrap();
    let viewer = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/viewer.js");
    let script = format!(
        "const v = require({viewer:?}); const doc = JSON.parse(require('fs').readFileSync({doc:?}, 'utf8'));\
         console.log(JSON.stringify({thetas:?}.map(t => v.applyThreshold(doc.base[0], t, doc.max_rank))));",
        viewer = viewer.display().to_string(),
        doc = doc_path.display().to_string(),
    );
    let out = Command::new("node").arg("-e").arg(script).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    Some(serde_json::from_slice(&out.stdout).unwrap())
}

#[test]
fn client_filter_matches_library() {
    let forest = common::five_node_forest();
    let base = FlowDocument::build(&forest, 5, None, 0.0).unwrap();
    let thetas = [0.0, 0.4, 0.5, 0.7];
    let Some(client) = viewer_filter(&base.to_json(), &thetas) else {
        eprintln!("node not installed; skipping");
        return;
    };
    for (theta, got) in thetas.iter().zip(client) {
        let doc = FlowDocument::build(&forest, 5, None, *theta).unwrap();
        let expected: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(got["groups"], expected["aggregate"]["groups"], "theta {theta}");
        assert_eq!(got["edges"], expected["aggregate"]["edges"], "theta {theta}");
        let fractions = |v: &serde_json::Value| -> Vec<f64> {
            v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
        };
        assert_eq!(
            fractions(&got["threshold"]["removed_fraction"]),
            fractions(&expected["aggregate"]["threshold"]["removed_fraction"]),
            "theta {theta}"
        );
    }
}
