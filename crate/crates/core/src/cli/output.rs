//! Trace and snapshot files.

use std::fmt::Write;

use serde_json::Value;

use crate::engine::{EventRecord, InfectionType, Trace};
use crate::lattice::{bounding_box, LatticeBox, Site};

/// `{"header": …, "events": […]}` with one event per line.
pub fn trace_json(header: &Value, events: &[EventRecord]) -> String {
    let mut out = String::from("{\"header\":");
    out.push_str(&serde_json::to_string(header).expect("header serializes"));
    out.push_str(",\n\"events\":[");
    for (i, e) in events.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
    }
    out.push_str("\n]}\n");
    out
}

fn cell(trace_status: &rustc_hash::FxHashMap<Site, InfectionType>, x: &Site) -> char {
    match trace_status.get(x) {
        None => '.',
        Some(InfectionType::One) => '1',
        Some(InfectionType::Two) => '2',
    }
}

/// Final state over its bounding box: `#` comment lines carrying the header,
/// then rows from the top (largest second coordinate) down. Above two
/// dimensions the box is cut into 2D slices, one per value of the remaining
/// coordinates, each introduced by a `# slice` line.
pub fn snapshot(header: &Value, trace: &Trace) -> String {
    let (g1, g2) = trace.final_sets();
    let status: rustc_hash::FxHashMap<Site, InfectionType> = g1
        .iter()
        .map(|s| (s.clone(), InfectionType::One))
        .chain(g2.iter().map(|s| (s.clone(), InfectionType::Two)))
        .collect();
    let all = g1.union(&g2);
    let b = bounding_box(&all).expect("a run never empties");
    let (lo, hi) = (b.lo().coords(), b.hi().coords());
    let d = b.dim();

    let mut out = String::new();
    writeln!(out, "# {}", serde_json::to_string(header).expect("header serializes")).unwrap();
    writeln!(out, "# window {} {}", b.lo(), b.hi()).unwrap();

    // odometer over coordinates 3..d; a single empty slice when d = 2
    let rest = if d > 2 {
        LatticeBox::new(Site::new(&lo[2..]), Site::new(&hi[2..]))
            .expect("sub-box of a valid box")
            .sites()
            .into_iter()
            .map(|s| s.coords().to_vec())
            .collect()
    } else {
        vec![Vec::new()]
    };
    for tail in rest {
        if d > 2 {
            let label: Vec<String> = tail
                .iter()
                .enumerate()
                .map(|(i, c)| format!("x{}={c}", i + 3))
                .collect();
            writeln!(out, "# slice {}", label.join(",")).unwrap();
        }
        for y in (lo[1]..=hi[1]).rev() {
            for x in lo[0]..=hi[0] {
                let mut c = vec![x, y];
                c.extend_from_slice(&tail);
                out.push(cell(&status, &Site::new(&c)));
            }
            out.push('\n');
        }
    }
    out
}
