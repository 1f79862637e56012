//! Shows what a student receives for a block-ordering exercise: blocks
//! shuffled per student, public tests only, no solution.
//!
//! ```text
//! cargo run --example present_bundle
//! ```

use exforge::parse_manifest;
use exforge::present;
use exforge::service::presentation_seed;

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/exercises/sum-to-n.exercise.json");
    let manifest = parse_manifest(&std::fs::read_to_string(path).unwrap()).unwrap();

    for student in ["ana", "ben", "cy", "dee"] {
        let bundle = present(&manifest, presentation_seed(student, &manifest.id));
        let order: Vec<&str> = bundle.blocks.iter().flatten().map(|b| b.id.as_str()).collect();
        println!("{student} sees blocks in order {order:?}");
    }

    let bundle = present(&manifest, 0);
    println!("{}", serde_json::to_string_pretty(&bundle).unwrap());
}
