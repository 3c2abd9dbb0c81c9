//! The five character rules, checked in order against raw JSON records.

use rhythm_dungeon::characters::{check_record, RecordError};
use serde_json::json;

fn main() {
    let base = json!({
        "name": "Wren", "level": 1, "xp": 0,
        "strength": 3, "armor": 3, "luck": 2, "vitality": 1,
        "weakness": "None", "unspent_skill_points": 0,
    });
    let cases = [
        ("valid", base.clone()),
        ("level 0", patch(&base, "level", json!(0))),
        ("strength 60", patch(&base, "strength", json!(60))),
        ("overspent", patch(&base, "luck", json!(5))),
        ("unknown weakness", patch(&base, "weakness", json!("Slow"))),
        ("bell in name", patch(&base, "name", json!("W\u{7}ren"))),
        // Several rules broken at once: the first one in order is reported.
        ("level and name", patch(&patch(&base, "level", json!(30)), "name", json!(""))),
        ("not a record", json!({"name": "Wren"})),
    ];
    for (label, value) in cases {
        match check_record(&value) {
            Ok(c) => println!("{label:>18}: accepted, career {:?}", c.career()),
            Err(RecordError::Invalid(rule)) => println!("{label:>18}: rejected by {rule:?}"),
            Err(RecordError::Malformed(m)) => println!("{label:>18}: malformed ({m})"),
        }
    }
}

fn patch(v: &serde_json::Value, key: &str, to: serde_json::Value) -> serde_json::Value {
    let mut v = v.clone();
    v[key] = to;
    v
}
