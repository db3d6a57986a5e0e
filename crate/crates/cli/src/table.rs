//! Human-readable rendering of documents for `--format table`.

use serde_json::Value;

/// Renders a group object (`free_rank`/`torsion` or `dimension`) compactly.
fn group_text(v: &Value) -> Option<String> {
    let m = v.as_object()?;
    if let Some(d) = m.get("dimension").and_then(Value::as_u64) {
        if m.len() == 1 {
            return Some(match d {
                0 => "0".into(),
                1 => "Q".into(),
                d => format!("Q^{d}"),
            });
        }
    }
    let r = m.get("free_rank")?.as_u64()?;
    let t = m.get("torsion")?.as_array()?;
    if m.len() != 2 {
        return None;
    }
    let mut parts = Vec::new();
    match r {
        0 => {}
        1 => parts.push("Z".to_string()),
        r => parts.push(format!("Z^{r}")),
    }
    parts.extend(t.iter().filter_map(Value::as_str).map(|o| format!("Z/{o}")));
    Some(if parts.is_empty() { "0".into() } else { parts.join(" + ") })
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => Some(format!("[{}]", a.iter().filter_map(scalar).collect::<Vec<_>>().join(", "))),
        other => group_text(other),
    }
}

fn walk(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        walk(x, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for x in a {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        // one line per flat record, nested otherwise
                        let flat = x.as_object().filter(|m| m.values().all(|y| scalar(y).is_some()));
                        match flat {
                            Some(m) => {
                                let cells: Vec<String> = m.iter().map(|(k, y)| format!("{k}={}", scalar(y).unwrap())).collect();
                                out.push_str(&format!("{pad}- {}\n", cells.join("  ")));
                            }
                            None => {
                                out.push_str(&format!("{pad}-\n"));
                                walk(x, indent + 1, out);
                            }
                        }
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

pub fn render(v: &Value) -> String {
    let mut out = String::new();
    walk(v, 0, &mut out);
    out
}
