//! Canonical report bytes: field order as declared, two-space indent, LF
//! line endings, numbers rounded to a fixed count of significant digits.

use serde_json::Value;

/// `x` rounded to `precision` significant digits, printed in shortest
/// round-trip form. Non-finite values have no JSON literal and become
/// `null`.
pub fn number(x: f64, precision: usize) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    let y = if precision >= 17 {
        x
    } else {
        format!("{:.*e}", precision - 1, x).parse().expect("formatted float parses")
    };
    format!("{y:?}")
}

fn write_value(v: &Value, precision: usize, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&number(n.as_f64().unwrap_or(f64::NAN), precision));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            // Flat numeric arrays stay on one line.
            if a.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, precision, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(indent + 2, out);
                write_value(x, precision, indent + 2, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&serde_json::to_string(k).expect("keys serialize"));
                out.push_str(": ");
                write_value(x, precision, indent + 2, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

pub fn json(v: &Value, precision: usize) -> String {
    let mut out = String::new();
    write_value(v, precision, 0, &mut out);
    out.push('\n');
    out
}

/// CSV with quoted header and text cells, `.` decimals and `,` separators.
pub fn csv(header: &[String], rows: &[Vec<Cell>], precision: usize) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::NonNumeric)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(vec![]);
    w.write_record(header)?;
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .map(|c| match c {
                Cell::Num(x) if x.is_finite() => number(*x, precision),
                Cell::Num(x) => format!("{x}"),
                Cell::Int(i) => i.to_string(),
                Cell::Text(s) => s.clone(),
            })
            .collect();
        w.write_record(&cells)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}
