// SPDX-License-Identifier: Apache-2.0

//! Deterministic text output: 17-significant-digit scientific numbers,
//! LF-terminated CSV and key-sorted JSON.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

/// `d.dddddddddddddddde±XX`, enough digits to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    let (mant, exp) = s.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

/// Empty field for missing values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// CSV table assembled in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text, columns: header.len() }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        debug_assert_eq!(fields.len(), self.columns, "CSV row width");
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            first = false;
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
    }

    /// Row of numbers in the fixed format.
    pub fn numeric_row(&mut self, values: &[f64]) {
        let fields: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        self.row(&fields);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Pretty JSON with sorted keys, floats in the fixed format and a trailing
/// newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize, out: &mut String| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (_, Some(u)) => out.push_str(&u.to_string()),
            _ => {
                let x = n.as_f64().expect("finite JSON number");
                out.push_str(&fmt_f64(x));
            }
        },
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Short numeric arrays stay on one line.
            if items.len() <= 4 && items.iter().all(|x| x.is_number() || x.is_boolean() || x.is_null()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                pad(indent + 2, out);
                write_value(x, indent + 2, out);
                if k + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, x)) in map.iter().enumerate() {
                pad(indent + 2, out);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 2, out);
                if k + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_with_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-01");
        assert_eq!(fmt_f64(-1234.5), "-1.2345000000000000e+03");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e+00");
        for x in [std::f64::consts::PI, 1e-300, -7.25e123, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn csv_uses_lf() {
        let mut c = Csv::new(&["a", "b"]);
        c.numeric_row(&[1.0, 2.0]);
        c.row(&["x", ""]);
        assert_eq!(c.as_str(), "a,b\n1.0000000000000000e+00,2.0000000000000000e+00\nx,\n");
    }

    #[test]
    fn json_sorted_and_parseable() {
        let v = serde_json::json!({"zeta": 0.5, "alpha": [1, 2.5], "mid": {"b": null, "a": true}});
        let s = to_json_string(&v).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("mid").unwrap());
        assert!(s.find("mid").unwrap() < s.find("zeta").unwrap());
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["zeta"], 0.5);
        assert_eq!(back["alpha"][0], 1);
        assert!(s.ends_with("}\n"));
    }
}
