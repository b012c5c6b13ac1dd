use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// 17 significant digits, enough to read every `f64` back exactly.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_csv(w: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header)?;
    for r in rows {
        wr.write_record(r)?;
    }
    wr.flush()
}

pub fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

fn cell(v: &str) -> serde_json::Value {
    if v.is_empty() {
        return serde_json::Value::Null;
    }
    if let Ok(i) = v.parse::<i64>() {
        return serde_json::json!(i);
    }
    if let Ok(x) = v.parse::<f64>() {
        return serde_json::json!(x);
    }
    match v {
        "true" => serde_json::Value::Bool(true),
        "false" => serde_json::Value::Bool(false),
        s => serde_json::Value::String(s.to_string()),
    }
}

/// A table as JSON: one object per row, keyed by column.
pub fn table_json(header: &[&str], rows: &[Vec<String>]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<String, serde_json::Value> = header
                .iter()
                .zip(r)
                .map(|(k, v)| (k.to_string(), cell(v)))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::Value::Array(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -6.180053342539894, 1e-300, 2.0 / 3.0, 123456789.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn csv_and_json_tables_agree() {
        let rows = vec![vec!["1".to_string(), num(0.25), "true".into(), "certified".into(), String::new()]];
        let head = ["m", "x", "ok", "status", "gap"];
        let mut buf = Vec::new();
        write_csv(&mut buf, &head, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "m,x,ok,status,gap\n1,2.5000000000000000e-1,true,certified,\n");
        let v = table_json(&head, &rows);
        assert_eq!(v[0]["m"], serde_json::json!(1));
        assert_eq!(v[0]["x"], serde_json::json!(0.25));
        assert_eq!(v[0]["ok"], serde_json::json!(true));
        assert_eq!(v[0]["status"], serde_json::json!("certified"));
        assert!(v[0]["gap"].is_null());
    }
}
