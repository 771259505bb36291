use std::io::Write;

use serde::Serialize;

/// Output encoding of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = paintshop::Error;

    fn from_str(s: &str) -> paintshop::Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(paintshop::Error::InvalidArgument(format!("unknown format '{s}', expected csv or json"))),
        }
    }
}

/// Header row plus one record per row. Missing values are empty cells.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed JSON array.
pub fn write_json<T: Serialize, W: Write>(rows: &[T], mut out: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, out: W) -> anyhow::Result<()> {
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    }
}

pub fn to_string<T: Serialize>(rows: &[T], format: Format) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: usize,
        b: Option<f64>,
    }

    #[test]
    fn csv_has_header_and_blank_options() {
        let s = to_string(&[Row { a: 1, b: None }, Row { a: 2, b: Some(0.5) }], Format::Csv).unwrap();
        assert_eq!(s, "a,b\n1,\n2,0.5\n");
    }

    #[test]
    fn json_array() {
        let s = to_string(&[Row { a: 1, b: None }], Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0]["a"], 1);
        assert!(v[0]["b"].is_null());
        assert!("xml".parse::<Format>().is_err());
    }
}
