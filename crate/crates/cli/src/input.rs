//! CSV ingestion: comma-separated, one series per column, an optional
//! header row detected by a non-numeric first row.

use std::io::Read;
use std::path::Path;

use wavemoments::fixtures::load_fixture;
use wavemoments::simulate::TimeSeries;

use crate::error::{io_error, CliError, CliResult};

const FIXTURE_PREFIX: &str = "fixture:";

pub fn read_series(input: &str, column: Option<&str>) -> CliResult<TimeSeries> {
    if let Some(name) = input.strip_prefix(FIXTURE_PREFIX) {
        let fixture = load_fixture(name)?;
        return fixture
            .series()
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("fixture `{name}` is a table, not a series")));
    }
    let text = if input == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Data(format!("stdin: {e}")))?;
        s
    } else {
        let path = Path::new(input);
        std::fs::read_to_string(path).map_err(|e| io_error(path, e))?
    };
    parse_series(&text, column).map_err(|e| match e {
        CliError::Data(m) => CliError::Data(format!("{input}: {m}")),
        other => other,
    })
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

pub fn parse_series(text: &str, column: Option<&str>) -> CliResult<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let records = rdr
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let records: Vec<_> = records
        .into_iter()
        .filter(|r| !(r.len() == 1 && r[0].is_empty()))
        .collect();
    let Some(first) = records.first() else {
        return Err(CliError::Data("no data rows".into()));
    };
    let header = first.iter().any(|f| !is_numeric(f));
    let idx = match column {
        None => 0,
        Some(c) => {
            let by_name = header.then(|| first.iter().position(|h| h == c)).flatten();
            match by_name {
                Some(i) => i,
                None => match c.parse::<usize>() {
                    Ok(i) if i >= 1 && i <= first.len() => i - 1,
                    _ => return Err(CliError::Usage(format!("no column `{c}` (columns: {})", first.len()))),
                },
            }
        }
    };
    let body = if header { &records[1..] } else { &records[..] };
    let skip = usize::from(header);
    let mut values = Vec::with_capacity(body.len());
    for (i, rec) in body.iter().enumerate() {
        let row = i + 1 + skip;
        let field = rec
            .get(idx)
            .ok_or_else(|| CliError::Data(format!("row {row} has no column {}", idx + 1)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::Data(format!("row {row}: `{field}` is not a number")))?;
        if !v.is_finite() {
            return Err(CliError::Data(format!("row {row}: non-finite value")));
        }
        values.push(v);
    }
    Ok(TimeSeries::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection_and_columns() {
        let ts = parse_series("a,b\n1,10\n2,20\n3,30\n", None).unwrap();
        assert_eq!(ts.values(), &[1.0, 2.0, 3.0]);
        let ts = parse_series("a,b\n1,10\n2,20\n", Some("b")).unwrap();
        assert_eq!(ts.values(), &[10.0, 20.0]);
        let ts = parse_series("1,10\n2,20\n", Some("2")).unwrap();
        assert_eq!(ts.values(), &[10.0, 20.0]);
        let ts = parse_series("0.5\n-1e3\n 7 \n", None).unwrap();
        assert_eq!(ts.values(), &[0.5, -1000.0, 7.0]);
        assert!(matches!(parse_series("a\n1\n2\n", Some("z")), Err(CliError::Usage(_))));
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse_series("1\nx\n3\n", None), Err(CliError::Data(_))));
        assert!(matches!(parse_series("1\n2,3\n", None), Err(CliError::Data(_))));
        assert!(matches!(parse_series("", None), Err(CliError::Data(_))));
        assert!(matches!(parse_series("v\n1\n", None), Err(CliError::Data(_))));
        assert!(matches!(parse_series("1\ninf\n", None), Err(CliError::Data(_))));
    }
}
