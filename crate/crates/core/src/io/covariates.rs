use crate::error::{HawkesError, Result};
use crate::model::CovariateTrack;
use std::path::Path;

/// Read a piecewise-constant covariate path from a `time,value…` CSV.
///
/// Each row starts a segment at `time` holding its values until the next
/// row. The last row only closes the final segment: its time is the end of
/// coverage and its values are ignored (they may be left empty). The
/// intercept column is added automatically. When `horizon` is given the
/// track must reach it.
pub fn ingest_covariates(path: impl AsRef<Path>, horizon: Option<f64>) -> Result<(CovariateTrack, Vec<String>)> {
    let path = path.as_ref();
    let perr = |line: u64, message: String| HawkesError::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| HawkesError::io(path, e.into()))?;
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("time") {
        return Err(perr(1, "expected header `time,<name>,...`".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut starts = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| perr(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let t: f64 = rec[0]
            .parse()
            .map_err(|_| perr(line, format!("time {:?} is not a number", &rec[0])))?;
        if let Some(&prev) = starts.last() {
            if !(t > prev) {
                return Err(perr(line, format!("times must increase strictly ({t} after {prev})")));
            }
        }
        starts.push(t);
        lines.push(line);
        values.push(rec.iter().skip(1).map(str::to_string).collect::<Vec<_>>());
    }
    if starts.len() < 2 {
        return Err(perr(1, "need at least one segment and a closing row".into()));
    }
    let end = starts.pop().unwrap();
    values.pop();
    let mut rows = Vec::with_capacity(values.len());
    for (row, line) in values.into_iter().zip(lines) {
        if row.len() != names.len() {
            return Err(perr(line, format!("expected {} values, found {}", names.len(), row.len())));
        }
        rows.push(
            row.iter()
                .map(|v| v.parse::<f64>().map_err(|_| perr(line, format!("value {v:?} is not a number"))))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    let track = CovariateTrack::new(starts, end, rows)?;
    if let Some(h) = horizon {
        track.covers(h)?;
    }
    Ok((track, names))
}
