use crate::error::{HawkesError, Result};
use crate::model::{sort_and_break_ties, EventSequence, MarkedEvent};
use std::collections::HashMap;
use std::path::Path;

/// Original labels of marks and replicates, in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labels {
    pub marks: Vec<String>,
    pub replicates: Vec<String>,
}

impl Labels {
    /// `1..=K` and `1..=D`.
    pub fn numeric(mark_count: usize, replicate_count: usize) -> Self {
        Labels {
            marks: (1..=mark_count).map(|m| m.to_string()).collect(),
            replicates: (1..=replicate_count).map(|d| d.to_string()).collect(),
        }
    }

    pub fn mark(&self, k: usize) -> &str {
        &self.marks[k]
    }

    /// `mark.<k>=<label>` and `replicate.<d>=<label>`, 1-based.
    pub fn to_kv(&self) -> std::collections::BTreeMap<String, String> {
        let mut m = std::collections::BTreeMap::new();
        for (k, l) in self.marks.iter().enumerate() {
            m.insert(format!("mark.{}", k + 1), l.clone());
        }
        for (d, l) in self.replicates.iter().enumerate() {
            m.insert(format!("replicate.{}", d + 1), l.clone());
        }
        m
    }

    pub fn from_kv(m: &std::collections::BTreeMap<String, String>) -> Result<Self> {
        let collect = |prefix: &str| -> Result<Vec<String>> {
            let n = m.keys().filter(|k| k.starts_with(prefix)).count();
            (1..=n)
                .map(|i| {
                    m.get(&format!("{prefix}{i}"))
                        .cloned()
                        .ok_or_else(|| HawkesError::validation(format!("missing label {prefix}{i}")))
                })
                .collect()
        };
        Ok(Labels {
            marks: collect("mark.")?,
            replicates: collect("replicate.")?,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HawkesError::io(path, e))?;
        Self::from_kv(&super::parse_kv(&text, &path.display().to_string())?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, super::render_kv(&self.to_kv())).map_err(|e| HawkesError::io(path, e))
    }
}

/// Events of every replicate with their labels.
#[derive(Debug, Clone)]
pub struct EventData {
    pub sequences: Vec<EventSequence>,
    pub labels: Labels,
    /// Number of exact timestamp ties that were perturbed.
    pub collisions: usize,
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> HawkesError {
    HawkesError::Parse {
        path: path.display().to_string(),
        line: line as usize,
        message: message.into(),
    }
}

/// Read a `time,mark,replicate` CSV (the replicate column may be omitted).
///
/// Marks and replicates may be any strings and are numbered in order of
/// first appearance. `horizons` overrides the per-replicate window end:
/// empty uses each replicate's last event time, one value applies to all,
/// otherwise one value per replicate.
pub fn ingest_events(path: impl AsRef<Path>, horizons: &[f64]) -> Result<EventData> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| HawkesError::io(path, e))?;
    read_events(file, path, horizons)
}

pub fn read_events<R: std::io::Read>(reader: R, path: &Path, horizons: &[f64]) -> Result<EventData> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let t_col = col("time").ok_or_else(|| parse_err(path, 1, "missing `time` column"))?;
    let m_col = col("mark").ok_or_else(|| parse_err(path, 1, "missing `mark` column"))?;
    let r_col = col("replicate");

    let mut labels = Labels::default();
    let mut mark_ids: HashMap<String, usize> = HashMap::new();
    let mut rep_ids: HashMap<String, usize> = HashMap::new();
    let mut raw: Vec<Vec<MarkedEvent>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).ok_or_else(|| parse_err(path, line, "missing field"));
        let t_str = field(t_col)?;
        let time: f64 = t_str
            .parse()
            .map_err(|_| parse_err(path, line, format!("time {t_str:?} is not a number")))?;
        if !(time.is_finite() && time > 0.0) {
            return Err(parse_err(path, line, format!("time {time} must be positive and finite")));
        }
        let mark_label = field(m_col)?;
        if mark_label.is_empty() {
            return Err(parse_err(path, line, "empty mark"));
        }
        let rep_label = match r_col {
            Some(c) => field(c)?.to_string(),
            None => "1".to_string(),
        };
        let next = mark_ids.len();
        let mark = *mark_ids.entry(mark_label.to_string()).or_insert_with(|| {
            labels.marks.push(mark_label.to_string());
            next
        });
        let next = rep_ids.len();
        let rep = *rep_ids.entry(rep_label.clone()).or_insert_with(|| {
            labels.replicates.push(rep_label.clone());
            next
        });
        if rep == raw.len() {
            raw.push(Vec::new());
        }
        raw[rep].push(MarkedEvent::new(time, mark));
    }
    if raw.is_empty() {
        return Err(parse_err(path, 1, "no events"));
    }
    let d_count = raw.len();
    if !(horizons.is_empty() || horizons.len() == 1 || horizons.len() == d_count) {
        return Err(HawkesError::validation(format!(
            "{} horizons given for {d_count} replicates",
            horizons.len()
        )));
    }
    let k_count = labels.marks.len();
    let mut sequences = Vec::with_capacity(d_count);
    let mut collisions = 0;
    for (d, mut events) in raw.into_iter().enumerate() {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        let last = events.last().map_or(0.0, |e| e.time);
        let horizon = match horizons.len() {
            0 => last,
            1 => horizons[0],
            _ => horizons[d],
        };
        if last > horizon {
            return Err(HawkesError::validation(format!(
                "replicate {} has an event at {last}, after its horizon {horizon}",
                labels.replicates[d]
            )));
        }
        let (events, ties) = sort_and_break_ties(events, horizon);
        for _ in 0..ties {
            log::warn!(
                "replicate {}: identical event times perturbed by 1e-9·T",
                labels.replicates[d]
            );
        }
        collisions += ties;
        let horizon = horizon.max(events.last().map_or(0.0, |e| e.time));
        sequences.push(EventSequence::new(events, horizon, k_count, d)?);
    }
    Ok(EventData {
        sequences,
        labels,
        collisions,
    })
}

/// Write events as `time,mark,replicate` with original labels.
pub fn write_events(path: impl AsRef<Path>, sequences: &[EventSequence], labels: &Labels) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| HawkesError::io(path, e.into()))?;
    let io = |e: csv::Error| HawkesError::io(path, e.into());
    w.write_record(["time", "mark", "replicate"]).map_err(io)?;
    for (d, seq) in sequences.iter().enumerate() {
        for e in seq.events() {
            w.write_record([
                super::fmt_f64(e.time),
                labels.marks[e.mark].clone(),
                labels.replicates[d].clone(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| HawkesError::io(path, e))
}
