//! File formats for sample sets, traces and flowpipes.
//!
//! * sample CSV: header `t,run_1,...,run_N`, one row per time step;
//! * trace CSV: header `t,value`;
//! * flowpipe JSON: `{"channel", "epsilon", "step_duration_s", "steps": [[lo, hi], ...]}`;
//! * sample JSON: `{"channel", "step_duration_s", "runs": [[x_0, ..., x_T-1], ...]}`;
//! * trace JSON: `{"channel", "step_duration_s", "values": [...]}`.
//!
//! The `t` column is in seconds; the step duration is the (uniform) spacing
//! of that column, or 1 s for single-row files.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bounds, Flowpipe, Result, SampleSet, SignalError, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guess from the extension; anything that is not `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct FlowpipeDoc {
    channel: String,
    epsilon: f64,
    step_duration_s: f64,
    steps: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct SamplesDoc {
    channel: String,
    step_duration_s: f64,
    runs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct TraceDoc {
    channel: String,
    step_duration_s: f64,
    values: Vec<f64>,
}

struct Table {
    times: Vec<f64>,
    // row-major, without the `t` column
    rows: Vec<Vec<f64>>,
}

fn shape(path: &Path, message: impl Into<String>) -> SignalError {
    SignalError::Shape {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(&display, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error(&display, e))?
        .clone();
    if headers.get(0) != Some("t") {
        return Err(shape(path, "first header column must be `t`"));
    }
    let width = headers.len();
    if width < 2 {
        return Err(shape(path, "expected at least one value column"));
    }
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&display, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(shape(
                path,
                format!(
                    "line {line}: expected {width} columns, found {}",
                    record.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(width);
        for (idx, raw) in record.iter().enumerate() {
            let column = idx + 1;
            let v: f64 = raw.parse().map_err(|_| SignalError::Parse {
                path: display.clone(),
                line,
                column,
                message: format!("cannot parse `{raw}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(SignalError::Value {
                    path: display.clone(),
                    line,
                    column,
                    raw: raw.to_string(),
                });
            }
            values.push(v);
        }
        times.push(values.remove(0));
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(shape(path, "no data rows"));
    }
    Ok(Table { times, rows })
}

fn csv_error(path: &str, e: csv::Error) -> SignalError {
    let (line, column) = match e.position() {
        Some(p) => (p.line(), 0),
        None => (0, 0),
    };
    SignalError::Parse {
        path: path.to_string(),
        line,
        column,
        message: e.to_string(),
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
fn step_duration(path: &Path, times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(1.0);
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(shape(path, "`t` column must be strictly increasing"));
    }
    let tol = 1e-9 * dt.abs().max(1.0);
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > tol {
            return Err(shape(path, "`t` column must be uniformly spaced"));
        }
    }
    Ok(dt)
}

/// Load a Monte Carlo sample set. `channel` names the signal for CSV input;
/// JSON files carry their own channel.
pub fn load_samples(path: &Path, format: Format, channel: &str) -> Result<SampleSet> {
    match format {
        Format::Csv => {
            let table = read_table(path)?;
            let dt = step_duration(path, &table.times)?;
            let n_runs = table.rows[0].len();
            let runs = (0..n_runs)
                .map(|r| table.rows.iter().map(|row| row[r]).collect())
                .collect();
            SampleSet::new(channel, dt, runs)
        }
        Format::Json => {
            let doc: SamplesDoc = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            SampleSet::new(doc.channel, doc.step_duration_s, doc.runs)
        }
    }
}

/// Load a single trace. `channel` names the signal for CSV input.
pub fn load_trace(path: &Path, format: Format, channel: &str) -> Result<Trace> {
    match format {
        Format::Csv => {
            let table = read_table(path)?;
            if table.rows[0].len() != 1 {
                return Err(shape(path, "trace CSV must have header `t,value`"));
            }
            let dt = step_duration(path, &table.times)?;
            Trace::new(channel, dt, table.rows.into_iter().map(|r| r[0]).collect())
        }
        Format::Json => {
            let doc: TraceDoc = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            Trace::new(doc.channel, doc.step_duration_s, doc.values)
        }
    }
}

pub fn read_flowpipe_json(path: &Path) -> Result<Flowpipe> {
    let doc: FlowpipeDoc = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    flowpipe_from_doc(doc)
}

fn flowpipe_from_doc(doc: FlowpipeDoc) -> Result<Flowpipe> {
    let steps = doc
        .steps
        .into_iter()
        .map(|[lower, upper]| Bounds { lower, upper })
        .collect();
    Flowpipe::new(doc.channel, doc.epsilon, doc.step_duration_s, steps)
}

pub fn write_flowpipe_json<W: Write>(writer: W, flowpipe: &Flowpipe) -> Result<()> {
    serde_json::to_writer(writer, &to_doc(flowpipe))?;
    Ok(())
}

impl Flowpipe {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(to_doc(self)).expect("flowpipe serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        flowpipe_from_doc(serde_json::from_str(s)?)
    }
}

fn to_doc(fp: &Flowpipe) -> FlowpipeDoc {
    FlowpipeDoc {
        channel: fp.channel.clone(),
        epsilon: fp.epsilon,
        step_duration_s: fp.step_duration,
        steps: fp.steps.iter().map(|b| [b.lower, b.upper]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn sample_csv_parses_runs_as_columns() {
        let dir = tempfile::tempdir().unwrap();
        let body = "t,run_1,run_2,run_3\n\
                    0,1,2,3\n180,4,5,6\n360,7,8,9\n540,1,1,1\n720,2,2,2\n";
        let s = load_samples(&write(&dir, "s.csv", body), Format::Csv, "BG").unwrap();
        assert_eq!(s.n_runs(), 3);
        assert_eq!(s.n_steps(), 5);
        assert_eq!(s.step_duration(), 180.0);
        assert_eq!(s.runs()[1], vec![2.0, 5.0, 8.0, 1.0, 2.0]);
    }

    #[test]
    fn ragged_rows_are_a_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "t,run_1,run_2\n0,1,2\n1,3\n");
        let err = load_samples(&p, Format::Csv, "BG").unwrap_err();
        assert!(matches!(err, SignalError::Shape { .. }), "{err}");
    }

    #[test]
    fn nan_cell_is_a_value_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "s.csv", "t,run_1,run_2\n0,1,2\n1,NaN,2\n");
        match load_samples(&p, Format::Csv, "BG").unwrap_err() {
            SignalError::Value { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn garbage_cell_is_a_parse_error_with_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "t,value\n0,70\n3,abc\n");
        match load_trace(&p, Format::Csv, "BG").unwrap_err() {
            SignalError::Parse { line, column, .. } => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn trace_csv_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "t.csv", "t,value\n0,70\n3,80\n");
        let t = load_trace(&p, Format::Csv, "BG").unwrap();
        assert_eq!(t.values(), &[70.0, 80.0]);
        assert_eq!(t.step_duration(), 3.0);
        let p = write(
            &dir,
            "t.json",
            r#"{"channel":"BG","step_duration_s":180,"values":[1,2,3]}"#,
        );
        let t = load_trace(&p, Format::from_path(&p), "ignored").unwrap();
        assert_eq!(t.channel(), "BG");
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn flowpipe_json_field_names() {
        let fp = Flowpipe::from_pairs("BG", 0.95, 180.0, &[(60.0, 80.0), (40.0, 65.0)]).unwrap();
        let v = fp.to_json();
        assert_eq!(v["channel"], "BG");
        assert_eq!(v["epsilon"], 0.95);
        assert_eq!(v["step_duration_s"], 180.0);
        assert_eq!(v["steps"][1][0], 40.0);
        let back = Flowpipe::from_json_str(&v.to_string()).unwrap();
        assert_eq!(back, fp);
    }

    #[test]
    fn inverted_flowpipe_json_is_rejected() {
        let s = r#"{"channel":"BG","epsilon":0.9,"step_duration_s":1,"steps":[[5,4]]}"#;
        assert!(matches!(
            Flowpipe::from_json_str(s),
            Err(SignalError::Inverted { .. })
        ));
    }
}
