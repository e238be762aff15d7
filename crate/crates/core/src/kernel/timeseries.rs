//! Piecewise-constant time series read from CSV.

use std::path::Path;

use super::KernelError;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<i64>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Rows must have strictly increasing times.
    pub fn new(rows: Vec<(i64, f64)>) -> Result<Self, String> {
        if rows.is_empty() {
            return Err("time series has no rows".into());
        }
        if let Some(w) = rows.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(format!(
                "times must increase strictly, found {} after {}",
                w[1].0, w[0].0
            ));
        }
        let (times, values) = rows.into_iter().unzip();
        Ok(TimeSeries { times, values })
    }

    /// Header `time_s,<column>...`; picks one column.
    pub fn from_csv<R: std::io::Read>(reader: R, column: &str) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
        if headers.get(0) != Some("time_s") {
            return Err("first header must be time_s".into());
        }
        let idx = headers
            .iter()
            .position(|h| h == column)
            .filter(|&i| i > 0)
            .ok_or_else(|| format!("no column {column:?}"))?;
        let mut rows = Vec::new();
        for (n, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let line = n + 2;
            let t = record
                .get(0)
                .and_then(|s| s.trim().parse::<i64>().ok())
                .ok_or_else(|| format!("line {line}: time_s is not an integer"))?;
            let v = record
                .get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("line {line}: {column} is not a finite number"))?;
            rows.push((t, v));
        }
        Self::new(rows)
    }

    pub fn load(path: &Path, column: &str) -> Result<Self, KernelError> {
        let err = |message: String| KernelError::Timeseries {
            path: path.display().to_string(),
            message,
        };
        let file = std::fs::File::open(path).map_err(|e| err(e.to_string()))?;
        Self::from_csv(file, column).map_err(err)
    }

    /// Value of the last row at or before `t`; the first value before that.
    pub fn at(&self, t: i64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => self.values[0],
            i => self.values[i - 1],
        }
    }
}
