//! Observed data, CSV ingestion and the set of admissible change-point times.
//!
//! The input format is a CSV file with the fixed header `time,status,x1,…,xp`.
//! `status` is 0 for a censored record and `r ∈ 1..=m` for an event of cause
//! `r`. An event record may carry `time = t_max + 1`, meaning the individual
//! is known to be event-free up to the horizon.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub time: usize,
    /// 0 = censored, `r >= 1` = event of cause `r`.
    pub status: usize,
    pub covariates: Vec<f64>,
}

impl Observation {
    pub fn new(time: usize, status: usize, covariates: Vec<f64>) -> Self {
        Self {
            time,
            status,
            covariates,
        }
    }
}

/// How the horizon `t_max` is chosen when a dataset is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// `t_max = max_i t_i`.
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Horizon::Auto);
        }
        s.parse::<usize>()
            .map(Horizon::Fixed)
            .map_err(|_| Error::Config(format!("t_max must be an integer or `auto`, got {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    observations: Vec<Observation>,
    m: usize,
    p: usize,
    t_max: usize,
}

impl Dataset {
    /// Validate observations against `m` and the horizon.
    pub fn new(observations: Vec<Observation>, m: usize, horizon: Horizon) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyData);
        }
        if m == 0 {
            return Err(Error::Config("number of risks m must be at least 1".into()));
        }
        let p = observations[0].covariates.len();
        let t_max = match horizon {
            Horizon::Fixed(t) => t,
            Horizon::Auto => observations.iter().map(|o| o.time).max().unwrap_or(0),
        };
        if t_max == 0 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        for (idx, obs) in observations.iter().enumerate() {
            let row = idx + 1;
            if obs.covariates.len() != p {
                return Err(Error::RowLength {
                    row,
                    expected: p + 2,
                    found: obs.covariates.len() + 2,
                });
            }
            if obs.status > m {
                return Err(Error::StatusOutOfRange {
                    row,
                    status: obs.status as i64,
                    m,
                });
            }
            let max = if obs.status == 0 { t_max } else { t_max + 1 };
            if obs.time < 1 || obs.time > max {
                return Err(Error::TimeOutOfRange {
                    row,
                    time: obs.time as i64,
                    max,
                });
            }
            if obs.covariates.iter().any(|x| !x.is_finite()) {
                return Err(Error::MalformedCell {
                    row,
                    column: "covariate".into(),
                    value: format!("{:?}", obs.covariates),
                });
            }
        }
        Ok(Self {
            observations,
            m,
            p,
            t_max,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// Number of periods individual `i` contributes to the likelihood:
    /// `t_i` itself, capped at `t_max` for records beyond the horizon.
    #[inline]
    pub fn periods(&self, i: usize) -> usize {
        self.observations[i].time.min(self.t_max)
    }

    /// 0-based cause of an event observed within the horizon.
    #[inline]
    pub fn event_risk(&self, i: usize) -> Option<usize> {
        let o = &self.observations[i];
        (o.status > 0 && o.time <= self.t_max).then(|| o.status - 1)
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.observations[i].covariates
    }

    /// Same observations re-validated under another horizon.
    pub fn with_horizon(&self, horizon: Horizon) -> Result<Self> {
        Self::new(self.observations.clone(), self.m, horizon)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["time".to_string(), "status".to_string()];
        header.extend((1..=self.p).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for o in &self.observations {
            let mut rec = vec![o.time.to_string(), o.status.to_string()];
            rec.extend(o.covariates.iter().map(|x| format!("{x}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn parse_int(cell: &str, row: usize, column: &str) -> Result<i64> {
    cell.trim().parse::<i64>().map_err(|_| Error::MalformedCell {
        row,
        column: column.to_string(),
        value: cell.to_string(),
    })
}

/// Read a dataset from CSV text. Rows are numbered from 1 after the header.
pub fn parse_dataset<R: Read>(source: R, m: usize, horizon: Horizon) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyData);
    }
    if headers.get(0) != Some("time") || headers.get(1) != Some("status") {
        return Err(Error::Header(format!(
            "expected `time,status,x1,…`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (j, name) in headers.iter().enumerate().skip(2) {
        let expected = format!("x{}", j - 1);
        if name != expected {
            return Err(Error::Header(format!(
                "unknown column `{name}` (expected `{expected}`)"
            )));
        }
    }
    let width = headers.len();

    let mut observations = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        if record.len() != width {
            return Err(Error::RowLength {
                row,
                expected: width,
                found: record.len(),
            });
        }
        let time = parse_int(&record[0], row, "time")?;
        let status = parse_int(&record[1], row, "status")?;
        if status < 0 || status as usize > m {
            return Err(Error::StatusOutOfRange { row, status, m });
        }
        if time < 1 {
            return Err(Error::TimeOutOfRange {
                row,
                time,
                max: match horizon {
                    Horizon::Fixed(t) => t + usize::from(status > 0),
                    Horizon::Auto => usize::MAX,
                },
            });
        }
        let covariates = (2..width)
            .map(|j| {
                let cell = &record[j];
                cell.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::MalformedCell {
                        row,
                        column: headers[j].to_string(),
                        value: cell.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        observations.push(Observation::new(time as usize, status as usize, covariates));
    }
    Dataset::new(observations, m, horizon)
}

/// Admissible change-point locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllowedSet {
    allowed: Vec<usize>,
    mask: Vec<bool>,
    event_counts: Vec<usize>,
}

impl AllowedSet {
    /// Build from an explicit list of locations (must lie in `2..t_max`).
    pub fn from_times(t_max: usize, times: &[usize]) -> Result<Self> {
        let mut mask = vec![false; t_max + 1];
        for &t in times {
            if t < 2 || t >= t_max {
                return Err(Error::State(format!(
                    "change-point location {t} outside 2..{t_max}"
                )));
            }
            mask[t] = true;
        }
        let allowed = (1..=t_max).filter(|&t| mask[t]).collect();
        Ok(Self {
            allowed,
            mask,
            event_counts: vec![0; t_max + 1],
        })
    }

    /// Sorted admissible times.
    pub fn times(&self) -> &[usize] {
        &self.allowed
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    #[inline]
    pub fn contains(&self, t: usize) -> bool {
        self.mask.get(t).copied().unwrap_or(false)
    }

    /// Uncensored events at time `t` (index 0 unused).
    pub fn event_counts(&self) -> &[usize] {
        &self.event_counts
    }

    pub fn t_max(&self) -> usize {
        self.mask.len() - 1
    }
}

/// Locations where a change point may occur.
///
/// Boundaries `1` and `t_max` are never admissible. A time `t` is also
/// excluded when neither `t` nor `t-1` carries an observed event, or when `t`
/// has no event while both neighbours do.
pub fn compute_allowed_set(dataset: &Dataset) -> AllowedSet {
    let t_max = dataset.t_max();
    let mut events = vec![0usize; t_max + 2];
    for i in 0..dataset.n() {
        if dataset.event_risk(i).is_some() {
            events[dataset.observations()[i].time] += 1;
        }
    }
    let mut mask = vec![false; t_max + 1];
    for t in 2..t_max {
        let here = events[t] > 0;
        let before = events[t - 1] > 0;
        let after = events[t + 1] > 0;
        let both_empty = !here && !before;
        let isolated_gap = !here && before && after;
        mask[t] = !(both_empty || isolated_gap);
    }
    events.truncate(t_max + 1);
    AllowedSet {
        allowed: (1..=t_max).filter(|&t| mask[t]).collect(),
        mask,
        event_counts: events,
    }
}
