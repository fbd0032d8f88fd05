//! Embedded time-series store.
//!
//! On disk a store is a directory holding `metrics.log`: a header line
//! followed by one JSON object per point,
//!
//! ```text
//! {"format":"ptune-metrics","version":1}
//! {"series":"epoch.duration_s","tags":{"job":"a","trial":"3"},"t":12.5,"value":118.2}
//! ```
//!
//! Appends go to an in-memory index and a pending buffer; `flush` appends
//! the buffer to the log. `compact` rewrites the log in sorted order. A
//! point is identified by `(series, tags, t)`: re-appending an identical
//! point is a no-op, appending a different value under the same key fails.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ordered_float::OrderedFloat;
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LOG_FILE: &str = "metrics.log";
const FORMAT: &str = "ptune-metrics";
const VERSION: u32 = 1;

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub series: String,
    #[serde(default)]
    pub tags: Tags,
    pub t: f64,
    pub value: f64,
}

impl SeriesPoint {
    pub fn new(series: impl Into<String>, tags: Tags, t: f64, value: f64) -> Self {
        Self {
            series: series.into(),
            tags,
            t,
            value,
        }
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(String::as_str)
    }
}

/// Builds a tag map from pairs.
pub fn tags<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Tags {
    pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect()
}

/// Series names are dot-separated words of `[a-z0-9_-]`.
pub fn check_series_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name.split('.').all(|part| {
            !part.is_empty()
                && part
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        });
    if ok {
        Ok(())
    } else {
        Err(Error::MalformedSeries(name.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

type SeriesIndex = BTreeMap<(OrderedFloat<f64>, Tags), f64>;

#[derive(Debug)]
pub struct MetricStore {
    dir: Option<PathBuf>,
    index: RwLock<BTreeMap<String, SeriesIndex>>,
    pending: Mutex<Vec<SeriesPoint>>,
}

impl MetricStore {
    /// A store that is never written to disk.
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            index: RwLock::new(BTreeMap::new()),
            pending: Mutex::new(Vec::new()),
        }
    }

    /// Opens or creates the store in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let store = Self {
            dir: Some(dir.clone()),
            index: RwLock::new(BTreeMap::new()),
            pending: Mutex::new(Vec::new()),
        };
        let path = dir.join(LOG_FILE);
        if path.exists() {
            store.replay(&path)?;
        }
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn replay(&self, path: &Path) -> Result<()> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let context = path.display().to_string();
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| Error::io(path, e))?,
            None => return Ok(()),
        };
        let header: Header = serde_json::from_str(&header).map_err(|e| Error::parse(&context, e))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(Error::parse(&context, format!("unsupported log {} v{}", header.format, header.version)));
        }
        let mut index = self.index.write();
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let p: SeriesPoint =
                serde_json::from_str(&line).map_err(|e| Error::parse(&context, format!("line {}: {e}", n + 2)))?;
            insert(&mut index, p)?;
        }
        Ok(())
    }

    pub fn append(&self, point: SeriesPoint) -> Result<()> {
        self.append_batch(vec![point])
    }

    /// Appends points; the batch is validated as a whole before any is
    /// stored.
    pub fn append_batch(&self, points: Vec<SeriesPoint>) -> Result<()> {
        for p in &points {
            check_series_name(&p.series)?;
            if !p.t.is_finite() {
                return Err(Error::InvalidParameter(format!("{}: timestamp must be finite", p.series)));
            }
        }
        let mut index = self.index.write();
        let mut fresh = Vec::with_capacity(points.len());
        {
            let mut staged: BTreeMap<(String, OrderedFloat<f64>, Tags), f64> = BTreeMap::new();
            for p in &points {
                let existing = index
                    .get(&p.series)
                    .and_then(|s| s.get(&(OrderedFloat(p.t), p.tags.clone())))
                    .copied()
                    .or_else(|| staged.get(&(p.series.clone(), OrderedFloat(p.t), p.tags.clone())).copied());
                match existing {
                    Some(v) if v.to_bits() == p.value.to_bits() => {}
                    Some(_) => {
                        return Err(Error::Conflict {
                            series: p.series.clone(),
                            t: p.t,
                        })
                    }
                    None => {
                        staged.insert((p.series.clone(), OrderedFloat(p.t), p.tags.clone()), p.value);
                        fresh.push(p.clone());
                    }
                }
            }
        }
        for p in &fresh {
            insert(&mut index, p.clone())?;
        }
        if self.dir.is_some() {
            self.pending.lock().extend(fresh);
        }
        Ok(())
    }

    /// Points of `series` whose tags include `filter`, with `t0 <= t <= t1`,
    /// ascending by time (then tags).
    pub fn query_range(&self, series: &str, filter: &Tags, t0: f64, t1: f64) -> Result<Vec<SeriesPoint>> {
        if t0 > t1 {
            return Err(Error::InvalidRange { t0, t1 });
        }
        let index = self.index.read();
        let Some(points) = index.get(series) else {
            return Ok(Vec::new());
        };
        Ok(points
            .range((OrderedFloat(t0), Tags::new())..)
            .take_while(|((t, _), _)| t.0 <= t1)
            .filter(|((_, tags), _)| filter.iter().all(|(k, v)| tags.get(k) == Some(v)))
            .map(|((t, tags), &value)| SeriesPoint {
                series: series.to_string(),
                tags: tags.clone(),
                t: t.0,
                value,
            })
            .collect())
    }

    /// Every point of `series` matching `filter`.
    pub fn query(&self, series: &str, filter: &Tags) -> Result<Vec<SeriesPoint>> {
        self.query_range(series, filter, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn series(&self) -> Vec<String> {
        self.index.read().keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.index.read().values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn log_path(&self) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(LOG_FILE))
    }

    /// Writes pending points to the log.
    pub fn flush(&self) -> Result<()> {
        let Some(path) = self.log_path() else {
            return Ok(());
        };
        let mut pending = self.pending.lock();
        if pending.is_empty() {
            return Ok(());
        }
        let new_file = !path.exists();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(&path, e);
        if new_file {
            write_header(&mut w).map_err(io)?;
        }
        for p in pending.iter() {
            serde_json::to_writer(&mut w, p).map_err(|e| Error::parse(path.display().to_string(), e))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)?;
        w.get_ref().sync_data().map_err(io)?;
        pending.clear();
        Ok(())
    }

    /// Rewrites the log with every point once, in sorted order.
    pub fn compact(&self) -> Result<()> {
        let Some(path) = self.log_path() else {
            return Ok(());
        };
        let index = self.index.read();
        let mut pending = self.pending.lock();
        let tmp = path.with_extension("log.tmp");
        {
            let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            let io = |e| Error::io(&tmp, e);
            write_header(&mut w).map_err(io)?;
            for (series, points) in index.iter() {
                for ((t, tags), &value) in points {
                    let p = SeriesPoint {
                        series: series.clone(),
                        tags: tags.clone(),
                        t: t.0,
                        value,
                    };
                    serde_json::to_writer(&mut w, &p).map_err(|e| Error::parse(tmp.display().to_string(), e))?;
                    w.write_all(b"\n").map_err(io)?;
                }
            }
            w.flush().map_err(io)?;
            w.get_ref().sync_data().map_err(io)?;
        }
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        pending.clear();
        Ok(())
    }

    /// Removes every point, on disk too.
    pub fn clear(&self) -> Result<()> {
        self.index.write().clear();
        self.pending.lock().clear();
        if let Some(path) = self.log_path() {
            if path.exists() {
                std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    }
}

impl Drop for MetricStore {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

fn write_header(w: &mut impl Write) -> std::io::Result<()> {
    let header = Header {
        format: FORMAT.to_string(),
        version: VERSION,
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")
}

fn insert(index: &mut BTreeMap<String, SeriesIndex>, p: SeriesPoint) -> Result<()> {
    let slot = index.entry(p.series.clone()).or_default();
    match slot.get(&(OrderedFloat(p.t), p.tags.clone())) {
        Some(v) if v.to_bits() == p.value.to_bits() => Ok(()),
        Some(_) => Err(Error::Conflict { series: p.series, t: p.t }),
        None => {
            slot.insert((OrderedFloat(p.t), p.tags), p.value);
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(series: &str, trial: &str, t: f64, value: f64) -> SeriesPoint {
        SeriesPoint::new(series, tags([("trial", trial)]), t, value)
    }

    #[test]
    fn roundtrip_and_idempotence() {
        let store = MetricStore::in_memory();
        assert!(store.query_range("x", &Tags::new(), 0.0, 1.0).unwrap().is_empty());
        store.append(point("epoch.duration_s", "1", 5.0, 2.5)).unwrap();
        store.append(point("epoch.duration_s", "1", 5.0, 2.5)).unwrap();
        assert_eq!(store.len(), 1);
        let got = store.query_range("epoch.duration_s", &Tags::new(), 0.0, 10.0).unwrap();
        assert_eq!(got, vec![point("epoch.duration_s", "1", 5.0, 2.5)]);
        assert!(matches!(
            store.append(point("epoch.duration_s", "1", 5.0, 3.0)),
            Err(Error::Conflict { .. })
        ));
    }

    #[test]
    fn names_and_ranges() {
        let store = MetricStore::in_memory();
        for bad in ["", "Epoch", "a..b", "a b", ".a", "a."] {
            assert!(matches!(store.append(point(bad, "1", 0.0, 0.0)), Err(Error::MalformedSeries(_))), "{bad}");
        }
        assert!(store.append(point("a", "1", f64::NAN, 0.0)).is_err());
        assert!(matches!(
            store.query_range("a", &Tags::new(), 2.0, 1.0),
            Err(Error::InvalidRange { .. })
        ));
    }

    #[test]
    fn filter_by_tag() {
        let store = MetricStore::in_memory();
        store
            .append_batch(vec![point("s", "1", 1.0, 1.0), point("s", "2", 1.0, 2.0), point("s", "1", 2.0, 3.0)])
            .unwrap();
        let only = store.query("s", &tags([("trial", "1")])).unwrap();
        assert_eq!(only.iter().map(|p| p.value).collect::<Vec<_>>(), vec![1.0, 3.0]);
    }

    #[test]
    fn batch_conflict_stores_nothing() {
        let store = MetricStore::in_memory();
        let err = store.append_batch(vec![point("s", "1", 1.0, 1.0), point("s", "1", 1.0, 2.0)]);
        assert!(err.is_err());
        assert!(store.is_empty());
    }

    #[test]
    fn persistence_and_compaction() {
        let dir = tempfile::tempdir().unwrap();
        let values = [0.1 + 0.2, f64::MIN_POSITIVE, -1e300, 1.0 / 3.0];
        {
            let store = MetricStore::open(dir.path()).unwrap();
            for (i, &v) in values.iter().enumerate() {
                store.append(point("s", "1", i as f64, v)).unwrap();
            }
            store.flush().unwrap();
            store.append(point("s", "1", 0.0, values[0])).unwrap();
            store.append(point("t", "9", 0.5, 7.0)).unwrap();
        }
        let store = MetricStore::open(dir.path()).unwrap();
        let got = store.query("s", &Tags::new()).unwrap();
        assert_eq!(got.len(), 4);
        for (p, &v) in got.iter().zip(&values) {
            assert_eq!(p.value.to_bits(), v.to_bits());
        }
        assert_eq!(store.series(), vec!["s".to_string(), "t".to_string()]);
        store.compact().unwrap();
        drop(store);
        let again = MetricStore::open(dir.path()).unwrap();
        assert_eq!(again.len(), 5);
        let text = std::fs::read_to_string(dir.path().join(LOG_FILE)).unwrap();
        assert_eq!(text.lines().count(), 6);
    }
}
