//! Dataset representation, CSV ingestion, scaling, splitting and the fair
//! uniform resampler.
//!
//! A [`Dataset`] is an ordered list of [`Sample`]s. Missing feature values are
//! `None`; the [`MissingMask`] of a sample is derived from them and is therefore
//! always consistent with the features.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Sensitive group identifier.
pub type GroupId = u32;

/// One row: features with explicit missingness, sensitive group, binary label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<Option<f64>>,
    pub sensitive: GroupId,
    pub label: u8,
}

impl Sample {
    pub fn new(features: Vec<Option<f64>>, sensitive: GroupId, label: u8) -> Self {
        Self { features, sensitive, label }
    }

    pub fn mask(&self) -> MissingMask {
        MissingMask(self.features.iter().map(Option::is_none).collect())
    }

    pub fn is_complete(&self) -> bool {
        self.features.iter().all(Option::is_some)
    }
}

/// Per-feature missingness indicators: bit `j` is set iff feature `j` is NA.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MissingMask(pub Vec<bool>);

impl MissingMask {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_missing(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn count_missing(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn all_missing(d: usize) -> Self {
        Self(vec![true; d])
    }
}

/// A `(sensitive, label)` cell key.
pub type Cell = (GroupId, u8);

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    feature_names: Vec<String>,
    group_set: Vec<GroupId>,
    sensitive_name: String,
    label_name: String,
}

impl Dataset {
    /// Builds a dataset, validating dimensions and labels. The group set is
    /// recomputed from the samples.
    pub fn new(feature_names: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        let d = feature_names.len();
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != d {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {d} features, found {}", s.features.len()),
                });
            }
            if s.label > 1 {
                return Err(Error::Schema(format!("row {}: label {} is not binary", i + 1, s.label)));
            }
            if let Some(j) = s.features.iter().position(|v| matches!(v, Some(x) if !x.is_finite())) {
                return Err(Error::NonFinite { row: i, column: j });
            }
        }
        let group_set = samples.iter().map(|s| s.sensitive).collect::<BTreeSet<_>>().into_iter().collect();
        Ok(Self {
            samples,
            feature_names,
            group_set,
            sensitive_name: "s".to_string(),
            label_name: "y".to_string(),
        })
    }

    pub fn with_column_names(mut self, sensitive: impl Into<String>, label: impl Into<String>) -> Self {
        self.sensitive_name = sensitive.into();
        self.label_name = label.into();
        self
    }

    /// Same names, different rows. Used by every row-selecting transform.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Self {
        let group_set = samples.iter().map(|s| s.sensitive).collect::<BTreeSet<_>>().into_iter().collect();
        Self {
            samples,
            feature_names: self.feature_names.clone(),
            group_set,
            sensitive_name: self.sensitive_name.clone(),
            label_name: self.label_name.clone(),
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        self.with_samples(indices.iter().map(|&i| self.samples[i].clone()).collect())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn group_set(&self) -> &[GroupId] {
        &self.group_set
    }

    pub fn sensitive_name(&self) -> &str {
        &self.sensitive_name
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn groups(&self) -> Vec<GroupId> {
        self.samples.iter().map(|s| s.sensitive).collect()
    }

    pub fn masks(&self) -> Vec<MissingMask> {
        self.samples.iter().map(Sample::mask).collect()
    }

    pub fn count_missing(&self) -> usize {
        self.samples.iter().map(|s| s.features.iter().filter(|v| v.is_none()).count()).sum()
    }

    /// Number of NA cells per feature.
    pub fn missing_per_feature(&self) -> Vec<usize> {
        let mut out = vec![0; self.dimension()];
        for s in &self.samples {
            for (j, v) in s.features.iter().enumerate() {
                if v.is_none() {
                    out[j] += 1;
                }
            }
        }
        out
    }

    /// Row indices per `(s, y)` cell, in ascending cell order.
    pub fn cells(&self) -> BTreeMap<Cell, Vec<usize>> {
        let mut cells: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            cells.entry((s.sensitive, s.label)).or_default().push(i);
        }
        cells
    }

    /// Cell sizes over the full `group_set x {0, 1}` grid, including empty cells.
    pub fn cell_counts(&self) -> BTreeMap<Cell, usize> {
        let mut counts: BTreeMap<Cell, usize> =
            self.group_set.iter().flat_map(|&g| [((g, 0), 0), ((g, 1), 0)]).collect();
        for s in &self.samples {
            *counts.entry((s.sensitive, s.label)).or_default() += 1;
        }
        counts
    }

    fn require_nonempty_cells(&self) -> Result<()> {
        match self.cell_counts().into_iter().find(|&(_, n)| n == 0) {
            Some(((g, y), _)) => Err(Error::cell(g, y, "is empty")),
            None => Ok(()),
        }
    }
}

/// Role of a CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Feature,
    Sensitive,
    Label,
    Ignore,
}

/// Column roles plus an optional sensitive value vocabulary.
///
/// Text form, one `name = role` per line, `#` comments. A `@groups = a, b, ...`
/// line maps sensitive tokens to group ids by position; without it, sensitive
/// values must be non-negative integers.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    pub roles: Vec<(String, ColumnRole)>,
    pub groups: Option<Vec<String>>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut schema = Schema::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config { line: n + 1, message: format!("expected `name = role`, got `{line}`") })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "@groups" {
                schema.groups = Some(value.split(',').map(|t| t.trim().to_string()).collect());
                continue;
            }
            let role = match value {
                "feature" => ColumnRole::Feature,
                "sensitive" => ColumnRole::Sensitive,
                "label" => ColumnRole::Label,
                "ignore" => ColumnRole::Ignore,
                other => {
                    return Err(Error::Config { line: n + 1, message: format!("unknown column role `{other}`") })
                }
            };
            schema.roles.push((key.to_string(), role));
        }
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    fn role_of(&self, column: &str) -> Option<ColumnRole> {
        self.roles.iter().find(|(c, _)| c == column).map(|&(_, r)| r)
    }

    fn group_id(&self, token: &str) -> Option<GroupId> {
        match &self.groups {
            Some(names) => names.iter().position(|n| n == token).map(|p| p as GroupId),
            None => token.parse::<GroupId>().ok(),
        }
    }
}

fn is_na(token: &str) -> bool {
    token.is_empty() || token == "NA"
}

/// Loads a CSV with a header row. Cells equal to `NA` or empty are missing.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(file, schema)
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 0, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();

    let mut features = Vec::new();
    let mut sensitive = None;
    let mut label = None;
    for (c, name) in header.iter().enumerate() {
        match schema.role_of(name) {
            Some(ColumnRole::Feature) => features.push(c),
            Some(ColumnRole::Sensitive) if sensitive.is_none() => sensitive = Some(c),
            Some(ColumnRole::Label) if label.is_none() => label = Some(c),
            Some(ColumnRole::Sensitive) => return Err(Error::Schema("more than one sensitive column".into())),
            Some(ColumnRole::Label) => return Err(Error::Schema("more than one label column".into())),
            Some(ColumnRole::Ignore) => {}
            None => return Err(Error::Schema(format!("column `{name}` has no role in the schema"))),
        }
    }
    for (name, _) in &schema.roles {
        if !header.contains(name) {
            return Err(Error::Schema(format!("schema column `{name}` not present in CSV header")));
        }
    }
    let sensitive = sensitive.ok_or_else(|| Error::Schema("no sensitive column".into()))?;
    let label = label.ok_or_else(|| Error::Schema("no label column".into()))?;
    if features.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Header is row 1 of the file; data rows are numbered from 2.
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let y = match &record[label] {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::Schema(format!("row {row}: label `{other}` is not 0 or 1"))),
        };
        let s = schema
            .group_id(&record[sensitive])
            .ok_or_else(|| Error::Schema(format!("row {row}: unknown sensitive value `{}`", &record[sensitive])))?;
        let x = features
            .iter()
            .map(|&c| {
                let token = &record[c];
                if is_na(token) {
                    return Ok(None);
                }
                token
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| Error::Parse { row, message: format!("column `{}`: `{token}` is not numeric or NA", header[c]) })
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(Sample::new(x, s, y));
    }

    let names = features.iter().map(|&c| header[c].clone()).collect();
    Ok(Dataset::new(names, samples)?.with_column_names(header[sensitive].clone(), header[label].clone()))
}

/// Writes a dataset as CSV using `NA` for missing cells.
pub fn write_csv<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let to_err = |e: csv::Error| Error::Parse { row: 0, message: e.to_string() };
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ds.feature_names().to_vec();
    header.push(ds.sensitive_name().to_string());
    header.push(ds.label_name().to_string());
    w.write_record(&header).map_err(to_err)?;
    for s in ds.samples() {
        let mut rec: Vec<String> =
            s.features.iter().map(|v| v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))).collect();
        rec.push(s.sensitive.to_string());
        rec.push(s.label.to_string());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<csv writer>".into(), source })
}

/// Per-feature min-max statistics over observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaler {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        let d = ds.dimension();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for s in ds.samples() {
            for (j, v) in s.features.iter().enumerate() {
                if let Some(x) = *v {
                    min[j] = min[j].min(x);
                    max[j] = max[j].max(x);
                }
            }
        }
        if let Some(j) = (0..d).find(|&j| min[j] > max[j]) {
            return Err(Error::EmptyFeature(ds.feature_names()[j].clone()));
        }
        Ok(Self { min, max })
    }

    /// Maps observed values to `(x - min) / (max - min)`; constant features go to 0.
    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let samples = ds
            .samples()
            .iter()
            .map(|s| {
                let features = s
                    .features
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.map(|x| {
                            let range = self.max[j] - self.min[j];
                            if range > 0.0 {
                                (x - self.min[j]) / range
                            } else {
                                0.0
                            }
                        })
                    })
                    .collect();
                Sample::new(features, s.sensitive, s.label)
            })
            .collect();
        ds.with_samples(samples)
    }
}

pub fn scale_features(ds: &Dataset) -> Result<Dataset> {
    Ok(Scaler::fit(ds)?.apply(ds))
}

/// Stratified train/test split. Each `(s, y)` cell contributes a test share
/// within one sample of `test_fraction`, and at least one sample to each side.
pub fn split_train_test(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!("test fraction {test_fraction} not in (0, 1)")));
    }
    if ds.is_empty() {
        return Err(Error::EmptyData);
    }
    let cells = ds.cells();
    if let Some((&(g, y), _)) = cells.iter().find(|(_, idx)| idx.len() < 2) {
        return Err(Error::cell(g, y, "has fewer than 2 samples"));
    }

    // Largest-remainder apportionment of round(n * f) test rows across cells.
    let total = (ds.len() as f64 * test_fraction).round() as usize;
    let quotas: Vec<f64> = cells.values().map(|idx| idx.len() as f64 * test_fraction).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    let assigned: usize = take.iter().sum();
    for &c in order.iter().take(total.saturating_sub(assigned)) {
        take[c] += 1;
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, idx) in cells.values().enumerate() {
        let n_test = take[c].clamp(1, idx.len() - 1);
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut seeded(seed.wrapping_add(c as u64)));
        test.extend_from_slice(&shuffled[..n_test]);
        train.extend_from_slice(&shuffled[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select(&train), ds.select(&test)))
}

/// One round of fair uniform resampling: every `(s, y)` cell is redrawn
/// uniformly with replacement to its original size.
pub fn fair_resample(ds: &Dataset, seed: u64) -> Result<Dataset> {
    resample_indices(ds, seed).map(|idx| ds.select(&idx))
}

/// Row indices chosen by [`fair_resample`].
pub fn resample_indices(ds: &Dataset, seed: u64) -> Result<Vec<usize>> {
    if ds.is_empty() {
        return Err(Error::EmptyData);
    }
    ds.require_nonempty_cells()?;
    let mut out = Vec::with_capacity(ds.len());
    for (c, idx) in ds.cells().values().enumerate() {
        let mut rng = seeded(seed.wrapping_add(c as u64));
        out.extend((0..idx.len()).map(|_| idx[rng.random_range(0..idx.len())]));
    }
    Ok(out)
}

/// What [`balance`] equalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceKey {
    Label,
    Group,
}

/// Downsamples every class of `key` to the size of the smallest one.
pub fn balance(ds: &Dataset, key: BalanceKey, seed: u64) -> Result<Dataset> {
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in ds.samples().iter().enumerate() {
        let k = match key {
            BalanceKey::Label => s.label as u32,
            BalanceKey::Group => s.sensitive,
        };
        classes.entry(k).or_default().push(i);
    }
    let target = classes.values().map(Vec::len).min().ok_or(Error::EmptyData)?;
    let mut keep = Vec::new();
    for (c, idx) in classes.values().enumerate() {
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut seeded(seed.wrapping_add(c as u64)));
        keep.extend_from_slice(&shuffled[..target]);
    }
    keep.sort_unstable();
    Ok(ds.select(&keep))
}
