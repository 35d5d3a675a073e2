//! Feature encoders that keep the missing pattern visible to a linear model.

use std::fmt;

use crate::data::{Dataset, GroupId, Sample};
use crate::error::{Error, Result};
use crate::impute::Imputer;

/// Provenance of an encoded column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    /// Feature `j` after imputation.
    Original(usize),
    /// Missingness indicator `m_j`.
    Indicator(usize),
    /// `m_missing * (1 - m_feature) * x_feature`.
    Cross { feature: usize, missing: usize },
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Original(j) => write!(f, "x[{j}]"),
            Column::Indicator(j) => write!(f, "m[{j}]"),
            Column::Cross { feature, missing } => write!(f, "m[{missing}]*x[{feature}]"),
        }
    }
}

/// Dense row-major design matrix with labels and groups carried through.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub columns: Vec<Column>,
    data: Vec<f64>,
    pub labels: Vec<u8>,
    pub groups: Vec<GroupId>,
}

impl EncodedDataset {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<f64>>, labels: Vec<u8>, groups: Vec<GroupId>) -> Result<Self> {
        let width = columns.len();
        if rows.len() != labels.len() || labels.len() != groups.len() {
            return Err(Error::Dimension { expected: labels.len(), found: rows.len() });
        }
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::Dimension { expected: width, found: r.len() });
            }
            data.extend(r);
        }
        Ok(Self { columns, data, labels, groups })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            columns: self.columns.clone(),
            data,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
        }
    }

    /// Column positions `[start, end)` as a new dataset.
    pub fn take_columns(&self, end: usize) -> Self {
        let rows = self.rows().map(|r| r[..end].to_vec()).collect();
        Self::new(self.columns[..end].to_vec(), rows, self.labels.clone(), self.groups.clone()).expect("same shape")
    }

    pub fn check_finite(&self) -> Result<()> {
        let w = self.n_cols().max(1);
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::NonFinite { row: p / w, column: p % w }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    /// Imputed originals only (impute-then-classify).
    Plain,
    /// Imputed originals followed by the `d` indicators.
    Indicators,
    /// Indicators plus the cross terms `m_k (1 - m_j) x_j`.
    Affine,
}

/// An encoder whose column set is fixed from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    kind: EncoderKind,
    dimension: usize,
    /// Features with at least one missing training value (affine only).
    cross_sources: Vec<usize>,
}

impl Encoder {
    pub fn fit(kind: EncoderKind, train: &Dataset) -> Self {
        let cross_sources = match kind {
            EncoderKind::Affine => {
                train.missing_per_feature().iter().enumerate().filter(|(_, &c)| c > 0).map(|(j, _)| j).collect()
            }
            _ => Vec::new(),
        };
        Self { kind, dimension: train.dimension(), cross_sources }
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn columns(&self) -> Vec<Column> {
        let d = self.dimension;
        let mut cols: Vec<Column> = (0..d).map(Column::Original).collect();
        if self.kind != EncoderKind::Plain {
            cols.extend((0..d).map(Column::Indicator));
        }
        for &k in &self.cross_sources {
            cols.extend((0..d).filter(|&j| j != k).map(|j| Column::Cross { feature: j, missing: k }));
        }
        cols
    }

    /// Encodes one row given its raw features and their imputed values.
    pub fn encode_row(&self, raw: &[Option<f64>], filled: &[f64]) -> Vec<f64> {
        let d = self.dimension;
        let m: Vec<f64> = raw.iter().map(|v| if v.is_none() { 1.0 } else { 0.0 }).collect();
        let mut out = filled.to_vec();
        if self.kind != EncoderKind::Plain {
            out.extend_from_slice(&m);
        }
        for &k in &self.cross_sources {
            out.extend((0..d).filter(|&j| j != k).map(|j| m[k] * (1.0 - m[j]) * filled[j]));
        }
        out
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if ds.dimension() != self.dimension {
            return Err(Error::Dimension { expected: self.dimension, found: ds.dimension() });
        }
        Ok(())
    }

    /// Encodes with zero imputation.
    pub fn encode(&self, ds: &Dataset) -> Result<EncodedDataset> {
        self.check(ds)?;
        let rows = ds
            .samples()
            .iter()
            .map(|s| {
                let filled: Vec<f64> = s.features.iter().map(|v| v.unwrap_or(0.0)).collect();
                self.encode_row(&s.features, &filled)
            })
            .collect();
        EncodedDataset::new(self.columns(), rows, ds.labels(), ds.groups())
    }

    /// Encodes with originals filled by `imputer`; indicators still come from
    /// the raw mask.
    pub fn encode_imputed(&self, ds: &Dataset, imputer: &Imputer) -> Result<EncodedDataset> {
        self.check(ds)?;
        let filled = imputer.transform_rows(ds)?;
        let rows = ds.samples().iter().zip(&filled).map(|(s, f)| self.encode_row(&s.features, f)).collect();
        EncodedDataset::new(self.columns(), rows, ds.labels(), ds.groups())
    }

    /// Single sample through `imputer` (or zero imputation).
    pub fn encode_sample(&self, sample: &Sample, imputer: Option<&Imputer>, names: &[String]) -> Result<Vec<f64>> {
        if sample.features.len() != self.dimension {
            return Err(Error::Dimension { expected: self.dimension, found: sample.features.len() });
        }
        let filled = match imputer {
            Some(imp) => {
                let one = Dataset::new(names.to_vec(), vec![sample.clone()])?;
                imp.transform_rows(&one)?.remove(0)
            }
            None => sample.features.iter().map(|v| v.unwrap_or(0.0)).collect(),
        };
        Ok(self.encode_row(&sample.features, &filled))
    }
}

/// Zero-imputed originals followed by the `d` missingness indicators.
pub fn encode_indicators(ds: &Dataset) -> EncodedDataset {
    Encoder::fit(EncoderKind::Indicators, ds).encode(ds).expect("dimension matches")
}

/// Indicators plus cross terms for every feature missing somewhere in `ds`.
pub fn encode_affine(ds: &Dataset) -> EncodedDataset {
    Encoder::fit(EncoderKind::Affine, ds).encode(ds).expect("dimension matches")
}

/// Zero-imputed originals only.
pub fn encode_zero(ds: &Dataset) -> EncodedDataset {
    Encoder::fit(EncoderKind::Plain, ds).encode(ds).expect("dimension matches")
}
