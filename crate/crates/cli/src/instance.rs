//! Instance files: a JSON tree naming the loss, the penalty, the matrix
//! (inline rows or a headerless CSV file) and either `lmbd` or a path spec.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use l0solve::path::PathSpec;
use l0solve::{NativeLoss, NativePenalty, PenaltyArgs, ProblemData};
use ndarray::Array2;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Rows(Vec<Vec<f64>>),
    File(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum VectorSource {
    Inline(Vec<f64>),
    File(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub name: String,
    pub y: VectorSource,
    pub eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    pub name: String,
    #[serde(rename = "M", alias = "m")]
    pub big_m: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub x_lb: Option<f64>,
    pub x_ub: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFields {
    pub lmbd_ratio_max: Option<f64>,
    pub lmbd_ratio_min: Option<f64>,
    pub lmbd_num: Option<usize>,
    pub lmbd_grid: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub matrix: MatrixSource,
    pub loss: LossSpec,
    pub penalty: PenaltySpec,
    pub lmbd: Option<f64>,
    pub path: Option<PathFields>,
}

/// A parsed instance with its data assembled.
pub struct Instance {
    pub data: Arc<ProblemData>,
    pub lmbd: Option<f64>,
    pub path: PathFields,
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed row {}", path.display(), r + 1))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| {
                    anyhow!("{}: row {}, column {}: '{field}' is not a number", path.display(), r + 1, c + 1)
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn rows_to_matrix(rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let m = rows.len();
    if m == 0 {
        bail!("matrix has no rows");
    }
    let n = rows[0].len();
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
        bail!("matrix row {} has {} entries, expected {n}", r + 1, row.len());
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((m, n), flat)?)
}

fn read_vector(source: VectorSource, base: &Path) -> Result<Vec<f64>> {
    match source {
        VectorSource::Inline(v) => Ok(v),
        VectorSource::File(f) => {
            let rows = read_csv(&resolve(base, &f))?;
            // a single column or a single row
            if rows.iter().all(|r| r.len() == 1) {
                Ok(rows.into_iter().flatten().collect())
            } else if rows.len() == 1 {
                Ok(rows.into_iter().next().unwrap())
            } else {
                bail!("{f}: expected a single row or a single column of numbers")
            }
        }
    }
}

impl Instance {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let file: InstanceFile =
            serde_json::from_str(&text).with_context(|| format!("{}: malformed instance", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, base)
    }

    pub fn from_file(file: InstanceFile, base: &Path) -> Result<Self> {
        let rows = match file.matrix {
            MatrixSource::Rows(rows) => rows,
            MatrixSource::File(f) => read_csv(&resolve(base, &f))?,
        };
        let a = rows_to_matrix(rows)?;
        let y = read_vector(file.loss.y, base)?;
        let loss = NativeLoss::from_name(&file.loss.name, y, file.loss.eps)?;
        let p = &file.penalty;
        let args = PenaltyArgs {
            m: p.big_m,
            alpha: p.alpha,
            beta: p.beta,
            x_lb: p.x_lb,
            x_ub: p.x_ub,
        };
        let penalty = NativePenalty::from_name(&p.name, &args)?;
        let data = ProblemData::new(a, Arc::new(loss), Arc::new(penalty))?;
        Ok(Self {
            data: Arc::new(data),
            lmbd: file.lmbd,
            path: file.path.unwrap_or_default(),
        })
    }

    /// Path spec from the instance, with command-line overrides applied.
    pub fn path_spec(&self, ratio_min: Option<f64>, num: Option<usize>, ratio_max: Option<f64>) -> PathSpec {
        let d = PathSpec::default();
        PathSpec {
            lmbd_ratio_max: ratio_max.or(self.path.lmbd_ratio_max).unwrap_or(d.lmbd_ratio_max),
            lmbd_ratio_min: ratio_min.or(self.path.lmbd_ratio_min).unwrap_or(d.lmbd_ratio_min),
            lmbd_num: num.or(self.path.lmbd_num).unwrap_or(d.lmbd_num),
            explicit_grid: self.path.lmbd_grid.clone(),
        }
    }
}
