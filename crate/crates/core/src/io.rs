//! JSON channel files and stochastic matrix files.
//!
//! Channel file: `{"dim": d, "form": "kraus"|"choi"|"superop"|"affine", "data": ...}`
//! with complex entries as `[re, im]`; kraus data is a list of matrices, affine
//! data is `{"M": [[...]], "t": [...]}`. An optional `"constructor"` object records
//! the named family that produced the channel.

use std::fs;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{AffinePair, ChannelRep, ChoiMatrix, KrausSet, Superoperator};
use crate::classical::{StochasticFile, StochasticMatrix};
use crate::constructors::Constructor;
use crate::error::{QinvError, Result};
use crate::linalg::{c64, CMat, RMat};

/// Complex matrix as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodedMatrix(pub Vec<Vec<[f64; 2]>>);

impl EncodedMatrix {
    pub fn from_matrix(m: &CMat) -> Self {
        Self(
            m.row_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let rows = self.0.len();
        let cols = self.0.first().map_or(0, Vec::len);
        if rows == 0 || self.0.iter().any(|r| r.len() != cols) {
            return Err(QinvError::Format("matrix rows are empty or ragged".into()));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| {
            let [re, im] = self.0[i][j];
            c64(re, im)
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AffineData {
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
    t: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim: usize,
    pub form: String,
    pub data: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constructor: Option<Constructor>,
}

fn format_err(field: &str, e: impl std::fmt::Display) -> QinvError {
    QinvError::Format(format!("field \"{field}\": {e}"))
}

impl ChannelFile {
    pub fn from_rep(rep: &ChannelRep, constructor: Option<Constructor>) -> Self {
        let data = match rep {
            ChannelRep::Kraus(k) => {
                let ms: Vec<EncodedMatrix> = k.ops().iter().map(EncodedMatrix::from_matrix).collect();
                serde_json::to_value(ms)
            }
            ChannelRep::Superop(s) => serde_json::to_value(EncodedMatrix::from_matrix(s.matrix())),
            ChannelRep::Choi(c) => serde_json::to_value(EncodedMatrix::from_matrix(c.matrix())),
            ChannelRep::Affine(a) => serde_json::to_value(AffineData {
                m: a.m.row_iter().map(|r| r.iter().copied().collect()).collect(),
                t: a.t.iter().copied().collect(),
            }),
        }
        .expect("plain numeric data serializes");
        Self {
            dim: rep.dim(),
            form: rep.form_name().to_string(),
            data,
            constructor,
        }
    }

    pub fn to_rep(&self) -> Result<ChannelRep> {
        let d = self.dim;
        let square = |m: CMat, n: usize| -> Result<CMat> {
            if m.shape() != (n, n) {
                return Err(format_err("data", format!("expected {n}x{n} matrix, got {:?}", m.shape())));
            }
            Ok(m)
        };
        match self.form.as_str() {
            "kraus" => {
                let ms: Vec<EncodedMatrix> =
                    serde_json::from_value(self.data.clone()).map_err(|e| format_err("data", e))?;
                let ops = ms
                    .iter()
                    .map(|m| square(m.to_matrix()?, d))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ChannelRep::Kraus(KrausSet::new(ops)?))
            }
            "superop" | "choi" => {
                let m: EncodedMatrix =
                    serde_json::from_value(self.data.clone()).map_err(|e| format_err("data", e))?;
                let m = square(m.to_matrix()?, d * d)?;
                if self.form == "superop" {
                    Ok(ChannelRep::Superop(Superoperator::new(d, m)?))
                } else {
                    Ok(ChannelRep::Choi(ChoiMatrix::new(d, m)?))
                }
            }
            "affine" => {
                let a: AffineData =
                    serde_json::from_value(self.data.clone()).map_err(|e| format_err("data", e))?;
                let n = d * d - 1;
                if a.m.len() != n || a.m.iter().any(|r| r.len() != n) {
                    return Err(format_err("data.M", format!("expected {n}x{n} array")));
                }
                let m = RMat::from_fn(n, n, |i, j| a.m[i][j]);
                Ok(ChannelRep::Affine(AffinePair::new(d, m, DVector::from_vec(a.t))?))
            }
            other => Err(format_err(
                "form",
                format!("unknown form \"{other}\", expected kraus, choi, superop or affine"),
            )),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QinvError::Format(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel file serializes")
    }
}

pub fn read_channel(path: &Path) -> Result<ChannelFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| QinvError::Format(format!("{}: {e}", path.display())))?;
    ChannelFile::from_json(&text).map_err(|e| QinvError::Format(format!("{}: {e}", path.display())))
}

pub fn write_channel(path: &Path, file: &ChannelFile) -> Result<()> {
    fs::write(path, file.to_json() + "\n")
        .map_err(|e| QinvError::Format(format!("{}: {e}", path.display())))
}

/// Parses a stochastic matrix from JSON (`{"dim", "mat"}`) or headerless CSV rows.
pub fn parse_stochastic(text: &str) -> Result<StochasticMatrix> {
    if text.trim_start().starts_with('{') {
        let f: StochasticFile =
            serde_json::from_str(text).map_err(|e| QinvError::Format(e.to_string()))?;
        return f.to_matrix();
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| QinvError::Format(format!("csv line {}: {e}", line + 1)))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                s.parse::<f64>().map_err(|e| {
                    QinvError::Format(format!("csv line {}, column {}: {e}", line + 1, col + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    StochasticFile {
        dim: rows.len(),
        mat: rows,
    }
    .to_matrix()
}

pub fn stochastic_to_json(t: &StochasticMatrix) -> String {
    serde_json::to_string_pretty(&StochasticFile::from(t)).expect("matrix serializes")
}

pub fn stochastic_to_csv(t: &StochasticMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in t.rows() {
        w.write_record(r.iter().map(|x| format!("{x:?}")))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}
