//! JSON encoding of matrices: `{"dim": d, "re": [[..]], "im": [[..]]}` (rows;
//! `dim` and `im` optional) or `{"diag": [..]}` for diagonal operators.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::hermitian::{CMatrix, HermitianOperator, C64};
use super::positive::{DensityOperator, PositiveOperator};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MatrixJson {
    Diagonal {
        diag: Vec<f64>,
    },
    Dense {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        let im = rows(|z| z.im);
        let has_im = im.iter().flatten().any(|&x| x != 0.0);
        let dim = m.is_square().then(|| m.nrows());
        MatrixJson::Dense { dim, re: rows(|z| z.re), im: has_im.then_some(im) }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        match self {
            MatrixJson::Diagonal { diag } => {
                let n = diag.len();
                Ok(CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) }))
            }
            MatrixJson::Dense { dim, re, im } => {
                let rows = re.len();
                let cols = re.first().map_or(0, Vec::len);
                if let Some(d) = dim {
                    if *d != rows || *d != cols {
                        return Err(Error::DimensionMismatch { expected: *d, actual: rows.max(cols) });
                    }
                }
                if rows == 0 || cols == 0 {
                    return Err(Error::InvalidArgument("empty matrix".into()));
                }
                if re.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidArgument("ragged rows in \"re\"".into()));
                }
                if let Some(im) = im {
                    if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                        return Err(Error::InvalidArgument("\"im\" shape differs from \"re\"".into()));
                    }
                }
                Ok(CMatrix::from_fn(rows, cols, |i, j| C64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))))
            }
        }
    }

    pub fn to_hermitian(&self) -> Result<HermitianOperator> {
        match self {
            MatrixJson::Diagonal { diag } => HermitianOperator::from_diagonal(diag.clone()),
            MatrixJson::Dense { .. } => HermitianOperator::new(self.to_matrix()?),
        }
    }
}

impl From<&HermitianOperator> for MatrixJson {
    fn from(h: &HermitianOperator) -> Self {
        match h.diagonal() {
            Some(d) => MatrixJson::Diagonal { diag: d.to_vec() },
            None => MatrixJson::from_matrix(h.dense().as_ref()),
        }
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MatrixJson::deserialize(d)?.to_hermitian().map_err(serde::de::Error::custom)
    }
}

impl Serialize for PositiveOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.op().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PositiveOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PositiveOperator::new(HermitianOperator::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.op().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        DensityOperator::new(PositiveOperator::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_dense_and_diagonal() {
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.5), C64::new(0.0, -0.5), C64::new(0.0, 0.0)],
        ))
        .unwrap();
        let s = serde_json::to_string(&h).unwrap();
        let back: HermitianOperator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        let d: PositiveOperator = serde_json::from_str(r#"{"diag":[0.5,0.5]}"#).unwrap();
        assert!(d.op().is_diagonal());
    }

    #[test]
    fn rejects_bad_shapes_and_negative_states() {
        assert!(serde_json::from_str::<HermitianOperator>(r#"{"re":[[1,0],[0]]}"#).is_err());
        assert!(serde_json::from_str::<HermitianOperator>(r#"{"dim":3,"re":[[1,0],[0,1]]}"#).is_err());
        assert!(serde_json::from_str::<PositiveOperator>(r#"{"diag":[1,-1]}"#).is_err());
        assert!(serde_json::from_str::<DensityOperator>(r#"{"diag":[1,1]}"#).is_err());
    }
}
