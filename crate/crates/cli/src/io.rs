//! JSON state files: `{"dims": [d₁, …], "matrix": [[[re, im], …], …]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qcorr::linalg::{CMatrix, C64};
use qcorr::{DensityMatrix, SubsystemLayout};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        StateFile {
            dims: rho.layout().dims().to_vec(),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        let layout = SubsystemLayout::new(self.dims.clone())?;
        let n = layout.total_dim();
        if self.matrix.len() != n || self.matrix.iter().any(|row| row.len() != n) {
            return Err(CliError::Usage(format!(
                "matrix must be {n}×{n} for dims {:?}",
                self.dims
            )));
        }
        let m = CMatrix::from_fn(n, n, |i, j| C64::new(self.matrix[i][j][0], self.matrix[i][j][1]));
        Ok(DensityMatrix::validate(m, layout)?)
    }
}

pub fn parse_state(text: &str, path: &Path) -> Result<DensityMatrix> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_state()
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_state(&text, path)
}

pub fn save_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let text = serde_json::to_string_pretty(&StateFile::from_state(rho)).expect("plain data serializes");
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcorr::families::{BellKind, StateFamily};

    #[test]
    fn round_trip_is_exact() {
        let rho = StateFamily::RandomMixed {
            dims: vec![2, 3],
            rank: 4,
            seed: 3,
        }
        .instantiate()
        .unwrap();
        let text = serde_json::to_string(&StateFile::from_state(&rho)).unwrap();
        let back = parse_state(&text, Path::new("mem")).unwrap();
        assert!(qcorr::linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-12);
        assert_eq!(back.layout(), rho.layout());
    }

    #[test]
    fn reports_position_of_syntax_errors() {
        let err = parse_state("{\n  \"dims\": [2,\n  ]", Path::new("bad.json")).unwrap_err();
        match err {
            CliError::Json { line, column, .. } => assert!(line >= 2 && column > 0),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_state("{\"dims\":[2],\"matrix\":[[[1,0]]]}", Path::new("x")).unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn bell_serializes_corners() {
        let rho = StateFamily::Bell(BellKind::PhiPlus).instantiate().unwrap();
        let f = StateFile::from_state(&rho);
        assert_eq!(f.dims, vec![2, 2]);
        assert!((f.matrix[0][3][0] - 0.5).abs() < 1e-15);
    }
}
