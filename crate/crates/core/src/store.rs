//! Saving and loading fitted models as JSON.
//!
//! The on-disk form holds only the estimates (lag order, variable names,
//! intercept, coefficient blocks, residual covariance, sample size).
//! Residuals are not stored: [`SavedModel::to_model`] rebuilds them from the
//! original data frame by replaying the same design-matrix arithmetic used
//! at fit time, which reproduces them bit for bit. JSON numbers are written
//! with shortest-roundtrip formatting, so save/load round-trips are exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SeriesFrame;
use crate::var::{assemble_beta, build_design, VarModel};

/// Serializable form of a fitted model.
///
/// `coeffs` holds one row-major `m x m` block per lag; `resid_cov` is the
/// row-major residual covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub p: usize,
    pub names: Vec<String>,
    pub intercept: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    pub resid_cov: Vec<f64>,
    pub n_obs: usize,
}

fn row_major(mat: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(mat.nrows() * mat.ncols());
    for r in 0..mat.nrows() {
        for c in 0..mat.ncols() {
            out.push(mat[(r, c)]);
        }
    }
    out
}

fn from_row_major(data: &[f64], m: usize, what: &'static str) -> Result<DMatrix<f64>> {
    if data.len() != m * m {
        return Err(Error::DimensionMismatch {
            what,
            expected: m * m,
            got: data.len(),
        });
    }
    Ok(DMatrix::from_row_slice(m, m, data))
}

impl SavedModel {
    /// Captures the estimates of a fitted model.
    pub fn from_model(model: &VarModel) -> Self {
        Self {
            p: model.p,
            names: model.names.clone(),
            intercept: model.intercept.iter().copied().collect(),
            coeffs: model.coeffs.iter().map(row_major).collect(),
            resid_cov: row_major(&model.resid_cov),
            n_obs: model.n_obs,
        }
    }

    /// Rebuilds the full model against the frame it was fitted on,
    /// recomputing the residuals. The frame must carry the same variables
    /// in the same order and must extend at least as far as the original
    /// estimation sample.
    ///
    /// # Errors
    ///
    /// * [`Error::NameMismatch`] — frame variables differ from the saved
    ///   names.
    /// * [`Error::DimensionMismatch`] — stored blocks have the wrong size.
    /// * [`Error::InsufficientData`] — frame shorter than the estimation
    ///   sample requires.
    pub fn to_model(&self, frame: &SeriesFrame) -> Result<VarModel> {
        let m = self.names.len();
        if frame.names() != self.names.as_slice() {
            return Err(Error::NameMismatch {
                expected: self.names.clone(),
                got: frame.names().to_vec(),
            });
        }
        if self.intercept.len() != m {
            return Err(Error::DimensionMismatch {
                what: "intercept length",
                expected: m,
                got: self.intercept.len(),
            });
        }
        if self.coeffs.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "coefficient blocks",
                expected: self.p,
                got: self.coeffs.len(),
            });
        }
        if self.p == 0 || self.n_obs == 0 {
            return Err(Error::InsufficientData {
                context: "saved model",
                needed: 1,
                got: 0,
            });
        }
        let t = frame.len();
        if t < self.n_obs + self.p {
            return Err(Error::InsufficientData {
                context: "saved model reconstruction",
                needed: self.n_obs + self.p,
                got: t,
            });
        }
        let start = t - self.n_obs;

        let intercept = DVector::from_column_slice(&self.intercept);
        let coeffs = self
            .coeffs
            .iter()
            .map(|block| from_row_major(block, m, "coefficient block"))
            .collect::<Result<Vec<_>>>()?;
        let resid_cov = from_row_major(&self.resid_cov, m, "residual covariance")?;

        // Replay the fit-time arithmetic: residuals = Y - Z * B with the
        // identical design construction and coefficient layout, giving a
        // bit-exact reconstruction.
        let (z, y) = build_design(frame.values(), self.p, start);
        let beta = assemble_beta(&intercept, &coeffs);
        let residuals = y - z * &beta;

        Ok(VarModel {
            p: self.p,
            names: self.names.clone(),
            intercept,
            coeffs,
            resid_cov,
            residuals,
            n_obs: self.n_obs,
        })
    }
}

/// Writes a model to `path` as pretty-printed JSON.
pub fn save_model(model: &VarModel, path: &Path) -> Result<()> {
    let saved = SavedModel::from_model(model);
    let file = File::create(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &saved)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Reads a model previously written by [`save_model`].
pub fn load_model(path: &Path) -> Result<SavedModel> {
    let file = File::open(path).map_err(|e| Error::File {
        path: path.display().to_string(),
        source: e,
    })?;
    let saved = serde_json::from_reader(BufReader::new(file))?;
    Ok(saved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim;
    use crate::var::fit_var;
    use chrono::{Days, NaiveDate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simulated_frame(seed: u64, t: usize) -> SeriesFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = sim::simulate_var(
            &DVector::from_column_slice(&[0.8, -0.2]),
            &[DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.05, 0.4])],
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.9]),
            t,
            50,
            &mut rng,
        );
        let d0: NaiveDate = "2020-03-25".parse().unwrap();
        let dates = (0..t)
            .map(|i| d0.checked_add_days(Days::new(i as u64)).unwrap())
            .collect();
        SeriesFrame::new(dates, vec!["a".into(), "b".into()], values).unwrap()
    }

    fn bits(mat: &DMatrix<f64>) -> Vec<u64> {
        mat.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn round_trip_through_file_is_bit_exact() {
        let frame = simulated_frame(9, 180);
        let model = fit_var(&frame, 2).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let reloaded = load_model(&path).unwrap().to_model(&frame).unwrap();

        assert_eq!(model.p, reloaded.p);
        assert_eq!(model.names, reloaded.names);
        assert_eq!(model.n_obs, reloaded.n_obs);
        assert_eq!(
            model.intercept.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            reloaded.intercept.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        for (a, b) in model.coeffs.iter().zip(&reloaded.coeffs) {
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(bits(&model.resid_cov), bits(&reloaded.resid_cov));
        assert_eq!(bits(&model.residuals), bits(&reloaded.residuals));
    }

    #[test]
    fn saving_twice_produces_identical_bytes() {
        let frame = simulated_frame(4, 120);
        let model = fit_var(&frame, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("m1.json");
        let p2 = dir.path().join("m2.json");
        save_model(&model, &p1).unwrap();
        save_model(&model, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap()
        );
    }

    #[test]
    fn json_layout_uses_named_fields_and_nested_blocks() {
        let frame = simulated_frame(2, 100);
        let model = fit_var(&frame, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["p"], 2);
        assert_eq!(value["names"][0], "a");
        assert_eq!(value["coeffs"].as_array().unwrap().len(), 2);
        assert_eq!(value["coeffs"][0].as_array().unwrap().len(), 4);
        assert_eq!(value["resid_cov"].as_array().unwrap().len(), 4);
        assert!(value["n_obs"].as_u64().unwrap() > 0);
    }

    #[test]
    fn mismatched_names_are_rejected() {
        let frame = simulated_frame(7, 90);
        let model = fit_var(&frame, 1).unwrap();
        let mut saved = SavedModel::from_model(&model);
        saved.names = vec!["a".into(), "c".into()];
        assert!(matches!(
            saved.to_model(&frame),
            Err(Error::NameMismatch { .. })
        ));
    }

    #[test]
    fn frame_shorter_than_sample_is_rejected() {
        let frame = simulated_frame(7, 90);
        let model = fit_var(&frame, 1).unwrap();
        let saved = SavedModel::from_model(&model);
        let short = frame.truncate_through(frame.dates()[40]).unwrap();
        assert!(matches!(
            saved.to_model(&short),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn corrupt_block_size_is_rejected() {
        let frame = simulated_frame(7, 90);
        let model = fit_var(&frame, 1).unwrap();
        let mut saved = SavedModel::from_model(&model);
        saved.coeffs[0].pop();
        assert!(matches!(
            saved.to_model(&frame),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reconstruction_on_longer_frame_uses_trailing_sample() {
        // A model fitted on a truncated frame must reconstruct against that
        // same truncation, not silently against new data; on the original
        // (longer) frame the trailing window differs, so residuals differ.
        let frame = simulated_frame(11, 150);
        let cut = frame.truncate_through(frame.dates()[119]).unwrap();
        let model = fit_var(&cut, 1).unwrap();
        let saved = SavedModel::from_model(&model);

        let same = saved.to_model(&cut).unwrap();
        assert_eq!(bits(&model.residuals), bits(&same.residuals));

        let other = saved.to_model(&frame).unwrap();
        assert_eq!(other.n_obs, model.n_obs);
        assert_ne!(bits(&model.residuals), bits(&other.residuals));
    }
}
