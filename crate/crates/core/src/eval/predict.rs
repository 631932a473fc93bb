use crate::error::{Error, Result};
use crate::model::file::TrainedModel;
use crate::model::matrix::Matrix;
use crate::model::network::{encode, regress};
use crate::model::params::{ModelParams, FORCE_AXES};
use crate::sim::dataset::Dataset;
use crate::train::normalize::{scale_forces, Direction};
use crate::train::trainer::UnlabeledImages;

/// Samples encoded per chunk; bounds the memory held by assembled inputs.
const CHUNK: usize = 64;

/// Bottleneck features of every image pair, one row each.
pub fn extract_features(params: &ModelParams, images: &UnlabeledImages) -> Result<Matrix> {
    let n = images.len();
    let mut out = Matrix::zeros(n, params.arch.bottleneck_dim);
    let idx: Vec<usize> = (0..n).collect();
    for chunk in idx.chunks(CHUNK) {
        let f = encode(params, &images.inputs(chunk)?)?;
        for (r, &i) in chunk.iter().enumerate() {
            out.row_mut(i).copy_from_slice(f.row(r));
        }
    }
    Ok(out)
}

/// Predicted forces in newtons.
pub fn predict_forces(model: &TrainedModel, images: &UnlabeledImages) -> Result<Matrix> {
    let f = extract_features(&model.params, images)?;
    scale_forces(
        &regress(&model.params, &f)?,
        &model.normalization,
        Direction::Denormalize,
    )
}

/// Ground-truth forces of a labeled dataset, `N x 3` newtons.
pub fn truth_forces(dataset: &Dataset) -> Result<Matrix> {
    let mut m = Matrix::zeros(dataset.len(), FORCE_AXES);
    for (i, s) in dataset.samples.iter().enumerate() {
        let f = s.force.as_ref().ok_or_else(|| {
            Error::invalid(format!(
                "evaluation requires labeled test data, but sample {} has no force label",
                s.id
            ))
        })?;
        m.row_mut(i).copy_from_slice(&f.as_array());
    }
    Ok(m)
}
