//! Feature export for visualising domain alignment.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::eval::predict::extract_features;
use crate::model::file::TrainedModel;
use crate::model::matrix::{sq_dist, Matrix};
use crate::sim::dataset::Dataset;
use crate::train::trainer::UnlabeledImages;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingDomain {
    Source,
    Target,
}

impl fmt::Display for EmbeddingDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingDomain::Source => "source",
            EmbeddingDomain::Target => "target",
        })
    }
}

/// Bottleneck features of both domains with a shared 2-D PCA projection.
#[derive(Debug, Clone)]
pub struct Embeddings {
    pub domain: Vec<EmbeddingDomain>,
    /// `-1` where unknown.
    pub class_index: Vec<i64>,
    pub features: Matrix,
    pub pca: Vec<[f64; 2]>,
}

impl Embeddings {
    fn rows_of(&self, d: EmbeddingDomain) -> Matrix {
        let idx: Vec<usize> = (0..self.domain.len()).filter(|&i| self.domain[i] == d).collect();
        let mut m = Matrix::zeros(idx.len(), self.features.cols);
        for (r, &i) in idx.iter().enumerate() {
            m.row_mut(r).copy_from_slice(self.features.row(i));
        }
        m
    }

    /// Distance between the source and target feature centroids.
    pub fn centroid_distance(&self) -> Result<f64> {
        centroid_distance(
            &self.rows_of(EmbeddingDomain::Source),
            &self.rows_of(EmbeddingDomain::Target),
        )
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["domain".to_string(), "class_index".to_string()];
        header.extend((0..self.features.cols).map(|j| format!("f{j}")));
        header.extend(["pca1".to_string(), "pca2".to_string()]);
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.domain.len() {
            let mut rec = vec![self.domain[i].to_string(), self.class_index[i].to_string()];
            rec.extend(self.features.row(i).iter().map(f64::to_string));
            rec.extend(self.pca[i].iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::io::atomic_write(path, &self.to_csv()?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}

pub fn centroid_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows == 0 || b.rows == 0 || a.cols != b.cols {
        return Err(Error::shape(
            "centroid_distance",
            "two non-empty batches of equal width",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    Ok(sq_dist(&a.column_means(), &b.column_means()).sqrt())
}

/// Projection of the rows of `x` onto its first two principal axes. Each
/// axis's sign is fixed so that its largest-magnitude loading is positive.
pub fn pca_2d(x: &Matrix) -> Result<Vec<[f64; 2]>> {
    if x.rows < 2 || x.cols < 2 {
        return Err(Error::invalid("PCA needs at least 2 rows and 2 columns"));
    }
    let means = x.column_means();
    let centred = DMatrix::from_fn(x.rows, x.cols, |i, j| x.get(i, j) - means[j]);
    let cov = centred.transpose() * &centred / (x.rows as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..x.cols).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = Vec::with_capacity(2);
    for &k in &order[..2] {
        let mut v = eig.eigenvectors.column(k).into_owned();
        let pivot = v
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        if pivot < 0.0 {
            v.neg_mut();
        }
        axes.push(v);
    }
    Ok((0..x.rows)
        .map(|i| {
            let r = centred.row(i);
            [r.dot(&axes[0].transpose()), r.dot(&axes[1].transpose())]
        })
        .collect())
}

/// Encode both datasets with `model` and project the union with PCA.
/// Class indices are copied when present; no label enters the features.
pub fn export_embeddings(model: &TrainedModel, source: &Dataset, target: &Dataset) -> Result<Embeddings> {
    let fs = extract_features(&model.params, &UnlabeledImages::from_dataset(source))?;
    let ft = extract_features(&model.params, &UnlabeledImages::from_dataset(target))?;
    let features = fs.vstack(&ft)?;
    let pca = pca_2d(&features)?;
    let mut domain = vec![EmbeddingDomain::Source; source.len()];
    domain.extend(vec![EmbeddingDomain::Target; target.len()]);
    let class_index = source
        .samples
        .iter()
        .chain(&target.samples)
        .map(|s| s.class_index.map_or(-1, |c| c as i64))
        .collect();
    Ok(Embeddings {
        domain,
        class_index,
        features,
        pca,
    })
}
