//! Per-group evaluation reports.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::eval::metrics::{format_pct, mae_per_axis, pct_of_range, r_squared};
use crate::eval::predict::{predict_forces, truth_forces};
use crate::model::file::TrainedModel;
use crate::model::matrix::Matrix;
use crate::sim::dataset::Dataset;
use crate::train::normalize::NormalizationSpec;
use crate::train::trainer::UnlabeledImages;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// How `avg_mae` combines the three axes.
pub const AVG_CONVENTION: &str = "unweighted mean of the x, y and z MAE";

/// `R^2` is NaN when undefined; JSON stores that as `null`.
mod nan_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisMetrics {
    /// Newtons.
    pub mae: f64,
    #[serde(with = "nan_as_null")]
    pub r2: f64,
    /// MAE as a percentage of the axis's full range.
    pub pct_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupReport {
    pub format_version: u32,
    /// `source->target`, e.g. `mb0i0->wmb0i0`.
    pub group: String,
    pub method: String,
    pub n_samples: usize,
    pub x: AxisMetrics,
    pub y: AxisMetrics,
    pub z: AxisMetrics,
    pub avg_mae: f64,
    pub avg_convention: String,
    /// Axis ranges the percentages refer to.
    pub normalization: NormalizationSpec,
}

impl GroupReport {
    pub fn axes(&self) -> [&AxisMetrics; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported report format_version {}",
                self.format_version
            )));
        }
        self.normalization.validate()?;
        let axes = self.axes();
        for (a, m) in axes.iter().enumerate() {
            if !(m.mae.is_finite() && m.mae >= 0.0) {
                return Err(Error::invalid(format!("axis {a}: MAE must be finite and >= 0")));
            }
            let pct = pct_of_range(m.mae, a, &self.normalization)?;
            if (pct - m.pct_range).abs() > 1e-9 * pct.abs().max(1.0) {
                return Err(Error::invalid(format!("axis {a}: pct_range inconsistent with mae")));
            }
        }
        let avg = (axes[0].mae + axes[1].mae + axes[2].mae) / 3.0;
        if (avg - self.avg_mae).abs() > 1e-12 * avg.max(1.0) {
            return Err(Error::invalid("avg_mae is not the mean of the axis MAEs"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parse and validate.
    pub fn from_json(s: &str) -> Result<Self> {
        let r: GroupReport = serde_json::from_str(s)?;
        r.validate()?;
        Ok(r)
    }

    /// One line per axis plus the average.
    pub fn summary(&self) -> String {
        let mut out = format!("{} [{}] n={}\n", self.group, self.method, self.n_samples);
        for (name, m) in ["Fx", "Fy", "Fz"].iter().zip(self.axes()) {
            out.push_str(&format!(
                "  {name}: MAE {:.3} N ({}), R2 {:.2}\n",
                m.mae,
                format_pct(m.pct_range),
                m.r2
            ));
        }
        out.push_str(&format!("  avg MAE {:.3} N\n", self.avg_mae));
        out
    }
}

/// Metrics of predictions against ground truth, both in newtons.
pub fn report_from_predictions(
    pred: &Matrix,
    truth: &Matrix,
    normalization: &NormalizationSpec,
    group: impl Into<String>,
    method: impl Into<String>,
) -> Result<GroupReport> {
    let mae = mae_per_axis(pred, truth)?;
    let col = |m: &Matrix, a: usize| (0..m.rows).map(|i| m.get(i, a)).collect::<Vec<_>>();
    let mut axes = [AxisMetrics {
        mae: 0.0,
        r2: 0.0,
        pct_range: 0.0,
    }; 3];
    for (a, m) in axes.iter_mut().enumerate() {
        *m = AxisMetrics {
            mae: mae[a],
            r2: r_squared(&col(pred, a), &col(truth, a))?,
            pct_range: pct_of_range(mae[a], a, normalization)?,
        };
    }
    Ok(GroupReport {
        format_version: REPORT_FORMAT_VERSION,
        group: group.into(),
        method: method.into(),
        n_samples: pred.rows,
        x: axes[0],
        y: axes[1],
        z: axes[2],
        avg_mae: (mae[0] + mae[1] + mae[2]) / 3.0,
        avg_convention: AVG_CONVENTION.to_string(),
        normalization: *normalization,
    })
}

/// `source->target` label, using the model's source domain.
pub fn group_label(model: &TrainedModel, test: &Dataset) -> String {
    let name = |d: Vec<crate::sim::domain::DomainConfig>| match d.as_slice() {
        [one] => one.to_string(),
        [] => "unknown".to_string(),
        many => many.iter().map(ToString::to_string).collect::<Vec<_>>().join("+"),
    };
    let source = model
        .metadata
        .source_domain
        .map_or_else(|| "unknown".to_string(), |d| d.to_string());
    format!("{source}->{}", name(test.domains()))
}

/// Evaluate `model` on a labeled test split. Labels are read here only.
pub fn build_group_report(model: &TrainedModel, test: &Dataset) -> Result<GroupReport> {
    if test.is_empty() {
        return Err(Error::invalid("evaluation requires a non-empty test split"));
    }
    let truth = truth_forces(test)?;
    let pred = predict_forces(model, &UnlabeledImages::from_dataset(test))?;
    let method = if model.metadata.method.is_empty() {
        "unknown".to_string()
    } else {
        model.metadata.method.clone()
    };
    report_from_predictions(&pred, &truth, &model.normalization, group_label(model, test), method)
}
