//! Network architecture and trainable parameters.
//!
//! The encoder is a stack of 3x3 stride-2 convolutions with ReLU, followed by
//! global average pooling and a linear bottleneck. Two linear heads read the
//! bottleneck features: a contact classifier (softmax) and a force regressor
//! (sigmoid, three outputs). Parameters are kept as an ordered list of named
//! tensors so optimizers and the model file can treat them uniformly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::conv::ConvGeom;

/// Contact image and reference image stacked along the channel axis.
pub const INPUT_CHANNELS: usize = 6;
pub const FORCE_AXES: usize = 3;
pub const KERNEL_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub image_height: usize,
    pub image_width: usize,
    /// Output channels of each convolution layer.
    pub channels: Vec<usize>,
    pub bottleneck_dim: usize,
    pub num_classes: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            image_height: 64,
            image_width: 64,
            channels: vec![16, 32, 64],
            bottleneck_dim: 256,
            num_classes: 361,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.image_height == 0 || self.image_width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::invalid(
                "encoder needs at least one conv layer with nonzero channels",
            ));
        }
        if self.bottleneck_dim == 0 || self.num_classes == 0 {
            return Err(Error::invalid("bottleneck_dim and num_classes must be positive"));
        }
        Ok(())
    }

    pub fn conv_geoms(&self) -> Vec<ConvGeom> {
        let mut out = Vec::with_capacity(self.channels.len());
        let (mut h, mut w, mut c) = (self.image_height, self.image_width, INPUT_CHANNELS);
        for &oc in &self.channels {
            let g = ConvGeom::new(c, oc, h, w);
            h = g.out_h;
            w = g.out_w;
            c = oc;
            out.push(g);
        }
        out
    }

    pub fn pooled_dim(&self) -> usize {
        *self.channels.last().expect("validated")
    }

    pub fn input_len(&self) -> usize {
        INPUT_CHANNELS * self.image_height * self.image_width
    }

    /// Names and shapes of every parameter tensor, in storage order.
    pub fn tensor_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut in_ch = INPUT_CHANNELS;
        for (l, &oc) in self.channels.iter().enumerate() {
            out.push((
                format!("encoder.conv{l}.weight"),
                vec![oc, in_ch, KERNEL_SIZE, KERNEL_SIZE],
            ));
            out.push((format!("encoder.conv{l}.bias"), vec![oc]));
            in_ch = oc;
        }
        let d = self.bottleneck_dim;
        out.push(("encoder.bottleneck.weight".into(), vec![d, in_ch]));
        out.push(("encoder.bottleneck.bias".into(), vec![d]));
        out.push(("classifier.weight".into(), vec![self.num_classes, d]));
        out.push(("classifier.bias".into(), vec![self.num_classes]));
        out.push(("regressor.weight".into(), vec![FORCE_AXES, d]));
        out.push(("regressor.bias".into(), vec![FORCE_AXES]));
        out
    }
}

/// Learning-rate group of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    /// Convolution layers.
    Backbone,
    /// Bottleneck and heads.
    Head,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub tensors: Vec<NamedTensor>,
}

impl ModelParams {
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        let tensors = arch
            .tensor_layout()
            .into_iter()
            .map(|(name, shape)| NamedTensor {
                data: vec![0.0; shape.iter().product()],
                name,
                shape,
            })
            .collect();
        Ok(ModelParams {
            arch: arch.clone(),
            tensors,
        })
    }

    /// He-normal convolutions, Xavier-normal linear layers, zero biases.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in &mut p.tensors {
            if t.shape.len() == 1 {
                continue;
            }
            let fan_out = t.shape[0];
            let fan_in: usize = t.shape[1..].iter().product();
            let std = if t.shape.len() == 4 {
                (2.0 / fan_in as f64).sqrt()
            } else {
                (2.0 / (fan_in + fan_out) as f64).sqrt()
            };
            let normal = Normal::new(0.0, std).expect("finite std");
            t.data.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
        }
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.tensors.iter_mut().for_each(|t| t.data.fill(0.0));
        out
    }

    pub fn num_conv(&self) -> usize {
        self.arch.channels.len()
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn group(&self, tensor_index: usize) -> ParamGroup {
        if tensor_index < 2 * self.num_conv() {
            ParamGroup::Backbone
        } else {
            ParamGroup::Head
        }
    }

    fn pair(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.tensors[i].data, &self.tensors[i + 1].data)
    }

    fn pair_mut(&mut self, i: usize) -> (&mut [f64], &mut [f64]) {
        let (a, b) = self.tensors.split_at_mut(i + 1);
        (&mut a[i].data, &mut b[0].data)
    }

    pub fn conv(&self, layer: usize) -> (&[f64], &[f64]) {
        self.pair(2 * layer)
    }

    pub fn conv_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        self.pair_mut(2 * layer)
    }

    pub fn bottleneck(&self) -> (&[f64], &[f64]) {
        self.pair(2 * self.num_conv())
    }

    pub fn bottleneck_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let i = 2 * self.num_conv();
        self.pair_mut(i)
    }

    pub fn classifier(&self) -> (&[f64], &[f64]) {
        self.pair(2 * self.num_conv() + 2)
    }

    pub fn classifier_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let i = 2 * self.num_conv() + 2;
        self.pair_mut(i)
    }

    pub fn regressor(&self) -> (&[f64], &[f64]) {
        self.pair(2 * self.num_conv() + 4)
    }

    pub fn regressor_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let i = 2 * self.num_conv() + 4;
        self.pair_mut(i)
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &ModelParams) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
    }

    pub fn same_layout(&self, other: &ModelParams) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}
