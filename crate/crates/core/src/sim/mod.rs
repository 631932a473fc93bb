//! Synthetic tactile sensor: contact path, force labels, image rendering and
//! marker inpainting.

pub mod dataset;
pub mod domain;
pub mod force;
pub mod image;
pub mod inpaint;
pub mod path;
pub mod render;

pub use dataset::{generate_dataset, generate_dataset_with, inpaint_dataset, Dataset, ImageRef, Split, TactileSample};
pub use domain::DomainConfig;
pub use force::{hertz_normal_force, shear_force, ForceLabel};
pub use image::{Image, Mask};
pub use inpaint::inpaint_markers;
pub use path::{assign_contact_class, generate_contact_path, ContactPoint, PathSpec};
pub use render::{RenderConfig, Renderer};
