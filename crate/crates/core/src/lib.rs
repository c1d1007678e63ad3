//! One-shot, geometry-only affordance detection over point clouds.
//!
//! Training takes a single example of a query object interacting with a
//! scene object. It samples their bisector surface, records for every
//! bisector point where on the scene it came from (its provenance vector),
//! and distills a sparse, weighted set of keypoints around a scene anchor.
//! Detection asks, for a candidate location and yaw in a new scene, whether
//! the scene points those keypoints need are where they are expected to be,
//! using nearest-neighbour probes against an exact kd-tree.
//!
//! ```
//! use afford::prelude::*;
//!
//! let pair = make_training_pair(Archetype::Place, 0)?;
//! let trained = train_affordance(
//!     "place-sphere",
//!     &pair.query,
//!     &pair.scene,
//!     &pair.pose,
//!     &TrainingParams::default(),
//!     SourceFiles::default(),
//! )?;
//! let d = &trained.descriptor;
//! let index = SceneIndex::build(&pair.scene)?;
//! assert_eq!(score_at(d, &index, d.anchor, 0.0).score, 1.0);
//! # Ok::<(), afford::Error>(())
//! ```

pub mod descriptor;
pub mod detection;
mod error;
pub mod geometry;
pub mod ibs;
pub mod keypoints;
pub mod synth;
pub mod tensor;
mod train;

pub use error::{Error, Result};
pub use train::{train_affordance, SourceFiles, Trained, TrainingStats};

pub mod prelude {
    pub use crate::descriptor::{
        load_descriptor, save_descriptor, AffordanceDescriptor, MatchThresholds, TrainingParams,
    };
    pub use crate::detection::{
        batch_detect, detect, full_tensor_score, sample_test_points, score_at, Detection,
        DetectionParams,
    };
    pub use crate::geometry::{
        load_ply, save_ply, transform, voxel_downsample, PlyFormat, Point3, PointCloud,
        RigidPose, SceneIndex,
    };
    pub use crate::ibs::{prune_ibs, sample_ibs, IbsParams, IbsSample};
    pub use crate::keypoints::{sample_keypoints, KeypointParams, SamplingStrategy, Weighting};
    pub use crate::synth::{make_table_scene, make_training_pair, Archetype, TableParams};
    pub use crate::tensor::{compute_provenance, derive_anchor, InteractionTensor};
    pub use crate::{train_affordance, Error, SourceFiles};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/point-clouds.md")]
    mod point_clouds {}
    #[doc = include_str!("../../../book/src/bisector.md")]
    mod bisector {}
    #[doc = include_str!("../../../book/src/tensor.md")]
    mod tensor {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/synthetic-scenes.md")]
    mod synthetic_scenes {}
}
