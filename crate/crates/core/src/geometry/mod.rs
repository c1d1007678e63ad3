//! Points, clouds, rigid poses, PLY I/O and the nearest-neighbour index.

mod cloud;
mod index;
mod ply;
mod point;
mod pose;
mod voxel;

pub use cloud::{transform, Aabb, PointCloud};
pub use index::{build_index, Neighbor, SceneIndex, TIE_TOLERANCE};
pub use ply::{load_ply, parse_ply, save_ply, write_ply, PlyFormat, Rgb};
pub use point::{Point3, Vector3};
pub use pose::{Matrix3, RigidPose};
pub use voxel::voxel_downsample;
