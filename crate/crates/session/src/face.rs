use serde::{Deserialize, Serialize};

use cmaesig_core::FeatureVector;

/// Number of face parameters; the session feature space is the parameter space.
pub const FACE_DIM: usize = 4;

/// Appearance of a rendered face, every field in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceParams {
    pub eye_separation: f64,
    pub eye_size: f64,
    pub mouth_curvature: f64,
    /// Maps affinely onto `[0, 360)` degrees; see [`FaceParams::hue_degrees`].
    pub hue: f64,
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-1.0, 1.0)
    }
}

impl FaceParams {
    pub fn new(eye_separation: f64, eye_size: f64, mouth_curvature: f64, hue: f64) -> Self {
        Self {
            eye_separation: clamp_unit(eye_separation),
            eye_size: clamp_unit(eye_size),
            mouth_curvature: clamp_unit(mouth_curvature),
            hue: clamp_unit(hue),
        }
    }

    /// Identity mapping from the feature space, clamped to bounds.
    ///
    /// # Panics
    /// If `phi` does not have [`FACE_DIM`] coordinates.
    pub fn from_features(phi: &FeatureVector) -> Self {
        let v = phi.as_slice();
        assert_eq!(v.len(), FACE_DIM, "face features must be {FACE_DIM}-dimensional");
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; FACE_DIM] {
        [self.eye_separation, self.eye_size, self.mouth_curvature, self.hue]
    }

    pub fn in_bounds(&self) -> bool {
        self.to_array().iter().all(|x| (-1.0..=1.0).contains(x))
    }

    /// Hue in degrees; `-1` and `+1` both land on 0.
    pub fn hue_degrees(&self) -> f64 {
        ((self.hue + 1.0) * 180.0).rem_euclid(360.0)
    }
}
