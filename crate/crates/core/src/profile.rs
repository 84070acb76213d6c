use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SchemeError;
use crate::params::{ImageId, SchemeParams};

/// One selected image and the 1-based string positions whose characters the
/// user types for it. Positions are kept sorted and distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PassImage {
    pub image: ImageId,
    pub positions: Vec<usize>,
}

impl PassImage {
    pub fn block_len(&self) -> usize {
        self.positions.len()
    }
}

/// A user's secret: the pass-images and their pass-positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordProfile {
    user_id: String,
    pass_images: Vec<PassImage>,
}

impl PasswordProfile {
    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn pass_images(&self) -> &[PassImage] {
        &self.pass_images
    }

    /// Number of pass-images (K).
    pub fn image_count(&self) -> usize {
        self.pass_images.len()
    }

    /// Total number of characters typed per round (L).
    pub fn entered_len(&self) -> usize {
        self.pass_images.iter().map(PassImage::block_len).sum()
    }

    pub fn block_lens(&self) -> Vec<usize> {
        self.pass_images.iter().map(PassImage::block_len).collect()
    }

    /// Same secret with the pass-images stored in a different order.
    pub fn reordered(&self, order: &[usize]) -> PasswordProfile {
        PasswordProfile {
            user_id: self.user_id.clone(),
            pass_images: order.iter().map(|&i| self.pass_images[i].clone()).collect(),
        }
    }
}

/// Validates and builds a profile.
///
/// Positions are 1-based. Typing every position of every pass-image
/// (`positions[i] == 1..=M`) gives the basic, unpositioned variant of the
/// scheme.
pub fn create_profile(
    user_id: impl Into<String>,
    pass_images: &[ImageId],
    positions: &[Vec<usize>],
    params: &SchemeParams,
) -> Result<PasswordProfile, SchemeError> {
    params.validate()?;
    if pass_images.len() != positions.len() {
        return Err(SchemeError::PositionCountMismatch {
            images: pass_images.len(),
            position_sets: positions.len(),
        });
    }
    if pass_images.len() < params.min_pass_images {
        return Err(SchemeError::TooFewPassImages {
            got: pass_images.len(),
            min: params.min_pass_images,
        });
    }
    if pass_images.len() > params.grid_size {
        return Err(SchemeError::InvalidParams(format!(
            "{} pass-images cannot fit a grid of {}",
            pass_images.len(),
            params.grid_size
        )));
    }

    let pool: BTreeSet<&ImageId> = params.image_pool.iter().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(pass_images.len());
    for (image, set) in pass_images.iter().zip(positions) {
        if !pool.contains(image) {
            return Err(SchemeError::UnknownImageId(image.clone()));
        }
        if !seen.insert(image) {
            return Err(SchemeError::DuplicatePassImage(image.clone()));
        }
        if set.is_empty() {
            return Err(SchemeError::EmptyPositionSet(image.clone()));
        }
        if let Some(&bad) = set.iter().find(|&&p| p == 0 || p > params.string_len) {
            return Err(SchemeError::PositionOutOfRange {
                position: bad,
                max: params.string_len,
            });
        }
        let sorted: BTreeSet<usize> = set.iter().copied().collect();
        out.push(PassImage {
            image: image.clone(),
            positions: sorted.into_iter().collect(),
        });
    }

    Ok(PasswordProfile {
        user_id: user_id.into(),
        pass_images: out,
    })
}

/// Profile that types the whole string of every pass-image.
pub fn create_basic_profile(
    user_id: impl Into<String>,
    pass_images: &[ImageId],
    params: &SchemeParams,
) -> Result<PasswordProfile, SchemeError> {
    let full: Vec<usize> = (1..=params.string_len).collect();
    let positions = vec![full; pass_images.len()];
    create_profile(user_id, pass_images, &positions, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(names: &[&str]) -> Vec<ImageId> {
        names.iter().map(|&n| ImageId::from(n)).collect()
    }

    #[test]
    fn three_image_profile() {
        let params = SchemeParams::experimental();
        let profile = create_profile(
            "ghc",
            &ids(&["img003", "img017", "img042"]),
            &[vec![1, 2, 4], vec![4, 6, 8], vec![3, 5]],
            &params,
        )
        .unwrap();
        assert_eq!(profile.image_count(), 3);
        assert_eq!(profile.entered_len(), 8);
        assert_eq!(profile.block_lens(), vec![3, 3, 2]);
    }

    #[test]
    fn too_few_images() {
        let params = SchemeParams::experimental();
        let err = create_profile("u", &ids(&["img000", "img001"]), &[vec![1], vec![2]], &params)
            .unwrap_err();
        assert_eq!(err, SchemeError::TooFewPassImages { got: 2, min: 3 });
    }

    #[test]
    fn position_out_of_range() {
        let params = SchemeParams::experimental();
        let err = create_profile(
            "u",
            &ids(&["img000", "img001", "img002"]),
            &[vec![1], vec![9], vec![2]],
            &params,
        )
        .unwrap_err();
        assert_eq!(err, SchemeError::PositionOutOfRange { position: 9, max: 8 });

        let err = create_profile(
            "u",
            &ids(&["img000", "img001", "img002"]),
            &[vec![0], vec![1], vec![2]],
            &params,
        )
        .unwrap_err();
        assert!(matches!(err, SchemeError::PositionOutOfRange { position: 0, .. }));
    }

    #[test]
    fn empty_duplicate_and_unknown() {
        let params = SchemeParams::experimental();
        let err = create_profile(
            "u",
            &ids(&["img000", "img001", "img002"]),
            &[vec![1], vec![], vec![2]],
            &params,
        )
        .unwrap_err();
        assert_eq!(err, SchemeError::EmptyPositionSet("img001".into()));

        let err = create_profile(
            "u",
            &ids(&["img000", "img001", "img000"]),
            &[vec![1], vec![2], vec![3]],
            &params,
        )
        .unwrap_err();
        assert_eq!(err, SchemeError::DuplicatePassImage("img000".into()));

        let err = create_profile(
            "u",
            &ids(&["img000", "img001", "cat"]),
            &[vec![1], vec![2], vec![3]],
            &params,
        )
        .unwrap_err();
        assert_eq!(err, SchemeError::UnknownImageId("cat".into()));
    }

    #[test]
    fn positions_are_sorted_and_deduplicated() {
        let params = SchemeParams::experimental();
        let profile = create_profile(
            "u",
            &ids(&["img000", "img001", "img002"]),
            &[vec![4, 2, 1, 2], vec![8], vec![5, 3]],
            &params,
        )
        .unwrap();
        assert_eq!(profile.pass_images()[0].positions, vec![1, 2, 4]);
        assert_eq!(profile.pass_images()[2].positions, vec![3, 5]);
        assert_eq!(profile.entered_len(), 6);
    }

    #[test]
    fn basic_profile_types_everything() {
        let params = SchemeParams::basic();
        let p = create_basic_profile("u", &ids(&["img000", "img001", "img002"]), &params).unwrap();
        assert_eq!(p.entered_len(), 12);
        assert!(p.pass_images().iter().all(|pi| pi.positions == vec![1, 2, 3, 4]));
    }
}
