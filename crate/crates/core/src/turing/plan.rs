use std::path::PathBuf;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SessionError, SessionItem, SessionOptions, Truth};
use crate::detect_eval::{extract_instances, Connectivity};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, split_seed};
use crate::volgrid::{read_mask, read_volume, render_slice, render_slice_with_overlay, Axis, Mask, WindowSpec};

/// A case available to the study: an image and its tumor mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCase {
    pub case_ref: String,
    pub image: PathBuf,
    pub mask: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SliceSelection {
    /// The axial slice with the most tumor voxels (lowest index on ties).
    #[default]
    MaxArea,
    /// A uniformly random tumor-bearing axial slice.
    Random,
}

/// Axial slice to show for a tumor mask, `None` if the mask is empty.
pub fn select_slice<R: Rng + ?Sized>(mask: &Mask, selection: SliceSelection, rng: &mut R) -> Option<usize> {
    let [nx, ny, nz] = mask.dims();
    let plane = nx * ny;
    let area: Vec<usize> = (0..nz)
        .map(|z| {
            mask.labels()[z * plane..(z + 1) * plane]
                .iter()
                .filter(|&&l| l > 0)
                .count()
        })
        .collect();
    match selection {
        SliceSelection::MaxArea => {
            let best = *area.iter().max()?;
            (best > 0).then(|| area.iter().position(|&a| a == best).unwrap())
        }
        SliceSelection::Random => {
            let bearing: Vec<usize> = (0..nz).filter(|&z| area[z] > 0).collect();
            (!bearing.is_empty()).then(|| bearing[rng.random_range(0..bearing.len())])
        }
    }
}

/// Samples `n_per_class` cases from each manifest without replacement,
/// picks a slice per case and shuffles the combined list. Depends only on
/// the manifests and `options.seed`.
pub fn plan_items(real: &[StudyCase], synthetic: &[StudyCase], options: &SessionOptions) -> Result<Vec<SessionItem>> {
    let n = options.n_per_class;
    if n == 0 {
        return Err(Error::InvalidParameter("n_per_class must be at least 1".into()));
    }
    for (class, cases) in [(Truth::Real, real), (Truth::Synthetic, synthetic)] {
        if cases.len() < n {
            return Err(SessionError::InsufficientItems {
                class,
                needed: n,
                available: cases.len(),
            }
            .into());
        }
    }
    let mut rng = rng_from_seed(options.seed);
    let mut picked: Vec<(Truth, &StudyCase)> = Vec::with_capacity(2 * n);
    for (class, cases) in [(Truth::Real, real), (Truth::Synthetic, synthetic)] {
        let mut idx = index::sample(&mut rng, cases.len(), n).into_vec();
        idx.sort_unstable();
        picked.extend(idx.into_iter().map(|i| (class, &cases[i])));
    }
    picked.shuffle(&mut rng);

    picked
        .into_iter()
        .enumerate()
        .map(|(pos, (truth, case))| {
            let mask = read_mask(&case.mask)?;
            let mut slice_rng = rng_from_seed(split_seed(options.seed, pos as u64));
            let slice = select_slice(&mask, options.slice_selection, &mut slice_rng)
                .ok_or(Error::EmptyMask("study case tumor mask"))?;
            let radius_mm = extract_instances(&mask, None, Connectivity::TwentySix)?
                .iter()
                .map(|i| i.equivalent_radius_mm)
                .fold(0.0, f64::max);
            Ok(SessionItem {
                item_id: format!("item-{:03}", pos + 1),
                case_ref: case.case_ref.clone(),
                image: case.image.clone(),
                mask: case.mask.clone(),
                slice,
                truth,
                radius_mm,
            })
        })
        .collect()
}

/// PNG of an item's slice, optionally with the tumor outline.
pub fn render_item(item: &SessionItem, overlay: bool, window: WindowSpec) -> Result<Vec<u8>> {
    let volume = read_volume(&item.image)?;
    let image = if overlay {
        let mask = read_mask(&item.mask)?;
        render_slice_with_overlay(&volume, &mask, Axis::Z, item.slice, window)?
    } else {
        render_slice(&volume, Axis::Z, item.slice, window)?
    };
    image.to_png()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{phantom, PhantomSpec};
    use crate::volgrid::{write_mask, write_volume, Geometry};

    #[test]
    fn max_area_slice() {
        let g = Geometry::isotropic([4, 4, 5], 1.0).unwrap();
        let m = Mask::from_fn(g, |[x, y, z]| {
            (z == 1 && x == 0) || (z == 3 && x < 2 && y < 2) || (z == 4 && y == 3 && x < 2)
        });
        let mut rng = rng_from_seed(0);
        assert_eq!(select_slice(&m, SliceSelection::MaxArea, &mut rng), Some(1));
        for _ in 0..20 {
            let z = select_slice(&m, SliceSelection::Random, &mut rng).unwrap();
            assert!([1, 3, 4].contains(&z));
        }
        assert_eq!(select_slice(&Mask::zeros(g), SliceSelection::MaxArea, &mut rng), None);
    }

    fn write_cases(dir: &std::path::Path, prefix: &str, n: usize) -> Vec<StudyCase> {
        let p = phantom(&PhantomSpec::small());
        (0..n)
            .map(|i| {
                let (v, m) = p.with_lesion([16, 16, 10 + i], 3.0, 40.0);
                let image = dir.join(format!("{prefix}{i}.nii.gz"));
                let mask = dir.join(format!("{prefix}{i}_mask.nii.gz"));
                write_volume(&v, &image).unwrap();
                write_mask(&m, &mask).unwrap();
                StudyCase {
                    case_ref: format!("{prefix}{i}"),
                    image,
                    mask,
                }
            })
            .collect()
    }

    #[test]
    fn plan_is_balanced_and_seeded() {
        let dir = tempfile::tempdir().unwrap();
        let real = write_cases(dir.path(), "r", 4);
        let synth = write_cases(dir.path(), "s", 3);
        let opts = SessionOptions {
            n_per_class: 3,
            seed: 7,
            ..Default::default()
        };
        let a = plan_items(&real, &synth, &opts).unwrap();
        assert_eq!(a, plan_items(&real, &synth, &opts).unwrap());
        assert_eq!(a.len(), 6);
        assert_eq!(a.iter().filter(|i| i.truth == Truth::Synthetic).count(), 3);
        let mut refs: Vec<_> = a.iter().map(|i| i.case_ref.clone()).collect();
        refs.sort();
        refs.dedup();
        assert_eq!(refs.len(), 6);
        for item in &a {
            let z: usize = item.case_ref[1..].parse::<usize>().unwrap() + 10;
            assert_eq!(item.slice, z);
            assert!(item.radius_mm > 2.0 && item.radius_mm < 4.0);
        }
        let png = render_item(&a[0], true, WindowSpec::abdomen()).unwrap();
        assert_eq!(&png[1..4], b"PNG");
    }

    #[test]
    fn insufficient_items() {
        let dir = tempfile::tempdir().unwrap();
        let real = write_cases(dir.path(), "r", 1);
        let opts = SessionOptions {
            n_per_class: 2,
            ..Default::default()
        };
        assert!(matches!(
            plan_items(&real, &real, &opts),
            Err(Error::Session(SessionError::InsufficientItems {
                class: Truth::Real,
                ..
            }))
        ));
    }
}
