//! Simulated annotator cohorts generated from a known ground-truth mask.
//!
//! Three noise kinds compose an annotator: component drops and spurious
//! additions, per-component boundary jitter, and isolated speckle pixels.
//!
//! # Randomness contract
//!
//! Every operation derives its randomness from a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`. The draw sequences below are part of the
//! external contract; equal inputs and seeds reproduce masks bit for bit.
//!
//! * [`perturb_boundary`] — for each component in ascending label order
//!   (raster order of first pixels): one `random_bool(0.5)` (`true` =
//!   dilate, `false` = erode), then one `random_range(0..=radius)` for
//!   the offset. `radius = 0` returns the input without any draws.
//! * [`drop_add_components`] — one `random::<f64>()` per ground-truth
//!   component in inventory order (dropped when below `p_drop`), then a
//!   single `random::<f64>()` (a spurious component is added when below
//!   `p_add`), then per placement attempt one `random_range` for x and
//!   one for y over the valid top-left positions.
//! * [`add_speckle`] — per placed pixel, repeated attempts of one
//!   `random_range(0..width)` then one `random_range(0..height)` until an
//!   isolated background position is found.
//! * [`simulate_annotator`] — stage seeds are derived from the profile
//!   seed as `seed ^ (k · 0x9E3779B97F4A7C15)` with k = 1 (drop/add),
//!   2 (jitter), 3 (speckle).

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agreement::AnnotationSet;
use crate::error::{Error, Result};
use crate::mask::{Connectivity, Mask, connected_components};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Attempts allowed when searching for a spurious-component position.
const ADD_ATTEMPTS: u32 = 1_000;
/// Attempts allowed per speckle pixel.
const SPECKLE_ATTEMPTS: u32 = 10_000;

/// Noise parameters describing one simulated annotator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotatorProfile {
    /// Maximum per-component dilation/erosion offset in pixels.
    pub jitter_radius: u32,
    /// Probability of deleting each ground-truth component.
    pub p_drop: f64,
    /// Probability of adding one spurious component.
    pub p_add: f64,
    /// Pixel count of a spurious component.
    pub add_size: u32,
    /// Number of isolated noise pixels to scatter.
    pub speckle_count: u32,
    /// RNG seed; distinct seeds make distinct annotators.
    pub seed: u64,
}

impl AnnotatorProfile {
    /// Profile that reproduces the truth exactly.
    pub fn noiseless(seed: u64) -> Self {
        AnnotatorProfile {
            jitter_radius: 0,
            p_drop: 0.0,
            p_add: 0.0,
            add_size: 1,
            speckle_count: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_drop) {
            return Err(Error::InvalidProbability {
                field: "p_drop",
                value: self.p_drop,
            });
        }
        if !(0.0..=1.0).contains(&self.p_add) {
            return Err(Error::InvalidProbability {
                field: "p_add",
                value: self.p_add,
            });
        }
        if self.add_size == 0 {
            return Err(Error::InvalidAddSize);
        }
        Ok(())
    }
}

/// A ground-truth mask together with its component inventory, the unit
/// on which drop decisions are made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthScene {
    truth: Mask,
    connectivity: Connectivity,
    components: Vec<Vec<(u32, u32)>>,
}

impl GroundTruthScene {
    pub fn new(truth: Mask, connectivity: Connectivity) -> Self {
        let labels = connected_components(&truth, connectivity);
        let mut components: Vec<Vec<(u32, u32)>> =
            (0..labels.max_label()).map(|_| Vec::new()).collect();
        for (x, y) in truth.foreground_pixels() {
            components[labels.label(x, y) as usize - 1].push((x, y));
        }
        GroundTruthScene {
            truth,
            connectivity,
            components,
        }
    }

    pub fn truth(&self) -> &Mask {
        &self.truth
    }

    pub fn connectivity(&self) -> Connectivity {
        self.connectivity
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Pixel lists of the truth components, in label order.
    pub fn components(&self) -> &[Vec<(u32, u32)>] {
        &self.components
    }
}

/// Offsets of the disc structuring element of radius `r`: all (dx, dy)
/// with dx² + dy² ≤ r².
fn disc_offsets(radius: u32) -> Vec<(i32, i32)> {
    let r = radius as i64;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offsets.push((dx as i32, dy as i32));
            }
        }
    }
    offsets
}

/// Jitters each component boundary independently: a seeded coin picks
/// dilation or erosion and the disc offset is uniform in [0, radius].
/// Components are taken under 8-connectivity; erosion is relative to the
/// component itself, so nearby components never shield each other.
pub fn perturb_boundary(truth: &Mask, radius: u32, seed: u64) -> Mask {
    if radius == 0 {
        return truth.clone();
    }
    let labels = connected_components(truth, Connectivity::Eight);
    let (width, height) = truth.dimensions();
    let mut out = Mask::new(width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut component_pixels: Vec<Vec<(u32, u32)>> =
        (0..labels.max_label()).map(|_| Vec::new()).collect();
    for (x, y) in truth.foreground_pixels() {
        component_pixels[labels.label(x, y) as usize - 1].push((x, y));
    }

    for (index, pixels) in component_pixels.iter().enumerate() {
        let label = index as u32 + 1;
        let dilate = rng.random_bool(0.5);
        let offset = rng.random_range(0..=radius);
        if offset == 0 {
            for &(x, y) in pixels {
                out.set(x, y, true);
            }
            continue;
        }
        let disc = disc_offsets(offset);
        if dilate {
            for &(x, y) in pixels {
                for &(dx, dy) in &disc {
                    let nx = x as i64 + dx as i64;
                    let ny = y as i64 + dy as i64;
                    if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                        out.set(nx as u32, ny as u32, true);
                    }
                }
            }
        } else {
            for &(x, y) in pixels {
                let survives = disc.iter().all(|&(dx, dy)| {
                    let nx = x as i64 + dx as i64;
                    let ny = y as i64 + dy as i64;
                    nx >= 0
                        && ny >= 0
                        && nx < width as i64
                        && ny < height as i64
                        && labels.label(nx as u32, ny as u32) == label
                });
                if survives {
                    out.set(x, y, true);
                }
            }
        }
    }
    out
}

/// Truth dilated by one pixel in every direction including diagonals;
/// spurious components placed outside this zone can never merge with the
/// truth under either connectivity.
fn forbidden_zone(truth: &Mask) -> Mask {
    let (width, height) = truth.dimensions();
    let mut zone = truth.clone();
    for (x, y) in truth.foreground_pixels() {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx >= 0 && ny >= 0 && nx < width as i64 && ny < height as i64 {
                    zone.set(nx as u32, ny as u32, true);
                }
            }
        }
    }
    zone
}

/// Cell coordinates of a spurious component of `size` pixels: the first
/// `size` cells, row-major, of the smallest square that holds them.
fn component_cells(size: u32) -> Vec<(u32, u32)> {
    let mut side = size.isqrt();
    if side * side < size {
        side += 1;
    }
    (0..size).map(|i| (i % side, i / side)).collect()
}

/// Deletes each ground-truth component with probability `p_drop` and,
/// with probability `p_add`, places one spurious component of `add_size`
/// pixels at a random background location clear of the truth.
pub fn drop_add_components(
    mask: &Mask,
    scene: &GroundTruthScene,
    p_drop: f64,
    p_add: f64,
    add_size: u32,
    seed: u64,
) -> Result<Mask> {
    if !(0.0..=1.0).contains(&p_drop) {
        return Err(Error::InvalidProbability {
            field: "p_drop",
            value: p_drop,
        });
    }
    if !(0.0..=1.0).contains(&p_add) {
        return Err(Error::InvalidProbability {
            field: "p_add",
            value: p_add,
        });
    }
    if add_size == 0 {
        return Err(Error::InvalidAddSize);
    }
    if mask.dimensions() != scene.truth.dimensions() {
        return Err(Error::dimension_mismatch(
            scene.truth.dimensions(),
            mask.dimensions(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = mask.clone();
    for pixels in scene.components() {
        if rng.random::<f64>() < p_drop {
            for &(x, y) in pixels {
                out.set(x, y, false);
            }
        }
    }

    if rng.random::<f64>() < p_add {
        let (width, height) = out.dimensions();
        let cells = component_cells(add_size);
        let bbox_w = cells.iter().map(|&(cx, _)| cx).max().unwrap() + 1;
        let bbox_h = cells.iter().map(|&(_, cy)| cy).max().unwrap() + 1;
        if bbox_w > width || bbox_h > height {
            return Err(Error::NoRoomForComponent { add_size });
        }
        let zone = forbidden_zone(&scene.truth);
        let mut placed = false;
        for _ in 0..ADD_ATTEMPTS {
            let x0 = rng.random_range(0..=width - bbox_w);
            let y0 = rng.random_range(0..=height - bbox_h);
            if cells.iter().all(|&(cx, cy)| !zone.get(x0 + cx, y0 + cy)) {
                for &(cx, cy) in &cells {
                    out.set(x0 + cx, y0 + cy, true);
                }
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::NoRoomForComponent { add_size });
        }
    }
    Ok(out)
}

/// Scatters `count` isolated foreground pixels over the background. Each
/// placement requires an empty 8-neighborhood at the time it is made, so
/// new speckles never touch existing foreground or each other.
pub fn add_speckle(mask: &Mask, count: u32, seed: u64) -> Result<Mask> {
    let mut out = mask.clone();
    let (width, height) = mask.dimensions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for placed in 0..count {
        let mut done = false;
        for _ in 0..SPECKLE_ATTEMPTS {
            let x = rng.random_range(0..width);
            let y = rng.random_range(0..height);
            if out.get(x, y) {
                continue;
            }
            let isolated = (-1i64..=1).all(|dy| {
                (-1i64..=1).all(|dx| {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    nx < 0
                        || ny < 0
                        || nx >= width as i64
                        || ny >= height as i64
                        || !out.get(nx as u32, ny as u32)
                })
            });
            if isolated {
                out.set(x, y, true);
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::SpeckleBudgetExhausted {
                placed,
                requested: count,
            });
        }
    }
    Ok(out)
}

fn stage_seed(seed: u64, stage: u64) -> u64 {
    seed ^ stage.wrapping_mul(GOLDEN_GAMMA)
}

/// Produces one simulated annotation: drop/add, then boundary jitter,
/// then speckle, each on its own stage seed derived from the profile.
pub fn simulate_annotator(scene: &GroundTruthScene, profile: &AnnotatorProfile) -> Result<Mask> {
    profile.validate()?;
    let dropped = drop_add_components(
        &scene.truth,
        scene,
        profile.p_drop,
        profile.p_add,
        profile.add_size,
        stage_seed(profile.seed, 1),
    )?;
    let jittered = perturb_boundary(&dropped, profile.jitter_radius, stage_seed(profile.seed, 2));
    add_speckle(&jittered, profile.speckle_count, stage_seed(profile.seed, 3))
}

/// Simulates a cohort, one mask per profile, with annotator ids
/// `sim_000`, `sim_001`, ...
pub fn simulate_cohort(
    scene: &GroundTruthScene,
    profiles: &[AnnotatorProfile],
) -> Result<AnnotationSet> {
    if profiles.is_empty() {
        return Err(Error::NoProfiles);
    }
    let (width, height) = scene.truth.dimensions();
    let mut set = AnnotationSet::new("synthetic", width, height);
    for (i, profile) in profiles.iter().enumerate() {
        set.push(format!("sim_{i:03}"), simulate_annotator(scene, profile)?)?;
    }
    Ok(set)
}
