//! Equivalence checks against independent brute-force reference
//! implementations. The oracles here deliberately share no code with the
//! library: components via union-find over adjacent pixel pairs, Dice
//! via explicit pixel sets, fusion via per-pixel voting.

use std::collections::HashSet;

use maskfuse_core::{
    AnnotationSet, Connectivity, Mask, connected_components, dice, disagreement, intersection,
    mean_map, pairwise_matrix, remove_speckles, union,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mask(rng: &mut ChaCha8Rng, width: u32, height: u32, density: f64) -> Mask {
    let bits: Vec<bool> = (0..width as usize * height as usize)
        .map(|_| rng.random::<f64>() < density)
        .collect();
    Mask::from_fn(width, height, |x, y| {
        bits[y as usize * width as usize + x as usize]
    })
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, width: u32, height: u32) -> AnnotationSet {
    let mut set = AnnotationSet::new("oracle", width, height);
    for i in 0..n {
        set.push(format!("a{i}"), random_mask(rng, width, height, 0.4))
            .unwrap();
    }
    set
}

/// Union-find partition of the foreground under the given connectivity.
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Root id per foreground pixel, or usize::MAX for background.
fn component_roots_oracle(mask: &Mask, connectivity: Connectivity) -> Vec<usize> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let mut uf = UnionFind::new(w * h);
    let diagonal = connectivity == Connectivity::Eight;
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as u32, y as u32) {
                continue;
            }
            let mut neighbors = vec![(x as i64 + 1, y as i64), (x as i64, y as i64 + 1)];
            if diagonal {
                neighbors.push((x as i64 - 1, y as i64 + 1));
                neighbors.push((x as i64 + 1, y as i64 + 1));
            }
            for (nx, ny) in neighbors {
                if nx >= 0
                    && ny >= 0
                    && (nx as usize) < w
                    && (ny as usize) < h
                    && mask.get(nx as u32, ny as u32)
                {
                    uf.union(y * w + x, ny as usize * w + nx as usize);
                }
            }
        }
    }
    (0..w * h)
        .map(|i| {
            let x = (i % w) as u32;
            let y = (i / w) as u32;
            if mask.get(x, y) { uf.find(i) } else { usize::MAX }
        })
        .collect()
}

#[test]
fn components_match_union_find_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..100 {
        let mask = random_mask(&mut rng, 16, 16, 0.45);
        for connectivity in [Connectivity::Four, Connectivity::Eight] {
            let labels = connected_components(&mask, connectivity);
            let roots = component_roots_oracle(&mask, connectivity);

            // Same-label iff same-root, for every foreground pixel pair.
            let mut label_to_root = std::collections::HashMap::new();
            let mut root_to_label = std::collections::HashMap::new();
            let mut root_sizes = std::collections::HashMap::new();
            for y in 0..16 {
                for x in 0..16 {
                    if !mask.get(x, y) {
                        assert_eq!(labels.label(x, y), 0);
                        continue;
                    }
                    let label = labels.label(x, y);
                    let root = roots[y as usize * 16 + x as usize];
                    assert!(label > 0, "case {case}: foreground pixel unlabelled");
                    assert_eq!(
                        *label_to_root.entry(label).or_insert(root),
                        root,
                        "case {case}: label split across oracle components"
                    );
                    assert_eq!(
                        *root_to_label.entry(root).or_insert(label),
                        label,
                        "case {case}: oracle component split across labels"
                    );
                    *root_sizes.entry(root).or_insert(0usize) += 1;
                }
            }
            assert_eq!(labels.max_label() as usize, root_sizes.len());
            for (label, root) in &label_to_root {
                assert_eq!(labels.size_of(*label), root_sizes.get(root).copied());
            }
        }
    }
}

#[test]
fn dice_matches_pixel_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let a = random_mask(&mut rng, 16, 16, 0.3);
        let b = random_mask(&mut rng, 16, 16, 0.3);
        let set_a: HashSet<(u32, u32)> = a.foreground_pixels().collect();
        let set_b: HashSet<(u32, u32)> = b.foreground_pixels().collect();
        let expected = if set_a.is_empty() && set_b.is_empty() {
            1.0
        } else {
            2.0 * set_a.intersection(&set_b).count() as f64 / (set_a.len() + set_b.len()) as f64
        };
        assert_eq!(dice(&a, &b).unwrap(), expected);
    }
}

#[test]
fn pairwise_matrix_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let set = random_set(&mut rng, 5, 16, 16);
    let matrix = pairwise_matrix(&set).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let expected = if i == j {
                1.0
            } else {
                dice(set.mask(i), set.mask(j)).unwrap()
            };
            assert_eq!(matrix.score(i, j), expected, "entry ({i}, {j})");
        }
    }
}

#[test]
fn fusion_matches_per_pixel_voting() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..50 {
        let n = rng.random_range(1..=6);
        let set = random_set(&mut rng, n, 8, 8);
        let u = union(&set).unwrap();
        let i = intersection(&set).unwrap();
        let d = disagreement(&set).unwrap();
        let mean = mean_map(&set).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let votes = set.masks().iter().filter(|m| m.get(x, y)).count();
                assert_eq!(u.get(x, y), votes > 0);
                assert_eq!(i.get(x, y), votes == n);
                assert_eq!(d.get(x, y), votes > 0 && votes < n);
                assert_eq!(mean.count(x, y) as usize, votes);
            }
        }
    }
}

#[test]
fn speckle_removal_matches_component_filter_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..50 {
        let mask = random_mask(&mut rng, 16, 16, 0.25);
        for connectivity in [Connectivity::Four, Connectivity::Eight] {
            for min_size in [1usize, 2, 3, 5] {
                let cleaned = remove_speckles(&mask, min_size, connectivity);
                let roots = component_roots_oracle(&mask, connectivity);
                let mut sizes = std::collections::HashMap::new();
                for &root in roots.iter().filter(|&&r| r != usize::MAX) {
                    *sizes.entry(root).or_insert(0usize) += 1;
                }
                for y in 0..16 {
                    for x in 0..16 {
                        let root = roots[y as usize * 16 + x as usize];
                        let expected = root != usize::MAX && sizes[&root] >= min_size;
                        assert_eq!(cleaned.get(x, y), expected);
                    }
                }
            }
        }
    }
}
