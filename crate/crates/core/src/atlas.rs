//! Parameter-space sweeps: classify attractors over grids of map parameters,
//! extract connected regions of one class, and compare rescaled return maps
//! against their limit family over a grid of target parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::{classify_attractor, AttractorClass, ClassifyConfig};
use crate::maps::henon::{fixed_points, Henon3d, HenonParams};
use crate::maps::limit::{LimitCase1, LimitCase2};
use crate::maps::State3;
use crate::model::{Model, TangencyCase};
use crate::rescale::{limit_fixed_point, rescaled_return_map_for_targets, LimitParams};

/// Inclusive uniform grid on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl SweepAxis {
    pub fn new(min: f64, max: f64, n: usize) -> SweepAxis {
        SweepAxis { min, max, n }
    }

    /// Grid values, both endpoints included.
    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.n)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n < 2 {
            return self.min;
        }
        self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64
    }

    /// Grid spacing, zero for degenerate axes.
    pub fn step(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.n - 1) as f64
        }
    }
}

/// Uniform grid values with both endpoints included.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n)
            .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// How the initial state of each classification orbit is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedPolicy {
    /// Always start at the origin.
    Origin,
    /// Start near the fixed point with the smallest leading multiplier,
    /// falling back to the origin when no real fixed point exists.
    NearFixedPoint,
}

/// Sweep specification over the three map parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m1: SweepAxis,
    pub m2: SweepAxis,
    pub b: SweepAxis,
    pub seed: SeedPolicy,
    pub classify: ClassifyConfig,
}

impl SweepConfig {
    pub fn cell_count(&self) -> usize {
        self.m1.n * self.m2.n * self.b.n
    }
}

/// One classified grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasCell {
    pub index: [usize; 3],
    pub params: HenonParams,
    pub seed: State3,
    pub class: AttractorClass,
}

/// Classified parameter grid, cells in row-major order (m1, then m2, then b).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atlas {
    pub config: SweepConfig,
    pub cells: Vec<AtlasCell>,
}

/// Initial state for one parameter triple under the given policy: an offset
/// from the most weakly repelling fixed point keeps the orbit near whatever
/// local attractor has replaced it.
pub fn seed_state(p: &HenonParams, policy: SeedPolicy) -> State3 {
    const OFFSET: f64 = 1e-3;
    match policy {
        SeedPolicy::Origin => State3::zeros(),
        SeedPolicy::NearFixedPoint => {
            let spread = |fp: &crate::maps::henon::FixedPointAnalysis| {
                fp.multipliers
                    .iter()
                    .map(|m| m.norm())
                    .fold(0.0f64, f64::max)
            };
            fixed_points(p)
                .iter()
                .min_by(|a, b| {
                    spread(a)
                        .partial_cmp(&spread(b))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .map(|fp| fp.point + State3::new(OFFSET, OFFSET, OFFSET))
                .unwrap_or_else(State3::zeros)
        }
    }
}

/// Classifies every cell of the grid in parallel.
pub fn sweep_grid(config: &SweepConfig) -> Atlas {
    let (n1, n2, n3) = (config.m1.n, config.m2.n, config.b.n);
    let cells: Vec<AtlasCell> = (0..n1 * n2 * n3)
        .into_par_iter()
        .map(|flat| {
            let i = flat / (n2 * n3);
            let j = (flat / n3) % n2;
            let l = flat % n3;
            let params = HenonParams {
                m1: config.m1.value(i),
                m2: config.m2.value(j),
                b: config.b.value(l),
            };
            let seed = seed_state(&params, config.seed);
            let class = classify_attractor(&Henon3d { params }, seed, &config.classify);
            AtlasCell {
                index: [i, j, l],
                params,
                seed,
                class,
            }
        })
        .collect();
    Atlas {
        config: config.clone(),
        cells,
    }
}

impl Atlas {
    pub fn cell(&self, i: usize, j: usize, l: usize) -> &AtlasCell {
        &self.cells[(i * self.config.m2.n + j) * self.config.b.n + l]
    }

    /// Fraction of cells with the given class label.
    pub fn fraction(&self, label: &str) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        let hits = self
            .cells
            .iter()
            .filter(|c| c.class.kind.label() == label)
            .count();
        hits as f64 / self.cells.len() as f64
    }
}

/// A face-connected component of cells sharing a class label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub cells: Vec<[usize; 3]>,
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
}

impl Region {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Per-coordinate distance from a parameter point to the bounding box;
    /// zero in a coordinate whose interval contains the point.
    pub fn distance_to(&self, point: [f64; 3]) -> [f64; 3] {
        let mut d = [0.0; 3];
        for a in 0..3 {
            d[a] = (self.bbox_min[a] - point[a])
                .max(point[a] - self.bbox_max[a])
                .max(0.0);
        }
        d
    }
}

/// Face-connected components of cells whose class label matches, largest
/// first.
pub fn region_extract(atlas: &Atlas, label: &str) -> Vec<Region> {
    let (n1, n2, n3) = (atlas.config.m1.n, atlas.config.m2.n, atlas.config.b.n);
    let flat = |i: usize, j: usize, l: usize| (i * n2 + j) * n3 + l;
    let matches: Vec<bool> = atlas
        .cells
        .iter()
        .map(|c| c.class.kind.label() == label)
        .collect();
    let mut visited = vec![false; atlas.cells.len()];
    let mut regions = Vec::new();
    for start in 0..atlas.cells.len() {
        if !matches[start] || visited[start] {
            continue;
        }
        let mut stack = vec![start];
        visited[start] = true;
        let mut members = Vec::new();
        while let Some(idx) = stack.pop() {
            let [i, j, l] = atlas.cells[idx].index;
            members.push([i, j, l]);
            let mut push = |ni: usize, nj: usize, nl: usize| {
                let f = flat(ni, nj, nl);
                if matches[f] && !visited[f] {
                    visited[f] = true;
                    stack.push(f);
                }
            };
            if i > 0 {
                push(i - 1, j, l);
            }
            if i + 1 < n1 {
                push(i + 1, j, l);
            }
            if j > 0 {
                push(i, j - 1, l);
            }
            if j + 1 < n2 {
                push(i, j + 1, l);
            }
            if l > 0 {
                push(i, j, l - 1);
            }
            if l + 1 < n3 {
                push(i, j, l + 1);
            }
        }
        let mut bbox_min = [f64::INFINITY; 3];
        let mut bbox_max = [f64::NEG_INFINITY; 3];
        for &[i, j, l] in &members {
            let p = [
                atlas.config.m1.value(i),
                atlas.config.m2.value(j),
                atlas.config.b.value(l),
            ];
            for a in 0..3 {
                bbox_min[a] = bbox_min[a].min(p[a]);
                bbox_max[a] = bbox_max[a].max(p[a]);
            }
        }
        regions.push(Region {
            label: label.to_string(),
            cells: members,
            bbox_min,
            bbox_max,
        });
    }
    regions.sort_by(|a, b| b.cells.len().cmp(&a.cells.len()));
    regions
}

/// Fraction of label-matching cells that touch a non-matching neighbor or
/// the grid boundary; a rough measure of how filamented the region is.
pub fn boundary_fraction(atlas: &Atlas, label: &str) -> f64 {
    let (n1, n2, n3) = (atlas.config.m1.n, atlas.config.m2.n, atlas.config.b.n);
    let flat = |i: usize, j: usize, l: usize| (i * n2 + j) * n3 + l;
    let matches: Vec<bool> = atlas
        .cells
        .iter()
        .map(|c| c.class.kind.label() == label)
        .collect();
    let mut total = 0usize;
    let mut boundary = 0usize;
    for cell in &atlas.cells {
        let [i, j, l] = cell.index;
        if !matches[flat(i, j, l)] {
            continue;
        }
        total += 1;
        let mut on_boundary = false;
        let mut check = |ok: bool, f: usize| {
            if !ok || !matches[f] {
                on_boundary = true;
            }
        };
        check(i > 0, if i > 0 { flat(i - 1, j, l) } else { 0 });
        check(i + 1 < n1, if i + 1 < n1 { flat(i + 1, j, l) } else { 0 });
        check(j > 0, if j > 0 { flat(i, j - 1, l) } else { 0 });
        check(j + 1 < n2, if j + 1 < n2 { flat(i, j + 1, l) } else { 0 });
        check(l > 0, if l > 0 { flat(i, j, l - 1) } else { 0 });
        check(l + 1 < n3, if l + 1 < n3 { flat(i, j, l + 1) } else { 0 });
        if on_boundary {
            boundary += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        boundary as f64 / total as f64
    }
}

/// One cell of a rescaled-versus-limit comparison grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaKCell {
    pub index: [usize; 2],
    pub targets: (f64, f64),
    pub effective: LimitParams,
    pub rescaled: AttractorClass,
    pub limit: AttractorClass,
    pub agree: bool,
}

/// Attractor classifications of the k-th rescaled return map against its
/// limit family over a grid of target parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaKScan {
    pub k: usize,
    pub case: TangencyCase,
    pub m1: SweepAxis,
    pub m2: SweepAxis,
    pub cells: Vec<DeltaKCell>,
    pub agreement: f64,
}

/// For each target-parameter cell, classifies the attractor of the assembled
/// k-th rescaled return map and of the limit family at the map's effective
/// parameters, and reports the fraction of cells where the class labels
/// agree.
pub fn delta_k_scan(
    model: &Model,
    k: usize,
    m1: SweepAxis,
    m2: SweepAxis,
    config: &ClassifyConfig,
) -> Result<DeltaKScan> {
    let cells: Result<Vec<DeltaKCell>> = (0..m1.n * m2.n)
        .into_par_iter()
        .map(|flat| {
            let i = flat / m2.n;
            let j = flat % m2.n;
            let targets = (m1.value(i), m2.value(j));
            let (map, _) = rescaled_return_map_for_targets(model, k, targets.0, targets.1)?;
            let seed = limit_fixed_point(map.case, map.effective)
                .map(|fp| fp + State3::new(1e-3, 1e-3, 1e-3))
                .unwrap_or_else(|_| State3::zeros());
            let rescaled = classify_attractor(&map, seed, config);
            let limit = match map.case {
                TangencyCase::CaseII => classify_attractor(
                    &LimitCase2 {
                        m1: map.effective.m1,
                        m2: map.effective.m2,
                        m3: map.effective.m3,
                    },
                    seed,
                    config,
                ),
                _ => classify_attractor(
                    &LimitCase1 {
                        m1: map.effective.m1,
                        m2: map.effective.m2,
                        m3: map.effective.m3,
                    },
                    seed,
                    config,
                ),
            };
            let agree = rescaled.kind.label() == limit.kind.label();
            Ok(DeltaKCell {
                index: [i, j],
                targets,
                effective: map.effective,
                rescaled,
                limit,
                agree,
            })
        })
        .collect();
    let cells = cells?;
    if cells.is_empty() {
        return Err(Error::Config("empty target grid".into()));
    }
    let agreement = cells.iter().filter(|c| c.agree).count() as f64 / cells.len() as f64;
    Ok(DeltaKScan {
        k,
        case: model.case,
        m1,
        m2,
        cells,
        agreement,
    })
}
