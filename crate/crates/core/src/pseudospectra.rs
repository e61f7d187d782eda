//! Grid sampling of ε-pseudospectra and their circular inclusion regions.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{departure_budget, BoundFunction, BudgetStrategy, NonNormalityBudget};
use crate::error::{Error, Result};
use crate::linalg::{c64, distance_to_set, eigenvalues, operator_norm, smallest_singular_value_shifted, OperatorMatrix, C64};
use crate::weights::WeightSpec;

/// Relative width of the band around `ε` in which a node is reported as
/// indeterminate.
pub const INDETERMINATE_BAND: f64 = 1e-12;

/// Axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite()) && re_min < re_max && im_min < im_max;
        if !ok {
            return Err(Error::DegenerateRegion(format!("[{re_min}, {re_max}] x [{im_min}, {im_max}]")));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    /// Square centred on the spectrum's bounding box, padded by `pad` on every side.
    pub fn around(points: &[C64], pad: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for z in points {
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(z.im);
            y1 = y1.max(z.im);
        }
        let half = 0.5 * (x1 - x0).max(y1 - y0) + pad;
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        Self::new(cx - half, cx + half, cy - half, cy + half)
    }
}

/// Node classification relative to `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Outside = 0,
    Inside = 1,
    /// `|s_min − ε|` is within the rounding band.
    Indeterminate = 2,
}

/// `s_min(zI − A)` sampled on a `resolution × resolution` lattice that
/// includes the region's corners.
#[derive(Debug, Clone, Serialize)]
pub struct PseudoGrid {
    pub region: Region,
    pub resolution: usize,
    pub epsilon: f64,
    /// Row-major over `(imaginary index, real index)`.
    pub values: Vec<f64>,
    pub operator_norm: f64,
}

impl PseudoGrid {
    pub fn spacing(&self) -> (f64, f64) {
        let d = (self.resolution - 1) as f64;
        ((self.region.re_max - self.region.re_min) / d, (self.region.im_max - self.region.im_min) / d)
    }

    /// Length of a cell diagonal.
    pub fn cell_diagonal(&self) -> f64 {
        let (hx, hy) = self.spacing();
        hx.hypot(hy)
    }

    pub fn node(&self, idx: usize) -> C64 {
        let (hx, hy) = self.spacing();
        let (iy, ix) = (idx / self.resolution, idx % self.resolution);
        c64(self.region.re_min + ix as f64 * hx, self.region.im_min + iy as f64 * hy)
    }

    pub fn nodes(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.values.len()).map(|i| self.node(i))
    }

    /// Open comparison `s_min < ε`.
    pub fn is_member(&self, idx: usize) -> bool {
        self.values[idx] < self.epsilon
    }

    pub fn membership(&self, idx: usize) -> Membership {
        let band = INDETERMINATE_BAND * (1.0 + self.operator_norm);
        let s = self.values[idx];
        if (s - self.epsilon).abs() < band {
            Membership::Indeterminate
        } else if s < self.epsilon {
            Membership::Inside
        } else {
            Membership::Outside
        }
    }

    pub fn mask(&self) -> Vec<bool> {
        (0..self.values.len()).map(|i| self.is_member(i)).collect()
    }

    /// The same samples classified against another `ε`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self { epsilon, ..self.clone() })
    }

    /// Nearest lattice node to `z`, clamped into the region.
    pub fn nearest(&self, z: C64) -> usize {
        let (hx, hy) = self.spacing();
        let clamp = |t: f64| t.round().clamp(0.0, (self.resolution - 1) as f64) as usize;
        let ix = clamp((z.re - self.region.re_min) / hx);
        let iy = clamp((z.im - self.region.im_min) / hy);
        iy * self.resolution + ix
    }

    /// CSV with header `re,im,s_min,member`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,s_min,member\n");
        for (i, z) in self.nodes().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", z.re, z.im, self.values[i], self.membership(i) as u8));
        }
        out
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive and finite, got {epsilon}")));
    }
    Ok(())
}

/// Samples `s_min(zI − A)` at every node, in parallel.
pub fn pseudospectrum_grid(a: &OperatorMatrix, region: Region, resolution: usize, epsilon: f64) -> Result<PseudoGrid> {
    a.require_square()?;
    check_epsilon(epsilon)?;
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 2, got {resolution}")));
    }
    // revalidate in case the caller built the struct literally
    let region = Region::new(region.re_min, region.re_max, region.im_min, region.im_max)?;
    let mut grid = PseudoGrid {
        region,
        resolution,
        epsilon,
        values: Vec::new(),
        operator_norm: operator_norm(a)?,
    };
    let m = a.as_matrix();
    grid.values = (0..resolution * resolution)
        .into_par_iter()
        .map(|i| smallest_singular_value_shifted(m, grid.node(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid)
}

/// Disks about the eigenvalues: radius `ε` lies inside the pseudospectrum,
/// radius `outer_radius` contains it.
#[derive(Debug, Clone, Serialize)]
pub struct InclusionDisks {
    #[serde(serialize_with = "crate::report::serialize_complex_list")]
    pub centers: Vec<C64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub budget: NonNormalityBudget,
}

impl InclusionDisks {
    pub fn in_inner(&self, z: C64) -> bool {
        distance_to_set(z, &self.centers) < self.inner_radius
    }

    pub fn in_outer(&self, z: C64) -> bool {
        distance_to_set(z, &self.centers) < self.outer_radius
    }
}

/// `bf` must be `BoundFunction::for_weight(w, ..)`.
pub fn inclusion_disks(
    a: &OperatorMatrix,
    w: &WeightSpec,
    bf: &BoundFunction,
    strategy: &BudgetStrategy,
    epsilon: f64,
) -> Result<InclusionDisks> {
    check_epsilon(epsilon)?;
    let budget = departure_budget(a, w, strategy)?;
    let centers = eigenvalues(a)?.into_values();
    let outer_radius = if budget.is_normal() {
        epsilon
    } else {
        // never below ε even if rounding in the inversion nudges it
        bf.scaled_h(budget.nu_upper, epsilon)?.max(epsilon)
    };
    Ok(InclusionDisks {
        centers,
        inner_radius: epsilon,
        outer_radius,
        budget,
    })
}

/// Nodes breaking the inclusion chain `inner ⊆ mask ⊆ outer` by more than
/// `slack` (a distance, normally one cell diagonal).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SandwichReport {
    pub nodes: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

pub fn check_sandwich(grid: &PseudoGrid, disks: &InclusionDisks, slack: f64) -> SandwichReport {
    let mut rep = SandwichReport {
        nodes: grid.values.len(),
        ..Default::default()
    };
    for (i, z) in grid.nodes().enumerate() {
        let d = distance_to_set(z, &disks.centers);
        let member = grid.is_member(i);
        if d < disks.inner_radius - slack && !member {
            rep.inner_violations += 1;
        }
        if member && d >= disks.outer_radius + slack {
            rep.outer_violations += 1;
        }
    }
    rep
}
