//! Dense supervision maps for the center, offset and encoding heads, and
//! the inverse step: peak extraction and detection assembly.
//!
//! Grids are indexed by cell `(x, y)` at `1/R` of the input resolution.
//! Offsets are in cells, encodings in input pixels.

use crate::codec::{decode, encode, PolarEncoding};
use crate::error::{Error, Result};
use crate::geom::{OrientedBox, Point2};

/// Default downsampling rate between input pixels and grid cells.
pub const DEFAULT_DOWNSAMPLE: usize = 4;

/// Lower bound on the heatmap Gaussian's standard deviation, in cells.
pub const SIGMA_FLOOR: f64 = 0.5;

/// Dense row-major grid of `channels` reals per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Center heatmap, one channel in `[0, 1]`.
pub type HeatmapGrid = Grid;
/// Sub-cell center offsets, two channels `(dx, dy)`.
pub type OffsetGrid = Grid;
/// Polar encodings, `N` channels.
pub type EncodingGrid = Grid;

impl Grid {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::DimMismatch(format!(
                "{}x{}x{} grid needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> GridDims {
        GridDims::new(self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        (y * self.width + x) * self.channels + c
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.index(x, y, c)]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let i = self.index(x, y, 0);
        &self.data[i..i + self.channels]
    }

    pub fn cell_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = self.index(x, y, 0);
        &mut self.data[i..i + self.channels]
    }

    pub(crate) fn check_shape(&self, other: &Grid, what: &str) -> Result<()> {
        if self.width != other.width
            || self.height != other.height
            || self.channels != other.channels
        {
            return Err(Error::DimMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

impl GridDims {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    /// Grid covering an input image of `width x height` pixels at rate `r`.
    pub fn for_image(width: usize, height: usize, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument(
                "downsample rate must be >= 1".into(),
            ));
        }
        Ok(Self::new(width.div_ceil(r), height.div_ceil(r)))
    }
}

/// Boolean marker over grid cells that carry a target center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl CenterMask {
    pub fn new(dims: GridDims) -> Self {
        Self {
            width: dims.width,
            height: dims.height,
            cells: vec![false; dims.width * dims.height],
        }
    }

    pub fn dims(&self) -> GridDims {
        GridDims::new(self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize) {
        self.cells[y * self.width + x] = true;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// Marked cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i % self.width, i / self.width))
    }
}

/// One ground-truth target after assignment to its center cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterTarget {
    /// Index of the box in the caller's list.
    pub index: usize,
    pub cell: (usize, usize),
    /// Center in input pixels.
    pub center: Point2,
    /// `center / R - cell`, each component in `[0, 1)`.
    pub offset: (f64, f64),
    pub gt: OrientedBox,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetWarning {
    /// Two centers fell into the same cell; the larger box was kept.
    Collision {
        cell: (usize, usize),
        kept: usize,
        dropped: usize,
    },
    /// The Gaussian's standard deviation was raised to [`SIGMA_FLOOR`].
    SigmaClamped { index: usize, sigma: f64 },
}

/// A generated supervision grid with its center mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMap {
    pub grid: Grid,
    pub mask: CenterMask,
    pub centers: Vec<CenterTarget>,
    pub warnings: Vec<TargetWarning>,
}

/// Maps every box to its center cell, resolving collisions in favour of the
/// larger box (the later one on equal areas). Output is ordered by box index.
pub fn assign_centers(
    boxes: &[OrientedBox],
    dims: GridDims,
    r: usize,
) -> Result<(Vec<CenterTarget>, Vec<TargetWarning>)> {
    if r == 0 {
        return Err(Error::InvalidArgument(
            "downsample rate must be >= 1".into(),
        ));
    }
    let rate = r as f64;
    let mut by_cell: Vec<Option<CenterTarget>> = vec![None; dims.width * dims.height];
    let mut warnings = Vec::new();
    for (index, b) in boxes.iter().enumerate() {
        let center = b.center();
        let (gx, gy) = (center.x / rate, center.y / rate);
        let (fx, fy) = (gx.floor(), gy.floor());
        if fx < 0.0 || fy < 0.0 || fx >= dims.width as f64 || fy >= dims.height as f64 {
            return Err(Error::InvalidArgument(format!(
                "box {index} center ({}, {}) lies outside the {}x{} grid",
                center.x, center.y, dims.width, dims.height
            )));
        }
        let cell = (fx as usize, fy as usize);
        let target = CenterTarget {
            index,
            cell,
            center,
            offset: (gx - fx, gy - fy),
            gt: *b,
        };
        let slot = &mut by_cell[cell.1 * dims.width + cell.0];
        match slot {
            Some(prev) => {
                let (kept, dropped) = if b.area() >= prev.gt.area() {
                    let dropped = prev.index;
                    *prev = target;
                    (index, dropped)
                } else {
                    (prev.index, index)
                };
                warnings.push(TargetWarning::Collision {
                    cell,
                    kept,
                    dropped,
                });
            }
            None => *slot = Some(target),
        }
    }
    let mut centers: Vec<CenterTarget> = by_cell.into_iter().flatten().collect();
    centers.sort_by_key(|t| t.index);
    Ok((centers, warnings))
}

fn mask_of(centers: &[CenterTarget], dims: GridDims) -> CenterMask {
    let mut mask = CenterMask::new(dims);
    for t in centers {
        mask.set(t.cell.0, t.cell.1);
    }
    mask
}

/// Center heatmap: an isotropic Gaussian per box with
/// `sigma = short side / (3 R)` cells, peaked at the center cell and
/// truncated at `3 sigma`. Overlaps keep the element-wise maximum.
pub fn gaussian_heatmap(boxes: &[OrientedBox], dims: GridDims, r: usize) -> Result<TargetMap> {
    let (centers, mut warnings) = assign_centers(boxes, dims, r)?;
    let mut grid = Grid::zeros(dims.width, dims.height, 1);
    for (index, b) in boxes.iter().enumerate() {
        let c = b.center();
        let cx = (c.x / r as f64).floor() as i64;
        let cy = (c.y / r as f64).floor() as i64;
        let mut sigma = b.short_side() / (3.0 * r as f64);
        if sigma < SIGMA_FLOOR {
            warnings.push(TargetWarning::SigmaClamped { index, sigma });
            sigma = SIGMA_FLOOR;
        }
        stamp_gaussian(&mut grid, cx, cy, sigma);
    }
    let mask = mask_of(&centers, dims);
    Ok(TargetMap {
        grid,
        mask,
        centers,
        warnings,
    })
}

fn stamp_gaussian(grid: &mut Grid, cx: i64, cy: i64, sigma: f64) {
    let radius = (3.0 * sigma).ceil() as i64;
    let two_var = 2.0 * sigma * sigma;
    let y_lo = (cy - radius).max(0);
    let y_hi = (cy + radius).min(grid.height as i64 - 1);
    let x_lo = (cx - radius).max(0);
    let x_hi = (cx + radius).min(grid.width as i64 - 1);
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let (du, dv) = ((x - cx) as f64, (y - cy) as f64);
            let v = (-(du * du + dv * dv) / two_var).exp();
            let i = grid.index(x as usize, y as usize, 0);
            if v > grid.data[i] {
                grid.data[i] = v;
            }
        }
    }
}

/// Sub-cell offset targets `c / R - floor(c / R)` at each center cell.
pub fn offset_targets(boxes: &[OrientedBox], dims: GridDims, r: usize) -> Result<TargetMap> {
    let (centers, warnings) = assign_centers(boxes, dims, r)?;
    let mut grid = Grid::zeros(dims.width, dims.height, 2);
    for t in &centers {
        let cell = grid.cell_mut(t.cell.0, t.cell.1);
        cell[0] = t.offset.0;
        cell[1] = t.offset.1;
    }
    let mask = mask_of(&centers, dims);
    Ok(TargetMap {
        grid,
        mask,
        centers,
        warnings,
    })
}

/// Polar encodings (input pixels) at each center cell.
pub fn encoding_targets(
    boxes: &[OrientedBox],
    n: usize,
    dims: GridDims,
    r: usize,
) -> Result<TargetMap> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "N must be at least 3, got {n}"
        )));
    }
    let (centers, warnings) = assign_centers(boxes, dims, r)?;
    let mut grid = Grid::zeros(dims.width, dims.height, n);
    for t in &centers {
        let enc = encode(&t.gt, n)?;
        grid.cell_mut(t.cell.0, t.cell.1)
            .copy_from_slice(&enc.distances);
    }
    let mask = mask_of(&centers, dims);
    Ok(TargetMap {
        grid,
        mask,
        centers,
        warnings,
    })
}

/// All three supervision maps for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub heatmap: HeatmapGrid,
    pub offsets: OffsetGrid,
    pub encodings: EncodingGrid,
    pub mask: CenterMask,
    pub centers: Vec<CenterTarget>,
    pub warnings: Vec<TargetWarning>,
}

pub fn build_targets(
    boxes: &[OrientedBox],
    n: usize,
    dims: GridDims,
    r: usize,
) -> Result<GroundTruth> {
    let hm = gaussian_heatmap(boxes, dims, r)?;
    let off = offset_targets(boxes, dims, r)?;
    let enc = encoding_targets(boxes, n, dims, r)?;
    Ok(GroundTruth {
        heatmap: hm.grid,
        offsets: off.grid,
        encodings: enc.grid,
        mask: enc.mask,
        centers: enc.centers,
        warnings: hm.warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// Cells equal to the maximum of their in-bounds 3x3 neighbourhood and at
/// least `score_threshold`, best first, at most `top_k`. Plateaus yield
/// every tied cell; equal scores keep row-major order.
pub fn extract_peaks(heatmap: &HeatmapGrid, score_threshold: f64, top_k: usize) -> Vec<Peak> {
    let (w, h) = (heatmap.width, heatmap.height);
    let mut peaks = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = heatmap.get(x, y, 0);
            if v < score_threshold {
                continue;
            }
            let mut is_max = true;
            'nb: for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    if heatmap.get(nx, ny, 0) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                peaks.push(Peak { x, y, score: v });
            }
        }
    }
    peaks.sort_by(|a, b| b.score.total_cmp(&a.score));
    peaks.truncate(top_k);
    peaks
}

/// A decoded detection in input-image pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub center: Point2,
    pub score: f64,
    pub obb: OrientedBox,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    pub detections: Vec<Detection>,
    /// Peaks that could not be turned into a box, with the reason.
    pub skipped: Vec<(Peak, Error)>,
}

/// Turns head outputs into detections: peak cells, offset refinement,
/// encoding lookup and polar decoding.
pub fn assemble_detections(
    heatmap: &HeatmapGrid,
    offsets: &OffsetGrid,
    encodings: &EncodingGrid,
    r: usize,
    score_threshold: f64,
    top_k: usize,
) -> Result<Assembly> {
    if heatmap.channels != 1 || offsets.channels != 2 || encodings.channels < 3 {
        return Err(Error::DimMismatch(format!(
            "expected 1/2/N>=3 channels, got {}/{}/{}",
            heatmap.channels, offsets.channels, encodings.channels
        )));
    }
    if heatmap.dims() != offsets.dims() || heatmap.dims() != encodings.dims() {
        return Err(Error::DimMismatch(
            "heatmap, offset and encoding grids differ in size".into(),
        ));
    }
    let rate = r as f64;
    let mut out = Assembly::default();
    for peak in extract_peaks(heatmap, score_threshold, top_k) {
        let off = offsets.cell(peak.x, peak.y);
        let center = Point2::new(
            (peak.x as f64 + off[0]) * rate,
            (peak.y as f64 + off[1]) * rate,
        );
        let decoded = PolarEncoding::new(center, encodings.cell(peak.x, peak.y).to_vec())
            .and_then(|enc| decode(&enc));
        match decoded {
            Ok(obb) => out.detections.push(Detection {
                center,
                score: peak.score.clamp(0.0, 1.0),
                obb,
            }),
            Err(e) => out.skipped.push((peak, e)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::rotated_iou;
    use std::f64::consts::SQRT_2;

    fn square_at(x: f64, y: f64, side: f64) -> OrientedBox {
        OrientedBox::from_center(Point2::new(x, y), side, side, 0.0).unwrap()
    }

    #[test]
    fn heatmap_peak_and_sigma_falloff() {
        // short side 24 px at R = 4 gives sigma = 2 cells
        let b = square_at(42.0, 42.0, 24.0);
        let hm = gaussian_heatmap(&[b], GridDims::new(32, 32), 4).unwrap();
        assert_eq!(hm.grid.get(10, 10, 0), 1.0);
        assert!((hm.grid.get(12, 10, 0) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((hm.grid.get(10, 8, 0) - 0.6065306597126334).abs() < 1e-15);
        assert!(hm.warnings.is_empty());
        assert!(hm.grid.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(hm.grid.data().iter().filter(|&&v| v == 1.0).count(), 1);
    }

    #[test]
    fn heatmap_overlap_takes_max() {
        let a = square_at(40.0, 40.0, 24.0);
        let b = square_at(56.0, 40.0, 48.0);
        let dims = GridDims::new(32, 32);
        let both = gaussian_heatmap(&[a, b], dims, 4).unwrap().grid;
        let only_a = gaussian_heatmap(&[a], dims, 4).unwrap().grid;
        let only_b = gaussian_heatmap(&[b], dims, 4).unwrap().grid;
        for i in 0..both.data().len() {
            assert_eq!(both.data()[i], only_a.data()[i].max(only_b.data()[i]));
        }
        // a cell between the two centers is covered by both Gaussians
        assert!(only_a.get(12, 10, 0) > 0.0 && only_b.get(12, 10, 0) > 0.0);
    }

    #[test]
    fn tiny_boxes_clamp_sigma() {
        let b = square_at(10.0, 10.0, 2.0);
        let hm = gaussian_heatmap(&[b], GridDims::new(8, 8), 4).unwrap();
        assert!(matches!(
            hm.warnings[0],
            TargetWarning::SigmaClamped { index: 0, .. }
        ));
        assert!((hm.grid.get(3, 2, 0) - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn offsets_are_fractional_cell_positions() {
        let dims = GridDims::new(8, 8);
        let t = offset_targets(&[square_at(10.75, 5.25, 2.0)], dims, 4).unwrap();
        assert!(t.mask.get(2, 1));
        assert_eq!(t.grid.cell(2, 1), &[0.6875, 0.3125]);

        let t = offset_targets(&[square_at(8.0, 4.0, 2.0)], dims, 4).unwrap();
        assert!(t.mask.get(2, 1));
        assert_eq!(t.grid.cell(2, 1), &[0.0, 0.0]);

        let t = offset_targets(&[square_at(3.999, 0.0 + 1.0, 1.0)], dims, 4).unwrap();
        assert!(t.mask.get(0, 0));
        assert!((t.grid.get(0, 0, 0) - 0.99975).abs() < 1e-12);
        assert_eq!(t.mask.count(), 1);
    }

    #[test]
    fn center_outside_grid_is_rejected() {
        let r = offset_targets(&[square_at(40.0, 4.0, 2.0)], GridDims::new(8, 8), 4);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn collisions_keep_larger_box() {
        let small = square_at(9.0, 9.0, 2.0);
        let large = square_at(10.0, 10.0, 6.0);
        let t = offset_targets(&[large, small], GridDims::new(8, 8), 4).unwrap();
        assert_eq!(t.centers.len(), 1);
        assert_eq!(t.centers[0].index, 0);
        assert_eq!(
            t.warnings,
            vec![TargetWarning::Collision {
                cell: (2, 2),
                kept: 0,
                dropped: 1
            }]
        );
        let t = offset_targets(&[small, large], GridDims::new(8, 8), 4).unwrap();
        assert_eq!(t.centers[0].index, 1);
    }

    #[test]
    fn encoding_targets_examples() {
        let dims = GridDims::new(16, 16);
        let t = encoding_targets(&[square_at(32.0, 32.0, 2.0)], 4, dims, 4).unwrap();
        let cell = t.grid.cell(8, 8);
        for (d, e) in cell.iter().zip([SQRT_2, 1.0, SQRT_2, 1.0]) {
            assert!((d - e).abs() < 1e-12);
        }

        let t = encoding_targets(&[], 4, dims, 4).unwrap();
        assert!(t.grid.data().iter().all(|&v| v == 0.0));
        assert_eq!(t.mask.count(), 0);

        let a = OrientedBox::from_center(Point2::new(10.0, 10.0), 8.0, 4.0, 0.3).unwrap();
        let b = OrientedBox::from_center(Point2::new(50.0, 30.0), 6.0, 3.0, 1.2).unwrap();
        let t = encoding_targets(&[a, b], 8, dims, 4).unwrap();
        assert_eq!(
            t.grid.cell(2, 2),
            encode(&a, 8).unwrap().distances.as_slice()
        );
        assert_eq!(
            t.grid.cell(12, 7),
            encode(&b, 8).unwrap().distances.as_slice()
        );
        let nonzero_cells = (0..16)
            .flat_map(|y| (0..16).map(move |x| (x, y)))
            .filter(|&(x, y)| t.grid.cell(x, y).iter().any(|&v| v != 0.0))
            .count();
        assert_eq!(nonzero_cells, 2);
    }

    #[test]
    fn peaks_examples() {
        let mut g = Grid::zeros(5, 5, 1);
        g.set(2, 2, 0, 0.9);
        g.set(1, 2, 0, 0.5);
        assert_eq!(
            extract_peaks(&g, 0.3, 10),
            vec![Peak {
                x: 2,
                y: 2,
                score: 0.9
            }]
        );

        assert!(extract_peaks(&Grid::zeros(5, 5, 1), 0.3, 10).is_empty());

        let mut g = Grid::zeros(5, 5, 1);
        g.set(1, 1, 0, 0.8);
        g.set(2, 1, 0, 0.8);
        let peaks = extract_peaks(&g, 0.3, 10);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks[0].x, peaks[1].x), (1, 2));
    }

    #[test]
    fn peaks_on_border_and_top_k() {
        let mut g = Grid::zeros(4, 3, 1);
        g.set(0, 0, 0, 0.7);
        g.set(3, 2, 0, 0.9);
        g.set(3, 0, 0, 0.5);
        let peaks = extract_peaks(&g, 0.1, 2);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks[0].x, peaks[0].y), (3, 2));
        assert_eq!((peaks[1].x, peaks[1].y), (0, 0));
    }

    #[test]
    fn assembly_of_perfect_prediction() {
        let gt = OrientedBox::from_center(Point2::new(37.3, 21.9), 20.0, 8.0, 0.7).unwrap();
        let dims = GridDims::new(20, 20);
        let t = build_targets(&[gt], 8, dims, 4).unwrap();
        let out = assemble_detections(&t.heatmap, &t.offsets, &t.encodings, 4, 0.5, 100).unwrap();
        assert_eq!(out.detections.len(), 1);
        let det = &out.detections[0];
        assert!(det.center.distance(gt.center()) < 1e-9);
        let roundtrip = decode(&encode(&gt, 8).unwrap()).unwrap();
        assert!((rotated_iou(&det.obb, &gt) - rotated_iou(&roundtrip, &gt)).abs() < 1e-9);
        assert_eq!(det.score, 1.0);
    }

    #[test]
    fn assembly_edge_cases() {
        let hm = Grid::zeros(6, 6, 1);
        let off = Grid::zeros(6, 6, 2);
        let mut enc = Grid::zeros(6, 6, 8);
        let out = assemble_detections(&hm, &off, &enc, 4, 0.1, 10).unwrap();
        assert!(out.detections.is_empty());

        let mut hm = Grid::zeros(6, 6, 1);
        hm.set(3, 2, 0, 0.8);
        enc.cell_mut(3, 2).copy_from_slice(&[2.0; 8]);
        let out = assemble_detections(&hm, &off, &enc, 4, 0.1, 10).unwrap();
        assert_eq!(out.detections[0].center, Point2::new(12.0, 8.0));

        // a peak over an all-zero encoding is skipped, not fatal
        hm.set(0, 5, 0, 0.6);
        let out = assemble_detections(&hm, &off, &enc, 4, 0.1, 10).unwrap();
        assert_eq!(out.detections.len(), 1);
        assert_eq!(out.skipped.len(), 1);

        let bad = Grid::zeros(5, 6, 2);
        assert!(matches!(
            assemble_detections(&hm, &bad, &enc, 4, 0.1, 10),
            Err(Error::DimMismatch(_))
        ));
    }
}
