//! Binary masks, tiling and instance separation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::PixelPoint;

/// Rectangular 0/1 grid; 1 marks a defect pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    cells: Vec<u8>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            cells: vec![0; width as usize * height as usize],
        })
    }

    /// Builds a mask from row-major cells that must each be 0 or 1.
    pub fn from_cells(width: u32, height: u32, cells: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if cells.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "expected {} cells for {width}x{height}, got {}",
                width as usize * height as usize,
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::Argument(format!("mask cell value {bad} is not 0 or 1")));
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Cell value at `(x, y)`. Panics when out of bounds.
    pub fn get(&self, x: u32, y: u32) -> u8 {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside mask");
        self.cells[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside mask");
        let i = self.index(x, y);
        self.cells[i] = on as u8;
    }

    /// Signed lookup; anything outside the image reads as background.
    #[inline]
    pub fn is_foreground(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as u64) < self.width as u64
            && (y as u64) < self.height as u64
            && self.cells[self.index(x as u32, y as u32)] == 1
    }

    pub fn foreground_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    /// Foreground pixels in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = PixelPoint> + '_ {
        let w = self.width as usize;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(move |(i, _)| PixelPoint::new((i % w) as i64, (i / w) as i64))
    }

    /// Copies out the sub-mask covered by `tile`.
    pub fn crop(&self, tile: &Tile) -> Result<BinaryMask> {
        if tile.origin_x + tile.width > self.width || tile.origin_y + tile.height > self.height {
            return Err(Error::Dimension(format!(
                "tile {}x{} at ({}, {}) exceeds {}x{} mask",
                tile.width, tile.height, tile.origin_x, tile.origin_y, self.width, self.height
            )));
        }
        let mut cells = Vec::with_capacity(tile.width as usize * tile.height as usize);
        for y in tile.origin_y..tile.origin_y + tile.height {
            let start = self.index(tile.origin_x, y);
            cells.extend_from_slice(&self.cells[start..start + tile.width as usize]);
        }
        BinaryMask::from_cells(tile.width, tile.height, cells)
    }

    /// Mask whose foreground is exactly `pixels` (out-of-range pixels are ignored).
    pub fn from_pixels<'a>(
        width: u32,
        height: u32,
        pixels: impl IntoIterator<Item = &'a PixelPoint>,
    ) -> Result<BinaryMask> {
        let mut mask = BinaryMask::new(width, height)?;
        for p in pixels {
            if p.x >= 0 && p.y >= 0 && (p.x as u64) < width as u64 && (p.y as u64) < height as u64 {
                mask.set(p.x as u32, p.y as u32, true);
            }
        }
        Ok(mask)
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimension(format!(
            "mask dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Converts a grid of boolean mask flags into a 0/1 mask: TRUE → 1, FALSE → 0.
pub fn binarize<R: AsRef<[bool]>>(raw: &[R]) -> Result<BinaryMask> {
    let height = raw.len();
    let width = raw.first().map(|r| r.as_ref().len()).unwrap_or(0);
    if height == 0 || width == 0 {
        return Err(Error::Dimension("empty flag grid".into()));
    }
    let mut cells = Vec::with_capacity(width * height);
    for (y, row) in raw.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != width {
            return Err(Error::Dimension(format!(
                "ragged flag grid: row {y} has {} columns, expected {width}",
                row.len()
            )));
        }
        cells.extend(row.iter().map(|&flag| flag as u8));
    }
    let width = u32::try_from(width).map_err(|_| Error::Dimension("grid too wide".into()))?;
    let height = u32::try_from(height).map_err(|_| Error::Dimension("grid too tall".into()))?;
    BinaryMask::from_cells(width, height, cells)
}

/// One rectangle of a [`TileGrid`], in source-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub origin_x: u32,
    pub origin_y: u32,
    pub width: u32,
    pub height: u32,
}

impl Tile {
    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.origin_x
            && y >= self.origin_y
            && x < self.origin_x + self.width
            && y < self.origin_y + self.height
    }
}

/// Row-major partition of an image into fixed-size patches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGrid {
    pub tile_width: u32,
    pub tile_height: u32,
    pub columns: u32,
    pub rows: u32,
    pub tiles: Vec<Tile>,
}

impl TileGrid {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

/// Splits an image into square `tile_size` patches, left-to-right then
/// top-to-bottom. Tiles on the right and bottom edges are clipped to the image.
pub fn tile(image_width: u32, image_height: u32, tile_size: u32) -> Result<TileGrid> {
    if tile_size == 0 {
        return Err(Error::Argument("tile size must be positive".into()));
    }
    check_dims(image_width, image_height)?;
    let columns = image_width.div_ceil(tile_size);
    let rows = image_height.div_ceil(tile_size);
    let mut tiles = Vec::with_capacity(columns as usize * rows as usize);
    for row in 0..rows {
        let origin_y = row * tile_size;
        for col in 0..columns {
            let origin_x = col * tile_size;
            tiles.push(Tile {
                origin_x,
                origin_y,
                width: tile_size.min(image_width - origin_x),
                height: tile_size.min(image_height - origin_y),
            });
        }
    }
    Ok(TileGrid {
        tile_width: tile_size,
        tile_height: tile_size,
        columns,
        rows,
        tiles,
    })
}

/// Pixel adjacency used for instance separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub fn offsets(self) -> &'static [(i64, i64)] {
        const FOUR: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(i64, i64); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(Error::Argument(format!("connectivity must be 4 or 8, got {other}"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: i64,
    pub min_y: i64,
    pub max_x: i64,
    pub max_y: i64,
}

/// One connected defect instance.
///
/// Pixels are kept sorted in row-major order and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectRegion {
    pub region_id: u32,
    pixels: Vec<PixelPoint>,
    bbox: BBox,
}

impl DefectRegion {
    /// Builds a region from arbitrary pixels. Returns `None` for an empty set.
    /// Connectivity is not checked here.
    pub fn from_pixels(region_id: u32, mut pixels: Vec<PixelPoint>) -> Option<Self> {
        pixels.sort_unstable();
        pixels.dedup();
        let first = *pixels.first()?;
        let mut bbox = BBox {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in &pixels {
            bbox.min_x = bbox.min_x.min(p.x);
            bbox.max_x = bbox.max_x.max(p.x);
            bbox.min_y = bbox.min_y.min(p.y);
            bbox.max_y = bbox.max_y.max(p.y);
        }
        Some(Self {
            region_id,
            pixels,
            bbox,
        })
    }

    pub fn pixels(&self) -> &[PixelPoint] {
        &self.pixels
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        self.pixels.binary_search(&p).is_ok()
    }

    /// Number of shared pixels.
    pub fn overlap(&self, other: &DefectRegion) -> usize {
        let (a, b) = (&self.pixels, &other.pixels);
        if self.bbox.max_x < other.bbox.min_x
            || other.bbox.max_x < self.bbox.min_x
            || self.bbox.max_y < other.bbox.min_y
            || other.bbox.max_y < self.bbox.min_y
        {
            return 0;
        }
        let (mut i, mut j, mut shared) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        shared
    }

    /// Copy shifted by `(dx, dy)`, e.g. to lift tile-local pixels into image space.
    pub fn translated(&self, dx: i64, dy: i64) -> DefectRegion {
        DefectRegion {
            region_id: self.region_id,
            pixels: self.pixels.iter().map(|p| PixelPoint::new(p.x + dx, p.y + dy)).collect(),
            bbox: BBox {
                min_x: self.bbox.min_x + dx,
                min_y: self.bbox.min_y + dy,
                max_x: self.bbox.max_x + dx,
                max_y: self.bbox.max_y + dy,
            },
        }
    }
}

/// Connected components of the foreground, ids assigned from 1 in row-major
/// first-encounter order.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<DefectRegion> {
    label_regions(mask, connectivity, 1)
}

/// [`connected_components`] with regions smaller than `min_pixels` dropped.
/// Surviving regions are renumbered consecutively from 1.
pub fn label_regions(
    mask: &BinaryMask,
    connectivity: Connectivity,
    min_pixels: usize,
) -> Vec<DefectRegion> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let mut visited = vec![false; mask.cells.len()];
    let mut queue = VecDeque::new();
    let mut regions = Vec::new();

    for start in 0..mask.cells.len() {
        if mask.cells[start] == 0 || visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            pixels.push(PixelPoint::new(x, y));
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = (ny * w + nx) as usize;
                if mask.cells[j] == 1 && !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if pixels.len() >= min_pixels.max(1) {
            let id = regions.len() as u32 + 1;
            regions.extend(DefectRegion::from_pixels(id, pixels));
        }
    }
    regions
}
