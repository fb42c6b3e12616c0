//! Superpixel partition of the sensor.
//!
//! The sensor is divided into `rows x cols` square blocks of `block_size`
//! pixels. Superpixels are indexed row-major, and the leftmost `left_cols`
//! columns image the lower spin state while the rest image the upper state.
//! That index ordering is part of the persisted grid manifest and is never
//! implicit.

use crate::error::Error;
use crate::Result;

/// Geometry of the superpixel partition and the left/right state assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuperpixelGrid {
    rows: usize,
    cols: usize,
    block_size: usize,
    left_cols: usize,
}

impl SuperpixelGrid {
    pub fn new(rows: usize, cols: usize, block_size: usize, left_cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || block_size == 0 {
            return Err(Error::InvalidConfig(format!(
                "grid dimensions must be positive (rows={rows}, cols={cols}, block_size={block_size})"
            )));
        }
        if left_cols == 0 || left_cols >= cols {
            return Err(Error::InvalidConfig(format!(
                "left_cols must satisfy 0 < left_cols < cols (left_cols={left_cols}, cols={cols})"
            )));
        }
        Ok(Self {
            rows,
            cols,
            block_size,
            left_cols,
        })
    }

    /// The 12x16 grid of 128-pixel blocks used for a 2048x1536 sensor.
    pub fn default_sensor() -> Self {
        Self {
            rows: 12,
            cols: 16,
            block_size: 128,
            left_cols: 8,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn left_cols(&self) -> usize {
        self.left_cols
    }

    /// Total number of superpixels.
    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    /// Sensor height in pixels.
    pub fn pixel_rows(&self) -> usize {
        self.rows * self.block_size
    }

    /// Sensor width in pixels.
    pub fn pixel_cols(&self) -> usize {
        self.cols * self.block_size
    }

    /// Row-major superpixel index of block (r, c).
    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    /// Grid column of superpixel `j`.
    pub fn col_of(&self, j: usize) -> usize {
        j % self.cols
    }

    /// Grid row of superpixel `j`.
    pub fn row_of(&self, j: usize) -> usize {
        j / self.cols
    }

    /// State sign of superpixel `j`: -1 for the left half (lower state),
    /// +1 for the right half (upper state).
    pub fn side_sign(&self, j: usize) -> Result<f64> {
        if j >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.n(),
            });
        }
        Ok(self.side_sign_unchecked(j))
    }

    pub(crate) fn side_sign_unchecked(&self, j: usize) -> f64 {
        if self.col_of(j) < self.left_cols {
            -1.0
        } else {
            1.0
        }
    }

    /// Signs for all superpixels in index order.
    pub fn side_signs(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.side_sign_unchecked(j)).collect()
    }

    /// Sum pixel counts into superpixels. The total is conserved: every pixel
    /// lands in exactly one block.
    pub fn bin_image(&self, image: &PixelImage) -> Result<Vec<f64>> {
        if image.height != self.pixel_rows() || image.width != self.pixel_cols() {
            return Err(Error::DimensionMismatch {
                what: "pixel image",
                expected: format!("{}x{}", self.pixel_rows(), self.pixel_cols()),
                got: format!("{}x{}", image.height, image.width),
            });
        }
        let bs = self.block_size;
        let mut out = vec![0.0; self.n()];
        for pr in 0..image.height {
            let block_row = pr / bs;
            let row_base = block_row * self.cols;
            let pixels = &image.data[pr * image.width..(pr + 1) * image.width];
            for (pc, &v) in pixels.iter().enumerate() {
                out[row_base + pc / bs] += v;
            }
        }
        Ok(out)
    }

    /// The 4-connected nearest-neighbor edge set. Edges cross the left/right
    /// boundary: the collection-efficiency field is continuous across the
    /// sensor.
    pub fn neighbor_edges(&self) -> EdgeSet {
        let mut edges = Vec::with_capacity(self.rows * (self.cols - 1) + self.cols * (self.rows - 1));
        for r in 0..self.rows {
            for c in 0..self.cols {
                let j = self.index(r, c);
                if c + 1 < self.cols {
                    edges.push((j, j + 1));
                }
                if r + 1 < self.rows {
                    edges.push((j, j + self.cols));
                }
            }
        }
        EdgeSet { edges }
    }
}

impl Default for SuperpixelGrid {
    fn default() -> Self {
        Self::default_sensor()
    }
}

/// Unordered nearest-neighbor pairs, stored once each with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// A full-resolution camera frame, row-major.
#[derive(Debug, Clone)]
pub struct PixelImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl PixelImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                what: "pixel buffer",
                expected: format!("{} values", height * width),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }
}
