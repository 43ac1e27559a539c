//! Exact rasterizer for scene specs.
//!
//! Images are 32×32 RGB with values in [-1, 1], channel-first. Rendering is
//! crisp (every pixel is exactly a palette value) and deterministic, so the
//! parser can invert it exactly. The placement grid splits each axis at
//! pixel 11 and 21, giving cell widths 11/10/11; object extents (at most 8×8)
//! are centered inside their cell and never touch another cell.

use ndarray::Array3;

use super::types::{Cell, ObjectSpec, SceneSpec, SceneError, Shape, Size};
use crate::tensor::Scalar;

pub const IMAGE_SIZE: usize = 32;
/// Grid line positions along each axis.
pub const GRID_LINES: [usize; 4] = [0, 11, 21, 32];

/// Channel-first RGB image, shape (3, 32, 32).
pub type Image<T> = Array3<T>;

/// Pixel rectangle: rows y0..y1, cols x0..x1 (half-open).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub y0: usize,
    pub y1: usize,
    pub x0: usize,
    pub x1: usize,
}

impl Rect {
    pub fn contains(&self, y: usize, x: usize) -> bool {
        y >= self.y0 && y < self.y1 && x >= self.x0 && x < self.x1
    }

    pub fn area(&self) -> usize {
        (self.y1 - self.y0) * (self.x1 - self.x0)
    }
}

/// Pixel region of a grid cell.
pub fn cell_rect(cell: Cell) -> Rect {
    let r = cell.row();
    let c = cell.col();
    Rect {
        y0: GRID_LINES[r],
        y1: GRID_LINES[r + 1],
        x0: GRID_LINES[c],
        x1: GRID_LINES[c + 1],
    }
}

fn box_side(size: Size) -> usize {
    match size {
        Size::Small => 4,
        Size::Large => 8,
    }
}

/// Bounding box of an object's drawable area, centered in its cell.
pub fn object_extent(cell: Cell, size: Size) -> Rect {
    let cr = cell_rect(cell);
    let w = box_side(size);
    let oy = cr.y0 + (cr.y1 - cr.y0 - w) / 2;
    let ox = cr.x0 + (cr.x1 - cr.x0 - w) / 2;
    Rect { y0: oy, y1: oy + w, x0: ox, x1: ox + w }
}

/// Filled-pixel test in box-local coordinates (0..side on both axes).
fn shape_covers(shape: Shape, size: Size, ly: usize, lx: usize) -> bool {
    let w = box_side(size) as f64;
    let dx = lx as f64 + 0.5 - w / 2.0;
    let dy = ly as f64 + 0.5 - w / 2.0;
    match shape {
        Shape::Square => true,
        Shape::Circle => {
            // Radii tuned so the disk is distinct from the square on the
            // pixel grid and the large disk fills a majority of its cell.
            let r2 = match size {
                Size::Small => 4.0,
                Size::Large => 19.36,
            };
            dx * dx + dy * dy <= r2
        }
        Shape::Triangle => {
            // Upward triangle: apex row 0, base row w-1.
            let half_width = (ly as f64 + 1.0) / 2.0;
            dx.abs() <= half_width
        }
    }
}

/// Local mask of an object's filled pixels within its bounding box.
pub fn shape_mask(shape: Shape, size: Size) -> Vec<(usize, usize)> {
    let w = box_side(size);
    let mut px = Vec::new();
    for ly in 0..w {
        for lx in 0..w {
            if shape_covers(shape, size, ly, lx) {
                px.push((ly, lx));
            }
        }
    }
    px
}

/// Absolute filled pixels of an object.
pub fn object_pixels(obj: &ObjectSpec) -> Vec<(usize, usize)> {
    let ext = object_extent(obj.cell, obj.size);
    shape_mask(obj.shape, obj.size)
        .into_iter()
        .map(|(ly, lx)| (ext.y0 + ly, ext.x0 + lx))
        .collect()
}

/// Rasterize a scene spec. Objects are drawn in list order.
pub fn render<T: Scalar>(spec: &SceneSpec) -> Result<Image<T>, SceneError> {
    spec.validate()?;
    let bg = spec.background.background_value();
    let mut img = Image::<T>::zeros((3, IMAGE_SIZE, IMAGE_SIZE));
    for c in 0..3 {
        img.index_axis_mut(ndarray::Axis(0), c).fill(T::from_f64(bg[c]));
    }
    for obj in &spec.objects {
        let val = obj.color.object_value();
        for (y, x) in object_pixels(obj) {
            for c in 0..3 {
                img[[c, y, x]] = T::from_f64(val[c]);
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::types::{Color, ObjectSpec};
    use std::collections::HashSet;

    #[test]
    fn empty_scene_is_uniform_background() {
        let img: Image<f64> = render(&SceneSpec::empty(Color::Blue)).unwrap();
        let bg = Color::Blue.background_value();
        for y in 0..IMAGE_SIZE {
            for x in 0..IMAGE_SIZE {
                for c in 0..3 {
                    assert_eq!(img[[c, y, x]], bg[c]);
                }
            }
        }
    }

    #[test]
    fn render_is_deterministic() {
        let spec = SceneSpec {
            background: Color::Green,
            objects: vec![ObjectSpec {
                shape: Shape::Triangle,
                color: Color::Red,
                cell: Cell(7),
                size: Size::Large,
            }],
        };
        let a: Image<f64> = render(&spec).unwrap();
        let b: Image<f64> = render(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_red_circle_is_majority_of_center_cell() {
        // Derived by counting pixels in the rendered output.
        let spec = SceneSpec {
            background: Color::Blue,
            objects: vec![ObjectSpec {
                shape: Shape::Circle,
                color: Color::Red,
                cell: Cell(4),
                size: Size::Large,
            }],
        };
        let img: Image<f64> = render(&spec).unwrap();
        let r = cell_rect(Cell(4));
        let red = Color::Red.object_value();
        let mut red_px = 0usize;
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                if (0..3).all(|c| img[[c, y, x]] == red[c]) {
                    red_px += 1;
                }
            }
        }
        assert!(red_px * 2 > r.area(), "red pixels {red_px} of {}", r.area());
    }

    #[test]
    fn all_shape_masks_are_distinct_and_fit() {
        for size in Size::ALL {
            let mut seen: Vec<HashSet<(usize, usize)>> = Vec::new();
            for shape in Shape::ALL {
                let mask: HashSet<_> = shape_mask(shape, size).into_iter().collect();
                assert!(!mask.is_empty());
                for prev in &seen {
                    assert_ne!(prev, &mask, "{shape:?} {size:?} duplicates another mask");
                }
                seen.push(mask);
            }
        }
        // Extents stay strictly inside every cell.
        for cell in 0..9 {
            let cr = cell_rect(Cell(cell));
            for size in Size::ALL {
                let e = object_extent(Cell(cell), size);
                assert!(e.y0 >= cr.y0 && e.y1 <= cr.y1 && e.x0 >= cr.x0 && e.x1 <= cr.x1);
            }
        }
    }

    #[test]
    fn objects_in_different_cells_never_share_pixels() {
        let a = ObjectSpec { shape: Shape::Square, color: Color::Red, cell: Cell(0), size: Size::Large };
        let b = ObjectSpec { shape: Shape::Square, color: Color::Green, cell: Cell(1), size: Size::Large };
        let pa: HashSet<_> = object_pixels(&a).into_iter().collect();
        let pb: HashSet<_> = object_pixels(&b).into_iter().collect();
        assert!(pa.is_disjoint(&pb));
    }
}
