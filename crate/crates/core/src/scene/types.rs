//! Symbolic scene descriptions: the ground truth the pixel oracle works over.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Five-color palette shared by backgrounds and objects. Background fills use
/// half-intensity values so an object is always distinguishable from any
/// background, which keeps the render/parse round trip exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    White,
}

impl Color {
    pub const ALL: [Color; 5] = [Color::Red, Color::Green, Color::Blue, Color::Yellow, Color::White];

    pub fn index(self) -> usize {
        Color::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Color> {
        Color::ALL.get(i).copied()
    }

    /// Object fill in [-1, 1] pixel space.
    pub fn object_value(self) -> [f64; 3] {
        match self {
            Color::Red => [1.0, -1.0, -1.0],
            Color::Green => [-1.0, 1.0, -1.0],
            Color::Blue => [-1.0, -1.0, 1.0],
            Color::Yellow => [1.0, 1.0, -1.0],
            Color::White => [1.0, 1.0, 1.0],
        }
    }

    /// Background fill: same hue at half intensity.
    pub fn background_value(self) -> [f64; 3] {
        let v = self.object_value();
        [v[0] * 0.5, v[1] * 0.5, v[2] * 0.5]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Triangle];

    pub fn index(self) -> usize {
        Shape::ALL.iter().position(|s| *s == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Shape> {
        Shape::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Size {
    Small,
    Large,
}

impl Size {
    pub const ALL: [Size; 2] = [Size::Small, Size::Large];

    pub fn index(self) -> usize {
        Size::ALL.iter().position(|s| *s == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Size> {
        Size::ALL.get(i).copied()
    }
}

/// Position on the 3×3 placement grid, row-major, 0..=8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cell(pub u8);

impl Cell {
    pub const COUNT: usize = 9;

    pub fn new(i: u8) -> Option<Cell> {
        (i < 9).then_some(Cell(i))
    }

    pub fn row(self) -> usize {
        self.0 as usize / 3
    }

    pub fn col(self) -> usize {
        self.0 as usize % 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub color: Color,
    pub cell: Cell,
    pub size: Size,
}

/// Symbolic description of a scene: a background color and up to two objects
/// in distinct grid cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SceneSpec {
    pub background: Color,
    pub objects: Vec<ObjectSpec>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SceneError {
    #[error("scene has {0} objects; at most 2 are allowed")]
    TooManyObjects(usize),
    #[error("cell index {0} out of range 0..9")]
    CellOutOfRange(u8),
    #[error("objects overlap: two objects share cell {0}")]
    OverlappingObjects(u8),
    #[error("objects not in canonical order (sorted by cell index)")]
    NonCanonicalOrder,
}

impl SceneSpec {
    pub fn empty(background: Color) -> SceneSpec {
        SceneSpec { background, objects: Vec::new() }
    }

    /// Check invariants: at most two objects, valid cells, disjoint cells,
    /// canonical (cell-sorted) object order. Objects confined to distinct
    /// cells always have disjoint bounding boxes.
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.objects.len() > 2 {
            return Err(SceneError::TooManyObjects(self.objects.len()));
        }
        for o in &self.objects {
            if o.cell.0 >= 9 {
                return Err(SceneError::CellOutOfRange(o.cell.0));
            }
        }
        for w in self.objects.windows(2) {
            if w[0].cell == w[1].cell {
                return Err(SceneError::OverlappingObjects(w[0].cell.0));
            }
            if w[0].cell > w[1].cell {
                return Err(SceneError::NonCanonicalOrder);
            }
        }
        Ok(())
    }

    /// Sort objects by cell index, making the spec canonical.
    pub fn canonicalize(&mut self) {
        self.objects.sort_by_key(|o| o.cell);
    }

    pub fn is_canonical(&self) -> bool {
        self.objects.windows(2).all(|w| w[0].cell < w[1].cell)
    }
}
