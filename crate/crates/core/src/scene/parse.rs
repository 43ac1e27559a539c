//! Exact nearest-spec parser: the pixel oracle.
//!
//! Pixel distance to a rendered candidate decomposes additively over grid
//! cells (objects never leave their cell), so the global argmin over the
//! whole finite scene grammar reduces to: per background hypothesis, pick the
//! best occupant of each cell independently, then keep the two cells whose
//! occupants improve most over "empty". That search is exhaustive and exact,
//! and returns the residual distance alongside the spec.

use super::render::{cell_rect, object_extent, shape_mask, Image, IMAGE_SIZE};
use super::types::{Cell, Color, ObjectSpec, SceneSpec, Shape, Size};
use crate::tensor::Scalar;

/// Squared-distance lookup: `pixel_cost[v][y][x]` = ‖img(y,x) − palette(v)‖².
/// Palette rows 0..5 are object colors, 5..10 background fills.
fn pixel_costs<T: Scalar>(img: &Image<T>) -> Vec<[[f64; IMAGE_SIZE]; IMAGE_SIZE]> {
    let mut palette = Vec::with_capacity(10);
    for c in Color::ALL {
        palette.push(c.object_value());
    }
    for c in Color::ALL {
        palette.push(c.background_value());
    }
    palette
        .iter()
        .map(|val| {
            let mut grid = [[0.0f64; IMAGE_SIZE]; IMAGE_SIZE];
            for y in 0..IMAGE_SIZE {
                for x in 0..IMAGE_SIZE {
                    let mut d = 0.0;
                    for ch in 0..3 {
                        let e = img[[ch, y, x]].to_f64() - val[ch];
                        d += e * e;
                    }
                    grid[y][x] = d;
                }
            }
            grid
        })
        .collect()
}

struct CellChoice {
    improvement: f64,
    object: ObjectSpec,
}

/// Find the grammar point nearest to `img`, returning it with the residual
/// squared pixel distance (0 exactly on in-grammar renders).
pub fn parse<T: Scalar>(img: &Image<T>) -> (SceneSpec, f64) {
    assert_eq!(img.dim(), (3, IMAGE_SIZE, IMAGE_SIZE), "parse expects 3x32x32");
    let costs = pixel_costs(img);

    // Masked cost sums per cell for every (shape, size) and palette value.
    let combos: Vec<(Shape, Size)> = Shape::ALL
        .iter()
        .flat_map(|&s| Size::ALL.iter().map(move |&z| (s, z)))
        .collect();

    let mut best: Option<(f64, SceneSpec)> = None;
    for bg in Color::ALL {
        let bg_cost = &costs[5 + bg.index()];
        let mut total_empty = 0.0;
        let mut choices: Vec<CellChoice> = Vec::new();
        for cell_idx in 0..Cell::COUNT {
            let cell = Cell(cell_idx as u8);
            let cr = cell_rect(cell);
            let mut empty = 0.0;
            for y in cr.y0..cr.y1 {
                for x in cr.x0..cr.x1 {
                    empty += bg_cost[y][x];
                }
            }
            total_empty += empty;

            let mut cell_best: Option<CellChoice> = None;
            for &(shape, size) in &combos {
                let ext = object_extent(cell, size);
                // Cost of bg pixels the object would cover, and object cost.
                let mask = shape_mask(shape, size);
                let mut covered_bg = 0.0;
                for &(ly, lx) in &mask {
                    covered_bg += bg_cost[ext.y0 + ly][ext.x0 + lx];
                }
                for color in Color::ALL {
                    let obj_cost = &costs[color.index()];
                    let mut on_mask = 0.0;
                    for &(ly, lx) in &mask {
                        on_mask += obj_cost[ext.y0 + ly][ext.x0 + lx];
                    }
                    let improvement = covered_bg - on_mask;
                    if improvement > 0.0
                        && cell_best.as_ref().map_or(true, |b| improvement > b.improvement)
                    {
                        cell_best = Some(CellChoice {
                            improvement,
                            object: ObjectSpec { shape, color, cell, size },
                        });
                    }
                }
            }
            if let Some(c) = cell_best {
                choices.push(c);
            }
        }

        // Keep at most the two most-improving occupied cells.
        choices.sort_by(|a, b| {
            b.improvement
                .partial_cmp(&a.improvement)
                .unwrap()
                .then(a.object.cell.cmp(&b.object.cell))
        });
        choices.truncate(2);
        let mut objects: Vec<ObjectSpec> = choices.iter().map(|c| c.object).collect();
        objects.sort_by_key(|o| o.cell);
        let dist = total_empty - choices.iter().map(|c| c.improvement).sum::<f64>();
        let candidate = SceneSpec { background: bg, objects };
        if best.as_ref().map_or(true, |(d, _)| dist < *d) {
            best = Some((dist, candidate));
        }
    }

    let (dist, spec) = best.unwrap();
    (spec, dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::render::render;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_background_parses_to_empty_scene() {
        for bg in Color::ALL {
            let img: Image<f64> = render(&SceneSpec::empty(bg)).unwrap();
            let (spec, resid) = parse(&img);
            assert_eq!(spec, SceneSpec::empty(bg));
            assert_eq!(resid, 0.0);
        }
    }

    #[test]
    fn two_object_scene_round_trips() {
        let spec = SceneSpec {
            background: Color::White,
            objects: vec![
                ObjectSpec { shape: Shape::Circle, color: Color::Blue, cell: Cell(2), size: Size::Large },
                ObjectSpec { shape: Shape::Triangle, color: Color::Red, cell: Cell(6), size: Size::Small },
            ],
        };
        let img: Image<f64> = render(&spec).unwrap();
        let (parsed, resid) = parse(&img);
        assert_eq!(parsed, spec);
        assert_eq!(resid, 0.0);
    }

    #[test]
    fn salt_noise_keeps_spec_but_leaves_residual() {
        let spec = SceneSpec {
            background: Color::Green,
            objects: vec![ObjectSpec {
                shape: Shape::Square,
                color: Color::Yellow,
                cell: Cell(4),
                size: Size::Large,
            }],
        };
        let mut img: Image<f64> = render(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = (IMAGE_SIZE * IMAGE_SIZE) / 20; // 5% of pixels
        for _ in 0..n {
            let y = rng.gen_range(0..IMAGE_SIZE);
            let x = rng.gen_range(0..IMAGE_SIZE);
            for c in 0..3 {
                img[[c, y, x]] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
        let (parsed, resid) = parse(&img);
        assert_eq!(parsed, spec);
        assert!(resid > 0.0);
    }
}
