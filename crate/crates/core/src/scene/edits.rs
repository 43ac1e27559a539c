//! Edit-task construction: paired scenes that differ in exactly one
//! attribute group, plus the pixel mask licensed to change.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::render::{object_extent, Rect, IMAGE_SIZE};
use super::types::{Cell, Color, ObjectSpec, SceneSpec, Shape, Size};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Recolor,
    Add,
    Remove,
    Background,
    Move,
    Resize,
}

impl EditKind {
    pub const ALL: [EditKind; 6] = [
        EditKind::Recolor,
        EditKind::Add,
        EditKind::Remove,
        EditKind::Background,
        EditKind::Move,
        EditKind::Resize,
    ];
}

/// Boolean pixel mask, true where change is licensed.
pub type EditMask = Array2<bool>;

#[derive(Debug, Clone)]
pub struct EditTask {
    pub source: SceneSpec,
    pub target: SceneSpec,
    pub kind: EditKind,
    pub edit_mask: EditMask,
}

/// A task that could not be built from its sampled scene, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedTask {
    pub index: usize,
    pub kind: EditKind,
    pub reason: String,
}

fn mask_from_rects(rects: &[Rect]) -> EditMask {
    let mut mask = Array2::from_elem((IMAGE_SIZE, IMAGE_SIZE), false);
    for r in rects {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                mask[[y, x]] = true;
            }
        }
    }
    mask
}

fn full_mask() -> EditMask {
    Array2::from_elem((IMAGE_SIZE, IMAGE_SIZE), true)
}

fn extent(o: &ObjectSpec) -> Rect {
    object_extent(o.cell, o.size)
}

fn pick_other_color<R: Rng>(rng: &mut R, current: Color) -> Color {
    loop {
        let c = Color::ALL[rng.gen_range(0..Color::ALL.len())];
        if c != current {
            return c;
        }
    }
}

/// Derive a target scene and mask for `kind`, or explain why it cannot apply.
fn apply_kind<R: Rng>(
    rng: &mut R,
    source: &SceneSpec,
    kind: EditKind,
) -> Result<(SceneSpec, EditMask), String> {
    let mut target = source.clone();
    match kind {
        EditKind::Recolor => {
            if source.objects.is_empty() {
                return Err("recolor needs at least one object".into());
            }
            let i = rng.gen_range(0..source.objects.len());
            target.objects[i].color = pick_other_color(rng, source.objects[i].color);
            Ok((target, mask_from_rects(&[extent(&source.objects[i])])))
        }
        EditKind::Add => {
            if source.objects.len() >= 2 {
                return Err("add needs a free object slot".into());
            }
            let occupied: Vec<Cell> = source.objects.iter().map(|o| o.cell).collect();
            let free: Vec<u8> = (0..Cell::COUNT as u8)
                .filter(|&c| !occupied.contains(&Cell(c)))
                .collect();
            let obj = ObjectSpec {
                shape: Shape::ALL[rng.gen_range(0..Shape::ALL.len())],
                color: Color::ALL[rng.gen_range(0..Color::ALL.len())],
                cell: Cell(free[rng.gen_range(0..free.len())]),
                size: Size::ALL[rng.gen_range(0..Size::ALL.len())],
            };
            target.objects.push(obj);
            target.canonicalize();
            Ok((target, mask_from_rects(&[extent(&obj)])))
        }
        EditKind::Remove => {
            if source.objects.is_empty() {
                return Err("remove needs at least one object".into());
            }
            let i = rng.gen_range(0..source.objects.len());
            let removed = target.objects.remove(i);
            Ok((target, mask_from_rects(&[extent(&removed)])))
        }
        EditKind::Background => {
            target.background = pick_other_color(rng, source.background);
            Ok((target, full_mask()))
        }
        EditKind::Move => {
            if source.objects.is_empty() {
                return Err("move needs at least one object".into());
            }
            let i = rng.gen_range(0..source.objects.len());
            let occupied: Vec<Cell> = source.objects.iter().map(|o| o.cell).collect();
            let free: Vec<u8> = (0..Cell::COUNT as u8)
                .filter(|&c| !occupied.contains(&Cell(c)))
                .collect();
            let from = extent(&source.objects[i]);
            target.objects[i].cell = Cell(free[rng.gen_range(0..free.len())]);
            let to = extent(&target.objects[i]);
            target.canonicalize();
            Ok((target, mask_from_rects(&[from, to])))
        }
        EditKind::Resize => {
            if source.objects.is_empty() {
                return Err("resize needs at least one object".into());
            }
            let i = rng.gen_range(0..source.objects.len());
            let old = extent(&source.objects[i]);
            target.objects[i].size = match source.objects[i].size {
                Size::Small => Size::Large,
                Size::Large => Size::Small,
            };
            let new = extent(&target.objects[i]);
            Ok((target, mask_from_rects(&[old, new])))
        }
    }
}

/// Build `n` edit tasks cycling over `kinds`. Scenes that cannot support
/// their assigned kind are skipped and reported.
pub fn make_edit_tasks(
    seed: u64,
    kinds: &[EditKind],
    n: usize,
) -> (Vec<EditTask>, Vec<SkippedTask>) {
    assert!(!kinds.is_empty(), "kinds must be non-empty");
    let mut tasks = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    let mut attempt = 0usize;
    let max_attempts = n.saturating_mul(20).max(64);
    while tasks.len() < n && attempt < max_attempts {
        let mut rng = stream_rng(seed, attempt as u64);
        let kind = kinds[attempt % kinds.len()];
        let source = super::dataset::sample_scene(&mut rng);
        match apply_kind(&mut rng, &source, kind) {
            Ok((target, edit_mask)) => {
                debug_assert!(target.validate().is_ok());
                tasks.push(EditTask { source, target, kind, edit_mask });
            }
            Err(reason) => skipped.push(SkippedTask { index: attempt, kind, reason }),
        }
        attempt += 1;
    }
    (tasks, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::render::{render, Image};

    #[test]
    fn recolor_changes_exactly_one_color_field() {
        let (tasks, _) = make_edit_tasks(3, &[EditKind::Recolor], 16);
        for t in &tasks {
            assert_eq!(t.source.background, t.target.background);
            assert_eq!(t.source.objects.len(), t.target.objects.len());
            let diffs: usize = t
                .source
                .objects
                .iter()
                .zip(&t.target.objects)
                .map(|(a, b)| {
                    assert_eq!((a.shape, a.cell, a.size), (b.shape, b.cell, b.size));
                    usize::from(a.color != b.color)
                })
                .sum();
            assert_eq!(diffs, 1);
        }
    }

    #[test]
    fn background_mask_covers_everything() {
        let (tasks, _) = make_edit_tasks(4, &[EditKind::Background], 4);
        for t in &tasks {
            assert!(t.edit_mask.iter().all(|&m| m));
        }
    }

    #[test]
    fn add_mask_equals_new_object_extent() {
        let (tasks, _) = make_edit_tasks(5, &[EditKind::Add], 8);
        for t in &tasks {
            let added: Vec<&ObjectSpec> = t
                .target
                .objects
                .iter()
                .filter(|o| !t.source.objects.contains(o))
                .collect();
            assert_eq!(added.len(), 1);
            let ext = extent(added[0]);
            for y in 0..IMAGE_SIZE {
                for x in 0..IMAGE_SIZE {
                    assert_eq!(t.edit_mask[[y, x]], ext.contains(y, x));
                }
            }
        }
    }

    #[test]
    fn renders_agree_outside_mask_for_all_kinds() {
        let (tasks, _) = make_edit_tasks(6, &EditKind::ALL, 48);
        assert!(tasks.len() >= 32);
        for t in &tasks {
            let src: Image<f64> = render(&t.source).unwrap();
            let dst: Image<f64> = render(&t.target).unwrap();
            for y in 0..IMAGE_SIZE {
                for x in 0..IMAGE_SIZE {
                    if !t.edit_mask[[y, x]] {
                        for c in 0..3 {
                            assert_eq!(src[[c, y, x]], dst[[c, y, x]], "pixel ({y},{x}) differs outside mask");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn impossible_kinds_are_skipped_with_reason() {
        // Remove-only over many attempts: empty scenes must appear and skip.
        let (tasks, skipped) = make_edit_tasks(7, &[EditKind::Remove], 64);
        assert!(!tasks.is_empty());
        assert!(!skipped.is_empty());
        assert!(skipped[0].reason.contains("remove"));
    }
}
