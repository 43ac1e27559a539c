//! Token vocabulary and the bijection between canonical scenes and prompts.
//!
//! A prompt is a fixed-length sequence of 8 token ids: one background token,
//! then one (shape+size, color, cell) triple per object in cell order, padded
//! with PAD. Folding size into the shape token keeps two-object scenes within
//! the 8-token budget. Token 1 (NULL) marks the unconditional prompt used for
//! classifier-free guidance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{Cell, Color, ObjectSpec, SceneSpec, Shape, Size};

pub const PROMPT_LEN: usize = 8;

pub const PAD_TOKEN: u16 = 0;
pub const NULL_TOKEN: u16 = 1;
const BG_BASE: u16 = 2; // 5 tokens
const SHAPE_SIZE_BASE: u16 = 7; // 6 tokens (shape-major, size-minor)
const COLOR_BASE: u16 = 13; // 5 tokens
const CELL_BASE: u16 = 18; // 9 tokens
pub const VOCAB_SIZE: usize = 27;

/// Fixed-length token sequence conditioning the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptTokens(pub [u16; PROMPT_LEN]);

impl PromptTokens {
    pub fn ids(&self) -> &[u16; PROMPT_LEN] {
        &self.0
    }

    /// The unconditional (null) prompt.
    pub fn null() -> PromptTokens {
        let mut t = [PAD_TOKEN; PROMPT_LEN];
        t[0] = NULL_TOKEN;
        PromptTokens(t)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("token id {0} outside vocabulary (size {VOCAB_SIZE})")]
    UnknownToken(u16),
    #[error("expected a background token first, found id {0}")]
    MissingBackground(u16),
    #[error("truncated object triple at position {0}")]
    TruncatedObject(usize),
    #[error("unexpected token id {1} at position {0}")]
    UnexpectedToken(usize, u16),
    #[error("more than two objects encoded")]
    TooManyObjects,
    #[error("objects not in canonical cell order, or duplicate cell")]
    NonCanonical,
    #[error("trailing non-PAD token at position {0}")]
    TrailingGarbage(usize),
}

fn shape_size_token(shape: Shape, size: Size) -> u16 {
    SHAPE_SIZE_BASE + (shape.index() * Size::ALL.len() + size.index()) as u16
}

/// Serialize a scene to tokens, canonicalizing object order first.
pub fn prompt_of(spec: &SceneSpec) -> PromptTokens {
    let mut canonical = spec.clone();
    canonical.canonicalize();
    let mut t = [PAD_TOKEN; PROMPT_LEN];
    t[0] = BG_BASE + canonical.background.index() as u16;
    let mut pos = 1;
    for obj in &canonical.objects {
        t[pos] = shape_size_token(obj.shape, obj.size);
        t[pos + 1] = COLOR_BASE + obj.color.index() as u16;
        t[pos + 2] = CELL_BASE + obj.cell.0 as u16;
        pos += 3;
    }
    PromptTokens(t)
}

/// Decode tokens back to the canonical scene they encode. Strict: only exact
/// images of [`prompt_of`] are accepted, keeping the mapping bijective.
pub fn spec_of(prompt: &PromptTokens) -> Result<SceneSpec, PromptError> {
    let t = prompt.ids();
    for &id in t.iter() {
        if id as usize >= VOCAB_SIZE {
            return Err(PromptError::UnknownToken(id));
        }
    }
    if !(BG_BASE..BG_BASE + 5).contains(&t[0]) {
        return Err(PromptError::MissingBackground(t[0]));
    }
    let background = Color::from_index((t[0] - BG_BASE) as usize).unwrap();
    let mut objects = Vec::new();
    let mut pos = 1;
    while pos < PROMPT_LEN && t[pos] != PAD_TOKEN {
        if objects.len() == 2 {
            return Err(PromptError::TooManyObjects);
        }
        if pos + 2 >= PROMPT_LEN {
            return Err(PromptError::TruncatedObject(pos));
        }
        let ss = t[pos];
        if !(SHAPE_SIZE_BASE..SHAPE_SIZE_BASE + 6).contains(&ss) {
            return Err(PromptError::UnexpectedToken(pos, ss));
        }
        let combo = (ss - SHAPE_SIZE_BASE) as usize;
        let shape = Shape::from_index(combo / Size::ALL.len()).unwrap();
        let size = Size::from_index(combo % Size::ALL.len()).unwrap();
        let col = t[pos + 1];
        if !(COLOR_BASE..COLOR_BASE + 5).contains(&col) {
            return Err(PromptError::UnexpectedToken(pos + 1, col));
        }
        let color = Color::from_index((col - COLOR_BASE) as usize).unwrap();
        let cell_tok = t[pos + 2];
        if !(CELL_BASE..CELL_BASE + 9).contains(&cell_tok) {
            return Err(PromptError::UnexpectedToken(pos + 2, cell_tok));
        }
        let cell = Cell::new((cell_tok - CELL_BASE) as u8).unwrap();
        objects.push(ObjectSpec { shape, color, cell, size });
        pos += 3;
    }
    for (i, &id) in t.iter().enumerate().skip(pos) {
        if id != PAD_TOKEN {
            return Err(PromptError::TrailingGarbage(i));
        }
    }
    let spec = SceneSpec { background, objects };
    if !spec.is_canonical() {
        return Err(PromptError::NonCanonical);
    }
    Ok(spec)
}
