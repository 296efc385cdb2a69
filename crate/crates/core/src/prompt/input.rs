use std::io::Cursor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DataSummary;
use crate::spec::Specification;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("input needs an utterance, a sketch or a selection")]
    Empty,
    #[error("sketch has zero width or height")]
    EmptySketch,
    #[error("sketch is not a readable PNG or JPEG image: {0}")]
    UnreadableSketch(String),
    #[error("history is not in time order at turn {0}")]
    HistoryOrder(usize),
}

/// Encoded raster of the canvas region the user sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sketch {
    #[serde(with = "crate::api::base64_bytes")]
    pub bytes: Vec<u8>,
    pub width: u32,
    pub height: u32,
    pub media_type: String,
}

impl Sketch {
    /// Reads dimensions and media type from the encoded image header.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Sketch, InputError> {
        let reader = image::ImageReader::new(Cursor::new(&bytes))
            .with_guessed_format()
            .map_err(|e| InputError::UnreadableSketch(e.to_string()))?;
        let format = reader.format().ok_or_else(|| InputError::UnreadableSketch("unknown format".into()))?;
        let media_type = format.to_mime_type().to_string();
        let (width, height) = reader.into_dimensions().map_err(|e| InputError::UnreadableSketch(e.to_string()))?;
        let sketch = Sketch { bytes, width, height, media_type };
        sketch.check()?;
        Ok(sketch)
    }

    pub fn check(&self) -> Result<(), InputError> {
        if self.width == 0 || self.height == 0 {
            return Err(InputError::EmptySketch);
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        crate::digest::sha256_hex(&self.bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

/// One selected canvas element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionItem {
    pub element_id: String,
    pub bbox: BoundingBox,
    /// Element kind (`stroke`, `axis`, `legend`, ...), free text from the UI.
    pub kind: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryTurn {
    pub role: Role,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_digest: Option<String>,
    /// Position in the session, starting at 1.
    pub turn: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MultimodalInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch: Option<Sketch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<SelectionItem>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DataSummary>,
    #[serde(default)]
    pub history: Vec<HistoryTurn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_spec: Option<Specification>,
}

impl MultimodalInput {
    pub fn text(utterance: impl Into<String>) -> Self {
        MultimodalInput { utterance: Some(utterance.into()), ..Default::default() }
    }

    pub fn check(&self) -> Result<(), InputError> {
        let has_text = self.utterance.as_deref().is_some_and(|u| !u.trim().is_empty());
        let has_selection = self.selection.as_ref().is_some_and(|s| !s.is_empty());
        if !has_text && self.sketch.is_none() && !has_selection {
            return Err(InputError::Empty);
        }
        if let Some(sketch) = &self.sketch {
            sketch.check()?;
        }
        for (i, pair) in self.history.windows(2).enumerate() {
            if pair[1].turn < pair[0].turn {
                return Err(InputError::HistoryOrder(i + 1));
            }
        }
        Ok(())
    }

    /// `text`, `visual` or `mixed`, by which input channels are present.
    pub fn modality(&self) -> Modality {
        let text = self.utterance.as_deref().is_some_and(|u| !u.trim().is_empty());
        let visual = self.sketch.is_some() || self.selection.as_ref().is_some_and(|s| !s.is_empty());
        match (text, visual) {
            (true, true) => Modality::Mixed,
            (false, true) => Modality::Visual,
            _ => Modality::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Visual,
    Mixed,
}
