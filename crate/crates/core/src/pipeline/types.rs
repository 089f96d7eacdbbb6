use serde::{Deserialize, Serialize};

use crate::mock::MockScene;

/// An input image. Real backends resolve `uri_or_path`; mock backends read
/// the attached scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRef {
    pub id: String,
    pub uri_or_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<MockScene>,
}

impl ImageRef {
    pub fn new(id: impl Into<String>, uri_or_path: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            uri_or_path: uri_or_path.into(),
            scene: None,
        }
    }

    pub fn with_scene(mut self, scene: MockScene) -> Self {
        self.scene = Some(scene);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptionSource {
    Baseline,
    Mitigated,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub text: String,
    /// Whitespace-token count of `text`.
    pub word_count: usize,
    pub source: CaptionSource,
}

impl Caption {
    pub fn new(text: impl Into<String>, source: CaptionSource) -> Self {
        let text = text.into();
        let word_count = text.split_whitespace().count();
        Self {
            text,
            word_count,
            source,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.word_count == 0
    }
}

/// Static facts about the captioning model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Number of decoder layers `L`.
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Number of projected image tokens per image.
    pub image_token_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_count_is_whitespace_tokens() {
        let c = Caption::new("  The image shows\ta dog. ", CaptionSource::Baseline);
        assert_eq!(c.word_count, 5);
        assert!(Caption::new("   ", CaptionSource::External).is_empty());
    }
}
