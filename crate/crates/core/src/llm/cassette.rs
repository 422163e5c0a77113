use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatMessage, GatewayError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteMetadata {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub fingerprint: String,
    pub response: String,
}

/// Ordered record of request fingerprints and replies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cassette {
    pub metadata: CassetteMetadata,
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn new(metadata: CassetteMetadata) -> Self {
        Cassette {
            metadata,
            entries: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(GatewayError::CassetteMissing(path.display().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::CassetteInvalid(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("cassette serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// SHA-256 over the canonical JSON of the full message list, hex encoded.
pub fn fingerprint(messages: &[ChatMessage]) -> String {
    let canonical = serde_json::to_vec(messages).expect("messages serialize");
    hex::encode(Sha256::digest(&canonical))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_depends_on_role_content_and_order() {
        let a = [ChatMessage::user("hi"), ChatMessage::assistant("yo")];
        let b = [ChatMessage::assistant("hi"), ChatMessage::assistant("yo")];
        let c = [ChatMessage::assistant("yo"), ChatMessage::user("hi")];
        assert_eq!(fingerprint(&a), fingerprint(&a.clone()));
        assert_ne!(fingerprint(&a), fingerprint(&b));
        assert_ne!(fingerprint(&a), fingerprint(&c));
        assert_eq!(fingerprint(&a).len(), 64);
    }

    #[test]
    fn missing_file_is_cassette_missing() {
        let err = Cassette::load(Path::new("/definitely/not/here.json")).unwrap_err();
        assert_eq!(err.code(), "CassetteMissing");
    }

    #[test]
    fn json_shape_matches_file_format() {
        let mut c = Cassette::new(CassetteMetadata {
            model: "m".into(),
            temperature: None,
        });
        c.entries.push(CassetteEntry {
            fingerprint: "ab".into(),
            response: "r".into(),
        });
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["metadata"]["model"], "m");
        assert!(v["metadata"].get("temperature").is_none());
        assert_eq!(v["entries"][0]["fingerprint"], "ab");
        assert_eq!(v["entries"][0]["response"], "r");
    }
}
