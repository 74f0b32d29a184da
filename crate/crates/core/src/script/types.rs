use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Fg,
    Bg,
}

impl Layer {
    pub fn name(self) -> &'static str {
        match self {
            Layer::Fg => "fg",
            Layer::Bg => "bg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoleyEvent {
    pub id: u32,
    pub description: String,
    pub layer: Layer,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_hint: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_hint: Option<f64>,
}

impl FoleyEvent {
    pub fn new(id: u32, description: impl Into<String>, layer: Layer, start_s: f64, end_s: f64) -> Self {
        Self {
            id,
            description: description.into(),
            layer,
            start_s,
            end_s,
            azimuth_hint: None,
            depth_hint: None,
        }
    }

    pub fn overlaps(&self, other: &FoleyEvent) -> bool {
        self.start_s < other.end_s && other.start_s < self.end_s
    }
}

/// Ordered sound events with layer assignments and an overall tone tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoleyScript {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub events: Vec<FoleyEvent>,
    #[serde(default)]
    pub scene_tone: String,
}

impl FoleyScript {
    pub fn new(events: Vec<FoleyEvent>, scene_tone: impl Into<String>) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            events,
            scene_tone: scene_tone.into(),
        }
    }

    /// Checks unique ids and well-formed spans, optionally bounded by the
    /// clip duration.
    pub fn validate(&self, duration_s: Option<f64>) -> Result<()> {
        let mut ids = HashSet::new();
        for e in &self.events {
            if !ids.insert(e.id) {
                return Err(Error::validation(format!("duplicate event id {}", e.id)));
            }
            if !(e.start_s >= 0.0 && e.end_s > e.start_s) {
                return Err(Error::validation(format!(
                    "event {} has an empty or negative span",
                    e.id
                )));
            }
            if let Some(d) = duration_s {
                if e.end_s > d + 1e-9 {
                    return Err(Error::validation(format!(
                        "event {} ends at {} s past the clip end {d} s",
                        e.id, e.end_s
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn event(&self, id: u32) -> Option<&FoleyEvent> {
        self.events.iter().find(|e| e.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let ok = FoleyScript::new(
            vec![
                FoleyEvent::new(0, "door slam", Layer::Fg, 0.5, 1.0),
                FoleyEvent::new(1, "rain", Layer::Bg, 0.0, 4.0),
            ],
            "tense",
        );
        ok.validate(Some(4.0)).unwrap();
        assert!(ok.validate(Some(3.0)).is_err());
        let mut dup = ok.clone();
        dup.events[1].id = 0;
        assert!(dup.validate(None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = FoleyScript::new(vec![FoleyEvent::new(3, "steps", Layer::Bg, 0.0, 1.0)], "calm");
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"layer\":\"bg\""));
        assert_eq!(serde_json::from_str::<FoleyScript>(&text).unwrap(), s);
        assert!(serde_json::from_str::<FoleyScript>(
            r#"{"events":[{"id":1,"description":"x","layer":"mid","start_s":0,"end_s":1}]}"#
        )
        .is_err());
    }
}
