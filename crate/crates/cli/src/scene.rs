//! Scene files: either explicit hyperballs around a vertex, or a named example.

use std::path::Path;

use hypertess::decompose::{octahedron_example, regular_tt_input, LocalCellInput};
use hypertess::hyperball::{Hyperball, PackingConfig};
use hypertess::volume::r_for_p;
use hypertess::{classify, HVec4, Plane, PointClass};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperballs: Option<Vec<BallSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleSpec>,
    /// Overrides the common height of a named example.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub pole: [f64; 4],
    pub height: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExampleSpec {
    #[serde(rename = "octahedron")]
    Octahedron { c: f64 },
    #[serde(rename = "regular-tt")]
    RegularTt {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<u32>,
    },
}

pub fn read_scene(path: &Path) -> Result<SceneFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scene(&text).map_err(|message| CliError::Parse {
        path: path.display().to_string(),
        message,
    })
}

pub fn parse_scene(text: &str) -> Result<SceneFile, String> {
    let scene: SceneFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if scene.version != VERSION {
        return Err(format!("unsupported version {}", scene.version));
    }
    Ok(scene)
}

impl SceneFile {
    /// The hyperballs and vertex described by the scene, checked for well-formedness but not
    /// for admissibility.
    pub fn to_input(&self) -> Result<LocalCellInput, CliError> {
        let invalid = CliError::InvalidScene;
        match (&self.hyperballs, &self.example) {
            (Some(balls), None) => {
                if self.h.is_some() {
                    return Err(invalid("\"h\" only applies to named examples".into()));
                }
                let vertex = self
                    .vertex
                    .ok_or_else(|| invalid("missing \"vertex\"".into()))?;
                let vertex = HVec4::from_array(vertex);
                if classify(&vertex) != PointClass::Proper {
                    return Err(invalid("vertex is not a proper point".into()));
                }
                let mut hs = Vec::with_capacity(balls.len());
                let mut labels = Vec::with_capacity(balls.len());
                for (i, b) in balls.iter().enumerate() {
                    let pole = HVec4::from_array(b.pole);
                    if classify(&pole) != PointClass::Outer {
                        return Err(invalid(format!(
                            "pole of hyperball {i} is not an outer point"
                        )));
                    }
                    let plane = Plane::from_pole(pole)
                        .map_err(|e| invalid(format!("hyperball {i}: {e}")))?;
                    hs.push(
                        Hyperball::new(plane, b.height)
                            .map_err(|e| invalid(format!("hyperball {i}: {e}")))?,
                    );
                    labels.push(b.label.clone().unwrap_or_else(|| format!("b{i}")));
                }
                let balls =
                    PackingConfig::with_labels(hs, labels).map_err(|e| invalid(e.to_string()))?;
                Ok(LocalCellInput { vertex, balls })
            }
            (None, Some(example)) => {
                if self.vertex.is_some() {
                    return Err(invalid("\"vertex\" is fixed by named examples".into()));
                }
                let mut input = match example {
                    ExampleSpec::Octahedron { c } => octahedron_example(*c)?.0,
                    ExampleSpec::RegularTt {
                        r: Some(r),
                        p: None,
                    } => regular_tt_input(*r)?,
                    ExampleSpec::RegularTt {
                        r: None,
                        p: Some(p),
                    } => regular_tt_input(r_for_p(*p)?)?,
                    ExampleSpec::RegularTt { .. } => {
                        return Err(invalid(
                            "regular-tt needs exactly one of \"r\", \"p\"".into(),
                        ))
                    }
                };
                if let Some(h) = self.h {
                    for b in &mut input.balls.balls {
                        *b = Hyperball::new(b.base, h).map_err(|e| invalid(e.to_string()))?;
                    }
                }
                Ok(input)
            }
            _ => Err(invalid(
                "a scene needs exactly one of \"hyperballs\" or \"example\"".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_scene() {
        let s = parse_scene(
            r#"{"version": 1, "vertex": [1, 0, 0, 0],
                "hyperballs": [{"pole": [1, 1.2, 0, 0], "height": 0.3, "label": "east"},
                               {"pole": [1, -1.2, 0, 0], "height": 0.3}]}"#,
        )
        .unwrap();
        let input = s.to_input().unwrap();
        assert_eq!(
            input.balls.labels,
            vec!["east".to_string(), "b1".to_string()]
        );
    }

    #[test]
    fn rejected_scenes() {
        assert!(parse_scene("{").is_err());
        assert!(parse_scene(r#"{"version": 2, "example": {"octahedron": {"c": 1.2}}}"#).is_err());
        assert!(parse_scene(r#"{"version": 1, "bogus": 3}"#).is_err());
        let both = parse_scene(
            r#"{"version": 1, "vertex": [1,0,0,0], "hyperballs": [], "example": {"octahedron": {"c": 1.2}}}"#,
        )
        .unwrap();
        assert!(matches!(both.to_input(), Err(CliError::InvalidScene(_))));
        let proper_pole = parse_scene(r#"{"version": 1, "vertex": [1,0,0,0], "hyperballs": [{"pole": [1, 0.5, 0, 0], "height": 0.1}]}"#).unwrap();
        assert!(matches!(
            proper_pole.to_input(),
            Err(CliError::InvalidScene(_))
        ));
        let wide = parse_scene(r#"{"version": 1, "example": {"octahedron": {"c": 2.0}}}"#).unwrap();
        assert!(matches!(wide.to_input(), Err(CliError::InvalidScene(_))));
    }

    #[test]
    fn named_examples() {
        let s = parse_scene(r#"{"version": 1, "example": {"regular-tt": {"p": 7}}}"#).unwrap();
        assert_eq!(s.to_input().unwrap().balls.balls.len(), 4);
        let s = parse_scene(r#"{"version": 1, "example": {"octahedron": {"c": 1.2}}, "h": 0.5}"#)
            .unwrap();
        assert_eq!(s.to_input().unwrap().balls.height(), Some(0.5));
    }
}
