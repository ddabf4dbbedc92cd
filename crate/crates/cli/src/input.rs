//! Versioned input documents.

use std::path::Path;

use garland_core::atlas::Window;
use garland_core::maps::TwistKickMap;
use garland_core::{FlowParams, TruncatedSeries};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: &str = "garland-kit/1";

/// One document format for every subcommand; each subcommand states which
/// fields it reads and rejects the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<TruncatedSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist_kick: Option<TwistKickMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "opt_complex_vec"
    )]
    pub initial: Option<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_random: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

mod opt_complex_vec {
    use garland_core::json::ComplexObj;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Complex64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|v| v.iter().copied().map(ComplexObj::from).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Complex64>>, D::Error> {
        let v = Option::<Vec<ComplexObj>>::deserialize(d)?;
        Ok(v.map(|v| v.into_iter().map(Into::into).collect()))
    }
}

impl Document {
    pub fn empty() -> Self {
        Self {
            schema: SCHEMA.into(),
            ..Self::default()
        }
    }

    /// Names of the optional fields that are present.
    pub fn present_fields(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        let mut note = |set: bool, name| {
            if set {
                f.push(name)
            }
        };
        note(self.p.is_some(), "p");
        note(self.q.is_some(), "q");
        note(self.symmetric.is_some(), "symmetric");
        note(self.map.is_some(), "map");
        note(self.twist_kick.is_some(), "twist_kick");
        note(self.flow.is_some(), "flow");
        note(self.window.is_some(), "window");
        note(self.resolution.is_some(), "resolution");
        note(self.period.is_some(), "period");
        note(self.radius.is_some(), "radius");
        note(self.initial.is_some(), "initial");
        note(self.n_random.is_some(), "n_random");
        note(self.t_end.is_some(), "t_end");
        note(self.dt.is_some(), "dt");
        f
    }
}

/// Parses `text`, reporting the JSON path of the first offending field.
pub fn parse(text: &str) -> Result<Document, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Schema(format!("at `{path}`: {}", e.inner()))
    })?;
    if doc.schema != SCHEMA {
        return Err(CliError::Schema(format!(
            "at `schema`: expected \"{SCHEMA}\", found \"{}\"",
            doc.schema
        )));
    }
    Ok(doc)
}

pub fn read(path: &Path) -> Result<(Document, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((parse(&text)?, text))
}
