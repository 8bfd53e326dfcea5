use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ValidationError;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Platform {
    Github,
    Gitlab,
    OtherHost,
}

impl Platform {
    pub const ALL: [Platform; 3] = [Platform::Github, Platform::Gitlab, Platform::OtherHost];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Github => "github",
            Platform::Gitlab => "gitlab",
            Platform::OtherHost => "other-host",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Platform::ALL
            .into_iter()
            .find(|p| p.as_str() == lower)
            .ok_or_else(|| ValidationError::UnknownPlatform(s.to_string()))
    }
}

/// Canonical identity of one project on one code host.
///
/// Owner and name are stored lowercased so that `canonical_id` is a pure
/// function of the other fields and parsing it reproduces the value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawProjectRef")]
pub struct ProjectRef {
    platform: Platform,
    owner: String,
    name: String,
    canonical_id: String,
}

#[derive(Deserialize)]
struct RawProjectRef {
    platform: Platform,
    owner: String,
    name: String,
    canonical_id: Option<String>,
}

impl TryFrom<RawProjectRef> for ProjectRef {
    type Error = ValidationError;

    fn try_from(raw: RawProjectRef) -> Result<Self, Self::Error> {
        let r = canonicalize(raw.platform, &raw.owner, &raw.name)?;
        if let Some(given) = raw.canonical_id {
            if given != r.canonical_id {
                return Err(ValidationError::invalid(
                    "canonical_id",
                    format!("`{given}` does not match `{}`", r.canonical_id),
                ));
            }
        }
        Ok(r)
    }
}

fn check_component(field: &'static str, value: &str) -> Result<String, ValidationError> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(ValidationError::Empty { field });
    }
    if let Some(ch) = trimmed
        .chars()
        .find(|c| *c == '/' || *c == ':' || c.is_whitespace())
    {
        return Err(ValidationError::ForbiddenChar { field, ch });
    }
    Ok(trimmed.to_lowercase())
}

/// Builds the canonical reference `<platform>:<owner>/<name>`, all lowercase.
pub fn canonicalize(platform: Platform, owner: &str, name: &str) -> Result<ProjectRef, ValidationError> {
    let owner = check_component("owner", owner)?;
    let name = check_component("name", name)?;
    let canonical_id = format!("{platform}:{owner}/{name}");
    Ok(ProjectRef {
        platform,
        owner,
        name,
        canonical_id,
    })
}

impl ProjectRef {
    pub fn parse(id: &str) -> Result<Self, ValidationError> {
        let malformed = || ValidationError::MalformedId(id.to_string());
        let (platform, rest) = id.split_once(':').ok_or_else(malformed)?;
        let (owner, name) = rest.split_once('/').ok_or_else(malformed)?;
        let platform: Platform = platform.parse()?;
        canonicalize(platform, owner, name)
    }

    pub fn platform(&self) -> Platform {
        self.platform
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn canonical_id(&self) -> &str {
        &self.canonical_id
    }
}

impl fmt::Display for ProjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_id)
    }
}

impl FromStr for ProjectRef {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProjectRef::parse(s)
    }
}

/// Descriptive metadata of one project as seen by a collector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    #[serde(rename = "ref")]
    pub project: ProjectRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homepage: Option<String>,
    pub created_at: Timestamp,
    pub fetched_at: Timestamp,
    #[serde(default)]
    pub topics: Vec<String>,
}

impl ProjectRecord {
    pub fn canonical_id(&self) -> &str {
        self.project.canonical_id()
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if let Some(license) = &self.license {
            if license.trim().is_empty() {
                return Err(ValidationError::Empty { field: "license" });
            }
        }
        if let Some(homepage) = &self.homepage {
            if !homepage.contains("://") {
                return Err(ValidationError::invalid("homepage", "not an absolute URI"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_everything() {
        let r = canonicalize(Platform::Github, "Octocat", "Hello-World").unwrap();
        assert_eq!(r.canonical_id(), "github:octocat/hello-world");
    }

    #[test]
    fn identity_shaped() {
        let r = canonicalize(Platform::Gitlab, "a", "b").unwrap();
        assert_eq!(r.canonical_id(), "gitlab:a/b");
    }

    #[test]
    fn empty_owner_rejected() {
        assert_eq!(
            canonicalize(Platform::Github, "", "x"),
            Err(ValidationError::Empty { field: "owner" })
        );
        assert_eq!(
            canonicalize(Platform::Github, "   ", "x"),
            Err(ValidationError::Empty { field: "owner" })
        );
    }

    #[test]
    fn forbidden_characters() {
        assert!(canonicalize(Platform::Github, "a/b", "x").is_err());
        assert!(canonicalize(Platform::Github, "a", "x:y").is_err());
        assert!(canonicalize(Platform::Github, "a b", "x").is_err());
    }

    #[test]
    fn parse_rejects_bad_shapes() {
        for bad in ["nonsense", "github:demo", "svn:a/b", "github:/x", "github:a/"] {
            assert!(ProjectRef::parse(bad).is_err(), "{bad}");
        }
        assert_eq!(
            ProjectRef::parse("other-host:demo/epsilon").unwrap().platform(),
            Platform::OtherHost
        );
    }

    #[test]
    fn serde_checks_canonical_id() {
        let ok = r#"{"platform":"github","owner":"Demo","name":"alpha","canonical_id":"github:demo/alpha"}"#;
        let r: ProjectRef = serde_json::from_str(ok).unwrap();
        assert_eq!(r.owner(), "demo");
        let bad = r#"{"platform":"github","owner":"demo","name":"alpha","canonical_id":"github:demo/beta"}"#;
        assert!(serde_json::from_str::<ProjectRef>(bad).is_err());
    }

    proptest! {
        #[test]
        fn canonical_id_round_trips(
            p in 0usize..3,
            owner in "[A-Za-z0-9][A-Za-z0-9._-]{0,20}",
            name in "[A-Za-z0-9][A-Za-z0-9._-]{0,20}",
        ) {
            let r = canonicalize(Platform::ALL[p], &owner, &name).unwrap();
            let parsed = ProjectRef::parse(r.canonical_id()).unwrap();
            prop_assert_eq!(&parsed, &r);
            prop_assert_eq!(parsed.canonical_id(), r.canonical_id().to_lowercase());
        }
    }
}
