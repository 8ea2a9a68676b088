use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

fn check_token(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Validation(format!("empty {kind}")));
    }
    if s.contains(',') || s.chars().any(char::is_whitespace) {
        return Err(Error::Validation(format!(
            "{kind} `{s}` contains a comma or whitespace"
        )));
    }
    Ok(())
}

macro_rules! token_id {
    ($(#[$meta:meta])* $name:ident, $kind:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Result<Self> {
                let value = value.into();
                check_token($kind, &value)?;
                Ok(Self(value))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

token_id!(
    /// Identity token: non-empty, no commas, no whitespace.
    SubjectId,
    "subject id"
);
token_id!(
    /// Image token. Its owning subject comes from the image map.
    ImageId,
    "image id"
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TwinKind {
    Identical,
    IdenticalMirror,
    Fraternal,
}

impl TwinKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TwinKind::Identical => "identical",
            TwinKind::IdenticalMirror => "identical_mirror",
            TwinKind::Fraternal => "fraternal",
        }
    }

    /// Monozygotic kinds (identical and mirror-identical).
    pub fn is_identical(self) -> bool {
        matches!(self, TwinKind::Identical | TwinKind::IdenticalMirror)
    }
}

impl FromStr for TwinKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identical" => Ok(TwinKind::Identical),
            "identical_mirror" => Ok(TwinKind::IdenticalMirror),
            "fraternal" => Ok(TwinKind::Fraternal),
            other => Err(Error::Validation(format!("unknown twin kind `{other}`"))),
        }
    }
}

/// Relationship between the subjects of two images.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PairClass {
    SameSubject,
    IdenticalTwin,
    IdenticalMirrorTwin,
    FraternalTwin,
    Family(String),
    NoRelation,
    Unknown,
}

impl PairClass {
    pub fn from_twin(kind: TwinKind) -> Self {
        match kind {
            TwinKind::Identical => PairClass::IdenticalTwin,
            TwinKind::IdenticalMirror => PairClass::IdenticalMirrorTwin,
            TwinKind::Fraternal => PairClass::FraternalTwin,
        }
    }

    pub fn is_mated(&self) -> bool {
        matches!(self, PairClass::SameSubject)
    }

    pub fn is_twin(&self) -> bool {
        matches!(
            self,
            PairClass::IdenticalTwin | PairClass::IdenticalMirrorTwin | PairClass::FraternalTwin
        )
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairClass::SameSubject => f.write_str("same_subject"),
            PairClass::IdenticalTwin => f.write_str("identical_twin"),
            PairClass::IdenticalMirrorTwin => f.write_str("identical_mirror_twin"),
            PairClass::FraternalTwin => f.write_str("fraternal_twin"),
            PairClass::Family(kind) => write!(f, "family:{kind}"),
            PairClass::NoRelation => f.write_str("no_relation"),
            PairClass::Unknown => f.write_str("unknown"),
        }
    }
}

impl FromStr for PairClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "same_subject" => PairClass::SameSubject,
            "identical_twin" => PairClass::IdenticalTwin,
            "identical_mirror_twin" => PairClass::IdenticalMirrorTwin,
            "fraternal_twin" => PairClass::FraternalTwin,
            "no_relation" => PairClass::NoRelation,
            "unknown" => PairClass::Unknown,
            other => match other.strip_prefix("family:") {
                Some(kind) if !kind.is_empty() => PairClass::Family(kind.to_string()),
                _ => return Err(Error::Validation(format!("unknown pair class `{other}`"))),
            },
        })
    }
}
