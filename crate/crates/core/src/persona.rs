//! The six activity × mood social-media profiles.

use alloc::format;
use alloc::string::{String, ToString};

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Activity {
    Active,
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mood {
    Calm,
    Joyful,
    Sad,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub activity: Activity,
    pub mood: Mood,
    pub description: String,
}

impl Persona {
    pub const ALL_PROFILES: [(Activity, Mood); 6] = [
        (Activity::Active, Mood::Calm),
        (Activity::Active, Mood::Joyful),
        (Activity::Active, Mood::Sad),
        (Activity::Inactive, Mood::Calm),
        (Activity::Inactive, Mood::Joyful),
        (Activity::Inactive, Mood::Sad),
    ];

    pub fn builtin(activity: Activity, mood: Mood) -> Persona {
        use Activity::*;
        use Mood::*;
        let (name, description) = match (activity, mood) {
            (Active, Calm) => (
                "Avery",
                "Engages daily with bookmarks, shares and measured comments; follows trends without getting emotional.",
            ),
            (Active, Joyful) => (
                "Jordan",
                "Upbeat and chatty; likes, comments and shares fun moments with friends all the time.",
            ),
            (Active, Sad) => (
                "Riley",
                "Posts often, shares personal worries and looks for people who feel the same way.",
            ),
            (Inactive, Calm) => (
                "Morgan",
                "Rarely posts; reads quietly and treats the platform as an information source.",
            ),
            (Inactive, Joyful) => (
                "Casey",
                "Cheerful but seldom active; scrolls light content now and then and stays out of arguments.",
            ),
            (Inactive, Sad) => (
                "Quinn",
                "Withdrawn; mostly scrolls in silence and keeps feelings offline.",
            ),
        };
        Persona {
            name: name.to_string(),
            activity,
            mood,
            description: description.to_string(),
        }
    }

    pub fn all_builtin() -> impl Iterator<Item = Persona> {
        Self::ALL_PROFILES
            .into_iter()
            .map(|(a, m)| Persona::builtin(a, m))
    }

    /// Profile label such as `"Active + Calm"`.
    pub fn profile(&self) -> String {
        format!("{} + {}", self.activity, self.mood)
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activity::Active => "Active",
            Activity::Inactive => "Inactive",
        })
    }
}

impl fmt::Display for Mood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mood::Calm => "Calm",
            Mood::Joyful => "Joyful",
            Mood::Sad => "Sad",
        })
    }
}

/// Parses `"Active+Calm"`, `"active-calm"`, `"Inactive + Sad"` and similar.
/// `Happy` is accepted as an alias for `Joyful`.
impl FromStr for Persona {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let lower = s.to_ascii_lowercase();
        let mut parts = lower
            .split(|c: char| c == '+' || c == '-' || c == '_' || c.is_whitespace())
            .filter(|p| !p.is_empty());
        let activity = match parts.next() {
            Some("active") => Activity::Active,
            Some("inactive") => Activity::Inactive,
            _ => return Err(Error::UnknownProfile(s.to_string())),
        };
        let mood = match parts.next() {
            Some("calm") => Mood::Calm,
            Some("joyful") | Some("happy") => Mood::Joyful,
            Some("sad") => Mood::Sad,
            _ => return Err(Error::UnknownProfile(s.to_string())),
        };
        if parts.next().is_some() {
            return Err(Error::UnknownProfile(s.to_string()));
        }
        Ok(Persona::builtin(activity, mood))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_profiles() {
        let p: Persona = "Active + Calm".parse().unwrap();
        assert_eq!((p.activity, p.mood), (Activity::Active, Mood::Calm));
        let p: Persona = "inactive-happy".parse().unwrap();
        assert_eq!((p.activity, p.mood), (Activity::Inactive, Mood::Joyful));
        assert!("bored".parse::<Persona>().is_err());
        assert!("active calm extra".parse::<Persona>().is_err());
    }

    #[test]
    fn six_distinct_profiles() {
        let all: alloc::vec::Vec<_> = Persona::all_builtin().map(|p| p.profile()).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[5], "Inactive + Sad");
        for p in Persona::all_builtin() {
            assert_eq!(p.profile().parse::<Persona>().unwrap(), p);
        }
    }
}
